use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("spectral parameter out of range: {0}")]
    OutOfRange(String),
    #[error("Picard iteration did not converge after {iterations} iterations (last update {update:e})")]
    NoConvergence { iterations: usize, update: f64 },
    #[error("grid error: {0}")]
    Grid(String),
    #[error("singular branch: {0}")]
    Singular(String),
    #[error("time integration blew up at t = {t} (norm ratio {ratio:e})")]
    BlowUp { t: f64, ratio: f64 },
    #[error("invalid data: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
