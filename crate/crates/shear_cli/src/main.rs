use clap::{Args, Parser, Subcommand};
use shear_spectral::harness::{compare, read_psi_csv, RunConfig, Runner, Suite};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Spectral and direct computations for the linearized Euler equations
/// around the shear flow u = tanh y.
#[derive(Parser, Debug)]
#[command(name = "shear", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML run configuration; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides `out_dir` of the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// seed for pseudo-random sample points
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// comma-separated wavenumbers, overriding `alpha_list`
    #[arg(long, global = true, value_delimiter = ',')]
    alpha: Option<Vec<u32>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the suites listed in the config
    Run,
    /// Tabulate φ₁ on the output grid at the sampled c
    Phi1,
    /// Tabulate A(c, α) and the boundary values W±
    Wronskian,
    /// Build the c-quadrature kernel tables
    Kernels,
    /// Evolve each mode spectrally and directly
    Evolve,
    /// Closed-form, limit and conservation checks
    Verify,
    /// Fit decay exponents
    Decay,
    /// Compare spectral and direct evolutions, or two psi CSV files
    Compare {
        /// first psi file (`t,y,psi_re,psi_im[,dpsi_re,dpsi_im]`)
        a: Option<PathBuf>,
        /// reference psi file
        b: Option<PathBuf>,
    },
}

fn load(g: &Global) -> Result<(RunConfig, PathBuf), String> {
    let (mut cfg, base) = match &g.config {
        Some(p) => (RunConfig::from_path(p).map_err(|e| e.to_string())?, p.parent().unwrap_or(Path::new(".")).to_path_buf()),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(a) = &g.alpha {
        cfg.alpha_list = a.clone();
    }
    cfg.validate().map_err(|e| format!("field `{}`: {}", e.field, e.message))?;
    Ok((cfg, base))
}

fn compare_files(a: &Path, b: &Path) -> Result<bool, String> {
    let (ga, sa) = read_psi_csv(a).map_err(|e| e.to_string())?;
    let (gb, sb) = read_psi_csv(b).map_err(|e| e.to_string())?;
    if ga != gb {
        return Err("the two files use different grids".into());
    }
    let rows = compare(&ga, &sa, &sb).map_err(|e| e.to_string())?;
    println!("t,rel_l2,linf,rel_h1");
    for r in rows {
        println!("{},{:.6e},{:.6e},{:.6e}", r.t, r.rel_l2, r.linf, r.rel_h1);
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool, String> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    let suite = match &cli.command {
        Command::Run => None,
        Command::Phi1 => Some(Suite::Phi1),
        Command::Wronskian => Some(Suite::Wronskian),
        Command::Kernels => Some(Suite::Kernels),
        Command::Evolve => Some(Suite::Evolve),
        Command::Verify => Some(Suite::Verify),
        Command::Decay => Some(Suite::Decay),
        Command::Compare { a: Some(a), b: Some(b) } => return compare_files(a, b),
        Command::Compare { a: Some(_), b: None } => return Err("compare needs two files or none".into()),
        Command::Compare { .. } => Some(Suite::Compare),
    };
    let (mut cfg, base) = load(&cli.global)?;
    if let Some(s) = suite {
        cfg.suites = vec![s];
    }
    let out = cli.global.out.clone().or_else(|| cfg.out_dir.as_ref().map(|o| base.join(o))).unwrap_or_else(|| "out".into());
    let report = Runner::new(cfg, &base, &out).and_then(Runner::run).map_err(|e| e.to_string())?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    for f in &report.fits {
        println!("fit {}: exponent {:.4} +/- {:.4} over [{}, {}]", f.quantity, f.exponent, f.half_width, f.window.0, f.window.1);
    }
    eprintln!("report: {}", out.join("report.json").display());
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
