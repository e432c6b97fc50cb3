//! Declarative run configuration (TOML) and its validation.

use crate::direct::UniformGrid;
use crate::evolution::{CGridOptions, DataSpec, Family, Term};
use crate::flow::{DEFAULT_C_O, DEFAULT_EPS0};
use crate::rayleigh::SolveOptions;
use crate::wronskian::FD_STEP;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Work a run can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Phi1,
    Wronskian,
    Kernels,
    Evolve,
    Verify,
    Decay,
    Compare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha_list: Vec<u32>,
    pub suites: Vec<Suite>,
    /// output times of `evolve` and `compare`
    pub times: Vec<f64>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub domain: DomainConfig,
    pub c_grid: CGridConfig,
    pub solver: SolverConfig,
    pub tolerances: Tolerances,
    pub data: DataConfig,
    pub evolve: EvolveConfig,
    pub decay: DecayConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha_list: vec![2],
            suites: vec![Suite::Wronskian, Suite::Evolve],
            times: vec![5.0],
            seed: 0,
            out_dir: None,
            domain: DomainConfig::default(),
            c_grid: CGridConfig::default(),
            solver: SolverConfig::default(),
            tolerances: Tolerances::default(),
            data: DataConfig::default(),
            evolve: EvolveConfig::default(),
            decay: DecayConfig::default(),
        }
    }
}

/// Output grid `y ∈ [−half_width, half_width]` with spacing `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub half_width: f64,
    pub h: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { half_width: 20.0, h: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CGridConfig {
    pub c_max: f64,
    pub c_inner: f64,
    pub n_gauss: usize,
    pub min_panels: usize,
    pub points_per_oscillation: f64,
    pub c_switch: f64,
    pub subdivide: usize,
    /// real `c` values tabulated by the `phi1`, `wronskian` and `kernels` suites
    pub samples: Vec<f64>,
}

impl Default for CGridConfig {
    fn default() -> Self {
        let o = CGridOptions::default();
        CGridConfig {
            c_max: o.c_max,
            c_inner: o.c_inner,
            n_gauss: o.n_gauss,
            min_panels: o.min_panels,
            points_per_oscillation: o.points_per_oscillation,
            c_switch: o.c_switch,
            subdivide: o.subdivide,
            samples: (0..19).map(|k| -0.9 + 0.1 * k as f64).map(|c: f64| (c * 10.0).round() / 10.0).collect(),
        }
    }
}

impl CGridConfig {
    pub fn options(&self) -> CGridOptions {
        CGridOptions {
            c_max: self.c_max,
            c_inner: self.c_inner,
            n_gauss: self.n_gauss,
            min_panels: self.min_panels,
            points_per_oscillation: self.points_per_oscillation,
            c_switch: self.c_switch,
            subdivide: self.subdivide,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eps0: f64,
    pub c_o: f64,
    pub h: Option<f64>,
    pub half_width: Option<f64>,
    pub n_gauss: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub refine_ratio: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolverConfig {
            eps0: DEFAULT_EPS0,
            c_o: DEFAULT_C_O,
            h: o.h,
            half_width: o.half_width,
            n_gauss: o.n_gauss,
            tol: o.tol,
            max_iter: o.max_iter,
            refine_ratio: o.refine_ratio,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            h: self.h,
            half_width: self.half_width,
            n_gauss: self.n_gauss,
            tol: self.tol,
            max_iter: self.max_iter,
            refine_ratio: self.refine_ratio,
        }
    }
}

/// Pass thresholds of the checks; report rows cite these keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub closed_form: f64,
    pub steadiness: f64,
    pub wronskian_limit: f64,
    pub a_zero: f64,
    pub a_slope: f64,
    pub t_gaussian: f64,
    pub dual_wronskian: f64,
    pub spectral_vs_direct: f64,
    pub l2_exponent: [f64; 2],
    pub h1_exponent: [f64; 2],
    pub mode_one_exponent: [f64; 2],
    pub mode_one_degradation: f64,
    pub mode_one_projection: f64,
    pub lap_pointwise: f64,
    pub lap_average: f64,
    pub s_growth: f64,
    pub conservation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            closed_form: 1e-8,
            steadiness: 1e-6,
            wronskian_limit: 1e-2,
            a_zero: 1e-6,
            a_slope: 1e-5,
            t_gaussian: 1e-6,
            dual_wronskian: 1e-6,
            spectral_vs_direct: 1e-3,
            l2_exponent: [-2.2, -1.8],
            h1_exponent: [-1.2, -0.8],
            mode_one_exponent: [-1.25, -0.75],
            mode_one_degradation: 0.3,
            mode_one_projection: 5e-2,
            lap_pointwise: 1e-2,
            lap_average: 2e-2,
            s_growth: 2.0,
            conservation: 1e-6,
        }
    }
}

/// Initial data: one named family, a list of weighted families, or a CSV
/// file with columns `y,re[,im]` (path relative to the config file).
/// With none of them set the data is the gaussian.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub family: Option<Family>,
    pub terms: Vec<Term>,
    pub file: Option<PathBuf>,
}

impl DataConfig {
    pub fn spec(&self, base: &Path) -> Result<DataSpec> {
        if let Some(f) = self.family {
            return Ok(DataSpec::family(f));
        }
        if !self.terms.is_empty() {
            return Ok(DataSpec::Families(self.terms.clone()));
        }
        match &self.file {
            Some(path) => read_sampled(&base.join(path)),
            None => Ok(DataSpec::family(Family::Gaussian)),
        }
    }
}

/// Reads `y,re[,im]` rows; a header row is optional.
pub fn read_sampled(path: &Path) -> Result<DataSpec> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (mut ys, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = match vals {
            Ok(v) => v,
            Err(_) if k == 0 => continue,
            Err(e) => return Err(Error::Data(format!("{} row {}: {e}", path.display(), k + 1))),
        };
        if vals.len() < 2 || vals.len() > 3 {
            return Err(Error::Data(format!("{} row {}: expected y,re[,im]", path.display(), k + 1)));
        }
        ys.push(vals[0]);
        re.push(vals[1]);
        im.push(vals.get(2).copied().unwrap_or(0.0));
    }
    let spec = DataSpec::Sampled { ys, re, im };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    /// RK4 step of the direct solver
    pub dt: f64,
    /// the direct solver runs on the output grid refined by this factor
    pub refine: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { dt: 0.01, refine: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub window: [f64; 2],
    pub samples: usize,
    /// window of the mode-1 remainder fits
    pub mode_one_window: [f64; 2],
    pub mode_one_samples: usize,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig { window: [10.0, 100.0], samples: 19, mode_one_window: [20.0, 200.0], mode_one_samples: 21 }
    }
}

/// A validation failure tied to a dotted config key.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> FieldError {
    FieldError { field: field.to_string(), message: message.into() }
}

fn positive(field: &str, v: f64) -> std::result::Result<(), FieldError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive and finite, got {v}")))
    }
}

fn interval(field: &str, w: [f64; 2]) -> std::result::Result<(), FieldError> {
    if w[0].is_finite() && w[1].is_finite() && w[0] < w[1] {
        Ok(())
    } else {
        Err(bad(field, format!("needs lo < hi, got {w:?}")))
    }
}

impl RunConfig {
    /// Parses and validates; errors carry the line of the offending key.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate().map_err(|e| {
            let at = locate(src, &e.field).map(|l| format!("line {l}: ")).unwrap_or_default();
            Error::Config(format!("{at}field `{}`: {}", e.field, e.message))
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&src).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.domain.half_width, self.domain.h)
    }

    pub fn fine_grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.domain.half_width, self.domain.h / self.evolve.refine as f64)
    }

    pub fn validate(&self) -> std::result::Result<(), FieldError> {
        if self.alpha_list.is_empty() {
            return Err(bad("alpha_list", "must not be empty"));
        }
        for (k, &a) in self.alpha_list.iter().enumerate() {
            if a == 0 || a > 64 {
                return Err(bad(&format!("alpha_list[{k}]"), format!("α = {a} outside 1..=64")));
            }
        }
        if self.suites.is_empty() {
            return Err(bad("suites", "must not be empty"));
        }
        if self.times.is_empty() {
            return Err(bad("times", "must not be empty"));
        }
        for (k, &t) in self.times.iter().enumerate() {
            if !(t >= 0.0 && t.is_finite()) || (k > 0 && t <= self.times[k - 1]) {
                return Err(bad(&format!("times[{k}]"), format!("times must be finite, ≥ 0 and strictly ascending, got {t}")));
            }
        }

        let d = &self.domain;
        positive("domain.h", d.h)?;
        positive("domain.half_width", d.half_width)?;
        if let Err(e) = self.grid() {
            return Err(bad("domain.h", e.to_string()));
        }

        let c = &self.c_grid;
        if !(c.c_max > 0.0 && c.c_max < 1.0) {
            return Err(bad("c_grid.c_max", format!("must lie in (0, 1), got {}", c.c_max)));
        }
        if !(c.c_inner > 0.0 && c.c_inner < c.c_max) {
            return Err(bad("c_grid.c_inner", format!("must lie in (0, c_max), got {}", c.c_inner)));
        }
        if !(2..=32).contains(&c.n_gauss) {
            return Err(bad("c_grid.n_gauss", format!("must lie in 2..=32, got {}", c.n_gauss)));
        }
        if c.min_panels == 0 {
            return Err(bad("c_grid.min_panels", "must be ≥ 1"));
        }
        positive("c_grid.points_per_oscillation", c.points_per_oscillation)?;
        if !(c.c_switch > 0.0 && c.c_switch <= 10.0 * FD_STEP) {
            return Err(bad("c_grid.c_switch", format!("must lie in (0, {}], got {}", 10.0 * FD_STEP, c.c_switch)));
        }
        if c.subdivide == 0 {
            return Err(bad("c_grid.subdivide", "must be ≥ 1"));
        }
        for (k, &v) in c.samples.iter().enumerate() {
            if !(v.abs() <= c.c_max) {
                return Err(bad(&format!("c_grid.samples[{k}]"), format!("|c| = {} exceeds c_max = {}", v.abs(), c.c_max)));
            }
        }

        let s = &self.solver;
        positive("solver.eps0", s.eps0)?;
        positive("solver.c_o", s.c_o)?;
        positive("solver.tol", s.tol)?;
        if let Some(h) = s.h {
            positive("solver.h", h)?;
        }
        if let Some(w) = s.half_width {
            positive("solver.half_width", w)?;
        }
        if !(2..=16).contains(&s.n_gauss) {
            return Err(bad("solver.n_gauss", format!("must lie in 2..=16, got {}", s.n_gauss)));
        }
        if s.max_iter == 0 {
            return Err(bad("solver.max_iter", "must be ≥ 1"));
        }
        if !(s.refine_ratio > 1.0 && s.refine_ratio.is_finite()) {
            return Err(bad("solver.refine_ratio", format!("must exceed 1, got {}", s.refine_ratio)));
        }

        let t = &self.tolerances;
        for (k, v) in [
            ("closed_form", t.closed_form),
            ("steadiness", t.steadiness),
            ("wronskian_limit", t.wronskian_limit),
            ("a_zero", t.a_zero),
            ("a_slope", t.a_slope),
            ("t_gaussian", t.t_gaussian),
            ("dual_wronskian", t.dual_wronskian),
            ("spectral_vs_direct", t.spectral_vs_direct),
            ("mode_one_degradation", t.mode_one_degradation),
            ("mode_one_projection", t.mode_one_projection),
            ("lap_pointwise", t.lap_pointwise),
            ("lap_average", t.lap_average),
            ("s_growth", t.s_growth),
            ("conservation", t.conservation),
        ] {
            positive(&format!("tolerances.{k}"), v)?;
        }
        interval("tolerances.l2_exponent", t.l2_exponent)?;
        interval("tolerances.h1_exponent", t.h1_exponent)?;
        interval("tolerances.mode_one_exponent", t.mode_one_exponent)?;

        let data_sources = self.data.family.is_some() as u8 + (!self.data.terms.is_empty()) as u8 + self.data.file.is_some() as u8;
        if data_sources > 1 {
            return Err(bad("data", "set at most one of family, terms, file"));
        }
        for (k, term) in self.data.terms.iter().enumerate() {
            if !(term.coeff.is_finite() && term.coeff_im.is_finite()) {
                return Err(bad(&format!("data.terms[{k}]"), "coefficients must be finite"));
            }
        }

        let e = &self.evolve;
        let a_max = *self.alpha_list.iter().max().unwrap() as f64;
        if !(e.dt > 0.0 && e.dt <= 0.5 / a_max) {
            return Err(bad("evolve.dt", format!("must lie in (0, 0.5/α_max = {}], got {}", 0.5 / a_max, e.dt)));
        }
        if e.refine == 0 {
            return Err(bad("evolve.refine", "must be ≥ 1"));
        }
        if let Err(err) = self.fine_grid() {
            return Err(bad("evolve.refine", err.to_string()));
        }

        let dc = &self.decay;
        if !(dc.window[0] > 0.0) {
            return Err(bad("decay.window", "must start after t = 0"));
        }
        interval("decay.window", dc.window)?;
        if !(dc.mode_one_window[0] > 0.0) {
            return Err(bad("decay.mode_one_window", "must start after t = 0"));
        }
        interval("decay.mode_one_window", dc.mode_one_window)?;
        if dc.samples < 5 {
            return Err(bad("decay.samples", "a fit needs ≥ 5 samples"));
        }
        if dc.mode_one_samples < 5 {
            return Err(bad("decay.mode_one_samples", "a fit needs ≥ 5 samples"));
        }
        Ok(())
    }
}

/// 1-based line on which the key `field` (dotted, index suffix ignored) is
/// set, if it appears literally in `src`.
pub fn locate(src: &str, field: &str) -> Option<usize> {
    let path: Vec<&str> = field.split('.').map(|p| p.split('[').next().unwrap_or(p)).collect();
    let (key, table) = path.split_last()?;
    let mut current: Vec<String> = Vec::new();
    let mut table_line = None;
    for (n, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let h = h.trim_matches(|c| c == '[' || c == ']');
            current = h.split('.').map(|s| s.trim().to_string()).collect();
            if current.iter().map(String::as_str).eq(path.iter().copied()) {
                table_line = Some(n + 1);
            }
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim();
        let mut full: Vec<&str> = current.iter().map(String::as_str).collect();
        full.extend(k.split('.').map(str::trim));
        if full.split_last().is_some_and(|(l, t)| l == key && t == table) {
            return Some(n + 1);
        }
    }
    table_line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.c_grid.samples.len(), 19);
    }

    #[test]
    fn sample_beyond_c_max_names_the_field_and_line() {
        let src = "alpha_list = [2]\n\n[c_grid]\nc_max = 0.99\nsamples = [0.1, 0.995]\n";
        let e = RunConfig::from_toml_str(src).unwrap_err().to_string();
        assert!(e.contains("c_grid.samples[1]"), "{e}");
        assert!(e.contains("line 5"), "{e}");
    }

    #[test]
    fn parse_errors_are_line_precise() {
        let e = RunConfig::from_toml_str("alpha_list = [2]\ntimes = [1.0,\n").unwrap_err().to_string();
        assert!(e.contains("line"), "{e}");
        let e = RunConfig::from_toml_str("[domain]\nwidth = 3\n").unwrap_err().to_string();
        assert!(e.contains("width") && e.contains("line 2"), "{e}");
    }

    #[test]
    fn data_sources_are_exclusive() {
        let e = RunConfig::from_toml_str("[data]\nfamily = \"bump\"\nfile = \"x.csv\"\n").unwrap_err().to_string();
        assert!(e.contains("`data`"), "{e}");
        let c =
            RunConfig::from_toml_str("[data]\nterms = [{ family = \"gaussian\" }, { family = \"odd_gaussian\", coeff = 2.0 }]\n").unwrap();
        let spec = c.data.spec(Path::new(".")).unwrap();
        assert!((spec.eval(0.5).re - (-0.25f64).exp() * (1.0 + 2.0 * 0.5f64.sinh())).abs() < 1e-15);
    }

    #[test]
    fn locate_finds_nested_keys() {
        let src = "a = 1\n[evolve]\ndt = 0.3 # comment\n[decay]\nsamples = 3\n";
        assert_eq!(locate(src, "evolve.dt"), Some(3));
        assert_eq!(locate(src, "decay.samples"), Some(5));
        assert_eq!(locate(src, "a"), Some(1));
        assert_eq!(locate(src, "decay"), Some(4));
        assert_eq!(locate(src, "domain.h"), None);
    }
}
