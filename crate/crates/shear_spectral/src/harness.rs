//! Config-driven runner: tables, evolutions, verification checks and decay
//! fits, written as CSV files plus a JSON report.

pub mod checks;
pub mod config;
pub mod fit;

pub use checks::{timed, Check};
pub use config::{RunConfig, Suite};
pub use fit::{compare, decay_fit, CompareRow, DecayFit, Snapshot};

use crate::direct::{self, UniformGrid};
use crate::evolution::{psi_series, CGridOptions, InitialData, ModeField, ModeTable};
use crate::flow::SpectralPoint;
use crate::rayleigh::{solve_phi1, SolveOptions};
use crate::wronskian::{self, Side};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareSet {
    pub alpha: u32,
    pub label: String,
    pub rows: Vec<CompareRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub package: String,
    pub version: String,
    pub config: RunConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub fits: Vec<DecayFit>,
    pub compares: Vec<CompareSet>,
    /// file names relative to the output directory
    pub artifacts: Vec<String>,
    /// wall time per stage in seconds
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    fn new(config: &RunConfig) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            passed: true,
            checks: Vec::new(),
            fits: Vec::new(),
            compares: Vec::new(),
            artifacts: Vec::new(),
            timings: BTreeMap::new(),
        }
    }
}

/// State shared by the suites of one run.
pub struct Runner {
    pub config: RunConfig,
    base: PathBuf,
    out: PathBuf,
    grid: UniformGrid,
    fine: UniformGrid,
    opts: SolveOptions,
    copts: CGridOptions,
    tables: BTreeMap<u32, (InitialData, ModeTable)>,
    evolved: BTreeMap<u32, (Vec<ModeField>, Vec<Snapshot>)>,
    report: Report,
}

impl Runner {
    /// `base` resolves relative data paths; `out` receives the artifacts.
    pub fn new(config: RunConfig, base: &Path, out: &Path) -> Result<Self> {
        config.validate().map_err(|e| Error::Config(format!("field `{}`: {}", e.field, e.message)))?;
        std::fs::create_dir_all(out)?;
        Ok(Runner {
            grid: config.grid()?,
            fine: config.fine_grid()?,
            opts: config.solver.options(),
            copts: config.c_grid.options(),
            report: Report::new(&config),
            config,
            base: base.to_path_buf(),
            out: out.to_path_buf(),
            tables: BTreeMap::new(),
            evolved: BTreeMap::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        if !self.report.artifacts.iter().any(|a| a == name) {
            self.report.artifacts.push(name.to_string());
        }
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn push(&mut self, checks: Vec<Check>) {
        self.report.checks.extend(checks);
    }

    fn data(&self, alpha: u32) -> Result<InitialData> {
        InitialData::new(alpha, self.config.data.spec(&self.base)?, self.grid.clone())
    }

    /// Largest time any requested suite evaluates for mode `alpha`.
    fn horizon(&self, alpha: u32) -> f64 {
        let c = &self.config;
        let mut t = c.times.iter().copied().fold(0.0, f64::max);
        if c.suites.contains(&Suite::Decay) {
            let w = if alpha == 1 { c.decay.mode_one_window } else { c.decay.window };
            t = t.max(w[1]);
        }
        t.max(1.0)
    }

    fn table(&mut self, alpha: u32) -> Result<&(InitialData, ModeTable)> {
        if !self.tables.contains_key(&alpha) {
            let t0 = Instant::now();
            let data = self.data(alpha)?;
            let table = ModeTable::build(&data, self.horizon(alpha), &self.copts, &self.opts)?;
            self.report.timings.insert(format!("table_alpha{alpha}"), t0.elapsed().as_secs_f64());
            self.tables.insert(alpha, (data, table));
        }
        Ok(&self.tables[&alpha])
    }

    fn evolved(&mut self, alpha: u32) -> Result<&(Vec<ModeField>, Vec<Snapshot>)> {
        if !self.evolved.contains_key(&alpha) {
            let times = self.config.times.clone();
            let dt = self.config.evolve.dt;
            let fine = self.fine.clone();
            let grid = self.grid.clone();
            let (data, table) = self.table(alpha)?;
            let t0 = Instant::now();
            let spectral = psi_series(&times, table, &grid)?;
            let w0 = fine.sample(|y| data.eval(y));
            let k = self.config.evolve.refine;
            let traj = direct::evolve(&w0, alpha, &fine, &times, dt)?;
            let snaps = traj.iter().map(|s| Snapshot::new(s.t, s.psi.iter().step_by(k).copied().collect())).collect();
            self.report.timings.insert(format!("evolve_alpha{alpha}"), t0.elapsed().as_secs_f64());
            self.evolved.insert(alpha, (spectral, snaps));
        }
        Ok(&self.evolved[&alpha])
    }

    /// Runs every requested suite; numerical failures become failed rows.
    pub fn run(mut self) -> Result<Report> {
        let t0 = Instant::now();
        let mut seen = Vec::new();
        for s in self.config.suites.clone() {
            if seen.contains(&s) {
                continue;
            }
            seen.push(s);
            let ts = Instant::now();
            let r = match s {
                Suite::Phi1 => self.phi1(),
                Suite::Wronskian => self.wronskian(),
                Suite::Kernels => self.kernels(),
                Suite::Evolve => self.evolve(),
                Suite::Verify => self.verify(),
                Suite::Decay => self.decay(),
                Suite::Compare => self.compare(),
            };
            let name = serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            if let Err(e) = r {
                if matches!(e, Error::Io(_)) {
                    return Err(e);
                }
                self.push(vec![Check::failed(&name, &e)]);
            }
            self.report.timings.insert(format!("suite_{name}"), ts.elapsed().as_secs_f64());
        }
        self.report.timings.insert("total".into(), t0.elapsed().as_secs_f64());
        self.report.passed = self.report.checks.iter().all(|c| c.passed);
        self.write_summary()?;
        Ok(self.report)
    }

    fn write_summary(&mut self) -> Result<()> {
        let mut w = self.create("checks.csv")?;
        writeln!(w, "name,passed,value,threshold,tolerance_key,error")?;
        for c in &self.report.checks {
            let th: Vec<String> = c.threshold.iter().map(|v| format!("{v:e}")).collect();
            writeln!(
                w,
                "\"{}\",{},{:.10e},\"{}\",{},\"{}\"",
                c.name,
                c.passed,
                c.value,
                th.join(";"),
                c.tolerance_key,
                c.error.clone().unwrap_or_default().replace('"', "'")
            )?;
        }
        w.flush()?;
        if !self.report.fits.is_empty() {
            let mut w = self.create("decay_fits.csv")?;
            writeln!(w, "quantity,t_lo,t_hi,exponent,intercept,residual,half_width,samples")?;
            for f in &self.report.fits {
                writeln!(
                    w,
                    "\"{}\",{},{},{:.10e},{:.10e},{:.10e},{:.10e},{}",
                    f.quantity, f.window.0, f.window.1, f.exponent, f.intercept, f.residual, f.half_width, f.samples
                )?;
            }
            w.flush()?;
        }
        self.report.artifacts.push("report.json".into());
        let f = File::create(self.out.join("report.json"))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &self.report).map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }

    /// `φ₁` and `∂_yφ₁` on the output grid for each sampled `c`.
    fn phi1(&mut self) -> Result<()> {
        for alpha in self.config.alpha_list.clone() {
            let samples = self.config.c_grid.samples.clone();
            let opts = self.opts;
            let grid = self.grid.clone();
            let rows: Vec<(f64, Result<(Vec<String>, f64, usize)>)> = samples
                .par_iter()
                .map(|&c| {
                    let r = (|| {
                        let field = solve_phi1(&SpectralPoint::real(c, alpha)?, &opts)?;
                        let mut lines = Vec::new();
                        for &y in grid.ys.iter().filter(|&&y| field.contains(y)) {
                            let s = field.sample(y)?;
                            lines.push(format!("{c},{y},{:.17e},{:.17e},{:.17e},{:.17e}", s.phi1.re, s.phi1.im, s.dphi1.re, s.dphi1.im));
                        }
                        Ok((lines, field.residual, field.iterations))
                    })();
                    (c, r)
                })
                .collect();
            let mut w = self.create(&format!("phi1_alpha{alpha}.csv"))?;
            writeln!(w, "c,y,phi1_re,phi1_im,dphi1_re,dphi1_im")?;
            let mut failed = Vec::new();
            let mut summary = Vec::new();
            for (c, r) in rows {
                match r {
                    Ok((lines, res, it)) => {
                        for l in lines {
                            writeln!(w, "{l}")?;
                        }
                        summary.push(format!("{c},{res:.6e},{it}"));
                    }
                    Err(e) => failed.push(Check::failed(&format!("phi1 at c = {c}, alpha = {alpha}"), &e)),
                }
            }
            w.flush()?;
            let mut w = self.create(&format!("phi1_summary_alpha{alpha}.csv"))?;
            writeln!(w, "c,ode_residual,iterations")?;
            for l in summary {
                writeln!(w, "{l}")?;
            }
            w.flush()?;
            self.push(failed);
        }
        Ok(())
    }

    /// `A(c, α)` and the boundary values `W±` at the sampled `c`.
    fn wronskian(&mut self) -> Result<()> {
        let opts = self.opts;
        let mut jobs = Vec::new();
        for &a in &self.config.alpha_list {
            for &c in &self.config.c_grid.samples {
                jobs.push((a, c));
            }
        }
        let vals: Vec<Result<f64>> = jobs.par_iter().map(|&(a, c)| wronskian::a_value(c, a, &opts)).collect();
        let mut w = self.create("wronskian.csv")?;
        writeln!(w, "alpha,c,A,W_plus_re,W_plus_im,W_minus_re,W_minus_im")?;
        let mut failed = Vec::new();
        for (&(a, c), v) in jobs.iter().zip(vals) {
            match v {
                Ok(av) => {
                    let (p, m) = (wronskian::wronskian_limit(av, c, Side::Upper), wronskian::wronskian_limit(av, c, Side::Lower));
                    writeln!(w, "{a},{c},{av:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", p.re, p.im, m.re, m.im)?;
                }
                Err(e) => failed.push(Check::failed(&format!("A at c = {c}, alpha = {a}"), &e)),
            }
        }
        w.flush()?;
        self.push(failed);
        Ok(())
    }

    fn kernels(&mut self) -> Result<()> {
        for alpha in self.config.alpha_list.clone() {
            let (_, table) = self.table(alpha)?;
            let k = table.kernel().clone();
            let mut w = self.create(&format!("kernels_alpha{alpha}.csv"))?;
            k.write_csv(&mut w)?;
            w.flush()?;
            let mut w = self.create(&format!("gamma_alpha{alpha}.csv"))?;
            k.write_gamma_csv(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }

    fn evolve(&mut self) -> Result<()> {
        let tol = self.config.tolerances.clone();
        for alpha in self.config.alpha_list.clone() {
            let grid = self.grid.clone();
            let (spectral, direct_snaps) = self.evolved(alpha)?.clone();
            let mut w = self.create(&format!("psi_spectral_alpha{alpha}.csv"))?;
            writeln!(w, "t,y,psi_re,psi_im,dpsi_re,dpsi_im")?;
            for f in &spectral {
                for (j, y) in grid.ys.iter().enumerate() {
                    writeln!(w, "{},{y},{:.17e},{:.17e},{:.17e},{:.17e}", f.t, f.psi[j].re, f.psi[j].im, f.dpsi[j].re, f.dpsi[j].im)?;
                }
            }
            w.flush()?;
            let mut w = self.create(&format!("psi_direct_alpha{alpha}.csv"))?;
            writeln!(w, "t,y,psi_re,psi_im")?;
            for s in &direct_snaps {
                for (j, y) in grid.ys.iter().enumerate() {
                    writeln!(w, "{},{y},{:.17e},{:.17e}", s.t, s.values[j].re, s.values[j].im)?;
                }
            }
            w.flush()?;
            let t_max = self.tables[&alpha].1.kernel().t_max;
            let mut rows = Vec::new();
            for (f, s) in spectral.iter().zip(&direct_snaps) {
                let diff: Vec<C64> = s.values.iter().zip(&f.psi).map(|(a, b)| a - b).collect();
                let rel = direct::l2_norm(&diff, grid.h) / direct::l2_norm(&s.values, grid.h);
                rows.push(
                    Check::below(
                        &format!("spectral vs direct, alpha = {alpha}, t = {}", f.t),
                        rel,
                        tol.spectral_vs_direct,
                        "spectral_vs_direct",
                    )
                    .param("t_max", t_max)
                    .param("dt", self.config.evolve.dt)
                    .param("h_direct", self.fine.h),
                );
            }
            self.push(rows);
        }
        Ok(())
    }

    fn compare(&mut self) -> Result<()> {
        let tol = self.config.tolerances.clone();
        let w1 = self.config.decay.mode_one_window[0];
        for alpha in self.config.alpha_list.clone() {
            let grid = self.grid.clone();
            let (spectral, direct_snaps) = self.evolved(alpha)?.clone();
            let a: Vec<Snapshot> =
                spectral.iter().map(|f| Snapshot { t: f.t, values: f.psi.clone(), deriv: Some(f.dpsi.clone()) }).collect();
            let rows = compare(&grid, &a, &direct_snaps)?;
            let mut w = self.create(&format!("compare_alpha{alpha}.csv"))?;
            writeln!(w, "t,rel_l2,linf,rel_h1")?;
            for r in &rows {
                writeln!(w, "{},{:.10e},{:.10e},{:.10e}", r.t, r.rel_l2, r.linf, r.rel_h1)?;
            }
            w.flush()?;
            let mut checks: Vec<Check> = rows
                .iter()
                .map(|r| {
                    Check::below(
                        &format!("compare rel L2, alpha = {alpha}, t = {}", r.t),
                        r.rel_l2,
                        tol.spectral_vs_direct,
                        "spectral_vs_direct",
                    )
                })
                .collect();
            if alpha == 1 {
                for f in spectral.iter().filter(|f| f.t >= w1) {
                    let p = f.parts.as_ref().ok_or_else(|| Error::Data("mode-one parts missing".into()))?;
                    let (v, dv) = p.remainder(f, true);
                    let with = crate::evolution::h1_from(&v, &dv, grid.h);
                    let (v, dv) = p.remainder(f, false);
                    let without = crate::evolution::h1_from(&v, &dv, grid.h);
                    let mut c =
                        Check::below(&format!("H1 with / without a0 f1 at t = {}", f.t), with / without, 1.0, "mode_one_projection");
                    c.tolerance_key = "(strict decrease)".into();
                    checks.push(c.detail(format!("with {with:.4e}, without {without:.4e}")));
                }
            }
            self.report.compares.push(CompareSet { alpha, label: "spectral vs direct".into(), rows });
            self.push(checks);
        }
        Ok(())
    }

    /// Closed forms, limits and conservation checks, run on the worker pool.
    fn verify(&mut self) -> Result<()> {
        let cfg = &self.config;
        let tol = cfg.tolerances.clone();
        let opts = self.opts;
        let seed = cfg.seed;
        let (eps0, c_o) = (cfg.solver.eps0, cfg.solver.c_o);
        let dt = cfg.evolve.dt.min(0.5);
        let fine = self.fine.clone();
        let data1 = InitialData::new(1, cfg.data.spec(&self.base)?, fine.clone())?;
        type Job<'a> = Box<dyn FnOnce() -> Vec<Check> + Send + 'a>;
        let jobs: Vec<Job> = vec![
            Box::new(|| timed("closed form", || checks::closed_form_phi(&tol, &opts))),
            Box::new(|| timed("steadiness", || checks::steadiness(&tol, &fine, dt))),
            Box::new(|| timed("Wronskian limit", || checks::wronskian_limit(&tol, &opts))),
            Box::new(|| timed("A at zero", || checks::a_at_zero(&tol, &opts))),
            Box::new(|| timed("T closed form", || checks::t_gaussian(&tol, &opts))),
            Box::new(|| timed("dual Wronskian", || checks::dual_wronskian(&tol, seed, 20, &[1, 2, 3], eps0, c_o, &opts))),
            Box::new(|| {
                let f = |y: f64| data1.eval(y);
                timed("LAP", || checks::lap(&tol, &f, 1e-3, &opts))
            }),
            Box::new(|| timed("S(t) bound", || checks::s_bound(&tol))),
            Box::new(|| timed("conservation", || checks::conservation(&tol, &data1, &fine, 20.0, dt))),
        ];
        let out: Vec<Vec<Check>> = jobs.into_par_iter().map(|j| j()).collect();
        self.push(out.into_iter().flatten().collect());
        Ok(())
    }

    fn decay(&mut self) -> Result<()> {
        let tol = self.config.tolerances.clone();
        let dc = self.config.decay.clone();
        for alpha in self.config.alpha_list.clone() {
            let grid = self.grid.clone();
            let (_, table) = self.table(alpha)?;
            let r = if alpha == 1 {
                checks::mode_one(&tol, table, &grid, dc.mode_one_window, dc.mode_one_samples)
            } else {
                checks::decay_exponents(&tol, table, &grid, dc.window, dc.samples)
            };
            match r {
                Ok((c, f)) => {
                    self.push(c);
                    self.report.fits.extend(f);
                }
                Err(e) => self.push(vec![Check::failed(&format!("decay, alpha = {alpha}"), &e)]),
            }
            if alpha == 1 {
                let c = timed("S(t) bound", || checks::s_bound(&tol));
                self.push(c);
            }
        }
        Ok(())
    }
}

/// Loads `path`, runs it into `out` (or the configured / default directory).
pub fn run_config(path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Report> {
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let out = match (out, &cfg.out_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("out"),
    };
    Runner::new(cfg, base, &out)?.run()
}

/// Reads a `t,y,psi_re,psi_im[,dpsi_re,dpsi_im]` file written by the
/// `evolve` suite into a grid and per-time snapshots.
pub fn read_psi_csv(path: &Path) -> Result<(UniformGrid, Vec<Snapshot>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut snaps: Vec<Snapshot> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let v: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let v = v.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), k + 2)))?;
        if v.len() < 4 {
            return Err(Error::Data(format!("{} row {}: expected t,y,re,im", path.display(), k + 2)));
        }
        if snaps.last().is_none_or(|s| s.t != v[0]) {
            snaps.push(Snapshot { t: v[0], values: Vec::new(), deriv: (v.len() >= 6).then(Vec::new) });
        }
        if snaps.len() == 1 {
            ys.push(v[1]);
        }
        let s = snaps.last_mut().unwrap();
        s.values.push(C64::new(v[2], v[3]));
        if let (Some(d), true) = (s.deriv.as_mut(), v.len() >= 6) {
            d.push(C64::new(v[4], v[5]));
        }
    }
    if ys.len() < 3 {
        return Err(Error::Data(format!("{}: too few rows", path.display())));
    }
    let h = (ys[ys.len() - 1] - ys[0]) / (ys.len() - 1) as f64;
    let grid = UniformGrid::new(ys[ys.len() - 1], h)?;
    if grid.ys.len() != ys.len() || grid.ys.iter().zip(&ys).any(|(a, b)| (a - b).abs() > 1e-9 * h) {
        return Err(Error::Grid(format!("{}: y column is not a symmetric uniform grid", path.display())));
    }
    if snaps.iter().any(|s| s.values.len() != ys.len()) {
        return Err(Error::Grid(format!("{}: snapshots of unequal length", path.display())));
    }
    Ok((grid, snaps))
}
