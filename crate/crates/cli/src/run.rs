//! Experiment dispatch and report writing.

use std::path::{Path, PathBuf};

use nlgrad::analysis::{
    fractionalization_error, localization_rate, multiplier_uniformity, poincare_scan, PoincareSetup,
};
use nlgrad::grid::{write_table, Field};
use nlgrad::kernels::{
    check_hypotheses, default_hypothesis_grid, limit_exponent, log_grid, scale_kernel, wedge_check, HypothesisReport,
    Kernel, KernelSummary, LimitExponent, Regime, DEFAULT_LIMIT_DELTAS,
};
use nlgrad::operator::OperatorHandle;
use nlgrad::profile::SymbolCache;
use nlgrad::solver::{
    gamma_sweep_diverging, gamma_sweep_vanishing, minimize, Growth, MinimizeOptions, RitzReport, ritz_extremes,
};
use serde::Serialize;

use crate::config::{self, Experiment, Format, IntegrandConfig, Resolved, RunConfig};
use crate::CliError;

pub const VERSION: &str = concat!("nlgrad ", env!("CARGO_PKG_VERSION"));

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    version: &'static str,
    experiment: &'static str,
    config: &'a RunConfig,
    result: T,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    version: &'static str,
    experiment: &'static str,
    config: &'a RunConfig,
    exit_code: u8,
    error: String,
}

struct Out<'a> {
    dir: PathBuf,
    config: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl Out<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn wants(&self, f: Format) -> bool {
        self.config.output.wants(f)
    }

    fn json<T: Serialize>(&mut self, name: &str, result: T) -> Result<(), CliError> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let report = Report { version: VERSION, experiment: self.config.experiment.name(), config: self.config, result };
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&report).expect("reports serialize");
        std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let path = self.path(name);
        write_table(&path, header, rows)?;
        self.written.push(path);
        Ok(())
    }

    fn field(&mut self, stem: &str, f: &Field) -> Result<(), CliError> {
        if self.wants(Format::Bin) {
            let path = self.path(&format!("{stem}.bin"));
            f.write_bin(&path)?;
            self.written.push(path);
        }
        if self.wants(Format::Csv) && f.grid().dim() == 1 {
            let path = self.path(&format!("{stem}.csv"));
            f.write_csv(&path)?;
            self.written.push(path);
        }
        Ok(())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

/// Writes `error.json` next to the other outputs; failures here are ignored
/// because the original error is what gets reported.
pub fn write_error(dir: &Path, config: &RunConfig, err: &CliError) {
    let report = ErrorReport {
        version: VERSION,
        experiment: config.experiment.name(),
        config,
        exit_code: err.exit_code(),
        error: err.to_string(),
    };
    let _ = std::fs::create_dir_all(dir);
    let _ = std::fs::write(dir.join("error.json"), serde_json::to_string_pretty(&report).expect("serializes") + "\n");
}

/// Runs the experiment and returns the files written.
pub fn execute(resolved: &Resolved, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut out = Out { dir: dir.to_path_buf(), config: &resolved.config, written: Vec::new() };
    let kernel = &resolved.kernel;
    let grid = resolved.grid.as_ref();
    let cfg = &resolved.config;
    match &cfg.experiment {
        Experiment::KernelInfo { tolerance } => kernel_info(&mut out, kernel, *tolerance)?,
        Experiment::Symbol { xi_max, points } => symbol(&mut out, kernel, cfg, *xi_max, *points)?,
        Experiment::Localize { deltas, norm, test_function } => {
            let r = localization_rate(kernel, *test_function, grid.expect("resolved"), deltas, *norm)?;
            let bounds = r.bounds.clone().unwrap_or_default();
            let rows: Vec<Vec<f64>> = r
                .deltas
                .iter()
                .enumerate()
                .map(|(i, d)| vec![*d, r.errors[i], bounds.get(i).copied().unwrap_or(f64::NAN)])
                .collect();
            out.csv("rate.csv", &["delta", "error", "bound"], &rows)?;
            out.json("rate.json", &r)?;
        }
        Experiment::Fractionalize { deltas, test_function } => {
            let u = test_function.sample(grid.expect("resolved"))?;
            let r = fractionalization_error(kernel, &u, deltas)?;
            let rows: Vec<Vec<f64>> = (0..deltas.len())
                .map(|i| {
                    vec![deltas[i], r.rate.errors[i], r.l1_distances[i], r.constants[i].unwrap_or(f64::NAN)]
                })
                .collect();
            out.csv("fractionalize.csv", &["delta", "error", "l1_distance", "constant"], &rows)?;
            out.json("fractionalize.json", &r)?;
        }
        Experiment::Poincare { regime, deltas, omega, samples, p } => {
            let setup = PoincareSetup {
                omega: config::sub_box(omega.as_ref().expect("resolved")),
                samples: *samples,
                seed: cfg.seed,
                p: *p,
            };
            let r = poincare_scan(kernel, *regime, deltas, grid.expect("resolved"), setup)?;
            let rows: Vec<Vec<f64>> = r.deltas.iter().zip(&r.worst_ratio).map(|(d, w)| vec![*d, *w]).collect();
            out.csv("poincare.csv", &["delta", "worst_ratio"], &rows)?;
            out.json("poincare.json", &r)?;
        }
        Experiment::MultiplierScan { pairs, xi_max, points } => {
            let pairs: Vec<(f64, f64)> = pairs.iter().map(|p| (p[0], p[1])).collect();
            let r = multiplier_uniformity(kernel, &pairs, *xi_max, *points)?;
            let rows: Vec<Vec<f64>> =
                r.scans.iter().map(|s| vec![s.d1, s.d2, s.max_ratio, s.max_scaled_derivative]).collect();
            out.csv("multiplier.csv", &["d1", "d2", "max_ratio", "max_scaled_derivative"], &rows)?;
            let finite = r.all_finite;
            out.json("multiplier.json", &r)?;
            if !finite {
                return Err(CliError::Numerical("non-finite comparison multiplier".into()));
            }
        }
        Experiment::Minimize { integrand, datum, omega, max_iter, grad_tol, precondition } => {
            let grid = grid.expect("resolved");
            let sk = scale_kernel(kernel, cfg.kernel.delta.expect("resolved"), cfg.kernel.regime.expect("resolved"))?;
            let op = OperatorHandle::for_kernel(&sk, grid)?;
            let e = config::energy(grid, integrand, *datum, omega.as_ref().expect("resolved"))?;
            let opts = MinimizeOptions { max_iter: *max_iter, grad_tol: *grad_tol, precondition: *precondition, ..Default::default() };
            let r = minimize(&e, &op, &Field::zeros(*grid), opts)?;
            let ritz = match integrand {
                IntegrandConfig::Power { p } if *p == 2.0 => Some(ritz_extremes(&op, &e.omega, 60, cfg.seed)?),
                _ => None,
            };
            let rows: Vec<Vec<f64>> =
                r.energy_history.iter().enumerate().map(|(i, f)| vec![i as f64, *f]).collect();
            out.csv("energy_history.csv", &["iteration", "energy"], &rows)?;
            out.field("u_star", &r.u_star)?;
            let total = e.g.add(&r.u_star)?;
            out.field("u_total", &total)?;
            let report = MinimizeReport {
                energy: r.energy_value,
                grad_norm: r.grad_norm,
                grad_tol: r.grad_tol,
                iterations: r.iterations,
                converged: r.converged,
                line_search_failures: r.line_search_failures,
                approximate_steps: r.approximate_steps,
                growth: e.growth(),
                convexity: ritz,
                warnings: op.warnings().to_vec(),
            };
            out.json("minimize.json", &report)?;
            if !r.converged {
                return Err(CliError::Numerical(format!(
                    "minimizer stopped after {} iterations with |grad| = {:e} > {:e} ({} line-search failures)",
                    r.iterations, r.grad_norm, r.grad_tol, r.line_search_failures
                )));
            }
        }
        Experiment::GammaSweep { regime, deltas, integrand, datum, omega, max_iter, grad_tol } => {
            let grid = grid.expect("resolved");
            let e = config::energy(grid, integrand, *datum, omega.as_ref().expect("resolved"))?;
            let opts = MinimizeOptions { max_iter: *max_iter, grad_tol: *grad_tol, ..Default::default() };
            let run = match regime {
                Regime::Vanishing => gamma_sweep_vanishing(kernel, &e, deltas, opts)?,
                Regime::Diverging => gamma_sweep_diverging(kernel, &e, deltas, opts)?,
            };
            if out.wants(Format::Csv) {
                let path = out.path("gamma.csv");
                run.report.write_csv(&path)?;
                out.written.push(path);
            }
            if out.wants(Format::Bin) {
                out.field("u_ref", &run.reference)?;
                for (i, u) in run.minimizers.iter().enumerate() {
                    out.field(&format!("u_delta_{i}"), u)?;
                }
            }
            let unconverged: Vec<f64> =
                run.report.entries.iter().filter(|e| !e.converged).map(|e| e.delta).collect();
            let ref_ok = run.report.reference_converged;
            out.json("gamma.json", &run.report)?;
            if !ref_ok || !unconverged.is_empty() {
                return Err(CliError::Numerical(format!(
                    "minimizer did not converge (reference converged: {ref_ok}, unconverged horizons: {unconverged:?})"
                )));
            }
        }
    }
    Ok(out.written)
}

#[derive(Serialize)]
struct MinimizeReport {
    energy: f64,
    grad_norm: f64,
    grad_tol: f64,
    iterations: usize,
    converged: bool,
    line_search_failures: usize,
    approximate_steps: usize,
    growth: Growth,
    /// extreme Ritz values of the quadratic form on `H_0(omega)`
    convexity: Option<RitzReport>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct WedgeEntry {
    delta: f64,
    c_low: f64,
    c_high: f64,
}

#[derive(Serialize)]
struct KernelInfo {
    summary: KernelSummary,
    mass: f64,
    analytic_s_inf: Option<f64>,
    limit_exponent: Option<LimitExponent>,
    hypotheses: HypothesisReport,
    wedge: Vec<WedgeEntry>,
    /// `max C_high / c_low` over the wedge horizons
    wedge_max_ratio: Option<f64>,
}

const WEDGE_DELTAS: [f64; 5] = [2.0, 5.0, 10.0, 50.0, 100.0];

fn kernel_info(out: &mut Out, kernel: &Kernel, tolerance: f64) -> Result<(), CliError> {
    // fixed ball |x| <= 1, so the constants are comparable across horizons
    let radii = log_grid(1e-3, 1.0, 300);
    let mut wedge = Vec::new();
    for d in WEDGE_DELTAS {
        let Ok(sk) = scale_kernel(kernel, d, Regime::Diverging) else { continue };
        let wb = wedge_check(&sk, &radii)?;
        wedge.push(WedgeEntry { delta: d, c_low: wb.c_low, c_high: wb.c_high });
    }
    let wedge_max_ratio = wedge.iter().map(|w| w.c_high / w.c_low).reduce(f64::max);
    let info = KernelInfo {
        summary: kernel.summary(),
        mass: kernel.mass()?,
        analytic_s_inf: kernel.analytic_s_inf(),
        limit_exponent: limit_exponent(kernel, &DEFAULT_LIMIT_DELTAS).ok(),
        hypotheses: check_hypotheses(kernel, &default_hypothesis_grid(), tolerance),
        wedge,
        wedge_max_ratio,
    };
    let rows: Vec<Vec<f64>> = log_grid(1e-4, 1.0, 200).into_iter().map(|r| vec![r, kernel.rho_bar(r)]).collect();
    out.csv("rho_bar.csv", &["r", "rho_bar"], &rows)?;
    out.json("kernel.json", &info)
}

#[derive(Serialize)]
struct SymbolReport {
    xi: Vec<f64>,
    q_hat: Vec<f64>,
    /// `q_delta(xi) = c_delta delta^n Q_hat(delta xi)` when a horizon is configured
    q_delta: Option<Vec<f64>>,
    relative_accuracy: f64,
}

fn symbol(out: &mut Out, kernel: &Kernel, cfg: &RunConfig, xi_max: f64, points: usize) -> Result<(), CliError> {
    let scaled = match (cfg.kernel.delta, cfg.kernel.regime) {
        (Some(d), Some(r)) => Some(scale_kernel(kernel, d, r)?),
        _ => None,
    };
    let reach = xi_max * scaled.as_ref().map_or(1.0, |s| s.delta().max(1.0));
    let cache = SymbolCache::new(kernel, reach)?;
    let xi = log_grid(1e-3, xi_max, points);
    let q_hat: Vec<f64> = xi.iter().map(|x| cache.eval(*x)).collect();
    let q_delta = scaled.map(|sk| xi.iter().map(|x| sk.symbol_factor() * cache.eval(sk.delta() * x)).collect::<Vec<_>>());
    let rows: Vec<Vec<f64>> = (0..xi.len())
        .map(|i| {
            let mut row = vec![xi[i], q_hat[i]];
            if let Some(q) = &q_delta {
                row.push(q[i]);
            }
            row
        })
        .collect();
    let header: &[&str] = if q_delta.is_some() { &["xi", "q_hat", "q_delta"] } else { &["xi", "q_hat"] };
    out.csv("symbol.csv", header, &rows)?;
    out.json("symbol.json", SymbolReport { xi, q_hat, q_delta, relative_accuracy: cache.relative_accuracy() })
}

/// Output directory of a run: `--output-dir` if given, else `output.directory`.
pub fn output_dir(cfg: &RunConfig, override_dir: Option<&Path>) -> PathBuf {
    override_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.directory.clone())
}
