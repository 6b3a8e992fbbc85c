//! TOML run configuration.

use std::path::{Path, PathBuf};

use nlgrad::analysis::{Norm, TestFunction};
use nlgrad::grid::{Grid, SubBox};
use nlgrad::kernels::{make_kernel, scale_kernel, Cutoff, ExponentProfile, Family, Kernel, KernelSpec, Regime};
use nlgrad::solver::{default_datum, Energy, Integrand};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub kernel: KernelConfig,
    pub grid: Option<GridConfig>,
    pub experiment: Experiment,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: Family,
    pub s: Option<f64>,
    pub kappa: Option<i32>,
    /// samples of `s(r)` on an equispaced grid of `[0, 1]`
    pub s_fn: Option<Vec<f64>>,
    #[serde(default)]
    pub cutoff: Cutoff,
    #[serde(default = "one")]
    pub dim: usize,
    /// horizon for single-horizon experiments (symbol, minimize)
    pub delta: Option<f64>,
    pub regime: Option<Regime>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// points per axis, a power of two
    pub n: usize,
    /// torus side length
    pub length: f64,
    pub dim: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Datum {
    /// `cos(2 pi x / L) + 0.5 sin(4 pi x / L)` and its 2D analogue
    #[default]
    LowMode,
    Zero,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IntegrandConfig {
    /// `(1/p) |A|^p`
    Power { p: f64 },
    /// `1/2 A . M A` with a constant matrix `M`
    Anisotropic { matrix: Vec<Vec<f64>> },
    /// `a + c |A|^p` with a constant `a`
    Weighted {
        p: f64,
        c: f64,
        #[serde(default)]
        a: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    KernelInfo {
        /// almost-monotonicity slack for the hypothesis checks
        #[serde(default = "default_hyp_tol")]
        tolerance: f64,
    },
    Symbol {
        #[serde(default = "default_symbol_xi")]
        xi_max: f64,
        #[serde(default = "default_symbol_points")]
        points: usize,
    },
    Localize {
        deltas: Vec<f64>,
        #[serde(default = "default_norm")]
        norm: Norm,
        #[serde(default = "TestFunction::smooth")]
        test_function: TestFunction,
    },
    Fractionalize {
        deltas: Vec<f64>,
        #[serde(default = "TestFunction::smooth")]
        test_function: TestFunction,
    },
    Poincare {
        regime: Regime,
        deltas: Vec<f64>,
        omega: Option<OmegaConfig>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_p")]
        p: f64,
    },
    MultiplierScan {
        pairs: Vec<[f64; 2]>,
        #[serde(default = "default_multiplier_xi")]
        xi_max: f64,
        #[serde(default = "default_multiplier_points")]
        points: usize,
    },
    Minimize {
        integrand: IntegrandConfig,
        #[serde(default)]
        datum: Datum,
        omega: Option<OmegaConfig>,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        grad_tol: Option<f64>,
        #[serde(default = "yes")]
        precondition: bool,
    },
    GammaSweep {
        regime: Regime,
        deltas: Vec<f64>,
        integrand: IntegrandConfig,
        #[serde(default)]
        datum: Datum,
        omega: Option<OmegaConfig>,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        grad_tol: Option<f64>,
    },
}

fn default_hyp_tol() -> f64 {
    0.05
}
fn default_symbol_xi() -> f64 {
    100.0
}
fn default_symbol_points() -> usize {
    400
}
fn default_norm() -> Norm {
    Norm::Linf
}
fn default_samples() -> usize {
    32
}
fn default_p() -> f64 {
    2.0
}
fn default_multiplier_xi() -> f64 {
    1e3
}
fn default_multiplier_points() -> usize {
    2000
}
fn default_max_iter() -> usize {
    500
}
fn yes() -> bool {
    true
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::KernelInfo { .. } => "kernel-info",
            Experiment::Symbol { .. } => "symbol",
            Experiment::Localize { .. } => "localize",
            Experiment::Fractionalize { .. } => "fractionalize",
            Experiment::Poincare { .. } => "poincare",
            Experiment::MultiplierScan { .. } => "multiplier-scan",
            Experiment::Minimize { .. } => "minimize",
            Experiment::GammaSweep { .. } => "gamma-sweep",
        }
    }

    fn needs_grid(&self) -> bool {
        !matches!(self, Experiment::KernelInfo { .. } | Experiment::Symbol { .. } | Experiment::MultiplierScan { .. })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Bin,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_dir(), formats: default_formats() }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// A checked configuration with its kernel and grid built.
pub struct Resolved {
    pub config: RunConfig,
    pub kernel: Kernel,
    pub grid: Option<Grid>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn kernel_spec(k: &KernelConfig) -> Result<KernelSpec, CliError> {
    let need_s = || k.s.ok_or_else(|| invalid(format!("missing key kernel.s (required for family {})", k.family.name())));
    let spec = match k.family {
        Family::TruncatedFractional => KernelSpec::truncated_fractional(need_s()?, k.dim),
        Family::LogCorrected => {
            let kappa = k.kappa.ok_or_else(|| invalid("missing key kernel.kappa (required for family log-corrected)"))?;
            KernelSpec::log_corrected(need_s()?, kappa, k.dim)
        }
        Family::VariableExponent => {
            let samples = k
                .s_fn
                .clone()
                .ok_or_else(|| invalid("missing key kernel.s_fn (required for family variable-exponent)"))?;
            KernelSpec::variable_exponent(ExponentProfile::new(samples)?, k.dim)
        }
        Family::Riesz => KernelSpec::riesz(need_s()?, k.dim),
        Family::Custom => {
            return Err(invalid("family custom takes a closure and is only available through the library API"));
        }
    };
    Ok(spec.with_cutoff(k.cutoff))
}

fn resolve_omega(omega: &Option<OmegaConfig>, grid: &Grid) -> Result<OmegaConfig, CliError> {
    let n = grid.dim();
    let o = match omega {
        Some(o) => o.clone(),
        None => {
            let c = 0.5 * grid.length();
            let r = 0.25 * grid.length();
            OmegaConfig { lo: vec![c - r; n], hi: vec![c + r; n] }
        }
    };
    if o.lo.len() != n || o.hi.len() != n {
        return Err(invalid(format!("omega.lo and omega.hi need {n} entries")));
    }
    if o.lo.iter().zip(&o.hi).any(|(a, b)| !(a < b)) {
        return Err(invalid("omega needs lo < hi in every coordinate"));
    }
    sub_box(&o).validate(grid)?;
    Ok(o)
}

pub fn sub_box(o: &OmegaConfig) -> SubBox {
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for d in 0..o.lo.len().min(2) {
        lo[d] = o.lo[d];
        hi[d] = o.hi[d];
    }
    SubBox::rect(lo, hi)
}

fn check_deltas(kernel: &Kernel, regime: Regime, deltas: &[f64]) -> Result<(), CliError> {
    if deltas.is_empty() {
        return Err(invalid("experiment.deltas is empty"));
    }
    for &d in deltas {
        scale_kernel(kernel, d, regime)?;
    }
    Ok(())
}

fn check_resolution(grid: &Grid, deltas: &[f64]) -> Result<(), CliError> {
    let min = 4.0 * grid.spacing();
    match deltas.iter().find(|d| **d < min) {
        Some(&d) => Err(nlgrad::Error::UnresolvedHorizon { delta: d, spacing: grid.spacing(), min }.into()),
        None => Ok(()),
    }
}

fn check_integrand(i: &IntegrandConfig, dim: usize) -> Result<(), CliError> {
    match i {
        IntegrandConfig::Power { p } | IntegrandConfig::Weighted { p, .. } if !(*p > 1.0) => {
            Err(invalid(format!("integrand exponent p = {p} must exceed 1")))
        }
        IntegrandConfig::Anisotropic { matrix } if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) => {
            Err(invalid(format!("integrand.matrix must be {dim} x {dim}")))
        }
        _ => Ok(()),
    }
}

/// Builds the energy of a minimize or gamma-sweep experiment.
pub fn energy(grid: &Grid, integrand: &IntegrandConfig, datum: Datum, omega: &OmegaConfig) -> Result<Energy, CliError> {
    let len = grid.len();
    let integrand = match integrand {
        IntegrandConfig::Power { p } => Integrand::PowerNorm { p: *p },
        IntegrandConfig::Anisotropic { matrix } => {
            let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
            Integrand::AnisotropicQuadratic { m: vec![flat; len] }
        }
        IntegrandConfig::Weighted { p, c, a } => Integrand::WeightedPower { p: *p, c: *c, a: vec![*a; len] },
    };
    let g = match datum {
        Datum::LowMode => default_datum(grid),
        Datum::Zero => nlgrad::grid::Field::zeros(*grid),
    };
    Ok(Energy::new(integrand, g, sub_box(omega))?)
}

/// Schema and range checks; fills in defaults so the returned config is
/// the one embedded in reports.
pub fn resolve(mut config: RunConfig) -> Result<Resolved, CliError> {
    let kernel = make_kernel(kernel_spec(&config.kernel)?)?;
    if let (Some(d), Some(r)) = (config.kernel.delta, config.kernel.regime) {
        scale_kernel(&kernel, d, r)?;
    }
    let grid = match (config.grid, config.experiment.needs_grid()) {
        (Some(g), _) => {
            let dim = g.dim.unwrap_or(config.kernel.dim);
            if dim != config.kernel.dim {
                return Err(invalid(format!("grid.dim = {dim} differs from kernel.dim = {}", config.kernel.dim)));
            }
            config.grid = Some(GridConfig { dim: Some(dim), ..g });
            Some(Grid::new(dim, g.n, g.length)?)
        }
        (None, true) => return Err(invalid(format!("missing table [grid] (required by {})", config.experiment.name()))),
        (None, false) => None,
    };
    if config.output.formats.is_empty() {
        return Err(invalid("output.formats is empty"));
    }
    let dim = config.kernel.dim;
    match &mut config.experiment {
        Experiment::KernelInfo { tolerance } => {
            if !(*tolerance >= 0.0) {
                return Err(invalid("experiment.tolerance must be non-negative"));
            }
        }
        Experiment::Symbol { xi_max, points } => {
            if !(*xi_max > 0.0 && xi_max.is_finite()) || *points < 2 {
                return Err(invalid("symbol needs xi_max > 0 and at least 2 points"));
            }
        }
        Experiment::Localize { deltas, test_function, .. } => {
            let grid = grid.as_ref().expect("checked");
            check_deltas(&kernel, Regime::Vanishing, deltas)?;
            check_resolution(grid, deltas)?;
            test_function.sample(grid)?;
        }
        Experiment::Fractionalize { deltas, test_function } => {
            check_deltas(&kernel, Regime::Diverging, deltas)?;
            if deltas.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("experiment.deltas must be increasing"));
            }
            test_function.sample(grid.as_ref().expect("checked"))?;
        }
        Experiment::Poincare { regime, deltas, omega, samples, p } => {
            check_deltas(&kernel, *regime, deltas)?;
            *omega = Some(resolve_omega(omega, grid.as_ref().expect("checked"))?);
            if *samples < 16 {
                return Err(invalid("poincare needs at least 16 samples"));
            }
            if !(*p >= 1.0) {
                return Err(invalid("poincare exponent p must be at least 1"));
            }
        }
        Experiment::MultiplierScan { pairs, xi_max, points } => {
            if pairs.is_empty() || *points < 2 || !(*xi_max > 0.0) {
                return Err(invalid("multiplier-scan needs pairs, xi_max > 0 and at least 2 points"));
            }
            if let Some(bad) = pairs.iter().flatten().find(|d| !(**d >= 0.0 && **d <= 1.0)) {
                return Err(invalid(format!("multiplier horizon {bad} outside [0, 1]")));
            }
        }
        Experiment::Minimize { integrand, omega, .. } => {
            let grid = grid.as_ref().expect("checked");
            if config.kernel.delta.is_none() || config.kernel.regime.is_none() {
                return Err(invalid("minimize needs kernel.delta and kernel.regime"));
            }
            if config.kernel.regime == Some(Regime::Vanishing) {
                check_resolution(grid, &[config.kernel.delta.expect("checked")])?;
            }
            check_integrand(integrand, dim)?;
            *omega = Some(resolve_omega(omega, grid)?);
        }
        Experiment::GammaSweep { regime, deltas, integrand, omega, .. } => {
            let grid = grid.as_ref().expect("checked");
            check_deltas(&kernel, *regime, deltas)?;
            if *regime == Regime::Vanishing {
                check_resolution(grid, deltas)?;
            }
            check_integrand(integrand, dim)?;
            *omega = Some(resolve_omega(omega, grid)?);
        }
    }
    Ok(Resolved { config, kernel, grid })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOCALIZE: &str = r#"
seed = 1
[kernel]
family = "truncated-fractional"
s = 0.5
[grid]
n = 256
length = 8.0
[experiment]
kind = "localize"
deltas = [0.4, 0.2]
"#;

    #[test]
    fn defaults_are_filled_in() {
        let c = parse(LOCALIZE).unwrap();
        assert_eq!(c.kernel.dim, 1);
        assert_eq!(c.output.formats, vec![Format::Json, Format::Csv]);
        let r = resolve(c).unwrap();
        assert_eq!(r.config.grid.unwrap().dim, Some(1));
        match r.config.experiment {
            Experiment::Localize { norm, test_function, .. } => {
                assert_eq!(norm, Norm::Linf);
                assert_eq!(test_function, TestFunction::smooth());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = LOCALIZE.replace("s = 0.5", "s = 0.5\nspeed = 3");
        assert!(matches!(parse(&text), Err(CliError::Config(m)) if m.contains("speed")));
    }

    #[test]
    fn missing_s_names_the_key() {
        let c = parse(&LOCALIZE.replace("s = 0.5\n", "")).unwrap();
        let err = resolve(c).err().unwrap();
        assert!(err.to_string().contains("kernel.s"));
    }

    #[test]
    fn variable_exponent_needs_samples() {
        let c = parse(&LOCALIZE.replace("truncated-fractional", "variable-exponent")).unwrap();
        assert!(resolve(c).err().unwrap().to_string().contains("kernel.s_fn"));
    }

    #[test]
    fn vanishing_horizon_above_one_cites_the_range() {
        let c = parse(&LOCALIZE.replace("[0.4, 0.2]", "[1.5, 0.2]")).unwrap();
        let err = resolve(c).err().unwrap();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("(0, 1]"), "{err}");
    }

    #[test]
    fn omega_defaults_to_the_middle_half() {
        let text = r#"
[kernel]
family = "truncated-fractional"
s = 0.5
delta = 0.5
regime = "vanishing"
[grid]
n = 64
length = 4.0
[experiment]
kind = "minimize"
integrand = { kind = "power", p = 2.0 }
"#;
        let r = resolve(parse(text).unwrap()).unwrap();
        match r.config.experiment {
            Experiment::Minimize { omega, .. } => assert_eq!(omega, Some(OmegaConfig { lo: vec![1.0], hi: vec![3.0] })),
            _ => unreachable!(),
        }
    }
}
