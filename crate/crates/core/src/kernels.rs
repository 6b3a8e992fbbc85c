//! Radial kernels `rho(x) = rho_bar(|x|)`, their normalization and the two
//! horizon scalings.
//!
//! Compactly supported families are normalized so that `supp rho` is the
//! closed unit ball and `int rho dx = n`. The Riesz family `|x|^{-(n+s-1)}`
//! carries no normalization constant.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Surface measure of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => f64::NAN,
    }
}

/// Kernel family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `w(x) / |x|^{n+s-1}`
    TruncatedFractional,
    /// `w(x) log^kappa(1/|x|) / |x|^{n+s-1}`
    LogCorrected,
    /// `w(x) / |x|^{n+s(|x|)-1}`
    VariableExponent,
    /// `1 / |x|^{n+s-1}` on all of `R^n`
    Riesz,
    /// user supplied profile supported in the unit ball
    Custom,
}

impl Family {
    pub fn all() -> [Family; 5] {
        [
            Family::TruncatedFractional,
            Family::LogCorrected,
            Family::VariableExponent,
            Family::Riesz,
            Family::Custom,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::TruncatedFractional => "truncated-fractional",
            Family::LogCorrected => "log-corrected",
            Family::VariableExponent => "variable-exponent",
            Family::Riesz => "riesz",
            Family::Custom => "custom",
        }
    }
}

/// Radial cutoff `w_bar` with `w(0) > 0` and support in the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cutoff {
    /// `exp(1 - 1/(1 - r^2))` for `r < 1`
    #[default]
    Bump,
    /// indicator of the open unit ball; not smooth at `r = 1`
    Indicator,
}

impl Cutoff {
    pub fn eval(self, r: f64) -> f64 {
        if !(0.0..1.0).contains(&r) {
            return 0.0;
        }
        match self {
            Cutoff::Bump => (1.0 - 1.0 / (1.0 - r * r)).exp(),
            Cutoff::Indicator => 1.0,
        }
    }

    pub fn is_smooth(self) -> bool {
        matches!(self, Cutoff::Bump)
    }
}

/// Samples of a fractional exponent `s(r)` on an equispaced grid of `[0, 1]`,
/// linearly interpolated and held constant for `r > 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentProfile {
    samples: Vec<f64>,
}

impl ExponentProfile {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSpec("s_fn needs at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::InvalidSpec(format!(
                "s_fn sample {bad} outside (0, 1)"
            )));
        }
        Ok(Self { samples })
    }

    /// Samples `f` at `count` equispaced points of `[0, 1]`.
    pub fn from_fn(count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let m = count.max(2);
        Self::new((0..m).map(|j| f(j as f64 / (m - 1) as f64)).collect())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn eval(&self, r: f64) -> f64 {
        let m = self.samples.len();
        if m == 1 || r <= 0.0 {
            return self.samples[0];
        }
        if r >= 1.0 {
            return self.samples[m - 1];
        }
        let t = r * (m - 1) as f64;
        let j = (t.floor() as usize).min(m - 2);
        let frac = t - j as f64;
        self.samples[j] * (1.0 - frac) + self.samples[j + 1] * frac
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// User supplied radial profile, assumed supported in `[0, 1]`.
#[derive(Clone)]
pub struct CustomProfile {
    pub profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub sigma: f64,
    pub gamma: f64,
    pub label: String,
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomProfile")
            .field("label", &self.label)
            .field("sigma", &self.sigma)
            .field("gamma", &self.gamma)
            .finish()
    }
}

/// Everything needed to assemble a kernel profile.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    pub family: Family,
    pub s: f64,
    pub kappa: i32,
    pub s_fn: Option<ExponentProfile>,
    pub cutoff: Cutoff,
    pub dim: usize,
    pub custom: Option<CustomProfile>,
}

impl KernelSpec {
    pub fn truncated_fractional(s: f64, dim: usize) -> Self {
        Self {
            family: Family::TruncatedFractional,
            s,
            kappa: 1,
            s_fn: None,
            cutoff: Cutoff::Bump,
            dim,
            custom: None,
        }
    }

    pub fn log_corrected(s: f64, kappa: i32, dim: usize) -> Self {
        Self {
            family: Family::LogCorrected,
            kappa,
            ..Self::truncated_fractional(s, dim)
        }
    }

    pub fn variable_exponent(s_fn: ExponentProfile, dim: usize) -> Self {
        let s0 = s_fn.eval(0.0);
        Self {
            family: Family::VariableExponent,
            s: s0,
            s_fn: Some(s_fn),
            ..Self::truncated_fractional(s0, dim)
        }
    }

    pub fn riesz(s: f64, dim: usize) -> Self {
        Self {
            family: Family::Riesz,
            ..Self::truncated_fractional(s, dim)
        }
    }

    pub fn custom(profile: CustomProfile, dim: usize) -> Self {
        Self {
            family: Family::Custom,
            s: profile.sigma,
            custom: Some(profile),
            ..Self::truncated_fractional(0.5, dim)
        }
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::UnsupportedDim(self.dim));
        }
        match self.family {
            Family::TruncatedFractional | Family::LogCorrected | Family::Riesz => {
                if !(self.s > 0.0 && self.s < 1.0) {
                    return Err(Error::InvalidSpec(format!("s = {} outside (0, 1)", self.s)));
                }
            }
            Family::VariableExponent => {
                if self.s_fn.is_none() {
                    return Err(Error::InvalidSpec(
                        "variable-exponent kernel needs s_fn samples".into(),
                    ));
                }
            }
            Family::Custom => {
                let c = self.custom.as_ref().ok_or_else(|| {
                    Error::InvalidSpec("custom kernel needs a profile".into())
                })?;
                if !(c.sigma > 0.0 && c.sigma <= c.gamma && c.gamma < 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "custom kernel needs 0 < sigma <= gamma < 1, got ({}, {})",
                        c.sigma, c.gamma
                    )));
                }
            }
        }
        if self.family == Family::LogCorrected && self.kappa != 1 && self.kappa != -1 {
            return Err(Error::InvalidSpec(format!(
                "kappa must be +1 or -1, got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    fn is_compact(&self) -> bool {
        self.family != Family::Riesz
    }

    /// Unnormalized radial profile.
    fn raw(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return f64::INFINITY;
        }
        let n = self.dim as f64;
        match self.family {
            Family::Riesz => r.powf(-(n + self.s - 1.0)),
            Family::Custom => {
                if r >= 1.0 {
                    0.0
                } else {
                    (self.custom.as_ref().expect("validated").profile)(r)
                }
            }
            _ if r >= 1.0 => 0.0,
            Family::TruncatedFractional => self.cutoff.eval(r) * r.powf(-(n + self.s - 1.0)),
            Family::LogCorrected => {
                let w = self.cutoff.eval(r);
                if w == 0.0 {
                    return 0.0;
                }
                w * (-r.ln()).powi(self.kappa) * r.powf(-(n + self.s - 1.0))
            }
            Family::VariableExponent => {
                let s = self.s_fn.as_ref().expect("validated").eval(r);
                self.cutoff.eval(r) * r.powf(-(n + s - 1.0))
            }
        }
    }

    /// The `w / r^{1+s}` style monotonicity condition that the example families require.
    fn monotone_factor(&self, r: f64) -> Option<f64> {
        let w = self.cutoff.eval(r);
        match self.family {
            Family::TruncatedFractional => Some(w / r.powf(1.0 + self.s)),
            Family::LogCorrected => Some(if w == 0.0 {
                0.0
            } else {
                w * (-r.ln()).powi(self.kappa) / r.powf(1.0 + self.s)
            }),
            Family::VariableExponent => {
                let s = self.s_fn.as_ref().expect("validated").eval(r);
                Some(w / r.powf(1.0 + s))
            }
            _ => None,
        }
    }
}

/// A normalized radial kernel together with its hypothesis exponents.
#[derive(Clone, Debug)]
pub struct Kernel {
    spec: KernelSpec,
    norm_const: f64,
    sigma: f64,
    gamma: f64,
    epsilon: f64,
    warnings: Vec<String>,
}

/// Serializable description of a built kernel.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KernelSummary {
    pub family: Family,
    pub dim: usize,
    pub s: f64,
    pub kappa: Option<i32>,
    pub s_fn: Option<Vec<f64>>,
    pub cutoff: Option<Cutoff>,
    pub norm_const: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub epsilon: Option<f64>,
    pub warnings: Vec<String>,
}

/// Builds a kernel from its specification, fixing the normalization constant
/// and the exponents `sigma <= gamma`.
pub fn make_kernel(spec: KernelSpec) -> Result<Kernel> {
    spec.validate()?;
    let n = spec.dim;
    let s = spec.s;
    let (sigma, gamma) = match spec.family {
        Family::TruncatedFractional | Family::Riesz => (s, s),
        Family::LogCorrected if spec.kappa == 1 => (s, 0.5 * (s + 1.0)),
        Family::LogCorrected => (0.5 * s, s),
        Family::VariableExponent => {
            let p = spec.s_fn.as_ref().expect("validated");
            (p.min(), p.max())
        }
        Family::Custom => {
            let c = spec.custom.as_ref().expect("validated");
            (c.sigma, c.gamma)
        }
    };
    if !spec.is_compact() {
        return Ok(Kernel {
            spec,
            norm_const: 1.0,
            sigma,
            gamma,
            epsilon: f64::INFINITY,
            warnings: Vec::new(),
        });
    }

    let integrand = |r: f64| spec.raw(r) * r.powi(n as i32 - 1);
    let mass = quadrature::singular_at_zero(&integrand, 1.0, Tolerance::new(1e-13, 1e-12))
        .map_err(|e| Error::NormalizationFailure(e.to_string()))?
        .value
        * sphere_area(n);
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::NormalizationFailure(format!(
            "kernel mass {mass} is not a positive finite number"
        )));
    }

    let mut warnings = Vec::new();
    if spec.monotone_factor(0.5).is_some() {
        let grid = log_grid(1e-6, 0.999, 400);
        let mut worst: Option<f64> = None;
        for pair in grid.windows(2) {
            let a = spec.monotone_factor(pair[0]).unwrap_or(0.0);
            let b = spec.monotone_factor(pair[1]).unwrap_or(0.0);
            if b > a * (1.0 + 1e-12) {
                worst.get_or_insert(pair[1]);
            }
        }
        if let Some(r) = worst {
            warnings.push(format!(
                "w / |x|^(1+s) is not radially decreasing (first increase near r = {r:.4e})"
            ));
        }
    }
    if !spec.cutoff.is_smooth() {
        warnings.push("cutoff is not smooth at r = 1".into());
    }

    Ok(Kernel {
        norm_const: n as f64 / mass,
        spec,
        sigma,
        gamma,
        epsilon: 1.0,
        warnings,
    })
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

impl Kernel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Radius on which the profile is bounded below; `inf` for the Riesz family.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_compact(&self) -> bool {
        self.spec.is_compact()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Normalized radial profile `rho_bar(r)`.
    pub fn rho_bar(&self, r: f64) -> f64 {
        self.norm_const * self.spec.raw(r)
    }

    /// `int_{R^n} rho dx` by radial quadrature (`inf` for the Riesz family).
    pub fn mass(&self) -> Result<f64> {
        if !self.is_compact() {
            return Ok(f64::INFINITY);
        }
        let n = self.dim();
        let f = |r: f64| self.rho_bar(r) * r.powi(n as i32 - 1);
        Ok(sphere_area(n) * quadrature::singular_at_zero(&f, 1.0, Tolerance::new(1e-13, 1e-12))?.value)
    }

    /// Limit exponent known in closed form for the shipped families.
    pub fn analytic_s_inf(&self) -> Option<f64> {
        match self.spec.family {
            Family::TruncatedFractional | Family::LogCorrected | Family::Riesz => Some(self.spec.s),
            Family::VariableExponent => self.spec.s_fn.as_ref().map(|p| p.eval(0.0)),
            Family::Custom => None,
        }
    }

    pub fn summary(&self) -> KernelSummary {
        let fam = self.spec.family;
        KernelSummary {
            family: fam,
            dim: self.dim(),
            s: self.spec.s,
            kappa: (fam == Family::LogCorrected).then_some(self.spec.kappa),
            s_fn: self.spec.s_fn.as_ref().map(|p| p.samples().to_vec()),
            cutoff: self.is_compact().then_some(self.spec.cutoff),
            norm_const: self.norm_const,
            sigma: self.sigma,
            gamma: self.gamma,
            epsilon: self.epsilon.is_finite().then_some(self.epsilon),
            warnings: self.warnings.clone(),
        }
    }
}

/// Horizon scaling regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `c_delta = delta^{-n}`, `delta in (0, 1]`
    Vanishing,
    /// `c_delta = rho_bar(1/delta)^{-1}`, `delta > 1/epsilon`
    Diverging,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Vanishing => "vanishing",
            Regime::Diverging => "diverging",
        }
    }
}

/// `rho_delta = c_delta rho(. / delta)`.
#[derive(Clone, Debug)]
pub struct ScaledKernel {
    base: Kernel,
    delta: f64,
    regime: Regime,
    c_delta: f64,
}

pub fn scale_kernel(kernel: &Kernel, delta: f64, regime: Regime) -> Result<ScaledKernel> {
    let n = kernel.dim() as i32;
    let c_delta = match regime {
        Regime::Vanishing => {
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::OutOfRangeDelta {
                    delta,
                    regime: regime.name(),
                    range: "(0, 1]".into(),
                });
            }
            delta.powi(-n)
        }
        Regime::Diverging => {
            let lower = 1.0 / kernel.epsilon();
            if !(delta > lower && delta.is_finite()) {
                return Err(Error::OutOfRangeDelta {
                    delta,
                    regime: regime.name(),
                    range: format!("({lower}, inf)"),
                });
            }
            let at = kernel.rho_bar(1.0 / delta);
            if !(at > 0.0) {
                return Err(Error::ZeroProfile(1.0 / delta));
            }
            1.0 / at
        }
    };
    Ok(ScaledKernel {
        base: kernel.clone(),
        delta,
        regime,
        c_delta,
    })
}

impl ScaledKernel {
    pub fn base(&self) -> &Kernel {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn c_delta(&self) -> f64 {
        self.c_delta
    }

    pub fn rho_bar(&self, r: f64) -> f64 {
        if self.delta == 1.0 && self.c_delta == 1.0 {
            return self.base.rho_bar(r);
        }
        self.c_delta * self.base.rho_bar(r / self.delta)
    }

    /// Support radius (`inf` for the Riesz family).
    pub fn horizon(&self) -> f64 {
        if self.base.is_compact() {
            self.delta
        } else {
            f64::INFINITY
        }
    }

    /// Multiplier applied to `Q_hat(delta xi)`: `c_delta delta^n`.
    pub fn symbol_factor(&self) -> f64 {
        self.c_delta * self.delta.powi(self.base.dim() as i32)
    }

    pub fn mass(&self) -> Result<f64> {
        Ok(self.base.mass()? * self.symbol_factor())
    }
}

/// Default horizons for estimating the limit exponent.
pub const DEFAULT_LIMIT_DELTAS: [f64; 7] = [1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8];

/// Per-horizon estimates of the limit exponent and their extrapolation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LimitExponent {
    pub deltas: Vec<f64>,
    pub estimates: Vec<f64>,
    pub extrapolated: f64,
}

/// Estimates `s_inf = lim log(rho_bar(1/delta)^{-1} rho_bar(1/(e delta))) - n + 1`.
///
/// When successive differences of the last three estimates contract by more
/// than a factor two the tail is summed geometrically. Otherwise the
/// convergence is taken to be logarithmic (log-corrected kernels) and a
/// quadratic in `1/ln(delta)` is evaluated at zero.
pub fn limit_exponent(kernel: &Kernel, deltas: &[f64]) -> Result<LimitExponent> {
    if deltas.is_empty() {
        return Err(Error::InvalidInput("empty horizon list".into()));
    }
    if deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("horizon list must be increasing".into()));
    }
    let lower = 1.0 / kernel.epsilon();
    let n = kernel.dim() as f64;
    let mut estimates = Vec::with_capacity(deltas.len());
    for &d in deltas {
        if d <= lower {
            return Err(Error::OutOfRangeDelta {
                delta: d,
                regime: "diverging",
                range: format!("({lower}, inf)"),
            });
        }
        let a = kernel.rho_bar(1.0 / d);
        if !(a > 0.0) {
            return Err(Error::ZeroProfile(1.0 / d));
        }
        let b = kernel.rho_bar(1.0 / (std::f64::consts::E * d));
        estimates.push((b / a).ln() - n + 1.0);
    }
    let extrapolated = extrapolate_log(deltas, &estimates);
    Ok(LimitExponent {
        deltas: deltas.to_vec(),
        estimates,
        extrapolated,
    })
}

fn extrapolate_log(deltas: &[f64], values: &[f64]) -> f64 {
    let m = values.len();
    let last = values[m - 1];
    if m < 3 || deltas.iter().any(|&d| d <= 1.0) {
        return last;
    }
    let d1 = values[m - 2] - values[m - 3];
    let d2 = last - values[m - 2];
    if d2 == 0.0 {
        return last;
    }
    let q = d2 / d1;
    if q.abs() < 0.5 {
        // algebraic convergence: geometric tail of the differences
        return last + d2 * q / (1.0 - q);
    }
    let xs: Vec<f64> = deltas[m - 3..].iter().map(|d| 1.0 / d.ln()).collect();
    neville(&xs, &values[m - 3..], 0.0)
}

/// Polynomial interpolation through `(xs, ys)` evaluated at `x`.
pub(crate) fn neville(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut p = ys.to_vec();
    let m = xs.len();
    for level in 1..m {
        for i in 0..m - level {
            let j = i + level;
            p[i] = ((x - xs[j]) * p[i] + (xs[i] - x) * p[i + 1]) / (xs[i] - xs[j]);
        }
    }
    p[0]
}

/// Outcome of one grid check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    /// monotonicity or derivative-ratio constant found on the grid
    pub max_violation: f64,
    pub worst_r: f64,
}

/// Numeric spot checks of the kernel hypotheses on a radial grid.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HypothesisReport {
    /// `f_rho(r) = r^{n-2} rho_bar(r)` non-increasing
    pub f_rho_decreasing: Verdict,
    /// largest `nu` for which `r^nu f_rho(r)` is non-increasing on the grid
    pub nu_max: Option<f64>,
    /// `|f'| <= C_1 f / r` (finite differences)
    pub first_derivative: Verdict,
    /// `|f''| <= C_2 f / r^2` (finite differences)
    pub second_derivative: Verdict,
    /// `r^{n+sigma-1} rho_bar` almost decreasing
    pub almost_decreasing: Verdict,
    /// `r^{n+gamma-1} rho_bar` almost increasing
    pub almost_increasing: Verdict,
    pub tolerance: f64,
    pub grid_points: usize,
    pub notes: Vec<String>,
}

/// Upper bound on the finite-difference constants `C_1`, `C_2` before the derivative check fails.
pub const DERIVATIVE_RATIO_LIMIT: f64 = 1e3;

/// Default grid for [`check_hypotheses`]: 200 log-spaced radii in `[1e-6, 0.1]`.
pub fn default_hypothesis_grid() -> Vec<f64> {
    log_grid(1e-6, 0.1, 200)
}

/// Checks the kernel hypotheses on `r_grid`. Almost-monotonicity constants pass when they
/// do not exceed `1 + tol`.
pub fn check_hypotheses(kernel: &Kernel, r_grid: &[f64], tol: f64) -> HypothesisReport {
    let n = kernel.dim() as i32;
    let f = |r: f64| r.powi(n - 2) * kernel.rho_bar(r);
    let inside: Vec<f64> = r_grid
        .iter()
        .copied()
        .filter(|&r| r > 0.0 && r < kernel.epsilon())
        .collect();
    let mut notes = Vec::new();

    // f_rho and r^nu f_rho non-increasing
    let mut decreasing = Verdict { pass: true, max_violation: 1.0, worst_r: f64::NAN };
    for w in r_grid.windows(2) {
        let (a, b) = (f(w[0]), f(w[1]));
        if a > 0.0 {
            let ratio = b / a;
            if ratio > decreasing.max_violation {
                decreasing.max_violation = ratio;
                decreasing.worst_r = w[1];
            }
        }
    }
    decreasing.pass = decreasing.max_violation <= 1.0 + 1e-12;
    let mut nu_max = f64::INFINITY;
    for w in inside.windows(2) {
        let (a, b) = (f(w[0]), f(w[1]));
        if b > 0.0 && a > 0.0 {
            nu_max = nu_max.min((a / b).ln() / (w[1] / w[0]).ln());
        }
    }
    let nu_max = (nu_max.is_finite() && nu_max > 0.0).then_some(nu_max);
    if nu_max.is_none() {
        notes.push("no nu > 0 makes r^nu f_rho decreasing on the grid".into());
    }

    // derivative ratios
    let mut c1 = Verdict { pass: true, max_violation: 0.0, worst_r: f64::NAN };
    let mut c2 = c1;
    for &r in &inside {
        let h = r * 1e-4;
        let (fm, f0, fp) = (f(r - h), f(r), f(r + h));
        if f0 <= 0.0 {
            continue;
        }
        let d1 = (fp - fm) / (2.0 * h);
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        let k1 = d1.abs() * r / f0;
        let k2 = d2.abs() * r * r / f0;
        if k1 > c1.max_violation {
            c1.max_violation = k1;
            c1.worst_r = r;
        }
        if k2 > c2.max_violation {
            c2.max_violation = k2;
            c2.worst_r = r;
        }
    }
    let smooth = !kernel.is_compact() || kernel.spec().cutoff.is_smooth() || kernel.family() == Family::Custom;
    c1.pass = c1.max_violation <= DERIVATIVE_RATIO_LIMIT && smooth;
    c2.pass = c2.max_violation <= DERIVATIVE_RATIO_LIMIT && smooth;
    if !smooth {
        notes.push("derivative check fails: f_rho is not smooth at the cutoff radius".into());
    }

    // almost decreasing and almost increasing weighted profiles
    let g3: Vec<f64> = inside
        .iter()
        .map(|&r| r.powf(n as f64 + kernel.sigma() - 1.0) * kernel.rho_bar(r))
        .collect();
    let g4: Vec<f64> = inside
        .iter()
        .map(|&r| r.powf(n as f64 + kernel.gamma() - 1.0) * kernel.rho_bar(r))
        .collect();
    let mut almost_decreasing = Verdict { pass: true, max_violation: 1.0, worst_r: f64::NAN };
    let mut running_min = f64::INFINITY;
    for (i, &g) in g3.iter().enumerate() {
        running_min = running_min.min(g);
        if running_min > 0.0 && g / running_min > almost_decreasing.max_violation {
            almost_decreasing.max_violation = g / running_min;
            almost_decreasing.worst_r = inside[i];
        }
    }
    let mut almost_increasing = Verdict { pass: true, max_violation: 1.0, worst_r: f64::NAN };
    let mut running_max: f64 = 0.0;
    for (i, &g) in g4.iter().enumerate() {
        running_max = running_max.max(g);
        let c = if g > 0.0 { running_max / g } else if running_max > 0.0 { f64::INFINITY } else { 1.0 };
        if c > almost_increasing.max_violation {
            almost_increasing.max_violation = c;
            almost_increasing.worst_r = inside[i];
        }
    }
    almost_decreasing.pass = almost_decreasing.max_violation <= 1.0 + tol;
    almost_increasing.pass = almost_increasing.max_violation <= 1.0 + tol;

    HypothesisReport {
        f_rho_decreasing: decreasing,
        nu_max,
        first_derivative: c1,
        second_derivative: c2,
        almost_decreasing,
        almost_increasing,
        tolerance: tol,
        grid_points: r_grid.len(),
        notes,
    }
}

/// Tightest constants with `c min{r^-(n+sigma-1), r^-(n+gamma-1)} <= rho_bar_delta(r)
/// <= C max{...}` on the given radii.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct WedgeBounds {
    pub c_low: f64,
    pub c_high: f64,
}

pub fn wedge_check(sk: &ScaledKernel, x_grid: &[f64]) -> Result<WedgeBounds> {
    if sk.regime() != Regime::Diverging {
        return Err(Error::InvalidInput("wedge bounds apply to the diverging regime".into()));
    }
    let k = sk.base();
    let n = k.dim() as f64;
    let reach = sk.delta() * k.epsilon();
    let mut c_low = f64::INFINITY;
    let mut c_high: f64 = 0.0;
    for &r in x_grid.iter().filter(|&&r| r > 0.0 && r < reach) {
        let a = r.powf(-(n + k.sigma() - 1.0));
        let b = r.powf(-(n + k.gamma() - 1.0));
        let v = sk.rho_bar(r);
        c_low = c_low.min(v / a.min(b));
        c_high = c_high.max(v / a.max(b));
    }
    if !c_low.is_finite() {
        return Err(Error::InvalidInput("no grid point inside (0, delta * epsilon)".into()));
    }
    Ok(WedgeBounds { c_low, c_high })
}

/// `|| (rho_delta - rho_inf) min{1, |x|^{-1}} ||_{L^1(R^n)}` for the diverging
/// scaling, with `rho_inf = |x|^{-(n+s_inf-1)}` and `s_inf` extrapolated from
/// [`DEFAULT_LIMIT_DELTAS`].
pub fn l1_distance_to_limit(kernel: &Kernel, delta: f64) -> Result<f64> {
    if kernel.family() == Family::Riesz {
        // rho_delta equals rho_inf identically under the diverging scaling
        scale_kernel(kernel, delta, Regime::Diverging)?;
        return Ok(0.0);
    }
    let s_inf = limit_exponent(kernel, &DEFAULT_LIMIT_DELTAS)?.extrapolated;
    l1_distance_with_exponent(kernel, delta, s_inf)
}

/// [`l1_distance_to_limit`] against a given limit exponent.
pub fn l1_distance_with_exponent(kernel: &Kernel, delta: f64, s_inf: f64) -> Result<f64> {
    let sk = scale_kernel(kernel, delta, Regime::Diverging)?;
    let n = kernel.dim() as i32;
    let p = n as f64 + s_inf - 1.0;
    let diff = |r: f64| (sk.rho_bar(r) - r.powf(-p)).abs();
    let tol = Tolerance::new(1e-12, 1e-9);
    let inner = quadrature::singular_at_zero(&|r: f64| diff(r) * r.powi(n - 1), 1.0, tol)?.value;
    let middle = quadrature::log_graded(&|r: f64| diff(r) * r.powi(n - 2), 1.0, delta, tol)?.value;
    let outer = delta.powf(-s_inf) / s_inf;
    Ok(sphere_area(kernel.dim()) * (inner + middle + outer))
}
