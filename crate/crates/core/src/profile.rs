//! The profile `Q_rho(x) = Q_bar(|x|)`, `Q_bar(r) = int_r^inf rho_bar(t)/t dt`,
//! its Fourier transform, and symbol tables of the scaled gradient on a grid.
//!
//! `D_rho u` has Fourier symbol `2 pi i xi Q_hat(xi)`. For compact kernels the
//! transform is evaluated from `rho_bar` after one integration by parts:
//!
//! * `n = 1`: `Q_hat(xi) = (pi xi)^{-1} int_0^1 rho_bar(r) sin(2 pi xi r) / r dr`
//! * `n = 2`: `Q_hat(xi) = xi^{-1} int_0^1 rho_bar(r) J_1(2 pi xi r) dr`
//!
//! which avoids the nested integral hidden in `Q_bar`. The direct cosine and
//! `J_0` transforms of `Q_bar` are available in [`symbol_via_profile`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{write_table, Grid};
use crate::kernels::{Family, Kernel, Regime, ScaledKernel};
use crate::parallel::par_map;
use crate::quadrature::{self, Oscillator, Tolerance};

/// `Q_bar(r)` by direct quadrature; closed form for the Riesz family.
pub fn q_profile(kernel: &Kernel, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("q_profile needs r > 0, got {r}")));
    }
    let n = kernel.dim() as f64;
    if kernel.family() == Family::Riesz {
        let p = n + kernel.spec().s - 1.0;
        return Ok(kernel.norm_const() * r.powf(-p) / p);
    }
    if r >= 1.0 {
        return Ok(0.0);
    }
    let f = |t: f64| kernel.rho_bar(t) / t;
    Ok(quadrature::log_graded(&f, r, 1.0, Tolerance::new(1e-14, 1e-11))?.value)
}

const ANCHOR_MIN: f64 = 1e-8;
const ANCHORS_PER_DECADE: usize = 24;

/// `Q_bar` with cached values at log-spaced anchors; each evaluation adds one
/// short quadrature from `r` up to the next anchor.
#[derive(Clone, Debug)]
pub struct ProfileEval {
    kernel: Kernel,
    anchors: Vec<f64>,
    values: Vec<f64>,
}

impl ProfileEval {
    pub fn new(kernel: &Kernel) -> Result<Self> {
        if kernel.family() == Family::Riesz {
            return Ok(Self { kernel: kernel.clone(), anchors: Vec::new(), values: Vec::new() });
        }
        let decades = (1.0 / ANCHOR_MIN).log10().round() as usize;
        let count = decades * ANCHORS_PER_DECADE + 1;
        let anchors = crate::kernels::log_grid(ANCHOR_MIN, 1.0, count);
        let f = |t: f64| kernel.rho_bar(t) / t;
        let tol = Tolerance::new(1e-15, 1e-12);
        let mut values = vec![0.0; count];
        for j in (0..count - 1).rev() {
            let piece = quadrature::adaptive(&f, anchors[j], anchors[j + 1], tol)?.value;
            values[j] = values[j + 1] + piece;
        }
        Ok(Self { kernel: kernel.clone(), anchors, values })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn q_bar(&self, r: f64) -> Result<f64> {
        if self.anchors.is_empty() || r <= 0.0 {
            return q_profile(&self.kernel, r);
        }
        if r >= 1.0 {
            return Ok(0.0);
        }
        let f = |t: f64| self.kernel.rho_bar(t) / t;
        let tol = Tolerance::new(1e-15, 1e-12);
        if r < ANCHOR_MIN {
            return Ok(self.values[0] + quadrature::log_graded(&f, r, ANCHOR_MIN, tol)?.value);
        }
        let j = self.anchors.partition_point(|&a| a <= r).min(self.anchors.len() - 1);
        if self.anchors[j - 1] == r {
            return Ok(self.values[j - 1]);
        }
        Ok(self.values[j] + quadrature::adaptive(&f, r, self.anchors[j], tol)?.value)
    }
}

/// Closed-form Riesz symbol: the transform of `|x|^{-(n+s-1)} / (n+s-1)`,
/// `(n+s-1)^{-1} pi^{n/2-(1-s)} Gamma((1-s)/2) / Gamma((n+s-1)/2) |xi|^{s-1}`.
pub fn riesz_symbol(s: f64, n: usize, xi: f64) -> f64 {
    if xi == 0.0 {
        return f64::INFINITY;
    }
    riesz_constant(s, n) * xi.abs().powf(s - 1.0)
}

pub fn riesz_constant(s: f64, n: usize) -> f64 {
    let nf = n as f64;
    PI.powf(0.5 * nf - (1.0 - s)) * libm::tgamma(0.5 * (1.0 - s))
        / (libm::tgamma(0.5 * (nf + s - 1.0)) * (nf + s - 1.0))
}

const SYMBOL_TOL: Tolerance = Tolerance { abs: 1e-15, rel: 1e-11 };

/// `Q_hat_rho(xi)` for the base kernel.
pub fn symbol(kernel: &Kernel, xi: f64) -> Result<f64> {
    let xi = xi.abs();
    let n = kernel.dim();
    if kernel.family() == Family::Riesz {
        return Ok(kernel.norm_const() * riesz_symbol(kernel.spec().s, n, xi));
    }
    if xi == 0.0 {
        return Ok(kernel.mass()? / n as f64);
    }
    let k = 2.0 * PI * xi;
    if n == 1 {
        let g = |r: f64| kernel.rho_bar(r) / r;
        Ok(quadrature::oscillatory(&g, k, Oscillator::Sin, Some(1.0), SYMBOL_TOL)?.value / (PI * xi))
    } else {
        let g = |r: f64| kernel.rho_bar(r);
        Ok(quadrature::oscillatory(&g, k, Oscillator::J1, Some(1.0), SYMBOL_TOL)?.value / xi)
    }
}

/// `Q_hat_rho(xi)` as the radial transform of `Q_bar`:
/// `2 int Q_bar(r) cos(2 pi r xi) dr` (`n = 1`) or `2 pi int Q_bar(r) J_0(2 pi r xi) r dr` (`n = 2`).
pub fn symbol_via_profile(pe: &ProfileEval, xi: f64) -> Result<f64> {
    let kernel = pe.kernel();
    if kernel.family() == Family::Riesz {
        return symbol(kernel, xi);
    }
    let xi = xi.abs();
    let n = kernel.dim();
    let tol = Tolerance::new(1e-13, 1e-9);
    let q = |r: f64| pe.q_bar(r).unwrap_or(f64::NAN);
    if xi == 0.0 {
        let f = |r: f64| q(r) * r.powi(n as i32 - 1);
        let v = quadrature::singular_at_zero(&f, 1.0, tol)?.value;
        return Ok(if n == 1 { 2.0 * v } else { 2.0 * PI * v });
    }
    let k = 2.0 * PI * xi;
    if n == 1 {
        Ok(2.0 * quadrature::oscillatory(&q, k, Oscillator::Cos, Some(1.0), tol)?.value)
    } else {
        let g = |r: f64| q(r) * r;
        Ok(2.0 * PI * quadrature::oscillatory(&g, k, Oscillator::J0, Some(1.0), tol)?.value)
    }
}

/// Natural cubic spline through `(x_i, y_i)`, `x` increasing.
#[derive(Clone, Debug)]
struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for the interior second derivatives
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let cc = h1 / 6.0;
                let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                let denom = b - a * c[i - 1];
                c[i] = cc / denom;
                d[i] = (rhs - a * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let j = self.x.partition_point(|&v| v <= t).clamp(1, n - 1);
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        a * self.y[j - 1]
            + b * self.y[j]
            + ((a * a * a - a) * self.m[j - 1] + (b * b * b - b) * self.m[j]) * h * h / 6.0
    }
}

/// Lower end of the tabulated range of `|xi|`.
pub const TABLE_XI_MIN: f64 = 1e-4;
/// Table resolution.
pub const TABLE_POINTS_PER_DECADE: usize = 128;
/// Upper end beyond which the table is never extended.
pub const TABLE_XI_CAP: f64 = 1e5;

#[derive(Clone, Debug)]
enum CacheKind {
    Riesz { constant: f64, s: f64 },
    Table {
        spline: CubicSpline,
        log_mode: bool,
        q0: f64,
        q_lo: f64,
        q_hi: f64,
        xi_hi: f64,
        rho_hi: f64,
        accuracy: f64,
    },
}

/// Interpolation table of the base symbol `Q_hat_rho` in `|xi|`, reused for
/// every horizon through the scaling identities.
///
/// Values are splined in `(ln xi, ln Q_hat)` on `[1e-4, xi_hi]`. Below the
/// table the symbol is continued quadratically to `Q_hat(0)`; above it the
/// shape `rho_bar(1/xi) / xi^n` is used.
#[derive(Clone, Debug)]
pub struct SymbolCache {
    kernel: Kernel,
    kind: CacheKind,
}

impl SymbolCache {
    /// Builds a table that covers `|xi| <= xi_max` (capped at `1e5`).
    pub fn new(kernel: &Kernel, xi_max: f64) -> Result<Self> {
        if kernel.family() == Family::Riesz {
            return Ok(Self {
                kernel: kernel.clone(),
                kind: CacheKind::Riesz {
                    constant: kernel.norm_const() * riesz_constant(kernel.spec().s, kernel.dim()),
                    s: kernel.spec().s,
                },
            });
        }
        let xi_hi = (1.05 * xi_max).clamp(10.0, TABLE_XI_CAP);
        let decades = (xi_hi / TABLE_XI_MIN).log10();
        let count = (decades * TABLE_POINTS_PER_DECADE as f64).ceil() as usize + 1;
        let xs = crate::kernels::log_grid(TABLE_XI_MIN, xi_hi, count);
        let values: Vec<Result<f64>> = par_map(&xs, |&xi| symbol(kernel, xi));
        let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
        let log_mode = values.iter().all(|&v| v > 0.0);
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = if log_mode { values.iter().map(|v| v.ln()).collect() } else { values.clone() };
        let spline = CubicSpline::new(lx, ly);
        let q0 = symbol(kernel, 0.0)?;
        let rho_hi = kernel.rho_bar(1.0 / xi_hi);
        let mut cache = Self {
            kernel: kernel.clone(),
            kind: CacheKind::Table {
                spline,
                log_mode,
                q0,
                q_lo: values[0],
                q_hi: values[count - 1],
                xi_hi,
                rho_hi,
                accuracy: 0.0,
            },
        };
        // midpoint checks at the low, middle and high end
        let probes: Vec<f64> = [1, count / 2, count - 2]
            .iter()
            .map(|&j| (xs[j] * xs[j + 1]).sqrt())
            .collect();
        let exact: Vec<Result<f64>> = par_map(&probes, |&xi| symbol(kernel, xi));
        let mut acc: f64 = 0.0;
        for (xi, e) in probes.iter().zip(exact) {
            let e = e?;
            acc = acc.max((cache.eval(*xi) - e).abs() / e.abs().max(1e-300));
        }
        if let CacheKind::Table { accuracy, .. } = &mut cache.kind {
            *accuracy = acc.max(1e-12);
        }
        Ok(cache)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Upper end of the tabulated range (`inf` for closed forms).
    pub fn xi_max(&self) -> f64 {
        match &self.kind {
            CacheKind::Riesz { .. } => f64::INFINITY,
            CacheKind::Table { xi_hi, .. } => *xi_hi,
        }
    }

    /// Largest relative interpolation error seen at the build-time probes.
    pub fn relative_accuracy(&self) -> f64 {
        match &self.kind {
            CacheKind::Riesz { .. } => f64::EPSILON,
            CacheKind::Table { accuracy, .. } => *accuracy,
        }
    }

    /// `Q_hat_rho(|xi|)`.
    pub fn eval(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        match &self.kind {
            CacheKind::Riesz { constant, s } => {
                if xi == 0.0 {
                    f64::INFINITY
                } else {
                    constant * xi.powf(s - 1.0)
                }
            }
            CacheKind::Table { spline, log_mode, q0, q_lo, q_hi, xi_hi, rho_hi, .. } => {
                if xi < TABLE_XI_MIN {
                    let t = xi / TABLE_XI_MIN;
                    q0 + (q_lo - q0) * t * t
                } else if xi > *xi_hi {
                    let n = self.kernel.dim() as i32;
                    q_hi * (self.kernel.rho_bar(1.0 / xi) / rho_hi) * (xi_hi / xi).powi(n)
                } else {
                    let v = spline.eval(xi.ln());
                    if *log_mode {
                        v.exp()
                    } else {
                        v
                    }
                }
            }
        }
    }

    pub fn write_csv(&self, path: &Path, xi_grid: &[f64]) -> Result<()> {
        let rows: Vec<Vec<f64>> = xi_grid.iter().map(|&x| vec![x, self.eval(x)]).collect();
        write_table(path, &["xi", "q_hat"], &rows)
    }
}

/// What a symbol table represents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SymbolKind {
    Scaled { delta: f64, regime: Regime },
    Classical,
    Riesz { s: f64 },
}

/// `Q_hat` and the gradient symbol on the frequencies of a grid.
///
/// `grad[k][i]` stores the imaginary part of `m_k(xi_i) = 2 pi i xi_k Q_hat(xi_i)`.
/// It is set to zero at `xi = 0` and wherever `xi_k` is the Nyquist frequency.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    grid: Grid,
    kind: SymbolKind,
    q_hat: Vec<f64>,
    grad: Vec<Vec<f64>>,
}

impl SymbolTable {
    /// Evaluates `q(|xi|)` once per distinct frequency radius.
    pub fn from_radial(grid: &Grid, kind: SymbolKind, q: impl Fn(f64) -> f64) -> Self {
        let n = grid.points_per_axis();
        let len = grid.len();
        let mut seen: HashMap<u64, f64> = HashMap::new();
        let mut q_hat = vec![0.0; len];
        let mut grad = vec![vec![0.0; len]; grid.dim()];
        for (idx, slot) in q_hat.iter_mut().enumerate() {
            let xi = grid.frequency_vector(idx);
            // integer key k0^2 + k1^2 makes radially equal frequencies share one value
            let key: u64 = xi
                .iter()
                .map(|v| {
                    let k = (v * grid.length()).round() as i64;
                    (k * k) as u64
                })
                .sum();
            let mag = (key as f64).sqrt() / grid.length();
            let v = *seen.entry(key).or_insert_with(|| q(mag));
            *slot = v;
            if idx == 0 {
                continue;
            }
            for (d, comp) in grad.iter_mut().enumerate() {
                let k = if grid.dim() == 1 { idx } else if d == 0 { idx / n } else { idx % n };
                if !grid.is_nyquist(k) && xi[d] != 0.0 {
                    comp[idx] = 2.0 * PI * xi[d] * v;
                }
            }
        }
        Self { grid: *grid, kind, q_hat, grad }
    }

    /// `Q_hat == 1`: the classical gradient.
    pub fn classical(grid: &Grid) -> Self {
        Self::from_radial(grid, SymbolKind::Classical, |_| 1.0)
    }

    /// Closed-form Riesz symbol without normalization constant.
    pub fn riesz(grid: &Grid, s: f64) -> Self {
        let n = grid.dim();
        Self::from_radial(grid, SymbolKind::Riesz { s }, |xi| riesz_symbol(s, n, xi))
    }

    /// Scaled symbol `c_delta delta^n Q_hat(delta xi)` read from a cache.
    pub fn from_cache(cache: &SymbolCache, sk: &ScaledKernel, grid: &Grid) -> Result<Self> {
        if grid.dim() != sk.base().dim() {
            return Err(Error::GridMismatch(format!(
                "kernel of dimension {} on a grid of dimension {}",
                sk.base().dim(),
                grid.dim()
            )));
        }
        let factor = sk.symbol_factor();
        let delta = sk.delta();
        let kind = SymbolKind::Scaled { delta, regime: sk.regime() };
        Ok(Self::from_radial(grid, kind, |xi| factor * cache.eval(delta * xi)))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn q_hat(&self) -> &[f64] {
        &self.q_hat
    }

    pub fn grad_symbol(&self, component: usize) -> &[f64] {
        &self.grad[component]
    }

    /// Distinct `(|xi|, Q_hat)` pairs sorted by `|xi|`.
    pub fn radial_samples(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = (0..self.grid.len())
            .map(|i| {
                let xi = self.grid.frequency_vector(i);
                ((xi[0] * xi[0] + xi[1] * xi[1]).sqrt(), self.q_hat[i])
            })
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.dedup_by(|a, b| a.0 == b.0);
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self.radial_samples().into_iter().map(|(x, q)| vec![x, q]).collect();
        write_table(path, &["xi", "q_hat"], &rows)
    }
}

/// Symbol table of a scaled kernel on a grid.
pub fn symbol_table(sk: &ScaledKernel, grid: &Grid) -> Result<SymbolTable> {
    let cache = SymbolCache::new(sk.base(), sk.delta() * grid.max_frequency())?;
    SymbolTable::from_cache(&cache, sk, grid)
}

/// Result of scanning `m_{d1,d2}(xi) = Q_hat(d1 xi) / Q_hat(d2 xi)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct MultiplierScan {
    pub d1: f64,
    pub d2: f64,
    pub max_ratio: f64,
    /// `sup |xi| |m'(xi)|` from first differences
    pub max_scaled_derivative: f64,
}

/// [`multiplier_scan_cached`] with a freshly built cache.
pub fn multiplier_scan(kernel: &Kernel, d1: f64, d2: f64, xi_grid: &[f64]) -> Result<MultiplierScan> {
    let top = xi_grid.iter().copied().fold(0.0, f64::max) * d1.max(d2);
    let cache = SymbolCache::new(kernel, top)?;
    multiplier_scan_cached(&cache, d1, d2, xi_grid)
}

/// Scans the comparison multiplier; `d2 = 0` stands for the classical gradient.
/// Only first-order derivative bounds are checked.
pub fn multiplier_scan_cached(cache: &SymbolCache, d1: f64, d2: f64, xi_grid: &[f64]) -> Result<MultiplierScan> {
    if !(d1 > 0.0 && d1 <= 1.0 && (0.0..=1.0).contains(&d2)) {
        return Err(Error::InvalidInput(format!("need d1 in (0, 1] and d2 in [0, 1], got ({d1}, {d2})")));
    }
    if xi_grid.iter().any(|&x| !(x > 0.0)) || xi_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("xi grid must be positive and increasing".into()));
    }
    let m = |xi: f64| {
        let num = cache.eval(d1 * xi);
        if d2 == 0.0 {
            num
        } else {
            num / cache.eval(d2 * xi)
        }
    };
    let vals: Vec<f64> = xi_grid.iter().map(|&x| m(x)).collect();
    let max_ratio = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut max_der: f64 = 0.0;
    for i in 0..xi_grid.len().saturating_sub(1) {
        let (a, b) = (xi_grid[i], xi_grid[i + 1]);
        let der = (vals[i + 1] - vals[i]) / (b - a);
        max_der = max_der.max(der.abs() * 0.5 * (a + b));
    }
    Ok(MultiplierScan { d1, d2, max_ratio, max_scaled_derivative: max_der })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{log_grid, make_kernel, scale_kernel, KernelSpec};

    fn kernel_a(n: usize) -> Kernel {
        make_kernel(KernelSpec::truncated_fractional(0.5, n)).unwrap()
    }

    #[test]
    fn riesz_profile_closed_form_matches_quadrature() {
        let k = make_kernel(KernelSpec::riesz(0.4, 1)).unwrap();
        for r in [0.01, 0.3, 2.0] {
            let f = |t: f64| k.rho_bar(t) / t;
            let direct = quadrature::log_graded(&f, r, 1e8, Tolerance::new(1e-16, 1e-13)).unwrap().value
                + 1e8f64.powf(-0.4) / 0.4;
            let closed = q_profile(&k, r).unwrap();
            assert!((closed - direct).abs() < 1e-10 * closed, "{closed} {direct}");
        }
    }

    #[test]
    fn q_bar_vanishes_and_decreases() {
        let k = kernel_a(1);
        let pe = ProfileEval::new(&k).unwrap();
        assert_eq!(pe.q_bar(1.5).unwrap(), 0.0);
        let grid = log_grid(1e-9, 0.999, 200);
        let vals: Vec<f64> = grid.iter().map(|&r| pe.q_bar(r).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        for &r in &[1e-9, 3e-5, 0.2, 0.9] {
            let d = q_profile(&k, r).unwrap();
            assert!((pe.q_bar(r).unwrap() - d).abs() < 1e-10 * d);
        }
    }

    #[test]
    fn symbol_at_zero_is_one() {
        for n in [1, 2] {
            let k = kernel_a(n);
            assert!((symbol(&k, 0.0).unwrap() - 1.0).abs() < 1e-8);
            assert!((symbol(&k, 1e-7).unwrap() - 1.0).abs() < 1e-8);
            let pe = ProfileEval::new(&k).unwrap();
            assert!((symbol_via_profile(&pe, 0.0).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn both_transform_routes_agree() {
        for n in [1, 2] {
            let k = kernel_a(n);
            let pe = ProfileEval::new(&k).unwrap();
            for xi in [0.1, 0.7, 3.0, 25.0] {
                let a = symbol(&k, xi).unwrap();
                let b = symbol_via_profile(&pe, xi).unwrap();
                assert!((a - b).abs() < 1e-7 * a, "n={n} xi={xi}: {a} {b}");
            }
        }
    }

    #[test]
    fn riesz_closed_form_one_dimensional_value() {
        // n = 1, s = 1/2: pi^0 Gamma(1/4)/Gamma(1/4) / (1/2) = 2
        assert!((riesz_constant(0.5, 1) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cache_tracks_direct_symbol() {
        let k = kernel_a(1);
        let cache = SymbolCache::new(&k, 200.0).unwrap();
        assert!(cache.relative_accuracy() < 1e-7, "{}", cache.relative_accuracy());
        for xi in [3e-5, 0.013, 0.77, 9.1, 150.0] {
            let d = symbol(&k, xi).unwrap();
            assert!((cache.eval(xi) - d).abs() < 1e-7 * d, "{xi}");
        }
        // beyond the table the wedge shape keeps the relative error moderate
        let far = 2.0 * cache.xi_max();
        let d = symbol(&k, far).unwrap();
        assert!((cache.eval(far) - d).abs() < 0.05 * d);
    }

    #[test]
    fn table_is_radial_and_annihilates_constants() {
        let k = kernel_a(2);
        let grid = Grid::new(2, 16, 4.0).unwrap();
        let sk = scale_kernel(&k, 0.5, Regime::Vanishing).unwrap();
        let t = symbol_table(&sk, &grid).unwrap();
        assert_eq!(t.grad_symbol(0)[0], 0.0);
        assert_eq!(t.grad_symbol(1)[0], 0.0);
        // (k0, k1) = (1, 2) and (2, 1) share |xi|
        let a = t.q_hat()[16 + 2];
        let b = t.q_hat()[2 * 16 + 1];
        assert_eq!(a, b);
        // Nyquist prefactor
        assert_eq!(t.grad_symbol(0)[8 * 16 + 1], 0.0);
        assert!(t.grad_symbol(1)[8 * 16 + 1] != 0.0);
    }

    #[test]
    fn identity_scaling_reproduces_base_symbol() {
        let k = kernel_a(1);
        let grid = Grid::new(1, 32, 4.0).unwrap();
        let cache = SymbolCache::new(&k, 10.0).unwrap();
        let sk = scale_kernel(&k, 1.0, Regime::Vanishing).unwrap();
        let t = SymbolTable::from_cache(&cache, &sk, &grid).unwrap();
        for (i, q) in t.q_hat().iter().enumerate() {
            assert_eq!(*q, cache.eval(grid.frequency(i)));
        }
    }

    #[test]
    fn multiplier_scan_identity_pair() {
        let k = kernel_a(1);
        let xs = log_grid(1e-2, 1e3, 200);
        let scan = multiplier_scan(&k, 0.3, 0.3, &xs).unwrap();
        assert_eq!(scan.max_ratio, 1.0);
        assert_eq!(scan.max_scaled_derivative, 0.0);
    }
}
