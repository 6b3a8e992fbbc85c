//! Experiment drivers for the two horizon limits: localization rates,
//! fractionalization errors, uniform Poincaré ratios and multiplier scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, SubBox};
use crate::kernels::{
    limit_exponent, l1_distance_with_exponent, make_kernel, scale_kernel, Family, Kernel, KernelSpec, Regime,
    DEFAULT_LIMIT_DELTAS,
};
use crate::operator::{classical_gradient, lp_error_vec, lp_norm, lp_norm_vec, OperatorHandle};
use crate::parallel::par_map;
use crate::profile::{multiplier_scan_cached, MultiplierScan, SymbolCache};

/// Norm used by a rate study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Norm {
    Linf,
    Lp { p: f64 },
}

impl Norm {
    pub fn exponent(self) -> f64 {
        match self {
            Norm::Linf => f64::INFINITY,
            Norm::Lp { p } => p,
        }
    }
}

/// Test functions for the localization study. Centres default to the middle
/// of the torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `exp(k (1 - 1/(1 - |x-c|^2/R^2)))` with sharpness `k`
    SmoothBump {
        radius: f64,
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
    /// smooth bump times `|x-c|^{1+alpha}`, a `C^{1,alpha}` function
    HolderBump {
        alpha: f64,
        radius: f64,
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
    /// band-limited noise times a smooth bump
    W1pSample { seed: u64, radius: f64 },
}

impl TestFunction {
    pub fn smooth() -> Self {
        TestFunction::SmoothBump { radius: 0.75, sharpness: DEFAULT_SHARPNESS }
    }

    /// Hölder bump sized for a torus of length 32, where the asymptotic
    /// rate is visible for horizons down to 0.05.
    pub fn holder(alpha: f64) -> Self {
        TestFunction::HolderBump { alpha, radius: 3.0, sharpness: DEFAULT_SHARPNESS }
    }

    pub fn describe(&self) -> String {
        match self {
            TestFunction::SmoothBump { radius, sharpness } => {
                format!("smooth bump of radius {radius}, sharpness {sharpness}")
            }
            TestFunction::HolderBump { alpha, radius, .. } => {
                format!("C^(1,{alpha}) bump |x-c|^(1+{alpha}) of radius {radius}")
            }
            TestFunction::W1pSample { seed, radius } => {
                format!("band-limited noise (seed {seed}) on a bump of radius {radius}")
            }
        }
    }

    fn radius(&self) -> f64 {
        match *self {
            TestFunction::SmoothBump { radius, .. }
            | TestFunction::HolderBump { radius, .. }
            | TestFunction::W1pSample { radius, .. } => radius,
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        let c = 0.5 * grid.length();
        let radius = self.radius();
        let dim = grid.dim();
        let dist = move |x: [f64; 2]| (0..dim).map(|d| (x[d] - c).powi(2)).sum::<f64>().sqrt();
        let k = match *self {
            TestFunction::SmoothBump { sharpness, .. } | TestFunction::HolderBump { sharpness, .. } => sharpness,
            TestFunction::W1pSample { .. } => 1.0,
        };
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("bump sharpness {k} must be positive")));
        }
        let bump = move |x: [f64; 2]| radial_bump(dist(x) / radius).powf(k);
        match *self {
            TestFunction::SmoothBump { .. } => Ok(Field::from_fn(*grid, bump)),
            TestFunction::HolderBump { alpha, .. } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidInput(format!("Hölder exponent {alpha} outside (0, 1)")));
                }
                Ok(Field::from_fn(*grid, |x| bump(x) * dist(x).powf(1.0 + alpha)))
            }
            TestFunction::W1pSample { seed, .. } => {
                let omega = SubBox { lo: [c - radius; 2], hi: [c + radius; 2] };
                Ok(noise_sample(grid, &omega, &mut ChaCha8Rng::seed_from_u64(seed)))
            }
        }
    }
}

/// Default bump sharpness; flattening the shoulders of the bump brings the
/// quadratic localization rate into view at moderate horizons.
pub const DEFAULT_SHARPNESS: f64 = 6.0;

fn default_sharpness() -> f64 {
    DEFAULT_SHARPNESS
}

/// `exp(1 - 1/(1 - t^2))` on `|t| < 1`.
pub fn radial_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// White noise low-passed to modes `|k| <= N/8` per axis, times the product
/// bump of `omega`; vanishes outside `omega`.
pub fn noise_sample(grid: &Grid, omega: &SubBox, rng: &mut ChaCha8Rng) -> Field {
    let white: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let white = Field::new(*grid, white).expect("sized to the grid");
    let cutoff = (grid.points_per_axis() / 8) as f64 / grid.length() + 1e-12;
    let op = OperatorHandle::classical(grid);
    let smooth = op
        .multiply(&white, |i| {
            let xi = grid.frequency_vector(i);
            if xi[0].abs() <= cutoff && xi[1].abs() <= cutoff {
                1.0
            } else {
                0.0
            }
        })
        .expect("same grid");
    let dim = grid.dim();
    let window = |x: [f64; 2]| {
        (0..dim)
            .map(|d| {
                let c = 0.5 * (omega.lo[d] + omega.hi[d]);
                let w = 0.5 * (omega.hi[d] - omega.lo[d]);
                radial_bump((x[d] - c) / w)
            })
            .product::<f64>()
    };
    let vals = smooth.values.iter().enumerate().map(|(i, v)| v * window(grid.point(i))).collect();
    Field::new(*grid, vals).expect("sized to the grid").restrict_to(*omega)
}

/// Error table of a horizon sweep with its log-log slope.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RateReport {
    pub subject: String,
    pub norm: Norm,
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    /// least-squares slope of `ln error` against `ln delta`
    pub fitted_slope: f64,
    /// indices of the points that entered the fit
    pub fit_indices: Vec<usize>,
    /// error level attributable to the discretization
    pub floor: f64,
    /// `delta^2 Lip(nabla^2 u)` for smooth test functions
    pub bounds: Option<Vec<f64>>,
    pub lip_hessian: Option<f64>,
}

/// Least-squares slope through the points whose error exceeds `10 * floor`.
/// Falls back to all points when fewer than two qualify.
pub fn fit_slope(deltas: &[f64], errors: &[f64], floor: f64) -> (f64, Vec<usize>) {
    let mut idx: Vec<usize> = (0..deltas.len()).filter(|&i| errors[i] > 10.0 * floor).collect();
    if idx.len() < 2 {
        idx = (0..deltas.len()).collect();
    }
    let xs: Vec<f64> = idx.iter().map(|&i| deltas[i].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| errors[i].ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxy / sxx, idx)
}

/// Measured `Lip(nabla^2 u)`: largest first difference of the spectral Hessian.
pub fn hessian_lipschitz(u: &Field) -> Result<f64> {
    let grid = *u.grid();
    let du = classical_gradient(u)?;
    let mut hess: Vec<Vec<f64>> = Vec::new();
    for comp in &du.components {
        let f = Field::new(grid, comp.clone())?;
        hess.extend(classical_gradient(&f)?.components);
    }
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let mut lip: f64 = 0.0;
    for i in 0..grid.len() {
        let neighbours: Vec<usize> = if grid.dim() == 1 {
            vec![(i + 1) % n]
        } else {
            let (a, b) = (i / n, i % n);
            vec![((a + 1) % n) * n + b, a * n + (b + 1) % n]
        };
        for j in neighbours {
            let diff: f64 = hess.iter().map(|c| (c[j] - c[i]).powi(2)).sum::<f64>().sqrt();
            lip = lip.max(diff / h);
        }
    }
    Ok(lip)
}

/// `|| D_rho_delta u - nabla u ||` over a list of vanishing horizons.
pub fn localization_rate(
    kernel: &Kernel,
    test_fn: TestFunction,
    grid: &Grid,
    deltas: &[f64],
    norm: Norm,
) -> Result<RateReport> {
    let u = test_fn.sample(grid)?;
    let mut report = localization_rate_for(kernel, &u, deltas, norm)?;
    report.subject = test_fn.describe();
    if !matches!(test_fn, TestFunction::SmoothBump { .. }) {
        report.bounds = None;
        report.lip_hessian = None;
    }
    Ok(report)
}

/// [`localization_rate`] for an arbitrary field.
pub fn localization_rate_for(kernel: &Kernel, u: &Field, deltas: &[f64], norm: Norm) -> Result<RateReport> {
    let grid = *u.grid();
    if deltas.is_empty() {
        return Err(Error::InvalidInput("empty horizon list".into()));
    }
    let h = grid.spacing();
    for &d in deltas {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::OutOfRangeDelta { delta: d, regime: "vanishing", range: "(0, 1]".into() });
        }
        if d < 4.0 * h {
            return Err(Error::UnresolvedHorizon { delta: d, spacing: h, min: 4.0 * h });
        }
    }
    let top = deltas.iter().copied().fold(0.0, f64::max);
    let cache = SymbolCache::new(kernel, top * grid.max_frequency())?;
    let grad = classical_gradient(u)?;
    let p = norm.exponent();
    let errors: Vec<Result<f64>> = par_map(deltas, |&d| {
        let sk = scale_kernel(kernel, d, Regime::Vanishing)?;
        let op = OperatorHandle::for_kernel_cached(&cache, &sk, &grid)?;
        lp_error_vec(&op.gradient(u)?, &grad, p)
    });
    let errors: Vec<f64> = errors.into_iter().collect::<Result<_>>()?;
    let floor = cache.relative_accuracy() * lp_norm_vec(&grad, p);
    let (slope, idx) = fit_slope(deltas, &errors, floor);
    let lip = hessian_lipschitz(u)?;
    Ok(RateReport {
        subject: "user field".into(),
        norm,
        deltas: deltas.to_vec(),
        errors,
        fitted_slope: slope,
        fit_indices: idx,
        floor,
        bounds: Some(deltas.iter().map(|d| d * d * lip).collect()),
        lip_hessian: Some(lip),
    })
}

/// Fractionalization sweep: `|| D_rho_delta u - D^{s_inf} u ||_{L^2}` for diverging horizons.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FractionalizationReport {
    pub rate: RateReport,
    pub s_inf: f64,
    /// `||(rho_delta - rho_inf) min{1, |x|^-1}||_{L^1}` per horizon
    pub l1_distances: Vec<f64>,
    /// `error / (||u||_{W^{1,2}} l1_distance)` per horizon
    pub constants: Vec<Option<f64>>,
    /// error of the Riesz kernel with exponent `s_inf` run through the same pipeline
    pub riesz_control_error: f64,
    /// index of the first error within `10 * floor`, if any
    pub floor_reached_at: Option<usize>,
    /// errors strictly decrease up to `floor_reached_at`
    pub decreasing_until_floor: bool,
}

pub fn fractionalization_error(kernel: &Kernel, u: &Field, deltas: &[f64]) -> Result<FractionalizationReport> {
    let grid = *u.grid();
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("horizon list must be non-empty and increasing".into()));
    }
    let s_inf = if kernel.family() == Family::Riesz {
        kernel.spec().s
    } else {
        limit_exponent(kernel, &DEFAULT_LIMIT_DELTAS)?.extrapolated
    };
    if !(s_inf > 0.0 && s_inf < 1.0) {
        return Err(Error::InvalidInput(format!("estimated limit exponent {s_inf} outside (0, 1)")));
    }
    let top = deltas[deltas.len() - 1];
    let cache = SymbolCache::new(kernel, top * grid.max_frequency())?;
    let reference = OperatorHandle::riesz(&grid, s_inf).gradient(u)?;
    let errors: Vec<Result<f64>> = par_map(deltas, |&d| {
        let sk = scale_kernel(kernel, d, Regime::Diverging)?;
        let op = OperatorHandle::for_kernel_cached(&cache, &sk, &grid)?;
        lp_error_vec(&op.gradient(u)?, &reference, 2.0)
    });
    let errors: Vec<f64> = errors.into_iter().collect::<Result<_>>()?;

    let riesz = make_kernel(KernelSpec::riesz(s_inf, grid.dim()))?;
    let control_sk = scale_kernel(&riesz, top, Regime::Diverging)?;
    let control_cache = SymbolCache::new(&riesz, 0.0)?;
    let control = OperatorHandle::for_kernel_cached(&control_cache, &control_sk, &grid)?.gradient(u)?;
    let riesz_control_error = lp_error_vec(&control, &reference, 2.0)?;
    let floor = riesz_control_error.max(cache.relative_accuracy() * lp_norm_vec(&reference, 2.0));

    let l1_distances: Vec<f64> = if kernel.family() == Family::Riesz {
        vec![0.0; deltas.len()]
    } else {
        deltas
            .iter()
            .map(|&d| l1_distance_with_exponent(kernel, d, s_inf))
            .collect::<Result<_>>()?
    };
    let w12 = (lp_norm(u, 2.0).powi(2) + lp_norm_vec(&classical_gradient(u)?, 2.0).powi(2)).sqrt();
    let constants = errors
        .iter()
        .zip(&l1_distances)
        .map(|(e, l)| (*l > 0.0).then(|| e / (w12 * l)))
        .collect();
    let floor_reached_at = errors.iter().position(|&e| e <= 10.0 * floor);
    let end = floor_reached_at.unwrap_or(errors.len() - 1);
    let decreasing_until_floor = errors[..=end].windows(2).all(|w| w[1] < w[0]);
    let (slope, idx) = fit_slope(deltas, &errors, floor);
    Ok(FractionalizationReport {
        rate: RateReport {
            subject: format!("L2 distance to the Riesz gradient with s_inf = {s_inf:.6}"),
            norm: Norm::Lp { p: 2.0 },
            deltas: deltas.to_vec(),
            errors,
            fitted_slope: slope,
            fit_indices: idx,
            floor,
            bounds: None,
            lip_hessian: None,
        },
        s_inf,
        l1_distances,
        constants,
        riesz_control_error,
        floor_reached_at,
        decreasing_until_floor,
    })
}

/// Worst Poincaré ratios over seeded samples, per horizon.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PoincareReport {
    pub regime: Regime,
    pub deltas: Vec<f64>,
    pub worst_ratio: Vec<f64>,
    pub sup_ratio: f64,
    /// `max / min` of the per-horizon worst ratios
    pub variation: f64,
    /// `"H^sigma / L^2"` for `p = 2`, otherwise `"L^p / L^p"`
    pub norm: String,
    pub samples: usize,
    pub seed: u64,
    pub sample_description: String,
}

/// Parameters of [`poincare_scan`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareSetup {
    pub omega: SubBox,
    pub samples: usize,
    pub seed: u64,
    pub p: f64,
}

/// Spectral Bessel norm `(sum <xi>^{2 sigma} |u_hat|^2)^{1/2}`, `<xi> = (1 + |xi|^2)^{1/2}`,
/// normalized to agree with the grid `L^2` norm at `sigma = 0`.
pub fn bessel_norm(u: &Field, sigma: f64) -> Result<f64> {
    let grid = *u.grid();
    let spec = OperatorHandle::classical(&grid).spectrum(u)?;
    let total: f64 = spec
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = grid.frequency_vector(i);
            (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(sigma) * c.norm_sqr()
        })
        .sum();
    Ok((grid.cell_volume() / grid.len() as f64 * total).sqrt())
}

pub fn poincare_scan(
    kernel: &Kernel,
    regime: Regime,
    deltas: &[f64],
    grid: &Grid,
    setup: PoincareSetup,
) -> Result<PoincareReport> {
    if setup.samples < 16 {
        return Err(Error::InvalidInput(format!("need at least 16 samples, got {}", setup.samples)));
    }
    setup.omega.validate(grid)?;
    if deltas.is_empty() {
        return Err(Error::InvalidInput("empty horizon list".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let fields: Vec<Field> = (0..setup.samples)
        .map(|_| noise_sample(grid, &setup.omega, &mut rng))
        .filter(|f| f.max_abs() > 0.0)
        .collect();
    let spectral = setup.p == 2.0;
    let numerators: Vec<f64> = fields
        .iter()
        .map(|f| if spectral { bessel_norm(f, kernel.sigma()) } else { Ok(lp_norm(f, setup.p)) })
        .collect::<Result<_>>()?;
    let top = deltas.iter().copied().fold(0.0, f64::max);
    let cache = SymbolCache::new(kernel, top * grid.max_frequency())?;
    let worst: Vec<Result<f64>> = par_map(deltas, |&d| {
        let sk = scale_kernel(kernel, d, regime)?;
        let op = OperatorHandle::for_kernel_cached(&cache, &sk, grid)?;
        let mut w: f64 = 0.0;
        for (f, num) in fields.iter().zip(&numerators) {
            let den = lp_norm_vec(&op.gradient(f)?, setup.p);
            w = w.max(num / den);
        }
        Ok(w)
    });
    let worst_ratio: Vec<f64> = worst.into_iter().collect::<Result<_>>()?;
    let sup_ratio = worst_ratio.iter().copied().fold(0.0, f64::max);
    let min_ratio = worst_ratio.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PoincareReport {
        regime,
        deltas: deltas.to_vec(),
        variation: sup_ratio / min_ratio,
        sup_ratio,
        worst_ratio,
        norm: if spectral { "H^sigma / L^2".into() } else { format!("L^{0} / L^{0}", setup.p) },
        samples: fields.len(),
        seed: setup.seed,
        sample_description: "band-limited noise (modes <= N/8) times a product bump on omega".into(),
    })
}

/// Comparison multipliers for several horizon pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MultiplierReport {
    pub xi_max: f64,
    pub scans: Vec<MultiplierScan>,
    pub all_finite: bool,
    pub note: String,
}

/// Runs [`multiplier_scan_cached`] for every pair on a log grid `[1e-3, xi_max]`.
pub fn multiplier_uniformity(kernel: &Kernel, pairs: &[(f64, f64)], xi_max: f64, points: usize) -> Result<MultiplierReport> {
    let xs = crate::kernels::log_grid(1e-3, xi_max, points.max(2));
    let cache = SymbolCache::new(kernel, xi_max)?;
    let scans: Vec<MultiplierScan> =
        pairs.iter().map(|&(a, b)| multiplier_scan_cached(&cache, a, b, &xs)).collect::<Result<_>>()?;
    let all_finite = scans.iter().all(|s| s.max_ratio.is_finite() && s.max_scaled_derivative.is_finite());
    Ok(MultiplierReport {
        xi_max,
        scans,
        all_finite,
        note: "only derivatives of order <= 1 are checked".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel_a() -> Kernel {
        make_kernel(KernelSpec::truncated_fractional(0.5, 1)).unwrap()
    }

    #[test]
    fn slope_of_exact_power_law() {
        let d = [0.4, 0.2, 0.1];
        let e: Vec<f64> = d.iter().map(|x| 3.0 * x * x).collect();
        let (s, idx) = fit_slope(&d, &e, 0.0);
        assert!((s - 2.0).abs() < 1e-12);
        assert_eq!(idx, vec![0, 1, 2]);
        let (_, idx) = fit_slope(&d, &[1.0, 0.5, 1e-9], 1e-10);
        assert_eq!(idx, vec![0, 1]);
    }

    #[test]
    fn unresolved_horizon_is_rejected() {
        let grid = Grid::new(1, 64, 8.0).unwrap();
        let r = localization_rate(&kernel_a(), TestFunction::smooth(), &grid, &[0.4, 0.1], Norm::Linf);
        assert!(matches!(r, Err(Error::UnresolvedHorizon { .. })));
    }

    #[test]
    fn linear_profile_is_reproduced_in_the_interior() {
        // u is linear on [2, 6] and smoothly tapered outside; away from the
        // taper the kernel integral returns the slope
        let grid = Grid::new(1, 512, 8.0).unwrap();
        let step = |y: f64| {
            if y <= 0.0 {
                0.0
            } else if y >= 1.0 {
                1.0
            } else {
                let (a, b) = ((-1.0 / y).exp(), (-1.0 / (1.0 - y)).exp());
                a / (a + b)
            }
        };
        let u = Field::from_fn(grid, |x| {
            let t = x[0] - 4.0;
            t * step((3.5 - t.abs()) / 1.5)
        });
        let k = kernel_a();
        let sk = scale_kernel(&k, 0.1, Regime::Vanishing).unwrap();
        let op = OperatorHandle::for_kernel(&sk, &grid).unwrap();
        let du = op.gradient(&u).unwrap();
        let g = classical_gradient(&u).unwrap();
        for i in 0..grid.len() {
            let x = grid.point(i)[0];
            if (x - 4.0).abs() < 1.0 {
                assert!((du.components[0][i] - g.components[0][i]).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn noise_samples_vanish_outside_omega() {
        let grid = Grid::new(2, 32, 4.0).unwrap();
        let omega = SubBox::rect([1.0, 1.5], [3.0, 2.5]);
        let f = noise_sample(&grid, &omega, &mut ChaCha8Rng::seed_from_u64(42));
        for i in 0..grid.len() {
            if !omega.contains(grid.point(i), 2) {
                assert_eq!(f.values[i], 0.0);
            }
        }
        assert!(f.max_abs() > 0.0);
    }

    #[test]
    fn bessel_norm_at_zero_order_is_l2() {
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let f = TestFunction::smooth().sample(&grid).unwrap();
        assert!((bessel_norm(&f, 0.0).unwrap() - lp_norm(&f, 2.0)).abs() < 1e-13);
        assert!(bessel_norm(&f, 0.5).unwrap() > lp_norm(&f, 2.0));
    }

    #[test]
    fn poincare_rejects_small_sample_counts() {
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let setup = PoincareSetup { omega: SubBox::interval(1.0, 3.0), samples: 4, seed: 42, p: 2.0 };
        assert!(poincare_scan(&kernel_a(), Regime::Vanishing, &[0.5], &grid, setup).is_err());
    }

    #[test]
    fn riesz_fractionalization_sits_at_the_floor() {
        let k = make_kernel(KernelSpec::riesz(0.5, 1)).unwrap();
        let grid = Grid::new(1, 128, 8.0).unwrap();
        let u = TestFunction::smooth().sample(&grid).unwrap();
        let rep = fractionalization_error(&k, &u, &[2.0, 10.0, 100.0]).unwrap();
        for e in &rep.rate.errors {
            assert!(*e <= 10.0 * rep.rate.floor + 1e-13, "{e} vs {}", rep.rate.floor);
        }
    }

    #[test]
    fn multiplier_pairs() {
        let rep = multiplier_uniformity(&kernel_a(), &[(0.5, 0.5), (1.0, 0.0), (0.25, 1.0)], 100.0, 200).unwrap();
        assert!(rep.all_finite);
        assert_eq!(rep.scans[0].max_ratio, 1.0);
        assert!(rep.scans[2].max_ratio > 1.0);
    }
}
