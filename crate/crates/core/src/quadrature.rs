//! One-dimensional quadrature used throughout the crate.
//!
//! Three building blocks cover every integral the kernels and symbols need:
//!
//! * [`adaptive`]: globally adaptive 15-point Gauss–Kronrod on a finite interval,
//! * [`singular_at_zero`] and [`log_graded`]: dyadic panels for integrands with
//!   an integrable power-type singularity at the left endpoint, or that vary on
//!   a logarithmic scale,
//! * [`oscillatory`]: zero-to-zero panels for `g(r) * osc(k r)` with a
//!   sine, cosine or Bessel factor, on `[0, upper]` or `[0, inf)`. The infinite
//!   case accelerates the alternating partial sums with Wynn's epsilon table.

use crate::error::{Error, Result};

/// Absolute and relative accuracy request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    /// Default accuracy used for kernel-level integrals.
    pub const DEFAULT: Tolerance = Tolerance { abs: 1e-10, rel: 1e-8 };
    /// Accuracy used when building symbol tables.
    pub const TIGHT: Tolerance = Tolerance { abs: 1e-15, rel: 1e-12 };

    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Integral value together with an error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Single 15-point Gauss–Kronrod rule with the QUADPACK error heuristic.
pub fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err_raw = ((res_k - res_g) * half).abs();
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = err_raw;
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Estimate {
        value: res_k * half,
        error: err,
    }
}

const MAX_INTERVALS: usize = 400;

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn adaptive<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::default());
    }
    let first = gk15(f, a, b);
    if !first.value.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let mut intervals: Vec<(f64, f64, Estimate)> = vec![(a, b, first)];
    let mut total = first;
    loop {
        if total.error <= tol.target(total.value) {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            break;
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("non-empty interval list");
        let (lo, hi, est) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further in floating point
            intervals.push((lo, hi, Estimate { value: est.value, error: 0.0 }));
            total.error -= est.error;
            continue;
        }
        let left = gk15(f, lo, mid);
        let right = gk15(f, mid, hi);
        if !(left.value.is_finite() && right.value.is_finite()) {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        total.value += left.value + right.value - est.value;
        total.error += left.error + right.error - est.error;
        intervals.push((lo, mid, left));
        intervals.push((mid, hi, right));
    }
    // recompute from scratch to shed accumulated rounding in the running sums
    let value: f64 = intervals.iter().map(|x| x.2.value).sum();
    let error: f64 = intervals.iter().map(|x| x.2.error).sum();
    if error <= 1e3 * tol.target(value) {
        Ok(Estimate { value, error })
    } else {
        Err(Error::QuadratureFailure(format!(
            "adaptive quadrature on [{a}, {b}] stalled at error {error:e} (value {value:e})"
        )))
    }
}

const MAX_DYADIC_PANELS: usize = 4000;

/// Integrates `f` over `(0, b]` where `f` may have an integrable singularity at
/// zero. Panels `[b 2^{-j-1}, b 2^{-j}]` are summed until the geometric tail
/// estimated from the last two panel ratios falls below the tolerance; that
/// tail is then added to the sum.
pub fn singular_at_zero<F: Fn(f64) -> f64 + ?Sized>(f: &F, b: f64, tol: Tolerance) -> Result<Estimate> {
    if b <= 0.0 {
        return Ok(Estimate::default());
    }
    let panel_tol = Tolerance::new(tol.abs * 1e-2, tol.rel);
    let mut total = Estimate::default();
    let mut hi = b;
    let mut prev: Option<f64> = None;
    for _ in 0..MAX_DYADIC_PANELS {
        let lo = 0.5 * hi;
        let est = adaptive(f, lo, hi, panel_tol)?;
        total = total + est;
        if let Some(p) = prev {
            if p != 0.0 {
                let q = est.value / p;
                if q.abs() < 1.0 {
                    let tail = est.value * q / (1.0 - q);
                    if tail.abs() <= tol.target(total.value) {
                        total.value += tail;
                        total.error += tail.abs() * 0.5 + est.error;
                        return Ok(total);
                    }
                }
            } else if est.value == 0.0 {
                return Ok(total);
            }
        }
        prev = Some(est.value);
        hi = lo;
        if hi < f64::MIN_POSITIVE * 1e10 {
            break;
        }
    }
    Err(Error::QuadratureFailure(format!(
        "singular integral on (0, {b}] did not settle (partial value {:e})",
        total.value
    )))
}

/// Integrates over `[a, b]` with `0 < a < b`, splitting at `a 2^k` so every
/// panel spans at most one octave. Suited to integrands like `t^{-p}` whose
/// scale changes with `t`.
pub fn log_graded<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if b <= a {
        return Ok(Estimate::default());
    }
    let mut total = Estimate::default();
    let mut lo = a;
    while lo < b {
        let hi = (2.0 * lo).min(b);
        total = total + adaptive(f, lo, hi, tol)?;
        lo = hi;
    }
    Ok(total)
}

/// Oscillating factor in a radial Fourier integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Oscillator {
    Sin,
    Cos,
    J0,
    J1,
}

impl Oscillator {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Oscillator::Sin => x.sin(),
            Oscillator::Cos => x.cos(),
            Oscillator::J0 => libm::j0(x),
            Oscillator::J1 => libm::j1(x),
        }
    }

    /// The `m`-th positive zero, `m >= 1`.
    pub fn zero(self, m: usize) -> f64 {
        let mf = m as f64;
        match self {
            Oscillator::Sin => mf * std::f64::consts::PI,
            Oscillator::Cos => (mf - 0.5) * std::f64::consts::PI,
            Oscillator::J0 => bessel_zero(0, m),
            Oscillator::J1 => bessel_zero(1, m),
        }
    }
}

/// `m`-th positive zero of `J_nu` for `nu` in {0, 1}: McMahon's expansion
/// polished by Newton steps.
pub fn bessel_zero(nu: u32, m: usize) -> f64 {
    let mu = 4.0 * (nu as f64).powi(2);
    let beta = (m as f64 + 0.5 * nu as f64 - 0.25) * std::f64::consts::PI;
    let eb = 8.0 * beta;
    let mut x = beta - (mu - 1.0) / eb - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * eb.powi(3));
    for _ in 0..6 {
        let (f, df) = match nu {
            0 => (libm::j0(x), -libm::j1(x)),
            _ => {
                let j1 = libm::j1(x);
                (j1, libm::j0(x) - j1 / x)
            }
        };
        let step = f / df;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

const MAX_OSC_PANELS: usize = 2_000_000;
const WYNN_WINDOW: usize = 24;

/// Computes `int_0^upper g(r) osc(k r) dr` (or the improper integral when
/// `upper` is `None`) by integrating between consecutive zeros of the
/// oscillating factor. The first panel is treated as singular at zero.
pub fn oscillatory<F: Fn(f64) -> f64 + ?Sized>(
    g: &F,
    k: f64,
    osc: Oscillator,
    upper: Option<f64>,
    tol: Tolerance,
) -> Result<Estimate> {
    if k <= 0.0 {
        return Err(Error::QuadratureFailure(format!(
            "oscillatory quadrature needs k > 0, got {k}"
        )));
    }
    let integrand = |r: f64| g(r) * osc.eval(k * r);
    let first_end = osc.zero(1) / k;
    let end0 = upper.map_or(first_end, |u| u.min(first_end));
    let mut total = singular_at_zero(&integrand, end0, tol)?;
    if let Some(u) = upper {
        if end0 >= u {
            return Ok(total);
        }
    }
    let panel_tol = Tolerance::new(tol.abs * 1e-3, tol.rel);
    let mut partial: Vec<f64> = Vec::new();
    let mut last_ext: Option<f64> = None;
    let mut stable = 0;
    for m in 1..MAX_OSC_PANELS {
        let a = osc.zero(m) / k;
        let mut b = osc.zero(m + 1) / k;
        if let Some(u) = upper {
            if a >= u {
                return Ok(total);
            }
            b = b.min(u);
        }
        total = total + adaptive(&integrand, a, b, panel_tol)?;
        if upper.is_none() {
            partial.push(total.value);
            if partial.len() > WYNN_WINDOW {
                partial.remove(0);
            }
            if partial.len() >= 7 {
                let ext = wynn_epsilon(&partial);
                if let Some(prev) = last_ext {
                    if (ext - prev).abs() <= tol.target(ext) {
                        stable += 1;
                        if stable >= 3 {
                            return Ok(Estimate {
                                value: ext,
                                error: (ext - prev).abs() + total.error,
                            });
                        }
                    } else {
                        stable = 0;
                    }
                }
                last_ext = Some(ext);
            }
        }
    }
    Err(Error::QuadratureFailure(format!(
        "oscillatory integral with k = {k} did not converge"
    )))
}

/// Wynn's epsilon extrapolation of a sequence of partial sums.
pub fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    if n == 0 {
        return 0.0;
    }
    let mut best = s[n - 1];
    let mut prev = vec![0.0; n + 1];
    let mut cur = s.to_vec();
    let mut k = 0usize;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let diff = cur[j + 1] - cur[j];
            if diff.abs() <= f64::MIN_POSITIVE * 1e4 || !diff.is_finite() {
                if k % 2 == 0 {
                    return cur[j + 1];
                }
                return best;
            }
            next.push(prev[j + 1] + 1.0 / diff);
        }
        k += 1;
        prev = cur;
        cur = next;
        if k % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n <= 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn adaptive_polynomial_and_smooth() {
        let est = adaptive(&|x: f64| x * x, 0.0, 3.0, Tolerance::TIGHT).unwrap();
        assert!((est.value - 9.0).abs() < 1e-13);
        let est = adaptive(&|x: f64| x.exp(), 0.0, 1.0, Tolerance::TIGHT).unwrap();
        assert!((est.value - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn singular_power_at_zero() {
        for &s in &[0.1, 0.5, 0.9] {
            let est = singular_at_zero(&|r: f64| r.powf(-s), 1.0, Tolerance::TIGHT).unwrap();
            let exact = 1.0 / (1.0 - s);
            assert!((est.value - exact).abs() < 1e-9 * exact, "s={s}: {}", est.value);
        }
    }

    #[test]
    fn log_graded_matches_antiderivative() {
        let est = log_graded(&|t: f64| t.powf(-2.5), 1e-4, 1.0, Tolerance::TIGHT).unwrap();
        let exact = (1e-4f64.powf(-1.5) - 1.0) / 1.5;
        assert!((est.value / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_sine_integral() {
        // int_0^1 sin(k r) dr = (1 - cos k) / k
        let k = 2.0 * PI * 37.3;
        let est = oscillatory(&|_r: f64| 1.0, k, Oscillator::Sin, Some(1.0), Tolerance::TIGHT).unwrap();
        assert!((est.value - (1.0 - k.cos()) / k).abs() < 1e-13);
    }

    #[test]
    fn improper_dirichlet_integral() {
        // int_0^inf sin(r)/r dr = pi/2
        let est = oscillatory(&|r: f64| 1.0 / r, 1.0, Oscillator::Sin, None, Tolerance::TIGHT).unwrap();
        assert!((est.value - PI / 2.0).abs() < 1e-9, "{}", est.value);
    }

    #[test]
    fn improper_bessel_integral() {
        // int_0^inf J1(r) dr = 1 and int_0^inf J0(r) dr = 1
        let e1 = oscillatory(&|_r: f64| 1.0, 1.0, Oscillator::J1, None, Tolerance::TIGHT).unwrap();
        assert!((e1.value - 1.0).abs() < 1e-9, "{}", e1.value);
        let e0 = oscillatory(&|_r: f64| 1.0, 1.0, Oscillator::J0, None, Tolerance::TIGHT).unwrap();
        assert!((e0.value - 1.0).abs() < 1e-9, "{}", e0.value);
    }

    #[test]
    fn bessel_zeros_are_zeros() {
        for m in 1..40 {
            assert!(libm::j0(bessel_zero(0, m)).abs() < 1e-14);
            assert!(libm::j1(bessel_zero(1, m)).abs() < 1e-14);
        }
        assert!((bessel_zero(0, 1) - 2.404_825_557_695_773).abs() < 1e-13);
        assert!((bessel_zero(1, 1) - 3.831_705_970_207_512).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(32);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let m62: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(62)).sum();
        assert!((m62 - 2.0 / 63.0).abs() < 1e-14);
    }

    #[test]
    fn wynn_on_alternating_series() {
        // partial sums of ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = Vec::new();
        let mut acc = 0.0;
        for n in 1..=15 {
            acc += if n % 2 == 1 { 1.0 } else { -1.0 } / n as f64;
            s.push(acc);
        }
        assert!((wynn_epsilon(&s) - 2f64.ln()).abs() < 1e-10);
    }
}
