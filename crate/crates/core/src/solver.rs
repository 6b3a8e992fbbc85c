//! Discrete energies `F_delta(u) = int f(x, D_rho_delta u) dx` over the class
//! `g + H_0(Omega)`, their minimization by preconditioned L-BFGS, and
//! Γ-convergence sweeps over horizons.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{write_table, Field, Grid, SubBox, VectorField};
use crate::kernels::{limit_exponent, scale_kernel, Family, Kernel, Regime, DEFAULT_LIMIT_DELTAS};
use crate::operator::OperatorHandle;
use crate::profile::SymbolCache;

/// Integrand `f(x, A)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Integrand {
    /// `(1/p) |A|^p`
    PowerNorm { p: f64 },
    /// `1/2 A . M(x) A`; `m[i]` holds the `n x n` matrix at point `i`, row-major
    AnisotropicQuadratic { m: Vec<Vec<f64>> },
    /// `a(x) + c |A|^p`
    WeightedPower { p: f64, c: f64, a: Vec<f64> },
}

/// Energy with complementary datum `g` and admissible set `g + H_0(omega)`.
#[derive(Clone, Debug)]
pub struct Energy {
    pub integrand: Integrand,
    pub g: Field,
    pub omega: SubBox,
    /// `|A|` is replaced by `(|A|^2 + eps^2)^{1/2}` when `p < 2`
    pub eps_reg: f64,
}

/// Constants with `c |A|^p - C <= f(x, A) <= C (1 + |A|^p)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Growth {
    pub p: f64,
    pub c_low: f64,
    pub c_high: f64,
}

/// Default regularization of `|A|` for `p < 2`.
pub const DEFAULT_EPS_REG: f64 = 1e-8;

impl Energy {
    pub fn new(integrand: Integrand, g: Field, omega: SubBox) -> Result<Self> {
        let e = Self { integrand, g, omega, eps_reg: DEFAULT_EPS_REG };
        e.validate()?;
        Ok(e)
    }

    pub fn grid(&self) -> &Grid {
        self.g.grid()
    }

    pub fn p(&self) -> f64 {
        match &self.integrand {
            Integrand::PowerNorm { p } | Integrand::WeightedPower { p, .. } => *p,
            Integrand::AnisotropicQuadratic { .. } => 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = *self.grid();
        self.omega.validate(&grid)?;
        let n = grid.dim();
        match &self.integrand {
            Integrand::PowerNorm { p } | Integrand::WeightedPower { p, .. } if !(*p > 1.0 && p.is_finite()) => {
                return Err(Error::InvalidInput(format!("exponent p = {p} must lie in (1, inf)")));
            }
            Integrand::AnisotropicQuadratic { m } => {
                if m.len() != grid.len() || m.iter().any(|a| a.len() != n * n) {
                    return Err(Error::GridMismatch("matrix field does not match the grid".into()));
                }
                if m.iter().any(|a| min_eigenvalue(a, n) <= 0.0) {
                    return Err(Error::InvalidInput("matrix field is not positive definite".into()));
                }
            }
            Integrand::WeightedPower { c, a, .. } => {
                if a.len() != grid.len() {
                    return Err(Error::GridMismatch("weight a(x) does not match the grid".into()));
                }
                if !(*c > 0.0) {
                    return Err(Error::InvalidInput(format!("coefficient c = {c} must be positive")));
                }
            }
            _ => {}
        }
        if !(self.eps_reg >= 0.0) {
            return Err(Error::InvalidInput("eps_reg must be non-negative".into()));
        }
        Ok(())
    }

    pub fn growth(&self) -> Growth {
        let n = self.grid().dim();
        match &self.integrand {
            Integrand::PowerNorm { p } => Growth { p: *p, c_low: 1.0 / p, c_high: 1.0 / p },
            Integrand::AnisotropicQuadratic { m } => {
                let lo = m.iter().map(|a| min_eigenvalue(a, n)).fold(f64::INFINITY, f64::min);
                let hi = m.iter().map(|a| max_eigenvalue(a, n)).fold(0.0, f64::max);
                Growth { p: 2.0, c_low: 0.5 * lo, c_high: 0.5 * hi }
            }
            Integrand::WeightedPower { p, c, a } => {
                let amax = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                Growth { p: *p, c_low: *c, c_high: c.max(amax) }
            }
        }
    }

    fn eps(&self) -> f64 {
        if self.p() < 2.0 {
            self.eps_reg
        } else {
            0.0
        }
    }

    /// `f(x_i, A)`.
    fn density(&self, i: usize, a: &[f64]) -> f64 {
        let sq: f64 = a.iter().map(|v| v * v).sum();
        match &self.integrand {
            Integrand::PowerNorm { p } => {
                let e = self.eps();
                ((sq + e * e).powf(0.5 * p) - e.powf(*p)) / p
            }
            Integrand::AnisotropicQuadratic { m } => 0.5 * quad_form(&m[i], a),
            Integrand::WeightedPower { p, c, a: w } => {
                let e = self.eps();
                w[i] + c * ((sq + e * e).powf(0.5 * p) - e.powf(*p))
            }
        }
    }

    /// `partial_A f(x_i, A)`, written into `out`.
    fn density_gradient(&self, i: usize, a: &[f64], out: &mut [f64]) {
        let sq: f64 = a.iter().map(|v| v * v).sum();
        match &self.integrand {
            Integrand::PowerNorm { p } => {
                let e = self.eps();
                let w = (sq + e * e).powf(0.5 * p - 1.0);
                for (o, v) in out.iter_mut().zip(a) {
                    *o = w * v;
                }
            }
            Integrand::AnisotropicQuadratic { m } => {
                let n = a.len();
                let mat = &m[i];
                for (r, o) in out.iter_mut().enumerate() {
                    *o = (0..n).map(|k| 0.5 * (mat[r * n + k] + mat[k * n + r]) * a[k]).sum();
                }
            }
            Integrand::WeightedPower { p, c, .. } => {
                let e = self.eps();
                let w = c * p * (sq + e * e).powf(0.5 * p - 1.0);
                for (o, v) in out.iter_mut().zip(a) {
                    *o = w * v;
                }
            }
        }
    }

    /// `int a dx` for the weighted family, zero otherwise.
    pub fn constant_offset(&self) -> f64 {
        match &self.integrand {
            Integrand::WeightedPower { a, .. } => self.grid().cell_volume() * a.iter().sum::<f64>(),
            _ => 0.0,
        }
    }
}

fn quad_form(m: &[f64], a: &[f64]) -> f64 {
    let n = a.len();
    (0..n).map(|r| (0..n).map(|k| a[r] * m[r * n + k] * a[k]).sum::<f64>()).sum()
}

fn sym_eigs(m: &[f64], n: usize) -> (f64, f64) {
    if n == 1 {
        return (m[0], m[0]);
    }
    let (a, b, d) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

fn min_eigenvalue(m: &[f64], n: usize) -> f64 {
    sym_eigs(m, n).0
}

fn max_eigenvalue(m: &[f64], n: usize) -> f64 {
    sym_eigs(m, n).1
}

fn check_inner(e: &Energy, u_inner: &Field, op: &OperatorHandle) -> Result<()> {
    op.grid().check_same(e.grid())?;
    op.grid().check_same(u_inner.grid())
}

fn total_field(e: &Energy, u_inner: &Field) -> Result<Field> {
    e.g.add(u_inner)
}

/// Riemann sum of `f(x, D_rho_delta (g + u_inner))` over the torus.
pub fn energy_value(e: &Energy, u_inner: &Field, op: &OperatorHandle) -> Result<f64> {
    check_inner(e, u_inner, op)?;
    let du = op.gradient(&total_field(e, u_inner)?)?;
    Ok(energy_of_gradient(e, &du))
}

fn energy_of_gradient(e: &Energy, du: &VectorField) -> f64 {
    let n = du.components.len();
    let mut a = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..du.grid().len() {
        for (k, slot) in a.iter_mut().enumerate() {
            *slot = du.components[k][i];
        }
        total += e.density(i, &a);
    }
    total * du.grid().cell_volume()
}

/// Grid `L^2` gradient `-div_rho_delta(partial_A f(x, D_rho_delta (g + u_inner)))`,
/// set to zero outside `omega`.
pub fn energy_gradient(e: &Energy, u_inner: &Field, op: &OperatorHandle) -> Result<Field> {
    check_inner(e, u_inner, op)?;
    let du = op.gradient(&total_field(e, u_inner)?)?;
    Ok(value_and_gradient_from(e, op, &du)?.1)
}

fn value_and_gradient_from(e: &Energy, op: &OperatorHandle, du: &VectorField) -> Result<(f64, Field)> {
    let grid = *du.grid();
    let n = du.components.len();
    let mut flux = VectorField::zeros(grid);
    let mut a = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..grid.len() {
        for (k, slot) in a.iter_mut().enumerate() {
            *slot = du.components[k][i];
        }
        total += e.density(i, &a);
        e.density_gradient(i, &a, &mut out);
        for k in 0..n {
            flux.components[k][i] = out[k];
        }
    }
    let mut grad = op.divergence(&flux)?.scaled(-1.0);
    grad.mask_in_place(&e.omega);
    Ok((total * grid.cell_volume(), grad))
}

fn value_and_gradient(e: &Energy, op: &OperatorHandle, x: &Field) -> Result<(f64, Field)> {
    let du = op.gradient(&total_field(e, x)?)?;
    value_and_gradient_from(e, op, &du)
}

/// Options for [`minimize`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// absolute tolerance on the masked gradient; `None` means `1e-8 max(1, |grad_0|)`
    pub grad_tol: Option<f64>,
    pub memory: usize,
    /// scale the initial inverse Hessian by `(|m(xi)|^2 + mu)^{-1}`
    pub precondition: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: None, memory: 10, precondition: true }
    }
}

/// Outcome of [`minimize`].
#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub u_star: Field,
    pub energy_value: f64,
    pub grad_norm: f64,
    pub grad_tol: f64,
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failures: usize,
    /// steps accepted by the approximate Wolfe test once energy differences
    /// reach rounding level
    pub approximate_steps: usize,
    /// energy after every accepted step, starting with the initial value
    pub energy_history: Vec<f64>,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_SHRINKS: usize = 40;
const CURVATURE_SIGMA: f64 = 0.9;

/// Spectral preconditioner `mask . F^{-1} (|m|^2 + mu)^{-1} F . mask`.
struct Preconditioner {
    weights: Option<Vec<f64>>,
    omega: SubBox,
}

impl Preconditioner {
    fn new(op: &OperatorHandle, omega: SubBox, enabled: bool) -> Self {
        if !enabled {
            return Self { weights: None, omega };
        }
        let grid = op.grid();
        let m2: Vec<f64> = (0..grid.len())
            .map(|i| (0..grid.dim()).map(|k| op.table().grad_symbol(k)[i].powi(2)).sum())
            .collect();
        // smallest non-zero |m|^2 sets the shift
        let mu = m2.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        let mu = if mu.is_finite() { mu } else { 1.0 };
        Self { weights: Some(m2.iter().map(|v| 1.0 / (v + mu)).collect()), omega }
    }

    fn apply(&self, op: &OperatorHandle, g: &Field) -> Result<Field> {
        match &self.weights {
            None => Ok(g.clone()),
            Some(w) => {
                let mut out = op.multiply(g, |i| w[i])?;
                out.mask_in_place(&self.omega);
                Ok(out)
            }
        }
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Minimizes `F(g + u)` over `u` supported in `omega` by limited-memory BFGS
/// with Armijo backtracking (`c_1 = 1e-4`, factor 1/2, at most 40 shrinks).
pub fn minimize(e: &Energy, op: &OperatorHandle, init: &Field, opts: MinimizeOptions) -> Result<MinimizeResult> {
    e.validate()?;
    check_inner(e, init, op)?;
    let grid = *e.grid();
    let w = grid.cell_volume();
    let dot = |a: &Field, b: &Field| w * a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>();

    let mut x = init.clone();
    x.mask_in_place(&e.omega);
    let precond = Preconditioner::new(op, e.omega, opts.precondition);
    let (mut f, mut g) = value_and_gradient(e, op, &x)?;
    let g0 = dot(&g, &g).sqrt();
    let tol = opts.grad_tol.unwrap_or(1e-8 * g0.max(1.0));
    let mut history = vec![f];
    let mut s_hist: Vec<Field> = Vec::new();
    let mut y_hist: Vec<Field> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut failures = 0;
    let mut approximate = 0;
    let mut iterations = 0;
    let mut gnorm = g0;
    let mut converged = gnorm <= tol;

    while !converged && iterations < opts.max_iter {
        // two-loop recursion
        let mut q = g.clone();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = rho_hist[i] * dot(&s_hist[i], &q);
            axpy(-alpha[i], &y_hist[i].values, &mut q.values);
        }
        let mut r = precond.apply(op, &q)?;
        if k > 0 {
            let py = precond.apply(op, &y_hist[k - 1])?;
            let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &py);
            r = r.scaled(gamma);
        } else {
            let pg = precond.apply(op, &g)?;
            let scale = 1.0 / dot(&pg, &pg).sqrt().max(1.0);
            r = r.scaled(scale);
        }
        for i in 0..k {
            let beta = rho_hist[i] * dot(&y_hist[i], &r);
            axpy(alpha[i] - beta, &s_hist[i].values, &mut r.values);
        }
        let mut d = r.scaled(-1.0);
        d.mask_in_place(&e.omega);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = precond.apply(op, &g)?.scaled(-1.0);
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                failures += 1;
                break;
            }
        }

        let mut step = 1.0;
        let mut accepted: Option<(Field, f64, Field)> = None;
        for _ in 0..=MAX_SHRINKS {
            let mut trial = x.clone();
            axpy(step, &d.values, &mut trial.values);
            let (ft, gt) = value_and_gradient(e, op, &trial)?;
            if ft <= f + ARMIJO_C1 * step * slope && ft < f {
                accepted = Some((trial, ft, gt));
                break;
            }
            // approximate Wolfe test once differences are at rounding level
            if (ft - f).abs() <= 1e-12 * f.abs().max(f64::MIN_POSITIVE) {
                let dslope = dot(&gt, &d);
                if dslope <= (1.0 - 2.0 * ARMIJO_C1) * slope.abs() && dslope >= CURVATURE_SIGMA * slope {
                    approximate += 1;
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            failures += 1;
            break;
        };
        let s = xn.sub(&x)?;
        let y = gn.sub(&g)?;
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if s_hist.len() == opts.memory.max(1) {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
            rho_hist.push(1.0 / sy);
        }
        x = xn;
        f = fnew;
        g = gn;
        history.push(f);
        iterations += 1;
        gnorm = dot(&g, &g).sqrt();
        converged = gnorm <= tol;
    }

    Ok(MinimizeResult {
        u_star: x.restrict_to(e.omega),
        energy_value: f,
        grad_norm: gnorm,
        grad_tol: tol,
        iterations,
        converged,
        line_search_failures: failures,
        approximate_steps: approximate,
        energy_history: history,
    })
}

/// Extreme Ritz values of `u -> -div D u` on fields supported in `omega`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct RitzReport {
    pub smallest: f64,
    pub largest: f64,
    pub steps: usize,
}

/// Lanczos with full reorthogonalization on the masked quadratic form
/// `u -> ||D u||^2`. A positive smallest value certifies strict convexity of
/// the `p = 2` energy on `H_0(omega)`.
pub fn ritz_extremes(op: &OperatorHandle, omega: &SubBox, steps: usize, seed: u64) -> Result<RitzReport> {
    let grid = *op.grid();
    let mask = omega.mask(&grid);
    let dim = mask.iter().filter(|b| **b).count();
    if dim == 0 {
        return Err(Error::InvalidInput("omega contains no grid points".into()));
    }
    let steps = steps.min(dim).max(1);
    let w = grid.cell_volume();
    let dot = |a: &[f64], b: &[f64]| w * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let apply = |v: &[f64]| -> Result<Vec<f64>> {
        let f = Field::new(grid, v.to_vec())?;
        let mut out = op.divergence(&op.gradient(&f)?)?.scaled(-1.0);
        out.mask_in_place(omega);
        Ok(out.values)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = mask.iter().map(|&m| if m { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    for j in 0..steps {
        let mut wv = apply(&basis[j])?;
        let a = dot(&wv, &basis[j]);
        alphas.push(a);
        for b in &basis {
            let c = dot(&wv, b);
            axpy(-c, b, &mut wv);
        }
        for b in &basis {
            let c = dot(&wv, b);
            axpy(-c, b, &mut wv);
        }
        let beta = dot(&wv, &wv).sqrt();
        if j + 1 == steps || beta < 1e-12 * a.abs().max(1e-300) {
            break;
        }
        betas.push(beta);
        wv.iter_mut().for_each(|x| *x /= beta);
        basis.push(wv);
    }
    let m = alphas.len();
    let (lo, hi) = tridiagonal_extremes(&alphas, &betas[..m - 1]);
    Ok(RitzReport { smallest: lo, largest: hi, steps: m })
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = a[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..a.len() {
        let denom = if q == 0.0 { f64::EPSILON * b[i - 1].abs().max(1e-300) } else { q };
        q = a[i] - x - b[i - 1] * b[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_extremes(a: &[f64], b: &[f64]) -> (f64, f64) {
    let m = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = (if i > 0 { b[i - 1].abs() } else { 0.0 }) + (if i + 1 < m { b[i].abs() } else { 0.0 });
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let bisect = |k: usize| {
        let (mut l, mut h) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (l + h);
            if sturm_count(a, b, mid) > k {
                h = mid;
            } else {
                l = mid;
            }
            if h - l <= 1e-15 * l.abs().max(h.abs()) {
                break;
            }
        }
        0.5 * (l + h)
    };
    (bisect(0), bisect(m - 1))
}

/// One horizon of a Γ-sweep.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GammaEntry {
    pub delta: f64,
    /// `||u_delta - u_ref||_{L^2}`
    pub distance: f64,
    pub energy: f64,
    /// `|F_delta(u_delta) - F_ref(u_ref)|`
    pub energy_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

/// Minimizers across horizons compared with the limit problem.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GammaReport {
    pub regime: Regime,
    /// `"classical"` or `"riesz s = ..."`
    pub reference: String,
    pub reference_energy: f64,
    pub reference_iterations: usize,
    pub reference_converged: bool,
    pub entries: Vec<GammaEntry>,
    pub distances_decreasing: bool,
    pub gaps_decreasing: bool,
    pub energy_offset: f64,
}

impl GammaReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self
            .entries
            .iter()
            .map(|e| {
                vec![
                    e.delta,
                    e.distance,
                    e.energy,
                    e.energy_gap,
                    e.iterations as f64,
                    if e.converged { 1.0 } else { 0.0 },
                ]
            })
            .collect();
        write_table(path, &["delta", "distance", "energy", "energy_gap", "iterations", "converged"], &rows)
    }
}

/// Γ-sweep result with the minimizers.
#[derive(Clone, Debug)]
pub struct GammaRun {
    pub report: GammaReport,
    pub reference: Field,
    pub minimizers: Vec<Field>,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn sweep(
    kernel: &Kernel,
    e: &Energy,
    deltas: &[f64],
    regime: Regime,
    reference: OperatorHandle,
    label: String,
    opts: MinimizeOptions,
) -> Result<GammaRun> {
    let grid = *e.grid();
    let zero = Field::zeros(grid);
    let base = minimize(e, &reference, &zero, opts)?;
    let top = deltas.iter().copied().fold(0.0, f64::max);
    let cache = SymbolCache::new(kernel, top * grid.max_frequency())?;
    let runs: Vec<Result<MinimizeResult>> = crate::parallel::par_map(deltas, |&d| {
        let sk = scale_kernel(kernel, d, regime)?;
        let op = OperatorHandle::for_kernel_cached(&cache, &sk, &grid)?;
        minimize(e, &op, &zero, opts)
    });
    let runs: Vec<MinimizeResult> = runs.into_iter().collect::<Result<_>>()?;
    let entries: Vec<GammaEntry> = deltas
        .iter()
        .zip(&runs)
        .map(|(&d, r)| GammaEntry {
            delta: d,
            distance: crate::operator::lp_error(&r.u_star, &base.u_star, 2.0).unwrap_or(f64::NAN),
            energy: r.energy_value,
            energy_gap: (r.energy_value - base.energy_value).abs(),
            iterations: r.iterations,
            converged: r.converged,
            grad_norm: r.grad_norm,
        })
        .collect();
    let dist: Vec<f64> = entries.iter().map(|e| e.distance).collect();
    let gaps: Vec<f64> = entries.iter().map(|e| e.energy_gap).collect();
    Ok(GammaRun {
        report: GammaReport {
            regime,
            reference: label,
            reference_energy: base.energy_value,
            reference_iterations: base.iterations,
            reference_converged: base.converged,
            distances_decreasing: strictly_decreasing(&dist),
            gaps_decreasing: strictly_decreasing(&gaps),
            entries,
            energy_offset: e.constant_offset(),
        },
        reference: base.u_star,
        minimizers: runs.into_iter().map(|r| r.u_star).collect(),
    })
}

/// Minimizers for vanishing horizons against the classical-gradient problem.
pub fn gamma_sweep_vanishing(kernel: &Kernel, e: &Energy, deltas: &[f64], opts: MinimizeOptions) -> Result<GammaRun> {
    let grid = *e.grid();
    for &d in deltas {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::OutOfRangeDelta { delta: d, regime: "vanishing", range: "(0, 1]".into() });
        }
        if d < 4.0 * grid.spacing() {
            return Err(Error::UnresolvedHorizon { delta: d, spacing: grid.spacing(), min: 4.0 * grid.spacing() });
        }
    }
    sweep(kernel, e, deltas, Regime::Vanishing, OperatorHandle::classical(&grid), "classical".into(), opts)
}

/// Minimizers for diverging horizons against the Riesz problem with exponent `s_inf`.
pub fn gamma_sweep_diverging(kernel: &Kernel, e: &Energy, deltas: &[f64], opts: MinimizeOptions) -> Result<GammaRun> {
    let s_inf = if kernel.family() == Family::Riesz {
        kernel.spec().s
    } else {
        limit_exponent(kernel, &DEFAULT_LIMIT_DELTAS)?.extrapolated
    };
    let grid = *e.grid();
    sweep(
        kernel,
        e,
        deltas,
        Regime::Diverging,
        OperatorHandle::riesz(&grid, s_inf),
        format!("riesz s = {s_inf}"),
        opts,
    )
}

/// Smooth low-mode complementary datum `cos(2 pi x/L) + 0.5 sin(4 pi y/L)` style field.
pub fn default_datum(grid: &Grid) -> Field {
    let l = grid.length();
    let tau = 2.0 * std::f64::consts::PI / l;
    if grid.dim() == 1 {
        Field::from_fn(*grid, |x| (tau * x[0]).cos() + 0.5 * (2.0 * tau * x[0]).sin())
    } else {
        Field::from_fn(*grid, |x| (tau * x[0]).cos() + 0.5 * (2.0 * tau * x[1]).sin() + 0.25 * (tau * (x[0] + x[1])).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_kernel, KernelSpec};

    fn setup(dim: usize, n: usize) -> (Grid, SubBox, OperatorHandle) {
        let grid = Grid::new(dim, n, 4.0).unwrap();
        let omega = SubBox::centered(&grid, 1.0);
        let k = make_kernel(KernelSpec::truncated_fractional(0.5, dim)).unwrap();
        let sk = scale_kernel(&k, 0.5, Regime::Vanishing).unwrap();
        (grid, omega, OperatorHandle::for_kernel(&sk, &grid).unwrap())
    }

    fn random_inner(grid: &Grid, omega: &SubBox, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::new(*grid, vals).unwrap().restrict_to(*omega)
    }

    #[test]
    fn zero_datum_zero_field_has_zero_energy() {
        let (grid, omega, op) = setup(1, 32);
        let e = Energy::new(Integrand::PowerNorm { p: 2.0 }, Field::zeros(grid), omega).unwrap();
        assert_eq!(energy_value(&e, &Field::zeros(grid), &op).unwrap(), 0.0);
        let a: Vec<f64> = (0..grid.len()).map(|i| 1.0 + (i as f64).sin()).collect();
        let w = Energy::new(Integrand::WeightedPower { p: 3.0, c: 0.5, a: a.clone() }, Field::zeros(grid), omega).unwrap();
        let v = energy_value(&w, &Field::zeros(grid), &op).unwrap();
        assert!((v - w.constant_offset()).abs() < 1e-14 * v);
    }

    #[test]
    fn single_mode_quadratic_energy() {
        let (grid, omega, op) = setup(1, 32);
        let l = grid.length();
        let g = Field::from_fn(grid, |x| (2.0 * std::f64::consts::PI * x[0] / l).sin());
        let e = Energy::new(Integrand::PowerNorm { p: 2.0 }, g, omega).unwrap();
        let v = energy_value(&e, &Field::zeros(grid), &op).unwrap();
        let amp = 2.0 * std::f64::consts::PI / l * op.table().q_hat()[1];
        assert!((v - 0.5 * amp * amp * l / 2.0).abs() < 1e-12 * v);
    }

    #[test]
    fn quadratic_gradient_is_minus_div_d() {
        let (grid, omega, op) = setup(1, 32);
        let e = Energy::new(Integrand::PowerNorm { p: 2.0 }, Field::zeros(grid), omega).unwrap();
        let u = random_inner(&grid, &omega, 5);
        let g = energy_gradient(&e, &u, &op).unwrap();
        let mut expect = op.divergence(&op.gradient(&u).unwrap()).unwrap().scaled(-1.0);
        expect.mask_in_place(&omega);
        for (a, b) in g.values.iter().zip(&expect.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_outside_omega() {
        let (grid, omega, op) = setup(2, 16);
        let e = Energy::new(Integrand::PowerNorm { p: 3.0 }, default_datum(&grid), omega).unwrap();
        let g = energy_gradient(&e, &random_inner(&grid, &omega, 2), &op).unwrap();
        for i in 0..grid.len() {
            if !omega.contains(grid.point(i), 2) {
                assert_eq!(g.values[i], 0.0);
            }
        }
    }

    #[test]
    fn zero_datum_minimizes_to_zero() {
        let (grid, omega, op) = setup(1, 64);
        let e = Energy::new(Integrand::PowerNorm { p: 2.0 }, Field::zeros(grid), omega).unwrap();
        let r = minimize(&e, &op, &random_inner(&grid, &omega, 9), MinimizeOptions::default()).unwrap();
        assert!(r.converged, "{} {}", r.grad_norm, r.grad_tol);
        assert!(r.u_star.max_abs() < 1e-6);
    }

    #[test]
    fn energy_decreases_along_accepted_steps() {
        let (grid, omega, op) = setup(1, 64);
        let e = Energy::new(Integrand::PowerNorm { p: 3.0 }, default_datum(&grid), omega).unwrap();
        let r = minimize(&e, &op, &Field::zeros(grid), MinimizeOptions::default()).unwrap();
        assert!(r.converged);
        let mut ties = 0;
        for w in r.energy_history.windows(2) {
            if w[1] >= w[0] {
                assert!(w[1] - w[0] <= 1e-12 * w[0].abs());
                ties += 1;
            }
        }
        assert!(ties <= r.approximate_steps);
    }

    #[test]
    fn ritz_values_are_positive() {
        let (_, omega, op) = setup(1, 64);
        let rep = ritz_extremes(&op, &omega, 40, 1).unwrap();
        assert!(rep.smallest > 0.0 && rep.largest > rep.smallest);
    }

    #[test]
    fn sturm_bisection_on_a_known_matrix() {
        // tridiag(-1, 2, -1) of size 4 has eigenvalues 2 - 2 cos(k pi / 5)
        let (lo, hi) = tridiagonal_extremes(&[2.0; 4], &[-1.0; 3]);
        let pi = std::f64::consts::PI;
        assert!((lo - (2.0 - 2.0 * (pi / 5.0).cos())).abs() < 1e-13);
        assert!((hi - (2.0 - 2.0 * (4.0 * pi / 5.0).cos())).abs() < 1e-13);
    }

    #[test]
    fn indefinite_matrix_field_is_rejected() {
        let grid = Grid::new(2, 8, 4.0).unwrap();
        let m = vec![vec![1.0, 2.0, 2.0, 1.0]; grid.len()];
        let r = Energy::new(Integrand::AnisotropicQuadratic { m }, Field::zeros(grid), SubBox::centered(&grid, 1.0));
        assert!(r.is_err());
    }
}
