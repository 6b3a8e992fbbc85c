//! Browser bindings for the nlgrad demo page (`www/index.html`).
//!
//! Each export returns a JSON string; the `*_json` functions underneath are
//! plain Rust so they can be tested natively.

use nlgrad::analysis::{localization_rate, Norm, TestFunction};
use nlgrad::grid::Grid;
use nlgrad::kernels::{
    limit_exponent, log_grid, make_kernel, scale_kernel, ExponentProfile, Kernel, KernelSpec, Regime,
    DEFAULT_LIMIT_DELTAS,
};
use nlgrad::profile::SymbolCache;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn build_kernel(family: &str, s: f64, kappa: i32) -> Result<Kernel, String> {
    let spec = match family {
        "truncated-fractional" => KernelSpec::truncated_fractional(s, 1),
        "log-corrected" => KernelSpec::log_corrected(s, kappa, 1),
        // linear exponent from s at the origin to (1 + s) / 2 at the cutoff
        "variable-exponent" => {
            let profile = ExponentProfile::from_fn(11, |r| s + 0.5 * (1.0 - s) * r).map_err(|e| e.to_string())?;
            KernelSpec::variable_exponent(profile, 1)
        }
        "riesz" => KernelSpec::riesz(s, 1),
        other => return Err(format!("unknown kernel family {other:?}")),
    };
    make_kernel(spec).map_err(|e| e.to_string())
}

fn regime(diverging: bool) -> Regime {
    if diverging {
        Regime::Diverging
    } else {
        Regime::Vanishing
    }
}

#[derive(Serialize)]
struct SymbolCurve {
    xi: Vec<f64>,
    /// `q_delta(xi)` for each requested horizon
    curves: Vec<(f64, Vec<f64>)>,
    /// limit symbol: 1 for vanishing horizons, the Riesz symbol for diverging ones
    reference: Vec<f64>,
}

/// Symbols `q_delta(xi)` on a log grid of `[1e-2, xi_max]`.
pub fn symbol_curve_json(
    family: &str,
    s: f64,
    kappa: i32,
    deltas: &[f64],
    diverging: bool,
    xi_max: f64,
) -> Result<String, String> {
    let kernel = build_kernel(family, s, kappa)?;
    let reach = xi_max * deltas.iter().copied().fold(1.0, f64::max);
    let cache = SymbolCache::new(&kernel, reach).map_err(|e| e.to_string())?;
    let xi = log_grid(1e-2, xi_max, 200);
    let mut curves = Vec::new();
    for &d in deltas {
        let sk = scale_kernel(&kernel, d, regime(diverging)).map_err(|e| e.to_string())?;
        curves.push((d, xi.iter().map(|x| sk.symbol_factor() * cache.eval(d * x)).collect()));
    }
    let reference = if diverging {
        let s_inf = kernel.analytic_s_inf().unwrap_or(s);
        xi.iter().map(|x| nlgrad::profile::riesz_symbol(s_inf, 1, *x)).collect()
    } else {
        vec![1.0; xi.len()]
    };
    Ok(serde_json::to_string(&SymbolCurve { xi, curves, reference }).expect("serializes"))
}

#[derive(Serialize)]
struct LocalizationCurve {
    deltas: Vec<f64>,
    errors: Vec<f64>,
    bounds: Vec<f64>,
    slope: f64,
}

/// `|| D_delta u - u' ||_inf` for a smooth bump on a torus of length 8.
pub fn localization_curve_json(family: &str, s: f64, kappa: i32, n: usize) -> Result<String, String> {
    let kernel = build_kernel(family, s, kappa)?;
    let grid = Grid::new(1, n, 8.0).map_err(|e| e.to_string())?;
    let deltas: Vec<f64> = [0.8, 0.4, 0.2, 0.1, 0.05].into_iter().filter(|d| *d >= 4.0 * grid.spacing()).collect();
    let r = localization_rate(&kernel, TestFunction::smooth(), &grid, &deltas, Norm::Linf).map_err(|e| e.to_string())?;
    let curve = LocalizationCurve {
        deltas: r.deltas,
        errors: r.errors,
        bounds: r.bounds.unwrap_or_default(),
        slope: r.fitted_slope,
    };
    Ok(serde_json::to_string(&curve).expect("serializes"))
}

#[derive(Serialize)]
struct LimitCurve {
    deltas: Vec<f64>,
    estimates: Vec<f64>,
    extrapolated: f64,
    analytic: Option<f64>,
}

/// Per-horizon estimates of `s_inf` and their extrapolation.
pub fn limit_exponent_curve_json(family: &str, s: f64, kappa: i32) -> Result<String, String> {
    let kernel = build_kernel(family, s, kappa)?;
    let le = limit_exponent(&kernel, &DEFAULT_LIMIT_DELTAS).map_err(|e| e.to_string())?;
    let curve = LimitCurve {
        deltas: le.deltas,
        estimates: le.estimates,
        extrapolated: le.extrapolated,
        analytic: kernel.analytic_s_inf(),
    };
    Ok(serde_json::to_string(&curve).expect("serializes"))
}

#[wasm_bindgen]
pub fn symbol_curve(family: &str, s: f64, kappa: i32, deltas: Vec<f64>, diverging: bool, xi_max: f64) -> Result<String, JsError> {
    symbol_curve_json(family, s, kappa, &deltas, diverging, xi_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn localization_curve(family: &str, s: f64, kappa: i32, n: usize) -> Result<String, JsError> {
    localization_curve_json(family, s, kappa, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn limit_exponent_curve(family: &str, s: f64, kappa: i32) -> Result<String, JsError> {
    limit_exponent_curve_json(family, s, kappa).map_err(|e| JsError::new(&e))
}
