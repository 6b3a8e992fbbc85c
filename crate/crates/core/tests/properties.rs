use nlgrad::analysis::fit_slope;
use nlgrad::grid::{Field, Grid, SubBox, VectorField};
use nlgrad::kernels::{limit_exponent, make_kernel, scale_kernel, KernelSpec, Regime, DEFAULT_LIMIT_DELTAS};
use nlgrad::operator::{lp_norm, lp_norm_vec, OperatorHandle};
use nlgrad::profile::symbol;
use nlgrad::solver::{default_datum, energy_value, Energy, Integrand};
use proptest::prelude::*;

fn field(grid: Grid, coeffs: &[f64]) -> Field {
    let l = grid.length();
    Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let w = 2.0 * std::f64::consts::PI * (k + 1) as f64 / l;
                c * ((w * x[0]).sin() + (w * (x[0] + 2.0 * x[1])).cos())
            })
            .sum()
    })
}

fn handle(dim: usize, n: usize, s: f64, delta: f64, regime: Regime) -> OperatorHandle {
    let grid = Grid::new(dim, n, 4.0).unwrap();
    let k = make_kernel(KernelSpec::truncated_fractional(s, dim)).unwrap();
    OperatorHandle::for_kernel(&scale_kernel(&k, delta, regime).unwrap(), &grid).unwrap()
}

fn regime_and_delta() -> impl Strategy<Value = (Regime, f64)> {
    prop_oneof![
        (0.3f64..1.0).prop_map(|d| (Regime::Vanishing, d)),
        (1.5f64..20.0).prop_map(|d| (Regime::Diverging, d)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_and_divergence_are_negative_adjoints(
        s in 0.1f64..0.9,
        (regime, delta) in regime_and_delta(),
        dim in 1usize..=2,
        a in prop::collection::vec(-1.0f64..1.0, 4),
        b in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let op = handle(dim, 32, s, delta, regime);
        let grid = *op.grid();
        let u = field(grid, &a);
        let comps = (0..dim).map(|d| field(grid, &b[d..]).values).collect();
        let psi = VectorField::new(grid, comps).unwrap();
        let du = op.gradient(&u).unwrap();
        let lhs = du.dot(&psi).unwrap();
        let rhs = -u.dot(&op.divergence(&psi).unwrap()).unwrap();
        let scale = lp_norm_vec(&du, 2.0) * lp_norm_vec(&psi, 2.0) + 1e-300;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn gradient_commutes_with_grid_shifts(
        s in 0.1f64..0.9,
        delta in 0.3f64..1.0,
        shift in 0usize..64,
        a in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let op = handle(1, 64, s, delta, Regime::Vanishing);
        let grid = *op.grid();
        let u = field(grid, &a);
        let shifted = Field::new(grid, (0..64).map(|i| u.values[(i + shift) % 64]).collect()).unwrap();
        let du = op.gradient(&u).unwrap();
        let dshift = op.gradient(&shifted).unwrap();
        for i in 0..64 {
            prop_assert!((dshift.components[0][i] - du.components[0][(i + shift) % 64]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_constants_vanishes(s in 0.1f64..0.9, (regime, delta) in regime_and_delta(), c in -5.0f64..5.0) {
        let op = handle(2, 16, s, delta, regime);
        let du = op.gradient(&Field::constant(*op.grid(), c)).unwrap();
        prop_assert!(du.max_abs() <= 1e-13 * c.abs().max(1.0));
    }

    #[test]
    fn masking_is_idempotent(lo in 0.2f64..1.9, width in 0.1f64..1.9, a in prop::collection::vec(-1.0f64..1.0, 3)) {
        let grid = Grid::new(1, 64, 4.0).unwrap();
        let omega = SubBox::interval(lo, (lo + width).min(3.9));
        let once = field(grid, &a).restrict_to(omega);
        let twice = once.clone().restrict_to(omega);
        prop_assert_eq!(&once.values, &twice.values);
        for i in 0..grid.len() {
            if !omega.contains(grid.point(i), 1) {
                prop_assert_eq!(once.values[i], 0.0);
            }
        }
    }

    #[test]
    fn compact_kernels_have_mass_n_at_every_vanishing_horizon(s in 0.05f64..0.95, dim in 1usize..=2, delta in 0.01f64..1.0) {
        let k = make_kernel(KernelSpec::truncated_fractional(s, dim)).unwrap();
        let m = scale_kernel(&k, delta, Regime::Vanishing).unwrap().mass().unwrap();
        prop_assert!((m - dim as f64).abs() < 1e-8);
    }

    #[test]
    fn symbol_is_positive_and_one_at_the_origin(s in 0.1f64..0.9, dim in 1usize..=2, xi in 0.0f64..50.0) {
        let k = make_kernel(KernelSpec::truncated_fractional(s, dim)).unwrap();
        prop_assert!((symbol(&k, 0.0).unwrap() - 1.0).abs() < 1e-8);
        prop_assert!(symbol(&k, xi).unwrap() > 0.0);
    }

    #[test]
    fn truncated_kernels_recover_their_exponent(s in 0.1f64..0.9) {
        let k = make_kernel(KernelSpec::truncated_fractional(s, 1)).unwrap();
        let est = limit_exponent(&k, &DEFAULT_LIMIT_DELTAS).unwrap().extrapolated;
        prop_assert!((est - s).abs() < 1e-6);
    }

    #[test]
    fn slope_fit_recovers_power_laws(rate in 0.2f64..3.0, c in 0.01f64..100.0) {
        let deltas = [0.4f64, 0.2, 0.1, 0.05];
        let errors: Vec<f64> = deltas.iter().map(|d| c * d.powf(rate)).collect();
        let (slope, idx) = fit_slope(&deltas, &errors, 0.0);
        prop_assert!((slope - rate).abs() < 1e-10);
        prop_assert_eq!(idx.len(), 4);
    }

    #[test]
    fn quadratic_energy_scales_quadratically(t in 0.1f64..5.0, a in prop::collection::vec(-1.0f64..1.0, 3)) {
        let op = handle(1, 64, 0.5, 0.5, Regime::Vanishing);
        let grid = *op.grid();
        let omega = SubBox::centered(&grid, 1.0);
        let e = Energy::new(Integrand::PowerNorm { p: 2.0 }, Field::zeros(grid), omega).unwrap();
        let u = field(grid, &a).restrict_to(omega);
        let base = energy_value(&e, &u, &op).unwrap();
        let scaled = energy_value(&e, &u.scaled(t), &op).unwrap();
        prop_assert!((scaled - t * t * base).abs() <= 1e-12 * (t * t * base).max(1e-300));
    }

    #[test]
    fn energies_are_finite_and_nonnegative(p in 1.2f64..4.0, a in prop::collection::vec(-1.0f64..1.0, 3)) {
        let op = handle(2, 16, 0.5, 0.8, Regime::Vanishing);
        let grid = *op.grid();
        let omega = SubBox::centered(&grid, 1.0);
        let e = Energy::new(Integrand::PowerNorm { p }, default_datum(&grid), omega).unwrap();
        let v = energy_value(&e, &field(grid, &a).restrict_to(omega), &op).unwrap();
        prop_assert!(v.is_finite() && v >= 0.0);
        prop_assert!(lp_norm(&default_datum(&grid), 2.0) > 0.0);
    }
}
