use fns_core::analyticity::{estimate_radius, DEFAULT_FLOOR};
use fns_core::inequalities::{f_sequence, g_closed_form, g_sequence, hermite_eval, SequenceValues};
use fns_core::kernel::{kernel_table, KernelGrid, KernelSpec};
use fns_core::rng;
use fns_core::solver::{init_field, InitialSpec};
use fns_core::spectral::{apply_semigroup, leray_project, make_grid, nonlinear_term, Dealias, TorusGrid};
use fns_core::{SpectralScalarField, SpectralVectorField};
use proptest::prelude::*;

fn random_physical(grid: TorusGrid, seed: u64, components: usize) -> Vec<Vec<f64>> {
    let mut s = rng::stream(seed, 17);
    (0..components)
        .map(|_| (0..grid.len()).map(|_| rng::normal(&mut s)).collect())
        .collect()
}

fn grid_strategy() -> impl Strategy<Value = TorusGrid> {
    (1usize..=3, 3u32..=5).prop_map(|(d, e)| {
        let n = if d == 3 { 1 << e.min(4) } else { 1 << e };
        make_grid(d, n).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parseval_and_round_trip(grid in grid_strategy(), seed in any::<u64>()) {
        let v = random_physical(grid, seed, 1).remove(0);
        let f = SpectralScalarField::from_physical(grid, &v);
        let physical: f64 = v.iter().map(|x| x * x).sum::<f64>() * grid.cell_volume();
        let spectral: f64 = f.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
            * grid.period().powi(grid.dim() as i32);
        prop_assert!((physical - spectral).abs() <= 1e-12 * physical);
        let back = f.to_physical();
        let err = v.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn leray_projection_is_idempotent(grid in grid_strategy(), seed in any::<u64>()) {
        let u = SpectralVectorField::from_physical(grid, &random_physical(grid, seed, grid.dim()));
        let p = leray_project(&u);
        prop_assert!(p.relative_divergence() < 1e-13);
        prop_assert!(leray_project(&p).max_abs_diff(&p) <= 1e-14 * p.max_abs_coeff().max(1.0));
        // P is an orthogonal projection: ⟨Pu, u − Pu⟩ = 0
        let mut rest = u.clone();
        rest.axpy(-1.0, &p);
        prop_assert!(p.inner(&rest).abs() <= 1e-11 * u.inner(&u));
    }

    #[test]
    fn semigroup_law(seed in any::<u64>(), gamma in 0.5f64..=2.0, s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let grid = make_grid(2, 16).unwrap();
        let u = leray_project(&SpectralVectorField::from_physical(grid, &random_physical(grid, seed, 2)));
        let two = apply_semigroup(&apply_semigroup(&u, gamma, s).unwrap(), gamma, t).unwrap();
        let one = apply_semigroup(&u, gamma, s + t).unwrap();
        prop_assert!(two.max_abs_diff(&one) <= 1e-13 * u.max_abs_coeff());
    }

    #[test]
    fn nonlinearity_conserves_energy(seed in any::<u64>(), radius in 0.05f64..0.5) {
        let grid = make_grid(2, 32).unwrap();
        let u = init_field(&InitialSpec::gevrey(1.0, radius, seed), grid).unwrap();
        let b = nonlinear_term(&u, Dealias::TwoThirds).unwrap();
        let scale = b.l2_norm() * u.l2_norm();
        prop_assert!(b.inner(&u).abs() <= 1e-12 * scale.max(1e-300));
        prop_assert!(b.relative_divergence() < 1e-12);
    }

    #[test]
    fn gevrey_data_are_real_solenoidal_and_mean_zero(seed in any::<u64>()) {
        let grid = make_grid(2, 16).unwrap();
        let u = init_field(&InitialSpec::gevrey(0.5, 0.2, seed), grid).unwrap();
        prop_assert!(u.hermitian_defect() == 0.0);
        prop_assert!(u.relative_divergence() < 1e-14);
        prop_assert!(u.mean_is_zero());
    }

    #[test]
    fn radius_recovered_from_exponential_spectra(r in 0.01f64..2.0, c in 0.1f64..10.0) {
        let s: Vec<f64> = (0..80).map(|k| c * (-r * k as f64).exp()).collect();
        let e = estimate_radius(&s, DEFAULT_FLOOR, (4, 12)).unwrap();
        prop_assert!((e.radius - r).abs() < 1e-10 * r.max(1.0));
    }

    #[test]
    fn hermite_derivative_identity(n in 1usize..=10, x in -2.0f64..2.0) {
        // d^n/dx^n e^{−x²} = (−1)^n H_n(x) e^{−x²}, checked through
        // d/dx (H_{n−1} e^{−x²}) = −H_n e^{−x²} by a centred difference
        let g = |y: f64| hermite_eval(n - 1, y).unwrap() * (-y * y).exp();
        let h = 1e-4;
        let fd = (-g(x + 2.0 * h) + 8.0 * g(x + h) - 8.0 * g(x - h) + g(x - 2.0 * h)) / (12.0 * h);
        let exact = -hermite_eval(n, x).unwrap() * (-x * x).exp();
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "{fd} vs {exact}");
    }

    #[test]
    fn f_majorization_holds(c in 1.0f64..3.0, c1 in 1.0f64..3.0, big_n in 1usize..=6, gamma in 1.01f64..2.0) {
        let r = f_sequence(60, c, c1, big_n, gamma).unwrap();
        prop_assert!(r.pass, "max ratio {}", r.max_normalized());
    }

    #[test]
    fn kernel_parity(k in 0usize..=3, alpha in prop::sample::select(vec![0.0, 0.5]), oseen in any::<bool>()) {
        let spec = if oseen { KernelSpec::oseen(1.5, 1.0, 2, 1, 2) } else { KernelSpec::heat(1.5, 1.0, 2) };
        let t = kernel_table(&spec.with_derivative(k).with_frac_order(alpha), &KernelGrid::new(8.0, 64, 4).unwrap()).unwrap();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let scale = t.max_abs();
        for off in [[1i64, 0, 0], [3, -2, 0], [7, 5, 0]] {
            let a = t.value_at_offset(off).unwrap();
            let b = t.value_at_offset([-off[0], -off[1], 0]).unwrap();
            prop_assert!((a - sign * b).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn g_recurrence_matches_closed_form() {
    let r = g_sequence(30).unwrap();
    let SequenceValues::Integer(g) = r.values else { unreachable!() };
    for (n, v) in g.iter().enumerate() {
        assert_eq!(*v, g_closed_form(n));
    }
}
