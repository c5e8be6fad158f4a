use std::f64::consts::PI;

use fns_core::analyticity::{lq_decay_check, sobolev_decay_report};
use fns_core::kernel::{build_stable_quadrature, kernel_table, subordinated_heat_kernel, KernelGrid, KernelSpec};
use fns_core::solver::{exact_solution, simulate, ExactKind, InitialKind, InitialSpec, SolverConfig};
use fns_core::spectral::make_grid;

fn poisson_1d(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

#[test]
fn both_kernel_methods_reproduce_the_poisson_kernel() {
    let grid = KernelGrid::new(8.0, 256, 64).unwrap();
    let table = kernel_table(&KernelSpec::heat(1.0, 1.0, 1), &grid).unwrap();
    let quad = build_stable_quadrature(0.5, 1024).unwrap();
    let pts: Vec<[f64; 3]> = (0..table.len()).map(|i| table.point(i)).collect();
    let sub = subordinated_heat_kernel(1.0, 1.0, 1, &pts, &quad).unwrap();
    let mut fourier_err = 0.0f64;
    let mut sub_err = 0.0f64;
    for (i, x) in pts.iter().enumerate() {
        let exact = poisson_1d(1.0, x[0]);
        fourier_err = fourier_err.max((table.values[i] - exact).abs());
        sub_err = sub_err.max((sub[i] - exact).abs());
    }
    assert!(fourier_err < 1e-6, "{fourier_err}");
    assert!(sub_err < 1e-6, "{sub_err}");
}

#[test]
fn shear_flow_decays_at_the_exact_rate() {
    let grid = make_grid(2, 32).unwrap();
    let mut cfg = SolverConfig::new(1.5, grid, InitialSpec::new(InitialKind::Shear, 1.0));
    cfg.t_end = 1.0;
    cfg.slab_dt = 1e-2;
    cfg.output_every = 1;
    cfg.q_list = vec![6.0, f64::INFINITY];
    cfg.keep_snapshots = true;
    let traj = simulate(&cfg).unwrap();
    let exact = exact_solution(ExactKind::Shear, 1.5, 1.0, 1.0, grid).unwrap();
    assert!(traj.final_state.relative_l2_error(&exact) < 1e-12);
    assert!(traj.energy_is_monotone());

    // t^{1/3} e^{−t} peaks at t = 1/3
    let reports = lq_decay_check(&traj, 1.5, &[f64::INFINITY]).unwrap();
    let r = &reports[0];
    assert!((r.alpha_prime - 1.0 / 3.0).abs() < 1e-15);
    assert!(r.interior && (r.argmax_time - 1.0 / 3.0).abs() <= 0.5e-2 + 1e-12, "{}", r.argmax_time);
    let peak = (1.0f64 / 3.0).powf(1.0 / 3.0) * (-1.0f64 / 3.0).exp();
    assert!((r.report.measured_sup - peak).abs() < 1e-4);
    assert!(lq_decay_check(&traj, 1.5, &[12.0]).is_err());

    let s = sobolev_decay_report(&traj, &[0, 1, 4]).unwrap();
    for (i, slope) in s.log_slopes.iter().enumerate() {
        assert!((slope + 1.0).abs() < 1e-10, "order {}: {slope}", s.orders[i]);
        assert!(s.eventually_decreasing[i]);
    }
}
