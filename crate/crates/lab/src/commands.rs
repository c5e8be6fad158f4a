use std::path::Path;

use fns_core::analyticity::{
    default_band, derivative_bound_report_with, estimate_radius, radius_growth_fit, shell_spectrum, RadiusTrace,
};
use fns_core::inequalities::{
    binomial_stirling_check, check_cramer_bound, f_sequence, fractional_leibniz_check, g_closed_form, g_sequence,
    sup_inequality_check, SequenceReport, SequenceValues,
};
use fns_core::kernel::{decay_sweep, kernel_table, lemma_sweep, p_spread, KernelGrid, KernelSpec, LemmaGrid};
use fns_core::solver::{parse_method, simulate, InitialKind, InitialSpec, SolverConfig};
use fns_core::spectral::make_grid;
use num_bigint::BigUint;

use crate::config::*;
use crate::error::LabError;
use crate::output::{fmt_f64, report_row, CsvTable, OutputSet, REPORT_HEADER};
use crate::snapshot::{read_field_snapshot, write_field_snapshot};

/// Divergence budget of a dynamic run, relative to the largest coefficient.
pub const DIVERGENCE_BUDGET: f64 = 1e-11;

pub fn simulate_cmd(p: &SimulateParams, out: &mut OutputSet) -> Result<bool, LabError> {
    let grid = make_grid(2, p.n)?;
    let kind = match p.initial.as_str() {
        "shear" => InitialKind::Shear,
        "taylor_green" => InitialKind::TaylorGreen,
        "gevrey_random" => InitialKind::GevreyRandom,
        "snapshot" => {
            if p.initial_path.is_empty() {
                return Err(LabError::Config("initial = \"snapshot\" needs initial_path".into()));
            }
            let snap = read_field_snapshot(Path::new(&p.initial_path))?;
            if snap.field.grid != grid {
                return Err(LabError::Config(format!(
                    "snapshot grid is d = {}, n = {} but the run asks for d = 2, n = {}",
                    snap.field.grid.dim(),
                    snap.field.grid.n(),
                    p.n
                )));
            }
            InitialKind::Snapshot(Box::new(snap.field))
        }
        other => return Err(LabError::Config(format!("unknown initial kind `{other}`"))),
    };
    let mut initial = InitialSpec::new(kind, p.amplitude);
    initial.gevrey_radius = p.radius;
    initial.seed = p.seed;
    let mut cfg = SolverConfig::new(p.gamma, grid, initial);
    cfg.t_end = p.t_end;
    cfg.slab_dt = p.dt;
    cfg.method = parse_method(&p.method)?;
    cfg.picard_tol = p.picard_tol;
    cfg.picard_max_iter = p.picard_max_iter;
    cfg.collocation_points = p.collocation;
    cfg.output_every = p.output_every;
    cfg.q_list = exponents(&p.q_list);
    cfg.keep_snapshots = p.write_snapshots;
    let traj = simulate(&cfg)?;

    let mut header = vec!["time".to_string(), "energy".into(), "dissipation".into()];
    header.extend(traj.norm_exponents.iter().map(|&q| format!("norm_L{}", Exponent(q))));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new(&header_refs);
    for (i, &t) in traj.times.iter().enumerate() {
        let mut row = vec![fmt_f64(t), fmt_f64(traj.energy_series[i]), fmt_f64(traj.dissipation_series[i])];
        row.extend(traj.norm_series.iter().map(|s| fmt_f64(s[i])));
        table.push(row);
    }
    out.csv("trajectory.csv", &table)?;

    let mut kato = CsvTable::new(&["q", "alpha", "time", "weighted_norm", "running_sup"]);
    for ks in &traj.kato {
        let series = traj.norm_series_for(ks.q).unwrap_or(&[]);
        for (i, &t) in traj.times.iter().enumerate() {
            let w = if t > 0.0 { t.powf(ks.alpha) * series[i] } else { 0.0 };
            kato.push(vec![
                Exponent(ks.q).to_string(),
                fmt_f64(ks.alpha),
                fmt_f64(t),
                fmt_f64(w),
                fmt_f64(ks.running_sup[i]),
            ]);
        }
    }
    out.csv("kato.csv", &kato)?;

    if !traj.contraction_diags.is_empty() {
        let mut c = CsvTable::new(&["slab", "iterations", "converged", "max_factor", "final_update", "solution_norm"]);
        for (i, d) in traj.contraction_diags.iter().enumerate() {
            c.push(vec![
                (i + 1).to_string(),
                d.iterations.to_string(),
                d.converged.to_string(),
                fmt_f64(d.max_factor()),
                fmt_f64(d.update_norms.last().copied().unwrap_or(0.0)),
                fmt_f64(d.solution_norm),
            ]);
        }
        out.csv("contraction.csv", &c)?;
    }

    for (i, snap) in traj.snapshots.iter().enumerate() {
        let path = out.path(&format!("snapshot_{i:05}.fns1"));
        write_field_snapshot(snap, p.gamma, traj.times[i], &path)?;
        out.record(path);
    }
    let path = out.path("final.fns1");
    write_field_snapshot(&traj.final_state, p.gamma, *traj.times.last().unwrap(), &path)?;
    out.record(path);

    Ok(traj.energy_is_monotone()
        && traj.max_divergence <= DIVERGENCE_BUDGET
        && traj.contraction_diags.iter().all(|d| d.converged))
}

fn kernel_spec(kind: &str, gamma: f64, t: f64, d: usize, j: usize, m: usize) -> Result<KernelSpec, LabError> {
    match kind {
        "heat" => Ok(KernelSpec::heat(gamma, t, d)),
        "oseen" => Ok(KernelSpec::oseen(gamma, t, d, j, m)),
        other => Err(LabError::Config(format!("unknown kernel kind `{other}`"))),
    }
}

fn kernel_grid(d: usize, extent: f64, samples: usize, pad: usize) -> Result<KernelGrid, LabError> {
    let pad = if pad == 0 { KernelGrid::default_pad(d) } else { pad };
    Ok(KernelGrid::new(extent, samples, pad)?)
}

pub fn kernel_table_cmd(p: &KernelTableParams, out: &mut OutputSet) -> Result<bool, LabError> {
    let spec = kernel_spec(&p.kind, p.gamma, p.t, p.d, p.j, p.m)?
        .with_derivative(p.k)
        .with_frac_order(p.alpha);
    let table = kernel_table(&spec, &kernel_grid(p.d, p.extent, p.samples, p.pad)?)?;
    let mut header: Vec<String> = (1..=p.d).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvTable::new(&header_refs);
    for idx in 0..table.len() {
        let x = table.point(idx);
        let mut row: Vec<String> = x[..p.d].iter().map(|&v| fmt_f64(v)).collect();
        row.push(fmt_f64(table.values[idx]));
        csv.push(row);
    }
    out.csv("kernel_table.csv", &csv)?;
    Ok(true)
}

pub fn verify_kernels_cmd(p: &VerifyKernelsParams, out: &mut OutputSet) -> Result<bool, LabError> {
    let base = kernel_spec(&p.kind, p.gamma, 1.0, p.d, p.j, p.m)?.with_frac_order(p.alpha);
    let orders: Vec<usize> = (0..=p.kmax).collect();
    let reports = decay_sweep(&base, &kernel_grid(p.d, p.extent, p.samples, p.pad)?, &orders)?;
    let mut csv = CsvTable::new(&REPORT_HEADER);
    for r in &reports {
        csv.push(report_row(r));
    }
    out.csv("verify_kernels.csv", &csv)?;
    Ok(reports.iter().all(|r| r.pass))
}

pub fn verify_lemma_cmd(p: &VerifyLemmaParams, out: &mut OutputSet) -> Result<bool, LabError> {
    let mut grid = LemmaGrid::default_for(p.d);
    if p.n > 0 {
        grid.n = p.n;
    }
    if p.spacing > 0.0 {
        grid.spacing = p.spacing;
    }
    let orders: Vec<usize> = (0..=p.kmax).collect();
    let ps = exponents(&p.p_list);
    let reports = lemma_sweep(p.gamma, p.d, &orders, p.alpha, &ps, &grid)?;
    let mut csv = CsvTable::new(&[
        "gamma",
        "d",
        "k",
        "alpha",
        "p",
        "norm_t1",
        "norm_t2",
        "measured_exponent",
        "expected_exponent",
        "exponent_pass",
        "normalized_constant",
        "threshold",
        "bound_pass",
        "p_spread",
        "p_uniform",
    ]);
    let mut pass = true;
    for chunk in reports.chunks(ps.len()) {
        let refs: Vec<_> = chunk.iter().collect();
        let spread = p_spread(&refs);
        let uniform = spread < p.max_spread;
        pass &= uniform;
        for r in chunk {
            pass &= r.pass();
            let e = &r.report;
            csv.push(vec![
                fmt_f64(p.gamma),
                p.d.to_string(),
                e.params.k.unwrap_or(0).to_string(),
                fmt_f64(p.alpha),
                Exponent(e.params.p.unwrap_or(0.0)).to_string(),
                fmt_f64(r.norm_t1),
                fmt_f64(r.norm_t2),
                fmt_f64(r.measured_exponent),
                fmt_f64(r.expected_exponent),
                r.exponent_pass.to_string(),
                fmt_f64(e.normalized_constant),
                fmt_f64(e.threshold),
                e.pass.to_string(),
                fmt_f64(spread),
                uniform.to_string(),
            ]);
        }
    }
    out.csv("verify_lemma.csv", &csv)?;
    Ok(pass)
}

pub fn radius_cmd(p: &RadiusParams, out: &mut OutputSet) -> Result<bool, LabError> {
    if p.snapshots.is_empty() {
        return Err(LabError::Usage("radius needs --snapshots PATH[,PATH...]".into()));
    }
    let snaps = p
        .snapshots
        .iter()
        .map(|s| read_field_snapshot(Path::new(s)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = snaps[0].field.grid.n();
    let band = if p.band_lo == 0 && p.band_hi == 0 {
        default_band(n)
    } else {
        (p.band_lo, p.band_hi)
    };
    let mut csv = CsvTable::new(&["path", "time", "radius", "fit_r2", "usable_shells", "reliable", "super_exponential"]);
    for (path, s) in p.snapshots.iter().zip(&snaps) {
        let e = estimate_radius(&shell_spectrum(&s.field), p.floor, band)?;
        csv.push(vec![
            path.clone(),
            fmt_f64(s.time),
            fmt_f64(e.radius),
            fmt_f64(e.fit_r2),
            e.usable_shells.to_string(),
            e.reliable.to_string(),
            e.super_exponential.to_string(),
        ]);
    }
    out.csv("radius.csv", &csv)?;
    if p.r0 > 0.0 {
        let trace = RadiusTrace::from_fields(snaps.iter().map(|s| (s.time, &s.field)), p.floor, band)?;
        let fit = radius_growth_fit(&trace, p.r0, (p.window_lo, p.window_hi))?;
        let mut g = CsvTable::new(&["r0", "window_lo", "window_hi", "slope", "intercept", "fit_r2", "points"]);
        g.push(vec![
            fmt_f64(p.r0),
            fmt_f64(p.window_lo),
            fmt_f64(p.window_hi),
            fmt_f64(fit.slope),
            fmt_f64(fit.intercept),
            fmt_f64(fit.fit_r2),
            fit.points.to_string(),
        ]);
        out.csv("radius_growth.csv", &g)?;
    }
    Ok(true)
}

pub fn derivative_report_cmd(p: &DerivativeReportParams, out: &mut OutputSet) -> Result<bool, LabError> {
    if p.snapshot.is_empty() {
        return Err(LabError::Usage("derivative-report needs --snapshot PATH".into()));
    }
    let snap = read_field_snapshot(Path::new(&p.snapshot))?;
    let mut csv = CsvTable::new(&["time", "q_prime", "alpha_prime", "k", "norm", "c_k"]);
    let mut summary = CsvTable::new(&["time", "q_prime", "max_c_k", "baseline", "factor", "pass"]);
    let mut pass = true;
    for q in exponents(&p.q_prime) {
        let r = derivative_bound_report_with(&snap.field, snap.time, snap.gamma, q, p.kmax, p.axis)?;
        for e in &r.entries {
            csv.push(vec![
                fmt_f64(r.time),
                Exponent(q).to_string(),
                fmt_f64(r.alpha_prime),
                e.k.to_string(),
                fmt_f64(e.norm),
                fmt_f64(e.normalized),
            ]);
        }
        let base = r.max_up_to(p.k_base);
        let ok = r.max_normalized <= p.factor * base;
        pass &= ok;
        summary.push(vec![
            fmt_f64(r.time),
            Exponent(q).to_string(),
            fmt_f64(r.max_normalized),
            fmt_f64(base),
            fmt_f64(p.factor),
            ok.to_string(),
        ]);
    }
    out.csv("derivative_report.csv", &csv)?;
    out.csv("derivative_summary.csv", &summary)?;
    Ok(pass)
}

pub fn bench_cmd(p: &BenchParams, out: &mut OutputSet) -> Result<bool, LabError> {
    let mut reports = Vec::new();
    let xs: Vec<f64> = (0..=4000).map(|i| -10.0 + 0.005 * i as f64).collect();
    reports.push(check_cramer_bound(p.cramer_nmax, &xs)?);
    reports.push(sup_inequality_check(p.sup_kmax, p.sup_d)?);
    for &n in &p.binomial_n {
        reports.push(binomial_stirling_check(n, p.binomial_kmax)?);
    }
    let grid = make_grid(p.leibniz_d, p.leibniz_n)?;
    reports.push(fractional_leibniz_check(
        grid,
        p.leibniz_epsilon,
        p.leibniz_p,
        p.leibniz_trials,
        p.seed,
    )?);
    let mut csv = CsvTable::new(&REPORT_HEADER);
    for r in &reports {
        csv.push(report_row(r));
    }
    let mut pass = reports.iter().all(|r| r.pass);

    let mut seq = CsvTable::new(&["sequence", "parameters", "max_normalized", "bound_constant", "pass"]);
    let g = g_sequence(p.g_nmax)?;
    let closed = match &g.values {
        SequenceValues::Integer(v) => v.iter().enumerate().all(|(n, x)| *x == g_closed_form(n)),
        SequenceValues::Log(_) => false,
    };
    pass &= g.pass && closed;
    seq.push(vec![
        "G".into(),
        format!("nmax={} closed_form={closed}", p.g_nmax),
        fmt_f64(g.max_normalized()),
        fmt_f64(g.bound_constant),
        g.pass.to_string(),
    ]);
    for c in [1.0, 2.0] {
        for c1 in [1.0, 2.0] {
            for big_n in [1, 2, 4] {
                for gamma in [1.5, 2.0] {
                    let f = f_sequence(p.f_nmax, c, c1, big_n, gamma)?;
                    pass &= f.pass;
                    seq.push(vec![
                        "F".into(),
                        format!("C={c} C1={c1} N={big_n} gamma={gamma} nmax={}", p.f_nmax),
                        fmt_f64(f.max_normalized()),
                        fmt_f64(f.bound_constant),
                        f.pass.to_string(),
                    ]);
                }
            }
        }
    }
    out.csv("bench_reports.csv", &csv)?;
    out.csv("bench_sequences.csv", &seq)?;
    Ok(pass)
}

fn push_sequence(csv: &mut CsvTable, r: &SequenceReport) {
    for (n, &norm) in r.normalized.iter().enumerate() {
        let (value, ln_value) = match &r.values {
            SequenceValues::Integer(v) => (v[n].to_string(), fmt_f64(big_ln(&v[n]))),
            SequenceValues::Log(l) => (fmt_f64(l[n].exp()), fmt_f64(l[n])),
        };
        csv.push(vec![
            r.name.clone(),
            n.to_string(),
            value,
            ln_value,
            fmt_f64(norm),
            fmt_f64(r.bound_constant),
        ]);
    }
}

fn big_ln(v: &BigUint) -> f64 {
    let shift = v.bits().saturating_sub(64);
    let top: BigUint = v >> shift;
    let top: f64 = top.to_string().parse().expect("decimal digits parse");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn recurrences_cmd(p: &RecurrencesParams, out: &mut OutputSet) -> Result<bool, LabError> {
    let g = g_sequence(p.nmax.min(64))?;
    let f = f_sequence(p.nmax, p.c, p.c1, p.big_n, p.gamma)?;
    let mut csv = CsvTable::new(&["sequence", "n", "value", "ln_value", "normalized", "bound_constant"]);
    push_sequence(&mut csv, &g);
    push_sequence(&mut csv, &f);
    out.csv("sequences.csv", &csv)?;
    Ok(g.pass && f.pass)
}
