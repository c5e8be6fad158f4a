//! Analyticity measurements on spectral data.
//!
//! The radius of analyticity is measured as the exponential type of the
//! Fourier coefficients: if `max_{|ξ|∈[κ,κ+1)} |û(ξ)| ≈ C e^{−rκ}` then `u`
//! extends holomorphically to the strip of half-width `r`.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::report::{EstimateParams, EstimateReport};
use crate::solver::{kato_exponent, TrajectoryRecord};
use crate::spectral::{lp_norm, partial_derivative, SpectralVectorField};

/// Shells whose maximum is below this fraction of the spectral maximum are
/// treated as roundoff.
pub const DEFAULT_FLOOR: f64 = 1e-13;

/// Fewer usable shells than this make an estimate unreliable.
pub const MIN_RELIABLE_SHELLS: usize = 5;

/// Fits with a smaller coefficient of determination are unreliable.
pub const RELIABLE_R2: f64 = 0.9;

/// Largest derivative order accepted by [`derivative_bound_report`].
pub const MAX_DERIVATIVE_ORDER: usize = 16;

/// `max |û(ξ)|` over `κ ≤ |ξ| < κ+1` and over components, for every shell.
pub fn shell_spectrum(u: &SpectralVectorField) -> Vec<f64> {
    let g = u.grid;
    let max_shell = ((g.dim() as f64).sqrt() * (g.n() / 2) as f64).floor() as usize + 1;
    let mut out = alloc::vec![0.0; max_shell + 1];
    for idx in 0..g.len() {
        let kappa = (g.norm2(idx) as f64).sqrt().floor() as usize;
        for comp in &u.coeffs {
            let a = comp[idx].norm();
            if a > out[kappa] {
                out[kappa] = a;
            }
        }
    }
    while out.len() > 1 && *out.last().unwrap() == 0.0 {
        out.pop();
    }
    out
}

/// Fit band `[n/8, n/3]`: resolved and inside the 2/3 dealiasing limit.
pub fn default_band(n: usize) -> (usize, usize) {
    (n / 8, n / 3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub fit_r2: f64,
    pub usable_shells: usize,
    pub reliable: bool,
    /// The log-spectrum bends downward across the band, as for
    /// faster-than-exponential decay.
    pub super_exponential: bool,
}

struct LineFit {
    slope: f64,
    intercept: f64,
    r2: f64,
}

fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    LineFit { slope, intercept, r2 }
}

/// Curvature `c₂` of the least-squares parabola through `(x, y)`.
fn quadratic_coefficient(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    // centre for conditioning, then solve the 3×3 normal equations
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for (&a, &b) in x.iter().zip(y) {
        let u = a - mx;
        let mut p = 1.0;
        for (i, si) in s.iter_mut().enumerate() {
            *si += p;
            if i < 3 {
                t[i] += p * b;
            }
            p *= u;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-300 {
        return 0.0;
    }
    let mut m2 = m;
    for r in 0..3 {
        m2[r][2] = t[r];
    }
    det(m2) / d
}

/// Least-squares slope of `ln spectrum` over the shells of `band` whose value
/// exceeds `floor` times the spectral maximum; the radius is minus the slope.
pub fn estimate_radius(spectrum: &[f64], floor: f64, band: (usize, usize)) -> Result<RadiusEstimate> {
    if !(floor > 0.0) {
        return Err(Error::RadiusFit(format!("floor must be positive, got {floor}")));
    }
    let (lo, hi) = band;
    if lo > hi {
        return Err(Error::RadiusFit(format!("empty band [{lo}, {hi}]")));
    }
    let top = spectrum.iter().copied().fold(0.0, f64::max);
    let cut = floor * top;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in lo..=hi.min(spectrum.len().saturating_sub(1)) {
        let v = spectrum[k];
        if v > cut && v > 0.0 {
            xs.push(k as f64);
            ys.push(v.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::RadiusFit(format!(
            "only {} shells of [{lo}, {hi}] lie above the floor",
            xs.len()
        )));
    }
    let fit = line_fit(&xs, &ys);
    let width = xs[xs.len() - 1] - xs[0];
    let curvature = if xs.len() >= 4 { quadratic_coefficient(&xs, &ys) } else { 0.0 };
    // the local slope changes by 2c₂·width across the band
    let bend = -2.0 * curvature * width;
    let super_exponential = bend > 0.25 * fit.slope.abs().max(1e-300) || (xs.len() >= 3 && fit.r2 < RELIABLE_R2);
    let radius = (-fit.slope).max(0.0);
    Ok(RadiusEstimate {
        radius,
        fit_r2: fit.r2,
        usable_shells: xs.len(),
        reliable: xs.len() >= MIN_RELIABLE_SHELLS && fit.r2 >= RELIABLE_R2,
        super_exponential,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusTrace {
    pub times: Vec<f64>,
    pub radius: Vec<f64>,
    pub fit_r2: Vec<f64>,
    pub reliable: Vec<bool>,
    pub band: (usize, usize),
}

impl RadiusTrace {
    /// Fields whose spectrum has fewer than two shells of `band` above the
    /// floor get a NaN radius and are marked unreliable.
    pub fn from_fields<'a>(
        samples: impl IntoIterator<Item = (f64, &'a SpectralVectorField)>,
        floor: f64,
        band: (usize, usize),
    ) -> Result<Self> {
        let mut trace = RadiusTrace {
            times: Vec::new(),
            radius: Vec::new(),
            fit_r2: Vec::new(),
            reliable: Vec::new(),
            band,
        };
        for (t, u) in samples {
            let (radius, r2, reliable) = match estimate_radius(&shell_spectrum(u), floor, band) {
                Ok(est) => (est.radius, est.fit_r2, est.reliable),
                Err(Error::RadiusFit(_)) => (f64::NAN, f64::NAN, false),
                Err(e) => return Err(e),
            };
            trace.times.push(t);
            trace.radius.push(radius);
            trace.fit_r2.push(r2);
            trace.reliable.push(reliable);
        }
        Ok(trace)
    }

    /// Trace of a trajectory's snapshots with the default floor and band.
    pub fn from_trajectory(traj: &TrajectoryRecord) -> Result<Self> {
        if traj.snapshots.len() != traj.times.len() {
            return Err(Error::Unsupported("trajectory was run without snapshots".into()));
        }
        let band = default_band(traj.grid.n());
        Self::from_fields(traj.times.iter().copied().zip(&traj.snapshots), DEFAULT_FLOOR, band)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub fit_r2: f64,
    pub points: usize,
}

/// Least-squares fit of `ln(radius − r₀)` against `ln t` over the reliable
/// trace entries with `t` in `window`.
pub fn radius_growth_fit(trace: &RadiusTrace, r0: f64, window: (f64, f64)) -> Result<GrowthFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..trace.times.len() {
        let t = trace.times[i];
        if !(t >= window.0 && t <= window.1) || t <= 0.0 || !trace.reliable[i] {
            continue;
        }
        let growth = trace.radius[i] - r0;
        if !(growth > 0.0) {
            return Err(Error::NoGrowth { r0, time: t });
        }
        xs.push(t.ln());
        ys.push(growth.ln());
    }
    if xs.len() < 2 {
        return Err(Error::RadiusFit(format!(
            "{} reliable trace entries in [{}, {}]",
            xs.len(),
            window.0,
            window.1
        )));
    }
    let fit = line_fit(&xs, &ys);
    Ok(GrowthFit {
        slope: fit.slope,
        intercept: fit.intercept,
        fit_r2: fit.r2,
        points: xs.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBoundEntry {
    pub k: usize,
    pub norm: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBoundReport {
    pub time: f64,
    pub q_prime: f64,
    pub alpha_prime: f64,
    pub entries: Vec<DerivativeBoundEntry>,
    pub max_normalized: f64,
}

impl DerivativeBoundReport {
    /// `max_{k ≤ k₀} c_k`.
    pub fn max_up_to(&self, k0: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.k <= k0)
            .map(|e| e.normalized)
            .fold(0.0, f64::max)
    }
}

/// `c_k = (t^{k/γ+α'} ‖∂_1^k u‖_{L^{q'}} / max(k,1)^k)^{1/(k+1)}`, `k ≤ k_max`.
pub fn derivative_bound_report(
    u: &SpectralVectorField,
    t: f64,
    gamma: f64,
    q_prime: f64,
    k_max: usize,
) -> Result<DerivativeBoundReport> {
    derivative_bound_report_with(u, t, gamma, q_prime, k_max, 0)
}

/// As [`derivative_bound_report`] with the derivatives taken along `axis`
/// (0-based).
pub fn derivative_bound_report_with(
    u: &SpectralVectorField,
    t: f64,
    gamma: f64,
    q_prime: f64,
    k_max: usize,
    axis: usize,
) -> Result<DerivativeBoundReport> {
    if !(t > 0.0) {
        return Err(crate::error::invalid("t", t, "must be positive"));
    }
    if k_max > MAX_DERIVATIVE_ORDER {
        return Err(crate::error::invalid("k_max", k_max as f64, "must be at most 16"));
    }
    let d = u.grid.dim();
    if axis >= d {
        return Err(crate::error::invalid("axis", axis as f64, "beyond the grid dimension"));
    }
    let alpha = kato_exponent(gamma, d, q_prime)?;
    let mut entries = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut multi = alloc::vec![0usize; d];
        multi[axis] = k;
        let dk = partial_derivative(u, &multi)?;
        let norm = lp_norm(&dk, q_prime)?;
        let kk = (k.max(1) as f64).powi(k as i32);
        let weighted = t.powf(k as f64 / gamma + alpha) * norm / kk;
        entries.push(DerivativeBoundEntry {
            k,
            norm,
            normalized: weighted.powf(1.0 / (k as f64 + 1.0)),
        });
    }
    let max_normalized = entries.iter().map(|e| e.normalized).fold(0.0, f64::max);
    Ok(DerivativeBoundReport {
        time: t,
        q_prime,
        alpha_prime: alpha,
        entries,
        max_normalized,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqDecayReport {
    pub report: EstimateReport,
    pub alpha_prime: f64,
    pub argmax_time: f64,
    /// The supremum is attained strictly between the first positive and the
    /// last recorded time.
    pub interior: bool,
}

/// `sup_t t^{α'} ‖u(t)‖_{L^{q'}}` from a trajectory's norm series.
pub fn lq_decay_check(traj: &TrajectoryRecord, gamma: f64, q_prime_list: &[f64]) -> Result<Vec<LqDecayReport>> {
    let d = traj.grid.dim();
    q_prime_list
        .iter()
        .map(|&q| {
            let alpha = kato_exponent(gamma, d, q)?;
            let series = traj.norm_series_for(q).ok_or(Error::MissingNorm { q })?;
            let mut best = (0.0f64, 0usize);
            let mut first_positive = None;
            for (i, (&t, &n)) in traj.times.iter().zip(series).enumerate() {
                if t <= 0.0 {
                    continue;
                }
                first_positive.get_or_insert(i);
                let v = t.powf(alpha) * n;
                if v > best.0 || !v.is_finite() {
                    best = (v, i);
                }
            }
            let last = traj.times.len().saturating_sub(1);
            let interior = best.0 > 0.0 && Some(best.1) != first_positive && best.1 != last;
            let params = EstimateParams {
                label: "lq_decay".into(),
                gamma: Some(gamma),
                d: Some(d),
                k: Some(0),
                alpha: Some(alpha),
                p: Some(q),
            };
            Ok(LqDecayReport {
                report: EstimateReport::new(params, best.0, best.0, f64::MAX),
                alpha_prime: alpha,
                argmax_time: traj.times.get(best.1).copied().unwrap_or(0.0),
                interior,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevReport {
    pub times: Vec<f64>,
    pub orders: Vec<usize>,
    /// `norms[i][n] = ‖u(times[n])‖_{H^{orders[i]}}`.
    pub norms: Vec<Vec<f64>>,
    /// Least-squares slope of `ln ‖u‖_{H^k}` against `t`.
    pub log_slopes: Vec<f64>,
    /// Non-increasing over the second half of the record.
    pub eventually_decreasing: Vec<bool>,
}

/// `‖u‖_{H^k}² = (2π)^d Σ (1+|ξ|²)^k |û|²`.
pub fn sobolev_norm(u: &SpectralVectorField, k: usize) -> f64 {
    let g = u.grid;
    let vol = g.period().powi(g.dim() as i32);
    let mut s = 0.0;
    for comp in &u.coeffs {
        for (idx, c) in comp.iter().enumerate() {
            s += (1.0 + g.norm2(idx) as f64).powi(k as i32) * c.norm_sqr();
        }
    }
    (vol * s).sqrt()
}

pub fn sobolev_decay_report(traj: &TrajectoryRecord, orders: &[usize]) -> Result<SobolevReport> {
    if traj.snapshots.len() != traj.times.len() {
        return Err(Error::Unsupported("trajectory was run without snapshots".into()));
    }
    let norms: Vec<Vec<f64>> = orders
        .iter()
        .map(|&k| traj.snapshots.iter().map(|u| sobolev_norm(u, k)).collect())
        .collect();
    let half = traj.times.len() / 2;
    let log_slopes = norms
        .iter()
        .map(|series| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = traj
                .times
                .iter()
                .zip(series)
                .filter(|(_, &n)| n > 0.0)
                .map(|(&t, &n)| (t, n.ln()))
                .unzip();
            if xs.len() < 2 {
                0.0
            } else {
                line_fit(&xs, &ys).slope
            }
        })
        .collect();
    let eventually_decreasing = norms
        .iter()
        .map(|series| series[half..].windows(2).all(|w| w[1] <= w[0]))
        .collect();
    Ok(SobolevReport {
        times: traj.times.clone(),
        orders: orders.to_vec(),
        norms,
        log_slopes,
        eventually_decreasing,
    })
}
