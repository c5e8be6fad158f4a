//! Elementary inequalities and recurrences behind the analyticity bounds,
//! checked numerically.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::E;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{Float, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

use crate::error::{invalid, Result};
use crate::report::{EstimateParams, EstimateReport};
use crate::rng;
use crate::spectral::{SpectralScalarField, TorusGrid};
use crate::xlogx;

/// Envelope for `|H_n(x)| e^{−x²/2} / (2^n n!)^{1/2}`; the sharp constant is
/// about 1.0864.
pub const CRAMER_THRESHOLD: f64 = 1.09;

/// A bounded sequence may not grow by more than this factor from its middle
/// window to its tail window.
pub const PLATEAU_FACTOR: f64 = 1.05;

pub const G_BOUND: f64 = 8.0;

/// Relative slack allowed in the log-domain majorization of `F`.
pub const MAJORIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceValues {
    Integer(Vec<BigUint>),
    /// Natural logarithms of the values.
    Log(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceReport {
    pub name: String,
    pub values: SequenceValues,
    pub normalized: Vec<f64>,
    pub bound_constant: f64,
    pub pass: bool,
}

impl SequenceReport {
    fn new(name: &str, values: SequenceValues, normalized: Vec<f64>, bound_constant: f64) -> Self {
        let pass = normalized.iter().all(|v| v.is_finite() && *v <= bound_constant);
        SequenceReport {
            name: name.into(),
            values,
            normalized,
            bound_constant,
            pass,
        }
    }

    pub fn max_normalized(&self) -> f64 {
        self.normalized.iter().copied().fold(0.0, f64::max)
    }
}

/// Physicists' Hermite polynomial `H_n(x)`, `0 ≤ n ≤ 200`; double-double
/// arithmetic for `n > 60`.
pub fn hermite_eval(n: usize, x: f64) -> Result<f64> {
    if n > 200 {
        return Err(invalid("n", n as f64, "Hermite degree must be at most 200"));
    }
    if n == 0 {
        return Ok(1.0);
    }
    if n <= 60 {
        let (mut prev, mut cur) = (1.0, 2.0 * x);
        for j in 1..n {
            let next = 2.0 * x * cur - 2.0 * j as f64 * prev;
            prev = cur;
            cur = next;
        }
        return Ok(cur);
    }
    let xx = TwoFloat::from(x);
    let (mut prev, mut cur) = (TwoFloat::from(1.0), xx * 2.0);
    for j in 1..n {
        let next = xx * cur * 2.0 - prev * (2.0 * j as f64);
        prev = cur;
        cur = next;
    }
    Ok(cur.hi() + cur.lo())
}

/// `|H_n(x)| e^{−x²/2} / (2^n n!)^{1/2}` for all `n ≤ n_max` at once, by the
/// normalized recurrence (no overflow for any `x`).
pub fn cramer_ratios(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut prev = 0.0;
    let mut cur = (-0.5 * x * x).exp();
    for j in 0..=n_max {
        out.push(cur.abs());
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * x * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    out
}

pub fn check_cramer_bound(n_max: usize, x_grid: &[f64]) -> Result<EstimateReport> {
    if n_max > 100 {
        return Err(invalid("n_max", n_max as f64, "must be at most 100"));
    }
    let sup = x_grid
        .iter()
        .flat_map(|&x| cramer_ratios(n_max, x))
        .fold(0.0, f64::max);
    let mut params = EstimateParams::labeled("cramer");
    params.k = Some(n_max);
    Ok(EstimateReport::new(params, sup, sup, CRAMER_THRESHOLD))
}

/// `sup_{x>0} x^m e^{−x²/8} = (4m/e)^{m/2}`, attained at `x = 2√m`; returned
/// as `(ln sup, argmax)`.
pub fn sup_closed_form(m: usize) -> (f64, f64) {
    let mf = m as f64;
    (0.5 * mf * (4.0 * mf / E).ln(), 2.0 * mf.sqrt())
}

/// `(sup / k^{k/2})^{1/(k+1)}` with `m = k + d + 2`.
pub fn sup_normalized(k: usize, d: usize) -> f64 {
    let (ln_sup, _) = sup_closed_form(k + d + 2);
    ((ln_sup - 0.5 * xlogx(k as f64)) / (k as f64 + 1.0)).exp()
}

/// Largest value in `seq[lo..=hi]` (1-based positions, clipped).
fn window_max(seq: &[f64], lo: usize, hi: usize) -> f64 {
    let lo = lo.max(1);
    let hi = hi.min(seq.len());
    if lo > hi {
        return 0.0;
    }
    seq[lo - 1..hi].iter().copied().fold(0.0, f64::max)
}

/// Boundedness of the sequence `c_k`, `1 ≤ k ≤ k_max`: the tail window
/// `[k_max/2, k_max]` may not exceed the middle window `[k_max/4, k_max/2]` by
/// more than [`PLATEAU_FACTOR`].
pub fn sup_inequality_check(k_max: usize, d: usize) -> Result<EstimateReport> {
    if k_max < 4 {
        return Err(invalid("k_max", k_max as f64, "need at least 4 terms"));
    }
    if !(1..=3).contains(&d) {
        return Err(invalid("d", d as f64, "must be 1, 2 or 3"));
    }
    let seq: Vec<f64> = (1..=k_max).map(|k| sup_normalized(k, d)).collect();
    let middle = window_max(&seq, k_max / 4, k_max / 2);
    let tail = window_max(&seq, k_max / 2, k_max);
    let mut params = EstimateParams::labeled("sup_inequality");
    params.d = Some(d);
    params.k = Some(k_max);
    Ok(EstimateReport::new(
        params,
        seq.iter().copied().fold(0.0, f64::max),
        tail / middle,
        PLATEAU_FACTOR,
    ))
}

/// `G(0) = 1`, `G(n) = 2 Σ G(n₁) G(n−1−n₁)`, exactly; normalized by
/// `G(n)^{1/(n+1)}` against the bound 8.
pub fn g_sequence(n_max: usize) -> Result<SequenceReport> {
    if n_max > 64 {
        return Err(invalid("n_max", n_max as f64, "must be at most 64"));
    }
    let mut g: Vec<BigUint> = Vec::with_capacity(n_max + 1);
    g.push(BigUint::one());
    for n in 1..=n_max {
        let mut s = BigUint::zero();
        for a in 0..n {
            s += &g[a] * &g[n - 1 - a];
        }
        g.push(s * 2u32);
    }
    let normalized = g
        .iter()
        .enumerate()
        .map(|(n, v)| v.to_f64().unwrap_or(f64::INFINITY).powf(1.0 / (n as f64 + 1.0)))
        .collect();
    Ok(SequenceReport::new("G", SequenceValues::Integer(g), normalized, G_BOUND))
}

/// `2^n (2n)! / (n! (n+1)!)`.
pub fn g_closed_form(n: usize) -> BigUint {
    // Catalan(j+1) = Catalan(j)·2(2j+1)/(j+2), exact at every step
    let mut c = BigUint::one();
    for j in 0..n {
        c = c * (2 * (2 * j as u64 + 1)) / (j as u64 + 2);
    }
    c << n
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn ln_g_values(n_max: usize) -> Vec<f64> {
    let mut lg = Vec::with_capacity(n_max + 1);
    lg.push(0.0);
    for n in 1..=n_max {
        let mut s = f64::NEG_INFINITY;
        for a in 0..n {
            s = log_add(s, lg[a] + lg[n - 1 - a]);
        }
        lg.push(s + 2f64.ln());
    }
    lg
}

/// Evaluates
/// `F(0) = C`,
/// `F(n) = C₁ n^{1/(Nγ)} F(n−1) + C₁ Σ n^{n/N} / (n₁^{n₁/N} (n−1−n₁)^{(n−1−n₁)/N}) F(n₁) F(n−1−n₁)`
/// in the log domain and checks `F(n) ≤ (C₁C)^{n+1} n^{n/N} G(n)`.
/// `normalized[n]` is the ratio of the two sides.
pub fn f_sequence(n_max: usize, c: f64, c1: f64, big_n: usize, gamma: f64) -> Result<SequenceReport> {
    if !(c >= 1.0) {
        return Err(invalid("C", c, "must be at least 1"));
    }
    if !(c1 >= 1.0) {
        return Err(invalid("C1", c1, "must be at least 1"));
    }
    if big_n == 0 {
        return Err(invalid("N", 0.0, "must be at least 1"));
    }
    if n_max > 200 {
        return Err(invalid("n_max", n_max as f64, "must be at most 200"));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", gamma, "must be positive"));
    }
    let nn = big_n as f64;
    let (ln_c, ln_c1) = (c.ln(), c1.ln());
    let w = |m: usize| xlogx(m as f64) / nn;
    let mut lf = Vec::with_capacity(n_max + 1);
    lf.push(ln_c);
    for n in 1..=n_max {
        let mut s = ln_c1 + (n as f64).ln() / (nn * gamma) + lf[n - 1];
        for a in 0..n {
            let b = n - 1 - a;
            s = log_add(s, ln_c1 + w(n) - w(a) - w(b) + lf[a] + lf[b]);
        }
        lf.push(s);
    }
    let lg = ln_g_values(n_max);
    let normalized = (0..=n_max)
        .map(|n| (lf[n] - ((n as f64 + 1.0) * (ln_c1 + ln_c) + w(n) + lg[n])).exp())
        .collect();
    Ok(SequenceReport::new(
        "F",
        SequenceValues::Log(lf),
        normalized,
        1.0 + MAJORIZATION_TOL,
    ))
}

fn ln_binomial(k: usize, j: usize) -> f64 {
    let j = j.min(k - j);
    let mut b: u128 = 1;
    for i in 0..j {
        b = b * (k - i) as u128 / (i + 1) as u128;
    }
    (b as f64).ln()
}

/// `binom(k,j) / (n^n / (n₁^{n₁} n₂^{n₂}))^{1/N}` with `n₁ = Nj+l−1`,
/// `n₂ = N(k−j)`, `n = Nk+l`.
pub fn binomial_stirling_ratio(big_n: usize, k: usize, j: usize, l: usize) -> f64 {
    let n1 = big_n * j + l - 1;
    let n2 = big_n * (k - j);
    let n = big_n * k + l;
    let ln_rhs = (xlogx(n as f64) - xlogx(n1 as f64) - xlogx(n2 as f64)) / big_n as f64;
    (ln_binomial(k, j) - ln_rhs).exp()
}

/// Boundedness across `k` of the largest ratio over `j ≤ k`, `1 ≤ l ≤ N`:
/// the window `[k_max/2, k_max]` against `[k_max/6, k_max/2]`.
pub fn binomial_stirling_check(big_n: usize, k_max: usize) -> Result<EstimateReport> {
    if !(1..=8).contains(&big_n) {
        return Err(invalid("N", big_n as f64, "must lie in 1..=8"));
    }
    if !(6..=60).contains(&k_max) {
        return Err(invalid("k_max", k_max as f64, "must lie in 6..=60"));
    }
    let seq: Vec<f64> = (1..=k_max)
        .map(|k| {
            let mut m = 0.0f64;
            for j in 0..=k {
                for l in 1..=big_n {
                    m = m.max(binomial_stirling_ratio(big_n, k, j, l));
                }
            }
            m
        })
        .collect();
    let head = window_max(&seq, k_max / 6, k_max / 2);
    let tail = window_max(&seq, k_max / 2, k_max);
    let mut params = EstimateParams::labeled("binomial_stirling");
    params.k = Some(k_max);
    params.p = Some(big_n as f64);
    Ok(EstimateReport::new(
        params,
        seq.iter().copied().fold(0.0, f64::max),
        tail / head,
        PLATEAU_FACTOR,
    ))
}

/// Mean-zero real field with random coefficients on `0 < |ξ|_∞ ≤ band`,
/// weighted by `(1+|ξ|)^{−slope}`.
pub fn random_band_limited(grid: TorusGrid, band: usize, slope: f64, stream: &mut impl rand_core::RngCore) -> SpectralScalarField {
    let mut f = SpectralScalarField::zeros(grid);
    let b = band as i64;
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        if k.iter().any(|v| v.abs() > b) || grid.norm2(idx) == 0 {
            continue;
        }
        let conj = grid.conjugate_index(idx);
        if conj < idx {
            continue;
        }
        let w = (1.0 + (grid.norm2(idx) as f64).sqrt()).powf(-slope);
        let c = Complex64::new(rng::normal(stream), rng::normal(stream)) * w;
        f.coeffs[idx] = c;
        f.coeffs[conj] = c.conj();
    }
    f
}

/// `‖Λ^ε(fg)‖_{p/2} / (‖Λ^ε f‖_p ‖g‖_p + ‖Λ^ε g‖_p ‖f‖_p)`.
pub fn leibniz_ratio(f: &SpectralScalarField, g: &SpectralScalarField, epsilon: f64, p: f64) -> Result<f64> {
    let fv = f.to_physical();
    let gv = g.to_physical();
    let prod: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| a * b).collect();
    let fg = SpectralScalarField::from_physical(f.grid, &prod);
    let lhs = fg.fractional_derivative(epsilon)?.lp_norm(0.5 * p)?;
    let rhs = f.fractional_derivative(epsilon)?.lp_norm(p)? * g.lp_norm(p)?
        + g.fractional_derivative(epsilon)?.lp_norm(p)? * f.lp_norm(p)?;
    Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
}

/// Empirical constant over seeded random trials; stable if the second half
/// of the trials raises the running maximum by less than 5%.
pub fn fractional_leibniz_check(grid: TorusGrid, epsilon: f64, p: f64, trials: usize, seed: u64) -> Result<EstimateReport> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid("epsilon", epsilon, "must lie in [0, 1)"));
    }
    if !(p > 2.0 && p <= 12.0) {
        return Err(invalid("p", p, "must lie in (2, 12]"));
    }
    if trials < 2 {
        return Err(invalid("trials", trials as f64, "need at least 2 trials"));
    }
    // products stay resolved: band ≤ n/8 keeps fg inside |ξ|_∞ ≤ n/4
    let max_band = (grid.n() / 8).max(1);
    let mut running = Vec::with_capacity(trials);
    let mut best = 0.0f64;
    for trial in 0..trials {
        let mut s = rng::stream(seed, trial as u64);
        let band = 1 + (rng::uniform(&mut s) * max_band as f64) as usize;
        let band = band.min(max_band);
        let slope = 2.0 * rng::uniform(&mut s);
        let f = random_band_limited(grid, band, slope, &mut s);
        let g = random_band_limited(grid, band, slope, &mut s);
        best = best.max(leibniz_ratio(&f, &g, epsilon, p)?);
        running.push(best);
    }
    let half = running[trials / 2 - 1].max(f64::MIN_POSITIVE);
    let mut params = EstimateParams::labeled(format!("fractional_leibniz_{trials}"));
    params.d = Some(grid.dim());
    params.alpha = Some(epsilon);
    params.p = Some(p);
    Ok(EstimateReport::new(params, best, best / half, PLATEAU_FACTOR))
}
