//! One-sided stable law with Laplace transform `e^{−λ^a}`, its discretization,
//! and the Gaussian-mixture (subordination) form of the fractional heat kernel.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::quad;

fn check_index(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid("a", a, "stable index must lie in (0, 1)"));
    }
    Ok(())
}

/// `ln A(φ)` for Kanter's function
/// `A(φ) = (sin aφ / sin φ)^{1/(1−a)} · sin((1−a)φ) / sin aφ`.
fn ln_kanter(a: f64, phi: f64) -> f64 {
    let sa = (a * phi).sin();
    let s1 = phi.sin();
    let sb = ((1.0 - a) * phi).sin();
    (sa.ln() - s1.ln()) / (1.0 - a) + sb.ln() - sa.ln()
}

/// Density `f_a(u)` of the one-sided stable law, `∫ e^{−λu} f_a(u) du = e^{−λ^a}`.
///
/// Uses the convergent series in `u^{−a}` for large `u` and Kanter's
/// positive single-integral representation otherwise:
/// `f(u) = a/((1−a)π) · u^{−1/(1−a)} ∫_0^π A(φ) exp(−u^{−a/(1−a)} A(φ)) dφ`.
pub fn stable_density(a: f64, u: f64) -> Result<f64> {
    check_index(a)?;
    if !(u > 0.0) || !u.is_finite() {
        return Err(invalid("u", u, "stable density argument must be positive and finite"));
    }
    if u.powf(-a) <= 0.1 {
        return Ok(series_density(a, u));
    }
    Ok(integral_density(a, u))
}

fn series_density(a: f64, u: f64) -> f64 {
    let z = u.powf(-a);
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let mag = (libm::lgamma(a * kf + 1.0) - libm::lgamma(kf + 1.0)).exp() * z.powi(k);
        let term = mag * (PI * a * kf).sin();
        sum += if k % 2 == 1 { term } else { -term };
        if mag < 1e-18 * sum.abs() {
            break;
        }
    }
    sum / (PI * u)
}

fn integral_density(a: f64, u: f64) -> f64 {
    let p = a / (1.0 - a);
    let x = u.powf(-p);
    // A is increasing on (0, π) from A(0+) = (1−a) a^{a/(1−a)}
    let a0 = (1.0 - a) * a.powf(p);
    let lead = x * a0;
    if lead > 745.0 {
        return 0.0;
    }
    let integrand = |phi: f64| {
        if phi <= 0.0 || phi >= PI {
            return if phi <= 0.0 { a0 } else { 0.0 };
        }
        let la = ln_kanter(a, phi);
        let big_a = la.exp();
        (la - x * (big_a - a0)).exp()
    };
    let mut breaks: Vec<f64> = Vec::with_capacity(90);
    breaks.push(0.0);
    breaks.push(PI);
    for j in 1..=40 {
        let h = PI * 0.5f64.powi(j);
        breaks.push(h);
        breaks.push(PI - h);
    }
    if lead < 1.0 {
        // interior maximum of A e^{−xA} where x·A(φ) = 1
        let (mut lo, mut hi) = (0.0, PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if x * ln_kanter(a, mid).exp() < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        breaks.push(0.5 * (lo + hi));
    }
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.dedup();
    let integral = quad::integrate(integrand, &breaks, 1e-13, 0.0, 4000).value;
    p / PI * u.powf(-1.0 / (1.0 - a)) * (-lead).exp() * integral
}

/// Discretized law `dF(s)` of `s = 4U`, `U` one-sided `a`-stable.
///
/// With this scaling `Σ w_i e^{−s_i|ξ|²/4} ≈ e^{−|ξ|^{2a}}`, which is what the
/// Gaussian-mixture form of `G_γ` with `a = γ/2` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StableQuadrature {
    pub stable_index: f64,
    /// Mixture scales `s_i = 4 u_i`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Laplace arguments at which a freshly built quadrature is validated.
pub const LAPLACE_CHECK_POINTS: [f64; 12] = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 5.0, 10.0, 20.0, 35.0, 50.0];

/// Tolerance of the Laplace identity.
pub const LAPLACE_TOL: f64 = 1e-6;

impl StableQuadrature {
    /// `Σ w_i e^{−λ u_i}`, to be compared with `e^{−λ^a}`.
    pub fn laplace(&self, lambda: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (-lambda * 0.25 * s).exp())
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest Laplace-identity error over `lambdas`.
    pub fn laplace_error(&self, lambdas: &[f64]) -> f64 {
        lambdas
            .iter()
            .map(|&l| (self.laplace(l) - (-l.powf(self.stable_index)).exp()).abs())
            .fold(0.0, f64::max)
    }
}

/// Trapezoidal rule in `y = ln u` against the stable density, truncated where
/// the left tail is below `e^{−70}` and the right-tail mass below `1e−13`.
pub fn build_stable_quadrature(a: f64, node_count: usize) -> Result<StableQuadrature> {
    check_index(a)?;
    if !(32..=2048).contains(&node_count) {
        return Err(invalid("node_count", node_count as f64, "must lie in [32, 2048]"));
    }
    let p = a / (1.0 - a);
    let a0 = (1.0 - a) * a.powf(p);
    let y_lo = (a0 / 70.0).ln() / p;
    let y_hi = ((1e13f64).ln() - libm::lgamma(1.0 - a)) / a;
    let h = (y_hi - y_lo) / (node_count - 1) as f64;
    let mut nodes = Vec::with_capacity(node_count);
    let mut weights = Vec::with_capacity(node_count);
    for i in 0..node_count {
        let y = y_lo + h * i as f64;
        let u = y.exp();
        let end = if i == 0 || i + 1 == node_count { 0.5 } else { 1.0 };
        let w = stable_density(a, u)? * u * h * end;
        nodes.push(4.0 * u);
        weights.push(w);
    }
    let quad = StableQuadrature {
        stable_index: a,
        nodes,
        weights,
    };
    let err = quad.laplace_error(&LAPLACE_CHECK_POINTS);
    if !(err <= LAPLACE_TOL) {
        return Err(Error::QuadratureTolerance {
            node_count,
            error: err,
        });
    }
    Ok(quad)
}

/// `G_γ(t, x)` at `points` (each of length `d`) from the Gaussian mixture
/// `∫ (π s t^{2/γ})^{−d/2} exp(−|x|²/(s t^{2/γ})) dF(s)`.
pub fn subordinated_heat_kernel(
    gamma: f64,
    t: f64,
    d: usize,
    points: &[[f64; 3]],
    quad: &StableQuadrature,
) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(invalid("gamma", gamma, "subordination needs γ ∈ (0, 2)"));
    }
    if !(t > 0.0) {
        return Err(invalid("t", t, "must be positive"));
    }
    if !(1..=3).contains(&d) {
        return Err(invalid("d", d as f64, "dimension must be 1, 2 or 3"));
    }
    if (quad.stable_index - 0.5 * gamma).abs() > 1e-12 {
        return Err(Error::StableIndexMismatch {
            expected: 0.5 * gamma,
            found: quad.stable_index,
        });
    }
    let tau2 = t.powf(2.0 / gamma);
    let scales: Vec<(f64, f64)> = quad
        .nodes
        .iter()
        .zip(&quad.weights)
        .map(|(&s, &w)| {
            let var = s * tau2;
            (w * (PI * var).powf(-0.5 * d as f64), 1.0 / var)
        })
        .collect();
    Ok(points
        .iter()
        .map(|x| {
            let r2: f64 = x.iter().take(d).map(|v| v * v).sum();
            scales.iter().map(|(c, inv)| c * (-r2 * inv).exp()).sum()
        })
        .collect())
}
