//! Mild solutions on the 2-D torus:
//! `u(t) = G(t)*u₀ − ∫₀^t G(t−s) P∇·(u⊗u)(s) ds`, `Ĝ(t,ξ) = e^{−t|ξ|^γ}`.
//!
//! Every scheme integrates the dissipative part exactly through per-mode
//! `φ`-functions, so the step size is limited only by the nonlinearity.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::spectral::{
    lp_of_magnitudes, project_in_place, Dealias, SpectralScalarField, SpectralVectorField, TorusGrid, Workspace,
    DIV_FREE_REJECT,
};

/// Collocation times per Picard slab.
pub const DEFAULT_COLLOCATION: usize = 4;

/// Runs abort once the energy exceeds this multiple of the initial energy.
pub const BLOWUP_FACTOR: f64 = 1e6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    ExpEuler,
    #[default]
    Etd2,
    PicardSlab,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    /// `(A sin y, 0)`.
    Shear,
    /// `A (sin x cos y, −cos x sin y)`.
    TaylorGreen,
    /// `A e^{−r₀|ξ|}` times seeded unit phases, Leray-projected.
    GevreyRandom,
    /// A field loaded elsewhere, e.g. from a snapshot file.
    Snapshot(Box<SpectralVectorField>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub gevrey_radius: f64,
    pub seed: u64,
}

impl InitialSpec {
    pub fn new(kind: InitialKind, amplitude: f64) -> Self {
        InitialSpec {
            kind,
            amplitude,
            gevrey_radius: 0.0,
            seed: 0,
        }
    }

    pub fn gevrey(amplitude: f64, radius: f64, seed: u64) -> Self {
        InitialSpec {
            kind: InitialKind::GevreyRandom,
            amplitude,
            gevrey_radius: radius,
            seed,
        }
    }
}

/// Closed-form solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactKind {
    Shear,
    TaylorGreen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub grid: TorusGrid,
    pub t_end: f64,
    /// Requested step; the run uses `t_end / ceil(t_end / slab_dt)`.
    pub slab_dt: f64,
    pub method: Method,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub collocation_points: usize,
    pub initial: InitialSpec,
    /// Record every this many steps (the final step is always recorded).
    pub output_every: usize,
    /// Kato exponents `q > d/(γ−1)`; `f64::INFINITY` allowed.
    pub q_list: Vec<f64>,
    pub keep_snapshots: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64, grid: TorusGrid, initial: InitialSpec) -> Self {
        SolverConfig {
            gamma,
            grid,
            t_end: 1.0,
            slab_dt: 1e-3,
            method: Method::Etd2,
            picard_tol: 1e-10,
            picard_max_iter: 20,
            collocation_points: DEFAULT_COLLOCATION,
            initial,
            output_every: 1,
            q_list: Vec::new(),
            keep_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0 && self.gamma <= 2.0) {
            return Err(invalid("gamma", self.gamma, "must lie in (1, 2]"));
        }
        if self.grid.dim() != 2 {
            return Err(invalid("d", self.grid.dim() as f64, "the solver runs on the 2-D torus"));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(invalid("t_end", self.t_end, "must be positive"));
        }
        if !(self.slab_dt > 0.0) || !self.slab_dt.is_finite() {
            return Err(invalid("slab_dt", self.slab_dt, "must be positive"));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol <= 1e-3) {
            return Err(invalid("picard_tol", self.picard_tol, "must lie in (0, 1e-3]"));
        }
        if self.picard_max_iter == 0 {
            return Err(invalid("picard_max_iter", 0.0, "must be positive"));
        }
        if !(2..=8).contains(&self.collocation_points) {
            return Err(invalid(
                "collocation_points",
                self.collocation_points as f64,
                "must lie in [2, 8]",
            ));
        }
        if self.output_every == 0 {
            return Err(invalid("output_every", 0.0, "must be positive"));
        }
        for &q in &self.q_list {
            kato_exponent(self.gamma, 2, q)?;
        }
        Ok(())
    }
}

/// Per-slab fixed-point record.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionDiag {
    pub iterations: usize,
    /// `δ_j = max_m ‖U^{j} − U^{j−1}‖₂` over the collocation times.
    pub update_norms: Vec<f64>,
    /// `δ_j / δ_{j−1}`.
    pub contraction_factors: Vec<f64>,
    pub converged: bool,
    pub solution_norm: f64,
}

impl ContractionDiag {
    fn from_history(update_norms: Vec<f64>, converged: bool, solution_norm: f64) -> Self {
        let contraction_factors = update_norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect();
        ContractionDiag {
            iterations: update_norms.len(),
            update_norms,
            contraction_factors,
            converged,
            solution_norm,
        }
    }

    pub fn max_factor(&self) -> f64 {
        self.contraction_factors.iter().copied().fold(0.0, f64::max)
    }
}

/// Running `sup_{s ≤ t} s^α ‖u(s)‖_{L^q}` at every recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct KatoSeries {
    pub q: f64,
    pub alpha: f64,
    pub running_sup: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub gamma: f64,
    pub grid: TorusGrid,
    pub step_size: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralVectorField>,
    /// Exponents of `norm_series`: the Kato list plus 2 and ∞, ascending.
    pub norm_exponents: Vec<f64>,
    /// `norm_series[i][n] = ‖u(times[n])‖_{L^{norm_exponents[i]}}`.
    pub norm_series: Vec<Vec<f64>>,
    pub energy_series: Vec<f64>,
    /// `‖Λ^{γ/2}u‖₂²`, so that `dE/dt = −dissipation`.
    pub dissipation_series: Vec<f64>,
    pub kato: Vec<KatoSeries>,
    pub contraction_diags: Vec<ContractionDiag>,
    /// Largest `max|ξ·û| / max|û|` over recorded times.
    pub max_divergence: f64,
    pub max_hermitian_defect: f64,
    pub final_state: SpectralVectorField,
}

impl TrajectoryRecord {
    pub fn norm_series_for(&self, q: f64) -> Option<&[f64]> {
        self.norm_exponents
            .iter()
            .position(|&e| e == q)
            .map(|i| self.norm_series[i].as_slice())
    }

    pub fn energy_is_monotone(&self) -> bool {
        self.energy_series.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `α = 1 − 1/γ − d/(qγ)` for `q ∈ (d/(γ−1), ∞]`.
pub fn kato_exponent(gamma: f64, d: usize, q: f64) -> Result<f64> {
    let lower = d as f64 / (gamma - 1.0);
    if !(gamma > 1.0) || q.is_nan() || q <= lower {
        return Err(Error::ExponentOutOfRange { q, lower });
    }
    Ok(1.0 - 1.0 / gamma - d as f64 / (q * gamma))
}

/// `sup_t t^α ‖u(t)‖_{L^q}` over the recorded times.
pub fn kato_norm_tracker(traj: &TrajectoryRecord, gamma: f64, q: f64) -> Result<f64> {
    let alpha = kato_exponent(gamma, traj.grid.dim(), q)?;
    let series = traj.norm_series_for(q).ok_or(Error::MissingNorm { q })?;
    Ok(traj
        .times
        .iter()
        .zip(series)
        .map(|(&t, &n)| if t > 0.0 { t.powf(alpha) * n } else { 0.0 })
        .fold(0.0, f64::max))
}

/// `φ_k(z) = Σ_{j≥0} z^j/(j+k)!`, so `φ_0 = e^z`, `φ_1 = (e^z − 1)/z`.
pub fn phi(k: usize, z: f64) -> f64 {
    if z.abs() < 2.0 {
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
        }
        let mut term = 1.0 / fact;
        let mut sum = term;
        for j in 1..60 {
            term *= z / (j + k) as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let mut val = z.exp();
    let mut inv_fact = 1.0;
    for i in 0..k {
        val = (val - inv_fact) / z;
        inv_fact /= (i + 1) as f64;
    }
    val
}

fn ensure_solenoidal(u: &SpectralVectorField) -> Result<()> {
    let rel = u.relative_divergence();
    if rel > DIV_FREE_REJECT {
        return Err(Error::NotDivergenceFree {
            divergence: u.max_divergence(),
            relative: rel,
        });
    }
    Ok(())
}

/// Coefficients of the monomial expansion `ℓ_i(θ) = Σ_p L[i][p] θ^p` of the
/// Lagrange basis on `θ_m = m/(M−1)`.
fn lagrange_monomials(m: usize) -> Vec<Vec<f64>> {
    let nodes: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    (0..m)
        .map(|i| {
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for (j, &x) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let mut next = vec![0.0; poly.len() + 1];
                for (p, &c) in poly.iter().enumerate() {
                    next[p + 1] += c;
                    next[p] -= c * x;
                }
                poly = next;
                denom *= nodes[i] - x;
            }
            poly.iter().map(|c| c / denom).collect()
        })
        .collect()
}

#[derive(Debug, Clone)]
enum Scheme {
    /// Per `|ξ|²`: `(e^{ch}, hφ₁(ch), hφ₂(ch))` with `c = −|ξ|^γ`.
    Exponential { method: Method, factors: Vec<[f64; 3]> },
    /// Per `|ξ|²`: node propagators `e^{cτ_m}` and quadrature weights
    /// `W[m][i]`, flattened row-major over `m ≥ 1`.
    Picard {
        nodes: usize,
        tol: f64,
        max_iter: usize,
        propagators: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
    },
}

/// Precomputed one-step map for a fixed grid, `γ` and step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: TorusGrid,
    ws: Workspace,
    norm2: Vec<usize>,
    scheme: Scheme,
}

impl Stepper {
    pub fn exponential(grid: TorusGrid, gamma: f64, dt: f64, method: Method) -> Result<Self> {
        check_step(gamma, dt)?;
        if method == Method::PicardSlab {
            return Err(Error::Unsupported("use Stepper::picard for the slab iteration".into()));
        }
        let (norm2, max2) = norm2_table(&grid);
        let factors = (0..=max2)
            .map(|s| {
                let z = -(s as f64).powf(0.5 * gamma) * dt;
                [z.exp(), dt * phi(1, z), dt * phi(2, z)]
            })
            .collect();
        Ok(Stepper {
            grid,
            ws: Workspace::new(grid),
            norm2,
            scheme: Scheme::Exponential { method, factors },
        })
    }

    pub fn picard(grid: TorusGrid, gamma: f64, dt: f64, tol: f64, max_iter: usize, nodes: usize) -> Result<Self> {
        check_step(gamma, dt)?;
        if !(2..=8).contains(&nodes) {
            return Err(invalid("collocation_points", nodes as f64, "must lie in [2, 8]"));
        }
        if !(tol > 0.0) {
            return Err(invalid("picard_tol", tol, "must be positive"));
        }
        let (norm2, max2) = norm2_table(&grid);
        let lag = lagrange_monomials(nodes);
        let mut fact = vec![1.0; nodes + 1];
        for p in 1..=nodes {
            fact[p] = fact[p - 1] * p as f64;
        }
        let mut propagators = Vec::with_capacity(max2 + 1);
        let mut weights = Vec::with_capacity(max2 + 1);
        for s in 0..=max2 {
            let c = -(s as f64).powf(0.5 * gamma);
            let mut prop = Vec::with_capacity(nodes - 1);
            let mut w = Vec::with_capacity((nodes - 1) * nodes);
            for m in 1..nodes {
                let tau = dt * m as f64 / (nodes - 1) as f64;
                let z = c * tau;
                prop.push(z.exp());
                let theta = tau / dt;
                // ∫₀^τ e^{c(τ−s)} (s/dt)^p ds = τ θ^p p! φ_{p+1}(cτ)
                let moments: Vec<f64> = (0..nodes)
                    .map(|p| tau * theta.powi(p as i32) * fact[p] * phi(p + 1, z))
                    .collect();
                for li in &lag {
                    w.push(li.iter().zip(&moments).map(|(a, b)| a * b).sum());
                }
            }
            propagators.push(prop);
            weights.push(w);
        }
        Ok(Stepper {
            grid,
            ws: Workspace::new(grid),
            norm2,
            scheme: Scheme::Picard {
                nodes,
                tol,
                max_iter,
                propagators,
                weights,
            },
        })
    }

    /// `F(u) = −P∇·(u⊗u)`.
    fn forcing(&mut self, u: &SpectralVectorField) -> SpectralVectorField {
        let mut n = self.ws.nonlinear(u, Dealias::TwoThirds);
        n.scale(-1.0);
        n
    }

    /// Advances one step; the diagnostic is present for the Picard scheme.
    pub fn step(&mut self, u: &SpectralVectorField) -> Result<(SpectralVectorField, Option<ContractionDiag>)> {
        if u.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        match &self.scheme {
            Scheme::Exponential { method, .. } => {
                let method = *method;
                let f0 = self.forcing(u);
                let a = self.combine(u, &[(1, &f0)], true);
                if method == Method::ExpEuler {
                    return Ok((a, None));
                }
                let mut df = self.forcing(&a);
                df.axpy(-1.0, &f0);
                let out = self.combine(&a, &[(2, &df)], false);
                Ok((out, None))
            }
            Scheme::Picard { .. } => {
                let (u, diag) = self.picard_step(u)?;
                Ok((u, Some(diag)))
            }
        }
    }

    /// `P base + Σ (hφ_slot) f` mode by mode, where `P = e^{ch}` when
    /// `propagate` is set and the identity otherwise.
    fn combine(&self, base: &SpectralVectorField, terms: &[(usize, &SpectralVectorField)], propagate: bool) -> SpectralVectorField {
        let Scheme::Exponential { factors, .. } = &self.scheme else {
            unreachable!("combine is only used by the exponential schemes")
        };
        let mut out = base.clone();
        for c in 0..out.components() {
            for (idx, v) in out.coeffs[c].iter_mut().enumerate() {
                let f = &factors[self.norm2[idx]];
                let mut acc = if propagate { *v * f[0] } else { *v };
                for (slot, field) in terms {
                    acc += field.coeffs[c][idx] * f[*slot];
                }
                *v = acc;
            }
        }
        out
    }

    fn picard_step(&mut self, u0: &SpectralVectorField) -> Result<(SpectralVectorField, ContractionDiag)> {
        let Scheme::Picard {
            nodes,
            tol,
            max_iter,
            ref propagators,
            ref weights,
        } = self.scheme
        else {
            unreachable!("picard_step needs the slab scheme")
        };
        let grid = self.grid;
        let d = grid.dim();
        // linear evolution at the collocation times, also the initial guess
        let linear: Vec<SpectralVectorField> = (1..nodes)
            .map(|m| {
                let mut v = u0.clone();
                for comp in &mut v.coeffs {
                    for (idx, c) in comp.iter_mut().enumerate() {
                        *c *= propagators[self.norm2[idx]][m - 1];
                    }
                }
                v
            })
            .collect();
        let propagated_norm2 = self.norm2.clone();
        let weights = weights.clone();
        let mut states = linear.clone();
        let f0 = self.forcing(u0);
        let mut history = Vec::new();
        for _ in 0..max_iter {
            let mut forcings = Vec::with_capacity(nodes);
            forcings.push(f0.clone());
            for s in &states {
                forcings.push(self.forcing(s));
            }
            let mut delta = 0.0f64;
            let mut size = 0.0f64;
            let mut next = linear.clone();
            for m in 1..nodes {
                let row = (m - 1) * nodes;
                let target = &mut next[m - 1];
                for c in 0..d {
                    for idx in 0..grid.len() {
                        let w = &weights[propagated_norm2[idx]][row..row + nodes];
                        let mut acc = target.coeffs[c][idx];
                        for (i, f) in forcings.iter().enumerate() {
                            acc += f.coeffs[c][idx] * w[i];
                        }
                        target.coeffs[c][idx] = acc;
                    }
                }
                let mut diff = target.clone();
                diff.axpy(-1.0, &states[m - 1]);
                delta = delta.max(diff.l2_norm());
                size = size.max(target.l2_norm());
            }
            states = next;
            history.push(delta);
            if !delta.is_finite() {
                break;
            }
            if delta <= tol * size {
                let diag = ContractionDiag::from_history(history, true, size);
                let mut end = states.pop().unwrap();
                end.mean_zero = u0.mean_zero;
                end.div_free = u0.div_free;
                return Ok((end, diag));
            }
        }
        Err(Error::PicardDiverged {
            iterations: history.len(),
            history,
        })
    }
}

fn check_step(gamma: f64, dt: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(invalid("gamma", gamma, "must lie in (0, 2]"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", dt, "must be positive"));
    }
    Ok(())
}

fn norm2_table(grid: &TorusGrid) -> (Vec<usize>, usize) {
    let norm2: Vec<usize> = (0..grid.len()).map(|i| grid.norm2(i) as usize).collect();
    let max2 = norm2.iter().copied().max().unwrap_or(0);
    (norm2, max2)
}

/// One exponential-Euler or ETD2 step of size `dt`.
pub fn step_exponential(u: &SpectralVectorField, gamma: f64, dt: f64, method: Method) -> Result<SpectralVectorField> {
    ensure_solenoidal(u)?;
    Ok(Stepper::exponential(u.grid, gamma, dt, method)?.step(u)?.0)
}

/// One Picard slab of length `dt` with the default collocation count.
pub fn picard_slab(
    u_start: &SpectralVectorField,
    gamma: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(SpectralVectorField, ContractionDiag)> {
    ensure_solenoidal(u_start)?;
    let mut stepper = Stepper::picard(u_start.grid, gamma, dt, tol, max_iter, DEFAULT_COLLOCATION)?;
    let (u, diag) = stepper.step(u_start)?;
    Ok((u, diag.expect("picard stepper yields diagnostics")))
}

/// Contraction behaviour of one slab as the data are scaled up.
#[derive(Debug, Clone, PartialEq)]
pub struct EscalationStep {
    pub amplitude_scale: f64,
    pub iterations: usize,
    pub max_factor: f64,
    pub converged: bool,
}

/// Picard slabs from `2^i u₀`, `i = 0..levels`.
pub fn picard_escalation(
    u0: &SpectralVectorField,
    gamma: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
    levels: usize,
) -> Result<Vec<EscalationStep>> {
    ensure_solenoidal(u0)?;
    let mut stepper = Stepper::picard(u0.grid, gamma, dt, tol, max_iter, DEFAULT_COLLOCATION)?;
    let mut out = Vec::with_capacity(levels);
    for i in 0..levels {
        let scale = (1u64 << i) as f64;
        let mut u = u0.clone();
        u.scale(scale);
        let diag = match stepper.step(&u) {
            Ok((_, d)) => d.expect("picard stepper yields diagnostics"),
            Err(Error::PicardDiverged { history, .. }) => ContractionDiag::from_history(history, false, f64::NAN),
            Err(e) => return Err(e),
        };
        out.push(EscalationStep {
            amplitude_scale: scale,
            iterations: diag.iterations,
            max_factor: diag.max_factor(),
            converged: diag.converged,
        });
    }
    Ok(out)
}

fn set_pair(u: &mut SpectralVectorField, comp: usize, k: [i64; 3], c: Complex64) {
    let g = u.grid;
    let i = g.index_of(k);
    let j = g.index_of([-k[0], -k[1], -k[2]]);
    u.coeffs[comp][i] = c;
    u.coeffs[comp][j] = c.conj();
}

/// Closed-form solution at time `t` (`t = 0` gives the initial data).
pub fn exact_solution(kind: ExactKind, gamma: f64, amplitude: f64, t: f64, grid: TorusGrid) -> Result<SpectralVectorField> {
    if grid.dim() != 2 {
        return Err(invalid("d", grid.dim() as f64, "closed forms are 2-D"));
    }
    let mut u = SpectralVectorField::zeros(grid);
    match kind {
        ExactKind::Shear => {
            let a = amplitude * (-t).exp();
            // sin y = (e^{iy} − e^{−iy}) / 2i
            set_pair(&mut u, 0, [0, 1, 0], Complex64::new(0.0, -0.5 * a));
        }
        ExactKind::TaylorGreen => {
            let a = amplitude * (-(2f64.powf(0.5 * gamma)) * t).exp();
            let q = Complex64::new(0.0, -0.25 * a);
            set_pair(&mut u, 0, [1, 1, 0], q);
            set_pair(&mut u, 0, [1, -1, 0], q);
            set_pair(&mut u, 1, [1, 1, 0], -q);
            set_pair(&mut u, 1, [1, -1, 0], q);
        }
    }
    u.mean_zero = true;
    u.div_free = true;
    Ok(u)
}

/// Initial data on a 2-D grid.
pub fn init_field(spec: &InitialSpec, grid: TorusGrid) -> Result<SpectralVectorField> {
    if grid.dim() != 2 {
        return Err(invalid("d", grid.dim() as f64, "initial data are 2-D"));
    }
    if !spec.amplitude.is_finite() {
        return Err(invalid("amplitude", spec.amplitude, "must be finite"));
    }
    match &spec.kind {
        InitialKind::Shear => exact_solution(ExactKind::Shear, 2.0, spec.amplitude, 0.0, grid),
        InitialKind::TaylorGreen => exact_solution(ExactKind::TaylorGreen, 2.0, spec.amplitude, 0.0, grid),
        InitialKind::GevreyRandom => gevrey_random(spec, grid),
        InitialKind::Snapshot(field) => {
            if field.grid != grid {
                return Err(Error::GridMismatch);
            }
            let mut u = (**field).clone();
            u.refresh_flags();
            if !u.mean_zero {
                return Err(Error::NotMeanZero);
            }
            ensure_solenoidal(&u)?;
            Ok(u)
        }
    }
}

fn gevrey_random(spec: &InitialSpec, grid: TorusGrid) -> Result<SpectralVectorField> {
    let r0 = spec.gevrey_radius;
    if !(r0 >= 0.0) || !r0.is_finite() {
        return Err(invalid("gevrey_radius", r0, "must be nonnegative"));
    }
    let mut rng = rng::stream(spec.seed, 0);
    let mut u = SpectralVectorField::zeros(grid);
    for idx in 1..grid.len() {
        let k = grid.wavevector(idx);
        let canonical = k[0] > 0 || (k[0] == 0 && k[1] > 0);
        if !canonical || !grid.is_dealiased(idx) || grid.has_nyquist(idx) {
            continue;
        }
        let mag = spec.amplitude * (-r0 * (grid.norm2(idx) as f64).sqrt()).exp();
        for c in 0..2 {
            let theta = 2.0 * PI * rng::uniform(&mut rng);
            set_pair(&mut u, c, k, Complex64::from_polar(mag, theta));
        }
    }
    project_in_place(&mut u);
    for comp in &mut u.coeffs {
        comp[0] = ZERO;
    }
    u.mean_zero = true;
    Ok(u)
}

/// Mean-zero pressure `p̂ = −ξ_jξ_m (u_j u_m)^ / |ξ|²` (dealiased products).
pub fn recover_pressure(u: &SpectralVectorField) -> Result<SpectralScalarField> {
    ensure_solenoidal(u)?;
    let grid = u.grid;
    let ws = Workspace::new(grid);
    let (pairs, prods) = ws.symmetric_products(u);
    let mut p = SpectralScalarField::zeros(grid);
    for idx in 1..grid.len() {
        let k = grid.wavevector(idx);
        let k2 = grid.norm2(idx) as f64;
        let mut s = ZERO;
        for (slot, &(i, j)) in pairs.iter().enumerate() {
            let mult = if i == j { 1.0 } else { 2.0 };
            s += prods[slot][idx] * (mult * (k[i] * k[j]) as f64);
        }
        p.coeffs[idx] = -s / k2;
    }
    Ok(p)
}

/// `‖Λ^{γ/2}u‖₂² = (2π)^d Σ |ξ|^γ |û|²`.
pub fn dissipation(u: &SpectralVectorField, gamma: f64) -> f64 {
    let g = u.grid;
    let vol = g.period().powi(g.dim() as i32);
    let mut s = 0.0;
    for comp in &u.coeffs {
        for (idx, c) in comp.iter().enumerate() {
            let k2 = g.norm2(idx);
            if k2 > 0 {
                s += (k2 as f64).powf(0.5 * gamma) * c.norm_sqr();
            }
        }
    }
    vol * s
}

struct Recorder {
    exponents: Vec<f64>,
    kato_q: Vec<(f64, f64)>,
    rec: TrajectoryRecord,
}

impl Recorder {
    fn push(&mut self, ws: &Workspace, t: f64, u: &SpectralVectorField, keep: bool) -> Result<()> {
        let g = u.grid;
        let phys = ws.to_physical(u);
        let mags: Vec<f64> = (0..g.len())
            .map(|x| phys.iter().map(|c| c[x] * c[x]).sum::<f64>().sqrt())
            .collect();
        let cell = g.cell_volume();
        let norms: Vec<f64> = self
            .exponents
            .iter()
            .map(|&q| lp_of_magnitudes(mags.iter().copied(), q, cell))
            .collect();
        let r = &mut self.rec;
        r.times.push(t);
        for (series, n) in r.norm_series.iter_mut().zip(&norms) {
            series.push(*n);
        }
        for (ks, &(q, alpha)) in r.kato.iter_mut().zip(&self.kato_q) {
            let i = self.exponents.iter().position(|&e| e == q).unwrap();
            let val = if t > 0.0 { t.powf(alpha) * norms[i] } else { 0.0 };
            let prev = ks.running_sup.last().copied().unwrap_or(0.0);
            ks.running_sup.push(prev.max(val));
        }
        r.energy_series.push(u.energy());
        r.dissipation_series.push(dissipation(u, r.gamma));
        r.max_divergence = r.max_divergence.max(u.relative_divergence());
        let scale = u.max_abs_coeff();
        if scale > 0.0 {
            r.max_hermitian_defect = r.max_hermitian_defect.max(u.hermitian_defect() / scale);
        }
        if keep {
            r.snapshots.push(u.clone());
        }
        Ok(())
    }
}

/// Runs `config` from `t = 0` to `t_end`.
pub fn simulate(config: &SolverConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    let grid = config.grid;
    let gamma = config.gamma;
    let u0 = init_field(&config.initial, grid)?;
    ensure_solenoidal(&u0)?;
    let steps = (config.t_end / config.slab_dt - 1e-9).ceil().max(1.0) as usize;
    let dt = config.t_end / steps as f64;
    let mut stepper = match config.method {
        Method::PicardSlab => Stepper::picard(
            grid,
            gamma,
            dt,
            config.picard_tol,
            config.picard_max_iter,
            config.collocation_points,
        )?,
        m => Stepper::exponential(grid, gamma, dt, m)?,
    };
    let mut exponents: Vec<f64> = config.q_list.clone();
    exponents.push(2.0);
    exponents.push(f64::INFINITY);
    exponents.sort_by(|a, b| a.partial_cmp(b).unwrap());
    exponents.dedup();
    let mut kato_q = Vec::new();
    for &q in &config.q_list {
        if !kato_q.iter().any(|&(e, _)| e == q) {
            kato_q.push((q, kato_exponent(gamma, 2, q)?));
        }
    }
    let mut recorder = Recorder {
        exponents: exponents.clone(),
        rec: TrajectoryRecord {
            gamma,
            grid,
            step_size: dt,
            times: Vec::new(),
            snapshots: Vec::new(),
            norm_exponents: exponents.clone(),
            norm_series: vec![Vec::new(); exponents.len()],
            energy_series: Vec::new(),
            dissipation_series: Vec::new(),
            kato: kato_q
                .iter()
                .map(|&(q, alpha)| KatoSeries {
                    q,
                    alpha,
                    running_sup: Vec::new(),
                })
                .collect(),
            contraction_diags: Vec::new(),
            max_divergence: 0.0,
            max_hermitian_defect: 0.0,
            final_state: u0.clone(),
        },
        kato_q,
    };
    let ws = Workspace::new(grid);
    recorder.push(&ws, 0.0, &u0, config.keep_snapshots)?;
    let e0 = u0.energy();
    let mut u = u0;
    let mut t_valid = 0.0;
    for step in 1..=steps {
        let (next, diag) = stepper.step(&u)?;
        let t = step as f64 * dt;
        let e = next.energy();
        if !e.is_finite() || e > BLOWUP_FACTOR * e0.max(f64::MIN_POSITIVE) {
            return Err(Error::Blowup { last_valid_time: t_valid });
        }
        if let Some(d) = diag {
            recorder.rec.contraction_diags.push(d);
        }
        u = next;
        t_valid = t;
        if step % config.output_every == 0 || step == steps {
            recorder.push(&ws, t, &u, config.keep_snapshots)?;
        }
    }
    recorder.rec.final_state = u;
    Ok(recorder.rec)
}

/// Label used in reports for a method.
pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::ExpEuler => "exp_euler",
        Method::Etd2 => "etd2",
        Method::PicardSlab => "picard_slab",
    }
}

/// Parses the names produced by [`method_name`].
pub fn parse_method(s: &str) -> Result<Method> {
    match s {
        "exp_euler" => Ok(Method::ExpEuler),
        "etd2" => Ok(Method::Etd2),
        "picard_slab" => Ok(Method::PicardSlab),
        other => Err(Error::Unsupported(format!("unknown method `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn phi_functions() {
        for &z in &[-1e-8, -0.5, -1.999, -2.0, -3.0, -50.0, 0.0, 1.5] {
            let p1 = if z == 0.0 { 1.0 } else { z.exp_m1() / z };
            assert!((phi(1, z) - p1).abs() < 1e-14 * (1.0 + p1.abs()), "z = {z}");
            let p2 = if z == 0.0 { 0.5 } else { (z.exp() - 1.0 - z) / (z * z) };
            if z.abs() > 1e-3 {
                assert!((phi(2, z) - p2).abs() < 1e-12, "z = {z}");
            }
        }
        // continuity across the series/recurrence switch
        for k in 0..6 {
            let a = phi(k, -2.0 + 1e-12);
            let b = phi(k, -2.0 - 1e-12);
            assert!((a - b).abs() < 1e-11, "k = {k}");
        }
    }

    #[test]
    fn lagrange_basis_interpolates() {
        let l = lagrange_monomials(4);
        for (i, li) in l.iter().enumerate() {
            for m in 0..4 {
                let x = m as f64 / 3.0;
                let v: f64 = li.iter().enumerate().map(|(p, c)| c * x.powi(p as i32)).sum();
                let expect = if i == m { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn exact_fields_match_samples() {
        let g = make_grid(2, 16).unwrap();
        let tg = exact_solution(ExactKind::TaylorGreen, 2.0, 1.3, 0.0, g).unwrap();
        let sampled = SpectralVectorField::from_fn(g, |x| [1.3 * x[0].sin() * x[1].cos(), -1.3 * x[0].cos() * x[1].sin(), 0.0]);
        assert!(tg.max_abs_diff(&sampled) < 1e-15);
        let sh = exact_solution(ExactKind::Shear, 2.0, 1.0, 2f64.ln(), g).unwrap();
        let sampled = SpectralVectorField::from_fn(g, |x| [0.5 * x[1].sin(), 0.0, 0.0]);
        assert!(sh.max_abs_diff(&sampled) < 1e-15);
        let u = init_field(&InitialSpec::new(InitialKind::Shear, 1.0), g).unwrap();
        assert!((crate::spectral::lp_norm(&u, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(u.max_divergence(), 0.0);
        assert_eq!(tg.max_divergence(), 0.0);
    }

    #[test]
    fn gevrey_random_is_real_solenoidal_and_seeded() {
        let g = make_grid(2, 64).unwrap();
        let spec = InitialSpec::gevrey(1.0, 0.5, 11);
        let u = init_field(&spec, g).unwrap();
        assert!(u.hermitian_defect() == 0.0);
        assert!(u.relative_divergence() < 1e-15);
        assert!(u.mean_is_zero());
        assert_eq!(u, init_field(&spec, g).unwrap());
        assert_ne!(u, init_field(&InitialSpec::gevrey(1.0, 0.5, 12), g).unwrap());
    }

    #[test]
    fn zero_and_shear_steps() {
        let g = make_grid(2, 32).unwrap();
        let z = SpectralVectorField::zeros(g);
        assert_eq!(step_exponential(&z, 1.5, 0.1, Method::Etd2).unwrap(), z);
        let mut u = init_field(&InitialSpec::new(InitialKind::Shear, 1.0), g).unwrap();
        let mut st = Stepper::exponential(g, 1.5, 0.01, Method::ExpEuler).unwrap();
        for _ in 0..100 {
            u = st.step(&u).unwrap().0;
        }
        let exact = exact_solution(ExactKind::Shear, 1.5, 1.0, 1.0, g).unwrap();
        assert!(u.relative_l2_error(&exact) < 1e-14);
    }

    #[test]
    fn small_step_reduces_to_forward_euler() {
        let g = make_grid(2, 32).unwrap();
        let u = init_field(&InitialSpec::gevrey(0.1, 1.0, 3), g).unwrap();
        let n = crate::spectral::nonlinear_term(&u, Dealias::TwoThirds).unwrap();
        let lap = crate::spectral::fractional_derivative(&u, 1.5).unwrap();
        let errs: Vec<f64> = [1e-3, 5e-4]
            .iter()
            .map(|&dt| {
                let s = step_exponential(&u, 1.5, dt, Method::ExpEuler).unwrap();
                let mut fe = u.clone();
                fe.axpy(-dt, &n);
                fe.axpy(-dt, &lap);
                s.max_abs_diff(&fe)
            })
            .collect();
        // O(dt²): halving dt quarters the gap
        assert!(errs[1] < 0.3 * errs[0], "{errs:?}");
    }

    #[test]
    fn picard_examples() {
        let g = make_grid(2, 32).unwrap();
        let shear = init_field(&InitialSpec::new(InitialKind::Shear, 1.0), g).unwrap();
        let (_, d) = picard_slab(&shear, 1.5, 0.05, 1e-12, 10).unwrap();
        assert_eq!(d.iterations, 1);
        let tg = init_field(&InitialSpec::new(InitialKind::TaylorGreen, 1.0), g).unwrap();
        let (end, d) = picard_slab(&tg, 1.5, 0.05, 1e-12, 10).unwrap();
        assert!(d.iterations <= 2);
        let exact = exact_solution(ExactKind::TaylorGreen, 1.5, 1.0, 0.05, g).unwrap();
        assert!(end.relative_l2_error(&exact) < 1e-13);
    }

    #[test]
    fn picard_divergence_is_reported() {
        let g = make_grid(2, 32).unwrap();
        let u = init_field(&InitialSpec::gevrey(50.0, 0.3, 1), g).unwrap();
        match picard_slab(&u, 1.5, 0.5, 1e-10, 6) {
            Err(Error::PicardDiverged { iterations, history }) => {
                assert_eq!(iterations, history.len());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pressure_of_taylor_green() {
        let g = make_grid(2, 32).unwrap();
        let tg = exact_solution(ExactKind::TaylorGreen, 2.0, 1.0, 0.0, g).unwrap();
        let p = recover_pressure(&tg).unwrap();
        let expect = SpectralScalarField::from_fn(g, |x| 0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()));
        let err = p.coeffs.iter().zip(&expect.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-15, "{err}");
        let shear = exact_solution(ExactKind::Shear, 2.0, 1.0, 0.0, g).unwrap();
        let p = recover_pressure(&shear).unwrap();
        assert!(p.coeffs.iter().all(|c| c.norm() < 1e-16));
    }

    #[test]
    fn kato_exponents() {
        assert!((kato_exponent(2.0, 3, f64::INFINITY).unwrap() - 0.5).abs() < 1e-15);
        assert!((kato_exponent(1.5, 2, 6.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(matches!(kato_exponent(1.5, 2, 4.0), Err(Error::ExponentOutOfRange { .. })));
    }

    #[test]
    fn config_validation() {
        let g = make_grid(2, 16).unwrap();
        let mut c = SolverConfig::new(1.5, g, InitialSpec::new(InitialKind::Shear, 1.0));
        assert!(c.validate().is_ok());
        c.q_list = vec![3.0];
        assert!(c.validate().is_err());
        c.q_list = vec![];
        c.picard_tol = 1e-2;
        assert!(c.validate().is_err());
        c.picard_tol = 1e-8;
        c.gamma = 1.0;
        assert!(c.validate().is_err());
        let g3 = make_grid(3, 8).unwrap();
        assert!(SolverConfig::new(1.5, g3, InitialSpec::new(InitialKind::Shear, 1.0)).validate().is_err());
    }
}
