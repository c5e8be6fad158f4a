//! Free-space generalized heat kernel `G_γ(t, x)` (symbol `e^{−t|ξ|^γ}`) and
//! Oseen kernels `K_{j,m}` (symbol `−ξ_jξ_m/|ξ|² · e^{−t|ξ|^γ}`), optionally
//! hit with `∂^β Λ^α`.
//!
//! Tables are produced by sampling the symbol on a periodic frequency lattice
//! and inverting with one FFT. The spatial period is `samples · pad · h`, so
//! the padding factor controls the error from periodic images, which matters
//! because `G_γ` for `γ < 2` and every Oseen kernel decay only algebraically.

pub mod stable;

pub use stable::{
    build_stable_quadrature, stable_density, subordinated_heat_kernel, StableQuadrature,
    LAPLACE_CHECK_POINTS, LAPLACE_TOL,
};

use alloc::vec;
use alloc::vec::Vec;
use alloc::format;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fft::FftNd;
use crate::report::{EstimateParams, EstimateReport};

/// `−ln 1e−16`: the symbol must have decayed below `1e−16` at the lattice edge.
pub const SYMBOL_CUTOFF: f64 = 36.841361487904734;

/// Smallest table half-width on which the algebraic tail can be observed.
pub const MIN_DECAY_EXTENT: f64 = 8.0;

/// Multiple of the `k ≤ 1` baseline used as the default pass threshold.
pub const BASELINE_FACTOR: f64 = 4.0;

/// Lower margin `ε` for `k + α` in the `L^p` lemma checks.
pub const LEMMA_EPSILON: f64 = 0.1;

/// Tolerance on the measured time-scaling exponent.
pub const EXPONENT_TOL: f64 = 1e-3;

const MAX_ORDER: usize = 40;
const MAX_POINTS: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Heat,
    /// Components are 1-based, `1 ≤ j, m ≤ d`.
    Oseen { j: usize, m: usize },
}

/// What to tabulate: `∂^β Λ^α` of the heat or Oseen kernel at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub gamma: f64,
    pub t: f64,
    pub dim: usize,
    pub kind: KernelKind,
    /// Derivative multi-index `β` (0-based axes); `|β|` is the order `k`.
    pub multi_index: [usize; 3],
    pub frac_order: f64,
}

impl KernelSpec {
    pub fn heat(gamma: f64, t: f64, dim: usize) -> Self {
        KernelSpec {
            gamma,
            t,
            dim,
            kind: KernelKind::Heat,
            multi_index: [0; 3],
            frac_order: 0.0,
        }
    }

    pub fn oseen(gamma: f64, t: f64, dim: usize, j: usize, m: usize) -> Self {
        KernelSpec {
            kind: KernelKind::Oseen { j, m },
            ..Self::heat(gamma, t, dim)
        }
    }

    /// `k` derivatives, all along the first axis.
    pub fn with_derivative(self, k: usize) -> Self {
        self.with_multi_index([k, 0, 0])
    }

    pub fn with_multi_index(mut self, beta: [usize; 3]) -> Self {
        self.multi_index = beta;
        self
    }

    pub fn with_frac_order(mut self, alpha: f64) -> Self {
        self.frac_order = alpha;
        self
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn deriv_order(&self) -> usize {
        self.multi_index.iter().sum()
    }

    pub fn component(&self) -> Option<(usize, usize)> {
        match self.kind {
            KernelKind::Heat => None,
            KernelKind::Oseen { j, m } => Some((j, m)),
        }
    }

    /// `(d + k + α)/γ`: the table at time `t` is `t^{−s}` times the unit-time
    /// table at `x/t^{1/γ}`.
    pub fn scaling_exponent(&self) -> f64 {
        (self.dim as f64 + self.deriv_order() as f64 + self.frac_order) / self.gamma
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return Err(invalid("gamma", self.gamma, "must lie in (0, 2]"));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(invalid("t", self.t, "must be positive"));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(invalid("d", self.dim as f64, "dimension must be 1, 2 or 3"));
        }
        if self.multi_index[self.dim..].iter().any(|&b| b != 0) {
            return Err(Error::InvalidParameter {
                name: "multi_index",
                value: self.deriv_order() as f64,
                reason: "derivative along an axis beyond the dimension",
            });
        }
        let k = self.deriv_order();
        if k > MAX_ORDER {
            return Err(invalid("k", k as f64, "derivative order above 40"));
        }
        let alpha = self.frac_order;
        if !(alpha > -1.0 && alpha <= 1.0) {
            return Err(invalid("alpha", alpha, "must lie in (−1, 1]"));
        }
        if (k as f64) + alpha < 0.0 {
            return Err(invalid("alpha", alpha, "k + alpha must be nonnegative"));
        }
        if let KernelKind::Oseen { j, m } = self.kind {
            if !(1..=self.dim).contains(&j) {
                return Err(invalid("j", j as f64, "component index out of range"));
            }
            if !(1..=self.dim).contains(&m) {
                return Err(invalid("m", m as f64, "component index out of range"));
            }
        }
        Ok(())
    }

    /// Fourier symbol at the frequency `xi` (unused axes ignored).
    pub fn symbol(&self, xi: &[f64; 3]) -> Complex64 {
        let d = self.dim;
        let r2: f64 = xi[..d].iter().map(|v| v * v).sum();
        let k = self.deriv_order();
        if r2 == 0.0 {
            let unit = k == 0 && self.frac_order == 0.0 && self.kind == KernelKind::Heat;
            return if unit { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        }
        let r = r2.sqrt();
        let mut mag = (-self.t * r.powf(self.gamma)).exp();
        if self.frac_order != 0.0 {
            mag *= r.powf(self.frac_order);
        }
        if let KernelKind::Oseen { j, m } = self.kind {
            mag *= -xi[j - 1] * xi[m - 1] / r2;
        }
        for (axis, &b) in self.multi_index[..d].iter().enumerate() {
            if b > 0 {
                mag *= xi[axis].powi(b as i32);
            }
        }
        // i^k
        match k % 4 {
            0 => Complex64::new(mag, 0.0),
            1 => Complex64::new(0.0, mag),
            2 => Complex64::new(-mag, 0.0),
            _ => Complex64::new(0.0, -mag),
        }
    }

    /// `Ξ` with `t Ξ^γ = −ln 1e−16`.
    pub fn required_frequency(&self) -> f64 {
        (SYMBOL_CUTOFF / self.t).powf(1.0 / self.gamma)
    }
}

/// Spatial sampling of a table: `samples` points per axis with spacing
/// `h = 2·extent/samples` covering `[−extent, extent)`, computed with an FFT
/// of length `samples · pad` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrid {
    pub extent: f64,
    pub samples: usize,
    pub pad: usize,
}

impl KernelGrid {
    pub fn new(extent: f64, samples: usize, pad: usize) -> Result<Self> {
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(invalid("extent", extent, "must be positive"));
        }
        if samples < 8 || !samples.is_power_of_two() {
            return Err(invalid("samples", samples as f64, "must be a power of two ≥ 8"));
        }
        if pad == 0 || !pad.is_power_of_two() {
            return Err(invalid("pad", pad as f64, "must be a power of two"));
        }
        Ok(KernelGrid { extent, samples, pad })
    }

    /// Padding giving a period of `samples · pad · h`: 64 in 1-D, 4 in 2-D,
    /// 2 in 3-D.
    pub fn default_pad(dim: usize) -> usize {
        match dim {
            1 => 64,
            2 => 4,
            _ => 2,
        }
    }

    pub fn with_default_pad(dim: usize, extent: f64, samples: usize) -> Result<Self> {
        Self::new(extent, samples, Self::default_pad(dim))
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.samples as f64
    }

    pub fn fft_len(&self) -> usize {
        self.samples * self.pad
    }

    pub fn period(&self) -> f64 {
        self.fft_len() as f64 * self.spacing()
    }
}

/// One period of the periodized kernel.
#[derive(Debug, Clone)]
pub struct PeriodicKernel {
    spec: KernelSpec,
    n: usize,
    spacing: f64,
    values: Vec<f64>,
}

fn lattice_index(dim: usize, n: usize, idx: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut rest = idx;
    for a in (0..dim).rev() {
        out[a] = rest % n;
        rest /= n;
    }
    out
}

fn signed(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl PeriodicKernel {
    /// FFT length `n` per axis, spatial spacing `spacing`.
    pub fn compute(spec: &KernelSpec, n: usize, spacing: f64) -> Result<Self> {
        spec.validate()?;
        if n < 8 || !n.is_power_of_two() {
            return Err(invalid("n", n as f64, "FFT length must be a power of two ≥ 8"));
        }
        let total = n
            .checked_pow(spec.dim as u32)
            .filter(|&t| t <= MAX_POINTS)
            .ok_or_else(|| Error::InvalidGrid(format!("{n}^{} symbol points exceed the limit", spec.dim)))?;
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(invalid("spacing", spacing, "must be positive"));
        }
        let available = PI / spacing;
        let required = spec.required_frequency();
        if spec.t * available.powf(spec.gamma) <= SYMBOL_CUTOFF {
            return Err(Error::SymbolGridTooCoarse { required, available });
        }
        let d = spec.dim;
        let dk = 2.0 * PI / (n as f64 * spacing);
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        for (idx, s) in buf.iter_mut().enumerate() {
            let ii = lattice_index(d, n, idx);
            if ii[..d].contains(&(n / 2)) {
                continue;
            }
            let mut xi = [0.0; 3];
            for a in 0..d {
                xi[a] = dk * signed(ii[a], n) as f64;
            }
            *s = spec.symbol(&xi);
        }
        FftNd::new(d, n).inverse(&mut buf);
        let scale = 1.0 / (n as f64 * spacing).powi(d as i32);
        let values = buf.iter().map(|c| c.re * scale).collect();
        Ok(PeriodicKernel {
            spec: *spec,
            n,
            spacing,
            values,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn period(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    /// Values at `x = i·h` (FFT order per axis, row-major).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Grid `L^p` norm over one period; `p = ∞` uses [`Self::refined_sup`].
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(invalid("p", p, "must be at least 1"));
        }
        if p.is_infinite() {
            return Ok(self.refined_sup());
        }
        let cell = self.spacing.powi(self.spec.dim as i32);
        let top = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 {
            return Ok(0.0);
        }
        let sum: f64 = self.values.iter().map(|v| (v.abs() / top).powf(p)).sum();
        Ok(top * (sum * cell).powf(1.0 / p))
    }

    /// Lattice modes whose symbol exceeds `1e−20` of the largest one, scaled
    /// by `1/P^d`.
    fn significant_modes(&self) -> Vec<([f64; 3], Complex64)> {
        let d = self.spec.dim;
        let n = self.n;
        let dk = 2.0 * PI / self.period();
        let scale = 1.0 / self.period().powi(d as i32);
        let mut modes = Vec::new();
        let mut top = 0.0f64;
        for idx in 0..n.pow(d as u32) {
            let ii = lattice_index(d, n, idx);
            if ii[..d].contains(&(n / 2)) {
                continue;
            }
            let mut xi = [0.0; 3];
            for a in 0..d {
                xi[a] = dk * signed(ii[a], n) as f64;
            }
            let c = self.spec.symbol(&xi);
            let mag = c.norm();
            if mag == 0.0 || mag < 1e-20 * top {
                continue;
            }
            top = top.max(mag);
            modes.push((xi, c * scale));
        }
        modes.retain(|(_, c)| c.norm() >= 1e-20 * top * scale);
        modes
    }

    /// Trigonometric interpolant at an arbitrary point.
    pub fn value_at(&self, x: [f64; 3]) -> f64 {
        let modes = self.significant_modes();
        eval_with_derivatives(&modes, self.spec.dim, &x).0
    }

    /// `sup |K|` located by Newton ascent on the trigonometric interpolant,
    /// started from the largest grid local maxima.
    pub fn refined_sup(&self) -> f64 {
        let d = self.spec.dim;
        let n = self.n;
        let h = self.spacing;
        let grid_max = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grid_max == 0.0 {
            return 0.0;
        }
        let mut candidates: Vec<(f64, usize)> = Vec::new();
        for (idx, v) in self.values.iter().enumerate() {
            let a = v.abs();
            if a < 0.5 * grid_max {
                continue;
            }
            let ii = lattice_index(d, n, idx);
            let is_peak = (0..d).all(|axis| {
                [1usize, n - 1].iter().all(|&off| {
                    let mut jj = ii;
                    jj[axis] = (jj[axis] + off) % n;
                    let j = flat(d, n, &jj);
                    self.values[j].abs() <= a
                })
            });
            if is_peak {
                candidates.push((a, idx));
            }
        }
        candidates.sort_by(|p, q| q.0.partial_cmp(&p.0).unwrap());
        candidates.truncate(8);
        let modes = self.significant_modes();
        let mut best = grid_max;
        for &(_, idx) in &candidates {
            let ii = lattice_index(d, n, idx);
            let mut x = [0.0; 3];
            for a in 0..d {
                x[a] = signed(ii[a], n) as f64 * h;
            }
            best = best.max(newton_ascent(&modes, d, x, h));
        }
        best
    }

    /// Restriction to the table window `[−extent, extent)^d` sampled on
    /// `samples` points per axis.
    fn window(&self, samples: usize) -> Vec<f64> {
        let d = self.spec.dim;
        let n = self.n;
        let total = samples.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let ii = lattice_index(d, samples, idx);
            let mut jj = [0usize; 3];
            for a in 0..d {
                let off = ii[a] as i64 - (samples / 2) as i64;
                jj[a] = off.rem_euclid(n as i64) as usize;
            }
            out.push(self.values[flat(d, n, &jj)]);
        }
        out
    }
}

fn flat(d: usize, n: usize, ii: &[usize; 3]) -> usize {
    ii[..d].iter().fold(0, |acc, &i| acc * n + i)
}

/// Value, gradient and Hessian of `Re Σ c e^{iξ·x}`.
fn eval_with_derivatives(modes: &[([f64; 3], Complex64)], d: usize, x: &[f64; 3]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let mut v = 0.0;
    let mut g = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    for (xi, c) in modes {
        let phase: f64 = (0..d).map(|a| xi[a] * x[a]).sum();
        let (s, co) = phase.sin_cos();
        let e = Complex64::new(co, s) * c;
        v += e.re;
        for a in 0..d {
            // Re(i ξ_a e) = −ξ_a Im e
            g[a] -= xi[a] * e.im;
            for b in 0..d {
                hess[a][b] -= xi[a] * xi[b] * e.re;
            }
        }
    }
    (v, g, hess)
}

fn solve_small(d: usize, mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..d {
        let piv = (col..d).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..d {
            let f = a[row][col] / a[col][col];
            for c in col..d {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..d).rev() {
        let mut s = b[row];
        for c in row + 1..d {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

fn newton_ascent(modes: &[([f64; 3], Complex64)], d: usize, mut x: [f64; 3], h: f64) -> f64 {
    let (v0, _, _) = eval_with_derivatives(modes, d, &x);
    let sign = if v0 < 0.0 { -1.0 } else { 1.0 };
    let mut best = v0 * sign;
    for _ in 0..30 {
        let (_, g, hs) = eval_with_derivatives(modes, d, &x);
        let mut gs = [0.0; 3];
        let mut hneg = [[0.0; 3]; 3];
        for a in 0..d {
            gs[a] = g[a] * sign;
            for b in 0..d {
                hneg[a][b] = -hs[a][b] * sign;
            }
        }
        // ascent direction: (−H) δ = g when −H is positive definite
        let mut step = match solve_small(d, hneg, gs) {
            Some(s) if (0..d).map(|a| s[a] * gs[a]).sum::<f64>() > 0.0 => s,
            _ => gs,
        };
        let len = (0..d).map(|a| step[a] * step[a]).sum::<f64>().sqrt();
        if len > h {
            for s in step.iter_mut() {
                *s *= h / len;
            }
        }
        let mut improved = false;
        let mut scale = 1.0;
        for _ in 0..40 {
            let mut trial = x;
            for a in 0..d {
                trial[a] += scale * step[a];
            }
            let val = eval_with_derivatives(modes, d, &trial).0 * sign;
            if val > best {
                best = val;
                x = trial;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved || scale * len < 1e-13 * (1.0 + h) {
            break;
        }
    }
    best
}

/// Kernel values on `[−extent, extent)^d`; point `i` along an axis is
/// `−extent + i·h`, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub gamma: f64,
    pub t: f64,
    pub dimension: usize,
    pub deriv_order: usize,
    pub multi_index: [usize; 3],
    pub frac_order: f64,
    pub component: Option<(usize, usize)>,
    pub grid_extent: f64,
    pub samples_per_axis: usize,
    /// FFT padding factor the table was computed with.
    pub pad: usize,
    pub values: Vec<f64>,
}

impl KernelTable {
    pub fn spec(&self) -> KernelSpec {
        let base = match self.component {
            None => KernelSpec::heat(self.gamma, self.t, self.dimension),
            Some((j, m)) => KernelSpec::oseen(self.gamma, self.t, self.dimension, j, m),
        };
        base.with_multi_index(self.multi_index).with_frac_order(self.frac_order)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.grid_extent / self.samples_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -self.grid_extent + i as f64 * self.spacing()
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ii = lattice_index(self.dimension, self.samples_per_axis, idx);
        let mut x = [0.0; 3];
        for a in 0..self.dimension {
            x[a] = self.axis_coordinate(ii[a]);
        }
        x
    }

    pub fn radius(&self, idx: usize) -> f64 {
        self.point(idx).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Value at the grid point closest to the origin offset `x` given in
    /// whole grid steps.
    pub fn value_at_offset(&self, offset: [i64; 3]) -> Option<f64> {
        let s = self.samples_per_axis as i64;
        let mut ii = [0usize; 3];
        for a in 0..self.dimension {
            let i = offset[a] + s / 2;
            if !(0..s).contains(&i) {
                return None;
            }
            ii[a] = i as usize;
        }
        Some(self.values[flat(self.dimension, self.samples_per_axis, &ii)])
    }

    /// Riemann sum of the values over the window.
    pub fn window_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing().powi(self.dimension as i32)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Tensor-product 6-point Lagrange interpolation; `None` when the stencil
    /// leaves the table.
    pub fn interpolate(&self, x: [f64; 3]) -> Option<f64> {
        let d = self.dimension;
        let h = self.spacing();
        let s = self.samples_per_axis;
        let mut base = [0usize; 3];
        let mut weights = [[0.0f64; 6]; 3];
        for a in 0..d {
            let f = (x[a] + self.grid_extent) / h;
            let i0 = f.floor() as i64 - 2;
            if i0 < 0 || i0 + 5 >= s as i64 {
                return None;
            }
            base[a] = i0 as usize;
            let u = f - i0 as f64;
            for (j, w) in weights[a].iter_mut().enumerate() {
                let mut prod = 1.0;
                for m in 0..6 {
                    if m != j {
                        prod *= (u - m as f64) / (j as f64 - m as f64);
                    }
                }
                *w = prod;
            }
        }
        let count = 6usize.pow(d as u32);
        let mut sum = 0.0;
        for c in 0..count {
            let off = lattice_index(d, 6, c);
            let mut w = 1.0;
            let mut ii = [0usize; 3];
            for a in 0..d {
                w *= weights[a][off[a]];
                ii[a] = base[a] + off[a];
            }
            sum += w * self.values[flat(d, s, &ii)];
        }
        Some(sum)
    }

    /// `max (1+|x|)^{d+k+α} |value|` over the table, with its radius.
    pub fn weighted_sup(&self) -> (f64, f64) {
        let w = self.dimension as f64 + self.deriv_order as f64 + self.frac_order;
        let mut best = (0.0, 0.0);
        for (idx, v) in self.values.iter().enumerate() {
            let r = self.radius(idx);
            let val = (1.0 + r).powf(w) * v.abs();
            if val > best.0 {
                best = (val, r);
            }
        }
        best
    }
}

/// Tabulate `spec` on `grid`.
pub fn kernel_table(spec: &KernelSpec, grid: &KernelGrid) -> Result<KernelTable> {
    let periodic = PeriodicKernel::compute(spec, grid.fft_len(), grid.spacing())?;
    Ok(KernelTable {
        gamma: spec.gamma,
        t: spec.t,
        dimension: spec.dim,
        deriv_order: spec.deriv_order(),
        multi_index: spec.multi_index,
        frac_order: spec.frac_order,
        component: spec.component(),
        grid_extent: grid.extent,
        samples_per_axis: grid.samples,
        pad: grid.pad,
        values: periodic.window(grid.samples),
    })
}

/// `G_γ(t, ·)` on `[−extent, extent)^d` with the default padding.
pub fn heat_kernel_table(gamma: f64, t: f64, d: usize, extent: f64, samples: usize) -> Result<KernelTable> {
    let spec = KernelSpec::heat(gamma, t, d);
    spec.validate()?;
    kernel_table(&spec, &KernelGrid::with_default_pad(d, extent, samples)?)
}

/// `∂_1^k Λ^α K_{j,m}(t, ·)` with the default padding.
#[allow(clippy::too_many_arguments)]
pub fn oseen_kernel_table(
    gamma: f64,
    t: f64,
    d: usize,
    j: usize,
    m: usize,
    k: usize,
    alpha: f64,
    extent: f64,
    samples: usize,
) -> Result<KernelTable> {
    let spec = KernelSpec::oseen(gamma, t, d, j, m)
        .with_derivative(k)
        .with_frac_order(alpha);
    spec.validate()?;
    kernel_table(&spec, &KernelGrid::with_default_pad(d, extent, samples)?)
}

/// Compare `later` with the rescaled `earlier` table,
/// `later(x) = (t₂/t₁)^{−(d+k+α)/γ} earlier(x (t₁/t₂)^{1/γ})`.
///
/// Returns `sup |difference| / sup |later|` over the points of `later` whose
/// preimage has a full interpolation stencil in `earlier`.
pub fn scaling_collapse(earlier: &KernelTable, later: &KernelTable) -> Result<f64> {
    let same = earlier.gamma == later.gamma
        && earlier.dimension == later.dimension
        && earlier.multi_index == later.multi_index
        && earlier.frac_order == later.frac_order
        && earlier.component == later.component;
    if !same {
        return Err(Error::Unsupported("tables describe different kernels".into()));
    }
    let ratio = later.t / earlier.t;
    let stretch = ratio.powf(1.0 / later.gamma);
    let amp = ratio.powf(-later.spec().scaling_exponent());
    let mut diff = 0.0f64;
    let mut top = 0.0f64;
    let mut used = 0usize;
    for (idx, &v) in later.values.iter().enumerate() {
        let x = later.point(idx);
        let pre = [x[0] / stretch, x[1] / stretch, x[2] / stretch];
        if let Some(e) = earlier.interpolate(pre) {
            diff = diff.max((v - amp * e).abs());
            top = top.max(v.abs());
            used += 1;
        }
    }
    if used == 0 || top == 0.0 {
        return Err(Error::Unsupported("tables have no overlapping interior points".into()));
    }
    Ok(diff / top)
}

/// Ratio of the weighted tail `max |x|^{d+k+α}|K|` on the outer shell
/// `0.85E ≤ |x| ≤ E` to the same quantity on the mid shell `0.4E ≤ |x| ≤ 0.6E`.
pub fn tail_plateau_ratio(table: &KernelTable) -> f64 {
    let w = table.dimension as f64 + table.deriv_order as f64 + table.frac_order;
    let e = table.grid_extent;
    let mut outer = 0.0f64;
    let mut mid = 0.0f64;
    for (idx, v) in table.values.iter().enumerate() {
        let r = table.radius(idx);
        let val = r.powf(w) * v.abs();
        if (0.85 * e..=e).contains(&r) {
            outer = outer.max(val);
        } else if (0.4 * e..=0.6 * e).contains(&r) {
            mid = mid.max(val);
        }
    }
    outer / mid
}

fn decay_params(table: &KernelTable) -> EstimateParams {
    let label = match table.component {
        None => "heat_kernel_decay".into(),
        Some((j, m)) => format!("oseen_K{j}{m}_decay"),
    };
    EstimateParams {
        label,
        gamma: Some(table.gamma),
        d: Some(table.dimension),
        k: Some(table.deriv_order),
        alpha: Some(table.frac_order),
        p: None,
    }
}

/// `(max (1+|x|)^{d+k+α}|K| / max(k,1)^k)^{1/(k+1)}` against `threshold`.
pub fn verify_kernel_decay(table: &KernelTable, threshold: f64) -> Result<EstimateReport> {
    if (table.t - 1.0).abs() > 1e-12 {
        return Err(Error::TableNotUnitTime { t: table.t });
    }
    if table.grid_extent < MIN_DECAY_EXTENT {
        return Err(Error::TableTooSmall {
            extent: table.grid_extent,
        });
    }
    let (sup, _) = table.weighted_sup();
    let k = table.deriv_order;
    let kk = (k.max(1) as f64).powi(k as i32);
    let normalized = (sup / kk).powf(1.0 / (k as f64 + 1.0));
    Ok(EstimateReport::new(decay_params(table), sup, normalized, threshold))
}

/// Decay reports for `∂_1^k` of `base` over `orders`, each judged against
/// `BASELINE_FACTOR` times the larger normalized constant at `k ∈ {0, 1}`.
pub fn decay_sweep(base: &KernelSpec, grid: &KernelGrid, orders: &[usize]) -> Result<Vec<EstimateReport>> {
    let at = |k: usize| -> Result<(KernelTable, f64)> {
        let table = kernel_table(&base.with_derivative(k), grid)?;
        let c = verify_kernel_decay(&table, f64::INFINITY)?.normalized_constant;
        Ok((table, c))
    };
    let (_, c0) = at(0)?;
    let (_, c1) = at(1)?;
    let threshold = BASELINE_FACTOR * c0.max(c1);
    orders
        .iter()
        .map(|&k| {
            let (table, _) = at(k)?;
            verify_kernel_decay(&table, threshold)
        })
        .collect()
}

/// Outcome of one `L^p` lemma check: the normalized constant at `t = 1` and
/// the measured time-scaling exponent between `t = 1` and `t = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub report: EstimateReport,
    pub norm_t1: f64,
    pub norm_t2: f64,
    pub measured_exponent: f64,
    pub expected_exponent: f64,
    pub exponent_pass: bool,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.report.pass && self.exponent_pass
    }
}

/// Numerical resolution of the lemma checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaGrid {
    pub n: usize,
    pub spacing: f64,
}

impl LemmaGrid {
    /// Period 2048 at `h = 1/32` in 1-D, period 128 at `h = 1/32` in 2-D and
    /// period 32 at `h = 1/4` in 3-D.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => LemmaGrid { n: 1 << 16, spacing: 1.0 / 32.0 },
            2 => LemmaGrid { n: 4096, spacing: 1.0 / 32.0 },
            _ => LemmaGrid { n: 128, spacing: 0.25 },
        }
    }
}

/// `‖D^k Λ^α G_γ(t)‖_{L^p}`, `D^k = ∂_1^k`, measured on one period.
pub fn lemma_norm(gamma: f64, t: f64, d: usize, k: usize, alpha: f64, p: f64, grid: &LemmaGrid) -> Result<f64> {
    let spec = KernelSpec::heat(gamma, t, d).with_derivative(k).with_frac_order(alpha);
    PeriodicKernel::compute(&spec, grid.n, grid.spacing)?.lp_norm(p)
}

fn check_lemma_hypotheses(gamma: f64, k: usize, alpha: f64, p: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(invalid("gamma", gamma, "must lie in (0, 2]"));
    }
    if !(p >= 1.0) {
        return Err(invalid("p", p, "must be at least 1"));
    }
    if !(LEMMA_EPSILON - 1.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", alpha, "must lie in [ε − 1, 1]"));
    }
    let order = k as f64 + alpha;
    if !(order >= LEMMA_EPSILON || (k == 0 && alpha == 0.0)) {
        return Err(invalid("alpha", alpha, "k + alpha must be at least ε unless k = alpha = 0"));
    }
    Ok(())
}

/// Normalized constant `(‖D^kΛ^αG(1)‖_p / max(k,1)^{k/γ})^{1/(k+1)}`.
pub fn lemma_normalized(norm: f64, gamma: f64, k: usize) -> f64 {
    let kk = (k.max(1) as f64).powf(k as f64 / gamma);
    (norm / kk).powf(1.0 / (k as f64 + 1.0))
}

/// `−(k+α)/γ − (d/γ)(1 − 1/p)`.
pub fn lemma_exponent(gamma: f64, d: usize, k: usize, alpha: f64, p: f64) -> f64 {
    -(k as f64 + alpha) / gamma - (d as f64 / gamma) * (1.0 - 1.0 / p)
}

/// Lemma check with an explicit threshold and resolution.
#[allow(clippy::too_many_arguments)]
pub fn verify_lemma_norms_with(
    gamma: f64,
    d: usize,
    k: usize,
    alpha: f64,
    p: f64,
    threshold: f64,
    grid: &LemmaGrid,
) -> Result<LemmaReport> {
    check_lemma_hypotheses(gamma, k, alpha, p)?;
    let n1 = lemma_norm(gamma, 1.0, d, k, alpha, p, grid)?;
    let n2 = lemma_norm(gamma, 2.0, d, k, alpha, p, grid)?;
    let measured = (n2 / n1).log2();
    let expected = lemma_exponent(gamma, d, k, alpha, p);
    let params = EstimateParams {
        label: "lemma_lp_norm".into(),
        gamma: Some(gamma),
        d: Some(d),
        k: Some(k),
        alpha: Some(alpha),
        p: Some(p),
    };
    let normalized = lemma_normalized(n1, gamma, k);
    Ok(LemmaReport {
        report: EstimateReport::new(params, n1, normalized, threshold),
        norm_t1: n1,
        norm_t2: n2,
        measured_exponent: measured,
        expected_exponent: expected,
        exponent_pass: (measured - expected).abs() <= EXPONENT_TOL,
    })
}

/// Lemma check at the default resolution, with the threshold set to
/// `BASELINE_FACTOR` times the larger normalized constant of `k ∈ {0, 1}`,
/// `α = 0` at the same `p`.
pub fn verify_lemma_norms(gamma: f64, d: usize, k: usize, alpha: f64, p: f64) -> Result<LemmaReport> {
    check_lemma_hypotheses(gamma, k, alpha, p)?;
    let grid = LemmaGrid::default_for(d);
    let c0 = lemma_normalized(lemma_norm(gamma, 1.0, d, 0, 0.0, p, &grid)?, gamma, 0);
    let c1 = lemma_normalized(lemma_norm(gamma, 1.0, d, 1, 0.0, p, &grid)?, gamma, 1);
    verify_lemma_norms_with(gamma, d, k, alpha, p, BASELINE_FACTOR * c0.max(c1), &grid)
}

/// Lemma checks for every `k` in `orders` and every `p` in `ps` at fixed
/// `(γ, d, α)`, sharing one pair of tables per `k`. Thresholds are
/// `BASELINE_FACTOR` times the larger normalized constant of `k ∈ {0, 1}`,
/// `α = 0`, per `p`. Results are ordered by `k`, then `p`.
pub fn lemma_sweep(
    gamma: f64,
    d: usize,
    orders: &[usize],
    alpha: f64,
    ps: &[f64],
    grid: &LemmaGrid,
) -> Result<Vec<LemmaReport>> {
    for &k in orders {
        for &p in ps {
            check_lemma_hypotheses(gamma, k, alpha, p)?;
        }
    }
    let norms_at = |t: f64, k: usize, a: f64| -> Result<Vec<f64>> {
        let spec = KernelSpec::heat(gamma, t, d).with_derivative(k).with_frac_order(a);
        let pk = PeriodicKernel::compute(&spec, grid.n, grid.spacing)?;
        ps.iter().map(|&p| pk.lp_norm(p)).collect()
    };
    let mut t1 = Vec::with_capacity(orders.len());
    for &k in orders {
        t1.push(norms_at(1.0, k, alpha)?);
    }
    let baseline = |k: usize| -> Result<Vec<f64>> {
        match orders.iter().position(|&o| o == k) {
            Some(i) if alpha == 0.0 => Ok(t1[i].clone()),
            _ => norms_at(1.0, k, 0.0),
        }
    };
    let b0 = baseline(0)?;
    let b1 = baseline(1)?;
    let mut out = Vec::with_capacity(orders.len() * ps.len());
    for (i, &k) in orders.iter().enumerate() {
        let t2 = norms_at(2.0, k, alpha)?;
        for (j, &p) in ps.iter().enumerate() {
            let threshold = BASELINE_FACTOR * lemma_normalized(b0[j], gamma, 0).max(lemma_normalized(b1[j], gamma, 1));
            let (n1, n2) = (t1[i][j], t2[j]);
            let measured = (n2 / n1).log2();
            let expected = lemma_exponent(gamma, d, k, alpha, p);
            let params = EstimateParams {
                label: "lemma_lp_norm".into(),
                gamma: Some(gamma),
                d: Some(d),
                k: Some(k),
                alpha: Some(alpha),
                p: Some(p),
            };
            out.push(LemmaReport {
                report: EstimateReport::new(params, n1, lemma_normalized(n1, gamma, k), threshold),
                norm_t1: n1,
                norm_t2: n2,
                measured_exponent: measured,
                expected_exponent: expected,
                exponent_pass: (measured - expected).abs() <= EXPONENT_TOL,
            });
        }
    }
    Ok(out)
}

/// Largest over smallest normalized constant across the reports for one `k`.
pub fn p_spread(reports: &[&LemmaReport]) -> f64 {
    let cs = reports.iter().map(|r| r.report.normalized_constant);
    let hi = cs.clone().fold(0.0f64, f64::max);
    let lo = cs.fold(f64::INFINITY, f64::min);
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_and_poisson_peaks() {
        let g = heat_kernel_table(2.0, 1.0, 2, 8.0, 64).unwrap();
        let v = g.value_at_offset([0, 0, 0]).unwrap();
        assert!((v - 0.25 / PI).abs() < 1e-10, "{v}");
        let p = heat_kernel_table(1.0, 1.0, 2, 8.0, 256).unwrap();
        let v = p.value_at_offset([0, 0, 0]).unwrap();
        assert!((v - 0.5 / PI).abs() < 1e-4, "{v}");
    }

    #[test]
    fn gaussian_matches_closed_form_off_origin() {
        let g = heat_kernel_table(2.0, 1.0, 1, 8.0, 64).unwrap();
        for idx in 0..g.len() {
            let x = g.point(idx)[0];
            let exact = (-x * x / 4.0).exp() / (4.0 * PI).sqrt();
            assert!((g.values[idx] - exact).abs() < 1e-13);
        }
        assert!((g.window_mass() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn too_coarse_symbol_grid_reports_required_frequency() {
        match heat_kernel_table(1.5, 0.1, 2, 8.0, 16) {
            Err(Error::SymbolGridTooCoarse { required, available }) => {
                assert!((required - (SYMBOL_CUTOFF / 0.1f64).powf(1.0 / 1.5)).abs() < 1e-9);
                assert!((available - PI).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_identity_and_parity() {
        let g = heat_kernel_table(2.0, 1.0, 2, 8.0, 64).unwrap();
        let k11 = oseen_kernel_table(2.0, 1.0, 2, 1, 1, 0, 0.0, 8.0, 64).unwrap();
        let k22 = oseen_kernel_table(2.0, 1.0, 2, 2, 2, 0, 0.0, 8.0, 64).unwrap();
        // the Riesz factor vanishes on the zero mode, which carries 1/P^d
        let zero_mode = 1.0 / KernelGrid::with_default_pad(2, 8.0, 64).unwrap().period().powi(2);
        for i in 0..g.len() {
            let s = k11.values[i] + k22.values[i] + g.values[i];
            assert!((s - zero_mode).abs() < 1e-12);
        }
        let k12 = oseen_kernel_table(1.5, 1.0, 2, 1, 2, 0, 0.0, 8.0, 64).unwrap();
        for &(a, b) in &[(3i64, 5i64), (7, 1), (10, 20)] {
            let v = k12.value_at_offset([a, b, 0]).unwrap();
            let r1 = k12.value_at_offset([-a, b, 0]).unwrap();
            let r2 = k12.value_at_offset([a, -b, 0]).unwrap();
            assert!(v.abs() > 1e-6);
            assert!((v + r1).abs() < 1e-12 && (v + r2).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(oseen_kernel_table(1.5, 1.0, 2, 3, 1, 0, 0.0, 8.0, 64).is_err());
        assert!(oseen_kernel_table(1.5, 1.0, 2, 1, 2, 0, 1.5, 8.0, 64).is_err());
        assert!(oseen_kernel_table(1.5, 1.0, 2, 1, 2, 0, -1.0, 8.0, 64).is_err());
        assert!(heat_kernel_table(2.5, 1.0, 2, 8.0, 64).is_err());
        assert!(heat_kernel_table(1.5, 1.0, 4, 8.0, 64).is_err());
        let t = heat_kernel_table(1.5, 2.0, 1, 8.0, 64).unwrap();
        assert!(matches!(verify_kernel_decay(&t, 1.0), Err(Error::TableNotUnitTime { .. })));
        let t = heat_kernel_table(1.5, 1.0, 1, 4.0, 64).unwrap();
        assert!(matches!(verify_kernel_decay(&t, 1.0), Err(Error::TableTooSmall { .. })));
        assert!(verify_lemma_norms(1.5, 1, 0, 0.05, 2.0).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_quintics() {
        let mut t = heat_kernel_table(2.0, 1.0, 1, 8.0, 64).unwrap();
        for idx in 0..t.len() {
            let x = t.point(idx)[0];
            t.values[idx] = 1.0 - 2.0 * x + 0.3 * x.powi(3) - 0.01 * x.powi(5);
        }
        let x = 1.2345;
        let exact = 1.0 - 2.0 * x + 0.3 * x.powi(3) - 0.01 * x.powi(5);
        assert!((t.interpolate([x, 0.0, 0.0]).unwrap() - exact).abs() < 1e-10);
        assert!(t.interpolate([7.9, 0.0, 0.0]).is_none());
    }

    #[test]
    fn gaussian_scaling_collapse() {
        let grid = KernelGrid::new(8.0, 256, 4).unwrap();
        let a = kernel_table(&KernelSpec::heat(2.0, 1.0, 1), &grid).unwrap();
        let b = kernel_table(&KernelSpec::heat(2.0, 2.0, 1), &grid).unwrap();
        assert!(scaling_collapse(&a, &b).unwrap() < 1e-6);
    }

    #[test]
    fn refined_sup_of_gaussian_derivative() {
        // ∂_x of (4π)^{−1/2} e^{−x²/4} peaks at x = √2
        let spec = KernelSpec::heat(2.0, 1.0, 1).with_derivative(1);
        let pk = PeriodicKernel::compute(&spec, 256, 0.25).unwrap();
        let exact = 2f64.sqrt() / 2.0 * (-0.5f64).exp() / (4.0 * PI).sqrt();
        assert!((pk.refined_sup() - exact).abs() < 1e-12, "{} vs {exact}", pk.refined_sup());
    }

    #[test]
    fn lemma_examples() {
        let grid = LemmaGrid::default_for(2);
        let peak = lemma_norm(2.0, 1.0, 2, 0, 0.0, f64::INFINITY, &grid).unwrap();
        assert!((peak - 0.25 / PI).abs() < 1e-10);
        let mass = lemma_norm(1.5, 1.0, 1, 0, 0.0, 1.0, &LemmaGrid::default_for(1)).unwrap();
        assert!((mass - 1.0).abs() < 1e-6);
        let r = verify_lemma_norms_with(1.5, 2, 2, 0.0, 2.0, f64::INFINITY, &grid).unwrap();
        assert!((r.expected_exponent + 2.0).abs() < 1e-15);
        assert!(r.exponent_pass, "{}", r.measured_exponent);
    }
}
