//! Periodic spectral substrate on `[0, 2π)^d`.
//!
//! A real field is stored as its Fourier-series coefficients
//! `u(x) = Σ_ξ û(ξ) e^{iξ·x}`, `û(ξ) = (2π)^{-d} ∫ u(x) e^{-iξ·x} dx`, on the
//! integer wavenumbers `ξ_i ∈ {−n/2, …, n/2−1}`. Arrays are row-major in FFT
//! order (axis index `i` holds wavenumber `i` for `i < n/2`, `i − n` otherwise).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fft::FftNd;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative divergence above which a field is rejected as not solenoidal.
pub const DIV_FREE_REJECT: f64 = 1e-9;

/// Uniform grid on the `d`-torus of period `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

/// Builds a grid; `d ∈ {1,2,3}`, `n` a power of two in `[8, 4096]`.
pub fn make_grid(d: usize, n: usize) -> Result<TorusGrid> {
    TorusGrid::new(d, n)
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        use alloc::format;
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("odd resolution n = {n}")));
        }
        if !(8..=4096).contains(&n) {
            return Err(Error::InvalidGrid(format!("resolution n = {n} outside [8, 4096]")));
        }
        if !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("resolution n = {n} is not a power of two")));
        }
        Ok(TorusGrid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points (and of Fourier modes).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn period(&self) -> f64 {
        2.0 * PI
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Wavenumber stored at FFT index `i` along one axis.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// All wavenumbers of one axis in ascending order.
    pub fn wavenumbers(&self) -> Vec<i64> {
        let h = (self.n / 2) as i64;
        (-h..h).collect()
    }

    /// Per-axis array indices of a flat index (unused axes are 0).
    #[inline]
    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            1 => [idx, 0, 0],
            2 => [idx / n, idx % n, 0],
            _ => [idx / (n * n), (idx / n) % n, idx % n],
        }
    }

    /// Wavevector of a flat index (unused axes are 0).
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let a = self.axis_indices(idx);
        let mut k = [0i64; 3];
        for ax in 0..self.dim {
            k[ax] = self.wavenumber(a[ax]);
        }
        k
    }

    /// Flat index holding wavevector `k` (taken modulo `n`).
    pub fn index_of(&self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let mut idx = 0usize;
        for &kx in k.iter().take(self.dim) {
            idx = idx * self.n + kx.rem_euclid(n) as usize;
        }
        idx
    }

    /// Flat index of `−ξ`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let a = self.axis_indices(idx);
        let n = self.n;
        let mut out = 0usize;
        for &ai in a.iter().take(self.dim) {
            out = out * n + (n - ai) % n;
        }
        out
    }

    /// `|ξ|²` of a flat index.
    #[inline]
    pub fn norm2(&self, idx: usize) -> i64 {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// True when some axis sits on the Nyquist wavenumber `−n/2`.
    #[inline]
    pub fn has_nyquist(&self, idx: usize) -> bool {
        let a = self.axis_indices(idx);
        a.iter().take(self.dim).any(|&ai| ai == self.n / 2)
    }

    /// 2/3-rule mask: every `|ξ_i| < n/3`.
    #[inline]
    pub fn is_dealiased(&self, idx: usize) -> bool {
        let k = self.wavevector(idx);
        let n = self.n as i64;
        k.iter().take(self.dim).all(|&kx| 3 * kx.abs() < n)
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let a = self.axis_indices(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for ax in 0..self.dim {
            x[ax] = a[ax] as f64 * h;
        }
        x
    }

    pub fn fft(&self) -> FftNd {
        FftNd::new(self.dim, self.n)
    }
}

/// Real scalar field stored by Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalarField {
    pub grid: TorusGrid,
    pub coeffs: Vec<Complex64>,
}

impl SpectralScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralScalarField {
            grid,
            coeffs: vec![ZERO; grid.len()],
        }
    }

    pub fn from_physical(grid: TorusGrid, values: &[f64]) -> Self {
        SpectralScalarField {
            grid,
            coeffs: forward_real(&grid, values),
        }
    }

    /// Samples `f` on the grid and transforms.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::from_physical(grid, &values)
    }

    pub fn to_physical(&self) -> Vec<f64> {
        inverse_real(&self.grid, &self.coeffs)
    }

    /// `|ξ|^α` applied to the scalar; the mean is dropped for `α > 0` and
    /// must vanish for `α < 0`.
    pub fn fractional_derivative(&self, alpha: f64) -> Result<Self> {
        let zero_mode = self.coeffs[0];
        if alpha < 0.0 && zero_mode.norm() != 0.0 {
            return Err(Error::NotMeanZero);
        }
        let mut out = self.clone();
        if alpha == 0.0 {
            return Ok(out);
        }
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            *c *= abs_power_symbol(&self.grid, idx, alpha);
        }
        Ok(out)
    }

    /// `L^p` norm on the physical grid.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_p(p)?;
        let values = self.to_physical();
        Ok(lp_of_magnitudes(values.iter().map(|v| v.abs()), p, self.grid.cell_volume()))
    }
}

/// `d`-component real vector field stored by Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    pub grid: TorusGrid,
    /// One coefficient array per component.
    pub coeffs: Vec<Vec<Complex64>>,
    pub mean_zero: bool,
    pub div_free: bool,
}

impl SpectralVectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralVectorField {
            grid,
            coeffs: vec![vec![ZERO; grid.len()]; grid.dim()],
            mean_zero: true,
            div_free: true,
        }
    }

    /// Transforms physical components; flags are computed from the data.
    pub fn from_physical(grid: TorusGrid, components: &[Vec<f64>]) -> Self {
        assert_eq!(components.len(), grid.dim());
        let coeffs = components.iter().map(|c| forward_real(&grid, c)).collect();
        let mut u = SpectralVectorField {
            grid,
            coeffs,
            mean_zero: false,
            div_free: false,
        };
        u.refresh_flags();
        u
    }

    /// Samples a vector function on the grid; only the first `d` outputs are used.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut comps = vec![Vec::with_capacity(grid.len()); grid.dim()];
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            for (c, comp) in comps.iter_mut().enumerate() {
                comp.push(v[c]);
            }
        }
        Self::from_physical(grid, &comps)
    }

    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        self.coeffs
            .iter()
            .map(|c| inverse_real(&self.grid, c))
            .collect()
    }

    pub fn components(&self) -> usize {
        self.coeffs.len()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `max_ξ |Σ_i ξ_i û_i(ξ)|`.
    pub fn max_divergence(&self) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .map(|idx| {
                let k = g.wavevector(idx);
                let mut s = ZERO;
                for (c, comp) in self.coeffs.iter().enumerate() {
                    s += comp[idx] * k[c] as f64;
                }
                s.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Divergence relative to the largest coefficient (0 for the zero field).
    pub fn relative_divergence(&self) -> f64 {
        let m = self.max_abs_coeff();
        if m == 0.0 {
            0.0
        } else {
            self.max_divergence() / m
        }
    }

    /// `max_ξ |û(−ξ) − conj û(ξ)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for comp in &self.coeffs {
            for idx in 0..g.len() {
                let j = g.conjugate_index(idx);
                worst = worst.max((comp[j] - comp[idx].conj()).norm());
            }
        }
        worst
    }

    pub fn mean_is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c[0] == ZERO)
    }

    /// Recomputes `mean_zero` / `div_free` from the coefficients.
    pub fn refresh_flags(&mut self) {
        self.mean_zero = self.mean_is_zero();
        self.div_free = self.relative_divergence() <= 1e-12;
    }

    /// `L²` inner product `∫ u·v dx = (2π)^d Σ_ξ Re(conj(û)·v̂)`.
    pub fn inner(&self, other: &Self) -> f64 {
        let vol = self.grid.period().powi(self.grid.dim() as i32);
        let mut s = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            for (x, y) in a.iter().zip(b) {
                s += x.re * y.re + x.im * y.im;
            }
        }
        vol * s
    }

    /// `L²` norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Energy `½‖u‖²`.
    pub fn energy(&self) -> f64 {
        0.5 * self.inner(self)
    }

    pub fn scale(&mut self, s: f64) {
        for comp in &mut self.coeffs {
            for c in comp.iter_mut() {
                *c *= s;
            }
        }
    }

    /// `self ← self + s·other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * s;
            }
        }
    }

    /// Largest coefficient-wise difference, over all components.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// `‖self − other‖₂ / ‖other‖₂` (absolute when `other` vanishes).
    pub fn relative_l2_error(&self, reference: &Self) -> f64 {
        let mut diff = self.clone();
        diff.axpy(-1.0, reference);
        let r = reference.l2_norm();
        if r == 0.0 {
            diff.l2_norm()
        } else {
            diff.l2_norm() / r
        }
    }

    /// Applies a real multiplier to every component.
    pub fn apply_multiplier(&self, m: &MultiplierField) -> Result<Self> {
        if m.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for comp in &mut out.coeffs {
            for (c, v) in comp.iter_mut().zip(&m.values) {
                *c *= *v;
            }
        }
        Ok(out)
    }
}

/// Real, even Fourier multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierField {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

impl MultiplierField {
    pub fn from_fn(grid: TorusGrid, f: impl Fn(usize) -> f64) -> Self {
        MultiplierField {
            grid,
            values: (0..grid.len()).map(f).collect(),
        }
    }

    /// `|ξ|^γ`.
    pub fn fractional_laplacian(grid: TorusGrid, gamma: f64) -> Self {
        Self::from_fn(grid, |idx| abs_power_symbol(&grid, idx, gamma))
    }

    /// `e^{−t|ξ|^γ}`.
    pub fn semigroup(grid: TorusGrid, gamma: f64, t: f64) -> Self {
        Self::from_fn(grid, |idx| {
            let k2 = grid.norm2(idx) as f64;
            (-t * k2.powf(0.5 * gamma)).exp()
        })
    }

    /// Riesz factor `ξ_j ξ_m / |ξ|²`, defined as 0 at `ξ = 0` and on Nyquist
    /// modes (0-based axes).
    pub fn riesz(grid: TorusGrid, j: usize, m: usize) -> Self {
        Self::from_fn(grid, |idx| {
            let k = grid.wavevector(idx);
            let k2 = grid.norm2(idx);
            if k2 == 0 || grid.has_nyquist(idx) {
                0.0
            } else {
                (k[j] * k[m]) as f64 / k2 as f64
            }
        })
    }

    /// Largest `|m(ξ) − m(−ξ)|`.
    pub fn evenness_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|idx| (self.values[idx] - self.values[self.grid.conjugate_index(idx)]).abs())
            .fold(0.0, f64::max)
    }
}

/// `|ξ|^α` with `0^α = 0` for `α > 0`, `1` for `α = 0`, and 0 for `α < 0`
/// (the ξ = 0 mode of a mean-zero field). Nyquist modes are zeroed for `α ≠ 0`.
#[inline]
fn abs_power_symbol(grid: &TorusGrid, idx: usize, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let k2 = grid.norm2(idx);
    if k2 == 0 || grid.has_nyquist(idx) {
        return 0.0;
    }
    (k2 as f64).powf(0.5 * alpha)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(invalid("gamma", gamma, "must lie in (0, 2]"));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p", p, "L^p exponent must be ≥ 1"));
    }
    Ok(())
}

/// Multiplies every coefficient by `e^{−t|ξ|^γ}`.
pub fn apply_semigroup(u: &SpectralVectorField, gamma: f64, t: f64) -> Result<SpectralVectorField> {
    check_gamma(gamma)?;
    if !(t >= 0.0) {
        return Err(invalid("t", t, "semigroup time must be ≥ 0"));
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    u.apply_multiplier(&MultiplierField::semigroup(u.grid, gamma, t))
}

/// Leray projection `(I − ξξᵀ/|ξ|²)` mode by mode; the mean is untouched.
pub fn leray_project(u: &SpectralVectorField) -> SpectralVectorField {
    let mut out = u.clone();
    project_in_place(&mut out);
    out
}

pub(crate) fn project_in_place(u: &mut SpectralVectorField) {
    let g = u.grid;
    let d = g.dim();
    for idx in 1..g.len() {
        let k = g.wavevector(idx);
        let k2 = g.norm2(idx) as f64;
        let mut dot = ZERO;
        for c in 0..d {
            dot += u.coeffs[c][idx] * k[c] as f64;
        }
        if dot == ZERO {
            continue;
        }
        let s = dot / k2;
        for c in 0..d {
            u.coeffs[c][idx] -= s * k[c] as f64;
        }
    }
    u.div_free = true;
}

/// `Λ^α u = |ξ|^α û`; `α ∈ [−1, 2]`. Negative orders need a mean-zero field.
pub fn fractional_derivative(u: &SpectralVectorField, alpha: f64) -> Result<SpectralVectorField> {
    if !(-1.0..=2.0).contains(&alpha) {
        return Err(invalid("alpha", alpha, "fractional order must lie in [−1, 2]"));
    }
    if alpha < 0.0 && !(u.mean_zero || u.mean_is_zero()) {
        return Err(Error::NotMeanZero);
    }
    if alpha == 0.0 {
        return Ok(u.clone());
    }
    let m = MultiplierField::from_fn(u.grid, |idx| abs_power_symbol(&u.grid, idx, alpha));
    let mut out = u.apply_multiplier(&m)?;
    out.mean_zero = true;
    Ok(out)
}

/// `∂^m u`, symbol `Π_i (iξ_i)^{m_i}`; `|m| ≤ 40`, Nyquist modes zeroed.
pub fn partial_derivative(u: &SpectralVectorField, multi_index: &[usize]) -> Result<SpectralVectorField> {
    let g = u.grid;
    if multi_index.len() != g.dim() {
        return Err(invalid(
            "multi_index",
            multi_index.len() as f64,
            "length must equal the dimension",
        ));
    }
    let order: usize = multi_index.iter().sum();
    if order > 40 {
        return Err(invalid("multi_index", order as f64, "total order must be ≤ 40"));
    }
    if order == 0 {
        return Ok(u.clone());
    }
    let symbol = derivative_symbol(&g, multi_index);
    let mut out = u.clone();
    for comp in &mut out.coeffs {
        for (c, s) in comp.iter_mut().zip(&symbol) {
            *c *= *s;
        }
    }
    out.mean_zero = true;
    Ok(out)
}

/// `Π_i (iξ_i)^{m_i}` on every mode, zero on Nyquist modes of differentiated axes.
pub(crate) fn derivative_symbol(g: &TorusGrid, multi_index: &[usize]) -> Vec<Complex64> {
    let order: usize = multi_index.iter().sum();
    let phase = match order % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let half = (g.n() / 2) as i64;
    (0..g.len())
        .map(|idx| {
            let k = g.wavevector(idx);
            let mut mag = 1.0;
            for (ax, &m) in multi_index.iter().enumerate() {
                if m == 0 {
                    continue;
                }
                if k[ax] == -half {
                    return ZERO;
                }
                mag *= (k[ax] as f64).powi(m as i32);
            }
            phase * mag
        })
        .collect()
}

/// Dealiasing rule for quadratic products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dealias {
    /// Keep `|ξ_i| < n/3` before and after the product.
    #[default]
    TwoThirds,
}

/// Leray-projected `∇·(u⊗u)` with 2/3-rule truncation.
pub fn nonlinear_term(u: &SpectralVectorField, dealias: Dealias) -> Result<SpectralVectorField> {
    let rel = u.relative_divergence();
    if rel > DIV_FREE_REJECT {
        return Err(Error::NotDivergenceFree {
            divergence: u.max_divergence(),
            relative: rel,
        });
    }
    let mut ws = Workspace::new(u.grid);
    Ok(ws.nonlinear(u, dealias))
}

/// Reusable FFT plan plus the 2/3 mask, for hot loops.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub grid: TorusGrid,
    fft: FftNd,
    mask: Vec<bool>,
}

impl Workspace {
    pub fn new(grid: TorusGrid) -> Self {
        Workspace {
            grid,
            fft: grid.fft(),
            mask: (0..grid.len()).map(|i| grid.is_dealiased(i)).collect(),
        }
    }

    /// Physical values of two real spectral fields with one complex transform.
    fn inverse_pair(&self, a: &[Complex64], b: Option<&[Complex64]>, mask: bool) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = match b {
            Some(b) => a
                .iter()
                .zip(b)
                .map(|(x, y)| x + Complex64::new(-y.im, y.re))
                .collect(),
            None => a.to_vec(),
        };
        if mask {
            for (v, keep) in buf.iter_mut().zip(&self.mask) {
                if !keep {
                    *v = ZERO;
                }
            }
        }
        self.fft.inverse(&mut buf);
        buf
    }

    /// Coefficients of two real physical fields packed as `re + i·im`.
    fn forward_pair(&self, mut buf: Vec<Complex64>) -> (Vec<Complex64>, Vec<Complex64>) {
        let g = &self.grid;
        self.fft.forward(&mut buf);
        let scale = 1.0 / g.len() as f64;
        let mut a = vec![ZERO; g.len()];
        let mut b = vec![ZERO; g.len()];
        for idx in 0..g.len() {
            if !self.mask[idx] {
                continue;
            }
            let z = buf[idx];
            let zc = buf[g.conjugate_index(idx)].conj();
            a[idx] = (z + zc) * (0.5 * scale);
            let diff = (z - zc) * (0.5 * scale);
            b[idx] = Complex64::new(diff.im, -diff.re);
        }
        (a, b)
    }

    /// Dealiased coefficients of the products `u_i u_j`, `i ≤ j`, listed with
    /// their index pairs.
    pub(crate) fn symmetric_products(&self, u: &SpectralVectorField) -> (Vec<(usize, usize)>, Vec<Vec<Complex64>>) {
        let g = self.grid;
        let d = g.dim();
        // physical components, two per transform
        let mut phys: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut c = 0;
        while c < d {
            let second = if c + 1 < d { Some(u.coeffs[c + 1].as_slice()) } else { None };
            let z = self.inverse_pair(&u.coeffs[c], second, true);
            phys.push(z.iter().map(|v| v.re).collect());
            if c + 1 < d {
                phys.push(z.iter().map(|v| v.im).collect());
            }
            c += 2;
        }
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
        let mut prod_hat: Vec<Vec<Complex64>> = vec![Vec::new(); pairs.len()];
        let mut p = 0;
        while p < pairs.len() {
            let (i0, j0) = pairs[p];
            let second = pairs.get(p + 1).copied();
            let buf: Vec<Complex64> = (0..g.len())
                .map(|x| {
                    let re = phys[i0][x] * phys[j0][x];
                    let im = second.map_or(0.0, |(i1, j1)| phys[i1][x] * phys[j1][x]);
                    Complex64::new(re, im)
                })
                .collect();
            let (a, b) = self.forward_pair(buf);
            prod_hat[p] = a;
            if second.is_some() {
                prod_hat[p + 1] = b;
            }
            p += 2;
        }
        (pairs, prod_hat)
    }

    /// `P ∇·(u⊗u)` with the 2/3 rule; assumes `u` is solenoidal.
    pub fn nonlinear(&mut self, u: &SpectralVectorField, _dealias: Dealias) -> SpectralVectorField {
        let g = self.grid;
        let d = g.dim();
        let (pairs, prod_hat) = self.symmetric_products(u);
        let pair_index = |i: usize, j: usize| {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            pairs.iter().position(|&q| q == (i, j)).unwrap()
        };
        let mut out = SpectralVectorField::zeros(g);
        for i in 0..d {
            let slots: Vec<usize> = (0..d).map(|j| pair_index(i, j)).collect();
            for idx in 0..g.len() {
                if !self.mask[idx] {
                    continue;
                }
                let k = g.wavevector(idx);
                let mut s = ZERO;
                for (j, &slot) in slots.iter().enumerate() {
                    if k[j] != 0 {
                        s += prod_hat[slot][idx] * k[j] as f64;
                    }
                }
                out.coeffs[i][idx] = Complex64::new(-s.im, s.re);
            }
        }
        project_in_place(&mut out);
        out.mean_zero = true;
        out
    }

    /// Physical-space samples of every component.
    pub fn to_physical(&self, u: &SpectralVectorField) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(u.components());
        let mut c = 0;
        while c < u.components() {
            let second = if c + 1 < u.components() { Some(u.coeffs[c + 1].as_slice()) } else { None };
            let z = self.inverse_pair(&u.coeffs[c], second, false);
            out.push(z.iter().map(|v| v.re).collect());
            if second.is_some() {
                out.push(z.iter().map(|v| v.im).collect());
            }
            c += 2;
        }
        out
    }

    pub fn lp_norm(&self, u: &SpectralVectorField, p: f64) -> Result<f64> {
        check_p(p)?;
        let phys = self.to_physical(u);
        let mags = (0..self.grid.len()).map(|x| {
            let s: f64 = phys.iter().map(|c| c[x] * c[x]).sum();
            s.sqrt()
        });
        Ok(lp_of_magnitudes(mags, p, self.grid.cell_volume()))
    }
}

/// `L^p` norm of the pointwise Euclidean magnitude; `p = ∞` is the grid maximum.
pub fn lp_norm(u: &SpectralVectorField, p: f64) -> Result<f64> {
    Workspace::new(u.grid).lp_norm(u, p)
}

pub(crate) fn lp_of_magnitudes(mags: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return mags.fold(0.0, f64::max);
    }
    // scale by the maximum so large p does not overflow
    let mags: Vec<f64> = mags.collect();
    let m = mags.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = mags.iter().map(|v| (v / m).powf(p)).sum();
    m * (s * cell).powf(1.0 / p)
}

fn forward_real(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    assert_eq!(values.len(), grid.len());
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft().forward(&mut buf);
    let s = 1.0 / grid.len() as f64;
    for v in &mut buf {
        *v *= s;
    }
    buf
}

fn inverse_real(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    grid.fft().inverse(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_mode(grid: TorusGrid, k: [i64; 3], c: [Complex64; 3]) -> SpectralVectorField {
        let mut u = SpectralVectorField::zeros(grid);
        let idx = grid.index_of(k);
        let jdx = grid.index_of([-k[0], -k[1], -k[2]]);
        for comp in 0..grid.dim() {
            u.coeffs[comp][idx] = c[comp];
            u.coeffs[comp][jdx] = c[comp].conj();
        }
        u.refresh_flags();
        u
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn grid_wavenumbers() {
        let g = make_grid(2, 64).unwrap();
        let w = g.wavenumbers();
        assert_eq!(w.first(), Some(&-32));
        assert_eq!(w.last(), Some(&31));
        assert_eq!(w.len(), 64);
        let g1 = make_grid(1, 8).unwrap();
        assert_eq!(g1.wavenumbers(), vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        assert!(make_grid(2, 7).is_err());
        assert!(make_grid(4, 8).is_err());
        assert!(make_grid(2, 4).is_err());
        assert!(make_grid(2, 8192).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = make_grid(3, 8).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.index_of(g.wavevector(idx)), idx);
            let k = g.wavevector(idx);
            let j = g.conjugate_index(idx);
            let kc = g.wavevector(j);
            for ax in 0..3 {
                assert_eq!((k[ax] + kc[ax]).rem_euclid(8), 0);
            }
        }
    }

    #[test]
    fn semigroup_examples() {
        let g = make_grid(2, 16).unwrap();
        let u = single_mode(g, [1, 0, 0], [re(0.0), re(1.0), re(0.0)]);
        assert_eq!(apply_semigroup(&u, 1.5, 0.0).unwrap(), u);
        let v = apply_semigroup(&u, 2.0, 1.0).unwrap();
        let idx = g.index_of([1, 0, 0]);
        assert!((v.coeffs[1][idx].re - (-1.0f64).exp()).abs() < 1e-15);

        let w = single_mode(g, [2, 0, 0], [re(0.0), re(1.0), re(0.0)]);
        let v = apply_semigroup(&w, 1.5, 2.0).unwrap();
        let idx = g.index_of([2, 0, 0]);
        // 2·2^{3/2} = 5.656854...
        assert!((v.coeffs[1][idx].re - (-5.656854249492381f64).exp()).abs() < 1e-17);
        assert!(v.div_free && v.mean_zero);
    }

    #[test]
    fn leray_examples() {
        let g = make_grid(2, 8).unwrap();
        let p = leray_project(&single_mode(g, [1, 0, 0], [re(1.0), re(0.0), re(0.0)]));
        assert!(p.max_abs_coeff() < 1e-16);
        let u = single_mode(g, [1, 0, 0], [re(0.0), re(1.0), re(0.0)]);
        assert_eq!(leray_project(&u).coeffs, u.coeffs);
        let p = leray_project(&single_mode(g, [1, 1, 0], [re(1.0), re(0.0), re(0.0)]));
        let idx = g.index_of([1, 1, 0]);
        assert!((p.coeffs[0][idx].re - 0.5).abs() < 1e-16);
        assert!((p.coeffs[1][idx].re + 0.5).abs() < 1e-16);
        assert!(p.div_free);
    }

    #[test]
    fn fractional_derivative_examples() {
        let g = make_grid(2, 16).unwrap();
        let u = single_mode(g, [3, 4, 0], [re(4.0), re(-3.0), re(0.0)]);
        assert_eq!(fractional_derivative(&u, 0.0).unwrap(), u);
        let v = fractional_derivative(&u, 1.0).unwrap();
        let idx = g.index_of([3, 4, 0]);
        assert!((v.coeffs[0][idx].re - 20.0).abs() < 1e-13);

        let mut w = u.clone();
        w.coeffs[0][0] = re(1.0);
        w.mean_zero = false;
        assert_eq!(fractional_derivative(&w, -1.0), Err(Error::NotMeanZero));
        let lifted = fractional_derivative(&w, 0.5).unwrap();
        assert_eq!(lifted.coeffs[0][0], ZERO);
        assert!(fractional_derivative(&u, 2.5).is_err());
    }

    #[test]
    fn partial_derivative_examples() {
        let g = make_grid(1, 16).unwrap();
        let u = SpectralVectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        assert_eq!(partial_derivative(&u, &[0]).unwrap(), u);
        let du = partial_derivative(&u, &[1]).unwrap().to_physical();
        for idx in 0..g.len() {
            assert!((du[0][idx] - g.point(idx)[0].cos()).abs() < 1e-13);
        }
        let g2 = make_grid(2, 16).unwrap();
        let v = SpectralVectorField::from_fn(g2, |x| [x[1].sin(), 0.0, 0.0]);
        let d2 = partial_derivative(&v, &[0, 2]).unwrap().to_physical();
        for idx in 0..g2.len() {
            assert!((d2[0][idx] + g2.point(idx)[1].sin()).abs() < 1e-13);
        }
        assert!(partial_derivative(&v, &[21, 20]).is_err());
    }

    #[test]
    fn lp_norm_examples() {
        let g = make_grid(2, 32).unwrap();
        let u = SpectralVectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        assert!((lp_norm(&u, f64::INFINITY).unwrap() - 1.0).abs() < 1e-14);
        // ∫∫ sin² y = 2π²
        let l2 = lp_norm(&u, 2.0).unwrap();
        assert!((l2 - (2.0 * PI * PI).sqrt()).abs() < 1e-12);
        assert!((l2 - 4.442882938158366).abs() < 1e-12);
        let z = SpectralVectorField::zeros(g);
        for p in [1.0, 2.0, 7.5, f64::INFINITY] {
            assert_eq!(lp_norm(&z, p).unwrap(), 0.0);
        }
        assert!(lp_norm(&u, 0.5).is_err());
    }

    #[test]
    fn nonlinear_vanishes_on_shear_and_taylor_green() {
        let g = make_grid(2, 32).unwrap();
        let shear = SpectralVectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
        let n = nonlinear_term(&shear, Dealias::TwoThirds).unwrap();
        assert!(n.max_abs_coeff() < 1e-15);
        let tg = SpectralVectorField::from_fn(g, |x| {
            [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]
        });
        let n = nonlinear_term(&tg, Dealias::TwoThirds).unwrap();
        assert!(n.max_abs_coeff() < 1e-15);
        assert!(n.mean_zero && n.div_free);
    }

    #[test]
    fn nonlinear_rejects_compressible_input() {
        let g = make_grid(2, 16).unwrap();
        let u = SpectralVectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        assert!(matches!(
            nonlinear_term(&u, Dealias::TwoThirds),
            Err(Error::NotDivergenceFree { .. })
        ));
    }

    #[test]
    fn nonlinear_matches_direct_advection() {
        // u = (sin y, sin x): (u·∇)u = (sin x cos y, sin y cos x), a pure gradient
        // of sin x sin y, so the projected nonlinearity vanishes; a rotated
        // field u = (cos y + sin 2y, sin x) gives a non-gradient part.
        let g = make_grid(2, 32).unwrap();
        let u = SpectralVectorField::from_fn(g, |x| [x[1].cos() + (2.0 * x[1]).sin(), x[0].sin(), 0.0]);
        let n = nonlinear_term(&u, Dealias::TwoThirds).unwrap();
        // direct: (u·∇)u = (sin x·(−sin y + 2cos 2y), (cos y + sin 2y) cos x)
        let direct = SpectralVectorField::from_fn(g, |x| {
            [
                x[0].sin() * (-x[1].sin() + 2.0 * (2.0 * x[1]).cos()),
                (x[1].cos() + (2.0 * x[1]).sin()) * x[0].cos(),
                0.0,
            ]
        });
        let expect = leray_project(&direct);
        assert!(n.max_abs_diff(&expect) < 1e-14);
        assert!(n.max_abs_coeff() > 0.1);
    }

    #[test]
    fn riesz_multiplier_is_even_and_zero_at_origin() {
        let g = make_grid(2, 16).unwrap();
        let m = MultiplierField::riesz(g, 0, 1);
        assert_eq!(m.values[0], 0.0);
        assert!(m.evenness_defect() < 1e-16);
        let s = MultiplierField::semigroup(g, 1.3, 0.7);
        assert_eq!(s.evenness_defect(), 0.0);
        let l = MultiplierField::fractional_laplacian(g, 1.3);
        assert_eq!(l.evenness_defect(), 0.0);
    }
}
