//! Radix-2 complex FFT and its tensor-product extension to 1-, 2- and 3-D
//! row-major arrays.
//!
//! Both directions are unnormalized: `forward` computes `Σ_j x_j e^{-2πi jk/n}`
//! and `inverse` computes `Σ_k X_k e^{+2πi jk/n}`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

/// Plan for power-of-two lengths.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    bits: u32,
    // e^{-2πik/n} for k < n/2
    twiddles: Vec<Complex64>,
}

impl Fft {
    /// Panics unless `n` is a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length {n} is not a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let theta = -2.0 * PI * (k as f64) / (n as f64);
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Fft {
            n,
            bits: n.trailing_zeros(),
            twiddles,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        if n <= 1 {
            return;
        }
        let shift = usize::BITS - self.bits;
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let step = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

/// Tensor-product FFT over a `dim`-dimensional cube with `n` points per axis,
/// stored row-major (last axis fastest).
#[derive(Debug, Clone)]
pub struct FftNd {
    dim: usize,
    plan: Fft,
}

impl FftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!((1..=3).contains(&dim));
        FftNd {
            dim,
            plan: Fft::new(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.plan.len()
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.plan.len();
        let total = n.pow(self.dim as u32);
        assert_eq!(data.len(), total, "array does not match FFT shape");
        // contiguous last axis
        for line in data.chunks_exact_mut(n) {
            self.plan.run(line, inverse);
        }
        if self.dim == 1 {
            return;
        }
        // strided axes: gather a block of lines at once to keep access local
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = total / (stride * n);
            for o in 0..outer {
                let base = o * stride * n;
                for inner in 0..stride {
                    for (i, s) in scratch.iter_mut().enumerate() {
                        *s = data[base + i * stride + inner];
                    }
                    self.plan.run(&mut scratch, inverse);
                    for (i, s) in scratch.iter().enumerate() {
                        data[base + i * stride + inner] = *s;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let th = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        v * Complex64::new(th.cos(), th.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[1usize, 2, 4, 8, 32, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
                .collect();
            let plan = Fft::new(n);
            let mut f = x.clone();
            plan.forward(&mut f);
            let reference = naive_dft(&x, -1.0);
            for (a, b) in f.iter().zip(&reference) {
                assert!((a - b).norm() < 1e-12 * n as f64);
            }
            let mut g = x.clone();
            plan.inverse(&mut g);
            let reference = naive_dft(&x, 1.0);
            for (a, b) in g.iter().zip(&reference) {
                assert!((a - b).norm() < 1e-12 * n as f64);
            }
        }
    }

    #[test]
    fn nd_round_trip() {
        for dim in 1..=3 {
            let n: usize = 8;
            let total = n.pow(dim as u32);
            let x: Vec<Complex64> = (0..total)
                .map(|j| Complex64::new((j as f64).sin(), (j as f64 * 0.5).cos()))
                .collect();
            let plan = FftNd::new(dim, n);
            let mut y = x.clone();
            plan.forward(&mut y);
            plan.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a / total as f64 - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn nd_single_mode() {
        // e^{i(x0*1 + x1*2)} on an 8x8 grid lands in bin (1, 2)
        let n = 8;
        let plan = FftNd::new(2, n);
        let mut data: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let th = 2.0 * PI * (i as f64 + 2.0 * j as f64) / n as f64;
                Complex64::new(th.cos(), th.sin())
            })
            .collect();
        plan.forward(&mut data);
        for (idx, v) in data.iter().enumerate() {
            let expect = if idx == n + 2 { 64.0 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-10 && v.im.abs() < 1e-10);
        }
    }
}
