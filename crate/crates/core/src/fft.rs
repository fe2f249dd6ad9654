//! Unitary 2-D discrete Fourier transform on square power-of-two grids.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    plan: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let plan = FftPlanner::new().plan_fft_forward(n);
        Self {
            n,
            plan,
            scale: 1.0 / n as f64,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// In-place forward transform normalised by 1/n (unitary for n×n).
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        let n = self.n;
        assert_eq!(data.dim(), (n, n), "grid shape mismatch");
        let buf = data
            .as_slice_mut()
            .expect("standard layout array");
        let mut scratch = vec![Complex64::default(); self.plan.get_inplace_scratch_len()];
        self.plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        self.plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// Index of the frequency `(i − n/2)` in natural DFT ordering.
#[inline]
pub fn unshift(i: usize, n: usize) -> usize {
    (i + n / 2) % n
}

/// Move zero frequency to the array centre.
pub fn fftshift(data: &Array2<Complex64>) -> Array2<Complex64> {
    let (n, m) = data.dim();
    Array2::from_shape_fn((n, m), |(r, c)| data[[unshift(r, n), unshift(c, m)]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft_and_is_unitary() {
        let n = 8;
        let data = Array2::from_shape_fn((n, n), |(r, c)| {
            Complex64::new((r * 3 + c) as f64 * 0.1, (r as f64 - c as f64).sin())
        });
        let mut out = data.clone();
        Fft2::new(n).forward(&mut out);
        for kr in 0..n {
            for kc in 0..n {
                let mut acc = Complex64::default();
                for r in 0..n {
                    for c in 0..n {
                        let ph = -2.0 * std::f64::consts::PI * ((kr * r + kc * c) as f64) / n as f64;
                        acc += data[[r, c]] * Complex64::from_polar(1.0, ph);
                    }
                }
                acc /= n as f64;
                assert!((acc - out[[kr, kc]]).norm() < 1e-12);
            }
        }
        let e_in: f64 = data.iter().map(|z| z.norm_sqr()).sum();
        let e_out: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        assert!((e_in - e_out).abs() < 1e-10 * e_in);
    }

    #[test]
    fn shift_centres_dc() {
        let mut d = Array2::from_elem((4, 4), Complex64::default());
        d[[0, 0]] = Complex64::new(1.0, 0.0);
        assert_eq!(fftshift(&d)[[2, 2]].re, 1.0);
    }
}
