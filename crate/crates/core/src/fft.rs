//! Iterative radix-2 FFT on power-of-two lengths, plus a row/column 2-D
//! transform. Forward uses the `e^{-2πi jk/N}` kernel; the inverse is scaled
//! by `1/N` so that `inverse(forward(x)) == x` up to rounding.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        // Direct evaluation per index keeps twiddle error at one ulp.
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * (k as f64) / (n as f64);
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Self { n, twiddles, bitrev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Square 2-D transform on row-major `n x n` data.
pub fn forward_2d(plan: &FftPlan, data: &mut [Complex64]) {
    apply_2d(plan, data, false);
}

pub fn inverse_2d(plan: &FftPlan, data: &mut [Complex64]) {
    apply_2d(plan, data, true);
}

fn apply_2d(plan: &FftPlan, data: &mut [Complex64], inverse: bool) {
    let n = plan.len();
    assert_eq!(data.len(), n * n);
    let run = |row: &mut [Complex64]| {
        if inverse {
            plan.inverse(row)
        } else {
            plan.forward(row)
        }
    };
    for row in data.chunks_mut(n) {
        run(row);
    }
    let mut column = alloc::vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            column[r] = data[r * n + c];
        }
        run(&mut column);
        for r in 0..n {
            data[r * n + c] = column[r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                    let a = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    acc + v * Complex64::new(a.cos(), a.sin())
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[1usize, 2, 4, 8, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos()))
                .collect();
            let mut y = x.clone();
            FftPlan::new(n).forward(&mut y);
            for (a, b) in y.iter().zip(naive_dft(&x)) {
                assert!((a - b).norm() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip_2d() {
        let n = 16;
        let plan = FftPlan::new(n);
        let x: Vec<Complex64> = (0..n * n).map(|j| Complex64::new(j as f64, -(j as f64) * 0.5)).collect();
        let mut y = x.clone();
        forward_2d(&plan, &mut y);
        inverse_2d(&plan, &mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-9);
        }
        let mut d = vec![Complex64::new(0.0, 0.0); n * n];
        d[0] = Complex64::new(1.0, 0.0);
        forward_2d(&plan, &mut d);
        assert!(d.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }
}
