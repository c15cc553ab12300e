//! Small dense helpers for dimensions one and two.

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;


pub const MAX_DIM: usize = 2;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Eigenvalues and orthonormal eigenvectors (columns, row-major) of a
/// symmetric matrix with d <= 2.
pub fn symmetric_eigen(m: &[f64], d: usize) -> ([f64; MAX_DIM], [f64; MAX_DIM * MAX_DIM]) {
    match d {
        1 => ([m[0], 0.0], [1.0, 0.0, 0.0, 0.0]),
        2 => {
            let (a, b, c) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
            if b == 0.0 {
                return ([a, c], [1.0, 0.0, 0.0, 1.0]);
            }
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let (l1, l2) = (mean + rad, mean - rad);
            // (b, l1 - a) spans the l1-eigenspace; pick the better conditioned form.
            let (vx, vy) = if (l1 - a).abs() > (l1 - c).abs() {
                (b, l1 - a)
            } else {
                (l1 - c, b)
            };
            let n = (vx * vx + vy * vy).sqrt();
            let (ux, uy) = (vx / n, vy / n);
            ([l1, l2], [ux, -uy, uy, ux])
        }
        _ => unreachable!("dimension {d} unsupported"),
    }
}

/// Rebuild `m` from its eigen-decomposition with negative eigenvalues set to zero.
pub fn clamp_psd(m: &mut [f64], d: usize) {
    let (vals, vecs) = symmetric_eigen(m, d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += vecs[i * MAX_DIM + k] * vals[k].max(0.0) * vecs[j * MAX_DIM + k];
            }
            m[i * d + j] = acc;
        }
    }
}

/// Symmetric PSD square root, d <= 2.
pub fn psd_sqrt(m: &[f64], d: usize) -> [f64; MAX_DIM * MAX_DIM] {
    let (vals, vecs) = symmetric_eigen(m, d);
    let mut out = [0.0; MAX_DIM * MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += vecs[i * MAX_DIM + k] * vals[k].max(0.0).sqrt() * vecs[j * MAX_DIM + k];
            }
            out[i * d + j] = acc;
        }
    }
    out
}

/// Pairwise summation in index order; the result does not depend on how the
/// terms were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
