//! Uniformly sampled functions on `[lo, hi]ᵈ`, d ∈ {1, 2}.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::functions::{Jet, SmoothFunction};
use crate::linalg::MAX_DIM;

pub const MIN_POINTS: usize = 8;

/// Behaviour outside the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extension {
    /// `f(x) := f(clamp(x))`.
    #[default]
    Constant,
    /// Sampling outside the box is an error.
    Strict,
}

/// Values on a uniform `n^d` grid, row-major with the first axis outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    lo: f64,
    hi: f64,
    n: usize,
    values: Vec<f64>,
    extension: Extension,
}

impl GridFunction {
    pub fn new(dim: usize, lo: f64, hi: f64, n: usize, values: Vec<f64>, extension: Extension) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!("dimension {dim} unsupported")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidGrid(format!("box [{lo}, {hi}] is empty")));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("n = {n} < {MIN_POINTS}")));
        }
        let expected = n.pow(dim as u32);
        if values.len() != expected {
            return Err(Error::InvalidGrid(format!("{} values, expected {expected}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at index {i}")));
        }
        Ok(Self { dim, lo, hi, n, values, extension })
    }

    /// Sample `f` at the grid nodes.
    pub fn from_fn(
        dim: usize,
        lo: f64,
        hi: f64,
        n: usize,
        extension: Extension,
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Result<Self> {
        let h = (hi - lo) / (n.max(2) - 1) as f64;
        let values = match dim {
            1 => (0..n).map(|i| f(&[lo + i as f64 * h])).collect(),
            2 => (0..n * n)
                .map(|k| f(&[lo + (k / n) as f64 * h, lo + (k % n) as f64 * h]))
                .collect(),
            _ => Vec::new(),
        };
        Self::new(dim, lo, hi, n, values, extension)
    }

    pub fn sample(f: &dyn SmoothFunction, lo: f64, hi: f64, n: usize, extension: Extension) -> Result<Self> {
        Self::from_fn(f.dim(), lo, hi, n, extension, |x| f.value(x))
    }

    /// Same geometry, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, self.lo, self.hi, self.n, values, self.extension)
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.extension = extension;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Coordinate of node `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.h()
        }
    }

    /// Node coordinates of flat index `k`.
    pub fn point(&self, k: usize) -> [f64; MAX_DIM] {
        match self.dim {
            1 => [self.coordinate(k), 0.0],
            _ => [self.coordinate(k / self.n), self.coordinate(k % self.n)],
        }
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.lo == other.lo && self.hi == other.hi
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self − other|` over nodes.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        debug_assert!(self.same_geometry(other));
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn same_geometry_or_err(&self, other: &Self) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::InvalidGrid("grid geometries differ".into()))
        }
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let h = self.h();
        let slack = 1e-9 * h;
        if self.extension == Extension::Strict && (x < self.lo - slack || x > self.hi + slack) {
            return Err(Error::SampledOutOfDomain(x));
        }
        let s = ((x - self.lo) / h).clamp(0.0, (self.n - 1) as f64);
        let i = (s.floor() as usize).min(self.n - 2);
        Ok((i, s - i as f64))
    }

    /// Linear (bilinear in 2-D) interpolation with the extension policy.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let (i, a) = self.locate(x[0])?;
        if self.dim == 1 {
            return Ok((1.0 - a) * self.values[i] + a * self.values[i + 1]);
        }
        let (j, b) = self.locate(x[1])?;
        let n = self.n;
        let v = |r: usize, c: usize| self.values[r * n + c];
        Ok((1.0 - a) * ((1.0 - b) * v(i, j) + b * v(i, j + 1)) + a * ((1.0 - b) * v(i + 1, j) + b * v(i + 1, j + 1)))
    }

    /// Value at integer node offsets from `idx`, with the extension policy.
    fn node_value(&self, idx: [isize; MAX_DIM]) -> Option<f64> {
        let n = self.n as isize;
        let mut k = 0usize;
        for &i in idx.iter().take(self.dim) {
            if (i < 0 || i >= n) && self.extension == Extension::Strict {
                return None;
            }
            k = k * self.n + i.clamp(0, n - 1) as usize;
        }
        Some(self.values[k])
    }

    fn node_index(&self, k: usize) -> [isize; MAX_DIM] {
        match self.dim {
            1 => [k as isize, 0],
            _ => [(k / self.n) as isize, (k % self.n) as isize],
        }
    }

    /// Second-order finite-difference jet at node `k`. Central differences in
    /// the interior; at the boundary the constant extension supplies ghost
    /// values, while `Strict` switches to one-sided second-order stencils.
    pub fn jet_at_node(&self, k: usize) -> Jet {
        let h = self.h();
        let base = self.node_index(k);
        let at = |off: [isize; MAX_DIM]| -> Option<f64> {
            let mut idx = base;
            for a in 0..self.dim {
                idx[a] += off[a];
            }
            self.node_value(idx)
        };
        let f0 = self.values[k];
        let mut jet = Jet::constant(f0);
        let unit = |a: usize, s: isize| {
            let mut o = [0isize; MAX_DIM];
            o[a] = s;
            o
        };
        for a in 0..self.dim {
            let (fp, fm) = (at(unit(a, 1)), at(unit(a, -1)));
            let (d1, d2) = match (fp, fm) {
                (Some(p), Some(m)) => ((p - m) / (2.0 * h), (p - 2.0 * f0 + m) / (h * h)),
                (Some(p), None) => {
                    let p2 = at(unit(a, 2)).unwrap_or(p);
                    let p3 = at(unit(a, 3)).unwrap_or(p2);
                    ((-3.0 * f0 + 4.0 * p - p2) / (2.0 * h), (2.0 * f0 - 5.0 * p + 4.0 * p2 - p3) / (h * h))
                }
                (None, Some(m)) => {
                    let m2 = at(unit(a, -2)).unwrap_or(m);
                    let m3 = at(unit(a, -3)).unwrap_or(m2);
                    ((3.0 * f0 - 4.0 * m + m2) / (2.0 * h), (2.0 * f0 - 5.0 * m + 4.0 * m2 - m3) / (h * h))
                }
                (None, None) => (0.0, 0.0),
            };
            jet.gradient[a] = d1;
            jet.hessian[a * MAX_DIM + a] = d2;
        }
        if self.dim == 2 {
            let mixed = match (at([1, 1]), at([1, -1]), at([-1, 1]), at([-1, -1])) {
                (Some(pp), Some(pm), Some(mp), Some(mm)) => (pp - pm - mp + mm) / (4.0 * h * h),
                _ => {
                    // Strict corner or edge: shift the stencil inward.
                    let si = if base[0] == 0 { 1 } else if base[0] as usize == self.n - 1 { -1 } else { 0 };
                    let sj = if base[1] == 0 { 1 } else if base[1] as usize == self.n - 1 { -1 } else { 0 };
                    let g = |di: isize, dj: isize| at([si + di, sj + dj]).unwrap_or(f0);
                    (g(1, 1) - g(1, -1) - g(-1, 1) + g(-1, -1)) / (4.0 * h * h)
                }
            };
            jet.hessian[1] = mixed;
            jet.hessian[2] = mixed;
        }
        jet
    }

    /// Jet at an arbitrary point: node jets interpolated linearly.
    pub fn jet_at(&self, x: &[f64]) -> Result<Jet> {
        let h = self.h();
        let mut nearest = [0usize; MAX_DIM];
        let mut on_node = true;
        for a in 0..self.dim {
            let s = (x[a] - self.lo) / h;
            let r = s.round();
            if (s - r).abs() > 1e-9 || r < 0.0 || r > (self.n - 1) as f64 {
                on_node = false;
            }
            nearest[a] = r.clamp(0.0, (self.n - 1) as f64) as usize;
        }
        if on_node {
            let k = if self.dim == 1 { nearest[0] } else { nearest[0] * self.n + nearest[1] };
            return Ok(self.jet_at_node(k));
        }
        let value = self.interpolate(x)?;
        let (i, a) = self.locate(x[0])?;
        let mut jet = if self.dim == 1 {
            self.jet_at_node(i).scale(1.0 - a).plus(&self.jet_at_node(i + 1).scale(a))
        } else {
            let (j, b) = self.locate(x[1])?;
            let n = self.n;
            self.jet_at_node(i * n + j)
                .scale((1.0 - a) * (1.0 - b))
                .plus(&self.jet_at_node(i * n + j + 1).scale((1.0 - a) * b))
                .plus(&self.jet_at_node((i + 1) * n + j).scale(a * (1.0 - b)))
                .plus(&self.jet_at_node((i + 1) * n + j + 1).scale(a * b))
        };
        jet.value = value;
        Ok(jet)
    }

    /// Apply `op` to every value.
    pub fn map(&self, mut op: impl FnMut(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| op(v)).collect())
    }

    /// Pointwise combination of two grids on the same geometry.
    pub fn zip_with(&self, other: &Self, mut op: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        self.same_geometry_or_err(other)?;
        self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect())
    }

    /// Index of the node nearest to `x` (clamped into the box).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let h = self.h();
        let idx = |v: f64| (((v - self.lo) / h).round().clamp(0.0, (self.n - 1) as f64)) as usize;
        match self.dim {
            1 => idx(x[0]),
            _ => idx(x[0]) * self.n + idx(x[1]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{Gaussian, Sine};
    use alloc::vec;

    #[test]
    fn validation() {
        assert!(GridFunction::new(1, 0.0, 1.0, 4, vec![0.0; 4], Extension::Constant).is_err());
        assert!(GridFunction::new(1, 1.0, 0.0, 8, vec![0.0; 8], Extension::Constant).is_err());
        assert!(GridFunction::new(1, 0.0, 1.0, 8, vec![f64::NAN; 8], Extension::Constant).is_err());
        assert!(GridFunction::new(2, 0.0, 1.0, 8, vec![0.0; 8], Extension::Constant).is_err());
        assert!(GridFunction::new(2, 0.0, 1.0, 8, vec![0.0; 64], Extension::Constant).is_ok());
    }

    #[test]
    fn interpolation_and_extension() {
        let g = GridFunction::from_fn(1, 0.0, 7.0, 8, Extension::Constant, |x| 2.0 * x[0]).unwrap();
        assert_eq!(g.interpolate(&[2.5]).unwrap(), 5.0);
        assert_eq!(g.interpolate(&[-3.0]).unwrap(), 0.0);
        assert_eq!(g.interpolate(&[30.0]).unwrap(), 14.0);
        let s = g.clone().with_extension(Extension::Strict);
        assert_eq!(s.interpolate(&[8.0]), Err(Error::SampledOutOfDomain(8.0)));
        let g2 = GridFunction::from_fn(2, 0.0, 1.0, 11, Extension::Constant, |x| x[0] + 3.0 * x[1]).unwrap();
        assert!((g2.interpolate(&[0.33, 0.71]).unwrap() - (0.33 + 3.0 * 0.71)).abs() < 1e-12);
    }

    #[test]
    fn finite_differences_are_second_order() {
        let f = Sine { frequency: 1.0, phase: 0.4, amplitude: 1.0 };
        let err = |n: usize| {
            let g = GridFunction::sample(&f, -3.0, 3.0, n, Extension::Strict).unwrap();
            (0..n)
                .map(|k| {
                    let (a, b) = (g.jet_at_node(k), f.jet(&g.point(k)));
                    (a.gradient[0] - b.gradient[0]).abs().max((a.hessian[0] - b.hessian[0]).abs())
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(101), err(201));
        assert!(e1 / e2 > 3.5, "order ratio {}", e1 / e2);
    }

    #[test]
    fn two_dimensional_jet() {
        let f = Gaussian { dim: 2, center: [0.1, -0.1], scale: 0.9, amplitude: 1.0 };
        let g = GridFunction::sample(&f, -3.0, 3.0, 241, Extension::Constant).unwrap();
        let x = [0.5, 0.25];
        let (a, b) = (g.jet_at(&x).unwrap(), f.jet(&x));
        for i in 0..4 {
            assert!((a.hessian[i] - b.hessian[i]).abs() < 2e-3);
        }
        assert!((a.gradient[1] - b.gradient[1]).abs() < 1e-3);
    }
}
