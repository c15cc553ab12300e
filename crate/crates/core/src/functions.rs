//! Closed-form test functions with value, gradient and Hessian, plus stated
//! upper bounds on their sup-norms.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::linalg::{self, MAX_DIM};

/// Second-order jet at a point. The Hessian is row-major with stride
/// [`MAX_DIM`] regardless of dimension.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub gradient: [f64; MAX_DIM],
    pub hessian: [f64; MAX_DIM * MAX_DIM],
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Self { value, ..Self::default() }
    }

    pub fn one_d(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, gradient: [d1, 0.0], hessian: [d2, 0.0, 0.0, 0.0] }
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.value *= s;
        self.gradient.iter_mut().for_each(|v| *v *= s);
        self.hessian.iter_mut().for_each(|v| *v *= s);
        self
    }

    pub fn plus(mut self, other: &Self) -> Self {
        self.value += other.value;
        for (a, b) in self.gradient.iter_mut().zip(&other.gradient) {
            *a += b;
        }
        for (a, b) in self.hessian.iter_mut().zip(&other.hessian) {
            *a += b;
        }
        self
    }
}

/// Upper bounds on `‖f‖_∞`, `‖∇f‖_∞` (Euclidean) and `‖∇²f‖_∞` (Frobenius).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C2Norms {
    pub sup: f64,
    pub gradient: f64,
    pub hessian: f64,
}

impl C2Norms {
    pub const UNBOUNDED: Self = Self { sup: f64::INFINITY, gradient: f64::INFINITY, hessian: f64::INFINITY };

    /// `‖f‖_∞ + ‖∇f‖_∞ + ‖∇²f‖_∞`.
    pub fn total(&self) -> f64 {
        self.sup + self.gradient + self.hessian
    }

    pub fn scale(&self, s: f64) -> Self {
        let s = s.abs();
        Self { sup: self.sup * s, gradient: self.gradient * s, hessian: self.hessian * s }
    }
}

pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn jet(&self, x: &[f64]) -> Jet;

    fn norms(&self) -> C2Norms;

    fn value(&self, x: &[f64]) -> f64 {
        self.jet(x).value
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl SmoothFunction for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, _x: &[f64]) -> Jet {
        Jet::constant(self.value)
    }

    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }

    fn norms(&self) -> C2Norms {
        C2Norms { sup: self.value.abs(), gradient: 0.0, hessian: 0.0 }
    }
}

/// `a · exp(−|x − c|² / (2 s²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub dim: usize,
    pub center: [f64; MAX_DIM],
    pub scale: f64,
    pub amplitude: f64,
}

impl Gaussian {
    pub fn one_d(center: f64, scale: f64, amplitude: f64) -> Self {
        Self { dim: 1, center: [center, 0.0], scale, amplitude }
    }
}

impl SmoothFunction for Gaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let s2 = self.scale * self.scale;
        let mut z = [0.0; MAX_DIM];
        for i in 0..self.dim {
            z[i] = x[i] - self.center[i];
        }
        let e = self.amplitude * (-linalg::dot(&z, &z) / (2.0 * s2)).exp();
        let mut jet = Jet { value: e, ..Jet::default() };
        for i in 0..self.dim {
            jet.gradient[i] = -e * z[i] / s2;
            for j in 0..self.dim {
                let delta = if i == j { 1.0 } else { 0.0 };
                jet.hessian[i * MAX_DIM + j] = e * (z[i] * z[j] / (s2 * s2) - delta / s2);
            }
        }
        jet
    }

    fn norms(&self) -> C2Norms {
        let a = self.amplitude.abs();
        let s = self.scale;
        C2Norms {
            sup: a,
            gradient: a * (-0.5f64).exp() / s,
            hessian: a * (self.dim as f64).sqrt() / (s * s),
        }
    }
}

/// `a · sin(k x + φ)` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sine {
    pub frequency: f64,
    pub phase: f64,
    pub amplitude: f64,
}

impl Sine {
    pub fn sin() -> Self {
        Self { frequency: 1.0, phase: 0.0, amplitude: 1.0 }
    }

    pub fn cos() -> Self {
        Self { frequency: 1.0, phase: core::f64::consts::FRAC_PI_2, amplitude: 1.0 }
    }
}

impl SmoothFunction for Sine {
    fn dim(&self) -> usize {
        1
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let (k, a) = (self.frequency, self.amplitude);
        let (s, c) = (k * x[0] + self.phase).sin_cos();
        Jet::one_d(a * s, a * k * c, -a * k * k * s)
    }

    fn norms(&self) -> C2Norms {
        let (k, a) = (self.frequency.abs(), self.amplitude.abs());
        C2Norms { sup: a, gradient: a * k, hessian: a * k * k }
    }
}

/// `S(u) = 35u⁴ − 84u⁵ + 70u⁶ − 20u⁷` and its first two derivatives, with
/// `S(0) = 0`, `S(1) = 1` and three vanishing derivatives at both ends.
pub fn smoothstep7(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let v = 1.0 - u;
    let s = u * u * u * u * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
    let d1 = 140.0 * u * u * u * v * v * v;
    let d2 = 420.0 * u * u * v * v * (1.0 - 2.0 * u);
    (s, d1, d2)
}

const SMOOTHSTEP7_D1_MAX: f64 = 2.1875;
const SMOOTHSTEP7_D2_MAX: f64 = 7.5134;

/// Radial plateau: `a` on `|x − c| ≤ R`, zero off `|x − c| ≥ 2R`, degree-7
/// smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauBump {
    pub dim: usize,
    pub center: [f64; MAX_DIM],
    pub radius: f64,
    pub amplitude: f64,
}

impl PlateauBump {
    pub fn new(dim: usize, center: &[f64], radius: f64, amplitude: f64) -> Self {
        let mut c = [0.0; MAX_DIM];
        c[..dim].copy_from_slice(&center[..dim]);
        Self { dim, center: c, radius, amplitude }
    }
}

impl SmoothFunction for PlateauBump {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let d = self.dim;
        let r0 = self.radius;
        let mut z = [0.0; MAX_DIM];
        for i in 0..d {
            z[i] = x[i] - self.center[i];
        }
        let r = linalg::norm(&z[..d]);
        if r <= r0 {
            return Jet::constant(self.amplitude);
        }
        if r >= 2.0 * r0 {
            return Jet::default();
        }
        // φ(r) = S((2R − r)/R): φ' = −S'/R, φ'' = S''/R².
        let (s, s1, s2) = smoothstep7((2.0 * r0 - r) / r0);
        let p1 = -s1 / r0;
        let p2 = s2 / (r0 * r0);
        let a = self.amplitude;
        let mut jet = Jet { value: a * s, ..Jet::default() };
        for i in 0..d {
            let ui = z[i] / r;
            jet.gradient[i] = a * p1 * ui;
            for j in 0..d {
                let uj = z[j] / r;
                let delta = if i == j { 1.0 } else { 0.0 };
                jet.hessian[i * MAX_DIM + j] = a * (p2 * ui * uj + p1 / r * (delta - ui * uj));
            }
        }
        jet
    }

    fn norms(&self) -> C2Norms {
        let a = self.amplitude.abs();
        let r2 = self.radius * self.radius;
        let hessian = if self.dim == 1 {
            SMOOTHSTEP7_D2_MAX / r2
        } else {
            // Radial and tangential eigenvalues; the tangential one uses r >= R.
            (SMOOTHSTEP7_D2_MAX * SMOOTHSTEP7_D2_MAX + SMOOTHSTEP7_D1_MAX * SMOOTHSTEP7_D1_MAX).sqrt() / r2
        };
        C2Norms { sup: a, gradient: a * SMOOTHSTEP7_D1_MAX / self.radius, hessian: a * hessian }
    }
}

/// The piecewise datum of the drift-uncertainty example: `f = 2.5` for
/// `x ≤ −3`, a C² descent to `f(−2) = 2`, `f = −x` on `[−2, −1]`, a dip
/// staying inside `[0.70, 1]` on `[−1, ½]`, and `f = 1` for `x ≥ ½`.
///
/// Hence `sup_{|s|≤t} f(s) = 1` for `t ∈ [½, 1]` and `= t` for `t ∈ [1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftExampleDatum;

impl SmoothFunction for DriftExampleDatum {
    fn dim(&self) -> usize {
        1
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let x = x[0];
        if x <= -3.0 {
            Jet::constant(2.5)
        } else if x <= -2.0 {
            // f' = −S(u) with the cubic smoothstep S, u = x + 3.
            let u = x + 3.0;
            let s = u * u * (3.0 - 2.0 * u);
            let integral = u * u * u * (1.0 - 0.5 * u);
            Jet::one_d(2.5 - integral, -s, -6.0 * u * (1.0 - u))
        } else if x <= -1.0 {
            Jet::one_d(-x, -1.0, 0.0)
        } else if x < 0.5 {
            let s = (x + 1.0) / 1.5;
            let (a, a1) = (s + 3.0 * s * s, 1.0 + 6.0 * s);
            let v = 1.0 - s;
            let (b, b1, b2) = (v * v * v, -3.0 * v * v, 6.0 * v);
            let p = a * b;
            let p1 = a1 * b + a * b1;
            let p2 = 6.0 * b + 2.0 * a1 * b1 + a * b2;
            Jet::one_d(1.0 - 1.5 * p, -p1, -p2 / 1.5)
        } else {
            Jet::constant(1.0)
        }
    }

    fn norms(&self) -> C2Norms {
        C2Norms { sup: 2.5, gradient: 1.0, hessian: 2.63 }
    }
}

/// `cos(ξ·x + φ) · exp(−|x|² / (2W²))`; with `φ = 0` and `φ = −π/2` these are
/// the real and imaginary parts of a windowed `e^{iξ·x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowedHarmonic {
    pub dim: usize,
    pub xi: [f64; MAX_DIM],
    pub phase: f64,
    pub width: f64,
}

impl SmoothFunction for WindowedHarmonic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let d = self.dim;
        let w2 = self.width * self.width;
        let arg = linalg::dot(&self.xi[..d], &x[..d]) + self.phase;
        let (s, c) = arg.sin_cos();
        let win = (-linalg::dot(&x[..d], &x[..d]) / (2.0 * w2)).exp();
        let mut jet = Jet { value: c * win, ..Jet::default() };
        for i in 0..d {
            let dwi = -x[i] / w2 * win;
            jet.gradient[i] = -s * self.xi[i] * win + c * dwi;
            for j in 0..d {
                let dwj = -x[j] / w2 * win;
                let delta = if i == j { 1.0 } else { 0.0 };
                let hw = win * (x[i] * x[j] / (w2 * w2) - delta / w2);
                jet.hessian[i * MAX_DIM + j] = -c * self.xi[i] * self.xi[j] * win
                    - s * self.xi[i] * dwj
                    - s * self.xi[j] * dwi
                    + c * hw;
            }
        }
        jet
    }

    fn norms(&self) -> C2Norms {
        let k = linalg::norm(&self.xi[..self.dim]);
        let w = self.width;
        let g = (-0.5f64).exp() / w;
        C2Norms {
            sup: 1.0,
            gradient: k + g,
            hessian: k * k + 2.0 * k * g + (self.dim as f64).sqrt() / (w * w),
        }
    }
}

/// One-dimensional polynomial `Σ cₖ (x − x₀)ᵏ`; unbounded, so its norms are infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub origin: f64,
    pub coefficients: Vec<f64>,
}

impl SmoothFunction for Polynomial {
    fn dim(&self) -> usize {
        1
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let z = x[0] - self.origin;
        let (mut p, mut p1, mut p2) = (0.0, 0.0, 0.0);
        for &c in self.coefficients.iter().rev() {
            p2 = p2 * z + 2.0 * p1;
            p1 = p1 * z + p;
            p = p * z + c;
        }
        Jet::one_d(p, p1, p2)
    }

    fn norms(&self) -> C2Norms {
        if self.coefficients.iter().skip(1).all(|&c| c == 0.0) {
            let c0 = self.coefficients.first().copied().unwrap_or(0.0);
            return C2Norms { sup: c0.abs(), gradient: 0.0, hessian: 0.0 };
        }
        C2Norms::UNBOUNDED
    }
}

/// Shared, type-erased smooth function.
pub type DynFunction = Arc<dyn SmoothFunction>;

/// `Σ aᵢ fᵢ`.
#[derive(Clone)]
pub struct LinearCombination {
    terms: Vec<(f64, DynFunction)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, DynFunction)>) -> Self {
        assert!(!terms.is_empty(), "empty linear combination");
        let d = terms[0].1.dim();
        assert!(terms.iter().all(|t| t.1.dim() == d), "mixed dimensions");
        Self { terms }
    }
}

impl fmt::Debug for LinearCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearCombination").field("terms", &self.terms.len()).finish()
    }
}

impl SmoothFunction for LinearCombination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }

    fn jet(&self, x: &[f64]) -> Jet {
        self.terms
            .iter()
            .fold(Jet::default(), |acc, (a, f)| acc.plus(&f.jet(x).scale(*a)))
    }

    fn norms(&self) -> C2Norms {
        self.terms.iter().fold(C2Norms { sup: 0.0, gradient: 0.0, hessian: 0.0 }, |acc, (a, f)| {
            let n = f.norms().scale(*a);
            C2Norms { sup: acc.sup + n.sup, gradient: acc.gradient + n.gradient, hessian: acc.hessian + n.hessian }
        })
    }
}

type JetFn = Arc<dyn Fn(&[f64]) -> Jet + Send + Sync>;

/// Wraps a closure returning the jet, with caller-stated norms.
#[derive(Clone)]
pub struct ClosureFunction {
    dim: usize,
    norms: C2Norms,
    jet: JetFn,
}

impl ClosureFunction {
    pub fn new(dim: usize, norms: C2Norms, jet: impl Fn(&[f64]) -> Jet + Send + Sync + 'static) -> Self {
        Self { dim, norms, jet: Arc::new(jet) }
    }
}

impl fmt::Debug for ClosureFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureFunction").field("dim", &self.dim).field("norms", &self.norms).finish()
    }
}

impl SmoothFunction for ClosureFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Jet {
        (self.jet)(x)
    }

    fn norms(&self) -> C2Norms {
        self.norms
    }
}

/// Largest sampled violation of the stated norms over `points` (1-D: a flat
/// list; 2-D: coordinate pairs). Returns `0` when the bounds hold.
pub fn norm_violation(f: &dyn SmoothFunction, points: &[f64]) -> f64 {
    let d = f.dim();
    let n = f.norms();
    points
        .chunks(d)
        .map(|x| {
            let j = f.jet(x);
            let g = linalg::norm(&j.gradient[..d]);
            let h = if d == 1 { j.hessian[0].abs() } else { linalg::frobenius(&j.hessian) };
            (j.value.abs() - n.sup).max(g - n.gradient).max(h - n.hessian).max(0.0)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Central-difference check of the jet of a 1-D function.
    fn check_derivatives(f: &dyn SmoothFunction, xs: &[f64], tol: f64) {
        let h = 1e-5;
        for &x in xs {
            let j = f.jet(&[x]);
            let (fp, fm) = (f.value(&[x + h]), f.value(&[x - h]));
            let d1 = (fp - fm) / (2.0 * h);
            let d2 = (f.jet(&[x + h]).gradient[0] - f.jet(&[x - h]).gradient[0]) / (2.0 * h);
            assert!((d1 - j.gradient[0]).abs() < tol, "f' at {x}: {d1} vs {}", j.gradient[0]);
            assert!((d2 - j.hessian[0]).abs() < tol, "f'' at {x}: {d2} vs {}", j.hessian[0]);
        }
    }

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep7(0.0), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep7(1.0).0, 1.0);
        let (s, _, _) = smoothstep7(0.5);
        assert!((s - 0.5).abs() < 1e-15);
        let max_d2 = grid(0.0, 1.0, 100_001).iter().map(|&u| smoothstep7(u).2.abs()).fold(0.0, f64::max);
        assert!(max_d2 <= SMOOTHSTEP7_D2_MAX && max_d2 > SMOOTHSTEP7_D2_MAX - 1e-3);
    }

    #[test]
    fn drift_datum_is_c2_and_matches_pieces() {
        let f = DriftExampleDatum;
        assert_eq!(f.value(&[-5.0]), 2.5);
        assert!((f.value(&[-2.0]) - 2.0).abs() < 1e-15);
        assert_eq!(f.value(&[-1.5]), 1.5);
        assert_eq!(f.value(&[0.7]), 1.0);
        let xs = grid(-3.5, 1.0, 451);
        check_derivatives(&f, &xs, 1e-4);
        for &x in &grid(-1.0, 1.0, 2001) {
            let v = f.value(&[x]);
            assert!((0.7..=1.0 + 1e-15).contains(&v), "f({x}) = {v}");
        }
        // Continuity of second derivative across the joins.
        for &x in &[-3.0, -2.0, -1.0, 0.5] {
            let (a, b) = (f.jet(&[x - 1e-9]), f.jet(&[x + 1e-9]));
            assert!((a.hessian[0] - b.hessian[0]).abs() < 1e-6);
            assert!((a.gradient[0] - b.gradient[0]).abs() < 1e-6);
        }
        assert!(norm_violation(&f, &grid(-4.0, 2.0, 60_001)) <= 1e-9);
    }

    #[test]
    fn jets_match_finite_differences() {
        let xs = grid(-4.0, 4.0, 97);
        check_derivatives(&Gaussian::one_d(0.3, 0.7, 1.5), &xs, 1e-5);
        check_derivatives(&Sine { frequency: 2.0, phase: 0.3, amplitude: -1.2 }, &xs, 1e-5);
        check_derivatives(&PlateauBump::new(1, &[0.2], 1.0, 2.0), &xs, 1e-4);
        check_derivatives(&WindowedHarmonic { dim: 1, xi: [1.3, 0.0], phase: 0.0, width: 2.0 }, &xs, 1e-5);
        check_derivatives(&Polynomial { origin: 0.5, coefficients: vec![1.0, -2.0, 0.5, 0.25] }, &xs, 1e-4);
    }

    #[test]
    fn two_dimensional_hessians() {
        let fs: Vec<DynFunction> = vec![
            Arc::new(Gaussian { dim: 2, center: [0.1, -0.2], scale: 0.8, amplitude: 1.0 }),
            Arc::new(PlateauBump::new(2, &[0.0, 0.0], 0.7, 1.0)),
            Arc::new(WindowedHarmonic { dim: 2, xi: [1.0, -0.5], phase: 0.4, width: 1.5 }),
        ];
        let h = 1e-5;
        for f in &fs {
            for &(x, y) in &[(0.9, 0.3), (-0.4, 1.0), (0.2, -0.95)] {
                let j = f.jet(&[x, y]);
                for i in 0..2 {
                    let mut p = [x, y];
                    let mut m = [x, y];
                    p[i] += h;
                    m[i] -= h;
                    let d1 = (f.value(&p) - f.value(&m)) / (2.0 * h);
                    assert!((d1 - j.gradient[i]).abs() < 1e-5);
                    let (gp, gm) = (f.jet(&p).gradient, f.jet(&m).gradient);
                    for k in 0..2 {
                        let d2 = (gp[k] - gm[k]) / (2.0 * h);
                        assert!((d2 - j.hessian[i * MAX_DIM + k]).abs() < 1e-4);
                    }
                }
            }
            let pts: Vec<f64> = grid(-2.0, 2.0, 81).iter().flat_map(|&a| grid(-2.0, 2.0, 81).into_iter().flat_map(move |b| [a, b])).collect();
            assert!(norm_violation(f.as_ref(), &pts) <= 1e-9);
        }
    }

    #[test]
    fn stated_norms_bound_samples() {
        let xs = grid(-10.0, 10.0, 20_001);
        assert!(norm_violation(&Sine::sin(), &xs) <= 1e-9);
        assert!(norm_violation(&Gaussian::one_d(1.0, 0.3, -2.0), &xs) <= 1e-9);
        assert!(norm_violation(&PlateauBump::new(1, &[0.0], 0.5, 1.0), &xs) <= 1e-9);
        assert!(norm_violation(&WindowedHarmonic { dim: 1, xi: [3.0, 0.0], phase: -0.3, width: 0.8 }, &xs) <= 1e-9);
        let lc = LinearCombination::new(vec![(2.0, Arc::new(Sine::sin()) as DynFunction), (-1.0, Arc::new(Sine::cos()))]);
        assert_eq!(lc.norms().total(), 9.0);
        assert!(norm_violation(&lc, &xs) <= 1e-9);
    }
}
