//! Integro-differential operators `A_θ` of single triplets, their pointwise
//! supremum over a family, and structural checks built on them.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::functions::{Constant, Jet, PlateauBump, SmoothFunction};
use crate::grid::GridFunction;
use crate::linalg::{self, MAX_DIM};
use crate::triplets::{is_compensated, tightness_defect, CharacteristicFamily, Label, LevyTriplet};

/// Tolerance used by the maximum-principle and conservativeness checks.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// A function the generator can act on.
#[derive(Clone, Copy)]
pub enum TestFunction<'a> {
    ClosedForm(&'a dyn SmoothFunction),
    /// Finite-difference derivatives, shifts by interpolation.
    Sampled(&'a GridFunction),
}

impl<'a> TestFunction<'a> {
    pub fn dim(&self) -> usize {
        match self {
            TestFunction::ClosedForm(f) => f.dim(),
            TestFunction::Sampled(g) => g.dim(),
        }
    }

    pub fn jet(&self, x: &[f64]) -> Result<Jet> {
        match self {
            TestFunction::ClosedForm(f) => Ok(f.jet(x)),
            TestFunction::Sampled(g) => g.jet_at(x),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            TestFunction::ClosedForm(f) => Ok(f.value(x)),
            TestFunction::Sampled(g) => g.interpolate(x),
        }
    }
}

impl<'a, F: SmoothFunction> From<&'a F> for TestFunction<'a> {
    fn from(f: &'a F) -> Self {
        TestFunction::ClosedForm(f)
    }
}

impl<'a> From<&'a GridFunction> for TestFunction<'a> {
    fn from(g: &'a GridFunction) -> Self {
        TestFunction::Sampled(g)
    }
}

fn check_dims(triplet: &LevyTriplet, f: &TestFunction<'_>, x: &[f64]) -> Result<()> {
    let d = triplet.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: f.dim() });
    }
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    Ok(())
}

/// `A f(x) = −c f + b·∇f + ½ tr(Q ∇²f) + Σ w [f(x+y) − f(x) − y·∇f 𝟙_{0<|y|<1}]`.
pub fn apply_generator(triplet: &LevyTriplet, f: TestFunction<'_>, x: &[f64]) -> Result<f64> {
    check_dims(triplet, &f, x)?;
    let jet = f.jet(x)?;
    Ok(local_part(triplet, &jet) + jump_part(triplet, &f, x, &jet)?)
}

fn local_part(triplet: &LevyTriplet, jet: &Jet) -> f64 {
    let d = triplet.dim();
    let q = triplet.diffusion();
    let mut trace = 0.0;
    for i in 0..d {
        for j in 0..d {
            trace += q[i * d + j] * jet.hessian[j * MAX_DIM + i];
        }
    }
    -triplet.killing() * jet.value + linalg::dot(triplet.drift(), &jet.gradient[..d]) + 0.5 * trace
}

fn jump_part(triplet: &LevyTriplet, f: &TestFunction<'_>, x: &[f64], jet: &Jet) -> Result<f64> {
    let d = triplet.dim();
    let mut sum = 0.0;
    let mut shifted = [0.0; MAX_DIM];
    for (y, w) in triplet.jumps().iter() {
        for i in 0..d {
            shifted[i] = x[i] + y[i];
        }
        let mut term = f.value(&shifted[..d])? - jet.value;
        if is_compensated(y) {
            term -= linalg::dot(y, &jet.gradient[..d]);
        }
        sum += w * term;
    }
    Ok(sum)
}

/// Pointwise supremum over a family.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub value: f64,
    /// Index of the first maximising member.
    pub argmax: usize,
    pub argmax_label: Label,
    /// `A_θ f(x)` in index order.
    pub per_theta: Vec<f64>,
}

/// First index attaining the maximum.
pub fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn apply_sublinear_generator(family: &CharacteristicFamily, f: TestFunction<'_>, x: &[f64]) -> Result<EnvelopeResult> {
    let per_theta = (0..family.len())
        .map(|theta| apply_generator(&family.at(theta, x), f, x))
        .collect::<Result<Vec<_>>>()?;
    let argmax = first_argmax(&per_theta);
    Ok(EnvelopeResult {
        value: per_theta[argmax],
        argmax,
        argmax_label: family.label(argmax).clone(),
        per_theta,
    })
}

/// `env(f)` at every node of `like`, with the per-node argmax.
pub fn envelope_on_grid(
    family: &CharacteristicFamily,
    f: &dyn SmoothFunction,
    like: &GridFunction,
) -> Result<(GridFunction, Vec<usize>)> {
    let mut values = Vec::with_capacity(like.len());
    let mut argmax = Vec::with_capacity(like.len());
    for k in 0..like.len() {
        let x = like.point(k);
        let env = apply_sublinear_generator(family, TestFunction::ClosedForm(f), &x[..like.dim()])?;
        values.push(env.value);
        argmax.push(env.argmax);
    }
    Ok((like.with_values(values)?, argmax))
}

/// Uniform scan box for precondition checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanBox {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ScanBox {
    fn points(&self, dim: usize) -> impl Iterator<Item = [f64; MAX_DIM]> + '_ {
        let h = (self.hi - self.lo) / (self.n.max(2) - 1) as f64;
        let n = self.n;
        let count = if dim == 1 { n } else { n * n };
        (0..count).map(move |k| {
            if dim == 1 {
                [self.lo + k as f64 * h, 0.0]
            } else {
                [self.lo + (k / n) as f64 * h, self.lo + (k % n) as f64 * h]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmpReport {
    pub value: f64,
    pub argmax: usize,
    pub pass: bool,
}

/// At a nonnegative global maximum `x0` of `f`, `sup_θ A_θ f(x0) ≤ 0`.
pub fn check_positive_maximum_principle(
    family: &CharacteristicFamily,
    f: &dyn SmoothFunction,
    x0: &[f64],
    scan: ScanBox,
) -> Result<PmpReport> {
    let f0 = f.value(x0);
    if f0 < -CHECK_TOLERANCE {
        return Err(Error::PreconditionNotMet(format!("f(x0) = {f0} is negative")));
    }
    if let Some(p) = scan.points(f.dim()).find(|p| f.value(&p[..f.dim()]) > f0 + CHECK_TOLERANCE) {
        return Err(Error::PreconditionNotMet(format!("f exceeds f(x0) at {:?}", &p[..f.dim()])));
    }
    let env = apply_sublinear_generator(family, TestFunction::ClosedForm(f), x0)?;
    Ok(PmpReport { value: env.value, argmax: env.argmax, pass: env.value <= CHECK_TOLERANCE })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cb2Report {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Constant in `|A f(x)| ≤ M ‖f‖_{C_b²} · mass(triplet)`.
pub const CB2_CONSTANT: f64 = 2.0;

pub fn cb2_bound_check(triplet: &LevyTriplet, f: &dyn SmoothFunction, x: &[f64]) -> Result<Cb2Report> {
    let lhs = apply_generator(triplet, TestFunction::ClosedForm(f), x)?.abs();
    let rhs = CB2_CONSTANT * f.norms().total() * triplet.mass();
    Ok(Cb2Report { lhs, rhs, pass: lhs <= rhs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservativenessViolation {
    pub theta: usize,
    pub x: [f64; MAX_DIM],
    pub killing: f64,
    pub symbol_at_zero: f64,
    pub generator_of_one: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservativenessReport {
    pub checked: usize,
    pub max_symbol_at_zero: f64,
    pub violations: Vec<ConservativenessViolation>,
    pub pass: bool,
}

/// Checks `|q_θ(x, 0)| = c_θ(x)` and `A_θ 𝟙 = −c_θ(x)`; when `declared_conservative`,
/// also `c_θ(x) = 0`. `x_samples` is flat with `family.dim()` coordinates per point.
pub fn conservativeness_check(
    family: &CharacteristicFamily,
    x_samples: &[f64],
    declared_conservative: bool,
) -> Result<ConservativenessReport> {
    let d = family.dim();
    let one = Constant { dim: d, value: 1.0 };
    let zero = [0.0; MAX_DIM];
    let mut report = ConservativenessReport { checked: 0, max_symbol_at_zero: 0.0, violations: Vec::new(), pass: true };
    for x in x_samples.chunks(d) {
        for theta in 0..family.len() {
            let t = family.at(theta, x);
            let q0 = t.symbol(&zero[..d]).norm();
            let g1 = apply_generator(&t, TestFunction::ClosedForm(&one), x)?;
            report.checked += 1;
            report.max_symbol_at_zero = report.max_symbol_at_zero.max(q0);
            let consistent = (q0 - t.killing()).abs() <= 1e-14 && g1 == -t.killing();
            if !consistent || (declared_conservative && t.killing() != 0.0) {
                let mut xp = [0.0; MAX_DIM];
                xp[..d].copy_from_slice(x);
                report.violations.push(ConservativenessViolation {
                    theta,
                    x: xp,
                    killing: t.killing(),
                    symbol_at_zero: q0,
                    generator_of_one: g1,
                });
            }
        }
    }
    report.pass = report.violations.is_empty();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessTestReport {
    /// `sup_θ ∫ (1 − φ(y)) ν_θ(x, dy)`.
    pub l_value: f64,
    pub defect_r: f64,
    pub defect_2r: f64,
    /// `defect(2R) ≤ L ≤ defect(R)`.
    pub bracketed: bool,
    pub pass: bool,
}

/// Evaluates the tightness functional against the plateau `φ` equal to one
/// on `B(0, R)` and zero off `B(0, 2R)`.
pub fn tightness_test_function_check(
    family: &CharacteristicFamily,
    x: &[f64],
    eps: f64,
    r: f64,
) -> Result<TightnessTestReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
    }
    let d = family.dim();
    let phi = PlateauBump::new(d, &[0.0; MAX_DIM], r, 1.0);
    let l_value = (0..family.len())
        .map(|theta| {
            family
                .at(theta, x)
                .jumps()
                .iter()
                .map(|(y, w)| w * (1.0 - phi.value(y)))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let defect_r = tightness_defect(family, x, r)?;
    let defect_2r = tightness_defect(family, x, 2.0 * r)?;
    let slack = 1e-12 * (1.0 + defect_r);
    Ok(TightnessTestReport {
        l_value,
        defect_r,
        defect_2r,
        bracketed: defect_2r <= l_value + slack && l_value <= defect_r + slack,
        pass: l_value <= eps,
    })
}
