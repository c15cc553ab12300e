//! Touch tests of the viscosity inequalities on computed trajectories.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::functions::{C2Norms, Jet, SmoothFunction};
use crate::generator::{apply_generator, apply_sublinear_generator, TestFunction};
use crate::rng::{stream_rng, uniform};
use crate::semigroup::SemigroupTrajectory;
use crate::triplets::CharacteristicFamily;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityConfig {
    /// Accepted probes per touching direction.
    pub n_probes: usize,
    pub seed: u64,
    /// Touch points closer than this fraction of the box to an edge are
    /// rejected.
    pub edge_margin: f64,
    /// Give up after this many rejected probes in a row.
    pub max_rejections: usize,
}

impl ViscosityConfig {
    pub fn new(n_probes: usize, seed: u64) -> Self {
        Self { n_probes, seed, edge_margin: 0.1, max_rejections: 10_000 }
    }
}

/// Touching from above tests the subsolution inequality, from below the
/// supersolution one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    Sub,
    Super,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    pub t: f64,
    pub x: f64,
    /// `∂_tφ − sup_θ A_θφ` at the touching point.
    pub residual: f64,
    /// Same, with the second-order part of `φ` replaced by the discrete
    /// curvature of `u`, the extreme element the touch allows.
    pub sharp_residual: f64,
    /// Backward difference in time minus the envelope of the sampled frame.
    pub naive_residual: f64,
}

impl ProbeResult {
    /// Amount by which the sharp residual has the wrong sign.
    pub fn violation(&self) -> f64 {
        match self.kind {
            ProbeKind::Sub => self.sharp_residual.max(0.0),
            ProbeKind::Super => (-self.sharp_residual).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityReport {
    pub probes: Vec<ProbeResult>,
    /// Probes discarded because the touch fell on the boundary.
    pub rejected: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl ViscosityReport {
    pub fn median_violation(&self) -> f64 {
        median(self.probes.iter().map(ProbeResult::violation).collect())
    }

    pub fn max_violation(&self) -> f64 {
        self.probes.iter().map(ProbeResult::violation).fold(0.0, f64::max)
    }

    /// Median of `|sharp residual|`; tends to zero where `u` is smooth.
    pub fn median_abs_sharp(&self) -> f64 {
        median(self.probes.iter().map(|p| p.sharp_residual.abs()).collect())
    }

    pub fn median_abs_naive(&self) -> f64 {
        median(self.probes.iter().map(|p| p.naive_residual.abs()).collect())
    }

    pub fn max_abs_naive(&self) -> f64 {
        self.probes.iter().map(|p| p.naive_residual.abs()).fold(0.0, f64::max)
    }
}

/// `φ(t, x) = s·A·exp(−ξ²/2σ² − τ²/2ς²) + a·ξ + p·τ + c` with `ξ = x − x_c`,
/// `τ = t − t_c`; `s = −1` for touching from above.
#[derive(Debug, Clone, Copy)]
struct Probe {
    sign: f64,
    amplitude: f64,
    xc: f64,
    tc: f64,
    sx: f64,
    st: f64,
    tilt_x: f64,
    tilt_t: f64,
    offset: f64,
}

impl Probe {
    fn bump(&self, t: f64, x: f64) -> f64 {
        let (xi, tau) = (x - self.xc, t - self.tc);
        self.sign * self.amplitude * (-(xi * xi) / (2.0 * self.sx * self.sx) - tau * tau / (2.0 * self.st * self.st)).exp()
    }

    fn value(&self, t: f64, x: f64) -> f64 {
        self.bump(t, x) + self.tilt_x * (x - self.xc) + self.tilt_t * (t - self.tc) + self.offset
    }

    fn time_derivative(&self, t: f64, x: f64) -> f64 {
        -self.bump(t, x) * (t - self.tc) / (self.st * self.st) + self.tilt_t
    }
}

/// The probe frozen at time `t`, as a function of `x`.
struct Slice {
    probe: Probe,
    t: f64,
}

impl SmoothFunction for Slice {
    fn dim(&self) -> usize {
        1
    }

    fn jet(&self, x: &[f64]) -> Jet {
        let p = &self.probe;
        let g = p.bump(self.t, x[0]);
        let xi = x[0] - p.xc;
        let s2 = p.sx * p.sx;
        Jet::one_d(p.value(self.t, x[0]), -g * xi / s2 + p.tilt_x, g * (xi * xi / s2 - 1.0) / s2)
    }

    fn norms(&self) -> C2Norms {
        C2Norms::UNBOUNDED
    }
}

struct Touch {
    frame: usize,
    node: usize,
}

/// Samples Gaussian test functions `φ`, shifts each to touch the discrete
/// `u` at its global extremum of `u − φ` over all frames and nodes, and
/// evaluates the viscosity inequality there with the family's generator.
/// Touches at the initial time or near the spatial edges are resampled.
pub fn viscosity_touch_test(
    family: &CharacteristicFamily,
    trajectory: &SemigroupTrajectory,
    cfg: &ViscosityConfig,
) -> Result<ViscosityReport> {
    let first = trajectory.initial();
    if first.dim() != 1 || family.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: first.dim().max(family.dim()) });
    }
    if trajectory.len() < 3 {
        return Err(Error::InvalidArgument("trajectory needs at least two steps".into()));
    }
    let (lo, hi, n, h) = (first.lo(), first.hi(), first.n(), first.h());
    let t_end = *trajectory.times.last().expect("nonempty");
    let margin = ((cfg.edge_margin * (n - 1) as f64).ceil() as usize).max(1);
    let (umin, umax) = trajectory
        .frames
        .iter()
        .flat_map(|f| f.values().iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let osc = (umax - umin).max(1e-3);

    let mut probes = Vec::with_capacity(2 * cfg.n_probes);
    let mut rejected = 0usize;
    let mut streak = 0usize;
    let mut stream = 0u64;
    for kind in [ProbeKind::Sub, ProbeKind::Super] {
        let mut accepted = 0;
        while accepted < cfg.n_probes {
            let mut rng = stream_rng(cfg.seed, stream);
            stream += 1;
            let probe = Probe {
                sign: if kind == ProbeKind::Sub { -1.0 } else { 1.0 },
                amplitude: osc * uniform(&mut rng, 0.5, 2.0),
                xc: uniform(&mut rng, lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo)),
                tc: uniform(&mut rng, 0.3 * t_end, t_end),
                sx: (hi - lo) * uniform(&mut rng, 0.05, 0.25),
                st: t_end * uniform(&mut rng, 0.3, 1.0),
                tilt_x: osc / (hi - lo) * uniform(&mut rng, -1.0, 1.0),
                tilt_t: osc / t_end * uniform(&mut rng, -0.5, 0.5),
                offset: 0.0,
            };
            match touch(trajectory, &probe, kind, margin) {
                Ok((touch, offset)) => {
                    let probe = Probe { offset, ..probe };
                    probes.push(evaluate(family, trajectory, &probe, kind, &touch, h)?);
                    accepted += 1;
                    streak = 0;
                }
                Err(Error::DegenerateTouch(msg)) => {
                    rejected += 1;
                    streak += 1;
                    if streak >= cfg.max_rejections {
                        return Err(Error::DegenerateTouch(format!("{streak} rejections in a row; last: {msg}")));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(ViscosityReport { probes, rejected })
}

/// Global extremum of `u − φ` and the offset making it a contact point.
fn touch(traj: &SemigroupTrajectory, probe: &Probe, kind: ProbeKind, margin: usize) -> Result<(Touch, f64)> {
    let dir = if kind == ProbeKind::Sub { 1.0 } else { -1.0 };
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (k, (frame, &t)) in traj.frames.iter().zip(&traj.times).enumerate() {
        for (i, &u) in frame.values().iter().enumerate() {
            let gap = dir * (u - probe.value(t, frame.coordinate(i)));
            if gap > best.0 {
                best = (gap, k, i);
            }
        }
    }
    let (gap, frame, node) = best;
    let n = traj.initial().n();
    if frame == 0 {
        return Err(Error::DegenerateTouch("contact at the initial time".into()));
    }
    if node < margin || node + margin >= n {
        return Err(Error::DegenerateTouch(format!("contact at node {node}, within {margin} of the edge")));
    }
    Ok((Touch { frame, node }, dir * gap))
}

fn evaluate(
    family: &CharacteristicFamily,
    traj: &SemigroupTrajectory,
    probe: &Probe,
    kind: ProbeKind,
    touch: &Touch,
    h: f64,
) -> Result<ProbeResult> {
    let frame = &traj.frames[touch.frame];
    let (t, x) = (traj.times[touch.frame], frame.coordinate(touch.node));
    let slice = Slice { probe: *probe, t };
    let phi_t = probe.time_derivative(t, x);
    let phi_xx = slice.jet(&[x]).hessian[0];
    let env = apply_sublinear_generator(family, TestFunction::ClosedForm(&slice), &[x])?;

    let v = frame.values();
    let i = touch.node;
    let u_xx = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
    let mut sharp = f64::NEG_INFINITY;
    for theta in 0..family.len() {
        let trip = family.at(theta, &[x]);
        let a = apply_generator(&trip, TestFunction::ClosedForm(&slice), &[x])?;
        sharp = sharp.max(a + 0.5 * trip.diffusion()[0] * (u_xx - phi_xx));
    }

    let prev = &traj.frames[touch.frame - 1];
    let dt = t - traj.times[touch.frame - 1];
    let naive_env = apply_sublinear_generator(family, TestFunction::Sampled(frame), &[x])?;
    let naive = (v[i] - prev.values()[i]) / dt - naive_env.value;

    Ok(ProbeResult { kind, t, x, residual: phi_t - env.value, sharp_residual: phi_t - sharp, naive_residual: naive })
}
