//! Monotone explicit finite differences for `∂_t u = sup_θ A_θ(x) u` in one
//! dimension, with state-dependent families.

mod viscosity;

pub use viscosity::{
    viscosity_touch_test, ProbeKind, ProbeResult, ViscosityConfig, ViscosityReport,
};

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::generator::first_argmax;
use crate::grid::{Extension, GridFunction};
use crate::semigroup::{Scheme, SemigroupTrajectory};
use crate::triplets::{is_compensated, CharacteristicFamily, LevyTriplet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    /// Time step; `None` takes `cfl_safety · dt_max`.
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    /// Atoms with `|y|` below `max(h, κ)` are folded into the diffusion.
    pub small_jump_cutoff: f64,
    pub boundary: Extension,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self { dt: None, cfl_safety: 0.9, small_jump_cutoff: 0.0, boundary: Extension::Constant }
    }
}

impl SchemeConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt: Some(dt), ..Self::default() }
    }
}

/// A jump landing between nodes `lo` and `lo + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Shift {
    lo: usize,
    frac: f64,
    weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct NodeStencil {
    killing: f64,
    drift: f64,
    diffusion: f64,
    jumps: Vec<Shift>,
    /// Under `Strict`, nodes whose stencil leaves the box keep their value.
    frozen: bool,
}

impl NodeStencil {
    fn rate(&self, h: f64) -> f64 {
        if self.frozen {
            return 0.0;
        }
        self.killing + self.drift.abs() / h + self.diffusion / (h * h) + self.jumps.iter().map(|s| s.weight).sum::<f64>()
    }

    fn apply(&self, u: &[f64], i: usize, h: f64) -> f64 {
        if self.frozen {
            return 0.0;
        }
        let n = u.len();
        let ui = u[i];
        let left = u[i.saturating_sub(1)];
        let right = u[(i + 1).min(n - 1)];
        let transport = if self.drift > 0.0 {
            self.drift * (right - ui) / h
        } else {
            self.drift * (ui - left) / h
        };
        let diffusion = 0.5 * self.diffusion * (right - 2.0 * ui + left) / (h * h);
        let mut nonlocal = 0.0;
        for s in &self.jumps {
            let hi = (s.lo + 1).min(n - 1);
            nonlocal += s.weight * ((1.0 - s.frac) * u[s.lo] + s.frac * u[hi] - ui);
        }
        -self.killing * ui + transport + diffusion + nonlocal
    }
}

/// Precomputed stencils of every member at every node.
#[derive(Debug, Clone)]
pub struct HjbScheme {
    lo: f64,
    hi: f64,
    n: usize,
    h: f64,
    boundary: Extension,
    /// `stencils[θ][i]` for member `θ` at node `i`.
    stencils: Vec<Vec<NodeStencil>>,
    dt_max: f64,
}

impl HjbScheme {
    pub fn new(family: &CharacteristicFamily, like: &GridFunction, cfg: &SchemeConfig) -> Result<Self> {
        if family.dim() != 1 || like.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: family.dim().max(like.dim()) });
        }
        if !(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument("cfl_safety must lie in (0, 1]".to_string()));
        }
        if !(cfg.small_jump_cutoff >= 0.0 && cfg.small_jump_cutoff.is_finite()) {
            return Err(Error::InvalidArgument("small_jump_cutoff must be nonnegative".to_string()));
        }
        let (n, h) = (like.n(), like.h());
        let kappa = cfg.small_jump_cutoff.max(h);
        let invariant = family.is_translation_invariant();
        let mut stencils: Vec<Vec<NodeStencil>> = Vec::with_capacity(family.len());
        for theta in 0..family.len() {
            let row = if invariant {
                // Stencil shapes do not depend on x, only the freezing does.
                let t = family.at(theta, &[like.lo()]);
                (0..n).map(|i| stencil(&t, i, n, h, kappa, cfg.boundary)).collect()
            } else {
                (0..n).map(|i| stencil(&family.at(theta, &[like.coordinate(i)]), i, n, h, kappa, cfg.boundary)).collect()
            };
            stencils.push(row);
        }
        let sup_rate = stencils.iter().flatten().map(|s| s.rate(h)).fold(0.0, f64::max);
        let dt_max = if sup_rate > 0.0 { 1.0 / sup_rate } else { f64::INFINITY };
        Ok(Self { lo: like.lo(), hi: like.hi(), n, h, boundary: cfg.boundary, stencils, dt_max })
    }

    /// `1 / sup_{θ,x}(c + |b|/h + Q/h² + ν_big)`.
    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    pub fn check_cfl(&self, dt: f64, safety: f64) -> Result<()> {
        let admissible = safety * self.dt_max;
        if !(dt > 0.0) || dt > admissible * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, admissible });
        }
        Ok(())
    }

    fn geometry_matches(&self, u: &GridFunction) -> bool {
        u.dim() == 1 && u.n() == self.n && u.lo() == self.lo && u.hi() == self.hi
    }

    /// One explicit Euler step; returns the new values and the maximising
    /// member per node. The CFL bound is not rechecked here.
    pub fn step(&self, u: &GridFunction, dt: f64) -> Result<(GridFunction, Vec<usize>)> {
        if !self.geometry_matches(u) {
            return Err(Error::InvalidGrid("grid does not match the scheme geometry".into()));
        }
        let v = u.values();
        let mut out = Vec::with_capacity(self.n);
        let mut argmax = Vec::with_capacity(self.n);
        let mut per_theta = vec![0.0; self.stencils.len()];
        for i in 0..self.n {
            for (slot, row) in per_theta.iter_mut().zip(&self.stencils) {
                *slot = row[i].apply(v, i, self.h);
            }
            let k = first_argmax(&per_theta);
            out.push(v[i] + dt * per_theta[k]);
            argmax.push(k);
        }
        Ok((u.with_values(out)?.with_extension(self.boundary), argmax))
    }
}

fn stencil(t: &LevyTriplet, i: usize, n: usize, h: f64, kappa: f64, boundary: Extension) -> NodeStencil {
    let mut drift = t.drift()[0];
    let mut diffusion = t.diffusion()[0];
    let mut jumps = Vec::new();
    let mut frozen = boundary == Extension::Strict && (i == 0 || i + 1 == n);
    for (y, w) in t.jumps().iter() {
        let y0 = y[0];
        if y0.abs() < kappa {
            diffusion += w * y0 * y0;
            if !is_compensated(y) {
                drift += w * y0;
            }
            continue;
        }
        if is_compensated(y) {
            drift -= w * y0;
        }
        let s = i as f64 + y0 / h;
        let last = (n - 1) as f64;
        if boundary == Extension::Strict && !(-1e-9..=last + 1e-9).contains(&s) {
            frozen = true;
        }
        let s = s.clamp(0.0, last);
        let lo = (s.floor() as usize).min(n - 2);
        jumps.push(Shift { lo, frac: s - lo as f64, weight: w });
    }
    NodeStencil { killing: t.killing(), drift, diffusion, jumps, frozen }
}

fn resolve_dt(scheme: &HjbScheme, cfg: &SchemeConfig) -> Result<f64> {
    let dt = cfg.dt.unwrap_or(cfg.cfl_safety * scheme.dt_max());
    scheme.check_cfl(dt, cfg.cfl_safety)?;
    Ok(dt)
}

/// One explicit step with `cfg.dt` (or the CFL step when unset).
pub fn hjb_step(family: &CharacteristicFamily, u: &GridFunction, cfg: &SchemeConfig) -> Result<GridFunction> {
    let scheme = HjbScheme::new(family, u, cfg)?;
    let dt = resolve_dt(&scheme, cfg)?;
    Ok(scheme.step(u, dt)?.0)
}

/// Iterates [`hjb_step`] up to `t_final`. The step is shrunk so that an
/// integer number of steps lands exactly on `t_final`.
pub fn hjb_solve(
    family: &CharacteristicFamily,
    f: &GridFunction,
    t_final: f64,
    cfg: &SchemeConfig,
) -> Result<SemigroupTrajectory> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("T = {t_final} must be nonnegative")));
    }
    let scheme = HjbScheme::new(family, f, cfg)?;
    let f = f.clone().with_extension(cfg.boundary);
    let mut traj = SemigroupTrajectory {
        times: vec![0.0],
        frames: vec![f],
        argmax: Vec::new(),
        family: family.name().to_string(),
        dt: 0.0,
        scheme: Scheme::ExplicitFiniteDifference,
    };
    if t_final == 0.0 {
        return Ok(traj);
    }
    let dt0 = resolve_dt(&scheme, cfg).or_else(|e| match e {
        // No dynamics at all: one step covers everything.
        Error::CflViolation { .. } if scheme.dt_max().is_infinite() => Ok(t_final),
        e => Err(e),
    })?;
    let steps = ((t_final / dt0.min(t_final)) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    traj.dt = dt;
    traj.frames.reserve(steps);
    for k in 1..=steps {
        let (next, am) = scheme.step(traj.last(), dt)?;
        traj.frames.push(next);
        traj.argmax.push(am);
        traj.times.push(k as f64 * dt);
    }
    Ok(traj)
}
