//! Grid evolution of translation-invariant sublinear semigroups, the exact
//! drift-uncertainty semigroup, and the inequality checks built on them.

mod checks;
mod exact;
mod spectral;

pub use checks::{
    dynkin_sandwich_check, estimate_generator, lipschitz_favard_check, slope_bounds_check, CheckConfig,
    DynkinReport, FavardReport, GeneratorEstimate, SlopeReport, SlopeRow,
};
pub use exact::{drift_uncertainty_exact, quadratic_interpolate};
pub use spectral::{
    leak_bound, linear_levy_step, linear_levy_step_with, LinearStepper, Multiplier, NisioStepper, SpectralConfig,
    SpectralGrid, SymbolDiscretization, DEFAULT_LEAK_TOLERANCE,
};

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::triplets::CharacteristicFamily;

/// Which discretisation produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Spectral(SymbolDiscretization),
    ExplicitFiniteDifference,
    Exact,
}

/// Frames `t ↦ T_t f` on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupTrajectory {
    pub times: Vec<f64>,
    pub frames: Vec<GridFunction>,
    /// `argmax[k]` is the maximising member per node in the step producing
    /// frame `k + 1`.
    pub argmax: Vec<Vec<usize>>,
    pub family: String,
    pub dt: f64,
    pub scheme: Scheme,
}

impl SemigroupTrajectory {
    pub fn initial(&self) -> &GridFunction {
        &self.frames[0]
    }

    pub fn last(&self) -> &GridFunction {
        self.frames.last().expect("trajectory has an initial frame")
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frame values at `x` (interpolated) for every recorded time.
    pub fn path_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.frames.iter().map(|f| f.interpolate(x)).collect()
    }

    /// Index of the frame at time `t`, which must lie on the time grid.
    pub fn frame_index(&self, t: f64) -> Result<usize> {
        if self.dt == 0.0 {
            return if t == 0.0 { Ok(0) } else { Err(Error::InvalidArgument("empty time grid".into())) };
        }
        let k = (t / self.dt).round();
        if (k * self.dt - t).abs() > 1e-9 * (1.0 + t) || k < 0.0 || k as usize >= self.frames.len() {
            return Err(Error::InvalidArgument(alloc::format!("t = {t} is not on the trajectory time grid")));
        }
        Ok(k as usize)
    }
}

/// One Nisio step with the default lattice discretisation.
pub fn nisio_step(family: &CharacteristicFamily, f: &GridFunction, dt: f64) -> Result<(GridFunction, Vec<usize>)> {
    NisioStepper::new(family.invariant_triplets()?, f, dt, &SpectralConfig::default())?.step(f)
}

pub fn evolve(family: &CharacteristicFamily, f: &GridFunction, t: f64, n_steps: usize) -> Result<SemigroupTrajectory> {
    evolve_with(family, f, t, n_steps, &SpectralConfig::default())
}

/// Iterates Nisio steps with `dt = t / n_steps`, recording every frame.
pub fn evolve_with(
    family: &CharacteristicFamily,
    f: &GridFunction,
    t: f64,
    n_steps: usize,
    cfg: &SpectralConfig,
) -> Result<SemigroupTrajectory> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("t = {t} must be positive")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".to_string()));
    }
    if family.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), got: f.dim() });
    }
    let dt = t / n_steps as f64;
    let stepper = NisioStepper::new(family.invariant_triplets()?, f, dt, cfg)?;
    let mut frames = Vec::with_capacity(n_steps + 1);
    let mut argmax = Vec::with_capacity(n_steps);
    frames.push(f.clone());
    for _ in 0..n_steps {
        let (next, am) = stepper.step(frames.last().expect("nonempty"))?;
        frames.push(next);
        argmax.push(am);
    }
    Ok(SemigroupTrajectory {
        times: (0..=n_steps).map(|k| k as f64 * dt).collect(),
        frames,
        argmax,
        family: family.name().to_string(),
        dt,
        scheme: Scheme::Spectral(cfg.discretization),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Extension;
    use crate::triplets::{Label, LevyTriplet};
    use alloc::vec;

    fn drift_family(bs: &[f64]) -> CharacteristicFamily {
        let labels = bs.iter().map(|b| Label(alloc::format!("{b}"))).collect();
        let trips = bs.iter().map(|&b| LevyTriplet::one_d(0.0, b, 0.0, &[]).unwrap()).collect();
        CharacteristicFamily::invariant(labels, trips).unwrap()
    }

    #[test]
    fn singleton_nisio_equals_linear_step() {
        let t = LevyTriplet::one_d(0.0, 0.3, 0.5, &[(0.4, 1.0)]).unwrap();
        let f = GridFunction::from_fn(1, -4.0, 4.0, 101, Extension::Constant, |x| x[0].sin()).unwrap();
        let (a, am) = nisio_step(&CharacteristicFamily::singleton(t.clone()), &f, 0.05).unwrap();
        assert_eq!(a, linear_levy_step(&t, &f, 0.05).unwrap());
        assert!(am.iter().all(|&i| i == 0));
    }

    #[test]
    fn increasing_data_picks_positive_drift() {
        let fam = drift_family(&[-1.0, 1.0]);
        let f = GridFunction::from_fn(1, -4.0, 4.0, 161, Extension::Constant, |x| x[0].atan()).unwrap();
        let (_, am) = nisio_step(&fam, &f, 0.05).unwrap();
        assert!(am[..158].iter().all(|&i| i == 1));
    }

    #[test]
    fn constants_fixed_under_conservative_families() {
        let fam = drift_family(&[-1.0, 0.0, 0.5]);
        let f = GridFunction::from_fn(1, -4.0, 4.0, 64, Extension::Constant, |_| 0.6).unwrap();
        let traj = evolve(&fam, &f, 1.0, 8).unwrap();
        assert!(traj.frames.iter().all(|g| g.values().iter().all(|&v| v == 0.6)));
        assert_eq!(traj.times.len(), 9);
        assert_eq!(traj.frame_index(0.5).unwrap(), 4);
        assert!(traj.frame_index(0.3).is_err());
    }

    #[test]
    fn richardson_pair_contracts() {
        let labels = vec![Label::from("low"), Label::from("high")];
        let trips = vec![LevyTriplet::one_d(0.0, 0.0, 0.25, &[]).unwrap(), LevyTriplet::one_d(0.0, 0.0, 1.0, &[]).unwrap()];
        let fam = CharacteristicFamily::invariant(labels, trips).unwrap();
        let f = GridFunction::from_fn(1, -6.0, 6.0, 241, Extension::Constant, |x| (-x[0] * x[0]).exp()).unwrap();
        let at = |n: usize| evolve(&fam, &f, 0.8, n).unwrap().last().clone();
        let (a, b, c) = (at(8), at(16), at(32));
        assert!(a.sup_distance(&b) / b.sup_distance(&c) >= 1.8, "{} {}", a.sup_distance(&b), b.sup_distance(&c));
    }
}
