use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use super::spectral::SpectralConfig;
use super::{evolve_with, SemigroupTrajectory};
use crate::error::{Error, Result};
use crate::functions::{C2Norms, Jet, SmoothFunction};
use crate::generator::envelope_on_grid;
use crate::grid::{Extension, GridFunction};
use crate::triplets::CharacteristicFamily;

/// Grid, time step and tolerance policy shared by the semigroup checks.
///
/// Every check runs at this resolution and at the refined one
/// (`2n − 1` points, `dt / 2`); the tolerance is `safety` times the largest
/// change between the two levels plus `tol_floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub dt: f64,
    pub spectral: SpectralConfig,
    pub safety: f64,
    pub tol_floor: f64,
}

impl CheckConfig {
    pub fn new(lo: f64, hi: f64, n: usize, dt: f64) -> Self {
        Self { lo, hi, n, dt, spectral: SpectralConfig::default(), safety: 2.0, tol_floor: 1e-9 }
    }

    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n - 1, dt: 0.5 * self.dt, ..*self }
    }

    fn sample(&self, f: &dyn SmoothFunction) -> Result<GridFunction> {
        GridFunction::sample(f, self.lo, self.hi, self.n, Extension::Constant)
    }

    /// Steps needed to reach `t`, which must be a multiple of `dt`.
    fn steps_to(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if k < 1.0 || (k * self.dt - t).abs() > 1e-9 * (1.0 + t) {
            return Err(Error::InvalidArgument(alloc::format!("t = {t} is not a positive multiple of dt = {}", self.dt)));
        }
        Ok(k as usize)
    }

    fn evolve(&self, family: &CharacteristicFamily, f: &GridFunction, t: f64) -> Result<SemigroupTrajectory> {
        evolve_with(family, f, t, self.steps_to(t)?, &self.spectral)
    }

    fn tolerance(&self, deltas: impl IntoIterator<Item = f64>) -> f64 {
        self.safety * deltas.into_iter().fold(0.0, f64::max) + self.tol_floor
    }
}

struct Negated<'a>(&'a dyn SmoothFunction);

impl SmoothFunction for Negated<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn jet(&self, x: &[f64]) -> Jet {
        self.0.jet(x).scale(-1.0)
    }

    fn norms(&self) -> C2Norms {
        self.0.norms()
    }
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Slopes `(T_t f(x) − f(x)) / t` and their polynomial extrapolation to `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorEstimate {
    pub times: Vec<f64>,
    pub slopes: Vec<f64>,
    pub limit: f64,
}

/// `semigroup(t)` returns `T_t f(x)`; `t_list` must decrease towards zero.
pub fn estimate_generator(
    mut semigroup: impl FnMut(f64) -> Result<f64>,
    f_x: f64,
    t_list: &[f64],
) -> Result<GeneratorEstimate> {
    if t_list.is_empty() || t_list.iter().any(|&t| !(t > 0.0)) || t_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("t_list must be positive and strictly decreasing".into()));
    }
    let slopes = t_list
        .iter()
        .map(|&t| semigroup(t).map(|v| (v - f_x) / t))
        .collect::<Result<Vec<_>>>()?;
    // Neville's scheme evaluated at t = 0.
    let mut p = slopes.clone();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (ti, tj) = (t_list[i], t_list[i + level]);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
    }
    Ok(GeneratorEstimate { times: t_list.to_vec(), slopes, limit: p[0] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynkinReport {
    /// `−∫₀ᵗ T_s(−Af)(x) ds`.
    pub lower: f64,
    /// `T_t f(x) − f(x)`.
    pub middle: f64,
    /// `∫₀ᵗ T_s(Af)(x) ds`.
    pub upper: f64,
    /// `−∫₀ᵗ T_s(A(−f))(x) ds`, a weaker lower bound that also must hold.
    pub lower_reflected: f64,
    pub tol: f64,
    pub pass: bool,
    /// Both gaps exceed ten tolerances.
    pub strict: bool,
}

fn dynkin_level(
    family: &CharacteristicFamily,
    f: &dyn SmoothFunction,
    x: &[f64],
    t: f64,
    cfg: &CheckConfig,
) -> Result<[f64; 4]> {
    let grid = cfg.sample(f)?;
    let traj = cfg.evolve(family, &grid, t)?;
    let middle = traj.last().interpolate(x)? - grid.interpolate(x)?;
    let (a_f, _) = envelope_on_grid(family, f, &grid)?;
    let (a_neg_f, _) = envelope_on_grid(family, &Negated(f), &grid)?;
    let minus_a_f = a_f.map(|v| -v)?;
    let integral = |g: &GridFunction| -> Result<f64> {
        let tr = cfg.evolve(family, g, t)?;
        Ok(trapezoid(&tr.path_at(x)?, tr.dt))
    };
    Ok([-integral(&minus_a_f)?, middle, integral(&a_f)?, -integral(&a_neg_f)?])
}

/// Checks `−∫₀ᵗ T_s(−Af) ds ≤ T_t f − f ≤ ∫₀ᵗ T_s(Af) ds` at `x`.
pub fn dynkin_sandwich_check(
    family: &CharacteristicFamily,
    f: &dyn SmoothFunction,
    x: &[f64],
    t: f64,
    cfg: &CheckConfig,
) -> Result<DynkinReport> {
    if t == 0.0 {
        return Ok(DynkinReport {
            lower: 0.0,
            middle: 0.0,
            upper: 0.0,
            lower_reflected: 0.0,
            tol: cfg.tol_floor,
            pass: true,
            strict: false,
        });
    }
    let coarse = dynkin_level(family, f, x, t, cfg)?;
    let fine = dynkin_level(family, f, x, t, &cfg.refined())?;
    let tol = cfg.tolerance(coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()));
    let [lower, middle, upper, lower_reflected] = fine;
    Ok(DynkinReport {
        lower,
        middle,
        upper,
        lower_reflected,
        tol,
        pass: lower - tol <= middle && middle <= upper + tol && lower_reflected - tol <= middle,
        strict: middle - lower > 10.0 * tol && upper - middle > 10.0 * tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeRow {
    pub t: f64,
    pub s: f64,
    /// `−T_t(−Af)(x)`.
    pub lower: f64,
    /// `(T_{t+s} f(x) − T_t f(x)) / s`.
    pub slope: f64,
    /// `T_t(Af)(x)`.
    pub upper: f64,
    /// Refinement tolerance plus the variation of both bounds over `[t, t+s]`.
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub rows: Vec<SlopeRow>,
    pub pass: bool,
}

struct SlopeLevel {
    f: SemigroupTrajectory,
    a_f: SemigroupTrajectory,
    minus_a_f: SemigroupTrajectory,
}

impl SlopeLevel {
    fn new(family: &CharacteristicFamily, f: &dyn SmoothFunction, horizon: f64, cfg: &CheckConfig) -> Result<Self> {
        let grid = cfg.sample(f)?;
        let (a_f, _) = envelope_on_grid(family, f, &grid)?;
        let minus = a_f.map(|v| -v)?;
        Ok(Self {
            f: cfg.evolve(family, &grid, horizon)?,
            a_f: cfg.evolve(family, &a_f, horizon)?,
            minus_a_f: cfg.evolve(family, &minus, horizon)?,
        })
    }

    /// `(lower, slope, upper, variation)`.
    fn row(&self, x: &[f64], t: f64, s: f64) -> Result<[f64; 4]> {
        let (i, j) = (self.f.frame_index(t)?, self.f.frame_index(t + s)?);
        let at = |tr: &SemigroupTrajectory, k: usize| tr.frames[k].interpolate(x);
        let slope = (at(&self.f, j)? - at(&self.f, i)?) / s;
        let upper = at(&self.a_f, i)?;
        let lower = -at(&self.minus_a_f, i)?;
        let mut variation: f64 = 0.0;
        for k in i..=j {
            variation = variation.max((at(&self.a_f, k)? - upper).abs());
            variation = variation.max((-at(&self.minus_a_f, k)? - lower).abs());
        }
        Ok([lower, slope, upper, variation])
    }
}

/// Checks `−T_t(−Af)(x) ≤ (T_{t+s}f(x) − T_t f(x)) / s ≤ T_t(Af)(x)` for every
/// `t ∈ t_grid` and `s ∈ s_list` (all multiples of `cfg.dt`; `t = 0` allowed).
pub fn slope_bounds_check(
    family: &CharacteristicFamily,
    f: &dyn SmoothFunction,
    x: &[f64],
    t_grid: &[f64],
    s_list: &[f64],
    cfg: &CheckConfig,
) -> Result<SlopeReport> {
    if s_list.iter().any(|&s| !(s > 0.0)) || t_grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument("times must be nonnegative and s positive".into()));
    }
    let horizon = t_grid.iter().copied().fold(0.0, f64::max) + s_list.iter().copied().fold(0.0, f64::max);
    let coarse = SlopeLevel::new(family, f, horizon, cfg)?;
    let fine = SlopeLevel::new(family, f, horizon, &cfg.refined())?;
    let mut rows = Vec::new();
    for &t in t_grid {
        for &s in s_list {
            let c = coarse.row(x, t, s)?;
            let [lower, slope, upper, variation] = fine.row(x, t, s)?;
            let tol = cfg.tolerance((0..3).map(|k| (c[k] - [lower, slope, upper][k]).abs())) + variation.max(c[3]);
            rows.push(SlopeRow {
                t,
                s,
                lower,
                slope,
                upper,
                tol,
                pass: lower - tol <= slope && slope <= upper + tol,
            });
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(SlopeReport { rows, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FavardReport {
    /// Grid sup of `|Af|`.
    pub generator_norm: f64,
    /// `sup_t ‖T_t f − f‖_∞ / t` over the time grid.
    pub favard_sup: f64,
    /// `|favard_sup − generator_norm| / generator_norm` (0 when both vanish).
    pub relative_gap: f64,
    /// `max_{s,t} ‖T_t f − T_s f‖_∞ − ‖Af‖_∞ |t − s|`.
    pub lipschitz_excess: f64,
    pub tol: f64,
    pub favard_pass: bool,
    pub lipschitz_pass: bool,
}

fn favard_level(
    family: &CharacteristicFamily,
    f: &dyn SmoothFunction,
    t_grid: &[f64],
    cfg: &CheckConfig,
) -> Result<(f64, f64, f64)> {
    let grid = cfg.sample(f)?;
    let (a_f, _) = envelope_on_grid(family, f, &grid)?;
    let norm = a_f.sup_norm();
    let horizon = t_grid.iter().copied().fold(0.0, f64::max);
    let traj = cfg.evolve(family, &grid, horizon)?;
    let frames = t_grid.iter().map(|&t| traj.frame_index(t)).collect::<Result<Vec<_>>>()?;
    let favard = t_grid
        .iter()
        .zip(&frames)
        .map(|(&t, &k)| traj.frames[k].sup_distance(&grid) / t)
        .fold(0.0, f64::max);
    let mut excess = f64::NEG_INFINITY;
    for (a, &ka) in t_grid.iter().zip(&frames) {
        for (b, &kb) in t_grid.iter().zip(&frames) {
            excess = excess.max(traj.frames[ka].sup_distance(&traj.frames[kb]) - norm * (a - b).abs());
        }
    }
    Ok((norm, favard, excess))
}

/// Compares `‖Af‖_∞` with `sup_t ‖T_t f − f‖_∞ / t` and checks the time
/// Lipschitz bound pairwise on `t_grid` (positive multiples of `cfg.dt`).
pub fn lipschitz_favard_check(
    family: &CharacteristicFamily,
    f: &dyn SmoothFunction,
    t_grid: &[f64],
    relative_tolerance: f64,
    cfg: &CheckConfig,
) -> Result<FavardReport> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("t_grid must contain positive times".into()));
    }
    let (n0, f0, e0) = favard_level(family, f, t_grid, cfg)?;
    let (norm, favard, excess) = favard_level(family, f, t_grid, &cfg.refined())?;
    let tol = cfg.tolerance([(n0 - norm).abs(), (f0 - favard).abs(), (e0 - excess).abs()]);
    let relative_gap = if norm == 0.0 && favard == 0.0 { 0.0 } else { (favard - norm).abs() / norm.max(favard) };
    Ok(FavardReport {
        generator_norm: norm,
        favard_sup: favard,
        relative_gap,
        lipschitz_excess: excess,
        tol,
        favard_pass: relative_gap <= relative_tolerance,
        lipschitz_pass: excess <= tol,
    })
}
