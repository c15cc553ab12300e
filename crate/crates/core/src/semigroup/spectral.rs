//! Fourier-multiplier steps `e^{dt·A}` for constant-coefficient triplets.
//!
//! Data are embedded in a padded periodic box of `N = next_pow2(2n)` points
//! per axis, extended by constant values, and blended to a common constant
//! over a taper band of `5%` of `N` at each end so that the periodic wrap is
//! smooth. The influence of the band on the data is bounded by a tail
//! estimate of the step's transition law; a step whose bound exceeds the
//! tolerance is refused.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::{self, FftPlan};
use crate::grid::GridFunction;
use crate::linalg::{self, MAX_DIM};
use crate::triplets::LevyTriplet;

pub const DEFAULT_LEAK_TOLERANCE: f64 = 1e-6;
const TAPER_FRACTION: f64 = 0.05;

/// How the symbol is discretised on the padded lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolDiscretization {
    /// Each factor is the symbol of a lattice Markov chain: drift and jumps
    /// become linear-interpolation shifts and diffusion a nearest-neighbour
    /// random walk. The step is a positive, constant-preserving kernel.
    #[default]
    Lattice,
    /// `e^{−dt·q(ξ)}` with the continuous symbol; spectrally accurate but not
    /// positivity preserving.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub discretization: SymbolDiscretization,
    pub leak_tolerance: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { discretization: SymbolDiscretization::Lattice, leak_tolerance: DEFAULT_LEAK_TOLERANCE }
    }
}

/// Padded periodic lattice shared by all steps on one grid geometry.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    padded: usize,
    offset: usize,
    band: usize,
    h: f64,
    plan: FftPlan,
}

impl SpectralGrid {
    pub fn new(like: &GridFunction) -> Self {
        let n = like.n();
        let padded = (2 * n).next_power_of_two();
        let band = ((TAPER_FRACTION * padded as f64).ceil() as usize).max(1);
        Self {
            dim: like.dim(),
            n,
            padded,
            offset: (padded - n) / 2,
            band,
            h: like.h(),
            plan: FftPlan::new(padded),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn padded_len(&self) -> usize {
        self.padded
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Distance from the data to the taper band.
    pub fn clearance(&self) -> f64 {
        (self.offset - self.band) as f64 * self.h
    }

    fn total(&self) -> usize {
        self.padded.pow(self.dim as u32)
    }

    /// Signed frequency index of FFT bin `k`.
    fn signed(&self, k: usize) -> f64 {
        if k < self.padded / 2 {
            k as f64
        } else {
            k as f64 - self.padded as f64
        }
    }

    /// Lattice angle `ξ h` of FFT bin `k`.
    fn angle(&self, k: usize) -> f64 {
        2.0 * core::f64::consts::PI * self.signed(k) / self.padded as f64
    }

    fn taper_weight(&self, j: usize) -> f64 {
        let from_end = j.min(self.padded - 1 - j);
        if from_end >= self.band {
            return 1.0;
        }
        let u = from_end as f64 / self.band as f64;
        u * u * (3.0 - 2.0 * u)
    }

    fn source_index(&self, j: usize) -> usize {
        (j as isize - self.offset as isize).clamp(0, self.n as isize - 1) as usize
    }

    /// Pad, taper and transform.
    pub fn transform(&self, f: &GridFunction) -> Vec<Complex64> {
        debug_assert_eq!(f.n(), self.n);
        let v = f.values();
        let (n, np) = (self.n, self.padded);
        let mut data = vec![Complex64::new(0.0, 0.0); self.total()];
        if self.dim == 1 {
            let m = 0.5 * (v[0] + v[n - 1]);
            for (j, slot) in data.iter_mut().enumerate() {
                let lam = self.taper_weight(j);
                slot.re = (1.0 - lam) * m + lam * v[self.source_index(j)];
            }
            self.plan.forward(&mut data);
        } else {
            let edge: Vec<f64> = (0..n * n)
                .filter(|k| {
                    let (i, j) = (k / n, k % n);
                    i == 0 || j == 0 || i == n - 1 || j == n - 1
                })
                .map(|k| v[k])
                .collect();
            let m = linalg::pairwise_sum(&edge) / edge.len() as f64;
            for a in 0..np {
                let (la, sa) = (self.taper_weight(a), self.source_index(a));
                for b in 0..np {
                    let lam = la * self.taper_weight(b);
                    data[a * np + b].re = (1.0 - lam) * m + lam * v[sa * n + self.source_index(b)];
                }
            }
            fft::forward_2d(&self.plan, &mut data);
        }
        data
    }

    /// Multiply a transformed datum, transform back and extract the data box.
    pub fn apply(&self, spectrum: &[Complex64], multiplier: &Multiplier) -> Vec<f64> {
        let mut data: Vec<Complex64> = spectrum.iter().zip(&multiplier.values).map(|(a, b)| a * b).collect();
        let (n, np, o) = (self.n, self.padded, self.offset);
        if self.dim == 1 {
            self.plan.inverse(&mut data);
            (0..n).map(|i| data[o + i].re).collect()
        } else {
            fft::inverse_2d(&self.plan, &mut data);
            (0..n * n).map(|k| data[(o + k / n) * np + o + k % n].re).collect()
        }
    }
}

/// Precomputed multiplier of one triplet at one time step.
#[derive(Debug, Clone)]
pub struct Multiplier {
    values: Vec<Complex64>,
    killing_factor: f64,
    leak: f64,
    discretization: SymbolDiscretization,
}

impl Multiplier {
    pub fn new(triplet: &LevyTriplet, grid: &SpectralGrid, dt: f64, cfg: &SpectralConfig) -> Result<Self> {
        if triplet.dim() != grid.dim {
            return Err(Error::DimensionMismatch { expected: grid.dim, got: triplet.dim() });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("dt = {dt} must be positive")));
        }
        let leak = leak_bound(triplet, grid, dt, cfg.discretization);
        if leak > cfg.leak_tolerance {
            return Err(Error::PaddingInsufficient { leak, tolerance: cfg.leak_tolerance });
        }
        let values = match cfg.discretization {
            SymbolDiscretization::Lattice => lattice_multiplier(triplet, grid, dt)?,
            SymbolDiscretization::Continuous => continuous_multiplier(triplet, grid, dt),
        };
        Ok(Self { values, killing_factor: (-triplet.killing() * dt).exp(), leak, discretization: cfg.discretization })
    }

    /// Tail bound of the transition law beyond the padding clearance.
    pub fn leak(&self) -> f64 {
        self.leak
    }

    /// Apply to a transformed datum; `range` is `(min f, max f)` of the input.
    pub fn apply(&self, grid: &SpectralGrid, spectrum: &[Complex64], range: (f64, f64)) -> Vec<f64> {
        let mut out = grid.apply(spectrum, self);
        if self.discretization == SymbolDiscretization::Lattice {
            // The lattice step is a sub-Markov kernel times e^{-c dt}, so the
            // exact output lies in this range; clamping only removes rounding.
            let (lo, hi) = (self.killing_factor * range.0, self.killing_factor * range.1);
            out.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        }
        out
    }
}

fn value_range(f: &GridFunction) -> (f64, f64) {
    f.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// `e^{iθ·⌊s⌋}((1−λ) + λe^{iθ})` per axis: linear interpolation at offset `s·h`.
fn shift_multiplier(angles: &[f64], s: &[f64]) -> Complex64 {
    let mut m = Complex64::new(1.0, 0.0);
    for (&theta, &sa) in angles.iter().zip(s) {
        let k = sa.floor();
        let lam = sa - k;
        let whole = Complex64::from_polar(1.0, theta * k);
        m *= whole * ((1.0 - lam) + lam * Complex64::from_polar(1.0, theta));
    }
    m
}

fn lattice_multiplier(triplet: &LevyTriplet, grid: &SpectralGrid, dt: f64) -> Result<Vec<Complex64>> {
    let d = grid.dim;
    let h = grid.h;
    let q = triplet.diffusion();
    if d == 2 && (q[0] < q[1].abs() || q[3] < q[1].abs()) {
        return Err(Error::NonMonotoneStencil);
    }
    let comp = triplet.jumps().compensator_drift();
    let mut drift_shift = [0.0; MAX_DIM];
    for a in 0..d {
        drift_shift[a] = (triplet.drift()[a] - comp[a]) * dt / h;
    }
    let jumps: Vec<([f64; MAX_DIM], f64)> = triplet
        .jumps()
        .iter()
        .map(|(y, w)| {
            let mut s = [0.0; MAX_DIM];
            for a in 0..d {
                s[a] = y[a] / h;
            }
            (s, w)
        })
        .collect();
    let kill = (-triplet.killing() * dt).exp();
    let np = grid.padded;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.total()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let mut angles = [0.0; MAX_DIM];
        if d == 1 {
            angles[0] = grid.angle(idx);
        } else {
            angles[0] = grid.angle(idx / np);
            angles[1] = grid.angle(idx % np);
        }
        if idx == 0 {
            *slot = Complex64::new(kill, 0.0);
            continue;
        }
        let ang = &angles[..d];
        let diffusion = if d == 1 {
            q[0] * (ang[0].cos() - 1.0) / (h * h)
        } else {
            let off = q[1].abs();
            let diag = if q[1] >= 0.0 { ang[0] + ang[1] } else { ang[0] - ang[1] };
            ((q[0] - off) * (ang[0].cos() - 1.0) + (q[3] - off) * (ang[1].cos() - 1.0) + off * (diag.cos() - 1.0))
                / (h * h)
        };
        let mut jump_exponent = Complex64::new(0.0, 0.0);
        for (s, w) in &jumps {
            jump_exponent += *w * (1.0 - shift_multiplier(ang, &s[..d]));
        }
        let exponent = Complex64::new(diffusion * dt, 0.0) - jump_exponent * dt;
        *slot = kill * shift_multiplier(ang, &drift_shift[..d]) * exponent.exp();
    }
    Ok(out)
}

fn continuous_multiplier(triplet: &LevyTriplet, grid: &SpectralGrid, dt: f64) -> Vec<Complex64> {
    let d = grid.dim;
    let np = grid.padded;
    let scale = 1.0 / grid.h;
    (0..grid.total())
        .map(|idx| {
            let xi = if d == 1 {
                [grid.angle(idx) * scale, 0.0]
            } else {
                [grid.angle(idx / np) * scale, grid.angle(idx % np) * scale]
            };
            (-dt * triplet.symbol(&xi[..d])).exp()
        })
        .collect()
}

/// `P(N > k)` for `N ~ Poisson(mean)`, summed from the tail.
fn poisson_tail(mean: f64, k: u64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    // log of the first tail term, e^{-μ} μ^{k+1} / (k+1)!
    let mut log_term = -mean;
    for j in 1..=k + 1 {
        log_term += (mean / j as f64).ln();
    }
    let mut term = log_term.exp();
    let mut sum = 0.0;
    let mut j = k + 1;
    while term > 1e-300 && sum + term != sum {
        sum += term;
        j += 1;
        term *= mean / j as f64;
    }
    sum.min(1.0)
}

/// Two-sided Chernoff bound for a symmetric lattice walk with rate `mu`
/// per direction (time integrated) and step `h`.
fn walk_tail(mu: f64, h: f64, r: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    let a = r / (2.0 * mu * h);
    let exponent = -(r / h) * a.asinh() + 2.0 * mu * ((1.0 + a * a).sqrt() - 1.0);
    (2.0 * exponent.exp()).min(1.0)
}

fn gaussian_tail(var: f64, r: f64) -> f64 {
    if var <= 0.0 {
        return 0.0;
    }
    libm::erfc(r / (2.0 * var).sqrt())
}

/// Upper bound on the probability that one step moves mass farther than the
/// padding clearance (less the deterministic drift reach).
pub fn leak_bound(triplet: &LevyTriplet, grid: &SpectralGrid, dt: f64, mode: SymbolDiscretization) -> f64 {
    let d = grid.dim;
    let h = grid.h;
    let comp = triplet.jumps().compensator_drift();
    let b_eff: Vec<f64> = (0..d).map(|a| triplet.drift()[a] - comp[a]).collect();
    let reach = linalg::norm(&b_eff) * dt + (d as f64).sqrt() * h;
    let r = grid.clearance() - reach;
    if r <= 0.0 {
        return 1.0;
    }
    let q = triplet.diffusion();
    let jumps = triplet.jumps();
    let has_diffusion = (0..d).any(|a| q[a * d + a] > 0.0);
    // Split the radius between the two parts only when both are present.
    let (r_diff, r_jump) = match (has_diffusion, jumps.is_empty()) {
        (true, false) => (0.5 * r, 0.5 * r),
        _ => (r, r),
    };
    let per_axis = r_diff / (d as f64).sqrt();
    let diffusive: f64 = (0..d)
        .map(|a| {
            let qa = q[a * d + a];
            match mode {
                SymbolDiscretization::Lattice => walk_tail(qa * dt / (2.0 * h * h), h, per_axis),
                SymbolDiscretization::Continuous => gaussian_tail(qa * dt, per_axis),
            }
        })
        .sum();
    let jump_tail = if jumps.is_empty() {
        0.0
    } else {
        let ymax = jumps.max_jump() + (d as f64).sqrt() * h;
        let count = (r_jump / ymax).floor() as u64;
        poisson_tail(jumps.total_mass() * dt, count)
    };
    (diffusive + jump_tail).min(1.0)
}

/// Precomputed linear step for one triplet.
#[derive(Debug, Clone)]
pub struct LinearStepper {
    grid: SpectralGrid,
    multiplier: Multiplier,
}

impl LinearStepper {
    pub fn new(triplet: &LevyTriplet, like: &GridFunction, dt: f64, cfg: &SpectralConfig) -> Result<Self> {
        let grid = SpectralGrid::new(like);
        let multiplier = Multiplier::new(triplet, &grid, dt, cfg)?;
        Ok(Self { grid, multiplier })
    }

    pub fn leak(&self) -> f64 {
        self.multiplier.leak()
    }

    pub fn step(&self, f: &GridFunction) -> Result<GridFunction> {
        let spectrum = self.grid.transform(f);
        f.with_values(self.multiplier.apply(&self.grid, &spectrum, value_range(f)))
    }
}

/// `e^{dt·A_θ} f` with the default (lattice) discretisation.
pub fn linear_levy_step(triplet: &LevyTriplet, f: &GridFunction, dt: f64) -> Result<GridFunction> {
    linear_levy_step_with(triplet, f, dt, &SpectralConfig::default())
}

pub fn linear_levy_step_with(
    triplet: &LevyTriplet,
    f: &GridFunction,
    dt: f64,
    cfg: &SpectralConfig,
) -> Result<GridFunction> {
    LinearStepper::new(triplet, f, dt, cfg)?.step(f)
}

/// Pointwise supremum of linear steps over a translation-invariant family.
#[derive(Debug, Clone)]
pub struct NisioStepper {
    grid: SpectralGrid,
    multipliers: Vec<Multiplier>,
}

impl NisioStepper {
    pub fn new(triplets: &[LevyTriplet], like: &GridFunction, dt: f64, cfg: &SpectralConfig) -> Result<Self> {
        let grid = SpectralGrid::new(like);
        let multipliers = triplets.iter().map(|t| Multiplier::new(t, &grid, dt, cfg)).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, multipliers })
    }

    pub fn max_leak(&self) -> f64 {
        self.multipliers.iter().map(Multiplier::leak).fold(0.0, f64::max)
    }

    /// One step; returns the new values and the first maximising member per node.
    pub fn step(&self, f: &GridFunction) -> Result<(GridFunction, Vec<usize>)> {
        let spectrum = self.grid.transform(f);
        let range = value_range(f);
        let mut best = self.multipliers[0].apply(&self.grid, &spectrum, range);
        let mut argmax = vec![0usize; best.len()];
        for (theta, m) in self.multipliers.iter().enumerate().skip(1) {
            let cand = m.apply(&self.grid, &spectrum, range);
            for ((b, a), c) in best.iter_mut().zip(argmax.iter_mut()).zip(cand) {
                if c > *b {
                    *b = c;
                    *a = theta;
                }
            }
        }
        Ok((f.with_values(best)?, argmax))
    }
}
