//! Worst-case expectations over piecewise-constant control schedules, by
//! Monte Carlo.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;
use rand_core::RngCore;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::generator::{first_argmax, TestFunction};
use crate::grid::GridFunction;
use crate::linalg::{self, pairwise_sum, MAX_DIM};
use crate::rng::stream_rng;
use crate::triplets::{is_compensated, CharacteristicFamily, LevyTriplet};

/// Schedules beyond this count are refused in exhaustive mode.
pub const SCHEDULE_CAP: u128 = 10_000;

/// `θ_k` on `[t_k, t_{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    breakpoints: Vec<f64>,
    labels: Vec<usize>,
}

impl ControlSchedule {
    pub fn new(breakpoints: Vec<f64>, labels: Vec<usize>, family_len: usize) -> Result<Self> {
        if breakpoints.len() < 2 || labels.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidArgument("need K+1 breakpoints for K labels, K >= 1".into()));
        }
        if breakpoints[0] != 0.0 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) || !breakpoints.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must start at 0 and increase strictly".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= family_len) {
            return Err(Error::InvalidArgument(format!("label {bad} outside an index set of size {family_len}")));
        }
        Ok(Self { breakpoints, labels })
    }

    /// `K` equal intervals on `[0, T]`.
    pub fn uniform(t_final: f64, labels: Vec<usize>, family_len: usize) -> Result<Self> {
        let k = labels.len();
        let mut breakpoints: Vec<f64> = (0..=k).map(|i| t_final * i as f64 / k.max(1) as f64).collect();
        if let Some(last) = breakpoints.last_mut() {
            *last = t_final;
        }
        Self::new(breakpoints, labels, family_len)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).zip(self.labels.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
    /// The maximising schedule; `None` for the feedback value of DP mode.
    pub schedule: Option<ControlSchedule>,
}

/// Mean and standard error with pairwise summation.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// One increment of the Lévy process with a conservative triplet over `dt`:
/// compensated drift, Gaussian part, and independent Poisson counts per atom.
pub fn sample_levy_increment<R: RngCore + ?Sized>(triplet: &LevyTriplet, dt: f64, rng: &mut R) -> Result<[f64; MAX_DIM]> {
    if triplet.killing() != 0.0 {
        return Err(Error::NotConservative(triplet.killing()));
    }
    let d = triplet.dim();
    let mut out = [0.0; MAX_DIM];
    for (o, b) in out.iter_mut().zip(triplet.drift()) {
        *o = b * dt;
    }
    let q = triplet.diffusion();
    if q.iter().any(|&v| v != 0.0) {
        let root = linalg::psd_sqrt(q, d);
        let mut z = [0.0; MAX_DIM];
        for zi in z.iter_mut().take(d) {
            *zi = StandardNormal.sample(rng);
        }
        let s = dt.sqrt();
        for i in 0..d {
            for j in 0..d {
                out[i] += s * root[i * d + j] * z[j];
            }
        }
    }
    for (y, w) in triplet.jumps().iter() {
        let mean = w * dt;
        if mean <= 0.0 {
            continue;
        }
        let count: f64 = Poisson::new(mean).map_err(|e| Error::InvalidArgument(format!("{e}")))?.sample(rng);
        // Small atoms: compensate exactly in the drift.
        let comp = if is_compensated(y) { mean } else { 0.0 };
        for (o, yi) in out.iter_mut().zip(y) {
            *o += (count - comp) * yi;
        }
    }
    Ok(out)
}

fn check_family(family: &CharacteristicFamily) -> Result<&[LevyTriplet]> {
    let trips = family.invariant_triplets()?;
    if let Some(t) = trips.iter().find(|t| !t.is_conservative()) {
        return Err(Error::NotConservative(t.killing()));
    }
    Ok(trips)
}

/// `f(x + X_T)` along one path. Path `p` always draws from stream `p`, so
/// results do not depend on evaluation order.
pub fn path_value(
    family: &CharacteristicFamily,
    schedule: &ControlSchedule,
    f: TestFunction<'_>,
    x: &[f64],
    seed: u64,
    path: u64,
) -> Result<f64> {
    let trips = check_family(family)?;
    let d = family.dim();
    let mut rng = stream_rng(seed, path);
    let mut pos = [0.0; MAX_DIM];
    pos[..d].copy_from_slice(&x[..d]);
    for (dt, theta) in schedule.intervals() {
        let inc = sample_levy_increment(&trips[theta], dt, &mut rng)?;
        for i in 0..d {
            pos[i] += inc[i];
        }
    }
    f.value(&pos[..d])
}

fn check_inputs(family: &CharacteristicFamily, f: &TestFunction<'_>, x: &[f64], n_paths: usize) -> Result<()> {
    check_family(family)?;
    if f.dim() != family.dim() || x.len() != family.dim() {
        return Err(Error::DimensionMismatch { expected: family.dim(), got: if x.len() != family.dim() { x.len() } else { f.dim() } });
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be positive".into()));
    }
    Ok(())
}

pub fn value_under_schedule(
    family: &CharacteristicFamily,
    schedule: &ControlSchedule,
    f: TestFunction<'_>,
    x: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_inputs(family, &f, x, n_paths)?;
    let values = (0..n_paths as u64).map(|p| path_value(family, schedule, f, x, seed, p)).collect::<Result<Vec<_>>>()?;
    let (value, stderr) = mean_and_stderr(&values);
    Ok(McEstimate { value, stderr, n_paths, schedule: Some(schedule.clone()) })
}

/// All `|I|^K` schedules on `K` equal intervals, in lexicographic order.
pub fn enumerate_schedules(family_len: usize, k: usize, t_final: f64) -> Result<Vec<ControlSchedule>> {
    let count = (family_len as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if count > SCHEDULE_CAP {
        return Err(Error::BudgetExceeded { count, cap: SCHEDULE_CAP });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut labels = vec![0usize; k];
    for _ in 0..count {
        out.push(ControlSchedule::uniform(t_final, labels.clone(), family_len)?);
        for slot in labels.iter_mut().rev() {
            *slot += 1;
            if *slot < family_len {
                break;
            }
            *slot = 0;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum WorstCaseMode {
    /// Maximise over every schedule; paths are shared across schedules.
    Exhaustive,
    /// Backward induction on a value grid with `samples` empirical
    /// increments per member and stage.
    DynamicProgramming { grid: GridFunction, samples: usize },
}

/// First maximiser of the estimates; ties keep the earlier schedule.
pub fn best_of(estimates: Vec<McEstimate>) -> McEstimate {
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let k = first_argmax(&values);
    estimates.into_iter().nth(k).expect("nonempty")
}

#[allow(clippy::too_many_arguments)]
pub fn worst_case_value(
    family: &CharacteristicFamily,
    f: TestFunction<'_>,
    x: &[f64],
    t_final: f64,
    k: usize,
    n_paths: usize,
    seed: u64,
    mode: &WorstCaseMode,
) -> Result<McEstimate> {
    check_inputs(family, &f, x, n_paths)?;
    if k == 0 || !(t_final > 0.0) {
        return Err(Error::InvalidArgument("need K >= 1 and T > 0".into()));
    }
    match mode {
        WorstCaseMode::Exhaustive => {
            let schedules = enumerate_schedules(family.len(), k, t_final)?;
            let estimates = schedules
                .iter()
                .map(|s| value_under_schedule(family, s, f, x, n_paths, seed))
                .collect::<Result<Vec<_>>>()?;
            Ok(best_of(estimates))
        }
        WorstCaseMode::DynamicProgramming { grid, samples } => dp_value(family, f, x, t_final, k, *samples, seed, grid),
    }
}

/// Feedback value: `V_K = f`, `V_k(z) = max_θ mean_j V_{k+1}(z + ΔX_θ^j)`.
/// Translation invariance lets every node reuse the same increment samples.
#[allow(clippy::too_many_arguments)]
fn dp_value(
    family: &CharacteristicFamily,
    f: TestFunction<'_>,
    x: &[f64],
    t_final: f64,
    k: usize,
    samples: usize,
    seed: u64,
    grid: &GridFunction,
) -> Result<McEstimate> {
    let trips = check_family(family)?;
    let d = family.dim();
    if grid.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: grid.dim() });
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let dt = t_final / k as f64;
    let mut value = grid.with_values((0..grid.len()).map(|i| f.value(&grid.point(i)[..d])).collect::<Result<_>>()?)?;
    let mut top = (0.0, 0.0);
    for stage in (0..k).rev() {
        // Fresh increments per stage and member.
        let incs: Vec<Vec<[f64; MAX_DIM]>> = (0..trips.len())
            .map(|theta| {
                let stream = ((stage * trips.len() + theta) as u64) << 32;
                (0..samples as u64)
                    .map(|j| sample_levy_increment(&trips[theta], dt, &mut stream_rng(seed, stream + j)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let expect = |z: &[f64], theta: usize| -> Result<(f64, f64)> {
            let vals = incs[theta]
                .iter()
                .map(|inc| {
                    let mut p = [0.0; MAX_DIM];
                    for i in 0..d {
                        p[i] = z[i] + inc[i];
                    }
                    value.interpolate(&p[..d])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(mean_and_stderr(&vals))
        };
        if stage == 0 {
            let est = (0..trips.len()).map(|th| expect(x, th)).collect::<Result<Vec<_>>>()?;
            let best = first_argmax(&est.iter().map(|e| e.0).collect::<Vec<_>>());
            top = est[best];
            break;
        }
        let mut next = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let z = grid.point(i);
            let mut best = f64::NEG_INFINITY;
            for theta in 0..trips.len() {
                best = best.max(expect(&z[..d], theta)?.0);
            }
            next.push(best);
        }
        value = value.with_values(next)?;
    }
    Ok(McEstimate { value: top.0, stderr: top.1, n_paths: samples, schedule: None })
}

/// Two-sample Kolmogorov–Smirnov statistic; ties are stepped together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value factor for the two-sample KS test at level 0.001.
pub const KS_FACTOR: f64 = 1.949;

/// `c·√((n+m)/(nm))`.
pub fn ks_threshold(n: usize, m: usize) -> f64 {
    KS_FACTOR * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = mean_and_stderr(a);
    let (mb, _) = mean_and_stderr(b);
    let cov: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let va: Vec<f64> = a.iter().map(|x| (x - ma) * (x - ma)).collect();
    let vb: Vec<f64> = b.iter().map(|y| (y - mb) * (y - mb)).collect();
    let denom = (pairwise_sum(&va) * pairwise_sum(&vb)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        pairwise_sum(&cov) / denom
    }
}

/// Which equal-length intervals are compared for stationarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    SameLabel,
    /// Ignore labels; a schedule that switches members should fail.
    AnyLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTest {
    pub first: usize,
    pub second: usize,
    pub coordinate: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleIncrements {
    pub schedule: ControlSchedule,
    /// KS comparisons of equal-length intervals.
    pub stationarity: Vec<PairTest>,
    /// Correlations of disjoint intervals against `3/√n`.
    pub independence: Vec<PairTest>,
    pub stationary: bool,
    pub independent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementsReport {
    pub rows: Vec<ScheduleIncrements>,
    pub pass: bool,
}

/// Stationarity and independence of increments under one fixed schedule.
pub fn check_schedule_increments(
    family: &CharacteristicFamily,
    schedule: &ControlSchedule,
    n_paths: usize,
    seed: u64,
    pairing: Pairing,
) -> Result<ScheduleIncrements> {
    let trips = check_family(family)?;
    let d = family.dim();
    let m = schedule.labels().len();
    // samples[interval][coordinate][path]
    let mut samples = vec![vec![Vec::with_capacity(n_paths); d]; m];
    for p in 0..n_paths as u64 {
        let mut rng = stream_rng(seed, p);
        for (k, (dt, theta)) in schedule.intervals().enumerate() {
            let inc = sample_levy_increment(&trips[theta], dt, &mut rng)?;
            for c in 0..d {
                samples[k][c].push(inc[c]);
            }
        }
    }
    let lengths: Vec<(f64, usize)> = schedule.intervals().collect();
    let mut stationarity = Vec::new();
    let mut independence = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let same_len = (lengths[a].0 - lengths[b].0).abs() <= 1e-12 * lengths[a].0.max(lengths[b].0);
            let comparable = same_len && (pairing == Pairing::AnyLabel || lengths[a].1 == lengths[b].1);
            for c in 0..d {
                if comparable {
                    let statistic = ks_two_sample(&samples[a][c], &samples[b][c]);
                    let threshold = ks_threshold(n_paths, n_paths);
                    stationarity.push(PairTest { first: a, second: b, coordinate: c, statistic, threshold, pass: statistic < threshold });
                }
                let rho = correlation(&samples[a][c], &samples[b][c]);
                let threshold = 3.0 / (n_paths as f64).sqrt();
                independence.push(PairTest { first: a, second: b, coordinate: c, statistic: rho.abs(), threshold, pass: rho.abs() < threshold });
            }
        }
    }
    Ok(ScheduleIncrements {
        schedule: schedule.clone(),
        stationary: stationarity.iter().all(|t| t.pass),
        independent: independence.iter().all(|t| t.pass),
        stationarity,
        independence,
    })
}

/// Runs [`check_schedule_increments`] on the constant schedule of every
/// member, four equal intervals on `[0, T]`.
pub fn increments_property_check(family: &CharacteristicFamily, t_final: f64, n_paths: usize, seed: u64) -> Result<IncrementsReport> {
    let rows = (0..family.len())
        .map(|theta| {
            let s = ControlSchedule::uniform(t_final, vec![theta; 4], family.len())?;
            check_schedule_increments(family, &s, n_paths, seed.wrapping_add(theta as u64), Pairing::SameLabel)
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.stationary && r.independent);
    Ok(IncrementsReport { rows, pass })
}
