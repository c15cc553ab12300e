//! Config validation, task dispatch and artifact writing.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use sublev_core::error::Error as CoreError;
use sublev_core::functions::{DynFunction, SmoothFunction};
use sublev_core::generator::{
    apply_sublinear_generator, check_positive_maximum_principle, conservativeness_check, tightness_test_function_check,
    ScanBox, TestFunction,
};
use sublev_core::grid::{Extension, GridFunction, MIN_POINTS};
use sublev_core::hjb::{hjb_solve, viscosity_touch_test, SchemeConfig, ViscosityConfig};
use sublev_core::rng::{stream_rng, uniform};
use sublev_core::semigroup::{
    drift_uncertainty_exact, dynkin_sandwich_check, evolve_with, lipschitz_favard_check, slope_bounds_check, CheckConfig,
    Scheme, SemigroupTrajectory, SpectralConfig, SymbolDiscretization,
};
use sublev_core::triplets::{is_tight, CharacteristicFamily, Label, LevyTriplet};
use sublev_core::uncertainty_mc::{
    best_of, enumerate_schedules, mean_and_stderr, path_value, worst_case_value, McEstimate, WorstCaseMode,
};

use crate::builtins::{builtin_datum, builtin_family};
use crate::config::*;
use crate::diag;
use crate::output::{num, trajectory_plots, write_frames, write_manifest, CheckRecord, RunManifest, Table};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(String),
    Runtime(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Runtime(m) => m,
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::CflViolation { .. }
            | CoreError::BudgetExceeded { .. }
            | CoreError::PaddingInsufficient { .. }
            | CoreError::NonMonotoneStencil
            | CoreError::DegenerateTouch(_)
            | CoreError::SampledOutOfDomain(_) => RunError::Runtime(e.to_string()),
            _ => RunError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, RunError> {
    Err(RunError::Config(msg.into()))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: RunManifest,
}

enum Datum {
    Closed(DynFunction),
    Sampled(GridFunction),
}

struct Setup {
    family: CharacteristicFamily,
    datum: Datum,
    grid: GridFunction,
    cfg: ExperimentConfig,
}

impl Setup {
    fn closed(&self) -> Result<&dyn SmoothFunction, RunError> {
        match &self.datum {
            Datum::Closed(f) => Ok(f.as_ref()),
            Datum::Sampled(_) => invalid(format!("task {} needs a builtin datum", self.cfg.task.name())),
        }
    }

    fn test_function(&self) -> TestFunction<'_> {
        match &self.datum {
            Datum::Closed(f) => TestFunction::ClosedForm(f.as_ref()),
            Datum::Sampled(g) => TestFunction::Sampled(g),
        }
    }

    fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            discretization: match self.cfg.scheme.symbol {
                SymbolSpec::Lattice => SymbolDiscretization::Lattice,
                SymbolSpec::Continuous => SymbolDiscretization::Continuous,
            },
            leak_tolerance: self.cfg.scheme.leak_tolerance,
        }
    }

    fn check_config(&self) -> CheckConfig {
        let g = &self.cfg.grid;
        CheckConfig {
            spectral: self.spectral(),
            safety: self.cfg.scheme.check_safety,
            ..CheckConfig::new(g.lo, g.hi, g.n, self.cfg.scheme.dt)
        }
    }

    fn hjb_config(&self) -> SchemeConfig {
        let s = &self.cfg.scheme;
        SchemeConfig {
            dt: s.hjb_dt,
            cfl_safety: s.cfl_safety,
            small_jump_cutoff: s.small_jump_cutoff,
            boundary: extension(self.cfg.grid.boundary),
        }
    }

    fn label(&self, theta: usize) -> String {
        self.family.label(theta).0.clone()
    }

    fn steps_to(&self, t: f64) -> Result<usize, RunError> {
        let dt = self.cfg.scheme.dt;
        let k = (t / dt).round();
        if (k * dt - t).abs() > 1e-9 * (1.0 + t) {
            return invalid(format!("time {t} is not a multiple of scheme.dt = {dt}"));
        }
        Ok(k as usize)
    }
}

fn extension(b: BoundarySpec) -> Extension {
    match b {
        BoundarySpec::Constant => Extension::Constant,
        BoundarySpec::Strict => Extension::Strict,
    }
}

fn triplet(t: &TripletSpec) -> Result<LevyTriplet, RunError> {
    let atoms: Vec<(f64, f64)> = t.jumps.iter().map(|a| (a[0], a[1])).collect();
    Ok(LevyTriplet::one_d(t.killing, t.drift, t.diffusion, &atoms)?)
}

fn build_family(spec: &FamilySpec) -> Result<CharacteristicFamily, RunError> {
    match spec {
        FamilySpec::Builtin(b) => match builtin_family(&b.builtin, b.size) {
            Some(f) => Ok(f),
            None => invalid(format!("unknown builtin family {:?}", b.builtin)),
        },
        FamilySpec::Invariant(inv) => {
            let labels = inv.members.iter().map(|m| Label(m.label.clone())).collect();
            let trips = inv.members.iter().map(|m| triplet(&m.triplet)).collect::<Result<Vec<_>, _>>()?;
            Ok(CharacteristicFamily::invariant(labels, trips)?.with_name(inv.name.as_deref().unwrap_or("custom")))
        }
        FamilySpec::Tabulated(tab) => {
            let table = tab
                .table
                .iter()
                .map(|row| row.iter().map(triplet).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            let labels = tab.labels.iter().cloned().map(Label).collect();
            Ok(CharacteristicFamily::tabulated(labels, tab.nodes.clone(), table)?
                .with_name(tab.name.as_deref().unwrap_or("tabulated")))
        }
    }
}

fn setup(cfg: ExperimentConfig) -> Result<Setup, RunError> {
    let family = build_family(&cfg.family)?;
    let g = &cfg.grid;
    if !(g.lo < g.hi && g.lo.is_finite() && g.hi.is_finite()) || g.n < MIN_POINTS {
        return invalid(format!("grid needs lo < hi and n >= {MIN_POINTS}"));
    }
    if !(cfg.scheme.dt > 0.0 && cfg.scheme.dt.is_finite()) {
        return invalid("scheme.dt must be positive");
    }
    let ext = extension(g.boundary);
    let (datum, grid) = match &cfg.datum {
        DatumSpec::Builtin(b) => {
            let Some(f) = builtin_datum(&b.builtin) else {
                return invalid(format!("unknown builtin datum {:?}", b.builtin));
            };
            let grid = GridFunction::sample(f.as_ref(), g.lo, g.hi, g.n, ext)?;
            (Datum::Closed(f), grid)
        }
        DatumSpec::Values(v) => {
            if v.values.len() != g.n {
                return invalid(format!("datum has {} values for {} grid nodes", v.values.len(), g.n));
            }
            let grid = GridFunction::new(1, g.lo, g.hi, g.n, v.values.clone(), ext)?;
            (Datum::Sampled(grid.clone()), grid)
        }
    };
    Ok(Setup { family, datum, grid, cfg })
}

/// What a task produced.
#[derive(Default)]
struct Product {
    table: Option<Table>,
    checks: Vec<CheckRecord>,
    trajectory: Option<(SemigroupTrajectory, Vec<usize>, Vec<f64>)>,
    frames: Option<(Vec<f64>, Vec<GridFunction>)>,
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> CheckRecord {
    CheckRecord { name: name.into(), pass, detail: detail.into() }
}

fn thread_pool() -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SUBLEV_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => b = b.num_threads(n),
            _ => diag::emit("warn", "env", json!({ "message": format!("ignoring SUBLEV_THREADS={v:?}") })),
        }
    }
    b.build().expect("thread pool")
}

pub fn run_file(path: &Path, opts: &RunOptions) -> RunOutcome {
    match std::fs::read_to_string(path) {
        Ok(text) => run_text(&text, opts),
        Err(e) => finish(opts, Instant::now(), String::new(), None, Err(RunError::Config(format!("{}: {e}", path.display())))),
    }
}

pub fn run_text(text: &str, opts: &RunOptions) -> RunOutcome {
    let start = Instant::now();
    let hash_of = |bytes: &[u8]| format!("{:x}", Sha256::digest(bytes));
    let mut cfg = match parse(text) {
        Ok(c) => c,
        Err(e) => return finish(opts, start, hash_of(text.as_bytes()), None, Err(RunError::Config(e.to_string()))),
    };
    if let Some(seed) = opts.seed {
        cfg.rng_seed = seed;
    }
    let value = serde_json::to_value(&cfg).expect("config serialises");
    let hash = hash_of(value.to_string().as_bytes());
    let result = setup(cfg).and_then(|s| {
        let product = thread_pool().install(|| execute(&s))?;
        write_artifacts(&s, &product, &opts.out_dir).map(|arts| (product.checks, arts))
    });
    finish(opts, start, hash, Some(value), result)
}

fn finish(
    opts: &RunOptions,
    start: Instant,
    config_hash: String,
    config: Option<serde_json::Value>,
    result: Result<(Vec<CheckRecord>, Vec<String>), RunError>,
) -> RunOutcome {
    let (checks, artifacts, exit_code, error) = match result {
        Ok((checks, arts)) => {
            let code = if checks.iter().all(|c| c.pass) { EXIT_PASS } else { EXIT_CHECKS_FAILED };
            (checks, arts, code, None)
        }
        Err(e) => (Vec::new(), Vec::new(), e.exit_code(), Some(e.message().to_string())),
    };
    for c in checks.iter().filter(|c| !c.pass) {
        diag::emit("error", "check_failed", json!({ "check": c.name, "detail": c.detail }));
    }
    if let Some(e) = &error {
        diag::emit("error", "run_failed", json!({ "exit_code": exit_code, "message": e }));
    }
    let manifest = RunManifest {
        config_hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        exit_code,
        checks,
        artifacts,
        error,
        config,
    };
    let mut exit_code = exit_code;
    if let Err(e) = std::fs::create_dir_all(&opts.out_dir).and_then(|_| write_manifest(&opts.out_dir, &manifest)) {
        diag::emit("error", "manifest", json!({ "message": e.to_string() }));
        exit_code = EXIT_RUNTIME;
    }
    diag::emit(
        "info",
        "run_finished",
        json!({ "exit_code": exit_code, "wall_time_s": manifest.wall_time_s, "checks": manifest.checks.len() }),
    );
    RunOutcome { exit_code, manifest }
}

fn write_artifacts(s: &Setup, p: &Product, dir: &Path) -> Result<Vec<String>, RunError> {
    std::fs::create_dir_all(dir)?;
    let mut arts = Vec::new();
    let out = &s.cfg.outputs;
    if let Some(table) = &p.table {
        std::fs::write(dir.join(&out.csv), table.to_bytes()?)?;
        arts.push(out.csv.clone());
    }
    if let (Some(name), Some((traj, frames, points))) = (&out.svg, &p.trajectory) {
        std::fs::write(dir.join(name), trajectory_plots(traj, frames, points))?;
        arts.push(name.clone());
    }
    if let Some(name) = &out.binary {
        let Some((times, frames)) = &p.frames else {
            return invalid(format!("binary output is only produced by trajectory tasks, not {}", s.cfg.task.name()));
        };
        let mut buf = Vec::new();
        write_frames(&mut buf, times, frames)?;
        std::fs::write(dir.join(name), buf)?;
        arts.push(name.clone());
    }
    Ok(arts)
}

fn execute(s: &Setup) -> Result<Product, RunError> {
    match &s.cfg.task {
        TaskSpec::Symbol { xi, x } => symbol_task(s, xi, *x),
        TaskSpec::Generator { points } => generator_task(s, points.as_deref()),
        TaskSpec::Evolve { times, points, method } => trajectory_task(s, times, points.as_deref(), *method, None),
        TaskSpec::Hjb { times, points, viscosity_probes, viscosity_tolerance } => trajectory_task(
            s,
            times,
            points.as_deref(),
            EvolveMethod::Hjb,
            viscosity_probes.map(|n| (n, *viscosity_tolerance)),
        ),
        TaskSpec::Dynkin { cases } => dynkin_task(s, cases),
        TaskSpec::Slope { x, t_grid, s_list } => slope_task(s, *x, t_grid, s_list),
        TaskSpec::Lipschitz { t_grid, relative_tolerance } => lipschitz_task(s, t_grid, *relative_tolerance),
        TaskSpec::Pmp { cases } => pmp_task(s, *cases),
        TaskSpec::Tightness { radii, x, eps } => tightness_task(s, radii, *x, *eps),
        TaskSpec::Mc { t_final, k, n_paths, x, mode, dp_nodes, tolerance } => {
            mc_task(s, *t_final, k, *n_paths, *x, *mode, *dp_nodes, *tolerance)
        }
        TaskSpec::Crosscheck { t_final, min_ratio } => crosscheck_task(s, *t_final, *min_ratio),
    }
}

fn symbol_task(s: &Setup, xi: &[f64], x: f64) -> Result<Product, RunError> {
    let mut table = Table::new(&["label", "x", "xi", "re", "im"]);
    let (mut min_re, mut worst_zero) = (f64::INFINITY, 0.0f64);
    for theta in 0..s.family.len() {
        let t = s.family.at(theta, &[x]);
        worst_zero = worst_zero.max((t.symbol(&[0.0]).norm() - t.killing()).abs());
        for &k in xi {
            let q = t.symbol(&[k]);
            min_re = min_re.min(q.re);
            table.push(vec![s.label(theta), num(x), num(k), num(q.re), num(q.im)]);
        }
    }
    Ok(Product {
        table: Some(table),
        checks: vec![
            check("real_part_nonnegative", min_re >= -1e-12, format!("min Re q = {min_re:e}")),
            check("symbol_at_zero_is_killing", worst_zero <= 1e-14, format!("max ||q(0)| - c| = {worst_zero:e}")),
        ],
        ..Product::default()
    })
}

fn generator_task(s: &Setup, points: Option<&[f64]>) -> Result<Product, RunError> {
    let xs: Vec<f64> = match points {
        Some(p) => p.to_vec(),
        None => (0..s.grid.n()).map(|i| s.grid.coordinate(i)).collect(),
    };
    let f = s.test_function();
    let mut table = Table::new(&["x", "value", "argmax"]);
    let mut finite = true;
    for &x in &xs {
        let env = apply_sublinear_generator(&s.family, f, &[x])?;
        finite &= env.value.is_finite();
        table.push(vec![num(x), num(env.value), env.argmax_label.0]);
    }
    let cons = conservativeness_check(&s.family, &xs, s.family.is_conservative())?;
    Ok(Product {
        table: Some(table),
        checks: vec![
            check("finite", finite, ""),
            check(
                "conservativeness",
                cons.pass,
                format!("{} pairs, {} violations, max |q(x,0)| = {:e}", cons.checked, cons.violations.len(), cons.max_symbol_at_zero),
            ),
        ],
        ..Product::default()
    })
}

/// `Some(a)` when the family is pure drift with drifts spanning `[−a, a]`.
fn symmetric_drift_range(family: &CharacteristicFamily) -> Option<f64> {
    let trips = family.invariant_triplets().ok()?;
    if trips.iter().any(|t| t.killing() != 0.0 || t.diffusion()[0] != 0.0 || !t.jumps().is_empty()) {
        return None;
    }
    let lo = trips.iter().map(|t| t.drift()[0]).fold(f64::INFINITY, f64::min);
    let hi = trips.iter().map(|t| t.drift()[0]).fold(f64::NEG_INFINITY, f64::max);
    ((lo + hi).abs() <= 1e-12 * (1.0 + hi.abs())).then_some(hi)
}

fn check_times(times: &[f64]) -> Result<f64, RunError> {
    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return invalid("times must be a nonempty list of nonnegative numbers");
    }
    Ok(times.iter().copied().fold(0.0, f64::max))
}

/// Frame at `t`, linear in time between recorded frames, with the argmax of
/// the nearest completed step.
fn frame_at(traj: &SemigroupTrajectory, t: f64) -> Result<(GridFunction, Option<Vec<usize>>), RunError> {
    if traj.dt == 0.0 {
        return Ok((traj.frames[0].clone(), None));
    }
    let last = traj.len() - 1;
    let pos = (t / traj.dt).min(last as f64);
    let k = ((pos + 1e-9).floor() as usize).min(last);
    let frac = pos - k as f64;
    let frame = if frac <= 1e-9 || k == last {
        traj.frames[k].clone()
    } else {
        traj.frames[k].zip_with(&traj.frames[k + 1], |a, b| a + frac * (b - a))?
    };
    let near = pos.round() as usize;
    let argmax = (near > 0).then(|| traj.argmax.get(near - 1).cloned()).flatten();
    Ok((frame, argmax))
}

fn trajectory_task(
    s: &Setup,
    times: &[f64],
    points: Option<&[f64]>,
    method: EvolveMethod,
    viscosity: Option<(usize, Option<f64>)>,
) -> Result<Product, RunError> {
    let horizon = check_times(times)?;
    let traj = match method {
        EvolveMethod::Spectral => {
            for &t in times {
                s.steps_to(t)?;
            }
            if horizon == 0.0 {
                None
            } else {
                Some(evolve_with(&s.family, &s.grid, horizon, s.steps_to(horizon)?, &s.spectral())?)
            }
        }
        EvolveMethod::Hjb => Some(hjb_solve(&s.family, &s.grid, horizon, &s.hjb_config())?),
        EvolveMethod::Exact => {
            if symmetric_drift_range(&s.family).is_none() {
                return invalid("method exact needs a pure-drift family with drifts spanning [-a, a]");
            }
            None
        }
    };
    let mut selected = Vec::with_capacity(times.len());
    for &t in times {
        selected.push(match (&traj, method) {
            (_, EvolveMethod::Exact) => {
                let a = symmetric_drift_range(&s.family).expect("checked above");
                (drift_uncertainty_exact(&s.grid, a * t)?, None)
            }
            (Some(tr), _) => frame_at(tr, t)?,
            (None, _) => (s.grid.clone(), None),
        });
    }
    let mut table = Table::new(&["t", "x", "value", "argmax"]);
    let label = |am: &Option<Vec<usize>>, node: usize| am.as_ref().map(|a| s.label(a[node])).unwrap_or_default();
    for (&t, (frame, am)) in times.iter().zip(&selected) {
        match points {
            Some(ps) => {
                for &x in ps {
                    table.push(vec![num(t), num(x), num(frame.interpolate(&[x])?), label(am, frame.nearest_node(&[x]))]);
                }
            }
            None => {
                for i in 0..frame.n() {
                    table.push(vec![num(t), num(frame.coordinate(i)), num(frame.values()[i]), label(am, i)]);
                }
            }
        }
    }
    let mut checks = vec![check(
        "finite",
        selected.iter().all(|(f, _)| f.values().iter().all(|v| v.is_finite())),
        "",
    )];
    let monotone = method != EvolveMethod::Spectral || s.cfg.scheme.symbol == SymbolSpec::Lattice;
    if s.family.is_conservative() && monotone {
        let bound = s.grid.sup_norm();
        let worst = selected.iter().map(|(f, _)| f.sup_norm()).fold(0.0, f64::max);
        checks.push(check("sup_norm_contraction", worst <= bound + 1e-9, format!("max |T_t f| = {worst}, |f| = {bound}")));
    }
    if let (Some((n, tol)), Some(tr)) = (viscosity, &traj) {
        let report = viscosity_touch_test(&s.family, tr, &ViscosityConfig::new(n, s.cfg.rng_seed))?;
        let median = report.median_abs_sharp();
        let detail = format!(
            "{} probes, {} rejected, median |sharp residual| = {median:e}, median |naive residual| = {:e}",
            report.probes.len(),
            report.rejected,
            report.median_abs_naive()
        );
        checks.push(check("viscosity_residual", tol.is_none_or(|t| median <= t) && median.is_finite(), detail));
    }
    let plot_points = points.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.5 * (s.grid.lo() + s.grid.hi())]);
    let plot = match traj {
        Some(tr) => {
            let frames = times.iter().map(|&t| ((t / tr.dt.max(f64::MIN_POSITIVE)).round() as usize).min(tr.len() - 1)).collect();
            (tr, frames, plot_points)
        }
        None => {
            let tr = SemigroupTrajectory {
                times: times.to_vec(),
                frames: selected.iter().map(|(f, _)| f.clone()).collect(),
                argmax: Vec::new(),
                family: s.family.name().to_string(),
                dt: 0.0,
                scheme: Scheme::Exact,
            };
            let frames = (0..times.len()).collect();
            (tr, frames, plot_points)
        }
    };
    Ok(Product {
        table: Some(table),
        checks,
        trajectory: Some(plot),
        frames: Some((times.to_vec(), selected.into_iter().map(|(f, _)| f).collect())),
    })
}

fn flag(b: bool) -> String {
    b.to_string()
}

fn dynkin_task(s: &Setup, cases: &[DynkinCase]) -> Result<Product, RunError> {
    let f = s.closed()?;
    let cfg = s.check_config();
    let mut table = Table::new(&["t", "x", "lower", "middle", "upper", "lower_reflected", "tol", "pass", "strict"]);
    let mut failures = 0;
    for c in cases {
        let r = dynkin_sandwich_check(&s.family, f, &[c.x], c.t, &cfg)?;
        failures += usize::from(!r.pass);
        table.push(vec![
            num(c.t),
            num(c.x),
            num(r.lower),
            num(r.middle),
            num(r.upper),
            num(r.lower_reflected),
            num(r.tol),
            flag(r.pass),
            flag(r.strict),
        ]);
    }
    Ok(Product {
        table: Some(table),
        checks: vec![check("dynkin_sandwich", failures == 0, format!("{failures} of {} cases violated", cases.len()))],
        ..Product::default()
    })
}

fn slope_task(s: &Setup, x: f64, t_grid: &[f64], s_list: &[f64]) -> Result<Product, RunError> {
    let r = slope_bounds_check(&s.family, s.closed()?, &[x], t_grid, s_list, &s.check_config())?;
    let mut table = Table::new(&["t", "s", "lower", "slope", "upper", "tol", "pass"]);
    for row in &r.rows {
        table.push(vec![num(row.t), num(row.s), num(row.lower), num(row.slope), num(row.upper), num(row.tol), flag(row.pass)]);
    }
    let failed = r.rows.iter().filter(|r| !r.pass).count();
    Ok(Product {
        table: Some(table),
        checks: vec![check("slope_bounds", r.pass, format!("{failed} of {} rows violated", r.rows.len()))],
        ..Product::default()
    })
}

fn lipschitz_task(s: &Setup, t_grid: &[f64], rel: f64) -> Result<Product, RunError> {
    let r = lipschitz_favard_check(&s.family, s.closed()?, t_grid, rel, &s.check_config())?;
    let mut table =
        Table::new(&["generator_norm", "favard_sup", "relative_gap", "lipschitz_excess", "tol", "favard_pass", "lipschitz_pass"]);
    table.push(vec![
        num(r.generator_norm),
        num(r.favard_sup),
        num(r.relative_gap),
        num(r.lipschitz_excess),
        num(r.tol),
        flag(r.favard_pass),
        flag(r.lipschitz_pass),
    ]);
    Ok(Product {
        table: Some(table),
        checks: vec![
            check("favard_norm", r.favard_pass, format!("relative gap {:.4} (limit {rel})", r.relative_gap)),
            check("time_lipschitz", r.lipschitz_pass, format!("excess {:e}, tol {:e}", r.lipschitz_excess, r.tol)),
        ],
        ..Product::default()
    })
}

fn pmp_task(s: &Setup, cases: usize) -> Result<Product, RunError> {
    use sublev_core::functions::PlateauBump;
    let mut rng = stream_rng(s.cfg.rng_seed, 0);
    let (lo, hi) = (s.grid.lo(), s.grid.hi());
    let width = hi - lo;
    let mut table = Table::new(&["case", "center", "radius", "amplitude", "x0", "value", "argmax", "pass"]);
    let mut failures = 0;
    for case in 0..cases {
        let center = uniform(&mut rng, lo + 0.25 * width, hi - 0.25 * width);
        let radius = uniform(&mut rng, 0.02, 0.1) * width;
        let amplitude = uniform(&mut rng, 0.1, 2.0);
        let x0 = center + uniform(&mut rng, -1.0, 1.0) * radius;
        let bump = PlateauBump::new(1, &[center], radius, amplitude);
        let scan = ScanBox { lo: center - 3.0 * radius, hi: center + 3.0 * radius, n: 121 };
        let r = check_positive_maximum_principle(&s.family, &bump, &[x0], scan)?;
        failures += usize::from(!r.pass);
        table.push(vec![
            case.to_string(),
            num(center),
            num(radius),
            num(amplitude),
            num(x0),
            num(r.value),
            s.label(r.argmax),
            flag(r.pass),
        ]);
    }
    Ok(Product {
        table: Some(table),
        checks: vec![check("positive_maximum_principle", failures == 0, format!("{failures} of {cases} cases violated"))],
        ..Product::default()
    })
}

fn tightness_task(s: &Setup, radii: &[f64], x: f64, eps: f64) -> Result<Product, RunError> {
    let trace = is_tight(&s.family, &[x], radii, eps)?;
    let mut table = Table::new(&["radius", "defect", "defect_2r", "test_value", "bracketed"]);
    let mut all_bracketed = true;
    for &r in radii {
        let rep = tightness_test_function_check(&s.family, &[x], eps, r)?;
        all_bracketed &= rep.bracketed;
        table.push(vec![num(r), num(rep.defect_r), num(rep.defect_2r), num(rep.l_value), flag(rep.bracketed)]);
    }
    let settled = trace.settled_at.map(|i| num(trace.radii[i])).unwrap_or_else(|| "never".into());
    Ok(Product {
        table: Some(table),
        checks: vec![
            check("test_function_bracketing", all_bracketed, ""),
            // A finite family is always tight; the trace shows how far out its jumps reach.
            check("tight", trace.tight, format!("defect below {eps} from radius {settled}")),
        ],
        ..Product::default()
    })
}

/// Mean over paths evaluated in parallel; the reduction runs on the ordered
/// path values, so results do not depend on the thread count.
fn parallel_value(
    family: &CharacteristicFamily,
    schedule: &sublev_core::uncertainty_mc::ControlSchedule,
    f: TestFunction<'_>,
    x: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate, RunError> {
    let values = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| path_value(family, schedule, f, &[x], seed, p))
        .collect::<Result<Vec<_>, _>>()?;
    let (value, stderr) = mean_and_stderr(&values);
    Ok(McEstimate { value, stderr, n_paths, schedule: Some(schedule.clone()) })
}

#[allow(clippy::too_many_arguments)]
fn mc_task(
    s: &Setup,
    t_final: f64,
    ks: &[usize],
    n_paths: usize,
    x: f64,
    mode: McMode,
    dp_nodes: Option<usize>,
    tol: f64,
) -> Result<Product, RunError> {
    if ks.is_empty() || ks.contains(&0) || n_paths == 0 || t_final.is_nan() || t_final <= 0.0 {
        return invalid("mc needs t_final > 0, positive K values and n_paths > 0");
    }
    let f = s.test_function();
    let seed = s.cfg.rng_seed;
    let mut table = Table::new(&["T", "K", "n_paths", "value", "stderr", "schedule"]);
    let mut estimates = Vec::with_capacity(ks.len());
    for &k in ks {
        let est = match mode {
            McMode::Exhaustive => {
                let schedules = enumerate_schedules(s.family.len(), k, t_final)?;
                let all = schedules
                    .iter()
                    .map(|sch| parallel_value(&s.family, sch, f, x, n_paths, seed))
                    .collect::<Result<Vec<_>, _>>()?;
                best_of(all)
            }
            McMode::Dp => {
                let g = &s.cfg.grid;
                let grid = GridFunction::new(1, g.lo, g.hi, dp_nodes.unwrap_or(g.n), vec![0.0; dp_nodes.unwrap_or(g.n)], Extension::Constant)?;
                worst_case_value(&s.family, f, &[x], t_final, k, n_paths, seed, &WorstCaseMode::DynamicProgramming { grid, samples: n_paths })?
            }
        };
        let schedule = match &est.schedule {
            Some(sch) => sch.labels().iter().map(|&th| s.label(th)).collect::<Vec<_>>().join(";"),
            None => "feedback".to_string(),
        };
        table.push(vec![num(t_final), k.to_string(), est.n_paths.to_string(), num(est.value), num(est.stderr), schedule]);
        estimates.push((k, est));
    }
    let mut checks = vec![check("stderr_finite", estimates.iter().all(|(_, e)| e.stderr.is_finite() && e.stderr >= 0.0), "")];
    let mut violations = Vec::new();
    for w in estimates.windows(2) {
        let ((ka, a), (kb, b)) = (&w[0], &w[1]);
        if kb % ka == 0 && b.value < a.value - (a.stderr + b.stderr) {
            violations.push(format!("K={ka}: {} > K={kb}: {}", a.value, b.value));
        }
    }
    checks.push(check("monotone_in_k", violations.is_empty(), violations.join("; ")));
    // Piecewise-constant priors under-approximate the semigroup.
    let steps = s.steps_to(t_final)?;
    let reference = evolve_with(&s.family, &s.grid, t_final, steps, &s.spectral())?.last().interpolate(&[x])?;
    let above: Vec<String> = estimates
        .iter()
        .filter(|(_, e)| e.value > reference + 3.0 * e.stderr + tol)
        .map(|(k, e)| format!("K={k}: {}", e.value))
        .collect();
    checks.push(check(
        "below_semigroup",
        above.is_empty(),
        format!("semigroup value {reference}; {}", above.join("; ")),
    ));
    let (k, last) = estimates.last().expect("nonempty");
    let gap = (last.value - reference).abs();
    checks.push(check(
        "matches_semigroup",
        gap <= 3.0 * last.stderr + tol,
        format!("K={k}: |{} - {reference}| = {gap:e}, allowed {:e}", last.value, 3.0 * last.stderr + tol),
    ));
    Ok(Product { table: Some(table), checks, ..Product::default() })
}

fn crosscheck_task(s: &Setup, t_final: f64, min_ratio: f64) -> Result<Product, RunError> {
    if t_final.is_nan() || t_final <= 0.0 {
        return invalid("crosscheck needs t_final > 0");
    }
    let steps = s.steps_to(t_final)?;
    let mut table = Table::new(&["level", "n", "h", "dt", "hjb_dt", "sup_error"]);
    let mut errors = Vec::new();
    let mut grid = s.grid.clone();
    let mut hjb = s.hjb_config();
    for level in 0..2 {
        let factor = 1usize << level;
        if level > 0 {
            let n = 2 * grid.n() - 1;
            grid = match &s.datum {
                Datum::Closed(f) => GridFunction::sample(f.as_ref(), grid.lo(), grid.hi(), n, grid.extension())?,
                Datum::Sampled(_) => return invalid("crosscheck refines the grid and needs a builtin datum"),
            };
            hjb.dt = hjb.dt.map(|d| 0.5 * d);
        }
        let spectral = evolve_with(&s.family, &grid, t_final, steps * factor, &s.spectral())?;
        let fd = hjb_solve(&s.family, &grid, t_final, &hjb)?;
        let err = spectral.last().sup_distance(fd.last());
        table.push(vec![level.to_string(), grid.n().to_string(), num(grid.h()), num(spectral.dt), num(fd.dt), num(err)]);
        errors.push(err);
    }
    let ratio = errors[0] / errors[1];
    let pass = errors.iter().all(|e| e.is_finite()) && (ratio >= min_ratio || errors[0] <= 1e-12);
    Ok(Product {
        table: Some(table),
        checks: vec![check("error_ratio", pass, format!("errors {:e} -> {:e}, ratio {ratio:.3}", errors[0], errors[1]))],
        ..Product::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sublev_core::uncertainty_mc::{value_under_schedule, ControlSchedule};

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(RunError::from(CoreError::CflViolation { dt: 1.0, admissible: 0.5 }).exit_code(), EXIT_RUNTIME);
        assert_eq!(RunError::from(CoreError::BudgetExceeded { count: 9, cap: 1 }).exit_code(), EXIT_RUNTIME);
        assert_eq!(RunError::from(CoreError::InvalidTriplet("x".into())).exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn parallel_mean_is_bit_identical_to_sequential() {
        let fam = builtin_family("g-heat", None).unwrap();
        let f = builtin_datum("gaussian").unwrap();
        let sch = ControlSchedule::uniform(0.5, vec![0, 1], 2).unwrap();
        let tf = TestFunction::ClosedForm(f.as_ref());
        let seq = value_under_schedule(&fam, &sch, tf, &[0.2], 3000, 11).unwrap();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let par = pool.install(|| parallel_value(&fam, &sch, tf, 0.2, 3000, 11)).unwrap();
            assert_eq!(par.value.to_bits(), seq.value.to_bits());
            assert_eq!(par.stderr.to_bits(), seq.stderr.to_bits());
        }
    }

    #[test]
    fn symmetric_drift_detection() {
        assert_eq!(symmetric_drift_range(&builtin_family("drift-uncertainty", None).unwrap()), Some(1.0));
        assert_eq!(symmetric_drift_range(&builtin_family("g-heat", None).unwrap()), None);
    }

    #[test]
    fn frames_between_steps_interpolate_in_time() {
        let fam = builtin_family("brownian", None).unwrap();
        let f = GridFunction::from_fn(1, -4.0, 4.0, 65, Extension::Constant, |x| (-x[0] * x[0]).exp()).unwrap();
        let tr = hjb_solve(&fam, &f, 0.1, &SchemeConfig::default()).unwrap();
        let (a, _) = frame_at(&tr, 0.0).unwrap();
        assert_eq!(&a, tr.initial());
        let (b, am) = frame_at(&tr, 0.1).unwrap();
        assert_eq!(&b, tr.last());
        assert!(am.is_some());
        let mid = 0.5 * tr.dt;
        let (c, _) = frame_at(&tr, mid).unwrap();
        let want = tr.frames[0].zip_with(&tr.frames[1], |p, q| 0.5 * (p + q)).unwrap();
        assert!(c.sup_distance(&want) < 1e-15);
    }
}
