//! Explicit adaptive integration of the volume-preserving Willmore flow
//! `∂t f = (−ΔH − |A⁰|²H + λ)ν` with exact volume re-projection.

use crate::ddg::{vertex_normals, GeometryCache};
use crate::diagnostics::{self, DiagnosticsRecord, RecordContext};
use crate::error::{Error, Result};
use crate::functionals::{self, signed_volume, signed_volume_gradient};
use crate::mesh::{TriMesh, Vec3};
use crate::quality::{self, QualityConfig};

/// Projection gives up after this many Newton iterations.
pub const PROJECTION_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub max_time: f64,
    pub max_steps: usize,
    /// Stop once `max|ξ|` falls below this; 0 disables the criterion.
    pub speed_tol: f64,
    /// Stop once `W̄` falls below this; 0 disables the criterion.
    pub wbar_tol: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            max_time: f64::INFINITY,
            max_steps: 2_000_000,
            speed_tol: 0.25,
            wbar_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// σ in `dt = min(dt_max, σ·h⁴/(1 + max|ξ|·h³))`.
    pub dt_safety: f64,
    pub dt_max: f64,
    /// Relative volume error accepted after projection.
    pub projection_tol: f64,
    /// A step may raise W̄ by at most `dissipation_tol · max(1, W̄)`.
    pub dissipation_tol: f64,
    pub max_halvings: usize,
    pub stop: StopCriteria,
    pub quality: QualityConfig,
    /// Emit a diagnostics record every this many accepted steps.
    pub record_cadence: usize,
    pub kappa_radii: Vec<f64>,
    /// Keep a mesh snapshot at the first accepted step at or after each time.
    pub snapshot_times: Vec<f64>,
    /// Also keep a snapshot every this many steps.
    pub snapshot_every: Option<usize>,
    /// Keep the per-step log of `(t, dt, λ, A, …)`.
    pub keep_step_log: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt_safety: 0.05,
            dt_max: 1e-3,
            projection_tol: 1e-10,
            dissipation_tol: 1e-6,
            max_halvings: 20,
            stop: StopCriteria::default(),
            quality: QualityConfig::default(),
            record_cadence: 1000,
            kappa_radii: vec![0.25, 0.5, 1.0],
            snapshot_times: Vec::new(),
            snapshot_every: None,
            keep_step_log: true,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_safety", self.dt_safety),
            ("dt_max", self.dt_max),
            ("projection_tol", self.projection_tol),
            ("dissipation_tol", self.dissipation_tol),
            ("max_time", self.stop.max_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::BadParams(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("speed_tol", self.stop.speed_tol), ("wbar_tol", self.stop.wbar_tol)] {
            if !(v >= 0.0) {
                return Err(Error::BadParams(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.dt_safety > 1.0 {
            return Err(Error::BadParams(format!("dt_safety must be at most 1, got {}", self.dt_safety)));
        }
        if self.record_cadence == 0 {
            return Err(Error::BadParams("record_cadence must be at least 1".into()));
        }
        if self.quality.enabled && self.quality.cadence_steps == 0 {
            return Err(Error::BadParams("quality cadence must be at least 1".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::BadParams("snapshot_every must be at least 1".into()));
        }
        if self.kappa_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::BadParams("kappa radii must be positive".into()));
        }
        if self.kappa_radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadParams("kappa radii must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub mesh: TriMesh,
    pub cache: GeometryCache,
    pub t: f64,
    pub step_index: usize,
    pub target_volume: f64,
    /// `Σ |λ|^{4/3} dt`.
    pub accum_l43: f64,
    /// `Σ λ² A dt`.
    pub accum_l2a: f64,
    pub last_lambda: f64,
    pub last_max_speed: f64,
}

impl FlowState {
    /// Starts a flow at `t = 0` with the current volume as the target.
    pub fn new(mesh: TriMesh) -> Result<Self> {
        mesh.validate()?;
        let cache = GeometryCache::build(&mesh)?;
        let target_volume = signed_volume(&mesh);
        if target_volume == 0.0 {
            return Err(Error::ZeroVolume);
        }
        let lambda = functionals::lagrange_multiplier(&cache, functionals::area(&mesh));
        let speed = max_abs(&velocity(&cache, lambda)?);
        Ok(FlowState {
            mesh,
            cache,
            t: 0.0,
            step_index: 0,
            target_volume,
            accum_l43: 0.0,
            accum_l2a: 0.0,
            last_lambda: lambda,
            last_max_speed: speed,
        })
    }

    pub fn wbar(&self) -> f64 {
        functionals::wbar(&self.cache)
    }

    pub fn record(&self, kappa_radii: &[f64]) -> Result<DiagnosticsRecord> {
        diagnostics::record(
            &self.mesh,
            &self.cache,
            RecordContext {
                t: self.t,
                accum_l43: self.accum_l43,
                accum_l2a: self.accum_l2a,
            },
            kappa_radii,
        )
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Normal speed `ξ_i = −(ΔH)_i − |A⁰|²_i H_i + λ`.
pub fn velocity(cache: &GeometryCache, lambda: f64) -> Result<Vec<f64>> {
    let xi: Vec<f64> = (0..cache.vertex_count())
        .map(|i| {
            -cache.lap_mean_curvature[i] - cache.tracefree_sq[i] * cache.mean_curvature[i] + lambda
        })
        .collect();
    match xi.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(xi),
    }
}

/// `min(dt_max, σ·h⁴/(1 + max|ξ|·h³))` with `h` the shortest edge.
pub fn choose_dt(mesh: &TriMesh, max_speed: f64, config: &FlowConfig) -> Result<f64> {
    let h = mesh.min_edge_length();
    let h3 = h * h * h;
    let dt = config.dt_max.min(config.dt_safety * h3 * h / (1.0 + max_speed * h3));
    if !(dt >= 1e-18 * config.dt_max) {
        return Err(Error::StepUnderflow {
            dt,
            dt_max: config.dt_max,
        });
    }
    Ok(dt)
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub mesh: TriMesh,
    /// Total normal offset applied.
    pub offset: f64,
    /// Relative volume error before projection and after each iteration.
    pub history: Vec<f64>,
}

/// Moves every vertex by `c·ν_i` so that the signed volume equals `target`
/// to relative tolerance `tol`, solving for `c` by safeguarded Newton.
pub fn volume_project(mesh: &TriMesh, normals: &[Vec3], target: f64, tol: f64) -> Result<Projection> {
    let rel = |v: f64| (v - target).abs() / target.abs();
    let mut v = signed_volume(mesh);
    let mut history = vec![rel(v)];
    if history[0] >= 0.5 {
        return Err(Error::ProjectionOutOfRange(history[0]));
    }
    if history[0] <= tol {
        return Ok(Projection {
            mesh: mesh.clone(),
            offset: 0.0,
            history,
        });
    }
    let base = mesh.positions();
    let at = |c: f64| mesh.with_positions(base.iter().zip(normals).map(|(p, n)| p + n * c).collect());
    let area = functionals::area(mesh);
    let mut c = 0.0;
    let mut current = mesh.clone();
    for _ in 0..PROJECTION_MAX_ITERATIONS {
        let grad = signed_volume_gradient(&current);
        let mut slope: f64 = grad.iter().zip(normals).map(|(g, n)| g.dot(n)).sum();
        if !(slope < 0.0) {
            // dV/dc = −A to first order
            slope = -area;
        }
        let mut delta = (target - v) / slope;
        // backtrack if the residual does not shrink
        let mut accepted = None;
        for _ in 0..30 {
            let trial = at(c + delta);
            let tv = signed_volume(&trial);
            if rel(tv) < rel(v) {
                accepted = Some((trial, tv));
                break;
            }
            delta *= 0.5;
        }
        let Some((trial, tv)) = accepted else { break };
        c += delta;
        current = trial;
        v = tv;
        history.push(rel(v));
        if rel(v) <= tol {
            return Ok(Projection {
                mesh: current,
                offset: c,
                history,
            });
        }
    }
    Err(Error::ProjectionDiverged {
        iterations: history.len() - 1,
        rel_error: rel(v),
    })
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSample {
    /// Time at the start of the step.
    pub t: f64,
    pub dt: f64,
    /// λ and area at the start of the step, as used by the accumulators.
    pub lambda: f64,
    pub area: f64,
    pub wbar_before: f64,
    pub wbar_after: f64,
    /// Relative volume error after projection.
    pub volume_rel_error: f64,
    pub max_speed: f64,
    pub halvings: usize,
    pub flips: usize,
}

fn dissipation_bound(wbar: f64, config: &FlowConfig) -> f64 {
    wbar + config.dissipation_tol * wbar.max(1.0)
}

struct Attempt {
    mesh: TriMesh,
    cache: GeometryCache,
    wbar: f64,
    volume_rel_error: f64,
}

fn attempt(state: &FlowState, xi: &[f64], dt: f64, config: &FlowConfig) -> Result<Attempt> {
    let moved: Vec<Vec3> = state
        .mesh
        .positions()
        .iter()
        .zip(&state.cache.normals)
        .zip(xi)
        .map(|((p, n), s)| p + n * (dt * s))
        .collect();
    let moved = state.mesh.with_positions(moved);
    // project along the directions the vertices just moved in
    let projected = volume_project(&moved, &state.cache.normals, state.target_volume, config.projection_tol)?;
    let cache = GeometryCache::build(&projected.mesh)?;
    let wbar = functionals::wbar(&cache);
    if !wbar.is_finite() {
        return Err(Error::NonFinite(0));
    }
    Ok(Attempt {
        mesh: projected.mesh,
        cache,
        wbar,
        volume_rel_error: *projected.history.last().expect("nonempty"),
    })
}

fn commit(state: &FlowState, next: Attempt, sample: StepSample) -> Result<FlowState> {
    let lambda = functionals::lagrange_multiplier(&next.cache, next.cache.total_mass());
    let speed = max_abs(&velocity(&next.cache, lambda)?);
    Ok(FlowState {
        mesh: next.mesh,
        cache: next.cache,
        t: state.t + sample.dt,
        step_index: state.step_index + 1,
        target_volume: state.target_volume,
        accum_l43: state.accum_l43 + sample.lambda.abs().powf(4.0 / 3.0) * sample.dt,
        accum_l2a: state.accum_l2a + sample.lambda * sample.lambda * sample.area * sample.dt,
        last_lambda: lambda,
        last_max_speed: speed,
    })
}

fn begin(state: &FlowState) -> Result<(f64, f64, Vec<f64>)> {
    let area = state.cache.total_mass();
    let lambda = functionals::lagrange_multiplier(&state.cache, area);
    let xi = velocity(&state.cache, lambda)?;
    Ok((area, lambda, xi))
}

/// One step at exactly `dt`, without step-size control. Rejects the step
/// with `DissipationViolation` if W̄ rises beyond the tolerance.
pub fn step_with_dt(state: &FlowState, dt: f64, config: &FlowConfig) -> Result<(FlowState, StepSample)> {
    let (area, lambda, xi) = begin(state)?;
    let before = state.wbar();
    let next = attempt(state, &xi, dt, config)?;
    if !(next.wbar <= dissipation_bound(before, config)) {
        return Err(Error::DissipationViolation {
            halvings: 0,
            before,
            after: next.wbar,
        });
    }
    let sample = StepSample {
        t: state.t,
        dt,
        lambda,
        area,
        wbar_before: before,
        wbar_after: next.wbar,
        volume_rel_error: next.volume_rel_error,
        max_speed: max_abs(&xi),
        halvings: 0,
        flips: 0,
    };
    let out = commit(state, next, sample)?;
    Ok((out, sample))
}

/// One adaptive step: chooses `dt` (clipped to land on `max_time`), halves it up to `max_halvings` times
/// while the step is non-finite or raises W̄, then runs the quality pass
/// on its cadence.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<(FlowState, StepSample)> {
    let (area, lambda, xi) = begin(state)?;
    let max_speed = max_abs(&xi);
    let mut dt = choose_dt(&state.mesh, max_speed, config)?;
    let remaining = config.stop.max_time - state.t;
    if remaining > 0.0 && remaining < dt {
        dt = remaining;
    }
    let before = state.wbar();
    let bound = dissipation_bound(before, config);
    let mut halvings = 0;
    let next = loop {
        let failure = match attempt(state, &xi, dt, config) {
            Ok(next) if next.wbar <= bound => break next,
            Ok(next) => Error::DissipationViolation {
                halvings,
                before,
                after: next.wbar,
            },
            Err(e) => e,
        };
        if halvings == config.max_halvings {
            return Err(failure);
        }
        halvings += 1;
        dt *= 0.5;
    };
    let mut sample = StepSample {
        t: state.t,
        dt,
        lambda,
        area,
        wbar_before: before,
        wbar_after: next.wbar,
        volume_rel_error: next.volume_rel_error,
        max_speed,
        halvings,
        flips: 0,
    };
    let mut out = commit(state, next, sample)?;
    if config.quality.enabled && out.step_index % config.quality.cadence_steps == 0 {
        let report = quality::quality_pass(&out.mesh, &config.quality)?;
        sample.flips = report.flips.len();
        let normals = vertex_normals(&report.mesh)?;
        let projected = volume_project(&report.mesh, &normals, out.target_volume, config.projection_tol)?;
        out.mesh = projected.mesh;
        out.cache = GeometryCache::build(&out.mesh)?;
        sample.volume_rel_error = *projected.history.last().expect("nonempty");
        out.last_lambda = functionals::lagrange_multiplier(&out.cache, functionals::area(&out.mesh));
        out.last_max_speed = max_abs(&velocity(&out.cache, out.last_lambda)?);
    }
    Ok((out, sample))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    SpeedTol,
    WbarTol,
    MaxTime,
    MaxSteps,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::SpeedTol => "speed_tol",
            StopReason::WbarTol => "wbar_tol",
            StopReason::MaxTime => "max_time",
            StopReason::MaxSteps => "max_steps",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    pub mesh: TriMesh,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub kappa_radii: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepSample>,
}

impl Trajectory {
    /// The first snapshot at or after `t`.
    pub fn snapshot_at_or_after(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.time >= t)
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub state: FlowState,
    pub stop: StopReason,
}

#[derive(Debug)]
pub struct FlowFailure {
    pub error: Error,
    /// Last accepted state; `None` when the initial mesh was rejected.
    pub state: Option<FlowState>,
    pub trajectory: Trajectory,
}

impl std::fmt::Display for FlowFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.state {
            Some(s) => write!(f, "{} (last good state at t = {}, step {})", self.error, s.t, s.step_index),
            None => write!(f, "{}", self.error),
        }
    }
}

impl std::error::Error for FlowFailure {}

fn stop_reason(state: &FlowState, config: &FlowConfig) -> Option<StopReason> {
    if state.last_max_speed < config.stop.speed_tol {
        Some(StopReason::SpeedTol)
    } else if state.wbar() < config.stop.wbar_tol {
        Some(StopReason::WbarTol)
    } else if state.t >= config.stop.max_time {
        Some(StopReason::MaxTime)
    } else if state.step_index >= config.stop.max_steps {
        Some(StopReason::MaxSteps)
    } else {
        None
    }
}

/// Runs the flow from `mesh` until a stop criterion fires.
pub fn run(mesh: TriMesh, config: &FlowConfig) -> std::result::Result<RunOutput, Box<FlowFailure>> {
    run_with(mesh, config, |_| {})
}

/// [`run`] with a callback invoked on every emitted record.
pub fn run_with(
    mesh: TriMesh,
    config: &FlowConfig,
    mut on_record: impl FnMut(&DiagnosticsRecord),
) -> std::result::Result<RunOutput, Box<FlowFailure>> {
    let state = match config.validate().and_then(|_| FlowState::new(mesh)) {
        Ok(s) => s,
        Err(error) => {
            return Err(Box::new(FlowFailure {
                error,
                state: None,
                trajectory: Trajectory::default(),
            }))
        }
    };
    drive(state, config, &mut on_record)
}

/// Continues a flow from an existing state.
pub fn drive(
    mut state: FlowState,
    config: &FlowConfig,
    on_record: &mut dyn FnMut(&DiagnosticsRecord),
) -> std::result::Result<RunOutput, Box<FlowFailure>> {
    let mut traj = Trajectory {
        kappa_radii: config.kappa_radii.clone(),
        ..Trajectory::default()
    };
    let mut pending_snapshots: Vec<f64> = config.snapshot_times.clone();
    pending_snapshots.sort_by(f64::total_cmp);
    pending_snapshots.reverse();

    let fail = |error: Error, state: FlowState, trajectory: Trajectory| {
        Err(Box::new(FlowFailure {
            error,
            state: Some(state),
            trajectory,
        }))
    };

    let mut emit = |state: &FlowState, traj: &mut Trajectory| -> Result<()> {
        let rec = state.record(&config.kappa_radii)?;
        on_record(&rec);
        traj.records.push(rec);
        Ok(())
    };
    let snapshot = |state: &FlowState, traj: &mut Trajectory, pending: &mut Vec<f64>| {
        let mut due = false;
        while pending.last().is_some_and(|&t| t <= state.t) {
            pending.pop();
            due = true;
        }
        if config.snapshot_every.is_some_and(|k| state.step_index.is_multiple_of(k)) {
            due = true;
        }
        if due && traj.snapshots.last().is_none_or(|s| s.step != state.step_index) {
            traj.snapshots.push(Snapshot {
                time: state.t,
                step: state.step_index,
                mesh: state.mesh.clone(),
            });
        }
    };

    if let Err(e) = emit(&state, &mut traj) {
        return fail(e, state, traj);
    }
    snapshot(&state, &mut traj, &mut pending_snapshots);
    let stop = loop {
        if let Some(reason) = stop_reason(&state, config) {
            break reason;
        }
        match step(&state, config) {
            Ok((next, sample)) => {
                state = next;
                if config.keep_step_log {
                    traj.steps.push(sample);
                }
            }
            Err(e) => return fail(e, state, traj),
        }
        snapshot(&state, &mut traj, &mut pending_snapshots);
        if state.step_index.is_multiple_of(config.record_cadence) {
            if let Err(e) = emit(&state, &mut traj) {
                return fail(e, state, traj);
            }
        }
    };
    if traj.records.last().is_none_or(|r| r.t != state.t) {
        if let Err(e) = emit(&state, &mut traj) {
            return fail(e, state, traj);
        }
    }
    Ok(RunOutput {
        trajectory: traj,
        state,
        stop,
    })
}
