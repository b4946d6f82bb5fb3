//! Parabolic rescaling `f̃(t, p) = ρ⁻¹ (f(ρ⁴t, p) − x₀)` of meshes and
//! recorded trajectories, and blow-up window extraction from snapshots.

use crate::ddg::GeometryCache;
use crate::diagnostics::{concentration, concentration_radius};
use crate::error::{Error, Result};
use crate::flow::{Snapshot, StepSample, Trajectory};
use crate::mesh::{TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleSpec {
    pub rho: f64,
    pub origin: Vec3,
}

impl RescaleSpec {
    pub fn new(rho: f64, origin: Vec3) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::BadParams(format!("rho must be finite and positive, got {rho}")));
        }
        if origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::BadParams("origin must be finite".into()));
        }
        Ok(RescaleSpec { rho, origin })
    }

    pub fn scale(rho: f64) -> Result<Self> {
        Self::new(rho, Vec3::zeros())
    }
}

/// `p ↦ ρ⁻¹ (p − x₀)`; connectivity is shared.
pub fn rescale_mesh(mesh: &TriMesh, spec: &RescaleSpec) -> TriMesh {
    mesh.with_positions(
        mesh.positions()
            .iter()
            .map(|p| (p - spec.origin) / spec.rho)
            .collect(),
    )
}

fn rescale_sample(s: &StepSample, rho: f64) -> StepSample {
    let (r2, r3, r4) = (rho * rho, rho * rho * rho, rho * rho * rho * rho);
    StepSample {
        t: s.t / r4,
        dt: s.dt / r4,
        lambda: s.lambda * r3,
        area: s.area / r2,
        max_speed: s.max_speed * r3,
        ..*s
    }
}

/// Rescales every row, step and snapshot of a trajectory. When the step log
/// is present the λ-accumulators are recomputed from the rescaled Riemann
/// sums; otherwise they are carried over, their exact weight being 1.
pub fn rescale_trajectory(traj: &Trajectory, spec: &RescaleSpec) -> Trajectory {
    let rho = spec.rho;
    let (r2, r3, r4) = (rho * rho, rho * rho * rho, rho * rho * rho * rho);
    let steps: Vec<StepSample> = traj.steps.iter().map(|s| rescale_sample(s, rho)).collect();

    let mut records = Vec::with_capacity(traj.records.len());
    let mut k = 0;
    let (mut l43, mut l2a) = (0.0, 0.0);
    for rec in &traj.records {
        let mut out = rec.clone();
        out.t = rec.t / r4;
        out.area = rec.area / r2;
        out.volume = rec.volume / r3;
        out.lambda = rec.lambda * r3;
        out.diameter = rec.diameter / rho;
        out.diameter_bound = rec.diameter_bound / rho;
        out.translation_defect = rec.translation_defect * rho;
        out.kappa = rec.kappa.iter().map(|&(r, v)| (r / rho, v)).collect();
        if !steps.is_empty() {
            while k < traj.steps.len() && traj.steps[k].t < rec.t {
                let s = &steps[k];
                l43 += s.lambda.abs().powf(4.0 / 3.0) * s.dt;
                l2a += s.lambda * s.lambda * s.area * s.dt;
                k += 1;
            }
            out.accum_l43 = l43;
            out.accum_l2a = l2a;
        }
        records.push(out);
    }

    Trajectory {
        records,
        kappa_radii: traj.kappa_radii.iter().map(|r| r / rho).collect(),
        snapshots: traj
            .snapshots
            .iter()
            .map(|s| Snapshot {
                time: s.time / r4,
                step: s.step,
                mesh: rescale_mesh(&s.mesh, spec),
            })
            .collect(),
        steps,
    }
}

#[derive(Debug, Clone)]
pub struct BlowupWindow {
    /// Time of the snapshot the radius was measured on.
    pub t_j: f64,
    pub r_j: f64,
    /// Maximizing center of `κ̂(r_j)` on the later snapshot.
    pub x_j: Vec3,
    /// Time of the later snapshot, the first at or after `t_j + ĉ·r_j⁴`.
    pub window_time: f64,
    /// `r_j⁻¹ (f(window_time) − x_j)`.
    pub mesh: TriMesh,
    /// `κ̂(r_j)` on the later snapshot.
    pub source_kappa: f64,
    /// `κ̂(1)` on the window mesh.
    pub window_kappa: f64,
}

impl BlowupWindow {
    /// The rescaling that maps the window mesh back onto its source snapshot.
    pub fn inverse_spec(&self) -> RescaleSpec {
        RescaleSpec {
            rho: 1.0 / self.r_j,
            origin: -self.x_j / self.r_j,
        }
    }
}

/// Extracts the blow-up window starting at the first snapshot at or after
/// `t`, for concentration threshold `eps` and window constant `c_hat`.
pub fn blowup_window(traj: &Trajectory, t: f64, eps: f64, c_hat: f64) -> Result<BlowupWindow> {
    if !(c_hat >= 0.0) {
        return Err(Error::BadParams(format!("window constant must be nonnegative, got {c_hat}")));
    }
    let source = traj.snapshot_at_or_after(t).ok_or(Error::SnapshotMissing(t))?;
    let cache = GeometryCache::build(&source.mesh)?;
    let r_j = concentration_radius(&source.mesh, &cache, eps)?;
    if !(r_j > 0.0) {
        return Err(Error::BadParams(format!(
            "threshold {eps} is already exceeded by a single vertex; no positive radius"
        )));
    }
    let target = source.time + c_hat * r_j.powi(4);
    let later = traj
        .snapshots
        .iter()
        .find(|s| s.time >= target)
        .ok_or(Error::SnapshotMissing(target))?;
    let later_cache = if later.step == source.step {
        cache
    } else {
        GeometryCache::build(&later.mesh)?
    };
    let hot = concentration(&later.mesh, &later_cache, r_j);
    let spec = RescaleSpec::new(r_j, hot.center_position)?;
    let mesh = rescale_mesh(&later.mesh, &spec);
    let window_cache = GeometryCache::build(&mesh)?;
    let window_kappa = concentration(&mesh, &window_cache, 1.0).value;
    Ok(BlowupWindow {
        t_j: source.time,
        r_j,
        x_j: hot.center_position,
        window_time: later.time,
        mesh,
        source_kappa: hot.value,
        window_kappa,
    })
}
