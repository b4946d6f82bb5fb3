use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-manifold edge ({0}, {1}) is incident to {2} faces")]
    NonManifold(usize, usize, usize),

    #[error("faces {0} and {1} traverse edge ({2}, {3}) in the same direction")]
    InconsistentOrientation(usize, usize, usize, usize),

    #[error("face {face} has area {area:e} below the degeneracy floor {floor:e}")]
    DegenerateFace { face: usize, area: f64, floor: f64 },

    #[error("vertex {vertex} is referenced by {faces} faces (need at least 3)")]
    DanglingVertex { vertex: usize, faces: usize },

    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },

    #[error("vertex {0} has a vanishing area-weighted normal")]
    ZeroNormal(usize),

    #[error("non-finite normal speed at vertex {0}")]
    NonFinite(usize),

    #[error("time step {dt:e} underflowed (dt_max = {dt_max:e})")]
    StepUnderflow { dt: f64, dt_max: f64 },

    #[error("volume projection did not converge after {iterations} iterations (relative error {rel_error:e})")]
    ProjectionDiverged { iterations: usize, rel_error: f64 },

    #[error("volume projection precondition failed: relative volume error {0:e} is not below 0.5")]
    ProjectionOutOfRange(f64),

    #[error("step rejected after {halvings} halvings: W̄ rose from {before} to {after}")]
    DissipationViolation {
        halvings: usize,
        before: f64,
        after: f64,
    },

    #[error("minimum face quality {quality:e} fell below the floor {floor:e}")]
    QualityCollapse { quality: f64, floor: f64 },

    #[error("no finite concentration radius: threshold {threshold} is not below the total curvature {total}")]
    NoFiniteRadius { threshold: f64, total: f64 },

    #[error("no mesh snapshot at or after t = {0}")]
    SnapshotMissing(f64),

    #[error("signed volume vanishes")]
    ZeroVolume,

    #[error("sphere fit is singular: vertices are coplanar")]
    SingularFit,

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Whether the error comes from the flow integrator rather than from
    /// input handling.
    pub fn is_flow_error(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::StepUnderflow { .. }
                | Error::ProjectionDiverged { .. }
                | Error::ProjectionOutOfRange(_)
                | Error::DissipationViolation { .. }
                | Error::QualityCollapse { .. }
                | Error::ZeroNormal(_)
                | Error::DegenerateFace { .. }
        )
    }
}
