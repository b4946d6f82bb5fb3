//! Text formats: OBJ/OFF meshes and CSV trajectories.
//!
//! Floating-point values are written with 17 significant digits so that a
//! write/read round trip reproduces every `f64` exactly.

mod mesh_io;
mod table;

pub use mesh_io::{read_mesh, read_obj, read_off, write_obj, write_obj_to, MeshFile};
pub use table::{
    fmt_f64, header, kappa_column, read_steps, read_trajectory, write_steps, write_trajectory, TrajectoryTable,
    TrajectoryWriter, LEADING_COLUMNS, STEP_COLUMNS, TRAILING_COLUMNS,
};
