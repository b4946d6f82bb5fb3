#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod ddg;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod generate;
pub mod io;
pub mod mesh;
pub mod quality;
pub mod rescale;

pub use error::{Error, Result};
pub use mesh::{TriMesh, Vec3};
