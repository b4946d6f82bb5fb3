//! Writes a mesh and a trajectory to disk, reads them back and compares.
//!
//! cargo run --release --example mesh_files [dir]

use std::path::PathBuf;

use vpwf::ddg::GeometryCache;
use vpwf::diagnostics::{record, RecordContext};
use vpwf::generate::torus;
use vpwf::io::{read_mesh, read_trajectory, write_obj, write_trajectory};

fn main() -> vpwf::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    let mesh = torus(2.0, 1.0, 32, 16)?;
    let obj = dir.join("torus.obj");
    write_obj(&obj, &mesh, &["t=0".into(), "shape=torus".into()])?;
    let back = read_mesh(&obj)?;
    println!("{}: exact round trip {}, t={:?}", obj.display(), back.mesh.positions() == mesh.positions(), back.comment_value("t"));

    let cache = GeometryCache::build(&mesh)?;
    let radii = [0.5, 1.0];
    let rec = record(&mesh, &cache, RecordContext::default(), &radii)?;
    let csv = dir.join("torus.csv");
    write_trajectory(&csv, &radii, std::slice::from_ref(&rec), &["analyze".into()])?;
    let table = read_trajectory(&csv)?;
    println!("{}: {} row(s), exact round trip {}", csv.display(), table.records.len(), table.records[0] == rec);
    Ok(())
}
