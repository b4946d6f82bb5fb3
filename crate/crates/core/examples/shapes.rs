//! Builds every generator shape and prints its size, topology and energies.
//!
//! cargo run --release --example shapes

use vpwf::ddg::GeometryCache;
use vpwf::functionals::EnergyReport;
use vpwf::generate::{Perturbation, Shape};

fn main() -> vpwf::Result<()> {
    let shapes = [
        ("icosphere", Shape::Icosphere { level: 3, radius: 1.0 }),
        ("ellipsoid", Shape::Ellipsoid { a: 1.2, b: 1.0, c: 0.85, level: 3 }),
        ("torus", Shape::Torus { major: 2.0, minor: 1.0, nu: 48, nv: 24 }),
        (
            "perturbed-sphere",
            Shape::PerturbedSphere {
                level: 3,
                radius: 1.0,
                perturbation: Perturbation { degree: 3, order: 2, amplitude: 0.05, noise: 0.002, seed: 7 },
            },
        ),
    ];
    println!("{:<18} {:>6} {:>6} {:>4} {:>10} {:>10} {:>10} {:>10}", "shape", "verts", "faces", "chi", "A", "V", "W", "Wbar");
    for (name, shape) in shapes {
        let mesh = shape.build()?;
        let topo = mesh.validate()?;
        let cache = GeometryCache::build(&mesh)?;
        let e = EnergyReport::compute(&mesh, &cache);
        println!(
            "{name:<18} {:>6} {:>6} {:>4} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            topo.vertex_count, topo.face_count, topo.euler_characteristic, e.area, e.signed_volume, e.willmore, e.wbar
        );
    }
    Ok(())
}
