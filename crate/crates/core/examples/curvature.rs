//! Discrete curvature on icospheres of increasing level: errors of H, K, W,
//! A and V against the round sphere, and the Gauss–Bonnet sum.
//!
//! cargo run --release --example curvature

use std::f64::consts::PI;

use vpwf::ddg::GeometryCache;
use vpwf::functionals::{area, signed_volume, willmore};
use vpwf::generate::icosphere;

fn main() -> vpwf::Result<()> {
    let r = 1.5;
    println!("level  verts   err_H     err_K     err_W     err_A     err_V     |sum K M - 4pi|");
    for level in 1..=5 {
        let mesh = icosphere(level, r)?;
        let c = GeometryCache::build(&mesh)?;
        let max_rel = |v: &[f64], exact: f64| v.iter().map(|x| (x - exact).abs() / exact).fold(0.0, f64::max);
        let rel = |x: f64, exact: f64| (x - exact).abs() / exact;
        println!(
            "{level:>5} {:>6} {:9.2e} {:9.2e} {:9.2e} {:9.2e} {:9.2e} {:9.2e}",
            mesh.vertex_count(),
            max_rel(&c.mean_curvature, 2.0 / r),
            max_rel(&c.gaussian_curvature, 1.0 / (r * r)),
            rel(willmore(&c), 4.0 * PI),
            rel(area(&mesh), 4.0 * PI * r * r),
            rel(signed_volume(&mesh), 4.0 / 3.0 * PI * r.powi(3)),
            (c.total_gaussian_curvature() - 4.0 * PI).abs(),
        );
    }
    Ok(())
}
