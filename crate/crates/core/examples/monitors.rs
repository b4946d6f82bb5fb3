//! Inequality monitors on a torus: diameter bound, concentration profile,
//! concentration radius and the Li–Yau flag.
//!
//! cargo run --release --example monitors

use vpwf::ddg::GeometryCache;
use vpwf::diagnostics::{concentration_profile, concentration_radius, diameter_check, record, RecordContext};
use vpwf::functionals::willmore;
use vpwf::generate::torus;

fn main() -> vpwf::Result<()> {
    let mesh = torus(2.0, 0.6, 64, 24)?;
    let cache = GeometryCache::build(&mesh)?;
    let w = willmore(&cache);
    let d = diameter_check(&mesh, w);
    println!("W = {w:.5}  diam = {:.5} <= {:.5}: {}", d.diameter, d.bound, d.ok);

    let radii = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    for c in concentration_profile(&mesh, &cache, &radii) {
        println!("kappa({:>4}) = {:>9.5} at vertex {}", c.radius, c.value, c.center);
    }
    for eps in [1.0, 5.0, 20.0] {
        match concentration_radius(&mesh, &cache, eps) {
            Ok(r) => println!("r(eps={eps}) = {r:.6}"),
            Err(e) => println!("r(eps={eps}): {e}"),
        }
    }
    let rec = record(&mesh, &cache, RecordContext::default(), &radii)?;
    println!("Gauss-Bonnet defect {:.2e}, Li-Yau regime: {}", rec.gauss_bonnet_defect, rec.li_yau);
    Ok(())
}
