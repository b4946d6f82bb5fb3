//! Flows an ellipsoid toward the round sphere of the same volume and prints
//! the trajectory as it is recorded.
//!
//! cargo run --release --example ellipsoid_flow [level]

use std::f64::consts::PI;

use vpwf::diagnostics::sphere_fit;
use vpwf::flow::{run_with, FlowConfig};
use vpwf::functionals::signed_volume;
use vpwf::generate::ellipsoid;

fn main() {
    let level = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mesh = ellipsoid(1.2, 1.0, 0.85, level).expect("valid ellipsoid");
    let target = (3.0 * signed_volume(&mesh) / (4.0 * PI)).cbrt();
    let config = FlowConfig { record_cadence: 2000, ..FlowConfig::default() };

    println!("{:>10} {:>10} {:>10} {:>11} {:>10}", "t", "W/4pi", "Wbar", "lambda", "kappa(1)");
    let out = run_with(mesh, &config, |rec| {
        println!(
            "{:>10.5} {:>10.6} {:>10.3e} {:>11.3e} {:>10.5}",
            rec.t,
            rec.willmore / (4.0 * PI),
            rec.wbar,
            rec.lambda,
            rec.kappa[2].1
        );
    });
    let out = match out {
        Ok(out) => out,
        Err(f) => {
            eprintln!("{f}");
            std::process::exit(1);
        }
    };
    let fit = sphere_fit(&out.state.mesh).expect("non-degenerate mesh");
    println!("stopped: {} after {} steps", out.stop, out.state.step_index);
    println!("fit radius {:.6} vs target {:.6}, rms {:.2e}", fit.radius, target, fit.rms_deviation / fit.radius);
}
