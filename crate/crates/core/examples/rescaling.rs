//! Parabolic rescaling of a short perturbed-sphere run and a blow-up window.
//!
//! cargo run --release --example rescaling

use vpwf::flow::{run, FlowConfig, StopCriteria};
use vpwf::generate::{perturbed_sphere, Perturbation};
use vpwf::rescale::{blowup_window, rescale_mesh, rescale_trajectory, RescaleSpec};
use vpwf::Vec3;

fn main() {
    let mesh = perturbed_sphere(3, 1.0, Perturbation { degree: 3, order: 2, amplitude: 0.1, ..Perturbation::default() })
        .expect("valid sphere");
    let config = FlowConfig {
        stop: StopCriteria { max_steps: 4000, speed_tol: 0.0, ..StopCriteria::default() },
        record_cadence: 500,
        snapshot_every: Some(1000),
        ..FlowConfig::default()
    };
    let out = run(mesh, &config).expect("flow runs");
    let traj = &out.trajectory;
    let last = traj.records.last().unwrap();

    for rho in [0.5, 2.0] {
        let spec = RescaleSpec::new(rho, Vec3::new(0.1, -0.2, 0.0)).unwrap();
        let r = rescale_trajectory(traj, &spec);
        let end = r.records.last().unwrap();
        println!(
            "rho={rho}: t {:.4e} -> {:.4e}, lambda {:.4e} -> {:.4e}, L43 {:.6e} -> {:.6e}, L2A {:.6e} -> {:.6e}",
            last.t, end.t, last.lambda, end.lambda, last.accum_l43, end.accum_l43, last.accum_l2a, end.accum_l2a
        );
    }

    let w = blowup_window(traj, 0.0, 2.0, 0.1).expect("window exists");
    println!(
        "window: t_j={:.4e} r_j={:.4} x_j=({:.3},{:.3},{:.3}) kappa source {:.12} window {:.12}",
        w.t_j, w.r_j, w.x_j.x, w.x_j.y, w.x_j.z, w.source_kappa, w.window_kappa
    );
    let back = rescale_mesh(&w.mesh, &w.inverse_spec());
    let src = traj.snapshot_at_or_after(w.window_time).unwrap();
    let err = back.positions().iter().zip(src.mesh.positions()).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    println!("inverse rescale max coordinate error {err:.2e}");
}
