//! Property tests: rigid-motion and scaling invariance, orientation,
//! Gauss–Bonnet, volume projection and file round trips.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

use vpwf::ddg::GeometryCache;
use vpwf::flow::{self, FlowConfig, FlowState};
use vpwf::functionals::{signed_volume, EnergyReport};
use vpwf::generate::{ellipsoid, perturbed_sphere, torus, Perturbation};
use vpwf::io;
use vpwf::rescale::{rescale_mesh, RescaleSpec};
use vpwf::{TriMesh, Vec3};

fn bumpy(seed: u64, amplitude: f64) -> TriMesh {
    perturbed_sphere(2, 1.0, Perturbation { degree: 3, order: 1, amplitude, noise: 0.01, seed }).unwrap()
}

fn energies(m: &TriMesh) -> EnergyReport {
    EnergyReport::compute(m, &GeometryCache::build(m).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energies_are_rigid_motion_invariant(
        seed in 0u64..1000,
        axis in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
        angle in 0.0f64..PI,
        shift in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
    ) {
        let m = bumpy(seed, 0.1);
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(axis.0, axis.1, axis.2)), angle);
        let t = Vec3::new(shift.0, shift.1, shift.2);
        let moved = m.with_positions(m.positions().iter().map(|p| rot * p + t).collect());
        let (e0, e1) = (energies(&m), energies(&moved));
        prop_assert!(close(e0.area, e1.area, 1e-12));
        prop_assert!(close(e0.signed_volume, e1.signed_volume, 1e-10));
        prop_assert!(close(e0.willmore, e1.willmore, 1e-10));
        prop_assert!(close(e0.wbar, e1.wbar, 1e-9));
        prop_assert!(close(e0.lambda, e1.lambda, 1e-8));
    }

    #[test]
    fn scaling_laws(seed in 0u64..1000, rho in 0.05f64..20.0) {
        let m = bumpy(seed, 0.15);
        let s = rescale_mesh(&m, &RescaleSpec::scale(rho).unwrap());
        let (e0, e1) = (energies(&m), energies(&s));
        prop_assert!(close(e1.area, e0.area / (rho * rho), 1e-12));
        prop_assert!(close(e1.signed_volume, e0.signed_volume / rho.powi(3), 1e-12));
        prop_assert!(close(e1.willmore, e0.willmore, 1e-11));
        prop_assert!(close(e1.wbar, e0.wbar, 1e-10));
        prop_assert!(close(e1.lambda, e0.lambda * rho.powi(3), 1e-9));
    }

    #[test]
    fn flipping_orientation_negates_volume_and_keeps_energies(seed in 0u64..1000) {
        let m = bumpy(seed, 0.1);
        let f = m.flipped();
        let (e0, e1) = (energies(&m), energies(&f));
        prop_assert!(close(e1.signed_volume, -e0.signed_volume, 1e-12));
        prop_assert!(close(e1.willmore, e0.willmore, 1e-12));
        prop_assert!(close(e1.wbar, e0.wbar, 1e-12));
    }

    #[test]
    fn gauss_bonnet_holds_exactly(
        seed in 0u64..1000,
        amplitude in 0.0f64..0.3,
        major in 1.5f64..4.0,
        minor in 0.3f64..1.2,
        nu in 8usize..40,
        nv in 6usize..20,
    ) {
        let s = bumpy(seed, amplitude);
        let cs = GeometryCache::build(&s).unwrap();
        prop_assert!((cs.total_gaussian_curvature() - 4.0 * PI).abs() <= 1e-9);
        let t = torus(major, minor, nu, nv).unwrap();
        let ct = GeometryCache::build(&t).unwrap();
        prop_assert!(ct.total_gaussian_curvature().abs() <= 1e-9);
    }

    #[test]
    fn mass_partitions_area(a in 0.5f64..2.0, b in 0.5f64..2.0, c in 0.5f64..2.0) {
        let m = ellipsoid(a, b, c, 2).unwrap();
        let cache = GeometryCache::build(&m).unwrap();
        prop_assert!(cache.mass.iter().all(|&x| x > 0.0));
        prop_assert!(close(cache.total_mass(), vpwf::functionals::area(&m), 1e-12));
    }

    #[test]
    fn projection_restores_volume(seed in 0u64..1000, shrink in -0.02f64..0.02) {
        let m = bumpy(seed, 0.1);
        let cache = GeometryCache::build(&m).unwrap();
        let target = signed_volume(&m);
        let moved = m.with_positions(
            m.positions().iter().zip(&cache.normals).map(|(p, n)| p + n * shrink).collect(),
        );
        let proj = flow::volume_project(&moved, &cache.normals, target, 1e-12).unwrap();
        prop_assert!((signed_volume(&proj.mesh) - target).abs() <= 1e-12 * target);
    }

    #[test]
    fn obj_round_trip_is_exact(seed in 0u64..1000, scale in 1e-3f64..1e3) {
        let m = bumpy(seed, 0.2).scaled(scale);
        let mut buf = Vec::new();
        io::write_obj_to(&mut buf, &m, &["t=1".into()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        std::fs::write(&path, &buf).unwrap();
        let back = io::read_obj(&path).unwrap();
        prop_assert_eq!(back.mesh.positions(), m.positions());
        prop_assert_eq!(back.mesh.faces(), m.faces());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn flow_steps_preserve_volume_and_dissipate(seed in 0u64..1000, amplitude in 0.02f64..0.2) {
        let m = bumpy(seed, amplitude);
        let v0 = signed_volume(&m);
        let cfg = FlowConfig::default();
        let mut state = FlowState::new(m).unwrap();
        for _ in 0..30 {
            let (next, sample) = flow::step(&state, &cfg).unwrap();
            prop_assert!(sample.wbar_after <= sample.wbar_before + 1e-6 * sample.wbar_before.max(1.0));
            prop_assert!(sample.volume_rel_error <= 1e-10);
            prop_assert!(sample.dt > 0.0 && next.t > state.t);
            state = next;
        }
        prop_assert!((signed_volume(&state.mesh) - v0).abs() <= 1e-10 * v0);
    }
}
