//! Monitored quantities: curvature concentration, the diameter bound, the
//! isoperimetric ratio, Simon-type area ratios and the round-sphere fit.
//!
//! Balls are open extrinsic balls `{y : |y − x| < r}` in R³ and the surface
//! measure inside a ball is the lumped vertex mass of the vertices it
//! contains. Concentration maxima are taken over ball centers at vertex
//! positions only.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector4};
use rayon::prelude::*;

use crate::ddg::{lumped_mass, GeometryCache};
use crate::error::{Error, Result};
use crate::functionals::{self, EnergyReport};
use crate::mesh::{TriMesh, Vec3};

/// Multiplicative slack applied to inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    pub radius: f64,
    pub value: f64,
    /// Index of the maximizing center vertex (lowest index on ties).
    pub center: usize,
    pub center_position: Vec3,
}

/// Curvature energy `Σ_{|f_i − x| < r} |A|²_i M_i` of the ball around `x`.
pub fn ball_content(mesh: &TriMesh, cache: &GeometryCache, x: &Vec3, r: f64) -> f64 {
    let r2 = r * r;
    mesh.positions()
        .iter()
        .enumerate()
        .filter(|(_, p)| (*p - x).norm_squared() < r2)
        .map(|(i, _)| cache.full_sq(i) * cache.mass[i])
        .sum()
}

/// `κ̂(r)`: the maximal ball content over vertex-centered balls of radius `r`.
pub fn concentration(mesh: &TriMesh, cache: &GeometryCache, r: f64) -> Concentration {
    concentration_profile(mesh, cache, &[r]).remove(0)
}

/// `κ̂` at several radii with one distance sweep per center.
pub fn concentration_profile(mesh: &TriMesh, cache: &GeometryCache, radii: &[f64]) -> Vec<Concentration> {
    let density = cache.curvature_energy_density();
    let p = mesh.positions();
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let sorted_sq: Vec<f64> = order.iter().map(|&k| radii[k] * radii[k]).collect();

    let per_center: Vec<Vec<f64>> = (0..p.len())
        .into_par_iter()
        .map(|c| {
            let mut bucket = vec![0.0; sorted_sq.len() + 1];
            for (j, q) in p.iter().enumerate() {
                let d2 = (q - p[c]).norm_squared();
                // first sorted radius whose ball contains q
                let k = sorted_sq.partition_point(|&r2| r2 <= d2);
                bucket[k] += density[j];
            }
            let mut acc = 0.0;
            bucket[..sorted_sq.len()]
                .iter()
                .map(|b| {
                    acc += b;
                    acc
                })
                .collect()
        })
        .collect();

    let mut out = vec![
        Concentration {
            radius: 0.0,
            value: f64::NEG_INFINITY,
            center: 0,
            center_position: Vec3::zeros(),
        };
        radii.len()
    ];
    for (slot, &k) in order.iter().enumerate() {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (c, values) in per_center.iter().enumerate() {
            if values[slot] > best.0 {
                best = (values[slot], c);
            }
        }
        out[k] = Concentration {
            radius: radii[k],
            value: best.0.max(0.0),
            center: best.1,
            center_position: p[best.1],
        };
    }
    out
}

/// Largest radius with `κ̂(r) < ε`, located by bisection to an absolute
/// tolerance of `1e-6 · diameter`.
pub fn concentration_radius(mesh: &TriMesh, cache: &GeometryCache, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::BadParams(format!("concentration threshold must be positive, got {eps}")));
    }
    let total: f64 = cache.curvature_energy_density().iter().sum();
    if eps >= total {
        return Err(Error::NoFiniteRadius {
            threshold: eps,
            total,
        });
    }
    let diam = diameter(mesh);
    let (mut lo, mut hi) = (0.0, diam * (1.0 + 1e-9));
    if concentration(mesh, cache, lo).value >= eps {
        return Ok(0.0);
    }
    let tol = 1e-6 * diam;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if concentration(mesh, cache, mid).value < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Exact maximal vertex-pair distance.
pub fn diameter(mesh: &TriMesh) -> f64 {
    let p = mesh.positions();
    if p.len() < 2 {
        return 0.0;
    }
    let (lo, hi) = mesh.bounding_box();
    let extent = hi - lo;
    // any pair spanning the widest axis is at least this far apart
    let lower = extent.max();
    let mid = 0.5 * (lo + hi);
    let half_diag = 0.5 * extent.norm();
    let best_sq = (0..p.len())
        .into_par_iter()
        .filter(|&i| (p[i] - mid).norm() + half_diag >= lower)
        .map(|i| {
            p[i + 1..]
                .iter()
                .map(|q| (q - p[i]).norm_squared())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    best_sq.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterCheck {
    pub diameter: f64,
    /// `(2/π)·√(A·W)`.
    pub bound: f64,
    pub ok: bool,
}

/// Checks `diam ≤ (2/π)·√(A·W)` with a relative slack of [`INEQUALITY_SLACK`].
pub fn diameter_check(mesh: &TriMesh, willmore: f64) -> DiameterCheck {
    diameter_check_with(diameter(mesh), functionals::area(mesh), willmore)
}

pub fn diameter_check_with(diameter: f64, area: f64, willmore: f64) -> DiameterCheck {
    let bound = diameter_bound(area, willmore);
    DiameterCheck {
        diameter,
        bound,
        ok: diameter <= bound * (1.0 + INEQUALITY_SLACK),
    }
}

pub fn diameter_bound(area: f64, willmore: f64) -> f64 {
    2.0 / PI * (area * willmore).sqrt()
}

/// `A^{1/2} / |V|^{1/3}`.
pub fn isoperimetric_ratio(area: f64, volume: f64) -> Result<f64> {
    if volume == 0.0 || !volume.is_finite() {
        return Err(Error::ZeroVolume);
    }
    Ok(area.sqrt() / volume.abs().cbrt())
}

/// `σ⁻² μ(B_σ(x))` with the ball measure taken from the lumped vertex mass.
pub fn area_ratio(mesh: &TriMesh, x: &Vec3, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::BadParams(format!("ball radius must be positive, got {sigma}")));
    }
    let mass = lumped_mass(mesh)?;
    let s2 = sigma * sigma;
    let inside: f64 = mesh
        .positions()
        .iter()
        .zip(&mass)
        .filter(|(p, _)| (*p - x).norm_squared() < s2)
        .map(|(_, m)| m)
        .sum();
    Ok(inside / s2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFit {
    pub center: Vec3,
    pub radius: f64,
    /// Area-weighted root-mean-square of `|p − c| − r`.
    pub rms_deviation: f64,
    pub max_deviation: f64,
}

/// Algebraic least-squares sphere, refined by five Gauss–Newton iterations
/// on the geometric distance.
pub fn sphere_fit(mesh: &TriMesh) -> Result<SphereFit> {
    let p = mesh.positions();
    let n = p.len() as f64;
    let centroid: Vec3 = p.iter().sum::<Vec3>() / n;
    let q: Vec<Vec3> = p.iter().map(|x| x - centroid).collect();

    let mut cov = Matrix3::zeros();
    for x in &q {
        cov += x * x.transpose();
    }
    let eig = cov.symmetric_eigenvalues();
    let (emin, emax) = (eig.min(), eig.max());
    if !(emax > 0.0) || emin <= 1e-24 * emax {
        return Err(Error::SingularFit);
    }

    // |x|² = 2⟨c, x⟩ + d
    let mut ata = Matrix4::zeros();
    let mut atb = Vector4::zeros();
    for x in &q {
        let row = Vector4::new(2.0 * x.x, 2.0 * x.y, 2.0 * x.z, 1.0);
        ata += row * row.transpose();
        atb += row * x.norm_squared();
    }
    let sol = ata.cholesky().ok_or(Error::SingularFit)?.solve(&atb);
    let mut c = Vec3::new(sol[0], sol[1], sol[2]);
    let mut r = (sol[3] + c.norm_squared()).max(0.0).sqrt();

    for _ in 0..5 {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for x in &q {
            let d = x - c;
            let len = d.norm();
            if len == 0.0 {
                continue;
            }
            let u = d / len;
            let jac = Vector4::new(-u.x, -u.y, -u.z, -1.0);
            let res = len - r;
            jtj += jac * jac.transpose();
            jtr += jac * res;
        }
        let Some(chol) = jtj.cholesky() else { break };
        let delta = chol.solve(&(-jtr));
        c += Vec3::new(delta[0], delta[1], delta[2]);
        r += delta[3];
    }

    let mass = lumped_mass(mesh)?;
    let total: f64 = mass.iter().sum();
    let mut sq = 0.0;
    let mut max_dev: f64 = 0.0;
    for (x, m) in q.iter().zip(&mass) {
        let dev = (x - c).norm() - r;
        sq += m * dev * dev;
        max_dev = max_dev.max(dev.abs());
    }
    Ok(SphereFit {
        center: c + centroid,
        radius: r,
        rms_deviation: (sq / total).sqrt(),
        max_deviation: max_dev,
    })
}

/// One row of the monitored time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub area: f64,
    pub volume: f64,
    pub willmore: f64,
    pub wbar: f64,
    pub gauss_bonnet_defect: f64,
    pub lambda: f64,
    pub accum_l43: f64,
    pub accum_l2a: f64,
    pub diameter: f64,
    pub diameter_bound: f64,
    pub isoperimetric_ratio: f64,
    /// `(radius, κ̂(radius))` in configuration order.
    pub kappa: Vec<(f64, f64)>,
    pub scale_defect: f64,
    pub translation_defect: f64,
    pub min_face_quality: f64,
    /// `W < 8π`.
    pub li_yau: bool,
}

impl DiagnosticsRecord {
    pub fn diameter_ok(&self) -> bool {
        self.diameter <= self.diameter_bound * (1.0 + INEQUALITY_SLACK)
    }

    pub fn kappa_monotone(&self) -> bool {
        let mut pairs = self.kappa.clone();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.windows(2).all(|w| w[0].1 <= w[1].1)
    }
}

/// Time-series context carried alongside a mesh when recording.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RecordContext {
    pub t: f64,
    pub accum_l43: f64,
    pub accum_l2a: f64,
}

/// Populates a full diagnostics row for `mesh`.
pub fn record(
    mesh: &TriMesh,
    cache: &GeometryCache,
    context: RecordContext,
    kappa_radii: &[f64],
) -> Result<DiagnosticsRecord> {
    let energy = EnergyReport::compute(mesh, cache);
    let diam = diameter(mesh);
    let kappa = concentration_profile(mesh, cache, kappa_radii)
        .into_iter()
        .map(|c| (c.radius, c.value))
        .collect();
    Ok(DiagnosticsRecord {
        t: context.t,
        area: energy.area,
        volume: energy.signed_volume,
        willmore: energy.willmore,
        wbar: energy.wbar,
        gauss_bonnet_defect: energy.gauss_bonnet_defect,
        lambda: energy.lambda,
        accum_l43: context.accum_l43,
        accum_l2a: context.accum_l2a,
        diameter: diam,
        diameter_bound: diameter_bound(energy.area, energy.willmore),
        isoperimetric_ratio: isoperimetric_ratio(energy.area, energy.signed_volume)?,
        kappa,
        scale_defect: functionals::scale_defect(mesh, cache),
        translation_defect: functionals::translation_defect(cache),
        min_face_quality: mesh.min_face_quality(),
        li_yau: energy.willmore < 8.0 * PI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{self, Perturbation};
    use approx::assert_relative_eq;

    fn setup(level: u32) -> (TriMesh, GeometryCache) {
        let m = generate::icosphere(level, 1.0).unwrap();
        let c = GeometryCache::build(&m).unwrap();
        (m, c)
    }

    #[test]
    fn large_ball_holds_everything() {
        let (m, c) = setup(3);
        let total: f64 = c.curvature_energy_density().iter().sum();
        let k = concentration(&m, &c, 3.0);
        assert_relative_eq!(k.value, total, max_relative = 1e-12);
        let e = EnergyReport::compute(&m, &c);
        assert_relative_eq!(total, e.wbar + 2.0 * e.willmore, max_relative = 1e-12);
        assert!((total - 8.0 * PI).abs() < 0.1 * 8.0 * PI);
    }

    #[test]
    fn tiny_ball_holds_only_its_center() {
        let m = generate::ellipsoid(1.2, 1.0, 0.85, 2).unwrap();
        let c = GeometryCache::build(&m).unwrap();
        let single = c.curvature_energy_density().into_iter().fold(0.0, f64::max);
        let k = concentration(&m, &c, 1e-6);
        assert_eq!(k.value, single);
    }

    #[test]
    fn profile_matches_single_radius_queries() {
        let m = generate::perturbed_sphere(2, 1.0, Perturbation::default()).unwrap();
        let c = GeometryCache::build(&m).unwrap();
        let radii = [0.9, 0.1, 0.5, 2.5];
        let prof = concentration_profile(&m, &c, &radii);
        for (k, r) in radii.iter().enumerate() {
            let single = concentration(&m, &c, *r);
            assert_eq!(prof[k].radius, *r);
            assert_relative_eq!(prof[k].value, single.value, max_relative = 1e-12);
            assert_relative_eq!(
                single.value,
                ball_content(&m, &c, &single.center_position, *r),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn radius_above_total_has_no_finite_radius() {
        let (m, c) = setup(3);
        assert!(matches!(
            concentration_radius(&m, &c, 8.0 * PI + 1.0),
            Err(Error::NoFiniteRadius { .. })
        ));
    }

    #[test]
    fn radius_is_generalized_inverse() {
        let (m, c) = setup(3);
        let eps = 4.0 * PI;
        let r = concentration_radius(&m, &c, eps).unwrap();
        assert!(r > 0.0 && r < 2.0);
        let delta = 1e-6 * diameter(&m);
        assert!(concentration(&m, &c, r).value < eps);
        assert!(concentration(&m, &c, r + 2.0 * delta).value >= eps);
    }

    #[test]
    fn small_threshold_radius_exceeds_min_spacing() {
        let m = generate::ellipsoid(1.2, 1.0, 0.85, 2).unwrap();
        let c = GeometryCache::build(&m).unwrap();
        let single = c.curvature_energy_density().into_iter().fold(0.0, f64::max);
        let r = concentration_radius(&m, &c, single * (1.0 + 1e-9)).unwrap();
        let p = m.positions();
        let mut min_spacing = f64::INFINITY;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                min_spacing = min_spacing.min((p[i] - p[j]).norm());
            }
        }
        assert!(r >= min_spacing * (1.0 - 1e-5), "{r} {min_spacing}");
    }

    #[test]
    fn diameter_examples() {
        let (m, c) = setup(3);
        let d = diameter(&m);
        assert_relative_eq!(d, 2.0, max_relative = 1e-12);
        let w = functionals::willmore(&c);
        let check = diameter_check(&m, w);
        assert!(check.ok);
        assert!((check.bound - 8.0).abs() < 0.1);

        let t = generate::torus(2.0, 1.0, 48, 24).unwrap();
        let ct = GeometryCache::build(&t).unwrap();
        assert_relative_eq!(diameter(&t), 6.0, max_relative = 1e-12);
        assert!(diameter_check(&t, functionals::willmore(&ct)).ok);
    }

    #[test]
    fn diameter_matches_brute_force() {
        let m = generate::perturbed_sphere(
            2,
            1.3,
            Perturbation {
                degree: 3,
                order: 1,
                amplitude: 0.3,
                noise: 0.05,
                seed: 9,
            },
        )
        .unwrap();
        let p = m.positions();
        let mut brute: f64 = 0.0;
        for a in p {
            for b in p {
                brute = brute.max((a - b).norm());
            }
        }
        assert_eq!(diameter(&m), brute);
    }

    #[test]
    fn isoperimetric_examples() {
        let r = isoperimetric_ratio(4.0 * PI, 4.0 * PI / 3.0).unwrap();
        assert_relative_eq!(r, (4.0 * PI).sqrt() / (4.0 * PI / 3.0).cbrt(), max_relative = 1e-15);
        assert!((r - 2.199).abs() < 1e-3);
        let m = generate::ellipsoid(1.2, 1.0, 0.85, 3).unwrap();
        let a = functionals::area(&m);
        let v = functionals::signed_volume(&m);
        let s = m.scaled(4.0);
        let rs = isoperimetric_ratio(functionals::area(&s), functionals::signed_volume(&s)).unwrap();
        assert_relative_eq!(isoperimetric_ratio(a, v).unwrap(), rs, max_relative = 1e-12);
        assert!(matches!(isoperimetric_ratio(1.0, 0.0), Err(Error::ZeroVolume)));
    }

    #[test]
    fn area_ratio_examples() {
        let (m, _) = setup(5);
        let x = m.positions()[17];
        let ratio = area_ratio(&m, &x, 0.2).unwrap();
        assert!((ratio - PI).abs() < 0.1 * PI, "{ratio}");
        let far = area_ratio(&m, &Vec3::new(10.0, 0.0, 0.0), 1.0).unwrap();
        assert_eq!(far, 0.0);
        let off = Vec3::new(0.5, 0.0, 0.0);
        let big = 2.0 + off.norm();
        let total: f64 = lumped_mass(&m).unwrap().iter().sum();
        assert_relative_eq!(area_ratio(&m, &off, big).unwrap(), total / (big * big), max_relative = 1e-12);
        assert!(area_ratio(&m, &off, 0.0).is_err());
    }

    #[test]
    fn sphere_fit_exact_data() {
        let m = generate::icosphere(3, 1.0).unwrap().translated(Vec3::new(0.3, -0.1, 2.0));
        let fit = sphere_fit(&m).unwrap();
        assert!((fit.radius - 1.0).abs() < 1e-12);
        assert!(fit.rms_deviation < 1e-12);
        assert!((fit.center - Vec3::new(0.3, -0.1, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn sphere_fit_with_noise() {
        for seed in 0..8 {
            let m = generate::perturbed_sphere(
                3,
                1.0,
                Perturbation {
                    degree: 0,
                    order: 0,
                    amplitude: 0.0,
                    noise: 1e-3,
                    seed,
                },
            )
            .unwrap();
            let fit = sphere_fit(&m).unwrap();
            assert!((fit.radius - 1.0).abs() < 2e-3);
            assert!(fit.max_deviation <= 2e-3);
        }
    }

    #[test]
    fn sphere_fit_rejects_eccentric_and_coplanar() {
        let m = generate::ellipsoid(1.2, 1.0, 0.85, 3).unwrap();
        assert!(sphere_fit(&m).unwrap().max_deviation > 0.1);
        let flat = TriMesh::new_unchecked(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        );
        assert!(matches!(sphere_fit(&flat), Err(Error::SingularFit)));
    }

    #[test]
    fn record_round_sphere() {
        let (m, c) = setup(3);
        let radii = [0.25, 0.5, 1.0, 3.0];
        let rec = record(&m, &c, RecordContext::default(), &radii).unwrap();
        assert!(rec.li_yau);
        assert!(rec.diameter_ok());
        assert!(rec.kappa_monotone());
        let keys: Vec<f64> = rec.kappa.iter().map(|k| k.0).collect();
        assert_eq!(keys, radii);
    }
}
