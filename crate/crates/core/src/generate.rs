//! Shape generators. Every generator emits the inward orientation, so the
//! signed volume of the result is positive.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::signed_volume;
use crate::mesh::{TriMesh, Vec3};

/// Parameters of [`perturbed_sphere`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub degree: u32,
    pub order: i32,
    pub amplitude: f64,
    /// Amplitude of uniform radial noise in `[-noise, noise]`.
    pub noise: f64,
    pub seed: u64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation {
            degree: 2,
            order: 0,
            amplitude: 0.1,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// Generator selection used by the CLI and scenario files.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Icosphere { level: u32, radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64, level: u32 },
    Torus { major: f64, minor: f64, nu: usize, nv: usize },
    PerturbedSphere { level: u32, radius: f64, perturbation: Perturbation },
}

impl Shape {
    pub fn build(&self) -> Result<TriMesh> {
        match *self {
            Shape::Icosphere { level, radius } => icosphere(level, radius),
            Shape::Ellipsoid { a, b, c, level } => ellipsoid(a, b, c, level),
            Shape::Torus { major, minor, nu, nv } => torus(major, minor, nu, nv),
            Shape::PerturbedSphere {
                level,
                radius,
                perturbation,
            } => perturbed_sphere(level, radius, perturbation),
        }
    }
}

fn orient_inward(mesh: TriMesh) -> Result<TriMesh> {
    let v = signed_volume(&mesh);
    let mesh = if v < 0.0 { mesh.flipped() } else { mesh };
    let (p, f) = mesh.into_parts();
    let mesh = TriMesh::new(p, f)?;
    if signed_volume(&mesh) <= 0.0 {
        return Err(Error::BadParams("generated mesh has non-positive volume".into()));
    }
    Ok(mesh)
}

/// Regular octahedron with vertices at distance `radius` on the axes.
pub fn octahedron(radius: f64) -> TriMesh {
    let r = radius;
    let positions = vec![
        Vec3::new(r, 0.0, 0.0),
        Vec3::new(-r, 0.0, 0.0),
        Vec3::new(0.0, r, 0.0),
        Vec3::new(0.0, -r, 0.0),
        Vec3::new(0.0, 0.0, r),
        Vec3::new(0.0, 0.0, -r),
    ];
    // outward windings, reversed below
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    TriMesh::new_unchecked(positions, faces).flipped()
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let positions = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (positions, faces)
}

/// Unit-sphere points and faces of the level-`level` subdivided icosahedron.
fn unit_icosphere(level: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let (mut positions, mut faces) = icosahedron();
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, positions: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                positions.push(((positions[a] + positions[b]) * 0.5).normalize());
                positions.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut positions);
            let bc = midpoint(b, c, &mut positions);
            let ca = midpoint(c, a, &mut positions);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (positions, faces)
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::BadParams(format!("{name} must be positive and finite, got {value}")));
    }
    Ok(())
}

fn check_level(level: u32) -> Result<()> {
    if level > 8 {
        return Err(Error::BadParams(format!("subdivision level {level} exceeds 8")));
    }
    Ok(())
}

/// Recursively subdivided icosahedron projected to the sphere of radius `radius`.
/// Has `10·4^level + 2` vertices.
pub fn icosphere(level: u32, radius: f64) -> Result<TriMesh> {
    check_level(level)?;
    check_positive("radius", radius)?;
    let (p, f) = unit_icosphere(level);
    orient_inward(TriMesh::new_unchecked(
        p.into_iter().map(|q| q * radius).collect(),
        f,
    ))
}

/// Icosphere mapped by `diag(a, b, c)`.
pub fn ellipsoid(a: f64, b: f64, c: f64, level: u32) -> Result<TriMesh> {
    check_level(level)?;
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        check_positive(name, v)?;
    }
    let (p, f) = unit_icosphere(level);
    orient_inward(TriMesh::new_unchecked(
        p.into_iter()
            .map(|q| Vec3::new(a * q.x, b * q.y, c * q.z))
            .collect(),
        f,
    ))
}

/// Torus of revolution about the z-axis, major radius `major`, tube radius
/// `minor`, on an `nu × nv` grid split into triangles.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> Result<TriMesh> {
    check_positive("R", major)?;
    check_positive("a", minor)?;
    if minor >= major {
        return Err(Error::BadParams(format!(
            "tube radius {minor} must be smaller than the major radius {major}"
        )));
    }
    if nu < 3 || nv < 3 {
        return Err(Error::BadParams(format!("torus grid {nu}x{nv} is too coarse")));
    }
    let tau = std::f64::consts::TAU;
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = tau * i as f64 / nu as f64;
        for j in 0..nv {
            let v = tau * j as f64 / nv as f64;
            let ring = major + minor * v.cos();
            positions.push(Vec3::new(ring * u.cos(), ring * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    orient_inward(TriMesh::new_unchecked(positions, faces))
}

/// Associated Legendre function `P_l^m(x)` for `m ≥ 0`, without the
/// Condon–Shortley phase.
fn associated_legendre(l: u32, m: u32, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = ((2 * ll - 1) as f64 * x * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// Orthonormal real spherical harmonic `Y_l^m` at the unit direction `dir`.
pub fn real_spherical_harmonic(l: u32, m: i32, dir: &Vec3) -> f64 {
    let am = m.unsigned_abs();
    let cos_theta = dir.z.clamp(-1.0, 1.0);
    let phi = dir.y.atan2(dir.x);
    let mut ratio = 1.0;
    for k in (l - am + 1)..=(l + am) {
        ratio /= k as f64;
    }
    let norm = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt();
    let p = associated_legendre(l, am, cos_theta);
    match m.signum() {
        0 => norm * p,
        1 => std::f64::consts::SQRT_2 * norm * p * (am as f64 * phi).cos(),
        _ => std::f64::consts::SQRT_2 * norm * p * (am as f64 * phi).sin(),
    }
}

/// Icosphere with radial offset `radius·(1 + amplitude·Y_l^m + noise·U)`,
/// where `U` is uniform in `[-1, 1]` drawn from a seeded ChaCha stream.
pub fn perturbed_sphere(level: u32, radius: f64, perturbation: Perturbation) -> Result<TriMesh> {
    check_level(level)?;
    check_positive("radius", radius)?;
    let Perturbation {
        degree,
        order,
        amplitude,
        noise,
        seed,
    } = perturbation;
    if order.unsigned_abs() > degree {
        return Err(Error::BadParams(format!(
            "harmonic order {order} exceeds degree {degree}"
        )));
    }
    if !(amplitude.is_finite() && noise.is_finite() && noise >= 0.0) {
        return Err(Error::BadParams("perturbation amplitudes must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p, f) = unit_icosphere(level);
    let positions: Vec<Vec3> = p
        .into_iter()
        .map(|dir| {
            let jitter = if noise > 0.0 {
                noise * rng.random_range(-1.0..=1.0)
            } else {
                0.0
            };
            let scale = 1.0 + amplitude * real_spherical_harmonic(degree, order, &dir) + jitter;
            dir * (radius * scale)
        })
        .collect();
    if positions.iter().any(|q| !(q.norm() > 0.0)) {
        return Err(Error::BadParams("perturbation collapses the sphere".into()));
    }
    orient_inward(TriMesh::new_unchecked(positions, f))
}
