//! Global energies, the constraint functional, their gradients and the
//! Lagrange multiplier of the volume constraint.

use crate::ddg::GeometryCache;
use crate::mesh::{TriMesh, Vec3};

/// Total surface area `A = Σ_f |f|`.
pub fn area(mesh: &TriMesh) -> f64 {
    mesh.total_area()
}

fn vertex_centroid(mesh: &TriMesh) -> Vec3 {
    let n = mesh.vertex_count().max(1) as f64;
    mesh.positions().iter().sum::<Vec3>() / n
}

/// Signed enclosed volume `V = −⅓∫⟨f, ν⟩dμ`, evaluated exactly as a sum of
/// signed tetrahedra against the vertex centroid. Positive for the inward
/// orientation.
pub fn signed_volume(mesh: &TriMesh) -> f64 {
    let c = vertex_centroid(mesh);
    let p = mesh.positions();
    let sum: f64 = mesh
        .faces()
        .iter()
        .map(|&[a, b, d]| (p[a] - c).dot(&(p[b] - c).cross(&(p[d] - c))))
        .sum();
    -sum / 6.0
}

/// Exact gradient of [`signed_volume`] with respect to every vertex position.
pub fn signed_volume_gradient(mesh: &TriMesh) -> Vec<Vec3> {
    let c = vertex_centroid(mesh);
    let p = mesh.positions();
    let mut grad = vec![Vec3::zeros(); mesh.vertex_count()];
    for &[a, b, d] in mesh.faces() {
        let (qa, qb, qd) = (p[a] - c, p[b] - c, p[d] - c);
        grad[a] -= qb.cross(&qd) / 6.0;
        grad[b] -= qd.cross(&qa) / 6.0;
        grad[d] -= qa.cross(&qb) / 6.0;
    }
    grad
}

/// Willmore energy `W = ¼ Σ H_i² M_i`.
pub fn willmore(cache: &GeometryCache) -> f64 {
    0.25 * cache
        .mean_curvature
        .iter()
        .zip(&cache.mass)
        .map(|(h, m)| h * h * m)
        .sum::<f64>()
}

/// `W̄ = Σ |A⁰|²_i M_i`.
pub fn wbar(cache: &GeometryCache) -> f64 {
    cache
        .tracefree_sq
        .iter()
        .zip(&cache.mass)
        .map(|(a, m)| a * m)
        .sum()
}

/// Scalar L² gradient `ΔH + |A⁰|²H` per vertex.
pub fn scalar_willmore_gradient(cache: &GeometryCache) -> Vec<f64> {
    cache
        .lap_mean_curvature
        .iter()
        .zip(&cache.tracefree_sq)
        .zip(&cache.mean_curvature)
        .map(|((lh, a0), h)| lh + a0 * h)
        .collect()
}

/// `λ = Σ |A⁰|²_i H_i M_i / A`.
pub fn lagrange_multiplier(cache: &GeometryCache, area: f64) -> f64 {
    let num: f64 = (0..cache.vertex_count())
        .map(|i| cache.tracefree_sq[i] * cache.mean_curvature[i] * cache.mass[i])
        .sum();
    num / area
}

/// Residual of the scale-invariance identity `∫⟨∇W̄, f⟩dμ = 0`:
/// `Σ (∇_sc W̄)_i ⟨ν_i, f_i⟩ M_i`, with `f` measured from the origin.
pub fn scale_defect(mesh: &TriMesh, cache: &GeometryCache) -> f64 {
    scale_defect_about(mesh, cache, Vec3::zeros())
}

/// [`scale_defect`] with positions measured from `center`.
pub fn scale_defect_about(mesh: &TriMesh, cache: &GeometryCache, center: Vec3) -> f64 {
    let grad = scalar_willmore_gradient(cache);
    mesh.positions()
        .iter()
        .enumerate()
        .map(|(i, p)| grad[i] * cache.normals[i].dot(&(p - center)) * cache.mass[i])
        .sum()
}

/// `Σ (∇_sc W̄)_i ν_i M_i`, which vanishes for a translation-invariant
/// energy. Shifting the origin by `p` changes [`scale_defect`] by `−⟨p, ·⟩`
/// of this vector.
pub fn translation_defect_vector(cache: &GeometryCache) -> Vec3 {
    let grad = scalar_willmore_gradient(cache);
    (0..cache.vertex_count())
        .map(|i| cache.normals[i] * (grad[i] * cache.mass[i]))
        .sum()
}

pub fn translation_defect(cache: &GeometryCache) -> f64 {
    translation_defect_vector(cache).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub area: f64,
    pub signed_volume: f64,
    pub willmore: f64,
    pub wbar: f64,
    /// `W̄ − (2W − 4πχ)`.
    pub gauss_bonnet_defect: f64,
    pub lambda: f64,
}

impl EnergyReport {
    pub fn compute(mesh: &TriMesh, cache: &GeometryCache) -> Self {
        let a = area(mesh);
        let w = willmore(cache);
        let wb = wbar(cache);
        let chi = mesh.euler_characteristic() as f64;
        EnergyReport {
            area: a,
            signed_volume: signed_volume(mesh),
            willmore: w,
            wbar: wb,
            gauss_bonnet_defect: wb - (2.0 * w - 4.0 * std::f64::consts::PI * chi),
            lambda: lagrange_multiplier(cache, a),
        }
    }
}
