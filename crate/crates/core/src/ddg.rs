//! Discrete differential-geometry operators on closed triangle meshes.
//!
//! Conventions: the Laplace–Beltrami operator is the mass-normalized
//! cotangent Laplacian `(Δu)_i = M_i⁻¹ Σ_j w_ij (u_j − u_i)`, so that
//! `Δf = Hν` and a sphere of radius `r` with inward normal has `H = +2/r`.
//! Mass is the mixed Voronoi area: circumcentric Voronoi cells on
//! non-obtuse triangles, and the half/quarter split on obtuse ones. Vertex
//! normals use the inverse squared edge-length weights of Max (1999), which
//! are exact for vertices inscribed in a sphere.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{EdgeTable, TriMesh, Vec3};

/// Lower clamp applied to each half cotangent weight `½ cot α`.
pub const HALF_WEIGHT_FLOOR: f64 = -10.0;

/// Symmetric cotangent stiffness matrix stored per undirected edge.
///
/// Off-diagonal entry `(i, j)` is `w_ij = ½(cot α_ij + cot β_ij)` and the
/// diagonal is `−Σ_j w_ij`, so every row sums to zero.
#[derive(Debug, Clone)]
pub struct LaplaceOperator {
    edges: Arc<EdgeTable>,
    weights: Vec<f64>,
    diagonal: Vec<f64>,
}

impl LaplaceOperator {
    pub fn cotangent(mesh: &TriMesh) -> Self {
        let table = shared_table(mesh);
        let mut weights = vec![0.0; table.len()];
        let p = mesh.positions();
        for (f, face) in mesh.faces().iter().enumerate() {
            let corners = corner_data(p[face[0]], p[face[1]], p[face[2]]);
            for k in 0..3 {
                weights[table.face_edges[f][k]] += corners.half_cot[k];
            }
        }
        Self::from_weights(table, weights, mesh.vertex_count())
    }

    fn from_weights(edges: Arc<EdgeTable>, weights: Vec<f64>, n: usize) -> Self {
        let mut diagonal = vec![0.0; n];
        for (&[a, b], &w) in edges.edges.iter().zip(&weights) {
            diagonal[a] -= w;
            diagonal[b] -= w;
        }
        LaplaceOperator {
            edges,
            weights,
            diagonal,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.diagonal.len()
    }

    /// Iterator over `(i, j, w_ij)` with `i < j`.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges
            .edges
            .iter()
            .zip(&self.weights)
            .map(|(&[a, b], &w)| (a, b, w))
    }

    /// Matrix entry `L_ij`; zero when `i` and `j` are not adjacent.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        self.off_diagonal()
            .find(|&(a, b, _)| (a, b) == (i.min(j), i.max(j)))
            .map_or(0.0, |(_, _, w)| w)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Unnormalized application `(Lu)_i = Σ_j w_ij (u_j − u_i)`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.diagonal.len());
        let mut out = vec![0.0; u.len()];
        for (&[a, b], &w) in self.edges.edges.iter().zip(&self.weights) {
            let d = w * (u[b] - u[a]);
            out[a] += d;
            out[b] -= d;
        }
        out
    }

    pub fn apply_vec3(&self, u: &[Vec3]) -> Vec<Vec3> {
        assert_eq!(u.len(), self.diagonal.len());
        let mut out = vec![Vec3::zeros(); u.len()];
        for (&[a, b], &w) in self.edges.edges.iter().zip(&self.weights) {
            let d = (u[b] - u[a]) * w;
            out[a] += d;
            out[b] -= d;
        }
        out
    }
}

fn shared_table(mesh: &TriMesh) -> Arc<EdgeTable> {
    mesh.shared_edge_table()
}

struct Corners {
    /// Twice the face area.
    double_area: f64,
    half_cot: [f64; 3],
    angle: [f64; 3],
    /// Mixed Voronoi area contributed to each corner.
    mass: [f64; 3],
    /// Normal contribution `(e1 × e2)/(|e1|²|e2|²)` of each corner.
    normal: [Vec3; 3],
    /// `|e1 × e2|/(|e1|²|e2|²)`, the magnitude scale of `normal`.
    normal_weight: [f64; 3],
}

#[inline]
fn corner_data(p0: Vec3, p1: Vec3, p2: Vec3) -> Corners {
    let e = [p2 - p1, p0 - p2, p1 - p0];
    let len_sq = [e[0].norm_squared(), e[1].norm_squared(), e[2].norm_squared()];
    let cross = e[2].cross(&(-e[1]));
    let double_area = cross.norm();
    let mut cot = [0.0; 3];
    let mut half_cot = [0.0; 3];
    let mut angle = [0.0; 3];
    let mut normal = [Vec3::zeros(); 3];
    let mut normal_weight = [0.0; 3];
    let mut obtuse = None;
    for k in 0..3 {
        // edges leaving corner k
        let u = e[(k + 2) % 3];
        let v = -e[(k + 1) % 3];
        let dot = u.dot(&v);
        if dot < 0.0 {
            obtuse = Some(k);
        }
        cot[k] = dot / double_area;
        half_cot[k] = (0.5 * cot[k]).max(HALF_WEIGHT_FLOOR);
        if k < 2 {
            angle[k] = double_area.atan2(dot);
        }
        let w = 1.0 / (len_sq[(k + 2) % 3] * len_sq[(k + 1) % 3]);
        normal[k] = cross * w;
        normal_weight[k] = double_area * w;
    }
    angle[2] = PI - angle[0] - angle[1];
    let area = 0.5 * double_area;
    let mass = match obtuse {
        Some(o) => {
            let mut m = [0.25 * area; 3];
            m[o] = 0.5 * area;
            m
        }
        None => {
            // Voronoi cell of corner k: each incident edge weighted by the
            // cotangent of the corner opposite it
            let mut m = [0.0; 3];
            for k in 0..3 {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                m[k] = (len_sq[i] * cot[i] + len_sq[j] * cot[j]) / 8.0;
            }
            m
        }
    };
    Corners {
        double_area,
        half_cot,
        angle,
        mass,
        normal,
        normal_weight,
    }
}

fn check_faces(mesh: &TriMesh) -> Result<()> {
    let floor = mesh.degeneracy_floor();
    for f in 0..mesh.face_count() {
        let area = mesh.face_area(f);
        if !(area >= floor) || area == 0.0 {
            return Err(Error::DegenerateFace { face: f, area, floor });
        }
    }
    Ok(())
}

/// Mixed Voronoi vertex areas; they sum to the total mesh area.
pub fn lumped_mass(mesh: &TriMesh) -> Result<Vec<f64>> {
    check_faces(mesh)?;
    let p = mesh.positions();
    let mut mass = vec![0.0; mesh.vertex_count()];
    for face in mesh.faces() {
        let c = corner_data(p[face[0]], p[face[1]], p[face[2]]);
        for k in 0..3 {
            mass[face[k]] += c.mass[k];
        }
    }
    Ok(mass)
}

/// Unit vertex normals, averaging incident face normals with weights
/// `sin θ / (|e1||e2|)`.
pub fn vertex_normals(mesh: &TriMesh) -> Result<Vec<Vec3>> {
    let p = mesh.positions();
    let mut sum = vec![Vec3::zeros(); mesh.vertex_count()];
    let mut weight = vec![0.0; mesh.vertex_count()];
    for face in mesh.faces() {
        let c = corner_data(p[face[0]], p[face[1]], p[face[2]]);
        for k in 0..3 {
            sum[face[k]] += c.normal[k];
            weight[face[k]] += c.normal_weight[k];
        }
    }
    normalize_normals(sum, &weight)
}

fn normalize_normals(sum: Vec<Vec3>, weight: &[f64]) -> Result<Vec<Vec3>> {
    sum.into_iter()
        .zip(weight)
        .enumerate()
        .map(|(i, (s, &a))| {
            let n = s.norm();
            if !(n >= 1e-14 * a) || n == 0.0 {
                Err(Error::ZeroNormal(i))
            } else {
                Ok(s / n)
            }
        })
        .collect()
}

/// `H_i = ⟨M_i⁻¹ (L f)_i, ν_i⟩`.
pub fn mean_curvature(
    mesh: &TriMesh,
    laplace: &LaplaceOperator,
    mass: &[f64],
    normals: &[Vec3],
) -> Vec<f64> {
    laplace
        .apply_vec3(mesh.positions())
        .iter()
        .zip(mass)
        .zip(normals)
        .map(|((lf, &m), n)| lf.dot(n) / m)
        .collect()
}

/// Angle defects `2π − Σ θ` per vertex.
pub fn angle_defects(mesh: &TriMesh) -> Vec<f64> {
    let p = mesh.positions();
    let mut defect = vec![TAU; mesh.vertex_count()];
    for face in mesh.faces() {
        let c = corner_data(p[face[0]], p[face[1]], p[face[2]]);
        for k in 0..3 {
            defect[face[k]] -= c.angle[k];
        }
    }
    defect
}

/// `K_i = (2π − Σ θ)/M_i`.
pub fn gaussian_curvature(mesh: &TriMesh, mass: &[f64]) -> Vec<f64> {
    angle_defects(mesh)
        .into_iter()
        .zip(mass)
        .map(|(d, &m)| d / m)
        .collect()
}

/// `|A⁰|² = max(H²/2 − 2K, 0)`.
pub fn tracefree_sq(mean: &[f64], gauss: &[f64]) -> Vec<f64> {
    mean.iter()
        .zip(gauss)
        .map(|(&h, &k)| tracefree_density(h, k))
        .collect()
}

#[inline]
fn tracefree_density(h: f64, k: f64) -> f64 {
    (0.5 * h * h - 2.0 * k).max(0.0)
}

/// Mass-normalized Laplacian of a vertex field.
pub fn laplacian_of_scalar(laplace: &LaplaceOperator, mass: &[f64], u: &[f64]) -> Vec<f64> {
    laplace
        .apply(u)
        .into_iter()
        .zip(mass)
        .map(|(v, &m)| v / m)
        .collect()
}

/// Every per-vertex quantity the flow and the diagnostics need, built in a
/// single pass over the faces.
#[derive(Debug, Clone)]
pub struct GeometryCache {
    pub mass: Vec<f64>,
    pub normals: Vec<Vec3>,
    pub mean_curvature: Vec<f64>,
    pub gaussian_curvature: Vec<f64>,
    pub tracefree_sq: Vec<f64>,
    pub lap_mean_curvature: Vec<f64>,
    pub laplace: LaplaceOperator,
}

impl GeometryCache {
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        let n = mesh.vertex_count();
        let p = mesh.positions();
        let table = shared_table(mesh);
        let floor = mesh.degeneracy_floor();

        let mut mass = vec![0.0; n];
        let mut normal_sum = vec![Vec3::zeros(); n];
        let mut normal_weight = vec![0.0; n];
        let mut defect = vec![TAU; n];
        let mut weights = vec![0.0; table.len()];

        for (f, face) in mesh.faces().iter().enumerate() {
            let c = corner_data(p[face[0]], p[face[1]], p[face[2]]);
            let area = 0.5 * c.double_area;
            if !(area >= floor) || area == 0.0 {
                return Err(Error::DegenerateFace { face: f, area, floor });
            }
            for k in 0..3 {
                let v = face[k];
                mass[v] += c.mass[k];
                normal_sum[v] += c.normal[k];
                normal_weight[v] += c.normal_weight[k];
                defect[v] -= c.angle[k];
                weights[table.face_edges[f][k]] += c.half_cot[k];
            }
        }

        let normals = normalize_normals(normal_sum, &normal_weight)?;
        let laplace = LaplaceOperator::from_weights(table, weights, n);
        let mean_curvature = mean_curvature(mesh, &laplace, &mass, &normals);
        let gaussian_curvature: Vec<f64> = defect.iter().zip(&mass).map(|(d, m)| d / m).collect();
        let tracefree = tracefree_sq(&mean_curvature, &gaussian_curvature);
        let lap_mean_curvature = laplacian_of_scalar(&laplace, &mass, &mean_curvature);

        Ok(GeometryCache {
            mass,
            normals,
            mean_curvature,
            gaussian_curvature,
            tracefree_sq: tracefree,
            lap_mean_curvature,
            laplace,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Pointwise `|A|² = |A⁰|² + ½H²`.
    pub fn full_sq(&self, i: usize) -> f64 {
        self.tracefree_sq[i] + 0.5 * self.mean_curvature[i] * self.mean_curvature[i]
    }

    /// Per-vertex curvature energy `|A|²_i M_i`.
    pub fn curvature_energy_density(&self) -> Vec<f64> {
        (0..self.vertex_count())
            .map(|i| self.full_sq(i) * self.mass[i])
            .collect()
    }

    /// `Σ K_i M_i`, equal to `2πχ` up to roundoff.
    pub fn total_gaussian_curvature(&self) -> f64 {
        self.gaussian_curvature
            .iter()
            .zip(&self.mass)
            .map(|(k, m)| k * m)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn max_rel_err(values: &[f64], exact: f64) -> f64 {
        values
            .iter()
            .map(|v| ((v - exact) / exact).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn octahedron_mass() {
        let m = generate::octahedron(1.0);
        let mass = lumped_mass(&m).unwrap();
        let total: f64 = mass.iter().sum();
        assert_relative_eq!(total, 4.0 * 3f64.sqrt(), epsilon = 1e-14);
        for mi in mass {
            assert_relative_eq!(mi, 4.0 * 3f64.sqrt() / 6.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn mass_is_local() {
        let m = generate::icosphere(2, 1.0).unwrap();
        let before = lumped_mass(&m).unwrap();
        let mut p = m.positions().to_vec();
        p[7] *= 1.05;
        let after = lumped_mass(&m.with_positions(p)).unwrap();
        let nbrs = m.vertex_neighbors();
        for j in 0..m.vertex_count() {
            if j != 7 && nbrs[7].binary_search(&j).is_err() {
                assert_eq!(before[j], after[j]);
            }
        }
    }

    #[test]
    fn icosphere_mass_converges() {
        let errs: Vec<f64> = (3..=5)
            .map(|l| {
                let m = generate::icosphere(l, 1.0).unwrap();
                let total: f64 = lumped_mass(&m).unwrap().iter().sum();
                (total - 4.0 * PI).abs() / (4.0 * PI)
            })
            .collect();
        assert!(errs[1] < 2e-3, "{errs:?}");
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn octahedron_vertex_normal() {
        let m = generate::octahedron(1.0);
        let n = vertex_normals(&m).unwrap();
        assert_relative_eq!(n[0], Vec3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn icosphere_normals_point_inward() {
        let m = generate::icosphere(3, 1.0).unwrap();
        let n = vertex_normals(&m).unwrap();
        for (p, ni) in m.positions().iter().zip(&n) {
            let exact = -p.normalize();
            let angle = ni.cross(&exact).norm().atan2(ni.dot(&exact));
            assert!(angle < 1e-6, "{angle}");
        }
        let flipped = vertex_normals(&m.flipped()).unwrap();
        for (a, b) in n.iter().zip(&flipped) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn sign_convention_inward_sphere_has_positive_mean_curvature() {
        let m = generate::icosphere(4, 1.0).unwrap();
        let c = GeometryCache::build(&m).unwrap();
        assert!(max_rel_err(&c.mean_curvature, 2.0) < 0.02);
        let m2 = generate::icosphere(4, 2.0).unwrap();
        let c2 = GeometryCache::build(&m2).unwrap();
        assert!(max_rel_err(&c2.mean_curvature, 1.0) < 0.02);
    }

    #[test]
    fn orientation_reversal_covariance() {
        let m = generate::ellipsoid(1.2, 1.0, 0.85, 3).unwrap();
        let a = GeometryCache::build(&m).unwrap();
        let b = GeometryCache::build(&m.flipped()).unwrap();
        for i in 0..m.vertex_count() {
            assert_eq!(a.normals[i], -b.normals[i]);
            assert_relative_eq!(a.mean_curvature[i], -b.mean_curvature[i], epsilon = 1e-12);
            assert_relative_eq!(a.mass[i], b.mass[i], epsilon = 1e-15);
            assert_relative_eq!(a.gaussian_curvature[i], b.gaussian_curvature[i], epsilon = 1e-12);
            assert_relative_eq!(a.tracefree_sq[i], b.tracefree_sq[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn gauss_bonnet_is_exact() {
        let m = generate::icosphere(4, 1.0).unwrap();
        let c = GeometryCache::build(&m).unwrap();
        assert!((c.total_gaussian_curvature() - 4.0 * PI).abs() < 1e-9);
        assert!(max_rel_err(&c.gaussian_curvature, 1.0) < 0.05);
        let t = generate::torus(2.0, 1.0, 32, 16).unwrap();
        let ct = GeometryCache::build(&t).unwrap();
        assert!(ct.total_gaussian_curvature().abs() < 1e-9);
    }

    #[test]
    fn sphere_is_umbilic() {
        let m = generate::icosphere(4, 1.0).unwrap();
        let c = GeometryCache::build(&m).unwrap();
        assert!(c.tracefree_sq.iter().all(|&a| (0.0..=1e-3).contains(&a)));
    }

    #[test]
    fn torus_outer_equator_is_cylinder_like() {
        // At the outer equator (v = 0) of a torus of revolution with inward
        // normal: principal curvatures 1/a and 1/(R + a), so
        // |A⁰|² = (1/a − 1/(R + a))²/2 and H = 1/a + 1/(R + a).
        let (big, small) = (20.0, 1.0);
        let t = generate::torus(big, small, 400, 40).unwrap();
        let c = GeometryCache::build(&t).unwrap();
        let k1 = 1.0 / small;
        let k2 = 1.0 / (big + small);
        let h_exact = k1 + k2;
        let a0_exact = 0.5 * (k1 - k2).powi(2);
        // vertex (i = 0, j = 0) lies on the outer equator
        assert!((c.mean_curvature[0] - h_exact).abs() / h_exact < 0.01);
        assert!((c.tracefree_sq[0] - a0_exact).abs() / a0_exact < 0.02);
        // and |A⁰|² ≈ H²/2 because K is nearly zero there; the relative gap
        // is about 4·k2/k1
        let h = c.mean_curvature[0];
        let gap = (c.tracefree_sq[0] - 0.5 * h * h).abs() / (0.5 * h * h);
        assert!(gap < 4.0 * k2 / k1 + 0.02, "{gap}");
    }

    #[test]
    fn laplacian_examples() {
        let m = generate::icosphere(4, 1.0).unwrap();
        let c = GeometryCache::build(&m).unwrap();
        let ones = vec![3.7; m.vertex_count()];
        assert!(laplacian_of_scalar(&c.laplace, &c.mass, &ones)
            .iter()
            .all(|&v| v == 0.0));

        let z: Vec<f64> = m.positions().iter().map(|p| p.z).collect();
        let lz = laplacian_of_scalar(&c.laplace, &c.mass, &z);
        for (p, v) in m.positions().iter().zip(&lz) {
            assert!((v - (-2.0 * p.z)).abs() <= 0.03 * 2.0, "{v} vs {}", -2.0 * p.z);
        }

        let x: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        let combo: Vec<f64> = x.iter().zip(&z).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let lx = laplacian_of_scalar(&c.laplace, &c.mass, &x);
        let lc = laplacian_of_scalar(&c.laplace, &c.mass, &combo);
        for i in 0..m.vertex_count() {
            assert!((lc[i] - (2.0 * lx[i] - 0.5 * lz[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_is_symmetric_with_zero_row_sums() {
        let m = generate::torus(2.0, 0.6, 20, 10).unwrap();
        let l = LaplaceOperator::cotangent(&m);
        for (i, j, w) in l.off_diagonal() {
            assert_eq!(l.entry(i, j), w);
            assert_eq!(l.entry(j, i), w);
        }
        let ones = vec![1.0; m.vertex_count()];
        let scale = l.diagonal().iter().map(|d| d.abs()).fold(0.0, f64::max);
        assert!(l.apply(&ones).iter().all(|v| v.abs() <= 1e-12 * scale));
    }

    #[test]
    fn regular_octahedron_weights() {
        // Every triangle is equilateral: w_ij = ½(cot 60° + cot 60°) = 1/√3.
        let l = LaplaceOperator::cotangent(&generate::octahedron(1.0));
        for (_, _, w) in l.off_diagonal() {
            assert_relative_eq!(w, 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        }
        for &d in l.diagonal() {
            assert_relative_eq!(d, -4.0 / 3f64.sqrt(), epsilon = 1e-14);
        }
    }
}
