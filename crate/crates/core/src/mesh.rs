//! Closed oriented triangle meshes stored as indexed face sets.
//!
//! Faces are wound so that the right-hand-rule normal `(p1 - p0) × (p2 - p0)`
//! is the surface normal ν. Meshes produced by [`crate::generate`] use the
//! inward-pointing normal, which makes the signed volume positive.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Relative degeneracy floor: faces with area below this times the squared
/// bounding-box diagonal are rejected.
pub const DEGENERACY_FACTOR: f64 = 1e-12;

/// Undirected edge table derived from the face list.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    /// Endpoints with `edge[0] < edge[1]`.
    pub edges: Vec<[usize; 2]>,
    /// The (up to) two faces incident to each edge; `usize::MAX` marks a
    /// missing face on an open mesh.
    pub edge_faces: Vec<[usize; 2]>,
    /// `face_edges[f][k]` is the edge opposite corner `k` of face `f`.
    pub face_edges: Vec<[usize; 3]>,
}

impl EdgeTable {
    fn build(faces: &[[usize; 3]]) -> Self {
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut edges = Vec::with_capacity(faces.len() * 3 / 2);
        let mut edge_faces: Vec<[usize; 2]> = Vec::with_capacity(faces.len() * 3 / 2);
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, f) in faces.iter().enumerate() {
            let mut fe = [0usize; 3];
            for k in 0..3 {
                let a = f[(k + 1) % 3];
                let b = f[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push([usize::MAX, usize::MAX]);
                    edges.len() - 1
                });
                let slot = &mut edge_faces[e];
                if slot[0] == usize::MAX {
                    slot[0] = fi;
                } else if slot[1] == usize::MAX {
                    slot[1] = fi;
                }
                fe[k] = e;
            }
            face_edges.push(fe);
        }
        EdgeTable {
            edges,
            edge_faces,
            face_edges,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshTopologySummary {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub euler_characteristic: i64,
    pub genus: usize,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    positions: Vec<Vec3>,
    faces: Arc<Vec<[usize; 3]>>,
    edges: OnceLock<Arc<EdgeTable>>,
}

impl TriMesh {
    /// Builds a mesh and checks every closed-manifold invariant.
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self::new_unchecked(positions, faces);
        mesh.validate()?;
        Ok(mesh)
    }

    /// Builds a mesh without validation. Index range is still assumed by
    /// every geometric routine; call [`TriMesh::validate`] before use on
    /// untrusted data.
    pub fn new_unchecked(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        TriMesh {
            positions,
            faces: Arc::new(faces),
            edges: OnceLock::new(),
        }
    }

    /// A successor mesh with the same connectivity and new vertex positions.
    /// The cached edge table is shared.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Self {
        assert_eq!(positions.len(), self.positions.len());
        let edges = OnceLock::new();
        if let Some(table) = self.edges.get() {
            let _ = edges.set(Arc::clone(table));
        }
        TriMesh {
            positions,
            faces: Arc::clone(&self.faces),
            edges,
        }
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_table(&self) -> &EdgeTable {
        self.shared_edge_table_ref()
    }

    pub fn shared_edge_table(&self) -> Arc<EdgeTable> {
        Arc::clone(self.shared_edge_table_ref())
    }

    fn shared_edge_table_ref(&self) -> &Arc<EdgeTable> {
        self.edges
            .get_or_init(|| Arc::new(EdgeTable::build(&self.faces)))
    }

    pub fn into_parts(self) -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let faces = Arc::try_unwrap(self.faces).unwrap_or_else(|shared| (*shared).clone());
        (self.positions, faces)
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Area floor ε_A below which a face counts as degenerate.
    pub fn degeneracy_floor(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        DEGENERACY_FACTOR * (hi - lo).norm_squared()
    }

    /// Twice the area times the unit normal, i.e. the raw cross product.
    #[inline]
    pub fn face_cross(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.faces[face];
        let p0 = self.positions[a];
        (self.positions[b] - p0).cross(&(self.positions[c] - p0))
    }

    #[inline]
    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    /// Area and unit normal of a face; the normal follows the winding.
    pub fn face_area_normal(&self, face: usize) -> Result<(f64, Vec3)> {
        let cross = self.face_cross(face);
        let area = 0.5 * cross.norm();
        let floor = self.degeneracy_floor();
        if !(area >= floor) || area == 0.0 {
            return Err(Error::DegenerateFace { face, area, floor });
        }
        Ok((area, cross / (2.0 * area)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Shortest edge length.
    pub fn min_edge_length(&self) -> f64 {
        self.edge_table()
            .edges
            .iter()
            .map(|&[a, b]| (self.positions[a] - self.positions[b]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let table = self.edge_table();
        let sum: f64 = table
            .edges
            .iter()
            .map(|&[a, b]| (self.positions[a] - self.positions[b]).norm())
            .sum();
        sum / table.len() as f64
    }

    /// Mesh with every face winding reversed.
    pub fn flipped(&self) -> Self {
        let faces = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        TriMesh::new_unchecked(self.positions.clone(), faces)
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        self.with_positions(self.positions.iter().map(|p| p + offset).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_positions(self.positions.iter().map(|p| p * factor).collect())
    }

    /// Checks the closed oriented manifold invariants and returns the
    /// topology summary.
    pub fn validate(&self) -> Result<MeshTopologySummary> {
        let n = self.positions.len();
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: v,
                        count: n,
                    });
                }
            }
        }

        // Directed half-edges: each undirected edge must appear exactly once
        // in each direction.
        let mut directed: HashMap<(usize, usize), (usize, Option<usize>, usize)> =
            HashMap::with_capacity(self.faces.len() * 3 / 2);
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let forward = a < b;
                let entry = directed.entry(key).or_insert((0, None, usize::MAX));
                entry.0 += 1;
                if entry.0 == 1 {
                    entry.2 = fi;
                    entry.1 = Some(forward as usize);
                } else if entry.0 == 2 && entry.1 == Some(forward as usize) {
                    return Err(Error::InconsistentOrientation(entry.2, fi, key.0, key.1));
                }
            }
        }
        let mut sorted: Vec<_> = directed.iter().filter(|(_, v)| v.0 != 2).collect();
        sorted.sort_by_key(|(k, _)| **k);
        if let Some((&(a, b), &(count, _, _))) = sorted.first() {
            return Err(Error::NonManifold(a, b, count));
        }

        let mut valence = vec![0usize; n];
        for f in self.faces.iter() {
            for &v in f {
                valence[v] += 1;
            }
        }
        if let Some((vertex, &faces)) = valence.iter().enumerate().find(|(_, &c)| c < 3) {
            return Err(Error::DanglingVertex { vertex, faces });
        }

        let floor = self.degeneracy_floor();
        for face in 0..self.faces.len() {
            let area = self.face_area(face);
            if !(area >= floor) || area == 0.0 {
                return Err(Error::DegenerateFace { face, area, floor });
            }
        }

        let edge_count = directed.len();
        let chi = n as i64 - edge_count as i64 + self.faces.len() as i64;
        Ok(MeshTopologySummary {
            vertex_count: n,
            edge_count,
            face_count: self.faces.len(),
            euler_characteristic: chi,
            genus: ((2 - chi).max(0) / 2) as usize,
        })
    }

    /// χ = V − E + F from the derived edge table (no validation).
    pub fn euler_characteristic(&self) -> i64 {
        self.positions.len() as i64 - self.edge_table().len() as i64 + self.faces.len() as i64
    }

    /// Vertex-to-vertex adjacency lists in ascending order.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.positions.len()];
        for &[a, b] in &self.edge_table().edges {
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
        for list in &mut nbrs {
            list.sort_unstable();
        }
        nbrs
    }

    /// Normalized triangle quality `4√3·area / Σ edge²`, 1 for equilateral.
    pub fn face_quality(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        let (pa, pb, pc) = (self.positions[a], self.positions[b], self.positions[c]);
        let s = (pb - pa).norm_squared() + (pc - pb).norm_squared() + (pa - pc).norm_squared();
        if s == 0.0 {
            return 0.0;
        }
        4.0 * 3f64.sqrt() * self.face_area(face) / s
    }

    pub fn min_face_quality(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| self.face_quality(f))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use approx::assert_relative_eq;

    pub(crate) fn octahedron() -> TriMesh {
        generate::octahedron(1.0)
    }

    #[test]
    fn octahedron_topology() {
        let s = octahedron().validate().unwrap();
        assert_eq!(s.vertex_count, 6);
        assert_eq!(s.edge_count, 12);
        assert_eq!(s.face_count, 8);
        assert_eq!(s.euler_characteristic, 2);
        assert_eq!(s.genus, 0);
    }

    #[test]
    fn torus_topology() {
        let s = generate::torus(2.0, 1.0, 16, 16).unwrap().validate().unwrap();
        assert_eq!(s.euler_characteristic, 0);
        assert_eq!(s.genus, 1);
    }

    #[test]
    fn open_mesh_is_non_manifold() {
        let (p, mut f) = octahedron().into_parts();
        f.pop();
        let m = TriMesh::new_unchecked(p, f);
        assert!(matches!(m.validate(), Err(Error::NonManifold(..))));
    }

    #[test]
    fn flipped_face_is_inconsistent() {
        let (p, mut f) = octahedron().into_parts();
        f[0].swap(1, 2);
        let m = TriMesh::new_unchecked(p, f);
        assert!(matches!(
            m.validate(),
            Err(Error::InconsistentOrientation(..))
        ));
    }

    #[test]
    fn degenerate_face_rejected() {
        let (mut p, f) = octahedron().into_parts();
        // Collapse vertex 0 onto vertex 2: faces containing both become slivers.
        p[0] = p[2];
        let m = TriMesh::new_unchecked(p, f);
        assert!(matches!(m.validate(), Err(Error::DegenerateFace { .. })));
    }

    #[test]
    fn unreferenced_vertex_is_dangling() {
        let (mut p, f) = octahedron().into_parts();
        p.push(Vec3::new(5.0, 5.0, 5.0));
        let m = TriMesh::new_unchecked(p, f);
        assert!(matches!(
            m.validate(),
            Err(Error::DanglingVertex { vertex: 6, faces: 0 })
        ));
    }

    #[test]
    fn bad_index_rejected() {
        let (p, mut f) = octahedron().into_parts();
        f[3][1] = 99;
        let m = TriMesh::new_unchecked(p, f);
        assert!(matches!(m.validate(), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn single_triangle_area_normal() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let ccw = TriMesh::new_unchecked(p.clone(), vec![[0, 1, 2]]);
        let (a, n) = ccw.face_area_normal(0).unwrap();
        assert_eq!(a, 0.5);
        assert_eq!(n, Vec3::new(0.0, 0.0, 1.0));
        let cw = TriMesh::new_unchecked(p, vec![[0, 2, 1]]);
        let (_, n) = cw.face_area_normal(0).unwrap();
        assert_eq!(n, Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn equilateral_side_two() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(1.0, 3f64.sqrt(), 0.0),
        ];
        let m = TriMesh::new_unchecked(p, vec![[0, 1, 2]]);
        let (a, _) = m.face_area_normal(0).unwrap();
        assert_relative_eq!(a, 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(m.face_quality(0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_area_face_errors() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        let m = TriMesh::new_unchecked(p, vec![[0, 1, 2]]);
        assert!(matches!(
            m.face_area_normal(0),
            Err(Error::DegenerateFace { .. })
        ));
    }

    #[test]
    fn vector_area_vanishes_on_closed_meshes() {
        for mesh in [
            generate::icosphere(3, 1.0).unwrap(),
            generate::torus(2.0, 0.7, 24, 12).unwrap(),
            generate::ellipsoid(1.2, 1.0, 0.85, 2).unwrap(),
        ] {
            let total: Vec3 = (0..mesh.face_count()).map(|f| 0.5 * mesh.face_cross(f)).sum();
            assert!(total.norm() <= 1e-12 * mesh.total_area());
        }
    }

    #[test]
    fn validate_is_idempotent() {
        let m = generate::icosphere(2, 1.0).unwrap();
        let before = m.positions().to_vec();
        let a = m.validate().unwrap();
        let b = m.validate().unwrap();
        assert_eq!(a, b);
        assert_eq!(before, m.positions());
    }

    #[test]
    fn generator_euler_characteristics() {
        for level in 0..5 {
            assert_eq!(generate::icosphere(level, 1.0).unwrap().euler_characteristic(), 2);
        }
        for (nu, nv) in [(8, 6), (16, 16), (32, 9)] {
            assert_eq!(generate::torus(3.0, 1.0, nu, nv).unwrap().euler_characteristic(), 0);
        }
    }
}
