//! Mesh-quality maintenance between flow steps: Delaunay-style edge flips
//! and tangential umbrella smoothing. Neither changes the surface shape to
//! first order; the flow re-projects the volume afterwards.

use std::collections::HashSet;
use std::f64::consts::PI;

use crate::ddg::vertex_normals;
use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityConfig {
    pub enabled: bool,
    /// An edge is flipped when the two angles opposite it sum to more than this.
    pub flip_threshold_angle: f64,
    pub tangential_smoothing_weight: f64,
    pub cadence_steps: usize,
    /// Minimum acceptable [`TriMesh::min_face_quality`] after a pass.
    pub min_quality: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            enabled: false,
            flip_threshold_angle: PI,
            tangential_smoothing_weight: 0.1,
            cadence_steps: 100,
            min_quality: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QualityReport {
    pub mesh: TriMesh,
    /// Flipped edges as `(old a, old b, new c, new d)` vertex quadruples.
    pub flips: Vec<[usize; 4]>,
    pub max_displacement: f64,
}

fn angle_at(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let (u, v) = (a - p, b - p);
    u.cross(&v).norm().atan2(u.dot(&v))
}

fn traverses(face: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| face[k] == a && face[(k + 1) % 3] == b)
}

/// One sweep of edge flips. Returns the new face list and the flips made.
pub fn flip_edges(mesh: &TriMesh, threshold: f64) -> (Vec<[usize; 3]>, Vec<[usize; 4]>) {
    let p = mesh.positions();
    let mut faces: Vec<[usize; 3]> = mesh.faces().to_vec();
    let table = mesh.edge_table();
    let mut valence = vec![0usize; p.len()];
    for &[a, b] in &table.edges {
        valence[a] += 1;
        valence[b] += 1;
    }
    let mut edges: HashSet<[usize; 2]> = table.edges.iter().copied().collect();
    let mut touched = vec![false; faces.len()];
    let mut flips = Vec::new();

    for (e, &[a, b]) in table.edges.iter().enumerate() {
        let [f0, f1] = table.edge_faces[e];
        if touched[f0] || touched[f1] {
            continue;
        }
        let opposite = |f: usize| -> usize {
            *faces[f].iter().find(|&&v| v != a && v != b).expect("triangle")
        };
        let (c, d) = (opposite(f0), opposite(f1));
        if c == d || valence[a] <= 3 || valence[b] <= 3 {
            continue;
        }
        let key = [c.min(d), c.max(d)];
        if edges.contains(&key) {
            continue;
        }
        let sum = angle_at(p[c], p[a], p[b]) + angle_at(p[d], p[a], p[b]);
        if sum <= threshold {
            continue;
        }
        // orient the two new faces like the old ones
        let (s, t) = if traverses(&faces[f0], a, b) { (a, b) } else { (b, a) };
        // f0 = (s, t, c), f1 = (t, s, d)
        let new0 = [c, s, d];
        let new1 = [d, t, c];
        let old_normal = (p[t] - p[s]).cross(&(p[c] - p[s])) + (p[s] - p[t]).cross(&(p[d] - p[t]));
        let n0 = (p[s] - p[c]).cross(&(p[d] - p[c]));
        let n1 = (p[t] - p[d]).cross(&(p[c] - p[d]));
        if n0.dot(&old_normal) <= 0.0 || n1.dot(&old_normal) <= 0.0 {
            continue;
        }
        faces[f0] = new0;
        faces[f1] = new1;
        touched[f0] = true;
        touched[f1] = true;
        valence[a] -= 1;
        valence[b] -= 1;
        valence[c] += 1;
        valence[d] += 1;
        edges.remove(&[a, b]);
        edges.insert(key);
        flips.push([a, b, c, d]);
    }
    (faces, flips)
}

/// Moves every vertex by `weight` times the tangential part of its umbrella
/// vector `mean(neighbors) − p`.
pub fn tangential_smoothing(mesh: &TriMesh, weight: f64) -> Result<Vec<Vec3>> {
    if weight == 0.0 {
        return Ok(mesh.positions().to_vec());
    }
    let normals = vertex_normals(mesh)?;
    let p = mesh.positions();
    let nbrs = mesh.vertex_neighbors();
    Ok(p.iter()
        .enumerate()
        .map(|(i, x)| {
            let mean: Vec3 = nbrs[i].iter().map(|&j| p[j]).sum::<Vec3>() / nbrs[i].len() as f64;
            let u = mean - x;
            let n = normals[i];
            x + weight * (u - n * u.dot(&n))
        })
        .collect())
}

/// Flips then smooths. Fails with `QualityCollapse` when the result is worse
/// than `config.min_quality`.
pub fn quality_pass(mesh: &TriMesh, config: &QualityConfig) -> Result<QualityReport> {
    let (faces, flips) = flip_edges(mesh, config.flip_threshold_angle);
    let flipped = if flips.is_empty() {
        mesh.clone()
    } else {
        TriMesh::new_unchecked(mesh.positions().to_vec(), faces)
    };
    let positions = tangential_smoothing(&flipped, config.tangential_smoothing_weight)?;
    let max_displacement = positions
        .iter()
        .zip(mesh.positions())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let out = flipped.with_positions(positions);
    let quality = out.min_face_quality();
    if !(quality >= config.min_quality) {
        return Err(Error::QualityCollapse {
            quality,
            floor: config.min_quality,
        });
    }
    Ok(QualityReport {
        mesh: out,
        flips,
        max_displacement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::signed_volume;
    use crate::generate;

    #[test]
    fn icosphere_is_already_delaunay() {
        let m = generate::icosphere(3, 1.0).unwrap();
        let (_, flips) = flip_edges(&m, PI);
        assert!(flips.is_empty());
    }

    #[test]
    fn smoothing_is_tangential() {
        let m = generate::ellipsoid(1.2, 1.0, 0.85, 3).unwrap();
        let normals = vertex_normals(&m).unwrap();
        let moved = tangential_smoothing(&m, 0.1).unwrap();
        for (i, (a, b)) in moved.iter().zip(m.positions()).enumerate() {
            assert!((a - b).dot(&normals[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weight_is_identity() {
        let m = generate::ellipsoid(1.2, 1.0, 0.85, 2).unwrap();
        assert_eq!(tangential_smoothing(&m, 0.0).unwrap(), m.positions());
    }

    #[test]
    fn flips_repair_a_bad_diagonal() {
        let mut m = generate::icosphere(2, 1.0).unwrap();
        let (mut pos, faces) = m.clone().into_parts();
        // stretch along x so many edges become non-Delaunay
        for p in &mut pos {
            p.x *= 3.0;
        }
        m = TriMesh::new(pos, faces).unwrap();
        let (faces, flips) = flip_edges(&m, PI);
        assert!(!flips.is_empty());
        let out = TriMesh::new(m.positions().to_vec(), faces).unwrap();
        assert_eq!(out.euler_characteristic(), 2);
        assert!((signed_volume(&out) - signed_volume(&m)).abs() < 0.05 * signed_volume(&m));
    }

    #[test]
    fn pass_changes_volume_only_slightly() {
        let m = generate::ellipsoid(1.2, 1.0, 0.85, 4).unwrap();
        let v0 = signed_volume(&m);
        let rel = |weight: f64| {
            let cfg = QualityConfig {
                enabled: true,
                tangential_smoothing_weight: weight,
                ..QualityConfig::default()
            };
            let out = quality_pass(&m, &cfg).unwrap().mesh;
            (signed_volume(&out) - v0).abs() / v0
        };
        assert!(rel(0.04) <= 1e-6);
        assert!(rel(0.1) <= 5e-6);
    }

    #[test]
    fn collapse_is_reported() {
        let m = generate::icosphere(2, 1.0).unwrap();
        let cfg = QualityConfig {
            min_quality: 2.0,
            ..QualityConfig::default()
        };
        assert!(matches!(quality_pass(&m, &cfg), Err(Error::QualityCollapse { .. })));
    }
}
