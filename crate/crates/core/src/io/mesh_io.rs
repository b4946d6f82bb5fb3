use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};

/// A mesh together with the `#` comment lines found before the first record.
#[derive(Debug, Clone)]
pub struct MeshFile {
    pub mesh: TriMesh,
    pub comments: Vec<String>,
}

impl MeshFile {
    /// Value of a `# key=value` comment.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        comment_value(&self.comments, key)
    }
}

fn comment_value<'a>(comments: &'a [String], key: &str) -> Option<&'a str> {
    comments.iter().find_map(|c| {
        let (k, v) = c.split_once('=')?;
        (k.trim() == key).then(|| v.trim())
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_f64(path: &Path, line: usize, tok: Option<&str>) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(path, line, "missing coordinate"))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(path, line, format!("bad number {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite coordinate {tok:?}")));
    }
    Ok(v)
}

/// Reads an ASCII OBJ. Only `v` and triangular `f` records are used;
/// `f` tokens may carry `/vt/vn` suffixes and negative relative indices.
pub fn read_obj(path: impl AsRef<Path>) -> Result<MeshFile> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    let mut comments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if let Some(c) = l.strip_prefix('#') {
            if positions.is_empty() && faces.is_empty() {
                comments.push(c.trim().to_string());
            }
            continue;
        }
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(path, line, toks.next())?;
                let y = parse_f64(path, line, toks.next())?;
                let z = parse_f64(path, line, toks.next())?;
                positions.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| obj_index(path, line, t, positions.len()))
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("face has {} vertices; only triangles are supported", idx.len()),
                    ));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    finish(path, positions, faces, comments)
}

fn obj_index(path: &Path, line: usize, tok: &str, count: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let v: i64 = head
        .parse()
        .map_err(|_| Error::parse(path, line, format!("bad face index {tok:?}")))?;
    let idx = match v {
        0 => None,
        v if v > 0 => Some(v as usize - 1),
        v => (count as i64 + v).try_into().ok(),
    };
    idx.ok_or_else(|| Error::parse(path, line, format!("face index {v} out of range")))
}

fn finish(path: &Path, positions: Vec<Vec3>, faces: Vec<[usize; 3]>, comments: Vec<String>) -> Result<MeshFile> {
    if faces.is_empty() {
        return Err(Error::parse(path, 0, "no faces"));
    }
    let n = positions.len();
    if let Some(bad) = faces.iter().flatten().find(|&&i| i >= n) {
        return Err(Error::parse(path, 0, format!("face index {} exceeds vertex count {n}", bad + 1)));
    }
    Ok(MeshFile {
        mesh: TriMesh::new(positions, faces)?,
        comments,
    })
}

/// Reads an ASCII OFF file of triangles.
pub fn read_off(path: impl AsRef<Path>) -> Result<MeshFile> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut comments = Vec::new();
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if let Some(c) = l.strip_prefix('#') {
            comments.push(c.trim().to_string());
            None
        } else if l.is_empty() {
            None
        } else {
            Some((i + 1, l.to_string()))
        }
    });
    let (line, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse(path, line, "missing OFF header"))?;
    let counts_line = if rest.trim().is_empty() {
        lines.next().ok_or_else(|| Error::parse(path, line, "missing counts"))?
    } else {
        (line, rest.to_string())
    };
    let counts: Vec<usize> = counts_line
        .1
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::parse(path, counts_line.0, format!("bad count {t:?}"))))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(Error::parse(path, counts_line.0, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| Error::parse(path, 0, "truncated vertex list"))?;
        let mut t = l.split_whitespace();
        let x = parse_f64(path, line, t.next())?;
        let y = parse_f64(path, line, t.next())?;
        let z = parse_f64(path, line, t.next())?;
        positions.push(Vec3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| Error::parse(path, 0, "truncated face list"))?;
        let v: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(path, line, format!("bad index {t:?}"))))
            .collect::<Result<_>>()?;
        if v.first() != Some(&3) || v.len() < 4 {
            return Err(Error::parse(path, line, "only triangles are supported"));
        }
        faces.push([v[1], v[2], v[3]]);
    }
    drop(lines);
    finish(path, positions, faces, comments)
}

/// Reads `.obj` or `.off` by extension.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<MeshFile> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("off") => read_off(path),
        _ => read_obj(path),
    }
}

/// Writes an ASCII OBJ with 17 significant digits, 1-based indices and the
/// given lines as leading `#` comments.
pub fn write_obj(path: impl AsRef<Path>, mesh: &TriMesh, comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_obj_to(&mut w, mesh, comments)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_obj_to(w: &mut impl Write, mesh: &TriMesh, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    for p in mesh.positions() {
        writeln!(w, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}
