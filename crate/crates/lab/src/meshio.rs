//! Plain-text mesh files.
//!
//! ```text
//! stekloff-mesh v1
//! NODES <count>
//! <x> <y>
//! TRIANGLES <count>
//! <a> <b> <c> <tag>
//! BOUNDARY <count>
//! <a> <b>
//! ```
//!
//! Indices are zero-based, tags are 0 (outer), 1 (scatterer) and 2 (void), and
//! coordinates carry 17 significant digits so files round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use stekloff_core::mesh::{Mesh, RegionTag};

use crate::LabError;

pub const HEADER: &str = "stekloff-mesh v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct MeshFileError {
    pub line: usize,
    pub message: String,
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "NODES {}", mesh.node_count()).unwrap();
    for p in mesh.nodes() {
        writeln!(s, "{:.16e} {:.16e}", p[0], p[1]).unwrap();
    }
    writeln!(s, "TRIANGLES {}", mesh.triangle_count()).unwrap();
    for (t, tag) in mesh.triangles().iter().zip(mesh.tags()) {
        writeln!(s, "{} {} {} {}", t[0], t[1], t[2], tag.code()).unwrap();
    }
    writeln!(s, "BOUNDARY {}", mesh.boundary_edges().len()).unwrap();
    for e in mesh.boundary_edges() {
        writeln!(s, "{} {}", e[0], e[1]).unwrap();
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), MeshFileError> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Ok((i + 1, l));
            }
        }
        Err(MeshFileError { line: self.last + 1, message: "unexpected end of file".into() })
    }

    fn section(&mut self, name: &str) -> Result<usize, MeshFileError> {
        let (line, l) = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(name) {
            return Err(MeshFileError { line, message: format!("expected `{name} <count>`") });
        }
        let count = parts.next().and_then(|c| c.parse().ok());
        match (count, parts.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(MeshFileError { line, message: format!("expected `{name} <count>`") }),
        }
    }

    fn fields<T: std::str::FromStr, const N: usize>(&mut self, what: &str) -> Result<(usize, [T; N]), MeshFileError> {
        let (line, l) = self.next()?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != N {
            return Err(MeshFileError { line, message: format!("expected {N} fields for {what}, found {}", parts.len()) });
        }
        let mut out = Vec::with_capacity(N);
        for p in parts {
            out.push(p.parse::<T>().map_err(|_| MeshFileError { line, message: format!("cannot parse `{p}` in {what}") })?);
        }
        Ok((line, out.try_into().ok().expect("length checked")))
    }
}

pub fn read_mesh(text: &str) -> Result<Mesh, MeshFileError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (line, head) = lines.next()?;
    if head != HEADER {
        return Err(MeshFileError { line, message: format!("expected header `{HEADER}`") });
    }
    let n = lines.section("NODES")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, [x, y]) = lines.fields::<f64, 2>("a node")?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(MeshFileError { line, message: "node coordinates must be finite".into() });
        }
        nodes.push([x, y]);
    }
    let m = lines.section("TRIANGLES")?;
    let mut triangles = Vec::with_capacity(m);
    let mut tags = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, [a, b, c, tag]) = lines.fields::<usize, 4>("a triangle")?;
        if [a, b, c].iter().any(|&v| v >= n) {
            return Err(MeshFileError { line, message: format!("triangle references a node beyond {}", n - 1) });
        }
        let tag = u8::try_from(tag)
            .ok()
            .and_then(|t| RegionTag::from_code(t).ok())
            .ok_or_else(|| MeshFileError { line, message: format!("unknown region tag {tag}") })?;
        triangles.push([a, b, c]);
        tags.push(tag);
    }
    let k = lines.section("BOUNDARY")?;
    let mut edges = Vec::with_capacity(k);
    for _ in 0..k {
        let (line, [a, b]) = lines.fields::<usize, 2>("a boundary edge")?;
        if a >= n || b >= n {
            return Err(MeshFileError { line, message: "boundary edge references a missing node".into() });
        }
        edges.push([a, b]);
    }
    if let Ok((line, _)) = lines.next() {
        return Err(MeshFileError { line, message: "trailing content after the boundary section".into() });
    }
    Mesh::from_parts(nodes, triangles, tags, Some(edges))
        .map_err(|e| MeshFileError { line: lines.last, message: e.to_string() })
}

pub fn save(mesh: &Mesh, path: &Path) -> Result<(), LabError> {
    std::fs::write(path, write_mesh(mesh)).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<Mesh, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    read_mesh(&text).map_err(|e| LabError::MeshFile(format!("{}: {e}", path.display())))
}
