//! Interface-conforming triangulations of the disk with a tagged scatterer
//! and an optional circular void.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use spade::{ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation, AngleLimit};

use crate::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionTag {
    Outer,
    Scatterer,
    Void,
}

impl RegionTag {
    pub const ALL: [RegionTag; 3] = [RegionTag::Outer, RegionTag::Scatterer, RegionTag::Void];

    pub fn code(self) -> u8 {
        match self {
            RegionTag::Outer => 0,
            RegionTag::Scatterer => 1,
            RegionTag::Void => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(RegionTag::Outer),
            1 => Ok(RegionTag::Scatterer),
            2 => Ok(RegionTag::Void),
            _ => Err(Error::InvalidArgument(format!("unknown region tag {code}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

/// Disk of radius `disk_radius` containing an optional polygonal scatterer,
/// which in turn may contain a circular void.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSpec {
    pub disk_radius: f64,
    pub scatterer: Option<Vec<Point>>,
    pub void: Option<Circle>,
}

impl RegionSpec {
    pub fn disk(radius: f64) -> Self {
        Self { disk_radius: radius, scatterer: None, void: None }
    }

    /// `[-0.9, 1.1] x [-1.1, 0.9]` with `[0.1, 1.1] x [-1.1, -0.1]` removed.
    pub fn l_shape(radius: f64) -> Self {
        let poly = vec![[-0.9, -1.1], [0.1, -1.1], [0.1, -0.1], [1.1, -0.1], [1.1, 0.9], [-0.9, 0.9]];
        Self { disk_radius: radius, scatterer: Some(poly), void: None }
    }

    pub fn with_void(mut self, center: Point, radius: f64) -> Self {
        self.void = Some(Circle { center, radius });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.disk_radius;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Geometry(format!("disk radius must be positive, got {r}")));
        }
        if let Some(poly) = &self.scatterer {
            if poly.len() < 3 {
                return Err(Error::Geometry("scatterer polygon needs at least 3 vertices".into()));
            }
            if let Some(v) = poly.iter().find(|v| norm(**v) >= r) {
                return Err(Error::Geometry(format!("scatterer vertex {v:?} not strictly inside the disk")));
            }
            if polygon_area(poly).abs() <= 0.0 || !is_simple(poly) {
                return Err(Error::Geometry("scatterer polygon is degenerate or self-intersecting".into()));
            }
        }
        if let Some(c) = &self.void {
            if !(c.radius > 0.0) {
                return Err(Error::Geometry(format!("void radius must be positive, got {}", c.radius)));
            }
            let Some(poly) = &self.scatterer else {
                return Err(Error::Geometry("a void requires an enclosing scatterer".into()));
            };
            if !point_in_polygon(c.center, poly) {
                return Err(Error::Geometry("void center lies outside the scatterer".into()));
            }
            let clearance = (0..poly.len())
                .map(|i| point_segment_distance(c.center, poly[i], poly[(i + 1) % poly.len()]))
                .fold(f64::INFINITY, f64::min);
            if clearance <= c.radius {
                return Err(Error::Geometry(format!(
                    "void of radius {} does not fit inside the scatterer (clearance {clearance})",
                    c.radius
                )));
            }
        }
        Ok(())
    }
}

/// Conforming triangulation with per-triangle region tags and the boundary
/// circle traced counterclockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<RegionTag>,
    boundary_edges: Vec<[usize; 2]>,
    boundary_nodes: Vec<usize>,
    boundary_theta: Vec<f64>,
    radius: f64,
    mesh_size: f64,
}

impl Mesh {
    /// Validates raw data and derives the boundary description.
    ///
    /// Triangles are reoriented counterclockwise. `boundary_edges`, when given,
    /// must equal the derived counterclockwise boundary loop.
    pub fn from_parts(
        nodes: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        tags: Vec<RegionTag>,
        boundary_edges: Option<Vec<[usize; 2]>>,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        if tags.len() != triangles.len() {
            return Err(Error::DimensionMismatch { expected: triangles.len(), found: tags.len() });
        }
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= nodes.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing node")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a node")));
            }
            let a = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if a < 0.0 {
                tri.swap(1, 2);
            } else if !(a > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate")));
            }
        }
        let edges = EdgeTable::new(&triangles);
        let mut directed = Vec::new();
        for (e, &[a, b]) in edges.edges.iter().enumerate() {
            match edges.owners[e].len() {
                1 => {
                    let t = edges.owners[e][0];
                    directed.push(oriented(&triangles[t], a, b));
                }
                2 => {}
                n => return Err(Error::InvalidMesh(format!("edge ({a}, {b}) shared by {n} triangles"))),
            }
        }
        if directed.len() < 3 {
            return Err(Error::InvalidMesh("boundary has fewer than 3 edges".into()));
        }
        // The single-use edges must form one closed loop.
        let mut next = vec![usize::MAX; nodes.len()];
        for &[a, b] in &directed {
            if next[a] != usize::MAX {
                return Err(Error::InvalidMesh(format!("node {a} starts two boundary edges")));
            }
            next[a] = b;
        }
        let start = directed[0][0];
        let mut loop_nodes = vec![start];
        let mut cur = next[start];
        while cur != start {
            if cur == usize::MAX || loop_nodes.len() > directed.len() {
                return Err(Error::InvalidMesh("boundary edges do not form a closed loop".into()));
            }
            loop_nodes.push(cur);
            cur = next[cur];
        }
        if loop_nodes.len() != directed.len() {
            return Err(Error::InvalidMesh("boundary consists of more than one loop".into()));
        }
        let loop_pts: Vec<Point> = loop_nodes.iter().map(|&i| nodes[i]).collect();
        let enclosed = polygon_area(&loop_pts);
        let total: f64 = triangles.iter().map(|t| signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]])).sum();
        if (enclosed - total).abs() > 1e-9 * total.abs() {
            return Err(Error::InvalidMesh(format!("triangles overlap (area {total} vs boundary area {enclosed})")));
        }

        let radius = loop_nodes.iter().map(|&i| norm(nodes[i])).sum::<f64>() / loop_nodes.len() as f64;
        if let Some(&i) = loop_nodes.iter().find(|&&i| (norm(nodes[i]) - radius).abs() > 1e-9 * radius) {
            return Err(Error::InvalidMesh(format!("boundary node {i} is off the circle of radius {radius}")));
        }
        let p = (0..loop_nodes.len())
            .min_by(|&a, &b| theta(nodes[loop_nodes[a]]).total_cmp(&theta(nodes[loop_nodes[b]])))
            .unwrap();
        loop_nodes.rotate_left(p);
        let boundary_theta: Vec<f64> = loop_nodes.iter().map(|&i| theta(nodes[i])).collect();
        if boundary_theta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMesh("boundary angles are not strictly increasing".into()));
        }
        let nb = loop_nodes.len();
        let derived: Vec<[usize; 2]> = (0..nb).map(|k| [loop_nodes[k], loop_nodes[(k + 1) % nb]]).collect();
        if let Some(given) = boundary_edges {
            if given != derived {
                return Err(Error::InvalidMesh("boundary edges disagree with the triangulation".into()));
            }
        }
        let mesh_size = edges.edges.iter().map(|&[a, b]| dist(nodes[a], nodes[b])).fold(0.0, f64::max);
        Ok(Self {
            nodes,
            triangles,
            tags,
            boundary_edges: derived,
            boundary_nodes: loop_nodes,
            boundary_theta,
            radius,
            mesh_size,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn tags(&self) -> &[RegionTag] {
        &self.tags
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Boundary node indices sorted by angle in `[0, 2π)`.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_theta(&self) -> &[f64] {
        &self.boundary_theta
    }

    /// Radius of the circle carrying the boundary nodes.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Longest edge.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }
}

/// Sum of triangle areas carrying `tag`.
pub fn region_measure(mesh: &Mesh, tag: RegionTag) -> f64 {
    (0..mesh.triangle_count()).filter(|&t| mesh.tags[t] == tag).map(|t| mesh.triangle_area(t)).sum()
}

/// Edges shared by two triangles with different tags, as sorted node pairs.
pub fn interface_edges(mesh: &Mesh) -> Vec<[usize; 2]> {
    let edges = EdgeTable::new(&mesh.triangles);
    edges
        .edges
        .iter()
        .zip(&edges.owners)
        .filter(|(_, o)| o.len() == 2 && mesh.tags[o[0]] != mesh.tags[o[1]])
        .map(|(e, _)| *e)
        .collect()
}

/// Constrained Delaunay mesh of `spec` with every edge no longer than
/// `target_size`.
pub fn build_mesh(spec: &RegionSpec, target_size: f64) -> Result<Mesh> {
    spec.validate()?;
    if !(target_size > 0.0 && target_size.is_finite()) {
        return Err(Error::InvalidArgument(format!("target size must be positive, got {target_size}")));
    }
    let r = spec.disk_radius;
    let mut vertices: Vec<Point2<f64>> = Vec::new();
    let mut constraints: Vec<[usize; 2]> = Vec::new();
    let mut add_loop = |pts: &[Point]| {
        let base = vertices.len();
        for p in pts {
            vertices.push(Point2::new(p[0], p[1]));
        }
        for i in 0..pts.len() {
            constraints.push([base + i, base + (i + 1) % pts.len()]);
        }
    };

    let n_outer = ((2.0 * PI * r / target_size).ceil() as usize).max(8);
    add_loop(&circle_polygon(Circle { center: [0.0, 0.0], radius: r }, n_outer));
    let scatterer = spec.scatterer.as_ref().map(|p| subdivide(&ccw(p), target_size));
    if let Some(poly) = &scatterer {
        add_loop(poly);
    }
    let void_poly = spec.void.map(|c| {
        let n = ((2.0 * PI * c.radius / target_size).ceil() as usize).max(24);
        circle_polygon(c, n)
    });
    if let Some(poly) = &void_poly {
        add_loop(poly);
    }

    let base_cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(vertices, constraints)
        .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;

    let mut max_area = 1.3 * target_size * target_size;
    for _ in 0..30 {
        let mut cdt = base_cdt.clone();
        let budget = (40.0 * PI * r * r / max_area) as usize + 10_000;
        let result = cdt.refine(
            RefinementParameters::<f64>::new()
                .with_angle_limit(AngleLimit::from_deg(25.0))
                .with_max_allowed_area(max_area)
                .with_max_additional_vertices(budget),
        );
        if !result.refinement_complete {
            return Err(Error::Geometry("mesh refinement exhausted its vertex budget".into()));
        }
        let mesh = from_cdt(&cdt, spec, scatterer.as_deref(), void_poly.as_deref())?;
        if mesh.mesh_size <= target_size {
            return Ok(mesh);
        }
        max_area *= 0.85;
    }
    Err(Error::Geometry(format!("could not reach mesh size {target_size}")))
}

fn from_cdt(
    cdt: &ConstrainedDelaunayTriangulation<Point2<f64>>,
    spec: &RegionSpec,
    scatterer: Option<&[Point]>,
    void_poly: Option<&[Point]>,
) -> Result<Mesh> {
    let mut nodes: Vec<Point> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    let mut tags = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let tri = face.vertices().map(|v| v.fix().index());
        let c = centroid([nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]]);
        let tag = if void_poly.is_some_and(|p| point_in_polygon(c, p)) {
            RegionTag::Void
        } else if scatterer.is_some_and(|p| point_in_polygon(c, p)) {
            RegionTag::Scatterer
        } else {
            RegionTag::Outer
        };
        triangles.push(tri);
        tags.push(tag);
    }
    // Split points on the hull and on the void polygon lie on chords; move
    // them onto the true circles.
    let edges = EdgeTable::new(&triangles);
    let void_circle = spec.void;
    for (e, &[a, b]) in edges.edges.iter().enumerate() {
        let owners = &edges.owners[e];
        let target = if owners.len() == 1 {
            Some(Circle { center: [0.0, 0.0], radius: spec.disk_radius })
        } else if owners.len() == 2 && (tags[owners[0]] == RegionTag::Void) != (tags[owners[1]] == RegionTag::Void) {
            void_circle
        } else {
            None
        };
        if let Some(c) = target {
            for v in [a, b] {
                nodes[v] = project(nodes[v], c);
            }
        }
    }
    Mesh::from_parts(nodes, triangles, tags, None)
}

/// Uniform red refinement. Midpoints of boundary edges are projected onto
/// the boundary circle; midpoints of void interface edges onto the void
/// circle fitted through the existing interface nodes.
pub fn refine(mesh: &Mesh) -> Mesh {
    let edges = EdgeTable::new(&mesh.triangles);
    let mut nodes = mesh.nodes.clone();
    let mut mid = Vec::with_capacity(edges.edges.len());
    let void_edges: Vec<bool> = edges
        .owners
        .iter()
        .map(|o| {
            o.len() == 2 && (mesh.tags[o[0]] == RegionTag::Void) != (mesh.tags[o[1]] == RegionTag::Void)
        })
        .collect();
    let void_circle = {
        let pts: Vec<Point> = edges
            .edges
            .iter()
            .zip(&void_edges)
            .filter(|(_, &v)| v)
            .flat_map(|(e, _)| [mesh.nodes[e[0]], mesh.nodes[e[1]]])
            .collect();
        fit_circle(&pts)
    };
    let outer = Circle { center: [0.0, 0.0], radius: mesh.radius };
    for (e, &[a, b]) in edges.edges.iter().enumerate() {
        let mut m = [(nodes[a][0] + nodes[b][0]) / 2.0, (nodes[a][1] + nodes[b][1]) / 2.0];
        if edges.owners[e].len() == 1 {
            m = project(m, outer);
        } else if void_edges[e] {
            if let Some(c) = void_circle {
                m = project(m, c);
            }
        }
        mid.push(nodes.len());
        nodes.push(m);
    }
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    let mut tags = Vec::with_capacity(4 * mesh.triangles.len());
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let [e0, e1, e2] = edges.tri_edges[t];
        let (mbc, mca, mab) = (mid[e0], mid[e1], mid[e2]);
        triangles.extend_from_slice(&[[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mbc, mca, mab]]);
        tags.extend_from_slice(&[mesh.tags[t]; 4]);
    }
    Mesh::from_parts(nodes, triangles, tags, None).expect("red refinement of a valid mesh is valid")
}

/// Unique edges of a triangle list with their owning triangles.
struct EdgeTable {
    edges: Vec<[usize; 2]>,
    owners: Vec<Vec<usize>>,
    /// Edge ids opposite each local vertex.
    tri_edges: Vec<[usize; 3]>,
}

impl EdgeTable {
    fn new(triangles: &[[usize; 3]]) -> Self {
        let mut list: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for l in 0..3 {
                let (a, b) = (tri[(l + 1) % 3], tri[(l + 2) % 3]);
                list.push((a.min(b), a.max(b), t, l));
            }
        }
        list.sort_unstable();
        let mut edges = Vec::new();
        let mut owners: Vec<Vec<usize>> = Vec::new();
        let mut tri_edges = vec![[0usize; 3]; triangles.len()];
        for (a, b, t, l) in list {
            if edges.last() != Some(&[a, b]) {
                edges.push([a, b]);
                owners.push(Vec::with_capacity(2));
            }
            owners.last_mut().unwrap().push(t);
            tri_edges[t][l] = edges.len() - 1;
        }
        Self { edges, owners, tri_edges }
    }
}

fn oriented(tri: &[usize; 3], a: usize, b: usize) -> [usize; 2] {
    for l in 0..3 {
        if tri[l] == a && tri[(l + 1) % 3] == b {
            return [a, b];
        }
    }
    [b, a]
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn theta(p: Point) -> f64 {
    let t = p[1].atan2(p[0]);
    if t < 0.0 { t + 2.0 * PI } else { t }
}

fn centroid(p: [Point; 3]) -> Point {
    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
}

fn project(p: Point, c: Circle) -> Point {
    let d = [p[0] - c.center[0], p[1] - c.center[1]];
    let s = c.radius / norm(d);
    [c.center[0] + s * d[0], c.center[1] + s * d[1]]
}

fn circle_polygon(c: Circle, n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            [c.center[0] + c.radius * t.cos(), c.center[1] + c.radius * t.sin()]
        })
        .collect()
}

fn ccw(poly: &[Point]) -> Vec<Point> {
    let mut p = poly.to_vec();
    if polygon_area(&p) < 0.0 {
        p.reverse();
    }
    p
}

fn subdivide(poly: &[Point], max_len: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let k = ((dist(a, b) / max_len).ceil() as usize).max(1);
        for j in 0..k {
            let s = j as f64 / k as f64;
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

pub(crate) fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        a[0] * b[1] - b[0] * a[1]
    }).sum::<f64>()
}

/// Even-odd rule.
pub(crate) fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + s * ab[0], a[1] + s * ab[1]])
}

fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    let cross = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            let d1 = cross(a, b, c);
            let d2 = cross(a, b, d);
            let d3 = cross(c, d, a);
            let d4 = cross(c, d, b);
            if d1 * d2 <= 0.0 && d3 * d4 <= 0.0 {
                return false;
            }
        }
    }
    true
}

/// Algebraic least-squares circle through `pts`.
fn fit_circle(pts: &[Point]) -> Option<Circle> {
    if pts.len() < 3 {
        return None;
    }
    // minimize Σ (x² + y² + D x + E y + F)²
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for p in pts {
        let row = [p[0], p[1], 1.0];
        let z = -(p[0] * p[0] + p[1] * p[1]);
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * z;
        }
    }
    let sol = solve3(m, rhs)?;
    let center = [-sol[0] / 2.0, -sol[1] / 2.0];
    let r2 = center[0] * center[0] + center[1] * center[1] - sol[2];
    (r2 > 0.0).then(|| Circle { center, radius: r2.sqrt() })
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for k in 0..3 {
        let p = (k..3).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k].abs() < 1e-300 {
            return None;
        }
        m.swap(k, p);
        b.swap(k, p);
        for i in k + 1..3 {
            let f = m[i][k] / m[k][k];
            let pivot_row = m[k];
            for (a, b) in m[i][k..].iter_mut().zip(&pivot_row[k..]) {
                *a -= f * b;
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let s: f64 = (k + 1..3).map(|j| m[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / m[k][k];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_triangle() -> Mesh {
        let nodes = circle_polygon(Circle { center: [0.0, 0.0], radius: 1.0 }, 3);
        Mesh::from_parts(nodes, vec![[0, 1, 2]], vec![RegionTag::Outer], None).unwrap()
    }

    #[test]
    fn homogeneous_disk_is_outer_and_on_circle() {
        let mesh = build_mesh(&RegionSpec::disk(1.5), 0.5).unwrap();
        assert!(mesh.tags().iter().all(|&t| t == RegionTag::Outer));
        assert!(mesh.mesh_size() <= 0.5);
        for &i in mesh.boundary_nodes() {
            assert!((norm(mesh.nodes()[i]) - 1.5).abs() < 1e-12);
        }
        assert!((region_measure(&mesh, RegionTag::Outer) - mesh.total_area()).abs() < 1e-12);
        assert_eq!(region_measure(&mesh, RegionTag::Void), 0.0);
    }

    #[test]
    fn l_shape_area() {
        let mesh = build_mesh(&RegionSpec::l_shape(1.5), 0.2).unwrap();
        assert!((region_measure(&mesh, RegionTag::Scatterer) - 3.0).abs() < 1e-12);
        assert!(interface_edges(&mesh).len() >= 40);
    }

    #[test]
    fn void_area_matches_disk() {
        let h = 0.1;
        let mesh = build_mesh(&RegionSpec::l_shape(1.5).with_void([0.1, 0.4], h), h / 4.0).unwrap();
        let area = region_measure(&mesh, RegionTag::Void);
        assert!((area / (PI * h * h) - 1.0).abs() < 0.02, "{area}");
        assert!((region_measure(&mesh, RegionTag::Scatterer) + area - 3.0).abs() < 1e-3);
    }

    #[test]
    fn small_void_area() {
        let h = 0.05;
        let mesh = build_mesh(&RegionSpec::l_shape(1.5).with_void([0.1, 0.4], h), 0.1).unwrap();
        let area = region_measure(&mesh, RegionTag::Void);
        assert!((area / (PI * h * h) - 1.0).abs() < 0.02, "{area}");
    }

    #[test]
    fn infeasible_geometry_is_rejected() {
        let outside = RegionSpec { disk_radius: 1.0, ..RegionSpec::l_shape(1.5) };
        assert!(matches!(build_mesh(&outside, 0.2), Err(Error::Geometry(_))));
        let bad_void = RegionSpec::l_shape(1.5).with_void([0.6, -0.6], 0.1);
        assert!(matches!(build_mesh(&bad_void, 0.2), Err(Error::Geometry(_))));
        let straddling = RegionSpec::l_shape(1.5).with_void([0.1, 0.85], 0.1);
        assert!(matches!(build_mesh(&straddling, 0.2), Err(Error::Geometry(_))));
        let orphan = RegionSpec::disk(1.5).with_void([0.0, 0.0], 0.1);
        assert!(matches!(build_mesh(&orphan, 0.2), Err(Error::Geometry(_))));
        assert!(build_mesh(&RegionSpec::disk(1.5), 0.0).is_err());
    }

    #[test]
    fn refinement_quadruples_triangles() {
        let m = single_triangle();
        let r = refine(&m);
        assert_eq!(r.triangle_count(), 4);
        assert_eq!(r.boundary_nodes().len(), 6);
        let mesh = build_mesh(&RegionSpec::l_shape(1.5).with_void([0.1, 0.4], 0.1), 0.2).unwrap();
        let fine = refine(&mesh);
        assert_eq!(fine.triangle_count(), 4 * mesh.triangle_count());
        assert!((region_measure(&fine, RegionTag::Scatterer) + region_measure(&fine, RegionTag::Void) - 3.0).abs() < 1e-3);
        let twice = refine(&fine);
        assert_eq!(twice.boundary_nodes().len(), 4 * mesh.boundary_nodes().len());
        assert!(twice.mesh_size() < 0.3 * mesh.mesh_size());
    }

    #[test]
    fn refined_void_stays_circular() {
        let h = 0.1;
        let c = [0.1, 0.4];
        let mesh = build_mesh(&RegionSpec::l_shape(1.5).with_void(c, h), 0.05).unwrap();
        let fine = refine(&mesh);
        for [a, b] in interface_edges(&fine) {
            let tags: Vec<_> = [a, b].iter().map(|&v| dist(fine.nodes()[v], c)).collect();
            if tags.iter().all(|d| (d - h).abs() < 0.2 * h) {
                assert!(tags.iter().all(|d| (d - h).abs() < 1e-10), "{tags:?}");
            }
        }
        let err_coarse = (region_measure(&mesh, RegionTag::Void) - PI * h * h).abs();
        let err_fine = (region_measure(&fine, RegionTag::Void) - PI * h * h).abs();
        assert!(err_fine < 0.5 * err_coarse);
    }

    #[test]
    fn disk_area_converges_at_second_order() {
        let mut mesh = build_mesh(&RegionSpec::disk(1.5), 0.4).unwrap();
        let exact = PI * 1.5 * 1.5;
        let mut sizes = Vec::new();
        let mut errs = Vec::new();
        for _ in 0..4 {
            sizes.push(mesh.boundary_edges().iter().map(|&[a, b]| dist(mesh.nodes()[a], mesh.nodes()[b])).fold(0.0, f64::max));
            errs.push(exact - mesh.total_area());
            mesh = refine(&mesh);
        }
        assert!(errs.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        let fit = crate::stats::fit_slope(&sizes, &errs).unwrap();
        assert!(fit.slope >= 1.9, "{}", fit.slope);
    }

    #[test]
    fn interface_edges_separate_tags() {
        let mesh = build_mesh(&RegionSpec::l_shape(1.5).with_void([0.1, 0.4], 0.1), 0.1).unwrap();
        let set = interface_edges(&mesh);
        let edges = EdgeTable::new(mesh.triangles());
        for (e, o) in edges.edges.iter().zip(&edges.owners) {
            if o.len() == 2 && mesh.tags()[o[0]] != mesh.tags()[o[1]] {
                assert!(set.binary_search(e).is_ok());
            }
        }
    }

    #[test]
    fn from_parts_rejects_broken_meshes() {
        let nodes = circle_polygon(Circle { center: [0.0, 0.0], radius: 1.0 }, 4);
        // overlapping triangles
        let r = Mesh::from_parts(nodes.clone(), vec![[0, 1, 2], [0, 1, 3]], vec![RegionTag::Outer; 2], None);
        assert!(r.is_err());
        let r = Mesh::from_parts(nodes.clone(), vec![[0, 1, 7]], vec![RegionTag::Outer], None);
        assert!(matches!(r, Err(Error::InvalidMesh(_))));
        let r = Mesh::from_parts(nodes.clone(), vec![[0, 1, 2]], vec![], None);
        assert!(r.is_err());
        let ok = Mesh::from_parts(nodes.clone(), vec![[0, 1, 2], [0, 2, 3]], vec![RegionTag::Outer; 2], None).unwrap();
        let wrong = vec![[1, 0], [2, 1], [3, 2], [0, 3]];
        assert!(Mesh::from_parts(nodes, vec![[0, 1, 2], [0, 2, 3]], vec![RegionTag::Outer; 2], Some(wrong)).is_err());
        assert_eq!(ok.boundary_edges(), &[[0, 1], [1, 2], [2, 3], [3, 0]]);
    }

    #[test]
    fn circle_fit_recovers_circle() {
        let c = Circle { center: [0.3, -0.2], radius: 0.07 };
        let fit = fit_circle(&circle_polygon(c, 13)).unwrap();
        assert!((fit.radius - c.radius).abs() < 1e-13);
        assert!(dist(fit.center, c.center) < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn generated_meshes_are_valid(t in 0.15f64..0.6, cx in -0.5f64..-0.1, cy in 0.0f64..0.5, h in 0.05f64..0.2) {
            let mesh = build_mesh(&RegionSpec::l_shape(1.5).with_void([cx, cy], h), t).unwrap();
            prop_assert!(mesh.mesh_size() <= t);
            for k in 0..mesh.triangle_count() {
                prop_assert!(mesh.triangle_area(k) > 0.0);
            }
            let th = mesh.boundary_theta();
            prop_assert!(th[0] >= 0.0 && *th.last().unwrap() < 2.0 * PI);
            prop_assert!(th.windows(2).all(|w| w[1] > w[0]));
            let void = region_measure(&mesh, RegionTag::Void);
            prop_assert!((void / (PI * h * h) - 1.0).abs() < 0.05);
        }
    }
}
