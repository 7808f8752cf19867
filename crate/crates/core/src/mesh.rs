//! Conforming triangulations and newest-vertex bisection.
//!
//! Every triangle stores its vertices counter-clockwise together with the
//! local index of its *peak*: the refinement edge is the edge opposite the
//! peak. Children produced by bisection always have the new midpoint as their
//! peak, stored in local slot 0.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::P1Function;

pub type Point = [f64; 2];

/// Axis-aligned rectangle used to seed the initial triangulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub min: Point,
    pub max: Point,
}

impl Rectangle {
    pub fn unit_square() -> Self {
        Self {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        }
    }
}

/// An edge with its one or two adjacent triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, lower index first.
    pub vertices: [usize; 2],
    pub triangles: [usize; 2],
    /// `false` for boundary edges, in which case `triangles[1]` repeats `triangles[0]`.
    pub interior: bool,
}

/// Geometry of a single P1 element.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Gradients of the three barycentric coordinates (constant on the element).
    pub grads: [Point; 3],
    /// Longest edge length.
    pub diameter: f64,
}

impl ElementGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [a, b, c] = vertices;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let area = 0.5 * det;
        // grad lambda_i = rot(x_{i+2} - x_{i+1}) / (2 area)
        let mut grads = [[0.0; 2]; 3];
        for (i, g) in grads.iter_mut().enumerate() {
            let p = vertices[(i + 1) % 3];
            let q = vertices[(i + 2) % 3];
            *g = [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
        }
        let diameter = (0..3)
            .map(|i| dist(vertices[i], vertices[(i + 1) % 3]))
            .fold(0.0, f64::max);
        Self {
            vertices,
            area,
            grads,
            diameter,
        }
    }

    /// Maps barycentric coordinates to a physical point.
    pub fn point(&self, bary: [f64; 3]) -> Point {
        let v = &self.vertices;
        [
            bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
            bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
        ]
    }

    pub fn centroid(&self) -> Point {
        self.point([1.0 / 3.0; 3])
    }

    /// Gradient of the P1 function with the given nodal values.
    pub fn gradient(&self, values: [f64; 3]) -> Point {
        let mut g = [0.0; 2];
        for (v, grad) in values.iter().zip(&self.grads) {
            g[0] += v * grad[0];
            g[1] += v * grad[1];
        }
        g
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let mut l = [0.0; 3];
        for (i, li) in l.iter_mut().enumerate() {
            let v = self.vertices[i];
            let g = self.grads[i];
            // lambda_i is 1 at vertex i and affine
            *li = 1.0 + g[0] * (p[0] - v[0]) + g[1] * (p[1] - v[1]);
        }
        l
    }

    /// Smallest interior angle in radians.
    pub fn min_angle(&self) -> f64 {
        (0..3)
            .map(|i| {
                let p = self.vertices[i];
                let a = sub(self.vertices[(i + 1) % 3], p);
                let b = sub(self.vertices[(i + 2) % 3], p);
                let cos = (a[0] * b[0] + a[1] * b[1]) / (norm(a) * norm(b));
                cos.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A conforming triangulation with refinement-edge bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    peaks: Vec<u8>,
    edges: Vec<Edge>,
    /// `triangle_edges[t][i]` is the edge opposite local vertex `i`.
    triangle_edges: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    dof_of_vertex: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    generation: usize,
    /// Number of vertices inherited from the parent mesh.
    inherited: usize,
    /// Edge endpoints of every vertex created by the last refinement.
    midpoint_parents: Vec<[usize; 2]>,
    /// Index in the parent mesh of the triangle each triangle came from.
    parent_triangles: Vec<usize>,
}

impl Mesh {
    /// Builds a mesh from counter-clockwise triangles and the local index of
    /// each triangle's peak (the vertex opposite its refinement edge).
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, peaks: Vec<u8>) -> Result<Self> {
        Self::assemble(vertices, triangles, peaks, 0, None)
    }

    /// Builds a mesh whose refinement edges are the longest edge of each
    /// triangle; ties go to the edge whose opposite vertex has the lowest
    /// global index.
    pub fn with_longest_edge_peaks(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let peaks = triangles
            .iter()
            .map(|tri| {
                let len = |i: usize| dist(vertices[tri[(i + 1) % 3]], vertices[tri[(i + 2) % 3]]);
                let mut best = 0;
                for i in 1..3 {
                    let (li, lb) = (len(i), len(best));
                    // lengths equal up to roundoff count as ties
                    if li > lb * (1.0 + 1e-12) || (li >= lb * (1.0 - 1e-12) && tri[i] < tri[best]) {
                        best = i;
                    }
                }
                best as u8
            })
            .collect();
        Self::new(vertices, triangles, peaks)
    }

    fn assemble(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        peaks: Vec<u8>,
        generation: usize,
        parents: Option<(usize, Vec<[usize; 2]>)>,
    ) -> Result<Self> {
        if peaks.len() != triangles.len() {
            return Err(Error::DimensionMismatch {
                expected: triangles.len(),
                found: peaks.len(),
            });
        }
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if peaks[t] > 2 {
                return Err(Error::InvalidMesh(format!("triangle {t} has peak index {}", peaks[t])));
            }
            let geom = ElementGeometry::new(tri.map(|v| vertices[v]));
            if !(geom.area > 0.0) {
                return Err(Error::DegenerateTriangle {
                    element: t,
                    area: geom.area,
                });
            }
        }

        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 3 / 2 + 8);
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for (i, slot) in te.iter_mut().enumerate() {
                let key = edge_key(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                *slot = match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.interior {
                            return Err(Error::InvalidMesh(format!(
                                "edge {key:?} is shared by more than two triangles"
                            )));
                        }
                        edge.triangles[1] = t;
                        edge.interior = true;
                        e
                    }
                    None => {
                        let e = edges.len();
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            triangles: [t, t],
                            interior: false,
                        });
                        lookup.insert(key, e);
                        e
                    }
                };
            }
            triangle_edges.push(te);
        }

        let mut boundary = vec![false; nv];
        for e in edges.iter().filter(|e| !e.interior) {
            boundary[e.vertices[0]] = true;
            boundary[e.vertices[1]] = true;
        }
        let mut dof_of_vertex = vec![None; nv];
        let mut free_dofs = Vec::new();
        for v in 0..nv {
            if !boundary[v] {
                dof_of_vertex[v] = Some(free_dofs.len());
                free_dofs.push(v);
            }
        }
        let (inherited, midpoint_parents) = parents.unwrap_or((nv, Vec::new()));
        let parent_triangles = (0..triangles.len()).collect();
        Ok(Self {
            vertices,
            triangles,
            peaks,
            edges,
            triangle_edges,
            boundary,
            dof_of_vertex,
            free_dofs,
            generation,
            inherited,
            midpoint_parents,
            parent_triangles,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_free_dofs(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn peak(&self, t: usize) -> usize {
        self.peaks[t] as usize
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Edge index of the refinement edge of triangle `t`.
    pub fn refinement_edge(&self, t: usize) -> usize {
        self.triangle_edges[t][self.peak(t)]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Free (interior) vertex indices in increasing order.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Free-dof index of vertex `v`, `None` on the boundary.
    pub fn dof(&self, v: usize) -> Option<usize> {
        self.dof_of_vertex[v]
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::new(self.triangles[t].map(|v| self.vertices[v]))
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.geometry(t).min_angle())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.geometry(t).area).sum()
    }

    /// Vertices created by the refinement that produced this mesh, with the
    /// endpoints of the edge each one bisects.
    pub fn new_vertices(&self) -> impl Iterator<Item = (usize, [usize; 2])> + '_ {
        self.midpoint_parents
            .iter()
            .enumerate()
            .map(move |(i, p)| (self.inherited + i, *p))
    }

    /// For each triangle, the triangle of the parent mesh it was cut from.
    pub fn parent_triangles(&self) -> &[usize] {
        &self.parent_triangles
    }

    /// Triangles whose parent is in `parents`.
    pub fn children_of(&self, parents: &[usize]) -> Vec<usize> {
        let mut is_parent = vec![false; self.parent_triangles.iter().max().map_or(0, |m| m + 1)];
        for &p in parents {
            if p < is_parent.len() {
                is_parent[p] = true;
            }
        }
        (0..self.num_triangles()).filter(|&t| is_parent[self.parent_triangles[t]]).collect()
    }

    /// Number of vertices carried over unchanged from the parent mesh.
    pub fn inherited_vertices(&self) -> usize {
        self.inherited
    }

    /// Triangle containing `p`, if any (linear search).
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        (0..self.num_triangles()).find_map(|t| {
            let bary = self.geometry(t).barycentric(p);
            bary.iter().all(|&l| l >= -1e-12).then_some((t, bary))
        })
    }

    /// Bisects every marked triangle through its refinement edge and closes
    /// the result to a conforming mesh.
    ///
    /// Refinement edges of marked elements are flagged, then any triangle with
    /// a flagged edge also has its own refinement edge flagged until nothing
    /// changes. Each triangle is then split into 2, 3 or 4 children.
    pub fn refine(&self, marked: &[usize]) -> Mesh {
        let mut flagged = vec![false; self.edges.len()];
        let mut queue = Vec::new();
        for &t in marked {
            assert!(t < self.num_triangles(), "marked element {t} out of range");
            let e = self.refinement_edge(t);
            if !flagged[e] {
                flagged[e] = true;
                queue.push(e);
            }
        }
        if queue.is_empty() {
            let mut same = self.clone();
            same.inherited = same.num_vertices();
            same.midpoint_parents.clear();
            same.parent_triangles = (0..same.num_triangles()).collect();
            return same;
        }
        while let Some(e) = queue.pop() {
            let edge = &self.edges[e];
            let sides = if edge.interior { 2 } else { 1 };
            for &t in &edge.triangles[..sides] {
                let r = self.refinement_edge(t);
                if !flagged[r] {
                    flagged[r] = true;
                    queue.push(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut parents = Vec::new();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if flagged[e] {
                let [a, b] = edge.vertices;
                let (pa, pb) = (vertices[a], vertices[b]);
                midpoint.insert((a, b), vertices.len());
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                parents.push([a, b]);
            }
        }

        let mut triangles = Vec::with_capacity(self.num_triangles() * 2);
        let mut peaks = Vec::with_capacity(self.num_triangles() * 2);
        let mut origin = Vec::with_capacity(self.num_triangles() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            let p = self.peak(t);
            let rotated = [tri[p], tri[(p + 1) % 3], tri[(p + 2) % 3]];
            split(rotated, &midpoint, &mut triangles);
            origin.resize(triangles.len(), t);
        }
        peaks.resize(triangles.len(), 0);

        let mut fine = Self::assemble(
            vertices,
            triangles,
            peaks,
            self.generation + 1,
            Some((self.num_vertices(), parents)),
        )
        .expect("bisection of a valid mesh yields a valid mesh");
        fine.parent_triangles = origin;
        fine
    }

    /// Writes the plain-text dump: a header `vertices N triangles M`, then
    /// `x y boundary_flag` per vertex and `i j k refedge` per triangle.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "vertices {} triangles {}", self.num_vertices(), self.num_triangles()).unwrap();
        for (v, p) in self.vertices.iter().enumerate() {
            writeln!(s, "{:.17e} {:.17e} {}", p[0], p[1], u8::from(self.boundary[v])).unwrap();
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            writeln!(s, "{} {} {} {}", tri[0], tri[1], tri[2], self.peaks[t]).unwrap();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_dump<R: BufRead>(input: R, path: &Path) -> Result<Self> {
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (nv, nt) = match fields.as_slice() {
            ["vertices", n, "triangles", m] => (
                n.parse::<usize>().map_err(|e| bad(e.to_string()))?,
                m.parse::<usize>().map_err(|e| bad(e.to_string()))?,
            ),
            _ => return Err(bad(format!("bad header `{header}`"))),
        };
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| bad("missing vertex line".into()))??;
            let f: Vec<f64> = line
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|e| bad(e.to_string())))
                .collect::<Result<_>>()?;
            if f.len() != 3 {
                return Err(bad(format!("bad vertex line `{line}`")));
            }
            vertices.push([f[0], f[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        let mut peaks = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = lines.next().ok_or_else(|| bad("missing triangle line".into()))??;
            let f: Vec<usize> = line
                .split_whitespace()
                .map(|x| x.parse::<usize>().map_err(|e| bad(e.to_string())))
                .collect::<Result<_>>()?;
            if f.len() != 4 || f[3] > 2 {
                return Err(bad(format!("bad triangle line `{line}`")));
            }
            triangles.push([f[0], f[1], f[2]]);
            peaks.push(f[3] as u8);
        }
        Self::new(vertices, triangles, peaks)
    }
}

/// Recursively bisects `tri` (peak first) while its refinement edge has a midpoint.
fn split(tri: [usize; 3], midpoint: &HashMap<(usize, usize), usize>, out: &mut Vec<[usize; 3]>) {
    let [p, a, b] = tri;
    match midpoint.get(&edge_key(a, b)) {
        Some(&m) => {
            split([m, p, a], midpoint, out);
            split([m, b, p], midpoint, out);
        }
        None => out.push(tri),
    }
}

/// Crisscross triangulation of a rectangle: each of the `cells_per_side`^2
/// grid cells is split into four triangles about its centroid.
pub fn uniform_initial_mesh(domain: Rectangle, cells_per_side: usize) -> Result<Mesh> {
    if cells_per_side == 0 {
        return Err(Error::Config("cells_per_side must be at least 1".into()));
    }
    let n = cells_per_side;
    let hx = (domain.max[0] - domain.min[0]) / n as f64;
    let hy = (domain.max[1] - domain.min[1]) / n as f64;
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([domain.min[0] + i as f64 * hx, domain.min[1] + j as f64 * hy]);
        }
    }
    let mut triangles = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = vertices.len();
            vertices.push([
                domain.min[0] + (i as f64 + 0.5) * hx,
                domain.min[1] + (j as f64 + 0.5) * hy,
            ]);
            let corners = [grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1)];
            for k in 0..4 {
                triangles.push([c, corners[k], corners[(k + 1) % 4]]);
            }
        }
    }
    Mesh::with_longest_edge_peaks(vertices, triangles)
}

/// Nodal interpolant of `u` on a mesh produced from `u`'s mesh by [`Mesh::refine`].
pub fn transfer(u: &P1Function, fine: Arc<Mesh>) -> Result<P1Function> {
    let coarse = u.mesh();
    let old = coarse.num_vertices();
    if fine.inherited_vertices() != old
        || fine.num_vertices() < old
        || fine.vertices()[..old] != coarse.vertices()[..]
    {
        return Err(Error::TransferMismatch);
    }
    let mut coeffs = Vec::with_capacity(fine.num_vertices());
    coeffs.extend_from_slice(u.coeffs());
    for (_, [a, b]) in fine.new_vertices() {
        coeffs.push(0.5 * (coeffs[a] + coeffs[b]));
    }
    P1Function::new(fine, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Mesh {
        uniform_initial_mesh(Rectangle::unit_square(), n).unwrap()
    }

    #[test]
    fn crisscross_counts() {
        let m = unit(6);
        assert_eq!(m.num_triangles(), 144);

        let m = unit(1);
        assert_eq!(m.num_triangles(), 4);
        assert_eq!(m.num_vertices(), 5);
        assert_eq!(m.free_dofs(), &[4]);

        // 3x3 grid nodes + 4 centroids; free = grid center + 4 centroids
        let m = unit(2);
        assert_eq!(m.num_triangles(), 16);
        assert_eq!(m.num_vertices(), 13);
        assert_eq!(m.num_free_dofs(), 5);
    }

    #[test]
    fn zero_cells_is_rejected() {
        assert!(uniform_initial_mesh(Rectangle::unit_square(), 0).is_err());
    }

    #[test]
    fn initial_refinement_edges_are_cell_sides() {
        let m = unit(3);
        for t in 0..m.num_triangles() {
            let e = &m.edges()[m.refinement_edge(t)];
            let len = dist(m.vertices()[e.vertices[0]], m.vertices()[e.vertices[1]]);
            assert!((len - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_flags_match_geometry() {
        let m = unit(4).refine(&[0, 5, 17, 40]);
        for (v, p) in m.vertices().iter().enumerate() {
            let on = p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
            assert_eq!(m.is_boundary_vertex(v), on, "vertex {v} at {p:?}");
        }
    }

    #[test]
    fn empty_marking_leaves_mesh_unchanged() {
        let m = unit(2);
        let r = m.refine(&[]);
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.triangles(), m.triangles());
        assert_eq!(r.new_vertices().count(), 0);
    }

    #[test]
    fn marking_everything_bisects_every_triangle() {
        let m = unit(1);
        let all: Vec<usize> = (0..4).collect();
        let r = m.refine(&all);
        assert!(r.num_triangles() >= 8);
        assert_eq!(r.num_triangles(), 8);
        assert!(r.edges().iter().filter(|e| e.interior).all(|e| e.triangles[0] != e.triangles[1]));
    }

    #[test]
    fn uniform_refinement_doubles() {
        let mut m = unit(3);
        for _ in 0..6 {
            let all: Vec<usize> = (0..m.num_triangles()).collect();
            let r = m.refine(&all);
            assert_eq!(r.num_triangles(), 2 * m.num_triangles());
            m = r;
        }
    }

    #[test]
    fn old_vertices_are_bit_identical() {
        let m = unit(3);
        let r = m.refine(&[4, 9]);
        assert_eq!(&r.vertices()[..m.num_vertices()], m.vertices());
    }

    #[test]
    fn interior_edges_have_opposite_orientation() {
        let m = unit(3).refine(&[1, 2, 3]).refine(&[0, 7, 20]);
        for e in m.edges().iter().filter(|e| e.interior) {
            let dir = |t: usize| {
                let tri = m.triangles()[t];
                let i = (0..3)
                    .find(|&i| edge_key(tri[(i + 1) % 3], tri[(i + 2) % 3]) == (e.vertices[0], e.vertices[1]))
                    .unwrap();
                (tri[(i + 1) % 3], tri[(i + 2) % 3])
            };
            let (a, b) = dir(e.triangles[0]);
            let (c, d) = dir(e.triangles[1]);
            assert_eq!((a, b), (d, c));
        }
    }

    #[test]
    fn dump_round_trip() {
        let m = unit(2).refine(&[3]);
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("vertices {} triangles {}\n", m.num_vertices(), m.num_triangles())));
        let back = Mesh::read_dump(std::io::Cursor::new(buf), Path::new("mem")).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        for t in 0..m.num_triangles() {
            assert_eq!(back.peak(t), m.peak(t));
        }
    }

    #[test]
    fn children_tile_their_parents() {
        let m = unit(2);
        let fine = m.refine(&[3, 7]);
        assert_eq!(fine.parent_triangles().len(), fine.num_triangles());
        for p in 0..m.num_triangles() {
            let kids = fine.children_of(&[p]);
            assert!(!kids.is_empty());
            let area: f64 = kids.iter().map(|&t| fine.geometry(t).area).sum();
            assert!((area - m.geometry(p).area).abs() < 1e-15);
            for t in kids {
                let b = m.geometry(p).barycentric(fine.geometry(t).centroid());
                assert!(b.iter().all(|&l| l > 0.0));
            }
        }
        assert_eq!(fine.children_of(&[3]).len(), 2);
        let twice = fine.refine(&fine.children_of(&[3]));
        assert!(twice.num_triangles() >= fine.num_triangles() + 2);
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let err = Mesh::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]], vec![0]);
        assert!(matches!(err, Err(Error::DegenerateTriangle { .. })));
    }

    #[test]
    fn unit_right_triangle_gradients() {
        let g = ElementGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(g.area, 0.5);
        assert_eq!(g.grads, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
    }
}
