//! Closed oriented triangle meshes with halfedge connectivity.
//!
//! Halfedge `3f + k` runs from corner `k` to corner `k + 1` of face `f`, so
//! `next`/`prev`/`face` are arithmetic and only the twin map is stored.
//! Edges are unordered vertex pairs oriented from the smaller to the larger
//! vertex id.

mod generate;
mod off;

pub use generate::{flat_torus, generate_genus, icosphere, loop_subdivide, template, FlatTorus};
pub use off::{load_off, parse_off, write_off};

use std::collections::HashMap;

use crate::error::{MlcError, Result};

#[derive(Debug, Clone)]
pub struct TriMesh {
    faces: Vec<[usize; 3]>,
    n_vertices: usize,
    positions: Option<Vec<[f64; 3]>>,
    twin: Vec<usize>,
    he_edge: Vec<usize>,
    edges: Vec<[usize; 2]>,
    edge_he: Vec<usize>,
    vertex_he: Vec<usize>,
}

impl TriMesh {
    /// Builds connectivity from consistently oriented triangles.
    ///
    /// Fails on out-of-range or repeated indices, boundary or non-manifold
    /// edges, inconsistent orientation, non-manifold or unreferenced vertices.
    pub fn from_faces(
        n_vertices: usize,
        faces: Vec<[usize; 3]>,
        positions: Option<Vec<[f64; 3]>>,
    ) -> Result<Self> {
        if let Some(p) = &positions {
            if p.len() != n_vertices {
                return Err(MlcError::DimensionMismatch {
                    what: "positions",
                    got: p.len(),
                    expected: n_vertices,
                });
            }
        }
        for (f, tri) in faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= n_vertices) {
                return Err(MlcError::InvalidArgument(format!(
                    "face {f} references a vertex out of range"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MlcError::DegenerateFace {
                    face: f,
                    reason: "repeated vertex".into(),
                });
            }
        }

        let nh = 3 * faces.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(nh);
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((a, b), 3 * f + k).is_some() {
                    // Either a third face on this edge or two faces traversing
                    // it the same way.
                    return Err(classify_directed_clash(&faces, a, b));
                }
            }
        }

        let mut twin = vec![usize::MAX; nh];
        let mut he_edge = vec![usize::MAX; nh];
        let mut edges = Vec::with_capacity(nh / 2);
        let mut edge_he = Vec::with_capacity(nh / 2);
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let h = 3 * f + k;
                if twin[h] != usize::MAX {
                    continue;
                }
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let Some(&t) = directed.get(&(b, a)) else {
                    return Err(MlcError::BoundaryEdge(a.min(b), a.max(b)));
                };
                twin[h] = t;
                twin[t] = h;
                let e = edges.len();
                edges.push([a.min(b), a.max(b)]);
                edge_he.push(if a < b { h } else { t });
                he_edge[h] = e;
                he_edge[t] = e;
            }
        }

        let mut vertex_he = vec![usize::MAX; n_vertices];
        let mut degree = vec![0usize; n_vertices];
        for h in 0..nh {
            let v = faces[h / 3][h % 3];
            degree[v] += 1;
            if vertex_he[v] == usize::MAX {
                vertex_he[v] = h;
            }
        }

        let mesh = TriMesh {
            faces,
            n_vertices,
            positions,
            twin,
            he_edge,
            edges,
            edge_he,
            vertex_he,
        };

        for v in 0..n_vertices {
            if mesh.vertex_he[v] == usize::MAX {
                return Err(MlcError::NonManifoldVertex(v));
            }
            if mesh.outgoing(v).count() != degree[v] {
                return Err(MlcError::NonManifoldVertex(v));
            }
        }
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_halfedges(&self) -> usize {
        self.twin.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn positions(&self) -> Option<&[[f64; 3]]> {
        self.positions.as_deref()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    /// Genus of the closed orientable surface, `(2 - χ) / 2`.
    pub fn genus(&self) -> usize {
        ((2 - self.euler_characteristic()) / 2) as usize
    }

    #[inline]
    pub fn tail(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }

    #[inline]
    pub fn head(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 1) % 3]
    }

    #[inline]
    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 1) % 3
    }

    #[inline]
    pub fn prev(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 2) % 3
    }

    #[inline]
    pub fn twin(&self, h: usize) -> usize {
        self.twin[h]
    }

    #[inline]
    pub fn face(&self, h: usize) -> usize {
        h / 3
    }

    #[inline]
    pub fn edge(&self, h: usize) -> usize {
        self.he_edge[h]
    }

    /// Halfedge of edge `e` running from its smaller to its larger vertex.
    #[inline]
    pub fn edge_halfedge(&self, e: usize) -> usize {
        self.edge_he[e]
    }

    /// `+1` when halfedge `h` agrees with the orientation of its edge.
    #[inline]
    pub fn edge_sign(&self, h: usize) -> f64 {
        if self.tail(h) < self.head(h) {
            1.0
        } else {
            -1.0
        }
    }

    /// Halfedge opposite to the corner at `tail(h)`'s next vertex, i.e. the
    /// one whose face corner sits across edge of `h`.
    #[inline]
    pub fn opposite_vertex(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 2) % 3]
    }

    pub fn vertex_halfedge(&self, v: usize) -> usize {
        self.vertex_he[v]
    }

    /// Outgoing halfedges of `v` in counter-clockwise order, starting from
    /// [`TriMesh::vertex_halfedge`].
    pub fn outgoing(&self, v: usize) -> Outgoing<'_> {
        let start = self.vertex_he[v];
        Outgoing {
            mesh: self,
            start,
            cur: Some(start),
        }
    }

    /// Counter-clockwise successor of an outgoing halfedge around its tail.
    #[inline]
    pub fn ccw_out(&self, h: usize) -> usize {
        self.twin[self.prev(h)]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.outgoing(v).count()
    }

    /// Checks structural invariants: twin involution, opposite orientation
    /// of twins and consistent edge bookkeeping.
    pub fn validate(&self) -> Result<()> {
        for h in 0..self.n_halfedges() {
            let t = self.twin[h];
            if self.twin[t] != h || t == h {
                return Err(MlcError::Numerical(format!("twin map broken at halfedge {h}")));
            }
            if self.tail(t) != self.head(h) || self.head(t) != self.tail(h) {
                return Err(MlcError::NonOrientable(self.face(h)));
            }
            if self.he_edge[h] != self.he_edge[t] {
                return Err(MlcError::Numerical(format!("edge map broken at halfedge {h}")));
            }
        }
        Ok(())
    }

    /// Returns a copy of the mesh with positions replaced.
    pub fn with_positions(&self, positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.len() != self.n_vertices {
            return Err(MlcError::DimensionMismatch {
                what: "positions",
                got: positions.len(),
                expected: self.n_vertices,
            });
        }
        let mut m = self.clone();
        m.positions = Some(positions);
        Ok(m)
    }
}

fn classify_directed_clash(faces: &[[usize; 3]], a: usize, b: usize) -> MlcError {
    let count = faces
        .iter()
        .filter(|t| (0..3).any(|k| {
            let (p, q) = (t[k], t[(k + 1) % 3]);
            (p == a && q == b) || (p == b && q == a)
        }))
        .count();
    if count > 2 {
        MlcError::NonManifoldEdge(a.min(b), a.max(b))
    } else {
        let f = faces
            .iter()
            .position(|t| (0..3).any(|k| t[k] == a && t[(k + 1) % 3] == b))
            .unwrap_or(0);
        MlcError::NonOrientable(f)
    }
}

pub struct Outgoing<'a> {
    mesh: &'a TriMesh,
    start: usize,
    cur: Option<usize>,
}

impl Iterator for Outgoing<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let h = self.cur?;
        let n = self.mesh.ccw_out(h);
        self.cur = if n == self.start { None } else { Some(n) };
        Some(h)
    }
}

/// Positive length per edge, the background metric `g₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengthMetric {
    lengths: Vec<f64>,
}

impl EdgeLengthMetric {
    pub fn new(mesh: &TriMesh, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != mesh.n_edges() {
            return Err(MlcError::DimensionMismatch {
                what: "edge lengths",
                got: lengths.len(),
                expected: mesh.n_edges(),
            });
        }
        let metric = EdgeLengthMetric { lengths };
        metric.check_triangles(mesh)?;
        Ok(metric)
    }

    /// Euclidean edge lengths of the embedding.
    pub fn from_positions(mesh: &TriMesh) -> Result<Self> {
        let pos = mesh.positions().ok_or_else(|| {
            MlcError::InvalidArgument("mesh has no embedding to measure".into())
        })?;
        let lengths = mesh
            .edges()
            .iter()
            .map(|&[a, b]| {
                let d = [pos[a][0] - pos[b][0], pos[a][1] - pos[b][1], pos[a][2] - pos[b][2]];
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
            })
            .collect();
        Self::new(mesh, lengths)
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    fn check_triangles(&self, mesh: &TriMesh) -> Result<()> {
        for f in 0..mesh.n_faces() {
            let [a, b, c] = face_lengths(mesh, &self.lengths, f);
            if !(a > 0.0 && b > 0.0 && c > 0.0) {
                return Err(MlcError::DegenerateFace {
                    face: f,
                    reason: "non-positive edge length".into(),
                });
            }
            if a >= b + c || b >= a + c || c >= a + b {
                return Err(MlcError::DegenerateFace {
                    face: f,
                    reason: format!("triangle inequality fails for lengths ({a}, {b}, {c})"),
                });
            }
        }
        Ok(())
    }
}

/// Lengths of the three halfedges of face `f`, in corner order: entry `k` is
/// the length of halfedge `3f + k`.
pub(crate) fn face_lengths(mesh: &TriMesh, lengths: &[f64], f: usize) -> [f64; 3] {
    [
        lengths[mesh.edge(3 * f)],
        lengths[mesh.edge(3 * f + 1)],
        lengths[mesh.edge(3 * f + 2)],
    ]
}
