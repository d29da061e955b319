//! Procedural test surfaces.
//!
//! Genus-`g` templates are "pillows": a planar patch of the equilateral
//! triangle lattice with `g` round holes, doubled into a top and a bottom
//! sheet glued along the patch boundary and lifted to `z = ±t·√d` where `d`
//! is the hop distance to the boundary. Nearly every triangle stays close to
//! equilateral, so cotangent weights are positive.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::PI;

use super::{EdgeLengthMetric, TriMesh};
use crate::error::{MlcError, Result};

pub const MAX_TEMPLATE_GENUS: usize = 4;
pub const MAX_SUBDIVISIONS: usize = 6;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;
const HOLE_RADIUS: f64 = 2.2;
const HOLE_SPACING: f64 = 8.0;
const MARGIN: f64 = 5.0;
const LIFT: f64 = 0.7;

/// Loop-subdivided pillow template of the requested genus.
pub fn generate_genus(genus: usize, subdivisions: usize) -> Result<(TriMesh, EdgeLengthMetric)> {
    if genus > MAX_TEMPLATE_GENUS {
        return Err(MlcError::InvalidArgument(format!(
            "genus {genus} outside shipped templates 0..={MAX_TEMPLATE_GENUS}"
        )));
    }
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(MlcError::InvalidArgument(format!(
            "subdivision depth {subdivisions} exceeds {MAX_SUBDIVISIONS}"
        )));
    }
    let mut mesh = template(genus)?;
    for _ in 0..subdivisions {
        mesh = loop_subdivide(&mesh)?;
    }
    let metric = EdgeLengthMetric::from_positions(&mesh)?;
    Ok((mesh, metric))
}

/// The unsubdivided genus-`g` pillow.
pub fn template(genus: usize) -> Result<TriMesh> {
    if genus > MAX_TEMPLATE_GENUS {
        return Err(MlcError::InvalidArgument(format!(
            "genus {genus} outside shipped templates 0..={MAX_TEMPLATE_GENUS}"
        )));
    }
    let width = if genus == 0 {
        2.0 * MARGIN
    } else {
        2.0 * MARGIN + (genus as f64 - 1.0) * HOLE_SPACING
    };
    let height = 2.0 * MARGIN;
    let holes: Vec<[f64; 2]> = (0..genus)
        .map(|k| [MARGIN + k as f64 * HOLE_SPACING, MARGIN])
        .collect();
    let inside = |p: [f64; 2]| {
        p[0] > 0.0
            && p[0] < width
            && p[1] > 0.0
            && p[1] < height
            && holes
                .iter()
                .all(|c| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) > HOLE_RADIUS * HOLE_RADIUS)
    };
    let patch = LatticePatch::select(width, height, inside);
    patch.double(LIFT)
}

/// Lattice triangle, identified by its anchor `(i, j)` and whether it points up.
type LatticeTri = (i64, i64, bool);

struct LatticePatch {
    tris: Vec<LatticeTri>,
}

impl LatticePatch {
    fn corners((i, j, up): LatticeTri) -> [(i64, i64); 3] {
        if up {
            [(i, j), (i + 1, j), (i, j + 1)]
        } else {
            [(i + 1, j), (i + 1, j + 1), (i, j + 1)]
        }
    }

    fn point((i, j): (i64, i64)) -> [f64; 2] {
        [i as f64 + 0.5 * j as f64, j as f64 * SQRT3_2]
    }

    fn centroid(t: LatticeTri) -> [f64; 2] {
        let c = Self::corners(t).map(Self::point);
        [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0]
    }

    fn neighbors((i, j, up): LatticeTri) -> [LatticeTri; 3] {
        if up {
            [(i, j, false), (i - 1, j, false), (i, j - 1, false)]
        } else {
            [(i, j, true), (i + 1, j, true), (i, j + 1, true)]
        }
    }

    fn select(width: f64, height: f64, inside: impl Fn([f64; 2]) -> bool) -> Self {
        let jmax = (height / SQRT3_2).ceil() as i64 + 1;
        let mut all = Vec::new();
        for j in -1..=jmax {
            for i in (-j - 2)..=(width.ceil() as i64 + 2) {
                all.push((i, j, true));
                all.push((i, j, false));
            }
        }
        let mut set: HashSet<LatticeTri> =
            all.iter().copied().filter(|&t| inside(Self::centroid(t))).collect();
        // Fill one-triangle notches and drop ears until the patch boundary is
        // a union of simple loops without chords.
        loop {
            let mut changed = false;
            for &t in &all {
                let n = Self::neighbors(t).iter().filter(|x| set.contains(x)).count();
                if set.contains(&t) && n <= 1 {
                    set.remove(&t);
                    changed = true;
                } else if !set.contains(&t) && n >= 2 && !inside(Self::centroid(t)) {
                    // Only fill notches that sit close to the region.
                    let c = Self::centroid(t);
                    let near = Self::neighbors(t)
                        .iter()
                        .filter(|x| set.contains(x))
                        .all(|x| {
                            let d = Self::centroid(*x);
                            (d[0] - c[0]).hypot(d[1] - c[1]) < 1.0
                        });
                    if near {
                        set.insert(t);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut tris: Vec<_> = set.into_iter().collect();
        tris.sort_unstable();
        LatticePatch { tris }
    }

    /// Glues two copies of the patch along its boundary and lifts them apart.
    fn double(&self, lift: f64) -> Result<TriMesh> {
        let mut index: HashMap<(i64, i64), usize> = HashMap::new();
        let mut planar_faces = Vec::with_capacity(self.tris.len());
        let mut points = Vec::new();
        for &t in &self.tris {
            let c = Self::corners(t).map(|p| {
                *index.entry(p).or_insert_with(|| {
                    points.push(Self::point(p));
                    points.len() - 1
                })
            });
            planar_faces.push(c);
        }
        let n = points.len();

        // Boundary edges appear once among the directed planar edges.
        let mut directed = HashSet::new();
        for t in &planar_faces {
            for k in 0..3 {
                directed.insert((t[k], t[(k + 1) % 3]));
            }
        }
        let mut on_boundary = vec![false; n];
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &directed {
            adjacency[a].push(b);
            if !directed.contains(&(b, a)) {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        for t in &planar_faces {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if on_boundary[a] && on_boundary[b] && directed.contains(&(b, a)) {
                    return Err(MlcError::Numerical(format!(
                        "pillow patch has a chord between boundary vertices {a} and {b}"
                    )));
                }
            }
        }

        let mut hops = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for v in 0..n {
            if on_boundary[v] {
                hops[v] = 0;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            let mut nb = adjacency[v].clone();
            nb.sort_unstable();
            for w in nb {
                if hops[w] == usize::MAX {
                    hops[w] = hops[v] + 1;
                    queue.push_back(w);
                }
            }
        }

        // Top sheet keeps planar ids; bottom interior vertices are appended.
        let mut bottom_id = vec![0usize; n];
        let mut positions: Vec<[f64; 3]> = points
            .iter()
            .zip(&hops)
            .map(|(p, &d)| [p[0], p[1], lift * (d as f64).sqrt()])
            .collect();
        for v in 0..n {
            if on_boundary[v] {
                bottom_id[v] = v;
            } else {
                bottom_id[v] = positions.len();
                let p = points[v];
                positions.push([p[0], p[1], -lift * (hops[v] as f64).sqrt()]);
            }
        }
        let mut faces = planar_faces.clone();
        for t in &planar_faces {
            faces.push([bottom_id[t[0]], bottom_id[t[2]], bottom_id[t[1]]]);
        }
        let nv = positions.len();
        TriMesh::from_faces(nv, faces, Some(positions))
    }
}

/// One level of Loop subdivision: 1-to-4 split with the standard smoothing
/// masks (3/8, 1/8 for edge points; Loop's β for old vertices).
pub fn loop_subdivide(mesh: &TriMesh) -> Result<TriMesh> {
    let pos = mesh
        .positions()
        .ok_or_else(|| MlcError::InvalidArgument("Loop subdivision needs an embedding".into()))?;
    let nv = mesh.n_vertices();
    let mut out = Vec::with_capacity(nv + mesh.n_edges());

    for v in 0..nv {
        let ring: Vec<usize> = mesh.outgoing(v).map(|h| mesh.head(h)).collect();
        let k = ring.len() as f64;
        let c = 3.0 / 8.0 + 0.25 * (2.0 * PI / k).cos();
        let beta = (5.0 / 8.0 - c * c) / k;
        let mut p = [0.0; 3];
        for d in 0..3 {
            p[d] = (1.0 - k * beta) * pos[v][d] + beta * ring.iter().map(|&w| pos[w][d]).sum::<f64>();
        }
        out.push(p);
    }
    for e in 0..mesh.n_edges() {
        let h = mesh.edge_halfedge(e);
        let (a, b) = (mesh.tail(h), mesh.head(h));
        let (c, d) = (mesh.opposite_vertex(h), mesh.opposite_vertex(mesh.twin(h)));
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = 0.375 * (pos[a][k] + pos[b][k]) + 0.125 * (pos[c][k] + pos[d][k]);
        }
        out.push(p);
    }

    let faces = split_faces(mesh);
    TriMesh::from_faces(out.len(), faces, Some(out))
}

/// 1-to-4 connectivity: edge `e` becomes vertex `V + e`.
fn split_faces(mesh: &TriMesh) -> Vec<[usize; 3]> {
    let nv = mesh.n_vertices();
    let mut faces = Vec::with_capacity(4 * mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let t = mesh.faces()[f];
        let m = [0, 1, 2].map(|k| nv + mesh.edge(3 * f + k));
        // m[k] sits on halfedge t[k] -> t[k+1].
        faces.push([t[0], m[0], m[2]]);
        faces.push([t[1], m[1], m[0]]);
        faces.push([t[2], m[2], m[1]]);
        faces.push([m[0], m[1], m[2]]);
    }
    faces
}

/// Icosahedron refined `level` times by midpoint splitting, projected to the
/// unit sphere.
pub fn icosphere(level: usize) -> Result<(TriMesh, EdgeLengthMetric)> {
    if level > MAX_SUBDIVISIONS {
        return Err(MlcError::InvalidArgument(format!(
            "icosphere level {level} exceeds {MAX_SUBDIVISIONS}"
        )));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
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
    let mut mesh = TriMesh::from_faces(12, faces, Some(raw.iter().map(|p| normalize(*p)).collect()))?;
    for _ in 0..level {
        let pos = mesh.positions().expect("icosphere is embedded");
        let mut out: Vec<[f64; 3]> = pos.to_vec();
        for &[a, b] in mesh.edges() {
            out.push(normalize([
                pos[a][0] + pos[b][0],
                pos[a][1] + pos[b][1],
                pos[a][2] + pos[b][2],
            ]));
        }
        let faces = split_faces(&mesh);
        mesh = TriMesh::from_faces(out.len(), faces, Some(out))?;
    }
    let metric = EdgeLengthMetric::from_positions(&mesh)?;
    Ok((mesh, metric))
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / r, p[1] / r, p[2] / r]
}

/// Intrinsically flat torus built from the equilateral lattice.
#[derive(Debug, Clone)]
pub struct FlatTorus {
    pub mesh: TriMesh,
    pub metric: EdgeLengthMetric,
    /// Lattice indices `(i, j)` of every vertex.
    pub lattice: Vec<[usize; 2]>,
    pub n: usize,
    pub m: usize,
    pub spacing: f64,
}

impl FlatTorus {
    /// Planar coordinates of vertex `v` inside the fundamental domain.
    pub fn point(&self, v: usize) -> [f64; 2] {
        let [i, j] = self.lattice[v];
        [
            self.spacing * (i as f64 + 0.5 * j as f64),
            self.spacing * j as f64 * SQRT3_2,
        ]
    }

    /// Periodic coordinates `(i/n, j/m)` in `[0, 1)²`.
    pub fn periodic(&self, v: usize) -> [f64; 2] {
        let [i, j] = self.lattice[v];
        [i as f64 / self.n as f64, j as f64 / self.m as f64]
    }
}

/// `n × m` equilateral lattice with periodic identifications and edge length
/// `spacing`. Needs `n, m >= 3`.
pub fn flat_torus(n: usize, m: usize, spacing: f64) -> Result<FlatTorus> {
    if n < 3 || m < 3 {
        return Err(MlcError::InvalidArgument("flat torus needs n, m >= 3".into()));
    }
    if !(spacing > 0.0) {
        return Err(MlcError::InvalidArgument("flat torus spacing must be positive".into()));
    }
    let id = |i: usize, j: usize| (j % m) * n + (i % n);
    let mut faces = Vec::with_capacity(2 * n * m);
    for j in 0..m {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
            faces.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mesh = TriMesh::from_faces(n * m, faces, None)?;
    let metric = EdgeLengthMetric::new(&mesh, vec![spacing; mesh.n_edges()])?;
    let lattice = (0..n * m).map(|v| [v % n, v / n]).collect();
    Ok(FlatTorus {
        mesh,
        metric,
        lattice,
        n,
        m,
        spacing,
    })
}
