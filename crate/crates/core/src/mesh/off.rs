use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use super::{EdgeLengthMetric, TriMesh};
use crate::error::{MlcError, Result};

/// Reads an ASCII OFF file holding a closed orientable triangle mesh.
///
/// Face orientation is propagated from face 0 so the result is globally
/// consistent; edge lengths come from the embedding.
pub fn load_off(path: impl AsRef<Path>) -> Result<(TriMesh, EdgeLengthMetric)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MlcError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_off(&text)
}

pub fn parse_off(text: &str) -> Result<(TriMesh, EdgeLengthMetric)> {
    let mut tokens = Tokens {
        items: text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i, t)))
            .collect(),
        pos: 0,
    };

    let (line, head) = tokens.next("header")?;
    if head != "OFF" {
        return Err(parse_err(line, format!("expected OFF header, found {head:?}")));
    }
    let nv = tokens.usize("vertex count")?;
    let nf = tokens.usize("face count")?;
    let _ne = tokens.usize("edge count")?;

    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut p = [0.0; 3];
        for c in p.iter_mut() {
            let (l, t) = tokens.next("vertex coordinate")?;
            *c = t
                .parse()
                .map_err(|_| parse_err(l, format!("invalid coordinate {t:?}")))?;
        }
        positions.push(p);
    }

    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let k = tokens.usize("face arity")?;
        if k != 3 {
            return Err(MlcError::NonTriangularFace(f));
        }
        let mut tri = [0usize; 3];
        for v in tri.iter_mut() {
            *v = tokens.usize("face index")?;
            if *v >= nv {
                return Err(parse_err(tokens.line(), format!("face {f} references vertex {v} >= {nv}")));
            }
        }
        faces.push(tri);
    }

    orient_consistently(&mut faces)?;
    let mesh = TriMesh::from_faces(nv, faces, Some(positions))?;
    let metric = EdgeLengthMetric::from_positions(&mesh)?;
    Ok((mesh, metric))
}

fn parse_err(line: usize, message: String) -> MlcError {
    MlcError::Parse { line, message }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied().ok_or_else(|| {
            parse_err(self.line(), format!("unexpected end of file reading {what}"))
        })?;
        self.pos += 1;
        Ok(item)
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let (l, t) = self.next(what)?;
        t.parse()
            .map_err(|_| parse_err(l, format!("invalid integer {t:?} for {what}")))
    }

    /// Line of the most recently consumed token.
    fn line(&self) -> usize {
        self.items
            .get(self.pos.saturating_sub(1))
            .map_or(1, |&(l, _)| l)
    }
}

/// Flips faces so adjacent faces traverse their shared edge in opposite
/// directions. Reports boundary, non-manifold and non-orientable input.
fn orient_consistently(faces: &mut [[usize; 3]]) -> Result<()> {
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (f, t) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
        }
    }
    let mut keys: Vec<_> = edge_faces.keys().copied().collect();
    keys.sort_unstable();
    for key in &keys {
        match edge_faces[key].len() {
            2 => {}
            1 => return Err(MlcError::BoundaryEdge(key.0, key.1)),
            _ => return Err(MlcError::NonManifoldEdge(key.0, key.1)),
        }
    }

    let traverses = |t: &[usize; 3], a: usize, b: usize| (0..3).any(|k| t[k] == a && t[(k + 1) % 3] == b);
    let mut seen = vec![false; faces.len()];
    for root in 0..faces.len() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(f) = queue.pop_front() {
            let t = faces[f];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let pair = &edge_faces[&(a.min(b), a.max(b))];
                let g = if pair[0] == f { pair[1] } else { pair[0] };
                let agrees = traverses(&faces[g], b, a);
                if seen[g] {
                    if !agrees {
                        return Err(MlcError::NonOrientable(g));
                    }
                } else {
                    if !agrees {
                        faces[g].swap(1, 2);
                    }
                    seen[g] = true;
                    queue.push_back(g);
                }
            }
        }
    }
    Ok(())
}

/// Serializes an embedded mesh as ASCII OFF.
pub fn write_off(mesh: &TriMesh) -> Result<String> {
    let pos = mesh
        .positions()
        .ok_or_else(|| MlcError::InvalidArgument("mesh has no embedding to write".into()))?;
    let mut out = String::new();
    let _ = writeln!(out, "OFF");
    let _ = writeln!(out, "{} {} {}", mesh.n_vertices(), mesh.n_faces(), mesh.n_edges());
    for p in pos {
        let _ = writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for t in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TET: &str = "OFF\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 2 3\n3 0 3 1\n3 1 3 2\n";

    #[test]
    fn parses_tetrahedron() {
        let (m, g) = parse_off(TET).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!((g.length(0) - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn repairs_flipped_face() {
        let flipped = TET.replace("3 0 2 3", "3 0 3 2");
        let (m, _) = parse_off(&flipped).unwrap();
        m.validate().unwrap();
    }

    #[test]
    fn rejects_quads() {
        let quad = "OFF\n4 1 4\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        assert!(matches!(parse_off(quad), Err(MlcError::NonTriangularFace(0))));
    }

    #[test]
    fn rejects_boundary() {
        let open = "OFF\n3 1 3\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        assert!(matches!(parse_off(open), Err(MlcError::BoundaryEdge(..))));
    }

    #[test]
    fn rejects_non_manifold_edge() {
        // Three triangles hinged on edge (0, 1), closed up into nothing sane.
        let text = "OFF\n5 3 0\n0 0 0\n1 0 0\n0 1 0\n0 -1 0\n0 0 1\n3 0 1 2\n3 1 0 3\n3 0 1 4\n";
        assert!(matches!(parse_off(text), Err(MlcError::NonManifoldEdge(0, 1))));
    }

    #[test]
    fn rejects_degenerate_triangle() {
        // Octahedron whose apex sits on the segment between two equator vertices.
        let text = "OFF\n6 8 12\n1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0.5 0.5 0\n0 0 -1\n\
                    3 0 2 4\n3 2 1 4\n3 1 3 4\n3 3 0 4\n3 2 0 5\n3 1 2 5\n3 3 1 5\n3 0 3 5\n";
        let err = parse_off(text).unwrap_err();
        assert!(matches!(err, MlcError::DegenerateFace { .. }), "{err:?}");
    }

    #[test]
    fn write_then_parse() {
        let (m, g) = parse_off(TET).unwrap();
        let (m2, g2) = parse_off(&write_off(&m).unwrap()).unwrap();
        assert_eq!(m.faces(), m2.faces());
        assert_eq!(g, g2);
    }
}
