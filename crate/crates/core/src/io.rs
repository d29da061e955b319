//! CSV and legacy VTK field exchange.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{MlcError, Result};
use crate::mesh::TriMesh;

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|source| MlcError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| MlcError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_rows(text: &str, header: &[&str], len: usize) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(MlcError::Parse {
        line: 1,
        message: "empty CSV".into(),
    })?;
    let cols: Vec<&str> = head.split(',').map(str::trim).collect();
    if cols != header {
        return Err(MlcError::Parse {
            line: 1,
            message: format!("expected header '{}'", header.join(",")),
        });
    }
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; len];
    for (n, line) in lines {
        let err = |message: String| MlcError::Parse { line: n + 1, message };
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != header.len() {
            return Err(err(format!("expected {} columns, found {}", header.len(), cells.len())));
        }
        let id: usize = cells[0].parse().map_err(|_| err(format!("bad id '{}'", cells[0])))?;
        if id >= len {
            return Err(err(format!("id {id} out of range (< {len})")));
        }
        if rows[id].is_some() {
            return Err(err(format!("duplicate id {id}")));
        }
        let vals = cells[1..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("bad number '{c}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows[id] = Some(vals);
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or(MlcError::Parse {
                line: 0,
                message: format!("missing id {i}"),
            })
        })
        .collect()
}

/// Reads `id,value` rows covering ids `0..len` in any order.
pub fn parse_values_csv(text: &str, len: usize) -> Result<Vec<f64>> {
    Ok(parse_rows(text, &["id", "value"], len)?.into_iter().map(|r| r[0]).collect())
}

/// Reads `id,re,im` rows covering ids `0..len`.
pub fn parse_complex_csv(text: &str, len: usize) -> Result<Vec<Complex64>> {
    Ok(parse_rows(text, &["id", "re", "im"], len)?
        .into_iter()
        .map(|r| Complex64::new(r[0], r[1]))
        .collect())
}

/// Legacy ASCII VTK polydata with per-vertex scalar fields.
pub fn vtk_point_data(mesh: &TriMesh, fields: &[(&str, &[f64])]) -> Result<String> {
    let pos = mesh
        .positions()
        .ok_or_else(|| MlcError::InvalidArgument("VTK export needs vertex positions".into()))?;
    let n = mesh.n_vertices();
    let mut out = String::from("# vtk DataFile Version 3.0\nmlc field export\nASCII\nDATASET POLYDATA\n");
    out.push_str(&format!("POINTS {n} double\n"));
    for p in pos {
        out.push_str(&format!("{:?} {:?} {:?}\n", p[0], p[1], p[2]));
    }
    let nf = mesh.n_faces();
    out.push_str(&format!("POLYGONS {nf} {}\n", 4 * nf));
    for f in mesh.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    if !fields.is_empty() {
        out.push_str(&format!("POINT_DATA {n}\n"));
    }
    for (name, values) in fields {
        if values.len() != n {
            return Err(MlcError::DimensionMismatch {
                what: "VTK field",
                got: values.len(),
                expected: n,
            });
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(MlcError::InvalidArgument(format!("bad VTK field name '{name}'")));
        }
        out.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for v in *values {
            out.push_str(&format!("{v:?}\n"));
        }
    }
    Ok(out)
}
