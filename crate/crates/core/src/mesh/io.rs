//! Plain-text mesh format.
//!
//! ```text
//! gammamesh 1
//! V T B J
//! x y                 (V lines)
//! i j k               (T lines, zero-based, counter-clockwise)
//! i j tag             (B lines, tag R or N)
//! x y angle orient    (J lines)
//! ```

use super::{BoundaryEdge, BoundaryTag, JunctionFrame, Mesh};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    mesh_from_str(&text)
}

pub(crate) fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "gammamesh 1");
    let _ = writeln!(
        s,
        "{} {} {} {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.boundary_edges.len(),
        mesh.junctions.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e}", v[0], v[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "{} {} {}", e.v[0], e.v[1], e.tag.symbol());
    }
    for j in &mesh.junctions {
        let _ = writeln!(
            s,
            "{:.17e} {:.17e} {:.17e} {}",
            j.center[0], j.center[1], j.tangent_angle, j.orientation as i32
        );
    }
    s
}

pub(crate) fn mesh_from_str(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })
    };
    let (ln, header) = next("header")?;
    if header != ["gammamesh", "1"] {
        return Err(Error::Parse {
            line: ln,
            message: "expected header 'gammamesh 1'".into(),
        });
    }
    let (ln, counts) = next("counts")?;
    let counts: Vec<usize> = parse_all(ln, &counts, 4)?;
    let (nv, nt, nb, nj) = (counts[0], counts[1], counts[2], counts[3]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, f) = next("vertex")?;
        let x: Vec<f64> = parse_all(ln, &f, 2)?;
        vertices.push([x[0], x[1]]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, f) = next("triangle")?;
        let t: Vec<usize> = parse_all(ln, &f, 3)?;
        triangles.push([t[0], t[1], t[2]]);
    }
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, f) = next("boundary edge")?;
        if f.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                message: "expected 'i j tag'".into(),
            });
        }
        let v: Vec<usize> = parse_all(ln, &f[..2], 2)?;
        let tag = BoundaryTag::from_symbol(f[2]).ok_or_else(|| Error::Parse {
            line: ln,
            message: format!("unknown boundary tag '{}'", f[2]),
        })?;
        boundary_edges.push(BoundaryEdge {
            v: [v[0], v[1]],
            tag,
        });
    }
    let mut junctions = Vec::with_capacity(nj);
    for _ in 0..nj {
        let (ln, f) = next("junction")?;
        let x: Vec<f64> = parse_all(ln, &f, 4)?;
        junctions.push(JunctionFrame::new([x[0], x[1]], x[2], x[3]));
    }
    Ok(Mesh {
        vertices,
        triangles,
        boundary_edges,
        junctions,
    })
}

fn parse_all<T: std::str::FromStr>(line: usize, fields: &[&str], n: usize) -> Result<Vec<T>> {
    if fields.len() != n {
        return Err(Error::Parse {
            line,
            message: format!("expected {n} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse '{f}'"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_half_disk, GradingSpec};

    #[test]
    fn text_round_trip_is_exact() {
        let m = build_half_disk(GradingSpec::new(0.1, 2.0, 0.5)).unwrap();
        let back = mesh_from_str(&mesh_to_string(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(matches!(
            mesh_from_str("gammamesh 2\n0 0 0 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
