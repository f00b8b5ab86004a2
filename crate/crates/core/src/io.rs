//! The `germlab-mesh v1` text format.
//!
//! ```text
//! germlab-mesh v1
//! v <x> <y>          disk coordinates, one per vertex, in index order
//! t <i> <j> <k>      triangle by vertex index
//! glue <a> <b> <gen> N_gen carries vertex a to vertex b
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Coordinates are
//! written in shortest round-trip form, so a mesh survives a write/read
//! cycle bit for bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::{mesh_from_records, Glue, GluedMesh};
use crate::moebius::C64;

pub const MESH_HEADER: &str = "germlab-mesh v1";

pub fn write_mesh(mesh: &GluedMesh) -> String {
    let mut out = String::with_capacity(32 * mesh.vertices.len());
    out.push_str(MESH_HEADER);
    out.push('\n');
    for z in &mesh.vertices {
        let _ = writeln!(out, "v {} {}", z.re, z.im);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
    }
    for g in &mesh.gluing {
        let _ = writeln!(out, "glue {} {} {}", g.a, g.b, g.gen);
    }
    out
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {what} `{tok}`"),
    })
}

pub fn read_mesh(text: &str) -> Result<GluedMesh> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == MESH_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{MESH_HEADER}`"),
            })
        }
    }
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut gluing = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut tok = l.split_whitespace();
        let kind = tok.next().unwrap_or_default();
        match kind {
            "v" => {
                let x: f64 = field(tok.next(), line, "x")?;
                let y: f64 = field(tok.next(), line, "y")?;
                vertices.push(C64::new(x, y));
            }
            "t" => {
                let t = [
                    field(tok.next(), line, "index")?,
                    field(tok.next(), line, "index")?,
                    field(tok.next(), line, "index")?,
                ];
                triangles.push(t);
            }
            "glue" => {
                gluing.push(Glue {
                    a: field(tok.next(), line, "vertex")?,
                    b: field(tok.next(), line, "vertex")?,
                    gen: field(tok.next(), line, "generator")?,
                });
            }
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown record `{other}`"),
                })
            }
        }
        if tok.next().is_some() {
            return Err(Error::Parse {
                line,
                msg: "trailing fields".into(),
            });
        }
    }
    mesh_from_records(vertices, triangles, gluing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::build_octagon_group;
    use crate::mesh::triangulate_domain;

    #[test]
    fn round_trip() {
        let rep = build_octagon_group().unwrap();
        let mesh = triangulate_domain(&rep, 1).unwrap();
        let text = write_mesh(&mesh);
        let back = read_mesh(&text).unwrap();
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.gluing, mesh.gluing);
        assert_eq!(back.class_of, mesh.class_of);
        assert_eq!(back.side_mask, mesh.side_mask);
        assert_eq!(back.vertex_area, mesh.vertex_area);
        assert_eq!(back.level, 1);
    }

    #[test]
    fn parse_errors_name_the_line() {
        assert!(matches!(read_mesh("nope\n"), Err(Error::Parse { line: 1, .. })));
        let bad = format!("{MESH_HEADER}\nv 0 0\nv 0.1 x\n");
        assert!(matches!(read_mesh(&bad), Err(Error::Parse { line: 3, .. })));
        let extra = format!("{MESH_HEADER}\nt 1 2 3 4\n");
        assert!(matches!(read_mesh(&extra), Err(Error::Parse { line: 2, .. })));
    }
}
