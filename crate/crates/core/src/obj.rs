//! Wavefront OBJ reading and writing, restricted to the subset the challenge
//! data uses: `v`, `vn` and `f` records. Texture coordinates, materials and
//! groups are ignored. Polygon faces are fan-triangulated; negative (relative)
//! indices are resolved against the elements seen so far.

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::mesh::TriMesh;

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("line {line}: malformed numeric token {token:?}")]
    MalformedNumber { line: usize, token: String },
    #[error("line {line}: face index {index} out of range (have {count} vertices)")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        count: usize,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("input is not valid UTF-8")]
    NotText,
}

fn parse_f64(token: &str, line: usize) -> Result<f64, ObjError> {
    token.parse().map_err(|_| ObjError::MalformedNumber {
        line,
        token: token.to_string(),
    })
}

// Resolve a 1-based (or negative relative) OBJ index to 0-based.
fn resolve_index(raw: i64, count: usize, line: usize) -> Result<usize, ObjError> {
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        return Err(ObjError::IndexOutOfRange {
            line,
            index: raw,
            count,
        });
    };
    if idx < 0 || idx as usize >= count {
        return Err(ObjError::IndexOutOfRange {
            line,
            index: raw,
            count,
        });
    }
    Ok(idx as usize)
}

pub fn parse_obj(bytes: &[u8]) -> Result<TriMesh, ObjError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ObjError::NotText)?;
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut normals: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw_line.trim_end_matches('\r');
        let content = match content.find('#') {
            Some(pos) => &content[..pos],
            None => content,
        };
        let mut tokens = content.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        match keyword {
            "v" => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    let tok = tokens.next().ok_or(ObjError::Malformed {
                        line,
                        message: "vertex needs 3 coordinates".into(),
                    })?;
                    *c = parse_f64(tok, line)?;
                }
                vertices.push(Point3::from(coords));
            }
            "vn" => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    let tok = tokens.next().ok_or(ObjError::Malformed {
                        line,
                        message: "normal needs 3 coordinates".into(),
                    })?;
                    *c = parse_f64(tok, line)?;
                }
                let n = Vector3::from(coords);
                let norm = n.norm();
                normals.push(if norm > 0.0 { n / norm } else { n });
            }
            "f" => {
                let mut poly: Vec<usize> = Vec::with_capacity(4);
                for tok in tokens {
                    // `i`, `i/j`, `i//k`, `i/j/k`: the vertex index is the
                    // first slash-separated field.
                    let first = tok.split('/').next().unwrap_or(tok);
                    let raw: i64 = first.parse().map_err(|_| ObjError::MalformedNumber {
                        line,
                        token: tok.to_string(),
                    })?;
                    poly.push(resolve_index(raw, vertices.len(), line)?);
                }
                if poly.len() < 3 {
                    return Err(ObjError::Malformed {
                        line,
                        message: format!("face has {} vertices (need at least 3)", poly.len()),
                    });
                }
                for k in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            // vt, mtllib, usemtl, o, g, s, l, p: ignored.
            _ => {}
        }
    }

    let normals = if normals.is_empty() {
        None
    } else if normals.len() == vertices.len() {
        Some(normals)
    } else {
        // Normal count disagreeing with vertex count is legal OBJ (normals
        // are indexed separately) but useless for per-vertex fields; drop.
        None
    };
    Ok(TriMesh {
        vertices,
        faces,
        normals,
    })
}

pub fn write_obj(mesh: &TriMesh) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("# dentalscan triangle mesh\n");
    for v in &mesh.vertices {
        // Rust's shortest round-trip float formatting reparses bit-exactly.
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    if let Some(normals) = &mesh.normals {
        for n in normals {
            out.push_str(&format!("vn {} {} {}\n", n.x, n.y, n.z));
        }
    }
    for f in &mesh.faces {
        if mesh.normals.is_some() {
            out.push_str(&format!(
                "f {0}//{0} {1}//{1} {2}//{2}\n",
                f[0] + 1,
                f[1] + 1,
                f[2] + 1
            ));
        } else {
            out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_obj() {
        let m = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn quad_is_fan_triangulated() {
        let m = parse_obj(b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn out_of_range_index_names_line() {
        let err = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9").unwrap_err();
        match err {
            ObjError::IndexOutOfRange { line, index, .. } => {
                assert_eq!(line, 4);
                assert_eq!(index, 9);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_indices_resolve_relative() {
        let m = parse_obj(b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn malformed_number_reports_line() {
        let err = parse_obj(b"v 0 zero 0").unwrap_err();
        assert!(matches!(err, ObjError::MalformedNumber { line: 1, .. }));
    }

    #[test]
    fn slash_forms_and_crlf() {
        let m = parse_obj(b"v 0 0 0\r\nv 1 0 0\r\nv 0 1 0\r\nvt 0 0\r\nf 1/1 2/1 3/1\r\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn round_trip_plain() {
        let m = parse_obj(b"v 0.1 -2.25 3e-7\nv 1 0 0\nv 0 1 0\nf 1 2 3").unwrap();
        let back = parse_obj(&write_obj(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn round_trip_with_normals() {
        let src = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvn 0 0 1\nvn 0 0 1\nf 1//1 2//2 3//3\n";
        let m = parse_obj(src).unwrap();
        assert!(m.normals.is_some());
        let back = parse_obj(&write_obj(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_mesh_round_trip() {
        let m = TriMesh {
            vertices: vec![],
            faces: vec![],
            normals: None,
        };
        let bytes = write_obj(&m);
        assert!(bytes.starts_with(b"#"));
        assert_eq!(parse_obj(&bytes).unwrap(), m);
    }
}
