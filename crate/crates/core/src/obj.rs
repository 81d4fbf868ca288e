//! Minimal Wavefront OBJ support: `v` and triangular `f` records only.

use std::io::{BufRead, Write};

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes vertex lines followed by 1-indexed face lines.
pub fn write_obj<W: Write>(mut out: W, vertices: &[Vector3<f64>], faces: &[[usize; 3]]) -> std::io::Result<()> {
    for v in vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// Reads vertices and triangles. Texture/normal indices (`f 1/2/3 ...`) are
/// ignored; comments and other record types are skipped.
pub fn read_obj<R: BufRead>(input: R) -> Result<(Vec<Vector3<f64>>, Vec<[usize; 3]>), ObjError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let syntax = |message: String| ObjError::Syntax { line: lineno, message };
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|e| syntax(format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if coords.len() != 3 {
                    return Err(syntax("vertex needs three coordinates".into()));
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx = tokens
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or(t);
                        match head.parse::<usize>() {
                            Ok(i) if i >= 1 => Ok(i - 1),
                            _ => Err(syntax(format!("bad face index {t:?}"))),
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if idx.len() != 3 {
                    return Err(syntax(format!("expected a triangle, found {} indices", idx.len())));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let verts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.125),
        ];
        let faces = vec![[0, 1, 2]];
        let mut buf = Vec::new();
        write_obj(&mut buf, &verts, &faces).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "v 0 0 0\nv 1 0 0\nv 0 1 0.125\nf 1 2 3\n"
        );
        let (v, f) = read_obj(buf.as_slice()).unwrap();
        assert_eq!(v, verts);
        assert_eq!(f, faces);
    }

    #[test]
    fn rejects_quads_and_zero_index() {
        assert!(read_obj("f 1 2 3 4\n".as_bytes()).is_err());
        assert!(read_obj("f 0 1 2\n".as_bytes()).is_err());
    }
}
