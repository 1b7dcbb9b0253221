//! File formats: plain-text vertex function columns, binary PLY export with
//! a per-vertex scalar, and mode-set serialization (text matrix plus JSON
//! sidecar).

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::cmm::ModeSet;
use crate::error::{Error, Result};
use crate::l1::VertexFunction;
use crate::mesh::TriangleMesh;

/// Read a vertex function from a text file, one value per line. Blank lines
/// and `#` comments are skipped.
pub fn read_function_file(path: impl AsRef<Path>) -> Result<VertexFunction> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad value {line:?}", lineno + 1)))?;
        values.push(v);
    }
    VertexFunction::new(values)
}

pub fn write_function_file(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for v in values {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Write a mesh as ASCII OFF. Handy for persisting generated shapes.
pub fn write_off(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", mesh.vertex_count(), mesh.face_count())?;
    for v in mesh.vertices() {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    w.flush()?;
    Ok(())
}

/// Export a mesh with a per-vertex scalar as binary little-endian PLY.
/// Vertex properties are x, y, z, quality (all 32-bit floats); faces carry a
/// uchar-counted list of 32-bit vertex indices.
pub fn export_ply(mesh: &TriangleMesh, values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    if values.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.vertex_count(),
            got: values.len(),
        });
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nproperty float quality\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertex_count(),
        mesh.face_count()
    )?;
    for (v, &q) in mesh.vertices().iter().zip(values) {
        for c in v {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
        w.write_all(&(q as f32).to_le_bytes())?;
    }
    for face in mesh.faces() {
        w.write_all(&[3u8])?;
        for &idx in face {
            w.write_all(&(idx as i32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write the mode matrix as text: n rows, k whitespace-separated columns,
/// full precision.
pub fn write_modes_txt(path: impl AsRef<Path>, set: &ModeSet) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let n = set.modes.first().map(|m| m.len()).unwrap_or(0);
    for i in 0..n {
        for (j, mode) in set.modes.iter().enumerate() {
            if j > 0 {
                write!(w, " ")?;
            }
            write!(w, "{:.16e}", mode[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Read the text matrix back; used by the round-trip tests and downstream
/// tooling.
pub fn read_modes_txt(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(|t| t.parse::<f64>()).collect();
        rows.push(row.map_err(|_| Error::Parse(format!("line {}: bad matrix row", lineno + 1)))?);
    }
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let k = rows[0].len();
    let n = rows.len();
    let mut modes = vec![vec![0.0; n]; k];
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Parse(format!(
                "row {i} has {} columns, expected {k}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            modes[j][i] = v;
        }
    }
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmm::{compressed_modes, CmmOptions};
    use crate::shapes;

    #[test]
    fn function_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        let values = vec![1.0, -2.5, 3.25e-7, 0.0];
        write_function_file(&path, &values).unwrap();
        let read = read_function_file(&path).unwrap();
        assert_eq!(read.values(), values.as_slice());
    }

    #[test]
    fn function_file_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        std::fs::write(&path, "1.0\nnot-a-number\n").unwrap();
        assert!(matches!(read_function_file(&path), Err(Error::Parse(_))));
    }

    /// Minimal PLY reader used to validate exported files structurally.
    fn parse_ply(bytes: &[u8]) -> (Vec<[f32; 4]>, Vec<[i32; 3]>) {
        let header_end = bytes
            .windows(11)
            .position(|w| w == b"end_header\n")
            .expect("header terminator")
            + 11;
        let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
        assert!(header.starts_with("ply"));
        assert!(header.contains("format binary_little_endian 1.0"));
        let mut nv = 0usize;
        let mut nf = 0usize;
        for line in header.lines() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() == 3 && toks[0] == "element" {
                match toks[1] {
                    "vertex" => nv = toks[2].parse().unwrap(),
                    "face" => nf = toks[2].parse().unwrap(),
                    _ => {}
                }
            }
        }
        let mut off = header_end;
        let mut verts = Vec::with_capacity(nv);
        for _ in 0..nv {
            let mut rec = [0f32; 4];
            for r in rec.iter_mut() {
                *r = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
                off += 4;
            }
            verts.push(rec);
        }
        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            assert_eq!(bytes[off], 3u8);
            off += 1;
            let mut rec = [0i32; 3];
            for r in rec.iter_mut() {
                *r = i32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
                off += 4;
            }
            faces.push(rec);
        }
        assert_eq!(off, bytes.len());
        (verts, faces)
    }

    #[test]
    fn ply_export_structurally_valid() {
        let mesh = shapes::icosphere(1.0, 1);
        let values: Vec<f64> = (0..mesh.vertex_count())
            .map(|i| i as f64 * 0.125 - 2.0)
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.ply");
        export_ply(&mesh, &values, &path).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        let (verts, faces) = parse_ply(&bytes);
        assert_eq!(verts.len(), mesh.vertex_count());
        assert_eq!(faces.len(), mesh.face_count());
        for (rec, (&v, p)) in verts.iter().zip(values.iter().zip(mesh.vertices())) {
            assert_eq!(rec[3], v as f32, "quality preserved at f32 precision");
            for c in 0..3 {
                assert_eq!(rec[c], p[c] as f32);
            }
        }
        for (rec, face) in faces.iter().zip(mesh.faces()) {
            for c in 0..3 {
                assert_eq!(rec[c] as usize, face[c]);
            }
        }
    }

    #[test]
    fn modes_txt_round_trip() {
        let mesh = shapes::torus(6, 5, 1.0, 0.4);
        let set = compressed_modes(
            &mesh,
            &CmmOptions {
                k: 3,
                mu: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("modes.txt");
        write_modes_txt(&path, &set).unwrap();
        let read = read_modes_txt(&path).unwrap();
        assert_eq!(read.len(), 3);
        for (a, b) in read.iter().zip(&set.modes) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x, y, "full-precision text round-trip");
            }
        }
    }
}
