//! OBJ (ASCII) and PLY (binary little-endian, float64 positions).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::trimesh::TriMesh;
use crate::vec3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

/// Write OBJ with shortest round-trip float formatting. Orbit labels go into
/// `# orbit <vertex> <label>` comments with 1-based vertex indices.
pub fn write_obj<T: Real, W: Write>(mesh: &TriMesh<T>, mut w: W) -> Result<()> {
    writeln!(w, "# vertices {} triangles {}", mesh.vertices.len(), mesh.triangles.len())?;
    for p in &mesh.vertices {
        let p: Vec3<f64> = p.cast();
        writeln!(w, "v {:?} {:?} {:?}", p.x(), p.y(), p.z())?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    for (i, l) in mesh.orbit_labels.iter().enumerate() {
        if let Some(l) = l {
            writeln!(w, "# orbit {} {}", i + 1, l)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_obj<T: Real, R: Read>(r: R) -> Result<TriMesh<T>> {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    let mut labels: Vec<(usize, usize)> = Vec::new();
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
        match it.next() {
            Some("v") => {
                let mut c = [T::zero(); 3];
                for slot in c.iter_mut() {
                    let s = it.next().ok_or_else(|| bad("missing coordinate"))?;
                    let x: f64 = s.parse().map_err(|_| bad("bad coordinate"))?;
                    *slot = T::lit(x);
                }
                verts.push(Vec3(c));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| bad("bad face index"))?;
                    let i = if i < 0 { verts.len() as i64 + i } else { i - 1 };
                    if i < 0 {
                        return Err(bad("face index out of range"));
                    }
                    idx.push(i as usize);
                }
                if idx.len() < 3 {
                    return Err(bad("face with fewer than three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    tris.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            Some("#") => {
                if it.next() == Some("orbit") {
                    let v: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad orbit record"))?;
                    let l: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad orbit record"))?;
                    if v == 0 {
                        return Err(bad("orbit vertex index is 1-based"));
                    }
                    labels.push((v - 1, l));
                }
            }
            _ => {}
        }
    }
    if tris.iter().flatten().any(|&i| i >= verts.len()) {
        return Err(Error::Parse("face index out of range".into()));
    }
    let mut mesh = TriMesh::new(verts, tris);
    for (v, l) in labels {
        if v < mesh.orbit_labels.len() {
            mesh.orbit_labels[v] = Some(l);
        }
    }
    Ok(mesh)
}

/// Binary little-endian PLY: 24 bytes per vertex (three doubles) and 13 bytes
/// per face (uchar count + three int32 indices).
pub fn write_ply<T: Real, W: Write>(mesh: &TriMesh<T>, mut w: W) -> Result<()> {
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    )?;
    for p in &mesh.vertices {
        for k in 0..3 {
            w.write_all(&p[k].as_f64().to_le_bytes())?;
        }
    }
    for t in &mesh.triangles {
        w.write_all(&[3u8])?;
        for &i in t {
            let i = i32::try_from(i).map_err(|_| Error::InvalidInput("vertex index exceeds int32".into()))?;
            w.write_all(&i.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_ply<T: Real, R: Read>(r: R) -> Result<TriMesh<T>> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    let mut nv = 0usize;
    let mut nf = 0usize;
    let mut vprops: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut face_count_ty = String::from("uchar");
    let mut face_index_ty = String::from("int");
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Parse("PLY header not terminated".into()));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", fmt, ..] if *fmt != "binary_little_endian" => {
                return Err(Error::Parse(format!("unsupported PLY format {fmt}")));
            }
            ["element", name, n] => {
                current = name.to_string();
                let n: usize = n.parse().map_err(|_| Error::Parse("bad element count".into()))?;
                if *name == "vertex" {
                    nv = n;
                } else if *name == "face" {
                    nf = n;
                }
            }
            ["property", "list", cty, ity, _] if current == "face" => {
                face_count_ty = cty.to_string();
                face_index_ty = ity.to_string();
            }
            ["property", ty, _] if current == "vertex" => vprops.push(ty.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let size = |ty: &str| -> Result<usize> {
        Ok(match ty {
            "char" | "uchar" | "int8" | "uint8" => 1,
            "short" | "ushort" | "int16" | "uint16" => 2,
            "int" | "uint" | "float" | "int32" | "uint32" | "float32" => 4,
            "double" | "float64" => 8,
            _ => return Err(Error::Parse(format!("unknown PLY type {ty}"))),
        })
    };
    let read_num = |r: &mut BufReader<R>, ty: &str| -> Result<f64> {
        let mut b = [0u8; 8];
        let n = size(ty)?;
        r.read_exact(&mut b[..n])?;
        Ok(match ty {
            "double" | "float64" => f64::from_le_bytes(b),
            "float" | "float32" => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            "char" | "int8" => b[0] as i8 as f64,
            "uchar" | "uint8" => b[0] as f64,
            "short" | "int16" => i16::from_le_bytes([b[0], b[1]]) as f64,
            "ushort" | "uint16" => u16::from_le_bytes([b[0], b[1]]) as f64,
            "int" | "int32" => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            _ => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        })
    };
    if vprops.len() < 3 {
        return Err(Error::Parse("PLY vertex element needs x y z".into()));
    }
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut c = [T::zero(); 3];
        for (k, ty) in vprops.iter().enumerate() {
            let x = read_num(&mut r, ty)?;
            if k < 3 {
                c[k] = T::lit(x);
            }
        }
        verts.push(Vec3(c));
    }
    let mut tris = Vec::with_capacity(nf);
    for _ in 0..nf {
        let cnt = read_num(&mut r, &face_count_ty)? as usize;
        let mut idx = Vec::with_capacity(cnt);
        for _ in 0..cnt {
            let i = read_num(&mut r, &face_index_ty)?;
            if i < 0.0 || i as usize >= nv {
                return Err(Error::Parse("PLY face index out of range".into()));
            }
            idx.push(i as usize);
        }
        if cnt < 3 {
            return Err(Error::Parse("PLY face with fewer than three vertices".into()));
        }
        for k in 1..cnt - 1 {
            tris.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    Ok(TriMesh::new(verts, tris))
}

impl<T: Real> TriMesh<T> {
    /// Write to `path`, choosing the format from the extension unless given.
    pub fn save(&self, path: &Path, format: Option<MeshFormat>) -> Result<()> {
        let fmt = format
            .or_else(|| MeshFormat::from_path(path))
            .ok_or_else(|| Error::InvalidInput(format!("cannot infer mesh format of {}", path.display())))?;
        let w = BufWriter::new(File::create(path)?);
        match fmt {
            MeshFormat::Obj => write_obj(self, w),
            MeshFormat::Ply => write_ply(self, w),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let fmt = MeshFormat::from_path(path)
            .ok_or_else(|| Error::InvalidInput(format!("cannot infer mesh format of {}", path.display())))?;
        let f = File::open(path)?;
        match fmt {
            MeshFormat::Obj => read_obj(f),
            MeshFormat::Ply => read_ply(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trimesh::primitives;

    #[test]
    fn tetrahedron_obj_records() {
        let mut buf = Vec::new();
        write_obj(&primitives::tetrahedron::<f64>(), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 4);
        assert!(s.contains("f 1 2 3"));
    }

    #[test]
    fn orbit_labels_survive_obj() {
        let mut m = primitives::tetrahedron::<f64>();
        m.orbit_labels = vec![Some(0), None, Some(3), Some(0)];
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains("# orbit 3 3"));
        let back: TriMesh<f64> = read_obj(&buf[..]).unwrap();
        assert_eq!(back.orbit_labels, m.orbit_labels);
    }

    #[test]
    fn ply_size_arithmetic() {
        let m = primitives::icosphere::<f64>(1.0, 2);
        let mut buf = Vec::new();
        write_ply(&m, &mut buf).unwrap();
        let header_len = buf.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
        assert_eq!(buf.len(), header_len + 24 * m.vertices.len() + 13 * m.triangles.len());
        let back: TriMesh<f64> = read_ply(&buf[..]).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
    }

    #[test]
    fn obj_quads_are_fanned() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n";
        let m: TriMesh<f64> = read_obj(src.as_bytes()).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }
}
