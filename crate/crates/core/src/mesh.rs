//! Triangle meshes with a UV parameterization, Wavefront OBJ I/O and
//! normalization into the `[-1, 1]³` cube.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Vertices, position faces and UV faces (`faces[i]` and `face_uvs[i]` are
/// the same triangle). Normals are per vertex and unit length.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    pub uv_coords: Vec<Vec2>,
    pub face_uvs: Vec<[u32; 3]>,
    pub normals: Vec<Vec3>,
}

impl Mesh {
    /// Assembles a mesh, computing area-weighted vertex normals.
    pub fn new(
        vertices: Vec<Vec3>,
        faces: Vec<[u32; 3]>,
        uv_coords: Vec<Vec2>,
        face_uvs: Vec<[u32; 3]>,
    ) -> Result<Self> {
        let mut mesh = Mesh {
            vertices,
            faces,
            uv_coords,
            face_uvs,
            normals: Vec::new(),
        };
        mesh.validate()?;
        mesh.recompute_normals();
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if self.faces.len() != self.face_uvs.len() {
            return Err(Error::InvalidMesh(format!(
                "{} faces but {} UV faces",
                self.faces.len(),
                self.face_uvs.len()
            )));
        }
        let nv = self.vertices.len();
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i as usize >= nv)) {
            return Err(Error::InvalidMesh(format!("face {f:?} indexes past {nv} vertices")));
        }
        let nt = self.uv_coords.len();
        if let Some(f) = self.face_uvs.iter().find(|f| f.iter().any(|&i| i as usize >= nt)) {
            return Err(Error::InvalidMesh(format!("UV face {f:?} indexes past {nt} UVs")));
        }
        if !self.normals.is_empty() && self.normals.len() != nv {
            return Err(Error::InvalidMesh("normal count differs from vertex count".into()));
        }
        Ok(())
    }

    /// Per-vertex normals as the area-weighted sum of incident face normals.
    pub fn recompute_normals(&mut self) {
        let mut acc = vec![Vec3::zeros(); self.vertices.len()];
        for f in &self.faces {
            let [a, b, c] = f.map(|i| self.vertices[i as usize]);
            // cross product magnitude is twice the area, so this is area weighting
            let n = (b - a).cross(&(c - a));
            for &i in f {
                acc[i as usize] += n;
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vec3::z()
                }
            })
            .collect();
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i as usize])
    }

    pub fn triangle_uvs(&self, face: usize) -> [Vec2; 3] {
        self.face_uvs[face].map(|i| self.uv_coords[i as usize])
    }

    pub fn triangle_normals(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.normals[i as usize])
    }

    /// Axis-aligned bounds `(min, max)`; `None` for an empty mesh.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (lo.inf(v), hi.sup(v))
        }))
    }

    /// Centers the bounding box at the origin and scales uniformly so the
    /// largest absolute coordinate is 1. Topology and UVs are untouched.
    pub fn normalized(&self) -> Result<Mesh> {
        let (lo, hi) = self.bounds().ok_or(Error::DegenerateMesh("mesh has no vertices"))?;
        let center = (lo + hi) * 0.5;
        let half = (hi - lo).max() * 0.5;
        if !(half > 0.0) || !half.is_finite() {
            return Err(Error::DegenerateMesh("all vertices coincide"));
        }
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v = (*v - center) / half;
        }
        Ok(out)
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        parse_obj(&text, path)
    }

    pub fn save_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_obj_string())?;
        Ok(())
    }

    /// OBJ text with shortest round-trip float formatting, so re-parsing
    /// reproduces every coordinate exactly.
    pub fn to_obj_string(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &self.uv_coords {
            let _ = writeln!(s, "vt {} {}", t.x, t.y);
        }
        for n in &self.normals {
            let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
        }
        for (f, t) in self.faces.iter().zip(&self.face_uvs) {
            let _ = writeln!(
                s,
                "f {}/{}/{} {}/{}/{} {}/{}/{}",
                f[0] + 1,
                t[0] + 1,
                f[0] + 1,
                f[1] + 1,
                t[1] + 1,
                f[1] + 1,
                f[2] + 1,
                t[2] + 1,
                f[2] + 1
            );
        }
        s
    }
}

struct Corner {
    v: u32,
    vt: Option<u32>,
    vn: Option<u32>,
}

pub(crate) fn parse_obj(text: &str, path: &Path) -> Result<Mesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    let mut file_normals: Vec<Vec3> = Vec::new();
    let mut faces = Vec::new();
    let mut face_uvs = Vec::new();
    // (line, vertex index, normal index) for every corner that names a normal
    let mut corner_normals: Vec<(usize, u32, u32)> = Vec::new();
    let mut face_lines = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        let floats = |parts: std::str::SplitWhitespace<'_>, n: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = parts
                .take(n)
                .map(|p| p.parse::<f64>().map_err(|_| err(line_no, format!("bad number `{p}`"))))
                .collect::<Result<_>>()?;
            if vals.len() < n {
                return Err(err(line_no, format!("expected {n} numbers after `{tag}`")));
            }
            Ok(vals)
        };
        match tag {
            "v" => {
                let p = floats(parts, 3)?;
                vertices.push(Vec3::new(p[0], p[1], p[2]));
            }
            "vt" => {
                let p = floats(parts, 2)?;
                uvs.push(Vec2::new(p[0], p[1]));
            }
            "vn" => {
                let p = floats(parts, 3)?;
                file_normals.push(Vec3::new(p[0], p[1], p[2]));
            }
            "f" => {
                let corners: Vec<Corner> = parts
                    .map(|tok| parse_corner(tok).map_err(|m| err(line_no, m)))
                    .collect::<Result<_>>()?;
                if corners.len() < 3 {
                    return Err(err(line_no, "face needs at least 3 corners".into()));
                }
                for c in &corners {
                    if c.v as usize >= vertices.len() {
                        return Err(err(line_no, format!("vertex index {} out of range", c.v + 1)));
                    }
                    if let Some(n) = c.vn {
                        if n as usize >= file_normals.len() {
                            return Err(err(line_no, format!("normal index {} out of range", n + 1)));
                        }
                        corner_normals.push((line_no, c.v, n));
                    }
                }
                // fan triangulation around the first corner
                for k in 1..corners.len() - 1 {
                    let tri = [&corners[0], &corners[k], &corners[k + 1]];
                    faces.push(tri.map(|c| c.v));
                    face_uvs.push(tri.map(|c| c.vt));
                    face_lines.push(line_no);
                }
            }
            _ => {}
        }
    }

    if uvs.is_empty() {
        return Err(Error::MissingUvs);
    }
    let face_uvs = face_uvs
        .into_iter()
        .zip(&face_lines)
        .map(|(t, &line)| {
            let t = t.map(|i| i.ok_or_else(|| err(line, "face corner without UV index".into())));
            let [a, b, c] = t;
            let idx = [a?, b?, c?];
            if let Some(bad) = idx.iter().find(|&&i| i as usize >= uvs.len()) {
                return Err(err(line, format!("UV index {} out of range", bad + 1)));
            }
            Ok(idx)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mesh = Mesh::new(vertices, faces, uvs, face_uvs)?;
    if !corner_normals.is_empty() {
        let mut acc = vec![Vec3::zeros(); mesh.vertices.len()];
        for &(_, v, n) in &corner_normals {
            acc[v as usize] += file_normals[n as usize];
        }
        for (dst, n) in mesh.normals.iter_mut().zip(acc) {
            let len = n.norm();
            if len > 0.0 {
                *dst = n / len;
            }
        }
    }
    Ok(mesh)
}

fn parse_corner(tok: &str) -> std::result::Result<Corner, String> {
    let mut fields = tok.split('/');
    let index = |s: Option<&str>| -> std::result::Result<Option<u32>, String> {
        match s {
            None | Some("") => Ok(None),
            Some(s) => {
                let i: i64 = s.parse().map_err(|_| format!("bad index `{s}`"))?;
                if i < 0 {
                    Err(format!("negative index `{s}` is not supported"))
                } else if i == 0 {
                    Err("index 0 is invalid (OBJ is 1-based)".into())
                } else {
                    Ok(Some((i - 1) as u32))
                }
            }
        }
    };
    let v = index(fields.next())?.ok_or_else(|| format!("missing vertex index in `{tok}`"))?;
    let vt = index(fields.next())?;
    let vn = index(fields.next())?;
    Ok(Corner { v, vt, vn })
}
