use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use super::{Image, RenderError};

/// Surface appearance of a mesh.
#[derive(Debug, Clone)]
pub enum Appearance {
    Uniform([f32; 3]),
    VertexColors(Vec<[f32; 3]>),
    /// Per-vertex UV (OBJ convention, `v` pointing up) into an RGB texture.
    Textured { uvs: Vec<[f32; 2]>, texture: Image },
}

/// Triangle mesh in the model frame, meters.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
    appearance: Appearance,
}

impl Mesh {
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[u32; 3]>,
        appearance: Appearance,
    ) -> Result<Mesh, RenderError> {
        let bad = |m: String| Err(RenderError::InvalidMesh(m));
        if vertices.is_empty() || triangles.is_empty() {
            return bad("mesh has no vertices or no triangles".into());
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return bad("non-finite vertex coordinate".into());
        }
        let n = vertices.len() as u32;
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return bad(format!("triangle {t:?} indexes past {n} vertices"));
        }
        match &appearance {
            Appearance::VertexColors(c) if c.len() != vertices.len() => {
                return bad("vertex color count mismatch".into())
            }
            Appearance::Textured { uvs, texture } => {
                if uvs.len() != vertices.len() {
                    return bad("uv count mismatch".into());
                }
                if texture.channels != 3 || texture.width == 0 || texture.height == 0 {
                    return bad("texture must be a non-empty RGB image".into());
                }
            }
            _ => {}
        }
        Ok(Mesh {
            vertices,
            triangles,
            appearance,
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn appearance(&self) -> &Appearance {
        &self.appearance
    }

    /// Largest vertex distance from the model origin.
    pub fn bounding_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Copy with the triangle list permuted by `order`.
    pub fn with_triangle_order(&self, order: &[usize]) -> Mesh {
        let mut m = self.clone();
        m.triangles = order.iter().map(|&i| self.triangles[i]).collect();
        m
    }

    /// Albedo at barycentric position `b` of triangle `tri`; `b` must already
    /// be perspective corrected.
    pub fn albedo(&self, tri: usize, b: [f64; 3]) -> [f32; 3] {
        let idx = self.triangles[tri];
        match &self.appearance {
            Appearance::Uniform(c) => *c,
            Appearance::VertexColors(colors) => {
                let mut out = [0.0f32; 3];
                for (k, &vi) in idx.iter().enumerate() {
                    for (o, c) in out.iter_mut().zip(colors[vi as usize]) {
                        *o += b[k] as f32 * c;
                    }
                }
                out
            }
            Appearance::Textured { uvs, texture } => {
                let mut u = 0.0f64;
                let mut v = 0.0f64;
                for (k, &vi) in idx.iter().enumerate() {
                    u += b[k] * uvs[vi as usize][0] as f64;
                    v += b[k] * uvs[vi as usize][1] as f64;
                }
                sample_texture(texture, u, v)
            }
        }
    }

    /// Axis-aligned cube of the given side length with a procedural texture
    /// whose six faces are mutually distinguishable and carry no rotational
    /// symmetry.
    pub fn textured_cube(side: f64) -> Mesh {
        const TILE: usize = 64;
        let h = side / 2.0;
        // (normal axis, sign, u axis, v axis) per face, u × v = outward normal
        let faces: [(Vector3<f64>, Vector3<f64>, Vector3<f64>); 6] = [
            (Vector3::x(), -Vector3::z(), Vector3::y()),
            (-Vector3::x(), Vector3::z(), Vector3::y()),
            (Vector3::y(), Vector3::x(), -Vector3::z()),
            (-Vector3::y(), Vector3::x(), Vector3::z()),
            (Vector3::z(), Vector3::x(), Vector3::y()),
            (-Vector3::z(), -Vector3::x(), Vector3::y()),
        ];
        let mut vertices = Vec::new();
        let mut uvs = Vec::new();
        let mut triangles = Vec::new();
        for (f, (n, u, v)) in faces.iter().enumerate() {
            let (tu, tv) = ((f % 3) as f32, (f / 3) as f32);
            let base = vertices.len() as u32;
            for (cu, cv) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                vertices.push((n + u * cu + v * cv) * h);
                let su = (tu + (0.02 + 0.96 * (cu as f32 + 1.0) / 2.0)) / 3.0;
                let sv = (tv + (0.02 + 0.96 * (cv as f32 + 1.0) / 2.0)) / 2.0;
                uvs.push([su, sv]);
            }
            triangles.push([base, base + 1, base + 2]);
            triangles.push([base, base + 2, base + 3]);
        }
        let hues: [[f32; 3]; 6] = [
            [0.85, 0.25, 0.2],
            [0.2, 0.7, 0.3],
            [0.2, 0.35, 0.85],
            [0.9, 0.8, 0.2],
            [0.75, 0.3, 0.8],
            [0.2, 0.8, 0.8],
        ];
        let texture = Image::from_fn(3 * TILE, 2 * TILE, 3, |x, y, c| {
            // image rows run top-down, uv v runs bottom-up
            let f = (x / TILE) + 3 * (1 - y / TILE);
            let (lx, ly) = (x % TILE, TILE - 1 - (y % TILE));
            let base = hues[f][c];
            let checker = ((lx / 16) + (ly / 16) + f).is_multiple_of(2);
            let mut val = if checker { base } else { base * 0.55 };
            // corner marker and a diagonal stripe break the symmetries
            if lx < 20 && ly < 20 {
                val = 0.95;
            }
            if (lx + 2 * ly) % 48 < 5 {
                val = 0.08;
            }
            if lx > 40 && ly > 40 && (lx - 40) * 2 > (ly - 40) {
                val = 1.0 - val * 0.7;
            }
            val
        });
        Mesh::new(vertices, triangles, Appearance::Textured { uvs, texture })
            .expect("cube construction is valid")
    }

    /// Wavefront OBJ with `v`, `vt` and `f` records; polygons are fan
    /// triangulated. `v` lines may carry a trailing RGB triple.
    pub fn load_obj(path: &Path, texture: Option<&Path>) -> Result<Mesh, RenderError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RenderError::Io(format!("{}: {e}", path.display())))?;
        let texture = texture.map(Image::load).transpose()?;
        Mesh::parse_obj(&text, texture)
    }

    pub fn parse_obj(text: &str, texture: Option<Image>) -> Result<Mesh, RenderError> {
        let mut pos: Vec<Vector3<f64>> = Vec::new();
        let mut col: Vec<Option<[f32; 3]>> = Vec::new();
        let mut tex: Vec<[f32; 2]> = Vec::new();
        let mut map: HashMap<(usize, Option<usize>), u32> = HashMap::new();
        let mut vertices = Vec::new();
        let mut colors = Vec::new();
        let mut uvs = Vec::new();
        let mut triangles = Vec::new();
        let perr = |line: usize, m: &str| RenderError::InvalidMesh(format!("line {line}: {m}"));

        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut it = line.split_whitespace();
            let Some(tag) = it.next() else { continue };
            let nums = |it: std::str::SplitWhitespace| -> Result<Vec<f64>, RenderError> {
                it.map(|s| s.parse::<f64>().map_err(|_| perr(ln + 1, "bad number")))
                    .collect()
            };
            match tag {
                "v" => {
                    let v = nums(it)?;
                    if v.len() < 3 {
                        return Err(perr(ln + 1, "vertex needs 3 coordinates"));
                    }
                    pos.push(Vector3::new(v[0], v[1], v[2]));
                    col.push((v.len() >= 6).then(|| [v[3] as f32, v[4] as f32, v[5] as f32]));
                }
                "vt" => {
                    let v = nums(it)?;
                    if v.len() < 2 {
                        return Err(perr(ln + 1, "texture coordinate needs 2 values"));
                    }
                    tex.push([v[0] as f32, v[1] as f32]);
                }
                "f" => {
                    let mut poly = Vec::new();
                    for corner in it {
                        let mut parts = corner.split('/');
                        let resolve = |s: Option<&str>, n: usize| -> Result<Option<usize>, RenderError> {
                            match s {
                                None | Some("") => Ok(None),
                                Some(s) => {
                                    let i: i64 = s.parse().map_err(|_| perr(ln + 1, "bad index"))?;
                                    let idx = if i < 0 { n as i64 + i } else { i - 1 };
                                    if idx < 0 || idx as usize >= n {
                                        return Err(perr(ln + 1, "index out of range"));
                                    }
                                    Ok(Some(idx as usize))
                                }
                            }
                        };
                        let vi = resolve(parts.next(), pos.len())?
                            .ok_or_else(|| perr(ln + 1, "missing vertex index"))?;
                        let ti = resolve(parts.next(), tex.len())?;
                        let key = (vi, ti);
                        let id = *map.entry(key).or_insert_with(|| {
                            vertices.push(pos[vi]);
                            colors.push(col[vi]);
                            uvs.push(ti.map(|t| tex[t]));
                            (vertices.len() - 1) as u32
                        });
                        poly.push(id);
                    }
                    if poly.len() < 3 {
                        return Err(perr(ln + 1, "face with fewer than 3 corners"));
                    }
                    for k in 1..poly.len() - 1 {
                        triangles.push([poly[0], poly[k], poly[k + 1]]);
                    }
                }
                _ => {}
            }
        }

        let appearance = match texture {
            Some(texture) if uvs.iter().all(|u| u.is_some()) => Appearance::Textured {
                uvs: uvs.into_iter().map(|u| u.unwrap()).collect(),
                texture,
            },
            _ if colors.iter().all(|c| c.is_some()) && !colors.is_empty() => {
                Appearance::VertexColors(colors.into_iter().map(|c| c.unwrap()).collect())
            }
            _ => Appearance::Uniform([0.7, 0.7, 0.7]),
        };
        Mesh::new(vertices, triangles, appearance)
    }
}

/// Bilinear texture lookup with clamped edges.
fn sample_texture(tex: &Image, u: f64, v: f64) -> [f32; 3] {
    let x = (u.clamp(0.0, 1.0) * tex.width as f64 - 0.5).clamp(0.0, (tex.width - 1) as f64);
    let y = ((1.0 - v.clamp(0.0, 1.0)) * tex.height as f64 - 0.5).clamp(0.0, (tex.height - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(tex.width - 1), (y0 + 1).min(tex.height - 1));
    let (fx, fy) = ((x - x0 as f64) as f32, (y - y0 as f64) as f32);
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let top = tex.get(x0, y0, c) * (1.0 - fx) + tex.get(x1, y0, c) * fx;
        let bot = tex.get(x0, y1, c) * (1.0 - fx) + tex.get(x1, y1, c) * fx;
        *o = top * (1.0 - fy) + bot * fy;
    }
    out
}
