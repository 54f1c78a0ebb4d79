use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::mesh::{Mesh, Vec3};

use super::{interpolate, interpolated_normal, ViewSpec};

/// Subpixel grid used to snap UV vertices so that coverage is decided with
/// exact integer arithmetic.
const SUBPIXEL: i64 = 256;
const NO_FACE: u32 = u32::MAX;

/// Continuous texel coordinates of a UV point (v grows upward, rows downward).
#[inline]
pub fn uv_to_texel(u: f64, v: f64, width: usize, height: usize) -> (f64, f64) {
    (u * width as f64, (1.0 - v) * height as f64)
}

/// View-independent UV-space rasterization: which face covers each texel
/// center and where on that face it lies.
#[derive(Clone, Debug)]
pub struct UvRaster {
    width: usize,
    height: usize,
    face: Vec<u32>,
    bary: Vec<[f64; 3]>,
}

/// Per-texel attributes of one view, sampled in UV space.
#[derive(Clone, Debug)]
pub struct UvViewAttributes {
    /// View NDC `(x, y)` of the texel's surface point.
    pub ndc: Image,
    /// Linear camera depth of the surface point.
    pub depth: Image,
    /// Camera-space normal; `z` is the cosine with the direction to the camera.
    pub camera_normal: Image,
    pub valid: Mask,
}

/// Rasterizes the UV layout at `width × height` texels using a top-left
/// fill rule, so texel centers on shared chart edges are covered exactly once.
/// Two faces covering one texel center is reported as an overlapping layout.
pub fn rasterize_uv(mesh: &Mesh, width: usize, height: usize) -> Result<UvRaster> {
    let mut face = vec![NO_FACE; width * height];
    let mut bary = vec![[0.0; 3]; width * height];

    for fi in 0..mesh.faces.len() {
        let snapped = mesh.triangle_uvs(fi).map(|t| {
            let (x, y) = uv_to_texel(t.x, t.y, width, height);
            [
                (x * SUBPIXEL as f64).round() as i64,
                (y * SUBPIXEL as f64).round() as i64,
            ]
        });
        let area = edge_i(snapped[0], snapped[1], snapped[2]);
        if area == 0 {
            continue;
        }
        // orient counter-clockwise in the edge-function sense, remembering the permutation
        let (tri, order) = if area > 0 {
            (snapped, [0, 1, 2])
        } else {
            ([snapped[0], snapped[2], snapped[1]], [0, 2, 1])
        };
        let area = area.abs();

        let min_x = tri.iter().map(|p| p[0]).min().unwrap();
        let max_x = tri.iter().map(|p| p[0]).max().unwrap();
        let min_y = tri.iter().map(|p| p[1]).min().unwrap();
        let max_y = tri.iter().map(|p| p[1]).max().unwrap();
        let Some((x0, x1)) = texel_span(min_x, max_x, width) else { continue };
        let Some((y0, y1)) = texel_span(min_y, max_y, height) else { continue };

        for y in y0..=y1 {
            let py = y as i64 * SUBPIXEL + SUBPIXEL / 2;
            for x in x0..=x1 {
                let p = [x as i64 * SUBPIXEL + SUBPIXEL / 2, py];
                let w = [
                    edge_i(tri[1], tri[2], p),
                    edge_i(tri[2], tri[0], p),
                    edge_i(tri[0], tri[1], p),
                ];
                let inside = w[0] >= 0
                    && w[1] >= 0
                    && w[2] >= 0
                    && (w[0] > 0 || owns_edge(tri[1], tri[2]))
                    && (w[1] > 0 || owns_edge(tri[2], tri[0]))
                    && (w[2] > 0 || owns_edge(tri[0], tri[1]));
                if !inside {
                    continue;
                }
                let i = y * width + x;
                if face[i] != NO_FACE {
                    return Err(Error::OverlappingUv {
                        first: face[i] as usize,
                        second: fi,
                        x,
                        y,
                    });
                }
                let mut l = [0.0; 3];
                for k in 0..3 {
                    l[order[k]] = w[k] as f64 / area as f64;
                }
                face[i] = fi as u32;
                bary[i] = l;
            }
        }
    }

    Ok(UvRaster {
        width,
        height,
        face,
        bary,
    })
}

#[inline]
fn edge_i(a: [i64; 2], b: [i64; 2], p: [i64; 2]) -> i64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Tie rule for texel centers exactly on an edge. Reversing the edge flips
/// the answer, so of two faces sharing an edge exactly one owns it.
#[inline]
fn owns_edge(a: [i64; 2], b: [i64; 2]) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    dy > 0 || (dy == 0 && dx < 0)
}

fn texel_span(lo: i64, hi: i64, size: usize) -> Option<(usize, usize)> {
    // texel i has its center at i*S + S/2
    let half = SUBPIXEL / 2;
    let start = (lo - half).div_euclid(SUBPIXEL) + i64::from((lo - half).rem_euclid(SUBPIXEL) != 0);
    let end = (hi - half).div_euclid(SUBPIXEL);
    let start = start.max(0);
    let end = end.min(size as i64 - 1);
    (start <= end).then(|| (start as usize, end as usize))
}

impl UvRaster {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Face index and barycentrics covering texel `(x, y)`.
    pub fn hit(&self, x: usize, y: usize) -> Option<(usize, [f64; 3])> {
        let i = y * self.width + x;
        (self.face[i] != NO_FACE).then(|| (self.face[i] as usize, self.bary[i]))
    }

    pub fn coverage(&self) -> Mask {
        Mask::from_fn(self.width, self.height, |x, y| self.hit(x, y).is_some())
    }

    /// 3D surface position of every covered texel.
    pub fn positions(&self, mesh: &Mesh) -> Image {
        let mut img = Image::new(self.width, self.height, 3);
        for y in 0..self.height {
            for x in 0..self.width {
                if let Some((fi, l)) = self.hit(x, y) {
                    let p = interpolate(&mesh.triangle(fi), &l);
                    img.pixel_mut(x, y).copy_from_slice(&[p.x as f32, p.y as f32, p.z as f32]);
                }
            }
        }
        img
    }

    /// Interpolated world-space unit normal of every covered texel.
    pub fn normals(&self, mesh: &Mesh) -> Image {
        let mut img = Image::new(self.width, self.height, 3);
        for y in 0..self.height {
            for x in 0..self.width {
                if let Some((fi, l)) = self.hit(x, y) {
                    let n = interpolated_normal(mesh, fi, &l);
                    img.pixel_mut(x, y).copy_from_slice(&[n.x as f32, n.y as f32, n.z as f32]);
                }
            }
        }
        img
    }

    /// Projects every covered texel into `view`.
    pub fn view_attributes(&self, mesh: &Mesh, view: &ViewSpec) -> UvViewAttributes {
        let (w, h) = (self.width, self.height);
        let mut ndc = Image::new(w, h, 2);
        let mut depth = Image::new(w, h, 1);
        let mut camera_normal = Image::new(w, h, 3);
        let mut valid = Mask::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let Some((fi, l)) = self.hit(x, y) else { continue };
                let p: Vec3 = view.ndc(&interpolate(&mesh.triangle(fi), &l));
                let n = view.camera_normal(&interpolated_normal(mesh, fi, &l));
                ndc.pixel_mut(x, y).copy_from_slice(&[p.x as f32, p.y as f32]);
                depth.pixel_mut(x, y)[0] = p.z as f32;
                camera_normal.pixel_mut(x, y).copy_from_slice(&[n.x as f32, n.y as f32, n.z as f32]);
                valid.set(x, y, true);
            }
        }
        UvViewAttributes {
            ndc,
            depth,
            camera_normal,
            valid,
        }
    }
}

/// Rasterizes UV space and returns one view's per-texel NDC, depth and
/// camera-space normal.
pub fn rasterize_uv_attributes(
    mesh: &Mesh,
    view: &ViewSpec,
    width: usize,
    height: usize,
) -> Result<UvViewAttributes> {
    Ok(rasterize_uv(mesh, width, height)?.view_attributes(mesh, view))
}
