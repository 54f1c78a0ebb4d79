//! Orthographic software rasterization of meshes into per-view G-buffers and
//! into UV space.
//!
//! Coverage is decided at pixel centers with no antialiasing. The depth test
//! keeps the nearest fragment; equal depths keep the lower triangle index, so
//! output does not depend on how rows are scheduled across threads.

mod uv;
mod view;

pub use uv::{rasterize_uv, rasterize_uv_attributes, uv_to_texel, UvRaster, UvViewAttributes};
pub use view::{
    canonical_views, compute_ortho_scale, ndc_to_pixel, pixel_to_ndc, ViewId, ViewSpec,
    CAMERA_DISTANCE,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::mesh::{Mesh, Vec3};

pub const MIN_RESOLUTION: usize = 16;
const NO_FACE: u32 = u32::MAX;

/// Per-view geometry maps. Position, normal and depth are zero where alpha is 0.
#[derive(Clone, Debug)]
pub struct ViewGBuffer {
    pub view: ViewSpec,
    pub position: Image,
    pub normal: Image,
    pub alpha: Mask,
    pub depth: Image,
    /// NDC of every mesh vertex in this view, occluded or not.
    pub vertex_ndc: Vec<Vec3>,
}

impl ViewGBuffer {
    pub fn width(&self) -> usize {
        self.alpha.width()
    }

    pub fn height(&self) -> usize {
        self.alpha.height()
    }
}

/// Which triangle covers each pixel, with its barycentric coordinates.
pub(crate) struct Visibility {
    width: usize,
    face: Vec<u32>,
    bary: Vec<[f64; 3]>,
    depth: Vec<f64>,
}

impl Visibility {
    fn hit(&self, x: usize, y: usize) -> Option<(usize, [f64; 3], f64)> {
        let i = y * self.width + x;
        (self.face[i] != NO_FACE).then(|| (self.face[i] as usize, self.bary[i], self.depth[i]))
    }
}

/// Edge function evaluated with endpoints in a canonical order, so the two
/// triangles sharing an edge get bit-identical (negated) values and a pixel
/// center on the edge is never dropped by both.
#[inline]
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let raw = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    if (a[0], a[1]) <= (b[0], b[1]) {
        raw(a, b)
    } else {
        -raw(b, a)
    }
}

/// Barycentric coordinates of `p`, or `None` if outside the triangle.
#[inline]
pub(crate) fn barycentric(t: &[[f64; 2]; 3], p: [f64; 2]) -> Option<[f64; 3]> {
    let w0 = edge(t[1], t[2], p);
    let w1 = edge(t[2], t[0], p);
    let w2 = edge(t[0], t[1], p);
    let area = w0 + w1 + w2;
    if area == 0.0 {
        return None;
    }
    let inside = if area > 0.0 {
        w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0
    } else {
        w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0
    };
    inside.then(|| [w0 / area, w1 / area, w2 / area])
}

/// Inclusive range of pixel indices whose centers lie in `[lo, hi]`.
#[inline]
pub(crate) fn center_span(lo: f64, hi: f64, size: usize) -> Option<(usize, usize)> {
    let start = (lo - 0.5).ceil().max(0.0);
    let end = (hi - 0.5).floor().min(size as f64 - 1.0);
    (start <= end).then(|| (start as usize, end as usize))
}

pub(crate) fn rasterize_visibility(mesh: &Mesh, view: &ViewSpec, width: usize, height: usize) -> Visibility {
    let ndc: Vec<Vec3> = mesh.vertices.iter().map(|v| view.ndc(v)).collect();
    let screen: Vec<[f64; 2]> = ndc
        .iter()
        .map(|p| {
            let (x, y) = ndc_to_pixel(p.x, p.y, width, height);
            [x, y]
        })
        .collect();

    // bucket faces by the rows their pixel centers can touch, preserving index order
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); height];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let ys = f.map(|i| screen[i as usize][1]);
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let Some((y0, y1)) = center_span(lo, hi, height) {
            for row in &mut rows[y0..=y1] {
                row.push(fi as u32);
            }
        }
    }

    let mut face = vec![NO_FACE; width * height];
    let mut bary = vec![[0.0; 3]; width * height];
    let mut depth = vec![f64::INFINITY; width * height];

    face.par_chunks_mut(width)
        .zip(bary.par_chunks_mut(width))
        .zip(depth.par_chunks_mut(width))
        .zip(rows.par_iter())
        .enumerate()
        .for_each(|(y, (((face_row, bary_row), depth_row), candidates))| {
            let py = y as f64 + 0.5;
            for &fi in candidates {
                let f = mesh.faces[fi as usize];
                let tri = f.map(|i| screen[i as usize]);
                let xs = tri.map(|p| p[0]);
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let Some((x0, x1)) = center_span(lo, hi, width) else { continue };
                let z = f.map(|i| ndc[i as usize].z);
                for x in x0..=x1 {
                    let Some(l) = barycentric(&tri, [x as f64 + 0.5, py]) else { continue };
                    let d = l[0] * z[0] + l[1] * z[1] + l[2] * z[2];
                    if d < depth_row[x] {
                        depth_row[x] = d;
                        face_row[x] = fi;
                        bary_row[x] = l;
                    }
                }
            }
        });

    Visibility {
        width,
        face,
        bary,
        depth,
    }
}

fn check_resolution(width: usize, height: usize) {
    assert!(
        width >= MIN_RESOLUTION && height >= MIN_RESOLUTION,
        "resolution must be at least {MIN_RESOLUTION}x{MIN_RESOLUTION}"
    );
}

/// Renders position, world normal, alpha and depth maps of `mesh` from `view`.
pub fn render_view(mesh: &Mesh, view: &ViewSpec, width: usize, height: usize) -> ViewGBuffer {
    check_resolution(width, height);
    let vis = rasterize_visibility(mesh, view, width, height);
    let mut position = Image::new(width, height, 3);
    let mut normal = Image::new(width, height, 3);
    let mut depth = Image::new(width, height, 1);
    let mut alpha = Mask::new(width, height);

    for y in 0..height {
        for x in 0..width {
            let Some((fi, l, d)) = vis.hit(x, y) else { continue };
            let p = interpolate(&mesh.triangle(fi), &l);
            let n = interpolated_normal(mesh, fi, &l);
            position.pixel_mut(x, y).copy_from_slice(&[p.x as f32, p.y as f32, p.z as f32]);
            normal.pixel_mut(x, y).copy_from_slice(&[n.x as f32, n.y as f32, n.z as f32]);
            depth.pixel_mut(x, y)[0] = d as f32;
            alpha.set(x, y, true);
        }
    }

    ViewGBuffer {
        view: *view,
        position,
        normal,
        alpha,
        depth,
        vertex_ndc: mesh.vertices.iter().map(|v| view.ndc(v)).collect(),
    }
}

/// Renders the six canonical views at a shared orthographic scale.
pub fn render_all_views(mesh: &Mesh, ortho_scale: f64, resolution: usize) -> Vec<ViewGBuffer> {
    canonical_views(ortho_scale)
        .iter()
        .map(|v| render_view(mesh, v, resolution, resolution))
        .collect()
}

/// Renders `mesh` textured with a UV-space `texture` (bilinear lookups).
/// Background pixels are black with alpha 0.
pub fn render_textured_view(
    mesh: &Mesh,
    texture: &Image,
    view: &ViewSpec,
    width: usize,
    height: usize,
) -> (Image, Mask) {
    check_resolution(width, height);
    let vis = rasterize_visibility(mesh, view, width, height);
    let mut color = Image::new(width, height, texture.channels());
    let mut alpha = Mask::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let Some((fi, l, _)) = vis.hit(x, y) else { continue };
            let uvs = mesh.triangle_uvs(fi);
            let uv = uvs[0] * l[0] + uvs[1] * l[1] + uvs[2] * l[2];
            let (tx, ty) = uv_to_texel(uv.x, uv.y, texture.width(), texture.height());
            texture.sample_bilinear(tx, ty, color.pixel_mut(x, y));
            alpha.set(x, y, true);
        }
    }
    (color, alpha)
}

#[inline]
pub(crate) fn interpolate(t: &[Vec3; 3], l: &[f64; 3]) -> Vec3 {
    t[0] * l[0] + t[1] * l[1] + t[2] * l[2]
}

pub(crate) fn interpolated_normal(mesh: &Mesh, face: usize, l: &[f64; 3]) -> Vec3 {
    let n = interpolate(&mesh.triangle_normals(face), l);
    let len = n.norm();
    if len > 1e-12 {
        return n / len;
    }
    let [a, b, c] = mesh.triangle(face);
    (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::z)
}

/// Validates that `mesh` can be rendered at `resolution` with `margin`.
pub fn validate_render_args(resolution: usize, margin: f64) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least {MIN_RESOLUTION}"
        )));
    }
    if !(0.0..0.5).contains(&margin) {
        return Err(Error::InvalidArgument(format!(
            "margin must be in [0, 0.5), got {margin}"
        )));
    }
    Ok(())
}
