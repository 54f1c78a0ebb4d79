//! Back-projection of a packed multi-view texture atlas into UV space.
//!
//! Every covered texel is projected into each view, remapped into that
//! view's atlas cell and sampled there. Per view, its sample is weighted by
//! visibility (depth test against the depth atlas), by the squared cosine of
//! the viewing angle and by a continuity flag that rejects samples near
//! depth edges. The weighted average is the fused texture; texels no view
//! sees are filled from their nearest valid neighbours.

use crate::error::{Error, Result};
use crate::image::{nearest_pixel, Image, Mask};
use crate::mesh::Mesh;
use crate::pack::{remap_ndc, PackingLayout};
use crate::raster::{ndc_to_pixel, rasterize_uv, UvRaster, UvViewAttributes, ViewSpec};

pub const DEFAULT_DEPTH_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.05;
pub const DEFAULT_EDGE_DILATION: usize = 2;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BakeConfig {
    pub uv_width: usize,
    pub uv_height: usize,
    pub depth_tolerance: f64,
    pub edge_threshold: f64,
    pub edge_dilation: usize,
    pub fill_holes: bool,
}

impl Default for BakeConfig {
    fn default() -> Self {
        Self {
            uv_width: 1024,
            uv_height: 1024,
            depth_tolerance: DEFAULT_DEPTH_TOLERANCE,
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
            edge_dilation: DEFAULT_EDGE_DILATION,
            fill_holes: true,
        }
    }
}

/// A texture in UV space with its validity and accumulated fusion weight.
#[derive(Clone, Debug)]
pub struct UvTexture {
    pub data: Image,
    pub valid: Mask,
    pub weight_sum: Image,
}

impl UvTexture {
    /// RGBA image with alpha 1 on valid texels.
    pub fn to_rgba(&self) -> Image {
        let (w, h, c) = (self.data.width(), self.data.height(), self.data.channels());
        Image::from_fn(w, h, 4, |x, y, out| {
            if self.valid.get(x, y) {
                let p = self.data.pixel(x, y);
                for k in 0..3 {
                    out[k] = p[k.min(c - 1)];
                }
                out[3] = 1.0;
            }
        })
    }
}

/// Per-view, per-texel fusion weights.
#[derive(Clone, Debug)]
pub struct FusionWeights {
    pub visibility: Mask,
    pub angle: Image,
    pub continuity: Mask,
    pub total: Image,
}

/// One view's UV-space attributes together with where each texel lands on
/// the atlas.
#[derive(Clone, Debug)]
pub struct ProjectedView {
    pub attributes: UvViewAttributes,
    /// Atlas NDC of each texel.
    pub atlas_ndc: Image,
    /// Covered texels whose view position falls inside the view's crop.
    pub in_cell: Mask,
}

/// Projects covered texels into `view` and on into its atlas cell.
pub fn project_view(uv: &UvRaster, mesh: &Mesh, view: &ViewSpec, layout: &PackingLayout) -> ProjectedView {
    let attributes = uv.view_attributes(mesh, view);
    let pl = layout.placement(view.id);
    let (w, h) = (uv.width(), uv.height());
    let (vw, vh) = (layout.view_width as usize, layout.view_height as usize);
    let mut atlas_ndc = Image::new(w, h, 2);
    let mut in_cell = Mask::new(w, h);
    let b = pl.bbox;
    for y in 0..h {
        for x in 0..w {
            if !attributes.valid.get(x, y) {
                continue;
            }
            let n = attributes.ndc.pixel(x, y);
            let ndc = crate::mesh::Vec3::new(n[0].into(), n[1].into(), 0.0);
            let (px, py) = ndc_to_pixel(ndc.x, ndc.y, vw, vh);
            let inside = px >= f64::from(b.x)
                && px <= f64::from(b.right())
                && py >= f64::from(b.y)
                && py <= f64::from(b.bottom());
            let a = remap_ndc(layout, pl, &ndc);
            atlas_ndc.pixel_mut(x, y).copy_from_slice(&[a.x as f32, a.y as f32]);
            in_cell.set(x, y, inside);
        }
    }
    ProjectedView {
        attributes,
        atlas_ndc,
        in_cell,
    }
}

/// Bilinear sample of `atlas` at each valid texel's atlas NDC. Invalid
/// texels are zero.
pub fn sample_atlas_to_uv(atlas: &Image, atlas_ndc: &Image, valid: &Mask) -> Image {
    let (aw, ah) = (atlas.width(), atlas.height());
    Image::from_fn(atlas_ndc.width(), atlas_ndc.height(), atlas.channels(), |x, y, out| {
        if valid.get(x, y) {
            let n = atlas_ndc.pixel(x, y);
            let (px, py) = ndc_to_pixel(n[0].into(), n[1].into(), aw, ah);
            atlas.sample_bilinear(px, py, out);
        }
    })
}

/// Nearest-pixel lookup of an atlas mask at each valid texel's atlas NDC.
pub fn sample_mask_to_uv(mask: &Mask, atlas_ndc: &Image, valid: &Mask) -> Mask {
    let (aw, ah) = (mask.width(), mask.height());
    Mask::from_fn(atlas_ndc.width(), atlas_ndc.height(), |x, y| {
        if !valid.get(x, y) {
            return false;
        }
        let n = atlas_ndc.pixel(x, y);
        let (px, py) = ndc_to_pixel(n[0].into(), n[1].into(), aw, ah);
        let (ix, iy) = nearest_pixel(px, py, aw, ah);
        mask.get(ix, iy)
    })
}

/// Marks foreground pixels whose depth differs from an 8-neighbour by more
/// than `threshold`, or that touch background (or the image border), then
/// dilates the result by `radius` pixels.
pub fn detect_depth_edges(depth: &Image, alpha: &Mask, threshold: f64, radius: usize) -> Mask {
    let (w, h) = (depth.width(), depth.height());
    let edges = Mask::from_fn(w, h, |x, y| {
        if !alpha.get(x, y) {
            return false;
        }
        let d = f64::from(depth.pixel(x, y)[0]);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    return true;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if !alpha.get(nx, ny) || (f64::from(depth.pixel(nx, ny)[0]) - d).abs() > threshold {
                    return true;
                }
            }
        }
        false
    });
    edges.dilate(radius)
}

/// Combines visibility, view angle and continuity into per-texel weights.
/// `valid` marks texels that project inside the view's crop; `on_edge`
/// marks texels whose atlas sample falls in the dilated edge region.
pub fn compute_fusion_weights(
    sampled_depth: &Image,
    texel_depth: &Image,
    camera_normal: &Image,
    valid: &Mask,
    on_edge: &Mask,
    depth_tolerance: f64,
) -> FusionWeights {
    let (w, h) = (texel_depth.width(), texel_depth.height());
    let visibility = Mask::from_fn(w, h, |x, y| {
        valid.get(x, y)
            && f64::from(sampled_depth.pixel(x, y)[0])
                >= f64::from(texel_depth.pixel(x, y)[0]) - depth_tolerance
    });
    let angle = Image::from_fn(w, h, 1, |x, y, out| {
        let c = f64::from(camera_normal.pixel(x, y)[2]).clamp(0.0, 1.0);
        out[0] = (c * c) as f32;
    });
    let continuity = Mask::from_fn(w, h, |x, y| !on_edge.get(x, y));
    let total = Image::from_fn(w, h, 1, |x, y, out| {
        if visibility.get(x, y) && continuity.get(x, y) {
            out[0] = angle.pixel(x, y)[0];
        }
    });
    FusionWeights {
        visibility,
        angle,
        continuity,
        total,
    }
}

/// Weighted average over views. Texels with zero total weight are invalid.
pub fn fuse_views(samples: &[Image], weights: &[&Image]) -> Result<UvTexture> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no views to fuse".into()))?;
    let (w, h, c) = (first.width(), first.height(), first.channels());
    if samples.len() != weights.len()
        || samples.iter().any(|s| (s.width(), s.height(), s.channels()) != (w, h, c))
        || weights.iter().any(|s| (s.width(), s.height()) != (w, h))
    {
        return Err(Error::ShapeMismatch("fusion inputs differ in shape".into()));
    }
    let mut data = Image::new(w, h, c);
    let mut weight_sum = Image::new(w, h, 1);
    let mut valid = Mask::new(w, h);
    let mut acc = vec![0.0f64; c];
    for y in 0..h {
        for x in 0..w {
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut total = 0.0f64;
            for (s, wt) in samples.iter().zip(weights) {
                let wv = f64::from(wt.pixel(x, y)[0]);
                if wv <= 0.0 {
                    continue;
                }
                total += wv;
                for (a, v) in acc.iter_mut().zip(s.pixel(x, y)) {
                    *a += wv * f64::from(*v);
                }
            }
            if total > 0.0 {
                for (o, a) in data.pixel_mut(x, y).iter_mut().zip(&acc) {
                    *o = (a / total) as f32;
                }
                weight_sum.pixel_mut(x, y)[0] = total as f32;
                valid.set(x, y, true);
            }
        }
    }
    Ok(UvTexture {
        data,
        valid,
        weight_sum,
    })
}

/// Fills covered but invalid texels from their nearest valid texel, by
/// repeated 8-neighbour dilation through covered texels. A texel reached in
/// round `d` copies the first valid neighbour in scan order. Covered regions
/// with no valid texel of their own are then filled the same way, allowing
/// propagation across uncovered texels. Valid texels are never modified.
pub fn fill_holes(texture: &UvTexture, coverage: &Mask) -> UvTexture {
    let (w, h) = (texture.data.width(), texture.data.height());
    let mut data = texture.data.clone();
    let mut known = texture.valid.clone();
    dilate_fill(&mut data, &mut known, |x, y| coverage.get(x, y));
    if (0..h).any(|y| (0..w).any(|x| coverage.get(x, y) && !known.get(x, y))) {
        dilate_fill(&mut data, &mut known, |_, _| true);
    }
    let valid = Mask::from_fn(w, h, |x, y| coverage.get(x, y) && known.get(x, y));
    // propagation through uncovered texels is only a medium; keep them empty
    for y in 0..h {
        for x in 0..w {
            if !valid.get(x, y) && !texture.valid.get(x, y) {
                data.pixel_mut(x, y).iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
    UvTexture {
        data,
        valid,
        weight_sum: texture.weight_sum.clone(),
    }
}

fn dilate_fill(data: &mut Image, known: &mut Mask, passable: impl Fn(usize, usize) -> bool) {
    let (w, h) = (data.width(), data.height());
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    loop {
        frontier.clear();
        for y in 0..h {
            for x in 0..w {
                if known.get(x, y) || !passable(x, y) {
                    continue;
                }
                if let Some(src) = first_known_neighbour(known, x, y) {
                    frontier.push((x, y));
                    let v = data.pixel(src.0, src.1).to_vec();
                    // writes go to unknown texels only, so this round's reads are unaffected
                    data.pixel_mut(x, y).copy_from_slice(&v);
                }
            }
        }
        if frontier.is_empty() {
            return;
        }
        for &(x, y) in &frontier {
            known.set(x, y, true);
        }
    }
}

fn first_known_neighbour(known: &Mask, x: usize, y: usize) -> Option<(usize, usize)> {
    let (w, h) = (known.width() as i64, known.height() as i64);
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if (dx, dy) != (0, 0) && nx >= 0 && ny >= 0 && nx < w && ny < h && known.get(nx as usize, ny as usize) {
                return Some((nx as usize, ny as usize));
            }
        }
    }
    None
}

/// Output of [`bake`].
#[derive(Clone, Debug)]
pub struct Bake {
    pub texture: UvTexture,
    pub coverage: Mask,
    /// Fusion weights per view, in layout order.
    pub weights: Vec<FusionWeights>,
}

/// Back-projects an atlas texture into a UV texture of `mesh`.
///
/// `views` are the cameras the atlas was rendered with, in layout order;
/// `depth` and `alpha` are the composed depth atlas and its coverage.
pub fn bake(
    mesh: &Mesh,
    views: &[ViewSpec],
    layout: &PackingLayout,
    texture: &Image,
    depth: &Image,
    alpha: &Mask,
    cfg: &BakeConfig,
) -> Result<Bake> {
    if views.len() != layout.views.len() {
        return Err(Error::ShapeMismatch("views and layout differ in length".into()));
    }
    let (aw, ah) = (layout.atlas_width as usize, layout.atlas_height as usize);
    for (what, (w, h)) in [
        ("texture", (texture.width(), texture.height())),
        ("depth", (depth.width(), depth.height())),
        ("alpha", (alpha.width(), alpha.height())),
    ] {
        if (w, h) != (aw, ah) {
            return Err(Error::ShapeMismatch(format!(
                "{what} atlas is {w}x{h}, layout is {aw}x{ah}"
            )));
        }
    }

    let uv = rasterize_uv(mesh, cfg.uv_width, cfg.uv_height)?;
    let coverage = uv.coverage();
    let edges = detect_depth_edges(depth, alpha, cfg.edge_threshold, cfg.edge_dilation);

    let mut samples = Vec::with_capacity(views.len());
    let mut weights = Vec::with_capacity(views.len());
    for view in views {
        let pv = project_view(&uv, mesh, view, layout);
        let sampled = sample_atlas_to_uv(texture, &pv.atlas_ndc, &pv.in_cell);
        let sampled_depth = sample_atlas_to_uv(depth, &pv.atlas_ndc, &pv.in_cell);
        let on_edge = sample_mask_to_uv(&edges, &pv.atlas_ndc, &pv.in_cell);
        weights.push(compute_fusion_weights(
            &sampled_depth,
            &pv.attributes.depth,
            &pv.attributes.camera_normal,
            &pv.in_cell,
            &on_edge,
            cfg.depth_tolerance,
        ));
        samples.push(sampled);
    }
    let totals: Vec<&Image> = weights.iter().map(|w| &w.total).collect();
    let fused = fuse_views(&samples, &totals)?;
    let texture = if cfg.fill_holes {
        fill_holes(&fused, &coverage)
    } else {
        fused
    };
    Ok(Bake {
        texture,
        coverage,
        weights,
    })
}
