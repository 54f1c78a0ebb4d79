use rayon::prelude::*;

use super::{LayoutMode, PackingLayout, ViewPlacement};
use crate::binpack::Rect;
use crate::image::{Image, Mask};
use crate::mesh::Vec3;
use crate::raster::{ndc_to_pixel, pixel_to_ndc, ViewGBuffer, ViewId};

/// Atlas-resolution geometry maps composed from six views.
#[derive(Clone, Debug)]
pub struct Atlas {
    pub layout: PackingLayout,
    pub position: Image,
    pub normal: Image,
    pub depth: Image,
    pub alpha: Mask,
    pub guidance: Option<(Image, Mask)>,
}

/// Resamples per-view images into the atlas. Alpha is sampled nearest; the
/// image is sampled bilinearly using only taps inside the view's mask, so
/// background never bleeds into the silhouette. Pixels outside all contents
/// stay zero.
pub fn compose_views(layout: &PackingLayout, sources: &[(&Image, &Mask)]) -> (Image, Mask) {
    assert_eq!(sources.len(), layout.views.len());
    let (aw, ah) = (layout.atlas_width as usize, layout.atlas_height as usize);
    let channels = sources[0].0.channels();
    let mut image = Image::new(aw, ah, channels);
    let mut mask = Mask::new(aw, ah);

    // each atlas row is touched by at most a few views; compute per row in parallel
    let rows: Vec<(Vec<f32>, Vec<bool>)> = (0..ah)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![0.0f32; aw * channels];
            let mut row_mask = vec![false; aw];
            for (pl, (img, m)) in layout.views.iter().zip(sources) {
                let c = pl.content_rect();
                if (y as u32) < c.y || (y as u32) >= c.bottom() {
                    continue;
                }
                for x in c.x as usize..c.right() as usize {
                    let (vx, vy) = pl.atlas_to_view(x as f64 + 0.5, y as f64 + 0.5);
                    if !m.sample_nearest(vx, vy) {
                        continue;
                    }
                    let out = &mut row[x * channels..(x + 1) * channels];
                    if img.sample_bilinear_masked(m, vx, vy, out) {
                        row_mask[x] = true;
                    }
                }
            }
            (row, row_mask)
        })
        .collect();

    for (y, (row, row_mask)) in rows.into_iter().enumerate() {
        image.data_mut()[y * aw * channels..(y + 1) * aw * channels].copy_from_slice(&row);
        for (x, v) in row_mask.into_iter().enumerate() {
            if v {
                mask.set(x, y, true);
            }
        }
    }
    (image, mask)
}

/// Composes position, normal and depth maps (and optional per-view guidance
/// images with their fill masks) onto the atlas.
pub fn compose_atlas(
    gbuffers: &[ViewGBuffer],
    guidance: Option<&[(Image, Mask)]>,
    layout: &PackingLayout,
) -> Atlas {
    let with = |f: fn(&ViewGBuffer) -> &Image| -> Vec<(&Image, &Mask)> {
        gbuffers.iter().map(|g| (f(g), &g.alpha)).collect()
    };
    let (position, alpha) = compose_views(layout, &with(|g| &g.position));
    let (normal, _) = compose_views(layout, &with(|g| &g.normal));
    let (depth, _) = compose_views(layout, &with(|g| &g.depth));
    let guidance = guidance.map(|views| {
        let src: Vec<(&Image, &Mask)> = views.iter().map(|(i, m)| (i, m)).collect();
        compose_views(layout, &src)
    });
    Atlas {
        layout: layout.clone(),
        position,
        normal,
        depth,
        alpha,
        guidance,
    }
}

/// Maps a view NDC point to NDC over the full atlas. Depth passes through.
pub fn remap_ndc(layout: &PackingLayout, pl: &ViewPlacement, ndc: &Vec3) -> Vec3 {
    let (vw, vh) = (layout.view_width as usize, layout.view_height as usize);
    let (px, py) = ndc_to_pixel(ndc.x, ndc.y, vw, vh);
    let (ax, ay) = pl.view_to_atlas(px, py);
    let (x, y) = pixel_to_ndc(ax, ay, layout.atlas_width as usize, layout.atlas_height as usize);
    Vec3::new(x, y, ndc.z)
}

/// Remaps every view's per-vertex NDC into atlas NDC.
pub fn remap_vertex_ndc(gbuffers: &[ViewGBuffer], layout: &PackingLayout) -> Vec<Vec<Vec3>> {
    gbuffers
        .iter()
        .zip(&layout.views)
        .map(|(g, pl)| g.vertex_ndc.iter().map(|n| remap_ndc(layout, pl, n)).collect())
        .collect()
}

/// Regular-tiling layout: a 3×2 grid of `⌊W/3⌋ × ⌊H/2⌋` slots, each holding
/// one full view render scaled to fit.
pub fn tile_layout(view_width: u32, view_height: u32, atlas_width: u32, atlas_height: u32, patch: u32) -> PackingLayout {
    let (sw, sh) = (atlas_width / 3, atlas_height / 2);
    let scale = (f64::from(sw) / f64::from(view_width)).min(f64::from(sh) / f64::from(view_height));
    let views = ViewId::ALL
        .iter()
        .map(|&id| {
            let i = id.index() as u32;
            ViewPlacement {
                view: id,
                bbox: Rect::new(0, 0, view_width, view_height),
                scale,
                rotated: false,
                cell: Rect::new((i % 3) * sw, (i / 3) * sh, sw, sh),
            }
        })
        .collect();
    PackingLayout {
        mode: LayoutMode::Tile,
        atlas_width,
        atlas_height,
        patch,
        view_width,
        view_height,
        views,
    }
}

/// Baseline atlas with one view per slot.
pub fn tile_views(gbuffers: &[ViewGBuffer], atlas_width: u32, atlas_height: u32, patch: u32) -> Atlas {
    let layout = tile_layout(
        gbuffers[0].width() as u32,
        gbuffers[0].height() as u32,
        atlas_width,
        atlas_height,
        patch,
    );
    compose_atlas(gbuffers, None, &layout)
}
