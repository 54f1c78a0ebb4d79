//! Spreads a single-view guidance image to the other five views.
//!
//! Every foreground pixel of a target view looks up the source-view pixel
//! with the nearest 3D position. Its color is copied when the two surface
//! points are close and their normals agree; otherwise the pixel stays empty.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::kdtree::KdTree;
use crate::mesh::Vec3;
use crate::pack::{compose_views, PackingLayout};
use crate::raster::{ViewGBuffer, ViewId};

pub const DEFAULT_MAX_DISTANCE: f64 = 0.02;
pub const DEFAULT_MAX_ANGLE_DEG: f64 = 45.0;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GuidanceConfig {
    /// Copy only if the position distance is strictly below this.
    pub max_distance: f64,
    /// Copy only if the angle between normals is strictly below this.
    pub max_angle_deg: f64,
    /// Keep per-pixel match records.
    pub record_matches: bool,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            max_distance: DEFAULT_MAX_DISTANCE,
            max_angle_deg: DEFAULT_MAX_ANGLE_DEG,
            record_matches: false,
        }
    }
}

/// One copied pixel and the source pixel it came from.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GuidanceMatch {
    pub view: ViewId,
    pub x: usize,
    pub y: usize,
    pub source_x: usize,
    pub source_y: usize,
    pub distance: f64,
    pub angle_deg: f64,
}

/// Guidance colors in view space, one image and fill mask per view.
#[derive(Clone, Debug)]
pub struct GuidanceField {
    pub source: ViewId,
    pub views: Vec<(Image, Mask)>,
    pub matches: Vec<GuidanceMatch>,
}

impl GuidanceField {
    pub fn filled(&self, view: ViewId) -> usize {
        self.views[view.index()].1.count()
    }

    /// Resamples the spread guidance onto the atlas.
    pub fn compose(&self, layout: &PackingLayout) -> (Image, Mask) {
        let src: Vec<(&Image, &Mask)> = self.views.iter().map(|(i, m)| (i, m)).collect();
        compose_views(layout, &src)
    }
}

/// Frontal, left or top, whichever has the most foreground pixels; ties go
/// to the earlier of the three.
pub fn select_guidance_view(gbuffers: &[ViewGBuffer]) -> ViewId {
    let mut best = (ViewId::Frontal, 0usize);
    for id in [ViewId::Frontal, ViewId::Left, ViewId::Top] {
        let n = gbuffers[id.index()].alpha.count();
        if n > best.1 {
            best = (id, n);
        }
    }
    best.0
}

pub(crate) fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    let d = a.dot(b) / (a.norm() * b.norm());
    d.clamp(-1.0, 1.0).acos().to_degrees()
}

fn read3(img: &Image, x: usize, y: usize) -> Vec3 {
    let p = img.pixel(x, y);
    Vec3::new(p[0].into(), p[1].into(), p[2].into())
}

/// Spreads `image`, rendered from the `source` view, over all six views.
pub fn spread_guidance(
    source: ViewId,
    image: &Image,
    gbuffers: &[ViewGBuffer],
    cfg: &GuidanceConfig,
) -> Result<GuidanceField> {
    let src = &gbuffers[source.index()];
    let (w, h) = (src.width(), src.height());
    if image.width() != w || image.height() != h {
        return Err(Error::ShapeMismatch(format!(
            "guidance image is {}x{}, source view is {w}x{h}",
            image.width(),
            image.height()
        )));
    }

    let mut pixels = Vec::new();
    let mut points = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if src.alpha.get(x, y) {
                pixels.push((x, y));
                points.push(read3(&src.position, x, y));
            }
        }
    }
    if pixels.is_empty() {
        return Err(Error::EmptyGuidanceSource);
    }
    let tree = KdTree::new(points);
    let channels = image.channels();

    let mut views = Vec::with_capacity(gbuffers.len());
    let mut matches = Vec::new();
    for g in gbuffers {
        let id = g.view.id;
        if id == source {
            let mut copy = Image::new(w, h, channels);
            for y in 0..h {
                for x in 0..w {
                    if src.alpha.get(x, y) {
                        copy.pixel_mut(x, y).copy_from_slice(image.pixel(x, y));
                    }
                }
            }
            views.push((copy, src.alpha.clone()));
            continue;
        }

        let (gw, gh) = (g.width(), g.height());
        let rows: Vec<Vec<(usize, GuidanceMatch)>> = (0..gh)
            .into_par_iter()
            .map(|y| {
                let mut hits = Vec::new();
                for x in 0..gw {
                    if !g.alpha.get(x, y) {
                        continue;
                    }
                    let p = read3(&g.position, x, y);
                    let (k, distance) = tree.nearest(&p).expect("tree is non-empty");
                    if distance >= cfg.max_distance {
                        continue;
                    }
                    let (sx, sy) = pixels[k];
                    let angle = angle_deg(&read3(&g.normal, x, y), &read3(&src.normal, sx, sy));
                    if angle >= cfg.max_angle_deg {
                        continue;
                    }
                    hits.push((
                        x,
                        GuidanceMatch {
                            view: id,
                            x,
                            y,
                            source_x: sx,
                            source_y: sy,
                            distance,
                            angle_deg: angle,
                        },
                    ));
                }
                hits
            })
            .collect();

        let mut out = Image::new(gw, gh, channels);
        let mut mask = Mask::new(gw, gh);
        for (_, m) in rows.into_iter().flatten() {
            out.pixel_mut(m.x, m.y).copy_from_slice(image.pixel(m.source_x, m.source_y));
            mask.set(m.x, m.y, true);
            if cfg.record_matches {
                matches.push(m);
            }
        }
        views.push((out, mask));
    }

    Ok(GuidanceField {
        source,
        views,
        matches,
    })
}
