//! Packing six view renders onto one atlas.
//!
//! Each view is cropped to the bounding box of its alpha map, scaled by a
//! global ratio times a per-pair ratio, padded to whole patches and placed by
//! MaxRects. Only the top and bottom views may be turned by 90°.

mod compose;
mod search;

pub use compose::{compose_atlas, compose_views, remap_ndc, remap_vertex_ndc, tile_layout, tile_views, Atlas};
pub use search::{
    cells_for, enlarge_pairs, pack_views, probe, probe_upward, search_global_ratio, tiling_scale, GlobalSearch,
    PackStats, ScaleFamily,
};

use serde::{Deserialize, Serialize};

use crate::binpack::Rect;
use crate::error::{Error, Result};
use crate::raster::{ViewGBuffer, ViewId};

pub const DEFAULT_PATCH: u32 = 16;
pub const DEFAULT_PAIR_CAP: f64 = 2.0;
pub const GLOBAL_PROBES: usize = 8;
pub const PAIR_PROBES: usize = 5;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutMode {
    Pack,
    Tile,
}

/// Atlas geometry and search limits.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PackConfig {
    pub atlas_width: u32,
    pub atlas_height: u32,
    pub patch: u32,
    pub pair_cap: f64,
}

impl PackConfig {
    /// Checks that the atlas splits into whole patches and is 3:2 (landscape)
    /// to within one patch.
    pub fn new(atlas_width: u32, atlas_height: u32, patch: u32) -> Result<Self> {
        if patch == 0 {
            return Err(Error::InvalidArgument("patch size must be positive".into()));
        }
        if atlas_width == 0 || atlas_height == 0 {
            return Err(Error::InvalidArgument("atlas must be non-empty".into()));
        }
        if atlas_width % patch != 0 || atlas_height % patch != 0 {
            return Err(Error::InvalidArgument(format!(
                "atlas {atlas_width}x{atlas_height} is not divisible by patch size {patch}"
            )));
        }
        if !is_three_by_two(atlas_width, atlas_height, patch) {
            return Err(Error::InvalidArgument(format!(
                "atlas width:height must be 3:2, got {atlas_width}x{atlas_height}"
            )));
        }
        Ok(Self {
            atlas_width,
            atlas_height,
            patch,
            pair_cap: DEFAULT_PAIR_CAP,
        })
    }

    pub fn bin_cells(&self) -> (u32, u32) {
        (
            self.atlas_width.div_ceil(self.patch),
            self.atlas_height.div_ceil(self.patch),
        )
    }
}

impl Default for PackConfig {
    fn default() -> Self {
        Self::new(1248, 832, DEFAULT_PATCH).expect("default atlas is valid")
    }
}

fn is_three_by_two(w: u32, h: u32, patch: u32) -> bool {
    // |w - 1.5 h| <= patch
    (2 * i64::from(w) - 3 * i64::from(h)).abs() <= 2 * i64::from(patch)
}

/// Where one view lands on the atlas.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ViewPlacement {
    pub view: ViewId,
    /// Crop of the view render, in view pixels.
    pub bbox: Rect,
    /// Total enlargement (global ratio × pair ratio).
    pub scale: f64,
    pub rotated: bool,
    /// Padded cell in atlas pixels; its origin is the placement offset.
    pub cell: Rect,
}

impl ViewPlacement {
    /// Resampled crop size before rotation, clamped to the cell.
    pub fn content_size(&self) -> (u32, u32) {
        let (max_w, max_h) = if self.rotated {
            (self.cell.h, self.cell.w)
        } else {
            (self.cell.w, self.cell.h)
        };
        let size = |len: u32, max: u32| ((f64::from(len) * self.scale).round() as u32).clamp(1, max.max(1));
        (size(self.bbox.w, max_w), size(self.bbox.h, max_h))
    }

    /// Atlas-pixel rectangle holding the resampled (and rotated) crop,
    /// centered in the cell.
    pub fn content_rect(&self) -> Rect {
        let (w, h) = self.content_size();
        let (aw, ah) = if self.rotated { (h, w) } else { (w, h) };
        Rect::new(
            self.cell.x + (self.cell.w - aw) / 2,
            self.cell.y + (self.cell.h - ah) / 2,
            aw,
            ah,
        )
    }

    /// Continuous view-pixel coordinates to continuous atlas-pixel coordinates.
    pub fn view_to_atlas(&self, px: f64, py: f64) -> (f64, f64) {
        let c = self.content_rect();
        let (w, h) = self.content_size();
        let (bx, by) = (f64::from(self.bbox.x), f64::from(self.bbox.y));
        let (bw, bh) = (f64::from(self.bbox.w), f64::from(self.bbox.h));
        let du = (px - bx) * f64::from(w) / bw;
        let dv = (py - by) * f64::from(h) / bh;
        if self.rotated {
            (f64::from(c.x) + f64::from(h) - dv, f64::from(c.y) + du)
        } else {
            (f64::from(c.x) + du, f64::from(c.y) + dv)
        }
    }

    /// Inverse of [`Self::view_to_atlas`].
    pub fn atlas_to_view(&self, ax: f64, ay: f64) -> (f64, f64) {
        let c = self.content_rect();
        let (w, h) = self.content_size();
        let (bx, by) = (f64::from(self.bbox.x), f64::from(self.bbox.y));
        let (bw, bh) = (f64::from(self.bbox.w), f64::from(self.bbox.h));
        let (dx, dy) = (ax - f64::from(c.x), ay - f64::from(c.y));
        if self.rotated {
            (bx + dy * bw / f64::from(w), by + (f64::from(h) - dx) * bh / f64::from(h))
        } else {
            (bx + dx * bw / f64::from(w), by + dy * bh / f64::from(h))
        }
    }
}

/// Arrangement of all six views on the atlas.
#[derive(Clone, Debug, PartialEq)]
pub struct PackingLayout {
    pub mode: LayoutMode,
    pub atlas_width: u32,
    pub atlas_height: u32,
    pub patch: u32,
    /// Resolution of the view renders the boxes refer to.
    pub view_width: u32,
    pub view_height: u32,
    /// One entry per view, in [`ViewId::ALL`] order.
    pub views: Vec<ViewPlacement>,
}

impl PackingLayout {
    pub fn placement(&self, id: ViewId) -> &ViewPlacement {
        &self.views[id.index()]
    }

    /// Machine-checks every layout invariant. Packed layouts must also sit on
    /// the patch grid; tiled layouts use plain `⌊W/3⌋ × ⌊H/2⌋` slots.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(format!("invalid layout: {msg}")));
        if self.views.len() != ViewId::ALL.len() {
            return fail(format!("expected 6 views, got {}", self.views.len()));
        }
        if self.patch == 0 || !is_three_by_two(self.atlas_width, self.atlas_height, self.patch) {
            return fail(format!(
                "atlas {}x{} is not 3:2",
                self.atlas_width, self.atlas_height
            ));
        }
        let atlas = Rect::new(0, 0, self.atlas_width, self.atlas_height);
        for (i, v) in self.views.iter().enumerate() {
            if v.view != ViewId::from_index(i) {
                return fail(format!("entry {i} is view {}", v.view));
            }
            if v.cell.w == 0 || v.cell.h == 0 || !atlas.contains(&v.cell) {
                return fail(format!("cell of {} is outside the atlas", v.view));
            }
            if v.bbox.w == 0
                || v.bbox.h == 0
                || v.bbox.right() > self.view_width
                || v.bbox.bottom() > self.view_height
            {
                return fail(format!("bbox of {} is outside the view", v.view));
            }
            if self.mode == LayoutMode::Pack
                && [v.cell.x, v.cell.y, v.cell.w, v.cell.h].iter().any(|d| d % self.patch != 0)
            {
                return fail(format!("cell of {} is not on the patch grid", v.view));
            }
            if v.rotated && !v.view.rotatable() {
                return fail(format!("{} must not be rotated", v.view));
            }
            if !(v.scale.is_finite() && v.scale > 0.0) {
                return fail(format!("scale of {} is not positive", v.view));
            }
            let c = v.content_rect();
            if !v.cell.contains(&c) {
                return fail(format!("content of {} overflows its cell", v.view));
            }
            for o in &self.views[..i] {
                if o.cell.intersects(&v.cell) {
                    return fail(format!("cells of {} and {} overlap", o.view, v.view));
                }
            }
        }
        for (a, b) in ViewId::PAIRS {
            let (pa, pb) = (self.placement(a), self.placement(b));
            if pa.scale != pb.scale {
                return fail(format!("{a} and {b} have different scales"));
            }
            if (pa.bbox.w, pa.bbox.h) != (pb.bbox.w, pb.bbox.h) {
                return fail(format!("{a} and {b} have different box sizes"));
            }
        }
        if self.mode == LayoutMode::Pack {
            let global = self.views.iter().map(|v| v.scale).fold(f64::INFINITY, f64::min);
            if self.views.iter().any(|v| v.scale > DEFAULT_PAIR_CAP * global * (1.0 + 1e-12)) {
                return fail("a pair exceeds twice the global scale".into());
            }
        }
        Ok(())
    }

    /// Fraction of the atlas covered by cells.
    pub fn cell_coverage(&self) -> f64 {
        let cells: u64 = self.views.iter().map(|v| v.cell.area()).sum();
        cells as f64 / (f64::from(self.atlas_width) * f64::from(self.atlas_height))
    }
}

/// Tight bounding box of each view's alpha map. An empty view gets a 1×1 box
/// at the image center. Opposing views are mirror images under orthographic
/// projection, so each pair is grown to the larger of its two sizes (keeping
/// the box centered and inside the image).
pub fn compute_view_bboxes(gbuffers: &[ViewGBuffer]) -> [Rect; 6] {
    assert_eq!(gbuffers.len(), 6, "expected six views");
    let (w, h) = (gbuffers[0].width(), gbuffers[0].height());
    assert!(
        gbuffers.iter().all(|g| g.width() == w && g.height() == h),
        "views must share one resolution"
    );
    let mut boxes = [Rect::new(0, 0, 1, 1); 6];
    for (b, g) in boxes.iter_mut().zip(gbuffers) {
        *b = alpha_bbox(g).unwrap_or(Rect::new(w as u32 / 2, h as u32 / 2, 1, 1));
    }
    for (a, b) in ViewId::PAIRS {
        let (ra, rb) = (boxes[a.index()], boxes[b.index()]);
        let (pw, ph) = (ra.w.max(rb.w), ra.h.max(rb.h));
        boxes[a.index()] = grow_to(ra, pw, ph, w as u32, h as u32);
        boxes[b.index()] = grow_to(rb, pw, ph, w as u32, h as u32);
    }
    boxes
}

fn alpha_bbox(g: &ViewGBuffer) -> Option<Rect> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..g.height() {
        for x in 0..g.width() {
            if g.alpha.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    (x0 != usize::MAX).then(|| Rect::new(x0 as u32, y0 as u32, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32))
}

fn grow_to(r: Rect, w: u32, h: u32, img_w: u32, img_h: u32) -> Rect {
    let x = (r.x.saturating_sub((w - r.w) / 2)).min(img_w - w);
    let y = (r.y.saturating_sub((h - r.h) / 2)).min(img_h - h);
    Rect::new(x, y, w, h)
}
