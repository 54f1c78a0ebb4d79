use serde::{Deserialize, Serialize};

use super::{compute_view_bboxes, LayoutMode, PackConfig, PackingLayout, ViewPlacement, GLOBAL_PROBES, PAIR_PROBES};
use crate::binpack::{pack_oriented, Placement, Rect, RectSpec};
use crate::raster::{ViewGBuffer, ViewId};

/// Rotation states tried per probe, as (top, bottom).
const ROTATIONS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

/// Patch cells needed for `len` pixels enlarged by `scale`.
pub fn cells_for(len: u32, scale: f64, patch: u32) -> u32 {
    // the tolerance keeps exact multiples (e.g. at the tiling scale) from
    // spilling into an extra cell through rounding
    let cells = (f64::from(len) * scale / f64::from(patch) - 1e-9).ceil();
    (cells.max(1.0)) as u32
}

/// One feasibility test: packs the six boxes, box `i` enlarged by
/// `scales[i]`, trying every rotation state of the top and bottom views.
pub fn probe(bboxes: &[Rect; 6], scales: &[f64; 6], cfg: &PackConfig) -> Option<Vec<Placement>> {
    pack_cells(&cell_dims(bboxes, scales, cfg), cfg)
}

fn cell_dims(bboxes: &[Rect; 6], scales: &[f64; 6], cfg: &PackConfig) -> [(u32, u32); 6] {
    std::array::from_fn(|i| {
        (
            cells_for(bboxes[i].w, scales[i], cfg.patch),
            cells_for(bboxes[i].h, scales[i], cfg.patch),
        )
    })
}

fn pack_cells(dims: &[(u32, u32); 6], cfg: &PackConfig) -> Option<Vec<Placement>> {
    let rects: Vec<RectSpec> = ViewId::ALL
        .iter()
        .map(|&id| {
            let (w, h) = dims[id.index()];
            RectSpec::new(id.index(), w, h).rotatable(id.rotatable())
        })
        .collect();
    let (bw, bh) = cfg.bin_cells();
    ROTATIONS.iter().find_map(|&(top, bottom)| {
        let rotated: Vec<bool> = ViewId::ALL
            .iter()
            .map(|id| match id {
                ViewId::Top => top,
                ViewId::Bottom => bottom,
                _ => false,
            })
            .collect();
        pack_oriented(&rects, &rotated, bw, bh)
    })
}

/// A one-parameter family of box scales: views flagged in `moving` get
/// `base[i] * t`, the others keep `base[i]`.
#[derive(Copy, Clone, Debug)]
pub struct ScaleFamily {
    pub base: [f64; 6],
    pub moving: [bool; 6],
}

impl ScaleFamily {
    /// Every view at scale `t`.
    pub fn uniform() -> Self {
        Self {
            base: [1.0; 6],
            moving: [true; 6],
        }
    }

    /// Pair `k` at `global * t`, every other view at `global * ratios[pair]`.
    pub fn pair(global: f64, ratios: &[f64; 3], k: usize) -> Self {
        Self {
            base: ViewId::ALL.map(|id| global * if id.pair() == k { 1.0 } else { ratios[id.pair()] }),
            moving: ViewId::ALL.map(|id| id.pair() == k),
        }
    }

    pub fn at(&self, t: f64) -> [f64; 6] {
        std::array::from_fn(|i| if self.moving[i] { self.base[i] * t } else { self.base[i] })
    }
}

/// The search's feasibility test: the boxes at `family.at(t)` pack if some
/// cell grid reached for a parameter in `[t, limit]` packs.
///
/// Cell counts only grow with `t`, and a packing of larger cells still holds
/// the smaller ones at the same offsets, so the returned placements are valid
/// at `t` and feasibility is monotone: if `t` passes, so does every smaller
/// parameter. The grids are visited in increasing order and the walk stops
/// once the total cell area exceeds the bin.
pub fn probe_upward(
    bboxes: &[Rect; 6],
    family: &ScaleFamily,
    t: f64,
    limit: f64,
    cfg: &PackConfig,
) -> Option<Vec<Placement>> {
    let p = f64::from(cfg.patch);
    let mut params = vec![t];
    if limit > t {
        for i in (0..6).filter(|&i| family.moving[i] && family.base[i] > 0.0) {
            for len in [bboxes[i].w, bboxes[i].h] {
                let step = p / (f64::from(len) * family.base[i]);
                let first = cells_for(len, family.base[i] * t, cfg.patch);
                let last = cells_for(len, family.base[i] * limit, cfg.patch);
                params.extend((first..=last).map(|m| f64::from(m) * step).filter(|&u| u > t && u < limit));
            }
        }
        params.push(limit);
    }
    params.sort_by(f64::total_cmp);

    let (bw, bh) = cfg.bin_cells();
    let mut last: Option<[(u32, u32); 6]> = None;
    for u in params {
        let dims = cell_dims(bboxes, &family.at(u), cfg);
        if last == Some(dims) {
            continue;
        }
        last = Some(dims);
        let area: u64 = dims.iter().map(|&(w, h)| u64::from(w) * u64::from(h)).sum();
        if area > u64::from(bw) * u64::from(bh) {
            break;
        }
        if let Some(found) = pack_cells(&dims, cfg) {
            return Some(found);
        }
    }
    None
}

/// Largest scale at which every box fits one slot of a 3×2 grid of
/// whole-patch slots.
pub fn tiling_scale(bboxes: &[Rect; 6], cfg: &PackConfig) -> f64 {
    let (tw, th) = tile_cells(cfg);
    let p = f64::from(cfg.patch);
    bboxes
        .iter()
        .map(|b| (f64::from(tw) * p / f64::from(b.w)).min(f64::from(th) * p / f64::from(b.h)))
        .fold(f64::INFINITY, f64::min)
}

fn tile_cells(cfg: &PackConfig) -> (u32, u32) {
    let (bw, bh) = cfg.bin_cells();
    (bw / 3, bh / 2)
}

/// Area- and longest-side-based bound on the global ratio.
fn upper_bound(bboxes: &[Rect; 6], cfg: &PackConfig) -> f64 {
    let area: f64 = bboxes.iter().map(|b| b.area() as f64).sum();
    let longest = bboxes.iter().map(|b| b.w.max(b.h)).max().unwrap_or(1);
    let atlas_area = f64::from(cfg.atlas_width) * f64::from(cfg.atlas_height);
    let atlas_long = cfg.atlas_width.max(cfg.atlas_height);
    (atlas_area / area).sqrt().min(f64::from(atlas_long) / f64::from(longest))
}

/// Result of the global-ratio search.
#[derive(Clone, Debug)]
pub struct GlobalSearch {
    pub scale: f64,
    pub lower: f64,
    pub upper: f64,
    /// Cell placements at `scale`, indexed like [`ViewId::ALL`].
    pub placements: Vec<Placement>,
    pub probes: usize,
}

/// Binary search for the largest global ratio at which all six boxes pack.
///
/// The search starts from the tiling scale, whose 3×2 grid arrangement is
/// feasible by construction, so the result never falls below it. The upper
/// bound is probed first; the remaining probes bisect.
pub fn search_global_ratio(bboxes: &[Rect; 6], cfg: &PackConfig) -> GlobalSearch {
    let lower = tiling_scale(bboxes, cfg);
    let upper = upper_bound(bboxes, cfg);
    let (tw, th) = tile_cells(cfg);
    let grid: Vec<Placement> = (0..6)
        .map(|i| Placement {
            id: i,
            x: (i as u32 % 3) * tw,
            y: (i as u32 / 3) * th,
            rotated: false,
        })
        .collect();
    let mut out = GlobalSearch {
        scale: lower,
        lower,
        upper,
        placements: grid,
        probes: 0,
    };
    if upper <= lower {
        return out;
    }

    let family = ScaleFamily::uniform();
    out.probes += 1;
    if let Some(p) = probe_upward(bboxes, &family, upper, upper, cfg) {
        out.scale = upper;
        out.placements = p;
        return out;
    }
    let (mut lo, mut hi) = (lower, upper);
    while out.probes < GLOBAL_PROBES {
        let mid = 0.5 * (lo + hi);
        out.probes += 1;
        match probe_upward(bboxes, &family, mid, upper, cfg) {
            Some(p) => {
                lo = mid;
                out.scale = mid;
                out.placements = p;
            }
            None => hi = mid,
        }
    }
    out
}

/// Outcome of the per-pair enlargement.
#[derive(Clone, Debug)]
pub struct PairSearch {
    /// Extra ratio per opposing pair, indexed by [`ViewId::pair`].
    pub ratios: [f64; 3],
    pub placements: Vec<Placement>,
    pub probes: [usize; 3],
}

/// Greedily enlarges opposing pairs, largest box area first. Each pair's
/// extra ratio is searched in `(1, cap]`, probing the cap first, with pairs
/// already processed held at their final ratio and the rest at 1.
pub fn enlarge_pairs(bboxes: &[Rect; 6], base: &GlobalSearch, cfg: &PackConfig) -> PairSearch {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let area = |k: usize| bboxes[ViewId::PAIRS[k].0.index()].area();
        area(b).cmp(&area(a)).then(a.cmp(&b))
    });

    let mut out = PairSearch {
        ratios: [1.0; 3],
        placements: base.placements.clone(),
        probes: [0; 3],
    };
    for k in order {
        let family = ScaleFamily::pair(base.scale, &out.ratios, k);
        let mut trial = out.ratios;
        trial[k] = cfg.pair_cap;
        out.probes[k] += 1;
        if let Some(p) = probe_upward(bboxes, &family, cfg.pair_cap, cfg.pair_cap, cfg) {
            out.ratios = trial;
            out.placements = p;
            continue;
        }
        let (mut lo, mut hi) = (1.0, cfg.pair_cap);
        while out.probes[k] < PAIR_PROBES {
            let mid = 0.5 * (lo + hi);
            trial[k] = mid;
            out.probes[k] += 1;
            match probe_upward(bboxes, &family, mid, cfg.pair_cap, cfg) {
                Some(p) => {
                    lo = mid;
                    out.ratios = trial;
                    out.placements = p;
                }
                None => hi = mid,
            }
        }
    }
    out
}

/// Search statistics kept alongside a packed layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackStats {
    pub global_scale: f64,
    pub tiling_scale: f64,
    pub upper_bound: f64,
    pub pair_ratios: [f64; 3],
    pub global_probes: usize,
    pub pair_probes: [usize; 3],
}

/// Computes boxes, searches the global and pair ratios, and returns the final
/// layout in atlas pixels.
pub fn pack_views(gbuffers: &[ViewGBuffer], cfg: &PackConfig) -> (PackingLayout, PackStats) {
    let bboxes = compute_view_bboxes(gbuffers);
    let global = search_global_ratio(&bboxes, cfg);
    let pairs = enlarge_pairs(&bboxes, &global, cfg);

    let p = cfg.patch;
    let views = ViewId::ALL
        .iter()
        .map(|&id| {
            let i = id.index();
            let scale = global.scale * pairs.ratios[id.pair()];
            let pl = pairs.placements[i];
            let (cw, ch) = (cells_for(bboxes[i].w, scale, p), cells_for(bboxes[i].h, scale, p));
            let (cw, ch) = if pl.rotated { (ch, cw) } else { (cw, ch) };
            ViewPlacement {
                view: id,
                bbox: bboxes[i],
                scale,
                rotated: pl.rotated,
                cell: Rect::new(pl.x * p, pl.y * p, cw * p, ch * p),
            }
        })
        .collect();
    let layout = PackingLayout {
        mode: LayoutMode::Pack,
        atlas_width: cfg.atlas_width,
        atlas_height: cfg.atlas_height,
        patch: p,
        view_width: gbuffers[0].width() as u32,
        view_height: gbuffers[0].height() as u32,
        views,
    };
    let stats = PackStats {
        global_scale: global.scale,
        tiling_scale: global.lower,
        upper_bound: global.upper,
        pair_ratios: pairs.ratios,
        global_probes: global.probes,
        pair_probes: pairs.probes,
    };
    (layout, stats)
}
