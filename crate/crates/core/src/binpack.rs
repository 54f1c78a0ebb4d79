//! MaxRects single-bin rectangle packing on an integer cell grid.
//!
//! The free space is kept as the set of maximal free rectangles. Each
//! insertion picks a position by Best-Short-Side-Fit (ties: Best-Long-Side-Fit,
//! then lowest `(y, x)`), splits every intersecting free rectangle into up to
//! four maximal remainders, and drops free rectangles contained in others.

use serde::Serialize;

/// Axis-aligned rectangle in cells, `[x, x+w) × [y, y+h)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    /// Interiors overlap.
    pub fn intersects(&self, o: &Rect) -> bool {
        self.x < o.right() && o.x < self.right() && self.y < o.bottom() && o.y < self.bottom()
    }

    pub fn contains(&self, o: &Rect) -> bool {
        self.x <= o.x && self.y <= o.y && self.right() >= o.right() && self.bottom() >= o.bottom()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct RectSpec {
    pub id: usize,
    pub width: u32,
    pub height: u32,
    pub rotatable: bool,
}

impl RectSpec {
    pub fn new(id: usize, width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "rectangles must be at least 1x1");
        Self {
            id,
            width,
            height,
            rotatable: false,
        }
    }

    pub fn rotatable(mut self, rotatable: bool) -> Self {
        self.rotatable = rotatable;
        self
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub id: usize,
    pub x: u32,
    pub y: u32,
    pub rotated: bool,
}

/// Score of a candidate position; smaller is better.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Score {
    short_side: u32,
    long_side: u32,
    y: u32,
    x: u32,
}

/// One bin and its maximal free rectangles.
#[derive(Clone, Debug)]
pub struct MaxRectsBin {
    width: u32,
    height: u32,
    free: Vec<Rect>,
}

impl MaxRectsBin {
    pub fn new(width: u32, height: u32) -> Self {
        let free = if width > 0 && height > 0 {
            vec![Rect::new(0, 0, width, height)]
        } else {
            Vec::new()
        };
        Self {
            width,
            height,
            free,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn free_rects(&self) -> &[Rect] {
        &self.free
    }

    /// Free-rectangle set as JSON, for debugging and test introspection.
    pub fn free_rects_json(&self) -> String {
        serde_json::to_string(&self.free).expect("rects serialize")
    }

    /// Best position for a `w × h` rectangle, without inserting it.
    pub fn find_position(&self, w: u32, h: u32) -> Option<(u32, u32)> {
        self.free
            .iter()
            .filter(|f| f.w >= w && f.h >= h)
            .map(|f| {
                let (dw, dh) = (f.w - w, f.h - h);
                Score {
                    short_side: dw.min(dh),
                    long_side: dw.max(dh),
                    y: f.y,
                    x: f.x,
                }
            })
            .min()
            .map(|s| (s.x, s.y))
    }

    /// Inserts a `w × h` rectangle at the best position, if any.
    pub fn insert(&mut self, w: u32, h: u32) -> Option<Rect> {
        let (x, y) = self.find_position(w, h)?;
        let used = Rect::new(x, y, w, h);
        self.place(used);
        Some(used)
    }

    /// Marks `used` as occupied and restores maximality of the free set.
    pub fn place(&mut self, used: Rect) {
        let mut next = Vec::with_capacity(self.free.len() + 4);
        let mut split = Vec::new();
        for f in &self.free {
            if !f.intersects(&used) {
                next.push(*f);
                continue;
            }
            if used.x > f.x {
                split.push(Rect::new(f.x, f.y, used.x - f.x, f.h));
            }
            if used.right() < f.right() {
                split.push(Rect::new(used.right(), f.y, f.right() - used.right(), f.h));
            }
            if used.y > f.y {
                split.push(Rect::new(f.x, f.y, f.w, used.y - f.y));
            }
            if used.bottom() < f.bottom() {
                split.push(Rect::new(f.x, used.bottom(), f.w, f.bottom() - used.bottom()));
            }
        }
        next.extend(split);
        self.free = prune_contained(next);
    }
}

/// Removes rectangles contained in another; of two equal ones the first stays.
fn prune_contained(rects: Vec<Rect>) -> Vec<Rect> {
    let keep: Vec<bool> = (0..rects.len())
        .map(|i| {
            !rects.iter().enumerate().any(|(j, o)| {
                j != i && o.contains(&rects[i]) && (o != &rects[i] || j < i)
            })
        })
        .collect();
    rects.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect()
}

/// Order in which rectangles are inserted into the bin.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum InsertionOrder {
    /// Decreasing area, then decreasing longer side, then increasing id.
    Area,
    /// Decreasing longer side, then decreasing area, then increasing id.
    LongSide,
}

/// Orders tried by [`pack_oriented`], first success wins.
pub const INSERTION_ORDERS: [InsertionOrder; 2] = [InsertionOrder::Area, InsertionOrder::LongSide];

fn insertion_order(dims: &[(u32, u32)], ids: &[usize], kind: InsertionOrder) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dims.len()).collect();
    let area = |(w, h): (u32, u32)| u64::from(w) * u64::from(h);
    let long = |(w, h): (u32, u32)| w.max(h);
    order.sort_by(|&a, &b| {
        let (da, db) = (dims[a], dims[b]);
        match kind {
            InsertionOrder::Area => area(db).cmp(&area(da)).then(long(db).cmp(&long(da))),
            InsertionOrder::LongSide => long(db).cmp(&long(da)).then(area(db).cmp(&area(da))),
        }
        .then(ids[a].cmp(&ids[b]))
    });
    order
}

/// Packs in one fixed insertion order.
pub fn pack_in_order(
    dims: &[(u32, u32)],
    ids: &[usize],
    kind: InsertionOrder,
    bin_width: u32,
    bin_height: u32,
) -> Option<Vec<(u32, u32)>> {
    let mut bin = MaxRectsBin::new(bin_width, bin_height);
    let mut out = vec![(0, 0); dims.len()];
    for i in insertion_order(dims, ids, kind) {
        let (w, h) = dims[i];
        let used = bin.insert(w, h)?;
        out[i] = (used.x, used.y);
    }
    Some(out)
}

/// Packs every rectangle into one `bin_width × bin_height` bin with its given
/// orientation. Each order of [`INSERTION_ORDERS`] is tried in turn.
/// Returns placements in input order, or `None` if MaxRects cannot fit them
/// all in any of them.
pub fn pack_all(rects: &[RectSpec], bin_width: u32, bin_height: u32) -> Option<Vec<Placement>> {
    pack_oriented(rects, &vec![false; rects.len()], bin_width, bin_height)
}

/// Like [`pack_all`], but with each rectangle turned by 90° where
/// `rotated[i]` is set. Rotation is decided by the caller; the packer itself
/// never rotates.
pub fn pack_oriented(
    rects: &[RectSpec],
    rotated: &[bool],
    bin_width: u32,
    bin_height: u32,
) -> Option<Vec<Placement>> {
    assert_eq!(rects.len(), rotated.len());
    let dims: Vec<(u32, u32)> = rects
        .iter()
        .zip(rotated)
        .map(|(r, &rot)| {
            assert!(!rot || r.rotatable, "rectangle {} is not rotatable", r.id);
            if rot {
                (r.height, r.width)
            } else {
                (r.width, r.height)
            }
        })
        .collect();
    let ids: Vec<usize> = rects.iter().map(|r| r.id).collect();

    let positions = INSERTION_ORDERS
        .iter()
        .find_map(|&kind| pack_in_order(&dims, &ids, kind, bin_width, bin_height))?;
    Some(
        positions
            .into_iter()
            .zip(rects.iter().zip(rotated))
            .map(|((x, y), (r, &rotated))| Placement { id: r.id, x, y, rotated })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maximal(free: &[Rect]) -> bool {
        free.iter()
            .enumerate()
            .all(|(i, a)| free.iter().enumerate().all(|(j, b)| i == j || !b.contains(a)))
    }

    #[test]
    fn empty_bin_free_set_is_whole_bin() {
        assert_eq!(MaxRectsBin::new(3, 2).free_rects(), &[Rect::new(0, 0, 3, 2)]);
    }

    #[test]
    fn corner_insert_splits_into_maximal_remainders() {
        let mut bin = MaxRectsBin::new(3, 2);
        assert_eq!(bin.insert(1, 1), Some(Rect::new(0, 0, 1, 1)));
        let mut free = bin.free_rects().to_vec();
        free.sort_by_key(|r| (r.y, r.x));
        assert_eq!(free, vec![Rect::new(1, 0, 2, 2), Rect::new(0, 1, 3, 1)]);
        assert!(maximal(&free));
        assert_eq!(bin.free_rects_json(), r#"[{"x":1,"y":0,"w":2,"h":2},{"x":0,"y":1,"w":3,"h":1}]"#);
    }

    #[test]
    fn whole_bin_insert_empties_free_set() {
        let mut bin = MaxRectsBin::new(4, 3);
        assert!(bin.insert(4, 3).is_some());
        assert!(bin.free_rects().is_empty());
        assert!(bin.insert(1, 1).is_none());
    }

    #[test]
    fn six_unit_squares_tile_3x2() {
        let rects: Vec<_> = (0..6).map(|i| RectSpec::new(i, 1, 1)).collect();
        let p = pack_all(&rects, 3, 2).unwrap();
        let mut cells: Vec<_> = p.iter().map(|p| (p.x, p.y)).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 6);
    }

    #[test]
    fn area_bound_makes_infeasible() {
        let rects = [RectSpec::new(0, 2, 2), RectSpec::new(1, 2, 1), RectSpec::new(2, 1, 1)];
        assert!(pack_all(&rects, 3, 2).is_none());
    }

    #[test]
    fn long_side_order_rescues_an_area_order_miss() {
        let dims = [(1, 3), (2, 2), (3, 1)];
        let ids = [0, 1, 2];
        assert!(pack_in_order(&dims, &ids, InsertionOrder::Area, 4, 3).is_none());
        assert!(pack_in_order(&dims, &ids, InsertionOrder::LongSide, 4, 3).is_some());
        let rects: Vec<RectSpec> = dims.iter().enumerate().map(|(i, &(w, h))| RectSpec::new(i, w, h)).collect();
        assert!(pack_all(&rects, 4, 3).is_some());
    }

    #[test]
    fn placements_follow_input_order_and_are_input_order_independent() {
        let a = [RectSpec::new(0, 2, 1), RectSpec::new(1, 1, 2), RectSpec::new(2, 1, 1), RectSpec::new(3, 1, 1)];
        let mut b = a;
        b.reverse();
        let pa = pack_all(&a, 3, 2).unwrap();
        let mut pb = pack_all(&b, 3, 2).unwrap();
        pb.reverse();
        assert_eq!(pa, pb);
        assert!(pa.iter().zip(&a).all(|(p, r)| p.id == r.id));
    }

    #[test]
    fn rotation_swaps_dimensions() {
        let rects = [RectSpec::new(0, 1, 3).rotatable(true)];
        assert!(pack_all(&rects, 3, 1).is_none());
        let p = pack_oriented(&rects, &[true], 3, 1).unwrap();
        assert_eq!(p[0], Placement { id: 0, x: 0, y: 0, rotated: true });
    }

    #[test]
    #[should_panic(expected = "not rotatable")]
    fn rotating_a_fixed_rect_panics() {
        pack_oriented(&[RectSpec::new(0, 1, 2)], &[true], 4, 4);
    }

    #[test]
    fn free_set_stays_maximal() {
        let mut bin = MaxRectsBin::new(12, 9);
        for (w, h) in [(3, 2), (5, 5), (1, 4), (2, 2), (4, 1), (2, 3), (1, 1)] {
            bin.insert(w, h);
            assert!(maximal(bin.free_rects()), "{:?}", bin.free_rects());
        }
    }
}
