use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};

/// Distance from the orthographic image plane to the origin. Any normalized
/// mesh point has depth in `[CAMERA_DISTANCE - √3, CAMERA_DISTANCE + √3]`, so
/// depths are always positive and 0 can serve as the background value.
pub const CAMERA_DISTANCE: f64 = 3.0;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewId {
    Frontal,
    Rear,
    Left,
    Right,
    Top,
    Bottom,
}

impl ViewId {
    pub const ALL: [ViewId; 6] = [
        ViewId::Frontal,
        ViewId::Rear,
        ViewId::Left,
        ViewId::Right,
        ViewId::Top,
        ViewId::Bottom,
    ];

    /// Opposing pairs; each pair shares a bounding-box size and a scale.
    pub const PAIRS: [(ViewId, ViewId); 3] = [
        (ViewId::Frontal, ViewId::Rear),
        (ViewId::Left, ViewId::Right),
        (ViewId::Top, ViewId::Bottom),
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> ViewId {
        Self::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            ViewId::Frontal => "frontal",
            ViewId::Rear => "rear",
            ViewId::Left => "left",
            ViewId::Right => "right",
            ViewId::Top => "top",
            ViewId::Bottom => "bottom",
        }
    }

    pub fn opposite(self) -> ViewId {
        match self {
            ViewId::Frontal => ViewId::Rear,
            ViewId::Rear => ViewId::Frontal,
            ViewId::Left => ViewId::Right,
            ViewId::Right => ViewId::Left,
            ViewId::Top => ViewId::Bottom,
            ViewId::Bottom => ViewId::Top,
        }
    }

    /// Index of the opposing pair this view belongs to.
    pub fn pair(self) -> usize {
        self.index() / 2
    }

    /// Only the vertical views may be rotated by 90° in an atlas.
    pub fn rotatable(self) -> bool {
        matches!(self, ViewId::Top | ViewId::Bottom)
    }

    /// Viewing direction (camera → scene) and up vector.
    ///
    /// Frontal looks along −z with +y up; rear, left and right are yaw
    /// rotations of it; top looks down −y with −z up and bottom looks up +y
    /// with +z up.
    pub fn basis(self) -> (Vec3, Vec3) {
        match self {
            ViewId::Frontal => (Vec3::new(0.0, 0.0, -1.0), Vec3::y()),
            ViewId::Rear => (Vec3::new(0.0, 0.0, 1.0), Vec3::y()),
            ViewId::Left => (Vec3::new(1.0, 0.0, 0.0), Vec3::y()),
            ViewId::Right => (Vec3::new(-1.0, 0.0, 0.0), Vec3::y()),
            ViewId::Top => (Vec3::new(0.0, -1.0, 0.0), Vec3::new(0.0, 0.0, -1.0)),
            ViewId::Bottom => (Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
        }
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ViewId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViewId::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown view `{s}`")))
    }
}

/// An orthographic camera. `ortho_scale` is world units per half viewport.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ViewSpec {
    pub id: ViewId,
    pub direction: Vec3,
    pub up: Vec3,
    pub ortho_scale: f64,
}

impl ViewSpec {
    pub fn canonical(id: ViewId, ortho_scale: f64) -> Self {
        let (direction, up) = id.basis();
        Self {
            id,
            direction,
            up,
            ortho_scale,
        }
    }

    pub fn right(&self) -> Vec3 {
        self.direction.cross(&self.up)
    }

    /// `(x, y)` in `[-1, 1]` across the viewport and linear depth in world units.
    #[inline]
    pub fn ndc(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.dot(&self.right()) / self.ortho_scale,
            p.dot(&self.up) / self.ortho_scale,
            CAMERA_DISTANCE + p.dot(&self.direction),
        )
    }

    /// Normal in camera space; `z > 0` faces the camera.
    #[inline]
    pub fn camera_normal(&self, n: &Vec3) -> Vec3 {
        Vec3::new(n.dot(&self.right()), n.dot(&self.up), -n.dot(&self.direction))
    }
}

pub fn canonical_views(ortho_scale: f64) -> [ViewSpec; 6] {
    ViewId::ALL.map(|id| ViewSpec::canonical(id, ortho_scale))
}

/// Continuous pixel coordinates of an NDC point in a `width × height` image.
#[inline]
pub fn ndc_to_pixel(x: f64, y: f64, width: usize, height: usize) -> (f64, f64) {
    ((x + 1.0) * 0.5 * width as f64, (1.0 - y) * 0.5 * height as f64)
}

#[inline]
pub fn pixel_to_ndc(px: f64, py: f64, width: usize, height: usize) -> (f64, f64) {
    (px / width as f64 * 2.0 - 1.0, 1.0 - py / height as f64 * 2.0)
}

/// Smallest orthographic scale shared by all six views such that every
/// silhouette keeps `margin` of the side length free on each side.
pub fn compute_ortho_scale(mesh: &Mesh, margin: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&margin) {
        return Err(Error::InvalidArgument(format!(
            "margin must be in [0, 0.5), got {margin}"
        )));
    }
    let mut half_extent = 0.0f64;
    for id in ViewId::ALL {
        let view = ViewSpec::canonical(id, 1.0);
        for v in &mesh.vertices {
            let p = view.ndc(v);
            half_extent = half_extent.max(p.x.abs()).max(p.y.abs());
        }
    }
    if !(half_extent > 0.0) {
        return Err(Error::DegenerateMesh("zero projected extent"));
    }
    // the viewport spans 2s; a margin of m·2s on both sides leaves (1-2m)s
    Ok(half_extent / (1.0 - 2.0 * margin))
}
