//! JSON sidecars written between pipeline stages, stamped with the content
//! hash of the mesh they were derived from.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binpack::Rect;
use crate::error::{Error, Result};
use crate::pack::{LayoutMode, PackStats, PackingLayout, ViewPlacement};
use crate::raster::ViewId;

/// Hex SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_hash(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => e.into(),
    })?;
    Ok(content_hash(&bytes))
}

/// Fails with [`Error::HashMismatch`] unless the hashes agree.
pub fn check_hash(expected: &str, found: &str) -> Result<()> {
    if expected != found {
        return Err(Error::HashMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => e.into(),
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Sidecar of a rendered G-buffer set (`meta.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderMeta {
    pub mesh_hash: String,
    pub resolution: usize,
    pub margin: f64,
    pub ortho_scale: f64,
    pub views: Vec<ViewId>,
}

impl RenderMeta {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(self, path.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub id: ViewId,
    pub bbox: [u32; 4],
    pub scale: f64,
    pub rotated: bool,
    pub offset: [u32; 2],
    pub cell: [u32; 2],
}

/// Layout manifest (`layout.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutManifest {
    pub atlas: [u32; 2],
    pub patch: u32,
    pub mode: LayoutMode,
    pub view_resolution: [u32; 2],
    pub ortho_scale: f64,
    pub mesh_hash: String,
    pub views: Vec<ViewEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<PackStats>,
}

impl LayoutManifest {
    pub fn new(layout: &PackingLayout, ortho_scale: f64, mesh_hash: &str, stats: Option<PackStats>) -> Self {
        Self {
            atlas: [layout.atlas_width, layout.atlas_height],
            patch: layout.patch,
            mode: layout.mode,
            view_resolution: [layout.view_width, layout.view_height],
            ortho_scale,
            mesh_hash: mesh_hash.to_string(),
            views: layout
                .views
                .iter()
                .map(|v| ViewEntry {
                    id: v.view,
                    bbox: [v.bbox.x, v.bbox.y, v.bbox.w, v.bbox.h],
                    scale: v.scale,
                    rotated: v.rotated,
                    offset: [v.cell.x, v.cell.y],
                    cell: [v.cell.w, v.cell.h],
                })
                .collect(),
            stats,
        }
    }

    /// Rebuilds the layout and checks its invariants.
    pub fn layout(&self) -> Result<PackingLayout> {
        let layout = PackingLayout {
            mode: self.mode,
            atlas_width: self.atlas[0],
            atlas_height: self.atlas[1],
            patch: self.patch,
            view_width: self.view_resolution[0],
            view_height: self.view_resolution[1],
            views: self
                .views
                .iter()
                .map(|v| ViewPlacement {
                    view: v.id,
                    bbox: Rect::new(v.bbox[0], v.bbox[1], v.bbox[2], v.bbox[3]),
                    scale: v.scale,
                    rotated: v.rotated,
                    cell: Rect::new(v.offset[0], v.offset[1], v.cell[0], v.cell[1]),
                })
                .collect(),
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(self, path.as_ref())
    }
}
