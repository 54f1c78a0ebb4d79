//! Packing efficiency and reconstruction fidelity metrics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::pack::{PackStats, PackingLayout};

/// PSNR reported for a zero-error reconstruction.
pub const PSNR_CAP: f64 = 100.0;

/// Fraction of foreground pixels.
pub fn foreground_ratio(alpha: &Mask) -> f64 {
    let total = alpha.width() * alpha.height();
    if total == 0 {
        return 0.0;
    }
    alpha.count() as f64 / total as f64
}

/// Fraction of the atlas covered by the layout's cells.
pub fn bbox_coverage(layout: &PackingLayout) -> f64 {
    layout.cell_coverage()
}

/// PSNR in dB over texels in `mask`, all channels, with peak value 1.
/// Identical inputs give [`PSNR_CAP`].
pub fn roundtrip_psnr(original: &Image, reconstructed: &Image, mask: &Mask) -> Result<f64> {
    let dims = |i: &Image| (i.width(), i.height(), i.channels());
    if dims(original) != dims(reconstructed) || (original.width(), original.height()) != (mask.width(), mask.height()) {
        return Err(Error::ShapeMismatch("PSNR inputs differ in shape".into()));
    }
    let n = mask.count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let mut sum = 0.0f64;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                for (a, b) in original.pixel(x, y).iter().zip(reconstructed.pixel(x, y)) {
                    let d = f64::from(*a) - f64::from(*b);
                    sum += d * d;
                }
            }
        }
    }
    let mse = sum / (n * original.channels()) as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((-10.0 * mse.log10()).min(PSNR_CAP))
}

/// Packing statistics for one mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub mesh: String,
    pub foreground_ratio_packed: f64,
    pub foreground_ratio_tiled: f64,
    pub improvement: f64,
    pub bbox_coverage: f64,
    pub global_scale: f64,
    pub tiling_scale: f64,
    pub scale_frontal: f64,
    pub scale_rear: f64,
    pub scale_left: f64,
    pub scale_right: f64,
    pub scale_top: f64,
    pub scale_bottom: f64,
    pub global_probes: usize,
    pub max_pair_probes: usize,
    pub psnr: Option<f64>,
}

impl PackingReport {
    pub fn new(
        mesh: impl Into<String>,
        packed: f64,
        tiled: f64,
        layout: &PackingLayout,
        stats: Option<&PackStats>,
    ) -> Self {
        let s: Vec<f64> = layout.views.iter().map(|v| v.scale).collect();
        Self {
            mesh: mesh.into(),
            foreground_ratio_packed: packed,
            foreground_ratio_tiled: tiled,
            improvement: if tiled > 0.0 { packed / tiled } else { f64::NAN },
            bbox_coverage: bbox_coverage(layout),
            global_scale: stats.map_or(s.iter().cloned().fold(f64::INFINITY, f64::min), |st| st.global_scale),
            tiling_scale: stats.map_or(0.0, |st| st.tiling_scale),
            scale_frontal: s[0],
            scale_rear: s[1],
            scale_left: s[2],
            scale_right: s[3],
            scale_top: s[4],
            scale_bottom: s[5],
            global_probes: stats.map_or(0, |st| st.global_probes),
            max_pair_probes: stats.map_or(0, |st| st.pair_probes.iter().copied().max().unwrap_or(0)),
            psnr: None,
        }
    }
}

/// Means over a set of reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportSummary {
    pub meshes: usize,
    pub mean_foreground_ratio_packed: f64,
    pub mean_foreground_ratio_tiled: f64,
    pub mean_improvement: f64,
    pub mean_bbox_coverage: f64,
    pub dominance: usize,
}

pub fn summarize(reports: &[PackingReport]) -> ReportSummary {
    let n = reports.len().max(1) as f64;
    let mean = |f: fn(&PackingReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    ReportSummary {
        meshes: reports.len(),
        mean_foreground_ratio_packed: mean(|r| r.foreground_ratio_packed),
        mean_foreground_ratio_tiled: mean(|r| r.foreground_ratio_tiled),
        mean_improvement: mean(|r| r.improvement),
        mean_bbox_coverage: mean(|r| r.bbox_coverage),
        dominance: reports
            .iter()
            .filter(|r| r.foreground_ratio_packed >= r.foreground_ratio_tiled)
            .count(),
    }
}

/// Writes reports as CSV with a header row.
pub fn write_csv<W: Write>(reports: &[PackingReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    summary: ReportSummary,
    meshes: &'a [PackingReport],
}

/// Writes reports and their summary as pretty JSON.
pub fn write_json<W: Write>(reports: &[PackingReport], mut out: W) -> Result<()> {
    let doc = JsonReport {
        summary: summarize(reports),
        meshes: reports,
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}
