//! File-based pipeline stages and their in-memory counterparts.
//!
//! Each stage reads the files written by the previous one, so running the
//! stages one by one produces exactly the same bytes as [`run_pipeline`].

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backproject::{bake, Bake, BakeConfig};
use crate::error::{Error, Result};
use crate::fixtures::procedural_texture;
use crate::guidance::{select_guidance_view, spread_guidance, GuidanceConfig};
use crate::image::{Image, Mask};
use crate::manifest::{check_hash, file_hash, LayoutManifest, RenderMeta};
use crate::mesh::Mesh;
use crate::metrics::{foreground_ratio, roundtrip_psnr, PackingReport};
use crate::pack::{compose_atlas, compose_views, pack_views, tile_layout, tile_views, Atlas, LayoutMode, PackConfig, PackStats, PackingLayout};
use crate::raster::{
    canonical_views, compute_ortho_scale, render_textured_view, validate_render_args, ViewGBuffer, ViewId, ViewSpec,
};

pub const META_FILE: &str = "meta.json";
pub const LAYOUT_FILE: &str = "layout.json";
pub const BAKE_FILE: &str = "bake.json";
pub const TEXTURE_ATLAS_EXR: &str = "texture.exr";
pub const TEXTURE_ATLAS_PNG: &str = "texture.png";
pub const GROUND_TRUTH_EXR: &str = "texture_gt.exr";
pub const GUIDANCE_SOURCE_PNG: &str = "guidance_source.png";

/// Rendering parameters.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RenderOptions {
    pub resolution: usize,
    pub margin: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            resolution: 512,
            margin: 0.05,
        }
    }
}

/// Loads an OBJ, normalizes it and returns it with the file's content hash.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<(Mesh, String)> {
    let path = path.as_ref();
    let mesh = Mesh::load_obj(path)?.normalized()?;
    Ok((mesh, file_hash(path)?))
}

/// Renders the six canonical views of a normalized mesh.
pub fn render_mesh(mesh: &Mesh, opts: &RenderOptions) -> Result<(f64, Vec<ViewGBuffer>)> {
    validate_render_args(opts.resolution, opts.margin)?;
    let scale = compute_ortho_scale(mesh, opts.margin)?;
    Ok((scale, crate::raster::render_all_views(mesh, scale, opts.resolution)))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Reads an EXR or PNG texture, chosen by extension.
pub fn read_texture(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("exr") => Image::read_exr(path),
        Some("png") => Image::read_png_rgb(path),
        _ => Err(Error::InvalidArgument(format!(
            "unsupported texture format: {}",
            path.display()
        ))),
    }
}

/// Normal map remapped from `[-1, 1]` to `[0, 1]` for viewing.
fn normal_preview(normal: &Image, alpha: &Mask) -> Image {
    Image::from_fn(normal.width(), normal.height(), 3, |x, y, out| {
        if alpha.get(x, y) {
            for (o, n) in out.iter_mut().zip(normal.pixel(x, y)) {
                *o = 0.5 * (n + 1.0);
            }
        }
    })
}

/// Writes `{view}_position.exr`, `{view}_normal.exr`, `{view}_depth.exr`,
/// `{view}_alpha.png` and `meta.json`.
pub fn write_gbuffers(dir: &Path, meta: &RenderMeta, gbuffers: &[ViewGBuffer]) -> Result<()> {
    ensure_dir(dir)?;
    for g in gbuffers {
        let name = g.view.id.name();
        g.position.write_exr(dir.join(format!("{name}_position.exr")))?;
        g.normal.write_exr(dir.join(format!("{name}_normal.exr")))?;
        g.depth.write_exr(dir.join(format!("{name}_depth.exr")))?;
        g.alpha.write_png(dir.join(format!("{name}_alpha.png")))?;
    }
    meta.write(dir.join(META_FILE))
}

/// Reads a G-buffer directory written by [`write_gbuffers`]. Vertex NDCs are
/// not stored and come back empty.
pub fn read_gbuffers(dir: &Path) -> Result<(RenderMeta, Vec<ViewGBuffer>)> {
    let meta = RenderMeta::read(dir.join(META_FILE))?;
    if meta.views != ViewId::ALL {
        return Err(Error::InvalidArgument(format!(
            "{} must list the six canonical views",
            dir.join(META_FILE).display()
        )));
    }
    let mut out = Vec::with_capacity(6);
    for id in ViewId::ALL {
        let name = id.name();
        let g = ViewGBuffer {
            view: ViewSpec::canonical(id, meta.ortho_scale),
            position: Image::read_exr(dir.join(format!("{name}_position.exr")))?,
            normal: Image::read_exr(dir.join(format!("{name}_normal.exr")))?,
            depth: Image::read_exr(dir.join(format!("{name}_depth.exr")))?,
            alpha: Mask::read_png(dir.join(format!("{name}_alpha.png")))?,
            vertex_ndc: Vec::new(),
        };
        let r = meta.resolution;
        let sizes = [
            (g.position.width(), g.position.height(), g.position.channels(), 3),
            (g.normal.width(), g.normal.height(), g.normal.channels(), 3),
            (g.depth.width(), g.depth.height(), g.depth.channels(), 1),
            (g.alpha.width(), g.alpha.height(), 1, 1),
        ];
        if sizes.iter().any(|&(w, h, c, want)| w != r || h != r || c != want) {
            return Err(Error::ShapeMismatch(format!("{name} maps do not match {r}x{r}")));
        }
        out.push(g);
    }
    Ok((meta, out))
}

/// `render` stage: mesh file to G-buffer directory.
pub fn render_stage(mesh_path: &Path, opts: &RenderOptions, out: &Path) -> Result<RenderMeta> {
    validate_render_args(opts.resolution, opts.margin)?;
    let (mesh, hash) = load_mesh(mesh_path)?;
    let (scale, gbuffers) = render_mesh(&mesh, opts)?;
    let meta = RenderMeta {
        mesh_hash: hash,
        resolution: opts.resolution,
        margin: opts.margin,
        ortho_scale: scale,
        views: ViewId::ALL.to_vec(),
    };
    write_gbuffers(out, &meta, &gbuffers)?;
    Ok(meta)
}

/// Lays out the views by packing or by regular tiling.
pub fn layout_views(gbuffers: &[ViewGBuffer], mode: LayoutMode, cfg: &PackConfig) -> (PackingLayout, Option<PackStats>) {
    match mode {
        LayoutMode::Pack => {
            let (l, s) = pack_views(gbuffers, cfg);
            (l, Some(s))
        }
        LayoutMode::Tile => (
            tile_layout(
                gbuffers[0].width() as u32,
                gbuffers[0].height() as u32,
                cfg.atlas_width,
                cfg.atlas_height,
                cfg.patch,
            ),
            None,
        ),
    }
}

fn write_atlas(dir: &Path, atlas: &Atlas) -> Result<()> {
    atlas.position.write_exr(dir.join("atlas_position.exr"))?;
    atlas.normal.write_exr(dir.join("atlas_normal.exr"))?;
    atlas.depth.write_exr(dir.join("atlas_depth.exr"))?;
    atlas.alpha.write_png(dir.join("atlas_alpha.png"))?;
    normal_preview(&atlas.normal, &atlas.alpha).write_png(dir.join("atlas_normal.png"))?;
    if let Some((img, mask)) = &atlas.guidance {
        write_guidance(dir, img, mask)?;
    }
    Ok(())
}

fn write_guidance(dir: &Path, img: &Image, mask: &Mask) -> Result<()> {
    img.write_png(dir.join("guidance.png"))?;
    mask.write_png(dir.join("guidance_mask.png"))
}

/// `pack` stage: G-buffer directory to atlas maps and `layout.json`.
/// With `guidance`, the image is spread from the selected view and composed
/// as `guidance.png`.
pub fn pack_stage(
    gbuffer_dir: &Path,
    mode: LayoutMode,
    cfg: &PackConfig,
    guidance: Option<(&Path, &GuidanceConfig)>,
    out: &Path,
) -> Result<LayoutManifest> {
    let (meta, gbuffers) = read_gbuffers(gbuffer_dir)?;
    let (layout, stats) = layout_views(&gbuffers, mode, cfg);
    layout.validate()?;
    let mut atlas = compose_atlas(&gbuffers, None, &layout);
    if let Some((path, gcfg)) = guidance {
        let img = Image::read_png_rgb(path)?;
        let source = select_guidance_view(&gbuffers);
        let field = spread_guidance(source, &img, &gbuffers, gcfg)?;
        atlas.guidance = Some(field.compose(&layout));
    }
    ensure_dir(out)?;
    write_atlas(out, &atlas)?;
    let manifest = LayoutManifest::new(&layout, meta.ortho_scale, &meta.mesh_hash, stats);
    manifest.write(out.join(LAYOUT_FILE))?;
    Ok(manifest)
}

/// `spread` stage: composes a guidance image onto an existing atlas.
pub fn spread_stage(gbuffer_dir: &Path, pack_dir: &Path, image: &Path, cfg: &GuidanceConfig) -> Result<ViewId> {
    let (meta, gbuffers) = read_gbuffers(gbuffer_dir)?;
    let manifest = LayoutManifest::read(pack_dir.join(LAYOUT_FILE))?;
    check_hash(&manifest.mesh_hash, &meta.mesh_hash)?;
    let layout = manifest.layout()?;
    let img = Image::read_png_rgb(image)?;
    let source = select_guidance_view(&gbuffers);
    let field = spread_guidance(source, &img, &gbuffers, cfg)?;
    let (g, m) = field.compose(&layout);
    write_guidance(pack_dir, &g, &m)?;
    Ok(source)
}

/// The six views of `mesh` textured with a UV-space `texture`.
pub fn oracle_views(mesh: &Mesh, ortho_scale: f64, resolution: usize, texture: &Image) -> Vec<(Image, Mask)> {
    canonical_views(ortho_scale)
        .iter()
        .map(|v| render_textured_view(mesh, texture, v, resolution, resolution))
        .collect()
}

/// Composes textured views onto the atlas.
pub fn compose_texture(layout: &PackingLayout, views: &[(Image, Mask)]) -> Image {
    let src: Vec<(&Image, &Mask)> = views.iter().map(|(i, m)| (i, m)).collect();
    compose_views(layout, &src).0
}

/// `oracle` stage: renders the procedural ground-truth texture through the
/// layout, writing the texture atlas, the ground truth UV texture and the
/// textured render of the guidance view.
pub fn oracle_stage(mesh_path: &Path, pack_dir: &Path, texture_resolution: usize, out: &Path) -> Result<ViewId> {
    let manifest = LayoutManifest::read(pack_dir.join(LAYOUT_FILE))?;
    let (mesh, hash) = load_mesh(mesh_path)?;
    check_hash(&manifest.mesh_hash, &hash)?;
    let layout = manifest.layout()?;
    let truth = procedural_texture(texture_resolution, texture_resolution);
    let views = oracle_views(&mesh, manifest.ortho_scale, layout.view_width as usize, &truth);
    let atlas = compose_texture(&layout, &views);
    ensure_dir(out)?;
    atlas.write_exr(out.join(TEXTURE_ATLAS_EXR))?;
    atlas.write_png(out.join(TEXTURE_ATLAS_PNG))?;
    truth.write_exr(out.join(GROUND_TRUTH_EXR))?;
    let source = select_by_mask(&views);
    views[source.index()].0.write_png(out.join(GUIDANCE_SOURCE_PNG))?;
    Ok(source)
}

fn select_by_mask(views: &[(Image, Mask)]) -> ViewId {
    let mut best = (ViewId::Frontal, 0);
    for id in [ViewId::Frontal, ViewId::Left, ViewId::Top] {
        let n = views[id.index()].1.count();
        if n > best.1 {
            best = (id, n);
        }
    }
    best.0
}

/// Summary written next to a baked texture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BakeSummary {
    pub mesh_hash: String,
    pub uv_resolution: [usize; 2],
    /// Texels inside a UV chart.
    pub chart_texels: usize,
    /// Texels holding a value, observed or filled.
    pub valid_texels: usize,
    /// Texels with positive fusion weight.
    pub observed_texels: usize,
    pub filled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr: Option<f64>,
}

/// Texels with positive fusion weight.
pub fn observed_mask(b: &Bake) -> Mask {
    let w = &b.texture.weight_sum;
    Mask::from_fn(w.width(), w.height(), |x, y| w.pixel(x, y)[0] > 0.0)
}

/// `bake` stage: texture atlas to UV texture. With a reference UV texture,
/// PSNR over observed texels is recorded.
pub fn bake_stage(
    mesh_path: &Path,
    pack_dir: &Path,
    texture_path: &Path,
    cfg: &BakeConfig,
    reference: Option<&Path>,
    out: &Path,
) -> Result<BakeSummary> {
    let manifest = LayoutManifest::read(pack_dir.join(LAYOUT_FILE))?;
    let (mesh, hash) = load_mesh(mesh_path)?;
    check_hash(&manifest.mesh_hash, &hash)?;
    let layout = manifest.layout()?;
    let texture = read_texture(texture_path)?;
    let depth = Image::read_exr(pack_dir.join("atlas_depth.exr"))?;
    let alpha = Mask::read_png(pack_dir.join("atlas_alpha.png"))?;
    let views = canonical_views(manifest.ortho_scale);
    let b = bake(&mesh, &views, &layout, &texture, &depth, &alpha, cfg)?;
    let observed = observed_mask(&b);
    let psnr = match reference {
        Some(p) => {
            let truth = resample_to(&read_texture(p)?, cfg.uv_width, cfg.uv_height);
            Some(roundtrip_psnr(&truth, &b.texture.data, &observed)?)
        }
        None => None,
    };

    ensure_dir(out)?;
    let rgba = b.texture.to_rgba();
    rgba.write_png(out.join("texture.png"))?;
    rgba.write_exr(out.join("texture.exr"))?;
    b.texture.weight_sum.write_exr(out.join("weight_sum.exr"))?;
    let summary = BakeSummary {
        mesh_hash: hash,
        uv_resolution: [cfg.uv_width, cfg.uv_height],
        chart_texels: b.coverage.count(),
        valid_texels: b.texture.valid.count(),
        observed_texels: observed.count(),
        filled: cfg.fill_holes,
        psnr,
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(out.join(BAKE_FILE), text)?;
    Ok(summary)
}

/// Bilinear resize to texel centers of a `w × h` grid (identity when sizes
/// match).
fn resample_to(img: &Image, w: usize, h: usize) -> Image {
    if (img.width(), img.height()) == (w, h) {
        return img.clone();
    }
    let (sx, sy) = (img.width() as f64 / w as f64, img.height() as f64 / h as f64);
    Image::from_fn(w, h, img.channels(), |x, y, out| {
        img.sample_bilinear((x as f64 + 0.5) * sx, (y as f64 + 0.5) * sy, out)
    })
}

/// Where the guidance image of a pipeline run comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum GuidanceSource {
    None,
    /// The oracle's textured render of the selected view.
    Oracle,
    Image(PathBuf),
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub render: RenderOptions,
    pub pack: PackConfig,
    pub mode: LayoutMode,
    pub guidance: GuidanceSource,
    pub guidance_config: GuidanceConfig,
    pub texture_resolution: usize,
    pub bake: BakeConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            render: RenderOptions::default(),
            pack: PackConfig::default(),
            mode: LayoutMode::Pack,
            guidance: GuidanceSource::None,
            guidance_config: GuidanceConfig::default(),
            texture_resolution: 1024,
            bake: BakeConfig::default(),
        }
    }
}

/// Stage directories of one pipeline run.
pub struct StageDirs {
    pub render: PathBuf,
    pub pack: PathBuf,
    pub oracle: PathBuf,
    pub bake: PathBuf,
}

impl StageDirs {
    pub fn new(root: &Path) -> Self {
        Self {
            render: root.join("render"),
            pack: root.join("pack"),
            oracle: root.join("oracle"),
            bake: root.join("bake"),
        }
    }
}

/// Runs render, pack, oracle, optional guidance spreading and bake on one
/// mesh under `out`, and returns its packing report.
pub fn run_pipeline(name: &str, mesh_path: &Path, opts: &PipelineOptions, out: &Path) -> Result<PackingReport> {
    let dirs = StageDirs::new(out);
    render_stage(mesh_path, &opts.render, &dirs.render)?;
    let guidance_image = match &opts.guidance {
        GuidanceSource::Image(p) => Some(p.as_path()),
        _ => None,
    };
    let manifest = pack_stage(
        &dirs.render,
        opts.mode,
        &opts.pack,
        guidance_image.map(|p| (p, &opts.guidance_config)),
        &dirs.pack,
    )?;
    oracle_stage(mesh_path, &dirs.pack, opts.texture_resolution, &dirs.oracle)?;
    if opts.guidance == GuidanceSource::Oracle {
        spread_stage(
            &dirs.render,
            &dirs.pack,
            &dirs.oracle.join(GUIDANCE_SOURCE_PNG),
            &opts.guidance_config,
        )?;
    }
    let summary = bake_stage(
        mesh_path,
        &dirs.pack,
        &dirs.oracle.join(TEXTURE_ATLAS_EXR),
        &opts.bake,
        Some(&dirs.oracle.join(GROUND_TRUTH_EXR)),
        &dirs.bake,
    )?;

    let layout = manifest.layout()?;
    let (_, gbuffers) = read_gbuffers(&dirs.render)?;
    let packed = foreground_ratio(&Mask::read_png(dirs.pack.join("atlas_alpha.png"))?);
    let tiled = foreground_ratio(&tile_views(&gbuffers, opts.pack.atlas_width, opts.pack.atlas_height, opts.pack.patch).alpha);
    let mut report = PackingReport::new(name, packed, tiled, &layout, manifest.stats.as_ref());
    report.psnr = summary.psnr;
    Ok(report)
}

/// OBJ files directly inside `dir`, sorted by file name.
pub fn list_meshes(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(dir.to_path_buf()),
        _ => e.into(),
    })?;
    let mut out = Vec::new();
    for e in entries {
        let p = e?.path();
        if p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("obj")) {
            out.push(p);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::InvalidArgument(format!("no .obj files in {}", dir.display())));
    }
    Ok(out)
}

/// File stem used as the mesh name in reports and output directories.
pub fn mesh_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into())
}

/// Runs [`run_pipeline`] on every mesh with `jobs` workers (0 = all cores),
/// each into `out/<name>`. Reports come back in input order.
pub fn run_corpus(meshes: &[PathBuf], opts: &PipelineOptions, out: &Path, jobs: usize) -> Result<Vec<PackingReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        meshes
            .par_iter()
            .map(|p| {
                let name = mesh_name(p);
                run_pipeline(&name, p, opts, &out.join(&name))
            })
            .collect()
    })
}

/// In-memory packing evaluation of one mesh against regular tiling.
pub fn evaluate_packing(name: &str, mesh: &Mesh, opts: &RenderOptions, cfg: &PackConfig) -> Result<(PackingReport, PackingLayout, PackStats)> {
    let (_, gbuffers) = render_mesh(mesh, opts)?;
    let (layout, stats) = pack_views(&gbuffers, cfg);
    let packed = compose_atlas(&gbuffers, None, &layout);
    let tiled = tile_views(&gbuffers, cfg.atlas_width, cfg.atlas_height, cfg.patch);
    let report = PackingReport::new(
        name,
        foreground_ratio(&packed.alpha),
        foreground_ratio(&tiled.alpha),
        &layout,
        Some(&stats),
    );
    Ok((report, layout, stats))
}

/// In-memory oracle round trip of one mesh.
pub struct RoundTrip {
    pub psnr: f64,
    pub truth: Image,
    pub bake: Bake,
    pub layout: PackingLayout,
}

/// Renders `mesh` textured with the procedural texture, packs, back-projects
/// and compares against the ground truth over observed texels.
pub fn roundtrip(mesh: &Mesh, opts: &PipelineOptions) -> Result<RoundTrip> {
    let (scale, gbuffers) = render_mesh(mesh, &opts.render)?;
    let (layout, _) = layout_views(&gbuffers, opts.mode, &opts.pack);
    let atlas = compose_atlas(&gbuffers, None, &layout);
    let truth_tex = procedural_texture(opts.texture_resolution, opts.texture_resolution);
    let views = oracle_views(mesh, scale, opts.render.resolution, &truth_tex);
    let texture = compose_texture(&layout, &views);
    let b = bake(mesh, &canonical_views(scale), &layout, &texture, &atlas.depth, &atlas.alpha, &opts.bake)?;
    let truth = resample_to(&truth_tex, opts.bake.uv_width, opts.bake.uv_height);
    let psnr = roundtrip_psnr(&truth, &b.texture.data, &observed_mask(&b))?;
    Ok(RoundTrip {
        psnr,
        truth,
        bake: b,
        layout,
    })
}
