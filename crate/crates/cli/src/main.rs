use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use viewpack::backproject::{BakeConfig, DEFAULT_DEPTH_TOLERANCE, DEFAULT_EDGE_DILATION, DEFAULT_EDGE_THRESHOLD};
use viewpack::error::{Error, Result};
use viewpack::fixtures;
use viewpack::guidance::{GuidanceConfig, DEFAULT_MAX_ANGLE_DEG, DEFAULT_MAX_DISTANCE};
use viewpack::metrics::{summarize, write_csv, write_json, PackingReport};
use viewpack::pack::{LayoutMode, PackConfig, DEFAULT_PATCH};
use viewpack::pipeline::{self, GuidanceSource, PipelineOptions, RenderOptions};

/// Pack six orthographic views of a mesh into one atlas and bake atlas
/// textures back to UV space.
#[derive(Parser, Debug)]
#[command(name = "viewpack", version)]
struct Cli {
    /// Root directory for outputs when `--out` is not given.
    #[arg(long, global = true, env = "VIEWPACK_OUT", default_value = "viewpack_out")]
    out_root: PathBuf,

    /// Worker threads for corpus runs (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render position, normal, depth and alpha maps of the six canonical views.
    Render {
        mesh: PathBuf,
        #[command(flatten)]
        render: RenderArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lay the rendered views out on an atlas and compose the atlas maps.
    Pack {
        /// Directory written by `render`.
        gbuffers: PathBuf,
        #[command(flatten)]
        pack: PackArgs,
        /// Image of the guidance view to spread and compose.
        #[arg(long)]
        guidance: Option<PathBuf>,
        #[command(flatten)]
        spread: SpreadArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spread a guidance image to the other views and compose it onto a packed atlas.
    Spread {
        /// Directory written by `render`.
        gbuffers: PathBuf,
        /// Directory written by `pack`; receives guidance.png and guidance_mask.png.
        #[arg(long)]
        pack: PathBuf,
        /// Image of the guidance view.
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        spread: SpreadArgs,
    },
    /// Render the procedural ground-truth texture through a layout.
    Oracle {
        mesh: PathBuf,
        /// Directory written by `pack`.
        #[arg(long)]
        pack: PathBuf,
        /// Resolution of the ground-truth UV texture.
        #[arg(long, default_value_t = 1024)]
        texture_res: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Back-project a texture atlas onto the mesh's UV map.
    Bake {
        mesh: PathBuf,
        /// Directory written by `pack`.
        #[arg(long)]
        pack: PathBuf,
        /// Texture atlas (EXR or PNG) laid out like the packed atlas.
        #[arg(long)]
        texture: PathBuf,
        /// Ground-truth UV texture; records PSNR in bake.json.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        bake: BakeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run render, pack, oracle, spread and bake on a mesh or a directory of meshes.
    Pipeline {
        /// OBJ file, or a directory of OBJ files.
        input: PathBuf,
        #[command(flatten)]
        render: RenderArgs,
        #[command(flatten)]
        pack: PackArgs,
        /// `oracle` to spread the oracle's guidance view render, or an image path.
        #[arg(long)]
        guidance: Option<String>,
        #[command(flatten)]
        spread: SpreadArgs,
        #[arg(long, default_value_t = 1024)]
        texture_res: usize,
        #[command(flatten)]
        bake: BakeArgs,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        report: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the evaluation corpus as OBJ files.
    GenCorpus {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct RenderArgs {
    #[arg(long, default_value_t = 512)]
    resolution: usize,
    /// Fraction of the viewport left empty around the mesh, in [0, 0.5).
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
}

#[derive(Args, Debug, Clone)]
struct PackArgs {
    /// Atlas size as HEIGHTxWIDTH.
    #[arg(long, default_value = "832x1248", value_parser = parse_atlas)]
    atlas: (u32, u32),
    #[arg(long, default_value_t = DEFAULT_PATCH)]
    patch: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Pack)]
    mode: ModeArg,
}

#[derive(Args, Debug, Clone)]
struct SpreadArgs {
    #[arg(long, default_value_t = DEFAULT_MAX_DISTANCE)]
    max_distance: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ANGLE_DEG)]
    max_angle: f64,
}

#[derive(Args, Debug, Clone)]
struct BakeArgs {
    /// UV texture resolution (square).
    #[arg(long, default_value_t = 1024)]
    uv_res: usize,
    #[arg(long, default_value_t = DEFAULT_DEPTH_TOLERANCE)]
    depth_tol: f64,
    #[arg(long, default_value_t = DEFAULT_EDGE_THRESHOLD)]
    edge_thresh: f64,
    #[arg(long, default_value_t = DEFAULT_EDGE_DILATION)]
    edge_dilation: usize,
    /// Leave unobserved texels invalid instead of extrapolating.
    #[arg(long)]
    no_fill: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Pack,
    Tile,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum ReportFormat {
    Csv,
    Json,
}

fn parse_atlas(s: &str) -> std::result::Result<(u32, u32), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HEIGHTxWIDTH, got {s:?}"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad atlas height {h:?}"))?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad atlas width {w:?}"))?;
    Ok((h, w))
}

impl RenderArgs {
    fn options(&self) -> RenderOptions {
        RenderOptions {
            resolution: self.resolution,
            margin: self.margin,
        }
    }
}

impl PackArgs {
    fn config(&self) -> Result<PackConfig> {
        PackConfig::new(self.atlas.1, self.atlas.0, self.patch)
    }

    fn mode(&self) -> LayoutMode {
        match self.mode {
            ModeArg::Pack => LayoutMode::Pack,
            ModeArg::Tile => LayoutMode::Tile,
        }
    }
}

impl SpreadArgs {
    fn config(&self) -> Result<GuidanceConfig> {
        if !(self.max_distance > 0.0) || !(self.max_angle > 0.0 && self.max_angle <= 180.0) {
            return Err(Error::InvalidArgument(
                "guidance gates must be positive, angle at most 180".into(),
            ));
        }
        Ok(GuidanceConfig {
            max_distance: self.max_distance,
            max_angle_deg: self.max_angle,
            record_matches: false,
        })
    }
}

impl BakeArgs {
    fn config(&self) -> Result<BakeConfig> {
        if self.uv_res == 0 {
            return Err(Error::InvalidArgument("UV resolution must be positive".into()));
        }
        if !(self.depth_tol >= 0.0) || !(self.edge_thresh > 0.0) {
            return Err(Error::InvalidArgument(
                "depth tolerance must be non-negative and edge threshold positive".into(),
            ));
        }
        Ok(BakeConfig {
            uv_width: self.uv_res,
            uv_height: self.uv_res,
            depth_tolerance: self.depth_tol,
            edge_threshold: self.edge_thresh,
            edge_dilation: self.edge_dilation,
            fill_holes: !self.no_fill,
        })
    }
}

fn write_report(reports: &[PackingReport], format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(match format {
        ReportFormat::Csv => "report.csv",
        ReportFormat::Json => "report.json",
    });
    let file = BufWriter::new(File::create(&path)?);
    match format {
        ReportFormat::Csv => write_csv(reports, file)?,
        ReportFormat::Json => write_json(reports, file)?,
    }
    Ok(path)
}

fn run(cli: Cli) -> Result<()> {
    let root = cli.out_root;
    match cli.command {
        Command::Render { mesh, render, out } => {
            let out = out.unwrap_or_else(|| root.join("render"));
            let meta = pipeline::render_stage(&mesh, &render.options(), &out)?;
            println!("rendered 6 views at {0}x{0} to {1}", meta.resolution, out.display());
        }
        Command::Pack {
            gbuffers,
            pack,
            guidance,
            spread,
            out,
        } => {
            let cfg = pack.config()?;
            let gcfg = spread.config()?;
            let out = out.unwrap_or_else(|| root.join("pack"));
            let g = guidance.as_deref().map(|p| (p, &gcfg));
            let manifest = pipeline::pack_stage(&gbuffers, pack.mode(), &cfg, g, &out)?;
            match &manifest.stats {
                Some(s) => println!(
                    "packed {}x{} atlas, global scale {:.4} (tiling {:.4}), written to {}",
                    manifest.atlas[0],
                    manifest.atlas[1],
                    s.global_scale,
                    s.tiling_scale,
                    out.display()
                ),
                None => println!(
                    "tiled {}x{} atlas written to {}",
                    manifest.atlas[0],
                    manifest.atlas[1],
                    out.display()
                ),
            }
        }
        Command::Spread {
            gbuffers,
            pack,
            image,
            spread,
        } => {
            let source = pipeline::spread_stage(&gbuffers, &pack, &image, &spread.config()?)?;
            println!("spread guidance from the {} view into {}", source.name(), pack.display());
        }
        Command::Oracle {
            mesh,
            pack,
            texture_res,
            out,
        } => {
            if texture_res == 0 {
                return Err(Error::InvalidArgument("texture resolution must be positive".into()));
            }
            let out = out.unwrap_or_else(|| root.join("oracle"));
            let source = pipeline::oracle_stage(&mesh, &pack, texture_res, &out)?;
            println!("oracle textures written to {} (guidance view {})", out.display(), source.name());
        }
        Command::Bake {
            mesh,
            pack,
            texture,
            reference,
            bake,
            out,
        } => {
            let out = out.unwrap_or_else(|| root.join("bake"));
            let s = pipeline::bake_stage(&mesh, &pack, &texture, &bake.config()?, reference.as_deref(), &out)?;
            match s.psnr {
                Some(p) => println!("baked {} texels, PSNR {p:.2} dB, written to {}", s.valid_texels, out.display()),
                None => println!("baked {} texels to {}", s.valid_texels, out.display()),
            }
        }
        Command::Pipeline {
            input,
            render,
            pack,
            guidance,
            spread,
            texture_res,
            bake,
            report,
            out,
        } => {
            if texture_res == 0 {
                return Err(Error::InvalidArgument("texture resolution must be positive".into()));
            }
            let opts = PipelineOptions {
                render: render.options(),
                pack: pack.config()?,
                mode: pack.mode(),
                guidance: match guidance.as_deref() {
                    None => GuidanceSource::None,
                    Some("oracle") => GuidanceSource::Oracle,
                    Some(p) => GuidanceSource::Image(PathBuf::from(p)),
                },
                guidance_config: spread.config()?,
                texture_resolution: texture_res,
                bake: bake.config()?,
            };
            viewpack::raster::validate_render_args(opts.render.resolution, opts.render.margin)?;
            let (reports, out) = if input.is_dir() {
                let out = out.unwrap_or(root);
                let meshes = pipeline::list_meshes(&input)?;
                (pipeline::run_corpus(&meshes, &opts, &out, cli.jobs)?, out)
            } else {
                let name = pipeline::mesh_name(&input);
                let out = out.unwrap_or_else(|| root.join(&name));
                (vec![pipeline::run_pipeline(&name, &input, &opts, &out)?], out)
            };
            let path = write_report(&reports, report, &out)?;
            let s = summarize(&reports);
            println!(
                "{} mesh(es): foreground {:.1}% packed vs {:.1}% tiled, mean improvement {:.2}x; report {}",
                s.meshes,
                100.0 * s.mean_foreground_ratio_packed,
                100.0 * s.mean_foreground_ratio_tiled,
                s.mean_improvement,
                path.display()
            );
        }
        Command::GenCorpus { out } => {
            let out = out.unwrap_or_else(|| root.join("corpus"));
            fs::create_dir_all(&out)?;
            let corpus = fixtures::corpus();
            for (name, mesh) in &corpus {
                mesh.save_obj(out.join(format!("{name}.obj")))?;
            }
            println!("wrote {} meshes to {}", corpus.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
