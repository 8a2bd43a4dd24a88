//! Command-line front end. Each `cmd_*` function reads its inputs from a
//! [`PipelineConfig`], writes artifacts into the output directory and
//! returns the paths it wrote.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ConfigDoc, PipelineConfig};
use crate::decoder::DecoderWeights;
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::imaging::{FeatureImage, FloatMap, Image, PixelMask};
use crate::lifting::{lift, rasterize, NeuralPointCloud};
use crate::metrics::{KeypointSet, MetricReport, PairInput};
use crate::morphable::{frontal_expression_render, render_mesh, CoefficientFile, MeshRender, MorphableBasis};
use crate::pipeline::{reenact, AppearanceInput, ReenactJob};
use crate::render::{fit_triplane, render, RenderOutput};
use crate::triplane::{Plane, TriPlane};

#[derive(Debug, Parser)]
#[command(
    name = "triavatar",
    version,
    about = "Tri-plane head avatar rendering, reenactment and evaluation"
)]
pub struct Cli {
    /// Pipeline config file.
    #[arg(long, global = true, env = crate::config::CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for stratified sample jitter.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override a config value, e.g. `--set render.samples=128`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Volume-render a tri-plane: rgb.png, depth.fmp, alpha.fmp.
    Render,
    /// Compose canonical, expression and lifted appearance planes and render at the target camera.
    Reenact,
    /// Fit tri-plane features to a target image: fitted.tpl, losses.txt.
    Fit,
    /// Render the morphable model: mesh.png, mesh_mask.png, mesh_depth.fmp.
    Mmrender {
        /// Use the frontal camera and zero texture offset.
        #[arg(long)]
        frontal: bool,
    },
    /// Compare predicted and ground-truth image directories: report.txt.
    Eval {
        /// Skip landmark alignment.
        #[arg(long)]
        no_align: bool,
    },
    /// Lift a feature image into a point cloud using a depth map: cloud.npc.
    Lift,
    /// Rasterize a point cloud onto tri-plane texels: raster.tpl.
    Rasterize,
    /// Inspect or convert tri-plane files.
    Tpl {
        #[command(subcommand)]
        action: TplAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum TplAction {
    /// Print layout and value statistics.
    Info { file: PathBuf },
    /// Write an all-zero tri-plane.
    Zeros {
        #[arg(long)]
        channels: usize,
        #[arg(long)]
        resolution: usize,
        #[arg(long, default_value_t = 1.0)]
        extent: f64,
        output: PathBuf,
    },
    /// Write the elementwise sum of two tri-planes.
    Add { a: PathBuf, b: PathBuf, output: PathBuf },
    /// Export one plane channel as a float map.
    Slice {
        file: PathBuf,
        #[arg(long, value_enum)]
        plane: PlaneArg,
        #[arg(long, default_value_t = 0)]
        channel: usize,
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlaneArg {
    Xy,
    Xz,
    Yz,
}

impl From<PlaneArg> for Plane {
    fn from(p: PlaneArg) -> Plane {
        match p {
            PlaneArg::Xy => Plane::Xy,
            PlaneArg::Xz => Plane::Xz,
            PlaneArg::Yz => Plane::Yz,
        }
    }
}

/// Process exit status for an error: 2 usage, 3 input format, 4 numeric.
pub fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Parameter(_) => 2,
        Error::Numeric(_) | Error::Diverged { .. } | Error::Degenerate(_) => 4,
        _ => 3,
    }
}

fn need<'a>(p: &'a Option<PathBuf>, key: &str, cmd: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Parameter(format!("`{cmd}` needs `paths.{key}` in the config")))
}

fn prepare_out(cfg: &PipelineConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::from(e).in_file(&cfg.out_dir))?;
    Ok(&cfg.out_dir)
}

fn write_render(out: &RenderOutput, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let rgb = dir.join(format!("{stem}.png"));
    let depth = dir.join(format!("{stem}_depth.fmp"));
    let alpha = dir.join(format!("{stem}_alpha.fmp"));
    out.rgb.save_png(&rgb)?;
    FloatMap::from_image_channel(&out.depth, 0).save(&depth)?;
    FloatMap::from_image_channel(&out.alpha, 0).save(&alpha)?;
    Ok(vec![rgb, depth, alpha])
}

fn write_mesh(r: &MeshRender, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let image = dir.join(format!("{stem}.png"));
    let mask = dir.join(format!("{stem}_mask.png"));
    let depth = dir.join(format!("{stem}_depth.fmp"));
    r.image.save_png(&image)?;
    r.mask.save_png(&mask)?;
    FloatMap::from_image_channel(&r.depth, 0).save(&depth)?;
    Ok(vec![image, mask, depth])
}

/// `render`: writes `rgb.png`, `rgb_depth.fmp`, `rgb_alpha.fmp`.
pub fn cmd_render(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let t = TriPlane::load(need(&cfg.paths.triplane, "triplane", "render")?)?;
    let w = DecoderWeights::load(need(&cfg.paths.decoder, "decoder", "render")?)?;
    let cam = Camera::load(need(&cfg.paths.camera, "camera", "render")?)?;
    let out = render(&t, &w, &cam, &cfg.render)?;
    write_render(&out, prepare_out(cfg)?, "rgb")
}

/// `reenact`: writes `output.png` (+ depth/alpha), `appearance.tpl` when
/// appearance features are given, and the frontal expression image
/// `expression.png` (+ mask/depth) when a basis and coefficients are given.
pub fn cmd_reenact(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let p = &cfg.paths;
    let canonical = TriPlane::load(need(&p.triplane, "triplane", "reenact")?)?;
    let decoder = DecoderWeights::load(need(&p.decoder, "decoder", "reenact")?)?;
    let target_camera = Camera::load(need(&p.target_camera, "target_camera", "reenact")?)?;
    let expression = p.expression_triplane.as_ref().map(TriPlane::load).transpose()?;
    let appearance = match &p.features {
        Some(f) => Some(AppearanceInput {
            features: FeatureImage::load(f)?,
            mask: p.appearance_mask.as_ref().map(PixelMask::load_png).transpose()?,
            source_camera: Camera::load(need(&p.source_camera, "source_camera", "reenact")?)?,
        }),
        None => None,
    };
    let mut job = ReenactJob {
        canonical,
        expression,
        appearance,
        target_camera,
    };
    if let (Some(tp_path), None) = (&p.appearance_triplane, &job.appearance) {
        // A precomputed appearance plane joins the expression term.
        let tp = TriPlane::load(tp_path)?;
        job.expression = Some(match job.expression.take() {
            Some(te) => te.add(&tp)?,
            None => tp,
        });
    }
    let result = reenact(&job, &decoder, &cfg.render, cfg.lift.alpha_threshold)?;
    let dir = prepare_out(cfg)?;
    let mut written = write_render(&result.output, dir, "output")?;
    if let Some(tp) = &result.appearance_triplane {
        let path = dir.join("appearance.tpl");
        tp.save(&path)?;
        written.push(path);
    }
    if let Some(basis_path) = &p.basis {
        let basis = MorphableBasis::load(basis_path)?;
        let source = p
            .source_coefficients
            .as_ref()
            .map(CoefficientFile::load)
            .transpose()?
            .unwrap_or_default();
        let target = p
            .target_coefficients
            .as_ref()
            .map(CoefficientFile::load)
            .transpose()?
            .unwrap_or_default();
        let alpha_s = source.coefficients_for(&basis).alpha;
        let beta_t = target.coefficients_for(&basis).beta;
        let front = cfg.front_camera()?;
        let exp = frontal_expression_render(&basis, &alpha_s, &beta_t, &front, front.width(), front.height())?;
        written.extend(write_mesh(&exp, dir, "expression")?);
    }
    Ok(written)
}

/// `fit`: writes `fitted.tpl`, `fitted.png` and `losses.txt` (one
/// `step loss` line per step).
pub fn cmd_fit(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let p = &cfg.paths;
    let target = Image::load_png(need(&p.target_image, "target_image", "fit")?)?;
    let cam = Camera::load(need(&p.camera, "camera", "fit")?)?;
    let decoder = DecoderWeights::load(need(&p.decoder, "decoder", "fit")?)?;
    let init = match &p.init_triplane {
        Some(path) => TriPlane::load(path)?,
        None => TriPlane::zeros(decoder.input_width(), cfg.fit.init_resolution, cfg.fit.init_extent)?,
    };
    let cam = if (cam.width() as usize, cam.height() as usize) == (target.width(), target.height()) {
        cam
    } else {
        cam.with_resolution(target.width() as u32, target.height() as u32)?
    };
    let result = fit_triplane(&target, &cam, &decoder, &init, &cfg.fit.options, &cfg.render)?;
    let dir = prepare_out(cfg)?;
    let tpl = dir.join("fitted.tpl");
    result.triplane.save(&tpl)?;
    let trace = dir.join("losses.txt");
    let text: String = result
        .losses
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{i} {l:?}\n"))
        .collect();
    fs::write(&trace, text).map_err(|e| Error::from(e).in_file(&trace))?;
    let png = dir.join("fitted.png");
    render(&result.triplane, &decoder, &cam, &cfg.render)?
        .rgb
        .save_png(&png)?;
    Ok(vec![tpl, trace, png])
}

/// `mmrender`: writes `mesh.png`, `mesh_mask.png`, `mesh_depth.fmp`.
pub fn cmd_mmrender(cfg: &PipelineConfig, frontal: bool) -> Result<Vec<PathBuf>> {
    let p = &cfg.paths;
    let basis = MorphableBasis::load(need(&p.basis, "basis", "mmrender")?)?;
    let coeffs = p
        .coefficients
        .as_ref()
        .map(CoefficientFile::load)
        .transpose()?
        .unwrap_or_default();
    let c = coeffs.coefficients_for(&basis);
    let r = if frontal {
        let cam = cfg.front_camera()?;
        frontal_expression_render(&basis, &c.alpha, &c.beta, &cam, cam.width(), cam.height())?
    } else {
        let cam = Camera::load(need(&p.camera, "camera", "mmrender")?)?;
        render_mesh(&basis, &c, &cam, cam.width(), cam.height())?
    };
    write_mesh(&r, prepare_out(cfg)?, "mesh")
}

fn png_stems(dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::from(e).in_file(dir))?;
    let mut stems = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::from(e).in_file(dir))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(s) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(s.to_string());
            }
        }
    }
    stems.sort();
    Ok(stems)
}

/// Pairs `pred_dir/<id>.png` with `gt_dir/<id>.png`. Keypoint and
/// coefficient directories, when configured, must hold `<id>.txt` for every
/// pair.
pub fn load_eval_pairs(cfg: &PipelineConfig) -> Result<Vec<PairInput>> {
    let p = &cfg.paths;
    let pred_dir = need(&p.pred_dir, "pred_dir", "eval")?;
    let gt_dir = need(&p.gt_dir, "gt_dir", "eval")?;
    let pred = png_stems(pred_dir)?;
    let gt = png_stems(gt_dir)?;
    let orphans: Vec<String> = pred
        .iter()
        .filter(|s| !gt.contains(s))
        .map(|s| format!("{}", pred_dir.join(format!("{s}.png")).display()))
        .chain(
            gt.iter()
                .filter(|s| !pred.contains(s))
                .map(|s| format!("{}", gt_dir.join(format!("{s}.png")).display())),
        )
        .collect();
    if !orphans.is_empty() {
        return Err(Error::Input(format!("unpaired images: {}", orphans.join(", "))));
    }
    let side = |dir: &Option<PathBuf>, id: &str| dir.as_ref().map(|d| d.join(format!("{id}.txt")));
    pred.iter()
        .map(|id| {
            Ok(PairInput {
                id: id.clone(),
                pred: Image::load_png(pred_dir.join(format!("{id}.png")))?,
                gt: Image::load_png(gt_dir.join(format!("{id}.png")))?,
                pred_keypoints: side(&p.pred_keypoints, id).map(KeypointSet::load).transpose()?,
                gt_keypoints: side(&p.gt_keypoints, id).map(KeypointSet::load).transpose()?,
                pred_coeffs: side(&p.pred_coefficients, id).map(CoefficientFile::load).transpose()?,
                gt_coeffs: side(&p.gt_coefficients, id).map(CoefficientFile::load).transpose()?,
            })
        })
        .collect()
}

/// `eval`: writes `report.txt`.
pub fn cmd_eval(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let pairs = load_eval_pairs(cfg)?;
    let report = MetricReport::evaluate(&pairs, cfg.align);
    for (id, reason) in &report.skipped {
        eprintln!("triavatar: skipped pair {id}: {reason}");
    }
    let path = prepare_out(cfg)?.join("report.txt");
    report.save(&path)?;
    Ok(vec![path])
}

/// `lift`: writes `cloud.npc`. Pixels are lifted where `paths.valid_mask`
/// is set (all pixels when absent).
pub fn cmd_lift(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let p = &cfg.paths;
    let features = FeatureImage::load(need(&p.features, "features", "lift")?)?;
    let depth = FloatMap::load(need(&p.depth, "depth", "lift")?)?.to_image();
    let cam = Camera::load(need(&p.camera, "camera", "lift")?)?;
    let valid = match &p.valid_mask {
        Some(m) => PixelMask::load_png(m)?,
        None => PixelMask::new(depth.width(), depth.height(), true),
    };
    let features = match &p.appearance_mask {
        Some(m) => crate::lifting::mask_apply(
            &features,
            &PixelMask::load_png(m)?.resize_nearest(features.width(), features.height()),
        )?,
        None => features,
    };
    let cloud = lift(&features, &depth, &cam, &valid)?;
    let path = prepare_out(cfg)?.join("cloud.npc");
    cloud.save(&path)?;
    Ok(vec![path])
}

/// `rasterize`: writes `raster.tpl` at the `[lift]` resolution and extent.
pub fn cmd_rasterize(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let cloud = NeuralPointCloud::load(need(&cfg.paths.cloud, "cloud", "rasterize")?)?;
    let t = rasterize(&cloud, cloud.channels(), cfg.lift.resolution, cfg.lift.extent)?;
    let path = prepare_out(cfg)?.join("raster.tpl");
    t.save(&path)?;
    Ok(vec![path])
}

/// `tpl` actions; `info` returns its report text.
pub fn cmd_tpl(action: &TplAction) -> Result<String> {
    match action {
        TplAction::Info { file } => {
            let t = TriPlane::load(file)?;
            let d = t.data();
            let (lo, hi) = d
                .iter()
                .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            let mean = d.iter().map(|&v| v as f64).sum::<f64>() / d.len() as f64;
            Ok(format!(
                "planes 3\nchannels {}\nresolution {}\nextent {}\nmin {lo}\nmax {hi}\nmean {mean}\ntv {}\n",
                t.channels(),
                t.resolution(),
                t.extent(),
                t.tv_loss()
            ))
        }
        TplAction::Zeros {
            channels,
            resolution,
            extent,
            output,
        } => {
            TriPlane::zeros(*channels, *resolution, *extent)?.save(output)?;
            Ok(String::new())
        }
        TplAction::Add { a, b, output } => {
            TriPlane::load(a)?.add(&TriPlane::load(b)?)?.save(output)?;
            Ok(String::new())
        }
        TplAction::Slice {
            file,
            plane,
            channel,
            output,
        } => {
            let t = TriPlane::load(file)?;
            if *channel >= t.channels() {
                return Err(Error::Parameter(format!(
                    "channel {channel} of a {}-channel tri-plane",
                    t.channels()
                )));
            }
            let r = t.resolution();
            let plane = Plane::from(*plane);
            let mut data = Vec::with_capacity(r * r);
            for row in 0..r {
                for col in 0..r {
                    data.push(t.get(plane, *channel, row, col));
                }
            }
            FloatMap {
                width: r,
                height: r,
                data,
            }
            .save(output)?;
            Ok(String::new())
        }
    }
}

/// Builds the effective config: file (from `--config` or the environment),
/// then `--set` overrides, then the dedicated flags.
pub fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut doc = match &cli.config {
        Some(path) => ConfigDoc::load(path)?,
        None => ConfigDoc::default(),
    };
    for o in &cli.overrides {
        doc.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        doc.set("render", "seed", &seed.to_string());
    }
    let mut cfg = PipelineConfig::from_doc(&doc)?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    if let Command::Tpl { action } = &cli.command {
        print!("{}", cmd_tpl(action)?);
        return Ok(());
    }
    let mut cfg = resolve_config(cli)?;
    let written = match &cli.command {
        Command::Render => cmd_render(&cfg)?,
        Command::Reenact => cmd_reenact(&cfg)?,
        Command::Fit => cmd_fit(&cfg)?,
        Command::Mmrender { frontal } => cmd_mmrender(&cfg, *frontal)?,
        Command::Eval { no_align } => {
            cfg.align &= !no_align;
            cmd_eval(&cfg)?
        }
        Command::Lift => cmd_lift(&cfg)?,
        Command::Rasterize => cmd_rasterize(&cfg)?,
        Command::Tpl { .. } => unreachable!("handled above"),
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("triavatar: error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_global_flags() {
        let cli = Cli::try_parse_from([
            "triavatar",
            "eval",
            "--no-align",
            "--out",
            "o",
            "--set",
            "render.samples=8",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Eval { no_align: true }));
        assert_eq!(cli.out, Some(PathBuf::from("o")));
        assert_eq!(cli.overrides, vec!["render.samples=8".to_string()]);
    }

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(exit_code(&Error::Parameter("x".into())), 2);
        assert_eq!(exit_code(&Error::Diverged { step: 3 }), 4);
        let wrapped = Error::Truncated { offset: 4, needed: 2 }.in_file("a.tpl");
        assert_eq!(exit_code(&wrapped), 3);
        assert!(wrapped.to_string().contains("a.tpl") && wrapped.to_string().contains("offset 4"));
    }

    #[test]
    fn missing_path_is_usage_error() {
        let e = cmd_render(&PipelineConfig::default()).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }
}
