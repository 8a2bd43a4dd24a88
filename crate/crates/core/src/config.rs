//! Pipeline configuration: an INI-style text file of `[section]` headers
//! and `key = value` lines. Relative paths resolve against the directory
//! holding the file; command-line overrides are applied as
//! `section.key=value` pairs before typing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix4, Vector3};

use crate::binio;
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::objectives::LossWeights;
use crate::render::{FitOptions, RenderConfig};

/// Environment variable naming the config file when `--config` is absent.
pub const CONFIG_ENV: &str = "TRIAVATAR_CONFIG";

#[derive(Debug, Clone, PartialEq)]
struct Value {
    text: String,
    line: usize,
}

/// Untyped `section -> key -> value` document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    sections: BTreeMap<String, BTreeMap<String, Value>>,
    base_dir: PathBuf,
}

impl ConfigDoc {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<ConfigDoc> {
        let mut doc = ConfigDoc {
            base_dir: base_dir.into(),
            ..Default::default()
        };
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Input(format!("line {line_no}: unterminated section header")))?;
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("line {line_no}: expected `key = value`")))?;
            let key = key.trim().to_ascii_lowercase();
            let entries = doc.sections.entry(section.clone()).or_default();
            if entries.contains_key(&key) {
                return Err(Error::Input(format!("line {line_no}: duplicate key `{section}.{key}`")));
            }
            entries.insert(
                key,
                Value {
                    text: value.trim().to_string(),
                    line: line_no,
                },
            );
        }
        Ok(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ConfigDoc> {
        let path = path.as_ref();
        let text = String::from_utf8(binio::read_file(path)?)
            .map_err(|_| Error::Input("config is not UTF-8".into()).in_file(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        ConfigDoc::parse(&text, base).map_err(|e| e.in_file(path))
    }

    /// Sets `section.key` from a `section.key=value` override string.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("override `{spec}` is not `section.key=value`")))?;
        let (section, key) = name
            .split_once('.')
            .ok_or_else(|| Error::Parameter(format!("override `{spec}` has no section")))?;
        self.set(section, key, value);
        Ok(())
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections.entry(section.to_ascii_lowercase()).or_default().insert(
            key.to_ascii_lowercase(),
            Value {
                text: value.trim().to_string(),
                line: 0,
            },
        );
    }

    fn raw(&self, section: &str, key: &str) -> Option<&Value> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn bad(&self, section: &str, key: &str, v: &Value, what: &str) -> Error {
        let place = if v.line == 0 {
            "override".to_string()
        } else {
            format!("line {}", v.line)
        };
        Error::Parameter(format!("{place}: `{section}.{key} = {}` is not {what}", v.text))
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<&str> {
        self.raw(section, key).map(|v| v.text.as_str())
    }

    pub fn get_path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.get_str(section, key).map(|p| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                self.base_dir.join(p)
            }
        })
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.raw(section, key)
            .map(|v| v.text.parse::<f64>().map_err(|_| self.bad(section, key, v, "a number")))
            .transpose()
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.raw(section, key)
            .map(|v| {
                v.text
                    .parse::<usize>()
                    .map_err(|_| self.bad(section, key, v, "a count"))
            })
            .transpose()
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.raw(section, key)
            .map(|v| {
                v.text
                    .parse::<u64>()
                    .map_err(|_| self.bad(section, key, v, "an integer"))
            })
            .transpose()
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        self.raw(section, key)
            .map(|v| match v.text.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(self.bad(section, key, v, "a boolean")),
            })
            .transpose()
    }

    pub fn get_floats(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(section, key)
            .map(|v| {
                crate::textfmt::parse_floats(&v.text, v.line).map_err(|_| self.bad(section, key, v, "a number list"))
            })
            .transpose()
    }
}

/// Input files, all optional at parse time; each command checks the ones
/// it needs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathsConfig {
    /// Canonical tri-plane `T_c`.
    pub triplane: Option<PathBuf>,
    /// Expression tri-plane `T_e`.
    pub expression_triplane: Option<PathBuf>,
    /// Ready-made appearance tri-plane `T_p` (skips lifting).
    pub appearance_triplane: Option<PathBuf>,
    /// Source appearance features (feature-image file) to lift into `T_p`.
    pub features: Option<PathBuf>,
    /// Appearance mask PNG; unset pixels (eyes, mouth) are zeroed in the features.
    pub appearance_mask: Option<PathBuf>,
    pub decoder: Option<PathBuf>,
    pub basis: Option<PathBuf>,
    pub camera: Option<PathBuf>,
    pub source_camera: Option<PathBuf>,
    pub target_camera: Option<PathBuf>,
    pub coefficients: Option<PathBuf>,
    pub source_coefficients: Option<PathBuf>,
    pub target_coefficients: Option<PathBuf>,
    pub target_image: Option<PathBuf>,
    pub init_triplane: Option<PathBuf>,
    pub depth: Option<PathBuf>,
    pub valid_mask: Option<PathBuf>,
    pub cloud: Option<PathBuf>,
    pub pred_dir: Option<PathBuf>,
    pub gt_dir: Option<PathBuf>,
    pub pred_keypoints: Option<PathBuf>,
    pub gt_keypoints: Option<PathBuf>,
    pub pred_coefficients: Option<PathBuf>,
    pub gt_coefficients: Option<PathBuf>,
}

/// Fitting schedule and the zero tri-plane used when no init file is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    pub options: FitOptions,
    pub init_resolution: usize,
    pub init_extent: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            options: FitOptions {
                steps: 500,
                step_size: 1.0,
                lambda_tv: 0.0,
            },
            init_resolution: 32,
            init_extent: 1.0,
        }
    }
}

/// The fixed frontal camera used for expression conditioning: identity
/// rotation, positioned `distance` along +z, looking at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontCamera {
    pub width: u32,
    pub height: u32,
    pub vfov_degrees: f64,
    pub distance: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for FrontCamera {
    fn default() -> Self {
        FrontCamera {
            width: 128,
            height: 128,
            vfov_degrees: 30.0,
            distance: 4.0,
            near: 0.1,
            far: 10.0,
        }
    }
}

impl FrontCamera {
    pub fn camera(&self) -> Result<Camera> {
        let pose = Matrix4::new_translation(&Vector3::new(0.0, 0.0, self.distance));
        Camera::from_fov(self.width, self.height, self.vfov_degrees, pose, self.near, self.far)
    }
}

/// Lifting and rasterization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftSettings {
    /// Pixels whose rendered opacity exceeds this are lifted.
    pub alpha_threshold: f64,
    /// Raster layout when no canonical tri-plane fixes it.
    pub resolution: usize,
    pub extent: f64,
}

impl Default for LiftSettings {
    fn default() -> Self {
        LiftSettings {
            alpha_threshold: 0.5,
            resolution: 32,
            extent: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub render: RenderConfig,
    pub fit: FitSettings,
    pub loss: LossWeights,
    pub front: FrontCamera,
    /// Overrides the computed frontal camera when set.
    pub front_camera_file: Option<PathBuf>,
    pub lift: LiftSettings,
    /// Align ground truth to predictions by landmarks before evaluation.
    pub align: bool,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: PathsConfig::default(),
            render: RenderConfig::default(),
            fit: FitSettings::default(),
            loss: LossWeights::default(),
            front: FrontCamera::default(),
            front_camera_file: None,
            lift: LiftSettings::default(),
            align: true,
            out_dir: PathBuf::from("."),
        }
    }
}

const PATH_KEYS: &[&str] = &[
    "triplane",
    "expression_triplane",
    "appearance_triplane",
    "features",
    "appearance_mask",
    "decoder",
    "basis",
    "camera",
    "source_camera",
    "target_camera",
    "coefficients",
    "source_coefficients",
    "target_coefficients",
    "target_image",
    "init_triplane",
    "depth",
    "valid_mask",
    "cloud",
    "pred_dir",
    "gt_dir",
    "pred_keypoints",
    "gt_keypoints",
    "pred_coefficients",
    "gt_coefficients",
];

const KNOWN: &[(&str, &[&str])] = &[
    ("render", &["samples", "stratified", "background", "seed"]),
    (
        "fit",
        &["steps", "step_size", "lambda_tv", "init_resolution", "init_extent"],
    ),
    (
        "loss",
        &["lambda_1", "lambda_p", "lambda_tv", "lambda_neutral", "lambda_adv"],
    ),
    (
        "front",
        &["width", "height", "fov", "distance", "near", "far", "camera"],
    ),
    ("lift", &["alpha_threshold", "resolution", "extent"]),
    ("eval", &["align"]),
    ("output", &["dir"]),
];

impl PipelineConfig {
    pub fn from_doc(doc: &ConfigDoc) -> Result<PipelineConfig> {
        for (section, keys) in &doc.sections {
            let allowed: &[&str] = if section == "paths" {
                PATH_KEYS
            } else {
                KNOWN
                    .iter()
                    .find(|(s, _)| s == section)
                    .map(|(_, k)| *k)
                    .ok_or_else(|| Error::Parameter(format!("unknown config section `[{section}]`")))?
            };
            if let Some((k, v)) = keys.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
                return Err(Error::Parameter(format!(
                    "line {}: unknown key `{section}.{k}`",
                    v.line
                )));
            }
        }

        let mut c = PipelineConfig::default();
        let p = |k: &str| doc.get_path("paths", k);
        c.paths = PathsConfig {
            triplane: p("triplane"),
            expression_triplane: p("expression_triplane"),
            appearance_triplane: p("appearance_triplane"),
            features: p("features"),
            appearance_mask: p("appearance_mask"),
            decoder: p("decoder"),
            basis: p("basis"),
            camera: p("camera"),
            source_camera: p("source_camera"),
            target_camera: p("target_camera"),
            coefficients: p("coefficients"),
            source_coefficients: p("source_coefficients"),
            target_coefficients: p("target_coefficients"),
            target_image: p("target_image"),
            init_triplane: p("init_triplane"),
            depth: p("depth"),
            valid_mask: p("valid_mask"),
            cloud: p("cloud"),
            pred_dir: p("pred_dir"),
            gt_dir: p("gt_dir"),
            pred_keypoints: p("pred_keypoints"),
            gt_keypoints: p("gt_keypoints"),
            pred_coefficients: p("pred_coefficients"),
            gt_coefficients: p("gt_coefficients"),
        };

        let r = &mut c.render;
        r.samples_per_ray = doc.get_usize("render", "samples")?.unwrap_or(r.samples_per_ray);
        r.stratified = doc.get_bool("render", "stratified")?.unwrap_or(r.stratified);
        r.seed = doc.get_u64("render", "seed")?.unwrap_or(r.seed);
        if let Some(bg) = doc.get_floats("render", "background")? {
            r.background = match bg.as_slice() {
                [g] => [*g; 3],
                [a, b, c] => [*a, *b, *c],
                _ => return Err(Error::Parameter("render.background needs 1 or 3 numbers".into())),
            };
        }
        r.validate()?;

        let f = &mut c.fit;
        f.options.steps = doc.get_usize("fit", "steps")?.unwrap_or(f.options.steps);
        f.options.step_size = doc.get_f64("fit", "step_size")?.unwrap_or(f.options.step_size);
        f.options.lambda_tv = doc.get_f64("fit", "lambda_tv")?.unwrap_or(f.options.lambda_tv);
        f.init_resolution = doc.get_usize("fit", "init_resolution")?.unwrap_or(f.init_resolution);
        f.init_extent = doc.get_f64("fit", "init_extent")?.unwrap_or(f.init_extent);

        let l = &mut c.loss;
        l.lambda_1 = doc.get_f64("loss", "lambda_1")?.unwrap_or(l.lambda_1);
        l.lambda_p = doc.get_f64("loss", "lambda_p")?.unwrap_or(l.lambda_p);
        l.lambda_tv = doc.get_f64("loss", "lambda_tv")?.unwrap_or(l.lambda_tv);
        l.lambda_neutral = doc.get_f64("loss", "lambda_neutral")?.unwrap_or(l.lambda_neutral);
        l.lambda_adv = doc.get_f64("loss", "lambda_adv")?.unwrap_or(l.lambda_adv);
        l.validate()?;

        let fr = &mut c.front;
        let dim = |k: &str, d: u32| -> Result<u32> {
            doc.get_usize("front", k)?.map_or(Ok(d), |v| {
                u32::try_from(v).map_err(|_| Error::Parameter(format!("front.{k} too large")))
            })
        };
        fr.width = dim("width", fr.width)?;
        fr.height = dim("height", fr.height)?;
        fr.vfov_degrees = doc.get_f64("front", "fov")?.unwrap_or(fr.vfov_degrees);
        fr.distance = doc.get_f64("front", "distance")?.unwrap_or(fr.distance);
        fr.near = doc.get_f64("front", "near")?.unwrap_or(fr.near);
        fr.far = doc.get_f64("front", "far")?.unwrap_or(fr.far);
        c.front_camera_file = doc.get_path("front", "camera");

        let li = &mut c.lift;
        li.alpha_threshold = doc.get_f64("lift", "alpha_threshold")?.unwrap_or(li.alpha_threshold);
        li.resolution = doc.get_usize("lift", "resolution")?.unwrap_or(li.resolution);
        li.extent = doc.get_f64("lift", "extent")?.unwrap_or(li.extent);

        c.align = doc.get_bool("eval", "align")?.unwrap_or(c.align);
        if let Some(dir) = doc.get_path("output", "dir") {
            c.out_dir = dir;
        }
        Ok(c)
    }

    /// The frontal camera: the configured file if any, else the computed default.
    pub fn front_camera(&self) -> Result<Camera> {
        match &self.front_camera_file {
            Some(p) => Camera::load(p),
            None => self.front.camera(),
        }
    }
}
