//! The reenactment flow on in-memory data: lift source appearance features
//! into a tri-plane, compose it with the canonical and expression planes,
//! and render the result at the target camera.

use crate::decoder::DecoderWeights;
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::imaging::{FeatureImage, PixelMask};
use crate::lifting::{lift, mask_apply, rasterize, NeuralPointCloud};
use crate::render::{render, RenderConfig, RenderOutput};
use crate::triplane::TriPlane;

/// Appearance features of the source image, with an optional mask whose
/// unset pixels (eyes, mouth) are removed before lifting.
#[derive(Debug, Clone)]
pub struct AppearanceInput {
    pub features: FeatureImage,
    pub mask: Option<PixelMask>,
    pub source_camera: Camera,
}

#[derive(Debug, Clone)]
pub struct ReenactJob {
    /// `T_c`.
    pub canonical: TriPlane,
    /// `T_e`; absent means no expression offset.
    pub expression: Option<TriPlane>,
    /// Lifted into `T_p` when present.
    pub appearance: Option<AppearanceInput>,
    pub target_camera: Camera,
}

#[derive(Debug, Clone)]
pub struct ReenactOutput {
    pub output: RenderOutput,
    pub composed: TriPlane,
    pub appearance_triplane: Option<TriPlane>,
    pub cloud: Option<NeuralPointCloud>,
}

/// Builds `T_p`: masks the features, renders the canonical depth at the
/// source camera, lifts pixels whose opacity exceeds `alpha_threshold`, and
/// rasterizes the points at the canonical tri-plane's layout.
pub fn appearance_triplane(
    canonical: &TriPlane,
    decoder: &DecoderWeights,
    input: &AppearanceInput,
    cfg: &RenderConfig,
    alpha_threshold: f64,
) -> Result<(TriPlane, NeuralPointCloud)> {
    if input.features.channels() != canonical.channels() {
        return Err(Error::Shape(format!(
            "appearance features have {} channels, canonical tri-plane has {}",
            input.features.channels(),
            canonical.channels()
        )));
    }
    let features = match &input.mask {
        Some(m) => mask_apply(
            &input.features,
            &m.resize_nearest(input.features.width(), input.features.height()),
        )?,
        None => input.features.clone(),
    };
    let source = render(canonical, decoder, &input.source_camera, cfg)?;
    let valid = PixelMask::from_fn(source.alpha.width(), source.alpha.height(), |x, y| {
        source.alpha.get(x, y, 0) > alpha_threshold
    });
    let cloud = lift(&features, &source.depth, &input.source_camera, &valid)?;
    let tp = rasterize(&cloud, canonical.channels(), canonical.resolution(), canonical.extent())?;
    Ok((tp, cloud))
}

/// `render((T_c + T_e) + T_p, C_t)`, skipping absent terms.
pub fn reenact(
    job: &ReenactJob,
    decoder: &DecoderWeights,
    cfg: &RenderConfig,
    alpha_threshold: f64,
) -> Result<ReenactOutput> {
    let mut composed = job.canonical.clone();
    if let Some(te) = &job.expression {
        composed = composed.add(te)?;
    }
    let (appearance_triplane, cloud) = match &job.appearance {
        Some(input) => {
            let (tp, cloud) = appearance_triplane(&job.canonical, decoder, input, cfg, alpha_threshold)?;
            composed = composed.add(&tp)?;
            (Some(tp), Some(cloud))
        }
        None => (None, None),
    };
    let output = render(&composed, decoder, &job.target_camera, cfg)?;
    Ok(ReenactOutput {
        output,
        composed,
        appearance_triplane,
        cloud,
    })
}
