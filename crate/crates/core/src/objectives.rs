//! Training objectives: image L1, feature-space perceptual distance, the
//! neutral-expression loss, multi-branch reconstruction supervision, the
//! softplus adversarial term, and the two stage totals.
//!
//! Every norm is a mean of absolute element differences so values do not
//! depend on image resolution.

use crate::decoder::softplus;
use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::lifting::mask_apply;
use crate::morphable::MeshRender;
use crate::render::RenderOutput;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_1: f64,
    pub lambda_p: f64,
    pub lambda_tv: f64,
    pub lambda_neutral: f64,
    pub lambda_adv: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_1: 1.0,
            lambda_p: 1.0,
            lambda_tv: 1.0,
            lambda_neutral: 1.0,
            lambda_adv: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_1", self.lambda_1),
            ("lambda_p", self.lambda_p),
            ("lambda_tv", self.lambda_tv),
            ("lambda_neutral", self.lambda_neutral),
            ("lambda_adv", self.lambda_adv),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!(
                    "{name} = {v} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

/// Renders of the canonical, canonical+expression and full tri-plane sums,
/// all at the target camera.
#[derive(Debug, Clone)]
pub struct SupervisionTriplet {
    pub i_c: RenderOutput,
    pub i_ce: RenderOutput,
    pub i_cep: RenderOutput,
}

impl SupervisionTriplet {
    pub fn new(i_c: RenderOutput, i_ce: RenderOutput, i_cep: RenderOutput) -> Result<Self> {
        if !i_c.rgb.same_shape(&i_ce.rgb) || !i_c.rgb.same_shape(&i_cep.rgb) {
            return Err(Error::Shape("supervision renders differ in size".into()));
        }
        Ok(SupervisionTriplet { i_c, i_ce, i_cep })
    }

    fn renders(&self) -> [&Image; 3] {
        [&self.i_c.rgb, &self.i_ce.rgb, &self.i_cep.rgb]
    }
}

/// Deterministic image-to-features map used by the perceptual term.
pub trait FeatureExtractor {
    fn extract(&self, img: &Image) -> Result<Vec<Image>>;
}

/// Returns the image itself as its only feature map.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityExtractor;

impl FeatureExtractor for IdentityExtractor {
    fn extract(&self, img: &Image) -> Result<Vec<Image>> {
        Ok(vec![img.clone()])
    }
}

/// Average-pooling pyramid: the image, then repeated 2x2 box downsampling
/// (trailing odd rows/columns dropped). A cheap structural stand-in for a
/// pretrained network's features; it is not a learned perceptual metric.
#[derive(Debug, Clone, Copy)]
pub struct PoolPyramid {
    pub levels: usize,
}

impl Default for PoolPyramid {
    fn default() -> Self {
        PoolPyramid { levels: 3 }
    }
}

fn pool2(img: &Image) -> Image {
    let (w, h, ch) = (img.width() / 2, img.height() / 2, img.channels());
    Image::from_fn(w, h, ch, |x, y, c| {
        let (sx, sy) = (2 * x, 2 * y);
        (img.get(sx, sy, c) + img.get(sx + 1, sy, c) + img.get(sx, sy + 1, c) + img.get(sx + 1, sy + 1, c)) / 4.0
    })
}

impl FeatureExtractor for PoolPyramid {
    fn extract(&self, img: &Image) -> Result<Vec<Image>> {
        if self.levels == 0 {
            return Err(Error::Parameter("pyramid needs at least one level".into()));
        }
        let mut out = vec![img.clone()];
        while out.len() < self.levels {
            let last = out.last().expect("non-empty");
            if last.width() < 2 || last.height() < 2 {
                return Err(Error::Parameter(format!(
                    "{}x{} image too small for a {}-level pyramid",
                    img.width(),
                    img.height(),
                    self.levels
                )));
            }
            let next = pool2(last);
            out.push(next);
        }
        Ok(out)
    }
}

/// Mean absolute difference over all pixels and channels.
pub fn l1_image(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    if a.data().is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / a.data().len() as f64)
}

/// Sum over extractor levels of the mean absolute feature difference.
pub fn perceptual(a: &Image, b: &Image, phi: &dyn FeatureExtractor) -> Result<f64> {
    a.check_same_shape(b)?;
    let fa = phi.extract(a)?;
    let fb = phi.extract(b)?;
    if fa.len() != fb.len() {
        return Err(Error::Shape(format!(
            "extractor returned {} and {} levels",
            fa.len(),
            fb.len()
        )));
    }
    let mut total = 0.0;
    for (level, (x, y)) in fa.iter().zip(&fb).enumerate() {
        let d = l1_image(x, y).map_err(|e| Error::Shape(format!("feature level {level}: {e}")))?;
        if !d.is_finite() {
            return Err(Error::Numeric(format!("feature level {level} is not finite")));
        }
        total += d;
    }
    Ok(total)
}

/// Keeps the canonical render close to the neutral 3DMM render inside the
/// facial mask: `|I_neu - I_c*M| + |phi(I_neu) - phi(I_c*M)|`.
pub fn neutral_loss(i_c: &RenderOutput, i_neu: &MeshRender, phi: &dyn FeatureExtractor) -> Result<f64> {
    let masked = mask_apply(&i_c.rgb, &i_neu.mask)?;
    Ok(l1_image(&i_neu.image, &masked)? + perceptual(&i_neu.image, &masked, phi)?)
}

/// `(L1, perceptual)` each summed over the three supervised renders.
pub fn reconstruction_losses(
    trip: &SupervisionTriplet,
    target: &Image,
    phi: &dyn FeatureExtractor,
) -> Result<(f64, f64)> {
    let mut l1 = 0.0;
    let mut lp = 0.0;
    for img in trip.renders() {
        l1 += l1_image(img, target)?;
        lp += perceptual(img, target, phi)?;
    }
    Ok((l1, lp))
}

/// Scalar critic over a 6-channel (upsampled low-res ++ high-res) image.
pub trait Scorer {
    fn score(&self, img: &Image) -> Result<f64>;
}

impl<F: Fn(&Image) -> f64> Scorer for F {
    fn score(&self, img: &Image) -> Result<f64> {
        Ok(self(img))
    }
}

/// `bias + sum_c weights[c] * mean(channel c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Scorer for LinearScorer {
    fn score(&self, img: &Image) -> Result<f64> {
        if img.channels() != self.weights.len() {
            return Err(Error::Shape(format!(
                "scorer expects {} channels, image has {}",
                self.weights.len(),
                img.channels()
            )));
        }
        let n = (img.width() * img.height()).max(1) as f64;
        let mut sums = vec![0.0; img.channels()];
        for px in img.data().chunks_exact(img.channels()) {
            for (s, v) in sums.iter_mut().zip(px) {
                *s += v;
            }
        }
        Ok(self.bias + sums.iter().zip(&self.weights).map(|(s, w)| w * s / n).sum::<f64>())
    }
}

/// `softplus(D(up(low) ++ high))` with bilinear upsampling to the high-res size.
pub fn adversarial_loss(low_res: &Image, high_res: &Image, d: &dyn Scorer) -> Result<f64> {
    if low_res.channels() != high_res.channels() {
        return Err(Error::Shape(format!(
            "low-res has {} channels, high-res has {}",
            low_res.channels(),
            high_res.channels()
        )));
    }
    let up = low_res.resize_bilinear(high_res.width(), high_res.height());
    let joined = up.concat_channels(high_res)?;
    let s = d.score(&joined)?;
    if !s.is_finite() {
        return Err(Error::Numeric(format!("scorer returned {s}")));
    }
    Ok(softplus(s))
}

/// The four stage-one loss values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stage1Parts {
    pub l1: f64,
    pub perceptual: f64,
    pub tv: f64,
    pub neutral: f64,
}

pub fn stage1_total(parts: &Stage1Parts, w: &LossWeights) -> Result<f64> {
    let values = [parts.l1, parts.perceptual, parts.tv, parts.neutral];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite stage-1 loss part in {parts:?}")));
    }
    w.validate()?;
    Ok(w.lambda_1 * parts.l1
        + w.lambda_p * parts.perceptual
        + w.lambda_tv * parts.tv
        + w.lambda_neutral * parts.neutral)
}

pub fn stage2_total(stage1: f64, adv: f64, w: &LossWeights) -> Result<f64> {
    if !stage1.is_finite() || !adv.is_finite() {
        return Err(Error::Numeric(format!("non-finite stage-2 input ({stage1}, {adv})")));
    }
    w.validate()?;
    Ok(stage1 + w.lambda_adv * adv)
}
