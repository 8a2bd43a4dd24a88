//! Ray-marched volume rendering of tri-plane fields, its reverse pass with
//! respect to the plane features, and a gradient-descent fitting loop.
//!
//! Each ray is sampled uniformly between its entry and exit of the
//! tri-plane cube (intersected with the camera's near/far range). Samples
//! sit at interval midpoints, or are jittered inside their interval when
//! stratified. With `alpha_i = 1 - exp(-sigma_i * delta)` and
//! `T_i = prod_{j<i} (1 - alpha_j)`, a ray's color is
//! `sum_i T_i alpha_i c_i + T_N * background`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decoder::{DecoderScratch, DecoderWeights};
use crate::error::{Error, Result};
use crate::geometry::{Camera, Ray};
use crate::imaging::Image;
use crate::triplane::{PlaneTaps, TriPlane, TriPlaneGradient};

/// Below this accumulated weight a ray's depth falls back to `far`.
pub const DEPTH_WEIGHT_FLOOR: f64 = 1e-6;

/// Rays per reverse-pass chunk. Fixed so that gradient accumulation order
/// never depends on the thread count.
const BACKWARD_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub samples_per_ray: usize,
    pub stratified: bool,
    pub background: [f64; 3],
    /// Seed for stratified jitter; ignored for midpoint sampling.
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            samples_per_ray: 64,
            stratified: false,
            background: [0.0; 3],
            seed: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_ray < 2 {
            return Err(Error::Parameter(format!(
                "samples_per_ray {} < 2",
                self.samples_per_ray
            )));
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Parameter(format!(
                "background {:?} outside [0, 1]",
                self.background
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    /// `H x W x 3`.
    pub rgb: Image,
    /// Expected termination distance; `far` where nothing was hit.
    pub depth: Image,
    /// Accumulated opacity.
    pub alpha: Image,
}

/// Per-ray result of [`render_rays`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub rgb: [f64; 3],
    pub depth: f64,
    pub alpha: f64,
}

/// Every intermediate of one ray's compositing.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTrace {
    pub ts: Vec<f64>,
    pub delta: f64,
    pub densities: Vec<f64>,
    pub colors: Vec<[f64; 3]>,
    /// Transmittance before each sample.
    pub transmittance: Vec<f64>,
    pub weights: Vec<f64>,
    pub final_transmittance: f64,
    pub result: RaySample,
}

struct Marcher<'a> {
    triplane: &'a TriPlane,
    decoder: &'a DecoderWeights,
    cfg: &'a RenderConfig,
    near: f64,
    far: f64,
}

#[derive(Default)]
struct Workspace {
    feature: Vec<f64>,
    scratch: Vec<DecoderScratch>,
    ts: Vec<f64>,
    sigma: Vec<f64>,
    color: Vec<[f64; 3]>,
    trans: Vec<f64>,
    weight: Vec<f64>,
    feat_grad: Vec<f64>,
}

/// Feature-space gradient of one ray, ready to be scattered into planes.
#[derive(Default)]
struct RayGrad {
    taps: Vec<[PlaneTaps; 3]>,
    /// `taps.len() x channels`.
    feature_grads: Vec<f64>,
}

impl<'a> Marcher<'a> {
    fn new(
        triplane: &'a TriPlane,
        decoder: &'a DecoderWeights,
        cfg: &'a RenderConfig,
        near: f64,
        far: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        if triplane.channels() != decoder.input_width() {
            return Err(Error::Shape(format!(
                "tri-plane has {} channels but decoder expects {}",
                triplane.channels(),
                decoder.input_width()
            )));
        }
        if !(near >= 0.0 && near < far) {
            return Err(Error::Parameter(format!("invalid ray bounds [{near}, {far}]")));
        }
        Ok(Marcher {
            triplane,
            decoder,
            cfg,
            near,
            far,
        })
    }

    /// Fills `ws.ts` with sample positions and returns the interval length.
    fn place_samples(&self, ray: &Ray, index: u64, ws: &mut Workspace) -> f64 {
        ws.ts.clear();
        let Some((enter, exit)) = ray.cube_interval(self.triplane.extent()) else {
            return 0.0;
        };
        let t0 = enter.max(self.near);
        let t1 = exit.min(self.far);
        if !(t1 > t0) {
            return 0.0;
        }
        let n = self.cfg.samples_per_ray;
        let delta = (t1 - t0) / n as f64;
        if self.cfg.stratified {
            let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            ws.ts
                .extend((0..n).map(|i| t0 + (i as f64 + rng.random::<f64>()) * delta));
        } else {
            ws.ts.extend((0..n).map(|i| t0 + (i as f64 + 0.5) * delta));
        }
        delta
    }

    /// Forward compositing; leaves per-sample intermediates in `ws`.
    fn march(&self, ray: &Ray, index: u64, ws: &mut Workspace, keep_scratch: bool) -> (RaySample, f64, f64) {
        let delta = self.place_samples(ray, index, ws);
        let n = ws.ts.len();
        ws.sigma.clear();
        ws.color.clear();
        ws.trans.clear();
        ws.weight.clear();
        ws.feature.resize(self.triplane.channels(), 0.0);
        if keep_scratch && ws.scratch.len() < n {
            ws.scratch.resize_with(n, DecoderScratch::default);
        } else if ws.scratch.is_empty() {
            ws.scratch.push(DecoderScratch::default());
        }

        let mut transmittance = 1.0;
        let mut rgb = [0.0; 3];
        let mut weight_sum = 0.0;
        let mut depth_acc = 0.0;
        for i in 0..n {
            let t = ws.ts[i];
            let p = ray.at(t);
            self.triplane.sample_into([p.x, p.y, p.z], &mut ws.feature);
            let scratch = &mut ws.scratch[if keep_scratch { i } else { 0 }];
            let out = self.decoder.forward(&ws.feature, scratch);
            let alpha = 1.0 - (-out.density * delta).exp();
            let w = transmittance * alpha;
            ws.sigma.push(out.density);
            ws.color.push(out.color);
            ws.trans.push(transmittance);
            ws.weight.push(w);
            for k in 0..3 {
                rgb[k] += w * out.color[k];
            }
            weight_sum += w;
            depth_acc += w * t;
            transmittance *= 1.0 - alpha;
        }
        for k in 0..3 {
            rgb[k] += (1.0 - weight_sum) * self.cfg.background[k];
        }
        let depth = if weight_sum > DEPTH_WEIGHT_FLOOR {
            depth_acc / weight_sum
        } else {
            self.far
        };
        (
            RaySample {
                rgb,
                depth,
                alpha: weight_sum,
            },
            transmittance,
            delta,
        )
    }

    /// Reverse pass for `L = <g, rgb>`; expects `march(.., keep_scratch = true)`
    /// to have just run on the same ray.
    fn backward(&self, ray: &Ray, ws: &mut Workspace, final_t: f64, delta: f64, g: [f64; 3], out: &mut RayGrad) {
        let channels = self.triplane.channels();
        let n = ws.ts.len();
        out.taps.clear();
        out.feature_grads.clear();
        if n == 0 || g == [0.0; 3] {
            return;
        }
        ws.feat_grad.resize(channels, 0.0);
        // Color remaining behind sample i: sum_{j>i} w_j c_j + T_N * background.
        let mut behind = [0.0; 3];
        for k in 0..3 {
            behind[k] = final_t * self.cfg.background[k];
        }
        out.taps.resize(n, self.triplane.taps([0.0; 3]));
        out.feature_grads.resize(n * channels, 0.0);
        for i in (0..n).rev() {
            let c = ws.color[i];
            let w = ws.weight[i];
            let t_after = ws.trans[i] * (-ws.sigma[i] * delta).exp();
            let d_sigma = delta * (0..3).map(|k| g[k] * (t_after * c[k] - behind[k])).sum::<f64>();
            let d_color = [w * g[0], w * g[1], w * g[2]];
            self.decoder
                .backward(&mut ws.scratch[i], d_sigma, d_color, &mut ws.feat_grad);
            out.feature_grads[i * channels..(i + 1) * channels].copy_from_slice(&ws.feat_grad);
            let p = ray.at(ws.ts[i]);
            out.taps[i] = self.triplane.taps([p.x, p.y, p.z]);
            for k in 0..3 {
                behind[k] += w * c[k];
            }
        }
    }
}

fn check_finite(s: &RaySample, index: usize) -> Result<()> {
    if s.rgb.iter().all(|v| v.is_finite()) && s.depth.is_finite() && s.alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("ray {index} produced non-finite output")))
    }
}

fn camera_rays(cam: &Camera) -> Vec<Ray> {
    let (w, h) = (cam.width(), cam.height());
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| cam.ray_through(x as f64 + 0.5, y as f64 + 0.5))
        .collect()
}

/// Renders every pixel of `cam`.
pub fn render(t: &TriPlane, w: &DecoderWeights, cam: &Camera, cfg: &RenderConfig) -> Result<RenderOutput> {
    let rays = camera_rays(cam);
    let samples = render_rays(t, w, &rays, cam.near(), cam.far(), cfg)?;
    let (width, height) = (cam.width() as usize, cam.height() as usize);
    let rgb = samples.iter().flat_map(|s| s.rgb).collect();
    let depth = samples.iter().map(|s| s.depth).collect();
    let alpha = samples.iter().map(|s| s.alpha).collect();
    Ok(RenderOutput {
        rgb: Image::from_vec(width, height, 3, rgb)?,
        depth: Image::from_vec(width, height, 1, depth)?,
        alpha: Image::from_vec(width, height, 1, alpha)?,
    })
}

/// Renders arbitrary rays, sampled within `[near, far]`. A ray's stratified
/// jitter depends only on its index in `rays`.
pub fn render_rays(
    t: &TriPlane,
    w: &DecoderWeights,
    rays: &[Ray],
    near: f64,
    far: f64,
    cfg: &RenderConfig,
) -> Result<Vec<RaySample>> {
    let marcher = Marcher::new(t, w, cfg, near, far)?;
    rays.par_iter()
        .enumerate()
        .map_init(Workspace::default, |ws, (i, ray)| {
            let (s, _, _) = marcher.march(ray, i as u64, ws, false);
            check_finite(&s, i)?;
            Ok(s)
        })
        .collect()
}

/// Full compositing record of a single ray (treated as ray index 0 for
/// stratified jitter).
pub fn trace_ray(
    t: &TriPlane,
    w: &DecoderWeights,
    ray: &Ray,
    near: f64,
    far: f64,
    cfg: &RenderConfig,
) -> Result<RayTrace> {
    let marcher = Marcher::new(t, w, cfg, near, far)?;
    let mut ws = Workspace::default();
    let (result, final_transmittance, delta) = marcher.march(ray, 0, &mut ws, false);
    check_finite(&result, 0)?;
    Ok(RayTrace {
        ts: ws.ts,
        delta,
        densities: ws.sigma,
        colors: ws.color,
        transmittance: ws.trans,
        weights: ws.weight,
        final_transmittance,
        result,
    })
}

/// Forward plus reverse pass over all pixels. `pixel_grad` maps a pixel
/// index and its rendered color to `dL/d rgb` for that pixel. Returns the
/// rendered colors and `dL/d features`.
fn forward_backward(
    t: &TriPlane,
    w: &DecoderWeights,
    cam: &Camera,
    cfg: &RenderConfig,
    pixel_grad: impl Fn(usize, &[f64; 3]) -> [f64; 3] + Sync,
) -> Result<(Vec<[f64; 3]>, TriPlaneGradient)> {
    if cfg.stratified {
        return Err(Error::Parameter(
            "reverse pass requires midpoint sampling (stratified = false)".into(),
        ));
    }
    let marcher = Marcher::new(t, w, cfg, cam.near(), cam.far())?;
    let rays = camera_rays(cam);
    let channels = t.channels();
    let stride = t.resolution() * t.resolution();
    let mut grad = TriPlaneGradient::zeros_like(t);
    let mut colors = Vec::with_capacity(rays.len());

    for (chunk_idx, chunk) in rays.chunks(BACKWARD_CHUNK).enumerate() {
        let base = chunk_idx * BACKWARD_CHUNK;
        let per_ray: Vec<Result<([f64; 3], RayGrad)>> = chunk
            .par_iter()
            .enumerate()
            .map_init(Workspace::default, |ws, (j, ray)| {
                let index = base + j;
                let (s, final_t, delta) = marcher.march(ray, index as u64, ws, true);
                check_finite(&s, index)?;
                let g = pixel_grad(index, &s.rgb);
                let mut rg = RayGrad::default();
                marcher.backward(ray, ws, final_t, delta, g, &mut rg);
                Ok((s.rgb, rg))
            })
            .collect();
        // Sequential scatter in ray order keeps the sum bitwise reproducible.
        for item in per_ray {
            let (rgb, rg) = item?;
            colors.push(rgb);
            for (taps, fg) in rg.taps.iter().zip(rg.feature_grads.chunks_exact(channels)) {
                for plane in taps {
                    for (&off, &wt) in plane.offsets.iter().zip(&plane.weights) {
                        if wt == 0.0 {
                            continue;
                        }
                        for (c, &g) in fg.iter().enumerate() {
                            grad.data[off + c * stride] += wt * g;
                        }
                    }
                }
            }
        }
    }
    Ok((colors, grad))
}

/// Gradient of `L = sum_pixels <loss_gradient, rgb>` with respect to every
/// tri-plane feature. Requires midpoint sampling.
pub fn render_backward(
    t: &TriPlane,
    w: &DecoderWeights,
    cam: &Camera,
    cfg: &RenderConfig,
    loss_gradient: &Image,
) -> Result<TriPlaneGradient> {
    let (width, height) = (cam.width() as usize, cam.height() as usize);
    if loss_gradient.width() != width || loss_gradient.height() != height || loss_gradient.channels() != 3 {
        return Err(Error::Shape(format!(
            "loss gradient is {}x{}x{}, render is {width}x{height}x3",
            loss_gradient.width(),
            loss_gradient.height(),
            loss_gradient.channels()
        )));
    }
    let data = loss_gradient.data();
    let (_, grad) = forward_backward(t, w, cam, cfg, |i, _| [data[3 * i], data[3 * i + 1], data[3 * i + 2]])?;
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub steps: usize,
    pub step_size: f64,
    pub lambda_tv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub triplane: TriPlane,
    /// Objective value at the start of each step.
    pub losses: Vec<f64>,
}

/// Mean absolute error against `target` plus `lambda_tv * tv_loss`,
/// minimised by plain gradient descent on the tri-plane features with the
/// decoder frozen. The L1 subgradient at zero residual is taken as zero.
pub fn fit_triplane(
    target: &Image,
    cam: &Camera,
    w: &DecoderWeights,
    init: &TriPlane,
    opts: &FitOptions,
    cfg: &RenderConfig,
) -> Result<FitResult> {
    fit_triplane_with(target, cam, w, init, opts, cfg, |_, _| {})
}

/// [`fit_triplane`] with a callback receiving `(step, loss)` after each
/// step's loss is evaluated.
pub fn fit_triplane_with(
    target: &Image,
    cam: &Camera,
    w: &DecoderWeights,
    init: &TriPlane,
    opts: &FitOptions,
    cfg: &RenderConfig,
    mut on_step: impl FnMut(usize, f64),
) -> Result<FitResult> {
    if opts.steps == 0 {
        return Err(Error::Parameter("fit needs at least one step".into()));
    }
    if !(opts.step_size.is_finite() && opts.step_size > 0.0) {
        return Err(Error::Parameter(format!(
            "step size {} must be positive",
            opts.step_size
        )));
    }
    if !(opts.lambda_tv.is_finite() && opts.lambda_tv >= 0.0) {
        return Err(Error::Parameter(format!(
            "lambda_tv {} must be non-negative",
            opts.lambda_tv
        )));
    }
    if cfg.stratified {
        return Err(Error::Parameter(
            "fitting requires midpoint sampling (stratified = false)".into(),
        ));
    }
    let (width, height) = (cam.width() as usize, cam.height() as usize);
    if target.width() != width || target.height() != height || target.channels() != 3 {
        return Err(Error::Shape(format!(
            "target is {}x{}x{}, camera renders {width}x{height}x3",
            target.width(),
            target.height(),
            target.channels()
        )));
    }
    let norm = 1.0 / (3 * width * height) as f64;
    let tdata = target.data();
    let mut tri = init.clone();
    let mut losses = Vec::with_capacity(opts.steps);

    for step in 0..opts.steps {
        let (colors, mut grad) = forward_backward(&tri, w, cam, cfg, |i, rgb| {
            let mut g = [0.0; 3];
            for k in 0..3 {
                let r = rgb[k] - tdata[3 * i + k];
                g[k] = if r > 0.0 {
                    norm
                } else if r < 0.0 {
                    -norm
                } else {
                    0.0
                };
            }
            g
        })?;
        let l1: f64 = colors
            .iter()
            .enumerate()
            .map(|(i, rgb)| (0..3).map(|k| (rgb[k] - tdata[3 * i + k]).abs()).sum::<f64>())
            .sum::<f64>()
            * norm;
        let loss = if opts.lambda_tv > 0.0 {
            grad.add_scaled(&tri.tv_gradient(), opts.lambda_tv);
            l1 + opts.lambda_tv * tri.tv_loss()
        } else {
            l1
        };
        if !loss.is_finite() || grad.data.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step });
        }
        losses.push(loss);
        on_step(step, loss);
        tri.descend(&grad, opts.step_size)?;
        if tri.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step });
        }
    }
    Ok(FitResult { triplane: tri, losses })
}
