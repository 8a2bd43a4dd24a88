//! Fits a zero-initialised tri-plane to a rendered target with the decoder
//! frozen, printing the loss every few steps.
//!
//!     cargo run --release --example fit_triplane -- [steps]

#[path = "../tests/common/mod.rs"]
mod common;

use common::{camera_at, threshold_probe, ProbeColor, TwoSpheres};
use triavatar::render::fit_triplane_with;
use triavatar::{metrics, render, DecoderWeights, FitOptions, RenderConfig, TriPlane};

fn main() -> triavatar::Result<()> {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(150);

    let scene = TwoSpheres {
        offset: 0.4,
        radius: 0.3,
    };
    let probe = threshold_probe(1, scene.threshold(), 30.0, ProbeColor::Logits([1.2, -0.3, 0.4]));
    let cam = camera_at(24, 24, 40.0, [0.3, 0.5, 2.6], 0.5, 5.0);
    let cfg = RenderConfig {
        samples_per_ray: 16,
        ..Default::default()
    };
    let target = render(&scene.bake(64, 1.0, 1, None), &probe, &cam, &cfg)?.rgb;

    let decoder = DecoderWeights::default_random(16, 7)?;
    let init = TriPlane::zeros(16, 24, 1.0)?;
    let opts = FitOptions {
        steps,
        step_size: 1e4,
        lambda_tv: 0.0,
    };
    let fit = fit_triplane_with(&target, &cam, &decoder, &init, &opts, &cfg, |step, loss| {
        if step % 25 == 0 {
            println!("step {step:4}  loss {loss:.5}");
        }
    })?;

    let result = render(&fit.triplane, &decoder, &cam, &cfg)?.rgb;
    println!("final PSNR {:.2} dB", metrics::psnr(&result, &target)?);
    Ok(())
}
