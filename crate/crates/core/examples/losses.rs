//! Evaluates the training objectives on renders of a random tri-plane: the
//! supervision triplet, neutral-expression loss, adversarial term and the
//! two stage totals.

#[path = "../tests/common/mod.rs"]
mod common;

use common::{frontal_camera, random_triplane};
use triavatar::morphable::neutral_render;
use triavatar::objectives::*;
use triavatar::{render, DecoderWeights, LossWeights, MorphableBasis, RenderConfig};

fn main() -> triavatar::Result<()> {
    let cam = frontal_camera(32, 32, 30.0, 4.0);
    let w = DecoderWeights::default_random(8, 1)?;
    let cfg = RenderConfig {
        samples_per_ray: 24,
        ..Default::default()
    };
    let tc = random_triplane(8, 16, 1.0, 0.5, 1);
    let te = random_triplane(8, 16, 1.0, 0.1, 2);
    let tp = random_triplane(8, 16, 1.0, 0.1, 3);
    let tce = tc.add(&te)?;
    let trip = SupervisionTriplet::new(
        render(&tc, &w, &cam, &cfg)?,
        render(&tce, &w, &cam, &cfg)?,
        render(&tce.add(&tp)?, &w, &cam, &cfg)?,
    )?;
    let target = render(&random_triplane(8, 16, 1.0, 0.5, 4), &w, &cam, &cfg)?.rgb;

    let phi = PoolPyramid::default();
    let (l1, perceptual) = reconstruction_losses(&trip, &target, &phi)?;
    let basis = MorphableBasis::synthetic_head();
    let neu = neutral_render(&basis, &[0.0; 4], &cam, 32, 32)?;
    let parts = Stage1Parts {
        l1,
        perceptual,
        tv: tc.tv_loss(),
        neutral: neutral_loss(&trip.i_c, &neu, &phi)?,
    };
    let weights = LossWeights::default();
    let s1 = stage1_total(&parts, &weights)?;

    let critic = LinearScorer {
        weights: vec![0.5, -0.5, 0.25, -0.25, 0.5, 0.0],
        bias: -0.1,
    };
    let high = target.resize_bilinear(64, 64);
    let adv = adversarial_loss(&trip.i_cep.rgb, &high, &critic)?;
    println!("{parts:#?}");
    println!("stage 1 total {s1:.5}");
    println!(
        "adversarial {adv:.5}, stage 2 total {:.5}",
        stage2_total(s1, adv, &weights)?
    );
    Ok(())
}
