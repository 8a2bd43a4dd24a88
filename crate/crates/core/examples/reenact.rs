//! Full reenactment on synthetic data: lift a source image's appearance
//! features into `T_p`, add an expression plane, and render
//! `(T_c + T_e) + T_p` from a new viewpoint.
//!
//!     cargo run --example reenact -- [out_dir]

#[path = "../tests/common/mod.rs"]
mod common;

use std::path::PathBuf;

use common::{camera_at, threshold_probe, ProbeColor, TwoSpheres};
use triavatar::pipeline::AppearanceInput;
use triavatar::{reenact, FeatureImage, PixelMask, ReenactJob, RenderConfig, TriPlane};

fn main() -> triavatar::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("reenact"));
    std::fs::create_dir_all(&out)?;

    let scene = TwoSpheres {
        offset: 0.4,
        radius: 0.3,
    };
    let canonical = scene.bake(48, 1.0, 4, None);
    let decoder = threshold_probe(4, scene.threshold(), 100.0, ProbeColor::PassThrough);

    // expression: nudge the density channel up along +y so the spheres swell upward
    let expression = TriPlane::from_fn(
        4,
        48,
        1.0,
        |_, c, _, v| if c == 0 { (0.02 * v.max(0.0)) as f32 } else { 0.0 },
    )?;

    // appearance features: a color gradient, with a masked-out band standing in for the eyes
    let features = FeatureImage::from_fn(4, 48, 48, |c, y, x| match c {
        0 => 0.0,
        1 => x as f32 / 16.0 - 1.5,
        2 => y as f32 / 16.0 - 1.5,
        _ => 0.5,
    });
    let mask = PixelMask::from_fn(48, 48, |_, y| !(20..24).contains(&y));

    let job = ReenactJob {
        canonical,
        expression: Some(expression),
        appearance: Some(AppearanceInput {
            features,
            mask: Some(mask),
            source_camera: camera_at(48, 48, 40.0, [0.0, 0.0, 2.8], 0.5, 6.0),
        }),
        target_camera: camera_at(64, 48, 40.0, [1.2, 0.4, 2.4], 0.5, 6.0),
    };
    let cfg = RenderConfig {
        samples_per_ray: 64,
        ..Default::default()
    };
    let r = reenact(&job, &decoder, &cfg, 0.5)?;
    r.output.rgb.save_png(out.join("output.png"))?;
    r.appearance_triplane
        .as_ref()
        .expect("appearance given")
        .save(out.join("appearance.tpl"))?;
    println!(
        "lifted {} points; wrote {}",
        r.cloud.map_or(0, |c| c.len()),
        out.display()
    );
    Ok(())
}
