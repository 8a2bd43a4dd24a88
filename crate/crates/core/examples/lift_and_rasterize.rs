//! Lifts a feature image through rendered depth into a point cloud and
//! rasterizes it back onto tri-plane texels.

#[path = "../tests/common/mod.rs"]
mod common;

use common::{camera_at, threshold_probe, ProbeColor, TwoSpheres};
use triavatar::{lift, rasterize, render, FeatureImage, PixelMask, Plane, RenderConfig};

fn main() -> triavatar::Result<()> {
    let scene = TwoSpheres {
        offset: 0.4,
        radius: 0.3,
    };
    let t = scene.bake(48, 1.0, 1, None);
    let w = threshold_probe(1, scene.threshold(), 200.0, ProbeColor::Logits([0.0; 3]));
    let cam = camera_at(32, 32, 40.0, [0.0, 0.3, 2.8], 0.5, 6.0);
    let r = render(&t, &w, &cam, &RenderConfig::default())?;

    // two feature channels: a horizontal and a vertical ramp
    let features = FeatureImage::from_fn(
        2,
        32,
        32,
        |c, y, x| if c == 0 { x as f32 / 31.0 } else { y as f32 / 31.0 },
    );
    let valid = PixelMask::from_fn(32, 32, |x, y| r.alpha.get(x, y, 0) > 0.5);
    let cloud = lift(&features, &r.depth, &cam, &valid)?;
    println!("lifted {} points from {} valid pixels", cloud.len(), valid.count());

    let tp = rasterize(&cloud, 2, 16, 1.0)?;
    for plane in Plane::ALL {
        let row: Vec<String> = (0..16).map(|col| format!("{:.2}", tp.get(plane, 0, 8, col))).collect();
        println!("{plane:?} channel 0, middle row: {}", row.join(" "));
    }
    Ok(())
}
