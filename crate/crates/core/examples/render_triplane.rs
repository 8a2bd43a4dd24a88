//! Bakes two spheres into a tri-plane, renders them with a thresholding
//! decoder and writes `rgb.png` plus depth/alpha maps.
//!
//!     cargo run --example render_triplane -- [out_dir]

#[path = "../tests/common/mod.rs"]
mod common;

use std::path::PathBuf;

use common::{camera_at, threshold_probe, ProbeColor, TwoSpheres};
use triavatar::imaging::FloatMap;
use triavatar::{render, RenderConfig};

fn main() -> triavatar::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("render_triplane"));
    std::fs::create_dir_all(&out)?;

    let scene = TwoSpheres {
        offset: 0.4,
        radius: 0.3,
    };
    // channels 1..=3 hold color logits: warm on the left, cool on the right
    let t = scene.bake(64, 1.0, 4, Some(([2.0, 0.2, -1.0], [-1.0, 0.5, 2.0])));
    let w = threshold_probe(4, scene.threshold(), 60.0, ProbeColor::PassThrough);
    let cam = camera_at(96, 64, 35.0, [0.6, 0.5, 2.6], 0.5, 6.0);

    let cfg = RenderConfig {
        samples_per_ray: 96,
        background: [1.0; 3],
        ..Default::default()
    };
    let r = render(&t, &w, &cam, &cfg)?;
    r.rgb.save_png(out.join("rgb.png"))?;
    FloatMap::from_image_channel(&r.depth, 0).save(out.join("depth.fmp"))?;
    FloatMap::from_image_channel(&r.alpha, 0).save(out.join("alpha.fmp"))?;

    let covered = r.alpha.data().iter().filter(|&&a| a > 0.5).count();
    let near = r.depth.data().iter().copied().fold(f64::INFINITY, f64::min);
    println!(
        "{covered} of {} pixels covered, nearest surface at {near:.3}",
        r.alpha.data().len()
    );
    println!("wrote {}", out.display());
    Ok(())
}
