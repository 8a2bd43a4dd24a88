//! Compares the analytic tri-plane gradient of a rendered image's loss with
//! central finite differences on a handful of texels.

#[path = "../tests/common/mod.rs"]
mod common;

use common::{camera_at, random_image, random_triplane};
use triavatar::{render, render_backward, DecoderWeights, Image, RenderConfig, TriPlane};

fn loss(t: &TriPlane, w: &DecoderWeights, cam: &triavatar::Camera, cfg: &RenderConfig, g: &Image) -> f64 {
    let r = render(t, w, cam, cfg).expect("render");
    r.rgb.data().iter().zip(g.data()).map(|(a, b)| a * b).sum()
}

fn main() -> triavatar::Result<()> {
    let t = random_triplane(2, 4, 1.0, 1.0, 5);
    let w = DecoderWeights::default_random(2, 9)?;
    let cam = camera_at(8, 8, 45.0, [0.4, 0.3, 2.5], 0.5, 5.0);
    let cfg = RenderConfig {
        samples_per_ray: 16,
        ..Default::default()
    };
    // loss = <render, G> so dL/drender = G
    let g = random_image(8, 8, 3, 11);
    let grad = render_backward(&t, &w, &cam, &cfg, &g)?;

    let h = 1e-3f32;
    for idx in [0, 7, 20, 33, 47, 60, 81, 95] {
        let mut data = t.data().to_vec();
        let base = data[idx];
        data[idx] = base + h;
        let plus = TriPlane::from_data(2, 4, 1.0, data.clone())?;
        let span_hi = data[idx] as f64;
        data[idx] = base - h;
        let minus = TriPlane::from_data(2, 4, 1.0, data.clone())?;
        let span = span_hi - data[idx] as f64;
        let fd = (loss(&plus, &w, &cam, &cfg, &g) - loss(&minus, &w, &cam, &cfg, &g)) / span;
        let an = grad.data[idx];
        let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
        println!("texel {idx:3}: analytic {an:+.6e}  finite diff {fd:+.6e}  rel err {rel:.1e}");
    }
    Ok(())
}
