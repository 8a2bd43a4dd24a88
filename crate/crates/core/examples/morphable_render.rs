//! Renders the built-in synthetic head with a few expression settings and
//! writes image and facial-mask PNGs.
//!
//!     cargo run --example morphable_render -- [out_dir]

use std::path::PathBuf;

use nalgebra::{Matrix4, Vector3};
use triavatar::morphable::{frontal_expression_render, neutral_render};
use triavatar::{Camera, MorphableBasis};

fn main() -> triavatar::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("morphable_render"));
    std::fs::create_dir_all(&out)?;

    let basis = MorphableBasis::synthetic_head();
    println!(
        "{} vertices, {} triangles, {} identity / {} expression / {} texture dims",
        basis.vertex_count(),
        basis.triangles().len(),
        basis.id_dims(),
        basis.exp_dims(),
        basis.tex_dims()
    );
    let front = Camera::from_fov(
        128,
        128,
        30.0,
        Matrix4::new_translation(&Vector3::new(0.0, 0.0, 4.0)),
        0.1,
        10.0,
    )?;
    let identity = vec![0.6, -0.3, 0.2, 0.0];

    let neutral = neutral_render(&basis, &identity, &front, 128, 128)?;
    neutral.image.save_png(out.join("neutral.png"))?;
    neutral.mask.save_png(out.join("neutral_mask.png"))?;
    for (i, beta) in [[1.0, 0.0, 0.0, 0.0], [0.0, 1.5, 0.0, -1.0]].iter().enumerate() {
        let r = frontal_expression_render(&basis, &identity, beta, &front, 128, 128)?;
        r.image.save_png(out.join(format!("expression{i}.png")))?;
        let changed = (0..128 * 128)
            .filter(|&k| r.mask.get(k % 128, k / 128) != neutral.mask.get(k % 128, k / 128))
            .count();
        println!(
            "expression {i}: {} facial pixels, {changed} differ from neutral",
            r.mask.count()
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
