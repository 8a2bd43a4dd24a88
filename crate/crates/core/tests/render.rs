mod common;

use common::*;
use nalgebra::Vector3;
use rand::Rng;
use triavatar::render::{render_rays, trace_ray};
use triavatar::*;

fn ray(o: [f64; 3], d: [f64; 3]) -> Ray {
    Ray::new(Vector3::from(o), Vector3::from(d)).unwrap()
}

fn midpoint(n: usize) -> RenderConfig {
    RenderConfig {
        samples_per_ray: n,
        ..Default::default()
    }
}

/// Rays from a sphere of radius 3 aimed at random points of `[-a, a]^3`.
fn random_rays(n: usize, a: f64, seed: u64) -> Vec<([f64; 3], [f64; 3])> {
    let mut g = rng(seed);
    (0..n)
        .map(|_| {
            let o = normalize([
                g.random_range(-1.0..1.0),
                g.random_range(-1.0..1.0),
                g.random_range(-1.0..1.0),
            ]);
            let o = [3.0 * o[0], 3.0 * o[1], 3.0 * o[2]];
            let p = [g.random_range(-a..a), g.random_range(-a..a), g.random_range(-a..a)];
            (o, normalize([p[0] - o[0], p[1] - o[1], p[2] - o[2]]))
        })
        .collect()
}

#[test]
fn baked_box_matches_analytic_compositing() {
    let t = box_triplane(0.5, 64, 1.0, 1);
    let probe = threshold_probe(1, 2.0, 1.0, ProbeColor::Logits([0.0; 3]));
    let rays = random_rays(2000, 0.45, 1);
    let list: Vec<Ray> = rays.iter().map(|&(o, d)| ray(o, d)).collect();
    let out = render_rays(&t, &probe, &list, 0.0, 10.0, &midpoint(128)).unwrap();
    let mut worst = 0.0f64;
    for (s, &(o, d)) in out.iter().zip(&rays) {
        let want = 1.0 - analytic_transmittance(1.0, 0.5, o, d);
        worst = worst.max((s.alpha - want).abs());
    }
    assert!(worst < 0.02, "max alpha deviation {worst}");
}

#[test]
fn doubling_samples_stays_within_the_finer_error_bound() {
    // unit chord through the box on the z axis, starting inside the cube at
    // an offset that does not align the faces with either sample grid
    let t = box_triplane(0.5, 8, 1.0, 1);
    let probe = threshold_probe(1, 2.0, 1.0, ProbeColor::Logits([0.0; 3]));
    let r = ray([0.0, 0.0, 0.93], [0.0, 0.0, -1.0]);
    let at = |n| render_rays(&t, &probe, &[r], 0.0, 10.0, &midpoint(n)).unwrap()[0].alpha;
    let (a128, a256) = (at(128), at(256));
    let exact = 1.0 - (-1.0f64).exp();
    // midpoint quadrature of a step misplaces at most one interval per face
    let bound_256 = 2.0 * 1.93 / 256.0 * (-1.0f64).exp();
    assert!((a256 - exact).abs() <= bound_256);
    assert!((a128 - a256).abs() <= 2.0 * 1.93 / 128.0);
}

#[test]
fn constant_density_chord_sweep() {
    // axis rays through the box at every in-face offset see a unit chord
    let t = box_triplane(0.5, 8, 1.0, 1);
    let probe = threshold_probe(1, 2.0, 1.0, ProbeColor::Logits([0.2, 0.4, 0.6]));
    let rays: Vec<Ray> = (0..9)
        .map(|i| {
            let y = -0.3 + 0.075 * i as f64;
            ray([y, -y, 2.0], [0.0, 0.0, -1.0])
        })
        .collect();
    let want = 1.0 - (-1.0f64).exp();
    for s in render_rays(&t, &probe, &rays, 0.0, 10.0, &midpoint(256)).unwrap() {
        assert!((s.alpha - want).abs() < 1e-3);
        let c = [sigmoid(0.2), sigmoid(0.4), sigmoid(0.6)];
        for k in 0..3 {
            assert!((s.rgb[k] - s.alpha * c[k]).abs() < 1e-6);
        }
        // expected termination in a unit slab of unit density, from the entry at 1.5
        let mean = 1.0 - (-1.0f64).exp() / want;
        assert!((s.depth - (1.5 + mean)).abs() < 1e-3, "depth {}", s.depth);
    }
}

#[test]
fn weights_and_transmittance_are_consistent() {
    for seed in 0..4 {
        let t = random_triplane(3, 8, 1.0, 3.0, seed);
        let w = DecoderWeights::random(3, &[8], seed + 10).unwrap();
        for (o, d) in random_rays(200, 1.0, seed + 20) {
            let tr = trace_ray(&t, &w, &ray(o, d), 0.0, 10.0, &midpoint(48)).unwrap();
            let sum: f64 = tr.weights.iter().sum();
            assert!((sum + tr.final_transmittance - 1.0).abs() < 1e-9);
            assert!(tr.transmittance.windows(2).all(|p| p[1] <= p[0]));
            // w_i = T_i (1 - exp(-sigma_i delta))
            for i in 0..tr.weights.len() {
                let want = tr.transmittance[i] * (1.0 - (-tr.densities[i] * tr.delta).exp());
                assert!((tr.weights[i] - want).abs() < 1e-12);
            }
            assert!((tr.result.alpha - sum).abs() < 1e-12);
        }
    }
}

#[test]
fn ray_segments_follow_the_cube_and_clip_planes() {
    // extent is stored in single precision; 0.75 is exact
    let t = random_triplane(1, 4, 0.75, 1.0, 3);
    let w = DecoderWeights::random(1, &[4], 4).unwrap();
    for (o, d) in random_rays(100, 0.9, 5) {
        let tr = trace_ray(&t, &w, &ray(o, d), 2.6, 10.0, &midpoint(10)).unwrap();
        let Some((t0, t1)) = slab(o, d, 0.75) else {
            assert!(tr.ts.is_empty());
            continue;
        };
        let (a, b) = (t0.max(2.6), t1);
        if a >= b {
            assert!(tr.ts.is_empty() || tr.result.alpha == 0.0);
            continue;
        }
        assert!((tr.delta - (b - a) / 10.0).abs() < 1e-12);
        for (i, &ti) in tr.ts.iter().enumerate() {
            assert!((ti - (a + (i as f64 + 0.5) * tr.delta)).abs() < 1e-9);
        }
    }
}

fn finite_difference_check(seed: u64) -> f64 {
    let cam = camera_at(8, 8, 40.0, [0.4, 0.3, 2.5], 0.5, 6.0);
    let cfg = midpoint(16);
    let t = random_triplane(1, 4, 1.0, 1.0, seed);
    let w = DecoderWeights::default_random(1, seed + 100).unwrap();
    let mut g = rng(seed + 200);
    let lg = Image::from_fn(8, 8, 3, |_, _, _| g.random_range(-1.0..1.0));
    let loss = |t: &TriPlane| -> f64 {
        let rgb = render(t, &w, &cam, &cfg).unwrap().rgb;
        rgb.data().iter().zip(lg.data()).map(|(a, b)| a * b).sum()
    };
    let grad = render_backward(&t, &w, &cam, &cfg, &lg).unwrap();
    let mut worst = 0.0f64;
    // a 1-channel 4x4 tri-plane has only 48 entries: check all of them
    for i in 0..48 {
        let (plane, row, col) = (Plane::ALL[i / 16], i % 16 / 4, i % 4);
        let v = t.get(plane, 0, row, col) as f64;
        let (mut tp, mut tm) = (t.clone(), t.clone());
        tp.set(plane, 0, row, col, (v + 1e-3) as f32);
        tm.set(plane, 0, row, col, (v - 1e-3) as f32);
        let span = tp.get(plane, 0, row, col) as f64 - tm.get(plane, 0, row, col) as f64;
        let fd = (loss(&tp) - loss(&tm)) / span;
        let a = grad.data[i];
        worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6));
    }
    worst
}

#[test]
fn backward_matches_finite_differences_at_several_seeds() {
    for seed in [1, 2, 3] {
        let worst = finite_difference_check(seed);
        assert!(worst < 1e-3, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn backward_is_bitwise_deterministic_across_thread_counts() {
    let cam = camera_at(40, 40, 40.0, [0.4, 0.3, 2.5], 0.5, 6.0);
    let t = random_triplane(4, 8, 1.0, 1.0, 9);
    let w = DecoderWeights::random(4, &[16], 10).unwrap();
    let lg = random_image(40, 40, 3, 11);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| render_backward(&t, &w, &cam, &midpoint(24), &lg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
}

#[test]
fn composed_planes_render_like_their_sum() {
    let cam = camera_at(16, 16, 40.0, [0.4, 0.3, 2.5], 0.5, 6.0);
    let w = DecoderWeights::random(2, &[8], 12).unwrap();
    // dyadic values keep every f32 sum exact, so grouping cannot matter
    let dyadic = |seed| {
        let t = random_triplane(2, 8, 1.0, 1.0, seed);
        let data = t.data().iter().map(|v| (v * 1024.0).round() / 1024.0).collect();
        TriPlane::from_data(2, 8, 1.0, data).unwrap()
    };
    let (a, b, c) = (dyadic(13), dyadic(14), dyadic(15));
    let left = a.add(&b).unwrap().add(&c).unwrap();
    let right = a.add(&b.add(&c).unwrap()).unwrap();
    assert_eq!(left, right);
    // the sum is sampled as one field
    let mut g = rng(16);
    for _ in 0..50 {
        let p = [
            g.random_range(-1.0..1.0),
            g.random_range(-1.0..1.0),
            g.random_range(-1.0..1.0),
        ];
        let s = left.sample_point(p).unwrap();
        let parts: Vec<Vec<f64>> = [&a, &b, &c].iter().map(|t| t.sample_point(p).unwrap()).collect();
        for k in 0..2 {
            assert!((s[k] - (parts[0][k] + parts[1][k] + parts[2][k])).abs() < 1e-5);
        }
    }
    assert_eq!(
        render(&left, &w, &cam, &midpoint(16)).unwrap(),
        render(&right, &w, &cam, &midpoint(16)).unwrap()
    );
}

#[test]
fn fitting_lowers_the_loss_on_a_small_scene() {
    let scene = TwoSpheres {
        offset: 0.4,
        radius: 0.3,
    };
    let probe = threshold_probe(1, scene.threshold(), 30.0, ProbeColor::Logits([1.2, -0.3, 0.4]));
    let cam = camera_at(12, 12, 40.0, [0.3, 0.5, 2.6], 0.5, 5.0);
    let cfg = midpoint(12);
    let target = render(&scene.bake(32, 1.0, 1, None), &probe, &cam, &cfg).unwrap().rgb;
    let w = DecoderWeights::random(4, &[16], 17).unwrap();
    let init = TriPlane::zeros(4, 8, 1.0).unwrap();
    let opts = FitOptions {
        steps: 40,
        step_size: 3000.0,
        lambda_tv: 0.0,
    };
    let fit = fit_triplane(&target, &cam, &w, &init, &opts, &cfg).unwrap();
    assert_eq!(fit.losses.len(), 40);
    assert!(fit.losses.last().unwrap() < &fit.losses[0]);
    // the trace is the objective of the iterate it was taken at
    let again = fit_triplane(&target, &cam, &w, &init, &opts, &cfg).unwrap();
    assert_eq!(fit, again);
}

#[test]
fn tv_term_pulls_a_fit_toward_smooth_planes() {
    let cam = camera_at(6, 6, 40.0, [0.3, 0.5, 2.6], 0.5, 5.0);
    let cfg = midpoint(8);
    let w = DecoderWeights::random(2, &[8], 18).unwrap();
    let init = random_triplane(2, 8, 1.0, 1.0, 19);
    // the render of init is its own target, so only the TV term moves it
    let target = render(&init, &w, &cam, &cfg).unwrap().rgb;
    let opts = FitOptions {
        steps: 20,
        step_size: 0.05,
        lambda_tv: 1.0,
    };
    let fit = fit_triplane(&target, &cam, &w, &init, &opts, &cfg).unwrap();
    assert!(fit.triplane.tv_loss() < init.tv_loss());
}
