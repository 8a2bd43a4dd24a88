mod common;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use triavatar::lifting::rasterize_assignments;
use triavatar::render::RenderConfig;
use triavatar::*;

fn cloud_from(points: &[[f32; 3]], channels: usize, feature: impl Fn(usize) -> Vec<f32>) -> NeuralPointCloud {
    let mut cloud = NeuralPointCloud::new(channels);
    for (i, p) in points.iter().enumerate() {
        cloud.push(*p, &feature(i)).unwrap();
    }
    cloud
}

fn random_points(n: usize, seed: u64) -> Vec<[f32; 3]> {
    let mut g = rng(seed);
    (0..n)
        .map(|_| std::array::from_fn(|_| g.random_range(-1.2f32..1.2)))
        .collect()
}

#[test]
fn assignments_match_exhaustive_search() {
    for (seed, r, e) in [(1, 8, 1.0), (2, 7, 1.0), (3, 12, 0.75), (4, 16, 1.5), (5, 5, 1.0)] {
        let points = random_points(50, seed);
        let cloud = cloud_from(&points, 1, |_| vec![0.0]);
        let got = rasterize_assignments(&cloud, r, e).unwrap();
        assert_eq!(got, brute_force_nn(&points, r, e), "seed {seed}, R {r}");
    }
}

#[test]
fn single_point_fills_every_texel() {
    let cloud = cloud_from(&[[0.3, -0.7, 0.1]], 2, |_| vec![0.25, -1.5]);
    let t = rasterize(&cloud, 2, 6, 1.0).unwrap();
    for plane in Plane::ALL {
        for row in 0..6 {
            for col in 0..6 {
                assert_eq!(t.get(plane, 0, row, col), 0.25);
                assert_eq!(t.get(plane, 1, row, col), -1.5);
            }
        }
    }
    // each plane contributes the feature once
    let s = t.sample_point([0.9, 0.0, -0.4]).unwrap();
    assert_eq!(s, vec![0.75, -4.5]);
}

#[test]
fn empty_cloud_gives_zero_planes() {
    let t = rasterize(&NeuralPointCloud::new(3), 3, 4, 1.0).unwrap();
    assert!(t.data().iter().all(|&v| v == 0.0));
    let a = rasterize_assignments(&NeuralPointCloud::new(3), 4, 1.0).unwrap();
    assert!(a.iter().flatten().all(Option::is_none));
}

#[test]
fn equidistant_points_resolve_to_the_lower_index() {
    // R = 2 over [-1, 1]: texel centers at +-0.5. Both points sit 0.5 from
    // the (0.5, 0.5) center on every plane.
    let points = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.0]];
    let cloud = cloud_from(&points, 1, |i| vec![i as f32 + 1.0]);
    let a = rasterize_assignments(&cloud, 2, 1.0).unwrap();
    let oracle = brute_force_nn(&points, 2, 1.0);
    assert_eq!(a, oracle);
    // XZ plane, texel (row 1, col 1): (0.0, 0.5) vs (0.5, 0.0) -> tie
    assert_eq!(a[1][3], Some(0));

    let swapped = [points[1], points[0]];
    let b = rasterize_assignments(&cloud_from(&swapped, 1, |_| vec![0.0]), 2, 1.0).unwrap();
    assert_eq!(b[1][3], Some(0));
}

#[test]
fn tie_free_clouds_are_permutation_invariant() {
    let mut g = rng(11);
    for seed in 0..5 {
        let points = random_points(40, 100 + seed);
        let features: Vec<Vec<f32>> = (0..points.len()).map(|i| vec![i as f32, -(i as f32)]).collect();
        let base = rasterize(&cloud_from(&points, 2, |i| features[i].clone()), 2, 9, 1.0).unwrap();

        let mut order: Vec<usize> = (0..points.len()).collect();
        order.shuffle(&mut g);
        let permuted: Vec<[f32; 3]> = order.iter().map(|&i| points[i]).collect();
        let t = rasterize(&cloud_from(&permuted, 2, |k| features[order[k]].clone()), 2, 9, 1.0).unwrap();
        assert_eq!(base, t, "seed {seed}");
    }
}

#[test]
fn lifted_points_sit_at_rendered_depth() {
    let scene = TwoSpheres {
        offset: 0.4,
        radius: 0.3,
    };
    let t = scene.bake(32, 1.0, 1, None);
    let probe = threshold_probe(1, scene.threshold(), 200.0, ProbeColor::Logits([0.0; 3]));
    let cam = camera_at(24, 24, 40.0, [0.2, 0.3, 2.8], 0.5, 6.0);
    let cfg = RenderConfig {
        samples_per_ray: 64,
        ..Default::default()
    };
    let out = render(&t, &probe, &cam, &cfg).unwrap();
    let valid = PixelMask::from_fn(24, 24, |x, y| out.alpha.get(x, y, 0) > 0.5);
    assert!(valid.count() > 20);

    let features = FeatureImage::from_image(&out.rgb);
    let cloud = lift(&features, &out.depth, &cam, &valid).unwrap();
    assert_eq!(cloud.len(), valid.count());
    assert_eq!(cloud.channels(), 3);

    let o = cam.position();
    let mut k = 0;
    for y in 0..24 {
        for x in 0..24 {
            if !valid.get(x, y) {
                continue;
            }
            let p = cloud.positions()[k];
            let dist = ((p[0] as f64 - o.x).powi(2) + (p[1] as f64 - o.y).powi(2) + (p[2] as f64 - o.z).powi(2)).sqrt();
            assert!((dist - out.depth.get(x, y, 0)).abs() < 1e-5);
            for c in 0..3 {
                assert_eq!(cloud.feature(k)[c], out.rgb.get(x, y, c) as f32);
            }
            k += 1;
        }
    }
}

#[test]
fn masked_features_lift_only_valid_pixels() {
    let img = random_image(6, 5, 2, 3);
    let mask = PixelMask::from_fn(6, 5, |x, y| (x + y) % 3 == 0);
    let masked = mask_apply(&img, &mask).unwrap();
    for y in 0..5 {
        for x in 0..6 {
            for c in 0..2 {
                let want = if mask.get(x, y) { img.get(x, y, c) } else { 0.0 };
                assert_eq!(masked.get(x, y, c), want);
            }
        }
    }
    let cam = frontal_camera(6, 5, 30.0, 3.0);
    let depth = Image::new(6, 5, 1, 2.0);
    let cloud = lift(&FeatureImage::from_image(&masked), &depth, &cam, &mask).unwrap();
    assert_eq!(cloud.len(), mask.count());
    assert!(mask_apply(&img, &PixelMask::new(5, 5, true)).is_err());
}
