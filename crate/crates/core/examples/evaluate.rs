//! Scores a batch of predicted/ground-truth pairs: PSNR, SSIM, L1, AKD after
//! landmark alignment, and expression/pose distances. Prints the report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triavatar::metrics::PairInput;
use triavatar::morphable::CoefficientFile;
use triavatar::{Image, KeypointSet, MetricReport};

fn main() -> triavatar::Result<()> {
    let mut g = ChaCha8Rng::seed_from_u64(3);
    let gt = Image::from_fn(48, 48, 3, |x, y, c| {
        0.5 + 0.4 * (0.2 * x as f64 + 0.3 * y as f64 + c as f64).sin()
    });
    let landmarks: Vec<[f64; 2]> = (0..12)
        .map(|_| [g.random_range(8.0..40.0), g.random_range(8.0..40.0)])
        .collect();

    let mut pairs = Vec::new();
    for (i, shift) in [0.0, 1.5, 3.0].into_iter().enumerate() {
        // predictions are the ground truth shifted right plus a little noise
        let pred = Image::from_fn(48, 48, 3, |x, y, c| {
            let v = gt.sample_bilinear(x as f64 + 0.5 - shift, y as f64 + 0.5, c, 0.0);
            (v + g.random_range(-0.02..0.02)).clamp(0.0, 1.0)
        });
        let pred_kp = landmarks.iter().map(|p| [p[0] + shift, p[1]]).collect();
        pairs.push(PairInput {
            id: format!("frame{i}"),
            pred,
            gt: gt.clone(),
            pred_keypoints: Some(KeypointSet::new(pred_kp)?),
            gt_keypoints: Some(KeypointSet::new(landmarks.clone())?),
            pred_coeffs: Some(CoefficientFile {
                beta: Some(vec![0.1 * i as f64, 0.0, 0.0, 0.0]),
                pose: Some(vec![0.0, 0.05 * i as f64, 0.0]),
                ..Default::default()
            }),
            gt_coeffs: Some(CoefficientFile {
                beta: Some(vec![0.0; 4]),
                pose: Some(vec![0.0; 3]),
                ..Default::default()
            }),
        });
    }

    print!("{}", MetricReport::evaluate(&pairs, true).to_text());
    println!("# without alignment");
    print!("{}", MetricReport::evaluate(&pairs, false).to_text());
    Ok(())
}
