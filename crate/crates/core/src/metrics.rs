//! Image and landmark metrics for evaluating reenactment output, plus the
//! landmark-based alignment applied before comparison.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::binio;
use crate::error::{Error, Result};
use crate::geometry::{procrustes_align, Similarity2};
use crate::imaging::Image;
use crate::morphable::CoefficientFile;
use crate::objectives::l1_image;

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Peak signal-to-noise ratio in dB for images on a unit range, capped at
/// [`PSNR_CAP`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let n = a.data().len();
    if n == 0 {
        return Err(Error::Shape("psnr of empty images".into()));
    }
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable filter over fully contained windows only.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// evaluated on windows fully inside the image, averaged over channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Parameter(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {w}x{h}"
        )));
    }
    if ch == 0 {
        return Err(Error::Shape("ssim of a zero-channel image".into()));
    }
    let k = gaussian_window();
    let mut total = 0.0;
    for c in 0..ch {
        let x = a.channel(c).into_vec();
        let y = b.channel(c).into_vec();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mx = filter_valid(&x, w, h, &k);
        let my = filter_valid(&y, w, h, &k);
        let sxx = filter_valid(&xx, w, h, &k);
        let syy = filter_valid(&yy, w, h, &k);
        let sxy = filter_valid(&xy, w, h, &k);
        let mut sum = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            let num = (2.0 * ux * uy + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2);
            sum += num / den;
        }
        total += sum / mx.len() as f64;
    }
    Ok(total / ch as f64)
}

/// Ordered 2D landmarks in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeypointSet {
    pub points: Vec<[f64; 2]>,
}

impl KeypointSet {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input("keypoints must be finite".into()));
        }
        Ok(KeypointSet { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One `x y` pair per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v = crate::textfmt::parse_floats(line, i + 1)?;
            if v.len() != 2 {
                return Err(Error::Input(format!(
                    "line {}: expected `x y`, found {} numbers",
                    i + 1,
                    v.len()
                )));
            }
            points.push([v[0], v[1]]);
        }
        KeypointSet::new(points)
    }

    pub fn to_text(&self) -> String {
        self.points.iter().map(|p| format!("{:?} {:?}\n", p[0], p[1])).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = String::from_utf8(binio::read_file(path)?)
            .map_err(|_| Error::Input("keypoint file is not UTF-8".into()).in_file(path))?;
        KeypointSet::parse(&text).map_err(|e| e.in_file(path))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), self.to_text().as_bytes())
    }
}

/// Average keypoint distance: mean Euclidean distance between
/// corresponding landmarks.
pub fn akd(pred: &KeypointSet, gt: &KeypointSet) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::Shape(format!(
            "{} predicted vs {} ground-truth keypoints",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Shape("no keypoints".into()));
    }
    let sum: f64 = pred
        .points
        .iter()
        .zip(&gt.points)
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Euclidean norm of `a - b`.
pub fn coeff_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "coefficient vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Ground truth warped into the prediction's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub gt_image: Image,
    pub gt_keypoints: KeypointSet,
    /// Similarity taking ground-truth pixel coordinates to prediction ones.
    pub transform: Similarity2,
}

/// Fits the similarity from ground-truth to predicted landmarks and
/// resamples the ground-truth image through it (bilinear, black outside).
pub fn aligned_compare(
    pred_image: &Image,
    pred_kp: &KeypointSet,
    gt_image: &Image,
    gt_kp: &KeypointSet,
) -> Result<AlignedPair> {
    let transform = if gt_kp == pred_kp && !gt_kp.is_empty() {
        Similarity2::identity()
    } else {
        procrustes_align(&gt_kp.points, &pred_kp.points, true)?
    };
    let inverse = transform.inverse();
    let gt_image = Image::from_fn(
        pred_image.width(),
        pred_image.height(),
        gt_image.channels(),
        |x, y, c| {
            let [sx, sy] = inverse.apply_point(&[x as f64 + 0.5, y as f64 + 0.5]);
            gt_image.sample_bilinear(sx, sy, c, 0.0)
        },
    );
    let gt_keypoints = KeypointSet::new(gt_kp.points.iter().map(|p| transform.apply_point(p)).collect())?;
    Ok(AlignedPair {
        gt_image,
        gt_keypoints,
        transform,
    })
}

/// Everything known about one predicted/ground-truth pair.
#[derive(Debug, Clone, Default)]
pub struct PairInput {
    pub id: String,
    pub pred: Image,
    pub gt: Image,
    pub pred_keypoints: Option<KeypointSet>,
    pub gt_keypoints: Option<KeypointSet>,
    pub pred_coeffs: Option<CoefficientFile>,
    pub gt_coeffs: Option<CoefficientFile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairMetrics {
    pub id: String,
    pub psnr: f64,
    pub ssim: f64,
    pub l1: f64,
    pub akd: Option<f64>,
    pub aed: Option<f64>,
    pub apd: Option<f64>,
}

fn block_distance(a: &Option<Vec<f64>>, b: &Option<Vec<f64>>) -> Result<Option<f64>> {
    match (a, b) {
        (Some(a), Some(b)) => coeff_distance(a, b).map(Some),
        _ => Ok(None),
    }
}

/// Metrics for one pair; with `align` and keypoints on both sides the
/// ground truth is aligned to the prediction first.
pub fn evaluate_pair(p: &PairInput, align: bool) -> Result<PairMetrics> {
    let kps = p.pred_keypoints.as_ref().zip(p.gt_keypoints.as_ref());
    let (gt, gt_kp) = match kps {
        Some((pk, gk)) if align => {
            let a = aligned_compare(&p.pred, pk, &p.gt, gk)?;
            (a.gt_image, Some(a.gt_keypoints))
        }
        _ => (p.gt.clone(), p.gt_keypoints.clone()),
    };
    let akd = match (&p.pred_keypoints, &gt_kp) {
        (Some(a), Some(b)) => Some(akd(a, b)?),
        _ => None,
    };
    let (pc, gc) = (p.pred_coeffs.as_ref(), p.gt_coeffs.as_ref());
    let aed = block_distance(&pc.and_then(|c| c.beta.clone()), &gc.and_then(|c| c.beta.clone()))?;
    let apd = block_distance(&pc.and_then(|c| c.pose.clone()), &gc.and_then(|c| c.pose.clone()))?;
    Ok(PairMetrics {
        id: p.id.clone(),
        psnr: psnr(&p.pred, &gt)?,
        ssim: ssim(&p.pred, &gt)?,
        l1: l1_image(&p.pred, &gt)?,
        akd,
        aed,
        apd,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub pairs: Vec<PairMetrics>,
    /// `(id, reason)` for pairs whose metrics could not be computed.
    pub skipped: Vec<(String, String)>,
}

/// Per-metric means; `None` when no pair reports the metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricMeans {
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub l1: Option<f64>,
    pub akd: Option<f64>,
    pub aed: Option<f64>,
    pub apd: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

const REPORT_HEADER: &str = "\
# triavatar metric report v1
# aed/apd: euclidean distance between expression/pose coefficient vectors
# images are low-resolution renders without super-resolution; not comparable to 512x512 results
# csim, lpips, fid: reserved for external tools (NA here)
";

fn field(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:?}"))
}

fn parse_field(s: &str, line: usize) -> Result<Option<f64>> {
    if s == "NA" {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Input(format!("line {line}: bad metric value `{s}`")))
}

impl MetricReport {
    /// Evaluates pairs in parallel; failures become skipped entries. Order
    /// follows the input.
    pub fn evaluate(inputs: &[PairInput], align: bool) -> MetricReport {
        let results: Vec<Result<PairMetrics>> = inputs.par_iter().map(|p| evaluate_pair(p, align)).collect();
        let mut report = MetricReport::default();
        for (p, r) in inputs.iter().zip(results) {
            match r {
                Ok(m) => report.pairs.push(m),
                Err(e) => report.skipped.push((p.id.clone(), e.to_string())),
            }
        }
        report
    }

    pub fn means(&self) -> MetricMeans {
        let p = &self.pairs;
        MetricMeans {
            psnr: mean(p.iter().map(|m| m.psnr)),
            ssim: mean(p.iter().map(|m| m.ssim)),
            l1: mean(p.iter().map(|m| m.l1)),
            akd: mean(p.iter().filter_map(|m| m.akd)),
            aed: mean(p.iter().filter_map(|m| m.aed)),
            apd: mean(p.iter().filter_map(|m| m.apd)),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        for m in &self.pairs {
            let _ = writeln!(
                s,
                "pair {} psnr={:?} ssim={:?} l1={:?} akd={} aed={} apd={} csim=NA lpips=NA",
                m.id,
                m.psnr,
                m.ssim,
                m.l1,
                field(m.akd),
                field(m.aed),
                field(m.apd)
            );
        }
        for (id, reason) in &self.skipped {
            let _ = writeln!(s, "skip {id} {reason}");
        }
        let mm = self.means();
        let _ = writeln!(
            s,
            "mean psnr={} ssim={} l1={} akd={} aed={} apd={} csim=NA lpips=NA fid=NA",
            field(mm.psnr),
            field(mm.ssim),
            field(mm.l1),
            field(mm.akd),
            field(mm.aed),
            field(mm.apd)
        );
        let _ = writeln!(s, "count pairs={} skipped={}", self.pairs.len(), self.skipped.len());
        s
    }

    /// Reads the per-pair and skip records back; summary lines are checked
    /// for consistency with them.
    pub fn parse(text: &str) -> Result<MetricReport> {
        let mut report = MetricReport::default();
        let mut count: Option<(usize, usize)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("pair") => {
                    let id = parts
                        .next()
                        .ok_or_else(|| Error::Input(format!("line {line_no}: missing pair id")))?
                        .to_string();
                    let mut values = std::collections::HashMap::new();
                    for kv in parts {
                        let (k, v) = kv
                            .split_once('=')
                            .ok_or_else(|| Error::Input(format!("line {line_no}: expected key=value, found `{kv}`")))?;
                        values.insert(k, parse_field(v, line_no)?);
                    }
                    let get = |k: &str| values.get(k).copied().flatten();
                    let need = |k: &str| get(k).ok_or_else(|| Error::Input(format!("line {line_no}: missing `{k}`")));
                    report.pairs.push(PairMetrics {
                        id,
                        psnr: need("psnr")?,
                        ssim: need("ssim")?,
                        l1: need("l1")?,
                        akd: get("akd"),
                        aed: get("aed"),
                        apd: get("apd"),
                    });
                }
                Some("skip") => {
                    let id = parts.next().unwrap_or("").to_string();
                    let reason = parts.collect::<Vec<_>>().join(" ");
                    report.skipped.push((id, reason));
                }
                Some("mean") => {}
                Some("count") => {
                    let mut pairs = None;
                    let mut skipped = None;
                    for kv in parts {
                        match kv.split_once('=') {
                            Some(("pairs", v)) => pairs = v.parse().ok(),
                            Some(("skipped", v)) => skipped = v.parse().ok(),
                            _ => {}
                        }
                    }
                    count = pairs.zip(skipped);
                }
                _ => return Err(Error::Input(format!("line {line_no}: unrecognised record"))),
            }
        }
        if let Some((p, s)) = count {
            if (p, s) != (report.pairs.len(), report.skipped.len()) {
                return Err(Error::Input("report counts disagree with its records".into()));
            }
        }
        Ok(report)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), self.to_text().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MetricReport> {
        let path = path.as_ref();
        let text = String::from_utf8(binio::read_file(path)?)
            .map_err(|_| Error::Input("report is not UTF-8".into()).in_file(path))?;
        MetricReport::parse(&text).map_err(|e| e.in_file(path))
    }
}
