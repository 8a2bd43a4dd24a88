//! Scene builders and independent reference computations shared by the
//! integration tests. Nothing here calls into the library's math; the
//! library is only used to hold data.
#![allow(dead_code)]

use nalgebra::{Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triavatar::decoder::{softplus_inverse, Activation, Layer};
use triavatar::{Camera, DecoderWeights, Image, TriPlane};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- rays

/// Entry/exit parameters of `o + t d` through the axis-aligned cube
/// `[-h, h]^3`, or `None` on a miss.
pub fn slab(o: [f64; 3], d: [f64; 3], h: f64) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for a in 0..3 {
        if d[a] == 0.0 {
            if o[a].abs() > h {
                return None;
            }
            continue;
        }
        let t1 = (-h - o[a]) / d[a];
        let t2 = (h - o[a]) / d[a];
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    (hi > lo).then_some((lo, hi))
}

/// Transmittance through a constant-density cube of half-width `h`
/// (unit-length `d`).
pub fn analytic_transmittance(sigma: f64, h: f64, o: [f64; 3], d: [f64; 3]) -> f64 {
    match slab(o, d, h) {
        Some((t0, t1)) => (-sigma * (t1 - t0.max(0.0)).max(0.0)).exp(),
        None => 1.0,
    }
}

pub fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

// ---------------------------------------------------------------- decoders

pub fn layer(outputs: usize, inputs: usize, weights: &[f64], bias: &[f64]) -> Layer {
    Layer::new(
        outputs,
        inputs,
        weights.iter().map(|&v| v as f32).collect(),
        bias.iter().map(|&v| v as f32).collect(),
    )
    .unwrap()
}

const STEEP: f64 = 1.0e6;
const RAMP: f64 = 40.0;
const FLOOR: f64 = 30.0;

/// Color source of a [`threshold_probe`].
#[derive(Clone, Copy)]
pub enum ProbeColor {
    /// Constant sigmoid logits.
    Logits([f64; 3]),
    /// Channels 1..=3 are passed through as color logits.
    PassThrough,
}

/// Decoder with density `~sigma` where feature channel 0 exceeds
/// `threshold` and `~0` elsewhere; the step is `RAMP / STEEP` wide in
/// feature units.
///
/// Two hidden softplus units `softplus(k(f - th))` and
/// `softplus(k(f - th) - s)` differ by `clamp(k(f - th), 0, s)`; scaling that
/// to `[0, 1]` gates the density logit between `-FLOOR` and
/// `softplus^-1(sigma)`. Pass-through colors use `softplus(c) - softplus(-c) = c`.
pub fn threshold_probe(channels: usize, threshold: f64, sigma: f64, color: ProbeColor) -> DecoderWeights {
    let pass = matches!(color, ProbeColor::PassThrough);
    assert!(!pass || channels >= 4);
    let hidden = if pass { 8 } else { 2 };
    let mut w1 = vec![0.0; hidden * channels];
    let mut b1 = vec![0.0; hidden];
    w1[0] = STEEP;
    w1[channels] = STEEP;
    b1[0] = -STEEP * threshold;
    b1[1] = -STEEP * threshold - RAMP;
    if pass {
        for k in 0..3 {
            w1[(2 + 2 * k) * channels + 1 + k] = 1.0;
            w1[(3 + 2 * k) * channels + 1 + k] = -1.0;
        }
    }
    let a = FLOOR + softplus_inverse(sigma);
    let mut w2 = vec![0.0; 4 * hidden];
    let mut b2 = vec![-FLOOR, 0.0, 0.0, 0.0];
    w2[0] = a / RAMP;
    w2[1] = -a / RAMP;
    match color {
        ProbeColor::Logits(l) => b2[1..].copy_from_slice(&l),
        ProbeColor::PassThrough => {
            for k in 0..3 {
                w2[(1 + k) * hidden + 2 + 2 * k] = 1.0;
                w2[(1 + k) * hidden + 3 + 2 * k] = -1.0;
            }
        }
    }
    DecoderWeights::new(
        vec![layer(hidden, channels, &w1, &b1), layer(4, hidden, &w2, &b2)],
        Activation::Softplus,
    )
    .unwrap()
}

/// Stable reference softplus and sigmoid, for hand-evaluating decoders.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// ---------------------------------------------------------------- baking

/// World coordinate of texel center `i` on an `r`-texel axis over `[-e, e]`.
/// Evaluated as `-e + (i + 1/2) * (2e / r)` so that exact-tie tests see the
/// same rounding as any implementation using the texel pitch.
pub fn texel(i: usize, r: usize, e: f64) -> f64 {
    -e + (i as f64 + 0.5) * (2.0 * e / r as f64)
}

/// Fills a tri-plane from `value(plane, channel, u, v)` evaluated at texel
/// centers. Planes are XY, XZ, YZ with `u` the first named axis (columns)
/// and `v` the second (rows).
pub fn bake(channels: usize, r: usize, e: f64, value: impl Fn(usize, usize, f64, f64) -> f64) -> TriPlane {
    let mut data = Vec::with_capacity(3 * channels * r * r);
    for plane in 0..3 {
        for c in 0..channels {
            for row in 0..r {
                for col in 0..r {
                    data.push(value(plane, c, texel(col, r, e), texel(row, r, e)) as f32);
                }
            }
        }
    }
    TriPlane::from_data(channels, r, e, data).unwrap()
}

/// Box of half-width `half`: each plane holds 1 where both of its
/// coordinates are inside, so the three-plane sum is 3 inside and at most 1
/// outside; pair with a probe thresholded at 2.
pub fn box_triplane(half: f64, r: usize, e: f64, channels: usize) -> TriPlane {
    bake(channels, r, e, |_, c, u, v| {
        if c == 0 && u.abs() < half && v.abs() < half {
            1.0
        } else {
            0.0
        }
    })
}

/// Two spheres of radius `radius` centred at `(+-offset, 0, 0)`.
#[derive(Clone, Copy, Debug)]
pub struct TwoSpheres {
    pub offset: f64,
    pub radius: f64,
}

impl TwoSpheres {
    /// Channel 0 sums to `-(|x| - offset)^2 - y^2 - z^2`, the negated squared
    /// distance to the nearer centre; threshold it at `-radius^2`.
    pub fn bake(&self, r: usize, e: f64, channels: usize, colors: Option<([f64; 3], [f64; 3])>) -> TriPlane {
        let a = self.offset;
        bake(channels, r, e, |plane, c, u, v| match (c, plane) {
            (0, 0) => -0.5 * ((u.abs() - a).powi(2) + v * v),
            (0, 1) => -0.5 * ((u.abs() - a).powi(2) + v * v),
            (0, 2) => -0.5 * (u * u + v * v),
            (1..=3, 0) => match colors {
                // logits split by the sign of x on the XY plane only
                Some((left, right)) => {
                    if u < 0.0 {
                        left[c - 1]
                    } else {
                        right[c - 1]
                    }
                }
                None => 0.0,
            },
            _ => 0.0,
        })
    }

    pub fn threshold(&self) -> f64 {
        -self.radius * self.radius
    }

    /// First intersection of `o + t d` with the union, if any.
    pub fn hit(&self, o: [f64; 3], d: [f64; 3]) -> Option<f64> {
        [-self.offset, self.offset]
            .iter()
            .filter_map(|&cx| {
                let oc = [o[0] - cx, o[1], o[2]];
                let b = oc[0] * d[0] + oc[1] * d[1] + oc[2] * d[2];
                let c = oc[0] * oc[0] + oc[1] * oc[1] + oc[2] * oc[2] - self.radius * self.radius;
                let disc = b * b - c;
                (disc >= 0.0).then(|| -b - disc.sqrt()).filter(|&t| t > 0.0)
            })
            .reduce(f64::min)
    }

    /// Unsigned distance from `p` to the union's surface.
    pub fn surface_distance(&self, p: [f64; 3]) -> f64 {
        let d = ((p[0].abs() - self.offset).powi(2) + p[1] * p[1] + p[2] * p[2]).sqrt();
        (d - self.radius).abs()
    }
}

// ---------------------------------------------------------------- cameras

pub fn camera_at(w: u32, h: u32, vfov: f64, eye: [f64; 3], near: f64, far: f64) -> Camera {
    Camera::look_at(
        w,
        h,
        vfov,
        Vector3::from(eye),
        Vector3::zeros(),
        Vector3::y(),
        near,
        far,
    )
    .unwrap()
}

pub fn frontal_camera(w: u32, h: u32, vfov: f64, distance: f64) -> Camera {
    Camera::from_fov(
        w,
        h,
        vfov,
        Matrix4::new_translation(&Vector3::new(0.0, 0.0, distance)),
        0.1,
        20.0,
    )
    .unwrap()
}

// ---------------------------------------------------------------- nearest neighbour

/// Exhaustive nearest point for every texel of every plane; ties go to the
/// lowest index. Texels are numbered `row * r + col`.
pub fn brute_force_nn(points: &[[f32; 3]], r: usize, e: f64) -> [Vec<Option<usize>>; 3] {
    let proj = |p: &[f32; 3], plane: usize| -> (f64, f64) {
        let p = [p[0] as f64, p[1] as f64, p[2] as f64];
        match plane {
            0 => (p[0], p[1]),
            1 => (p[0], p[2]),
            _ => (p[1], p[2]),
        }
    };
    std::array::from_fn(|plane| {
        let mut out = Vec::with_capacity(r * r);
        for row in 0..r {
            for col in 0..r {
                let (tu, tv) = (texel(col, r, e), texel(row, r, e));
                let mut best: Option<(f64, usize)> = None;
                for (i, p) in points.iter().enumerate() {
                    let (u, v) = proj(p, plane);
                    let d = (u - tu).powi(2) + (v - tv).powi(2);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, i));
                    }
                }
                out.push(best.map(|(_, i)| i));
            }
        }
        out
    })
}

// ---------------------------------------------------------------- linear algebra

/// `y = A x` for a column-major `rows x cols` matrix, by the textbook
/// double loop over rows then columns.
pub fn matvec_col_major(a: &[f32], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; rows];
    for (i, yi) in y.iter_mut().enumerate() {
        for (j, xj) in x.iter().enumerate().take(cols) {
            *yi += a[j * rows + i] as f64 * xj;
        }
    }
    y
}

// ---------------------------------------------------------------- mesh rasterization

/// Per-pixel reference rasterizer: for every pixel, tests every triangle by
/// solving for barycentrics directly, keeps the nearest, and shades with
/// perspective-correct per-vertex colors. Coverage on exact edges follows
/// the same top-left ownership rule as the library (needed for bit-equal
/// masks) but is derived from edge direction after orienting triangles
/// counter-clockwise in screen space.
pub struct MeshOracle {
    pub image: Image,
    pub mask: Vec<bool>,
    pub depth: Vec<f64>,
}

pub fn rasterize_mesh_oracle(
    verts: &[[f64; 3]],
    colors: &[[f64; 3]],
    tris: &[[u32; 3]],
    facial: &[bool],
    cam: &Camera,
) -> MeshOracle {
    let (w, h) = (cam.width() as usize, cam.height() as usize);
    let k = cam.intrinsics();
    let pose = cam.pose();
    let r = pose.fixed_view::<3, 3>(0, 0).into_owned();
    let c = pose.fixed_view::<3, 1>(0, 3).into_owned();
    // camera space: x right, y up, looking down -z; screen rows grow downward
    let project = |p: [f64; 3]| -> Option<(f64, f64, f64)> {
        let q = r.transpose() * (Vector3::from(p) - c);
        let depth = -q.z;
        if depth < cam.near() {
            return None;
        }
        let x = k[(0, 0)] * (q.x / depth) + k[(0, 2)];
        let y = k[(1, 1)] * (-q.y / depth) + k[(1, 2)];
        Some((x, y, depth))
    };
    let projected: Vec<Option<(f64, f64, f64)>> = verts.iter().map(|&p| project(p)).collect();
    let mut image = Image::new(w, h, 3, 0.0);
    let mut mask = vec![false; w * h];
    let mut depth = vec![cam.far(); w * h];
    for py in 0..h {
        for px in 0..w {
            let (sx, sy) = (px as f64 + 0.5, py as f64 + 0.5);
            for t in tris {
                let Some(p0) = projected[t[0] as usize] else { continue };
                let Some(p1) = projected[t[1] as usize] else { continue };
                let Some(p2) = projected[t[2] as usize] else { continue };
                let mut idx = [t[0] as usize, t[1] as usize, t[2] as usize];
                let mut v = [p0, p1, p2];
                let det = (v[1].0 - v[0].0) * (v[2].1 - v[0].1) - (v[2].0 - v[0].0) * (v[1].1 - v[0].1);
                if det == 0.0 || !det.is_finite() {
                    continue;
                }
                if det < 0.0 {
                    v.swap(1, 2);
                    idx.swap(1, 2);
                }
                let area = det.abs();
                // signed areas of the sub-triangles opposite each vertex
                let sub = |a: (f64, f64, f64), b: (f64, f64, f64)| (b.0 - a.0) * (sy - a.1) - (b.1 - a.1) * (sx - a.0);
                let l = [sub(v[1], v[2]), sub(v[2], v[0]), sub(v[0], v[1])];
                let edges = [(v[1], v[2]), (v[2], v[0]), (v[0], v[1])];
                let covered = l.iter().zip(edges).all(|(&li, (a, b))| {
                    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                    li > 0.0 || (li == 0.0 && (dy > 0.0 || (dy == 0.0 && dx < 0.0)))
                });
                if !covered {
                    continue;
                }
                let bary = [l[0] / area, l[1] / area, l[2] / area];
                let inv_z: f64 = (0..3).map(|i| bary[i] / v[i].2).sum();
                let z = 1.0 / inv_z;
                let pi = py * w + px;
                if !(z < depth[pi]) {
                    continue;
                }
                depth[pi] = z;
                mask[pi] = idx.iter().all(|&i| facial[i]);
                for ch in 0..3 {
                    let num: f64 = (0..3).map(|i| bary[i] / v[i].2 * colors[idx[i]][ch]).sum();
                    image.set(px, py, ch, (num * z).clamp(0.0, 1.0));
                }
            }
        }
    }
    MeshOracle { image, mask, depth }
}

// ---------------------------------------------------------------- misc

pub fn random_image(w: usize, h: usize, c: usize, seed: u64) -> Image {
    let mut g = rng(seed);
    Image::from_fn(w, h, c, |_, _, _| g.random::<f64>())
}

pub fn random_triplane(channels: usize, r: usize, e: f64, scale: f64, seed: u64) -> TriPlane {
    let mut g = rng(seed);
    let data = (0..3 * channels * r * r)
        .map(|_| (g.random_range(-1.0..1.0) * scale) as f32)
        .collect();
    TriPlane::from_data(channels, r, e, data).unwrap()
}

/// Mean squared error and PSNR on a unit range, computed directly.
pub fn psnr_reference(a: &Image, b: &Image) -> f64 {
    let n = a.data().len() as f64;
    let mse: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n;
    if mse == 0.0 {
        99.0
    } else {
        -10.0 * mse.log10()
    }
}
