//! Pinhole cameras, rays, and similarity alignment.
//!
//! Poses are camera-to-world. In camera space the camera looks down `-z`
//! with `+y` up and `+x` to the right; image rows grow downwards. Pixel
//! centers sit at half-integer coordinates.

use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Matrix4, SMatrix, SVector, Vector3};

use crate::binio;
use crate::error::{Error, Result};
use crate::textfmt;

const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    intrinsics: Matrix3<f64>,
    pose: Matrix4<f64>,
    width: u32,
    height: u32,
    near: f64,
    far: f64,
}

impl Camera {
    pub fn new(
        intrinsics: Matrix3<f64>,
        pose: Matrix4<f64>,
        width: u32,
        height: u32,
        near: f64,
        far: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter("camera resolution must be positive".into()));
        }
        let (fx, fy) = (intrinsics[(0, 0)], intrinsics[(1, 1)]);
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::Parameter(format!(
                "focal lengths must be positive, got ({fx}, {fy})"
            )));
        }
        if intrinsics.iter().any(|v| !v.is_finite()) || pose.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("camera matrices must be finite".into()));
        }
        if !(near > 0.0 && near < far && far.is_finite()) {
            return Err(Error::Parameter(format!(
                "need 0 < near < far, got near={near} far={far}"
            )));
        }
        let bottom = pose.fixed_view::<1, 4>(3, 0);
        if bottom != nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0) {
            return Err(Error::Parameter("pose last row must be [0, 0, 0, 1]".into()));
        }
        check_rotation(&pose.fixed_view::<3, 3>(0, 0).into_owned())?;
        Ok(Camera {
            intrinsics,
            pose,
            width,
            height,
            near,
            far,
        })
    }

    /// Camera with square pixels, principal point at the image center and
    /// the given vertical field of view.
    pub fn from_fov(
        width: u32,
        height: u32,
        vertical_fov_deg: f64,
        pose: Matrix4<f64>,
        near: f64,
        far: f64,
    ) -> Result<Self> {
        if !(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0) {
            return Err(Error::Parameter(format!(
                "field of view {vertical_fov_deg} out of range"
            )));
        }
        let f = 0.5 * height as f64 / (0.5 * vertical_fov_deg.to_radians()).tan();
        let k = Matrix3::new(f, 0.0, 0.5 * width as f64, 0.0, f, 0.5 * height as f64, 0.0, 0.0, 1.0);
        Camera::new(k, pose, width, height, near, far)
    }

    /// Camera at `eye` looking at `target` with `up` roughly vertical.
    #[allow(clippy::too_many_arguments)]
    pub fn look_at(
        width: u32,
        height: u32,
        vertical_fov_deg: f64,
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
        near: f64,
        far: f64,
    ) -> Result<Self> {
        let back = (eye - target)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::Parameter("eye and target coincide".into()))?;
        let right = up
            .cross(&back)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::Parameter("up vector parallel to view direction".into()))?;
        let true_up = back.cross(&right);
        let mut pose = Matrix4::identity();
        pose.fixed_view_mut::<3, 1>(0, 0).copy_from(&right);
        pose.fixed_view_mut::<3, 1>(0, 1).copy_from(&true_up);
        pose.fixed_view_mut::<3, 1>(0, 2).copy_from(&back);
        pose.fixed_view_mut::<3, 1>(0, 3).copy_from(&eye);
        Camera::from_fov(width, height, vertical_fov_deg, pose, near, far)
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn pose(&self) -> &Matrix4<f64> {
        &self.pose
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.pose.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn position(&self) -> Vector3<f64> {
        self.pose.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Same camera at a different image size, keeping the field of view.
    pub fn with_resolution(&self, width: u32, height: u32) -> Result<Camera> {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        let mut k = self.intrinsics;
        k[(0, 0)] *= sx;
        k[(0, 1)] *= sx;
        k[(0, 2)] *= sx;
        k[(1, 1)] *= sy;
        k[(1, 2)] *= sy;
        Camera::new(k, self.pose, width, height, self.near, self.far)
    }

    /// Ray through the center of pixel (`px`, `py`).
    pub fn ray_for_pixel(&self, px: u32, py: u32) -> Result<Ray> {
        if px >= self.width || py >= self.height {
            return Err(Error::OutOfBounds {
                px,
                py,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.ray_through(px as f64 + 0.5, py as f64 + 0.5))
    }

    /// Ray through a continuous image position (pixel units, origin at the
    /// top-left corner of the image).
    pub fn ray_through(&self, x: f64, y: f64) -> Ray {
        let k = &self.intrinsics;
        let (fx, fy, skew, cx, cy) = (k[(0, 0)], k[(1, 1)], k[(0, 1)], k[(0, 2)], k[(1, 2)]);
        let yn = (y - cy) / fy;
        let xn = (x - cx - skew * yn) / fx;
        let dir_cam = Vector3::new(xn, -yn, -1.0);
        let direction = (self.rotation() * dir_cam).normalize();
        Ray {
            origin: self.position(),
            direction,
        }
    }

    /// World point to camera space.
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().transpose() * (p - self.position())
    }

    /// Projects a world point to continuous pixel coordinates, returning
    /// `(x, y, depth)` with depth measured along the optical axis. `None`
    /// for points not in front of the camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let c = self.to_camera(p);
        let depth = -c.z;
        if depth <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        let xn = c.x / depth;
        let yn = -c.y / depth;
        let x = k[(0, 0)] * xn + k[(0, 1)] * yn + k[(0, 2)];
        let y = k[(1, 1)] * yn + k[(1, 2)];
        Some((x, y, depth))
    }

    pub fn to_text(&self) -> String {
        let k = self.intrinsics.transpose();
        let p = self.pose.transpose();
        format!(
            "intrinsics = {}\npose = {}\nwidth = {}\nheight = {}\nnear = {:?}\nfar = {:?}\n",
            textfmt::format_floats(k.iter().copied()),
            textfmt::format_floats(p.iter().copied()),
            self.width,
            self.height,
            self.near,
            self.far
        )
    }

    pub fn from_text(text: &str) -> Result<Camera> {
        let mut intrinsics = None;
        let mut pose = None;
        let (mut width, mut height, mut near, mut far) = (None, None, None, None);
        for e in textfmt::parse_entries(text)? {
            let nums = textfmt::parse_floats(&e.value, e.line)?;
            let scalar = || -> Result<f64> {
                match nums.as_slice() {
                    [v] => Ok(*v),
                    _ => Err(Error::Input(format!("line {}: `{}` takes one number", e.line, e.key))),
                }
            };
            match e.key.as_str() {
                "intrinsics" if nums.len() == 9 => intrinsics = Some(Matrix3::from_row_slice(&nums)),
                "pose" if nums.len() == 16 => pose = Some(Matrix4::from_row_slice(&nums)),
                "intrinsics" | "pose" => {
                    return Err(Error::Input(format!(
                        "line {}: `{}` has {} numbers",
                        e.line,
                        e.key,
                        nums.len()
                    )))
                }
                "width" => width = Some(pixel_count(scalar()?, e.line)?),
                "height" => height = Some(pixel_count(scalar()?, e.line)?),
                "near" => near = Some(scalar()?),
                "far" => far = Some(scalar()?),
                other => return Err(Error::Input(format!("line {}: unknown camera field `{other}`", e.line))),
            }
        }
        let missing = |name: &str| Error::Input(format!("camera file missing `{name}`"));
        Camera::new(
            intrinsics.ok_or_else(|| missing("intrinsics"))?,
            pose.ok_or_else(|| missing("pose"))?,
            width.ok_or_else(|| missing("width"))?,
            height.ok_or_else(|| missing("height"))?,
            near.ok_or_else(|| missing("near"))?,
            far.ok_or_else(|| missing("far"))?,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Camera> {
        let path = path.as_ref();
        let bytes = binio::read_file(path)?;
        let text =
            String::from_utf8(bytes).map_err(|_| Error::Input("camera file is not UTF-8".into()).in_file(path))?;
        Camera::from_text(&text).map_err(|e| e.in_file(path))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), self.to_text().as_bytes())
    }
}

fn pixel_count(v: f64, line: usize) -> Result<u32> {
    if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
        return Err(Error::Input(format!("line {line}: `{v}` is not a positive integer")));
    }
    Ok(v as u32)
}

fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let err = (r.transpose() * r - Matrix3::identity()).abs().max();
    if err > ORTHONORMAL_TOL {
        return Err(Error::Parameter(format!(
            "pose rotation not orthonormal (error {err:e})"
        )));
    }
    if r.determinant() <= 0.0 {
        return Err(Error::Parameter("pose rotation has negative determinant".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    /// Unit length.
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, direction: Vector3<f64>) -> Result<Ray> {
        let direction = direction
            .try_normalize(1e-300)
            .ok_or_else(|| Error::Input("ray direction is zero".into()))?;
        Ok(Ray { origin, direction })
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.direction * t
    }

    /// Parameter interval where the ray is inside the axis-aligned cube
    /// `[-half, half]^3`, or `None` if it misses.
    pub fn cube_interval(&self, half: f64) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for axis in 0..3 {
            let o = self.origin[axis];
            let d = self.direction[axis];
            if d == 0.0 {
                if o < -half || o > half {
                    return None;
                }
                continue;
            }
            let a = (-half - o) / d;
            let b = (half - o) / d;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// `x -> scale * rotation * x + translation` in `K` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform<const K: usize> {
    pub scale: f64,
    pub rotation: SMatrix<f64, K, K>,
    pub translation: SVector<f64, K>,
}

impl<const K: usize> SimilarityTransform<K> {
    pub fn identity() -> Self {
        SimilarityTransform {
            scale: 1.0,
            rotation: SMatrix::identity(),
            translation: SVector::zeros(),
        }
    }

    pub fn apply_point(&self, p: &[f64; K]) -> [f64; K] {
        let v = self.rotation * SVector::<f64, K>::from_column_slice(p) * self.scale + self.translation;
        let mut out = [0.0; K];
        out.copy_from_slice(v.as_slice());
        out
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        SimilarityTransform {
            scale: 1.0 / self.scale,
            rotation: rt,
            translation: -(rt * self.translation) / self.scale,
        }
    }
}

pub type Similarity2 = SimilarityTransform<2>;
pub type Similarity3 = SimilarityTransform<3>;

/// Maps every point through `t`.
pub fn apply_similarity<const K: usize>(t: &SimilarityTransform<K>, points: &[[f64; K]]) -> Vec<[f64; K]> {
    points.iter().map(|p| t.apply_point(p)).collect()
}

/// Sum of squared distances between the transformed source and the target.
pub fn alignment_residual<const K: usize>(
    t: &SimilarityTransform<K>,
    source: &[[f64; K]],
    target: &[[f64; K]],
) -> Result<f64> {
    if source.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} source vs {} target points",
            source.len(),
            target.len()
        )));
    }
    Ok(source
        .iter()
        .zip(target)
        .map(|(s, q)| {
            let m = t.apply_point(s);
            (0..K).map(|i| (m[i] - q[i]).powi(2)).sum::<f64>()
        })
        .sum())
}

/// Least-squares similarity (or rigid, when `with_scale` is false) transform
/// taking `source` onto `target`.
///
/// Closed-form orthogonal alignment from the SVD of the cross-covariance;
/// reflections are removed by flipping the direction of the smallest
/// singular value.
pub fn procrustes_align<const K: usize>(
    source: &[[f64; K]],
    target: &[[f64; K]],
    with_scale: bool,
) -> Result<SimilarityTransform<K>> {
    if K != 2 && K != 3 {
        return Err(Error::Parameter(format!(
            "alignment supports 2 or 3 dimensions, not {K}"
        )));
    }
    if source.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} source vs {} target points",
            source.len(),
            target.len()
        )));
    }
    let n = source.len();
    if n < K + 1 {
        return Err(Error::Degenerate(format!("need at least {} points, got {n}", K + 1)));
    }
    if source.iter().chain(target).flatten().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite point coordinates".into()));
    }

    let to_vec = |p: &[f64; K]| SVector::<f64, K>::from_column_slice(p);
    let inv_n = 1.0 / n as f64;
    let mu_s: SVector<f64, K> = source.iter().map(to_vec).sum::<SVector<f64, K>>() * inv_n;
    let mu_t: SVector<f64, K> = target.iter().map(to_vec).sum::<SVector<f64, K>>() * inv_n;

    let mut cov = DMatrix::<f64>::zeros(K, K);
    let mut var_s = 0.0;
    let mut extent = 0.0f64;
    for (s, q) in source.iter().zip(target) {
        let ds = to_vec(s) - mu_s;
        let dt = to_vec(q) - mu_t;
        var_s += ds.norm_squared();
        extent = extent.max(mu_s.abs().max()).max(to_vec(s).abs().max());
        for r in 0..K {
            for c in 0..K {
                cov[(r, c)] += dt[r] * ds[c];
            }
        }
    }
    cov *= inv_n;
    var_s *= inv_n;
    // Relative threshold so that coincident points with rounding noise still count.
    if var_s <= (1e-12 * extent.max(1.0)).powi(2) {
        return Err(Error::Degenerate("source points are coincident".into()));
    }

    let svd = cov.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numeric("SVD failed to produce U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numeric("SVD failed to produce V".into()))?;
    let mut sigma = svd.singular_values.clone();

    // nalgebra does not sort singular values; find the smallest.
    let smallest = (0..K).min_by(|&a, &b| sigma[a].total_cmp(&sigma[b])).unwrap_or(K - 1);
    let mut flip = DMatrix::<f64>::identity(K, K);
    if (u.determinant() * v_t.determinant()) < 0.0 {
        flip[(smallest, smallest)] = -1.0;
        sigma[smallest] = -sigma[smallest];
    }
    let rot_dyn = &u * &flip * &v_t;
    let scale = if with_scale { sigma.sum() / var_s } else { 1.0 };
    if !(scale > 0.0) {
        return Err(Error::Degenerate("target collapses to a point".into()));
    }

    let mut rotation = SMatrix::<f64, K, K>::zeros();
    for r in 0..K {
        for c in 0..K {
            rotation[(r, c)] = rot_dyn[(r, c)];
        }
    }
    let translation = mu_t - rotation * mu_s * scale;
    Ok(SimilarityTransform {
        scale,
        rotation,
        translation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> Camera {
        Camera::new(
            Matrix3::new(100.0, 0.0, 32.0, 0.0, 100.0, 32.0, 0.0, 0.0, 1.0),
            Matrix4::identity(),
            64,
            64,
            0.1,
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn center_pixel_looks_down_optical_axis() {
        // principal point at 32 sits on a pixel boundary; use a 65-wide image
        let c = Camera::new(
            Matrix3::new(100.0, 0.0, 32.5, 0.0, 100.0, 32.5, 0.0, 0.0, 1.0),
            Matrix4::identity(),
            65,
            65,
            0.1,
            10.0,
        )
        .unwrap();
        let r = c.ray_for_pixel(32, 32).unwrap();
        assert_eq!(r.direction, Vector3::new(0.0, 0.0, -1.0));
        assert_eq!(r.origin, Vector3::zeros());
    }

    #[test]
    fn pixel_one_focal_length_right_is_45_degrees() {
        let c = Camera::new(
            Matrix3::new(10.0, 0.0, 10.5, 0.0, 10.0, 10.5, 0.0, 0.0, 1.0),
            Matrix4::identity(),
            32,
            21,
            0.1,
            10.0,
        )
        .unwrap();
        let r = c.ray_for_pixel(20, 10).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.direction - Vector3::new(h, 0.0, -h)).norm() < 1e-12);
    }

    #[test]
    fn out_of_bounds_pixel() {
        assert!(matches!(cam().ray_for_pixel(64, 0), Err(Error::OutOfBounds { .. })));
        assert!(matches!(cam().ray_for_pixel(0, 64), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn rejects_bad_cameras() {
        let k = *cam().intrinsics();
        let mut reflect = Matrix4::identity();
        reflect[(0, 0)] = -1.0;
        assert!(Camera::new(k, reflect, 4, 4, 0.1, 1.0).is_err());
        assert!(Camera::new(k, Matrix4::identity(), 4, 4, 1.0, 0.5).is_err());
        assert!(Camera::new(k, Matrix4::identity() * 2.0, 4, 4, 0.1, 1.0).is_err());
        let mut bad_k = k;
        bad_k[(0, 0)] = 0.0;
        assert!(Camera::new(bad_k, Matrix4::identity(), 4, 4, 0.1, 1.0).is_err());
    }

    #[test]
    fn project_inverts_ray() {
        let c = Camera::look_at(
            40,
            30,
            40.0,
            Vector3::new(1.0, 2.0, 3.0),
            Vector3::zeros(),
            Vector3::y(),
            0.1,
            10.0,
        )
        .unwrap();
        let r = c.ray_for_pixel(7, 21).unwrap();
        let (x, y, d) = c.project(&r.at(2.5)).unwrap();
        assert!((x - 7.5).abs() < 1e-9 && (y - 21.5).abs() < 1e-9);
        assert!(d > 0.0);
    }

    #[test]
    fn camera_text_round_trip() {
        let c = Camera::look_at(
            17,
            9,
            33.0,
            Vector3::new(0.3, -1.0, 2.0),
            Vector3::new(0.0, 0.1, 0.0),
            Vector3::y(),
            0.25,
            7.5,
        )
        .unwrap();
        let back = Camera::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn camera_text_missing_field() {
        let text = "intrinsics = 1 0 0 0 1 0 0 0 1\nwidth = 4\nheight = 4\nnear = 0.1\nfar = 2\n";
        assert!(Camera::from_text(text).is_err());
    }

    #[test]
    fn cube_interval_axis_ray() {
        let r = Ray::new(Vector3::new(0.0, 0.0, 3.0), Vector3::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(r.cube_interval(1.0), Some((2.0, 4.0)));
        let miss = Ray::new(Vector3::new(2.0, 0.0, 3.0), Vector3::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(miss.cube_interval(1.0), None);
    }

    #[test]
    fn procrustes_identity() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]];
        let t = procrustes_align(&pts, &pts, true).unwrap();
        assert!((t.scale - 1.0).abs() < 1e-12);
        assert!((t.rotation - SMatrix::<f64, 2, 2>::identity()).abs().max() < 1e-12);
        assert!(t.translation.norm() < 1e-12);
        assert!(alignment_residual(&t, &pts, &pts).unwrap() < 1e-20);
    }

    #[test]
    fn procrustes_scale_and_shift() {
        let src = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 3.0], [-1.0, 0.5]];
        let dst: Vec<[f64; 2]> = src.iter().map(|p| [2.0 * p[0] + 1.0, 2.0 * p[1] + 1.0]).collect();
        let t = procrustes_align(&src, &dst, true).unwrap();
        assert!((t.scale - 2.0).abs() < 1e-9);
        assert!((t.translation - SVector::<f64, 2>::new(1.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn procrustes_without_scale_keeps_unit_scale() {
        let src = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let dst: Vec<[f64; 3]> = src.iter().map(|p| [3.0 * p[0], 3.0 * p[1], 3.0 * p[2]]).collect();
        let t = procrustes_align(&src, &dst, false).unwrap();
        assert_eq!(t.scale, 1.0);
    }

    #[test]
    fn procrustes_rejects_reflection() {
        // target is a mirror image; the best proper rotation must still have det +1
        let src = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [1.0, 3.0]];
        let dst: Vec<[f64; 2]> = src.iter().map(|p| [-p[0], p[1]]).collect();
        let t = procrustes_align(&src, &dst, true).unwrap();
        assert!((t.rotation.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn procrustes_degenerate() {
        let src = [[1.0, 1.0]; 4];
        let dst = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        assert!(matches!(procrustes_align(&src, &dst, true), Err(Error::Degenerate(_))));
        assert!(matches!(
            procrustes_align(&[[0.0, 0.0], [1.0, 0.0]], &[[0.0, 0.0], [1.0, 0.0]], true),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn apply_similarity_translation() {
        let t = Similarity3 {
            scale: 1.0,
            rotation: SMatrix::identity(),
            translation: SVector::<f64, 3>::new(1.0, 2.0, 3.0),
        };
        assert_eq!(apply_similarity(&t, &[[0.0; 3]]), vec![[1.0, 2.0, 3.0]]);
        let id = Similarity3::identity();
        let pts = [[0.5, -1.0, 2.0]];
        assert_eq!(apply_similarity(&id, &pts), pts.to_vec());
    }
}
