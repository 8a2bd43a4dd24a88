//! Appearance transfer: lift per-pixel features through rendered depth into
//! a neural point cloud, then rasterize the cloud onto a tri-plane by
//! nearest projected point.

use std::path::Path;

use rayon::prelude::*;

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::imaging::{FeatureImage, Image, PixelMask};
use crate::kdtree::KdTree2;
use crate::triplane::{Plane, TriPlane};

/// Images whose pixels can be zeroed by a [`PixelMask`].
pub trait Maskable: Sized {
    fn spatial_size(&self) -> (usize, usize);
    fn zero_pixel(&mut self, x: usize, y: usize);
}

impl Maskable for Image {
    fn spatial_size(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn zero_pixel(&mut self, x: usize, y: usize) {
        for c in 0..self.channels() {
            self.set(x, y, c, 0.0);
        }
    }
}

impl Maskable for FeatureImage {
    fn spatial_size(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn zero_pixel(&mut self, x: usize, y: usize) {
        let (c, h, w) = (self.channels(), self.height(), self.width());
        let data = self.data_mut();
        for k in 0..c {
            data[(k * h + y) * w + x] = 0.0;
        }
    }
}

/// Zeroes every pixel where `mask` is unset, in all channels.
pub fn mask_apply<T: Maskable + Clone>(img: &T, mask: &PixelMask) -> Result<T> {
    let (w, h) = img.spatial_size();
    if (w, h) != (mask.width(), mask.height()) {
        return Err(Error::Shape(format!(
            "image is {w}x{h}, mask is {}x{}",
            mask.width(),
            mask.height()
        )));
    }
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                out.zero_pixel(x, y);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralPointCloud {
    channels: usize,
    positions: Vec<[f32; 3]>,
    /// `len x channels`, point-major.
    features: Vec<f32>,
}

const CLOUD_MAGIC: &[u8; 4] = b"NPC1";

impl NeuralPointCloud {
    pub fn new(channels: usize) -> Self {
        NeuralPointCloud {
            channels,
            positions: Vec::new(),
            features: Vec::new(),
        }
    }

    pub fn push(&mut self, position: [f32; 3], feature: &[f32]) -> Result<()> {
        if feature.len() != self.channels {
            return Err(Error::Shape(format!(
                "point feature has {} channels, cloud has {}",
                feature.len(),
                self.channels
            )));
        }
        if position.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite point position {position:?}")));
        }
        self.positions.push(position);
        self.features.extend_from_slice(feature);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn positions(&self) -> &[[f32; 3]] {
        &self.positions
    }

    pub fn feature(&self, i: usize) -> &[f32] {
        &self.features[i * self.channels..(i + 1) * self.channels]
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(CLOUD_MAGIC);
        w.u32(binio::dim_u32(self.len(), "point count")?)
            .u32(binio::dim_u32(self.channels, "channels")?);
        for i in 0..self.len() {
            w.f32s(&self.positions[i]).f32s(self.feature(i));
        }
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<NeuralPointCloud> {
        let mut r = Reader::new(bytes);
        r.magic(CLOUD_MAGIC)?;
        let count = r.u32()? as usize;
        let channels = r.u32()? as usize;
        let record = channels + 3;
        let total = count
            .checked_mul(record)
            .ok_or_else(|| r.invalid("point count overflows"))?;
        let start = r.offset();
        let values = r.f32_vec(total)?;
        r.finish()?;
        let mut cloud = NeuralPointCloud::new(channels);
        cloud.positions.reserve(count);
        cloud.features.reserve(count * channels);
        for (i, rec) in values.chunks_exact(record).enumerate() {
            if rec.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format {
                    offset: start + i * record * 4,
                    message: format!("point {i} has non-finite values"),
                });
            }
            cloud.positions.push([rec[0], rec[1], rec[2]]);
            cloud.features.extend_from_slice(&rec[3..]);
        }
        Ok(cloud)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<NeuralPointCloud> {
        let path = path.as_ref();
        NeuralPointCloud::from_bytes(&binio::read_file(path)?).map_err(|e| e.in_file(path))
    }
}

/// Back-projects every valid pixel `(i, j)` to `o + depth[i, j] * d` along
/// its camera ray, carrying the pixel's feature vector. Feature images of a
/// different size are resampled to the depth resolution by nearest pixel.
pub fn lift(features: &FeatureImage, depth: &Image, cam: &Camera, valid: &PixelMask) -> Result<NeuralPointCloud> {
    let (w, h) = (depth.width(), depth.height());
    if depth.channels() != 1 {
        return Err(Error::Shape(format!("depth map has {} channels", depth.channels())));
    }
    if (valid.width(), valid.height()) != (w, h) {
        return Err(Error::Shape(format!(
            "valid mask is {}x{}, depth is {w}x{h}",
            valid.width(),
            valid.height()
        )));
    }
    if (cam.width() as usize, cam.height() as usize) != (w, h) {
        return Err(Error::Shape(format!(
            "camera is {}x{}, depth is {w}x{h}",
            cam.width(),
            cam.height()
        )));
    }
    let features = features.resize_nearest(h, w);
    let mut cloud = NeuralPointCloud::new(features.channels());
    for y in 0..h {
        for x in 0..w {
            if !valid.get(x, y) {
                continue;
            }
            let d = depth.get(x, y, 0);
            if !d.is_finite() {
                return Err(Error::Input(format!("non-finite depth at pixel ({x}, {y})")));
            }
            let ray = cam.ray_for_pixel(x as u32, y as u32)?;
            let p = ray.at(d);
            cloud.push([p.x as f32, p.y as f32, p.z as f32], &features.pixel(y, x))?;
        }
    }
    Ok(cloud)
}

/// Index of the nearest cloud point for every texel, per plane, in
/// `[plane][row * resolution + col]` order. `None` for an empty cloud.
pub fn rasterize_assignments(
    cloud: &NeuralPointCloud,
    resolution: usize,
    extent: f64,
) -> Result<[Vec<Option<usize>>; 3]> {
    // Dummy layout used only for texel-center coordinates.
    let layout = TriPlane::zeros(1, resolution, extent)?;
    let centers: Vec<f64> = (0..resolution).map(|i| layout.texel_center(i)).collect();
    Ok(Plane::ALL.map(|plane| {
        let projected = cloud
            .positions
            .iter()
            .map(|p| {
                let (u, v) = plane.project([p[0] as f64, p[1] as f64, p[2] as f64]);
                [u, v]
            })
            .collect();
        let tree = KdTree2::build(projected);
        (0..resolution * resolution)
            .into_par_iter()
            .map(|i| tree.nearest([centers[i % resolution], centers[i / resolution]]))
            .collect()
    }))
}

/// Writes into every texel of every plane the feature of the cloud point
/// whose projection onto that plane is nearest to the texel center. An empty
/// cloud yields a zero tri-plane.
pub fn rasterize(cloud: &NeuralPointCloud, channels: usize, resolution: usize, extent: f64) -> Result<TriPlane> {
    if cloud.channels != channels {
        return Err(Error::Shape(format!(
            "cloud features have {} channels, tri-plane needs {channels}",
            cloud.channels
        )));
    }
    let mut t = TriPlane::zeros(channels, resolution, extent)?;
    if cloud.is_empty() {
        return Ok(t);
    }
    let assignments = rasterize_assignments(cloud, resolution, extent)?;
    for (plane, assigned) in Plane::ALL.into_iter().zip(&assignments) {
        for (i, nearest) in assigned.iter().enumerate() {
            let Some(p) = *nearest else { continue };
            let feature = cloud.feature(p);
            for (c, &f) in feature.iter().enumerate() {
                t.set(plane, c, i / resolution, i % resolution, f);
            }
        }
    }
    Ok(t)
}
