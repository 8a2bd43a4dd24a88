//! Tri-plane feature fields.
//!
//! Three axis-aligned feature grids (XY, XZ, YZ) spanning
//! `[-extent, extent]^2`. Grid nodes sit at texel centers; a 3D point's
//! feature is the sum of the bilinear samples of its three projections.

use std::path::Path;

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TPL1";
pub const PLANES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    Xy = 0,
    Xz = 1,
    Yz = 2,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Xy, Plane::Xz, Plane::Yz];

    /// Coordinates of `p` on this plane, `(column axis, row axis)`.
    #[inline]
    pub fn project(self, p: [f64; 3]) -> (f64, f64) {
        match self {
            Plane::Xy => (p[0], p[1]),
            Plane::Xz => (p[0], p[2]),
            Plane::Yz => (p[1], p[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriPlane {
    channels: usize,
    resolution: usize,
    extent: f32,
    data: Vec<f32>,
}

/// Four bilinear taps on one plane: flat offsets of channel 0 plus weights.
/// Channel `c` lives at `offset + c * resolution^2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PlaneTaps {
    pub offsets: [usize; 4],
    pub weights: [f64; 4],
}

impl TriPlane {
    pub fn new(channels: usize, resolution: usize, extent: f64, fill: f32) -> Result<TriPlane> {
        check_dims(channels, resolution, extent)?;
        if !fill.is_finite() {
            return Err(Error::Parameter("fill value must be finite".into()));
        }
        let len = PLANES
            .checked_mul(channels)
            .and_then(|v| v.checked_mul(resolution))
            .and_then(|v| v.checked_mul(resolution))
            .ok_or_else(|| Error::Parameter("tri-plane size overflows".into()))?;
        Ok(TriPlane {
            channels,
            resolution,
            extent: extent as f32,
            data: vec![fill; len],
        })
    }

    pub fn zeros(channels: usize, resolution: usize, extent: f64) -> Result<TriPlane> {
        TriPlane::new(channels, resolution, extent, 0.0)
    }

    /// Builds a tri-plane from raw plane-major, channel-major, row-major data.
    pub fn from_data(channels: usize, resolution: usize, extent: f64, data: Vec<f32>) -> Result<TriPlane> {
        check_dims(channels, resolution, extent)?;
        if data.len() != PLANES * channels * resolution * resolution {
            return Err(Error::Shape(format!(
                "{} values for a 3x{channels}x{resolution}x{resolution} tri-plane",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("tri-plane features must be finite".into()));
        }
        Ok(TriPlane {
            channels,
            resolution,
            extent: extent as f32,
            data,
        })
    }

    /// Fills every texel from `f(plane, channel, u, v)` evaluated at the
    /// texel center.
    pub fn from_fn(
        channels: usize,
        resolution: usize,
        extent: f64,
        mut f: impl FnMut(Plane, usize, f64, f64) -> f32,
    ) -> Result<TriPlane> {
        let mut t = TriPlane::zeros(channels, resolution, extent)?;
        for plane in Plane::ALL {
            for c in 0..channels {
                for row in 0..resolution {
                    let v = t.texel_center(row);
                    for col in 0..resolution {
                        let u = t.texel_center(col);
                        let idx = t.index(plane, c, row, col);
                        t.data[idx] = f(plane, c, u, v);
                    }
                }
            }
        }
        if t.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("tri-plane features must be finite".into()));
        }
        Ok(t)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn extent(&self) -> f64 {
        self.extent as f64
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn same_layout(&self, other: &TriPlane) -> bool {
        self.channels == other.channels && self.resolution == other.resolution && self.extent == other.extent
    }

    #[inline]
    pub fn index(&self, plane: Plane, channel: usize, row: usize, col: usize) -> usize {
        ((plane as usize * self.channels + channel) * self.resolution + row) * self.resolution + col
    }

    #[inline]
    pub fn get(&self, plane: Plane, channel: usize, row: usize, col: usize) -> f32 {
        self.data[self.index(plane, channel, row, col)]
    }

    pub fn set(&mut self, plane: Plane, channel: usize, row: usize, col: usize, value: f32) {
        let i = self.index(plane, channel, row, col);
        self.data[i] = value;
    }

    /// World coordinate of texel center `i` along either plane axis.
    #[inline]
    pub fn texel_center(&self, i: usize) -> f64 {
        let e = self.extent as f64;
        -e + (i as f64 + 0.5) * (2.0 * e / self.resolution as f64)
    }

    /// Sum of the three plane samples at `p`; points outside the cube are
    /// clamped to its boundary.
    pub fn sample_point(&self, p: [f64; 3]) -> Result<Vec<f64>> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite sample position {p:?}")));
        }
        let mut out = vec![0.0; self.channels];
        self.sample_into(p, &mut out);
        Ok(out)
    }

    pub(crate) fn sample_into(&self, p: [f64; 3], out: &mut [f64]) {
        out.fill(0.0);
        let stride = self.resolution * self.resolution;
        for taps in self.taps(p) {
            for (&off, &w) in taps.offsets.iter().zip(&taps.weights) {
                if w == 0.0 {
                    continue;
                }
                for (c, o) in out.iter_mut().enumerate() {
                    *o += w * self.data[off + c * stride] as f64;
                }
            }
        }
    }

    #[inline]
    fn grid_coord(&self, u: f64) -> (usize, f64) {
        let r = self.resolution;
        let e = self.extent as f64;
        let g = ((u + e) * (r as f64 / (2.0 * e)) - 0.5).clamp(0.0, (r - 1) as f64);
        let i0 = (g.floor() as usize).min(r - 2);
        (i0, g - i0 as f64)
    }

    pub(crate) fn taps(&self, p: [f64; 3]) -> [PlaneTaps; 3] {
        let r = self.resolution;
        let plane_stride = self.channels * r * r;
        Plane::ALL.map(|plane| {
            let (u, v) = plane.project(p);
            let (c0, fu) = self.grid_coord(u);
            let (r0, fv) = self.grid_coord(v);
            let base = plane as usize * plane_stride + r0 * r + c0;
            PlaneTaps {
                offsets: [base, base + 1, base + r, base + r + 1],
                weights: [(1.0 - fu) * (1.0 - fv), fu * (1.0 - fv), (1.0 - fu) * fv, fu * fv],
            }
        })
    }

    pub fn add(&self, other: &TriPlane) -> Result<TriPlane> {
        if !self.same_layout(other) {
            return Err(Error::Shape(format!(
                "cannot add tri-planes 3x{}x{r}x{r} (extent {}) and 3x{}x{q}x{q} (extent {})",
                self.channels,
                self.extent,
                other.channels,
                other.extent,
                r = self.resolution,
                q = other.resolution
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(self.with_data(data))
    }

    pub fn scaled(&self, s: f32) -> TriPlane {
        self.with_data(self.data.iter().map(|v| v * s).collect())
    }

    fn with_data(&self, data: Vec<f32>) -> TriPlane {
        TriPlane {
            channels: self.channels,
            resolution: self.resolution,
            extent: self.extent,
            data,
        }
    }

    /// Mean squared difference over all horizontally and vertically adjacent
    /// texel pairs, across planes and channels.
    pub fn tv_loss(&self) -> f64 {
        let r = self.resolution;
        let mut sum = 0.0;
        for block in self.data.chunks_exact(r * r) {
            for row in 0..r {
                for col in 0..r {
                    let v = block[row * r + col] as f64;
                    if col + 1 < r {
                        sum += (block[row * r + col + 1] as f64 - v).powi(2);
                    }
                    if row + 1 < r {
                        sum += (block[(row + 1) * r + col] as f64 - v).powi(2);
                    }
                }
            }
        }
        sum / self.tv_pair_count() as f64
    }

    fn tv_pair_count(&self) -> usize {
        PLANES * self.channels * 2 * self.resolution * (self.resolution - 1)
    }

    /// Gradient of [`TriPlane::tv_loss`] w.r.t. every feature.
    pub fn tv_gradient(&self) -> TriPlaneGradient {
        let r = self.resolution;
        let norm = 2.0 / self.tv_pair_count() as f64;
        let mut grad = TriPlaneGradient::zeros_like(self);
        for (block, g) in self.data.chunks_exact(r * r).zip(grad.data.chunks_exact_mut(r * r)) {
            for row in 0..r {
                for col in 0..r {
                    let i = row * r + col;
                    let v = block[i] as f64;
                    if col + 1 < r {
                        let d = norm * (v - block[i + 1] as f64);
                        g[i] += d;
                        g[i + 1] -= d;
                    }
                    if row + 1 < r {
                        let d = norm * (v - block[i + r] as f64);
                        g[i] += d;
                        g[i + r] -= d;
                    }
                }
            }
        }
        grad
    }

    /// `self -= step * grad`, in place.
    pub fn descend(&mut self, grad: &TriPlaneGradient, step: f64) -> Result<()> {
        if grad.data.len() != self.data.len() {
            return Err(Error::Shape("gradient does not match tri-plane layout".into()));
        }
        for (v, g) in self.data.iter_mut().zip(&grad.data) {
            *v = (*v as f64 - step * g) as f32;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(MAGIC);
        let res = binio::dim_u32(self.resolution, "resolution")?;
        w.u32(PLANES as u32)
            .u32(binio::dim_u32(self.channels, "channels")?)
            .u32(res)
            .u32(res)
            .u32(0)
            .f32(self.extent)
            .f32s(&self.data);
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TriPlane> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        let planes = r.u32()?;
        if planes as usize != PLANES {
            return Err(Error::Format {
                offset: 4,
                message: format!("plane count {planes}, expected 3"),
            });
        }
        let channels = r.u32()? as usize;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        if rows != cols {
            return Err(Error::Format {
                offset: 12,
                message: format!("non-square planes {rows}x{cols}"),
            });
        }
        let reserved = r.u32()?;
        if reserved != 0 {
            return Err(Error::Format {
                offset: 20,
                message: format!("reserved field is {reserved}"),
            });
        }
        let extent_offset = r.offset();
        let extent = r.f32()?;
        if channels == 0 || rows < 2 || !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Format {
                offset: extent_offset,
                message: format!("invalid header: channels {channels}, resolution {rows}, extent {extent}"),
            });
        }
        let count = PLANES
            .checked_mul(channels)
            .and_then(|v| v.checked_mul(rows))
            .and_then(|v| v.checked_mul(cols))
            .ok_or_else(|| r.invalid("dimensions overflow"))?;
        let data_offset = r.offset();
        let data = r.f32_vec(count)?;
        r.finish()?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format {
                offset: data_offset + 4 * i,
                message: "non-finite feature".into(),
            });
        }
        Ok(TriPlane {
            channels,
            resolution: rows,
            extent,
            data,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TriPlane> {
        let path = path.as_ref();
        TriPlane::from_bytes(&binio::read_file(path)?).map_err(|e| e.in_file(path))
    }
}

fn check_dims(channels: usize, resolution: usize, extent: f64) -> Result<()> {
    if channels == 0 {
        return Err(Error::Parameter("tri-plane needs at least one channel".into()));
    }
    if resolution < 2 {
        return Err(Error::Parameter(format!("tri-plane resolution {resolution} < 2")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::Parameter(format!("tri-plane extent {extent} must be positive")));
    }
    Ok(())
}

/// Per-feature derivatives, laid out like [`TriPlane`] data.
#[derive(Debug, Clone, PartialEq)]
pub struct TriPlaneGradient {
    pub channels: usize,
    pub resolution: usize,
    pub data: Vec<f64>,
}

impl TriPlaneGradient {
    pub fn zeros_like(t: &TriPlane) -> TriPlaneGradient {
        TriPlaneGradient {
            channels: t.channels,
            resolution: t.resolution,
            data: vec![0.0; t.data.len()],
        }
    }

    pub fn add_scaled(&mut self, other: &TriPlaneGradient, s: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
