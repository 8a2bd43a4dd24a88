//! Image containers and their on-disk formats.
//!
//! RGB images travel as 8-bit PNG (`round(255 v)`); depth and alpha maps use
//! the lossless `FMP1` float-map format; feature images use `FIM1`.

use std::path::Path;

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};

/// Interleaved `height x width x channels` image of `f64` samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, fill: f64) -> Self {
        Image {
            width,
            height,
            channels,
            data: vec![fill; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Image {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &Image) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(())
    }

    /// One channel as a single-channel image.
    pub fn channel(&self, c: usize) -> Image {
        Image::from_fn(self.width, self.height, 1, |x, y, _| self.get(x, y, c))
    }

    /// Channel-wise concatenation `self ⊕ other`.
    pub fn concat_channels(&self, other: &Image) -> Result<Image> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape(format!(
                "cannot concatenate {}x{} with {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let c = self.channels + other.channels;
        Ok(Image::from_fn(self.width, self.height, c, |x, y, k| {
            if k < self.channels {
                self.get(x, y, k)
            } else {
                other.get(x, y, k - self.channels)
            }
        }))
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centers at
    /// half-integers). Outside the image returns `fill`.
    pub fn sample_bilinear(&self, x: f64, y: f64, c: usize, fill: f64) -> f64 {
        let gx = x - 0.5;
        let gy = y - 0.5;
        if !(gx > -1.0 && gy > -1.0 && gx < self.width as f64 && gy < self.height as f64) {
            return fill;
        }
        let x0 = gx.floor();
        let y0 = gy.floor();
        let fx = gx - x0;
        let fy = gy - y0;
        let fetch = |xi: f64, yi: f64| {
            if xi < 0.0 || yi < 0.0 || xi >= self.width as f64 || yi >= self.height as f64 {
                fill
            } else {
                self.get(xi as usize, yi as usize, c)
            }
        };
        let top = fetch(x0, y0) * (1.0 - fx) + fetch(x0 + 1.0, y0) * fx;
        let bottom = fetch(x0, y0 + 1.0) * (1.0 - fx) + fetch(x0 + 1.0, y0 + 1.0) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Bilinear resize with pixel-center alignment and edge clamping. The
    /// identity when the size is unchanged.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Image {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        Image::from_fn(width, height, self.channels, |x, y, c| {
            let gx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let gy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            let x0 = gx.floor() as usize;
            let y0 = gy.floor() as usize;
            let x1 = (x0 + 1).min(self.width - 1);
            let y1 = (y0 + 1).min(self.height - 1);
            let fx = gx - x0 as f64;
            let fy = gy - y0 as f64;
            let top = self.get(x0, y0, c) * (1.0 - fx) + self.get(x1, y0, c) * fx;
            let bottom = self.get(x0, y1, c) * (1.0 - fx) + self.get(x1, y1, c) * fx;
            top * (1.0 - fy) + bottom * fy
        })
    }

    /// Writes an 8-bit PNG. One channel is written as grayscale, three as RGB.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self.data.iter().map(|&v| quantize(v)).collect();
        let (w, h) = (
            binio::dim_u32(self.width, "width")?,
            binio::dim_u32(self.height, "height")?,
        );
        let color = match self.channels {
            1 => image::ExtendedColorType::L8,
            3 => image::ExtendedColorType::Rgb8,
            4 => image::ExtendedColorType::Rgba8,
            c => return Err(Error::Shape(format!("cannot write {c}-channel image as PNG"))),
        };
        image::save_buffer_with_format(path, &bytes, w, h, color, image::ImageFormat::Png)
            .map_err(|e| Error::from(e).in_file(path))
    }

    /// Reads a PNG as RGB with samples in `[0, 1]`.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::from(e).in_file(path))?.to_rgb8();
        let (w, h) = img.dimensions();
        let data = img.into_raw().into_iter().map(|b| b as f64 / 255.0).collect();
        Image::from_vec(w as usize, h as usize, 3, data)
    }
}

/// `round(255 v)` after clamping to `[0, 1]`.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Single-channel `f32` map with the `FMP1` binary layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

const FLOAT_MAP_MAGIC: &[u8; 4] = b"FMP1";

impl FloatMap {
    pub fn from_image_channel(img: &Image, c: usize) -> FloatMap {
        let data = (0..img.height())
            .flat_map(|y| (0..img.width()).map(move |x| (x, y)))
            .map(|(x, y)| img.get(x, y, c) as f32)
            .collect();
        FloatMap {
            width: img.width(),
            height: img.height(),
            data,
        }
    }

    pub fn to_image(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(FLOAT_MAP_MAGIC);
        w.u32(binio::dim_u32(self.height, "height")?)
            .u32(binio::dim_u32(self.width, "width")?)
            .f32s(&self.data);
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<FloatMap> {
        let mut r = Reader::new(bytes);
        r.magic(FLOAT_MAP_MAGIC)?;
        let height = r.u32()? as usize;
        let width = r.u32()? as usize;
        let count = width
            .checked_mul(height)
            .ok_or_else(|| r.invalid("map dimensions overflow"))?;
        let data = r.f32_vec(count)?;
        r.finish()?;
        Ok(FloatMap { width, height, data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FloatMap> {
        let path = path.as_ref();
        FloatMap::from_bytes(&binio::read_file(path)?).map_err(|e| e.in_file(path))
    }
}

/// Binary `height x width` mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        PixelMask {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        PixelMask { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn and(&self, other: &PixelMask) -> Result<PixelMask> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape("mask sizes differ".into()));
        }
        Ok(PixelMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect(),
        })
    }

    /// Nearest-pixel resampling to a new size.
    pub fn resize_nearest(&self, width: usize, height: usize) -> PixelMask {
        PixelMask::from_fn(width, height, |x, y| {
            let (sx, sy) = nearest_source(x, y, width, height, self.width, self.height);
            self.get(sx, sy)
        })
    }

    pub fn to_image(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Reads a PNG mask; pixels with luma above 127 are set.
    pub fn load_png(path: impl AsRef<Path>) -> Result<PixelMask> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::from(e).in_file(path))?.to_luma8();
        let (w, h) = img.dimensions();
        Ok(PixelMask {
            width: w as usize,
            height: h as usize,
            data: img.into_raw().into_iter().map(|v| v > 127).collect(),
        })
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_image().save_png(path)
    }
}

pub(crate) fn nearest_source(x: usize, y: usize, w: usize, h: usize, src_w: usize, src_h: usize) -> (usize, usize) {
    let sx = (((x as f64 + 0.5) * src_w as f64 / w as f64).floor() as usize).min(src_w - 1);
    let sy = (((y as f64 + 0.5) * src_h as f64 / h as f64).floor() as usize).min(src_h - 1);
    (sx, sy)
}

/// Channel-major `C x H x W` feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

const FEATURE_MAGIC: &[u8; 4] = b"FIM1";

impl FeatureImage {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "{} values for a {channels}x{height}x{width} feature image",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("feature image has non-finite values".into()));
        }
        Ok(FeatureImage {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        FeatureImage {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn pixel(&self, y: usize, x: usize) -> Vec<f32> {
        (0..self.channels).map(|c| self.get(c, y, x)).collect()
    }

    /// Nearest-pixel resampling to a new spatial size.
    pub fn resize_nearest(&self, height: usize, width: usize) -> FeatureImage {
        if height == self.height && width == self.width {
            return self.clone();
        }
        FeatureImage::from_fn(self.channels, height, width, |c, y, x| {
            let (sx, sy) = nearest_source(x, y, width, height, self.width, self.height);
            self.get(c, sy, sx)
        })
    }

    /// Feature image from an RGB image (channel `c` of the image becomes
    /// feature channel `c`).
    pub fn from_image(img: &Image) -> FeatureImage {
        FeatureImage::from_fn(img.channels(), img.height(), img.width(), |c, y, x| {
            img.get(x, y, c) as f32
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(FEATURE_MAGIC);
        w.u32(binio::dim_u32(self.channels, "channels")?)
            .u32(binio::dim_u32(self.height, "height")?)
            .u32(binio::dim_u32(self.width, "width")?)
            .f32s(&self.data);
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<FeatureImage> {
        let mut r = Reader::new(bytes);
        r.magic(FEATURE_MAGIC)?;
        let channels = r.u32()? as usize;
        let height = r.u32()? as usize;
        let width = r.u32()? as usize;
        let count = channels
            .checked_mul(height)
            .and_then(|v| v.checked_mul(width))
            .ok_or_else(|| r.invalid("feature dimensions overflow"))?;
        let data = r.f32_vec(count)?;
        r.finish()?;
        FeatureImage::new(channels, height, width, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FeatureImage> {
        let path = path.as_ref();
        FeatureImage::from_bytes(&binio::read_file(path)?).map_err(|e| e.in_file(path))
    }
}
