//! Dense float images and binary masks, plus PNG/EXR serialization.
//!
//! Pixel `(x, y)` covers the continuous square `[x, x+1) × [y, y+1)` with its
//! center at `(x + 0.5, y + 0.5)`; row 0 is the top of the image. All sampling
//! functions take continuous coordinates in this frame.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(channels > 0, "image needs at least one channel");
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn<F>(width: usize, height: usize, channels: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize, &mut [f32]),
    {
        let mut img = Self::new(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                f(x, y, img.pixel_mut(x, y));
            }
        }
        img
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Rows as mutable slices, for parallel per-row fills.
    pub fn rows_mut(&mut self) -> std::slice::ChunksMut<'_, f32> {
        self.data.chunks_mut(self.width * self.channels)
    }

    /// Bilinear sample at continuous pixel coordinates with clamp-to-edge.
    pub fn sample_bilinear(&self, x: f64, y: f64, out: &mut [f32]) {
        let (x0, x1, fx) = bilinear_taps(x, self.width);
        let (y0, y1, fy) = bilinear_taps(y, self.height);
        let taps = [
            (x0, y0, (1.0 - fx) * (1.0 - fy)),
            (x1, y0, fx * (1.0 - fy)),
            (x0, y1, (1.0 - fx) * fy),
            (x1, y1, fx * fy),
        ];
        let mut acc = [0.0f64; 8];
        for (tx, ty, w) in taps {
            if w == 0.0 {
                continue;
            }
            for (a, s) in acc.iter_mut().zip(self.pixel(tx, ty)) {
                *a += w * f64::from(*s);
            }
        }
        for (o, a) in out.iter_mut().zip(acc.iter()) {
            *o = *a as f32;
        }
    }

    /// Bilinear sample that only blends taps where `mask` is set, renormalizing
    /// the weights. Returns false (and zeroes `out`) if no tap is in the mask.
    pub fn sample_bilinear_masked(&self, mask: &Mask, x: f64, y: f64, out: &mut [f32]) -> bool {
        let (x0, x1, fx) = bilinear_taps(x, self.width);
        let (y0, y1, fy) = bilinear_taps(y, self.height);
        let taps = [
            (x0, y0, (1.0 - fx) * (1.0 - fy)),
            (x1, y0, fx * (1.0 - fy)),
            (x0, y1, (1.0 - fx) * fy),
            (x1, y1, fx * fy),
        ];
        let mut acc = [0.0f64; 8];
        let mut total = 0.0;
        for (tx, ty, w) in taps {
            if w == 0.0 || !mask.get(tx, ty) {
                continue;
            }
            total += w;
            for (a, s) in acc.iter_mut().zip(self.pixel(tx, ty)) {
                *a += w * f64::from(*s);
            }
        }
        if total == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return false;
        }
        for (o, a) in out.iter_mut().zip(acc.iter()) {
            *o = (a / total) as f32;
        }
        true
    }

    /// Nearest-pixel lookup at continuous coordinates (clamped).
    pub fn sample_nearest(&self, x: f64, y: f64) -> &[f32] {
        let (px, py) = nearest_pixel(x, y, self.width, self.height);
        self.pixel(px, py)
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let to_u8 = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let (w, h) = (self.width as u32, self.height as u32);
        match self.channels {
            1 => {
                let buf: Vec<u8> = self.data.iter().map(|v| to_u8(*v)).collect();
                image::GrayImage::from_raw(w, h, buf)
                    .expect("buffer size")
                    .save(path)?;
            }
            3 => {
                let buf: Vec<u8> = self.data.iter().map(|v| to_u8(*v)).collect();
                image::RgbImage::from_raw(w, h, buf)
                    .expect("buffer size")
                    .save(path)?;
            }
            4 => {
                let buf: Vec<u8> = self.data.iter().map(|v| to_u8(*v)).collect();
                image::RgbaImage::from_raw(w, h, buf)
                    .expect("buffer size")
                    .save(path)?;
            }
            c => {
                return Err(Error::InvalidArgument(format!(
                    "cannot write {c}-channel image as PNG"
                )))
            }
        }
        Ok(())
    }

    /// Reads an 8-bit PNG as RGB in [0, 1].
    pub fn read_png_rgb(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        let data = img.into_raw().into_iter().map(|v| f32::from(v) / 255.0).collect();
        Self::from_raw(w as usize, h as usize, 3, data)
    }

    /// Writes all channels as 32-bit float EXR. One channel is named `Y`,
    /// three are `R`,`G`,`B`, four add `A`.
    pub fn write_exr(&self, path: impl AsRef<Path>) -> Result<()> {
        use exr::prelude::*;
        let names: &[&str] = match self.channels {
            1 => &["Y"],
            2 => &["R", "G"],
            3 => &["R", "G", "B"],
            4 => &["R", "G", "B", "A"],
            c => {
                return Err(crate::error::Error::InvalidArgument(format!(
                    "cannot write {c}-channel image as EXR"
                )))
            }
        };
        let list: Vec<AnyChannel<FlatSamples>> = names
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let samples = self.data.iter().skip(c).step_by(self.channels).copied().collect();
                AnyChannel::new(*name, FlatSamples::F32(samples))
            })
            .collect();
        let layer = Layer::new(
            (self.width, self.height),
            LayerAttributes::default(),
            Encoding::SMALL_LOSSLESS,
            AnyChannels::sort(SmallVec::from_vec(list)),
        );
        Image::from_layer(layer).write().to_file(path)?;
        Ok(())
    }

    pub fn read_exr(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let image = exr::prelude::read_first_flat_layer_from_file(path)?;
        let layer = image.layer_data;
        let (width, height) = (layer.size.width(), layer.size.height());
        let order = ["R", "G", "B", "A", "Y"];
        let mut chans: Vec<_> = layer.channel_data.list.iter().collect();
        chans.sort_by_key(|c| {
            let name = c.name.to_string();
            order.iter().position(|n| *n == name).unwrap_or(order.len())
        });
        let channels = chans.len();
        let mut data = vec![0.0f32; width * height * channels];
        for (c, chan) in chans.iter().enumerate() {
            for (i, v) in chan.sample_data.values_as_f32().enumerate() {
                data[i * channels + c] = v;
            }
        }
        Self::from_raw(width, height, channels, data)
    }
}

#[inline]
fn bilinear_taps(coord: f64, size: usize) -> (usize, usize, f64) {
    let max = size as f64 - 1.0;
    let c = (coord - 0.5).clamp(0.0, max.max(0.0));
    let i0 = c.floor();
    let f = c - i0;
    let i0 = i0 as usize;
    let i1 = (i0 + 1).min(size - 1);
    (i0, i1, f)
}

#[inline]
pub(crate) fn nearest_pixel(x: f64, y: f64, width: usize, height: usize) -> (usize, usize) {
    let px = (x.floor().max(0.0) as usize).min(width - 1);
    let py = (y.floor().max(0.0) as usize).min(height - 1);
    (px, py)
}

/// Binary per-pixel mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> bool>(width: usize, height: usize, mut f: F) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    pub fn sample_nearest(&self, x: f64, y: f64) -> bool {
        let (px, py) = nearest_pixel(x, y, self.width, self.height);
        self.get(px, py)
    }

    /// True if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).all(|(a, b)| !*a || *b)
    }

    /// Chessboard dilation by `radius` pixels.
    pub fn dilate(&self, radius: usize) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let r = radius as isize;
        // separable max filter: rows then columns
        let mut tmp = Mask::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let lo = (x as isize - r).max(0) as usize;
                let hi = ((x as isize + r) as usize).min(self.width - 1);
                tmp.data[y * self.width + x] = (lo..=hi).any(|xx| self.get(xx, y));
            }
        }
        let mut out = Mask::new(self.width, self.height);
        for y in 0..self.height {
            let lo = (y as isize - r).max(0) as usize;
            let hi = ((y as isize + r) as usize).min(self.height - 1);
            for x in 0..self.width {
                out.data[y * self.width + x] = (lo..=hi).any(|yy| tmp.get(x, yy));
            }
        }
        out
    }

    pub fn to_image(&self) -> Image {
        let data = self.data.iter().map(|v| if *v { 1.0 } else { 0.0 }).collect();
        Image::from_raw(self.width, self.height, 1, data).expect("mask shape")
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let buf = self.data.iter().map(|v| if *v { 255 } else { 0 }).collect();
        image::GrayImage::from_raw(self.width as u32, self.height as u32, buf)
            .expect("buffer size")
            .save(path)?;
        Ok(())
    }

    pub fn read_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let img = image::open(path)?.to_luma8();
        let (w, h) = img.dimensions();
        Ok(Self {
            width: w as usize,
            height: h as usize,
            data: img.into_raw().into_iter().map(|v| v >= 128).collect(),
        })
    }
}
