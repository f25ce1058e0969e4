use std::path::Path;

use super::RenderError;

/// Row-major, channel-interleaved `f32` image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn filled(width: usize, height: usize, value: &[f32]) -> Self {
        let mut img = Self::new(width, height, value.len());
        for px in img.data.chunks_exact_mut(value.len()) {
            px.copy_from_slice(value);
        }
        img
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut img = Self::new(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    img.data[(y * width + x) * channels + c] = f(x, y, c);
                }
            }
        }
        img
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = self.index(x, y, 0);
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = self.index(x, y, 0);
        let c = self.channels;
        &mut self.data[i..i + c]
    }

    pub fn flip_horizontal(&self) -> Image {
        Image::from_fn(self.width, self.height, self.channels, |x, y, c| {
            self.get(self.width - 1 - x, y, c)
        })
    }

    /// Single channel `c` as its own image.
    pub fn channel(&self, c: usize) -> Image {
        Image::from_fn(self.width, self.height, 1, |x, y, _| self.get(x, y, c))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Loads any supported image as RGB in `[0, 1]`.
    pub fn load(path: &Path) -> Result<Image, RenderError> {
        let img = image::open(path)
            .map_err(|e| RenderError::Image(format!("{}: {e}", path.display())))?
            .to_rgb32f();
        let (w, h) = img.dimensions();
        Ok(Image {
            width: w as usize,
            height: h as usize,
            channels: 3,
            data: img.into_raw(),
        })
    }

    /// 8-bit PNG; 1-channel images are written as grayscale, 3-channel as RGB.
    pub fn save_png(&self, path: &Path) -> Result<(), RenderError> {
        let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let bytes: Vec<u8> = self.data.iter().map(|&v| q(v)).collect();
        let (w, h) = (self.width as u32, self.height as u32);
        let res = match self.channels {
            1 => image::GrayImage::from_raw(w, h, bytes).map(|b| b.save(path)),
            3 => image::RgbImage::from_raw(w, h, bytes).map(|b| b.save(path)),
            c => return Err(RenderError::Image(format!("cannot write {c}-channel PNG"))),
        };
        match res {
            Some(r) => r.map_err(|e| RenderError::Image(format!("{}: {e}", path.display()))),
            None => Err(RenderError::Image("buffer size mismatch".into())),
        }
    }

    /// 16-bit grayscale PNG of a 1-channel depth map in meters, stored as
    /// millimeters.
    pub fn save_depth_png_mm(&self, path: &Path) -> Result<(), RenderError> {
        if self.channels != 1 {
            return Err(RenderError::Image("depth must be single channel".into()));
        }
        let words: Vec<u16> = self
            .data
            .iter()
            .map(|&m| (m as f64 * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16)
            .collect();
        let buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
            image::ImageBuffer::from_raw(self.width as u32, self.height as u32, words)
                .ok_or_else(|| RenderError::Image("buffer size mismatch".into()))?;
        buf.save(path)
            .map_err(|e| RenderError::Image(format!("{}: {e}", path.display())))
    }

    pub fn load_depth_png_mm(path: &Path) -> Result<Image, RenderError> {
        let img = image::open(path)
            .map_err(|e| RenderError::Image(format!("{}: {e}", path.display())))?
            .to_luma16();
        let (w, h) = img.dimensions();
        Ok(Image {
            width: w as usize,
            height: h as usize,
            channels: 1,
            data: img.into_raw().into_iter().map(|v| v as f32 / 1000.0).collect(),
        })
    }
}
