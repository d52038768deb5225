//! 8-bit raster images, file IO and fidelity metrics.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};

/// Row-major interleaved 8-bit image with one (gray) or three (RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PixelImage {
    width: usize,
    height: usize,
    channels: u8,
    samples: Vec<u8>,
}

impl PixelImage {
    pub fn new(width: usize, height: usize, channels: u8, samples: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if width > u16::MAX as usize || height > u16::MAX as usize {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} exceeds the 65535-pixel dimension limit"
            )));
        }
        let expected = width * height * channels as usize;
        if samples.len() != expected {
            return Err(Error::InvalidImage(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        Ok(PixelImage {
            width,
            height,
            channels,
            samples,
        })
    }

    /// Image filled with a single value in every channel.
    pub fn filled(width: usize, height: usize, channels: u8, value: u8) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels as usize],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.samples[(y * self.width + x) * self.channels as usize + c]
    }

    pub fn from_dynamic(img: DynamicImage) -> Result<Self> {
        let color = img.color();
        if color.has_color() {
            let rgb = img.into_rgb8();
            let (w, h) = rgb.dimensions();
            Self::new(w as usize, h as usize, 3, rgb.into_raw())
        } else {
            let gray = img.into_luma8();
            let (w, h) = gray.dimensions();
            Self::new(w as usize, h as usize, 1, gray.into_raw())
        }
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        let (w, h) = (self.width as u32, self.height as u32);
        match self.channels {
            1 => DynamicImage::ImageLuma8(
                GrayImage::from_raw(w, h, self.samples.clone()).expect("validated dimensions"),
            ),
            _ => DynamicImage::ImageRgb8(
                RgbImage::from_raw(w, h, self.samples.clone()).expect("validated dimensions"),
            ),
        }
    }

    /// BT.601 luma rounded to 8 bits; gray images are returned unchanged.
    pub fn to_luma(&self) -> PixelImage {
        if self.channels == 1 {
            return self.clone();
        }
        let samples = self
            .samples
            .chunks_exact(3)
            .map(|p| to_u8(rgb_to_ycbcr(p[0] as f64, p[1] as f64, p[2] as f64)[0]))
            .collect();
        PixelImage::new(self.width, self.height, 1, samples).expect("same dimensions")
    }

    /// Reads a PNG or BMP file. Alpha is discarded.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = image::ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?;
        Self::from_dynamic(reader.decode()?)
    }

    /// Writes the image; the format follows the file extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        self.to_dynamic().save(path)?;
        Ok(())
    }
}

/// Mean squared error over all samples. Images must share shape.
pub fn mse(a: &PixelImage, b: &PixelImage) -> f64 {
    assert_eq!(
        (a.width, a.height, a.channels),
        (b.width, b.height, b.channels),
        "mse of differently shaped images"
    );
    let sum: u64 = a
        .samples
        .iter()
        .zip(b.samples.iter())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    sum as f64 / a.samples.len() as f64
}

/// PSNR in dB for 8-bit samples, capped at 100 dB for identical images.
pub fn psnr(a: &PixelImage, b: &PixelImage) -> f64 {
    let m = mse(a, b);
    if m <= 1e-10 {
        return 100.0;
    }
    10.0 * (255.0f64 * 255.0 / m).log10()
}

/// Largest absolute per-sample difference.
pub fn max_abs_diff(a: &PixelImage, b: &PixelImage) -> u8 {
    a.samples
        .iter()
        .zip(b.samples.iter())
        .map(|(&x, &y)| x.abs_diff(y))
        .max()
        .unwrap_or(0)
}

// BT.601 full-range (JFIF) conversion.
const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;
const CB_SCALE: f64 = 2.0 * (1.0 - KB);
const CR_SCALE: f64 = 2.0 * (1.0 - KR);

#[inline]
pub(crate) fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> [f64; 3] {
    let y = KR * r + KG * g + KB * b;
    [y, 128.0 + (b - y) / CB_SCALE, 128.0 + (r - y) / CR_SCALE]
}

#[inline]
pub(crate) fn ycbcr_to_rgb(y: f64, cb: f64, cr: f64) -> [f64; 3] {
    let r = y + CR_SCALE * (cr - 128.0);
    let b = y + CB_SCALE * (cb - 128.0);
    let g = (y - KR * r - KB * b) / KG;
    [r, g, b]
}

#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape() {
        assert!(matches!(
            PixelImage::new(2, 2, 2, vec![0; 8]),
            Err(Error::UnsupportedChannels(2))
        ));
        assert!(PixelImage::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(PixelImage::new(0, 2, 1, vec![]).is_err());
        assert!(PixelImage::new(3, 1, 1, vec![1, 2, 3]).is_ok());
    }

    #[test]
    fn psnr_identical_is_capped() {
        let a = PixelImage::filled(8, 8, 1, 10).unwrap();
        assert_eq!(psnr(&a, &a), 100.0);
        let b = PixelImage::filled(8, 8, 1, 11).unwrap();
        assert_eq!(mse(&a, &b), 1.0);
        assert!((psnr(&a, &b) - 48.130_803_608).abs() < 1e-6);
    }

    #[test]
    fn color_round_trip() {
        for &(r, g, b) in &[(0.0, 0.0, 0.0), (255.0, 0.0, 0.0), (12.0, 200.0, 77.0)] {
            let [y, cb, cr] = rgb_to_ycbcr(r, g, b);
            let [r2, g2, b2] = ycbcr_to_rgb(y, cb, cr);
            assert!((r - r2).abs() < 1e-6 && (g - g2).abs() < 1e-6 && (b - b2).abs() < 1e-6);
        }
    }
}
