//! Block DCT encoding into zigzag coefficient planes, and reconstruction from
//! any subset of them.
//!
//! An image is split into channels (luma, or Y/Cb/Cr at full resolution),
//! padded by edge replication to a multiple of 8, and transformed block by
//! block. Coefficient `k` of every block of one channel forms plane `k`.
//! Planes are stored in transmission order: zigzag index outer, channel
//! inner, so every DC plane precedes every `k = 1` plane.

use std::fmt;
use std::str::FromStr;

use crate::dct::{forward_dct8, inverse_dct8, Block};
use crate::error::{Error, Result};
use crate::mask::ReconstructionMask;
use crate::pixels::{rgb_to_ycbcr, to_u8, ycbcr_to_rgb, PixelImage};
use crate::quant::{dequantize, quantization_matrix, quantize, QualityFactor, TableKind};
use crate::zigzag::ZIGZAG;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorMode {
    /// Single luma channel; RGB input is converted to gray.
    Luma,
    /// BT.601 Y, Cb, Cr without chroma subsampling.
    YCbCr444,
}

impl ColorMode {
    pub fn channels(self) -> usize {
        match self {
            ColorMode::Luma => 1,
            ColorMode::YCbCr444 => 3,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ColorMode::Luma => 0,
            ColorMode::YCbCr444 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ColorMode::Luma),
            1 => Some(ColorMode::YCbCr444),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorMode::Luma => "luma",
            ColorMode::YCbCr444 => "ycbcr444",
        }
    }

    /// Natural mode for an input image: luma for gray, YCbCr for color.
    pub fn for_image(img: &PixelImage) -> Self {
        if img.channels() == 1 {
            ColorMode::Luma
        } else {
            ColorMode::YCbCr444
        }
    }

    pub(crate) fn table_kind(self, channel: usize) -> TableKind {
        if channel == 0 {
            TableKind::Luminance
        } else {
            TableKind::Chrominance
        }
    }
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ColorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "luma" | "gray" | "luma-only" => Ok(ColorMode::Luma),
            "ycbcr" | "ycbcr444" | "ycbcr-444" => Ok(ColorMode::YCbCr444),
            other => Err(Error::Config(format!("unknown color mode '{other}'"))),
        }
    }
}

/// All `k`-th zigzag coefficients of one channel, in block-raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientPlane {
    pub zigzag_index: u8,
    pub channel: u8,
    pub values: Vec<i16>,
}

impl CoefficientPlane {
    /// Minimal two's-complement width holding every value; 0 for an all-zero plane.
    pub fn bit_width(&self) -> u8 {
        self.values
            .iter()
            .map(|&v| signed_width(v as i32))
            .max()
            .unwrap_or(0)
    }
}

pub(crate) fn signed_width(v: i32) -> u8 {
    if v == 0 {
        return 0;
    }
    let magnitude = if v < 0 { !v } else { v };
    (32 - magnitude.leading_zeros() + 1) as u8
}

/// Quantized, zigzag-ordered coefficient planes of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedImage {
    width: usize,
    height: usize,
    color_mode: ColorMode,
    quality: QualityFactor,
    planes: Vec<CoefficientPlane>,
}

impl EncodedImage {
    /// Assembles an encoded image from planes already in transmission order.
    pub fn from_planes(
        width: usize,
        height: usize,
        color_mode: ColorMode,
        quality: QualityFactor,
        planes: Vec<CoefficientPlane>,
    ) -> Result<Self> {
        let shape = PlaneShape::new(width, height, color_mode);
        if planes.len() != 64 * shape.channels {
            return Err(Error::Malformed(format!(
                "expected {} planes, got {}",
                64 * shape.channels,
                planes.len()
            )));
        }
        for (i, p) in planes.iter().enumerate() {
            let (k, ch) = (i / shape.channels, i % shape.channels);
            if p.zigzag_index as usize != k || p.channel as usize != ch {
                return Err(Error::Malformed(format!("plane {i} is out of order")));
            }
            if p.values.len() != shape.blocks() {
                return Err(Error::Malformed(format!(
                    "plane {i} has {} values, expected {}",
                    p.values.len(),
                    shape.blocks()
                )));
            }
        }
        Ok(EncodedImage {
            width,
            height,
            color_mode,
            quality,
            planes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn color_mode(&self) -> ColorMode {
        self.color_mode
    }

    pub fn quality(&self) -> QualityFactor {
        self.quality
    }

    pub fn channels(&self) -> usize {
        self.color_mode.channels()
    }

    pub fn blocks_x(&self) -> usize {
        self.width.div_ceil(8)
    }

    pub fn blocks_y(&self) -> usize {
        self.height.div_ceil(8)
    }

    pub fn block_count(&self) -> usize {
        self.blocks_x() * self.blocks_y()
    }

    /// Planes in transmission order.
    pub fn planes(&self) -> &[CoefficientPlane] {
        &self.planes
    }

    pub fn planes_mut(&mut self) -> &mut [CoefficientPlane] {
        &mut self.planes
    }

    /// Position of plane `(k, channel)` in transmission order.
    pub fn plane_index(&self, k: usize, channel: usize) -> usize {
        k * self.channels() + channel
    }

    pub fn plane(&self, k: usize, channel: usize) -> &CoefficientPlane {
        &self.planes[self.plane_index(k, channel)]
    }

    pub fn bit_widths(&self) -> Vec<u8> {
        self.planes
            .iter()
            .map(CoefficientPlane::bit_width)
            .collect()
    }

    fn quant_tables(&self) -> Vec<[u16; 64]> {
        (0..self.channels())
            .map(|ch| quantization_matrix(self.quality, self.color_mode.table_kind(ch)))
            .collect()
    }

    /// Sum of squared dequantized coefficients that `mask` removes. By
    /// orthonormality this equals the squared pixel-domain error of the
    /// masked reconstruction against the full one, before rounding and clamping.
    pub fn masked_energy(&self, mask: &ReconstructionMask) -> Result<f64> {
        mask.check_shape(self)?;
        let tables = self.quant_tables();
        let channels = self.channels();
        let mut acc = 0.0;
        for (pi, plane) in self.planes.iter().enumerate() {
            let step = tables[pi % channels][ZIGZAG[pi / channels]];
            for (b, &v) in plane.values.iter().enumerate() {
                if !mask.is_present_index(pi, b) {
                    let c = dequantize(v as i32, step);
                    acc += c * c;
                }
            }
        }
        Ok(acc)
    }

    /// [`masked_energy`](Self::masked_energy) per padded sample.
    pub fn coefficient_mse(&self, mask: &ReconstructionMask) -> Result<f64> {
        let samples = self.block_count() * 64 * self.channels();
        Ok(self.masked_energy(mask)? / samples as f64)
    }
}

struct PlaneShape {
    channels: usize,
    blocks_x: usize,
    blocks_y: usize,
}

impl PlaneShape {
    fn new(width: usize, height: usize, mode: ColorMode) -> Self {
        PlaneShape {
            channels: mode.channels(),
            blocks_x: width.div_ceil(8),
            blocks_y: height.div_ceil(8),
        }
    }

    fn blocks(&self) -> usize {
        self.blocks_x * self.blocks_y
    }
}

/// Unquantized block spectra of an image, zigzag ordered.
///
/// Splitting the transform from quantization lets callers quantize one image
/// at many quality factors without repeating the DCT.
#[derive(Debug, Clone)]
pub struct Spectrum {
    width: usize,
    height: usize,
    color_mode: ColorMode,
    /// `blocks[channel][block][k]`
    blocks: Vec<Vec<[f64; 64]>>,
}

impl Spectrum {
    pub fn color_mode(&self) -> ColorMode {
        self.color_mode
    }

    pub fn quantize(&self, quality: QualityFactor) -> EncodedImage {
        let channels = self.color_mode.channels();
        let nblocks = self.blocks[0].len();
        let mut planes = Vec::with_capacity(64 * channels);
        for k in 0..64 {
            for ch in 0..channels {
                let table = quantization_matrix(quality, self.color_mode.table_kind(ch));
                let step = table[ZIGZAG[k]];
                let values = (0..nblocks)
                    .map(|b| {
                        quantize(self.blocks[ch][b][k], step)
                            .clamp(i16::MIN as i32, i16::MAX as i32) as i16
                    })
                    .collect();
                planes.push(CoefficientPlane {
                    zigzag_index: k as u8,
                    channel: ch as u8,
                    values,
                });
            }
        }
        EncodedImage {
            width: self.width,
            height: self.height,
            color_mode: self.color_mode,
            quality,
            planes,
        }
    }
}

/// Splits `img` into float channel rasters for `mode`.
fn channel_rasters(img: &PixelImage, mode: ColorMode) -> Result<Vec<Vec<f64>>> {
    let n = img.width() * img.height();
    let s = img.samples();
    match (mode, img.channels()) {
        (ColorMode::Luma, 1) => Ok(vec![s.iter().map(|&v| v as f64).collect()]),
        (ColorMode::Luma, 3) => Ok(vec![(0..n)
            .map(|i| rgb_to_ycbcr(s[3 * i] as f64, s[3 * i + 1] as f64, s[3 * i + 2] as f64)[0])
            .collect()]),
        (ColorMode::YCbCr444, 3) => {
            let mut out: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(n)).collect();
            for i in 0..n {
                let ycc = rgb_to_ycbcr(s[3 * i] as f64, s[3 * i + 1] as f64, s[3 * i + 2] as f64);
                for (dst, v) in out.iter_mut().zip(ycc) {
                    dst.push(v);
                }
            }
            Ok(out)
        }
        (mode, channels) => Err(Error::ColorModeMismatch {
            mode: mode.name(),
            channels,
        }),
    }
}

/// Level-shifts, transforms and zigzag-orders every block of `img`.
pub fn transform(img: &PixelImage, mode: ColorMode) -> Result<Spectrum> {
    let (w, h) = (img.width(), img.height());
    let (bx, by) = (w.div_ceil(8), h.div_ceil(8));
    let rasters = channel_rasters(img, mode)?;
    let blocks = rasters
        .iter()
        .map(|raster| {
            let mut out = Vec::with_capacity(bx * by);
            for row in 0..by {
                for col in 0..bx {
                    let mut block: Block = [0.0; 64];
                    for y in 0..8 {
                        // edge replication
                        let sy = (row * 8 + y).min(h - 1);
                        for x in 0..8 {
                            let sx = (col * 8 + x).min(w - 1);
                            block[y * 8 + x] = raster[sy * w + sx] - 128.0;
                        }
                    }
                    let coeffs = forward_dct8(&block);
                    let mut zz = [0.0; 64];
                    for (k, dst) in zz.iter_mut().enumerate() {
                        *dst = coeffs[ZIGZAG[k]];
                    }
                    out.push(zz);
                }
            }
            out
        })
        .collect();
    Ok(Spectrum {
        width: w,
        height: h,
        color_mode: mode,
        blocks,
    })
}

pub fn encode_image(
    img: &PixelImage,
    quality: QualityFactor,
    mode: ColorMode,
) -> Result<EncodedImage> {
    Ok(transform(img, mode)?.quantize(quality))
}

/// Rebuilds pixels from the coefficients `mask` marks present; absent ones are zero.
pub fn reconstruct(enc: &EncodedImage, mask: &ReconstructionMask) -> Result<PixelImage> {
    mask.check_shape(enc)?;
    let (w, h) = (enc.width, enc.height);
    let (bx, by) = (enc.blocks_x(), enc.blocks_y());
    let pw = bx * 8;
    let channels = enc.channels();
    let tables = enc.quant_tables();

    let mut rasters = vec![vec![0.0f64; pw * by * 8]; channels];
    for (ch, raster) in rasters.iter_mut().enumerate() {
        for b in 0..bx * by {
            let mut coeffs: Block = [0.0; 64];
            for k in 0..64 {
                let pi = enc.plane_index(k, ch);
                if mask.is_present_index(pi, b) {
                    let pos = ZIGZAG[k];
                    coeffs[pos] = dequantize(enc.planes[pi].values[b] as i32, tables[ch][pos]);
                }
            }
            let pixels = inverse_dct8(&coeffs);
            let (row, col) = (b / bx, b % bx);
            for y in 0..8 {
                let dst = (row * 8 + y) * pw + col * 8;
                for x in 0..8 {
                    raster[dst + x] = pixels[y * 8 + x] + 128.0;
                }
            }
        }
    }

    let mut samples = Vec::with_capacity(w * h * channels);
    for y in 0..h {
        for x in 0..w {
            let i = y * pw + x;
            match enc.color_mode {
                ColorMode::Luma => samples.push(to_u8(rasters[0][i])),
                ColorMode::YCbCr444 => {
                    let rgb = ycbcr_to_rgb(rasters[0][i], rasters[1][i], rasters[2][i]);
                    samples.extend(rgb.map(to_u8));
                }
            }
        }
    }
    PixelImage::new(w, h, channels as u8, samples)
}

/// Reconstruction from every coefficient.
pub fn reconstruct_full(enc: &EncodedImage) -> PixelImage {
    reconstruct(enc, &ReconstructionMask::full(enc)).expect("full mask always matches")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{make_mask, MaskSpec};
    use crate::pixels::max_abs_diff;
    use crate::synth;

    #[test]
    fn signed_widths() {
        assert_eq!(signed_width(0), 0);
        assert_eq!(signed_width(-1), 1);
        assert_eq!(signed_width(1), 2);
        assert_eq!(signed_width(-2), 2);
        assert_eq!(signed_width(2), 3);
        assert_eq!(signed_width(-1024), 11);
        assert_eq!(signed_width(1023), 11);
        assert_eq!(signed_width(1024), 12);
        assert_eq!(signed_width(i16::MIN as i32), 16);
    }

    #[test]
    fn gray_image_is_all_zero() {
        let img = PixelImage::filled(33, 17, 3, 128).unwrap();
        let enc = encode_image(&img, QualityFactor::DEFAULT, ColorMode::YCbCr444).unwrap();
        assert_eq!(enc.planes().len(), 192);
        assert_eq!(enc.block_count(), 5 * 3);
        assert!(enc
            .planes()
            .iter()
            .all(|p| p.values.iter().all(|&v| v == 0)));
        assert!(enc.bit_widths().iter().all(|&b| b == 0));
        assert_eq!(reconstruct_full(&enc), img);
    }

    #[test]
    fn transmission_order_is_k_major() {
        let img = synth::scene(3, 40, 24);
        let enc = encode_image(&img, QualityFactor::DEFAULT, ColorMode::YCbCr444).unwrap();
        for (i, p) in enc.planes().iter().enumerate() {
            assert_eq!(p.zigzag_index as usize, i / 3);
            assert_eq!(p.channel as usize, i % 3);
        }
    }

    #[test]
    fn q100_round_trip_within_four() {
        for seed in 0..4 {
            let img = synth::scene(seed, 61, 45);
            for mode in [ColorMode::Luma, ColorMode::YCbCr444] {
                let src = if mode == ColorMode::Luma {
                    synth::to_gray(&img)
                } else {
                    img.clone()
                };
                let enc = encode_image(&src, QualityFactor::MAX, mode).unwrap();
                let out = reconstruct_full(&enc);
                assert!(max_abs_diff(&src, &out) <= 4, "seed {seed} {mode}");
            }
        }
    }

    #[test]
    fn dc_only_blocks_are_constant() {
        let img = synth::to_gray(&synth::scene(9, 32, 32));
        let q = QualityFactor::new(75).unwrap();
        let enc = encode_image(&img, q, ColorMode::Luma).unwrap();
        let mask = make_mask(&enc, &MaskSpec::KeepTopN(1)).unwrap();
        let out = reconstruct(&enc, &mask).unwrap();
        let step = quantization_matrix(q, TableKind::Luminance)[0] as f64;
        for b in 0..enc.block_count() {
            let (row, col) = (b / 4, b % 4);
            let dc = enc.plane(0, 0).values[b] as f64 * step;
            let expected = to_u8(dc / 8.0 + 128.0);
            for y in 0..8 {
                for x in 0..8 {
                    assert_eq!(out.get(col * 8 + x, row * 8 + y, 0), expected);
                }
            }
        }
    }

    #[test]
    fn luma_mode_rejects_nothing_but_ycbcr_needs_color() {
        let gray = PixelImage::filled(8, 8, 1, 0).unwrap();
        assert!(matches!(
            encode_image(&gray, QualityFactor::DEFAULT, ColorMode::YCbCr444),
            Err(Error::ColorModeMismatch { .. })
        ));
        let rgb = PixelImage::filled(8, 8, 3, 0).unwrap();
        let enc = encode_image(&rgb, QualityFactor::DEFAULT, ColorMode::Luma).unwrap();
        assert_eq!(reconstruct_full(&enc).channels(), 1);
    }

    #[test]
    fn small_images_are_padded() {
        let img = PixelImage::new(3, 2, 1, vec![0, 50, 100, 150, 200, 250]).unwrap();
        let enc = encode_image(&img, QualityFactor::MAX, ColorMode::Luma).unwrap();
        assert_eq!(enc.block_count(), 1);
        let out = reconstruct_full(&enc);
        assert_eq!((out.width(), out.height()), (3, 2));
        assert!(max_abs_diff(&img, &out) <= 4);
    }

    #[test]
    fn spectrum_quantize_matches_encode() {
        let img = synth::scene(5, 48, 40);
        let spec = transform(&img, ColorMode::YCbCr444).unwrap();
        for q in [1, 30, 90] {
            let q = QualityFactor::new(q).unwrap();
            assert_eq!(
                spec.quantize(q),
                encode_image(&img, q, ColorMode::YCbCr444).unwrap()
            );
        }
    }
}
