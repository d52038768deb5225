//! JPEG-style quantization tables scaled by a quality factor.

use std::fmt;

use crate::error::{Error, Result};

/// Annex K luminance table, row-major.
pub const BASE_LUMINANCE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99, //
];

/// Annex K chrominance table, row-major.
pub const BASE_CHROMINANCE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
];

/// JPEG quality factor in `[1, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualityFactor(u8);

impl QualityFactor {
    pub const MIN: QualityFactor = QualityFactor(1);
    pub const MAX: QualityFactor = QualityFactor(100);
    /// Default for the progressive pipeline.
    pub const DEFAULT: QualityFactor = QualityFactor(90);

    pub fn new(q: u32) -> Result<Self> {
        if (1..=100).contains(&q) {
            Ok(QualityFactor(q as u8))
        } else {
            Err(Error::InvalidQuality(q))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Percentage scale applied to the base tables.
    pub fn scale(self) -> u32 {
        let q = self.0 as u32;
        if q < 50 {
            5000 / q
        } else {
            200 - 2 * q
        }
    }
}

impl Default for QualityFactor {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for QualityFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Luminance,
    Chrominance,
}

impl TableKind {
    pub fn base(self) -> &'static [u16; 64] {
        match self {
            TableKind::Luminance => &BASE_LUMINANCE,
            TableKind::Chrominance => &BASE_CHROMINANCE,
        }
    }
}

/// Row-major 8x8 quantization matrix for `quality`.
pub fn quantization_matrix(quality: QualityFactor, kind: TableKind) -> [u16; 64] {
    let s = quality.scale();
    let mut out = [0u16; 64];
    for (dst, &base) in out.iter_mut().zip(kind.base().iter()) {
        *dst = ((base as u32 * s + 50) / 100).clamp(1, 255) as u16;
    }
    out
}

/// Divides and rounds half away from zero.
#[inline]
pub fn quantize(coeff: f64, step: u16) -> i32 {
    (coeff / step as f64).round() as i32
}

#[inline]
pub fn dequantize(value: i32, step: u16) -> f64 {
    value as f64 * step as f64
}
