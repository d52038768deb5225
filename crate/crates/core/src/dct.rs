//! Orthonormal 8x8 DCT-II and its inverse.
//!
//! Blocks are 64 values in row-major order. The transform is separable and
//! uses a precomputed basis matrix, so `inverse_dct8(forward_dct8(b)) == b`
//! up to floating point rounding and the 2-norm is preserved.

use std::sync::OnceLock;

pub type Block = [f64; 64];

/// `basis()[u * 8 + x] = c(u) * cos((2x + 1) u pi / 16)`
fn basis() -> &'static [f64; 64] {
    static BASIS: OnceLock<[f64; 64]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [0.0; 64];
        for u in 0..8 {
            let scale = if u == 0 {
                (1.0f64 / 8.0).sqrt()
            } else {
                (2.0f64 / 8.0).sqrt()
            };
            for x in 0..8 {
                let angle = ((2 * x + 1) as f64) * (u as f64) * std::f64::consts::PI / 16.0;
                m[u * 8 + x] = scale * angle.cos();
            }
        }
        m
    })
}

/// Forward 2-D DCT of a level-shifted block.
pub fn forward_dct8(block: &Block) -> Block {
    let c = basis();
    // rows: tmp[y][u] = sum_x c[u][x] * block[y][x]
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += c[u * 8 + x] * block[y * 8 + x];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    // columns: out[v][u] = sum_y c[v][y] * tmp[y][u]
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += c[v * 8 + y] * tmp[y * 8 + u];
            }
            out[v * 8 + u] = acc;
        }
    }
    out
}

/// Inverse of [`forward_dct8`]. The output is still level-shifted and unclamped.
pub fn inverse_dct8(coeffs: &Block) -> Block {
    let c = basis();
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += c[v * 8 + y] * coeffs[v * 8 + u];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += c[u * 8 + x] * tmp[y * 8 + u];
            }
            out[y * 8 + x] = acc;
        }
    }
    out
}
