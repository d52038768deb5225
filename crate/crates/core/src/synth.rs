//! Deterministic procedural images for fixtures, demos and smoke corpora.
//!
//! Scenes are loosely flower-like: a textured background, a few petal
//! rosettes with hard edges and shading, and grain noise, so that their
//! coefficient statistics resemble small natural photographs rather than
//! synthetic gradients.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pixels::PixelImage;

fn hash2(x: i64, y: i64, seed: u64) -> f64 {
    let mut h = seed
        ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(x: f64, y: f64, seed: u64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = hash2(ix, iy, seed);
    let b = hash2(ix + 1, iy, seed);
    let c = hash2(ix, iy + 1, seed);
    let d = hash2(ix + 1, iy + 1, seed);
    let top = a + (b - a) * sx;
    let bottom = c + (d - c) * sx;
    top + (bottom - top) * sy
}

/// Fractal noise in roughly `[0, 1]`.
fn fbm(x: f64, y: f64, seed: u64, octaves: u32) -> f64 {
    let (mut amp, mut freq, mut sum, mut norm) = (0.5, 1.0, 0.0, 0.0);
    for o in 0..octaves {
        sum += amp * value_noise(x * freq, y * freq, seed.wrapping_add(o as u64 * 7919));
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

struct Rosette {
    cx: f64,
    cy: f64,
    radius: f64,
    petals: f64,
    depth: f64,
    phase: f64,
    petal: [f64; 3],
    center: [f64; 3],
}

/// Parameters shared by every image of one synthetic class.
#[derive(Debug, Clone, Copy)]
pub struct ClassStyle {
    pub petals: u32,
    pub hue: [f64; 3],
}

impl ClassStyle {
    pub fn for_class(index: usize) -> Self {
        const HUES: [[f64; 3]; 8] = [
            [230.0, 60.0, 80.0],
            [250.0, 210.0, 40.0],
            [170.0, 90.0, 220.0],
            [245.0, 245.0, 235.0],
            [250.0, 130.0, 40.0],
            [90.0, 140.0, 240.0],
            [240.0, 120.0, 180.0],
            [200.0, 40.0, 40.0],
        ];
        ClassStyle {
            petals: 4 + (index as u32 * 3) % 9,
            hue: HUES[index % HUES.len()],
        }
    }
}

/// A `width x height` RGB scene determined entirely by `seed`.
pub fn scene(seed: u64, width: usize, height: usize) -> PixelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let style = ClassStyle {
        petals: rng.gen_range(4..=12),
        hue: [
            rng.gen_range(120.0..255.0),
            rng.gen_range(30.0..230.0),
            rng.gen_range(30.0..230.0),
        ],
    };
    styled_scene(seed, width, height, style)
}

/// Like [`scene`] but with petal count and color fixed by `style`.
pub fn styled_scene(seed: u64, width: usize, height: usize, style: ClassStyle) -> PixelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_F10E);
    let (w, h) = (width as f64, height as f64);
    let short = w.min(h);

    let ground_top = [
        rng.gen_range(40.0..120.0),
        rng.gen_range(90.0..170.0),
        rng.gen_range(40.0..110.0),
    ];
    let ground_bottom = [
        rng.gen_range(10.0..60.0),
        rng.gen_range(40.0..100.0),
        rng.gen_range(10.0..50.0),
    ];

    let count = rng.gen_range(1..=4);
    let mut rosettes: Vec<Rosette> = (0..count)
        .map(|_| {
            let jitter =
                |rng: &mut ChaCha8Rng, v: f64| (v + rng.gen_range(-35.0..35.0)).clamp(0.0, 255.0);
            let petal = [
                jitter(&mut rng, style.hue[0]),
                jitter(&mut rng, style.hue[1]),
                jitter(&mut rng, style.hue[2]),
            ];
            Rosette {
                cx: rng.gen_range(0.15..0.85) * w,
                cy: rng.gen_range(0.15..0.85) * h,
                radius: rng.gen_range(0.12..0.32) * short,
                petals: style.petals as f64,
                depth: rng.gen_range(0.25..0.55),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                petal,
                center: [
                    rng.gen_range(150.0..255.0),
                    rng.gen_range(100.0..220.0),
                    rng.gen_range(0.0..60.0),
                ],
            }
        })
        .collect();
    // paint larger rosettes first
    rosettes.sort_by(|a, b| b.radius.total_cmp(&a.radius));

    let stem_x = rng.gen_range(0.2..0.8) * w;
    let stem_w = rng.gen_range(1.5..4.0);
    let noise_seed = rng.gen::<u64>();
    let grain = rng.gen_range(4.0..14.0);

    let mut samples = Vec::with_capacity(width * height * 3);
    for py in 0..height {
        for px in 0..width {
            let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
            let t = y / h;
            let tex = fbm(x / 18.0, y / 18.0, noise_seed, 5);
            let fine = fbm(x / 3.0, y / 3.0, noise_seed ^ 1, 2);
            let mut rgb = [0.0; 3];
            for c in 0..3 {
                rgb[c] = ground_top[c] * (1.0 - t)
                    + ground_bottom[c] * t
                    + (tex - 0.5) * 90.0
                    + (fine - 0.5) * 50.0;
            }
            // stem
            let sway = stem_x + 10.0 * (y / h * 3.0).sin();
            if (x - sway).abs() < stem_w && y > h * 0.4 {
                rgb = [40.0, 110.0 + 40.0 * tex, 35.0];
            }
            for r in &rosettes {
                let (dx, dy) = (x - r.cx, y - r.cy);
                let dist = (dx * dx + dy * dy).sqrt();
                let theta = dy.atan2(dx);
                let edge =
                    r.radius * (1.0 - r.depth + r.depth * (r.petals * theta + r.phase).cos().abs());
                if dist < edge {
                    let shade = 0.55 + 0.45 * (1.0 - dist / edge);
                    let vein = 0.9 + 0.1 * ((r.petals * theta * 2.0 + r.phase).sin());
                    for c in 0..3 {
                        rgb[c] = r.petal[c] * shade * vein + (fine - 0.5) * 30.0;
                    }
                    if dist < r.radius * 0.18 {
                        let dots = if fbm(x / 1.5, y / 1.5, noise_seed ^ 2, 1) > 0.5 {
                            1.0
                        } else {
                            0.7
                        };
                        rgb = r.center.map(|v| v * dots);
                    }
                }
            }
            for (c, v) in rgb.iter().enumerate() {
                let n =
                    (hash2(px as i64, py as i64, noise_seed.wrapping_add(c as u64)) - 0.5) * grain;
                samples.push((v + n).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    PixelImage::new(width, height, 3, samples).expect("dimensions are consistent")
}

/// BT.601 luma of an RGB image; gray input is returned unchanged.
pub fn to_gray(img: &PixelImage) -> PixelImage {
    img.to_luma()
}

/// The fixed 20-image corpus used by the test suites. Sizes vary and some
/// are not multiples of 8.
pub fn fixture_corpus() -> Vec<PixelImage> {
    const SIZES: [(usize, usize); 5] = [(224, 224), (240, 180), (200, 150), (227, 171), (160, 213)];
    (0..20)
        .map(|i| {
            let (w, h) = SIZES[i % SIZES.len()];
            scene(1000 + i as u64, w, h)
        })
        .collect()
}

/// Writes a directory-per-class PNG corpus: `dir/class_<c>/img_<i>.png`.
pub fn write_class_corpus(
    dir: impl AsRef<Path>,
    classes: usize,
    per_class: usize,
    size: (usize, usize),
    seed: u64,
) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let style = ClassStyle::for_class(c);
        for i in 0..per_class {
            let img = styled_scene(
                seed ^ ((c * per_class + i) as u64).wrapping_mul(0x1000_0001),
                size.0,
                size.1,
                style,
            );
            let path = dir
                .join(format!("class_{c}"))
                .join(format!("img_{i:03}.png"));
            img.save(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}
