//! Robust-training augmentation: every image is encoded, loses coefficients
//! at random, and is reconstructed. Meant to be rerun once per training
//! epoch with a fresh seed.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::corpus::{load_corpus, CorpusEntry};
use super::manifest::{write_manifest, ManifestRow, RowStatus};
use super::sweep::SweepSummary;
use super::{parse_float_list, task_seed};
use crate::codec::{encode_image, reconstruct, ColorMode};
use crate::error::{Error, Result};
use crate::mask::{augment_drop, make_mask, DropGranularity, MaskSpec};
use crate::pixels::{psnr, PixelImage};
use crate::quant::QualityFactor;

/// Per-plane drop probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum DropSchedule {
    None,
    Uniform(f64),
    /// `p[k]` interpolated from `a` at k = 0 to `b` at k = 63.
    Linear(f64, f64),
    /// Keep the top n planes with n uniform in `[1, 64]`, redrawn per image.
    TopNUniform,
    Vector(Box<[f64; 64]>),
}

impl DropSchedule {
    /// The probability vector, or `None` for [`DropSchedule::TopNUniform`].
    pub fn probabilities(&self) -> Option<[f64; 64]> {
        match self {
            DropSchedule::None => Some([0.0; 64]),
            DropSchedule::Uniform(p) => Some([*p; 64]),
            DropSchedule::Linear(a, b) => {
                Some(std::array::from_fn(|k| a + (b - a) * k as f64 / 63.0))
            }
            DropSchedule::TopNUniform => None,
            DropSchedule::Vector(v) => Some(**v),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.probabilities() {
            if let Some(&bad) = p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidProbability(bad));
            }
        }
        Ok(())
    }
}

impl FromStr for DropSchedule {
    type Err = Error;

    /// `none`, `uniform:P`, `linear:A:B`, `top_n_uniform`, or 64
    /// comma-separated probabilities.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad probability '{v}' in schedule '{s}'")))
        };
        let schedule = match s.split(':').collect::<Vec<_>>().as_slice() {
            ["none"] => DropSchedule::None,
            ["top_n_uniform"] => DropSchedule::TopNUniform,
            ["uniform", p] => DropSchedule::Uniform(num(p)?),
            ["linear", a, b] => DropSchedule::Linear(num(a)?, num(b)?),
            _ => {
                let v = parse_float_list(s)?;
                let arr: [f64; 64] = v.as_slice().try_into().map_err(|_| {
                    Error::Config(format!("drop vector needs 64 entries, got {}", v.len()))
                })?;
                DropSchedule::Vector(Box::new(arr))
            }
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSpec {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub quality: QualityFactor,
    pub color_mode: Option<ColorMode>,
    pub schedule: DropSchedule,
    pub granularity: DropGranularity,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl AugmentSpec {
    pub fn new(
        corpus: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
        schedule: DropSchedule,
    ) -> Self {
        AugmentSpec {
            corpus: corpus.into(),
            out: out.into(),
            seed: 0,
            quality: QualityFactor::DEFAULT,
            color_mode: None,
            schedule,
            granularity: DropGranularity::default(),
            workers: 0,
        }
    }
}

/// Writes `out/<label>/<stem>.png` for every corpus image plus
/// `out/manifest.csv`. Unreadable images get an error row.
pub fn run_augment(spec: &AugmentSpec) -> Result<SweepSummary> {
    spec.schedule.validate()?;
    let corpus = load_corpus(&spec.corpus)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<ManifestRow> = pool.install(|| {
        corpus
            .par_iter()
            .enumerate()
            .map(|(i, entry)| {
                let seed = task_seed(spec.seed, i);
                let mut row = ManifestRow {
                    source: entry.path.display().to_string(),
                    label: entry.label.clone(),
                    experiment: "augment".into(),
                    pipeline: "augment".into(),
                    quality: Some(spec.quality.get()),
                    seed: Some(seed),
                    ..Default::default()
                };
                if let Err(e) = augment_one(spec, entry, seed, &mut row) {
                    log::warn!("{}: {e}", entry.path.display());
                    row.fail(RowStatus::Error, e.to_string());
                }
                row
            })
            .collect()
    });
    let manifest = spec.out.join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    let count = |s: RowStatus| rows.iter().filter(|r| r.status == s).count();
    Ok(SweepSummary {
        manifest,
        rows: rows.len(),
        ok: count(RowStatus::Ok),
        failed: count(RowStatus::Failed),
        errors: count(RowStatus::Error),
    })
}

fn augment_one(
    spec: &AugmentSpec,
    entry: &CorpusEntry,
    seed: u64,
    row: &mut ManifestRow,
) -> Result<()> {
    let img = PixelImage::open(&entry.path)?;
    let mode = spec
        .color_mode
        .unwrap_or_else(|| ColorMode::for_image(&img));
    let reference = match mode {
        ColorMode::Luma => img.to_luma(),
        ColorMode::YCbCr444 => img,
    };
    let enc = encode_image(&reference, spec.quality, mode)?;
    let mask = match spec.schedule.probabilities() {
        Some(p) => augment_drop(&enc, &p, seed, spec.granularity)?,
        None => {
            let n = ChaCha8Rng::seed_from_u64(seed).gen_range(1..=64u32);
            row.n = Some(n);
            make_mask(&enc, &MaskSpec::KeepTopN(n as usize))?
        }
    };
    let out = reconstruct(&enc, &mask)?;
    let rel = Path::new(&entry.label).join(format!("{}.png", entry.stem));
    out.save(spec.out.join(&rel))?;
    row.output = Some(rel.to_string_lossy().replace('\\', "/"));
    row.psnr = Some(psnr(&reference, &out));
    row.coef_mse = Some(enc.coefficient_mse(&mask)?);
    row.mask_present = Some(mask.cardinality() as u64);
    row.mask_total = Some(mask.len() as u64);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_parse() {
        assert_eq!("none".parse::<DropSchedule>().unwrap(), DropSchedule::None);
        assert_eq!(
            "uniform:0.25".parse::<DropSchedule>().unwrap(),
            DropSchedule::Uniform(0.25)
        );
        assert_eq!(
            "top_n_uniform".parse::<DropSchedule>().unwrap(),
            DropSchedule::TopNUniform
        );
        let lin = "linear:0:0.63"
            .parse::<DropSchedule>()
            .unwrap()
            .probabilities()
            .unwrap();
        assert_eq!(lin[0], 0.0);
        assert!((lin[63] - 0.63).abs() < 1e-12);
        assert!((lin[10] - 0.1).abs() < 1e-12);
        let vec = vec!["0.5"; 64].join(",");
        assert_eq!(
            vec.parse::<DropSchedule>()
                .unwrap()
                .probabilities()
                .unwrap(),
            [0.5; 64]
        );
        assert!("uniform:1.5".parse::<DropSchedule>().is_err());
        assert!("0.1,0.2".parse::<DropSchedule>().is_err());
        assert!("sometimes".parse::<DropSchedule>().is_err());
    }
}
