//! Corpus-level experiment orchestration.
//!
//! Every run writes reconstructed PNGs plus a manifest CSV; downstream
//! training and evaluation code consumes only those artifacts.

mod augment;
mod commands;
mod corpus;
mod manifest;
mod sweep;

pub use augment::{run_augment, AugmentSpec, DropSchedule};
pub use commands::{
    corrupt_file, decode_file, encode_file, CorruptOutcome, DecodeSummary, EncodeSummary,
};
pub use corpus::{load_corpus, CorpusEntry};
pub use manifest::{
    fmt_sig6, read_manifest, write_manifest, ManifestRow, RowStatus, MANIFEST_COLUMNS,
};
pub use sweep::{run_sweep, Experiment, SweepSpec, SweepSummary};

use crate::error::{Error, Result};

/// Parses `"1,5,10"`, `"1..64"` (inclusive) or `"10..100:10"`, mixed by commas.
pub fn parse_int_list(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let bad = || Error::Config(format!("cannot parse list item '{item}'"));
        if let Some((range, step)) = item.split_once("..").map(|(a, rest)| {
            let (b, step) = rest.split_once(':').unwrap_or((rest, "1"));
            ((a, b), step)
        }) {
            let a: u64 = range.0.trim().parse().map_err(|_| bad())?;
            let b: u64 = range.1.trim().parse().map_err(|_| bad())?;
            let step: u64 = step.trim().parse().map_err(|_| bad())?;
            if step == 0 || b < a {
                return Err(bad());
            }
            out.extend((a..=b).step_by(step as usize));
        } else {
            out.push(item.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("empty list '{s}'")));
    }
    Ok(out)
}

/// Parses a comma-separated list of floats.
pub fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|i| !i.is_empty())
        .map(|i| {
            i.parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse number '{i}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::Config(format!("empty list '{s}'")));
    }
    Ok(out)
}

/// Per-row seed: the run seed XOR a SplitMix64 scramble of the task index.
///
/// A bare `seed ^ task` would make runs with seeds `s` and `s ^ 1` reuse
/// each other's row seeds in swapped order.
pub fn task_seed(seed: u64, task: usize) -> u64 {
    let mut z = (task as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    seed ^ z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_lists() {
        assert_eq!(parse_int_list("1,5,10").unwrap(), vec![1, 5, 10]);
        assert_eq!(parse_int_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(
            parse_int_list("10..40:10, 64").unwrap(),
            vec![10, 20, 30, 40, 64]
        );
        assert!(parse_int_list("4..1").is_err());
        assert!(parse_int_list("").is_err());
        assert!(parse_int_list("x").is_err());
    }

    #[test]
    fn task_seeds_do_not_collide_across_adjacent_run_seeds() {
        let a: std::collections::HashSet<u64> = (0..1000).map(|t| task_seed(1000, t)).collect();
        assert_eq!(a.len(), 1000);
        assert!((0..1000).all(|t| !a.contains(&task_seed(1001, t))));
        assert_eq!(task_seed(5, 3), task_seed(5, 3));
    }

    #[test]
    fn float_lists() {
        assert_eq!(
            parse_float_list("0, 0.01,0.1").unwrap(),
            vec![0.0, 0.01, 0.1]
        );
        assert!(parse_float_list("0.1,abc").is_err());
    }
}
