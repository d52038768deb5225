//! Presence masks over `(channel, plane, block)` coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::EncodedImage;
use crate::error::{Error, Result};

/// One flag per coefficient, laid out like the planes of an [`EncodedImage`]:
/// transmission-order plane index major, block index minor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReconstructionMask {
    channels: usize,
    blocks: usize,
    present: Vec<bool>,
}

/// Ways to build a mask for an encoded image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaskSpec {
    /// Planes `0..n` present for every channel and block.
    KeepTopN(usize),
    /// Everything present except plane `k` in every channel.
    RemovePlane(usize),
    /// Exactly the listed `(channel, plane k, block)` coefficients.
    FromReceived(Vec<(usize, usize, usize)>),
}

/// Whether augmentation drops single coefficients or whole planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DropGranularity {
    #[default]
    PerBlock,
    PerPlane,
}

impl ReconstructionMask {
    pub fn full(enc: &EncodedImage) -> Self {
        Self::filled(enc.channels(), enc.block_count(), true)
    }

    pub fn empty(enc: &EncodedImage) -> Self {
        Self::filled(enc.channels(), enc.block_count(), false)
    }

    pub fn filled(channels: usize, blocks: usize, value: bool) -> Self {
        ReconstructionMask {
            channels,
            blocks,
            present: vec![value; channels * 64 * blocks],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    /// Number of present coefficients.
    pub fn cardinality(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn is_full(&self) -> bool {
        self.present.iter().all(|&p| p)
    }

    #[inline]
    fn offset(&self, channel: usize, k: usize, block: usize) -> usize {
        debug_assert!(channel < self.channels && k < 64 && block < self.blocks);
        (k * self.channels + channel) * self.blocks + block
    }

    pub fn is_present(&self, channel: usize, k: usize, block: usize) -> bool {
        self.present[self.offset(channel, k, block)]
    }

    pub fn set(&mut self, channel: usize, k: usize, block: usize, value: bool) {
        let i = self.offset(channel, k, block);
        self.present[i] = value;
    }

    /// Lookup by transmission-order plane index.
    #[inline]
    pub fn is_present_index(&self, plane: usize, block: usize) -> bool {
        self.present[plane * self.blocks + block]
    }

    #[inline]
    pub(crate) fn set_index(&mut self, plane: usize, block: usize, value: bool) {
        self.present[plane * self.blocks + block] = value;
    }

    /// Present count per transmission-order plane.
    pub fn plane_counts(&self) -> Vec<usize> {
        self.present
            .chunks(self.blocks.max(1))
            .map(|c| c.iter().filter(|&&p| p).count())
            .collect()
    }

    /// True when every coefficient present in `other` is present here.
    pub fn is_superset_of(&self, other: &ReconstructionMask) -> bool {
        self.present.len() == other.present.len()
            && self
                .present
                .iter()
                .zip(other.present.iter())
                .all(|(&a, &b)| a || !b)
    }

    pub(crate) fn check_shape(&self, enc: &EncodedImage) -> Result<()> {
        if self.channels != enc.channels() || self.blocks != enc.block_count() {
            return Err(Error::MaskMismatch {
                mask: (self.channels, self.blocks),
                image: (enc.channels(), enc.block_count()),
            });
        }
        Ok(())
    }
}

pub fn make_mask(enc: &EncodedImage, spec: &MaskSpec) -> Result<ReconstructionMask> {
    let (channels, blocks) = (enc.channels(), enc.block_count());
    match spec {
        MaskSpec::KeepTopN(n) => {
            if !(1..=64).contains(n) {
                return Err(Error::InvalidMaskSpec(format!(
                    "keep_top_n({n}) outside [1, 64]"
                )));
            }
            let mut mask = ReconstructionMask::filled(channels, blocks, false);
            let end = n * channels * blocks;
            mask.present[..end].fill(true);
            Ok(mask)
        }
        MaskSpec::RemovePlane(k) => {
            if *k > 63 {
                return Err(Error::InvalidMaskSpec(format!(
                    "remove_plane({k}) outside [0, 63]"
                )));
            }
            let mut mask = ReconstructionMask::filled(channels, blocks, true);
            let start = k * channels * blocks;
            mask.present[start..start + channels * blocks].fill(false);
            Ok(mask)
        }
        MaskSpec::FromReceived(cells) => {
            let mut mask = ReconstructionMask::filled(channels, blocks, false);
            for &(ch, k, b) in cells {
                if ch >= channels || k > 63 || b >= blocks {
                    return Err(Error::InvalidMaskSpec(format!(
                        "coefficient ({ch}, {k}, {b}) outside {channels} channels x 64 planes x {blocks} blocks"
                    )));
                }
                mask.set(ch, k, b, true);
            }
            Ok(mask)
        }
    }
}

/// Training-time augmentation: marks each coefficient of plane `k` absent
/// with probability `drop_prob[k]`, drawn from a generator seeded by `seed`.
pub fn augment_drop(
    enc: &EncodedImage,
    drop_prob: &[f64; 64],
    seed: u64,
    granularity: DropGranularity,
) -> Result<ReconstructionMask> {
    if let Some(&p) = drop_prob.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = ReconstructionMask::full(enc);
    let (channels, blocks) = (enc.channels(), enc.block_count());
    for (k, &p) in drop_prob.iter().enumerate() {
        for ch in 0..channels {
            let plane = k * channels + ch;
            match granularity {
                DropGranularity::PerBlock => {
                    for b in 0..blocks {
                        if rng.gen::<f64>() < p {
                            mask.set_index(plane, b, false);
                        }
                    }
                }
                DropGranularity::PerPlane => {
                    if rng.gen::<f64>() < p {
                        for b in 0..blocks {
                            mask.set_index(plane, b, false);
                        }
                    }
                }
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode_image, ColorMode};
    use crate::quant::QualityFactor;
    use crate::synth;

    fn fixture() -> EncodedImage {
        let img = synth::scene(2, 48, 40);
        encode_image(&img, QualityFactor::DEFAULT, ColorMode::YCbCr444).unwrap()
    }

    #[test]
    fn keep_top_n_counts() {
        let enc = fixture();
        let blocks = enc.block_count();
        assert!(make_mask(&enc, &MaskSpec::KeepTopN(64)).unwrap().is_full());
        for n in [1, 5, 63] {
            let m = make_mask(&enc, &MaskSpec::KeepTopN(n)).unwrap();
            assert_eq!(m.cardinality(), n * 3 * blocks);
            for ch in 0..3 {
                assert!(m.is_present(ch, n - 1, blocks - 1));
                assert!(!m.is_present(ch, n, 0));
            }
        }
        assert!(make_mask(&enc, &MaskSpec::KeepTopN(0)).is_err());
        assert!(make_mask(&enc, &MaskSpec::KeepTopN(65)).is_err());
    }

    #[test]
    fn remove_plane_clears_exactly_one_plane() {
        let enc = fixture();
        let m = make_mask(&enc, &MaskSpec::RemovePlane(7)).unwrap();
        assert_eq!(m.cardinality(), 63 * 3 * enc.block_count());
        for ch in 0..3 {
            for k in 0..64 {
                assert_eq!(m.is_present(ch, k, 0), k != 7);
            }
        }
        assert!(make_mask(&enc, &MaskSpec::RemovePlane(64)).is_err());
    }

    #[test]
    fn from_received() {
        let enc = fixture();
        let m = make_mask(&enc, &MaskSpec::FromReceived(vec![(0, 0, 0), (2, 63, 1)])).unwrap();
        assert_eq!(m.cardinality(), 2);
        assert!(m.is_present(2, 63, 1));
        assert!(make_mask(&enc, &MaskSpec::FromReceived(vec![(3, 0, 0)])).is_err());
    }

    #[test]
    fn augment_extremes_and_determinism() {
        let enc = fixture();
        let none = augment_drop(&enc, &[0.0; 64], 1, DropGranularity::PerBlock).unwrap();
        assert!(none.is_full());
        let all = augment_drop(&enc, &[1.0; 64], 1, DropGranularity::PerBlock).unwrap();
        assert_eq!(all.cardinality(), 0);

        let a = augment_drop(&enc, &[0.3; 64], 42, DropGranularity::PerBlock).unwrap();
        let b = augment_drop(&enc, &[0.3; 64], 42, DropGranularity::PerBlock).unwrap();
        let c = augment_drop(&enc, &[0.3; 64], 43, DropGranularity::PerBlock).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);

        let mut bad = [0.0; 64];
        bad[10] = 1.5;
        assert!(matches!(
            augment_drop(&enc, &bad, 0, DropGranularity::PerBlock),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn per_plane_drops_whole_planes() {
        let enc = fixture();
        let m = augment_drop(&enc, &[0.5; 64], 9, DropGranularity::PerPlane).unwrap();
        let counts = m.plane_counts();
        assert!(counts.iter().all(|&c| c == 0 || c == enc.block_count()));
        assert!(counts.contains(&0) && counts.contains(&enc.block_count()));
    }

    #[test]
    fn mask_shape_is_checked() {
        let enc = fixture();
        let other = ReconstructionMask::filled(1, enc.block_count(), true);
        assert!(matches!(
            crate::codec::reconstruct(&enc, &other),
            Err(Error::MaskMismatch { .. })
        ));
    }
}
