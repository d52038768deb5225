//! Conventional offloading: pick one quality factor up front and send the
//! complete stream, which is useful only if all of it fits the budget.

use super::{
    drop_packets, effective_bytes, inject_bit_errors, overhead, protected_bits_for_layout,
    ChannelConfig, TransmissionReport,
};
use crate::bitstream::{packetize, serialize, Packet, StreamHeader, StreamLayout, PACKET_SIZE};
use crate::codec::{transform, ColorMode, EncodedImage, Spectrum};
use crate::error::Result;
use crate::pixels::PixelImage;
use crate::quant::QualityFactor;

/// Stream layouts of one image at every quality factor.
#[derive(Debug, Clone)]
pub struct QualityLadder {
    spectrum: Spectrum,
    channels: usize,
    /// `layouts[q - 1]`
    layouts: Vec<StreamLayout>,
}

impl QualityLadder {
    pub fn new(img: &PixelImage, mode: ColorMode) -> Result<Self> {
        let spectrum = transform(img, mode)?;
        let layouts = (1..=100)
            .map(|q| {
                let enc = spectrum.quantize(QualityFactor::new(q).expect("in range"));
                StreamHeader::for_image(&enc).layout()
            })
            .collect();
        Ok(QualityLadder {
            spectrum,
            channels: mode.channels(),
            layouts,
        })
    }

    pub fn layout(&self, q: QualityFactor) -> &StreamLayout {
        &self.layouts[q.get() as usize - 1]
    }

    /// Wire bytes of the complete stream at `q`, including FEC overhead.
    pub fn wire_bytes(&self, q: QualityFactor, cfg: &ChannelConfig) -> u64 {
        let layout = self.layout(q);
        let packets = layout.packet_count();
        let protected = protected_bits_for_layout(layout, self.channels, cfg.protection);
        (packets * PACKET_SIZE) as u64
            + overhead(
                protected.bits_in_payload_packets(packets),
                cfg.fec_overhead_factor,
            )
    }

    /// Largest quality whose complete stream fits `cfg`'s budget.
    ///
    /// Every quality is checked rather than bisected, since stream size is
    /// not guaranteed to be monotone in the quality factor.
    pub fn select(&self, cfg: &ChannelConfig) -> Option<QualityFactor> {
        let Some(budget) = cfg.bytes_budget() else {
            return Some(QualityFactor::MAX);
        };
        (1..=100u32)
            .rev()
            .map(|q| QualityFactor::new(q).expect("in range"))
            .find(|&q| self.wire_bytes(q, cfg) <= budget)
    }

    pub fn encode(&self, q: QualityFactor) -> EncodedImage {
        self.spectrum.quantize(q)
    }
}

#[derive(Debug, Clone)]
pub enum BaselineOutcome {
    Delivered {
        quality: QualityFactor,
        /// Received packets after drops and bit errors.
        packets: Vec<Packet>,
        report: TransmissionReport,
    },
    /// Not even the lowest quality fits; no inference happens.
    Failed { report: TransmissionReport },
}

impl BaselineOutcome {
    pub fn report(&self) -> &TransmissionReport {
        match self {
            BaselineOutcome::Delivered { report, .. } | BaselineOutcome::Failed { report } => {
                report
            }
        }
    }

    pub fn quality(&self) -> Option<QualityFactor> {
        match self {
            BaselineOutcome::Delivered { quality, .. } => Some(*quality),
            BaselineOutcome::Failed { .. } => None,
        }
    }
}

/// Selects a quality from `ladder`, sends the whole stream, then applies
/// the same drop and bit-error stages as the progressive pipeline.
pub fn conventional_baseline(
    ladder: &QualityLadder,
    cfg: &ChannelConfig,
) -> Result<BaselineOutcome> {
    cfg.validate()?;
    let Some(quality) = ladder.select(cfg) else {
        return Ok(BaselineOutcome::Failed {
            report: TransmissionReport {
                packets_total: ladder.layout(QualityFactor::MIN).packet_count(),
                bytes_budget: cfg.bytes_budget(),
                ..Default::default()
            },
        });
    };
    let enc = ladder.encode(quality);
    let stream = serialize(&enc)?;
    let packets = packetize(&stream)?;
    let layout = ladder.layout(quality);
    let protected = protected_bits_for_layout(layout, ladder.channels, cfg.protection);
    let kept = drop_packets(&packets, cfg)?;
    let (received, flipped) = inject_bit_errors(&kept, cfg, &protected);
    let report = TransmissionReport {
        packets_total: packets.len(),
        packets_sent: packets.len(),
        packets_delivered: received.len(),
        bits_flipped: flipped,
        bytes_budget: cfg.bytes_budget(),
        protected_bytes: overhead(
            protected.bits_in_payload_packets(packets.len()),
            cfg.fec_overhead_factor,
        ),
        effective_payload_bytes: effective_bytes(&received, stream.len()),
        decodable: true,
    };
    Ok(BaselineOutcome::Delivered {
        quality,
        packets: received,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use std::time::Duration;

    fn cfg_with_budget(bytes: u64) -> ChannelConfig {
        // 8 Mbps for `bytes` microseconds gives exactly `bytes` bytes.
        ChannelConfig {
            rate_bps: Some(8_000_000),
            deadline: Some(Duration::from_micros(bytes)),
            ..Default::default()
        }
    }

    #[test]
    fn budget_helper_is_exact() {
        assert_eq!(cfg_with_budget(12_345).bytes_budget(), Some(12_345));
    }

    #[test]
    fn unlimited_budget_picks_max_quality() {
        let ladder = QualityLadder::new(&synth::scene(1, 96, 64), ColorMode::YCbCr444).unwrap();
        let out = conventional_baseline(&ladder, &ChannelConfig::default()).unwrap();
        assert_eq!(out.quality(), Some(QualityFactor::MAX));
    }

    #[test]
    fn tiny_budget_fails() {
        let ladder = QualityLadder::new(&synth::scene(1, 96, 64), ColorMode::YCbCr444).unwrap();
        let min = ladder.wire_bytes(QualityFactor::MIN, &ChannelConfig::default());
        let out = conventional_baseline(&ladder, &cfg_with_budget(min - 1)).unwrap();
        assert!(matches!(out, BaselineOutcome::Failed { .. }));
        let out = conventional_baseline(&ladder, &cfg_with_budget(min)).unwrap();
        assert!(out.quality().is_some());
    }

    #[test]
    fn selection_is_monotone_and_maximal() {
        let ladder = QualityLadder::new(&synth::scene(8, 160, 120), ColorMode::YCbCr444).unwrap();
        let mut last = None;
        for kb in (1..=120).map(|k| k * 1024) {
            let cfg = cfg_with_budget(kb);
            let q = ladder.select(&cfg);
            assert!(q >= last, "{q:?} < {last:?} at {kb}");
            if let Some(q) = q {
                assert!(ladder.wire_bytes(q, &cfg) <= kb);
                for higher in q.get() as u32 + 1..=100 {
                    assert!(ladder.wire_bytes(QualityFactor::new(higher).unwrap(), &cfg) > kb);
                }
            }
            last = q;
        }
    }
}
