//! Seeded corruption of packet streams.
//!
//! The pipeline is fixed: truncate to the byte budget, drop packets, then
//! flip payload bits. Packet 0 carries the stream header and is exempt from
//! every stage except the budget check. All randomness comes from ChaCha8
//! generators seeded by [`ChannelConfig::seed`], with a separate stream per
//! stage so results are reproducible across runs and platforms.

mod baseline;
mod config;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use baseline::{conventional_baseline, BaselineOutcome, QualityLadder};
pub use config::{parse_duration, parse_rate, ChannelConfig, Loss, Protection};

use crate::bitstream::{Packet, StreamHeader, StreamLayout, PACKET_SIZE, PAYLOAD_SIZE};
use crate::codec::EncodedImage;
use crate::error::{Error, Result};

const DROP_STREAM: u64 = 1;
const BIT_ERROR_STREAM: u64 = 2;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransmissionReport {
    /// Packets in the full stream.
    pub packets_total: usize,
    /// Packets put on the channel within the budget.
    pub packets_sent: usize,
    pub packets_delivered: usize,
    pub bits_flipped: u64,
    pub bytes_budget: Option<u64>,
    /// FEC overhead charged for protected bits of the sent packets.
    pub protected_bytes: u64,
    /// Serialized-stream bytes carried by delivered packets.
    pub effective_payload_bytes: u64,
    pub decodable: bool,
}

/// Stream bit positions exempt from bit errors, sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProtectedBits {
    positions: Vec<u64>,
}

impl ProtectedBits {
    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, bit: u64) -> bool {
        self.positions.binary_search(&bit).is_ok()
    }

    /// `ceil(factor * bits / 8)` over every protected bit.
    pub fn overhead_bytes(&self, factor: f64) -> u64 {
        overhead(self.positions.len(), factor)
    }

    /// Protected bits lying in packets `1..packets`; packet 0 needs no parity.
    pub fn bits_in_payload_packets(&self, packets: usize) -> usize {
        let lo = (PAYLOAD_SIZE * 8) as u64;
        let hi = (packets * PAYLOAD_SIZE * 8) as u64;
        if hi <= lo {
            return 0;
        }
        let a = self.positions.partition_point(|&b| b < lo);
        let b = self.positions.partition_point(|&b| b < hi);
        b - a
    }
}

fn overhead(bits: usize, factor: f64) -> u64 {
    if bits == 0 {
        return 0;
    }
    (factor * bits as f64 / 8.0).ceil() as u64
}

/// Bits of the DC planes that `mode` protects, located via `layout`.
pub fn protected_bits_for_layout(
    layout: &StreamLayout,
    channels: usize,
    mode: Protection,
) -> ProtectedBits {
    let mut positions = Vec::new();
    if mode == Protection::None {
        return ProtectedBits { positions };
    }
    for plane in 0..channels {
        let entry = layout.entries[plane];
        for i in 0..entry.count as usize {
            let (start, width) = layout.bit_span(plane, i);
            match mode {
                Protection::DcSign if width > 0 => positions.push(start),
                Protection::DcFull => positions.extend(start..start + width as u64),
                _ => {}
            }
        }
    }
    ProtectedBits { positions }
}

/// The protected bit set of `enc`'s serialized stream.
pub fn protected_bit_set(enc: &EncodedImage, mode: Protection) -> ProtectedBits {
    protected_bits_for_layout(&StreamLayout::for_image(enc), enc.channels(), mode)
}

fn layout_from_packets(packets: &[Packet]) -> Result<(StreamLayout, usize)> {
    let first = packets
        .iter()
        .find(|p| p.seq == 0)
        .ok_or(Error::MissingHeaderPacket)?;
    let header = StreamHeader::parse(&first.payload[..])?;
    Ok((header.layout(), header.channels()))
}

/// Longest packet prefix whose wire bytes plus FEC overhead fit the budget.
///
/// Returns `None` when not even packet 0 fits (the image cannot be decoded).
pub fn truncate_to_budget(
    packets: &[Packet],
    cfg: &ChannelConfig,
    protected: &ProtectedBits,
) -> (Option<Vec<Packet>>, TransmissionReport) {
    let mut sorted: Vec<&Packet> = packets.iter().collect();
    sorted.sort_by_key(|p| p.seq);
    let budget = cfg.bytes_budget();
    let cost = |m: usize| {
        (m * PACKET_SIZE) as u64
            + overhead(
                protected.bits_in_payload_packets(m),
                cfg.fec_overhead_factor,
            )
    };
    let mut m = sorted.len();
    if let Some(budget) = budget {
        while m > 0 && cost(m) > budget {
            m -= 1;
        }
    }
    let mut report = TransmissionReport {
        packets_total: packets.len(),
        packets_sent: m,
        bytes_budget: budget,
        protected_bytes: overhead(
            protected.bits_in_payload_packets(m),
            cfg.fec_overhead_factor,
        ),
        ..Default::default()
    };
    if m == 0 || sorted[0].seq != 0 {
        report.packets_sent = 0;
        report.protected_bytes = 0;
        return (None, report);
    }
    report.decodable = true;
    (
        Some(sorted[..m].iter().map(|&p| p.clone()).collect()),
        report,
    )
}

/// Removes payload packets per `cfg.loss`. Packet 0 is never dropped.
pub fn drop_packets(packets: &[Packet], cfg: &ChannelConfig) -> Result<Vec<Packet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(DROP_STREAM);
    let candidates: Vec<usize> = (0..packets.len())
        .filter(|&i| packets[i].seq != 0)
        .collect();
    let mut keep = vec![true; packets.len()];
    match cfg.loss {
        Loss::None | Loss::DropCount(0) => {}
        Loss::DropCount(n) => {
            if n >= candidates.len() {
                return Err(Error::Config(format!(
                    "cannot drop {n} of {} payload packets",
                    candidates.len()
                )));
            }
            for i in sample(&mut rng, candidates.len(), n) {
                keep[candidates[i]] = false;
            }
        }
        Loss::DropRate(r) => {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidProbability(r));
            }
            for &i in &candidates {
                if rng.gen::<f64>() < r {
                    keep[i] = false;
                }
            }
        }
    }
    Ok(packets
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| p.clone())
        .collect())
}

/// Flips each unprotected payload bit of packets other than packet 0 with
/// probability `cfg.bit_error_prob`. Returns the packets and the flip count.
pub fn inject_bit_errors(
    packets: &[Packet],
    cfg: &ChannelConfig,
    protected: &ProtectedBits,
) -> (Vec<Packet>, u64) {
    let p = cfg.bit_error_prob;
    let mut out: Vec<Packet> = packets.to_vec();
    if p <= 0.0 {
        return (out, 0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(BIT_ERROR_STREAM);
    let mut flipped = 0u64;
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by_key(|&i| out[i].seq);
    for i in order {
        let packet = &mut out[i];
        if packet.seq == 0 {
            continue;
        }
        let base = packet.seq as u64 * PAYLOAD_SIZE as u64 * 8;
        let positions = protected.positions();
        let mut cursor = positions.partition_point(|&b| b < base);
        for (byte_idx, byte) in packet.payload.iter_mut().enumerate() {
            for bit in 0..8u64 {
                let pos = base + byte_idx as u64 * 8 + bit;
                if cursor < positions.len() && positions[cursor] == pos {
                    cursor += 1;
                    continue;
                }
                if rng.gen::<f64>() < p {
                    *byte ^= 0x80 >> bit;
                    flipped += 1;
                }
            }
        }
    }
    (out, flipped)
}

/// Stream bytes (excluding padding) carried by `packets`.
fn effective_bytes(packets: &[Packet], stream_len: usize) -> u64 {
    packets
        .iter()
        .map(|p| {
            let start = p.seq as usize * PAYLOAD_SIZE;
            stream_len.saturating_sub(start).min(PAYLOAD_SIZE) as u64
        })
        .sum()
}

/// Outcome of sending one packetized image through the channel.
#[derive(Debug, Clone)]
pub struct Transmission {
    /// Received packets, or `None` when the image is undecodable.
    pub delivered: Option<Vec<Packet>>,
    pub report: TransmissionReport,
}

/// Runs truncate, drop and bit-error stages in order.
pub fn transmit(packets: &[Packet], cfg: &ChannelConfig) -> Result<Transmission> {
    cfg.validate()?;
    let (layout, channels) = layout_from_packets(packets)?;
    let protected = protected_bits_for_layout(&layout, channels, cfg.protection);
    let (sent, mut report) = truncate_to_budget(packets, cfg, &protected);
    let Some(sent) = sent else {
        return Ok(Transmission {
            delivered: None,
            report,
        });
    };
    let kept = drop_packets(&sent, cfg)?;
    let (received, flipped) = inject_bit_errors(&kept, cfg, &protected);
    report.packets_delivered = received.len();
    report.bits_flipped = flipped;
    report.effective_payload_bytes = effective_bytes(&received, layout.total_len);
    Ok(Transmission {
        delivered: Some(received),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::{depacketize, packetize, serialize};
    use crate::codec::{encode_image, ColorMode};
    use crate::quant::QualityFactor;
    use crate::synth;
    use std::time::Duration;

    fn fixture() -> (EncodedImage, Vec<Packet>) {
        let enc = encode_image(
            &synth::scene(21, 224, 224),
            QualityFactor::DEFAULT,
            ColorMode::YCbCr444,
        )
        .unwrap();
        let packets = packetize(&serialize(&enc).unwrap()).unwrap();
        (enc, packets)
    }

    #[test]
    fn zero_probability_is_identity() {
        let (_, packets) = fixture();
        let cfg = ChannelConfig::default();
        let (out, flipped) = inject_bit_errors(&packets, &cfg, &ProtectedBits::default());
        assert_eq!(out, packets);
        assert_eq!(flipped, 0);
    }

    #[test]
    fn probability_one_inverts_unprotected_bits() {
        let (enc, packets) = fixture();
        let protected = protected_bit_set(&enc, Protection::DcSign);
        let cfg = ChannelConfig {
            bit_error_prob: 1.0,
            ..Default::default()
        };
        let (out, flipped) = inject_bit_errors(&packets, &cfg, &protected);
        assert_eq!(out[0], packets[0]);
        let mut expected = 0;
        for (a, b) in out.iter().zip(packets.iter()).skip(1) {
            for (j, (x, y)) in a.payload.iter().zip(b.payload.iter()).enumerate() {
                for bit in 0..8 {
                    let pos = (a.seq as u64 * PAYLOAD_SIZE as u64 + j as u64) * 8 + bit;
                    let differs = (x ^ y) & (0x80 >> bit) != 0;
                    assert_eq!(differs, !protected.contains(pos));
                    expected += differs as u64;
                }
            }
        }
        assert_eq!(flipped, expected);
    }

    #[test]
    fn dc_full_keeps_dc_values() {
        let (enc, packets) = fixture();
        let cfg = ChannelConfig {
            bit_error_prob: 0.3,
            protection: Protection::DcFull,
            seed: 5,
            ..Default::default()
        };
        let t = transmit(&packets, &cfg).unwrap();
        let d = depacketize(t.delivered.as_ref().unwrap()).unwrap();
        for ch in 0..3 {
            assert_eq!(d.image.plane(0, ch), enc.plane(0, ch));
        }
        assert_ne!(d.image, enc);
    }

    #[test]
    fn protection_sizes() {
        let (enc, _) = fixture();
        assert!(protected_bit_set(&enc, Protection::None).is_empty());
        let sign = protected_bit_set(&enc, Protection::DcSign);
        let full = protected_bit_set(&enc, Protection::DcFull);
        assert_eq!(sign.len(), 3 * enc.block_count());
        let dc_bits: usize = (0..3)
            .map(|ch| enc.plane(0, ch).bit_width() as usize * enc.block_count())
            .sum();
        assert_eq!(full.len(), dc_bits);
        assert_eq!(full.overhead_bytes(1.0), (dc_bits as u64).div_ceil(8));
        assert_eq!(full.overhead_bytes(0.0), 0);
        assert!(sign.positions().iter().all(|p| full.contains(*p)));
    }

    #[test]
    fn drop_count_never_touches_packet_zero() {
        let (_, packets) = fixture();
        for seed in 0..50 {
            let cfg = ChannelConfig {
                loss: Loss::DropCount(3),
                seed,
                ..Default::default()
            };
            let out = drop_packets(&packets, &cfg).unwrap();
            assert_eq!(out.len(), packets.len() - 3);
            assert_eq!(out[0].seq, 0);
        }
        let cfg = ChannelConfig {
            loss: Loss::DropCount(packets.len() - 1),
            ..Default::default()
        };
        assert!(drop_packets(&packets, &cfg).is_err());
    }

    #[test]
    fn drop_rate_extremes() {
        let (_, packets) = fixture();
        let all = ChannelConfig {
            loss: Loss::DropRate(1.0),
            ..Default::default()
        };
        assert_eq!(drop_packets(&packets, &all).unwrap().len(), 1);
        let none = ChannelConfig {
            loss: Loss::DropRate(0.0),
            ..Default::default()
        };
        assert_eq!(drop_packets(&packets, &none).unwrap(), packets);
    }

    #[test]
    fn truncation_respects_budget() {
        let (enc, packets) = fixture();
        for protection in Protection::ALL {
            let protected = protected_bit_set(&enc, protection);
            for budget_ms in 1..=20u64 {
                let cfg = ChannelConfig {
                    rate_bps: Some(2_000_000),
                    deadline: Some(Duration::from_millis(budget_ms)),
                    protection,
                    ..Default::default()
                };
                let budget = cfg.bytes_budget().unwrap();
                let (sent, report) = truncate_to_budget(&packets, &cfg, &protected);
                let cost = |m: usize| {
                    (m * PACKET_SIZE) as u64 + overhead(protected.bits_in_payload_packets(m), 1.0)
                };
                match sent {
                    None => assert!(budget < cost(1)),
                    Some(sent) => {
                        let m = sent.len();
                        assert_eq!(report.packets_sent, m);
                        assert!(cost(m) <= budget);
                        assert!(m == packets.len() || cost(m + 1) > budget);
                        assert!(sent.iter().enumerate().all(|(i, p)| p.seq as usize == i));
                    }
                }
            }
        }
    }

    #[test]
    fn sub_packet_budget_fails() {
        let (_, packets) = fixture();
        let cfg = ChannelConfig {
            rate_bps: Some(1_000_000),
            deadline: Some(Duration::from_millis(1)),
            ..Default::default()
        };
        let t = transmit(&packets, &cfg).unwrap();
        assert!(t.delivered.is_none());
        assert!(!t.report.decodable);
        assert_eq!(t.report.bytes_budget, Some(125));
    }

    #[test]
    fn pipeline_is_deterministic_and_preserves_headers() {
        let (_, packets) = fixture();
        let cfg = ChannelConfig {
            bit_error_prob: 0.05,
            loss: Loss::DropCount(2),
            rate_bps: Some(5_000_000),
            deadline: Some(Duration::from_millis(40)),
            seed: 17,
            ..Default::default()
        };
        let a = transmit(&packets, &cfg).unwrap();
        let b = transmit(&packets, &cfg).unwrap();
        assert_eq!(a.delivered, b.delivered);
        assert_eq!(a.report, b.report);
        for p in a.delivered.unwrap() {
            assert_eq!(p.total as usize, packets.len());
        }
    }
}
