//! Bit-exact stream format and fixed-size packetization.
//!
//! Stream layout (all multi-byte integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SEMC"
//! 4       1     version (1)
//! 5       2     width
//! 7       2     height
//! 9       1     channels (1 or 3)
//! 10      1     quality factor
//! 11      1     color mode (0 = luma, 1 = ycbcr444)
//! 12      5*P   plane table, P = 64 * channels entries in transmission order:
//!               bit width (u8), value count (u32)
//! ...           payload: each plane's values MSB-first in two's complement,
//!               `bit width` bits each, padded to a byte boundary
//! ```
//!
//! Packets are 1024 bytes on the wire: sequence number (u32), packet count
//! (u32), then 1016 payload bytes holding a contiguous slice of the stream.
//! The last packet is zero-padded.

use std::path::Path;

use crate::codec::{CoefficientPlane, ColorMode, EncodedImage};
use crate::error::{Error, Result};
use crate::mask::ReconstructionMask;
use crate::quant::QualityFactor;

pub const MAGIC: &[u8; 4] = b"SEMC";
pub const VERSION: u8 = 1;
pub const PACKET_SIZE: usize = 1024;
pub const PACKET_HEADER_SIZE: usize = 8;
pub const PAYLOAD_SIZE: usize = PACKET_SIZE - PACKET_HEADER_SIZE;

const FIXED_HEADER_SIZE: usize = 12;
const PLANE_ENTRY_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlaneEntry {
    pub bit_width: u8,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamHeader {
    pub width: u16,
    pub height: u16,
    pub color_mode: ColorMode,
    pub quality: QualityFactor,
    pub planes: Vec<PlaneEntry>,
}

impl StreamHeader {
    pub fn for_image(enc: &EncodedImage) -> Self {
        StreamHeader {
            width: enc.width() as u16,
            height: enc.height() as u16,
            color_mode: enc.color_mode(),
            quality: enc.quality(),
            planes: enc
                .planes()
                .iter()
                .map(|p| PlaneEntry {
                    bit_width: p.bit_width(),
                    count: p.values.len() as u32,
                })
                .collect(),
        }
    }

    pub fn channels(&self) -> usize {
        self.color_mode.channels()
    }

    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER_SIZE + PLANE_ENTRY_SIZE * self.planes.len()
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.push(self.channels() as u8);
        out.push(self.quality.get());
        out.push(self.color_mode.code());
        for p in &self.planes {
            out.push(p.bit_width);
            out.extend_from_slice(&p.count.to_le_bytes());
        }
    }

    /// Parses and validates a header at the start of `bytes`.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let malformed = |m: &str| Error::Malformed(m.to_string());
        if bytes.len() < FIXED_HEADER_SIZE {
            return Err(malformed("truncated header"));
        }
        if &bytes[0..4] != MAGIC {
            return Err(malformed("bad magic"));
        }
        if bytes[4] != VERSION {
            return Err(Error::Malformed(format!(
                "unsupported version {}",
                bytes[4]
            )));
        }
        let width = u16::from_le_bytes([bytes[5], bytes[6]]);
        let height = u16::from_le_bytes([bytes[7], bytes[8]]);
        let channels = bytes[9];
        let quality = QualityFactor::new(bytes[10] as u32)?;
        let color_mode = ColorMode::from_code(bytes[11])
            .ok_or_else(|| Error::Malformed(format!("unknown color mode {}", bytes[11])))?;
        if color_mode.channels() != channels as usize {
            return Err(malformed("channel count disagrees with color mode"));
        }
        if width == 0 || height == 0 {
            return Err(malformed("zero image dimension"));
        }
        let nplanes = 64 * channels as usize;
        let len = FIXED_HEADER_SIZE + PLANE_ENTRY_SIZE * nplanes;
        if bytes.len() < len {
            return Err(malformed("truncated plane table"));
        }
        let blocks = (width as u32).div_ceil(8) * (height as u32).div_ceil(8);
        let planes = bytes[FIXED_HEADER_SIZE..len]
            .chunks_exact(PLANE_ENTRY_SIZE)
            .map(|e| PlaneEntry {
                bit_width: e[0],
                count: u32::from_le_bytes([e[1], e[2], e[3], e[4]]),
            })
            .collect::<Vec<_>>();
        for (i, p) in planes.iter().enumerate() {
            if p.bit_width > 16 {
                return Err(Error::Malformed(format!(
                    "plane {i} bit width {} > 16",
                    p.bit_width
                )));
            }
            if p.count != blocks {
                return Err(Error::Malformed(format!(
                    "plane {i} declares {} values, image has {blocks} blocks",
                    p.count
                )));
            }
        }
        Ok(StreamHeader {
            width,
            height,
            color_mode,
            quality,
            planes,
        })
    }

    pub fn layout(&self) -> StreamLayout {
        let header_len = self.encoded_len();
        let mut offsets = Vec::with_capacity(self.planes.len());
        let mut at = header_len;
        for p in &self.planes {
            offsets.push(at);
            at += (p.bit_width as usize * p.count as usize).div_ceil(8);
        }
        StreamLayout {
            header_len,
            plane_offsets: offsets,
            entries: self.planes.clone(),
            total_len: at,
        }
    }
}

/// Byte and bit positions of every coefficient in a serialized stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamLayout {
    pub header_len: usize,
    /// Stream byte offset where each plane starts.
    pub plane_offsets: Vec<usize>,
    pub entries: Vec<PlaneEntry>,
    pub total_len: usize,
}

impl StreamLayout {
    pub fn for_image(enc: &EncodedImage) -> Self {
        StreamHeader::for_image(enc).layout()
    }

    /// Stream bit offset of value `index` of `plane`, and its width.
    #[inline]
    pub fn bit_span(&self, plane: usize, index: usize) -> (u64, u8) {
        let b = self.entries[plane].bit_width;
        (
            self.plane_offsets[plane] as u64 * 8 + index as u64 * b as u64,
            b,
        )
    }

    pub fn payload_len(&self) -> usize {
        self.total_len - self.header_len
    }

    pub fn packet_count(&self) -> usize {
        self.total_len.div_ceil(PAYLOAD_SIZE).max(1)
    }

    /// Bytes occupied by the planes with zigzag index `k`.
    pub fn plane_group_bytes(&self, k: usize, channels: usize) -> usize {
        (0..channels)
            .map(|ch| {
                let e = self.entries[k * channels + ch];
                (e.bit_width as usize * e.count as usize).div_ceil(8)
            })
            .sum()
    }
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        BitWriter {
            out,
            acc: 0,
            nbits: 0,
        }
    }

    fn write(&mut self, value: u32, width: u8) {
        let width = width as u32;
        self.acc = (self.acc << width) | (value as u64 & ((1u64 << width) - 1));
        self.nbits += width;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.out.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    fn align(&mut self) {
        if self.nbits > 0 {
            self.out.push((self.acc << (8 - self.nbits)) as u8);
            self.acc = 0;
            self.nbits = 0;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        self.align();
        self.out
    }
}

/// Reads `width` bits starting at stream bit `start` and sign-extends them.
#[inline]
fn read_signed(bytes: &[u8], start: u64, width: u8) -> i16 {
    if width == 0 {
        return 0;
    }
    let mut v: u32 = 0;
    for i in 0..width as u64 {
        let bit = start + i;
        let byte = bytes[(bit / 8) as usize];
        v = (v << 1) | ((byte >> (7 - bit % 8)) & 1) as u32;
    }
    let shift = 32 - width as u32;
    (((v << shift) as i32) >> shift) as i16
}

pub fn serialize(enc: &EncodedImage) -> Result<Vec<u8>> {
    let header = StreamHeader::for_image(enc);
    let header_len = header.encoded_len();
    if header_len > PAYLOAD_SIZE {
        return Err(Error::HeaderTooLarge(header_len));
    }
    let mut out = Vec::with_capacity(header.layout().total_len);
    header.write(&mut out);
    let mut writer = BitWriter::new(out);
    for (i, (plane, entry)) in enc.planes().iter().zip(header.planes.iter()).enumerate() {
        if entry.bit_width > 16 {
            let value = plane
                .values
                .iter()
                .map(|&v| v as i32)
                .max_by_key(|v| v.abs())
                .unwrap_or(0);
            return Err(Error::CoefficientOverflow { plane: i, value });
        }
        for &v in &plane.values {
            writer.write(v as u16 as u32, entry.bit_width);
        }
        writer.align();
    }
    Ok(writer.finish())
}

/// Decodes a complete, uncorrupted stream.
pub fn deserialize(bytes: &[u8]) -> Result<EncodedImage> {
    let header = StreamHeader::parse(bytes)?;
    let layout = header.layout();
    if bytes.len() != layout.total_len {
        return Err(Error::Malformed(format!(
            "stream is {} bytes, header implies {}",
            bytes.len(),
            layout.total_len
        )));
    }
    let channels = header.channels();
    let planes = header
        .planes
        .iter()
        .enumerate()
        .map(|(pi, e)| CoefficientPlane {
            zigzag_index: (pi / channels) as u8,
            channel: (pi % channels) as u8,
            values: (0..e.count as usize)
                .map(|i| {
                    let (start, w) = layout.bit_span(pi, i);
                    read_signed(bytes, start, w)
                })
                .collect(),
        })
        .collect();
    EncodedImage::from_planes(
        header.width as usize,
        header.height as usize,
        header.color_mode,
        header.quality,
        planes,
    )
}

/// One 1024-byte transmission unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Packet {
    pub seq: u32,
    pub total: u32,
    pub payload: Box<[u8; PAYLOAD_SIZE]>,
}

impl Packet {
    pub fn to_bytes(&self) -> [u8; PACKET_SIZE] {
        let mut out = [0u8; PACKET_SIZE];
        out[0..4].copy_from_slice(&self.seq.to_le_bytes());
        out[4..8].copy_from_slice(&self.total.to_le_bytes());
        out[PACKET_HEADER_SIZE..].copy_from_slice(&self.payload[..]);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != PACKET_SIZE {
            return Err(Error::Malformed(format!("packet of {} bytes", bytes.len())));
        }
        let seq = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
        let total = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if seq >= total {
            return Err(Error::InconsistentPackets(format!(
                "seq {seq} >= total {total}"
            )));
        }
        let mut payload = Box::new([0u8; PAYLOAD_SIZE]);
        payload.copy_from_slice(&bytes[PACKET_HEADER_SIZE..]);
        Ok(Packet {
            seq,
            total,
            payload,
        })
    }
}

/// Splits a stream into packets. Packet 0 carries the whole header.
pub fn packetize(stream: &[u8]) -> Result<Vec<Packet>> {
    if stream.is_empty() {
        return Err(Error::Malformed("empty stream".into()));
    }
    if let Ok(header) = StreamHeader::parse(stream) {
        if header.encoded_len() > PAYLOAD_SIZE {
            return Err(Error::HeaderTooLarge(header.encoded_len()));
        }
    }
    let total = stream.len().div_ceil(PAYLOAD_SIZE) as u32;
    Ok(stream
        .chunks(PAYLOAD_SIZE)
        .enumerate()
        .map(|(i, chunk)| {
            let mut payload = Box::new([0u8; PAYLOAD_SIZE]);
            payload[..chunk.len()].copy_from_slice(chunk);
            Packet {
                seq: i as u32,
                total,
                payload,
            }
        })
        .collect())
}

/// Result of decoding whatever packets arrived.
#[derive(Debug, Clone)]
pub struct Depacketized {
    /// Coefficients; absent ones are zero.
    pub image: EncodedImage,
    pub mask: ReconstructionMask,
    pub layout: StreamLayout,
}

/// Decodes every coefficient whose bits lie entirely in received packets.
///
/// Corrupted payload bits are decoded as-is. Fails only when packet 0 is
/// missing or the packet set is inconsistent.
pub fn depacketize(received: &[Packet]) -> Result<Depacketized> {
    let first = received
        .iter()
        .find(|p| p.seq == 0)
        .ok_or(Error::MissingHeaderPacket)?;
    let total = first.total as usize;
    let mut have = vec![false; total];
    let mut buf = vec![0u8; total * PAYLOAD_SIZE];
    for p in received {
        if p.total as usize != total {
            return Err(Error::InconsistentPackets(format!(
                "packet {} says total {}, packet 0 says {total}",
                p.seq, p.total
            )));
        }
        let seq = p.seq as usize;
        if seq >= total {
            return Err(Error::InconsistentPackets(format!(
                "seq {seq} >= total {total}"
            )));
        }
        if have[seq] {
            return Err(Error::DuplicatePacket(p.seq));
        }
        have[seq] = true;
        buf[seq * PAYLOAD_SIZE..(seq + 1) * PAYLOAD_SIZE].copy_from_slice(&p.payload[..]);
    }

    let header = StreamHeader::parse(&first.payload[..])?;
    let layout = header.layout();
    if layout.packet_count() != total {
        return Err(Error::InconsistentPackets(format!(
            "header implies {} packets, packets say {total}",
            layout.packet_count()
        )));
    }

    let channels = header.channels();
    let blocks = header.planes.first().map_or(0, |e| e.count as usize);
    let mut mask = ReconstructionMask::filled(channels, blocks, true);
    let mut planes = Vec::with_capacity(header.planes.len());
    for (pi, e) in header.planes.iter().enumerate() {
        let mut values = vec![0i16; e.count as usize];
        if e.bit_width > 0 {
            for (i, v) in values.iter_mut().enumerate() {
                let (start, w) = layout.bit_span(pi, i);
                let first_packet = (start / 8) as usize / PAYLOAD_SIZE;
                let last_packet = ((start + w as u64 - 1) / 8) as usize / PAYLOAD_SIZE;
                if (first_packet..=last_packet).all(|s| have[s]) {
                    *v = read_signed(&buf, start, w);
                } else {
                    mask.set_index(pi, i, false);
                }
            }
        }
        planes.push(CoefficientPlane {
            zigzag_index: (pi / channels) as u8,
            channel: (pi % channels) as u8,
            values,
        });
    }
    let image = EncodedImage::from_planes(
        header.width as usize,
        header.height as usize,
        header.color_mode,
        header.quality,
        planes,
    )?;
    Ok(Depacketized {
        image,
        mask,
        layout,
    })
}

/// Writes packets as concatenated 1024-byte records in sequence order.
pub fn write_packets(path: impl AsRef<Path>, packets: &[Packet]) -> Result<()> {
    let path = path.as_ref();
    let mut sorted: Vec<&Packet> = packets.iter().collect();
    sorted.sort_by_key(|p| p.seq);
    let mut bytes = Vec::with_capacity(sorted.len() * PACKET_SIZE);
    for p in sorted {
        bytes.extend_from_slice(&p.to_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_packets(path: impl AsRef<Path>) -> Result<Vec<Packet>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % PACKET_SIZE != 0 {
        return Err(Error::Malformed(format!(
            "{}: length {} is not a multiple of {PACKET_SIZE}",
            path.display(),
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(PACKET_SIZE)
        .map(Packet::from_bytes)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode_image, reconstruct, reconstruct_full};
    use crate::pixels::{psnr, PixelImage};
    use crate::synth;

    fn fixture() -> EncodedImage {
        encode_image(
            &synth::scene(11, 224, 224),
            QualityFactor::DEFAULT,
            ColorMode::YCbCr444,
        )
        .unwrap()
    }

    #[test]
    fn gray_image_is_header_only() {
        let img = PixelImage::filled(64, 48, 3, 128).unwrap();
        let enc = encode_image(&img, QualityFactor::DEFAULT, ColorMode::YCbCr444).unwrap();
        let stream = serialize(&enc).unwrap();
        assert_eq!(stream.len(), 12 + 5 * 192);
        assert_eq!(&stream[..4], b"SEMC");
        let packets = packetize(&stream).unwrap();
        assert_eq!(packets.len(), 1);
        assert_eq!(deserialize(&stream).unwrap(), enc);
    }

    #[test]
    fn header_bytes_are_pinned() {
        let img = PixelImage::filled(17, 9, 1, 128).unwrap();
        let enc = encode_image(&img, QualityFactor::new(77).unwrap(), ColorMode::Luma).unwrap();
        let stream = serialize(&enc).unwrap();
        assert_eq!(
            &stream[..17],
            &[b'S', b'E', b'M', b'C', 1, 17, 0, 9, 0, 1, 77, 0, 0, 6, 0, 0, 0]
        );
        assert_eq!(stream.len(), 12 + 5 * 64);
    }

    #[test]
    fn value_bits_are_msb_first_twos_complement() {
        // One 8x8 luma block: DC only, chosen so the quantized value is -3.
        let img = PixelImage::filled(8, 8, 1, 128).unwrap();
        let mut enc = encode_image(&img, QualityFactor::MAX, ColorMode::Luma).unwrap();
        enc.planes_mut()[0].values[0] = -3;
        enc.planes_mut()[1].values[0] = 5;
        let stream = serialize(&enc).unwrap();
        let header_len = 12 + 5 * 64;
        // plane 0: width 3 ('101'), padded -> 0b1010_0000
        assert_eq!(stream[12], 3);
        assert_eq!(stream[header_len], 0b1010_0000);
        // plane 1: width 4 ('0101') -> 0b0101_0000
        assert_eq!(stream[17], 4);
        assert_eq!(stream[header_len + 1], 0b0101_0000);
        assert_eq!(stream.len(), header_len + 2);
    }

    #[test]
    fn packet_boundaries() {
        let stream = vec![7u8; 1016];
        let p = packetize(&stream).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].total, 1);
        let stream = vec![7u8; 1017];
        let p = packetize(&stream).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].payload[0], 7);
        assert!(p[1].payload[1..].iter().all(|&b| b == 0));
        assert!(packetize(&[]).is_err());
    }

    #[test]
    fn lossless_round_trip_through_packets() {
        let enc = fixture();
        let stream = serialize(&enc).unwrap();
        assert_eq!(stream.len(), StreamLayout::for_image(&enc).total_len);
        assert_eq!(deserialize(&stream).unwrap(), enc);
        let packets = packetize(&stream).unwrap();
        let out = depacketize(&packets).unwrap();
        assert!(out.mask.is_full());
        assert_eq!(out.image, enc);
    }

    #[test]
    fn packet_wire_round_trip() {
        let packets = packetize(&serialize(&fixture()).unwrap()).unwrap();
        for p in &packets {
            assert_eq!(Packet::from_bytes(&p.to_bytes()).unwrap(), *p);
        }
    }

    #[test]
    fn missing_header_packet_is_undecodable() {
        let packets = packetize(&serialize(&fixture()).unwrap()).unwrap();
        assert!(matches!(
            depacketize(&packets[1..]),
            Err(Error::MissingHeaderPacket)
        ));
    }

    #[test]
    fn duplicates_rejected() {
        let mut packets = packetize(&serialize(&fixture()).unwrap()).unwrap();
        packets.push(packets[2].clone());
        assert!(matches!(
            depacketize(&packets),
            Err(Error::DuplicatePacket(2))
        ));
    }

    #[test]
    fn early_loss_hurts_more_than_late_loss() {
        let enc = fixture();
        let original = reconstruct_full(&enc);
        let packets = packetize(&serialize(&enc).unwrap()).unwrap();
        assert!(packets.len() > 3);
        let without = |skip: usize| {
            let kept: Vec<Packet> = packets
                .iter()
                .filter(|p| p.seq as usize != skip)
                .cloned()
                .collect();
            let d = depacketize(&kept).unwrap();
            assert!(!d.mask.is_full());
            psnr(&original, &reconstruct(&d.image, &d.mask).unwrap())
        };
        let early = without(1);
        let late = without(packets.len() - 1);
        assert!(late > early, "late {late} early {early}");
    }

    #[test]
    fn losing_a_packet_leaves_other_values_intact() {
        let enc = fixture();
        let packets = packetize(&serialize(&enc).unwrap()).unwrap();
        let kept: Vec<Packet> = packets.iter().filter(|p| p.seq != 3).cloned().collect();
        let d = depacketize(&kept).unwrap();
        for (pi, (a, b)) in d.image.planes().iter().zip(enc.planes()).enumerate() {
            for (i, (x, y)) in a.values.iter().zip(b.values.iter()).enumerate() {
                if d.mask.is_present_index(pi, i) {
                    assert_eq!(x, y);
                } else {
                    assert_eq!(*x, 0);
                }
            }
        }
    }
}
