//! Single-file operations behind the `encode`, `decode` and `corrupt` commands.

use std::path::{Path, PathBuf};

use super::manifest::{ManifestRow, RowStatus};
use crate::bitstream::{
    depacketize, deserialize, packetize, read_packets, serialize, write_packets,
};
use crate::channel::{transmit, ChannelConfig, Loss, TransmissionReport};
use crate::codec::{encode_image, reconstruct, reconstruct_full, ColorMode, EncodedImage};
use crate::error::{Error, Result};
use crate::mask::{make_mask, MaskSpec, ReconstructionMask};
use crate::pixels::{psnr, PixelImage};
use crate::quant::QualityFactor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeSummary {
    pub width: usize,
    pub height: usize,
    pub color_mode: ColorMode,
    pub quality: QualityFactor,
    pub stream_bytes: usize,
    pub packets: usize,
}

/// Encodes a PNG/BMP into a `.semc` stream. `mode` defaults to luma for
/// gray input and YCbCr for color input.
pub fn encode_file(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    quality: QualityFactor,
    mode: Option<ColorMode>,
) -> Result<EncodeSummary> {
    let img = PixelImage::open(input)?;
    let mode = mode.unwrap_or_else(|| ColorMode::for_image(&img));
    let enc = encode_image(&img, quality, mode)?;
    let stream = serialize(&enc)?;
    let output = output.as_ref();
    create_parent(output)?;
    std::fs::write(output, &stream).map_err(|e| Error::io(output, e))?;
    Ok(EncodeSummary {
        width: enc.width(),
        height: enc.height(),
        color_mode: mode,
        quality,
        stream_bytes: stream.len(),
        packets: stream.len().div_ceil(crate::bitstream::PAYLOAD_SIZE),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeSummary {
    pub width: usize,
    pub height: usize,
    pub mask_present: usize,
    pub mask_total: usize,
}

fn intersect(a: &ReconstructionMask, b: &ReconstructionMask) -> ReconstructionMask {
    let mut out = a.clone();
    for plane in 0..64 * a.channels() {
        for block in 0..a.blocks() {
            if !b.is_present_index(plane, block) {
                out.set_index(plane, block, false);
            }
        }
    }
    out
}

/// Reconstructs a `.semc` stream or a `.pkts` capture to an image.
///
/// Files ending in `.pkts` are read as packets and decoded from whatever
/// they contain; anything else is parsed as a complete stream. `spec`
/// further restricts the coefficients used.
pub fn decode_file(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    spec: Option<&MaskSpec>,
) -> Result<DecodeSummary> {
    let input = input.as_ref();
    let (enc, mut mask) = if input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pkts"))
    {
        let d = depacketize(&read_packets(input)?)?;
        (d.image, d.mask)
    } else {
        let enc = read_stream(input)?;
        let mask = ReconstructionMask::full(&enc);
        (enc, mask)
    };
    if let Some(spec) = spec {
        mask = intersect(&mask, &make_mask(&enc, spec)?);
    }
    let img = reconstruct(&enc, &mask)?;
    img.save(output)?;
    Ok(DecodeSummary {
        width: enc.width(),
        height: enc.height(),
        mask_present: mask.cardinality(),
        mask_total: mask.len(),
    })
}

fn read_stream(path: &Path) -> Result<EncodedImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    deserialize(&bytes)
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptOutcome {
    pub report: TransmissionReport,
    /// Written only when the stream header arrived.
    pub png: Option<PathBuf>,
    /// PSNR against the uncorrupted stream's full reconstruction.
    pub row: ManifestRow,
}

/// Sends a `.semc` stream through the channel, writes the received packets
/// to `pkts_out` and, if decodable, the reconstruction to `png_out`.
///
/// An undecodable transmission is a failure row, not an error: the `.pkts`
/// file is written empty and no PNG is produced.
pub fn corrupt_file(
    input: impl AsRef<Path>,
    cfg: &ChannelConfig,
    pkts_out: impl AsRef<Path>,
    png_out: impl AsRef<Path>,
) -> Result<CorruptOutcome> {
    cfg.validate()?;
    let input = input.as_ref();
    let (pkts_out, png_out) = (pkts_out.as_ref(), png_out.as_ref());
    let enc = read_stream(input)?;
    let packets = packetize(&serialize(&enc)?)?;
    let t = transmit(&packets, cfg)?;

    let mut row = ManifestRow {
        source: input.display().to_string(),
        experiment: "corrupt".into(),
        pipeline: "proposed".into(),
        quality: Some(enc.quality().get()),
        bit_error_prob: Some(cfg.bit_error_prob),
        drop_count: match cfg.loss {
            Loss::DropCount(n) => Some(n as u32),
            _ => None,
        },
        rate_mbps: cfg.rate_bps.map(|r| r as f64 / 1e6),
        deadline_ms: cfg.deadline.map(|d| d.as_secs_f64() * 1e3),
        protection: Some(cfg.protection.to_string()),
        seed: Some(cfg.seed),
        ..Default::default()
    };
    row.set_report(&t.report);

    create_parent(pkts_out)?;
    let Some(received) = t.delivered else {
        write_packets(pkts_out, &[])?;
        row.fail(RowStatus::Failed, "stream header did not fit the budget");
        return Ok(CorruptOutcome {
            report: t.report,
            png: None,
            row,
        });
    };
    write_packets(pkts_out, &received)?;
    let d = depacketize(&received)?;
    let img = reconstruct(&d.image, &d.mask)?;
    img.save(png_out)?;
    row.output = Some(png_out.display().to_string());
    row.psnr = Some(psnr(&reconstruct_full(&enc), &img));
    row.mask_present = Some(d.mask.cardinality() as u64);
    row.mask_total = Some(d.mask.len() as u64);
    Ok(CorruptOutcome {
        report: t.report,
        png: Some(png_out.to_path_buf()),
        row,
    })
}
