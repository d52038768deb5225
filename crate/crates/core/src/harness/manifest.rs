//! Manifest CSV: one row per reconstructed (or failed) image.
//!
//! Column order is fixed by [`MANIFEST_COLUMNS`]. Empty cells mean "not
//! applicable"; failure rows never carry an output path or a PSNR.

use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use crate::channel::TransmissionReport;
use crate::error::{Error, Result};

pub const MANIFEST_COLUMNS: [&str; 30] = [
    "source",
    "label",
    "experiment",
    "pipeline",
    "n",
    "remove_k",
    "quality",
    "drop_count",
    "bit_error_prob",
    "rate_mbps",
    "deadline_ms",
    "protection",
    "seed",
    "output",
    "status",
    "psnr",
    "coef_mse",
    "mask_present",
    "mask_total",
    "packets_total",
    "packets_sent",
    "packets_delivered",
    "bits_flipped",
    "bytes_budget",
    "protected_bytes",
    "effective_payload_bytes",
    "delivered_wire_bytes",
    "conventional_status",
    "conventional_quality",
    "note",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    #[default]
    Ok,
    /// Nothing decodable arrived; no inference is possible.
    Failed,
    /// The row could not be produced (unreadable input, invalid parameters).
    Error,
}

/// Formats like C's `%.6g`.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        return format!("{mantissa}e{e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn sig6<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_str(&fmt_sig6(*x)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub source: String,
    pub label: String,
    pub experiment: String,
    pub pipeline: String,
    pub n: Option<u32>,
    pub remove_k: Option<u32>,
    pub quality: Option<u8>,
    pub drop_count: Option<u32>,
    #[serde(serialize_with = "sig6")]
    pub bit_error_prob: Option<f64>,
    #[serde(serialize_with = "sig6")]
    pub rate_mbps: Option<f64>,
    #[serde(serialize_with = "sig6")]
    pub deadline_ms: Option<f64>,
    pub protection: Option<String>,
    pub seed: Option<u64>,
    /// Relative to the manifest's directory.
    pub output: Option<String>,
    pub status: RowStatus,
    #[serde(serialize_with = "sig6")]
    pub psnr: Option<f64>,
    #[serde(serialize_with = "sig6")]
    pub coef_mse: Option<f64>,
    pub mask_present: Option<u64>,
    pub mask_total: Option<u64>,
    pub packets_total: Option<u64>,
    pub packets_sent: Option<u64>,
    pub packets_delivered: Option<u64>,
    pub bits_flipped: Option<u64>,
    pub bytes_budget: Option<u64>,
    pub protected_bytes: Option<u64>,
    pub effective_payload_bytes: Option<u64>,
    pub delivered_wire_bytes: Option<u64>,
    pub conventional_status: Option<RowStatus>,
    pub conventional_quality: Option<u8>,
    pub note: Option<String>,
}

impl ManifestRow {
    pub fn set_report(&mut self, r: &TransmissionReport) {
        self.packets_total = Some(r.packets_total as u64);
        self.packets_sent = Some(r.packets_sent as u64);
        self.packets_delivered = Some(r.packets_delivered as u64);
        self.bits_flipped = Some(r.bits_flipped);
        self.bytes_budget = r.bytes_budget;
        self.protected_bytes = Some(r.protected_bytes);
        self.effective_payload_bytes = Some(r.effective_payload_bytes);
        self.delivered_wire_bytes =
            Some((r.packets_sent * crate::bitstream::PACKET_SIZE) as u64 + r.protected_bytes);
    }

    /// Marks the row as failed and clears the fields a failure must not carry.
    pub fn fail(&mut self, status: RowStatus, note: impl Into<String>) {
        self.status = status;
        self.output = None;
        self.psnr = None;
        self.coef_mse = None;
        self.note = Some(note.into());
    }
}

pub fn write_manifest(path: impl AsRef<Path>, rows: &[ManifestRow]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(MANIFEST_COLUMNS)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<ManifestRow>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(31.234567), "31.2346");
        assert_eq!(fmt_sig6(100.0), "100");
        assert_eq!(fmt_sig6(0.05), "0.05");
        assert_eq!(fmt_sig6(1234567.0), "1234567");
        assert_eq!(fmt_sig6(-2.5), "-2.5");
        assert_eq!(fmt_sig6(1e-7), "1e-7");
        assert_eq!(fmt_sig6(0.000123456789), "0.000123457");
    }

    #[test]
    fn header_matches_column_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_manifest(&path, &[ManifestRow::default()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), MANIFEST_COLUMNS.join(","));

        write_manifest(&path, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), MANIFEST_COLUMNS.join(","));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut row = ManifestRow {
            source: "a/b.png".into(),
            label: "b".into(),
            experiment: "top_n".into(),
            n: Some(5),
            psnr: Some(27.5),
            output: Some("x.png".into()),
            ..Default::default()
        };
        let mut failed = row.clone();
        failed.fail(RowStatus::Failed, "undecodable");
        write_manifest(&path, &[row.clone(), failed.clone()]).unwrap();
        let back = read_manifest(&path).unwrap();
        row.note = None;
        assert_eq!(back, vec![row, failed]);
        assert_eq!(back[1].output, None);
        assert_eq!(back[1].psnr, None);
    }
}
