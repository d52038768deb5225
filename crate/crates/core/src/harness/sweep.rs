use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;

use super::corpus::{load_corpus, CorpusEntry};
use super::manifest::{fmt_sig6, write_manifest, ManifestRow, RowStatus};
use super::task_seed;
use crate::bitstream::{depacketize, packetize, serialize, Packet, PAYLOAD_SIZE};
use crate::channel::{
    conventional_baseline, transmit, BaselineOutcome, ChannelConfig, Loss, Protection,
    QualityLadder,
};
use crate::codec::{reconstruct, reconstruct_full, transform, ColorMode, EncodedImage};
use crate::error::{Error, Result};
use crate::mask::{make_mask, MaskSpec};
use crate::pixels::{psnr, PixelImage};
use crate::quant::QualityFactor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    TopN,
    RemoveK,
    Quality,
    PacketLoss,
    BitError,
    /// Proposed pipeline over a deadline x rate grid, with the conventional
    /// outcome recorded alongside each row.
    LatencyRate,
    /// Same grid, one row per pipeline.
    ConventionalVsProposed,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::TopN,
        Experiment::RemoveK,
        Experiment::Quality,
        Experiment::PacketLoss,
        Experiment::BitError,
        Experiment::LatencyRate,
        Experiment::ConventionalVsProposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::TopN => "top_n",
            Experiment::RemoveK => "remove_k",
            Experiment::Quality => "quality",
            Experiment::PacketLoss => "packet_loss",
            Experiment::BitError => "bit_error",
            Experiment::LatencyRate => "latency_rate",
            Experiment::ConventionalVsProposed => "conventional_vs_proposed",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// One sweep: an experiment's parameter grid crossed with every corpus image.
///
/// Only the ranges relevant to `experiment` are read.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Encoding quality for every experiment except `quality`.
    pub quality: QualityFactor,
    /// `None` picks luma for gray images and YCbCr for color ones.
    pub color_mode: Option<ColorMode>,
    pub top_n: Vec<u32>,
    pub remove_k: Vec<u32>,
    pub qualities: Vec<u32>,
    pub drop_counts: Vec<u32>,
    pub bit_error_probs: Vec<f64>,
    pub protections: Vec<Protection>,
    pub deadlines_ms: Vec<f64>,
    pub rates_mbps: Vec<f64>,
    pub compute_time: Duration,
    pub fec_overhead_factor: f64,
}

impl SweepSpec {
    pub fn new(
        experiment: Experiment,
        corpus: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
    ) -> Self {
        SweepSpec {
            experiment,
            corpus: corpus.into(),
            out: out.into(),
            seed: 0,
            workers: 0,
            quality: QualityFactor::DEFAULT,
            color_mode: None,
            top_n: (1..=64).collect(),
            remove_k: (0..64).collect(),
            qualities: (1..=10).map(|q| q * 10).collect(),
            drop_counts: (0..=5).collect(),
            bit_error_probs: vec![0.0, 1e-4, 1e-3, 1e-2, 0.05, 0.1],
            protections: Protection::ALL.to_vec(),
            deadlines_ms: vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            rates_mbps: vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0],
            compute_time: Duration::ZERO,
            fec_overhead_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(what));
        match self.experiment {
            Experiment::TopN => {
                if let Some(n) = self.top_n.iter().find(|n| !(1..=64).contains(*n)) {
                    return bad(format!("top_n {n} outside [1, 64]"));
                }
            }
            Experiment::RemoveK => {
                if let Some(k) = self.remove_k.iter().find(|k| **k > 63) {
                    return bad(format!("remove_k {k} outside [0, 63]"));
                }
            }
            Experiment::Quality => {
                for &q in &self.qualities {
                    QualityFactor::new(q)?;
                }
            }
            Experiment::PacketLoss => {
                if let Some(d) = self.drop_counts.iter().find(|d| **d > 5) {
                    return bad(format!("drop count {d} outside [0, 5]"));
                }
            }
            Experiment::BitError => {
                if let Some(&p) = self
                    .bit_error_probs
                    .iter()
                    .find(|p| !(0.0..=1.0).contains(*p))
                {
                    return Err(Error::InvalidProbability(p));
                }
                if self.protections.is_empty() {
                    return bad("no protection modes given".into());
                }
            }
            Experiment::LatencyRate | Experiment::ConventionalVsProposed => {
                let positive = |v: &f64| v.is_finite() && *v > 0.0;
                if let Some(d) = self.deadlines_ms.iter().find(|d| !positive(d)) {
                    return bad(format!("deadline {d} ms must be positive"));
                }
                if let Some(r) = self.rates_mbps.iter().find(|r| !positive(r)) {
                    return bad(format!("rate {r} Mbps must be positive"));
                }
            }
        }
        let cells = self.cells();
        if cells.is_empty() {
            return bad(format!(
                "{} sweep has an empty parameter grid",
                self.experiment
            ));
        }
        if !(self.fec_overhead_factor.is_finite() && self.fec_overhead_factor >= 0.0) {
            return bad(format!(
                "fec_overhead_factor {} must be >= 0",
                self.fec_overhead_factor
            ));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        match self.experiment {
            Experiment::TopN => self.top_n.iter().map(|&n| Cell::TopN(n)).collect(),
            Experiment::RemoveK => self.remove_k.iter().map(|&k| Cell::RemoveK(k)).collect(),
            Experiment::Quality => self.qualities.iter().map(|&q| Cell::Quality(q)).collect(),
            Experiment::PacketLoss => self
                .drop_counts
                .iter()
                .map(|&d| Cell::PacketLoss(d))
                .collect(),
            Experiment::BitError => self
                .bit_error_probs
                .iter()
                .flat_map(|&p| self.protections.iter().map(move |&m| Cell::BitError(p, m)))
                .collect(),
            Experiment::LatencyRate | Experiment::ConventionalVsProposed => self
                .deadlines_ms
                .iter()
                .flat_map(|&d| self.rates_mbps.iter().map(move |&r| Cell::Latency(d, r)))
                .collect(),
        }
    }

    fn channel(&self, cell: Cell, seed: u64) -> ChannelConfig {
        let mut cfg = ChannelConfig {
            seed,
            fec_overhead_factor: self.fec_overhead_factor,
            ..Default::default()
        };
        match cell {
            Cell::PacketLoss(d) => cfg.loss = Loss::DropCount(d as usize),
            Cell::BitError(p, m) => {
                cfg.bit_error_prob = p;
                cfg.protection = m;
            }
            Cell::Latency(deadline_ms, rate_mbps) => {
                cfg.deadline = Some(Duration::from_nanos((deadline_ms * 1e6).round() as u64));
                cfg.rate_bps = Some((rate_mbps * 1e6).round() as u64);
                cfg.compute_time = self.compute_time;
            }
            _ => {}
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    TopN(u32),
    RemoveK(u32),
    Quality(u32),
    PacketLoss(u32),
    BitError(f64, Protection),
    /// Deadline in ms, rate in Mbps.
    Latency(f64, f64),
}

impl Cell {
    fn tag(self) -> String {
        match self {
            Cell::TopN(n) => format!("n{n:02}"),
            Cell::RemoveK(k) => format!("k{k:02}"),
            Cell::Quality(q) => format!("q{q:03}"),
            Cell::PacketLoss(d) => format!("drop{d}"),
            Cell::BitError(p, m) => format!("p{}_{m}", fmt_sig6(p)),
            Cell::Latency(d, r) => format!("d{}ms_r{}mbps", fmt_sig6(d), fmt_sig6(r)),
        }
    }

    fn fill(self, row: &mut ManifestRow) {
        match self {
            Cell::TopN(n) => row.n = Some(n),
            Cell::RemoveK(k) => row.remove_k = Some(k),
            Cell::Quality(q) => row.quality = Some(q as u8),
            Cell::PacketLoss(d) => row.drop_count = Some(d),
            Cell::BitError(p, m) => {
                row.bit_error_prob = Some(p);
                row.protection = Some(m.to_string());
            }
            Cell::Latency(d, r) => {
                row.deadline_ms = Some(d);
                row.rate_mbps = Some(r);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub manifest: PathBuf,
    pub rows: usize,
    pub ok: usize,
    pub failed: usize,
    pub errors: usize,
}

/// Runs every (image, cell) pair and writes `out/manifest.csv`.
///
/// Images are processed in parallel; each row's seed is the sweep seed XOR
/// the row's task index, so results do not depend on scheduling. A failing
/// row is recorded and the sweep moves on.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepSummary> {
    spec.validate()?;
    let corpus = load_corpus(&spec.corpus)?;
    if corpus.is_empty() {
        return Err(Error::Config(format!(
            "no images under {}",
            spec.corpus.display()
        )));
    }
    let cells = spec.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_image: Vec<Vec<ManifestRow>> = pool.install(|| {
        corpus
            .par_iter()
            .enumerate()
            .map(|(i, entry)| run_image(spec, entry, &cells, i * cells.len()))
            .collect()
    });
    let rows: Vec<ManifestRow> = per_image.into_iter().flatten().collect();
    let manifest = spec.out.join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    let count = |s: RowStatus| rows.iter().filter(|r| r.status == s).count();
    let summary = SweepSummary {
        manifest,
        rows: rows.len(),
        ok: count(RowStatus::Ok),
        failed: count(RowStatus::Failed),
        errors: count(RowStatus::Error),
    };
    log::info!(
        "{}: {} rows ({} ok, {} failed, {} errors)",
        spec.experiment,
        summary.rows,
        summary.ok,
        summary.failed,
        summary.errors
    );
    Ok(summary)
}

/// Everything about one source image that its rows share.
struct Prepared {
    reference: PixelImage,
    spectrum: crate::codec::Spectrum,
    enc: EncodedImage,
    packets: Vec<Packet>,
    ladder: Option<QualityLadder>,
}

fn prepare(spec: &SweepSpec, entry: &CorpusEntry) -> Result<Prepared> {
    let img = PixelImage::open(&entry.path)?;
    let mode = spec
        .color_mode
        .unwrap_or_else(|| ColorMode::for_image(&img));
    let reference = match mode {
        ColorMode::Luma => img.to_luma(),
        ColorMode::YCbCr444 => img,
    };
    let spectrum = transform(&reference, mode)?;
    let enc = spectrum.quantize(spec.quality);
    let packets = packetize(&serialize(&enc)?)?;
    let ladder = match spec.experiment {
        Experiment::LatencyRate | Experiment::ConventionalVsProposed => {
            Some(QualityLadder::new(&reference, mode)?)
        }
        _ => None,
    };
    Ok(Prepared {
        reference,
        spectrum,
        enc,
        packets,
        ladder,
    })
}

fn run_image(
    spec: &SweepSpec,
    entry: &CorpusEntry,
    cells: &[Cell],
    first_task: usize,
) -> Vec<ManifestRow> {
    let base = ManifestRow {
        source: entry.path.display().to_string(),
        label: entry.label.clone(),
        experiment: spec.experiment.name().to_string(),
        pipeline: "proposed".into(),
        quality: Some(spec.quality.get()),
        ..Default::default()
    };
    let prepared = match prepare(spec, entry) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("{}: {e}", entry.path.display());
            let mut row = base;
            row.fail(RowStatus::Error, e.to_string());
            return vec![row];
        }
    };
    let mut rows = Vec::with_capacity(cells.len());
    for (j, &cell) in cells.iter().enumerate() {
        let seed = task_seed(spec.seed, first_task + j);
        let mut row = base.clone();
        row.seed = Some(seed);
        cell.fill(&mut row);
        let name = |suffix: &str| {
            Path::new(spec.experiment.name())
                .join(&entry.label)
                .join(format!("{}__{}{suffix}.png", entry.stem, cell.tag()))
        };
        rows.push(settle(
            row.clone(),
            run_cell(spec, &prepared, cell, seed, &name(""), row.clone()),
            entry,
        ));
        if spec.experiment == Experiment::ConventionalVsProposed {
            row.pipeline = "conventional".into();
            let conv = run_conventional(spec, &prepared, cell, seed, &name("_conv"), row.clone());
            rows.push(settle(row, conv, entry));
        }
    }
    rows
}

fn settle(mut row: ManifestRow, result: Result<ManifestRow>, entry: &CorpusEntry) -> ManifestRow {
    match result {
        Ok(r) => r,
        Err(e) => {
            log::warn!(
                "{} [{} {}]: {e}",
                entry.path.display(),
                row.experiment,
                row.pipeline
            );
            row.fail(RowStatus::Error, e.to_string());
            row
        }
    }
}

fn save(
    spec: &SweepSpec,
    row: &mut ManifestRow,
    rel: &Path,
    img: &PixelImage,
    reference: &PixelImage,
) -> Result<()> {
    img.save(spec.out.join(rel))?;
    row.output = Some(rel.to_string_lossy().replace('\\', "/"));
    row.psnr = Some(psnr(reference, img));
    Ok(())
}

/// Decodes received packets, saves the image and fills the mask columns.
fn decode_and_save(
    spec: &SweepSpec,
    row: &mut ManifestRow,
    rel: &Path,
    received: &[Packet],
    reference: &PixelImage,
) -> Result<()> {
    let d = depacketize(received)?;
    row.mask_present = Some(d.mask.cardinality() as u64);
    row.mask_total = Some(d.mask.len() as u64);
    let img = reconstruct(&d.image, &d.mask)?;
    save(spec, row, rel, &img, reference)
}

fn run_cell(
    spec: &SweepSpec,
    p: &Prepared,
    cell: Cell,
    seed: u64,
    rel: &Path,
    mut row: ManifestRow,
) -> Result<ManifestRow> {
    let mask = match cell {
        Cell::TopN(n) => make_mask(&p.enc, &MaskSpec::KeepTopN(n as usize))?,
        Cell::RemoveK(k) => make_mask(&p.enc, &MaskSpec::RemovePlane(k as usize))?,
        Cell::Quality(q) => {
            let enc = p.spectrum.quantize(QualityFactor::new(q)?);
            let stream = serialize(&enc)?;
            row.packets_total = Some(stream.len().div_ceil(PAYLOAD_SIZE) as u64);
            row.effective_payload_bytes = Some(stream.len() as u64);
            let total = (enc.block_count() * 64 * enc.channels()) as u64;
            row.mask_present = Some(total);
            row.mask_total = Some(total);
            row.coef_mse = Some(0.0);
            save(spec, &mut row, rel, &reconstruct_full(&enc), &p.reference)?;
            return Ok(row);
        }
        Cell::PacketLoss(_) | Cell::BitError(..) | Cell::Latency(..) => {
            let cfg = spec.channel(cell, seed);
            let t = transmit(&p.packets, &cfg)?;
            row.set_report(&t.report);
            if let Some(ladder) = p
                .ladder
                .as_ref()
                .filter(|_| spec.experiment == Experiment::LatencyRate)
            {
                let conv = conventional_baseline(ladder, &cfg)?;
                row.conventional_status = Some(match conv {
                    BaselineOutcome::Delivered { .. } => RowStatus::Ok,
                    BaselineOutcome::Failed { .. } => RowStatus::Failed,
                });
                row.conventional_quality = conv.quality().map(|q| q.get());
            }
            match t.delivered {
                Some(received) => decode_and_save(spec, &mut row, rel, &received, &p.reference)?,
                None => row.fail(RowStatus::Failed, "stream header did not fit the budget"),
            }
            return Ok(row);
        }
    };
    row.mask_present = Some(mask.cardinality() as u64);
    row.mask_total = Some(mask.len() as u64);
    row.coef_mse = Some(p.enc.coefficient_mse(&mask)?);
    let img = reconstruct(&p.enc, &mask)?;
    save(spec, &mut row, rel, &img, &p.reference)?;
    Ok(row)
}

fn run_conventional(
    spec: &SweepSpec,
    p: &Prepared,
    cell: Cell,
    seed: u64,
    rel: &Path,
    mut row: ManifestRow,
) -> Result<ManifestRow> {
    let ladder = p.ladder.as_ref().expect("ladder built for latency sweeps");
    let cfg = spec.channel(cell, seed);
    let outcome = conventional_baseline(ladder, &cfg)?;
    row.set_report(outcome.report());
    row.quality = outcome.quality().map(|q| q.get());
    match outcome {
        BaselineOutcome::Delivered { packets, .. } => {
            decode_and_save(spec, &mut row, rel, &packets, &p.reference)?
        }
        BaselineOutcome::Failed { .. } => {
            row.fail(RowStatus::Failed, "no quality factor fits the budget")
        }
    }
    Ok(row)
}
