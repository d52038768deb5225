//! Run experiment grids over a small directory-per-class corpus and read
//! back the manifest a training or evaluation job would consume.
//!
//! ```bash
//! cargo run --release --example sweep_corpus
//! ```

use semcomm::harness::{read_manifest, run_sweep, Experiment, RowStatus, SweepSpec};
use semcomm::synth::write_class_corpus;

fn main() -> semcomm::Result<()> {
    let root = std::env::temp_dir().join("semcomm-examples").join("sweep");
    let corpus = root.join("corpus");
    write_class_corpus(&corpus, 2, 3, (128, 96), 5)?;

    let mut spec = SweepSpec::new(Experiment::TopN, &corpus, root.join("top_n"));
    spec.top_n = vec![1, 3, 5, 10, 64];
    let summary = run_sweep(&spec)?;
    for row in read_manifest(&summary.manifest)?.iter().take(5) {
        println!(
            "{} n={:?} psnr={:.2} -> {}",
            row.label,
            row.n.unwrap_or(0),
            row.psnr.unwrap_or(f64::NAN),
            row.output.as_deref().unwrap_or("-")
        );
    }

    let mut spec = SweepSpec::new(Experiment::LatencyRate, &corpus, root.join("latency"));
    spec.deadlines_ms = vec![1.0, 5.0, 20.0];
    spec.rates_mbps = vec![1.0, 10.0];
    spec.seed = 3;
    let summary = run_sweep(&spec)?;
    let rows = read_manifest(&summary.manifest)?;
    for row in rows.iter().filter(|r| r.label == "class_0").take(6) {
        println!(
            "{:>4} ms {:>4} Mbps: proposed {:?} ({:?} packets), conventional {:?} at Q {:?}",
            row.deadline_ms.unwrap_or(0.0),
            row.rate_mbps.unwrap_or(0.0),
            row.status,
            row.packets_sent,
            row.conventional_status.unwrap_or(RowStatus::Error),
            row.conventional_quality,
        );
    }
    println!("manifests under {}", root.display());
    Ok(())
}
