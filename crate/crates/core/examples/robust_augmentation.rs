//! One epoch of training-set augmentation: every image loses random
//! coefficients before reconstruction. Rerun with a new seed per epoch.
//!
//! ```bash
//! cargo run --release --example robust_augmentation
//! ```

use semcomm::harness::{read_manifest, run_augment, AugmentSpec, DropSchedule};
use semcomm::synth::write_class_corpus;

fn main() -> semcomm::Result<()> {
    let root = std::env::temp_dir()
        .join("semcomm-examples")
        .join("augment");
    let corpus = root.join("corpus");
    write_class_corpus(&corpus, 3, 4, (96, 96), 1)?;

    let schedule: DropSchedule = "linear:0.05:0.6".parse()?;
    for epoch in 0..2u64 {
        let mut spec = AugmentSpec::new(
            &corpus,
            root.join(format!("epoch_{epoch}")),
            schedule.clone(),
        );
        spec.seed = 1000 + epoch;
        let summary = run_augment(&spec)?;
        let rows = read_manifest(&summary.manifest)?;
        let kept: Vec<String> = rows
            .iter()
            .take(4)
            .map(|r| {
                format!(
                    "{}/{}",
                    r.mask_present.unwrap_or(0),
                    r.mask_total.unwrap_or(0)
                )
            })
            .collect();
        println!(
            "epoch {epoch}: {} images, first masks {}",
            summary.ok,
            kept.join(" ")
        );
    }

    let mut spec = AugmentSpec::new(&corpus, root.join("top_n"), DropSchedule::TopNUniform);
    spec.seed = 7;
    let rows = read_manifest(run_augment(&spec)?.manifest)?;
    let ns: Vec<u32> = rows.iter().filter_map(|r| r.n).collect();
    println!("top_n_uniform draws: {ns:?}");
    Ok(())
}
