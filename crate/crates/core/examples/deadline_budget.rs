//! Deadline and rate decide how many bytes can be sent. The progressive
//! stream uses whatever fits; the conventional pipeline must pick a quality
//! whose whole stream fits, or give up.
//!
//! ```bash
//! cargo run --release --example deadline_budget
//! ```

use std::time::Duration;

use semcomm::channel::{conventional_baseline, transmit, QualityLadder};
use semcomm::{
    depacketize, encode_image, packetize, psnr, reconstruct, reconstruct_full, serialize, synth,
    ChannelConfig, ColorMode, QualityFactor,
};

fn main() -> semcomm::Result<()> {
    let img = synth::scene(9, 224, 224);
    let mode = ColorMode::YCbCr444;
    let enc = encode_image(&img, QualityFactor::DEFAULT, mode)?;
    let packets = packetize(&serialize(&enc)?)?;
    let ladder = QualityLadder::new(&img, mode)?;

    println!(
        "{:>6} {:>6} {:>8} | {:>7} {:>9} | {:>6} {:>9}",
        "ms", "Mbps", "budget", "packets", "prop dB", "conv Q", "conv dB"
    );
    for ms in [1u64, 2, 5, 10, 20] {
        for mbps in [1u64, 5, 10, 50] {
            let cfg = ChannelConfig {
                deadline: Some(Duration::from_millis(ms)),
                rate_bps: Some(mbps * 1_000_000),
                ..Default::default()
            };
            let t = transmit(&packets, &cfg)?;
            let proposed = match &t.delivered {
                Some(rx) => {
                    let d = depacketize(rx)?;
                    format!("{:.2}", psnr(&img, &reconstruct(&d.image, &d.mask)?))
                }
                None => "fail".into(),
            };
            let conv = conventional_baseline(&ladder, &cfg)?;
            let (q, conv_db) = match conv.quality() {
                Some(q) => {
                    let rec = reconstruct_full(&ladder.encode(q));
                    (q.to_string(), format!("{:.2}", psnr(&img, &rec)))
                }
                None => ("-".into(), "fail".into()),
            };
            println!(
                "{ms:>6} {mbps:>6} {:>8} | {:>7} {proposed:>9} | {q:>6} {conv_db:>9}",
                cfg.bytes_budget().unwrap_or(0),
                t.report.packets_sent,
            );
        }
    }
    Ok(())
}
