//! Drop whole packets and decode what is left. Early packets carry the
//! low-frequency planes, so losing them costs far more than losing late ones.
//!
//! ```bash
//! cargo run --release --example packet_loss
//! ```

use semcomm::channel::transmit;
use semcomm::{
    depacketize, encode_image, packetize, psnr, reconstruct, serialize, synth, ChannelConfig,
    ColorMode, Loss, QualityFactor,
};

fn main() -> semcomm::Result<()> {
    let img = synth::scene(3, 224, 224);
    let enc = encode_image(&img, QualityFactor::DEFAULT, ColorMode::YCbCr444)?;
    let packets = packetize(&serialize(&enc)?)?;
    println!("{} packets", packets.len());

    println!(
        "{:>6} {:>6} {:>10} {:>10}",
        "drops", "seed", "present %", "PSNR dB"
    );
    for drops in 0..=5 {
        for seed in 0..3 {
            let cfg = ChannelConfig {
                loss: Loss::DropCount(drops),
                seed,
                ..Default::default()
            };
            let t = transmit(&packets, &cfg)?;
            let rx = depacketize(t.delivered.as_deref().expect("packet 0 is never dropped"))?;
            let rec = reconstruct(&rx.image, &rx.mask)?;
            println!(
                "{drops:>6} {seed:>6} {:>10.2} {:>10.2}",
                100.0 * rx.mask.cardinality() as f64 / rx.mask.len() as f64,
                psnr(&img, &rec)
            );
        }
    }

    // the worst and best single losses
    for seq in [1, packets.len() as u32 - 1] {
        let kept: Vec<_> = packets.iter().filter(|p| p.seq != seq).cloned().collect();
        let rx = depacketize(&kept)?;
        println!(
            "without packet {seq:>2}: {:.2} dB",
            psnr(&img, &reconstruct(&rx.image, &rx.mask)?)
        );
    }
    Ok(())
}
