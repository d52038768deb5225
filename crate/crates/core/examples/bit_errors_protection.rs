//! Random bit errors with and without protecting the DC planes.
//!
//! ```bash
//! cargo run --release --example bit_errors_protection
//! ```

use semcomm::channel::{protected_bit_set, transmit};
use semcomm::{
    depacketize, encode_image, packetize, psnr, reconstruct, serialize, synth, ChannelConfig,
    ColorMode, Protection, QualityFactor,
};

fn main() -> semcomm::Result<()> {
    let img = synth::scene(5, 224, 224);
    let enc = encode_image(&img, QualityFactor::DEFAULT, ColorMode::YCbCr444)?;
    let stream = serialize(&enc)?;
    let packets = packetize(&stream)?;
    let stream_bits = (stream.len() * 8) as f64;

    for mode in Protection::ALL {
        let bits = protected_bit_set(&enc, mode).len();
        println!(
            "{mode:>8}: {bits} protected bits, {:.2}% of the stream",
            100.0 * bits as f64 / stream_bits
        );
    }

    println!(
        "\n{:>8} {:>8} {:>10} {:>10}",
        "p", "mode", "flipped", "PSNR dB"
    );
    for p in [1e-4, 1e-3, 1e-2, 0.05] {
        for mode in Protection::ALL {
            let cfg = ChannelConfig {
                bit_error_prob: p,
                protection: mode,
                seed: 42,
                ..Default::default()
            };
            let t = transmit(&packets, &cfg)?;
            let rx = depacketize(t.delivered.as_deref().expect("no budget set"))?;
            let rec = reconstruct(&rx.image, &rx.mask)?;
            println!(
                "{p:>8} {mode:>8} {:>10} {:>10.2}",
                t.report.bits_flipped,
                psnr(&img, &rec)
            );
        }
    }
    Ok(())
}
