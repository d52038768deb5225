//! Encode an image, ship it as packets, and decode it back.
//!
//! ```bash
//! cargo run --release --example encode_decode [input.png] [out_dir]
//! ```

use std::path::PathBuf;

use semcomm::bitstream::{PACKET_SIZE, PAYLOAD_SIZE};
use semcomm::{
    depacketize, encode_image, packetize, psnr, reconstruct, serialize, synth, ColorMode,
    PixelImage, QualityFactor,
};

fn main() -> semcomm::Result<()> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(path) => PixelImage::open(path)?,
        None => synth::scene(7, 224, 224),
    };
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("semcomm-examples"));

    let mode = ColorMode::for_image(&img);
    let enc = encode_image(&img, QualityFactor::DEFAULT, mode)?;
    let stream = serialize(&enc)?;
    let packets = packetize(&stream)?;
    println!(
        "{}x{} {mode}, Q={}: {} stream bytes in {} packets of {PACKET_SIZE} bytes ({PAYLOAD_SIZE} payload)",
        img.width(),
        img.height(),
        enc.quality(),
        stream.len(),
        packets.len(),
    );
    let widths = enc.bit_widths();
    println!("bit widths of the first 8 planes: {:?}", &widths[..8]);

    let received = depacketize(&packets)?;
    assert!(received.mask.is_full());
    let decoded = reconstruct(&received.image, &received.mask)?;
    println!("PSNR after a clean channel: {:.2} dB", psnr(&img, &decoded));

    let path = out.join("encode_decode.png");
    decoded.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
