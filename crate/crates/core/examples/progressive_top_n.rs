//! How image quality grows as more coefficient planes arrive, and what
//! each single plane is worth.
//!
//! ```bash
//! cargo run --release --example progressive_top_n
//! ```

use semcomm::{
    encode_image, make_mask, psnr, reconstruct, synth, ColorMode, MaskSpec, QualityFactor,
};

fn main() -> semcomm::Result<()> {
    let img = synth::scene(11, 224, 224);
    let enc = encode_image(&img, QualityFactor::DEFAULT, ColorMode::YCbCr444)?;
    let out = std::env::temp_dir().join("semcomm-examples");

    println!("{:>4} {:>10} {:>12}", "n", "PSNR dB", "coef MSE");
    for n in [1, 2, 3, 5, 10, 20, 40, 64] {
        let mask = make_mask(&enc, &MaskSpec::KeepTopN(n))?;
        let rec = reconstruct(&enc, &mask)?;
        println!(
            "{n:>4} {:>10.2} {:>12.3}",
            psnr(&img, &rec),
            enc.coefficient_mse(&mask)?
        );
        rec.save(out.join(format!("top_{n:02}.png")))?;
    }

    // losing a single plane hurts most at k = 0
    let mut worst = (0, f64::INFINITY);
    for k in 0..64 {
        let rec = reconstruct(&enc, &make_mask(&enc, &MaskSpec::RemovePlane(k))?)?;
        let p = psnr(&img, &rec);
        if p < worst.1 {
            worst = (k, p);
        }
    }
    println!(
        "most damaging single plane: k = {} ({:.2} dB)",
        worst.0, worst.1
    );
    println!("images in {}", out.display());
    Ok(())
}
