use proptest::prelude::*;
use semcomm::bitstream::{Packet, PACKET_SIZE};
use semcomm::channel::{transmit, QualityLadder};
use semcomm::dct::{forward_dct8, inverse_dct8};
use semcomm::pixels::mse;
use semcomm::{
    augment_drop, depacketize, deserialize, encode_image, make_mask, packetize, reconstruct,
    reconstruct_full, serialize, ChannelConfig, ColorMode, DropGranularity, Loss, MaskSpec,
    PixelImage, Protection, QualityFactor,
};

fn image() -> impl Strategy<Value = PixelImage> {
    (1usize..40, 1usize..40, prop::bool::ANY).prop_flat_map(|(w, h, color)| {
        let channels = if color { 3 } else { 1 };
        prop::collection::vec(any::<u8>(), w * h * channels)
            .prop_map(move |s| PixelImage::new(w, h, channels as u8, s).unwrap())
    })
}

/// Smooth-ish content so that higher planes carry little energy, like photos.
fn smooth_image() -> impl Strategy<Value = PixelImage> {
    (8usize..48, 8usize..48, any::<u64>())
        .prop_map(|(w, h, seed)| semcomm::synth::scene(seed, w, h))
}

fn quality() -> impl Strategy<Value = QualityFactor> {
    (1u32..=100).prop_map(|q| QualityFactor::new(q).unwrap())
}

fn encoded(img: &PixelImage, q: QualityFactor) -> semcomm::EncodedImage {
    encode_image(img, q, ColorMode::for_image(img)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dct_preserves_energy(block in prop::array::uniform32(-255.0f64..255.0)) {
        let mut b = [0.0; 64];
        b[..32].copy_from_slice(&block);
        b[32..].copy_from_slice(&block.map(|v| -v * 0.5));
        let c = forward_dct8(&b);
        let e_in: f64 = b.iter().map(|v| v * v).sum();
        let e_out: f64 = c.iter().map(|v| v * v).sum();
        prop_assert!((e_in - e_out).abs() <= 1e-9 * e_in.max(1.0));
        let back = inverse_dct8(&c);
        for (x, y) in b.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn stream_round_trips(img in image(), q in quality()) {
        let enc = encoded(&img, q);
        let stream = serialize(&enc).unwrap();
        prop_assert_eq!(&deserialize(&stream).unwrap(), &enc);
        let rx = depacketize(&packetize(&stream).unwrap()).unwrap();
        prop_assert!(rx.mask.is_full());
        prop_assert_eq!(rx.image, enc);
    }

    #[test]
    fn lossless_quality_stays_within_four(img in image()) {
        let enc = encoded(&img, QualityFactor::MAX);
        let rec = reconstruct_full(&enc);
        prop_assert!(semcomm::pixels::max_abs_diff(&img, &rec) <= 4);
    }

    /// Every packet prefix decodes to a growing mask, and every coefficient
    /// it reports present is exact.
    #[test]
    fn packet_prefixes_refine(img in smooth_image(), q in 50u32..=100) {
        let enc = encoded(&img, QualityFactor::new(q).unwrap());
        let packets = packetize(&serialize(&enc).unwrap()).unwrap();
        let mut prev: Option<semcomm::ReconstructionMask> = None;
        for m in 1..=packets.len() {
            let rx = depacketize(&packets[..m]).unwrap();
            if let Some(p) = &prev {
                prop_assert!(rx.mask.is_superset_of(p));
            }
            for (pi, (got, want)) in rx.image.planes().iter().zip(enc.planes()).enumerate() {
                for b in 0..want.values.len() {
                    if rx.mask.is_present_index(pi, b) {
                        prop_assert_eq!(got.values[b], want.values[b]);
                    }
                }
            }
            prev = Some(rx.mask);
        }
        prop_assert!(prev.unwrap().is_full());
    }

    /// Pixel error is checked on luma images: the YCbCr to RGB matrix is not
    /// orthonormal, so RGB error need not shrink when YCbCr error does.
    /// Sizes are whole blocks because cropping away padding can move error
    /// in either direction. Clamping and rounding may still raise it
    /// slightly, so RMSE gets a tolerance of 1e-3 of the dynamic range.
    #[test]
    fn top_n_refines_monotonically(bw in 1usize..6, bh in 1usize..6, seed in any::<u64>()) {
        let img = semcomm::synth::scene(seed, bw * 8, bh * 8).to_luma();
        let enc = encoded(&img, QualityFactor::DEFAULT);
        let full = reconstruct_full(&enc);
        let mut prev_coef = f64::INFINITY;
        let mut prev_rmse = f64::INFINITY;
        for n in 1..=64 {
            let mask = make_mask(&enc, &MaskSpec::KeepTopN(n)).unwrap();
            let coef = enc.coefficient_mse(&mask).unwrap();
            prop_assert!(coef <= prev_coef);
            let rmse = mse(&full, &reconstruct(&enc, &mask).unwrap()).sqrt();
            prop_assert!(rmse <= prev_rmse + 1e-3 * 255.0, "n={} rmse {} after {}", n, rmse, prev_rmse);
            prev_coef = coef;
            prev_rmse = rmse;
        }
        prop_assert_eq!(prev_coef, 0.0);
        let top1 = make_mask(&enc, &MaskSpec::KeepTopN(1)).unwrap();
        prop_assert_eq!(top1.cardinality(), enc.channels() * enc.block_count());
    }

    #[test]
    fn channel_is_deterministic(
        img in smooth_image(),
        p in 0.0f64..0.2,
        drops in 0usize..3,
        seed in any::<u64>(),
        protection in prop::sample::select(Protection::ALL.to_vec()),
    ) {
        let enc = encoded(&img, QualityFactor::DEFAULT);
        let packets = packetize(&serialize(&enc).unwrap()).unwrap();
        let loss = if drops + 1 < packets.len() { Loss::DropCount(drops) } else { Loss::None };
        let cfg = ChannelConfig { bit_error_prob: p, loss, protection, seed, ..Default::default() };
        let a = transmit(&packets, &cfg).unwrap();
        let b = transmit(&packets, &cfg).unwrap();
        prop_assert_eq!(a.delivered, b.delivered);
        prop_assert_eq!(a.report, b.report);
    }

    #[test]
    fn budget_is_respected(img in smooth_image(), budget in 0u64..40_000, factor in 0.0f64..2.0) {
        let enc = encoded(&img, QualityFactor::DEFAULT);
        let packets = packetize(&serialize(&enc).unwrap()).unwrap();
        let cfg = ChannelConfig {
            rate_bps: Some(8_000_000),
            deadline: Some(std::time::Duration::from_micros(budget)),
            protection: Protection::DcFull,
            fec_overhead_factor: factor,
            ..Default::default()
        };
        let t = transmit(&packets, &cfg).unwrap();
        let used = (t.report.packets_sent * PACKET_SIZE) as u64 + t.report.protected_bytes;
        prop_assert!(used <= budget);
        prop_assert_eq!(t.delivered.is_some(), budget >= PACKET_SIZE as u64);
    }

    #[test]
    fn conventional_quality_is_monotone_in_budget(img in smooth_image(), a in 0u64..30_000, b in 0u64..30_000) {
        let ladder = QualityLadder::new(&img, ColorMode::for_image(&img)).unwrap();
        let pick = |bytes: u64| {
            ladder.select(&ChannelConfig {
                rate_bps: Some(8_000_000),
                deadline: Some(std::time::Duration::from_micros(bytes)),
                ..Default::default()
            })
        };
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(pick(lo) <= pick(hi));
    }

    #[test]
    fn augmentation_is_seeded(img in smooth_image(), p in 0.0f64..=1.0, seed in any::<u64>()) {
        let enc = encoded(&img, QualityFactor::DEFAULT);
        for g in [DropGranularity::PerBlock, DropGranularity::PerPlane] {
            let a = augment_drop(&enc, &[p; 64], seed, g).unwrap();
            prop_assert_eq!(&a, &augment_drop(&enc, &[p; 64], seed, g).unwrap());
        }
        prop_assert!(augment_drop(&enc, &[0.0; 64], seed, DropGranularity::PerBlock).unwrap().is_full());
        prop_assert_eq!(augment_drop(&enc, &[1.0; 64], seed, DropGranularity::PerBlock).unwrap().cardinality(), 0);
    }

    /// Arbitrary damage to a stream or packet set yields an error or an
    /// image, never a panic.
    #[test]
    fn corrupted_input_never_panics(
        img in smooth_image(),
        flips in prop::collection::vec((any::<prop::sample::Index>(), 0u8..8), 1..16),
        keep in prop::collection::vec(any::<bool>(), 64),
    ) {
        let enc = encoded(&img, QualityFactor::DEFAULT);
        let mut stream = serialize(&enc).unwrap();
        for (idx, bit) in &flips {
            let i = idx.index(stream.len());
            stream[i] ^= 1 << bit;
        }
        if let Ok(dec) = deserialize(&stream) {
            let _ = reconstruct_full(&dec);
        }
        let packets = packetize(&serialize(&enc).unwrap()).unwrap();
        let mut bytes: Vec<u8> = packets
            .iter()
            .zip(keep.iter().cycle())
            .filter(|(_, k)| **k)
            .flat_map(|(p, _)| p.to_bytes())
            .collect();
        for (idx, bit) in &flips {
            if !bytes.is_empty() {
                let i = idx.index(bytes.len());
                bytes[i] ^= 1 << bit;
            }
        }
        let parsed: Result<Vec<Packet>, _> = bytes.chunks(PACKET_SIZE).map(Packet::from_bytes).collect();
        if let Ok(set) = parsed {
            if let Ok(rx) = depacketize(&set) {
                let _ = reconstruct(&rx.image, &rx.mask);
            }
        }
    }
}
