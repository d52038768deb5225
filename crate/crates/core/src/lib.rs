//! Progressive DCT image transmission for deadline-bound edge inference.
//!
//! Images are encoded as 64 zigzag-ordered coefficient planes per channel and
//! sent most-important-first in fixed 1024-byte packets. The receiver
//! reconstructs from whatever arrived when the time budget runs out. A
//! seeded channel simulator injects bit errors, packet losses and budget
//! truncation, and the [`harness`] module runs corpus-level sweeps that
//! write reconstructed images plus CSV manifests for downstream model
//! evaluation.
//!
//! The runnable programs under `examples/` walk through each capability:
//!
//! ```bash
//! cargo run --release --example encode_decode
//! cargo run --release --example progressive_top_n
//! ```

pub mod bitstream;
pub mod channel;
pub mod codec;
pub mod dct;
pub mod error;
pub mod harness;
pub mod mask;
pub mod pixels;
pub mod quant;
pub mod synth;
pub mod zigzag;

pub use bitstream::{depacketize, deserialize, packetize, serialize, Depacketized, Packet};
pub use channel::{ChannelConfig, Loss, Protection, TransmissionReport};
pub use codec::{encode_image, reconstruct, reconstruct_full, ColorMode, EncodedImage};
pub use error::{Error, Result};
pub use mask::{augment_drop, make_mask, DropGranularity, MaskSpec, ReconstructionMask};
pub use pixels::{psnr, PixelImage};
pub use quant::QualityFactor;
