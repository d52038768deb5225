use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semcomm::channel::{parse_duration, parse_rate, ChannelConfig, Loss, Protection};
use semcomm::harness::{
    corrupt_file, decode_file, encode_file, parse_float_list, parse_int_list, run_augment,
    run_sweep, write_manifest, AugmentSpec, DropSchedule, Experiment, SweepSpec,
};
use semcomm::{ColorMode, DropGranularity, MaskSpec, QualityFactor};

#[derive(Parser)]
#[command(
    name = "semcomm",
    version,
    about = "Progressive DCT image transmission toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a PNG/BMP image into a .semc stream
    Encode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 90)]
        quality: u32,
        /// auto, luma or ycbcr444
        #[arg(long, default_value = "auto")]
        color_mode: String,
    },
    /// Reconstruct a .semc stream or .pkts capture to PNG
    Decode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "remove_plane")]
        keep_top: Option<usize>,
        #[arg(long)]
        remove_plane: Option<usize>,
    },
    /// Send a .semc stream through the simulated channel
    Corrupt {
        input: PathBuf,
        /// Output directory for <stem>.pkts, <stem>.png and report.csv
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        channel: ChannelArgs,
    },
    /// Run an experiment grid over a directory-per-class corpus
    Sweep(SweepArgs),
    /// Write one epoch of coefficient-drop augmented images
    Augment(AugmentArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// key = value file; flags given on the command line override it
    #[arg(long)]
    run_file: Option<PathBuf>,
    #[arg(long)]
    bit_error_prob: Option<f64>,
    #[arg(long, conflicts_with = "drop_rate")]
    drop_count: Option<usize>,
    #[arg(long)]
    drop_rate: Option<f64>,
    /// e.g. 10Mbps, 500kbps, inf
    #[arg(long)]
    rate: Option<String>,
    /// e.g. 20ms, none
    #[arg(long)]
    deadline: Option<String>,
    #[arg(long)]
    compute_time: Option<String>,
    /// none, dc_sign or dc_full
    #[arg(long)]
    protection: Option<Protection>,
    #[arg(long)]
    fec_overhead_factor: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ChannelArgs {
    fn config(&self) -> semcomm::Result<ChannelConfig> {
        let mut cfg = match &self.run_file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| semcomm::Error::Config(format!("{}: {e}", path.display())))?;
                ChannelConfig::from_run_file(&text)?
            }
            None => ChannelConfig::default(),
        };
        if let Some(p) = self.bit_error_prob {
            cfg.bit_error_prob = p;
        }
        if let Some(n) = self.drop_count {
            cfg.loss = Loss::DropCount(n);
        }
        if let Some(r) = self.drop_rate {
            cfg.loss = Loss::DropRate(r);
        }
        if let Some(r) = &self.rate {
            cfg.rate_bps = parse_rate(r)?;
        }
        if let Some(d) = &self.deadline {
            cfg.deadline = parse_duration(d)?;
        }
        if let Some(c) = &self.compute_time {
            cfg.compute_time = parse_duration(c)?.unwrap_or_default();
        }
        if let Some(p) = self.protection {
            cfg.protection = p;
        }
        if let Some(f) = self.fec_overhead_factor {
            cfg.fec_overhead_factor = f;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    experiment: Experiment,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 0 uses every core
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 90)]
    quality: u32,
    #[arg(long, default_value = "auto")]
    color_mode: String,
    /// Lists accept "1,5,10", "1..64" and "10..100:10"
    #[arg(long)]
    top_n: Option<String>,
    #[arg(long)]
    remove_k: Option<String>,
    #[arg(long)]
    qualities: Option<String>,
    #[arg(long)]
    drop_counts: Option<String>,
    #[arg(long)]
    bit_error_probs: Option<String>,
    /// Comma-separated protection modes
    #[arg(long)]
    protections: Option<String>,
    #[arg(long)]
    deadlines_ms: Option<String>,
    #[arg(long)]
    rates_mbps: Option<String>,
    #[arg(long, default_value = "0ms")]
    compute_time: String,
    #[arg(long, default_value_t = 1.0)]
    fec_overhead_factor: f64,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 90)]
    quality: u32,
    #[arg(long, default_value = "auto")]
    color_mode: String,
    /// none, uniform:P, linear:A:B, top_n_uniform or 64 comma-separated probabilities
    #[arg(long, default_value = "uniform:0.1")]
    schedule: String,
    /// Drop whole planes instead of single coefficients
    #[arg(long)]
    per_plane: bool,
}

fn color_mode(s: &str) -> semcomm::Result<Option<ColorMode>> {
    if s.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn ints<T: TryFrom<u64>>(s: &str) -> semcomm::Result<Vec<T>> {
    parse_int_list(s)?
        .into_iter()
        .map(|v| T::try_from(v).map_err(|_| semcomm::Error::Config(format!("{v} out of range"))))
        .collect()
}

fn run(cli: Cli) -> semcomm::Result<()> {
    match cli.command {
        Command::Encode {
            input,
            out,
            quality,
            color_mode: mode,
        } => {
            let s = encode_file(
                &input,
                &out,
                QualityFactor::new(quality)?,
                color_mode(&mode)?,
            )?;
            println!(
                "{}: {}x{} {} Q={} -> {} bytes, {} packets",
                out.display(),
                s.width,
                s.height,
                s.color_mode,
                s.quality,
                s.stream_bytes,
                s.packets
            );
        }
        Command::Decode {
            input,
            out,
            keep_top,
            remove_plane,
        } => {
            let spec = keep_top
                .map(MaskSpec::KeepTopN)
                .or(remove_plane.map(MaskSpec::RemovePlane));
            let s = decode_file(&input, &out, spec.as_ref())?;
            println!(
                "{}: {}x{}, {}/{} coefficients",
                out.display(),
                s.width,
                s.height,
                s.mask_present,
                s.mask_total
            );
        }
        Command::Corrupt {
            input,
            out,
            channel,
        } => {
            let cfg = channel.config()?;
            let stem = input
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            let o = corrupt_file(
                &input,
                &cfg,
                out.join(format!("{stem}.pkts")),
                out.join(format!("{stem}.png")),
            )?;
            write_manifest(out.join("report.csv"), std::slice::from_ref(&o.row))?;
            let r = &o.report;
            println!(
                "sent {}/{} packets, delivered {}, {} bits flipped, decodable: {}",
                r.packets_sent, r.packets_total, r.packets_delivered, r.bits_flipped, r.decodable
            );
            match &o.png {
                Some(png) => println!("{}", png.display()),
                None => println!("undecodable, no image written"),
            }
        }
        Command::Sweep(a) => {
            let mut spec = SweepSpec::new(a.experiment, &a.corpus, &a.out);
            spec.seed = a.seed;
            spec.workers = a.workers;
            spec.quality = QualityFactor::new(a.quality)?;
            spec.color_mode = color_mode(&a.color_mode)?;
            spec.compute_time = parse_duration(&a.compute_time)?.unwrap_or_default();
            spec.fec_overhead_factor = a.fec_overhead_factor;
            if let Some(s) = &a.top_n {
                spec.top_n = ints(s)?;
            }
            if let Some(s) = &a.remove_k {
                spec.remove_k = ints(s)?;
            }
            if let Some(s) = &a.qualities {
                spec.qualities = ints(s)?;
            }
            if let Some(s) = &a.drop_counts {
                spec.drop_counts = ints(s)?;
            }
            if let Some(s) = &a.bit_error_probs {
                spec.bit_error_probs = parse_float_list(s)?;
            }
            if let Some(s) = &a.protections {
                spec.protections = s
                    .split(',')
                    .map(str::parse)
                    .collect::<semcomm::Result<_>>()?;
            }
            if let Some(s) = &a.deadlines_ms {
                spec.deadlines_ms = parse_float_list(s)?;
            }
            if let Some(s) = &a.rates_mbps {
                spec.rates_mbps = parse_float_list(s)?;
            }
            let s = run_sweep(&spec)?;
            println!(
                "{}: {} rows ({} ok, {} failed, {} errors)",
                s.manifest.display(),
                s.rows,
                s.ok,
                s.failed,
                s.errors
            );
        }
        Command::Augment(a) => {
            let mut spec = AugmentSpec::new(&a.corpus, &a.out, a.schedule.parse::<DropSchedule>()?);
            spec.seed = a.seed;
            spec.workers = a.workers;
            spec.quality = QualityFactor::new(a.quality)?;
            spec.color_mode = color_mode(&a.color_mode)?;
            if a.per_plane {
                spec.granularity = DropGranularity::PerPlane;
            }
            let s = run_augment(&spec)?;
            println!(
                "{}: {} rows ({} ok, {} errors)",
                s.manifest.display(),
                s.rows,
                s.ok,
                s.errors
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
