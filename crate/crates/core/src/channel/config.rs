use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};

/// Packet loss model applied to payload packets (never packet 0).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Loss {
    #[default]
    None,
    /// Exactly `n` distinct packets, uniformly without replacement.
    DropCount(usize),
    /// Each packet independently with this probability.
    DropRate(f64),
}

/// Which bits of the DC planes are FEC-protected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Protection {
    #[default]
    None,
    DcSign,
    DcFull,
}

impl Protection {
    pub const ALL: [Protection; 3] = [Protection::None, Protection::DcSign, Protection::DcFull];

    pub fn name(self) -> &'static str {
        match self {
            Protection::None => "none",
            Protection::DcSign => "dc_sign",
            Protection::DcFull => "dc_full",
        }
    }
}

impl fmt::Display for Protection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Protection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(Protection::None),
            "dc_sign" => Ok(Protection::DcSign),
            "dc_full" => Ok(Protection::DcFull),
            other => Err(Error::Config(format!("unknown protection mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub bit_error_prob: f64,
    pub loss: Loss,
    /// Bits per second; `None` means unlimited.
    pub rate_bps: Option<u64>,
    /// `None` means no deadline.
    pub deadline: Option<Duration>,
    pub compute_time: Duration,
    pub protection: Protection,
    /// Parity bytes charged per protected byte.
    pub fec_overhead_factor: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            bit_error_prob: 0.0,
            loss: Loss::None,
            rate_bps: None,
            deadline: None,
            compute_time: Duration::ZERO,
            protection: Protection::None,
            fec_overhead_factor: 1.0,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.bit_error_prob) {
            return Err(Error::InvalidProbability(self.bit_error_prob));
        }
        if let Loss::DropRate(r) = self.loss {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidProbability(r));
            }
        }
        if !(self.fec_overhead_factor.is_finite() && self.fec_overhead_factor >= 0.0) {
            return Err(Error::Config(format!(
                "fec_overhead_factor {} must be finite and >= 0",
                self.fec_overhead_factor
            )));
        }
        if let Some(deadline) = self.deadline {
            if deadline < self.compute_time {
                return Err(Error::Config(format!(
                    "deadline {deadline:?} shorter than compute time {:?}",
                    self.compute_time
                )));
            }
            match self.rate_bps {
                Some(r) if r > 0 => {}
                _ => {
                    return Err(Error::Config(
                        "a finite deadline needs a positive rate".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// `floor(rate * (deadline - compute_time) / 8)`, or `None` when unlimited.
    pub fn bytes_budget(&self) -> Option<u64> {
        let deadline = self.deadline?;
        let rate = self.rate_bps? as u128;
        let window = deadline.saturating_sub(self.compute_time).as_nanos();
        Some((rate * window / 8_000_000_000) as u64)
    }

    /// Sets one field from its run-file key.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("{key}: cannot parse '{value}' as {what}"));
        match key.trim() {
            "bit_error_prob" | "p" => {
                self.bit_error_prob = value.parse().map_err(|_| bad("probability"))?
            }
            "drop_count" => {
                self.loss = Loss::DropCount(value.parse().map_err(|_| bad("packet count"))?)
            }
            "drop_rate" => {
                self.loss = Loss::DropRate(value.parse().map_err(|_| bad("probability"))?)
            }
            "loss" if value == "none" => self.loss = Loss::None,
            "rate" => self.rate_bps = parse_rate(value)?,
            "deadline" => self.deadline = parse_duration(value)?,
            "compute_time" => self.compute_time = parse_duration(value)?.unwrap_or(Duration::ZERO),
            "protection" => self.protection = value.parse()?,
            "fec_overhead_factor" => {
                self.fec_overhead_factor = value.parse().map_err(|_| bad("number"))?
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("u64"))?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_run_file(text: &str) -> Result<Self> {
        let mut cfg = ChannelConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn split_unit(s: &str) -> (&str, &str) {
    let s = s.trim();
    let idx = s
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(s.len());
    (s[..idx].trim(), s[idx..].trim())
}

/// Parses a bit rate: plain bits per second (`5e6`) or with a unit
/// (`5Mbps`, `250 kbps`). `inf` or `none` means unlimited.
pub fn parse_rate(s: &str) -> Result<Option<u64>> {
    let t = s.trim().to_ascii_lowercase();
    if t == "inf" || t == "none" || t == "unlimited" {
        return Ok(None);
    }
    let (num, unit) = split_unit(s);
    let v: f64 = num
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse rate '{s}'")))?;
    let scale = match unit.to_ascii_lowercase().as_str() {
        "" | "bps" => 1.0,
        "kbps" => 1e3,
        "mbps" => 1e6,
        "gbps" => 1e9,
        other => return Err(Error::Config(format!("unknown rate unit '{other}'"))),
    };
    let bps = v * scale;
    if !(bps.is_finite() && bps >= 0.0) {
        return Err(Error::Config(format!("invalid rate '{s}'")));
    }
    Ok(Some(bps.round() as u64))
}

/// Parses a duration: plain seconds (`0.005`) or with a unit (`5ms`, `250us`).
/// `inf` or `none` means no limit.
pub fn parse_duration(s: &str) -> Result<Option<Duration>> {
    let t = s.trim().to_ascii_lowercase();
    if t == "inf" || t == "none" {
        return Ok(None);
    }
    let (num, unit) = split_unit(s);
    let v: f64 = num
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse duration '{s}'")))?;
    let nanos_per = match unit.to_ascii_lowercase().as_str() {
        "" | "s" => 1e9,
        "ms" => 1e6,
        "us" => 1e3,
        "ns" => 1.0,
        other => return Err(Error::Config(format!("unknown time unit '{other}'"))),
    };
    let nanos = v * nanos_per;
    if !(nanos.is_finite() && nanos >= 0.0) {
        return Err(Error::Config(format!("invalid duration '{s}'")));
    }
    Ok(Some(Duration::from_nanos(nanos.round() as u64)))
}
