//! Command-line and config-file handling.
//!
//! Precedence is flags, then the config file, then built-in defaults. The
//! config file is flat `key=value` text with `#` comments; keys are the long
//! flag names without the leading dashes (`range=30`, `sink-y=300`).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};
use crate::geometry::{parse_placement, Point};
use crate::sim::{SimConfig, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidConfig(format!("unknown format `{s}` (expected csv or json)"))),
        }
    }
}

/// Settings shared by flags and the config file; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct Settings {
    /// Protocol: emln, leach, pegasis-tdma, pegasis-cdma, direct
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Field width in meters
    #[arg(long)]
    pub width: Option<f64>,
    /// Field height in meters
    #[arg(long)]
    pub height: Option<f64>,
    /// Transmission range in meters for the tree protocol
    #[arg(long)]
    pub range: Option<f64>,
    #[arg(long)]
    pub sink_x: Option<f64>,
    #[arg(long)]
    pub sink_y: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial energy per node in Joules
    #[arg(long)]
    pub initial_energy: Option<f64>,
    #[arg(long)]
    pub packet_bits: Option<u64>,
    /// Electronics energy in J/bit
    #[arg(long)]
    pub e_elec: Option<f64>,
    /// Amplifier energy in J/bit/m^2
    #[arg(long)]
    pub eps_amp: Option<f64>,
    /// Fusion energy in J/bit/signal
    #[arg(long)]
    pub e_fuse: Option<f64>,
    /// LEACH cluster-head fraction
    #[arg(long)]
    pub leach_p: Option<f64>,
    #[arg(long)]
    pub rebuild_period: Option<u64>,
    #[arg(long)]
    pub max_rounds: Option<u64>,
    /// first-death or energy-exhausted
    #[arg(long)]
    pub stop_rule: Option<String>,
    /// Comma-separated ranges, e.g. "15,20,25,30,35,40,45,50"
    #[arg(long)]
    pub sweep: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Node placement file (`id x y energy` per line) used for every trial
    #[arg(long)]
    pub placement: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "emln-dg", version, about = "Round-based data-gathering simulator for wireless sensor networks")]
pub struct Args {
    /// Flat key=value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Emit per-round rows instead of aggregates
    #[arg(long)]
    pub per_round: bool,
    /// Run every protocol on the same deployments
    #[arg(long)]
    pub compare: bool,
    #[command(flatten)]
    pub settings: Settings,
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::ConfigFile { line, message: format!("cannot parse `{value}` for `{key}`") })
}

impl Settings {
    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let v = value;
        match key.replace('_', "-").as_str() {
            "protocol" => self.protocol = Some(v.to_string()),
            "nodes" => self.nodes = Some(parse_value(key, v, line)?),
            "width" => self.width = Some(parse_value(key, v, line)?),
            "height" => self.height = Some(parse_value(key, v, line)?),
            "range" => self.range = Some(parse_value(key, v, line)?),
            "sink-x" => self.sink_x = Some(parse_value(key, v, line)?),
            "sink-y" => self.sink_y = Some(parse_value(key, v, line)?),
            "trials" => self.trials = Some(parse_value(key, v, line)?),
            "seed" => self.seed = Some(parse_value(key, v, line)?),
            "initial-energy" => self.initial_energy = Some(parse_value(key, v, line)?),
            "packet-bits" => self.packet_bits = Some(parse_value(key, v, line)?),
            "e-elec" => self.e_elec = Some(parse_value(key, v, line)?),
            "eps-amp" => self.eps_amp = Some(parse_value(key, v, line)?),
            "e-fuse" => self.e_fuse = Some(parse_value(key, v, line)?),
            "leach-p" => self.leach_p = Some(parse_value(key, v, line)?),
            "rebuild-period" => self.rebuild_period = Some(parse_value(key, v, line)?),
            "max-rounds" => self.max_rounds = Some(parse_value(key, v, line)?),
            "stop-rule" => self.stop_rule = Some(v.to_string()),
            "sweep" => self.sweep = Some(v.to_string()),
            "out" => self.out = Some(PathBuf::from(v)),
            "format" => self.format = Some(parse_value(key, v, line)?),
            "placement" => self.placement = Some(PathBuf::from(v)),
            _ => return Err(Error::ConfigFile { line, message: format!("unknown key `{key}`") }),
        }
        Ok(())
    }

    /// Parses flat `key=value` config text.
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::ConfigFile { line: idx + 1, message: format!("expected key=value, got `{line}`") });
            };
            s.set(key.trim(), value.trim(), idx + 1)?;
        }
        Ok(s)
    }

    /// Values in `self` win over `fallback`.
    pub fn or(self, fallback: Settings) -> Settings {
        Settings {
            protocol: self.protocol.or(fallback.protocol),
            nodes: self.nodes.or(fallback.nodes),
            width: self.width.or(fallback.width),
            height: self.height.or(fallback.height),
            range: self.range.or(fallback.range),
            sink_x: self.sink_x.or(fallback.sink_x),
            sink_y: self.sink_y.or(fallback.sink_y),
            trials: self.trials.or(fallback.trials),
            seed: self.seed.or(fallback.seed),
            initial_energy: self.initial_energy.or(fallback.initial_energy),
            packet_bits: self.packet_bits.or(fallback.packet_bits),
            e_elec: self.e_elec.or(fallback.e_elec),
            eps_amp: self.eps_amp.or(fallback.eps_amp),
            e_fuse: self.e_fuse.or(fallback.e_fuse),
            leach_p: self.leach_p.or(fallback.leach_p),
            rebuild_period: self.rebuild_period.or(fallback.rebuild_period),
            max_rounds: self.max_rounds.or(fallback.max_rounds),
            stop_rule: self.stop_rule.or(fallback.stop_rule),
            sweep: self.sweep.or(fallback.sweep),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
            placement: self.placement.or(fallback.placement),
        }
    }
}

/// What the binary should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Experiment,
    PerRound,
    Sweep,
    Compare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: SimConfig,
    pub mode: Mode,
    pub sweep: Vec<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    /// Non-fatal notes for the error stream.
    pub warnings: Vec<String>,
}

fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad sweep range `{s}`"))))
        .collect()
}

/// Resolves flags, an optional config file and defaults into a validated run.
pub fn parse_config(args: &Args, file_text: Option<&str>) -> Result<Invocation> {
    let file = match file_text {
        Some(text) => Settings::from_config_text(text)?,
        None => Settings::default(),
    };
    let s = args.settings.clone().or(file);
    let mut cfg = SimConfig::default();
    let mut warnings = Vec::new();

    if let Some(p) = &s.protocol {
        cfg.protocol = p.parse()?;
    }
    if let Some(v) = s.nodes {
        cfg.field.node_count = v;
    }
    if let Some(v) = s.width {
        cfg.field.width = v;
    }
    if let Some(v) = s.height {
        cfg.field.height = v;
    }
    if let Some(v) = s.range {
        cfg.range = v;
    }
    cfg.field.sink = Point::new(s.sink_x.unwrap_or(cfg.field.sink.x), s.sink_y.unwrap_or(cfg.field.sink.y));
    if let Some(v) = s.trials {
        cfg.trials = v;
    }
    if let Some(v) = s.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = s.initial_energy {
        cfg.initial_energy = v;
    }
    if let Some(v) = s.packet_bits {
        cfg.radio.packet_bits = v;
    }
    if let Some(v) = s.e_elec {
        cfg.radio.e_elec = v;
    }
    if let Some(v) = s.eps_amp {
        cfg.radio.eps_amp = v;
    }
    if let Some(v) = s.e_fuse {
        cfg.radio.e_fuse = v;
    }
    if let Some(v) = s.leach_p {
        cfg.leach_p = v;
    }
    if let Some(v) = s.rebuild_period {
        cfg.rebuild_period = v;
    }
    if let Some(v) = s.max_rounds {
        cfg.max_rounds = v;
    }
    if let Some(rule) = &s.stop_rule {
        cfg.stop_rule = match rule.as_str() {
            "first-death" => StopRule::FirstDeath,
            "energy-exhausted" => StopRule::EnergyExhausted,
            other => return Err(Error::InvalidConfig(format!("unknown stop rule `{other}`"))),
        };
    }
    if let Some(path) = &s.placement {
        let nodes = parse_placement(&read_text(path)?)?;
        if s.nodes.is_some_and(|n| n != nodes.len()) {
            warnings.push(format!("node count ignored: placement file has {} nodes", nodes.len()));
        }
        cfg.field.node_count = nodes.len();
        cfg.placement = Some(nodes);
    }

    let sweep = match &s.sweep {
        Some(text) => parse_sweep(text)?,
        None => Vec::new(),
    };
    let mode = match (args.per_round, args.compare, s.sweep.is_some()) {
        (false, false, false) => Mode::Experiment,
        (true, false, false) => Mode::PerRound,
        (false, true, false) => Mode::Compare,
        (false, false, true) => Mode::Sweep,
        _ => return Err(Error::InvalidConfig("--per-round, --compare and --sweep are mutually exclusive".into())),
    };
    if mode == Mode::Sweep {
        if !cfg.protocol.uses_range() {
            return Err(Error::InvalidConfig(format!("--sweep varies the range, which {} does not use", cfg.protocol)));
        }
        if sweep.is_empty() {
            return Err(Error::InvalidConfig("--sweep needs at least one range".into()));
        }
    }
    if s.range.is_some() && !cfg.protocol.uses_range() && mode != Mode::Compare {
        warnings.push(format!("--range is ignored by protocol {}", cfg.protocol));
    }

    cfg.validate()?;
    for &r in &sweep {
        cfg.with_range(r).validate()?;
    }
    Ok(Invocation { config: cfg, mode, sweep, format: s.format.unwrap_or(Format::Csv), out: s.out, warnings })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Parses an argument vector (including the program name) and reads the
/// config file it names, if any.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Result<Invocation>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    let text = match &args.config {
        Some(path) => match read_text(path) {
            Ok(t) => Some(t),
            Err(e) => return Ok(Err(e)),
        },
        None => None,
    };
    Ok(parse_config(&args, text.as_deref()))
}
