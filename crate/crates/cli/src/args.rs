use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsd_core::bp::Schedule;
use lsd_core::codes::Side;
use lsd_core::lsd::{GrowthBudget, LocalReprocessing, LsdConfig};
use lsd_core::osd::OsdMethod;
use lsd_core::{BpConfig, DecoderSpec};

#[derive(Debug, Parser)]
#[command(
    name = "lsd",
    version,
    about = "Localized statistics decoding for quantum LDPC codes",
    args_override_self = true
)]
pub struct Cli {
    /// Worker threads for shot-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a detector error model for a code family.
    Gen(GenArgs),
    /// Decode one syndrome per line of a file.
    Decode(DecodeArgs),
    /// Check that corrections reproduce their syndromes.
    Verify(VerifyArgs),
    /// Monte-Carlo logical error rates over a grid of physical error rates.
    Sweep(SweepArgs),
    /// Per-shot cluster statistics of LSD and of the sampled errors.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Surface,
    Repetition,
    Hgp,
    Bb,
}

/// Where a detector model comes from: a code generator.
#[derive(Debug, Clone, Args)]
pub struct CodeArgs {
    #[arg(value_enum)]
    pub family: Option<Family>,
    /// Surface-code distance.
    #[arg(long)]
    pub d: Option<usize>,
    /// Repetition-code length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Dense 0/1 seed matrix for the hypergraph product.
    #[arg(long)]
    pub seed_file: Option<PathBuf>,
    /// Random (3,4)-regular seed of shape CHECKS,BITS for the hypergraph product.
    #[arg(long, value_parser = parse_pair)]
    pub regular: Option<(usize, usize)>,
    /// RNG seed of the random regular seed matrix.
    #[arg(long, default_value_t = 1)]
    pub graph_seed: u64,
    /// JSON file with the bivariate-bicycle parameters.
    #[arg(long)]
    pub bb_config: Option<PathBuf>,
    #[arg(long, default_value = "z")]
    pub side: Side,
    /// Syndrome rounds; selects the phenomenological model.
    #[arg(long)]
    pub rounds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long)]
    pub p: f64,
    /// Output file (default: standard output).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write the round layout of a phenomenological model as JSON.
    #[arg(long)]
    pub layout: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderKind {
    Bp,
    BpOsd,
    BpLsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Parallel,
    Serial,
}

/// Post-processing method written `osd0`, `e:W` or `cs:W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodArg(pub OsdMethod);

impl FromStr for MethodArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let order = |w: &str| w.parse::<usize>().map_err(|e| format!("bad order in {s:?}: {e}"));
        match s.split_once(':') {
            None if s == "osd0" || s == "0" => Ok(MethodArg(OsdMethod::Osd0)),
            Some(("e", w)) => Ok(MethodArg(OsdMethod::Exhaustive(order(w)?))),
            Some(("cs", w)) => Ok(MethodArg(OsdMethod::CombinationSweep(order(w)?))),
            _ => Err(format!("expected osd0, e:W or cs:W, got {s:?}")),
        }
    }
}

impl fmt::Display for MethodArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            OsdMethod::Osd0 => write!(f, "osd0"),
            OsdMethod::Exhaustive(w) => write!(f, "e:{w}"),
            OsdMethod::CombinationSweep(w) => write!(f, "cs:{w}"),
        }
    }
}

/// Growth budget written as a step count `10` or a fraction of faults `0.05f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetArg(pub GrowthBudget);

impl FromStr for BudgetArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_suffix('f') {
            Some(f) => f
                .parse::<f64>()
                .map(|f| BudgetArg(GrowthBudget::FractionOfFaults(f)))
                .map_err(|e| format!("bad fraction {s:?}: {e}")),
            None => s
                .parse::<usize>()
                .map(|n| BudgetArg(GrowthBudget::Steps(n)))
                .map_err(|e| format!("bad step count {s:?}: {e}")),
        }
    }
}

impl fmt::Display for BudgetArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            GrowthBudget::Steps(n) => write!(f, "{n}"),
            GrowthBudget::FractionOfFaults(x) => write!(f, "{x}f"),
        }
    }
}

pub fn value_name<E: ValueEnum>(v: &E) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Args)]
pub struct DecoderArgs {
    #[arg(long, value_enum, default_value = "bp-lsd")]
    pub decoder: DecoderKind,
    #[arg(long, default_value_t = 30)]
    pub bp_iters: usize,
    #[arg(long, default_value_t = 0.625)]
    pub bp_scale: f64,
    #[arg(long, value_enum, default_value = "parallel")]
    pub schedule: ScheduleArg,
    /// Global OSD method for bp-osd.
    #[arg(long, default_value = "osd0")]
    pub osd: MethodArg,
    /// LSD growth budget after validity (steps, or a fraction of faults with suffix `f`).
    #[arg(long, default_value = "0")]
    pub mu: BudgetArg,
    /// Local solver inside LSD clusters when the budget is positive.
    #[arg(long, default_value = "osd0")]
    pub lsd_osd: MethodArg,
    /// Merge clusters on the thread pool.
    #[arg(long)]
    pub parallel_lsd: bool,
}

impl DecoderArgs {
    pub fn spec(&self) -> DecoderSpec {
        let bp = BpConfig {
            max_iterations: self.bp_iters,
            scaling_factor: self.bp_scale,
            schedule: match self.schedule {
                ScheduleArg::Parallel => Schedule::Parallel,
                ScheduleArg::Serial => Schedule::Serial,
            },
            ..BpConfig::default()
        };
        match self.decoder {
            DecoderKind::Bp => DecoderSpec::Bp(bp),
            DecoderKind::BpOsd => DecoderSpec::BpOsd { bp, osd: self.osd.0 },
            DecoderKind::BpLsd => DecoderSpec::BpLsd {
                bp,
                lsd: LsdConfig {
                    mu: self.mu.0,
                    local_reprocessing: match self.lsd_osd.0 {
                        OsdMethod::Osd0 => LocalReprocessing::None,
                        OsdMethod::Exhaustive(w) => LocalReprocessing::OsdE(w),
                        OsdMethod::CombinationSweep(w) => LocalReprocessing::OsdCs(w),
                    },
                    parallel: self.parallel_lsd,
                },
            },
        }
    }

    /// `key = value` pairs describing the decoder, for config echoes.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("decoder".to_string(), value_name(&self.decoder)),
            ("bp_iters".to_string(), self.bp_iters.to_string()),
            ("bp_scale".to_string(), self.bp_scale.to_string()),
            ("schedule".to_string(), value_name(&self.schedule)),
        ];
        match self.decoder {
            DecoderKind::Bp => {}
            DecoderKind::BpOsd => out.push(("osd".to_string(), self.osd.to_string())),
            DecoderKind::BpLsd => {
                out.push(("mu".to_string(), self.mu.to_string()));
                out.push(("lsd_osd".to_string(), self.lsd_osd.to_string()));
            }
        }
        out
    }
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One line of space-separated flipped detectors per shot.
    #[arg(long)]
    pub syndromes: PathBuf,
    #[command(flatten)]
    pub decoder: DecoderArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub syndromes: PathBuf,
    /// Output of `decode` for the same syndrome file.
    #[arg(long)]
    pub corrections: PathBuf,
}

/// Model source shared by `sweep` and `stats`.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Detector error model file; its priors are replaced by each grid value.
    #[arg(long, conflicts_with = "family")]
    pub model: Option<PathBuf>,
    /// Round layout JSON for windowed decoding of a model file.
    #[arg(long, requires = "model")]
    pub layout: Option<PathBuf>,
    #[command(flatten)]
    pub code: CodeArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML file whose keys mirror these flags; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub decoder: DecoderArgs,
    /// Physical error rates, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    #[arg(long)]
    pub seed: u64,
    /// Overlapping window WIDTH,COMMIT in rounds.
    #[arg(long, value_parser = parse_pair)]
    pub window: Option<(usize, usize)>,
    /// CSV output (default: standard output).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Per-shot records as JSON lines.
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub decoder: DecoderArgs,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    #[arg(long)]
    pub seed: u64,
    /// Bethe-lattice degree for the reference cluster size.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Per-shot records as JSON lines.
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got {s:?}"))?;
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(a)?, num(b)?))
}
