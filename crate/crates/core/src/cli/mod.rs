//! The `ottc` command line: `gen-gt`, `simulate`, `eval` and `bench`.
//!
//! [`run`] is the whole program; the binary only forwards `std::env::args`
//! and exits with its status. Failures print exactly one line to stderr,
//!
//! ```text
//! ottc-error code=<exit code> kind=<error kind> <human readable message>
//! ```
//!
//! Exit codes: 0 success, 2 usage, 3 parse, 4 config, 5 internal.

mod commands;
mod manifest;

pub use commands::{
    load_dense_map_dir, load_kitti_dir, load_scene_files, rank_reports, MethodReport,
};
pub use manifest::{output_digest, RunManifest, MANIFEST_FILE};

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::eval::{BaselineKind, EvalConfig, EvalError, MatchMode, MissingPolicy};
use crate::ingest::IngestError;
use crate::sim::{SceneFamily, SimError};
use crate::ttc::GtMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Usage = 2,
    Parse = 3,
    Config = 4,
    Internal = 5,
}

impl ExitCode {
    fn name(self) -> &'static str {
        match self {
            ExitCode::Ok => "ok",
            ExitCode::Usage => "usage",
            ExitCode::Parse => "parse",
            ExitCode::Config => "config",
            ExitCode::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: ExitCode,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Usage, "Usage", message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Config, "Config", message)
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error, writing: bool) -> Self {
        let (code, verb) = if writing {
            (ExitCode::Internal, "write")
        } else {
            (ExitCode::Parse, "read")
        };
        Self::new(code, "Io", format!("cannot {verb} {}: {err}", path.display()))
    }

    /// The single stderr line.
    pub fn line(&self) -> String {
        let msg = self.message.replace(['\n', '\r'], " ");
        format!(
            "ottc-error code={} kind={} {}: {}",
            self.code as i32,
            self.kind,
            self.code.name(),
            msg
        )
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for CliError {}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let kind = match e {
            IngestError::MalformedRecord { .. } => "MalformedRecord",
            IngestError::MalformedBinary { .. } => "MalformedBinary",
            IngestError::MissingCalibration(_) => "MissingCalibration",
            IngestError::SchemaViolation { .. } => "SchemaViolation",
        };
        Self::new(ExitCode::Parse, kind, e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let kind = match e {
            SimError::DegenerateSpec(_) => "DegenerateSpec",
            SimError::Invariant(_) => "Invariant",
        };
        Self::new(ExitCode::Config, kind, e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let (code, kind) = match e {
            EvalError::KeyModeMismatch { .. } => (ExitCode::Config, "KeyModeMismatch"),
            EvalError::InvalidConfig(_) => (ExitCode::Config, "InvalidConfig"),
            EvalError::MultipleSequences(..) => (ExitCode::Config, "MultipleSequences"),
            EvalError::MissingGtBoxes => (ExitCode::Config, "MissingGtBoxes"),
            EvalError::DuplicatePrediction { .. } => (ExitCode::Parse, "DuplicatePrediction"),
            EvalError::NonPositiveEta(_) => (ExitCode::Internal, "NonPositiveEta"),
            EvalError::EmptyInput(_) => (ExitCode::Internal, "EmptyInput"),
            EvalError::LengthMismatch { .. } => (ExitCode::Internal, "LengthMismatch"),
            EvalError::UndefinedAccuracy => (ExitCode::Internal, "UndefinedAccuracy"),
        };
        Self::new(code, kind, e.to_string())
    }
}

/// `lo,hi` with `lo < 1 < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskBand {
    pub lower: f64,
    pub upper: f64,
}

impl FromStr for RiskBand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| format!("risk band {s:?} is not lo,hi"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("risk band bound {v:?} is not a number"))
        };
        Ok(Self {
            lower: parse(lo)?,
            upper: parse(hi)?,
        })
    }
}

impl fmt::Display for RiskBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.lower, self.upper)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ottc",
    version,
    about = "Per-object time-to-contact ground truth, simulation and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate η / TTC ground truth from KITTI tracking labels or scene files.
    GenGt(GenGtArgs),
    /// Render scene specs or a seeded validation suite with exact ground truth.
    Simulate(SimulateArgs),
    /// Score one prediction file or dense-map directory against annotations.
    Eval(EvalArgs),
    /// Score several baselines and prediction files on one dataset.
    Bench(BenchArgs),
}

/// Where tracked sequences come from.
#[derive(Debug, Args, Clone)]
pub struct DatasetArgs {
    /// KITTI tracking directory holding `label_02/` and `calib/`.
    #[arg(long, value_name = "DIR")]
    pub kitti: Option<PathBuf>,
    /// Key frames per second of the KITTI labels (required with --kitti).
    #[arg(long)]
    pub kfps: Option<f64>,
    /// Scene document(s) in the JSON scene format.
    #[arg(long, value_name = "FILE")]
    pub scene: Vec<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct EvalFlags {
    #[arg(long, value_delimiter = ',', default_value = "Car,Pedestrian")]
    pub categories: Vec<String>,
    /// Ground-truth neutral band `[lo, hi)`.
    #[arg(long, default_value = "0.998,1.002", value_name = "LO,HI")]
    pub risk_band: RiskBand,
    /// `track`, `center:<radius px>` or `iou:<threshold>`.
    #[arg(long, default_value = "track")]
    pub match_mode: MatchMode,
    /// `skip` or `count-missing`.
    #[arg(long, default_value = "skip")]
    pub missing_policy: MissingPolicy,
}

impl EvalFlags {
    pub fn config(&self) -> Result<EvalConfig, CliError> {
        let categories: BTreeSet<String> = self
            .categories
            .iter()
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        let config = EvalConfig {
            categories,
            risk_lower: self.risk_band.lower,
            risk_upper: self.risk_band.upper,
            match_mode: self.match_mode,
            missing_policy: self.missing_policy,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct GenGtArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// depth-velocity, tracks3d, tracks2d or tracks2d-corrected.
    #[arg(long, default_value = "tracks3d")]
    pub method: GtMethod,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene spec document(s).
    #[arg(long, value_name = "FILE")]
    pub spec: Vec<PathBuf>,
    /// Render the validation suite for this seed.
    #[arg(long, alias = "seed", value_name = "SEED")]
    pub suite: Option<u64>,
    /// Keep only one family of the suite.
    #[arg(long)]
    pub family: Option<SceneFamily>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Annotation file of one sequence.
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    /// Only use annotations produced by this method.
    #[arg(long)]
    pub method: Option<crate::types::AnnotationMethod>,
    /// Prediction file.
    #[arg(long, value_name = "FILE", conflicts_with = "dense_maps")]
    pub predictions: Option<PathBuf>,
    /// Directory of `<frame>.omid` dense maps, read at object centres.
    #[arg(long, value_name = "DIR")]
    pub dense_maps: Option<PathBuf>,
    /// Scene document with ground-truth boxes, for IoU matching.
    #[arg(long, value_name = "FILE")]
    pub gt_scene: Option<PathBuf>,
    #[command(flatten)]
    pub flags: EvalFlags,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Use the validation suite for this seed as the dataset.
    #[arg(long, alias = "seed", value_name = "SEED")]
    pub suite: Option<u64>,
    #[arg(long)]
    pub family: Option<SceneFamily>,
    /// Ground-truth method; defaults to tracks3d, or simulator-exact with --suite.
    #[arg(long)]
    pub method: Option<GtMethod>,
    /// Comma-separated baselines: unit, height-ratio, height-ratio-corrected.
    #[arg(long, value_delimiter = ',')]
    pub baselines: Vec<BaselineKind>,
    /// Prediction file(s) for a single-sequence dataset, named by file stem.
    #[arg(long, value_name = "FILE")]
    pub predictions: Vec<PathBuf>,
    #[command(flatten)]
    pub flags: EvalFlags,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::Ok as i32;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first).line());
            return ExitCode::Usage as i32;
        }
    };
    let result = match &cli.command {
        Command::GenGt(a) => commands::gen_gt(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Eval(a) => commands::eval(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::Ok as i32
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.code as i32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_lines_are_single_line() {
        let e = CliError::new(ExitCode::Parse, "MalformedRecord", "line 3:\nbad");
        assert_eq!(e.line(), "ottc-error code=3 kind=MalformedRecord parse: line 3: bad");
    }

    #[test]
    fn risk_band_parsing() {
        assert_eq!(
            "0.99,1.01".parse::<RiskBand>().unwrap(),
            RiskBand { lower: 0.99, upper: 1.01 }
        );
        assert!("0.99".parse::<RiskBand>().is_err());
        assert!("a,b".parse::<RiskBand>().is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["ottc"]), 2);
        assert_eq!(run(["ottc", "frobnicate"]), 2);
        assert_eq!(run(["ottc", "gen-gt", "--method", "magic", "--out", "x"]), 2);
        assert_eq!(run(["ottc", "--version"]), 0);
    }

    #[test]
    fn flags_build_config() {
        let cli = Cli::try_parse_from([
            "ottc", "eval", "--annotations", "a", "--predictions", "p", "--out", "o",
            "--categories", "Car", "--risk-band", "0.99,1.01", "--match-mode", "center:8",
            "--missing-policy", "count-missing",
        ])
        .unwrap();
        let Command::Eval(args) = cli.command else { panic!() };
        let c = args.flags.config().unwrap();
        assert_eq!(c.categories.len(), 1);
        assert_eq!(c.match_mode, MatchMode::ByCenterRadius(8.0));
        assert_eq!(c.missing_policy, MissingPolicy::CountMissing);
        assert_eq!((c.risk_lower, c.risk_upper), (0.99, 1.01));
    }
}
