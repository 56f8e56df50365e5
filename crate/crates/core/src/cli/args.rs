//! Command-line definitions and `--config` file merging.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::lifter::CvaeConfig;
use crate::ordinal::{DEFAULT_EPSILON_MM, TEMPERATURE_GT, TEMPERATURE_PREDICTED};

#[derive(Parser, Debug)]
#[command(name = "multipose", version, about = "Multi-hypothesis 2D-to-3D human pose lifting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset with train/val/test splits.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Train the CVAE or the baseline regressor.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Draw candidates and write the final pose of every method.
    #[command(args_override_self = true)]
    Infer(InferArgs),
    /// Per-method error report and table.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Error against the number of samples, as CSV and SVG.
    #[command(args_override_self = true)]
    Ablate(AblateArgs),
    /// Temperature sweep on a validation set.
    #[command(name = "tune-temp", args_override_self = true)]
    TuneTemp(TuneArgs),
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Flat `key=value` file; keys are long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Clone, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Generated 3D poses before rotation augmentation.
    #[arg(long, default_value_t = 1500)]
    pub num_poses: usize,
    #[arg(long, default_value_t = 0.5)]
    pub mirror_fraction: f64,
    #[arg(long, default_value_t = 5500.0)]
    pub camera_distance: f64,
    /// Comma-separated augmentation angles about the vertical axis.
    #[arg(long, default_value = "90,180,270", value_delimiter = ',')]
    pub rotations: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON_MM)]
    pub epsilon_mm: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Cvae,
    Baseline,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Latent 16, hidden 256, one block, 50 epochs.
    Desk,
    /// Latent 48, hidden 1024, two blocks, 200 epochs.
    Full,
}

#[derive(Args, Clone, Debug)]
pub struct Hyper {
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub decay_rate: Option<f64>,
    #[arg(long)]
    pub decay_every: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub k_train: Option<usize>,
}

impl Hyper {
    pub fn resolve(&self) -> Result<CvaeConfig> {
        let mut c = match self.preset {
            Preset::Desk => CvaeConfig::desk(),
            Preset::Full => CvaeConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { c.$target = v; })*
            };
        }
        set!(epochs => epochs, latent_dim => latent_dim, hidden_dim => hidden_dim, blocks => blocks,
            batch_size => batch_size, lr => base_lr, decay_rate => decay_rate, decay_every => decay_every,
            alpha => alpha, lambda1 => lambda1, lambda2 => lambda2, dropout => dropout, k_train => k_train);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Clone, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::Cvae)]
    pub model: ModelKind,
    /// Output checkpoint; defaults to `<out-dir>/<model>.ckpt`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    Gt,
    Noisy,
    File,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricArg {
    Mpjpe,
    PaMpjpe,
}

#[derive(Args, Clone, Debug)]
pub struct Scoring {
    /// Candidates drawn per item.
    #[arg(long, default_value_t = 200)]
    pub k_test: usize,
    /// Temperature for predicted (noisy or file) ordinals.
    #[arg(long, default_value_t = TEMPERATURE_PREDICTED)]
    pub temperature: f64,
    /// Temperature for ground-truth ordinals.
    #[arg(long, default_value_t = TEMPERATURE_GT)]
    pub temperature_gt: f64,
    /// Reference ordinals for the `ordinal-pred` method (`gt` disables it).
    #[arg(long, value_enum, default_value_t = SourceKind::Noisy)]
    pub ordinal_source: SourceKind,
    #[arg(long, default_value_t = 0.868)]
    pub ordinal_accuracy: f64,
    /// `ITEM <id>` + `ORDINAL` blocks, for `--ordinal-source file`.
    #[arg(long)]
    pub ordinal_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EPSILON_MM)]
    pub epsilon_mm: f64,
    /// Include uniform scale in Procrustes alignment (default).
    #[arg(long, overrides_with = "no_scale")]
    pub with_scale: bool,
    /// Rotation and translation only.
    #[arg(long, overrides_with = "with_scale")]
    pub no_scale: bool,
}

impl Scoring {
    pub fn scale(&self) -> bool {
        !self.no_scale
    }
}

#[derive(Args, Clone, Debug)]
pub struct InferArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Trained CVAE.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Trained baseline regressor; adds the `baseline` method.
    #[arg(long)]
    pub baseline_checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub scoring: Scoring,
}

#[derive(Args, Clone, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Evaluate an `estimates.csv` from `infer` instead of running models.
    #[arg(long, conflicts_with = "checkpoint")]
    pub predictions: Option<PathBuf>,
    #[arg(long, required_unless_present = "predictions")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub baseline_checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub scoring: Scoring,
}

#[derive(Args, Clone, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Adds Gaussian baseline-sampling series (oracle selection).
    #[arg(long)]
    pub baseline_checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "1,5,10,50,100,200", value_delimiter = ',')]
    pub ks: Vec<usize>,
    /// Baseline-sampling variances in mm^2.
    #[arg(long, default_value = "1,5,10,20,100,400", value_delimiter = ',')]
    pub variances: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MetricArg::Mpjpe)]
    pub metric: MetricArg,
    #[command(flatten)]
    pub scoring: Scoring,
}

#[derive(Args, Clone, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: Common,
    /// Validation dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(
        long,
        default_value = "0.05,0.1,0.2,0.3,0.5,0.7,0.9,1.2,1.5,2,3,5",
        value_delimiter = ','
    )]
    pub grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MetricArg::Mpjpe)]
    pub metric: MetricArg,
    #[command(flatten)]
    pub scoring: Scoring,
}

/// Turns `key=value` lines into `--key=value` tokens. Blank lines and lines
/// starting with `#` are skipped.
pub fn config_tokens(text: &str, path: &Path) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::parse(i + 1, msg).with_path(path);
        let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.starts_with('-') || k == "config" {
            return Err(bad("invalid key"));
        }
        match (k, v) {
            ("with-scale" | "with_scale", "true") | ("no-scale" | "no_scale", "false") => out.push("--with-scale".into()),
            ("with-scale" | "with_scale", "false") | ("no-scale" | "no_scale", "true") => out.push("--no-scale".into()),
            _ => out.push(format!("--{}={v}", k.replace('_', "-")).into()),
        }
    }
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(2);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Long flag name of a `--name` or `--name=value` token, with the two scale
/// switches folded into one setting.
fn flag_name(token: &str) -> Option<&str> {
    let name = token.strip_prefix("--")?.split('=').next()?;
    Some(if name == "no-scale" { "with-scale" } else { name })
}

/// Long flags of `subcommand`, and of every subcommand. Scale switches are
/// folded as in [`flag_name`].
fn known_flags(subcommand: Option<&str>) -> (Vec<String>, Vec<String>) {
    let cmd = Cli::command();
    let longs = |c: &clap::Command| -> Vec<String> {
        c.get_arguments()
            .filter_map(|a| a.get_long())
            .map(|l| flag_name(&format!("--{l}")).unwrap_or(l).to_string())
            .collect()
    };
    let own = cmd
        .get_subcommands()
        .find(|c| Some(c.get_name()) == subcommand)
        .map(longs)
        .unwrap_or_default();
    let any = cmd.get_subcommands().flat_map(longs).collect();
    (own, any)
}

/// Parses `args` (program name first). Values from a `--config` file are
/// dropped for flags given explicitly, so explicit flags win, and for flags
/// that belong to other subcommands, so one file can serve every command.
pub fn parse_args(args: Vec<OsString>) -> std::result::Result<Cli, ParseFailure> {
    let mut args = args;
    if let Some(path) = find_config(&args) {
        let text = std::fs::read_to_string(&path).map_err(|e| ParseFailure::Config(Error::from(e).with_path(&path)))?;
        let explicit: Vec<String> = args
            .iter()
            .skip(2)
            .filter_map(|a| flag_name(&a.to_string_lossy()).map(str::to_string))
            .collect();
        let (own, any) = known_flags(args.get(1).map(|a| a.to_string_lossy().into_owned()).as_deref());
        let mut tokens = Vec::new();
        for t in config_tokens(&text, &path).map_err(ParseFailure::Config)? {
            let token = t.to_string_lossy().into_owned();
            let name = flag_name(&token).unwrap_or_default();
            if !any.iter().any(|n| n == name) {
                return Err(ParseFailure::Config(Error::InvalidConfig(format!(
                    "{}: unknown key '{name}'",
                    path.display()
                ))));
            }
            if own.iter().any(|n| n == name) && !explicit.iter().any(|e| e == name) {
                tokens.push(t);
            }
        }
        args.splice(2..2, tokens);
    }
    Cli::try_parse_from(args).map_err(ParseFailure::Clap)
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Config(Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &str) -> Cli {
        parse_args(line.split_whitespace().map(OsString::from).collect()).unwrap()
    }

    #[test]
    fn defaults_resolve() {
        let Command::Ablate(a) = parse("multipose ablate --dataset d --checkpoint c").command else {
            panic!()
        };
        assert_eq!(a.ks, vec![1, 5, 10, 50, 100, 200]);
        assert_eq!(a.variances, vec![1.0, 5.0, 10.0, 20.0, 100.0, 400.0]);
        assert_eq!(a.scoring.ordinal_accuracy, 0.868);
        assert_eq!(a.scoring.epsilon_mm, 100.0);
        assert!(a.scoring.scale());
    }

    #[test]
    fn scale_flags_override_each_other() {
        let Command::Eval(e) = parse("multipose eval --dataset d --checkpoint c --no-scale").command else {
            panic!()
        };
        assert!(!e.scoring.scale());
        let Command::Eval(e) = parse("multipose eval --dataset d --checkpoint c --no-scale --with-scale").command else {
            panic!()
        };
        assert!(e.scoring.scale());
    }

    #[test]
    fn flags_beat_config_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "# comment\nseed = 5\nepochs=7\nlatent_dim=4\nwith-scale=false\n").unwrap();
        let line = format!("multipose train --dataset d --config {} --seed 9", cfg.display());
        let Command::Train(t) = parse(&line).command else { panic!() };
        assert_eq!(t.common.seed, 9);
        let c = t.hyper.resolve().unwrap();
        assert_eq!(c.epochs, 7);
        assert_eq!(c.latent_dim, 4);
        assert_eq!(c.hidden_dim, CvaeConfig::desk().hidden_dim);
    }

    #[test]
    fn list_flags_replace_config_lists() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "ks=1,2\nvariances=3\nno_scale=true\n").unwrap();
        let line = format!("multipose ablate --dataset d --checkpoint c --config={} --ks 4,8 --with-scale", cfg.display());
        let Command::Ablate(a) = parse(&line).command else { panic!() };
        assert_eq!(a.ks, vec![4, 8]);
        assert_eq!(a.variances, vec![3.0]);
        assert!(a.scoring.scale());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "epoch=3\n").unwrap();
        let line = format!("multipose train --dataset d --config {}", cfg.display());
        let args = line.split_whitespace().map(OsString::from).collect();
        assert!(matches!(parse_args(args), Err(ParseFailure::Config(_))));
    }

    #[test]
    fn bad_config_lines_are_rejected() {
        let p = Path::new("x.cfg");
        assert!(matches!(config_tokens("seed 5", p), Err(Error::Parse { line: 1, .. })));
        assert!(config_tokens("\nconfig=other", p).is_err());
        assert_eq!(config_tokens("k-test=5\n", p).unwrap(), vec![OsString::from("--k-test=5")]);
    }
}
