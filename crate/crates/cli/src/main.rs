mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Oracle,
    Network(PathBuf),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "oracle" => Ok(PolicySpec::Oracle),
            Some(("network", p)) if !p.is_empty() => Ok(PolicySpec::Network(p.into())),
            _ => Err(format!("expected `oracle` or `network:<checkpoint>`, got `{s}`")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pose-act", version, about = "Object pose estimation by discrete pose-update decisions")]
pub struct Cli {
    /// Config file of `section.key = value` lines (default: $POSE_ACT_CONFIG)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed of every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Decision policy: `oracle` or `network:<checkpoint>`
    #[arg(long, global = true, value_name = "POLICY")]
    pub policy: Option<PolicySpec>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// OBJ file, or `cube` for the built-in textured cube
    #[arg(long)]
    pub mesh: Option<String>,
    /// Directory of background images (default: procedural backgrounds)
    #[arg(long, value_name = "DIR")]
    pub backgrounds: Option<PathBuf>,
    /// Decision budget per episode
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Patch side in pixels (network checkpoints default to their own)
    #[arg(long)]
    pub patch_side: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SceneKind {
    /// Rendered scene with known ground truth
    Synth,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled training dataset
    GenData {
        /// OBJ files, or `cube`; repeat for several objects
        #[arg(long)]
        mesh: Vec<String>,
        #[arg(long, value_name = "DIR")]
        backgrounds: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Samples per seed group and object
        #[arg(long)]
        per_group: Option<usize>,
        /// Five comma-separated per-group counts, overriding --per-group
        #[arg(long, value_delimiter = ',', num_args = 5)]
        counts: Option<Vec<usize>>,
        #[arg(long)]
        patch_side: Option<usize>,
    },
    /// Train the network policy
    Train {
        #[command(flatten)]
        scene: SceneArgs,
        /// Train on a generated dataset instead of fresh samples
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Checkpoint path
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        replay_capacity: Option<usize>,
        #[arg(long)]
        replay_refresh: Option<usize>,
        #[arg(long, default_value_t = 100)]
        log_every: u64,
    },
    /// Track an object through a sequence
    Track {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, value_enum, default_value = "synth")]
        scene_kind: SceneKind,
        #[arg(long, default_value_t = 45)]
        frames: usize,
        /// Restart from ground truth every N frames
        #[arg(long)]
        reset_every: Option<usize>,
        /// Keep the object still
        #[arg(long)]
        r#static: bool,
        /// Per-decision JSON lines
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Initialize a pose without a detector
    Detect {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, value_enum, default_value = "synth")]
        scene_kind: SceneKind,
        #[arg(long)]
        grid_spacing: Option<f64>,
        #[arg(long)]
        rotations: Option<usize>,
        /// Heatmap PNG and seed vectors JSON go here
        #[arg(long, value_name = "DIR")]
        debug_dir: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Accuracy and runtime over seeded scenes
    Eval {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value_t = 20)]
        scenes: usize,
        /// Use ADI instead of ADD
        #[arg(long)]
        symmetric: bool,
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Convergence under growing initial deviations
    Robustness {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        scenes: Option<usize>,
        #[arg(long)]
        m_max: Option<u32>,
        #[arg(long)]
        delta: Option<u32>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Write a rendered scene and one patch stack as PNGs
    RenderDebug {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn report_error(kind: &str, code: u8, msg: String) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": msg, "kind": kind, "code": code }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_error("usage", 2, e.render().to_string().trim().to_string()),
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error("runtime", 1, format!("{e:#}")),
    }
}
