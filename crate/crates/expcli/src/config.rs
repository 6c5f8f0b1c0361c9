//! Command-line flags, presets and config files, resolved into a [`SweepSpec`].
//!
//! Layering, lowest priority first: the preset, then the `--config` TOML
//! file, then individual flags. `--game`, `--arch` and `--comm-radius`
//! accept comma-separated lists and become sweep axes.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, ValueEnum};
use netmfc::env::GameKind;
use netmfc::exchange::TauCommSchedule;
use netmfc::orchestrator::{Architecture, ExperimentConfig};

use crate::sweep::{OutputOptions, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Preset {
    /// 20×20 grid, 500 agents, 150 iterations.
    #[default]
    Full,
    /// 10×10 grid, 50 agents, 50 iterations.
    Desk,
}

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        match self {
            Preset::Full => ExperimentConfig::default(),
            Preset::Desk => ExperimentConfig::desk(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "netmfc-exp",
    version,
    about = "Train networked, central-agent and independent mean-field learners and record learning curves"
)]
pub struct Cli {
    /// Starting configuration before the config file and flags apply.
    #[arg(long, value_enum, default_value_t = Preset::Full)]
    pub preset: Preset,

    /// TOML file with any subset of the configuration fields.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Game(s) to run, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub game: Vec<GameKind>,

    /// Architecture(s) to run, comma-separated.
    #[arg(long = "arch", value_delimiter = ',')]
    pub architecture: Vec<Architecture>,

    /// Communication radius fraction(s) of the maximum grid distance.
    #[arg(long, value_delimiter = ',')]
    pub comm_radius: Vec<f64>,

    /// Number of seeds, counting up from `--seed`.
    #[arg(long)]
    pub seeds: Option<usize>,

    /// Explicit seed list; overrides `--seed` and `--seeds`.
    #[arg(long, value_delimiter = ',', conflicts_with = "seeds")]
    pub seed_list: Vec<u64>,

    #[command(flatten)]
    pub overrides: Overrides,

    #[arg(long, env = "MFC_OUT_DIR", default_value = "results")]
    pub out_dir: PathBuf,

    /// Record elapsed wall-clock time in the metrics. Off by default so that
    /// reruns produce identical files.
    #[arg(long)]
    pub record_wall_time: bool,

    /// Dump every agent's Q-network after every this many iterations.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,

    /// Write a per-round adoption trace for networked runs.
    #[arg(long)]
    pub trace_adoption: bool,

    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Print the resolved sweep as TOML and exit.
    #[arg(long)]
    pub dump_config: bool,
}

/// One optional flag per scalar configuration field.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Number of agents N.
    #[arg(long, short = 'n')]
    pub population: Option<usize>,
    #[arg(long)]
    pub vis_radius: Option<f64>,
    #[arg(long)]
    pub link_failure_prob: Option<f64>,
    /// Outer iterations K.
    #[arg(long, short = 'K')]
    pub iterations: Option<usize>,
    /// Collection steps per iteration M.
    #[arg(long, short = 'M')]
    pub collect_steps: Option<usize>,
    /// Training steps per iteration L.
    #[arg(long, short = 'L')]
    pub train_steps: Option<usize>,
    /// Evaluation steps E.
    #[arg(long, short = 'E')]
    pub eval_steps: Option<usize>,
    #[arg(long)]
    pub policy_rounds: Option<usize>,
    #[arg(long)]
    pub reward_rounds: Option<usize>,
    #[arg(long)]
    pub mean_field_rounds: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau_q: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub target_sync: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub hidden_width: Option<usize>,
    #[arg(long, conflicts_with = "fixed_tau_comm")]
    pub tau_comm_start: Option<f64>,
    #[arg(long, conflicts_with = "fixed_tau_comm")]
    pub tau_comm_end: Option<f64>,
    #[arg(long)]
    pub fixed_tau_comm: Option<f64>,
    #[arg(long)]
    pub population_independent_obs: bool,
    #[arg(long)]
    pub oracle_mean_field: bool,
    #[arg(long)]
    pub individual_reward_only: bool,
    #[arg(long)]
    pub oracle_average_reward: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        fn set<T: Copy>(slot: &mut T, value: Option<T>) {
            if let Some(v) = value {
                *slot = v;
            }
        }
        set(&mut cfg.height, self.height);
        set(&mut cfg.width, self.width);
        set(&mut cfg.population, self.population);
        set(&mut cfg.link_failure_prob, self.link_failure_prob);
        set(&mut cfg.iterations, self.iterations);
        set(&mut cfg.collect_steps, self.collect_steps);
        set(&mut cfg.train_steps, self.train_steps);
        set(&mut cfg.eval_steps, self.eval_steps);
        set(&mut cfg.policy_rounds, self.policy_rounds);
        set(&mut cfg.reward_rounds, self.reward_rounds);
        set(&mut cfg.mean_field_rounds, self.mean_field_rounds);
        set(&mut cfg.gamma, self.gamma);
        set(&mut cfg.tau_q, self.tau_q);
        set(&mut cfg.batch_size, self.batch_size);
        set(&mut cfg.clip, self.clip);
        set(&mut cfg.learning_rate, self.learning_rate);
        set(&mut cfg.hidden_width, self.hidden_width);
        set(&mut cfg.seed, self.seed);
        if self.vis_radius.is_some() {
            cfg.vis_radius = self.vis_radius;
        }
        if self.target_sync.is_some() {
            cfg.target_sync = self.target_sync;
        }
        if let Some(tau) = self.fixed_tau_comm {
            cfg.tau_comm = TauCommSchedule::Fixed(tau);
        } else if self.tau_comm_start.is_some() || self.tau_comm_end.is_some() {
            let (mut start, mut end) = match cfg.tau_comm {
                TauCommSchedule::Linear { start, end } => (start, end),
                TauCommSchedule::Fixed(t) => (t, t),
            };
            set(&mut start, self.tau_comm_start);
            set(&mut end, self.tau_comm_end);
            cfg.tau_comm = TauCommSchedule::Linear { start, end };
        }
        let a = &mut cfg.ablations;
        a.population_independent_obs |= self.population_independent_obs;
        a.oracle_mean_field |= self.oracle_mean_field;
        a.individual_reward_only |= self.individual_reward_only;
        a.oracle_average_reward |= self.oracle_average_reward;
    }
}

/// Overlays `file` onto `base`. Nested tables merge key by key, except the
/// tau_comm schedule, which is replaced whole.
fn merge(base: &mut toml::Table, file: toml::Table) {
    for (key, value) in file {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(inner)), toml::Value::Table(over)) if key != "tau_comm" => {
                merge(inner, over)
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Applies a TOML config file on top of `base`.
pub fn layer_config_file(base: &ExperimentConfig, text: &str) -> Result<ExperimentConfig> {
    let file: toml::Table = toml::from_str(text).context("config file is not valid TOML")?;
    let mut table = toml::Table::try_from(base).context("cannot serialise base configuration")?;
    merge(&mut table, file);
    table
        .try_into()
        .context("config file has an unknown field or a value of the wrong type")
}

pub fn load_config_file(base: &ExperimentConfig, path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    layer_config_file(base, &text).with_context(|| format!("in {}", path.display()))
}

/// Resolves parsed flags into a validated sweep.
pub fn parse_config(cli: &Cli) -> Result<SweepSpec> {
    let mut base = cli.preset.config();
    if let Some(path) = &cli.config {
        base = load_config_file(&base, path)?;
    }
    cli.overrides.apply(&mut base);

    let games = if cli.game.is_empty() {
        vec![base.game]
    } else {
        cli.game.clone()
    };
    let architectures = if cli.architecture.is_empty() {
        vec![base.architecture]
    } else {
        cli.architecture.clone()
    };
    let radii = if cli.comm_radius.is_empty() {
        vec![base.comm_radius]
    } else {
        cli.comm_radius.clone()
    };
    let seeds: Vec<u64> = if !cli.seed_list.is_empty() {
        cli.seed_list.clone()
    } else {
        let count = cli.seeds.unwrap_or(1);
        if count == 0 {
            bail!("--seeds must be at least 1");
        }
        (base.seed..base.seed + count as u64).collect()
    };
    base.game = games[0];
    base.architecture = architectures[0];
    base.comm_radius = radii[0];
    base.seed = seeds[0];

    if cli.checkpoint_every == Some(0) {
        bail!("--checkpoint-every must be at least 1");
    }
    let spec = SweepSpec {
        base,
        games,
        architectures,
        radii,
        seeds,
        output_dir: cli.out_dir.clone(),
        options: OutputOptions {
            record_wall_time: cli.record_wall_time,
            checkpoint_every: cli.checkpoint_every,
            trace_adoption: cli.trace_adoption,
        },
    };
    spec.validate()?;
    Ok(spec)
}
