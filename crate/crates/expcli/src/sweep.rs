//! Seeded sweeps over games, architectures, radii and seeds, with one
//! metrics CSV per run, a merged CSV and a JSON manifest.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! runs/run_0003_cluster_networked_r1.0_s2.csv
//! metrics.csv
//! manifest.json
//! traces/run_0003_adoption.csv        (with trace_adoption)
//! checkpoints/run_0003/k_0009.txt     (with checkpoint_every)
//! ```

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use netmfc::env::GameKind;
use netmfc::exchange::AdoptionRecord;
use netmfc::learner::QParams;
use netmfc::orchestrator::{
    run_training_observed, Architecture, ExperimentConfig, MetricsRow, TrainingObserver,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const METRICS_HEADER: [&str; 8] = [
    "game",
    "architecture",
    "radius",
    "seed",
    "k",
    "t",
    "v_pop_hat",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputOptions {
    pub record_wall_time: bool,
    pub checkpoint_every: Option<usize>,
    pub trace_adoption: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub output_dir: PathBuf,
    pub games: Vec<GameKind>,
    pub architectures: Vec<Architecture>,
    pub radii: Vec<f64>,
    pub seeds: Vec<u64>,
    pub options: OutputOptions,
    /// Values for every field the axes do not vary.
    pub base: ExperimentConfig,
}

/// One training run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub id: usize,
    pub config: ExperimentConfig,
}

impl RunSpec {
    /// Radius as printed in metrics: one decimal at least, empty when the
    /// architecture has no communication radius.
    pub fn radius_label(&self) -> String {
        radius_label(&self.config)
    }

    pub fn file_stem(&self) -> String {
        let c = &self.config;
        let radius = match self.radius_label().as_str() {
            "" => String::new(),
            r => format!("_r{r}"),
        };
        format!(
            "run_{:04}_{}_{}{}_s{}",
            self.id,
            c.game.name(),
            c.architecture.name(),
            radius,
            c.seed
        )
    }
}

pub fn radius_label(config: &ExperimentConfig) -> String {
    if config.architecture != Architecture::Networked {
        return String::new();
    }
    let r = config.comm_radius;
    if r.fract() == 0.0 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

impl SweepSpec {
    /// A single run of `config`.
    pub fn single(config: ExperimentConfig, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            output_dir: output_dir.into(),
            games: vec![config.game],
            architectures: vec![config.architecture],
            radii: vec![config.comm_radius],
            seeds: vec![config.seed],
            options: OutputOptions::default(),
            base: config,
        }
    }

    /// Runs in id order: games, then architectures, then radii (networked
    /// only), then seeds.
    pub fn runs(&self) -> Vec<RunSpec> {
        let mut runs = Vec::new();
        for &game in &self.games {
            for &architecture in &self.architectures {
                let radii: &[f64] = if architecture == Architecture::Networked {
                    &self.radii
                } else {
                    &self.radii[..1]
                };
                for &comm_radius in radii {
                    for &seed in &self.seeds {
                        runs.push(RunSpec {
                            id: runs.len(),
                            config: ExperimentConfig {
                                game,
                                architecture,
                                comm_radius,
                                seed,
                                ..self.base.clone()
                            },
                        });
                    }
                }
            }
        }
        runs
    }

    pub fn validate(&self) -> Result<()> {
        if self.games.is_empty()
            || self.architectures.is_empty()
            || self.radii.is_empty()
            || self.seeds.is_empty()
        {
            bail!("every sweep axis needs at least one value");
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            bail!("seeds must be distinct, {dup} appears twice");
        }
        for run in self.runs() {
            run.config
                .validate()
                .with_context(|| format!("run {}", run.file_stem()))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Real numbers in metrics files carry 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn metrics_record(run: &RunSpec, row: &MetricsRow, record_wall_time: bool) -> [String; 8] {
    let c = &run.config;
    [
        c.game.name().to_string(),
        c.architecture.name().to_string(),
        run.radius_label(),
        c.seed.to_string(),
        row.k.to_string(),
        row.t.to_string(),
        format_real(row.v_pop_hat),
        format_real(if record_wall_time { row.wall_ms } else { 0.0 }),
    ]
}

/// One parsed metrics line.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MetricsRecord {
    pub game: String,
    pub architecture: String,
    pub radius: String,
    pub seed: u64,
    pub k: usize,
    pub t: u64,
    pub v_pop_hat: f64,
    pub wall_ms: f64,
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        bail!(
            "{} has header {:?}, expected {:?}",
            path.display(),
            header,
            METRICS_HEADER
        );
    }
    reader
        .deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("malformed row in {}", path.display()))
}

/// Writes through a temporary file and renames, so a crashed run never
/// leaves a half-written file under the final name.
fn write_atomically(
    path: &Path,
    fill: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    let mut out = BufWriter::new(File::create(&tmp)?);
    fill(&mut out)?;
    out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    fs::rename(&tmp, path)
}

fn write_csv(path: &Path, records: &[[String; 8]]) -> io::Result<()> {
    write_atomically(path, |out| {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(METRICS_HEADER)?;
        for r in records {
            writer.write_record(r)?;
        }
        writer.flush()
    })
}

/// Checkpoint and adoption-trace sink for one run.
struct RunObserver {
    checkpoint_dir: Option<PathBuf>,
    checkpoint_every: usize,
    trace: Option<csv::Writer<BufWriter<File>>>,
    error: Option<io::Error>,
}

impl RunObserver {
    fn keep(&mut self, result: io::Result<()>) {
        if let Err(e) = result {
            self.error.get_or_insert(e);
        }
    }
}

impl TrainingObserver for RunObserver {
    fn on_iteration(&mut self, row: &MetricsRow, policies: &[Arc<QParams>]) {
        let Some(dir) = &self.checkpoint_dir else {
            return;
        };
        if !(row.k + 1).is_multiple_of(self.checkpoint_every) {
            return;
        }
        let path = dir.join(format!("k_{:04}.txt", row.k));
        let result = write_atomically(&path, |out| write_checkpoint(out, policies));
        self.keep(result);
    }

    fn on_adoption(&mut self, k: usize, record: &AdoptionRecord) {
        let Some(trace) = &mut self.trace else { return };
        let result = trace
            .write_record([
                k.to_string(),
                record.round.to_string(),
                record.agent_id.to_string(),
                record.adopted_from.to_string(),
                format_real(record.sigma),
            ])
            .map_err(io::Error::from);
        self.keep(result);
    }
}

/// All agents' networks, in agent order, after an `agents N` line.
pub fn write_checkpoint<W: Write>(out: &mut W, policies: &[Arc<QParams>]) -> io::Result<()> {
    writeln!(out, "agents {}", policies.len())?;
    for p in policies {
        p.write_text(&mut *out)?;
    }
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<QParams>> {
    use std::io::BufRead;
    let mut input = io::BufReader::new(File::open(path)?);
    let mut header = String::new();
    input.read_line(&mut header)?;
    let n: usize = header
        .strip_prefix("agents ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| anyhow!("{} is not a checkpoint", path.display()))?;
    (0..n)
        .map(|_| QParams::read_text(&mut input).map_err(anyhow::Error::from))
        .collect()
}

fn execute_run(spec: &SweepSpec, run: &RunSpec) -> Result<PathBuf> {
    let out = &spec.output_dir;
    let stem = run.file_stem();
    let checkpoint_dir = match spec.options.checkpoint_every {
        Some(_) => {
            let dir = out.join("checkpoints").join(format!("run_{:04}", run.id));
            fs::create_dir_all(&dir)?;
            Some(dir)
        }
        None => None,
    };
    let trace = if spec.options.trace_adoption && run.config.architecture == Architecture::Networked
    {
        let dir = out.join("traces");
        fs::create_dir_all(&dir)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(
            dir.join(format!("run_{:04}_adoption.csv", run.id)),
        )?));
        w.write_record(["k", "round", "agent_id", "adopted_from", "sigma"])?;
        Some(w)
    } else {
        None
    };
    let mut observer = RunObserver {
        checkpoint_dir,
        checkpoint_every: spec.options.checkpoint_every.unwrap_or(1),
        trace,
        error: None,
    };
    let outcome = run_training_observed(&run.config, &mut observer)?;
    if let Some(mut trace) = observer.trace.take() {
        trace.flush()?;
    }
    if let Some(e) = observer.error {
        return Err(e).context("writing checkpoints or traces");
    }
    let records: Vec<[String; 8]> = outcome
        .metrics
        .iter()
        .map(|row| metrics_record(run, row, spec.options.record_wall_time))
        .collect();
    let path = out.join("runs").join(format!("{stem}.csv"));
    write_csv(&path, &records).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub id: usize,
    pub name: String,
    /// Metrics file relative to the output directory, when the run finished.
    pub file: Option<PathBuf>,
    pub error: Option<String>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub runs: Vec<RunReport>,
    pub merged: PathBuf,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &RunReport> {
        self.runs.iter().filter(|r| r.error.is_some())
    }

    pub fn all_ok(&self) -> bool {
        self.failures().next().is_none()
    }
}

/// Executes every run (concurrently on the current rayon pool), then writes
/// the merged CSV and the manifest. A failing run is recorded in the
/// manifest and does not stop the others.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.validate()?;
    let out = &spec.output_dir;
    fs::create_dir_all(out.join("runs"))
        .with_context(|| format!("cannot create {}", out.display()))?;
    let runs = spec.runs();
    let results: Vec<Result<PathBuf>> = runs.par_iter().map(|run| execute_run(spec, run)).collect();

    let mut merged = Vec::new();
    let mut reports = Vec::with_capacity(runs.len());
    for (run, result) in runs.iter().zip(results) {
        let (file, error) = match result {
            Ok(path) => {
                merged.extend(read_metrics(&path)?.into_iter().map(|r| csv_line(&r)));
                (path.strip_prefix(out).ok().map(Path::to_path_buf), None)
            }
            Err(e) => (None, Some(format!("{e:#}"))),
        };
        reports.push(RunReport {
            id: run.id,
            name: run.file_stem(),
            file,
            error,
            config: run.config.clone(),
        });
    }
    let merged_path = out.join("metrics.csv");
    write_csv(&merged_path, &merged)
        .with_context(|| format!("writing {}", merged_path.display()))?;
    let report = SweepReport {
        runs: reports,
        merged: PathBuf::from("metrics.csv"),
    };
    let manifest = serde_json::to_string_pretty(&report)?;
    write_atomically(&out.join("manifest.json"), |w| writeln!(w, "{manifest}"))
        .context("writing manifest.json")?;
    Ok(report)
}

fn csv_line(r: &MetricsRecord) -> [String; 8] {
    [
        r.game.clone(),
        r.architecture.clone(),
        r.radius.clone(),
        r.seed.to_string(),
        r.k.to_string(),
        r.t.to_string(),
        format_real(r.v_pop_hat),
        format_real(r.wall_ms),
    ]
}
