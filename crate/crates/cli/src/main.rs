//! `hdrrt`: run, compare and sweep navigation episodes, export terrain.
//!
//! Exit status: 0 when every episode reached its target, 1 on a usage or
//! configuration error, 2 when the planner failed to reach a target.

mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use hdrrt::hd_rrt::TreeMode;
use hdrrt::terrain::{generate_terrain, write_heightmap};
use hdrrt::{Episode, EpisodeConfig64, EpisodeMetrics64, Outcome, Point};

use output::{Artifacts, OutDir};
use settings::Settings;

#[derive(Parser, Debug)]
#[command(name = "hdrrt", version, about = "Mapless 2.5D terrain navigation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seeds as `a..b` (end exclusive) or a comma list; each sets both
    /// `terrain.seed` and `episode.seed`.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads for multi-episode commands.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override one key, `key=value`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One episode with full artifacts.
    Run(Common),
    /// Pruned and full-tree runs on the same seeds.
    Compare(Common),
    /// Seeds crossed with `sweep.pairs` start/target pairs.
    Sweep(Common),
    /// Write the configured height field as a heightmap file.
    ExportTerrain(Common),
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Planner(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::Compare(c) => cmd_compare(&c),
        Command::Sweep(c) => cmd_sweep(&c),
        Command::ExportTerrain(c) => cmd_export(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Planner(msg)) => {
            eprintln!("planner failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("bad seed range `{spec}`"))?;
        let b: u64 = b.trim().parse().with_context(|| format!("bad seed range `{spec}`"))?;
        return Ok((a..b).collect());
    }
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().with_context(|| format!("bad seed `{s}`")))
        .collect()
}

fn load(common: &Common) -> Result<Settings> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => String::new(),
    };
    Settings::load(&text, &common.set)
}

/// Seeds from `--seeds`, or the configured seed when absent.
fn seeds_or_config(common: &Common, base: &EpisodeConfig64) -> Result<Vec<u64>> {
    let seeds = match &common.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![base.seed],
    };
    if seeds.is_empty() {
        bail!("`--seeds` selects no seeds");
    }
    Ok(seeds)
}

fn with_seed(base: &EpisodeConfig64, seed: u64) -> EpisodeConfig64 {
    let mut c = base.clone();
    c.seed = seed;
    c.terrain.seed = seed;
    c
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        bail!("`--jobs` must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| anyhow!("thread pool: {e}"))
}

/// Runs one episode, taking tree and graph snapshots every `every` ticks.
fn execute(config: &EpisodeConfig64, every: u64) -> Result<Artifacts> {
    let field = generate_terrain(&config.terrain).context("building terrain")?;
    let mut episode = Episode::new(config.clone(), &field).context("starting episode")?;
    let mut snapshots = Vec::new();
    while episode.step()? == Outcome::Running {
        if every > 0 && episode.tick() % every == 0 {
            snapshots.push((episode.tick(), episode.tree().snapshot(), episode.graph().snapshot()));
        }
    }
    Ok(Artifacts {
        config: config.clone(),
        metrics: episode.metrics().clone(),
        snapshots,
        final_tree: episode.tree().snapshot(),
        final_graph: episode.graph().snapshot(),
    })
}

fn run_all(configs: &[EpisodeConfig64], jobs: usize, every: u64) -> Result<Vec<Artifacts>> {
    let pool = pool(jobs)?;
    // indexed collect keeps input order whatever the scheduling
    pool.install(|| configs.par_iter().map(|c| execute(c, every)).collect())
}

fn cmd_run(common: &Common) -> Result<(), Failure> {
    let settings = load(common)?;
    let seeds = match &common.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![settings.episode.seed],
    };
    let config = match seeds.as_slice() {
        [seed] if common.seeds.is_some() => with_seed(&settings.episode, *seed),
        [_] => settings.episode.clone(),
        _ => return Err(anyhow!("`run` takes exactly one seed").into()),
    };
    let art = execute(&config, settings.snapshot_every)?;
    let out = OutDir::create(&common.out)?;
    out.write_episode("", &art)?;
    verdict(std::slice::from_ref(&art.metrics))
}

fn cmd_compare(common: &Common) -> Result<(), Failure> {
    let settings = load(common)?;
    let seeds = seeds_or_config(common, &settings.episode)?;
    let mut configs = Vec::new();
    for &seed in &seeds {
        for mode in [TreeMode::Pruned, TreeMode::FullTree] {
            let mut c = with_seed(&settings.episode, seed);
            c.mode = mode;
            configs.push(c);
        }
    }
    let arts = run_all(&configs, common.jobs, settings.snapshot_every)?;
    let out = OutDir::create(&common.out)?;
    for (k, pair) in arts.chunks(2).enumerate() {
        out.write_episode(&format!("seed{}/pruned/", seeds[k]), &pair[0])?;
        out.write_episode(&format!("seed{}/full_tree/", seeds[k]), &pair[1])?;
    }
    let pairs: Vec<(u64, &EpisodeMetrics64, &EpisodeMetrics64)> = arts
        .chunks(2)
        .zip(&seeds)
        .map(|(p, &s)| (s, &p[0].metrics, &p[1].metrics))
        .collect();
    out.write("compare_nodes.csv", &output::compare_nodes(&pairs))?;
    out.write("compare_summary.csv", &output::compare_summary(&pairs))?;
    let all: Vec<EpisodeMetrics64> = arts.into_iter().map(|a| a.metrics).collect();
    verdict(&all)
}

fn cmd_sweep(common: &Common) -> Result<(), Failure> {
    let settings = load(common)?;
    let seeds = match &common.seeds {
        Some(s) => parse_seeds(s)?,
        None => return Err(anyhow!("`sweep` needs `--seeds`").into()),
    };
    if seeds.is_empty() {
        return Err(anyhow!("`--seeds` selects no seeds").into());
    }
    let pairs: Vec<(Point, Point)> = if settings.sweep_pairs.is_empty() {
        vec![(settings.episode.start, settings.episode.target)]
    } else {
        settings.sweep_pairs.clone()
    };
    let mut configs = Vec::new();
    let mut labels = Vec::new();
    for &seed in &seeds {
        for (k, &(start, target)) in pairs.iter().enumerate() {
            let mut c = with_seed(&settings.episode, seed);
            c.start = start;
            c.target = target;
            c.validate().map_err(|e| anyhow!("sweep pair {k}: {e}"))?;
            configs.push(c);
            labels.push((seed, k));
        }
    }
    let arts = run_all(&configs, common.jobs, settings.snapshot_every)?;
    let out = OutDir::create(&common.out)?;
    for (art, (seed, k)) in arts.iter().zip(&labels) {
        out.write_episode(&format!("seed{seed}/pair{k}/"), art)?;
    }
    let rows: Vec<(u64, usize, &Artifacts)> = labels.iter().zip(&arts).map(|(&(s, k), a)| (s, k, a)).collect();
    out.write("sweep.csv", &output::sweep_rows(&rows))?;
    out.write("sweep_summary.txt", &output::sweep_summary(&rows))?;
    let all: Vec<EpisodeMetrics64> = arts.into_iter().map(|a| a.metrics).collect();
    verdict(&all)
}

fn cmd_export(common: &Common) -> Result<(), Failure> {
    let settings = load(common)?;
    let mut spec = settings.episode.terrain.clone();
    if let Some(s) = &common.seeds {
        match parse_seeds(s)?.as_slice() {
            [seed] => spec.seed = *seed,
            _ => return Err(anyhow!("`export-terrain` takes exactly one seed").into()),
        }
    }
    let field = generate_terrain(&spec).context("building terrain")?;
    let out = OutDir::create(&common.out)?;
    out.write("terrain.txt", &write_heightmap(&field))?;
    Ok(())
}

fn verdict(all: &[EpisodeMetrics64]) -> Result<(), Failure> {
    let failed: Vec<String> = all
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.success)
        .map(|(k, m)| format!("episode {k}: {}", m.outcome.as_str()))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Planner(failed.join(", ")))
    }
}
