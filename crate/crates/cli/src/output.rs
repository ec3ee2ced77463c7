//! Artifact formats and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use hdrrt::config::render;
use hdrrt::hd_rrt::TreeMode;
use hdrrt::navigator::memory_proxy;
use hdrrt::{EpisodeConfig64, EpisodeMetrics64};

pub const TRAJECTORY_HEADER: &str = "tick,x,y,elev,node_count,graph_nodes,graph_edges,branch,subgoal_x,subgoal_y,cost";
pub const PATH_HEADER: &str = "x,y,elev";
pub const DECISIONS_HEADER: &str = "tick,n_local,n_global,branch,subgoal_x,subgoal_y,cost";

/// Everything one episode leaves behind.
pub struct Artifacts {
    pub config: EpisodeConfig64,
    pub metrics: EpisodeMetrics64,
    /// `(tick, tree snapshot, graph snapshot)`
    pub snapshots: Vec<(u64, String, String)>,
    pub final_tree: String,
    pub final_graph: String,
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    /// Writes `name` under the root through a temporary file in the same
    /// directory, so readers never see a partial file.
    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        let dir = path.parent().unwrap_or(&self.root);
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("staging {}", path.display()))?;
        tmp.write_all(contents.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
        tmp.persist(&path)
            .map_err(|e| e.error)
            .with_context(|| format!("renaming into {}", path.display()))?;
        Ok(())
    }

    /// The per-episode file set, names prefixed by `prefix`.
    pub fn write_episode(&self, prefix: &str, art: &Artifacts) -> Result<()> {
        self.write(&format!("{prefix}config.txt"), &render(&art.config))?;
        self.write(&format!("{prefix}trajectory.csv"), &trajectory_csv(&art.metrics))?;
        self.write(&format!("{prefix}path.csv"), &path_csv(&art.metrics))?;
        self.write(&format!("{prefix}decisions.csv"), &decisions_csv(&art.metrics))?;
        self.write(&format!("{prefix}summary.txt"), &summary(&art.config, &art.metrics))?;
        for (tick, tree, graph) in &art.snapshots {
            self.write(&format!("{prefix}snapshots/tree_t{tick:06}.txt"), tree)?;
            self.write(&format!("{prefix}snapshots/graph_t{tick:06}.txt"), graph)?;
        }
        self.write(&format!("{prefix}tree_final.txt"), &art.final_tree)?;
        self.write(&format!("{prefix}graph_final.txt"), &art.final_graph)?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn trajectory_csv(m: &EpisodeMetrics64) -> String {
    let mut s = format!("{TRAJECTORY_HEADER}\n");
    for r in &m.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.tick,
            r.position.x,
            r.position.y,
            r.elevation,
            r.node_count,
            r.graph_nodes,
            r.graph_edges,
            r.branch.as_str(),
            opt(r.subgoal.map(|p| p.x)),
            opt(r.subgoal.map(|p| p.y)),
            opt(r.cost),
        );
    }
    s
}

pub fn path_csv(m: &EpisodeMetrics64) -> String {
    let mut s = format!("{PATH_HEADER}\n");
    for (p, h) in &m.trajectory {
        let _ = writeln!(s, "{},{},{}", p.x, p.y, h);
    }
    s
}

pub fn decisions_csv(m: &EpisodeMetrics64) -> String {
    let mut s = format!("{DECISIONS_HEADER}\n");
    for d in &m.decisions {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            d.tick,
            d.n_local,
            d.n_global,
            d.branch.as_str(),
            opt(d.subgoal.map(|p| p.x)),
            opt(d.subgoal.map(|p| p.y)),
            opt(d.cost),
        );
    }
    s
}

fn mode_str(mode: TreeMode) -> &'static str {
    match mode {
        TreeMode::Pruned => "pruned",
        TreeMode::FullTree => "full_tree",
    }
}

/// `key=value` lines.
pub fn summary(c: &EpisodeConfig64, m: &EpisodeMetrics64) -> String {
    let fields: Vec<(&str, String)> = vec![
        ("success", m.success.to_string()),
        ("outcome", m.outcome.as_str().into()),
        ("mode", mode_str(c.mode).into()),
        ("terrain_seed", c.terrain.seed.to_string()),
        ("episode_seed", c.seed.to_string()),
        ("ticks", m.ticks.to_string()),
        ("path_length", m.path_length.to_string()),
        ("straight_distance", c.start.distance(c.target).to_string()),
        ("roughness", m.roughness.to_string()),
        ("peak_nodes", m.peak_nodes.to_string()),
        ("final_nodes", m.final_nodes.to_string()),
        ("graph_nodes", m.graph_nodes.to_string()),
        ("graph_edges", m.graph_edges.to_string()),
        ("memory_bytes", m.memory_bytes.to_string()),
        ("peak_memory_bytes", m.peak_memory_bytes.to_string()),
        ("rebases", m.rebases.len().to_string()),
        ("decisions", m.decisions.len().to_string()),
        ("hazard_violations", m.hazard_violations.to_string()),
    ];
    fields.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Paired node-count series, one row per tick of the longer run.
pub fn compare_nodes(pairs: &[(u64, &EpisodeMetrics64, &EpisodeMetrics64)]) -> String {
    let mut s = String::from("seed,tick,pruned_nodes,full_tree_nodes,pruned_memory_bytes,full_tree_memory_bytes\n");
    for (seed, pruned, full) in pairs {
        let len = pruned.rows.len().max(full.rows.len());
        for k in 0..len {
            let cell = |m: &EpisodeMetrics64| {
                m.rows.get(k).map_or((String::new(), String::new()), |r| {
                    (
                        r.node_count.to_string(),
                        memory_proxy::<f64>(r.node_count, r.graph_nodes).to_string(),
                    )
                })
            };
            let (pn, pm) = cell(pruned);
            let (fnodes, fm) = cell(full);
            let _ = writeln!(s, "{seed},{},{pn},{fnodes},{pm},{fm}", k + 1);
        }
    }
    s
}

pub fn compare_summary(pairs: &[(u64, &EpisodeMetrics64, &EpisodeMetrics64)]) -> String {
    let mut s = String::from(
        "seed,pruned_success,full_tree_success,pruned_peak_nodes,full_tree_peak_nodes,\
         pruned_final_nodes,full_tree_final_nodes,pruned_memory_bytes,full_tree_memory_bytes,final_node_ratio\n",
    );
    for (seed, p, f) in pairs {
        let ratio = f.final_nodes as f64 / p.final_nodes.max(1) as f64;
        let _ = writeln!(
            s,
            "{seed},{},{},{},{},{},{},{},{},{ratio}",
            p.success, f.success, p.peak_nodes, f.peak_nodes, p.final_nodes, f.final_nodes, p.memory_bytes, f.memory_bytes
        );
    }
    s
}

pub fn sweep_rows(rows: &[(u64, usize, &Artifacts)]) -> String {
    let mut s = String::from(
        "seed,pair,start_x,start_y,target_x,target_y,success,outcome,ticks,path_length,roughness,peak_nodes,hazard_violations\n",
    );
    for (seed, k, a) in rows {
        let (c, m) = (&a.config, &a.metrics);
        let _ = writeln!(
            s,
            "{seed},{k},{},{},{},{},{},{},{},{},{},{},{}",
            c.start.x,
            c.start.y,
            c.target.x,
            c.target.y,
            m.success,
            m.outcome.as_str(),
            m.ticks,
            m.path_length,
            m.roughness,
            m.peak_nodes,
            m.hazard_violations
        );
    }
    s
}

/// Aggregates over every episode of the sweep.
pub fn sweep_summary(rows: &[(u64, usize, &Artifacts)]) -> String {
    let n = rows.len();
    let successes = rows.iter().filter(|r| r.2.metrics.success).count();
    let mean = |f: &dyn Fn(&EpisodeMetrics64) -> f64| rows.iter().map(|r| f(&r.2.metrics)).sum::<f64>() / n as f64;
    format!(
        "episodes={n}\nsuccesses={successes}\nsuccess_rate={}\nmean_path_length={}\nmean_roughness={}\nmean_ticks={}\n",
        successes as f64 / n as f64,
        mean(&|m| m.path_length),
        mean(&|m| m.roughness),
        mean(&|m| m.ticks as f64),
    )
}
