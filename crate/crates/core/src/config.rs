//! Flat `section.key = value` configuration text.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments of
//! the same key win, which is how command-line overrides are layered on top
//! of a file. `terrain.kind` picks the preset first; every other key then
//! adjusts it.

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::hd_rrt::TreeMode;
use crate::navigator::EpisodeConfig;
use crate::scalar::Scalar;
use crate::terrain::{TerrainKind, TerrainSpec};

/// Every accepted key, in the order [`render`] writes them.
pub const KEYS: &[&str] = &[
    "terrain.kind",
    "terrain.path",
    "terrain.seed",
    "terrain.width",
    "terrain.height",
    "terrain.resolution",
    "terrain.amplitude",
    "terrain.base",
    "terrain.feature_scale",
    "terrain.cliff_count",
    "terrain.cliff_height",
    "terrain.cliff_margin",
    "episode.start",
    "episode.target",
    "episode.max_ticks",
    "episode.seed",
    "episode.mode",
    "episode.stall_ticks",
    "episode.settle_ticks",
    "window.width",
    "window.height",
    "sensor.radius",
    "robot.speed",
    "tree.r_ext",
    "tree.saturation_threshold",
    "tree.extends_per_cycle",
    "tree.rebase_threshold",
    "feasibility.alpha_grad",
    "feasibility.beta_flat",
    "feasibility.meta_len",
    "cost.w_alpha",
    "cost.w_beta",
    "cost.lambda",
    "cost.delta",
    "cost.n_delta",
    "cost.reach_eps",
    "graph.k_nn",
];

/// `(key, value, line)` triples in file order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::ConfigSyntax {
                line: n + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::ConfigSyntax {
                line: n + 1,
                reason: "empty key".into(),
            });
        }
        out.push((k.to_string(), v.to_string(), n + 1));
    }
    Ok(out)
}

/// Splits a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::config(s, "override must look like key=value"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn num<V: FromStr>(key: &str, v: &str) -> Result<V> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}` as a number")))
}

fn point<T: Scalar>(key: &str, v: &str) -> Result<Point2<T>> {
    let (x, y) = v
        .split_once(',')
        .ok_or_else(|| Error::config(key, format!("expected `x,y`, got `{v}`")))?;
    Ok(Point2::new(num(key, x.trim())?, num(key, y.trim())?))
}

/// Builds a config from assignments, rejecting unknown keys. The result is
/// validated.
pub fn build<T: Scalar>(pairs: &[(String, String)]) -> Result<EpisodeConfig<T>> {
    for (k, _) in pairs {
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::config(k, "unknown key"));
        }
    }
    let last = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let seed: u64 = match last("terrain.seed") {
        Some(v) => num("terrain.seed", v)?,
        None => 0,
    };
    let mut config = EpisodeConfig::<T>::hilly(0);
    config.terrain = match last("terrain.kind").unwrap_or("hilly") {
        "hilly" => TerrainSpec::hilly(seed),
        "forest" => TerrainSpec::forest(seed),
        "flat" => {
            let mut t = TerrainSpec::flat(config.terrain.width_m, config.terrain.height_m, config.terrain.resolution);
            t.seed = seed;
            t
        }
        "file" => {
            let path = last("terrain.path").ok_or_else(|| Error::config("terrain.path", "required when terrain.kind = file"))?;
            TerrainSpec {
                kind: TerrainKind::Imported { path: PathBuf::from(path) },
                ..TerrainSpec::hilly(seed)
            }
        }
        other => {
            return Err(Error::config(
                "terrain.kind",
                format!("`{other}` is not one of hilly, forest, flat, file"),
            ))
        }
    };
    for (k, v) in pairs {
        apply(&mut config, k, v)?;
    }
    // the rebase threshold follows r_ext unless given
    if last("tree.rebase_threshold").is_none() {
        config.rebase_threshold = config.r_ext;
    }
    config.validate()?;
    Ok(config)
}

fn apply<T: Scalar>(c: &mut EpisodeConfig<T>, key: &str, v: &str) -> Result<()> {
    let t = &mut c.terrain;
    match key {
        "terrain.kind" | "terrain.path" => {}
        "terrain.seed" => t.seed = num(key, v)?,
        "terrain.width" => t.width_m = num(key, v)?,
        "terrain.height" => t.height_m = num(key, v)?,
        "terrain.resolution" => t.resolution = num(key, v)?,
        "terrain.amplitude" => t.amplitude = num(key, v)?,
        "terrain.base" => t.base = num(key, v)?,
        "terrain.feature_scale" => t.feature_scale = num(key, v)?,
        "terrain.cliff_count" => t.cliff_count = num(key, v)?,
        "terrain.cliff_height" => t.cliff_height = num(key, v)?,
        "terrain.cliff_margin" => t.cliff_margin = num(key, v)?,
        "episode.start" => c.start = point(key, v)?,
        "episode.target" => c.target = point(key, v)?,
        "episode.max_ticks" => c.max_ticks = num(key, v)?,
        "episode.seed" => c.seed = num(key, v)?,
        "episode.mode" => {
            c.mode = match v {
                "pruned" => TreeMode::Pruned,
                "full_tree" => TreeMode::FullTree,
                _ => return Err(Error::config(key, format!("`{v}` is not pruned or full_tree"))),
            }
        }
        "episode.stall_ticks" => c.stall_ticks = num(key, v)?,
        "episode.settle_ticks" => c.settle_ticks = num(key, v)?,
        "window.width" => c.window_w = num(key, v)?,
        "window.height" => c.window_h = num(key, v)?,
        "sensor.radius" => c.sensing_radius = num(key, v)?,
        "robot.speed" => c.speed = num(key, v)?,
        "tree.r_ext" => c.r_ext = num(key, v)?,
        "tree.saturation_threshold" => c.saturation_threshold = num(key, v)?,
        "tree.extends_per_cycle" => c.extends_per_cycle = num(key, v)?,
        "tree.rebase_threshold" => c.rebase_threshold = num(key, v)?,
        "feasibility.alpha_grad" => c.feasibility.alpha_grad = num(key, v)?,
        "feasibility.beta_flat" => c.feasibility.beta_flat = num(key, v)?,
        "feasibility.meta_len" => c.feasibility.meta_len = num(key, v)?,
        "cost.w_alpha" => c.cost.w_alpha = num(key, v)?,
        "cost.w_beta" => c.cost.w_beta = num(key, v)?,
        "cost.lambda" => c.cost.lambda = num(key, v)?,
        "cost.delta" => c.cost.delta = num(key, v)?,
        "cost.n_delta" => c.cost.n_delta = num(key, v)?,
        "cost.reach_eps" => c.cost.reach_eps = num(key, v)?,
        "graph.k_nn" => c.k_nn = num(key, v)?,
        _ => return Err(Error::config(key, "unknown key")),
    }
    Ok(())
}

/// Parses config text and layers `overrides` on top.
pub fn load<T: Scalar>(text: &str, overrides: &[(String, String)]) -> Result<EpisodeConfig<T>> {
    let mut pairs: Vec<(String, String)> = parse_pairs(text)?.into_iter().map(|(k, v, _)| (k, v)).collect();
    pairs.extend(overrides.iter().cloned());
    build(&pairs)
}

/// Writes every key of `c` back out in [`load`]'s format.
pub fn render<T: Scalar>(c: &EpisodeConfig<T>) -> String {
    let t = &c.terrain;
    let (kind, path) = match &t.kind {
        TerrainKind::Hilly if t.amplitude == T::zero() && t.cliff_count == 0 => ("flat", None),
        TerrainKind::Hilly => ("hilly", None),
        TerrainKind::Forest => ("forest", None),
        TerrainKind::Imported { path } => ("file", Some(path.display().to_string())),
    };
    let mode = match c.mode {
        TreeMode::Pruned => "pruned",
        TreeMode::FullTree => "full_tree",
    };
    let mut lines = vec![format!("terrain.kind = {kind}")];
    if let Some(p) = path {
        lines.push(format!("terrain.path = {p}"));
    }
    lines.extend([
        format!("terrain.seed = {}", t.seed),
        format!("terrain.width = {}", t.width_m),
        format!("terrain.height = {}", t.height_m),
        format!("terrain.resolution = {}", t.resolution),
        format!("terrain.amplitude = {}", t.amplitude),
        format!("terrain.base = {}", t.base),
        format!("terrain.feature_scale = {}", t.feature_scale),
        format!("terrain.cliff_count = {}", t.cliff_count),
        format!("terrain.cliff_height = {}", t.cliff_height),
        format!("terrain.cliff_margin = {}", t.cliff_margin),
        format!("episode.start = {},{}", c.start.x, c.start.y),
        format!("episode.target = {},{}", c.target.x, c.target.y),
        format!("episode.max_ticks = {}", c.max_ticks),
        format!("episode.seed = {}", c.seed),
        format!("episode.mode = {mode}"),
        format!("episode.stall_ticks = {}", c.stall_ticks),
        format!("episode.settle_ticks = {}", c.settle_ticks),
        format!("window.width = {}", c.window_w),
        format!("window.height = {}", c.window_h),
        format!("sensor.radius = {}", c.sensing_radius),
        format!("robot.speed = {}", c.speed),
        format!("tree.r_ext = {}", c.r_ext),
        format!("tree.saturation_threshold = {}", c.saturation_threshold),
        format!("tree.extends_per_cycle = {}", c.extends_per_cycle),
        format!("tree.rebase_threshold = {}", c.rebase_threshold),
        format!("feasibility.alpha_grad = {}", c.feasibility.alpha_grad),
        format!("feasibility.beta_flat = {}", c.feasibility.beta_flat),
        format!("feasibility.meta_len = {}", c.feasibility.meta_len),
        format!("cost.w_alpha = {}", c.cost.w_alpha),
        format!("cost.w_beta = {}", c.cost.w_beta),
        format!("cost.lambda = {}", c.cost.lambda),
        format!("cost.delta = {}", c.cost.delta),
        format!("cost.n_delta = {}", c.cost.n_delta),
        format!("cost.reach_eps = {}", c.cost.reach_eps),
        format!("graph.k_nn = {}", c.k_nn),
    ]);
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
