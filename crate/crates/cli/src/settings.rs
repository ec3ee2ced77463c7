//! Config text split into planner keys and harness-only keys.

use anyhow::{anyhow, bail, Result};

use hdrrt::config::{build, parse_override, parse_pairs};
use hdrrt::{EpisodeConfig64, Point};

#[derive(Debug, Clone)]
pub struct Settings {
    pub episode: EpisodeConfig64,
    /// Tree and graph snapshot interval in ticks; 0 keeps only the final ones.
    pub snapshot_every: u64,
    /// Start/target pairs crossed with the seeds by `sweep`.
    pub sweep_pairs: Vec<(Point, Point)>,
}

impl Settings {
    pub fn load(text: &str, overrides: &[String]) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = parse_pairs(text)?.into_iter().map(|(k, v, _)| (k, v)).collect();
        for o in overrides {
            pairs.push(parse_override(o)?);
        }
        let mut snapshot_every = 0;
        let mut sweep_pairs = Vec::new();
        let mut planner = Vec::new();
        for (k, v) in pairs {
            match k.as_str() {
                "output.snapshot_every" => {
                    snapshot_every = v
                        .parse()
                        .map_err(|_| anyhow!("invalid value for `output.snapshot_every`: `{v}`"))?
                }
                "sweep.pairs" => sweep_pairs = parse_pairs_list(&v)?,
                _ if k.starts_with("output.") || k.starts_with("sweep.") => {
                    bail!("invalid value for `{k}`: unknown key")
                }
                _ => planner.push((k, v)),
            }
        }
        Ok(Self {
            episode: build(&planner)?,
            snapshot_every,
            sweep_pairs,
        })
    }
}

/// `sx,sy tx,ty; sx,sy tx,ty; ...`
fn parse_pairs_list(v: &str) -> Result<Vec<(Point, Point)>> {
    let bad = || anyhow!("invalid value for `sweep.pairs`: expected `sx,sy tx,ty; ...`, got `{v}`");
    let point = |s: &str| -> Result<Point> {
        let (x, y) = s.split_once(',').ok_or_else(bad)?;
        Ok(Point::new(
            x.trim().parse().map_err(|_| bad())?,
            y.trim().parse().map_err(|_| bad())?,
        ))
    };
    v.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let ends: Vec<&str> = p.split_whitespace().collect();
            match ends.as_slice() {
                [a, b] => Ok((point(a)?, point(b)?)),
                _ => Err(bad()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harness_keys_are_split_off() {
        let s = Settings::load(
            "output.snapshot_every = 25\nsweep.pairs = 3,3 29,29; 28,4 5,27\nrobot.speed = 0.4\n",
            &["sweep.pairs=1,2 3,4".into()],
        )
        .unwrap();
        assert_eq!(s.snapshot_every, 25);
        assert_eq!(s.sweep_pairs, vec![(Point::new(1.0, 2.0), Point::new(3.0, 4.0))]);
        assert_eq!(s.episode.speed, 0.4);
    }

    #[test]
    fn bad_harness_values_name_the_key() {
        let e = Settings::load("sweep.pairs = 3,3\n", &[]).unwrap_err();
        assert!(e.to_string().contains("sweep.pairs"), "{e}");
        let e = Settings::load("output.colour = red\n", &[]).unwrap_err();
        assert!(e.to_string().contains("output.colour"), "{e}");
    }
}
