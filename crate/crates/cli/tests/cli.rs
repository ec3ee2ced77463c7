use std::path::Path;
use std::process::{Command, Output};

fn hdrrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdrrt")).args(args).output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key}"))
        .to_string()
}

fn all_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const FLAT: &[&str] = &["--set", "terrain.kind=flat"];

#[test]
fn run_on_flat_ground_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hdrrt(&[&["run", "--out", out], FLAT].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read(dir.path(), "summary.txt");
    assert_eq!(summary_value(&s, "success"), "true");
    let csv = read(dir.path(), "trajectory.csv");
    assert_eq!(
        csv.lines().next().unwrap(),
        "tick,x,y,elev,node_count,graph_nodes,graph_edges,branch,subgoal_x,subgoal_y,cost"
    );
    assert_eq!(csv.lines().count() as u64, summary_value(&s, "ticks").parse::<u64>().unwrap() + 1);
    for f in ["path.csv", "decisions.csv", "tree_final.txt", "graph_final.txt", "config.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn bad_values_exit_1_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = hdrrt(&["run", "--out", out.to_str().unwrap(), "--set", "terrain.resolution=-0.2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolution"));
    assert!(!out.exists(), "nothing written on error");

    let o = hdrrt(&["run", "--out", out.to_str().unwrap(), "--set", "tree.colour=red"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tree.colour"));

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "robot.speed 0.5\n").unwrap();
    let o = hdrrt(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    assert_eq!(hdrrt(&["launch"]).status.code(), Some(1));
    assert_eq!(hdrrt(&["run", "--jobs", "many"]).status.code(), Some(1));
    assert_eq!(hdrrt(&["--help"]).status.code(), Some(0));
}

#[test]
fn planner_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hdrrt(&["run", "--out", out, "--set", "episode.max_ticks=3"]);
    assert_eq!(o.status.code(), Some(2));
    let s = read(dir.path(), "summary.txt");
    assert_eq!(summary_value(&s, "success"), "false");
    assert_eq!(summary_value(&s, "outcome"), "out_of_ticks");
}

#[test]
fn run_is_reproducible_with_snapshots() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "run".to_string(),
            "--out".into(),
            d.to_str().unwrap().into(),
            "--seeds".into(),
            "4".into(),
            "--set".into(),
            "output.snapshot_every=40".into(),
        ]
    };
    let run = |d: &Path| {
        let v = args(d);
        let v: Vec<&str> = v.iter().map(String::as_str).collect();
        hdrrt(&v)
    };
    assert_eq!(run(a.path()).status.code(), Some(0));
    assert_eq!(run(b.path()).status.code(), Some(0));
    let fa = all_files(a.path());
    assert!(fa.iter().any(|(n, _)| n.ends_with("tree_t000040.txt")));
    assert_eq!(fa, all_files(b.path()));
    assert_eq!(summary_value(&read(a.path(), "summary.txt"), "terrain_seed"), "4");
}

#[test]
fn compare_pairs_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hdrrt(&["compare", "--out", out, "--seeds", "0..2", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = read(dir.path(), "compare_summary.csv");
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let (pruned_peak, full_peak): (usize, usize) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!(full_peak >= pruned_peak);
    }
    assert!(dir.path().join("seed1/full_tree/trajectory.csv").exists());
    assert!(read(dir.path(), "compare_nodes.csv").starts_with("seed,tick,pruned_nodes,full_tree_nodes"));

    let o = hdrrt(&["compare", "--out", out, "--seeds", "5..5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_inside_the_first_window_matches_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hdrrt(&[
        &["compare", "--out", out, "--seeds", "3"],
        FLAT,
        &["--set", "episode.start=10,10", "--set", "episode.target=11.5,10.5"],
    ]
    .concat());
    assert_eq!(o.status.code(), Some(0));
    let nodes = read(dir.path(), "compare_nodes.csv");
    for line in nodes.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[2], f[3], "{line}");
    }
}

#[test]
fn sweep_crosses_seeds_and_pairs_deterministically() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = cfg_dir.path().join("sweep.cfg");
    std::fs::write(
        &cfg,
        "terrain.kind = flat\nsweep.pairs = 3,3 29,29; 28,4 5,27; 16,2 16,30\n",
    )
    .unwrap();
    let run = |jobs: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = hdrrt(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seeds",
            "0,1",
            "--jobs",
            jobs,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        dir
    };
    let a = run("1");
    let rows = read(a.path(), "sweep.csv");
    assert_eq!(rows.lines().count(), 7);
    let s = read(a.path(), "sweep_summary.txt");
    assert_eq!(summary_value(&s, "episodes"), "6");
    assert_eq!(summary_value(&s, "success_rate"), "1");
    let b = run("3");
    assert_eq!(all_files(a.path()), all_files(b.path()));

    let o = hdrrt(&["sweep", "--out", a.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exported_terrain_round_trips_through_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hdrrt(&["export-terrain", "--out", out, "--seeds", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let text = read(dir.path(), "terrain.txt");
    assert!(text.starts_with("160 160 0.2\n"));
    let field: hdrrt::HeightField64 = hdrrt::terrain::parse_heightmap(&text).unwrap();
    let original = hdrrt::generate_terrain(&hdrrt::TerrainSpec::<f64>::hilly(6)).unwrap();
    assert_eq!(field.elevations(), original.elevations());

    let generated = tempfile::tempdir().unwrap();
    let imported = tempfile::tempdir().unwrap();
    let path = dir.path().join("terrain.txt");
    let a = hdrrt(&["run", "--out", generated.path().to_str().unwrap(), "--seeds", "6"]);
    let b = hdrrt(&[
        "run",
        "--out",
        imported.path().to_str().unwrap(),
        "--seeds",
        "6",
        "--set",
        "terrain.kind=file",
        "--set",
        &format!("terrain.path={}", path.display()),
    ]);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(read(generated.path(), "trajectory.csv"), read(imported.path(), "trajectory.csv"));
}
