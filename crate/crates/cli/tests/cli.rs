use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

const BIN: &str = env!("CARGO_BIN_EXE_mapf-select");

fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok<S: AsRef<std::ffi::OsStr> + std::fmt::Debug>(args: &[S]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

/// A small synthetic benchmark plus a config with a one-point tuning grid.
fn small_bench(dir: &Path) {
    let config = r#"{
        "synth": { "grids_per_type": 1, "scenarios_per_grid": 3, "agent_counts_per_scenario": 4, "entries_per_scenario": 40 },
        "grid": { "max_depth": [3], "rounds": [20], "learning_rate": [0.3], "subsample": [1.0] },
        "folds": 3
    }"#;
    fs::write(dir.join("config.json"), config).unwrap();
    ok(&[
        "--seed".into(),
        "4".into(),
        "--config".into(),
        p(&dir.join("config.json")),
        "synth".into(),
        "--out".into(),
        p(&dir.join("bench")),
    ]);
}

/// synth output under `root/bench` → extract → train → evaluate → predict, into `out`.
fn pipeline(root: &Path, out: &Path) {
    let bench = root.join("bench");
    let features = out.join("features.csv");
    let train_dir = out.join("train");
    let global = vec![
        "--seed".to_string(),
        "4".into(),
        "--config".into(),
        p(&root.join("config.json")),
        "--cache-dir".into(),
        p(&out.join("cache")),
    ];
    let data = vec![
        "--features".to_string(),
        p(&features),
        "--results".into(),
        p(&bench.join("results.csv")),
        "--taxonomy".into(),
        p(&bench.join("taxonomy.json")),
    ];
    let cmd = |parts: &[&[String]]| -> Vec<String> { parts.concat() };
    let s = |xs: &[&str]| -> Vec<String> { xs.iter().map(|x| x.to_string()).collect() };

    ok(&cmd(&[
        &global,
        &s(&["extract", "--maps"]),
        &[
            p(&bench.join("maps")),
            "--scens".into(),
            p(&bench.join("scens")),
        ],
        &[
            "--results".into(),
            p(&bench.join("results.csv")),
            "--out".into(),
            p(&features),
        ],
    ]));
    ok(&cmd(&[
        &global,
        &s(&["train"]),
        &data,
        &["--out".into(), p(&train_dir)],
    ]));
    ok(&cmd(&[
        &global,
        &s(&["evaluate"]),
        &data,
        &["--model".into(), p(&train_dir.join("model.json"))],
        &["--split".into(), p(&train_dir.join("split.json"))],
        &["--out".into(), p(&out.join("eval"))],
    ]));
    ok(&cmd(&[
        &s(&["predict", "--model"]),
        &[
            p(&train_dir.join("model.json")),
            "--features".into(),
            p(&features),
        ],
        &["--out".into(), p(&out.join("predictions.csv"))],
    ]));
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run::<&str>(&[]).status.code(), Some(1));
    assert_eq!(run(&["train", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(
        run(&["--threads", "0", "synth", "--out", "x"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, r#"{ "no_such_key": 1 }"#).unwrap();
    let r = run(&[
        "--config".into(),
        p(&config),
        "synth".into(),
        "--out".into(),
        p(dir.path()),
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let out = dir.path().join("o.csv");
    let r = run(&[
        "embed".into(),
        "--graph".into(),
        p(&missing),
        "--out".into(),
        p(&out),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.txt"));

    let map = dir.path().join("bad.map");
    fs::write(&map, "type octile\nheight 2\nwidth 2\nmap\n..\n").unwrap();
    let scen = dir.path().join("bad.scen");
    fs::write(&scen, "version 1\n").unwrap();
    let r = run(&[
        "features".into(),
        "--map".into(),
        p(&map),
        "--scen".into(),
        p(&scen),
        "--agents".into(),
        "1".into(),
        "--out".into(),
        p(&out),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}

/// Header and the single data row of a one-row CSV file.
fn one_row(path: &Path) -> (Vec<String>, Vec<f64>) {
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    let header = lines[0].split(',').map(str::to_string).collect();
    let row = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    (header, row)
}

#[test]
fn embed_and_features_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    fs::write(&graph, "4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let out = dir.path().join("e.csv");
    ok(&[
        "embed".into(),
        "--graph".into(),
        p(&graph),
        "--out".into(),
        p(&out),
    ]);
    let (header, row) = one_row(&out);
    assert_eq!((header.len(), row.len()), (500, 500));
    assert_eq!(header[0], "e0");

    ok(&[
        "embed".into(),
        "--graph".into(),
        p(&graph),
        "--order".into(),
        "2".into(),
        "--eval-points".into(),
        "10".into(),
        "--pooling".into(),
        "mean".into(),
        "--out".into(),
        p(&out),
    ]);
    assert_eq!(one_row(&out).1.len(), 2 * 2 * 10 * 2);
    let bad = run(&[
        "embed".into(),
        "--graph".into(),
        p(&graph),
        "--pooling".into(),
        "median".into(),
        "--out".into(),
        p(&out),
    ]);
    assert_eq!(bad.status.code(), Some(1));

    let map = dir.path().join("m.map");
    fs::write(&map, mapf_testkit::map_text(6, 4, &[true; 24])).unwrap();
    let scen = dir.path().join("m.scen");
    fs::write(
        &scen,
        "version 1\n0\tm.map\t6\t4\t0\t0\t5\t3\t8\n0\tm.map\t6\t4\t5\t0\t0\t3\t8\n",
    )
    .unwrap();
    for encoder in ["g2v", "fg2v"] {
        let out = dir.path().join(format!("{encoder}.csv"));
        ok(&[
            "embed".into(),
            "--map".into(),
            p(&map),
            "--scen".into(),
            p(&scen),
            "--agents".into(),
            "2".into(),
            "--encoder".into(),
            encoder.into(),
            "--out".into(),
            p(&out),
        ]);
        assert_eq!(one_row(&out).1.len(), 500);
    }
    let out = dir.path().join("f.csv");
    ok(&[
        "features".into(),
        "--map".into(),
        p(&map),
        "--scen".into(),
        p(&scen),
        "--agents".into(),
        "2".into(),
        "--out".into(),
        p(&out),
    ]);
    let (header, row) = one_row(&out);
    assert_eq!(header.len(), 20);
    let num_agents = header.iter().position(|h| h == "num_agents").unwrap();
    assert_eq!(row[num_agents], 2.0);
}

#[test]
fn pipeline_is_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    small_bench(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    pipeline(dir.path(), &a);
    pipeline(dir.path(), &b);
    for file in [
        "features.csv",
        "train/model.json",
        "train/cv.csv",
        "train/split.json",
        "eval/report.csv",
        "eval/report.json",
        "predictions.csv",
    ] {
        let (x, y) = (
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
        );
        assert!(x == y, "{file} differs between runs");
    }

    // a rerun against a warm cache reads every vector back
    let bench = dir.path().join("bench");
    let warm = a.join("again.csv");
    let started = Instant::now();
    let out = ok(&[
        "--cache-dir".into(),
        p(&a.join("cache")),
        "extract".into(),
        "--maps".into(),
        p(&bench.join("maps")),
        "--scens".into(),
        p(&bench.join("scens")),
        "--results".into(),
        p(&bench.join("results.csv")),
        "--out".into(),
        p(&warm),
    ]);
    let elapsed = started.elapsed();
    let log = String::from_utf8_lossy(&out.stderr);
    let line = log.lines().find(|l| l.contains("cached")).unwrap();
    let counts: Vec<usize> = line
        .split(|c: char| !c.is_ascii_digit())
        .filter_map(|t| t.parse().ok())
        .collect();
    assert_eq!(counts[0], counts[1], "{line}");
    assert_eq!(
        fs::read(&warm).unwrap(),
        fs::read(a.join("features.csv")).unwrap()
    );
    assert!(elapsed.as_secs_f64() < 5.0);
}
