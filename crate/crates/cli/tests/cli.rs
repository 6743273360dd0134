//! End-to-end runs of the `rumorboost` binary against small fixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rumorboost")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// 24 labeled events; rumors carry question marks and an early comment
/// burst, non-rumors are quiet statements.
fn write_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("events.jsonl");
    let mut lines = Vec::new();
    for i in 0..24 {
        let rumor = i % 2 == 0;
        let text = if rumor {
            "真的假的？？？求证！！"
        } else {
            "今天天气不错。"
        };
        let interactions = if rumor {
            r#"[{"kind":"comment","t":1600000600},{"kind":"comment","t":1600003600},{"kind":"comment","t":1600007200}]"#
        } else {
            r#"[{"kind":"comment","t":1600090000}]"#
        };
        let label = if rumor { "rumor" } else { "nonrumor" };
        lines.push(format!(
            r#"{{"event_id":"e{i}","text":"{text}","post_time":1600000000,"user":{{"user_name":"u{i}","followers_count":{},"friends_count":3,"registration_time":1500000000}},"interactions":{interactions},"label":"{label}"}}"#,
            if rumor { 5000 + i } else { 10 + i },
        ));
    }
    fs::write(&path, lines.join("\n")).unwrap();
    path
}

#[test]
fn extract_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path());
    let out = dir.path().join("features.tsv");
    let res = run(&[
        "extract",
        data.to_str().unwrap(),
        "--deadline",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let table = fs::read_to_string(&out).unwrap();
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(header.len(), 24); // 23 features + label
    assert_eq!(lines.count(), 24);

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("features.tsv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "extract");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["elapsed_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn extract_deadline_all_vs_zero_differ_only_in_changing_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path());
    let out0 = dir.path().join("t0.tsv");
    let out_all = dir.path().join("tall.tsv");
    assert_exit(
        &run(&[
            "extract",
            data.to_str().unwrap(),
            "--deadline",
            "0",
            "--out",
            out0.to_str().unwrap(),
        ]),
        0,
    );
    assert_exit(
        &run(&[
            "extract",
            data.to_str().unwrap(),
            "--deadline",
            "all",
            "--out",
            out_all.to_str().unwrap(),
        ]),
        0,
    );
    let t0 = fs::read_to_string(&out0).unwrap();
    let tall = fs::read_to_string(&out_all).unwrap();
    assert_ne!(t0, tall);
    for (l0, la) in t0.lines().skip(1).zip(tall.lines().skip(1)) {
        let c0: Vec<&str> = l0.split('\t').collect();
        let ca: Vec<&str> = la.split('\t').collect();
        assert_eq!(
            c0[..20],
            ca[..20],
            "constant features must not move with the deadline"
        );
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path());
    let out = dir.path().join("x");
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "extract",
            data.to_str().unwrap(),
            "--deadline",
            "-1",
            "--out",
            out.to_str().unwrap(),
        ],
        vec![
            "train",
            data.to_str().unwrap(),
            "--trees",
            "0",
            "--out",
            out.to_str().unwrap(),
        ],
        vec![
            "train",
            data.to_str().unwrap(),
            "--learning-rate",
            "1.5",
            "--out",
            out.to_str().unwrap(),
        ],
        vec![
            "select",
            data.to_str().unwrap(),
            "--keep",
            "0",
            "--out",
            out.to_str().unwrap(),
        ],
        vec![
            "select",
            data.to_str().unwrap(),
            "--keep",
            "99",
            "--out",
            out.to_str().unwrap(),
        ],
        vec![
            "evaluate",
            data.to_str().unwrap(),
            "--folds",
            "1",
            "--out",
            out.to_str().unwrap(),
        ],
        vec![
            "sweep",
            data.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        vec![
            "sweep",
            data.to_str().unwrap(),
            "--deadlines",
            "0,4",
            "--grid-trees",
            "5",
            "--out",
            out.to_str().unwrap(),
        ],
    ];
    for args in cases {
        let res = run(&args);
        assert_exit(&res, 2);
    }
}

#[test]
fn train_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path());
    let model = dir.path().join("model.json");
    let res = run(&[
        "train",
        data.to_str().unwrap(),
        "--trees",
        "20",
        "--max-depth",
        "3",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);

    // identical invocation reproduces the model byte for byte
    let model2 = dir.path().join("model2.json");
    assert_exit(
        &run(&[
            "train",
            data.to_str().unwrap(),
            "--trees",
            "20",
            "--max-depth",
            "3",
            "--out",
            model2.to_str().unwrap(),
        ]),
        0,
    );
    assert_eq!(fs::read(&model).unwrap(), fs::read(&model2).unwrap());

    let preds = dir.path().join("preds.tsv");
    let res = run(&[
        "predict",
        model.to_str().unwrap(),
        data.to_str().unwrap(),
        "--out",
        preds.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let table = fs::read_to_string(&preds).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 24);
    for row in rows {
        let cols: Vec<&str> = row.split('\t').collect();
        assert_eq!(cols.len(), 4);
        let p_rumor: f64 = cols[1].parse().unwrap();
        let p_nonrumor: f64 = cols[2].parse().unwrap();
        assert!((p_rumor + p_nonrumor - 1.0).abs() <= 1e-12);
        // training data is separable, so the model should get it right
        let id: usize = cols[0][1..].parse().unwrap();
        let expected = if id.is_multiple_of(2) {
            "rumor"
        } else {
            "nonrumor"
        };
        assert_eq!(cols[3], expected);
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");

    // unlabeled events cannot train
    let unlabeled = dir.path().join("unlabeled.jsonl");
    fs::write(
        &unlabeled,
        r#"{"event_id":"a","text":"x","post_time":0,"user":{}}
{"event_id":"b","text":"y","post_time":0,"user":{}}"#,
    )
    .unwrap();
    assert_exit(
        &run(&[
            "train",
            unlabeled.to_str().unwrap(),
            "--trees",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]),
        3,
    );

    // missing input file
    assert_exit(
        &run(&[
            "extract",
            "/nonexistent/file.jsonl",
            "--out",
            out.to_str().unwrap(),
        ]),
        3,
    );

    // corrupt model file
    let data = write_fixture(dir.path());
    let bad_model = dir.path().join("bad.json");
    fs::write(&bad_model, "{\"format_version\": 1").unwrap();
    assert_exit(
        &run(&[
            "predict",
            bad_model.to_str().unwrap(),
            data.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]),
        3,
    );

    // model naming a feature the pipeline does not know
    let alien = dir.path().join("alien.json");
    fs::write(
        &alien,
        r#"{"format_version":1,"schema":["mystery_signal"],"config":{"trees":1,"max_depth":1,"learning_rate":0.2,"min_region_size":2,"seed":0},"rumor":{"base_score":0.5,"stages":[]},"nonrumor":{"base_score":0.5,"stages":[]}}"#,
    )
    .unwrap();
    assert_exit(
        &run(&[
            "predict",
            alien.to_str().unwrap(),
            data.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]),
        3,
    );

    // single-class dataset cannot cross-validate
    let single = dir.path().join("single.jsonl");
    let lines: Vec<String> = (0..10)
        .map(|i| {
            format!(r#"{{"event_id":"s{i}","text":"x","post_time":0,"user":{{}},"label":"rumor"}}"#)
        })
        .collect();
    fs::write(&single, lines.join("\n")).unwrap();
    assert_exit(
        &run(&[
            "evaluate",
            single.to_str().unwrap(),
            "--folds",
            "2",
            "--repeats",
            "1",
            "--trees",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]),
        3,
    );
}

#[test]
fn select_ranks_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path());
    let out = dir.path().join("importance.tsv");
    let res = run(&[
        "select",
        data.to_str().unwrap(),
        "--candidates",
        "all34",
        "--keep",
        "5",
        "--trees",
        "10",
        "--max-depth",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let table = fs::read_to_string(&out).unwrap();
    let data_rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data_rows.len(), 1 + 34); // header + every candidate
    assert!(table.contains("# selected (keep=5):"));
    let stdout = String::from_utf8_lossy(&res.stdout).to_string();
    assert!(stdout.contains("kept 5"));
}

#[test]
fn evaluate_and_sweep_produce_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path());

    let cv_out = dir.path().join("cv.tsv");
    let res = run(&[
        "evaluate",
        data.to_str().unwrap(),
        "--folds",
        "3",
        "--repeats",
        "2",
        "--trees",
        "10",
        "--max-depth",
        "2",
        "--seed",
        "7",
        "--out",
        cv_out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let table = fs::read_to_string(&cv_out).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 6); // header + 3 folds x 2 repeats
    let stdout = String::from_utf8_lossy(&res.stdout).to_string();
    assert!(stdout.contains("accuracy"), "stdout: {stdout}");

    let sweep_out = dir.path().join("sweep.tsv");
    let res = run(&[
        "sweep",
        data.to_str().unwrap(),
        "--deadlines",
        "0,4,8",
        "--folds",
        "3",
        "--repeats",
        "1",
        "--trees",
        "10",
        "--max-depth",
        "2",
        "--out",
        sweep_out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let table = fs::read_to_string(&sweep_out).unwrap();
    assert_eq!(table.lines().count(), 1 + 3);

    let grid_out = dir.path().join("grid.tsv");
    let res = run(&[
        "sweep",
        data.to_str().unwrap(),
        "--grid-trees",
        "5,10",
        "--grid-depth",
        "2",
        "--grid-rate",
        "0.2,0.5",
        "--folds",
        "3",
        "--repeats",
        "1",
        "--out",
        grid_out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    let table = fs::read_to_string(&grid_out).unwrap();
    assert_eq!(table.lines().count(), 1 + 4); // 2 tree counts x 1 depth x 2 rates
}

#[test]
fn quiet_suppresses_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_fixture(dir.path());
    let out = dir.path().join("features.tsv");
    let res = run(&[
        "--quiet",
        "extract",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&res, 0);
    assert!(res.stdout.is_empty());
}
