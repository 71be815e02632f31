use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use collab_core::ingest::Condition;
use collab_core::metrics::{read_metrics_csv, read_metrics_json};
use collab_core::simulate::{ArmConfig, SimConfig};

fn collab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collab"))
        .args(args)
        .output()
        .expect("run collab")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        frames_min: 25,
        frames_max: 40,
        treatment: ArmConfig {
            teams: 4,
            proximity_mean: 0.7,
        },
        control: ArmConfig {
            teams: 3,
            proximity_mean: 0.9,
        },
        ..SimConfig::default()
    }
}

fn simulate(dir: &Path, config: &SimConfig) {
    let cfg = dir.join("sim.toml");
    fs::write(&cfg, config.to_toml()).unwrap();
    let o = collab(&[
        "simulate",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.join("data")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

const HEADER: &str = "image,category,score,x_min,y_min,x_max,y_max\n";

#[test]
fn simulate_analyze_compare() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &small_config(1));
    let manifest = dir.path().join("data/manifest.csv");
    let out = dir.path().join("out");
    let o = collab(&[
        "analyze",
        "--manifest",
        p(&manifest),
        "--out",
        p(&out),
        "--jobs",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let rows = read_metrics_csv(fs::File::open(out.join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 7);
    let ids: Vec<_> = rows.iter().map(|r| r.team_id.as_str()).collect();
    assert_eq!(ids[0], "treatment-01");
    assert_eq!(ids[6], "control-03");

    let o = collab(&[
        "compare",
        "--metrics",
        p(&out.join("metrics.csv")),
        "--indicator",
        "collaboration",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Treatment"), "{text}");
    assert!(text.contains("Mean (±SD)"));
    assert!(text.contains("F(1, 5)"));
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out.join("comparison_collaboration.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["df_within"], 5);
    assert!(report["cohens_d"].as_f64().unwrap() > 0.0);
    assert_eq!(report["groups"].as_array().unwrap().len(), 2);

    let o = collab(&[
        "compare",
        "--metrics",
        p(&out.join("metrics.csv")),
        "--indicator",
        "time",
        "--out",
        p(&dir.path().join("time.json")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("time.json").exists());
}

#[test]
fn json_output_format() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &small_config(2));
    let out = dir.path().join("out");
    let o = collab(&[
        "analyze",
        "--manifest",
        p(&dir.path().join("data/manifest.csv")),
        "--out",
        p(&out),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_metrics_json(fs::File::open(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 7);
    let o = collab(&["compare", "--metrics", p(&out.join("metrics.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = SimConfig::default();
    simulate(a.path(), &config);
    simulate(b.path(), &config);
    let files: Vec<_> = fs::read_dir(a.path().join("data"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(files.len(), 34);
    for f in files {
        assert_eq!(
            fs::read(a.path().join("data").join(&f)).unwrap(),
            fs::read(b.path().join("data").join(&f)).unwrap()
        );
    }
}

#[test]
fn simulate_rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "frames_min = 50\nframes_max = 10\n").unwrap();
    let o = collab(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("frames_min"), "{}", stderr(&o));
}

#[test]
fn empty_manifest_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.csv");
    fs::write(&manifest, "team_id,condition,detections_path\n").unwrap();
    let o = collab(&[
        "analyze",
        "--manifest",
        p(&manifest),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no sessions"));
}

#[test]
fn missing_and_corrupt_sessions_do_not_abort_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &small_config(3));
    let data = dir.path().join("data");
    fs::write(
        data.join("corrupt.csv"),
        format!("{HEADER}10-00-00.jpg,person,0.9,0,0,10,10\n10-00-00.jpg,person,0.9,50,0,10,10\n"),
    )
    .unwrap();
    let mut manifest = fs::read_to_string(data.join("manifest.csv")).unwrap();
    manifest.push_str("ghost,control,does-not-exist.csv\nbroken,treatment,corrupt.csv\n");
    fs::write(data.join("manifest.csv"), manifest).unwrap();

    let out = dir.path().join("out");
    let o = collab(&[
        "analyze",
        "--manifest",
        p(&data.join("manifest.csv")),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("team `ghost`"), "{err}");
    assert!(err.contains("does-not-exist.csv"), "{err}");
    assert!(
        err.contains("team `broken`") && err.contains("line 3"),
        "{err}"
    );
    let rows = read_metrics_csv(fs::File::open(out.join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 7);
}

#[test]
fn compare_with_one_condition_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("metrics.csv");
    fs::write(
        &metrics,
        "team_id,condition,level_of_collaboration_pct,time_on_task_s,frames_total,frames_with_pair,coverage\n\
         a,treatment,10,100,11,11,1\nb,treatment,12,90,10,10,1\n",
    )
    .unwrap();
    let o = collab(&["compare", "--metrics", p(&metrics)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("control"));
}

#[test]
fn compare_identical_groups_reports_zero_f() {
    let dir = tempfile::tempdir().unwrap();
    let metrics = dir.path().join("metrics.csv");
    let mut text = String::from(
        "team_id,condition,level_of_collaboration_pct,time_on_task_s,frames_total,frames_with_pair,coverage\n",
    );
    for (i, v) in [3.0, 5.0, 9.0].iter().enumerate() {
        for c in Condition::ALL {
            text.push_str(&format!("{c}{i},{c},{v},{},10,10,1\n", v * 100.0));
        }
    }
    fs::write(&metrics, text).unwrap();
    let o = collab(&["compare", "--metrics", p(&metrics)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("comparison_collaboration.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["f"], 0.0);
    assert_eq!(report["p"], 1.0);
    assert_eq!(report["cohens_d"], 0.0);
}

#[test]
fn custom_timestamp_pattern_and_min_score() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    // ghost person at 0.5 only counts with a lower threshold
    fs::write(
        &csv,
        format!(
            "{HEADER}cam_10.00.00.jpg,person,0.9,0,0,10,10\ncam_10.00.00.jpg,person,0.5,5,0,15,10\n\
             cam_10.00.10.jpg,person,0.9,0,0,10,10\ncam_10.00.10.jpg,person,0.95,0,0,10,10\n\
             cam_10.00.10.jpg,bottle,0.99,0,0,10,10\n"
        ),
    )
    .unwrap();
    let manifest = dir.path().join("m.csv");
    fs::write(
        &manifest,
        "team_id,condition,detections_path\nT,treatment,t.csv\n",
    )
    .unwrap();
    let run = |score: &str, out: &str| {
        collab(&[
            "analyze",
            "--manifest",
            p(&manifest),
            "--out",
            p(&dir.path().join(out)),
            "--timestamp-pattern",
            "cam_HH.MM.SS",
            "--min-score",
            score,
        ])
    };
    let o = run("0.7", "strict");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows =
        read_metrics_csv(fs::File::open(dir.path().join("strict/metrics.csv")).unwrap()).unwrap();
    assert_eq!(rows[0].level_of_collaboration, 100.0);
    assert_eq!(rows[0].time_on_task, 10.0);
    assert_eq!((rows[0].frames_with_pair, rows[0].frames_total), (1, 2));

    let o = run("0.4", "loose");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows =
        read_metrics_csv(fs::File::open(dir.path().join("loose/metrics.csv")).unwrap()).unwrap();
    assert_eq!(rows[0].level_of_collaboration, 75.0);
    assert_eq!(rows[0].coverage, 1.0);

    assert_eq!(run("1.5", "bad").status.code(), Some(2));
    let o = collab(&[
        "analyze",
        "--manifest",
        p(&manifest),
        "--out",
        p(dir.path()),
        "--timestamp-pattern",
        "frame",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn low_coverage_is_warned_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let config = SimConfig {
        drop_rate: 0.8,
        ..small_config(4)
    };
    simulate(dir.path(), &config);
    let o = collab(&[
        "analyze",
        "--manifest",
        p(&dir.path().join("data/manifest.csv")),
        "--out",
        p(&dir.path().join("out")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: team"), "{}", stderr(&o));
}

#[test]
fn report_writes_per_frame_data() {
    let dir = tempfile::tempdir().unwrap();
    simulate(
        dir.path(),
        &SimConfig {
            drop_rate: 0.2,
            ..small_config(5)
        },
    );
    let out = dir.path().join("report");
    let o = collab(&[
        "report",
        "--manifest",
        p(&dir.path().join("data/manifest.csv")),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let frames = fs::read_to_string(out.join("frames.csv")).unwrap();
    let mut lines = frames.lines();
    assert_eq!(
        lines.next().unwrap(),
        "team_id,condition,image,timestamp_s,elapsed_s,persons,overlap_ratio"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 7));
    assert!(rows.iter().any(|r| r[5] == "1" && r[6].is_empty()));
    assert!(rows.iter().any(|r| r[5] == "2" && !r[6].is_empty()));
    assert!(out.join("metrics.csv").exists());
    assert!(stdout(&o).contains("Time on task"));

    let o = collab(&[
        "report",
        "--manifest",
        p(&dir.path().join("data/manifest.csv")),
        "--out",
        p(&out),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("frames.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), rows.len());
}

#[test]
fn missing_manifest_and_bad_flags() {
    let o = collab(&[
        "analyze",
        "--manifest",
        "/nonexistent/m.csv",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = collab(&["compare", "--metrics", "m.csv", "--indicator", "mood"]);
    assert_eq!(o.status.code(), Some(2));
    let o = collab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["analyze", "compare", "simulate", "report"] {
        assert!(stdout(&o).contains(sub));
    }
}
