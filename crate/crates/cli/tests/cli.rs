use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use muboost_core::synth::{generate_corpus, SynthConfig};
use muboost_core::RunConfig;

fn muboost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muboost"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    fn corpus(&self, name: &str, rows: usize, seed: u64) -> PathBuf {
        let p = self.path(name);
        generate_corpus(&SynthConfig {
            rows,
            posts: 80,
            seed,
            ..Default::default()
        })
        .unwrap()
        .write_csv(&p)
        .unwrap();
        p
    }

    fn fast_config(&self) -> PathBuf {
        self.write(
            "fast.cfg",
            "iterations = 30\ndepth = 4\nod_wait = 10\ndev_fraction = 0.1\n",
        )
    }
}

#[test]
fn shipped_presets_match_builtins() {
    assert_eq!(
        RunConfig::load(configs_dir().join("desk.cfg")).unwrap(),
        RunConfig::desk()
    );
    assert_eq!(
        RunConfig::load(configs_dir().join("full.cfg")).unwrap(),
        RunConfig::full()
    );
}

#[test]
fn stats_reports_and_handles_missing_files() {
    let ws = Workspace::new();
    let data = ws.corpus("c.csv", 300, 1);
    let csv_out = ws.path("stats.csv");
    let o = muboost(&["stats", "--data", s(&data), "--out", s(&csv_out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("row_count = 300"), "{text}");
    assert!(text.contains("class_fraction"), "{text}");
    assert!(std::fs::read_to_string(&csv_out)
        .unwrap()
        .starts_with("metric,value\n"));

    let o = muboost(&["stats", "--data", s(&ws.path("absent.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn stats_without_labels_omits_class_balance() {
    let ws = Workspace::new();
    let p = ws.write(
        "u.csv",
        "language,post_index,commentText,report_count_comment,report_count_post,like_count_comment,like_count_post\n\
         Hindi,p1,hello there,0,1,2,3\nTamil,p2,hi,1,1,0,0\n",
    );
    let o = muboost(&["stats", "--data", s(&p)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).contains("class_fraction"));
}

#[test]
fn train_predict_fuse_sweep_evaluate() {
    let ws = Workspace::new();
    let data = ws.corpus("c.csv", 1500, 2);
    let cfg = ws.fast_config();
    let model = ws.path("m.bin");
    let o = muboost(&[
        "train",
        "--data",
        s(&data),
        "--config",
        s(&cfg),
        "--model-out",
        s(&model),
        "--seeds",
        "1,2,3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("trained 3 members"));
    let log = std::fs::read_to_string(ws.path("m.bin.log.csv")).unwrap();
    assert!(log.starts_with("member_seed,iteration,train_logloss,train_f1,dev_f1\n"));
    for seed in ["1,", "2,", "3,"] {
        assert!(log.lines().skip(1).any(|l| l.starts_with(seed)));
    }

    let probs = ws.path("p.csv");
    let prefix = ws.path("member_");
    let o = muboost(&[
        "predict",
        "--model",
        s(&model),
        "--data",
        s(&data),
        "--out",
        s(&probs),
        "--threshold",
        "0.5",
        "--members-out",
        s(&prefix),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&probs).unwrap();
    assert!(text.starts_with("row_index,probability,label_at_threshold\n"));
    assert_eq!(text.lines().count(), 1501);

    let members: Vec<PathBuf> = (1..=3)
        .map(|i| ws.path(&format!("member_{i}.csv")))
        .collect();
    let inputs = members.iter().map(|p| s(p)).collect::<Vec<_>>().join(",");
    let fused = ws.path("f.csv");
    let o = muboost(&["fuse", "--inputs", &inputs, "--out", s(&fused)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let strip = |t: String| {
        t.lines()
            .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(std::fs::read_to_string(&fused).unwrap()), strip(text));

    let o = muboost(&["sweep", "--probs", s(&fused), "--labels", s(&data)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("threshold,f1\n"));
    assert!(stdout(&o).contains("best_threshold="));

    let o = muboost(&["evaluate", "--probs", s(&fused), "--labels", s(&data)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("f1 = "));
}

#[test]
fn train_is_reproducible() {
    let ws = Workspace::new();
    let data = ws.corpus("c.csv", 800, 3);
    let cfg = ws.fast_config();
    let (a, b) = (ws.path("a.bin"), ws.path("b.bin"));
    for out in [&a, &b] {
        let o = muboost(&[
            "train",
            "--data",
            s(&data),
            "--config",
            s(&cfg),
            "--model-out",
            s(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(ws.path("a.bin.log.csv")).unwrap(),
        std::fs::read(ws.path("b.bin.log.csv")).unwrap()
    );
}

#[test]
fn invalid_config_key_is_a_usage_error() {
    let ws = Workspace::new();
    let data = ws.corpus("c.csv", 200, 4);
    let cfg = ws.write("bad.cfg", "depth = 4\nlearning_rte = 0.1\n");
    let o = muboost(&[
        "train",
        "--data",
        s(&data),
        "--config",
        s(&cfg),
        "--model-out",
        s(&ws.path("m.bin")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("learning_rte"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(muboost(&["train"]).status.code(), Some(1));
    assert_eq!(muboost(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(muboost(&["--help"]).status.code(), Some(0));
}

#[test]
fn predict_with_mismatched_schema_exits_two() {
    let ws = Workspace::new();
    let data = ws.corpus("c.csv", 600, 5);
    let model = ws.path("m.bin");
    let o = muboost(&[
        "train",
        "--data",
        s(&data),
        "--config",
        s(&ws.fast_config()),
        "--model-out",
        s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let wrong = ws.write("w.csv", "language,commentText\nHindi,hi\n");
    let o = muboost(&[
        "predict",
        "--model",
        s(&model),
        "--data",
        s(&wrong),
        "--out",
        s(&ws.path("p.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = muboost(&[
        "predict",
        "--model",
        s(&data),
        "--data",
        s(&data),
        "--out",
        s(&ws.path("p.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fuse_four_sources_is_the_uniform_mean() {
    let ws = Workspace::new();
    let files: Vec<PathBuf> = [0.9, 0.9, 0.9, 0.1]
        .iter()
        .enumerate()
        .map(|(i, p)| {
            ws.write(
                &format!("s{i}.csv"),
                &format!("row_index,probability\n0,{p}\n1,0.5\n"),
            )
        })
        .collect();
    let inputs = files.iter().map(|p| s(p)).collect::<Vec<_>>().join(",");
    let out = ws.path("f.csv");
    let o = muboost(&["fuse", "--inputs", &inputs, "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((values[0] - 0.7).abs() < 1e-15);
    assert_eq!(values[1], 0.5);

    let o = muboost(&[
        "fuse",
        "--inputs",
        &inputs,
        "--weights",
        "1,1",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let short = ws.write("short.csv", "row_index,probability\n0,0.2\n");
    let o = muboost(&[
        "fuse",
        "--inputs",
        &format!("{inputs},{}", s(&short)),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_worked_example_prints_049() {
    let ws = Workspace::new();
    let probs = ws.write(
        "p.csv",
        "row_index,probability\n0,0.46\n1,0.48\n2,0.50\n3,0.52\n",
    );
    let labels = ws.write("l.csv", "row_index,label\n0,0\n1,0\n2,1\n3,1\n");
    let out = ws.path("sweep.csv");
    let o = muboost(&[
        "sweep",
        "--probs",
        s(&probs),
        "--labels",
        s(&labels),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "best_threshold=0.49 best_f1=1\n");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 11 + 1);

    let o = muboost(&[
        "sweep",
        "--probs",
        s(&probs),
        "--labels",
        s(&labels),
        "--step",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
