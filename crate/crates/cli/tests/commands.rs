mod support;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use support::{code, csv_rows, ok, stderr, wordrep, Workspace};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/preprocess");

fn fixture(name: &str) -> String {
    Path::new(FIXTURES).join(name).to_string_lossy().into_owned()
}

#[test]
fn preprocess_matches_golden_output() {
    let ws = Workspace::new();
    let out = ws.arg("clean.txt");
    ok(&["preprocess", "--input", &fixture("input.txt"), "--output", &out, "-q"]);
    assert_eq!(ws.text("clean.txt"), fs::read_to_string(fixture("expected.txt")).unwrap());
    assert_eq!(ws.text("clean.txt.vocab"), fs::read_to_string(fixture("expected.vocab")).unwrap());

    let first = ws.read("clean.txt");
    ok(&["preprocess", "--input", &fixture("input.txt"), "--output", &out, "-q"]);
    assert_eq!(ws.read("clean.txt"), first);
}

#[test]
fn missing_input_names_the_path() {
    let ws = Workspace::new();
    let missing = ws.arg("nowhere.txt");
    let out = wordrep(&["preprocess", "--input", &missing, "--output", &ws.arg("o.txt")]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains(&missing), "{}", stderr(&out));
}

#[test]
fn exit_codes_follow_error_kind() {
    let ws = Workspace::new();
    let bad_method = wordrep(&[
        "train-repr", "--method", "lsa", "--corpus", &ws.arg("latent.txt"), "--output", &ws.arg("x.vec"),
    ]);
    assert_eq!(code(&bad_method), 2, "{}", stderr(&bad_method));

    let no_output = wordrep(&["train-tagger", "--train", &ws.arg("train.conll")]);
    assert_eq!(code(&no_output), 2);
    assert!(stderr(&no_output).contains("--output"), "{}", stderr(&no_output));

    fs::write(ws.path("broken.conll"), "the DT\nthe\n").unwrap();
    let malformed = wordrep(&["train-tagger", "--train", &ws.arg("broken.conll"), "--output", &ws.arg("m.model")]);
    assert_eq!(code(&malformed), 3, "{}", stderr(&malformed));

    let no_stage_one = wordrep(&[
        "search", "--mode", "updating-grid", "--representation",
        &format!("embedding:{}", ws.embeddings("sg.vec")),
        "--train", &ws.arg("train.conll"), "--dev", &ws.arg("dev.conll"), "--output", &ws.arg("grid.csv"),
    ]);
    assert_eq!(code(&no_stage_one), 4, "{}", stderr(&no_stage_one));
}

#[test]
fn brown_recovers_planted_classes() {
    let ws = Workspace::new();
    ok(&["cluster", "--corpus", &ws.arg("planted.txt"), "--output", &ws.arg("planted.brown"), "--clusters", "2", "-q"]);
    let mut paths: BTreeMap<String, String> = BTreeMap::new();
    for line in ws.text("planted.brown").lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        paths.insert(cols[1].to_string(), cols[0].to_string());
    }
    assert_eq!(paths["a"], paths["b"]);
    assert_eq!(paths["c"], paths["d"]);
    assert_ne!(paths["a"], paths["c"]);
}

fn load_vectors(text: &str) -> BTreeMap<String, Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(' ');
            let w = it.next().unwrap().to_string();
            (w, it.map(|x| x.parse().unwrap()).collect())
        })
        .collect()
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (n(a) * n(b))
}

#[test]
fn cbow_separates_blocks_and_is_reproducible() {
    let ws = Workspace::new();
    let run = |name: &str| {
        ok(&[
            "train-repr", "--method", "cbow", "--corpus", &ws.arg("blocks.txt"), "--output", &ws.arg(name),
            "--dim", "10", "--window", "3", "--deterministic", "-q",
        ]);
    };
    run("a.vec");
    run("b.vec");
    assert_eq!(ws.read("a.vec"), ws.read("b.vec"));

    let vecs = load_vectors(&ws.text("a.vec"));
    let blocks = [["a", "b", "c", "d", "e"], ["f", "g", "h", "i", "j"]];
    let (mut within, mut across) = (Vec::new(), Vec::new());
    for (bi, block) in blocks.iter().enumerate() {
        for (i, x) in block.iter().enumerate() {
            for y in &block[i + 1..] {
                within.push(cos(&vecs[*x], &vecs[*y]));
            }
            for y in &blocks[1 - bi] {
                across.push(cos(&vecs[*x], &vecs[*y]));
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&within) - mean(&across) > 0.0, "within {} across {}", mean(&within), mean(&across));
}

fn curve(ws: &Workspace, out: &str, extra: &[&str]) {
    let mut args = vec![
        "learning-curve".to_string(), "--train".into(), ws.arg("train.conll"), "--test".into(), ws.arg("test.conll"),
        "--output".into(), ws.arg(out), "--sizes".into(), "1,3,7".into(), "--epochs".into(), "2".into(),
        "--deterministic".into(), "-q".into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&refs);
}

#[test]
fn learning_curve_rows_and_rerun() {
    let ws = Workspace::new();
    let emb = format!("embedding:{}", ws.embeddings("sg.vec"));
    let reps = format!("onehot,{emb}");
    curve(&ws, "curve.csv", &["--representations", &reps, "--updating", "false,true"]);
    let (header, rows) = csv_rows(&ws.text("curve.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let mut per_method: BTreeMap<(String, String), usize> = BTreeMap::new();
    for r in &rows {
        assert_eq!(r[col("domain")], "in-domain");
        *per_method.entry((r[col("representation")].clone(), r[col("method")].clone())).or_default() += 1;
    }
    assert_eq!(per_method.len(), 3, "{per_method:?}");
    assert!(per_method.values().all(|&n| n == 3), "{per_method:?}");

    curve(&ws, "again.csv", &["--representations", &reps, "--updating", "false,true"]);
    assert_eq!(ws.read("curve.csv"), ws.read("again.csv"));
}

#[test]
fn learning_curve_reports_out_of_domain() {
    let ws = Workspace::new();
    curve(&ws, "ood.csv", &["--out-of-domain", &ws.arg("ood.conll")]);
    let (header, rows) = csv_rows(&ws.text("ood.csv"));
    let d = header.iter().position(|h| h == "domain").unwrap();
    assert_eq!(rows.iter().filter(|r| r[d] == "out-of-domain").count(), 3);
    assert!(ws.path("ood.oov.csv").exists());
}

#[test]
fn search_leaderboard_has_one_row_per_draw() {
    let ws = Workspace::new();
    ok(&[
        "search", "--train", &ws.arg("train.conll"), "--dev", &ws.arg("dev.conll"), "--output", &ws.arg("lb.csv"),
        "--draws", "3", "--epochs", "1", "--deterministic", "-q",
    ]);
    let (_, rows) = csv_rows(&ws.text("lb.csv"));
    assert_eq!(rows.len(), 3);
    assert!(ws.text("lb.best.toml").contains("score"));
}

fn pairs(before: &str, after: &str, out: &str, extra: &[&str]) {
    let mut args = vec!["export-pairs", "--before", before, "--after", after, "--output", out, "-q"];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn identical_embeddings_have_zero_displacement() {
    let ws = Workspace::new();
    let emb = ws.embeddings("sg.vec");
    pairs(&emb, &emb, &ws.arg("same.csv"), &["--mode", "random-k", "-k", "20"]);
    let (_, rows) = csv_rows(&ws.text("same.csv"));
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn random_pairs_are_reproducible_and_consistent() {
    let ws = Workspace::new();
    let before = ws.embeddings("sg.vec");
    let after = ws.arg("updated.vec");
    ok(&[
        "train-tagger", "--train", &ws.arg("train.conll"), "--output", &ws.arg("t.model"),
        "--representation", &format!("embedding:{before}"), "--update-reps", "--export-embeddings", &after,
        "--epochs", "2", "--deterministic", "-q",
    ]);
    pairs(&before, &after, &ws.arg("p1.csv"), &["--mode", "random-k", "-k", "60"]);
    pairs(&before, &after, &ws.arg("p2.csv"), &["--mode", "random-k", "-k", "60"]);
    assert_eq!(ws.read("p1.csv"), ws.read("p2.csv"));

    let (header, rows) = csv_rows(&ws.text("p1.csv"));
    assert_eq!(rows.len(), 60);
    let d = (header.len() - 2) / 2;
    for r in &rows {
        let b: Vec<f64> = r[2..2 + d].iter().map(|x| x.parse().unwrap()).collect();
        let a: Vec<f64> = r[2 + d..].iter().map(|x| x.parse().unwrap()).collect();
        let oracle = b.iter().zip(&a).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let reported: f64 = r[1].parse().unwrap();
        assert!((oracle - reported).abs() <= 1e-12 * (1.0 + oracle), "{oracle} vs {reported}");
    }
}

#[test]
fn absent_list_words_are_reported() {
    let ws = Workspace::new();
    let emb = ws.embeddings("sg.vec");
    pairs(&emb, &emb, &ws.arg("list.csv"), &[]);
    let skipped = ws.text("list.skipped.txt");
    assert!(skipped.lines().any(|w| w == "monday"));
    assert_eq!(skipped.lines().count(), 30);
}

#[test]
fn config_file_env_and_flags_layer() {
    let ws = Workspace::new();
    let cfg = ws.path("run.toml");
    fs::write(
        &cfg,
        format!(
            "[preprocess]\ninput = {:?}\noutput = {:?}\nnormalize_digits = false\n",
            fixture("input.txt"),
            ws.arg("from_file.txt")
        ),
    )
    .unwrap();
    ok(&["--config", cfg.to_str().unwrap(), "preprocess", "-q"]);
    assert!(ws.text("from_file.txt").contains("2019"));

    let out = std::process::Command::new(env!("CARGO_BIN_EXE_wordrep"))
        .args(["--config", cfg.to_str().unwrap(), "preprocess", "-q"])
        .env("WORDREP_OUTPUT", ws.path("from_env.txt"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(ws.path("from_env.txt").exists());

    ok(&[
        "--config", cfg.to_str().unwrap(), "preprocess", "--normalize-digits", "--output", &ws.arg("from_flag.txt"), "-q",
    ]);
    assert!(ws.text("from_flag.txt").contains("NUM4"));

    let snapshot = ws.path("from_flag.txt.config.toml");
    ok(&["--config", snapshot.to_str().unwrap(), "preprocess", "-q"]);
    assert_eq!(ws.read("from_flag.txt"), fs::read(fixture("expected.txt")).unwrap());

    fs::write(&cfg, "[preprocess]\nbogus = 1\n").unwrap();
    let unknown = wordrep(&["--config", cfg.to_str().unwrap(), "preprocess"]);
    assert_eq!(code(&unknown), 2);
}
