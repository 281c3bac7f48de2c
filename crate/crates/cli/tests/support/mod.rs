//! Synthetic inputs and a runner for the `wordrep` binary.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wordrep::corpus::save_conll;
use wordrep::synth::{planted_two_class_corpus, two_block_corpus, LatentClassTask};

pub fn wordrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wordrep"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs the binary and panics with its stderr on failure.
pub fn ok(args: &[&str]) -> Output {
    let out = wordrep(args);
    assert!(out.status.success(), "wordrep {args:?} failed:\n{}", stderr(&out));
    out
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn write_sentences(path: &Path, sentences: &[Vec<String>]) {
    let text: String = sentences.iter().map(|s| s.join(" ") + "\n").collect();
    fs::write(path, text).unwrap();
}

/// Text corpora and CoNLL splits in a scratch directory.
pub struct Workspace {
    pub dir: TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        let task = LatentClassTask::default();
        write_sentences(&ws.path("latent.txt"), &task.corpus(8000, 1));
        write_sentences(&ws.path("blocks.txt"), &two_block_corpus(400, 8, 41));
        write_sentences(&ws.path("planted.txt"), &planted_two_class_corpus(300, 12, 0.1, 5));
        for (name, sentences, seed) in [("train", 40, 2), ("dev", 15, 3), ("test", 20, 4), ("ood", 20, 5)] {
            save_conll(&task.dataset(sentences, seed), ws.path(&format!("{name}.conll"))).unwrap();
        }
        ws
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    pub fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.path(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
    }

    pub fn text(&self, name: &str) -> String {
        String::from_utf8(self.read(name)).unwrap()
    }

    /// Small skip-gram vectors trained on the latent-class corpus.
    pub fn embeddings(&self, name: &str) -> String {
        let out = self.arg(name);
        if !self.path(name).exists() {
            ok(&[
                "train-repr",
                "--method",
                "skipgram",
                "--corpus",
                &self.arg("latent.txt"),
                "--output",
                &out,
                "--dim",
                "10",
                "--window",
                "2",
                "--epochs",
                "2",
                "--deterministic",
                "-q",
            ]);
        }
        out
    }
}

/// Parsed CSV: header plus rows.
pub fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}
