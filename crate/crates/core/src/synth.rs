//! Synthetic corpora with known latent structure.

use rand::Rng;

use crate::corpus::{LabelledDataset, TaskKind};
use crate::rng::{seeded, SeededRng};

/// Sentences drawn entirely from either `{a..e}` or `{f..j}`.
pub fn two_block_corpus(sentences: usize, len: usize, seed: u64) -> Vec<Vec<String>> {
    const BLOCKS: [[&str; 5]; 2] = [["a", "b", "c", "d", "e"], ["f", "g", "h", "i", "j"]];
    let mut rng = seeded(seed);
    (0..sentences)
        .map(|s| {
            let block = &BLOCKS[s % 2];
            (0..len).map(|_| block[rng.gen_range(0..5)].to_string()).collect()
        })
        .collect()
}

/// Words `a, b` form class 0 and `c, d` class 1; classes alternate with
/// probability `1 - stay` and words are emitted uniformly within a class.
pub fn planted_two_class_corpus(sentences: usize, len: usize, stay: f64, seed: u64) -> Vec<Vec<String>> {
    const WORDS: [[&str; 2]; 2] = [["a", "b"], ["c", "d"]];
    let mut rng = seeded(seed);
    (0..sentences)
        .map(|_| {
            let mut class = rng.gen_range(0..2);
            (0..len)
                .map(|_| {
                    let w = WORDS[class][rng.gen_range(0..2)].to_string();
                    if !rng.gen_bool(stay) {
                        class = 1 - class;
                    }
                    w
                })
                .collect()
        })
        .collect()
}

/// Class-HMM generator: each class owns `words_per_class` types with Zipfian
/// frequencies, and each token's label is a fixed function of its class.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentClassTask {
    pub classes: usize,
    pub words_per_class: usize,
    pub labels: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for LatentClassTask {
    fn default() -> Self {
        LatentClassTask {
            classes: 8,
            words_per_class: 50,
            labels: 4,
            min_len: 6,
            max_len: 14,
        }
    }
}

impl LatentClassTask {
    pub fn word(&self, class: usize, index: usize) -> String {
        format!("c{class}w{index}")
    }

    pub fn label(&self, class: usize) -> String {
        format!("L{}", class % self.labels)
    }

    fn next_class(&self, class: usize, rng: &mut SeededRng) -> usize {
        let r: f64 = rng.gen();
        if r < 0.6 {
            (class + 1) % self.classes
        } else if r < 0.9 {
            (class + 3) % self.classes
        } else {
            rng.gen_range(0..self.classes)
        }
    }

    fn word_index(&self, rng: &mut SeededRng) -> usize {
        let total: f64 = (1..=self.words_per_class).map(|r| 1.0 / r as f64).sum();
        let mut u = rng.gen::<f64>() * total;
        for r in 1..=self.words_per_class {
            u -= 1.0 / r as f64;
            if u <= 0.0 {
                return r - 1;
            }
        }
        self.words_per_class - 1
    }

    fn sentence(&self, rng: &mut SeededRng) -> (Vec<String>, Vec<String>) {
        let len = rng.gen_range(self.min_len..=self.max_len);
        let mut class = rng.gen_range(0..self.classes);
        let mut words = Vec::with_capacity(len);
        let mut labels = Vec::with_capacity(len);
        for _ in 0..len {
            let i = self.word_index(rng);
            words.push(self.word(class, i));
            labels.push(self.label(class));
            class = self.next_class(class, rng);
        }
        (words, labels)
    }

    /// Unlabelled sentences totalling at least `tokens` tokens.
    pub fn corpus(&self, tokens: usize, seed: u64) -> Vec<Vec<String>> {
        let mut rng = seeded(seed);
        let mut out = Vec::new();
        let mut n = 0;
        while n < tokens {
            let (s, _) = self.sentence(&mut rng);
            n += s.len();
            out.push(s);
        }
        out
    }

    pub fn dataset(&self, sentences: usize, seed: u64) -> LabelledDataset {
        let mut rng = seeded(seed);
        let (words, labels) = (0..sentences).map(|_| self.sentence(&mut rng)).unzip();
        LabelledDataset {
            sentences: words,
            labels,
            task_kind: TaskKind::TokenClassification,
        }
    }
}
