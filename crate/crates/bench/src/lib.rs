//! Deterministic workloads shared by the benchmarks.

use ami_core::preprocess::TokenSequence;

const WORDS: &[&str] = &[
    "women",
    "kitchen",
    "sandwich",
    "stupid",
    "bitch",
    "running",
    "amazing",
    "football",
    "weather",
    "politics",
    "driving",
    "cooking",
    "twitter",
    "beautiful",
    "hysterical",
    "coffee",
    "morning",
    "shut",
    "listen",
    "equality",
];

/// Xorshift, good enough to spread words and values.
struct Xs(u64);

impl Xs {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Raw tweet-like strings with URLs, mentions, contractions and emoji.
pub fn tweets(n: usize) -> Vec<String> {
    let mut rng = Xs(0x5eed);
    (0..n)
        .map(|i| {
            let mut t = format!("@user{i} ");
            for _ in 0..12 {
                t.push_str(WORDS[(rng.next() % WORDS.len() as u64) as usize]);
                t.push(' ');
            }
            t.push_str("you're SO wrong!!! \u{1F644} https://t.co/abc#tag");
            t
        })
        .collect()
}

/// Already-preprocessed token sequences over a vocabulary of `vocab` terms.
pub fn token_sequences(n: usize, vocab: usize) -> Vec<TokenSequence> {
    let mut rng = Xs(0xbeef);
    (0..n)
        .map(|i| TokenSequence {
            source_id: i.to_string(),
            tokens: (0..15).map(|_| format!("w{}", rng.next() % vocab as u64)).collect(),
        })
        .collect()
}

/// Dense rows with a noisy linear label.
pub fn dense_problem(n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = Xs(0xfeed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.unit() * 2.0 - 1.0).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
                .sum::<f64>()
                + 0.3 * (rng.unit() - 0.5)
                > 0.0
        })
        .collect();
    (rows, y)
}
