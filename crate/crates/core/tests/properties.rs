use std::collections::HashSet;

use ami_core::corpus::{self, Category, Dataset, LabeledTweet, LoadMode, Target};
use ami_core::evaluation::{accuracy, macro_f1};
use ami_core::features::TfidfVocabulary;
use ami_core::models::multiclass::argmax;
use ami_core::preprocess::{self, is_punct_or_symbol, lowercase, preprocess, PreprocessConfig, TokenSequence};
use proptest::prelude::*;

fn tweet_text() -> impl Strategy<Value = String> {
    prop_oneof![
        any::<String>(),
        "[A-Za-z'’ @#!?.,:/0-9-]{0,60}",
        proptest::collection::vec(
            prop_oneof![
                Just("I'll".to_string()),
                Just("can’t".to_string()),
                Just("https://t.co/Xy1".to_string()),
                Just("www.example.com".to_string()),
                Just("\u{1F644}".to_string()),
                Just("\u{1F469}\u{200D}\u{1F4BB}".to_string()),
                Just("#MeToo".to_string()),
                Just("@someone".to_string()),
                Just("WOMEN".to_string()),
                Just("running!!!".to_string()),
                "[a-zA-Z]{1,10}",
            ],
            0..12
        )
        .prop_map(|w| w.join(" ")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn preprocess_is_total_and_clean(text in tweet_text()) {
        let config = PreprocessConfig::default();
        let seq = preprocess("x", &text, &config);
        prop_assert_eq!(&seq, &preprocess("x", &text, &config));
        for t in &seq.tokens {
            prop_assert!(!t.is_empty());
            prop_assert!(t.chars().all(|c| !c.is_whitespace() && !is_punct_or_symbol(c)), "{:?}", t);
            prop_assert!(!t.chars().any(|c| config.is_emoji(c)), "{:?}", t);
            prop_assert_eq!(&lowercase(t), t);
        }
    }

    #[test]
    fn rerunning_only_restems(text in tweet_text()) {
        let config = PreprocessConfig::default();
        let once = preprocess("x", &text, &config).tokens;
        let twice = preprocess("x", &once.join(" "), &config).tokens;
        let expected: Vec<String> = preprocess::stem(preprocess::remove_stopwords(once, config.stopwords()));
        prop_assert_eq!(twice, expected);
    }

    #[test]
    fn tfidf_rows_are_unit_or_empty(docs in proptest::collection::vec(proptest::collection::vec("[a-e]{1,2}", 0..8), 1..12),
                                    probe in proptest::collection::vec("[a-g]{1,2}", 0..8)) {
        let corpus: Vec<TokenSequence> = docs.iter().enumerate()
            .map(|(i, d)| TokenSequence { source_id: i.to_string(), tokens: d.clone() })
            .collect();
        let vocab = TfidfVocabulary::fit(&corpus).unwrap();
        for d in docs.iter().chain(std::iter::once(&probe)) {
            let v = vocab.transform(d);
            let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
            prop_assert!(norm <= 1.0 + 1e-12);
            if !v.is_empty() {
                prop_assert!((norm - 1.0).abs() <= 1e-12);
            }
            prop_assert!(v.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn tfidf_ignores_corpus_order_and_test_documents(docs in proptest::collection::vec(proptest::collection::vec("[a-f]{1,2}", 1..6), 2..10),
                                                     test in proptest::collection::vec(proptest::collection::vec("[a-h]{1,2}", 1..6), 0..5)) {
        let seqs = |ds: &[Vec<String>]| -> Vec<TokenSequence> {
            ds.iter().map(|d| TokenSequence { source_id: String::new(), tokens: d.clone() }).collect()
        };
        let forward = TfidfVocabulary::fit(&seqs(&docs)).unwrap();
        let mut rev = docs.clone();
        rev.reverse();
        let backward = TfidfVocabulary::fit(&seqs(&rev)).unwrap();
        prop_assert_eq!(forward.terms(), backward.terms());
        let before: Vec<_> = docs.iter().map(|d| forward.transform(d)).collect();
        for t in &test {
            let _ = forward.transform(t);
        }
        for (d, b) in docs.iter().zip(&before) {
            prop_assert_eq!(&forward.transform(d), b);
            prop_assert_eq!(&backward.transform(d), b);
        }
    }

    #[test]
    fn split_is_a_deterministic_stratified_partition(labels in proptest::collection::vec(any::<bool>(), 4..120),
                                                      fraction in 0.2f64..0.8, seed in any::<u64>()) {
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let d = labelled(&labels);
        let Ok((a, b)) = corpus::split(&d, fraction, seed) else {
            // only legal when one side would be empty
            prop_assert!((fraction * labels.len() as f64).round() as usize == 0
                || (fraction * labels.len() as f64).round() as usize == labels.len());
            return Ok(());
        };
        let ids: Vec<&str> = a.ids().chain(b.ids()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        let mut expected: Vec<&str> = d.ids().collect();
        expected.sort();
        prop_assert_eq!(sorted, expected);
        prop_assert_eq!(a.len(), (fraction * labels.len() as f64).round() as usize);
        let pos = labels.iter().filter(|&&l| l).count() as f64;
        let pos_a = a.tweets.iter().filter(|t| t.misogynous).count() as f64;
        prop_assert!((pos_a - fraction * pos).abs() <= 1.0 + 1e-9);
        let (a2, b2) = corpus::split(&d, fraction, seed).unwrap();
        prop_assert_eq!(a.tweets, a2.tweets);
        prop_assert_eq!(b.tweets, b2.tweets);
    }

    #[test]
    fn dataset_round_trips(rows in proptest::collection::vec(("[a-z0-9]{1,8}", "[^\t\n\r]{0,40}", 0usize..6, any::<bool>()), 1..20)) {
        let mut seen = HashSet::new();
        let tweets: Vec<LabeledTweet> = rows.into_iter()
            .filter(|(id, ..)| seen.insert(id.clone()))
            .map(|(id, text, c, active)| {
                let category = if c == 0 { Category::None } else { Category::ALL[c - 1] };
                LabeledTweet {
                    id,
                    text,
                    misogynous: category != Category::None,
                    category,
                    target: match (category, active) {
                        (Category::None, _) => Target::None,
                        (_, true) => Target::Active,
                        (_, false) => Target::Passive,
                    },
                }
            })
            .collect();
        let d = Dataset::new(tweets, true);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tsv");
        d.write_tsv(&path).unwrap();
        let (back, issues) = Dataset::load(&path, true, LoadMode::Strict).unwrap();
        prop_assert!(issues.is_empty());
        prop_assert_eq!(back.tweets, d.tweets);
    }

    #[test]
    fn metrics_ignore_item_order(pairs in proptest::collection::vec((0u8..4, 0u8..4), 1..60), seed in any::<u64>()) {
        let classes = [0u8, 1, 2, 3];
        let gold: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        let mut s = seed;
        for i in (1..idx.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(i, (s >> 33) as usize % (i + 1));
        }
        let g2: Vec<u8> = idx.iter().map(|&i| gold[i]).collect();
        let p2: Vec<u8> = idx.iter().map(|&i| pred[i]).collect();
        prop_assert_eq!(accuracy(&gold, &pred).unwrap(), accuracy(&g2, &p2).unwrap());
        prop_assert_eq!(macro_f1(&gold, &pred, &classes).unwrap(), macro_f1(&g2, &p2, &classes).unwrap());
        let single = macro_f1(&gold, &pred, &classes[..1]).unwrap();
        let per_class = ami_core::evaluation::per_class_report(&gold, &pred, &classes).unwrap();
        prop_assert_eq!(single, per_class[0].f1);
    }

    #[test]
    fn argmax_survives_monotone_transforms(grid in proptest::collection::vec(1u32..1000, 2..8)) {
        let probs: Vec<f64> = grid.iter().map(|&k| k as f64 / 1000.0).collect();
        let best = argmax(&probs);
        let transforms: [fn(f64) -> f64; 4] = [f64::ln, |p| p * p * p + 2.0 * p, |p| 1.0 / (1.0 - p), |p| (5.0 * p).exp()];
        for f in transforms {
            let moved: Vec<f64> = probs.iter().map(|&p| f(p)).collect();
            prop_assert_eq!(argmax(&moved), best);
        }
    }
}

fn labelled(labels: &[bool]) -> Dataset {
    let tweets = labels
        .iter()
        .enumerate()
        .map(|(i, &m)| LabeledTweet {
            id: format!("{i:04}"),
            text: "t".into(),
            misogynous: m,
            category: if m { Category::Discredit } else { Category::None },
            target: if m { Target::Active } else { Target::None },
        })
        .collect();
    Dataset::new(tweets, true)
}
