//! Symbol-frequency check over a corpus of generated tokens.

use std::collections::HashMap;

use poe_core::rng::seeded;
use poe_core::token::{random_token, TOKEN_CHARS};
use poe_core::Pwd;

const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
const CORPUS: usize = 10_000;

fn within_sigma(counts: &HashMap<u8, usize>, symbols: &[u8], trials: usize, sigmas: f64) {
    let p = 1.0 / symbols.len() as f64;
    let mean = trials as f64 * p;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    for s in symbols {
        let c = *counts.get(s).unwrap_or(&0) as f64;
        assert!(
            (c - mean).abs() <= sigmas * sd,
            "symbol {} seen {c} times, expected {mean:.1} +/- {:.1}",
            *s as char,
            sigmas * sd
        );
    }
    assert!(counts.keys().all(|k| symbols.contains(k)), "unexpected symbol");
}

#[test]
fn base32_symbols_are_uniform() {
    let mut rng = seeded(2024);
    let mut body = HashMap::new();
    let mut last = HashMap::new();
    for _ in 0..CORPUS {
        let t = random_token(&mut rng);
        assert_eq!(t.len(), TOKEN_CHARS);
        for (i, b) in t.bytes().enumerate() {
            let bucket = if i == TOKEN_CHARS - 1 { &mut last } else { &mut body };
            *bucket.entry(b).or_insert(0usize) += 1;
        }
    }
    within_sigma(&body, ALPHABET, CORPUS * (TOKEN_CHARS - 1), 5.0);

    // 128 = 25 * 5 + 3: the final symbol holds three data bits followed by two
    // zero bits, so only every fourth alphabet entry can appear there.
    let admissible: Vec<u8> = ALPHABET.iter().step_by(4).copied().collect();
    within_sigma(&last, &admissible, CORPUS, 5.0);
}

#[test]
fn passwords_do_not_repeat() {
    let mut rng = seeded(77);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..CORPUS {
        assert!(seen.insert(Pwd::generate(&mut rng).as_str().to_owned()));
    }
}
