//! The built-in computing tasks: π by series, KMP matching, Levenshtein
//! distance and selection sort. Inputs are generated from the binding's
//! seed so results are reproducible.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workflow::{BindingKind, TaskBinding};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuiltinOutput {
    pub kind: BindingKind,
    /// Order-sensitive digest of the task's result.
    pub digest: u64,
    pub summary: String,
    /// Whether the result passed the task's own sanity check.
    pub check: bool,
}

/// Nilakantha series with `terms` correction terms:
/// `3 + 4/(2·3·4) - 4/(4·5·6) + ...`. The error after n terms is below the
/// next term, far inside `1/(2n+1)`.
pub fn pi_series(terms: u64) -> f64 {
    let mut sum = 3.0;
    let mut sign = 1.0;
    for k in 1..=terms {
        let a = 2.0 * k as f64;
        sum += sign * 4.0 / (a * (a + 1.0) * (a + 2.0));
        sign = -sign;
    }
    sum
}

/// Start offsets of every (possibly overlapping) occurrence of `pattern`.
pub fn kmp_search(text: &[u8], pattern: &[u8]) -> Vec<usize> {
    if pattern.is_empty() || pattern.len() > text.len() {
        return Vec::new();
    }
    let mut failure = vec![0usize; pattern.len()];
    let mut k = 0;
    for i in 1..pattern.len() {
        while k > 0 && pattern[i] != pattern[k] {
            k = failure[k - 1];
        }
        if pattern[i] == pattern[k] {
            k += 1;
        }
        failure[i] = k;
    }

    let mut hits = Vec::new();
    let mut q = 0;
    for (i, &c) in text.iter().enumerate() {
        while q > 0 && c != pattern[q] {
            q = failure[q - 1];
        }
        if c == pattern[q] {
            q += 1;
        }
        if q == pattern.len() {
            hits.push(i + 1 - q);
            q = failure[q - 1];
        }
    }
    hits
}

pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn selection_sort<T: Ord>(items: &mut [T]) {
    for i in 0..items.len() {
        let mut min = i;
        for j in i + 1..items.len() {
            if items[j] < items[min] {
                min = j;
            }
        }
        items.swap(i, min);
    }
}

pub fn seeded_text(len: usize, alphabet: &[u8], rng: &mut impl Rng) -> Vec<u8> {
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

pub fn seeded_array(len: usize, seed: u64) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1_000_000..=1_000_000)).collect()
}

/// Inputs of a KMP binding: (text, pattern).
pub fn kmp_inputs(text_len: u64, pattern_len: u64, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text = seeded_text(text_len as usize, b"abcd", &mut rng);
    let pattern = seeded_text(pattern_len as usize, b"abcd", &mut rng);
    (text, pattern)
}

/// Inputs of a Levenshtein binding: two strings over a DNA alphabet.
pub fn levenshtein_inputs(len_a: u64, len_b: u64, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = seeded_text(len_a as usize, b"acgt", &mut rng);
    let b = seeded_text(len_b as usize, b"acgt", &mut rng);
    (a, b)
}

fn fnv(values: impl IntoIterator<Item = u64>) -> u64 {
    values.into_iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
        v.to_le_bytes().iter().fold(h, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
    })
}

fn run_unchecked(binding: &TaskBinding) -> Result<BuiltinOutput> {
    let kind = binding.kind();
    Ok(match *binding {
        TaskBinding::PiCalculation { terms } => {
            let pi = pi_series(terms);
            let bound = 1.0 / (2.0 * terms as f64 + 1.0);
            BuiltinOutput {
                kind,
                digest: pi.to_bits(),
                summary: format!("pi ~ {pi:.15} after {terms} terms"),
                check: (pi - std::f64::consts::PI).abs() <= bound,
            }
        }
        TaskBinding::KmpMatch { text_len, pattern_len, seed } => {
            let (text, pattern) = kmp_inputs(text_len, pattern_len, seed);
            let hits = kmp_search(&text, &pattern);
            BuiltinOutput {
                kind,
                digest: fnv(hits.iter().map(|&h| h as u64)),
                summary: format!("{} matches of a {pattern_len}-char pattern in {text_len} chars", hits.len()),
                check: hits.iter().all(|&h| text[h..h + pattern.len()] == pattern[..]),
            }
        }
        TaskBinding::LevenshteinDistance { len_a, len_b, seed } => {
            let (a, b) = levenshtein_inputs(len_a, len_b, seed);
            let d = levenshtein(&a, &b);
            BuiltinOutput {
                kind,
                digest: d as u64,
                summary: format!("edit distance {d} between strings of {len_a} and {len_b} chars"),
                check: d >= a.len().abs_diff(b.len()) && d <= a.len().max(b.len()),
            }
        }
        TaskBinding::SelectionSort { len, seed } => {
            let mut items = seeded_array(len as usize, seed);
            selection_sort(&mut items);
            BuiltinOutput {
                kind,
                digest: fnv(items.iter().map(|&v| v as u64)),
                summary: format!("sorted {len} integers"),
                check: items.windows(2).all(|w| w[0] <= w[1]),
            }
        }
        TaskBinding::SimulatedOnly => {
            return Err(Error::UnboundTask("simulated-only binding cannot run".into()));
        }
    })
}

/// Runs a bound built-in task. Panics inside the task surface as
/// [`Error::TaskPanic`].
pub fn run_builtin(binding: &TaskBinding) -> Result<BuiltinOutput> {
    match catch_unwind(AssertUnwindSafe(|| run_unchecked(binding))) {
        Ok(result) => result,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Err(Error::TaskPanic(msg))
        }
    }
}
