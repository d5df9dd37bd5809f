//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod dsp;
pub mod neural;
pub mod reports;

use ndarray::Array2;
use udm_core::alignment::{log_prob, TIE_EPS};
use udm_core::{PhonemeInventory, Posteriorgram};

pub fn inventory(n: usize) -> PhonemeInventory {
    let names = ["a", "b", "c", "d"];
    let body: Vec<String> = names[..n]
        .iter()
        .map(|s| format!(r#"{{"symbol":"{s}","mean_ms":100,"std_ms":20}}"#))
        .collect();
    PhonemeInventory::from_json(&format!(
        r#"{{"name":"t","blank_index":0,"symbols":[{}]}}"#,
        body.join(",")
    ))
    .unwrap()
}

/// Rows drawn from a coarse grid so that exact score ties are common.
pub fn posteriorgram(raw: &[Vec<u8>]) -> Posteriorgram {
    let width = raw[0].len();
    let mut probs = Array2::zeros((raw.len(), width));
    for (t, row) in raw.iter().enumerate() {
        let total: u32 = row.iter().map(|&v| v as u32).sum();
        for (c, &v) in row.iter().enumerate() {
            probs[[t, c]] = if total == 0 { 1.0 / width as f64 } else { v as f64 / total as f64 };
        }
    }
    Posteriorgram::new(probs, 62.5, 0).unwrap()
}

/// Every CTC state sequence for `phones` over `frames` frames, scored in frame
/// order. The winner is the best score; among scores equal within TIE_EPS, the sequence that
/// is largest when compared from the last frame backwards.
pub fn brute_force_ctc(post: &Posteriorgram, phones: &[usize]) -> Option<(f64, Vec<Option<usize>>)> {
    let n_states = 2 * phones.len() + 1;
    let label = |s: usize| if s.is_multiple_of(2) { None } else { Some(phones[s / 2]) };
    let frames = post.frames();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut seq = Vec::with_capacity(frames);

    fn walk(
        seq: &mut Vec<usize>,
        frames: usize,
        n_states: usize,
        phones: &[usize],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if seq.len() == frames {
            let last = *seq.last().unwrap();
            if last == n_states - 1 || last == n_states - 2 {
                visit(seq);
            }
            return;
        }
        let options: Vec<usize> = match seq.last() {
            None => vec![0, 1],
            Some(&s) => {
                let mut o = vec![s];
                if s + 1 < n_states {
                    o.push(s + 1);
                }
                let t = s + 2;
                if t < n_states && t % 2 == 1 && phones[t / 2] != phones[t / 2 - 1] {
                    o.push(t);
                }
                o
            }
        };
        for s in options {
            seq.push(s);
            walk(seq, frames, n_states, phones, visit);
            seq.pop();
        }
    }

    walk(&mut seq, frames, n_states, phones, &mut |states| {
        let score: f64 = states
            .iter()
            .enumerate()
            .map(|(t, &s)| log_prob(post.prob(t, label(s))))
            .sum();
        let better = match &best {
            None => true,
            Some((b, prev)) => {
                score > *b + TIE_EPS
                    || ((score - *b).abs() <= TIE_EPS && states.iter().rev().cmp(prev.iter().rev()).is_gt())
            }
        };
        if better {
            best = Some((score, states.to_vec()));
        }
    });
    best.map(|(score, states)| (score, states.into_iter().map(label).collect()))
}

pub fn naive_levenshtein(a: &[usize], b: &[usize]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let sub = naive_levenshtein(&a[1..], &b[1..]) + usize::from(a[0] != b[0]);
    let del = naive_levenshtein(&a[1..], b) + 1;
    let ins = naive_levenshtein(a, &b[1..]) + 1;
    sub.min(del).min(ins)
}

