// Independent reference implementations, shared with the CLI acceptance
// suite. None of these call into the code they check.

use std::collections::{BTreeSet, HashMap};

use discoctx::treebank::{DiscourseTree, RelationInstance};

/// (macro-F1, accuracy) by direct counting over the distinct gold labels.
pub fn brute_force_scores(gold: &[String], pred: &[String]) -> (f64, f64) {
    let classes: BTreeSet<&String> = gold.iter().collect();
    let mut f1_sum = 0.0;
    for c in &classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (g, p) in gold.iter().zip(pred) {
            match (g == *c, p == *c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        let prec = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let rec = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        f1_sum += if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
    }
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    let macro_f1 = if classes.is_empty() { 0.0 } else { f1_sum / classes.len() as f64 };
    let acc = if gold.is_empty() { 0.0 } else { correct as f64 / gold.len() as f64 };
    (macro_f1, acc)
}

/// Two-sided Wilcoxon p by enumerating all sign assignments of the
/// non-zero differences' average ranks.
pub fn enumerated_wilcoxon_p(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let tol = 1e-9 * abs.iter().cloned().fold(0.0, f64::max);
    let ranks: Vec<f64> = abs
        .iter()
        .map(|x| {
            let below = abs.iter().filter(|y| **y < x - tol).count() as f64;
            let same = abs.iter().filter(|y| (**y - x).abs() <= tol).count() as f64;
            below + (same + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = (0..n).filter(|&k| d[k] > 0.0).map(|k| ranks[k]).sum();
    let (mut lower, mut upper) = (0u64, 0u64);
    for mask in 0u64..(1u64 << n) {
        let w: f64 = (0..n).filter(|&k| (mask >> k) & 1 == 1).map(|k| ranks[k]).sum();
        if w <= observed + 1e-9 {
            lower += 1;
        }
        if w >= observed - 1e-9 {
            upper += 1;
        }
    }
    (2.0 * lower.min(upper) as f64 / (1u64 << n) as f64).min(1.0)
}

/// Oracle context by walking parent pointers from the first argument,
/// at most `n` steps and never into ROOT, printed root-side first.
pub fn path_to_root_context(tree: &DiscourseTree, inst: &RelationInstance, n: usize) -> String {
    let parent: HashMap<usize, usize> = tree
        .edus
        .iter()
        .filter_map(|e| e.head.map(|h| (e.id, h)))
        .collect();
    let text: HashMap<usize, &str> = tree.edus.iter().map(|e| (e.id, e.text.as_str())).collect();
    let mut chain = Vec::new();
    let mut cur = inst.arg1_edu_id;
    while chain.len() < n {
        match parent.get(&cur) {
            Some(&p) if p != 0 => {
                chain.push(text[&p]);
                cur = p;
            }
            _ => break,
        }
    }
    chain.reverse();
    chain.join(" ")
}

/// The sentence before the first argument's, for trees whose sentences end
/// exactly at EDUs whose text ends in ".". The second argument's EDU is left
/// out.
pub fn preceding_sentence_context(tree: &DiscourseTree, inst: &RelationInstance) -> String {
    let mut sentence_of = HashMap::new();
    let mut s = 0usize;
    let mut ids: Vec<usize> = tree.edus.iter().map(|e| e.id).filter(|id| *id != 0).collect();
    ids.sort_unstable();
    let by_id: HashMap<usize, &str> = tree.edus.iter().map(|e| (e.id, e.text.as_str())).collect();
    for id in &ids {
        sentence_of.insert(*id, s);
        if by_id[id].trim_end().ends_with('.') {
            s += 1;
        }
    }
    let target = sentence_of[&inst.arg1_edu_id];
    if target == 0 {
        return String::new();
    }
    ids.iter()
        .filter(|id| sentence_of[*id] == target - 1 && **id != inst.arg2_edu_id)
        .map(|id| by_id[id])
        .collect::<Vec<_>>()
        .join(" ")
}
