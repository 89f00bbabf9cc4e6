use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{extract_instances, DiscourseTree, TreebankError};

/// Gap histogram and derived fractions for one distance unit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GapStats {
    /// Signed gap (dependent minus head) to edge count.
    pub histogram: BTreeMap<i64, usize>,
    pub adjacent_fraction: f64,
    pub gap_3_to_5_fraction: f64,
}

impl GapStats {
    fn from_histogram(histogram: BTreeMap<i64, usize>, total: usize) -> Self {
        let count = |pred: fn(u64) -> bool| -> usize {
            histogram
                .iter()
                .filter(|(g, _)| pred(g.unsigned_abs()))
                .map(|(_, c)| c)
                .sum()
        };
        let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
        GapStats {
            adjacent_fraction: frac(count(|g| g == 1)),
            gap_3_to_5_fraction: frac(count(|g| (3..=5).contains(&g))),
            histogram,
        }
    }

    pub fn count_at(&self, abs_gap: u64) -> usize {
        self.histogram
            .iter()
            .filter(|(g, _)| g.unsigned_abs() == abs_gap)
            .map(|(_, c)| c)
            .sum()
    }
}

/// Dependency distances of every non-root edge, measured in EDUs and in
/// sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub total: usize,
    pub edu: GapStats,
    pub sentence: GapStats,
}

/// Distance statistics over `trees`. Sentence gaps rely on the trees'
/// `sentence_index` fields.
pub fn dependency_distance_stats(
    name: &str,
    trees: &[DiscourseTree],
) -> Result<DistanceStats, TreebankError> {
    if trees.is_empty() {
        return Err(TreebankError::EmptyCorpus(name.to_string()));
    }
    let partial = crate::par::map(trees, |tree| {
        let mut edu = BTreeMap::new();
        let mut sent = BTreeMap::new();
        let mut n = 0;
        for inst in extract_instances(tree) {
            let (Some(head), Some(dep)) = (tree.edu(inst.arg1_edu_id), tree.edu(inst.arg2_edu_id))
            else {
                continue;
            };
            *edu.entry(dep.id as i64 - head.id as i64).or_insert(0) += 1;
            *sent
                .entry(dep.sentence_index as i64 - head.sentence_index as i64)
                .or_insert(0) += 1;
            n += 1;
        }
        (edu, sent, n)
    });
    let mut edu = BTreeMap::new();
    let mut sent = BTreeMap::new();
    let mut total = 0;
    for (e, s, n) in partial {
        for (k, v) in e {
            *edu.entry(k).or_insert(0) += v;
        }
        for (k, v) in s {
            *sent.entry(k).or_insert(0) += v;
        }
        total += n;
    }
    Ok(DistanceStats {
        total,
        edu: GapStats::from_histogram(edu, total),
        sentence: GapStats::from_histogram(sent, total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{derive_sentence_indices, Edu};

    #[test]
    fn single_edge_is_adjacent() {
        let t = DiscourseTree::new(
            "d",
            vec![Edu::root(), Edu::new(1, 0, "ROOT", "a ."), Edu::new(2, 1, "x", "b .")],
        );
        let s = dependency_distance_stats("c", &[derive_sentence_indices(t)]).unwrap();
        assert_eq!(s.total, 1);
        assert_eq!(s.edu.adjacent_fraction, 1.0);
        assert_eq!(s.sentence.adjacent_fraction, 1.0);
    }

    #[test]
    fn counted_fixture_six_of_ten() {
        // Star around EDU 1: dependents 2..=7 are at gaps 1..=6, plus a chain
        // 8<-9<-10<-11 (three adjacent edges) and 12 hanging from 8 (gap 4).
        let mut edus = vec![Edu::root(), Edu::new(1, 0, "ROOT", "hub")];
        for id in 2..=7 {
            let head = if id == 2 { 1 } else { id - 1 };
            edus.push(Edu::new(id, head, "x", "t"));
        }
        // edges so far: 2->1 .. 7->6, all adjacent (6 edges)
        edus.push(Edu::new(8, 1, "x", "t")); // gap 7
        edus.push(Edu::new(9, 1, "x", "t")); // gap 8
        edus.push(Edu::new(10, 7, "x", "t")); // gap 3
        edus.push(Edu::new(11, 6, "x", "t")); // gap 5
        let t = DiscourseTree::new("d", edus);
        let s = dependency_distance_stats("c", &[t]).unwrap();
        assert_eq!(s.total, 10);
        assert_eq!(s.edu.adjacent_fraction, 0.6);
        assert_eq!(s.edu.gap_3_to_5_fraction, 0.2);
        assert_eq!(s.edu.histogram.values().sum::<usize>(), 10);
        assert_eq!(s.edu.count_at(7), 1);
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(dependency_distance_stats("c", &[]).is_err());
    }
}
