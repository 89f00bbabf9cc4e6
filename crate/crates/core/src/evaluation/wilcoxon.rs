use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{EvaluationError, DEFAULT_ALPHA};

/// Largest number of non-zero differences tested with the exact null
/// distribution; above it a normal approximation is used.
pub const EXACT_MAX_N: usize = 20;

/// Relative tolerance under which two absolute differences share a rank.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
    /// No non-zero differences.
    Degenerate,
}

/// Paired comparison of condition `a` against condition `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub a: String,
    pub b: String,
    pub n_pairs: usize,
    pub n_effective: usize,
    /// Sum of ranks of positive `a − b` differences.
    pub w_plus: f64,
    pub method: PMethod,
    pub p_two_sided: f64,
    pub p_adjusted: f64,
    pub alpha: f64,
    pub significant: bool,
}

impl SignificanceResult {
    pub fn labelled(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.a = a.into();
        self.b = b.into();
        self
    }
}

/// Ranks of `values` (1-based), averaging over ties. Returned doubled so
/// they stay integral.
fn doubled_ranks(values: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut ranks = vec![0u64; values.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let head = values[order[start]];
        let mut end = start + 1;
        while end < order.len() && values[order[end]] - head <= TIE_TOLERANCE * scale {
            end += 1;
        }
        // positions start+1 ..= end share rank (start+1+end)/2
        for &k in &order[start..end] {
            ranks[k] = (start + 1 + end) as u64;
        }
        tie_sizes.push(end - start);
        start = end;
    }
    (ranks, tie_sizes)
}

/// Two-sided exact p from the null distribution of the doubled rank sum,
/// built by dynamic programming over the ranks.
fn exact_p(ranks: &[u64], observed: u64) -> f64 {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks.len() as i32);
    let lower: f64 = counts[..=observed as usize].iter().sum();
    let upper: f64 = counts[observed as usize..].iter().sum();
    (2.0 * lower.min(upper) / all).min(1.0)
}

fn normal_p(n: usize, w_plus: f64, tie_sizes: &[usize]) -> f64 {
    let n = n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let ties: f64 = tie_sizes
        .iter()
        .map(|&t| (t as f64).powi(3) - t as f64)
        .sum();
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::standard();
    (2.0 * std.sf(z)).min(1.0)
}

/// Wilcoxon signed-rank test on paired scores `a[i]`, `b[i]`.
///
/// Zero differences are dropped. The result carries the unadjusted p in
/// both `p_two_sided` and `p_adjusted`, judged at the default alpha; see
/// [`bonferroni`].
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<SignificanceResult, EvaluationError> {
    if a.len() != b.len() {
        return Err(EvaluationError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvaluationError::EmptySample);
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x != y)
        .map(|(x, y)| x - y)
        .collect();
    let n = diffs.len();
    let (w_plus, method, p) = if n == 0 {
        (0.0, PMethod::Degenerate, 1.0)
    } else {
        let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
        let (ranks, tie_sizes) = doubled_ranks(&abs);
        let w2: u64 = ranks
            .iter()
            .zip(&diffs)
            .filter(|(_, d)| **d > 0.0)
            .map(|(r, _)| r)
            .sum();
        let w_plus = w2 as f64 / 2.0;
        if n <= EXACT_MAX_N {
            (w_plus, PMethod::Exact, exact_p(&ranks, w2))
        } else {
            (w_plus, PMethod::Normal, normal_p(n, w_plus, &tie_sizes))
        }
    };
    Ok(SignificanceResult {
        a: "a".into(),
        b: "b".into(),
        n_pairs: a.len(),
        n_effective: n,
        w_plus,
        method,
        p_two_sided: p,
        p_adjusted: p,
        alpha: DEFAULT_ALPHA,
        significant: p < DEFAULT_ALPHA,
    })
}

/// Multiplies each p by the family size `m` (capped at 1) and judges
/// significance at `alpha`.
pub fn bonferroni(
    results: &mut [SignificanceResult],
    m: usize,
    alpha: f64,
) -> Result<(), EvaluationError> {
    if m < results.len() || m == 0 {
        return Err(EvaluationError::FamilyTooSmall {
            m,
            results: results.len(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EvaluationError::InvalidAlpha(alpha));
    }
    for r in results {
        r.p_adjusted = (r.p_two_sided * m as f64).min(1.0);
        r.alpha = alpha;
        r.significant = r.p_adjusted < alpha;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerates every sign assignment of the average ranks directly.
    pub(crate) fn brute_force_p(a: &[f64], b: &[f64]) -> (f64, f64) {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
        if d.is_empty() {
            return (0.0, 1.0);
        }
        let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
        let scale = abs.iter().cloned().fold(0.0, f64::max);
        let rank = |x: f64| {
            let less = abs.iter().filter(|y| **y < x - 1e-9 * scale).count() as f64;
            let equal = abs.iter().filter(|y| (**y - x).abs() <= 1e-9 * scale).count() as f64;
            less + (equal + 1.0) / 2.0
        };
        let ranks: Vec<f64> = abs.iter().map(|x| rank(*x)).collect();
        let w: f64 = ranks.iter().zip(&d).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
        let n = d.len();
        let (mut lo, mut hi) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
            if s <= w + 1e-9 {
                lo += 1;
            }
            if s >= w - 1e-9 {
                hi += 1;
            }
        }
        let p = (2.0 * lo.min(hi) as f64 / (1u64 << n) as f64).min(1.0);
        (w, p)
    }

    #[test]
    fn all_positive_ten_pairs() {
        let a: Vec<f64> = (1..=10).map(|k| 0.5 + k as f64 / 100.0).collect();
        let b = vec![0.5; 10];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.p_two_sided, 0.001953125);
        assert_eq!(r.w_plus, 55.0);
        assert_eq!(r.method, PMethod::Exact);
        let r = wilcoxon_signed_rank(&b, &a).unwrap();
        assert_eq!((r.p_two_sided, r.w_plus), (0.001953125, 0.0));
    }

    #[test]
    fn identical_vectors_are_degenerate() {
        let r = wilcoxon_signed_rank(&[0.3, 0.4], &[0.3, 0.4]).unwrap();
        assert_eq!((r.n_effective, r.p_two_sided, r.method), (0, 1.0, PMethod::Degenerate));
        assert!(!r.significant);
        assert!(matches!(wilcoxon_signed_rank(&[1.0], &[]), Err(EvaluationError::LengthMismatch(1, 0))));
        assert!(matches!(wilcoxon_signed_rank(&[], &[]), Err(EvaluationError::EmptySample)));
    }

    #[test]
    fn ties_use_average_ranks() {
        // |d| = 1, 1, 2 → ranks 1.5, 1.5, 3; positives at 1.5 and 3
        let r = wilcoxon_signed_rank(&[1.0, 0.0, 2.0, 5.0], &[0.0, 1.0, 0.0, 5.0]).unwrap();
        assert_eq!((r.n_effective, r.w_plus), (3, 4.5));
        let (w, p) = brute_force_p(&[1.0, 0.0, 2.0, 5.0], &[0.0, 1.0, 0.0, 5.0]);
        assert_eq!(w, 4.5);
        assert!((r.p_two_sided - p).abs() < 1e-12);
    }

    #[test]
    fn normal_approximation_above_threshold() {
        let a: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let b: Vec<f64> = (0..30).map(|k| k as f64 + if k % 3 == 0 { 0.5 } else { -1.0 - k as f64 / 10.0 }).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, PMethod::Normal);
        assert!(r.p_two_sided > 0.0 && r.p_two_sided < 0.05, "{}", r.p_two_sided);
        // 21 effective pairs: the approximation is close to the exact value
        let a21 = &a[..21];
        let b21 = &b[..21];
        let approx = wilcoxon_signed_rank(a21, b21).unwrap();
        let exact = {
            let d: Vec<f64> = a21.iter().zip(b21).map(|(x, y)| (x - y).abs()).collect();
            let (ranks, _) = doubled_ranks(&d);
            exact_p(&ranks, (approx.w_plus * 2.0) as u64)
        };
        assert!((approx.p_two_sided - exact).abs() < 0.01, "{} vs {exact}", approx.p_two_sided);
    }

    #[test]
    fn bonferroni_examples() {
        let base = wilcoxon_signed_rank(&[1.0], &[0.0]).unwrap();
        let with_p = |p| SignificanceResult { p_two_sided: p, ..base.clone() };
        let mut rs = vec![with_p(0.01), with_p(0.8)];
        bonferroni(&mut rs, 2, 0.05).unwrap();
        assert_eq!(rs[0].p_adjusted, 0.02);
        assert_eq!(rs[1].p_adjusted, 1.0);
        let mut rs = vec![with_p(0.8)];
        bonferroni(&mut rs, 3, 0.05).unwrap();
        assert_eq!(rs[0].p_adjusted, 1.0);
        let mut rs = vec![with_p(0.0196)];
        bonferroni(&mut rs, 2, 0.05).unwrap();
        assert!((rs[0].p_adjusted - 0.0392).abs() < 1e-15);
        assert!(rs[0].significant);
        assert!(bonferroni(&mut [with_p(0.1), with_p(0.1)], 1, 0.05).is_err());
        assert!(bonferroni(&mut [with_p(0.1)], 1, 1.5).is_err());
    }

    fn paired(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1..=max_n).prop_flat_map(|n| {
            (
                prop::collection::vec(0u32..40, n),
                prop::collection::vec(0u32..40, n),
            )
        })
        .prop_map(|(a, b)| {
            (
                a.into_iter().map(|x| x as f64 / 40.0).collect(),
                b.into_iter().map(|x| x as f64 / 40.0).collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration((a, b) in paired(10)) {
            let r = wilcoxon_signed_rank(&a, &b).unwrap();
            let (w, p) = brute_force_p(&a, &b);
            prop_assert!((r.p_two_sided - p).abs() < 1e-12);
            prop_assert!((r.w_plus - w).abs() < 1e-9);
        }

        #[test]
        fn bounds((a, b) in paired(25)) {
            let r = wilcoxon_signed_rank(&a, &b).unwrap();
            let n = r.n_effective as f64;
            prop_assert!((0.0..=1.0).contains(&r.p_two_sided));
            prop_assert!(r.w_plus >= 0.0 && r.w_plus <= n * (n + 1.0) / 2.0);
        }

        #[test]
        fn shift_and_scale_invariance((a, b) in paired(12), shift in -5.0f64..5.0, scale in 0.01f64..100.0) {
            let p = wilcoxon_signed_rank(&a, &b).unwrap().p_two_sided;
            let sa: Vec<f64> = a.iter().map(|x| x + shift).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + shift).collect();
            prop_assert!((wilcoxon_signed_rank(&sa, &sb).unwrap().p_two_sided - p).abs() < 1e-12);
            let ma: Vec<f64> = a.iter().map(|x| x * scale).collect();
            let mb: Vec<f64> = b.iter().map(|x| x * scale).collect();
            prop_assert!((wilcoxon_signed_rank(&ma, &mb).unwrap().p_two_sided - p).abs() < 1e-12);
        }
    }
}
