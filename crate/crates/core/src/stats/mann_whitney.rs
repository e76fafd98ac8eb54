use serde::{Deserialize, Serialize};

use super::{check_finite, normal_sf, StatsError};

/// Largest combined sample size for which the exact null distribution is
/// used (tie-free data only).
pub const EXACT_MAX_TOTAL: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MwuMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MwuResult {
    /// U of the first sample.
    pub u_statistic: f64,
    /// U of the second sample; `u_statistic + u_other = n1 * n2`.
    pub u_other: f64,
    /// Two-sided.
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    pub method: MwuMethod,
}

/// Average (mid) ranks, 1-based, of `values` in their original order, plus
/// the sizes of all tie groups.
pub(crate) fn midranks(values: &[f64]) -> (Vec<f64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finite values are ordered")
    });
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end averaged.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        if end - start > 1 {
            ties.push((end - start) as u64);
        }
        start = end;
    }
    (ranks, ties)
}

/// Number of ways each U value in `0..=n1*n2` arises when `n1` of
/// `n1 + n2` distinct ranks are drawn.
fn exact_u_counts(n1: usize, n2: usize) -> Vec<u64> {
    // table[i][j] = distribution for sizes (i, j); built up over j.
    let max_u = n1 * n2;
    let mut prev: Vec<Vec<u64>> = (0..=n1).map(|_| vec![0; max_u + 1]).collect();
    for row in prev.iter_mut() {
        row[0] = 1;
    }
    for j in 1..=n2 {
        let mut cur: Vec<Vec<u64>> = (0..=n1).map(|_| vec![0; max_u + 1]).collect();
        cur[0][0] = 1;
        for i in 1..=n1 {
            for u in 0..=i * j {
                // The largest rank belongs to the first sample (adds j) or the second.
                let from_first = if u >= j { cur[i - 1][u - j] } else { 0 };
                cur[i][u] = from_first + prev[i][u];
            }
        }
        prev = cur;
    }
    prev.swap_remove(n1)
}

/// Mann-Whitney U test of `xs` against `ys`, two-sided.
///
/// Exact enumeration of the null distribution is used when
/// `n1 + n2 <= 12` and there are no ties; otherwise a normal approximation
/// with tie-corrected variance and a 0.5 continuity correction.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> Result<MwuResult, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::Empty);
    }
    check_finite(xs)?;
    check_finite(ys)?;
    let (n1, n2) = (xs.len(), ys.len());
    let total = n1 + n2;
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_x: f64 = ranks[..n1].iter().sum();
    let u_x = rank_sum_x - (n1 * (n1 + 1)) as f64 / 2.0;
    let product = (n1 * n2) as f64;
    let u_y = product - u_x;

    let (p_value, method) = if total <= EXACT_MAX_TOTAL && ties.is_empty() {
        (exact_p(u_x, n1, n2), MwuMethod::Exact)
    } else {
        (normal_p(u_x, n1, n2, &ties), MwuMethod::NormalApprox)
    };
    Ok(MwuResult {
        u_statistic: u_x,
        u_other: u_y,
        p_value,
        n1,
        n2,
        method,
    })
}

/// P(|U - mu| >= |u - mu|) under the exact null distribution.
fn exact_p(u: f64, n1: usize, n2: usize) -> f64 {
    let counts = exact_u_counts(n1, n2);
    let product = (n1 * n2) as i64;
    // Doubled distances keep everything integral.
    let observed = ((2.0 * u) as i64 - product).abs();
    let mut extreme = 0u64;
    let mut all = 0u64;
    for (k, &count) in counts.iter().enumerate() {
        all += count;
        if (2 * k as i64 - product).abs() >= observed {
            extreme += count;
        }
    }
    extreme as f64 / all as f64
}

fn normal_p(u: f64, n1: usize, n2: usize, ties: &[u64]) -> f64 {
    let (f1, f2) = (n1 as f64, n2 as f64);
    let total = f1 + f2;
    let mean = f1 * f2 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let correction = if total > 1.0 {
        tie_term / (total * (total - 1.0))
    } else {
        0.0
    };
    let variance = f1 * f2 / 12.0 * ((total + 1.0) - correction);
    if variance <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    (2.0 * normal_sf(z)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::permutation_mwu_p;
    use proptest::prelude::*;

    #[test]
    fn separated_groups_exact() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u_statistic, 0.0);
        assert_eq!(r.u_other, 9.0);
        assert_eq!(r.method, MwuMethod::Exact);
        assert!((r.p_value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identical_multisets() {
        let x = [1.0, 2.0, 3.0, 3.0];
        let r = mann_whitney_u(&x, &x).unwrap();
        assert_eq!(r.u_statistic, 8.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.method, MwuMethod::NormalApprox);
    }

    #[test]
    fn all_values_tied() {
        let r = mann_whitney_u(&[2.0; 15], &[2.0; 10]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn large_sample_reference() {
        // scipy.stats.mannwhitneyu(x, y, method="asymptotic", use_continuity=True)
        let x: Vec<f64> = (0..20).map(|i| f64::from(i % 7)).collect();
        let y: Vec<f64> = (0..15).map(|i| f64::from(i % 5) + 1.5).collect();
        let r = mann_whitney_u(&x, &y).unwrap();
        assert_eq!(r.u_statistic, 120.0);
        assert!(
            (r.p_value - 0.3239139103445662).abs() < 1e-9,
            "{}",
            r.p_value
        );
    }

    #[test]
    fn exact_distribution_is_complete() {
        let counts = exact_u_counts(4, 3);
        assert_eq!(counts.iter().sum::<u64>(), 35);
        assert_eq!(counts.len(), 13);
        assert_eq!(counts[0], 1);
        assert_eq!(counts[12], 1);
        assert_eq!(counts[1], 1);
        assert_eq!(counts[2], 2);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(mann_whitney_u(&[], &[1.0]).unwrap_err(), StatsError::Empty);
        assert_eq!(mann_whitney_u(&[1.0], &[]).unwrap_err(), StatsError::Empty);
    }

    #[test]
    fn midranks_average_ties() {
        let (ranks, ties) = midranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(ranks, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(ties, vec![2]);
    }

    fn distinct_split() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..=12).prop_flat_map(|total| {
            let values: Vec<f64> = (0..total).map(|i| i as f64 * 1.5).collect();
            (1..total, Just(values).prop_shuffle())
                .prop_map(|(n1, values)| (values[..n1].to_vec(), values[n1..].to_vec()))
        })
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration((x, y) in distinct_split()) {
            let r = mann_whitney_u(&x, &y).unwrap();
            prop_assert_eq!(r.method, MwuMethod::Exact);
            prop_assert_eq!(r.p_value, permutation_mwu_p(&x, &y).unwrap());
        }

        #[test]
        fn u_sums_and_swap_invariance(
            x in proptest::collection::vec(0i32..8, 1..25),
            y in proptest::collection::vec(0i32..8, 1..25),
        ) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let a = mann_whitney_u(&x, &y).unwrap();
            let b = mann_whitney_u(&y, &x).unwrap();
            let product = (x.len() * y.len()) as f64;
            prop_assert_eq!(a.u_statistic + a.u_other, product);
            prop_assert!(a.u_statistic >= 0.0 && a.u_statistic <= product);
            prop_assert_eq!(a.u_statistic, b.u_other);
            prop_assert_eq!(a.p_value, b.p_value);
            prop_assert!((0.0..=1.0).contains(&a.p_value));
        }
    }
}
