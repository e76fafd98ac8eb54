use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{check_finite, normal_sf, StatsError};

/// Kendall tau-b with its pair counts and a two-sided p-value from the
/// tie-adjusted normal approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallResult {
    pub tau_b: f64,
    pub p_value: f64,
    pub n: usize,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in x (including pairs tied in both).
    pub ties_x: u64,
    /// Pairs tied in y (including pairs tied in both).
    pub ties_y: u64,
    /// Pairs tied in both x and y.
    pub ties_xy: u64,
}

fn cmp(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).expect("finite values are ordered")
}

/// Sizes of runs of equal values in an already sorted slice.
fn tie_groups(sorted: &[f64]) -> Vec<u64> {
    let mut groups = Vec::new();
    let mut run = 1u64;
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            run += 1;
        } else {
            if run > 1 {
                groups.push(run);
            }
            run = 1;
        }
    }
    if run > 1 && !sorted.is_empty() {
        groups.push(run);
    }
    groups
}

fn tied_pairs(groups: &[u64]) -> u64 {
    groups.iter().map(|t| t * (t - 1) / 2).sum()
}

/// Counts inversions of `ys` with a bottom-up merge sort, leaving `ys`
/// sorted. Equal elements are never counted.
fn count_inversions(ys: &mut Vec<f64>) -> u64 {
    let n = ys.len();
    let mut buffer = vec![0.0; n];
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid && j < end {
                if ys[i] <= ys[j] {
                    buffer[k] = ys[i];
                    i += 1;
                } else {
                    buffer[k] = ys[j];
                    j += 1;
                    swaps += (mid - i) as u64;
                }
                k += 1;
            }
            buffer[k..k + (mid - i)].copy_from_slice(&ys[i..mid]);
            k += mid - i;
            buffer[k..k + (end - j)].copy_from_slice(&ys[j..end]);
            start = end;
        }
        std::mem::swap(ys, &mut buffer);
        width *= 2;
    }
    swaps
}

/// Kendall tau-b in O(n log n) (Knight's algorithm).
///
/// `tau_b = (nc - nd) / sqrt((n0 - n1)(n0 - n2))` where `n1`, `n2` count
/// pairs tied in x and y. The p-value uses the variance of `nc - nd` under
/// independence, corrected for ties in both variables.
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> Result<KendallResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooFew { needed: 2, got: n });
    }
    check_finite(xs)?;
    check_finite(ys)?;

    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| cmp(a.0, b.0).then(cmp(a.1, b.1)));

    let sorted_x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let x_groups = tie_groups(&sorted_x);
    let ties_x = tied_pairs(&x_groups);

    let mut ties_xy = 0u64;
    let mut run = 1u64;
    for w in pairs.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            ties_xy += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties_xy += run * (run - 1) / 2;

    let mut sorted_y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut sorted_y);
    let y_groups = tie_groups(&sorted_y);
    let ties_y = tied_pairs(&y_groups);

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    if ties_x == n0 {
        return Err(StatsError::AllTied("x"));
    }
    if ties_y == n0 {
        return Err(StatsError::AllTied("y"));
    }
    let untied = n0 + ties_xy - ties_x - ties_y;
    let concordant = untied - discordant;

    let s = concordant as f64 - discordant as f64;
    let tau_b = (s / ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt()).clamp(-1.0, 1.0);

    Ok(KendallResult {
        tau_b,
        p_value: tie_adjusted_p(s, n, &x_groups, &y_groups),
        n,
        concordant,
        discordant,
        ties_x,
        ties_y,
        ties_xy,
    })
}

fn tie_adjusted_p(s: f64, n: usize, x_groups: &[u64], y_groups: &[u64]) -> f64 {
    let nf = n as f64;
    let sum_t =
        |groups: &[u64], f: fn(f64) -> f64| groups.iter().map(|&t| f(t as f64)).sum::<f64>();
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt = sum_t(x_groups, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum_t(y_groups, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let v1 = sum_t(x_groups, |t| t * (t - 1.0)) * sum_t(y_groups, |t| t * (t - 1.0))
        / (2.0 * nf * (nf - 1.0));
    let v2 = if n > 2 {
        sum_t(x_groups, |t| t * (t - 1.0) * (t - 2.0))
            * sum_t(y_groups, |t| t * (t - 1.0) * (t - 2.0))
            / (9.0 * nf * (nf - 1.0) * (nf - 2.0))
    } else {
        0.0
    };
    let variance = (v0 - vt - vu) / 18.0 + v1 + v2;
    if variance <= 0.0 {
        return 1.0;
    }
    let z = s.abs() / variance.sqrt();
    (2.0 * normal_sf(z)).clamp(0.0, 1.0)
}
