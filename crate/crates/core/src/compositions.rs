//! Enumeration of integer compositions with per-part interval constraints.
//!
//! Every type-class sum in this crate (U-types, rows of a conditional type,
//! whole joint types) is a walk over vectors `c` with `lo[i] <= c[i] <= hi[i]`
//! and `Σ c[i] = total`. Parts are visited in lexicographic order.

/// Calls `f` on every vector `c` with `lo[i] <= c[i] <= hi[i]` and
/// `Σ c = total`, in lexicographic order. Returns the number of visits.
pub fn for_each_bounded_composition<F>(total: u64, lo: &[u64], hi: &[u64], mut f: F) -> usize
where
    F: FnMut(&[u64]),
{
    assert_eq!(lo.len(), hi.len());
    let k = lo.len();
    if k == 0 {
        if total == 0 {
            f(&[]);
            return 1;
        }
        return 0;
    }
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return 0;
    }
    // suffix sums of the bounds for pruning
    let mut min_tail = vec![0u64; k + 1];
    let mut max_tail = vec![0u64; k + 1];
    for i in (0..k).rev() {
        min_tail[i] = min_tail[i + 1] + lo[i];
        max_tail[i] = max_tail[i + 1].saturating_add(hi[i]);
    }
    if total < min_tail[0] || total > max_tail[0] {
        return 0;
    }
    let mut parts = vec![0u64; k];
    let mut visits = 0;
    recurse(0, total, lo, hi, &min_tail, &max_tail, &mut parts, &mut f, &mut visits);
    visits
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(&[u64])>(
    i: usize,
    remaining: u64,
    lo: &[u64],
    hi: &[u64],
    min_tail: &[u64],
    max_tail: &[u64],
    parts: &mut [u64],
    f: &mut F,
    visits: &mut usize,
) {
    let k = parts.len();
    if i == k - 1 {
        parts[i] = remaining;
        f(parts);
        *visits += 1;
        return;
    }
    // c_i must leave a feasible remainder for the tail
    let start = lo[i].max(remaining.saturating_sub(max_tail[i + 1]));
    let end = hi[i].min(remaining - min_tail[i + 1]);
    for c in start..=end {
        parts[i] = c;
        recurse(i + 1, remaining - c, lo, hi, min_tail, max_tail, parts, f, visits);
    }
}

/// Collects every bounded composition; see [`for_each_bounded_composition`].
pub fn bounded_compositions(total: u64, lo: &[u64], hi: &[u64]) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for_each_bounded_composition(total, lo, hi, |c| out.push(c.to_vec()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(total: u64, lo: &[u64], hi: &[u64]) -> Vec<Vec<u64>> {
        let mut out = vec![vec![]];
        for i in 0..lo.len() {
            let mut next = Vec::new();
            for prefix in &out {
                for c in lo[i]..=hi[i] {
                    let mut p = prefix.clone();
                    p.push(c);
                    next.push(p);
                }
            }
            out = next;
        }
        out.retain(|c| c.iter().sum::<u64>() == total);
        out
    }

    #[test]
    fn matches_brute_force_in_lexicographic_order() {
        let cases: &[(u64, &[u64], &[u64])] = &[
            (5, &[0, 0, 0], &[5, 5, 5]),
            (7, &[1, 0, 2], &[3, 4, 4]),
            (4, &[0, 0, 0, 0], &[0, 4, 0, 4]),
            (3, &[2, 2], &[5, 5]),
            (0, &[0, 0], &[3, 3]),
        ];
        for &(total, lo, hi) in cases {
            assert_eq!(bounded_compositions(total, lo, hi), brute(total, lo, hi));
        }
    }

    #[test]
    fn empty_when_bounds_cross() {
        assert!(bounded_compositions(3, &[2, 0], &[1, 3]).is_empty());
        assert!(bounded_compositions(10, &[3, 3, 3], &[3, 3, 3]).is_empty());
    }

    #[test]
    fn single_part() {
        assert_eq!(bounded_compositions(4, &[0], &[9]), vec![vec![4]]);
        assert!(bounded_compositions(4, &[0], &[3]).is_empty());
    }
}
