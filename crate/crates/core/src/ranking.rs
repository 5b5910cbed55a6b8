//! Top-k selection and rank-biased overlap.

use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{invalid, Error, Result};

/// Default RBO persistence.
pub const DEFAULT_PERSISTENCE: f64 = 0.9;

/// The `k` highest scores as `(index, score)`, descending. Ties go to the lower index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.into_iter().map(|i| (i, scores[i])).collect()
}

fn check_unique<T: Eq + Hash>(list: &[T]) -> Result<()> {
    let mut seen = HashSet::with_capacity(list.len());
    for (pos, item) in list.iter().enumerate() {
        if !seen.insert(item) {
            return Err(Error::DuplicateInList(pos));
        }
    }
    Ok(())
}

/// Extrapolated rank-biased overlap of two rankings, evaluated to the depth of
/// the longer list.
///
/// Returns 1 for identical lists and 0 for lists sharing no item. Lists of
/// different length use the uneven-length extrapolation, which treats the
/// shorter list's overlap as persisting below its end.
pub fn rbo<T: Eq + Hash>(first: &[T], second: &[T], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("p", p, "persistence must lie in (0, 1)"));
    }
    check_unique(first)?;
    check_unique(second)?;
    if first == second {
        return Ok(1.0);
    }
    let (short, long) = if first.len() <= second.len() {
        (first, second)
    } else {
        (second, first)
    };
    let (s, l) = (short.len(), long.len());
    if s == 0 {
        return Ok(0.0);
    }

    let mut seen_short = HashSet::with_capacity(s);
    let mut seen_long = HashSet::with_capacity(l);
    let mut overlap = 0usize;
    // Σ_{d=1..l} X_d/d p^d
    let mut agreement_sum = 0.0;
    // Σ_{d=s+1..l} X_s (d-s)/(s d) p^d
    let mut tail_sum = 0.0;
    let mut weight = 1.0;
    let mut overlap_at_s = 0usize;

    for d in 1..=l {
        weight *= p;
        let from_long = &long[d - 1];
        if d <= s {
            let from_short = &short[d - 1];
            if from_short == from_long {
                overlap += 1;
            } else {
                overlap += usize::from(seen_long.contains(from_short));
                overlap += usize::from(seen_short.contains(from_long));
            }
            seen_short.insert(from_short);
            if d == s {
                overlap_at_s = overlap;
            }
        } else {
            overlap += usize::from(seen_short.contains(from_long));
            tail_sum += (overlap_at_s * (d - s)) as f64 / (s * d) as f64 * weight;
        }
        seen_long.insert(from_long);
        agreement_sum += overlap as f64 / d as f64 * weight;
    }

    let extrapolated = ((overlap - overlap_at_s) as f64 / l as f64 + overlap_at_s as f64 / s as f64) * weight;
    Ok((1.0 - p) / p * (agreement_sum + tail_sum) + extrapolated)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn top_k_orders_descending() {
        let scores = [0.5, 0.3, 0.2];
        assert_eq!(top_k(&scores, 2), vec![(0, 0.5), (1, 0.3)]);
        assert_eq!(top_k(&scores, 10).len(), 3);
        assert!(top_k(&scores, 0).is_empty());
    }

    #[test]
    fn top_k_ties_by_index() {
        let scores = [0.25; 4];
        assert_eq!(top_k(&scores, 3), vec![(0, 0.25), (1, 0.25), (2, 0.25)]);
        let scores = [0.1, 0.4, 0.1, 0.4];
        assert_eq!(top_k(&scores, 4).iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 3, 0, 2]);
    }

    #[test]
    fn rbo_extremes() {
        let a = chars("abcdefghij");
        assert_eq!(rbo(&a, &a, 0.9).unwrap(), 1.0);
        assert_eq!(rbo(&a, &chars("klmnopqrst"), 0.9).unwrap(), 0.0);
        assert_eq!(rbo(&a, &chars("xyz"), 0.9).unwrap(), 0.0);
        let empty: Vec<char> = Vec::new();
        assert_eq!(rbo(&empty, &empty, 0.9).unwrap(), 1.0);
        assert_eq!(rbo(&empty, &a, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn rbo_rejects_bad_input() {
        assert!(matches!(rbo(&chars("aba"), &chars("abc"), 0.9), Err(Error::DuplicateInList(2))));
        assert!(rbo(&chars("ab"), &chars("ab"), 1.0).is_err());
        assert!(rbo(&chars("ab"), &chars("ab"), 0.0).is_err());
    }

    // Values from tests/oracles/rbo.py (exact rational term summation).
    #[test]
    fn rbo_matches_summation_oracle() {
        let cases = [
            ("abc", "acb", 0.9, 0.955),
            ("abcdefghij", "jihgfedcba", 0.9, 0.5116075656428571),
            ("abcde", "abxyz", 0.9, 0.54289),
            ("abcdefg", "bad", 0.8, 0.6770224761904762),
            ("abcdefghij", "kxcnarvmwy", 0.95, 0.20759707711974207),
        ];
        for (a, b, p, expected) in cases {
            let got = rbo(&chars(a), &chars(b), p).unwrap();
            assert!((got - expected).abs() < 1e-12, "{a} vs {b}: {got} != {expected}");
            let swapped = rbo(&chars(b), &chars(a), p).unwrap();
            assert_eq!(got, swapped);
        }
    }
}
