use crate::error::{Error, Result};

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Wasserstein-1 distance between two 1-D empirical distributions.
///
/// Equal sizes pair order statistics; unequal sizes integrate
/// `|F_a⁻¹(t) − F_b⁻¹(t)|` over the merged grid of quantile breakpoints.
pub fn empirical_w1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("w1 samples"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    if sa.len() == sb.len() {
        let total: f64 = sa.iter().zip(&sb).map(|(p, q)| (p - q).abs()).sum();
        return Ok(total / sa.len() as f64);
    }
    let (na, nb) = (sa.len(), sb.len());
    // Walk the breakpoints i/na and j/nb in increasing order using integer
    // cross-multiplication so ties are exact.
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0.0;
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i + 1) * nb;
        let next_b = (j + 1) * na;
        let next = next_a.min(next_b) as f64 / (na * nb) as f64;
        total += (next - prev) * (sa[i] - sb[j]).abs();
        prev = next;
        if next_a <= next_b {
            i += 1;
        }
        if next_b <= next_a {
            j += 1;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(
            empirical_w1(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert_eq!(empirical_w1(&[0.0], &[1.0]).unwrap(), 1.0);
        let grid: Vec<f64> = (0..8).map(|v| v as f64 * 0.3).collect();
        let shifted: Vec<f64> = grid.iter().map(|v| v - 1.7).collect();
        assert_relative_eq!(empirical_w1(&grid, &shifted).unwrap(), 1.7, epsilon = 1e-12);
        assert!(empirical_w1(&[], &[1.0]).is_err());
    }

    /// Optimal transport by brute force over all permutations (equal sizes, n ≤ 8).
    fn brute_force(a: &[f64], b: &[f64]) -> f64 {
        fn rec(a: &[f64], b: &[f64], used: &mut Vec<bool>, k: usize, acc: f64, best: &mut f64) {
            if acc >= *best {
                return;
            }
            if k == a.len() {
                *best = acc;
                return;
            }
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    rec(a, b, used, k + 1, acc + (a[k] - b[j]).abs(), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
        best / a.len() as f64
    }

    #[test]
    fn unequal_sizes_match_replicated_equal_sizes() {
        // Replicating each atom of a (size 2) three times and of b (size 3)
        // twice gives equal-size samples with the same distributions.
        let a = [0.0, 4.0];
        let b = [1.0, 2.0, 10.0];
        let ra: Vec<f64> = a.iter().flat_map(|&v| [v; 3]).collect();
        let rb: Vec<f64> = b.iter().flat_map(|&v| [v; 2]).collect();
        assert_relative_eq!(
            empirical_w1(&a, &b).unwrap(),
            empirical_w1(&ra, &rb).unwrap(),
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn matches_brute_force_transport(v in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..7)) {
            let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let w = empirical_w1(&a, &b).unwrap();
            prop_assert!((w - brute_force(&a, &b)).abs() < 1e-9);
        }

        #[test]
        fn is_a_metric(v in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..20)) {
            let a: Vec<f64> = v.iter().map(|t| t.0).collect();
            let b: Vec<f64> = v.iter().map(|t| t.1).collect();
            let c: Vec<f64> = v.iter().map(|t| t.2).collect();
            let ab = empirical_w1(&a, &b).unwrap();
            prop_assert_eq!(ab, empirical_w1(&b, &a).unwrap());
            prop_assert!(ab <= empirical_w1(&a, &c).unwrap() + empirical_w1(&c, &b).unwrap() + 1e-12);
            prop_assert_eq!(empirical_w1(&a, &a).unwrap(), 0.0);
            let mut sa = a.clone();
            sa.sort_by(f64::total_cmp);
            let mut sb = b.clone();
            sb.sort_by(f64::total_cmp);
            prop_assert_eq!(ab == 0.0, sa == sb);
        }
    }
}
