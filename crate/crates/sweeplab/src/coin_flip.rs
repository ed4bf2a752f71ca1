//! The one-coin approximation to the sample's ancestral partition.
//!
//! Each sampled lineage independently stays in the founder's (marked) block
//! with probability `p = exp(-alpha)`, where `alpha = r ln(2N) / s`, or
//! escapes to its own unmarked singleton. The resulting law on marked
//! partitions is the crudest of the approximations studied here: it has
//! independent escapes and no way to express two escaped lineages sticking
//! together.

use crate::error::{Error, Result};
use crate::partition::{MarkedPartition, PairStats};
use rand::distr::{Bernoulli, Distribution};
use rand::Rng;

/// The escape pressure `alpha = r ln(2N) / s` and the per-lineage retention
/// probability `p = exp(-alpha)`.
pub fn alpha_and_p(n: u32, r: f64, s: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::domain("N must be positive".to_string()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("s must lie in (0,1), got {s}")));
    }
    if r < 0.0 || !r.is_finite() {
        return Err(Error::domain(format!("r must be a finite value >= 0, got {r}")));
    }
    let alpha = r * f64::from(2 * n).ln() / s;
    Ok((alpha, (-alpha).exp()))
}

/// Draws a marked partition of `{0, .., n-1}`: one coin per element in index
/// order, success (probability `p`) joining the marked block, failure
/// opening an unmarked singleton. An all-failure draw has no marked block.
pub fn sample_p_partition<R: Rng + ?Sized>(
    n: u32,
    p: f64,
    rng: &mut R,
) -> Result<MarkedPartition> {
    if n == 0 {
        return Err(Error::domain("partition needs at least one element".to_string()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0,1], got {p}")));
    }
    let coin = Bernoulli::new(p).expect("checked probability");
    let labels: Vec<u32> = (1..=n).map(|i| if coin.sample(rng) { 0 } else { i }).collect();
    Ok(MarkedPartition::from_labels(&labels, Some(&0)))
}

/// Probability the one-coin law assigns to a given marked partition: `p^m
/// (1-p)^(n-m)` when the partition is one marked block of size `m` plus
/// unmarked singletons, `(1-p)^n` for all-singletons unmarked, 0 otherwise.
pub fn qp_probability(partition: &MarkedPartition, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let n = partition.n() as i32;
    let singleton_except = |skip: Option<usize>| {
        partition
            .blocks()
            .iter()
            .enumerate()
            .all(|(i, b)| Some(i) == skip || b.len() == 1)
    };
    match partition.marked_index() {
        None => {
            if singleton_except(None) {
                (1.0 - p).powi(n)
            } else {
                0.0
            }
        }
        Some(m) => {
            if singleton_except(Some(m)) {
                let size = partition.blocks()[m].len() as i32;
                p.powi(size) * (1.0 - p).powi(n - size)
            } else {
                0.0
            }
        }
    }
}

/// The four pair statistics in closed form: escapes are independent
/// `Bernoulli(1-p)` coins and escaped lineages never share a block, so the
/// coalesce-and-escape probability is identically zero.
pub fn qp_pair_stats(p: f64) -> PairStats {
    let q = 1.0 - p;
    PairStats::analytic(q, q * q, 0.0, 2.0 * p * q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_marked_partitions;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    #[test]
    fn alpha_matches_its_definition_and_reference_values() {
        let (alpha, p) = alpha_and_p(10_000, 0.00106, 0.1).unwrap();
        assert_relative_eq!(alpha, 0.00106 * f64::ln(20_000.0) / 0.1, max_relative = 1e-15);
        assert_abs_diff_eq!(1.0 - p, 0.0997, epsilon = 1e-4);

        let (_, p) = alpha_and_p(10_000, 0.00516, 0.1).unwrap();
        assert_abs_diff_eq!(1.0 - p, 0.4001, epsilon = 1e-4);

        // Zero recombination keeps every lineage with the founder.
        let (alpha, p) = alpha_and_p(50, 0.0, 0.2).unwrap();
        assert_eq!((alpha, p), (0.0, 1.0));

        assert!(alpha_and_p(0, 0.1, 0.1).is_err());
        assert!(alpha_and_p(10, 0.1, 0.0).is_err());
        assert!(alpha_and_p(10, -0.1, 0.5).is_err());
    }

    #[test]
    fn probabilities_sum_to_one_over_all_marked_partitions() {
        for n in 1..=6 {
            for p in [0.0, 0.37, 0.82, 1.0] {
                let total: f64 = enumerate_marked_partitions(n)
                    .iter()
                    .map(|pi| qp_probability(pi, p))
                    .sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn probability_is_zero_off_the_support() {
        let p = 0.3;
        // Unmarked non-singleton block.
        let pi = MarkedPartition::new(3, vec![vec![0, 1], vec![2]], None).unwrap();
        assert_eq!(qp_probability(&pi, p), 0.0);
        // Marked block plus another non-singleton.
        let pi = MarkedPartition::new(4, vec![vec![0, 1], vec![2, 3]], Some(0)).unwrap();
        assert_eq!(qp_probability(&pi, p), 0.0);
        // On-support shapes for comparison.
        let pi = MarkedPartition::new(3, vec![vec![0, 1], vec![2]], Some(0)).unwrap();
        assert_relative_eq!(qp_probability(&pi, p), p * p * 0.7, max_relative = 1e-15);
        let pi = MarkedPartition::new(2, vec![vec![0], vec![1]], None).unwrap();
        assert_relative_eq!(qp_probability(&pi, p), 0.49, max_relative = 1e-15);
    }

    #[test]
    fn sampler_frequencies_match_the_law() {
        let (n, p, reps) = (4u32, 0.6, 100_000u32);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut counts: BTreeMap<MarkedPartition, u64> = BTreeMap::new();
        for _ in 0..reps {
            *counts.entry(sample_p_partition(n, p, &mut rng).unwrap()).or_default() += 1;
        }
        // Every observed outcome lies on the support.
        for pi in counts.keys() {
            assert!(qp_probability(pi, p) > 0.0, "off-support draw {pi}");
        }
        // Every support outcome appears with about the right frequency.
        for pi in enumerate_marked_partitions(n) {
            let prob = qp_probability(&pi, p);
            if prob == 0.0 {
                assert!(!counts.contains_key(&pi));
                continue;
            }
            let freq = *counts.get(&pi).unwrap_or(&0) as f64 / f64::from(reps);
            let se = (prob * (1.0 - prob) / f64::from(reps)).sqrt();
            assert!(
                (freq - prob).abs() < 4.0 * se,
                "{pi}: frequency {freq} vs probability {prob}"
            );
        }
    }

    #[test]
    fn degenerate_coins_produce_degenerate_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let all_in = sample_p_partition(5, 1.0, &mut rng).unwrap();
            assert_eq!(all_in.blocks().len(), 1);
            assert_eq!(all_in.marked_index(), Some(0));
            let all_out = sample_p_partition(5, 0.0, &mut rng).unwrap();
            assert_eq!(all_out.blocks().len(), 5);
            assert_eq!(all_out.marked_index(), None);
        }
    }

    #[test]
    fn pair_stats_satisfy_the_escape_identity() {
        for p in [0.0, 0.3, 0.9003, 1.0] {
            let stats = qp_pair_stats(p);
            assert!(stats.identity_residual() < 1e-15);
            assert_eq!(stats.p2cinb, 0.0);
            assert_relative_eq!(stats.pinb, 1.0 - p, max_relative = 1e-15);
        }
    }
}
