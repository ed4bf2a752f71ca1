//! Branching-process reductions of a sweep's early growth phase.
//!
//! Three related tools live here:
//!
//! - a Yule skeleton of the `B` genealogy: lines split at rate `s` per line,
//!   every line's neutral type is refreshed at rate `r(1-s)`, and a split's
//!   newborn takes a fresh type with probability `r`. Sampling lineages the
//!   moment the skeleton reaches `H` lines gives a marked partition (types
//!   group lineages; the founder's type 0 marks its block) that approximates
//!   the paintbox law.
//! - a two-type branching process separating lines of infinite descent
//!   (splitting at rate `s`, shedding finite-descent children at rate
//!   `2(1-s)`) from finite-descent lines (events at rate `2-s`: split with
//!   probability `(1-s)/(2-s)`, otherwise die).
//! - the closed-form block-frequency weights `q_{k,a,n}` of a uniform-stick
//!   residual allocation: the probability that a *given* pattern sends `a`
//!   of `n` later elements to the first of `k` starting blocks.

use crate::error::{Error, Result};
use crate::partition::MarkedPartition;
use rand::distr::{Distribution, Uniform};
use rand::Rng;

/// Draws `Exp(rate)`; safe for the generator's closed-open unit interval.
fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -f64::ln_1p(-rng.random::<f64>()) / rate
}

/// A piecewise-constant population path: `(event time, count just after)`.
pub type EventLog = Vec<(f64, u32)>;

/// A completed skeleton: the types of all `h` lines at the instant the
/// `h`-th appeared, and the split times that grew the count (time runs from
/// the first line at 0; `split_times[i]` created line `i + 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonState {
    /// Neutral type per line; type 0 is the founder's.
    pub lineage_types: Vec<u64>,
    /// Strictly increasing split times, one per added line.
    pub split_times: Vec<f64>,
    /// `parents[i]` spawned line `i` (line 0 is its own parent). Line `i`
    /// is created by the `i`-th split, so its ancestor among the first `k`
    /// lines is found by following parents while the index is `>= k`.
    pub parents: Vec<u32>,
    pub h: u32,
}

impl SkeletonState {
    /// Index of line `i`'s ancestor at the instant only `k` lines existed.
    pub fn ancestor_at_size(&self, k: u32, i: u32) -> u32 {
        assert!(k >= 1 && i < self.h, "need 1 <= k and i < h");
        let mut at = i;
        while at >= k {
            at = self.parents[at as usize];
        }
        at
    }
}

fn check_skeleton_rates(r: f64, s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("s must lie in (0,1), got {s}")));
    }
    if !(r >= 0.0 && r < s) {
        return Err(Error::domain(format!("r must lie in [0,s), got {r} with s={s}")));
    }
    Ok(())
}

/// Grows the skeleton from one founder line until `h` lines exist.
///
/// Seed stability contract: each event consumes a holding-time uniform, an
/// event-type coin, a line index, and — for splits only — a fresh-type coin.
pub fn simulate_yule_skeleton<R: Rng + ?Sized>(
    r: f64,
    s: f64,
    h: u32,
    rng: &mut R,
) -> Result<SkeletonState> {
    check_skeleton_rates(r, s)?;
    if h == 0 {
        return Err(Error::domain("skeleton needs at least one line".to_string()));
    }
    let retype_rate = r * (1.0 - s);
    let split_share = s / (s + retype_rate); // independent of the line count
    let mut types: Vec<u64> = vec![0];
    let mut parents: Vec<u32> = vec![0];
    let mut split_times = Vec::with_capacity(h as usize - 1);
    let mut next_type = 1u64;
    let mut t = 0.0;
    while types.len() < h as usize {
        let j = types.len();
        t += exponential(rng, j as f64 * (s + retype_rate));
        let split = rng.random_bool(split_share);
        let line = Uniform::new(0, j).expect("at least one line").sample(rng);
        if split {
            let fresh = rng.random_bool(r);
            let child = if fresh {
                let ty = next_type;
                next_type += 1;
                ty
            } else {
                types[line]
            };
            types.push(child);
            parents.push(line as u32);
            split_times.push(t);
        } else {
            types[line] = next_type;
            next_type += 1;
        }
    }
    Ok(SkeletonState { lineage_types: types, split_times, parents, h })
}

/// Runs the skeleton to `h` lines, samples `n` distinct lines uniformly at
/// that instant, and groups them by type; the founder's type marks a block.
pub fn simulate_yule_skeleton_partition<R: Rng + ?Sized>(
    n: u32,
    r: f64,
    s: f64,
    h: u32,
    rng: &mut R,
) -> Result<MarkedPartition> {
    if n == 0 {
        return Err(Error::domain("sample size n must be at least 1".to_string()));
    }
    if n > h {
        return Err(Error::domain(format!(
            "cannot sample {n} distinct lines from a skeleton of {h}"
        )));
    }
    let state = simulate_yule_skeleton(r, s, h, rng)?;
    // Partial shuffle: the first n entries become a uniform distinct sample.
    let mut idx: Vec<u32> = (0..h).collect();
    for i in 0..n as usize {
        let j = Uniform::new(i, h as usize).expect("nonempty range").sample(rng);
        idx.swap(i, j);
    }
    let labels: Vec<u64> = idx[..n as usize]
        .iter()
        .map(|&i| state.lineage_types[i as usize])
        .collect();
    Ok(MarkedPartition::from_labels(&labels, Some(&0)))
}

/// Runs the two-type process from one infinite line until `horizon`,
/// returning the event logs `(time, count)` for infinite and finite lines
/// (both begin with their time-0 entry).
pub fn simulate_two_type_branching<R: Rng + ?Sized>(
    s: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<(EventLog, EventLog)> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("s must lie in (0,1), got {s}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let mut n_inf = 1u32;
    let mut n_fin = 0u32;
    let mut t = 0.0;
    let mut inf_log = vec![(0.0, n_inf)];
    let mut fin_log = vec![(0.0, n_fin)];
    loop {
        // Every line, of either type, holds for rate 2 - s in total.
        let lines = f64::from(n_inf) + f64::from(n_fin);
        t += exponential(rng, lines * (2.0 - s));
        if t > horizon {
            return Ok((inf_log, fin_log));
        }
        // One uniform splits into the four event classes by their rates.
        let u: f64 = rng.random::<f64>() * lines * (2.0 - s);
        let inf_split = f64::from(n_inf) * s;
        let inf_emit = f64::from(n_inf) * 2.0 * (1.0 - s);
        let fin_split = f64::from(n_fin) * (1.0 - s);
        if u < inf_split {
            n_inf += 1;
            inf_log.push((t, n_inf));
        } else if u < inf_split + inf_emit + fin_split {
            // An infinite line shedding a finite child and a finite line
            // splitting both add one finite line.
            n_fin += 1;
            fin_log.push((t, n_fin));
        } else {
            n_fin -= 1;
            fin_log.push((t, n_fin));
        }
    }
}

/// The block-frequency weight `q_{k,a,n} = (k-1) a! (n-a+k-2)! / (n+k-1)!`:
/// starting from `k` unit-weight blocks, the probability that a given
/// pattern places `a` of the next `n` elements in block 1 and the rest
/// anywhere else, each element joining a block with probability proportional
/// to its current size. Summing over patterns, `sum_a C(n,a) q_{k,a,n} = 1`.
pub fn polya_q(k: u32, a: u32, n: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::domain(format!("need at least 2 starting blocks, got {k}")));
    }
    if a > n {
        return Err(Error::domain(format!("cannot place {a} of {n} elements")));
    }
    let ln_factorial = |m: u32| -> f64 { (2..=m).map(|i| f64::from(i).ln()).sum() };
    let ln_q = f64::from(k - 1).ln() + ln_factorial(a) + ln_factorial(n - a + k - 2)
        - ln_factorial(n + k - 1);
    Ok(ln_q.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_line_skeletons_are_always_the_marked_founder() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let partition = simulate_yule_skeleton_partition(1, 0.3, 0.5, 1, &mut rng).unwrap();
            assert_eq!(partition.to_string(), "{0}*");
        }
    }

    #[test]
    fn two_line_race_matches_the_competing_rates() {
        // One line, type 0. It must split before it retypes, and the newborn
        // must not refresh, for a uniformly sampled line to carry type 0:
        // P = s/(s + r(1-s)) * (1 - r/2).
        let (r, s) = (0.2, 0.5);
        let expect = s / (s + r * (1.0 - s)) * (1.0 - r / 2.0);
        assert_relative_eq!(expect, 0.75, max_relative = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let reps = 20_000u32;
        let mut marked = 0u32;
        for _ in 0..reps {
            let partition = simulate_yule_skeleton_partition(1, r, s, 2, &mut rng).unwrap();
            marked += u32::from(partition.marked_index().is_some());
        }
        let got = f64::from(marked) / f64::from(reps);
        let se = (expect * (1.0 - expect) / f64::from(reps)).sqrt();
        assert!((got - expect).abs() < 4.0 * se, "marked fraction {got} vs {expect}");
    }

    #[test]
    fn split_times_are_yule_distributed_despite_retyping() {
        // Retype events interleave with splits but do not disturb them: the
        // wait from 2 to 3 lines stays Exp(2s). Kolmogorov-Smirnov check.
        let (r, s) = (0.3, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let reps = 10_000usize;
        let mut gaps: Vec<f64> = (0..reps)
            .map(|_| {
                let st = simulate_yule_skeleton(r, s, 3, &mut rng).unwrap();
                assert_eq!(st.split_times.len(), 2);
                assert!(st.split_times[0] < st.split_times[1]);
                st.split_times[1] - st.split_times[0]
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        let rate = 2.0 * s;
        let mut ks: f64 = 0.0;
        for (i, &g) in gaps.iter().enumerate() {
            let cdf = 1.0 - (-rate * g).exp();
            let lo = i as f64 / reps as f64;
            let hi = (i + 1) as f64 / reps as f64;
            ks = ks.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        let critical = 1.358 / (reps as f64).sqrt();
        assert!(ks < critical, "KS statistic {ks} above {critical}");
    }

    #[test]
    fn no_refreshing_means_one_marked_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..20 {
            let partition = simulate_yule_skeleton_partition(3, 0.0, 0.5, 5, &mut rng).unwrap();
            assert_eq!(partition.blocks().len(), 1);
            assert_eq!(partition.marked_index(), Some(0));
        }
    }

    #[test]
    fn sampling_all_lines_uses_each_exactly_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let partition = simulate_yule_skeleton_partition(6, 0.4, 0.5, 6, &mut rng).unwrap();
        assert_eq!(partition.n(), 6);
        let covered: usize = partition.blocks().iter().map(Vec::len).sum();
        assert_eq!(covered, 6);
    }

    #[test]
    fn skeleton_rejects_bad_inputs_and_reproduces_by_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        assert!(simulate_yule_skeleton(0.3, 0.5, 0, &mut rng).is_err());
        assert!(simulate_yule_skeleton(1.0, 0.5, 2, &mut rng).is_err());
        assert!(simulate_yule_skeleton(0.5, 0.5, 2, &mut rng).is_err());
        assert!(simulate_yule_skeleton(-0.1, 0.5, 2, &mut rng).is_err());
        assert!(simulate_yule_skeleton(0.3, 1.0, 2, &mut rng).is_err());
        assert!(simulate_yule_skeleton_partition(3, 0.3, 0.5, 2, &mut rng).is_err());
        assert!(simulate_yule_skeleton_partition(0, 0.3, 0.5, 2, &mut rng).is_err());

        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(67);
            simulate_yule_skeleton(0.3, 0.5, 10, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn tagged_line_descendant_share_has_mean_one_over_k() {
        // Once k lines exist, later lines attach to them exchangeably, so a
        // tagged line's share of the final h has mean exactly 1/k.
        let (k, h) = (5u32, 100u32);
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let reps = 4_000u32;
        let mut share_sum = 0.0;
        for _ in 0..reps {
            let st = simulate_yule_skeleton(0.1, 0.5, h, &mut rng).unwrap();
            assert!((1..h as usize).all(|i| st.parents[i] < i as u32));
            let hits = (0..h).filter(|&i| st.ancestor_at_size(k, i) == 0).count();
            share_sum += hits as f64 / f64::from(h);
        }
        let mean = share_sum / f64::from(reps);
        let expect = 1.0 / f64::from(k);
        // Share is roughly Beta(1, k-1): variance (k-1)/(k^2 (k+1)).
        let se = ((f64::from(k) - 1.0) / (f64::from(k).powi(2) * f64::from(k + 1))
            / f64::from(reps))
        .sqrt();
        assert!((mean - expect).abs() < 4.0 * se, "mean share {mean} vs {expect}");
    }

    #[test]
    fn infinite_lines_split_like_a_pure_birth_process() {
        // P(no split by t) = exp(-s t); emissions must not disturb it.
        let (s, t0) = (0.3, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(68);
        let reps = 20_000u32;
        let mut still_one = 0u32;
        for _ in 0..reps {
            let (inf_log, _) = simulate_two_type_branching(s, t0, &mut rng).unwrap();
            still_one += u32::from(inf_log.last().unwrap().1 == 1);
        }
        let expect = (-s * t0).exp();
        let got = f64::from(still_one) / f64::from(reps);
        let se = (expect * (1.0 - expect) / f64::from(reps)).sqrt();
        assert!((got - expect).abs() < 4.0 * se, "no-split fraction {got} vs {expect}");
    }

    #[test]
    fn long_run_infinite_fraction_approaches_s() {
        // Finite lines are shed at rate 2(1-s) per infinite line and drift
        // down at rate s each, so counts settle near ratio (1-s)/s and the
        // infinite fraction near s.
        let s = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(69);
        let (mut inf_total, mut fin_total) = (0.0, 0.0);
        for _ in 0..10 {
            let (inf_log, fin_log) = simulate_two_type_branching(s, 31.0, &mut rng).unwrap();
            inf_total += f64::from(inf_log.last().unwrap().1);
            fin_total += f64::from(fin_log.last().unwrap().1);
        }
        assert!(inf_total > 2_000.0, "pooled runs too small: {inf_total} infinite lines");
        let frac = inf_total / (inf_total + fin_total);
        assert!((frac - s).abs() < 0.015, "infinite fraction {frac} vs {s}");
    }

    #[test]
    fn infinite_count_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let (inf_log, fin_log) = simulate_two_type_branching(0.5, 8.0, &mut rng).unwrap();
        assert!(inf_log.windows(2).all(|w| w[1].1 == w[0].1 + 1 && w[1].0 > w[0].0));
        assert!(fin_log.windows(2).all(|w| w[1].1.abs_diff(w[0].1) == 1));
        assert!(simulate_two_type_branching(0.5, -1.0, &mut rng).is_err());
    }

    #[test]
    fn block_weights_match_hand_values() {
        assert_relative_eq!(polya_q(2, 1, 1).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(polya_q(3, 1, 2).unwrap(), 1.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(polya_q(5, 2, 4).unwrap(), 0.023809523809523808, max_relative = 1e-10);
        assert!(polya_q(1, 0, 3).is_err());
        assert!(polya_q(4, 5, 3).is_err());
    }

    #[test]
    fn block_weights_normalize_over_occupancy_counts() {
        fn binomial(n: u32, a: u32) -> f64 {
            (0..a).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
        }
        for k in 2..=10 {
            for n in 0..=8 {
                let total: f64 = (0..=n)
                    .map(|a| binomial(n, a) * polya_q(k, a, n).unwrap())
                    .sum();
                assert_relative_eq!(total, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn block_weights_match_a_size_biased_urn() {
        // Independent oracle: grow k = 5 unit blocks by n = 4 elements, each
        // joining a block with probability proportional to its size, and
        // compare the distribution of block 1's gain with C(n,a) q_{k,a,n}.
        let (k, n) = (5u32, 4u32);
        let reps = 200_000u32;
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut counts = [0u32; 5];
        for _ in 0..reps {
            let mut size_one = 1u32;
            let mut a = 0u32;
            for placed in 0..n {
                let total = k + placed;
                let u = Uniform::new(0, total).expect("nonempty").sample(&mut rng);
                if u < size_one {
                    size_one += 1;
                    a += 1;
                }
            }
            counts[a as usize] += 1;
        }
        fn binomial(n: u32, a: u32) -> f64 {
            (0..a).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
        }
        for a in 0..=n {
            let expect = binomial(n, a) * polya_q(k, a, n).unwrap();
            let got = f64::from(counts[a as usize]) / f64::from(reps);
            let se = (expect * (1.0 - expect) / f64::from(reps)).sqrt();
            assert!(
                (got - expect).abs() < 4.0 * se,
                "a={a}: frequency {got} vs {expect}"
            );
        }
    }
}
