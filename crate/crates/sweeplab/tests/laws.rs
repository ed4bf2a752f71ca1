//! Cross-module statistical laws: relationships between the forward
//! simulator, the two approximating partition laws, and the closed-form
//! oracles that only show up when the pieces are combined.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sweeplab::analytics::q_j_value;
use sweeplab::branching::simulate_yule_skeleton_partition;
use sweeplab::coin_flip::alpha_and_p;
use sweeplab::harness::{estimate_tv_distance, run_moran_replicates};
use sweeplab::paintbox::{paintbox_pair_stats_exact, sample_paintbox, sample_paintbox_thinned};
use sweeplab::partition::{enumerate_marked_partitions, MarkedPartition};
use sweeplab::Params;

fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let ln_factorial = |m: u32| -> f64 { (2..=m).map(|i| f64::from(i).ln()).sum() };
    (0..=n)
        .map(|k| {
            let ln_c = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
            if p == 0.0 {
                return f64::from(k == 0);
            }
            if p == 1.0 {
                return f64::from(k == n);
            }
            (ln_c + f64::from(k) * p.ln() + f64::from(n - k) * (1.0 - p).ln()).exp()
        })
        .collect()
}

/// Ancestral lineages essentially never recombine twice during one sweep:
/// the double-recombination fraction is an order of magnitude below the
/// single-escape probability at moderate population size.
#[test]
fn multiple_recombinations_stay_rare() {
    let params = Params::new(2_000, 0.1, 0.002, 2, 2024).unwrap();
    let agg = run_moran_replicates(params, 500, &[1], None, false).unwrap();
    let multi = agg.multi_recomb_lineages as f64 / agg.lineages as f64;
    let stats = agg.pair.stats().unwrap();
    assert!(
        multi < 0.06,
        "double-recombination fraction {multi} too large"
    );
    assert!(
        multi < stats.pinb,
        "double recombinations ({multi}) should be rarer than escapes ({})",
        stats.pinb
    );
}

/// The skeleton partition is exchangeable: atoms that are relabelings of
/// each other (same block-size multiset, same marked-block size) occur with
/// equal frequency.
#[test]
fn skeleton_partition_is_exchangeable() {
    let (n, r, s, h) = (3u32, 0.1, 0.4, 40u32);
    let reps = 20_000u32;
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for _ in 0..reps {
        let pi = simulate_yule_skeleton_partition(n, r, s, h, &mut rng).unwrap();
        *counts.entry(pi.to_string()).or_insert(0) += 1;
    }

    // Group every atom of the state space by its relabeling class.
    let mut classes: BTreeMap<(Vec<usize>, Option<usize>), Vec<f64>> = BTreeMap::new();
    for atom in enumerate_marked_partitions(n) {
        let mut sizes: Vec<usize> = atom.blocks().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        let marked_size = atom.marked_block().map(<[u32]>::len);
        let freq = counts.get(&atom.to_string()).copied().unwrap_or(0) as f64 / f64::from(reps);
        classes.entry((sizes, marked_size)).or_default().push(freq);
    }
    for ((sizes, marked), freqs) in classes {
        for i in 0..freqs.len() {
            for j in i + 1..freqs.len() {
                let gap = (freqs[i] - freqs[j]).abs();
                let se = ((freqs[i] + freqs[j] + 1e-12) / f64::from(reps)).sqrt();
                assert!(
                    gap < 4.5 * se + 1e-9,
                    "class {sizes:?}/{marked:?} not exchangeable: {freqs:?}"
                );
            }
        }
    }
}

/// The skeleton sampled at a moderate size is already close in total
/// variation to the stick-breaking paintbox with the same color budget.
#[test]
fn skeleton_law_approaches_the_paintbox() {
    let (n, r, s, h) = (3u32, 0.002, 0.1, 100u32);
    let reps = 20_000;
    let mut rng_a = ChaCha8Rng::seed_from_u64(502);
    let mut rng_b = ChaCha8Rng::seed_from_u64(503);
    let skeleton: Vec<MarkedPartition> = (0..reps)
        .map(|_| simulate_yule_skeleton_partition(n, r, s, h, &mut rng_a).unwrap())
        .collect();
    let paintbox: Vec<MarkedPartition> = (0..reps)
        .map(|_| sample_paintbox(n, r, s, h, &mut rng_b).unwrap().1)
        .collect();
    let tv = estimate_tv_distance(&skeleton, &paintbox).unwrap();
    assert!(tv < 0.04, "total variation {tv} too large at H = {h}");
}

/// At the reference population size the coin-flip law and the paintbox law
/// agree on the escape probability to the logarithmic accuracy both claim,
/// with the paintbox always the slightly smaller of the two.
#[test]
fn coin_flip_tracks_the_paintbox_escape_probability() {
    for (r, tol) in [(0.00106, 0.03), (0.00516, 0.08)] {
        let (_, p) = alpha_and_p(10_000, r, 0.1).unwrap();
        let coin_escape = 1.0 - p;
        let exact = paintbox_pair_stats_exact(r, 0.1, 2_000).unwrap();
        assert!(exact.identity_residual().abs() < 1e-9);
        let gap = coin_escape - exact.pinb;
        assert!(
            gap.abs() < tol,
            "escape gap {gap} at r = {r} (coin {coin_escape}, paintbox {})",
            exact.pinb
        );
        assert!(gap > 0.0, "paintbox escape should undercut the coin flip");
    }
}

/// Thinning is a coupled coarsening: with the same underlying draw, `q = 0`
/// changes nothing, `q = 1` shatters the sample into unmarked singletons,
/// and any `q` can only increase the block count and only remove the mark.
#[test]
fn thinning_couples_to_the_plain_paintbox() {
    let (n, r, s, l) = (4u32, 0.05, 0.5, 50u32);
    for seed in 0..2_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (draw, plain) = sample_paintbox(n, r, s, l, &mut rng).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (draw0, same) = sample_paintbox_thinned(n, r, s, l, 0.0, &mut rng).unwrap();
        assert_eq!(draw0, draw);
        assert_eq!(same, plain);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, shattered) = sample_paintbox_thinned(n, r, s, l, 1.0, &mut rng).unwrap();
        assert_eq!(shattered.blocks().len(), n as usize);
        assert!(shattered.marked_index().is_none());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, thinned) = sample_paintbox_thinned(n, r, s, l, 0.5, &mut rng).unwrap();
        assert!(thinned.blocks().len() >= plain.blocks().len());
        if thinned.marked_index().is_some() {
            assert!(plain.marked_index().is_some());
        }
    }
}

/// The escape count K at sweep level J approaches Binomial(n, q_J) as J
/// rises: the clumping from lineages that coalesce and then escape together
/// decays like 1/J, so the total-variation gap at J = 20 must be well below
/// the gap at J = 1, while the mean escape frequency tracks q_J at both
/// levels.
#[test]
fn escape_counts_approach_binomial_as_the_level_rises() {
    let (n_pop, s, r) = (500u32, 0.15, 0.003);
    let params = Params::new(n_pop, s, r, 4, 7_001).unwrap();
    let agg = run_moran_replicates(params, 2_000, &[1, 20], None, false).unwrap();
    let mut tvs = Vec::new();
    for (idx, j) in [1u32, 20].into_iter().enumerate() {
        let q = q_j_value(n_pop, j, r, s).unwrap();
        let pmf = binomial_pmf(4, q);
        let freqs = agg.escape_frequencies(idx);
        let tv: f64 = freqs
            .iter()
            .zip(&pmf)
            .map(|(f, p)| (f - p).abs())
            .sum::<f64>()
            / 2.0;
        let mean: f64 =
            freqs.iter().enumerate().map(|(k, f)| k as f64 * f).sum::<f64>() / 4.0;
        assert!(
            (mean - q).abs() < 0.035,
            "mean escape frequency {mean} vs q_{j} = {q}"
        );
        tvs.push(tv);
    }
    assert!(tvs[0] < 0.30, "TV at J=1 out of range: {}", tvs[0]);
    assert!(tvs[1] < 0.17, "TV at J=20 out of range: {}", tvs[1]);
    assert!(
        tvs[1] < tvs[0] - 0.03,
        "binomial approximation should improve with J: {tvs:?}"
    );
}

/// The pair statistics of the simulated genealogy stay close to the exact
/// paintbox values even at a small population size.
#[test]
fn moran_pair_statistics_track_the_paintbox() {
    let (n, s, r) = (300u32, 0.2, 0.01);
    let params = Params::new(n, s, r, 2, 88).unwrap();
    let agg = run_moran_replicates(params, 1_600, &[1], None, false).unwrap();
    let mc = agg.pair.stats().unwrap();
    let l = (f64::from(2 * n) * s).floor() as u32;
    let exact = paintbox_pair_stats_exact(r, s, l).unwrap();
    for (got, want, label) in [
        (mc.pinb, exact.pinb, "pinb"),
        (mc.p2inb, exact.p2inb, "p2inb"),
        (mc.p2cinb, exact.p2cinb, "p2cinb"),
        (mc.p1b1b, exact.p1b1b, "p1B1b"),
    ] {
        assert!(
            (got - want).abs() < 0.06,
            "{label}: simulated {got} vs paintbox {want}"
        );
    }
}
