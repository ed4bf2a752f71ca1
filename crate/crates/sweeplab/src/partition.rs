//! Marked partitions of `{0..n}` and the four pair statistics used to
//! compare the genealogy against its approximating laws.
//!
//! A marked partition is an ordinary set partition in which at most one
//! block is distinguished ("marked"). In the sweep genealogy the marked
//! block holds the sampled lineages descending from the original mutant;
//! the approximating laws produce the same shape of object, so all of them
//! share this type and can be compared atom by atom.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// A partition of `{0, 1, .., n-1}` with an optional marked block, kept in
/// canonical form: every block sorted ascending, blocks ordered by their
/// least element. Equality, ordering and hashing are canonical equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MarkedPartition {
    n: u32,
    blocks: Vec<Vec<u32>>,
    /// Index into `blocks` of the marked block, if any.
    marked: Option<usize>,
}

impl MarkedPartition {
    /// Builds a partition from explicit blocks, canonicalizing their order.
    ///
    /// Errors if the blocks do not partition `{0..n}` exactly or if
    /// `marked` does not name an existing block.
    pub fn new(n: u32, blocks: Vec<Vec<u32>>, marked: Option<usize>) -> Result<Self> {
        if let Some(m) = marked {
            if m >= blocks.len() {
                return Err(Error::domain(format!(
                    "marked block index {m} out of range for {} blocks",
                    blocks.len()
                )));
            }
        }
        // Tag the marked block before sorting so the index survives
        // canonicalization.
        let mut tagged: Vec<(Vec<u32>, bool)> = blocks
            .into_iter()
            .enumerate()
            .map(|(i, mut b)| {
                b.sort_unstable();
                (b, marked == Some(i))
            })
            .collect();
        if tagged.iter().any(|(b, _)| b.is_empty()) {
            return Err(Error::domain("empty block in partition"));
        }
        tagged.sort_unstable_by_key(|(b, _)| b[0]);

        let mut seen = vec![false; n as usize];
        for (b, _) in &tagged {
            for &x in b {
                if x >= n {
                    return Err(Error::domain(format!(
                        "element {x} outside ground set of size {n}"
                    )));
                }
                if seen[x as usize] {
                    return Err(Error::domain(format!("element {x} appears twice")));
                }
                seen[x as usize] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::domain("blocks do not cover the ground set"));
        }

        let marked = tagged.iter().position(|(_, m)| *m);
        let blocks = tagged.into_iter().map(|(b, _)| b).collect();
        Ok(MarkedPartition { n, blocks, marked })
    }

    /// Builds the partition induced by "same label": `i ~ j` iff
    /// `labels[i] == labels[j]`. The block whose label equals
    /// `marked_label` (when given, and when nonempty) becomes the marked
    /// block; an absent or empty marked class yields no mark.
    pub fn from_labels<L: Ord>(labels: &[L], marked_label: Option<&L>) -> Self {
        let n = labels.len() as u32;
        let mut groups: BTreeMap<&L, Vec<u32>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i as u32);
        }
        let mut blocks: Vec<Vec<u32>> = Vec::with_capacity(groups.len());
        let mut marked = None;
        for (l, b) in groups {
            if marked_label == Some(l) {
                marked = Some(blocks.len());
            }
            blocks.push(b);
        }
        // Label groups are already element-sorted; order blocks canonically.
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        order.sort_unstable_by_key(|&i| blocks[i][0]);
        let marked = marked.map(|m| order.iter().position(|&i| i == m).unwrap());
        let blocks = order.into_iter().map(|i| std::mem::take(&mut blocks[i])).collect();
        MarkedPartition { n, blocks, marked }
    }

    /// Ground-set size `n`.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// The blocks, in canonical order.
    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    /// Canonical index of the marked block, if any.
    pub fn marked_index(&self) -> Option<usize> {
        self.marked
    }

    /// The marked block itself, if any.
    pub fn marked_block(&self) -> Option<&[u32]> {
        self.marked.map(|m| self.blocks[m].as_slice())
    }

    /// True iff element `i` lies in the marked block.
    pub fn is_marked(&self, i: u32) -> bool {
        self.marked_block().is_some_and(|b| b.binary_search(&i).is_ok())
    }

    /// Canonical block index containing element `i`.
    pub fn block_of(&self, i: u32) -> usize {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&i).is_ok())
            .expect("element outside ground set")
    }

    /// True iff `i` and `j` lie in the same block.
    pub fn same_block(&self, i: u32, j: u32) -> bool {
        self.block_of(i) == self.block_of(j)
    }
}

impl fmt::Display for MarkedPartition {
    /// Renders e.g. `{0 2}*{1}` with `*` marking the distinguished block.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (bi, b) in self.blocks.iter().enumerate() {
            write!(f, "{{")?;
            for (k, x) in b.iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
            if self.marked == Some(bi) {
                write!(f, "*")?;
            }
        }
        Ok(())
    }
}

/// Enumerates every canonical marked partition of `{0..n}`: each set
/// partition appears once unmarked and once per choice of marked block.
/// Intended for small `n` (the count is `Bell(n) * (avg blocks + 1)`).
pub fn enumerate_marked_partitions(n: u32) -> Vec<MarkedPartition> {
    // Set partitions via restricted-growth strings.
    let mut out = Vec::new();
    let mut rgs = vec![0u32; n as usize];
    loop {
        let blocks_count = rgs.iter().copied().max().map_or(0, |m| m + 1).max(1);
        let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); blocks_count as usize];
        for (i, &g) in rgs.iter().enumerate() {
            blocks[g as usize].push(i as u32);
        }
        if n == 0 {
            blocks = vec![];
        }
        for marked in std::iter::once(None).chain((0..blocks.len()).map(Some)) {
            out.push(
                MarkedPartition::new(n, blocks.clone(), marked)
                    .expect("enumerated blocks are a valid partition"),
            );
        }
        // Advance the restricted-growth string.
        let mut i = n as usize;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if i == 0 {
                return out;
            }
            let cap = rgs[..i].iter().copied().max().unwrap() + 1;
            if rgs[i] < cap {
                rgs[i] += 1;
                for g in rgs[i + 1..].iter_mut() {
                    *g = 0;
                }
                break;
            }
        }
    }
}

/// The four pair statistics on which the genealogy and its approximations
/// are compared, for a sample of two lineages:
///
/// - `pinb`: probability a single lineage escapes the sweep (is not in the
///   marked block),
/// - `p2inb`: both lineages escape and do not coalesce,
/// - `p2cinb`: both lineages escape and coalesce,
/// - `p1B1b`: exactly one of the two escapes.
///
/// They satisfy `pinb = p2inb + p2cinb + p1B1b/2` (each pair member is a
/// uniformly chosen single lineage).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairStats {
    pub pinb: f64,
    pub p2inb: f64,
    pub p2cinb: f64,
    #[serde(rename = "p1B1b")]
    pub p1b1b: f64,
    /// Replicate count behind the estimates; 0 for analytic values.
    pub n_reps: u64,
    /// Standard errors in the order (pinb, p2inb, p2cinb, p1B1b); all zero
    /// for analytic values.
    pub se: [f64; 4],
}

impl PairStats {
    /// Exact (analytic) values: no replicates, zero standard errors.
    pub fn analytic(pinb: f64, p2inb: f64, p2cinb: f64, p1b1b: f64) -> Self {
        PairStats {
            pinb,
            p2inb,
            p2cinb,
            p1b1b,
            n_reps: 0,
            se: [0.0; 4],
        }
    }

    /// `pinb - (p2inb + p2cinb + p1B1b/2)`; zero in exact arithmetic.
    pub fn identity_residual(&self) -> f64 {
        self.pinb - (self.p2inb + self.p2cinb + self.p1b1b / 2.0)
    }

    /// Largest of the four standard errors (0 for analytic rows).
    pub fn max_se(&self) -> f64 {
        self.se.iter().fold(0.0_f64, |a, &b| a.max(b))
    }
}

/// Integer tallies behind a Monte Carlo [`PairStats`] estimate. This is the
/// object replicates merge into: pure counter addition, so parallel
/// aggregation is order-independent and results are bit-identical for any
/// worker count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairTally {
    /// Number of sampled pairs.
    pub reps: u64,
    /// Pairs in which both lineages escape and coalesce.
    pub both_escape_coal: u64,
    /// Pairs in which both lineages escape without coalescing.
    pub both_escape_no_coal: u64,
    /// Pairs in which exactly one lineage escapes.
    pub exactly_one_escapes: u64,
}

impl PairTally {
    /// Records one replicate observed as raw flags.
    pub fn observe(&mut self, escaped_a: bool, escaped_b: bool, coalesced: bool) {
        self.reps += 1;
        match (escaped_a, escaped_b) {
            (true, true) => {
                if coalesced {
                    self.both_escape_coal += 1;
                } else {
                    self.both_escape_no_coal += 1;
                }
            }
            (true, false) | (false, true) => self.exactly_one_escapes += 1,
            (false, false) => {}
        }
    }

    /// Records one replicate given as a marked partition of a pair
    /// (`n = 2`): a lineage escapes iff it is not in the marked block, and
    /// the pair coalesces iff the two lineages share a block.
    pub fn record(&mut self, pi: &MarkedPartition) -> Result<()> {
        if pi.n() != 2 {
            return Err(Error::domain(format!(
                "pair tally needs partitions of a pair, got n = {}",
                pi.n()
            )));
        }
        self.observe(!pi.is_marked(0), !pi.is_marked(1), pi.same_block(0, 1));
        Ok(())
    }

    /// Merges another tally into this one (commutative, associative).
    pub fn merge(&mut self, other: &PairTally) {
        self.reps += other.reps;
        self.both_escape_coal += other.both_escape_coal;
        self.both_escape_no_coal += other.both_escape_no_coal;
        self.exactly_one_escapes += other.exactly_one_escapes;
    }

    /// Number of escaped lineages implied by the pair counts (out of
    /// `2 * reps` lineages). Deriving it from the pair counts makes the
    /// pair-statistic identity hold exactly on every estimate.
    pub fn lineage_escapes(&self) -> u64 {
        2 * (self.both_escape_coal + self.both_escape_no_coal) + self.exactly_one_escapes
    }

    /// Point estimates with binomial standard errors.
    ///
    /// Errors on an empty tally.
    pub fn stats(&self) -> Result<PairStats> {
        if self.reps == 0 {
            return Err(Error::EmptyInput("no replicates in pair tally".into()));
        }
        let reps = self.reps as f64;
        let lineages = 2.0 * reps;
        let binom_se = |p: f64, trials: f64| (p * (1.0 - p) / trials).sqrt();

        let pinb = self.lineage_escapes() as f64 / lineages;
        let p2inb = self.both_escape_no_coal as f64 / reps;
        let p2cinb = self.both_escape_coal as f64 / reps;
        let p1b1b = self.exactly_one_escapes as f64 / reps;
        Ok(PairStats {
            pinb,
            p2inb,
            p2cinb,
            p1b1b,
            n_reps: self.reps,
            se: [
                binom_se(pinb, lineages),
                binom_se(p2inb, reps),
                binom_se(p2cinb, reps),
                binom_se(p1b1b, reps),
            ],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_orders_blocks_by_least_element() {
        let p = MarkedPartition::new(4, vec![vec![3, 1], vec![2], vec![0]], Some(0)).unwrap();
        assert_eq!(p.blocks(), &[vec![0], vec![1, 3], vec![2]]);
        // The tagged block {1,3} moved to canonical index 1.
        assert_eq!(p.marked_index(), Some(1));
        assert!(p.is_marked(3) && p.is_marked(1) && !p.is_marked(0));
        assert_eq!(p.to_string(), "{0}{1 3}*{2}");
    }

    #[test]
    fn new_rejects_malformed_partitions() {
        assert!(MarkedPartition::new(3, vec![vec![0, 1]], None).is_err()); // misses 2
        assert!(MarkedPartition::new(3, vec![vec![0, 1], vec![1, 2]], None).is_err()); // overlap
        assert!(MarkedPartition::new(3, vec![vec![0, 1, 3]], None).is_err()); // out of range
        assert!(MarkedPartition::new(2, vec![vec![0, 1], vec![]], None).is_err()); // empty block
        assert!(MarkedPartition::new(2, vec![vec![0, 1]], Some(1)).is_err()); // bad mark
    }

    #[test]
    fn from_labels_groups_by_equality_and_marks_the_named_class() {
        // Ancestors (7, 7, 9) with mutant 9: blocks {0,1},{2}, marked {2}.
        let p = MarkedPartition::from_labels(&[7u32, 7, 9], Some(&9));
        assert_eq!(p.blocks(), &[vec![0, 1], vec![2]]);
        assert_eq!(p.marked_block(), Some(&[2u32][..]));

        // Marked label absent from the sample: no marked block.
        let p = MarkedPartition::from_labels(&[7u32, 7, 8], Some(&9));
        assert_eq!(p.marked_index(), None);

        // No marked label requested.
        let p = MarkedPartition::from_labels(&[1u32, 2, 1], None);
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1]]);
        assert_eq!(p.marked_index(), None);
    }

    #[test]
    fn enumeration_counts_match_bell_numbers_with_marks() {
        // Partitions of n elements, each counted once per mark choice
        // (none, or one of its blocks), i.e. Bell(n) + sum of block counts:
        // n=1 -> 2; n=2 -> 5; n=3 -> 5 + 10 = 15; n=4 -> 15 + 37 = 52.
        assert_eq!(enumerate_marked_partitions(1).len(), 2);
        assert_eq!(enumerate_marked_partitions(2).len(), 5);
        assert_eq!(enumerate_marked_partitions(3).len(), 15);
        assert_eq!(enumerate_marked_partitions(4).len(), 52);

        // All distinct and all canonical-valid.
        let mut all = enumerate_marked_partitions(4);
        let before = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), before);
    }

    #[test]
    fn pair_tally_estimates_and_identity() {
        let mut t = PairTally::default();
        // 2 coalescing escapes, 3 disjoint escapes, 4 single escapes, 1 none.
        for _ in 0..2 {
            t.observe(true, true, true);
        }
        for _ in 0..3 {
            t.observe(true, true, false);
        }
        for _ in 0..4 {
            t.observe(true, false, false);
        }
        t.observe(false, false, false);
        let s = t.stats().unwrap();
        assert_eq!(t.reps, 10);
        assert_eq!(t.lineage_escapes(), 14);
        assert!((s.pinb - 0.7).abs() < 1e-15);
        assert!((s.p2inb - 0.3).abs() < 1e-15);
        assert!((s.p2cinb - 0.2).abs() < 1e-15);
        assert!((s.p1b1b - 0.4).abs() < 1e-15);
        assert!(s.identity_residual().abs() < 1e-15);
        assert!(s.se.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn pair_tally_from_partitions() {
        let mut t = PairTally::default();
        // Both in the marked block: no escapes.
        let both = MarkedPartition::new(2, vec![vec![0, 1]], Some(0)).unwrap();
        // Coalesced but unmarked: both escape and coalesce.
        let coal = MarkedPartition::new(2, vec![vec![0, 1]], None).unwrap();
        // Singletons, one marked: exactly one escapes.
        let one = MarkedPartition::new(2, vec![vec![0], vec![1]], Some(0)).unwrap();
        t.record(&both).unwrap();
        t.record(&coal).unwrap();
        t.record(&one).unwrap();
        assert_eq!(t.both_escape_coal, 1);
        assert_eq!(t.exactly_one_escapes, 1);
        assert_eq!(t.lineage_escapes(), 3);

        let bad = MarkedPartition::new(3, vec![vec![0, 1, 2]], None).unwrap();
        assert!(t.record(&bad).is_err());
    }

    #[test]
    fn empty_tally_errors() {
        assert!(PairTally::default().stats().is_err());
    }
}
