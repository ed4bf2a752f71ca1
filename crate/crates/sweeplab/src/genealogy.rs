//! Backward ancestry tracing through a recorded run.
//!
//! For a sample of individuals taken at fixation, each one's *neutral-locus*
//! lineage is followed back to time 0: at every event whose victim slot the
//! lineage occupies, it jumps to the newborn's neutral source (the parent,
//! or the recombination draw). The trace records where each lineage lands at
//! time 0, when pairs of lineages coalesce, and the latest time each
//! lineage's ancestor carried the wild-type allele — the lineage's escape
//! from the sweeping background, if it ever sat there.
//!
//! Times are state times: the population state at time `t` is the
//! configuration after the first `t` events, so `escape_time = Some(t)`
//! means the ancestor at state time `t` carried `Wild`.

use crate::error::{Error, Result};
use crate::moran::SweepTrajectory;
use crate::partition::{MarkedPartition, PairStats, PairTally};

/// The neutral-locus ancestry of a fixed-time sample, traced back to time 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AncestryTrace {
    /// Number of sampled lineages.
    pub sample_size: u32,
    /// The sampled slots at fixation time, pairwise distinct.
    pub sample: Vec<u32>,
    /// Slot of each lineage's neutral ancestor at time 0.
    pub ancestor_at_0: Vec<u32>,
    /// Whether that ancestor is the founding mutant (the only `B` carrier at
    /// time 0).
    pub ancestor_has_mutant_allele: Vec<bool>,
    /// Latest state time at which the lineage's ancestor carried `Wild`;
    /// `None` if the ancestor carried `B` all the way back (then it is the
    /// founder).
    pub escape_time: Vec<Option<u32>>,
    /// Recombination events along each lineage's ancestral path.
    pub recombinations: Vec<u32>,
    /// Slot of the founding mutant.
    pub initial_mutant: u32,
    /// `tau_levels[j]` is the first state time with `B` count `j`, for
    /// `j in 1..=2N` (index 0 unused); fixed runs visit every level.
    pub tau_levels: Vec<u32>,
    /// Latest state time at which each pair's ancestors coincide, upper
    /// triangle in row-major order; see [`AncestryTrace::coalescence_between`].
    coalescence: Vec<Option<u32>>,
}

/// Index of pair `(i, j)`, `i < j`, in a row-major upper triangle over `n`.
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl AncestryTrace {
    /// State time at which lineages `i` and `j` start sharing their neutral
    /// ancestor, or `None` if they still differ at time 0.
    pub fn coalescence_between(&self, i: u32, j: u32) -> Option<u32> {
        let n = self.sample_size;
        assert!(i < n && j < n && i != j, "lineage indices out of range");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.coalescence[pair_index(n as usize, a as usize, b as usize)]
    }

    /// The sample's marked ancestral partition: lineages grouped by their
    /// time-0 ancestor, with the founder's block marked (no block is marked
    /// if every lineage escaped to a wild-type ancestor).
    pub fn theta_partition(&self) -> MarkedPartition {
        MarkedPartition::from_labels(&self.ancestor_at_0, Some(&self.initial_mutant))
    }

    /// Number of lineages whose ancestor still carried `Wild` at or after
    /// the first time the `B` count reached `j` — the sample's wild-side
    /// occupancy when the sweep passes level `j`.
    pub fn escape_count_at_level(&self, j: u32) -> Result<u32> {
        if j == 0 || j as usize >= self.tau_levels.len() {
            return Err(Error::domain(format!(
                "level {j} outside 1..={}",
                self.tau_levels.len() - 1
            )));
        }
        let tau = self.tau_levels[j as usize];
        Ok(self
            .escape_time
            .iter()
            .flatten()
            .filter(|&&t| t >= tau)
            .count() as u32)
    }

    /// Lineages whose ancestral path recombined at least twice.
    pub fn lineages_with_multiple_recombinations(&self) -> u32 {
        self.recombinations.iter().filter(|&&c| c >= 2).count() as u32
    }
}

/// Traces the neutral-locus ancestry of `sample` (distinct slots) from the
/// end of a fixed run back to time 0.
pub fn trace_ancestry(traj: &SweepTrajectory, sample: &[u32]) -> Result<AncestryTrace> {
    let two_n = traj.params.two_n();
    if !traj.fixed {
        return Err(Error::domain(
            "ancestry is traced from fixation; this run did not fix".to_string(),
        ));
    }
    if sample.is_empty() {
        return Err(Error::EmptyInput("sample of lineages is empty".to_string()));
    }
    let n = sample.len();
    let mut seen = vec![false; two_n as usize];
    for &slot in sample {
        if slot >= two_n {
            return Err(Error::domain(format!(
                "sampled slot {slot} outside population 0..{two_n}"
            )));
        }
        if std::mem::replace(&mut seen[slot as usize], true) {
            return Err(Error::domain(format!("sampled slot {slot} repeated")));
        }
    }

    // Walk events backward, maintaining the allele configuration and each
    // lineage's current ancestor slot. At fixation everyone carries B.
    let mut alleles = vec![1u8; two_n as usize];
    let mut pos: Vec<u32> = sample.to_vec();
    let mut escape: Vec<Option<u32>> = vec![None; n];
    let mut recombinations = vec![0u32; n];
    let mut coalescence: Vec<Option<u32>> = vec![None; n * (n - 1) / 2];

    for e in (0..traj.events.len()).rev() {
        let ev = traj.events[e];
        // Undo the event: the victim slot reverts to its previous occupant,
        // giving the configuration at state time `e`.
        alleles[ev.victim as usize] = u8::from(ev.victim_prev_allele.is_b());
        let mut any_moved = false;
        for i in 0..n {
            if pos[i] == ev.victim {
                // The occupant at this slot is the event's newborn; its
                // neutral locus came from `neutral_source` (which may be the
                // same slot, then meaning the previous occupant).
                pos[i] = ev.neutral_source;
                any_moved = true;
                if ev.recombined {
                    recombinations[i] += 1;
                }
                if escape[i].is_none() && alleles[ev.neutral_source as usize] == 0 {
                    escape[i] = Some(e as u32);
                }
            }
        }
        if any_moved {
            for i in 0..n {
                for j in i + 1..n {
                    let idx = pair_index(n, i, j);
                    if coalescence[idx].is_none() && pos[i] == pos[j] {
                        coalescence[idx] = Some(e as u32);
                    }
                }
            }
        }
    }

    // The configuration has been rolled back to time 0: one founding B copy.
    let carriers: u32 = alleles.iter().map(|&a| u32::from(a)).sum();
    if carriers != 1 || alleles[traj.initial_mutant as usize] != 1 {
        return Err(Error::integrity(format!(
            "rollback to time 0 left {carriers} B carriers (founder slot {})",
            traj.initial_mutant
        )));
    }
    let ancestor_has_mutant_allele: Vec<bool> =
        pos.iter().map(|&p| p == traj.initial_mutant).collect();
    for (i, &p) in pos.iter().enumerate() {
        let is_b = alleles[p as usize] == 1;
        if is_b != ancestor_has_mutant_allele[i] {
            return Err(Error::integrity(format!(
                "lineage {i} ancestor allele disagrees with founder identity"
            )));
        }
        debug_assert!(
            escape[i].is_some() || ancestor_has_mutant_allele[i],
            "a lineage that never visited the wild background must reach the founder"
        );
    }

    // First-visit times of every level; fixed runs pass each one going up.
    let mut tau_levels = vec![0u32; two_n as usize + 1];
    let mut reached = 1u32;
    for (e, &x) in traj.x_path.iter().enumerate() {
        if x > reached {
            tau_levels[x as usize] = e as u32 + 1;
            reached = x;
        }
    }
    debug_assert_eq!(reached, two_n);

    Ok(AncestryTrace {
        sample_size: n as u32,
        sample: sample.to_vec(),
        ancestor_at_0: pos,
        ancestor_has_mutant_allele,
        escape_time: escape,
        recombinations,
        initial_mutant: traj.initial_mutant,
        tau_levels,
        coalescence,
    })
}

/// Pools size-2 traces into the four pair statistics (each lineage's escape
/// is reaching a wild-type time-0 ancestor; coalescence is sharing it).
pub fn pair_stats_from_traces(traces: &[AncestryTrace]) -> Result<PairStats> {
    if traces.is_empty() {
        return Err(Error::EmptyInput("no ancestry traces to pool".to_string()));
    }
    let mut tally = PairTally::default();
    for trace in traces {
        if trace.sample_size != 2 {
            return Err(Error::domain(format!(
                "pair statistics need samples of size 2, got {}",
                trace.sample_size
            )));
        }
        tally.observe(
            !trace.ancestor_has_mutant_allele[0],
            !trace.ancestor_has_mutant_allele[1],
            trace.ancestor_at_0[0] == trace.ancestor_at_0[1],
        );
    }
    tally.stats()
}
