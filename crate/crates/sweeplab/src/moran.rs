//! Forward simulation of the two-locus replacement model.
//!
//! The population holds `2N` haploid individuals in slots `0..2N`. Each
//! carries a selected-locus allele (`B`, the sweeping beneficial allele, or
//! `Wild`) and an implicit linked neutral locus. One time step proposes a
//! replacement: a victim slot and a parent slot are drawn uniformly and
//! independently (they may coincide). If the victim carries `B` and the
//! parent `Wild`, the proposal is rejected with probability `s`; otherwise
//! the victim dies and is replaced by the parent's newborn copy. The newborn
//! takes the parent's selected allele; its neutral locus also comes from the
//! parent unless a recombination coin with probability `r` reassigns it to a
//! freshly drawn uniform slot (which may be the victim or the parent).
//!
//! A run starts from a single `B` copy in a uniform slot and ends when the
//! `B` count absorbs at `0` or `2N`. The conditioned entry points resample
//! whole runs until one fixes.
//!
//! Seed stability contract: a run first draws the founder slot; each proposal
//! then consumes draws in the fixed order victim, parent, rejection coin
//! (only when the victim carries `B` and the parent `Wild`), recombination
//! coin (only when accepted), recombination source (only when recombining).

use crate::error::{Error, Result};
use crate::params::Params;
use rand::distr::{Bernoulli, Distribution, Uniform};
use rand::Rng;

/// Selected-locus allele of one individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Allele {
    /// The sweeping beneficial allele.
    B,
    /// The wild-type background allele.
    Wild,
}

impl Allele {
    #[inline]
    pub fn is_b(self) -> bool {
        matches!(self, Allele::B)
    }

    #[inline]
    fn from_u8(v: u8) -> Self {
        if v == 1 {
            Allele::B
        } else {
            Allele::Wild
        }
    }

    #[inline]
    fn as_u8(self) -> u8 {
        match self {
            Allele::B => 1,
            Allele::Wild => 0,
        }
    }
}

/// One accepted replacement event. Rejected proposals leave no record; only
/// their per-level counts appear in [`SweepTrajectory::rejected`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    /// Slot whose occupant dies and is replaced by the newborn.
    pub victim: u32,
    /// Slot of the parent; the newborn copies the parent's selected allele.
    pub parent: u32,
    /// Slot the newborn's neutral locus descends from: the parent, or a
    /// fresh uniform draw (possibly the victim or the parent again) when the
    /// newborn recombined.
    pub neutral_source: u32,
    /// Whether the neutral locus came from a fresh uniform draw.
    pub recombined: bool,
    /// The dying occupant's allele, kept for integrity checks and for
    /// rebuilding allele configurations backward in time.
    pub victim_prev_allele: Allele,
}

/// A complete recorded run of the replacement model.
///
/// `events[e]` moves the population from time `e` to time `e + 1`; the state
/// at time `t` is the configuration after the first `t` events. The run ends
/// at time `T = events.len()` with the `B` count at `0` or `2N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrajectory {
    pub params: Params,
    /// Slot of the founding `B` copy at time 0.
    pub initial_mutant: u32,
    /// Accepted replacement events, in time order.
    pub events: Vec<EventRecord>,
    /// `x_path[e]` is the `B`-carrier count after `events[e]`; the count at
    /// time 0 is 1.
    pub x_path: Vec<u32>,
    /// `rejected[k]` counts rejected proposals made while the `B` count was
    /// `k`. They hold the state and are invisible to the genealogy but enter
    /// holding-time statistics.
    pub rejected: Vec<u64>,
    /// Whether the run ended with `B` fixed (count `2N`).
    pub fixed: bool,
}

impl SweepTrajectory {
    /// An empty trajectory buffer for `params`, for use with a [`Sweeper`];
    /// reusing one across runs avoids repeated large allocations.
    pub fn empty(params: Params) -> Self {
        Self {
            params,
            initial_mutant: 0,
            events: Vec::new(),
            x_path: Vec::new(),
            rejected: vec![0; params.two_n() as usize + 1],
            fixed: false,
        }
    }

    /// Number of replacement events, i.e. the final time index `T`.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `B`-carrier count at time `t`, for `t <= len()`.
    pub fn count_at(&self, t: usize) -> u32 {
        if t == 0 {
            1
        } else {
            self.x_path[t - 1]
        }
    }

    /// First time the `B` count equals `j`, if the run ever reaches it.
    pub fn tau(&self, j: u32) -> Option<u32> {
        if j == 1 {
            return Some(0);
        }
        self.x_path.iter().position(|&x| x == j).map(|i| i as u32 + 1)
    }
}

/// Replays a trajectory from scratch and checks every recorded event against
/// the model's rules: stored victim alleles match the evolving configuration,
/// the count path tracks the allele changes, non-recombined events copy the
/// neutral locus from the parent, and the run ends exactly at absorption.
pub fn verify_trajectory(traj: &SweepTrajectory) -> Result<()> {
    let two_n = traj.params.two_n();
    let fail = |msg: String| Err(Error::integrity(msg));
    if traj.x_path.len() != traj.events.len() {
        return fail(format!(
            "count path has {} entries for {} events",
            traj.x_path.len(),
            traj.events.len()
        ));
    }
    if traj.initial_mutant >= two_n {
        return fail(format!("founder slot {} out of range", traj.initial_mutant));
    }
    let mut alleles = vec![0u8; two_n as usize];
    alleles[traj.initial_mutant as usize] = 1;
    let mut k = 1u32;
    for (e, ev) in traj.events.iter().enumerate() {
        if k == 0 || k == two_n {
            return fail(format!("event {e} happens after absorption"));
        }
        if ev.victim >= two_n || ev.parent >= two_n || ev.neutral_source >= two_n {
            return fail(format!("event {e} references a slot outside 0..{two_n}"));
        }
        if !ev.recombined && ev.neutral_source != ev.parent {
            return fail(format!(
                "event {e} took its neutral locus from a non-parent without recombining"
            ));
        }
        let va = alleles[ev.victim as usize];
        if va != ev.victim_prev_allele.as_u8() {
            return fail(format!(
                "event {e} records the victim's allele as {:?}, configuration says {:?}",
                ev.victim_prev_allele,
                Allele::from_u8(va)
            ));
        }
        let pa = alleles[ev.parent as usize];
        alleles[ev.victim as usize] = pa;
        k = k + u32::from(pa) - u32::from(va);
        if traj.x_path[e] != k {
            return fail(format!(
                "count path says {} after event {e}, replay says {k}",
                traj.x_path[e]
            ));
        }
    }
    if traj.fixed != (k == two_n) || (k != 0 && k != two_n) {
        return fail(format!("run ends at count {k} with fixed = {}", traj.fixed));
    }
    if traj.rejected.len() != two_n as usize + 1
        || traj.rejected[0] != 0
        || traj.rejected[two_n as usize] != 0
    {
        return fail("rejected-proposal counts at absorbing levels".into());
    }
    Ok(())
}

/// Per-level jump and one-step event counts aggregated over conditioned
/// runs. Everything is an integer counter, so tallies merged from different
/// workers agree bit for bit regardless of split or order.
///
/// Levels index by the `B` count `k` *before* a proposal; the direction
/// index is `d = l - k + 1` for a step `k -> l`, i.e. `0` down, `1` hold,
/// `2` up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepTally {
    pub two_n: u32,
    /// Number of conditioned runs accumulated.
    pub sweeps: u64,
    /// `ups[k]`: proposals moving the count `k -> k+1`, summed over runs.
    pub ups: Vec<u64>,
    /// `downs[k]`: proposals moving the count `k -> k-1`.
    pub downs: Vec<u64>,
    /// `holds[k]`: proposals leaving the count at `k` — same-allele copies,
    /// self-replacements and rejected proposals.
    pub holds: Vec<u64>,
    /// Per-run sums of squares of the `ups`/`downs`/`holds` counts, for
    /// between-run standard errors.
    pub ups_sq: Vec<u128>,
    pub downs_sq: Vec<u128>,
    pub holds_sq: Vec<u128>,
    /// Steps `k -> l` whose newborn carries `B` with a `Wild` neutral
    /// source, indexed `[k][d]`.
    pub rec_to_b: Vec<[u64; 3]>,
    /// Steps whose newborn carries `Wild` with a `B` neutral source.
    pub rec_to_wild: Vec<[u64; 3]>,
    /// Steps creating a coalescing pair (the newborn and its neutral source,
    /// when distinct slots), split by the pair's alleles after the step.
    pub coal_bb: Vec<[u64; 3]>,
    pub coal_wild: Vec<[u64; 3]>,
    pub coal_mixed: Vec<[u64; 3]>,
}

impl SweepTally {
    pub fn new(two_n: u32) -> Self {
        let len = two_n as usize + 1;
        Self {
            two_n,
            sweeps: 0,
            ups: vec![0; len],
            downs: vec![0; len],
            holds: vec![0; len],
            ups_sq: vec![0; len],
            downs_sq: vec![0; len],
            holds_sq: vec![0; len],
            rec_to_b: vec![[0; 3]; len],
            rec_to_wild: vec![[0; 3]; len],
            coal_bb: vec![[0; 3]; len],
            coal_wild: vec![[0; 3]; len],
            coal_mixed: vec![[0; 3]; len],
        }
    }

    /// Adds another tally (from a different worker or batch) into this one.
    pub fn merge(&mut self, other: &SweepTally) -> Result<()> {
        if self.two_n != other.two_n {
            return Err(Error::domain(format!(
                "cannot merge tallies for 2N = {} and 2N = {}",
                self.two_n, other.two_n
            )));
        }
        self.sweeps += other.sweeps;
        let add = |a: &mut Vec<u64>, b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        let add_sq =
            |a: &mut Vec<u128>, b: &[u128]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        let add3 = |a: &mut Vec<[u64; 3]>, b: &[[u64; 3]]| {
            for (x, y) in a.iter_mut().zip(b) {
                for d in 0..3 {
                    x[d] += y[d];
                }
            }
        };
        add(&mut self.ups, &other.ups);
        add(&mut self.downs, &other.downs);
        add(&mut self.holds, &other.holds);
        add_sq(&mut self.ups_sq, &other.ups_sq);
        add_sq(&mut self.downs_sq, &other.downs_sq);
        add_sq(&mut self.holds_sq, &other.holds_sq);
        add3(&mut self.rec_to_b, &other.rec_to_b);
        add3(&mut self.rec_to_wild, &other.rec_to_wild);
        add3(&mut self.coal_bb, &other.coal_bb);
        add3(&mut self.coal_wild, &other.coal_wild);
        add3(&mut self.coal_mixed, &other.coal_mixed);
        Ok(())
    }

    /// Number of steps `k -> k + (d - 1)`, the denominator for the one-step
    /// event frequencies at that transition.
    pub fn step_count(&self, k: u32, d: usize) -> u64 {
        match d {
            0 => self.downs[k as usize],
            1 => self.holds[k as usize],
            2 => self.ups[k as usize],
            _ => panic!("direction index must be 0, 1 or 2"),
        }
    }

    /// Folds one run's counts into the aggregate.
    fn absorb(&mut self, a: &AttemptTally) {
        self.sweeps += 1;
        for k in 0..self.ups.len() {
            let (u, d, h) = (
                u64::from(a.ups[k]),
                u64::from(a.downs[k]),
                u64::from(a.holds[k]),
            );
            self.ups[k] += u;
            self.downs[k] += d;
            self.holds[k] += h;
            self.ups_sq[k] += u128::from(u) * u128::from(u);
            self.downs_sq[k] += u128::from(d) * u128::from(d);
            self.holds_sq[k] += u128::from(h) * u128::from(h);
            for dir in 0..3 {
                self.rec_to_b[k][dir] += u64::from(a.rec_to_b[k][dir]);
                self.rec_to_wild[k][dir] += u64::from(a.rec_to_wild[k][dir]);
                self.coal_bb[k][dir] += u64::from(a.coal_bb[k][dir]);
                self.coal_wild[k][dir] += u64::from(a.coal_wild[k][dir]);
                self.coal_mixed[k][dir] += u64::from(a.coal_mixed[k][dir]);
            }
        }
    }
}

/// Sample mean and standard error of the mean for a per-run count with total
/// `sum` and per-run sum of squares `sum_sq` over `n` runs.
pub fn mean_and_se(sum: u64, sum_sq: u128, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = (sum_sq as f64 - nf * mean * mean) / (nf - 1.0);
    (mean, (var.max(0.0) / nf).sqrt())
}

/// Raw counts for a single run attempt, discarded if the attempt dies.
struct AttemptTally {
    ups: Vec<u32>,
    downs: Vec<u32>,
    holds: Vec<u32>,
    rec_to_b: Vec<[u32; 3]>,
    rec_to_wild: Vec<[u32; 3]>,
    coal_bb: Vec<[u32; 3]>,
    coal_wild: Vec<[u32; 3]>,
    coal_mixed: Vec<[u32; 3]>,
}

impl AttemptTally {
    fn new(two_n: u32) -> Self {
        let len = two_n as usize + 1;
        Self {
            ups: vec![0; len],
            downs: vec![0; len],
            holds: vec![0; len],
            rec_to_b: vec![[0; 3]; len],
            rec_to_wild: vec![[0; 3]; len],
            coal_bb: vec![[0; 3]; len],
            coal_wild: vec![[0; 3]; len],
            coal_mixed: vec![[0; 3]; len],
        }
    }

    fn reset(&mut self) {
        self.ups.fill(0);
        self.downs.fill(0);
        self.holds.fill(0);
        self.rec_to_b.fill([0; 3]);
        self.rec_to_wild.fill([0; 3]);
        self.coal_bb.fill([0; 3]);
        self.coal_wild.fill([0; 3]);
        self.coal_mixed.fill([0; 3]);
    }
}

/// Reusable simulation workspace. Owns the trajectory and scratch buffers so
/// repeated runs at the same parameters allocate nothing per run.
pub struct Sweeper {
    traj: SweepTrajectory,
    alleles: Vec<u8>,
    scratch: Option<AttemptTally>,
    attempts: u64,
}

impl Sweeper {
    /// Panics if `params` fails [`crate::params::validate_params`].
    pub fn new(params: Params) -> Self {
        if let Err(e) =
            Params::new(params.n, params.s, params.r, params.sample_size, params.seed)
        {
            panic!("invalid simulation parameters: {e}");
        }
        Self {
            traj: SweepTrajectory::empty(params),
            alleles: vec![0; params.two_n() as usize],
            scratch: None,
            attempts: 0,
        }
    }

    /// The last completed run.
    pub fn trajectory(&self) -> &SweepTrajectory {
        &self.traj
    }

    pub fn into_trajectory(self) -> SweepTrajectory {
        self.traj
    }

    /// Total run attempts so far, including ones that died.
    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    /// One unconditioned run from a fresh founder, to absorption either way.
    pub fn run_once<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &SweepTrajectory {
        self.attempts += 1;
        run_attempt(rng, &mut self.traj, &mut self.alleles, None);
        &self.traj
    }

    /// Re-runs until a run fixes; the accepted run is left in the buffer.
    pub fn run_conditioned<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &SweepTrajectory {
        loop {
            self.attempts += 1;
            if run_attempt(rng, &mut self.traj, &mut self.alleles, None) {
                return &self.traj;
            }
        }
    }

    /// Like [`Sweeper::run_conditioned`], additionally folding the accepted
    /// run's jump and one-step event counts into `tally`.
    pub fn run_conditioned_tallied<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        tally: &mut SweepTally,
    ) -> &SweepTrajectory {
        assert_eq!(
            tally.two_n,
            self.traj.params.two_n(),
            "tally sized for a different population"
        );
        let two_n = self.traj.params.two_n();
        let scratch = self.scratch.get_or_insert_with(|| AttemptTally::new(two_n));
        loop {
            self.attempts += 1;
            scratch.reset();
            if run_attempt(rng, &mut self.traj, &mut self.alleles, Some(scratch)) {
                tally.absorb(scratch);
                return &self.traj;
            }
        }
    }
}

/// One unconditioned run of the replacement model from a single `B` copy.
pub fn simulate_sweep<R: Rng + ?Sized>(params: &Params, rng: &mut R) -> SweepTrajectory {
    let mut sweeper = Sweeper::new(*params);
    sweeper.run_once(rng);
    sweeper.into_trajectory()
}

/// One run conditioned on fixation, by resampling whole runs.
pub fn simulate_conditioned_sweep<R: Rng + ?Sized>(
    params: &Params,
    rng: &mut R,
) -> SweepTrajectory {
    let mut sweeper = Sweeper::new(*params);
    sweeper.run_conditioned(rng);
    sweeper.into_trajectory()
}

/// One conditioned run whose jump and one-step event counts are added into
/// `tally` (which can accumulate across many calls and be merged across
/// workers).
pub fn simulate_sweep_tallied<R: Rng + ?Sized>(
    params: &Params,
    rng: &mut R,
    tally: &mut SweepTally,
) -> SweepTrajectory {
    let mut sweeper = Sweeper::new(*params);
    sweeper.run_conditioned_tallied(rng, tally);
    sweeper.into_trajectory()
}

/// Runs a single attempt into the provided buffers; returns whether it fixed.
fn run_attempt<R: Rng + ?Sized>(
    rng: &mut R,
    traj: &mut SweepTrajectory,
    alleles: &mut [u8],
    mut scratch: Option<&mut AttemptTally>,
) -> bool {
    let params = traj.params;
    let two_n = params.two_n();
    let pick = Uniform::new(0u32, two_n).expect("population has at least two slots");
    let reject_coin = Bernoulli::new(params.s).expect("validated s");
    let recomb_coin = Bernoulli::new(params.r).expect("validated r");

    traj.events.clear();
    traj.x_path.clear();
    traj.rejected.fill(0);
    traj.fixed = false;

    alleles.fill(0);
    let founder = pick.sample(rng);
    alleles[founder as usize] = 1;
    traj.initial_mutant = founder;

    let mut k = 1u32;
    while k != 0 && k != two_n {
        let victim = pick.sample(rng);
        let parent = pick.sample(rng);
        let va = alleles[victim as usize];
        let pa = alleles[parent as usize];
        if va == 1 && pa == 0 && reject_coin.sample(rng) {
            traj.rejected[k as usize] += 1;
            if let Some(t) = scratch.as_deref_mut() {
                t.holds[k as usize] += 1;
            }
            continue;
        }
        let recombined = recomb_coin.sample(rng);
        let source = if recombined { pick.sample(rng) } else { parent };
        if let Some(t) = scratch.as_deref_mut() {
            // The neutral source's allele is read before the victim slot is
            // overwritten: if the source IS the victim, its pre-event allele
            // is the relevant one.
            let sa = alleles[source as usize];
            let kk = k as usize;
            let d = usize::from(1 + pa - va);
            match d {
                2 => t.ups[kk] += 1,
                0 => t.downs[kk] += 1,
                _ => t.holds[kk] += 1,
            }
            if pa == 1 && sa == 0 {
                t.rec_to_b[kk][d] += 1;
            } else if pa == 0 && sa == 1 {
                t.rec_to_wild[kk][d] += 1;
            }
            if source != victim {
                match (pa, sa) {
                    (1, 1) => t.coal_bb[kk][d] += 1,
                    (0, 0) => t.coal_wild[kk][d] += 1,
                    _ => t.coal_mixed[kk][d] += 1,
                }
            }
        }
        alleles[victim as usize] = pa;
        k = k + u32::from(pa) - u32::from(va);
        traj.events.push(EventRecord {
            victim,
            parent,
            neutral_source: source,
            recombined,
            victim_prev_allele: Allele::from_u8(va),
        });
        traj.x_path.push(k);
    }
    traj.fixed = k == two_n;
    traj.fixed
}
