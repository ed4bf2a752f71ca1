//! Experiment orchestration: replicate fan-out across worker threads,
//! order-independent integer aggregation, law-vs-law comparison, and the
//! reference-table preset.
//!
//! Determinism contract: replicate `i` of an experiment with master seed
//! `m` always consumes the generator returned by [`replicate_rng`]`(m, i)`
//! (never a thread-local one), and every aggregate is a sum of integer
//! counts, so results are bit-identical for any worker count and any
//! replicate completion order. Progress goes to standard error; data only
//! to the report.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::branching::{polya_q, simulate_yule_skeleton_partition};
use crate::coin_flip::{alpha_and_p, qp_pair_stats, qp_probability, sample_p_partition};
use crate::error::{Error, Result};
use crate::genealogy::trace_ancestry;
use crate::moran::Sweeper;
use crate::paintbox::{paintbox_pair_stats_exact, sample_paintbox, sample_paintbox_thinned};
use crate::params::Params;
use crate::partition::{enumerate_marked_partitions, MarkedPartition, PairStats, PairTally};

/// The generator owned by replicate `i` of an experiment seeded with
/// `master_seed`: one keystream per (seed, replicate) pair.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// What an experiment simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Conditioned two-locus sweeps with backward ancestry tracing.
    Moran,
    /// The one-coin-per-lineage partition law.
    Qp,
    /// The stick-breaking partition law.
    Paintbox,
    /// The stick-breaking law with independent lineage thinning.
    PaintboxThinned,
    /// The typed branching skeleton, compared against the paintbox law.
    Skeleton,
    /// The three-row comparison table (analytic, Moran, paintbox) per rate.
    Table,
    /// Fast self-checks of the configured setup.
    Validate,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Mode::Moran => "moran",
            Mode::Qp => "qp",
            Mode::Paintbox => "paintbox",
            Mode::PaintboxThinned => "paintbox_thinned",
            Mode::Skeleton => "skeleton",
            Mode::Table => "table",
            Mode::Validate => "validate",
        };
        f.write_str(name)
    }
}

/// A full experiment description. Mode-specific fields must be present for
/// the modes that use them and absent elsewhere; [`ExperimentConfig::validate`]
/// enforces this before any computation starts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Population/rate parameters; `params.seed` is the master seed.
    pub params: Params,
    /// Replicates (sweeps or law draws).
    pub reps: u64,
    /// Paintbox size; defaults to `floor(2N s)` (paintbox modes, skeleton).
    pub l: Option<u32>,
    /// Thinning probability (paintbox_thinned only).
    pub q: Option<f64>,
    /// Sweep levels at which escape counts are histogrammed (moran only).
    pub levels: Vec<u32>,
    /// Skeleton size; defaults to `floor(2N s)` (skeleton only).
    pub h: Option<u32>,
    /// Worker threads; `None` uses the default pool.
    pub threads: Option<usize>,
    /// Emit progress lines to standard error.
    pub progress: bool,
}

impl ExperimentConfig {
    /// A config with no mode-specific extras and quiet output.
    pub fn new(mode: Mode, params: Params, reps: u64) -> Self {
        ExperimentConfig {
            mode,
            params,
            reps,
            l: None,
            q: None,
            levels: Vec::new(),
            h: None,
            threads: None,
            progress: false,
        }
    }

    fn default_size(&self) -> u32 {
        ((f64::from(self.params.two_n()) * self.params.s).floor() as u32).max(1)
    }

    /// The paintbox size in force: the override or `floor(2N s)`.
    pub fn effective_l(&self) -> u32 {
        self.l.unwrap_or_else(|| self.default_size())
    }

    /// The skeleton size in force: the override or `floor(2N s)`.
    pub fn effective_h(&self) -> u32 {
        self.h.unwrap_or_else(|| self.default_size())
    }

    /// Checks replicate count, thread count, and mode-specific field
    /// presence/domains, before any work happens.
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::domain("replicate count must be at least 1".to_string()));
        }
        if self.threads == Some(0) {
            return Err(Error::domain("thread count must be at least 1".to_string()));
        }
        if matches!(self.mode, Mode::Paintbox | Mode::PaintboxThinned | Mode::Skeleton)
            && self.params.r >= self.params.s
        {
            return Err(Error::domain(format!(
                "mode {} needs r < s, got r={} s={}",
                self.mode, self.params.r, self.params.s
            )));
        }
        if self.l.is_some() && !matches!(self.mode, Mode::Paintbox | Mode::PaintboxThinned) {
            return Err(Error::domain(format!(
                "paintbox size L applies only to paintbox modes, not {}",
                self.mode
            )));
        }
        if self.l == Some(0) {
            return Err(Error::domain("paintbox size L must be at least 1".to_string()));
        }
        match self.mode {
            Mode::PaintboxThinned => {
                let q = self.q.ok_or_else(|| {
                    Error::domain("paintbox_thinned needs a thinning probability q".to_string())
                })?;
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::domain(format!("thinning q must lie in [0,1], got {q}")));
                }
            }
            _ => {
                if self.q.is_some() {
                    return Err(Error::domain(format!(
                        "q applies only to paintbox_thinned, not {}",
                        self.mode
                    )));
                }
            }
        }
        if self.mode == Mode::Skeleton {
            let h = self.effective_h();
            if h == 0 {
                return Err(Error::domain("skeleton size H must be at least 1".to_string()));
            }
            if self.params.sample_size > h {
                return Err(Error::domain(format!(
                    "cannot sample {} distinct lines from a skeleton of {h}",
                    self.params.sample_size
                )));
            }
        } else if self.h.is_some() {
            return Err(Error::domain(format!(
                "H applies only to skeleton mode, not {}",
                self.mode
            )));
        }
        if self.mode == Mode::Moran {
            let two_n = self.params.two_n();
            if let Some(&j) = self.levels.iter().find(|&&j| j == 0 || j > two_n) {
                return Err(Error::domain(format!("sweep level {j} outside 1..={two_n}")));
            }
        } else if !self.levels.is_empty() {
            return Err(Error::domain(format!(
                "escape levels apply only to moran mode, not {}",
                self.mode
            )));
        }
        Ok(())
    }
}

/// One labeled row of pair statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub label: String,
    pub stats: PairStats,
}

/// One labeled scalar statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarRow {
    pub statistic: String,
    pub estimate: f64,
    pub std_error: f64,
    pub replicates: u64,
}

/// An experiment's full result: labeled pair-statistic rows, labeled
/// scalars, and the metadata needed to regenerate every row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTable {
    pub mode: Mode,
    pub params: Params,
    pub reps: u64,
    pub master_seed: u64,
    pub runtime_seconds: f64,
    pub pair_rows: Vec<PairRow>,
    pub scalar_rows: Vec<ScalarRow>,
}

impl ReportTable {
    fn new(config: &ExperimentConfig) -> Self {
        ReportTable {
            mode: config.mode,
            params: config.params,
            reps: config.reps,
            master_seed: config.params.seed,
            runtime_seconds: 0.0,
            pair_rows: Vec::new(),
            scalar_rows: Vec::new(),
        }
    }

    /// Every pair row must satisfy `pinb = p2inb + p2cinb + p1B1b/2` —
    /// exactly for analytic rows, within 4 combined standard errors for
    /// estimated ones.
    pub fn check_identities(&self) -> Result<()> {
        for row in &self.pair_rows {
            let se = &row.stats.se;
            let combined =
                (se[0] * se[0] + se[1] * se[1] + se[2] * se[2] + (se[3] / 2.0) * (se[3] / 2.0))
                    .sqrt();
            let tol = if row.stats.n_reps == 0 { 1e-9 } else { 4.0 * combined + 1e-12 };
            let residual = row.stats.identity_residual();
            if residual.abs() > tol {
                return Err(Error::integrity(format!(
                    "row '{}' violates the pair identity: residual {residual:e} > {tol:e}",
                    row.label
                )));
            }
        }
        Ok(())
    }

    /// CSV rendering: header `statistic,estimate,std_error,replicates`,
    /// pair rows flattened to four lines each, UTF-8, LF line endings.
    /// Labels never contain commas.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("statistic,estimate,std_error,replicates\n");
        for row in &self.pair_rows {
            let s = &row.stats;
            let cells = [
                ("pinb", s.pinb, s.se[0]),
                ("p2inb", s.p2inb, s.se[1]),
                ("p2cinb", s.p2cinb, s.se[2]),
                ("p1B1b", s.p1b1b, s.se[3]),
            ];
            for (name, est, se) in cells {
                out.push_str(&format!("{} {name},{est},{se},{}\n", row.label, s.n_reps));
            }
        }
        for row in &self.scalar_rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.statistic, row.estimate, row.std_error, row.replicates
            ));
        }
        out
    }
}

/// Order-independent integer aggregate of Moran replicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoranAggregate {
    pub sample_size: u32,
    /// The sweep levels histogrammed below, as requested.
    pub levels: Vec<u32>,
    /// `escape_hist[a][k]`: replicates whose escape count at `levels[a]`
    /// was `k` (each inner histogram has `sample_size + 1` bins).
    pub escape_hist: Vec<Vec<u64>>,
    /// Sampled lineages whose ancestral path recombined at least twice.
    pub multi_recomb_lineages: u64,
    /// Total sampled lineages.
    pub lineages: u64,
    /// Total sweep attempts, counting the discarded unfixed ones.
    pub attempts: u64,
    /// Completed (fixed) sweeps.
    pub sweeps: u64,
    /// Pair tally; stays empty unless `sample_size == 2`.
    pub pair: PairTally,
}

impl MoranAggregate {
    /// The monoid identity for the given shape.
    pub fn empty(sample_size: u32, levels: &[u32]) -> Self {
        MoranAggregate {
            sample_size,
            levels: levels.to_vec(),
            escape_hist: vec![vec![0; sample_size as usize + 1]; levels.len()],
            multi_recomb_lineages: 0,
            lineages: 0,
            attempts: 0,
            sweeps: 0,
            pair: PairTally::default(),
        }
    }

    /// Commutative, associative merge; shapes must match.
    pub fn merge(mut self, other: Self) -> Result<Self> {
        if self.sample_size != other.sample_size || self.levels != other.levels {
            return Err(Error::integrity(
                "cannot merge Moran aggregates of different shapes".to_string(),
            ));
        }
        for (mine, theirs) in self.escape_hist.iter_mut().zip(&other.escape_hist) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
        self.multi_recomb_lineages += other.multi_recomb_lineages;
        self.lineages += other.lineages;
        self.attempts += other.attempts;
        self.sweeps += other.sweeps;
        self.pair.merge(&other.pair);
        Ok(self)
    }

    /// Empirical distribution of the escape count at `levels[level_idx]`.
    pub fn escape_frequencies(&self, level_idx: usize) -> Vec<f64> {
        let hist = &self.escape_hist[level_idx];
        let total: u64 = hist.iter().sum();
        hist.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
    }
}

/// Runs `f` on the default pool, or on a dedicated pool of `threads`.
fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::domain("thread count must be at least 1".to_string())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::domain(format!("could not build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

struct Progress<'a> {
    label: &'a str,
    counter: AtomicU64,
    total: u64,
    step: u64,
    enabled: bool,
}

impl<'a> Progress<'a> {
    fn new(label: &'a str, total: u64, enabled: bool) -> Self {
        Progress {
            label,
            counter: AtomicU64::new(0),
            total,
            step: (total / 10).max(1),
            enabled,
        }
    }

    fn tick(&self) {
        if !self.enabled {
            return;
        }
        let done = self.counter.fetch_add(1, Ordering::Relaxed) + 1;
        if done.is_multiple_of(self.step) || done == self.total {
            eprintln!("[sweeplab] {}: {done}/{} replicates", self.label, self.total);
        }
    }
}

fn one_moran_replicate(
    sweeper: &mut Sweeper,
    params: Params,
    levels: &[u32],
    replicate: u64,
) -> Result<MoranAggregate> {
    let mut rng = replicate_rng(params.seed, replicate);
    let before = sweeper.attempts();
    sweeper.run_conditioned(&mut rng);
    let n = params.sample_size;
    // Sampling n distinct slots by rejection; n is far below 2N in practice.
    let pick = Uniform::new(0u32, params.two_n()).expect("2N >= 2");
    let mut sample: Vec<u32> = Vec::with_capacity(n as usize);
    while (sample.len() as u32) < n {
        let candidate = pick.sample(&mut rng);
        if !sample.contains(&candidate) {
            sample.push(candidate);
        }
    }
    let trace = trace_ancestry(sweeper.trajectory(), &sample)?;

    let mut agg = MoranAggregate::empty(n, levels);
    agg.sweeps = 1;
    agg.attempts = sweeper.attempts() - before;
    agg.lineages = u64::from(n);
    agg.multi_recomb_lineages = u64::from(trace.lineages_with_multiple_recombinations());
    for (a, &j) in levels.iter().enumerate() {
        let k = trace.escape_count_at_level(j)?;
        agg.escape_hist[a][k as usize] += 1;
    }
    if n == 2 {
        agg.pair.observe(
            !trace.ancestor_has_mutant_allele[0],
            !trace.ancestor_has_mutant_allele[1],
            trace.ancestor_at_0[0] == trace.ancestor_at_0[1],
        );
    }
    Ok(agg)
}

/// Runs `reps` conditioned sweeps (replicate `i` on stream `i` of
/// `params.seed`), traces a fresh uniform sample of `params.sample_size`
/// slots after each, and aggregates integer counts: the pair tally (when
/// the sample is a pair) and one escape-count histogram per level.
pub fn run_moran_replicates(
    params: Params,
    reps: u64,
    levels: &[u32],
    threads: Option<usize>,
    progress: bool,
) -> Result<MoranAggregate> {
    if reps == 0 {
        return Err(Error::domain("replicate count must be at least 1".to_string()));
    }
    let two_n = params.two_n();
    if let Some(&j) = levels.iter().find(|&&j| j == 0 || j > two_n) {
        return Err(Error::domain(format!("sweep level {j} outside 1..={two_n}")));
    }
    let ticker = Progress::new("moran", reps, progress);
    with_pool(threads, || {
        (0..reps)
            .into_par_iter()
            .map_init(
                || Sweeper::new(params),
                |sweeper, i| {
                    let agg = one_moran_replicate(sweeper, params, levels, i)?;
                    ticker.tick();
                    Ok(agg)
                },
            )
            .try_reduce(|| MoranAggregate::empty(params.sample_size, levels), MoranAggregate::merge)
    })?
}

/// Draws `reps` partitions in parallel, replicate `i` on stream
/// `stream_base + i`.
fn draw_partitions<F>(
    reps: u64,
    seed: u64,
    stream_base: u64,
    threads: Option<usize>,
    draw: F,
) -> Result<Vec<MarkedPartition>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<MarkedPartition> + Sync,
{
    with_pool(threads, || {
        (0..reps)
            .into_par_iter()
            .map(|i| draw(&mut replicate_rng(seed, stream_base + i)))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Monte Carlo pair row over `reps` independent draws of a pair partition.
fn mc_pair_row<F>(
    label: &str,
    reps: u64,
    seed: u64,
    stream_base: u64,
    threads: Option<usize>,
    draw: F,
) -> Result<PairRow>
where
    F: Fn(&mut ChaCha8Rng) -> Result<MarkedPartition> + Sync,
{
    let tally = with_pool(threads, || {
        (0..reps)
            .into_par_iter()
            .map(|i| {
                let pi = draw(&mut replicate_rng(seed, stream_base + i))?;
                let mut t = PairTally::default();
                t.record(&pi)?;
                Ok(t)
            })
            .try_reduce(PairTally::default, |mut a, b| {
                a.merge(&b);
                Ok(a)
            })
    })??;
    Ok(PairRow { label: label.to_string(), stats: tally.stats()? })
}

fn pair_tally_from(partitions: &[MarkedPartition]) -> Result<PairTally> {
    let mut tally = PairTally::default();
    for pi in partitions {
        tally.record(pi)?;
    }
    Ok(tally)
}

/// Total variation distance between the empirical laws of two canonical
/// marked-partition samples over the same `n <= 4`: half the L1 distance of
/// the observed atom frequencies.
pub fn estimate_tv_distance(a: &[MarkedPartition], b: &[MarkedPartition]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("tv distance needs two nonempty samples".to_string()));
    }
    let n = a[0].n();
    if n > 4 {
        return Err(Error::domain(format!("tv distance is supported for n <= 4, got n = {n}")));
    }
    let mut counts: BTreeMap<&MarkedPartition, (u64, u64)> = BTreeMap::new();
    for pi in a {
        if pi.n() != n {
            return Err(Error::domain("tv distance needs a common sample size".to_string()));
        }
        counts.entry(pi).or_default().0 += 1;
    }
    for pi in b {
        if pi.n() != n {
            return Err(Error::domain("tv distance needs a common sample size".to_string()));
        }
        counts.entry(pi).or_default().1 += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    Ok(counts
        .values()
        .map(|&(ca, cb)| (ca as f64 / na - cb as f64 / nb).abs())
        .sum::<f64>()
        / 2.0)
}

fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials.max(1) as f64).sqrt()
}

fn moran_rows(config: &ExperimentConfig, table: &mut ReportTable) -> Result<()> {
    let params = config.params;
    let agg =
        run_moran_replicates(params, config.reps, &config.levels, config.threads, config.progress)?;
    if params.sample_size == 2 {
        table
            .pair_rows
            .push(PairRow { label: "moran monte carlo".to_string(), stats: agg.pair.stats()? });
    }
    for (a, &j) in agg.levels.iter().enumerate() {
        let freqs = agg.escape_frequencies(a);
        for (k, &freq) in freqs.iter().enumerate() {
            table.scalar_rows.push(ScalarRow {
                statistic: format!("moran P(K={k}) at J={j}"),
                estimate: freq,
                std_error: binomial_se(freq, agg.sweeps),
                replicates: agg.sweeps,
            });
        }
    }
    let multi = agg.multi_recomb_lineages as f64 / agg.lineages.max(1) as f64;
    table.scalar_rows.push(ScalarRow {
        statistic: "moran multi-recombination lineage fraction".to_string(),
        estimate: multi,
        std_error: binomial_se(multi, agg.lineages),
        replicates: agg.lineages,
    });
    table.scalar_rows.push(ScalarRow {
        statistic: "moran attempts per fixed sweep".to_string(),
        estimate: agg.attempts as f64 / agg.sweeps.max(1) as f64,
        std_error: 0.0,
        replicates: agg.sweeps,
    });
    Ok(())
}

fn qp_rows(config: &ExperimentConfig, table: &mut ReportTable) -> Result<()> {
    let params = config.params;
    let (alpha, p) = alpha_and_p(params.n, params.r, params.s)?;
    table.scalar_rows.push(ScalarRow {
        statistic: "escape pressure alpha".to_string(),
        estimate: alpha,
        std_error: 0.0,
        replicates: 0,
    });
    table.scalar_rows.push(ScalarRow {
        statistic: "retention probability p".to_string(),
        estimate: p,
        std_error: 0.0,
        replicates: 0,
    });
    table
        .pair_rows
        .push(PairRow { label: "coin-flip analytic".to_string(), stats: qp_pair_stats(p) });
    if params.sample_size == 2 {
        table.pair_rows.push(mc_pair_row(
            "coin-flip monte carlo",
            config.reps,
            params.seed,
            0,
            config.threads,
            |rng| sample_p_partition(2, p, rng),
        )?);
    }
    Ok(())
}

fn paintbox_rows(config: &ExperimentConfig, table: &mut ReportTable) -> Result<()> {
    let params = config.params;
    let l = config.effective_l();
    table.pair_rows.push(PairRow {
        label: format!("paintbox exact L={l}"),
        stats: paintbox_pair_stats_exact(params.r, params.s, l)?,
    });
    let mark = params.s / (params.r * (1.0 - params.s) + params.s);
    table.scalar_rows.push(ScalarRow {
        statistic: "mark probability".to_string(),
        estimate: mark,
        std_error: 0.0,
        replicates: 0,
    });
    if config.mode == Mode::PaintboxThinned {
        let q = config.q.expect("validated");
        table.scalar_rows.push(ScalarRow {
            statistic: "thinning probability q".to_string(),
            estimate: q,
            std_error: 0.0,
            replicates: 0,
        });
        if params.sample_size == 2 {
            table.pair_rows.push(mc_pair_row(
                &format!("paintbox thinned monte carlo L={l}"),
                config.reps,
                params.seed,
                0,
                config.threads,
                |rng| Ok(sample_paintbox_thinned(2, params.r, params.s, l, q, rng)?.1),
            )?);
        }
    } else if params.sample_size == 2 {
        table.pair_rows.push(mc_pair_row(
            &format!("paintbox monte carlo L={l}"),
            config.reps,
            params.seed,
            0,
            config.threads,
            |rng| Ok(sample_paintbox(2, params.r, params.s, l, rng)?.1),
        )?);
    }
    Ok(())
}

fn skeleton_rows(config: &ExperimentConfig, table: &mut ReportTable) -> Result<()> {
    let params = config.params;
    let n = params.sample_size;
    let h = config.effective_h();
    // Streams [0, reps) drive the skeleton, [reps, 2 reps) the paintbox.
    let skeleton = draw_partitions(config.reps, params.seed, 0, config.threads, |rng| {
        simulate_yule_skeleton_partition(n, params.r, params.s, h, rng)
    })?;
    let paintbox = draw_partitions(config.reps, params.seed, config.reps, config.threads, |rng| {
        Ok(sample_paintbox(n, params.r, params.s, h, rng)?.1)
    })?;
    table.pair_rows.push(PairRow {
        label: format!("paintbox exact L={h}"),
        stats: paintbox_pair_stats_exact(params.r, params.s, h)?,
    });
    if n == 2 {
        table.pair_rows.push(PairRow {
            label: "skeleton monte carlo".to_string(),
            stats: pair_tally_from(&skeleton)?.stats()?,
        });
        table.pair_rows.push(PairRow {
            label: format!("paintbox monte carlo L={h}"),
            stats: pair_tally_from(&paintbox)?.stats()?,
        });
    }
    if n <= 4 {
        table.scalar_rows.push(ScalarRow {
            statistic: format!("tv distance skeleton vs paintbox at H={h}"),
            estimate: estimate_tv_distance(&skeleton, &paintbox)?,
            std_error: 0.0,
            replicates: config.reps,
        });
    }
    Ok(())
}

/// The two recombination rates of the reference comparison table.
pub const TABLE_PRESET_RATES: [f64; 2] = [0.00106, 0.00516];

fn table_rows(config: &ExperimentConfig, table: &mut ReportTable) -> Result<()> {
    let base = config.params;
    for (idx, &r) in TABLE_PRESET_RATES.iter().enumerate() {
        // Distinct seeds keep the two rate blocks on disjoint keystreams.
        let seed = base.seed.wrapping_add(idx as u64 * 0x9e37_79b9_7f4a_7c15);
        let params = Params::new(base.n, base.s, r, 2, seed)?;
        let (_, p) = alpha_and_p(params.n, r, params.s)?;
        table.pair_rows.push(PairRow {
            label: format!("r={r} coin-flip analytic"),
            stats: qp_pair_stats(p),
        });
        let agg = run_moran_replicates(params, config.reps, &[], config.threads, config.progress)?;
        table
            .pair_rows
            .push(PairRow { label: format!("r={r} moran monte carlo"), stats: agg.pair.stats()? });
        let l = ((f64::from(params.two_n()) * params.s).floor() as u32).max(1);
        table.pair_rows.push(PairRow {
            label: format!("r={r} paintbox exact L={l}"),
            stats: paintbox_pair_stats_exact(r, params.s, l)?,
        });
        table.scalar_rows.push(ScalarRow {
            statistic: format!("r={r} retention probability p"),
            estimate: p,
            std_error: 0.0,
            replicates: 0,
        });
        table.scalar_rows.push(ScalarRow {
            statistic: format!("r={r} moran attempts per fixed sweep"),
            estimate: agg.attempts as f64 / agg.sweeps.max(1) as f64,
            std_error: 0.0,
            replicates: agg.sweeps,
        });
    }
    Ok(())
}

fn validate_rows(config: &ExperimentConfig, table: &mut ReportTable) -> Result<()> {
    let params = config.params;
    let mut push = |name: &str, pass: bool| {
        table.scalar_rows.push(ScalarRow {
            statistic: format!("validate: {name} (1=pass)"),
            estimate: f64::from(u8::from(pass)),
            std_error: 0.0,
            replicates: 0,
        });
    };

    let (_, p) = alpha_and_p(params.n, params.r, params.s)?;
    push("coin-flip analytic identity", qp_pair_stats(p).identity_residual().abs() < 1e-12);

    let norm: f64 =
        enumerate_marked_partitions(4).iter().map(|pi| qp_probability(pi, p)).sum();
    push("coin-flip law normalizes at n=4", (norm - 1.0).abs() < 1e-9);

    let paintbox_ok = if params.r < params.s {
        let l = config.effective_l();
        paintbox_pair_stats_exact(params.r, params.s, l)
            .map(|st| st.identity_residual().abs() < 1e-12)
            .unwrap_or(false)
    } else {
        true // outside the paintbox domain; nothing to check
    };
    push("paintbox exact identity", paintbox_ok);

    let polya_norm: f64 = (0..=4u32)
        .map(|a| {
            let choose = (0..a).fold(1.0, |acc, i| acc * f64::from(4 - i) / f64::from(i + 1));
            choose * polya_q(5, a, 4).unwrap_or(f64::NAN)
        })
        .sum();
    push("block weights normalize", (polya_norm - 1.0).abs() < 1e-9);

    let reps = config.reps.min(10);
    let a = run_moran_replicates(params, reps, &[1], Some(1), false)?;
    let b = run_moran_replicates(params, reps, &[1], Some(2), false)?;
    push("moran determinism across worker counts", a == b);
    push(
        "moran pair identity",
        params.sample_size != 2 || a.pair.stats()?.identity_residual().abs() < 1e-9,
    );
    Ok(())
}

/// Dispatches the config to the matching module, fans replicates across
/// workers on per-replicate RNG streams, aggregates counts, and emits a
/// checked [`ReportTable`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportTable> {
    config.validate()?;
    let start = Instant::now();
    let mut table = ReportTable::new(config);
    match config.mode {
        Mode::Moran => moran_rows(config, &mut table)?,
        Mode::Qp => qp_rows(config, &mut table)?,
        Mode::Paintbox | Mode::PaintboxThinned => paintbox_rows(config, &mut table)?,
        Mode::Skeleton => skeleton_rows(config, &mut table)?,
        Mode::Table => table_rows(config, &mut table)?,
        Mode::Validate => validate_rows(config, &mut table)?,
    }
    table.runtime_seconds = start.elapsed().as_secs_f64();
    table.check_identities()?;
    if config.progress {
        eprintln!(
            "[sweeplab] mode {} finished in {:.2}s ({} replicates)",
            config.mode, table.runtime_seconds, config.reps
        );
    }
    Ok(table)
}
