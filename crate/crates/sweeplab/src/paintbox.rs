//! The stick-breaking (paintbox) approximation to the sample's ancestral
//! partition.
//!
//! A random sequence of stick fractions is built downward from `L`: for each
//! color `k = 2..=L`, an activation coin with probability `r/s` decides
//! whether the color takes any mass at all, and an independent fraction
//! `W_k ~ Beta(1, k-1)` sizes it: `V_k = W_k` when activated, else `0`. The
//! stick lengths are
//!
//! `Y_k = V_k * prod_{j>k} (1 - V_j)` for `k >= 2`, and
//! `Y_1 = prod_{j>=2} (1 - V_j)` (the founder's color takes what is left).
//!
//! Each of the `n` lineages is painted independently with color `k` with
//! probability `Y_k`; lineages sharing a color share a block. A final coin
//! with probability `s / (r(1-s) + s)` decides whether color 1's block is
//! the marked (founder-descended) one; an unmarked or empty color-1 block
//! leaves the partition unmarked.
//!
//! Seed stability contract: a draw consumes, in order, the activation coin
//! for `k = 2..=L` (each followed by a fraction uniform only when
//! activated), one color uniform per lineage, the mark coin, and — for the
//! thinned variant — one thinning coin per lineage.

use crate::error::{Error, Result};
use crate::partition::{MarkedPartition, PairStats};
use rand::distr::{Bernoulli, Distribution};
use rand::Rng;

/// All random ingredients of one paintbox draw, exposed for diagnostics.
///
/// Vectors over colors are indexed by `k - 2` (`w`, `zeta`, `v`) or `k - 1`
/// (`y`); `w[k-2]` is only drawn — and only meaningful — when `zeta[k-2]`
/// is set, and is `0.0` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PaintboxDraw {
    /// Number of colors `L`.
    pub l: u32,
    /// Stick fractions `W_k` for activated colors.
    pub w: Vec<f64>,
    /// Activation coins `zeta_k`.
    pub zeta: Vec<bool>,
    /// Effective fractions `V_k = zeta_k * W_k`.
    pub v: Vec<f64>,
    /// Stick lengths `Y_1..Y_L`; they sum to 1.
    pub y: Vec<f64>,
    /// Color of each lineage, 1-based.
    pub z: Vec<u32>,
    /// Whether the founder's color-1 block carries the mark.
    pub mark_assigned: bool,
}

fn check_inputs(n: u32, r: f64, s: f64, l: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("sample size n must be at least 1".to_string()));
    }
    if l == 0 {
        return Err(Error::domain("number of colors L must be at least 1".to_string()));
    }
    check_rates(r, s)
}

fn check_rates(r: f64, s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("s must lie in (0,1), got {s}")));
    }
    if !(r >= 0.0 && r < s) {
        return Err(Error::domain(format!(
            "r must lie in [0, s) for the stick construction, got r={r}, s={s}"
        )));
    }
    Ok(())
}

/// Mark probability for the founder's color.
fn mark_probability(r: f64, s: f64) -> f64 {
    s / (r * (1.0 - s) + s)
}

/// Draws the sticks, paints `n` lineages, and assembles the marked
/// partition. Returns the full draw alongside the partition.
pub fn sample_paintbox<R: Rng + ?Sized>(
    n: u32,
    r: f64,
    s: f64,
    l: u32,
    rng: &mut R,
) -> Result<(PaintboxDraw, MarkedPartition)> {
    let draw = sample_sticks_and_colors(n, r, s, l, rng)?;
    let partition = MarkedPartition::from_labels(&draw.z, draw.mark_assigned.then_some(&1));
    Ok((draw, partition))
}

/// Like [`sample_paintbox`], then gives every lineage an independent
/// thinning coin with probability `q`: thinned lineages leave their block
/// and become unmarked singletons.
pub fn sample_paintbox_thinned<R: Rng + ?Sized>(
    n: u32,
    r: f64,
    s: f64,
    l: u32,
    q: f64,
    rng: &mut R,
) -> Result<(PaintboxDraw, MarkedPartition)> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("thinning q must lie in [0,1], got {q}")));
    }
    let draw = sample_sticks_and_colors(n, r, s, l, rng)?;
    let thin = Bernoulli::new(q).expect("checked probability");
    let labels: Vec<i64> = draw
        .z
        .iter()
        .enumerate()
        .map(|(i, &z)| if thin.sample(rng) { -(i as i64) - 1 } else { i64::from(z) })
        .collect();
    let partition = MarkedPartition::from_labels(&labels, draw.mark_assigned.then_some(&1));
    Ok((draw, partition))
}

fn sample_sticks_and_colors<R: Rng + ?Sized>(
    n: u32,
    r: f64,
    s: f64,
    l: u32,
    rng: &mut R,
) -> Result<PaintboxDraw> {
    check_inputs(n, r, s, l)?;
    let colors = l as usize - 1;
    let activation = Bernoulli::new(r / s).expect("checked rates");
    let mut w = vec![0.0; colors];
    let mut zeta = vec![false; colors];
    let mut v = vec![0.0; colors];
    for k in 2..=l {
        let i = k as usize - 2;
        if activation.sample(rng) {
            zeta[i] = true;
            // Inverse-transform Beta(1, k-1): W = 1 - U^(1/(k-1)).
            let u: f64 = rng.random();
            w[i] = 1.0 - u.powf(1.0 / f64::from(k - 1));
            v[i] = w[i];
        }
    }

    let mut y = vec![0.0; l as usize];
    let mut suffix = 1.0; // prod_{j > k} (1 - V_j)
    for k in (2..=l).rev() {
        let vk = v[k as usize - 2];
        y[k as usize - 1] = vk * suffix;
        suffix *= 1.0 - vk;
    }
    y[0] = suffix;

    let z: Vec<u32> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (idx, &len) in y.iter().enumerate() {
                acc += len;
                if u < acc {
                    return idx as u32 + 1;
                }
            }
            1 // floating-point slack goes to the dominant color
        })
        .collect();

    let mark_assigned = Bernoulli::new(mark_probability(r, s))
        .expect("mark probability lies in (0,1]")
        .sample(rng);

    Ok(PaintboxDraw { l, w, zeta, v, y, z, mark_assigned })
}

/// First two moments of an effective fraction: `E[V_k] = r/(sk)` and
/// `E[V_k^2] = 2r/(sk(k+1))`, for `k >= 2`.
pub fn paintbox_moments(r: f64, s: f64, k: u32) -> Result<(f64, f64)> {
    check_rates(r, s)?;
    if k < 2 {
        return Err(Error::domain(format!("color index k must be at least 2, got {k}")));
    }
    let kf = f64::from(k);
    Ok((r / (s * kf), 2.0 * r / (s * kf * (kf + 1.0))))
}

/// The four pair statistics of the paintbox law in closed form.
///
/// With `a_k = E[1 - V_k]` and `b_k = E[(1 - V_k)^2]`, independence across
/// colors gives `P(Z = 1) = prod a_k`, `P(Z_1 = Z_2 = 1) = prod b_k` and
/// `P(Z_1 = Z_2 = m) = E[V_m^2] prod_{k>m} b_k`; the mark coin then converts
/// block membership into escape events.
pub fn paintbox_pair_stats_exact(r: f64, s: f64, l: u32) -> Result<PairStats> {
    check_inputs(2, r, s, l)?;
    let m_p = mark_probability(r, s);
    let mut prod_a = 1.0; // P(Z = 1)
    let mut suffix_b = 1.0; // prod_{j > m} b_j during the loop
    let mut coal_sum = 0.0; // P(Z_1 = Z_2 = m) summed over m >= 2
    for m in (2..=l).rev() {
        let (ev, ev2) = paintbox_moments(r, s, m)?;
        coal_sum += ev2 * suffix_b;
        suffix_b *= 1.0 - 2.0 * ev + ev2;
        prod_a *= 1.0 - ev;
    }
    let p_one = prod_a;
    let p_same_one = suffix_b;
    let pinb = 1.0 - m_p * p_one;
    let p2cinb = coal_sum + (1.0 - m_p) * p_same_one;
    let both_escape = 1.0 - 2.0 * m_p * p_one + m_p * p_same_one;
    let p1b1b = 2.0 * m_p * (p_one - p_same_one);
    Ok(PairStats::analytic(pinb, both_escape - p2cinb, p2cinb, p1b1b))
}
