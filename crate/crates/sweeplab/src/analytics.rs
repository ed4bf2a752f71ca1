//! Closed-form results for the conditioned sweep: hitting probabilities of
//! the allele-count walk, the escape probability `q_J`, expected per-level
//! jump counts, one-step recombination and coalescence probabilities, and
//! two classical deterministic sweep curves. These are executable oracles:
//! the simulators are validated against them, and they in turn are validated
//! against brute-force enumeration in the tests.
//!
//! Throughout, the allele-count process `X_t` counts carriers of the
//! beneficial allele `B` among the `2N` individuals; one time step is one
//! replacement proposal (accepted or not).

use crate::error::{Error, Result};

/// `1 - (1-s)^m`, evaluated in log space (`expm1`/`ln_1p`) so that ratios
/// of such terms stay accurate for large `m` and small `s`.
fn one_minus_pow(s: f64, m: f64) -> f64 {
    -f64::exp_m1(m * f64::ln_1p(-s))
}

/// `beta_k = k(2N-k) / (k^2 + (2N-k)^2 + s k (2N-k))`.
///
/// The denominator is `(2N)^2 - (2-s) k (2N-k)`, i.e. the per-proposal
/// probability of *not* moving is `beta_k^-1`-normalized: holds per move at
/// level `k` have mean `1 / ((2-s) beta_k)`.
pub fn beta_k(two_n: u32, s: f64, k: u32) -> f64 {
    let k = f64::from(k);
    let m = f64::from(two_n) - k;
    k * m / (k * k + m * m + s * k * m)
}

/// Probability that the allele-count walk started at `k` reaches `b`
/// before `a`: `(1 - (1-s)^(k-a)) / (1 - (1-s)^(b-a))`.
///
/// Requires `0 <= a < k < b` and `0 < s < 1`.
pub fn hitting_prob(a: u32, b: u32, k: u32, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("s must lie in (0,1), got {s}")));
    }
    if !(a < k && k < b) {
        return Err(Error::domain(format!(
            "hitting_prob needs a < k < b, got a={a}, k={k}, b={b}"
        )));
    }
    Ok(one_minus_pow(s, f64::from(k - a)) / one_minus_pow(s, f64::from(b - a)))
}

/// Probability that a single mutant fixes: `s / (1 - (1-s)^(2N))`, the
/// `a = 0, b = 2N, k = 1` hitting probability.
pub fn fixation_prob(n: u32, s: f64) -> f64 {
    s / one_minus_pow(s, f64::from(2 * n))
}

/// The escape probability after the count first reaches `J`:
/// `q_J = 1 - exp(-(r/s) * sum_{k=J+1}^{2N} 1/k)`, with the harmonic sum
/// taken exactly.
///
/// Requires `1 <= J <= 2N`; `q_{2N} = 0` (empty sum).
pub fn q_j_value(n: u32, j: u32, r: f64, s: f64) -> Result<f64> {
    let two_n = 2 * n;
    if j == 0 || j > two_n {
        return Err(Error::domain(format!(
            "J must lie in 1..=2N, got J={j}, 2N={two_n}"
        )));
    }
    // Summing upward keeps the small terms first-ish; at desk scale the
    // plain f64 sum is accurate to ~1e-12 regardless.
    let harmonic: f64 = (j + 1..=two_n).map(|k| 1.0 / f64::from(k)).sum();
    Ok(-f64::exp_m1(-(r / s) * harmonic))
}

/// Expected per-level jump counts for the conditioned walk, counted from
/// the first visit to level `j` onward.
///
/// `eu`/`ed`/`eh` are the expected numbers of up-jumps, down-jumps and
/// holds at level `k` (holds include rejected proposals and same-allele
/// copies); `q_k` is the probability that an up-jump from `k` is never
/// undone, `r_kj` the probability level `k` is visited after the first
/// visit to `j`, and `beta_k` the hold-rate factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCountSummary {
    pub eu: f64,
    pub ed: f64,
    pub eh: f64,
    pub q_k: f64,
    pub r_kj: f64,
    pub beta_k: f64,
}

/// `q_k`: probability the walk, upon stepping from `k` to `k+1`, reaches
/// `2N` before returning to `k` — conditioned on overall fixation.
/// `q_0 = 1` by convention.
fn q_k_value(two_n: u32, s: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (s / one_minus_pow(s, f64::from(two_n - k)))
        * (one_minus_pow(s, f64::from(two_n)) / one_minus_pow(s, f64::from(k + 1)))
}

/// `r_kj`: probability the conditioned walk visits level `k` at or after
/// its first visit to `j`. Equals 1 for `j <= k`, 0 for `k = 0`.
fn r_kj_value(two_n: u32, s: f64, k: u32, j: u32) -> f64 {
    if j <= k {
        return 1.0;
    }
    if k == 0 {
        return 0.0;
    }
    1.0 - (one_minus_pow(s, f64::from(j - k)) / one_minus_pow(s, f64::from(two_n - k)))
        * (one_minus_pow(s, f64::from(two_n)) / one_minus_pow(s, f64::from(j)))
}

/// Evaluates the expected jump-count formulas at level `k`, counting from
/// the first visit to level `j`. Requires `1 <= k, j <= 2N - 1`.
pub fn expected_jump_counts(n: u32, s: f64, k: u32, j: u32) -> Result<JumpCountSummary> {
    let two_n = 2 * n;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("s must lie in (0,1), got {s}")));
    }
    if k == 0 || k >= two_n || j == 0 || j >= two_n {
        return Err(Error::domain(format!(
            "levels must lie in 1..=2N-1, got k={k}, j={j}, 2N={two_n}"
        )));
    }
    let q_k = q_k_value(two_n, s, k);
    let r_kj = r_kj_value(two_n, s, k, j);
    let eu = r_kj / q_k;
    let ed = if k > j {
        1.0 / q_k_value(two_n, s, k - 1) - 1.0
    } else {
        r_kj_value(two_n, s, k - 1, j) / q_k_value(two_n, s, k - 1)
    };
    let beta = beta_k(two_n, s, k);
    let eh = (eu + ed) / ((2.0 - s) * beta);
    Ok(JumpCountSummary {
        eu,
        ed,
        eh,
        q_k,
        r_kj,
        beta_k: beta,
    })
}

fn check_transition(two_n: u32, k: u32, l: u32) -> Result<()> {
    if k == 0 || k >= two_n {
        return Err(Error::domain(format!(
            "k must lie in 1..=2N-1, got k={k}, 2N={two_n}"
        )));
    }
    if l == 0 || l > two_n || u32::abs_diff(k, l) > 1 {
        return Err(Error::domain(format!(
            "invalid transition ({k} -> {l}) for 2N={two_n}"
        )));
    }
    Ok(())
}

/// One-step recombination probabilities, conditioned on the allele count
/// moving `k -> l` (with `|k - l| <= 1`).
///
/// Returns `(p_big, p_small)` where `p_big` is the probability that a given
/// `B`-carrier at the later time descends, at the neutral locus, from a
/// `b`-carrier one step earlier, and `p_small` the symmetric probability
/// for a `b`-carrier descending from a `B`-carrier. Both carry a factor
/// `r`; only the newborn can recombine, so:
///
/// - up-move: `(r (2N-k) / ((k+1) 2N), 0)`
/// - down-move: `(0, r k / ((2N-k+1) 2N))`
/// - hold: `(r beta_k / 2N, r beta_k / 2N)`
pub fn one_step_recomb_probs(n: u32, r: f64, s: f64, k: u32, l: u32) -> Result<(f64, f64)> {
    let two_n = 2 * n;
    check_transition(two_n, k, l)?;
    let (kf, nf) = (f64::from(k), f64::from(two_n));
    Ok(if l == k + 1 {
        (r * (nf - kf) / ((kf + 1.0) * nf), 0.0)
    } else if l + 1 == k {
        (0.0, r * kf / ((nf - kf + 1.0) * nf))
    } else {
        let p = r * beta_k(two_n, s, k) / nf;
        (p, p)
    })
}

/// One-step coalescence probabilities, conditioned on the allele count
/// moving `k -> l`: the probability that a given pair of distinct
/// individuals at the later time trace their neutral locus to the same
/// individual one step earlier, by pair class at the later time.
///
/// Returns `(p_bb_big, p_bb_small, p_mixed)` for (both `B`, both `b`,
/// one of each). Writing `D = k^2 + (2N-k)^2 + s k (2N-k)` (so that
/// `beta_k / (k(2N-k)) = 1/D`):
///
/// - up-move: `( (2/(k(k+1))) (1 - r(2N-k)/2N), 0, r/(2N(k+1)) )`
/// - down-move: `( 0, (2/((2N-k)(2N-k+1))) (1 - rk/2N), r/(2N(2N-k+1)) )`
/// - hold: `( (2/D)(1 - r(2N-k)/2N), (2/D)(1 - rk/2N), r/D )`
pub fn one_step_coal_probs(n: u32, r: f64, s: f64, k: u32, l: u32) -> Result<(f64, f64, f64)> {
    let two_n = 2 * n;
    check_transition(two_n, k, l)?;
    let (kf, nf) = (f64::from(k), f64::from(two_n));
    let mf = nf - kf; // count of b-carriers at the earlier time
    Ok(if l == k + 1 {
        (
            (2.0 / (kf * (kf + 1.0))) * (1.0 - r * mf / nf),
            0.0,
            r / (nf * (kf + 1.0)),
        )
    } else if l + 1 == k {
        (
            0.0,
            (2.0 / (mf * (mf + 1.0))) * (1.0 - r * kf / nf),
            r / (nf * (mf + 1.0)),
        )
    } else {
        let d = kf * kf + mf * mf + s * kf * mf;
        (
            (2.0 / d) * (1.0 - r * mf / nf),
            (2.0 / d) * (1.0 - r * kf / nf),
            r / d,
        )
    })
}

/// The classical haplotype-frequency reduction of a neutral variant hitched
/// to a sweeping allele, as a geometric-generation series:
///
/// `R0 * sum_{m>=0} r (1-r)^m (1-p0) / (1 - p0 + p0 (1+s)^(m+1))`
///
/// truncated once the geometric tail bound `R0 (1-r)^(m+1)` drops below
/// `tol` (default style: `1e-12`). `r = 0` returns 0 exactly.
pub fn msh_frequency(r0: f64, p0: f64, s: f64, r: f64, tol: f64) -> f64 {
    if r == 0.0 || r0 == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut geo = 1.0; // (1-r)^m
    let mut grow = 1.0 + s; // (1+s)^(m+1)
    loop {
        sum += r0 * r * geo * (1.0 - p0) / (1.0 - p0 + p0 * grow);
        geo *= 1.0 - r;
        grow *= 1.0 + s;
        if r0 * geo < tol {
            return sum;
        }
    }
}

/// Logistic sweep curve `p(t) = p0 / (p0 + (1-p0) e^{-st})`, the solution
/// of `dp/dt = s p (1-p)` started from `p0` in `(0, 1)`.
pub fn logistic_frequency(p0: f64, s: f64, t: f64) -> f64 {
    p0 / (p0 + (1.0 - p0) * f64::exp(-s * t))
}
