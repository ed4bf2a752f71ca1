//! Model parameters shared by the simulator, the approximating laws, and
//! the closed-form oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs of the two-locus Moran model.
///
/// The population holds `2N` haploid individuals; `n` here is the `N` of
/// that convention, so all individual indices run over `0..2N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Half the population size: the model has `2 * n` individuals.
    pub n: u32,
    /// Selective advantage of the beneficial allele `B`; fitnesses are 1
    /// for `B` and `1 - s` for `b`, with `0 < s < 1`.
    pub s: f64,
    /// Per-birth recombination probability, in `[0, 1)`. With probability
    /// `r` the newborn takes its neutral allele from an independent second
    /// parent instead of the primary one.
    pub r: f64,
    /// Number of lineages sampled at fixation, `1 <= sample_size <= 2N`.
    pub sample_size: u32,
    /// Master RNG seed; replicate `i` of an experiment derives its own
    /// stream from `(seed, i)`.
    pub seed: u64,
}

impl Params {
    /// Validating constructor; see [`validate_params`].
    pub fn new(n: u32, s: f64, r: f64, sample_size: u32, seed: u64) -> Result<Self> {
        validate_params(n, s, r, sample_size, seed)
    }

    /// The population size `2N`.
    pub fn two_n(&self) -> u32 {
        2 * self.n
    }
}

/// Checks every parameter bound and returns [`Params`] when all hold.
///
/// Bounds: `N >= 1`, `0 < s < 1`, `0 <= r < 1`, `1 <= sample_size <= 2N`.
/// (The additional paintbox requirement `r < s` is checked at the paintbox
/// boundary, not here.)
pub fn validate_params(n: u32, s: f64, r: f64, sample_size: u32, seed: u64) -> Result<Params> {
    if n == 0 {
        return Err(Error::domain("N must be positive"));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("s must lie in (0,1), got {s}")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("r must lie in [0,1), got {r}")));
    }
    if sample_size == 0 {
        return Err(Error::domain("sample size n must be at least 1"));
    }
    if sample_size > 2 * n {
        return Err(Error::domain(format!(
            "n exceeds 2N: sample size {sample_size} > {}",
            2 * n
        )));
    }
    Ok(Params {
        n,
        s,
        r,
        sample_size,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_the_reference_parameter_set() {
        let p = validate_params(10_000, 0.1, 0.00106, 2, 1).unwrap();
        assert_eq!(p.two_n(), 20_000);
        assert_eq!(p.sample_size, 2);
    }

    #[test]
    fn rejects_s_outside_open_unit_interval() {
        for bad_s in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            let err = validate_params(10, bad_s, 0.0, 1, 0).unwrap_err();
            assert!(
                err.to_string().contains("s must lie in (0,1)"),
                "unexpected message: {err}"
            );
        }
    }

    #[test]
    fn rejects_sample_size_above_population() {
        let err = validate_params(10, 0.5, 0.1, 21, 0).unwrap_err();
        assert!(err.to_string().contains("n exceeds 2N"), "got: {err}");
        assert!(validate_params(10, 0.5, 0.1, 20, 0).is_ok());
    }

    #[test]
    fn rejects_r_outside_half_open_interval() {
        assert!(validate_params(10, 0.5, 1.0, 1, 0).is_err());
        assert!(validate_params(10, 0.5, -0.1, 1, 0).is_err());
        assert!(validate_params(10, 0.5, 0.0, 1, 0).is_ok());
    }

    #[test]
    fn rejects_degenerate_population_and_empty_sample() {
        assert!(validate_params(0, 0.5, 0.0, 1, 0).is_err());
        assert!(validate_params(5, 0.5, 0.0, 0, 0).is_err());
    }
}
