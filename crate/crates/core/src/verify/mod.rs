//! Monte Carlo estimators for the probabilistic lemmas behind the lower
//! bounds, and property suites for the oracles.

mod disclosure;
mod escape;
mod guess;
mod properties;

pub use disclosure::{
    adversarial_query, disclosure_audit, estimate_disclosure, expected_adversarial_new_fixes,
    DisclosureAudit, DisclosureStudy, DisclosureTracker, QueryStrategy,
};
pub use escape::{
    escape_materialized, escape_query_norm, escape_reduced, escape_stress, estimate_argmax_escape,
    stress_escape_rate, HiddenFamily,
};
pub use guess::{estimate_guess_success, guess_reduced, GuessCandidate};
pub use properties::{
    ball_sampler, property_suite, span_biased_sampler, PropertyCheck, PropertyConfig,
    PropertyReport,
};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{sample_haar_prefix, sample_unit_vector, RngStream};

pub const CONCENTRATION: &str = "concentration";
pub const ARGMAX_ESCAPE: &str = "argmax-escape";
pub const WALL_ARGMAX_ESCAPE: &str = "wall-argmax-escape";
pub const GUESS: &str = "guess";
pub const DISCLOSURE: &str = "disclosure";

/// An empirical event frequency next to the bound the theory predicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaEstimate {
    pub lemma_id: String,
    /// Free-form description of the setting (family, parameters, mode).
    pub detail: String,
    pub successes: u64,
    pub trials: u64,
    pub empirical_probability: f64,
    pub theoretical_bound: f64,
    pub seed: u64,
    pub pass: bool,
}

impl LemmaEstimate {
    pub fn new(
        lemma_id: &str,
        detail: String,
        successes: u64,
        trials: u64,
        theoretical_bound: f64,
        seed: u64,
    ) -> Self {
        let empirical_probability = successes as f64 / trials as f64;
        Self {
            lemma_id: lemma_id.to_string(),
            detail,
            successes,
            trials,
            empirical_probability,
            theoretical_bound,
            seed,
            pass: empirical_probability < pass_threshold(theoretical_bound, trials),
        }
    }

    /// The largest frequency that still counts as consistent with the bound.
    pub fn threshold(&self) -> f64 {
        pass_threshold(self.theoretical_bound, self.trials)
    }
}

/// `b + 3√(b(1-b)/T) + 1/T` with `b` clipped to `[0, 1]`; frequencies must
/// stay strictly below it, so a vanishing bound tolerates no observations.
pub fn pass_threshold(bound: f64, trials: u64) -> f64 {
    let b = bound.clamp(0.0, 1.0);
    let t = trials as f64;
    b + 3.0 * (b * (1.0 - b) / t).sqrt() + 1.0 / t
}

/// Counts trials for which `event` holds, one independent sub-stream per
/// trial; the count does not depend on scheduling.
pub(crate) fn count_events<F>(seed: RngStream, trials: u64, event: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.substream(i).generator();
            event(&mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Dimension up to which estimators draw full vectors instead of the reduced
/// coordinates.
pub const MATERIALIZE_LIMIT: u64 = 1 << 16;

/// Frequency of `|<e_1, v>| ≥ c` for Haar unit `v ∈ R^n`, against
/// `2e^{-nc²/2}`.
pub fn estimate_concentration(n: u64, c: f64, trials: u64, seed: u64) -> Result<LemmaEstimate> {
    if n == 0 || trials == 0 || !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need n ≥ 1, trials ≥ 1 and c ≥ 0 (got n = {n}, trials = {trials}, c = {c})"
        )));
    }
    let stream = RngStream::new(seed, 0);
    let hits = count_events(stream, trials, |rng| {
        let first = if n <= MATERIALIZE_LIMIT {
            sample_unit_vector(n as usize, rng)?[0]
        } else {
            sample_haar_prefix(n, 1, rng)?.coords[0]
        };
        Ok(first.abs() >= c)
    })?;
    let bound = 2.0 * (-(n as f64) * c * c / 2.0).exp();
    Ok(LemmaEstimate::new(
        CONCENTRATION,
        format!("n = {n}, c = {c}"),
        hits,
        trials,
        bound,
        seed,
    ))
}
