//! How often a point built without knowledge of `v_k` is ε-optimal.

use serde::{Deserialize, Serialize};

use super::escape::HiddenFamily;
use super::{count_events, LemmaEstimate, GUESS};
use crate::error::{Error, Result};
use crate::instances::Family;
use crate::oracle::Projection;
use crate::random::{sample_haar_prefix, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessCandidate {
    /// `-(1/√(k-1)) Σ_{i<k} v_i`, the best point the known directions allow.
    BestGuess,
    /// `x̃ = -(1/√k) Σ_i v_i`, built with `v_k` in hand.
    FullKnowledge,
    /// A fixed Haar-random unit vector.
    RandomUnit,
    Origin,
}

impl GuessCandidate {
    pub fn as_str(self) -> &'static str {
        match self {
            GuessCandidate::BestGuess => "best-guess",
            GuessCandidate::FullKnowledge => "full-knowledge",
            GuessCandidate::RandomUnit => "random-unit",
            GuessCandidate::Origin => "origin",
        }
    }
}

/// Frequency over `v_k` of `f(x) ≤ f(x̃) + ε` with `v_1..v_{k-1}` and the
/// candidate fixed. Since `f(x*) ≤ f(x̃)`, this event contains true
/// ε-optimality. The bound is `2e^{-32(n-k+1)ε²}`.
pub fn guess_reduced(
    family: &HiddenFamily,
    epsilon: f64,
    candidate: GuessCandidate,
    trials: u64,
    seed: u64,
) -> Result<LemmaEstimate> {
    let k = family.k();
    if k < 2 {
        return Err(Error::InvalidParameter(
            "the guessing experiment needs k ≥ 2".into(),
        ));
    }
    let n = family.n();
    // Candidate as coordinates on v_1..v_{k-1} plus the norm of what lies
    // outside their span.
    let (known, outside) = match candidate {
        GuessCandidate::BestGuess => (vec![-1.0 / ((k - 1) as f64).sqrt(); k - 1], 0.0),
        GuessCandidate::Origin => (vec![0.0; k - 1], 0.0),
        GuessCandidate::RandomUnit => {
            let p = sample_haar_prefix(n, k - 1, &mut RngStream::new(seed, 1).generator())?;
            (p.coords, p.tail)
        }
        GuessCandidate::FullKnowledge => (Vec::new(), 0.0),
    };
    let reference = Projection::new(vec![-1.0 / (k as f64).sqrt(); k], 0.0);
    let f_ref = family.value(&reference)?;

    let hits = count_events(RngStream::new(seed, 2), trials, |rng| {
        let proj = if candidate == GuessCandidate::FullKnowledge {
            reference.clone()
        } else {
            // <v_k, x> is the first coordinate of a Haar vector in the
            // complement of v_1..v_{k-1}, scaled by the outside norm.
            let p = sample_haar_prefix(n - (k as u64 - 1), 1, rng)?;
            let mut along = known.clone();
            along.push(outside * p.coords[0]);
            Projection::new(along, outside * p.tail)
        };
        Ok(family.value(&proj)? <= f_ref + epsilon)
    })?;
    let bound = 2.0 * (-32.0 * (n - k as u64 + 1) as f64 * epsilon * epsilon).exp();
    Ok(LemmaEstimate::new(
        GUESS,
        format!(
            "{} k = {k} n = {n} candidate = {}",
            family.family(),
            candidate.as_str()
        ),
        hits,
        trials,
        bound,
        seed,
    ))
}

pub fn estimate_guess_success(
    family: Family,
    epsilon: f64,
    candidate: GuessCandidate,
    trials: u64,
    seed: u64,
) -> Result<LemmaEstimate> {
    guess_reduced(
        &HiddenFamily::from_epsilon(family, epsilon)?,
        epsilon,
        candidate,
        trials,
        seed,
    )
}
