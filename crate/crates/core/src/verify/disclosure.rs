//! Bookkeeping of which hidden signs MaxCoord answers reveal.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{MaxCoordInstance, Sign};
use crate::linalg::DenseVector;
use crate::oracle::{Disclosure, FirstOrderOracle};
use crate::random::{sample_unit_vector, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureAudit {
    pub prefix_lengths: Vec<usize>,
    /// Indices each query revealed that no earlier query had.
    pub new_fixes: Vec<usize>,
    /// `|I_t|` after each query.
    pub running_fixed: Vec<usize>,
    /// Mean of `new_fixes`.
    pub mean: f64,
    pub mean_prefix_length: f64,
    pub total_fixed: usize,
}

/// Replays the oracle over a stream and tracks the revealed set `I`.
#[derive(Debug, Clone)]
pub struct DisclosureTracker<'a> {
    inst: &'a MaxCoordInstance,
    known: Vec<bool>,
    total: usize,
}

impl<'a> DisclosureTracker<'a> {
    pub fn new(inst: &'a MaxCoordInstance) -> Self {
        Self {
            inst,
            known: vec![false; inst.n()],
            total: 0,
        }
    }

    pub fn known(&self) -> &[bool] {
        &self.known
    }

    pub fn total_fixed(&self) -> usize {
        self.total
    }

    /// Queries the oracle at `x`; returns `(prefix length, newly fixed)`.
    pub fn observe(&mut self, x: &DenseVector) -> Result<(usize, usize)> {
        let answer = self.inst.answer(x)?;
        let Disclosure::Prefix { indices } = answer.disclosure else {
            return Err(Error::InvalidParameter(
                "maxcoord answers carry a prefix".into(),
            ));
        };
        let mut new = 0;
        for &i in &indices {
            if !self.known[i] {
                self.known[i] = true;
                new += 1;
            }
        }
        self.total += new;
        Ok((indices.len(), new))
    }
}

pub fn disclosure_audit(
    inst: &MaxCoordInstance,
    queries: &[DenseVector],
) -> Result<DisclosureAudit> {
    let mut tracker = DisclosureTracker::new(inst);
    let mut prefix_lengths = Vec::with_capacity(queries.len());
    let mut new_fixes = Vec::with_capacity(queries.len());
    let mut running_fixed = Vec::with_capacity(queries.len());
    for x in queries {
        let (len, new) = tracker.observe(x)?;
        prefix_lengths.push(len);
        new_fixes.push(new);
        running_fixed.push(tracker.total_fixed());
    }
    let mean_of = |v: &[usize]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<usize>() as f64 / v.len() as f64
        }
    };
    Ok(DisclosureAudit {
        mean: mean_of(&new_fixes),
        mean_prefix_length: mean_of(&prefix_lengths),
        total_fixed: tracker.total_fixed(),
        prefix_lengths,
        new_fixes,
        running_fixed,
    })
}

/// A query that wastes no scan position on revealed indices: every known
/// index comes first with the sign that disagrees with `z`, then the unknown
/// indices with random signs, all with distinct decreasing magnitudes.
pub fn adversarial_query<R: Rng + ?Sized>(
    tracker: &DisclosureTracker<'_>,
    rng: &mut R,
) -> DenseVector {
    let n = tracker.known.len();
    let z = tracker.inst.z();
    let mut x = vec![0.0; n];
    let mut pos = 0usize;
    for i in (0..n).filter(|&i| tracker.known[i]) {
        x[i] = -z[i].value() * (n - pos) as f64;
        pos += 1;
    }
    for i in (0..n).filter(|&i| !tracker.known[i]) {
        x[i] = Sign::random(rng).value() * (n - pos) as f64;
        pos += 1;
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    DenseVector::from_finite(x.into_iter().map(|v| v / norm).collect())
}

/// Expected new fixes of an adversarial query with `unknown` unrevealed
/// indices: `Σ_{m<U} m/2^m + U/2^{U-1}·½ = 2 - 2^{1-U}`.
pub fn expected_adversarial_new_fixes(unknown: usize) -> f64 {
    if unknown == 0 {
        0.0
    } else {
        2.0 - 2f64.powi(1 - unknown.min(1100) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryStrategy {
    RandomUnit,
    AdversarialReplay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureStudy {
    pub strategy: QueryStrategy,
    pub n: usize,
    pub streams: u64,
    pub stream_len: usize,
    pub queries: u64,
    pub mean_new_fixes: f64,
    pub std_dev: f64,
    /// Exact expectation of the mean for the adversarial strategy.
    pub expected_mean: Option<f64>,
    pub bound: f64,
    /// `bound + 3·std_dev/√queries`.
    pub threshold: f64,
    pub max_total_fixed: usize,
    pub seed: u64,
    pub pass: bool,
}

/// Mean new fixes per query over `streams` independent streams, each with a
/// fresh uniform `z ∈ {±1}^n` and `stream_len` queries.
pub fn estimate_disclosure(
    n: usize,
    streams: u64,
    stream_len: usize,
    strategy: QueryStrategy,
    seed: u64,
) -> Result<DisclosureStudy> {
    if n == 0 || streams == 0 || stream_len == 0 {
        return Err(Error::InvalidParameter(
            "n, streams and stream length must be positive".into(),
        ));
    }
    let root = RngStream::new(seed, 0);
    let per_stream: Vec<(u64, u64, f64, usize)> = (0..streams)
        .into_par_iter()
        .map(|s| -> Result<(u64, u64, f64, usize)> {
            let mut rng = root.substream(s).generator();
            let inst = MaxCoordInstance::random(n, &mut rng)?;
            let mut tracker = DisclosureTracker::new(&inst);
            let (mut sum, mut sum_sq, mut expected) = (0u64, 0u64, 0.0f64);
            for _ in 0..stream_len {
                let x = match strategy {
                    QueryStrategy::RandomUnit => sample_unit_vector(n, &mut rng)?,
                    QueryStrategy::AdversarialReplay => {
                        expected += expected_adversarial_new_fixes(n - tracker.total_fixed());
                        adversarial_query(&tracker, &mut rng)
                    }
                };
                let (_, new) = tracker.observe(&x)?;
                sum += new as u64;
                sum_sq += (new * new) as u64;
            }
            Ok((sum, sum_sq, expected, tracker.total_fixed()))
        })
        .collect::<Result<_>>()?;

    let queries = streams * stream_len as u64;
    let q = queries as f64;
    let sum: u64 = per_stream.iter().map(|s| s.0).sum();
    let sum_sq: u64 = per_stream.iter().map(|s| s.1).sum();
    let mean = sum as f64 / q;
    let var = (sum_sq as f64 / q - mean * mean).max(0.0) * q / (q - 1.0).max(1.0);
    let std_dev = var.sqrt();
    let bound = 2.0;
    let threshold = bound + 3.0 * std_dev / q.sqrt();
    Ok(DisclosureStudy {
        strategy,
        n,
        streams,
        stream_len,
        queries,
        mean_new_fixes: mean,
        std_dev,
        expected_mean: match strategy {
            QueryStrategy::AdversarialReplay => {
                Some(per_stream.iter().map(|s| s.2).sum::<f64>() / q)
            }
            QueryStrategy::RandomUnit => None,
        },
        bound,
        threshold,
        max_total_fixed: per_stream.iter().map(|s| s.3).max().unwrap_or(0),
        seed,
        pass: mean <= threshold,
    })
}
