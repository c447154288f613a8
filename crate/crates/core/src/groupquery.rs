//! OR-queries on the hidden sign vector, answered through the MaxCoord
//! function oracle.

use crate::error::{Error, Result};
use crate::instances::{MaxCoordInstance, Sign};
use crate::linalg::DenseVector;
use crate::oracle::FirstOrderOracle;

/// Whether some `i ∈ S` has `z_i = +1`, from one value query at
/// `x = (1/√n) Σ_{i∈S} e_i`.
///
/// The value is `1/√n` if `S` holds a `+1`, else `0`, or `-1/√n` when `S`
/// is all of `[n]`; the last two both read as `false`.
pub fn or_query(inst: &MaxCoordInstance, set: &[usize]) -> Result<bool> {
    let n = inst.n();
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut x = vec![0.0; n];
    for &i in set {
        if i >= n {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: n - 1,
            });
        }
        x[i] = scale;
    }
    let value = inst.value(&DenseVector::new(x)?)?;
    Ok((value - scale).abs() <= 1e-12)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrLearnResult {
    pub z_hat: Vec<Sign>,
    pub queries_used: usize,
    /// `resolved[i]` is set once `z_i` is determined; unresolved entries of
    /// `z_hat` default to `-1`.
    pub resolved: Vec<bool>,
    pub complete: bool,
}

/// Recovers `z` by adaptive splitting: probe `[n]`, and for every interval
/// that contains a `+1`, probe its left half, inferring the right half when
/// the left is empty. Uses at most `2·(#ones)·⌈log₂ n⌉ + 1` queries.
pub fn learn_z_via_or(inst: &MaxCoordInstance, budget: usize) -> Result<OrLearnResult> {
    if budget == 0 {
        return Err(Error::InvalidParameter(
            "query budget must be at least 1".into(),
        ));
    }
    let n = inst.n();
    let mut z_hat = vec![Sign::Minus; n];
    let mut resolved = vec![false; n];
    let mut used = 0usize;

    let ask = |lo: usize, hi: usize, used: &mut usize| -> Result<Option<bool>> {
        if *used >= budget {
            return Ok(None);
        }
        *used += 1;
        let set: Vec<usize> = (lo..hi).collect();
        or_query(inst, &set).map(Some)
    };

    // Intervals [lo, hi) known to contain at least one +1.
    let mut stack: Vec<(usize, usize)> = Vec::new();
    match ask(0, n, &mut used)? {
        None => unreachable!("budget is at least 1"),
        Some(false) => resolved.iter_mut().for_each(|r| *r = true),
        Some(true) => stack.push((0, n)),
    }
    let mut complete = true;
    while let Some((lo, hi)) = stack.pop() {
        if hi - lo == 1 {
            z_hat[lo] = Sign::Plus;
            resolved[lo] = true;
            continue;
        }
        let mid = lo + (hi - lo) / 2;
        match ask(lo, mid, &mut used)? {
            None => {
                complete = false;
                break;
            }
            Some(false) => {
                resolved[lo..mid].iter_mut().for_each(|r| *r = true);
                stack.push((mid, hi));
            }
            Some(true) => {
                stack.push((lo, mid));
                match ask(mid, hi, &mut used)? {
                    None => {
                        complete = false;
                        break;
                    }
                    Some(false) => resolved[mid..hi].iter_mut().for_each(|r| *r = true),
                    Some(true) => stack.push((mid, hi)),
                }
            }
        }
    }
    let complete = complete && resolved.iter().all(|&r| r);
    Ok(OrLearnResult {
        z_hat,
        queries_used: used,
        resolved,
        complete,
    })
}

/// `2·ones·⌈log₂ n⌉ + 1`.
pub fn or_query_budget(n: usize, ones: usize) -> usize {
    let depth = (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize;
    2 * ones * depth + 1
}
