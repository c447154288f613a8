//! Dense real vectors and the Euclidean-ball projection.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A fixed-dimension real vector with finite entries.
///
/// The norm is always the Euclidean one. Construction rejects NaN and
/// infinite entries, so every `DenseVector` in circulation is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DenseVector {
    entries: Vec<f64>,
}

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidVector("dimension must be positive".into()));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVector(format!(
                "entry {i} is not finite ({})",
                entries[i]
            )));
        }
        Ok(Self { entries })
    }

    /// Builds a vector from entries the caller has already produced with
    /// finite arithmetic.
    pub(crate) fn from_finite(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        debug_assert!(entries.iter().all(|v| v.is_finite()));
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            entries: vec![0.0; dim],
        }
    }

    /// The standard basis vector `e_index` (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dim {dim}"
        );
        let mut v = Self::zeros(dim);
        v.entries[index] = 1.0;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.entries.iter()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.entries, &other.entries))
    }

    pub fn norm_squared(&self) -> f64 {
        dot(&self.entries, &self.entries)
    }

    pub fn norm(&self) -> f64 {
        let sq = self.norm_squared();
        if sq.is_normal() {
            return sq.sqrt();
        }
        // Squares under- or overflowed: rescale by the largest magnitude.
        let scale = self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let inner: f64 = self.entries.iter().map(|v| (v / scale) * (v / scale)).sum();
        scale * inner.sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_finite(self.entries.iter().map(|v| v * factor).collect())
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::from_finite(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + factor * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// In-place `self += factor * other`; dimensions must already agree.
    pub(crate) fn axpy_in_place(&mut self, factor: f64, other: &[f64]) {
        debug_assert_eq!(self.entries.len(), other.len());
        for (a, b) in self.entries.iter_mut().zip(other) {
            *a += factor * b;
        }
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.entries[index]
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Vec<f64> {
        v.entries
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection onto the closed ball `B(0, radius)`.
///
/// Points already inside the ball are returned unchanged. Scaled points are
/// nudged down by at most a few ulps so that the result's computed norm never
/// exceeds `radius`, which makes the projection exactly idempotent.
pub fn project_ball(y: &DenseVector, radius: f64) -> Result<DenseVector> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius must be positive and finite, got {radius}"
        )));
    }
    let norm = y.norm();
    if !norm.is_finite() {
        return Err(Error::InvalidVector("norm overflowed".into()));
    }
    if norm <= radius {
        return Ok(y.clone());
    }
    let mut factor = radius / norm;
    let mut out = y.scaled(factor);
    while out.norm() > radius {
        factor = next_down(factor);
        out = y.scaled(factor);
    }
    Ok(out)
}

fn next_down(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    f64::from_bits(x.to_bits() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[f64]) -> DenseVector {
        DenseVector::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(matches!(
            DenseVector::new(vec![1.0, f64::NAN]),
            Err(Error::InvalidVector(_))
        ));
        assert!(DenseVector::new(vec![f64::INFINITY]).is_err());
        assert!(DenseVector::new(vec![]).is_err());
    }

    #[test]
    fn norm_is_zero_only_for_zero_vector() {
        assert_eq!(DenseVector::zeros(3).norm(), 0.0);
        assert!(v(&[0.0, 1e-300, 0.0]).norm() > 0.0);
        assert_eq!(v(&[3.0, 4.0]).norm(), 5.0);
    }

    #[test]
    fn project_zero_stays_zero() {
        let p = project_ball(&DenseVector::zeros(3), 1.0).unwrap();
        assert_eq!(p, DenseVector::zeros(3));
    }

    #[test]
    fn project_scales_outside_points() {
        let p = project_ball(&v(&[3.0, 4.0]), 1.0).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15);
        assert!((p[1] - 0.8).abs() < 1e-15);
        assert!(p.norm() <= 1.0);
    }

    #[test]
    fn project_keeps_inside_points() {
        let y = v(&[0.1, 0.2]);
        assert_eq!(project_ball(&y, 1.0).unwrap(), y);
    }

    #[test]
    fn project_rejects_bad_radius() {
        assert!(project_ball(&v(&[1.0]), 0.0).is_err());
        assert!(project_ball(&v(&[1.0]), f64::NAN).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert_eq!(
            v(&[1.0]).dot(&v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch {
                expected: 1,
                got: 2
            })
        );
    }

    #[test]
    fn serde_round_trip_validates() {
        let json = serde_json::to_string(&v(&[1.5, -2.0])).unwrap();
        assert_eq!(json, "[1.5,-2.0]");
        let back: DenseVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v(&[1.5, -2.0]));
        assert!(serde_json::from_str::<DenseVector>("[]").is_err());
    }
}
