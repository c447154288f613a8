//! The first-order oracle interface shared by every instance family.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::linalg::{dot, DenseVector};
use crate::random::OrthonormalTuple;

/// What an oracle answer reveals about the hidden parameter.
///
/// Indices are 0-based throughout the crate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Disclosure {
    /// MaxCoord: the scanned prefix `i_1, ..., i_j`; its last entry carries
    /// the reported subgradient.
    Prefix { indices: Vec<usize> },
    /// NemYud: the smallest index attaining the maximum.
    Argmax { index: usize },
    /// Wall family: which branch of `max{p_V, W_V}` produced the answer.
    Wall { branch: WallBranch },
    /// Oracles without structured metadata (closures).
    Opaque,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum WallBranch {
    Linear { index: usize },
    Wall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAnswer {
    pub value: f64,
    pub subgradient: DenseVector,
    pub disclosure: Disclosure,
}

/// Value and subgradient access to a convex function on `R^dim`.
pub trait FirstOrderOracle {
    fn dim(&self) -> usize;

    fn value(&self, x: &DenseVector) -> Result<f64>;

    fn answer(&self, x: &DenseVector) -> Result<OracleAnswer>;

    /// An upper bound on the norm of every subgradient the oracle can return
    /// on the unit ball.
    fn lipschitz_bound(&self) -> f64;

    /// Whether `f(a x) = a f(x)` and `∂f(a x) = ∂f(x)` for `a > 0`.
    fn positively_homogeneous(&self) -> bool {
        false
    }
}

impl<O: FirstOrderOracle + ?Sized> FirstOrderOracle for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DenseVector) -> Result<f64> {
        (**self).value(x)
    }
    fn answer(&self, x: &DenseVector) -> Result<OracleAnswer> {
        (**self).answer(x)
    }
    fn lipschitz_bound(&self) -> f64 {
        (**self).lipschitz_bound()
    }
    fn positively_homogeneous(&self) -> bool {
        (**self).positively_homogeneous()
    }
}

/// Adapts a closure returning `(value, subgradient)` into an oracle.
pub struct FnOracle<F> {
    dim: usize,
    lipschitz: f64,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&DenseVector) -> Result<(f64, DenseVector)>,
{
    pub fn new(dim: usize, lipschitz: f64, f: F) -> Self {
        Self { dim, lipschitz, f }
    }
}

impl<F> FirstOrderOracle for FnOracle<F>
where
    F: Fn(&DenseVector) -> Result<(f64, DenseVector)>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        Ok((self.f)(x)?.0)
    }

    fn answer(&self, x: &DenseVector) -> Result<OracleAnswer> {
        check_dim(self.dim, x.dim())?;
        let (value, subgradient) = (self.f)(x)?;
        check_dim(self.dim, subgradient.dim())?;
        Ok(OracleAnswer {
            value,
            subgradient,
            disclosure: Disclosure::Opaque,
        })
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
}

/// A point described by its coordinates along a hidden orthonormal tuple
/// and the norm of what is left over.
///
/// Both hidden-direction families depend on `x` only through this data,
/// which is what lets the estimators work in huge nominal dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `<v_i, x>` for each hidden direction, in order.
    pub along: Vec<f64>,
    /// `‖x − Σ_i <v_i,x> v_i‖`.
    pub residual: f64,
}

impl Projection {
    pub fn new(along: Vec<f64>, residual: f64) -> Self {
        debug_assert!(residual >= 0.0);
        Self { along, residual }
    }

    pub fn of(basis: &OrthonormalTuple, x: &DenseVector) -> Result<Self> {
        let along = basis.coordinates(x)?;
        let spanned = basis.combine(&along);
        let residual = spanned.distance(x)?;
        Ok(Self { along, residual })
    }

    pub fn k(&self) -> usize {
        self.along.len()
    }

    pub fn norm(&self) -> f64 {
        (dot(&self.along, &self.along) + self.residual * self.residual).sqrt()
    }

    /// The same point seen through the first `t` directions only: the
    /// coordinates beyond `t` fold into the residual.
    pub fn truncate(&self, t: usize) -> Self {
        let t = t.min(self.along.len());
        let dropped: f64 = self.along[t..].iter().map(|a| a * a).sum();
        Self {
            along: self.along[..t].to_vec(),
            residual: (self.residual * self.residual + dropped).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_splits_along_and_residual() {
        let basis = OrthonormalTuple::standard(4, 2).unwrap();
        let x = DenseVector::new(vec![1.0, -2.0, 2.0, 0.0]).unwrap();
        let p = Projection::of(&basis, &x).unwrap();
        assert_eq!(p.along, vec![1.0, -2.0]);
        assert_eq!(p.residual, 2.0);
        assert_eq!(p.norm(), 3.0);
        let t = p.truncate(1);
        assert_eq!(t.along, vec![1.0]);
        assert!((t.residual - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fn_oracle_checks_dimensions() {
        let o = FnOracle::new(2, 1.0, |x: &DenseVector| {
            Ok((x[0], DenseVector::basis(2, 0)))
        });
        assert!(o.value(&DenseVector::zeros(3)).is_err());
        let a = o.answer(&DenseVector::zeros(2)).unwrap();
        assert_eq!(a.disclosure, Disclosure::Opaque);
    }
}
