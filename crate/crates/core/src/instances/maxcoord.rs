//! The signed max-coordinate family `f_z(x) = max_i z_i x_i`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;
use crate::oracle::{Disclosure, FirstOrderOracle, OracleAnswer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    /// `+1` for `a >= 0`, `-1` otherwise; zero counts as positive.
    pub fn of(a: f64) -> Self {
        if a >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::Format(format!("sign must be +1 or -1, got {other}"))),
        }
    }
}

/// `n = ⌊0.9 / ε²⌋`, which keeps `ε < 1/√n`.
///
/// The quotient is floored with a 1e-9 relative guard so that values such as
/// `ε = 0.05`, whose square rounds up in binary, still give 360.
pub fn maxcoord_params(epsilon: f64) -> Result<usize> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let raw = 0.9 / (epsilon * epsilon);
    let n = (raw * (1.0 + 1e-9)).floor();
    if n < 1.0 {
        return Err(Error::EpsilonOutOfRange(format!(
            "epsilon = {epsilon} gives n = 0"
        )));
    }
    if n > (1u64 << 40) as f64 {
        return Err(Error::EpsilonOutOfRange(format!(
            "epsilon = {epsilon} gives an impractically large dimension"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCoordInstance {
    z: Vec<Sign>,
    epsilon: Option<f64>,
}

impl MaxCoordInstance {
    pub fn new(z: Vec<Sign>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidParameter(
                "sign vector must be nonempty".into(),
            ));
        }
        Ok(Self { z, epsilon: None })
    }

    /// A uniformly random sign vector of dimension `maxcoord_params(ε)`.
    pub fn from_epsilon<R: Rng + ?Sized>(epsilon: f64, rng: &mut R) -> Result<Self> {
        let n = maxcoord_params(epsilon)?;
        let mut inst = Self::random(n, rng)?;
        inst.epsilon = Some(epsilon);
        Ok(inst)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..n).map(|_| Sign::random(rng)).collect())
    }

    pub(crate) fn with_epsilon(mut self, epsilon: Option<f64>) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[Sign] {
        &self.z
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// Indices in decreasing order of `|x_i|`, ties in increasing index.
    pub fn scan_order(x: &DenseVector) -> Vec<usize> {
        let mut order: Vec<usize> = (0..x.dim()).collect();
        // Stable sort keeps the natural order among equal magnitudes.
        order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
        order
    }

    /// The minimizer over the unit ball, `x* = -(1/√n) Σ z_i e_i`, and
    /// `f(x*) = -1/√n`.
    pub fn optimum(&self) -> (DenseVector, f64) {
        let scale = 1.0 / (self.n() as f64).sqrt();
        let x = DenseVector::from_finite(self.z.iter().map(|s| -s.value() * scale).collect());
        (x, -scale)
    }
}

impl FirstOrderOracle for MaxCoordInstance {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        check_dim(self.n(), x.dim())?;
        Ok(self
            .z
            .iter()
            .zip(x.iter())
            .map(|(s, xi)| s.value() * xi)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Scans indices by decreasing `|x_i|` and stops at the first whose sign
    /// matches `z`; when none does the scan runs to the end. The answer is
    /// `z_i e_i` for the index where the scan stopped.
    fn answer(&self, x: &DenseVector) -> Result<OracleAnswer> {
        check_dim(self.n(), x.dim())?;
        let order = Self::scan_order(x);
        let stop = order
            .iter()
            .position(|&i| Sign::of(x[i]) == self.z[i])
            .unwrap_or(order.len() - 1);
        let i = order[stop];
        let zi = self.z[i].value();
        let mut subgradient = DenseVector::zeros(self.n());
        subgradient.entries_mut()[i] = zi;
        let mut prefix = order;
        prefix.truncate(stop + 1);
        Ok(OracleAnswer {
            value: zi * x[i],
            subgradient,
            disclosure: Disclosure::Prefix { indices: prefix },
        })
    }

    fn lipschitz_bound(&self) -> f64 {
        1.0
    }

    fn positively_homogeneous(&self) -> bool {
        true
    }
}

/// Reads the hidden signs off a near-optimal point: `z = -sign(x)`.
pub fn recover_z(x: &DenseVector) -> Vec<Sign> {
    x.iter().map(|&xi| Sign::of(xi).flip()).collect()
}
