//! The hidden-direction family `f_V(x) = max_i <v_i,x> + (k-i)γ‖x‖`.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseVector;
use crate::oracle::{Disclosure, FirstOrderOracle, OracleAnswer, Projection};
use crate::random::{sample_orthonormal_tuple, OrthonormalTuple};

/// Derived constants of the family for a target accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NemYudParams {
    pub k: usize,
    pub gamma: f64,
    /// Nominal dimension.
    pub n: u64,
}

/// `k = round(1/(100ε²))`, `γ = 1/(10 k^{3/2})`, and `n` the smallest power
/// of two with `8√(ln n / n) ≤ γ` and `n > 4k`.
pub fn nemyud_params(epsilon: f64) -> Result<NemYudParams> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let k = (1.0 / (100.0 * epsilon * epsilon)).round();
    if k < 1.0 {
        return Err(Error::TooFewDirections(epsilon));
    }
    if k > 1e6 {
        return Err(Error::EpsilonOutOfRange(format!(
            "epsilon = {epsilon} needs k = {k} directions"
        )));
    }
    let k = k as usize;
    let gamma = gamma_for(k);
    let n = smallest_dimension(gamma, k)?;
    Ok(NemYudParams { k, gamma, n })
}

pub(crate) fn gamma_for(k: usize) -> f64 {
    1.0 / (10.0 * (k as f64).powf(1.5))
}

/// `8√(ln n / n)`, the half-width of the correlation cones.
pub fn cone_width(n: u64) -> f64 {
    let n = n as f64;
    8.0 * (n.ln() / n).sqrt()
}

fn smallest_dimension(gamma: f64, k: usize) -> Result<u64> {
    let mut n: u64 = 2;
    while cone_width(n) > gamma || n <= 4 * k as u64 {
        if n >= 1 << 62 {
            return Err(Error::EpsilonOutOfRange(format!(
                "no dimension below 2^62 satisfies gamma = {gamma}"
            )));
        }
        n *= 2;
    }
    Ok(n)
}

/// `max_{j<t} along_j + (k-1-j)·γ·norm` and the smallest index attaining it.
///
/// `along` holds the first `t` coordinates; `k` is the full tuple size, so
/// the weights do not change under truncation.
pub fn nemyud_max(along: &[f64], norm: f64, k: usize, gamma: f64) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (j, a) in along.iter().enumerate() {
        let g = a + (k - 1 - j) as f64 * gamma * norm;
        if g > best {
            best = g;
            arg = j;
        }
    }
    (best, arg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NemYudInstance {
    v: OrthonormalTuple,
    gamma: f64,
    n: u64,
    epsilon: Option<f64>,
}

impl NemYudInstance {
    /// An instance over an explicit tuple. `nominal_n` is the dimension the
    /// parameters were derived for; the tuple may live in any ambient
    /// dimension up to it.
    pub fn new(v: OrthonormalTuple, gamma: f64, nominal_n: u64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        if (v.dim() as u64) > nominal_n {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension {} exceeds nominal n = {nominal_n}",
                v.dim()
            )));
        }
        Ok(Self {
            v,
            gamma,
            n: nominal_n,
            epsilon: None,
        })
    }

    /// A random instance for accuracy `ε`, with `V` drawn in
    /// `min(ambient_dim, n)` dimensions (`n` when `ambient_dim` is `None`).
    pub fn from_epsilon<R: Rng + ?Sized>(
        epsilon: f64,
        ambient_dim: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let p = nemyud_params(epsilon)?;
        let d = embedded_dim(p.n, p.k, ambient_dim)?;
        let v = sample_orthonormal_tuple(d, p.k, rng)?;
        let mut inst = Self::new(v, p.gamma, p.n)?;
        inst.epsilon = Some(epsilon);
        Ok(inst)
    }

    pub(crate) fn with_epsilon(mut self, epsilon: Option<f64>) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// The same directions with a different `γ`; `γ = 0` removes the
    /// ordering bias.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut out = Self::new(self.v.clone(), gamma, self.n)?;
        out.epsilon = self.epsilon;
        Ok(out)
    }

    pub fn k(&self) -> usize {
        self.v.k()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nominal_n(&self) -> u64 {
        self.n
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn directions(&self) -> &OrthonormalTuple {
        &self.v
    }

    /// `max_{i≤t} g^{(i)}(x)`.
    pub fn truncated_value(&self, x: &DenseVector, t: usize) -> Result<f64> {
        check_dim(self.v.dim(), x.dim())?;
        check_t(t, self.k())?;
        let along: Vec<f64> = self.v.vectors()[..t]
            .iter()
            .map(|v| crate::linalg::dot(v.as_slice(), x.as_slice()))
            .collect();
        Ok(nemyud_max(&along, x.norm(), self.k(), self.gamma).0)
    }

    /// Value from precomputed coordinates; `t = proj.k()` terms are used.
    pub fn value_from_projection(&self, proj: &Projection) -> f64 {
        nemyud_max(&proj.along, proj.norm(), self.k(), self.gamma).0
    }

    /// `x̃ = -(1/√k) Σ v_i`, whose value is at most `-9ε`.
    pub fn reference_point(&self) -> DenseVector {
        let k = self.k();
        self.v.combine(&vec![-1.0 / (k as f64).sqrt(); k])
    }
}

pub(crate) fn check_t(t: usize, k: usize) -> Result<()> {
    if t == 0 || t > k {
        Err(Error::IndexOutOfRange { index: t, max: k })
    } else {
        Ok(())
    }
}

pub(crate) fn embedded_dim(n: u64, min: usize, requested: Option<usize>) -> Result<usize> {
    let d = match requested {
        Some(d) => (d as u64).min(n) as usize,
        None => usize::try_from(n).map_err(|_| {
            Error::InvalidParameter(format!("nominal n = {n} does not fit in memory"))
        })?,
    };
    if d < min {
        return Err(Error::InvalidParameter(format!(
            "ambient dimension {d} is below the required {min}"
        )));
    }
    Ok(d)
}

impl FirstOrderOracle for NemYudInstance {
    fn dim(&self) -> usize {
        self.v.dim()
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        self.truncated_value(x, self.k())
    }

    /// Subgradient `v_i + (k-i)γ x/‖x‖` of the smallest maximizing index, or
    /// `v_i` itself at the origin.
    fn answer(&self, x: &DenseVector) -> Result<OracleAnswer> {
        let along = self.v.coordinates(x)?;
        let norm = x.norm();
        let (value, i) = nemyud_max(&along, norm, self.k(), self.gamma);
        let mut subgradient = self.v.get(i).clone();
        if norm > 0.0 {
            let w = (self.k() - 1 - i) as f64 * self.gamma / norm;
            subgradient.axpy_in_place(w, x.as_slice());
        }
        Ok(OracleAnswer {
            value,
            subgradient,
            disclosure: Disclosure::Argmax { index: i },
        })
    }

    fn lipschitz_bound(&self) -> f64 {
        1.0 + self.k() as f64 * self.gamma
    }

    fn positively_homogeneous(&self) -> bool {
        true
    }
}
