//! Projected subgradient descent on a Euclidean ball, and the rescaling that
//! turns a `G`-Lipschitz problem on `B(0,R)` into a 1-Lipschitz one on the
//! unit ball.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{project_ball, DenseVector};
use crate::oracle::{FirstOrderOracle, OracleAnswer};

/// `⌈1/ε²⌉`, with a relative guard of 1e-9 so that `ε = 0.1` gives 100 even
/// though `0.1²` is not exact in binary.
pub fn iterations_for(epsilon: f64) -> Result<usize> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let raw = 1.0 / (epsilon * epsilon);
    let nearest = raw.round();
    let t = if (raw - nearest).abs() <= 1e-9 * raw {
        nearest
    } else {
        raw.ceil()
    };
    if t > 1e12 {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} needs too many iterations"
        )));
    }
    Ok((t as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub eta: f64,
    pub iterations: usize,
    pub radius: f64,
    /// Keep every iterate in the trace; otherwise only the running sum is
    /// kept and `GdTrace::iterates` stays empty.
    pub store_iterates: bool,
}

impl GdConfig {
    pub fn new(eta: f64, iterations: usize, radius: f64) -> Result<Self> {
        let cfg = Self {
            eta,
            iterations,
            radius,
            store_iterates: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `η = ε`, `T = ⌈1/ε²⌉` on the unit ball.
    pub fn for_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, iterations_for(epsilon)?, 1.0)
    }

    pub fn streaming(mut self) -> Self {
        self.store_iterates = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {}",
                self.eta
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "iteration count must be at least 1".into(),
            ));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdTrace {
    /// `x_0, ..., x_{T-1}`; empty in streaming mode.
    pub iterates: Vec<DenseVector>,
    /// `(1/T) Σ_t x_t`.
    pub averaged_output: DenseVector,
    pub query_count: usize,
    /// `f(x_t)` as reported by the oracle.
    pub values: Vec<f64>,
    /// `‖x_t‖`.
    pub norms: Vec<f64>,
}

impl GdTrace {
    /// CSV with columns `t,value,gap,norm`; `gap` is `f(x_t) - optimum` when
    /// an optimum is supplied and empty otherwise.
    pub fn write_csv<W: Write>(&self, mut out: W, optimum: Option<f64>) -> io::Result<()> {
        writeln!(out, "t,value,gap,norm")?;
        for (t, (v, n)) in self.values.iter().zip(&self.norms).enumerate() {
            match optimum {
                Some(opt) => writeln!(out, "{t},{v},{},{n}", v - opt)?,
                None => writeln!(out, "{t},{v},,{n}")?,
            }
        }
        Ok(())
    }
}

/// Runs `x_{t+1} = P(x_t - η g_t)` from `x_0 = 0` for `T` oracle queries and
/// returns the average of `x_0, ..., x_{T-1}`.
pub fn projected_subgradient_descent<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    config: &GdConfig,
) -> Result<GdTrace> {
    config.validate()?;
    let dim = oracle.dim();
    let t_max = config.iterations;
    let mut x = DenseVector::zeros(dim);
    let mut sum = vec![0.0; dim];
    let mut iterates = Vec::with_capacity(if config.store_iterates { t_max } else { 0 });
    let mut values = Vec::with_capacity(t_max);
    let mut norms = Vec::with_capacity(t_max);

    for t in 0..t_max {
        let OracleAnswer {
            value, subgradient, ..
        } = oracle.answer(&x).map_err(|e| Error::Oracle {
            iteration: t,
            source: Box::new(e),
        })?;
        if subgradient.dim() != dim {
            return Err(Error::Oracle {
                iteration: t,
                source: Box::new(Error::DimensionMismatch {
                    expected: dim,
                    got: subgradient.dim(),
                }),
            });
        }
        values.push(value);
        norms.push(x.norm());
        for (s, xi) in sum.iter_mut().zip(x.iter()) {
            *s += xi;
        }
        let step = x.add_scaled(-config.eta, &subgradient)?;
        let next = project_ball(&step, config.radius)?;
        if config.store_iterates {
            iterates.push(std::mem::replace(&mut x, next));
        } else {
            x = next;
        }
    }

    let inv = 1.0 / t_max as f64;
    Ok(GdTrace {
        iterates,
        averaged_output: DenseVector::from_finite(sum.into_iter().map(|s| s * inv).collect()),
        query_count: t_max,
        values,
        norms,
    })
}

/// The change of variables `f̂(x) = f(Rx)/(GR)` on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescale {
    pub lipschitz: f64,
    pub radius: f64,
    /// Accuracy to ask of the rescaled problem: `ε/(GR)`.
    pub normalized_epsilon: f64,
}

pub fn rescale_problem(lipschitz: f64, radius: f64, epsilon: f64) -> Result<Rescale> {
    for (name, v) in [("G", lipschitz), ("R", radius), ("epsilon", epsilon)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(Rescale {
        lipschitz,
        radius,
        normalized_epsilon: epsilon / (lipschitz * radius),
    })
}

impl Rescale {
    pub fn wrap<O: FirstOrderOracle>(&self, oracle: O) -> Rescaled<O> {
        Rescaled {
            inner: oracle,
            scale: *self,
        }
    }

    /// A point of the rescaled problem mapped back: `x ↦ R·x`.
    pub fn map_back(&self, x: &DenseVector) -> DenseVector {
        x.scaled(self.radius)
    }
}

/// An oracle seen through a [`Rescale`].
#[derive(Debug, Clone)]
pub struct Rescaled<O> {
    inner: O,
    scale: Rescale,
}

impl<O> Rescaled<O> {
    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: FirstOrderOracle> FirstOrderOracle for Rescaled<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        let r = self.scale.radius;
        Ok(self.inner.value(&x.scaled(r))? / (self.scale.lipschitz * r))
    }

    fn answer(&self, x: &DenseVector) -> Result<OracleAnswer> {
        let Rescale {
            lipschitz: g,
            radius: r,
            ..
        } = self.scale;
        let a = self.inner.answer(&x.scaled(r))?;
        Ok(OracleAnswer {
            value: a.value / (g * r),
            subgradient: a.subgradient.scaled(1.0 / g),
            disclosure: a.disclosure,
        })
    }

    fn lipschitz_bound(&self) -> f64 {
        self.inner.lipschitz_bound() / self.scale.lipschitz
    }

    fn positively_homogeneous(&self) -> bool {
        self.inner.positively_homogeneous()
    }
}

/// Solves `min f` over `B(0,R)` to accuracy `ε` by rescaling with the
/// oracle's Lipschitz bound and running descent with `η = ε/(GR)`,
/// `T = ⌈(GR/ε)²⌉`. The returned trace is in rescaled coordinates; the
/// second value is its averaged output mapped back.
pub fn minimize<O: FirstOrderOracle>(
    oracle: O,
    radius: f64,
    epsilon: f64,
    store_iterates: bool,
) -> Result<(GdTrace, DenseVector)> {
    let scale = rescale_problem(oracle.lipschitz_bound(), radius, epsilon)?;
    let wrapped = scale.wrap(oracle);
    let mut config = GdConfig::for_epsilon(scale.normalized_epsilon)?;
    config.store_iterates = store_iterates;
    let trace = projected_subgradient_descent(&wrapped, &config)?;
    let out = scale.map_back(&trace.averaged_output);
    Ok((trace, out))
}
