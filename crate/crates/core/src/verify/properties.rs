//! Sampled checks of convexity, the subgradient inequality, Lipschitz
//! bounds, homogeneity and determinism for any oracle.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::DenseVector;
use crate::oracle::FirstOrderOracle;
use crate::random::{sample_in_unit_ball, sample_unit_vector, OrthonormalTuple, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyConfig {
    pub trials: usize,
    /// Additive slack on inequalities.
    pub tolerance: f64,
    /// Norm every subgradient must respect; the oracle's own bound when
    /// `None`.
    pub lipschitz: Option<f64>,
    pub seed: u64,
}

impl PropertyConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            tolerance: 1e-9,
            lipschitz: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed excess over the allowed side of the inequality
    /// (negative when every sample has room to spare).
    pub worst: f64,
}

impl PropertyCheck {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            samples: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, excess: f64, tolerance: f64) {
        self.samples += 1;
        self.worst = self.worst.max(excess);
        if excess > tolerance || excess.is_nan() {
            self.violations += 1;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.samples += other.samples;
        self.violations += other.violations;
        self.worst = self.worst.max(other.worst);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
    pub lipschitz_bound: f64,
    pub max_subgradient_norm: f64,
}

impl PropertyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const SUBGRADIENT_INEQUALITY: &str = "subgradient-inequality";
pub const MIDPOINT_CONVEXITY: &str = "midpoint-convexity";
pub const LIPSCHITZ: &str = "lipschitz";
pub const HOMOGENEITY_VALUE: &str = "homogeneity-value";
pub const HOMOGENEITY_SUBGRADIENT: &str = "homogeneity-subgradient";
pub const DETERMINISM: &str = "determinism";

const HOMOGENEITY_SCALES: [f64; 3] = [0.5, 2.0, 10.0];

/// Uniform points of the unit ball.
pub fn ball_sampler(dim: usize) -> impl Fn(&mut ChaCha8Rng) -> DenseVector + Sync {
    move |rng| sample_in_unit_ball(dim, rng).expect("positive dimension")
}

/// Points of the unit ball with a uniform radius whose direction leans on
/// the span of `v` half of the time, so both the hidden directions and their
/// complement are exercised.
pub fn span_biased_sampler(
    v: &OrthonormalTuple,
) -> impl Fn(&mut ChaCha8Rng) -> DenseVector + Sync + '_ {
    move |rng| {
        let d = v.dim();
        let mut dir = sample_unit_vector(d, rng).expect("positive dimension");
        if rng.random::<bool>() {
            let coeffs: Vec<f64> = (0..v.k()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let weight = rng.random_range(0.0..4.0);
            dir = dir
                .add_scaled(weight, &v.combine(&coeffs))
                .expect("dimensions agree");
        }
        let n = dir.norm();
        let r: f64 = rng.random();
        if n > 0.0 {
            dir.scaled(r / n)
        } else {
            dir
        }
    }
}

struct Tally {
    subgrad: PropertyCheck,
    midpoint: PropertyCheck,
    lipschitz: PropertyCheck,
    hom_value: PropertyCheck,
    hom_grad: PropertyCheck,
    determinism: PropertyCheck,
    max_norm: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            subgrad: PropertyCheck::new(SUBGRADIENT_INEQUALITY),
            midpoint: PropertyCheck::new(MIDPOINT_CONVEXITY),
            lipschitz: PropertyCheck::new(LIPSCHITZ),
            hom_value: PropertyCheck::new(HOMOGENEITY_VALUE),
            hom_grad: PropertyCheck::new(HOMOGENEITY_SUBGRADIENT),
            determinism: PropertyCheck::new(DETERMINISM),
            max_norm: 0.0,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            subgrad: self.subgrad.merge(o.subgrad),
            midpoint: self.midpoint.merge(o.midpoint),
            lipschitz: self.lipschitz.merge(o.lipschitz),
            hom_value: self.hom_value.merge(o.hom_value),
            hom_grad: self.hom_grad.merge(o.hom_grad),
            determinism: self.determinism.merge(o.determinism),
            max_norm: self.max_norm.max(o.max_norm),
        }
    }
}

/// Draws `trials` pairs `(x, y)` from `sampler` and checks
/// `f(y) ≥ f(x) + <g_x, y-x>`, `f((x+y)/2) ≤ (f(x)+f(y))/2`, `‖g_x‖ ≤ L`,
/// that repeated queries give identical answers, and, for positively
/// homogeneous oracles, `f(αx) = αf(x)` and `g_{αx} = g_x`.
pub fn property_suite<O, S>(
    oracle: &O,
    config: &PropertyConfig,
    sampler: S,
) -> Result<PropertyReport>
where
    O: FirstOrderOracle + Sync + ?Sized,
    S: Fn(&mut ChaCha8Rng) -> DenseVector + Sync,
{
    let tol = config.tolerance;
    let bound = config.lipschitz.unwrap_or_else(|| oracle.lipschitz_bound());
    let homogeneous = oracle.positively_homogeneous();
    let root = RngStream::new(config.seed, 0);

    let tally = (0..config.trials)
        .into_par_iter()
        .map(|i| -> Result<Tally> {
            let mut rng = root.substream(i as u64).generator();
            let x = sampler(&mut rng);
            let y = sampler(&mut rng);
            let mut t = Tally::new();

            let a = oracle.answer(&x)?;
            let fy = oracle.value(&y)?;
            let linear = a.value + a.subgradient.dot(&y.sub(&x)?)?;
            t.subgrad.record(linear - fy, tol);

            let mid = x.add_scaled(1.0, &y)?.scaled(0.5);
            t.midpoint
                .record(oracle.value(&mid)? - 0.5 * (a.value + fy), tol);

            let norm = a.subgradient.norm();
            t.max_norm = norm;
            t.lipschitz.record(norm - bound, tol);

            let again = oracle.answer(&x)?;
            let same = again == a && oracle.value(&x)?.to_bits() == a.value.to_bits();
            t.determinism.record(if same { 0.0 } else { 1.0 }, 0.0);

            if homogeneous {
                for s in HOMOGENEITY_SCALES {
                    let xs = x.scaled(s);
                    let b = oracle.answer(&xs)?;
                    t.hom_value
                        .record((b.value - s * a.value).abs() - tol * s, 0.0);
                    let diff = b
                        .subgradient
                        .iter()
                        .zip(a.subgradient.iter())
                        .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                    t.hom_grad.record(diff, tol);
                }
            }
            Ok(t)
        })
        .try_reduce(Tally::new, |a, b| Ok(a.merge(b)))?;

    let mut checks = vec![
        tally.subgrad,
        tally.midpoint,
        tally.lipschitz,
        tally.determinism,
    ];
    if homogeneous {
        checks.push(tally.hom_value);
        checks.push(tally.hom_grad);
    }
    Ok(PropertyReport {
        checks,
        lipschitz_bound: bound,
        max_subgradient_norm: tally.max_norm,
    })
}
