//! How often the truncated function `f^{(t)}` (built from `v_1..v_t` only)
//! disagrees with the full `f` at a query that knows `v_1..v_{t-1}`.

use rand::Rng;

use super::{count_events, LemmaEstimate, ARGMAX_ESCAPE, MATERIALIZE_LIMIT, WALL_ARGMAX_ESCAPE};
use crate::error::{Error, Result};
use crate::instances::nemyud::{check_t, nemyud_max, nemyud_params};
use crate::instances::{Family, NemYudInstance};
use crate::linalg::DenseVector;
use crate::oracle::{FirstOrderOracle, Projection};
use crate::random::{
    complete_orthonormal_tuple, sample_haar_prefix, sample_orthonormal_tuple,
    sample_unit_in_complement, sample_unit_vector, RngStream,
};
use crate::wall::{fwall_from_projection, OuterSearch, WallInstance, WallParams};

/// Values closer than this count as equal.
const ESCAPE_TOLERANCE: f64 = 1e-9;

/// Parameters of a hidden-direction family, independent of any particular
/// `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HiddenFamily {
    NemYud { k: usize, gamma: f64, n: u64 },
    Wall(WallParams),
}

impl HiddenFamily {
    pub fn from_epsilon(family: Family, epsilon: f64) -> Result<Self> {
        match family {
            Family::NemYud => {
                let p = nemyud_params(epsilon)?;
                Ok(HiddenFamily::NemYud {
                    k: p.k,
                    gamma: p.gamma,
                    n: p.n,
                })
            }
            Family::Wall => Ok(HiddenFamily::Wall(WallParams::from_epsilon(epsilon)?)),
            Family::MaxCoord => Err(Error::InvalidParameter(
                "maxcoord has no hidden directions".into(),
            )),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            HiddenFamily::NemYud { .. } => Family::NemYud,
            HiddenFamily::Wall(_) => Family::Wall,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            HiddenFamily::NemYud { k, .. } => *k,
            HiddenFamily::Wall(p) => p.k,
        }
    }

    pub fn n(&self) -> u64 {
        match self {
            HiddenFamily::NemYud { n, .. } => *n,
            HiddenFamily::Wall(p) => p.n,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            HiddenFamily::NemYud { gamma, .. } => *gamma,
            HiddenFamily::Wall(p) => p.gamma,
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        match self {
            HiddenFamily::NemYud { k, n, .. } => HiddenFamily::NemYud { k, gamma, n },
            HiddenFamily::Wall(mut p) => {
                p.gamma = gamma;
                HiddenFamily::Wall(p)
            }
        }
    }

    fn escape_id(&self) -> &'static str {
        match self {
            HiddenFamily::NemYud { .. } => ARGMAX_ESCAPE,
            HiddenFamily::Wall(_) => WALL_ARGMAX_ESCAPE,
        }
    }

    /// `f` from projection data; only the listed coordinates count as hidden
    /// directions.
    pub fn value(&self, proj: &Projection) -> Result<f64> {
        match self {
            HiddenFamily::NemYud { k, gamma, .. } => {
                Ok(nemyud_max(&proj.along, proj.norm(), *k, *gamma).0)
            }
            HiddenFamily::Wall(p) => fwall_from_projection(p, &OuterSearch::default(), proj),
        }
    }

    /// An instance over an explicit tuple.
    fn materialize(
        &self,
        v: crate::random::OrthonormalTuple,
    ) -> Result<Box<dyn FirstOrderOracleTruncated>> {
        Ok(match self {
            HiddenFamily::NemYud { gamma, n, .. } => Box::new(NemYudInstance::new(v, *gamma, *n)?),
            HiddenFamily::Wall(p) => Box::new(WallInstance::new(*p, v)?),
        })
    }
}

trait FirstOrderOracleTruncated: FirstOrderOracle {
    fn truncated(&self, x: &DenseVector, t: usize) -> Result<f64>;
}

impl FirstOrderOracleTruncated for NemYudInstance {
    fn truncated(&self, x: &DenseVector, t: usize) -> Result<f64> {
        self.truncated_value(x, t)
    }
}

impl FirstOrderOracleTruncated for WallInstance {
    fn truncated(&self, x: &DenseVector, t: usize) -> Result<f64> {
        self.fwall_truncated(x, t)
    }
}

/// Norm of the fixed query: 1 for the homogeneous family; for the wall
/// family `αδ/(4(1+α))`, short enough that the linear pieces are not masked
/// by `W`.
pub fn escape_query_norm(family: &HiddenFamily) -> f64 {
    match family {
        HiddenFamily::NemYud { .. } => 1.0,
        HiddenFamily::Wall(p) => p.alpha * p.delta / (4.0 * (1.0 + p.alpha)),
    }
}

/// Unit direction of the fixed query: `t - 1` weights on the known
/// directions followed by the weight on one fresh direction.
fn fixed_direction<R: Rng + ?Sized>(t: usize, rng: &mut R) -> Result<Vec<f64>> {
    Ok(sample_unit_vector(t, rng)?.into_vec())
}

/// Escape frequency using exact reduced coordinates: the coordinates of the
/// fresh query direction along `v_t..v_k` are the leading coordinates of a
/// Haar vector in dimension `n - t + 1`.
pub fn escape_reduced(
    family: &HiddenFamily,
    t: usize,
    trials: u64,
    seed: u64,
) -> Result<LemmaEstimate> {
    let dir = fixed_direction(t, &mut RngStream::new(seed, 1).generator())?;
    escape_with_direction(family, t, &dir, trials, seed, "reduced")
}

/// Detector check: `γ = 0` and a query along the fresh direction only. The
/// coordinates along `v_t..v_k` are then exchangeable, so escapes happen at
/// the rate [`stress_escape_rate`].
pub fn escape_stress(
    family: &HiddenFamily,
    t: usize,
    trials: u64,
    seed: u64,
) -> Result<LemmaEstimate> {
    check_t(t, family.k())?;
    let mut dir = vec![0.0; t];
    dir[t - 1] = 1.0;
    escape_with_direction(&family.with_gamma(0.0), t, &dir, trials, seed, "stress")
}

/// Escape probability of [`escape_stress`]. With `m = k - t + 1`
/// exchangeable symmetric coordinates the maximum avoids `v_t` with
/// probability `(m-1)/m`; for `t > 1` it must also beat the zero
/// coordinates on `v_1..v_{t-1}`, which fails only when all `m` are
/// negative, independently of where the maximum sits.
pub fn stress_escape_rate(k: usize, t: usize) -> f64 {
    let m = (k - t + 1) as f64;
    let not_first = (m - 1.0) / m;
    if t == 1 {
        not_first
    } else {
        not_first * (1.0 - 0.5f64.powf(m))
    }
}

fn escape_with_direction(
    family: &HiddenFamily,
    t: usize,
    dir: &[f64],
    trials: u64,
    seed: u64,
    mode: &str,
) -> Result<LemmaEstimate> {
    let k = family.k();
    check_t(t, k)?;
    let n = family.n();
    let r = escape_query_norm(family);
    let (known, fresh) = dir.split_at(t - 1);
    let known: Vec<f64> = known.iter().map(|b| r * b).collect();
    let fresh = r * fresh[0];

    let hits = count_events(RngStream::new(seed, 2), trials, |rng| {
        let pre = sample_haar_prefix(n - (t as u64 - 1), k - t + 1, rng)?;
        let mut along = known.clone();
        along.extend(pre.coords.iter().map(|c| fresh * c));
        let proj = Projection::new(along, fresh.abs() * pre.tail);
        let full = family.value(&proj)?;
        let cut = family.value(&proj.truncate(t))?;
        Ok((full - cut).abs() > ESCAPE_TOLERANCE)
    })?;
    Ok(escape_estimate(family, t, hits, trials, seed, mode))
}

/// The same experiment with `V` materialized in `R^n` and the instance
/// oracles evaluated directly; `n` must be small.
pub fn escape_materialized(
    family: &HiddenFamily,
    t: usize,
    trials: u64,
    seed: u64,
) -> Result<LemmaEstimate> {
    let k = family.k();
    check_t(t, k)?;
    let n = family.n();
    if n > MATERIALIZE_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "n = {n} is too large to materialize"
        )));
    }
    let n = n as usize;
    let r = escape_query_norm(family);
    let mut fixed_rng = RngStream::new(seed, 1).generator();
    let dir = fixed_direction(t, &mut fixed_rng)?;
    let prefix = if t > 1 {
        sample_orthonormal_tuple(n, t - 1, &mut fixed_rng)?
            .vectors()
            .to_vec()
    } else {
        Vec::new()
    };
    let u = sample_unit_in_complement(n, &prefix, &mut fixed_rng)?;
    let mut x = u.scaled(r * dir[t - 1]);
    for (b, v) in dir.iter().zip(&prefix) {
        x = x.add_scaled(r * b, v)?;
    }

    let hits = count_events(RngStream::new(seed, 2), trials, |rng| {
        let v = complete_orthonormal_tuple(&prefix, n, k, rng)?;
        let inst = family.materialize(v)?;
        let full = inst.value(&x)?;
        let cut = inst.truncated(&x, t)?;
        Ok((full - cut).abs() > ESCAPE_TOLERANCE)
    })?;
    Ok(escape_estimate(
        family,
        t,
        hits,
        trials,
        seed,
        "materialized",
    ))
}

fn escape_estimate(
    family: &HiddenFamily,
    t: usize,
    hits: u64,
    trials: u64,
    seed: u64,
    mode: &str,
) -> LemmaEstimate {
    let n = family.n();
    LemmaEstimate::new(
        family.escape_id(),
        format!(
            "{} k = {} n = {n} gamma = {} t = {t} ({mode})",
            family.family(),
            family.k(),
            family.gamma()
        ),
        hits,
        trials,
        (n as f64).powi(-7),
        seed,
    )
}

/// Escape frequency at the parameters for `ε`. With `stress` set this is
/// [`escape_stress`] instead, where escapes are common.
pub fn estimate_argmax_escape(
    family: Family,
    epsilon: f64,
    t: usize,
    trials: u64,
    seed: u64,
    stress: bool,
) -> Result<LemmaEstimate> {
    let hidden = HiddenFamily::from_epsilon(family, epsilon)?;
    if stress {
        escape_stress(&hidden, t, trials, seed)
    } else {
        escape_reduced(&hidden, t, trials, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_truncation_never_escapes() {
        for family in [Family::NemYud, Family::Wall] {
            let h = HiddenFamily::from_epsilon(family, 0.05).unwrap();
            let e = escape_reduced(&h.with_gamma(0.0), h.k(), 500, 3).unwrap();
            assert_eq!(e.successes, 0);
        }
    }

    #[test]
    fn stress_rate_matches_exchangeability() {
        for family in [Family::NemYud, Family::Wall] {
            let h = HiddenFamily::from_epsilon(family, 0.05).unwrap();
            for t in 1..h.k() {
                let e = escape_stress(&h, t, 4000, 9).unwrap();
                let p = stress_escape_rate(h.k(), t);
                let sd = (p * (1.0 - p) / 4000.0).sqrt();
                assert!(
                    (e.empirical_probability - p).abs() < 5.0 * sd,
                    "{family} t = {t}: {e:?} vs {p}"
                );
            }
            assert_eq!(escape_stress(&h, h.k(), 100, 9).unwrap().successes, 0);
        }
        assert_eq!(stress_escape_rate(4, 1), 0.75);
        assert_eq!(stress_escape_rate(4, 2), 2.0 / 3.0 * 0.875);
    }

    #[test]
    fn stress_mode_detects_escapes() {
        for family in [Family::NemYud, Family::Wall] {
            let e = estimate_argmax_escape(family, 0.05, 1, 2000, 5, true).unwrap();
            // With γ = 0 the largest of k exchangeable coordinates is the
            // first one with probability 1/k.
            assert!(
                (e.empirical_probability - 0.75).abs() < 0.05,
                "{family}: {e:?}"
            );
        }
    }

    #[test]
    fn reduced_and_materialized_rates_agree() {
        let cases = [
            HiddenFamily::NemYud {
                k: 4,
                gamma: 0.02,
                n: 64,
            },
            HiddenFamily::Wall(WallParams::from_cone_width(4, 64, 0.05).unwrap()).with_gamma(0.01),
        ];
        for h in cases {
            for t in [1, 2] {
                let a = escape_reduced(&h, t, 4000, 11)
                    .unwrap()
                    .empirical_probability;
                let b = escape_materialized(&h, t, 4000, 11)
                    .unwrap()
                    .empirical_probability;
                assert!(a > 0.02, "{h:?} t = {t}: rate {a} too small to compare");
                let sd = (a * (1.0 - a) / 4000.0).sqrt();
                assert!(
                    (a - b).abs() < 5.0 * sd * 2f64.sqrt(),
                    "{h:?} t = {t}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn t_out_of_range_is_an_error() {
        let h = HiddenFamily::from_epsilon(Family::NemYud, 0.05).unwrap();
        assert!(escape_reduced(&h, 0, 10, 1).is_err());
        assert!(escape_reduced(&h, 5, 10, 1).is_err());
        assert!(HiddenFamily::from_epsilon(Family::MaxCoord, 0.05).is_err());
    }
}
