//! Parameter derivation for the wall family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::nemyud::cone_width;

/// Scale constant in `n ≥ c·k²·ln k`.
pub const DIMENSION_CONSTANT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallParams {
    pub k: usize,
    /// Nominal dimension.
    pub n: u64,
    /// Inner radius of the annulus `Ω`.
    pub delta: f64,
    /// Exponent with `δ^α = 1/2`.
    pub alpha: f64,
    /// Cone half-width: `y ∈ C_i` iff `|<v_i,y>| ≥ β‖y‖`.
    pub beta: f64,
    /// Offset step of the linear pieces `<v_i,x> - iγ`.
    pub gamma: f64,
}

/// The map `δ ↦ δ / log₂(1/δ)`, strictly increasing from 0 to ∞ on (0, 1).
pub fn delta_ratio(delta: f64) -> f64 {
    delta / (1.0 / delta).log2()
}

/// Solves `δ / log₂(1/δ) = rhs` for `δ ∈ (0, 1)` by bisection.
pub fn solve_delta(rhs: f64) -> Result<f64> {
    if !(rhs.is_finite() && rhs > 0.0) {
        return Err(Error::EpsilonOutOfRange(format!(
            "no delta in (0, 1) solves the wall equation for rhs = {rhs}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if delta_ratio(mid) < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 0.5 * (lo + hi);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::EpsilonOutOfRange(format!(
            "wall equation root for rhs = {rhs} is not inside (0, 1)"
        )));
    }
    Ok(delta)
}

impl WallParams {
    /// Parameters for accuracy `ε`: `k = round(1/(100ε²))`, and `n` the
    /// smallest power of two at least `max(c·k²·ln k, 4k+1)` for which
    /// `kγ ≤ 1/(10√k)`.
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let k = (1.0 / (100.0 * epsilon * epsilon)).round();
        if k < 2.0 {
            return Err(Error::EpsilonOutOfRange(format!(
                "epsilon = {epsilon} gives k = {k}; the wall family needs k ≥ 2"
            )));
        }
        if k > 1e5 {
            return Err(Error::EpsilonOutOfRange(format!(
                "epsilon = {epsilon} needs k = {k} directions"
            )));
        }
        let k = k as usize;
        let kf = k as f64;
        let floor = (DIMENSION_CONSTANT * kf * kf * kf.ln()).max(4.0 * kf + 1.0);
        let mut n = (floor.ceil() as u64).next_power_of_two();
        loop {
            let p = Self::from_cone_width(k, n, cone_width(n))?;
            if kf * p.gamma <= 1.0 / (10.0 * kf.sqrt()) && n > 4 * k as u64 {
                return Ok(p);
            }
            if n >= 1 << 62 {
                return Err(Error::EpsilonOutOfRange(format!(
                    "no dimension below 2^62 satisfies the wall constraints at epsilon = {epsilon}"
                )));
            }
            n *= 2;
        }
    }

    /// Parameters for an explicit cone width `β`, keeping the relations
    /// `δ/log₂(1/δ) = 4β√k + 1/√k` and `γ = δβ`. With `β = 8√(ln n/n)` this
    /// is the construction for `n`; other values give small toy instances.
    pub fn from_cone_width(k: usize, n: u64, beta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cone width must be positive, got {beta}"
            )));
        }
        let kf = k as f64;
        let delta = solve_delta(4.0 * beta * kf.sqrt() + 1.0 / kf.sqrt())?;
        Ok(Self {
            k,
            n,
            delta,
            alpha: std::f64::consts::LN_2 / (1.0 / delta).ln(),
            beta,
            gamma: delta * beta,
        })
    }

    /// Right-hand side of the `δ` equation.
    pub fn delta_rhs(&self) -> f64 {
        let kf = self.k as f64;
        4.0 * self.beta * kf.sqrt() + 1.0 / kf.sqrt()
    }

    /// Bound on every subgradient norm: `2(1+α)` on the wall branch, 1 on the
    /// linear pieces.
    pub fn lipschitz_bound(&self) -> f64 {
        (2.0 * (1.0 + self.alpha)).max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_at_five_hundredths() {
        let p = WallParams::from_epsilon(0.05).unwrap();
        assert_eq!(p.k, 4);
        assert!(p.n.is_power_of_two());
        assert!(p.n > 16);
        let kf = p.k as f64;
        assert!(kf * p.gamma <= 1.0 / (10.0 * kf.sqrt()));
        let nf = p.n as f64;
        let rhs = 32.0 * (kf * nf.ln() / nf).sqrt() + 1.0 / kf.sqrt();
        assert!((delta_ratio(p.delta) - rhs).abs() < 1e-10);
        assert!((p.gamma - 8.0 * p.delta * (nf.ln() / nf).sqrt()).abs() < 1e-15);
        assert!((p.delta.powf(p.alpha) - 0.5).abs() < 1e-12);
        // Halving n would break kγ ≤ 1/(10√k).
        let half = WallParams::from_cone_width(p.k, p.n / 2, cone_width(p.n / 2)).unwrap();
        assert!(kf * half.gamma > 1.0 / (10.0 * kf.sqrt()));
    }

    #[test]
    fn alpha_halves_delta_for_many_epsilons() {
        for &eps in &[0.07, 0.05, 0.03, 0.02, 0.01] {
            let p = WallParams::from_epsilon(eps).unwrap();
            assert!((p.delta.powf(p.alpha) - 0.5).abs() < 1e-12);
            let kf = p.k as f64;
            assert!(kf * p.gamma <= 1.0 / (10.0 * kf.sqrt()));
            assert!(p.n > 4 * p.k as u64);
        }
    }

    #[test]
    fn small_epsilon_reaches_the_three_lipschitz_regime() {
        let p = WallParams::from_epsilon(0.01).unwrap();
        assert_eq!(p.k, 100);
        assert!(p.alpha < 0.5);
        assert!(p.lipschitz_bound() <= 3.0);
    }

    #[test]
    fn large_epsilon_is_rejected() {
        assert!(WallParams::from_epsilon(0.1).is_err());
        assert!(WallParams::from_epsilon(-1.0).is_err());
    }

    #[test]
    fn solve_delta_inverts_the_ratio() {
        for &d in &[1e-6, 0.01, 0.25, 0.5, 0.75, 0.99] {
            let back = solve_delta(delta_ratio(d)).unwrap();
            assert!((back - d).abs() < 1e-12, "{d} -> {back}");
        }
        assert!(solve_delta(0.0).is_err());
    }
}
