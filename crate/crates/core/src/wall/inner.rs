//! The inner maximization of the wall function: a linear objective over the
//! sphere of radius `c` intersected with the box `|y_i| ≤ bound·c`.

use crate::error::{Error, Result};

/// Maximizer of `Σ y_i a_i + y_⊥ ρ` over `Σ y_i² + y_⊥² = c²`,
/// `|y_i| ≤ bound·c`, `y_⊥ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerMaxResult {
    /// `y_i`, the coordinates along the hidden directions.
    pub coords: Vec<f64>,
    /// `y_⊥`, the coefficient along the unit residual direction of the query
    /// (or along any direction orthogonal to the hidden span when `ρ = 0`).
    pub perp: f64,
    pub value: f64,
    /// Scaling `λ` with `y_i = sign(a_i)·min(λ|a_i|, bound·c)`, `y_⊥ = λρ`.
    pub multiplier: f64,
    /// Indices where the box constraint is active.
    pub clipped: Vec<usize>,
    /// Set when `ρ = 0` and the clipped point falls short of radius `c`; the
    /// missing norm is placed on `perp`, which does not change the value.
    pub boundary_infeasible: bool,
}

impl InnerMaxResult {
    pub fn norm(&self) -> f64 {
        (crate::linalg::dot(&self.coords, &self.coords) + self.perp * self.perp).sqrt()
    }
}

pub fn inner_max_sphere_box(a: &[f64], rho: f64, c: f64, bound: f64) -> Result<InnerMaxResult> {
    if !(c.is_finite() && c > 0.0 && bound.is_finite() && bound > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius and bound must be positive, got c = {c}, bound = {bound}"
        )));
    }
    if !(rho.is_finite() && rho >= 0.0) || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidVector("non-finite projection data".into()));
    }
    let unit = inner_max_unit(a, rho, bound);
    Ok(InnerMaxResult {
        coords: unit.coords.iter().map(|y| y * c).collect(),
        perp: unit.perp * c,
        value: unit.value * c,
        multiplier: unit.multiplier * c,
        ..unit
    })
}

/// The `c = 1` problem; the general one is its image under `y ↦ c·y`.
fn inner_max_unit(a: &[f64], rho: f64, bound: f64) -> InnerMaxResult {
    let cap = bound;
    // Nonzero coordinates by decreasing magnitude; the clipped set is always a
    // prefix of this order.
    let mut order: Vec<usize> = (0..a.len()).filter(|&i| a[i] != 0.0).collect();
    order.sort_by(|&i, &j| a[j].abs().total_cmp(&a[i].abs()));

    // suffix[m] = Σ_{pos ≥ m} a² + ρ², summed from the small end.
    let mut suffix = vec![rho * rho; order.len() + 1];
    for pos in (0..order.len()).rev() {
        suffix[pos] = suffix[pos + 1] + a[order[pos]] * a[order[pos]];
    }
    let mut solution = None;
    for m in 0..=order.len() {
        let budget = 1.0 - m as f64 * cap * cap;
        let tail = suffix[m];
        if budget <= 0.0 || tail <= 0.0 {
            break;
        }
        let lambda = (budget / tail).sqrt();
        let prev_ok = m == 0 || lambda * a[order[m - 1]].abs() >= cap;
        let next_ok = m == order.len() || lambda * a[order[m]].abs() <= cap;
        if prev_ok && next_ok {
            solution = Some((m, lambda));
            break;
        }
    }

    let (m, lambda, infeasible) = match solution {
        Some((m, lambda)) => (m, lambda, false),
        // Clipping everything stays inside the sphere: ρ = 0 and
        // (#nonzero)·bound² < 1, or the query is zero.
        None => {
            let m = order.len().min((1.0 / (cap * cap)).floor() as usize);
            (m, f64::INFINITY, true)
        }
    };

    let mut coords = vec![0.0; a.len()];
    let mut clipped = Vec::with_capacity(m);
    for (pos, &i) in order.iter().enumerate() {
        let y = if pos < m {
            clipped.push(i);
            cap
        } else if lambda.is_finite() {
            (lambda * a[i].abs()).min(cap)
        } else {
            0.0
        };
        coords[i] = a[i].signum() * y;
    }
    clipped.sort_unstable();

    let along_sq: f64 = crate::linalg::dot(&coords, &coords);
    let perp = if infeasible {
        (1.0 - along_sq).max(0.0).sqrt()
    } else {
        lambda * rho
    };
    let value = crate::linalg::dot(&coords, a) + perp * rho;
    InnerMaxResult {
        coords,
        perp,
        value,
        multiplier: if infeasible { 0.0 } else { lambda },
        clipped,
        boundary_infeasible: infeasible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RngStream;
    use rand::Rng;

    #[test]
    fn unconstrained_direction() {
        let r = inner_max_sphere_box(&[1.0, 0.0], 0.0, 1.0, 1.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert_eq!(r.coords, vec![1.0, 0.0]);
        assert!(!r.boundary_infeasible);
    }

    #[test]
    fn fully_clipped_is_flagged() {
        let r = inner_max_sphere_box(&[1.0, 0.0], 0.0, 1.0, 0.1).unwrap();
        assert!((r.value - 0.1).abs() < 1e-15);
        assert!(r.boundary_infeasible);
        assert_eq!(r.clipped, vec![0]);
        assert!((r.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_query_has_value_zero() {
        let r = inner_max_sphere_box(&[0.0, 0.0, 0.0], 0.0, 0.5, 0.2).unwrap();
        assert_eq!(r.value, 0.0);
        assert!((r.norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scales_linearly_in_radius() {
        let a = [0.3, -0.7, 0.05];
        let one = inner_max_sphere_box(&a, 0.4, 1.0, 0.3).unwrap();
        let half = inner_max_sphere_box(&a, 0.4, 0.5, 0.3).unwrap();
        assert!((half.value - 0.5 * one.value).abs() < 1e-15);
    }

    #[test]
    fn maximizer_is_feasible_and_attains_value() {
        let mut rng = RngStream::from_seed(17).generator();
        for _ in 0..5000 {
            let k = rng.random_range(1..6);
            let a: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rho = if rng.random::<bool>() {
                rng.random_range(0.0..1.0)
            } else {
                0.0
            };
            let c = rng.random_range(0.1..1.0);
            let bound = rng.random_range(0.05..1.0);
            let r = inner_max_sphere_box(&a, rho, c, bound).unwrap();
            assert!((r.norm() - c).abs() < 1e-12 || r.boundary_infeasible);
            assert!(r.perp >= 0.0);
            for y in &r.coords {
                assert!(y.abs() <= bound * c * (1.0 + 1e-12));
            }
            let v = crate::linalg::dot(&r.coords, &a) + r.perp * rho;
            assert!((v - r.value).abs() < 1e-12);
        }
    }

    /// Grid search over the feasible set for k = 2: parameterize `y` by the
    /// two box coordinates and put the rest of the norm on `y_⊥`.
    fn brute_force(a: [f64; 2], rho: f64, bound: f64, steps: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..=steps {
            let y1 = -bound + 2.0 * bound * i as f64 / steps as f64;
            for j in 0..=steps {
                let y2 = -bound + 2.0 * bound * j as f64 / steps as f64;
                let rest = 1.0 - y1 * y1 - y2 * y2;
                if rest < 0.0 {
                    continue;
                }
                best = best.max(y1 * a[0] + y2 * a[1] + rest.sqrt() * rho);
            }
        }
        best
    }

    #[test]
    fn matches_grid_search_for_two_directions() {
        let mut rng = RngStream::from_seed(23).generator();
        for _ in 0..20 {
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let rho = rng.random_range(0.0..1.0);
            let bound = rng.random_range(0.1..1.0);
            let exact = inner_max_sphere_box(&a, rho, 1.0, bound).unwrap().value;
            let grid = brute_force(a, rho, bound, 1000);
            assert!(exact >= grid - 1e-12);
            assert!(exact - grid < 1e-3, "exact {exact} grid {grid}");
        }
    }
}
