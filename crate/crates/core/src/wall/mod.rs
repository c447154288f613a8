//! The wall family `f_V = max{p_V, W_V}`: linear pieces `<v_i,x> - iγ`
//! capped by the convex extension `W_V` of `h(y) = 2‖y‖^{1+α}` from the
//! cone-free annulus `Ω`.
//!
//! `W_V(x) = max_{y∈Ω} -2α‖y‖^{1+α} + 2(1+α)‖y‖^{α-1}<y,x>`. For a fixed
//! radius `c` the inner maximum is linear in `c`, so the evaluation reduces
//! to one sphere/box problem at `c = 1` and a scalar search over `c ∈ [δ,1]`.

mod brute;
mod inner;
mod params;

pub use brute::OmegaSample;
pub use inner::{inner_max_sphere_box, InnerMaxResult};
pub use params::{delta_ratio, solve_delta, WallParams, DIMENSION_CONSTANT};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::instances::nemyud::{check_t, embedded_dim};
use crate::linalg::{dot, DenseVector};
use crate::oracle::{Disclosure, FirstOrderOracle, OracleAnswer, Projection, WallBranch};
use crate::random::{sample_orthonormal_tuple, OrthonormalTuple};

/// Residuals below this fraction of `‖x‖` are treated as exact zeros, so
/// that the residual direction is never formed from rounding noise.
const RESIDUAL_FLOOR: f64 = 1e-12;

/// Settings of the one-dimensional search over `c = ‖y‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterSearch {
    /// Log-spaced grid points on `[δ, 1]`, endpoints included.
    pub grid_points: usize,
    /// Final bracket width of the golden-section refinement.
    pub tolerance: f64,
}

impl Default for OuterSearch {
    fn default() -> Self {
        Self {
            grid_points: 256,
            tolerance: 1e-9,
        }
    }
}

/// `-2α c^{1+α} + 2(1+α) c^α m`: the best plane value at radius `c` when the
/// unit-radius inner maximum is `m`.
pub fn outer_objective(params: &WallParams, c: f64, m: f64) -> f64 {
    let a = params.alpha;
    -2.0 * a * c.powf(1.0 + a) + 2.0 * (1.0 + a) * c.powf(a) * m
}

impl OuterSearch {
    /// `(c*, value)` maximizing [`outer_objective`] over `c ∈ [δ, 1]`.
    pub fn maximize(&self, params: &WallParams, m: f64) -> (f64, f64) {
        let phi = |c: f64| outer_objective(params, c, m);
        let lo = params.delta;
        let points = self.grid_points.max(2);
        let span = (1.0 / lo).ln();
        let grid = |i: usize| -> f64 {
            if i == 0 {
                lo
            } else if i == points - 1 {
                1.0
            } else {
                lo * (span * i as f64 / (points - 1) as f64).exp()
            }
        };
        let (mut best_i, mut best_v) = (0, phi(lo));
        for i in 1..points {
            let v = phi(grid(i));
            if v > best_v {
                best_i = i;
                best_v = v;
            }
        }
        let mut best_c = grid(best_i);

        let mut a = grid(best_i.saturating_sub(1));
        let mut b = grid((best_i + 1).min(points - 1));
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let (mut f1, mut f2) = (phi(x1), phi(x2));
        while b - a > self.tolerance {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = phi(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = phi(x1);
            }
        }
        for c in [x1, x2, 0.5 * (a + b)] {
            let v = phi(c);
            if v > best_v {
                best_v = v;
                best_c = c;
            }
        }
        (best_c, best_v)
    }
}

/// `W` at a query described by its projection data.
#[derive(Debug, Clone, PartialEq)]
pub struct WallEval {
    pub value: f64,
    /// Norm `c*` of the maximizing `y`.
    pub radius: f64,
    /// Unit-radius inner maximizer; `y* = radius · inner`.
    pub inner: InnerMaxResult,
}

pub fn wall_from_projection(
    params: &WallParams,
    search: &OuterSearch,
    proj: &Projection,
) -> Result<WallEval> {
    let inner = inner_max_sphere_box(&proj.along, proj.residual, 1.0, params.beta)?;
    let (radius, value) = search.maximize(params, inner.value);
    Ok(WallEval {
        value,
        radius,
        inner,
    })
}

/// `max_{j} along_j - (j+1)γ` over the given coordinates, with the smallest
/// maximizing index.
pub fn p_from_projection(params: &WallParams, along: &[f64]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (j, a) in along.iter().enumerate() {
        let v = a - (j + 1) as f64 * params.gamma;
        if v > best {
            best = v;
            arg = j;
        }
    }
    (best, arg)
}

/// `max{p, W}` from projection data; the first `proj.k()` directions are
/// the ones the function knows about.
pub fn fwall_from_projection(
    params: &WallParams,
    search: &OuterSearch,
    proj: &Projection,
) -> Result<f64> {
    let (p, _) = p_from_projection(params, &proj.along);
    let w = wall_from_projection(params, search, proj)?;
    Ok(p.max(w.value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WallInstance {
    params: WallParams,
    v: OrthonormalTuple,
    /// A unit vector orthogonal to every `v_i`, used when a maximizer needs
    /// norm outside the hidden span but the query has none there.
    pad: DenseVector,
    epsilon: Option<f64>,
    search: OuterSearch,
}

impl WallInstance {
    /// The tuple must live in an ambient dimension strictly larger than `k`
    /// and no larger than `params.n`.
    pub fn new(params: WallParams, v: OrthonormalTuple) -> Result<Self> {
        if v.k() != params.k {
            return Err(Error::InvalidParameter(format!(
                "tuple has {} vectors but k = {}",
                v.k(),
                params.k
            )));
        }
        if v.dim() <= v.k() {
            return Err(Error::InvalidParameter(format!(
                "wall instances need ambient dimension above k = {}, got {}",
                v.k(),
                v.dim()
            )));
        }
        if (v.dim() as u64) > params.n {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension {} exceeds nominal n = {}",
                v.dim(),
                params.n
            )));
        }
        let pad = orthogonal_unit(&v);
        Ok(Self {
            params,
            v,
            pad,
            epsilon: None,
            search: OuterSearch::default(),
        })
    }

    pub fn from_epsilon<R: Rng + ?Sized>(
        epsilon: f64,
        ambient_dim: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let params = WallParams::from_epsilon(epsilon)?;
        let mut inst = Self::from_params(params, ambient_dim, rng)?;
        inst.epsilon = Some(epsilon);
        Ok(inst)
    }

    /// A random `V` for the given parameters in `min(ambient_dim, n)`
    /// dimensions.
    pub fn from_params<R: Rng + ?Sized>(
        params: WallParams,
        ambient_dim: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let d = embedded_dim(params.n, params.k + 1, ambient_dim)?;
        let v = sample_orthonormal_tuple(d, params.k, rng)?;
        Self::new(params, v)
    }

    pub(crate) fn with_epsilon(mut self, epsilon: Option<f64>) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// The same instance with the linear-piece step `γ` replaced.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        let mut out = self.clone();
        out.params.gamma = gamma;
        Ok(out)
    }

    pub fn with_search(mut self, search: OuterSearch) -> Self {
        self.search = search;
        self
    }

    pub fn params(&self) -> &WallParams {
        &self.params
    }

    pub fn search(&self) -> &OuterSearch {
        &self.search
    }

    pub fn directions(&self) -> &OrthonormalTuple {
        &self.v
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    fn project(&self, x: &DenseVector) -> Result<Projection> {
        let mut p = Projection::of(&self.v, x)?;
        if p.residual <= RESIDUAL_FLOOR * x.norm() {
            p.residual = 0.0;
        }
        Ok(p)
    }

    pub fn p_value(&self, x: &DenseVector) -> Result<f64> {
        self.p_truncated(x, self.k())
    }

    pub fn p_truncated(&self, x: &DenseVector, t: usize) -> Result<f64> {
        check_dim(self.v.dim(), x.dim())?;
        check_t(t, self.k())?;
        let along: Vec<f64> = self.v.vectors()[..t]
            .iter()
            .map(|v| dot(v.as_slice(), x.as_slice()))
            .collect();
        Ok(p_from_projection(&self.params, &along).0)
    }

    /// Whether `x` lies in the correlation cone of `v_index` (0-based). The
    /// origin belongs to no cone.
    pub fn in_cone(&self, x: &DenseVector, index: usize) -> Result<bool> {
        check_dim(self.v.dim(), x.dim())?;
        if index >= self.k() {
            return Err(Error::IndexOutOfRange {
                index,
                max: self.k() - 1,
            });
        }
        let norm = x.norm();
        if norm == 0.0 {
            return Ok(false);
        }
        Ok(dot(self.v.get(index).as_slice(), x.as_slice()).abs() >= self.params.beta * norm)
    }

    /// `h(y) = 2‖y‖^{1+α}` as a function of `‖y‖`.
    pub fn h(&self, norm: f64) -> f64 {
        2.0 * norm.powf(1.0 + self.params.alpha)
    }

    /// Whether `y` belongs to `Ω`.
    pub fn in_omega(&self, y: &DenseVector) -> Result<bool> {
        let norm = y.norm();
        if norm < self.params.delta || norm > 1.0 {
            return Ok(false);
        }
        for i in 0..self.k() {
            if self.in_cone(y, i)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `h(y) + <∇h(y), x - y>` for `y ≠ 0`.
    pub fn supporting_plane(&self, y: &DenseVector, x: &DenseVector) -> Result<f64> {
        let c = y.norm();
        let a = self.params.alpha;
        Ok(-2.0 * a * c.powf(1.0 + a) + 2.0 * (1.0 + a) * c.powf(a - 1.0) * y.dot(x)?)
    }

    pub fn wall_eval(&self, x: &DenseVector) -> Result<WallEval> {
        check_dim(self.v.dim(), x.dim())?;
        wall_from_projection(&self.params, &self.search, &self.project(x)?)
    }

    pub fn wall_value(&self, x: &DenseVector) -> Result<f64> {
        Ok(self.wall_eval(x)?.value)
    }

    /// `W` computed as if only `v_1, ..., v_t` existed: the coordinates along
    /// the remaining directions count as uncorrelated residual.
    pub fn wall_value_truncated(&self, x: &DenseVector, t: usize) -> Result<f64> {
        check_dim(self.v.dim(), x.dim())?;
        check_t(t, self.k())?;
        let proj = self.project(x)?.truncate(t);
        Ok(wall_from_projection(&self.params, &self.search, &proj)?.value)
    }

    /// The maximizing `y*` of the wall function at `x` as a vector.
    pub fn wall_maximizer(&self, x: &DenseVector) -> Result<DenseVector> {
        let proj = {
            check_dim(self.v.dim(), x.dim())?;
            self.project(x)?
        };
        let eval = wall_from_projection(&self.params, &self.search, &proj)?;
        Ok(self
            .unit_maximizer(x, &proj, &eval.inner)
            .scaled(eval.radius))
    }

    fn unit_maximizer(
        &self,
        x: &DenseVector,
        proj: &Projection,
        inner: &InnerMaxResult,
    ) -> DenseVector {
        let mut y = self.v.combine(&inner.coords);
        if inner.perp != 0.0 {
            if proj.residual > 0.0 {
                // residual direction = (x - Σ a_i v_i) / ρ
                let scale = inner.perp / proj.residual;
                y.axpy_in_place(scale, x.as_slice());
                for (a, v) in proj.along.iter().zip(self.v.vectors()) {
                    y.axpy_in_place(-scale * a, v.as_slice());
                }
            } else {
                y.axpy_in_place(inner.perp, self.pad.as_slice());
            }
        }
        y
    }

    pub fn fwall_truncated(&self, x: &DenseVector, t: usize) -> Result<f64> {
        Ok(self
            .p_truncated(x, t)?
            .max(self.wall_value_truncated(x, t)?))
    }

    /// `x̃ = -(1/√k) Σ v_i`.
    pub fn reference_point(&self) -> DenseVector {
        let k = self.k();
        self.v.combine(&vec![-1.0 / (k as f64).sqrt(); k])
    }
}

fn orthogonal_unit(v: &OrthonormalTuple) -> DenseVector {
    let d = v.dim();
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for i in 0..d {
        let mut g = vec![0.0; d];
        g[i] = 1.0;
        for _ in 0..2 {
            for q in v.vectors() {
                let c = dot(q.as_slice(), &g);
                for (gi, qi) in g.iter_mut().zip(q.as_slice()) {
                    *gi -= c * qi;
                }
            }
        }
        let norm = dot(&g, &g).sqrt();
        if norm > best_norm {
            best_norm = norm;
            best = Some(g);
        }
        // Some basis vector keeps at least √((d-k)/d) of its length.
        if best_norm * best_norm >= 0.5 * (d - v.k()) as f64 / d as f64 {
            break;
        }
    }
    let g = best.expect("ambient dimension exceeds k");
    DenseVector::from_finite(g.into_iter().map(|x| x / best_norm).collect())
}

impl FirstOrderOracle for WallInstance {
    fn dim(&self) -> usize {
        self.v.dim()
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        Ok(self.p_value(x)?.max(self.wall_value(x)?))
    }

    /// `v_i` for the smallest maximizing linear piece when `p ≥ W`, otherwise
    /// `∇h(y*) = 2(1+α)‖y*‖^{α-1} y*`.
    fn answer(&self, x: &DenseVector) -> Result<OracleAnswer> {
        check_dim(self.v.dim(), x.dim())?;
        let proj = self.project(x)?;
        let (p, i) = p_from_projection(&self.params, &proj.along);
        let w = wall_from_projection(&self.params, &self.search, &proj)?;
        if p >= w.value {
            return Ok(OracleAnswer {
                value: p,
                subgradient: self.v.get(i).clone(),
                disclosure: Disclosure::Wall {
                    branch: WallBranch::Linear { index: i },
                },
            });
        }
        let unit = self.unit_maximizer(x, &proj, &w.inner);
        let a = self.params.alpha;
        let scale = 2.0 * (1.0 + a) * w.radius.powf(a) / unit.norm();
        Ok(OracleAnswer {
            value: w.value,
            subgradient: unit.scaled(scale),
            disclosure: Disclosure::Wall {
                branch: WallBranch::Wall,
            },
        })
    }

    fn lipschitz_bound(&self) -> f64 {
        self.params.lipschitz_bound()
    }
}
