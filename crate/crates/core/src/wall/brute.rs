//! Sampling-based evaluation of the wall function, independent of the
//! sphere/box reduction. Only practical in a handful of dimensions.

use rand::Rng;
use rayon::prelude::*;

use super::WallInstance;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, DenseVector};
use crate::random::RngStream;

/// Points of `Ω` drawn by rejection from the cube `[-1,1]^d`, each stored
/// with its supporting plane `h(y) + <∇h(y), x - y> = a + b<y,x>`.
#[derive(Debug, Clone)]
pub struct OmegaSample {
    dim: usize,
    /// Row-major, `dim` entries per point.
    coords: Vec<f64>,
    offset: Vec<f64>,
    slope: Vec<f64>,
    proposals: u64,
}

const CHUNKS: u64 = 64;

fn in_omega(inst: &WallInstance, y: &[f64]) -> bool {
    let p = inst.params();
    let norm = dot(y, y).sqrt();
    if norm < p.delta || norm > 1.0 {
        return false;
    }
    inst.directions()
        .vectors()
        .iter()
        .all(|v| dot(v.as_slice(), y).abs() < p.beta * norm)
}

impl OmegaSample {
    /// Draws until `count` points of `Ω` are accepted, giving up after
    /// `max_proposals`. Work is split over fixed substreams, so the sample
    /// does not depend on the thread count.
    pub fn draw(inst: &WallInstance, count: usize, max_proposals: u64, seed: RngStream) -> Result<Self> {
        let d = inst.directions().dim();
        let per_chunk = (count as u64).div_ceil(CHUNKS) as usize;
        let budget = max_proposals.div_ceil(CHUNKS);
        let chunks: Vec<(Vec<f64>, u64)> = (0..CHUNKS)
            .into_par_iter()
            .map(|c| {
                let mut rng = seed.substream(c).generator();
                let mut out = Vec::with_capacity(per_chunk * d);
                let mut y = vec![0.0; d];
                let mut proposals = 0u64;
                while out.len() < per_chunk * d && proposals < budget {
                    proposals += 1;
                    for e in y.iter_mut() {
                        *e = rng.random_range(-1.0..=1.0);
                    }
                    if in_omega(inst, &y) {
                        out.extend_from_slice(&y);
                    }
                }
                (out, proposals)
            })
            .collect();
        let proposals = chunks.iter().map(|c| c.1).sum();
        let mut coords: Vec<f64> = chunks.into_iter().flat_map(|c| c.0).collect();
        if coords.len() < count * d {
            return Err(Error::InvalidParameter(format!(
                "only {} of {count} points of Omega accepted after {proposals} proposals",
                coords.len() / d
            )));
        }
        coords.truncate(count * d);
        let a = inst.params().alpha;
        let (offset, slope) = coords
            .chunks(d)
            .map(|y| {
                let c = dot(y, y).sqrt();
                (-2.0 * a * c.powf(1.0 + a), 2.0 * (1.0 + a) * c.powf(a - 1.0))
            })
            .unzip();
        Ok(Self {
            dim: d,
            coords,
            offset,
            slope,
            proposals,
        })
    }

    pub fn len(&self) -> usize {
        self.offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offset.is_empty()
    }

    pub fn point(&self, i: usize) -> DenseVector {
        DenseVector::from_finite(self.coords[i * self.dim..(i + 1) * self.dim].to_vec())
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.len() as f64 / self.proposals as f64
    }

    /// `max_y h(y) + <∇h(y), x-y>` over the sampled points, with the index of
    /// the best point.
    pub fn best(&self, x: &DenseVector) -> Result<(f64, usize)> {
        check_dim(self.dim, x.dim())?;
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        let xs = x.as_slice();
        Ok(self
            .coords
            .par_chunks(self.dim)
            .enumerate()
            .map(|(i, y)| (self.offset[i] + self.slope[i] * dot(y, xs), i))
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            ))
    }

    /// [`best`](Self::best) followed by a shrinking random local search that
    /// stays inside `Ω`. Every candidate is feasible, so the result never
    /// exceeds the true supremum.
    pub fn polished(&self, inst: &WallInstance, x: &DenseVector, seed: RngStream) -> Result<f64> {
        let (mut value, i) = self.best(x)?;
        let mut y = self.point(i);
        let d = self.dim;
        let mut rng = seed.generator();
        let mut step = 0.05;
        // Direction and radius move separately, so that the radius bounds
        // and the cone walls are never both in the way of one step. Near a
        // corner of Ω few moves stay feasible, so a level is repeated for as
        // long as it keeps finding improvements.
        while step > 1e-8 {
            let mut misses = 0;
            while misses < 1000 {
                let r = y.norm();
                let cand = if rng.random::<bool>() {
                    let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
                    let u = y.add_scaled(step, &DenseVector::new(dir)?)?;
                    u.scaled(r / u.norm())
                } else {
                    let r2 = (r + step * rng.random_range(-1.0..=1.0)).clamp(inst.params().delta, 1.0);
                    y.scaled(r2 / r)
                };
                let v = if in_omega(inst, cand.as_slice()) {
                    inst.supporting_plane(&cand, x)?
                } else {
                    f64::NEG_INFINITY
                };
                if v > value {
                    value = v;
                    y = cand;
                    misses = 0;
                } else {
                    misses += 1;
                }
            }
            step *= 0.5;
        }
        Ok(value)
    }
}
