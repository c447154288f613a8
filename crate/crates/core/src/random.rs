//! Seeded random streams and Haar sampling on the sphere and the Stiefel
//! manifold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, DenseVector};

/// Tolerance on `|<v_i, v_j> - δ_ij|` accepted by [`OrthonormalTuple`].
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Backed by ChaCha8 with its 64-bit stream counter, so distinct stream ids
/// under one seed are independent sequences. Sub-streams let parallel trials
/// draw from their own generator regardless of scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub const fn from_seed(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// A child stream keyed by `index`; children of distinct parents or
    /// distinct indices do not collide in practice.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0x5851_f42d))),
            stream: index,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub(crate) fn gaussian_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// A Haar-distributed unit vector in `R^n`, from a normalized standard
/// Gaussian vector.
pub fn sample_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DenseVector> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    loop {
        let g = gaussian_vec(n, rng);
        let norm = dot(&g, &g).sqrt();
        if norm > 0.0 {
            return Ok(DenseVector::from_finite(
                g.into_iter().map(|x| x / norm).collect(),
            ));
        }
    }
}

/// A uniform point of the closed unit ball in `R^n`.
pub fn sample_in_unit_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DenseVector> {
    let u = sample_unit_vector(n, rng)?;
    let r = rng.random::<f64>().powf(1.0 / n as f64);
    Ok(u.scaled(r))
}

/// `k` orthonormal vectors in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DenseVector>", into = "Vec<DenseVector>")]
pub struct OrthonormalTuple {
    vectors: Vec<DenseVector>,
}

impl OrthonormalTuple {
    /// Validates orthonormality to [`ORTHONORMAL_TOLERANCE`].
    pub fn new(vectors: Vec<DenseVector>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::InvalidParameter(
                "tuple must contain at least one vector".into(),
            ));
        };
        let n = first.dim();
        for v in &vectors {
            check_dim(n, v.dim())?;
        }
        if vectors.len() > n {
            return Err(Error::TupleTooLarge {
                k: vectors.len(),
                n,
            });
        }
        let tuple = Self { vectors };
        let err = tuple.orthonormality_error();
        if err > ORTHONORMAL_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "vectors are not orthonormal (max Gram deviation {err:e})"
            )));
        }
        Ok(tuple)
    }

    /// The first `k` standard basis vectors of `R^n`.
    pub fn standard(n: usize, k: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidParameter("n and k must be positive".into()));
        }
        if k > n {
            return Err(Error::TupleTooLarge { k, n });
        }
        Ok(Self {
            vectors: (0..k).map(|i| DenseVector::basis(n, i)).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn vectors(&self) -> &[DenseVector] {
        &self.vectors
    }

    pub fn get(&self, i: usize) -> &DenseVector {
        &self.vectors[i]
    }

    /// Largest `|<v_i, v_j> - δ_ij|` over all pairs.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a.as_slice(), b.as_slice()) - target).abs());
            }
        }
        worst
    }

    /// `(<v_1,x>, ..., <v_k,x>)`.
    pub fn coordinates(&self, x: &DenseVector) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.dim())?;
        Ok(self
            .vectors
            .iter()
            .map(|v| dot(v.as_slice(), x.as_slice()))
            .collect())
    }

    /// `sum_i coeffs[i] * v_i` over the leading `coeffs.len()` vectors.
    pub fn combine(&self, coeffs: &[f64]) -> DenseVector {
        assert!(coeffs.len() <= self.k());
        let mut out = DenseVector::zeros(self.dim());
        for (c, v) in coeffs.iter().zip(&self.vectors) {
            if *c != 0.0 {
                out.axpy_in_place(*c, v.as_slice());
            }
        }
        out
    }
}

impl TryFrom<Vec<DenseVector>> for OrthonormalTuple {
    type Error = Error;

    fn try_from(vectors: Vec<DenseVector>) -> Result<Self> {
        Self::new(vectors)
    }
}

impl From<OrthonormalTuple> for Vec<DenseVector> {
    fn from(t: OrthonormalTuple) -> Self {
        t.vectors
    }
}

/// Removes the components of `g` along each vector of `basis`, twice
/// (modified Gram–Schmidt with one re-orthogonalization pass).
fn orthogonalize_against(g: &mut [f64], basis: &[DenseVector]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q.as_slice(), g);
            for (gi, qi) in g.iter_mut().zip(q.as_slice()) {
                *gi -= c * qi;
            }
        }
    }
}

/// A Haar-random unit vector in the orthogonal complement of `basis`.
pub fn sample_unit_in_complement<R: Rng + ?Sized>(
    n: usize,
    basis: &[DenseVector],
    rng: &mut R,
) -> Result<DenseVector> {
    if basis.len() >= n {
        return Err(Error::TupleTooLarge {
            k: basis.len() + 1,
            n,
        });
    }
    for b in basis {
        check_dim(n, b.dim())?;
    }
    loop {
        let mut g = gaussian_vec(n, rng);
        let before = dot(&g, &g).sqrt();
        orthogonalize_against(&mut g, basis);
        let norm = dot(&g, &g).sqrt();
        // Resample if nearly all of g lay in span(basis).
        if norm > 1e-6 * before && norm > 0.0 {
            return Ok(DenseVector::from_finite(
                g.into_iter().map(|x| x / norm).collect(),
            ));
        }
    }
}

/// Completes `prefix` to a Haar-random orthonormal `k`-tuple in `R^n`: each
/// new vector is Haar on the complement of its predecessors.
pub fn complete_orthonormal_tuple<R: Rng + ?Sized>(
    prefix: &[DenseVector],
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<OrthonormalTuple> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter("n and k must be positive".into()));
    }
    if k > n {
        return Err(Error::TupleTooLarge { k, n });
    }
    if prefix.len() > k {
        return Err(Error::InvalidParameter(format!(
            "prefix of length {} exceeds k = {k}",
            prefix.len()
        )));
    }
    let mut vectors = prefix.to_vec();
    while vectors.len() < k {
        let v = sample_unit_in_complement(n, &vectors, rng)?;
        vectors.push(v);
    }
    OrthonormalTuple::new(vectors)
}

pub fn sample_orthonormal_tuple<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<OrthonormalTuple> {
    complete_orthonormal_tuple(&[], n, k, rng)
}

/// The leading `j` coordinates of a Haar unit vector in `R^m`, together with
/// the norm of the remaining `m - j` coordinates.
///
/// Exact in distribution without materializing the vector: the tail's squared
/// Gaussian mass is a single χ²(m − j) draw. `m` may be astronomically large.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarPrefix {
    pub coords: Vec<f64>,
    pub tail: f64,
}

pub fn sample_haar_prefix<R: Rng + ?Sized>(m: u64, j: usize, rng: &mut R) -> Result<HaarPrefix> {
    if m == 0 || (j as u64) > m {
        return Err(Error::InvalidParameter(format!(
            "cannot take {j} coordinates of a unit vector in dimension {m}"
        )));
    }
    let tail_df = m - j as u64;
    let chi = if tail_df > 0 {
        Some(ChiSquared::new(tail_df as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?)
    } else {
        None
    };
    loop {
        let g = gaussian_vec(j, rng);
        let tail_sq = chi.as_ref().map_or(0.0, |d| d.sample(rng));
        let total = (dot(&g, &g) + tail_sq).sqrt();
        if total > 0.0 {
            return Ok(HaarPrefix {
                coords: g.into_iter().map(|x| x / total).collect(),
                tail: tail_sq.sqrt() / total,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |s: RngStream| -> Vec<u64> {
            let mut r = s.generator();
            (0..4).map(|_| r.random()).collect()
        };
        let (a, b, c) = (
            draw(RngStream::new(7, 3)),
            draw(RngStream::new(7, 3)),
            draw(RngStream::new(7, 4)),
        );
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(
            RngStream::new(7, 3).substream(0),
            RngStream::new(7, 4).substream(0)
        );
    }

    #[test]
    fn unit_vector_in_one_dimension_is_a_fair_sign() {
        let mut rng = RngStream::from_seed(11).generator();
        let draws = 10_000;
        let mut plus = 0;
        for _ in 0..draws {
            let v = sample_unit_vector(1, &mut rng).unwrap();
            assert!(v[0] == 1.0 || v[0] == -1.0);
            if v[0] > 0.0 {
                plus += 1;
            }
        }
        let freq = plus as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn unit_vector_is_normalized() {
        let mut rng = RngStream::from_seed(5).generator();
        let v = sample_unit_vector(1000, &mut rng).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(sample_unit_vector(0, &mut rng).is_err());
    }

    #[test]
    fn second_moment_of_a_coordinate_is_one_over_n() {
        let n = 1000;
        let draws = 100_000;
        let mut rng = RngStream::from_seed(2024).generator();
        let mean: f64 = (0..draws)
            .map(|_| {
                let v = sample_unit_vector(n, &mut rng).unwrap();
                v[0] * v[0]
            })
            .sum::<f64>()
            / draws as f64;
        let expected = 1.0 / n as f64;
        assert!((mean - expected).abs() <= 0.1 * expected, "mean {mean}");
    }

    #[test]
    fn two_by_two_tuple_is_an_orthonormal_basis() {
        let mut rng = RngStream::from_seed(1).generator();
        let t = sample_orthonormal_tuple(2, 2, &mut rng).unwrap();
        assert!(t.orthonormality_error() <= 1e-10);
    }

    #[test]
    fn seeded_tuples_are_reproducible() {
        let a = sample_orthonormal_tuple(5, 3, &mut RngStream::from_seed(9).generator()).unwrap();
        let b = sample_orthonormal_tuple(5, 3, &mut RngStream::from_seed(9).generator()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_tuple_is_rejected() {
        let mut rng = RngStream::from_seed(1).generator();
        assert_eq!(
            sample_orthonormal_tuple(3, 4, &mut rng),
            Err(Error::TupleTooLarge { k: 4, n: 3 })
        );
    }

    #[test]
    fn many_tuples_stay_orthonormal() {
        let mut rng = RngStream::from_seed(77).generator();
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let t = sample_orthonormal_tuple(100, 10, &mut rng).unwrap();
            for i in 0..10 {
                for j in (i + 1)..10 {
                    worst = worst.max(t.get(i).dot(t.get(j)).unwrap().abs());
                }
            }
        }
        assert!(worst < 1e-9, "worst off-diagonal {worst:e}");
    }

    #[test]
    fn completion_keeps_prefix_and_orthogonality() {
        let mut rng = RngStream::from_seed(3).generator();
        let base = sample_orthonormal_tuple(20, 2, &mut rng).unwrap();
        let full = complete_orthonormal_tuple(base.vectors(), 20, 6, &mut rng).unwrap();
        assert_eq!(&full.vectors()[..2], base.vectors());
        assert!(full.orthonormality_error() <= 1e-10);
    }

    #[test]
    fn haar_prefix_has_unit_total_mass() {
        let mut rng = RngStream::from_seed(8).generator();
        for &(m, j) in &[(1u64, 1usize), (5, 2), (1 << 33, 4)] {
            let p = sample_haar_prefix(m, j, &mut rng).unwrap();
            let mass: f64 = p.coords.iter().map(|c| c * c).sum::<f64>() + p.tail * p.tail;
            assert!((mass - 1.0).abs() < 1e-12);
        }
        assert!(sample_haar_prefix(3, 4, &mut rng).is_err());
    }

    #[test]
    fn tuple_validation_rejects_non_orthogonal_input() {
        let a = DenseVector::new(vec![1.0, 0.0]).unwrap();
        let b = DenseVector::new(vec![1.0, 1.0])
            .unwrap()
            .scaled(1.0 / 2f64.sqrt());
        assert!(OrthonormalTuple::new(vec![a, b]).is_err());
    }
}
