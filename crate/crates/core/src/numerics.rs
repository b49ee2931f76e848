//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here is a pure function of its inputs. Matrices are small
//! (Gram matrices of at most a few dozen vectors), so the default path is a
//! full Hermitian eigendecomposition; shifted power iteration takes over for
//! dimensions above [`FULL_DECOMPOSITION_MAX_DIM`].

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Absolute tolerance on `max |M - M^†|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unit-norm tolerance for vectors handed to [`gram`].
pub const UNIT_NORM_TOL: f64 = 1e-10;
pub const FULL_DECOMPOSITION_MAX_DIM: usize = 64;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

/// A square complex matrix that is Hermitian within [`HERMITIAN_TOL`].
///
/// Construction symmetrizes the input as `(M + M^†) / 2`, so downstream
/// routines see an exactly Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(CMatrix);

impl HermMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::validation("empty matrix"));
        }
        ensure_finite(&m)?;
        let dev = hermiticity_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::validation(format!(
                "matrix is not Hermitian: max |M - M^dagger| = {dev:.3e}"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Wraps a matrix known to be Hermitian up to rounding; skips validation.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermMatrix((m + adj).scale(0.5))
    }

    pub fn identity(dim: usize) -> Self {
        HermMatrix(CMatrix::identity(dim, dim))
    }

    /// `|x><x|` for a (not necessarily normalized) vector.
    pub fn projector(x: &CVector) -> Self {
        HermMatrix(x * x.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

impl std::ops::Add for HermMatrix {
    type Output = HermMatrix;

    fn add(self, rhs: HermMatrix) -> HermMatrix {
        HermMatrix(self.0 + rhs.0)
    }
}

pub(crate) fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation("matrix has non-finite entries"))
    }
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `max |U^† U - I|` entrywise.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Full eigendecomposition; eigenvalues ascending with matching columns.
pub fn herm_eigen(m: &HermMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.0.clone().symmetric_eigen();
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Largest eigenvalue and a unit eigenvector.
pub fn herm_max_eig(m: &HermMatrix) -> (f64, CVector) {
    if m.dim() > FULL_DECOMPOSITION_MAX_DIM {
        if let Some(found) = power_iteration(m) {
            return found;
        }
        log::debug!("power iteration stalled at dim {}, falling back", m.dim());
    }
    let (values, vectors) = herm_eigen(m);
    let top = values.len() - 1;
    (values[top], vectors.column(top).into_owned())
}

/// Largest eigenvalue only, for hot loops over matrices already known to be
/// Hermitian (only the lower triangle is read).
pub(crate) fn max_eigenvalue(m: CMatrix) -> f64 {
    m.symmetric_eigenvalues().max()
}

fn power_iteration(m: &HermMatrix) -> Option<(f64, CVector)> {
    let a = &m.0;
    let n = m.dim();
    // Gershgorin: a shift that makes A + sI positive semidefinite.
    let shift = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let shifted = a + CMatrix::identity(n, n).scale(shift);
    // Deterministic non-symmetric start avoids orthogonality to the top mode.
    let mut v = CVector::from_fn(n, |i, _| C64::new(1.0 + i as f64 / n as f64, 0.1 * i as f64));
    v /= C64::new(v.norm(), 0.0);
    let mut lambda = f64::NEG_INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        let w = &shifted * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return None;
        }
        let next = w / C64::new(norm, 0.0);
        let rayleigh = (next.adjoint() * a * &next)[(0, 0)].re;
        let converged = (rayleigh - lambda).abs() <= POWER_TOL;
        lambda = rayleigh;
        v = next;
        if converged {
            let residual = (a * &v - &v * C64::new(lambda, 0.0)).norm();
            if residual <= 1e-8 {
                return Some((lambda, v));
            }
        }
    }
    None
}

/// Largest singular value of an arbitrary complex matrix.
pub fn max_singular_value(m: &CMatrix) -> Result<f64> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.singular_values().max())
}

/// Gram matrix `G_ij = <x_i|x_j>` of unit vectors.
pub fn gram(vectors: &[CVector]) -> Result<HermMatrix> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::validation("gram of an empty vector list"))?;
    let dim = first.len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::validation(format!("gram input not normalized: norm {norm}")));
        }
    }
    let k = vectors.len();
    let g = CMatrix::from_fn(k, k, |i, j| vectors[i].dotc(&vectors[j]));
    Ok(HermMatrix::symmetrized(g))
}

/// `exp(iH)` through the spectral decomposition of `H`.
pub fn herm_expi(h: &HermMatrix) -> CMatrix {
    let (values, vectors) = herm_eigen(h);
    let phases = CVector::from_iterator(values.len(), values.iter().map(|&l| C64::from_polar(1.0, l)));
    let scaled = CMatrix::from_fn(h.dim(), h.dim(), |r, c| vectors[(r, c)] * phases[c]);
    scaled * vectors.adjoint()
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermMatrix::symmetrized(&a + a.adjoint())
    }

    fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> CVector {
        let v = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let norm = v.norm();
        v / c(norm, 0.0)
    }

    #[test]
    fn significant_digit_rounding() {
        assert_eq!(round_sig(0.683_012_701_892_219_3, 12), 0.683_012_701_892);
        assert_eq!(round_sig(-1234.5678901234, 6), -1234.57);
        assert_eq!(round_sig(0.0, 12), 0.0);
        assert_eq!(round_sig(1.0, 12), 1.0);
    }

    #[test]
    fn identity_has_unit_top_eigenvalue() {
        let (l, v) = herm_max_eig(&HermMatrix::identity(4));
        assert!((l - 1.0).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_unit(5, &mut rng);
        let (l, v) = herm_max_eig(&HermMatrix::projector(&x));
        assert!((l - 1.0).abs() < 1e-10);
        assert!((x.dotc(&v).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn overlap_pair_gram() {
        let u = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, 0.3);
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), u, u.conj(), c(1.0, 0.0)]);
        let (l, v) = herm_max_eig(&HermMatrix::new(m.clone()).unwrap());
        assert!((l - (1.0 + std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-10);
        let residual = (&m * &v - &v * c(l, 0.0)).norm();
        assert!(residual < 1e-8);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermMatrix::new(m), Err(Error::Validation(_))));
    }

    #[test]
    fn power_iteration_path_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 80;
        let mut h = random_hermitian(n, &mut rng).into_matrix();
        // Separate the top mode so the iteration converges well inside the budget.
        let x = random_unit(n, &mut rng);
        h += (&x * x.adjoint()).scale(40.0);
        let h = HermMatrix::symmetrized(h);
        let (l, v) = herm_max_eig(&h);
        let (values, _) = herm_eigen(&h);
        assert!((l - values[n - 1]).abs() < 1e-9);
        let residual = (h.as_matrix() * &v - &v * c(l, 0.0)).norm();
        assert!(residual <= 1e-8);
    }

    #[test]
    fn singular_values() {
        assert_eq!(max_singular_value(&CMatrix::zeros(3, 2)).unwrap(), 0.0);
        let s = 1.0 / 3f64.sqrt();
        let w = C64::from_polar(s, 2.0 * std::f64::consts::PI / 3.0);
        let row = CMatrix::from_row_slice(1, 2, &[c(s, 0.0), w]);
        assert!((max_singular_value(&row).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = herm_expi(&random_hermitian(4, &mut rng));
        assert!((max_singular_value(&u).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gram_of_basis_is_identity() {
        let cols: Vec<CVector> = (0..3)
            .map(|k| CVector::from_fn(3, |i, _| if i == k { c(1.0, 0.0) } else { c(0.0, 0.0) }))
            .collect();
        let g = gram(&cols).unwrap();
        assert!((g.as_matrix() - CMatrix::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn gram_rejects_bad_input() {
        let a = CVector::from_element(2, c(1.0, 0.0));
        assert!(gram(&[a]).is_err());
        let e1 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let e2 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(gram(&[e1, e2]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn expi_cases() {
        let zero = HermMatrix::new(CMatrix::zeros(3, 3)).unwrap();
        assert!((herm_expi(&zero) - CMatrix::identity(3, 3)).norm() < 1e-14);

        let mut diag = CMatrix::zeros(3, 3);
        diag[(0, 0)] = c(std::f64::consts::PI, 0.0);
        let u = herm_expi(&HermMatrix::new(diag).unwrap());
        let mut expected = CMatrix::identity(3, 3);
        expected[(0, 0)] = c(-1.0, 0.0);
        assert!((u - expected).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..7 {
            let u = herm_expi(&random_hermitian(n, &mut rng));
            assert!(unitarity_deviation(&u) <= 1e-9);
        }
    }

    #[test]
    fn gram_and_ambient_spectra_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let d = rng.random_range(2..6);
            let k = rng.random_range(1..8);
            let vs: Vec<CVector> = (0..k).map(|_| random_unit(d, &mut rng)).collect();
            let g = gram(&vs).unwrap();
            let ambient = vs.iter().map(HermMatrix::projector).reduce(|a, b| a + b).unwrap();
            let (lg, _) = herm_max_eig(&g);
            let (la, _) = herm_max_eig(&ambient);
            assert!((lg - la).abs() < 1e-9, "{lg} vs {la}");
        }
    }

    #[test]
    fn singular_value_squared_is_top_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..50 {
            let r = rng.random_range(1..5);
            let cc = rng.random_range(1..5);
            let m = CMatrix::from_fn(r, cc, |_, _| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let s = max_singular_value(&m).unwrap();
            let (l, _) = herm_max_eig(&HermMatrix::symmetrized(&m * m.adjoint()));
            assert!((s * s - l).abs() < 1e-9);
        }
    }

    #[test]
    fn adding_projector_is_monotone_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let d = rng.random_range(2..6);
            let m = random_hermitian(d, &mut rng);
            let p = HermMatrix::projector(&random_unit(d, &mut rng));
            let (base, _) = herm_max_eig(&m);
            let (grown, _) = herm_max_eig(&(m + p));
            assert!(base <= grown + 1e-12);
            assert!(grown <= base + 1.0 + 1e-12);
        }
    }
}
