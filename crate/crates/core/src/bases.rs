//! Measurement bases: construction, validation and the JSON file format.
//!
//! A [`Basis`] stores its vectors as the columns of a unitary matrix. A
//! [`BasisSet`] is an ordered list of bases sharing one dimension; its
//! vectors are enumerated basis-major (`mu * d + i`) everywhere in the crate.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{prime_power, GaloisField};
use crate::numerics::{herm_eigen, CMatrix, CVector, HermMatrix, C64};

/// Orthonormality tolerance on `|<b_i|b_j> - delta_ij|`.
pub const ORTHONORMAL_TOL: f64 = 1e-8;
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    columns: CMatrix,
}

impl Basis {
    /// Wraps a matrix whose columns are the basis vectors.
    pub fn from_columns(columns: CMatrix) -> Result<Self> {
        if columns.nrows() != columns.ncols() {
            return Err(Error::DimensionMismatch {
                expected: columns.nrows(),
                found: columns.ncols(),
            });
        }
        crate::numerics::ensure_finite(&columns)?;
        let deviation = crate::numerics::unitarity_deviation(&columns);
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { basis: 0, deviation });
        }
        Ok(Basis { columns })
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.columns
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.columns.column(i).into_owned()
    }

    pub fn vectors(&self) -> impl Iterator<Item = CVector> + '_ {
        (0..self.dim()).map(|i| self.vector(i))
    }

    /// Entrywise complex conjugate of every vector.
    pub fn conjugate(&self) -> Basis {
        Basis {
            columns: self.columns.map(|z| z.conj()),
        }
    }

    /// The basis `U |b_i>`.
    pub fn rotated(&self, u: &CMatrix) -> Result<Basis> {
        Basis::from_columns(u * &self.columns)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    bases: Vec<Basis>,
}

impl BasisSet {
    pub fn new(bases: Vec<Basis>) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| Error::validation("a basis set needs at least one basis"))?;
        let d = first.dim();
        for b in &bases {
            if b.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: b.dim(),
                });
            }
        }
        Ok(BasisSet { bases })
    }

    pub fn dim(&self) -> usize {
        self.bases[0].dim()
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn basis(&self, mu: usize) -> &Basis {
        &self.bases[mu]
    }

    /// All vectors, basis-major.
    pub fn vectors(&self) -> Vec<CVector> {
        self.bases.iter().flat_map(|b| b.vectors()).collect()
    }

    pub fn conjugate(&self) -> BasisSet {
        BasisSet {
            bases: self.bases.iter().map(Basis::conjugate).collect(),
        }
    }

    /// First `n` bases.
    pub fn truncated(&self, n: usize) -> Result<BasisSet> {
        if n == 0 || n > self.len() {
            return Err(Error::out_of_range("n", n, 1, self.len()));
        }
        BasisSet::new(self.bases[..n].to_vec())
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::out_of_range("d", d, 2, usize::MAX))
    } else {
        Ok(())
    }
}

pub fn standard_basis(d: usize) -> Result<Basis> {
    check_dim(d)?;
    Ok(Basis {
        columns: CMatrix::identity(d, d),
    })
}

/// Columns `u_jk = omega^(jk) / sqrt(d)` with `omega = exp(2 pi i / d)`.
pub fn fourier_basis(d: usize) -> Result<Basis> {
    check_dim(d)?;
    let norm = 1.0 / (d as f64).sqrt();
    let columns = CMatrix::from_fn(d, d, |j, k| {
        C64::from_polar(norm, 2.0 * PI * ((j * k) % d) as f64 / d as f64)
    });
    Ok(Basis { columns })
}

/// Largest number of mutually unbiased bases this crate can build in dimension `d`.
pub fn max_mub_count(d: usize) -> Option<usize> {
    if d == 6 {
        return Some(3);
    }
    match prime_power(d) {
        Some(_) if d <= crate::field::MAX_ORDER => Some(d + 1),
        _ => None,
    }
}

/// The first `n` bases of a mutually unbiased family in dimension `d`.
///
/// Prime powers get the complete `d + 1` family: the standard basis first,
/// then one basis per field element `s`. For odd characteristic the vectors
/// are `omega_p^Tr(s j^2 + k j)`; for characteristic two each basis is the
/// joint eigenbasis of a maximal commuting class of displacement operators.
/// In `d = 6` a triple (standard, Fourier, and a product basis) is provided.
pub fn mub_set(d: usize, n: usize) -> Result<BasisSet> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::out_of_range("n", n, 1, usize::MAX));
    }
    let limit = max_mub_count(d).ok_or_else(|| {
        Error::Capability(format!(
            "no MUB construction for composite dimension {d} (supported: prime powers and 6)"
        ))
    })?;
    if n > limit {
        let msg = if d == 6 {
            format!("d = 6: no known construction beyond 3 MUBs (requested {n})")
        } else {
            format!("at most {limit} MUBs exist in dimension {d} (requested {n})")
        };
        return Err(Error::Capability(msg));
    }
    let all = if d == 6 {
        mub_triple_six()?
    } else {
        prime_power_mubs(d, n)?
    };
    BasisSet::new(all.into_iter().take(n).collect())
}

fn prime_power_mubs(d: usize, n: usize) -> Result<Vec<Basis>> {
    let field = GaloisField::new(d)?;
    let p = field.characteristic();
    let norm = 1.0 / (d as f64).sqrt();
    let chi = |t: usize| C64::from_polar(norm, 2.0 * PI * t as f64 / p as f64);
    let mut out = vec![standard_basis(d)?];
    for s in 0..d {
        if out.len() == n {
            break;
        }
        let basis = if p != 2 || s == 0 {
            let columns = CMatrix::from_fn(d, d, |j, k| {
                let jj = field.mul(j, j);
                let arg = field.add(field.mul(s, jj), field.mul(k, j));
                chi(field.trace(arg))
            });
            Basis::from_columns(columns)?
        } else {
            stabilizer_basis(&field, s)?
        };
        out.push(basis);
    }
    Ok(out)
}

/// Joint eigenbasis of `{ X(a) Z(s a) }` over GF(2^m).
fn stabilizer_basis(field: &GaloisField, s: usize) -> Result<Basis> {
    let q = field.order();
    let mut h = CMatrix::zeros(q, q);
    for k in 0..field.degree() {
        let a = field.monomial(k);
        let b = field.mul(s, a);
        // W |j> = (-1)^Tr(b j) |j + a>; W^2 = (-1)^Tr(ab), so i W is Hermitian when Tr(ab) = 1.
        let phase = if field.trace(field.mul(a, b)) == 1 {
            C64::new(0.0, 1.0)
        } else {
            C64::new(1.0, 0.0)
        };
        let weight = (1u64 << k) as f64;
        for j in 0..q {
            let sign = if field.trace(field.mul(b, j)) == 1 { -1.0 } else { 1.0 };
            h[(field.add(j, a), j)] += phase * sign * weight;
        }
    }
    // Joint eigenvalues sum_k 2^k (+-1) are distinct and spaced by at least 2.
    let (_, vectors) = herm_eigen(&HermMatrix::new(h)?);
    Basis::from_columns(phase_fixed(vectors))
}

/// Rotates each column so its first non-negligible entry is real and positive.
fn phase_fixed(mut m: CMatrix) -> CMatrix {
    for mut col in m.column_iter_mut() {
        if let Some(z) = col.iter().find(|z| z.norm() > 1e-6).copied() {
            let phase = z.conj() / z.norm();
            col *= phase;
        }
    }
    m
}

/// Standard, Fourier, and a third basis in dimension 6, built from qubit and
/// qutrit MUBs through the Chinese-remainder identification `j <-> (j mod 2, j mod 3)`.
fn mub_triple_six() -> Result<Vec<Basis>> {
    let s = FRAC_1_SQRT_2;
    let y2 = CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(s, 0.0), C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, -s)],
    );
    let qutrit = prime_power_mubs(3, 3)?;
    let t3 = qutrit[2].matrix();
    let product = y2.kronecker(t3);
    // Row j of the 6-dim vector is tensor index (j mod 2) * 3 + (j mod 3).
    let third = CMatrix::from_fn(6, 6, |j, k| product[((j % 2) * 3 + (j % 3), k)]);
    Ok(vec![standard_basis(6)?, fourier_basis(6)?, Basis::from_columns(third)?])
}

/// Transition matrix `U_ij = <a_i|b_j>`.
pub fn overlap_matrix(b1: &Basis, b2: &Basis) -> Result<CMatrix> {
    if b1.dim() != b2.dim() {
        return Err(Error::DimensionMismatch {
            expected: b1.dim(),
            found: b2.dim(),
        });
    }
    Ok(b1.columns.adjoint() * &b2.columns)
}

/// `max_{mu != nu, i, j} |<a_i^mu|a_j^nu>|`.
pub fn max_overlap(bs: &BasisSet) -> Result<f64> {
    if bs.len() < 2 {
        return Err(Error::out_of_range("N", bs.len(), 2, usize::MAX));
    }
    let mut best: f64 = 0.0;
    for (mu, a) in bs.bases().iter().enumerate() {
        for b in &bs.bases()[mu + 1..] {
            let u = overlap_matrix(a, b)?;
            best = best.max(u.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    Ok(best.min(1.0))
}

/// True when every cross-basis overlap equals `1/sqrt(d)` within `tol`.
pub fn is_mub(bs: &BasisSet, tol: f64) -> bool {
    let target = 1.0 / (bs.dim() as f64).sqrt();
    bs.bases().iter().enumerate().all(|(mu, a)| {
        bs.bases()[mu + 1..].iter().all(|b| {
            overlap_matrix(a, b)
                .map(|u| u.iter().all(|z| (z.norm() - target).abs() <= tol))
                .unwrap_or(false)
        })
    })
}

/// Haar-random unitary columns, deterministic in `seed`.
pub fn random_unitary(d: usize, seed: u64) -> Result<Basis> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_with(d, &mut rng)
}

/// Haar sampling: complex Gaussian matrix, QR, then the phases of `R`'s
/// diagonal moved into `Q`.
pub fn random_unitary_with<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Basis> {
    check_dim(d)?;
    let scale = FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        let rkk = r[(k, k)];
        let norm = rkk.norm();
        if norm > 0.0 {
            col *= rkk / norm;
        }
    }
    Basis::from_columns(q)
}

#[derive(Serialize, Deserialize)]
struct BasisSetFile {
    format_version: u32,
    d: usize,
    /// One entry per basis: `d^2` `[re, im]` pairs in column-major order.
    bases: Vec<Vec<[f64; 2]>>,
}

pub fn basis_set_to_json(bs: &BasisSet) -> String {
    let d = bs.dim();
    let file = BasisSetFile {
        format_version: FORMAT_VERSION,
        d,
        bases: bs
            .bases()
            .iter()
            .map(|b| {
                // nalgebra storage is column-major already.
                b.matrix().iter().map(|z| [z.re, z.im]).collect()
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("basis sets always serialize")
}

pub fn basis_set_from_json(text: &str, origin: &Path) -> Result<BasisSet> {
    let parse_err = |reason: String| Error::Parse {
        path: origin.to_path_buf(),
        reason,
    };
    let file: BasisSetFile = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(parse_err(format!("unsupported format_version {}", file.format_version)));
    }
    if file.d < 1 {
        return Err(parse_err("d must be positive".into()));
    }
    if file.bases.is_empty() {
        return Err(parse_err("no bases in file".into()));
    }
    let d = file.d;
    let mut bases = Vec::with_capacity(file.bases.len());
    for (mu, entries) in file.bases.into_iter().enumerate() {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        let m = CMatrix::from_iterator(d, d, entries.into_iter().map(|[re, im]| C64::new(re, im)));
        let basis = Basis::from_columns(m).map_err(|e| match e {
            Error::NotOrthonormal { deviation, .. } => Error::NotOrthonormal { basis: mu, deviation },
            other => other,
        })?;
        bases.push(basis);
    }
    BasisSet::new(bases)
}

pub fn save_basis_set(bs: &BasisSet, path: &Path) -> Result<()> {
    std::fs::write(path, basis_set_to_json(bs)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_basis_set(path: &Path) -> Result<BasisSet> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    basis_set_from_json(&text, path)
}
