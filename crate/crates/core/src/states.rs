//! Bipartite states, aggregated joint distributions and the steering witness.
//!
//! Product vectors are indexed `i * dim_b + j` for `|i>_A |j>_B`.

use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bases::{Basis, BasisSet};
use crate::error::{Error, Result};
use crate::majorization::{aggregate_raw, Partition};
use crate::numerics::{ensure_finite, herm_eigen, hermiticity_deviation, CMatrix, CVector, HermMatrix, C64};
use crate::omega::{omega_profile_with, OmegaOptions};

pub const STATE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
/// Joint probabilities down to this are treated as rounding noise and clamped.
pub const NEGATIVE_PROB_CLAMP: f64 = -1e-10;
/// `S_L` must exceed `Omega_L / L` by this much to count as a detection.
pub const WITNESS_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Isotropic,
    Werner,
    TwoQubitWerner,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim_a: usize,
    dim_b: usize,
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(dim_a: usize, dim_b: usize, m: CMatrix) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::validation("subsystem dimensions must be positive"));
        }
        let n = dim_a * dim_b;
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if m.nrows() != n { m.nrows() } else { m.ncols() },
            });
        }
        ensure_finite(&m)?;
        let herm = hermiticity_deviation(&m);
        if herm > STATE_TOL {
            return Err(Error::validation(format!("state not Hermitian: deviation {herm:.3e}")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::validation(format!("state trace {tr} differs from 1")));
        }
        let h = HermMatrix::new(m)?;
        let (values, _) = herm_eigen(&h);
        if values[0] < -PSD_TOL {
            return Err(Error::validation(format!(
                "state not positive semidefinite: eigenvalue {:.3e}",
                values[0]
            )));
        }
        Ok(DensityMatrix {
            dim_a,
            dim_b,
            m: h.into_matrix(),
        })
    }

    pub fn pure(dim_a: usize, dim_b: usize, psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::validation("zero state vector"));
        }
        let v = psi / C64::new(norm, 0.0);
        DensityMatrix::new(dim_a, dim_b, &v * v.adjoint())
    }

    /// `rho_A (x) rho_B` from single-system density matrices.
    pub fn product(rho_a: &CMatrix, rho_b: &CMatrix) -> Result<Self> {
        DensityMatrix::new(rho_a.nrows(), rho_b.nrows(), rho_a.kronecker(rho_b))
    }

    /// Convex combination; weights are normalized.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::validation("empty mixture"))?;
        let (da, db) = (first.1.dim_a, first.1.dim_b);
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if parts.iter().any(|p| p.0 < 0.0) || total <= 0.0 {
            return Err(Error::validation(
                "mixture weights must be nonnegative with positive sum",
            ));
        }
        let mut m = CMatrix::zeros(da * db, da * db);
        for (w, rho) in parts {
            if (rho.dim_a, rho.dim_b) != (da, db) {
                return Err(Error::DimensionMismatch {
                    expected: da * db,
                    found: rho.dim(),
                });
            }
            m += rho.matrix() * C64::new(w / total, 0.0);
        }
        DensityMatrix::new(da, db, m)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// `Tr_B rho`.
    pub fn reduced_a(&self) -> CMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        CMatrix::from_fn(da, da, |i, k| (0..db).map(|j| self.m[(i * db + j, k * db + j)]).sum())
    }

    /// `Tr_A rho`.
    pub fn reduced_b(&self) -> CMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        CMatrix::from_fn(db, db, |j, l| (0..da).map(|i| self.m[(i * db + j, i * db + l)]).sum())
    }

    /// `<phi+| rho |phi+>` for the maximally entangled `sum_k |kk> / sqrt(d)`.
    pub fn fidelity_phi_plus(&self) -> Result<f64> {
        let psi = phi_plus(self.dim_a)?;
        if self.dim_b != self.dim_a {
            return Err(Error::DimensionMismatch {
                expected: self.dim_a,
                found: self.dim_b,
            });
        }
        Ok(psi.dotc(&(&self.m * &psi)).re)
    }

    pub fn to_json(&self) -> String {
        let file = StateFile {
            format_version: 1,
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            entries: self
                .m
                .row_iter()
                .flat_map(|r| r.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("states always serialize")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse {
            path: origin.to_path_buf(),
            reason,
        };
        let file: StateFile = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        if file.format_version != 1 {
            return Err(parse_err(format!("unsupported format_version {}", file.format_version)));
        }
        let n = file.dim_a * file.dim_b;
        if file.entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: file.entries.len(),
            });
        }
        let m = CMatrix::from_row_iterator(n, n, file.entries.iter().map(|&[re, im]| C64::new(re, im)));
        DensityMatrix::new(file.dim_a, file.dim_b, m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        DensityMatrix::from_json(&text, path)
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    format_version: u32,
    dim_a: usize,
    dim_b: usize,
    /// Row-major `[re, im]` pairs.
    entries: Vec<[f64; 2]>,
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::validation(format!("{what} = {x} outside [0, 1]")));
    }
    Ok(())
}

fn check_local_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::out_of_range("d", d, 2, usize::MAX));
    }
    Ok(())
}

fn phi_plus(d: usize) -> Result<CVector> {
    check_local_dim(d)?;
    let mut v = CVector::zeros(d * d);
    for k in 0..d {
        v[k * d + k] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    Ok(v)
}

/// The swap operator `V |ij> = |ji>`.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut v = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            v[(j * d + i, i * d + j)] = C64::new(1.0, 0.0);
        }
    }
    v
}

/// `(1 - w) I / d^2 + w |phi+><phi+|`.
pub fn isotropic_state(d: usize, w: f64) -> Result<DensityMatrix> {
    check_unit("w", w)?;
    let psi = phi_plus(d)?;
    let n = d * d;
    let m = CMatrix::identity(n, n) * C64::new((1.0 - w) / n as f64, 0.0) + &psi * psi.adjoint() * C64::new(w, 0.0);
    DensityMatrix::new(d, d, m)
}

/// `((d - 1 + eta) / (d - 1)) I / d^2 - (eta / (d - 1)) V / d`.
pub fn werner_state(d: usize, eta: f64) -> Result<DensityMatrix> {
    check_unit("eta", eta)?;
    check_local_dim(d)?;
    let (df, n) = (d as f64, d * d);
    let m = CMatrix::identity(n, n) * C64::new((df - 1.0 + eta) / ((df - 1.0) * df * df), 0.0)
        - swap_operator(d) * C64::new(eta / ((df - 1.0) * df), 0.0);
    DensityMatrix::new(d, d, m)
}

/// `(1 - w) I / 4 + w |psi-><psi-|`.
pub fn two_qubit_werner(w: f64) -> Result<DensityMatrix> {
    check_unit("w", w)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = CVector::from_vec(vec![
        C64::new(0.0, 0.0),
        C64::new(s, 0.0),
        C64::new(-s, 0.0),
        C64::new(0.0, 0.0),
    ]);
    let m = CMatrix::identity(4, 4) * C64::new((1.0 - w) / 4.0, 0.0) + &psi * psi.adjoint() * C64::new(w, 0.0);
    DensityMatrix::new(2, 2, m)
}

/// Generalized Gell-Mann matrices with `Tr[pi_mu pi_nu] = 2 delta`.
///
/// Order: the `d(d-1)/2` antisymmetric (imaginary) ones, then the symmetric
/// off-diagonal ones, then the `d - 1` diagonal ones.
#[derive(Clone, Debug)]
pub struct GeneratorBasis {
    d: usize,
    mats: Vec<CMatrix>,
}

impl GeneratorBasis {
    pub fn new(d: usize) -> Result<Self> {
        check_local_dim(d)?;
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
        let mut mats = Vec::with_capacity(d * d - 1);
        for &(j, k) in &pairs {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = -i;
            m[(k, j)] = i;
            mats.push(m);
        }
        for &(j, k) in &pairs {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = one;
            m[(k, j)] = one;
            mats.push(m);
        }
        for l in 1..d {
            let scale = (2.0 / (l * (l + 1)) as f64).sqrt();
            let mut m = CMatrix::zeros(d, d);
            for q in 0..l {
                m[(q, q)] = C64::new(scale, 0.0);
            }
            m[(l, l)] = C64::new(-(l as f64) * scale, 0.0);
            mats.push(m);
        }
        Ok(GeneratorBasis { d, mats })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn n_antisymmetric(&self) -> usize {
        self.d * (self.d - 1) / 2
    }

    /// Diagonal of `Phi`: `-1` for antisymmetric generators (`pi^T = -pi`), `+1` otherwise.
    pub fn transpose_signs(&self) -> Vec<f64> {
        (0..self.len())
            .map(|mu| if mu < self.n_antisymmetric() { -1.0 } else { 1.0 })
            .collect()
    }

    /// Real coefficients `x_mu = Tr[pi_mu H] / 2` of a traceless Hermitian `H`.
    pub fn coefficients(&self, h: &CMatrix) -> Vec<f64> {
        self.mats.iter().map(|p| (p * h).trace().re / 2.0).collect()
    }

    /// `sum_mu x_mu pi_mu`.
    pub fn combine(&self, x: &[f64]) -> CMatrix {
        let mut h = CMatrix::zeros(self.d, self.d);
        for (p, &c) in self.mats.iter().zip(x) {
            h += p * C64::new(c, 0.0);
        }
        h
    }
}

fn same_dims(rho: &DensityMatrix, a: &Basis, b: &Basis) -> Result<()> {
    if a.dim() != rho.dim_a {
        return Err(Error::DimensionMismatch {
            expected: rho.dim_a,
            found: a.dim(),
        });
    }
    if b.dim() != rho.dim_b {
        return Err(Error::DimensionMismatch {
            expected: rho.dim_b,
            found: b.dim(),
        });
    }
    Ok(())
}

/// `p(a_i, b_j) = <a_i b_j| rho |a_i b_j>` as a `dim_a x dim_b` matrix.
pub fn joint_probability(rho: &DensityMatrix, a: &Basis, b: &Basis) -> Result<DMatrix<f64>> {
    same_dims(rho, a, b)?;
    let (da, db) = (rho.dim_a, rho.dim_b);
    let mut p = DMatrix::zeros(da, db);
    for i in 0..da {
        let ai = a.vector(i);
        for j in 0..db {
            let v = ai.kronecker(&b.vector(j));
            let x = v.dotc(&(rho.matrix() * &v)).re;
            if x < NEGATIVE_PROB_CLAMP {
                return Err(Error::validation(format!(
                    "negative joint probability {x:.3e} at ({i}, {j})"
                )));
            }
            p[(i, j)] = x.max(0.0);
        }
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Numeric,
    ClosedForm,
}

/// `Upsilon_k`: joint probabilities summed over the cyclic diagonal `j = i + k mod d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatedDistribution {
    pub components: Vec<f64>,
    pub provenance: Provenance,
}

pub fn aggregated_upsilon(rho: &DensityMatrix, a: &Basis, b: &Basis) -> Result<AggregatedDistribution> {
    if rho.dim_a != rho.dim_b {
        return Err(Error::DimensionMismatch {
            expected: rho.dim_a,
            found: rho.dim_b,
        });
    }
    let p = joint_probability(rho, a, b)?;
    let d = rho.dim_a;
    let flat: Vec<f64> = p
        .row_iter()
        .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
        .collect();
    let components = aggregate_raw(&flat, &Partition::cyclic_diagonal(d)?)?;
    Ok(AggregatedDistribution {
        components,
        provenance: Provenance::Numeric,
    })
}

/// The family's `Upsilon` under its standard settings: conjugate bases for
/// isotropic states, identical bases for Werner states, and correlation-aligned
/// bases for the two-qubit Werner state (`Upsilon_+` first).
pub fn upsilon_closed_form(family: Family, d: usize, param: f64) -> Result<AggregatedDistribution> {
    check_local_dim(d)?;
    check_unit("parameter", param)?;
    let df = d as f64;
    let components = match family {
        Family::Isotropic => {
            let mut v = vec![(1.0 - param) / df; d];
            v[0] = (1.0 + (df - 1.0) * param) / df;
            v
        }
        Family::Werner => {
            let mut v = vec![(df - 1.0 + param) / (df * (df - 1.0)); d];
            v[0] = (1.0 - param) / df;
            v
        }
        Family::TwoQubitWerner => {
            if d != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: d });
            }
            vec![(1.0 + param) / 2.0, (1.0 - param) / 2.0]
        }
    };
    Ok(AggregatedDistribution {
        components,
        provenance: Provenance::ClosedForm,
    })
}

/// `T_mu_nu = Tr[rho pi_mu (x) pi_nu]`.
pub fn correlation_matrix(rho: &DensityMatrix, gens: &GeneratorBasis) -> Result<DMatrix<f64>> {
    let d = gens.dim();
    if rho.dim_a != d || rho.dim_b != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if rho.dim_a != d { rho.dim_a } else { rho.dim_b },
        });
    }
    let n = gens.len();
    let m = rho.matrix();
    // Tr[rho (A (x) B)] = sum rho[(i d + k), (j d + l)] A[j, i] B[l, k]
    let mut t = DMatrix::zeros(n, n);
    for (mu, pa) in gens.matrices().iter().enumerate() {
        for (nu, pb) in gens.matrices().iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    let x = pa[(j, i)];
                    if x.norm_sqr() == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        for l in 0..d {
                            acc += m[(i * d + k, j * d + l)] * x * pb[(l, k)];
                        }
                    }
                }
            }
            t[(mu, nu)] = acc.re;
        }
    }
    Ok(t)
}

fn pauli() -> [CMatrix; 3] {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    [
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

fn require_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.dim_a != 2 || rho.dim_b != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: rho.dim_a.max(rho.dim_b),
        });
    }
    Ok(())
}

/// Two-qubit correlations `T_ij = Tr[rho sigma_i (x) sigma_j]` in `x, y, z` order.
pub fn bloch_correlation(rho: &DensityMatrix) -> Result<Matrix3<f64>> {
    require_qubits(rho)?;
    let s = pauli();
    Ok(Matrix3::from_fn(|i, j| {
        (rho.matrix() * s[i].kronecker(&s[j])).trace().re
    }))
}

/// Singular values of the two-qubit correlation matrix, descending.
pub fn two_qubit_singular_values(rho: &DensityMatrix) -> Result<Vector3<f64>> {
    let mut sv: Vec<f64> = bloch_correlation(rho)?.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(Vector3::new(sv[0], sv[1], sv[2]))
}

/// Bloch vector of a qubit state.
pub fn bloch_vector(v: &CVector) -> Vector3<f64> {
    let z = v[0].conj() * v[1];
    Vector3::new(2.0 * z.re, 2.0 * z.im, v[0].norm_sqr() - v[1].norm_sqr())
}

/// Qubit state with the given unit Bloch vector.
pub fn state_from_bloch(n: &Vector3<f64>) -> CVector {
    let (x, y, z) = (n[0], n[1], n[2]);
    if z > -1.0 + 1e-12 {
        let v = CVector::from_vec(vec![C64::new(1.0 + z, 0.0), C64::new(x, y)]);
        let norm = v.norm();
        v / C64::new(norm, 0.0)
    } else {
        CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }
}

/// Qubit basis `{|n>, |-n>}`.
pub fn qubit_basis(n: &Vector3<f64>) -> Result<Basis> {
    let norm = n.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("Bloch direction has norm {norm}")));
    }
    let n = n / norm;
    let (p, m) = (state_from_bloch(&n), state_from_bloch(&-n));
    Basis::from_columns(CMatrix::from_columns(&[p, m]))
}

/// Local settings applied before computing `S_L`; `Omega` always comes from
/// the untransformed basis set.
#[derive(Clone, Debug)]
pub enum Strategy {
    /// Alice and Bob both measure the given bases.
    Identity,
    /// Bob measures the complex-conjugate bases.
    ConjugateBob,
    /// Qubits only: Alice's directions are Bob's rotated by `U V^T` from the
    /// SVD `T = U S V^T`, which makes every `a^T T b` nonnegative.
    SvdAligned,
    /// Alice measures `U_A B_mu`, Bob `U_B B_mu`.
    Unitaries { alice: CMatrix, bob: CMatrix },
}

impl Strategy {
    /// The strategy used for a state family.
    pub fn for_family(family: Option<Family>) -> Strategy {
        match family {
            Some(Family::Isotropic) => Strategy::ConjugateBob,
            Some(Family::TwoQubitWerner) => Strategy::SvdAligned,
            Some(Family::Werner) | None => Strategy::Identity,
        }
    }
}

/// `(Alice settings, Bob settings)` for a strategy.
pub fn apply_strategy(rho: &DensityMatrix, bases: &BasisSet, strategy: &Strategy) -> Result<(BasisSet, BasisSet)> {
    match strategy {
        Strategy::Identity => Ok((bases.clone(), bases.clone())),
        Strategy::ConjugateBob => Ok((bases.clone(), bases.conjugate())),
        Strategy::SvdAligned => {
            let t = bloch_correlation(rho)?;
            if bases.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: bases.dim(),
                });
            }
            let svd = t.svd(true, true);
            let o = svd.u.expect("requested") * svd.v_t.expect("requested");
            let alice = bases
                .bases()
                .iter()
                .map(|b| qubit_basis(&(o * bloch_vector(&b.vector(0)))))
                .collect::<Result<Vec<_>>>()?;
            Ok((BasisSet::new(alice)?, bases.clone()))
        }
        Strategy::Unitaries { alice, bob } => {
            let rotate = |u: &CMatrix| -> Result<BasisSet> {
                BasisSet::new(bases.bases().iter().map(|b| b.rotated(u)).collect::<Result<Vec<_>>>()?)
            };
            Ok((rotate(alice)?, rotate(bob)?))
        }
    }
}

/// `Upsilon` for every pair `(A_mu, B_mu)`, concatenated.
pub fn combined_upsilon(rho: &DensityMatrix, settings_a: &BasisSet, settings_b: &BasisSet) -> Result<Vec<f64>> {
    if settings_a.len() != settings_b.len() {
        return Err(Error::DimensionMismatch {
            expected: settings_b.len(),
            found: settings_a.len(),
        });
    }
    let mut all = Vec::with_capacity(settings_b.len() * settings_b.dim());
    for (a, b) in settings_a.bases().iter().zip(settings_b.bases()) {
        all.extend(aggregated_upsilon(rho, a, b)?.components);
    }
    Ok(all)
}

/// `S_L` for `L = 1..=len`: means of the top-`L` entries.
fn top_means(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            acc += v;
            acc / (k + 1) as f64
        })
        .collect()
}

/// `S_L = (1/L) * (sum of the L largest entries of (+)_mu Upsilon(A_mu, B_mu))`.
pub fn steering_parameter(rho: &DensityMatrix, settings_a: &BasisSet, settings_b: &BasisSet, l: usize) -> Result<f64> {
    let total = settings_b.len() * settings_b.dim();
    if l < 2 || l > total {
        return Err(Error::out_of_range("L", l, 2, total));
    }
    Ok(top_means(combined_upsilon(rho, settings_a, settings_b)?)[l - 1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Whether some `S_L` exceeds `Omega_L / L`. `false` means not detected,
    /// not a proof of unsteerability.
    pub steerable: bool,
    /// The `L` with the largest margin.
    pub best_l: usize,
    /// `max_L (S_L - Omega_L / L)`.
    pub margin: f64,
    /// `S_L` for `L = 2..=N d`.
    pub s_profile: Vec<f64>,
    /// `Omega_L / L` for `L = 2..=N d`.
    pub omega_bar_profile: Vec<f64>,
}

/// Steering witness with the given settings; the bound comes from `settings_b`.
pub fn witness(rho: &DensityMatrix, settings_a: &BasisSet, settings_b: &BasisSet) -> Result<Verdict> {
    witness_against(rho, settings_a, settings_b, settings_b, &OmegaOptions::default())
}

/// Applies `strategy` to `bases` and compares against the bound of `bases` itself.
pub fn witness_with(
    rho: &DensityMatrix,
    bases: &BasisSet,
    strategy: &Strategy,
    opts: &OmegaOptions,
) -> Result<Verdict> {
    let (a, b) = apply_strategy(rho, bases, strategy)?;
    witness_against(rho, &a, &b, bases, opts)
}

fn witness_against(
    rho: &DensityMatrix,
    settings_a: &BasisSet,
    settings_b: &BasisSet,
    bound_set: &BasisSet,
    opts: &OmegaOptions,
) -> Result<Verdict> {
    if settings_b.len() * settings_b.dim() < 2 {
        return Err(Error::validation("witness needs at least two outcomes"));
    }
    let s_all = top_means(combined_upsilon(rho, settings_a, settings_b)?);
    let omega_bar: Vec<f64> = omega_profile_with(bound_set, opts)?
        .into_iter()
        .map(|r| r.value_bar)
        .collect();
    let s_profile = s_all[1..].to_vec();
    let omega_bar_profile = omega_bar[1..].to_vec();
    let mut best_l = 2;
    let mut margin = f64::NEG_INFINITY;
    for (k, (s, o)) in s_profile.iter().zip(&omega_bar_profile).enumerate() {
        if s - o > margin {
            margin = s - o;
            best_l = k + 2;
        }
    }
    Ok(Verdict {
        steerable: margin > WITNESS_MARGIN,
        best_l,
        margin,
        s_profile,
        omega_bar_profile,
    })
}

/// A parsed `--state` argument.
#[derive(Clone, Debug)]
pub struct StateSpec {
    pub state: DensityMatrix,
    pub family: Option<Family>,
}

/// `iso:<d>:<w>`, `werner:<d>:<eta>`, `werner2q:<w>`, or a path to a JSON state file.
pub fn parse_state_spec(spec: &str) -> Result<StateSpec> {
    let parts: Vec<&str> = spec.split(':').collect();
    let usage = || Error::validation(format!("malformed state spec '{spec}'"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| usage());
    let dim = |s: &str| s.parse::<usize>().map_err(|_| usage());
    match parts.as_slice() {
        ["iso", d, w] => Ok(StateSpec {
            state: isotropic_state(dim(d)?, num(w)?)?,
            family: Some(Family::Isotropic),
        }),
        ["werner", d, eta] => Ok(StateSpec {
            state: werner_state(dim(d)?, num(eta)?)?,
            family: Some(Family::Werner),
        }),
        ["werner2q", w] => Ok(StateSpec {
            state: two_qubit_werner(num(w)?)?,
            family: Some(Family::TwoQubitWerner),
        }),
        [head, ..] if ["iso", "werner", "werner2q"].contains(head) => Err(usage()),
        _ => Ok(StateSpec {
            state: DensityMatrix::load(Path::new(spec))?,
            family: None,
        }),
    }
}
