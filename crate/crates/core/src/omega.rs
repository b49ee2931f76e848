//! The uncertainty bound `Omega_L`: the largest eigenvalue of a sum of `L`
//! distinct basis projectors, maximized over selections.

use itertools::Itertools;

use crate::bases::{mub_set, overlap_matrix, Basis, BasisSet};
use crate::error::{Error, Result};
use crate::majorization::{flatten_increments, ProbVector};
use crate::numerics::{herm_max_eig, max_eigenvalue, max_singular_value, CMatrix, CVector, HermMatrix, C64};
use crate::search::{self, Objective, Space};

#[derive(Clone, Debug)]
pub struct OmegaResult {
    pub l: usize,
    pub value: f64,
    pub value_bar: f64,
    /// `(basis, vector)` pairs in increasing basis-major order.
    pub selection: Vec<(usize, usize)>,
    /// Top eigenvector of the selected projector sum.
    pub optimal_state: CVector,
}

#[derive(Clone, Debug, Default)]
pub struct OmegaOptions {
    /// Require the first selected vector to have index 0 in its basis.
    ///
    /// Exact only when a symmetry group permutes the vectors of every basis
    /// transitively while fixing each basis, as the Weyl-Heisenberg group does
    /// for the sets built by [`mub_set`]. Not checked.
    pub symmetry_reduction: bool,
}

/// All vectors of a basis set with their precomputed inner products.
pub(crate) struct VectorTable {
    pub d: usize,
    pub n_bases: usize,
    pub vectors: Vec<CVector>,
    /// Row-major `<x_a|x_b>`.
    pub gram: Vec<C64>,
    /// Largest cross-basis overlap modulus.
    pub c: f64,
}

impl VectorTable {
    pub fn new(bs: &BasisSet) -> Self {
        let vectors = bs.vectors();
        let n = vectors.len();
        let d = bs.dim();
        let mut gram = vec![C64::new(0.0, 0.0); n * n];
        let mut c: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let g = vectors[a].dotc(&vectors[b]);
                gram[a * n + b] = g;
                if a / d != b / d {
                    c = c.max(g.norm());
                }
            }
        }
        VectorTable {
            d,
            n_bases: bs.len(),
            vectors,
            gram,
            c: c.min(1.0),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn g(&self, a: usize, b: usize) -> C64 {
        self.gram[a * self.len() + b]
    }

    /// `lambda_max(sum_{a in sel} |x_a><x_a|)`, from the Gram matrix when it is the smaller one.
    pub fn lambda(&self, sel: &[usize]) -> f64 {
        match sel.len() {
            0 => 0.0,
            1 => 1.0,
            2 => 1.0 + self.g(sel[0], sel[1]).norm(),
            k if k <= self.d => {
                let m = CMatrix::from_fn(k, k, |i, j| self.g(sel[i], sel[j]));
                max_eigenvalue(m)
            }
            _ => max_eigenvalue(self.operator(sel)),
        }
    }

    pub fn operator(&self, sel: &[usize]) -> CMatrix {
        let mut x = CMatrix::zeros(self.d, self.d);
        for &a in sel {
            let v = &self.vectors[a];
            x.gerc(C64::new(1.0, 0.0), v, v, C64::new(1.0, 0.0));
        }
        x
    }
}

struct Spectral<'a> {
    table: &'a VectorTable,
}

impl Objective for Spectral<'_> {
    fn value(&self, sel: &[usize]) -> f64 {
        self.table.lambda(sel)
    }

    fn bound(&self, _sel: &[usize], value: f64, next: usize, remaining: usize) -> f64 {
        // lambda(S + T) <= lambda(S) + lambda(T). The projectors of T span at
        // most the bases from `next` on, each summing to at most one, and
        // Gershgorin on T's Gram matrix gives 1 + (r - 1) c.
        let t = self.table;
        let r = remaining as f64;
        let bases_left = (t.n_bases - next / t.d) as f64;
        value + r.min(bases_left).min(1.0 + (r - 1.0) * t.c)
    }
}

fn check_l(bs: &BasisSet, l: usize) -> Result<()> {
    let n = bs.len() * bs.dim();
    if l < 1 || l > n {
        return Err(Error::out_of_range("L", l, 1, n));
    }
    Ok(())
}

fn finish(table: &VectorTable, l: usize, value: f64, sel: &[usize]) -> OmegaResult {
    let x = HermMatrix::symmetrized(table.operator(sel));
    let (_, state) = herm_max_eig(&x);
    OmegaResult {
        l,
        value,
        value_bar: value / l as f64,
        selection: sel.iter().map(|&a| (a / table.d, a % table.d)).collect(),
        optimal_state: phase_fix(state),
    }
}

fn phase_fix(v: CVector) -> CVector {
    match v.iter().find(|z| z.norm() > 1e-9) {
        Some(z) => {
            let phase = z.conj() / z.norm();
            v * phase
        }
        None => v,
    }
}

pub fn omega_exact(bs: &BasisSet, l: usize) -> Result<OmegaResult> {
    omega_exact_with(bs, l, &OmegaOptions::default())
}

pub fn omega_exact_with(bs: &BasisSet, l: usize, opts: &OmegaOptions) -> Result<OmegaResult> {
    check_l(bs, l)?;
    let table = VectorTable::new(bs);
    Ok(omega_on_table(&table, l, opts))
}

pub(crate) fn omega_on_table(table: &VectorTable, l: usize, opts: &OmegaOptions) -> OmegaResult {
    let (d, nb) = (table.d, table.n_bases);
    if l == 1 {
        return finish(table, 1, 1.0, &[0]);
    }
    if nb == 1 || l > d * (nb - 1) {
        // Orthonormal vectors within one basis; or every selection this large
        // covers N - 1 bases completely and touches the last one.
        let sel: Vec<usize> = (0..l).collect();
        return finish(table, l, nb.min(l) as f64, &sel);
    }
    if l == 2 {
        let (value, sel) = search::merge(
            (0..table.len())
                .tuple_combinations()
                .map(|(a, b)| (table.lambda(&[a, b]), vec![a, b])),
        );
        return finish(table, 2, value, &sel);
    }
    let obj = Spectral { table };
    let space = Space {
        n: table.len(),
        picks: l,
        first_stride: opts.symmetry_reduction.then_some(d),
        label: "omega",
    };
    let seed = search::greedy(&obj, &space);
    let (value, sel) = search::maximize(&obj, &space, seed);
    finish(table, l, value, &sel)
}

/// `Omega_L` for every `L = 1..=N d`.
pub fn omega_profile(bs: &BasisSet) -> Result<Vec<OmegaResult>> {
    omega_profile_with(bs, &OmegaOptions::default())
}

pub fn omega_profile_with(bs: &BasisSet, opts: &OmegaOptions) -> Result<Vec<OmegaResult>> {
    let table = VectorTable::new(bs);
    Ok((1..=table.len()).map(|l| omega_on_table(&table, l, opts)).collect())
}

/// The vector `s` whose top-`L` sums are the least concave majorant of `Omega_L`.
pub fn ur_bound_vector(bs: &BasisSet) -> Result<ProbVector> {
    let profile: Vec<f64> = omega_profile(bs)?.iter().map(|r| r.value).collect();
    ur_bound_from_profile(&profile, bs.len() as f64)
}

/// Flattened increments of `(Omega_1, ..., Omega_n)`; `total` is `N`.
pub fn ur_bound_from_profile(profile: &[f64], total: f64) -> Result<ProbVector> {
    let mut prev = 0.0;
    let increments: Vec<f64> = profile
        .iter()
        .map(|&v| {
            let inc = v - prev;
            prev = v;
            inc
        })
        .collect();
    ProbVector::with_total(flatten_increments(&increments), total)
}

/// `Omega_L` for two bases via `1 + max sigma_max(U[I1, I2])` over `|I1| + |I2| = L`.
pub fn omega_two_bases(b1: &Basis, b2: &Basis, l: usize) -> Result<OmegaResult> {
    let d = b1.dim();
    let u = overlap_matrix(b1, b2)?;
    if l < 1 || l > 2 * d {
        return Err(Error::out_of_range("L", l, 1, 2 * d));
    }
    let splits: Vec<usize> = (l.saturating_sub(d)..=l.min(d)).collect();
    let (value, sel) = best_split(&u, l, &splits)?;
    let table = VectorTable::new(&BasisSet::new(vec![b1.clone(), b2.clone()])?);
    Ok(finish(&table, l, value, &sel))
}

/// Best `1 + sigma_max` over the given sizes of `I1`; selection in basis-major indices.
fn best_split(u: &CMatrix, l: usize, sizes: &[usize]) -> Result<(f64, Vec<usize>)> {
    let d = u.nrows();
    if l > d {
        // Every split covers one basis completely, contributing the identity.
        let sel: Vec<usize> = (0..l).collect();
        return Ok((2.0, sel));
    }
    let mut items = Vec::new();
    for &k in sizes {
        for i1 in (0..d).combinations(k) {
            for i2 in (0..d).combinations(l - k) {
                let sigma = if i1.is_empty() || i2.is_empty() {
                    0.0
                } else {
                    let sub = CMatrix::from_fn(i1.len(), i2.len(), |r, c| u[(i1[r], i2[c])]);
                    max_singular_value(&sub)?
                };
                let sel: Vec<usize> = i1.iter().copied().chain(i2.iter().map(|j| d + j)).collect();
                items.push((1.0 + sigma, sel));
            }
        }
    }
    Ok(search::merge(items.into_iter()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjectureReport {
    pub d: usize,
    pub l: usize,
    /// Restricted to `|I1|, |I2|` in `{floor(L/2), ceil(L/2)}`.
    pub balanced_value: f64,
    pub exact_value: f64,
    pub agrees: bool,
}

/// Compares the balanced-split value against all splits for the standard/Fourier pair.
pub fn conjecture_check(d: usize, l: usize) -> Result<ConjectureReport> {
    let bs = mub_set(d, 2)?;
    if l < 1 || l > d {
        return Err(Error::out_of_range("L", l, 1, d));
    }
    let u = overlap_matrix(bs.basis(0), bs.basis(1))?;
    let balanced: Vec<usize> = [l / 2, l.div_ceil(2)].into_iter().dedup().collect();
    let all: Vec<usize> = (0..=l).collect();
    let (balanced_value, _) = best_split(&u, l, &balanced)?;
    let (exact_value, _) = best_split(&u, l, &all)?;
    Ok(ConjectureReport {
        d,
        l,
        balanced_value,
        exact_value,
        agrees: (balanced_value - exact_value).abs() <= 1e-9,
    })
}
