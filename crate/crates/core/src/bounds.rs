//! Analytic upper bounds `Theta_L`, `Lambda_L`, `Gamma_L` on `Omega_L`.

use serde::{Deserialize, Serialize};

use crate::bases::{max_overlap, BasisSet};
use crate::error::{Error, Result};
use crate::omega::VectorTable;
use crate::search::{self, Objective, Space};

/// `Phi(L) = N q^2 + (L - N q)(2 q + 1)` with `q = floor(L / N)`: the least
/// value of `sum |I_mu|^2` over splits of `L` into `N` parts.
pub fn phi(l: usize, n: usize) -> usize {
    assert!(n >= 1, "phi needs N >= 1");
    let q = l / n;
    n * q * q + (l - n * q) * (2 * q + 1)
}

fn check_mub_range(l: usize, d: usize, n: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::out_of_range("d", d, 2, usize::MAX));
    }
    let max = n * (d - 1);
    if l < 1 || l > max {
        return Err(Error::out_of_range("L", l, 1, max));
    }
    Ok(())
}

/// `1 + (L - 1)/sqrt(d)`, for `1 <= L <= N (d - 1)`.
pub fn theta_mub(l: usize, d: usize, n: usize) -> Result<f64> {
    check_mub_range(l, d, n)?;
    Ok(1.0 + (l as f64 - 1.0) / (d as f64).sqrt())
}

/// `sqrt((d L + L^2 - Phi(L)) / d)`.
pub fn lambda_mub(l: usize, d: usize, n: usize) -> Result<f64> {
    check_mub_range(l, d, n)?;
    let (l_, d_) = (l as f64, d as f64);
    Ok(((d_ * l_ + l_ * l_ - phi(l, n) as f64) / d_).sqrt())
}

/// `(L + sqrt((d - 1)(d L - Phi(L)))) / d`.
pub fn gamma_mub(l: usize, d: usize, n: usize) -> Result<f64> {
    check_mub_range(l, d, n)?;
    let (l_, d_) = (l as f64, d as f64);
    Ok((l_ + ((d_ - 1.0) * (d_ * l_ - phi(l, n) as f64)).sqrt()) / d_)
}

struct Purity<'a> {
    table: &'a VectorTable,
    /// `|<x_a|x_b>|^2`, row-major.
    abs2: Vec<f64>,
    c2: f64,
}

impl Purity<'_> {
    fn a2(&self, a: usize, b: usize) -> f64 {
        self.abs2[a * self.table.len() + b]
    }
}

impl Objective for Purity<'_> {
    fn value(&self, sel: &[usize]) -> f64 {
        let mut off = 0.0;
        for (i, &a) in sel.iter().enumerate() {
            for &b in &sel[i + 1..] {
                off += self.a2(a, b);
            }
        }
        sel.len() as f64 + 2.0 * off
    }

    fn bound(&self, sel: &[usize], value: f64, next: usize, remaining: usize) -> f64 {
        // Each new vector adds 1, twice its squared overlaps with S, and at
        // most c^2 per ordered pair inside the completion.
        let mut gains: Vec<f64> = (next..self.table.len())
            .map(|x| 2.0 * sel.iter().map(|&y| self.a2(x, y)).sum::<f64>())
            .collect();
        gains.sort_unstable_by(|a, b| b.total_cmp(a));
        let r = remaining as f64;
        value + r + gains.iter().take(remaining).sum::<f64>() + self.c2 * r * (r - 1.0)
    }
}

/// `max Tr[X^2]` over selections of `L` vectors, `X` the projector sum.
pub fn max_tr_x2(bs: &BasisSet, l: usize) -> Result<f64> {
    let total = bs.len() * bs.dim();
    if l < 1 || l > total {
        return Err(Error::out_of_range("L", l, 1, total));
    }
    let table = VectorTable::new(bs);
    Ok(max_tr_x2_on_table(&table, l))
}

pub(crate) fn max_tr_x2_on_table(table: &VectorTable, l: usize) -> f64 {
    if l == 1 {
        return 1.0;
    }
    let n = table.len();
    let abs2 = table.gram.iter().map(|g| g.norm_sqr()).collect();
    let obj = Purity {
        table,
        abs2,
        c2: table.c * table.c,
    };
    let space = Space {
        n,
        picks: l,
        first_stride: None,
        label: "tr_x2",
    };
    let seed = search::greedy(&obj, &space);
    search::maximize(&obj, &space, seed).0
}

fn gamma_from_purity(l: usize, d: usize, t: f64) -> f64 {
    let (l_, d_) = (l as f64, d as f64);
    (l_ + ((d_ - 1.0) * (d_ * t - l_ * l_)).max(0.0).sqrt()) / d_
}

/// `(L + sqrt((d - 1)(d T - L^2))) / d` with `T = max Tr[X^2]`.
pub fn gamma_general(bs: &BasisSet, l: usize) -> Result<f64> {
    Ok(gamma_from_purity(l, bs.dim(), max_tr_x2(bs, l)?))
}

/// `sqrt(max Tr[X^2])`.
pub fn lambda_general(bs: &BasisSet, l: usize) -> Result<f64> {
    Ok(max_tr_x2(bs, l)?.sqrt())
}

/// `1 + (L - 1) c` with `c` the largest cross-basis overlap, for `1 <= L <= d (N - 1)`.
pub fn theta_general(bs: &BasisSet, l: usize) -> Result<f64> {
    let max = bs.dim() * bs.len().saturating_sub(1);
    if l < 1 || l > max {
        return Err(Error::out_of_range("L", l, 1, max));
    }
    Ok(1.0 + (l as f64 - 1.0) * max_overlap(bs)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    MubClosedForm,
    GeneralEnumerated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsProfile {
    pub l: usize,
    pub theta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub theta_bar: f64,
    pub lambda_bar: f64,
    pub gamma_bar: f64,
    pub regime: Regime,
}

impl BoundsProfile {
    fn new(l: usize, theta: f64, lambda: f64, gamma: f64, regime: Regime) -> Self {
        let lf = l as f64;
        BoundsProfile {
            l,
            theta,
            lambda,
            gamma,
            theta_bar: theta / lf,
            lambda_bar: lambda / lf,
            gamma_bar: gamma / lf,
            regime,
        }
    }

    /// The smallest of the three bounds.
    pub fn tightest(&self) -> f64 {
        self.theta.min(self.lambda).min(self.gamma)
    }
}

pub fn bounds_mub(l: usize, d: usize, n: usize) -> Result<BoundsProfile> {
    Ok(BoundsProfile::new(
        l,
        theta_mub(l, d, n)?,
        lambda_mub(l, d, n)?,
        gamma_mub(l, d, n)?,
        Regime::MubClosedForm,
    ))
}

pub fn bounds_general(bs: &BasisSet, l: usize) -> Result<BoundsProfile> {
    let theta = theta_general(bs, l)?;
    let t = max_tr_x2(bs, l)?;
    Ok(BoundsProfile::new(
        l,
        theta,
        t.sqrt(),
        gamma_from_purity(l, bs.dim(), t),
        Regime::GeneralEnumerated,
    ))
}

/// Closed forms for every `L` in `1..=N (d - 1)`.
pub fn bounds_profile_mub(d: usize, n: usize) -> Result<Vec<BoundsProfile>> {
    check_mub_range(1, d, n)?;
    (1..=n * (d - 1)).map(|l| bounds_mub(l, d, n)).collect()
}

/// Enumerated bounds for every `L` in `1..=d (N - 1)`.
pub fn bounds_profile_general(bs: &BasisSet) -> Result<Vec<BoundsProfile>> {
    (1..=bs.dim() * bs.len().saturating_sub(1))
        .map(|l| bounds_general(bs, l))
        .collect()
}
