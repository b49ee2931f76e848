//! Steering thresholds of the isotropic and Werner families, the qubit Bloch
//! form of `Omega_L`, and its many-settings limits.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bases::mub_set;
use crate::bounds::{gamma_mub, lambda_mub, theta_mub};
use crate::error::{Error, Result};
use crate::numerics::round_sig;
use crate::omega::{omega_exact_with, OmegaOptions};
use crate::states::Family;

/// A threshold at or above this is reported as capped (no detection below full weight).
pub const CAP_TOL: f64 = 1e-9;
const RANGE_TOL: f64 = 1e-12;

/// Known LHS critical values, kept only for comparison.
pub const LHS_TWO_QUBIT: f64 = 0.5;
pub const LHS_ISOTROPIC_QUTRIT: f64 = 5.0 / 12.0;
pub const LHS_WERNER_QUTRIT: f64 = 2.0 / 3.0;

pub fn lhs_reference(family: Family, d: usize) -> Option<f64> {
    match (family, d) {
        (Family::TwoQubitWerner, 2) | (Family::Isotropic, 2) | (Family::Werner, 2) => Some(LHS_TWO_QUBIT),
        (Family::Isotropic, 3) => Some(LHS_ISOTROPIC_QUTRIT),
        (Family::Werner, 3) => Some(LHS_WERNER_QUTRIT),
        _ => None,
    }
}

fn check_omega_bar(d: usize, omega_bar: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::out_of_range("d", d, 2, usize::MAX));
    }
    let lo = 1.0 / d as f64;
    if !(lo - RANGE_TOL..=1.0 + RANGE_TOL).contains(&omega_bar) {
        return Err(Error::validation(format!("omega_bar = {omega_bar} outside [1/{d}, 1]")));
    }
    Ok(())
}

/// `w = (d Omega_bar_N - 1) / (d - 1)`.
pub fn iso_threshold(d: usize, omega_bar: f64) -> Result<f64> {
    check_omega_bar(d, omega_bar)?;
    let df = d as f64;
    Ok((df * omega_bar - 1.0) / (df - 1.0))
}

/// `eta = (d - 1)(d Omega_bar_{N(d-1)} - 1)`; may exceed one.
pub fn werner_threshold(d: usize, omega_bar: f64) -> Result<f64> {
    check_omega_bar(d, omega_bar)?;
    let df = d as f64;
    Ok((df - 1.0) * (df * omega_bar - 1.0))
}

/// `w = 2 Omega_bar_N - 1`.
pub fn two_qubit_threshold(omega_bar: f64) -> Result<f64> {
    check_omega_bar(2, omega_bar)?;
    Ok(2.0 * omega_bar - 1.0)
}

/// The `L` at which a family's threshold reads `Omega_bar`.
pub fn family_l(family: Family, d: usize, n: usize) -> usize {
    match family {
        Family::Isotropic | Family::TwoQubitWerner => n,
        Family::Werner => n * (d - 1),
    }
}

/// The family's threshold formula applied to `Omega_bar` (or a bound on it).
pub fn threshold_from_omega_bar(family: Family, d: usize, omega_bar: f64) -> Result<f64> {
    match family {
        Family::Isotropic => iso_threshold(d, omega_bar),
        Family::Werner => werner_threshold(d, omega_bar),
        Family::TwoQubitWerner => {
            if d != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: d });
            }
            two_qubit_threshold(omega_bar)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    Exact,
    Gamma,
    Theta,
    Lambda,
}

impl BoundSource {
    pub fn name(self) -> &'static str {
        match self {
            BoundSource::Exact => "exact",
            BoundSource::Gamma => "gamma",
            BoundSource::Theta => "theta",
            BoundSource::Lambda => "lambda",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub family: Family,
    pub d: usize,
    pub n: usize,
    pub source: BoundSource,
    /// Unclamped; see `capped`.
    pub value: f64,
    pub capped: bool,
    pub reference_constant: Option<f64>,
}

impl ThresholdReport {
    pub fn new(family: Family, d: usize, n: usize, source: BoundSource, value: f64) -> Self {
        ThresholdReport {
            family,
            d,
            n,
            source,
            value,
            capped: value >= 1.0 - CAP_TOL,
            reference_constant: lhs_reference(family, d),
        }
    }

    pub const CSV_HEADER: &'static str = "family,d,N,source,value,capped,lhs_reference";

    pub fn csv_row(&self) -> String {
        let family = match self.family {
            Family::Isotropic => "isotropic",
            Family::Werner => "werner",
            Family::TwoQubitWerner => "two_qubit_werner",
        };
        format!(
            "{family},{},{},{},{},{},{}",
            self.d,
            self.n,
            self.source.name(),
            round_sig(self.value, 12),
            self.capped,
            self.reference_constant
                .map(|x| round_sig(x, 12).to_string())
                .unwrap_or_default()
        )
    }
}

/// Threshold from a closed-form bound at the family's `L`, for MUB settings.
pub fn bound_threshold(family: Family, d: usize, n: usize, source: BoundSource) -> Result<ThresholdReport> {
    let l = family_l(family, d, n);
    let bound = match source {
        BoundSource::Gamma => gamma_mub(l, d, n)?,
        BoundSource::Theta => theta_mub(l, d, n)?,
        BoundSource::Lambda => lambda_mub(l, d, n)?,
        BoundSource::Exact => return exact_threshold(family, d, n, &OmegaOptions::default()),
    };
    let value = threshold_from_omega_bar(family, d, bound / l as f64)?;
    Ok(ThresholdReport::new(family, d, n, source, value))
}

/// Threshold from `Omega_bar` of the first `n` library MUBs.
pub fn exact_threshold(family: Family, d: usize, n: usize, opts: &OmegaOptions) -> Result<ThresholdReport> {
    let bs = mub_set(d, n)?;
    let l = family_l(family, d, n);
    let omega_bar = omega_exact_with(&bs, l, opts)?.value_bar;
    let value = threshold_from_omega_bar(family, d, omega_bar)?;
    Ok(ThresholdReport::new(family, d, n, BoundSource::Exact, value))
}

/// Closed forms of the approximate thresholds for MUB settings.
pub fn approx_threshold_formula(family: Family, d: usize, n: usize, source: BoundSource) -> Result<f64> {
    if n < 2 {
        return Err(Error::out_of_range("N", n, 2, usize::MAX));
    }
    if d < 2 {
        return Err(Error::out_of_range("d", d, 2, usize::MAX));
    }
    let (df, nf) = (d as f64, n as f64);
    let sd = df.sqrt();
    let value = match (family, source) {
        (_, BoundSource::Exact) => {
            return Err(Error::validation("the exact threshold has no closed form"));
        }
        (Family::Werner, BoundSource::Gamma) => (df - 1.0) / nf.sqrt(),
        (Family::Werner, BoundSource::Theta) => (sd - 1.0) * ((df - 1.0) * nf + sd) / nf,
        (Family::Werner, BoundSource::Lambda) => {
            df * (((df - 1.0) * ((df - 1.0) * nf + 1.0) / (nf * df)).sqrt() - 1.0) + 1.0
        }
        (_, BoundSource::Gamma) => 1.0 / nf.sqrt(),
        (_, BoundSource::Theta) => (nf + sd) * (sd - 1.0) / (nf * (df - 1.0)),
        (_, BoundSource::Lambda) => ((df * (df + nf - 1.0) / nf).sqrt() - 1.0) / (df - 1.0),
    };
    Ok(value)
}

/// Gamma, Theta and Lambda thresholds for both families.
pub fn approx_thresholds(d: usize, n: usize) -> Result<Vec<ThresholdReport>> {
    let mut out = Vec::new();
    for family in [Family::Isotropic, Family::Werner] {
        for source in [BoundSource::Gamma, BoundSource::Theta, BoundSource::Lambda] {
            let value = approx_threshold_formula(family, d, n, source)?;
            out.push(ThresholdReport::new(family, d, n, source, value));
        }
    }
    Ok(out)
}

const EXHAUSTIVE_MAX_DIRECTIONS: usize = 12;

fn check_directions(directions: &[Vector3<f64>]) -> Result<()> {
    if directions.is_empty() {
        return Err(Error::validation("no directions"));
    }
    for (k, b) in directions.iter().enumerate() {
        if (b.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("direction {k} has norm {}", b.norm())));
        }
    }
    Ok(())
}

/// `Omega_L = L/2 + max |(1/2) sum_k s_k b_k|` for qubit bases with Bloch
/// directions `b_k`. Each basis contributes nothing, one vector (`s = +-1`)
/// or both (a multiple of the identity, worth one unit of `L` twice).
/// Exhaustive up to 12 directions, greedy sign flips beyond.
pub fn two_qubit_omega_bloch(directions: &[Vector3<f64>], l: usize) -> Result<f64> {
    check_directions(directions)?;
    let n = directions.len();
    if l < 1 || l > 2 * n {
        return Err(Error::out_of_range("L", l, 1, 2 * n));
    }
    let half = l as f64 / 2.0;
    if n <= EXHAUSTIVE_MAX_DIRECTIONS {
        let mut best: f64 = 0.0;
        exhaustive(directions, l, 0, 0, Vector3::zeros(), &mut best);
        Ok(half + best / 2.0)
    } else if l <= n {
        // All singles: the L directions with the best greedy sign pattern.
        let chosen: Vec<Vector3<f64>> = directions[..l].to_vec();
        Ok(half + greedy_signs(&chosen) / 2.0)
    } else {
        Err(Error::Capability(format!(
            "L > N is only supported up to {EXHAUSTIVE_MAX_DIRECTIONS} directions"
        )))
    }
}

/// Tries none / + / - for each direction, accepting a complete assignment when
/// the leftover count can be made up by bases taken in full.
fn exhaustive(dirs: &[Vector3<f64>], l: usize, k: usize, singles: usize, sum: Vector3<f64>, best: &mut f64) {
    if singles > l {
        return;
    }
    if k == dirs.len() {
        let rest = l - singles;
        if rest.is_multiple_of(2) && rest / 2 <= dirs.len() - singles {
            *best = best.max(sum.norm());
        }
        return;
    }
    exhaustive(dirs, l, k + 1, singles, sum, best);
    exhaustive(dirs, l, k + 1, singles + 1, sum + dirs[k], best);
    // The overall sign is free, so the first single can stay positive.
    if singles > 0 {
        exhaustive(dirs, l, k + 1, singles + 1, sum - dirs[k], best);
    }
}

/// `|sum_k s_k b_k|` from all-positive signs improved by single flips.
fn greedy_signs(dirs: &[Vector3<f64>]) -> f64 {
    let mut signs = vec![1.0; dirs.len()];
    let mut sum: Vector3<f64> = dirs.iter().sum();
    loop {
        let mut improved = false;
        for (s, b) in signs.iter_mut().zip(dirs) {
            // |S - 2 s b|^2 = |S|^2 - 4 s b.S + 4
            if *s * b.dot(&sum) < 1.0 - 1e-12 {
                sum -= 2.0 * *s * b;
                *s = -*s;
                improved = true;
            }
        }
        if !improved {
            return sum.norm();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Hemisphere,
    HalfPlane,
}

pub const MIN_GRID: usize = 100;

/// Equal-area spiral over the upper hemisphere.
pub fn hemisphere_grid(n: usize) -> Vec<Vector3<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Equal-angle directions on the half circle `phi in [0, pi)` of the xy-plane.
pub fn half_plane_grid(n: usize) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|k| {
            let phi = PI * (k as f64 + 0.5) / n as f64;
            Vector3::new(phi.cos(), phi.sin(), 0.0)
        })
        .collect()
}

/// `Omega_N / N` for `N = grid_size` qubit settings spread over the scenario.
pub fn infinite_settings_limit(scenario: Scenario, grid_size: usize) -> Result<f64> {
    if grid_size < MIN_GRID {
        return Err(Error::validation(format!("grid too small: {grid_size} < {MIN_GRID}")));
    }
    let dirs = match scenario {
        Scenario::Hemisphere => hemisphere_grid(grid_size),
        Scenario::HalfPlane => half_plane_grid(grid_size),
    };
    let n = grid_size as f64;
    Ok(0.5 + greedy_signs(&dirs) / (2.0 * n))
}
