//! Cross-entropy search for measurement settings with small `Omega_bar_L`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{standard_basis, Basis, BasisSet};
use crate::bounds::max_tr_x2_on_table;
use crate::error::{Error, Result};
use crate::numerics::{herm_expi, HermMatrix};
use crate::omega::{omega_on_table, OmegaOptions, VectorTable};
use crate::states::{Family, GeneratorBasis};
use crate::thresholds::{family_l, threshold_from_omega_bar, CAP_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CEMConfig {
    pub population: usize,
    pub elite_fraction: f64,
    pub smoothing: f64,
    pub max_iters: usize,
    pub init_stddev: f64,
    pub seed: u64,
    pub stall_patience: usize,
    pub restarts: usize,
    /// Pin the first basis to the standard basis; `Omega` is invariant under
    /// a common unitary, so this only removes a redundant gauge.
    pub fix_first_basis: bool,
    /// Score everyone with the `Lambda` relaxation first and run the exact
    /// solver on the better half only.
    pub screening: bool,
}

impl Default for CEMConfig {
    fn default() -> Self {
        CEMConfig {
            population: 200,
            elite_fraction: 0.1,
            smoothing: 0.7,
            max_iters: 300,
            init_stddev: 1.0,
            seed: 0,
            stall_patience: 30,
            restarts: 3,
            fix_first_basis: true,
            screening: true,
        }
    }
}

impl CEMConfig {
    pub fn elite_count(&self) -> usize {
        (self.population as f64 * self.elite_fraction).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 10 {
            return Err(Error::validation(format!("population {} < 10", self.population)));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction < 1.0) {
            return Err(Error::validation("elite_fraction must lie in (0, 1)"));
        }
        if self.elite_count() < 2 {
            return Err(Error::validation("elite set must hold at least 2 candidates"));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::validation("smoothing must lie in (0, 1]"));
        }
        if !(self.init_stddev >= 0.0 && self.init_stddev.is_finite()) {
            return Err(Error::validation("init_stddev must be finite and nonnegative"));
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::validation("max_iters and restarts must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CemObjective {
    OmegaBar,
    TrX2Relaxation,
}

#[derive(Clone, Debug)]
pub struct CEMResult {
    pub best_basis_set: BasisSet,
    /// Exact `Omega_bar_L` of `best_basis_set`.
    pub best_omega_bar: f64,
    /// Best-so-far objective after each generation, across restarts.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub best_params: Vec<f64>,
}

/// Columns of `exp(i sum_mu params_mu pi_mu)`.
pub fn parametrize_basis(params: &[f64], gens: &GeneratorBasis) -> Result<Basis> {
    if params.len() != gens.len() {
        return Err(Error::DimensionMismatch {
            expected: gens.len(),
            found: params.len(),
        });
    }
    if params.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("non-finite basis parameters"));
    }
    let h = HermMatrix::new(gens.combine(params))?;
    Basis::from_columns(herm_expi(&h))
}

fn build_set(params: &[f64], gens: &GeneratorBasis, n: usize, fix_first: bool) -> Result<BasisSet> {
    let k = gens.len();
    let mut bases = Vec::with_capacity(n);
    if fix_first {
        bases.push(standard_basis(gens.dim())?);
    }
    for chunk in params.chunks(k) {
        bases.push(parametrize_basis(chunk, gens)?);
    }
    BasisSet::new(bases)
}

/// SplitMix64 finalizer, used to derive independent per-candidate seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn candidate_rng(seed: u64, restart: usize, generation: usize, index: usize) -> ChaCha8Rng {
    let s = mix(mix(mix(seed) ^ restart as u64) ^ generation as u64) ^ index as u64;
    ChaCha8Rng::seed_from_u64(mix(s))
}

struct Problem<'a> {
    gens: &'a GeneratorBasis,
    n: usize,
    l: usize,
    fix_first: bool,
    objective: CemObjective,
    screening: bool,
}

impl Problem<'_> {
    fn table(&self, params: &[f64]) -> Result<VectorTable> {
        Ok(VectorTable::new(&build_set(params, self.gens, self.n, self.fix_first)?))
    }

    fn exact(&self, table: &VectorTable) -> f64 {
        omega_on_table(table, self.l, &OmegaOptions::default()).value_bar
    }

    fn relaxed(&self, table: &VectorTable) -> f64 {
        max_tr_x2_on_table(table, self.l).sqrt() / self.l as f64
    }

    /// Scores in candidate order; unscreened-out candidates get `+inf`.
    fn score(&self, population: &[Vec<f64>]) -> Result<Vec<f64>> {
        let tables = population
            .par_iter()
            .map(|p| self.table(p))
            .collect::<Result<Vec<_>>>()?;
        match (self.objective, self.screening) {
            (CemObjective::TrX2Relaxation, _) => Ok(tables.par_iter().map(|t| self.relaxed(t)).collect()),
            (CemObjective::OmegaBar, false) => Ok(tables.par_iter().map(|t| self.exact(t)).collect()),
            (CemObjective::OmegaBar, true) => {
                let relaxed: Vec<f64> = tables.par_iter().map(|t| self.relaxed(t)).collect();
                let mut order: Vec<usize> = (0..tables.len()).collect();
                order.sort_by(|&a, &b| relaxed[a].total_cmp(&relaxed[b]).then(a.cmp(&b)));
                let keep = tables.len().div_ceil(2);
                let mut scores = vec![f64::INFINITY; tables.len()];
                let exact: Vec<(usize, f64)> = order[..keep].par_iter().map(|&i| (i, self.exact(&tables[i]))).collect();
                for (i, v) in exact {
                    scores[i] = v;
                }
                Ok(scores)
            }
        }
    }
}

/// Minimizes `Omega_bar_L` (or its `Lambda` relaxation) over `n` bases in dimension `d`.
pub fn cem_minimize(d: usize, n: usize, l: usize, config: &CEMConfig, objective: CemObjective) -> Result<CEMResult> {
    config.validate()?;
    if n < 1 || l < 1 || l > n * d {
        return Err(Error::out_of_range("L", l, 1, n * d));
    }
    let gens = GeneratorBasis::new(d)?;
    let fix_first = config.fix_first_basis;
    let free = if fix_first { n - 1 } else { n };
    let dim = free * gens.len();
    let problem = Problem {
        gens: &gens,
        n,
        l,
        fix_first,
        objective,
        screening: config.screening,
    };
    let elite = config.elite_count();
    let alpha = config.smoothing;

    let mut best_params = vec![0.0; dim];
    let mut best = f64::INFINITY;
    let mut history = Vec::new();
    let mut evaluations = 0usize;

    for restart in 0..config.restarts {
        let mut mean = vec![0.0; dim];
        let mut std = vec![config.init_stddev; dim];
        let mut restart_best = f64::INFINITY;
        let mut restart_best_params = mean.clone();
        let mut stall = 0;
        for generation in 0..config.max_iters {
            let mut population: Vec<Vec<f64>> = (0..config.population)
                .into_par_iter()
                .map(|k| {
                    let mut rng = candidate_rng(config.seed, restart, generation, k);
                    (0..dim)
                        .map(|j| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            mean[j] + std[j] * z
                        })
                        .collect()
                })
                .collect();
            if generation > 0 {
                // Elitism: the restart's incumbent always competes.
                population[config.population - 1] = restart_best_params.clone();
            }
            let scores = problem.score(&population)?;
            evaluations += population.len();

            let mut order: Vec<usize> = (0..population.len()).collect();
            order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
            let top = order[0];
            if scores[top] < restart_best - 1e-12 {
                restart_best = scores[top];
                restart_best_params = population[top].clone();
                stall = 0;
            } else {
                stall += 1;
            }
            if restart_best < best - 1e-12 {
                best = restart_best;
                best_params = restart_best_params.clone();
            }
            history.push(best);

            for j in 0..dim {
                let vals: Vec<f64> = order[..elite].iter().map(|&i| population[i][j]).collect();
                let m = vals.iter().sum::<f64>() / elite as f64;
                let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / elite as f64;
                mean[j] = alpha * m + (1.0 - alpha) * mean[j];
                std[j] = alpha * var.sqrt() + (1.0 - alpha) * std[j];
            }
            if stall >= config.stall_patience {
                log::debug!("restart {restart}: stalled at generation {generation}");
                break;
            }
        }
        log::info!("cem restart {restart}: best {restart_best:.12}");
    }

    let best_basis_set = build_set(&best_params, &gens, n, fix_first)?;
    let verified = crate::omega::omega_exact(&best_basis_set, l)?.value_bar;
    if objective == CemObjective::OmegaBar && (verified - best).abs() > 1e-9 {
        return Err(Error::Computation(format!(
            "re-verification mismatch: search {best}, exact {verified}"
        )));
    }
    if verified < 1.0 / d as f64 - 1e-12 {
        return Err(Error::Computation(format!(
            "Omega_bar {verified} below the trace floor 1/{d}"
        )));
    }
    Ok(CEMResult {
        best_basis_set,
        best_omega_bar: verified,
        history,
        evaluations,
        best_params,
    })
}

#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub n: usize,
    pub l: usize,
    pub omega_bar: f64,
    pub threshold: f64,
    pub capped: bool,
    pub settings: BasisSet,
}

/// Best-found thresholds for each `N`, with the settings that reach them.
pub fn threshold_curve(
    family: Family,
    d: usize,
    n_range: impl IntoIterator<Item = usize>,
    config: &CEMConfig,
) -> Result<Vec<CurvePoint>> {
    n_range
        .into_iter()
        .map(|n| {
            let l = family_l(family, d, n);
            let res = cem_minimize(d, n, l, config, CemObjective::OmegaBar)?;
            let threshold = threshold_from_omega_bar(family, d, res.best_omega_bar)?;
            Ok(CurvePoint {
                n,
                l,
                omega_bar: res.best_omega_bar,
                threshold,
                capped: threshold >= 1.0 - CAP_TOL,
                settings: res.best_basis_set,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::overlap_matrix;
    use crate::numerics::{unitarity_deviation, CMatrix, C64};
    use rand::Rng;

    fn small_config(seed: u64) -> CEMConfig {
        CEMConfig {
            population: 40,
            max_iters: 40,
            stall_patience: 10,
            restarts: 1,
            seed,
            ..CEMConfig::default()
        }
    }

    #[test]
    fn zero_params_give_standard_basis() {
        let g = GeneratorBasis::new(3).unwrap();
        let b = parametrize_basis(&[0.0; 8], &g).unwrap();
        assert!((b.matrix() - CMatrix::identity(3, 3)).norm() < 1e-14);
        assert!(parametrize_basis(&[0.0; 3], &g).is_err());
    }

    #[test]
    fn parametrization_round_trip() {
        let g = GeneratorBasis::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-0.3..0.3)).collect();
            let u = parametrize_basis(&x, &g).unwrap();
            assert!(unitarity_deviation(u.matrix()) < 1e-9);
            // Principal logarithm through the Schur form of a normal matrix.
            let schur = u.matrix().clone().schur();
            let (q, t) = schur.unpack();
            let phases = CMatrix::from_fn(3, 3, |i, j| {
                if i == j {
                    C64::new(t[(i, i)].arg(), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let h = &q * phases * q.adjoint();
            let back = g.coefficients(&h);
            let rebuilt = parametrize_basis(&back, &g).unwrap();
            assert!((rebuilt.matrix() - u.matrix()).norm() < 1e-9);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn small_params_stay_near_identity() {
        let g = GeneratorBasis::new(4).unwrap();
        let x: Vec<f64> = (0..15).map(|k| 1e-4 * (k as f64 - 7.0)).collect();
        let u = parametrize_basis(&x, &g).unwrap();
        let dev = (overlap_matrix(&standard_basis(4).unwrap(), &u).unwrap() - CMatrix::identity(4, 4)).norm();
        let scale: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(dev < 4.0 * scale, "{dev} vs {scale}");
    }

    #[test]
    fn config_validation() {
        assert!(CEMConfig::default().validate().is_ok());
        assert!(CEMConfig {
            population: 5,
            ..CEMConfig::default()
        }
        .validate()
        .is_err());
        assert!(CEMConfig {
            population: 10,
            elite_fraction: 0.1,
            ..CEMConfig::default()
        }
        .validate()
        .is_err());
        assert!(CEMConfig {
            smoothing: 0.0,
            ..CEMConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn degenerate_population_is_fixed_point() {
        let config = CEMConfig {
            init_stddev: 0.0,
            fix_first_basis: false,
            ..small_config(1)
        };
        let res = cem_minimize(3, 2, 2, &config, CemObjective::OmegaBar).unwrap();
        // Every candidate is the zero vector: two copies of the standard basis.
        assert!((res.best_omega_bar - 1.0).abs() < 1e-12);
        assert!(res.best_params.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn qubit_pair_reaches_mub_value() {
        let res = cem_minimize(2, 2, 2, &small_config(3), CemObjective::OmegaBar).unwrap();
        let mub = (1.0 + std::f64::consts::FRAC_1_SQRT_2) / 2.0;
        assert!(res.best_omega_bar <= mub + 5e-3, "{}", res.best_omega_bar);
        assert!(res.best_omega_bar >= mub - 1e-9);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let config = small_config(9);
        let a = cem_minimize(2, 3, 3, &config, CemObjective::OmegaBar).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| cem_minimize(2, 3, 3, &config, CemObjective::OmegaBar).unwrap());
        assert_eq!(
            a.history.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.history.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.best_params, b.best_params);
    }

    #[test]
    fn relaxation_objective_runs() {
        let res = cem_minimize(2, 2, 2, &small_config(5), CemObjective::TrX2Relaxation).unwrap();
        assert!(res.best_omega_bar >= 0.5 && res.best_omega_bar <= 1.0);
    }
}
