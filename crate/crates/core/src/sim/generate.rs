//! Paired count generators for the simulation study.

use rand::Rng;
use rand_distr::{Distribution, Pareto, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, DiscreteCDF, Normal};

use super::config::{DataModel, Dependence, SimConfig};
use crate::error::{invalid, Result};

/// Counts of one hypothesis and whether it is a true null.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub c1: u64,
    pub c2: u64,
    pub true_null: bool,
}

impl CountPair {
    pub fn total(&self) -> u64 {
        self.c1 + self.c2
    }
}

/// Pareto means: location 3, shape 8.
pub const PARETO_LOCATION: f64 = 3.0;
pub const PARETO_SHAPE: f64 = 8.0;
/// Range of the mean ratio of a false null under Poisson data.
pub const POISSON_RATIO_RANGE: (f64, f64) = (1.5, 6.0);
/// Range of the shared success probability of a true null under binomial data.
pub const BINOMIAL_NULL_RANGE: (f64, f64) = (0.15, 0.2);
/// Success probabilities of a false null under binomial data.
pub const BINOMIAL_ALTERNATIVE: (f64, f64) = (0.2, 0.6);

/// Uniform scores `u = Phi(z)` with `z` equicorrelated (`rho`) within blocks.
///
/// Tests `0..m/blocks` form the first block, and so on. Each block shares one
/// factor: `z_i = sqrt(rho) g_0 + sqrt(1 - rho) g_i`.
pub fn gaussian_copula_block<R: Rng + ?Sized>(
    m: usize,
    rho: f64,
    blocks: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("block correlation {rho} must lie in [0, 1)")));
    }
    if blocks == 0 || !m.is_multiple_of(blocks) {
        return Err(invalid(format!("{blocks} blocks do not divide m = {m}")));
    }
    let phi = Normal::standard();
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let size = m / blocks;
    let mut u = Vec::with_capacity(m);
    for _ in 0..blocks {
        let g0: f64 = rng.sample(StandardNormal);
        for _ in 0..size {
            let g: f64 = rng.sample(StandardNormal);
            u.push(phi.cdf(a * g0 + b * g));
        }
    }
    Ok(u)
}

/// Keep quantile inversion away from the endpoints, where it would return the
/// unbounded maximum of a Poisson law.
fn open_unit(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn poisson_quantile(mean: f64, u: f64) -> u64 {
    statrs::distribution::Poisson::new(mean)
        .expect("positive Poisson mean")
        .inverse_cdf(open_unit(u))
}

fn binomial_quantile(theta: f64, n: u64, u: f64) -> u64 {
    statrs::distribution::Binomial::new(theta, n)
        .expect("probability in [0, 1]")
        .inverse_cdf(open_unit(u))
}

fn copula_scores<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Option<Vec<f64>>> {
    match config.dependence {
        Dependence::Independent => Ok(None),
        Dependence::Block { rho, blocks } => {
            gaussian_copula_block(config.m, rho, blocks, rng).map(Some)
        }
    }
}

/// Poisson pairs: the first `m0` tests share their means.
///
/// Under block dependence both counts of test `i` are the quantiles of their
/// own Poisson laws at the same score `u_i`.
pub fn gen_poisson_pairs<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<Vec<CountPair>> {
    if config.data_model != DataModel::Poisson {
        return Err(invalid("gen_poisson_pairs needs the poisson data model"));
    }
    let m0 = config.m0();
    let pareto = Pareto::new(PARETO_LOCATION, PARETO_SHAPE).expect("valid Pareto");
    let theta1: Vec<f64> = (0..config.m).map(|_| pareto.sample(rng)).collect();
    let theta2: Vec<f64> = theta1
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            if i < m0 {
                t
            } else {
                t * rng.random_range(POISSON_RATIO_RANGE.0..POISSON_RATIO_RANGE.1)
            }
        })
        .collect();
    let scores = copula_scores(config, rng)?;
    Ok((0..config.m)
        .map(|i| {
            let (c1, c2) = match &scores {
                Some(u) => (
                    poisson_quantile(theta1[i], u[i]),
                    poisson_quantile(theta2[i], u[i]),
                ),
                None => (draw_poisson(theta1[i], rng), draw_poisson(theta2[i], rng)),
            };
            CountPair {
                c1,
                c2,
                true_null: i < m0,
            }
        })
        .collect())
}

fn draw_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    rand_distr::Poisson::new(mean).expect("positive Poisson mean").sample(rng) as u64
}

fn draw_binomial<R: Rng + ?Sized>(n: u64, theta: f64, rng: &mut R) -> u64 {
    rand_distr::Binomial::new(n, theta).expect("probability in [0, 1]").sample(rng)
}

/// Binomial pairs with `config.trials` trials per group.
pub fn gen_binomial_pairs<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<Vec<CountPair>> {
    if config.data_model != DataModel::Binomial {
        return Err(invalid("gen_binomial_pairs needs the binomial data model"));
    }
    let m0 = config.m0();
    let n = config.trials;
    let thetas: Vec<(f64, f64)> = (0..config.m)
        .map(|i| {
            if i < m0 {
                let t = rng.random_range(BINOMIAL_NULL_RANGE.0..BINOMIAL_NULL_RANGE.1);
                (t, t)
            } else {
                BINOMIAL_ALTERNATIVE
            }
        })
        .collect();
    let scores = copula_scores(config, rng)?;
    Ok(thetas
        .iter()
        .enumerate()
        .map(|(i, &(t1, t2))| {
            let (c1, c2) = match &scores {
                Some(u) => (binomial_quantile(t1, n, u[i]), binomial_quantile(t2, n, u[i])),
                None => (draw_binomial(n, t1, rng), draw_binomial(n, t2, rng)),
            };
            CountPair {
                c1,
                c2,
                true_null: i < m0,
            }
        })
        .collect())
}

/// Dispatch on `config.data_model`.
pub fn generate_pairs<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Vec<CountPair>> {
    match config.data_model {
        DataModel::Poisson => gen_poisson_pairs(config, rng),
        DataModel::Binomial => gen_binomial_pairs(config, rng),
    }
}
