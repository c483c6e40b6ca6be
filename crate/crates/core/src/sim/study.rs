//! Replicated simulation runs and their summaries.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataModel, SimConfig};
use super::generate::{generate_pairs, CountPair};
use crate::dist::{ExactPmf, TestFamily};
use crate::error::Result;
use crate::procedure::{self, storey_pi0, tally, Method, StepUpResult};
use crate::pvalue::PValueTable;

/// The three proportion-of-nulls estimates, by the p-values they are fed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    Convp,
    Midp,
    Randp,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Convp, Estimator::Midp, Estimator::Randp];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub fdr: f64,
    pub fdp_sd: f64,
    pub power: f64,
    pub tdp_sd: f64,
    pub mean_rejections: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub estimator: Estimator,
    pub mean: f64,
    pub bias: f64,
    pub sd: f64,
}

/// Aggregated results of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub config: SimConfig,
    pub m0: usize,
    pub replications: usize,
    pub methods: Vec<MethodStats>,
    pub estimators: Vec<EstimatorStats>,
    /// Tests with total count zero, summed over replications; they get p = 1.
    pub untestable: u64,
    /// Replications where BH-Midp failed to reject a hypothesis BH rejected.
    pub midp_superset_violations: u64,
}

impl SimSummary {
    pub fn method(&self, method: Method) -> Option<&MethodStats> {
        self.methods.iter().find(|s| s.method == method)
    }

    pub fn estimator(&self, estimator: Estimator) -> Option<&EstimatorStats> {
        self.estimators.iter().find(|s| s.estimator == estimator)
    }

    /// `mean FDP + k sd / sqrt(reps)` for one method.
    pub fn fdr_upper(&self, method: Method, k: f64) -> Option<f64> {
        self.method(method)
            .map(|s| s.fdr + k * s.fdp_sd / (self.replications as f64).sqrt())
    }
}

/// `[l, e, conventional, mid]` per support point, starting at `low`.
struct FloatTable {
    low: u64,
    rows: Vec<[f64; 4]>,
}

/// Float p-value tables keyed by the conditioning total, shared across replications.
struct TableCache {
    family: TestFamily,
    trials: u64,
    tables: RwLock<HashMap<u64, Arc<FloatTable>>>,
}

impl TableCache {
    fn new(family: TestFamily, trials: u64) -> Self {
        Self {
            family,
            trials,
            tables: RwLock::new(HashMap::new()),
        }
    }

    fn get(&self, total: u64) -> Result<Arc<FloatTable>> {
        if let Some(t) = self.tables.read().expect("cache lock").get(&total) {
            return Ok(Arc::clone(t));
        }
        let pmf = match self.family {
            TestFamily::Bt => ExactPmf::binomial_half(total)?,
            TestFamily::Fet => ExactPmf::hypergeometric(self.trials, self.trials, total)?,
        };
        let table = PValueTable::new(&pmf);
        let rows = pmf
            .support()
            .map(|x| table.floats(x).expect("support point"))
            .collect();
        let built = Arc::new(FloatTable {
            low: pmf.low(),
            rows,
        });
        let mut w = self.tables.write().expect("cache lock");
        Ok(Arc::clone(w.entry(total).or_insert(built)))
    }
}

/// Per-test p-values of one replication.
struct RepPValues {
    conventional: Vec<f64>,
    mid: Vec<f64>,
    randomized: Vec<f64>,
    untestable: u64,
}

fn rep_pvalues<R: Rng + ?Sized>(
    pairs: &[CountPair],
    cache: &TableCache,
    rng: &mut R,
) -> Result<RepPValues> {
    let m = pairs.len();
    let mut out = RepPValues {
        conventional: Vec::with_capacity(m),
        mid: Vec::with_capacity(m),
        randomized: Vec::with_capacity(m),
        untestable: 0,
    };
    for pair in pairs {
        // one uniform per test, drawn even for untestable ones to keep streams aligned
        let u: f64 = rng.random();
        let total = pair.total();
        if total == 0 {
            out.untestable += 1;
            out.conventional.push(1.0);
            out.mid.push(1.0);
            out.randomized.push(1.0);
            continue;
        }
        let table = cache.get(total)?;
        let [l, e, conv, mid] = table.rows[(pair.c1 - table.low) as usize];
        out.conventional.push(conv);
        out.mid.push(mid);
        out.randomized.push(l + (1.0 - u) * e);
    }
    Ok(out)
}

struct RepTally {
    fdp: [f64; 5],
    tdp: [f64; 5],
    rejections: [usize; 5],
    pi0_hat: [f64; 3],
    untestable: u64,
    superset_ok: bool,
}

fn run_replication(config: &SimConfig, rep: usize, cache: &TableCache) -> Result<RepTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(rep as u64);
    let pairs = generate_pairs(config, &mut rng)?;
    let labels: Vec<bool> = pairs.iter().map(|p| p.true_null).collect();
    let p = rep_pvalues(&pairs, cache, &mut rng)?;
    let lambda = config.estimator_lambda;
    let pi0_hat = [
        storey_pi0(&p.conventional, lambda)?,
        storey_pi0(&p.mid, lambda)?,
        storey_pi0(&p.randomized, lambda)?,
    ];
    let alpha = config.alpha;
    let results: [StepUpResult; 5] = [
        procedure::bh(&p.conventional, alpha)?,
        procedure::bh(&p.mid, alpha)?,
        procedure::adaptive_bh(&p.conventional, alpha, pi0_hat[0])?,
        procedure::adaptive_bh(&p.mid, alpha, pi0_hat[1])?,
        procedure::adaptive_bh(&p.randomized, alpha, pi0_hat[2])?,
    ];
    let mut out = RepTally {
        fdp: [0.0; 5],
        tdp: [0.0; 5],
        rejections: [0; 5],
        pi0_hat,
        untestable: p.untestable,
        superset_ok: results[0]
            .rejected
            .iter()
            .all(|i| results[1].rejected.binary_search(i).is_ok()),
    };
    for (k, res) in results.iter().enumerate() {
        let t = tally(res, &labels)?;
        out.fdp[k] = t.fdp;
        out.tdp[k] = t.tdp;
        out.rejections[k] = t.rejections;
    }
    Ok(out)
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run every replication of one scenario.
///
/// Replication `r` draws from the ChaCha stream `r` of the scenario seed, so
/// the summary does not depend on thread scheduling.
pub fn run_study(config: &SimConfig) -> Result<SimSummary> {
    config.validate()?;
    let cache = TableCache::new(config.family, config.trials);
    let reps: Vec<RepTally> = (0..config.n_reps)
        .into_par_iter()
        .map(|rep| run_replication(config, rep, &cache))
        .collect::<Result<_>>()?;

    let methods = Method::ALL
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let (fdr, fdp_sd) = mean_sd(reps.iter().map(|r| r.fdp[k]));
            let (power, tdp_sd) = mean_sd(reps.iter().map(|r| r.tdp[k]));
            let (mean_rejections, _) = mean_sd(reps.iter().map(|r| r.rejections[k] as f64));
            MethodStats {
                method,
                fdr,
                fdp_sd,
                power,
                tdp_sd,
                mean_rejections,
            }
        })
        .collect();
    let pi0 = config.m0() as f64 / config.m as f64;
    let estimators = Estimator::ALL
        .iter()
        .enumerate()
        .map(|(k, &estimator)| {
            let (mean, sd) = mean_sd(reps.iter().map(|r| r.pi0_hat[k]));
            EstimatorStats {
                estimator,
                mean,
                bias: mean - pi0,
                sd,
            }
        })
        .collect();
    Ok(SimSummary {
        config: config.clone(),
        m0: config.m0(),
        replications: reps.len(),
        methods,
        estimators,
        untestable: reps.iter().map(|r| r.untestable).sum(),
        midp_superset_violations: reps.iter().filter(|r| !r.superset_ok).count() as u64,
    })
}

pub fn run_studies(configs: &[SimConfig]) -> Result<Vec<SimSummary>> {
    configs.iter().map(run_study).collect()
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    data_model: DataModel,
    family: TestFamily,
    dependence: String,
    m: usize,
    m0: usize,
    pi0: f64,
    alpha: f64,
    replications: usize,
    method: Method,
    fdr: f64,
    fdp_sd: f64,
    power: f64,
    tdp_sd: f64,
    mean_rejections: f64,
    pi0_hat_mean: Option<f64>,
    pi0_hat_bias: Option<f64>,
    pi0_hat_sd: Option<f64>,
}

/// The estimate each method plugs in, if any.
fn plugged_estimator(method: Method) -> Option<Estimator> {
    match method {
        Method::Bh | Method::BhMidp => None,
        Method::Abh => Some(Estimator::Convp),
        Method::AbhMidp => Some(Estimator::Midp),
        Method::Sarp => Some(Estimator::Randp),
    }
}

/// One CSV row per (scenario, method).
///
/// The estimator columns describe the plug-in estimate of adaptive methods
/// and are empty for BH and BH-Midp.
pub fn write_summaries_csv<W: Write>(summaries: &[SimSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in summaries {
        for ms in &s.methods {
            let est = plugged_estimator(ms.method).and_then(|e| s.estimator(e));
            w.serialize(CsvRow {
                scenario: &s.config.name,
                data_model: s.config.data_model,
                family: s.config.family,
                dependence: s.config.dependence.label(),
                m: s.config.m,
                m0: s.m0,
                pi0: s.config.pi0,
                alpha: s.config.alpha,
                replications: s.replications,
                method: ms.method,
                fdr: ms.fdr,
                fdp_sd: ms.fdp_sd,
                power: ms.power,
                tdp_sd: ms.tdp_sd,
                mean_rejections: ms.mean_rejections,
                pi0_hat_mean: est.map(|e| e.mean),
                pi0_hat_bias: est.map(|e| e.bias),
                pi0_hat_sd: est.map(|e| e.sd),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
