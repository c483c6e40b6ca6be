use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::TestFamily;
use crate::error::{Error, Result};

/// How paired counts are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataModel {
    /// Poisson counts with Pareto-distributed means; tested with BT.
    Poisson,
    /// Binomial counts with `trials` trials per group.
    Binomial,
}

/// Dependence between tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dependence {
    #[default]
    Independent,
    /// Equicorrelated Gaussian copula within `blocks` equal-sized blocks.
    Block { rho: f64, blocks: usize },
}

impl Dependence {
    pub fn label(&self) -> String {
        match self {
            Dependence::Independent => "independent".into(),
            Dependence::Block { rho, blocks } => format!("block(rho={rho},blocks={blocks})"),
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}
fn default_reps() -> usize {
    250
}
fn default_lambda() -> f64 {
    crate::procedure::DEFAULT_LAMBDA
}
fn default_trials() -> u64 {
    20
}

/// One simulation scenario.
///
/// In a TOML file each scenario is a `[[scenario]]` table:
///
/// ```toml
/// [[scenario]]
/// name = "binomial-half-null"
/// m = 1000
/// pi0 = 0.5
/// data_model = "binomial"
/// family = "fet"
/// seed = 7
/// dependence = { kind = "block", rho = 0.1, blocks = 50 }
/// ```
///
/// `alpha` (0.05), `n_reps` (250), `estimator_lambda` (0.5), `trials` (20)
/// and `dependence` (independent) are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub name: String,
    pub m: usize,
    pub pi0: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    pub data_model: DataModel,
    pub family: TestFamily,
    #[serde(default)]
    pub dependence: Dependence,
    pub seed: u64,
    #[serde(default = "default_lambda")]
    pub estimator_lambda: f64,
    /// Trials per group for binomial data, and the FET group sizes.
    #[serde(default = "default_trials")]
    pub trials: u64,
}

impl SimConfig {
    pub fn new(m: usize, pi0: f64, data_model: DataModel, family: TestFamily, seed: u64) -> Self {
        Self {
            name: String::new(),
            m,
            pi0,
            alpha: default_alpha(),
            n_reps: default_reps(),
            data_model,
            family,
            dependence: Dependence::Independent,
            seed,
            estimator_lambda: default_lambda(),
            trials: default_trials(),
        }
    }

    /// Number of true nulls, `round(m pi0)`.
    pub fn m0(&self) -> usize {
        (self.m as f64 * self.pi0).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.pi0) {
            return bad(format!("pi0 {} must lie in [0, 1]", self.pi0));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} must lie in (0, 1)", self.alpha));
        }
        if self.n_reps == 0 {
            return bad("n_reps must be positive".into());
        }
        if !(self.estimator_lambda > 0.0 && self.estimator_lambda < 1.0) {
            return bad(format!("estimator_lambda {} must lie in (0, 1)", self.estimator_lambda));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.family == TestFamily::Fet && self.data_model == DataModel::Poisson {
            return bad("Fisher's exact test needs binomial data with known group sizes".into());
        }
        if let Dependence::Block { rho, blocks } = self.dependence {
            if !(0.0..1.0).contains(&rho) {
                return bad(format!("block correlation {rho} must lie in [0, 1)"));
            }
            if blocks == 0 || !self.m.is_multiple_of(blocks) {
                return bad(format!("{blocks} blocks do not divide m = {}", self.m));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    scenario: Vec<SimConfig>,
}

/// Parse a TOML document holding one or more `[[scenario]]` tables.
pub fn parse_scenarios(text: &str) -> Result<Vec<SimConfig>> {
    let file: SimFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.scenario.is_empty() {
        return Err(Error::Config("no [[scenario]] tables".into()));
    }
    for (k, s) in file.scenario.iter().enumerate() {
        s.validate()
            .map_err(|e| Error::Config(format!("scenario {}: {e}", k + 1)))?;
    }
    Ok(file.scenario)
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<SimConfig>> {
    parse_scenarios(&std::fs::read_to_string(path)?)
}
