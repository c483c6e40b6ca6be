//! Step-up multiple testing procedures and error accounting.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pvalue::PValueRecord;

/// Default ceiling applied to `alpha / pi0_hat` in adaptive procedures.
pub const DEFAULT_LEVEL_CAP: f64 = 1.0 - 1e-9;

/// Default Storey tuning parameter.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Critical constants of a step-up procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct StepUpConfig {
    critical_constants: Vec<f64>,
    pub label: String,
}

impl StepUpConfig {
    /// Validates `0 < tau_1 <= ... <= tau_m <= 1`.
    pub fn new(critical_constants: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(&t) = critical_constants
            .iter()
            .find(|&&t| !(t > 0.0 && t <= 1.0))
        {
            return Err(invalid(format!("critical constant {t} is outside (0, 1]")));
        }
        if critical_constants.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("critical constants must be non-decreasing"));
        }
        Ok(Self {
            critical_constants,
            label: label.into(),
        })
    }

    /// BH constants `tau_i = i * alpha / m`.
    pub fn benjamini_hochberg(m: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha {alpha} must lie in (0, 1)")));
        }
        let taus = (1..=m).map(|i| i as f64 * alpha / m as f64).collect();
        Self::new(taus, "BH")
    }

    pub fn critical_constants(&self) -> &[f64] {
        &self.critical_constants
    }

    pub fn len(&self) -> usize {
        self.critical_constants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.critical_constants.is_empty()
    }
}

/// Outcome of a step-up scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepUpResult {
    /// Number of rejections `eta`, absent when nothing is rejected.
    pub eta: Option<usize>,
    /// Rejected hypotheses as indices into the input, ascending.
    pub rejected: Vec<usize>,
    /// Input indices sorted by p-value (ties by index).
    pub order: Vec<usize>,
    /// The critical constants that were applied.
    pub critical_constants: Vec<f64>,
}

impl StepUpResult {
    pub fn num_rejected(&self) -> usize {
        self.rejected.len()
    }

    /// Rejection flags aligned with the input order.
    pub fn flags(&self, m: usize) -> Vec<bool> {
        let mut flags = vec![false; m];
        for &i in &self.rejected {
            flags[i] = true;
        }
        flags
    }
}

fn validate_pvalues(pvalues: &[f64]) -> Result<()> {
    match pvalues.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(index) => Err(Error::PValueOutOfRange {
            index,
            value: pvalues[index],
        }),
        None => Ok(()),
    }
}

/// Rejects the `eta` smallest p-values, `eta = max{i : P_(i) <= tau_i}`.
pub fn step_up(pvalues: &[f64], config: &StepUpConfig) -> Result<StepUpResult> {
    if pvalues.len() != config.len() {
        return Err(Error::LengthMismatch {
            what: "p-values",
            got: pvalues.len(),
            expected: config.len(),
        });
    }
    validate_pvalues(pvalues)?;
    let taus = config.critical_constants();
    let mut order: Vec<usize> = (0..pvalues.len()).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));

    let eta = (1..=order.len())
        .rev()
        .find(|&i| pvalues[order[i - 1]] <= taus[i - 1]);
    let mut rejected: Vec<usize> = match eta {
        Some(k) => order[..k].to_vec(),
        None => Vec::new(),
    };
    rejected.sort_unstable();
    Ok(StepUpResult {
        eta,
        rejected,
        order,
        critical_constants: taus.to_vec(),
    })
}

/// Benjamini-Hochberg at level `alpha` over `pvalues.len()` tests.
pub fn bh(pvalues: &[f64], alpha: f64) -> Result<StepUpResult> {
    step_up(
        pvalues,
        &StepUpConfig::benjamini_hochberg(pvalues.len(), alpha)?,
    )
}

/// Plug-in estimator of the proportion of true nulls.
pub trait Pi0Estimator {
    fn estimate(&self, pvalues: &[f64]) -> f64;
}

/// `min(1, (1 + #{P > lambda}) / (m (1 - lambda)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoreyPi0 {
    pub lambda: f64,
}

impl StoreyPi0 {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid(format!("lambda {lambda} must lie in (0, 1)")));
        }
        Ok(Self { lambda })
    }
}

impl Default for StoreyPi0 {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl Pi0Estimator for StoreyPi0 {
    fn estimate(&self, pvalues: &[f64]) -> f64 {
        storey_pi0_unchecked(pvalues, self.lambda)
    }
}

fn storey_pi0_unchecked(pvalues: &[f64], lambda: f64) -> f64 {
    let m = pvalues.len().max(1) as f64;
    let above = pvalues.iter().filter(|&&p| p > lambda).count() as f64;
    ((1.0 + above) / (m * (1.0 - lambda))).min(1.0)
}

pub fn storey_pi0(pvalues: &[f64], lambda: f64) -> Result<f64> {
    if pvalues.is_empty() {
        return Err(invalid("pi0 estimation needs at least one p-value"));
    }
    Ok(StoreyPi0::new(lambda)?.estimate(pvalues))
}

/// BH at level `min(alpha / pi0_hat, cap)`.
pub fn adaptive_bh(pvalues: &[f64], alpha: f64, pi0_hat: f64) -> Result<StepUpResult> {
    adaptive_bh_capped(pvalues, alpha, pi0_hat, DEFAULT_LEVEL_CAP)
}

pub fn adaptive_bh_capped(
    pvalues: &[f64],
    alpha: f64,
    pi0_hat: f64,
    cap: f64,
) -> Result<StepUpResult> {
    if !(pi0_hat > 0.0 && pi0_hat <= 1.0) {
        return Err(invalid(format!("pi0 estimate {pi0_hat} must lie in (0, 1]")));
    }
    if !(cap > 0.0 && cap < 1.0) {
        return Err(invalid(format!("level cap {cap} must lie in (0, 1)")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha {alpha} must lie in (0, 1)")));
    }
    bh(pvalues, (alpha / pi0_hat).min(cap))
}

/// Outcome of a randomized-p adaptive run: the uniforms, p-values and estimate used.
#[derive(Debug, Clone, PartialEq)]
pub struct SarpOutcome {
    pub result: StepUpResult,
    pub pi0_hat: f64,
    pub randomized: Vec<f64>,
}

/// Storey-style adaptive BH on randomized p-values.
///
/// One uniform per test is drawn from a ChaCha stream seeded with `seed`.
pub fn sarp(
    records: &[PValueRecord],
    alpha: f64,
    lambda: f64,
    seed: u64,
) -> Result<SarpOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniforms: Vec<f64> = (0..records.len()).map(|_| rng.random::<f64>()).collect();
    sarp_with_uniforms(records, alpha, lambda, &uniforms)
}

/// [`sarp`] with caller-supplied uniforms, one per record.
pub fn sarp_with_uniforms(
    records: &[PValueRecord],
    alpha: f64,
    lambda: f64,
    uniforms: &[f64],
) -> Result<SarpOutcome> {
    if uniforms.len() != records.len() {
        return Err(Error::LengthMismatch {
            what: "uniforms",
            got: uniforms.len(),
            expected: records.len(),
        });
    }
    let randomized = records
        .iter()
        .zip(uniforms)
        .map(|(r, &u)| r.randomized(u))
        .collect::<Result<Vec<_>>>()?;
    sarp_on_randomized(randomized, alpha, lambda)
}

pub(crate) fn sarp_on_randomized(
    randomized: Vec<f64>,
    alpha: f64,
    lambda: f64,
) -> Result<SarpOutcome> {
    if randomized.is_empty() {
        return Ok(SarpOutcome {
            result: bh(&[], alpha)?,
            pi0_hat: 1.0,
            randomized,
        });
    }
    let pi0_hat = storey_pi0(&randomized, lambda)?;
    let result = adaptive_bh(&randomized, alpha, pi0_hat)?;
    Ok(SarpOutcome {
        result,
        pi0_hat,
        randomized,
    })
}

/// False and true discovery accounting against known labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTally {
    pub false_discoveries: usize,
    pub rejections: usize,
    pub true_discoveries: usize,
    pub false_nulls: usize,
    pub fdp: f64,
    pub tdp: f64,
}

/// `true_null[i]` marks hypothesis `i` as a true null.
pub fn tally(result: &StepUpResult, true_null: &[bool]) -> Result<ErrorTally> {
    if true_null.len() != result.order.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            got: true_null.len(),
            expected: result.order.len(),
        });
    }
    let rejections = result.rejected.len();
    let false_discoveries = result.rejected.iter().filter(|&&i| true_null[i]).count();
    let true_discoveries = rejections - false_discoveries;
    let false_nulls = true_null.iter().filter(|&&t| !t).count();
    Ok(ErrorTally {
        false_discoveries,
        rejections,
        true_discoveries,
        false_nulls,
        fdp: false_discoveries as f64 / rejections.max(1) as f64,
        tdp: true_discoveries as f64 / false_nulls.max(1) as f64,
    })
}

/// The five procedures compared throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// BH on conventional p-values.
    #[serde(rename = "BH")]
    Bh,
    /// BH on mid p-values.
    #[serde(rename = "BH-Midp")]
    BhMidp,
    /// Adaptive BH on conventional p-values.
    #[serde(rename = "aBH")]
    Abh,
    /// Adaptive BH on mid p-values.
    #[serde(rename = "aBH-Midp")]
    AbhMidp,
    /// Storey-style adaptive BH on randomized p-values.
    #[serde(rename = "SARP")]
    Sarp,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Bh,
        Method::BhMidp,
        Method::Abh,
        Method::AbhMidp,
        Method::Sarp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bh => "BH",
            Method::BhMidp => "BH-Midp",
            Method::Abh => "aBH",
            Method::AbhMidp => "aBH-Midp",
            Method::Sarp => "SARP",
        }
    }

    pub fn is_randomized(self) -> bool {
        self == Method::Sarp
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "bh" => Ok(Method::Bh),
            "bh-midp" => Ok(Method::BhMidp),
            "abh" => Ok(Method::Abh),
            "abh-midp" => Ok(Method::AbhMidp),
            "sarp" => Ok(Method::Sarp),
            _ => Err(invalid(format!("unknown method `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pvalue::{bt_pvalues, pvalue_record};
    use crate::ExactPmf;
    use num_rational::BigRational;
    use proptest::prelude::*;

    #[test]
    fn step_up_examples() {
        let cfg = StepUpConfig::new(vec![0.05 / 3.0, 0.10 / 3.0, 0.05], "x").unwrap();
        let r = step_up(&[0.01, 0.02, 0.2], &cfg).unwrap();
        assert_eq!(r.eta, Some(2));
        assert_eq!(r.rejected, vec![0, 1]);

        let cfg = StepUpConfig::new(vec![0.2, 0.5, 0.9], "x").unwrap();
        let r = step_up(&[1.0, 1.0, 1.0], &cfg).unwrap();
        assert_eq!(r.eta, None);
        assert!(r.rejected.is_empty());
        let r = step_up(&[0.0, 0.0, 0.0], &cfg).unwrap();
        assert_eq!(r.rejected, vec![0, 1, 2]);
    }

    #[test]
    fn step_up_errors() {
        let cfg = StepUpConfig::new(vec![0.1, 0.2], "x").unwrap();
        assert!(matches!(
            step_up(&[0.1], &cfg),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            step_up(&[0.1, 1.2], &cfg),
            Err(Error::PValueOutOfRange { index: 1, .. })
        ));
        assert!(StepUpConfig::new(vec![0.2, 0.1], "x").is_err());
        assert!(StepUpConfig::new(vec![0.0, 0.1], "x").is_err());
    }

    #[test]
    fn bh_examples() {
        assert_eq!(bh(&[0.01, 0.02, 0.2], 0.05).unwrap().num_rejected(), 2);
        assert_eq!(bh(&[0.04], 0.05).unwrap().num_rejected(), 1);
        assert_eq!(bh(&[0.06], 0.05).unwrap().num_rejected(), 0);
    }

    #[test]
    fn storey_examples() {
        let mut p = vec![0.1; 8];
        p.extend([0.7, 0.9]);
        assert!((storey_pi0(&p, 0.5).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(storey_pi0(&[0.9; 10], 0.5).unwrap(), 1.0);
        assert!((storey_pi0(&[0.1; 4], 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!(storey_pi0(&[], 0.5).is_err());
        assert!(storey_pi0(&[0.1], 1.0).is_err());
    }

    #[test]
    fn adaptive_examples() {
        let p = [0.03, 0.9];
        let r = adaptive_bh(&p, 0.05, 0.5).unwrap();
        assert_eq!(r.critical_constants, vec![0.05, 0.1]);
        assert_eq!(r.rejected, vec![0]);
        let q = [0.01, 0.02, 0.2, 0.04];
        assert_eq!(adaptive_bh(&q, 0.05, 1.0).unwrap(), bh(&q, 0.05).unwrap());
        // alpha / pi0 above one is capped just below one
        let r = adaptive_bh(&[1.0], 0.5, 0.4).unwrap();
        assert_eq!(r.critical_constants, vec![DEFAULT_LEVEL_CAP]);
        assert!(r.rejected.is_empty());
    }

    #[test]
    fn sarp_half_uniforms_equal_mid_adaptive() {
        let records: Vec<_> = [(0, 4), (2, 2), (0, 6), (1, 9), (3, 5)]
            .iter()
            .map(|&(a, b)| bt_pvalues(a, b).unwrap())
            .collect();
        let out = sarp_with_uniforms(&records, 0.05, 0.5, &[0.5; 5]).unwrap();
        let mids: Vec<f64> = records.iter().map(PValueRecord::mid_f64).collect();
        let pi0 = storey_pi0(&mids, 0.5).unwrap();
        assert_eq!(out.randomized, mids);
        assert_eq!(out.result, adaptive_bh(&mids, 0.05, pi0).unwrap());
    }

    #[test]
    fn sarp_tiny_e_rejects() {
        // the rarer outcome of a (1, 99)/100 law has l = 0, e = 0.01
        let pmf = ExactPmf::from_weights(0, vec![1u32.into(), 99u32.into()]).unwrap();
        let rec = pvalue_record(&pmf, 0).unwrap();
        assert_eq!(rec.e, BigRational::new(1.into(), 100.into()));
        for seed in 0..20 {
            let out = sarp(std::slice::from_ref(&rec), 0.05, 0.5, seed).unwrap();
            assert_eq!(out.result.rejected, vec![0]);
        }
    }

    #[test]
    fn sarp_is_deterministic() {
        let records: Vec<_> = (0..30).map(|i| bt_pvalues(i % 7, 3).unwrap()).collect();
        let a = sarp(&records, 0.05, 0.5, 99).unwrap();
        let b = sarp(&records, 0.05, 0.5, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tally_examples() {
        let r = StepUpResult {
            eta: Some(2),
            rejected: vec![0, 1],
            order: vec![0, 1, 2],
            critical_constants: vec![0.1; 3],
        };
        let t = tally(&r, &[true, false, false]).unwrap();
        assert_eq!((t.false_discoveries, t.rejections), (1, 2));
        assert_eq!(t.fdp, 0.5);
        assert_eq!(t.tdp, 0.5);

        let none = bh(&[0.9, 0.9], 0.05).unwrap();
        let t = tally(&none, &[false, true]).unwrap();
        assert_eq!((t.fdp, t.tdp), (0.0, 0.0));

        let all = bh(&[0.0, 0.0, 0.9], 0.05).unwrap();
        let t = tally(&all, &[false, false, true]).unwrap();
        assert_eq!((t.fdp, t.tdp), (0.0, 1.0));
        assert!(tally(&all, &[true]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
    }

    fn pvals(max: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            prop_oneof![0.0..=1.0f64, prop::sample::select(vec![0.0, 0.01, 0.05, 1.0])],
            1..max,
        )
    }

    proptest! {
        #[test]
        fn enlarging_constants_never_shrinks(p in pvals(30), bump in 0.0..0.3f64, alpha in 0.01..0.5f64) {
            let m = p.len();
            let base = StepUpConfig::benjamini_hochberg(m, alpha).unwrap();
            let bigger: Vec<f64> = base.critical_constants().iter().map(|t| (t + bump).min(1.0)).collect();
            let bigger = StepUpConfig::new(bigger, "bigger").unwrap();
            let a = step_up(&p, &base).unwrap();
            let b = step_up(&p, &bigger).unwrap();
            prop_assert!(a.rejected.iter().all(|i| b.rejected.contains(i)));
        }

        #[test]
        fn permutation_equivariant(p in pvals(25), seed in any::<u64>(), alpha in 0.01..0.5f64) {
            use rand::seq::SliceRandom;
            let mut perm: Vec<usize> = (0..p.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
            let a = bh(&p, alpha).unwrap();
            let b = bh(&permuted, alpha).unwrap();
            let mut mapped: Vec<usize> = b.rejected.iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(a.rejected, mapped);
        }

        #[test]
        fn step_up_result_invariants(p in pvals(30), alpha in 0.01..0.5f64) {
            let r = bh(&p, alpha).unwrap();
            match r.eta {
                Some(k) => {
                    prop_assert_eq!(r.rejected.len(), k);
                    let tau = r.critical_constants[k - 1];
                    prop_assert!(r.rejected.iter().all(|&i| p[i] <= tau));
                }
                None => prop_assert!(r.rejected.is_empty()),
            }
        }

        #[test]
        fn adaptive_with_unit_pi0_is_bh(p in pvals(30), alpha in 0.01..0.5f64) {
            prop_assert_eq!(adaptive_bh(&p, alpha, 1.0).unwrap(), bh(&p, alpha).unwrap());
        }
    }
}
