//! Conservativeness conditions and FDR upper bounds for step-up procedures
//! applied to discrete p-values.
//!
//! All of these are sufficient conditions derived under independence of the
//! p-values. [`crate::oracle`] computes the exact FDR for small instances and
//! is used to check them.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dist::{DistKind, ExactPmf, TestFamily};
use crate::error::{invalid, Result};
use crate::exact;
use crate::pvalue::{
    boundary_step_mass_exact, boundary_y_exact, pvalue_support, Flavor, PValueSupport,
};

/// Spacing of the grid searched by [`calibrate_alpha`].
pub const CALIBRATION_RESOLUTION: f64 = 1e-6;

/// Which condition a [`BoundReport`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `max_r max_{i in I0} F_i(tau_r) / r <= alpha / m0`.
    SuperUniformity,
    /// Smallest-total binomial test: `f_{i0} <= (1 - pi0) alpha / m0`.
    BinomialSmallestTotal,
    /// Smallest-margin Fisher test: `f_{i0} <= (1 - pi0) alpha / m0`.
    FisherSmallestMargin,
    /// `pi0 alpha + m0 f_{i0} <= alpha`.
    ProportionBound,
    /// `pi0 alpha / 2 + sum_i max_r f_i(y_i(tau_r) + 1) / r <= alpha`.
    TwoPartBound,
}

/// A named diagnostic value attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub value: f64,
}

impl Witness {
    fn new(label: impl Into<String>, value: f64) -> Self {
        Self {
            label: label.into(),
            value,
        }
    }
}

/// Both sides of a conservativeness condition and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub condition: Condition,
    pub left_side: f64,
    pub right_side: f64,
    pub holds: bool,
    pub witnesses: Vec<Witness>,
}

impl BoundReport {
    fn new(condition: Condition, left_side: f64, right_side: f64, witnesses: Vec<Witness>) -> Self {
        Self {
            condition,
            left_side,
            right_side,
            holds: left_side <= right_side,
            witnesses,
        }
    }

    pub fn witness(&self, label: &str) -> Option<f64> {
        self.witnesses
            .iter()
            .find(|w| w.label == label)
            .map(|w| w.value)
    }
}

/// A null CDF of a p-value that can be evaluated at a threshold.
pub trait NullPValueCdf {
    fn prob_at_most(&self, t: f64) -> f64;
}

/// The Uniform(0, 1) CDF.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformCdf;

impl NullPValueCdf for UniformCdf {
    fn prob_at_most(&self, t: f64) -> f64 {
        t.clamp(0.0, 1.0)
    }
}

/// Null CDF of a discrete p-value of the given flavor.
#[derive(Debug, Clone)]
pub struct DiscretePValueCdf {
    pub support: PValueSupport,
    pub flavor: Flavor,
}

impl DiscretePValueCdf {
    pub fn new(pmf: &ExactPmf, flavor: Flavor) -> Self {
        Self {
            support: pvalue_support(pmf),
            flavor,
        }
    }
}

impl NullPValueCdf for DiscretePValueCdf {
    fn prob_at_most(&self, t: f64) -> f64 {
        self.support.prob_at_most_f64(self.flavor, t)
    }
}

impl<F: Fn(f64) -> f64> NullPValueCdf for F {
    fn prob_at_most(&self, t: f64) -> f64 {
        self(t)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha {alpha} must lie in (0, 1)")))
    }
}

/// General step-up condition: `max_r max_{i in I0} F_i(tau_r) / r <= alpha / m0`.
///
/// `cdfs` are the null CDFs of the true-null p-values.
pub fn check_superuniform(
    cdfs: &[&dyn NullPValueCdf],
    taus: &[f64],
    alpha: f64,
    m0: usize,
) -> Result<BoundReport> {
    if cdfs.is_empty() || m0 == 0 {
        return Err(invalid("the set of true nulls is empty"));
    }
    if m0 > taus.len() {
        return Err(invalid(format!("m0 = {m0} exceeds m = {}", taus.len())));
    }
    if taus.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("critical constants must be non-decreasing"));
    }
    check_alpha(alpha)?;
    let mut left = f64::NEG_INFINITY;
    let mut arg = (0, 0);
    for (r, &tau) in taus.iter().enumerate() {
        for (i, cdf) in cdfs.iter().enumerate() {
            let v = cdf.prob_at_most(tau) / (r + 1) as f64;
            if v > left {
                left = v;
                arg = (i, r + 1);
            }
        }
    }
    Ok(BoundReport::new(
        Condition::SuperUniformity,
        left,
        alpha / m0 as f64,
        vec![
            Witness::new("test", arg.0 as f64),
            Witness::new("rank", arg.1 as f64),
        ],
    ))
}

/// Index and size (`n` for BT, `M` for FET) of the test with the smallest total.
fn smallest_total(pmfs: &[ExactPmf], family: TestFamily) -> Result<(usize, u64)> {
    if pmfs.is_empty() {
        return Err(invalid("no tests supplied"));
    }
    let mut sizes = Vec::with_capacity(pmfs.len());
    let mut common_n = None;
    for pmf in pmfs {
        match (family, pmf.kind()) {
            (TestFamily::Bt, DistKind::BinomialHalf { n }) => sizes.push(n),
            (TestFamily::Fet, DistKind::Hypergeometric { n1, n2, margin }) => {
                if n1 != n2 {
                    return Err(invalid("Fisher tests must share equal group sizes (N, N, M)"));
                }
                if *common_n.get_or_insert(n1) != n1 {
                    return Err(invalid("Fisher tests must share one group size N"));
                }
                sizes.push(margin);
            }
            _ => {
                return Err(invalid(format!(
                    "a {family} condition needs {} null laws",
                    match family {
                        TestFamily::Bt => "Binomial(0.5, n)",
                        TestFamily::Fet => "hypergeometric (N, N, M)",
                    }
                )))
            }
        }
    }
    let (i0, &size) = sizes
        .iter()
        .enumerate()
        .min_by_key(|(_, &s)| s)
        .expect("non-empty");
    match family {
        TestFamily::Bt if size < 1 => Err(invalid("smallest total must be positive")),
        TestFamily::Fet if size <= 1 => Err(invalid("smallest margin must exceed 1")),
        _ => Ok((i0, size)),
    }
}

struct Excess {
    i0: usize,
    size: u64,
    y: Option<u64>,
    mid_boundary: Vec<u64>,
    value: BigRational,
}

/// `f_{i0}(y(alpha) + 1)` for the smallest-total test, or zero when none of its
/// mid p-values is at most `alpha`.
fn smallest_total_excess(pmfs: &[ExactPmf], alpha: f64, family: TestFamily) -> Result<Excess> {
    let (i0, size) = smallest_total(pmfs, family)?;
    let pmf = &pmfs[i0];
    let t = exact::from_f64(alpha);
    let support = pvalue_support(pmf);
    let mid_boundary = support
        .entries
        .iter()
        .rev()
        .find(|e| e.mid <= t)
        .map(|e| e.outcomes.clone())
        .unwrap_or_default();
    let y = boundary_y_exact(pmf, &t);
    let value = if mid_boundary.is_empty() {
        BigRational::zero()
    } else {
        boundary_step_mass_exact(pmf, &t)
    };
    Ok(Excess {
        i0,
        size,
        y,
        mid_boundary,
        value,
    })
}

fn check_pi0(pi0: f64) -> Result<()> {
    if !(0.0..1.0).contains(&pi0) {
        return Err(invalid(format!(
            "pi0 = {pi0} must lie in [0, 1); BH on mid p-values is not conservative when every null is true"
        )));
    }
    Ok(())
}

/// Smallest-total condition for BH on mid p-values of binomial or Fisher tests.
///
/// The left side is the null mass `f_{i0}(y(alpha) + 1)` of the test with the
/// smallest total, where `y(alpha)` is the largest outcome at or below the
/// smaller mode with CDF at most `alpha`. It is zero when that test has no
/// mid p-value at most `alpha`. The right side is `(1 - pi0) alpha / m0`.
pub fn prop_check(
    pmfs: &[ExactPmf],
    alpha: f64,
    pi0: f64,
    m0: usize,
    family: TestFamily,
) -> Result<BoundReport> {
    check_alpha(alpha)?;
    check_pi0(pi0)?;
    let ex = smallest_total_excess(pmfs, alpha, family)?;
    let right = if m0 == 0 {
        f64::INFINITY
    } else {
        (1.0 - pi0) * alpha / m0 as f64
    };
    let condition = match family {
        TestFamily::Bt => Condition::BinomialSmallestTotal,
        TestFamily::Fet => Condition::FisherSmallestMargin,
    };
    let pmf = &pmfs[ex.i0];
    let mid_boundary_mass = ex
        .mid_boundary
        .iter()
        .map(|&x| pmf.prob_f64(x))
        .fold(0.0, f64::max);
    let mut witnesses = vec![
        Witness::new("i0", ex.i0 as f64),
        Witness::new("smallest_total", ex.size as f64),
        Witness::new("y_alpha", ex.y.map_or(f64::NAN, |y| y as f64)),
        Witness::new("f_mid_boundary", mid_boundary_mass),
    ];
    if let Some(&x) = ex.mid_boundary.first() {
        witnesses.push(Witness::new("x_mid_alpha", x as f64));
    }
    Ok(BoundReport::new(
        condition,
        exact::to_f64(&ex.value),
        right,
        witnesses,
    ))
}

/// FDR upper bound `pi0 alpha + m0 f_{i0}` for BH on mid p-values.
pub fn prop_bound(
    pmfs: &[ExactPmf],
    alpha: f64,
    pi0: f64,
    m0: usize,
    family: TestFamily,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_pi0(pi0)?;
    if m0 == 0 {
        return Ok(pi0 * alpha);
    }
    let ex = smallest_total_excess(pmfs, alpha, family)?;
    Ok(pi0 * alpha + m0 as f64 * exact::to_f64(&ex.value))
}

/// [`prop_bound`] packaged as a report against the target `alpha`.
pub fn prop_bound_report(
    pmfs: &[ExactPmf],
    alpha: f64,
    pi0: f64,
    m0: usize,
    family: TestFamily,
) -> Result<BoundReport> {
    let bound = prop_bound(pmfs, alpha, pi0, m0, family)?;
    Ok(BoundReport::new(
        Condition::ProportionBound,
        bound,
        alpha,
        vec![Witness::new("pi0_alpha", pi0 * alpha)],
    ))
}

/// The two parts of the tightened FDR bound for BH on mid p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPartBound {
    /// `pi0 alpha / 2`.
    pub alpha1: f64,
    /// `sum_{i in I0} max_r f_i(y_i(tau_r) + 1) / r`, exactly.
    pub alpha2_exact: BigRational,
    pub alpha2_upper: f64,
}

impl TwoPartBound {
    pub fn total(&self) -> f64 {
        self.alpha1 + self.alpha2_upper
    }

    pub fn report(&self, alpha: f64) -> BoundReport {
        BoundReport::new(
            Condition::TwoPartBound,
            self.total(),
            alpha,
            vec![
                Witness::new("alpha1", self.alpha1),
                Witness::new("alpha2_upper", self.alpha2_upper),
            ],
        )
    }
}

/// Tightened bound for BH on mid p-values with symmetric null laws.
///
/// `null_pmfs` are the laws of the `m0` true nulls and `taus` the BH constants
/// (their last entry is `alpha`). The unobservable probabilities of the
/// rejection-count events are replaced by their worst case, using that they sum
/// to one over `r`.
pub fn theorem1_bound(
    null_pmfs: &[ExactPmf],
    taus: &[f64],
    pi0: f64,
    m0: usize,
) -> Result<TwoPartBound> {
    if null_pmfs.len() != m0 {
        return Err(invalid(format!(
            "expected {m0} null laws, got {}",
            null_pmfs.len()
        )));
    }
    if !(0.0..=1.0).contains(&pi0) {
        return Err(invalid(format!("pi0 = {pi0} must lie in [0, 1]")));
    }
    let Some(&alpha) = taus.last() else {
        return Err(invalid("no critical constants supplied"));
    };
    if taus.iter().any(|&t| !(t > 0.0 && t < 1.0)) || taus.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("critical constants must be non-decreasing in (0, 1)"));
    }
    if let Some(pmf) = null_pmfs.iter().find(|p| !p.is_symmetric()) {
        return Err(invalid(format!(
            "the two-part bound needs symmetric null laws, got {:?}",
            pmf.kind()
        )));
    }
    let taus_exact: Vec<BigRational> = taus.iter().map(|&t| exact::from_f64(t)).collect();
    let mut alpha2 = BigRational::zero();
    for pmf in null_pmfs {
        let worst = taus_exact
            .iter()
            .enumerate()
            .map(|(r, t)| {
                boundary_step_mass_exact(pmf, t) / BigRational::from_integer((r as i64 + 1).into())
            })
            .max()
            .expect("non-empty");
        alpha2 += worst;
    }
    Ok(TwoPartBound {
        alpha1: pi0 * alpha / 2.0,
        alpha2_upper: exact::to_f64(&alpha2),
        alpha2_exact: alpha2,
    })
}

/// Largest `alpha'` on a `1e-6` grid with `pi0 alpha' + m0 f_{i0}(alpha') <= target`.
///
/// Running BH at `alpha'` rescales its critical constants so that the
/// proportion bound meets `target`. Returns zero when no grid point qualifies.
pub fn calibrate_alpha(
    pmfs: &[ExactPmf],
    alpha_target: f64,
    pi0: f64,
    m0: usize,
    family: TestFamily,
) -> Result<f64> {
    check_alpha(alpha_target)?;
    check_pi0(pi0)?;
    let steps = (1.0 / CALIBRATION_RESOLUTION).round() as u64;
    let grid = |k: u64| k as f64 / steps as f64;
    let ok = |k: u64| -> Result<bool> {
        Ok(prop_bound(pmfs, grid(k), pi0, m0, family)? <= alpha_target)
    };
    // the bound is a non-decreasing step function of alpha' below the mode mass
    let (mut lo, mut hi) = (1u64, steps - 1);
    if ok(hi)? {
        return Ok(grid(hi));
    }
    if !ok(lo)? {
        return Ok(0.0);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(ok(lo)?);
    Ok(grid(lo))
}
