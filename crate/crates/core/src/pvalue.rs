//! Two-sided p-values for discrete null distributions.
//!
//! For an observation `x0` with null PMF `f`:
//!
//! * `l(x0)` is the null mass of outcomes strictly less likely than `x0`,
//! * `e(x0)` is the null mass of outcomes exactly as likely as `x0`,
//! * the conventional p-value is `l + e`, the mid p-value `l + e/2`, and the
//!   randomized p-value `l + (1 - u) e` for `u ~ Uniform(0, 1)`.
//!
//! All PMF comparisons use exact integer weights.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dist::ExactPmf;
use crate::error::{invalid, Result};
use crate::exact;

/// Which deterministic two-sided p-value to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Conventional,
    Mid,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Flavor::Conventional => "conventional",
            Flavor::Mid => "mid",
        })
    }
}

impl FromStr for Flavor {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conventional" | "conv" => Ok(Flavor::Conventional),
            "mid" | "midp" => Ok(Flavor::Mid),
            other => Err(invalid(format!("unknown p-value flavor `{other}`"))),
        }
    }
}

/// Tail quantities and both deterministic p-values for one observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PValueRecord {
    pub observation: u64,
    pub l: BigRational,
    pub e: BigRational,
    pub conventional: BigRational,
    pub mid: BigRational,
}

impl PValueRecord {
    fn from_parts(observation: u64, l: BigRational, e: BigRational) -> Self {
        let conventional = &l + &e;
        let mid = &l + &e / BigRational::from_integer(2.into());
        Self {
            observation,
            l,
            e,
            conventional,
            mid,
        }
    }

    pub fn get(&self, flavor: Flavor) -> &BigRational {
        match flavor {
            Flavor::Conventional => &self.conventional,
            Flavor::Mid => &self.mid,
        }
    }

    pub fn conventional_f64(&self) -> f64 {
        exact::to_f64(&self.conventional)
    }

    pub fn mid_f64(&self) -> f64 {
        exact::to_f64(&self.mid)
    }

    pub fn l_f64(&self) -> f64 {
        exact::to_f64(&self.l)
    }

    pub fn e_f64(&self) -> f64 {
        exact::to_f64(&self.e)
    }

    /// Randomized p-value `l + (1 - u) e` for a given uniform draw.
    pub fn randomized(&self, u: f64) -> Result<f64> {
        check_unit(u)?;
        Ok(self.l_f64() + (1.0 - u) * self.e_f64())
    }
}

/// `(l, e)` for observation `x0`.
pub fn tail_quantities(pmf: &ExactPmf, x0: u64) -> Result<(BigRational, BigRational)> {
    let i = pmf.index_of(x0)?;
    let (l, e) = tail_numerators(pmf.numerators(), &pmf.numerators()[i]);
    Ok((
        exact::ratio(&l, pmf.denominator()),
        exact::ratio(&e, pmf.denominator()),
    ))
}

fn tail_numerators(weights: &[BigUint], w0: &BigUint) -> (BigUint, BigUint) {
    let mut l = BigUint::zero();
    let mut e = BigUint::zero();
    for w in weights {
        match w.cmp(w0) {
            std::cmp::Ordering::Less => l += w,
            std::cmp::Ordering::Equal => e += w,
            std::cmp::Ordering::Greater => {}
        }
    }
    (l, e)
}

pub fn pvalue_record(pmf: &ExactPmf, x0: u64) -> Result<PValueRecord> {
    let (l, e) = tail_quantities(pmf, x0)?;
    Ok(PValueRecord::from_parts(x0, l, e))
}

/// `l + (1 - u) e`, computed in floating point from the exact tail quantities.
pub fn randomized_pvalue(pmf: &ExactPmf, x0: u64, u: f64) -> Result<f64> {
    check_unit(u)?;
    pvalue_record(pmf, x0)?.randomized(u)
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(invalid(format!("uniform draw {u} is outside [0, 1]")))
    }
}

/// One PMF tie class of a null distribution, seen through its p-values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportEntry {
    pub mid: BigRational,
    pub conventional: BigRational,
    /// Null probability of the whole tie class.
    pub mass: BigRational,
    /// Outcomes in the class.
    pub outcomes: Vec<u64>,
}

/// The null distribution of the p-values: tie classes ordered by mid p-value.
///
/// The cumulative mass through an entry equals that entry's conventional
/// p-value, so `P(mid <= mid(x)) = conventional(x)` at every support point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PValueSupport {
    pub entries: Vec<SupportEntry>,
}

impl PValueSupport {
    /// Exact `P(P <= t)` under the null for the chosen flavor.
    pub fn prob_at_most(&self, flavor: Flavor, t: &BigRational) -> BigRational {
        self.entries
            .iter()
            .filter(|e| match flavor {
                Flavor::Conventional => &e.conventional <= t,
                Flavor::Mid => &e.mid <= t,
            })
            .map(|e| &e.mass)
            .fold(BigRational::zero(), |acc, m| acc + m)
    }

    /// Float-threshold convenience wrapper; `t` is taken at its exact binary value.
    pub fn prob_at_most_f64(&self, flavor: Flavor, t: f64) -> f64 {
        exact::to_f64(&self.prob_at_most(flavor, &exact::from_f64(t)))
    }

    /// Whether the p-value law is a single point mass (every outcome ties).
    pub fn is_dirac(&self) -> bool {
        self.entries.len() == 1
    }
}

pub fn pvalue_support(pmf: &ExactPmf) -> PValueSupport {
    // group outcomes by exact weight; ascending weight is ascending p-value
    let mut classes: BTreeMap<&BigUint, Vec<u64>> = BTreeMap::new();
    for (x, w) in pmf.support().zip(pmf.numerators()) {
        classes.entry(w).or_default().push(x);
    }
    let den = pmf.denominator();
    let half = BigRational::new(1.into(), 2.into());
    let mut below = BigUint::zero();
    let mut entries = Vec::with_capacity(classes.len());
    for (w, outcomes) in classes {
        let class_num = w * outcomes.len();
        let l = exact::ratio(&below, den);
        let mass = exact::ratio(&class_num, den);
        below += &class_num;
        entries.push(SupportEntry {
            mid: &l + &mass * &half,
            conventional: &l + &mass,
            mass,
            outcomes,
        });
    }
    PValueSupport { entries }
}

/// Per-outcome p-values of one null law, precomputed for repeated lookups.
#[derive(Debug, Clone)]
pub struct PValueTable {
    low: u64,
    records: Vec<PValueRecord>,
    floats: Vec<[f64; 4]>,
}

impl PValueTable {
    pub fn new(pmf: &ExactPmf) -> Self {
        let support = pvalue_support(pmf);
        let mut records: Vec<Option<PValueRecord>> = vec![None; pmf.len()];
        for entry in &support.entries {
            let l = &entry.conventional - &entry.mass;
            for &x in &entry.outcomes {
                records[(x - pmf.low()) as usize] =
                    Some(PValueRecord::from_parts(x, l.clone(), entry.mass.clone()));
            }
        }
        let records: Vec<PValueRecord> = records.into_iter().map(Option::unwrap).collect();
        let floats = records
            .iter()
            .map(|r| [r.l_f64(), r.e_f64(), r.conventional_f64(), r.mid_f64()])
            .collect();
        Self {
            low: pmf.low(),
            records,
            floats,
        }
    }

    pub fn record(&self, x: u64) -> Option<&PValueRecord> {
        x.checked_sub(self.low)
            .and_then(|i| self.records.get(i as usize))
    }

    pub fn records(&self) -> &[PValueRecord] {
        &self.records
    }

    /// `[l, e, conventional, mid]` as floats.
    pub fn floats(&self, x: u64) -> Option<[f64; 4]> {
        x.checked_sub(self.low)
            .and_then(|i| self.floats.get(i as usize).copied())
    }
}

/// Support points whose chosen-flavor p-value is the largest one not exceeding `t`.
///
/// Empty when no p-value is at most `t`.
pub fn boundary_x(pmf: &ExactPmf, t: f64, flavor: Flavor) -> Result<Vec<u64>> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid(format!("threshold {t} must lie in (0, 1]")));
    }
    let t = exact::from_f64(t);
    let support = pvalue_support(pmf);
    Ok(support
        .entries
        .iter()
        .rev()
        .find(|e| match flavor {
            Flavor::Conventional => e.conventional <= t,
            Flavor::Mid => e.mid <= t,
        })
        .map(|e| e.outcomes.clone())
        .unwrap_or_default())
}

/// Largest outcome at or below the smaller mode whose CDF is at most `t`.
pub fn boundary_y(pmf: &ExactPmf, t: f64) -> Result<Option<u64>> {
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("threshold {t} must lie in (0, 1)")));
    }
    Ok(boundary_y_exact(pmf, &exact::from_f64(t)))
}

pub(crate) fn boundary_y_exact(pmf: &ExactPmf, t: &BigRational) -> Option<u64> {
    let mode = pmf.smaller_mode();
    let den = pmf.denominator();
    let mut cum = BigUint::zero();
    let mut found = None;
    for (x, w) in pmf.support().zip(pmf.numerators()) {
        if x > mode {
            break;
        }
        cum += w;
        if &exact::ratio(&cum, den) <= t {
            found = Some(x);
        } else {
            break;
        }
    }
    found
}

/// `f(y(t) + 1)`, with `f` at the smallest support point when `y(t)` is empty.
///
/// This is the per-test excess term of the tightened mid-p tail bound.
pub fn boundary_step_mass(pmf: &ExactPmf, t: f64) -> Result<BigRational> {
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("threshold {t} must lie in (0, 1)")));
    }
    Ok(boundary_step_mass_exact(pmf, &exact::from_f64(t)))
}

pub(crate) fn boundary_step_mass_exact(pmf: &ExactPmf, t: &BigRational) -> BigRational {
    match boundary_y_exact(pmf, t) {
        Some(y) => pmf.prob(y + 1),
        None => pmf.prob(pmf.low()),
    }
}

/// Both sides of the tightened tail inequality for mid p-values at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MidTailCheck {
    /// `P(mid <= t)` over the whole support.
    pub two_sided_mass: BigRational,
    /// `P(mid <= t, X < smaller mode)`: the lower tail only.
    pub lower_tail_mass: BigRational,
    /// `t/2 + f(y(t) + 1)`.
    pub bound: BigRational,
}

impl MidTailCheck {
    pub fn two_sided_holds(&self) -> bool {
        self.two_sided_mass <= self.bound
    }

    pub fn lower_tail_holds(&self) -> bool {
        self.lower_tail_mass <= self.bound
    }
}

pub fn mid_tail_check(pmf: &ExactPmf, support: &PValueSupport, t: &BigRational) -> MidTailCheck {
    let two_sided_mass = support.prob_at_most(Flavor::Mid, t);
    let mode = pmf.smaller_mode();
    let lower_tail_mass = support
        .entries
        .iter()
        .filter(|e| &e.mid <= t)
        .flat_map(|e| e.outcomes.iter())
        .filter(|&&x| x < mode)
        .map(|&x| pmf.prob(x))
        .fold(BigRational::zero(), |a, b| a + b);
    let bound = t / BigRational::from_integer(2.into()) + boundary_step_mass_exact(pmf, t);
    MidTailCheck {
        two_sided_mass,
        lower_tail_mass,
        bound,
    }
}

/// Binomial-test p-values: `c1` against Binomial(0.5, c1 + c2).
pub fn bt_pvalues(c1: u64, c2: u64) -> Result<PValueRecord> {
    if c1 + c2 == 0 {
        return Err(invalid("binomial test needs a positive total count"));
    }
    pvalue_record(&ExactPmf::binomial_half(c1 + c2)?, c1)
}

/// Fisher's exact test p-values: `c1` against the hypergeometric law with margins
/// `(n1, n2, c1 + c2)`.
pub fn fet_pvalues(c1: u64, c2: u64, n1: u64, n2: u64) -> Result<PValueRecord> {
    if c1 > n1 || c2 > n2 {
        return Err(invalid(format!(
            "counts ({c1}, {c2}) exceed trials ({n1}, {n2})"
        )));
    }
    if c1 + c2 == 0 {
        return Err(invalid("Fisher's exact test needs a positive total count"));
    }
    pvalue_record(&ExactPmf::hypergeometric(n1, n2, c1 + c2)?, c1)
}

/// Exact null mass of `{x' : mid(x') <= mid(x)}`; equals `conventional(x)`.
pub fn mid_rank_mass(pmf: &ExactPmf, x: u64) -> Result<BigRational> {
    let target = pvalue_record(pmf, x)?.mid;
    let mut mass = BigRational::zero();
    for y in pmf.support() {
        if pvalue_record(pmf, y)?.mid <= target {
            mass += pmf.prob(y);
        }
    }
    Ok(mass)
}
