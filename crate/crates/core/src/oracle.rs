//! Exact FDR and power of BH by brute-force enumeration.
//!
//! Every joint outcome of independent discrete tests is visited, BH is run on
//! the chosen-flavor p-values, and the FDP and TDP are accumulated with the
//! joint probability under the data-generating laws. The result is an exact
//! rational, so small instances can be compared against hand-derived values
//! and against the bounds in [`crate::bounds`].

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::dist::ExactPmf;
use crate::error::{invalid, Error, Result};
use crate::exact;
use crate::pvalue::{Flavor, PValueTable};

/// Default ceiling on the number of joint outcomes.
pub const DEFAULT_OUTCOME_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub exact_fdr: BigRational,
    pub exact_power: BigRational,
    pub outcomes_enumerated: u128,
}

impl OracleResult {
    pub fn fdr_f64(&self) -> f64 {
        exact::to_f64(&self.exact_fdr)
    }

    pub fn power_f64(&self) -> f64 {
        exact::to_f64(&self.exact_power)
    }
}

/// A false null: data come from `truth`, p-values are computed under `null`.
#[derive(Debug, Clone)]
pub struct AlternativeModel {
    pub truth: ExactPmf,
    pub null: ExactPmf,
}

impl AlternativeModel {
    pub fn new(truth: ExactPmf, null: ExactPmf) -> Result<Self> {
        if truth.support() != null.support() {
            return Err(invalid(format!(
                "alternative support {:?} differs from null support {:?}",
                truth.support(),
                null.support()
            )));
        }
        Ok(Self { truth, null })
    }
}

struct TestLayout<'a> {
    weights: &'a [BigUint],
    /// Smallest rank `r` (1-based) with `p <= tau_r`, per outcome; `m + 1` if none.
    first_rank: Vec<usize>,
    is_null: bool,
}

fn first_ranks(null: &ExactPmf, taus: &[BigRational], flavor: Flavor) -> Vec<usize> {
    let table = PValueTable::new(null);
    table
        .records()
        .iter()
        .map(|rec| {
            let p = rec.get(flavor);
            taus.iter()
                .position(|t| p <= t)
                .map_or(taus.len() + 1, |r| r + 1)
        })
        .collect()
}

/// Exact FDR and power of BH at level `alpha` for independent tests.
///
/// True nulls come first (`null_pmfs`), then false nulls (`alternatives`).
pub fn exact_fdr_oracle(
    null_pmfs: &[ExactPmf],
    alternatives: &[AlternativeModel],
    alpha: f64,
    flavor: Flavor,
    cap: u128,
) -> Result<OracleResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let m = null_pmfs.len() + alternatives.len();
    if m == 0 {
        return Err(invalid("the oracle needs at least one test"));
    }
    let outcomes = null_pmfs
        .iter()
        .map(ExactPmf::len)
        .chain(alternatives.iter().map(|a| a.null.len()))
        .try_fold(1u128, |acc, k| acc.checked_mul(k as u128))
        .unwrap_or(u128::MAX);
    if outcomes > cap {
        return Err(Error::EnumerationCap {
            needed: outcomes,
            cap,
        });
    }

    let alpha = exact::from_f64(alpha);
    let taus: Vec<BigRational> = (1..=m)
        .map(|r| &alpha * BigRational::new((r as i64).into(), (m as i64).into()))
        .collect();
    let mut tests: Vec<TestLayout<'_>> = null_pmfs
        .iter()
        .map(|pmf| TestLayout {
            weights: pmf.numerators(),
            first_rank: first_ranks(pmf, &taus, flavor),
            is_null: true,
        })
        .collect();
    tests.extend(alternatives.iter().map(|alt| TestLayout {
        weights: alt.truth.numerators(),
        first_rank: first_ranks(&alt.null, &taus, flavor),
        is_null: false,
    }));
    let denominator: BigUint = null_pmfs
        .iter()
        .map(ExactPmf::denominator)
        .chain(alternatives.iter().map(|a| a.truth.denominator()))
        .product();

    // partition on the first test's outcome; each block runs an odometer over the rest
    let partials: Vec<Accumulator> = (0..tests[0].weights.len())
        .into_par_iter()
        .map(|k0| enumerate_block(&tests, k0))
        .collect();
    let mut total = Accumulator::new(m);
    for p in partials {
        total.merge(p);
    }

    let mut fdr = BigRational::zero();
    for (r, num) in total.fdp_by_rank.iter().enumerate().skip(1) {
        if !num.is_zero() {
            fdr += exact::ratio(num, &(&denominator * BigUint::from(r)));
        }
    }
    let m1 = alternatives.len();
    let power = if m1 == 0 {
        BigRational::zero()
    } else {
        exact::ratio(&total.true_rejections, &(&denominator * BigUint::from(m1)))
    };
    debug_assert!(fdr <= BigRational::one());
    Ok(OracleResult {
        exact_fdr: fdr,
        exact_power: power,
        outcomes_enumerated: outcomes,
    })
}

struct Accumulator {
    /// `sum weight * V` over outcomes with `R = r`, indexed by `r`.
    fdp_by_rank: Vec<BigUint>,
    /// `sum weight * S` (true rejections).
    true_rejections: BigUint,
}

impl Accumulator {
    fn new(m: usize) -> Self {
        Self {
            fdp_by_rank: vec![BigUint::zero(); m + 1],
            true_rejections: BigUint::zero(),
        }
    }

    fn merge(&mut self, other: Accumulator) {
        for (a, b) in self.fdp_by_rank.iter_mut().zip(other.fdp_by_rank) {
            *a += b;
        }
        self.true_rejections += other.true_rejections;
    }
}

fn enumerate_block(tests: &[TestLayout<'_>], k0: usize) -> Accumulator {
    let m = tests.len();
    let mut acc = Accumulator::new(m);
    let mut idx = vec![0usize; m];
    idx[0] = k0;
    let mut counts = vec![0usize; m + 2];
    loop {
        // BH: eta = max r with #{i : first_rank_i <= r} >= r
        counts.iter_mut().for_each(|c| *c = 0);
        for (t, &k) in tests.iter().zip(&idx) {
            counts[t.first_rank[k].min(m + 1)] += 1;
        }
        let mut eta = 0;
        let mut cum = 0;
        for (r, &c) in counts.iter().enumerate().take(m + 1).skip(1) {
            cum += c;
            if cum >= r {
                eta = r;
            }
        }
        if eta > 0 {
            let mut v = 0usize;
            let mut s = 0usize;
            for (t, &k) in tests.iter().zip(&idx) {
                if t.first_rank[k] <= eta {
                    if t.is_null {
                        v += 1;
                    } else {
                        s += 1;
                    }
                }
            }
            if v + s > 0 {
                let w: BigUint = tests
                    .iter()
                    .zip(&idx)
                    .map(|(t, &k)| &t.weights[k])
                    .product();
                if v > 0 {
                    acc.fdp_by_rank[eta] += &w * BigUint::from(v);
                }
                if s > 0 {
                    acc.true_rejections += w * BigUint::from(s);
                }
            }
        }
        // advance the odometer over tests 1..m
        let mut pos = 1;
        loop {
            if pos == m {
                return acc;
            }
            idx[pos] += 1;
            if idx[pos] < tests[pos].weights.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
