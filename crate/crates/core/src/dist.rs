//! Exact finite-support null distributions.
//!
//! Every PMF is stored as a dense run of non-negative big-integer weights over
//! one shared denominator. Two outcomes have equal probability exactly when
//! their numerators are equal, so PMF ties (which drive the two-sided p-value
//! definitions) are detected without any floating-point comparison.

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact;

/// Which family a PMF was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    /// Binomial(0.5, n): the conditional null law of the binomial test.
    BinomialHalf { n: u64 },
    /// Central hypergeometric law of the first cell given margins `(n1, n2, margin)`.
    Hypergeometric { n1: u64, n2: u64, margin: u64 },
    /// Arbitrary caller-supplied weights, e.g. an alternative data-generating law.
    Weighted,
}

/// Which exact test produces the p-values of a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    /// Binomial test of two Poisson means, conditional on the total count.
    Bt,
    /// Fisher's exact test of two binomial proportions, conditional on margins.
    Fet,
}

impl std::fmt::Display for TestFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            TestFamily::Bt => "bt",
            TestFamily::Fet => "fet",
        })
    }
}

impl std::str::FromStr for TestFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bt" | "binomial" => Ok(TestFamily::Bt),
            "fet" | "fisher" => Ok(TestFamily::Fet),
            other => Err(invalid(format!("unknown test family `{other}`"))),
        }
    }
}

/// A finite, contiguous-support PMF with exact integer weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPmf {
    low: u64,
    numerators: Vec<BigUint>,
    denominator: BigUint,
    kind: DistKind,
}

impl ExactPmf {
    /// Binomial(0.5, n): numerators `C(n, x)` over `2^n`.
    pub fn binomial_half(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("binomial test needs n >= 1 trials"));
        }
        let numerators = exact::binomial_row(n);
        let denominator = BigUint::one() << n;
        Ok(Self {
            low: 0,
            numerators,
            denominator,
            kind: DistKind::BinomialHalf { n },
        })
    }

    /// Central hypergeometric law of the first-row count given margins.
    ///
    /// Support is `max(0, margin - n2) ..= min(n1, margin)` with numerators
    /// `C(n1, x) * C(n2, margin - x)` over `C(n1 + n2, margin)`.
    pub fn hypergeometric(n1: u64, n2: u64, margin: u64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(invalid("hypergeometric margins need n1 >= 1 and n2 >= 1"));
        }
        if margin == 0 || margin > n1 + n2 {
            return Err(invalid(format!(
                "hypergeometric total {margin} must lie in 1..={}",
                n1 + n2
            )));
        }
        let low = margin.saturating_sub(n2);
        let high = n1.min(margin);
        let row1 = exact::binomial_row(n1);
        let row2 = exact::binomial_row(n2);
        let numerators: Vec<BigUint> = (low..=high)
            .map(|x| &row1[x as usize] * &row2[(margin - x) as usize])
            .collect();
        let denominator = numerators.iter().sum();
        Ok(Self {
            low,
            numerators,
            denominator,
            kind: DistKind::Hypergeometric { n1, n2, margin },
        })
    }

    /// Builds a PMF from positive weights starting at outcome `low`.
    ///
    /// The denominator is the sum of the weights.
    pub fn from_weights(low: u64, numerators: Vec<BigUint>) -> Result<Self> {
        if numerators.is_empty() {
            return Err(invalid("a PMF needs at least one support point"));
        }
        if numerators.iter().any(Zero::is_zero) {
            return Err(invalid("PMF weights must be strictly positive"));
        }
        let denominator = numerators.iter().sum();
        Ok(Self {
            low,
            numerators,
            denominator,
            kind: DistKind::Weighted,
        })
    }

    /// Binomial(theta, n) with a rational success probability in (0, 1).
    ///
    /// Used as the data-generating law of a false null in the exact oracle.
    pub fn binomial(n: u64, theta: &BigRational) -> Result<Self> {
        let (p, q) = unit_fraction_parts(theta)?;
        let row = exact::binomial_row(n);
        let failure = &q - &p;
        let numerators = row
            .into_iter()
            .enumerate()
            .map(|(x, c)| c * p.pow(x as u32) * failure.pow((n - x as u64) as u32))
            .collect();
        Self::from_weights(0, numerators)
    }

    /// Fisher's non-central hypergeometric law with odds ratio `odds > 0`.
    pub fn noncentral_hypergeometric(
        n1: u64,
        n2: u64,
        margin: u64,
        odds: &BigRational,
    ) -> Result<Self> {
        if odds <= &BigRational::zero() {
            return Err(invalid("odds ratio must be positive"));
        }
        let central = Self::hypergeometric(n1, n2, margin)?;
        let p = odds.numer().magnitude().clone();
        let q = odds.denom().magnitude().clone();
        let span = central.numerators.len() as u32 - 1;
        let numerators = central
            .numerators
            .iter()
            .enumerate()
            .map(|(i, w)| w * p.pow(i as u32) * q.pow(span - i as u32))
            .collect();
        Self::from_weights(central.low, numerators)
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    /// Smallest support point.
    pub fn low(&self) -> u64 {
        self.low
    }

    /// Largest support point.
    pub fn high(&self) -> u64 {
        self.low + self.numerators.len() as u64 - 1
    }

    pub fn support(&self) -> RangeInclusive<u64> {
        self.low..=self.high()
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.support().contains(&x)
    }

    pub fn numerators(&self) -> &[BigUint] {
        &self.numerators
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    /// Weight of outcome `x`, or `None` outside the support.
    pub fn numerator(&self, x: u64) -> Option<&BigUint> {
        x.checked_sub(self.low)
            .and_then(|i| self.numerators.get(i as usize))
    }

    pub(crate) fn index_of(&self, x: u64) -> Result<usize> {
        if self.contains(x) {
            Ok((x - self.low) as usize)
        } else {
            Err(Error::OutsideSupport {
                observation: x,
                low: self.low,
                high: self.high(),
            })
        }
    }

    /// Exact probability of `x` (zero outside the support).
    pub fn prob(&self, x: u64) -> BigRational {
        match self.numerator(x) {
            Some(w) => exact::ratio(w, &self.denominator),
            None => BigRational::zero(),
        }
    }

    /// Float projection of [`prob`](Self::prob); not used for any ordering decision.
    pub fn prob_f64(&self, x: u64) -> f64 {
        exact::to_f64(&self.prob(x))
    }

    /// All outcomes attaining the largest weight, in increasing order.
    pub fn mode_set(&self) -> Vec<u64> {
        let max = self.numerators.iter().max().expect("non-empty support");
        self.support()
            .zip(&self.numerators)
            .filter(|(_, w)| *w == max)
            .map(|(x, _)| x)
            .collect()
    }

    /// The smaller of the modes.
    pub fn smaller_mode(&self) -> u64 {
        self.mode_set()[0]
    }

    /// Sum of weights over outcomes `<= x`, as an integer over the denominator.
    pub fn cumulative_numerator(&self, x: i64) -> BigUint {
        if x < self.low as i64 {
            return BigUint::zero();
        }
        let upto = ((x as u64 - self.low) as usize).min(self.len() - 1);
        self.numerators[..=upto].iter().sum()
    }

    /// Exact CDF `F(x) = P(X <= x)`.
    pub fn cdf_at(&self, x: i64) -> BigRational {
        exact::ratio(&self.cumulative_numerator(x), &self.denominator)
    }

    pub fn cdf_f64(&self, x: i64) -> f64 {
        exact::to_f64(&self.cdf_at(x))
    }

    /// Whether the weights are mirror-symmetric about the support midpoint.
    pub fn is_symmetric(&self) -> bool {
        self.numerators.iter().eq(self.numerators.iter().rev())
    }
}

fn unit_fraction_parts(theta: &BigRational) -> Result<(BigUint, BigUint)> {
    if theta <= &BigRational::zero() || theta >= &BigRational::one() {
        return Err(invalid("success probability must lie strictly inside (0, 1)"));
    }
    let p = theta.numer().magnitude().clone();
    let q = theta.denom().magnitude().clone();
    debug_assert!(BigInt::from(p.clone()) < BigInt::from(q.clone()));
    Ok((p, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nums(pmf: &ExactPmf) -> Vec<u64> {
        pmf.numerators()
            .iter()
            .map(|w| u64::try_from(w).unwrap())
            .collect()
    }

    #[test]
    fn binomial_half_rows() {
        let p2 = ExactPmf::binomial_half(2).unwrap();
        assert_eq!(nums(&p2), vec![1, 2, 1]);
        assert_eq!(p2.denominator(), &BigUint::from(4u8));

        let p4 = ExactPmf::binomial_half(4).unwrap();
        assert_eq!(nums(&p4), vec![1, 4, 6, 4, 1]);
        assert_eq!(p4.denominator(), &BigUint::from(16u8));
    }

    #[test]
    fn binomial_half_normalizes_exactly_at_large_n() {
        let pmf = ExactPmf::binomial_half(120).unwrap();
        // independent oracle: add the coefficients one by one
        let mut total = BigUint::zero();
        for k in 0..=120u64 {
            total += exact::binomial_coefficient(120, k);
        }
        assert_eq!(total, BigUint::one() << 120u32);
        assert_eq!(pmf.numerators().iter().sum::<BigUint>(), total);
        assert_eq!(pmf.denominator(), &total);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(ExactPmf::binomial_half(0).is_err());
    }

    #[test]
    fn hypergeometric_examples() {
        let h = ExactPmf::hypergeometric(3, 3, 2).unwrap();
        assert_eq!(nums(&h), vec![3, 9, 3]);
        assert_eq!(h.denominator(), &BigUint::from(15u8));

        let h = ExactPmf::hypergeometric(1, 1, 1).unwrap();
        assert_eq!(nums(&h), vec![1, 1]);
        assert_eq!(h.denominator(), &BigUint::from(2u8));

        let h = ExactPmf::hypergeometric(5, 2, 6).unwrap();
        assert_eq!(h.support(), 4..=5);
    }

    #[test]
    fn hypergeometric_rejects_bad_margins() {
        assert!(ExactPmf::hypergeometric(3, 3, 0).is_err());
        assert!(ExactPmf::hypergeometric(3, 3, 7).is_err());
        assert!(ExactPmf::hypergeometric(0, 3, 1).is_err());
    }

    #[test]
    fn hypergeometric_denominator_is_vandermonde() {
        for n1 in 1..9u64 {
            for n2 in 1..9u64 {
                for m in 1..=n1 + n2 {
                    let h = ExactPmf::hypergeometric(n1, n2, m).unwrap();
                    assert_eq!(h.denominator(), &exact::binomial_coefficient(n1 + n2, m));
                    assert_eq!(h.low(), m.saturating_sub(n2));
                    assert_eq!(h.high(), n1.min(m));
                    assert!(h.numerators().iter().all(|w| !w.is_zero()));
                }
            }
        }
    }

    #[test]
    fn modes() {
        assert_eq!(ExactPmf::binomial_half(5).unwrap().mode_set(), vec![2, 3]);
        assert_eq!(ExactPmf::binomial_half(4).unwrap().mode_set(), vec![2]);
        assert_eq!(
            ExactPmf::hypergeometric(3, 3, 2).unwrap().mode_set(),
            vec![1]
        );
    }

    #[test]
    fn cdf_values() {
        let b4 = ExactPmf::binomial_half(4).unwrap();
        assert_eq!(b4.cdf_at(1), BigRational::new(5.into(), 16.into()));
        assert_eq!(b4.cdf_at(-1), BigRational::zero());
        assert_eq!(b4.cdf_at(99), BigRational::one());
        let h = ExactPmf::hypergeometric(3, 3, 2).unwrap();
        assert_eq!(h.cdf_at(2), BigRational::one());
    }

    #[test]
    fn symmetry() {
        for n in 1..40 {
            assert!(ExactPmf::binomial_half(n).unwrap().is_symmetric());
        }
        for m in 1..=12 {
            assert!(ExactPmf::hypergeometric(6, 6, m).unwrap().is_symmetric());
        }
        assert!(!ExactPmf::hypergeometric(5, 2, 3).unwrap().is_symmetric());
    }

    #[test]
    fn alternative_laws_normalize() {
        let theta = BigRational::new(1.into(), 5.into());
        let b = ExactPmf::binomial(4, &theta).unwrap();
        // (1/5)^0 (4/5)^4 = 256/625
        assert_eq!(b.prob(0), BigRational::new(256.into(), 625.into()));
        assert_eq!(b.denominator(), &BigUint::from(625u32));

        let odds = BigRational::new(3.into(), 1.into());
        let nc = ExactPmf::noncentral_hypergeometric(3, 3, 2, &odds).unwrap();
        // weights 3, 9*3, 3*9 -> 3, 27, 27 over 57
        assert_eq!(nums(&nc), vec![3, 27, 27]);
        assert!(ExactPmf::binomial(4, &BigRational::one()).is_err());
    }
}
