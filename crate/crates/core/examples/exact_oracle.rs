//! Exact FDR and power of BH by enumerating every joint outcome.

use num_rational::BigRational;

use midfdr::oracle::{exact_fdr_oracle, AlternativeModel, DEFAULT_OUTCOME_CAP};
use midfdr::{exact, ExactPmf, Flavor};

fn main() -> midfdr::Result<()> {
    // a single true null: mid p-values are anti-conservative
    let null = ExactPmf::binomial_half(8)?;
    for alpha in [0.004, 0.01, 0.05] {
        for flavor in [Flavor::Conventional, Flavor::Mid] {
            let r = exact_fdr_oracle(std::slice::from_ref(&null), &[], alpha, flavor, DEFAULT_OUTCOME_CAP)?;
            println!(
                "alpha {alpha:<5} {flavor:<12} FDR {} = {:.6}",
                exact::display(&r.exact_fdr),
                r.fdr_f64()
            );
        }
    }

    // three nulls and two false nulls with success probability 1/5
    let theta = BigRational::new(1.into(), 5.into());
    let nulls = vec![ExactPmf::binomial_half(6)?, ExactPmf::binomial_half(9)?, ExactPmf::binomial_half(12)?];
    let alts = vec![
        AlternativeModel::new(ExactPmf::binomial(10, &theta)?, ExactPmf::binomial_half(10)?)?,
        AlternativeModel::new(ExactPmf::binomial(14, &theta)?, ExactPmf::binomial_half(14)?)?,
    ];
    for flavor in [Flavor::Conventional, Flavor::Mid] {
        let r = exact_fdr_oracle(&nulls, &alts, 0.1, flavor, DEFAULT_OUTCOME_CAP)?;
        println!(
            "mixed, {flavor}: FDR {:.5}, power {:.5} over {} outcomes",
            r.fdr_f64(),
            r.power_f64(),
            r.outcomes_enumerated
        );
    }
    Ok(())
}
