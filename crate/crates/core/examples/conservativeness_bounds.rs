//! When is BH on mid p-values still conservative? Smallest-total checks,
//! FDR upper bounds and the two-part bound for symmetric nulls.

use midfdr::bounds::{prop_bound, prop_check, theorem1_bound};
use midfdr::procedure::StepUpConfig;
use midfdr::{ExactPmf, TestFamily};

fn main() -> midfdr::Result<()> {
    let (alpha, pi0, m0) = (0.05, 0.2, 2);
    println!("binomial test, alpha {alpha}, pi0 {pi0}, m0 {m0}");
    for n in [40, 80, 119, 120, 122, 124, 200] {
        let pmfs = [ExactPmf::binomial_half(n)?];
        let r = prop_check(&pmfs, alpha, pi0, m0, TestFamily::Bt)?;
        let bound = prop_bound(&pmfs, alpha, pi0, m0, TestFamily::Bt)?;
        println!(
            "  n_* = {n:>3}: left {:.5}  right {:.5}  {}  FDR <= {bound:.5}",
            r.left_side,
            r.right_side,
            if r.holds { "holds" } else { "fails" }
        );
    }

    let fisher: Vec<ExactPmf> = [44, 50, 61]
        .iter()
        .map(|&m| ExactPmf::hypergeometric(148, 148, m))
        .collect::<midfdr::Result<_>>()?;
    let r = prop_check(&fisher, alpha, pi0, m0, TestFamily::Fet)?;
    println!("Fisher, N = 148, margins 44/50/61: left {:.5}, holds {}", r.left_side, r.holds);

    // all-null instance: pi0 alpha / 2 plus a per-test excess term
    let nulls: Vec<ExactPmf> = [6, 10, 15]
        .iter()
        .map(|&n| ExactPmf::binomial_half(n))
        .collect::<midfdr::Result<_>>()?;
    let taus = StepUpConfig::benjamini_hochberg(3, alpha)?;
    let b = theorem1_bound(&nulls, taus.critical_constants(), 1.0, 3)?;
    println!(
        "two-part bound for n = 6, 10, 15: {:.5} + {:.5} = {:.5}",
        b.alpha1,
        b.alpha2_upper,
        b.total()
    );
    Ok(())
}
