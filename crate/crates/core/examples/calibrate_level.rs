//! Shrink the BH level so that the proportion bound meets the target FDR.

use midfdr::bounds::{calibrate_alpha, prop_bound};
use midfdr::{ExactPmf, TestFamily};

fn main() -> midfdr::Result<()> {
    let (target, pi0, m0) = (0.05, 0.5, 5);
    println!("target {target}, pi0 {pi0}, m0 {m0}");
    println!("{:>5} {:>12} {:>12} {:>12}", "n_*", "bound(0.05)", "alpha'", "bound(a')");
    for n in [10, 20, 40, 80, 160, 320] {
        let pmfs = [ExactPmf::binomial_half(n)?];
        let before = prop_bound(&pmfs, target, pi0, m0, TestFamily::Bt)?;
        let a = calibrate_alpha(&pmfs, target, pi0, m0, TestFamily::Bt)?;
        let after = if a > 0.0 {
            prop_bound(&pmfs, a, pi0, m0, TestFamily::Bt)?
        } else {
            0.0
        };
        println!("{n:>5} {before:>12.5} {a:>12.6} {after:>12.5}");
    }
    Ok(())
}
