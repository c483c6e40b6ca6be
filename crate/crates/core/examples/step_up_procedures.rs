//! BH, adaptive BH and SARP on a small batch of binomial tests with known truth.

use midfdr::procedure::{adaptive_bh, bh, sarp, storey_pi0, tally};
use midfdr::pvalue::bt_pvalues;

fn main() -> midfdr::Result<()> {
    // (c1, c2, true null?)
    let data = [
        (0, 9, false),
        (1, 12, false),
        (0, 6, false),
        (11, 1, false),
        (0, 5, false),
        (14, 2, false),
        (1, 10, false),
        (0, 4, false),
        (2, 2, true),
        (3, 4, true),
        (1, 4, true),
        (2, 5, true),
        (3, 3, true),
        (4, 1, true),
        (0, 3, true),
        (5, 2, true),
        (2, 6, true),
        (4, 4, true),
        (1, 3, true),
        (6, 3, true),
    ];
    let records = data
        .iter()
        .map(|&(a, b, _)| bt_pvalues(a, b))
        .collect::<midfdr::Result<Vec<_>>>()?;
    let labels: Vec<bool> = data.iter().map(|d| d.2).collect();
    let conv: Vec<f64> = records.iter().map(|r| r.conventional_f64()).collect();
    let mid: Vec<f64> = records.iter().map(|r| r.mid_f64()).collect();

    let alpha = 0.1;
    let pi0_conv = storey_pi0(&conv, 0.5)?;
    let pi0_mid = storey_pi0(&mid, 0.5)?;
    let randomized = sarp(&records, alpha, 0.5, 2024)?;

    let runs = [
        ("BH", bh(&conv, alpha)?),
        ("BH-Midp", bh(&mid, alpha)?),
        ("aBH", adaptive_bh(&conv, alpha, pi0_conv)?),
        ("aBH-Midp", adaptive_bh(&mid, alpha, pi0_mid)?),
        ("SARP", randomized.result.clone()),
    ];
    println!("pi0 estimates: conventional {pi0_conv:.3}, mid {pi0_mid:.3}, randomized {:.3}", randomized.pi0_hat);
    for (name, result) in &runs {
        let t = tally(result, &labels)?;
        println!(
            "{name:>9}: rejects {:?}  V={} R={} FDP={:.3} TDP={:.3}",
            result.rejected, t.false_discoveries, t.rejections, t.fdp, t.tdp
        );
    }
    Ok(())
}
