//! Conventional, mid and randomized p-values of the binomial and Fisher exact tests.

use midfdr::pvalue::{boundary_x, boundary_y, bt_pvalues, fet_pvalues, pvalue_support};
use midfdr::{exact, ExactPmf, Flavor, PValueTable};

fn main() -> midfdr::Result<()> {
    let pmf = ExactPmf::binomial_half(8)?;
    println!("Binomial(0.5, 8): modes {:?}", pmf.mode_set());
    let table = PValueTable::new(&pmf);
    println!("{:>3} {:>10} {:>10} {:>10}", "x", "l", "conv", "mid");
    for rec in table.records() {
        println!(
            "{:>3} {:>10} {:>10} {:>10}",
            rec.observation,
            exact::display(&rec.l),
            exact::display(&rec.conventional),
            exact::display(&rec.mid)
        );
    }

    // tie classes of the p-value law; cumulative mass equals the conventional p-value
    for entry in pvalue_support(&pmf).entries {
        println!(
            "outcomes {:?}: mass {}, mid {}, conventional {}",
            entry.outcomes,
            exact::display(&entry.mass),
            exact::display(&entry.mid),
            exact::display(&entry.conventional)
        );
    }

    println!("x(0.05), conventional: {:?}", boundary_x(&pmf, 0.05, Flavor::Conventional)?);
    println!("x(0.05), mid:          {:?}", boundary_x(&pmf, 0.05, Flavor::Mid)?);
    println!("y(0.5):                {:?}", boundary_y(&pmf, 0.5)?);

    let bt = bt_pvalues(0, 4)?;
    println!(
        "BT (0, 4): conventional {}, mid {}, randomized at u = 0.3: {}",
        exact::display(&bt.conventional),
        exact::display(&bt.mid),
        bt.randomized(0.3)?
    );
    let fet = fet_pvalues(0, 2, 3, 3)?;
    println!(
        "FET (0, 2 | 3, 3): conventional {}, mid {}",
        exact::display(&fet.conventional),
        exact::display(&fet.mid)
    );
    Ok(())
}
