//! Filter a Fisher count table by total count and compare the procedures.

use midfdr::io::{ingest, run_tests};
use midfdr::Method;

fn main() -> midfdr::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/positions.csv");
    let ingested = ingest(path, 2)?;
    println!(
        "{} positions kept, {} removed with total count below 2",
        ingested.table.len(),
        ingested.removed
    );
    let report = run_tests(&ingested.table, 0.05, &Method::ALL, 0.5, Some(1))?;
    println!(
        "pi0 estimates: conventional {:.3}, mid {:.3}, randomized {:.3}",
        report.pi0_hat.conventional,
        report.pi0_hat.mid,
        report.pi0_hat.randomized.unwrap_or(f64::NAN)
    );
    for o in &report.methods {
        println!("{:>9}: {} discoveries at level {:.4}", o.method, o.discoveries, o.level);
    }

    // rows with a single count have a point-mass p-value law
    let all = ingest(path, 0)?;
    let dirac = midfdr::io::table_pvalues(&all.table)?.iter().filter(|t| t.dirac).count();
    println!("unfiltered table: {dirac} of {} rows have a point-mass p-value law", all.table.len());
    Ok(())
}
