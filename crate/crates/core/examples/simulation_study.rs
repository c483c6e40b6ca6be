//! A scaled-down simulation: binomial data, both exact tests, with and
//! without block dependence.

use midfdr::sim::{run_study, write_summaries_csv, DataModel, Dependence, SimConfig};
use midfdr::TestFamily;

fn main() -> midfdr::Result<()> {
    let mut scenarios = Vec::new();
    for family in [TestFamily::Bt, TestFamily::Fet] {
        let mut c = SimConfig::new(500, 0.8, DataModel::Binomial, family, 7);
        c.n_reps = 50;
        c.name = format!("{family}-independent");
        scenarios.push(c);
    }
    let mut blocked = SimConfig::new(500, 0.8, DataModel::Poisson, TestFamily::Bt, 7);
    blocked.n_reps = 50;
    blocked.dependence = Dependence::Block { rho: 0.1, blocks: 50 };
    blocked.name = "poisson-blocks".into();
    scenarios.push(blocked);

    let mut summaries = Vec::new();
    for s in &scenarios {
        let summary = run_study(s)?;
        println!("{}: {} untestable tests", s.name, summary.untestable);
        for e in &summary.estimators {
            println!("  pi0 {:?}: bias {:+.4} sd {:.4}", e.estimator, e.bias, e.sd);
        }
        summaries.push(summary);
    }
    write_summaries_csv(&summaries, std::io::stdout().lock())
}
