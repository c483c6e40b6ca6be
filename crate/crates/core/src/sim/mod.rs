//! Monte-Carlo comparison of the five procedures on simulated paired counts.

pub mod config;
pub mod generate;
pub mod study;

pub use config::{load_scenarios, parse_scenarios, DataModel, Dependence, SimConfig};
pub use generate::{gaussian_copula_block, gen_binomial_pairs, gen_poisson_pairs, CountPair};
pub use study::{run_studies, run_study, write_summaries_csv, Estimator, SimSummary};
