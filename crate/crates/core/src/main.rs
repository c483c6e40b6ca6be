use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use midfdr::bounds::{calibrate_alpha, prop_bound, prop_check, theorem1_bound, BoundReport};
use midfdr::io::{ingest, run_tests, table_pvalues};
use midfdr::oracle::{exact_fdr_oracle, AlternativeModel, DEFAULT_OUTCOME_CAP};
use midfdr::procedure::{StepUpConfig, DEFAULT_LAMBDA};
use midfdr::sim::{load_scenarios, run_studies, write_summaries_csv};
use midfdr::{exact, Error, ExactPmf, Flavor, Method, Result, TestFamily};

#[derive(Parser)]
#[command(name = "midfdr", version, about = "FDR control with exact discrete p-values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(clap::Args)]
struct Output {
    /// Output format; `text` is only offered by `bounds` and `oracle`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct Input {
    /// Count table: CSV with columns id,c1,c2 (binomial test) or id,c1,c2,N1,N2 (Fisher).
    #[arg(long)]
    input: PathBuf,
    /// Drop rows whose total count c1 + c2 is below this.
    #[arg(long, default_value_t = 0)]
    min_total: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Exact conventional and mid p-values for every row of a count table.
    Pvalues {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Run FDR procedures on a count table.
    Test {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// BH, BH-Midp, aBH, aBH-Midp or SARP; repeat for several.
        /// Defaults to the four deterministic methods, plus SARP when a seed is given.
        #[arg(long = "method")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        /// Seed for the randomized p-values; required by SARP.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Smallest-total conservativeness check, FDR bound and calibrated level.
    Bounds {
        #[arg(long)]
        family: TestFamily,
        /// Binomial test: total counts (repeatable). Fisher: the common group size N.
        #[arg(long = "n", required = true)]
        n: Vec<u64>,
        /// Fisher margins M (repeatable).
        #[arg(long = "margin")]
        margins: Vec<u64>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        pi0: f64,
        #[arg(long)]
        m0: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Run simulation scenarios from a TOML file of [[scenario]] tables.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the replication count of every scenario.
        #[arg(long)]
        reps: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Exact FDR and power of BH by enumerating every joint outcome.
    Oracle {
        #[arg(long)]
        family: TestFamily,
        /// Binomial test: total count of every test. Fisher: group size N.
        #[arg(long)]
        n: u64,
        /// Fisher margin M of every test.
        #[arg(long)]
        margin: Option<u64>,
        /// Number of tests.
        #[arg(long)]
        m: usize,
        /// Number of true nulls; defaults to m.
        #[arg(long)]
        m0: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum)]
        flavor: FlavorArg,
        /// Success probability (binomial test) or odds ratio (Fisher) of the false nulls,
        /// as a decimal or a fraction such as 1/5.
        #[arg(long)]
        effect: Option<String>,
        #[arg(long, default_value_t = DEFAULT_OUTCOME_CAP)]
        cap: u128,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Conventional,
    Mid,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Conventional => Flavor::Conventional,
            FlavorArg::Mid => Flavor::Mid,
        }
    }
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn tabular_only(format: Option<Format>, command: &str) -> Result<Format> {
    match format.unwrap_or(Format::Csv) {
        Format::Text => Err(Error::InvalidParameter(format!(
            "`{command}` writes csv or json, not text"
        ))),
        f => Ok(f),
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidParameter(format!("`{s}` is not a number or fraction"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    Ok(BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32)))
}

fn cmd_pvalues(input: Input, output: Output) -> Result<()> {
    let format = tabular_only(output.format, "pvalues")?;
    let ingested = ingest(&input.input, input.min_total)?;
    eprintln!(
        "kept {} rows, removed {} with total below {}",
        ingested.table.len(),
        ingested.removed,
        input.min_total
    );
    let entries = table_pvalues(&ingested.table)?;
    let mut w = open_output(&output.out)?;
    match format {
        Format::Json => write_json(&mut w, &entries)?,
        _ => {
            let mut csv = csv::Writer::from_writer(&mut w);
            for e in &entries {
                csv.serialize(e)?;
            }
            csv.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_test(
    input: Input,
    alpha: f64,
    methods: Vec<Method>,
    lambda: f64,
    seed: Option<u64>,
    output: Output,
) -> Result<()> {
    let format = tabular_only(output.format, "test")?;
    let ingested = ingest(&input.input, input.min_total)?;
    eprintln!(
        "kept {} rows, removed {} with total below {}",
        ingested.table.len(),
        ingested.removed,
        input.min_total
    );
    let methods = if methods.is_empty() {
        Method::ALL
            .into_iter()
            .filter(|m| !m.is_randomized() || seed.is_some())
            .collect()
    } else {
        methods
    };
    let report = run_tests(&ingested.table, alpha, &methods, lambda, seed)?;
    for o in &report.methods {
        eprintln!("{}: {} discoveries", o.method, o.discoveries);
    }
    let mut w = open_output(&output.out)?;
    match format {
        Format::Json => write_json(&mut w, &report)?,
        _ => report.write_csv(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoundsOutput {
    family: TestFamily,
    alpha: f64,
    pi0: f64,
    m0: usize,
    condition: BoundReport,
    fdr_bound: f64,
    calibrated_alpha: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    family: TestFamily,
    n: Vec<u64>,
    margins: Vec<u64>,
    alpha: f64,
    pi0: f64,
    m0: usize,
    output: Output,
) -> Result<()> {
    let pmfs: Vec<ExactPmf> = match family {
        TestFamily::Bt => {
            if !margins.is_empty() {
                return Err(Error::InvalidParameter(
                    "--margin applies to the Fisher family only".into(),
                ));
            }
            n.iter().map(|&k| ExactPmf::binomial_half(k)).collect::<Result<_>>()?
        }
        TestFamily::Fet => {
            let [size] = n[..] else {
                return Err(Error::InvalidParameter(
                    "the Fisher family takes a single common group size --n".into(),
                ));
            };
            if margins.is_empty() {
                return Err(Error::InvalidParameter("the Fisher family needs --margin".into()));
            }
            margins
                .iter()
                .map(|&m| ExactPmf::hypergeometric(size, size, m))
                .collect::<Result<_>>()?
        }
    };
    let out = BoundsOutput {
        family,
        alpha,
        pi0,
        m0,
        condition: prop_check(&pmfs, alpha, pi0, m0, family)?,
        fdr_bound: prop_bound(&pmfs, alpha, pi0, m0, family)?,
        calibrated_alpha: calibrate_alpha(&pmfs, alpha, pi0, m0, family)?,
    };
    let mut w = open_output(&output.out)?;
    match output.format.unwrap_or(Format::Text) {
        Format::Json => write_json(&mut w, &out)?,
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(["family", "alpha", "pi0", "m0", "left", "right", "holds", "fdr_bound", "calibrated_alpha"])?;
            csv.write_record([
                family.to_string(),
                alpha.to_string(),
                pi0.to_string(),
                m0.to_string(),
                out.condition.left_side.to_string(),
                out.condition.right_side.to_string(),
                out.condition.holds.to_string(),
                out.fdr_bound.to_string(),
                out.calibrated_alpha.to_string(),
            ])?;
            csv.flush()?;
        }
        Format::Text => {
            let c = &out.condition;
            writeln!(w, "condition: {:?}", c.condition)?;
            writeln!(w, "left  {:.5}  ({})", c.left_side, c.left_side)?;
            writeln!(w, "right {:.5}  ({})", c.right_side, c.right_side)?;
            writeln!(w, "{}", if c.holds { "HOLDS" } else { "FAILS" })?;
            for wit in &c.witnesses {
                writeln!(w, "  {} = {}", wit.label, wit.value)?;
            }
            writeln!(w, "fdr bound {:.5}  ({})", out.fdr_bound, out.fdr_bound)?;
            writeln!(w, "calibrated alpha {}", out.calibrated_alpha)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(config: PathBuf, reps: Option<usize>, output: Output) -> Result<()> {
    let format = tabular_only(output.format, "simulate")?;
    let mut scenarios = load_scenarios(&config)?;
    if let Some(r) = reps {
        for s in &mut scenarios {
            s.n_reps = r;
        }
    }
    let summaries = run_studies(&scenarios)?;
    let mut w = open_output(&output.out)?;
    match format {
        Format::Json => write_json(&mut w, &summaries)?,
        _ => write_summaries_csv(&summaries, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput {
    family: TestFamily,
    m: usize,
    m0: usize,
    alpha: f64,
    flavor: Flavor,
    exact_fdr: String,
    fdr: f64,
    exceeds_alpha: bool,
    exact_power: String,
    power: f64,
    outcomes_enumerated: u128,
    two_part_bound: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_oracle(
    family: TestFamily,
    n: u64,
    margin: Option<u64>,
    m: usize,
    m0: Option<usize>,
    alpha: f64,
    flavor: Flavor,
    effect: Option<String>,
    cap: u128,
    output: Output,
) -> Result<()> {
    let m0 = m0.unwrap_or(m);
    if m0 > m || m == 0 {
        return Err(Error::InvalidParameter(format!("need 0 < m and m0 <= m, got m = {m}, m0 = {m0}")));
    }
    let null = match (family, margin) {
        (TestFamily::Bt, None) => ExactPmf::binomial_half(n)?,
        (TestFamily::Fet, Some(mg)) => ExactPmf::hypergeometric(n, n, mg)?,
        (TestFamily::Bt, Some(_)) => {
            return Err(Error::InvalidParameter("--margin applies to the Fisher family only".into()))
        }
        (TestFamily::Fet, None) => {
            return Err(Error::InvalidParameter("the Fisher family needs --margin".into()))
        }
    };
    let alternatives = if m0 < m {
        let effect = effect.ok_or_else(|| {
            Error::InvalidParameter("false nulls need --effect".into())
        })?;
        let effect = parse_rational(&effect)?;
        let truth = match family {
            TestFamily::Bt => ExactPmf::binomial(n, &effect)?,
            TestFamily::Fet => {
                ExactPmf::noncentral_hypergeometric(n, n, margin.expect("checked"), &effect)?
            }
        };
        vec![AlternativeModel::new(truth, null.clone())?; m - m0]
    } else {
        Vec::new()
    };
    let nulls = vec![null; m0];
    let result = exact_fdr_oracle(&nulls, &alternatives, alpha, flavor, cap)?;
    let two_part_bound = if m0 > 0 && flavor == Flavor::Mid {
        let taus = StepUpConfig::benjamini_hochberg(m, alpha)?.critical_constants().to_vec();
        Some(theorem1_bound(&nulls, &taus, m0 as f64 / m as f64, m0)?.total())
    } else {
        None
    };
    let out = OracleOutput {
        family,
        m,
        m0,
        alpha,
        flavor,
        exact_fdr: exact::display(&result.exact_fdr),
        fdr: result.fdr_f64(),
        exceeds_alpha: result.exact_fdr > exact::from_f64(alpha),
        exact_power: exact::display(&result.exact_power),
        power: result.power_f64(),
        outcomes_enumerated: result.outcomes_enumerated,
        two_part_bound,
    };
    let mut w = open_output(&output.out)?;
    match output.format.unwrap_or(Format::Text) {
        Format::Json => write_json(&mut w, &out)?,
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.serialize(&out)?;
            csv.flush()?;
        }
        Format::Text => {
            writeln!(w, "exact FDR {} = {}", out.exact_fdr, out.fdr)?;
            writeln!(
                w,
                "{} alpha = {}",
                if out.exceeds_alpha { "EXCEEDS" } else { "WITHIN" },
                alpha
            )?;
            writeln!(w, "exact power {} = {}", out.exact_power, out.power)?;
            if let Some(b) = out.two_part_bound {
                writeln!(w, "two-part bound {b}")?;
            }
            writeln!(w, "outcomes enumerated {}", out.outcomes_enumerated)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pvalues { input, output } => cmd_pvalues(input, output),
        Command::Test {
            input,
            alpha,
            methods,
            lambda,
            seed,
            output,
        } => cmd_test(input, alpha, methods, lambda, seed, output),
        Command::Bounds {
            family,
            n,
            margins,
            alpha,
            pi0,
            m0,
            output,
        } => cmd_bounds(family, n, margins, alpha, pi0, m0, output),
        Command::Simulate {
            config,
            reps,
            output,
        } => cmd_simulate(config, reps, output),
        Command::Oracle {
            family,
            n,
            margin,
            m,
            m0,
            alpha,
            flavor,
            effect,
            cap,
            output,
        } => cmd_oracle(
            family,
            n,
            margin,
            m,
            m0,
            alpha,
            flavor.into(),
            effect,
            cap,
            output,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
