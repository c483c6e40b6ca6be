//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails; the process exits non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

use midfdr::bounds::{prop_check, theorem1_bound};
use midfdr::io::ingest;
use midfdr::oracle::{exact_fdr_oracle, DEFAULT_OUTCOME_CAP};
use midfdr::procedure::StepUpConfig;
use midfdr::pvalue::{boundary_step_mass, pvalue_support};
use midfdr::sim::{run_study, DataModel, SimConfig};
use midfdr::{exact, ExactPmf, Flavor, Method, PValueTable, TestFamily};

/// Absolute tolerance on the published smallest-total witnesses.
const WITNESS_TOL: f64 = 1e-5;
/// Monte-Carlo allowance on empirical FDR, in standard errors of the mean FDP.
const FDR_STANDARD_ERRORS: f64 = 3.0;
const SIM_SEED: u64 = 20_160_101;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{} [{:.2?}, limit {:?}]", o.detail, elapsed, limit);
    o.pass &= elapsed <= limit;
    o
}

fn binom(n: u64) -> ExactPmf {
    ExactPmf::binomial_half(n).unwrap()
}

fn max_weight(pmf: &ExactPmf) -> BigUint {
    pmf.numerators().iter().max().unwrap().clone()
}

fn criterion_1() -> Outcome {
    timed(Duration::from_secs(1), || {
        let expected = [(120, 0.01896), (122, 0.01922), (124, 0.01948)];
        let mut pass = true;
        let mut parts = Vec::new();
        for (n, want) in expected {
            let r = prop_check(&[binom(n)], 0.05, 0.2, 2, TestFamily::Bt).unwrap();
            pass &= (r.left_side - want).abs() <= WITNESS_TOL;
            pass &= (r.right_side - 0.02).abs() <= WITNESS_TOL;
            pass &= r.holds;
            parts.push(format!("n={n}: left {:.5} right {:.5}", r.left_side, r.right_side));
        }
        outcome(pass, parts.join("; "))
    })
}

/// Exact mass of `{x' : mid(x') <= mid(x)}` against `conventional(x)`, by direct summation.
fn lemma1_violations(pmf: &ExactPmf) -> usize {
    let table = PValueTable::new(pmf);
    let probs: Vec<BigRational> = pmf.support().map(|x| pmf.prob(x)).collect();
    table
        .records()
        .iter()
        .filter(|rec| {
            let mass = table
                .records()
                .iter()
                .zip(&probs)
                .filter(|(other, _)| other.mid <= rec.mid)
                .fold(BigRational::zero(), |acc, (_, p)| acc + p);
            mass != rec.conventional
        })
        .count()
}

fn criterion_2() -> Outcome {
    timed(Duration::from_secs(30), || {
        let mut checked = 0usize;
        let mut violations = 0usize;
        for n in 1..=60 {
            let pmf = binom(n);
            checked += pmf.len();
            violations += lemma1_violations(&pmf);
        }
        for big_n in 1..=20u64 {
            for m in 1..=2 * big_n {
                let pmf = ExactPmf::hypergeometric(big_n, big_n, m).unwrap();
                checked += pmf.len();
                violations += lemma1_violations(&pmf);
            }
        }
        outcome(
            violations == 0,
            format!("{checked} support points, {violations} violations"),
        )
    })
}

fn criterion_3() -> Outcome {
    let mut violations = Vec::new();
    for n in 1..=200u64 {
        let want = if n % 2 == 1 { vec![(n - 1) / 2, n.div_ceil(2)] } else { vec![n / 2] };
        if binom(n).mode_set() != want {
            violations.push(format!("binomial mode n={n}"));
        }
        // ||f_n|| / ||f_{n+1}|| with ||f_n|| = max C(n, x) / 2^n
        let lhs = max_weight(&binom(n)) * BigUint::from(2u8) * BigUint::from(n + 1);
        let rhs = max_weight(&binom(n + 1));
        let ok = if n % 2 == 0 {
            lhs == rhs * BigUint::from(n + 2)
        } else {
            lhs == rhs * BigUint::from(n + 1)
        };
        if !ok {
            violations.push(format!("binomial sup-norm ratio n={n}"));
        }
    }
    for big_n in 1..=60u64 {
        for m in 1..=2 * big_n {
            let f = ExactPmf::hypergeometric(big_n, big_n, m).unwrap();
            let want = if m % 2 == 1 { vec![(m - 1) / 2, m.div_ceil(2)] } else { vec![m / 2] };
            if f.mode_set() != want {
                violations.push(format!("hypergeometric mode N={big_n} M={m}"));
            }
            if m == 2 * big_n {
                continue;
            }
            let g = ExactPmf::hypergeometric(big_n, big_n, m + 1).unwrap();
            // kappa = (max f_M / D_M) / (max f_{M+1} / D_{M+1}) compared with p/q
            let (p, q) = if m % 2 == 0 {
                (m + 2, m + 1)
            } else {
                (2 * big_n - m, 2 * big_n - m + 1)
            };
            let lhs = max_weight(&f) * g.denominator() * BigUint::from(q);
            let rhs = max_weight(&g) * f.denominator() * BigUint::from(p);
            if lhs != rhs {
                violations.push(format!("kappa N={big_n} M={m}"));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!("{} violations {:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()),
    )
}

fn criterion_4() -> Outcome {
    let mut violations = 0usize;
    let mut lower_tail_violations = 0usize;
    let mut first = None;
    for n in 1..=60u64 {
        let pmf = binom(n);
        let support = pvalue_support(&pmf);
        for k in 1..=999u32 {
            let t = f64::from(k) / 1000.0;
            let t_exact = exact::from_f64(t);
            let mass = support.prob_at_most(Flavor::Mid, &t_exact);
            let step = boundary_step_mass(&pmf, t).unwrap();
            let half = BigRational::new(1.into(), 2.into());
            let bound = &t_exact * &half + &step;
            if mass > bound {
                violations += 1;
                first.get_or_insert((n, t, exact::to_f64(&mass), exact::to_f64(&bound)));
            }
            // the one-tailed part that the bound accounts for
            if mass.clone() * &half > bound {
                lower_tail_violations += 1;
            }
        }
    }
    let detail = match first {
        Some((n, t, mass, bound)) => format!(
            "{violations} violations of 59940 (first n={n}, t={t}: P(mid<=t)={mass:.5} > {bound:.5}); \
             halving the two-sided mass gives {lower_tail_violations} violations"
        ),
        None => "0 violations of 59940".into(),
    };
    outcome(violations == 0, detail)
}

fn criterion_5() -> Outcome {
    let r = exact_fdr_oracle(&[binom(8)], &[], 0.004, Flavor::Mid, DEFAULT_OUTCOME_CAP).unwrap();
    let want = BigRational::new(1.into(), 128.into());
    let pass = r.exact_fdr == want && r.exact_fdr > exact::from_f64(0.004);
    outcome(pass, format!("exact FDR {} vs alpha 0.004", exact::display(&r.exact_fdr)))
}

fn criterion_6() -> Outcome {
    timed(Duration::from_secs(300), || {
        let mut instances = 0usize;
        let mut conventional_violations = 0usize;
        let mut two_part_violations = 0usize;
        let mut worst_gap = f64::NEG_INFINITY;
        let mut tuples: Vec<Vec<u64>> = Vec::new();
        for m in 1..=3usize {
            let mut stack = vec![(Vec::<u64>::new(), 2u64)];
            while let Some((prefix, from)) = stack.pop() {
                if prefix.len() == m {
                    tuples.push(prefix);
                    continue;
                }
                for n in from..=8 {
                    let mut next = prefix.clone();
                    next.push(n);
                    stack.push((next, n));
                }
            }
        }
        for ns in &tuples {
            let pmfs: Vec<ExactPmf> = ns.iter().map(|&n| binom(n)).collect();
            let m = pmfs.len();
            for alpha in [0.01, 0.05, 0.1] {
                instances += 1;
                let conv = exact_fdr_oracle(&pmfs, &[], alpha, Flavor::Conventional, DEFAULT_OUTCOME_CAP)
                    .unwrap();
                if conv.exact_fdr > exact::from_f64(alpha) {
                    conventional_violations += 1;
                }
                let mid = exact_fdr_oracle(&pmfs, &[], alpha, Flavor::Mid, DEFAULT_OUTCOME_CAP).unwrap();
                let taus = StepUpConfig::benjamini_hochberg(m, alpha).unwrap();
                let bound = theorem1_bound(&pmfs, taus.critical_constants(), 1.0, m).unwrap();
                let total = exact::from_f64(bound.alpha1) + &bound.alpha2_exact;
                if mid.exact_fdr > total {
                    two_part_violations += 1;
                }
                worst_gap = worst_gap.max(mid.fdr_f64() - bound.total());
            }
        }
        outcome(
            conventional_violations == 0 && two_part_violations == 0,
            format!(
                "{instances} instances: {conventional_violations} conventional > alpha, \
                 {two_part_violations} mid > two-part bound (largest FDR - bound {worst_gap:.5})"
            ),
        )
    })
}

fn simulation_runs() -> Vec<(String, midfdr::sim::SimSummary)> {
    let mut out = Vec::new();
    for family in [TestFamily::Bt, TestFamily::Fet] {
        for pi0 in [0.5, 0.8] {
            let mut cfg = SimConfig::new(1000, pi0, DataModel::Binomial, family, SIM_SEED);
            cfg.n_reps = 250;
            cfg.name = format!("{family}-pi0-{pi0}");
            out.push((cfg.name.clone(), run_study(&cfg).unwrap()));
        }
    }
    out
}

fn criterion_7(runs: &[(String, midfdr::sim::SimSummary)], elapsed: Duration) -> Outcome {
    let mut pass = elapsed <= Duration::from_secs(600);
    let mut worst = (String::new(), f64::NEG_INFINITY);
    for (name, s) in runs {
        for method in Method::ALL {
            let limit = 0.05 + FDR_STANDARD_ERRORS * s.method(method).unwrap().fdp_sd
                / (s.replications as f64).sqrt();
            let fdr = s.method(method).unwrap().fdr;
            pass &= fdr <= limit;
            if fdr - limit > worst.1 {
                worst = (format!("{name} {method}: FDR {fdr:.4} vs {limit:.4}"), fdr - limit);
            }
        }
    }
    outcome(
        pass,
        format!("4 scenarios x 5 methods; closest to the limit {} [{elapsed:.2?}, limit 600s]", worst.0),
    )
}

fn criterion_8(runs: &[(String, midfdr::sim::SimSummary)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in runs {
        let bh = s.method(Method::Bh).unwrap().power;
        let abh_mid = s.method(Method::AbhMidp).unwrap().power;
        pass &= abh_mid >= bh && s.midp_superset_violations == 0;
        parts.push(format!(
            "{name}: TDP aBH-Midp {abh_mid:.3} vs BH {bh:.3}, superset violations {}",
            s.midp_superset_violations
        ));
    }
    outcome(pass, parts.join("; "))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn criterion_9() -> Outcome {
    let all = ingest(fixture("positions.csv"), 0).unwrap();
    let kept = ingest(fixture("positions.csv"), 2).unwrap();
    outcome(
        all.table.len() == 118 && kept.table.len() == 68 && kept.removed == 50,
        format!(
            "{} rows read, {} retained at min_total=2, {} removed",
            all.table.len(),
            kept.table.len(),
            kept.removed
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenarios.toml");
    std::fs::write(
        &config,
        "[[scenario]]\nname = \"det\"\nm = 200\npi0 = 0.7\ndata_model = \"binomial\"\n\
         family = \"fet\"\nseed = 5\nn_reps = 20\n\n[[scenario]]\nname = \"blocks\"\nm = 200\n\
         pi0 = 0.9\ndata_model = \"poisson\"\nfamily = \"bt\"\nseed = 6\nn_reps = 20\n\
         dependence = { kind = \"block\", rho = 0.1, blocks = 50 }\n",
    )
    .unwrap();
    let table = fixture("positions.csv");
    let table = table.to_str().unwrap();
    let config = config.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["pvalues", "--input", table, "--min-total", "2"],
        vec!["pvalues", "--input", table, "--format", "json"],
        vec!["test", "--input", table, "--min-total", "2", "--seed", "11"],
        vec!["test", "--input", table, "--seed", "11", "--format", "json", "--method", "SARP", "--method", "BH"],
        vec!["bounds", "--family", "bt", "--n", "120", "--alpha", "0.05", "--pi0", "0.2", "--m0", "2"],
        vec!["bounds", "--family", "fet", "--n", "148", "--margin", "44", "--pi0", "0.2", "--m0", "2", "--format", "json"],
        vec!["simulate", "--config", config],
        vec!["simulate", "--config", config, "--format", "json"],
        vec!["oracle", "--family", "bt", "--n", "8", "--m", "1", "--alpha", "0.004", "--flavor", "mid"],
        vec!["oracle", "--family", "fet", "--n", "4", "--margin", "3", "--m", "3", "--m0", "2", "--effect", "5", "--flavor", "mid", "--format", "csv"],
    ];
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_midfdr")).args(args).output().unwrap();
        (out.status.success(), out.stdout)
    };
    let mut failures = Vec::new();
    for args in &commands {
        let (ok_a, a) = run(args);
        let (ok_b, b) = run(args);
        if !(ok_a && ok_b && a == b && !a.is_empty()) {
            failures.push(args.join(" "));
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} commands run twice, mismatched or failed: {:?}", commands.len(), failures),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "smallest-total witnesses at n = 120, 122, 124", criterion_1()),
        (2, "mid-p rank mass equals the conventional p-value", criterion_2()),
        (3, "mode sets, sup-norm ratios and kappa laws", criterion_3()),
        (4, "P(mid <= t) <= t/2 + f(y(t)+1) on the 999-point grid", criterion_4()),
        (5, "oracle FDR of one binomial(8) null at alpha 0.004", criterion_5()),
    ];
    results.push((6, "oracle against alpha and the two-part bound", criterion_6()));
    let start = Instant::now();
    let runs = simulation_runs();
    let elapsed = start.elapsed();
    results.push((7, "simulated FDR within Monte-Carlo error of 0.05", criterion_7(&runs, elapsed)));
    results.push((8, "power ordering and BH-Midp superset", criterion_8(&runs)));
    results.push((9, "ingestion keeps 68 of 118 rows", criterion_9()));
    results.push((10, "CLI output is byte-identical across runs", criterion_10()));

    let mut failed = 0;
    for (k, title, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} criterion {k:>2}: {title}: {}", o.detail);
    }
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
