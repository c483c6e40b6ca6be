//! Count-table ingestion and per-table run reports.
//!
//! A count table is a headed CSV with columns `id,c1,c2` for binomial tests,
//! or `id,c1,c2,N1,N2` for Fisher's exact tests.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{ExactPmf, TestFamily};
use crate::error::{invalid, Error, Result};
use crate::exact;
use crate::procedure::{self, sarp_on_randomized, storey_pi0, Method, StepUpResult};
use crate::pvalue::{pvalue_record, pvalue_support};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub id: String,
    pub c1: u64,
    pub c2: u64,
    /// Group sizes, present for Fisher's exact test.
    pub trials: Option<(u64, u64)>,
}

impl CountRow {
    pub fn total(&self) -> u64 {
        self.c1 + self.c2
    }

    /// The exact null law of `c1`, or `None` for a zero total.
    pub fn null_pmf(&self) -> Result<Option<ExactPmf>> {
        if self.total() == 0 {
            return Ok(None);
        }
        match self.trials {
            None => ExactPmf::binomial_half(self.total()).map(Some),
            Some((n1, n2)) => ExactPmf::hypergeometric(n1, n2, self.total()).map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub family: TestFamily,
    pub rows: Vec<CountRow>,
}

impl CountTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Drop rows whose total count is below `min_total`, keeping order.
    pub fn filter_min_total(self, min_total: u64) -> (CountTable, usize) {
        let before = self.rows.len();
        let rows: Vec<CountRow> = self
            .rows
            .into_iter()
            .filter(|r| r.total() >= min_total)
            .collect();
        let removed = before - rows.len();
        (
            CountTable {
                family: self.family,
                rows,
            },
            removed,
        )
    }

    /// Parse a headed CSV count table.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (id, c1, c2) = match (col("id"), col("c1"), col("c2")) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(invalid("count table header must contain id, c1 and c2")),
        };
        let trials = match (col("N1"), col("N2")) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(invalid("count table has only one of the N1 and N2 columns")),
        };
        let family = if trials.is_some() {
            TestFamily::Fet
        } else {
            TestFamily::Bt
        };

        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for (k, record) in rdr.records().enumerate() {
            let row = k as u64 + 1;
            let record = record?;
            let field = |i: usize, name: &str| -> Result<u64> {
                let raw = record.get(i).unwrap_or("");
                let v: i64 = raw.parse().map_err(|_| Error::MalformedRow {
                    row,
                    message: format!("{name} `{raw}` is not an integer"),
                })?;
                u64::try_from(v).map_err(|_| Error::MalformedRow {
                    row,
                    message: format!("{name} is negative ({v})"),
                })
            };
            let id_value = record.get(id).unwrap_or("").to_string();
            if id_value.is_empty() {
                return Err(Error::MalformedRow {
                    row,
                    message: "empty id".into(),
                });
            }
            let r = CountRow {
                c1: field(c1, "c1")?,
                c2: field(c2, "c2")?,
                trials: match trials {
                    Some((a, b)) => Some((field(a, "N1")?, field(b, "N2")?)),
                    None => None,
                },
                id: id_value,
            };
            if let Some((n1, n2)) = r.trials {
                if n1 == 0 || n2 == 0 {
                    return Err(Error::MalformedRow {
                        row,
                        message: "group sizes must be positive".into(),
                    });
                }
                if r.c1 > n1 || r.c2 > n2 {
                    return Err(Error::MalformedRow {
                        row,
                        message: format!("counts ({}, {}) exceed trials ({n1}, {n2})", r.c1, r.c2),
                    });
                }
            }
            if !seen.insert(r.id.clone()) {
                return Err(Error::MalformedRow {
                    row,
                    message: format!("duplicate id `{}`", r.id),
                });
            }
            rows.push(r);
        }
        Ok(Self { family, rows })
    }
}

/// A table after filtering, with the number of rows removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub table: CountTable,
    pub removed: usize,
}

/// Read a count table and drop rows with total count below `min_total`.
pub fn ingest(path: impl AsRef<Path>, min_total: u64) -> Result<Ingested> {
    let file = std::fs::File::open(path)?;
    let (table, removed) = CountTable::from_reader(file)?.filter_min_total(min_total);
    Ok(Ingested { table, removed })
}

/// P-values of one table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub id: String,
    pub c1: u64,
    pub c2: u64,
    pub l: f64,
    pub e: f64,
    pub conventional: f64,
    pub mid: f64,
    /// Exact rationals as `numerator/denominator`.
    pub conventional_exact: String,
    pub mid_exact: String,
    /// The row's p-value law is a single point mass.
    pub dirac: bool,
    /// Total count zero; both p-values are set to 1.
    pub untestable: bool,
}

/// Exact p-values for every row of a table.
pub fn table_pvalues(table: &CountTable) -> Result<Vec<TestEntry>> {
    table
        .rows
        .iter()
        .map(|r| {
            let Some(pmf) = r.null_pmf()? else {
                return Ok(TestEntry {
                    id: r.id.clone(),
                    c1: r.c1,
                    c2: r.c2,
                    l: 0.0,
                    e: 1.0,
                    conventional: 1.0,
                    mid: 1.0,
                    conventional_exact: "1".into(),
                    mid_exact: "1".into(),
                    dirac: true,
                    untestable: true,
                });
            };
            let rec = pvalue_record(&pmf, r.c1)?;
            Ok(TestEntry {
                id: r.id.clone(),
                c1: r.c1,
                c2: r.c2,
                l: rec.l_f64(),
                e: rec.e_f64(),
                conventional: rec.conventional_f64(),
                mid: rec.mid_f64(),
                conventional_exact: exact::display(&rec.conventional),
                mid_exact: exact::display(&rec.mid),
                dirac: pvalue_support(&pmf).is_dirac(),
                untestable: false,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    /// Level BH was run at, `alpha / pi0_hat` capped below one for adaptive methods.
    pub level: f64,
    pub pi0_hat: Option<f64>,
    pub rejected: Vec<bool>,
    pub discoveries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pi0Estimates {
    pub conventional: f64,
    pub mid: f64,
    pub randomized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub family: TestFamily,
    pub alpha: f64,
    pub lambda: f64,
    pub seed: Option<u64>,
    pub tests: Vec<TestEntry>,
    pub pi0_hat: Pi0Estimates,
    pub methods: Vec<MethodOutcome>,
}

impl RunReport {
    pub fn discoveries(&self, method: Method) -> Option<usize> {
        self.methods
            .iter()
            .find(|o| o.method == method)
            .map(|o| o.discoveries)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per test: id, p-values, flags, then a 0/1 column per method.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "id".to_string(),
            "c1".into(),
            "c2".into(),
            "conventional".into(),
            "mid".into(),
            "dirac".into(),
            "untestable".into(),
        ];
        header.extend(self.methods.iter().map(|o| o.method.name().to_string()));
        w.write_record(&header)?;
        for (i, t) in self.tests.iter().enumerate() {
            let mut rec = vec![
                t.id.clone(),
                t.c1.to_string(),
                t.c2.to_string(),
                t.conventional.to_string(),
                t.mid.to_string(),
                t.dirac.to_string(),
                t.untestable.to_string(),
            ];
            rec.extend(
                self.methods
                    .iter()
                    .map(|o| u8::from(o.rejected[i]).to_string()),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run the requested procedures on a table.
///
/// SARP draws one uniform per row from a ChaCha stream seeded with `seed`,
/// which is required when SARP is requested.
pub fn run_tests(
    table: &CountTable,
    alpha: f64,
    methods: &[Method],
    lambda: f64,
    seed: Option<u64>,
) -> Result<RunReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha {alpha} must lie in (0, 1)")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("lambda {lambda} must lie in (0, 1)")));
    }
    let needs_seed = methods.iter().any(|m| m.is_randomized());
    if needs_seed && seed.is_none() {
        return Err(invalid("SARP uses randomized p-values and needs an explicit seed"));
    }
    let tests = table_pvalues(table)?;
    let m = tests.len();
    let conv: Vec<f64> = tests.iter().map(|t| t.conventional).collect();
    let mid: Vec<f64> = tests.iter().map(|t| t.mid).collect();
    let estimate = |p: &[f64]| -> Result<f64> {
        if p.is_empty() {
            Ok(1.0)
        } else {
            storey_pi0(p, lambda)
        }
    };
    let mut pi0_hat = Pi0Estimates {
        conventional: estimate(&conv)?,
        mid: estimate(&mid)?,
        randomized: None,
    };

    let capped = |pi0: f64| (alpha / pi0).min(procedure::DEFAULT_LEVEL_CAP);
    let mut outcomes = Vec::with_capacity(methods.len());
    for &method in methods {
        let (result, level, pi0): (StepUpResult, f64, Option<f64>) = match method {
            Method::Bh => (procedure::bh(&conv, alpha)?, alpha, None),
            Method::BhMidp => (procedure::bh(&mid, alpha)?, alpha, None),
            Method::Abh => {
                let p = pi0_hat.conventional;
                (procedure::adaptive_bh(&conv, alpha, p)?, capped(p), Some(p))
            }
            Method::AbhMidp => {
                let p = pi0_hat.mid;
                (procedure::adaptive_bh(&mid, alpha, p)?, capped(p), Some(p))
            }
            Method::Sarp => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.expect("checked above"));
                let randomized: Vec<f64> = tests
                    .iter()
                    .map(|t| {
                        let u: f64 = rng.random();
                        if t.untestable {
                            1.0
                        } else {
                            t.l + (1.0 - u) * t.e
                        }
                    })
                    .collect();
                let out = sarp_on_randomized(randomized, alpha, lambda)?;
                pi0_hat.randomized = Some(out.pi0_hat);
                (out.result, capped(out.pi0_hat), Some(out.pi0_hat))
            }
        };
        outcomes.push(MethodOutcome {
            method,
            level,
            pi0_hat: pi0,
            discoveries: result.num_rejected(),
            rejected: result.flags(m),
        });
    }
    Ok(RunReport {
        family: table.family,
        alpha,
        lambda,
        seed,
        tests,
        pi0_hat,
        methods: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<CountTable> {
        CountTable::from_reader(text.as_bytes())
    }

    #[test]
    fn infers_family_from_header() {
        let t = parse("id,c1,c2\na,0,4\nb,2,2\n").unwrap();
        assert_eq!(t.family, TestFamily::Bt);
        assert_eq!(t.rows[1].total(), 4);
        let t = parse("id,c1,c2,N1,N2\na,0,2,3,3\n").unwrap();
        assert_eq!(t.family, TestFamily::Fet);
        assert_eq!(t.rows[0].trials, Some((3, 3)));
    }

    #[test]
    fn validation_errors_carry_row_numbers() {
        match parse("id,c1,c2\na,0,4\nb,-1,2\n") {
            Err(Error::MalformedRow { row: 2, message }) => assert!(message.contains("negative")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("id,c1,c2\na,0,4\na,1,2\n"),
            Err(Error::MalformedRow { row: 2, .. })
        ));
        assert!(matches!(
            parse("id,c1,c2,N1,N2\na,4,2,3,3\n"),
            Err(Error::MalformedRow { row: 1, .. })
        ));
        assert!(parse("id,c1,c2,N1\na,1,2,3\n").is_err());
        assert!(parse("name,c1,c2\na,1,2\n").is_err());
        assert!(parse("id,c1,c2\na,x,2\n").is_err());
    }

    #[test]
    fn filter_is_order_preserving_and_idempotent_at_zero() {
        let t = parse("id,c1,c2\na,1,0\nb,0,0\nc,3,4\nd,0,1\n").unwrap();
        let (same, removed) = t.clone().filter_min_total(0);
        assert_eq!((same.clone(), removed), (t.clone(), 0));
        assert_eq!(same.filter_min_total(0).0, t);
        let (kept, removed) = t.filter_min_total(2);
        assert_eq!(removed, 3);
        assert_eq!(kept.rows[0].id, "c");
    }

    #[test]
    fn three_row_example() {
        let t = parse("id,c1,c2\nr1,0,4\nr2,2,2\nr3,0,6\n").unwrap();
        let r = run_tests(&t, 0.05, &[Method::Bh, Method::BhMidp], 0.5, None).unwrap();
        let conv: Vec<&str> = r.tests.iter().map(|t| t.conventional_exact.as_str()).collect();
        let mid: Vec<&str> = r.tests.iter().map(|t| t.mid_exact.as_str()).collect();
        assert_eq!(conv, ["1/8", "1", "1/32"]);
        assert_eq!(mid, ["1/16", "13/16", "1/64"]);
        // 1/32 exceeds 0.05/3, while 1/64 does not
        assert_eq!(r.methods[0].rejected, [false, false, false]);
        assert_eq!(r.methods[1].rejected, [false, false, true]);
    }

    #[test]
    fn empty_table_and_seed_requirement() {
        let t = parse("id,c1,c2\n").unwrap();
        let r = run_tests(&t, 0.05, &Method::ALL, 0.5, Some(1)).unwrap();
        assert!(r.methods.iter().all(|o| o.discoveries == 0));
        assert!(run_tests(&t, 0.05, &[Method::Sarp], 0.5, None).is_err());
    }

    #[test]
    fn dirac_and_untestable_rows_are_flagged() {
        let t = parse("id,c1,c2,N1,N2\na,1,0,5,5\nb,0,0,5,5\nc,0,3,5,5\n").unwrap();
        let e = table_pvalues(&t).unwrap();
        assert!(e[0].dirac && !e[0].untestable);
        assert!(e[1].untestable && e[1].conventional == 1.0);
        assert!(!e[2].dirac);
    }

    #[test]
    fn json_round_trip() {
        let t = parse("id,c1,c2\nr1,0,4\nr2,2,2\nr3,0,6\nr4,1,9\nr5,7,0\n").unwrap();
        let r = run_tests(&t, 0.1, &Method::ALL, 0.5, Some(7)).unwrap();
        let back = RunReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
