//! Categorical record data and per-stratum conditional probability tables.
//!
//! A [`ConditionalModel`] holds, for each covariate stratum `c`, the outcome
//! table `pr(Y=1 | a, m, c)` and the mediator table `pr(m | a, c)` for the
//! two exposure levels. Models are either estimated from integer-coded
//! records or built directly (the oracle marginalizes a structural model
//! into one).

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for "sums to one" and law-of-total-probability checks.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// How outcome cells are interpreted.
///
/// `MeanRatio` covers nonnegative outcomes (counts, positive continuous
/// outcomes, rare-event hazards): the cells are conditional means, not
/// bounded by one, and risk-ratio arithmetic is reused unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeMode {
    #[default]
    Probability,
    MeanRatio,
}

/// One weighted observation `(a, m, y, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Record {
    pub a: u8,
    pub m: usize,
    pub y: u8,
    pub c: usize,
    pub count: u64,
}

/// Integer-coded records with declared mediator and covariate cardinalities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordTable {
    rows: Vec<Record>,
    m_levels: usize,
    c_levels: usize,
}

impl RecordTable {
    pub fn new(rows: Vec<Record>, m_levels: usize, c_levels: usize) -> Result<Self> {
        if m_levels == 0 || c_levels == 0 {
            return Err(Error::BadParameter(
                "mediator and covariate cardinalities must be at least 1".into(),
            ));
        }
        for row in &rows {
            check_row(row, m_levels, c_levels)?;
        }
        Ok(Self {
            rows,
            m_levels,
            c_levels,
        })
    }

    /// Parses `a,m,y,c[,count]` CSV, inferring cardinalities from the data.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = parse_csv(reader)?;
        let m_levels = rows.iter().map(|r| r.m + 1).max().unwrap_or(1);
        let c_levels = rows.iter().map(|r| r.c + 1).max().unwrap_or(1);
        Self::new(rows, m_levels, c_levels)
    }

    /// Parses CSV against declared cardinalities.
    pub fn from_csv_with_levels<R: Read>(
        reader: R,
        m_levels: usize,
        c_levels: usize,
    ) -> Result<Self> {
        let rows = parse_csv(reader)?;
        Self::new(rows, m_levels, c_levels)
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn m_levels(&self) -> usize {
        self.m_levels
    }

    pub fn c_levels(&self) -> usize {
        self.c_levels
    }

    pub fn total_count(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }

    /// Merges duplicate `(a, m, y, c)` rows, summing counts. Output is sorted.
    pub fn merged(&self) -> Self {
        let mut acc: BTreeMap<(u8, usize, u8, usize), u64> = BTreeMap::new();
        for r in &self.rows {
            *acc.entry((r.a, r.m, r.y, r.c)).or_default() += r.count;
        }
        let rows = acc
            .into_iter()
            .map(|((a, m, y, c), count)| Record { a, m, y, c, count })
            .collect();
        Self {
            rows,
            m_levels: self.m_levels,
            c_levels: self.c_levels,
        }
    }

    /// Swaps exposure codes 0 and 1.
    pub fn relabel_exposure(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| Record { a: 1 - r.a, ..*r })
            .collect();
        Self {
            rows,
            m_levels: self.m_levels,
            c_levels: self.c_levels,
        }
    }

    /// Same cardinalities, new rows. Rows are assumed to come from this table.
    pub fn with_rows(&self, rows: Vec<Record>) -> Self {
        Self {
            rows,
            m_levels: self.m_levels,
            c_levels: self.c_levels,
        }
    }
}

fn check_row(row: &Record, m_levels: usize, c_levels: usize) -> Result<()> {
    if row.a > 1 {
        return Err(Error::BadCode {
            field: "a",
            level: row.a as usize,
            cardinality: 2,
        });
    }
    if row.y > 1 {
        return Err(Error::BadCode {
            field: "y",
            level: row.y as usize,
            cardinality: 2,
        });
    }
    if row.m >= m_levels {
        return Err(Error::BadCode {
            field: "m",
            level: row.m,
            cardinality: m_levels,
        });
    }
    if row.c >= c_levels {
        return Err(Error::BadCode {
            field: "c",
            level: row.c,
            cardinality: c_levels,
        });
    }
    if row.count == 0 {
        return Err(Error::BadParameter("record counts must be positive".into()));
    }
    Ok(())
}

fn parse_csv<R: Read>(reader: R) -> Result<Vec<Record>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_count = match names.as_slice() {
        ["a", "m", "y", "c"] => false,
        ["a", "m", "y", "c", "count"] => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header a,m,y,c[,count], found {}", names.join(",")),
            })
        }
    };

    let mut rows = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize, name: &str| -> Result<u64> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse::<u64>().map_err(|_| Error::Parse {
                line,
                message: format!("column {name}: `{raw}` is not a nonnegative integer"),
            })
        };
        let a = field(0, "a")?;
        let m = field(1, "m")?;
        let y = field(2, "y")?;
        let c = field(3, "c")?;
        let count = if has_count { field(4, "count")? } else { 1 };
        if a > 1 || y > 1 {
            return Err(Error::Parse {
                line,
                message: format!("a and y must be 0 or 1 (got a={a}, y={y})"),
            });
        }
        if count == 0 {
            return Err(Error::Parse {
                line,
                message: "count must be positive".into(),
            });
        }
        rows.push(Record {
            a: a as u8,
            m: m as usize,
            y: y as u8,
            c: c as usize,
            count,
        });
    }
    Ok(rows)
}

/// Conditional tables for one covariate stratum.
///
/// Indexing is `y_prob[a][m] = pr(Y=1 | a, m, c)` and
/// `m_prob[a][m] = pr(m | a, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumModel {
    pub c: usize,
    pub y_prob: [Vec<f64>; 2],
    pub m_prob: [Vec<f64>; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_marg: Option<[f64; 2]>,
}

impl StratumModel {
    pub fn new(c: usize, y_prob: [Vec<f64>; 2], m_prob: [Vec<f64>; 2]) -> Self {
        Self {
            c,
            y_prob,
            m_prob,
            y_marg: None,
        }
    }

    pub fn m_levels(&self) -> usize {
        self.m_prob[0].len()
    }

    /// `Σ_m pr(Y=1 | a_y, m, c) pr(m | a_m, c)`.
    pub fn mixed_mean(&self, a_y: usize, a_m: usize) -> f64 {
        self.y_prob[a_y]
            .iter()
            .zip(&self.m_prob[a_m])
            .map(|(y, m)| y * m)
            .sum()
    }

    /// `pr(Y=1 | a, c)` by the law of total probability.
    pub fn outcome_marginal(&self, a: usize) -> f64 {
        self.mixed_mean(a, a)
    }

    /// The tables with exposure levels swapped.
    pub fn relabeled(&self) -> Self {
        Self {
            c: self.c,
            y_prob: [self.y_prob[1].clone(), self.y_prob[0].clone()],
            m_prob: [self.m_prob[1].clone(), self.m_prob[0].clone()],
            y_marg: self.y_marg.map(|[y0, y1]| [y1, y0]),
        }
    }
}

/// Per-stratum conditional tables plus the outcome interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalModel {
    pub mode: OutcomeMode,
    pub strata: Vec<StratumModel>,
}

impl ConditionalModel {
    /// Builds and validates a model.
    pub fn new(mode: OutcomeMode, strata: Vec<StratumModel>) -> Result<Self> {
        validate(Self { mode, strata })
    }

    pub fn stratum(&self, c: usize) -> Option<&StratumModel> {
        self.strata.iter().find(|s| s.c == c)
    }

    pub fn relabeled(&self) -> Self {
        Self {
            mode: self.mode,
            strata: self.strata.iter().map(StratumModel::relabeled).collect(),
        }
    }
}

/// Empirical conditional tables with add-`smoothing` pseudo-counts.
///
/// Every cell of each conditional table receives the same pseudo-count before
/// normalization. With `smoothing == 0`, an empty `(a, c)` cell is an error,
/// and so is an empty `(a, m, c)` cell whose outcome probability enters an
/// identification formula (that is, `pr(m | A=0, c) > 0`, or `a = 1` and
/// `pr(m | A=1, c) > 0`). Outcome cells that never enter a formula are set
/// to zero. Strata are the distinct covariate levels present in the records.
pub fn estimate_from_records(records: &RecordTable, smoothing: f64) -> Result<ConditionalModel> {
    if !(smoothing >= 0.0) || !smoothing.is_finite() {
        return Err(Error::BadParameter(format!(
            "smoothing must be a finite nonnegative number, got {smoothing}"
        )));
    }
    let k_m = records.m_levels();
    // counts[c] -> [a][m][y]
    let mut counts: BTreeMap<usize, [Vec<[u64; 2]>; 2]> = BTreeMap::new();
    for r in records.rows() {
        check_row(r, records.m_levels(), records.c_levels())?;
        let cell = counts
            .entry(r.c)
            .or_insert_with(|| [vec![[0; 2]; k_m], vec![[0; 2]; k_m]]);
        cell[r.a as usize][r.m][r.y as usize] += r.count;
    }

    let mut strata = Vec::with_capacity(counts.len());
    for (c, cell) in counts {
        let mut m_prob: [Vec<f64>; 2] = [vec![0.0; k_m], vec![0.0; k_m]];
        let mut n_am: [Vec<u64>; 2] = [vec![0; k_m], vec![0; k_m]];
        for a in 0..2 {
            for m in 0..k_m {
                n_am[a][m] = cell[a][m][0] + cell[a][m][1];
            }
            let n_a: u64 = n_am[a].iter().sum();
            if n_a == 0 && smoothing == 0.0 {
                return Err(Error::EmptyCell {
                    cell: format!("(a={a}, c={c})"),
                });
            }
            let denom = n_a as f64 + smoothing * k_m as f64;
            for m in 0..k_m {
                m_prob[a][m] = (n_am[a][m] as f64 + smoothing) / denom;
            }
        }

        let mut y_prob: [Vec<f64>; 2] = [vec![0.0; k_m], vec![0.0; k_m]];
        for a in 0..2 {
            for m in 0..k_m {
                let n = n_am[a][m];
                if n == 0 && smoothing == 0.0 {
                    let required = m_prob[0][m] > 0.0 || (a == 1 && m_prob[1][m] > 0.0);
                    if required {
                        return Err(Error::EmptyCell {
                            cell: format!("(a={a}, m={m}, c={c})"),
                        });
                    }
                    continue;
                }
                y_prob[a][m] = (cell[a][m][1] as f64 + smoothing) / (n as f64 + 2.0 * smoothing);
            }
        }
        strata.push(StratumModel::new(c, y_prob, m_prob));
    }
    validate(ConditionalModel {
        mode: OutcomeMode::Probability,
        strata,
    })
}

/// Checks every table invariant and fills in `y_marg` where absent.
pub fn validate(mut model: ConditionalModel) -> Result<ConditionalModel> {
    if model.strata.is_empty() {
        return Err(Error::Shape("model has no strata".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in &mut model.strata {
        if !seen.insert(s.c) {
            return Err(Error::Shape(format!("stratum c={} appears twice", s.c)));
        }
        let k = s.m_prob[0].len();
        if k == 0 || s.m_prob[1].len() != k || s.y_prob[0].len() != k || s.y_prob[1].len() != k {
            return Err(Error::Shape(format!(
                "stratum c={}: all tables need the same positive number of mediator levels",
                s.c
            )));
        }
        for a in 0..2 {
            for (m, &p) in s.m_prob[a].iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::OutOfRangeProbability {
                        path: format!("c={}/m_prob[{a}][{m}]", s.c),
                        value: p,
                    });
                }
            }
            let sum: f64 = s.m_prob[a].iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized {
                    path: format!("c={}/m_prob[{a}]", s.c),
                    sum,
                });
            }
            for (m, &y) in s.y_prob[a].iter().enumerate() {
                let ok = match model.mode {
                    OutcomeMode::Probability => (0.0..=1.0).contains(&y),
                    OutcomeMode::MeanRatio => y.is_finite() && y >= 0.0,
                };
                if !ok {
                    return Err(Error::OutOfRangeProbability {
                        path: format!("c={}/y_prob[{a}][{m}]", s.c),
                        value: y,
                    });
                }
            }
        }
        let implied = [s.outcome_marginal(0), s.outcome_marginal(1)];
        match s.y_marg {
            None => s.y_marg = Some(implied),
            Some(stated) => {
                for a in 0..2 {
                    if (stated[a] - implied[a]).abs() > NORMALIZATION_TOL {
                        return Err(Error::NotNormalized {
                            path: format!("c={}/y_marg[{a}] (implied {})", s.c, implied[a]),
                            sum: stated[a],
                        });
                    }
                }
            }
        }
    }
    Ok(model)
}
