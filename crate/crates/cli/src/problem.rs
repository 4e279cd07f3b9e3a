//! Problem files: a covariance plus optional budget, pair, schedule and
//! analysis settings, all as JSON with row-major nested arrays.

use std::path::Path;

use fpopt_core::{
    construct_optimal, max_initial_decay, AntisymmetricMatrix, CoefficientPair, Covariance, DMatrix, Schedule,
    SymmetricMatrix, Variant,
};
use serde::Deserialize;

use crate::error::CliError;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CovarianceInput {
    Full(Rows),
    Diagonal {
        diag: Vec<f64>,
    },
    /// Eigenvectors are the columns of the given matrix.
    Eigen {
        eigenvalues: Vec<f64>,
        eigenvectors: Rows,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    Optimal,
    Reversible,
    MaxInitialDecay,
}

/// One of `{C, D}`, `{D, J}`, `{C_tilde, D_tilde}`, `{D_tilde, J_tilde}` or
/// a `construct` directive.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInput {
    #[serde(rename = "C")]
    pub c: Option<Rows>,
    #[serde(rename = "D")]
    pub d: Option<Rows>,
    #[serde(rename = "J")]
    pub j: Option<Rows>,
    #[serde(rename = "C_tilde")]
    pub c_tilde: Option<Rows>,
    #[serde(rename = "D_tilde")]
    pub d_tilde: Option<Rows>,
    #[serde(rename = "J_tilde")]
    pub j_tilde: Option<Rows>,
    pub construct: Option<Directive>,
    /// Budget for `construct: optimal`; defaults to the file's `c`.
    #[serde(rename = "c")]
    pub budget: Option<f64>,
    pub variant: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub pair: Option<PairInput>,
    pub construct: Option<Directive>,
    #[serde(rename = "c")]
    pub budget: Option<f64>,
    pub variant: Option<String>,
    /// Omitted for the last piece, which runs forever.
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    pub rate: Option<f64>,
    #[serde(alias = "tMax")]
    pub tmax: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub id: Option<String>,
    #[serde(rename = "K")]
    pub k: CovarianceInput,
    pub c: Option<f64>,
    pub variant: Option<String>,
    pub pair: Option<PairInput>,
    pub schedule: Option<Vec<ScheduleEntry>>,
    pub analysis: Option<Analysis>,
    // written by `optimize`; accepted so certificates validate as-is
    #[allow(dead_code)]
    pub lambda_opt: Option<f64>,
    #[allow(dead_code)]
    pub certificate: Option<serde_json::Value>,
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::parse(format!("{}: {}", path.display(), e.message)))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::parse(e.to_string()))
    }

    pub fn covariance(&self) -> Result<Covariance, CliError> {
        let cov = match &self.k {
            CovarianceInput::Full(rows) => Covariance::new(matrix(rows, "K")?),
            CovarianceInput::Diagonal { diag } => Covariance::from_diagonal(diag),
            CovarianceInput::Eigen { eigenvalues, eigenvectors } => {
                Covariance::from_eigen(eigenvalues, matrix(eigenvectors, "eigenvectors")?)
            }
        };
        cov.map_err(|e| CliError::from_input("K", e))
    }

    pub fn variant(&self) -> Result<Variant, CliError> {
        parse_variant(self.variant.as_deref())
    }

    /// The explicit or constructed pair, if the file has one.
    pub fn pair(&self, cov: &Covariance) -> Result<Option<CoefficientPair>, CliError> {
        self.pair.as_ref().map(|p| self.resolve(cov, p, "pair")).transpose()
    }

    /// The file's schedule, or a constant schedule built from its pair.
    pub fn schedule(&self, cov: &Covariance) -> Result<Schedule, CliError> {
        if let Some(entries) = &self.schedule {
            if self.pair.is_some() {
                return Err(CliError::parse("give either 'pair' or 'schedule', not both"));
            }
            return self.build_schedule(cov, entries);
        }
        let pair = self.pair(cov)?.ok_or_else(|| CliError::parse("problem has neither a 'pair' nor a 'schedule'"))?;
        Schedule::constant(cov.clone(), pair).map_err(|e| CliError::from_input("pair", e))
    }

    fn build_schedule(&self, cov: &Covariance, entries: &[ScheduleEntry]) -> Result<Schedule, CliError> {
        let Some((last, pieces)) = entries.split_last() else {
            return Err(CliError::parse("schedule is empty"));
        };
        if last.duration.is_some() {
            return Err(CliError::parse("the last schedule entry runs forever; omit its 'duration'"));
        }
        let mut starts = vec![0.0];
        let mut pairs = Vec::with_capacity(entries.len());
        for (i, entry) in entries.iter().enumerate() {
            let label = format!("schedule[{i}]");
            let pair_input = match (&entry.pair, entry.construct) {
                (Some(_), Some(_)) => {
                    return Err(CliError::parse(format!("{label}: give either 'pair' or 'construct'")))
                }
                (Some(p), None) => {
                    if entry.budget.is_some() || entry.variant.is_some() {
                        return Err(CliError::parse(format!("{label}: 'c' and 'variant' belong inside 'pair'")));
                    }
                    p.clone()
                }
                (None, Some(directive)) => PairInput {
                    construct: Some(directive),
                    budget: entry.budget,
                    variant: entry.variant.clone(),
                    ..PairInput::default()
                },
                (None, None) => return Err(CliError::parse(format!("{label}: missing 'pair' or 'construct'"))),
            };
            pairs.push(self.resolve(cov, &pair_input, &label)?);
            if i < pieces.len() {
                let duration = entry.duration.ok_or_else(|| CliError::parse(format!("{label}: missing 'duration'")))?;
                if !(duration.is_finite() && duration > 0.0) {
                    return Err(CliError::parse(format!("{label}: duration must be > 0, got {duration}")));
                }
                starts.push(starts[i] + duration);
            }
        }
        Schedule::new(cov.clone(), starts, pairs).map_err(|e| CliError::from_input("schedule", e))
    }

    fn resolve(&self, cov: &Covariance, p: &PairInput, label: &str) -> Result<CoefficientPair, CliError> {
        let ctx = |e| CliError::from_input(label, e);
        if let Some(directive) = p.construct {
            let explicit = [&p.c, &p.d, &p.j, &p.c_tilde, &p.d_tilde, &p.j_tilde];
            if explicit.iter().any(|m| m.is_some()) {
                return Err(CliError::parse(format!("{label}: 'construct' excludes explicit matrices")));
            }
            return match directive {
                Directive::Optimal => {
                    let c = p
                        .budget
                        .or(self.c)
                        .ok_or_else(|| CliError::parse(format!("{label}: 'construct: optimal' needs a budget 'c'")))?;
                    let variant = match &p.variant {
                        Some(v) => parse_variant(Some(v))?,
                        None => self.variant()?,
                    };
                    Ok(construct_optimal(cov, c, variant).map_err(ctx)?.pair)
                }
                Directive::Reversible => Ok(CoefficientPair::reversible(cov)),
                Directive::MaxInitialDecay => Ok(max_initial_decay(cov).map_err(ctx)?.1),
            };
        }
        if p.budget.is_some() || p.variant.is_some() {
            return Err(CliError::parse(format!("{label}: 'c' and 'variant' only apply to 'construct'")));
        }
        let m = |rows: &Rows, name: &str| matrix(rows, &format!("{label}.{name}"));
        let (c, d) = match (&p.c, &p.d, &p.j, &p.c_tilde, &p.d_tilde, &p.j_tilde) {
            (Some(c), Some(d), None, None, None, None) => (m(c, "C")?, m(d, "D")?),
            (None, Some(d), Some(j), None, None, None) => {
                let d = m(d, "D")?;
                let j = m(j, "J")?;
                check_shapes(cov, &[&d, &j], label)?;
                AntisymmetricMatrix::new(j.clone()).map_err(ctx)?;
                ((&d + j) * cov.inverse(), d)
            }
            (None, None, None, Some(ct), Some(dt), None) => {
                let (ct, dt) = (m(ct, "C_tilde")?, m(dt, "D_tilde")?);
                check_shapes(cov, &[&ct, &dt], label)?;
                (cov.sqrt() * ct * cov.inv_sqrt(), cov.uncongruence(&dt))
            }
            (None, None, None, None, Some(dt), Some(jt)) => {
                let (dt, jt) = (m(dt, "D_tilde")?, m(jt, "J_tilde")?);
                check_shapes(cov, &[&dt, &jt], label)?;
                AntisymmetricMatrix::new(jt.clone()).map_err(ctx)?;
                let ct = dt.clone() + jt;
                (cov.sqrt() * ct * cov.inv_sqrt(), cov.uncongruence(&dt))
            }
            _ => {
                return Err(CliError::parse(format!(
                    "{label}: expected one of {{C, D}}, {{D, J}}, {{C_tilde, D_tilde}}, {{D_tilde, J_tilde}} or 'construct'"
                )))
            }
        };
        let d = SymmetricMatrix::new(d).map_err(ctx)?;
        CoefficientPair::from_drift(cov, c, d).map_err(ctx)
    }
}

pub fn parse_variant(name: Option<&str>) -> Result<Variant, CliError> {
    match name {
        None => Ok(Variant::Standard),
        Some(s) => s.parse().map_err(|e: fpopt_core::Error| CliError::parse(e.to_string())),
    }
}

fn check_shapes(cov: &Covariance, ms: &[&DMatrix<f64>], label: &str) -> Result<(), CliError> {
    let n = cov.dim();
    for m in ms {
        if m.shape() != (n, n) {
            return Err(CliError::parse(format!(
                "{label}: expected {n}x{n} matrices, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(())
}

/// Row-major nested array to a matrix; rows must be non-empty and equally long.
pub fn matrix(rows: &Rows, name: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(CliError::parse(format!("{name}: empty matrix")));
    }
    if rows.iter().any(|r| r.len() != m) {
        return Err(CliError::parse(format!("{name}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
