//! JSON documents written by `optimize` and `validate`.

use fpopt_core::{frobenius_bound, Covariance, OptimalCertificate, ValidationReport};
use serde::Serialize;

use crate::problem::{rows, Rows};

#[derive(Debug, Serialize)]
pub struct PairJson {
    #[serde(rename = "C")]
    pub c: Rows,
    #[serde(rename = "D")]
    pub d: Rows,
}

#[derive(Debug, Serialize)]
pub struct CertificateDetails {
    #[serde(rename = "J")]
    pub j: Rows,
    #[serde(rename = "C_tilde")]
    pub c_tilde: Rows,
    #[serde(rename = "D_tilde")]
    pub d_tilde: Rows,
    #[serde(rename = "J_tilde")]
    pub j_tilde: Rows,
    /// Unit vector spanning the range of `D`.
    pub v: Vec<f64>,
    #[serde(rename = "Psi")]
    pub psi: Rows,
    /// `None` for isotropic covariances.
    pub lambdas: Option<Vec<f64>>,
    /// Lyapunov matrix of the variant.
    #[serde(rename = "Q")]
    pub q: Rows,
    /// Weight of the norm that decays exactly at `lambda_opt`.
    #[serde(rename = "P")]
    pub p: Rows,
    pub constant: f64,
    pub lyapunov_residual: f64,
    pub frobenius_c: f64,
    pub frobenius_bound: Option<f64>,
}

/// Serialized certificate; doubles as a problem file for `validate`.
#[derive(Debug, Serialize)]
pub struct CertificateJson {
    #[serde(rename = "K")]
    pub k: Rows,
    pub c: f64,
    pub variant: &'static str,
    pub lambda_opt: f64,
    pub pair: PairJson,
    pub certificate: CertificateDetails,
}

impl CertificateJson {
    pub fn new(cov: &Covariance, c: f64, cert: &OptimalCertificate) -> Self {
        let pair = &cert.pair;
        Self {
            k: rows(cov.matrix()),
            c,
            variant: cert.variant.as_str(),
            lambda_opt: cert.lambda_opt,
            pair: PairJson { c: rows(pair.drift()), d: rows(pair.diffusion().as_matrix()) },
            certificate: CertificateDetails {
                j: rows(pair.rotation()),
                c_tilde: rows(pair.drift_tilde()),
                d_tilde: rows(pair.diffusion_tilde()),
                j_tilde: rows(pair.rotation_tilde()),
                v: cert.direction.iter().copied().collect(),
                psi: rows(cert.basis.psi()),
                lambdas: cert.schedule.as_ref().map(|s| s.values().to_vec()),
                q: rows(&cert.lyapunov),
                p: rows(&cert.norm_weight),
                constant: cert.constant,
                lyapunov_residual: cert.lyapunov_residual(),
                frobenius_c: pair.drift_frobenius(),
                frobenius_bound: frobenius_bound(cov, c).ok().map(|b| b.0),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub all_pass: bool,
    pub lyapunov_residual: f64,
    pub lyapunov_tolerance: f64,
    pub trace: f64,
    pub trace_ok: bool,
    pub min_eigenvalue_d: f64,
    pub psd: bool,
    pub rank_d: usize,
    pub admissible: bool,
    pub spectral_gap: Option<f64>,
    pub positive_stable: bool,
    pub hypoelliptic: bool,
    pub steady_state_unique: bool,
}

impl From<&ValidationReport> for ReportJson {
    fn from(r: &ValidationReport) -> Self {
        Self {
            all_pass: r.all_pass(),
            lyapunov_residual: r.lyapunov_residual,
            lyapunov_tolerance: r.lyapunov_tolerance,
            trace: r.trace,
            trace_ok: r.trace_ok,
            min_eigenvalue_d: r.min_eigenvalue_d,
            psd: r.psd,
            rank_d: r.rank_d,
            admissible: r.admissible,
            spectral_gap: r.spectral_gap,
            positive_stable: r.positive_stable,
            hypoelliptic: r.hypoelliptic,
            steady_state_unique: r.steady_state_unique,
        }
    }
}

/// Report for a schedule: one entry per piece.
#[derive(Debug, Serialize)]
pub struct ScheduleReportJson {
    pub all_pass: bool,
    pub pieces: Vec<ReportJson>,
}
