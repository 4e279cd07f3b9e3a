//! Data behind the four figures of the anisotropic 2D case study
//! `K = diag(1/ε, 1)`, `ε = 0.05`.

use std::fs;
use std::path::Path;

use fpopt_core::{
    construct_optimal, envelope_curve, make_pair_from_j, max_initial_decay, spectral_gap, tangency_time,
    AntisymmetricMatrix, CoefficientPair, Covariance, DMatrix, LambdaSchedule, Schedule, SymmetricMatrix, Variant,
};
use serde::Serialize;

use crate::error::CliError;

pub const EPSILON: f64 = 0.05;
/// Switching time of the hand-tuned `μ = 13.8` schedule.
pub const FP6_SWITCH: f64 = 0.11413;
pub const FP6_MU: f64 = 13.8;
const MAIN_HORIZON: f64 = 5.0;
const ZOOM_HORIZON: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl std::str::FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "fig1" => Ok(Figure::Fig1),
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            other => Err(CliError::parse(format!("unknown figure '{other}' (expected fig1, fig2, fig3 or fig4)"))),
        }
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub figure: &'static str,
    pub version: &'static str,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    pub samples: usize,
    /// Every switching time used by the figure's schedules, ascending.
    pub breakpoints: Vec<f64>,
    pub curves: Vec<CurveEntry>,
}

#[derive(Debug, Serialize)]
pub struct CurveEntry {
    pub file: String,
    /// `norm`, `envelope` or `limit`.
    pub kind: &'static str,
    pub label: String,
    pub rate: f64,
    pub tmax: f64,
    pub sharp_constant: Option<f64>,
    pub breakpoints: Vec<f64>,
    pub params: serde_json::Value,
}

pub fn covariance() -> Covariance {
    Covariance::from_diagonal(&[1.0 / EPSILON, 1.0]).expect("positive diagonal")
}

/// Pair with `C̃ = [[0, −μ], [μ, 2]]` and `D = diag(0, 2)`.
pub fn rotating_pair(cov: &Covariance, mu: f64) -> Result<CoefficientPair, CliError> {
    let d_tilde = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0]);
    let j_tilde = DMatrix::from_row_slice(2, 2, &[0.0, -mu, mu, 0.0]);
    let d = SymmetricMatrix::new(cov.uncongruence(&d_tilde))?;
    let j = AntisymmetricMatrix::new(cov.uncongruence(&j_tilde))?;
    Ok(make_pair_from_j(cov, &d, &j)?)
}

/// `D = I`, `C = K⁻¹`: the reversible pair, with `C̃ = diag(ε, 1)`.
pub fn reversible_pair(cov: &Covariance) -> CoefficientPair {
    CoefficientPair::reversible(cov)
}

/// `C̃ = 2ε/(1+ε) · I`: the symmetric pair with maximal initial decay.
pub fn max_decay_pair(cov: &Covariance) -> Result<CoefficientPair, CliError> {
    Ok(max_initial_decay(cov)?.1)
}

/// Pair `first` on `[0, t₀)`, then the `μ = 7` rotating pair.
pub fn split_schedule(cov: &Covariance, first: CoefficientPair, t0: f64) -> Result<Schedule, CliError> {
    Ok(Schedule::piecewise(cov.clone(), vec![(first, t0)], rotating_pair(cov, 7.0)?)?)
}

pub fn mu_for(c: f64) -> f64 {
    (c * c + 1.0) / (c * c - 1.0)
}

struct Writer<'a> {
    dir: &'a Path,
    samples: usize,
    curves: Vec<CurveEntry>,
}

impl Writer<'_> {
    fn norm(
        &mut self,
        file: &str,
        label: &str,
        schedule: &Schedule,
        rate: f64,
        tmax: f64,
        params: serde_json::Value,
    ) -> Result<f64, CliError> {
        let curve = envelope_curve(schedule, rate, tmax, self.samples)?;
        fs::write(self.dir.join(file), curve.to_csv(curve.sharp_constant))?;
        self.curves.push(CurveEntry {
            file: file.into(),
            kind: "norm",
            label: label.into(),
            rate,
            tmax,
            sharp_constant: Some(curve.sharp_constant),
            breakpoints: schedule.breakpoints().to_vec(),
            params,
        });
        Ok(curve.sharp_constant)
    }

    /// `constant · e^{−rate t}` on the uniform grid; `kind` is `envelope` or `limit`.
    fn exponential(
        &mut self,
        file: &str,
        kind: &'static str,
        label: &str,
        constant: f64,
        rate: f64,
        tmax: f64,
    ) -> Result<(), CliError> {
        let mut csv = String::from("t,envelope\n");
        let last = (self.samples - 1) as f64;
        for j in 0..self.samples {
            let t = tmax * j as f64 / last;
            let v = constant * (-rate * t).exp();
            csv.push_str(&format!("{t:.16e},{v:.16e}\n"));
        }
        fs::write(self.dir.join(file), csv)?;
        self.curves.push(CurveEntry {
            file: file.into(),
            kind,
            label: label.into(),
            rate,
            tmax,
            sharp_constant: Some(constant),
            breakpoints: Vec::new(),
            params: serde_json::json!({ "constant": constant }),
        });
        Ok(())
    }
}

/// Writes every CSV of `figure` plus `manifest.json` into `dir`.
pub fn reproduce(figure: Figure, dir: &Path, samples: usize) -> Result<Manifest, CliError> {
    if samples < 2 {
        return Err(CliError::parse("need at least 2 samples"));
    }
    fs::create_dir_all(dir)?;
    let cov = covariance();
    let mut w = Writer { dir, samples, curves: Vec::new() };
    match figure {
        Figure::Fig1 => fig1(&cov, &mut w)?,
        Figure::Fig2 => fig2(&cov, &mut w)?,
        Figure::Fig3 => fig3(&cov, &mut w)?,
        Figure::Fig4 => fig4(&cov, &mut w)?,
    }
    let mut breakpoints: Vec<f64> = w.curves.iter().flat_map(|c| c.breakpoints.iter().copied()).collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    let manifest = Manifest {
        figure: figure.name(),
        version: env!("CARGO_PKG_VERSION"),
        epsilon: EPSILON,
        k: cov.matrix().diagonal().iter().copied().collect(),
        samples,
        breakpoints,
        curves: w.curves,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::new(1, e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

fn fig1(cov: &Covariance, w: &mut Writer) -> Result<(), CliError> {
    let rate = cov.lambda_opt();
    for (c, tag) in [(3.0, "3"), (2.0, "2"), (1.5, "1.5")] {
        let cert = construct_optimal(cov, c, Variant::Standard)?;
        let schedule = Schedule::constant(cov.clone(), cert.pair)?;
        let params = serde_json::json!({ "c": c, "mu": mu_for(c) });
        w.norm(
            &format!("norm_c{tag}.csv"),
            &format!("optimal pair, c = {tag}"),
            &schedule,
            rate,
            MAIN_HORIZON,
            params,
        )?;
        w.exponential(&format!("envelope_c{tag}.csv"), "envelope", &format!("{tag} e^(-t)"), c, rate, MAIN_HORIZON)?;
    }
    w.exponential("limit.csv", "limit", "high-rotational limit e^(-t)", 1.0, rate, MAIN_HORIZON)
}

fn fig2(cov: &Covariance, w: &mut Writer) -> Result<(), CliError> {
    let c = 2f64.sqrt();
    let rate = cov.lambda_opt();
    let optimal = construct_optimal(cov, c, Variant::Standard)?;
    let shifted = fpopt_core::construct_with_schedule(cov, &LambdaSchedule::shifted_integers(2)?, Variant::Standard)?;
    let curves = [
        ("optimal", "optimal pair, c = sqrt(2)", optimal.pair, serde_json::json!({ "c": c, "mu": 3.0 })),
        (
            "shifted_weights",
            "pair from weights lambda_k = d + k",
            shifted.pair,
            serde_json::json!({ "lambdas": [3.0, 4.0], "mu": 7.0 }),
        ),
        ("reversible", "reversible pair (K^-1, I)", reversible_pair(cov), serde_json::json!({})),
        (
            "max_initial_decay",
            "symmetric pair with maximal initial decay",
            max_decay_pair(cov)?,
            serde_json::json!({ "initial_rate": 2.0 / 21.0 }),
        ),
    ];
    for (suffix, horizon) in [("", MAIN_HORIZON), ("_zoom", ZOOM_HORIZON)] {
        for (name, label, pair, params) in &curves {
            let schedule = Schedule::constant(cov.clone(), pair.clone())?;
            // symmetric pairs decay at their own gap; the optimal ones at λ_opt
            let own = spectral_gap(pair)?.min(rate);
            w.norm(&format!("{name}{suffix}.csv"), label, &schedule, own, horizon, params.clone())?;
        }
        w.exponential(&format!("envelope{suffix}.csv"), "envelope", "sqrt(2) e^(-t)", c, rate, horizon)?;
    }
    Ok(())
}

fn fig3_candidates(cov: &Covariance) -> Result<Vec<(&'static str, &'static str, CoefficientPair)>, CliError> {
    Ok(vec![
        ("fp1", "reference, mu = 7 throughout", rotating_pair(cov, 7.0)?),
        ("fp2", "reversible start", reversible_pair(cov)),
        ("fp3", "maximal initial decay start", max_decay_pair(cov)?),
        ("fp4", "slower rotation start, mu = 3", rotating_pair(cov, 3.0)?),
        ("fp5", "faster rotation start, mu = 11", rotating_pair(cov, 11.0)?),
    ])
}

fn fig3(cov: &Covariance, w: &mut Writer) -> Result<(), CliError> {
    let t0 = 0.1;
    let mut fp1_constant = None;
    for (name, label, first) in fig3_candidates(cov)? {
        let schedule = split_schedule(cov, first, t0)?;
        let sc =
            w.norm(&format!("{name}.csv"), label, &schedule, 1.0, MAIN_HORIZON, serde_json::json!({ "t0": t0 }))?;
        fp1_constant.get_or_insert(sc);
    }
    let sc = fp1_constant.expect("five candidates");
    w.exponential("fp1_envelope.csv", "envelope", "reference envelope", sc, 1.0, MAIN_HORIZON)
}

fn fig4(cov: &Covariance, w: &mut Writer) -> Result<(), CliError> {
    let fp5 = rotating_pair(cov, 11.0)?;
    let t5 = tangency_time(&fp5, cov, 1.0)?;
    let runs = [
        ("fp1", "reference, mu = 7 throughout", rotating_pair(cov, 7.0)?, None, 7.0),
        ("fp5", "mu = 11 up to its first tangency", fp5, Some(t5), 11.0),
        ("fp6", "mu = 13.8 up to t = 0.11413", rotating_pair(cov, FP6_MU)?, Some(FP6_SWITCH), FP6_MU),
    ];
    for (name, label, first, t0, mu) in runs {
        let schedule = match t0 {
            Some(t0) => split_schedule(cov, first, t0)?,
            None => Schedule::constant(cov.clone(), first)?,
        };
        let params = serde_json::json!({ "t0": t0, "mu": mu });
        let sc = w.norm(&format!("{name}.csv"), label, &schedule, 1.0, MAIN_HORIZON, params)?;
        w.exponential(
            &format!("{name}_envelope.csv"),
            "envelope",
            &format!("{label}: envelope"),
            sc,
            1.0,
            MAIN_HORIZON,
        )?;
    }
    Ok(())
}
