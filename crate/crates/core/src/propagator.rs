//! Exact decay curves of the drift ODE `ẋ = −C̃(t) x` for piecewise-constant
//! coefficient schedules, and the sharp exponential envelopes built on them.
//!
//! The Fokker–Planck propagator restricted to the complement of the steady
//! state has the same operator norm as the ODE propagator `T(t₂, t₁)`, so
//! everything here works with `d × d` matrices only.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{self, spectral_norm, AntisymmetricMatrix, SymmetricMatrix};
use crate::pairs::{make_pair_from_j, spectral_gap, validate_pair, CoefficientPair, Covariance};

/// Minimum number of uniform samples used when searching for an envelope.
pub const MIN_ENVELOPE_SAMPLES: usize = 2048;
/// Relative growth between the two halves of the horizon that flags a rate
/// above the asymptotic decay rate.
pub const GROWTH_TOL: f64 = 1e-6;
/// Local maxima within this relative distance of the supremum count as
/// points of tangency.
pub const TANGENCY_REL_TOL: f64 = 1e-9;

const GOLDEN_ITERATIONS: usize = 80;
const REFINE_WINDOW: f64 = 0.05;
const AT_GAP_TOL: f64 = 1e-9;
const FAR_PROBE: f64 = 64.0;

/// Piecewise-constant coefficients: pair `i` is active on `[s_i, s_{i+1})`,
/// the last pair from its start time onwards.
#[derive(Debug, Clone)]
pub struct Schedule {
    cov: Covariance,
    starts: Vec<f64>,
    pairs: Vec<CoefficientPair>,
}

impl Schedule {
    /// `starts[0]` must be 0 and the start times strictly increasing; every
    /// pair must be admissible for `cov`.
    pub fn new(cov: Covariance, starts: Vec<f64>, pairs: Vec<CoefficientPair>) -> Result<Self> {
        if pairs.is_empty() || starts.len() != pairs.len() {
            return Err(Error::InvalidSchedule(format!("{} start times for {} pairs", starts.len(), pairs.len())));
        }
        if starts[0] != 0.0 {
            return Err(Error::InvalidSchedule("first piece must start at t = 0".into()));
        }
        if starts.iter().any(|s| !s.is_finite()) || starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSchedule("start times must be finite and strictly increasing".into()));
        }
        for (i, pair) in pairs.iter().enumerate() {
            if pair.dim() != cov.dim() {
                return Err(Error::DimensionMismatch { expected: cov.dim(), found: pair.dim() });
            }
            let report = validate_pair(&cov, pair);
            if !report.admissible {
                return Err(Error::InvalidSchedule(format!(
                    "piece {i} is not admissible for the covariance (residual {:.3e})",
                    report.lyapunov_residual
                )));
            }
        }
        Ok(Self { cov, starts, pairs })
    }

    pub fn constant(cov: Covariance, pair: CoefficientPair) -> Result<Self> {
        Self::new(cov, vec![0.0], vec![pair])
    }

    /// Leading pieces given with their durations, followed by a tail pair that
    /// stays active forever.
    pub fn piecewise(cov: Covariance, pieces: Vec<(CoefficientPair, f64)>, tail: CoefficientPair) -> Result<Self> {
        let mut starts = Vec::with_capacity(pieces.len() + 1);
        let mut pairs = Vec::with_capacity(pieces.len() + 1);
        let mut t = 0.0;
        for (pair, duration) in pieces {
            if !(duration.is_finite() && duration > 0.0) {
                return Err(Error::InvalidSchedule(format!("piece duration must be > 0, got {duration}")));
            }
            starts.push(t);
            pairs.push(pair);
            t += duration;
        }
        starts.push(t);
        pairs.push(tail);
        Self::new(cov, starts, pairs)
    }

    pub fn covariance(&self) -> &Covariance {
        &self.cov
    }

    pub fn pairs(&self) -> &[CoefficientPair] {
        &self.pairs
    }

    /// Switching times `s_1 < … < s_{n−1}` (excludes the initial 0).
    pub fn breakpoints(&self) -> &[f64] {
        &self.starts[1..]
    }

    pub fn last_breakpoint(&self) -> f64 {
        *self.starts.last().expect("non-empty schedule")
    }

    /// Pair active for all large times.
    pub fn asymptotic_pair(&self) -> &CoefficientPair {
        self.pairs.last().expect("non-empty schedule")
    }

    fn piece_end(&self, i: usize) -> f64 {
        self.starts.get(i + 1).copied().unwrap_or(f64::INFINITY)
    }

    /// `T(t₂, t₁)`: ordered product of `e^{−C̃_i Δ_i}`, earliest factor rightmost.
    pub fn propagator(&self, t1: f64, t2: f64) -> Result<DMatrix<f64>> {
        self.scaled_propagator(t1, t2, 0.0)
    }

    /// `e^{rate (t₂ − t₁)} T(t₂, t₁)`, computed from the shifted generators
    /// `C̃_i − rate·I` so that no factor under- or overflows.
    pub fn scaled_propagator(&self, t1: f64, t2: f64, rate: f64) -> Result<DMatrix<f64>> {
        if !(t1.is_finite() && t2.is_finite()) || t1 < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid times t1 = {t1}, t2 = {t2}")));
        }
        if t2 < t1 {
            return Err(Error::InvalidInterval { t1, t2 });
        }
        let n = self.cov.dim();
        let ident = DMatrix::<f64>::identity(n, n);
        let mut result = ident.clone();
        for (i, pair) in self.pairs.iter().enumerate() {
            let lo = self.starts[i].max(t1);
            let hi = self.piece_end(i).min(t2);
            if hi > lo {
                let generator = pair.drift_tilde() - &ident * rate;
                result = kernel::expm(&generator, hi - lo)? * result;
            }
        }
        Ok(result)
    }

    /// `e^{rate t} ‖T(t, 0)‖`.
    pub fn envelope_ratio(&self, t: f64, rate: f64) -> Result<f64> {
        spectral_norm(&self.scaled_propagator(0.0, t, rate)?)
    }

    /// Horizon that captures the global envelope supremum:
    /// `max(20 / rate, 4 · last breakpoint)`.
    pub fn default_horizon(&self, rate: f64) -> f64 {
        (20.0 / rate).max(4.0 * self.last_breakpoint())
    }
}

/// `ode_propagator`: `T(t₂, t₁)` for a schedule.
pub fn ode_propagator(schedule: &Schedule, t1: f64, t2: f64) -> Result<DMatrix<f64>> {
    schedule.propagator(t1, t2)
}

/// Sampled propagator norms `t ↦ ‖T(t, 0)‖` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NormCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Rate of the reference envelope `e^{−rate t}`.
    pub rate: f64,
    /// `max_j e^{rate t_j} · values_j` over the grid for [`norm_curve`]; the
    /// global sharp constant for [`envelope_curve`].
    pub sharp_constant: f64,
}

impl NormCurve {
    /// Writes `t,norm,envelope` rows with `envelope = constant · e^{−rate t}`,
    /// every number printed with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W, constant: f64) -> io::Result<()> {
        writeln!(out, "t,norm,envelope")?;
        for (&t, &v) in self.grid.iter().zip(&self.values) {
            let envelope = constant * (-self.rate * t).exp();
            writeln!(out, "{t:.16e},{v:.16e},{envelope:.16e}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self, constant: f64) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, constant).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

fn uniform_grid(tmax: f64, samples: usize) -> Vec<f64> {
    let last = (samples - 1) as f64;
    (0..samples).map(|j| tmax * j as f64 / last).collect()
}

/// Norm curve with the envelope rate set to the spectral gap of the
/// asymptotic pair.
pub fn norm_curve(schedule: &Schedule, tmax: f64, samples: usize) -> Result<NormCurve> {
    let rate = spectral_gap(schedule.asymptotic_pair())?;
    norm_curve_with_rate(schedule, tmax, samples, rate)
}

pub fn norm_curve_with_rate(schedule: &Schedule, tmax: f64, samples: usize, rate: f64) -> Result<NormCurve> {
    if !(tmax.is_finite() && tmax > 0.0) {
        return Err(Error::InvalidArgument(format!("tmax must be > 0, got {tmax}")));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    if !rate.is_finite() {
        return Err(Error::InvalidArgument(format!("rate must be finite, got {rate}")));
    }
    let grid = uniform_grid(tmax, samples);
    let ratios = grid.par_iter().map(|&t| schedule.envelope_ratio(t, rate)).collect::<Result<Vec<f64>>>()?;
    let values = grid.iter().zip(&ratios).map(|(&t, &g)| g * (-rate * t).exp()).collect();
    let sharp_constant = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(NormCurve { grid, values, rate, sharp_constant })
}

/// Norm curve on `[0, tmax]` whose `sharp_constant` is the global one, found
/// over the default horizon. The refined envelope maxima inside `[0, tmax]`
/// are merged into the uniform grid, so the curve touches its envelope
/// whenever a point of tangency lies in range.
pub fn envelope_curve(schedule: &Schedule, rate: f64, tmax: f64, samples: usize) -> Result<NormCurve> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let scan = envelope_scan(schedule, rate, tmax.max(schedule.default_horizon(rate)), samples)?;
    let mut grid = uniform_grid(tmax, samples);
    grid.extend(scan.maxima.iter().map(|m| m.0).filter(|&t| t < tmax));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let ratios = grid.par_iter().map(|&t| schedule.envelope_ratio(t, rate)).collect::<Result<Vec<f64>>>()?;
    let values = grid.iter().zip(&ratios).map(|(&t, &g)| g * (-rate * t).exp()).collect();
    Ok(NormCurve { grid, values, rate, sharp_constant: scan.supremum })
}

/// Refined local maxima of `t ↦ e^{rate t} ‖T(t, 0)‖` on `[0, tmax]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeScan {
    pub supremum: f64,
    /// `(t, value)` of every refined local maximum, in increasing `t`.
    pub maxima: Vec<(f64, f64)>,
}

impl EnvelopeScan {
    /// Times at which the supremum is attained (to [`TANGENCY_REL_TOL`]).
    pub fn tangency_times(&self) -> Vec<f64> {
        self.maxima.iter().filter(|(_, v)| *v >= self.supremum * (1.0 - TANGENCY_REL_TOL)).map(|(t, _)| *t).collect()
    }
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a <= 1e-13 * b.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

// Growth between the two half-windows is conclusive above the asymptotic
// gap. At the gap itself a bounded but quasi-periodic envelope can also grow
// slightly, so there we only report divergence if a far probe keeps growing.
fn diverges(schedule: &Schedule, rate: f64, tmax: f64, window_max: f64) -> Result<bool> {
    let gap = spectral_gap(schedule.asymptotic_pair())?;
    if rate > gap + AT_GAP_TOL * gap.max(1.0) {
        return Ok(true);
    }
    Ok(schedule.envelope_ratio(FAR_PROBE * tmax, rate)? > 2.0 * window_max)
}

/// Scans `e^{rate t} ‖T(t, 0)‖` on a uniform grid (plus the breakpoints) and
/// refines every local maximum near the grid supremum by golden-section search.
pub fn envelope_scan(schedule: &Schedule, rate: f64, tmax: f64, samples: usize) -> Result<EnvelopeScan> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidArgument(format!("rate must be > 0, got {rate}")));
    }
    let min_horizon = 20.0 / rate;
    if !(tmax.is_finite() && tmax >= min_horizon * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!("horizon {tmax} is shorter than 20/rate = {min_horizon}")));
    }
    let mut grid = uniform_grid(tmax, samples.max(MIN_ENVELOPE_SAMPLES));
    grid.extend(schedule.breakpoints().iter().copied().filter(|&s| s < tmax));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let g = grid.par_iter().map(|&t| schedule.envelope_ratio(t, rate)).collect::<Result<Vec<f64>>>()?;

    let half = tmax / 2.0;
    let early = grid.iter().zip(&g).filter(|(t, _)| **t <= half).map(|(_, v)| *v).fold(0.0, f64::max);
    let late = grid.iter().zip(&g).filter(|(t, _)| **t >= half).map(|(_, v)| *v).fold(0.0, f64::max);
    if late > early * (1.0 + GROWTH_TOL) && diverges(schedule, rate, tmax, late)? {
        return Err(Error::RateTooLarge { rate, growth: late / early });
    }

    let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = g.len() - 1;
    let candidates: Vec<usize> = (0..=last)
        .filter(|&j| {
            let left_ok = j == 0 || g[j] >= g[j - 1];
            let right_ok =
                if j == last { j > 0 && g[j] > g[j - 1] } else { g[j] > g[j + 1] || (j == 0 && g[j] >= g[j + 1]) };
            left_ok && right_ok && g[j] >= gmax * (1.0 - REFINE_WINDOW)
        })
        .collect();

    let f = |t: f64| schedule.envelope_ratio(t, rate);
    let mut maxima = candidates
        .par_iter()
        .map(|&j| {
            if j == 0 || j == last {
                return Ok((grid[j], g[j]));
            }
            let (t, v) = golden_max(f, grid[j - 1], grid[j + 1])?;
            Ok(if v >= g[j] { (t, v) } else { (grid[j], g[j]) })
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    maxima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let supremum = maxima.iter().map(|m| m.1).fold(gmax, f64::max);
    Ok(EnvelopeScan { supremum, maxima })
}

/// Smallest `c` with `‖T(t, 0)‖ ≤ c e^{−rate t}` on `[0, tmax]`.
pub fn sharp_constant(schedule: &Schedule, rate: f64, tmax: f64) -> Result<f64> {
    Ok(envelope_scan(schedule, rate, tmax, MIN_ENVELOPE_SAMPLES)?.supremum)
}

/// [`sharp_constant`] over the schedule's default horizon.
pub fn sharp_constant_default(schedule: &Schedule, rate: f64) -> Result<f64> {
    sharp_constant(schedule, rate, schedule.default_horizon(rate))
}

/// Closed-form best constant for a 2D drift `C̃` whose eigenvalues share
/// their real part: `√((1 + α)/(1 − α))` with `α` the modulus of the
/// Hermitian inner product of the normalized eigenvectors.
pub fn best_constant_2d(pair: &CoefficientPair) -> Result<f64> {
    if pair.dim() != 2 {
        return Err(Error::NotApplicable2D(format!("dimension is {}", pair.dim())));
    }
    let m = pair.drift_tilde();
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_trace = (a + d) / 2.0;
    let disc = ((a - d) / 2.0).powi(2) + b * c;
    let scale = m.norm().max(1.0);
    if half_trace <= 0.0 {
        return Err(Error::NotApplicable2D("drift is not positive stable".into()));
    }
    if disc >= 0.0 {
        if disc.sqrt() > 1e-9 * scale {
            return Err(Error::NotApplicable2D("eigenvalues have different real parts".into()));
        }
        if (b.abs() + c.abs() + (a - d).abs()) <= 1e-12 * scale {
            return Ok(1.0);
        }
        return Err(Error::NotApplicable2D("drift is not diagonalizable".into()));
    }
    let omega = (-disc).sqrt();
    // eigenvector for τ = half_trace + iω; the second one is its conjugate
    let (x, y) =
        if b.abs() >= c.abs() { ((b, 0.0), (half_trace - a, omega)) } else { ((half_trace - d, omega), (c, 0.0)) };
    // ⟨v, v̄⟩ = x² + y² for v = (x, y)
    let sq = |z: (f64, f64)| (z.0 * z.0 - z.1 * z.1, 2.0 * z.0 * z.1);
    let norm2 = |z: (f64, f64)| z.0 * z.0 + z.1 * z.1;
    let (sx, sy) = (sq(x), sq(y));
    let inner = (sx.0 + sy.0).hypot(sx.1 + sy.1);
    let alpha = inner / (norm2(x) + norm2(y));
    Ok(((1.0 + alpha) / (1.0 - alpha)).sqrt())
}

/// `λ_min((C̃ + C̃ᵀ)/2)`: minus the slope of `‖e^{−C̃t}‖` at `t = 0`.
pub fn initial_decay_rate(pair: &CoefficientPair) -> f64 {
    let (values, _) = kernel::sym_eigen(&kernel::symmetric_part(pair.drift_tilde())).expect("symmetric part");
    values[0]
}

/// Largest initial decay rate over all admissible pairs, `d / Tr K`, and the
/// reversible pair `(d/Tr K · I, d/Tr K · K)` attaining it.
pub fn max_initial_decay(cov: &Covariance) -> Result<(f64, CoefficientPair)> {
    let rate = cov.dim() as f64 / cov.trace();
    let d = SymmetricMatrix::new(cov.matrix() * rate)?;
    let pair = make_pair_from_j(cov, &d, &AntisymmetricMatrix::zeros(cov.dim()))?;
    Ok((rate, pair))
}

/// First time `t > 0` at which `e^{rate t} ‖e^{−C̃t}‖` reaches its supremum.
pub fn tangency_time(pair: &CoefficientPair, cov: &Covariance, rate: f64) -> Result<f64> {
    tangency_times(pair, cov, rate)?
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidArgument("envelope has no interior maximum".into()))
}

/// All points of tangency with the sharp envelope over the default horizon.
pub fn tangency_times(pair: &CoefficientPair, cov: &Covariance, rate: f64) -> Result<Vec<f64>> {
    let schedule = Schedule::constant(cov.clone(), pair.clone())?;
    let scan = envelope_scan(&schedule, rate, schedule.default_horizon(rate), MIN_ENVELOPE_SAMPLES)?;
    Ok(scan.tangency_times())
}

/// One row of a schedule comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub id: String,
    pub sharp_constant: f64,
    /// `‖C_i‖_F` for every piece, in time order.
    pub piece_frobenius: Vec<f64>,
}

impl RankingRow {
    pub fn max_frobenius(&self) -> f64 {
        self.piece_frobenius.iter().copied().fold(0.0, f64::max)
    }
}

/// Ranks schedules sharing one equilibrium by their sharp constant at `rate`,
/// ascending.
pub fn compare_schedules(schedules: &[(String, Schedule)], rate: f64) -> Result<Vec<RankingRow>> {
    let Some((_, first)) = schedules.first() else {
        return Ok(Vec::new());
    };
    if schedules.iter().any(|(_, s)| !s.covariance().approx_eq(first.covariance(), 1e-12)) {
        return Err(Error::MixedEquilibria);
    }
    let mut rows = schedules
        .iter()
        .map(|(id, s)| {
            Ok(RankingRow {
                id: id.clone(),
                sharp_constant: sharp_constant_default(s, rate)?,
                piece_frobenius: s.pairs().iter().map(CoefficientPair::drift_frobenius).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.sharp_constant.total_cmp(&b.sharp_constant));
    Ok(rows)
}
