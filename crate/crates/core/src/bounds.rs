//! Auxiliary bounds: Mandelstam–Tamm and Margolus–Levitin times, the
//! integral orthogonality check, Fubini–Study kinematics with the acceleration
//! limit, the signal-to-noise floor, and the relative-uncertainty rate.

use serde::{Deserialize, Serialize};

use crate::dynamics::{TimeDepOperator, Trajectory};
use crate::error::{Error, Result};
use crate::fluctuation::{bound_reports, covariance, expectation, grid_derivative, std_dev, BoundReport};
use crate::linops::{inner, CMatrix, CVector};
use crate::quad::{cumulative_endpoint_max, cumulative_trapezoid};
use crate::tol::Tolerances;

use std::f64::consts::PI;

/// Orthogonalization time bounds for a fixed Hamiltonian and state.
///
/// `tau_mt` is `None` when ΔE vanishes (infinite time); `tau_ml` is `None`
/// when ⟨E⟩ ≤ 0; `tau_unified` is `None` unless both are finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimitReport {
    pub delta_e: f64,
    pub mean_e: f64,
    pub tau_mt: Option<f64>,
    pub tau_ml: Option<f64>,
    pub tau_unified: Option<f64>,
    pub mt_infinite: bool,
    pub ml_defined: bool,
}

pub fn mt_ml_times(h: &CMatrix, psi: &CVector, hbar: f64, tol: &Tolerances) -> Result<SpeedLimitReport> {
    let delta_e = std_dev(h, psi)?;
    let mean_e = expectation(h, psi)?;
    let mt_infinite = delta_e <= tol.sigma_floor;
    let ml_defined = mean_e > 0.0;
    let tau_mt = (!mt_infinite).then(|| PI * hbar / (2.0 * delta_e));
    let tau_ml = ml_defined.then(|| PI * hbar / (2.0 * mean_e));
    let tau_unified = match (tau_mt, tau_ml) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    Ok(SpeedLimitReport { delta_e, mean_e, tau_mt, tau_ml, tau_unified, mt_infinite, ml_defined })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtPoint {
    pub t: f64,
    /// ∫ ΔH/ħ dt from the grid start
    pub lhs: f64,
    /// π/2 − arcsin|⟨ψ(t0)|ψ(t)⟩|, evaluated as atan2(‖ψ⊥‖, |⟨ψ(t0)|ψ(t)⟩|)
    pub rhs: f64,
    pub defect: f64,
}

/// Integral-form Mandelstam–Tamm check at every grid point.
///
/// With `EndpointMax` the accumulated ∫ΔH/ħ never undershoots, so saturated
/// trajectories report defects ≥ 0 up to rounding.
pub fn mt_integral_check(h: &TimeDepOperator, traj: &Trajectory, quadrature: Quadrature) -> Result<Vec<MtPoint>> {
    let ts = traj.times();
    let dh: Vec<f64> = ts
        .iter()
        .zip(&traj.states)
        .map(|(&t, psi)| Ok(std_dev(&h.value(t), psi)? / traj.hbar))
        .collect::<Result<_>>()?;
    let lhs = match quadrature {
        Quadrature::EndpointMax => cumulative_endpoint_max(&ts, &dh),
        Quadrature::Trapezoid => cumulative_trapezoid(&ts, &dh),
    };
    let psi0 = &traj.states[0];
    ts.iter()
        .zip(&traj.states)
        .zip(lhs)
        .map(|((&t, psi), l)| {
            let ov = inner(psi0, psi)?;
            let perp = (psi - psi0 * ov).norm();
            let rhs = perp.atan2(ov.norm());
            Ok(MtPoint { t, lhs: l, rhs, defect: l - rhs })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsConvention {
    /// v_H = 2ΔH/ħ
    Factor2,
    /// v_H = ΔH/ħ
    Factor1,
}

impl FsConvention {
    fn factor(self) -> f64 {
        match self {
            FsConvention::Factor2 => 2.0,
            FsConvention::Factor1 => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsKinematics {
    pub t: Vec<f64>,
    pub distance: Vec<f64>,
    pub speed: Vec<f64>,
    /// `None` where σ_H vanishes.
    pub acceleration: Vec<Option<f64>>,
}

/// Fubini–Study distance, speed and acceleration along a trajectory.
pub fn fs_kinematics(
    h: &TimeDepOperator,
    traj: &Trajectory,
    convention: FsConvention,
    tol: &Tolerances,
) -> Result<FsKinematics> {
    let ts = traj.times();
    let k = convention.factor() / traj.hbar;
    let sig: Vec<f64> =
        ts.iter().zip(&traj.states).map(|(&t, psi)| std_dev(&h.value(t), psi)).collect::<Result<_>>()?;
    let speed: Vec<f64> = sig.iter().map(|s| k * s).collect();
    let distance = cumulative_trapezoid(&ts, &speed);
    let acceleration = if h.has_analytic_derivative() {
        ts.iter()
            .zip(&traj.states)
            .zip(&sig)
            .map(|((&t, psi), &s)| {
                if s <= tol.sigma_floor {
                    return Ok(None);
                }
                Ok(Some(k * covariance(&h.value(t), &h.dvalue(t), psi)? / s))
            })
            .collect::<Result<_>>()?
    } else if ts.len() >= 3 {
        (0..ts.len())
            .map(|i| {
                if sig[i] <= tol.sigma_floor {
                    return Ok(None);
                }
                Ok(Some(grid_derivative(&speed, traj.grid.dt(), i)?))
            })
            .collect::<Result<_>>()?
    } else {
        vec![None; ts.len()]
    };
    Ok(FsKinematics { t: ts, distance, speed, acceleration })
}

/// σ_{Ḣ}² − (dσ_H/dt)² per grid point; `None` where σ_H vanishes.
pub fn acceleration_limit(h: &TimeDepOperator, traj: &Trajectory, tol: &Tolerances) -> Result<Vec<Option<f64>>> {
    traj.times()
        .iter()
        .zip(&traj.states)
        .map(|(&t, psi)| {
            let (hv, hd) = (h.value(t), h.dvalue(t));
            let s = std_dev(&hv, psi)?;
            if s <= tol.sigma_floor {
                return Ok(None);
            }
            let rate = covariance(&hv, &hd, psi)? / s;
            Ok(Some(std_dev(&hd, psi)?.powi(2) - rate * rate))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Upper Riemann sum with the larger endpoint of each interval.
    #[default]
    EndpointMax,
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrTrace {
    pub t: Vec<f64>,
    /// μ²/σ², `None` where σ vanishes.
    pub snr: Vec<Option<f64>>,
    /// μ²/[σ(t0) + ∫√(⟨v²⟩ − μ̇²)]², `None` where the denominator vanishes.
    pub snr_min: Vec<Option<f64>>,
    pub integrand: Vec<f64>,
    pub quadrature: Quadrature,
}

pub fn snr_trace(
    a: &TimeDepOperator,
    h: &TimeDepOperator,
    traj: &Trajectory,
    quadrature: Quadrature,
    tol: &Tolerances,
) -> Result<SnrTrace> {
    let reps = bound_reports(a, h, traj, tol)?;
    snr_from_reports(&reps, quadrature, tol)
}

/// SNR and its floor from precomputed bound records.
pub fn snr_from_reports(reps: &[BoundReport], quadrature: Quadrature, tol: &Tolerances) -> Result<SnrTrace> {
    let first = reps.first().ok_or_else(|| Error::InvalidArgument("empty report sequence".into()))?;
    let ts: Vec<f64> = reps.iter().map(|r| r.t).collect();
    let mut integrand = Vec::with_capacity(reps.len());
    for r in reps {
        let x = r.v2_mean - r.mu_dot * r.mu_dot;
        if x < -1e-10 * r.v2_mean.max(1.0) {
            return Err(Error::InvalidArgument(format!("⟨v²⟩ − μ̇² = {x:e} at t = {}", r.t)));
        }
        integrand.push(x.max(0.0).sqrt());
    }
    let integral = match quadrature {
        Quadrature::EndpointMax => cumulative_endpoint_max(&ts, &integrand),
        Quadrature::Trapezoid => cumulative_trapezoid(&ts, &integrand),
    };
    let sigma0 = first.sigma;
    let snr = reps.iter().map(|r| (r.sigma > tol.sigma_floor).then(|| r.mu * r.mu / (r.sigma * r.sigma))).collect();
    let snr_min = reps
        .iter()
        .zip(&integral)
        .map(|(r, i)| {
            let d = sigma0 + i;
            (d > tol.sigma_floor).then(|| r.mu * r.mu / (d * d))
        })
        .collect();
    Ok(SnrTrace { t: ts, snr, snr_min, integrand, quadrature })
}

/// dε²/dt for ε = σ/μ: 2(σ/μ³)(μσ̇ − σμ̇).
pub fn relative_uncertainty_rate(mu: f64, sigma: f64, mu_dot: f64, sigma_dot: f64) -> Result<f64> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::Undefined("relative uncertainty rate needs a nonzero mean"));
    }
    Ok(2.0 * sigma / mu.powi(3) * (mu * sigma_dot - sigma * mu_dot))
}

/// Pointwise comparison of two runs sharing a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub t: f64,
    /// SNR₂/SNR₁
    pub snr_ratio: Option<f64>,
    /// σ₁²/σ₂²
    pub var_ratio: Option<f64>,
    /// ⟨v²⟩₁/⟨v²⟩₂
    pub v2_ratio: Option<f64>,
    pub mean_gap: f64,
}

pub fn comparison_ratios(first: &[BoundReport], second: &[BoundReport], tol: &Tolerances) -> Result<Vec<RatioPoint>> {
    if first.len() != second.len() {
        return Err(Error::DimensionMismatch(first.len(), second.len()));
    }
    let floor2 = tol.sigma_floor * tol.sigma_floor;
    first
        .iter()
        .zip(second)
        .map(|(p, q)| {
            if (p.t - q.t).abs() > 1e-12 * p.t.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!("grids differ at t = {} vs {}", p.t, q.t)));
            }
            let (v1, v2) = (p.sigma * p.sigma, q.sigma * q.sigma);
            let snr1 = (v1 > floor2).then(|| p.mu * p.mu / v1);
            let snr2 = (v2 > floor2).then(|| q.mu * q.mu / v2);
            let snr_ratio = match (snr1, snr2) {
                (Some(a), Some(b)) if a > 0.0 => Some(b / a),
                _ => None,
            };
            Ok(RatioPoint {
                t: p.t,
                snr_ratio,
                var_ratio: (v2 > floor2).then(|| v1 / v2),
                v2_ratio: (q.v2_mean > 0.0).then(|| p.v2_mean / q.v2_mean),
                mean_gap: (p.mu - q.mu).abs(),
            })
        })
        .collect()
}
