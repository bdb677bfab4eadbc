//! Expectations, dispersions, velocity observables, and the per-instant
//! bound records for mean and standard-deviation rates.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DerivFn, TimeDepOperator, Trajectory};
use crate::error::{Error, Result};
use crate::linops::{commutator, hermitian_defect, max_abs, norm_defect, r, CMatrix, CVector, HERM_TOL};
use crate::tol::Tolerances;

const STATE_TOL: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-10;
const VELOCITY_HERM_TOL: f64 = 1e-10;

fn check_inputs(a: &CMatrix, psi: &CVector) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare(a.nrows(), a.ncols()));
    }
    if a.nrows() != psi.len() {
        return Err(Error::DimensionMismatch(a.nrows(), psi.len()));
    }
    let d = hermitian_defect(a);
    if d > HERM_TOL * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian(d));
    }
    let nd = norm_defect(psi);
    if nd > STATE_TOL {
        return Err(Error::NotNormalized(nd));
    }
    Ok(())
}

fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * z.norm().max(1.0) {
        return Err(Error::ImaginaryExpectation(z.im));
    }
    Ok(z.re)
}

/// Moments of one observable in one state, with its fluctuation vector (A − μ)ψ.
struct Moments {
    mean: f64,
    delta: CVector,
    second: f64,
}

fn moments(a: &CMatrix, psi: &CVector) -> Result<Moments> {
    let apsi = a * psi;
    let mean = real_part(psi.dotc(&apsi))?;
    let second = apsi.norm_squared();
    let delta = apsi - psi * r(mean);
    Ok(Moments { mean, delta, second })
}

/// ⟨ψ|A|ψ⟩
pub fn expectation(a: &CMatrix, psi: &CVector) -> Result<f64> {
    check_inputs(a, psi)?;
    real_part(psi.dotc(&(a * psi)))
}

/// ‖(A − ⟨A⟩)ψ‖², non-negative by construction.
pub fn variance(a: &CMatrix, psi: &CVector) -> Result<f64> {
    check_inputs(a, psi)?;
    Ok(moments(a, psi)?.delta.norm_squared())
}

pub fn std_dev(a: &CMatrix, psi: &CVector) -> Result<f64> {
    Ok(variance(a, psi)?.sqrt())
}

/// ⟨{A, B}⟩/2 − ⟨A⟩⟨B⟩ = Re⟨δA ψ, δB ψ⟩
pub fn covariance(a: &CMatrix, b: &CMatrix, psi: &CVector) -> Result<f64> {
    check_inputs(a, psi)?;
    check_inputs(b, psi)?;
    let (ma, mb) = (moments(a, psi)?, moments(b, psi)?);
    Ok(ma.delta.dotc(&mb.delta).re)
}

/// ∂A/∂t + (i/ħ)[H, A] at t.
pub fn velocity_observable(a: &TimeDepOperator, h: &TimeDepOperator, t: f64, hbar: f64) -> Result<CMatrix> {
    if a.dim() != h.dim() {
        return Err(Error::DimensionMismatch(a.dim(), h.dim()));
    }
    let av = a.value(t);
    let v = a.dvalue(t) + commutator(&h.value(t), &av)? * Complex64::new(0.0, 1.0 / hbar);
    let d = hermitian_defect(&v);
    if d > VELOCITY_HERM_TOL * max_abs(&v).max(1.0) {
        return Err(Error::NotHermitian(d));
    }
    Ok(crate::linops::hermitian_part(&v))
}

/// dσ_A/dt = cov(A, v_A)/σ_A
pub fn sigma_rate(
    a: &TimeDepOperator,
    h: &TimeDepOperator,
    psi: &CVector,
    t: f64,
    hbar: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let av = a.value(t);
    let sigma = std_dev(&av, psi)?;
    if sigma <= tol.sigma_floor {
        return Err(Error::DegenerateDispersion(sigma));
    }
    let v = velocity_observable(a, h, t, hbar)?;
    Ok(covariance(&av, &v, psi)? / sigma)
}

/// Per-instant record of the two fluctuation inequalities.
///
/// Rate fields are `None` when σ_A is at or below the dispersion floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub t: f64,
    pub mu: f64,
    pub sigma: f64,
    pub mu_dot: f64,
    pub sigma_dot: Option<f64>,
    pub sigma_v: f64,
    pub v2_mean: f64,
    /// μ̇² + σ̇²
    pub lhs_sq_sum: Option<f64>,
    /// σ_v² − σ̇²
    pub residual_r1: Option<f64>,
    /// ⟨v²⟩ − μ̇² − σ̇²
    pub residual_r2: Option<f64>,
    /// σ²σ_v² − cov(A, v)²
    pub cs_residual: f64,
    pub cov_av: f64,
    pub tight: bool,
    pub degenerate: bool,
}

/// Statistics of A(t) and v_A(t) in the state ψ.
pub fn report_at(
    a: &TimeDepOperator,
    h: &TimeDepOperator,
    psi: &CVector,
    t: f64,
    hbar: f64,
    tol: &Tolerances,
) -> Result<BoundReport> {
    let av = a.value(t);
    check_inputs(&av, psi)?;
    let v = velocity_observable(a, h, t, hbar)?;
    let ma = moments(&av, psi)?;
    let mv = moments(&v, psi)?;
    let var = ma.delta.norm_squared();
    let var_v = mv.delta.norm_squared();
    let cov = ma.delta.dotc(&mv.delta).re;
    let sigma = var.sqrt();
    let sigma_v = var_v.sqrt();
    let mu_dot = mv.mean;
    let v2 = mv.second;
    let cs = var * var_v - cov * cov;
    let degenerate = sigma <= tol.sigma_floor;
    let (sigma_dot, lhs, r1, r2, tight) = if degenerate {
        (None, None, None, None, false)
    } else {
        let sd = cov / sigma;
        let lhs = mu_dot * mu_dot + sd * sd;
        let r2 = v2 - lhs;
        let tight = r2.abs() <= tol.tight * v2.max(1.0);
        (Some(sd), Some(lhs), Some(var_v - sd * sd), Some(r2), tight)
    };
    Ok(BoundReport {
        t,
        mu: ma.mean,
        sigma,
        mu_dot,
        sigma_dot,
        sigma_v,
        v2_mean: v2,
        lhs_sq_sum: lhs,
        residual_r1: r1,
        residual_r2: r2,
        cs_residual: cs,
        cov_av: cov,
        tight,
        degenerate,
    })
}

/// Bound record at grid index `k` of a trajectory.
pub fn bound_report(
    a: &TimeDepOperator,
    h: &TimeDepOperator,
    traj: &Trajectory,
    k: usize,
    tol: &Tolerances,
) -> Result<BoundReport> {
    let psi = traj
        .states
        .get(k)
        .ok_or_else(|| Error::InvalidArgument(format!("index {k} outside trajectory of {}", traj.states.len())))?;
    report_at(a, h, psi, traj.grid.time(k), traj.hbar, tol)
}

/// Bound records along a whole trajectory, computed in parallel.
pub fn bound_reports(
    a: &TimeDepOperator,
    h: &TimeDepOperator,
    traj: &Trajectory,
    tol: &Tolerances,
) -> Result<Vec<BoundReport>> {
    (0..traj.states.len()).into_par_iter().map(|k| bound_report(a, h, traj, k, tol)).collect()
}

/// Second-order finite-difference derivative of sampled data at index k.
pub fn grid_derivative(ys: &[f64], dt: f64, k: usize) -> Result<f64> {
    let n = ys.len();
    if n < 3 {
        return Err(Error::InvalidArgument("finite differences need at least 3 samples".into()));
    }
    if k >= n {
        return Err(Error::InvalidArgument(format!("index {k} outside {n} samples")));
    }
    Ok(if k == 0 {
        (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * dt)
    } else if k == n - 1 {
        (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) / (2.0 * dt)
    } else {
        (ys[k + 1] - ys[k - 1]) / (2.0 * dt)
    })
}

fn variance_on_grid(a: &TimeDepOperator, traj: &Trajectory, idx: &[usize]) -> Result<Vec<f64>> {
    idx.iter().map(|&j| variance(&a.value(traj.grid.time(j)), &traj.states[j])).collect()
}

/// |finite-difference d(σ_A²)/dt − 2 cov(A, v_A)| at grid index k.
pub fn variance_rate_identity_defect(
    a: &TimeDepOperator,
    h: &TimeDepOperator,
    traj: &Trajectory,
    k: usize,
) -> Result<f64> {
    let n = traj.states.len();
    if n < 3 || k >= n {
        return Err(Error::InvalidArgument(format!("index {k} needs a trajectory of ≥ 3 points")));
    }
    let (idx, local) = if k == 0 {
        ([0, 1, 2], 0)
    } else if k == n - 1 {
        ([n - 3, n - 2, n - 1], 2)
    } else {
        ([k - 1, k, k + 1], 1)
    };
    let vars = variance_on_grid(a, traj, &idx)?;
    let fd = grid_derivative(&vars, traj.grid.dt(), local)?;
    let t = traj.grid.time(k);
    let v = velocity_observable(a, h, t, traj.hbar)?;
    let cov = covariance(&a.value(t), &v, &traj.states[k])?;
    Ok((fd - 2.0 * cov).abs())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// V⁰ = A, V^{k+1} = ∂V^k/∂t + (i/ħ)[H, V^k], for k < n_max.
///
/// Time derivatives of each level are exact whenever A and H carry enough
/// analytic derivatives; otherwise they are taken by finite differences.
pub fn higher_order_chain(
    a: &TimeDepOperator,
    h: &TimeDepOperator,
    n_max: usize,
    hbar: f64,
) -> Result<Vec<TimeDepOperator>> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("chain needs n_max ≥ 1".into()));
    }
    if a.dim() != h.dim() {
        return Err(Error::DimensionMismatch(a.dim(), h.dim()));
    }
    let mut chain = vec![a.clone()];
    let ih = Complex64::new(0.0, 1.0 / hbar);
    for _ in 0..n_max {
        let prev = chain.last().expect("chain is non-empty").clone();
        let order = prev.analytic_order().saturating_sub(1).min(h.analytic_order());
        let hh = h.clone();
        let pv = prev.clone();
        let eval: DerivFn = Arc::new(move |t, m| {
            let mut out = pv.derivative(t, m + 1);
            for j in 0..=m {
                let comm = hh.derivative(t, j) * pv.derivative(t, m - j) - pv.derivative(t, m - j) * hh.derivative(t, j);
                out += comm * (ih * binomial(m, j));
            }
            out
        });
        let next = TimeDepOperator::from_derivatives(a.dim(), eval, order)
            .with_fd_step(a.fd_step())
            .with_richardson(a.richardson());
        let probe = next.value(0.0);
        let d = hermitian_defect(&probe);
        if d > VELOCITY_HERM_TOL * max_abs(&probe).max(1.0) {
            return Err(Error::NotHermitian(d));
        }
        chain.push(next);
    }
    Ok(chain)
}

/// σ²_{V^{n+1}} − (dσ_{V^n}/dt)² in state ψ at t, or `None` when σ_{V^n} is degenerate.
pub fn chain_residual(chain: &[TimeDepOperator], n: usize, psi: &CVector, t: f64, tol: &Tolerances) -> Result<Option<f64>> {
    if n + 1 >= chain.len() {
        return Err(Error::InvalidArgument(format!("chain of length {} has no level {}", chain.len(), n + 1)));
    }
    let vn = crate::linops::hermitian_part(&chain[n].value(t));
    let vn1 = crate::linops::hermitian_part(&chain[n + 1].value(t));
    let sigma = std_dev(&vn, psi)?;
    if sigma <= tol.sigma_floor {
        return Ok(None);
    }
    let rate = covariance(&vn, &vn1, psi)? / sigma;
    Ok(Some(variance(&vn1, psi)? - rate * rate))
}
