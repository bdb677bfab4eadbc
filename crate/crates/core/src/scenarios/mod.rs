//! Executable reproductions of the two qubit examples and the oscillator
//! example, plus user-defined scenarios, with closed-form overlays and
//! cross-checks collected into a serializable report.

pub mod config;
mod custom;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{bloch_evolve, bloch_stats, BlochModel};
use crate::bounds::{comparison_ratios, mt_integral_check, snr_from_reports, RatioPoint};
use crate::dynamics::{propagate, Method, PropagationConfig, TimeDepOperator, Trajectory};
use crate::error::{Error, Result};
use crate::fluctuation::{bound_reports, velocity_observable, BoundReport};
use crate::hilbert::{
    displaced_squeezed_vacuum, number_op, pauli, quadratures, qubit_plus, recommended_dim, Axis, FockSpace,
    PreparedState, SqueezedCoherentParams,
};
use crate::linops::{identity, r, CMatrix, CVector};
use crate::timefn::ScalarFn;

pub use config::{Params, RunOptions, ScenarioConfig, ScenarioKind};

const EXAMPLE_QUBIT_OVERLAY_TOL: f64 = 1e-7;
const EXAMPLE3_OVERLAY_TOL: f64 = 1e-5;
const TRUNCATION_EPS: f64 = 1e-6;
const MAX_AUTO_CUTOFF: usize = 400;
const LOOSE_FRACTION_MIN: f64 = 0.5;
const BLOCH_MAX_STEP: f64 = 1e-3;

/// One CSV row: a bound record plus the propagation norm defect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    #[serde(flatten)]
    pub report: BoundReport,
    pub norm_defect: f64,
}

/// Closed-form channel values at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayPoint {
    pub t: f64,
    pub mu: f64,
    pub sigma: f64,
    pub v2_mean: f64,
}

/// Largest |numeric − closed form| per channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelDeviation {
    pub mu: f64,
    pub sigma: f64,
    pub v2_mean: f64,
}

impl ChannelDeviation {
    pub fn max(&self) -> f64 {
        self.mu.max(self.sigma).max(self.v2_mean)
    }
}

/// Largest |matrix pipeline − Bloch form| per channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochDeviation {
    pub mu: f64,
    pub sigma_sq: f64,
    pub v_mean: f64,
    pub v2_mean: f64,
}

impl BlochDeviation {
    pub fn max(&self) -> f64 {
        self.mu.max(self.sigma_sq).max(self.v_mean).max(self.v2_mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationInfo {
    pub s: usize,
    /// true when s was chosen automatically.
    pub auto: bool,
    pub recommended: usize,
    pub tail_mass: f64,
    pub norm_defect: f64,
    pub adequate: bool,
}

/// Residual at a grid point nearest ξ = nπ against 4ω₀²a²cos²ν₀t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub t: f64,
    pub residual: f64,
    pub expected: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// One invariant check; `passed` compares `value` against `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub severity: Severity,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64, severity: Severity) -> Self {
        Self { name: name.into(), value, threshold, passed: value <= threshold, severity }
    }

    fn at_least(name: &str, value: f64, threshold: f64, severity: Severity) -> Self {
        Self { name: name.into(), value, threshold, passed: value >= threshold, severity }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_points: usize,
    pub n_degenerate: usize,
    /// Tight points over non-degenerate points.
    pub tight_fraction: f64,
    pub min_residual_r1: Option<f64>,
    pub min_residual_r2: Option<f64>,
    pub max_residual_r2: Option<f64>,
    pub min_cs_residual: f64,
    pub max_norm_defect: f64,
    /// min (snr − snr_min)/max(1, snr) where both are defined.
    pub min_snr_margin: Option<f64>,
    pub min_mt_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub label: String,
    pub method: Method,
    pub dim: usize,
    #[serde(skip)]
    pub rows: Vec<SeriesRow>,
    #[serde(skip)]
    pub overlay: Option<Vec<OverlayPoint>>,
    pub overlay_deviation: Option<ChannelDeviation>,
    pub bloch_deviation: Option<BlochDeviation>,
    pub picture_defect: Option<f64>,
    pub truncation: Option<TruncationInfo>,
    pub special_points: Vec<SpecialPoint>,
    pub summary: Summary,
    pub checks: Vec<Check>,
    /// Names of failed error-severity checks.
    pub flags: Vec<String>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn reports(&self) -> Vec<BoundReport> {
        self.rows.iter().map(|r| r.report.clone()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn warnings(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed && c.severity == Severity::Warning).collect()
    }
}

type OverlayFn = Box<dyn Fn(f64) -> OverlayPoint + Send + Sync>;

/// A fully resolved scenario ready to run.
pub(crate) struct Problem {
    pub h: TimeDepOperator,
    pub a: TimeDepOperator,
    pub psi0: CVector,
    pub hbar: f64,
    overlay: Option<OverlayFn>,
    overlay_tol: f64,
    overlay_severity: Severity,
    bloch: bool,
    truncation: Option<TruncationInfo>,
    special: Option<(f64, f64, ScalarFn)>,
    expect_tight: Option<bool>,
}

impl Problem {
    pub(crate) fn plain(h: TimeDepOperator, a: TimeDepOperator, psi0: CVector, hbar: f64) -> Self {
        Self {
            h,
            a,
            psi0,
            hbar,
            overlay: None,
            overlay_tol: 0.0,
            overlay_severity: Severity::Error,
            bloch: false,
            truncation: None,
            special: None,
            expect_tight: None,
        }
    }
}

/// Dispatch on the scenario name.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let problem = match cfg.name {
        ScenarioKind::Example1 => example1_problem(cfg)?,
        ScenarioKind::Example2 => example2_problem(cfg)?,
        ScenarioKind::Example3 => example3_problem(cfg)?,
        ScenarioKind::Custom => custom::problem(cfg)?,
    };
    execute(cfg, problem)
}

fn expect_kind(cfg: &ScenarioConfig, kind: ScenarioKind) -> Result<()> {
    if cfg.name != kind {
        return Err(Error::config("name", format!("expected {}, got {}", kind.as_str(), cfg.name.as_str())));
    }
    Ok(())
}

pub fn run_example1(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    expect_kind(cfg, ScenarioKind::Example1)?;
    run_scenario(cfg)
}

pub fn run_example2(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    expect_kind(cfg, ScenarioKind::Example2)?;
    run_scenario(cfg)
}

pub fn run_example3(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    expect_kind(cfg, ScenarioKind::Example3)?;
    run_scenario(cfg)
}

pub fn run_custom(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    expect_kind(cfg, ScenarioKind::Custom)?;
    run_scenario(cfg)
}

/// H = ħω₀cos(ν₀t)σ_z
pub fn qubit_example_hamiltonian(omega0: f64, nu0: f64, hbar: f64) -> Result<TimeDepOperator> {
    TimeDepOperator::scaled(ScalarFn::cos_wave(hbar * omega0, nu0), pauli(Axis::Z))
}

/// A = a(t)σ_x + b(t)σ_z; the σ_z term is dropped when b is absent.
pub fn qubit_example_observable(a: ScalarFn, b: Option<ScalarFn>) -> Result<TimeDepOperator> {
    let mut terms = vec![(a, pauli(Axis::X))];
    if let Some(b) = b {
        terms.push((b, pauli(Axis::Z)));
    }
    TimeDepOperator::from_terms(terms)
}

/// Closed forms for the qubit examples with ψ(0) = |+⟩.
pub fn qubit_overlay(omega0: f64, nu0: f64, a: &ScalarFn, b: Option<&ScalarFn>, t: f64) -> OverlayPoint {
    let xi = 2.0 * omega0 / nu0 * (nu0 * t).sin();
    let (av, ad) = (a.eval(t), a.derivative(t, 1));
    let (bv, bd) = b.map_or((0.0, 0.0), |b| (b.eval(t), b.derivative(t, 1)));
    let c = (nu0 * t).cos();
    OverlayPoint {
        t,
        mu: av * xi.cos(),
        sigma: ((av * xi.sin()).powi(2) + bv * bv).sqrt(),
        v2_mean: ad * ad + bd * bd + 4.0 * omega0 * omega0 * av * av * c * c,
    }
}

fn qubit_problem(cfg: &ScenarioConfig, with_b: bool) -> Result<Problem> {
    let p = cfg.params();
    let allowed: &[&str] = if with_b { &["omega0", "nu0", "a", "b", "hbar"] } else { &["omega0", "nu0", "a", "hbar"] };
    p.only(allowed)?;
    let omega0 = p.positive("omega0", None)?;
    let nu0 = p.positive("nu0", None)?;
    let hbar = p.positive("hbar", Some(1.0))?;
    let a = p.function("a", None)?;
    let b = if with_b { Some(p.function("b", None)?) } else { None };
    let h = qubit_example_hamiltonian(omega0, nu0, hbar)?;
    let obs = qubit_example_observable(a.clone(), b.clone())?;
    let (ao, bo) = (a.clone(), b.clone());
    let overlay: OverlayFn = Box::new(move |t| qubit_overlay(omega0, nu0, &ao, bo.as_ref(), t));
    let mut prob = Problem::plain(h, obs, qubit_plus(), hbar);
    prob.overlay = Some(overlay);
    prob.overlay_tol = cfg.options.overlay_tol.unwrap_or(EXAMPLE_QUBIT_OVERLAY_TOL);
    prob.bloch = cfg.options.bloch_oracle;
    if with_b {
        prob.special = Some((omega0, nu0, a));
        prob.expect_tight = Some(false);
    } else {
        prob.expect_tight = Some(true);
    }
    Ok(prob)
}

fn example1_problem(cfg: &ScenarioConfig) -> Result<Problem> {
    qubit_problem(cfg, false)
}

fn example2_problem(cfg: &ScenarioConfig) -> Result<Problem> {
    qubit_problem(cfg, true)
}

/// Oscillator parameters after defaults are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorParams {
    pub alpha: Complex64,
    pub z: Complex64,
    pub s: Option<usize>,
    pub omega: f64,
    pub hbar: f64,
    pub mass: f64,
    pub theta: ScalarFn,
}

impl OscillatorParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let p = cfg.params();
        p.only(&["alpha", "z", "s", "omega", "hbar", "mass", "theta"])?;
        let s = p.usize_opt("s")?;
        if s == Some(0) {
            return Err(Error::config("params.s", "cutoff must be at least 1"));
        }
        Ok(Self {
            alpha: p.complex("alpha", None)?,
            z: p.complex("z", None)?,
            s,
            omega: p.positive("omega", Some(1.0))?,
            hbar: p.positive("hbar", Some(1.0))?,
            mass: p.positive("mass", Some(1.0))?,
            theta: p.function("theta", Some(ScalarFn::cos(ScalarFn::T)))?,
        })
    }

    fn space(&self, s: usize) -> Result<FockSpace> {
        FockSpace::with_constants(s, self.hbar, self.mass, self.omega)
    }

    /// Coefficient κ of a in A = κa + κ*a†, and its time derivative.
    fn kappa(&self, t: f64) -> (Complex64, Complex64) {
        let sx = (self.hbar / (2.0 * self.mass * self.omega)).sqrt();
        let sp = (self.mass * self.omega * self.hbar / 2.0).sqrt();
        let jet = self.theta.jet(t, 1);
        let (th, thd) = (jet[0], jet[1]);
        let k = Complex64::new(th.cos() * sx, -th.sin() * sp);
        let kd = Complex64::new(-th.sin() * sx, -th.cos() * sp) * thd;
        (k, kd)
    }

    /// Gaussian-moment closed forms on the untruncated oscillator.
    pub fn overlay(&self, t: f64) -> OverlayPoint {
        let (k, kd) = self.kappa(t);
        let lam = kd - Complex64::i() * self.omega * k;
        let rot = Complex64::from_polar(1.0, -self.omega * t);
        let mean_a = self.alpha * rot;
        let (rr, phase) = (self.z.norm(), self.z.arg());
        let delta2 = -Complex64::from_polar(rr.sinh() * rr.cosh(), phase) * rot * rot;
        let sym = 2.0 * rr.sinh().powi(2) + 1.0;
        let mu = 2.0 * (k * mean_a).re;
        let var = 2.0 * (k * k * delta2).re + k.norm_sqr() * sym;
        let mu_dot = 2.0 * (lam * mean_a).re;
        let var_v = 2.0 * (lam * lam * delta2).re + lam.norm_sqr() * sym;
        OverlayPoint { t, mu, sigma: var.max(0.0).sqrt(), v2_mean: mu_dot * mu_dot + var_v }
    }

    /// Prepared initial state with its truncation record.
    pub fn prepare(&self, tol: &crate::Tolerances, tail_tol: f64) -> Result<(FockSpace, PreparedState, TruncationInfo)> {
        let params = SqueezedCoherentParams { alpha: self.alpha, z: self.z };
        let recommended = recommended_dim(self.alpha.norm_sqr(), TRUNCATION_EPS)?;
        let (s, auto) = match self.s {
            Some(s) => (s, false),
            None => (recommended.max(1), true),
        };
        let mut s = s;
        loop {
            let space = self.space(s)?;
            let prep = displaced_squeezed_vacuum(&space, &params, tol)?;
            let adequate = prep.tail_mass <= tail_tol && prep.norm_defect <= tail_tol;
            if adequate || !auto {
                let info =
                    TruncationInfo { s, auto, recommended, tail_mass: prep.tail_mass, norm_defect: prep.norm_defect, adequate };
                return Ok((space, prep, info));
            }
            if s >= MAX_AUTO_CUTOFF {
                return Err(Error::InvalidArgument(format!(
                    "no cutoff up to {MAX_AUTO_CUTOFF} brings the top-level tail mass below {tail_tol:e}"
                )));
            }
            s += 1;
        }
    }
}

/// H = ħω(N + ½) and A = cos θ x + sin θ p on a truncated space.
pub fn oscillator_operators(space: &FockSpace, theta: &ScalarFn) -> Result<(TimeDepOperator, TimeDepOperator)> {
    let d = space.dim();
    let h = (number_op(space) + identity(d) * r(0.5)) * r(space.hbar * space.omega);
    let (x, p) = quadratures(space);
    let a = TimeDepOperator::from_terms(vec![(ScalarFn::cos(theta.clone()), x), (ScalarFn::sin(theta.clone()), p)])?;
    Ok((TimeDepOperator::constant(h)?, a))
}

fn example3_problem(cfg: &ScenarioConfig) -> Result<Problem> {
    let op = OscillatorParams::from_config(cfg)?;
    let (space, prep, info) = op.prepare(&cfg.tolerances, cfg.options.tail_tol)?;
    let (h, a) = oscillator_operators(&space, &op.theta)?;
    let mut prob = Problem::plain(h, a, prep.state, op.hbar);
    let overlay_params = op.clone();
    prob.overlay = Some(Box::new(move |t| overlay_params.overlay(t)));
    prob.overlay_tol = cfg.options.overlay_tol.unwrap_or(EXAMPLE3_OVERLAY_TOL);
    prob.overlay_severity = if info.adequate { Severity::Error } else { Severity::Warning };
    prob.truncation = Some(info);
    Ok(prob)
}

/// max_k |⟨ψ(0)|U_k† v U_k|ψ(0)⟩ − ⟨ψ(t_k)|v|ψ(t_k)⟩| with v the Schrödinger-picture velocity.
pub fn picture_equivalence_check(a: &TimeDepOperator, h: &TimeDepOperator, traj: &Trajectory) -> Result<f64> {
    Ok(picture_equivalence_defects(a, h, traj)?.into_iter().fold(0.0, f64::max))
}

pub fn picture_equivalence_defects(a: &TimeDepOperator, h: &TimeDepOperator, traj: &Trajectory) -> Result<Vec<f64>> {
    let us = traj
        .propagators
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("picture check needs stored propagators".into()))?;
    if us.len() != traj.states.len() {
        return Err(Error::DimensionMismatch(traj.states.len(), us.len()));
    }
    let psi0 = &traj.states[0];
    (0..us.len())
        .into_par_iter()
        .map(|k| {
            let t = traj.grid.time(k);
            let v = velocity_observable(a, h, t, traj.hbar)?;
            let heis: CMatrix = us[k].adjoint() * &v * &us[k];
            let lhs = psi0.dotc(&(heis * psi0));
            let psi = &traj.states[k];
            let rhs = psi.dotc(&(&v * psi));
            Ok((lhs - rhs).norm())
        })
        .collect()
}

/// Example-2 grid points nearest the zeros of sin ξ, ξ = 2(ω₀/ν₀) sin ν₀t.
pub fn special_points(omega0: f64, nu0: f64, a: &ScalarFn, rows: &[SeriesRow]) -> Vec<SpecialPoint> {
    let s: Vec<f64> = rows.iter().map(|r| (2.0 * omega0 / nu0 * (nu0 * r.report.t).sin()).sin()).collect();
    let mut idx = Vec::new();
    for k in 0..s.len() {
        if s[k] == 0.0 {
            idx.push(k);
        } else if k + 1 < s.len() && s[k] * s[k + 1] < 0.0 {
            idx.push(if s[k].abs() <= s[k + 1].abs() { k } else { k + 1 });
        }
    }
    idx.dedup();
    idx.into_iter()
        .filter_map(|k| {
            let rep = &rows[k].report;
            let residual = rep.residual_r2?;
            let t = rep.t;
            let expected = 4.0 * omega0 * omega0 * a.eval(t).powi(2) * (nu0 * t).cos().powi(2);
            Some(SpecialPoint { t, residual, expected, deviation: (residual - expected).abs() })
        })
        .collect()
}

fn default_method(h: &TimeDepOperator) -> Method {
    if h.commuting_family() {
        Method::ExactCommuting
    } else {
        Method::Midpoint
    }
}

fn execute(cfg: &ScenarioConfig, prob: Problem) -> Result<ScenarioReport> {
    let tol = cfg.tolerances;
    let opts = cfg.options;
    let method = cfg.method.unwrap_or_else(|| default_method(&prob.h));
    let pcfg = PropagationConfig { hbar: prob.hbar, keep_propagators: opts.picture_check, tol };
    let traj = propagate(&prob.h, &prob.psi0, &cfg.grid, method, &pcfg)?;
    let reps = bound_reports(&prob.a, &prob.h, &traj, &tol)?;
    let rows: Vec<SeriesRow> =
        reps.into_iter().zip(&traj.norm_defects).map(|(report, &norm_defect)| SeriesRow { report, norm_defect }).collect();

    let mut checks = Vec::new();
    let summary = summarize(&rows, &prob, &traj, &opts, &tol)?;

    checks.push(Check::at_most("norm_defect", summary.max_norm_defect, opts.norm_defect_limit, Severity::Error));
    let floor = |name: &str, v: Option<f64>| Check::at_least(name, v.unwrap_or(0.0), -tol.violation, Severity::Error);
    checks.push(floor("residual_r2_floor", summary.min_residual_r2));
    checks.push(floor("residual_r1_floor", summary.min_residual_r1));
    checks.push(Check::at_least("cs_residual_floor", summary.min_cs_residual, -tol.violation, Severity::Error));
    checks.push(Check::at_least("mt_integral_floor", summary.min_mt_defect, -opts.mt_tol, Severity::Error));
    if let Some(m) = summary.min_snr_margin {
        checks.push(Check::at_least("snr_floor", m, -tol.violation, Severity::Error));
    }
    match prob.expect_tight {
        Some(true) => checks.push(Check::at_least("tight_fraction", summary.tight_fraction, 1.0, Severity::Error)),
        Some(false) => checks.push(Check::at_least(
            "loose_fraction",
            1.0 - summary.tight_fraction,
            LOOSE_FRACTION_MIN,
            Severity::Warning,
        )),
        None => {}
    }

    let overlay = prob.overlay.as_ref().map(|f| rows.iter().map(|r| f(r.report.t)).collect::<Vec<_>>());
    let overlay_deviation = overlay.as_ref().map(|ov| {
        rows.iter().zip(ov).fold(ChannelDeviation::default(), |acc, (r, o)| ChannelDeviation {
            mu: acc.mu.max((r.report.mu - o.mu).abs()),
            sigma: acc.sigma.max((r.report.sigma - o.sigma).abs()),
            v2_mean: acc.v2_mean.max((r.report.v2_mean - o.v2_mean).abs()),
        })
    });
    if let Some(d) = overlay_deviation {
        checks.push(Check::at_most("overlay_deviation", d.max(), prob.overlay_tol, prob.overlay_severity));
    }

    let bloch_deviation = if prob.bloch { bloch_deviation(&prob, &cfg.grid, &rows)? } else { None };
    if let Some(d) = bloch_deviation {
        let sev = if method == Method::ExactCommuting { Severity::Error } else { Severity::Warning };
        checks.push(Check::at_most("bloch_deviation", d.max(), opts.bloch_tol, sev));
    }

    let picture_defect = if opts.picture_check { Some(picture_equivalence_check(&prob.a, &prob.h, &traj)?) } else { None };
    if let Some(d) = picture_defect {
        checks.push(Check::at_most("picture_defect", d, opts.picture_tol, Severity::Error));
    }

    let special = prob.special.as_ref().map(|(w, n, a)| special_points(*w, *n, a, &rows)).unwrap_or_default();
    if !special.is_empty() {
        let worst = special.iter().map(|p| p.deviation).fold(0.0, f64::max);
        checks.push(Check::at_most("special_points", worst, opts.special_point_tol, Severity::Error));
    }

    if let Some(info) = prob.truncation {
        let sev = if info.auto { Severity::Error } else { Severity::Warning };
        checks.push(Check::at_most("truncation_tail", info.tail_mass, opts.tail_tol, sev));
    }

    let flags: Vec<String> =
        checks.iter().filter(|c| !c.passed && c.severity == Severity::Error).map(|c| c.name.clone()).collect();
    Ok(ScenarioReport {
        config: cfg.clone(),
        label: cfg.label().to_string(),
        method,
        dim: prob.h.dim(),
        rows,
        overlay,
        overlay_deviation,
        bloch_deviation,
        picture_defect,
        truncation: prob.truncation,
        special_points: special,
        summary,
        passed: flags.is_empty(),
        checks,
        flags,
    })
}

fn summarize(
    rows: &[SeriesRow],
    prob: &Problem,
    traj: &Trajectory,
    opts: &RunOptions,
    tol: &crate::Tolerances,
) -> Result<Summary> {
    let reps: Vec<BoundReport> = rows.iter().map(|r| r.report.clone()).collect();
    let nondeg: Vec<&BoundReport> = reps.iter().filter(|r| !r.degenerate).collect();
    let fold_opt = |f: fn(f64, f64) -> f64, g: fn(&BoundReport) -> Option<f64>| {
        reps.iter().filter_map(g).reduce(f)
    };
    let tight_fraction = if nondeg.is_empty() {
        0.0
    } else {
        nondeg.iter().filter(|r| r.tight).count() as f64 / nondeg.len() as f64
    };
    let snr = snr_from_reports(&reps, opts.snr_quadrature, tol)?;
    let min_snr_margin = snr
        .snr
        .iter()
        .zip(&snr.snr_min)
        .filter_map(|(s, m)| match (s, m) {
            (Some(s), Some(m)) => Some((s - m) / s.max(1.0)),
            _ => None,
        })
        .reduce(f64::min);
    let min_mt_defect = mt_integral_check(&prob.h, traj, opts.mt_quadrature)?.iter().map(|p| p.defect).fold(f64::INFINITY, f64::min);
    Ok(Summary {
        n_points: reps.len(),
        n_degenerate: reps.len() - nondeg.len(),
        tight_fraction,
        min_residual_r1: fold_opt(f64::min, |r| r.residual_r1),
        min_residual_r2: fold_opt(f64::min, |r| r.residual_r2),
        max_residual_r2: fold_opt(f64::max, |r| r.residual_r2),
        min_cs_residual: reps.iter().map(|r| r.cs_residual).fold(f64::INFINITY, f64::min),
        max_norm_defect: rows.iter().map(|r| r.norm_defect).fold(0.0, f64::max),
        min_snr_margin,
        min_mt_defect,
    })
}

fn bloch_deviation(prob: &Problem, grid: &crate::dynamics::TimeGrid, rows: &[SeriesRow]) -> Result<Option<BlochDeviation>> {
    if prob.h.dim() != 2 {
        return Ok(None);
    }
    let model = match BlochModel::from_operators(&prob.h, &prob.a, &prob.psi0, prob.hbar) {
        Ok(m) => m,
        Err(Error::NotTraceless(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let sub = (grid.dt() / BLOCH_MAX_STEP).ceil().max(1.0) as usize;
    let fine = crate::dynamics::TimeGrid::new(grid.t0, grid.t1, grid.n_steps * sub)?;
    let path = bloch_evolve(&model, &fine)?;
    let mut d = BlochDeviation::default();
    for (row, a) in rows.iter().zip(path.into_iter().step_by(sub)) {
        let st = bloch_stats(&model.point(row.report.t, a));
        let r = &row.report;
        d.mu = d.mu.max((st.mean - r.mu).abs());
        d.sigma_sq = d.sigma_sq.max((st.sigma_sq - r.sigma * r.sigma).abs());
        d.v_mean = d.v_mean.max((st.v_mean - r.mu_dot).abs());
        d.v2_mean = d.v2_mean.max((st.v2_mean - r.v2_mean).abs());
    }
    Ok(Some(d))
}

/// Pointwise ratios between an example-1 run and an example-2 run on the same grid.
pub fn example_comparison(first: &ScenarioReport, second: &ScenarioReport) -> Result<Vec<RatioPoint>> {
    comparison_ratios(&first.reports(), &second.reports(), &first.config.tolerances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn cfg(v: serde_json::Value) -> ScenarioConfig {
        ScenarioConfig::from_value(v).unwrap()
    }

    fn example1(n: usize) -> ScenarioConfig {
        cfg(json!({
            "name": "example1",
            "params": {"omega0": 1.0, "nu0": 1.0, "a": "t"},
            "grid": {"t0": 0.0, "t1": 5.0, "n_steps": n}
        }))
    }

    #[test]
    fn example1_is_tight_and_matches_overlays() {
        let rep = run_scenario(&example1(1000)).unwrap();
        assert!(rep.passed, "{:?}", rep.checks);
        assert_eq!(rep.summary.tight_fraction, 1.0);
        assert!(rep.rows[0].report.degenerate);
        assert!(rep.overlay_deviation.unwrap().max() <= 1e-7);
        assert!(rep.bloch_deviation.unwrap().max() <= 1e-8);
        assert!(rep.picture_defect.unwrap() <= 1e-9);
        assert_eq!(rep.method, Method::ExactCommuting);
    }

    #[test]
    fn constant_amplitude_rate_identity() {
        let c = cfg(json!({
            "name": "example1",
            "params": {"omega0": 0.7, "nu0": 1.3, "a": 2.0},
            "grid": {"t0": 0.0, "t1": 3.0, "n_steps": 300}
        }));
        let rep = run_scenario(&c).unwrap();
        for r in rep.rows.iter().filter(|r| !r.report.degenerate) {
            let expected = 4.0 * 0.49 * 4.0 * (1.3 * r.report.t).cos().powi(2);
            assert!((r.report.lhs_sq_sum.unwrap() - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }

    #[test]
    fn example2_is_loose_with_special_points() {
        let rep = run_scenario(&cfg(json!({
            "name": "example2",
            "params": {"omega0": 1.0, "nu0": 1.0, "a": "t", "b": "t"},
            "grid": {"t0": 0.0, "t1": 5.0, "n_steps": 5000}
        })))
        .unwrap();
        assert!(rep.passed, "{:?}", rep.checks);
        assert!(rep.summary.tight_fraction < 0.5);
        assert!(rep.special_points.iter().any(|p| (p.t - std::f64::consts::PI).abs() < 1e-3));
    }

    #[test]
    fn vanishing_b_recovers_example1() {
        let grid = json!({"t0": 0.0, "t1": 2.0, "n_steps": 400});
        let one = run_scenario(&cfg(json!({"name": "example1", "params": {"omega0": 1.0, "nu0": 1.0, "a": "t"}, "grid": grid}))).unwrap();
        let two = run_scenario(&cfg(json!({
            "name": "example2",
            "params": {"omega0": 1.0, "nu0": 1.0, "a": "t", "b": 1e-8},
            "grid": grid
        })))
        .unwrap();
        for (p, q) in one.rows.iter().zip(&two.rows).skip(1) {
            let (p, q) = (&p.report, &q.report);
            for (x, y) in [(p.mu, q.mu), (p.sigma, q.sigma), (p.mu_dot, q.mu_dot), (p.v2_mean, q.v2_mean)] {
                assert!((x - y).abs() <= 1e-6);
            }
            assert!((p.sigma_dot.unwrap() - q.sigma_dot.unwrap()).abs() <= 1e-6);
        }
    }

    #[test]
    fn unknown_and_missing_params_are_config_errors() {
        let mut c = example1(10);
        c.params.remove("omega0");
        assert!(matches!(run_scenario(&c), Err(Error::Config { path, .. }) if path == "params.omega0"));
        let mut c = example1(10);
        c.params.insert("omega1".into(), json!(1.0));
        assert!(matches!(run_scenario(&c), Err(Error::Config { path, .. }) if path == "params.omega1"));
        let mut c = example1(10);
        c.params.insert("nu0".into(), json!(-1.0));
        assert!(matches!(run_scenario(&c), Err(Error::Config { path, .. }) if path == "params.nu0"));
    }

    #[test]
    fn oscillator_vacuum_quadrature() {
        let rep = run_scenario(&cfg(json!({
            "name": "example3",
            "params": {"alpha": [0.0, 0.0], "z": [0.0, 0.0], "s": 12},
            "grid": {"t0": 0.0, "t1": 3.0, "n_steps": 300}
        })))
        .unwrap();
        for r in &rep.rows {
            let r = &r.report;
            assert!(r.mu.abs() <= 1e-12);
            assert!((r.sigma - 0.5f64.sqrt()).abs() <= 1e-12);
            assert!(r.sigma_dot.unwrap().abs() <= 1e-12);
            assert!((r.residual_r2.unwrap() - r.v2_mean).abs() <= 1e-12);
        }
        assert!(rep.overlay_deviation.unwrap().max() <= 1e-12);
    }

    #[test]
    fn oscillator_auto_cutoff_is_adequate() {
        let rep = run_scenario(&cfg(json!({
            "name": "example3",
            "params": {"alpha": [2.0, 1.0], "z": [0.5, 0.5]},
            "grid": {"t0": 0.0, "t1": 1.0, "n_steps": 100}
        })))
        .unwrap();
        let info = rep.truncation.unwrap();
        assert!(info.auto && info.adequate && info.s >= info.recommended);
        assert!(rep.passed, "{:?}", rep.checks);
    }

    #[test]
    fn corrupted_propagators_break_picture_equivalence() {
        let c = example1(200);
        let h = qubit_example_hamiltonian(1.0, 1.0, 1.0).unwrap();
        let a = qubit_example_observable(ScalarFn::T, None).unwrap();
        let pcfg = PropagationConfig { keep_propagators: true, ..Default::default() };
        let mut traj = propagate(&h, &qubit_plus(), &c.grid, Method::ExactCommuting, &pcfg).unwrap();
        assert!(picture_equivalence_check(&a, &h, &traj).unwrap() <= 1e-12);
        let us = traj.propagators.as_mut().unwrap();
        for k in 100..us.len() {
            us[k] = us[k - 1].clone();
        }
        assert!(picture_equivalence_check(&a, &h, &traj).unwrap() > 1e-3);
        traj.propagators = None;
        assert!(picture_equivalence_check(&a, &h, &traj).is_err());
    }
}
