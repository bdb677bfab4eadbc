//! Fixed-seed invariant suites with machine-readable outcomes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::bloch::{bloch_evolve, geometric_residual, tightness_span_test, BlochModel, BlochPoint, Vec3};
use crate::bounds::{acceleration_limit, mt_integral_check, mt_ml_times, snr_trace, Quadrature};
use crate::dynamics::{propagate, Method, PropagationConfig, TimeDepOperator, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::fluctuation::{chain_residual, higher_order_chain, report_at, variance};
use crate::hilbert::{pauli, qubit_plus, recommended_dim, truncation_error, Axis};
use crate::linops::{anticommutator, commutator, herm_expm, is_unitary, r, CMatrix, CVector};
use crate::sampling::{random_coefficient, random_hermitian, random_qubit_hamiltonian, random_state, random_unit3, seeded, SeededRng};
use crate::scenarios::{example_comparison, qubit_example_hamiltonian, qubit_example_observable, run_scenario, ScenarioConfig};
use crate::timefn::ScalarFn;
use crate::tol::Tolerances;

pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Bounds,
    Bloch,
    Truncation,
    All,
}

impl Suite {
    pub fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Algebra, Suite::Bounds, Suite::Bloch, Suite::Truncation],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebra" => Ok(Suite::Algebra),
            "bounds" => Ok(Suite::Bounds),
            "bloch" => Ok(Suite::Bloch),
            "truncation" => Ok(Suite::Truncation),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!("unknown suite '{other}'"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Algebra => "algebra",
            Suite::Bounds => "bounds",
            Suite::Bloch => "bloch",
            Suite::Truncation => "truncation",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub threshold: f64,
    pub samples: usize,
    pub failures: usize,
}

impl CaseResult {
    fn min_at_least(name: &str, values: &[f64], threshold: f64) -> Self {
        let failures = values.iter().filter(|v| !(**v >= threshold)).count();
        let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
        Self { name: name.into(), passed: failures == 0, value: worst, threshold, samples: values.len(), failures }
    }

    fn max_at_most(name: &str, values: &[f64], threshold: f64) -> Self {
        let failures = values.iter().filter(|v| !(**v <= threshold)).count();
        let worst = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { name: name.into(), passed: failures == 0, value: worst, threshold, samples: values.len(), failures }
    }

    fn flag(name: &str, ok: bool, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: ok, value, threshold, samples: 1, failures: usize::from(!ok) }
    }

    fn unevaluated(name: &str) -> Self {
        Self { name: name.into(), passed: false, value: f64::NAN, threshold: f64::NAN, samples: 0, failures: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub cases: Vec<CaseResult>,
    pub passed: usize,
    pub failed: usize,
    /// Messages from cases that could not be evaluated.
    pub errors: Vec<String>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

struct Collector {
    cases: Vec<CaseResult>,
    errors: Vec<String>,
}

impl Collector {
    fn new() -> Self {
        Self { cases: Vec::new(), errors: Vec::new() }
    }

    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<CaseResult>) {
        match f() {
            Ok(c) => self.cases.push(c),
            Err(e) => {
                self.errors.push(format!("{name}: {e}"));
                self.cases.push(CaseResult::unevaluated(name));
            }
        }
    }

    fn finish(self, suite: Suite, seed: u64) -> SuiteReport {
        let passed = self.cases.iter().filter(|c| c.passed).count();
        let failed = self.cases.len() - passed;
        SuiteReport { suite, seed, cases: self.cases, passed, failed, errors: self.errors }
    }
}

/// Run one suite, or every suite for `Suite::All`.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<SuiteReport> {
    suite
        .members()
        .into_iter()
        .map(|s| match s {
            Suite::Algebra => algebra(seed),
            Suite::Bounds => bounds(seed),
            Suite::Bloch => bloch(seed),
            Suite::Truncation => truncation(seed),
            Suite::All => unreachable!("expanded by members"),
        })
        .collect()
}

pub const CS_DIMS: [usize; 4] = [2, 3, 4, 8];

/// Covariance statistics of two observables in one state.
#[derive(Debug, Clone, Copy)]
pub struct PairStats {
    pub var_a: f64,
    pub var_b: f64,
    /// ⟨δA δB⟩
    pub corr: Complex64,
    /// ½⟨{δA, δB}⟩
    pub sym: f64,
    /// ⟨[A, B]⟩/(2i)
    pub comm: f64,
}

pub fn pair_stats(a: &CMatrix, b: &CMatrix, psi: &CVector) -> Result<PairStats> {
    let mean = |m: &CMatrix| psi.dotc(&(m * psi));
    let d = a.nrows();
    let da = a - CMatrix::identity(d, d) * mean(a);
    let db = b - CMatrix::identity(d, d) * mean(b);
    let corr = mean(&(&da * &db));
    let sym = mean(&anticommutator(&da, &db)?).re * 0.5;
    let comm = (mean(&commutator(a, b)?) / Complex64::new(0.0, 2.0)).re;
    Ok(PairStats { var_a: variance(a, psi)?, var_b: variance(b, psi)?, corr, sym, comm })
}

/// Cauchy–Schwarz residuals σ_A²σ_B² − |⟨δAδB⟩|² and the relative defect of
/// |⟨δAδB⟩|² = (½⟨{δA,δB}⟩)² + (⟨[A,B]⟩/2i)², over `n` random draws.
pub fn cauchy_schwarz_draws(rng: &mut SeededRng, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut cs = Vec::with_capacity(n);
    let mut ident = Vec::with_capacity(n);
    for k in 0..n {
        let d = CS_DIMS[k % CS_DIMS.len()];
        let a = random_hermitian(rng, d, 1.0);
        let b = random_hermitian(rng, d, 1.0);
        let psi = random_state(rng, d);
        let p = pair_stats(&a, &b, &psi)?;
        let lhs = p.corr.norm_sqr();
        cs.push(p.var_a * p.var_b - lhs);
        let rhs = p.sym * p.sym + p.comm * p.comm;
        ident.push((lhs - rhs).abs() / lhs.max(rhs).max(1e-300));
    }
    Ok((cs, ident))
}

/// f(t)H₁ + g(t)H₂ with random Hermitian H₁, H₂.
fn random_hamiltonian(rng: &mut SeededRng, dim: usize) -> Result<TimeDepOperator> {
    if dim == 2 {
        return random_qubit_hamiltonian(rng);
    }
    let terms = vec![
        (random_coefficient(rng), random_hermitian(rng, dim, 1.0)),
        (random_coefficient(rng), random_hermitian(rng, dim, 1.0)),
    ];
    TimeDepOperator::from_terms(terms)
}

fn random_observable(rng: &mut SeededRng, dim: usize) -> Result<TimeDepOperator> {
    TimeDepOperator::from_terms(vec![
        (random_coefficient(rng), random_hermitian(rng, dim, 1.0)),
        (ScalarFn::Const(1.0), random_hermitian(rng, dim, 1.0)),
    ])
}

/// Residuals of both inequalities for random operators, states and instants.
pub fn main_inequality_draws(rng: &mut SeededRng, n: usize, tol: &Tolerances) -> Result<(Vec<f64>, Vec<f64>)> {
    use rand::Rng;
    let mut r1 = Vec::with_capacity(n);
    let mut r2 = Vec::with_capacity(n);
    for k in 0..n {
        let d = CS_DIMS[k % CS_DIMS.len()];
        let h = random_hamiltonian(rng, d)?;
        let a = random_observable(rng, d)?;
        let psi = random_state(rng, d);
        let t = rng.gen_range(0.0..5.0);
        let rep = report_at(&a, &h, &psi, t, 1.0, tol)?;
        if let (Some(x), Some(y)) = (rep.residual_r1, rep.residual_r2) {
            r1.push(x);
            r2.push(y);
        }
    }
    Ok((r1, r2))
}

fn example_grid(t1: f64, n: usize) -> Result<TimeGrid> {
    TimeGrid::new(0.0, t1, n)
}

fn example1_trajectory(n_steps: usize, keep: bool) -> Result<(TimeDepOperator, Trajectory)> {
    let h = qubit_example_hamiltonian(1.0, 1.0, 1.0)?;
    let cfg = PropagationConfig { keep_propagators: keep, ..Default::default() };
    let traj = propagate(&h, &qubit_plus(), &example_grid(5.0, n_steps)?, Method::ExactCommuting, &cfg)?;
    Ok((h, traj))
}

pub fn qubit_config(with_b: bool, n_steps: usize) -> Result<ScenarioConfig> {
    let mut v = serde_json::json!({
        "name": if with_b { "example2" } else { "example1" },
        "params": {"omega0": 1.0, "nu0": 1.0, "a": "t"},
        "grid": {"t0": 0.0, "t1": 5.0, "n_steps": n_steps}
    });
    if with_b {
        v["params"]["b"] = serde_json::json!("t");
    }
    ScenarioConfig::from_value(v)
}

fn algebra(seed: u64) -> SuiteReport {
    let mut rng = seeded(seed);
    let tol = Tolerances::default();
    let mut col = Collector::new();
    match cauchy_schwarz_draws(&mut rng, 1000) {
        Ok((cs, ident)) => {
            col.cases.push(CaseResult::min_at_least("cauchy_schwarz_covariance", &cs, -1e-10));
            col.cases.push(CaseResult::max_at_most("commutator_anticommutator_identity", &ident, 1e-10));
        }
        Err(e) => col.run("cauchy_schwarz_covariance", || Err(e)),
    }
    col.run("hermitian_exponential_unitary", || {
        let mut defects = Vec::new();
        for k in 0..200 {
            let d = CS_DIMS[k % CS_DIMS.len()];
            let h = random_hermitian(&mut rng, d, 3.0);
            let u = herm_expm(&h, Complex64::new(0.0, -1.7))?;
            defects.push(is_unitary(&u, 1e-10).defect);
        }
        Ok(CaseResult::max_at_most("hermitian_exponential_unitary", &defects, 1e-10))
    });
    col.run("fluctuation_inequalities", || {
        let (r1, r2) = main_inequality_draws(&mut rng, 400, &tol)?;
        let worst: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a.min(*b)).collect();
        Ok(CaseResult::min_at_least("fluctuation_inequalities", &worst, -1e-8))
    });
    col.finish(Suite::Algebra, seed)
}

/// (dσ_H/dt)² ≤ σ_Ḣ² margins along example 1 and `n` random qubit Hamiltonians.
pub fn acceleration_margins(rng: &mut SeededRng, n: usize) -> Result<Vec<f64>> {
    let tol = Tolerances::default();
    let (h, traj) = example1_trajectory(1000, false)?;
    let mut out: Vec<f64> = acceleration_limit(&h, &traj, &tol)?.into_iter().flatten().collect();
    let grid = example_grid(3.0, 150)?;
    for _ in 0..n {
        let h = random_qubit_hamiltonian(rng)?;
        let psi = random_state(rng, 2);
        let traj = propagate(&h, &psi, &grid, Method::Midpoint, &PropagationConfig::default())?;
        out.extend(acceleration_limit(&h, &traj, &tol)?.into_iter().flatten());
    }
    Ok(out)
}

/// Integral MT defects on example 1, example 2's Hamiltonian, and random qubit runs.
pub fn mt_defects(rng: &mut SeededRng, n_random: usize) -> Result<Vec<f64>> {
    let (h, traj) = example1_trajectory(5000, false)?;
    let mut out: Vec<f64> = mt_integral_check(&h, &traj, Quadrature::EndpointMax)?.iter().map(|p| p.defect).collect();
    let grid = example_grid(3.0, 600)?;
    for _ in 0..n_random {
        let h = random_qubit_hamiltonian(rng)?;
        let psi = random_state(rng, 2);
        let traj = propagate(&h, &psi, &grid, Method::Midpoint, &PropagationConfig::default())?;
        out.extend(mt_integral_check(&h, &traj, Quadrature::EndpointMax)?.iter().map(|p| p.defect));
    }
    Ok(out)
}

/// |τ_MT − π/(2ω)| and the integral defect at τ for H = ħωσ_z, ψ₀ = |+⟩.
pub fn rabi_saturation(omega: f64) -> Result<(f64, f64)> {
    let hm = pauli(Axis::Z) * r(omega);
    let tau = std::f64::consts::PI / (2.0 * omega);
    let rep = mt_ml_times(&hm, &qubit_plus(), 1.0, &Tolerances::default())?;
    let h = TimeDepOperator::constant(hm)?;
    let traj = propagate(&h, &qubit_plus(), &example_grid(tau, 200)?, Method::ExactCommuting, &PropagationConfig::default())?;
    let last = *mt_integral_check(&h, &traj, Quadrature::EndpointMax)?.last().expect("non-empty grid");
    let tau_mt = rep.tau_mt.ok_or(Error::Undefined("Rabi ΔE vanished"))?;
    Ok(((tau_mt - tau).abs(), last.defect.abs()))
}

/// snr − snr_min on example 1 for t ≥ t_min.
pub fn snr_margins(t_min: f64) -> Result<Vec<f64>> {
    let (h, traj) = example1_trajectory(5000, false)?;
    let a = qubit_example_observable(ScalarFn::T, None)?;
    let tr = snr_trace(&a, &h, &traj, Quadrature::EndpointMax, &Tolerances::default())?;
    Ok(tr
        .t
        .iter()
        .zip(tr.snr.iter().zip(&tr.snr_min))
        .filter(|(t, _)| **t >= t_min - 1e-12)
        .filter_map(|(_, (s, m))| Some(s.as_ref()? - m.as_ref()?))
        .collect())
}

/// Chain residuals for levels 0..n on example 1.
pub fn chain_residuals(levels: usize) -> Result<Vec<Vec<f64>>> {
    let (h, traj) = example1_trajectory(500, false)?;
    let a = qubit_example_observable(ScalarFn::T, None)?;
    let chain = higher_order_chain(&a, &h, levels + 1, 1.0)?;
    let tol = Tolerances::default();
    (0..=levels)
        .map(|n| {
            let mut v = Vec::new();
            for (k, psi) in traj.states.iter().enumerate() {
                if let Some(x) = chain_residual(&chain, n, psi, traj.grid.time(k), &tol)? {
                    v.push(x);
                }
            }
            Ok(v)
        })
        .collect()
}

fn bounds(seed: u64) -> SuiteReport {
    let mut rng = seeded(seed.wrapping_add(1));
    let mut col = Collector::new();
    col.run("acceleration_limit", || Ok(CaseResult::min_at_least("acceleration_limit", &acceleration_margins(&mut rng, 200)?, -1e-8)));
    col.run("mt_integral", || Ok(CaseResult::min_at_least("mt_integral", &mt_defects(&mut rng, 20)?, -1e-6)));
    col.run("mt_rabi_saturation", || {
        let (dt, di) = rabi_saturation(1.3)?;
        Ok(CaseResult::flag("mt_rabi_saturation", dt.max(di) <= 1e-6, dt.max(di), 1e-6))
    });
    col.run("snr_floor", || Ok(CaseResult::min_at_least("snr_floor", &snr_margins(0.1)?, -1e-8)));
    col.run("comparison_ratios", || {
        let one = run_scenario(&qubit_config(false, 1000)?)?;
        let two = run_scenario(&qubit_config(true, 1000)?)?;
        let ratios = example_comparison(&one, &two)?;
        let vals: Vec<f64> =
            ratios.iter().flat_map(|p| [p.snr_ratio, p.var_ratio, p.v2_ratio]).flatten().collect();
        let outside: Vec<f64> = vals.iter().map(|v| if (0.0..=1.0 + 1e-12).contains(v) { 0.0 } else { 1.0 }).collect();
        Ok(CaseResult::max_at_most("comparison_ratios", &outside, 0.0))
    });
    col.run("higher_order_chain", || {
        let all: Vec<f64> = chain_residuals(2)?.into_iter().flatten().collect();
        Ok(CaseResult::min_at_least("higher_order_chain", &all, -1e-6))
    });
    col.finish(Suite::Bounds, seed)
}

/// Geometric residuals for random qubit configurations.
pub fn geometric_draws(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    use rand::Rng;
    (0..n)
        .map(|_| {
            let v = |rng: &mut SeededRng, s: f64| Vec3::from(random_unit3(rng)) * rng.gen_range(0.0..s);
            let p = BlochPoint { a: Vec3::from(random_unit3(rng)), h: v(rng, 2.0), m: v(rng, 2.0), m_dot: v(rng, 2.0) };
            geometric_residual(&p).value
        })
        .collect()
}

/// Span-membership flags along example 1 (non-degenerate points) and at t = 1 of example 2.
pub fn span_membership(n_steps: usize) -> Result<(Vec<bool>, bool)> {
    let tol = Tolerances::default();
    let h = qubit_example_hamiltonian(1.0, 1.0, 1.0)?;
    let grid = example_grid(5.0, n_steps)?;
    let along = |a: &TimeDepOperator| -> Result<(BlochModel, Vec<Vec3>)> {
        let model = BlochModel::from_operators(&h, a, &qubit_plus(), 1.0)?;
        let path = bloch_evolve(&model, &grid)?;
        Ok((model, path))
    };
    let a1 = qubit_example_observable(ScalarFn::T, None)?;
    let (m1, p1) = along(&a1)?;
    let mut flags = Vec::new();
    for (k, a) in p1.iter().enumerate() {
        let pt = m1.point(grid.time(k), *a);
        if pt.m_perp().norm() > tol.sigma_floor {
            flags.push(tightness_span_test(&pt, tol.span).member);
        }
    }
    let a2 = qubit_example_observable(ScalarFn::T, Some(ScalarFn::T))?;
    let (m2, p2) = along(&a2)?;
    let k = grid.nearest(1.0);
    let at1 = tightness_span_test(&m2.point(grid.time(k), p2[k]), tol.span).member;
    Ok((flags, at1))
}

fn bloch(seed: u64) -> SuiteReport {
    let mut rng = seeded(seed.wrapping_add(2));
    let mut col = Collector::new();
    for (name, with_b) in [("bloch_oracle_example1", false), ("bloch_oracle_example2", true)] {
        col.run(name, || {
            let rep = run_scenario(&qubit_config(with_b, 5000)?)?;
            let d = rep.bloch_deviation.ok_or(Error::Undefined("Bloch oracle not run"))?;
            Ok(CaseResult::flag(name, d.max() <= 1e-8, d.max(), 1e-8))
        });
    }
    col.run("span_membership", || {
        let (flags, at1) = span_membership(5000)?;
        let all = flags.iter().all(|f| *f);
        let frac = flags.iter().filter(|f| **f).count() as f64 / flags.len().max(1) as f64;
        Ok(CaseResult::flag("span_membership", all && !at1, frac, 1.0))
    });
    col.run("geometric_residual", || {
        Ok(CaseResult::min_at_least("geometric_residual", &geometric_draws(&mut rng, 1000), -1e-10))
    });
    col.finish(Suite::Bloch, seed)
}

pub fn oscillator_config(s: Option<usize>, n_steps: usize) -> Result<ScenarioConfig> {
    let mut v = serde_json::json!({
        "name": "example3",
        "params": {"alpha": [2.0, 1.0], "z": [0.5, 0.5], "omega": 1.0, "hbar": 1.0, "mass": 1.0},
        "grid": {"t0": 0.0, "t1": std::f64::consts::TAU, "n_steps": n_steps}
    });
    if let Some(s) = s {
        v["params"]["s"] = serde_json::json!(s);
    }
    ScenarioConfig::from_value(v)
}

fn truncation(seed: u64) -> SuiteReport {
    let mut col = Collector::new();
    col.run("truncation_number", || {
        let e = truncation_error(5.0, 20)?;
        Ok(CaseResult::flag("truncation_number", (1e-7..=1e-5).contains(&e), e, 1e-5))
    });
    col.run("recommended_dim", || {
        let s = recommended_dim(5.0, 1e-6)?;
        let ok = truncation_error(5.0, s)? <= 1e-6 && truncation_error(5.0, s - 1)? > 1e-6;
        Ok(CaseResult::flag("recommended_dim", ok, s as f64, 1e-6))
    });
    col.run("oscillator_residual", || {
        let rep = run_scenario(&oscillator_config(Some(20), 4000)?)?;
        let mut c = CaseResult::min_at_least(
            "oscillator_residual",
            &rep.rows.iter().filter_map(|r| r.report.residual_r2).collect::<Vec<_>>(),
            -1e-8,
        );
        if rep.summary.max_norm_defect > 1e-9 {
            c.passed = false;
            c.failures += 1;
        }
        Ok(c)
    });
    col.run("oscillator_auto_cutoff", || {
        let rep = run_scenario(&oscillator_config(None, 400)?)?;
        let info = rep.truncation.ok_or(Error::Undefined("no truncation record"))?;
        Ok(CaseResult::flag("oscillator_auto_cutoff", info.adequate && rep.passed, info.tail_mass, 1e-8))
    });
    col.finish(Suite::Truncation, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Algebra, Suite::Bounds, Suite::Bloch, Suite::Truncation, Suite::All] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
        assert_eq!(Suite::All.members().len(), 4);
    }

    #[test]
    fn pair_stats_on_pauli_pair() {
        let psi = crate::hilbert::qubit_basis(0).unwrap();
        let p = pair_stats(&pauli(Axis::X), &pauli(Axis::Y), &psi).unwrap();
        assert!((p.var_a - 1.0).abs() < 1e-15 && (p.var_b - 1.0).abs() < 1e-15);
        assert!((p.comm - 1.0).abs() < 1e-15 && p.sym.abs() < 1e-15);
        assert!((p.corr.norm_sqr() - p.var_a * p.var_b).abs() < 1e-15);
    }
}
