//! Time-dependent operators, time grids, and propagation of pure states under
//! time-dependent Hamiltonians.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{commutator, hermitian_defect, max_abs, norm_defect, r, CMatrix, CVector, HermEigen};
use crate::quad::cumulative_simpson;
use crate::timefn::ScalarFn;
use crate::tol::Tolerances;

/// `(t, n) ↦ dⁿO/dtⁿ(t)`
pub type DerivFn = Arc<dyn Fn(f64, usize) -> CMatrix + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Terms(Vec<(ScalarFn, CMatrix)>),
    Closure { eval: DerivFn, analytic_order: usize },
}

/// A Hermitian operator-valued function of time.
///
/// Derivatives up to `analytic_order()` are exact; higher orders fall back to
/// central differences with step `fd_step`, optionally Richardson-extrapolated.
#[derive(Clone)]
pub struct TimeDepOperator {
    dim: usize,
    repr: Repr,
    commuting_family: bool,
    fd_step: f64,
    richardson: bool,
}

impl fmt::Debug for TimeDepOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDepOperator")
            .field("dim", &self.dim)
            .field("analytic_order", &self.analytic_order())
            .field("commuting_family", &self.commuting_family)
            .field("fd_step", &self.fd_step)
            .field("richardson", &self.richardson)
            .finish()
    }
}

const DEFAULT_FD_STEP: f64 = 1e-6;

impl TimeDepOperator {
    /// Σ f_i(t) M_i with whitelisted scalar coefficients and Hermitian M_i.
    pub fn from_terms(terms: Vec<(ScalarFn, CMatrix)>) -> Result<Self> {
        let dim = match terms.first() {
            Some((_, m)) => m.nrows(),
            None => return Err(Error::InvalidArgument("operator needs at least one term".into())),
        };
        for (_, m) in &terms {
            if m.nrows() != m.ncols() {
                return Err(Error::NotSquare(m.nrows(), m.ncols()));
            }
            if m.nrows() != dim {
                return Err(Error::DimensionMismatch(dim, m.nrows()));
            }
            let d = hermitian_defect(m);
            if d > crate::linops::HERM_TOL * max_abs(m).max(1.0) {
                return Err(Error::NotHermitian(d));
            }
        }
        let mut commuting = true;
        for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                let (a, b) = (&terms[i].1, &terms[j].1);
                let scale = (max_abs(a) * max_abs(b)).max(1.0);
                if max_abs(&commutator(a, b)?) > 1e-12 * scale {
                    commuting = false;
                }
            }
        }
        Ok(Self { dim, repr: Repr::Terms(terms), commuting_family: commuting, fd_step: DEFAULT_FD_STEP, richardson: false })
    }

    pub fn constant(m: CMatrix) -> Result<Self> {
        Self::from_terms(vec![(ScalarFn::Const(1.0), m)])
    }

    /// f(t)·M
    pub fn scaled(f: ScalarFn, m: CMatrix) -> Result<Self> {
        Self::from_terms(vec![(f, m)])
    }

    /// Operator given by a closure with an optional analytic first derivative.
    pub fn from_fn<F, G>(dim: usize, value: F, dvalue: Option<G>) -> Self
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
        G: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        let order = usize::from(dvalue.is_some());
        let eval: DerivFn = match dvalue {
            Some(d) => Arc::new(move |t, n| if n == 0 { value(t) } else { d(t) }),
            None => Arc::new(move |t, _| value(t)),
        };
        Self::from_derivatives(dim, eval, order)
    }

    /// Operator given by a closure computing derivatives up to `analytic_order`.
    pub fn from_derivatives(dim: usize, eval: DerivFn, analytic_order: usize) -> Self {
        Self {
            dim,
            repr: Repr::Closure { eval, analytic_order },
            commuting_family: false,
            fd_step: DEFAULT_FD_STEP,
            richardson: false,
        }
    }

    /// Piecewise-linear interpolation of sampled Hermitian matrices on a sorted time list.
    pub fn tabulated(times: Vec<f64>, values: Vec<CMatrix>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::InvalidArgument("tabulated operator needs ≥ 2 samples, one per time".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("tabulated times must increase strictly".into()));
        }
        let dim = values[0].nrows();
        for m in &values {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(dim, m.nrows()));
            }
            let d = hermitian_defect(m);
            if d > crate::linops::HERM_TOL * max_abs(m).max(1.0) {
                return Err(Error::NotHermitian(d));
            }
        }
        let eval: DerivFn = Arc::new(move |t, _| {
            let k = match times.partition_point(|&x| x <= t) {
                0 => 0,
                p if p >= times.len() => times.len() - 2,
                p => p - 1,
            };
            let w = (t - times[k]) / (times[k + 1] - times[k]);
            &values[k] * r(1.0 - w) + &values[k + 1] * r(w)
        });
        Ok(Self::from_derivatives(dim, eval, 0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn commuting_family(&self) -> bool {
        self.commuting_family
    }

    pub fn with_commuting_family(mut self, flag: bool) -> Self {
        self.commuting_family = flag;
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        self.richardson = on;
        self
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn richardson(&self) -> bool {
        self.richardson
    }

    /// Highest derivative order computed exactly.
    pub fn analytic_order(&self) -> usize {
        match &self.repr {
            Repr::Terms(_) => usize::MAX,
            Repr::Closure { analytic_order, .. } => *analytic_order,
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.analytic_order() >= 1
    }

    /// The same operator with every derivative taken by finite differences.
    pub fn without_analytic_derivatives(&self) -> Self {
        let me = self.clone();
        let eval: DerivFn = Arc::new(move |t, _| me.value(t));
        Self { repr: Repr::Closure { eval, analytic_order: 0 }, ..self.clone() }
    }

    /// Single-term form f(t)·M when available.
    pub fn single_term(&self) -> Option<(&ScalarFn, &CMatrix)> {
        match &self.repr {
            Repr::Terms(t) if t.len() == 1 => Some((&t[0].0, &t[0].1)),
            _ => None,
        }
    }

    pub fn terms(&self) -> Option<&[(ScalarFn, CMatrix)]> {
        match &self.repr {
            Repr::Terms(t) => Some(t),
            _ => None,
        }
    }

    pub fn value(&self, t: f64) -> CMatrix {
        self.derivative(t, 0)
    }

    pub fn dvalue(&self, t: f64) -> CMatrix {
        self.derivative(t, 1)
    }

    /// dⁿO/dtⁿ at t.
    pub fn derivative(&self, t: f64, n: usize) -> CMatrix {
        if n <= self.analytic_order() {
            return match &self.repr {
                Repr::Terms(terms) => {
                    let mut acc = CMatrix::zeros(self.dim, self.dim);
                    for (f, m) in terms {
                        let k = f.derivative(t, n);
                        if k != 0.0 {
                            acc += m * r(k);
                        }
                    }
                    acc
                }
                Repr::Closure { eval, .. } => eval(t, n),
            };
        }
        let central = |h: f64| (self.derivative(t + h, n - 1) - self.derivative(t - h, n - 1)) * r(0.5 / h);
        let h = self.fd_step;
        if self.richardson {
            let coarse = central(h);
            let fine = central(0.5 * h);
            (fine * r(4.0) - coarse) * r(1.0 / 3.0)
        } else {
            central(h)
        }
    }
}

/// Uniform grid t_k = t0 + k·dt, k = 0..=n_steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        let g = Self { t0, t1, n_steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 > self.t0) {
            return Err(Error::InvalidArgument(format!("grid needs t1 > t0, got [{}, {}]", self.t0, self.t1)));
        }
        if self.n_steps < 1 {
            return Err(Error::InvalidArgument("grid needs n_steps ≥ 1".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the grid point closest to t.
    pub fn nearest(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt()).round().max(0.0) as usize).min(self.n_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactCommuting,
    Midpoint,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationConfig {
    pub hbar: f64,
    pub keep_propagators: bool,
    pub tol: Tolerances,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { hbar: 1.0, keep_propagators: false, tol: Tolerances::default() }
    }
}

/// Evolved states on a grid with normalization diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub hbar: f64,
    pub states: Vec<CVector>,
    pub norm_defects: Vec<f64>,
    /// Cumulative U(t_k) from t0, when requested.
    pub propagators: Option<Vec<CMatrix>>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }
}

fn check_state(psi0: &CVector, dim: usize, tol: &Tolerances) -> Result<()> {
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch(dim, psi0.len()));
    }
    let d = norm_defect(psi0);
    if d > tol.norm {
        return Err(Error::NotNormalized(d));
    }
    Ok(())
}

/// Evolve `psi0` under `h` on `grid`.
pub fn propagate(
    h: &TimeDepOperator,
    psi0: &CVector,
    grid: &TimeGrid,
    method: Method,
    cfg: &PropagationConfig,
) -> Result<Trajectory> {
    grid.validate()?;
    check_state(psi0, h.dim(), &cfg.tol)?;
    if !(cfg.hbar.is_finite() && cfg.hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {}", cfg.hbar)));
    }
    let unitaries = match method {
        Method::ExactCommuting => exact_unitaries(h, grid, cfg)?,
        Method::Midpoint => midpoint_unitaries(h, grid, cfg)?,
    };
    let mut states = Vec::with_capacity(grid.len());
    let mut norm_defects = Vec::with_capacity(grid.len());
    for (k, u) in unitaries.iter().enumerate() {
        let psi = match (&method, k) {
            (_, 0) => psi0.clone(),
            (Method::ExactCommuting, _) => u * psi0,
            (Method::Midpoint, _) => u * &states[k - 1],
        };
        let d = norm_defect(&psi);
        if d > cfg.tol.norm_budget {
            return Err(Error::NormBudgetExceeded { step: k, defect: d });
        }
        norm_defects.push(d);
        states.push(psi);
    }
    let propagators = if cfg.keep_propagators {
        Some(match method {
            Method::ExactCommuting => unitaries,
            Method::Midpoint => {
                let mut acc: Vec<CMatrix> = Vec::with_capacity(unitaries.len());
                for (k, u) in unitaries.into_iter().enumerate() {
                    let next = if k == 0 { u } else { u * &acc[k - 1] };
                    acc.push(next);
                }
                acc
            }
        })
    } else {
        None
    };
    Ok(Trajectory { grid: *grid, hbar: cfg.hbar, states, norm_defects, propagators })
}

/// U(t_k) = exp(−(i/ħ)∫_{t0}^{t_k} H) for each grid point.
fn exact_unitaries(h: &TimeDepOperator, grid: &TimeGrid, cfg: &PropagationConfig) -> Result<Vec<CMatrix>> {
    if !h.commuting_family() {
        return Err(Error::NotCommutingFamily);
    }
    let ts = grid.times();
    let phase = Complex64::new(0.0, -1.0 / cfg.hbar);
    let herm = cfg.tol.herm;
    if let Some((f, m)) = h.single_term() {
        let eig = HermEigen::new(m, herm)?;
        let ints = cumulative_simpson(|t| f.eval(t), &ts, cfg.tol.quad, 0.0);
        return Ok(ints.into_iter().map(|s| eig.exp(phase * s)).collect());
    }
    let integrals: Vec<CMatrix> = match h.terms() {
        Some(terms) => {
            let per_term: Vec<Vec<f64>> =
                terms.iter().map(|(f, _)| cumulative_simpson(|t| f.eval(t), &ts, cfg.tol.quad, 0.0)).collect();
            (0..ts.len())
                .map(|k| {
                    terms.iter().zip(&per_term).fold(CMatrix::zeros(h.dim(), h.dim()), |acc, ((_, m), ints)| {
                        acc + m * r(ints[k])
                    })
                })
                .collect()
        }
        None => cumulative_simpson(|t| h.value(t), &ts, cfg.tol.quad, CMatrix::zeros(h.dim(), h.dim())),
    };
    integrals.iter().map(|s| Ok(HermEigen::new(s, herm)?.exp(phase))).collect()
}

/// Per-step U_k = exp(−(i/ħ) H(t_{k−1} + dt/2) dt); entry 0 is the identity.
fn midpoint_unitaries(h: &TimeDepOperator, grid: &TimeGrid, cfg: &PropagationConfig) -> Result<Vec<CMatrix>> {
    let ts = grid.times();
    let mut out = Vec::with_capacity(ts.len());
    out.push(CMatrix::identity(h.dim(), h.dim()));
    for w in ts.windows(2) {
        let dt = w[1] - w[0];
        let hm = h.value(0.5 * (w[0] + w[1]));
        out.push(HermEigen::new(&hm, cfg.tol.herm)?.exp(Complex64::new(0.0, -dt / cfg.hbar)));
    }
    Ok(out)
}

/// max_k |‖ψ(t_k)‖ − 1|, recomputed from the stored states.
pub fn unitary_defect(traj: &Trajectory) -> f64 {
    traj.states.iter().map(norm_defect).fold(0.0, f64::max)
}
