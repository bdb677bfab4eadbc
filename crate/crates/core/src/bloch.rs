//! Qubit problems in Bloch-vector form (ħ = 1).
//!
//! State ρ = (1 + a·σ)/2, Hamiltonian H = h·σ, observable M = m·σ. Then
//! ȧ = 2h×a, v_M = (ṁ + 2m×h)·σ, ⟨M⟩ = a·m, σ_M² = m² − (a·m)².

use std::sync::Arc;

use nalgebra::{Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{TimeDepOperator, TimeGrid};
use crate::error::{Error, Result};
use crate::fluctuation::expectation;
use crate::hilbert::paulis;
use crate::linops::{CMatrix, CVector};

pub type Vec3 = Vector3<f64>;
pub type VecFn = Arc<dyn Fn(f64) -> Vec3 + Send + Sync>;

const DRIFT_LIMIT: f64 = 1e-6;
const TRACE_TOL: f64 = 1e-12;
const DEGENERATE_PERP: f64 = 1e-12;

/// Field h(t), observable m(t) and its rate, plus the initial Bloch vector.
#[derive(Clone)]
pub struct BlochModel {
    pub a0: Vec3,
    h: VecFn,
    m: VecFn,
    m_dot: Option<VecFn>,
    fd_step: f64,
}

impl std::fmt::Debug for BlochModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlochModel").field("a0", &self.a0).field("analytic_m_dot", &self.m_dot.is_some()).finish()
    }
}

/// Pauli components (Tr(Oσ_x), Tr(Oσ_y), Tr(Oσ_z))/2 of a traceless 2×2 operator.
pub fn pauli_components(o: &CMatrix) -> Result<Vec3> {
    if o.nrows() != 2 || o.ncols() != 2 {
        return Err(Error::DimensionMismatch(2, o.nrows()));
    }
    let tr = o.trace();
    if tr.norm() > TRACE_TOL * crate::linops::max_abs(o).max(1.0) {
        return Err(Error::NotTraceless(tr.norm()));
    }
    let [x, y, z] = paulis();
    let comp = |s: &CMatrix| (o * s).trace().re * 0.5;
    Ok(Vec3::new(comp(&x), comp(&y), comp(&z)))
}

impl BlochModel {
    pub fn new(a0: Vec3, h: VecFn, m: VecFn, m_dot: Option<VecFn>) -> Self {
        Self { a0, h, m, m_dot, fd_step: 1e-6 }
    }

    /// Map qubit operators and a pure state onto Bloch form; H is divided by ħ.
    pub fn from_operators(h: &TimeDepOperator, a: &TimeDepOperator, psi0: &CVector, hbar: f64) -> Result<Self> {
        if h.dim() != 2 || a.dim() != 2 || psi0.len() != 2 {
            return Err(Error::InvalidArgument("Bloch form needs qubit operators and state".into()));
        }
        pauli_components(&h.value(0.0))?;
        pauli_components(&a.value(0.0))?;
        let [x, y, z] = paulis();
        let a0 = Vec3::new(expectation(&x, psi0)?, expectation(&y, psi0)?, expectation(&z, psi0)?);
        let (hh, aa, ad) = (h.clone(), a.clone(), a.clone());
        let comps = |o: CMatrix| pauli_components(&o).unwrap_or_else(|_| Vec3::from_element(f64::NAN));
        let hf: VecFn = Arc::new(move |t| comps(hh.value(t)) / hbar);
        let mf: VecFn = Arc::new(move |t| comps(aa.value(t)));
        let md: VecFn = Arc::new(move |t| comps(ad.dvalue(t)));
        Ok(Self::new(a0, hf, mf, Some(md)))
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn h(&self, t: f64) -> Vec3 {
        (self.h)(t)
    }

    pub fn m(&self, t: f64) -> Vec3 {
        (self.m)(t)
    }

    /// ṁ, analytic when supplied, else a central difference.
    pub fn m_dot(&self, t: f64) -> Vec3 {
        match &self.m_dot {
            Some(f) => f(t),
            None => (self.m(t + self.fd_step) - self.m(t - self.fd_step)) / (2.0 * self.fd_step),
        }
    }

    pub fn point(&self, t: f64, a: Vec3) -> BlochPoint {
        BlochPoint { a, h: self.h(t), m: self.m(t), m_dot: self.m_dot(t) }
    }
}

/// Integrate ȧ = 2h×a with classic RK4 on the grid.
pub fn bloch_evolve(model: &BlochModel, grid: &TimeGrid) -> Result<Vec<Vec3>> {
    grid.validate()?;
    let n0 = model.a0.norm();
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized((n0 - 1.0).abs()));
    }
    let f = |t: f64, a: &Vec3| 2.0 * model.h(t).cross(a);
    let ts = grid.times();
    let mut out = Vec::with_capacity(ts.len());
    let mut a = model.a0;
    out.push(a);
    let mut drift: f64 = 0.0;
    for w in ts.windows(2) {
        let (t, dt) = (w[0], w[1] - w[0]);
        let k1 = f(t, &a);
        let k2 = f(t + 0.5 * dt, &(a + 0.5 * dt * k1));
        let k3 = f(t + 0.5 * dt, &(a + 0.5 * dt * k2));
        let k4 = f(t + dt, &(a + dt * k3));
        a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        drift = drift.max((a.norm() - 1.0).abs());
        out.push(a);
    }
    if drift > DRIFT_LIMIT {
        return Err(Error::BlochDrift(drift));
    }
    Ok(out)
}

/// Bloch data at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    pub a: Vec3,
    pub h: Vec3,
    pub m: Vec3,
    pub m_dot: Vec3,
}

impl BlochPoint {
    /// w = ṁ + 2m×h, the Bloch form of the velocity observable.
    pub fn velocity(&self) -> Vec3 {
        self.m_dot + 2.0 * self.m.cross(&self.h)
    }

    /// m⊥ = m − (a·m)a
    pub fn m_perp(&self) -> Vec3 {
        self.m - self.a.dot(&self.m) * self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochStats {
    pub mean: f64,
    pub sigma_sq: f64,
    pub v_mean: f64,
    pub v2_mean: f64,
}

pub fn bloch_stats(p: &BlochPoint) -> BlochStats {
    let w = p.velocity();
    let am = p.a.dot(&p.m);
    BlochStats { mean: am, sigma_sq: p.m.norm_squared() - am * am, v_mean: p.a.dot(&w), v2_mean: w.norm_squared() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricResidual {
    /// RHS − LHS, or RHS alone when degenerate.
    pub value: f64,
    pub lhs: Option<f64>,
    pub rhs: f64,
    pub degenerate: bool,
}

/// ‖w − (a·w)a‖² − (w·m⊥)²/‖m⊥‖², i.e. σ_{v_M}² − (dσ_M/dt)² for unit a.
pub fn geometric_residual(p: &BlochPoint) -> GeometricResidual {
    let w = p.velocity();
    let w_perp = w - p.a.dot(&w) * p.a;
    let rhs = w_perp.norm_squared();
    let mp = p.m_perp();
    let n2 = mp.norm_squared();
    if n2.sqrt() <= DEGENERATE_PERP {
        return GeometricResidual { value: rhs, lhs: None, rhs, degenerate: true };
    }
    let lhs = w.dot(&mp).powi(2) / n2;
    GeometricResidual { value: rhs - lhs, lhs: Some(lhs), rhs, degenerate: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanTest {
    pub member: bool,
    pub defect: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Least-squares test of ṁ ∈ span{m×h, a}.
pub fn tightness_span_test(p: &BlochPoint, tol: f64) -> SpanTest {
    let basis = Matrix3x2::from_columns(&[p.m.cross(&p.h), p.a]);
    let scale = basis.norm().max(1.0);
    let coeffs = basis
        .pseudo_inverse(1e-12 * scale)
        .map(|pinv| pinv * p.m_dot)
        .unwrap_or_else(|_| nalgebra::Vector2::zeros());
    let defect = (p.m_dot - basis * coeffs).norm();
    SpanTest { member: defect <= tol * p.m_dot.norm().max(1.0), defect, lambda: coeffs[0], mu: coeffs[1] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate, Method, PropagationConfig};
    use crate::hilbert::{pauli, qubit_plus, Axis};
    use crate::timefn::ScalarFn;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ex1_model(omega0: f64, nu0: f64) -> BlochModel {
        BlochModel::new(
            Vec3::x(),
            Arc::new(move |t| Vec3::new(0.0, 0.0, omega0 * (nu0 * t).cos())),
            Arc::new(|t| Vec3::new(t, 0.0, 0.0)),
            Some(Arc::new(|_| Vec3::new(1.0, 0.0, 0.0))),
        )
    }

    #[test]
    fn constant_field_rotation() {
        let w0 = 0.8;
        let model = BlochModel::new(
            Vec3::x(),
            Arc::new(move |_| Vec3::new(0.0, 0.0, w0)),
            Arc::new(|_| Vec3::x()),
            None,
        );
        let grid = TimeGrid::new(0.0, 4.0, 4000).unwrap();
        let traj = bloch_evolve(&model, &grid).unwrap();
        for (k, a) in traj.iter().enumerate() {
            let t = grid.time(k);
            // ȧ = 2h×a with h = w0 ẑ rotates x̂ towards +ŷ
            let expect = Vec3::new((2.0 * w0 * t).cos(), (2.0 * w0 * t).sin(), 0.0);
            assert!((a - expect).norm() <= 1e-10);
        }
    }

    #[test]
    fn parallel_field_is_static() {
        let n = Vec3::new(1.0, 2.0, -2.0) / 3.0;
        let model = BlochModel::new(n, Arc::new(move |t| n * (1.0 + t)), Arc::new(|_| Vec3::z()), None);
        let traj = bloch_evolve(&model, &TimeGrid::new(0.0, 2.0, 100).unwrap()).unwrap();
        assert!(traj.iter().all(|a| (a - n).norm() <= 1e-15));
    }

    #[test]
    fn drift_is_flagged() {
        let model = BlochModel::new(Vec3::x(), Arc::new(|_| Vec3::new(0.0, 0.0, 5.0)), Arc::new(|_| Vec3::x()), None);
        let coarse = bloch_evolve(&model, &TimeGrid::new(0.0, 10.0, 20).unwrap());
        assert!(matches!(coarse, Err(Error::BlochDrift(_))));
    }

    #[test]
    fn matrix_oracle_example1() {
        let grid = TimeGrid::new(0.0, 5.0, 1000).unwrap();
        let h = TimeDepOperator::scaled(ScalarFn::cos_wave(1.0, 1.0), pauli(Axis::Z)).unwrap();
        let tr = propagate(&h, &qubit_plus(), &grid, Method::ExactCommuting, &PropagationConfig::default()).unwrap();
        let traj = bloch_evolve(&ex1_model(1.0, 1.0), &grid).unwrap();
        let [x, y, z] = paulis();
        for (psi, a) in tr.states.iter().zip(&traj) {
            let from_state = Vec3::new(
                expectation(&x, psi).unwrap(),
                expectation(&y, psi).unwrap(),
                expectation(&z, psi).unwrap(),
            );
            assert!((from_state - a).norm() <= 1e-8);
        }
    }

    #[test]
    fn stats_closed_forms() {
        let model = ex1_model(1.0, 1.0);
        for &t in &[0.5f64, 1.0, 3.3] {
            let phi = t.sin();
            let a = Vec3::new((2.0 * phi).cos(), (2.0 * phi).sin(), 0.0);
            let s = bloch_stats(&model.point(t, a));
            assert_abs_diff_eq!(s.mean, t * (2.0 * phi).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(s.sigma_sq, (t * (2.0 * phi).sin()).powi(2), epsilon = 1e-12);
            assert_abs_diff_eq!(s.v2_mean, 1.0 + 4.0 * t * t * t.cos().powi(2), epsilon = 1e-12);
        }
        let ex2 = BlochModel::new(
            Vec3::x(),
            Arc::new(|t| Vec3::new(0.0, 0.0, t.cos())),
            Arc::new(|t| Vec3::new(t, 0.0, t)),
            Some(Arc::new(|_| Vec3::new(1.0, 0.0, 1.0))),
        );
        let t: f64 = 1.3;
        let s = bloch_stats(&ex2.point(t, Vec3::new(0.6, 0.8, 0.0)));
        assert_abs_diff_eq!(s.v2_mean, 2.0 + 4.0 * t * t * t.cos().powi(2), epsilon = 1e-12);

        let aligned = BlochPoint { a: Vec3::z(), h: Vec3::z() * 2.0, m: Vec3::z() * 3.0, m_dot: Vec3::zeros() };
        let s = bloch_stats(&aligned);
        assert_eq!(s.sigma_sq, 0.0);
        assert_eq!(s.v_mean, 0.0);
        assert_eq!(s.v2_mean, 0.0);
    }

    #[test]
    fn residual_tight_and_loose() {
        let t: f64 = 1.0;
        let phi = t.sin();
        let a = Vec3::new((2.0 * phi).cos(), (2.0 * phi).sin(), 0.0);
        let r1 = geometric_residual(&ex1_model(1.0, 1.0).point(t, a));
        assert!(r1.value.abs() <= 1e-9, "{r1:?}");
        let p2 = BlochPoint { a, h: Vec3::new(0.0, 0.0, t.cos()), m: Vec3::new(t, 0.0, t), m_dot: Vec3::new(1.0, 0.0, 1.0) };
        let r2 = geometric_residual(&p2);
        assert!(r2.value > 1e-3, "{r2:?}");
        let deg = geometric_residual(&BlochPoint { a: Vec3::x(), h: Vec3::z(), m: Vec3::x(), m_dot: Vec3::y() });
        assert!(deg.degenerate && deg.lhs.is_none() && deg.value == deg.rhs);
    }

    #[test]
    fn residual_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut v = || Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        for _ in 0..1000 {
            let a = v().normalize();
            let p = BlochPoint { a, h: v(), m: v(), m_dot: v() };
            assert!(geometric_residual(&p).value >= -1e-10);
        }
    }

    #[test]
    fn span_membership() {
        let model = ex1_model(1.0, 1.0);
        for &t in &[0.0f64, 0.7, 2.0, 4.4] {
            let phi = t.sin();
            let a = Vec3::new((2.0 * phi).cos(), (2.0 * phi).sin(), 0.0);
            assert!(tightness_span_test(&model.point(t, a), 1e-8).member, "t={t}");
        }
        let p = BlochPoint { a: Vec3::y(), h: Vec3::new(0.3, -1.0, 2.0), m: Vec3::new(1.0, 0.5, 0.0), m_dot: Vec3::zeros() };
        let p = BlochPoint { m_dot: p.m.cross(&p.h), ..p };
        let s = tightness_span_test(&p, 1e-8);
        assert!(s.member && s.defect <= 1e-15);
        assert_abs_diff_eq!(s.lambda, 1.0, epsilon = 1e-12);
        let t: f64 = 1.0;
        let a = Vec3::new((2.0 * t.sin()).cos(), (2.0 * t.sin()).sin(), 0.0);
        let p2 = BlochPoint { a, h: Vec3::new(0.0, 0.0, t.cos()), m: Vec3::new(t, 0.0, t), m_dot: Vec3::new(1.0, 0.0, 1.0) };
        let s2 = tightness_span_test(&p2, 1e-8);
        assert!(!s2.member && s2.defect > 1e-3);
    }

    #[test]
    fn operator_mapping() {
        let h = TimeDepOperator::scaled(ScalarFn::cos_wave(2.0, 1.0), pauli(Axis::Z)).unwrap();
        let a = TimeDepOperator::scaled(ScalarFn::T, pauli(Axis::X)).unwrap();
        let model = BlochModel::from_operators(&h, &a, &qubit_plus(), 2.0).unwrap();
        assert!((model.a0 - Vec3::x()).norm() <= 1e-15);
        assert!((model.h(0.0) - Vec3::new(0.0, 0.0, 1.0)).norm() <= 1e-15);
        assert!((model.m_dot(0.3) - Vec3::x()).norm() <= 1e-15);
        let shifted = TimeDepOperator::constant(crate::linops::identity(2)).unwrap();
        assert!(matches!(BlochModel::from_operators(&h, &shifted, &qubit_plus(), 1.0), Err(Error::NotTraceless(_))));
    }
}
