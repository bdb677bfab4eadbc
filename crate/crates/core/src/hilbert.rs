//! Operator and state factories: Pauli matrices, qubit states, truncated Fock
//! space ladder, number and quadrature operators, displacement and squeeze
//! operators, and truncation diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{antiherm_expm, c, norm_defect, r, CMatrix, CVector};
use crate::tol::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown Pauli axis `{other}`"))),
        }
    }
}

pub fn pauli(axis: Axis) -> CMatrix {
    let z = r(0.0);
    let o = r(1.0);
    let entries = match axis {
        Axis::X => [z, o, o, z],
        Axis::Y => [z, c(0.0, -1.0), c(0.0, 1.0), z],
        Axis::Z => [o, z, z, r(-1.0)],
    };
    CMatrix::from_row_slice(2, 2, &entries)
}

/// The three Pauli matrices in x, y, z order.
pub fn paulis() -> [CMatrix; 3] {
    [pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)]
}

pub fn qubit_basis(k: usize) -> Result<CVector> {
    if k > 1 {
        return Err(Error::InvalidArgument(format!("qubit basis index {k} not in {{0, 1}}")));
    }
    let mut v = CVector::zeros(2);
    v[k] = r(1.0);
    Ok(v)
}

/// (|0⟩ + |1⟩)/√2
pub fn qubit_plus() -> CVector {
    CVector::from_element(2, r(std::f64::consts::FRAC_1_SQRT_2))
}

/// Truncated oscillator space spanned by |0⟩ … |s⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockSpace {
    pub s: usize,
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
}

impl FockSpace {
    pub fn new(s: usize) -> Result<Self> {
        Self::with_constants(s, 1.0, 1.0, 1.0)
    }

    pub fn with_constants(s: usize, hbar: f64, mass: f64, omega: f64) -> Result<Self> {
        if s < 1 {
            return Err(Error::InvalidArgument("Fock cutoff s must be at least 1".into()));
        }
        for (name, v) in [("hbar", hbar), ("mass", mass), ("omega", omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { s, hbar, mass, omega })
    }

    pub fn dim(&self) -> usize {
        self.s + 1
    }
}

pub fn fock_state(space: &FockSpace, n: usize) -> Result<CVector> {
    if n > space.s {
        return Err(Error::InvalidArgument(format!("|{n}⟩ outside cutoff {}", space.s)));
    }
    let mut v = CVector::zeros(space.dim());
    v[n] = r(1.0);
    Ok(v)
}

/// (a, a†) with a|n⟩ = √n |n−1⟩.
pub fn ladder(space: &FockSpace) -> (CMatrix, CMatrix) {
    let d = space.dim();
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = r((n as f64).sqrt());
    }
    let ad = a.adjoint();
    (a, ad)
}

pub fn number_op(space: &FockSpace) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(space.dim(), (0..space.dim()).map(|n| r(n as f64))))
}

/// x = √(ħ/2mω)(a + a†), p = i√(mωħ/2)(a† − a).
pub fn quadratures(space: &FockSpace) -> (CMatrix, CMatrix) {
    let (a, ad) = ladder(space);
    let FockSpace { hbar, mass, omega, .. } = *space;
    let x = (&a + &ad) * r((hbar / (2.0 * mass * omega)).sqrt());
    let p = (&ad - &a) * c(0.0, (mass * omega * hbar / 2.0).sqrt());
    (x, p)
}

/// D(α) = exp(α a† − α* a)
pub fn displacement(space: &FockSpace, alpha: Complex64) -> Result<CMatrix> {
    let (a, ad) = ladder(space);
    antiherm_expm(&(ad * alpha - a * alpha.conj()))
}

/// S(z) = exp((z*/2) a² − (z/2) a†²)
pub fn squeeze(space: &FockSpace, z: Complex64) -> Result<CMatrix> {
    let (a, ad) = ladder(space);
    let g = (&a * &a) * (z.conj() * 0.5) - (&ad * &ad) * (z * 0.5);
    antiherm_expm(&g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedCoherentParams {
    pub alpha: Complex64,
    pub z: Complex64,
}

/// A prepared state with its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub state: CVector,
    pub norm_defect: f64,
    /// Probability carried by the two highest Fock levels.
    pub tail_mass: f64,
}

/// D(α) S(z) |0⟩ on the truncated space.
pub fn displaced_squeezed_vacuum(
    space: &FockSpace,
    params: &SqueezedCoherentParams,
    tol: &Tolerances,
) -> Result<PreparedState> {
    for v in [params.alpha.re, params.alpha.im, params.z.re, params.z.im] {
        if !v.is_finite() {
            return Err(Error::NonFinite("squeezed coherent parameters"));
        }
    }
    let vac = fock_state(space, 0)?;
    let state = displacement(space, params.alpha)? * (squeeze(space, params.z)? * vac);
    let defect = norm_defect(&state);
    if defect > tol.norm {
        return Err(Error::NotNormalized(defect));
    }
    Ok(PreparedState { tail_mass: tail_mass(&state, 2), state, norm_defect: defect })
}

/// Probability in the top `levels` basis states.
pub fn tail_mass(state: &CVector, levels: usize) -> f64 {
    let n = state.len();
    state.iter().skip(n.saturating_sub(levels)).map(|z| z.norm_sqr()).sum()
}

/// Mean photon number of the Poisson weights |α|^{2n}/n! restricted to n ≤ s.
pub fn truncated_mean_photon(abs_alpha_sq: f64, s: usize) -> Result<f64> {
    if !(abs_alpha_sq.is_finite() && abs_alpha_sq >= 0.0) {
        return Err(Error::InvalidArgument(format!("|α|² must be non-negative, got {abs_alpha_sq}")));
    }
    if abs_alpha_sq == 0.0 {
        return Ok(0.0);
    }
    let mut term = 1.0;
    let mut num = 0.0;
    let mut den = 1.0;
    for n in 1..=s {
        term *= abs_alpha_sq / n as f64;
        num += n as f64 * term;
        den += term;
        if den > 1e200 {
            term /= den;
            num /= den;
            den = 1.0;
        }
    }
    Ok(num / den)
}

/// ||α|² − ⟨N⟩_trunc|
pub fn truncation_error(abs_alpha_sq: f64, s: usize) -> Result<f64> {
    Ok((abs_alpha_sq - truncated_mean_photon(abs_alpha_sq, s)?).abs())
}

/// Smallest s with truncation error ≤ eps, searched from ⌈|α|² + 5|α|⌉.
pub fn recommended_dim(abs_alpha_sq: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let seed = (abs_alpha_sq + 5.0 * abs_alpha_sq.sqrt()).ceil().max(1.0) as usize;
    let mut s = seed;
    if truncation_error(abs_alpha_sq, s)? <= eps {
        while s > 1 && truncation_error(abs_alpha_sq, s - 1)? <= eps {
            s -= 1;
        }
        return Ok(s);
    }
    let cap = seed * 4 + 200;
    while truncation_error(abs_alpha_sq, s)? > eps {
        s += 1;
        if s > cap {
            return Err(Error::InvalidArgument(format!("no cutoff below {cap} reaches eps {eps:e}")));
        }
    }
    Ok(s)
}
