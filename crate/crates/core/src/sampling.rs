//! Seeded random draws for property suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::TimeDepOperator;
use crate::error::Result;
use crate::hilbert::paulis;
use crate::linops::{c, r, CMatrix, CVector};
use crate::timefn::ScalarFn;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

/// (G + G†)/2 with complex Gaussian G, scaled by `scale`.
pub fn random_hermitian(rng: &mut SeededRng, dim: usize, scale: f64) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| c(gauss(rng), gauss(rng)));
    (&g + g.adjoint()) * r(0.5 * scale)
}

/// Haar-distributed pure state.
pub fn random_state(rng: &mut SeededRng, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| c(gauss(rng), gauss(rng)));
    let n = v.norm();
    v / r(n)
}

pub fn random_unit3(rng: &mut SeededRng) -> [f64; 3] {
    loop {
        let v = [gauss(rng), gauss(rng), gauss(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub fn dot_pauli(n: [f64; 3]) -> CMatrix {
    let [x, y, z] = paulis();
    x * r(n[0]) + y * r(n[1]) + z * r(n[2])
}

/// c0 + c1·cos(ν t) + c2·sin(μ t)
pub fn random_coefficient(rng: &mut SeededRng) -> ScalarFn {
    let c0 = rng.gen_range(-1.0..1.0);
    let c1 = rng.gen_range(-2.0..2.0);
    let c2 = rng.gen_range(-2.0..2.0);
    let nu = rng.gen_range(0.2..3.0);
    let mu = rng.gen_range(0.2..3.0);
    ScalarFn::Const(c0)
        .add(ScalarFn::cos_wave(c1, nu))
        .add(ScalarFn::sin(ScalarFn::T.scale(mu)).scale(c2))
}

/// f(t)(n̂·σ) + g(t)(k̂·σ) with random unit axes and coefficients.
pub fn random_qubit_hamiltonian(rng: &mut SeededRng) -> Result<TimeDepOperator> {
    let (n, k) = (random_unit3(rng), random_unit3(rng));
    let (f, g) = (random_coefficient(rng), random_coefficient(rng));
    TimeDepOperator::from_terms(vec![(f, dot_pauli(n)), (g, dot_pauli(k))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{hermitian_defect, norm_defect};

    #[test]
    fn draws_are_valid_and_reproducible() {
        let mut a = seeded(3);
        let mut b = seeded(3);
        let h = random_hermitian(&mut a, 4, 2.0);
        assert_eq!(h, random_hermitian(&mut b, 4, 2.0));
        assert_eq!(hermitian_defect(&h), 0.0);
        assert!(norm_defect(&random_state(&mut a, 8)) <= 1e-15);
        let op = random_qubit_hamiltonian(&mut a).unwrap();
        assert_eq!(op.dim(), 2);
        assert!(op.has_analytic_derivative());
    }
}
