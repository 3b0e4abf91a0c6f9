//! Seeded random matrices and states.

use nalgebra::QR;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::{c, hermitize, trace, CMatrix, CVector, DensityMatrix, C64};

pub use rand_chacha::ChaCha8Rng;

/// Deterministic generator for item `stream` of a sweep seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix with unit-variance entries.
pub fn ginibre<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| gaussian(rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = QR::new(ginibre(d, rng));
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        let z = r[(k, k)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { c(1.0) };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// GUE-like Hermitian matrix.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    hermitize(&ginibre(d, rng))
}

/// Full-rank random state `G G† / Tr(G G†)`.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, rng);
    let m = &g * g.adjoint();
    let tr = trace(&m).re;
    DensityMatrix::normalized(m / c(tr)).expect("Ginibre product is a valid state")
}

pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let v = CVector::from_fn(d, |_, _| gaussian(rng));
    DensityMatrix::pure(&v).expect("Gaussian vector is nonzero almost surely")
}

/// Random state supported on the range of the projector `p`.
pub fn random_state_on<R: Rng + ?Sized>(p: &CMatrix, rng: &mut R) -> Option<DensityMatrix> {
    let rho = random_density_matrix(p.nrows(), rng);
    let m = p * rho.matrix() * p;
    let tr = trace(&m).re;
    if tr <= 1e-14 {
        return None;
    }
    DensityMatrix::normalized(m / c(tr)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{identity, max_abs};

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = seeded(1);
        let u = haar_unitary(6, &mut rng);
        assert!(max_abs(&(u.adjoint() * &u - identity(6))) < 1e-12);
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = random_hermitian(3, &mut stream_rng(4, 0));
        let b = random_hermitian(3, &mut stream_rng(4, 0));
        let x = random_hermitian(3, &mut stream_rng(4, 1));
        assert_eq!(a, b);
        assert_ne!(a, x);
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = seeded(2);
        assert_eq!(random_density_matrix(5, &mut rng).dim(), 5);
        assert_eq!(random_pure_state(5, &mut rng).dim(), 5);
    }
}
