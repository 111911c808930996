//! Seeded randomness: per-stream ChaCha generators, Gaussian sampling and
//! Haar-distributed unitaries and states.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c64, outer, ComplexMatrix, DensityOperator, HermitianOperator, C64};

pub type StreamRng = ChaCha8Rng;

/// Generator for `stream` under a master `seed`. Distinct streams are
/// independent, so sample `i` can always be drawn from stream `i` regardless
/// of how samples are distributed over workers.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian with independent standard normal real and imaginary parts.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c64(standard_normal(rng), standard_normal(rng))
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of `diag(R)`
/// moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(dim, dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random unit vector.
pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| complex_normal(rng));
    let n = v.norm();
    v.unscale(n)
}

pub fn random_pure_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> DensityOperator {
    let d = dims.iter().product();
    let v = random_pure_vector(d, rng);
    DensityOperator::trusted(HermitianOperator::hermitize(&outer(&v, &v), dims.to_vec()))
}

/// Random full-rank state from the Hilbert–Schmidt (Ginibre) ensemble.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(dim, dim, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::trusted(HermitianOperator::hermitize(&m.unscale(tr), vec![dim]))
}
