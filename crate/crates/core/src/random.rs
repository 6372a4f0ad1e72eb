//! Random matrices and spectra for property checks.

use rand::Rng;

use crate::linalg::{polar, Complex, ComplexMatrix, QubitSpectrum};

/// Uniform point in the closed unit disc.
pub fn unit_disc<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    let r = rng.random::<f64>().sqrt();
    polar(r, rng.random::<f64>() * std::f64::consts::TAU)
}

/// Matrix with independent entries uniform in the unit disc.
pub fn unit_disc_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let entries = (0..n * n).map(|_| unit_disc(rng)).collect();
    ComplexMatrix::new(n, entries).expect("finite entries")
}

/// `(X + X^dagger) / 2` for a unit-disc matrix `X`.
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let x = unit_disc_matrix(n, rng);
    x.add(&x.adjoint())
        .expect("same dim")
        .scale(Complex::new(0.5, 0.0))
}

/// `(X - X^dagger) / 2` for a unit-disc matrix `X`.
pub fn anti_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let x = unit_disc_matrix(n, rng);
    x.sub(&x.adjoint())
        .expect("same dim")
        .scale(Complex::new(0.5, 0.0))
}

/// Two eigenvalues uniform in the unit disc, resampled until non-degenerate.
pub fn disc_spectrum<R: Rng + ?Sized>(rng: &mut R) -> QubitSpectrum {
    loop {
        let (a, b) = (unit_disc(rng), unit_disc(rng));
        if (a - b).norm() > 1e-6 {
            return QubitSpectrum::new(a, b).expect("finite");
        }
    }
}
