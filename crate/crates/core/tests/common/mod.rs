#![allow(dead_code)]

use qfid::linalg::{c, Complex, ComplexMatrix, QubitSpectrum};
use rand::Rng;
use rand_distr::StandardNormal;

/// Unitary from Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<Complex> = (0..n)
            .map(|_| {
                c(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        for u in &cols {
            let proj: Complex = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
    }
    let mut entries = vec![c(0., 0.); n * n];
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            entries[i * n + j] = *z;
        }
    }
    ComplexMatrix::new(n, entries).unwrap()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// `E[prod_i <psi|A_i|psi>]` over Haar states, from
/// `E[rho^{(x)k}] = sum_sigma P_sigma / (n (n+1) ... (n+k-1))`: each permutation
/// contributes the product, over its cycles, of the trace of the matrices
/// along the cycle.
pub fn haar_product_expectation(ops: &[ComplexMatrix]) -> Complex {
    let k = ops.len();
    let n = ops[0].dim();
    let mut total = c(0., 0.);
    for sigma in permutations(k) {
        let mut seen = vec![false; k];
        let mut term = c(1., 0.);
        for start in 0..k {
            if seen[start] {
                continue;
            }
            let mut prod = ComplexMatrix::identity(n);
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                prod = prod.multiply(&ops[i]).unwrap();
                i = sigma[i];
            }
            term *= prod.trace();
        }
        total += term;
    }
    let norm: f64 = (0..k).map(|j| (n + j) as f64).product();
    total / norm
}

/// Independent route to the mean fidelity.
pub fn oracle_mean(m: &ComplexMatrix) -> f64 {
    haar_product_expectation(&[m.clone(), m.adjoint()]).re
}

/// Independent route to the second moment.
pub fn oracle_fourth(m: &ComplexMatrix) -> f64 {
    let d = m.adjoint();
    haar_product_expectation(&[m.clone(), m.clone(), d.clone(), d]).re
}

/// For a qubit normal map the input's weight `p = |c0|^2` on the first
/// eigenvector is uniform on [0, 1], and `f = |l1 + p (l0 - l1)|^2`.
/// Returns `P(f <= x)` from that geometry.
pub fn segment_cdf(s: &QubitSpectrum, x: f64) -> f64 {
    let (l0, l1) = (s.lambda0(), s.lambda1());
    let d = l0 - l1;
    let a = d.norm_sqr();
    let b = (l1.conj() * d).re;
    let cc = l1.norm_sqr() - x;
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return 0.0;
    }
    let r = disc.sqrt();
    let (lo, hi) = ((-b - r) / a, (-b + r) / a);
    (hi.min(1.0) - lo.max(0.0)).max(0.0)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
