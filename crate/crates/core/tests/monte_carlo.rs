mod common;

use common::random_unitary;
use qfid::linalg::{c, polar, Complex, ComplexMatrix, QubitSpectrum, SubspaceSelector};
use qfid::moments::{
    avg_fidelity, conditional_fidelity, fourth_moment_general, kraus_avg_fidelity,
    sa_decomposition_check, subspace_avg_fidelity, GateSpec, KrausMap,
};
use qfid::qubit_dist::{compare_histogram, normal_pdf};
use qfid::random;
use qfid::sampler::{
    mc_estimate, mc_histogram, mc_moment, monomial_integral, Histogram, MonomialExponents,
};
use qfid::McConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn cfg(samples: usize, seed: u64) -> McConfig {
    McConfig::new(samples, seed).with_workers(8)
}

fn embed(psi: &[Complex], sel: &SubspaceSelector, n: usize) -> Vec<Complex> {
    let mut full = vec![c(0., 0.); n];
    for (&i, &z) in sel.indices().iter().zip(psi) {
        full[i] = z;
    }
    full
}

fn inner(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn sampled_states_are_unitarily_invariant() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for n in [2, 3, 5] {
        let v: Vec<Complex> = random_unitary(n, &mut r).apply(&{
            let mut e = vec![c(0., 0.); n];
            e[0] = c(1., 0.);
            e
        });
        let nf = n as f64;
        let second =
            mc_estimate(n, &cfg(100_000, n as u64), |psi| inner(&v, psi).norm_sqr()).unwrap();
        assert!(second.agrees_with(1.0 / nf, 4.0), "n={n}: {second:?}");
        let fourth = mc_estimate(n, &cfg(100_000, 100 + n as u64), |psi| {
            inner(&v, psi).norm_sqr().powi(2)
        })
        .unwrap();
        assert!(
            fourth.agrees_with(2.0 / (nf * (nf + 1.0)), 4.0),
            "n={n}: {fourth:?}"
        );
    }
}

#[test]
fn monomial_integrals_match_sampling() {
    let patterns: [&[u32]; 5] = [&[4], &[3, 1], &[2, 2], &[2, 1, 1], &[1, 1, 1, 1]];
    for n in [4, 6] {
        for (k, pattern) in patterns.iter().enumerate() {
            let exps = MonomialExponents::padded(pattern, n).unwrap();
            let exact = monomial_integral(&exps, n).unwrap().value();
            let e = exps.exponents().to_vec();
            let est = mc_estimate(n, &cfg(200_000, 7 * n as u64 + k as u64), move |psi| {
                psi.iter()
                    .zip(&e)
                    .map(|(z, &k)| z.norm_sqr().powi(k as i32))
                    .product()
            })
            .unwrap();
            assert!(
                est.agrees_with(exact, 4.0),
                "n={n} {pattern:?}: {est:?} vs {exact}"
            );
        }
    }
}

#[test]
fn closed_form_moments_match_sampling() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut within = 0;
    let mut total = 0;
    for n in 2..=5 {
        for i in 0..5 {
            let m = random::unit_disc_matrix(n, &mut r);
            let seed = 1000 * n as u64 + i;
            for (order, exact) in [(1, avg_fidelity(&m)), (2, fourth_moment_general(&m))] {
                let est = mc_moment(&m, order, &cfg(50_000, seed + 500 * order as u64)).unwrap();
                total += 1;
                if est.agrees_with(exact, 4.0) {
                    within += 1;
                }
            }
        }
    }
    assert!(within as f64 >= 0.95 * total as f64, "{within}/{total}");
}

fn leaky(a: f64, chi: f64) -> ComplexMatrix {
    let alpha = polar(a, chi);
    let g = c((1.0 - a * a).sqrt(), 0.0);
    let z = c(0., 0.);
    ComplexMatrix::from_rows(&[
        vec![c(1., 0.), z, z],
        vec![z, alpha, g],
        vec![z, g, -alpha.conj()],
    ])
    .unwrap()
}

/// `E[|<psi|U0^dagger P U|psi>|^2] = F E[<psi|U^dagger P U|psi>]` over subspace inputs,
/// so `num - F den` has zero mean.
#[test]
fn conditional_fidelity_matches_post_selected_sampling() {
    let sel = SubspaceSelector::new(vec![0, 1]).unwrap();
    let p = sel.projector(3).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let mut cases = vec![(leaky(0.5, 0.0), ComplexMatrix::identity(3))];
    for _ in 0..4 {
        let target_block = random_unitary(2, &mut r);
        let mut t = ComplexMatrix::identity(3).entries().to_vec();
        for i in 0..2 {
            for j in 0..2 {
                t[i * 3 + j] = target_block.get(i, j);
            }
        }
        cases.push((random_unitary(3, &mut r), ComplexMatrix::new(3, t).unwrap()));
    }
    for (k, (u, u0)) in cases.into_iter().enumerate() {
        let g = GateSpec::new(u0.clone(), u.clone(), Some(sel.clone())).unwrap();
        let f = conditional_fidelity(&g).unwrap();
        let pu = p.multiply(&u).unwrap();
        let est = mc_estimate(2, &cfg(100_000, 300 + k as u64), |psi| {
            let full = embed(psi, &sel, 3);
            let out = pu.apply(&full);
            let target = u0.apply(&full);
            inner(&target, &out).norm_sqr() - f * inner(&out, &out).re
        })
        .unwrap();
        assert!(est.agrees_with(0.0, 4.0), "case {k}: {est:?}");
    }
}

#[test]
fn subspace_average_matches_sampling() {
    let sel = SubspaceSelector::new(vec![0, 2]).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(31);
    for k in 0..3 {
        let actual = random::unit_disc_matrix(3, &mut r);
        let g = GateSpec::new(
            ComplexMatrix::identity(3),
            actual.clone(),
            Some(sel.clone()),
        )
        .unwrap();
        let mean = subspace_avg_fidelity(&g).unwrap().mean;
        let est = mc_estimate(2, &cfg(100_000, 400 + k), |psi| {
            let full = embed(psi, &sel, 3);
            inner(&full, &actual.apply(&full)).norm_sqr()
        })
        .unwrap();
        assert!(est.agrees_with(mean, 4.0), "{est:?} vs {mean}");
    }
}

#[test]
fn kraus_average_matches_sampling() {
    let mut r = ChaCha8Rng::seed_from_u64(41);
    for k in 0..3 {
        let n = 3;
        // Stinespring: columns of a random isometry split into three Kraus blocks
        let big = random_unitary(3 * n, &mut r);
        let ops: Vec<ComplexMatrix> = (0..3)
            .map(|b| {
                let mut e = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        e.push(big.get(b * n + i, j));
                    }
                }
                ComplexMatrix::new(n, e).unwrap()
            })
            .collect();
        let map = KrausMap::new(ops.clone()).unwrap();
        assert!(map.is_trace_preserving());
        let target = random_unitary(n, &mut r);
        let exact = kraus_avg_fidelity(&map, &target).unwrap();
        let est = mc_estimate(n, &cfg(100_000, 500 + k), |psi| {
            let t = target.apply(psi);
            ops.iter()
                .map(|g| inner(&t, &g.apply(psi)).norm_sqr())
                .sum()
        })
        .unwrap();
        assert!(est.agrees_with(exact, 4.0), "{est:?} vs {exact}");
    }
}

#[test]
fn hermitian_anti_hermitian_split_holds_per_sample() {
    let mut r = ChaCha8Rng::seed_from_u64(51);
    for n in [2, 3, 4] {
        let m = random::unit_disc_matrix(n, &mut r);
        let rep = sa_decomposition_check(&m, &cfg(20_000, n as u64)).unwrap();
        assert!(rep.max_pointwise_residual < 1e-12);
        assert!((rep.recombined_mean - rep.full.mean).abs() < 1e-12);
        assert!(rep.full.agrees_with(fourth_moment_general(&m), 4.0));
    }
}

fn reference() -> QubitSpectrum {
    QubitSpectrum::new(polar(0.7, PI / 8.0), polar(0.8, 4.0 * PI / 5.0)).unwrap()
}

#[test]
fn inverse_cdf_samples_fit_their_own_density() {
    let d = normal_pdf(&reference()).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(61);
    let values: Vec<f64> = (0..200_000)
        .map(|_| d.quantile(r.random::<f64>()))
        .collect();
    let h = Histogram::from_values(&values, 50, Some(d.support())).unwrap();
    let cmp = compare_histogram(&d, &h).unwrap();
    assert!(cmp.chi_square_per_dof() < 1.5, "{cmp:?}");
    assert!(cmp.max_abs_z < 5.0, "{cmp:?}");
}

#[test]
fn wrong_spectrum_is_rejected() {
    let truth = reference();
    let wrong = QubitSpectrum::new(polar(0.7, PI / 4.0), truth.lambda1()).unwrap();
    let m = truth.as_diag();
    let dw = normal_pdf(&wrong).unwrap();
    let h = mc_histogram(&m, 50, &cfg(100_000, 71), Some(dw.support())).unwrap();
    let cmp = compare_histogram(&dw, &h).unwrap();
    assert!(cmp.chi_square_per_dof() > 3.0, "{cmp:?}");
}

#[test]
fn sampled_histograms_fit_random_spectra() {
    let mut r = ChaCha8Rng::seed_from_u64(81);
    for k in 0..10 {
        let s = random::disc_spectrum(&mut r);
        let d = normal_pdf(&s).unwrap();
        // conjugate by a random unitary so sampling sees a non-diagonal matrix
        let u = random_unitary(2, &mut r);
        let m = u
            .multiply(&s.as_diag())
            .unwrap()
            .multiply(&u.adjoint())
            .unwrap();
        let h = mc_histogram(&m, 50, &cfg(100_000, 900 + k), Some(d.support())).unwrap();
        let cmp = compare_histogram(&d, &h).unwrap();
        assert!(cmp.chi_square_per_dof() < 1.5, "spectrum {k}: {cmp:?}");
        assert!(cmp.max_abs_z < 5.0, "spectrum {k}: {cmp:?}");
    }
}

#[test]
fn depolarizing_channel_sampled() {
    let p: f64 = 0.3;
    let x = ComplexMatrix::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]])
        .unwrap();
    let y = ComplexMatrix::from_rows(&[vec![c(0., 0.), c(0., -1.)], vec![c(0., 1.), c(0., 0.)]])
        .unwrap();
    let z = ComplexMatrix::diag(&[c(1., 0.), c(-1., 0.)]);
    let ops = vec![
        ComplexMatrix::identity(2).scale(c((1.0 - 0.75 * p).sqrt(), 0.)),
        x.scale(c((p / 4.0).sqrt(), 0.)),
        y.scale(c((p / 4.0).sqrt(), 0.)),
        z.scale(c((p / 4.0).sqrt(), 0.)),
    ];
    let map = KrausMap::new(ops.clone()).unwrap();
    let exact = kraus_avg_fidelity(&map, &ComplexMatrix::identity(2)).unwrap();
    assert!((exact - (1.0 - p / 2.0)).abs() < 1e-14);
    let est = mc_estimate(2, &cfg(50_000, 3), |psi| {
        ops.iter().map(|g| g.expectation(psi).norm_sqr()).sum()
    })
    .unwrap();
    assert!(est.agrees_with(exact, 4.0));
}
