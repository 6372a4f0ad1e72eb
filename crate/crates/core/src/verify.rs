//! Cross-checks between the closed forms and their independent oracles.
//!
//! `quick` finishes in a few seconds; `full` adds the Fig.-1-scale histogram
//! regeneration and the acceptance-size Monte Carlo comparisons.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{polar, ComplexMatrix, QubitSpectrum};
use crate::moments::{avg_fidelity, fourth_moment_general, fourth_moment_hermitian};
use crate::qubit_dist::{compare_histogram, normal_pdf};
use crate::random;
use crate::sampler::{mc_histogram, mc_moment, monomial_integral, McConfig, MonomialExponents};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub passed: bool,
    pub seed: u64,
    pub workers: usize,
    pub checks: Vec<CheckResult>,
}

/// Reference eigenvalues `0.7 e^{i pi/8}`, `0.8 e^{i 4 pi/5}`.
pub fn reference_spectrum() -> QubitSpectrum {
    QubitSpectrum::new(polar(0.7, PI / 8.0), polar(0.8, 4.0 * PI / 5.0)).expect("finite")
}

pub type FourthMomentFn = fn(&ComplexMatrix) -> f64;

pub struct Verifier {
    level: Level,
    seed: u64,
    workers: usize,
    fourth_moment: FourthMomentFn,
}

impl Verifier {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            seed: 42,
            workers: 1,
            fourth_moment: fourth_moment_general,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// Replaces the general fourth-moment routine under test (fault injection).
    pub fn with_fourth_moment(mut self, f: FourthMomentFn) -> Self {
        self.fourth_moment = f;
        self
    }

    pub fn run(&self) -> VerifyReport {
        let mut checks = vec![
            timed("reference_mean", || self.reference_mean()),
            timed("monomial_oracle", || self.monomial_oracle()),
            timed("hermitian_collapse", || self.hermitian_collapse()),
            timed("pdf_moment_consistency", || self.pdf_moment_consistency()),
            timed("mc_vs_closed_form", || self.mc_vs_closed_form()),
            timed("histogram_agreement", || self.histogram_agreement()),
        ];
        if self.level == Level::Full {
            checks.push(timed("reference_regeneration", || {
                self.reference_regeneration()
            }));
        }
        VerifyReport {
            level: self.level,
            passed: checks.iter().all(|c| c.passed),
            seed: self.seed,
            workers: self.workers,
            checks,
        }
    }

    fn cfg(&self, samples: usize, offset: u64) -> McConfig {
        McConfig::new(samples, self.seed.wrapping_add(offset)).with_workers(self.workers)
    }

    fn reference_mean(&self) -> (bool, String) {
        let m = reference_spectrum().as_diag();
        let v = avg_fidelity(&m);
        let exact = (0.49 + 0.64 + 0.56 * (4.0 * PI / 5.0 - PI / 8.0).cos()) / 3.0;
        let ok = format!("{v:.2}") == "0.28" && (v - exact).abs() <= 1e-12;
        (ok, format!("mean = {v:.15}"))
    }

    fn monomial_oracle(&self) -> (bool, String) {
        let patterns: [(&[u32], u64); 5] = [
            (&[4], 24),
            (&[2, 2], 4),
            (&[3, 1], 6),
            (&[2, 1, 1], 2),
            (&[1, 1, 1, 1], 1),
        ];
        let mut bad = Vec::new();
        for n in [4usize, 6] {
            let den = (n * (n + 1) * (n + 2) * (n + 3)) as u64;
            for (lead, num) in patterns {
                let exact = MonomialExponents::padded(lead, n)
                    .and_then(|k| monomial_integral(&k, n))
                    .map(|v| v.equals_ratio(num, den))
                    .unwrap_or(false);
                if !exact {
                    bad.push(format!("n={n} {lead:?}"));
                }
            }
        }
        (
            bad.is_empty(),
            if bad.is_empty() {
                "10 patterns exact".into()
            } else {
                format!("mismatch: {bad:?}")
            },
        )
    }

    fn hermitian_collapse(&self) -> (bool, String) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37);
        let count = if self.level == Level::Full { 50 } else { 10 };
        let mut worst: f64 = 0.0;
        for i in 0..2 * count {
            let n = 2 + i % 5;
            let m = if i < count {
                random::hermitian(n, &mut rng)
            } else {
                random::anti_hermitian(n, &mut rng)
            };
            let a = fourth_moment_hermitian(&m).expect("hermitian by construction");
            let b = (self.fourth_moment)(&m);
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
        (worst <= 1e-12, format!("max relative gap {worst:.3e}"))
    }

    fn pdf_moment_consistency(&self) -> (bool, String) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x51ec);
        let mut worst_moment: f64 = 0.0;
        let mut worst_mass: f64 = 0.0;
        for _ in 0..50 {
            let s = random::disc_spectrum(&mut rng);
            let d = match normal_pdf(&s) {
                Ok(d) => d,
                Err(e) => return (false, format!("{e}")),
            };
            let q = d.quadrature_moments();
            let m = s.as_diag();
            worst_moment = worst_moment
                .max((q.mean - avg_fidelity(&m)).abs())
                .max((q.second_moment.unwrap_or(f64::NAN) - (self.fourth_moment)(&m)).abs());
            worst_mass = worst_mass.max((d.total_mass() - 1.0).abs());
        }
        let ok = worst_moment <= 1e-9 && worst_mass <= 1e-10;
        (
            ok,
            format!("max moment gap {worst_moment:.3e}, max mass gap {worst_mass:.3e}"),
        )
    }

    fn mc_vs_closed_form(&self) -> (bool, String) {
        let (per_n, samples) = if self.level == Level::Full {
            (20, 100_000)
        } else {
            (5, 20_000)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0xabcd);
        let mut total = 0;
        let mut agree = 0;
        let mut worst_z: f64 = 0.0;
        for n in 2..=5 {
            for j in 0..per_n {
                let m = random::unit_disc_matrix(n, &mut rng);
                let offset = (n * 1000 + j) as u64;
                for (order, exact) in [(1, avg_fidelity(&m)), (2, (self.fourth_moment)(&m))] {
                    let est = match mc_moment(&m, order, &self.cfg(samples, offset)) {
                        Ok(e) => e,
                        Err(e) => return (false, e.to_string()),
                    };
                    total += 1;
                    worst_z = worst_z.max(est.z_score(exact).abs());
                    if est.agrees_with(exact, 4.0) {
                        agree += 1;
                    }
                }
            }
        }
        let ok = agree as f64 >= 0.95 * total as f64;
        (
            ok,
            format!("{agree}/{total} within 4 sigma, worst |z| = {worst_z:.2}"),
        )
    }

    fn histogram_agreement(&self) -> (bool, String) {
        let d = normal_pdf(&reference_spectrum()).expect("non-degenerate");
        let h = match mc_histogram(
            &d.spectrum.as_diag(),
            50,
            &self.cfg(100_000, 7),
            Some(d.support()),
        ) {
            Ok(h) => h,
            Err(e) => return (false, e.to_string()),
        };
        match compare_histogram(&d, &h) {
            Ok(c) => (
                c.chi_square_per_dof() < 1.5,
                format!(
                    "chi2/dof = {:.3} over {} bins",
                    c.chi_square_per_dof(),
                    c.bins_compared
                ),
            ),
            Err(e) => (false, e.to_string()),
        }
    }

    fn reference_regeneration(&self) -> (bool, String) {
        let d = normal_pdf(&reference_spectrum()).expect("non-degenerate");
        let h = match mc_histogram(
            &d.spectrum.as_diag(),
            50,
            &self.cfg(1_000_000, 0),
            Some(d.support()),
        ) {
            Ok(h) => h,
            Err(e) => return (false, e.to_string()),
        };
        match compare_histogram(&d, &h) {
            Ok(c) => (
                c.chi_square_per_dof() < 1.5 && c.sup_norm_density_gap < 0.05,
                format!(
                    "chi2/dof = {:.3}, sup gap = {:.4}",
                    c.chi_square_per_dof(),
                    c.sup_norm_density_gap
                ),
            ),
            Err(e) => (false, e.to_string()),
        }
    }
}

fn timed(name: &str, check: impl FnOnce() -> (bool, String)) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = check();
    CheckResult {
        name: name.into(),
        passed,
        detail,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}
