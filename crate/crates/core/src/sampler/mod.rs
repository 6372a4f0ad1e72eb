//! Haar-uniform pure states and Monte Carlo estimates over them.
//!
//! States are drawn by normalizing `n` complex amplitudes whose `2n` real
//! components are independent standard normals. Runs are split into
//! `workers` chunks; chunk `w` draws from a ChaCha20 generator seeded with
//! the run seed on stream `w`. Chunk results are merged in worker order, so
//! a run is bit-reproducible for a fixed `(seed, samples, workers)` triple
//! whichever backend executes the chunks.

mod histogram;
mod monomial;

pub use histogram::{mc_histogram, sample_fidelities, Histogram};
pub use monomial::{monomial_integral, MonomialExponents, MonomialIntegral, MONOMIAL_LIMIT};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Complex, ComplexMatrix};

/// Minimum sample count accepted by [`mc_moment`].
pub const MIN_MOMENT_SAMPLES: usize = 100;

/// Unit vector in `C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex>,
}

impl StateVector {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Draws one Haar-uniform state of dimension `n`.
pub fn sample_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    assert!(n >= 1, "state dimension must be positive");
    let mut amplitudes = vec![Complex::new(0.0, 0.0); n];
    fill_state(&mut amplitudes, rng);
    StateVector { amplitudes }
}

fn fill_state<R: Rng + ?Sized>(buf: &mut [Complex], rng: &mut R) {
    loop {
        let mut norm_sqr = 0.0;
        for z in buf.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z = Complex::new(re, im);
            norm_sqr += re * re + im * im;
        }
        // an all-zero draw has probability zero but would not normalize
        if norm_sqr > 0.0 {
            let inv = norm_sqr.sqrt().recip();
            buf.iter_mut().for_each(|z| *z *= inv);
            return;
        }
    }
}

/// How chunks of a run are executed. Results do not depend on the choice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Rayon,
}

/// Sampling configuration for a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    #[serde(skip, default)]
    pub backend: Backend,
}

impl McConfig {
    /// Single-worker configuration; the reproducible default.
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: 1,
            backend: Backend::default(),
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    fn chunk_sizes(&self) -> Vec<usize> {
        let w = self.workers.max(1);
        let base = self.samples / w;
        let extra = self.samples % w;
        (0..w).map(|i| base + usize::from(i < extra)).collect()
    }
}

/// A chunk's private stream of states.
pub struct StateStream {
    rng: ChaCha20Rng,
    remaining: usize,
    buf: Vec<Complex>,
}

impl StateStream {
    fn new(dim: usize, seed: u64, stream: u64, count: usize) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            remaining: count,
            buf: vec![Complex::new(0.0, 0.0); dim],
        }
    }

    /// Next state, or `None` once the chunk is exhausted.
    pub fn next_state(&mut self) -> Option<&[Complex]> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        fill_state(&mut self.buf, &mut self.rng);
        Some(&self.buf)
    }
}

/// Runs `f` once per worker chunk and returns the chunk results in worker order.
pub fn run_chunks<T, F>(dim: usize, cfg: &McConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(StateStream) -> T + Sync + Send,
{
    assert!(dim >= 1, "state dimension must be positive");
    let sizes = cfg.chunk_sizes();
    let make = |(w, &count): (usize, &usize)| f(StateStream::new(dim, cfg.seed, w as u64, count));
    match cfg.backend {
        Backend::Sequential => sizes.iter().enumerate().map(make).collect(),
        #[cfg(feature = "parallel")]
        Backend::Rayon => {
            use rayon::prelude::*;
            sizes.par_iter().enumerate().map(make).collect()
        }
    }
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Self { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.sample_variance() / self.count as f64).sqrt()
    }
}

/// Monte Carlo estimate of a Haar average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McEstimate {
    pub(crate) fn from_moments(acc: RunningMoments, cfg: &McConfig) -> Self {
        Self {
            mean: acc.mean(),
            std_error: acc.std_error(),
            samples: acc.count() as usize,
            seed: cfg.seed,
            workers: cfg.workers.max(1),
        }
    }

    /// True when `value` lies within `k` standard errors of the estimate.
    ///
    /// A zero standard error (deterministic integrand) falls back to an
    /// absolute tolerance of `1e-12`.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        let gap = (self.mean - value).abs();
        gap <= k * self.std_error || gap <= 1e-12
    }

    /// Signed distance from `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == value {
                0.0
            } else {
                f64::INFINITY.copysign(self.mean - value)
            }
        } else {
            (self.mean - value) / self.std_error
        }
    }
}

/// Estimates the Haar average of an arbitrary function of the state.
pub fn mc_estimate<F>(dim: usize, cfg: &McConfig, integrand: F) -> Result<McEstimate>
where
    F: Fn(&[Complex]) -> f64 + Sync + Send,
{
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "state dimension must be positive".into(),
        ));
    }
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    let chunks = run_chunks(dim, cfg, |mut stream| {
        let mut acc = RunningMoments::default();
        while let Some(psi) = stream.next_state() {
            acc.push(integrand(psi));
        }
        acc
    });
    let total = chunks
        .into_iter()
        .fold(RunningMoments::default(), RunningMoments::merge);
    Ok(McEstimate::from_moments(total, cfg))
}

/// Estimates `E |<psi|m|psi>|^(2 order)` for `order` 1 or 2.
pub fn mc_moment(m: &ComplexMatrix, order: u32, cfg: &McConfig) -> Result<McEstimate> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "moment order must be 1 or 2, got {order}"
        )));
    }
    if cfg.samples < MIN_MOMENT_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_MOMENT_SAMPLES} samples required, got {}",
            cfg.samples
        )));
    }
    mc_estimate(m.dim(), cfg, |psi| {
        let f = m.expectation(psi).norm_sqr();
        if order == 1 {
            f
        } else {
            f * f
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, polar, ComplexMatrix};
    use std::f64::consts::PI;

    #[test]
    fn single_amplitude_has_unit_modulus() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s = sample_state(1, &mut rng);
            assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn states_are_normalized() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for n in 1..8 {
            for _ in 0..200 {
                assert!((sample_state(n, &mut rng).norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qubit_population_mean_is_half() {
        let cfg = McConfig::new(1_000_000, 3).with_workers(8);
        let est = mc_estimate(2, &cfg, |psi| psi[0].norm_sqr()).unwrap();
        assert!(est.agrees_with(0.5, 3.0), "{est:?}");
    }

    #[test]
    fn fourth_power_population_matches_monomial() {
        let cfg = McConfig::new(1_000_000, 4).with_workers(8);
        let est = mc_estimate(4, &cfg, |psi| psi[0].norm_sqr().powi(2)).unwrap();
        let exact = monomial_integral(&MonomialExponents::padded(&[2], 4).unwrap(), 4)
            .unwrap()
            .value();
        assert_eq!(exact, 0.1);
        assert!(est.agrees_with(exact, 3.0), "{est:?}");
    }

    #[test]
    fn identity_moment_is_exactly_one() {
        for order in [1, 2] {
            let est =
                mc_moment(&ComplexMatrix::identity(3), order, &McConfig::new(1000, 9)).unwrap();
            assert!((est.mean - 1.0).abs() < 1e-12);
            assert!(est.std_error < 1e-12);
        }
    }

    #[test]
    fn reference_moment_near_028() {
        let m = ComplexMatrix::diag(&[polar(0.7, PI / 8.0), polar(0.8, 4.0 * PI / 5.0)]);
        let est = mc_moment(&m, 1, &McConfig::new(1_000_000, 42).with_workers(8)).unwrap();
        let exact = (0.49 + 0.64 + 0.56 * (27.0 * PI / 40.0).cos()) / 3.0;
        assert!(est.agrees_with(exact, 3.0), "{est:?} vs {exact}");
        assert!((est.mean - 0.28).abs() < 0.005);
    }

    #[test]
    fn projector_fourth_moment() {
        let m = ComplexMatrix::diag(&[c(1., 0.), c(0., 0.)]);
        let est = mc_moment(&m, 2, &McConfig::new(200_000, 5).with_workers(4)).unwrap();
        assert!(est.agrees_with(0.2, 3.0), "{est:?}");
    }

    #[test]
    fn moment_argument_checks() {
        let m = ComplexMatrix::identity(2);
        assert!(mc_moment(&m, 3, &McConfig::new(1000, 0)).is_err());
        assert!(mc_moment(&m, 1, &McConfig::new(99, 0)).is_err());
    }

    #[test]
    fn reproducible_per_seed_and_workers() {
        let m = ComplexMatrix::diag(&[c(0.3, 0.1), c(-0.2, 0.9)]);
        let a = mc_moment(&m, 2, &McConfig::new(5000, 11).with_workers(3)).unwrap();
        let b = mc_moment(&m, 2, &McConfig::new(5000, 11).with_workers(3)).unwrap();
        assert_eq!(a, b);
        let seq = mc_moment(
            &m,
            2,
            &McConfig::new(5000, 11)
                .with_workers(3)
                .with_backend(Backend::Sequential),
        )
        .unwrap();
        assert_eq!(a.mean.to_bits(), seq.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), seq.std_error.to_bits());
        let other = mc_moment(&m, 2, &McConfig::new(5000, 12).with_workers(3)).unwrap();
        assert_ne!(a.mean, other.mean);
    }

    #[test]
    fn chunk_sizes_cover_samples() {
        let cfg = McConfig::new(10, 0).with_workers(4);
        assert_eq!(cfg.chunk_sizes(), vec![3, 3, 2, 2]);
        assert_eq!(McConfig::new(5, 0).with_workers(0).chunk_sizes(), vec![5]);
    }

    #[test]
    fn running_moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = RunningMoments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (a, b) = xs.split_at(313);
        let mut ra = RunningMoments::default();
        let mut rb = RunningMoments::default();
        a.iter().for_each(|&x| ra.push(x));
        b.iter().for_each(|&x| rb.push(x));
        let merged = ra.merge(rb);
        assert!((merged.mean() - whole.mean()).abs() < 1e-12);
        assert!((merged.sample_variance() - whole.sample_variance()).abs() < 1e-10);
    }
}
