use serde::{Deserialize, Serialize};

use super::{run_chunks, McConfig};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Equal-width histogram of fidelities on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub samples: u64,
}

impl Histogram {
    /// Bins `values` on `range`, or on their observed `[min, max]` when `range` is `None`.
    ///
    /// Values outside the range land in the nearest edge bin.
    pub fn from_values(values: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 bins, got {bins}"
            )));
        }
        let (lo, hi) = match range {
            Some((lo, hi)) if lo.is_finite() && hi.is_finite() && hi > lo => (lo, hi),
            Some(r) => {
                return Err(Error::InvalidArgument(format!(
                    "invalid histogram range {r:?}"
                )))
            }
            None => observed_range(values)?,
        };
        let mut h = Self {
            lo,
            hi,
            counts: vec![0; bins],
            samples: 0,
        };
        for &v in values {
            h.insert(v);
        }
        Ok(h)
    }

    fn insert(&mut self, v: f64) {
        let bins = self.counts.len();
        let t = (v - self.lo) / (self.hi - self.lo) * bins as f64;
        let idx = if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(bins - 1)
        };
        self.counts[idx] += 1;
        self.samples += 1;
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        let lo = self.lo + w * i as f64;
        let hi = if i + 1 == self.counts.len() {
            self.hi
        } else {
            self.lo + w * (i + 1) as f64
        };
        (lo, hi)
    }

    /// `count / (samples * bin_width)`.
    pub fn density(&self, i: usize) -> f64 {
        self.counts[i] as f64 / (self.samples as f64 * self.bin_width())
    }

    /// CSV with header `bin_lo,bin_hi,count,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count,density\n");
        for i in 0..self.bins() {
            let (lo, hi) = self.bin_edges(i);
            out.push_str(&format!(
                "{lo},{hi},{},{}\n",
                self.counts[i],
                self.density(i)
            ));
        }
        out
    }
}

fn observed_range(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot bin an empty sample".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 1e-12 * hi.abs().max(1.0) {
        return Ok((lo, hi));
    }
    // every value identical up to rounding: put them in the top bin of a unit-width range
    let lo = (hi - 1.0).max(0.0);
    Ok(if hi > lo { (lo, hi) } else { (lo, lo + 1.0) })
}

/// Fidelities `|<psi|m|psi>|^2` for the states of a run, in chunk order.
pub fn sample_fidelities(m: &ComplexMatrix, cfg: &McConfig) -> Vec<f64> {
    run_chunks(m.dim(), cfg, |mut stream| {
        let mut out = Vec::new();
        while let Some(psi) = stream.next_state() {
            out.push(m.expectation(psi).norm_sqr());
        }
        out
    })
    .concat()
}

/// Histogram of fidelities over Haar-random inputs.
pub fn mc_histogram(
    m: &ComplexMatrix,
    bins: usize,
    cfg: &McConfig,
    range: Option<(f64, f64)>,
) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    if cfg.samples < bins {
        return Err(Error::InvalidArgument(format!(
            "samples ({}) must be at least bins ({bins})",
            cfg.samples
        )));
    }
    Histogram::from_values(&sample_fidelities(m, cfg), bins, range)
}
