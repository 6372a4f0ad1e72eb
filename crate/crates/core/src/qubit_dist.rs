//! Exact fidelity distribution for 2x2 normal maps.
//!
//! For a normal `M` with eigenvalues `l0, l1` (`|l0| <= |l1|`) the fidelity
//! density is a sum of at most two pieces of the form `c / sqrt(f - f0)` with
//! `f0 = Im(l0 conj(l1))^2 / |l0 - l1|^2`. Which pieces appear depends on
//! whether `|l0 - l1/2| < |l1|/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Complex, QubitSpectrum};
use crate::moments::{Method, MomentReport};
use crate::sampler::Histogram;

/// Spectra closer than this (in `|l0 - l1|`) are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Offset into the support used when sampling the density on a grid.
pub const GRID_EDGE_OFFSET: f64 = 1e-9;

/// Minimum expected bin count entering the chi-square statistic.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistCase {
    UnitaryLike,
    OnePiece,
    TwoPiece,
}

/// Density `c / sqrt(f - f0)` on `[f_lo, f_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub f_lo: f64,
    pub f_hi: f64,
    pub c: f64,
}

impl Piece {
    fn mass_below(&self, f0: f64, f: f64) -> f64 {
        if f <= self.f_lo {
            return 0.0;
        }
        let top = f.min(self.f_hi);
        2.0 * self.c * (sqrt_pos(top - f0) - sqrt_pos(self.f_lo - f0))
    }

    /// `int_{f_lo}^{f_hi} f^k c / sqrt(f - f0) df` for `k <= 2`, via `u = sqrt(f - f0)`.
    fn raw_moment(&self, f0: f64, k: u32) -> f64 {
        let antiderivative = |u: f64| -> f64 {
            let u2 = u * u;
            match k {
                0 => u,
                1 => u * u2 / 3.0 + f0 * u,
                2 => u * u2 * u2 / 5.0 + 2.0 * f0 * u * u2 / 3.0 + f0 * f0 * u,
                _ => unreachable!("moments above 2 are not provided"),
            }
        };
        2.0 * self.c
            * (antiderivative(sqrt_pos(self.f_hi - f0)) - antiderivative(sqrt_pos(self.f_lo - f0)))
    }
}

fn sqrt_pos(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

/// Piecewise closed-form fidelity density of a qubit map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityDistribution {
    pub spectrum: QubitSpectrum,
    pub case: DistCase,
    pub f0: f64,
    pub pieces: Vec<Piece>,
}

impl FidelityDistribution {
    pub fn support(&self) -> (f64, f64) {
        (self.pieces[0].f_lo, self.pieces[self.pieces.len() - 1].f_hi)
    }

    /// Lowest attainable fidelity.
    pub fn min_fidelity(&self) -> f64 {
        self.support().0
    }

    /// Analytic total mass.
    pub fn total_mass(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.mass_below(self.f0, p.f_hi))
            .sum()
    }

    /// Density at `f`; `+inf` exactly at a singular endpoint, zero off the support.
    pub fn pdf(&self, f: f64) -> f64 {
        let last = self.pieces.len() - 1;
        for (i, p) in self.pieces.iter().enumerate() {
            let inside = f >= p.f_lo && (f < p.f_hi || (i == last && f <= p.f_hi));
            if inside {
                let gap = f - self.f0;
                return if gap <= 0.0 {
                    f64::INFINITY
                } else {
                    p.c / gap.sqrt()
                };
            }
        }
        0.0
    }

    pub fn cdf(&self, f: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.mass_below(self.f0, f))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Inverse of [`cdf`](Self::cdf) for `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let mut below = 0.0;
        for piece in &self.pieces {
            let mass = piece.mass_below(self.f0, piece.f_hi);
            if p <= below + mass {
                let u = sqrt_pos(piece.f_lo - self.f0) + (p - below) / (2.0 * piece.c);
                return (self.f0 + u * u).clamp(piece.f_lo, piece.f_hi);
            }
            below += mass;
        }
        self.support().1
    }

    /// Mean, second moment and variance from the density itself.
    pub fn quadrature_moments(&self) -> MomentReport {
        let mean = self.pieces.iter().map(|p| p.raw_moment(self.f0, 1)).sum();
        let second = self.pieces.iter().map(|p| p.raw_moment(self.f0, 2)).sum();
        MomentReport::from_moments(2, mean, second, Method::ClosedForm)
    }

    /// `f,density` CSV on `grid` evenly spaced points, kept `1e-9` inside the support.
    pub fn pdf_csv(&self, grid: usize) -> Result<String> {
        if grid < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid must have at least 2 points, got {grid}"
            )));
        }
        let (lo, hi) = self.support();
        let (a, b) = (lo + GRID_EDGE_OFFSET, hi - GRID_EDGE_OFFSET);
        let mut out = String::from("f,density\n");
        for i in 0..grid {
            let f = a + (b - a) * i as f64 / (grid - 1) as f64;
            out.push_str(&format!("{f},{}\n", self.pdf(f)));
        }
        Ok(out)
    }
}

/// Density for a unitary qubit error with eigenphases `phi0`, `phi1` (radians).
pub fn unitary_pdf(phi0: f64, phi1: f64) -> Result<FidelityDistribution> {
    if !phi0.is_finite() || !phi1.is_finite() {
        return Err(Error::NonFinite("eigenphases"));
    }
    let two_pi = std::f64::consts::TAU;
    let delta = (phi1 - phi0).rem_euclid(two_pi);
    if delta < DEGENERACY_TOL || two_pi - delta < DEGENERACY_TOL {
        return Err(Error::DegenerateSpectrum { point_mass: 1.0 });
    }
    let half = delta / 2.0;
    let f0 = half.cos().powi(2);
    Ok(FidelityDistribution {
        spectrum: QubitSpectrum::new(
            Complex::from_polar(1.0, phi0),
            Complex::from_polar(1.0, phi1),
        )?,
        case: DistCase::UnitaryLike,
        f0,
        pieces: vec![Piece {
            f_lo: f0,
            f_hi: 1.0,
            c: 1.0 / (2.0 * half.sin()),
        }],
    })
}

fn check_degenerate(s: &QubitSpectrum) -> Result<()> {
    if (s.lambda0() - s.lambda1()).norm() <= DEGENERACY_TOL {
        return Err(Error::DegenerateSpectrum {
            point_mass: s.lambda0().norm_sqr(),
        });
    }
    Ok(())
}

/// Which closed form applies to a non-degenerate spectrum.
pub fn classify_case(s: &QubitSpectrum) -> Result<DistCase> {
    check_degenerate(s)?;
    let (l0, l1) = (s.lambda0(), s.lambda1());
    if (l0.norm() - 1.0).abs() <= 1e-12 && (l1.norm() - 1.0).abs() <= 1e-12 {
        return Ok(DistCase::UnitaryLike);
    }
    Ok(if (l0 - l1 * 0.5).norm() < l1.norm() * 0.5 {
        DistCase::OnePiece
    } else {
        DistCase::TwoPiece
    })
}

/// `Im(l0 conj(l1))^2 / |l0 - l1|^2`, never above `|l0|^2`.
pub fn anchor_f0(s: &QubitSpectrum) -> f64 {
    let (l0, l1) = (s.lambda0(), s.lambda1());
    let f0 = (l0 * l1.conj()).im.powi(2) / (l0 - l1).norm_sqr();
    f0.min(l0.norm_sqr())
}

/// Density for a 2x2 normal map with spectrum `s`.
pub fn normal_pdf(s: &QubitSpectrum) -> Result<FidelityDistribution> {
    match classify_case(s)? {
        DistCase::UnitaryLike => {
            let mut d = unitary_pdf(s.lambda0().arg(), s.lambda1().arg())?;
            d.spectrum = *s;
            Ok(d)
        }
        case => normal_pdf_forced(s, case),
    }
}

/// Evaluates the one-piece or two-piece formula regardless of which one the
/// spectrum's geometry selects. Off its own region a formula does not
/// integrate to one; this exists to study the case boundary.
pub fn normal_pdf_forced(s: &QubitSpectrum, case: DistCase) -> Result<FidelityDistribution> {
    check_degenerate(s)?;
    let (l0, l1) = (s.lambda0(), s.lambda1());
    let gap = (l0 - l1).norm();
    let (a2, b2) = (l0.norm_sqr(), l1.norm_sqr());
    let f0 = anchor_f0(s);
    let outer = Piece {
        f_lo: a2,
        f_hi: b2,
        c: 1.0 / (2.0 * gap),
    };
    let pieces = match case {
        DistCase::OnePiece => vec![outer],
        DistCase::TwoPiece | DistCase::UnitaryLike => {
            let inner = Piece {
                f_lo: f0,
                f_hi: a2,
                c: 1.0 / gap,
            };
            [inner, outer]
                .into_iter()
                .filter(|p| p.f_hi > p.f_lo)
                .collect()
        }
    };
    if pieces.is_empty() {
        return Err(Error::DegenerateSpectrum { point_mass: a2 });
    }
    Ok(FidelityDistribution {
        spectrum: *s,
        case,
        f0,
        pieces,
    })
}

/// Goodness of fit of a fidelity histogram against a closed-form density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramComparison {
    /// Max over bins of `|empirical density - bin-averaged density|`.
    pub sup_norm_density_gap: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub bins_compared: usize,
    /// Largest standardized bin residual `|O - E| / sqrt(E (1 - p))`.
    pub max_abs_z: f64,
}

impl HistogramComparison {
    pub fn chi_square_per_dof(&self) -> f64 {
        self.chi_square / self.dof as f64
    }
}

pub fn compare_histogram(d: &FidelityDistribution, h: &Histogram) -> Result<HistogramComparison> {
    let (lo, hi) = d.support();
    let w = h.bin_width();
    let slack = w * (1.0 + 1e-9);
    if h.lo < lo - slack || h.hi > hi + slack {
        return Err(Error::Histogram(format!(
            "histogram range [{}, {}] extends more than one bin beyond support [{lo}, {hi}]",
            h.lo, h.hi
        )));
    }
    let n = h.samples as f64;
    let mut chi_square = 0.0;
    let mut bins_compared = 0;
    let mut sup: f64 = 0.0;
    let mut max_abs_z: f64 = 0.0;
    for i in 0..h.bins() {
        let (a, b) = h.bin_edges(i);
        let p = (d.cdf(b) - d.cdf(a)).max(0.0);
        let expected = p * n;
        let observed = h.counts[i] as f64;
        sup = sup.max((h.density(i) - p / (b - a)).abs());
        if expected >= MIN_EXPECTED_COUNT {
            chi_square += (observed - expected).powi(2) / expected;
            bins_compared += 1;
            let sigma = (expected * (1.0 - p)).sqrt();
            if sigma > 0.0 {
                max_abs_z = max_abs_z.max((observed - expected).abs() / sigma);
            }
        }
    }
    if bins_compared < 2 {
        return Err(Error::Histogram(format!(
            "only {bins_compared} bins have expected count >= {MIN_EXPECTED_COUNT}"
        )));
    }
    Ok(HistogramComparison {
        sup_norm_density_gap: sup,
        chi_square,
        dof: bins_compared - 1,
        bins_compared,
        max_abs_z,
    })
}
