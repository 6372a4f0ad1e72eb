//! Closed-form Haar averages of `f = |<psi|M|psi>|^2` and `f^2`.
//!
//! All quantities are built from traces of short products of `M` and
//! `M^dagger`; no eigendecomposition is involved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Complex, ComplexMatrix, QubitSpectrum, SubspaceSelector, DEFAULT_TOL};
use crate::sampler::{run_chunks, McConfig, McEstimate, RunningMoments};

/// Denominator below which the post-selected state is undefined.
pub const ACCEPTANCE_TOL: f64 = 1e-14;

/// Raw variances within this distance of zero are clamped silently.
pub const VARIANCE_CLAMP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    MonteCarlo,
}

/// Mean, second moment and variance of the fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n_eff: usize,
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_moment: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    /// `second_moment - mean^2` before clamping at zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_variance: Option<f64>,
    pub method: Method,
}

impl MomentReport {
    pub fn mean_only(n_eff: usize, mean: f64, method: Method) -> Self {
        Self {
            n_eff,
            mean,
            second_moment: None,
            variance: None,
            raw_variance: None,
            method,
        }
    }

    pub fn from_moments(n_eff: usize, mean: f64, second_moment: f64, method: Method) -> Self {
        let raw = second_moment - mean * mean;
        Self {
            n_eff,
            mean,
            second_moment: Some(second_moment),
            variance: Some(raw.max(0.0)),
            raw_variance: Some(raw),
            method,
        }
    }

    /// True when a negative raw variance exceeded the clamp tolerance.
    pub fn variance_suspect(&self) -> bool {
        self.raw_variance.is_some_and(|r| r < -VARIANCE_CLAMP_TOL)
    }
}

fn residue_scale(z: Complex) -> f64 {
    z.norm().max(1.0)
}

/// `[Tr(M M^dagger) + |Tr M|^2] / (n (n + 1))`.
pub fn avg_fidelity(m: &ComplexMatrix) -> f64 {
    let n = m.dim() as f64;
    let gram = m.matmul(&m.adjoint()).trace();
    debug_assert!(
        gram.im.abs() <= 1e-12 * residue_scale(gram),
        "Tr(MM^dagger) not real: {gram}"
    );
    (gram.re + m.trace().norm_sqr()) / (n * (n + 1.0))
}

/// `(|l0|^2 + |l1|^2 + Re(l0 conj(l1))) / 3`.
pub fn avg_fidelity_qubit_spectrum(s: &QubitSpectrum) -> f64 {
    let (a, b) = (s.lambda0(), s.lambda1());
    (a.norm_sqr() + b.norm_sqr() + (a * b.conj()).re) / 3.0
}

/// Haar average of `|<psi|S|psi>|^4` for Hermitian or anti-Hermitian `S`.
pub fn fourth_moment_hermitian(s: &ComplexMatrix) -> Result<f64> {
    let flags = s.classify(DEFAULT_TOL);
    if !flags.hermitian && !flags.anti_hermitian {
        return Err(Error::NotHermitian);
    }
    let n = s.dim() as f64;
    let s2 = s.matmul(s);
    let s3 = s2.matmul(s);
    let s4 = s2.matmul(&s2);
    let (t1, t2, t3, t4) = (s.trace(), s2.trace(), s3.trace(), s4.trace());
    if flags.hermitian {
        debug_assert!([t1, t2, t3, t4]
            .iter()
            .all(|t| t.im.abs() <= 1e-12 * residue_scale(*t)));
    }
    let sum = t4 * 6.0 + t3 * t1 * 8.0 + t2 * t2 * 3.0 + t2 * t1 * t1 * 6.0 + t1 * t1 * t1 * t1;
    debug_assert!(sum.im.abs() <= 1e-10 * residue_scale(sum));
    Ok(sum.re / (n * (n + 1.0) * (n + 2.0) * (n + 3.0)))
}

/// Haar average of `|<psi|M|psi>|^4` for an arbitrary square `M`.
pub fn fourth_moment_general(m: &ComplexMatrix) -> f64 {
    fourth_moment_terms(m).value()
}

/// The ten trace products making up the general fourth moment, kept apart
/// so callers can inspect (or, in tests, perturb) individual coefficients.
#[derive(Debug, Clone, Copy)]
pub struct FourthMomentTerms {
    pub dim: usize,
    /// Trace products in the order of [`FOURTH_MOMENT_COEFFS`].
    pub terms: [Complex; 10],
}

/// Integer weights of the ten trace products.
pub const FOURTH_MOMENT_COEFFS: [f64; 10] = [4.0, 2.0, 4.0, 4.0, 1.0, 2.0, 1.0, 1.0, 4.0, 1.0];

impl FourthMomentTerms {
    pub fn value(&self) -> f64 {
        self.value_with(&FOURTH_MOMENT_COEFFS)
    }

    pub fn value_with(&self, coeffs: &[f64; 10]) -> f64 {
        let n = self.dim as f64;
        let sum: Complex = self.terms.iter().zip(coeffs).map(|(t, w)| t * w).sum();
        debug_assert!(
            sum.im.abs() <= 1e-10 * residue_scale(sum),
            "imaginary residue {}",
            sum.im
        );
        (sum.re / (n * (n + 1.0) * (n + 2.0) * (n + 3.0))).max(0.0)
    }
}

pub fn fourth_moment_terms(m: &ComplexMatrix) -> FourthMomentTerms {
    let d = m.adjoint();
    let mm = m.matmul(m);
    let dd = d.matmul(&d);
    let md = m.matmul(&d);
    let tr_m = m.trace();
    let tr_d = tr_m.conj();
    let tr_mm = mm.trace();
    let tr_dd = tr_mm.conj();
    let tr_md = md.trace();
    let terms = [
        mm.matmul(&dd).trace(),       // Tr(M^2 M^dag^2)
        md.matmul(&md).trace(),       // Tr(M M^dag M M^dag)
        tr_m * md.matmul(&d).trace(), // Tr M Tr(M M^dag^2)
        tr_d * mm.matmul(&d).trace(), // Tr M^dag Tr(M^2 M^dag)
        tr_mm * tr_dd,                // Tr M^2 Tr M^dag^2
        tr_md * tr_md,                // Tr(M M^dag)^2
        tr_mm * tr_d * tr_d,          // Tr M^2 (Tr M^dag)^2
        tr_m * tr_m * tr_dd,          // (Tr M)^2 Tr M^dag^2
        tr_m * tr_d * tr_md,          // Tr M Tr M^dag Tr(M M^dag)
        tr_m * tr_m * tr_d * tr_d,    // |Tr M|^4
    ];
    FourthMomentTerms {
        dim: m.dim(),
        terms,
    }
}

/// Mean, second moment and variance of the fidelity for the map `m`.
pub fn variance(m: &ComplexMatrix) -> MomentReport {
    MomentReport::from_moments(
        m.dim(),
        avg_fidelity(m),
        fourth_moment_general(m),
        Method::ClosedForm,
    )
}

/// Target unitary, actual map, and optionally the subspace that carries the
/// quantum information.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    target: ComplexMatrix,
    actual: ComplexMatrix,
    subspace: Option<SubspaceSelector>,
}

impl GateSpec {
    pub fn new(
        target: ComplexMatrix,
        actual: ComplexMatrix,
        subspace: Option<SubspaceSelector>,
    ) -> Result<Self> {
        if target.dim() != actual.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                found: actual.dim(),
            });
        }
        match &subspace {
            None => {
                let defect = target.unitarity_defect();
                if defect > DEFAULT_TOL {
                    return Err(Error::NotUnitary { defect });
                }
            }
            Some(sel) => {
                sel.check_parent(target.dim())?;
                let n = target.dim();
                let mut leak: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if sel.contains(i) != sel.contains(j) {
                            leak = leak.max(target.get(i, j).norm());
                        }
                    }
                }
                if leak > DEFAULT_TOL {
                    return Err(Error::NotBlockDiagonal { leak });
                }
                let defect = target.restrict(sel)?.unitarity_defect();
                if defect > DEFAULT_TOL {
                    return Err(Error::NotUnitary { defect });
                }
            }
        }
        Ok(Self {
            target,
            actual,
            subspace,
        })
    }

    pub fn target(&self) -> &ComplexMatrix {
        &self.target
    }

    pub fn actual(&self) -> &ComplexMatrix {
        &self.actual
    }

    pub fn subspace(&self) -> Option<&SubspaceSelector> {
        self.subspace.as_ref()
    }

    pub fn n_eff(&self) -> usize {
        self.subspace
            .as_ref()
            .map_or(self.target.dim(), SubspaceSelector::len)
    }

    /// `U0^dagger N`, or its restriction `(P U0^dagger P)(P N P)` to the subspace.
    pub fn effective_map(&self) -> ComplexMatrix {
        match &self.subspace {
            None => self.target.adjoint().matmul(&self.actual),
            Some(sel) => {
                let t = self
                    .target
                    .adjoint()
                    .restrict(sel)
                    .expect("validated selector");
                let a = self.actual.restrict(sel).expect("validated selector");
                t.matmul(&a)
            }
        }
    }

    /// Closed-form mean, second moment and variance of the effective map.
    pub fn moments(&self) -> MomentReport {
        let m = self.effective_map();
        MomentReport::from_moments(
            self.n_eff(),
            avg_fidelity(&m),
            fourth_moment_general(&m),
            Method::ClosedForm,
        )
    }
}

/// Average fidelity over inputs confined to the gate's subspace.
pub fn subspace_avg_fidelity(g: &GateSpec) -> Result<MomentReport> {
    if g.subspace.is_none() {
        return Err(Error::InvalidSelector("gate has no subspace".into()));
    }
    Ok(g.moments())
}

/// Acceptance-weighted fidelity of the post-selected state that remains in the subspace.
pub fn conditional_fidelity(g: &GateSpec) -> Result<f64> {
    let sel = g
        .subspace
        .as_ref()
        .ok_or_else(|| Error::InvalidSelector("gate has no subspace".into()))?;
    let n = g.target.dim();
    let p = sel.projector(n)?;
    let u = &g.actual;
    let u0 = &g.target;
    let pup = p.matmul(u).matmul(&p);
    let u0_dag = u0.adjoint();
    let u_dag = u.adjoint();

    let denominator = u_dag.matmul(&pup).trace();
    if denominator.re <= ACCEPTANCE_TOL {
        return Err(Error::NoAcceptance {
            denominator: denominator.re,
        });
    }
    let gram = u0_dag
        .matmul(&pup)
        .matmul(&u_dag)
        .matmul(&p)
        .matmul(u0)
        .trace();
    let overlap = u0_dag.matmul(&pup).trace().norm_sqr();
    let n_rel = sel.len() as f64;
    Ok((gram.re + overlap) / ((n_rel + 1.0) * denominator.re))
}

/// Kraus operators `G_k` of a completely positive map.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    operators: Vec<ComplexMatrix>,
    completeness_defect: f64,
}

impl KrausMap {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidArgument("Kraus map has no operators".into()))?;
        let n = first.dim();
        if let Some(bad) = operators.iter().find(|g| g.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.dim(),
            });
        }
        let mut sum = ComplexMatrix::zeros(n);
        for g in &operators {
            sum = sum.add(&g.adjoint().matmul(g))?;
        }
        let completeness_defect = sum.sub(&ComplexMatrix::identity(n))?.max_abs();
        Ok(Self {
            operators,
            completeness_defect,
        })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    /// Max-modulus entry of `sum G_k^dagger G_k - I`.
    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.completeness_defect <= DEFAULT_TOL
    }
}

/// Average fidelity of a Kraus-form operation with respect to a target unitary.
pub fn kraus_avg_fidelity(k: &KrausMap, target: &ComplexMatrix) -> Result<f64> {
    Ok(kraus_report(k, target)?.mean)
}

/// Mean-only report; a Kraus map carries no meaningful fidelity variance.
pub fn kraus_report(k: &KrausMap, target: &ComplexMatrix) -> Result<MomentReport> {
    let n = k.dim();
    if target.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: target.dim(),
        });
    }
    let defect = target.unitarity_defect();
    if defect > DEFAULT_TOL {
        return Err(Error::NotUnitary { defect });
    }
    let target_dag = target.adjoint();
    let mut gram = 0.0;
    let mut overlaps = 0.0;
    for g in &k.operators {
        let mk = target_dag.matmul(g);
        gram += mk.adjoint().matmul(&mk).trace().re;
        overlaps += mk.trace().norm_sqr();
    }
    if k.is_trace_preserving() {
        debug_assert!(
            (gram - n as f64).abs() <= 1e-8,
            "trace-preserving map with Tr sum = {gram}"
        );
    }
    let nf = n as f64;
    Ok(MomentReport::mean_only(
        n,
        (gram + overlaps) / (nf * (nf + 1.0)),
        Method::ClosedForm,
    ))
}

/// Same-stream Monte Carlo check of `|<M>|^4 = |<S>|^4 + |<A>|^4 + 2 |<S>|^2 |<A>|^2`
/// with `S = (M + M^dagger)/2` and `A = (M - M^dagger)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaDecompositionReport {
    pub full: McEstimate,
    pub hermitian_part: McEstimate,
    pub anti_hermitian_part: McEstimate,
    pub cross: McEstimate,
    /// `hermitian_part + anti_hermitian_part + 2 cross`.
    pub recombined_mean: f64,
    /// Largest per-sample violation of the identity.
    pub max_pointwise_residual: f64,
}

pub fn sa_decomposition_check(m: &ComplexMatrix, cfg: &McConfig) -> Result<SaDecompositionReport> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    let d = m.adjoint();
    let half = Complex::new(0.5, 0.0);
    let s = m.add(&d)?.scale(half);
    let a = m.sub(&d)?.scale(half);
    let chunks = run_chunks(m.dim(), cfg, |mut stream| {
        let mut acc = [RunningMoments::default(); 4];
        let mut residual: f64 = 0.0;
        while let Some(psi) = stream.next_state() {
            let full = m.expectation(psi).norm_sqr().powi(2);
            let x2 = s.expectation(psi).norm_sqr();
            let y2 = a.expectation(psi).norm_sqr();
            let parts = x2 * x2 + y2 * y2 + 2.0 * x2 * y2;
            residual = residual.max((full - parts).abs());
            for (slot, v) in acc.iter_mut().zip([full, x2 * x2, y2 * y2, x2 * y2]) {
                slot.push(v);
            }
        }
        (acc, residual)
    });
    let mut total = [RunningMoments::default(); 4];
    let mut max_pointwise_residual: f64 = 0.0;
    for (acc, r) in chunks {
        for (t, a) in total.iter_mut().zip(acc) {
            *t = t.merge(a);
        }
        max_pointwise_residual = max_pointwise_residual.max(r);
    }
    let est = |i: usize| McEstimate::from_moments(total[i], cfg);
    let (full, hermitian_part, anti_hermitian_part, cross) = (est(0), est(1), est(2), est(3));
    Ok(SaDecompositionReport {
        full,
        hermitian_part,
        anti_hermitian_part,
        cross,
        recombined_mean: hermitian_part.mean + anti_hermitian_part.mean + 2.0 * cross.mean,
        max_pointwise_residual,
    })
}
