//! Tuning gate parameters to maximize a fidelity objective.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eig2_normal, polar, ComplexMatrix, SubspaceSelector, DEFAULT_TOL};
use crate::moments::{avg_fidelity, fourth_moment_general, GateSpec};
use crate::qubit_dist::normal_pdf;

pub const DEFAULT_X_TOL: f64 = 1e-8;
pub const DEFAULT_F_TOL: f64 = 1e-10;
pub const EVALS_PER_PARAM: usize = 500;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const INITIAL_STEP_FRACTION: f64 = 0.1;

/// Names accepted by [`GateFamily::builtin`].
pub const BUILTIN_FAMILIES: [&str; 4] = [
    "phase_gate",
    "two_phase_gate",
    "leaky_gate",
    "normal_family",
];

type Evaluator = dyn Fn(&[f64]) -> Result<ComplexMatrix> + Send + Sync;

/// A parameterized implementation `N(theta)` of a target gate.
#[derive(Clone)]
pub struct GateFamily {
    name: String,
    dim: usize,
    domain: Vec<(f64, f64)>,
    target: ComplexMatrix,
    subspace: Option<SubspaceSelector>,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for GateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GateFamily")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("subspace", &self.subspace)
            .finish_non_exhaustive()
    }
}

impl GateFamily {
    /// `domain` is the box on which `evaluator` is total; one interval per parameter.
    pub fn new<F>(
        name: impl Into<String>,
        dim: usize,
        domain: Vec<(f64, f64)>,
        target: ComplexMatrix,
        subspace: Option<SubspaceSelector>,
        evaluator: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<ComplexMatrix> + Send + Sync + 'static,
    {
        if domain.is_empty() {
            return Err(Error::InvalidArgument(
                "family needs at least one parameter".into(),
            ));
        }
        if domain
            .iter()
            .any(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi)
        {
            return Err(Error::InvalidArgument(format!(
                "invalid parameter domain {domain:?}"
            )));
        }
        // validates the target against the subspace once, up front
        GateSpec::new(
            target.clone(),
            ComplexMatrix::identity(target.dim()),
            subspace.clone(),
        )?;
        if target.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: target.dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            dim,
            domain,
            target,
            subspace,
            evaluator: Arc::new(evaluator),
        })
    }

    /// One of the shipped families. `target` defaults to the identity.
    ///
    /// * `phase_gate`: `diag(1, e^{i phi})`
    /// * `two_phase_gate`: `diag(e^{i phi0}, e^{i phi1})`
    /// * `leaky_gate`: three-level unitary with qubit block `diag(1, alpha)`,
    ///   `alpha = a e^{i chi}`, parameters `(a, chi)`, inputs on `{0, 1}`
    /// * `normal_family`: `diag(0.7 e^{i pi/8}, r e^{i psi})`, parameters `(r, psi)`
    pub fn builtin(
        name: &str,
        target: Option<ComplexMatrix>,
        subspace: Option<SubspaceSelector>,
    ) -> Result<Self> {
        let unbounded = (f64::NEG_INFINITY, f64::INFINITY);
        let with_target = |dim: usize| {
            target
                .clone()
                .unwrap_or_else(|| ComplexMatrix::identity(dim))
        };
        match name {
            "phase_gate" => Self::new(name, 2, vec![unbounded], with_target(2), subspace, |p| {
                Ok(ComplexMatrix::diag(&[c(1.0, 0.0), polar(1.0, p[0])]))
            }),
            "two_phase_gate" => {
                Self::new(name, 2, vec![unbounded; 2], with_target(2), subspace, |p| {
                    Ok(ComplexMatrix::diag(&[polar(1.0, p[0]), polar(1.0, p[1])]))
                })
            }
            "leaky_gate" => {
                let subspace = subspace.or_else(|| SubspaceSelector::new(vec![0, 1]).ok());
                Self::new(
                    name,
                    3,
                    vec![(0.0, 1.0), unbounded],
                    with_target(3),
                    subspace,
                    |p| leaky_unitary(p[0], p[1]),
                )
            }
            "normal_family" => Self::new(
                name,
                2,
                vec![(0.0, f64::INFINITY), unbounded],
                with_target(2),
                subspace,
                |p| {
                    Ok(ComplexMatrix::diag(&[
                        polar(0.7, PI / 8.0),
                        polar(p[0], p[1]),
                    ]))
                },
            ),
            other => Err(Error::InvalidArgument(format!(
                "unknown family '{other}' (known: {})",
                BUILTIN_FAMILIES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn param_count(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn target(&self) -> &ComplexMatrix {
        &self.target
    }

    pub fn subspace(&self) -> Option<&SubspaceSelector> {
        self.subspace.as_ref()
    }

    /// `N(theta)`.
    pub fn evaluate(&self, params: &[f64]) -> Result<ComplexMatrix> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                found: params.len(),
            });
        }
        for (i, (&x, &(lo, hi))) in params.iter().zip(&self.domain).enumerate() {
            if !(lo..=hi).contains(&x) {
                return Err(Error::InvalidArgument(format!(
                    "parameter {i} = {x} outside family domain [{lo}, {hi}]"
                )));
            }
        }
        let m = (self.evaluator)(params)?;
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.dim(),
            });
        }
        Ok(m)
    }

    /// Effective map `U0^dagger N(theta)`, restricted to the subspace when one is set.
    pub fn effective_map(&self, params: &[f64]) -> Result<ComplexMatrix> {
        let actual = self.evaluate(params)?;
        Ok(GateSpec::new(self.target.clone(), actual, self.subspace.clone())?.effective_map())
    }
}

/// Three-level unitary `[[1,0,0],[0,alpha,g],[0,g,-conj(alpha)]]`, `g = sqrt(1 - |alpha|^2)`.
fn leaky_unitary(modulus: f64, phase: f64) -> Result<ComplexMatrix> {
    let alpha = polar(modulus, phase);
    let g = c((1.0 - modulus * modulus).max(0.0).sqrt(), 0.0);
    let zero = c(0.0, 0.0);
    ComplexMatrix::from_rows(&[
        vec![c(1.0, 0.0), zero, zero],
        vec![zero, alpha, g],
        vec![zero, g, -alpha.conj()],
    ])
}

/// Quantity to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    Mean,
    /// `mean - k * sigma`.
    MeanMinusKSigma {
        k: f64,
    },
    /// Lowest fidelity over all inputs; 2x2 normal effective maps only.
    MinSupport,
}

impl Objective {
    pub fn validate(&self) -> Result<()> {
        match self {
            Objective::MeanMinusKSigma { k } if !k.is_finite() || *k < 0.0 => Err(
                Error::InvalidArgument(format!("k must be finite and non-negative, got {k}")),
            ),
            _ => Ok(()),
        }
    }
}

pub fn evaluate_objective(fam: &GateFamily, obj: &Objective, params: &[f64]) -> Result<f64> {
    obj.validate()?;
    let m = fam.effective_map(params)?;
    match obj {
        Objective::Mean => Ok(avg_fidelity(&m)),
        Objective::MeanMinusKSigma { k } => {
            let mean = avg_fidelity(&m);
            let var = (fourth_moment_general(&m) - mean * mean).max(0.0);
            Ok(mean - k * var.sqrt())
        }
        Objective::MinSupport => {
            if m.dim() != 2 {
                return Err(Error::InvalidArgument(format!(
                    "min_support needs a 2x2 effective map, got {}x{}",
                    m.dim(),
                    m.dim()
                )));
            }
            let spectrum = eig2_normal(&m, DEFAULT_TOL)?;
            match normal_pdf(&spectrum) {
                Ok(d) => Ok(d.min_fidelity()),
                Err(Error::DegenerateSpectrum { point_mass }) => Ok(point_mass),
                Err(e) => Err(e),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub start: Vec<f64>,
    #[serde(rename = "box")]
    pub bounds: Vec<(f64, f64)>,
    /// Defaults to `500 * param_count`.
    pub max_evals: Option<usize>,
    pub x_tol: f64,
    pub f_tol: f64,
    pub record_trace: bool,
}

impl OptimizeConfig {
    pub fn new(start: Vec<f64>, bounds: Vec<(f64, f64)>) -> Self {
        Self {
            start,
            bounds,
            max_evals: None,
            x_tol: DEFAULT_X_TOL,
            f_tol: DEFAULT_F_TOL,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub params: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
}

/// Nelder-Mead simplex search maximizing `obj`, with proposals clamped to the box.
///
/// Stops once the simplex diameter (max-norm from the best vertex) is below
/// `x_tol` and the spread of vertex values is below `f_tol`, or when the
/// evaluation budget would be exceeded.
pub fn optimize(
    fam: &GateFamily,
    obj: &Objective,
    config: &OptimizeConfig,
) -> Result<OptimizationResult> {
    obj.validate()?;
    let p = fam.param_count();
    if config.start.len() != p || config.bounds.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: config.start.len().max(config.bounds.len()),
        });
    }
    for (i, (&x, &(lo, hi))) in config.start.iter().zip(&config.bounds).enumerate() {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "box {i} is empty: [{lo}, {hi}]"
            )));
        }
        if !(lo..=hi).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "start[{i}] = {x} outside box [{lo}, {hi}]"
            )));
        }
    }
    let max_evals = config.max_evals.unwrap_or(EVALS_PER_PARAM * p);
    if max_evals < p + 2 {
        return Err(Error::InvalidArgument(format!(
            "max_evals must be at least {}",
            p + 2
        )));
    }

    let mut search = Search {
        fam,
        obj,
        bounds: &config.bounds,
        evals: 0,
        trace: config.record_trace.then(Vec::new),
    };

    // vertices carry the negated objective; the search minimizes
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    let x0 = config.start.clone();
    let h0 = search.eval(&x0)?;
    simplex.push((x0.clone(), h0));
    for i in 0..p {
        let (lo, hi) = config.bounds[i];
        let width = hi - lo;
        let step = if width.is_finite() {
            INITIAL_STEP_FRACTION * width
        } else {
            0.25_f64.max(0.1 * x0[i].abs())
        };
        let mut x = x0.clone();
        x[i] = if x0[i] + step <= hi {
            x0[i] + step
        } else {
            x0[i] - step
        };
        let x = search.clamp(x);
        let h = search.eval(&x)?;
        simplex.push((x, h));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let worst = &simplex[p];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = worst.1 - best.1;
        if diameter < config.x_tol && spread < config.f_tol {
            converged = true;
            break;
        }
        if search.evals + 2 > max_evals {
            break;
        }

        let mut centroid = vec![0.0; p];
        for (x, _) in &simplex[..p] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / p as f64;
            }
        }
        let toward = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
            from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
        };
        let worst_x = simplex[p].0.clone();
        let h_worst = simplex[p].1;
        let h_second = simplex[p - 1].1;
        let h_best = simplex[0].1;

        let xr = search.clamp(toward(&centroid, &worst_x, -REFLECT));
        let hr = search.eval(&xr)?;
        if hr < h_best {
            let xe = search.clamp(toward(&centroid, &xr, EXPAND));
            let he = search.eval(&xe)?;
            simplex[p] = if he < hr { (xe, he) } else { (xr, hr) };
            continue;
        }
        if hr < h_second {
            simplex[p] = (xr, hr);
            continue;
        }
        let (xc, hc) = if hr < h_worst {
            let xc = search.clamp(toward(&centroid, &xr, CONTRACT));
            let hc = search.eval(&xc)?;
            (xc, hc)
        } else {
            let xc = search.clamp(toward(&centroid, &worst_x, CONTRACT));
            let hc = search.eval(&xc)?;
            (xc, hc)
        };
        if hc < hr.min(h_worst) {
            simplex[p] = (xc, hc);
            continue;
        }
        if search.evals + p > max_evals {
            break;
        }
        let best_x = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = search.clamp(toward(&best_x, &vertex.0, SHRINK));
            let h = search.eval(&x)?;
            *vertex = (x, h);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best_params, h) = simplex.swap_remove(0);
    Ok(OptimizationResult {
        best_params,
        best_value: -h,
        evaluations: search.evals,
        converged,
        trace: search.trace,
    })
}

struct Search<'a> {
    fam: &'a GateFamily,
    obj: &'a Objective,
    bounds: &'a [(f64, f64)],
    evals: usize,
    trace: Option<Vec<TracePoint>>,
}

impl Search<'_> {
    fn clamp(&self, mut x: Vec<f64>) -> Vec<f64> {
        for (xi, &(lo, hi)) in x.iter_mut().zip(self.bounds) {
            *xi = xi.clamp(lo, hi);
        }
        x
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evals += 1;
        let value = evaluate_objective(self.fam, self.obj, x).map_err(|e| Error::Evaluator {
            params: x.to_vec(),
            message: e.to_string(),
        })?;
        if let Some(trace) = &mut self.trace {
            trace.push(TracePoint {
                params: x.to_vec(),
                value,
            });
        }
        Ok(-value)
    }
}

/// Exhaustive scan of `points` evenly spaced values per parameter over the box.
///
/// Independent of the simplex search; serves as its oracle for `p <= 2`.
pub fn grid_scan(
    fam: &GateFamily,
    obj: &Objective,
    bounds: &[(f64, f64)],
    points: usize,
) -> Result<(Vec<f64>, f64)> {
    let p = fam.param_count();
    if bounds.len() != p || points < 2 {
        return Err(Error::InvalidArgument(
            "grid needs one box per parameter and at least 2 points".into(),
        ));
    }
    let axis = |i: usize, k: usize| {
        let (lo, hi) = bounds[i];
        lo + (hi - lo) * k as f64 / (points - 1) as f64
    };
    let total = points
        .checked_pow(p as u32)
        .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
    let point_at = |mut idx: usize| -> Vec<f64> {
        (0..p)
            .map(|i| {
                let k = idx % points;
                idx /= points;
                axis(i, k)
            })
            .collect()
    };
    let eval = |idx: usize| -> Result<f64> { evaluate_objective(fam, obj, &point_at(idx)) };

    #[cfg(feature = "parallel")]
    let values: Vec<Result<f64>> = {
        use rayon::prelude::*;
        (0..total).into_par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Result<f64>> = (0..total).map(eval).collect();

    let mut best = (0usize, f64::NEG_INFINITY);
    for (idx, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best.1 {
            best = (idx, v);
        }
    }
    Ok((point_at(best.0), best.1))
}
