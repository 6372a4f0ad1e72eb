//! JSON file formats. Complex numbers are `[re, im]` pairs.
//!
//! * matrix: `{"dim": n, "entries": [[re, im], ...]}`, row-major, `n^2` entries
//! * Kraus map: `{"operators": [<matrix>, ...]}`
//! * optimization problem: `{"family", "target", "objective", "start", "box"}`
//!   plus optional `subspace`, `max_evals`, `x_tol`, `f_tol`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Complex, ComplexMatrix, SubspaceSelector};
use crate::moments::KrausMap;
use crate::optimizer::{GateFamily, Objective, OptimizeConfig, DEFAULT_F_TOL, DEFAULT_X_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;
    fn try_from(m: MatrixJson) -> Result<Self> {
        let entries = m
            .entries
            .iter()
            .map(|[re, im]| Complex::new(*re, *im))
            .collect();
        ComplexMatrix::new(m.dim, entries)
    }
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            entries: m.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let raw: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    raw.try_into()
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixJson::from(m)).expect("plain data serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausJson {
    pub operators: Vec<MatrixJson>,
}

pub fn parse_kraus(text: &str) -> Result<KrausMap> {
    let raw: KrausJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let ops = raw
        .operators
        .into_iter()
        .map(ComplexMatrix::try_from)
        .collect::<Result<Vec<_>>>()?;
    KrausMap::new(ops)
}

pub fn kraus_to_json(k: &KrausMap) -> String {
    let raw = KrausJson {
        operators: k.operators().iter().map(MatrixJson::from).collect(),
    };
    serde_json::to_string(&raw).expect("plain data serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub family: String,
    #[serde(default)]
    pub target: Option<MatrixJson>,
    pub objective: Objective,
    pub start: Vec<f64>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub subspace: Option<Vec<usize>>,
    #[serde(default)]
    pub max_evals: Option<usize>,
    #[serde(default)]
    pub x_tol: Option<f64>,
    #[serde(default)]
    pub f_tol: Option<f64>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Resolves the family from the built-in registry.
    pub fn family(&self) -> Result<GateFamily> {
        let target = self
            .target
            .clone()
            .map(ComplexMatrix::try_from)
            .transpose()?;
        let subspace = self
            .subspace
            .clone()
            .map(SubspaceSelector::new)
            .transpose()?;
        GateFamily::builtin(&self.family, target, subspace)
    }

    pub fn config(&self) -> OptimizeConfig {
        OptimizeConfig {
            start: self.start.clone(),
            bounds: self.bounds.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
            max_evals: self.max_evals,
            x_tol: self.x_tol.unwrap_or(DEFAULT_X_TOL),
            f_tol: self.f_tol.unwrap_or(DEFAULT_F_TOL),
            record_trace: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn matrix_json_round_trip() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1., 0.5), c(-0.25, 0.)],
            vec![c(0., 1e-3), c(0.7, -0.7)],
        ])
        .unwrap();
        let back = parse_matrix(&matrix_to_json(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_json_errors() {
        assert!(matches!(parse_matrix("{\"dim\": 2"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_matrix(r#"{"dim": 2, "entries": [[1,0],[0,0],[0,0]]}"#),
            Err(Error::BadShape { .. })
        ));
        assert!(matches!(
            parse_matrix(r#"{"dim": 1, "entries": [[1,0,3]]}"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn kraus_json() {
        let text = r#"{"operators": [{"dim": 1, "entries": [[0.6, 0]]}, {"dim": 1, "entries": [[0, 0.8]]}]}"#;
        let k = parse_kraus(text).unwrap();
        assert_eq!(k.operators().len(), 2);
        assert!(k.is_trace_preserving());
        assert_eq!(parse_kraus(&kraus_to_json(&k)).unwrap(), k);
        assert!(parse_kraus(r#"{"operators": []}"#).is_err());
    }

    #[test]
    fn problem_file() {
        let text = r#"{
            "family": "phase_gate",
            "target": {"dim": 2, "entries": [[1,0],[0,0],[0,0],[1,0]]},
            "objective": {"kind": "mean_minus_k_sigma", "k": 0.5},
            "start": [2.0],
            "box": [[-3.0, 3.0]]
        }"#;
        let p = ProblemFile::parse(text).unwrap();
        assert_eq!(p.objective, Objective::MeanMinusKSigma { k: 0.5 });
        let cfg = p.config();
        assert_eq!(cfg.bounds, vec![(-3.0, 3.0)]);
        assert_eq!(cfg.x_tol, DEFAULT_X_TOL);
        assert_eq!(p.family().unwrap().name(), "phase_gate");
        let unknown = ProblemFile::parse(&text.replace("phase_gate", "warp_drive")).unwrap();
        assert!(unknown.family().is_err());
        let mean = ProblemFile::parse(&text.replace(
            r#""kind": "mean_minus_k_sigma", "k": 0.5"#,
            r#""kind": "mean""#,
        ))
        .unwrap();
        assert_eq!(mean.objective, Objective::Mean);
    }
}
