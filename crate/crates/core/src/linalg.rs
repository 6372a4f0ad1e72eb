//! Dense complex matrices, structural predicates, subspace restriction and
//! the closed-form spectrum of 2x2 normal matrices.
//!
//! Matrices are immutable values. Every operation returns a new matrix.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Default absolute tolerance for the structural predicates.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative tolerance under which two eigenvalue moduli count as tied.
const MODULUS_TIE_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// `r * e^{i phi}`.
#[inline]
pub fn polar(r: f64, phi: f64) -> Complex {
    Complex::from_polar(r, phi)
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for row in self.entries.chunks(self.dim) {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<Complex>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::BadShape {
                dim,
                len: entries.len(),
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from rows; every row must have as many entries as there are rows.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![Complex::new(1.0, 0.0); dim])
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            entries: vec![Complex::new(0.0, 0.0); dim * dim],
        }
    }

    /// Diagonal matrix. Panics on an empty or non-finite diagonal.
    pub fn diag(values: &[Complex]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, v) in values.iter().enumerate() {
            m.entries[i * dim + i] = *v;
        }
        assert!(
            values.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "non-finite diagonal entry"
        );
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.entries[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.entries[j * n + i].conj());
            }
        }
        Self { dim: n, entries }
    }

    pub fn trace(&self) -> Complex {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(self.matmul(other))
    }

    /// Product for operands already known to share a dimension.
    pub(crate) fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut entries = vec![Complex::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == Complex::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.entries[k * n..(k + 1) * n];
                for (out, b) in entries[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *out += a * b;
                }
            }
        }
        Self { dim: n, entries }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Complex, Complex) -> Complex) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| op(*a, *b))
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, factor: Complex) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `<psi| self |psi>` for an amplitude vector of matching length.
    pub fn expectation(&self, psi: &[Complex]) -> Complex {
        debug_assert_eq!(psi.len(), self.dim);
        let n = self.dim;
        let mut acc = Complex::new(0.0, 0.0);
        for (i, row) in self.entries.chunks_exact(n).enumerate() {
            let mut row_dot = Complex::new(0.0, 0.0);
            for (m, p) in row.iter().zip(psi) {
                row_dot += m * p;
            }
            acc += psi[i].conj() * row_dot;
        }
        acc
    }

    /// `self |psi>`.
    pub fn apply(&self, psi: &[Complex]) -> Vec<Complex> {
        debug_assert_eq!(psi.len(), self.dim);
        self.entries
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(psi).map(|(m, p)| m * p).sum())
            .collect()
    }

    pub fn classify(&self, tol: f64) -> StructureFlags {
        let adj = self.adjoint();
        let herm = self
            .zip_with(&adj, |a, b| a - b)
            .expect("same dim")
            .max_abs();
        let anti = self
            .zip_with(&adj, |a, b| a + b)
            .expect("same dim")
            .max_abs();
        let normal = self
            .matmul(&adj)
            .zip_with(&adj.matmul(self), |a, b| a - b)
            .expect("same dim")
            .max_abs();
        let unitary = adj
            .matmul(self)
            .zip_with(&Self::identity(self.dim), |a, b| a - b)
            .expect("same dim")
            .max_abs();
        StructureFlags {
            hermitian: herm <= tol,
            anti_hermitian: anti <= tol,
            normal: normal <= tol,
            unitary: unitary <= tol,
        }
    }

    /// Max-modulus deviation of `self^dagger self` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .zip_with(&Self::identity(self.dim), |a, b| a - b)
            .expect("same dim")
            .max_abs()
    }

    /// Max-modulus of the commutator `[m, m^dagger]`.
    pub fn normality_defect(&self) -> f64 {
        let adj = self.adjoint();
        self.matmul(&adj)
            .zip_with(&adj.matmul(self), |a, b| a - b)
            .expect("same dim")
            .max_abs()
    }

    /// Submatrix on the selected rows and columns.
    pub fn restrict(&self, sel: &SubspaceSelector) -> Result<Self> {
        sel.check_parent(self.dim)?;
        let idx = sel.indices();
        let k = idx.len();
        let mut entries = Vec::with_capacity(k * k);
        for &r in idx {
            for &col in idx {
                entries.push(self.get(r, col));
            }
        }
        Ok(Self { dim: k, entries })
    }
}

/// Result of [`ComplexMatrix::classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFlags {
    pub hermitian: bool,
    pub anti_hermitian: bool,
    pub normal: bool,
    pub unitary: bool,
}

/// Ordered set of basis indices spanning a subspace; defines the projector `P`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubspaceSelector {
    indices: Vec<usize>,
}

impl SubspaceSelector {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSelector("selector is empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSelector(format!(
                "indices must be strictly increasing, got {indices:?}"
            )));
        }
        Ok(Self { indices })
    }

    /// Selector with a parent-dimension check.
    pub fn for_dim(indices: Vec<usize>, parent_dim: usize) -> Result<Self> {
        let sel = Self::new(indices)?;
        sel.check_parent(parent_dim)?;
        Ok(sel)
    }

    pub fn all(dim: usize) -> Self {
        Self {
            indices: (0..dim).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn check_parent(&self, parent_dim: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last < parent_dim => Ok(()),
            Some(&last) => Err(Error::InvalidSelector(format!(
                "index {last} out of range for dimension {parent_dim}"
            ))),
            None => Err(Error::InvalidSelector("selector is empty".into())),
        }
    }

    /// Full-space projector onto the selected basis states.
    pub fn projector(&self, parent_dim: usize) -> Result<ComplexMatrix> {
        self.check_parent(parent_dim)?;
        let diag: Vec<Complex> = (0..parent_dim)
            .map(|i| {
                if self.contains(i) {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            })
            .collect();
        Ok(ComplexMatrix::diag(&diag))
    }
}

impl TryFrom<Vec<usize>> for SubspaceSelector {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SubspaceSelector> for Vec<usize> {
    fn from(s: SubspaceSelector) -> Self {
        s.indices
    }
}

/// Eigenvalue pair of a 2x2 normal map, ordered `|lambda0| <= |lambda1|`.
///
/// Ties in modulus are broken by the principal argument in `(-pi, pi]`, ascending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSpectrum {
    lambda0: Complex,
    lambda1: Complex,
}

impl QubitSpectrum {
    /// Canonicalizes the ordering of the pair.
    pub fn new(a: Complex, b: Complex) -> Result<Self> {
        if [a, b]
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("spectrum"));
        }
        let (lambda0, lambda1) = match canonical_order(a, b) {
            Ordering::Greater => (b, a),
            _ => (a, b),
        };
        Ok(Self { lambda0, lambda1 })
    }

    pub fn lambda0(&self) -> Complex {
        self.lambda0
    }

    pub fn lambda1(&self) -> Complex {
        self.lambda1
    }

    pub fn as_diag(&self) -> ComplexMatrix {
        ComplexMatrix::diag(&[self.lambda0, self.lambda1])
    }
}

fn canonical_order(a: Complex, b: Complex) -> Ordering {
    let (ra, rb) = (a.norm(), b.norm());
    let scale = ra.max(rb).max(f64::MIN_POSITIVE);
    if (ra - rb).abs() <= MODULUS_TIE_TOL * scale {
        principal_arg(a).total_cmp(&principal_arg(b))
    } else {
        ra.total_cmp(&rb)
    }
}

/// Argument in `(-pi, pi]`; `atan2` returns `-pi` for a negative real with `-0.0` imaginary part.
fn principal_arg(z: Complex) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// Eigenvalues of a 2x2 normal matrix from the characteristic quadratic.
pub fn eig2_normal(m: &ComplexMatrix, tol: f64) -> Result<QubitSpectrum> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.dim(),
        });
    }
    let defect = m.normality_defect();
    if defect > tol {
        return Err(Error::NotNormal { defect });
    }
    let (a, b, cc, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let tr = a + d;
    let det = a * d - b * cc;
    let half_gap = ((a - d) * (a - d) * 0.25 + b * cc).sqrt();
    let mean = tr * 0.5;
    // take the root of larger modulus first; recover the other from the determinant
    let (big, alt) = if (mean + half_gap).norm() >= (mean - half_gap).norm() {
        (mean + half_gap, mean - half_gap)
    } else {
        (mean - half_gap, mean + half_gap)
    };
    let small = if big.norm() > 0.0 { det / big } else { alt };
    QubitSpectrum::new(small, big)
}
