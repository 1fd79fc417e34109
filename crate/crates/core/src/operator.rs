//! Clock and shift operators on one site, and their embedding into the chain.
//!
//! Product-basis convention: site 0 is the most significant base-`N` digit of
//! the flat index, so `index = Σ_j digit_j · N^{L-1-j}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{ChainError, Result};
use crate::tolerances::{DEFAULT_DIM_BUDGET, DROP_TOLERANCE};
use crate::{root_of_unity, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_states: usize,
    pub length: usize,
    pub coupling: f64,
}

impl ModelParams {
    pub fn new(n_states: usize, length: usize, coupling: f64) -> Result<Self> {
        Self::with_budget(n_states, length, coupling, DEFAULT_DIM_BUDGET)
    }

    /// Same as [`ModelParams::new`] with an explicit cap on `N^L`.
    pub fn with_budget(n_states: usize, length: usize, coupling: f64, budget: usize) -> Result<Self> {
        if n_states < 2 {
            return Err(ChainError::InvalidParams(format!("n_states must be >= 2, got {n_states}")));
        }
        if length < 2 {
            return Err(ChainError::InvalidParams(format!("length must be >= 2, got {length}")));
        }
        if !coupling.is_finite() {
            return Err(ChainError::InvalidParams(format!("coupling must be finite, got {coupling}")));
        }
        let over = ChainError::DimensionBudget { n_states, length, budget };
        let exp = u32::try_from(length).map_err(|_| ChainError::DimensionBudget { n_states, length, budget })?;
        match n_states.checked_pow(exp) {
            Some(d) if d <= budget => Ok(Self { n_states, length, coupling }),
            _ => Err(over),
        }
    }

    /// Hilbert space dimension `N^L`.
    pub fn dim(&self) -> usize {
        self.n_states.pow(self.length as u32)
    }

    /// `N^{L-1-site}`, the place value of a site's digit.
    pub fn stride(&self, site: usize) -> usize {
        self.n_states.pow((self.length - 1 - site) as u32)
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self { coupling, ..*self }
    }
}

/// A product-basis configuration `|a_0 a_1 … a_{L-1}>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisConfig {
    pub digits: Vec<usize>,
    pub index: usize,
}

impl BasisConfig {
    pub fn from_index(index: usize, params: &ModelParams) -> Self {
        let n = params.n_states;
        let mut digits = vec![0; params.length];
        let mut rest = index;
        for d in digits.iter_mut().rev() {
            *d = rest % n;
            rest /= n;
        }
        Self { digits, index }
    }

    pub fn from_digits(digits: &[usize], params: &ModelParams) -> Result<Self> {
        if digits.len() != params.length {
            return Err(ChainError::DimensionMismatch { expected: params.length, got: digits.len() });
        }
        let mut index = 0;
        for &d in digits {
            if d >= params.n_states {
                return Err(ChainError::OutOfRange {
                    what: "digit",
                    value: d as i64,
                    lo: 0,
                    hi: params.n_states as i64 - 1,
                });
            }
            index = index * params.n_states + d;
        }
        Ok(Self { digits: digits.to_vec(), index })
    }
}

/// Digit of `site` in the flat `index`.
#[inline]
pub fn digit_at(index: usize, site: usize, params: &ModelParams) -> usize {
    (index / params.stride(site)) % params.n_states
}

/// What a local operator is known to be, so powers can be taken exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalKind {
    /// `Z^p`
    Clock(usize),
    /// `X^p`
    Shift(usize),
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    dim: usize,
    entries: DMatrix<C64>,
    kind: LocalKind,
}

impl LocalOperator {
    /// Wrap an arbitrary square matrix.
    pub fn from_matrix(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() < 2 {
            return Err(ChainError::InvalidParams(format!(
                "local operator must be square with dim >= 2, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { dim: entries.nrows(), entries, kind: LocalKind::General })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_states(dim)?;
        Ok(Self { dim, entries: DMatrix::identity(dim, dim), kind: LocalKind::Clock(0) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn kind(&self) -> LocalKind {
        self.kind
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let kind = match self.kind {
            LocalKind::Clock(p) => LocalKind::Clock((n - p) % n),
            LocalKind::Shift(p) => LocalKind::Shift((n - p) % n),
            LocalKind::General => LocalKind::General,
        };
        Self { dim: n, entries: self.entries.adjoint(), kind }
    }
}

fn check_states(n_states: usize) -> Result<()> {
    if n_states < 2 {
        return Err(ChainError::InvalidParams(format!("n_states must be >= 2, got {n_states}")));
    }
    Ok(())
}

fn clock_power(n: usize, p: usize) -> LocalOperator {
    let entries = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            root_of_unity((a * p) as i64, n)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    LocalOperator { dim: n, entries, kind: LocalKind::Clock(p % n) }
}

fn shift_power(n: usize, p: usize) -> LocalOperator {
    let entries = DMatrix::from_fn(n, n, |a, b| {
        if a == (b + p) % n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    LocalOperator { dim: n, entries, kind: LocalKind::Shift(p % n) }
}

/// `Z = diag(1, ω, …, ω^{N-1})`, `ω = e^{2πi/N}`.
pub fn build_z(n_states: usize) -> Result<LocalOperator> {
    check_states(n_states)?;
    Ok(clock_power(n_states, 1))
}

/// Cyclic shift, `X_{ab} = 1` iff `a ≡ b+1 (mod N)`.
pub fn build_x(n_states: usize) -> Result<LocalOperator> {
    check_states(n_states)?;
    Ok(shift_power(n_states, 1))
}

/// `op^r` for `0 <= r < N`. Clock and shift powers are generated in closed form.
pub fn local_power(op: &LocalOperator, r: usize) -> Result<LocalOperator> {
    let n = op.dim;
    if r >= n {
        return Err(ChainError::OutOfRange { what: "power", value: r as i64, lo: 0, hi: n as i64 - 1 });
    }
    Ok(match op.kind {
        LocalKind::Clock(p) => clock_power(n, (p * r) % n),
        LocalKind::Shift(p) => shift_power(n, (p * r) % n),
        LocalKind::General => {
            let mut acc = DMatrix::identity(n, n);
            for _ in 0..r {
                acc = &acc * &op.entries;
            }
            LocalOperator { dim: n, entries: acc, kind: LocalKind::General }
        }
    })
}

/// Sparse operator on the `N^L`-dimensional chain space, stored row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyOperator {
    matrix: CsMat<C64>,
    hermitian_hint: bool,
}

impl ManyBodyOperator {
    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// entries below the drop tolerance pruned.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut tri = TriMat::new((dim, dim));
        for (r, c, v) in triplets {
            tri.add_triplet(r, c, v);
        }
        Self::from_csr(tri.to_csr())
    }

    fn from_csr(matrix: CsMat<C64>) -> Self {
        let dim = matrix.rows();
        let mut tri = TriMat::new((dim, dim));
        for (v, (r, c)) in matrix.iter() {
            if v.norm() >= DROP_TOLERANCE {
                tri.add_triplet(r, c, *v);
            }
        }
        Self { matrix: tri.to_csr(), hermitian_hint: false }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: CsMat::eye(dim), hermitian_hint: true }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_triplets(values.len(), values.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn csr(&self) -> &CsMat<C64> {
        &self.matrix
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    /// Stored entry at `(row, col)`, zero if absent.
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix.get(row, col).copied().unwrap_or_default()
    }

    /// `(col, value)` pairs of one row.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let v = self.matrix.outer_view(row).expect("row in range");
        v.iter().map(|(c, x)| (c, *x)).collect::<Vec<_>>().into_iter()
    }

    pub fn is_diagonal(&self) -> bool {
        self.matrix.iter().all(|(_, (r, c))| r == c)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim(), "vector length must match operator dimension");
        self.matrix
            .outer_iterator()
            .map(|row| row.iter().map(|(c, x)| x * v[c]).sum())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let dim = self.dim();
        let mut tri = TriMat::new((dim, dim));
        for (v, (r, c)) in self.matrix.iter() {
            tri.add_triplet(c, r, v.conj());
        }
        Self { matrix: tri.to_csr(), hermitian_hint: self.hermitian_hint }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_csr(&self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_csr(&self.matrix - &other.matrix)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_csr(self.matrix.map(|x| x * s))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        Self::from_csr(&self.matrix * &other.matrix)
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Largest entry magnitude, `‖M‖_max`.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|(v, _)| v.norm()).fold(0.0, f64::max)
    }

    /// `‖M − M†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Set the Hermitian hint after checking `‖M − M†‖ ≤ tol·(1+‖M‖)`.
    pub fn mark_hermitian(mut self, tol: f64) -> Result<Self> {
        let defect = self.hermiticity_defect();
        let bound = tol * (1.0 + self.max_abs());
        if defect > bound {
            return Err(ChainError::Residual(format!(
                "operator marked Hermitian has defect {defect:e} > {bound:e}"
            )));
        }
        self.hermitian_hint = true;
        Ok(self)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (v, (r, c)) in self.matrix.iter() {
            m[(r, c)] += *v;
        }
        m
    }
}

/// `id^{⊗site} ⊗ op ⊗ id^{⊗(L-1-site)}`.
pub fn embed_at_site(op: &LocalOperator, site: usize, params: &ModelParams) -> Result<ManyBodyOperator> {
    if site >= params.length {
        return Err(ChainError::OutOfRange {
            what: "site",
            value: site as i64,
            lo: 0,
            hi: params.length as i64 - 1,
        });
    }
    if op.dim != params.n_states {
        return Err(ChainError::DimensionMismatch { expected: params.n_states, got: op.dim });
    }
    let n = params.n_states;
    let stride = params.stride(site);
    let dim = params.dim();
    let mut columns: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
    for b in 0..n {
        for a in 0..n {
            let v = op.entries[(a, b)];
            if v.norm() >= DROP_TOLERANCE {
                columns[b].push((a, v));
            }
        }
    }
    let mut triplets = Vec::with_capacity(dim * columns.iter().map(Vec::len).max().unwrap_or(0));
    for col in 0..dim {
        let b = (col / stride) % n;
        let base = col - b * stride;
        for &(a, v) in &columns[b] {
            triplets.push((base + a * stride, col, v));
        }
    }
    Ok(ManyBodyOperator::from_triplets(dim, triplets))
}
