//! Certified simultaneous eigenvectors of `H` and `T`.
//!
//! Two independent routes produce them:
//!
//! - [`assemble_simultaneous`] diagonalizes each momentum block and lifts the
//!   eigenvectors back to the full space, so the momentum is exact by
//!   construction.
//! - [`assemble_simultaneous_oracle`] diagonalizes the dense `H`, clusters
//!   degenerate levels and diagonalizes `T` restricted to each cluster.
//!
//! In both routes degenerate subspaces are further resolved by the `Z_N`
//! charge `Q`, so every output carries well-defined `(k, q)` labels. Each
//! vector is certified against `‖Hv − Ev‖`, `‖Tv − τv‖` and `‖Qv − ω^q v‖`
//! before it is returned.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ChainError, Result};
use crate::model::{charge_permutation, HamiltonianBundle, PermutationOperator, TranslationOperator};
use crate::operator::ModelParams;
use crate::sectors::{build_all_sectors, charge_blocks, project_hamiltonian, MomentumSector};
use crate::tolerances::{Tolerances, DENSE_ORACLE_MAX_DIM};
use crate::{inner, root_of_unity, vector_norm, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖Hv − Ev‖`
    pub h_residual: f64,
    /// `‖Tv − e^{2πik/L} v‖`
    pub t_residual: f64,
    /// `‖Qv − ω^q v‖`
    pub q_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimultaneousEigenvector {
    pub energy: f64,
    /// `T` eigenvalue is `e^{2πik/L}`.
    pub momentum: usize,
    /// `Q` eigenvalue is `ω^q`.
    pub charge: usize,
    pub vector: Vec<C64>,
    pub residuals: Residuals,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub params: ModelParams,
    /// Sorted by energy (degenerate levels grouped), then momentum, then charge.
    pub eigenvectors: Vec<SimultaneousEigenvector>,
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
}

/// Eigenpairs of a Hermitian block, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: DMatrix<C64>,
}

fn fingerprint(m: &DMatrix<C64>) -> u64 {
    let mut h = DefaultHasher::new();
    m.nrows().hash(&mut h);
    for z in m.iter() {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Dense Hermitian eigendecomposition with a per-pair residual check
/// `‖Mv − λv‖ ≤ solver_tol·‖M‖` (Frobenius norm).
pub fn diagonalize_sector_with(m: &DMatrix<C64>, solver_tol: f64) -> Result<HermitianEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(ChainError::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if n == 0 {
        return Ok(HermitianEigen { values: Vec::new(), vectors: DMatrix::zeros(0, 0) });
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let norm = sym.norm();
    let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 10_000 + 100 * n).ok_or_else(|| {
        ChainError::NonConvergence { dim: n, fingerprint: fingerprint(m), frobenius: norm }
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    for (c, &lambda) in values.iter().enumerate() {
        let v = vectors.column(c);
        let res = (&sym * v - v * C64::new(lambda, 0.0)).norm();
        if res > solver_tol * norm.max(f64::MIN_POSITIVE) && res > f64::EPSILON {
            return Err(ChainError::Residual(format!(
                "solver pair {c} of {n}x{n} block: residual {res:e} > {solver_tol:e}·‖M‖ (‖M‖ = {norm:e}, fingerprint {:016x})",
                fingerprint(m)
            )));
        }
    }
    Ok(HermitianEigen { values, vectors })
}

pub fn diagonalize_sector(m: &DMatrix<C64>) -> Result<HermitianEigen> {
    diagonalize_sector_with(m, Tolerances::default().solver_residual)
}

/// Index ranges of consecutive values within `tol·(1+|E|)` of their neighbour.
pub fn degenerate_clusters(sorted: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        let split = i == sorted.len() || sorted[i] - sorted[i - 1] > tol * (1.0 + sorted[i - 1].abs());
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// `U_ij = <u_i|A u_j>` for an orthonormal set `u`.
pub fn restricted_operator(vectors: &[Vec<C64>], apply: &dyn Fn(&[C64]) -> Vec<C64>) -> DMatrix<C64> {
    let images: Vec<Vec<C64>> = vectors.iter().map(|u| apply(u)).collect();
    DMatrix::from_fn(vectors.len(), vectors.len(), |i, j| inner(&vectors[i], &images[j]))
}

/// Snap `z` to the nearest `order`-th root of unity, returning the exponent.
fn snap_to_root(z: C64, order: usize, tol: f64) -> Result<usize> {
    let k = (z.arg() * order as f64 / (2.0 * PI)).round() as i64;
    let k = k.rem_euclid(order as i64) as usize;
    let distance = (z - root_of_unity(k as i64, order)).norm();
    if distance > tol {
        return Err(ChainError::RootSnap { value: format!("{z}"), distance, order });
    }
    Ok(k)
}

/// Rotate an orthonormal set spanning an invariant subspace of the unitary `A`
/// (with `A^order = 1`) into `A` eigenvectors and label each by its exponent.
///
/// The restricted unitary `U` is diagonalized through the Hermitian matrix
/// `(e^{−iφ}U + e^{iφ}U†)/2`, `φ = π/(2·order)`, whose eigenvalues
/// `cos(2πk/order − φ)` are distinct for distinct `k`.
fn split_by_unitary(
    vectors: Vec<Vec<C64>>,
    apply: &dyn Fn(&[C64]) -> Vec<C64>,
    order: usize,
    tol: &Tolerances,
) -> Result<Vec<(usize, Vec<C64>)>> {
    if vectors.len() == 1 {
        let v = vectors.into_iter().next().expect("one vector");
        let z = inner(&v, &apply(&v));
        return Ok(vec![(snap_to_root(z, order, tol.root_snap)?, v)]);
    }
    let d = vectors.len();
    let u = restricted_operator(&vectors, apply);
    let unitarity = (u.adjoint() * &u - DMatrix::<C64>::identity(d, d)).camax();
    if unitarity > tol.eigen_residual {
        return Err(ChainError::Residual(format!(
            "restricted operator on a {d}-dimensional cluster is not unitary (defect {unitarity:e})"
        )));
    }
    let tilt = C64::from_polar(1.0, -PI / (2.0 * order as f64));
    let k = (&u * tilt + u.adjoint() * tilt.conj()) * C64::new(0.5, 0.0);
    let eig = diagonalize_sector_with(&k, tol.solver_residual)?;
    rotate(&vectors, &eig.vectors)
        .into_iter()
        .map(|w| {
            let z = inner(&w, &apply(&w));
            Ok((snap_to_root(z, order, tol.root_snap)?, w))
        })
        .collect()
}

/// Columns of `[u_0 … u_{d-1}] · Y`.
fn rotate(vectors: &[Vec<C64>], y: &DMatrix<C64>) -> Vec<Vec<C64>> {
    let dim = vectors[0].len();
    (0..y.ncols())
        .map(|c| {
            let mut w = vec![C64::default(); dim];
            for (j, uj) in vectors.iter().enumerate() {
                let coef = y[(j, c)];
                for (wi, x) in w.iter_mut().zip(uj) {
                    *wi += coef * x;
                }
            }
            w
        })
        .collect()
}

/// Make the first component of (near-)largest magnitude real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-10)).expect("max exists");
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = C64::new(v[pivot].norm(), 0.0);
}

struct Certifier<'a> {
    params: ModelParams,
    bundle: &'a HamiltonianBundle,
    t: &'a TranslationOperator,
    q: PermutationOperator,
    tol: Tolerances,
}

impl<'a> Certifier<'a> {
    fn new(bundle: &'a HamiltonianBundle, t: &'a TranslationOperator, tol: &Tolerances) -> Self {
        Self { params: bundle.params, bundle, t, q: charge_permutation(&bundle.params), tol: *tol }
    }

    fn certify(&self, mut v: Vec<C64>, momentum: usize, charge: usize) -> Result<SimultaneousEigenvector> {
        let norm = vector_norm(&v);
        for z in v.iter_mut() {
            *z /= norm;
        }
        fix_phase(&mut v);
        let norm = vector_norm(&v);
        if (norm - 1.0).abs() > 1e-13 {
            return Err(ChainError::Unnormalized { norm });
        }

        let hv = self.bundle.h.apply(&v);
        let rayleigh = inner(&v, &hv);
        let energy = rayleigh.re;
        if rayleigh.im.abs() > 1e-12 * (1.0 + energy.abs()) {
            return Err(ChainError::Residual(format!("Rayleigh quotient has imaginary part {:e}", rayleigh.im)));
        }
        let dist = |a: &[C64], b: &[C64], s: C64| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - s * y).norm_sqr()).sum::<f64>().sqrt()
        };
        let tau = root_of_unity(momentum as i64, self.params.length);
        let omega_q = root_of_unity(charge as i64, self.params.n_states);
        let residuals = Residuals {
            h_residual: dist(&hv, &v, C64::new(energy, 0.0)),
            t_residual: dist(&self.t.apply(&v), &v, tau),
            q_residual: dist(&self.q.apply(&v), &v, omega_q),
        };
        let tol = self.tol.eigen_residual;
        if residuals.h_residual > tol * (1.0 + energy.abs()) || residuals.t_residual > tol || residuals.q_residual > tol {
            return Err(ChainError::Residual(format!(
                "E={energy}, k={momentum}, q={charge}: h={:e}, t={:e}, q={:e}",
                residuals.h_residual, residuals.t_residual, residuals.q_residual
            )));
        }
        Ok(SimultaneousEigenvector { energy, momentum, charge, vector: v, residuals })
    }

    /// Label an approximately `(H, T)`-invariant group of momentum `k` by
    /// charge, then re-diagonalize `H` inside each charge group.
    fn split_charge_and_certify(&self, vectors: Vec<Vec<C64>>, momentum: usize) -> Result<Vec<SimultaneousEigenvector>> {
        let q = &self.q;
        let mut by_q: Vec<Vec<Vec<C64>>> = vec![Vec::new(); self.params.n_states];
        for (charge, v) in split_by_unitary(vectors, &|v| q.apply(v), self.params.n_states, &self.tol)? {
            by_q[charge].push(v);
        }
        let mut out = Vec::new();
        for (charge, group) in by_q.into_iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let hq = restricted_operator(&group, &|v| self.bundle.h.apply(v));
            let eig = diagonalize_sector_with(&hq, self.tol.solver_residual)?;
            for v in rotate(&group, &eig.vectors) {
                out.push(self.certify(v, momentum, charge)?);
            }
        }
        Ok(out)
    }
}

fn sector_eigenvectors(
    sector: &MomentumSector,
    certifier: &Certifier<'_>,
) -> Result<Vec<SimultaneousEigenvector>> {
    let tol = &certifier.tol;
    let block = project_hamiltonian(&certifier.bundle.h, sector, tol.leakage)?;
    let d = sector.dimension();
    let mut out = Vec::with_capacity(d);
    for cb in charge_blocks(sector, &certifier.q, tol.root_snap)? {
        let eig = diagonalize_sector_with(&cb.compress(&block), tol.solver_residual)?;
        for c in 0..cb.dimension() {
            let y: Vec<C64> = eig.vectors.column(c).iter().copied().collect();
            let v = sector.embed(&cb.lift(&y, d));
            out.push(certifier.certify(v, sector.momentum, cb.charge)?);
        }
    }
    Ok(out)
}

fn finish_report(params: ModelParams, mut evs: Vec<SimultaneousEigenvector>, tol: &Tolerances) -> SpectrumReport {
    evs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let energies: Vec<f64> = evs.iter().map(|e| e.energy).collect();
    for range in degenerate_clusters(&energies, tol.degeneracy) {
        evs[range].sort_by(|a, b| {
            (a.momentum, a.charge).cmp(&(b.momentum, b.charge)).then(a.energy.total_cmp(&b.energy))
        });
    }
    let ground_energy = energies.first().copied().unwrap_or(f64::NAN);
    let ground_degeneracy = energies
        .iter()
        .filter(|&&e| e - ground_energy <= tol.degeneracy * (1.0 + ground_energy.abs()))
        .count();
    SpectrumReport { params, eigenvectors: evs, ground_energy, ground_degeneracy }
}

/// Sector route restricted to the listed momenta (all momenta when `None`).
pub fn assemble_simultaneous_with(
    bundle: &HamiltonianBundle,
    t: &TranslationOperator,
    momenta: Option<&[usize]>,
    tol: &Tolerances,
) -> Result<SpectrumReport> {
    let params = bundle.params;
    let sectors = build_all_sectors(&params)?;
    let selected: Vec<&MomentumSector> = match momenta {
        None => sectors.iter().collect(),
        Some(ks) => {
            let mut ks = ks.to_vec();
            ks.sort_unstable();
            ks.dedup();
            ks.iter()
                .map(|&k| {
                    sectors.get(k).ok_or(ChainError::OutOfRange {
                        what: "momentum",
                        value: k as i64,
                        lo: 0,
                        hi: params.length as i64 - 1,
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    let certifier = Certifier::new(bundle, t, tol);
    let per_sector: Vec<Result<Vec<SimultaneousEigenvector>>> =
        selected.par_iter().map(|s| sector_eigenvectors(s, &certifier)).collect();
    let mut all = Vec::with_capacity(params.dim());
    for r in per_sector {
        all.extend(r?);
    }
    Ok(finish_report(params, all, tol))
}

/// Momentum-sector route over every sector.
pub fn assemble_simultaneous(
    params: &ModelParams,
    bundle: &HamiltonianBundle,
    t: &TranslationOperator,
) -> Result<SpectrumReport> {
    check_params(params, bundle)?;
    assemble_simultaneous_with(bundle, t, None, &Tolerances::default())
}

fn check_params(params: &ModelParams, bundle: &HamiltonianBundle) -> Result<()> {
    if *params != bundle.params {
        return Err(ChainError::InvalidParams("params do not match the Hamiltonian bundle".into()));
    }
    Ok(())
}

const ORACLE_GROUPING: f64 = 1e-3;

/// Dense route: cluster the full spectrum, then diagonalize `T` inside each cluster.
pub fn assemble_simultaneous_oracle_with(
    bundle: &HamiltonianBundle,
    t: &TranslationOperator,
    tol: &Tolerances,
) -> Result<SpectrumReport> {
    let params = bundle.params;
    let dim = params.dim();
    if dim > DENSE_ORACLE_MAX_DIM {
        return Err(ChainError::DimensionBudget {
            n_states: params.n_states,
            length: params.length,
            budget: DENSE_ORACLE_MAX_DIM,
        });
    }
    let eig = diagonalize_sector_with(&bundle.h.to_dense(), tol.solver_residual)?;
    let certifier = Certifier::new(bundle, t, tol);
    let mut all = Vec::with_capacity(dim);
    // Group loosely: levels closer than this may come back mixed from the
    // dense solver, and are re-separated by symmetry and Rayleigh–Ritz.
    let grouping = tol.degeneracy.max(ORACLE_GROUPING);
    for range in degenerate_clusters(&eig.values, grouping) {
        let cluster: Vec<Vec<C64>> =
            range.map(|c| eig.vectors.column(c).iter().copied().collect()).collect();
        let labelled = split_by_unitary(cluster, &|v| t.apply(v), params.length, tol)?;
        // group by momentum, then resolve charge within each group
        let mut by_k: Vec<Vec<Vec<C64>>> = vec![Vec::new(); params.length];
        for (k, v) in labelled {
            by_k[k].push(v);
        }
        for (k, group) in by_k.into_iter().enumerate() {
            if !group.is_empty() {
                all.extend(certifier.split_charge_and_certify(group, k)?);
            }
        }
    }
    Ok(finish_report(params, all, tol))
}

pub fn assemble_simultaneous_oracle(
    params: &ModelParams,
    bundle: &HamiltonianBundle,
    t: &TranslationOperator,
) -> Result<SpectrumReport> {
    check_params(params, bundle)?;
    assemble_simultaneous_oracle_with(bundle, t, &Tolerances::default())
}

/// Every eigenvector within the degeneracy tolerance of the lowest energy.
pub fn select_ground_states_with(report: &SpectrumReport, tol: &Tolerances) -> Vec<SimultaneousEigenvector> {
    let e0 = report.ground_energy;
    report
        .eigenvectors
        .iter()
        .filter(|e| e.energy - e0 <= tol.degeneracy * (1.0 + e0.abs()))
        .cloned()
        .collect()
}

pub fn select_ground_states(report: &SpectrumReport) -> Vec<SimultaneousEigenvector> {
    select_ground_states_with(report, &Tolerances::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteComparison {
    pub max_energy_difference: f64,
    pub momentum_multisets_match: bool,
    pub charge_multisets_match: bool,
}

impl RouteComparison {
    pub fn agrees(&self, tol: f64) -> bool {
        self.max_energy_difference <= tol && self.momentum_multisets_match
    }
}

/// Compare two reports level by level. Levels are the degenerate clusters of `a`.
pub fn compare_routes(a: &SpectrumReport, b: &SpectrumReport, tol: &Tolerances) -> RouteComparison {
    if a.eigenvectors.len() != b.eigenvectors.len() {
        return RouteComparison {
            max_energy_difference: f64::INFINITY,
            momentum_multisets_match: false,
            charge_multisets_match: false,
        };
    }
    let ea: Vec<f64> = a.eigenvectors.iter().map(|e| e.energy).collect();
    let max_energy_difference = ea
        .iter()
        .zip(&b.eigenvectors)
        .map(|(x, y)| (x - y.energy).abs())
        .fold(0.0, f64::max);
    let mut momentum_ok = true;
    let mut charge_ok = true;
    for range in degenerate_clusters(&ea, tol.degeneracy) {
        let labels = |r: &SpectrumReport| {
            let mut ks: Vec<usize> = r.eigenvectors[range.clone()].iter().map(|e| e.momentum).collect();
            let mut kq: Vec<(usize, usize)> =
                r.eigenvectors[range.clone()].iter().map(|e| (e.momentum, e.charge)).collect();
            ks.sort_unstable();
            kq.sort_unstable();
            (ks, kq)
        };
        let (ka, qa) = labels(a);
        let (kb, qb) = labels(b);
        momentum_ok &= ka == kb;
        charge_ok &= qa == qb;
    }
    RouteComparison { max_energy_difference, momentum_multisets_match: momentum_ok, charge_multisets_match: charge_ok }
}

/// Dense complex Gaussian matrix.
pub fn random_operator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// `|<ψ|T^{−m} O T^m|ψ> − <ψ|O|ψ>|`.
pub fn translated_expectation_residual(psi: &[C64], t: &TranslationOperator, op: &DMatrix<C64>, m: usize) -> f64 {
    let expect = |v: &[C64]| -> C64 {
        let ov = op * nalgebra::DVector::from_column_slice(v);
        inner(v, ov.as_slice())
    };
    let mut shifted = psi.to_vec();
    for _ in 0..m {
        shifted = t.apply(&shifted);
    }
    (expect(&shifted) - expect(psi)).norm()
}
