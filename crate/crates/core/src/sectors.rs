//! Cyclic orbits of product configurations and the momentum sectors built from them.
//!
//! For an orbit with representative `|c>` and period `p`, the momentum-`k`
//! basis vector is
//!
//! ```text
//! |c; k> = p^{-1/2} Σ_{m=0}^{p-1} e^{−2πikm/L} T^m |c>
//! ```
//!
//! which is nonzero iff `k·p ≡ 0 (mod L)` and satisfies `T|c; k> = e^{2πik/L}|c; k>`.
//! Vectors from different orbits have disjoint support.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{ChainError, Result};
use crate::model::{build_translation, PermutationOperator, TranslationOperator};
use crate::operator::{BasisConfig, ManyBodyOperator, ModelParams};
use crate::{root_of_unity, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicOrbit {
    /// Lexicographically smallest rotation.
    pub representative: BasisConfig,
    pub period: usize,
    /// `members[m] = T^m |representative>` as flat indices.
    pub members: Vec<usize>,
}

impl CyclicOrbit {
    /// Whether this orbit contributes a vector to momentum `k`.
    pub fn supports(&self, k: usize, length: usize) -> bool {
        (k * self.period).is_multiple_of(length)
    }
}

/// Every orbit of the chain together with a reverse lookup from configuration
/// to `(orbit, position)`.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    pub params: ModelParams,
    pub orbits: Vec<CyclicOrbit>,
    location: Vec<(u32, u32)>,
}

impl OrbitTable {
    pub fn new(params: &ModelParams) -> Self {
        let t = build_translation(params);
        Self::from_translation(&t)
    }

    pub fn from_translation(t: &TranslationOperator) -> Self {
        let params = t.params;
        let dim = params.dim();
        let mut location = vec![(u32::MAX, 0u32); dim];
        let mut orbits = Vec::new();
        // The first unvisited index is the smallest member of its orbit.
        for start in 0..dim {
            if location[start].0 != u32::MAX {
                continue;
            }
            let id = orbits.len() as u32;
            let mut members = vec![start];
            location[start] = (id, 0);
            let mut next = t.image(start);
            while next != start {
                location[next] = (id, members.len() as u32);
                members.push(next);
                next = t.image(next);
            }
            orbits.push(CyclicOrbit {
                representative: BasisConfig::from_index(start, &params),
                period: members.len(),
                members,
            });
        }
        Self { params, orbits, location }
    }

    /// `(orbit id, position m)` with `config = T^m |rep>`.
    pub fn locate(&self, config: usize) -> (usize, usize) {
        let (o, m) = self.location[config];
        (o as usize, m as usize)
    }
}

pub fn enumerate_orbits(params: &ModelParams) -> Vec<CyclicOrbit> {
    OrbitTable::new(params).orbits
}

/// The `T = e^{2πik/L}` eigenspace, spanned by one vector per compatible orbit.
#[derive(Debug, Clone)]
pub struct MomentumSector {
    pub momentum: usize,
    table: Arc<OrbitTable>,
    /// Orbit ids, in ascending order, forming the sector basis.
    basis: Vec<usize>,
    /// Orbit id -> sector coordinate.
    local: Vec<Option<u32>>,
    /// `e^{−2πikm/L}` for `m = 0..L`.
    phases: Vec<C64>,
}

impl MomentumSector {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn length(&self) -> usize {
        self.table.params.length
    }

    pub fn table(&self) -> &OrbitTable {
        &self.table
    }

    pub fn orbit_ids(&self) -> &[usize] {
        &self.basis
    }

    /// `e^{2πik/L}`.
    pub fn eigenvalue(&self) -> C64 {
        root_of_unity(self.momentum as i64, self.length())
    }

    /// Amplitude of sector basis vector built on `orbit` at position `m`.
    fn coefficient(&self, orbit: usize, m: usize) -> C64 {
        let p = self.table.orbits[orbit].period as f64;
        self.phases[m] / p.sqrt()
    }

    /// Full-space sector basis vector `a`.
    pub fn basis_vector(&self, a: usize) -> Vec<C64> {
        let mut coords = vec![C64::default(); self.dimension()];
        coords[a] = C64::new(1.0, 0.0);
        self.embed(&coords)
    }

    /// Map sector coordinates to full-space amplitudes.
    pub fn embed(&self, coords: &[C64]) -> Vec<C64> {
        assert_eq!(coords.len(), self.dimension());
        let mut out = vec![C64::default(); self.table.params.dim()];
        for (&orbit, &x) in self.basis.iter().zip(coords) {
            for (m, &c) in self.table.orbits[orbit].members.iter().enumerate() {
                out[c] = x * self.coefficient(orbit, m);
            }
        }
        out
    }

    /// `max_a ‖T v_a − e^{2πik/L} v_a‖`, evaluated on each vector's support.
    pub fn momentum_defect(&self, t: &TranslationOperator) -> f64 {
        let tau = self.eigenvalue();
        let mut worst: f64 = 0.0;
        for &orbit in &self.basis {
            let members = &self.table.orbits[orbit].members;
            let p = members.len();
            let mut err = 0.0;
            for (m, &c) in members.iter().enumerate() {
                // T maps member m onto member m+1
                let (o, target) = self.table.locate(t.image(c));
                if o != orbit || target != (m + 1) % p {
                    return f64::INFINITY;
                }
                let image = self.coefficient(orbit, m);
                err += (image - tau * self.coefficient(orbit, target)).norm_sqr();
            }
            worst = worst.max(err.sqrt());
        }
        worst
    }

    /// `max_a |‖v_a‖ − 1|`. Distinct basis vectors have disjoint support, so
    /// this is the only nontrivial entry of the Gram matrix.
    pub fn normalization_defect(&self) -> f64 {
        self.basis
            .iter()
            .map(|&orbit| {
                let p = self.table.orbits[orbit].period;
                let n2: f64 = (0..p).map(|m| self.coefficient(orbit, m).norm_sqr()).sum();
                (n2.sqrt() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Sector coordinates `<v_a|ψ>` of a full-space vector.
    pub fn restrict(&self, psi: &[C64]) -> Vec<C64> {
        self.basis
            .iter()
            .map(|&orbit| {
                self.table.orbits[orbit]
                    .members
                    .iter()
                    .enumerate()
                    .map(|(m, &c)| self.coefficient(orbit, m).conj() * psi[c])
                    .sum()
            })
            .collect()
    }
}

pub fn build_sector(k: usize, table: &Arc<OrbitTable>) -> Result<MomentumSector> {
    let l = table.params.length;
    if k >= l {
        return Err(ChainError::OutOfRange { what: "momentum", value: k as i64, lo: 0, hi: l as i64 - 1 });
    }
    let mut local = vec![None; table.orbits.len()];
    let mut basis = Vec::new();
    for (id, orbit) in table.orbits.iter().enumerate() {
        if orbit.supports(k, l) {
            local[id] = Some(basis.len() as u32);
            basis.push(id);
        }
    }
    let phases = (0..l).map(|m| root_of_unity(-((k * m) as i64), l)).collect();
    Ok(MomentumSector { momentum: k, table: Arc::clone(table), basis, local, phases })
}

/// All `L` momentum sectors.
pub fn build_all_sectors(params: &ModelParams) -> Result<Vec<MomentumSector>> {
    let table = Arc::new(OrbitTable::new(params));
    (0..params.length).map(|k| build_sector(k, &table)).collect()
}

/// `H v_b` accumulated over the support of `v_b`, keyed by configuration.
fn apply_to_basis_vector(h_columns: &ManyBodyOperator, sector: &MomentumSector, b: usize) -> BTreeMap<usize, C64> {
    let orbit = sector.basis[b];
    let mut w = BTreeMap::new();
    for (m, &c) in sector.table.orbits[orbit].members.iter().enumerate() {
        let coef = sector.coefficient(orbit, m);
        // row c of H† is the conjugate of column c of H
        for (row, x) in h_columns.row(c) {
            *w.entry(row).or_insert_with(C64::default) += x.conj() * coef;
        }
    }
    w
}

/// Sector matrix `S_ab = <v_a|H|v_b>` and the largest leakage `‖(1−P_k) H v_b‖`.
pub fn project_with_leakage(h: &ManyBodyOperator, sector: &MomentumSector) -> (DMatrix<C64>, f64) {
    let h_adj = h.adjoint();
    let dim = sector.dimension();
    let mut s = DMatrix::zeros(dim, dim);
    let mut worst: f64 = 0.0;
    for b in 0..dim {
        let w = apply_to_basis_vector(&h_adj, sector, b);
        let mut overlaps: BTreeMap<usize, C64> = BTreeMap::new();
        let mut leak2 = 0.0;
        for (&c, &x) in &w {
            let (orbit, m) = sector.table.locate(c);
            if sector.local[orbit].is_some() {
                *overlaps.entry(orbit).or_default() += sector.coefficient(orbit, m).conj() * x;
            } else {
                leak2 += x.norm_sqr();
            }
        }
        for (&orbit, &ov) in &overlaps {
            let a = sector.local[orbit].expect("compatible orbit") as usize;
            s[(a, b)] = ov;
            for (m, &c) in sector.table.orbits[orbit].members.iter().enumerate() {
                let wc = w.get(&c).copied().unwrap_or_default();
                leak2 += (wc - sector.coefficient(orbit, m) * ov).norm_sqr();
            }
        }
        worst = worst.max(leak2.sqrt());
    }
    (s, worst)
}

/// Dense sector block of `H`, symmetrized. Fails if `H` leaks out of the sector.
pub fn project_hamiltonian(h: &ManyBodyOperator, sector: &MomentumSector, leakage_tol: f64) -> Result<DMatrix<C64>> {
    let (s, leakage) = project_with_leakage(h, sector);
    if leakage > leakage_tol {
        return Err(ChainError::SymmetryLeak { momentum: sector.momentum, leakage, tolerance: leakage_tol });
    }
    Ok((&s + s.adjoint()) * C64::new(0.5, 0.0))
}

/// Orthonormal basis of one `(k, q)` block, as sparse sector coordinates.
#[derive(Clone, Debug)]
pub struct ChargeBlock {
    pub charge: usize,
    pub columns: Vec<Vec<(usize, C64)>>,
}

impl ChargeBlock {
    pub fn dimension(&self) -> usize {
        self.columns.len()
    }

    /// Sector coordinates of `Σ_b y_b w_b`.
    pub fn lift(&self, y: &[C64], sector_dim: usize) -> Vec<C64> {
        let mut out = vec![C64::default(); sector_dim];
        for (col, &yb) in self.columns.iter().zip(y) {
            for &(a, x) in col {
                out[a] += yb * x;
            }
        }
        out
    }

    /// `W† S W` for a dense sector matrix `S`, symmetrized.
    pub fn compress(&self, s: &DMatrix<C64>) -> DMatrix<C64> {
        let m = self.dimension();
        let d = s.nrows();
        let sw: Vec<Vec<C64>> = self
            .columns
            .iter()
            .map(|col| {
                let mut v = vec![C64::default(); d];
                for &(j, x) in col {
                    for (vi, sij) in v.iter_mut().zip(s.column(j).iter()) {
                        *vi += sij * x;
                    }
                }
                v
            })
            .collect();
        let c = DMatrix::from_fn(m, m, |a, b| self.columns[a].iter().map(|&(i, y)| y.conj() * sw[b][i]).sum());
        (&c + c.adjoint()) * C64::new(0.5, 0.0)
    }
}

/// Split a momentum sector into charge blocks.
///
/// `Q` commutes with `T`, so it sends each sector basis vector to a phase
/// times another one: `Q v_a = e^{2πiks/L} v_a'` where `s` is the position of
/// `Q·rep(a)` inside its own orbit. The eigenvectors of `Q` then follow in
/// closed form from the cycles of `a -> a'`.
pub fn charge_blocks(sector: &MomentumSector, q: &PermutationOperator, root_tol: f64) -> Result<Vec<ChargeBlock>> {
    let n = sector.table.params.n_states;
    let l = sector.length();
    let d = sector.dimension();
    let mut image = Vec::with_capacity(d);
    for &orbit in &sector.basis {
        let rep = sector.table.orbits[orbit].members[0];
        let (target, s) = sector.table.locate(q.image(rep));
        let a = sector.local[target].ok_or(ChainError::SymmetryLeak {
            momentum: sector.momentum,
            leakage: 1.0,
            tolerance: root_tol,
        })? as usize;
        image.push((a, root_of_unity((sector.momentum * s) as i64, l)));
    }

    let mut columns: Vec<Vec<Vec<(usize, C64)>>> = vec![Vec::new(); n];
    let mut seen = vec![false; d];
    for start in 0..d {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut a = start;
        while !seen[a] {
            seen[a] = true;
            cycle.push(a);
            a = image[a].0;
        }
        if a != start {
            return Err(ChainError::Residual("charge operator does not permute the sector basis".into()));
        }
        let c = cycle.len();
        let total: C64 = cycle.iter().map(|&a| image[a].1).product();
        let mut found = 0;
        for charge in 0..n {
            if (root_of_unity((charge * c) as i64, n) - total).norm() > root_tol {
                continue;
            }
            let mu = root_of_unity(charge as i64, n);
            let mut beta = C64::new(1.0 / (c as f64).sqrt(), 0.0);
            let mut col = Vec::with_capacity(c);
            for &a in &cycle {
                col.push((a, beta));
                beta = beta * image[a].1 / mu;
            }
            columns[charge].push(col);
            found += 1;
        }
        if found != c {
            return Err(ChainError::RootSnap { value: format!("{total}"), distance: f64::NAN, order: n });
        }
    }
    Ok(columns
        .into_iter()
        .enumerate()
        .filter(|(_, cols)| !cols.is_empty())
        .map(|(charge, columns)| ChargeBlock { charge, columns })
        .collect())
}
