//! The superintegrable chiral Potts Hamiltonian, the one-site translation and
//! the global `Z_N` charge.
//!
//! ```text
//! H  = A0 + λ A1
//! A0 = − Σ_j Σ_{r=1}^{N-1} c_r Z_j^r Z_{j+1}^{†r}
//! A1 = − Σ_j Σ_{r=1}^{N-1} c_r X_j^r
//! c_r = e^{iπ(2r−N)/(2N)} / sin(πr/N)
//! ```
//!
//! Sites are periodic. `c_{N−r} = conj(c_r)`, which is what makes both
//! sums Hermitian.

use std::f64::consts::PI;

use crate::error::{ChainError, Result};
use crate::operator::{digit_at, ManyBodyOperator, ModelParams};
use crate::tolerances::Tolerances;
use crate::{root_of_unity, C64};

/// `c_r = e^{iπ(2r−N)/(2N)} / sin(πr/N)` for `1 <= r <= N−1`.
pub fn chiral_potts_coefficient(r: usize, n_states: usize) -> Result<C64> {
    if n_states < 2 {
        return Err(ChainError::InvalidParams(format!("n_states must be >= 2, got {n_states}")));
    }
    if r == 0 || r >= n_states {
        return Err(ChainError::OutOfRange {
            what: "r",
            value: r as i64,
            lo: 1,
            hi: n_states as i64 - 1,
        });
    }
    let n = n_states as f64;
    let r = r as f64;
    let phase = C64::from_polar(1.0, PI * (2.0 * r - n) / (2.0 * n));
    Ok(phase / (PI * r / n).sin())
}

fn coefficients(n_states: usize) -> Vec<C64> {
    (1..n_states)
        .map(|r| chiral_potts_coefficient(r, n_states).expect("r in range"))
        .collect()
}

/// Diagonal of `A0`: each configuration picks up `−Σ_r c_r ω^{r(a_j − a_{j+1})}` per bond.
pub fn a0_diagonal(params: &ModelParams) -> Vec<C64> {
    let n = params.n_states;
    let l = params.length;
    let coeffs = coefficients(n);
    // bond energy as a function of the digit difference mod N
    let bond: Vec<C64> = (0..n)
        .map(|d| {
            -coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * root_of_unity(((i + 1) * d) as i64, n))
                .sum::<C64>()
        })
        .collect();
    (0..params.dim())
        .map(|idx| {
            (0..l)
                .map(|j| {
                    let a = digit_at(idx, j, params);
                    let b = digit_at(idx, (j + 1) % l, params);
                    bond[(a + n - b) % n]
                })
                .sum()
        })
        .collect()
}

pub fn build_a0(params: &ModelParams) -> Result<ManyBodyOperator> {
    Ok(ManyBodyOperator::diagonal(&a0_diagonal(params)))
}

pub fn build_a1(params: &ModelParams) -> Result<ManyBodyOperator> {
    let n = params.n_states;
    let coeffs = coefficients(n);
    let dim = params.dim();
    let mut triplets = Vec::with_capacity(dim * params.length * (n - 1));
    for col in 0..dim {
        for j in 0..params.length {
            let stride = params.stride(j);
            let d = digit_at(col, j, params);
            let base = col - d * stride;
            for (i, c) in coeffs.iter().enumerate() {
                let target = (d + i + 1) % n;
                triplets.push((base + target * stride, col, -c));
            }
        }
    }
    Ok(ManyBodyOperator::from_triplets(dim, triplets))
}

#[derive(Debug, Clone)]
pub struct HamiltonianBundle {
    pub params: ModelParams,
    pub a0: ManyBodyOperator,
    pub a1: ManyBodyOperator,
    pub h: ManyBodyOperator,
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<HamiltonianBundle> {
    let tol = Tolerances::default().hermiticity;
    let a0 = build_a0(params)?.mark_hermitian(tol)?;
    let a1 = build_a1(params)?.mark_hermitian(tol)?;
    let h = a0.add(&a1.scale(C64::new(params.coupling, 0.0))).mark_hermitian(tol)?;
    Ok(HamiltonianBundle { params: *params, a0, a1, h })
}

/// A basis permutation `P|c> = |π(c)>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationOperator {
    pub permutation: Vec<usize>,
}

impl PermutationOperator {
    pub fn dim(&self) -> usize {
        self.permutation.len()
    }

    pub fn image(&self, index: usize) -> usize {
        self.permutation[index]
    }

    /// `(P v)[π(c)] = v[c]`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); v.len()];
        for (c, &x) in v.iter().enumerate() {
            out[self.permutation[c]] = x;
        }
        out
    }

    /// `(P^{-1} v)[c] = v[π(c)]`.
    pub fn apply_inverse(&self, v: &[C64]) -> Vec<C64> {
        self.permutation.iter().map(|&p| v[p]).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.dim()];
        for (c, &p) in self.permutation.iter().enumerate() {
            inv[p] = c;
        }
        Self { permutation: inv }
    }

    /// `P^m` for `m >= 0`.
    pub fn power(&self, m: usize) -> Self {
        let mut perm: Vec<usize> = (0..self.dim()).collect();
        for _ in 0..m {
            perm = perm.iter().map(|&c| self.permutation[c]).collect();
        }
        Self { permutation: perm }
    }

    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.dim()];
        for &p in &self.permutation {
            if p >= seen.len() || seen[p] {
                return false;
            }
            seen[p] = true;
        }
        true
    }

    pub fn to_operator(&self) -> ManyBodyOperator {
        let one = C64::new(1.0, 0.0);
        ManyBodyOperator::from_triplets(
            self.dim(),
            self.permutation.iter().enumerate().map(|(c, &p)| (p, c, one)),
        )
    }
}

/// One-site translation with `T Z_j T^{-1} = Z_{j+1}`: the content of site
/// `j` moves to site `j+1`, so `(a_0,…,a_{L-1}) → (a_{L-1},a_0,…,a_{L-2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationOperator {
    pub params: ModelParams,
    pub perm: PermutationOperator,
}

impl std::ops::Deref for TranslationOperator {
    type Target = PermutationOperator;

    fn deref(&self) -> &PermutationOperator {
        &self.perm
    }
}

pub fn build_translation(params: &ModelParams) -> TranslationOperator {
    let n = params.n_states;
    let top = params.stride(0);
    let permutation = (0..params.dim()).map(|i| (i % n) * top + i / n).collect();
    TranslationOperator { params: *params, perm: PermutationOperator { permutation } }
}

/// `Q = Π_j X_j` as a permutation: every digit advances by one.
pub fn charge_permutation(params: &ModelParams) -> PermutationOperator {
    let n = params.n_states;
    let permutation = (0..params.dim())
        .map(|idx| {
            (0..params.length).fold(0, |acc, j| acc * n + (digit_at(idx, j, params) + 1) % n)
        })
        .collect();
    PermutationOperator { permutation }
}

/// The `Z_N` charge `Q = Π_j X_j`; only used to label eigenvectors.
pub fn build_charge(params: &ModelParams) -> ManyBodyOperator {
    charge_permutation(params).to_operator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{build_x, build_z, embed_at_site, local_power};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coefficient_values() {
        assert!((chiral_potts_coefficient(1, 2).unwrap() - c(1., 0.)).norm() < 1e-15);
        // N=3, r=1: e^{-iπ/6}/sin(π/3) = 1 − i/√3
        let c31 = chiral_potts_coefficient(1, 3).unwrap();
        assert!((c31 - c(1.0, -1.0 / 3f64.sqrt())).norm() < 1e-15);
        assert!((c31.im + 0.577350269189626).abs() < 1e-12);
        assert!(chiral_potts_coefficient(0, 3).is_err());
        assert!(chiral_potts_coefficient(3, 3).is_err());
    }

    #[test]
    fn coefficient_conjugation_identity() {
        for n in 2..=8 {
            for r in 1..n {
                let a = chiral_potts_coefficient(r, n).unwrap();
                let b = chiral_potts_coefficient(n - r, n).unwrap();
                assert!((a - b.conj()).norm() < 1e-14, "N={n} r={r}");
            }
        }
    }

    #[test]
    fn a0_uniform_config_n3() {
        let p = ModelParams::new(3, 3, 0.0).unwrap();
        let a0 = build_a0(&p).unwrap();
        let sum = chiral_potts_coefficient(1, 3).unwrap() + chiral_potts_coefficient(2, 3).unwrap();
        assert!((sum - c(2., 0.)).norm() < 1e-15);
        assert!((a0.get(0, 0) - c(-6., 0.)).norm() < 1e-14);
        assert!(a0.is_diagonal());
        assert!(a0.hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn a0_matches_embedded_products() {
        // A0 built from explicit Z_j^r Z_{j+1}^{†r} products
        let p = ModelParams::new(3, 3, 0.0).unwrap();
        let z = build_z(3).unwrap();
        let mut acc = ManyBodyOperator::from_triplets(p.dim(), []);
        for j in 0..3 {
            for r in 1..3 {
                let zr = local_power(&z, r).unwrap();
                let left = embed_at_site(&zr, j, &p).unwrap();
                let right = embed_at_site(&zr.adjoint(), (j + 1) % 3, &p).unwrap();
                let cr = chiral_potts_coefficient(r, 3).unwrap();
                acc = acc.add(&left.mul(&right).scale(-cr));
            }
        }
        assert!(acc.max_abs_diff(&build_a0(&p).unwrap()) < 1e-14);
    }

    #[test]
    fn a1_row_structure() {
        let p = ModelParams::new(3, 2, 0.0).unwrap();
        let a1 = build_a1(&p).unwrap();
        assert_eq!(a1.row(0).count(), 4);
        for i in 0..p.dim() {
            assert_eq!(a1.row(i).count(), 4);
            assert!(a1.get(i, i).norm() == 0.0);
        }
        assert!(a1.hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn a1_matches_embedded_shifts() {
        let p = ModelParams::new(4, 3, 0.0).unwrap();
        let x = build_x(4).unwrap();
        let mut acc = ManyBodyOperator::from_triplets(p.dim(), []);
        for j in 0..3 {
            for r in 1..4 {
                let cr = chiral_potts_coefficient(r, 4).unwrap();
                acc = acc.add(&embed_at_site(&local_power(&x, r).unwrap(), j, &p).unwrap().scale(-cr));
            }
        }
        assert!(acc.max_abs_diff(&build_a1(&p).unwrap()) < 1e-14);
    }

    /// Transverse-field Ising matrix built entry by entry.
    fn tfim(l: usize, lambda: f64) -> ManyBodyOperator {
        let dim = 1 << l;
        let mut trip = Vec::new();
        for idx in 0..dim {
            let spin = |j: usize| if (idx >> (l - 1 - j)) & 1 == 0 { 1.0 } else { -1.0 };
            let diag: f64 = (0..l).map(|j| -spin(j) * spin((j + 1) % l)).sum();
            trip.push((idx, idx, c(diag, 0.)));
            for j in 0..l {
                trip.push((idx ^ (1 << (l - 1 - j)), idx, c(-lambda, 0.)));
            }
        }
        ManyBodyOperator::from_triplets(dim, trip)
    }

    #[test]
    fn two_state_reduction_is_tfim() {
        for l in 2..=4 {
            let p = ModelParams::new(2, l, 0.5).unwrap();
            let b = build_hamiltonian(&p).unwrap();
            assert!(b.h.max_abs_diff(&tfim(l, 0.5)) <= 1e-14, "L={l}");
        }
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let p = ModelParams::new(3, 3, 0.0).unwrap();
        let b = build_hamiltonian(&p).unwrap();
        assert!(b.h.is_diagonal());
        assert!(b.h.max_abs_diff(&b.a0) == 0.0);
    }

    #[test]
    fn bundle_sum_identity() {
        let p = ModelParams::new(3, 4, 0.7).unwrap();
        let b = build_hamiltonian(&p).unwrap();
        let rebuilt = b.a0.add(&b.a1.scale(c(0.7, 0.)));
        assert!(b.h.max_abs_diff(&rebuilt) <= 1e-13);
        assert!(b.h.hermitian_hint());
    }

    #[test]
    fn translation_rotates_digits() {
        let p = ModelParams::new(2, 3, 0.0).unwrap();
        let t = build_translation(&p);
        // |011> -> |101>
        assert_eq!(t.image(0b011), 0b101);
        let p = ModelParams::new(3, 4, 0.0).unwrap();
        let t = build_translation(&p);
        assert!(t.is_bijection());
        assert!(t.power(4).is_identity());
        assert!(!t.power(2).is_identity());
    }

    #[test]
    fn translation_covariance_z() {
        let p = ModelParams::new(3, 3, 0.0).unwrap();
        let t = build_translation(&p).to_operator();
        let tinv = t.adjoint();
        let z = build_z(3).unwrap();
        for j in 0..3 {
            let zj = embed_at_site(&z, j, &p).unwrap();
            let zj1 = embed_at_site(&z, (j + 1) % 3, &p).unwrap();
            assert!(t.mul(&zj).mul(&tinv).max_abs_diff(&zj1) <= 1e-14);
        }
    }

    #[test]
    fn permutation_apply_inverse() {
        let p = ModelParams::new(3, 3, 0.0).unwrap();
        let t = build_translation(&p);
        let v: Vec<C64> = (0..27).map(|i| c(i as f64, -(i as f64))).collect();
        assert_eq!(t.apply_inverse(&t.apply(&v)), v);
        assert_eq!(t.apply(&v), t.to_operator().apply(&v));
        assert_eq!(t.inverse().apply(&v), t.apply_inverse(&v));
    }

    #[test]
    fn charge_operator() {
        let p = ModelParams::new(2, 2, 0.0).unwrap();
        let q = build_charge(&p);
        let x0 = embed_at_site(&build_x(2).unwrap(), 0, &p).unwrap();
        let x1 = embed_at_site(&build_x(2).unwrap(), 1, &p).unwrap();
        assert_eq!(q.max_abs_diff(&x0.mul(&x1)), 0.0);

        let p = ModelParams::new(3, 2, 0.0).unwrap();
        assert!(charge_permutation(&p).power(3).is_identity());

        let p = ModelParams::new(3, 3, 0.7).unwrap();
        let b = build_hamiltonian(&p).unwrap();
        let q = build_charge(&p);
        assert!(b.h.commutator(&q).max_abs() <= 1e-12);
        let t = build_translation(&p).to_operator();
        assert_eq!(t.commutator(&q).max_abs(), 0.0);
    }
}
