//! Numerical thresholds shared by construction checks, certification and the
//! verification suite. Every value can be overridden by key, which is what the
//! CLI's `--tol-KEY=VAL` flags do.

use serde::{Deserialize, Serialize};

use crate::error::{ChainError, Result};

/// Entries of magnitude below this are pruned from sparse storage.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Default cap on `N^L`.
pub const DEFAULT_DIM_BUDGET: usize = 1 << 20;

/// Largest dimension accepted by the dense oracle route.
pub const DENSE_ORACLE_MAX_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative max-norm Hermiticity defect, `‖M − M†‖ ≤ tol·(1+‖M‖)`.
    pub hermiticity: f64,
    /// Max-norm of `[H,T]`, `[H,Q]`, `[T,Q]`.
    pub commutator: f64,
    /// Covariance `T O_j T^{-1} = O_{j+1}`.
    pub covariance: f64,
    /// Sector leakage `‖(1−P_k) H v‖`.
    pub leakage: f64,
    /// Sector orthonormality and momentum phase checks.
    pub sector: f64,
    /// `‖Hv − Ev‖ ≤ tol·(1+|E|)` and `‖Tv − τv‖ ≤ tol`.
    pub eigen_residual: f64,
    /// Per-pair solver residual, relative to `‖M‖`.
    pub solver_residual: f64,
    /// Degeneracy clustering, `|E_i − E_j| ≤ tol·(1+|E|)`.
    pub degeneracy: f64,
    /// Distance of a restricted-unitary eigenvalue from a root of unity.
    pub root_snap: f64,
    /// Cross-route energy agreement.
    pub cross_route: f64,
    /// `|ρ_r(R)* − ρ_r(−R)|`.
    pub symmetry: f64,
    /// `|Im ρ_r(L/2)|` for even `L`.
    pub midpoint: f64,
    /// Translation-invariance of expectations, relative to `‖O‖`.
    pub expectation: f64,
    /// Minimum residual the negative control is expected to exceed.
    pub negative_control: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            commutator: 1e-12,
            covariance: 1e-14,
            leakage: 1e-12,
            sector: 1e-13,
            eigen_residual: 1e-10,
            solver_residual: 1e-11,
            degeneracy: 1e-9,
            root_snap: 1e-8,
            cross_route: 1e-9,
            symmetry: 1e-10,
            midpoint: 1e-10,
            expectation: 1e-10,
            negative_control: 1e-3,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 14] = [
        "hermiticity",
        "commutator",
        "covariance",
        "leakage",
        "sector",
        "eigen_residual",
        "solver_residual",
        "degeneracy",
        "root_snap",
        "cross_route",
        "symmetry",
        "midpoint",
        "expectation",
        "negative_control",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "hermiticity" => &mut self.hermiticity,
            "commutator" => &mut self.commutator,
            "covariance" => &mut self.covariance,
            "leakage" => &mut self.leakage,
            "sector" => &mut self.sector,
            "eigen_residual" => &mut self.eigen_residual,
            "solver_residual" => &mut self.solver_residual,
            "degeneracy" => &mut self.degeneracy,
            "root_snap" => &mut self.root_snap,
            "cross_route" => &mut self.cross_route,
            "symmetry" => &mut self.symmetry,
            "midpoint" => &mut self.midpoint,
            "expectation" => &mut self.expectation,
            "negative_control" => &mut self.negative_control,
            _ => return None,
        })
    }

    /// Override one tolerance by name. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(ChainError::InvalidParams(format!(
                "tolerance {key} must be positive and finite, got {value}"
            )));
        }
        let key = key.replace('-', "_");
        match self.slot(&key) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(ChainError::InvalidParams(format!(
                "unknown tolerance key {key:?} (known: {})",
                Self::KEYS.join(", ")
            ))),
        }
    }
}
