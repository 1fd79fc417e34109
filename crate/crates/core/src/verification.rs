//! End-to-end runs: solve a chain, tabulate correlations, and evaluate every
//! structural and spectral check as a named pass/fail record.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::{correlation_table, negative_control, reversed_two_point, CorrelationTable, NegativeControlReport};
use crate::error::{ChainError, Result};
use crate::model::{build_charge, build_hamiltonian, build_translation, HamiltonianBundle, TranslationOperator};
use crate::operator::{build_x, build_z, embed_at_site, ManyBodyOperator, ModelParams};
use crate::sectors::{build_all_sectors, project_with_leakage};
use crate::spectra::{
    assemble_simultaneous_oracle_with, assemble_simultaneous_with, compare_routes, random_operator,
    select_ground_states_with, translated_expectation_residual, RouteComparison, SimultaneousEigenvector,
    SpectrumReport,
};
use crate::tolerances::{Tolerances, DENSE_ORACLE_MAX_DIM};
use crate::C64;

/// Which eigenvectors a run reports on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Ground,
    All,
    /// One momentum sector, `k`.
    Sector(usize),
}

impl FromStr for Selection {
    type Err = ChainError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground" => Ok(Self::Ground),
            "all" => Ok(Self::All),
            other => {
                let k = other
                    .strip_prefix("k=")
                    .or_else(|| other.strip_prefix("sector="))
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| {
                        ChainError::InvalidParams(format!("expected ground, all or k=<momentum>, got {other:?}"))
                    })?;
                Ok(Self::Sector(k))
            }
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ground => f.write_str("ground"),
            Self::All => f.write_str("all"),
            Self::Sector(k) => write!(f, "k={k}"),
        }
    }
}

/// A solved chain with the selected eigenvectors and their tables.
#[derive(Debug, Clone)]
pub struct Solution {
    pub bundle: HamiltonianBundle,
    pub translation: TranslationOperator,
    pub report: SpectrumReport,
    /// Indices into `report.eigenvectors`.
    pub selected: Vec<usize>,
    pub tables: Vec<CorrelationTable>,
}

impl Solution {
    pub fn selected_eigenvectors(&self) -> impl Iterator<Item = &SimultaneousEigenvector> {
        self.selected.iter().map(|&i| &self.report.eigenvectors[i])
    }
}

pub fn solve(params: &ModelParams, selection: Selection, tol: &Tolerances) -> Result<Solution> {
    let bundle = build_hamiltonian(params)?;
    let translation = build_translation(params);
    let momenta = match selection {
        Selection::Sector(k) => Some(vec![k]),
        _ => None,
    };
    let report = assemble_simultaneous_with(&bundle, &translation, momenta.as_deref(), tol)?;
    let selected: Vec<usize> = match selection {
        Selection::Ground => {
            let e0 = report.ground_energy;
            (0..report.eigenvectors.len())
                .filter(|&i| report.eigenvectors[i].energy - e0 <= tol.degeneracy * (1.0 + e0.abs()))
                .collect()
        }
        _ => (0..report.eigenvectors.len()).collect(),
    };
    let tables = selected
        .par_iter()
        .map(|&i| correlation_table(i, &report.eigenvectors[i], params))
        .collect::<Result<Vec<_>>>()?;
    Ok(Solution { bundle, translation, report, selected, tables })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    /// Failure means a construction bug or a violated identity.
    Hard,
    /// Statistical; logged but never fails a run.
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub gate: Gate,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value <= threshold, gate: Gate::Hard }
    }

    fn at_least(name: &str, value: f64, threshold: f64, gate: Gate) -> Self {
        Self { name: name.into(), value, threshold, passed: value > threshold, gate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub selection: Selection,
    /// Run the dense cross-check when `N^L` is at most this.
    pub oracle_max_dim: usize,
    /// Run the random-operator translation check when `N^L` is at most this.
    pub expectation_max_dim: usize,
    pub tolerances: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            selection: Selection::All,
            oracle_max_dim: 1024,
            expectation_max_dim: 1024,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub params: ModelParams,
    pub checks: Vec<CheckResult>,
    pub solution: Solution,
    pub cross_route: Option<RouteComparison>,
    pub negative_control: Option<NegativeControlReport>,
}

impl VerificationReport {
    pub fn hard_failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.gate == Gate::Hard && !c.passed).collect()
    }

    pub fn passed(&self) -> bool {
        self.hard_failures().is_empty()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `max_j ‖T O_j T^{-1} − O_{j+1}‖_max`.
pub fn covariance_defect(op: &crate::operator::LocalOperator, params: &ModelParams, t: &TranslationOperator) -> Result<f64> {
    let tm = t.to_operator();
    let tinv = t.inverse().to_operator();
    let mut worst: f64 = 0.0;
    for j in 0..params.length {
        let oj = embed_at_site(op, j, params)?;
        let next = embed_at_site(op, (j + 1) % params.length, params)?;
        worst = worst.max(tm.mul(&oj).mul(&tinv).max_abs_diff(&next));
    }
    Ok(worst)
}

/// `−Σ Z_j Z_{j+1} − λ Σ X_j` built from Pauli matrices.
pub fn transverse_field_ising(params: &ModelParams) -> Result<ManyBodyOperator> {
    let two = ModelParams::new(2, params.length, params.coupling)?;
    let z = build_z(2)?;
    let x = build_x(2)?;
    let mut h = ManyBodyOperator::from_triplets(two.dim(), []);
    for j in 0..two.length {
        let zz = embed_at_site(&z, j, &two)?.mul(&embed_at_site(&z, (j + 1) % two.length, &two)?);
        h = h.sub(&zz).sub(&embed_at_site(&x, j, &two)?.scale(C64::new(two.coupling, 0.0)));
    }
    Ok(h)
}

fn hermiticity_check(name: &str, m: &ManyBodyOperator, tol: f64) -> CheckResult {
    CheckResult::at_most(name, m.hermiticity_defect(), tol * (1.0 + m.max_abs()))
}

pub fn run_verification(params: &ModelParams, opts: &VerifyOptions) -> Result<VerificationReport> {
    let tol = &opts.tolerances;
    let solution = solve(params, opts.selection, tol)?;
    let bundle = &solution.bundle;
    let t = &solution.translation;
    let report = &solution.report;
    let mut checks = Vec::new();

    // operator structure
    checks.push(hermiticity_check("hermiticity_a0", &bundle.a0, tol.hermiticity));
    checks.push(hermiticity_check("hermiticity_a1", &bundle.a1, tol.hermiticity));
    checks.push(hermiticity_check("hermiticity_h", &bundle.h, tol.hermiticity));
    let rebuilt = bundle.a0.add(&bundle.a1.scale(C64::new(params.coupling, 0.0)));
    checks.push(CheckResult::at_most("h_equals_a0_plus_lambda_a1", bundle.h.max_abs_diff(&rebuilt), 1e-13));
    let tm = t.to_operator();
    let q = build_charge(params);
    checks.push(CheckResult::at_most("commutator_h_t", bundle.h.commutator(&tm).max_abs(), tol.commutator));
    checks.push(CheckResult::at_most("commutator_h_q", bundle.h.commutator(&q).max_abs(), tol.commutator));
    checks.push(CheckResult::at_most("commutator_t_q", tm.commutator(&q).max_abs(), tol.commutator));
    let t_ok = t.is_bijection() && t.power(params.length).is_identity();
    checks.push(CheckResult::at_most("translation_period", if t_ok { 0.0 } else { 1.0 }, 0.0));
    checks.push(CheckResult::at_most(
        "covariance_z",
        covariance_defect(&build_z(params.n_states)?, params, t)?,
        tol.covariance,
    ));
    checks.push(CheckResult::at_most(
        "covariance_x",
        covariance_defect(&build_x(params.n_states)?, params, t)?,
        tol.covariance,
    ));
    if params.n_states == 2 {
        checks.push(CheckResult::at_most(
            "two_state_ising_reduction",
            bundle.h.max_abs_diff(&transverse_field_ising(params)?),
            1e-14,
        ));
    }

    // sectors
    let sectors = build_all_sectors(params)?;
    let total: usize = sectors.iter().map(|s| s.dimension()).sum();
    checks.push(CheckResult::at_most("sector_completeness", total.abs_diff(params.dim()) as f64, 0.0));
    let norm_defect = sectors.iter().map(|s| s.normalization_defect()).fold(0.0, f64::max);
    checks.push(CheckResult::at_most("sector_orthonormality", norm_defect, tol.sector));
    let mom_defect = sectors.iter().map(|s| s.momentum_defect(t)).fold(0.0, f64::max);
    checks.push(CheckResult::at_most("sector_momentum", mom_defect, tol.sector));
    let leakage = sectors
        .par_iter()
        .map(|s| project_with_leakage(&bundle.h, s).1)
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(CheckResult::at_most("sector_leakage", leakage, tol.leakage));

    // eigenvectors
    let evs = &report.eigenvectors;
    let h_res = evs.iter().map(|e| e.residuals.h_residual / (1.0 + e.energy.abs())).fold(0.0, f64::max);
    let t_res = evs.iter().map(|e| e.residuals.t_residual).fold(0.0, f64::max);
    let q_res = evs.iter().map(|e| e.residuals.q_residual).fold(0.0, f64::max);
    checks.push(CheckResult::at_most("eigen_h_residual", h_res, tol.eigen_residual));
    checks.push(CheckResult::at_most("eigen_t_residual", t_res, tol.eigen_residual));
    checks.push(CheckResult::at_most("eigen_q_residual", q_res, tol.eigen_residual));
    let expected = match opts.selection {
        Selection::Sector(k) => sectors.get(k).map_or(0, |s| s.dimension()),
        _ => params.dim(),
    };
    checks.push(CheckResult::at_most("eigenvector_count", evs.len().abs_diff(expected) as f64, 0.0));

    let cross_route = if !matches!(opts.selection, Selection::Sector(_))
        && params.dim() <= opts.oracle_max_dim.min(DENSE_ORACLE_MAX_DIM)
    {
        let oracle = assemble_simultaneous_oracle_with(bundle, t, tol)?;
        let cmp = compare_routes(report, &oracle, tol);
        checks.push(CheckResult::at_most("cross_route_energy", cmp.max_energy_difference, tol.cross_route));
        checks.push(CheckResult::at_most(
            "cross_route_momenta",
            if cmp.momentum_multisets_match { 0.0 } else { 1.0 },
            0.0,
        ));
        Some(cmp)
    } else {
        None
    };

    let grounds = select_ground_states_with(report, tol);
    if params.dim() <= opts.expectation_max_dim {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let ops: Vec<DMatrix<C64>> = (0..5).map(|_| random_operator(params.dim(), &mut rng)).collect();
        let mut worst: f64 = 0.0;
        for ev in &grounds {
            for op in &ops {
                let scale = op.norm();
                for m in 1..params.length {
                    worst = worst.max(translated_expectation_residual(&ev.vector, t, op, m) / scale);
                }
            }
        }
        checks.push(CheckResult::at_most("translation_invariant_expectations", worst, tol.expectation));
    }

    // correlations
    let tables = &solution.tables;
    let fold = |f: &dyn Fn(&CorrelationTable) -> f64| tables.iter().map(f).fold(0.0, f64::max);
    checks.push(CheckResult::at_most("reflection_symmetry", fold(&|t| t.max_symmetry_residual()), tol.symmetry));
    if params.length.is_multiple_of(2) {
        checks.push(CheckResult::at_most(
            "midpoint_reality",
            fold(&|t| t.max_midpoint_imag().unwrap_or(0.0)),
            tol.midpoint,
        ));
    }
    checks.push(CheckResult::at_most("adjoint_identity", fold(&|t| t.max_adjoint_defect()), 1e-12));
    checks.push(CheckResult::at_most("zero_separation", fold(&|t| t.max_origin_defect()), 1e-13));
    checks.push(CheckResult::at_most("modulus_bound", fold(&|t| t.max_modulus()), 1.0 + 1e-12));

    // ρ_r(R)* = <Z_R^r Z_0^{†r}>, evaluated independently of the table
    let mut step: f64 = 0.0;
    for ev in &grounds {
        for r in 1..params.n_states {
            for sep in 0..params.length as i64 {
                let forward = crate::correlations::two_point(&ev.vector, r, sep, params)?;
                let reversed = reversed_two_point(&ev.vector, r, sep, params)?;
                step = step.max((forward.conj() - reversed).norm());
            }
        }
    }
    checks.push(CheckResult::at_most("conjugation_step", step, tol.symmetry));

    let negative = if params.length >= 3 {
        let nc = negative_control(params, bundle, opts.seed, tol)?;
        let best = nc.attempts.iter().map(|a| a.max_symmetry_residual).fold(0.0, f64::max);
        checks.push(CheckResult::at_least("negative_control_mixed", best, nc.threshold, Gate::Warning));
        checks.push(CheckResult::at_most("negative_control_pure", nc.pure_max_symmetry_residual, tol.symmetry));
        Some(nc)
    } else {
        None
    };

    Ok(VerificationReport { params: *params, checks, solution, cross_route, negative_control: negative })
}
