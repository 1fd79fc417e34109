//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed; exits
//! nonzero if any hard criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use chiral_potts::correlations::{negative_control, state_correlation_table, EigenvectorId};
use chiral_potts::model::{build_hamiltonian, build_translation};
use chiral_potts::operator::{build_x, build_z};
use chiral_potts::spectra::{
    assemble_simultaneous_oracle_with, assemble_simultaneous_with, compare_routes, random_operator,
    select_ground_states_with, translated_expectation_residual,
};
use chiral_potts::verification::{covariance_defect, solve, transverse_field_ising, Selection};
use chiral_potts::{ModelParams, Tolerances};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 1.75];

/// Criterion 1 grid: `N ∈ {2,3,4}`, `L ∈ 2..=6`, plus `N = 3`, `L ∈ {7, 8}`.
fn grid_sizes() -> Vec<(usize, usize)> {
    let mut sizes: Vec<(usize, usize)> = (2..=4).flat_map(|n| (2..=6).map(move |l| (n, l))).collect();
    sizes.extend([(3, 7), (3, 8)]);
    sizes
}

struct Outcome {
    passed: bool,
    /// Failures of a warning-level gate are reported but do not fail the suite.
    warning_only: bool,
    detail: String,
}

impl Outcome {
    fn at_most(what: &str, worst: f64, threshold: f64, cases: usize) -> Self {
        Self {
            passed: worst <= threshold,
            warning_only: false,
            detail: format!("{what}: worst {worst:.3e} (limit {threshold:.0e}) over {cases} cases"),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self { passed: false, warning_only: false, detail: format!("error: {e}") }
    }
}

/// Criteria 1–3 share the grid; each point is solved once.
#[derive(Default)]
struct GridFindings {
    symmetry: f64,
    eigenvectors: usize,
    midpoint: f64,
    ground_states: usize,
    hermiticity_margin: f64,
    commutator: f64,
    points: usize,
    error: Option<String>,
}

fn sweep_grid(tol: &Tolerances) -> GridFindings {
    let mut g = GridFindings::default();
    for (n, l) in grid_sizes() {
        for lambda in LAMBDAS {
            if let Err(e) = grid_point(&mut g, n, l, lambda, tol) {
                g.error.get_or_insert(format!("N={n} L={l} λ={lambda}: {e}"));
            }
        }
    }
    g
}

fn grid_point(g: &mut GridFindings, n: usize, l: usize, lambda: f64, tol: &Tolerances) -> chiral_potts::Result<()> {
    let p = ModelParams::new(n, l, lambda)?;
    let sol = solve(&p, Selection::All, tol)?;
    g.points += 1;

    for table in &sol.tables {
        g.symmetry = g.symmetry.max(table.max_symmetry_residual());
    }
    g.eigenvectors += sol.tables.len();

    if n == 3 && l.is_multiple_of(2) && l >= 4 {
        // tables are indexed like report.eigenvectors under Selection::All
        let e0 = sol.report.ground_energy;
        for (ev, table) in sol.report.eigenvectors.iter().zip(&sol.tables) {
            if ev.energy - e0 <= tol.degeneracy * (1.0 + e0.abs()) {
                g.midpoint = g.midpoint.max(table.values[0][l / 2].im.abs());
                g.ground_states += 1;
            }
        }
        let ground = select_ground_states_with(&sol.report, tol);
        assert_eq!(ground.len(), sol.report.ground_degeneracy);
    }

    let h = &sol.bundle.h;
    // hermiticity is scored relative to its own threshold so one max covers every point
    g.hermiticity_margin = g.hermiticity_margin.max(h.hermiticity_defect() / (1.0 + h.max_abs()));
    g.commutator = g.commutator.max(h.commutator(&sol.translation.to_operator()).max_abs());
    Ok(())
}

fn criterion_covariance() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for l in 3..=5 {
        let p = ModelParams::new(3, l, 0.0).unwrap();
        let t = build_translation(&p);
        for local in [build_z(3).unwrap(), build_x(3).unwrap()] {
            match covariance_defect(&local, &p, &t) {
                Ok(d) => worst = worst.max(d),
                Err(e) => return Outcome::error(e),
            }
            cases += l;
        }
    }
    Outcome::at_most("‖T O_j T⁻¹ − O_{j+1}‖_max, O ∈ {Z, X}", worst, 1e-14, cases)
}

fn criterion_cross_route(tol: &Tolerances) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut multisets = true;
    let mut cases = 0;
    for n in [2, 3] {
        for l in 2..=5 {
            for lambda in LAMBDAS {
                let p = ModelParams::new(n, l, lambda).unwrap();
                let run = || -> chiral_potts::Result<_> {
                    let bundle = build_hamiltonian(&p)?;
                    let t = build_translation(&p);
                    let a = assemble_simultaneous_with(&bundle, &t, None, tol)?;
                    let b = assemble_simultaneous_oracle_with(&bundle, &t, tol)?;
                    Ok(compare_routes(&a, &b, tol))
                };
                match run() {
                    Ok(cmp) => {
                        worst = worst.max(cmp.max_energy_difference);
                        multisets &= cmp.momentum_multisets_match;
                    }
                    Err(e) => return Outcome::error(format!("N={n} L={l} λ={lambda}: {e}")),
                }
                cases += 1;
            }
        }
    }
    let mut out = Outcome::at_most("sorted energy difference", worst, tol.cross_route, cases);
    out.passed &= multisets;
    out.detail.push_str(if multisets { "; momentum multisets identical" } else { "; momentum multisets DIFFER" });
    out
}

fn criterion_expectations(tol: &Tolerances) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (i, lambda) in LAMBDAS.into_iter().enumerate() {
        let p = ModelParams::new(3, 4, lambda).unwrap();
        let sol = match solve(&p, Selection::All, tol) {
            Ok(s) => s,
            Err(e) => return Outcome::error(e),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        let ops: Vec<_> = (0..5).map(|_| random_operator(p.dim(), &mut rng)).collect();
        for ev in &sol.report.eigenvectors {
            for op in &ops {
                let scale = op.norm();
                for m in 1..p.length {
                    worst = worst.max(translated_expectation_residual(&ev.vector, &sol.translation, op, m) / scale);
                    cases += 1;
                }
            }
        }
    }
    Outcome::at_most("|<T^-m O T^m> − <O>| / ‖O‖", worst, tol.expectation, cases)
}

fn criterion_negative_control(tol: &Tolerances) -> Outcome {
    let mut detected = true;
    let mut weakest_mixed = f64::INFINITY;
    let mut worst_pure: f64 = 0.0;
    let mut cases = 0;
    for l in 3..=5 {
        let p = ModelParams::new(3, l, 0.5).unwrap();
        let run = || -> chiral_potts::Result<_> {
            let bundle = build_hamiltonian(&p)?;
            let nc = negative_control(&p, &bundle, 0, tol)?;
            let best = nc.attempts.iter().map(|a| a.max_symmetry_residual).fold(0.0, f64::max);
            // every certified eigenvector through the same table path
            let sol = solve(&p, Selection::All, tol)?;
            let mut pure = nc.pure_max_symmetry_residual;
            for (i, ev) in sol.report.eigenvectors.iter().enumerate() {
                let id = EigenvectorId { index: i, energy: ev.energy, momentum: ev.momentum, charge: ev.charge };
                pure = pure.max(state_correlation_table(&ev.vector, id, &p)?.max_symmetry_residual());
            }
            Ok((nc.detected, best, pure, sol.report.eigenvectors.len()))
        };
        match run() {
            Ok((d, best, pure, n)) => {
                detected &= d;
                weakest_mixed = weakest_mixed.min(best);
                worst_pure = worst_pure.max(pure);
                cases += n;
            }
            Err(e) => return Outcome::error(format!("L={l}: {e}")),
        }
    }
    let pure_ok = worst_pure <= tol.symmetry;
    Outcome {
        passed: detected && pure_ok,
        warning_only: pure_ok,
        detail: format!(
            "mixed-momentum residual ≥ {weakest_mixed:.3e} (needs > {:.0e}); pure eigenvectors worst {worst_pure:.3e} (limit {:.0e}) over {cases}",
            tol.negative_control, tol.symmetry
        ),
    }
}

fn criterion_ising_reduction() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for l in 2..=4 {
        for lambda in LAMBDAS {
            let p = ModelParams::new(2, l, lambda).unwrap();
            match (build_hamiltonian(&p), transverse_field_ising(&p)) {
                (Ok(b), Ok(tfim)) => worst = worst.max(b.h.max_abs_diff(&tfim)),
                (Err(e), _) | (_, Err(e)) => return Outcome::error(e),
            }
            cases += 1;
        }
    }
    Outcome::at_most("‖H − (−ΣZZ − λΣX)‖_max", worst, 1e-14, cases)
}

fn verify_json(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cpchain"))
        .args(["verify", "--output", "json"])
        .args(args)
        .env_remove("CHAIN_DIM_BUDGET")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    // the timestamp sits alone on its own line of the pretty-printed metadata
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let stripped: Vec<&str> = text.lines().filter(|line| !line.trim_start().starts_with("\"generated_at\"")).collect();
    if stripped.len() + 1 != text.lines().count() {
        return Err("expected exactly one timestamp line".into());
    }
    Ok(stripped.join("\n").into_bytes())
}

fn criterion_determinism() -> Outcome {
    let runs: [&[&str]; 3] = [
        &["--n", "3", "--len", "4", "--lambda", "0.5", "--seed", "0"],
        &["--n", "2", "--len", "5", "--lambda", "1.0", "--seed", "17"],
        &["--n", "3", "--len", "5", "--lambda", "1.75", "--seed", "3", "--which", "all"],
    ];
    for args in runs {
        match (verify_json(args), verify_json(args)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(a), Ok(b)) => {
                return Outcome {
                    passed: false,
                    warning_only: false,
                    detail: format!("{args:?}: outputs differ ({} vs {} bytes)", a.len(), b.len()),
                }
            }
            (Err(e), _) | (_, Err(e)) => return Outcome::error(format!("{args:?}: {e}")),
        }
    }
    Outcome { passed: true, warning_only: false, detail: format!("{} verify configurations byte-identical across runs", runs.len()) }
}

fn main() -> ExitCode {
    let tol = Tolerances::default();
    let mut failed = 0;
    let mut report = |id: u8, title: &str, started: Instant, outcome: Outcome| {
        let status = match (outcome.passed, outcome.warning_only) {
            (true, _) => "PASS",
            (false, true) => "FAIL (warning gate)",
            (false, false) => {
                failed += 1;
                "FAIL"
            }
        };
        println!("criterion {id} {status}: {title} — {} [{:.1}s]", outcome.detail, started.elapsed().as_secs_f64());
    };

    let started = Instant::now();
    let grid = sweep_grid(&tol);
    let grid_outcome = |o: Outcome| match &grid.error {
        Some(e) => Outcome::error(e),
        None => o,
    };
    report(
        1,
        "reflection symmetry of every simultaneous eigenvector",
        started,
        grid_outcome(Outcome::at_most(
            "|ρ_r(R)* − ρ_r(L−R)|",
            grid.symmetry,
            tol.symmetry,
            grid.eigenvectors,
        )),
    );
    report(
        2,
        "real midpoint correlation, N=3, L ∈ {4,6,8}, ground states",
        started,
        grid_outcome(Outcome::at_most("|Im ρ_1(L/2)|", grid.midpoint, tol.midpoint, grid.ground_states)),
    );
    let mut structure = Outcome::at_most("‖[H,T]‖_max", grid.commutator, tol.commutator, grid.points);
    structure.passed &= grid.hermiticity_margin <= tol.hermiticity;
    structure.detail.push_str(&format!(
        "; ‖H−H†‖_max/(1+‖H‖_max) worst {:.3e} (limit {:.0e})",
        grid.hermiticity_margin, tol.hermiticity
    ));
    report(3, "Hermiticity and translation invariance of H", started, grid_outcome(structure));

    let started = Instant::now();
    report(4, "translation covariance of local operators", started, criterion_covariance());
    let started = Instant::now();
    report(5, "sector route agrees with dense route", started, criterion_cross_route(&tol));
    let started = Instant::now();
    report(6, "translated expectation values of eigenvectors", started, criterion_expectations(&tol));
    let started = Instant::now();
    report(7, "negative control", started, criterion_negative_control(&tol));
    let started = Instant::now();
    report(8, "two-state reduction to the transverse-field Ising chain", started, criterion_ising_reduction());
    let started = Instant::now();
    report(9, "deterministic verify output", started, criterion_determinism());

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
