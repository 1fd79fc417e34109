use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use chiral_potts::correlations::negative_control;
use chiral_potts::model::build_hamiltonian;
use chiral_potts::verification::{run_verification, solve, CheckResult, Gate, Solution, VerifyOptions};
use chiral_potts::ModelParams;

use crate::config::{Format, Mode, RunConfig};
use crate::error::CliError;
use crate::output::{
    write_csv, write_json, write_summary_csv, write_summary_json, EigenvectorBlock, Metadata, OutputRecord,
    SpectrumSummary, SummaryRow, CONVENTIONS,
};

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn metadata(config: &RunConfig, params: &ModelParams) -> Metadata {
    let mode = if config.fm_conjecture { "fm-conjecture" } else { config.mode.name() };
    Metadata {
        tool: "cpchain".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        mode: mode.into(),
        params: *params,
        which: config.which.to_string(),
        seed: config.seed,
        tolerances: config.tolerances,
        conventions: CONVENTIONS.iter().map(|s| s.to_string()).collect(),
        generated_at: now(),
    }
}

fn summary(sol: &Solution) -> SpectrumSummary {
    SpectrumSummary {
        dimension: sol.report.params.dim(),
        eigenvector_count: sol.report.eigenvectors.len(),
        ground_energy: sol.report.ground_energy,
        ground_degeneracy: sol.report.ground_degeneracy,
    }
}

fn blocks(sol: &Solution, config: &RunConfig, with_tables: bool) -> Vec<EigenvectorBlock> {
    sol.selected
        .iter()
        .zip(&sol.tables)
        .map(|(&i, table)| {
            let b = EigenvectorBlock::new(i, &sol.report.eigenvectors[i]);
            if with_tables {
                b.with_table(table, &config.tolerances)
            } else {
                b
            }
        })
        .collect()
}

fn empty_record(config: &RunConfig, params: &ModelParams) -> OutputRecord {
    OutputRecord {
        metadata: metadata(config, params),
        spectrum: None,
        eigenvectors: Vec::new(),
        checks: Vec::new(),
        cross_route: None,
        negative_control: None,
    }
}

/// Run one `(L, λ)` point of the configured mode.
pub fn run_point(config: &RunConfig, params: &ModelParams) -> Result<OutputRecord, CliError> {
    let tol = &config.tolerances;
    let mut rec = empty_record(config, params);
    if config.fm_conjecture {
        let sol = solve(params, config.which, tol)?;
        let worst_mid = sol.tables.iter().map(|t| t.values[0][params.length / 2].im.abs()).fold(0.0, f64::max);
        let worst_sym = sol.tables.iter().map(|t| t.max_symmetry_residual()).fold(0.0, f64::max);
        rec.checks.push(check("midpoint_reality_r1", worst_mid, tol.midpoint));
        rec.checks.push(check("reflection_symmetry", worst_sym, tol.symmetry));
        rec.spectrum = Some(summary(&sol));
        rec.eigenvectors = blocks(&sol, config, true);
        return Ok(rec);
    }
    match config.mode {
        Mode::Spectrum => {
            let sol = solve(params, config.which, tol)?;
            rec.spectrum = Some(summary(&sol));
            rec.eigenvectors = blocks(&sol, config, false);
        }
        Mode::Correlations => {
            let sol = solve(params, config.which, tol)?;
            rec.spectrum = Some(summary(&sol));
            rec.eigenvectors = blocks(&sol, config, true);
        }
        Mode::Verify => {
            let opts = VerifyOptions {
                seed: config.seed,
                selection: config.which,
                oracle_max_dim: config.oracle_max_dim,
                tolerances: *tol,
                ..VerifyOptions::default()
            };
            let report = run_verification(params, &opts)?;
            rec.spectrum = Some(summary(&report.solution));
            rec.eigenvectors = blocks(&report.solution, config, true);
            rec.checks = report.checks;
            rec.cross_route = report.cross_route;
            rec.negative_control = report.negative_control;
        }
        Mode::NegativeControl => {
            let bundle = build_hamiltonian(params)?;
            let nc = negative_control(params, &bundle, config.seed, tol)?;
            let best = nc.attempts.iter().map(|a| a.max_symmetry_residual).fold(0.0, f64::max);
            rec.checks.push(CheckResult {
                name: "negative_control_mixed".into(),
                value: best,
                threshold: nc.threshold,
                passed: nc.detected,
                gate: Gate::Warning,
            });
            rec.checks.push(check("negative_control_pure", nc.pure_max_symmetry_residual, tol.symmetry));
            rec.negative_control = Some(nc);
        }
    }
    Ok(rec)
}

fn check(name: &str, value: f64, threshold: f64) -> CheckResult {
    CheckResult { name: name.into(), value, threshold, passed: value <= threshold, gate: Gate::Hard }
}

/// All records of a run, in `(L, λ)` order.
pub fn run_records(config: &RunConfig) -> Result<Vec<OutputRecord>, CliError> {
    let mut records = Vec::new();
    for &l in &config.lengths {
        for lambda in config.coupling.values() {
            let params = config.params(l, lambda)?;
            records.push(run_point(config, &params)?);
        }
    }
    Ok(records)
}

fn write_records<W: Write>(config: &RunConfig, records: &[OutputRecord], w: W) -> Result<(), CliError> {
    match config.output_format {
        Format::Json => write_json(records, w),
        Format::Csv => write_csv(records, w),
    }
}

fn write_summary<W: Write>(config: &RunConfig, rows: &[SummaryRow], w: W) -> Result<(), CliError> {
    match config.output_format {
        Format::Json => write_summary_json(rows, w),
        Format::Csv => write_summary_csv(rows, w),
    }
}

fn extension(config: &RunConfig) -> &'static str {
    match config.output_format {
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Run, write output, and report hard-gate failures as an error.
///
/// A single point (or the preset) writes its records to `--out` or `stdout`.
/// A sweep writes `lambda_NNN.<ext>` per point plus `summary.<ext>` into the
/// `--out` directory, or only the summary to `stdout`.
pub fn execute<W: Write>(config: &RunConfig, stdout: W) -> Result<(), CliError> {
    let records = run_records(config)?;
    if config.coupling.is_sweep() {
        let rows: Vec<SummaryRow> = records.iter().map(SummaryRow::from_record).collect();
        match &config.output_path {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let ext = extension(config);
                for (i, rec) in records.iter().enumerate() {
                    let mut f = create(&dir.join(format!("lambda_{i:03}.{ext}")))?;
                    write_records(config, std::slice::from_ref(rec), &mut f)?;
                    f.flush()?;
                }
                let mut f = create(&dir.join(format!("summary.{ext}")))?;
                write_summary(config, &rows, &mut f)?;
                f.flush()?;
            }
            None => write_summary(config, &rows, stdout)?,
        }
    } else {
        match &config.output_path {
            Some(path) => {
                let mut f = create(path)?;
                write_records(config, &records, &mut f)?;
                f.flush()?;
            }
            None => write_records(config, &records, stdout)?,
        }
    }

    let failures: Vec<String> = records
        .iter()
        .flat_map(|r| {
            let p = r.metadata.params;
            r.hard_failures()
                .into_iter()
                .map(move |c| format!("N={} L={} lambda={}: {} = {:e} > {:e}", p.n_states, p.length, p.coupling, c.name, c.value, c.threshold))
        })
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(failures.join("; ")))
    }
}

