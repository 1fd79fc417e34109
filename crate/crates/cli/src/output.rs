//! Output records and their JSON/CSV encodings.
//!
//! JSON is the authoritative nested form; CSV is one flat table per mode with
//! doubles written to 17 significant digits. Field names are documented in
//! `docs/output-schema.md`.

use std::io::Write;

use chiral_potts::correlations::{CorrelationTable, NegativeControlReport};
use chiral_potts::spectra::{RouteComparison, SimultaneousEigenvector};
use chiral_potts::verification::{CheckResult, Gate};
use chiral_potts::{ModelParams, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONVENTIONS: [&str; 6] = [
    "rho_r(R) = <psi| Z_0^r Z_R^{dagger r} |psi>; the <Z_0^r Z_R^r> convention is row N-r",
    "R is reduced modulo L; sym_residual = |conj(rho_r(R)) - rho_r(L-R)|",
    "basis index = sum_j a_j N^(L-1-j) (site 0 most significant)",
    "T moves the content of site j to site j+1; T eigenvalue exp(2 pi i k/L)",
    "Q = prod_j X_j; Q eigenvalue exp(2 pi i q/N), used as a label only",
    "eigenvector phase: first component of largest modulus is real positive",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub params: ModelParams,
    pub which: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub conventions: Vec<String>,
    /// Unix seconds. The only field that differs between identical runs.
    pub generated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub dimension: usize,
    pub eigenvector_count: usize,
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub r: usize,
    #[serde(rename = "R")]
    pub separation: usize,
    pub rho_re: f64,
    pub rho_im: f64,
    pub sym_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassFlags {
    pub symmetry: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub midpoint: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorBlock {
    pub index: usize,
    pub energy: f64,
    pub momentum: usize,
    pub charge: usize,
    pub h_residual: f64,
    pub t_residual: f64,
    pub q_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub correlations: Option<Vec<CorrelationEntry>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub midpoint_imag: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_sym_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pass: Option<PassFlags>,
}

impl EigenvectorBlock {
    pub fn new(index: usize, ev: &SimultaneousEigenvector) -> Self {
        Self {
            index,
            energy: ev.energy,
            momentum: ev.momentum,
            charge: ev.charge,
            h_residual: ev.residuals.h_residual,
            t_residual: ev.residuals.t_residual,
            q_residual: ev.residuals.q_residual,
            correlations: None,
            midpoint_imag: None,
            max_sym_residual: None,
            pass: None,
        }
    }

    pub fn with_table(mut self, table: &CorrelationTable, tol: &Tolerances) -> Self {
        let mut entries = Vec::with_capacity(table.values.len() * table.length);
        for (i, row) in table.values.iter().enumerate() {
            for (sep, z) in row.iter().enumerate() {
                entries.push(CorrelationEntry {
                    r: i + 1,
                    separation: sep,
                    rho_re: z.re,
                    rho_im: z.im,
                    sym_residual: table.symmetry_residuals[i][sep],
                });
            }
        }
        let max_sym = table.max_symmetry_residual();
        self.pass = Some(PassFlags {
            symmetry: max_sym <= tol.symmetry,
            midpoint: table.max_midpoint_imag().map(|m| m <= tol.midpoint),
        });
        self.correlations = Some(entries);
        self.midpoint_imag = table.midpoint_imag.clone();
        self.max_sym_residual = Some(max_sym);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub metadata: Metadata,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spectrum: Option<SpectrumSummary>,
    pub eigenvectors: Vec<EigenvectorBlock>,
    #[serde(default)]
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cross_route: Option<RouteComparison>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub negative_control: Option<NegativeControlReport>,
}

impl OutputRecord {
    pub fn hard_failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.gate == Gate::Hard && !c.passed).collect()
    }

    pub fn max_sym_residual(&self) -> Option<f64> {
        self.eigenvectors.iter().filter_map(|b| b.max_sym_residual).reduce(f64::max)
    }

    pub fn max_midpoint_imag(&self) -> Option<f64> {
        self.eigenvectors
            .iter()
            .filter_map(|b| b.midpoint_imag.as_ref())
            .flat_map(|m| m.iter().copied())
            .reduce(f64::max)
    }
}

/// One row of a sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n_states: usize,
    pub length: usize,
    pub lambda: f64,
    pub ground_energy: Option<f64>,
    pub ground_degeneracy: Option<usize>,
    pub max_sym_residual: Option<f64>,
    pub max_midpoint_imag: Option<f64>,
    pub hard_failures: usize,
}

impl SummaryRow {
    pub fn from_record(rec: &OutputRecord) -> Self {
        let p = rec.metadata.params;
        Self {
            n_states: p.n_states,
            length: p.length,
            lambda: p.coupling,
            ground_energy: rec.spectrum.as_ref().map(|s| s.ground_energy),
            ground_degeneracy: rec.spectrum.as_ref().map(|s| s.ground_degeneracy),
            max_sym_residual: rec.max_sym_residual(),
            max_midpoint_imag: rec.max_midpoint_imag(),
            hard_failures: rec.hard_failures().len(),
        }
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn prefix(p: &ModelParams) -> [String; 3] {
    [p.n_states.to_string(), p.length.to_string(), fmt_f64(p.coupling)]
}

/// Write records as JSON: a single object for one record, `{"records": [...]}` otherwise.
pub fn write_json<W: Write>(records: &[OutputRecord], mut w: W) -> Result<(), CliError> {
    if let [one] = records {
        serde_json::to_writer_pretty(&mut w, one)?;
    } else {
        #[derive(Serialize)]
        struct Many<'a> {
            records: &'a [OutputRecord],
        }
        serde_json::to_writer_pretty(&mut w, &Many { records })?;
    }
    writeln!(w)?;
    Ok(())
}

/// Flat CSV table; the layout follows the mode of the first record.
pub fn write_csv<W: Write>(records: &[OutputRecord], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    let mode = records.first().map(|r| r.metadata.mode.as_str()).unwrap_or("spectrum");
    match mode {
        "verify" => {
            out.write_record(["n_states", "length", "lambda", "check", "value", "threshold", "passed", "gate"])?;
            for rec in records {
                let pre = prefix(&rec.metadata.params);
                for c in &rec.checks {
                    let gate = match c.gate {
                        Gate::Hard => "hard",
                        Gate::Warning => "warning",
                    };
                    let row = [c.name.clone(), fmt_f64(c.value), fmt_f64(c.threshold), c.passed.to_string(), gate.into()];
                    out.write_record(pre.iter().cloned().chain(row))?;
                }
            }
        }
        "negative-control" => {
            out.write_record([
                "n_states", "length", "lambda", "seed", "k1", "k2", "max_sym_residual", "threshold", "detected",
            ])?;
            for rec in records {
                let pre = prefix(&rec.metadata.params);
                if let Some(nc) = &rec.negative_control {
                    for a in &nc.attempts {
                        let row = [
                            a.seed.to_string(),
                            a.momenta[0].to_string(),
                            a.momenta[1].to_string(),
                            fmt_f64(a.max_symmetry_residual),
                            fmt_f64(nc.threshold),
                            (a.max_symmetry_residual > nc.threshold).to_string(),
                        ];
                        out.write_record(pre.iter().cloned().chain(row))?;
                    }
                }
            }
        }
        "spectrum" => {
            out.write_record([
                "n_states", "length", "lambda", "index", "energy", "momentum", "charge", "h_residual", "t_residual",
                "q_residual",
            ])?;
            for rec in records {
                let pre = prefix(&rec.metadata.params);
                for b in &rec.eigenvectors {
                    let row = [
                        b.index.to_string(),
                        fmt_f64(b.energy),
                        b.momentum.to_string(),
                        b.charge.to_string(),
                        fmt_f64(b.h_residual),
                        fmt_f64(b.t_residual),
                        fmt_f64(b.q_residual),
                    ];
                    out.write_record(pre.iter().cloned().chain(row))?;
                }
            }
        }
        _ => {
            out.write_record([
                "n_states", "length", "lambda", "index", "energy", "momentum", "charge", "r", "R", "rho_re", "rho_im",
                "sym_residual", "midpoint_imag",
            ])?;
            for rec in records {
                let p = rec.metadata.params;
                let pre = prefix(&p);
                for b in &rec.eigenvectors {
                    for e in b.correlations.iter().flatten() {
                        let mid = (p.length % 2 == 0 && e.separation == p.length / 2)
                            .then(|| b.midpoint_imag.as_ref().map(|m| m[e.r - 1]))
                            .flatten();
                        let row = [
                            b.index.to_string(),
                            fmt_f64(b.energy),
                            b.momentum.to_string(),
                            b.charge.to_string(),
                            e.r.to_string(),
                            e.separation.to_string(),
                            fmt_f64(e.rho_re),
                            fmt_f64(e.rho_im),
                            fmt_f64(e.sym_residual),
                            fmt_opt(mid),
                        ];
                        out.write_record(pre.iter().cloned().chain(row))?;
                    }
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(rows: &[SummaryRow], mut w: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, rows)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "n_states",
        "length",
        "lambda",
        "ground_energy",
        "ground_degeneracy",
        "max_sym_residual",
        "max_midpoint_imag",
        "hard_failures",
    ])?;
    for r in rows {
        out.write_record([
            r.n_states.to_string(),
            r.length.to_string(),
            fmt_f64(r.lambda),
            fmt_opt(r.ground_energy),
            r.ground_degeneracy.map(|d| d.to_string()).unwrap_or_default(),
            fmt_opt(r.max_sym_residual),
            fmt_opt(r.max_midpoint_imag),
            r.hard_failures.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
