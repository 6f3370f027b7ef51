//! Command implementations behind the `neyman-bai` binary. Each command
//! returns its output so it can be tested without spawning a process.

pub mod csv_out;
pub mod spec_file;

use std::fmt;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{mds_diagnostic, run_experiment_with_progress, MdsDiagnostic};
use crate::model::{BanditInstance, ExperimentConfig, TruncationConstants};
use crate::theory::{oracle_exact_error, RateReport};

pub use csv_out::{read_csv, CsvRow};
pub use spec_file::{parse_spec, parse_spec_with, SpecOverrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Largest `|mean Psi|` accepted by `diagnose`.
pub const MDS_MEAN_TOLERANCE: f64 = 0.02;
/// Accepted range for the mean of `Psi^2`.
pub const SECOND_MOMENT_RANGE: (f64, f64) = (0.93, 1.07);

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_RUNTIME,
        Error::OutOfOrder { .. } | Error::NoObservations(_) => EXIT_RUNTIME,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: usize,
    pub cells: usize,
}

/// Run the experiment in `spec_path` and write its CSV to `out_path`.
pub fn cmd_run(
    spec_path: &Path,
    out_path: &Path,
    overrides: &SpecOverrides,
    workers: usize,
) -> Result<RunSummary> {
    let spec = parse_spec_with(spec_path, overrides)?;
    let n_cells = spec.cells().len();
    let results = run_experiment_with_progress(&spec, workers, |done, total| {
        eprintln!("[{}] cell {done}/{total}", spec.setting_id);
    })?;
    let rows = csv_out::rows(&spec, &results)?;
    let file = std::fs::File::create(out_path)
        .map_err(|e| Error::Io(format!("{}: {e}", out_path.display())))?;
    csv_out::write_csv(BufWriter::new(file), &csv_out::metadata(&spec), &rows)?;
    Ok(RunSummary {
        rows: rows.len(),
        cells: n_cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub report: RateReport,
    pub oracle_error: Option<(u64, f64)>,
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.report;
        writeln!(f, "delta            {}", r.delta)?;
        writeln!(f, "w_star           {} {}", r.w_star.0, r.w_star.1)?;
        writeln!(f, "v_aipw           {}", r.v_aipw)?;
        writeln!(f, "zeta             {} {}", r.zeta.0, r.zeta.1)?;
        writeln!(f, "rate_lower_bound {}", r.rate_lower_bound)?;
        writeln!(f, "rate_ipw         {}", r.rate_ipw)?;
        if let Some((t, p)) = self.oracle_error {
            writeln!(f, "oracle_error     {p} (T = {t})")?;
        }
        Ok(())
    }
}

pub fn cmd_bounds(
    mu1: f64,
    mu2: f64,
    sigma1: f64,
    sigma2: f64,
    horizon: Option<u64>,
) -> Result<BoundsReport> {
    let instance = BanditInstance::from_std(mu1, mu2, sigma1, sigma2)?;
    let report = RateReport::for_instance(&instance)?;
    let oracle_error = horizon
        .map(|t| oracle_exact_error(report.delta, sigma1, sigma2, t).map(|p| (t, p)))
        .transpose()?;
    Ok(BoundsReport {
        report,
        oracle_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseReport {
    pub diagnostic: MdsDiagnostic,
    pub mean_ok: bool,
    pub second_moment_ok: bool,
}

impl DiagnoseReport {
    pub fn passed(&self) -> bool {
        self.mean_ok && self.second_moment_ok
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

impl fmt::Display for DiagnoseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.diagnostic;
        writeln!(f, "rounds        {}", d.rounds_used)?;
        writeln!(
            f,
            "mean          {:+.6}  |mean| <= {MDS_MEAN_TOLERANCE}  {}",
            d.mean,
            verdict(self.mean_ok)
        )?;
        writeln!(
            f,
            "second_moment {:.6}  in [{}, {}]  {}",
            d.second_moment,
            SECOND_MOMENT_RANGE.0,
            SECOND_MOMENT_RANGE.1,
            verdict(self.second_moment_ok)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnoseArgs {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rounds: u64,
    pub seed: u64,
    pub init_rounds: u64,
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<DiagnoseReport> {
    let DiagnoseArgs {
        mu1,
        mu2,
        sigma1,
        sigma2,
        rounds,
        seed,
        init_rounds,
    } = *args;
    let instance = BanditInstance::from_std(mu1, mu2, sigma1, sigma2)?;
    if rounds < 1000 {
        return Err(Error::InvalidConfig(format!(
            "--rounds must be at least 1000 (got {rounds})"
        )));
    }
    let cfg = ExperimentConfig::new(
        rounds,
        init_rounds,
        TruncationConstants::default(),
        vec![rounds],
        seed,
    )?;
    let d = mds_diagnostic(&instance, &cfg, rounds, seed)?;
    Ok(DiagnoseReport {
        diagnostic: d,
        mean_ok: d.mean.abs() <= MDS_MEAN_TOLERANCE,
        second_moment_ok: (SECOND_MOMENT_RANGE.0..=SECOND_MOMENT_RANGE.1)
            .contains(&d.second_moment),
    })
}
