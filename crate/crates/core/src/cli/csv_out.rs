//! CSV results: `#` metadata lines, a header, then one row per
//! (cell, strategy, checkpoint). Reals use 17 significant digits.

use std::io::Write;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::harness::{empirical_rate, AggregateResult, ExperimentSpec, GENERATOR};
use crate::theory::lower_bound_rate;

pub const HEADER: [&str; 11] = [
    "setting_id",
    "strategy",
    "mu1",
    "mu2",
    "var_pair",
    "T",
    "trials",
    "errors",
    "p_error",
    "rate_empirical",
    "rate_lower_bound",
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub setting_id: String,
    pub strategy: String,
    pub mu1: f64,
    pub mu2: f64,
    pub var_pair: String,
    #[serde(rename = "T")]
    pub t: u64,
    pub trials: u64,
    pub errors: u64,
    pub p_error: f64,
    pub rate_empirical: Option<f64>,
    pub rate_lower_bound: f64,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

impl CsvRow {
    fn record(&self) -> [String; 11] {
        [
            self.setting_id.clone(),
            self.strategy.clone(),
            real(self.mu1),
            real(self.mu2),
            self.var_pair.clone(),
            self.t.to_string(),
            self.trials.to_string(),
            self.errors.to_string(),
            real(self.p_error),
            self.rate_empirical.map(real).unwrap_or_default(),
            real(self.rate_lower_bound),
        ]
    }
}

/// Flatten aggregates into rows, in the order they were produced.
pub fn rows(spec: &ExperimentSpec, results: &[AggregateResult]) -> Result<Vec<CsvRow>> {
    let mut out = Vec::new();
    for r in results {
        let (a, b) = r.variance_pair;
        let rate_lb = lower_bound_rate(
            spec.mu1 - r.mu2,
            spec.pair_scale.to_std(a),
            spec.pair_scale.to_std(b),
        )?;
        for (k, (&t, &errors)) in r.checkpoints.iter().zip(&r.error_counts).enumerate() {
            let p_error = r.p_error(k);
            let rate = empirical_rate(p_error, t);
            out.push(CsvRow {
                setting_id: spec.setting_id.clone(),
                strategy: r.strategy.to_string(),
                mu1: spec.mu1,
                mu2: r.mu2,
                var_pair: format!("{a}:{b}"),
                t,
                trials: r.trials,
                errors,
                p_error,
                rate_empirical: rate.is_finite().then_some(rate),
                rate_lower_bound: rate_lb,
            });
        }
    }
    Ok(out)
}

/// Metadata lines written above the header.
pub fn metadata(spec: &ExperimentSpec) -> Vec<String> {
    let scale = match spec.pair_scale {
        crate::harness::PairScale::Variance => "variance",
        crate::harness::PairScale::StdDev => "std",
    };
    vec![
        format!("# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        format!(
            "# setting={} seed={} generator={} pair_scale={} trials={} horizon={} init_rounds={} c_mu={} c_sigma2={} mixing={}",
            spec.setting_id,
            spec.config.master_seed(),
            GENERATOR,
            scale,
            spec.trials,
            spec.config.horizon(),
            spec.config.init_rounds(),
            spec.config.trunc().c_mu(),
            spec.config.trunc().c_sigma2(),
            spec.config.mixing(),
        ),
    ]
}

pub fn write_csv<W: Write>(mut w: W, meta: &[String], rows: &[CsvRow]) -> Result<()> {
    for line in meta {
        writeln!(w, "{line}")?;
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(HEADER).map_err(io)?;
    for row in rows {
        writer.write_record(row.record()).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

/// Parse CSV text produced by [`write_csv`], skipping metadata lines.
pub fn read_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Io(e.to_string()))?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Validation(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Validation(format!("bad CSV row: {e}"))))
        .collect()
}
