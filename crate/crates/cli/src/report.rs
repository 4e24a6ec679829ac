//! CSV and JSON report writers.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;
use crate::run::SuiteOutcome;

pub const CSV_HEADER: [&str; 7] = ["scenario", "lhs", "rhs", "residual", "rel_residual", "pass", "meta"];

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// One row per report; rows carry no timing, so equal inputs give equal bytes.
pub fn write_csv<W: Write>(out: W, outcome: &SuiteOutcome) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Output(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(err)?;
    for s in &outcome.scenarios {
        if let Some(e) = &s.error {
            w.write_record([s.name.as_str(), "NaN", "NaN", "NaN", "NaN", "false", &format!("error={e}")]).map_err(err)?;
            continue;
        }
        for r in &s.reports {
            let mut meta: Vec<String> = vec![format!("kind={}", s.kind), format!("tolerance={}", num(r.tolerance))];
            meta.extend(r.meta.iter().map(|(k, v)| format!("{k}={v}")));
            meta.extend(r.terms.iter().map(|(k, v)| format!("{k}={}", num(*v))));
            w.write_record([
                format!("{}/{}", s.name, r.scenario),
                num(r.lhs),
                num(r.rhs),
                num(r.residual),
                num(r.rel_residual),
                r.pass.to_string(),
                meta.join(";"),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}

#[derive(Serialize)]
struct JsonReport<'a> {
    pass: bool,
    config: &'a Config,
    outcome: &'a SuiteOutcome,
}

pub fn write_json<W: Write>(out: W, cfg: &Config, outcome: &SuiteOutcome) -> Result<(), CliError> {
    serde_json::to_writer_pretty(out, &JsonReport { pass: outcome.pass(), config: cfg, outcome })
        .map_err(|e| CliError::Output(e.to_string()))
}

/// Writes both files under `dir`, creating it if needed.
pub fn write_reports(dir: &Path, cfg: &Config, outcome: &SuiteOutcome) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Output(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let csv = std::fs::File::create(dir.join(&cfg.output.csv)).map_err(io)?;
    write_csv(std::io::BufWriter::new(csv), outcome)?;
    let json = std::fs::File::create(dir.join(&cfg.output.json)).map_err(io)?;
    let mut json = std::io::BufWriter::new(json);
    write_json(&mut json, cfg, outcome)?;
    json.flush().map_err(io)
}
