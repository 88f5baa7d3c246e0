//! CSV and JSON emission of campaign results.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::{ExperimentResult, ExperimentSpec, LsRatio, Preset, Trajectory, TrialRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "preset",
    "distribution",
    "sigma",
    "tau",
    "trial",
    "seed",
    "rel_error",
    "iterations",
    "wall_ms",
];

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Writes records as CSV with the fixed [`CSV_HEADER`].
pub fn write_csv<W: Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        wtr.write_record([
            r.preset.name().to_string(),
            r.distribution.clone(),
            real(r.sigma),
            real(r.tau),
            r.trial.to_string(),
            r.seed.to_string(),
            real(r.rel_error),
            r.iterations.to_string(),
            real(r.wall_ms),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn emit_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(records, BufWriter::new(file)).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv_from<R: Read>(r: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected CSV header {:?}", header)));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number {s:?}")))
    };
    let int = |s: &str| -> Result<u64> {
        s.parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad integer {s:?}")))
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        out.push(TrialRecord {
            preset: Preset::from_name(&row[0])?,
            distribution: row[1].to_string(),
            sigma: num(&row[2])?,
            tau: num(&row[3])?,
            trial: int(&row[4])? as usize,
            seed: int(&row[5])?,
            rel_error: num(&row[6])?,
            iterations: int(&row[7])? as usize,
            wall_ms: num(&row[8])?,
            trajectory: None,
        });
    }
    Ok(out)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file).map_err(|e| with_path(e, path))
}

/// Per-iteration trajectories (Figure 1 style) as CSV.
pub fn emit_trajectories_csv(
    preset: Preset,
    trajectories: &[Trajectory],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    let io = |e: csv::Error| with_path(csv_err(e), path);
    wtr.write_record([
        "preset",
        "distribution",
        "sigma",
        "tau",
        "trial",
        "iter",
        "rel_error",
        "objective",
        "imbalance",
    ])
    .map_err(io)?;
    for t in trajectories {
        for p in &t.points {
            wtr.write_record([
                preset.name().to_string(),
                t.distribution.clone(),
                real(t.sigma),
                real(t.tau),
                t.trial.to_string(),
                p.iter.to_string(),
                real(p.rel_error.unwrap_or(f64::NAN)),
                real(p.objective),
                real(p.imbalance),
            ])
            .map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct JsonReport<'a> {
    spec: &'a ExperimentSpec,
    records: &'a [TrialRecord],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    ls_ratios: Vec<LsRatio>,
}

/// Spec, records and (for least-squares campaigns) the ratio summary as JSON.
pub fn emit_json(
    spec: &ExperimentSpec,
    result: &ExperimentResult,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let report = JsonReport {
        spec,
        records: &result.records,
        ls_ratios: if spec.compares_least_squares() {
            result.ls_ratios()
        } else {
            Vec::new()
        },
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| Error::Parse(e.to_string()))?;
    w.flush().map_err(|e| Error::io(path, e))
}
