//! Round logs, archives, curves and suite summaries.
//!
//! Every float written to CSV uses 17 significant digits (`{:.16e}`), and
//! the text summary uses Rust's shortest round-trip formatting, so all
//! emitted numbers parse back to the exact value.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::acquisition::AcquisitionKind;
use crate::engine::{Archive, CandidatePool, CirclesPoint, MeanStd, RunConfig, RunRecord, SuiteResults};
use crate::error::{Error, Result};
use crate::metrics::{r2_indicator, EffectSizeReport};
use crate::pareto::{non_dominated_filter, hypervolume_exact, ObjectiveVector};

/// Lossless fixed-width float text.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(s: &str, path: &Path, line: usize, column: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        reason: format!("'{s}' is not a number"),
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn round_log_header(d: usize) -> Vec<String> {
    let mut cols: Vec<String> = vec!["round".into(), "selected_id".into(), "acq_score".into()];
    cols.extend((1..=d).map(|j| format!("obj_{j}")));
    cols.extend(["hv".into(), "r2".into(), "wall_ms".into()]);
    cols
}

/// Writes `records` as CSV; an empty slice gives a header-only file.
pub fn write_round_log(path: impl AsRef<Path>, records: &[RunRecord], d: usize) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(round_log_header(d)).map_err(&err)?;
    for r in records {
        if r.objectives.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: r.objectives.len(),
            });
        }
        let mut row = vec![r.round.to_string(), r.selected_id.clone(), fmt_float(r.acq_score)];
        row.extend(r.objectives.iter().map(|&v| fmt_float(v)));
        row.extend([fmt_float(r.hv), fmt_float(r.r2), fmt_float(r.wall_ms)]);
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a round log back; returns the records and the objective count.
pub fn read_round_log(path: impl AsRef<Path>) -> Result<(Vec<RunRecord>, usize)> {
    let path = path.as_ref();
    let mut r = csv_reader(path)?;
    let err = csv_err(path);
    let header = r.headers().map_err(&err)?.clone();
    let d = header.len().saturating_sub(6);
    let expected = round_log_header(d);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            reason: format!("expected columns {}", expected.join(",")),
        });
    }
    let mut records = Vec::new();
    for (k, row) in r.records().enumerate() {
        let row = row.map_err(&err)?;
        let line = k + 2;
        let num = |c: usize| parse_float(&row[c], path, line, c + 1);
        let round = row[0].parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            column: 1,
            reason: format!("'{}' is not a round number", &row[0]),
        })?;
        records.push(RunRecord {
            round,
            selected_id: row[1].to_string(),
            acq_score: num(2)?,
            objectives: (0..d).map(|j| num(3 + j)).collect::<Result<_>>()?,
            hv: num(3 + d)?,
            r2: num(4 + d)?,
            wall_ms: num(5 + d)?,
        });
    }
    Ok((records, d))
}

/// One archive member as stored in `archive.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveRow {
    pub order: usize,
    pub id: String,
    pub initial: bool,
    pub objectives: Vec<f64>,
}

pub fn write_archive(path: impl AsRef<Path>, pool: &CandidatePool, archive: &Archive) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    let mut header = vec!["order".to_string(), "id".into(), "initial".into()];
    header.extend((1..=pool.dim()).map(|j| format!("obj_{j}")));
    w.write_record(&header).map_err(&err)?;
    for (k, &i) in archive.indices().iter().enumerate() {
        let m = pool.get(i);
        let mut row = vec![k.to_string(), m.id.clone(), (k < archive.n_initial()).to_string()];
        row.extend(m.objectives.iter().map(|&v| fmt_float(v)));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<Vec<ArchiveRow>> {
    let path = path.as_ref();
    let mut r = csv_reader(path)?;
    let err = csv_err(path);
    let d = r.headers().map_err(&err)?.len().saturating_sub(3);
    let mut rows = Vec::new();
    for (k, row) in r.records().enumerate() {
        let row = row.map_err(&err)?;
        let line = k + 2;
        let bad = |column: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            reason,
        };
        rows.push(ArchiveRow {
            order: row[0].parse().map_err(|_| bad(1, "bad order".into()))?,
            id: row[1].to_string(),
            initial: row[2].parse().map_err(|_| bad(3, "bad initial flag".into()))?,
            objectives: (0..d)
                .map(|j| parse_float(&row[3 + j], path, line, 4 + j))
                .collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

pub fn write_circles(path: impl AsRef<Path>, circles: &[CirclesPoint]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["threshold", "n_circles"]).map_err(&err)?;
    for c in circles {
        w.write_record([fmt_float(c.threshold), c.count.to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// HV and R2 after each archive prefix, starting from the initial design.
pub fn recompute_curves(rows: &[ArchiveRow], config: &RunConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let n_initial = rows.iter().take_while(|r| r.initial).count();
    if n_initial == 0 {
        return Err(Error::InvalidInput("archive has no initial design".into()));
    }
    let dirs = config.direction_set(config.utopian.len())?;
    let entries: Vec<(usize, ObjectiveVector)> = rows
        .iter()
        .enumerate()
        .map(|(k, r)| (k, ObjectiveVector(r.objectives.clone())))
        .collect();
    let mut hv = Vec::with_capacity(rows.len() - n_initial + 1);
    let mut r2 = Vec::with_capacity(hv.capacity());
    for end in n_initial..=rows.len() {
        let front = non_dominated_filter(&entries[..end]);
        hv.push(hypervolume_exact(&front, &config.acquisition.reference)?);
        r2.push(r2_indicator(front.points(), &dirs)?);
    }
    Ok((hv, r2))
}

fn pm(m: &MeanStd) -> String {
    format!("{} ± {}", m.mean, m.std)
}

fn effect_cells(e: &EffectSizeReport) -> (String, String) {
    let d = e.cohens_d.map_or_else(|| "undefined".to_string(), |d| d.to_string());
    (d, e.cliffs_delta.to_string())
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    out.push_str(&line(header));
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for row in rows {
        out.push_str(&line(row));
    }
}

/// Human-readable summary laid out as per-task method tables.
pub fn render_summary(results: &SuiteResults) -> String {
    let mut out = String::new();
    let seeds: Vec<String> = results.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(
        out,
        "# Suite summary\n\ntask: {}\nrounds: {}\nseeds: {}\n",
        results.task,
        results.rounds,
        seeds.join(", ")
    );
    let mut header = vec!["Task".to_string()];
    header.extend(results.methods.iter().map(|m| m.acquisition.label().to_string()));

    let _ = writeln!(
        out,
        "## Final hypervolume (mean ± std) after {} BO evaluations, over {} seeds\n",
        results.rounds,
        results.seeds.len()
    );
    let mut row = vec![results.task.clone()];
    row.extend(results.methods.iter().map(|m| pm(&m.final_hv)));
    table(&mut out, &header, &[row]);

    let _ = writeln!(
        out,
        "\n## Final R2 (mean ± std) after {} BO evaluations, over {} seeds\n",
        results.rounds,
        results.seeds.len()
    );
    let mut row = vec![results.task.clone()];
    row.extend(results.methods.iter().map(|m| pm(&m.final_r2)));
    table(&mut out, &header, &[row]);

    let degenerate: Vec<&str> = results
        .methods
        .iter()
        .filter(|m| m.degenerate)
        .map(|m| m.acquisition.label())
        .collect();
    if !degenerate.is_empty() {
        let _ = writeln!(
            out,
            "\nnote: fewer than two seeds for {}; std reported as 0",
            degenerate.join(", ")
        );
    }

    if !results.effects.is_empty() {
        let eh = ["Task", "Comparison", "Cohen's d", "Cliff's delta"].map(String::from);
        for (title, pick) in [
            ("hypervolume", (|e| e.hv) as fn(&crate::engine::PairwiseEffect) -> EffectSizeReport),
            ("R2", |e| e.r2),
        ] {
            let _ = writeln!(out, "\n## Effect sizes on {title}\n");
            let rows: Vec<Vec<String>> = results
                .effects
                .iter()
                .map(|e| {
                    let (d, c) = effect_cells(&pick(e));
                    vec![
                        results.task.clone(),
                        format!("{} vs {}", e.first.label(), e.second.label()),
                        d,
                        c,
                    ]
                })
                .collect();
            table(&mut out, &eh, &rows);
        }
    }

    if results.methods.iter().any(|m| !m.circles.is_empty()) {
        let _ = writeln!(out, "\n## #Circles on the final Pareto front (mean ± std)\n");
        let mut ch = vec!["Threshold".to_string()];
        ch.extend(results.methods.iter().map(|m| m.acquisition.label().to_string()));
        let rows: Vec<Vec<String>> = results
            .config
            .circle_thresholds
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let mut row = vec![t.to_string()];
                row.extend(
                    results
                        .methods
                        .iter()
                        .map(|m| m.circles.get(k).map_or("-".into(), |c| pm(&c.count))),
                );
                row
            })
            .collect();
        table(&mut out, &ch, &rows);
    }
    out
}

/// Writes the text summary and its JSON companion.
pub fn write_summary(results: &SuiteResults, text_path: impl AsRef<Path>, json_path: impl AsRef<Path>) -> Result<()> {
    let text_path = text_path.as_ref();
    std::fs::write(text_path, render_summary(results)).map_err(|e| Error::io(text_path, e))?;
    write_json(json_path, results)
}

/// Mean/std HV and R2 per method and round.
pub fn write_curves(path: impl AsRef<Path>, results: &SuiteResults) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["acquisition", "round", "hv_mean", "hv_std", "r2_mean", "r2_std"])
        .map_err(&err)?;
    for m in &results.methods {
        for (k, (hv, r2)) in m.hv_curve.iter().zip(&m.r2_curve).enumerate() {
            w.write_record([
                m.acquisition.slug().to_string(),
                k.to_string(),
                fmt_float(hv.mean),
                fmt_float(hv.std),
                fmt_float(r2.mean),
                fmt_float(r2.std),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Directory name for one trial inside a suite.
pub fn trial_dir_name(kind: AcquisitionKind, seed: u64) -> String {
    format!("{}-seed{seed}", kind.slug())
}
