//! Per-repetition trace files.
//!
//! A trace has two comma-separated sections. `# baseline` holds one row per
//! tested module: test order, module, each model's prediction (DE/ND), the
//! selected model and its prediction, the recorded test result, the true
//! label, effort, incorrect-selection case, each model's evaluation (CO/WR),
//! and each model's AUC after the step. `# retest` holds one row per
//! re-prediction candidate: pass, module, re-prediction model, its
//! prediction, whether the module was retested, the retest result (`-` when
//! not retested), and each model's AUC afterwards.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::auc::Confusion;
use crate::error::{Error, Result};
use crate::reprediction::RetestLogEntry;
use crate::simulator::SimulationRun;

const BASELINE_MARKER: &str = "# baseline";
const RETEST_MARKER: &str = "# retest";

fn de(b: bool) -> &'static str {
    if b {
        "DE"
    } else {
        "ND"
    }
}

fn parse_de(s: &str, line: usize) -> Result<bool> {
    match s {
        "DE" => Ok(true),
        "ND" => Ok(false),
        other => Err(Error::Trace {
            line,
            message: format!("expected DE or ND, got {other:?}"),
        }),
    }
}

fn csv_section(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer.write_record(&header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn emit_trace(run: &SimulationRun, retests: &[RetestLogEntry]) -> String {
    let names = run.predictions.arm_names();
    let mut header = vec!["order".to_string(), "module".to_string()];
    header.extend(names.iter().map(|n| format!("pred:{n}")));
    header.extend(
        [
            "selected_model",
            "selected_prediction",
            "test_result",
            "true_label",
            "effort",
            "case",
        ]
        .map(String::from),
    );
    header.extend(names.iter().map(|n| format!("eval:{n}")));
    header.extend(names.iter().map(|n| format!("auc:{n}")));
    let rows = run
        .log
        .iter()
        .map(|e| {
            let mut row = vec![e.order.to_string(), e.module_id.clone()];
            row.extend(e.per_arm_prediction.iter().map(|&p| de(p).to_string()));
            row.push(names[e.selected_arm].clone());
            row.push(de(e.used_prediction).into());
            row.push(de(e.recorded_result).into());
            row.push(de(e.true_label).into());
            row.push(format!("{:?}", e.effort));
            row.push(e.outcome_case.code().into());
            row.extend(e.evaluations.iter().map(|v| v.code().to_string()));
            row.extend(e.per_arm_auc_after.iter().map(|a| a.to_string()));
            row
        })
        .collect();
    let baseline = csv_section(header, rows);

    let mut header: Vec<String> = [
        "pass",
        "module",
        "reprediction_model",
        "reprediction",
        "retested",
        "retest_result",
    ]
    .map(String::from)
    .to_vec();
    header.extend(names.iter().map(|n| format!("auc:{n}")));
    let rows = retests
        .iter()
        .map(|e| {
            let mut row = vec![
                e.pass_index.to_string(),
                e.module_id.clone(),
                names[e.reprediction_arm].clone(),
                de(e.reprediction).into(),
                e.retested.to_string(),
                e.retest_recorded_result.map_or("-".to_string(), |r| de(r).to_string()),
            ];
            row.extend(e.arm_aucs_after.iter().map(|a| a.to_string()));
            row
        })
        .collect();
    let retest = csv_section(header, rows);

    format!("{BASELINE_MARKER}\n{baseline}{RETEST_MARKER}\n{retest}")
}

pub fn write_trace(path: &Path, run: &SimulationRun, retests: &[RetestLogEntry]) -> Result<()> {
    fs::write(path, emit_trace(run, retests)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceBaselineRow {
    pub order: usize,
    pub module: String,
    pub predictions: Vec<bool>,
    pub selected_model: String,
    pub selected_prediction: bool,
    pub test_result: bool,
    pub true_label: bool,
    pub aucs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRetestRow {
    pub pass: usize,
    pub module: String,
    pub reprediction_model: String,
    pub reprediction: bool,
    pub retested: bool,
    pub retest_result: Option<bool>,
    pub aucs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub models: Vec<String>,
    pub baseline: Vec<TraceBaselineRow>,
    pub retests: Vec<TraceRetestRow>,
}

impl ParsedTrace {
    /// Recounts each model's confusion counts from the rows: every baseline
    /// test and every retest scores every model.
    pub fn replay_confusion(&self) -> Result<Vec<Confusion>> {
        let mut counts = vec![Confusion::default(); self.models.len()];
        let mut by_module: HashMap<&str, &[bool]> = HashMap::new();
        for row in &self.baseline {
            by_module.insert(&row.module, &row.predictions);
            for (c, &p) in counts.iter_mut().zip(&row.predictions) {
                c.record(p, row.test_result);
            }
        }
        for row in self.retests.iter().filter(|r| r.retested) {
            let predictions = by_module.get(row.module.as_str()).ok_or_else(|| Error::Trace {
                line: 0,
                message: format!("retested module {:?} missing from baseline", row.module),
            })?;
            let result = row.retest_result.ok_or_else(|| Error::Trace {
                line: 0,
                message: format!("retested module {:?} has no result", row.module),
            })?;
            for (c, &p) in counts.iter_mut().zip(predictions.iter()) {
                c.record(p, result);
            }
        }
        Ok(counts)
    }
}

/// Header plus (source line, record) pairs.
type Section = (Vec<String>, Vec<(usize, csv::StringRecord)>);

fn read_section(text: &str, first_line: usize) -> Result<Section> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Trace {
            line: first_line,
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = first_line + 1 + i;
        let record = record.map_err(|e| Error::Trace {
            line,
            message: e.to_string(),
        })?;
        rows.push((line, record));
    }
    Ok((header, rows))
}

pub fn parse_trace(text: &str) -> Result<ParsedTrace> {
    let baseline_at = text.find(BASELINE_MARKER).ok_or(Error::Trace {
        line: 1,
        message: "missing baseline section".into(),
    })?;
    let retest_at = text.find(RETEST_MARKER).ok_or(Error::Trace {
        line: 1,
        message: "missing retest section".into(),
    })?;
    let line_at = |offset: usize| text[..offset].matches('\n').count() + 1;
    let baseline_text = text[baseline_at + BASELINE_MARKER.len()..retest_at].trim_start_matches('\n');
    let retest_text = text[retest_at + RETEST_MARKER.len()..].trim_start_matches('\n');

    let (header, rows) = read_section(baseline_text, line_at(baseline_at) + 1)?;
    let models: Vec<String> = header
        .iter()
        .filter_map(|h| h.strip_prefix("pred:").map(String::from))
        .collect();
    let k = models.len();
    let expected = 2 + k + 6 + 2 * k;
    let mut baseline = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if r.len() != expected {
            return Err(Error::Trace {
                line,
                message: format!("expected {expected} fields, got {}", r.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Trace {
                line,
                message: format!("bad number {s:?}"),
            })
        };
        baseline.push(TraceBaselineRow {
            order: num(&r[0])? as usize,
            module: r[1].to_string(),
            predictions: (0..k).map(|j| parse_de(&r[2 + j], line)).collect::<Result<_>>()?,
            selected_model: r[2 + k].to_string(),
            selected_prediction: parse_de(&r[3 + k], line)?,
            test_result: parse_de(&r[4 + k], line)?,
            true_label: parse_de(&r[5 + k], line)?,
            aucs: (0..k).map(|j| num(&r[8 + 2 * k + j])).collect::<Result<_>>()?,
        });
    }

    let (_, rows) = read_section(retest_text, line_at(retest_at) + 1)?;
    let mut retests = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if r.len() != 6 + k {
            return Err(Error::Trace {
                line,
                message: format!("expected {} fields, got {}", 6 + k, r.len()),
            });
        }
        let bad = |m: String| Error::Trace { line, message: m };
        retests.push(TraceRetestRow {
            pass: r[0].parse().map_err(|_| bad(format!("bad pass {:?}", &r[0])))?,
            module: r[1].to_string(),
            reprediction_model: r[2].to_string(),
            reprediction: parse_de(&r[3], line)?,
            retested: r[4].parse().map_err(|_| bad(format!("bad flag {:?}", &r[4])))?,
            retest_result: match &r[5] {
                "-" => None,
                s => Some(parse_de(s, line)?),
            },
            aucs: (0..k)
                .map(|j| r[6 + j].parse().map_err(|_| bad(format!("bad number {:?}", &r[6 + j]))))
                .collect::<Result<_>>()?,
        });
    }

    Ok(ParsedTrace {
        models,
        baseline,
        retests,
    })
}
