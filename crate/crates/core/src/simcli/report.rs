//! Byte-stable report emission in three formats.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{json, Value};

use super::experiment::ExperimentReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    TableText,
    Csv,
    JsonLines,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table-text" | "table" | "text" => Ok(Format::TableText),
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            _ => Err(format!("unknown format `{s}` (expected table-text, csv or json-lines)")),
        }
    }
}

/// Float text used in CSV and tables: shortest round-trip form, switching to
/// exponent notation for very small or large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn summary_value(r: &ExperimentReport) -> Value {
    json!({
        "type": "summary",
        "summary": r.summary,
        "invariants": r.invariants,
        "provenance": r.provenance,
    })
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

fn table_bytes(title: &str, header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|j| rows.iter().map(|r| r[j].chars().count()).chain([header[j].chars().count()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = format!("# {title}\n");
    out += &line(header);
    for r in rows {
        out += &line(r);
    }
    out
}

/// Per-sample CSV columns: `sample_index, zeta_angle_rad, first_entry_step,
/// final_distance, converged`. The summary appears only in the JSON-lines and
/// table forms, since it does not fit the per-sample columns.
pub fn emit_report(r: &ExperimentReport, format: Format) -> Vec<u8> {
    let header: Vec<String> = ["sample_index", "zeta_angle_rad", "first_entry_step", "final_distance", "converged"]
        .map(String::from)
        .to_vec();
    let rows = || {
        r.records
            .iter()
            .map(|x| {
                vec![
                    x.sample_index.to_string(),
                    num(x.zeta_angle_rad),
                    x.first_entry_step.to_string(),
                    num(x.final_distance),
                    u8::from(x.converged).to_string(),
                ]
            })
            .collect::<Vec<_>>()
    };
    match format {
        Format::Csv => csv_bytes(&header, &rows()),
        Format::JsonLines => {
            let mut out = String::new();
            for x in &r.records {
                let mut v = serde_json::to_value(x).expect("records serialize");
                v.as_object_mut().expect("record is an object").insert("type".into(), "sample".into());
                out += &v.to_string();
                out.push('\n');
            }
            out += &summary_value(r).to_string();
            out.push('\n');
            out.into_bytes()
        }
        Format::TableText => {
            let s = &r.summary;
            let mut out = String::from("# summary\n");
            let q = s.distance_quantiles.map(num).join(" ");
            let mut kv = vec![
                ("samples", s.samples.to_string()),
                ("steps", s.steps.to_string()),
                ("converged", s.converged.to_string()),
                ("on_boundary", s.on_boundary.to_string()),
                ("wandering", s.wandering.to_string()),
                ("converged_fraction", num(s.converged_fraction)),
                ("limit", format!("{} {}", num(s.limit_re), num(s.limit_im))),
                ("distance_quantiles", q),
            ];
            if let Some(d) = s.max_inner_deviation {
                kv.push(("max_inner_deviation", num(d)));
            }
            if let Some(d) = s.max_radial_deviation {
                kv.push(("max_radial_deviation", num(d)));
            }
            kv.push(("seed", r.provenance.seed.to_string()));
            kv.push(("config_hash", r.provenance.config_hash.clone()));
            for (k, v) in kv {
                let _ = writeln!(out, "{k:<22}{v}");
            }
            out += &invariant_table(&r.invariants);
            out += &table_bytes("samples", &header, &rows());
            out.into_bytes()
        }
    }
}

fn invariant_table(inv: &[super::experiment::InvariantResult]) -> String {
    let header = ["suite", "invariant", "result", "detail"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = inv
        .iter()
        .map(|i| {
            let result = if i.inconclusive { "inconclusive" } else if i.passed { "pass" } else { "FAIL" };
            vec![i.suite.clone(), i.name.clone(), result.to_string(), i.detail.clone()]
        })
        .collect();
    table_bytes("invariants", &header, &rows)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.as_f64().filter(|_| n.is_f64()).map_or_else(|| n.to_string(), num),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn keys(r: &Value) -> Vec<String> {
    r.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default()
}

fn rows_for(header: &[String], records: &[Value]) -> Vec<Vec<String>> {
    records.iter().map(|r| header.iter().map(|k| r.get(k).map(cell).unwrap_or_default()).collect()).collect()
}

/// Emits flat JSON objects as rows. CSV columns follow the union of keys in
/// first-seen order; table text starts a new table whenever the key set
/// changes.
pub fn emit_records(title: &str, records: &[Value], format: Format) -> Vec<u8> {
    match format {
        Format::JsonLines => records.iter().map(|v| v.to_string() + "\n").collect::<String>().into_bytes(),
        Format::Csv => {
            let mut header: Vec<String> = Vec::new();
            for k in records.iter().flat_map(keys) {
                if !header.contains(&k) {
                    header.push(k);
                }
            }
            csv_bytes(&header, &rows_for(&header, records))
        }
        Format::TableText => {
            let mut out = String::new();
            let mut start = 0;
            while start < records.len() {
                let header = keys(&records[start]);
                let len = records[start..].iter().take_while(|r| keys(r) == header).count();
                let group = &records[start..start + len];
                let mut table = table_bytes(title, &header, &rows_for(&header, group));
                if start > 0 {
                    // Only the first table carries the title.
                    table = table.split_once('\n').map_or(table.clone(), |(_, rest)| format!("\n{rest}"));
                }
                out += &table;
                start += len;
            }
            if records.is_empty() {
                out = format!("# {title}\n");
            }
            out.into_bytes()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::experiment::{run_boundary_experiment, BoundaryExperiment};
    use super::super::scenario::ExperimentSpec;
    use super::*;
    use crate::holomap::MapExpr;
    use crate::ifs::{Generator, IFSSchedule};
    use num_complex::Complex64;

    fn report(samples: usize) -> ExperimentReport {
        let half = MapExpr::affine(Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let spec = ExperimentSpec { samples, steps: 40, seed: 5, ..ExperimentSpec::default() };
        run_boundary_experiment(&BoundaryExperiment::new(IFSSchedule::new(Generator::Cycle(vec![half])), &spec)).unwrap()
    }

    #[test]
    fn empty_experiment_is_header_only_csv() {
        let mut r = report(3);
        r.records.clear();
        let bytes = emit_report(&r, Format::Csv);
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "sample_index,zeta_angle_rad,first_entry_step,final_distance,converged\n"
        );
    }

    #[test]
    fn csv_rows_and_determinism() {
        let a = emit_report(&report(25), Format::Csv);
        let b = emit_report(&report(25), Format::Csv);
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.lines().nth(1).unwrap().starts_with("0,"));
        assert!(text.lines().skip(1).all(|l| l.ends_with(",1")));
    }

    #[test]
    fn json_lines_count_and_summary() {
        let bytes = emit_report(&report(40), Format::JsonLines);
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 41);
        let last: Value = serde_json::from_str(lines[40]).unwrap();
        assert_eq!(last["type"], "summary");
        assert_eq!(last["summary"]["converged"], 40);
        let first: Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["type"], "sample");
        assert_eq!(first["sample_index"], 0);
    }

    #[test]
    fn table_lists_summary_and_samples() {
        let text = String::from_utf8(emit_report(&report(3), Format::TableText)).unwrap();
        assert!(text.starts_with("# summary\n"));
        assert!(text.contains("converged_fraction    1.0"));
        assert!(text.contains("# samples"));
        assert!(text.contains("conservation"));
    }

    #[test]
    fn generic_records() {
        let recs = vec![json!({"name": "a", "x": 1.5}), json!({"name": "b", "y": 2})];
        let csv = String::from_utf8(emit_records("t", &recs, Format::Csv)).unwrap();
        assert_eq!(csv, "name,x,y\na,1.5,\nb,,2\n");
        assert_eq!(emit_records("t", &recs, Format::JsonLines).iter().filter(|&&b| b == b'\n').count(), 2);
        let table = String::from_utf8(emit_records("t", &recs, Format::TableText)).unwrap();
        assert_eq!(table, "# t\nname    x\n   a  1.5\n\nname  y\n   b  2\n");
        assert_eq!("jsonl".parse::<Format>(), Ok(Format::JsonLines));
        assert!("xml".parse::<Format>().is_err());
    }
}
