//! Machine-readable run reports.
//!
//! JSON output is an array of row objects (runs, then sweep aggregates);
//! CSV uses one fixed header covering both row kinds. Every float is
//! serialized with 17 significant digits so values survive a round trip
//! bit-exactly and identical runs produce byte-identical files.

use std::io::Write;

use serde::{Serialize, Serializer};

/// `f64` wrapper serialized as a 17-significant-digit JSON number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct J17(pub f64);

pub fn format_f17(v: f64) -> String {
    format!("{v:.16e}")
}

impl Serialize for J17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let number = serde_json::Number::from_string_unchecked(format_f17(self.0));
        number.serialize(serializer)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneDesc {
    pub mesh_a: String,
    pub mesh_b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_ratio: Option<J17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translate: Option<[J17; 3]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<J17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    pub seed: u64,
    pub culling: bool,
    pub dpip: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingMs {
    pub pip: J17,
    pub psg: J17,
    pub hdist: J17,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsEcho {
    pub node_visits: u64,
    pub triangle_tests: u64,
    pub rays_cast: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub kind: &'static str,
    pub scene: SceneDesc,
    pub config: ConfigEcho,
    pub status: String,
    pub depth: J17,
    pub h_ab: J17,
    pub h_ba: J17,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_ab: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_ba: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_depth: Option<J17>,
    /// `|depth - oracle_depth| / oracle_depth`; present iff the oracle ran
    /// and its depth is nonzero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<J17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<TimingMs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsEcho>,
}

/// Per-value summary over the sweep's seeds.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub kind: &'static str,
    pub sweep_variable: String,
    pub value: J17,
    pub runs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_error: Option<J17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error: Option<J17>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Row {
    Run(Box<RunReport>),
    Aggregate(AggregateRow),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub const CSV_HEADER: [&str; 33] = [
    "kind",
    "mesh_a",
    "mesh_b",
    "overlap_ratio",
    "axis",
    "translate_x",
    "translate_y",
    "translate_z",
    "strategy",
    "rate",
    "count",
    "seed",
    "culling",
    "dpip",
    "status",
    "depth",
    "h_ab",
    "h_ba",
    "witness_ab",
    "witness_ba",
    "oracle_depth",
    "error_rate",
    "pip_ms",
    "psg_ms",
    "hdist_ms",
    "node_visits",
    "triangle_tests",
    "rays_cast",
    "sweep_variable",
    "sweep_value",
    "runs",
    "mean_error",
    "max_error",
];

fn opt_f17(v: Option<J17>) -> String {
    v.map(|x| format_f17(x.0)).unwrap_or_default()
}

fn opt_display<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_record(row: &Row) -> Vec<String> {
    match row {
        Row::Run(r) => {
            let t = r.scene.translate;
            vec![
                r.kind.to_string(),
                r.scene.mesh_a.clone(),
                r.scene.mesh_b.clone(),
                opt_f17(r.scene.overlap_ratio),
                r.scene.axis.clone().unwrap_or_default(),
                opt_f17(t.map(|v| v[0])),
                opt_f17(t.map(|v| v[1])),
                opt_f17(t.map(|v| v[2])),
                r.config.strategy.clone(),
                opt_f17(r.config.rate),
                opt_display(r.config.count),
                r.config.seed.to_string(),
                r.config.culling.to_string(),
                r.config.dpip.to_string(),
                r.status.clone(),
                format_f17(r.depth.0),
                format_f17(r.h_ab.0),
                format_f17(r.h_ba.0),
                opt_display(r.witness_ab),
                opt_display(r.witness_ba),
                opt_f17(r.oracle_depth),
                opt_f17(r.error_rate),
                opt_f17(r.timing_ms.as_ref().map(|t| t.pip)),
                opt_f17(r.timing_ms.as_ref().map(|t| t.psg)),
                opt_f17(r.timing_ms.as_ref().map(|t| t.hdist)),
                opt_display(r.stats.as_ref().map(|s| s.node_visits)),
                opt_display(r.stats.as_ref().map(|s| s.triangle_tests)),
                opt_display(r.stats.as_ref().map(|s| s.rays_cast)),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]
        }
        Row::Aggregate(a) => {
            let mut record = vec![a.kind.to_string()];
            record.extend(std::iter::repeat_n(String::new(), 27));
            record.push(a.sweep_variable.clone());
            record.push(format_f17(a.value.0));
            record.push(a.runs.to_string());
            record.push(opt_f17(a.mean_error));
            record.push(opt_f17(a.max_error));
            record
        }
    }
}

/// Writes the rows as JSON or CSV. The byte stream is a pure function of
/// the rows.
pub fn emit_report(rows: &[Row], format: ReportFormat, out: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(out);
            writer.write_record(CSV_HEADER)?;
            for row in rows {
                writer.write_record(csv_record(row))?;
            }
            writer.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_run() -> Row {
        Row::Run(Box::new(RunReport {
            kind: "run",
            scene: SceneDesc {
                mesh_a: "a.obj".into(),
                mesh_b: "a.obj".into(),
                overlap_ratio: Some(J17(0.5)),
                axis: Some("x".into()),
                translate: None,
            },
            config: ConfigEcho {
                strategy: "vertex".into(),
                rate: Some(J17(0.01)),
                count: None,
                seed: 7,
                culling: true,
                dpip: true,
            },
            status: "ok".into(),
            depth: J17(1.0 / 3.0),
            h_ab: J17(0.25),
            h_ba: J17(1.0 / 3.0),
            witness_ab: Some(12),
            witness_ba: Some(99),
            oracle_depth: Some(J17(0.3333333)),
            error_rate: Some(J17(1e-4)),
            timing_ms: None,
            stats: Some(StatsEcho {
                node_visits: 10,
                triangle_tests: 20,
                rays_cast: 5,
            }),
        }))
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        emit_report(&[], ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("kind,mesh_a,mesh_b,"));
    }

    #[test]
    fn single_run_json_roundtrip() {
        let mut buf = Vec::new();
        emit_report(&[sample_run()], ReportFormat::Json, &mut buf).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let arr = parsed.as_array().unwrap();
        assert_eq!(arr.len(), 1);
        let run = &arr[0];
        assert_eq!(run["kind"], "run");
        assert_eq!(run["depth"].as_f64().unwrap().to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(run["config"]["seed"], 7);
        assert_eq!(run["witness_ab"], 12);
        assert_eq!(run["stats"]["triangle_tests"], 20);
        for key in ["scene", "config", "status", "depth", "h_ab", "h_ba", "oracle_depth", "error_rate"] {
            assert!(run.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn floats_carry_17_significant_digits() {
        assert_eq!(format_f17(0.5), "5.0000000000000000e-1");
        let third: f64 = format_f17(1.0 / 3.0).parse().unwrap();
        assert_eq!(third.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn csv_rows_follow_header_arity() {
        let mut buf = Vec::new();
        let agg = Row::Aggregate(AggregateRow {
            kind: "aggregate",
            sweep_variable: "rate".into(),
            value: J17(0.01),
            runs: 10,
            mean_error: Some(J17(0.001)),
            max_error: Some(J17(0.002)),
        });
        emit_report(&[sample_run(), agg], ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for record in reader.records() {
            assert_eq!(record.unwrap().len(), CSV_HEADER.len());
        }
    }
}
