//! The `report.json` record and its serialization.
//!
//! Field order is fixed by the struct definitions. Floats are written in
//! scientific notation with 17 significant digits, enough to round-trip every
//! `f64`, so equal reports serialize to equal bytes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::dataset::FeatureKind;
use crate::dimdist::DivergenceKind;
use crate::pcir::Direction;

pub const REPORT_VERSION: &str = "1.0";

/// JSON Schema (draft 7) for [`ExplanationReport`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub version: String,
    pub config: ReportConfig,
    pub globals: Globals,
    pub features: Vec<FeatureRecord>,
}

/// Echo of the settings that shaped the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub model: String,
    pub output_col: Option<String>,
    pub mode: String,
    pub bins: usize,
    pub n_prime: usize,
    /// `None` stands for an infinite weight on the gap.
    pub lambda: Option<f64>,
    pub divergence: DivergenceKind,
    pub epsilon: f64,
    pub candidates: usize,
    pub refine_iters: usize,
    pub miller_madow: bool,
    pub numerator: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Globals {
    pub n: usize,
    pub n_prime: usize,
    pub env_gap: f64,
    pub output_divergence_bits: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jmi_bits: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_mutual_impact: Option<f64>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub name: String,
    pub kind: FeatureKind,
    pub direction: Direction,
    pub pcir: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcir: Option<f64>,
    pub entropy_bits: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cmmi_bits: Option<f64>,
}

/// Pretty printing with fixed-width float output.
struct ReportFormatter(PrettyFormatter<'static>);

impl Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value with the report float format. Non-finite floats
/// become `null`, as with plain serde_json.
pub fn to_json_bytes<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, ReportFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

impl ExplanationReport {
    pub fn to_json(&self) -> Vec<u8> {
        to_json_bytes(self).expect("report fields are always serializable")
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<Self> {
        serde_json::from_slice(bytes)
    }

    /// Plot-ready table, one row per feature. Absent values are empty cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,kind,direction,pcir,mcir,entropy_bits,cmmi_bits\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for f in &self.features {
            s.push_str(&format!(
                "{},{},{},{:.16e},{},{:.16e},{}\n",
                csv_field(&f.name),
                f.kind.as_str(),
                f.direction.as_str(),
                f.pcir,
                opt(f.mcir),
                f.entropy_bits,
                opt(f.cmmi_bits),
            ));
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
