//! File formats: JSON and CSV schemas shared between the library and the CLI.
//!
//! JSON artifacts are written with every float at 17 significant digits so
//! identical runs produce byte-identical files; see docs/formats.md in the
//! repository for the full schemas.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{CountChannelConfig, GammaChannel, DEFAULT_TAIL_TOL};
use crate::ensemble::InputEnsemble;
use crate::error::{Error, Result};
use crate::pmf::{ChannelMatrix, DiscretePmf, JointPmf};
use crate::solver::{CapacitySolution, Coding, KktReport, NeuronChannel};
use crate::tuning::TuningCurve;

// ---------------------------------------------------------------------------
// JSON with fixed float formatting.
// ---------------------------------------------------------------------------

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes to JSON with floats printed at 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits utf-8"))
}

pub fn write_json<T: Serialize, P: AsRef<Path>>(path: P, value: &T) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(to_json_string(value)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// PMF, joint and channel readers.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct PmfDocument {
    labels: Vec<String>,
    probs: Vec<f64>,
}

/// Reads a PMF from JSON `{"labels": [...], "probs": [...]}` or from CSV with
/// a label header row and one probability row; the format is picked by file
/// extension (`.json` vs anything else).
pub fn read_pmf<P: AsRef<Path>>(path: P) -> Result<DiscretePmf> {
    let path = path.as_ref();
    if is_json(path) {
        let doc: PmfDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        DiscretePmf::new(doc.labels, doc.probs)
    } else {
        let mut reader = csv_reader(path)?;
        let labels: Vec<String> = reader
            .headers()?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = reader.records();
        let record = rows.next().ok_or_else(|| {
            Error::Parse(format!("{}: expected one probability row", path.display()))
        })??;
        let probs = parse_floats(&record, path)?;
        if rows.next().is_some() {
            return Err(Error::Parse(format!(
                "{}: PMF files carry exactly one probability row",
                path.display()
            )));
        }
        DiscretePmf::new(labels, probs)
    }
}

#[derive(Deserialize)]
struct ChannelDocument {
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// Reads a channel matrix from JSON
/// `{"input_labels", "output_labels", "rows"}` or from CSV whose header is
/// `input,<output labels...>` with one row per input: label then p(y|x).
pub fn read_channel<P: AsRef<Path>>(path: P) -> Result<ChannelMatrix> {
    let path = path.as_ref();
    if is_json(path) {
        let doc: ChannelDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        ChannelMatrix::new(doc.input_labels, doc.output_labels, doc.rows)
    } else {
        let mut reader = csv_reader(path)?;
        let header = reader.headers()?.clone();
        if header.is_empty() {
            return Err(Error::Parse(format!("{}: empty header", path.display())));
        }
        let output_labels: Vec<String> = header
            .iter()
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        let mut input_labels = Vec::new();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let mut fields = record.iter();
            let label = fields
                .next()
                .ok_or_else(|| Error::Parse(format!("{}: empty row", path.display())))?;
            input_labels.push(label.trim().to_string());
            let probs: Vec<f64> = fields
                .map(|f| parse_float(f, path))
                .collect::<Result<_>>()?;
            rows.push(probs);
        }
        ChannelMatrix::new(input_labels, output_labels, rows)
    }
}

#[derive(Deserialize)]
struct JointDocument {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    probs: Vec<Vec<f64>>,
}

/// Reads a joint distribution from JSON
/// `{"row_labels", "col_labels", "probs"}`.
pub fn read_joint<P: AsRef<Path>>(path: P) -> Result<JointPmf> {
    let doc: JointDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    JointPmf::new(doc.row_labels, doc.col_labels, doc.probs)
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?)
}

fn parse_float(field: &str, path: &Path) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("{}: bad number {field:?}: {e}", path.display())))
}

fn parse_floats(record: &csv::StringRecord, path: &Path) -> Result<Vec<f64>> {
    record.iter().map(|f| parse_float(f, path)).collect()
}

// ---------------------------------------------------------------------------
// Capacity solution documents.
// ---------------------------------------------------------------------------

/// Run metadata attached to every artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(config: serde_json::Value, seed: Option<u64>) -> Self {
        Provenance {
            tool: "neurocap".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub max_violation: f64,
    pub at_support_gap: f64,
    pub passed: bool,
    pub slack_tol: f64,
}

impl From<&KktReport> for CertificateSummary {
    fn from(report: &KktReport) -> Self {
        CertificateSummary {
            max_violation: report.max_violation,
            at_support_gap: report.at_support_gap,
            passed: report.passed,
            slack_tol: report.slack_tol,
        }
    }
}

/// On-disk form of a capacity solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub coding: Coding,
    pub kappa: f64,
    pub a0: f64,
    pub b0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub capacity_per_use_bits: f64,
    pub capacity_bps: f64,
    pub certificate: CertificateSummary,
}

impl SolutionDocument {
    pub fn from_solution(solution: &CapacitySolution, provenance: Option<Provenance>) -> Self {
        let gamma = solution.channel.gamma();
        SolutionDocument {
            provenance,
            coding: solution.coding(),
            kappa: gamma.kappa,
            a0: gamma.a0,
            b0: gamma.b0,
            delta: solution.channel.delta(),
            tail_tol: match &solution.channel {
                NeuronChannel::Rate(cfg) => Some(cfg.tail_tol),
                NeuronChannel::Temporal(_) => None,
            },
            points: solution.ensemble.points().to_vec(),
            weights: solution.ensemble.weights().to_vec(),
            capacity_per_use_bits: solution.capacity_per_use,
            capacity_bps: solution.capacity_bps,
            certificate: (&solution.certificate).into(),
        }
    }

    /// Rebuilds an in-memory solution. The probe curve is not stored on disk,
    /// so the certificate carries the summary numbers with an empty grid; run
    /// [`crate::solver::kkt_verify`] for a fresh full report.
    pub fn to_solution(&self) -> Result<CapacitySolution> {
        let gamma = GammaChannel::new(self.kappa, self.a0, self.b0)?;
        let channel = match self.coding {
            Coding::Temporal => NeuronChannel::temporal(gamma),
            Coding::Rate => {
                let delta = self.delta.ok_or(Error::InvalidParameter {
                    name: "delta",
                    reason: "rate-coding solutions need the window length".into(),
                })?;
                NeuronChannel::rate(CountChannelConfig::new(
                    gamma,
                    delta,
                    self.tail_tol.unwrap_or(DEFAULT_TAIL_TOL),
                )?)
            }
        };
        let ensemble = InputEnsemble::new(self.points.clone(), self.weights.clone(), &gamma)?;
        Ok(CapacitySolution {
            channel,
            ensemble,
            capacity_per_use: self.capacity_per_use_bits,
            capacity_bps: self.capacity_bps,
            certificate: KktReport {
                grid: Vec::new(),
                info_density: Vec::new(),
                capacity_ref: self.capacity_per_use_bits,
                max_violation: self.certificate.max_violation,
                at_support_gap: self.certificate.at_support_gap,
                passed: self.certificate.passed,
                slack_tol: self.certificate.slack_tol,
            },
        })
    }
}

pub fn read_solution<P: AsRef<Path>>(path: P) -> Result<SolutionDocument> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

// ---------------------------------------------------------------------------
// CSV artifacts.
// ---------------------------------------------------------------------------

fn provenance_comment(provenance: &Provenance) -> String {
    format!(
        "# tool: {} v{}\n# config: {}\n# seed: {}\n",
        provenance.tool,
        provenance.version,
        provenance.config,
        provenance
            .seed
            .map_or("none".to_string(), |s| s.to_string()),
    )
}

/// KKT probe curve as CSV: `theta,info_density_bits`.
pub fn kkt_csv(report: &KktReport, provenance: Option<&Provenance>) -> String {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&provenance_comment(p));
    }
    out.push_str("theta,info_density_bits\n");
    for (&theta, &density) in report.grid.iter().zip(&report.info_density) {
        out.push_str(&format!("{theta:.16e},{density:.16e}\n"));
    }
    out
}

/// Tuning curve as CSV: one row per interval with its right breakpoint,
/// input level and mean response.
pub fn tuning_csv(
    curve: &TuningCurve,
    kappa: f64,
    delta: Option<f64>,
    provenance: Option<&Provenance>,
) -> Result<String> {
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&provenance_comment(p));
    }
    out.push_str("x_break,level_theta,mean_response\n");
    for (m, &level) in curve.levels().iter().enumerate() {
        let x_break = curve.breakpoints()[m + 1];
        let response = crate::tuning::mean_response(curve, x_break, kappa, delta)?;
        out.push_str(&format!("{x_break:.16e},{level:.16e},{response:.16e}\n"));
    }
    Ok(out)
}

/// Staircase samples as CSV: `x,mean_response`.
pub fn staircase_csv(
    curve: &TuningCurve,
    kappa: f64,
    delta: Option<f64>,
    n: usize,
    provenance: Option<&Provenance>,
) -> Result<String> {
    let samples = crate::tuning::staircase(curve, kappa, delta, n)?;
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&provenance_comment(p));
    }
    out.push_str("x,mean_response\n");
    for (x, response) in samples {
        out.push_str(&format!("{x:.16e},{response:.16e}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_are_17_significant_digits() {
        #[derive(Serialize)]
        struct Doc {
            x: f64,
        }
        let s = to_json_string(&Doc { x: 1.0 / 3.0 }).unwrap();
        assert_eq!(s, "{\"x\":3.3333333333333331e-1}");
        let parsed: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed["x"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn pmf_round_trip_csv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("p.csv");
        std::fs::write(&csv_path, "a,b,c\n0.2,0.3,0.5\n").unwrap();
        let pmf = read_pmf(&csv_path).unwrap();
        assert_eq!(pmf.labels(), &["a", "b", "c"]);
        assert_eq!(pmf.probs(), &[0.2, 0.3, 0.5]);

        let json_path = dir.path().join("p.json");
        std::fs::write(&json_path, r#"{"labels":["x","y"],"probs":[0.5,0.5]}"#).unwrap();
        let pmf = read_pmf(&json_path).unwrap();
        assert_eq!(pmf.labels(), &["x", "y"]);
    }

    #[test]
    fn channel_csv_reader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ch.csv");
        std::fs::write(&path, "input,y0,y1\nx0,0.9,0.1\nx1,0.1,0.9\n").unwrap();
        let ch = read_channel(&path).unwrap();
        assert_eq!(ch.input_labels(), &["x0", "x1"]);
        assert_eq!(ch.rows()[0], vec![0.9, 0.1]);
    }

    #[test]
    fn bad_pmf_file_reports_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "a,b\n0.5,oops\n").unwrap();
        let err = read_pmf(&path).unwrap_err();
        assert!(err.to_string().contains("oops"), "{err}");
    }
}
