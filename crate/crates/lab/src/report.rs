//! Run reports and their file forms.
//!
//! `report.txt` holds the report as pretty JSON with a fixed field order and
//! no timing data, so equal seeds give byte-identical files. Stage timings go
//! to `timing.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shadowlab_core::{CertificateKind, DistanceBound, GridDomain, SpacePoint};

use crate::error::LabError;
use crate::scenario::Scenario;

pub const ARTIFACT: &str = concat!("shadowlab ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    BoundedEvidence,
    UnboundedEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::BoundedEvidence => "BOUNDED_EVIDENCE",
            Verdict::UnboundedEvidence => "UNBOUNDED_EVIDENCE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Shadowing bound at one probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub label: String,
    /// `[Re z, Im z, Re w, Im w]`.
    pub probe: [f64; 4],
    pub boundary_dist: Option<f64>,
    /// Tree depth of the node attaining the bound.
    pub depth: usize,
    pub lower: f64,
    /// `None` when no upper bound is available.
    pub upper: Option<f64>,
    pub certificate: String,
    /// Whether `lower` bounds the distance in the basin itself (not a subdomain).
    pub certified: bool,
}

impl ProbeRecord {
    pub fn new(label: String, probe: SpacePoint<f64>, boundary_dist: Option<f64>, depth: usize, bound: DistanceBound) -> Self {
        Self {
            label,
            probe: [probe.z.re, probe.z.im, probe.w.re, probe.w.im],
            boundary_dist: boundary_dist.filter(|d| d.is_finite()),
            depth,
            lower: bound.lower,
            upper: bound.upper.is_finite().then_some(bound.upper),
            certificate: bound.certificate.as_str().into(),
            certified: bound.certificate.certifies_lower(),
        }
    }
}

/// A named sequence of `(parameter, value)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRecord {
    pub name: String,
    pub parameter: String,
    pub points: Vec<[f64; 2]>,
}

/// A lemma or consistency check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value: value.is_finite().then_some(value), detail: detail.into() }
    }
}

/// A certified lower bound set against an independent grid upper bound for the same pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
    pub passed: bool,
}

impl CrossCheck {
    pub fn new(label: impl Into<String>, lower: f64, upper: f64, slack: f64) -> Self {
        Self { label: label.into(), lower, upper, slack, passed: lower <= upper + slack }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub artifact: String,
    pub scenario: Scenario,
    pub regime: String,
    pub heuristic: bool,
    pub verdict: Verdict,
    pub verdict_reason: String,
    pub best_certified_lower: Option<f64>,
    /// `Ĉ_k` for `k = 0..=K` when a boundedness scan ran.
    pub c_hat: Vec<f64>,
    pub probes: Vec<ProbeRecord>,
    pub ladders: Vec<LadderRecord>,
    pub checks: Vec<Check>,
    pub cross_checks: Vec<CrossCheck>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Report(e.to_string()))
    }

    /// Reads `path`, or `path/report.txt` when `path` is a directory.
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let file = if path.is_dir() { path.join("report.txt") } else { path.to_path_buf() };
        Self::from_json(&fs::read_to_string(file)?)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn ladder(&self, name: &str) -> Option<&LadderRecord> {
        self.ladders.iter().find(|l| l.name == name)
    }

    pub fn write_probes_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "probe_re,probe_im_z,probe_re_w,probe_im_w,boundary_dist,depth,lower,upper,certificate")?;
        for p in &self.probes {
            let opt = |x: Option<f64>| x.map_or_else(|| "inf".to_string(), |v| v.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.probe[0],
                p.probe[1],
                p.probe[2],
                p.probe[3],
                p.boundary_dist.map_or_else(String::new, |v| v.to_string()),
                p.depth,
                p.lower,
                opt(p.upper),
                p.certificate
            )?;
        }
        Ok(())
    }
}

/// Everything a run produces besides the report.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    /// `(file name, SVG document)`.
    pub plots: Vec<(String, String)>,
    /// `(file stem, grid)`, written as PGM membership images.
    pub grids: Vec<(String, GridDomain)>,
    /// Other files, `(name, contents)`.
    pub files: Vec<(String, String)>,
    /// `(stage, seconds)`.
    pub timing: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct Timing<'a> {
    scenario: &'a str,
    stages: Vec<StageTime<'a>>,
    total_seconds: f64,
}

#[derive(Serialize)]
struct StageTime<'a> {
    stage: &'a str,
    seconds: f64,
}

/// Writes all outputs into `dir` and returns the paths written.
pub fn emit(report: &Report, artifacts: &Artifacts, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("report.txt");
    fs::write(&path, report.to_json())?;
    written.push(path);

    let path = dir.join("probes.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    report.write_probes_csv(&mut out)?;
    out.flush()?;
    written.push(path);

    for (name, svg) in &artifacts.plots {
        let path = dir.join(name);
        fs::write(&path, svg)?;
        written.push(path);
    }
    for (stem, grid) in &artifacts.grids {
        let path = dir.join(format!("{stem}.pgm"));
        let mut out = BufWriter::new(File::create(&path)?);
        grid.write_pgm(&mut out)?;
        out.flush()?;
        written.push(path);
    }
    for (name, text) in &artifacts.files {
        let path = dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
    }

    let timing = Timing {
        scenario: &report.scenario.name,
        stages: artifacts.timing.iter().map(|(s, t)| StageTime { stage: s, seconds: *t }).collect(),
        total_seconds: artifacts.timing.iter().map(|(_, t)| t).sum(),
    };
    let path = dir.join("timing.json");
    fs::write(&path, serde_json::to_string_pretty(&timing).expect("timing serializes"))?;
    written.push(path);
    Ok(written)
}

/// Certificate kinds that bound the basin distance from below.
pub fn certified_kind(name: &str) -> bool {
    [CertificateKind::ClosedForm, CertificateKind::Projection, CertificateKind::PuncturedDisk]
        .iter()
        .any(|k| k.as_str() == name)
}
