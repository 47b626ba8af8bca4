//! Instance files, vertex-function inputs and report output.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curvature::{CurvatureEstimate, KdResult};
use crate::error::{Error, Result};
use crate::heat::FlowTrajectory;
use crate::hypergraph::{Hypergraph, VertexFunction, INFINITE};
use crate::laplacian::LaplacianValue;
use crate::oracle::OracleKd;
use crate::resolvent::ProxResult;
use crate::rigidity::RigidityReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub members: Vec<String>,
    pub weight: Weight,
}

/// Edge weight as written in a file. Integral weights are written without a
/// fractional part so hand-written files survive a read/write cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight(pub f64);

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let w = self.0;
        if w.fract() == 0.0 && w.abs() < 9.0e15 {
            s.serialize_i64(w as i64)
        } else {
            s.serialize_f64(w)
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Weight)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

impl InstanceFile {
    pub fn of(h: &Hypergraph) -> Self {
        InstanceFile {
            name: h.name().to_string(),
            vertices: h.vertices().to_vec(),
            edges: h
                .edges()
                .iter()
                .map(|e| EdgeSpec {
                    members: e.members.iter().map(|&m| h.vertex_name(m).to_string()).collect(),
                    weight: Weight(e.weight),
                })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<Hypergraph> {
        let verts: Vec<&str> = self.vertices.iter().map(String::as_str).collect();
        let edges: Vec<(Vec<&str>, f64)> = self
            .edges
            .iter()
            .map(|e| (e.members.iter().map(String::as_str).collect(), e.weight.0))
            .collect();
        let borrowed: Vec<(&[&str], f64)> = edges.iter().map(|(m, w)| (m.as_slice(), *w)).collect();
        Hypergraph::from_names(self.name.clone(), &verts, &borrowed)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| with_path(e, path))
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn parse_instance_str(text: &str) -> Result<Hypergraph> {
    serde_json::from_str::<InstanceFile>(text).map_err(parse_error)?.build()
}

pub fn parse_instance(path: impl AsRef<Path>) -> Result<Hypergraph> {
    parse_instance_str(&read(path.as_ref())?)
}

pub fn instance_to_string(h: &Hypergraph) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceFile::of(h)).expect("instance serialises");
    s.push('\n');
    s
}

pub fn write_instance(h: &Hypergraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, instance_to_string(h)).map_err(|e| with_path(e, path))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FunctionFile {
    Raw(Vec<f64>),
    Tagged(VertexFunction),
    Named(std::collections::BTreeMap<String, f64>),
}

/// A vertex function from `rho_<vertex>` or from a JSON file holding a raw
/// array, `{"values": [...], "view": "raw" | "density"}`, or an object
/// mapping every vertex name to its raw value.
pub fn parse_function(h: &Hypergraph, spec: &str) -> Result<Vec<f64>> {
    if let Some(name) = spec.strip_prefix("rho_") {
        if !Path::new(spec).exists() {
            return h.rho(h.vertex_index(name)?);
        }
    }
    parse_function_str(h, &read(Path::new(spec))?)
}

pub fn parse_function_str(h: &Hypergraph, text: &str) -> Result<Vec<f64>> {
    match serde_json::from_str::<FunctionFile>(text).map_err(parse_error)? {
        FunctionFile::Raw(v) => {
            h.check_len(&v)?;
            Ok(v)
        }
        FunctionFile::Tagged(f) => f.to_raw(h),
        FunctionFile::Named(map) => {
            let mut out = vec![f64::NAN; h.num_vertices()];
            for (name, v) in map {
                out[h.vertex_index(&name)?] = v;
            }
            if let Some(i) = out.iter().position(|v| v.is_nan()) {
                return Err(Error::InvalidArgument(format!(
                    "no value given for vertex `{}`",
                    h.vertex_name(i)
                )));
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`, expected json or csv"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub name: String,
    pub vertices: Vec<String>,
    pub degrees: Vec<f64>,
    pub volume: f64,
    pub edges: usize,
    pub connected: bool,
    /// `None` marks pairs that no chain connects.
    pub distances: Vec<Vec<Option<u32>>>,
    pub diameter: Option<u32>,
}

impl InstanceInfo {
    pub fn of(h: &Hypergraph) -> Self {
        let distances: Vec<Vec<Option<u32>>> = h
            .distance_matrix()
            .into_iter()
            .map(|row| row.into_iter().map(|d| (d != INFINITE).then_some(d)).collect())
            .collect();
        let connected = h.is_connected();
        let diameter = connected.then(|| distances.iter().flatten().flatten().copied().max().unwrap_or(0));
        InstanceInfo {
            name: h.name().to_string(),
            vertices: h.vertices().to_vec(),
            degrees: h.degrees().to_vec(),
            volume: h.volume(),
            edges: h.num_edges(),
            connected,
            distances,
            diameter,
        }
    }
}

/// A reference computation from the oracle module.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleVector {
    pub kind: String,
    pub input: Vec<f64>,
    pub values: Vec<f64>,
}

/// Anything a subcommand prints. JSON output is the wrapped value itself.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Info(InstanceInfo),
    Laplacian(LaplacianValue),
    Resolvent(ProxResult),
    Heat(FlowTrajectory),
    Kd(KdResult),
    OracleKd(OracleKd),
    Oracle(OracleVector),
    Curvature(Vec<CurvatureEstimate>),
    Rigidity(RigidityReport),
}

pub const CURVATURE_HEADER: [&str; 9] = [
    "x",
    "y",
    "d",
    "lambda",
    "kappa_lambda",
    "ratio",
    "kappa_lower_est",
    "kappa_upper_est",
    "C_bound",
];

pub fn emit_report(h: &Hypergraph, report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| Error::InvalidArgument(format!("report is not serialisable: {e}")))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => csv_report(h, report),
    }
}

fn csv_report(h: &Hypergraph, report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let names = h.vertices();
    let num = |v: f64| v.to_string();
    let rows: Vec<Vec<String>> = match report {
        Report::Info(info) => {
            let mut rows = vec![["vertex", "degree"]
                .into_iter()
                .map(String::from)
                .chain(names.iter().cloned())
                .collect()];
            for (i, row) in info.distances.iter().enumerate() {
                let mut r = vec![names[i].clone(), num(info.degrees[i])];
                r.extend(row.iter().map(|d| d.map_or_else(|| "inf".into(), |d| d.to_string())));
                rows.push(r);
            }
            rows
        }
        Report::Laplacian(l) => vertex_table(names, &["value", "density"], &[&l.value, &h.density(&l.value)]),
        Report::Resolvent(r) => vertex_table(names, &["input", "minimizer"], &[&r.input, &r.minimizer]),
        Report::Oracle(o) => vertex_table(names, &["input", "value"], &[&o.input, &o.values]),
        Report::Heat(t) => {
            let mut rows = vec![["time", "energy", "mass"]
                .into_iter()
                .map(String::from)
                .chain(names.iter().cloned())
                .collect::<Vec<_>>()];
            for k in 0..t.states.len() {
                let mut r = vec![num(t.times[k]), num(t.energies[k]), num(t.masses[k])];
                r.extend(t.states[k].iter().map(|&v| num(v)));
                rows.push(r);
            }
            rows
        }
        Report::Kd(k) => vec![
            vec!["x".into(), "y".into(), "lambda".into(), "kd".into(), "distance_candidates_kd".into()],
            vec![k.x.clone(), k.y.clone(), num(k.lambda), num(k.value), num(k.distance_candidates_value)],
        ],
        Report::OracleKd(k) => vec![
            vec!["kd".into(), "polytope_vertices".into(), "evaluated".into()],
            vec![num(k.value), k.polytope_vertices.to_string(), k.evaluated.to_string()],
        ],
        Report::Curvature(estimates) => {
            let mut rows = vec![CURVATURE_HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
            for e in estimates {
                let c = e.c_bound.distance.as_ref().map_or(String::new(), |b| num(b.value));
                for r in &e.rows {
                    rows.push(vec![
                        e.x.clone(),
                        e.y.clone(),
                        e.d.to_string(),
                        num(r.lambda),
                        num(r.kappa_lambda),
                        num(r.ratio),
                        num(e.lower),
                        num(e.upper),
                        c.clone(),
                    ]);
                }
            }
            rows
        }
        Report::Rigidity(r) => {
            let mut rows = vec![vec!["p".into(), "q".into(), "vertex".into(), "excess".into()]];
            for e in &r.excess {
                for (v, x) in names.iter().zip(&e.values) {
                    rows.push(vec![e.p.clone(), e.q.clone(), v.clone(), num(*x)]);
                }
            }
            rows
        }
    };
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Io(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn vertex_table(names: &[String], columns: &[&str], data: &[&[f64]]) -> Vec<Vec<String>> {
    let mut rows = vec![std::iter::once("vertex")
        .chain(columns.iter().copied())
        .map(String::from)
        .collect::<Vec<_>>()];
    for (i, name) in names.iter().enumerate() {
        let mut r = vec![name.clone()];
        r.extend(data.iter().map(|col| col[i].to_string()));
        rows.push(r);
    }
    rows
}
