//! Run configuration, trace and curve files, and legacy VTK export.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adjoint::AdjointSolution;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Mesh};
use crate::optimizer::{IterationRecord, OptimizerConfig};
use crate::shape::GradientSample;
use crate::state::StateSolution;

/// Environment variable consulted for the output directory when neither the
/// command line nor the config file sets one.
pub const OUT_DIR_ENV: &str = "SHAPEOPT_OUT_DIR";

pub const TRACE_HEADER: [&str; 9] = [
    "iter",
    "J1",
    "curve_energy",
    "mean_sq",
    "obstacle",
    "total",
    "phi_inf",
    "picard_iters",
    "wallclock_s",
];

/// File form of [`OptimizerConfig`]: a flat TOML table. Absent keys keep
/// their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat table of scalars always serializes")
    }

    /// Settings with defaults filled in, validated.
    pub fn to_optimizer_config(&self) -> Result<OptimizerConfig> {
        let mut c = OptimizerConfig::default();
        let p = &mut c.physical;
        p.re = self.re.unwrap_or(p.re);
        p.pr = self.pr.unwrap_or(p.pr);
        p.gr = self.gr.unwrap_or(p.gr);
        p.alpha = self.alpha.unwrap_or(p.alpha);
        let q = &mut c.penalties;
        q.lambda1 = self.lambda1.unwrap_or(q.lambda1);
        q.lambda2 = self.lambda2.unwrap_or(q.lambda2);
        q.lambda3 = self.lambda3.unwrap_or(q.lambda3);
        q.nu = self.nu.unwrap_or(q.nu);
        c.tau = self.tau.unwrap_or(c.tau);
        c.h = self.h.unwrap_or(c.h);
        c.curve_n = self.curve_n.or(c.curve_n);
        c.max_iters = self.max_iters.unwrap_or(c.max_iters);
        c.stop_tol = self.stop_tol.unwrap_or(c.stop_tol);
        c.snapshot_stride = self.snapshot_stride.unwrap_or(c.snapshot_stride);
        c.preset = self.case;
        if self.max_iters == Some(0) {
            return Err(Error::config("max_iters", "must be positive"));
        }
        c.validate()?;
        Ok(c)
    }

    /// The file form of a resolved configuration.
    pub fn from_optimizer_config(c: &OptimizerConfig, out_dir: Option<&Path>) -> Self {
        Self {
            re: Some(c.physical.re),
            pr: Some(c.physical.pr),
            gr: Some(c.physical.gr),
            alpha: Some(c.physical.alpha),
            lambda1: Some(c.penalties.lambda1),
            lambda2: Some(c.penalties.lambda2),
            lambda3: Some(c.penalties.lambda3),
            nu: Some(c.penalties.nu),
            tau: Some(c.tau),
            h: Some(c.h),
            curve_n: Some(c.curve_intervals()),
            max_iters: Some(c.max_iters),
            stop_tol: Some(c.stop_tol),
            case: c.preset,
            out_dir: out_dir.map(|p| p.display().to_string()),
            snapshot_stride: Some(c.snapshot_stride),
        }
    }
}

/// Output directory: explicit value, else `$SHAPEOPT_OUT_DIR`, else `out`.
pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out")),
    }
}

fn record_fields(r: &IterationRecord) -> [String; 9] {
    [
        r.iter.to_string(),
        format!("{:e}", r.j1),
        format!("{:e}", r.curve_energy),
        format!("{:e}", r.mean_sq),
        format!("{:e}", r.obstacle),
        format!("{:e}", r.total),
        format!("{:e}", r.phi_inf),
        r.picard_iters.to_string(),
        format!("{:e}", r.wallclock_s),
    ]
}

/// Appends trace rows as they are produced, flushing after each one so a
/// crashed run leaves a readable prefix.
#[derive(Debug)]
pub struct TraceWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::Writer::from_writer(file);
        let mut w = Self {
            path: path.to_path_buf(),
            inner: {
                inner.write_record(TRACE_HEADER).map_err(|e| csv_io(path, e))?;
                inner
            },
        };
        w.flush()?;
        Ok(w)
    }

    pub fn append(&mut self, r: &IterationRecord) -> Result<()> {
        self.inner.write_record(record_fields(r)).map_err(|e| csv_io(&self.path, e))?;
        self.flush()
    }

    fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_trace(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut w = TraceWriter::create(path)?;
    for r in records {
        w.append(r)?;
    }
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>> {
    let parse_err = |reason: String| Error::Parse {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(parse_err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let f = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| parse_err(format!("row {}: bad {} value {:?}", row + 1, TRACE_HEADER[k], &rec[k])))
        };
        let u = |k: usize| -> Result<usize> {
            rec[k]
                .parse()
                .map_err(|_| parse_err(format!("row {}: bad {} value {:?}", row + 1, TRACE_HEADER[k], &rec[k])))
        };
        out.push(IterationRecord {
            iter: u(0)?,
            j1: f(1)?,
            curve_energy: f(2)?,
            mean_sq: f(3)?,
            obstacle: f(4)?,
            total: f(5)?,
            phi_inf: f(6)?,
            picard_iters: u(7)?,
            wallclock_s: f(8)?,
        });
    }
    Ok(out)
}

/// Writes `# gamma N=<n>` followed by one `ξ value` line per node.
pub fn write_curve(path: &Path, curve: &BoundaryCurve) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "# gamma N={}", curve.n_intervals()).map_err(io)?;
    for (i, v) in curve.values().iter().enumerate() {
        writeln!(w, "{:e} {:e}", curve.xi(i), v).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_curve(path: &Path) -> Result<BoundaryCurve> {
    let parse_err = |reason: String| Error::Parse {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err("empty file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let n: usize = header
        .trim()
        .strip_prefix("# gamma N=")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| parse_err(format!("bad header {header:?}")))?;
    let mut values = Vec::with_capacity(n + 1);
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(_xi), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(format!("line {}: expected two columns", k + 2)));
        };
        values.push(v.parse::<f64>().map_err(|_| parse_err(format!("line {}: bad value {v:?}", k + 2)))?);
    }
    if values.len() != n + 1 {
        return Err(parse_err(format!("header says N={n} but found {} values", values.len())));
    }
    BoundaryCurve::new(values)
}

/// CSV with columns `xi,F,DJ,phi`.
pub fn write_gradient(path: &Path, g: &GradientSample) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["xi", "F", "DJ", "phi"]).map_err(|e| csv_io(path, e))?;
    for i in 0..g.xi.len() {
        w.write_record([g.xi[i], g.f[i], g.dj[i], g.phi[i]].map(|v| format!("{v:e}")))
            .map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK unstructured grid of `mesh` with per-vertex scalar
/// fields and the triangle region tags as cell data.
pub fn write_vtk(path: &Path, mesh: &Mesh, fields: &[(String, Vec<f64>)]) -> Result<()> {
    for (name, vals) in fields {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Domain(format!("field name {name:?} must be a single word")));
        }
        if vals.len() != mesh.n_vertices() {
            return Err(Error::Domain(format!(
                "field {name} has {} values for {} vertices",
                vals.len(),
                mesh.n_vertices()
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let nt = mesh.n_triangles();
    writeln!(w, "# vtk DataFile Version 3.0").map_err(io)?;
    writeln!(w, "shapeopt fields").map_err(io)?;
    writeln!(w, "ASCII").map_err(io)?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID").map_err(io)?;
    writeln!(w, "POINTS {} double", mesh.n_vertices()).map_err(io)?;
    for p in &mesh.vertices {
        writeln!(w, "{:e} {:e} 0", p[0], p[1]).map_err(io)?;
    }
    writeln!(w, "CELLS {} {}", nt, 4 * nt).map_err(io)?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2]).map_err(io)?;
    }
    writeln!(w, "CELL_TYPES {nt}").map_err(io)?;
    for _ in 0..nt {
        writeln!(w, "5").map_err(io)?;
    }
    writeln!(w, "CELL_DATA {nt}").map_err(io)?;
    writeln!(w, "SCALARS region int 1").map_err(io)?;
    writeln!(w, "LOOKUP_TABLE default").map_err(io)?;
    for r in mesh.region_tags() {
        writeln!(w, "{r}").map_err(io)?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_vertices()).map_err(io)?;
        for (name, vals) in fields {
            writeln!(w, "SCALARS {name} double 1").map_err(io)?;
            writeln!(w, "LOOKUP_TABLE default").map_err(io)?;
            for v in vals {
                writeln!(w, "{v:e}").map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Vertex samples of the state and adjoint fields under their export names.
pub fn field_set(state: &StateSolution, adjoint: Option<&AdjointSolution>) -> Vec<(String, Vec<f64>)> {
    let magnitude = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| x.hypot(*y)).collect::<Vec<_>>();
    let mut out = vec![
        ("velocity_magnitude".to_string(), magnitude(state.v.vertex_values(0), state.v.vertex_values(1))),
        ("p".to_string(), state.p.vertex_values(0)),
        ("T_hat".to_string(), state.t_hat.vertex_values(0)),
        ("T".to_string(), state.t.vertex_values(0)),
    ];
    if let Some(a) = adjoint {
        out.push(("S".to_string(), a.s.vertex_values(0)));
        out.push(("w_magnitude".to_string(), magnitude(a.w.vertex_values(0), a.w.vertex_values(1))));
        out.push(("q".to_string(), a.q.vertex_values(0)));
    }
    out
}
