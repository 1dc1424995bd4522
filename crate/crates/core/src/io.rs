//! File formats: Matrix Market matrices, newline-delimited vectors, JSON run
//! configurations, and CSV traces.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! writer here is inverted bit-exactly by its reader.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::SmoothLoss;
use crate::synth::SparseInstance;
use crate::types::{Eps0, LpProblem, Sign, SolverConfig, SolverResult, Status, Trace};
use crate::{Matrix, Vector};

pub const TRACE_HEADER: &str = "k,F,f,step_norm,residual,support_size,eps_max,sign_hash";

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(source: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_f64(token: &str, source: &str, line: usize, column: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| parse_err(source, line, column, format!("invalid number `{token}`")))
}

// ---------------------------------------------------------------------------
// Matrix Market

/// Parses a real general Matrix Market matrix in `coordinate` or `array` format.
pub fn parse_matrix_market(text: &str, source: &str) -> Result<Matrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(source, 1, 1, "empty file"))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(
            source,
            1,
            1,
            "expected `%%MatrixMarket matrix <format> real general`",
        ));
    }
    let coordinate = match fields[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(source, 1, 1, format!("unsupported format `{other}`"))),
    };
    if fields[3] != "real" || fields[4] != "general" {
        return Err(parse_err(source, 1, 1, "only `real general` matrices are supported"));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size_line) = data
        .next()
        .ok_or_else(|| parse_err(source, 2, 1, "missing size line"))?;
    let size: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(source, size_no + 1, 1, format!("invalid size `{t}`")))
        })
        .collect::<Result<_>>()?;

    let tokens = |line: &str| -> Vec<(usize, String)> {
        let mut out = Vec::new();
        let mut col = 0;
        for part in line.split_whitespace() {
            let at = line[col..].find(part).map_or(col, |p| col + p);
            out.push((at + 1, part.to_string()));
            col = at + part.len();
        }
        out
    };

    if coordinate {
        let &[rows, cols, nnz] = size.as_slice() else {
            return Err(parse_err(
                source,
                size_no + 1,
                1,
                "coordinate size line needs `rows cols nnz`",
            ));
        };
        let mut m = Matrix::zeros(rows, cols);
        let mut seen = 0;
        for (no, line) in data {
            let toks = tokens(line);
            if toks.len() != 3 {
                return Err(parse_err(source, no + 1, 1, "expected `row col value`"));
            }
            let idx = |j: usize, bound: usize| -> Result<usize> {
                let (c, t) = &toks[j];
                match t.parse::<usize>() {
                    Ok(v) if (1..=bound).contains(&v) => Ok(v - 1),
                    _ => Err(parse_err(
                        source,
                        no + 1,
                        *c,
                        format!("index `{t}` out of range 1..={bound}"),
                    )),
                }
            };
            let (i, j) = (idx(0, rows)?, idx(1, cols)?);
            m[(i, j)] += parse_f64(&toks[2].1, source, no + 1, toks[2].0)?;
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(
                source,
                size_no + 1,
                1,
                format!("declared {nnz} entries, found {seen}"),
            ));
        }
        Ok(m)
    } else {
        let &[rows, cols] = size.as_slice() else {
            return Err(parse_err(source, size_no + 1, 1, "array size line needs `rows cols`"));
        };
        let mut values = Vec::with_capacity(rows * cols);
        for (no, line) in data {
            for (c, t) in tokens(line) {
                values.push(parse_f64(&t, source, no + 1, c)?);
            }
        }
        if values.len() != rows * cols {
            return Err(parse_err(
                source,
                size_no + 1,
                1,
                format!("declared {} entries, found {}", rows * cols, values.len()),
            ));
        }
        Ok(Matrix::from_vec(rows, cols, values))
    }
}

pub fn read_matrix_market(path: &Path) -> Result<Matrix> {
    parse_matrix_market(&read_text(path)?, &path.display().to_string())
}

/// Dense `array real general` layout, column-major.
pub fn format_matrix_market(m: &Matrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for v in m.iter() {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub fn write_matrix_market(path: &Path, m: &Matrix) -> Result<()> {
    write_text(path, &format_matrix_market(m))
}

// ---------------------------------------------------------------------------
// Vectors

pub fn parse_vector(text: &str, source: &str) -> Result<Vector> {
    let mut values = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let col = line.find(t).unwrap_or(0) + 1;
        values.push(parse_f64(t, source, no + 1, col)?);
    }
    Ok(Vector::from_vec(values))
}

pub fn read_vector(path: &Path) -> Result<Vector> {
    parse_vector(&read_text(path)?, &path.display().to_string())
}

pub fn format_vector(v: &Vector) -> String {
    v.iter().map(|x| fmt_f64(*x) + "\n").collect()
}

pub fn write_vector(path: &Path, v: &Vector) -> Result<()> {
    write_text(path, &format_vector(v))
}

// ---------------------------------------------------------------------------
// Run configuration

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(Vec<Vec<f64>>),
    Path(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum VectorSource {
    Inline(Vec<f64>),
    Path(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    LeastSquares {
        #[serde(rename = "A")]
        a: MatrixSource,
        b: VectorSource,
    },
    Logistic {
        #[serde(rename = "A")]
        a: MatrixSource,
        y: VectorSource,
        #[serde(default)]
        ridge: f64,
    },
    Quadratic {
        #[serde(rename = "Q")]
        q: MatrixSource,
        c: VectorSource,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Eps0Spec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum StartSpec {
    Inline(Vec<f64>),
    Named(String),
}

/// JSON layout of a run configuration. Omitted solver fields take the
/// [`SolverConfig`] defaults; `beta` defaults to `"auto"` (`β = L_f`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub loss: LossSpec,
    pub lambda: f64,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<Eps0Spec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<StartSpec>,
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub problem: LpProblem,
    pub config: SolverConfig,
    pub x0: Vector,
    pub seed: Option<u64>,
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_matrix(base: &Path, src: &MatrixSource, field: &'static str) -> Result<Matrix> {
    match src {
        MatrixSource::Path(p) => read_matrix_market(&resolve(base, p)),
        MatrixSource::Inline(rows) => {
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::invalid(
                    field,
                    "inline matrix rows must be nonempty and of equal length",
                ));
            }
            Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
        }
    }
}

fn load_vector(base: &Path, src: &VectorSource) -> Result<Vector> {
    match src {
        VectorSource::Path(p) => read_vector(&resolve(base, p)),
        VectorSource::Inline(v) => Ok(Vector::from_column_slice(v)),
    }
}

/// Parses and validates a configuration; relative paths resolve against `base`.
pub fn parse_run_config(text: &str, source: &str, base: &Path) -> Result<LoadedRun> {
    let raw: RunConfigFile =
        serde_json::from_str(text).map_err(|e| parse_err(source, e.line(), e.column(), e.to_string()))?;
    build_run(&raw, base)
}

pub fn build_run(raw: &RunConfigFile, base: &Path) -> Result<LoadedRun> {
    let loss = match &raw.loss {
        LossSpec::LeastSquares { a, b } => {
            SmoothLoss::least_squares(load_matrix(base, a, "A")?, load_vector(base, b)?)?
        }
        LossSpec::Logistic { a, y, ridge } => {
            SmoothLoss::logistic(load_matrix(base, a, "A")?, load_vector(base, y)?, *ridge)?
        }
        LossSpec::Quadratic { q, c } => SmoothLoss::quadratic(load_matrix(base, q, "Q")?, load_vector(base, c)?)?,
    };
    let n = loss.dim();
    let defaults = SolverConfig::default();
    let beta = match &raw.beta {
        None => loss.lipschitz(),
        Some(BetaSpec::Value(v)) => *v,
        Some(BetaSpec::Keyword(k)) if k == "auto" => loss.lipschitz(),
        Some(BetaSpec::Keyword(k)) => {
            return Err(Error::invalid(
                "beta",
                format!("expected a number or \"auto\", got \"{k}\""),
            ))
        }
    };
    let config = SolverConfig {
        beta,
        mu: raw.mu.unwrap_or(defaults.mu),
        eps0: match &raw.eps0 {
            None => defaults.eps0.clone(),
            Some(Eps0Spec::Scalar(v)) => Eps0::Scalar(*v),
            Some(Eps0Spec::Vector(v)) => Eps0::Vector(Vector::from_column_slice(v)),
        },
        max_iter: raw.max_iter.unwrap_or(defaults.max_iter),
        tol_step: raw.tol_step.unwrap_or(defaults.tol_step),
        tol_eps: raw.tol_eps.unwrap_or(defaults.tol_eps),
        eps_floor: raw.eps_floor.unwrap_or(defaults.eps_floor),
        schedule: defaults.schedule,
    };
    let x0 = match &raw.x0 {
        None => Vector::zeros(n),
        Some(StartSpec::Named(s)) if s == "zero" => Vector::zeros(n),
        Some(StartSpec::Named(path)) => read_vector(&resolve(base, path))?,
        Some(StartSpec::Inline(v)) => Vector::from_column_slice(v),
    };
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "x0",
            expected: n,
            got: x0.len(),
        });
    }
    let lipschitz = loss.lipschitz();
    let problem = LpProblem::new(loss, raw.lambda, raw.p)?;
    config.validate(n, lipschitz)?;
    Ok(LoadedRun {
        problem,
        config,
        x0,
        seed: raw.seed,
    })
}

/// Loads a run configuration file.
pub fn load_problem(config_path: &Path) -> Result<LoadedRun> {
    let text = read_text(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    parse_run_config(&text, &config_path.display().to_string(), base)
}

// ---------------------------------------------------------------------------
// Traces

/// FNV-1a (64-bit) over the sign bytes `−1 → 0x00`, `0 → 0x01`, `+1 → 0x02`.
pub fn sign_hash(sign: &[Sign]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    sign.iter().fold(OFFSET, |h, s| {
        let byte = match s {
            Sign::Negative => 0x00u8,
            Sign::Zero => 0x01,
            Sign::Positive => 0x02,
        };
        (h ^ byte as u64).wrapping_mul(PRIME)
    })
}

/// One CSV row of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub objective: f64,
    pub loss: f64,
    pub step_norm: f64,
    pub residual: f64,
    pub support_size: usize,
    pub eps_max: f64,
    pub sign_hash: u64,
}

pub fn trace_rows(trace: &Trace) -> Vec<TraceRow> {
    trace
        .iter()
        .map(|r| TraceRow {
            k: r.k,
            objective: r.objective,
            loss: r.loss,
            step_norm: r.step_norm,
            residual: r.residual,
            support_size: r.support.len(),
            eps_max: r.eps_max(),
            sign_hash: sign_hash(&r.sign),
        })
        .collect()
}

pub fn format_trace(trace: &Trace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for row in trace_rows(trace) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:016x}",
            row.k,
            fmt_f64(row.objective),
            fmt_f64(row.loss),
            fmt_f64(row.step_norm),
            fmt_f64(row.residual),
            row.support_size,
            fmt_f64(row.eps_max),
            row.sign_hash
        );
    }
    out
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    write_text(path, &format_trace(trace))
}

pub fn parse_trace(text: &str, source: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(parse_err(source, 1, 1, format!("expected header `{TRACE_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 {
            return Err(parse_err(
                source,
                no + 1,
                1,
                format!("expected 8 fields, found {}", cells.len()),
            ));
        }
        let col = |j: usize| cells[..j].iter().map(|c| c.len() + 1).sum::<usize>() + 1;
        let int = |j: usize| -> Result<usize> {
            cells[j]
                .parse()
                .map_err(|_| parse_err(source, no + 1, col(j), format!("invalid integer `{}`", cells[j])))
        };
        let float = |j: usize| parse_f64(cells[j], source, no + 1, col(j));
        rows.push(TraceRow {
            k: int(0)?,
            objective: float(1)?,
            loss: float(2)?,
            step_norm: float(3)?,
            residual: float(4)?,
            support_size: int(5)?,
            eps_max: float(6)?,
            sign_hash: u64::from_str_radix(cells[7], 16)
                .map_err(|_| parse_err(source, no + 1, col(7), format!("invalid hash `{}`", cells[7])))?,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    parse_trace(&read_text(path)?, &path.display().to_string())
}

/// Reads a `k,e` CSV of error magnitudes.
pub fn parse_errors_csv(text: &str, source: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "k,e" => {}
        _ => return Err(parse_err(source, 1, 1, "expected header `k,e`")),
    }
    let (mut ks, mut es) = (Vec::new(), Vec::new());
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let Some((k, e)) = line.split_once(',') else {
            return Err(parse_err(source, no + 1, 1, "expected `k,e`"));
        };
        ks.push(parse_f64(k.trim(), source, no + 1, 1)?);
        es.push(parse_f64(e.trim(), source, no + 1, k.len() + 2)?);
    }
    Ok((ks, es))
}

pub fn read_errors_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_errors_csv(&read_text(path)?, &path.display().to_string())
}

pub fn format_errors_csv(ks: &[f64], es: &[f64]) -> String {
    let mut out = String::from("k,e\n");
    for (k, e) in ks.iter().zip(es) {
        let _ = writeln!(out, "{},{}", fmt_f64(*k), fmt_f64(*e));
    }
    out
}

// ---------------------------------------------------------------------------
// Results and instances

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultFile {
    pub status: Status,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_residual: f64,
    pub support: Vec<usize>,
    pub x_final: Vec<f64>,
}

impl From<&SolverResult> for ResultFile {
    fn from(r: &SolverResult) -> Self {
        let last = r.trace.last();
        Self {
            status: r.status,
            iterations: r.iterations,
            final_objective: last.objective,
            final_residual: last.residual,
            support: last.support.clone(),
            x_final: r.x_final.iter().copied().collect(),
        }
    }
}

pub fn write_result(result: &SolverResult, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&ResultFile::from(result)).expect("result serializes");
    write_text(path, &(text + "\n"))
}

pub const INSTANCE_MATRIX: &str = "A.mtx";
pub const INSTANCE_RHS: &str = "b.txt";
pub const INSTANCE_TRUTH: &str = "x_true.txt";
pub const INSTANCE_CONFIG: &str = "config.json";

/// Writes `A.mtx`, `b.txt`, `x_true.txt`, and a `config.json` that refers to them.
pub fn write_instance(dir: &Path, inst: &SparseInstance, lambda: f64, p: f64, seed: u64) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_market(&dir.join(INSTANCE_MATRIX), &inst.a)?;
    write_vector(&dir.join(INSTANCE_RHS), &inst.b)?;
    write_vector(&dir.join(INSTANCE_TRUTH), &inst.x_true)?;
    let cfg = RunConfigFile {
        loss: LossSpec::LeastSquares {
            a: MatrixSource::Path(INSTANCE_MATRIX.into()),
            b: VectorSource::Path(INSTANCE_RHS.into()),
        },
        lambda,
        p,
        beta: Some(BetaSpec::Keyword("auto".into())),
        mu: None,
        eps0: None,
        max_iter: None,
        tol_step: None,
        tol_eps: None,
        eps_floor: None,
        seed: Some(seed),
        x0: Some(StartSpec::Named("zero".into())),
    };
    let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
    write_text(&dir.join(INSTANCE_CONFIG), &(text + "\n"))
}

pub fn read_instance(dir: &Path) -> Result<SparseInstance> {
    Ok(SparseInstance {
        a: read_matrix_market(&dir.join(INSTANCE_MATRIX))?,
        b: read_vector(&dir.join(INSTANCE_RHS))?,
        x_true: read_vector(&dir.join(INSTANCE_TRUTH))?,
    })
}
