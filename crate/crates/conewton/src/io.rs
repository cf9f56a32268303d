//! Problem-file ingestion (JSON) and iteration-trace export (CSV).
//!
//! Both formats are parsed defensively: malformed input of any kind must
//! produce a diagnostic, never a panic. The CSV writer prints floats with 17
//! significant digits so that reparsing reproduces every value bit-exactly.

use crate::cone::{ConeSpec, ConeTag};
use crate::majorant::ScalarMajorant;
use crate::newton::{Certificate, ProblemSpec, RunReport};
use crate::problems::{make_problem, Monomial, PolynomialSystem};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::fmt;

/// One monomial as written in a problem file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// A problem document: dimensions, cone tags, start point and the polynomial
/// residual map, plus optional certification constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub cone: Vec<ConeTag>,
    pub x0: Vec<f64>,
    pub polynomials: Vec<Vec<MonomialSpec>>,
    #[serde(default, rename = "lipschitz_L", skip_serializing_if = "Option::is_none")]
    pub lipschitz_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smale_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_radius: Option<f64>,
}

/// Errors from problem-file parsing and validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemFileError {
    /// Not valid JSON (or wrong field types); carries the source location.
    Json { line: usize, column: usize, message: String },
    /// Structurally valid JSON that fails the format's consistency rules.
    Invalid(String),
}

impl fmt::Display for ProblemFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemFileError::Json { line, column, message } => {
                write!(f, "line {line}, column {column}: {message}")
            }
            ProblemFileError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ProblemFileError {}

/// Parse a problem document without building the evaluators.
pub fn parse_problem_str(text: &str) -> Result<ProblemFile, ProblemFileError> {
    serde_json::from_str(text).map_err(|e| ProblemFileError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

impl ProblemFile {
    /// Validate the document and build a solvable [`ProblemSpec`].
    pub fn to_spec(&self) -> Result<ProblemSpec, ProblemFileError> {
        let fail = |msg: String| Err(ProblemFileError::Invalid(msg));
        if self.n == 0 || self.m == 0 {
            return fail("n and m must be at least 1".into());
        }
        if self.cone.len() != self.m {
            return fail(format!("cone has {} tags, expected m = {}", self.cone.len(), self.m));
        }
        if self.x0.len() != self.n {
            return fail(format!("x0 has {} entries, expected n = {}", self.x0.len(), self.n));
        }
        if let Some(bad) = self.x0.iter().position(|v| !v.is_finite()) {
            return fail(format!("x0[{bad}] is not finite"));
        }
        if self.polynomials.len() != self.m {
            return fail(format!(
                "polynomials has {} coordinate entries, expected m = {}",
                self.polynomials.len(),
                self.m
            ));
        }
        let outputs: Vec<Vec<Monomial>> = self
            .polynomials
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| Monomial { coeff: t.coeff, exponents: t.exponents.clone() })
                    .collect()
            })
            .collect();
        let sys = PolynomialSystem::new(self.n, outputs)
            .map_err(|e| ProblemFileError::Invalid(e.to_string()))?;
        let cone = ConeSpec::new(self.cone.clone())
            .map_err(|e| ProblemFileError::Invalid(e.to_string()))?;
        make_problem(
            sys,
            cone,
            DVector::from_vec(self.x0.clone()),
            self.lipschitz_l,
            self.smale_gamma,
            self.domain_radius,
        )
        .map_err(|e| ProblemFileError::Invalid(e.to_string()))
    }
}

/// Parse and validate a problem document from raw bytes.
///
/// This is the untrusted-input entry point (also exercised by the fuzz
/// targets): any byte sequence must come back as `Ok` or a diagnostic.
pub fn parse_problem_bytes(bytes: &[u8]) -> Result<(ProblemFile, ProblemSpec), ProblemFileError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ProblemFileError::Json {
        line: 0,
        column: e.valid_up_to(),
        message: "input is not valid UTF-8".into(),
    })?;
    let file = parse_problem_str(text)?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}

/// Column order of the trace CSV.
pub const TRACE_HEADER: &str =
    "k,residual_norm,step_norm,dist_from_start,theta_k,r_norm_plus,r_norm_minus,fc_bound,t_k,eps_k";

/// One CSV row of a run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub residual_norm: f64,
    pub step_norm: f64,
    pub dist_from_start: f64,
    pub theta_k: f64,
    pub r_norm_plus: f64,
    pub r_norm_minus: f64,
    /// Geometric residual bound; NaN when the run carries no certificate.
    pub fc_bound: f64,
    /// Predicted scalar iterate; NaN without a certificate.
    pub t_k: f64,
    pub eps_k: f64,
}

/// Flatten a run report into CSV rows, attaching the certificate-predicted
/// columns when a certificate is present.
pub fn trace_rows(report: &RunReport) -> Vec<TraceRow> {
    let cert: Option<&Certificate> = report.certificate.as_ref();
    let thetas: Vec<f64> = report.trace.iter().map(|r| r.theta_k).collect();
    let seq = cert.and_then(|c| c.sequence_for(&thetas).ok());
    let mut fc = cert.map(|c| c.model.value(0.0) + 2.0 * c.rho);

    let mut rows = Vec::with_capacity(report.trace.len());
    for rec in &report.trace {
        let (t_k, eps_k) = seq
            .as_ref()
            .and_then(|s| s.get(rec.k).copied())
            .unwrap_or((f64::NAN, f64::NAN));
        rows.push(TraceRow {
            k: rec.k,
            residual_norm: rec.residual_norm,
            step_norm: rec.step_norm,
            dist_from_start: rec.dist_from_start,
            theta_k: rec.theta_k,
            r_norm_plus: rec.r_tplus_norm,
            r_norm_minus: rec.r_tminus_norm,
            fc_bound: fc.unwrap_or(f64::NAN),
            t_k,
            eps_k,
        });
        if let Some(v) = fc.as_mut() {
            *v *= 0.5 * (1.0 + rec.theta_k * rec.theta_k);
        }
    }
    rows
}

/// Serialize rows with 17-significant-digit floats (exact round-trip).
pub fn write_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.k,
            r.residual_norm,
            r.step_norm,
            r.dist_from_start,
            r.theta_k,
            r.r_norm_plus,
            r.r_norm_minus,
            r.fc_bound,
            r.t_k,
            r.eps_k
        ));
    }
    out
}

/// Errors from trace parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceError {
    Header { found: String },
    Row { line: usize, message: String },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::Header { found } => write!(f, "unexpected header: {found}"),
            TraceError::Row { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

impl std::error::Error for TraceError {}

/// Parse a trace CSV previously produced by [`write_trace_csv`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, TraceError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == TRACE_HEADER => {}
        Some((_, header)) => return Err(TraceError::Header { found: header.to_string() }),
        None => return Err(TraceError::Header { found: String::new() }),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(TraceError::Row {
                line: idx + 1,
                message: format!("expected 10 fields, found {}", fields.len()),
            });
        }
        let k: usize = fields[0].parse().map_err(|e| TraceError::Row {
            line: idx + 1,
            message: format!("bad iteration index: {e}"),
        })?;
        let mut vals = [0.0_f64; 9];
        for (slot, field) in vals.iter_mut().zip(&fields[1..]) {
            *slot = field.parse().map_err(|e| TraceError::Row {
                line: idx + 1,
                message: format!("bad float '{field}': {e}"),
            })?;
        }
        rows.push(TraceRow {
            k,
            residual_norm: vals[0],
            step_norm: vals[1],
            dist_from_start: vals[2],
            theta_k: vals[3],
            r_norm_plus: vals[4],
            r_norm_minus: vals[5],
            fc_bound: vals[6],
            t_k: vals[7],
            eps_k: vals[8],
        });
    }
    Ok(rows)
}
