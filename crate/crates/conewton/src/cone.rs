//! Product cones over output coordinates: membership and violation measurement.
//!
//! The target set of an inclusion `F(x) ∈ C` is represented as a product of
//! one-dimensional factors, one per output coordinate. This covers mixed
//! systems of inequalities (`nonpos`/`nonneg` coordinates), equalities
//! (`zero`) and ignored outputs (`free`), each of which is a closed convex
//! cone, so the product is one too.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::fmt;

/// One coordinate factor of a product cone.
///
/// Serialized as the lowercase strings `"nonpos"`, `"nonneg"`, `"zero"`,
/// `"free"` in problem files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeTag {
    /// Coordinate must satisfy `y_i <= 0`.
    NonPos,
    /// Coordinate must satisfy `y_i >= 0`.
    NonNeg,
    /// Coordinate must satisfy `y_i = 0`.
    Zero,
    /// Coordinate is unconstrained.
    Free,
}

impl ConeTag {
    /// Signed distance-style violation of a single coordinate (0 if satisfied).
    pub fn violation(self, y: f64) -> f64 {
        match self {
            ConeTag::NonPos => y.max(0.0),
            ConeTag::NonNeg => (-y).max(0.0),
            ConeTag::Zero => y.abs(),
            ConeTag::Free => 0.0,
        }
    }

    /// Whether this factor constrains its coordinate at all.
    pub fn is_constrained(self) -> bool {
        !matches!(self, ConeTag::Free)
    }
}

impl fmt::Display for ConeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConeTag::NonPos => "nonpos",
            ConeTag::NonNeg => "nonneg",
            ConeTag::Zero => "zero",
            ConeTag::Free => "free",
        };
        f.write_str(s)
    }
}

/// A product cone with one tag per output coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSpec {
    tags: Vec<ConeTag>,
}

/// Errors from cone construction and queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConeError {
    /// A cone needs at least one coordinate.
    Empty,
    /// Vector length does not match the cone dimension.
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for ConeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeError::Empty => write!(f, "cone must have at least one coordinate"),
            ConeError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: cone has {expected} coordinates, vector has {got}")
            }
        }
    }
}

impl std::error::Error for ConeError {}

impl ConeSpec {
    pub fn new(tags: Vec<ConeTag>) -> Result<Self, ConeError> {
        if tags.is_empty() {
            return Err(ConeError::Empty);
        }
        Ok(ConeSpec { tags })
    }

    /// Output dimension `m`.
    pub fn dim(&self) -> usize {
        self.tags.len()
    }

    pub fn tags(&self) -> &[ConeTag] {
        &self.tags
    }

    fn check_dim(&self, y: &DVector<f64>) -> Result<(), ConeError> {
        if y.len() != self.tags.len() {
            return Err(ConeError::DimensionMismatch { expected: self.tags.len(), got: y.len() });
        }
        Ok(())
    }

    /// Membership test: every coordinate satisfies its tag within `tol`.
    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> Result<bool, ConeError> {
        self.check_dim(y)?;
        Ok(self.tags.iter().zip(y.iter()).all(|(tag, &yi)| tag.violation(yi) <= tol))
    }

    /// Euclidean distance from `y` to the cone (product cones make this the
    /// norm of the per-coordinate violations).
    pub fn violation(&self, y: &DVector<f64>) -> Result<f64, ConeError> {
        self.check_dim(y)?;
        let sq: f64 = self
            .tags
            .iter()
            .zip(y.iter())
            .map(|(tag, &yi)| {
                let v = tag.violation(yi);
                v * v
            })
            .sum();
        Ok(sq.sqrt())
    }
}
