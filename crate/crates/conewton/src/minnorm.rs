//! Euclidean minimal-norm solutions of linear cone inclusions `A d + g ∈ C`.
//!
//! This is the computational core of the Newton iteration: every step, every
//! inner-norm measurement and the surjectivity (Robinson) check reduce to the
//! strictly convex QP
//!
//! ```text
//!     minimize  ||d||^2 / 2   subject to  A d + g ∈ C
//! ```
//!
//! solved here by a primal active-set method after a least-violation phase 1,
//! with an exhaustive active-set enumerator as an independent oracle.
//!
//! Constraints are normalized row-wise to `phi_i(d) = s_i (a_i . d + g_i)`
//! with `phi_i <= 0` for inequality tags (`s_i = +1` for nonpos, `-1` for
//! nonneg) and `phi_i = 0` for zero tags; free rows impose nothing. Rows are
//! scaled to unit normals, and the problem is positively homogeneous in the
//! offset, so instances with tiny offsets (residual measurements late in a
//! Newton run) are scaled up to O(1) before solving and the solution is
//! scaled back. Multipliers are reported for the original row scaling.

use crate::cone::{ConeSpec, ConeTag};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Feasibility tolerance on returned solutions (unit-normal row scale).
const FEAS_TOL: f64 = 1e-9;
/// Tightness tolerance used to report the active set.
const ACTIVE_TOL: f64 = 1e-8;
/// Phase-1 objective value above which the inclusion is declared infeasible.
const INFEAS_THRESHOLD: f64 = 1e-16;
/// Gram-Schmidt residual below which a row counts as dependent on the
/// working set.
const INDEP_TOL: f64 = 1e-8;

/// Errors from the min-norm solvers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinNormError {
    DimensionMismatch(String),
    /// Brute-force enumeration limit (more than 16 constrained rows).
    SizeLimit { constrained: usize },
    /// The active-set iteration exceeded its cycling guard.
    Breakdown { iterations: usize },
}

impl fmt::Display for MinNormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinNormError::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            MinNormError::SizeLimit { constrained } => {
                write!(f, "{constrained} constrained rows exceed the enumeration limit of 16")
            }
            MinNormError::Breakdown { iterations } => {
                write!(f, "active-set iteration did not settle after {iterations} pivots")
            }
        }
    }
}

impl std::error::Error for MinNormError {}

/// A linear inclusion `A d + g ∈ C`.
#[derive(Debug, Clone)]
pub struct LinearInclusion {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub cone: ConeSpec,
}

impl LinearInclusion {
    pub fn new(
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
        cone: ConeSpec,
    ) -> Result<Self, MinNormError> {
        if matrix.nrows() != offset.len() || matrix.nrows() != cone.dim() {
            return Err(MinNormError::DimensionMismatch(format!(
                "matrix is {}x{}, offset has {} entries, cone has {} coordinates",
                matrix.nrows(),
                matrix.ncols(),
                offset.len(),
                cone.dim()
            )));
        }
        Ok(LinearInclusion { matrix, offset, cone })
    }
}

/// A minimal-norm solution with its KKT certificate.
#[derive(Debug, Clone)]
pub struct MinNormSolution {
    /// The minimal-norm feasible point.
    pub step: DVector<f64>,
    /// `||step||_2`.
    pub norm: f64,
    /// Indices of constraint rows tight at the solution (includes equalities).
    pub active_set: Vec<usize>,
    /// Per-row multipliers for the normalized constraints
    /// `s_i (a_i . d + g_i)`; zero for free and inactive rows, nonnegative
    /// for tight inequality rows.
    pub multipliers: Vec<f64>,
    /// Max of the stationarity, complementarity, dual- and primal-feasibility
    /// residuals, each normalized by the magnitude of the quantities entering
    /// it so the certificate stays meaningful on ill-conditioned instances
    /// (for well-scaled data this is the plain residual).
    pub kkt_residual: f64,
}

/// Outcome of a min-norm solve.
#[derive(Debug, Clone)]
pub enum MinNormOutcome {
    Solution(MinNormSolution),
    /// No feasible point; `violation` is the residual norm at the closest
    /// point found by the phase-1 minimization.
    Infeasible { violation: f64 },
}

impl MinNormOutcome {
    pub fn solution(&self) -> Option<&MinNormSolution> {
        match self {
            MinNormOutcome::Solution(s) => Some(s),
            MinNormOutcome::Infeasible { .. } => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, MinNormOutcome::Infeasible { .. })
    }
}

/// One normalized constraint row with a unit normal.
#[derive(Debug, Clone)]
struct Row {
    /// Original row index in the inclusion.
    index: usize,
    /// `s_i * a_i / ||a_i||`.
    normal: DVector<f64>,
    /// `s_i * g_i / ||a_i||`; the constraint reads `normal . d + rhs (<=|=) 0`.
    rhs: f64,
    /// `||a_i||`, kept to report multipliers in the original scaling.
    row_scale: f64,
    equality: bool,
}

impl Row {
    fn phi(&self, d: &DVector<f64>) -> f64 {
        self.normal.dot(d) + self.rhs
    }

    fn violation_at(&self, d: &DVector<f64>) -> f64 {
        let phi = self.phi(d);
        if self.equality {
            phi.abs()
        } else {
            phi.max(0.0)
        }
    }
}

enum Prepared {
    Rows(Vec<Row>),
    /// A zero matrix row with an unsatisfiable offset; no `d` can help.
    TriviallyInfeasible { violation: f64 },
}

fn prepare_rows(inc: &LinearInclusion) -> Prepared {
    let mut rows = Vec::new();
    for (i, tag) in inc.cone.tags().iter().enumerate() {
        let sign = match tag {
            ConeTag::Free => continue,
            ConeTag::NonPos | ConeTag::Zero => 1.0,
            ConeTag::NonNeg => -1.0,
        };
        let normal = inc.matrix.row(i).transpose();
        let len = normal.norm();
        if len < 1e-300 {
            let viol = tag.violation(inc.offset[i]);
            if viol > 0.0 {
                return Prepared::TriviallyInfeasible { violation: viol };
            }
            continue; // constant row, always satisfied
        }
        rows.push(Row {
            index: i,
            normal: normal * (sign / len),
            rhs: sign * inc.offset[i] / len,
            row_scale: len,
            equality: *tag == ConeTag::Zero,
        });
    }
    Prepared::Rows(rows)
}

/// Offset scale factor: small instances are solved at O(1) scale. Instances
/// with O(1) offsets are left untouched.
fn offset_scale(rows: &[Row]) -> f64 {
    rows.iter().map(|r| r.rhs.abs()).fold(0.0_f64, f64::max).clamp(1e-300, 1.0)
}

fn scale_offsets(rows: &[Row], factor: f64) -> Vec<Row> {
    rows.iter()
        .map(|r| Row { rhs: r.rhs / factor, ..r.clone() })
        .collect()
}

/// Minimum-norm least-squares solution of `M x = b` via SVD.
fn lstsq_min_norm(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(m.ncols());
    }
    let svd = m.clone().svd(true, true);
    let sv_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = sv_max * 1e-12;
    svd.solve(b, eps).map(|x| x.column(0).into_owned()).unwrap_or_else(|_| DVector::zeros(m.ncols()))
}

fn stack_rows(rows: &[Row], which: &[usize], n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut mat = DMatrix::zeros(which.len(), n);
    let mut rhs = DVector::zeros(which.len());
    for (r, &i) in which.iter().enumerate() {
        mat.row_mut(r).copy_from(&rows[i].normal.transpose());
        rhs[r] = rows[i].rhs;
    }
    (mat, rhs)
}

/// Squared-violation objective `v(d) = (sum of active phi^2) / 2`, counting
/// equality rows always and inequality rows only where violated.
fn violation_value(rows: &[Row], d: &DVector<f64>) -> f64 {
    let mut v = 0.0;
    for row in rows {
        let phi = row.phi(d);
        if row.equality || phi > 0.0 {
            v += phi * phi;
        }
    }
    0.5 * v
}

/// Phase 1: minimize the squared violation by sequential least squares with
/// an exact line search over the piecewise-quadratic objective.
fn phase1(rows: &[Row], n: usize) -> DVector<f64> {
    let mut d = DVector::zeros(n);
    let mut v = violation_value(rows, &d);
    if v == 0.0 {
        return d;
    }
    for _ in 0..200 {
        let active: Vec<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.equality || r.phi(&d) > 0.0)
            .map(|(i, _)| i)
            .collect();
        if active.is_empty() {
            return d;
        }
        let (mat, rhs) = stack_rows(rows, &active, n);
        let target = lstsq_min_norm(&mat, &(-&rhs));
        let p = &target - &d;
        if p.norm() <= 1e-13 * (1.0 + d.norm()) {
            break;
        }
        let alpha = exact_line_search(rows, &d, &p);
        if alpha <= 0.0 {
            break;
        }
        d += alpha * &p;
        let v_new = violation_value(rows, &d);
        if v_new >= v * (1.0 - 1e-14) && v_new > 1e-28 {
            break;
        }
        v = v_new;
        if v <= 1e-28 {
            break;
        }
    }
    d
}

/// Exact minimizer of the piecewise-quadratic violation along `d + alpha p`,
/// `alpha in [0, 2]`.
fn exact_line_search(rows: &[Row], d: &DVector<f64>, p: &DVector<f64>) -> f64 {
    let phis: Vec<f64> = rows.iter().map(|r| r.phi(d)).collect();
    let slopes: Vec<f64> = rows.iter().map(|r| r.normal.dot(p)).collect();

    let mut candidates = vec![0.0, 1.0, 2.0];
    for (row, (&phi, &u)) in rows.iter().zip(phis.iter().zip(&slopes)) {
        if !row.equality && u.abs() > 1e-300 {
            let bp = -phi / u;
            if bp > 0.0 && bp < 2.0 {
                candidates.push(bp);
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    // Per-interval quadratic minimizers, using the active set at the midpoint.
    let mut extra = Vec::new();
    for w in candidates.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let mut a2 = 0.0;
        let mut a1 = 0.0;
        for (row, (&phi, &u)) in rows.iter().zip(phis.iter().zip(&slopes)) {
            if row.equality || phi + mid * u > 0.0 {
                a2 += u * u;
                a1 += phi * u;
            }
        }
        if a2 > 0.0 {
            let am = -a1 / a2;
            if am > w[0] && am < w[1] {
                extra.push(am);
            }
        }
    }
    candidates.extend(extra);

    let value_at = |alpha: f64| violation_value(rows, &(d + alpha * p));
    let mut best = 0.0;
    let mut best_v = value_at(0.0);
    for &alpha in &candidates {
        let v = value_at(alpha);
        if v < best_v {
            best = alpha;
            best_v = v;
        }
    }
    best
}

/// Component of `v` orthogonal to the span of `basis` (orthonormal set).
fn residual_against(basis: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let mut r = v.clone();
    for b in basis {
        let c = b.dot(&r);
        r -= c * b;
    }
    r
}

/// Greedy maximal independent subset of the candidate rows, equalities first.
fn independent_subset(rows: &[Row], candidates: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = candidates.to_vec();
    order.sort_by_key(|&i| (!rows[i].equality, rows[i].index));
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for i in order {
        let r = residual_against(&basis, &rows[i].normal);
        let norm = r.norm();
        if norm > INDEP_TOL {
            basis.push(r / norm);
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Phase 2: primal active-set iteration from a feasible point.
///
/// The working set is kept linearly independent, so the equality-restricted
/// subproblem is always consistent; entering and leaving rows are chosen by
/// lowest index on ties, with a hard pivot cap as the cycling guard.
fn active_set_qp(
    rows: &[Row],
    n: usize,
    start: DVector<f64>,
) -> Result<(DVector<f64>, Vec<usize>), MinNormError> {
    let mut d = start;
    let near_active: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.equality || r.phi(&d) >= -FEAS_TOL)
        .map(|(i, _)| i)
        .collect();
    let mut working = independent_subset(rows, &near_active);

    let cap = 50 * (rows.len() + n) + 100;
    for _ in 0..cap {
        let (mat, rhs) = stack_rows(rows, &working, n);
        let target =
            if working.is_empty() { DVector::zeros(n) } else { lstsq_min_norm(&mat, &(-&rhs)) };
        let p = &target - &d;

        if p.norm() <= 1e-12 * (1.0 + d.norm()) {
            // Stationary on the working set; check multiplier signs.
            let lambda = multipliers_for(rows, &working, &d, n);
            let mut leave = None;
            for (pos, &i) in working.iter().enumerate() {
                if !rows[i].equality && lambda[pos] < -1e-10 {
                    leave = Some(pos);
                    break;
                }
            }
            match leave {
                None => return Ok((d, working)),
                Some(pos) => {
                    working.remove(pos);
                }
            }
        } else {
            // Ratio test against rows outside the working set.
            let mut alpha = 1.0_f64;
            let mut blocker = None;
            for (i, row) in rows.iter().enumerate() {
                if working.contains(&i) {
                    continue;
                }
                let u = row.normal.dot(&p);
                let crossing = if row.equality { u.abs() > 1e-12 } else { u > 1e-12 };
                if crossing {
                    let ai = (-row.phi(&d) / u).max(0.0);
                    if ai < alpha - 1e-14 {
                        alpha = ai;
                        blocker = Some(i);
                    }
                }
            }
            d += alpha * &p;
            if let Some(i) = blocker {
                // Dependent rows cannot block a direction that preserves the
                // working set, so this add keeps the set independent; the
                // residual check guards the float edge cases.
                if residual_against(
                    &orthonormal_basis(rows, &working),
                    &rows[i].normal,
                )
                .norm()
                    > INDEP_TOL
                {
                    working.push(i);
                    working.sort_unstable();
                }
            }
        }
    }
    Err(MinNormError::Breakdown { iterations: cap })
}

fn orthonormal_basis(rows: &[Row], which: &[usize]) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for &i in which {
        let r = residual_against(&basis, &rows[i].normal);
        let norm = r.norm();
        if norm > 1e-12 {
            basis.push(r / norm);
        }
    }
    basis
}

/// Least-squares multipliers over `active`: minimize `||d + N^T lambda||`.
///
/// Solved directly on `N^T` (not the Gram matrix, which squares the
/// condition number), with one refinement step to keep the stationarity
/// residual near roundoff even when multipliers are large.
fn multipliers_for(rows: &[Row], active: &[usize], d: &DVector<f64>, n: usize) -> Vec<f64> {
    if active.is_empty() {
        return Vec::new();
    }
    let (mat, _) = stack_rows(rows, active, n);
    let nt = mat.transpose();
    let mut lambda = lstsq_min_norm(&nt, &(-d));
    let residual = -(d + &nt * &lambda);
    lambda += lstsq_min_norm(&nt, &residual);
    lambda.iter().cloned().collect()
}

/// Assemble the public solution record at `d` for the given tight rows.
fn finish_solution(rows: &[Row], d: DVector<f64>, n: usize, m: usize) -> MinNormSolution {
    let tight: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.phi(&d).abs() <= ACTIVE_TOL)
        .map(|(i, _)| i)
        .collect();
    let lambda = multipliers_for(rows, &tight, &d, n);

    let mut multipliers = vec![0.0; m];
    for (pos, &i) in tight.iter().enumerate() {
        // Convert from the unit-normal row back to the original scaling.
        multipliers[rows[i].index] = lambda[pos] / rows[i].row_scale;
    }

    // Stationarity: d + N^T lambda = 0 over the tight rows, measured
    // relative to the size of the combination.
    let mut stat = d.clone();
    let mut lambda_mass = d.norm();
    for (pos, &i) in tight.iter().enumerate() {
        stat += lambda[pos] * &rows[i].normal;
        lambda_mass += lambda[pos].abs();
    }
    let mut kkt = stat.norm() / (1.0 + lambda_mass);
    for (pos, &i) in tight.iter().enumerate() {
        let rel = 1.0 + lambda[pos].abs();
        if !rows[i].equality {
            kkt = kkt.max(-lambda[pos] / rel); // dual feasibility
        }
        kkt = kkt.max((lambda[pos] * rows[i].phi(&d)).abs() / rel); // complementarity
    }
    for row in rows {
        kkt = kkt.max(row.violation_at(&d));
    }

    let active_set = tight.iter().map(|&i| rows[i].index).collect();
    let norm = d.norm();
    MinNormSolution { step: d, norm, active_set, multipliers, kkt_residual: kkt }
}

/// Exact minimal-norm solution of `A d + g ∈ C`, or an infeasibility verdict.
pub fn solve_min_norm(inc: &LinearInclusion) -> Result<MinNormOutcome, MinNormError> {
    let rows = match prepare_rows(inc) {
        Prepared::TriviallyInfeasible { violation } => {
            return Ok(MinNormOutcome::Infeasible { violation })
        }
        Prepared::Rows(rows) => rows,
    };
    let n = inc.matrix.ncols();
    let m = inc.cone.dim();

    if rows.iter().all(|r| if r.equality { r.rhs == 0.0 } else { r.rhs <= 0.0 }) {
        // g already in the cone: the unconstrained minimum is feasible.
        return Ok(MinNormOutcome::Solution(finish_solution(&rows, DVector::zeros(n), n, m)));
    }

    let scale = offset_scale(&rows);
    let scaled = scale_offsets(&rows, scale);

    let d0 = phase1(&scaled, n);
    let v = violation_value(&scaled, &d0);
    if v > INFEAS_THRESHOLD {
        return Ok(MinNormOutcome::Infeasible { violation: v.sqrt() * scale });
    }

    let (d_hat, working) = active_set_qp(&scaled, n, d0)?;

    // Polish: re-solve the working-set equalities exactly; keep the result
    // only if it stays feasible and does not grow the norm.
    let (mat, rhs) = stack_rows(&scaled, &working, n);
    let polished =
        if working.is_empty() { d_hat.clone() } else { lstsq_min_norm(&mat, &(-&rhs)) };
    let polish_ok = scaled.iter().all(|r| {
        let phi = r.phi(&polished);
        if r.equality {
            phi.abs() <= FEAS_TOL
        } else {
            phi <= FEAS_TOL
        }
    });
    let d_hat =
        if polish_ok && polished.norm() <= d_hat.norm() + FEAS_TOL { polished } else { d_hat };

    Ok(MinNormOutcome::Solution(finish_solution(&rows, d_hat * scale, n, m)))
}

/// Per-vector inner norm of the inverse convex process at `A`:
/// `min { ||d|| : A d - w ∈ C }`, or `+inf` when that set is empty.
pub fn t_inverse_norm_at(
    a: &DMatrix<f64>,
    w: &DVector<f64>,
    cone: &ConeSpec,
) -> Result<f64, MinNormError> {
    let inc = LinearInclusion::new(a.clone(), -w, cone.clone())?;
    Ok(match solve_min_norm(&inc)? {
        MinNormOutcome::Solution(s) => s.norm,
        MinNormOutcome::Infeasible { .. } => f64::INFINITY,
    })
}

/// Surjectivity (Robinson) check: is every right-hand side reachable?
///
/// It suffices to reach the signed basis vectors. The inverse `T^{-1}` of a
/// convex process is itself a convex process, so it is positively homogeneous
/// and superadditive: for any w, writing w = sum_i |w_i| (sign(w_i) e_i),
///
///   T^{-1}(w) ⊇ sum_i |w_i| T^{-1}(sign(w_i) e_i),
///
/// which is nonempty whenever each factor on the right is. Hence finiteness
/// of the 2m per-vector norms below already implies rge T = Y.
pub fn robinson_check(a: &DMatrix<f64>, cone: &ConeSpec) -> Result<bool, MinNormError> {
    let m = a.nrows();
    if cone.dim() != m {
        return Err(MinNormError::DimensionMismatch(format!(
            "matrix has {m} rows, cone has {} coordinates",
            cone.dim()
        )));
    }
    for i in 0..m {
        for sign in [1.0, -1.0] {
            let mut w = DVector::zeros(m);
            w[i] = sign;
            if t_inverse_norm_at(a, &w, cone)?.is_infinite() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Independent oracle: enumerate candidate active sets exhaustively.
///
/// Every subset of the inequality rows (equalities are always active) is
/// solved as an equality-restricted least-norm system; feasible candidates
/// are ranked by norm, then by multiplier-sign validity. The optimal active
/// set is among the enumerated subsets, so this reproduces the exact optimum.
pub fn brute_force_min_norm(inc: &LinearInclusion) -> Result<MinNormOutcome, MinNormError> {
    let rows = match prepare_rows(inc) {
        Prepared::TriviallyInfeasible { violation } => {
            return Ok(MinNormOutcome::Infeasible { violation })
        }
        Prepared::Rows(rows) => rows,
    };
    let n = inc.matrix.ncols();
    let m = inc.cone.dim();
    if rows.len() > 16 {
        return Err(MinNormError::SizeLimit { constrained: rows.len() });
    }

    let scale = offset_scale(&rows);
    let scaled = scale_offsets(&rows, scale);

    let ineq: Vec<usize> =
        scaled.iter().enumerate().filter(|(_, r)| !r.equality).map(|(i, _)| i).collect();
    let eq: Vec<usize> =
        scaled.iter().enumerate().filter(|(_, r)| r.equality).map(|(i, _)| i).collect();

    let feasible_at = |d: &DVector<f64>| {
        scaled.iter().all(|r| {
            let phi = r.phi(d);
            if r.equality {
                phi.abs() <= ACTIVE_TOL
            } else {
                phi <= ACTIVE_TOL
            }
        })
    };
    let max_violation =
        |d: &DVector<f64>| scaled.iter().map(|r| r.violation_at(d)).fold(0.0_f64, f64::max);

    let mut best: Option<(DVector<f64>, bool)> = None;
    let mut closest_violation = f64::INFINITY;

    for mask in 0..(1u32 << ineq.len()) {
        let mut chosen = eq.clone();
        for (bit, &i) in ineq.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                chosen.push(i);
            }
        }
        let d = if chosen.is_empty() {
            DVector::zeros(n)
        } else {
            // Solve the equality system for the chosen rows directly by SVD
            // (minimum-norm least squares), a different route than the
            // active-set solver's working-set iteration.
            let mut mat = DMatrix::zeros(chosen.len(), n);
            let mut rhs = DVector::zeros(chosen.len());
            for (r, &i) in chosen.iter().enumerate() {
                mat.row_mut(r).copy_from(&scaled[i].normal.transpose());
                rhs[r] = -scaled[i].rhs;
            }
            let d = lstsq_min_norm(&mat, &rhs);
            let resid = (&mat * &d - &rhs).amax();
            if resid > ACTIVE_TOL {
                continue; // inconsistent candidate set
            }
            d
        };

        if !feasible_at(&d) {
            closest_violation = closest_violation.min(max_violation(&d));
            continue;
        }

        let lambda = multipliers_for(&scaled, &chosen, &d, n);
        let signs_ok = chosen
            .iter()
            .enumerate()
            .all(|(pos, &i)| scaled[i].equality || lambda[pos] >= -FEAS_TOL);

        best = match best {
            None => Some((d, signs_ok)),
            Some((cur, cur_ok)) => {
                let dn = d.norm();
                let cn = cur.norm();
                if dn < cn - 1e-9 || (dn < cn + 1e-9 && signs_ok && !cur_ok) {
                    Some((d, signs_ok))
                } else {
                    Some((cur, cur_ok))
                }
            }
        };
    }

    match best {
        Some((d, _)) => Ok(MinNormOutcome::Solution(finish_solution(&rows, d * scale, n, m))),
        None => Ok(MinNormOutcome::Infeasible {
            violation: if closest_violation.is_finite() {
                closest_violation * scale
            } else {
                1.0
            },
        }),
    }
}

/// Result of a randomized solver-vs-oracle comparison.
#[derive(Debug, Clone, Copy)]
pub struct OracleReport {
    pub instances: usize,
    pub max_norm_deviation: f64,
    pub max_step_deviation: f64,
    pub max_kkt_residual: f64,
    pub feasibility_disagreements: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.feasibility_disagreements == 0
            && self.max_norm_deviation <= 1e-7
            && self.max_step_deviation <= 1e-6
            && self.max_kkt_residual <= 1e-8
    }
}

/// Run `instances` random inclusions (n, m <= 6, entries U[-2, 2], mixed
/// tags) through both the active-set solver and the brute-force oracle.
pub fn compare_with_oracle(instances: usize, seed: u64) -> Result<OracleReport, MinNormError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        instances,
        max_norm_deviation: 0.0,
        max_step_deviation: 0.0,
        max_kkt_residual: 0.0,
        feasibility_disagreements: 0,
    };
    for _ in 0..instances {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let matrix = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
        let offset = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
        let tags: Vec<ConeTag> = (0..m)
            .map(|_| match rng.random_range(0..4) {
                0 => ConeTag::NonPos,
                1 => ConeTag::NonNeg,
                2 => ConeTag::Zero,
                _ => ConeTag::Free,
            })
            .collect();
        let cone = ConeSpec::new(tags).expect("m >= 1");
        let inc = LinearInclusion::new(matrix, offset, cone)?;

        let fast = solve_min_norm(&inc)?;
        let slow = brute_force_min_norm(&inc)?;
        match (fast, slow) {
            (MinNormOutcome::Solution(a), MinNormOutcome::Solution(b)) => {
                report.max_norm_deviation =
                    report.max_norm_deviation.max((a.norm - b.norm).abs());
                report.max_step_deviation =
                    report.max_step_deviation.max((&a.step - &b.step).norm());
                report.max_kkt_residual =
                    report.max_kkt_residual.max(a.kkt_residual).max(b.kkt_residual);
            }
            (MinNormOutcome::Infeasible { .. }, MinNormOutcome::Infeasible { .. }) => {}
            _ => report.feasibility_disagreements += 1,
        }
    }
    Ok(report)
}
