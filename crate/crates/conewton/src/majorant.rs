//! Scalar majorant models, their critical constants, and the inexact scalar
//! iteration whose trajectory bounds the vector iteration.
//!
//! Two concrete model families are supported. Both satisfy `f(0) = b > 0`,
//! `f'(0) = -1`, and have a strictly increasing derivative on their domain:
//!
//! * quadratic (Lipschitz data): `f(t) = (L/2) t^2 - t + b` on `[0, 1/L)`,
//!   admissible when `2 b L <= 1`;
//! * rational (Smale/analytic data): `f(t) = t/(1 - g t) - 2 t + b` on
//!   `[0, 1/g)`, admissible when `b g <= 3 - 2 sqrt(2)`.
//!
//! At the admissibility boundary the contraction constant `kappa` degrades to
//! zero and only the exact iteration (`theta = 0`) is covered; such models are
//! allowed and reported as degenerate rather than rejected.

use std::fmt;

/// Sum threshold below which the majorizing sequence is considered converged.
pub const SEQUENCE_FLOOR: f64 = 1e-15;

/// Argument tolerance for the golden-section refinement of `kappa`.
const GOLDEN_TOL: f64 = 1e-11;

/// Grid size used to bracket the `kappa` maximizer before refinement.
const BRACKET_GRID: usize = 1024;

/// Errors from majorant construction and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum MajorantError {
    /// Evaluation outside `[0, R)`.
    OutOfDomain { t: f64, radius: f64 },
    /// Admissibility condition violated (`2bL > 1` or `b*gamma > 3 - 2*sqrt(2)`).
    ConditionViolated { product: f64, limit: f64 },
    /// Model parameter not positive and finite.
    BadParameter(String),
    /// No root of `f` found on the scan interval.
    NoRoot,
    /// A pair `(t, eps)` lies outside the invariant region.
    OutOfRegion { t: f64, eps: f64 },
    /// `f'(t) >= 0`, so a Newton-type step is undefined.
    NonNegativeSlope { t: f64 },
    /// `rho` outside `[0, beta/2)`.
    RhoOutOfRange { rho: f64, half_beta: f64 },
}

impl fmt::Display for MajorantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MajorantError::OutOfDomain { t, radius } => {
                write!(f, "t = {t} outside the domain [0, {radius})")
            }
            MajorantError::ConditionViolated { product, limit } => {
                write!(f, "admissibility violated: {product} > {limit}")
            }
            MajorantError::BadParameter(msg) => write!(f, "bad parameter: {msg}"),
            MajorantError::NoRoot => write!(f, "majorant has no root in its domain"),
            MajorantError::OutOfRegion { t, eps } => {
                write!(f, "({t}, {eps}) outside the invariant region")
            }
            MajorantError::NonNegativeSlope { t } => {
                write!(f, "slope is nonnegative at t = {t}")
            }
            MajorantError::RhoOutOfRange { rho, half_beta } => {
                write!(f, "rho = {rho} outside [0, {half_beta})")
            }
        }
    }
}

impl std::error::Error for MajorantError {}

/// Which model family a certificate is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Lipschitz,
    Smale,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Lipschitz => f.write_str("lipschitz"),
            Variant::Smale => f.write_str("smale"),
        }
    }
}

/// Scalar function interface shared by the built-in models and their shifts.
///
/// Implementors promise: value/slope/left-derivative are defined on `[0, R)`,
/// the slope is strictly increasing there, and `value(0) > 0`,
/// `slope(0) = -1`. The raw accessors do not range-check; [`ScalarMajorant::eval`]
/// does.
pub trait ScalarMajorant {
    /// Domain radius `R`.
    fn radius(&self) -> f64;
    /// `f(t)`.
    fn value(&self, t: f64) -> f64;
    /// `f'(t)`.
    fn slope(&self, t: f64) -> f64;
    /// Left derivative of the slope at `t`.
    fn slope_left_derivative(&self, t: f64) -> f64;

    /// Range-checked evaluation of `(f, f', D^- f')`.
    fn eval(&self, t: f64) -> Result<(f64, f64, f64), MajorantError> {
        if !(0.0..self.radius()).contains(&t) {
            return Err(MajorantError::OutOfDomain { t, radius: self.radius() });
        }
        Ok((self.value(t), self.slope(t), self.slope_left_derivative(t)))
    }

    /// Linearization error `e_f(v, t) = f(v) - f(t) - f'(t) (v - t)`.
    ///
    /// Nonnegative for `v >= t` by convexity of the slope.
    fn lin_error(&self, v: f64, t: f64) -> Result<f64, MajorantError> {
        let r = self.radius();
        if !(0.0..r).contains(&v) {
            return Err(MajorantError::OutOfDomain { t: v, radius: r });
        }
        if !(0.0..r).contains(&t) {
            return Err(MajorantError::OutOfDomain { t, radius: r });
        }
        Ok(self.value(v) - self.value(t) - self.slope(t) * (v - t))
    }

    /// Critical points; overridden with closed forms where they exist.
    fn critical_points(&self) -> Result<CriticalPoints, MajorantError> {
        critical_points_numeric(self)
    }

    /// Convergence constants at robustness radius `rho`; overridden with
    /// closed forms where they exist.
    fn constants(&self, rho: f64) -> Result<ConvergenceConstants, MajorantError> {
        constants_numeric(self, rho)
    }
}

/// A concrete majorant model with validated parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MajorantModel {
    Lipschitz { b: f64, l: f64 },
    Smale { b: f64, gamma: f64 },
}

fn require_positive(name: &str, v: f64) -> Result<(), MajorantError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(MajorantError::BadParameter(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// `3 - 2 sqrt(2)`, the admissibility limit for `b * gamma`.
pub fn smale_limit() -> f64 {
    3.0 - 2.0 * std::f64::consts::SQRT_2
}

impl MajorantModel {
    /// Quadratic model from an affine-invariant Lipschitz constant.
    pub fn lipschitz(b: f64, l: f64) -> Result<Self, MajorantError> {
        require_positive("b", b)?;
        require_positive("L", l)?;
        let product = 2.0 * b * l;
        if product > 1.0 {
            return Err(MajorantError::ConditionViolated { product, limit: 1.0 });
        }
        Ok(MajorantModel::Lipschitz { b, l })
    }

    /// Rational model from an affine-invariant Smale constant.
    pub fn smale(b: f64, gamma: f64) -> Result<Self, MajorantError> {
        require_positive("b", b)?;
        require_positive("gamma", gamma)?;
        let product = b * gamma;
        if product > smale_limit() {
            return Err(MajorantError::ConditionViolated { product, limit: smale_limit() });
        }
        Ok(MajorantModel::Smale { b, gamma })
    }

    pub fn variant(&self) -> Variant {
        match self {
            MajorantModel::Lipschitz { .. } => Variant::Lipschitz,
            MajorantModel::Smale { .. } => Variant::Smale,
        }
    }

    /// `f(0)`, an upper bound on the initial inner-norm residual.
    pub fn b(&self) -> f64 {
        match *self {
            MajorantModel::Lipschitz { b, .. } | MajorantModel::Smale { b, .. } => b,
        }
    }

    /// Shifted function `g(t) = -(f(t + rho) + 2 rho) / f'(rho)` on `[0, R - rho)`.
    ///
    /// The normalization by `|f'(rho)|` restores `g'(0) = -1`, so `g` is again
    /// a valid scalar majorant; it governs runs started anywhere in the
    /// `rho`-ball around the certification point.
    pub fn shift(&self, rho: f64) -> Result<ShiftedMajorant, MajorantError> {
        let cps = self.critical_points()?;
        if !(0.0..cps.beta / 2.0).contains(&rho) {
            return Err(MajorantError::RhoOutOfRange { rho, half_beta: cps.beta / 2.0 });
        }
        Ok(ShiftedMajorant { base: *self, rho, slope_scale: -self.slope(rho) })
    }
}

impl ScalarMajorant for MajorantModel {
    fn radius(&self) -> f64 {
        match *self {
            MajorantModel::Lipschitz { l, .. } => 1.0 / l,
            MajorantModel::Smale { gamma, .. } => 1.0 / gamma,
        }
    }

    fn value(&self, t: f64) -> f64 {
        match *self {
            MajorantModel::Lipschitz { b, l } => 0.5 * l * t * t - t + b,
            MajorantModel::Smale { b, gamma } => t / (1.0 - gamma * t) - 2.0 * t + b,
        }
    }

    fn slope(&self, t: f64) -> f64 {
        match *self {
            MajorantModel::Lipschitz { l, .. } => l * t - 1.0,
            MajorantModel::Smale { gamma, .. } => {
                let w = 1.0 - gamma * t;
                1.0 / (w * w) - 2.0
            }
        }
    }

    fn slope_left_derivative(&self, t: f64) -> f64 {
        match *self {
            MajorantModel::Lipschitz { l, .. } => l,
            MajorantModel::Smale { gamma, .. } => {
                let w = 1.0 - gamma * t;
                2.0 * gamma / (w * w * w)
            }
        }
    }

    fn critical_points(&self) -> Result<CriticalPoints, MajorantError> {
        match *self {
            MajorantModel::Lipschitz { b, l } => {
                // Smallest root of (L/2)t^2 - t + b in the cancellation-free form.
                let disc = (1.0 - 2.0 * b * l).max(0.0);
                let t_star = 2.0 * b / (1.0 + disc.sqrt());
                Ok(CriticalPoints { t_star, t_bar: 1.0 / l, beta: 0.5 / l - b })
            }
            MajorantModel::Smale { b, gamma } => {
                let t_bar = (1.0 - std::f64::consts::FRAC_1_SQRT_2) / gamma;
                let beta = smale_limit() / gamma - b;
                let t_star = self.smale_root(t_bar)?;
                Ok(CriticalPoints { t_star, t_bar, beta })
            }
        }
    }

    fn constants(&self, rho: f64) -> Result<ConvergenceConstants, MajorantError> {
        if rho == 0.0 {
            let kappa = match *self {
                MajorantModel::Lipschitz { b, l } => 1.0 - (2.0 * b * l).sqrt(),
                MajorantModel::Smale { b, gamma } => {
                    let v = (b * gamma).sqrt();
                    1.0 - 2.0 * v - b * gamma
                }
            };
            let lambda = match *self {
                MajorantModel::Lipschitz { b, l } => (2.0 * b * l).sqrt() / l,
                MajorantModel::Smale { b, gamma } => {
                    let v = (b * gamma).sqrt();
                    b / (v + b * gamma)
                }
            };
            return Ok(ConvergenceConstants {
                rho: 0.0,
                kappa,
                lambda,
                lambda_point: lambda,
                theta_tilde: kappa / (2.0 - kappa),
                q_linear_threshold: q_linear_threshold(kappa),
            });
        }
        constants_numeric(self, rho)
    }
}

impl MajorantModel {
    /// Safeguarded bisection for the smallest root of the rational model on
    /// `[0, t_bar]`. The function is strictly convex with `f(0) = b > 0` and
    /// minimum `-beta <= 0` at `t_bar`, so the smallest root lives there.
    fn smale_root(&self, t_bar: f64) -> Result<f64, MajorantError> {
        let f_bar = self.value(t_bar);
        if f_bar > 1e-12 {
            return Err(MajorantError::NoRoot);
        }
        if f_bar >= 0.0 {
            // Tangency at the admissibility boundary.
            return Ok(t_bar);
        }
        let (mut lo, mut hi) = (0.0_f64, t_bar);
        for _ in 0..200 {
            if hi - lo <= 1e-15 * t_bar.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.value(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// The shifted majorant `g(t) = (f(t + rho) + 2 rho) / |f'(rho)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedMajorant {
    base: MajorantModel,
    rho: f64,
    slope_scale: f64,
}

impl ShiftedMajorant {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn base(&self) -> &MajorantModel {
        &self.base
    }
}

impl ScalarMajorant for ShiftedMajorant {
    fn radius(&self) -> f64 {
        self.base.radius() - self.rho
    }

    fn value(&self, t: f64) -> f64 {
        (self.base.value(t + self.rho) + 2.0 * self.rho) / self.slope_scale
    }

    fn slope(&self, t: f64) -> f64 {
        self.base.slope(t + self.rho) / self.slope_scale
    }

    fn slope_left_derivative(&self, t: f64) -> f64 {
        self.base.slope_left_derivative(t + self.rho) / self.slope_scale
    }
}

/// The landmark values of a majorant function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoints {
    /// Smallest root of `f`.
    pub t_star: f64,
    /// Supremum of the interval where `f' < 0`.
    pub t_bar: f64,
    /// `sup { -f(t) : t in [0, R) }`.
    pub beta: f64,
}

/// The certificate constants at a robustness radius `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceConstants {
    pub rho: f64,
    /// Contraction constant in `(0, 1)`; 0 at the admissibility boundary.
    pub kappa: f64,
    /// Containment ball radius around the run start (`lambda_point - rho`).
    pub lambda: f64,
    /// The sup point on the t-axis of the unshifted majorant,
    /// `sup { t : kappa + f'(t) < 0 }`. Equals `lambda` when `rho = 0`.
    pub lambda_point: f64,
    /// Largest admissible residual tolerance, `kappa / (2 - kappa)`.
    pub theta_tilde: f64,
    /// Tolerances strictly below this bound give Q-linear error decay.
    pub q_linear_threshold: f64,
}

/// Threshold `[-2(k+1) + sqrt(4(k+1)^2 + k(4+k))] / (4+k)` on `theta` for the
/// Q-linear rate bound.
pub fn q_linear_threshold(kappa: f64) -> f64 {
    let k1 = kappa + 1.0;
    ((4.0 * k1 * k1 + kappa * (4.0 + kappa)).sqrt() - 2.0 * k1) / (4.0 + kappa)
}

/// Generic critical points by scan + bisection; shares no code with the
/// closed forms on [`MajorantModel`] so the two can cross-check each other.
pub fn critical_points_numeric<M: ScalarMajorant + ?Sized>(
    maj: &M,
) -> Result<CriticalPoints, MajorantError> {
    let r = maj.radius();
    let edge = r * (1.0 - 1e-12);

    // t_bar: the slope is strictly increasing, so bisect its sign change.
    let t_bar = if maj.slope(edge) < 0.0 {
        r
    } else {
        let (mut lo, mut hi) = (0.0, edge);
        while hi - lo > 1e-14 * r.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if maj.slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    // beta as the limit of -f at t_bar from below.
    let beta_eval = (t_bar - 1e-12 * t_bar.max(1.0)).min(edge);
    let beta = -maj.value(beta_eval);

    // Smallest root: f decreases from b > 0 towards -beta on [0, t_bar].
    let scan_hi = t_bar.min(edge);
    let f_hi = maj.value(scan_hi);
    if f_hi > 1e-12 {
        return Err(MajorantError::NoRoot);
    }
    let t_star = if f_hi >= 0.0 {
        scan_hi
    } else {
        let (mut lo, mut hi) = (0.0, scan_hi);
        while hi - lo > 1e-15 * scan_hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if maj.value(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    Ok(CriticalPoints { t_star, t_bar, beta })
}

/// Generic constants by grid bracketing plus golden-section refinement of
///
/// `kappa_rho = sup_{rho < t < R} -(f(t) + 2 rho) / (|f'(rho)| (t - rho))`,
///
/// then bisection for `lambda_point = sup { t : kappa_rho + f'(t) < 0 }`.
pub fn constants_numeric<M: ScalarMajorant + ?Sized>(
    maj: &M,
    rho: f64,
) -> Result<ConvergenceConstants, MajorantError> {
    let cps = critical_points_numeric(maj)?;
    if !(0.0..cps.beta / 2.0).contains(&rho) {
        return Err(MajorantError::RhoOutOfRange { rho, half_beta: cps.beta / 2.0 });
    }

    let r = maj.radius();
    let denom = -maj.slope(rho);
    debug_assert!(denom > 0.0);
    let objective = |t: f64| -(maj.value(t) + 2.0 * rho) / (denom * (t - rho));

    // Bracket the maximizer on a grid of (rho, R), then refine. The objective
    // is unimodal for both model families.
    let lo_edge = rho + (r - rho) * 1e-9;
    let hi_edge = r - (r - rho) * 1e-9;
    let grid_at = |i: usize| {
        lo_edge + (hi_edge - lo_edge) * (i as f64) / ((BRACKET_GRID - 1) as f64)
    };
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..BRACKET_GRID {
        let v = objective(grid_at(i));
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = grid_at(best_i.saturating_sub(1));
    let mut b = grid_at((best_i + 1).min(BRACKET_GRID - 1));
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while b - a > GOLDEN_TOL {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1);
        }
    }
    let kappa = best_v.max(f1).max(f2);

    // lambda_point: kappa + f' is strictly increasing; find its sign change.
    let lambda_point = if kappa + maj.slope(hi_edge) < 0.0 {
        r
    } else {
        let (mut lo, mut hi) = (rho, hi_edge);
        while hi - lo > 1e-14 * r.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if kappa + maj.slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    Ok(ConvergenceConstants {
        rho,
        kappa,
        lambda: lambda_point - rho,
        lambda_point,
        theta_tilde: kappa / (2.0 - kappa),
        q_linear_threshold: q_linear_threshold(kappa),
    })
}

/// Membership in the invariant region: `0 <= t < lambda`, `0 <= eps <= kappa t`,
/// `f(t) + eps > 0`, with the zero-shift constants of `maj`.
pub fn in_region_a<M: ScalarMajorant + ?Sized>(
    maj: &M,
    t: f64,
    eps: f64,
) -> Result<bool, MajorantError> {
    let c = maj.constants(0.0)?;
    Ok(region_contains(maj, &c, t, eps))
}

fn region_contains<M: ScalarMajorant + ?Sized>(
    maj: &M,
    c: &ConvergenceConstants,
    t: f64,
    eps: f64,
) -> bool {
    t >= 0.0 && t < c.lambda && eps >= 0.0 && eps <= c.kappa * t && maj.value(t) + eps > 0.0
}

/// One inexact scalar step:
/// `t+ = t - (1 + theta)(f(t) + eps)/f'(t)`, `eps+ = eps + 2 theta (f(t) + eps)`.
pub fn n_theta<M: ScalarMajorant + ?Sized>(
    maj: &M,
    t: f64,
    eps: f64,
    theta: f64,
) -> Result<(f64, f64), MajorantError> {
    let slope = maj.slope(t);
    if slope >= 0.0 {
        return Err(MajorantError::NonNegativeSlope { t });
    }
    if !in_region_a(maj, t, eps)? {
        return Err(MajorantError::OutOfRegion { t, eps });
    }
    Ok(step_unchecked(maj, t, eps, theta))
}

fn step_unchecked<M: ScalarMajorant + ?Sized>(
    maj: &M,
    t: f64,
    eps: f64,
    theta: f64,
) -> (f64, f64) {
    let sum = maj.value(t) + eps;
    (t - (1.0 + theta) * sum / maj.slope(t), eps + 2.0 * theta * sum)
}

/// The scalar trajectory `(t_k, eps_k)` from `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantSequence {
    /// Residual tolerance used to generate the sequence.
    pub theta: f64,
    /// `(t_k, eps_k)` pairs, starting at `(0, 0)`.
    pub points: Vec<(f64, f64)>,
}

impl MajorantSequence {
    /// Increments `t_{k+1} - t_k`; these majorize the vector step norms.
    pub fn steps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1].0 - w[0].0).collect()
    }
}

/// Iterate [`n_theta`] from `(0, 0)` for up to `k_max` steps, halting early
/// once `f(t_k) + eps_k` drops below [`SEQUENCE_FLOOR`].
pub fn majorant_sequence<M: ScalarMajorant + ?Sized>(
    maj: &M,
    theta: f64,
    k_max: usize,
) -> Result<MajorantSequence, MajorantError> {
    let points = sequence_points(maj, &vec![theta; k_max], SEQUENCE_FLOOR)?;
    Ok(MajorantSequence { theta, points })
}

/// Sequence generation with a per-step tolerance schedule. Used by the audit
/// layer, where decaying schedules are allowed.
pub(crate) fn sequence_points<M: ScalarMajorant + ?Sized>(
    maj: &M,
    thetas: &[f64],
    floor: f64,
) -> Result<Vec<(f64, f64)>, MajorantError> {
    let c = maj.constants(0.0)?;
    let mut points = Vec::with_capacity(thetas.len() + 1);
    let (mut t, mut eps) = (0.0_f64, 0.0_f64);
    points.push((t, eps));
    for &theta in thetas {
        if maj.value(t) + eps < floor {
            break;
        }
        let slope = maj.slope(t);
        if slope >= 0.0 {
            return Err(MajorantError::NonNegativeSlope { t });
        }
        if !region_contains(maj, &c, t, eps) {
            return Err(MajorantError::OutOfRegion { t, eps });
        }
        let (tn, en) = step_unchecked(maj, t, eps, theta);
        t = tn;
        eps = en;
        points.push((t, eps));
    }
    Ok(points)
}
