//! Built-in test problems and a polynomial-system representation for
//! user-defined instances.
//!
//! Polynomial systems give exact residuals and Jacobians, which keeps the
//! certificate measurements free of evaluator noise. The built-ins carry
//! hand-derivable constants:
//!
//! * `quad1d` — `F(x) = x^2 - 2` driven into `{0}` from `x0 = 1.5`;
//! * `smale1d` — the same instance certified through its analytic constant;
//! * `ineq2` — a circle/line/sign system with one equality and two
//!   inequalities, whose Lipschitz constant is certified numerically over
//!   the domain ball with a 5% safety factor.

use crate::cone::{ConeSpec, ConeTag};
use crate::minnorm::t_inverse_norm_at;
use crate::newton::ProblemSpec;
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;
use std::sync::OnceLock;

/// Largest allowed monomial exponent (keeps `powi` in `i32` range).
pub const MAX_EXPONENT: u32 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemsError {
    UnknownBuiltin(String),
    Shape(String),
}

impl fmt::Display for ProblemsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemsError::UnknownBuiltin(name) => write!(f, "unknown builtin problem '{name}'"),
            ProblemsError::Shape(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ProblemsError {}

/// `coeff * prod_j x_j^{exponents[j]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// A map `R^n -> R^m` with one monomial list per output coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem {
    input_dim: usize,
    outputs: Vec<Vec<Monomial>>,
}

impl PolynomialSystem {
    pub fn new(input_dim: usize, outputs: Vec<Vec<Monomial>>) -> Result<Self, ProblemsError> {
        if input_dim == 0 || outputs.is_empty() {
            return Err(ProblemsError::Shape("dimensions must be at least 1".into()));
        }
        for (i, terms) in outputs.iter().enumerate() {
            for (j, term) in terms.iter().enumerate() {
                if term.exponents.len() != input_dim {
                    return Err(ProblemsError::Shape(format!(
                        "polynomials[{i}][{j}]: {} exponents, expected n = {input_dim}",
                        term.exponents.len()
                    )));
                }
                if !term.coeff.is_finite() {
                    return Err(ProblemsError::Shape(format!(
                        "polynomials[{i}][{j}]: coefficient {} is not finite",
                        term.coeff
                    )));
                }
                if term.exponents.iter().any(|&e| e > MAX_EXPONENT) {
                    return Err(ProblemsError::Shape(format!(
                        "polynomials[{i}][{j}]: exponent exceeds {MAX_EXPONENT}"
                    )));
                }
            }
        }
        Ok(PolynomialSystem { input_dim, outputs })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>, ProblemsError> {
        if x.len() != self.input_dim {
            return Err(ProblemsError::Shape(format!(
                "point has {} coordinates, system expects {}",
                x.len(),
                self.input_dim
            )));
        }
        let mut out = DVector::zeros(self.outputs.len());
        for (i, terms) in self.outputs.iter().enumerate() {
            out[i] = terms
                .iter()
                .map(|t| {
                    t.coeff
                        * t.exponents
                            .iter()
                            .zip(x.iter())
                            .map(|(&e, &xj)| xj.powi(e as i32))
                            .product::<f64>()
                })
                .sum();
        }
        Ok(out)
    }

    /// Exact Jacobian by the term-wise power rule.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, ProblemsError> {
        if x.len() != self.input_dim {
            return Err(ProblemsError::Shape(format!(
                "point has {} coordinates, system expects {}",
                x.len(),
                self.input_dim
            )));
        }
        let mut jac = DMatrix::zeros(self.outputs.len(), self.input_dim);
        for (i, terms) in self.outputs.iter().enumerate() {
            for term in terms {
                for j in 0..self.input_dim {
                    let ej = term.exponents[j];
                    if ej == 0 {
                        continue;
                    }
                    let mut v = term.coeff * ej as f64 * x[j].powi(ej as i32 - 1);
                    for (k, &ek) in term.exponents.iter().enumerate() {
                        if k != j {
                            v *= x[k].powi(ek as i32);
                        }
                    }
                    jac[(i, j)] += v;
                }
            }
        }
        Ok(jac)
    }
}

/// Wrap a polynomial system as a solvable problem.
pub fn make_problem(
    sys: PolynomialSystem,
    cone: ConeSpec,
    x0: DVector<f64>,
    lipschitz: Option<f64>,
    smale_gamma: Option<f64>,
    domain_radius: Option<f64>,
) -> Result<ProblemSpec, ProblemsError> {
    if cone.dim() != sys.output_dim() {
        return Err(ProblemsError::Shape(format!(
            "cone has {} coordinates, system produces {}",
            cone.dim(),
            sys.output_dim()
        )));
    }
    if x0.len() != sys.input_dim() {
        return Err(ProblemsError::Shape(format!(
            "x0 has {} coordinates, system expects {}",
            x0.len(),
            sys.input_dim()
        )));
    }
    for v in [lipschitz, smale_gamma, domain_radius].into_iter().flatten() {
        if !(v.is_finite() && v > 0.0) {
            return Err(ProblemsError::Shape(format!(
                "constants must be positive and finite, got {v}"
            )));
        }
    }
    let n = sys.input_dim();
    let m = sys.output_dim();
    let shared = Arc::new(sys);
    let for_eval = Arc::clone(&shared);
    let for_jac = shared;
    Ok(ProblemSpec {
        n,
        m,
        residual: Box::new(move |x| for_eval.eval(x).expect("dimensions fixed at construction")),
        jacobian: Box::new(move |x| for_jac.jacobian(x).expect("dimensions fixed at construction")),
        cone,
        x0,
        lipschitz,
        smale_gamma,
        domain_radius,
    })
}

fn quad_system() -> PolynomialSystem {
    PolynomialSystem::new(
        1,
        vec![vec![
            Monomial { coeff: 1.0, exponents: vec![2] },
            Monomial { coeff: -2.0, exponents: vec![0] },
        ]],
    )
    .expect("static system")
}

fn ineq2_system() -> PolynomialSystem {
    PolynomialSystem::new(
        2,
        vec![
            vec![
                Monomial { coeff: 1.0, exponents: vec![2, 0] },
                Monomial { coeff: 1.0, exponents: vec![0, 2] },
                Monomial { coeff: -4.0, exponents: vec![0, 0] },
            ],
            vec![
                Monomial { coeff: 1.0, exponents: vec![1, 0] },
                Monomial { coeff: 1.0, exponents: vec![0, 1] },
                Monomial { coeff: -1.0, exponents: vec![0, 0] },
            ],
            vec![Monomial { coeff: -1.0, exponents: vec![1, 0] }],
        ],
    )
    .expect("static system")
}

/// Numerically certified affine-invariant Lipschitz constant for `ineq2`.
///
/// The defining ratio `||T_{x0}^{-1}[J(y) - J(x)] u|| / ||y - x||` is scale
/// free in `y - x` for a quadratic system, so it is sampled over a direction
/// grid (closed under negation, which realizes the aligned worst case) and
/// inflated by 5%. The Lipschitz property test validates the result
/// independently over the domain ball.
fn ineq2_lipschitz() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let sys = ineq2_system();
        let x0 = DVector::from_vec(vec![0.4, 0.7]);
        let j0 = sys.jacobian(&x0).expect("static dims");
        let cone = ConeSpec::new(vec![ConeTag::NonPos, ConeTag::Zero, ConeTag::NonPos])
            .expect("static cone");
        let dirs = 32;
        let radius = 0.05;
        let angle = |i: usize| 2.0 * std::f64::consts::PI * i as f64 / dirs as f64;
        let mut sup: f64 = 0.0;
        for i in 0..dirs {
            let delta = DVector::from_vec(vec![
                radius * angle(i).cos(),
                radius * angle(i).sin(),
            ]);
            let x = &x0 - 0.5 * &delta;
            let y = &x0 + 0.5 * &delta;
            let jdiff = sys.jacobian(&y).expect("dims") - sys.jacobian(&x).expect("dims");
            for k in 0..dirs {
                let u = DVector::from_vec(vec![angle(k).cos(), angle(k).sin()]);
                let w = &jdiff * u;
                let v = t_inverse_norm_at(&j0, &w, &cone).expect("well-posed");
                if v.is_finite() {
                    sup = sup.max(v / radius);
                }
            }
        }
        1.05 * sup
    })
}

/// Construct a built-in problem by name (`quad1d`, `ineq2`, `smale1d`).
pub fn builtin(name: &str) -> Result<ProblemSpec, ProblemsError> {
    match name {
        "quad1d" => make_problem(
            quad_system(),
            ConeSpec::new(vec![ConeTag::Zero]).expect("static cone"),
            DVector::from_vec(vec![1.5]),
            Some(2.0 / 3.0),
            Some(1.0 / 3.0),
            Some(1.5),
        ),
        // quad1d routed through the analytic-constant certificate: only the
        // Smale constant is present, so certification picks that variant.
        "smale1d" => make_problem(
            quad_system(),
            ConeSpec::new(vec![ConeTag::Zero]).expect("static cone"),
            DVector::from_vec(vec![1.5]),
            None,
            Some(1.0 / 3.0),
            None,
        ),
        "ineq2" => {
            let l = ineq2_lipschitz();
            make_problem(
                ineq2_system(),
                ConeSpec::new(vec![ConeTag::NonPos, ConeTag::Zero, ConeTag::NonPos])
                    .expect("static cone"),
                DVector::from_vec(vec![0.4, 0.7]),
                Some(l),
                None,
                Some(1.0 / l),
            )
        }
        other => Err(ProblemsError::UnknownBuiltin(other.to_string())),
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 3] = ["quad1d", "ineq2", "smale1d"];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn quad_encoding_evaluates() {
        let sys = quad_system();
        let v = sys.eval(&dvector![1.5]).unwrap();
        assert_eq!(v[0], 0.25);
        let j = sys.jacobian(&dvector![1.5]).unwrap();
        assert_eq!(j[(0, 0)], 3.0);
    }

    #[test]
    fn ineq2_values_at_start() {
        let sys = ineq2_system();
        let x0 = dvector![0.4, 0.7];
        let f = sys.eval(&x0).unwrap();
        assert_relative_eq!(f[0], -3.35, epsilon = 1e-12);
        assert_relative_eq!(f[1], 0.1, epsilon = 1e-12);
        assert_relative_eq!(f[2], -0.4, epsilon = 1e-12);
        let j = sys.jacobian(&x0).unwrap();
        assert_relative_eq!(j[(0, 0)], 0.8, epsilon = 1e-12);
        assert_relative_eq!(j[(0, 1)], 1.4, epsilon = 1e-12);
        assert_eq!(j[(1, 0)], 1.0);
        assert_eq!(j[(2, 0)], -1.0);
        assert_eq!(j[(2, 1)], 0.0);
    }

    #[test]
    fn exponent_shape_validation() {
        let bad = PolynomialSystem::new(
            2,
            vec![vec![Monomial { coeff: 1.0, exponents: vec![1] }]],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(builtin("nope"), Err(ProblemsError::UnknownBuiltin(_))));
    }

    #[test]
    fn builtin_constants() {
        let p = builtin("quad1d").unwrap();
        assert_eq!(p.lipschitz, Some(2.0 / 3.0));
        assert_eq!(p.smale_gamma, Some(1.0 / 3.0));
        assert_eq!(p.domain_radius, Some(1.5));

        let s = builtin("smale1d").unwrap();
        assert_eq!(s.lipschitz, None);
        assert_eq!(s.smale_gamma, Some(1.0 / 3.0));

        let q = builtin("ineq2").unwrap();
        let l = q.lipschitz.unwrap();
        // Exact directional supremum is 2*sqrt(2)/0.6; the grid includes the
        // aligned pair, so the certified value is exactly 1.05 times it.
        assert_relative_eq!(l, 1.05 * 2.0 * std::f64::consts::SQRT_2 / 0.6, epsilon = 1e-9);
    }
}
