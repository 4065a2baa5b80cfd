//! Potential specifications V(x) and their derivatives.
//!
//! A potential enters the Lagrangian L(x, v) = |v|^2/2 - V(x). Analytic kinds
//! (`Zero`, `Quadratic`, `Radial`) carry closed-form gradients and Hessians;
//! `BlackBox` falls back to central finite differences with one Richardson
//! extrapolation level. `Scaled` wraps any base potential as eps * V so that
//! small-coupling studies exercise the same code paths as everything else.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MtwError, Result};

/// Base relative finite-difference step used when none is given.
/// The effective step is `fd_step * (1 + |x|)`.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Symmetry tolerance enforced on quadratic coefficient matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense polynomial with coefficients stored constant-first.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: &[f64]) -> Self {
        Poly {
            coeffs: coeffs.to_vec(),
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn deriv(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly { coeffs: vec![0.0] };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Poly { coeffs }
    }
}

/// Radial profile f together with its first four derivatives, precomputed so
/// the integrator's inner loops do not re-derive them.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub f: Poly,
    pub d1: Poly,
    pub d2: Poly,
    pub d3: Poly,
    pub d4: Poly,
}

impl RadialProfile {
    pub fn new(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(MtwError::Input(
                "radial profile needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(MtwError::Input("radial coefficients must be finite".into()));
        }
        let f = Poly::new(coeffs);
        let d1 = f.deriv();
        let d2 = d1.deriv();
        let d3 = d2.deriv();
        let d4 = d3.deriv();
        Ok(RadialProfile { f, d1, d2, d3, d4 })
    }
}

/// A potential V on flat space.
#[derive(Clone)]
pub enum PotentialSpec {
    /// V = 0: free motion.
    Zero,
    /// V(x) = x^T A x / 2 with A symmetric.
    Quadratic { a: DMatrix<f64> },
    /// V(x) = f(|x|^2 / 2) with a polynomial profile f.
    Radial { profile: RadialProfile },
    /// Caller-supplied evaluation; all derivatives via finite differences.
    BlackBox {
        eval: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>,
        fd_step: f64,
    },
    /// eps * V for a wrapped base potential.
    Scaled { eps: f64, base: Box<PotentialSpec> },
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Zero => write!(f, "Zero"),
            PotentialSpec::Quadratic { a } => write!(f, "Quadratic {{ a: {a:?} }}"),
            PotentialSpec::Radial { profile } => write!(f, "Radial {{ f: {:?} }}", profile.f),
            PotentialSpec::BlackBox { fd_step, .. } => {
                write!(f, "BlackBox {{ fd_step: {fd_step} }}")
            }
            PotentialSpec::Scaled { eps, base } => {
                write!(f, "Scaled {{ eps: {eps}, base: {base:?} }}")
            }
        }
    }
}

impl PotentialSpec {
    pub fn quadratic(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(MtwError::Input(format!(
                "quadratic coefficient matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let asym = (&a - a.transpose()).amax();
        if !asym.is_finite() || asym > SYMMETRY_TOL {
            return Err(MtwError::Input(format!(
                "quadratic coefficient matrix must be symmetric (|A - A^T| = {asym:.3e})"
            )));
        }
        Ok(PotentialSpec::Quadratic { a })
    }

    pub fn radial(coeffs: &[f64]) -> Result<Self> {
        Ok(PotentialSpec::Radial {
            profile: RadialProfile::new(coeffs)?,
        })
    }

    pub fn black_box<F>(eval: F, fd_step: f64) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        if !(fd_step.is_finite() && fd_step > 0.0) {
            return Err(MtwError::Input(format!(
                "fd_step must be positive and finite, got {fd_step}"
            )));
        }
        Ok(PotentialSpec::BlackBox {
            eval: Arc::new(eval),
            fd_step,
        })
    }

    pub fn scaled(eps: f64, base: PotentialSpec) -> Result<Self> {
        if !eps.is_finite() {
            return Err(MtwError::Input(format!("eps must be finite, got {eps}")));
        }
        Ok(PotentialSpec::Scaled {
            eps,
            base: Box::new(base),
        })
    }

    /// Dimension constraint imposed by the spec, if any. Only quadratic
    /// potentials pin the dimension; the other kinds work in any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            PotentialSpec::Quadratic { a } => Some(a.nrows()),
            PotentialSpec::Scaled { base, .. } => base.dim(),
            _ => None,
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        self.check_dim_len(x.len())
    }

    pub(crate) fn check_dim_len(&self, got: usize) -> Result<()> {
        if let Some(n) = self.dim() {
            if got != n {
                return Err(MtwError::Dimension { expected: n, got });
            }
        }
        Ok(())
    }

    /// V(x).
    pub fn eval_potential(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        let value = match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Quadratic { a } => 0.5 * x.dot(&(a * x)),
            PotentialSpec::Radial { profile } => profile.f.eval(0.5 * x.norm_squared()),
            PotentialSpec::BlackBox { eval, .. } => eval(x),
            PotentialSpec::Scaled { eps, base } => eps * base.eval_potential(x)?,
        };
        if !value.is_finite() {
            return Err(MtwError::NonFinite {
                context: format!("V({})", fmt_point(x)),
            });
        }
        Ok(value)
    }

    /// Gradient of V.
    pub fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        match self {
            PotentialSpec::Zero => Ok(DVector::zeros(x.len())),
            PotentialSpec::Quadratic { a } => Ok(a * x),
            PotentialSpec::Radial { profile } => {
                let z = 0.5 * x.norm_squared();
                Ok(x * profile.d1.eval(z))
            }
            PotentialSpec::BlackBox { eval, fd_step } => fd_grad(eval.as_ref(), x, *fd_step),
            PotentialSpec::Scaled { eps, base } => Ok(base.grad(x)? * *eps),
        }
    }

    /// Hessian of V. Always exactly symmetric.
    pub fn hess(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        match self {
            PotentialSpec::Zero => Ok(DMatrix::zeros(x.len(), x.len())),
            PotentialSpec::Quadratic { a } => Ok(a.clone()),
            PotentialSpec::Radial { profile } => {
                let z = 0.5 * x.norm_squared();
                let mut h = DMatrix::identity(x.len(), x.len()) * profile.d1.eval(z);
                let d2 = profile.d2.eval(z);
                h.ger(d2, x, x, 1.0);
                Ok(symmetrize(h))
            }
            PotentialSpec::BlackBox { eval, fd_step } => fd_hess(eval.as_ref(), x, *fd_step),
            PotentialSpec::Scaled { eps, base } => Ok(base.hess(x)? * *eps),
        }
    }

    /// Second directional derivative of the Hessian field:
    /// d^2/ds^2 [Hess V(x + s w)] at s = 0.
    ///
    /// For a radial potential V = f(|x|^2/2) this has the closed form (with
    /// z = |x|^2/2, p = <x, w>)
    ///
    ///   (f''' p^2 + f'' |w|^2) I + (f'''' p^2 + f''' |w|^2) x x^T
    ///     + 2 f''' p (w x^T + x w^T) + 2 f'' w w^T.
    ///
    /// The black-box path differences the Hessian in s. Because a second
    /// difference of an already finite-differenced quantity amplifies noise,
    /// the outer step is sqrt(fd_step)-scaled rather than fd_step itself.
    pub fn hess_second_directional(
        &self,
        x: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        if x.len() != w.len() {
            return Err(MtwError::Dimension {
                expected: x.len(),
                got: w.len(),
            });
        }
        let n = x.len();
        match self {
            PotentialSpec::Zero | PotentialSpec::Quadratic { .. } => Ok(DMatrix::zeros(n, n)),
            PotentialSpec::Radial { profile } => {
                let z = 0.5 * x.norm_squared();
                let p = x.dot(w);
                let w2 = w.norm_squared();
                let d2 = profile.d2.eval(z);
                let d3 = profile.d3.eval(z);
                let d4 = profile.d4.eval(z);
                let mut h = DMatrix::identity(n, n) * (d3 * p * p + d2 * w2);
                h.ger(d4 * p * p + d3 * w2, x, x, 1.0);
                h.ger(2.0 * d3 * p, w, x, 1.0);
                h.ger(2.0 * d3 * p, x, w, 1.0);
                h.ger(2.0 * d2, w, w, 1.0);
                Ok(symmetrize(h))
            }
            PotentialSpec::BlackBox { fd_step, .. } => {
                let wn = w.norm();
                if wn == 0.0 {
                    return Ok(DMatrix::zeros(n, n));
                }
                let h_outer = fd_step.sqrt() * (1.0 + x.norm()) / (1.0 + wn);
                let second = |hh: f64| -> Result<DMatrix<f64>> {
                    let plus = self.hess(&(x + w * hh))?;
                    let minus = self.hess(&(x - w * hh))?;
                    let center = self.hess(x)?;
                    Ok((plus + minus - center * 2.0) / (hh * hh))
                };
                let coarse = second(h_outer)?;
                let fine = second(0.5 * h_outer)?;
                Ok(symmetrize((fine * 16.0 - coarse) / 15.0))
            }
            PotentialSpec::Scaled { eps, base } => {
                Ok(base.hess_second_directional(x, w)? * *eps)
            }
        }
    }

    /// Whether exact derivative formulas exist (everything but `BlackBox`).
    pub fn has_exact_derivatives(&self) -> bool {
        match self {
            PotentialSpec::BlackBox { .. } => false,
            PotentialSpec::Scaled { base, .. } => base.has_exact_derivatives(),
            _ => true,
        }
    }
}

fn fmt_point(x: &DVector<f64>) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn fd_eval(eval: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> Result<f64> {
    let v = eval(x);
    if !v.is_finite() {
        return Err(MtwError::NonFinite {
            context: format!("V({})", fmt_point(x)),
        });
    }
    Ok(v)
}

/// Central-difference gradient with one Richardson level: O(h^4) accurate.
fn fd_grad(
    eval: &dyn Fn(&DVector<f64>) -> f64,
    x: &DVector<f64>,
    fd_step: f64,
) -> Result<DVector<f64>> {
    let n = x.len();
    let h = fd_step * (1.0 + x.norm());
    let mut g = DVector::zeros(n);
    let mut xp = x.clone();
    for i in 0..n {
        let mut central = |hh: f64| -> Result<f64> {
            xp[i] = x[i] + hh;
            let plus = fd_eval(eval, &xp)?;
            xp[i] = x[i] - hh;
            let minus = fd_eval(eval, &xp)?;
            xp[i] = x[i];
            Ok((plus - minus) / (2.0 * hh))
        };
        let coarse = central(h)?;
        let fine = central(0.5 * h)?;
        g[i] = (4.0 * fine - coarse) / 3.0;
    }
    Ok(g)
}

/// Central-difference Hessian with one Richardson level, symmetrized.
fn fd_hess(
    eval: &dyn Fn(&DVector<f64>) -> f64,
    x: &DVector<f64>,
    fd_step: f64,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let h = fd_step * (1.0 + x.norm());
    let center = fd_eval(eval, x)?;
    let mut out = DMatrix::zeros(n, n);
    let mut xp = x.clone();
    for i in 0..n {
        let mut diag = |hh: f64| -> Result<f64> {
            xp[i] = x[i] + hh;
            let plus = fd_eval(eval, &xp)?;
            xp[i] = x[i] - hh;
            let minus = fd_eval(eval, &xp)?;
            xp[i] = x[i];
            Ok((plus - 2.0 * center + minus) / (hh * hh))
        };
        let coarse = diag(h)?;
        let fine = diag(0.5 * h)?;
        out[(i, i)] = (16.0 * fine - coarse) / 15.0;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut cross = |hh: f64| -> Result<f64> {
                let mut corner = |si: f64, sj: f64| -> Result<f64> {
                    xp[i] = x[i] + si * hh;
                    xp[j] = x[j] + sj * hh;
                    let v = fd_eval(eval, &xp)?;
                    xp[i] = x[i];
                    xp[j] = x[j];
                    Ok(v)
                };
                Ok(
                    (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                        + corner(-1.0, -1.0)?)
                        / (4.0 * hh * hh),
                )
            };
            let coarse = cross(h)?;
            let fine = cross(0.5 * h)?;
            let v = (16.0 * fine - coarse) / 15.0;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Per-point deviation between exact derivatives and the finite-difference
/// path applied to the same values.
#[derive(Debug, Clone)]
pub struct FdConsistencyRow {
    pub x: DVector<f64>,
    pub grad_dev: f64,
    pub hess_dev: f64,
    pub hess2_dev: f64,
}

#[derive(Debug, Clone)]
pub struct FdConsistencyReport {
    pub rows: Vec<FdConsistencyRow>,
    pub max_grad_dev: f64,
    pub max_hess_dev: f64,
    pub max_hess2_dev: f64,
}

/// Compares the exact derivatives of an analytic spec against a black-box
/// twin that sees only potential values. Directions for the second
/// directional Hessian derivative are drawn from a fixed seeded stream so
/// the report is reproducible.
pub fn fd_consistency_report(
    spec: &PotentialSpec,
    points: &[DVector<f64>],
) -> Result<FdConsistencyReport> {
    use rand::SeedableRng;

    if !spec.has_exact_derivatives() {
        return Err(MtwError::Input(
            "fd_consistency_report needs a spec with exact derivatives".into(),
        ));
    }
    if points.is_empty() {
        return Err(MtwError::Input("no sample points given".into()));
    }
    let twin_src = spec.clone();
    let twin = PotentialSpec::black_box(
        move |x: &DVector<f64>| twin_src.eval_potential(x).unwrap_or(f64::NAN),
        DEFAULT_FD_STEP,
    )?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut rows = Vec::with_capacity(points.len());
    for x in points {
        let w = crate::sampling::unit_vector(&mut rng, x.len());
        let grad_dev = (spec.grad(x)? - twin.grad(x)?).amax();
        let hess_dev = (spec.hess(x)? - twin.hess(x)?).amax();
        let hess2_dev =
            (spec.hess_second_directional(x, &w)? - twin.hess_second_directional(x, &w)?).amax();
        rows.push(FdConsistencyRow {
            x: x.clone(),
            grad_dev,
            hess_dev,
            hess2_dev,
        });
    }
    let max = |f: fn(&FdConsistencyRow) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    Ok(FdConsistencyReport {
        max_grad_dev: max(|r| r.grad_dev),
        max_hess_dev: max(|r| r.hess_dev),
        max_hess2_dev: max(|r| r.hess2_dev),
        rows,
    })
}

/// Serializable description of a potential. `matrix` is dense row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialConfig {
    /// One of "zero", "quadratic", "radial".
    pub kind: String,
    /// Quadratic coefficient matrix A, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Radial profile coefficients, constant term first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    /// Optional overall factor eps applied to V.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

impl PotentialConfig {
    pub fn to_spec(&self) -> Result<PotentialSpec> {
        let base = match self.kind.as_str() {
            "zero" => PotentialSpec::Zero,
            "quadratic" => {
                let rows = self.matrix.as_ref().ok_or_else(|| {
                    MtwError::Input("quadratic potential needs a `matrix` field".into())
                })?;
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(MtwError::Input("`matrix` must be square".into()));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                PotentialSpec::quadratic(DMatrix::from_row_slice(n, n, &flat))?
            }
            "radial" => {
                let coeffs = self.coeffs.as_ref().ok_or_else(|| {
                    MtwError::Input("radial potential needs a `coeffs` field".into())
                })?;
                PotentialSpec::radial(coeffs)?
            }
            other => {
                return Err(MtwError::Input(format!(
                    "unknown potential kind `{other}` (expected zero|quadratic|radial)"
                )))
            }
        };
        match self.eps {
            Some(eps) if eps != 1.0 => PotentialSpec::scaled(eps, base),
            _ => Ok(base),
        }
    }
}

impl PotentialSpec {
    pub fn to_config(&self) -> Result<PotentialConfig> {
        match self {
            PotentialSpec::Zero => Ok(PotentialConfig {
                kind: "zero".into(),
                matrix: None,
                coeffs: None,
                eps: None,
            }),
            PotentialSpec::Quadratic { a } => Ok(PotentialConfig {
                kind: "quadratic".into(),
                matrix: Some(
                    (0..a.nrows())
                        .map(|i| a.row(i).iter().copied().collect())
                        .collect(),
                ),
                coeffs: None,
                eps: None,
            }),
            PotentialSpec::Radial { profile } => Ok(PotentialConfig {
                kind: "radial".into(),
                matrix: None,
                coeffs: Some(profile.f.coeffs().to_vec()),
                eps: None,
            }),
            PotentialSpec::BlackBox { .. } => Err(MtwError::Input(
                "black-box potentials have no serializable form".into(),
            )),
            PotentialSpec::Scaled { eps, base } => {
                let mut cfg = base.to_config()?;
                cfg.eps = Some(*eps * cfg.eps.unwrap_or(1.0));
                Ok(cfg)
            }
        }
    }

    pub fn from_config_str(text: &str) -> Result<PotentialSpec> {
        let cfg: PotentialConfig = toml::from_str(text)
            .map_err(|e| MtwError::Input(format!("potential config parse error: {e}")))?;
        cfg.to_spec()
    }

    pub fn to_config_string(&self) -> Result<String> {
        let cfg = self.to_config()?;
        toml::to_string(&cfg).map_err(|e| MtwError::Input(format!("serialize error: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn quartic() -> PotentialSpec {
        // f(z) = z^2, i.e. V(x) = |x|^4 / 4
        PotentialSpec::radial(&[0.0, 0.0, 1.0]).unwrap()
    }

    fn quartic_black_box() -> PotentialSpec {
        PotentialSpec::black_box(
            |x: &DVector<f64>| {
                let z = 0.5 * x.norm_squared();
                z * z
            },
            DEFAULT_FD_STEP,
        )
        .unwrap()
    }

    #[test]
    fn poly_eval_and_deriv() {
        let p = Poly::new(&[1.0, 2.0, 3.0]); // 1 + 2z + 3z^2
        assert_eq!(p.eval(2.0), 17.0);
        let d = p.deriv(); // 2 + 6z
        assert_eq!(d.eval(2.0), 14.0);
        assert_eq!(d.deriv().eval(7.0), 6.0);
        assert_eq!(d.deriv().deriv().eval(7.0), 0.0);
    }

    #[test]
    fn quadratic_rejects_asymmetric_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            PotentialSpec::quadratic(a),
            Err(MtwError::Input(_))
        ));
    }

    #[test]
    fn radial_rejects_empty_coefficients() {
        assert!(PotentialSpec::radial(&[]).is_err());
    }

    #[test]
    fn eval_closed_forms() {
        let zero = PotentialSpec::Zero;
        let x = DVector::from_vec(vec![0.3, -0.7]);
        assert_eq!(zero.eval_potential(&x).unwrap(), 0.0);

        let a = -DMatrix::identity(2, 2);
        let quad = PotentialSpec::quadratic(a).unwrap();
        let ones = DVector::from_vec(vec![1.0, 1.0]);
        assert_abs_diff_eq!(quad.eval_potential(&ones).unwrap(), -1.0, epsilon = 1e-15);

        // |x|^2 = 2 so z = 1 and f(z) = 1
        assert_abs_diff_eq!(quartic().eval_potential(&ones).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn grad_closed_forms() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -4.0]);
        let quad = PotentialSpec::quadratic(a).unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let g = quad.grad(&x).unwrap();
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], -4.0, epsilon = 1e-15);

        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let g = quartic().grad(&e1).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-15); // f'(1/2) = 1
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn black_box_grad_matches_exact() {
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let exact = quartic().grad(&x).unwrap();
        let fd = quartic_black_box().grad(&x).unwrap();
        assert!((exact - fd).amax() < 1e-8);
    }

    #[test]
    fn hess_closed_forms() {
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let h = quartic().hess(&x).unwrap();
        // f'(1/2) I + f''(1/2) x x^T = I + 2 e1 e1^T
        assert_abs_diff_eq!(h[(0, 0)], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h[(1, 1)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn black_box_hess_matches_quadratic() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -4.0]);
        let bb = PotentialSpec::black_box(
            {
                let a = a.clone();
                move |x: &DVector<f64>| 0.5 * x.dot(&(&a * x))
            },
            DEFAULT_FD_STEP,
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.4, -0.9]);
        assert!((bb.hess(&x).unwrap() - a).amax() < 1e-6);
    }

    #[test]
    fn hess_second_directional_quartic_at_origin() {
        let x = DVector::zeros(2);
        let w = DVector::from_vec(vec![1.0, 0.0]);
        let m = quartic().hess_second_directional(&x, &w).unwrap();
        // 2 f'' I + 2 f'' (w w^T + w w^T) at x = 0: diag(6, 2)
        assert_abs_diff_eq!(m[(0, 0)], 6.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m[(1, 1)], 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m[(0, 1)], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn hess_second_directional_matches_difference_of_hessians() {
        // Independent check of the closed form: difference the exact Hessian.
        let spec = quartic();
        let x = DVector::from_vec(vec![0.6, -0.2, 0.3]);
        let w = DVector::from_vec(vec![0.5, 1.0, -0.25]);
        let analytic = spec.hess_second_directional(&x, &w).unwrap();
        let hh = 1e-4;
        let fd = (spec.hess(&(&x + &w * hh)).unwrap() + spec.hess(&(&x - &w * hh)).unwrap()
            - spec.hess(&x).unwrap() * 2.0)
            / (hh * hh);
        assert!((analytic - fd).amax() < 1e-5);
    }

    #[test]
    fn hess_second_directional_black_box_agrees() {
        let x = DVector::from_vec(vec![0.3, -0.1]);
        let w = DVector::from_vec(vec![0.0, 1.0]);
        let exact = quartic().hess_second_directional(&x, &w).unwrap();
        let fd = quartic_black_box().hess_second_directional(&x, &w).unwrap();
        assert!((exact - fd).amax() < 1e-5);
    }

    #[test]
    fn scaled_wrapper_scales_every_derivative() {
        let base = quartic();
        let spec = PotentialSpec::scaled(0.5, base.clone()).unwrap();
        let x = DVector::from_vec(vec![0.9, 0.2]);
        let w = DVector::from_vec(vec![-0.3, 0.8]);
        assert_abs_diff_eq!(
            spec.eval_potential(&x).unwrap(),
            0.5 * base.eval_potential(&x).unwrap(),
            epsilon = 1e-15
        );
        assert!((spec.grad(&x).unwrap() - base.grad(&x).unwrap() * 0.5).amax() < 1e-15);
        assert!((spec.hess(&x).unwrap() - base.hess(&x).unwrap() * 0.5).amax() < 1e-15);
        assert!(
            (spec.hess_second_directional(&x, &w).unwrap()
                - base.hess_second_directional(&x, &w).unwrap() * 0.5)
                .amax()
                < 1e-15
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let quad = PotentialSpec::quadratic(-DMatrix::identity(2, 2)).unwrap();
        let x3 = DVector::zeros(3);
        assert!(matches!(
            quad.eval_potential(&x3),
            Err(MtwError::Dimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn non_finite_black_box_is_reported() {
        let bb = PotentialSpec::black_box(|_x: &DVector<f64>| f64::NAN, 1e-3).unwrap();
        let x = DVector::zeros(2);
        assert!(matches!(
            bb.eval_potential(&x),
            Err(MtwError::NonFinite { .. })
        ));
        assert!(bb.grad(&x).is_err());
    }

    #[test]
    fn fd_consistency_quartic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let points: Vec<DVector<f64>> = (0..10)
            .map(|_| crate::sampling::unit_vector(&mut rng, 2) * 0.8)
            .collect();
        let report = fd_consistency_report(&quartic(), &points).unwrap();
        assert!(
            report.max_grad_dev < 1e-7,
            "gradient deviation {}",
            report.max_grad_dev
        );
        assert!(report.max_hess_dev < 1e-6);
        assert!(report.max_hess2_dev < 1e-4);
        assert_eq!(report.rows.len(), 10);
    }

    #[test]
    fn fd_consistency_zero_potential_is_exact() {
        let points = vec![DVector::zeros(2), DVector::from_vec(vec![1.0, -2.0])];
        let report = fd_consistency_report(&PotentialSpec::Zero, &points).unwrap();
        assert!(report.max_grad_dev <= 1e-12);
        assert!(report.max_hess_dev <= 1e-12);
        assert!(report.max_hess2_dev <= 1e-12);
    }

    #[test]
    fn fd_consistency_rejects_black_box() {
        let points = vec![DVector::zeros(2)];
        assert!(fd_consistency_report(&quartic_black_box(), &points).is_err());
    }

    #[test]
    fn config_round_trip() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.5, -4.0]);
        let spec = PotentialSpec::quadratic(a.clone()).unwrap();
        let text = spec.to_config_string().unwrap();
        let back = PotentialSpec::from_config_str(&text).unwrap();
        match back {
            PotentialSpec::Quadratic { a: b } => assert!((a - b).amax() < 1e-15),
            other => panic!("expected quadratic, got {other:?}"),
        }

        let scaled = PotentialSpec::scaled(1e-3, quartic()).unwrap();
        let text = scaled.to_config_string().unwrap();
        let back = PotentialSpec::from_config_str(&text).unwrap();
        match back {
            PotentialSpec::Scaled { eps, .. } => assert_eq!(eps, 1e-3),
            other => panic!("expected scaled, got {other:?}"),
        }

        assert!(quartic_black_box().to_config_string().is_err());
    }

    proptest! {
        #[test]
        fn hess_is_symmetric(coords in proptest::collection::vec(-2.0f64..2.0, 3),
                             c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, c3 in -2.0f64..2.0) {
            let spec = PotentialSpec::radial(&[0.0, c1, c2, c3]).unwrap();
            let x = DVector::from_vec(coords);
            let h = spec.hess(&x).unwrap();
            prop_assert!((h.clone() - h.transpose()).amax() <= 1e-10);
        }

        #[test]
        fn hess_second_directional_is_even_in_w(
            coords in proptest::collection::vec(-1.5f64..1.5, 2),
            dir in proptest::collection::vec(-1.0f64..1.0, 2),
        ) {
            let spec = PotentialSpec::radial(&[0.0, 0.3, 1.0, 0.2]).unwrap();
            let x = DVector::from_vec(coords);
            let w = DVector::from_vec(dir);
            let plus = spec.hess_second_directional(&x, &w).unwrap();
            let minus = spec.hess_second_directional(&x, &(-&w)).unwrap();
            prop_assert!((plus - minus).amax() <= 1e-9);
        }
    }
}
