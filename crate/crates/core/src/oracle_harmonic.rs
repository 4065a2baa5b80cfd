//! Closed-form harmonic-oscillator flows, shooting and costs.
//!
//! Potentials V(x) = 1/2 <A x, x> with A <= 0 decouple in the eigenbasis of A
//! into scalar oscillators x'' = lambda^2 x, all of which integrate in closed
//! form. Every quantity the numeric modules compute has an exact counterpart
//! here, which makes this module the reference the rest of the crate is
//! tested against.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::PhasePoint;
use crate::error::{MtwError, Result};
use crate::potentials::PotentialSpec;
use crate::sampling::{self, sample_rng};

/// Below this value of lambda * T the sinh/cosh expressions are replaced by
/// their free-motion limits to avoid cancellation.
pub const FREE_SWITCH: f64 = 1e-6;

const BASIS_ORTHO_TOL: f64 = 1e-12;

/// A <= 0 quadratic potential in diagonalized form: A = -B diag(lambda_i^2) B^T
/// where the columns of `basis` B are the eigenvector directions.
#[derive(Debug, Clone)]
pub struct HarmonicSpec {
    lambdas: DVector<f64>,
    basis: DMatrix<f64>,
}

impl HarmonicSpec {
    pub fn new(lambdas: DVector<f64>, basis: DMatrix<f64>) -> Result<Self> {
        let n = lambdas.len();
        if n == 0 {
            return Err(MtwError::Input("harmonic spec needs dimension >= 1".into()));
        }
        if basis.nrows() != n || basis.ncols() != n {
            return Err(MtwError::Dimension {
                expected: n,
                got: basis.nrows().max(basis.ncols()),
            });
        }
        for l in lambdas.iter() {
            if !(l.is_finite() && *l >= 0.0) {
                return Err(MtwError::Input(format!(
                    "harmonic rates must be finite and nonnegative, got {l}"
                )));
            }
        }
        let defect = (basis.transpose() * &basis - DMatrix::identity(n, n)).norm();
        if !defect.is_finite() || defect > BASIS_ORTHO_TOL {
            return Err(MtwError::Input(format!(
                "basis is not orthogonal: |B^T B - I| = {defect:.3e}"
            )));
        }
        Ok(Self { lambdas, basis })
    }

    /// Eigenbasis = standard basis.
    pub fn axis_aligned(lambdas: DVector<f64>) -> Result<Self> {
        let n = lambdas.len();
        Self::new(lambdas, DMatrix::identity(n, n))
    }

    /// Seeded random spec: rates in [0.5, 2) and a random orthogonal basis.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        let mut rng = sample_rng(seed, 0);
        let lambdas = DVector::from_fn(dim, |_, _| 0.5 + 1.5 * sampling::uniform(&mut rng));
        let mut basis = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            // Gram-Schmidt on Gaussian columns.
            let mut col = sampling::unit_vector(&mut rng, dim);
            for k in 0..j {
                let prev = basis.column(k);
                let proj = col.dot(&prev.clone_owned());
                col -= proj * prev;
            }
            let norm = col.norm();
            if norm < 1e-6 {
                return Err(MtwError::Input("degenerate random basis draw".into()));
            }
            basis.set_column(j, &(col / norm));
        }
        Self::new(lambdas, basis)
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &DVector<f64> {
        &self.lambdas
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// A = -B diag(lambda_i^2) B^T in user coordinates.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = -self.lambdas[i] * self.lambdas[i];
        }
        let a = &self.basis * d * self.basis.transpose();
        crate::potentials::symmetrize(a)
    }

    /// The same potential as a generic spec for the numeric modules.
    pub fn to_potential(&self) -> Result<PotentialSpec> {
        PotentialSpec::quadratic(self.matrix())
    }

    fn to_eigen(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * x
    }

    fn from_eigen(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * x
    }

    fn check_vec(&self, name: &str, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(MtwError::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(MtwError::NonFinite {
                context: format!("harmonic input {name}"),
            });
        }
        Ok(())
    }
}

fn check_horizon(t_final: f64) -> Result<()> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(MtwError::Input(format!(
            "time horizon must be positive, got {t_final}"
        )));
    }
    Ok(())
}

/// Exact flow of x'' = lambda^2 x componentwise in the eigenbasis:
/// x(t) = x cosh(lt) + (v/l) sinh(lt), free components move in straight lines.
pub fn ho_flow(h: &HarmonicSpec, t: f64, x: &DVector<f64>, v: &DVector<f64>) -> Result<PhasePoint> {
    h.check_vec("x", x)?;
    h.check_vec("v", v)?;
    if !t.is_finite() {
        return Err(MtwError::NonFinite {
            context: "harmonic flow time".into(),
        });
    }
    let xe = h.to_eigen(x);
    let ve = h.to_eigen(v);
    let n = h.dim();
    let mut xo = DVector::zeros(n);
    let mut vo = DVector::zeros(n);
    for i in 0..n {
        let l = h.lambdas[i];
        if l * t.abs() < FREE_SWITCH {
            xo[i] = xe[i] + t * ve[i];
            vo[i] = ve[i];
        } else {
            let (s, c) = ((l * t).sinh(), (l * t).cosh());
            xo[i] = xe[i] * c + ve[i] / l * s;
            vo[i] = xe[i] * l * s + ve[i] * c;
        }
    }
    PhasePoint::new(h.from_eigen(&xo), h.from_eigen(&vo))
}

/// Exact transport cost: sum over eigencomponents of
/// lambda/(2 sinh(lambda T)) [(x^2 + y^2) cosh(lambda T) - 2 x y],
/// with free components contributing (x - y)^2 / 2T.
pub fn ho_cost(h: &HarmonicSpec, t_final: f64, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    h.check_vec("x", x)?;
    h.check_vec("y", y)?;
    check_horizon(t_final)?;
    let xe = h.to_eigen(x);
    let ye = h.to_eigen(y);
    let mut total = 0.0;
    for i in 0..h.dim() {
        let l = h.lambdas[i];
        total += if l * t_final < FREE_SWITCH {
            let d = xe[i] - ye[i];
            d * d / (2.0 * t_final)
        } else {
            let lt = l * t_final;
            l / (2.0 * lt.sinh()) * ((xe[i] * xe[i] + ye[i] * ye[i]) * lt.cosh() - 2.0 * xe[i] * ye[i])
        };
    }
    Ok(total)
}

/// Exact boundary-value solve: the unique v with ho_flow(h, T, x, v).x = y.
pub fn ho_shoot(
    h: &HarmonicSpec,
    x: &DVector<f64>,
    y: &DVector<f64>,
    t_final: f64,
) -> Result<DVector<f64>> {
    h.check_vec("x", x)?;
    h.check_vec("y", y)?;
    check_horizon(t_final)?;
    let xe = h.to_eigen(x);
    let ye = h.to_eigen(y);
    let n = h.dim();
    let mut ve = DVector::zeros(n);
    for i in 0..n {
        let l = h.lambdas[i];
        ve[i] = if l * t_final < FREE_SWITCH {
            (ye[i] - xe[i]) / t_final
        } else {
            let lt = l * t_final;
            l * (ye[i] - xe[i] * lt.cosh()) / lt.sinh()
        };
    }
    Ok(h.from_eigen(&ve))
}
