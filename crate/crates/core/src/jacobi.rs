//! Matrix Jacobi equation along least-action paths and the Jacobi map.
//!
//! Along a path x(t) the linearized flow solves Y'' + Hess V(x(t)) Y = 0.
//! The fundamental pair M (M(0)=I, M'(0)=0) and N (N(0)=0, N'(0)=I) spans all
//! Jacobi fields as J(t) = M(t)J(0) + N(t)J'(0); N doubles as the Jacobian of
//! the endpoint map with respect to the initial velocity, which is why the
//! shooting module borrows it as its Newton matrix.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{
    self, IntegratorConfig, Method, PhasePoint, SecondOrderSystem, Trajectory,
};
use crate::error::{MtwError, Result};
use crate::potentials::PotentialSpec;

/// Per-node tolerance on |M^T N' - M'^T N - I| that tests assert.
pub const SYMPLECTIC_NODE_TOL: f64 = 1e-8;
/// Hard failure threshold for the same defect.
pub const SYMPLECTIC_ERROR_TOL: f64 = 1e-6;
/// N(T) counts as singular when sigma_min(N(T)) <= CONJ_TOL.
pub const CONJ_TOL: f64 = 1e-8;
/// Post-solve residual bound: |N(T)p + M(T)u| <= JACOBI_RESIDUAL_TOL * |u|.
pub const JACOBI_RESIDUAL_TOL: f64 = 1e-9;

/// Fundamental solutions of Y'' + Hess V(x(t)) Y = 0 on a trajectory's grid.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub times: Vec<f64>,
    pub m: Vec<DMatrix<f64>>,
    pub m_dot: Vec<DMatrix<f64>>,
    pub n: Vec<DMatrix<f64>>,
    pub n_dot: Vec<DMatrix<f64>>,
}

impl FundamentalSolution {
    pub fn dim(&self) -> usize {
        self.m[0].nrows()
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("fundamental solution has nodes")
    }

    pub fn final_m(&self) -> &DMatrix<f64> {
        self.m.last().expect("fundamental solution has nodes")
    }

    pub fn final_n(&self) -> &DMatrix<f64> {
        self.n.last().expect("fundamental solution has nodes")
    }

    /// max over nodes of |M^T N' - M'^T N - I| (Frobenius).
    pub fn symplectic_defect(&self) -> f64 {
        let id = DMatrix::identity(self.dim(), self.dim());
        let mut worst = 0.0f64;
        for k in 0..self.times.len() {
            let w = self.m[k].transpose() * &self.n_dot[k]
                - self.m_dot[k].transpose() * &self.n[k]
                - &id;
            worst = worst.max(w.norm());
        }
        worst
    }
}

/// Jacobi map value with the conditioning of the solve that produced it.
#[derive(Debug, Clone)]
pub struct JacobiMap {
    pub value: DVector<f64>,
    /// sigma_max / sigma_min of N(T).
    pub condition_number: f64,
    pub residual: f64,
}

/// Trajectory and fundamental solutions as one second-order system:
/// q = [x | vec M | vec N], q'' = [-grad V(x) | -H(x) M | -H(x) N].
struct VariationalSystem<'a> {
    spec: &'a PotentialSpec,
    n: usize,
}

impl SecondOrderSystem for VariationalSystem<'_> {
    fn dof(&self) -> usize {
        self.n + 2 * self.n * self.n
    }

    fn accel(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n;
        let nn = n * n;
        let x = DVector::from_column_slice(&q[0..n]);
        let g = self.spec.grad(&x)?;
        let h = self.spec.hess(&x)?;
        for i in 0..n {
            out[i] = -g[i];
        }
        let m = DMatrix::from_column_slice(n, n, &q[n..n + nn]);
        let hm = -&h * m;
        out[n..n + nn].copy_from_slice(hm.as_slice());
        let w = DMatrix::from_column_slice(n, n, &q[n + nn..n + 2 * nn]);
        let hw = -&h * w;
        out[n + nn..n + 2 * nn].copy_from_slice(hw.as_slice());
        Ok(())
    }
}

fn run_coupled(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    t_final: f64,
    k_steps: usize,
    method: Method,
    energy_tol: f64,
) -> Result<(Trajectory, FundamentalSolution)> {
    let n = p0.dim();
    spec.check_dim_len(n)?;
    let nn = n * n;
    let sys = VariationalSystem { spec, n };

    let mut q0 = vec![0.0; n + 2 * nn];
    let mut v0 = vec![0.0; n + 2 * nn];
    q0[0..n].copy_from_slice(p0.x.as_slice());
    v0[0..n].copy_from_slice(p0.v.as_slice());
    for i in 0..n {
        q0[n + i * n + i] = 1.0; // M(0) = I
        v0[n + nn + i * n + i] = 1.0; // N'(0) = I
    }

    let mut times = Vec::with_capacity(k_steps + 1);
    let mut states = Vec::with_capacity(k_steps + 1);
    let mut energies = Vec::with_capacity(k_steps + 1);
    let mut m = Vec::with_capacity(k_steps + 1);
    let mut m_dot = Vec::with_capacity(k_steps + 1);
    let mut n_mat = Vec::with_capacity(k_steps + 1);
    let mut n_dot = Vec::with_capacity(k_steps + 1);

    dynamics::integrate(&sys, &q0, &v0, t_final, k_steps, method, |_k, t, q, p| {
        let state = PhasePoint {
            x: DVector::from_column_slice(&q[0..n]),
            v: DVector::from_column_slice(&p[0..n]),
        };
        energies.push(dynamics::energy(spec, &state)?);
        times.push(t);
        states.push(state);
        m.push(DMatrix::from_column_slice(n, n, &q[n..n + nn]));
        m_dot.push(DMatrix::from_column_slice(n, n, &p[n..n + nn]));
        n_mat.push(DMatrix::from_column_slice(n, n, &q[n + nn..n + 2 * nn]));
        n_dot.push(DMatrix::from_column_slice(n, n, &p[n + nn..n + 2 * nn]));
        Ok(())
    })?;

    let traj = Trajectory {
        times: times.clone(),
        states,
        energies,
        method,
    };
    let tol = energy_tol * (1.0 + traj.energies[0].abs());
    let drift = traj.energy_drift();
    if drift > tol {
        return Err(MtwError::EnergyDrift { drift, tol });
    }

    let fund = FundamentalSolution {
        times,
        m,
        m_dot,
        n: n_mat,
        n_dot,
    };
    for k in 0..fund.times.len() {
        let finite = fund.m[k].iter().all(|a| a.is_finite())
            && fund.n[k].iter().all(|a| a.is_finite());
        if !finite {
            return Err(MtwError::NonFinite {
                context: format!("fundamental solution at t = {}", fund.times[k]),
            });
        }
    }
    let defect = fund.symplectic_defect();
    if defect > SYMPLECTIC_ERROR_TOL {
        return Err(MtwError::SymplecticDefect {
            defect,
            tol: SYMPLECTIC_ERROR_TOL,
        });
    }
    Ok((traj, fund))
}

/// Integrates trajectory and fundamental solutions together, so Hess V is
/// evaluated at the integrator's own stage points.
pub fn flow_with_fundamental(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, FundamentalSolution)> {
    cfg.validate()?;
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(MtwError::Input(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    run_coupled(
        spec,
        p0,
        t_final,
        cfg.step_count(t_final),
        cfg.method,
        cfg.energy_tol,
    )
}

/// Fundamental solutions on `traj`'s grid, re-integrated from its initial
/// state with the method that produced it.
pub fn propagate_fundamental(spec: &PotentialSpec, traj: &Trajectory) -> Result<FundamentalSolution> {
    let k = traj.times.len().saturating_sub(1);
    if k == 0 {
        return Err(MtwError::Input("trajectory has no steps".into()));
    }
    let (_, fund) = run_coupled(
        spec,
        traj.initial(),
        traj.t_final(),
        k,
        traj.method,
        f64::INFINITY, // energy was already checked when traj was produced
    )?;
    Ok(fund)
}

/// Solves N p = -M u with a rank-revealing SVD; shared by jacobi_map and the
/// curvature module, which reads M, N off its own flows.
pub fn jacobi_from_fundamental(
    m_t: &DMatrix<f64>,
    n_t: &DMatrix<f64>,
    u: &DVector<f64>,
    t_label: f64,
) -> Result<JacobiMap> {
    let svd = n_t.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    if !(sigma_max.is_finite() && sigma_min.is_finite()) {
        return Err(MtwError::NonFinite {
            context: "singular values of N(T)".into(),
        });
    }
    if sigma_min <= CONJ_TOL {
        return Err(MtwError::ConjugatePoint {
            t: t_label,
            ratio: if sigma_max > 0.0 { sigma_min / sigma_max } else { 0.0 },
        });
    }
    let rhs = -(m_t * u);
    let p = svd
        .solve(&rhs, 0.0)
        .map_err(|e| MtwError::Input(format!("jacobi solve failed: {e}")))?;
    let p = DVector::from_column_slice(p.as_slice());
    let residual = (n_t * &p + m_t * u).norm();
    if residual > JACOBI_RESIDUAL_TOL * u.norm() {
        return Err(MtwError::UndefinedCurvature(format!(
            "jacobi solve residual {residual:.3e} exceeds {JACOBI_RESIDUAL_TOL:.1e} * |u|"
        )));
    }
    Ok(JacobiMap {
        value: p,
        condition_number: sigma_max / sigma_min,
        residual,
    })
}

/// J'(0) of the Jacobi field with J(0) = u, J(T) = 0 along the least-action
/// path from (x, v): solves N(T) p = -M(T) u.
pub fn jacobi_map(
    spec: &PotentialSpec,
    x: &DVector<f64>,
    v: &DVector<f64>,
    u: &DVector<f64>,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<JacobiMap> {
    let p0 = PhasePoint::new(x.clone(), v.clone())?;
    if u.len() != x.len() {
        return Err(MtwError::Dimension {
            expected: x.len(),
            got: u.len(),
        });
    }
    if u.iter().any(|c| !c.is_finite()) {
        return Err(MtwError::NonFinite {
            context: "jacobi map direction u".into(),
        });
    }
    let (_, fund) = flow_with_fundamental(spec, &p0, t_final, cfg)?;
    jacobi_from_fundamental(fund.final_m(), fund.final_n(), u, t_final)
}
