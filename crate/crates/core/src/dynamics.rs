//! Trajectory integration for the mechanical system x'' = -grad V(x).
//!
//! Two fixed-step integrators are provided: classical RK4 (default) and
//! leapfrog / velocity Verlet for long-time energy behavior. Every returned
//! trajectory is checked against its energy budget; a drift beyond the
//! configured tolerance is an integration-quality error, not a warning.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{MtwError, Result};
use crate::potentials::PotentialSpec;

/// Fixed-step integration method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Leapfrog,
}

/// Integration controls.
///
/// `steps` counts steps per unit time; a flow over [0, T] uses
/// ceil(steps * T) steps (at least 16, rounded up to even so composite
/// Simpson applies to the node grid). `energy_tol` is relative: the accepted
/// drift is `energy_tol * (1 + |E0|)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub steps: usize,
    pub method: Method,
    pub energy_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            steps: 256,
            method: Method::Rk4,
            energy_tol: 1e-7,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 16 {
            return Err(MtwError::Input(format!(
                "integrator needs at least 16 steps per unit time, got {}",
                self.steps
            )));
        }
        if !(self.energy_tol.is_finite() && self.energy_tol > 0.0) {
            return Err(MtwError::Input(format!(
                "energy_tol must be positive, got {}",
                self.energy_tol
            )));
        }
        Ok(())
    }

    /// Number of steps for a flow over [0, t_final]: even and at least 16.
    pub fn step_count(&self, t_final: f64) -> usize {
        let raw = (self.steps as f64 * t_final).ceil() as usize;
        let k = raw.max(self.steps.min(16)).max(16);
        k + k % 2
    }
}

/// A point (x, v) of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
}

impl PhasePoint {
    pub fn new(x: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(MtwError::Dimension {
                expected: x.len(),
                got: v.len(),
            });
        }
        if x.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(MtwError::Input("phase point must be finite".into()));
        }
        Ok(PhasePoint { x, v })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Uniform-grid trajectory with per-node energies E = |v|^2/2 + V(x).
/// Records the integrator that produced it so variational re-propagation can
/// use the identical method and grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub energies: Vec<f64>,
    pub method: Method,
}

impl Trajectory {
    pub fn initial(&self) -> &PhasePoint {
        &self.states[0]
    }

    pub fn final_state(&self) -> &PhasePoint {
        self.states.last().expect("trajectory has nodes")
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("trajectory has nodes")
    }

    /// max_k |E_k - E_0| over the stored energies.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn energy(spec: &PotentialSpec, p: &PhasePoint) -> Result<f64> {
    Ok(0.5 * p.v.norm_squared() + spec.eval_potential(&p.x)?)
}

/// Systems of the form q'' = a(q); both integrators only ever see this shape.
pub(crate) trait SecondOrderSystem {
    fn dof(&self) -> usize;
    fn accel(&self, q: &[f64], out: &mut [f64]) -> Result<()>;
}

struct PhaseSystem<'a> {
    spec: &'a PotentialSpec,
    n: usize,
}

impl SecondOrderSystem for PhaseSystem<'_> {
    fn dof(&self) -> usize {
        self.n
    }

    fn accel(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
        let x = DVector::from_column_slice(q);
        let g = self.spec.grad(&x)?;
        for (o, gi) in out.iter_mut().zip(g.iter()) {
            *o = -gi;
        }
        Ok(())
    }
}

/// Fixed-step driver shared by the plain flow and the variational flow.
/// Calls `on_node(k, t_k, q, p)` for k = 0..=k_steps.
pub(crate) fn integrate<S: SecondOrderSystem>(
    sys: &S,
    q0: &[f64],
    p0: &[f64],
    t_final: f64,
    k_steps: usize,
    method: Method,
    mut on_node: impl FnMut(usize, f64, &[f64], &[f64]) -> Result<()>,
) -> Result<()> {
    let d = sys.dof();
    debug_assert_eq!(q0.len(), d);
    debug_assert_eq!(p0.len(), d);
    let dt = t_final / k_steps as f64;
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    on_node(0, 0.0, &q, &p)?;

    match method {
        Method::Rk4 => {
            let mut a1 = vec![0.0; d];
            let mut a2 = vec![0.0; d];
            let mut a3 = vec![0.0; d];
            let mut a4 = vec![0.0; d];
            let mut qs = vec![0.0; d];
            for k in 0..k_steps {
                // Stage accelerations for q' = p, p' = a(q).
                sys.accel(&q, &mut a1)?;
                for i in 0..d {
                    qs[i] = q[i] + 0.5 * dt * p[i];
                }
                sys.accel(&qs, &mut a2)?;
                for i in 0..d {
                    qs[i] = q[i] + 0.5 * dt * (p[i] + 0.5 * dt * a1[i]);
                }
                sys.accel(&qs, &mut a3)?;
                for i in 0..d {
                    qs[i] = q[i] + dt * (p[i] + 0.5 * dt * a2[i]);
                }
                sys.accel(&qs, &mut a4)?;
                for i in 0..d {
                    let k1q = p[i];
                    let k2q = p[i] + 0.5 * dt * a1[i];
                    let k3q = p[i] + 0.5 * dt * a2[i];
                    let k4q = p[i] + dt * a3[i];
                    q[i] += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
                    p[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
                }
                on_node(k + 1, (k + 1) as f64 * dt, &q, &p)?;
            }
        }
        Method::Leapfrog => {
            let mut a = vec![0.0; d];
            sys.accel(&q, &mut a)?;
            for k in 0..k_steps {
                for i in 0..d {
                    p[i] += 0.5 * dt * a[i];
                    q[i] += dt * p[i];
                }
                sys.accel(&q, &mut a)?;
                for i in 0..d {
                    p[i] += 0.5 * dt * a[i];
                }
                on_node(k + 1, (k + 1) as f64 * dt, &q, &p)?;
            }
        }
    }
    Ok(())
}

fn check_time(t_final: f64) -> Result<()> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(MtwError::Input(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    Ok(())
}

/// Integrates the trajectory of (x0, v0) over [0, t_final].
pub fn flow(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_time(t_final)?;
    let k_steps = cfg.step_count(t_final);
    let n = p0.dim();
    let sys = PhaseSystem { spec, n };

    let mut times = Vec::with_capacity(k_steps + 1);
    let mut states = Vec::with_capacity(k_steps + 1);
    let mut energies = Vec::with_capacity(k_steps + 1);
    integrate(
        &sys,
        p0.x.as_slice(),
        p0.v.as_slice(),
        t_final,
        k_steps,
        cfg.method,
        |_k, t, q, p| {
            let state = PhasePoint {
                x: DVector::from_column_slice(q),
                v: DVector::from_column_slice(p),
            };
            energies.push(energy(spec, &state)?);
            times.push(t);
            states.push(state);
            Ok(())
        },
    )?;

    let traj = Trajectory {
        times,
        states,
        energies,
        method: cfg.method,
    };
    let tol = cfg.energy_tol * (1.0 + traj.energies[0].abs());
    let drift = traj.energy_drift();
    if drift > tol {
        return Err(MtwError::EnergyDrift { drift, tol });
    }
    Ok(traj)
}

/// Action integral of the Lagrangian L = |v|^2/2 - V(x) along a trajectory,
/// by composite Simpson on the trajectory's own grid.
pub fn action(spec: &PotentialSpec, traj: &Trajectory) -> Result<f64> {
    let k = traj.times.len() - 1;
    if k < 2 || k % 2 != 0 {
        return Err(MtwError::Input(format!(
            "action needs an even number of intervals >= 2, got {k}"
        )));
    }
    let h = traj.t_final() / k as f64;
    for (i, &t) in traj.times.iter().enumerate() {
        if (t - i as f64 * h).abs() > 1e-12 * (1.0 + traj.t_final()) {
            return Err(MtwError::Input("action needs a uniform time grid".into()));
        }
    }
    let lagrangian = |p: &PhasePoint| -> Result<f64> {
        Ok(0.5 * p.v.norm_squared() - spec.eval_potential(&p.x)?)
    };
    // Kahan summation: the stencil weights are exact, keep the sum tight too.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |term: f64| {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    add(lagrangian(&traj.states[0])?);
    add(lagrangian(traj.final_state())?);
    for (i, state) in traj.states.iter().enumerate().take(k).skip(1) {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        add(weight * lagrangian(state)?);
    }
    Ok(sum * h / 3.0)
}

/// Recomputes energies from the stored states and returns max |E(t) - E(0)|.
pub fn energy_drift(spec: &PotentialSpec, traj: &Trajectory) -> Result<f64> {
    let e0 = energy(spec, &traj.states[0])?;
    let mut worst = 0.0f64;
    for state in &traj.states {
        worst = worst.max((energy(spec, state)? - e0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn harmonic(n: usize) -> PotentialSpec {
        PotentialSpec::quadratic(-DMatrix::identity(n, n)).unwrap()
    }

    fn attractive(n: usize) -> PotentialSpec {
        PotentialSpec::quadratic(DMatrix::identity(n, n)).unwrap()
    }

    fn point(x: &[f64], v: &[f64]) -> PhasePoint {
        PhasePoint::new(DVector::from_row_slice(x), DVector::from_row_slice(v)).unwrap()
    }

    #[test]
    fn zero_potential_moves_in_a_straight_line() {
        let traj = flow(
            &PotentialSpec::Zero,
            &point(&[0.0, 0.0], &[1.0, 0.0]),
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let end = traj.final_state();
        assert!((end.x[0] - 1.0).abs() < 1e-12);
        assert!(end.x[1].abs() < 1e-12);
        assert!((end.v[0] - 1.0).abs() < 1e-12);
        assert!(energy_drift(&PotentialSpec::Zero, &traj).unwrap() <= 1e-13);
    }

    #[test]
    fn repulsive_oscillator_endpoint_matches_cosh() {
        let traj = flow(
            &harmonic(1),
            &point(&[1.0], &[0.0]),
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(traj.final_state().x[0], 1.0f64.cosh(), epsilon = 1e-9);
    }

    #[test]
    fn attractive_oscillator_is_periodic() {
        let traj = flow(
            &attractive(1),
            &point(&[1.0], &[0.0]),
            std::f64::consts::PI,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(traj.final_state().x[0], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn action_of_free_straight_line() {
        let traj = flow(
            &PotentialSpec::Zero,
            &point(&[0.0, 0.0], &[1.0, 0.0]),
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(action(&PotentialSpec::Zero, &traj).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn action_matches_oscillator_cost_formula() {
        // Path from x = 1 to y = 0 in unit time: v0 = -cosh(1)/sinh(1), and
        // the minimal action is cosh(1) / (2 sinh(1)).
        let v0 = -1.0f64.cosh() / 1.0f64.sinh();
        let spec = harmonic(1);
        let traj = flow(&spec, &point(&[1.0], &[v0]), 1.0, &IntegratorConfig::default()).unwrap();
        assert!(traj.final_state().x[0].abs() < 1e-9);
        let expected = 1.0f64.cosh() / (2.0 * 1.0f64.sinh());
        assert_abs_diff_eq!(action(&spec, &traj).unwrap(), expected, epsilon = 1e-7);
    }

    #[test]
    fn energy_is_conserved_and_tightens_with_resolution() {
        let spec = harmonic(2);
        let p0 = point(&[1.0, -0.5], &[0.25, 0.5]);
        let fine = flow(&spec, &p0, 1.0, &IntegratorConfig::default()).unwrap();
        assert!(energy_drift(&spec, &fine).unwrap() < 1e-9);

        let coarse_cfg = IntegratorConfig {
            steps: 16,
            energy_tol: 1e-3,
            ..IntegratorConfig::default()
        };
        let coarse = flow(&spec, &p0, 1.0, &coarse_cfg).unwrap();
        assert!(
            energy_drift(&spec, &coarse).unwrap() > energy_drift(&spec, &fine).unwrap(),
            "coarse grid should drift more"
        );
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let exact = 1.0f64.cosh();
        let err = |steps: usize| {
            let cfg = IntegratorConfig {
                steps,
                ..IntegratorConfig::default()
            };
            let traj = flow(&harmonic(1), &point(&[1.0], &[0.0]), 1.0, &cfg).unwrap();
            (traj.final_state().x[0] - exact).abs()
        };
        let ratio = err(32) / err(64);
        assert!(
            (8.0..=32.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio}"
        );
    }

    #[test]
    fn leapfrog_converges_at_second_order_with_bounded_energy() {
        let exact = 1.0f64.cosh();
        let err = |steps: usize| {
            let cfg = IntegratorConfig {
                steps,
                method: Method::Leapfrog,
                energy_tol: 1e-3,
            };
            let traj = flow(&harmonic(1), &point(&[1.0], &[0.0]), 1.0, &cfg).unwrap();
            (traj.final_state().x[0] - exact).abs()
        };
        let ratio = err(64) / err(128);
        assert!(
            (3.0..=6.0).contains(&ratio),
            "expected ~4x error reduction, got {ratio}"
        );

        let cfg = IntegratorConfig {
            steps: 256,
            method: Method::Leapfrog,
            energy_tol: 1e-3,
        };
        let traj = flow(&attractive(1), &point(&[1.0], &[0.0]), 20.0, &cfg).unwrap();
        assert!(traj.energy_drift() < 1e-4, "leapfrog energy should stay bounded");
    }

    #[test]
    fn flow_is_time_reversible() {
        let spec = harmonic(2);
        let p0 = point(&[0.3, -0.8], &[0.9, 0.1]);
        let fwd = flow(&spec, &p0, 1.0, &IntegratorConfig::default()).unwrap();
        let end = fwd.final_state();
        let back = flow(
            &spec,
            &PhasePoint::new(end.x.clone(), -end.v.clone()).unwrap(),
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let rec = back.final_state();
        assert!((&rec.x - &p0.x).amax() < 1e-8);
        assert!((&rec.v + &p0.v).amax() < 1e-8);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let cfg = IntegratorConfig {
            steps: 8,
            ..IntegratorConfig::default()
        };
        assert!(flow(&PotentialSpec::Zero, &point(&[0.0], &[1.0]), 1.0, &cfg).is_err());
        assert!(flow(
            &PotentialSpec::Zero,
            &point(&[0.0], &[1.0]),
            0.0,
            &IntegratorConfig::default()
        )
        .is_err());
    }

    #[test]
    fn exceeding_the_energy_budget_is_an_error() {
        let cfg = IntegratorConfig {
            steps: 16,
            energy_tol: 1e-16,
            ..IntegratorConfig::default()
        };
        match flow(&harmonic(1), &point(&[1.0], &[0.0]), 1.0, &cfg) {
            Err(MtwError::EnergyDrift { drift, tol }) => {
                assert!(drift > tol);
            }
            other => panic!("expected energy drift error, got {other:?}"),
        }
    }

    #[test]
    fn step_count_scales_with_time() {
        let cfg = IntegratorConfig::default();
        assert_eq!(cfg.step_count(1.0), 256);
        assert_eq!(cfg.step_count(4.0), 1024);
        let k = cfg.step_count(std::f64::consts::PI);
        assert!(k % 2 == 0 && k >= 804);
        assert!(cfg.step_count(0.001) >= 16);
    }
}
