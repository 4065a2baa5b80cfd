//! Seeded sampling of phase-space points and directions.
//!
//! All randomness in the library flows through [`ChaCha8Rng`] streams derived
//! from a caller-supplied seed, so scans are reproducible bit-for-bit and can
//! be evaluated in parallel without changing their output.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MtwError, Result};

/// Region of phase space a scan draws (x, v) pairs from.
#[derive(Debug, Clone)]
pub enum PhaseDomain {
    /// Product of per-coordinate intervals for x and v.
    Box {
        x_lo: DVector<f64>,
        x_hi: DVector<f64>,
        v_lo: DVector<f64>,
        v_hi: DVector<f64>,
    },
    /// { (x, v) : |x| + |v| <= radius } with Euclidean norms.
    NormSumBall { dim: usize, radius: f64 },
}

impl PhaseDomain {
    /// [-x_bound, x_bound]^n x [-v_bound, v_bound]^n.
    pub fn symmetric_box(dim: usize, x_bound: f64, v_bound: f64) -> Self {
        let xb = DVector::from_element(dim, x_bound);
        let vb = DVector::from_element(dim, v_bound);
        PhaseDomain::Box {
            x_lo: -xb.clone(),
            x_hi: xb,
            v_lo: -vb.clone(),
            v_hi: vb,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PhaseDomain::Box { x_lo, .. } => x_lo.len(),
            PhaseDomain::NormSumBall { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhaseDomain::Box {
                x_lo,
                x_hi,
                v_lo,
                v_hi,
            } => {
                let n = x_lo.len();
                if n == 0 {
                    return Err(MtwError::Input("domain dimension must be positive".into()));
                }
                if x_hi.len() != n || v_lo.len() != n || v_hi.len() != n {
                    return Err(MtwError::Input(
                        "domain bound vectors must share one dimension".into(),
                    ));
                }
                for i in 0..n {
                    if !(x_lo[i] <= x_hi[i]) || !(v_lo[i] <= v_hi[i]) {
                        return Err(MtwError::Input(format!(
                            "domain bounds must satisfy lo <= hi (coordinate {i})"
                        )));
                    }
                }
                Ok(())
            }
            PhaseDomain::NormSumBall { dim, radius } => {
                if *dim == 0 {
                    return Err(MtwError::Input("domain dimension must be positive".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(MtwError::Input(format!(
                        "norm-sum ball radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, x: &DVector<f64>, v: &DVector<f64>) -> bool {
        match self {
            PhaseDomain::Box {
                x_lo,
                x_hi,
                v_lo,
                v_hi,
            } => {
                (0..x_lo.len()).all(|i| {
                    x[i] >= x_lo[i] && x[i] <= x_hi[i] && v[i] >= v_lo[i] && v[i] <= v_hi[i]
                })
            }
            PhaseDomain::NormSumBall { radius, .. } => x.norm() + v.norm() <= *radius,
        }
    }

    /// Draws one (x, v) pair. The norm-sum ball rejects from its bounding box.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (DVector<f64>, DVector<f64>) {
        match self {
            PhaseDomain::Box {
                x_lo,
                x_hi,
                v_lo,
                v_hi,
            } => {
                let draw = |lo: &DVector<f64>, hi: &DVector<f64>, rng: &mut ChaCha8Rng| {
                    DVector::from_iterator(
                        lo.len(),
                        lo.iter().zip(hi.iter()).map(|(&a, &b)| {
                            if a == b {
                                a
                            } else {
                                rng.gen_range(a..b)
                            }
                        }),
                    )
                };
                let x = draw(x_lo, x_hi, rng);
                let v = draw(v_lo, v_hi, rng);
                (x, v)
            }
            PhaseDomain::NormSumBall { dim, radius } => loop {
                let x = DVector::from_iterator(
                    *dim,
                    (0..*dim).map(|_| rng.gen_range(-radius..*radius)),
                );
                let v = DVector::from_iterator(
                    *dim,
                    (0..*dim).map(|_| rng.gen_range(-radius..*radius)),
                );
                if x.norm() + v.norm() <= *radius {
                    return (x, v);
                }
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            PhaseDomain::Box {
                x_lo,
                x_hi,
                v_lo,
                v_hi,
            } => {
                let iv = |lo: &DVector<f64>, hi: &DVector<f64>| {
                    lo.iter()
                        .zip(hi.iter())
                        .map(|(a, b)| format!("[{a}, {b}]"))
                        .collect::<Vec<_>>()
                        .join("x")
                };
                format!("box x in {}, v in {}", iv(x_lo, x_hi), iv(v_lo, v_hi))
            }
            PhaseDomain::NormSumBall { dim, radius } => {
                format!("|x| + |v| <= {radius} (dim {dim})")
            }
        }
    }
}

/// RNG for sample `index` of a run with the given seed. Separate streams per
/// sample keep parallel scans deterministic regardless of thread count.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw from [0, 1).
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 bounded away from zero so the log stays finite.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniform draw from the unit sphere.
pub fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let g = DVector::from_iterator(dim, (0..dim).map(|_| gaussian(rng)));
        let norm = g.norm();
        if norm > 1e-6 {
            return g / norm;
        }
    }
}

/// Unit vector orthogonal to the unit vector `u` (Gram-Schmidt on a fresh
/// sphere draw, retried while the draw is nearly parallel to `u`).
pub fn orthogonal_unit(rng: &mut ChaCha8Rng, u: &DVector<f64>) -> DVector<f64> {
    loop {
        let w = unit_vector(rng, u.len());
        let proj = &w - u * w.dot(u);
        let norm = proj.norm();
        if norm > 1e-6 {
            return proj / norm;
        }
    }
}
