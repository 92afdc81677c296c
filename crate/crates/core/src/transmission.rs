//! Actuation transmission matrix mapping motor torques `(tau_p, tau_r)` to
//! body-level generalized torques `(M_p, M_r)`.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::geometry::{contact_angle, MechanismParams};

/// Determinants below this magnitude are treated as singular.
pub const SINGULAR_DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionMatrix {
    pub kpp: f64,
    /// Roll-to-propulsion leakage.
    pub kpr: f64,
    /// Propulsion-to-roll leakage.
    pub krp: f64,
    pub krr: f64,
    /// Contact angle the gains were built from [rad].
    pub alpha: f64,
    /// Propulsion gear gain.
    pub gp: f64,
    /// Number of driven omni wheels.
    pub wheels: u32,
    /// Rolling lever arm, the pipe radius [mm].
    pub rp: f64,
    pub rs: f64,
    pub ro: f64,
}

impl TransmissionMatrix {
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.kpp, self.kpr, self.krp, self.krr)
    }

    pub fn determinant(&self) -> f64 {
        self.kpp * self.krr - self.kpr * self.krp
    }

    pub fn inverse(&self) -> Result<Matrix2<f64>> {
        let det = self.determinant();
        if !(det.abs() > SINGULAR_DET_TOL) {
            return Err(ModelError::Singular(format!(
                "transmission matrix determinant {det} is zero"
            )));
        }
        Ok(Matrix2::new(self.krr, -self.kpr, -self.krp, self.kpp) / det)
    }

    /// Body-level torques produced by motor commands.
    pub fn apply(&self, command: Vector2<f64>) -> Vector2<f64> {
        self.matrix() * command
    }

    /// Normalized leakage ratios `(|kpr| / krr, |krp| / kpp)`.
    pub fn leakage_ratios(&self) -> (f64, f64) {
        (self.kpr.abs() / self.krr, self.krp.abs() / self.kpp)
    }
}

/// Splits a roll-motor torque into its rolling and axial-leakage parts.
pub fn roll_projection(tau_r: f64, alpha: f64) -> (f64, f64) {
    let (s, c) = alpha.sin_cos();
    (tau_r * c, tau_r * s)
}

/// Fraction of roll-motor torque that produces rolling.
pub fn roll_efficiency(alpha: f64) -> f64 {
    alpha.cos()
}

pub fn build_transmission(
    params: &MechanismParams,
    gp: f64,
    wheels: u32,
    alpha: f64,
    krp: f64,
) -> Result<TransmissionMatrix> {
    if !(params.rs > 0.0) {
        return Err(ModelError::invalid(
            "positive_length",
            format!("spherical-wheel radius must be > 0, got {}", params.rs),
        ));
    }
    let rp = 0.5 * params.dp;
    let (s, c) = alpha.sin_cos();
    let ta = TransmissionMatrix {
        kpp: gp * wheels as f64,
        kpr: params.ro / params.rs * s,
        krp,
        krr: rp / params.rs * c,
        alpha,
        gp,
        wheels,
        rp,
        rs: params.rs,
        ro: params.ro,
    };
    ta.inverse()?;
    Ok(ta)
}

/// Keeps the baseline diagonal and imposes leakage `kpr = kappa_pr * krr`, `krp = kappa_rp * kpp`.
pub fn stress_test_matrix(
    baseline: &TransmissionMatrix,
    kappa_pr: f64,
    kappa_rp: f64,
) -> Result<TransmissionMatrix> {
    for (name, k) in [("kappa_pr", kappa_pr), ("kappa_rp", kappa_rp)] {
        if !(0.0..1.0).contains(&k) {
            return Err(ModelError::invalid(
                "kappa_range",
                format!("{name} must lie in [0, 1), got {k}"),
            ));
        }
    }
    let ta = TransmissionMatrix {
        kpr: kappa_pr * baseline.krr.abs(),
        krp: kappa_rp * baseline.kpp.abs(),
        ..*baseline
    };
    ta.inverse()?;
    Ok(ta)
}

/// Grid of longitudinal offset `a` and lateral separation `n - b` [mm].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub nb_min: f64,
    pub nb_max: f64,
    pub nb_steps: usize,
}

impl Default for SurfaceGrid {
    fn default() -> Self {
        SurfaceGrid {
            a_min: 0.0,
            a_max: 60.0,
            a_steps: 121,
            nb_min: -40.0,
            nb_max: 40.0,
            nb_steps: 121,
        }
    }
}

fn axis(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![min];
    }
    (0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect()
}

impl SurfaceGrid {
    pub fn validate(&self) -> Result<()> {
        if self.a_steps == 0 || self.nb_steps == 0 {
            return Err(ModelError::invalid(
                "grid_resolution",
                "surface grid axes need nodes",
            ));
        }
        if !(self.a_min >= 0.0 && self.a_min <= self.a_max && self.nb_min <= self.nb_max) {
            return Err(ModelError::invalid(
                "grid_bounds",
                format!(
                    "surface bounds a [{}, {}], n-b [{}, {}] invalid",
                    self.a_min, self.a_max, self.nb_min, self.nb_max
                ),
            ));
        }
        Ok(())
    }

    pub fn a_values(&self) -> Vec<f64> {
        axis(self.a_min, self.a_max, self.a_steps)
    }

    pub fn nb_values(&self) -> Vec<f64> {
        axis(self.nb_min, self.nb_max, self.nb_steps)
    }
}

/// Contact angle over the mounting plane; `None` marks unreachable nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSurface {
    pub a: Vec<f64>,
    pub n_minus_b: Vec<f64>,
    /// `alpha[i][j]` at `(a[i], n_minus_b[j])` [rad].
    pub alpha: Vec<Vec<Option<f64>>>,
}

pub fn alpha_surface(template: &MechanismParams, grid: &SurfaceGrid) -> Result<AlphaSurface> {
    grid.validate()?;
    let a = grid.a_values();
    let nb = grid.nb_values();
    let alpha = a
        .par_iter()
        .map(|&ai| {
            nb.iter()
                .map(|&s| contact_angle(&template.with_separation(ai, s)).ok())
                .collect()
        })
        .collect();
    Ok(AlphaSurface {
        a,
        n_minus_b: nb,
        alpha,
    })
}
