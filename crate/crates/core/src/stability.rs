//! Anti-gravity feasibility in a vertical pipe: friction envelope, safety
//! margin, and the (mu_s, K) stability domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::geometry::{solve_configuration, MechanismParams};
use crate::statics::{joint_torque, solve_normal_forces_in, ContactForces, MassModel, SpringModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionModel {
    /// Static friction coefficient at the spherical wheel.
    pub mu_s: f64,
    /// Effective axial friction coefficient of the omni wheels.
    pub mu_o: f64,
}

impl Default for FrictionModel {
    fn default() -> Self {
        FrictionModel {
            mu_s: 0.1,
            mu_o: 0.3,
        }
    }
}

impl FrictionModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_s", self.mu_s), ("mu_o", self.mu_o)] {
            if !(v > 0.0 && v <= 2.0) {
                return Err(ModelError::invalid(
                    "friction_range",
                    format!("{name} must lie in (0, 2], got {v}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityResult {
    pub f_max_total: f64,
    /// Safety margin `S`.
    pub margin: f64,
    /// Traction reserve `1 - 1/S`; `-inf` when `S = 0`.
    pub reserve: f64,
    pub stable: bool,
}

impl StabilityResult {
    /// Whether the margin also clears a stricter design threshold (reporting only).
    pub fn meets(&self, threshold: f64) -> bool {
        self.margin >= threshold
    }
}

/// Upper bound on the total axial static friction.
pub fn max_static_friction(forces: &ContactForces, friction: &FrictionModel) -> Result<f64> {
    if forces.has_separation() {
        return Err(ModelError::ContactSeparation(format!(
            "normal forces ({:.6}, {:.6}, {:.6}) N include a negative contact",
            forces.fn0, forces.fn1, forces.fn2
        )));
    }
    Ok(friction.mu_s * forces.fn0 + friction.mu_o * (forces.fn1 + forces.fn2))
}

pub fn safety_margin(f_max: f64, g_total: f64) -> Result<StabilityResult> {
    if !(g_total > 0.0) {
        return Err(ModelError::invalid(
            "total_weight_positive",
            format!("total weight must be > 0, got {g_total}"),
        ));
    }
    let margin = f_max / g_total;
    let reserve = if margin > 0.0 {
        1.0 - 1.0 / margin
    } else {
        f64::NEG_INFINITY
    };
    Ok(StabilityResult {
        f_max_total: f_max,
        margin,
        reserve,
        stable: margin >= 1.0,
    })
}

/// Full chain: configuration, spring torque, normal forces, margin.
pub fn evaluate_stability(
    params: &MechanismParams,
    masses: &MassModel,
    spring: &SpringModel,
    friction: &FrictionModel,
) -> Result<StabilityResult> {
    let config = solve_configuration(params)?;
    let forces = solve_normal_forces_in(params, &config, masses, joint_torque(spring, &config))?;
    safety_margin(
        max_static_friction(&forces, friction)?,
        masses.total_weight(),
    )
}

/// Grid over spherical-wheel friction and spring stiffness [N*mm/deg].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityGrid {
    pub mu_s_min: f64,
    pub mu_s_max: f64,
    pub mu_s_steps: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub k_steps: usize,
}

impl Default for StabilityGrid {
    fn default() -> Self {
        StabilityGrid {
            mu_s_min: 0.02,
            mu_s_max: 0.5,
            mu_s_steps: 100,
            k_min: 1.0,
            k_max: 30.0,
            k_steps: 100,
        }
    }
}

fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![min];
    }
    (0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect()
}

impl StabilityGrid {
    pub fn validate(&self) -> Result<()> {
        if self.mu_s_steps < 2 || self.k_steps < 2 {
            return Err(ModelError::invalid(
                "grid_resolution",
                "stability grid needs at least 2 nodes per axis",
            ));
        }
        if !(self.mu_s_min > 0.0 && self.mu_s_min < self.mu_s_max && self.mu_s_max <= 2.0) {
            return Err(ModelError::invalid(
                "grid_bounds",
                format!("mu_s range [{}, {}] invalid", self.mu_s_min, self.mu_s_max),
            ));
        }
        if !(self.k_min > 0.0 && self.k_min < self.k_max) {
            return Err(ModelError::invalid(
                "grid_bounds",
                format!("K range [{}, {}] invalid", self.k_min, self.k_max),
            ));
        }
        Ok(())
    }

    pub fn mu_s_values(&self) -> Vec<f64> {
        linspace(self.mu_s_min, self.mu_s_max, self.mu_s_steps)
    }

    pub fn k_values(&self) -> Vec<f64> {
        linspace(self.k_min, self.k_max, self.k_steps)
    }
}

/// Safety margin sampled on a (mu_s, K) grid; `None` marks nodes that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMap {
    pub mu_s: Vec<f64>,
    pub k: Vec<f64>,
    /// `margins[i][j]` is the margin at `(mu_s[i], k[j])`.
    pub margins: Vec<Vec<Option<f64>>>,
}

impl StabilityMap {
    pub fn get(&self, i_mu: usize, j_k: usize) -> Option<f64> {
        self.margins[i_mu][j_k]
    }

    pub fn node_count(&self) -> usize {
        self.mu_s.len() * self.k.len()
    }
}

/// Evaluates the margin at every grid node with the spring preload held fixed.
pub fn stability_domain_map(
    params: &MechanismParams,
    masses: &MassModel,
    spring: &SpringModel,
    friction: &FrictionModel,
    grid: &StabilityGrid,
) -> Result<StabilityMap> {
    grid.validate()?;
    let mu_s = grid.mu_s_values();
    let k = grid.k_values();
    let margins = mu_s
        .par_iter()
        .map(|&mu| {
            k.iter()
                .map(|&stiffness| {
                    evaluate_stability(
                        params,
                        masses,
                        &spring.with_stiffness(stiffness),
                        &FrictionModel {
                            mu_s: mu,
                            ..*friction
                        },
                    )
                    .ok()
                    .map(|r| r.margin)
                })
                .collect()
        })
        .collect();
    Ok(StabilityMap { mu_s, k, margins })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub mu_s: f64,
    /// Stiffness at which the margin equals one [N*mm/deg].
    pub k_star: f64,
    /// The margin already exceeds one at the lower end of the stiffness range.
    pub saturated: bool,
}

const BOUNDARY_TOL: f64 = 1e-9;

/// Critical stiffness `K*(mu_s)` with `S = 1`, one point per grid `mu_s` value.
pub fn critical_boundary(
    params: &MechanismParams,
    masses: &MassModel,
    spring: &SpringModel,
    friction: &FrictionModel,
    grid: &StabilityGrid,
) -> Result<Vec<BoundaryPoint>> {
    grid.validate()?;
    grid.mu_s_values()
        .par_iter()
        .map(|&mu| {
            let fric = FrictionModel {
                mu_s: mu,
                ..*friction
            };
            let margin_at = |k: f64| {
                evaluate_stability(params, masses, &spring.with_stiffness(k), &fric)
                    .map(|r| r.margin)
            };
            let at_min = margin_at(grid.k_min)?;
            if at_min >= 1.0 {
                return Ok(BoundaryPoint {
                    mu_s: mu,
                    k_star: grid.k_min,
                    saturated: true,
                });
            }
            if margin_at(grid.k_max)? < 1.0 {
                return Err(ModelError::NoCrossing(format!(
                    "margin stays below 1 for K in [{}, {}] at mu_s = {mu}",
                    grid.k_min, grid.k_max
                )));
            }
            let k_star = bisect(grid.k_min, grid.k_max, |k| Ok(margin_at(k)? - 1.0))?;
            Ok(BoundaryPoint {
                mu_s: mu,
                k_star,
                saturated: false,
            })
        })
        .collect()
}

/// Root of an increasing function on `[lo, hi]` with `f(lo) < 0 <= f(hi)`.
pub(crate) fn bisect<F>(mut lo: f64, mut hi: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if v.abs() < BOUNDARY_TOL || hi - lo < 1e-14 * hi.abs().max(1.0) {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub const PRELOAD_BOUNDS_DEG: (f64, f64) = (0.0, 90.0);

/// Spring preload [deg] that places the design at safety margin `target`.
pub fn calibrate_preload(
    params: &MechanismParams,
    masses: &MassModel,
    spring: &SpringModel,
    friction: &FrictionModel,
    target: f64,
) -> Result<f64> {
    let margin_at = |preload: f64| {
        evaluate_stability(params, masses, &spring.with_preload(preload), friction)
            .map(|r| r.margin)
    };
    let (lo, hi) = PRELOAD_BOUNDS_DEG;
    let floor = margin_at(lo)?;
    if (floor - target).abs() < BOUNDARY_TOL {
        return Ok(lo);
    }
    if target < floor {
        return Err(ModelError::Unachievable(format!(
            "target margin {target} is below the unloaded-spring margin {floor}"
        )));
    }
    let ceiling = margin_at(hi)?;
    if target > ceiling {
        return Err(ModelError::Unachievable(format!(
            "target margin {target} exceeds {ceiling} reached at {hi} deg preload"
        )));
    }
    bisect(lo, hi, |p| Ok(margin_at(p)? - target))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forces(fn0: f64, fn1: f64, fn2: f64) -> ContactForces {
        ContactForces {
            fn0,
            fn1,
            fn2,
            moment_arms: [0.0; 3],
            gravity_moments: [0.0; 5],
            mj: 0.0,
        }
    }

    #[test]
    fn friction_envelope() {
        let f = max_static_friction(&forces(10.0, 6.0, 4.0), &FrictionModel::default()).unwrap();
        assert!((f - 4.0).abs() < 1e-12);
        let none = FrictionModel {
            mu_s: 0.0,
            mu_o: 0.0,
        };
        assert_eq!(
            max_static_friction(&forces(10.0, 6.0, 4.0), &none).unwrap(),
            0.0
        );
        assert!(matches!(
            max_static_friction(&forces(1.0, 2.0, -1.0), &FrictionModel::default()),
            Err(ModelError::ContactSeparation(_))
        ));
    }

    #[test]
    fn margin_identities() {
        let crit = safety_margin(7.0, 7.0).unwrap();
        assert_eq!(crit.margin, 1.0);
        assert_eq!(crit.reserve, 0.0);
        assert!(crit.stable);

        let nominal = safety_margin(2.3, 1.0).unwrap();
        assert!((nominal.reserve - 0.565_217_391_304_347_8).abs() < 1e-12);
        assert!(nominal.meets(1.5));

        let zero = safety_margin(0.0, 5.0).unwrap();
        assert_eq!(zero.margin, 0.0);
        assert!(!zero.stable);
        assert_eq!(zero.reserve, f64::NEG_INFINITY);

        assert!(safety_margin(1.0, 0.0).is_err());
    }

    #[test]
    fn friction_validation() {
        assert!(FrictionModel {
            mu_s: 0.0,
            mu_o: 0.3
        }
        .validate()
        .is_err());
        assert!(FrictionModel {
            mu_s: 2.5,
            mu_o: 0.3
        }
        .validate()
        .is_err());
        assert!(FrictionModel::default().validate().is_ok());
    }

    #[test]
    fn grid_needs_two_nodes() {
        let g = StabilityGrid {
            k_steps: 1,
            ..StabilityGrid::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn calibrate_at_floor_returns_zero() {
        let p = MechanismParams::default().with_separation(35.6, 32.3);
        let m = MassModel::default_split(0.75, 9.81);
        let s = SpringModel::default();
        let f = FrictionModel::default();
        let floor = evaluate_stability(&p, &m, &s, &f).unwrap().margin;
        assert_eq!(calibrate_preload(&p, &m, &s, &f, floor).unwrap(), 0.0);
        assert!(matches!(
            calibrate_preload(&p, &m, &s, &f, 0.5 * floor),
            Err(ModelError::Unachievable(_))
        ));
        assert!(calibrate_preload(&p, &m, &s, &f, 1e3).is_err());
    }
}
