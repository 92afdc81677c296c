//! Wheel-pipe normal forces of the clamped V-arm in a vertical pipe.
//!
//! The structure is cut at the joint `O`: lateral force balance plus one
//! moment balance per arm give three equations in the three normal forces,
//! solved here in closed form. Moments are counter-clockwise positive in the
//! end-view frame of [`crate::geometry`].

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::geometry::{solve_configuration, Configuration, EndViewLayout, MechanismParams};

/// Default gravitational acceleration [m/s^2].
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Below this magnitude a moment-arm denominator is treated as zero [mm].
pub const SINGULAR_ARM_TOL: f64 = 1e-9;

/// Signed moment arm `(r x n) . e_z` of a unit force direction applied at `r`.
pub fn moment_arm(r: Vector2<f64>, direction: Vector2<f64>) -> f64 {
    debug_assert!(
        (direction.norm() - 1.0).abs() < 1e-12,
        "direction must be a unit vector"
    );
    r.x * direction.y - r.y * direction.x
}

/// Which arm of the V a component belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Link1,
    Link2,
}

impl Side {
    /// Subsystem partition of the component indices: {0, 1, 3} on Link 1, {2, 4} on Link 2.
    pub fn of_index(index: usize) -> Option<Side> {
        match index {
            0 | 1 | 3 => Some(Side::Link1),
            2 | 4 => Some(Side::Link2),
            _ => None,
        }
    }
}

/// Where a component's centre of mass sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MassPlacement {
    /// Fraction of the way from the joint to the wheel axle of the given link.
    Link { side: Side, fraction: f64 },
    /// Fixed position in the joint frame [mm].
    Fixed { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassComponent {
    pub index: usize,
    pub label: String,
    /// Weight [N].
    pub weight: f64,
    pub placement: MassPlacement,
}

impl MassComponent {
    pub fn position(&self, layout: &EndViewLayout) -> Vector2<f64> {
        match self.placement {
            MassPlacement::Link {
                side: Side::Link1,
                fraction,
            } => layout.along_link1(fraction),
            MassPlacement::Link {
                side: Side::Link2,
                fraction,
            } => layout.along_link2(fraction),
            MassPlacement::Fixed { x, y } => Vector2::new(x, y),
        }
    }
}

/// Component weights of the module and the direction gravity acts in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassModel {
    pub components: Vec<MassComponent>,
    /// Unit gravity direction in the joint frame; along the pipe axis for a vertical pipe.
    pub gravity_dir: [f64; 2],
}

impl MassModel {
    /// Splits `total_mass_kg` over the five main modules: drive unit 45 %, Link-1 arm 15 %,
    /// electronics 10 % (Link-1 side), roll unit 20 % and Link-2 arm 10 % (Link-2 side).
    /// Arm masses sit at the link midpoints, the units along their arms.
    pub fn default_split(total_mass_kg: f64, gravity: f64) -> Self {
        let w = total_mass_kg * gravity;
        let part = |index, label: &str, share: f64, side, fraction| MassComponent {
            index,
            label: label.to_string(),
            weight: w * share,
            placement: MassPlacement::Link { side, fraction },
        };
        MassModel {
            components: vec![
                part(0, "drive unit", 0.45, Side::Link1, 2.0 / 3.0),
                part(1, "link 1", 0.15, Side::Link1, 0.5),
                part(2, "roll unit", 0.20, Side::Link2, 1.0 / 3.0),
                part(3, "electronics", 0.10, Side::Link1, 1.0 / 3.0),
                part(4, "link 2", 0.10, Side::Link2, 0.5),
            ],
            gravity_dir: [0.0, -1.0],
        }
    }

    /// Gravity-free model; only the spring clamps the wheels.
    pub fn weightless() -> Self {
        MassModel {
            components: Vec::new(),
            gravity_dir: [0.0, -1.0],
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn gravity(&self) -> Vector2<f64> {
        Vector2::new(self.gravity_dir[0], self.gravity_dir[1])
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gravity();
        if !g.x.is_finite() || !g.y.is_finite() || (g.norm() - 1.0).abs() > 1e-9 {
            return Err(ModelError::invalid(
                "gravity_unit",
                format!(
                    "gravity direction must be a unit vector, got {:?}",
                    self.gravity_dir
                ),
            ));
        }
        let mut seen = [false; 5];
        for c in &self.components {
            let side = Side::of_index(c.index).ok_or_else(|| {
                ModelError::invalid(
                    "component_index",
                    format!("component index {} outside 0..=4", c.index),
                )
            })?;
            if seen[c.index] {
                return Err(ModelError::invalid(
                    "component_index",
                    format!("component index {} listed twice", c.index),
                ));
            }
            seen[c.index] = true;
            if !(c.weight >= 0.0) || !c.weight.is_finite() {
                return Err(ModelError::invalid(
                    "weight_non_negative",
                    format!(
                        "component {} weight must be >= 0, got {}",
                        c.index, c.weight
                    ),
                ));
            }
            if let MassPlacement::Link {
                side: placed,
                fraction,
            } = c.placement
            {
                if placed != side {
                    return Err(ModelError::invalid(
                        "component_side",
                        format!(
                            "component {} belongs to {side:?}, placed on {placed:?}",
                            c.index
                        ),
                    ));
                }
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(ModelError::invalid(
                        "placement_fraction",
                        format!("component {} fraction {fraction} outside [0, 1]", c.index),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Torsion spring at the V-arm joint.
///
/// The joint torque is `K * (preload + theta - free_opening)`, i.e. the spring
/// is wound further as the pipe forces the V open beyond its free opening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringModel {
    /// Stiffness [N*mm/deg].
    pub stiffness: f64,
    /// Deflection already present at the free configuration [deg].
    pub preload_deg: f64,
    /// V-opening of the free (uninstalled) configuration [deg].
    pub free_opening_deg: f64,
}

pub const PROTOTYPE_STIFFNESS: f64 = 10.06;
pub const DEFAULT_FREE_OPENING_DEG: f64 = 120.0;

impl Default for SpringModel {
    fn default() -> Self {
        SpringModel {
            stiffness: PROTOTYPE_STIFFNESS,
            preload_deg: 0.0,
            free_opening_deg: DEFAULT_FREE_OPENING_DEG,
        }
    }
}

impl SpringModel {
    pub fn with_stiffness(self, stiffness: f64) -> Self {
        SpringModel { stiffness, ..self }
    }

    pub fn with_preload(self, preload_deg: f64) -> Self {
        SpringModel {
            preload_deg,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness > 0.0) || !self.stiffness.is_finite() {
            return Err(ModelError::invalid(
                "stiffness_positive",
                format!("spring stiffness must be > 0, got {}", self.stiffness),
            ));
        }
        if !(self.preload_deg >= 0.0) || !self.preload_deg.is_finite() {
            return Err(ModelError::invalid(
                "preload_non_negative",
                format!("preload must be >= 0, got {}", self.preload_deg),
            ));
        }
        if !(0.0..=180.0).contains(&self.free_opening_deg) {
            return Err(ModelError::invalid(
                "free_opening_range",
                format!(
                    "free opening must lie in [0, 180] deg, got {}",
                    self.free_opening_deg
                ),
            ));
        }
        Ok(())
    }

    /// Spring deflection of `config` measured from the free configuration [deg].
    pub fn deflection_deg(&self, config: &Configuration) -> f64 {
        config.theta.to_degrees() - self.free_opening_deg
    }
}

/// Joint torque `M_J` [N*mm] exerted by the spring in `config`.
pub fn joint_torque(spring: &SpringModel, config: &Configuration) -> f64 {
    spring.stiffness * (spring.preload_deg + spring.deflection_deg(config))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactForces {
    pub fn0: f64,
    pub fn1: f64,
    pub fn2: f64,
    /// Signed moment arms of the three normal forces about the joint [mm].
    pub moment_arms: [f64; 3],
    /// Weight moments `M_G0 .. M_G4` about the joint [N*mm].
    pub gravity_moments: [f64; 5],
    /// Joint torque [N*mm].
    pub mj: f64,
}

impl ContactForces {
    pub fn total(&self) -> f64 {
        self.fn0 + self.fn1 + self.fn2
    }

    /// Fraction of the total normal force carried by each contact.
    pub fn shares(&self) -> [f64; 3] {
        let total = self.total();
        [self.fn0 / total, self.fn1 / total, self.fn2 / total]
    }

    /// True when any contact would need to pull on the wall.
    pub fn has_separation(&self) -> bool {
        self.fn0 < 0.0 || self.fn1 < 0.0 || self.fn2 < 0.0
    }

    /// Residuals of (lateral balance, Link-1 moments, Link-2 moments).
    pub fn residuals(&self) -> [f64; 3] {
        let [l0, l1, l2] = self.moment_arms;
        let g = &self.gravity_moments;
        [
            self.fn1 + self.fn2 - self.fn0,
            l0 * self.fn0 + l1 * self.fn1 + g[0] + g[1] + g[3] - self.mj,
            l2 * self.fn2 + g[2] + g[4] + self.mj,
        ]
    }
}

/// Moment arms and weight moments of a configuration, before solving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticLoads {
    pub moment_arms: [f64; 3],
    pub gravity_moments: [f64; 5],
}

pub fn static_loads(
    params: &MechanismParams,
    config: &Configuration,
    masses: &MassModel,
) -> StaticLoads {
    let layout = EndViewLayout::new(params, config);
    let inward_sphere = Vector2::new(-1.0, 0.0);
    let inward_omni = Vector2::new(1.0, 0.0);
    let moment_arms = [
        moment_arm(layout.sphere_contact, inward_sphere),
        moment_arm(layout.omni1_contact, inward_omni),
        moment_arm(layout.omni2_contact, inward_omni),
    ];
    let g = masses.gravity();
    let mut gravity_moments = [0.0; 5];
    for c in &masses.components {
        gravity_moments[c.index] += moment_arm(c.position(&layout), g) * c.weight;
    }
    StaticLoads {
        moment_arms,
        gravity_moments,
    }
}

/// Closed-form normal forces for a given joint torque `mj` [N*mm].
///
/// Negative forces are returned as-is; check [`ContactForces::has_separation`].
pub fn solve_normal_forces(
    params: &MechanismParams,
    masses: &MassModel,
    mj: f64,
) -> Result<ContactForces> {
    let config = solve_configuration(params)?;
    solve_normal_forces_in(params, &config, masses, mj)
}

pub(crate) fn solve_normal_forces_in(
    params: &MechanismParams,
    config: &Configuration,
    masses: &MassModel,
    mj: f64,
) -> Result<ContactForces> {
    masses.validate()?;
    let loads = static_loads(params, config, masses);
    let [l0, l1, l2] = loads.moment_arms;
    let g = &loads.gravity_moments;
    if l2.abs() < SINGULAR_ARM_TOL {
        return Err(ModelError::Singular(format!(
            "Link-2 moment arm {l2} is zero"
        )));
    }
    if (l0 + l1).abs() < SINGULAR_ARM_TOL {
        return Err(ModelError::Singular(format!(
            "Link-1 side moment arms cancel ({l0} + {l1})"
        )));
    }
    let fn2 = -(g[2] + g[4] + mj) / l2;
    let fn1 = (mj - (g[0] + g[1] + g[3]) - l0 * fn2) / (l0 + l1);
    Ok(ContactForces {
        fn0: fn1 + fn2,
        fn1,
        fn2,
        moment_arms: loads.moment_arms,
        gravity_moments: loads.gravity_moments,
        mj,
    })
}

/// Forces with the joint torque supplied by `spring` in the solved configuration.
pub fn spring_clamped_forces(
    params: &MechanismParams,
    masses: &MassModel,
    spring: &SpringModel,
) -> Result<ContactForces> {
    let config = solve_configuration(params)?;
    solve_normal_forces_in(params, &config, masses, joint_torque(spring, &config))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceSweepRow {
    /// L2 / L1.
    pub ratio: f64,
    pub forces: ContactForces,
    pub shares: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceSweep {
    pub rows: Vec<ForceSweepRow>,
    /// Ratios that could not be evaluated, with the reason.
    pub skipped: Vec<(f64, ModelError)>,
}

/// Normal-force distribution over link-length ratios `L2/L1`, holding `L1` fixed.
pub fn normal_force_sweep(
    params: &MechanismParams,
    masses: &MassModel,
    spring: &SpringModel,
    ratios: &[f64],
) -> ForceSweep {
    let results: Vec<(f64, Result<ForceSweepRow>)> = ratios
        .par_iter()
        .map(|&ratio| {
            let row = (|| {
                let mut p = *params;
                p.l2 = ratio * params.l1;
                let forces = spring_clamped_forces(&p, masses, spring)?;
                if !(forces.total() > 0.0) {
                    return Err(ModelError::Singular(format!(
                        "total normal force {} is not positive",
                        forces.total()
                    )));
                }
                Ok(ForceSweepRow {
                    ratio,
                    shares: forces.shares(),
                    forces,
                })
            })();
            (ratio, row)
        })
        .collect();

    let mut sweep = ForceSweep {
        rows: Vec::with_capacity(results.len()),
        skipped: Vec::new(),
    };
    for (ratio, r) in results {
        match r {
            Ok(row) => sweep.rows.push(row),
            Err(e) => sweep.skipped.push((ratio, e)),
        }
    }
    sweep
}

/// Evenly spaced inclusive grid `start, start + step, ..., stop`.
pub fn ratio_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}
