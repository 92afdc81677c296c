//! Rigid-body model in generalized coordinates `q = (z, phi)` and inverse
//! dynamics of a station-keeping roll maneuver.
//!
//! Internally SI (kg, m, s). Both generalized-force channels are carried in
//! torque units: the axial force is multiplied by the omni-wheel radius before
//! the transmission matrix is inverted. Torque traces are reported in N*mm.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::geometry::{Configuration, MechanismParams};
use crate::statics::STANDARD_GRAVITY;
use crate::transmission::TransmissionMatrix;

const MM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipeOrientation {
    /// Gravity acts along the pipe axis.
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyModel {
    /// Link masses [kg].
    pub m1: f64,
    pub m2: f64,
    /// Link lengths [mm].
    pub l1: f64,
    pub l2: f64,
    /// Arm configuration angles [rad].
    pub theta1: f64,
    pub theta2: f64,
    /// Gravitational acceleration [m/s^2].
    pub g: f64,
    /// Omni-wheel radius [mm].
    pub ro: f64,
    pub pipe: PipeOrientation,
}

impl BodyModel {
    /// Body of the given geometry with `total_mass` [kg] split in proportion to link length.
    pub fn from_geometry(
        params: &MechanismParams,
        config: &Configuration,
        total_mass: f64,
    ) -> Self {
        let m1 = total_mass * params.l1 / (params.l1 + params.l2);
        BodyModel {
            m1,
            m2: total_mass - m1,
            l1: params.l1,
            l2: params.l2,
            theta1: config.theta1,
            theta2: config.theta2,
            g: STANDARD_GRAVITY,
            ro: params.ro,
            pipe: PipeOrientation::Vertical,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.m1 + self.m2
    }
}

/// Inertia matrix in `(z, phi)`; the off-diagonal terms vanish identically.
pub fn inertia_matrix(body: &BodyModel) -> Matrix2<f64> {
    let link = |m: f64, l: f64, theta: f64| {
        let l2 = (l * MM).powi(2);
        m * (l2 / 4.0 * theta.sin().powi(2) + l2 / 12.0)
    };
    let roll = link(body.m1, body.l1, body.theta1) + link(body.m2, body.l2, body.theta2);
    Matrix2::new(body.m1 + body.m2, 0.0, 0.0, roll)
}

/// Velocity and gravity terms `C(q, q_dot) q_dot + G(q)` in harmonized units
/// (both channels N*m). `C` is zero because the inertia matrix is
/// configuration-constant in a straight pipe.
pub fn generalized_load(body: &BodyModel, _q: Vector2<f64>, _q_dot: Vector2<f64>) -> Vector2<f64> {
    match body.pipe {
        PipeOrientation::Vertical => Vector2::new(body.total_mass() * body.g * body.ro * MM, 0.0),
        PipeOrientation::Horizontal => Vector2::zeros(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RollSample {
    pub t: f64,
    pub phi: f64,
    pub phi_dot: f64,
    pub phi_ddot: f64,
}

/// Prescribed roll motion with the axial position held constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollTrajectory {
    pub samples: Vec<RollSample>,
}

/// Quintic smoothstep roll through `total_angle` [rad] over `duration` [s]:
/// zero velocity and acceleration at both ends.
pub fn generate_roll_trajectory(
    total_angle: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<RollTrajectory> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(ModelError::invalid(
            "duration_positive",
            format!("trajectory duration must be > 0, got {duration}"),
        ));
    }
    if !(sample_rate >= 50.0) || !sample_rate.is_finite() {
        return Err(ModelError::invalid(
            "sample_rate_min",
            format!("sample rate must be >= 50 Hz, got {sample_rate}"),
        ));
    }
    if !total_angle.is_finite() {
        return Err(ModelError::invalid("finite", "roll angle must be finite"));
    }
    let intervals = (duration * sample_rate).round().max(1.0) as usize;
    let samples = (0..=intervals)
        .map(|i| {
            let s = i as f64 / intervals as f64;
            let s2 = s * s;
            let s3 = s2 * s;
            RollSample {
                t: duration * s,
                phi: total_angle * (10.0 * s3 - 15.0 * s3 * s + 6.0 * s3 * s2),
                phi_dot: total_angle / duration * (30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2),
                phi_ddot: total_angle / (duration * duration)
                    * (60.0 * s - 180.0 * s2 + 120.0 * s3),
            }
        })
        .collect();
    Ok(RollTrajectory { samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorqueSample {
    pub t: f64,
    /// Propulsion motor command [N*mm].
    pub tau_p: f64,
    /// Roll motor command [N*mm].
    pub tau_r: f64,
    /// Generalized demand `M q_ddot + C q_dot + G` the commands must produce [N*mm].
    pub demand: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
}

impl ChannelStats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        ChannelStats {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorqueTrace {
    pub samples: Vec<TorqueSample>,
    pub tau_p: ChannelStats,
    pub tau_r: ChannelStats,
}

/// Motor commands `T_A^-1 (M q_ddot + C q_dot + G)` along a station-keeping roll.
pub fn inverse_dynamics(
    body: &BodyModel,
    ta: &TransmissionMatrix,
    traj: &RollTrajectory,
) -> Result<TorqueTrace> {
    if traj.samples.is_empty() {
        return Err(ModelError::invalid(
            "trajectory_empty",
            "trajectory has no samples",
        ));
    }
    let inv = ta.inverse()?;
    let mass = inertia_matrix(body);
    let ro = body.ro * MM;
    let samples = traj
        .samples
        .iter()
        .map(|s| {
            let q = Vector2::new(0.0, s.phi);
            let q_dot = Vector2::new(0.0, s.phi_dot);
            let q_ddot = Vector2::new(0.0, s.phi_ddot);
            let inertial = mass * q_ddot;
            let load = generalized_load(body, q, q_dot);
            // axial channel is a force; scale by the omni radius to get a torque
            let demand = Vector2::new(inertial.x * ro + load.x, inertial.y + load.y) / MM;
            let command = inv * demand;
            if !command.iter().all(|v| v.is_finite()) {
                return Err(ModelError::NonFinite(format!(
                    "torque command at t = {} is not finite",
                    s.t
                )));
            }
            Ok(TorqueSample {
                t: s.t,
                tau_p: command.x,
                tau_r: command.y,
                demand: [demand.x, demand.y],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TorqueTrace {
        tau_p: ChannelStats::of(samples.iter().map(|s| s.tau_p)),
        tau_r: ChannelStats::of(samples.iter().map(|s| s.tau_r)),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationTrace {
    pub name: String,
    pub transmission: TransmissionMatrix,
    pub trace: TorqueTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// In input order.
    pub entries: Vec<ConfigurationTrace>,
    /// Names sorted by propulsion-command standard deviation, ascending; ties keep input order.
    pub ranking: Vec<String>,
}

pub fn compare_configurations(
    body: &BodyModel,
    configs: &[(String, TransmissionMatrix)],
    traj: &RollTrajectory,
) -> Result<ComparisonReport> {
    if configs.is_empty() {
        return Err(ModelError::invalid(
            "configs_non_empty",
            "at least one transmission configuration is required",
        ));
    }
    let entries = configs
        .par_iter()
        .map(|(name, ta)| {
            inverse_dynamics(body, ta, traj).map(|trace| ConfigurationTrace {
                name: name.clone(),
                transmission: *ta,
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&i, &j| {
        entries[i]
            .trace
            .tau_p
            .std
            .total_cmp(&entries[j].trace.tau_p.std)
    });
    Ok(ComparisonReport {
        ranking: order.iter().map(|&i| entries[i].name.clone()).collect(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::solve_configuration;
    use crate::transmission::build_transmission;

    fn body() -> BodyModel {
        let p = MechanismParams::default();
        BodyModel::from_geometry(&p, &solve_configuration(&p).unwrap(), 0.75)
    }

    #[test]
    fn inertia_structure() {
        let mut b = body();
        let m = inertia_matrix(&b);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(1, 0)], 0.0);
        assert!((m[(0, 0)] - 0.75).abs() < 1e-15);

        b.theta1 = 0.0;
        b.theta2 = 0.0;
        let collapsed = inertia_matrix(&b)[(1, 1)];
        let expected = b.m1 * 0.105f64.powi(2) / 12.0 + b.m2 * 0.075f64.powi(2) / 12.0;
        assert!((collapsed - expected).abs() < 1e-18);
    }

    #[test]
    fn gravity_load() {
        let mut b = body();
        let g = generalized_load(&b, Vector2::zeros(), Vector2::new(3.0, -2.0));
        assert!((g.x - 0.220_725).abs() < 1e-12);
        assert_eq!(g.y, 0.0);
        assert_eq!(g, generalized_load(&b, Vector2::zeros(), Vector2::zeros()));
        b.pipe = PipeOrientation::Horizontal;
        assert_eq!(
            generalized_load(&b, Vector2::zeros(), Vector2::zeros()),
            Vector2::zeros()
        );
    }

    #[test]
    fn zero_roll_is_static() {
        let t = generate_roll_trajectory(0.0, 2.0, 100.0).unwrap();
        assert!(t
            .samples
            .iter()
            .all(|s| s.phi == 0.0 && s.phi_dot == 0.0 && s.phi_ddot == 0.0));
    }

    #[test]
    fn quintic_peak_velocity() {
        // d/ds (10 s^3 - 15 s^4 + 6 s^5) at s = 1/2 is 15/8
        let angle = 2.0 * std::f64::consts::PI;
        let t = generate_roll_trajectory(angle, 4.0, 200.0).unwrap();
        let mid = &t.samples[t.samples.len() / 2];
        assert!((mid.t - 2.0).abs() < 1e-12);
        assert!((mid.phi_dot - 1.875 * angle / 4.0).abs() < 1e-12);
        let first = t.samples.first().unwrap();
        let last = t.samples.last().unwrap();
        assert_eq!((first.phi_dot, first.phi_ddot), (0.0, 0.0));
        assert!(last.phi_dot.abs() < 1e-12 && last.phi_ddot.abs() < 1e-12);
        assert!((last.phi - angle).abs() < 1e-12);
    }

    #[test]
    fn trajectory_preconditions() {
        assert!(generate_roll_trajectory(1.0, 0.0, 100.0).is_err());
        assert!(generate_roll_trajectory(1.0, 1.0, 20.0).is_err());
    }

    #[test]
    fn diagonal_transmission_gives_flat_propulsion() {
        let p = MechanismParams::default();
        let ta = build_transmission(&p, 1.0, 4, 0.0, 0.0).unwrap();
        let traj = generate_roll_trajectory(std::f64::consts::TAU, 4.0, 200.0).unwrap();
        let trace = inverse_dynamics(&body(), &ta, &traj).unwrap();
        assert!(trace.tau_p.std < 1e-12);
        // m g Ro / kpp in N*mm
        assert!((trace.tau_p.mean - 220.725 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn comparison_ranking_and_determinism() {
        let p = MechanismParams::default();
        let traj = generate_roll_trajectory(std::f64::consts::TAU, 4.0, 200.0).unwrap();
        let a = build_transmission(&p, 1.0, 4, 0.3, 0.0).unwrap();
        let b = build_transmission(&p, 1.0, 4, 0.1, 0.0).unwrap();
        let r = compare_configurations(
            &body(),
            &[
                ("wide".into(), a),
                ("narrow".into(), b),
                ("again".into(), a),
            ],
            &traj,
        )
        .unwrap();
        assert_eq!(r.ranking, vec!["narrow", "wide", "again"]);
        assert_eq!(r.entries[0].trace, r.entries[2].trace);
        assert!(compare_configurations(&body(), &[], &traj).is_err());
    }
}
