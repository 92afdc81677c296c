//! End-view geometry of the V-arm inside a straight circular pipe.
//!
//! Frame convention used throughout the crate: origin at the V-arm joint `O`,
//! `x` lateral across the pipe diameter pointing towards the wall touched by the
//! spherical wheel, `y` along the pipe axis pointing from the Link-1 wheels towards
//! the Link-2 wheels. Lengths are millimetres, angles radians.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Tolerance band inside which an arcsine argument slightly outside [-1, 1] is
/// treated as rounding noise and clamped.
pub const UNIT_CLAMP_TOL: f64 = 1e-9;

/// Structural design parameters of one robot module plus the pipe bore.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismParams {
    /// Link-1 length.
    pub l1: f64,
    /// Link-2 length.
    pub l2: f64,
    /// Longitudinal mounting offset of the spherical wheel.
    pub a: f64,
    /// Lateral mounting offset.
    pub b: f64,
    /// Lateral mounting offset.
    pub n: f64,
    /// Omni-wheel pair spacing.
    pub wo: f64,
    /// Omni-wheel radius.
    pub ro: f64,
    /// Spherical-wheel radius.
    pub rs: f64,
    /// Pipe inner diameter.
    pub dp: f64,
}

/// Wheel spacing that makes the zero-separation baseline reproduce a 21 deg contact angle.
pub const DEFAULT_WHEEL_SPACING: f64 = 59.7;

impl Default for MechanismParams {
    /// Prototype dimensions with zero mounting separation (the non-optimized baseline).
    fn default() -> Self {
        MechanismParams {
            l1: 105.0,
            l2: 75.0,
            a: 0.0,
            b: 0.0,
            n: 0.0,
            wo: DEFAULT_WHEEL_SPACING,
            ro: 30.0,
            rs: 22.5,
            dp: 100.0,
        }
    }
}

impl MechanismParams {
    pub fn with_mounting(mut self, a: f64, b: f64, n: f64) -> Self {
        self.a = a;
        self.b = b;
        self.n = n;
        self
    }

    /// Mounting with a given lateral separation `n - b`, split so both offsets stay non-negative.
    pub fn with_separation(self, a: f64, n_minus_b: f64) -> Self {
        self.with_mounting(a, (-n_minus_b).max(0.0), n_minus_b.max(0.0))
    }

    pub fn n_minus_b(&self) -> f64 {
        self.n - self.b
    }

    /// Effective distance along Link 1 from the omni-wheel axle to the spherical-wheel centre.
    pub fn effective_reach(&self) -> f64 {
        self.l1 - self.n + self.b
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("l1", self.l1),
            ("l2", self.l2),
            ("a", self.a),
            ("b", self.b),
            ("n", self.n),
            ("wo", self.wo),
            ("ro", self.ro),
            ("rs", self.rs),
            ("dp", self.dp),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ModelError::invalid(
                "finite",
                format!("{name} must be finite, got {v}"),
            ));
        }
        for (name, v) in [
            ("l1", self.l1),
            ("l2", self.l2),
            ("wo", self.wo),
            ("ro", self.ro),
            ("rs", self.rs),
            ("dp", self.dp),
        ] {
            if v <= 0.0 {
                return Err(ModelError::invalid(
                    "positive_length",
                    format!("{name} must be > 0, got {v}"),
                ));
            }
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("n", self.n)] {
            if v < 0.0 {
                return Err(ModelError::invalid(
                    "non_negative_offset",
                    format!("{name} must be >= 0, got {v}"),
                ));
            }
        }
        if self.wo >= self.dp {
            return Err(ModelError::invalid(
                "wo_lt_dp",
                format!(
                    "wheel spacing {} must be below pipe diameter {}",
                    self.wo, self.dp
                ),
            ));
        }
        if self.effective_reach() <= 0.0 {
            return Err(ModelError::invalid(
                "reach_positive",
                format!("l1 - n + b must be > 0, got {}", self.effective_reach()),
            ));
        }
        if self.rs + self.ro >= self.dp {
            return Err(ModelError::invalid(
                "wheels_fit_pipe",
                format!(
                    "rs + ro = {} must be below pipe diameter {}",
                    self.rs + self.ro,
                    self.dp
                ),
            ));
        }
        Ok(())
    }
}

/// Derived end-view state of the V-arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    /// Omni-wheel to wall clearance.
    pub hwp: f64,
    /// Omni-wheel centreline to spherical-wheel centre offset.
    pub hs: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Total V-opening angle.
    pub theta: f64,
    /// Spherical-wheel contact angle.
    pub alpha: f64,
}

/// Clearance between the omni-wheel pair and the pipe wall.
pub fn wheel_wall_clearance(dp: f64, wo: f64) -> Result<f64> {
    if !(wo >= 0.0) || wo >= dp {
        return Err(ModelError::Domain(format!(
            "wheel spacing {wo} must lie in [0, {dp})"
        )));
    }
    Ok(0.5 * (dp - (dp * dp - wo * wo).sqrt()))
}

/// Offset between the omni-wheel centreline and the spherical-wheel centre.
pub fn spherical_center_offset(dp: f64, rs: f64, ro: f64, hwp: f64) -> Result<f64> {
    let hs = dp - rs - hwp - ro;
    if !(hs > 0.0) {
        return Err(ModelError::InvalidGeometry(format!(
            "spherical-wheel offset must be positive, got {hs}"
        )));
    }
    Ok(hs)
}

fn clamped_asin(x: f64, what: &str) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + UNIT_CLAMP_TOL {
        return Err(ModelError::Unreachable(format!(
            "{what}: arcsine argument {x} outside [-1, 1]"
        )));
    }
    Ok(x.clamp(-1.0, 1.0).asin())
}

pub fn solve_configuration(params: &MechanismParams) -> Result<Configuration> {
    params.validate()?;
    let hwp = wheel_wall_clearance(params.dp, params.wo)?;
    let hs = spherical_center_offset(params.dp, params.rs, params.ro, hwp)?;

    let reach = params.effective_reach();
    let radius = reach.hypot(params.a);
    let raw = clamped_asin(hs / radius, "link 1")? - (params.a / reach).atan();
    // principal value: configurations below the axis fold back onto the 0 boundary
    let alpha1 = raw.clamp(0.0, FRAC_PI_2);
    let alpha2 = clamped_asin(params.l1 * alpha1.sin() / params.l2, "link 2")?;

    let theta1 = FRAC_PI_2 - alpha1;
    let theta2 = FRAC_PI_2 - alpha2;
    Ok(Configuration {
        hwp,
        hs,
        alpha1,
        alpha2,
        theta1,
        theta2,
        theta: theta1 + theta2,
        alpha: alpha1,
    })
}

pub fn contact_angle(params: &MechanismParams) -> Result<f64> {
    solve_configuration(params).map(|c| c.alpha)
}

/// Wheel centres and contact points in the joint frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndViewLayout {
    pub omni1_center: Vector2<f64>,
    pub omni2_center: Vector2<f64>,
    pub sphere_center: Vector2<f64>,
    pub omni1_contact: Vector2<f64>,
    pub omni2_contact: Vector2<f64>,
    pub sphere_contact: Vector2<f64>,
}

impl EndViewLayout {
    pub fn new(params: &MechanismParams, config: &Configuration) -> Self {
        let (s1, c1) = config.alpha1.sin_cos();
        let (s2, c2) = config.alpha2.sin_cos();
        let omni1_center = Vector2::new(-params.l1 * s1, -params.l1 * c1);
        let omni2_center = Vector2::new(-params.l2 * s2, params.l2 * c2);
        // along Link 1 towards the joint, and its normal towards the spherical-wheel wall
        let along = Vector2::new(s1, c1);
        let across = Vector2::new(c1, -s1);
        let sphere_center = omni1_center + along * params.effective_reach() + across * params.a;

        let omni_drop = Vector2::new(-(params.ro + config.hwp), 0.0);
        EndViewLayout {
            omni1_center,
            omni2_center,
            sphere_center,
            omni1_contact: omni1_center + omni_drop,
            omni2_contact: omni2_center + omni_drop,
            sphere_contact: sphere_center + Vector2::new(params.rs, 0.0),
        }
    }

    /// Point at `fraction` of the way from the joint to the Link-1 wheel axle.
    pub fn along_link1(&self, fraction: f64) -> Vector2<f64> {
        self.omni1_center * fraction
    }

    pub fn along_link2(&self, fraction: f64) -> Vector2<f64> {
        self.omni2_center * fraction
    }
}
