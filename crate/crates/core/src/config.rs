//! Run configuration: TOML schema, defaults, validation and resolution of the
//! derived design values (prototype mounting and spring preload).
//!
//! Lengths are millimetres and angles degrees in the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ModelError;
use crate::explorer::{match_prototype_mounting, DesignBounds, MountingTarget};
use crate::geometry::{solve_configuration, MechanismParams};
use crate::stability::{calibrate_preload, FrictionModel, StabilityGrid};
use crate::statics::{
    MassComponent, MassModel, MassPlacement, SpringModel, DEFAULT_FREE_OPENING_DEG,
    PROTOTYPE_STIFFNESS, STANDARD_GRAVITY,
};
use crate::transmission::SurfaceGrid;
use crate::Error;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "INPIPE_OUTPUT_DIR";
pub const FALLBACK_OUTPUT_DIR: &str = "inpipe-out";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub mechanism: MechanismSection,
    pub prototype: PrototypeSection,
    pub mass: MassSection,
    pub spring: SpringSection,
    pub friction: FrictionSection,
    pub drivetrain: DrivetrainSection,
    pub studies: StudiesSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismSection {
    pub l1: f64,
    pub l2: f64,
    pub a: f64,
    pub b: f64,
    pub n: f64,
    pub wo: f64,
    pub ro: f64,
    pub rs: f64,
    pub dp: f64,
}

impl Default for MechanismSection {
    fn default() -> Self {
        let p = MechanismParams::default();
        MechanismSection {
            l1: p.l1,
            l2: p.l2,
            a: p.a,
            b: p.b,
            n: p.n,
            wo: p.wo,
            ro: p.ro,
            rs: p.rs,
            dp: p.dp,
        }
    }
}

impl From<MechanismSection> for MechanismParams {
    fn from(s: MechanismSection) -> Self {
        MechanismParams {
            l1: s.l1,
            l2: s.l2,
            a: s.a,
            b: s.b,
            n: s.n,
            wo: s.wo,
            ro: s.ro,
            rs: s.rs,
            dp: s.dp,
        }
    }
}

/// Mounting of the optimized design. When `a`, `b` and `n` are omitted they are
/// recovered from the target contact angle and Link-2 normal-force share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrototypeSection {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n: Option<f64>,
    pub alpha_deg: f64,
    pub fn2_share: f64,
}

impl Default for PrototypeSection {
    fn default() -> Self {
        PrototypeSection {
            a: None,
            b: None,
            n: None,
            alpha_deg: 1.6,
            fn2_share: 0.20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub index: usize,
    #[serde(default)]
    pub label: String,
    pub mass_g: f64,
    pub placement: MassPlacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassSection {
    pub total_g: f64,
    /// Gravitational acceleration [m/s^2].
    pub gravity: f64,
    /// Explicit components; the default split of `total_g` applies when absent.
    pub components: Option<Vec<ComponentSpec>>,
}

impl Default for MassSection {
    fn default() -> Self {
        MassSection {
            total_g: 750.0,
            gravity: STANDARD_GRAVITY,
            components: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpringSection {
    /// N*mm/deg.
    pub stiffness: f64,
    /// Calibrated to `target_margin` when omitted.
    pub preload_deg: Option<f64>,
    pub free_opening_deg: f64,
    pub target_margin: f64,
}

impl Default for SpringSection {
    fn default() -> Self {
        SpringSection {
            stiffness: PROTOTYPE_STIFFNESS,
            preload_deg: None,
            free_opening_deg: DEFAULT_FREE_OPENING_DEG,
            target_margin: 2.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrictionSection {
    pub mu_s: f64,
    pub mu_o: f64,
}

impl Default for FrictionSection {
    fn default() -> Self {
        let f = FrictionModel::default();
        FrictionSection {
            mu_s: f.mu_s,
            mu_o: f.mu_o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrivetrainSection {
    pub gp: f64,
    pub wheels: u32,
    /// Propulsion-to-roll leakage used for the geometry-derived matrices.
    pub krp: f64,
}

impl Default for DrivetrainSection {
    fn default() -> Self {
        DrivetrainSection {
            gp: 1.0,
            wheels: 4,
            krp: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    ForceSweep,
    Stability,
    AlphaSurface,
    Simulation,
}

impl StudyKind {
    pub const ALL: [StudyKind; 4] = [
        StudyKind::ForceSweep,
        StudyKind::Stability,
        StudyKind::AlphaSurface,
        StudyKind::Simulation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::ForceSweep => "force_sweep",
            StudyKind::Stability => "stability",
            StudyKind::AlphaSurface => "alpha_surface",
            StudyKind::Simulation => "simulation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudiesSection {
    pub enabled: Vec<StudyKind>,
    pub force_sweep: ForceSweepSection,
    pub stability: StabilitySection,
    pub surface: SurfaceSection,
    pub optimizer: OptimizerSection,
    pub simulation: SimulationSection,
}

impl Default for StudiesSection {
    fn default() -> Self {
        StudiesSection {
            enabled: StudyKind::ALL.to_vec(),
            force_sweep: ForceSweepSection::default(),
            stability: StabilitySection::default(),
            surface: SurfaceSection::default(),
            optimizer: OptimizerSection::default(),
            simulation: SimulationSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceSweepSection {
    pub ratio_start: f64,
    pub ratio_stop: f64,
    pub ratio_step: f64,
}

impl Default for ForceSweepSection {
    fn default() -> Self {
        ForceSweepSection {
            ratio_start: 0.5,
            ratio_stop: 1.0,
            ratio_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    pub mu_s_min: f64,
    pub mu_s_max: f64,
    pub mu_s_steps: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub k_steps: usize,
    /// Stricter margin reported alongside `S >= 1`; never used for classification.
    pub report_threshold: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        let g = StabilityGrid::default();
        StabilitySection {
            mu_s_min: g.mu_s_min,
            mu_s_max: g.mu_s_max,
            mu_s_steps: g.mu_s_steps,
            k_min: g.k_min,
            k_max: g.k_max,
            k_steps: g.k_steps,
            report_threshold: 1.5,
        }
    }
}

impl StabilitySection {
    pub fn grid(&self) -> StabilityGrid {
        StabilityGrid {
            mu_s_min: self.mu_s_min,
            mu_s_max: self.mu_s_max,
            mu_s_steps: self.mu_s_steps,
            k_min: self.k_min,
            k_max: self.k_max,
            k_steps: self.k_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSection {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub nb_min: f64,
    pub nb_max: f64,
    pub nb_steps: usize,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        let g = SurfaceGrid::default();
        SurfaceSection {
            a_min: g.a_min,
            a_max: g.a_max,
            a_steps: g.a_steps,
            nb_min: g.nb_min,
            nb_max: g.nb_max,
            nb_steps: g.nb_steps,
        }
    }
}

impl SurfaceSection {
    pub fn grid(&self) -> SurfaceGrid {
        SurfaceGrid {
            a_min: self.a_min,
            a_max: self.a_max,
            a_steps: self.a_steps,
            nb_min: self.nb_min,
            nb_max: self.nb_max,
            nb_steps: self.nb_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub n: (f64, f64),
    pub grid_steps: usize,
    pub tolerance_deg: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = DesignBounds::default();
        OptimizerSection {
            a: d.a,
            b: d.b,
            n: d.n,
            grid_steps: d.grid_steps,
            tolerance_deg: d.tolerance_deg,
        }
    }
}

impl OptimizerSection {
    pub fn bounds(&self) -> DesignBounds {
        DesignBounds {
            a: self.a,
            b: self.b,
            n: self.n,
            wo: None,
            grid_steps: self.grid_steps,
            tolerance_deg: self.tolerance_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub roll_deg: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub kappa_pr: f64,
    pub kappa_rp: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            roll_deg: 360.0,
            duration_s: 4.0,
            sample_rate_hz: 200.0,
            kappa_pr: 0.3,
            kappa_rp: 0.3,
        }
    }
}

fn parse_error(text: &str, err: toml::de::Error) -> Error {
    let (line, column) = err
        .span()
        .map(|span| {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            (line, column)
        })
        .unwrap_or((0, 0));
    Error::Parse {
        line,
        column,
        message: err.message().to_string(),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| parse_error(text, e))
    }

    /// SHA-256 of the canonical JSON form of the configuration, with defaults filled in.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Scenario, Error> {
        Scenario::resolve(self)
    }
}

/// Reads, parses and fully validates a configuration file.
pub fn load_config(path: &Path) -> Result<(RunConfig, Scenario), Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = RunConfig::from_toml_str(&text)?;
    let scenario = config.resolve()?;
    Ok((config, scenario))
}

/// Fully resolved inputs for every study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    /// Mechanism with the configured mounting (zero separation by default).
    pub baseline: MechanismParams,
    /// Mechanism with the optimized-design mounting.
    pub prototype: MechanismParams,
    pub masses: MassModel,
    pub total_mass_kg: f64,
    pub gravity: f64,
    pub spring: SpringModel,
    pub friction: FrictionModel,
    pub drivetrain: DrivetrainSection,
    pub studies: StudiesSection,
    pub mounting_derived: bool,
    pub preload_derived: bool,
    pub output_dir: PathBuf,
    pub config_hash: String,
}

fn check(ok: bool, invariant: &'static str, detail: impl Into<String>) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::Invalid {
            invariant,
            detail: detail.into(),
        })
    }
}

impl Scenario {
    fn resolve(config: &RunConfig) -> Result<Scenario, Error> {
        let baseline: MechanismParams = config.mechanism.into();
        baseline.validate()?;

        let m = &config.mass;
        check(
            m.total_g > 0.0,
            "total_mass_positive",
            format!("total mass {} g", m.total_g),
        )?;
        check(
            m.gravity > 0.0,
            "gravity_positive",
            format!("gravity {}", m.gravity),
        )?;
        let total_mass_kg = m.total_g * 1e-3;
        let masses = match &m.components {
            None => MassModel::default_split(total_mass_kg, m.gravity),
            Some(list) => {
                let masses = MassModel {
                    components: list
                        .iter()
                        .map(|c| MassComponent {
                            index: c.index,
                            label: c.label.clone(),
                            weight: c.mass_g * 1e-3 * m.gravity,
                            placement: c.placement,
                        })
                        .collect(),
                    gravity_dir: [0.0, -1.0],
                };
                let sum: f64 = list.iter().map(|c| c.mass_g).sum();
                check(
                    (sum - m.total_g).abs() < 1e-6,
                    "component_mass_sum",
                    format!("component masses sum to {sum} g, total is {} g", m.total_g),
                )?;
                masses
            }
        };
        masses.validate()?;

        let s = &config.spring;
        let mut spring = SpringModel {
            stiffness: s.stiffness,
            preload_deg: s.preload_deg.unwrap_or(0.0),
            free_opening_deg: s.free_opening_deg,
        };
        spring.validate()?;
        check(
            s.target_margin > 0.0,
            "target_margin_positive",
            format!("target margin {}", s.target_margin),
        )?;

        let friction = FrictionModel {
            mu_s: config.friction.mu_s,
            mu_o: config.friction.mu_o,
        };
        friction.validate()?;

        let d = &config.drivetrain;
        check(d.gp > 0.0, "gear_gain_positive", format!("gp {}", d.gp))?;
        check(d.wheels >= 1, "wheel_count", "at least one driven wheel")?;
        check(d.krp.is_finite(), "finite", "krp must be finite")?;

        let st = &config.studies;
        let fs = &st.force_sweep;
        check(
            fs.ratio_step > 0.0 && fs.ratio_start > 0.0 && fs.ratio_start <= fs.ratio_stop,
            "ratio_grid",
            format!(
                "ratio grid {}..{} step {}",
                fs.ratio_start, fs.ratio_stop, fs.ratio_step
            ),
        )?;
        st.stability.grid().validate()?;
        st.surface.grid().validate()?;
        st.optimizer.bounds().validate()?;
        let sim = &st.simulation;
        check(
            sim.duration_s > 0.0,
            "duration_positive",
            format!("{} s", sim.duration_s),
        )?;
        check(
            sim.sample_rate_hz >= 50.0,
            "sample_rate_min",
            format!("{} Hz", sim.sample_rate_hz),
        )?;
        for (name, k) in [("kappa_pr", sim.kappa_pr), ("kappa_rp", sim.kappa_rp)] {
            check(
                (0.0..1.0).contains(&k),
                "kappa_range",
                format!("{name} = {k}"),
            )?;
        }

        let p = &config.prototype;
        let given = [p.a, p.b, p.n];
        let mounting_derived = given.iter().all(Option::is_none);
        check(
            mounting_derived || given.iter().all(Option::is_some),
            "prototype_mounting_partial",
            "prototype a, b and n must be given together or not at all",
        )?;
        let preload_derived = s.preload_deg.is_none();

        let mut prototype = match (p.a, p.b, p.n) {
            (Some(a), Some(b), Some(n)) => baseline.with_mounting(a, b, n),
            _ => baseline,
        };
        if !mounting_derived {
            prototype.validate()?;
            solve_configuration(&prototype)?;
        }
        let target = MountingTarget {
            alpha: p.alpha_deg.to_radians(),
            fn2_share: p.fn2_share,
        };
        // the share depends weakly on the clamping torque through the weight
        // moments, so mounting and preload are settled together
        let rounds = match (mounting_derived, preload_derived) {
            (false, false) => 0,
            (true, true) => 3,
            _ => 1,
        };
        for _ in 0..rounds {
            if mounting_derived {
                let (a, n_minus_b) =
                    match_prototype_mounting(&baseline, &masses, &spring, &target)?;
                prototype = baseline.with_separation(a, n_minus_b);
            }
            if preload_derived {
                spring.preload_deg =
                    calibrate_preload(&prototype, &masses, &spring, &friction, s.target_margin)?;
            }
        }

        let output_dir = config
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR));

        Ok(Scenario {
            baseline,
            prototype,
            masses,
            total_mass_kg,
            gravity: m.gravity,
            spring,
            friction,
            drivetrain: *d,
            studies: st.clone(),
            mounting_derived,
            preload_derived,
            output_dir,
            config_hash: config.hash(),
        })
    }
}
