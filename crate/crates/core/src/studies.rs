//! The canonical parameter studies: each writes a CSV, an SVG and, where
//! useful, a JSON summary into the output directory.

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::config::{Scenario, StudyKind};
use crate::dynamics::{
    compare_configurations, generate_roll_trajectory, BodyModel, ChannelStats, ComparisonReport,
};
use crate::error::ModelError;
use crate::explorer::{minimize_contact_angle, DesignOptimum};
use crate::geometry::{contact_angle, solve_configuration};
use crate::report::{write_json, write_text, Cell, Table};
use crate::stability::{
    critical_boundary, evaluate_stability, stability_domain_map, BoundaryPoint, StabilityMap,
    StabilityResult,
};
use crate::statics::{normal_force_sweep, ratio_grid, ForceSweep};
use crate::svg::{heat_map, line_plot, Contour, Field, Marker, Series};
use crate::transmission::{
    alpha_surface, build_transmission, stress_test_matrix, AlphaSurface, TransmissionMatrix,
};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StudyRecord {
    pub name: String,
    /// Data rows in the study's CSV.
    pub rows: usize,
    pub output_files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub studies: Vec<StudyRecord>,
}

fn in_study<T>(study: &'static str, r: Result<T, impl Into<Error>>) -> Result<T, Error> {
    r.map_err(|e| Error::Study {
        study,
        source: Box::new(e.into()),
    })
}

fn emit(dir: &Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<(), Error> {
    write_text(&dir.join(name), text)?;
    files.push(name.to_string());
    Ok(())
}

fn emit_json<T: Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
    files: &mut Vec<String>,
) -> Result<(), Error> {
    write_json(&dir.join(name), value)?;
    files.push(name.to_string());
    Ok(())
}

pub fn force_sweep_study(s: &Scenario, dir: &Path) -> Result<(StudyRecord, ForceSweep), Error> {
    const NAME: &str = "force_sweep";
    let fs = &s.studies.force_sweep;
    let ratios = ratio_grid(fs.ratio_start, fs.ratio_stop, fs.ratio_step);
    let sweep = normal_force_sweep(&s.prototype, &s.masses, &s.spring, &ratios);
    if let Some((ratio, err)) = sweep.skipped.first() {
        return in_study(
            NAME,
            Err(ModelError::Unreachable(format!("L2/L1 = {ratio}: {err}"))),
        );
    }

    let mut table = Table::new(&[
        "ratio", "FN0_N", "FN1_N", "FN2_N", "share0", "share1", "share2",
    ]);
    for r in &sweep.rows {
        let f = &r.forces;
        table.push(vec![
            r.ratio.into(),
            f.fn0.into(),
            f.fn1.into(),
            f.fn2.into(),
            r.shares[0].into(),
            r.shares[1].into(),
            r.shares[2].into(),
        ]);
    }
    let series: Vec<Series> = (0..3)
        .map(|k| Series {
            label: format!("FN{k} share [%]"),
            points: sweep
                .rows
                .iter()
                .map(|r| (r.ratio, 100.0 * r.shares[k]))
                .collect(),
        })
        .collect();

    let mut files = Vec::new();
    emit(dir, "force_sweep.csv", &table.to_csv(), &mut files)?;
    emit(
        dir,
        "force_sweep.svg",
        &line_plot(
            "Normal-force distribution",
            "L2 / L1",
            "share of total normal force [%]",
            &series,
        ),
        &mut files,
    )?;
    let record = StudyRecord {
        name: NAME.into(),
        rows: table.rows.len(),
        output_files: files,
    };
    Ok((record, sweep))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityAnchor {
    pub mu_s: f64,
    pub mu_o: f64,
    pub stiffness: f64,
    pub preload_deg: f64,
    pub result: StabilityResult,
    pub report_threshold: f64,
    pub meets_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityStudy {
    pub anchor: StabilityAnchor,
    pub boundary: Vec<BoundaryPoint>,
    #[serde(skip)]
    pub map: StabilityMap,
}

pub fn stability_study(s: &Scenario, dir: &Path) -> Result<(StudyRecord, StabilityStudy), Error> {
    const NAME: &str = "stability";
    let grid = s.studies.stability.grid();
    let map = in_study(
        NAME,
        stability_domain_map(&s.prototype, &s.masses, &s.spring, &s.friction, &grid),
    )?;
    let boundary = in_study(
        NAME,
        critical_boundary(&s.prototype, &s.masses, &s.spring, &s.friction, &grid),
    )?;
    let result = in_study(
        NAME,
        evaluate_stability(&s.prototype, &s.masses, &s.spring, &s.friction),
    )?;
    let threshold = s.studies.stability.report_threshold;
    let anchor = StabilityAnchor {
        mu_s: s.friction.mu_s,
        mu_o: s.friction.mu_o,
        stiffness: s.spring.stiffness,
        preload_deg: s.spring.preload_deg,
        meets_threshold: result.meets(threshold),
        result,
        report_threshold: threshold,
    };

    let mut table = Table::new(&["mu_s", "K", "S", "stable"]);
    for (i, &mu) in map.mu_s.iter().enumerate() {
        for (j, &k) in map.k.iter().enumerate() {
            let m = map.get(i, j);
            table.push(vec![
                mu.into(),
                k.into(),
                m.into(),
                m.is_some_and(|v| v >= 1.0).into(),
            ]);
        }
    }
    let field = Field {
        x: map.mu_s.clone(),
        y: map.k.clone(),
        values: map.margins.clone(),
    };
    let markers = [Marker {
        label: format!("S = {:.2}", result.margin),
        x: s.friction.mu_s,
        y: s.spring.stiffness,
    }];
    let contours = [
        Contour {
            level: 1.0,
            emphasized: true,
        },
        Contour {
            level: threshold,
            emphasized: false,
        },
    ];
    let svg = heat_map(
        "Safety margin S (white: S = 1)",
        "static friction coefficient mu_s",
        "spring stiffness K [N*mm/deg]",
        &field,
        &contours,
        &markers,
    );

    let study = StabilityStudy {
        anchor,
        boundary,
        map,
    };
    let mut files = Vec::new();
    emit(dir, "stability_map.csv", &table.to_csv(), &mut files)?;
    emit(dir, "stability_map.svg", &svg, &mut files)?;
    emit_json(dir, "stability_boundary.json", &study, &mut files)?;
    let record = StudyRecord {
        name: NAME.into(),
        rows: table.rows.len(),
        output_files: files,
    };
    Ok((record, study))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceStudy {
    pub surface: AlphaSurface,
    pub optimum: DesignOptimum,
}

pub fn optimize(s: &Scenario) -> Result<DesignOptimum, Error> {
    Ok(minimize_contact_angle(
        &s.baseline,
        &s.studies.optimizer.bounds(),
    )?)
}

pub fn alpha_surface_study(s: &Scenario, dir: &Path) -> Result<(StudyRecord, SurfaceStudy), Error> {
    const NAME: &str = "alpha_surface";
    let surface = in_study(NAME, alpha_surface(&s.baseline, &s.studies.surface.grid()))?;
    let optimum = in_study(NAME, optimize(s))?;

    let mut table = Table::new(&["a", "n_minus_b", "alpha_deg"]);
    for (i, &a) in surface.a.iter().enumerate() {
        for (j, &nb) in surface.n_minus_b.iter().enumerate() {
            table.push(vec![
                a.into(),
                nb.into(),
                surface.alpha[i][j].map(f64::to_degrees).into(),
            ]);
        }
    }
    let field = Field {
        x: surface.a.clone(),
        y: surface.n_minus_b.clone(),
        values: surface
            .alpha
            .iter()
            .map(|col| col.iter().map(|v| v.map(f64::to_degrees)).collect())
            .collect(),
    };
    let prototype_alpha = in_study(NAME, contact_angle(&s.prototype))?.to_degrees();
    let mut contours: Vec<Contour> = (1..=6)
        .map(|k| Contour {
            level: 5.0 * k as f64,
            emphasized: false,
        })
        .collect();
    contours.push(Contour {
        level: prototype_alpha,
        emphasized: true,
    });
    let markers = [
        Marker {
            label: format!("optimum {:.2} deg", optimum.alpha.to_degrees()),
            x: optimum.a,
            y: optimum.n - optimum.b,
        },
        Marker {
            label: format!("prototype {prototype_alpha:.2} deg"),
            x: s.prototype.a,
            y: s.prototype.n_minus_b(),
        },
    ];
    let svg = heat_map(
        "Contact angle alpha [deg]",
        "longitudinal offset a [mm]",
        "lateral separation n - b [mm]",
        &field,
        &contours,
        &markers,
    );

    let mut files = Vec::new();
    emit(dir, "alpha_surface.csv", &table.to_csv(), &mut files)?;
    emit(dir, "alpha_surface.svg", &svg, &mut files)?;
    let record = StudyRecord {
        name: NAME.into(),
        rows: table.rows.len(),
        output_files: files,
    };
    Ok((record, SurfaceStudy { surface, optimum }))
}

/// Transmission variants compared in the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationCase {
    /// Prototype mounting, small contact angle.
    Optimized,
    /// Zero-separation mounting.
    Baseline,
    /// Baseline diagonal with imposed leakage.
    Stress,
}

impl SimulationCase {
    pub const ALL: [SimulationCase; 3] = [
        SimulationCase::Optimized,
        SimulationCase::Baseline,
        SimulationCase::Stress,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimulationCase::Optimized => "optimized",
            SimulationCase::Baseline => "baseline",
            SimulationCase::Stress => "stress",
        }
    }
}

impl FromStr for SimulationCase {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        SimulationCase::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| {
                ModelError::invalid(
                    "simulation_case",
                    format!("unknown configuration {s:?}; expected optimized, baseline or stress"),
                )
            })
    }
}

/// Body shared by every simulated configuration: the prototype geometry.
pub fn simulation_body(s: &Scenario) -> Result<BodyModel, ModelError> {
    let config = solve_configuration(&s.prototype)?;
    let mut body = BodyModel::from_geometry(&s.prototype, &config, s.total_mass_kg);
    body.g = s.gravity;
    Ok(body)
}

pub fn case_transmission(
    s: &Scenario,
    case: SimulationCase,
) -> Result<TransmissionMatrix, ModelError> {
    let d = &s.drivetrain;
    let baseline = || {
        build_transmission(
            &s.baseline,
            d.gp,
            d.wheels,
            contact_angle(&s.baseline)?,
            d.krp,
        )
    };
    match case {
        SimulationCase::Optimized => build_transmission(
            &s.prototype,
            d.gp,
            d.wheels,
            contact_angle(&s.prototype)?,
            d.krp,
        ),
        SimulationCase::Baseline => baseline(),
        SimulationCase::Stress => {
            let sim = &s.studies.simulation;
            stress_test_matrix(&baseline()?, sim.kappa_pr, sim.kappa_rp)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CaseSummary {
    name: String,
    alpha_deg: f64,
    kpp: f64,
    kpr: f64,
    krp: f64,
    krr: f64,
    tau_p: ChannelStats,
    tau_r: ChannelStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SimulationSummary {
    unit: &'static str,
    roll_deg: f64,
    duration_s: f64,
    sample_rate_hz: f64,
    configs: Vec<CaseSummary>,
    ranking_by_tau_p_std: Vec<String>,
}

pub fn simulation_study(
    s: &Scenario,
    dir: &Path,
    cases: &[SimulationCase],
) -> Result<(StudyRecord, ComparisonReport), Error> {
    const NAME: &str = "simulation";
    let sim = &s.studies.simulation;
    let body = in_study(NAME, simulation_body(s))?;
    let traj = in_study(
        NAME,
        generate_roll_trajectory(
            sim.roll_deg.to_radians(),
            sim.duration_s,
            sim.sample_rate_hz,
        ),
    )?;
    let configs = cases
        .iter()
        .map(|&c| case_transmission(s, c).map(|ta| (c.name().to_string(), ta)))
        .collect::<Result<Vec<_>, _>>();
    let configs = in_study(NAME, configs)?;
    let report = in_study(NAME, compare_configurations(&body, &configs, &traj))?;

    let mut table = Table::new(&["t", "tau_p", "tau_r", "config_name"]);
    for e in &report.entries {
        for smp in &e.trace.samples {
            table.push(vec![
                smp.t.into(),
                smp.tau_p.into(),
                smp.tau_r.into(),
                Cell::Text(e.name.clone()),
            ]);
        }
    }
    let series: Vec<Series> = report
        .entries
        .iter()
        .map(|e| Series {
            label: e.name.clone(),
            points: e.trace.samples.iter().map(|p| (p.t, p.tau_p)).collect(),
        })
        .collect();
    let summary = SimulationSummary {
        unit: "N*mm",
        roll_deg: sim.roll_deg,
        duration_s: sim.duration_s,
        sample_rate_hz: sim.sample_rate_hz,
        configs: report
            .entries
            .iter()
            .map(|e| CaseSummary {
                name: e.name.clone(),
                alpha_deg: e.transmission.alpha.to_degrees(),
                kpp: e.transmission.kpp,
                kpr: e.transmission.kpr,
                krp: e.transmission.krp,
                krr: e.transmission.krr,
                tau_p: e.trace.tau_p,
                tau_r: e.trace.tau_r,
            })
            .collect(),
        ranking_by_tau_p_std: report.ranking.clone(),
    };

    let mut files = Vec::new();
    emit(dir, "torque_traces.csv", &table.to_csv(), &mut files)?;
    emit(
        dir,
        "torque_traces.svg",
        &line_plot(
            "Propulsion motor command during roll",
            "time [s]",
            "tau_p [N*mm]",
            &series,
        ),
        &mut files,
    )?;
    emit_json(dir, "simulation_summary.json", &summary, &mut files)?;
    let record = StudyRecord {
        name: NAME.into(),
        rows: table.rows.len(),
        output_files: files,
    };
    Ok((record, report))
}

/// Runs every enabled study into `dir` and writes `manifest.json`.
pub fn run_canonical_studies(s: &Scenario, dir: &Path) -> Result<Manifest, Error> {
    let mut studies = Vec::new();
    for kind in StudyKind::ALL {
        if !s.studies.enabled.contains(&kind) {
            continue;
        }
        let record = match kind {
            StudyKind::ForceSweep => force_sweep_study(s, dir)?.0,
            StudyKind::Stability => stability_study(s, dir)?.0,
            StudyKind::AlphaSurface => alpha_surface_study(s, dir)?.0,
            StudyKind::Simulation => simulation_study(s, dir, &SimulationCase::ALL)?.0,
        };
        studies.push(record);
    }
    let manifest = Manifest {
        config_hash: s.config_hash.clone(),
        studies,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
