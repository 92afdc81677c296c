use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use inpipe_core::config::{load_config, RunConfig, Scenario};
use inpipe_core::geometry::solve_configuration;
use inpipe_core::statics::spring_clamped_forces;
use inpipe_core::studies::{
    alpha_surface_study, force_sweep_study, optimize, run_canonical_studies, simulation_study,
    stability_study, SimulationCase,
};
use inpipe_core::Error;

/// Kinematic, static and inverse-dynamic studies of a V-shaped in-pipe robot.
#[derive(Debug, Parser)]
#[command(name = "inpipe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file, or `default` for the built-in prototype values.
    #[arg(long, default_value = "default")]
    config: String,
    /// Output directory; overrides the config file and INPIPE_OUTPUT_DIR.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a configuration and print the resolved scenario.
    ConfigCheck(Common),
    /// Report the arm configuration and contact angle.
    Geometry(Common),
    /// Contact forces and the normal-force sweep over L2/L1.
    Statics(Common),
    /// Safety-margin map over (mu_s, K) and the S = 1 boundary.
    Stability(Common),
    /// Contact angle over the mounting plane.
    AlphaSurface(Common),
    /// Inverse-dynamics comparison of transmission configurations.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of optimized, baseline, stress.
        #[arg(
            long,
            default_value = "optimized,baseline,stress",
            value_delimiter = ','
        )]
        configs: Vec<String>,
    },
    /// Minimize the contact angle over the mounting offsets.
    Optimize(Common),
    /// Run every enabled study and write the manifest.
    Studies(Common),
}

fn load(common: &Common) -> Result<Scenario, Error> {
    let mut scenario = if common.config == "default" {
        RunConfig::default().resolve()?
    } else {
        load_config(Path::new(&common.config))?.1
    };
    if let Some(dir) = &common.output {
        scenario.output_dir = dir.clone();
    }
    Ok(scenario)
}

fn written(dir: &Path, files: &[String]) {
    for f in files {
        println!("wrote {}", dir.join(f).display());
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::ConfigCheck(c) => {
            let s = load(&c)?;
            let p = &s.prototype;
            println!("ok config_hash={}", s.config_hash);
            println!(
                "prototype a={:.4} b={:.4} n={:.4} mm ({})",
                p.a,
                p.b,
                p.n,
                if s.mounting_derived {
                    "derived"
                } else {
                    "configured"
                }
            );
            println!(
                "spring K={} N*mm/deg preload={:.4} deg ({})",
                s.spring.stiffness,
                s.spring.preload_deg,
                if s.preload_derived {
                    "calibrated"
                } else {
                    "configured"
                }
            );
            println!("output_dir={}", s.output_dir.display());
        }
        Command::Geometry(c) => {
            let s = load(&c)?;
            for (name, params) in [("baseline", &s.baseline), ("prototype", &s.prototype)] {
                let g = solve_configuration(params)?;
                println!(
                    "{name}: alpha_deg={:.4} alpha2_deg={:.4} theta_deg={:.4} hs={:.4} mm hwp={:.4} mm",
                    g.alpha.to_degrees(),
                    g.alpha2.to_degrees(),
                    g.theta.to_degrees(),
                    g.hs,
                    g.hwp
                );
            }
        }
        Command::Statics(c) => {
            let s = load(&c)?;
            let f = spring_clamped_forces(&s.prototype, &s.masses, &s.spring)?;
            let sh = f.shares();
            println!(
                "FN0={:.4} N FN1={:.4} N FN2={:.4} N shares={:.4},{:.4},{:.4} MJ={:.4} N*mm",
                f.fn0, f.fn1, f.fn2, sh[0], sh[1], sh[2], f.mj
            );
            let (record, _) = force_sweep_study(&s, &s.output_dir)?;
            written(&s.output_dir, &record.output_files);
        }
        Command::Stability(c) => {
            let s = load(&c)?;
            let (record, study) = stability_study(&s, &s.output_dir)?;
            let a = &study.anchor;
            println!(
                "S={:.6} reserve={:.6} stable={} meets_{}={}",
                a.result.margin,
                a.result.reserve,
                a.result.stable,
                a.report_threshold,
                a.meets_threshold
            );
            written(&s.output_dir, &record.output_files);
        }
        Command::AlphaSurface(c) => {
            let s = load(&c)?;
            let (record, study) = alpha_surface_study(&s, &s.output_dir)?;
            let o = &study.optimum;
            println!(
                "optimum a={:.4} b={:.4} n={:.4} mm alpha_deg={:.4}",
                o.a,
                o.b,
                o.n,
                o.alpha.to_degrees()
            );
            written(&s.output_dir, &record.output_files);
        }
        Command::Simulate { common, configs } => {
            let s = load(&common)?;
            let cases = configs
                .iter()
                .map(|c| c.parse::<SimulationCase>())
                .collect::<Result<Vec<_>, _>>()?;
            let (record, report) = simulation_study(&s, &s.output_dir, &cases)?;
            for e in &report.entries {
                println!(
                    "{}: alpha_deg={:.4} tau_p_mean={:.6} tau_p_std={:.6} tau_r_std={:.6} N*mm",
                    e.name,
                    e.transmission.alpha.to_degrees(),
                    e.trace.tau_p.mean,
                    e.trace.tau_p.std,
                    e.trace.tau_r.std
                );
            }
            println!("ranking={}", report.ranking.join(","));
            written(&s.output_dir, &record.output_files);
        }
        Command::Optimize(c) => {
            let s = load(&c)?;
            let o = optimize(&s)?;
            println!(
                "a={:.6} b={:.6} n={:.6} mm alpha_deg={:.6} grid_alpha_deg={:.6} evaluations={}",
                o.a,
                o.b,
                o.n,
                o.alpha.to_degrees(),
                o.grid_alpha.to_degrees(),
                o.evaluations
            );
        }
        Command::Studies(c) => {
            let s = load(&c)?;
            let manifest = run_canonical_studies(&s, &s.output_dir)?;
            for st in &manifest.studies {
                println!("{}: rows={}", st.name, st.rows);
                written(&s.output_dir, &st.output_files);
            }
            println!("wrote {}", s.output_dir.join("manifest.json").display());
        }
    }
    Ok(())
}

fn error_line(err: &Error) -> String {
    let message = err.to_string().replace(['\n', '\r'], " ");
    let invariant = match err.model() {
        Some(inpipe_core::ModelError::Invalid { invariant, .. }) => {
            format!(" invariant={invariant}")
        }
        _ => String::new(),
    };
    format!(
        "error kind={} code={}{invariant} message={:?}",
        err.kind(),
        err.exit_code(),
        message
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_line(&err));
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
