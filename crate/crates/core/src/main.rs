use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cornerlab::cli::{self, Output, RunConfig, RunError, RunReport};
use cornerlab::geometry::build_mesh;
use cornerlab::geometry::vtk::write_vtk;
use cornerlab::specfun::BesselZeroTable;

#[derive(Parser)]
#[command(name = "cornerlab", version, about = "Corner scattering experiments for anisotropic transmission problems")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Built-in scenario; optional when the config file names one.
    scenario: Option<String>,
    /// TOML configuration layered over the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set mesh.h=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Number of refinement levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = self.set.clone();
        if let Some(n) = self.levels {
            o.push(format!("mesh.levels={n}"));
        }
        o
    }

    fn load(&self) -> Result<RunConfig, RunError> {
        let mut cfg = cli::load_config(self.scenario.as_deref(), self.config.as_deref(), &self.overrides())?;
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        if cfg.output_dir.is_none() {
            cfg.output_dir = Some(cli::default_output_dir(&cfg.scenario));
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json and its artifacts.
    Run(ConfigArgs),
    /// List the built-in scenarios.
    ListScenarios {
        #[arg(long)]
        json: bool,
    },
    /// Print the first positive zeros of J_m.
    BesselZeros {
        #[arg(long, default_value_t = 0)]
        order: u32,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Mesh one level of a scenario and write mesh.vtk with its statistics.
    MeshDump {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error [{}]: {e}", e.kind());
    ExitCode::from(e.exit_code() as u8)
}

fn run(args: &ConfigArgs) -> ExitCode {
    let cfg = match args.load() {
        Ok(c) => c,
        Err(e) => {
            let dir = args.out.clone().or_else(|| args.scenario.as_deref().map(cli::default_output_dir));
            if let Some(d) = dir {
                let mut r = RunReport::new(args.scenario.as_deref().unwrap_or(""), "", serde_json::Value::Null);
                r.fail(&e);
                if let Err(io) = Output::new(Some(&d)).and_then(|o| o.report(&r)) {
                    eprintln!("could not write the error report: {io}");
                }
            }
            return fail(&e);
        }
    };
    let outcome = cli::run_with_threads(&cfg, args.threads);
    for l in &outcome.report.levels {
        println!(
            "level {} h={:.4} unknowns={} far-field norm={:.6e}{}",
            l.level,
            l.h,
            l.solver.unknowns,
            l.farfield_norm,
            l.farfield_error.map(|e| format!(" error={e:.4e}")).unwrap_or_default()
        );
    }
    for c in &outcome.report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(d) = &cfg.output_dir {
        println!("report: {}", d.join("report.json").display());
    }
    match &outcome.error {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    }
}

fn mesh_dump(args: &ConfigArgs, level: usize) -> Result<(), RunError> {
    let cfg = args.load()?;
    let domain = cfg.require_domain()?;
    let ms = cfg.require_mesh()?;
    let tr = cfg.require_truncation()?;
    let mesh = build_mesh(domain, ms.level_h(level), tr.radius, tr.pml_width, ms.corner_grading)?;
    let out = Output::new(cfg.output_dir.as_deref())?;
    out.write_with("mesh.vtk", |f| write_vtk(f, &mesh, &[]))?;
    println!("{}", serde_json::to_string_pretty(&mesh.stats()).unwrap_or_default());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::Run(a) => run(&a),
        Command::ListScenarios { json } => {
            if json {
                println!("{}", serde_json::to_string_pretty(cli::catalog()).unwrap_or_default());
            } else {
                for s in cli::catalog() {
                    let kappa = s.kappa.map(|k| format!(" kappa={k}")).unwrap_or_default();
                    let solver = if s.solver { "" } else { " no-solver" };
                    println!("{:<20} {}{kappa}{solver}\n{:<20} {}", s.name, s.anchor, "", s.summary);
                }
            }
            ExitCode::SUCCESS
        }
        Command::BesselZeros { order, count } => match BesselZeroTable::<f64>::new(order, count) {
            Ok(t) => {
                for k in 1..=count {
                    println!("{k} {:.15}", t.get(k).unwrap_or(f64::NAN));
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e.into()),
        },
        Command::MeshDump { config, level } => match mesh_dump(&config, level) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
    }
}
