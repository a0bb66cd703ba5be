//! `greenhaul` command-line front end.
//!
//! Exit codes: 0 feasible result, 2 infeasible or refused, 1 any error.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use greenhaul::error::{io_err, Error, Result};
use greenhaul::experiments::{self, Method};
use greenhaul::format::{self, PlanDoc, SummaryDoc};
use greenhaul::report;
use greenhaul_core::dual::{BnbConfig, SolverConfig};
use greenhaul_core::oracle::OracleConfig;
use greenhaul_core::plan::{evaluate_with, EvalOptions};
use greenhaul_core::scenario::{self, IntensityFamily, ScenarioSpec, Topology, TruckPreset};
use greenhaul_core::{Instance, ObjectiveMode};

#[derive(Parser)]
#[command(name = "greenhaul", version, about = "Carbon-aware routing, speed and charging plans for electric trucks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Carbon,
    Energy,
    Time,
}

impl From<Objective> for ObjectiveMode {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Carbon => ObjectiveMode::Carbon,
            Objective::Energy => ObjectiveMode::Energy,
            Objective::Time => ObjectiveMode::Time,
        }
    }
}

#[derive(clap::Args)]
struct Overrides {
    /// Objective (defaults to the instance's).
    #[arg(long, value_enum)]
    objective: Option<Objective>,
    /// Reservation ratio α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Deadline as a multiple of the fastest completion time.
    #[arg(long)]
    deadline_factor: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dual subgradient solver.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Iteration budget K.
        #[arg(long, default_value_t = 200)]
        iters: usize,
        /// Tolerance of the charging subproblem solver.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Accept only plans whose SoC stays non-negative on every segment.
        #[arg(long)]
        strict_soc: bool,
        /// Skip re-optimising the best route.
        #[arg(long)]
        no_polish: bool,
        /// Plan output (JSON); printed to stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Iteration log (CSV).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Grid enumeration on a small instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value_t = 4)]
        grid_t: usize,
        #[arg(long, default_value_t = 9)]
        grid_c: usize,
        #[arg(long, default_value_t = 3)]
        grid_w: usize,
        #[arg(long, default_value_t = 8)]
        max_path_len: usize,
        /// Allow the SoC to dip below zero inside a stage.
        #[arg(long)]
        lenient_soc: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic instance.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = TopologyArg::Line)]
        topology: TopologyArg,
        #[arg(long, default_value_t = 5)]
        nodes: usize,
        #[arg(long, default_value_t = 1)]
        stations: usize,
        #[arg(long, default_value_t = 2)]
        max_stops: usize,
        #[arg(long, default_value_t = 0.06)]
        grade_max: f64,
        /// `constant:V`, `diurnal:MEAN:AMPLITUDE` or `two-region[:HIGH:LOW]`.
        #[arg(long, default_value = "constant:0.39")]
        intensity: String,
        #[arg(long, value_enum, default_value_t = PresetArg::Standard)]
        preset: PresetArg,
        #[arg(long, value_enum, default_value_t = Objective::Carbon)]
        objective: Objective,
        /// Set the deadline to this multiple of the fastest completion time.
        #[arg(long)]
        deadline_factor: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a plan against an instance.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        strict_soc: bool,
    },
    /// Reservation-ratio sweep.
    SweepAlpha {
        #[arg(long, required = true, num_args = 1..)]
        instances: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.02,0.06,0.12")]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        /// Solve with the grid oracle instead of the dual method.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deadline (delay factor) sweep over all objective modes.
    SweepDeadline {
        #[arg(long, required = true, num_args = 1..)]
        instances: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1.1,1.2,1.3,1.4,1.5")]
        factors: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Line,
    Grid,
    Planar,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Standard,
    Regenerative,
}

fn parse_intensity(s: &str) -> Result<IntensityFamily> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad intensity family `{s}`")))
    };
    match parts[0] {
        "constant" => Ok(IntensityFamily::Constant(num(1)?)),
        "diurnal" => Ok(IntensityFamily::Diurnal {
            mean: num(1)?,
            amplitude: num(2)?,
        }),
        "two-region" if parts.len() == 1 => Ok(IntensityFamily::CONTRAST),
        "two-region" => Ok(IntensityFamily::TwoRegion {
            high: num(1)?,
            low: num(2)?,
        }),
        _ => Err(Error::Format(format!("bad intensity family `{s}`"))),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            io::stdout().write_all(text.as_bytes()).map_err(io_err("<stdout>"))?;
            Ok(())
        }
    }
}

fn csv_out<R: serde::Serialize>(path: Option<&Path>, rows: &[R]) -> Result<()> {
    match path {
        Some(p) => report::write_rows(File::create(p).map_err(io_err(p))?, rows),
        None => report::write_rows(io::stdout().lock(), rows),
    }
}

fn apply(instance: Instance, o: &Overrides, method: &Method) -> Result<Instance> {
    let mut inst = instance;
    if let Some(m) = o.objective {
        inst = inst.with_objective(m.into());
    }
    if let Some(a) = o.alpha {
        inst = inst.with_reservation(a);
    }
    if let Some(r) = o.deadline_factor {
        let tf = experiments::fastest_completion(&inst, method)?
            .ok_or_else(|| Error::Format("no feasible trip even without a deadline".into()))?;
        inst = inst.with_deadline(scenario::deadline_from_factor(tf, r)?);
    }
    Ok(inst)
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<Instance>> {
    paths.iter().map(|p| format::load_instance(p)).collect()
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            instance,
            overrides,
            iters,
            eps,
            strict_soc,
            no_polish,
            out,
            log,
        } => {
            let cfg = SolverConfig {
                iterations: iters,
                bnb: BnbConfig {
                    eps,
                    ..BnbConfig::default()
                },
                strict_soc,
                polish: !no_polish,
                ..SolverConfig::default()
            };
            let method = Method::Dual(cfg.clone());
            let inst = apply(format::load_instance(&instance)?, &overrides, &method)?;
            let rep = greenhaul_core::dual::run(&inst, &cfg)?;
            if let Some(p) = &log {
                report::write_iteration_log(File::create(p).map_err(io_err(p))?, &rep.log)?;
            }
            let Some(plan) = rep.plan else {
                eprintln!("no feasible plan found ({})", rep.termination.name());
                return Ok(ExitCode::from(2));
            };
            let summary = evaluate_with(
                &plan,
                &inst,
                EvalOptions {
                    strict_soc,
                    ..EvalOptions::default()
                },
            )?;
            let mut doc = PlanDoc::from_plan(&plan);
            doc.summary = Some(SummaryDoc::from(&summary));
            doc.gap_bound = rep.gap_bound;
            doc.status = Some(rep.termination.name().into());
            write_out(out.as_deref(), &(serde_json::to_string_pretty(&doc).expect("plain data") + "\n"))?;
            eprintln!(
                "{}: objective {:.6} ({}), carbon {:.3} kg, time {:.3} h, gap bound {}",
                rep.termination.name(),
                summary.objective,
                inst.params.objective.name(),
                summary.carbon_kg,
                summary.time_h,
                rep.gap_bound.map_or("n/a".into(), |g| format!("{g:.6}"))
            );
            Ok(ExitCode::from(if summary.feasible { 0 } else { 2 }))
        }
        Command::Oracle {
            instance,
            overrides,
            grid_t,
            grid_c,
            grid_w,
            max_path_len,
            lenient_soc,
            out,
        } => {
            let cfg = OracleConfig {
                g_t: grid_t,
                g_c: grid_c,
                g_w: grid_w,
                max_path_len,
                objective: None,
                strict_soc: !lenient_soc,
            };
            let method = Method::Oracle(cfg);
            let inst = match apply(format::load_instance(&instance)?, &overrides, &method) {
                Err(Error::Model(greenhaul_core::Error::OracleRefused(msg))) => {
                    eprintln!("oracle refused: {msg}");
                    return Ok(ExitCode::from(2));
                }
                r => r?,
            };
            let r = match greenhaul_core::oracle::enumerate_optimal(&inst, &cfg) {
                Err(greenhaul_core::Error::OracleRefused(msg)) => {
                    eprintln!("oracle refused: {msg}");
                    return Ok(ExitCode::from(2));
                }
                r => r?,
            };
            let (Some(plan), Some(summary)) = (r.plan, r.summary) else {
                eprintln!("no feasible grid point");
                return Ok(ExitCode::from(2));
            };
            let mut doc = PlanDoc::from_plan(&plan);
            doc.summary = Some(SummaryDoc::from(&summary));
            doc.gap_bound = Some(r.error_bound);
            doc.status = Some("grid-optimal".into());
            write_out(out.as_deref(), &(serde_json::to_string_pretty(&doc).expect("plain data") + "\n"))?;
            eprintln!(
                "grid optimum {:.6} ({}), grid error {:.6}, {} candidates",
                summary.objective,
                inst.params.objective.name(),
                r.error_bound,
                r.candidates
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen {
            seed,
            topology,
            nodes,
            stations,
            max_stops,
            grade_max,
            intensity,
            preset,
            objective,
            deadline_factor,
            out,
        } => {
            let spec = ScenarioSpec {
                seed,
                topology: match topology {
                    TopologyArg::Line => Topology::Line,
                    TopologyArg::Grid => Topology::Grid,
                    TopologyArg::Planar => Topology::RandomPlanar,
                },
                nodes,
                stations,
                grade_max,
                intensity: parse_intensity(&intensity)?,
                preset: match preset {
                    PresetArg::Standard => TruckPreset::Standard,
                    PresetArg::Regenerative => TruckPreset::RegenerativeHeavy,
                },
                max_stops,
                objective: objective.into(),
                ..ScenarioSpec::default()
            };
            let mut inst = scenario::generate(&spec)?;
            if let Some(r) = deadline_factor {
                inst = apply(
                    inst,
                    &Overrides {
                        objective: None,
                        alpha: None,
                        deadline_factor: Some(r),
                    },
                    &Method::default(),
                )?;
            }
            write_out(out.as_deref(), &(format::instance_to_string(&inst) + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            instance,
            plan,
            strict_soc,
        } => {
            let inst = format::load_instance(&instance)?;
            let plan = format::load_plan(&plan)?.to_plan();
            let s = evaluate_with(
                &plan,
                &inst,
                EvalOptions {
                    strict_soc,
                    ..EvalOptions::default()
                },
            )?;
            report::write_summary(io::stdout().lock(), &s)?;
            Ok(ExitCode::from(if s.feasible { 0 } else { 2 }))
        }
        Command::SweepAlpha {
            instances,
            alphas,
            iters,
            oracle,
            out,
        } => {
            let insts = load_all(&instances)?;
            let method = if oracle {
                Method::Oracle(OracleConfig {
                    strict_soc: false,
                    ..OracleConfig::default()
                })
            } else {
                Method::Dual(SolverConfig {
                    iterations: iters,
                    ..SolverConfig::default()
                })
            };
            let rows = experiments::sweep_alpha(&insts, &alphas, &method)?;
            csv_out(out.as_deref(), &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepDeadline {
            instances,
            factors,
            iters,
            oracle,
            out,
        } => {
            let insts = load_all(&instances)?;
            let method = if oracle {
                Method::Oracle(OracleConfig::default())
            } else {
                Method::Dual(SolverConfig {
                    iterations: iters,
                    ..SolverConfig::default()
                })
            };
            let rows = experiments::sweep_deadline(&insts, &factors, &method)?;
            csv_out(out.as_deref(), &rows)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
