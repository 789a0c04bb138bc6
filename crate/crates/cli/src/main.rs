//! `pinn-forge`: train physics-informed networks and run the convergence
//! experiments from the command line.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pinn_core::exec::Exec;
use pinn_core::experiments::{
    bound_check, run_hybrid_advection, run_overfit_demo, run_pde_solver_heat, BoundCheckConfig, HeatSolveConfig,
    HybridConfig, OverfitConfig, OverfitKind,
};
use pinn_core::network::{Arch, MlpParams};
use pinn_core::problem::{rng_for, Stream};
use pinn_core::trainer::{train, write_metrics};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "pinn-forge", version, about = "Physics-informed neural network training and experiments")]
struct Cli {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Friction,
    Heat,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Reduced,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network from a JSON configuration.
    Train {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate the overfitting constructions across sharpness values.
    OverfitDemo {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Comma-separated sharpness values.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        /// Monte Carlo points per term.
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rate experiment of the Sobolev-regularized hybrid advection model.
    HybridAdvection {
        #[arg(long, value_enum, default_value = "reduced")]
        scale: Scale,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the heat problem with a Sobolev-regularized PINN.
    SolveHeat {
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        n_e: Option<usize>,
        #[arg(long)]
        n_r: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        lambda_t: Option<f64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check derivative sups of random networks against the a priori bound.
    BoundCheck {
        #[arg(long, default_value_t = 100)]
        networks: usize,
        #[arg(long, default_value_t = 2)]
        k_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct ErrorReport {
    error: String,
    kind: &'static str,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Train { config, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg: RunConfig = serde_json::from_str(&text).map_err(pinn_core::Error::from)?;
            let spec = cfg.spec()?;
            let arch = Arch::new(cfg.arch.h, cfg.arch.d, spec.problem.d1(), spec.problem.d2)?;
            let init = MlpParams::init(arch, &mut rng_for(cfg.seed, Stream::Init));
            let res = train(&init, &spec, &cfg.train, exec)?;
            fs::create_dir_all(&out)?;
            write_metrics(&out.join("metrics.csv"), &res.history)?;
            res.best.save(&out.join("checkpoint.json"))?;
            #[derive(Serialize)]
            struct TrainSummary<'a> {
                lambdas: pinn_core::risk::Lambdas,
                best_step: usize,
                best: &'a pinn_core::risk::RiskReport,
            }
            let summary = TrainSummary { lambdas: spec.lambdas, best_step: res.best_step, best: &res.best_report };
            write_json(&out.join("result.json"), &summary)?;
            println!("best risk {} at step {}", res.best_report.total, res.best_step);
        }
        Command::OverfitDemo { kind, p_grid, mc, seed, out } => {
            let mut cfg = OverfitConfig::for_kind(match kind {
                Kind::Friction => OverfitKind::Friction,
                Kind::Heat => OverfitKind::Heat,
            });
            cfg.seed = seed;
            if let Some(g) = p_grid {
                cfg.p_grid = g;
            }
            if let Some(m) = mc {
                cfg.mc.n_interior = m;
                if cfg.mc.n_boundary > 0 {
                    cfg.mc.n_boundary = m;
                }
            }
            let res = run_overfit_demo(&cfg, exec)?;
            fs::create_dir_all(&out)?;
            let mut w = fs::File::create(out.join("overfit.csv"))?;
            writeln!(w, "p,empirical,theoretical,theoretical_se,og")?;
            for r in &res.rows {
                writeln!(w, "{},{},{},{},{}", r.p, r.empirical, r.theoretical, r.theoretical_se, r.og)?;
                println!("p = {:>8}  empirical {:.3e}  theoretical {:.3e} ± {:.1e}", r.p, r.empirical, r.theoretical, r.theoretical_se);
            }
            if let Some(d) = res.delta {
                println!("minimum abscissa gap delta = {d:.6e}");
            }
            write_json(&out.join("result.json"), &res)?;
        }
        Command::HybridAdvection { scale, epochs, lr, seeds, n_grid, out } => {
            let mut cfg = match scale {
                Scale::Reduced => HybridConfig::reduced(),
                Scale::Paper => HybridConfig::paper(),
            };
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(l) = lr {
                cfg.lr = l;
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(g) = n_grid {
                cfg.n_grid = g;
            }
            let res = run_hybrid_advection(&cfg, exec)?;
            fs::create_dir_all(&out)?;
            for r in &res.rows {
                write_metrics(&out.join(format!("metrics_n{}_seed{}.csv", r.n, r.seed)), &r.history)?;
            }
            for s in &res.summary {
                println!("n = {:>5}  mean err {:.4e}  mean ln PI {:.3}", s.n, s.mean_err, s.mean_ln_pi);
            }
            println!("log-log slope {:.3}", res.fit.slope);
            write_json(&out.join("result.json"), &res)?;
        }
        Command::SolveHeat { epochs, n_e, n_r, width, lambda_t, lr, seed, out } => {
            let d = HeatSolveConfig::default();
            let cfg = HeatSolveConfig {
                epochs: epochs.unwrap_or(d.epochs),
                n_e: n_e.unwrap_or(d.n_e),
                n_r: n_r.unwrap_or(d.n_r),
                width: width.unwrap_or(d.width),
                lambda_t: lambda_t.unwrap_or(d.lambda_t),
                lr: lr.unwrap_or(d.lr),
                seed,
                ..d
            };
            let res = run_pde_solver_heat(&cfg, exec)?;
            fs::create_dir_all(&out)?;
            write_metrics(&out.join("metrics.csv"), &res.train.history)?;
            res.train.best.save(&out.join("checkpoint.json"))?;
            write_json(&out.join("result.json"), &res.summary)?;
            println!(
                "boundary MSE {:.3e}, residual MSE {:.3e} at step {}",
                res.summary.boundary_mse, res.summary.residual_mse, res.summary.best_step
            );
        }
        Command::BoundCheck { networks, k_max, seed, out } => {
            let cfg = BoundCheckConfig { networks, k_max, seed, ..BoundCheckConfig::default() };
            let res = bound_check(&cfg, exec)?;
            fs::create_dir_all(&out)?;
            write_json(&out.join("result.json"), &res)?;
            println!("{} checks, {} violations, max ratio {:.3e}", res.checks, res.violations, res.max_ratio);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<pinn_core::Error>().map_or("io", pinn_core::Error::kind);
            let report = ErrorReport { error: format!("{e:#}"), kind };
            eprintln!("{}", serde_json::to_string(&report).expect("serializable"));
            ExitCode::FAILURE
        }
    }
}
