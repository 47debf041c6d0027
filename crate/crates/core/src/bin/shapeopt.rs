use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shapeopt::adjoint::solve_adjoint;
use shapeopt::assembly::Spaces;
use shapeopt::geometry::{cells_for_size, BoundaryCurve, Mesh};
use shapeopt::io::{self, RunConfig, TraceWriter};
use shapeopt::optimizer::{descend_with, evaluate, gradient_check, initial_curve, OptimizerConfig};
use shapeopt::state::StateSolver;
use shapeopt::Error;

#[derive(Parser)]
#[command(name = "shapeopt", version, about = "Shape optimization of a Boussinesq container bottom")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full descent from a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Descent from one of the preset initial curves.
    Case {
        /// Preset number, 1 to 5.
        id: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Compare adjoint directional derivatives with central differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Number of random directions.
        #[arg(long, default_value_t = 3)]
        dirs: usize,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative error above which the check fails.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Solve state and adjoint once; write fields, gradient and cost.
    SolveOnce {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: CurveSource,
    },
    /// Write the state and adjoint fields as VTK point data.
    ExportFields {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: CurveSource,
    },
}

/// Overrides applied on top of the configuration file, if any.
#[derive(Args)]
struct Common {
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    curve_n: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gr: Option<f64>,
    /// Output directory; defaults to $SHAPEOPT_OUT_DIR, then `out`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CurveSource {
    /// Curve file; when absent the preset given by `--case` is used.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    case: u8,
}

impl Common {
    fn resolve(&self, file: Option<&Path>) -> Result<(OptimizerConfig, PathBuf), Error> {
        let mut rc = match file {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        rc.h = self.h.or(rc.h);
        rc.curve_n = self.curve_n.or(rc.curve_n);
        rc.max_iters = self.max_iters.or(rc.max_iters);
        rc.tau = self.tau.or(rc.tau);
        rc.gr = self.gr.or(rc.gr);
        let cfg = rc.to_optimizer_config()?;
        let out = match &self.out_dir {
            Some(p) => p.clone(),
            None => io::resolve_out_dir(rc.out_dir.as_deref().map(Path::new)),
        };
        Ok((cfg, out))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::NonConvergence { .. } | Error::Solver(_) | Error::Geometry { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn dispatch(cmd: Command) -> Result<ExitCode, Error> {
    match cmd {
        Command::Run { config, common } => {
            let (cfg, out) = common.resolve(Some(&config))?;
            let case = cfg.preset.unwrap_or(1);
            descent(case, cfg, &out)
        }
        Command::Case { id, common } => {
            let (mut cfg, out) = common.resolve(None)?;
            cfg.preset = Some(id);
            descent(id, cfg, &out)
        }
        Command::Gradcheck { common, dirs, step, seed, tol } => {
            let (cfg, _) = common.resolve(None)?;
            let curve = initial_curve(cfg.preset.unwrap_or(1), cfg.curve_intervals())?;
            let rows = gradient_check(&curve, &cfg, step, dirs, seed)?;
            println!("dir  adjoint                 finite_difference       rel_error");
            let mut worst: f64 = 0.0;
            for (k, r) in rows.iter().enumerate() {
                println!("{k:<4} {:<23e} {:<23e} {:.3e}", r.adjoint, r.finite_difference, r.rel_error);
                worst = worst.max(r.rel_error);
            }
            if worst <= tol {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("worst relative error {worst:.3e} exceeds {tol:e}");
                Ok(ExitCode::from(1))
            }
        }
        Command::SolveOnce { common, source } => {
            let (cfg, out) = common.resolve(None)?;
            let curve = load_curve(&source, &cfg)?;
            let ev = evaluate(&curve, &cfg)?;
            create_dir(&out)?;
            let mesh = Mesh::with_cells(&curve, cells_for_size(cfg.h))?;
            io::write_vtk(&out.join("fields.vtk"), &mesh, &io::field_set(&ev.state, Some(&ev.adjoint)))?;
            io::write_gradient(&out.join("gradient.csv"), &ev.gradient)?;
            io::write_curve(&out.join("curve.txt"), &curve)?;
            let c = &ev.cost;
            println!("J1           {:e}", c.j1);
            println!("curve_energy {:e}", c.curve_energy);
            println!("mean_sq      {:e}", c.mean_sq);
            println!("obstacle     {:e}", c.obstacle);
            println!("total        {:e}", c.total);
            println!("phi_inf      {:e}", ev.gradient.phi_inf_norm());
            println!("picard_iters {}", ev.state.picard_iters);
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportFields { common, source } => {
            let (cfg, out) = common.resolve(None)?;
            let curve = load_curve(&source, &cfg)?;
            let mesh = Mesh::with_cells(&curve, cells_for_size(cfg.h))?;
            let solver = StateSolver::new(Spaces::new(mesh.clone()), cfg.physical.clone())?;
            let state = solver.solve(cfg.picard)?;
            let adjoint = solve_adjoint(&solver, &state)?;
            create_dir(&out)?;
            let path = out.join("fields.vtk");
            io::write_vtk(&path, &mesh, &io::field_set(&state, Some(&adjoint)))?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_curve(source: &CurveSource, cfg: &OptimizerConfig) -> Result<BoundaryCurve, Error> {
    match &source.curve {
        Some(p) => io::read_curve(p),
        None => initial_curve(source.case, cfg.curve_intervals()),
    }
}

fn descent(case: u8, cfg: OptimizerConfig, out: &Path) -> Result<ExitCode, Error> {
    let gamma0 = initial_curve(case, cfg.curve_intervals())?;
    create_dir(out)?;
    fs::write(out.join("config.toml"), RunConfig::from_optimizer_config(&cfg, Some(out)).to_toml_string())
        .map_err(|e| Error::Io { path: out.join("config.toml"), source: e })?;
    let mut trace = TraceWriter::create(&out.join("trace.csv"))?;
    let result = descend_with(&gamma0, &cfg, |rec, snap| {
        trace.append(rec)?;
        if let Some(c) = snap {
            io::write_curve(&out.join(format!("curve_{:05}.txt", rec.iter)), c)?;
        }
        Ok(())
    });
    match result {
        Ok((gamma, t)) => {
            io::write_curve(&out.join("curve_final.txt"), &gamma)?;
            if let Some(last) = t.records.last() {
                println!(
                    "{} iterations, J1 {:e}, total {:e}, phi_inf {:e}",
                    t.records.len(),
                    last.j1,
                    last.total,
                    last.phi_inf
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            io::write_curve(&out.join("curve_failed.txt"), &e.curve)?;
            eprintln!("error: descent stopped at iteration {}", e.iter);
            Err(e.source)
        }
    }
}
