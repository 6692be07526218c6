//! `tiltshape` command-line front end.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tiltshape::control::ControllerConfig;
use tiltshape::forceset::{fibonacci_sphere, HfsQuery};
use tiltshape::geom::{rank, Vec3};
use tiltshape::platform::{PlatformParams, TiltVector};
use tiltshape::sim::{run, Scenario, SimError};
use tiltshape::tiltopt::{build_table, GridSpec, OptimConfig, TiltTable};

const EXIT_CODES: &str = "\
Exit status:
  0  success
  1  platform not hoverable (hover-check) or other failure
  2  bad configuration or arguments
  3  some table cell is uncertified (build-table without --allow-uncertified)
  4  tilt table missing, unreadable, built for other parameters, or too small
  5  allocation infeasible for too many consecutive steps";

/// Shape the hoverable force set of a tilting multi-UAV platform.
#[derive(Debug, Parser)]
#[command(name = "tiltshape", version, after_help = EXIT_CODES)]
struct Cli {
    /// JSON configuration file; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report whether the platform can hover at a tilt configuration.
    HoverCheck(TiltArg),
    /// Write support points of the HFS as CSV (dx,dy,dz,fx,fy,fz).
    HfsExport {
        #[command(flatten)]
        tilt: TiltArg,
        /// Number of sample directions (at least 6).
        #[arg(long, default_value_t = 200)]
        directions: usize,
        /// Output file, standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize tilt angles over a grid of required-force-set centers.
    BuildTable {
        /// "x0:x1:step,y0:y1:step" in newtons.
        #[arg(long, default_value = "0:1:0.1,0:1:0.1")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the optimizer seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the table and succeed even if some cells are uncertified.
        #[arg(long)]
        allow_uncertified: bool,
    },
    /// Run the closed-loop simulation and write its log as CSV.
    Simulate {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct TiltArg {
    /// Comma-separated tilt angles in radians, or "zero".
    #[arg(long, default_value = "zero", allow_hyphen_values = true)]
    gamma: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    platform: PlatformParams,
    optimizer: OptimConfig,
    controller: ControllerConfig,
    scenario: Scenario,
}

/// An error that carries its exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn failure(code: u8, message: impl Into<String>) -> anyhow::Error {
    Failure {
        code,
        message: message.into(),
    }
    .into()
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).map_err(|e| failure(2, format!("{}: {e}", path.display())))?;
    let cfg: Config = serde_json::from_str(&text).map_err(|e| failure(2, format!("{}: {e}", path.display())))?;
    let invalid = |e: &dyn fmt::Display| failure(2, format!("{}: {e}", path.display()));
    cfg.platform.validate().map_err(|e| invalid(&e))?;
    cfg.optimizer.validate().map_err(|e| invalid(&e))?;
    cfg.controller.validate().map_err(|e| invalid(&e))?;
    cfg.scenario.validate().map_err(|e| invalid(&e))?;
    Ok(cfg)
}

fn parse_gamma(s: &str, n: usize) -> Result<TiltVector> {
    if s.trim() == "zero" {
        return Ok(TiltVector::zeros(n));
    }
    let angles: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| failure(2, format!("--gamma {s:?}: {e}")))?;
    if angles.len() != n {
        return Err(failure(2, format!("--gamma needs {n} angles, got {}", angles.len())));
    }
    TiltVector::new(angles).map_err(|e| failure(2, format!("--gamma: {e}")))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn hover_check(cfg: &Config, tilt: &TiltArg) -> Result<u8> {
    let p = &cfg.platform;
    let gamma = parse_gamma(&tilt.gamma, p.n_uavs)?;
    let q = HfsQuery::at(p, &gamma)?;
    let m = q.membership(&Vec3::new(0.0, 0.0, p.weight()))?;
    let r = rank(&q.maps().wrench_map(), 1e-9);
    println!("gamma: {:?}", gamma.as_slice());
    println!("hoverable: {}", if m.included { "yes" } else { "no" });
    println!("linf: {}", m.linf);
    println!("rank: {r}");
    Ok(if m.included { 0 } else { 1 })
}

fn hfs_export(cfg: &Config, tilt: &TiltArg, directions: usize, out: Option<&Path>) -> Result<u8> {
    if directions < 6 {
        return Err(failure(2, format!("--directions must be at least 6, got {directions}")));
    }
    let gamma = parse_gamma(&tilt.gamma, cfg.platform.n_uavs)?;
    let q = HfsQuery::at(&cfg.platform, &gamma)?;
    let dirs = fibonacci_sphere(directions);
    let points = q.support_points(&dirs)?;
    let mut w = output(out)?;
    writeln!(w, "dx,dy,dz,fx,fy,fz")?;
    for (d, f) in dirs.iter().zip(&points) {
        writeln!(w, "{},{},{},{},{},{}", d.x, d.y, d.z, f.x, f.y, f.z)?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_build_table(cfg: &Config, grid: &str, out: &Path, seed: Option<u64>, allow_uncertified: bool) -> Result<u8> {
    let grid: GridSpec = grid.parse().map_err(|e| failure(2, format!("--grid: {e}")))?;
    let mut opt = cfg.optimizer.clone();
    if let Some(seed) = seed {
        opt.pso.seed = seed;
    }
    let start = Instant::now();
    let table = build_table(&cfg.platform, &grid, &opt)?;
    let elapsed = start.elapsed();
    let (cells, certified) = (table.n_cells(), table.certified_count());
    println!("cells: {cells}");
    println!("certified: {certified}");
    println!("max_abs_gamma: {}", table.max_abs_gamma());
    eprintln!("wall time: {:.2} s", elapsed.as_secs_f64());
    if certified < cells && !allow_uncertified {
        return Err(failure(
            3,
            format!("{} of {cells} cells uncertified; table not written", cells - certified),
        ));
    }
    table.save(out).with_context(|| format!("writing {}", out.display()))?;
    Ok(0)
}

fn simulate(cfg: &Config, table: &Path, out: &Path) -> Result<u8> {
    let table = TiltTable::load(table).map_err(|e| failure(4, format!("{}: {e}", table.display())))?;
    let result = run(&cfg.platform, &cfg.controller, &table, &cfg.scenario);
    let sim = result.map_err(|e| {
        let code = match e {
            SimError::TableMismatch | SimError::TableRange { .. } => 4,
            SimError::Infeasible { .. } => 5,
            SimError::Config(_) | SimError::Params(_) => 2,
            _ => 1,
        };
        failure(code, e.to_string())
    })?;
    let mut w = output_file(out)?;
    sim.log.write_csv(&mut w)?;
    w.flush()?;
    let s = sim.summary;
    println!("steps: {}", s.steps);
    println!("max_position_error_m: {}", s.max_position_error);
    println!("max_orientation_error_deg: {}", s.max_orientation_error_deg);
    println!("infeasible_steps: {}", s.infeasible_steps);
    Ok(0)
}

fn output_file(path: &Path) -> Result<io::BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(io::BufWriter::new(f))
}

fn dispatch(cli: &Cli) -> Result<u8> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::HoverCheck(tilt) => hover_check(&cfg, tilt),
        Command::HfsExport { tilt, directions, out } => hfs_export(&cfg, tilt, *directions, out.as_deref()),
        Command::BuildTable {
            grid,
            out,
            seed,
            allow_uncertified,
        } => cmd_build_table(&cfg, grid, out, *seed, *allow_uncertified),
        Command::Simulate { table, out } => simulate(&cfg, table, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.downcast_ref::<Failure>().map_or(1, |f| f.code))
        }
    }
}
