//! Command-line front end: build MPC problems, solve instances, certify
//! parameter regions, compute certified WCET bounds, validate covers, and
//! export analysis grids.
//!
//! Exit codes: 0 success; 1 invalid input; 2 a `wcet` run left unresolved
//! regions (the bound is a certified lower bound only); 3 `validate` found
//! mismatches.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use mpcert::cert::{certify, digest_dual, validate_cover, CertOptions, CertOutput};
use mpcert::io::{
    self, archetype_csv, histogram_csv, slice_csv, trajectory_csv, CertJson, MpqpJson,
    ProfileJson, SliceRow, ValidationJson, WcetJson,
};
use mpcert::mpc::{condense, pendulum_example};
use mpcert::mpqp::{to_dual, DualData, MpQP};
use mpcert::solver::{solve, SolverConfig};
use mpcert::wcet::{
    lookup_cost, monte_carlo_baseline, trace_cost, wcet_from_cert, CostModel, WcetOptions,
};

#[derive(Parser)]
#[command(
    name = "mpcert",
    about = "Parametric WCET certification for dual active-set MPC solvers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CertifyOpts {
    /// Solver iteration cap.
    #[arg(long, default_value_t = 1000)]
    kmax: usize,
    /// Maximum polynomial degree carried through removal chains.
    #[arg(long, default_value_t = 4)]
    degree_cap: u32,
    /// Seed for archetype sampling and validation draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CertifyOpts {
    fn solver_config(&self) -> SolverConfig {
        SolverConfig::with_k_max(self.kmax)
    }

    fn cert_options(&self) -> CertOptions {
        CertOptions {
            degree_cap: self.degree_cap,
            seed: self.seed,
            ..CertOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build MPC problems.
    Mpc {
        #[command(subcommand)]
        which: MpcCommand,
    },
    /// Solve one instance and print the result.
    Solve {
        problem: PathBuf,
        /// Parameter vector, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
        /// Cost profile: unit, flop, or a profile JSON path.
        #[arg(long, default_value = "unit")]
        profile: String,
        #[arg(long, default_value_t = 1000)]
        kmax: usize,
    },
    /// Enumerate parameter regions with their working-set sequences.
    Certify {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: CertifyOpts,
    },
    /// Certified worst-case execution cost.
    Wcet {
        problem: PathBuf,
        /// Reuse an existing certification instead of recomputing.
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long, default_value = "unit")]
        profile: String,
        /// Skip prefix pruning (costs every region directly).
        #[arg(long)]
        no_prune: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: CertifyOpts,
    },
    /// Sample the parameter set and check the certified cover against the
    /// live solver.
    Validate {
        problem: PathBuf,
        #[arg(long)]
        regions: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        kmax: usize,
    },
    /// Monte-Carlo cost baseline (measurement-style sweep).
    Baseline {
        problem: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value = "unit")]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        kmax: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// 2-D cost map over two parameter dimensions.
    Slice {
        problem: PathBuf,
        #[arg(long)]
        regions: PathBuf,
        /// The two parameter dimensions spanning the grid, as i,j.
        #[arg(long)]
        dims: String,
        /// Fixed values for the remaining dimensions, as k=v,... (default:
        /// Chebyshev center coordinates of the parameter set).
        #[arg(long)]
        fix: Option<String>,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, default_value = "unit")]
        profile: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export surviving-region archetypes for external measurement.
    Archetypes {
        problem: PathBuf,
        #[arg(long)]
        regions: PathBuf,
        #[arg(long, default_value = "unit")]
        profile: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum MpcCommand {
    /// Inverted pendulum on a cart, condensed to a parametric QP.
    Pendulum {
        #[arg(long, default_value_t = 10)]
        horizon: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write a closed-loop simulation trajectory CSV.
        #[arg(long)]
        sim_out: Option<PathBuf>,
    },
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            code: 1,
        }
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Worker bound from MPCERT_THREADS (0 = auto). Execution is sequential and
/// deterministic for every setting; the variable is validated and echoed so
/// scripts relying on it fail loudly on typos.
fn thread_bound() -> Result<usize, CliError> {
    match std::env::var("MPCERT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::invalid(format!("MPCERT_THREADS must be an integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn load_problem(path: &Path) -> Result<(MpQP, DualData), CliError> {
    let j: MpqpJson = io::load_json(path)?;
    let p = j.to_problem()?;
    let dd = to_dual(&p)?;
    Ok((p, dd))
}

fn load_cert(path: &Path, dd: &DualData) -> Result<CertOutput, CliError> {
    let j: CertJson = io::load_json(path)?;
    let c = j.to_output()?;
    let expect = digest_dual(dd);
    if c.problem_digest != expect {
        return Err(CliError::invalid(format!(
            "certification file {} was computed for a different problem \
             (digest {:#018x}, expected {:#018x})",
            path.display(),
            c.problem_digest,
            expect
        )));
    }
    Ok(c)
}

fn load_profile(arg: &str) -> Result<CostModel, CliError> {
    if let Some(cm) = CostModel::by_name(arg) {
        return Ok(cm);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(CliError::invalid(format!(
            "unknown profile {arg:?}: expected unit, flop, or a profile JSON path"
        )));
    }
    let j: ProfileJson = io::load_json(path)?;
    Ok(j.to_model()?)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let threads = thread_bound()?;
    match cli.command {
        Command::Mpc { which } => match which {
            MpcCommand::Pendulum {
                horizon,
                out,
                sim_out,
            } => cmd_pendulum(horizon, &out, sim_out.as_deref()),
        },
        Command::Solve {
            problem,
            theta,
            profile,
            kmax,
        } => cmd_solve(&problem, &theta, &profile, kmax),
        Command::Certify { problem, out, opts } => cmd_certify(&problem, &out, &opts, threads),
        Command::Wcet {
            problem,
            regions,
            profile,
            no_prune,
            out,
            opts,
        } => cmd_wcet(&problem, regions.as_deref(), &profile, no_prune, &out, &opts),
        Command::Validate {
            problem,
            regions,
            samples,
            eps,
            seed,
            kmax,
        } => cmd_validate(&problem, &regions, samples, eps, seed, kmax),
        Command::Baseline {
            problem,
            samples,
            profile,
            seed,
            kmax,
            out,
        } => cmd_baseline(&problem, samples, &profile, seed, kmax, &out),
        Command::Slice {
            problem,
            regions,
            dims,
            fix,
            grid,
            profile,
            out,
        } => cmd_slice(&problem, &regions, &dims, fix.as_deref(), grid, &profile, &out),
        Command::Archetypes {
            problem,
            regions,
            profile,
            out,
        } => cmd_archetypes(&problem, &regions, &profile, &out),
    }
}

fn cmd_pendulum(horizon: usize, out: &Path, sim_out: Option<&Path>) -> Result<u8, CliError> {
    if horizon == 0 {
        return Err(CliError::invalid("horizon must be at least 1"));
    }
    let spec = pendulum_example(horizon);
    let p = condense(&spec)?;
    let lo: Vec<f64> = spec
        .x_lo
        .iter()
        .chain(spec.r_lo.iter())
        .cloned()
        .collect();
    let hi: Vec<f64> = spec
        .x_hi
        .iter()
        .chain(spec.r_hi.iter())
        .cloned()
        .collect();
    let j = MpqpJson::from_problem_with_box(&p, &lo, &hi);
    io::save_json(out, &j)?;
    println!(
        "pendulum horizon={} -> n={} m={} n_theta={} written to {}",
        horizon,
        p.n,
        p.m,
        p.n_theta,
        out.display()
    );
    if let Some(sim_path) = sim_out {
        let x0 = DVector::from_vec(vec![0.2, 0.0, 0.08, 0.0]);
        let reference = DVector::zeros(4);
        let sim = mpcert::mpc::closed_loop_sim(
            &spec,
            &x0,
            &reference,
            100,
            &SolverConfig::default(),
            &CostModel::unit(),
        )?;
        std::fs::write(sim_path, trajectory_csv(&sim.steps)).map_err(io::IoError::Io)?;
        println!("simulation trajectory written to {}", sim_path.display());
    }
    Ok(0)
}

fn cmd_solve(problem: &Path, theta: &[f64], profile: &str, kmax: usize) -> Result<u8, CliError> {
    let (p, dd) = load_problem(problem)?;
    if theta.len() != p.n_theta {
        return Err(CliError::invalid(format!(
            "theta has {} entries but the problem has n_theta={}",
            theta.len(),
            p.n_theta
        )));
    }
    let cm = load_profile(profile)?;
    let cfg = SolverConfig::with_k_max(kmax);
    let th = DVector::from_vec(theta.to_vec());
    let res = solve(&dd, &th, &cfg)?;
    let cost = trace_cost(&res.trace, &cm)?;
    println!("problem: n={} m={} n_theta={}", p.n, p.m, p.n_theta);
    println!("status: {:?}", res.status);
    println!("iterations: {}", res.iterations);
    println!("W*: {:?}", res.w_final);
    match &res.x {
        Some(x) => println!("x*: {:?}", x.as_slice()),
        None => println!("x*: none"),
    }
    println!("lambda*: {:?}", res.lambda.as_slice());
    println!("cost: {} (profile {})", cost, cm.name);
    Ok(0)
}

fn cmd_certify(
    problem: &Path,
    out: &Path,
    opts: &CertifyOpts,
    _threads: usize,
) -> Result<u8, CliError> {
    let (p, dd) = load_problem(problem)?;
    let c = certify(&dd, &p.theta0, &opts.solver_config(), &opts.cert_options())?;
    io::save_json(out, &CertJson::from_output(&c))?;
    println!(
        "certified {} regions ({} unresolved, {} empty pruned, {} thin pruned), seed {} -> {}",
        c.regions.len(),
        c.stats.unresolved_count,
        c.stats.empty_pruned,
        c.stats.thin_pruned,
        c.seed,
        out.display()
    );
    Ok(0)
}

fn cmd_wcet(
    problem: &Path,
    regions: Option<&Path>,
    profile: &str,
    no_prune: bool,
    out: &Path,
    opts: &CertifyOpts,
) -> Result<u8, CliError> {
    let (p, dd) = load_problem(problem)?;
    let cm = load_profile(profile)?;
    let cfg = opts.solver_config();
    let wopts = WcetOptions {
        no_prune,
        cert: opts.cert_options(),
    };
    let c = match regions {
        Some(path) => load_cert(path, &dd)?,
        None => certify(&dd, &p.theta0, &cfg, &wopts.cert)?,
    };
    let report = wcet_from_cert(&dd, &c, &cfg, &cm, &wopts)?;
    io::save_json(out, &WcetJson::from_report(&report))?;
    println!(
        "worst_cost: {} (profile {}, witness region {:?}, {} surviving / {} pruned, seed {})",
        report.worst_cost,
        report.profile,
        report.witness_region,
        report.surviving.len(),
        report.pruned_count,
        report.seed
    );
    if let Some(note) = &report.advisory {
        eprintln!("advisory: {note}");
    }
    if report.unresolved_count > 0 {
        Ok(2)
    } else {
        Ok(0)
    }
}

fn cmd_validate(
    problem: &Path,
    regions: &Path,
    samples: usize,
    eps: f64,
    seed: u64,
    kmax: usize,
) -> Result<u8, CliError> {
    if samples == 0 {
        return Err(CliError::invalid("samples must be positive"));
    }
    let (_, dd) = load_problem(problem)?;
    let c = load_cert(regions, &dd)?;
    let cfg = SolverConfig::with_k_max(kmax);
    let report = validate_cover(&c, &dd, &cfg, samples, eps, seed)?;
    let clean = report.is_clean();
    print!("{}", io::to_json_string(&ValidationJson::from_report(&report))?);
    if clean {
        Ok(0)
    } else {
        Ok(3)
    }
}

fn cmd_baseline(
    problem: &Path,
    samples: usize,
    profile: &str,
    seed: u64,
    kmax: usize,
    out: &Path,
) -> Result<u8, CliError> {
    if samples == 0 {
        return Err(CliError::invalid("samples must be positive"));
    }
    let (p, dd) = load_problem(problem)?;
    let cm = load_profile(profile)?;
    let cfg = SolverConfig::with_k_max(kmax);
    let b = monte_carlo_baseline(&dd, &p.theta0, &cfg, &cm, samples, seed)?;
    std::fs::write(out, histogram_csv(&b)).map_err(io::IoError::Io)?;
    println!(
        "baseline max cost {} over {} samples (profile {}, seed {}) -> {}",
        b.max_cost,
        b.n,
        cm.name,
        b.seed,
        out.display()
    );
    Ok(0)
}

fn parse_dims(s: &str, n_theta: usize) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::invalid("dims must be two indices, e.g. 0,1"));
    }
    let i: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::invalid(format!("bad dimension index {:?}", parts[0])))?;
    let j: usize = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::invalid(format!("bad dimension index {:?}", parts[1])))?;
    if i == j || i >= n_theta || j >= n_theta {
        return Err(CliError::invalid(format!(
            "dims must be two distinct indices below n_theta={n_theta}"
        )));
    }
    Ok((i, j))
}

fn parse_fixes(s: &str, n_theta: usize) -> Result<Vec<(usize, f64)>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("fix entries must be k=v, got {part:?}")))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| CliError::invalid(format!("bad fix index {k:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::invalid(format!("bad fix value {v:?}")))?;
        if k >= n_theta {
            return Err(CliError::invalid(format!(
                "fix index {k} out of range (n_theta={n_theta})"
            )));
        }
        out.push((k, v));
    }
    Ok(out)
}

fn cmd_slice(
    problem: &Path,
    regions: &Path,
    dims: &str,
    fix: Option<&str>,
    grid: usize,
    profile: &str,
    out: &Path,
) -> Result<u8, CliError> {
    if grid < 2 {
        return Err(CliError::invalid("grid must be at least 2"));
    }
    let (p, dd) = load_problem(problem)?;
    let (di, dj) = parse_dims(dims, p.n_theta)?;
    let fixes = match fix {
        Some(s) => parse_fixes(s, p.n_theta)?,
        None => Vec::new(),
    };
    let c = load_cert(regions, &dd)?;
    let cm = load_profile(profile)?;
    let cfg = SolverConfig::default();
    let report = wcet_from_cert(&dd, &c, &cfg, &cm, &WcetOptions::default())?;

    // Base point: Chebyshev center, overridden by explicit fixes.
    let (center, _) = mpcert::geometry::chebyshev_center(&p.theta0)?;
    let mut base = center.clone();
    for &(k, v) in &fixes {
        base[k] = v;
    }
    let (lo, hi) = p.theta0.bounding_box()?;
    let mut rows = Vec::with_capacity(grid * grid);
    for a in 0..grid {
        let ti = lo[di] + (hi[di] - lo[di]) * a as f64 / (grid - 1) as f64;
        for b in 0..grid {
            let tj = lo[dj] + (hi[dj] - lo[dj]) * b as f64 / (grid - 1) as f64;
            let mut th = base.clone();
            th[di] = ti;
            th[dj] = tj;
            match lookup_cost(&c, &report.region_costs, &th, 1e-9) {
                Ok(hit) => rows.push(SliceRow {
                    ti,
                    tj,
                    region_id: Some(hit.region_id),
                    cycles: Some(hit.cost),
                }),
                Err(_) => rows.push(SliceRow {
                    ti,
                    tj,
                    region_id: None,
                    cycles: None,
                }),
            }
        }
    }
    std::fs::write(out, slice_csv(di, dj, &rows)).map_err(io::IoError::Io)?;
    println!(
        "slice over theta_{di} x theta_{dj}, {grid}x{grid} grid (profile {}) -> {}",
        cm.name,
        out.display()
    );
    Ok(0)
}

fn cmd_archetypes(
    problem: &Path,
    regions: &Path,
    profile: &str,
    out: &Path,
) -> Result<u8, CliError> {
    let (p, dd) = load_problem(problem)?;
    let c = load_cert(regions, &dd)?;
    let cm = load_profile(profile)?;
    let cfg = SolverConfig::default();
    let report = wcet_from_cert(&dd, &c, &cfg, &cm, &WcetOptions::default())?;
    let surviving: Vec<_> = report
        .region_costs
        .iter()
        .filter(|rc| rc.surviving)
        .cloned()
        .collect();
    std::fs::write(out, archetype_csv(&surviving, p.n_theta)).map_err(io::IoError::Io)?;
    println!(
        "{} surviving archetypes (profile {}) -> {}",
        surviving.len(),
        cm.name,
        out.display()
    );
    Ok(0)
}
