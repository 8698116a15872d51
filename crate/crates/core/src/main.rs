use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mci::config::ScenarioConfig;
use mci::forward::{add_noise, apply_forward, KernelParams, NoiseSpec};
use mci::fourier::{recon_fourier, select_kmax, SignalModel, TaperSpec};
use mci::grid::{rel_l2_error, FieldMap3};
use mci::io::{read_fieldmap, write_fieldmap, FieldFile};
use mci::solver::{ladmm_solve, select_tau, SolverOptions};
use mci::sweep::{default_jobs, run_sweep};
use mci::wavelet::DivFreeBasis;
use mci::Error;

/// Current-density reconstruction from magnetic-field images.
#[derive(Parser, Debug)]
#[command(name = "mci", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate a scenario's ground-truth current density.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compute the field of a current file at standoff `z`.
    Forward {
        input: PathBuf,
        /// Standoff in meters.
        #[arg(long)]
        z: f64,
        /// Sheet thickness in meters; defaults to the file's `d_m`.
        #[arg(long)]
        d: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Add white Gaussian noise to every field component.
    AddNoise {
        input: PathBuf,
        /// Standard deviation in tesla.
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Spectral division with a cosine taper.
    ReconFourier {
        input: PathBuf,
        /// `auto`, `none`, or a cutoff in cycles/m.
        #[arg(long, default_value = "auto")]
        kmax: String,
        /// Noise level in tesla (needed for `--kmax auto`).
        #[arg(long)]
        sigma: Option<f64>,
        /// Signal-model current density in A/m².
        #[arg(long, default_value_t = 1.6e7)]
        j0: f64,
        /// Signal-model trace width in meters.
        #[arg(long, default_value_t = 10e-6)]
        width: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// L1-curl regularized reconstruction.
    ReconL1curl {
        input: PathBuf,
        /// `auto` or a fixed weight.
        #[arg(long, default_value = "auto")]
        tau: String,
        /// Noise level in tesla (needed for `--tau auto`).
        #[arg(long)]
        sigma: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Curl of a current file in the divergence-free wavelet basis.
    Curl {
        input: PathBuf,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Relative L2 error of a reconstruction against a reference.
    Evaluate { estimate: PathBuf, reference: PathBuf },
    /// Run the noise × standoff comparison.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Worker threads (default: MCI_JOBS or all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Add a runtime column to the CSV.
        #[arg(long)]
        timings: bool,
        /// CSV destination; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario: `two-trace` or `l-bend`.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value_t = SolverOptions::default().max_outer_iters)]
    max_iters: usize,
    #[arg(long, default_value_t = SolverOptions::default().rho)]
    rho: f64,
    /// Use the linearized w-step.
    #[arg(long)]
    linearized: bool,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            levels: self.levels,
            max_outer_iters: self.max_iters,
            rho: self.rho,
            linearized: self.linearized,
            ..SolverOptions::default()
        }
    }
}

enum Failure {
    Data(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged(_) | Error::Bracket(_) | Error::LinearSystem(_) => Failure::Solver(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn data_err(msg: impl Into<String>) -> Failure {
    Failure::Data(msg.into())
}

fn load_config(src: &Source) -> CliResult<ScenarioConfig> {
    match (&src.config, &src.scenario) {
        (Some(path), _) => Ok(ScenarioConfig::load(path)?),
        (None, Some(name)) => Ok(ScenarioConfig::builtin(name, 128)?),
        (None, None) => Err(data_err("no scenario given")),
    }
}

fn read_b(path: &Path) -> CliResult<FieldMap3> {
    match read_fieldmap(path)? {
        FieldFile::B(b) => Ok(b),
        other => Err(data_err(format!("{} holds kind {}, expected B", path.display(), other.kind()))),
    }
}

fn read_j(path: &Path) -> CliResult<(mci::grid::CurrentField, Option<f64>)> {
    match read_fieldmap(path)? {
        FieldFile::J { field, d } => Ok((field, d)),
        other => Err(data_err(format!("{} holds kind {}, expected J", path.display(), other.kind()))),
    }
}

fn parse_auto(v: &str, what: &str) -> CliResult<Option<f64>> {
    if v == "auto" {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| data_err(format!("{what} must be `auto` or a number, got {v:?}")))
}

fn require_sigma(sigma: Option<f64>, flag: &str) -> CliResult<f64> {
    sigma.ok_or_else(|| data_err(format!("{flag} auto needs --sigma")))
}

fn run(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Simulate { source, output } => {
            let cfg = load_config(&source)?;
            let truth = cfg.scenario.simulate()?;
            let d = Some(cfg.scenario.geometry.d);
            write_fieldmap(&FieldFile::J { field: truth.current, d }, output)?;
        }
        Cmd::Forward { input, z, d, output } => {
            let (j, file_d) = read_j(&input)?;
            let d = d.or(file_d).ok_or_else(|| data_err("current file has no d_m; pass --d"))?;
            let b = apply_forward(&j, &KernelParams::new(z, d)?);
            write_fieldmap(&FieldFile::B(b), output)?;
        }
        Cmd::AddNoise { input, sigma, seed, output } => {
            let b = add_noise(&read_b(&input)?, &NoiseSpec { sigma, seed })?;
            write_fieldmap(&FieldFile::B(b), output)?;
        }
        Cmd::ReconFourier { input, kmax, sigma, j0, width, output } => {
            let b = read_b(&input)?;
            let taper = match kmax.as_str() {
                "none" => TaperSpec::unfiltered(),
                v => match parse_auto(v, "--kmax")? {
                    Some(k) => TaperSpec::new(k)?,
                    None => {
                        let sigma = require_sigma(sigma, "--kmax")?;
                        let m = SignalModel { j0, w: width, d: b.d, z: b.z, sigma };
                        let c = select_kmax(&m, &b.grid)?;
                        log::info!("auto k_max = {:e} cycles/m", c.taper.k_max);
                        c.taper
                    }
                },
            };
            let j = recon_fourier(&b, &taper);
            write_fieldmap(&FieldFile::J { field: j, d: Some(b.d) }, output)?;
        }
        Cmd::ReconL1curl { input, tau, sigma, solver, output } => {
            let b = read_b(&input)?;
            let opts = solver.options();
            let levels = opts.levels.unwrap_or_else(|| DivFreeBasis::default_levels(&b.grid));
            let (w, diag) = match parse_auto(&tau, "--tau")? {
                Some(t) => ladmm_solve(&b, t, &opts)?,
                None => {
                    let sel = select_tau(&b, require_sigma(sigma, "--tau")?, &opts)?;
                    log::info!("selected tau = {:e} after {} solves", sel.tau, sel.solves);
                    (sel.coeffs, sel.diagnostics)
                }
            };
            log::info!(
                "{} iterations, converged = {}, residual = {:e} T²",
                diag.iterations,
                diag.converged,
                diag.data_residual
            );
            let j = DivFreeBasis::new(b.grid, levels)?.synthesize(&w)?;
            write_fieldmap(&FieldFile::J { field: j, d: Some(b.d) }, output)?;
        }
        Cmd::Curl { input, levels, output } => {
            let (j, _) = read_j(&input)?;
            let levels = levels.unwrap_or_else(|| DivFreeBasis::default_levels(&j.grid));
            let basis = DivFreeBasis::new(j.grid, levels)?;
            let curl = basis.analytic_curl(&basis.analyze(&j)?)?;
            write_fieldmap(&FieldFile::Scalar(curl), output)?;
        }
        Cmd::Evaluate { estimate, reference } => {
            let (a, _) = read_j(&estimate)?;
            let (b, _) = read_j(&reference)?;
            println!("rel_l2_error {:e}", rel_l2_error(&a, &b)?);
        }
        Cmd::Sweep { source, jobs, timings, output } => {
            let cfg = load_config(&source)?;
            let result = run_sweep(&cfg, jobs.unwrap_or_else(default_jobs))?;
            let csv = result.to_csv(timings);
            match output {
                Some(path) => {
                    std::fs::write(&path, csv).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
                    print!("{}", result.summary());
                }
                None => {
                    print!("{csv}");
                    eprint!("{}", result.summary());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(3)
        }
    }
}
