use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use kvmix::config::{load_config, ConfigError, ExperimentSpec, RunConfig};
use kvmix::diagnostics::{check_apriori_bounds, check_energy_identity};
use kvmix::engine::{EngineError, SimState};
use kvmix::experiments::{
    convergence_study, decoupling_test, linear_oracle_test, stability_experiment, ExperimentError,
};
use kvmix::output::{
    ensure_dir, field_file_name, write_diagnostics, write_fields, write_summary, FieldSnapshot,
    IoError, SummaryRow, DIAGNOSTICS_FILE, SUMMARY_FILE,
};
use kvmix::problem::{Problem, SetupError};

const OUTPUT_ENV: &str = "KVMIX_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "kvmix-out";

#[derive(Parser, Debug)]
#[command(
    name = "kvmix",
    version,
    about = "Spectral Galerkin solver for Kelvin-Voigt mixtures"
)]
struct Cli {
    /// Output directory (overrides the config file and KVMIX_OUTPUT_DIR).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Accepted for compatibility; runs are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate and write diagnostics, fields and a summary.
    Run { config: PathBuf },
    /// Run the study named in the config's [experiment] table.
    Experiment { config: PathBuf },
    /// Check a config and print its derived bounds.
    Validate { config: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
    CheckFailed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::CheckFailed(_) => 4,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<SetupError> for Failure {
    fn from(e: SetupError) -> Self {
        Failure::from(ConfigError::from(e))
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Setup(s) => s.into(),
            ExperimentError::Engine(e) => e.into(),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(seed) = cli.seed {
        warn!("--seed {seed} ignored: the solver is deterministic");
    }
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config, cli.output_dir.as_deref()),
        Command::Experiment { config } => cmd_experiment(config, cli.output_dir.as_deref()),
        Command::Validate { config } => cmd_validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Invalid(m) | Failure::Runtime(m) | Failure::CheckFailed(m)) = &f;
            eprintln!("kvmix: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn output_dir(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.directory.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn metadata(config: &RunConfig, problem: &Problem<f64>) -> Vec<SummaryRow> {
    let p = &config.problem;
    vec![
        SummaryRow::info("constituents", p.n().to_string()),
        SummaryRow::info("grid N", p.grid_size.to_string()),
        SummaryRow::info("cutoff K", p.cutoff.to_string()),
        SummaryRow::info("modes", problem.basis.len().to_string()),
        SummaryRow::info("dt", format!("{:e}", p.dt)),
        SummaryRow::info("t_end", p.t_end.to_string()),
    ]
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let config = load_config(path)?;
    let problem = config.problem.build()?;
    let pr = &problem.params;
    println!("config ok: {}", path.display());
    println!(
        "n = {}, N = {}, K = {}, modes = {}",
        pr.n(),
        problem.basis.grid_size(),
        problem.basis.cutoff(),
        problem.basis.len()
    );
    println!(
        "rho- = {:e}  rho+ = {:e}",
        problem.initial_data.rho_minus, problem.initial_data.rho_plus
    );
    println!("mu- = {:e}  mu+ = {:e}", pr.mu_minus, pr.mu_plus);
    println!(
        "kappa- = {:e}  kappa+ = {:e}",
        pr.kappa_minus, pr.kappa_plus
    );
    println!("gamma+ = {:e}", pr.gamma_plus);
    println!("experiment: {}", config.experiment.name());
    Ok(())
}

fn cmd_run(path: &Path, flag: Option<&Path>) -> Result<(), Failure> {
    let config = load_config(path)?;
    let problem = config.problem.build()?;
    let dir = output_dir(flag, &config);
    ensure_dir(&dir)?;

    let t_end = problem.schedule.t_end;
    let every = config.output.field_every;
    let emit = config.output.emit_fields;
    let mut fields_written = 0usize;
    let mut io_failure: Option<IoError> = None;
    let mut write_field = |s: &SimState<f64>| -> Result<(), EngineError> {
        if emit && (s.step_index.is_multiple_of(every) || s.t == t_end) && io_failure.is_none() {
            let snap =
                FieldSnapshot::capture(s, &problem.params, &problem.forcing, &problem.basis)?;
            match write_fields(&dir.join(field_file_name(s.step_index)), &snap) {
                Ok(()) => fields_written += 1,
                Err(e) => io_failure = Some(e),
            }
        }
        Ok(())
    };
    let out = problem.simulate_with(&mut write_field)?;
    if let Some(e) = io_failure {
        return Err(e.into());
    }
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &out.records)?;

    let mut rows = metadata(&config, &problem);
    rows.push(SummaryRow::info("records", out.records.len().to_string()));
    rows.push(SummaryRow::info("field files", fields_written.to_string()));
    let (lo, hi) = (
        problem.initial_data.rho_minus,
        problem.initial_data.rho_plus,
    );
    let in_bounds = out
        .records
        .iter()
        .all(|r| r.rho_min.iter().all(|&m| m >= lo) && r.rho_max.iter().all(|&m| m <= hi));
    rows.push(SummaryRow::check(
        "density within [rho-, rho+]",
        format!("[{lo:e}, {hi:e}]"),
        in_bounds,
    ));
    let kmin = problem.params.kappa_minus;
    let mmin = problem.params.mu_minus;
    let lower = out.records.iter().all(|r| {
        let g: f64 = r.h1_v.iter().sum();
        let slack = 1e-10 * g.abs().max(f64::MIN_POSITIVE);
        r.y1 >= kmin * g - slack && r.dissipation >= 2.0 * mmin * g - slack
    });
    rows.push(SummaryRow::check(
        "energy lower bounds",
        "kappa-, 2 mu-",
        lower,
    ));
    match check_energy_identity(&out.records) {
        Ok(rep) => {
            rows.push(SummaryRow::info(
                "max |energy_residual|",
                format!("{:.3e}", rep.max_abs_residual),
            ));
            rows.push(SummaryRow::info(
                "max |transport_defect|",
                format!("{:.3e}", rep.max_abs_transport_defect),
            ));
        }
        Err(e) => rows.push(SummaryRow::info("energy identity", e.to_string())),
    }
    let apriori = check_apriori_bounds(&out.records);
    rows.push(SummaryRow::check(
        "a-priori quantities bounded",
        format!(
            "sup energy {:.3e} vs data {:.3e}",
            apriori.sup_energy, apriori.surrogate
        ),
        apriori.finite && !apriori.growth_warning,
    ));
    if apriori.growth_warning {
        warn!("a-priori quantities exceed the data-based surrogate");
    }
    write_summary(
        &dir.join(SUMMARY_FILE),
        &format!("kvmix run {}", path.display()),
        &rows,
    )?;
    info!("wrote {}", dir.display());
    println!("wrote {} records to {}", out.records.len(), dir.display());
    Ok(())
}

fn cmd_experiment(path: &Path, flag: Option<&Path>) -> Result<(), Failure> {
    let config = load_config(path)?;
    let problem = config.problem.build()?;
    let spec = &config.problem;
    let dir = output_dir(flag, &config);
    ensure_dir(&dir)?;
    let mut rows = metadata(&config, &problem);
    let mut table = String::new();

    let pass = match &config.experiment {
        ExperimentSpec::None => {
            return Err(Failure::Invalid(
                "config has no [experiment] table; use `run`".into(),
            ))
        }
        ExperimentSpec::Stability { epsilon, mode } => {
            let rep = stability_experiment(spec, *epsilon, *mode)?;
            table.push_str("t,y\n");
            for (t, y) in rep.times.iter().zip(&rep.y_series) {
                table.push_str(&format!("{t:.16e},{y:.16e}\n"));
            }
            if *epsilon == 0.0 {
                let zero = rep.y_series.iter().all(|&y| y == 0.0);
                println!(
                    "{}",
                    if zero {
                        "y ≡ 0"
                    } else {
                        "y not identically zero"
                    }
                );
                rows.push(SummaryRow::check("y identically zero", "epsilon = 0", zero));
                rows.push(SummaryRow::check(
                    "trajectories bitwise identical",
                    "",
                    rep.bitwise_identical,
                ));
            } else {
                let a = rep
                    .growth_exponent
                    .map_or("none".to_string(), |a| format!("{a:.6e}"));
                println!(
                    "growth exponent {a}, envelope excess {:.3e}",
                    rep.envelope_excess
                );
                rows.push(SummaryRow::info("epsilon", format!("{epsilon:e}")));
                rows.push(SummaryRow::info("y(0)", format!("{:.6e}", rep.y0)));
                rows.push(SummaryRow::check(
                    "finite growth exponent",
                    a,
                    rep.growth_exponent.is_some(),
                ));
                rows.push(SummaryRow::check(
                    "envelope excess <= 5%",
                    format!("{:.3e}", rep.envelope_excess),
                    rep.envelope_excess <= kvmix::experiments::ENVELOPE_SLACK,
                ));
            }
            rep.passes()
        }
        ExperimentSpec::Convergence { cutoffs } => {
            let rep = convergence_study(spec, cutoffs)?;
            table.push_str("cutoff,grid_size,modes,diff_to_next\n");
            for l in &rep.levels {
                let d = l
                    .diff_to_next
                    .map_or(String::new(), |d| format!("{d:.16e}"));
                table.push_str(&format!("{},{},{},{d}\n", l.cutoff, l.grid_size, l.modes));
            }
            let diffs = rep.differences();
            println!("successive differences {diffs:?}");
            let ok = rep.strictly_decreasing();
            rows.push(SummaryRow::check(
                "differences strictly decreasing",
                diffs
                    .iter()
                    .map(|d| format!("{d:.3e}"))
                    .collect::<Vec<_>>()
                    .join(" > "),
                ok,
            ));
            ok
        }
        ExperimentSpec::Decoupling => {
            let rep = decoupling_test(spec)?;
            table.push_str("max_rel_deviation,max_density_deviation\n");
            table.push_str(&format!(
                "{:.16e},{:.16e}\n",
                rep.max_rel_deviation, rep.max_density_deviation
            ));
            println!("max relative deviation {:.3e}", rep.max_rel_deviation);
            rows.push(SummaryRow::check(
                "coupled equals independent runs",
                format!(
                    "{:.3e} / {:.3e}",
                    rep.max_rel_deviation, rep.max_density_deviation
                ),
                rep.pass,
            ));
            rep.pass
        }
        ExperimentSpec::LinearOracle => {
            let rep = linear_oracle_test(spec)?;
            let n = spec.n();
            table.push('t');
            for i in 1..=n {
                table.push_str(&format!(",simulated_{i},exact_{i}"));
            }
            table.push('\n');
            for (k, t) in rep.times.iter().enumerate() {
                table.push_str(&format!("{t:.16e}"));
                for i in 0..n {
                    table.push_str(&format!(
                        ",{:.16e},{:.16e}",
                        rep.simulated[k][i], rep.exact[k][i]
                    ));
                }
                table.push('\n');
            }
            println!("max relative error {:.3e}", rep.max_rel_error);
            rows.push(SummaryRow::check(
                "matches matrix exponential",
                format!("{:.3e}", rep.max_rel_error),
                rep.pass,
            ));
            rep.pass
        }
    };

    let report = dir.join("experiment.csv");
    std::fs::write(&report, table).map_err(|source| IoError::Io {
        path: report.clone(),
        source,
    })?;
    write_summary(
        &dir.join(SUMMARY_FILE),
        &format!(
            "kvmix experiment {} {}",
            config.experiment.name(),
            path.display()
        ),
        &rows,
    )?;
    if pass {
        println!("{}: PASS", config.experiment.name());
        Ok(())
    } else {
        Err(Failure::CheckFailed(format!(
            "{} check failed; see {}",
            config.experiment.name(),
            dir.join(SUMMARY_FILE).display()
        )))
    }
}
