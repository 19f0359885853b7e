mod ingest;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lproj::ar::ar_estimate;
use lproj::asymptotics::{indifference_lp_vs_arla, indifference_lp_vs_lpna};
use lproj::bootstrap::{lp_pairs_bootstrap, wild_recursive_batch, BootTarget, BootstrapSpec, DEFAULT_DRAWS};
use lproj::montecarlo::{check_failures, compare_tables, run_experiment_unchecked, DgpSpec, ExperimentFile, McResultTable};
use lproj::numeric::derive_stream;
use lproj::numeric::rng::purpose;
use lproj::var::{simulate, CoefficientFile, InitialCondition, VarDgp};
use lproj::{lp_estimate, ArSpec, EstimateReport, Error, LpSpec, Method};

use ingest::{read_series, write_series};

const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_FAILURES: u8 = 3;
const EXIT_ESTIMATION: u8 = 4;

const FULL_SCALE_REPS: usize = 5000;
const FULL_SCALE_DRAWS: usize = 2000;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn estimation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_ESTIMATION,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ConfigInvalid(_) | Error::KeyMismatch(_) | Error::InvalidSpec(_) | Error::DimensionMismatch(_) => {
                EXIT_INPUT
            }
            Error::TooManyFailedReps { .. } => EXIT_FAILURES,
            _ => EXIT_ESTIMATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "lproj", version, about = "Lag-augmented local projection inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo coverage experiments from a JSON experiment file.
    Mc(McArgs),
    /// Estimate impulse responses with confidence intervals from a CSV file.
    Estimate(EstimateArgs),
    /// Print the (|rho|, h) indifference curves as CSV.
    Indifference(IndifferenceArgs),
    /// Simulate a sample from a DGP description and write it as CSV.
    Simulate(SimulateArgs),
    /// Compare a result table against a reference table.
    Compare(CompareArgs),
}

#[derive(Args)]
struct McArgs {
    config: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "LPROJ_THREADS", default_value_t = 0)]
    threads: usize,
    /// CSV output path; JSON goes next to it with a `.json` extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// 5000 repetitions and 2000 bootstrap draws unless overridden.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct EstimateArgs {
    data: PathBuf,
    /// Response column, by name or 0-based index.
    #[arg(long)]
    response: String,
    /// Comma-separated shock weights, one per column.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "shock")]
    shock_weight: Option<Vec<f64>>,
    /// Shock column, by name or index; shorthand for a unit weight vector.
    #[arg(long)]
    shock: Option<String>,
    /// VAR lag order `p`.
    #[arg(long)]
    lags: usize,
    /// Horizons as `1-12` or `1,6,12`.
    #[arg(long, default_value = "1-12")]
    horizons: String,
    #[arg(long, default_value = "LP-LA_b")]
    method: String,
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    boot_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IndifferenceArgs {
    #[arg(long)]
    h_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// DGP description: a tagged DGP (`{"kind": "ar1", ...}`) or a coefficient file.
    dgp: PathBuf,
    #[arg(long = "T", alias = "t")]
    periods: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    observed: PathBuf,
    reference: PathBuf,
    #[arg(long, default_value_t = 0.03)]
    coverage_tol: f64,
    #[arg(long, default_value_t = 0.10)]
    length_tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mc(a) => cmd_mc(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Indifference(a) => cmd_indifference(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Opens `path`, or stdout when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::input(format!("write failed: {e}"))
}

// ---------------------------------------------------------------------------

fn cmd_mc(a: McArgs) -> CmdResult {
    let text = read_text(&a.config)?;
    let mut file = ExperimentFile::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", a.config.display())))?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let (reps, draws) = if a.full_scale {
        (a.reps.or(Some(FULL_SCALE_REPS)), a.draws.or(Some(FULL_SCALE_DRAWS)))
    } else {
        (a.reps, a.draws)
    };
    if a.full_scale {
        eprintln!(
            "warning: full-scale settings ({} reps, {} draws) can take hours",
            reps.unwrap_or(FULL_SCALE_REPS),
            draws.unwrap_or(FULL_SCALE_DRAWS)
        );
    }
    for e in &mut file.experiments {
        if let Some(r) = reps {
            e.reps = r;
        }
        if let Some(d) = draws {
            e.bootstrap_draws = d;
        }
        if let Some(s) = a.seed {
            e.root_seed = s;
        }
    }
    let mut dgps = Vec::with_capacity(file.experiments.len());
    for (i, e) in file.experiments.iter().enumerate() {
        let dgp = e
            .dgp
            .build(Some(base))
            .map_err(|err| Failure::input(format!("experiments[{i}]: {err}")))?;
        e.validate_with(&dgp)
            .map_err(|err| Failure::input(format!("experiments[{i}]: {err}")))?;
        dgps.push(dgp);
    }

    let mut table = McResultTable::default();
    for (e, dgp) in file.experiments.iter().zip(&dgps) {
        let t = run_experiment_unchecked(e, dgp, a.threads)?;
        eprintln!("{}: {} reps in {:.1?}", e.label(), e.reps, t.wall_time);
        table.extend(t);
    }

    let (csv_path, json_path) = match (&a.out, &file.output) {
        (Some(out), _) => (Some(out.clone()), Some(out.with_extension("json"))),
        (None, Some(o)) => (o.csv.as_ref().map(|p| base.join(p)), o.json.as_ref().map(|p| base.join(p))),
        (None, None) => (None, None),
    };
    table.write_csv(sink(csv_path.as_deref())?)?;
    if let Some(p) = json_path {
        std::fs::write(&p, table.to_json()).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
    }
    check_failures(&table)?;
    Ok(())
}

// ---------------------------------------------------------------------------

fn parse_horizons(spec: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::input(format!("--horizons {spec:?}: expected a range like 1-12 or a list like 1,6,12"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(Failure::input("--horizons: horizons start at 1"));
    }
    Ok(out)
}

fn cmd_estimate(a: EstimateArgs) -> CmdResult {
    let method: Method = a.method.parse().map_err(|e: Error| Failure::input(format!("--method: {e}")))?;
    if a.lags == 0 {
        return Err(Failure::input("--lags must be at least 1 (lag augmentation needs p >= 1)"));
    }
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(Failure::input(format!("--level {} is not in (0, 1)", a.level)));
    }
    let horizons = parse_horizons(&a.horizons)?;
    let series = read_series(&a.data).map_err(Failure::input)?;
    let n = series.columns.len();
    let i = series.column(&a.response).map_err(Failure::input)?;
    let nu = match (&a.shock_weight, &a.shock) {
        (Some(w), _) if w.len() != n => {
            return Err(Failure::input(format!("--shock-weight: {} weights for {n} columns", w.len())))
        }
        (Some(w), _) => w.clone(),
        (None, Some(name)) => {
            let j = series.column(name).map_err(Failure::input)?;
            (0..n).map(|k| if k == j { 1.0 } else { 0.0 }).collect()
        }
        (None, None) => (0..n).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect(),
    };
    let data = &series.data;
    let p = a.lags;
    let boot = BootstrapSpec::with_draws(a.boot_draws);
    let lp_spec = |h: usize, augmented: bool| {
        if augmented {
            LpSpec::lag_augmented(h, i, nu.clone(), p)
        } else {
            LpSpec::non_augmented(h, i, nu.clone(), p)
        }
    };

    let reports: Vec<EstimateReport> = match method {
        Method::LpLaBootstrap | Method::LpBootstrap | Method::ArLaEfron => {
            if method.is_bootstrap() && a.boot_draws < lproj::bootstrap::MIN_DRAWS {
                return Err(Failure::input(format!(
                    "--boot-draws must be at least {}",
                    lproj::bootstrap::MIN_DRAWS
                )));
            }
            let targets: Vec<BootTarget> = horizons
                .iter()
                .map(|&h| match method {
                    Method::ArLaEfron => BootTarget::ArLaEfron(ArSpec::lag_augmented(h, i, nu.clone(), p)),
                    m => BootTarget::LpPercentileT(lp_spec(h, m == Method::LpLaBootstrap)),
                })
                .collect();
            let stream = derive_stream(a.seed, 0, purpose::bootstrap_for_lag(p));
            wild_recursive_batch(data, p, &boot, a.level, stream, &targets)?
                .into_iter()
                .map(|r| r.map(|o| o.report))
                .collect::<Result<_, _>>()?
        }
        Method::LpLaPairs => horizons
            .iter()
            .map(|&h| lp_pairs_bootstrap(data, &lp_spec(h, true), &boot.clone().pairs(), a.level, derive_stream(a.seed, 0, purpose::PAIRS)))
            .collect::<Result<_, _>>()?,
        Method::LpLa | Method::Lp => horizons
            .iter()
            .map(|&h| lp_estimate(data, &lp_spec(h, method == Method::LpLa), a.level).map(|r| r.0))
            .collect::<Result<_, _>>()?,
        Method::Ar | Method::ArLa => horizons
            .iter()
            .map(|&h| {
                let spec = if method == Method::Ar {
                    ArSpec::textbook(h, i, nu.clone(), p)
                } else {
                    ArSpec::lag_augmented(h, i, nu.clone(), p)
                };
                ar_estimate(data, &spec, a.level)
            })
            .collect::<Result<_, _>>()?,
    };

    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    w.write_record(["horizon", "point", "se", "lo", "hi", "method", "effective_sample"])
        .map_err(io_failure)?;
    for r in &reports {
        w.write_record([
            r.horizon.to_string(),
            format!("{:.16e}", r.point),
            format!("{:.16e}", r.se),
            format!("{:.16e}", r.interval.0),
            format!("{:.16e}", r.interval.1),
            r.method.to_string(),
            r.effective_sample.to_string(),
        ])
        .map_err(io_failure)?;
        if r.flags.nonstationary_fit {
            eprintln!("note: h={}: bias correction skipped, the VAR fit is not stationary", r.horizon);
        }
        if r.flags.singular_jacobian {
            eprintln!("note: h={}: delta-method gradient is zero", r.horizon);
        }
    }
    w.flush().map_err(io_failure)
}

// ---------------------------------------------------------------------------

fn cmd_indifference(a: IndifferenceArgs) -> CmdResult {
    if a.h_max < 2 {
        return Err(Failure::input("--h-max must be at least 2"));
    }
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    w.write_record(["h", "rho_lower", "rho_upper"]).map_err(io_failure)?;
    for h in 2..=a.h_max {
        let lo = indifference_lp_vs_arla(h)?;
        let hi = indifference_lp_vs_lpna(h)?;
        w.write_record([h.to_string(), format!("{lo:.16e}"), format!("{hi:.16e}")])
            .map_err(io_failure)?;
    }
    w.flush().map_err(io_failure)
}

// ---------------------------------------------------------------------------

fn load_dgp(path: &Path) -> Result<VarDgp, Failure> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let diag = |e: &dyn std::fmt::Display| Failure::input(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| diag(&e))?;
    if value.get("kind").is_some() {
        let spec: DgpSpec = serde_json::from_value(value).map_err(|e| diag(&e))?;
        spec.build(Some(base)).map_err(|e| diag(&e))
    } else {
        CoefficientFile::from_json(&text)
            .and_then(|f| f.to_dgp())
            .map_err(|e| diag(&e))
    }
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let dgp = load_dgp(&a.dgp)?;
    let radius = dgp.coefficients.spectral_radius();
    if radius > 1.0 + 1e-12 {
        eprintln!("warning: explosive DGP (companion spectral radius {radius:.6}); the path may overflow");
    }
    let init = match a.burn_in {
        0 => InitialCondition::Zero,
        b => InitialCondition::BurnIn(b),
    };
    let sample = simulate(
        &dgp.coefficients,
        &dgp.innovations,
        a.periods,
        &init,
        derive_stream(a.seed, 0, purpose::SIMULATION),
    )
    .map_err(|e| match e {
        Error::InsufficientSample(_) => Failure::input(e.to_string()),
        e => Failure::estimation(e.to_string()),
    })?;
    let columns: Vec<String> = (1..=dgp.n()).map(|k| format!("y{k}")).collect();
    write_series(sink(a.out.as_deref())?, &columns, &sample.data).map_err(io_failure)
}

// ---------------------------------------------------------------------------

fn read_table(path: &Path) -> Result<McResultTable, Failure> {
    let file = File::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    McResultTable::read_csv(file).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn cmd_compare(a: CompareArgs) -> CmdResult {
    let observed = read_table(&a.observed)?;
    let reference = read_table(&a.reference)?;
    let mismatches = compare_tables(&observed, &reference, a.coverage_tol, a.length_tol)?;
    let mut out = io::stdout().lock();
    writeln!(out, "dgp,method,horizon,coverage,reference_coverage,median_length,reference_median_length")
        .map_err(io_failure)?;
    for m in &mismatches {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            m.dgp, m.method, m.horizon, m.coverage.0, m.coverage.1, m.median_length.0, m.median_length.1
        )
        .map_err(io_failure)?;
    }
    eprintln!("{} of {} cells outside tolerance", mismatches.len(), reference.rows.len());
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_MISMATCH,
            message: "tables differ".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_lists() {
        assert_eq!(parse_horizons("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_horizons("1, 6,12").unwrap(), vec![1, 6, 12]);
        assert_eq!(parse_horizons("1-2,5").unwrap(), vec![1, 2, 5]);
        assert!(parse_horizons("0-3").is_err());
        assert!(parse_horizons("4-1").is_err());
        assert!(parse_horizons("x").is_err());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(Failure::from(Error::ConfigInvalid("x".into())).code, EXIT_INPUT);
        assert_eq!(Failure::from(Error::SingularSigma).code, EXIT_ESTIMATION);
        let reps = Error::TooManyFailedReps {
            cell: "c".into(),
            failed: 2,
            total: 10,
        };
        assert_eq!(Failure::from(reps).code, EXIT_FAILURES);
    }
}
