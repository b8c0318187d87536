//! `lazlab`: command-line front end.
//!
//! Exit codes: 0 pass, 1 verdict failed, 2 usage or input error, 3 numerical
//! failure. Every failure prints `{"error": {...}}` on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lazlab::acceptance::{aligned_error, profile_gaps, run_all, true_profile};
use lazlab::conjugacy::{system_residual, DEFAULT_JET_GRID};
use lazlab::io::{self, OrbitRow};
use lazlab::{
    build_domain, coefficient_profile, differentiate_profile, find_annihilating_combination, match_profiles,
    orbit, reconstruct_curvature, solve_jet_system, to_lazutkin, transition_jet, verify_tangency, BoundaryCurve,
    CoeffProfile, Combination, CurvatureProfile, Error, Execution, FitConfig, LazutkinWeights, PhasePoint,
    ProfileSource, ReconstructionRoute,
};

#[derive(Parser)]
#[command(name = "lazlab", version, about = "Convex billiards in Lazutkin coordinates")]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Options {
    /// Grid size N (x-grid for profiles, s-grid for jets)
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Largest y on the fitting ladder
    #[arg(long, global = true)]
    ymax: Option<f64>,
    /// Number of ladder samples
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Verdict tolerance (each command has its own default)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Directory for artifacts; without it the main artifact goes to stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Source {
    Closed,
    Fitted,
}

impl From<Source> for ProfileSource {
    fn from(s: Source) -> Self {
        match s {
            Source::Closed => ProfileSource::Closed,
            Source::Fitted => ProfileSource::Fitted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WeightSet {
    /// Weights validated against the simulated map
    Derived,
    /// The combination (3, -14, 2) with mu = 2/3 as usually quoted
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Route {
    Alpha3,
    Invariant,
}

#[derive(Subcommand)]
enum Command {
    /// Domain utilities
    Domain {
        #[command(subcommand)]
        action: DomainAction,
    },
    /// Iterate the billiard map and dump the orbit in both coordinate systems
    Orbit {
        spec: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long)]
        phi: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Closed-form and fitted coefficient profiles
    Coeffs { spec: PathBuf },
    /// The invariant K on a coefficient profile
    Invariant {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = WeightSet::Derived)]
        combination: WeightSet,
        #[arg(long, value_enum, default_value_t = Source::Closed)]
        source: Source,
    },
    /// Reconstruct the scale-free curvature profile from Lazutkin coefficients
    Reconstruct {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Source::Fitted)]
        source: Source,
        #[arg(long, value_enum, default_value_t = Route::Alpha3)]
        route: Route,
        #[arg(long, value_enum, default_value_t = WeightSet::Derived)]
        combination: WeightSet,
    },
    /// Decide whether two specs (or two rigidity CSVs) describe the same table
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, value_enum, default_value_t = Source::Fitted)]
        source: Source,
    },
    /// Order-1 conjugacy jet between two tables and the tangency verdict
    Conjugacy { first: PathBuf, second: PathBuf },
    /// Run the acceptance suite
    Selftest,
}

#[derive(Subcommand)]
enum DomainAction {
    /// Validate a spec and print perimeter, Lazutkin constant and closure error
    Check { spec: PathBuf },
}

struct Artifact {
    name: &'static str,
    csv: Vec<u8>,
    json: Value,
}

struct Report {
    pass: bool,
    summary: Value,
    artifacts: Vec<Artifact>,
}

enum Failure {
    Usage(String),
    Lab(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lab(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Lab(e) if e.is_numerical() => 3,
            Failure::Lab(_) => 2,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m.clone()),
            Failure::Lab(e) => (e.kind(), e.to_string()),
        };
        json!({"error": {"kind": kind, "message": message, "exit_code": self.exit_code()}})
    }
}

type Outcome = Result<Report, Failure>;

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> lazlab::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn load(path: &Path) -> Result<BoundaryCurve, Failure> {
    Ok(build_domain(io::load_spec(path)?)?)
}

fn fit_config(opts: &Options) -> FitConfig {
    let mut cfg = FitConfig::default();
    if let Some(y) = opts.ymax {
        cfg.y_max = y;
    }
    if let Some(n) = opts.samples {
        cfg.n_samples = n;
    }
    cfg
}

fn grid(opts: &Options, default: usize) -> Result<usize, Failure> {
    let n = opts.grid.unwrap_or(default);
    if n < 8 {
        return Err(Failure::Usage(format!("--grid {n} is below the minimum of 8")));
    }
    Ok(n)
}

fn profile_json(p: &CoeffProfile) -> Value {
    json!({
        "x": p.x, "alpha3": p.alpha3, "alpha4": p.alpha4, "beta4": p.beta4,
        "alpha3prime": p.alpha3_prime, "source": p.source.as_str(),
    })
}

fn curvature_json(p: &CurvatureProfile) -> Value {
    json!({"x": p.x, "K": p.k, "g": p.g, "log_rho": p.log_rho})
}

fn combination(set: WeightSet) -> Result<Combination, Error> {
    match set {
        WeightSet::Derived => find_annihilating_combination(&LazutkinWeights::derived()),
        WeightSet::Printed => Ok(Combination::PRINTED),
    }
}

fn degenerate_report(e: Error) -> Outcome {
    match e {
        Error::Degenerate { rank, detail } => Ok(Report {
            pass: false,
            summary: json!({"combination": null, "degenerate": {"rank": rank, "detail": detail}}),
            artifacts: vec![],
        }),
        other => Err(other.into()),
    }
}

fn domain_check(spec: &Path) -> Outcome {
    let c = load(spec)?;
    Ok(Report {
        pass: true,
        summary: json!({
            "name": c.spec().name,
            "perimeter": c.perimeter(),
            "lazutkin_constant": c.lazutkin_constant(),
            "closure_error": c.closure_error(),
            "min_radius": c.min_radius(),
        }),
        artifacts: vec![],
    })
}

fn orbit_cmd(spec: &Path, s: f64, phi: f64, steps: usize) -> Outcome {
    let c = load(spec)?;
    let seed = PhasePoint::new(s, phi);
    seed.validate()?;
    let seed = PhasePoint::new(c.reduce(s), phi);
    let points: Vec<PhasePoint> = std::iter::once(seed).chain(orbit(&c, seed, steps)?).collect();
    let rows: Vec<OrbitRow> = points
        .iter()
        .enumerate()
        .map(|(step, p)| {
            let q = to_lazutkin(&c, *p);
            OrbitRow {
                step,
                s: p.s,
                phi: p.phi,
                lazutkin: Some((q.x, q.y)),
            }
        })
        .collect();
    let data: Vec<Value> = rows
        .iter()
        .map(|r| json!({"step": r.step, "s": r.s, "phi": r.phi, "x": r.lazutkin.map(|q| q.0), "y": r.lazutkin.map(|q| q.1)}))
        .collect();
    Ok(Report {
        pass: true,
        summary: json!({"steps": steps, "perimeter": c.perimeter()}),
        artifacts: vec![Artifact {
            name: "orbit",
            csv: csv_bytes(|w| io::write_orbit_csv(w, &rows))?,
            json: Value::Array(data),
        }],
    })
}

fn coeffs_cmd(opts: &Options, exec: Execution, spec: &Path) -> Outcome {
    let c = load(spec)?;
    let n = grid(opts, 16)?;
    let cfg = fit_config(opts);
    let closed = coefficient_profile(&c, n, &cfg, ProfileSource::Closed, exec)?;
    let fitted = differentiate_profile(&coefficient_profile(&c, n, &cfg, ProfileSource::Fitted, exec)?)?;
    let [g3, g4, gb] = profile_gaps(&closed, &fitted);
    let tol = opts.tol.unwrap_or(2e-2);
    let mean = closed.alpha3.iter().sum::<f64>() / n as f64;
    let gap = g3.max(g4).max(gb);
    let mut csv = csv_bytes(|w| io::write_profile_csv(w, &closed))?;
    let fitted_csv = csv_bytes(|w| io::write_profile_csv(w, &fitted))?;
    csv.extend(fitted_csv.split_inclusive(|&b| b == b'\n').skip(1).flatten());
    Ok(Report {
        pass: gap < tol,
        summary: json!({
            "summary": format!("alpha3 mean {mean:.5}, max gap closed/fitted {gap:.2e}"),
            "alpha3_mean": mean,
            "max_gap": {"alpha3": g3, "alpha4": g4, "beta4": gb},
            "tolerance": tol,
            "fits_reliable": fitted.reliable(),
        }),
        artifacts: vec![Artifact {
            name: "profile",
            csv,
            json: json!({"closed": profile_json(&closed), "fitted": profile_json(&fitted)}),
        }],
    })
}

fn source_profile(c: &BoundaryCurve, n: usize, cfg: &FitConfig, source: Source, exec: Execution) -> lazlab::Result<CoeffProfile> {
    let p = coefficient_profile(c, n, cfg, source.into(), exec)?;
    match source {
        Source::Closed => Ok(p),
        Source::Fitted => differentiate_profile(&p),
    }
}

fn invariant_cmd(opts: &Options, exec: Execution, spec: &Path, set: WeightSet, source: Source) -> Outcome {
    let c = load(spec)?;
    let n = grid(opts, 64)?;
    let comb = match combination(set) {
        Ok(comb) => comb,
        Err(e) => return degenerate_report(e),
    };
    let profile = source_profile(&c, n, &fit_config(opts), source, exec)?;
    let rec = reconstruct_curvature(&profile, ReconstructionRoute::Invariant(comb))?;
    let k = rec.k.clone().unwrap_or_default();
    let residual = profile
        .x
        .iter()
        .zip(&k)
        .map(|(&x, k)| {
            let j = lazlab::x_derivatives(&c, x);
            (k - comb.mu * (j.d1 / j.rho).powi(3)).abs()
        })
        .fold(0.0f64, f64::max);
    let tol = opts.tol.unwrap_or(1e-8);
    Ok(Report {
        pass: residual < tol,
        summary: json!({
            "combination": {"alpha3prime": comb.c_a3p, "alpha4": comb.c_a4, "beta4": comb.c_b4, "mu": comb.mu},
            "identity_residual": residual,
            "tolerance": tol,
        }),
        artifacts: vec![Artifact {
            name: "invariant",
            csv: csv_bytes(|w| io::write_rigidity_csv(w, &rec))?,
            json: curvature_json(&rec),
        }],
    })
}

fn reconstruct_profile(
    opts: &Options,
    exec: Execution,
    c: &BoundaryCurve,
    n: usize,
    source: Source,
    route: ReconstructionRoute,
) -> lazlab::Result<CurvatureProfile> {
    let profile = source_profile(c, n, &fit_config(opts), source, exec)?;
    reconstruct_curvature(&profile, route)
}

fn reconstruct_cmd(opts: &Options, exec: Execution, spec: &Path, source: Source, route: Route, set: WeightSet) -> Outcome {
    let c = load(spec)?;
    let n = grid(opts, 64)?;
    let route = match route {
        Route::Alpha3 => ReconstructionRoute::Alpha3,
        Route::Invariant => match combination(set) {
            Ok(comb) => ReconstructionRoute::Invariant(comb),
            Err(e) => return degenerate_report(e),
        },
    };
    let rec = reconstruct_profile(opts, exec, &c, n, source, route)?;
    let error = aligned_error(&true_profile(&c, n), &rec)?;
    let tol = opts.tol.unwrap_or(match source {
        Source::Closed => 1e-8,
        Source::Fitted => 1e-2,
    });
    Ok(Report {
        pass: rec.consistent && error < tol,
        summary: json!({
            "round_trip_error": error,
            "tolerance": tol,
            "diagnostic": rec.diagnostic,
            "consistent": rec.consistent,
        }),
        artifacts: vec![Artifact {
            name: "reconstruction",
            csv: csv_bytes(|w| io::write_rigidity_csv(w, &rec))?,
            json: curvature_json(&rec),
        }],
    })
}

fn compare_input(opts: &Options, exec: Execution, path: &Path, source: Source) -> Result<CurvatureProfile, Failure> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        return Ok(io::read_rigidity_csv(file)?);
    }
    let c = load(path)?;
    Ok(reconstruct_profile(opts, exec, &c, grid(opts, 64)?, source, ReconstructionRoute::Alpha3)?)
}

fn compare_cmd(opts: &Options, exec: Execution, first: &Path, second: &Path, source: Source) -> Outcome {
    let p1 = compare_input(opts, exec, first, source)?;
    let p2 = compare_input(opts, exec, second, source)?;
    let tol = opts.tol.unwrap_or(match source {
        Source::Closed => 1e-6,
        Source::Fitted => 2e-2,
    });
    let m = match_profiles(&p1, &p2, tol)?;
    Ok(Report {
        pass: m.matched,
        summary: serde_json::to_value(m).map_err(Error::from)?,
        artifacts: vec![],
    })
}

fn conjugacy_cmd(opts: &Options, first: &Path, second: &Path) -> Outcome {
    let (c1, c2) = (load(first)?, load(second)?);
    let n = grid(opts, DEFAULT_JET_GRID)?;
    let closed = transition_jet(&c1, &c2, n);
    let solved = solve_jet_system(&c1, &c2, n)?;
    let tol = opts.tol.unwrap_or(1e-8);
    let report = verify_tangency(&solved, &closed, tol)?;
    let (r1, r2) = system_residual(&c1, &c2, &closed);
    let jet_json = |j: &lazlab::ConjugacyJet| json!({"s": j.s, "a0": j.a0, "a0prime": j.a0_prime, "b1": j.b1});
    let mut summary = serde_json::to_value(report).map_err(Error::from)?;
    summary["endpoint_error"] = json!(solved.endpoint - c2.perimeter());
    summary["transition_residual"] = json!([r1, r2]);
    Ok(Report {
        pass: report.tangent,
        summary,
        artifacts: vec![
            Artifact {
                name: "jet_solved",
                csv: csv_bytes(|w| io::write_jet_csv(w, &solved))?,
                json: jet_json(&solved),
            },
            Artifact {
                name: "jet_transition",
                csv: csv_bytes(|w| io::write_jet_csv(w, &closed))?,
                json: jet_json(&closed),
            },
        ],
    })
}

fn selftest(exec: Execution) -> Outcome {
    let outcomes = run_all(exec);
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    Ok(Report {
        pass: failed.is_empty(),
        summary: json!({"criteria": outcomes, "failed": failed}),
        artifacts: vec![],
    })
}

fn publish(opts: &Options, report: &Report) -> Result<(), Failure> {
    let mut summary = report.summary.clone();
    summary["pass"] = json!(report.pass);
    let io_err = |p: &Path, e: std::io::Error| Failure::Lab(Error::Io(format!("{}: {e}", p.display())));
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut written = Vec::new();
        for a in &report.artifacts {
            let (path, bytes) = match opts.format {
                Format::Csv => (dir.join(format!("{}.csv", a.name)), a.csv.clone()),
                Format::Json => (dir.join(format!("{}.json", a.name)), json_bytes(&a.json)),
            };
            std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
            written.push(path.display().to_string());
        }
        if !written.is_empty() {
            summary["artifacts"] = json!(written);
        }
        stdout_line(&pretty(&summary));
        return Ok(());
    }
    match (opts.format, report.artifacts.first()) {
        (Format::Json, _) => {
            if !report.artifacts.is_empty() {
                let data: serde_json::Map<String, Value> =
                    report.artifacts.iter().map(|a| (a.name.to_string(), a.json.clone())).collect();
                summary["data"] = Value::Object(data);
            }
            stdout_line(&pretty(&summary));
        }
        (Format::Csv, Some(main)) => {
            stdout_bytes(&main.csv);
            eprintln!("{}", pretty(&summary));
        }
        (Format::Csv, None) => stdout_line(&pretty(&summary)),
    }
    Ok(())
}

/// Writes to stdout, treating a closed pipe as a normal end of output.
fn stdout_bytes(bytes: &[u8]) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(bytes).and_then(|_| out.flush());
}

fn stdout_line(text: &str) {
    stdout_bytes(format!("{text}\n").as_bytes());
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_else(|_| v.to_string())
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = pretty(v);
    s.push('\n');
    s.into_bytes()
}

/// Applies `LAZLAB_THREADS` and picks the execution mode.
fn execution() -> Result<Execution, Failure> {
    let threads = match std::env::var("LAZLAB_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Failure::Usage(format!("LAZLAB_THREADS={v:?} is not a positive integer")))?,
        ),
        Err(_) => None,
    };
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(if threads == Some(1) {
            Execution::Sequential
        } else {
            Execution::Parallel
        })
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(Execution::Sequential)
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let exec = execution()?;
    let opts = &cli.opts;
    match &cli.command {
        Command::Domain {
            action: DomainAction::Check { spec },
        } => domain_check(spec),
        Command::Orbit { spec, s, phi, steps } => orbit_cmd(spec, *s, *phi, *steps),
        Command::Coeffs { spec } => coeffs_cmd(opts, exec, spec),
        Command::Invariant {
            spec,
            combination,
            source,
        } => invariant_cmd(opts, exec, spec, *combination, *source),
        Command::Reconstruct {
            spec,
            source,
            route,
            combination,
        } => reconstruct_cmd(opts, exec, spec, *source, *route, *combination),
        Command::Compare { first, second, source } => compare_cmd(opts, exec, first, second, *source),
        Command::Conjugacy { first, second } => conjugacy_cmd(opts, first, second),
        Command::Selftest => selftest(exec),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(f.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(Failure::Usage(e.to_string().trim().to_string())),
    };
    let report = match dispatch(&cli) {
        Ok(r) => r,
        Err(f) => return fail(f),
    };
    if let Err(f) = publish(&cli.opts, &report) {
        return fail(f);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
