use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use packdim::dimension::{self, Quantity, ScalingReport};
use packdim::fractal::{build_z, DigitSet, LogSequenceSet, DEFAULT_POINT_CAP};
use packdim::gauge::Generator;
use packdim::harness::{self, Suite, SuiteParams, SUITE_CAPS};
use packdim::metric::{format_float, FiniteMetricSpace, Metric};
use packdim::packing::{Caps, Mode};
use packdim::rng::SplitMix64;
use packdim::Error;

#[derive(Parser, Debug)]
#[command(name = "packdim", version, about = "Capacities, packing pre-measures and dimension estimates on finite metric spaces")]
struct Cli {
    /// RNG seed for randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Size cap for every exact solver.
    #[arg(long, global = true)]
    cap_exact: Option<usize>,
    /// JSON file with defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    cap_exact: Option<usize>,
}

/// Settings after merging flags over the config file.
#[derive(Debug, Clone)]
struct RunConfig {
    seed: u64,
    format: Option<Format>,
    out: Option<PathBuf>,
    /// Caps for `generate` and `estimate`.
    caps: Caps,
    /// Caps for `verify`, whose suites need larger exact instances.
    suite_caps: Caps,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a point cloud CSV or a construction manifest.
    Generate(GenerateArgs),
    /// Scaling report and dimension estimate.
    Estimate(EstimateArgs),
    /// Run a property suite (or `all`).
    Verify(VerifyArgs),
    /// Merge scaling reports into one long-form CSV.
    Plotdata { reports: Vec<PathBuf> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    K0,
    K1,
    Logset,
    Z,
    RandomCloud,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long)]
    depth: Option<u64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    /// Number of points (random clouds).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Last index of the log set.
    #[arg(long)]
    cutoff: Option<u64>,
    /// Geometric generator `anchor·ratio^k` instead of dyadic.
    #[arg(long, num_args = 2, value_names = ["ANCHOR", "RATIO"])]
    geometric: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EstimateKind {
    Lbdim,
    Ubdim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Oracle {
    K0,
    K1,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Point cloud CSV.
    #[arg(long, conflicts_with = "oracle")]
    input: Option<PathBuf>,
    /// Use a digit-set oracle instead of a point cloud.
    #[arg(long, value_enum)]
    oracle: Option<Oracle>,
    #[arg(long, value_enum, default_value = "lbdim")]
    kind: EstimateKind,
    /// `dyadic:A:B` for δ = 2^-k, k = A..=B, or a comma list of δ values.
    #[arg(long, default_value = "dyadic:1:10")]
    scales: String,
    #[arg(long)]
    window: Option<f64>,
    /// Comma list of row indices.
    #[arg(long)]
    subsequence: Option<String>,
    #[arg(long, value_enum, default_value = "covering")]
    quantity: QuantityArg,
    #[arg(long)]
    greedy: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum QuantityArg {
    Covering,
    Capacity,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    suite: String,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    depth: Option<usize>,
}

enum Failure {
    Violations,
    Config(String),
    Cap(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TooLargeForExact { .. } | Error::TooManyPoints { .. } => Failure::Cap(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}

fn run(cli: Cli) -> u8 {
    let result = load_config(&cli).and_then(|cfg| match &cli.command {
        Command::Generate(a) => generate(&cfg, a),
        Command::Estimate(a) => estimate(&cfg, a),
        Command::Verify(a) => verify(&cfg, a),
        Command::Plotdata { reports } => plotdata(&cfg, reports),
    });
    match result {
        Ok(()) => 0,
        Err(Failure::Violations) => 1,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Cap(msg)) => {
            eprintln!("error: {msg}; rerun with --greedy or a larger --cap-exact");
            3
        }
    }
}

fn load_config(cli: &Cli) -> std::result::Result<RunConfig, Failure> {
    let file: ConfigFile = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let cap = cli.cap_exact.or(file.cap_exact);
    if cap == Some(0) {
        return Err(Failure::Config("--cap-exact must be positive".into()));
    }
    Ok(RunConfig {
        seed: cli.seed.or(file.seed).unwrap_or(42),
        format: cli.format.or(file.format),
        out: cli.out.clone().or(file.out),
        caps: cap.map(Caps::uniform).unwrap_or_default(),
        suite_caps: cap.map(Caps::uniform).unwrap_or(SUITE_CAPS),
    })
}

fn emit(cfg: &RunConfig, body: &str) -> Outcome {
    match &cfg.out {
        Some(path) => fs::write(path, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn points_csv(x: &FiniteMetricSpace) -> std::result::Result<String, Failure> {
    let mut buf = Vec::new();
    x.write_points_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("utf-8"))
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> std::result::Result<T, Failure> {
    v.ok_or_else(|| Failure::Config(format!("generate {kind} needs --{flag}")))
}

fn generate(cfg: &RunConfig, a: &GenerateArgs) -> Outcome {
    match a.kind {
        Kind::K0 | Kind::K1 => {
            let depth = need(a.depth, "depth", "k0/k1")?;
            let set = if a.kind == Kind::K0 { DigitSet::k0(depth)? } else { DigitSet::k1(depth)? };
            let x = set.discretize(depth, DEFAULT_POINT_CAP)?;
            emit(cfg, &points_csv(&x)?)?;
            eprintln!("{}: {} points at depth {depth}", set.label(), x.len());
        }
        Kind::Logset => {
            let cutoff = need(a.cutoff, "cutoff", "logset")?;
            let x = LogSequenceSet::new(cutoff)?.discretize(DEFAULT_POINT_CAP)?;
            emit(cfg, &points_csv(&x)?)?;
            eprintln!("logset: {} points", x.len());
        }
        Kind::RandomCloud => {
            let n = need(a.n, "n", "random-cloud")?;
            let dim = a.dim.unwrap_or(2);
            if n == 0 || dim == 0 {
                return Err(Failure::Config("--n and --dim must be positive".into()));
            }
            let mut rng = SplitMix64::new(cfg.seed);
            let x = harness::random_cloud(&mut rng, n, dim, "random-cloud")?;
            emit(cfg, &points_csv(&x)?)?;
            eprintln!("random-cloud: {n} points in dimension {dim}, seed {}", cfg.seed);
        }
        Kind::Z => {
            let (s, m) = (need(a.s, "s", "z")?, a.m.unwrap_or(1));
            let depth = need(a.depth, "depth", "z")? as usize;
            let generator = match a.geometric.as_deref() {
                Some([anchor, ratio]) => Generator::Geometric { anchor: *anchor, ratio: *ratio },
                _ => Generator::Dyadic,
            };
            let z = build_z(s, m, generator, depth)?;
            let report = z.check_invariants();
            let mut manifest = z.manifest();
            manifest["checks"] = json!(report.summary());
            manifest["violations"] = json!(report.violations());
            emit(cfg, &(serde_json::to_string_pretty(&manifest).expect("json") + "\n"))?;
            eprintln!("z: s={s} m={m} depth {depth}: checks {}", report.summary());
        }
    }
    Ok(())
}

fn parse_scales(spec: &str) -> std::result::Result<Vec<f64>, Failure> {
    let bad = || Failure::Config(format!("bad --scales {spec:?}"));
    if let Some(rest) = spec.strip_prefix("dyadic:") {
        let (a, b) = rest.split_once(':').ok_or_else(bad)?;
        let (a, b): (u32, u32) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        if a == 0 || b < a || b > 1000 {
            return Err(bad());
        }
        return Ok((a..=b).map(|k| 0.5f64.powi(k as i32)).collect());
    }
    spec.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn estimate(cfg: &RunConfig, a: &EstimateArgs) -> Outcome {
    let deltas = parse_scales(&a.scales)?;
    let report = match (&a.input, a.oracle) {
        (Some(path), _) => {
            let file = fs::File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string();
            let x = FiniteMetricSpace::read_points_csv(label.clone(), file)?;
            let quantity = if a.quantity == QuantityArg::Covering { Quantity::Covering } else { Quantity::Capacity };
            let mode = if a.greedy { Mode::Greedy } else { Mode::Exact };
            dimension::scaling_report(label, &x, &x.all_points(), &deltas, quantity, mode, cfg.caps)?
        }
        (None, Some(oracle)) => {
            let levels: Vec<u64> = deltas
                .iter()
                .map(|d| {
                    let k = -d.log2();
                    (k.fract() == 0.0 && k >= 1.0).then_some(k as u64).ok_or_else(|| Failure::Config("oracle inputs need dyadic scales".into()))
                })
                .collect::<std::result::Result<_, _>>()?;
            let depth = levels.iter().copied().max().unwrap_or(1);
            let set = if oracle == Oracle::K0 { DigitSet::k0(depth)? } else { DigitSet::k1(depth)? };
            dimension::digit_report(&set, &levels)?
        }
        (None, None) => return Err(Failure::Config("estimate needs --input or --oracle".into())),
    };
    let sub: Option<Vec<usize>> = match &a.subsequence {
        Some(s) => Some(s.split(',').map(|v| v.trim().parse().map_err(|_| Failure::Config(format!("bad --subsequence {s:?}")))).collect::<std::result::Result<_, _>>()?),
        None => None,
    };
    let est = match a.kind {
        EstimateKind::Lbdim => dimension::lbdim_estimate(&report, a.window, sub.as_deref())?,
        EstimateKind::Ubdim => dimension::ubdim_estimate(&report, a.window, sub.as_deref())?,
    };
    let csv = report.to_csv_string()?;
    let est_json = est.to_json()? + "\n";
    match (&cfg.out, cfg.format) {
        (Some(path), _) => {
            fs::write(path, &csv)?;
            fs::write(sibling(path, "estimate.json"), &est_json)?;
        }
        (None, Some(Format::Csv)) => emit(cfg, &csv)?,
        (None, Some(Format::Json)) => emit(cfg, &est_json)?,
        (None, None) => emit(cfg, &(csv + &est_json))?,
    }
    eprintln!("{}: {:?} estimate {} ({} rows, source {})", report.label, a.kind, format_float(est.value), report.len(), est.source_quality.as_str());
    Ok(())
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

fn verify(cfg: &RunConfig, a: &VerifyArgs) -> Outcome {
    let params = SuiteParams { seed: cfg.seed, trials: a.trials, caps: cfg.suite_caps, s: a.s, m: a.m, depth: a.depth };
    let reports = if a.suite == "all" {
        harness::run_battery(&params)?
    } else {
        vec![harness::run_suite(Suite::parse(&a.suite)?, &params)?]
    };
    let body = if reports.len() == 1 { reports[0].to_json()? } else { harness::battery_json(&reports)? };
    emit(cfg, &(body + "\n"))?;
    let mut failed = false;
    for r in &reports {
        eprintln!("{}: {} trials, {} checks, {} violations", r.suite, r.trials, r.checks, r.violations.len());
        failed |= !r.passed();
    }
    if failed {
        Err(Failure::Violations)
    } else {
        Ok(())
    }
}

fn plotdata(cfg: &RunConfig, reports: &[PathBuf]) -> Outcome {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "delta", "log_inv_delta", "log_count", "slope"]).map_err(|e| Failure::Config(e.to_string()))?;
    for path in reports {
        let file = fs::File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let series = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report").to_string();
        let report = ScalingReport::read_csv(series.clone(), file).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        for row in &report.rows {
            let delta = if row.delta > 0.0 { format_float(row.delta) } else { format!("exp({})", format_float(row.ln_delta)) };
            w.write_record([series.clone(), delta, format_float(-row.ln_delta), format_float(row.ln_count), format_float(row.slope)])
                .map_err(|e| Failure::Config(e.to_string()))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure::Config(e.to_string()))?;
    emit(cfg, &String::from_utf8(bytes).expect("utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> u8 {
        run(Cli::try_parse_from(std::iter::once("packdim").chain(args.iter().copied())).expect("args parse"))
    }

    fn out_arg(p: &Path) -> String {
        p.to_str().unwrap().to_string()
    }

    fn write_cloud(path: &Path, xs: &[f64]) {
        let mut text = String::from("id,x0\n");
        for (i, x) in xs.iter().enumerate() {
            text += &format!("{i},{x}\n");
        }
        fs::write(path, text).unwrap();
    }

    fn estimate_value(csv: &Path) -> f64 {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(sibling(csv, "estimate.json")).unwrap()).unwrap();
        v["value"].as_f64().unwrap()
    }

    #[test]
    fn generate_z_manifest_is_clean() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("z.json");
        assert_eq!(call(&["generate", "z", "--s", "0.5", "--m", "1", "--depth", "8", "--out", &out_arg(&out)]), 0);
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["checks"], "OK");
        assert_eq!(v["g"][1], "4");
        assert_eq!(call(&["generate", "z", "--s", "3", "--m", "1", "--depth", "4", "--out", &out_arg(&out)]), 2);
    }

    #[test]
    fn generate_k0_point_count() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("k0.csv");
        assert_eq!(call(&["generate", "k0", "--depth", "12", "--out", &out_arg(&out)]), 0);
        let x = FiniteMetricSpace::read_points_csv("k0", fs::File::open(&out).unwrap()).unwrap();
        // digits 1 and 2 of the first twelve lie in D
        assert_eq!(x.len(), 1 << 10);
    }

    #[test]
    fn random_cloud_is_seeded() {
        let dir = tempfile::tempdir().unwrap();
        let paths: Vec<_> = (0..3).map(|i| dir.path().join(format!("c{i}.csv"))).collect();
        for (p, seed) in paths.iter().zip(["5", "5", "6"]) {
            assert_eq!(call(&["generate", "random-cloud", "--n", "40", "--dim", "3", "--seed", seed, "--out", &out_arg(p)]), 0);
        }
        let read = |p: &PathBuf| fs::read(p).unwrap();
        assert_eq!(read(&paths[0]), read(&paths[1]));
        assert_ne!(read(&paths[0]), read(&paths[2]));
        assert_eq!(call(&["generate", "random-cloud", "--n", "0", "--out", &out_arg(&paths[0])]), 2);
    }

    #[test]
    fn estimates_on_simple_clouds() {
        let dir = tempfile::tempdir().unwrap();
        let single = dir.path().join("single.csv");
        write_cloud(&single, &[0.25]);
        let rep = dir.path().join("single-report.csv");
        assert_eq!(call(&["estimate", "--input", &out_arg(&single), "--out", &out_arg(&rep)]), 0);
        assert_eq!(estimate_value(&rep), 0.0);

        let grid = dir.path().join("grid.csv");
        write_cloud(&grid, &(0..=4096).map(|k| k as f64 / 4096.0).collect::<Vec<_>>());
        let rep = dir.path().join("grid-report.csv");
        for kind in ["lbdim", "ubdim"] {
            assert_eq!(call(&["estimate", "--input", &out_arg(&grid), "--kind", kind, "--scales", "dyadic:1:8", "--out", &out_arg(&rep)]), 0);
            assert!((estimate_value(&rep) - 1.0).abs() <= 0.05, "{kind}: {}", estimate_value(&rep));
        }
        assert_eq!(call(&["estimate", "--input", &out_arg(&dir.path().join("missing.csv")), "--out", &out_arg(&rep)]), 2);
    }

    #[test]
    fn oracle_estimate_and_plotdata() {
        let dir = tempfile::tempdir().unwrap();
        let rep = dir.path().join("k0.csv");
        assert_eq!(call(&["estimate", "--oracle", "k0", "--scales", "dyadic:1:24", "--out", &out_arg(&rep)]), 0);
        let merged = dir.path().join("merged.csv");
        assert_eq!(call(&["plotdata", &out_arg(&rep), "--out", &out_arg(&merged)]), 0);
        let text = fs::read_to_string(&merged).unwrap();
        assert!(text.starts_with("series,delta,log_inv_delta,log_count,slope\n"));
        assert_eq!(text.lines().count(), 25);
        assert!(text.lines().all(|l| l == text.lines().next().unwrap() || l.starts_with("k0,")));
        assert_eq!(call(&["plotdata", "--out", &out_arg(&merged)]), 0);
        assert_eq!(fs::read_to_string(&merged).unwrap().lines().count(), 1);
        assert_eq!(call(&["plotdata", &out_arg(&dir.path().join("nope.csv")), "--out", &out_arg(&merged)]), 2);
    }

    #[test]
    fn verify_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("v.json");
        assert_eq!(call(&["verify", "lemma-mi", "--trials", "50", "--out", &out_arg(&out)]), 0);
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["trials"], 50);
        assert_eq!(call(&["verify", "no-such-suite", "--out", &out_arg(&out)]), 2);
    }

    #[test]
    fn config_file_and_cap() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.json");
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        fs::write(&cfg, r#"{"seed": 9}"#).unwrap();
        assert_eq!(call(&["--config", &out_arg(&cfg), "generate", "random-cloud", "--n", "10", "--out", &out_arg(&a)]), 0);
        assert_eq!(call(&["--seed", "9", "generate", "random-cloud", "--n", "10", "--out", &out_arg(&b)]), 0);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        fs::write(&cfg, r#"{"colour": 1}"#).unwrap();
        assert_eq!(call(&["--config", &out_arg(&cfg), "verify", "lemma-mi", "--out", &out_arg(&a)]), 2);
        assert_eq!(call(&["--cap-exact", "0", "verify", "lemma-mi", "--out", &out_arg(&a)]), 2);

        let cloud = dir.path().join("cloud.csv");
        assert_eq!(call(&["generate", "random-cloud", "--n", "200", "--dim", "2", "--out", &out_arg(&cloud)]), 0);
        let rep = dir.path().join("r.csv");
        let args = ["--cap-exact", "8", "estimate", "--input", &out_arg(&cloud), "--quantity", "capacity", "--scales", "0.2,0.1,0.05,0.025", "--window", "1", "--out", &out_arg(&rep)];
        assert_eq!(call(&args), 3);
        let mut greedy = args.to_vec();
        greedy.push("--greedy");
        assert_eq!(call(&greedy), 0);
    }
}
