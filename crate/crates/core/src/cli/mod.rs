//! Command-line interface: `generate`, `cluster`, `evaluate` and `sweep-k`.
//!
//! Exit codes are 0 on success, 1 on runtime or I/O failure and 2 on usage
//! errors. Every command writes a `manifest.json` next to its outputs; passing
//! that manifest back through `--config` reproduces the run.

mod manifest;
mod settings;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::{ArgAction, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use manifest::{RunManifest, MANIFEST_FILE};
pub use settings::{parse_key_values, Settings};

use crate::cocluster::{cocluster, CoClusterConfig, CoClusterResult, JointObjective};
use crate::data::{
    generate_synthetic, load_dataset, load_ground_truth, save_dataset, Dataset, Domain,
    GroundTruth, SyntheticConfig,
};
use crate::error::Error;
use crate::eval::{
    location_truth_from_geo, rand_index_svg, run_baseline, score, sweep_k, write_rows,
    BaselineMethod, EvalReport, EvalRow, Method, SweepConfig,
};
use crate::kernel::SigmaPolicy;
use crate::solver::{Assignment, InitStrategy, SolverConfig};

pub const RESULT_FILE: &str = "result.json";
pub const TRACE_FILE: &str = "objective_trace.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::TooManyClusters { .. } | Error::MissingGroundTruth => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.into()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(usage(msg()))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "coclust",
    version,
    about = "Co-cluster faces and locations in photo collections"
)]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "COCLUSTER_THREADS")]
    threads: Option<usize>,
    /// Increase diagnostic output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset bundle with ground truth.
    Generate(GenerateArgs),
    /// Co-cluster a bundle, or run a single-domain baseline.
    Cluster(ClusterArgs),
    /// Score a clustering result, or sweep cluster counts.
    Evaluate(EvaluateArgs),
    /// Rand index of every method over a range of cluster counts.
    SweepK(SweepArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Key-value file or manifest supplying defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of people.
    #[arg(long)]
    kf: Option<usize>,
    /// Number of location clusters.
    #[arg(long)]
    kl: Option<usize>,
    /// Face patches per person.
    #[arg(long)]
    faces_per_cluster: Option<usize>,
    /// Location patches per location cluster.
    #[arg(long)]
    locations_per_cluster: Option<usize>,
    /// Face descriptor dimension.
    #[arg(long)]
    face_dim: Option<usize>,
    /// Location descriptor dimension.
    #[arg(long)]
    location_dim: Option<usize>,
    /// Norm of the cluster centers before noise.
    #[arg(long, allow_negative_numbers = true)]
    separation: Option<f64>,
    /// Per-coordinate noise standard deviation.
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    /// Probability that a person is photographed at their home location.
    #[arg(long, allow_negative_numbers = true)]
    cooccurrence_strength: Option<f64>,
    /// Fraction of location clusters that are private.
    #[arg(long, allow_negative_numbers = true)]
    private_fraction: Option<f64>,
    /// Expected fraction of location patches with a verified match.
    #[arg(long, allow_negative_numbers = true)]
    verified_fraction: Option<f64>,
    /// Images per burst of closely timed photos.
    #[arg(long)]
    images_per_burst: Option<usize>,
    /// Leave images without geotags.
    #[arg(long)]
    no_geotag: bool,
}

/// Model settings shared by `cluster`, `evaluate --sweep-k` and `sweep-k`.
#[derive(Debug, Args)]
struct ModelArgs {
    /// Weight of the cross-domain terms.
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Must/cannot weight in the link kernel (soft mode only).
    #[arg(long, allow_negative_numbers = true)]
    link_weight: Option<f64>,
    /// Diagonal shift: zero, gershgorin, exact, or a number.
    #[arg(long)]
    sigma: Option<SigmaPolicy>,
    /// Maximum alternation rounds.
    #[arg(long)]
    outer_max: Option<usize>,
    /// Relative change of the joint objective that stops the alternation.
    #[arg(long, allow_negative_numbers = true)]
    outer_tol: Option<f64>,
    /// Maximum sweeps per kernel k-means solve.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative objective change that stops a solve; 0 disables.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// random or farthest_first.
    #[arg(long)]
    init: Option<InitStrategy>,
    /// Time kernel bandwidth in seconds.
    #[arg(long, allow_negative_numbers = true)]
    bandwidth_s: Option<f64>,
    /// Faces this close in time but far apart cannot be the same person.
    #[arg(long, allow_negative_numbers = true)]
    teleport_window_s: Option<i64>,
    /// Distance that counts as far apart for the rule above.
    #[arg(long, allow_negative_numbers = true)]
    geo_threshold_km: Option<f64>,
    /// Enforce links through kernel weights only.
    #[arg(long)]
    soft: bool,
    /// Drop all cross-domain coupling.
    #[arg(long)]
    freeze_coupling: bool,
    /// Keep round-0 private weights and shared-person links.
    #[arg(long)]
    freeze_weights: bool,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Dataset bundle directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Key-value file or manifest supplying defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of face clusters.
    #[arg(long)]
    kf: Option<usize>,
    /// Number of location clusters.
    #[arg(long)]
    kl: Option<usize>,
    /// cocluster, kmeans_plain, kmeans_constrained or kernel_kmeans_plain.
    #[arg(long)]
    method: Option<Method>,
    /// Domain for baseline methods.
    #[arg(long)]
    domain: Option<Domain>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Bundle holding the dataset and ground truth.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Key-value file or manifest supplying defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// A result.json written by `cluster`.
    #[arg(long)]
    result: Option<PathBuf>,
    /// Inclusive cluster-count range `a:b` to sweep instead.
    #[arg(long)]
    sweep_k: Option<KRange>,
    /// Comma-separated methods, or all.
    #[arg(long)]
    methods: Option<MethodList>,
    /// Comma-separated seeds or ranges a:b.
    #[arg(long)]
    seeds: Option<SeedList>,
    /// Also write rand index plots as SVG.
    #[arg(long)]
    plot: bool,
    /// Replace location ground truth by geotag single linkage with this many clusters.
    #[arg(long)]
    geo_locations: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Dataset bundle directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Key-value file or manifest supplying defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inclusive cluster-count range `a:b`.
    #[arg(long)]
    k: Option<KRange>,
    /// Comma-separated methods, or all.
    #[arg(long)]
    methods: Option<MethodList>,
    /// Comma-separated seeds or ranges a:b.
    #[arg(long)]
    seeds: Option<SeedList>,
    /// Also write rand index plots as SVG.
    #[arg(long)]
    plot: bool,
    /// Replace location ground truth by geotag single linkage with this many clusters.
    #[arg(long)]
    geo_locations: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
}

/// Inclusive range of cluster counts, written `a:b` or `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl KRange {
    pub fn values(self) -> Vec<usize> {
        (self.lo..=self.hi).collect()
    }
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("expected a:b with integer bounds, got '{s}'"))
        };
        let (lo, hi) = match s.split_once(':') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo < 2 || hi < lo {
            return Err(format!("range '{s}' must satisfy 2 <= a <= b"));
        }
        Ok(KRange { lo, hi })
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

/// Comma-separated method names, or `all`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodList(pub Vec<Method>);

impl FromStr for MethodList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "all" {
            return Ok(MethodList(Method::ALL.to_vec()));
        }
        let mut methods = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Method = part.parse()?;
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
        if methods.is_empty() {
            return Err("no methods given".into());
        }
        Ok(MethodList(methods))
    }
}

impl fmt::Display for MethodList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|m| m.name()).collect();
        f.write_str(&names.join(","))
    }
}

/// Comma-separated seeds; each item is a seed or an inclusive range `a:b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad seed '{t}' in '{s}'"))
        };
        let mut seeds = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once(':') {
                Some((a, b)) => {
                    let (a, b) = (parse(a)?, parse(b)?);
                    if b < a {
                        return Err(format!("empty seed range '{part}'"));
                    }
                    seeds.extend(a..=b);
                }
                None => seeds.push(parse(part)?),
            }
        }
        if seeds.is_empty() {
            return Err("no seeds given".into());
        }
        Ok(SeedList(seeds))
    }
}

impl fmt::Display for SeedList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&items.join(","))
    }
}

/// Single-domain baseline result as stored in `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutput {
    pub method: BaselineMethod,
    pub domain: Domain,
    pub seed: u64,
    pub assignment: Assignment,
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClusterOutput {
    Cocluster(Box<CoClusterResult>),
    Baseline(BaselineOutput),
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let command = cli.command;
    match cli.threads {
        None => execute(command),
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("failed to start worker threads")?;
            pool.install(|| execute(command))
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::SweepK(a) => cmd_sweep(a),
    }
}

fn flag(set: bool) -> Option<bool> {
    set.then_some(true)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).with_context(|| format!("failed to write {}", path.display()))?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).with_context(|| format!("failed to create {}", dir.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).context("failed to serialize output")?;
    text.push('\n');
    write_file(path, text)
}

fn write_manifest(manifest: &RunManifest, dir: &Path) -> Result<(), CliError> {
    manifest
        .write(dir)
        .with_context(|| format!("failed to write {}", dir.join(MANIFEST_FILE).display()))?;
    Ok(())
}

fn load_bundle(dir: &Path) -> Result<Dataset, CliError> {
    load_dataset(dir)
        .with_context(|| format!("failed to load dataset bundle {}", dir.display()))
        .map_err(CliError::Runtime)
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    let mut s = Settings::load(a.config.as_deref())?;
    let d = SyntheticConfig::default();
    let seed = s.pick("seed", a.seed, 0u64)?;
    let config = SyntheticConfig {
        face_clusters: s.pick("kf", a.kf, d.face_clusters)?,
        location_clusters: s.pick("kl", a.kl, d.location_clusters)?,
        faces_per_cluster: s.pick(
            "faces-per-cluster",
            a.faces_per_cluster,
            d.faces_per_cluster,
        )?,
        locations_per_cluster: s.pick(
            "locations-per-cluster",
            a.locations_per_cluster,
            d.locations_per_cluster,
        )?,
        face_dim: s.pick("face-dim", a.face_dim, d.face_dim)?,
        location_dim: s.pick("location-dim", a.location_dim, d.location_dim)?,
        separation: s.pick("separation", a.separation, d.separation)?,
        noise: s.pick("noise", a.noise, d.noise)?,
        cooccurrence_strength: s.pick(
            "cooccurrence-strength",
            a.cooccurrence_strength,
            d.cooccurrence_strength,
        )?,
        private_fraction: s.pick("private-fraction", a.private_fraction, d.private_fraction)?,
        verified_fraction: s.pick(
            "verified-fraction",
            a.verified_fraction,
            d.verified_fraction,
        )?,
        images_per_burst: s.pick("images-per-burst", a.images_per_burst, d.images_per_burst)?,
        geotag: !s.pick("no-geotag", flag(a.no_geotag), false)?,
        ..d
    };
    for (name, v) in [
        ("--kf", config.face_clusters),
        ("--kl", config.location_clusters),
        ("--faces-per-cluster", config.faces_per_cluster),
        ("--locations-per-cluster", config.locations_per_cluster),
        ("--face-dim", config.face_dim),
        ("--location-dim", config.location_dim),
        ("--images-per-burst", config.images_per_burst),
    ] {
        require(v >= 1, || format!("{name} must be at least 1, got {v}"))?;
    }
    for (name, v) in [
        ("--separation", config.separation),
        ("--noise", config.noise),
    ] {
        require(v >= 0.0 && v.is_finite(), || {
            format!("{name} must be a finite non-negative number, got {v}")
        })?;
    }
    for (name, v) in [
        ("--cooccurrence-strength", config.cooccurrence_strength),
        ("--private-fraction", config.private_fraction),
        ("--verified-fraction", config.verified_fraction),
    ] {
        require((0.0..=1.0).contains(&v), || {
            format!("{name} must lie in [0, 1], got {v}")
        })?;
    }
    config.validate()?;

    let (dataset, truth) = generate_synthetic(&config, seed)?;
    save_dataset(&a.out, &dataset, Some(&truth))
        .with_context(|| format!("failed to write bundle {}", a.out.display()))?;
    log::info!(
        "wrote {} images, {} faces, {} locations to {}",
        dataset.images().len(),
        dataset.n_faces(),
        dataset.n_locations(),
        a.out.display()
    );
    let manifest =
        RunManifest::new("generate", seed, s.resolved().clone()).output("bundle", &a.out);
    write_manifest(&manifest, &a.out)
}

/// Resolves the model settings; `k_face`, `k_location` and `seed` keep their defaults.
fn model_config(m: &ModelArgs, s: &mut Settings) -> Result<CoClusterConfig, CliError> {
    let d = CoClusterConfig::default();
    let ds = SolverConfig::default();
    let config = CoClusterConfig {
        beta: s.pick("beta", m.beta, d.beta)?,
        link_weight: s.pick_optional("link-weight", m.link_weight)?,
        sigma: s.pick("sigma", m.sigma, d.sigma)?,
        outer_max: s.pick("outer-max", m.outer_max, d.outer_max)?,
        outer_tol: s.pick("outer-tol", m.outer_tol, d.outer_tol)?,
        bandwidth_s: s.pick("bandwidth-s", m.bandwidth_s, d.bandwidth_s)?,
        teleport_window_s: s.pick(
            "teleport-window-s",
            m.teleport_window_s,
            d.teleport_window_s,
        )?,
        geo_threshold_km: s.pick("geo-threshold-km", m.geo_threshold_km, d.geo_threshold_km)?,
        solver: SolverConfig {
            max_iter: s.pick("max-iter", m.max_iter, ds.max_iter)?,
            tol: s.pick("tol", m.tol, ds.tol)?,
            init: s.pick("init", m.init, ds.init)?,
            hard: !s.pick("soft", flag(m.soft), false)?,
        },
        freeze_coupling: s.pick("freeze-coupling", flag(m.freeze_coupling), false)?,
        freeze_weights: s.pick("freeze-weights", flag(m.freeze_weights), false)?,
        ..d
    };
    require(config.beta >= 0.0 && config.beta.is_finite(), || {
        format!(
            "--beta must be a finite non-negative number, got {}",
            config.beta
        )
    })?;
    if let Some(w) = config.link_weight {
        require(w > 0.0 && w.is_finite(), || {
            format!("--link-weight must be a finite positive number, got {w}")
        })?;
    }
    require(config.outer_tol > 0.0, || {
        format!("--outer-tol must be positive, got {}", config.outer_tol)
    })?;
    require(config.solver.tol >= 0.0, || {
        format!("--tol must be non-negative, got {}", config.solver.tol)
    })?;
    require(
        config.bandwidth_s > 0.0 && config.bandwidth_s.is_finite(),
        || {
            format!(
                "--bandwidth-s must be a finite positive number, got {}",
                config.bandwidth_s
            )
        },
    )?;
    require(config.teleport_window_s >= 0, || {
        format!(
            "--teleport-window-s must be non-negative, got {}",
            config.teleport_window_s
        )
    })?;
    require(config.geo_threshold_km >= 0.0, || {
        format!(
            "--geo-threshold-km must be non-negative, got {}",
            config.geo_threshold_km
        )
    })?;
    Ok(config)
}

fn trace_csv(trace: &[JointObjective]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(["round", "f_face", "f_location", "f_fl", "f_lf", "total"])?;
        for (round, o) in trace.iter().enumerate() {
            w.write_record([
                round.to_string(),
                o.f_face.to_string(),
                o.f_location.to_string(),
                o.f_fl.to_string(),
                o.f_lf.to_string(),
                o.total.to_string(),
            ])?;
        }
        Ok(())
    };
    write(&mut w).context("failed to format objective trace")?;
    Ok(w.into_inner().context("failed to format objective trace")?)
}

fn cmd_cluster(a: ClusterArgs) -> Result<(), CliError> {
    let mut s = Settings::load(a.config.as_deref())?;
    let seed = s.pick("seed", a.seed, 0u64)?;
    let k_face = s.pick("kf", a.kf, CoClusterConfig::default().k_face)?;
    let k_location = s.pick("kl", a.kl, CoClusterConfig::default().k_location)?;
    let method = s.pick("method", a.method, Method::Cocluster)?;
    let domain = s.pick_optional("domain", a.domain)?;
    let config = CoClusterConfig {
        k_face,
        k_location,
        seed,
        ..model_config(&a.model, &mut s)?
    };

    let output = match method.baseline() {
        None => {
            require(k_face >= 2, || {
                format!("--kf must be at least 2, got {k_face}")
            })?;
            require(k_location >= 2, || {
                format!("--kl must be at least 2, got {k_location}")
            })?;
            if domain.is_some() {
                log::warn!("--domain is ignored by --method cocluster");
            }
            let dataset = load_bundle(&a.input)?;
            ClusterOutput::Cocluster(Box::new(cocluster(&dataset, &config)?))
        }
        Some(b) => {
            let domain = domain
                .ok_or_else(|| usage(format!("--method {method} needs --domain face|location")))?;
            let (k, name) = match domain {
                Domain::Face => (k_face, "--kf"),
                Domain::Location => (k_location, "--kl"),
            };
            require(k >= 1, || format!("{name} must be at least 1, got {k}"))?;
            let dataset = load_bundle(&a.input)?;
            ClusterOutput::Baseline(BaselineOutput {
                method: b,
                domain,
                seed,
                assignment: run_baseline(&dataset, domain, b, k, &config)?,
            })
        }
    };

    create_dir(&a.out)?;
    let result_path = a.out.join(RESULT_FILE);
    let trace_path = a.out.join(TRACE_FILE);
    write_json(&result_path, &output)?;
    let trace = match &output {
        ClusterOutput::Cocluster(r) => r.objective_trace.as_slice(),
        ClusterOutput::Baseline(_) => &[],
    };
    write_file(&trace_path, trace_csv(trace)?)?;
    let manifest = RunManifest::new("cluster", seed, s.resolved().clone())
        .input("bundle", &a.input)
        .output("result", &result_path)
        .output("objective_trace", &trace_path);
    write_manifest(&manifest, &a.out)
}

fn load_truth(dir: &Path, dataset: &Dataset, geo: Option<usize>) -> Result<GroundTruth, CliError> {
    let mut truth = load_ground_truth(dir)
        .with_context(|| format!("failed to read ground truth in {}", dir.display()))?
        .ok_or_else(|| usage(format!("no ground truth found in {}", dir.display())))?;
    if let Some(k) = geo {
        require(k >= 1, || {
            format!("--geo-locations must be at least 1, got {k}")
        })?;
        truth.location_labels = location_truth_from_geo(dataset, k)
            .map_err(|e| usage(format!("--geo-locations: {e}")))?;
    }
    truth
        .validate(dataset)
        .map_err(|e| usage(format!("ground truth does not match the dataset: {e}")))?;
    Ok(truth)
}

fn load_result(path: &Path) -> Result<ClusterOutput, CliError> {
    let text =
        fs::read_to_string(path).with_context(|| format!("failed to read {}", path.display()))?;
    let output = serde_json::from_str(&text)
        .with_context(|| format!("failed to parse {}", path.display()))?;
    Ok(output)
}

fn rows_csv(rows: &[EvalRow]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows).map_err(|e| CliError::Runtime(e.into()))?;
    Ok(buf)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let mut s = Settings::load(a.config.as_deref())?;
    let result = s.pick_optional("result", a.result.as_ref().map(|p| p.display().to_string()))?;
    let sweep = s.pick_optional("sweep-k", a.sweep_k)?;
    match (result, sweep) {
        (Some(_), Some(_)) => Err(usage("--result and --sweep-k are mutually exclusive")),
        (None, None) => Err(usage("evaluate needs --result or --sweep-k")),
        (None, Some(range)) => run_sweep(
            "evaluate",
            s,
            SweepInputs {
                input: &a.input,
                out: &a.out,
                range,
                methods: a.methods,
                seeds: a.seeds,
                plot: a.plot,
                geo_locations: a.geo_locations,
                model: &a.model,
            },
        ),
        (Some(result), None) => {
            let plot = s.pick("plot", flag(a.plot), false)?;
            let geo = s.pick_optional("geo-locations", a.geo_locations)?;
            let dataset = load_bundle(&a.input)?;
            let truth = load_truth(&a.input, &dataset, geo)?;
            let result_path = PathBuf::from(result);
            let (seed, rows) = match load_result(&result_path)? {
                ClusterOutput::Cocluster(r) => (
                    r.config.seed,
                    vec![
                        (Domain::Face, Method::Cocluster, r.face_assignment),
                        (Domain::Location, Method::Cocluster, r.location_assignment),
                    ],
                ),
                ClusterOutput::Baseline(b) => {
                    let method = Method::ALL
                        .into_iter()
                        .find(|m| m.baseline() == Some(b.method))
                        .expect("every baseline is a method");
                    (b.seed, vec![(b.domain, method, b.assignment)])
                }
            };
            finish_evaluate(&a, s, &dataset, &truth, seed, rows, &result_path, plot)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_evaluate(
    a: &EvaluateArgs,
    s: Settings,
    dataset: &Dataset,
    truth: &GroundTruth,
    seed: u64,
    assignments: Vec<(Domain, Method, Assignment)>,
    result_path: &Path,
    plot: bool,
) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for (domain, method, assignment) in &assignments {
        require(assignment.len() == dataset.n_patches(*domain), || {
            format!(
                "result has {} {domain} labels but the dataset has {} {domain} patches",
                assignment.len(),
                dataset.n_patches(*domain)
            )
        })?;
        rows.push(score(
            *domain,
            *method,
            assignment.k(),
            seed,
            assignment.labels(),
            truth,
            0.0,
        )?);
    }
    create_dir(&a.out)?;
    let eval_path = a.out.join(EVAL_FILE);
    let csv = rows_csv(&rows)?;
    write_file(&eval_path, &csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    let mut manifest = RunManifest::new("evaluate", seed, s.resolved().clone())
        .input("bundle", &a.input)
        .input("result", result_path)
        .output("eval", &eval_path);
    if plot {
        let report = EvalReport {
            rows,
            config: SweepConfig {
                ks: Vec::new(),
                methods: Vec::new(),
                seeds: vec![seed],
                base: CoClusterConfig::default(),
            },
        };
        manifest = write_plots(&report, &a.out, manifest)?;
    }
    write_manifest(&manifest, &a.out)
}

fn write_plots(
    report: &EvalReport,
    dir: &Path,
    mut manifest: RunManifest,
) -> Result<RunManifest, CliError> {
    let summary = report.summary();
    for domain in [Domain::Face, Domain::Location] {
        let path = dir.join(format!("{domain}_rand_index.svg"));
        write_file(&path, rand_index_svg(&summary, domain))?;
        manifest = manifest.output(&format!("{domain}_plot"), &path);
    }
    Ok(manifest)
}

struct SweepInputs<'a> {
    input: &'a Path,
    out: &'a Path,
    range: KRange,
    methods: Option<MethodList>,
    seeds: Option<SeedList>,
    plot: bool,
    geo_locations: Option<usize>,
    model: &'a ModelArgs,
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let mut s = Settings::load(a.config.as_deref())?;
    let range = s.pick("k", a.k, KRange { lo: 2, hi: 13 })?;
    run_sweep(
        "sweep-k",
        s,
        SweepInputs {
            input: &a.input,
            out: &a.out,
            range,
            methods: a.methods,
            seeds: a.seeds,
            plot: a.plot,
            geo_locations: a.geo_locations,
            model: &a.model,
        },
    )
}

fn run_sweep(command: &str, mut s: Settings, a: SweepInputs<'_>) -> Result<(), CliError> {
    let methods = s.pick("methods", a.methods, MethodList(Method::ALL.to_vec()))?;
    let seeds = s.pick("seeds", a.seeds, SeedList((0..5).collect()))?;
    let plot = s.pick("plot", flag(a.plot), false)?;
    let geo = s.pick_optional("geo-locations", a.geo_locations)?;
    let base = model_config(a.model, &mut s)?;
    let dataset = load_bundle(a.input)?;
    let truth = load_truth(a.input, &dataset, geo)?;
    let config = SweepConfig {
        ks: a.range.values(),
        methods: methods.0,
        seeds: seeds.0,
        base,
    };
    let report = sweep_k(&dataset, Some(&truth), &config)?;

    create_dir(a.out)?;
    let eval_path = a.out.join(EVAL_FILE);
    let summary_path = a.out.join(SUMMARY_FILE);
    write_file(&eval_path, rows_csv(&report.rows)?)?;
    let mut summary = Vec::new();
    report
        .write_summary_csv(&mut summary)
        .map_err(|e| CliError::Runtime(e.into()))?;
    write_file(&summary_path, &summary)?;
    print!("{}", String::from_utf8_lossy(&summary));
    let mut manifest = RunManifest::new(command, config.seeds[0], s.resolved().clone())
        .input("bundle", a.input)
        .output("eval", &eval_path)
        .output("summary", &summary_path);
    if plot {
        manifest = write_plots(&report, a.out, manifest)?;
    }
    write_manifest(&manifest, a.out)
}
