//! Command-line orchestration. Every subcommand writes its artifacts under
//! the output directory with names derived from the SHA-256 of the resolved
//! configuration, and embeds that configuration in the artifact. No artifact
//! carries a timestamp, so equal configurations give byte-identical files.
//!
//! Exit status: 0 when every asserted invariant holds, 1 when one fails,
//! 2 on an error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::gauge::{self, GaugeMetric};
use crate::graph::{resample_graph, FillingGraph};
use crate::metric::{boundary_metric, render_metric, MetricFormat};
use crate::modulus::dimension::{estimate_dimension, DimensionOptions};
use crate::modulus::{mod_p_at_scale, SolverOptions};
use crate::nets::{audit_nets, build_nets};
use crate::params::{n0_condition_holds, Mode};
use crate::pipeline::{run_pipeline, PipelineConfig, WeightSystem};
use crate::space::{self, check_metric_matrix, estimate_constants, PointCloudSpace};
use crate::verify::{certify, distortion_profile, regularity_profile, CertifyOptions, Condition};

/// Version of the artifact envelope `{schema, kind, config, data}`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "confdim", version, about = "Hyperbolic fillings, combinatorial modulus and conformal dimension of finite metric spaces")]
pub struct Cli {
    /// Artifact directory. A path ending in .json or .csv names the primary
    /// artifact itself; secondary artifacts go next to it.
    #[arg(long, global = true, default_value = "confdim-out")]
    pub out: PathBuf,
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or inspect spaces.
    Space {
        #[command(subcommand)]
        action: SpaceCommand,
    },
    /// Build nets, the filling graph and its tree; report the structure.
    Fill(GraphArgs),
    /// Family moduli at each base vertex and offset (CSV).
    Modulus(ModulusArgs),
    /// Bracket the critical exponent of modulus decay.
    Dim(DimArgs),
    /// Run the weight pipeline and write the weight system.
    Pipeline(PipelineArgs),
    /// Export the boundary metric of a weight system.
    BuildMetric(BuildMetricArgs),
    /// Certify a weight system.
    Certify(CertifyArgs),
    /// Audit a gauge metric: diameter comparisons and scaled feasibility.
    GaugeCheck(GaugeArgs),
}

#[derive(Debug, Subcommand)]
pub enum SpaceCommand {
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Cantor,
    Carpet,
    Grid,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: SpaceKind,
    /// Construction depth (cantor, carpet).
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// Contraction ratio (cantor).
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub ratio: f64,
    /// Number of points (grid).
    #[arg(long, default_value_t = 1025)]
    pub n: usize,
    /// Raise distances to this exponent afterwards.
    #[arg(long)]
    pub snowflake: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct GraphArgs {
    /// Space JSON (default: the unique space-*.json in the output directory).
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 7.0)]
    pub tau: f64,
    /// Net depth L.
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// Resampling step: a number, or `auto` for the smallest step meeting
    /// the resampling condition.
    #[arg(long, default_value = "1")]
    pub n0: String,
    /// Perfectness constant (default: estimated from the space).
    #[arg(long)]
    pub k_d: Option<f64>,
    #[arg(long, default_value = "practical")]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct ModulusArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Exponents.
    #[arg(long, num_args = 1.., default_values_t = [2.0])]
    pub p: Vec<f64>,
    /// Offsets, `a..b` (inclusive) or a single value.
    #[arg(long, default_value = "1..4")]
    pub k: String,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "1..4")]
    pub k: String,
    /// Target bracket width.
    #[arg(long, default_value_t = 0.25)]
    pub width: f64,
    #[arg(long, default_value_t = 9.0)]
    pub p_max: f64,
    /// Slope of ln Mod_p(k) below which the modulus counts as decaying.
    #[arg(long, default_value_t = 0.05)]
    pub decay_tol: f64,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub epsilon0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BuildMetricArgs {
    /// Weight system (default: the unique weights-*.json in the output directory).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Level whose vertices are exported (default: the deepest).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Output format (default: from the --out extension, else csv).
    #[arg(long)]
    pub format: Option<MetricFormat>,
    /// Also run these certificates (h1 h2 h3 h4 h3prime normalization tree).
    #[arg(long, num_args = 1..)]
    pub certify: Vec<Condition>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Run every certificate.
    #[arg(long)]
    pub all: bool,
    /// Certificates to run when --all is absent.
    #[arg(long, num_args = 1..)]
    pub only: Vec<Condition>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Sampled vertex pairs when exhaustive checking is too large.
    #[arg(long, default_value_t = 2000)]
    pub pairs: usize,
    /// Random family paths in addition to the solver's active paths.
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    /// Report ball-count regularity of the boundary metric at this exponent.
    #[arg(long)]
    pub regularity: Option<f64>,
    /// Report the sampled distortion of the boundary metric against the space.
    #[arg(long)]
    pub distortion: bool,
    /// Level used for the profiles (default: the deepest).
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GaugeArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Gauge metric JSON on the same ids; its distortion is estimated.
    #[arg(long, conflicts_with = "snowflake")]
    pub theta: Option<PathBuf>,
    /// Use the snowflake gauge with this exponent and its exact distortion.
    #[arg(long)]
    pub snowflake: Option<f64>,
    /// Exponent of the reported decay sums.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value = "1..3")]
    pub k: String,
    /// Path enumeration cap per family.
    #[arg(long, default_value_t = 2000)]
    pub path_cap: usize,
    /// Triples sampled for an empirical distortion.
    #[arg(long, default_value_t = 20000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

/// A space file pinned by content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceRef {
    pub path: String,
    pub sha256: String,
    pub label: String,
    pub points: usize,
}

/// Everything needed to rebuild a filling graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub space: SpaceRef,
    pub alpha: f64,
    pub tau: f64,
    pub depth: usize,
    pub n0: usize,
    pub k_d: f64,
    pub k_d_estimated: bool,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRunConfig {
    pub graph: GraphConfig,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Envelope<C, D> {
    schema: u32,
    kind: String,
    config: C,
    data: D,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Where artifacts go.
struct Output {
    dir: PathBuf,
    primary: Option<PathBuf>,
}

impl Output {
    fn new(out: &Path) -> anyhow::Result<Self> {
        let is_file = matches!(out.extension().and_then(|e| e.to_str()), Some("json" | "csv"));
        let (dir, primary) = if is_file {
            let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            (dir.to_path_buf(), Some(out.to_path_buf()))
        } else {
            (out.to_path_buf(), None)
        };
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, primary })
    }

    fn path(&self, kind: &str, config: &Value, ext: &str, primary: bool) -> PathBuf {
        if primary {
            if let Some(p) = &self.primary {
                return p.clone();
            }
        }
        let canonical = serde_json::to_string(config).expect("config serializes");
        let hash = &sha256_hex(canonical.as_bytes())[..16];
        self.dir.join(format!("{kind}-{hash}.{ext}"))
    }

    fn write(&self, path: &Path, text: &str) -> anyhow::Result<()> {
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<C: Serialize, D: Serialize>(&self, kind: &str, config: &C, data: &D, primary: bool) -> anyhow::Result<PathBuf> {
        let config = serde_json::to_value(config)?;
        let path = self.path(kind, &config, "json", primary);
        let env = Envelope { schema: SCHEMA_VERSION, kind: kind.to_string(), config, data };
        self.write(&path, &(serde_json::to_string_pretty(&env)? + "\n"))?;
        Ok(path)
    }

    /// CSV with the configuration as a leading `#` comment.
    fn write_csv<C: Serialize>(&self, kind: &str, config: &C, body: &str, primary: bool) -> anyhow::Result<PathBuf> {
        let config = serde_json::to_value(config)?;
        let path = self.path(kind, &config, "csv", primary);
        let text = format!("# config: {}\n{body}", serde_json::to_string(&config)?);
        self.write(&path, &text)?;
        Ok(path)
    }

    /// The unique `{prefix}-*.json` in the directory.
    fn find(&self, prefix: &str) -> anyhow::Result<PathBuf> {
        let mut hits = Vec::new();
        for entry in std::fs::read_dir(&self.dir).with_context(|| format!("reading {}", self.dir.display()))? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.starts_with(&format!("{prefix}-")) && name.ends_with(".json") {
                hits.push(path);
            }
        }
        hits.sort();
        match hits.len() {
            1 => Ok(hits.remove(0)),
            0 => bail!("no {prefix}-*.json in {}; pass the file explicitly", self.dir.display()),
            n => bail!("{n} {prefix}-*.json files in {}; pass one explicitly", self.dir.display()),
        }
    }
}

/// `a..b`, `a..=b` (both inclusive) or `a`.
pub fn parse_range(s: &str) -> anyhow::Result<Vec<usize>> {
    let s = s.trim();
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse::<usize>()?, b.trim_start_matches('=').trim().parse::<usize>()?),
        None => {
            let a = s.parse::<usize>()?;
            (a, a)
        }
    };
    if a > b {
        bail!("empty range {s}");
    }
    Ok((a..=b).collect())
}

fn load_space(path: &Path) -> anyhow::Result<(PointCloudSpace, SpaceRef)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading space {}", path.display()))?;
    let v: Value = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    let space = PointCloudSpace::from_json(&v)?;
    let r = SpaceRef {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        label: space.label().to_string(),
        points: space.len(),
    };
    Ok((space, r))
}

impl GraphArgs {
    fn resolve(&self, out: &Output) -> anyhow::Result<(GraphConfig, PointCloudSpace)> {
        let path = match &self.space {
            Some(p) => p.clone(),
            None => out.find("space")?,
        };
        let (space, space_ref) = load_space(&path)?;
        let (k_d, k_d_estimated) = match self.k_d {
            Some(k) => (k, false),
            None => (estimate_constants(&space)?.k_d, true),
        };
        let n0 = if self.n0 == "auto" {
            (1..=self.depth).find(|&n| n0_condition_holds(self.alpha, self.tau, n)).with_context(|| {
                format!(
                    "no resampling step up to L={} satisfies 6+4a+8*tau*a < tau < 1/(4a) for alpha={}, tau={}",
                    self.depth, self.alpha, self.tau
                )
            })?
        } else {
            self.n0.parse().with_context(|| format!("--n0 {:?} is neither a number nor `auto`", self.n0))?
        };
        let cfg = GraphConfig {
            space: space_ref,
            alpha: self.alpha,
            tau: self.tau,
            depth: self.depth,
            n0,
            k_d,
            k_d_estimated,
            mode: self.mode,
        };
        Ok((cfg, space))
    }
}

impl GraphConfig {
    /// Nets, graph and tree.
    pub fn build(&self, space: PointCloudSpace) -> crate::Result<(crate::nets::NetHierarchy, FillingGraph)> {
        let nets = build_nets(&space, self.alpha, self.depth, self.k_d, self.mode)?;
        let graph = resample_graph(Arc::new(space), &nets, self.n0, self.tau, self.k_d, self.mode)?.attach_tree();
        Ok((nets, graph))
    }

    /// Reload the recorded space, refusing a file that changed.
    pub fn reload(&self) -> anyhow::Result<(crate::nets::NetHierarchy, FillingGraph)> {
        let (space, r) = load_space(Path::new(&self.space.path))?;
        if r.sha256 != self.space.sha256 {
            bail!("space file {} changed since the artifact was written (sha256 mismatch)", self.space.path);
        }
        Ok(self.build(space)?)
    }
}

fn load_weights(path: &Path) -> anyhow::Result<(PipelineRunConfig, WeightSystem, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading weights {}", path.display()))?;
    let env: Envelope<PipelineRunConfig, WeightSystem> =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing weights {}", path.display()))?;
    if env.kind != "weights" || env.schema != SCHEMA_VERSION {
        bail!("{} is not a schema-{SCHEMA_VERSION} weights artifact", path.display());
    }
    Ok((env.config, env.data, sha256_hex(&bytes)))
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Run one subcommand. `Ok(false)` means an asserted invariant failed.
pub fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let out = Output::new(&cli.out)?;
    match cli.command {
        Command::Space { action: SpaceCommand::Gen(a) } => space_gen(&out, &a),
        Command::Fill(a) => fill(&out, &a),
        Command::Modulus(a) => modulus(&out, &a),
        Command::Dim(a) => dim(&out, &a),
        Command::Pipeline(a) => pipeline(&out, &a),
        Command::BuildMetric(a) => build_metric(&out, &a),
        Command::Certify(a) => certify_cmd(&out, &a),
        Command::GaugeCheck(a) => gauge_check(&out, &a),
    }
}

fn space_gen(out: &Output, a: &GenArgs) -> anyhow::Result<bool> {
    let mut s = match a.kind {
        SpaceKind::Cantor => space::generate_cantor(a.depth, a.ratio)?,
        SpaceKind::Carpet => space::generate_carpet(a.depth)?,
        SpaceKind::Grid => space::generate_grid(a.n)?,
    };
    if let Some(e) = a.snowflake {
        s = space::snowflake(&s, e)?;
    }
    let config = json!({
        "kind": a.kind,
        "depth": a.depth,
        "ratio": a.ratio,
        "n": a.n,
        "snowflake": a.snowflake,
    });
    let path = out.path("space", &config, "json", true);
    let mut v = s.to_json();
    v["provenance"] = config;
    out.write(&path, &(serde_json::to_string_pretty(&v)? + "\n"))?;
    println!("{}: {} points", s.label(), s.len());
    Ok(true)
}

fn fill(out: &Output, a: &GraphArgs) -> anyhow::Result<bool> {
    let (cfg, space) = a.resolve(out)?;
    let constants = estimate_constants(&space)?;
    let (nets, graph) = cfg.build(space)?;
    let audit = audit_nets(graph.space(), &nets);
    let tree = graph.check_tree();
    let summary = graph.summary();
    let data = json!({
        "summary": summary,
        "structure_constants": constants,
        "net_defects": audit,
        "tree_defect": tree.as_ref().err(),
        "diagnostics": graph.diagnostics,
    });
    out.write_json("fill", &cfg, &data, true)?;
    out.write_csv("edges", &cfg, &graph.edge_list(), false)?;
    println!("{} vertices, {} edges, N2 = {}", summary.vertices, summary.edges, summary.n2);
    for d in &graph.diagnostics.items {
        println!("note [{}]: {}", d.check, d.message);
    }
    for d in &audit {
        println!("FAIL net: {d}");
    }
    if let Err(d) = &tree {
        println!("FAIL tree at ({} {}): {}", d.vertex.point, d.vertex.level, d.reason);
    }
    Ok(audit.is_empty() && tree.is_ok())
}

fn modulus(out: &Output, a: &ModulusArgs) -> anyhow::Result<bool> {
    let (cfg, space) = a.graph.resolve(out)?;
    let ks = parse_range(&a.k)?;
    let (_, graph) = cfg.build(space)?;
    let solver = SolverOptions::default();
    let mut body = String::from("v_point,v_level,k,p,modulus,iterations,status\n");
    let mut maxima = Vec::new();
    for &p in &a.p {
        for &k in &ks {
            let m = mod_p_at_scale(&graph, p, k, &solver)?;
            for vm in &m.per_vertex {
                body.push_str(&format!(
                    "{},{},{k},{p},{},{},{}\n",
                    graph.space().id(vm.vertex.point),
                    vm.vertex.level,
                    vm.value,
                    vm.iterations,
                    vm.status.as_str()
                ));
            }
            println!("p={p} k={k}: max modulus {} over {} base vertices", m.value, m.per_vertex.len());
            maxima.push(json!({"p": p, "k": k, "max": m.value}));
        }
    }
    let config = json!({"graph": cfg, "p": a.p, "k": ks, "solver": solver});
    out.write_csv("modulus", &config, &body, true)?;
    Ok(true)
}

fn dim(out: &Output, a: &DimArgs) -> anyhow::Result<bool> {
    let (cfg, space) = a.graph.resolve(out)?;
    let ks = parse_range(&a.k)?;
    let (_, graph) = cfg.build(space)?;
    let opts = DimensionOptions {
        k_min: ks[0],
        k_max: *ks.last().unwrap(),
        decay_tol: a.decay_tol,
        width: a.width,
        p_max: a.p_max,
        solver: SolverOptions::default(),
    };
    let est = estimate_dimension(&graph, &opts)?;
    out.write_json("dim", &json!({"graph": cfg, "options": opts}), &est, true)?;
    for d in &est.decisions {
        let vals: Vec<String> = d.values.iter().map(|(k, v)| format!("{k}:{v:.4}")).collect();
        println!("p={:.4} decays={} slope={:?} [{}]", d.p, d.decays, d.slope, vals.join(" "));
    }
    println!("critical exponent: {}", est.describe());
    Ok(true)
}

fn pipeline(out: &Output, a: &PipelineArgs) -> anyhow::Result<bool> {
    let (gcfg, space) = a.graph.resolve(out)?;
    let mut pcfg = PipelineConfig::new(a.p, gcfg.mode, gcfg.k_d);
    pcfg.epsilon = a.epsilon;
    pcfg.epsilon0 = a.epsilon0;
    let (_, graph) = gcfg.build(space)?;
    let w = run_pipeline(&graph, &pcfg)?;
    let c = &w.constants;
    let config = PipelineRunConfig { graph: gcfg, pipeline: pcfg };
    out.write_json("weights", &config, &w, true)?;
    println!(
        "eps={:e} eps0={:e} max_modulus={:e} eta-={:e} K0={:e} K1={:e} K2={:e}",
        c.epsilon, c.epsilon0, c.max_modulus, c.eta_minus, c.k0, c.k1, c.k2
    );
    for d in &w.diagnostics.items {
        println!("note [{}]: {}", d.check, d.message);
    }
    Ok(true)
}

fn print_report(report: &crate::verify::CertificateReport) {
    for c in &report.certificates {
        let status = match c.status {
            crate::verify::CertStatus::Pass => "PASS",
            crate::verify::CertStatus::Fail => "FAIL",
            crate::verify::CertStatus::Reported => "INFO",
        };
        println!(
            "{status} {}: {} checked, {} violations, achieved {:e} vs {:e}",
            c.name, c.checked, c.violations, c.achieved, c.theoretical
        );
        if c.status == crate::verify::CertStatus::Fail {
            if let Some(w) = &c.witness {
                let vs: Vec<String> = w.vertices.iter().map(|v| format!("({} {})", v.point, v.level)).collect();
                println!("  witness {}: {} = {:e}, bound {:e}", vs.join(" "), w.detail, w.value, w.bound);
            }
        }
    }
}

fn build_metric(out: &Output, a: &BuildMetricArgs) -> anyhow::Result<bool> {
    let path = match &a.weights {
        Some(p) => p.clone(),
        None => out.find("weights")?,
    };
    let (cfg, w, sha) = load_weights(&path)?;
    let (_, graph) = cfg.graph.reload()?;
    let depth = a.depth.unwrap_or(graph.depth());
    let format = a.format.unwrap_or(match out.primary.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => MetricFormat::Json,
        _ => MetricFormat::Csv,
    });
    let bm = boundary_metric(&graph, &w.pi, &w.rho, depth)?;
    let config = json!({"weights": {"path": path.display().to_string(), "sha256": sha}, "depth": depth, "format": format});
    match format {
        MetricFormat::Csv => {
            out.write_csv("d_rho", &config, &render_metric(&bm, format)?, true)?;
        }
        MetricFormat::Json => {
            let mut v = bm.to_space()?.to_json();
            v["provenance"] = config.clone();
            let p = out.path("d_rho", &config, "json", true);
            out.write(&p, &(serde_json::to_string_pretty(&v)? + "\n"))?;
        }
    }
    let report = check_metric_matrix(bm.len(), &bm.matrix, 0, 0);
    let data = json!({"axioms": report, "points": bm.len(), "tail_bound": bm.tail_bound});
    out.write_json("metric-report", &config, &data, false)?;
    println!(
        "{} {} points: symmetric={} zero_diagonal={} triangle violations {} of {} ({})",
        if report.ok() { "PASS" } else { "FAIL" },
        bm.len(),
        report.symmetric,
        report.zero_diagonal,
        report.triangle_violations,
        report.triples_checked,
        if report.exhaustive { "exhaustive" } else { "sampled" }
    );
    let mut ok = report.ok();
    if !a.certify.is_empty() {
        let opts = CertifyOptions { seed: a.seed, ..CertifyOptions::default() };
        let certs = certify(&graph, &w, &a.certify, &opts)?;
        print_report(&certs);
        out.write_json("certificates", &json!({"metric": config, "conditions": a.certify, "options": opts}), &certs, false)?;
        ok &= certs.passed();
    }
    Ok(ok)
}

fn certify_cmd(out: &Output, a: &CertifyArgs) -> anyhow::Result<bool> {
    let path = match &a.weights {
        Some(p) => p.clone(),
        None => out.find("weights")?,
    };
    let which: Vec<Condition> = if a.all || a.only.is_empty() { Condition::ALL.to_vec() } else { a.only.clone() };
    let (cfg, w, sha) = load_weights(&path)?;
    let (_, graph) = cfg.graph.reload()?;
    let opts = CertifyOptions { pair_samples: a.pairs, path_samples: a.paths, seed: a.seed };
    let report = certify(&graph, &w, &which, &opts)?;
    print_report(&report);
    let depth = a.depth.unwrap_or(graph.depth());
    let mut profiles = serde_json::Map::new();
    if a.regularity.is_some() || a.distortion {
        let bm = boundary_metric(&graph, &w.pi, &w.rho, depth)?;
        if let Some(q) = a.regularity {
            let r = regularity_profile(&bm, q, 16)?;
            println!("INFO regularity at Q={q}: ratio spread {:.3} over {} scales", r.spread, r.scales.len());
            profiles.insert("regularity".into(), serde_json::to_value(r)?);
        }
        if a.distortion {
            let d = distortion_profile(graph.space(), &bm.to_space()?, 20000, a.seed)?;
            println!("INFO distortion: {} triples, bounded={}", d.triples, d.bounded);
            profiles.insert("distortion".into(), serde_json::to_value(d)?);
        }
    }
    let config = json!({
        "weights": {"path": path.display().to_string(), "sha256": sha},
        "conditions": which,
        "options": opts,
        "regularity": a.regularity,
        "distortion": a.distortion,
        "depth": depth,
    });
    let data = json!({"report": report, "profiles": profiles});
    out.write_json("certificates", &config, &data, true)?;
    Ok(report.passed())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GaugeCase {
    vertex: crate::graph::Vertex,
    k: usize,
    diam: gauge::DiamComparison,
    feasibility: gauge::FeasibilityReport,
    /// `sum (C rho')^p` over the level.
    mass: f64,
}

fn gauge_check(out: &Output, a: &GaugeArgs) -> anyhow::Result<bool> {
    let (cfg, space) = a.graph.resolve(out)?;
    let ks = parse_range(&a.k)?;
    let (gauge, theta_ref) = match (&a.theta, a.snowflake) {
        (Some(p), None) => {
            let (theta, r) = load_space(p)?;
            (GaugeMetric::empirical(&space, theta, a.samples, a.seed)?, json!(r))
        }
        (None, Some(e)) => (GaugeMetric::snowflake(&space, e)?, json!({"snowflake": e})),
        (None, None) => (GaugeMetric::identity(&space), json!("identity")),
        _ => bail!("pass at most one of --theta and --snowflake"),
    };
    let (_, graph) = cfg.build(space)?;
    let c = gauge::admissibility_constant(&gauge.eta, cfg.k_d, cfg.tau)?;
    let jobs: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| crate::modulus::scale::base_vertices(&graph, k).into_iter().map(move |v| (v, k)))
        .collect();
    let cases = jobs
        .par_iter()
        .map(|&(v, k)| {
            let diam = gauge::verify_diam_comparison(&gauge, &graph, v, k, cfg.k_d)?;
            let feasibility = gauge::check_scaled_feasibility(&gauge, &graph, v, k, c, a.path_cap)?;
            let mass = gauge::gauge_admissible_density(&gauge, &graph, v, k)?.iter().map(|r| (c * r).powf(a.p)).sum();
            Ok(GaugeCase { vertex: graph.vertex(v), k, diam, feasibility, mass })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let mut ok = true;
    let mut masses = Vec::new();
    for &k in &ks {
        let at: Vec<&GaugeCase> = cases.iter().filter(|g| g.k == k).collect();
        let nonvacuous = at.iter().filter(|g| g.diam.checked > 0).count();
        let diam_ok = at.iter().filter(|g| g.diam.passed()).count();
        let resolved: Vec<&&GaugeCase> = at.iter().filter(|g| g.feasibility.resolved()).collect();
        let feas_ok = resolved.iter().filter(|g| g.feasibility.feasible()).count();
        let mass = at.iter().map(|g| g.mass).fold(0.0, f64::max);
        masses.push((k, mass));
        ok &= diam_ok == at.len() && feas_ok == resolved.len();
        println!(
            "k={k}: diameter comparisons {diam_ok}/{} ({nonvacuous} non-vacuous), feasible {feas_ok}/{} resolved families ({} unresolved), max mass {mass:e}",
            at.len(),
            resolved.len(),
            at.len() - resolved.len()
        );
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = masses.iter().filter(|m| m.1 > 0.0).map(|&(k, m)| (k as f64, m.ln())).unzip();
    let slope = crate::modulus::dimension::fit_slope(&xs, &ys);
    let config = json!({
        "graph": cfg,
        "theta": theta_ref,
        "p": a.p,
        "k": ks,
        "path_cap": a.path_cap,
        "samples": a.samples,
        "seed": a.seed,
    });
    let data = json!({"constant": c, "cases": cases, "masses": masses, "decay_slope": slope, "passed": ok});
    out.write_json("gauge", &config, &data, true)?;
    println!("{} gauge audit, C = {c:e}, decay slope {slope:?}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_range("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_range("5").unwrap(), vec![5]);
        assert!(parse_range("4..1").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
