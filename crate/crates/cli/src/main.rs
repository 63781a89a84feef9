//! `hcforge` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use hcforge::baselines::{brute_force_optimal_guarded, BRUTE_FORCE_MAX_N};
use hcforge::epras::{dissimilarity_epras, hcc_pm, metric_shift, revenue_epras, EprasConfig, DEFAULT_CANDIDATE_BUDGET};
use hcforge::gen::{
    clique_augment, clustered_points, complement_instance, default_path_len, metric_instance, path_augment,
    random_instance, triangle_violations, MetricConfig, MetricPoints, SimilarityFn,
};
use hcforge::harness::{run_suite, Suite};
use hcforge::hcc::{combined_hcc, CombineMode, MubBackend, DEFAULT_P};
use hcforge::io::{instance_to_json, read_instance, read_target};
use hcforge::partition::{solve_partition, Backend, PartitionResult};
use hcforge::rng::seeded;
use hcforge::sketch::{contract_to_k, sketch_stats, to_dis_tree, to_rev_tree, KNodeKind};
use hcforge::{eval_hcc, HcTree, Instance, Objective};

const SCHEMA: &str = "hcforge/v1";

#[derive(Parser)]
#[command(name = "hcforge", version, about = "Hierarchical clustering objectives, sketches and approximation schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Evaluate revenue, dissimilarity and HCC of a tree.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        /// Tree file in the parenthesized text format.
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contract a binary tree and expand it into a star or comb sketch.
    Sketch {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 1.0 / 12.0)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = SketchMode::Rev)]
        mode: SketchMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an approximation scheme.
    Epras {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = EprasObjective::Rev)]
        objective: EprasObjective,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
        backend: BackendArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Candidate budget.
        #[arg(long, default_value_t = DEFAULT_CANDIDATE_BUDGET)]
        budget: u128,
        #[arg(long)]
        max_buckets: Option<usize>,
        #[arg(long)]
        max_internal: Option<usize>,
        /// Metric mode: shift all similarities by this amount first.
        #[arg(long)]
        shift: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worst-case HCC algorithms.
    Hcc {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_P)]
        p: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::BestOfBoth)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = MubArg::Exact)]
        mub_backend: MubArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive optimum over all binary trees.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Raise the size guard; requires --yes-i-know.
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        yes_i_know: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query the partition oracle.
    Partition {
        #[arg(long)]
        instance: PathBuf,
        /// Target JSON: {"alpha", "beta", "eps_err", "delta", "channel"}.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
        backend: BackendArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate or transform an instance.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input instance for the transforming kinds.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Path length for path-augment (default n²).
        #[arg(long)]
        path_len: Option<usize>,
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = 0.1)]
        spread: f64,
        #[arg(long, value_enum, default_value_t = SimArg::LinearRamp)]
        similarity: SimArg,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property battery and emit CSV.
    Bench {
        #[arg(long)]
        #[serde(serialize_with = "suite_name")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SketchMode {
    Rev,
    Dis,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EprasObjective {
    Rev,
    Dis,
    Hccpm,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BackendArg {
    Exact,
    LocalSearch,
    SampleExtend,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::LocalSearch => Backend::LocalSearch,
            BackendArg::SampleExtend => Backend::SampleExtend,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Randomized,
    BestOfBoth,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MubArg {
    Exact,
    LocalSearch,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ObjectiveArg {
    Rev,
    Dis,
    Hcc,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GenKind {
    Random,
    Metric,
    CliqueAugment,
    PathAugment,
    Complement,
    Hccpm,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SimArg {
    Gaussian,
    LinearRamp,
    Inverse,
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn suite_name<S: serde::Serializer>(s: &Suite, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(s.name())
}

fn emit_json(out: Option<&Path>, config: &Value, mut v: Value) -> anyhow::Result<()> {
    v["config"] = config.clone();
    emit(out, &format!("{}\n", serde_json::to_string_pretty(&v)?))
}

fn read_tree(path: &Path) -> anyhow::Result<HcTree> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(HcTree::parse(text.trim())?)
}

fn load(path: &Path) -> anyhow::Result<Instance<f64>> {
    Ok(read_instance(path)?)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let config = serde_json::to_value(&cli.command)?;
    match cli.command {
        Command::Eval { instance, tree, out } => {
            let inst = load(&instance)?;
            let t = read_tree(&tree)?;
            let r = eval_hcc(&inst, &t)?;
            emit_json(
                out.as_deref(),
                &config,
                json!({
                    "schema": SCHEMA,
                    "seed": Value::Null,
                    "rev": r.rev,
                    "dis": r.dis,
                    "hcc": r.hcc,
                    "total_sim_weight": r.total_sim_weight,
                    "total_dis_weight": r.total_dis_weight,
                }),
            )?;
        }
        Command::Sketch { tree, eps, mode, seed, out } => {
            let t = read_tree(&tree)?;
            let (k, expanded) = match mode {
                SketchMode::Rev => {
                    let k = contract_to_k(&t, eps)?;
                    let e = to_rev_tree(&k)?;
                    (k, e)
                }
                SketchMode::Dis => {
                    let k = contract_to_k(&t, eps * eps)?;
                    let e = to_dis_tree(&k, eps, &mut seeded(seed))?;
                    (k, e)
                }
            };
            let stats = sketch_stats(&expanded, eps);
            let bags: Vec<&[usize]> = k.bags();
            let blue = k.nodes().iter().filter(|x| matches!(x.kind, KNodeKind::Blue { .. })).count();
            let green = k.nodes().iter().filter(|x| matches!(x.kind, KNodeKind::Green)).count();
            emit_json(
                out.as_deref(),
                &config,
                json!({
                    "schema": SCHEMA,
                    "seed": seed,
                    "eps": eps,
                    "internal_nodes": stats.internal_nodes,
                    "max_children": stats.max_children,
                    "blue": blue,
                    "green": green,
                    "bags": bags,
                    "tree": expanded.to_string(),
                }),
            )?;
        }
        Command::Epras {
            instance,
            objective,
            eps,
            delta,
            rho,
            tau,
            backend,
            seed,
            budget,
            max_buckets,
            max_internal,
            shift,
            out,
        } => {
            let inst = load(&instance)?;
            let cfg = EprasConfig {
                eps,
                delta,
                rho,
                tau,
                backend: backend.into(),
                max_sketch_internal: max_internal,
                max_buckets,
                candidate_budget: budget,
            };
            let mut rng = seeded(seed);
            let r = match (objective, shift) {
                (EprasObjective::Rev, Some(s)) => metric_shift(&inst, s, &cfg, &mut rng)?,
                (_, Some(_)) => bail!("--shift applies to the revenue objective only"),
                (EprasObjective::Rev, None) => revenue_epras(&inst, &cfg, &mut rng)?,
                (EprasObjective::Dis, None) => dissimilarity_epras(&inst, &cfg, &mut rng)?,
                (EprasObjective::Hccpm, None) => hcc_pm(&inst, &cfg, &mut rng)?,
            };
            if !r.dense {
                eprintln!("warning: instance fails the not-all-small test for rho={rho}, tau={tau}");
            }
            emit_json(
                out.as_deref(),
                &config,
                json!({
                    "schema": SCHEMA,
                    "seed": seed,
                    "eps": eps,
                    "tree": r.tree.to_string(),
                    "value": r.value,
                    "baselineValue": r.baseline_value,
                    "candidatesTried": r.candidates_tried,
                    "candidatesFound": r.candidates_found,
                    "invariantViolations": r.invariant_violations,
                    "caseApplied": r.case_applied,
                    "baselineReturned": r.baseline_returned,
                }),
            )?;
        }
        Command::Hcc { instance, p, mode, mub_backend, seed, out } => {
            let inst = load(&instance)?;
            let mode = match mode {
                ModeArg::Randomized => CombineMode::Randomized,
                ModeArg::BestOfBoth => CombineMode::BestOfBoth,
            };
            let mub = match mub_backend {
                MubArg::Exact => MubBackend::Exact,
                MubArg::LocalSearch => MubBackend::LocalSearch,
            };
            let t = combined_hcc(&inst, p, mode, mub, &mut seeded(seed))?;
            let r = eval_hcc(&inst, &t)?;
            emit_json(
                out.as_deref(),
                &config,
                json!({ "schema": SCHEMA, "seed": seed, "p": p, "tree": t.to_string(), "hcc": r.hcc, "rev": r.rev, "dis": r.dis }),
            )?;
        }
        Command::Oracle { instance, objective, max_n, yes_i_know, out } => {
            let inst = load(&instance)?;
            let guard = match max_n {
                Some(m) if m > BRUTE_FORCE_MAX_N && !yes_i_know => {
                    bail!("raising the guard above {BRUTE_FORCE_MAX_N} requires --yes-i-know")
                }
                Some(m) => m,
                None => BRUTE_FORCE_MAX_N,
            };
            let obj = match objective {
                ObjectiveArg::Rev => Objective::Rev,
                ObjectiveArg::Dis => Objective::Dis,
                ObjectiveArg::Hcc => Objective::Hcc,
            };
            let (t, v) = brute_force_optimal_guarded(&inst, obj, guard)?;
            emit_json(out.as_deref(), &config, json!({ "schema": SCHEMA, "seed": Value::Null, "objective": obj, "tree": t.to_string(), "value": v }))?;
        }
        Command::Partition { instance, target, backend, seed, out } => {
            let inst = load(&instance)?;
            let t = read_target(&target)?;
            let r = solve_partition(&inst, &t, backend.into(), &mut seeded(seed))?;
            let body = match r {
                PartitionResult::Found { assignment, deviations } => json!({
                    "schema": SCHEMA,
                    "seed": seed,
                    "verdict": "found",
                    "assignment": assignment,
                    "deviations": deviations,
                }),
                PartitionResult::Infeasible => json!({ "schema": SCHEMA, "seed": seed, "verdict": "infeasible" }),
            };
            emit_json(out.as_deref(), &config, body)?;
        }
        Command::Gen {
            kind,
            n,
            density,
            seed,
            input,
            path_len,
            clusters,
            spread,
            similarity,
            sigma,
            out,
        } => {
            let mut rng = seeded(seed);
            let input_inst = || -> anyhow::Result<Instance<f64>> {
                let p = input.as_deref().context("--input is required for this kind")?;
                load(p)
            };
            let inst = match kind {
                GenKind::Random => random_instance(n, density, false, &mut rng)?,
                GenKind::Hccpm => random_instance(n, density, true, &mut rng)?,
                GenKind::Metric => {
                    let per = n.div_ceil(clusters.max(1));
                    let mut pts = clustered_points(clusters.max(1), per, 2, spread, &mut rng);
                    pts.truncate(n);
                    let similarity = match similarity {
                        SimArg::Gaussian => SimilarityFn::Gaussian { sigma },
                        SimArg::LinearRamp => SimilarityFn::LinearRamp,
                        SimArg::Inverse => SimilarityFn::Inverse,
                    };
                    let cfg = MetricConfig { points: MetricPoints::Coordinates(pts), similarity, normalize: true };
                    let bad = triangle_violations(&cfg.distances()?);
                    if bad > 0 {
                        eprintln!("warning: {bad} triangle-inequality violations");
                    }
                    metric_instance(&cfg)?
                }
                GenKind::CliqueAugment => clique_augment(&input_inst()?),
                GenKind::PathAugment => {
                    let base = input_inst()?;
                    let len = path_len.unwrap_or_else(|| default_path_len(base.n()));
                    path_augment(&base, len)
                }
                GenKind::Complement => complement_instance(&input_inst()?),
            };
            emit(out.as_deref(), &format!("{}\n", instance_to_json(&inst)))?;
        }
        Command::Bench { suite, seed, out } => {
            let report = run_suite(suite, seed)?;
            emit(out.as_deref(), &report.to_csv())?;
            if report.violations() > 0 {
                eprintln!("{} property violations", report.violations());
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn configure_threads() {
    if let Some(n) = std::env::var("HCFORGE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    configure_threads();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
