use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use polya_urn::acceptance::{run_suite, Budget};
use polya_urn::fixtures;
use polya_urn::models::freezing::{freezing_urn_spec, simulate_freezing_tree, FreezingParams};
use polya_urn::models::hooking::{hooking_balance_constant, run_hooking_ensemble, BlockGraph, HookingParams};
use polya_urn::report::{stats_csv, Artifact};
use polya_urn::rng::StreamSeed;
use polya_urn::simulate::io::{read_ensemble_csv, write_ensemble_binary, write_ensemble_csv};
use polya_urn::simulate::normality::MIN_SURVIVORS;
use polya_urn::simulate::oracle::DEFAULT_NODE_BUDGET;
use polya_urn::simulate::{
    conditional_stats, default_thread_budget, enumeration_oracle, growth_exponent_fit, martingale_check,
    normality_diagnostics, run_ensemble, AuditPlan, AuditReport, EstimatorReport, GrowthFit, GrowthPoint,
    MartingaleReport, NormalityReport,
};
use polya_urn::spectral::analyze;
use polya_urn::urn::{Urn, UrnError, UrnSpec};
use serde::Serialize;

use crate::config::*;
use crate::error::CliError;
use crate::{Cli, Command, ModelCommand, SimFlags, TolFlags};

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn emit_artifact<T: Serialize>(kind: &str, cfg: &RunConfig, report: &T) -> Result<(), CliError> {
    let value = cfg.to_value();
    let json = Artifact::new(kind, &value, report).to_json()?;
    emit(cfg.output.as_deref(), json.as_bytes())
}

fn echo(cfg: &RunConfig) {
    eprintln!("config: {}", serde_json::to_string(cfg).expect("config serializes"));
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing {what}")))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("no such file: {}", path.display())));
    }
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// A spec from a JSON file or `builtin:<name>`.
pub fn load_spec(source: &str) -> Result<UrnSpec, CliError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return fixtures::builtin_by_name(name).ok_or_else(|| {
            let names: Vec<String> = fixtures::builtin_specs().into_iter().map(|s| s.name).collect();
            CliError::Usage(format!("unknown built-in spec {name:?}; available: {}", names.join(", ")))
        });
    }
    let text = read_file(Path::new(source))?;
    serde_json::from_str(&text).map_err(|e| UrnError::MalformedSpec(format!("{source}: {e}")).into())
}

fn load_hooking(source: &str) -> Result<HookingParams, CliError> {
    let preset = |blocks| HookingParams {
        blocks,
        chi: 1.0,
        rho: 1.0,
        r: 3,
    };
    match source.strip_prefix("builtin:") {
        Some("edge") => Ok(preset(vec![BlockGraph::edge(1.0)])),
        Some("triangle") => Ok(preset(vec![BlockGraph::triangle(1.0)])),
        Some("mixed") => Ok(preset(vec![BlockGraph::edge(0.5), BlockGraph::triangle(0.5)])),
        Some(other) => Err(CliError::Usage(format!(
            "unknown hooking preset {other:?}; available: edge, triangle, mixed"
        ))),
        None => {
            let text = read_file(Path::new(source))?;
            serde_json::from_str(&text)
                .map_err(|e| polya_urn::ModelError::InvalidParams(format!("{source}: {e}")).into())
        }
    }
}

struct Layered {
    file: FileConfig,
}

impl Layered {
    fn sim(&self, cfg: &mut RunConfig, flags: &SimFlags, n: u64, reps: usize) {
        cfg.n = Some(flags.n.or(self.file.n).unwrap_or(n));
        cfg.reps = Some(flags.reps.or(self.file.reps).unwrap_or(reps));
        cfg.seed = Some(flags.seed.or(self.file.seed).unwrap_or(DEFAULT_SEED));
        cfg.threads = Some(flags.threads.or(self.file.threads).unwrap_or_else(default_thread_budget));
    }

    fn spec(&self, cfg: &mut RunConfig, flag: Option<String>) -> Result<UrnSpec, CliError> {
        let source = require(flag.or_else(|| self.file.spec.clone()), "spec (a JSON path or builtin:<name>)")?;
        cfg.spec = Some(source.clone());
        load_spec(&source)
    }

    fn output(&self, cfg: &mut RunConfig, flag: Option<PathBuf>) {
        cfg.output = flag.or_else(|| self.file.output.clone());
    }

    fn checkpoints(&self, cfg: &mut RunConfig, flag: Option<Checkpoints>) -> Result<(), CliError> {
        let grid = flag
            .or_else(|| self.file.checkpoints.clone())
            .unwrap_or(Checkpoints::Named("pow2".into()));
        cfg.checkpoints = Some(grid.resolve(cfg.n.unwrap_or(DEFAULT_N))?);
        Ok(())
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let layers = Layered { file };
    match cli.command {
        Command::Analyze { spec, tol, out } => cmd_analyze(&layers, spec, tol, out),
        Command::Simulate {
            spec,
            sim,
            checkpoints,
            binary,
            out,
        } => cmd_simulate(&layers, spec, sim, checkpoints, binary, out),
        Command::Estimate {
            input,
            p,
            stats_csv,
            out,
        } => cmd_estimate(&layers, input, p, stats_csv, out),
        Command::Audit { spec, sim, out } => cmd_audit(&layers, spec, sim, out),
        Command::Oracle {
            spec,
            n,
            node_budget,
            out,
        } => cmd_oracle(&layers, spec, n, node_budget, out),
        Command::Model(ModelCommand::Freezing {
            k,
            p,
            simulate,
            sim,
            out,
        }) => cmd_freezing(&layers, k, p, simulate, sim, out),
        Command::Model(ModelCommand::Hooking {
            params,
            sim,
            checkpoints,
            out,
        }) => cmd_hooking(&layers, params, sim, checkpoints, out),
        Command::Verify {
            suite,
            budget,
            only,
            threads,
            out,
        } => cmd_verify(&layers, suite, budget, only, threads, out),
    }
}

fn cmd_analyze(l: &Layered, spec: Option<String>, tol: TolFlags, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = RunConfig::new("analyze");
    let spec = l.spec(&mut cfg, spec)?;
    let flags = ToleranceConfig {
        cluster_tol: tol.cluster_tol,
        rank_tol: tol.rank_tol,
        proj_tol: tol.proj_tol,
    };
    let tol = l.file.tolerances.overlay(&flags).resolve();
    cfg.tolerances = Some(tol);
    l.output(&mut cfg, out);
    echo(&cfg);
    let report = analyze(&spec, &tol)?;
    emit_artifact("spectral_report", &cfg, &report.record())
}

fn cmd_simulate(
    l: &Layered,
    spec: Option<String>,
    sim: SimFlags,
    checkpoints: Option<Checkpoints>,
    binary: bool,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::new("simulate");
    let spec = l.spec(&mut cfg, spec)?;
    l.sim(&mut cfg, &sim, DEFAULT_N, DEFAULT_REPS);
    l.checkpoints(&mut cfg, checkpoints)?;
    l.output(&mut cfg, out);
    echo(&cfg);
    let urn = Urn::new(spec)?;
    let ens = run_ensemble(
        &urn,
        cfg.n.unwrap_or(DEFAULT_N),
        cfg.checkpoints.as_deref().unwrap_or_default(),
        cfg.reps.unwrap_or(DEFAULT_REPS),
        cfg.seed.unwrap_or(DEFAULT_SEED),
        cfg.threads.unwrap_or(1),
    )?;
    let mut buf = Vec::new();
    if binary {
        write_ensemble_binary(&ens, &mut buf)?;
    } else {
        let config = serde_json::to_string(&cfg)?;
        write_ensemble_csv(&ens, Some(&config), &mut buf)?;
    }
    emit(cfg.output.as_deref(), &buf)
}

#[derive(Serialize)]
struct EstimateArtifact {
    spec_name: String,
    ensemble_seed: u64,
    estimator: EstimatorReport,
    /// Checkpoints with at least the minimum number of survivors.
    normality: Vec<NormalityReport>,
    /// Log-log slope of the conditional centred L2 norm, when the grid allows a fit.
    growth_exponent: Option<GrowthFit>,
}

fn cmd_estimate(
    l: &Layered,
    input: Option<PathBuf>,
    p: Option<Vec<f64>>,
    stats: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::new("estimate");
    let input = require(input.or_else(|| l.file.input.clone()), "input ensemble CSV")?;
    if !input.exists() {
        return Err(CliError::Usage(format!("no such file: {}", input.display())));
    }
    cfg.input = Some(input.clone());
    cfg.p_list = Some(p.or_else(|| l.file.p_list.clone()).unwrap_or(DEFAULT_P_LIST.to_vec()));
    cfg.stats_csv = stats.or_else(|| l.file.stats_csv.clone());
    l.output(&mut cfg, out);
    let reader = BufReader::new(File::open(&input).map_err(|e| CliError::io(&input, e))?);
    let (ens, meta) = read_ensemble_csv(reader)?;
    cfg.source_config = meta
        .config
        .as_deref()
        .map(|c| serde_json::from_str(c).unwrap_or_else(|_| serde_json::Value::String(c.into())));
    echo(&cfg);
    let estimator = conditional_stats(&ens, cfg.p_list.as_deref().unwrap_or_default())?;
    let mut normality = Vec::new();
    for (cp, &n) in ens.checkpoints.iter().enumerate() {
        if ens.survivors(cp).len() >= MIN_SURVIVORS {
            normality.push(normality_diagnostics(&ens, n)?);
        }
    }
    if let Some(path) = &cfg.stats_csv {
        std::fs::write(path, stats_csv(&estimator)).map_err(|e| CliError::io(path, e))?;
    }
    let points: Vec<GrowthPoint> = estimator
        .checkpoints
        .iter()
        .filter(|cp| cp.n > 0)
        .filter_map(|cp| {
            let root = (cp.n as f64).sqrt();
            cp.lp_for(2.0).map(|l| GrowthPoint {
                n: cp.n,
                value: l.conditional.value * root,
                stderr: l.conditional.stderr * root,
            })
        })
        .collect();
    let growth_exponent = growth_exponent_fit(&points, ens.master_seed).ok();
    let artifact = EstimateArtifact {
        spec_name: ens.spec_name.clone(),
        ensemble_seed: ens.master_seed,
        estimator,
        normality,
        growth_exponent,
    };
    emit_artifact("estimator_report", &cfg, &artifact)
}

#[derive(Serialize)]
struct AuditArtifact {
    decomposition: AuditReport,
    martingale: MartingaleReport,
}

fn cmd_audit(l: &Layered, spec: Option<String>, sim: SimFlags, out: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = RunConfig::new("audit");
    let spec = l.spec(&mut cfg, spec)?;
    l.sim(&mut cfg, &sim, DEFAULT_AUDIT_N, DEFAULT_AUDIT_REPS);
    l.output(&mut cfg, out);
    echo(&cfg);
    let (n, reps, seed, threads) = (
        cfg.n.unwrap_or(DEFAULT_AUDIT_N),
        cfg.reps.unwrap_or(DEFAULT_AUDIT_REPS),
        cfg.seed.unwrap_or(DEFAULT_SEED),
        cfg.threads.unwrap_or(1),
    );
    let urn = Urn::new(spec)?;
    let decomposition = AuditPlan::new(&urn, n)?.audit_many(reps, seed, threads)?;
    let martingale = martingale_check(&urn, n, reps, seed, threads)?;
    emit_artifact(
        "audit_report",
        &cfg,
        &AuditArtifact {
            decomposition,
            martingale,
        },
    )
}

fn cmd_oracle(
    l: &Layered,
    spec: Option<String>,
    n: Option<u64>,
    budget: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::new("oracle");
    let spec = l.spec(&mut cfg, spec)?;
    cfg.n = Some(n.or(l.file.n).unwrap_or(DEFAULT_ORACLE_N));
    cfg.node_budget = Some(budget.or(l.file.node_budget).unwrap_or(DEFAULT_NODE_BUDGET));
    l.output(&mut cfg, out);
    echo(&cfg);
    let report = enumeration_oracle(
        &spec,
        cfg.n.unwrap_or(DEFAULT_ORACLE_N),
        cfg.node_budget.unwrap_or(DEFAULT_NODE_BUDGET),
    )?;
    emit_artifact("oracle_report", &cfg, &report)
}

#[derive(Serialize)]
struct TreeCensus {
    k: usize,
    p: f64,
    n: u64,
    /// `[rep][type]` in urn coordinates.
    census: Vec<Vec<usize>>,
    mean: Vec<f64>,
    survivors: usize,
}

fn cmd_freezing(
    l: &Layered,
    k: Option<usize>,
    p: Option<f64>,
    simulate: bool,
    sim: SimFlags,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::new(if simulate { "model freezing --simulate" } else { "model freezing" });
    let k = require(k.or(l.file.freezing_k), "--K")?;
    let p = require(p.or(l.file.freezing_p), "--p")?;
    cfg.freezing_k = Some(k);
    cfg.freezing_p = Some(p);
    let params = FreezingParams::new(k, p)?;
    if !simulate {
        l.output(&mut cfg, out);
        echo(&cfg);
        let spec = freezing_urn_spec(&params)?;
        let json = polya_urn::report::to_json(&spec)?;
        return emit(cfg.output.as_deref(), json.as_bytes());
    }
    l.sim(&mut cfg, &sim, DEFAULT_N, 1000);
    l.output(&mut cfg, out);
    echo(&cfg);
    let (n, reps, seed) = (
        cfg.n.unwrap_or(DEFAULT_N),
        cfg.reps.unwrap_or(1000),
        cfg.seed.unwrap_or(DEFAULT_SEED),
    );
    let mut census = Vec::with_capacity(reps);
    for t in 0..reps as u64 {
        census.push(simulate_freezing_tree(&params, n, StreamSeed::new(seed, t))?.census(k));
    }
    let q = params.q();
    let mean = (0..q)
        .map(|i| census.iter().map(|c| c[i] as f64).sum::<f64>() / reps.max(1) as f64)
        .collect();
    let survivors = census
        .iter()
        .filter(|c| (0..=k).any(|m| c[2 * m] > 0))
        .count();
    emit_artifact(
        "freezing_tree_census",
        &cfg,
        &TreeCensus {
            k,
            p,
            n,
            census,
            mean,
            survivors,
        },
    )
}

#[derive(Serialize)]
struct HookingCheckpointSummary {
    n: u64,
    census_mean: Vec<f64>,
    census_mean_over_n: Vec<f64>,
    /// `census_mean / (n b)`.
    nu_estimate: Vec<f64>,
    mean_increment: f64,
}

#[derive(Serialize)]
struct HookingSummary {
    params: HookingParams,
    b: f64,
    essential_degrees: Vec<usize>,
    reps: usize,
    increment_min: f64,
    increment_max: f64,
    max_bookkeeping_error: f64,
    checkpoints: Vec<HookingCheckpointSummary>,
}

fn cmd_hooking(
    l: &Layered,
    params: Option<String>,
    sim: SimFlags,
    checkpoints: Option<Checkpoints>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::new("model hooking");
    let source = require(params.or_else(|| l.file.hooking.clone()), "hooking parameters (JSON path or builtin:<preset>)")?;
    cfg.hooking = Some(source.clone());
    let params = load_hooking(&source)?;
    l.sim(&mut cfg, &sim, DEFAULT_N, 1000);
    l.checkpoints(&mut cfg, checkpoints)?;
    l.output(&mut cfg, out);
    echo(&cfg);
    let b = hooking_balance_constant(&params)?;
    let ens = run_hooking_ensemble(
        &params,
        cfg.n.unwrap_or(DEFAULT_N),
        cfg.checkpoints.as_deref().unwrap_or_default(),
        cfg.reps.unwrap_or(1000),
        cfg.seed.unwrap_or(DEFAULT_SEED),
        cfg.threads.unwrap_or(1),
    )?;
    let checkpoints = ens
        .checkpoints
        .iter()
        .enumerate()
        .map(|(cp, &n)| {
            let census_mean = ens.census_mean(cp);
            let scale = n.max(1) as f64;
            HookingCheckpointSummary {
                n,
                census_mean_over_n: census_mean.iter().map(|c| c / scale).collect(),
                nu_estimate: census_mean.iter().map(|c| c / (scale * b)).collect(),
                census_mean,
                mean_increment: if n == 0 { 0.0 } else { ens.mean_increment(cp, params.rho) },
            }
        })
        .collect();
    let summary = HookingSummary {
        b,
        essential_degrees: ens.essential_degrees.clone(),
        reps: ens.reps,
        increment_min: ens.increment_min,
        increment_max: ens.increment_max,
        max_bookkeeping_error: ens.max_bookkeeping_error,
        checkpoints,
        params,
    };
    emit_artifact("hooking_summary", &cfg, &summary)
}

fn cmd_verify(
    l: &Layered,
    suite: Option<String>,
    budget: Option<String>,
    only: Option<Vec<u8>>,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = RunConfig::new("verify");
    let suite = suite.or_else(|| l.file.suite.clone()).unwrap_or_else(|| "core".into());
    if suite != "core" {
        return Err(CliError::Usage(format!("unknown suite {suite:?}; available: core")));
    }
    let budget_name = budget.or_else(|| l.file.budget.clone()).unwrap_or_else(|| "desk".into());
    let budget: Budget = budget_name.parse().map_err(CliError::Usage)?;
    let only = only.or_else(|| l.file.only.clone()).unwrap_or_default();
    if let Some(bad) = only.iter().find(|id| !polya_urn::acceptance::CRITERIA.contains(id)) {
        return Err(CliError::Usage(format!("unknown criterion {bad}")));
    }
    cfg.suite = Some(suite);
    cfg.budget = Some(budget_name);
    cfg.only = (!only.is_empty()).then(|| only.clone());
    cfg.threads = Some(threads.or(l.file.threads).unwrap_or_else(default_thread_budget));
    l.output(&mut cfg, out);
    echo(&cfg);
    let mut stdout = BufWriter::new(std::io::stdout().lock());
    let report = run_suite(budget, cfg.threads.unwrap_or(1), &only, |r| {
        let _ = writeln!(stdout, "{r}").and_then(|_| stdout.flush());
    });
    drop(stdout);
    if let Some(path) = &cfg.output {
        let value = cfg.to_value();
        let json = Artifact::new("acceptance_report", &value, &report).to_json()?;
        std::fs::write(path, json).map_err(|e| CliError::io(path, e))?;
    }
    let failed: Vec<u8> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failed))
    }
}
