use std::fs;
use std::path::{Path, PathBuf};

use lp_limitlaw::cones::{sample_limit, support_partition, ConeH, SupportPartition};
use lp_limitlaw::harness::{run_experiment, ExperimentConfig, ExperimentReport, RhsModel};
use lp_limitlaw::io::{csv_string, fmt_f64, parse_problem, ProblemFile};
use lp_limitlaw::lp::Vertex;
use lp_limitlaw::ot::{certify as certify_ot, ot_limit_spec, CertificateReport, OtMode, OtProblem};
use lp_limitlaw::{
    build_cones, check_assumptions, enumerate_ledger, AssumptionReport, BasicSolutionPair, StandardLp, TieBreak,
    Tolerances,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::manifest::RunManifest;
use crate::{CliError, Mode, SamplingArgs};

pub struct Context {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub tol: Tolerances,
}

impl Context {
    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Output(format!("cannot serialise {name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(&self, mut manifest: RunManifest) -> Result<(), CliError> {
        manifest.finish();
        self.write_json("manifest.json", &manifest)
    }
}

fn read_json(path: &Path) -> Result<(String, Value), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: malformed JSON: {e}", path.display())))?;
    Ok((text, value))
}

fn load_problem(path: &Path, tol: Tolerances) -> Result<(ProblemFile, Value), CliError> {
    let (text, value) = read_json(path)?;
    let problem = parse_problem(&text, tol).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let problem = match problem {
        ProblemFile::Ot(ot) => ProblemFile::Ot(ot.with_tolerances(tol)),
        lp => lp,
    };
    Ok((problem, value))
}

fn require_ot(problem: ProblemFile, command: &str) -> Result<OtProblem, CliError> {
    match problem {
        ProblemFile::Ot(ot) => Ok(ot),
        ProblemFile::Lp(_) => Err(CliError::Input(format!("{command} needs an optimal transport problem (`r`, `s`)"))),
    }
}

fn to_lp(problem: &ProblemFile) -> Result<StandardLp, CliError> {
    Ok(match problem {
        ProblemFile::Lp(lp) => lp.clone(),
        ProblemFile::Ot(ot) => ot.reduce_to_lp()?,
    })
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn ot_mode(sampling: &SamplingArgs) -> OtMode {
    match sampling.mode {
        Mode::OneSample => OtMode::OneSample,
        Mode::TwoSample => OtMode::TwoSample { lambda: sampling.lambda },
    }
}

#[derive(Serialize)]
struct Degeneracy {
    primal_degenerate_optimal: usize,
    dual_degenerate_optimal: usize,
    primal_degenerate_any: bool,
    dual_degenerate_any: bool,
}

#[derive(Serialize)]
struct Analysis<'a> {
    manifest: RunManifest,
    m: usize,
    d: usize,
    variable_names: Vec<String>,
    /// Dual feasible bases.
    #[serde(rename = "N")]
    n: usize,
    /// Optimal bases.
    #[serde(rename = "K")]
    k: usize,
    candidates: u128,
    invertible_bases: usize,
    optimal_value: Option<f64>,
    vertices: &'a [Vertex],
    bases: &'a [BasicSolutionPair],
    degeneracy: Degeneracy,
    assumptions: AssumptionReport,
    partition: Option<SupportPartition>,
    cones: Option<Vec<ConeH>>,
    notes: Vec<String>,
}

pub fn analyze(ctx: &Context, problem_path: &Path) -> Result<(), CliError> {
    let (problem, raw) = load_problem(problem_path, ctx.tol)?;
    let seed = ctx.seed.unwrap_or(0);
    let config = json!({ "command": "analyze", "problem": raw, "tol": ctx.tol });
    let manifest = RunManifest::new("analyze", vec![path_string(problem_path)], seed, &config);
    let lp = to_lp(&problem)?;
    let ledger = enumerate_ledger(&lp)?;
    let assumptions = check_assumptions(&lp);
    let mut notes = Vec::new();
    let (partition, cones) = if ledger.vertices.len() == 1 {
        let partition = support_partition(&ledger, &ledger.vertices[0].point, lp.tol())?;
        let cones = build_cones(&lp, &ledger, &partition, lp.m())?;
        (Some(partition), Some(cones))
    } else {
        notes.push(format!(
            "support partition and cones need a unique optimum; found {} optimal vertices",
            ledger.vertices.len()
        ));
        (None, None)
    };
    let optimal = ledger.optimal();
    let degeneracy = Degeneracy {
        primal_degenerate_optimal: optimal.iter().filter(|p| p.primal_degenerate).count(),
        dual_degenerate_optimal: optimal.iter().filter(|p| p.dual_degenerate).count(),
        primal_degenerate_any: ledger.dual_feasible.iter().any(|p| p.primal_degenerate),
        dual_degenerate_any: ledger.dual_feasible.iter().any(|p| p.dual_degenerate),
    };
    let analysis = Analysis {
        manifest: manifest.without_timestamps(),
        m: lp.m(),
        d: lp.d(),
        variable_names: lp.variable_names(),
        n: ledger.n(),
        k: ledger.k(),
        candidates: ledger.candidates,
        invertible_bases: ledger.invertible_bases,
        optimal_value: ledger.optimal_value,
        vertices: &ledger.vertices,
        bases: &ledger.dual_feasible,
        degeneracy,
        assumptions,
        partition,
        cones,
        notes,
    };
    ctx.write_json("analysis.json", &analysis)?;
    ctx.finish(manifest)
}

#[derive(Serialize)]
struct ConeLabel {
    basis_index: usize,
    basis: Vec<usize>,
}

#[derive(Serialize)]
struct LimitSidecar {
    manifest: RunManifest,
    mode: OtMode,
    policy: TieBreak,
    rate: String,
    seed: u64,
    requested: usize,
    /// Rows of limit_samples.csv; draws outside every cone are dropped.
    written: usize,
    cones: Vec<ConeLabel>,
    /// Share of draws whose lowest-index feasible cone is each cone.
    occupancy: Vec<f64>,
    /// Share of draws lying in each cone, boundary included.
    membership_rates: Vec<f64>,
    selection_counts: Vec<usize>,
    boundary_hits: Vec<usize>,
    boundary_draws: usize,
    uncovered: usize,
}

pub fn limit_sample(
    ctx: &Context,
    problem_path: &Path,
    sampling: &SamplingArgs,
    samples: usize,
    policy: TieBreak,
) -> Result<(), CliError> {
    let (problem, raw) = load_problem(problem_path, ctx.tol)?;
    let seed = ctx.seed.unwrap_or(0);
    let mode = ot_mode(sampling);
    let config = json!({
        "command": "limit-sample",
        "problem": raw,
        "tol": ctx.tol,
        "mode": mode,
        "policy": policy,
        "samples": samples,
        "seed": seed,
    });
    let manifest = RunManifest::new("limit-sample", vec![path_string(problem_path)], seed, &config);
    let ot = require_ot(problem, "limit-sample")?;
    let spec = ot_limit_spec(&ot, mode, policy)?;
    let draws = sample_limit(&spec, samples, seed)?;
    let names = ot.reduce_to_lp()?.variable_names();
    let csv = csv_string(&names, draws.samples.iter().map(|x| x.iter().copied().collect()));
    ctx.write("limit_samples.csv", &csv)?;
    let sidecar = LimitSidecar {
        manifest: manifest.without_timestamps(),
        mode,
        policy,
        rate: spec.rate_name.clone(),
        seed,
        requested: samples,
        written: draws.samples.len(),
        cones: spec
            .cones
            .iter()
            .map(|c| ConeLabel { basis_index: c.basis_index, basis: c.basis.indices().to_vec() })
            .collect(),
        occupancy: draws.leading_frequencies(),
        membership_rates: draws.occupancy(),
        selection_counts: draws.selection_counts.clone(),
        boundary_hits: draws.boundary_hits.clone(),
        boundary_draws: draws.boundary_draws,
        uncovered: draws.uncovered,
    };
    ctx.write_json("limit_samples.json", &sidecar)?;
    ctx.finish(manifest)
}

/// Monte-Carlo config file: experiment settings plus an optional rhs model.
/// OT problems default to the model selected by `--mode`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MonteCarloFile {
    experiment: ExperimentConfig,
    model: Option<RhsModel>,
}

#[derive(Serialize)]
struct BlockSummary {
    n: usize,
    m: Option<usize>,
    rate: f64,
    replicates: usize,
    infeasible: usize,
}

#[derive(Serialize)]
struct MonteCarloReport {
    manifest: RunManifest,
    model: RhsModel,
    experiment: ExperimentConfig,
    blocks: Vec<BlockSummary>,
    report: ExperimentReport,
}

fn default_model(ot: &OtProblem, sampling: &SamplingArgs, cfg: &mut ExperimentConfig) -> Result<RhsModel, CliError> {
    let r: Vec<f64> = ot.r().iter().copied().collect();
    let s: Vec<f64> = ot.s().iter().copied().collect();
    Ok(match sampling.mode {
        Mode::OneSample => RhsModel::OneSample { r, s },
        Mode::TwoSample => {
            let lambda = sampling.lambda;
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(CliError::Input(format!("--lambda {lambda} must lie in (0, 1)")));
            }
            if cfg.second_sample_sizes.is_none() {
                // m / (n + m) = lambda.
                let ms =
                    cfg.sample_sizes.iter().map(|&n| ((n as f64 * lambda / (1.0 - lambda)).round() as usize).max(1));
                cfg.second_sample_sizes = Some(ms.collect());
            }
            RhsModel::TwoSample { r, s }
        }
    })
}

fn warn_boundary_marginals(model: &RhsModel) {
    for (name, v) in model.marginals() {
        let zeros: Vec<usize> = (0..v.len()).filter(|&i| v[i] <= 0.0).collect();
        if !zeros.is_empty() {
            eprintln!(
                "warning: marginal `{name}` has zero coordinates {zeros:?}; the limit theory assumes the relative interior"
            );
        }
    }
}

pub fn monte_carlo(
    ctx: &Context,
    problem_path: &Path,
    config_path: Option<&Path>,
    sampling: &SamplingArgs,
    samples: Option<usize>,
) -> Result<(), CliError> {
    let (problem, raw) = load_problem(problem_path, ctx.tol)?;
    let mut inputs = vec![path_string(problem_path)];
    let mut file = match config_path {
        Some(path) => {
            inputs.push(path_string(path));
            let (_, value) = read_json(path)?;
            serde_json::from_value::<MonteCarloFile>(value)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => MonteCarloFile::default(),
    };
    let mut cfg = file.experiment.clone();
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    if let Some(n) = samples {
        cfg.comparison_samples = n;
    }
    let model = match (file.model.take(), &problem) {
        (Some(model), _) => model,
        (None, ProblemFile::Ot(ot)) => default_model(ot, sampling, &mut cfg)?,
        (None, ProblemFile::Lp(_)) => {
            return Err(CliError::Input("LP problems need a `model` in the Monte-Carlo config".into()));
        }
    };
    cfg.validate()?;
    let lp = to_lp(&problem)?;
    model.validate(lp.m())?;
    if cfg.require_interior {
        warn_boundary_marginals(&model);
    }
    let config = json!({
        "command": "monte-carlo",
        "problem": raw,
        "tol": ctx.tol,
        "experiment": cfg,
        "model": model,
    });
    let manifest = RunManifest::new("monte-carlo", inputs, cfg.seed, &config);
    let out = run_experiment(&lp, &cfg, &model)?;

    let two = model.is_two_sample();
    let mut header: Vec<String> = vec!["n".into()];
    if two {
        header.push("m".into());
    }
    header.push("replicate".into());
    header.extend(lp.variable_names());
    header.push("value".into());
    let mut csv = header.join(",") + "\n";
    for block in &out.fluctuations.blocks {
        for (k, x) in block.fluctuations.iter().enumerate() {
            let mut row = vec![block.n.to_string()];
            if two {
                row.push(block.m.unwrap_or(0).to_string());
            }
            row.push(block.replicate[k].to_string());
            row.extend(x.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(block.value_fluctuations[k]));
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
    }
    ctx.write("fluctuations.csv", &csv)?;

    let mut csv = String::from("n,replicate,d_H\n");
    for r in out.hausdorff.iter().flat_map(|h| h.records.iter()) {
        csv.push_str(&format!("{},{},{}\n", r.n, r.replicate, fmt_f64(r.distance)));
    }
    ctx.write("hausdorff.csv", &csv)?;

    let report = MonteCarloReport {
        manifest: manifest.without_timestamps(),
        model,
        experiment: cfg,
        blocks: out
            .fluctuations
            .blocks
            .iter()
            .map(|b| BlockSummary { n: b.n, m: b.m, rate: b.rate, replicates: b.replicates, infeasible: b.infeasible })
            .collect(),
        report: out.report,
    };
    ctx.write_json("report.json", &report)?;
    ctx.finish(manifest)
}

#[derive(Serialize)]
struct Certificates {
    manifest: RunManifest,
    #[serde(rename = "N")]
    n: usize,
    max_cycle_len: usize,
    #[serde(flatten)]
    report: CertificateReport,
}

pub fn certify(ctx: &Context, problem_path: &Path, max_cycle_len: Option<usize>) -> Result<(), CliError> {
    let (problem, raw) = load_problem(problem_path, ctx.tol)?;
    let ot = require_ot(problem, "certify")?;
    let len = max_cycle_len.unwrap_or(ot.n());
    let seed = ctx.seed.unwrap_or(0);
    let config = json!({ "command": "certify", "problem": raw, "tol": ctx.tol, "max_cycle_len": len });
    let manifest = RunManifest::new("certify", vec![path_string(problem_path)], seed, &config);
    let report = certify_ot(&ot, len)?;
    let out = Certificates { manifest: manifest.without_timestamps(), n: ot.n(), max_cycle_len: len, report };
    ctx.write_json("certificates.json", &out)?;
    ctx.finish(manifest)
}
