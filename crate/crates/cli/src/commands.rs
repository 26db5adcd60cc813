use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use priceopt::gen::{self, BoundsMode, DeltaMode, GenConfig, SuiteScale};
use priceopt::gpa::{self, SolverParams, StepRule, StopRule};
use priceopt::io::report::{improvement_pct, write_sweep, RunLabel, SweepRow};
use priceopt::io::{self, ReportFormat, ReportRow};
use priceopt::model::{self, Instance, SpectralMode};
use priceopt::{oracle, par, projection, Error};

use crate::SeedArg;

/// Maps a failure to the documented exit code.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    let Some(err) = e.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return 2;
    };
    match err {
        Error::Capacity(_) => 3,
        Error::Numeric(_) | Error::NonConvergence(_) => 4,
        _ => 2,
    }
}

#[derive(Args)]
pub struct GenArgs {
    /// Number of products.
    #[arg(long)]
    n: usize,
    /// Change budget as a fraction of n.
    #[arg(long, default_value_t = 0.1)]
    k_frac: f64,
    /// Minimum change: const:X or frac:R (fraction of the baseline price).
    #[arg(long, default_value = "const:0.5")]
    delta: String,
    /// Price bounds: none or l_lo,l_hi,u_lo,u_hi.
    #[arg(long, default_value = "none")]
    bounds: String,
    /// Let off-diagonal demand effects take either sign.
    #[arg(long)]
    mixed_signs: bool,
    /// Skip the rescaling that makes D + D' diagonally dominant.
    #[arg(long)]
    no_dominance_fix: bool,
    /// Draw the linear term from the negated range.
    #[arg(long)]
    literal_sign: bool,
    #[command(flatten)]
    seed: SeedArg,
    /// Output instance file.
    #[arg(long)]
    out: PathBuf,
}

pub fn gen(a: GenArgs) -> Result<()> {
    let mut config = GenConfig::new(a.n, a.seed.seed);
    config.k_fraction = a.k_frac;
    config.delta_mode = a.delta.parse::<DeltaMode>()?;
    config.bounds_mode = a.bounds.parse::<BoundsMode>()?;
    config.allow_mixed_signs = a.mixed_signs;
    config.dominance_fix = !a.no_dominance_fix;
    config.literal_sign = a.literal_sign;
    let instance = gen::generate(&config)?;
    io::write_instance(&instance, &a.out)?;
    let v = model::validate(&instance);
    println!(
        "wrote {}: n = {}, k = {}, positive definite = {}, assumptions hold = {}",
        a.out.display(),
        instance.n(),
        instance.k(),
        v.a1_positive_definite,
        v.all_ok()
    );
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
enum LMode {
    Gershgorin,
    Power,
}

/// Solver settings shared by `solve`, `sweep` and `suite`.
#[derive(Args, Clone)]
pub struct SolverArgs {
    /// Number of starts (baseline, three random, long step), 1 to 5.
    #[arg(long, default_value_t = 5)]
    starts: usize,
    /// How the step constant L is obtained.
    #[arg(long, value_enum, default_value = "gershgorin")]
    l_mode: LMode,
    /// Stop once the objective decrease falls below eps * max(1, |Q|).
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// Treat eps as an absolute threshold.
    #[arg(long)]
    abs_eps: bool,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
    /// Polish on the stabilized partition (default).
    #[arg(long, overrides_with = "no_refine")]
    refine: bool,
    /// Disable the polishing step.
    #[arg(long)]
    no_refine: bool,
    /// Estimate the smallest eigenvalue and report suboptimality bounds.
    #[arg(long)]
    bounds_report: bool,
    /// Run the starts concurrently on N threads (1 = sequential).
    #[arg(long, default_value_t = 1)]
    parallel_starts: usize,
    /// Record wall-clock times in reports (makes them non-reproducible).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    seed: SeedArg,
}

impl SolverArgs {
    fn params(&self) -> SolverParams {
        SolverParams {
            step: StepRule::Spectral(match self.l_mode {
                LMode::Gershgorin => SpectralMode::Gershgorin,
                LMode::Power => SpectralMode::Power,
            }),
            stop: if self.abs_eps { StopRule::Absolute(self.eps) } else { StopRule::Relative(self.eps) },
            max_iters: self.max_iters,
            refine: !self.no_refine,
            seed: self.seed.seed,
            starts: self.starts,
            parallel_starts: self.parallel_starts > 1,
            bounds_report: self.bounds_report,
            ..SolverParams::default()
        }
    }

    fn threads(&self) -> usize {
        if self.parallel_starts > 1 { self.parallel_starts } else { 0 }
    }
}

/// Rejects instances the solver cannot handle and warns about failed
/// modelling assumptions.
fn check_instance(instance: &Instance, what: &str) -> Result<()> {
    let v = model::validate(instance);
    if !v.a1_positive_definite {
        return Err(Error::validation("D", format!("{what}: D + D' is not positive definite")).into());
    }
    for m in v.messages.iter().filter(|m| !m.contains("probable")) {
        eprintln!("warning: {what}: {m}");
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

#[derive(Args)]
pub struct SolveCmd {
    #[arg(long)]
    instance: PathBuf,
    /// Report file with one row per start.
    #[arg(long)]
    report: PathBuf,
    /// Report format: csv or lines (JSON lines).
    #[arg(long, default_value = "csv")]
    format: String,
    /// Also write the best price vector as a JSON array.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Instance label in the report (default: file stem).
    #[arg(long)]
    id: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

pub fn solve(a: SolveCmd) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let instance = io::read_instance(&a.instance)?;
    check_instance(&instance, &a.instance.display().to_string())?;
    let params = a.solver.params();
    params.check()?;
    let run = par::with_threads(a.solver.threads(), || gpa::multi_start(&instance, &params))?;

    let label = RunLabel::describe(&a.id.unwrap_or_else(|| stem(&a.instance)), &instance);
    let base = model::profit_z(&instance, instance.p0())?;
    let rows: Vec<ReportRow> = run
        .reports
        .iter()
        .map(|r| ReportRow::new(&label, &instance, base, r, a.solver.timing))
        .collect();
    io::write_report(&rows, &a.report, format)?;
    let best = run.best();
    if let Some(path) = &a.solution {
        io::write_json(&best.final_p, path)?;
    }
    println!(
        "best start {}: profit {} (baseline {}, {}), {} prices changed, stationary = {}",
        best.start_id,
        best.final_profit,
        base,
        improvement_pct(base, best.final_profit).map_or("n/a".into(), |p| format!("{p:+.4}%")),
        best.kappa,
        best.stationary
    );
    Ok(())
}

#[derive(Args)]
pub struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Output JSON with the optimal prices and objective.
    #[arg(long)]
    out: PathBuf,
}

pub fn oracle(a: OracleArgs) -> Result<()> {
    let instance = io::read_instance(&a.instance)?;
    let g = oracle::global_optimum(&instance)?;
    let profit = model::profit_z(&instance, &g.p)?;
    let doc = json!({
        "p": g.p,
        "q": g.q_value,
        "profit": profit,
        "raised": g.partition.beta,
        "lowered": g.partition.gamma,
        "partitions_evaluated": g.evaluated,
    });
    io::write_json(&doc, &a.out)?;
    println!("global optimum: Q = {}, profit = {}, {} partitions", g.q_value, profit, g.evaluated);
    Ok(())
}

#[derive(Args)]
pub struct ProjectArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Point to project, as a JSON array.
    #[arg(long)]
    q: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn project(a: ProjectArgs) -> Result<()> {
    let instance = io::read_instance(&a.instance)?;
    let q = io::read_vector(&a.q)?;
    if q.len() != instance.n() {
        return Err(Error::validation("q", format!("has {} entries but n = {}", q.len(), instance.n())).into());
    }
    let scores = projection::score(&instance, &q)?;
    let p = projection::project_feasible(&instance, &q)?;
    let distance_sq: f64 = p.iter().zip(&q).map(|(x, y)| (x - y) * (x - y)).sum();
    let in_h = projection::certify_in_h(&instance, &q, &p, projection::CERTIFY_TOL);
    let doc = json!({
        "p": p,
        "distance_sq": distance_sq,
        "delta_score": scores.delta_score,
        "certified": in_h,
    });
    io::write_json(&doc, &a.out)?;
    println!("projection at squared distance {distance_sq}, certified = {in_h}");
    Ok(())
}

#[derive(Args)]
pub struct CompareArgs {
    /// Baseline profit Z(p0).
    #[arg(long, allow_hyphen_values = true)]
    base_profit: f64,
    /// Profit of the reference solution.
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    /// Profit of the compared solution.
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
}

pub fn compare(a: CompareArgs) -> Result<()> {
    println!("{}", io::adjusted_gap(a.base_profit, a.a, a.b)?);
    Ok(())
}

#[derive(Args)]
pub struct ExportArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Big-M for unbounded instances (default: 10 * max(p0 + delta)).
    #[arg(long)]
    big_m: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

pub fn export_mip(a: ExportArgs) -> Result<()> {
    let instance = io::read_instance(&a.instance)?;
    io::export_mip_lp(&instance, a.big_m, &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Change budgets as fractions of n.
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.05,0.1,0.2,0.4,1.0")]
    k_list: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    id: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let instance = io::read_instance(&a.instance)?;
    check_instance(&instance, &a.instance.display().to_string())?;
    let params = a.solver.params();
    params.check()?;
    let points = par::with_threads(a.solver.threads(), || gpa::k_sweep(&instance, &a.k_list, &params))?;
    let id = a.id.unwrap_or_else(|| stem(&a.instance));
    let base = points[0].profit;
    let rows: Vec<SweepRow> = points
        .iter()
        .map(|pt| SweepRow {
            instance_id: id.clone(),
            k_fraction: pt.k_fraction,
            k: pt.k,
            best_start_id: pt.run.as_ref().map(|r| r.best().start_id),
            best_profit: pt.profit,
            improvement_pct_vs_base: improvement_pct(base, pt.profit),
            iterations: pt.run.as_ref().map_or(0, |r| r.best().iterations),
            stationary: pt.run.as_ref().map(|r| u8::from(r.best().stationary)),
        })
        .collect();
    write_sweep(&rows, &a.out)?;
    for r in &rows {
        println!("k = {:>6}: profit {}", r.k, r.best_profit);
    }
    Ok(())
}

#[derive(Args)]
pub struct SuiteArgs {
    /// desk (n up to 5 000) or full (n up to 100 000).
    #[arg(long, default_value = "desk")]
    scale: String,
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write every generated instance into the output directory.
    #[arg(long)]
    write_instances: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

pub fn suite(a: SuiteArgs) -> Result<()> {
    let scale: SuiteScale = a.scale.parse()?;
    let params = a.solver.params();
    params.check()?;
    let entries = gen::experiment_suite(scale, a.solver.seed.seed);

    let mut rows = Vec::new();
    let mut instances = Vec::new();
    for entry in &entries {
        let instance = gen::generate(&entry.config)?;
        check_instance(&instance, &entry.id)?;
        let run = par::with_threads(a.solver.threads(), || gpa::multi_start(&instance, &params))
            .with_context(|| format!("solving {}", entry.id))?;
        let label = RunLabel {
            instance_id: entry.id.clone(),
            delta_mode: entry.config.delta_mode.to_string(),
            bounds_mode: entry.config.bounds_mode.to_string(),
        };
        let base = model::profit_z(&instance, instance.p0())?;
        rows.extend(run.reports.iter().map(|r| ReportRow::new(&label, &instance, base, r, a.solver.timing)));
        let best = run.best();
        eprintln!(
            "{}: n = {}, best profit {} ({}), stationary = {}",
            entry.id,
            instance.n(),
            best.final_profit,
            improvement_pct(base, best.final_profit).map_or("n/a".into(), |p| format!("{p:+.3}%")),
            best.stationary
        );
        if a.write_instances {
            instances.push((entry.id.clone(), instance));
        }
    }

    if a.out_dir.exists() && !a.out_dir.is_dir() {
        bail!(Error::validation("out_dir", format!("{} is not a directory", a.out_dir.display())));
    }
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let name = match scale {
        SuiteScale::Desk => "suite_desk.csv",
        SuiteScale::Full => "suite_full.csv",
    };
    io::write_report(&rows, &a.out_dir.join(name), ReportFormat::Csv)?;
    for (id, instance) in &instances {
        io::write_instance(instance, &a.out_dir.join(format!("{id}.json")))?;
    }
    println!("wrote {} rows to {}", rows.len(), a.out_dir.join(name).display());
    Ok(())
}
