use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use log::info;
use mmwave_core::benchmarks::{solve_scheme, BenchmarkConfig, Scheme};
use mmwave_core::deploy::{make_deployment, prepare, site_costs, Outcome};
use mmwave_core::evalmc::{empirical_cdf, evaluate, McConfig, McReport};
use mmwave_core::gen::{generate, SizeClass};
use mmwave_core::linkmodel::build_link_table;
use mmwave_core::{Overrides, Scenario};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::plan::PlanFile;
use crate::{Command, Finish, GlobalOpts};

pub fn run(command: Command, opts: &GlobalOpts) -> Result<Finish> {
    let started = Instant::now();
    let overrides = opts.overrides();
    match command {
        Command::Gen { class, seed, out } => {
            cmd_gen(class, seed, &out, &overrides, started, opts.timing)
        }
        Command::Coverage { scenario, out } => {
            cmd_coverage(&scenario, &out, &overrides, started, opts.timing)
        }
        Command::Optimize { scenario, out } => {
            let cfg = BenchmarkConfig::default();
            cmd_plan(
                "optimize",
                Scheme::Proposed,
                cfg,
                &scenario,
                &out,
                &overrides,
                started,
                opts.timing,
            )
        }
        Command::Benchmark {
            scheme,
            scenario,
            out,
            rss_threshold,
            min_diversity,
        } => {
            let cfg = BenchmarkConfig {
                rss_threshold,
                min_diversity,
            };
            cmd_plan(
                "benchmark",
                scheme,
                cfg,
                &scenario,
                &out,
                &overrides,
                started,
                opts.timing,
            )
        }
        Command::Evaluate {
            plan,
            scenario,
            trials,
            seed,
            center,
            out,
        } => cmd_evaluate(
            &EvalArgs {
                plan,
                scenario,
                trials,
                seed,
                center,
                out,
            },
            &overrides,
            started,
            opts.timing,
        ),
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    // The load error already spells out its cause; flatten it so the
    // message is not repeated by the error chain.
    Scenario::load(path, overrides).map_err(|e| anyhow::anyhow!("{e}"))
}

fn cmd_gen(
    class: SizeClass,
    seed: u64,
    out: &Path,
    overrides: &Overrides,
    started: Instant,
    timing: bool,
) -> Result<Finish> {
    let mut doc = generate(class, seed);
    overrides.apply(&mut doc);
    let scenario =
        Scenario::from_doc(doc.clone()).context("generated scenario failed validation")?;
    info!(
        "{} scenario: {} sites, {} grids",
        class.name(),
        scenario.n_sites(),
        scenario.n_grids()
    );
    let mut m = RunManifest::new("gen", overrides);
    m.class = Some(class.name().to_string());
    m.seed = Some(seed);
    m.finish(started, timing);
    doc.manifest = Some(serde_json::to_value(&m)?);
    write_json(out, &doc)?;
    Ok(Finish::Done)
}

fn cmd_coverage(
    scenario_path: &Path,
    out: &Path,
    overrides: &Overrides,
    started: Instant,
    timing: bool,
) -> Result<Finish> {
    let scenario = load_scenario(scenario_path, overrides)?;
    let prep = prepare(&scenario)?;
    let cov = &prep.coverage;
    let mut m = RunManifest::new("coverage", overrides);
    m.scenario = Some(path_str(scenario_path));
    m.finish(started, timing);

    let phi = prep.phi.to_string();
    let mut csv = m.csv_comment(&[("phi", &phi)]);
    csv.push_str("site_id,r_max,mean_load,n_grids\n");
    for (b, site) in scenario.sites.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{}",
            site.id,
            cov.r_max_per_site[b],
            cov.mean_load_per_site[b],
            cov.lambda.row(b).iter().filter(|&&v| v).count()
        )?;
    }
    write_file(out, &csv)?;
    Ok(Finish::Done)
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan(
    command: &str,
    scheme: Scheme,
    cfg: BenchmarkConfig,
    scenario_path: &Path,
    out: &Path,
    overrides: &Overrides,
    started: Instant,
    timing: bool,
) -> Result<Finish> {
    cfg.validate()?;
    let scenario = load_scenario(scenario_path, overrides)?;
    info!(
        "{}: {} sites, {} grids",
        scenario_path.display(),
        scenario.n_sites(),
        scenario.n_grids()
    );
    let prep = prepare(&scenario)?;
    let outcome = solve_scheme(scheme, &scenario, &prep, &cfg)?;

    let mut m = RunManifest::new(command, overrides);
    m.scenario = Some(path_str(scenario_path));
    m.scheme = Some(scheme.name().to_string());
    m.finish(started, timing);
    let plan = PlanFile::from_outcome(m, &outcome, &scenario);
    write_json(out, &plan)?;
    match outcome {
        Outcome::Deployed(d) => {
            info!("{scheme}: {} sites, cost {}", d.n_deployed(), d.cost);
            Ok(Finish::Done)
        }
        Outcome::Infeasible(r) => {
            eprintln!(
                "{scheme}: infeasible ({}); offending grids: {:?}",
                r.reason,
                plan.grids.as_deref().unwrap_or(&[])
            );
            Ok(Finish::Infeasible)
        }
    }
}

struct EvalArgs {
    plan: PathBuf,
    scenario: PathBuf,
    trials: usize,
    seed: u64,
    center: bool,
    out: PathBuf,
}

#[derive(Serialize)]
struct SiteRecord {
    site: usize,
    estimate: f64,
    std_error: f64,
    closed_form: f64,
    expected_load: f64,
    mean_attempting: f64,
}

#[derive(Serialize)]
struct GridOutage {
    grid: usize,
    zeta: f64,
    ue_count: u64,
    estimate: Option<f64>,
    std_error: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    manifest: RunManifest,
    scheme: String,
    n_trials: usize,
    ue_placement: &'static str,
    served_links: usize,
    bound_violations: usize,
    access_blockage: Vec<SiteRecord>,
    ue_outage: Vec<GridOutage>,
    diversity_histogram: Vec<usize>,
    /// CDF tables written next to the report, by metric.
    cdf_files: Vec<(String, String)>,
}

/// Later values win field by field.
fn layer(base: &Overrides, top: &Overrides) -> Overrides {
    Overrides {
        zeta: top.zeta.or(base.zeta),
        gamma: top.gamma.or(base.gamma),
        n_rf: top.n_rf.or(base.n_rf),
        r_max: top.r_max.or(base.r_max),
    }
}

fn cdf_path(out: &Path, metric: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}_{metric}_cdf.csv"))
}

fn cmd_evaluate(
    args: &EvalArgs,
    cli_overrides: &Overrides,
    started: Instant,
    timing: bool,
) -> Result<Finish> {
    let text = std::fs::read_to_string(&args.plan)
        .with_context(|| format!("cannot read plan {}", args.plan.display()))?;
    let plan: PlanFile =
        serde_json::from_str(&text).with_context(|| format!("plan {}", args.plan.display()))?;
    // The plan was computed under its own overrides; evaluate under the same
    // parameters unless told otherwise.
    let overrides = layer(&plan.manifest.overrides, cli_overrides);
    let scenario = load_scenario(&args.scenario, &overrides)?;
    let (y, assoc) = plan
        .decisions(&scenario)
        .with_context(|| format!("plan {}", args.plan.display()))?;

    let links = build_link_table(&scenario)?;
    let d = make_deployment(
        &plan.scheme,
        y,
        &assoc,
        &links,
        &scenario.grids,
        &site_costs(&scenario),
        &scenario.radio,
        None,
    );
    let cfg = McConfig {
        n_trials: args.trials,
        seed: args.seed,
        use_grid_center: args.center,
        ..McConfig::for_scenario(&scenario)
    };
    let report = evaluate(&d, &scenario, &links, &cfg)?;
    info!(
        "{} trials: {} served links, {} bound violations",
        report.n_trials,
        report.sinr_samples.len(),
        report.bound_violations
    );

    let mut m = RunManifest::new("evaluate", &overrides);
    m.scenario = Some(path_str(&args.scenario));
    m.plan = Some(path_str(&args.plan));
    m.scheme = Some(plan.scheme.clone());
    m.seed = Some(args.seed);
    m.trials = Some(args.trials);

    let tables = cdf_tables(&report);
    let mut cdf_files = Vec::new();
    for (metric, _) in &tables {
        let path = cdf_path(&args.out, metric);
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        cdf_files.push((metric.to_string(), name));
    }
    m.finish(started, timing);
    for (metric, values) in &tables {
        let mut csv = m.csv_comment(&[("metric", metric)]);
        csv.push_str("value,cdf\n");
        for (v, c) in empirical_cdf(values) {
            writeln!(csv, "{v},{c}")?;
        }
        write_file(&cdf_path(&args.out, metric), &csv)?;
    }

    let out = Report {
        manifest: m,
        scheme: plan.scheme.clone(),
        n_trials: report.n_trials,
        ue_placement: if args.center {
            "grid_center"
        } else {
            "uniform"
        },
        served_links: report.sinr_samples.len(),
        bound_violations: report.bound_violations,
        access_blockage: report
            .access_block_est
            .iter()
            .map(|a| SiteRecord {
                site: scenario.sites[a.site].id,
                estimate: a.estimate,
                std_error: a.std_error,
                closed_form: a.closed_form,
                expected_load: a.expected_load,
                mean_attempting: a.mean_attempting,
            })
            .collect(),
        ue_outage: scenario
            .grids
            .iter()
            .enumerate()
            .map(|(g, cell)| GridOutage {
                grid: cell.id,
                zeta: cell.outage_tolerance,
                ue_count: report.ue_counts[g],
                estimate: report.ue_outage_est[g],
                std_error: report.outage_std_error(g, cell.outage_tolerance),
            })
            .collect(),
        diversity_histogram: report.diversity_hist.clone(),
        cdf_files,
    };
    write_json(&args.out, &out)?;
    Ok(Finish::Done)
}

/// Metric name and samples of each CDF table. SINR values are in dB.
fn cdf_tables(r: &McReport) -> Vec<(&'static str, Vec<f64>)> {
    let db = |v: &[f64]| v.iter().map(|x| 10.0 * x.log10()).collect();
    vec![
        ("sinr_db", db(&r.sinr_samples)),
        ("sinr_lb_db", db(&r.sinr_lb_samples)),
        (
            "access_blockage",
            r.access_block_est.iter().map(|a| a.estimate).collect(),
        ),
        ("ue_outage", r.defined_outages()),
    ]
}
