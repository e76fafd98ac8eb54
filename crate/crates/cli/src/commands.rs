use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;

use ocam::ingest::{ingest_inputs, EventStore};
use ocam::metrics::{build_weekly_series, write_metrics_csv};
use ocam::model::{ComponentSpec, Epoch};
use ocam::pipeline::{
    component_dir, export_plot_data, format_p, parse_report_json, render_report, run_analysis,
    Format, SegmentedAnalysis,
};
use ocam::synth::{format_selftest, generate_scenario, run_selftest, Scenario};
use ocam::write_atomic;

use crate::config::RunConfig;

/// Strict-mode data rejection.
const EXIT_REJECTED: u8 = 2;

pub fn load_config(
    path: &Path,
    epoch: Option<NaiveDate>,
    store: Option<PathBuf>,
) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(date) = epoch {
        config.epoch = Epoch::new(date)?;
    }
    if let Some(store) = store {
        config.store_dir = Some(store);
    }
    config.validate()?;
    Ok(config)
}

pub fn ingest(config: &RunConfig) -> Result<ExitCode> {
    let (store, diag) = ingest_inputs(&config.inputs, &config.components, config.epoch)?;
    for message in &diag.warnings {
        warn!("{message}");
    }
    println!(
        "records read: {}, rejected: {}, unknown identities: {}, warnings: {}",
        diag.records_read,
        diag.records_rejected,
        diag.unknown_identities.len(),
        diag.warnings.len()
    );
    println!(
        "commits: {}, pull requests: {}, tickets: {}, td issues: {}, size rows: {}",
        store.commits.len(),
        store.pull_requests.len(),
        store.tickets.len(),
        store.td_issues.len(),
        store.sizes.len()
    );
    if config.strict && diag.records_rejected > 0 {
        eprintln!(
            "strict mode: {} record(s) rejected, store not written",
            diag.records_rejected
        );
        return Ok(ExitCode::from(EXIT_REJECTED));
    }
    let dir = config.store_dir();
    store.save(dir)?;
    let diagnostics = serde_json::to_vec_pretty(&diag)?;
    write_atomic(&dir.join("diagnostics.json"), &diagnostics)
        .with_context(|| format!("cannot write diagnostics to {}", dir.display()))?;
    println!("store written to {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

enum Outcome {
    Analysed(Box<SegmentedAnalysis>),
    Skipped(String),
}

fn analyse_component(
    component: &ComponentSpec,
    store: &EventStore,
    config: &RunConfig,
) -> Result<Outcome> {
    let id = &component.component_id;
    let build = build_weekly_series(component, store, &config.metrics())
        .with_context(|| format!("component {id}"))?;
    for message in &build.warnings {
        warn!("{message}");
    }
    if build.active_weeks.is_empty() {
        return Ok(Outcome::Skipped("no active weeks".into()));
    }
    if build.series.is_empty() {
        return Ok(Outcome::Skipped(format!(
            "{} active weeks but none with both constructs (missing sizes?)",
            build.active_weeks.len()
        )));
    }
    info!("{id}: {} observations", build.series.len());
    let analysis = run_analysis(&build.series, component, &config.analysis())?;
    let out = config.output_dir();
    export_plot_data(&build.series, &analysis, out)?;
    let mut metrics = Vec::new();
    write_metrics_csv(&mut metrics, &build.series)?;
    let path = component_dir(out, id).join("metrics.csv");
    write_atomic(&path, &metrics).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(Outcome::Analysed(Box::new(analysis)))
}

fn summary_line(a: &SegmentedAnalysis) -> String {
    let mut line = format!("{}: {} segment(s)", a.component_id, a.segments.len());
    if a.segmentation_applied {
        line.push_str(", segmented");
    }
    for s in &a.segments {
        match &s.kendall {
            Some(k) => {
                let _ = write!(
                    line,
                    "; {} n={} tau={:.3} p={} ({})",
                    s.label,
                    k.n,
                    k.tau,
                    format_p(k.p),
                    k.magnitude
                );
            }
            None => match &s.skipped {
                Some(reason) => {
                    let _ = write!(line, "; {} n={} skipped: {reason}", s.label, s.n);
                }
                None => {
                    let _ = write!(line, "; {} n={}", s.label, s.n);
                }
            },
        }
    }
    line
}

fn write_documents(
    analyses: &[SegmentedAnalysis],
    format: Format,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut paths = Vec::new();
    for doc in render_report(analyses, format)? {
        let path = dir.join(&doc.name);
        write_atomic(&path, doc.contents.as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn analyze(config: &RunConfig, jobs: Option<usize>) -> Result<ExitCode> {
    let store = EventStore::load(config.store_dir()).with_context(|| {
        format!(
            "cannot load event store {} (run `ocam ingest` first)",
            config.store_dir().display()
        )
    })?;
    let out = config.output_dir();
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = pool.build()?;
    let outcomes: Vec<Result<Outcome>> = pool.install(|| {
        config
            .components
            .par_iter()
            .map(|component| analyse_component(component, &store, config))
            .collect()
    });

    let mut analyses = Vec::new();
    let mut skipped = Vec::new();
    for (component, outcome) in config.components.iter().zip(outcomes) {
        match outcome? {
            Outcome::Analysed(a) => analyses.push(*a),
            Outcome::Skipped(reason) => {
                skipped.push(format!("{}: {reason}", component.component_id))
            }
        }
    }
    for a in &analyses {
        println!("{}", summary_line(a));
    }
    if !skipped.is_empty() {
        println!("skipped components:");
        for line in &skipped {
            println!("  {line}");
        }
    }
    if analyses.is_empty() {
        println!("no component could be analysed; no report written");
        return Ok(ExitCode::SUCCESS);
    }
    // report.json is always written; `ocam report` re-renders from it.
    write_documents(&analyses, Format::Json, out)?;
    let format = config.format.unwrap_or(Format::Json);
    if format != Format::Json {
        write_documents(&analyses, format, out)?;
    }
    println!("reports written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn report(input: &Path, format: Format, out: Option<&Path>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let analyses = parse_report_json(&text)
        .with_context(|| format!("invalid analysis file {}", input.display()))?;
    let dir = match out {
        Some(dir) => dir.to_path_buf(),
        None => input.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    for path in write_documents(&analyses, format, &dir)? {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn synth(scenario: &Path, out: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(scenario)
        .with_context(|| format!("cannot read {}", scenario.display()))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .with_context(|| format!("invalid scenario {}", scenario.display()))?;
    let fileset = generate_scenario(&scenario)?;
    fileset.write_to(out)?;
    println!("{} files written to {}", fileset.files.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn selftest(seed: u64, instances: usize) -> ExitCode {
    let checks = run_selftest(seed, instances);
    print!("{}", format_selftest(&checks));
    if checks.iter().all(|c| c.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
