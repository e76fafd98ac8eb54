//! Per-component analysis: segment the weekly series at split events, test
//! whether the split shifted either variable, then correlate contribution
//! degree with TDD per segment (or over the full series) and render the
//! three report tables.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;
use crate::metrics::{Observation, WeeklySeries};
use crate::model::{ComponentSpec, Epoch, ModelError, WeekIndex};
use crate::stats::{
    classify_magnitude, describe, kendall_tau_b, mann_whitney_u, shapiro_wilk, DescriptiveStats,
    Magnitude, MwuMethod, Significance, SwResult,
};

pub const LABEL_BEFORE: &str = "before";
pub const LABEL_AFTER: &str = "after";
pub const LABEL_FULL: &str = "full";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("component {0} has no observations")]
    EmptySeries(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("nothing to report")]
    NoAnalyses,
    #[error("unknown report format {0:?} (expected json, csv or markdown)")]
    UnknownFormat(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A contiguous slice of a weekly series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub observations: Vec<Observation>,
}

impl Segment {
    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.observations
            .iter()
            .map(|o| o.contribution.degree)
            .collect()
    }

    pub fn tdds(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.tdd.tdd).collect()
    }
}

/// Splits at `split_week`: weeks before it, then weeks from it on.
pub fn segment_series(series: &WeeklySeries, split_week: WeekIndex) -> (Segment, Segment) {
    let cut = series.observations.partition_point(|o| o.week < split_week);
    let (before, after) = series.observations.split_at(cut);
    (
        Segment {
            label: LABEL_BEFORE.into(),
            observations: before.to_vec(),
        },
        Segment {
            label: LABEL_AFTER.into(),
            observations: after.to_vec(),
        },
    )
}

/// Segment labels for `k` split weeks: `full` for none, `before`/`after`
/// for one, `period-1` ... `period-{k+1}` otherwise.
pub fn segment_labels(splits: usize) -> Vec<String> {
    match splits {
        0 => vec![LABEL_FULL.into()],
        1 => vec![LABEL_BEFORE.into(), LABEL_AFTER.into()],
        k => (1..=k + 1).map(|i| format!("period-{i}")).collect(),
    }
}

/// Cuts `series` at every split week (sorted, duplicates ignored) into
/// `k + 1` segments.
pub fn segment_at(series: &WeeklySeries, splits: &[WeekIndex]) -> Vec<Segment> {
    let mut splits = splits.to_vec();
    splits.sort();
    splits.dedup();
    let labels = segment_labels(splits.len());
    let mut rest = series.observations.as_slice();
    let mut segments = Vec::with_capacity(labels.len());
    for (i, label) in labels.into_iter().enumerate() {
        let cut = match splits.get(i) {
            Some(split) => rest.partition_point(|o| o.week < *split),
            None => rest.len(),
        };
        let (head, tail) = rest.split_at(cut);
        segments.push(Segment {
            label,
            observations: head.to_vec(),
        });
        rest = tail;
    }
    segments
}

/// Label of the segment containing `week`.
pub fn label_of(week: WeekIndex, splits: &[WeekIndex]) -> String {
    let mut splits = splits.to_vec();
    splits.sort();
    splits.dedup();
    let idx = splits.partition_point(|s| *s <= week);
    segment_labels(splits.len()).swap_remove(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub epoch: Epoch,
    /// Significance level of the split test that triggers segmentation.
    pub alpha: f64,
    /// Smallest segment that gets a split test or a correlation.
    pub min_n: usize,
    /// Correlate per segment regardless of the split test.
    pub force_segmentation: bool,
    /// Correlate over the full series regardless of the split test.
    pub no_segmentation: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            epoch: Epoch::default(),
            alpha: 0.05,
            min_n: 5,
            force_segmentation: false,
            no_segmentation: false,
        }
    }
}

/// One value per analysed variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarPair<T> {
    pub degree: T,
    pub tdd: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallReport {
    pub tau: f64,
    pub p: f64,
    pub magnitude: Magnitude,
    pub n: usize,
    pub significance: Significance,
    pub concordant: u64,
    pub discordant: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub label: String,
    pub n: usize,
    pub first_week: Option<WeekIndex>,
    pub last_week: Option<WeekIndex>,
    pub descriptive: VarPair<Option<DescriptiveStats>>,
    pub sw: VarPair<Option<SwResult>>,
    pub kendall: Option<KendallReport>,
    /// Why no correlation is reported for this segment.
    pub skipped: Option<String>,
    /// Fewer observations than the configured minimum.
    pub below_min_n: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MwuEntry {
    pub u: f64,
    pub p: f64,
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub method: MwuMethod,
}

/// Split test between two adjacent segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwuReport {
    pub first: String,
    pub second: String,
    pub degree: Option<MwuEntry>,
    pub tdd: Option<MwuEntry>,
    pub skipped: Option<String>,
}

impl MwuReport {
    fn significant(&self, alpha: f64) -> bool {
        [self.degree, self.tdd]
            .iter()
            .flatten()
            .any(|m| m.p < alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedAnalysis {
    pub component_id: String,
    pub split_weeks: Vec<WeekIndex>,
    pub segments: Vec<SegmentReport>,
    /// Split test across the first split.
    pub mwu: Option<MwuReport>,
    /// Every adjacent pair, when there is more than one split.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mwu_adjacent: Vec<MwuReport>,
    pub segmentation_applied: bool,
    pub skip_reasons: Vec<String>,
}

fn report_segment(
    segment: &Segment,
    min_n: usize,
    skip_reasons: &mut Vec<String>,
) -> SegmentReport {
    let label = &segment.label;
    let mut stats = |values: Vec<f64>, name: &str| {
        let descriptive = describe(&values).ok();
        let sw = match shapiro_wilk(&values) {
            Ok(sw) => Some(sw),
            Err(err) if !values.is_empty() => {
                skip_reasons.push(format!("{label}: no Shapiro-Wilk for {name}: {err}"));
                None
            }
            Err(_) => None,
        };
        (descriptive, sw)
    };
    let (d_desc, d_sw) = stats(segment.degrees(), "degree");
    let (t_desc, t_sw) = stats(segment.tdds(), "tdd");
    SegmentReport {
        label: label.clone(),
        n: segment.n(),
        first_week: segment.observations.first().map(|o| o.week),
        last_week: segment.observations.last().map(|o| o.week),
        descriptive: VarPair {
            degree: d_desc,
            tdd: t_desc,
        },
        sw: VarPair {
            degree: d_sw,
            tdd: t_sw,
        },
        kendall: None,
        skipped: None,
        below_min_n: segment.n() < min_n,
    }
}

fn split_test(first: &Segment, second: &Segment, min_n: usize) -> MwuReport {
    let mut report = MwuReport {
        first: first.label.clone(),
        second: second.label.clone(),
        degree: None,
        tdd: None,
        skipped: None,
    };
    if let Some(small) = [first, second].into_iter().find(|s| s.n() < min_n) {
        report.skipped = Some(format!(
            "{} has {} observations, fewer than {min_n}",
            small.label,
            small.n()
        ));
        return report;
    }
    let test = |a: Vec<f64>, b: Vec<f64>| {
        mann_whitney_u(&a, &b).ok().map(|r| MwuEntry {
            u: r.u_statistic,
            p: r.p_value,
            n: r.n1 + r.n2,
            n1: r.n1,
            n2: r.n2,
            method: r.method,
        })
    };
    report.degree = test(first.degrees(), second.degrees());
    report.tdd = test(first.tdds(), second.tdds());
    report
}

fn correlate(
    report: &mut SegmentReport,
    segment: &Segment,
    min_n: usize,
    skip_reasons: &mut Vec<String>,
) {
    let reason = if segment.n() == 0 {
        Some("no observations".to_string())
    } else if segment.n() < min_n {
        Some(format!("{} observations, fewer than {min_n}", segment.n()))
    } else {
        match kendall_tau_b(&segment.degrees(), &segment.tdds()) {
            Ok(k) => {
                report.kendall = Some(KendallReport {
                    tau: k.tau_b,
                    p: k.p_value,
                    magnitude: classify_magnitude(k.tau_b),
                    n: k.n,
                    significance: Significance::of(k.p_value),
                    concordant: k.concordant,
                    discordant: k.discordant,
                });
                None
            }
            Err(err) => Some(err.to_string()),
        }
    };
    if let Some(reason) = reason {
        skip_reasons.push(format!("{}: no correlation: {reason}", segment.label));
        report.skipped = Some(reason);
    }
}

/// Runs the analysis workflow on one component.
///
/// Segments whose split test cannot run (too few observations on one side)
/// also force per-segment correlation, so a component that only exists after
/// a split is analysed on that segment alone.
pub fn run_analysis(
    series: &WeeklySeries,
    component: &ComponentSpec,
    config: &AnalysisConfig,
) -> Result<SegmentedAnalysis, PipelineError> {
    if series.is_empty() {
        return Err(PipelineError::EmptySeries(component.component_id.clone()));
    }
    let splits = component.split_weeks(config.epoch)?;
    let segments = segment_at(series, &splits);
    let mut skip_reasons = Vec::new();
    let mut reports: Vec<SegmentReport> = segments
        .iter()
        .map(|s| report_segment(s, config.min_n, &mut skip_reasons))
        .collect();

    let tests: Vec<MwuReport> = segments
        .windows(2)
        .map(|w| split_test(&w[0], &w[1], config.min_n))
        .collect();
    for test in &tests {
        if let Some(reason) = &test.skipped {
            skip_reasons.push(format!(
                "{} vs {}: no split test: {reason}",
                test.first, test.second
            ));
        }
    }

    let segmentation_applied = !splits.is_empty()
        && !config.no_segmentation
        && (config.force_segmentation
            || tests
                .iter()
                .any(|t| t.skipped.is_some() || t.significant(config.alpha)));

    if segmentation_applied {
        for (report, segment) in reports.iter_mut().zip(&segments) {
            correlate(report, segment, config.min_n, &mut skip_reasons);
        }
    } else {
        let full = Segment {
            label: LABEL_FULL.into(),
            observations: series.observations.clone(),
        };
        if splits.is_empty() {
            reports.clear();
        }
        let mut report = report_segment(&full, config.min_n, &mut skip_reasons);
        correlate(&mut report, &full, config.min_n, &mut skip_reasons);
        reports.push(report);
    }

    Ok(SegmentedAnalysis {
        component_id: component.component_id.clone(),
        split_weeks: splits,
        segments: reports,
        mwu: tests.first().cloned(),
        mwu_adjacent: if tests.len() > 1 { tests } else { Vec::new() },
        segmentation_applied,
        skip_reasons,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(PipelineError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "markdown",
        })
    }
}

/// A rendered output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub name: String,
    pub contents: String,
}

/// Three decimals, or `<0.001` below that.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        fixed(p, 3)
    }
}

fn fixed(value: f64, decimals: usize) -> String {
    let text = format!("{value:.decimals$}");
    // "-0.000" reads as a sign error.
    if text
        .trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        text.trim_start_matches('-').to_string()
    } else {
        text
    }
}

/// `§` below 0.01, `†` below 0.05.
pub fn significance_marker(p: f64) -> &'static str {
    let s = Significance::of(p);
    if s.at_01 {
        "§"
    } else if s.at_05 {
        "†"
    } else {
        ""
    }
}

pub fn render_report(
    analyses: &[SegmentedAnalysis],
    format: Format,
) -> Result<Vec<Document>, PipelineError> {
    if analyses.is_empty() {
        return Err(PipelineError::NoAnalyses);
    }
    Ok(match format {
        Format::Json => {
            let mut contents = serde_json::to_string_pretty(analyses)?;
            contents.push('\n');
            vec![Document {
                name: "report.json".into(),
                contents,
            }]
        }
        Format::Csv => render_csv(analyses),
        Format::Markdown => vec![Document {
            name: "report.md".into(),
            contents: render_markdown(analyses),
        }],
    })
}

/// Parses a JSON report written by [`render_report`].
pub fn parse_report_json(text: &str) -> Result<Vec<SegmentedAnalysis>, PipelineError> {
    Ok(serde_json::from_str(text)?)
}

fn opt_fixed(value: Option<f64>, decimals: usize) -> String {
    value.map_or_else(|| "-".into(), |v| fixed(v, decimals))
}

/// N, Mean, STD, Min, Max cells; degree extremes get one decimal.
fn descriptive_cells(d: Option<&DescriptiveStats>, extreme_decimals: usize) -> [String; 4] {
    match d {
        Some(d) => [
            fixed(d.mean, 3),
            opt_fixed(d.std, 3),
            fixed(d.min, extreme_decimals),
            fixed(d.max, extreme_decimals),
        ],
        None => ["-".into(), "-".into(), "-".into(), "-".into()],
    }
}

fn mwu_pairs(a: &SegmentedAnalysis) -> Vec<&MwuReport> {
    if a.mwu_adjacent.is_empty() {
        a.mwu.iter().collect()
    } else {
        a.mwu_adjacent.iter().collect()
    }
}

fn render_csv(analyses: &[SegmentedAnalysis]) -> Vec<Document> {
    let mut descriptive =
        String::from("component_id,segment,variable,n,mean,std,min,max,sw_w,sw_p,note\n");
    let mut mwu =
        String::from("component_id,first,second,variable,u,p,n1,n2,method,significant,note\n");
    let mut kendall = String::from("component_id,segment,n,tau,p,magnitude,marker,note\n");
    for a in analyses {
        let id = csv_field(&a.component_id);
        for s in &a.segments {
            let variables = [
                (
                    "degree",
                    s.descriptive.degree.as_ref(),
                    s.sw.degree.as_ref(),
                    1,
                ),
                ("tdd", s.descriptive.tdd.as_ref(), s.sw.tdd.as_ref(), 3),
            ];
            for (name, d, sw, decimals) in variables {
                let [mean, std, min, max] = descriptive_cells(d, decimals);
                let note = if s.n == 0 { "no observations" } else { "" };
                let _ = writeln!(
                    descriptive,
                    "{id},{},{name},{},{mean},{std},{min},{max},{},{},{note}",
                    csv_field(&s.label),
                    s.n,
                    opt_fixed(sw.map(|r| r.w_statistic), 3),
                    sw.map_or_else(|| "-".into(), |r| format_p(r.p_value)),
                );
            }
            match (&s.kendall, &s.skipped) {
                (Some(k), _) => {
                    let _ = writeln!(
                        kendall,
                        "{id},{},{},{},{},{},{},",
                        csv_field(&s.label),
                        k.n,
                        fixed(k.tau, 3),
                        format_p(k.p),
                        k.magnitude,
                        significance_marker(k.p)
                    );
                }
                (None, Some(reason)) => {
                    let _ = writeln!(
                        kendall,
                        "{id},{},{},-,-,-,*,{}",
                        csv_field(&s.label),
                        s.n,
                        csv_field(reason)
                    );
                }
                (None, None) => {}
            }
        }
        for pair in mwu_pairs(a) {
            for (name, entry) in [("degree", pair.degree), ("tdd", pair.tdd)] {
                let (first, second) = (csv_field(&pair.first), csv_field(&pair.second));
                match entry {
                    Some(m) => {
                        let method = match m.method {
                            MwuMethod::Exact => "exact",
                            MwuMethod::NormalApprox => "normal-approx",
                        };
                        let _ = writeln!(
                            mwu,
                            "{id},{first},{second},{name},{},{},{},{},{method},{},",
                            fixed(m.u, 1),
                            format_p(m.p),
                            m.n1,
                            m.n2,
                            Significance::of(m.p).at_05
                        );
                    }
                    None => {
                        let note = pair.skipped.as_deref().unwrap_or("test undefined");
                        let _ = writeln!(
                            mwu,
                            "{id},{first},{second},{name},-,-,-,-,-,false,{}",
                            csv_field(note)
                        );
                    }
                }
            }
        }
    }
    vec![
        Document {
            name: "descriptive.csv".into(),
            contents: descriptive,
        },
        Document {
            name: "mwu.csv".into(),
            contents: mwu,
        },
        Document {
            name: "kendall.csv".into(),
            contents: kendall,
        },
    ]
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn md_cell(value: &str) -> String {
    value.replace('|', "\\|")
}

fn render_markdown(analyses: &[SegmentedAnalysis]) -> String {
    let mut out = String::from("# Contribution degree and TDD report\n\n");
    let mut dagger = false;

    out.push_str("## Descriptive statistics\n\n");
    out.push_str("| Component | Segment | N | Degree mean | Degree STD | Degree min | Degree max | TDD mean | TDD STD | TDD min | TDD max |\n");
    out.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for a in analyses {
        for s in &a.segments {
            let skipped = s.below_min_n;
            let (degree, tdd) = if skipped {
                dagger = true;
                (descriptive_cells(None, 1), descriptive_cells(None, 3))
            } else {
                (
                    descriptive_cells(s.descriptive.degree.as_ref(), 1),
                    descriptive_cells(s.descriptive.tdd.as_ref(), 3),
                )
            };
            let n = if s.n == 0 {
                "-".to_string()
            } else {
                s.n.to_string()
            };
            let _ = writeln!(
                out,
                "| {}{} | {} | {n} | {} | {} |",
                md_cell(&a.component_id),
                if skipped { "†" } else { "" },
                s.label,
                degree.join(" | "),
                tdd.join(" | ")
            );
        }
    }
    if dagger {
        out.push_str(
            "\n† No descriptive statistics due to lack or limited number of observations.\n",
        );
    }

    out.push_str("\n## Mann-Whitney U test across team splits\n\n");
    out.push_str("| Component | Segments | Degree U | Degree p | TDD U | TDD p |\n");
    out.push_str("|---|---|---:|---:|---:|---:|\n");
    let mut mwu_dagger = false;
    let mut any_mwu = false;
    for a in analyses {
        for pair in mwu_pairs(a) {
            any_mwu = true;
            let cell = |entry: Option<MwuEntry>| match entry {
                Some(m) => {
                    let p = format_p(m.p);
                    let p = if m.p < 0.05 { format!("**{p}**") } else { p };
                    [fixed(m.u, 1), p]
                }
                None => ["-".into(), "-".into()],
            };
            let skipped = pair.skipped.is_some();
            mwu_dagger |= skipped;
            let _ = writeln!(
                out,
                "| {}{} | {} vs {} | {} | {} |",
                md_cell(&a.component_id),
                if skipped { "†" } else { "" },
                pair.first,
                pair.second,
                cell(pair.degree).join(" | "),
                cell(pair.tdd).join(" | ")
            );
        }
    }
    if !any_mwu {
        out.push_str("| - | no split events | - | - | - | - |\n");
    }
    if mwu_dagger {
        out.push_str("\n† No statistical test due to lack or limited number of observations.\n");
    }
    out.push_str("\nBold: significant at the 0.05 level (2-tailed).\n");

    out.push_str("\n## Kendall's tau-b between contribution degree and TDD\n\n");
    out.push_str("| Component | Segment | p | tau | Magnitude | N |\n");
    out.push_str("|---|---|---:|---:|---|---:|\n");
    let mut star = false;
    for a in analyses {
        for s in &a.segments {
            match (&s.kendall, &s.skipped) {
                (Some(k), _) => {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} {} | {} | {} |",
                        md_cell(&a.component_id),
                        s.label,
                        format_p(k.p),
                        fixed(k.tau, 3),
                        significance_marker(k.p),
                        k.magnitude,
                        k.n
                    );
                }
                (None, Some(_)) => {
                    star = true;
                    let n = if s.n == 0 {
                        "-".to_string()
                    } else {
                        s.n.to_string()
                    };
                    let _ = writeln!(
                        out,
                        "| {}* | {} | - | - | - | {n} |",
                        md_cell(&a.component_id),
                        s.label
                    );
                }
                (None, None) => {}
            }
        }
    }
    out.push_str("\n† Correlation is significant at the 0.05 level (2-tailed).\n");
    out.push_str("§ Correlation is significant at the 0.01 level (2-tailed).\n");
    if star {
        out.push_str("* No statistical test due to lack or limited number of observations.\n");
    }
    out
}

/// Per-component output directory; characters outside `[A-Za-z0-9._-]`
/// become `_`.
pub fn component_dir(out_dir: &Path, component_id: &str) -> PathBuf {
    let name: String = component_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    out_dir.join(name)
}

/// Writes `<out_dir>/<component>/timeseries.csv` (`week,degree,tdd,segment`)
/// and `scatter.csv` (`degree,tdd,segment`), one row per observation.
pub fn export_plot_data(
    series: &WeeklySeries,
    analysis: &SegmentedAnalysis,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = component_dir(out_dir, &series.component_id);
    std::fs::create_dir_all(&dir).map_err(|source| PipelineError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut timeseries = String::from("week,degree,tdd,segment\n");
    let mut scatter = String::from("degree,tdd,segment\n");
    for o in &series.observations {
        let segment = label_of(o.week, &analysis.split_weeks);
        let _ = writeln!(
            timeseries,
            "{},{},{},{segment}",
            o.week, o.contribution.degree, o.tdd.tdd
        );
        let _ = writeln!(scatter, "{},{},{segment}", o.contribution.degree, o.tdd.tdd);
    }
    let mut written = Vec::new();
    for (name, contents) in [("timeseries.csv", timeseries), ("scatter.csv", scatter)] {
        let path = dir.join(name);
        write_atomic(&path, contents.as_bytes()).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
