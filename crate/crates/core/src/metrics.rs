//! Weekly constructs per component: the owning team's contribution degree
//! (mean of its commit, churn, pull-request and ticket shares) and technical
//! debt density (open remediation minutes per line of code).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::EventStore;
use crate::model::{
    week_number, AffiliationTimeline, CommitRecord, ComponentSpec, Epoch, ModelError,
    TdIssueRecord, WeekIndex, WorkItemRecord,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("component {component}: week {week} is active but has no events in any channel")]
    NoActivity { component: String, week: WeekIndex },
    #[error("weekly series for {0} is not strictly increasing in week")]
    UnorderedSeries(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "C")]
    Commits,
    #[serde(rename = "Ch")]
    Churn,
    #[serde(rename = "P")]
    PullRequests,
    #[serde(rename = "T")]
    Tickets,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Commits => "C",
            Measure::Churn => "Ch",
            Measure::PullRequests => "P",
            Measure::Tickets => "T",
        })
    }
}

/// The owning team's share (percent) of each activity channel in one week.
/// A channel with no activity at all is absent and left out of `degree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionBreakdown {
    pub component_id: String,
    pub week: WeekIndex,
    pub team_id: String,
    pub c_commits: Option<f64>,
    pub ch_churn: Option<f64>,
    pub p_prs: Option<f64>,
    pub t_tickets: Option<f64>,
    pub degree: f64,
    pub measures_present: BTreeSet<Measure>,
}

impl ContributionBreakdown {
    pub fn measure(&self, measure: Measure) -> Option<f64> {
        match measure {
            Measure::Commits => self.c_commits,
            Measure::Churn => self.ch_churn,
            Measure::PullRequests => self.p_prs,
            Measure::Tickets => self.t_tickets,
        }
    }
}

/// `team` share of the weighted events, or `None` when the total weight is 0.
fn share<'a>(
    events: impl IntoIterator<Item = (&'a str, &'a DateTime<Utc>, f64)>,
    team: &str,
    affiliation: &AffiliationTimeline,
) -> Option<f64> {
    let mut total = 0.0;
    let mut by_team = 0.0;
    for (author, at, weight) in events {
        total += weight;
        if affiliation.team_of(author, at) == team {
            by_team += weight;
        }
    }
    (total > 0.0).then(|| by_team / total * 100.0)
}

/// Events attributed to a single observation window.
#[derive(Debug, Clone, Copy, Default)]
pub struct WeekEvents<'a> {
    pub commits: &'a [&'a CommitRecord],
    pub pull_requests: &'a [&'a WorkItemRecord],
    pub tickets: &'a [&'a WorkItemRecord],
}

/// Computes the contribution breakdown of `owning_team`. Each event is
/// attributed to its author's team at the event timestamp.
///
/// Returns `Ok(None)` in strict mode when any channel is absent.
pub fn contribution_breakdown(
    component_id: &str,
    week: WeekIndex,
    owning_team: &str,
    events: WeekEvents<'_>,
    affiliation: &AffiliationTimeline,
    strict: bool,
) -> Result<Option<ContributionBreakdown>, MetricsError> {
    let c = share(
        events
            .commits
            .iter()
            .map(|c| (c.author.as_str(), &c.timestamp, 1.0)),
        owning_team,
        affiliation,
    );
    let ch = share(
        events
            .commits
            .iter()
            .map(|c| (c.author.as_str(), &c.timestamp, c.churn() as f64)),
        owning_team,
        affiliation,
    );
    let items = |list: &'_ [&'_ WorkItemRecord]| {
        share(
            list.iter()
                .map(|i| (i.creator.as_str(), &i.created_at, 1.0))
                .collect::<Vec<_>>(),
            owning_team,
            affiliation,
        )
    };
    let p = items(events.pull_requests);
    let t = items(events.tickets);

    let present: Vec<(Measure, f64)> = [
        (Measure::Commits, c),
        (Measure::Churn, ch),
        (Measure::PullRequests, p),
        (Measure::Tickets, t),
    ]
    .into_iter()
    .filter_map(|(m, v)| v.map(|v| (m, v)))
    .collect();
    if present.is_empty() {
        return Err(MetricsError::NoActivity {
            component: component_id.to_string(),
            week,
        });
    }
    if strict && present.len() < 4 {
        return Ok(None);
    }
    let degree = present.iter().map(|(_, v)| v).sum::<f64>() / present.len() as f64;
    Ok(Some(ContributionBreakdown {
        component_id: component_id.to_string(),
        week,
        team_id: owning_team.to_string(),
        c_commits: c,
        ch_churn: ch,
        p_prs: p,
        t_tickets: t,
        degree: degree.clamp(0.0, 100.0),
        measures_present: present.into_iter().map(|(m, _)| m).collect(),
    }))
}

/// Weeks with at least one commit that counts (merges only when
/// `include_merges`).
pub fn active_weeks<'a>(
    commits: impl IntoIterator<Item = &'a CommitRecord>,
    epoch: Epoch,
    include_merges: bool,
) -> Result<BTreeSet<WeekIndex>, MetricsError> {
    commits
        .into_iter()
        .filter(|c| include_merges || !c.is_merge)
        .map(|c| crate::model::week_of(&c.timestamp, epoch).map_err(MetricsError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TddPoint {
    pub component_id: String,
    pub week: WeekIndex,
    pub td_minutes: f64,
    pub loc: u64,
    /// Minutes of remediation per line of code.
    pub tdd: f64,
}

/// Exact running sum of floats (Shewchuk's partials); `value` is the
/// correctly rounded sum of everything added so far.
#[derive(Debug, Clone, Default)]
struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    fn add(&mut self, value: f64) {
        let mut x = value;
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    fn value(&self) -> f64 {
        let p = &self.partials;
        let Some(mut n) = p.len().checked_sub(1) else {
            return 0.0;
        };
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            let y = p[n - 1];
            n -= 1;
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        // Round half-even across the remaining partials.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Open technical debt (remediation minutes) at each requested week,
/// computed with one sweep over introduction/removal deltas. An issue counts
/// in the weeks `[week(introduced_at), week(removed_at))`.
pub fn td_stock<'a>(
    issues: impl IntoIterator<Item = &'a TdIssueRecord>,
    weeks: &BTreeSet<WeekIndex>,
    epoch: Epoch,
) -> Vec<(WeekIndex, f64)> {
    let mut deltas: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for issue in issues {
        let opened = week_number(&issue.introduced_at, epoch);
        let closed = issue.removed_at.map(|t| week_number(&t, epoch));
        if closed.is_some_and(|closed| closed <= opened) {
            continue;
        }
        deltas
            .entry(opened)
            .or_default()
            .push(issue.remediation_minutes);
        if let Some(closed) = closed {
            deltas
                .entry(closed)
                .or_default()
                .push(-issue.remediation_minutes);
        }
    }
    let mut stock = ExactSum::default();
    let mut pending = deltas.into_iter().peekable();
    let mut out = Vec::with_capacity(weeks.len());
    for &week in weeks {
        while let Some((_, changes)) = pending.next_if(|(w, _)| *w <= i64::from(week.get())) {
            for change in changes {
                stock.add(change);
            }
        }
        out.push((week, stock.value().max(0.0)));
    }
    out
}

/// TDD for each requested week. Weeks without a size snapshot are dropped
/// with a warning; a zero size is refused the same way.
pub fn tdd_series(
    component_id: &str,
    issues: &[&TdIssueRecord],
    sizes: &BTreeMap<WeekIndex, u64>,
    weeks: &BTreeSet<WeekIndex>,
    epoch: Epoch,
) -> (Vec<TddPoint>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut usable = BTreeSet::new();
    for week in weeks {
        match sizes.get(week) {
            None => warnings.push(format!(
                "{component_id}: no size snapshot for week {week}, week dropped"
            )),
            Some(0) => warnings.push(format!(
                "{component_id}: size is 0 at week {week}, density refused"
            )),
            Some(_) => {
                usable.insert(*week);
            }
        }
    }
    let points = td_stock(issues.iter().copied(), &usable, epoch)
        .into_iter()
        .map(|(week, td_minutes)| {
            let loc = sizes[&week];
            TddPoint {
                component_id: component_id.to_string(),
                week,
                td_minutes,
                loc,
                tdd: td_minutes / loc as f64,
            }
        })
        .collect();
    (points, warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub week: WeekIndex,
    pub contribution: ContributionBreakdown,
    pub tdd: TddPoint,
}

/// Aligned weekly observations of one component, active weeks only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklySeries {
    pub component_id: String,
    pub observations: Vec<Observation>,
}

impl WeeklySeries {
    pub fn new(
        component_id: impl Into<String>,
        observations: Vec<Observation>,
    ) -> Result<Self, MetricsError> {
        let component_id = component_id.into();
        if observations.windows(2).any(|w| w[0].week >= w[1].week) {
            return Err(MetricsError::UnorderedSeries(component_id));
        }
        Ok(Self {
            component_id,
            observations,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn weeks(&self) -> Vec<WeekIndex> {
        self.observations.iter().map(|o| o.week).collect()
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub epoch: Epoch,
    pub include_merges: bool,
    /// Number of weeks (ending at the observed week) whose events feed one
    /// contribution observation.
    pub window_weeks: u32,
    /// Drop weeks where any of the four channels had no activity.
    pub strict_measures: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            epoch: Epoch::default(),
            include_merges: false,
            window_weeks: 1,
            strict_measures: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBuild {
    pub series: WeeklySeries,
    pub active_weeks: BTreeSet<WeekIndex>,
    pub warnings: Vec<String>,
}

fn by_week<'a, T>(
    records: impl IntoIterator<Item = &'a T>,
    at: impl Fn(&T) -> &DateTime<Utc>,
    epoch: Epoch,
) -> BTreeMap<i64, Vec<&'a T>>
where
    T: 'a,
{
    let mut map: BTreeMap<i64, Vec<&T>> = BTreeMap::new();
    for record in records {
        map.entry(week_number(at(record), epoch))
            .or_default()
            .push(record);
    }
    map
}

fn window<'a, T>(index: &BTreeMap<i64, Vec<&'a T>>, week: WeekIndex, len: u32) -> Vec<&'a T> {
    let end = i64::from(week.get());
    let start = end - i64::from(len.max(1)) + 1;
    index
        .range(start..=end)
        .flat_map(|(_, v)| v.iter().copied())
        .collect()
}

/// Builds the aligned weekly series of `component` from a normalised store.
pub fn build_weekly_series(
    component: &ComponentSpec,
    store: &EventStore,
    config: &MetricsConfig,
) -> Result<SeriesBuild, MetricsError> {
    let id = component.component_id.as_str();
    let epoch = config.epoch;
    let mut warnings = Vec::new();

    let commits: Vec<&CommitRecord> = store
        .commits
        .iter()
        .filter(|c| c.component_id == id && (config.include_merges || !c.is_merge))
        .filter(|c| {
            let keep = c.timestamp >= WeekIndex::new(1).expect("1 is valid").start(epoch);
            if !keep {
                warnings.push(format!(
                    "{id}: commit {} precedes the epoch, ignored",
                    c.commit_hash
                ));
            }
            keep
        })
        .collect();
    let active = active_weeks(commits.iter().copied(), epoch, true)?;

    let commit_index = by_week(commits.iter().copied(), |c| &c.timestamp, epoch);
    let pr_index = by_week(
        store.pull_requests.iter().filter(|p| p.component_id == id),
        |p| &p.created_at,
        epoch,
    );
    let ticket_index = by_week(
        store.tickets.iter().filter(|t| t.component_id == id),
        |t| &t.created_at,
        epoch,
    );

    let mut contributions = BTreeMap::new();
    for &week in &active {
        let Some(owner) = component.owner_in_week(week, epoch) else {
            warnings.push(format!(
                "{id}: no owning team at the start of week {week}, week skipped"
            ));
            continue;
        };
        let week_commits = window(&commit_index, week, config.window_weeks);
        let week_prs = window(&pr_index, week, config.window_weeks);
        let week_tickets = window(&ticket_index, week, config.window_weeks);
        let events = WeekEvents {
            commits: &week_commits,
            pull_requests: &week_prs,
            tickets: &week_tickets,
        };
        match contribution_breakdown(
            id,
            week,
            owner,
            events,
            &store.affiliations,
            config.strict_measures,
        )? {
            Some(breakdown) => {
                contributions.insert(week, breakdown);
            }
            None => warnings.push(format!(
                "{id}: week {week} lacks some activity channel, skipped in strict mode"
            )),
        }
    }

    let sizes: BTreeMap<WeekIndex, u64> = store
        .sizes
        .iter()
        .filter(|s| s.component_id == id)
        .map(|s| (s.week, s.loc))
        .collect();
    let issues: Vec<&TdIssueRecord> = store
        .td_issues
        .iter()
        .filter(|i| i.component_id == id)
        .collect();
    let weeks: BTreeSet<WeekIndex> = contributions.keys().copied().collect();
    let (points, tdd_warnings) = tdd_series(id, &issues, &sizes, &weeks, epoch);
    warnings.extend(tdd_warnings);

    let observations = points
        .into_iter()
        .map(|tdd| Observation {
            week: tdd.week,
            contribution: contributions
                .remove(&tdd.week)
                .expect("tdd weeks come from contributions"),
            tdd,
        })
        .collect();
    Ok(SeriesBuild {
        series: WeeklySeries::new(id, observations)?,
        active_weeks: active,
        warnings,
    })
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `metrics.csv`: `week,c,ch,p,t,degree,td_minutes,loc,tdd`. Absent
/// measures are empty cells.
pub fn write_metrics_csv<W: Write>(writer: W, series: &WeeklySeries) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([
        "week",
        "c",
        "ch",
        "p",
        "t",
        "degree",
        "td_minutes",
        "loc",
        "tdd",
    ])?;
    for o in &series.observations {
        let c = &o.contribution;
        csv.write_record([
            o.week.to_string(),
            opt(c.c_commits),
            opt(c.ch_churn),
            opt(c.p_prs),
            opt(c.t_tickets),
            c.degree.to_string(),
            o.tdd.td_minutes.to_string(),
            o.tdd.loc.to_string(),
            o.tdd.tdd.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Membership, Ownership, SizeSnapshot};
    use chrono::{Duration, NaiveDate};
    use proptest::prelude::*;

    fn epoch() -> Epoch {
        Epoch::default()
    }

    fn at_week(week: u32, hours: i64) -> DateTime<Utc> {
        WeekIndex::new(week).unwrap().start(epoch()) + Duration::hours(hours)
    }

    fn commit(author: &str, week: u32, churn: u64, merge: bool) -> CommitRecord {
        CommitRecord {
            component_id: "C1".into(),
            commit_hash: format!("{author}{week}{churn}{merge}"),
            author: author.into(),
            timestamp: at_week(week, 10),
            additions: churn,
            deletions: 0,
            is_merge: merge,
        }
    }

    fn item(creator: &str, week: u32, id: usize) -> WorkItemRecord {
        WorkItemRecord {
            component_id: "C1".into(),
            item_id: id.to_string(),
            creator: creator.into(),
            created_at: at_week(week, 12),
        }
    }

    fn timeline() -> AffiliationTimeline {
        let start = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        AffiliationTimeline::new(vec![
            Membership {
                canonical_id: "own".into(),
                team_id: "blue".into(),
                start,
                end: None,
            },
            Membership {
                canonical_id: "other".into(),
                team_id: "red".into(),
                start,
                end: None,
            },
        ])
        .unwrap()
    }

    #[test]
    fn ratio_arithmetic() {
        // 3 of 12 commits, 500 of 1000 churn, 4 of 10 PRs, 2 of 5 tickets.
        let mut commits = Vec::new();
        for i in 0..12 {
            let author = if i < 3 { "own" } else { "other" };
            let churn = if i < 3 {
                [200, 200, 100][i]
            } else {
                [60, 60, 60, 60, 60, 60, 60, 60, 20][i - 3]
            };
            commits.push(commit(author, 1, churn, false));
        }
        let prs: Vec<_> = (0..10)
            .map(|i| item(if i < 4 { "own" } else { "other" }, 1, i))
            .collect();
        let tickets: Vec<_> = (0..5)
            .map(|i| item(if i < 2 { "own" } else { "other" }, 1, i))
            .collect();
        let (c, p, t): (Vec<_>, Vec<_>, Vec<_>) = (
            commits.iter().collect(),
            prs.iter().collect(),
            tickets.iter().collect(),
        );
        let events = WeekEvents {
            commits: &c,
            pull_requests: &p,
            tickets: &t,
        };
        let week = WeekIndex::new(1).unwrap();
        let b = contribution_breakdown("C1", week, "blue", events, &timeline(), false)
            .unwrap()
            .unwrap();
        assert_eq!(b.c_commits, Some(25.0));
        assert_eq!(b.ch_churn, Some(50.0));
        assert_eq!(b.p_prs, Some(40.0));
        assert_eq!(b.t_tickets, Some(40.0));
        assert_eq!(b.degree, 38.75);
        assert_eq!(b.measures_present.len(), 4);
    }

    #[test]
    fn sole_team_and_omitted_channels() {
        let commits = [commit("own", 1, 30, false), commit("other", 1, 30, false)];
        let c: Vec<_> = commits.iter().collect();
        let week = WeekIndex::new(1).unwrap();
        let events = WeekEvents {
            commits: &c,
            ..WeekEvents::default()
        };
        let b = contribution_breakdown("C1", week, "blue", events, &timeline(), false)
            .unwrap()
            .unwrap();
        assert_eq!(b.degree, 50.0);
        assert_eq!(
            b.measures_present,
            [Measure::Commits, Measure::Churn].into_iter().collect()
        );
        assert_eq!(b.p_prs, None);
        assert!(
            contribution_breakdown("C1", week, "blue", events, &timeline(), true)
                .unwrap()
                .is_none()
        );

        let solo = [commit("own", 1, 5, false)];
        let prs = [item("own", 1, 0)];
        let tickets = [item("own", 1, 1)];
        let (c, p, t): (Vec<_>, Vec<_>, Vec<_>) = (
            solo.iter().collect(),
            prs.iter().collect(),
            tickets.iter().collect(),
        );
        let events = WeekEvents {
            commits: &c,
            pull_requests: &p,
            tickets: &t,
        };
        let b = contribution_breakdown("C1", week, "blue", events, &timeline(), true)
            .unwrap()
            .unwrap();
        assert_eq!(b.degree, 100.0);
    }

    #[test]
    fn no_activity_is_an_error() {
        let err = contribution_breakdown(
            "C1",
            WeekIndex::new(3).unwrap(),
            "blue",
            WeekEvents::default(),
            &timeline(),
            false,
        )
        .unwrap_err();
        assert!(matches!(err, MetricsError::NoActivity { .. }));
    }

    #[test]
    fn zero_churn_commits_omit_churn() {
        let commits = [commit("own", 1, 0, false)];
        let c: Vec<_> = commits.iter().collect();
        let events = WeekEvents {
            commits: &c,
            ..WeekEvents::default()
        };
        let b = contribution_breakdown(
            "C1",
            WeekIndex::new(1).unwrap(),
            "blue",
            events,
            &timeline(),
            false,
        )
        .unwrap()
        .unwrap();
        assert_eq!(b.ch_churn, None);
        assert_eq!(b.degree, 100.0);
    }

    #[test]
    fn active_week_examples() {
        let commits = [
            commit("a", 3, 1, false),
            commit("a", 3, 2, false),
            commit("a", 5, 1, false),
            commit("a", 4, 1, true),
        ];
        let weeks: Vec<u32> = active_weeks(&commits, epoch(), false)
            .unwrap()
            .into_iter()
            .map(WeekIndex::get)
            .collect();
        assert_eq!(weeks, vec![3, 5]);
        let weeks = active_weeks(&commits, epoch(), true).unwrap();
        assert_eq!(weeks.len(), 3);
        assert!(active_weeks(&[], epoch(), false).unwrap().is_empty());
    }

    fn issue(id: &str, minutes: f64, intro_week: u32, removed_week: Option<u32>) -> TdIssueRecord {
        TdIssueRecord {
            component_id: "C1".into(),
            issue_id: id.into(),
            remediation_minutes: minutes,
            introduced_at: at_week(intro_week, 30),
            removed_at: removed_week.map(|w| at_week(w, 40)),
        }
    }

    fn weeks(range: std::ops::RangeInclusive<u32>) -> BTreeSet<WeekIndex> {
        range.map(|w| WeekIndex::new(w).unwrap()).collect()
    }

    #[test]
    fn tdd_arithmetic_and_half_open_interval() {
        let open = issue("I1", 1200.0, 1, None);
        let sizes: BTreeMap<_, _> = weeks(1..=10).into_iter().map(|w| (w, 10_000)).collect();
        let (points, warnings) = tdd_series("C1", &[&open], &sizes, &weeks(1..=1), epoch());
        assert!(warnings.is_empty());
        assert!((points[0].tdd - 0.12).abs() < 1e-15);

        let bounded = issue("I2", 10.0, 5, Some(8));
        let stock = td_stock([&bounded], &weeks(1..=10), epoch());
        let present: Vec<u32> = stock
            .iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|(w, _)| w.get())
            .collect();
        assert_eq!(present, vec![5, 6, 7]);
    }

    #[test]
    fn missing_and_zero_sizes_dropped() {
        let open = issue("I1", 5.0, 1, None);
        let sizes: BTreeMap<_, _> = [
            (WeekIndex::new(1).unwrap(), 100),
            (WeekIndex::new(2).unwrap(), 0),
        ]
        .into_iter()
        .collect();
        let (points, warnings) = tdd_series("C1", &[&open], &sizes, &weeks(1..=3), epoch());
        assert_eq!(points.len(), 1);
        assert_eq!(warnings.len(), 2);
    }

    #[test]
    fn issues_before_epoch_count_from_week_one() {
        let mut early = issue("I0", 7.0, 1, None);
        early.introduced_at = at_week(1, 0) - Duration::days(30);
        let stock = td_stock([&early], &weeks(1..=2), epoch());
        assert_eq!(stock[0].1, 7.0);
    }

    #[test]
    fn exact_sum_cancels() {
        let mut sum = ExactSum::default();
        for v in [0.1, 0.2, 0.3, 1e20, -1e20, -0.1, -0.2] {
            sum.add(v);
        }
        assert_eq!(sum.value(), 0.3);
        sum.add(-0.3);
        assert_eq!(sum.value(), 0.0);
    }

    fn store_for_series() -> (ComponentSpec, EventStore) {
        let mut spec = ComponentSpec::new("C1");
        spec.owner_timeline.push(Ownership {
            team_id: "blue".into(),
            start: epoch().date(),
            end: None,
        });
        let store = EventStore {
            commits: vec![
                commit("own", 2, 10, false),
                commit("other", 2, 30, false),
                commit("own", 4, 10, false),
                commit("other", 5, 10, true),
            ],
            pull_requests: vec![item("own", 2, 1), item("other", 3, 2)],
            tickets: vec![],
            td_issues: vec![issue("I1", 100.0, 1, Some(4))],
            sizes: (1..=6)
                .map(|w| SizeSnapshot {
                    component_id: "C1".into(),
                    week: WeekIndex::new(w).unwrap(),
                    loc: 1000,
                })
                .collect(),
            affiliations: timeline(),
        };
        (spec, store)
    }

    #[test]
    fn series_from_store() {
        let (spec, store) = store_for_series();
        let build = build_weekly_series(&spec, &store, &MetricsConfig::default()).unwrap();
        assert_eq!(
            build
                .series
                .weeks()
                .iter()
                .map(|w| w.get())
                .collect::<Vec<_>>(),
            vec![2, 4]
        );
        let first = &build.series.observations[0];
        // C = 50, Ch = 25, P = 100
        assert!((first.contribution.degree - 175.0 / 3.0).abs() < 1e-12);
        assert_eq!(first.tdd.td_minutes, 100.0);
        assert_eq!(build.series.observations[1].tdd.td_minutes, 0.0);

        let merges = MetricsConfig {
            include_merges: true,
            ..MetricsConfig::default()
        };
        assert_eq!(
            build_weekly_series(&spec, &store, &merges)
                .unwrap()
                .series
                .len(),
            3
        );

        let rolling = MetricsConfig {
            window_weeks: 2,
            ..MetricsConfig::default()
        };
        let build = build_weekly_series(&spec, &store, &rolling).unwrap();
        // Week 4 window covers weeks 3-4: own commit plus the other team's PR.
        let week4 = &build.series.observations[1].contribution;
        assert_eq!(week4.p_prs, Some(0.0));
        assert_eq!(week4.c_commits, Some(100.0));
    }

    #[test]
    fn metrics_csv_layout() {
        let (spec, store) = store_for_series();
        let build = build_weekly_series(&spec, &store, &MetricsConfig::default()).unwrap();
        let mut out = Vec::new();
        write_metrics_csv(&mut out, &build.series).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("week,c,ch,p,t,degree,td_minutes,loc,tdd")
        );
        assert_eq!(
            lines.next(),
            Some("2,50,25,100,,58.333333333333336,100,1000,0.1")
        );
        assert_eq!(lines.next(), Some("4,100,100,,,100,0,1000,0"));
    }

    fn brute_stock(issues: &[TdIssueRecord], week: u32) -> f64 {
        issues
            .iter()
            .filter(|i| {
                let opened = week_number(&i.introduced_at, epoch());
                let closed = i.removed_at.map(|t| week_number(&t, epoch()));
                opened <= i64::from(week) && closed.is_none_or(|c| c > i64::from(week))
            })
            .map(|i| i.remediation_minutes)
            .sum()
    }

    fn arb_issues() -> impl Strategy<Value = Vec<TdIssueRecord>> {
        proptest::collection::vec(
            (0u32..4000, 1u32..60, proptest::option::of(0u32..40)),
            0..80,
        )
        .prop_map(|raw| {
            raw.into_iter()
                .enumerate()
                .map(|(i, (quarters, intro, dur))| {
                    issue(
                        &i.to_string(),
                        f64::from(quarters) / 4.0,
                        intro,
                        dur.map(|d| intro + d + 1),
                    )
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn incremental_stock_matches_rescan(issues in arb_issues()) {
            let all = weeks(1..=100);
            for (week, stock) in td_stock(&issues, &all, epoch()) {
                prop_assert_eq!(stock, brute_stock(&issues, week.get()));
            }
        }

        #[test]
        fn stock_monotone_in_issue_set(issues in arb_issues(), extra in arb_issues()) {
            let all = weeks(1..=60);
            let base = td_stock(&issues, &all, epoch());
            let mut more = issues.clone();
            more.extend(extra.into_iter().take(1));
            let grown = td_stock(&more, &all, epoch());
            for ((_, a), (_, b)) in base.iter().zip(&grown) {
                prop_assert!(b >= a);
            }
            if !issues.is_empty() {
                let shrunk = td_stock(&issues[1..], &all, epoch());
                for ((_, a), (_, b)) in base.iter().zip(&shrunk) {
                    prop_assert!(b <= a);
                    prop_assert!(*b >= 0.0);
                }
            }
        }

        #[test]
        fn duplication_leaves_degree_unchanged(
            authors in proptest::collection::vec((prop_oneof![Just("own"), Just("other"), Just("ghost")], 0u64..50), 1..20),
            creators in proptest::collection::vec(prop_oneof![Just("own"), Just("other"), Just("ghost")], 0..10),
        ) {
            let commits: Vec<CommitRecord> = authors.iter().map(|(a, c)| commit(a, 1, *c, false)).collect();
            let prs: Vec<WorkItemRecord> = creators.iter().enumerate().map(|(i, a)| item(a, 1, i)).collect();
            let week = WeekIndex::new(1).unwrap();
            let once = {
                let (c, p): (Vec<_>, Vec<_>) = (commits.iter().collect(), prs.iter().collect());
                contribution_breakdown("C1", week, "blue", WeekEvents { commits: &c, pull_requests: &p, tickets: &[] }, &timeline(), false).unwrap().unwrap()
            };
            let twice = {
                let c: Vec<_> = commits.iter().chain(&commits).collect();
                let p: Vec<_> = prs.iter().chain(&prs).collect();
                contribution_breakdown("C1", week, "blue", WeekEvents { commits: &c, pull_requests: &p, tickets: &[] }, &timeline(), false).unwrap().unwrap()
            };
            prop_assert!((once.degree - twice.degree).abs() < 1e-9);
            prop_assert!((0.0..=100.0).contains(&once.degree));
        }
    }
}
