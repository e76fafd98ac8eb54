//! Shared domain types: week buckets, identities, team affiliation, component
//! specs and the raw event records every other module consumes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pseudo-team credited with events whose author has no membership at the
/// event instant.
pub const UNAFFILIATED: &str = "unaffiliated";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("epoch {0} is not a Monday")]
    EpochNotMonday(NaiveDate),
    #[error("timestamp {timestamp} precedes epoch {epoch}")]
    BeforeEpoch {
        timestamp: DateTime<Utc>,
        epoch: NaiveDate,
    },
    #[error("week index must be at least 1")]
    ZeroWeek,
    #[error("identity has neither a name nor an email")]
    EmptyIdentity,
    #[error("interval for {owner} starting {start} does not end after it starts ({end})")]
    EmptyInterval {
        owner: String,
        start: NaiveDate,
        end: NaiveDate,
    },
    #[error("overlapping intervals for {owner}: one starting {first}, another starting {second}")]
    Overlap {
        owner: String,
        first: NaiveDate,
        second: NaiveDate,
    },
    #[error("owner timeline of component {0} is not ordered by start date")]
    UnorderedOwnership(String),
    #[error("component id must not be empty")]
    EmptyComponentId,
}

/// Monday that opens week 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "NaiveDate", into = "NaiveDate")]
pub struct Epoch(NaiveDate);

impl Epoch {
    pub fn new(monday: NaiveDate) -> Result<Self, ModelError> {
        if monday.weekday() != Weekday::Mon {
            return Err(ModelError::EpochNotMonday(monday));
        }
        Ok(Self(monday))
    }

    pub fn date(self) -> NaiveDate {
        self.0
    }
}

impl Default for Epoch {
    /// 2020-01-06, which puts 2021-03-01 in week 61.
    fn default() -> Self {
        Self(NaiveDate::from_ymd_opt(2020, 1, 6).expect("valid date"))
    }
}

impl TryFrom<NaiveDate> for Epoch {
    type Error = ModelError;

    fn try_from(value: NaiveDate) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Epoch> for NaiveDate {
    fn from(value: Epoch) -> Self {
        value.0
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// 1-based index of a 7-day bucket counted from an [`Epoch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct WeekIndex(u32);

impl WeekIndex {
    pub fn new(index: u32) -> Result<Self, ModelError> {
        if index == 0 {
            Err(ModelError::ZeroWeek)
        } else {
            Ok(Self(index))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Midnight UTC of the Monday that opens this week.
    pub fn start(self, epoch: Epoch) -> DateTime<Utc> {
        let day = epoch.0 + chrono::Days::new(7 * u64::from(self.0 - 1));
        midnight_utc(day)
    }

    /// Weeks `[self - (len - 1), self]`, clamped at week 1.
    pub fn window_start(self, len: u32) -> WeekIndex {
        Self(self.0.saturating_sub(len.saturating_sub(1)).max(1))
    }
}

impl TryFrom<u32> for WeekIndex {
    type Error = ModelError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<WeekIndex> for u32 {
    fn from(value: WeekIndex) -> Self {
        value.0
    }
}

impl fmt::Display for WeekIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub(crate) fn midnight_utc(day: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&day.and_hms_opt(0, 0, 0).expect("midnight exists"))
}

/// Maps a timestamp to its week bucket. The timestamp is normalised to UTC
/// before its calendar date is taken.
pub fn week_of<Tz: TimeZone>(
    timestamp: &DateTime<Tz>,
    epoch: Epoch,
) -> Result<WeekIndex, ModelError> {
    let utc = timestamp.with_timezone(&Utc);
    let days = (utc.date_naive() - epoch.0).num_days();
    if days < 0 {
        return Err(ModelError::BeforeEpoch {
            timestamp: utc,
            epoch: epoch.0,
        });
    }
    let index = u32::try_from(days / 7 + 1).expect("week index fits in u32");
    Ok(WeekIndex(index))
}

/// Signed week number of a timestamp: 1 for the epoch week, 0 for the week
/// before it, and so on.
pub fn week_number<Tz: TimeZone>(timestamp: &DateTime<Tz>, epoch: Epoch) -> i64 {
    let days = (timestamp.with_timezone(&Utc).date_naive() - epoch.0).num_days();
    days.div_euclid(7) + 1
}

/// A person as seen across all sources.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Identity {
    pub canonical_id: String,
    pub raw_names: BTreeSet<String>,
    pub raw_emails: BTreeSet<String>,
}

/// Raw email to canonical id table. Lookups ignore case and surrounding
/// whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, String>", into = "BTreeMap<String, String>")]
pub struct AliasMap {
    by_email: BTreeMap<String, String>,
}

impl AliasMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, raw_email: &str, canonical_id: impl Into<String>) {
        self.by_email
            .insert(normalize_key(raw_email), canonical_id.into());
    }

    pub fn get(&self, raw_email: &str) -> Option<&str> {
        self.by_email
            .get(&normalize_key(raw_email))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_email.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_email.is_empty()
    }
}

impl From<BTreeMap<String, String>> for AliasMap {
    fn from(value: BTreeMap<String, String>) -> Self {
        let mut map = AliasMap::new();
        for (email, canonical) in value {
            map.insert(&email, canonical);
        }
        map
    }
}

impl From<AliasMap> for BTreeMap<String, String> {
    fn from(value: AliasMap) -> Self {
        value.by_email
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for AliasMap {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut map = AliasMap::new();
        for (email, canonical) in iter {
            map.insert(email, canonical);
        }
        map
    }
}

fn normalize_key(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Outcome of [`resolve_identity`]. `known` is false when the alias table had
/// no entry and the fallback id was used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub identity: Identity,
    pub known: bool,
}

impl Resolution {
    pub fn canonical_id(&self) -> &str {
        &self.identity.canonical_id
    }
}

/// Resolves a raw author to a canonical identity. Unknown authors fall back to
/// their lowercased email, or their lowercased name when no email is present.
pub fn resolve_identity(
    raw_name: &str,
    raw_email: &str,
    aliases: &AliasMap,
) -> Result<Resolution, ModelError> {
    let name = raw_name.trim();
    let email = raw_email.trim();
    if name.is_empty() && email.is_empty() {
        return Err(ModelError::EmptyIdentity);
    }
    let (canonical_id, known) = match aliases.get(email).filter(|_| !email.is_empty()) {
        Some(canonical) => (canonical.to_string(), true),
        None if !email.is_empty() => (normalize_key(email), false),
        None => (normalize_key(name), false),
    };
    let mut identity = Identity {
        canonical_id,
        ..Identity::default()
    };
    if !name.is_empty() {
        identity.raw_names.insert(name.to_string());
    }
    if !email.is_empty() {
        identity.raw_emails.insert(email.to_string());
    }
    Ok(Resolution { identity, known })
}

/// Accumulates every raw name and email seen for each canonical id.
#[derive(Debug, Clone, Default)]
pub struct IdentityRegistry {
    identities: BTreeMap<String, Identity>,
}

impl IdentityRegistry {
    pub fn observe(&mut self, resolution: &Resolution) {
        let entry = self
            .identities
            .entry(resolution.identity.canonical_id.clone())
            .or_insert_with(|| Identity {
                canonical_id: resolution.identity.canonical_id.clone(),
                ..Identity::default()
            });
        entry
            .raw_names
            .extend(resolution.identity.raw_names.iter().cloned());
        entry
            .raw_emails
            .extend(resolution.identity.raw_emails.iter().cloned());
    }

    pub fn get(&self, canonical_id: &str) -> Option<&Identity> {
        self.identities.get(canonical_id)
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Identity> {
        self.identities.values()
    }
}

/// Half-open `[start, end)` date range; `end = None` is open-ended. Dates are
/// taken as midnight UTC.
fn interval_contains(start: NaiveDate, end: Option<NaiveDate>, at: &DateTime<Utc>) -> bool {
    *at >= midnight_utc(start) && end.is_none_or(|end| *at < midnight_utc(end))
}

fn check_intervals<'a>(
    owner: &str,
    intervals: impl IntoIterator<Item = (NaiveDate, Option<NaiveDate>)> + 'a,
) -> Result<(), ModelError> {
    let mut sorted: Vec<_> = intervals.into_iter().collect();
    for &(start, end) in &sorted {
        if let Some(end) = end {
            if start >= end {
                return Err(ModelError::EmptyInterval {
                    owner: owner.to_string(),
                    start,
                    end,
                });
            }
        }
    }
    sorted.sort();
    for pair in sorted.windows(2) {
        let (first_start, first_end) = pair[0];
        let (second_start, _) = pair[1];
        if first_end.is_none_or(|end| end > second_start) {
            return Err(ModelError::Overlap {
                owner: owner.to_string(),
                first: first_start,
                second: second_start,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Membership {
    pub canonical_id: String,
    pub team_id: String,
    pub start: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
}

impl Membership {
    pub fn contains(&self, at: &DateTime<Utc>) -> bool {
        interval_contains(self.start, self.end, at)
    }
}

/// Team membership of every identity over time. Construction rejects
/// overlapping intervals, so each identity belongs to at most one team at any
/// instant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Membership>", into = "Vec<Membership>")]
pub struct AffiliationTimeline {
    by_member: BTreeMap<String, Vec<Membership>>,
}

impl AffiliationTimeline {
    pub fn new(memberships: Vec<Membership>) -> Result<Self, ModelError> {
        let mut by_member: BTreeMap<String, Vec<Membership>> = BTreeMap::new();
        for membership in memberships {
            by_member
                .entry(membership.canonical_id.clone())
                .or_default()
                .push(membership);
        }
        for (member, intervals) in &mut by_member {
            check_intervals(member, intervals.iter().map(|m| (m.start, m.end)))?;
            intervals.sort();
        }
        Ok(Self { by_member })
    }

    /// Team of `canonical_id` at `at`, or [`UNAFFILIATED`].
    pub fn team_of(&self, canonical_id: &str, at: &DateTime<Utc>) -> &str {
        self.by_member
            .get(canonical_id)
            .and_then(|intervals| intervals.iter().find(|m| m.contains(at)))
            .map_or(UNAFFILIATED, |m| m.team_id.as_str())
    }

    pub fn memberships(&self) -> impl Iterator<Item = &Membership> {
        self.by_member.values().flatten()
    }

    pub fn teams(&self) -> BTreeSet<&str> {
        self.memberships().map(|m| m.team_id.as_str()).collect()
    }
}

impl TryFrom<Vec<Membership>> for AffiliationTimeline {
    type Error = ModelError;

    fn try_from(value: Vec<Membership>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<AffiliationTimeline> for Vec<Membership> {
    fn from(value: AffiliationTimeline) -> Self {
        value.by_member.into_values().flatten().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ownership {
    pub team_id: String,
    pub start: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub date: NaiveDate,
    #[serde(default)]
    pub description: String,
}

pub fn default_globs() -> Vec<String> {
    vec!["**/*.java".to_string(), "**/*.xml".to_string()]
}

/// A unit of analysis: which files belong to it, which team owned it when,
/// and the organisational events that split its history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub component_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repo_path: Option<PathBuf>,
    #[serde(default = "default_globs")]
    pub path_globs: Vec<String>,
    #[serde(default)]
    pub owner_timeline: Vec<Ownership>,
    #[serde(default)]
    pub split_events: Vec<SplitEvent>,
}

impl ComponentSpec {
    pub fn new(component_id: impl Into<String>) -> Self {
        Self {
            component_id: component_id.into(),
            repo_path: None,
            path_globs: default_globs(),
            owner_timeline: Vec::new(),
            split_events: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.component_id.trim().is_empty() {
            return Err(ModelError::EmptyComponentId);
        }
        if self
            .owner_timeline
            .windows(2)
            .any(|w| w[0].start > w[1].start)
        {
            return Err(ModelError::UnorderedOwnership(self.component_id.clone()));
        }
        check_intervals(
            &self.component_id,
            self.owner_timeline.iter().map(|o| (o.start, o.end)),
        )
    }

    pub fn owner_at(&self, at: &DateTime<Utc>) -> Option<&str> {
        self.owner_timeline
            .iter()
            .find(|o| interval_contains(o.start, o.end, at))
            .map(|o| o.team_id.as_str())
    }

    /// Owner at the first instant of `week`.
    pub fn owner_in_week(&self, week: WeekIndex, epoch: Epoch) -> Option<&str> {
        self.owner_at(&week.start(epoch))
    }

    /// Distinct split weeks in ascending order.
    pub fn split_weeks(&self, epoch: Epoch) -> Result<Vec<WeekIndex>, ModelError> {
        let mut weeks = self
            .split_events
            .iter()
            .map(|event| week_of(&midnight_utc(event.date), epoch))
            .collect::<Result<Vec<_>, _>>()?;
        weeks.sort();
        weeks.dedup();
        Ok(weeks)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub component_id: String,
    pub commit_hash: String,
    /// Canonical id of the author.
    pub author: String,
    pub timestamp: DateTime<Utc>,
    pub additions: u64,
    pub deletions: u64,
    pub is_merge: bool,
}

impl CommitRecord {
    pub fn churn(&self) -> u64 {
        self.additions + self.deletions
    }
}

/// A pull request or a ticket: only creation matters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkItemRecord {
    pub component_id: String,
    pub item_id: String,
    /// Canonical id of the creator.
    pub creator: String,
    pub created_at: DateTime<Utc>,
}

pub type PullRequestRecord = WorkItemRecord;
pub type TicketRecord = WorkItemRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdIssueRecord {
    pub component_id: String,
    pub issue_id: String,
    pub remediation_minutes: f64,
    pub introduced_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeSnapshot {
    pub component_id: String,
    pub week: WeekIndex,
    pub loc: u64,
}
