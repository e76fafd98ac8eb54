//! Parsers for every input source: `git log --numstat` text, JSON Lines event
//! exports, affiliation and alias tables, `sizes.csv`, and a built-in line
//! counter used when no size table is supplied.
//!
//! Record-level problems never abort a parse. They are counted in
//! [`IngestDiagnostics`] and the offending record is dropped.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::fsutil::write_atomic;
use crate::model::{
    resolve_identity, AffiliationTimeline, AliasMap, CommitRecord, ComponentSpec, Membership,
    ModelError, PullRequestRecord, SizeSnapshot, TdIssueRecord, TicketRecord, WeekIndex,
    WorkItemRecord,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelError },
    #[error("no {0} input configured")]
    MissingInput(&'static str),
    #[error("invalid glob {pattern:?}: {source}")]
    Glob {
        pattern: String,
        source: globset::Error,
    },
}

/// Counters and messages collected while ingesting.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestDiagnostics {
    pub records_read: u64,
    pub records_rejected: u64,
    pub unknown_identities: BTreeSet<String>,
    pub warnings: Vec<String>,
}

impl IngestDiagnostics {
    pub fn merge(&mut self, other: IngestDiagnostics) {
        self.records_read += other.records_read;
        self.records_rejected += other.records_rejected;
        self.unknown_identities.extend(other.unknown_identities);
        self.warnings.extend(other.warnings);
    }

    pub fn reject(&mut self, message: impl Into<String>) {
        self.records_rejected += 1;
        self.warnings.push(message.into());
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    fn note_identity(&mut self, resolution: &crate::model::Resolution, source: &str) {
        if !resolution.known
            && self
                .unknown_identities
                .insert(resolution.canonical_id().to_string())
        {
            self.warnings.push(format!(
                "{source}: unknown identity {:?}, using it as canonical id",
                resolution.canonical_id()
            ));
        }
    }
}

/// Compiled include patterns of a component.
#[derive(Debug, Clone)]
pub struct PathFilter {
    set: GlobSet,
}

impl PathFilter {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self, IngestError> {
        let mut builder = GlobSetBuilder::new();
        for pattern in patterns {
            let pattern = pattern.as_ref();
            let glob = Glob::new(pattern).map_err(|source| IngestError::Glob {
                pattern: pattern.to_string(),
                source,
            })?;
            builder.add(glob);
        }
        let set = builder.build().map_err(|source| IngestError::Glob {
            pattern: "<set>".into(),
            source,
        })?;
        Ok(Self { set })
    }

    pub fn matches(&self, path: impl AsRef<Path>) -> bool {
        self.set.is_match(path)
    }
}

fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// Resolves the post-rename path of a numstat entry such as
/// `src/{old => new}/A.java` or `old.java => new.java`.
pub fn numstat_target_path(raw: &str) -> String {
    if let (Some(open), Some(close)) = (raw.find('{'), raw.rfind('}')) {
        if open < close {
            if let Some((_, new)) = raw[open + 1..close].split_once(" => ") {
                let joined = format!("{}{}{}", &raw[..open], new, &raw[close + 1..]);
                return joined.replace("//", "/");
            }
        }
    }
    match raw.split_once(" => ") {
        Some((_, new)) => new.to_string(),
        None => raw.to_string(),
    }
}

struct PendingCommit {
    hash: String,
    author: String,
    timestamp: DateTime<Utc>,
    is_merge: bool,
    additions: u64,
    deletions: u64,
    touched: bool,
}

impl PendingCommit {
    fn finish(self, component_id: &str) -> Option<CommitRecord> {
        self.touched.then(|| CommitRecord {
            component_id: component_id.to_string(),
            commit_hash: self.hash,
            author: self.author,
            timestamp: self.timestamp,
            additions: self.additions,
            deletions: self.deletions,
            is_merge: self.is_merge,
        })
    }
}

/// Parses the output of
/// `git log --numstat --date=iso-strict --pretty=format:'@%H|%an|%ae|%ad|%P'`.
///
/// Churn is summed over files matching the component globs; binary entries
/// (`-`) count as zero. Commits that touch no matching file are dropped.
pub fn parse_git_numstat<R: BufRead>(
    reader: R,
    component: &ComponentSpec,
    aliases: &AliasMap,
) -> Result<(Vec<CommitRecord>, IngestDiagnostics), IngestError> {
    let filter = PathFilter::new(&component.path_globs)?;
    let mut diag = IngestDiagnostics::default();
    let mut commits = Vec::new();
    let mut seen = HashSet::new();
    // `None` while inside a rejected commit (its numstat lines are ignored).
    let mut current: Option<Option<PendingCommit>> = None;

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|source| IngestError::Read {
            path: PathBuf::from("<numstat>"),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('@') {
            if let Some(Some(done)) = current.take() {
                commits.extend(done.finish(&component.component_id));
            }
            diag.records_read += 1;
            current = Some(parse_header(header, line_no, aliases, &mut seen, &mut diag));
            continue;
        }
        match current.as_mut() {
            None => diag.warn(format!(
                "line {line_no}: numstat line before any commit header, skipped"
            )),
            Some(None) => {}
            Some(Some(commit)) => match parse_numstat_line(line) {
                Some((additions, deletions, path)) => {
                    if filter.matches(numstat_target_path(path)) {
                        commit.additions += additions;
                        commit.deletions += deletions;
                        commit.touched = true;
                    }
                }
                None => diag.warn(format!(
                    "line {line_no}: malformed numstat line {line:?}, skipped"
                )),
            },
        }
    }
    if let Some(Some(done)) = current.take() {
        commits.extend(done.finish(&component.component_id));
    }
    Ok((commits, diag))
}

fn parse_header(
    header: &str,
    line_no: usize,
    aliases: &AliasMap,
    seen: &mut HashSet<String>,
    diag: &mut IngestDiagnostics,
) -> Option<PendingCommit> {
    let parts: Vec<&str> = header.split('|').collect();
    if parts.len() < 5 {
        diag.reject(format!(
            "line {line_no}: malformed commit header {header:?}"
        ));
        return None;
    }
    let n = parts.len();
    let hash = parts[0].trim();
    let name = parts[1..n - 3].join("|");
    let email = parts[n - 3];
    let date = parts[n - 2];
    let parents = parts[n - 1].split_whitespace().count();
    if hash.is_empty() || !hash.chars().all(|c| c.is_ascii_hexdigit()) {
        diag.reject(format!("line {line_no}: malformed commit hash {hash:?}"));
        return None;
    }
    let Some(timestamp) = parse_timestamp(date) else {
        diag.reject(format!(
            "line {line_no}: commit {hash} has unparseable date {date:?}"
        ));
        return None;
    };
    let resolution = match resolve_identity(&name, email, aliases) {
        Ok(r) => r,
        Err(err) => {
            diag.reject(format!("line {line_no}: commit {hash}: {err}"));
            return None;
        }
    };
    if !seen.insert(hash.to_string()) {
        diag.reject(format!("line {line_no}: duplicate commit {hash}"));
        return None;
    }
    diag.note_identity(&resolution, "git log");
    Some(PendingCommit {
        hash: hash.to_string(),
        author: resolution.identity.canonical_id,
        timestamp,
        is_merge: parents >= 2,
        additions: 0,
        deletions: 0,
        touched: false,
    })
}

fn parse_numstat_line(line: &str) -> Option<(u64, u64, &str)> {
    let mut fields = line.splitn(3, '\t');
    let additions = fields.next()?;
    let deletions = fields.next()?;
    let path = fields.next()?;
    if path.is_empty() {
        return None;
    }
    let count = |raw: &str| {
        if raw == "-" {
            Some(0)
        } else {
            raw.parse::<u64>().ok()
        }
    };
    Some((count(additions)?, count(deletions)?, path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFileChange {
    pub path: String,
    /// `None` for binary files.
    #[serde(default)]
    pub additions: Option<u64>,
    #[serde(default)]
    pub deletions: Option<u64>,
}

/// Alternative commit input: one JSON object per commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCommit {
    pub hash: String,
    #[serde(default)]
    pub author_name: String,
    #[serde(default)]
    pub author_email: String,
    pub timestamp: String,
    pub files: Vec<RawFileChange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parents: Option<u32>,
}

pub fn parse_commits_jsonl<R: BufRead>(
    reader: R,
    component: &ComponentSpec,
    aliases: &AliasMap,
) -> Result<(Vec<CommitRecord>, IngestDiagnostics), IngestError> {
    let filter = PathFilter::new(&component.path_globs)?;
    let mut diag = IngestDiagnostics::default();
    let mut seen = HashSet::new();
    let mut commits = Vec::new();
    for_each_json_line(reader, &mut diag, |line_no, raw: RawCommit, diag| {
        let Some(timestamp) = parse_timestamp(&raw.timestamp) else {
            diag.reject(format!(
                "line {line_no}: commit {} has unparseable timestamp",
                raw.hash
            ));
            return;
        };
        if raw.hash.trim().is_empty() {
            diag.reject(format!("line {line_no}: commit without hash"));
            return;
        }
        let resolution = match resolve_identity(&raw.author_name, &raw.author_email, aliases) {
            Ok(r) => r,
            Err(err) => {
                diag.reject(format!("line {line_no}: commit {}: {err}", raw.hash));
                return;
            }
        };
        if !seen.insert(raw.hash.clone()) {
            diag.reject(format!("line {line_no}: duplicate commit {}", raw.hash));
            return;
        }
        diag.note_identity(&resolution, "commits");
        let mut pending = PendingCommit {
            hash: raw.hash,
            author: resolution.identity.canonical_id,
            timestamp,
            is_merge: raw.parents.unwrap_or(1) >= 2,
            additions: 0,
            deletions: 0,
            touched: false,
        };
        for file in raw.files.iter().filter(|f| filter.matches(&f.path)) {
            pending.additions += file.additions.unwrap_or(0);
            pending.deletions += file.deletions.unwrap_or(0);
            pending.touched = true;
        }
        commits.extend(pending.finish(&component.component_id));
    })?;
    Ok((commits, diag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Pr,
    Ticket,
    TdIssue,
}

/// Raw shape of `prs.jsonl` and `tickets.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawWorkItem {
    pub item_id: String,
    #[serde(default)]
    pub author_name: String,
    #[serde(default)]
    pub author_email: String,
    pub created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component_id: Option<String>,
}

/// Raw shape of `td_issues.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTdIssue {
    pub issue_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component_id: Option<String>,
    pub remediation_minutes: f64,
    pub introduced_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed_at: Option<String>,
}

/// Shared inputs for event loaders. `default_component` is assigned to
/// records that carry no `component_id`; without it such records are
/// rejected.
#[derive(Debug, Clone, Default)]
pub struct LoadContext {
    pub aliases: AliasMap,
    pub default_component: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventBatch {
    PullRequests(Vec<PullRequestRecord>),
    Tickets(Vec<TicketRecord>),
    TdIssues(Vec<TdIssueRecord>),
}

impl EventBatch {
    pub fn len(&self) -> usize {
        match self {
            EventBatch::PullRequests(v) | EventBatch::Tickets(v) => v.len(),
            EventBatch::TdIssues(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Loads one JSON Lines export.
pub fn load_events(
    path: &Path,
    kind: EventKind,
    ctx: &LoadContext,
) -> Result<(EventBatch, IngestDiagnostics), IngestError> {
    let reader = open(path)?;
    let labelled = |mut diag: IngestDiagnostics| {
        for warning in &mut diag.warnings {
            *warning = format!("{}: {warning}", path.display());
        }
        diag
    };
    Ok(match kind {
        EventKind::Pr => {
            let (items, diag) = read_work_items(reader, ctx, "pull request")?;
            (EventBatch::PullRequests(items), labelled(diag))
        }
        EventKind::Ticket => {
            let (items, diag) = read_work_items(reader, ctx, "ticket")?;
            (EventBatch::Tickets(items), labelled(diag))
        }
        EventKind::TdIssue => {
            let (items, diag) = read_td_issues(reader, ctx)?;
            (EventBatch::TdIssues(items), labelled(diag))
        }
    })
}

fn component_of(raw: Option<String>, ctx: &LoadContext) -> Option<String> {
    raw.filter(|c| !c.trim().is_empty())
        .or_else(|| ctx.default_component.clone())
}

pub fn read_work_items<R: BufRead>(
    reader: R,
    ctx: &LoadContext,
    what: &str,
) -> Result<(Vec<WorkItemRecord>, IngestDiagnostics), IngestError> {
    let mut diag = IngestDiagnostics::default();
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    for_each_json_line(reader, &mut diag, |line_no, raw: RawWorkItem, diag| {
        let Some(component_id) = component_of(raw.component_id, ctx) else {
            diag.reject(format!(
                "line {line_no}: {what} {} has no component_id",
                raw.item_id
            ));
            return;
        };
        if raw.item_id.trim().is_empty() {
            diag.reject(format!("line {line_no}: {what} with empty item_id"));
            return;
        }
        let Some(created_at) = parse_timestamp(&raw.created_at) else {
            diag.reject(format!(
                "line {line_no}: {what} {} has unparseable created_at",
                raw.item_id
            ));
            return;
        };
        let resolution = match resolve_identity(&raw.author_name, &raw.author_email, &ctx.aliases) {
            Ok(r) => r,
            Err(err) => {
                diag.reject(format!("line {line_no}: {what} {}: {err}", raw.item_id));
                return;
            }
        };
        if !seen.insert((component_id.clone(), raw.item_id.clone())) {
            diag.reject(format!("line {line_no}: duplicate {what} {}", raw.item_id));
            return;
        }
        diag.note_identity(&resolution, what);
        items.push(WorkItemRecord {
            component_id,
            item_id: raw.item_id,
            creator: resolution.identity.canonical_id,
            created_at,
        });
    })?;
    Ok((items, diag))
}

pub fn read_td_issues<R: BufRead>(
    reader: R,
    ctx: &LoadContext,
) -> Result<(Vec<TdIssueRecord>, IngestDiagnostics), IngestError> {
    let mut diag = IngestDiagnostics::default();
    let mut seen = HashSet::new();
    let mut issues = Vec::new();
    for_each_json_line(reader, &mut diag, |line_no, raw: RawTdIssue, diag| {
        let id = &raw.issue_id;
        let Some(component_id) = component_of(raw.component_id.clone(), ctx) else {
            diag.reject(format!("line {line_no}: issue {id} has no component_id"));
            return;
        };
        if id.trim().is_empty() {
            diag.reject(format!("line {line_no}: issue with empty issue_id"));
            return;
        }
        if !raw.remediation_minutes.is_finite() || raw.remediation_minutes < 0.0 {
            diag.reject(format!(
                "line {line_no}: issue {id} has invalid remediation_minutes"
            ));
            return;
        }
        let Some(introduced_at) = parse_timestamp(&raw.introduced_at) else {
            diag.reject(format!(
                "line {line_no}: issue {id} has unparseable introduced_at"
            ));
            return;
        };
        let removed_at = match raw.removed_at.as_deref().map(parse_timestamp) {
            None => None,
            Some(Some(t)) => Some(t),
            Some(None) => {
                diag.reject(format!(
                    "line {line_no}: issue {id} has unparseable removed_at"
                ));
                return;
            }
        };
        if removed_at.is_some_and(|removed| removed <= introduced_at) {
            diag.reject(format!(
                "line {line_no}: issue {id} removed before it was introduced"
            ));
            return;
        }
        if !seen.insert((component_id.clone(), id.clone())) {
            diag.reject(format!("line {line_no}: duplicate issue {id}"));
            return;
        }
        issues.push(TdIssueRecord {
            component_id,
            issue_id: raw.issue_id,
            remediation_minutes: raw.remediation_minutes,
            introduced_at,
            removed_at,
        });
    })?;
    let open = issues.iter().filter(|i| i.removed_at.is_none()).count();
    if open > 0 {
        diag.warn(format!(
            "{open} technical debt issues have no removal date; if the export drops removal dates of deleted files, debt stock is overstated"
        ));
    }
    Ok((issues, diag))
}

/// Feeds every non-blank line to `handle` after deserialising it. Lines that
/// are not valid JSON or lack required fields are rejected.
fn for_each_json_line<R, T, F>(
    reader: R,
    diag: &mut IngestDiagnostics,
    mut handle: F,
) -> Result<(), IngestError>
where
    R: BufRead,
    T: for<'de> Deserialize<'de>,
    F: FnMut(usize, T, &mut IngestDiagnostics),
{
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Read {
            path: PathBuf::from("<jsonl>"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        diag.records_read += 1;
        match serde_json::from_str::<T>(&line) {
            Ok(raw) => handle(line_no, raw, diag),
            Err(err) => diag.reject(format!("line {line_no}: {err}")),
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::Read {
            path: path.to_path_buf(),
            source,
        })
}

fn read_to_string(path: &Path) -> Result<String, IngestError> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|source| IngestError::Read {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(text)
}

/// Reads `affiliations.json`: `[{canonical_id, team_id, start, end?}]`.
pub fn read_affiliations(path: &Path) -> Result<AffiliationTimeline, IngestError> {
    let memberships: Vec<Membership> =
        serde_json::from_str(&read_to_string(path)?).map_err(|source| IngestError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    AffiliationTimeline::new(memberships).map_err(|source| IngestError::Model {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads `aliases.json`: `{raw_email: canonical_id}`.
pub fn read_aliases(path: &Path) -> Result<AliasMap, IngestError> {
    serde_json::from_str(&read_to_string(path)?).map_err(|source| IngestError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Deserialize, Serialize)]
struct SizeRow {
    component_id: String,
    week: u32,
    loc: u64,
}

/// Reads `sizes.csv` (`component_id,week,loc`). Bad rows are rejected.
pub fn read_sizes<R: Read>(
    reader: R,
) -> Result<(Vec<SizeSnapshot>, IngestDiagnostics), IngestError> {
    let mut diag = IngestDiagnostics::default();
    let mut sizes = Vec::new();
    let mut seen = HashSet::new();
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    for (idx, row) in csv.deserialize::<SizeRow>().enumerate() {
        let row_no = idx + 2;
        diag.records_read += 1;
        let row = match row {
            Ok(row) => row,
            Err(err) => {
                diag.reject(format!("sizes row {row_no}: {err}"));
                continue;
            }
        };
        let Ok(week) = WeekIndex::new(row.week) else {
            diag.reject(format!("sizes row {row_no}: week must be at least 1"));
            continue;
        };
        if !seen.insert((row.component_id.clone(), week)) {
            diag.reject(format!(
                "sizes row {row_no}: duplicate size for {} week {week}",
                row.component_id
            ));
            continue;
        }
        sizes.push(SizeSnapshot {
            component_id: row.component_id,
            week,
            loc: row.loc,
        });
    }
    Ok((sizes, diag))
}

pub fn write_sizes<W: Write>(writer: W, sizes: &[SizeSnapshot]) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(writer);
    for size in sizes {
        csv.serialize(SizeRow {
            component_id: size.component_id.clone(),
            week: size.week.get(),
            loc: size.loc,
        })?;
    }
    csv.flush()?;
    Ok(())
}

/// Comment markers of one file kind.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CommentSyntax {
    #[serde(default)]
    pub line: Vec<String>,
    #[serde(default)]
    pub block: Vec<(String, String)>,
    /// Quote characters whose contents are never treated as comment markers.
    #[serde(default)]
    pub quotes: Vec<char>,
}

impl CommentSyntax {
    pub fn c_like() -> Self {
        Self {
            line: vec!["//".into()],
            block: vec![("/*".into(), "*/".into())],
            quotes: vec!['"', '\''],
        }
    }

    pub fn markup() -> Self {
        Self {
            line: Vec::new(),
            block: vec![("<!--".into(), "-->".into())],
            quotes: Vec::new(),
        }
    }

    pub fn hash() -> Self {
        Self {
            line: vec!["#".into()],
            block: Vec::new(),
            quotes: vec!['"', '\''],
        }
    }
}

/// Comment syntax per file extension. Files with an unknown extension count
/// every non-blank line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRules {
    pub by_extension: BTreeMap<String, CommentSyntax>,
}

impl Default for CommentRules {
    fn default() -> Self {
        let mut by_extension = BTreeMap::new();
        for ext in [
            "java", "kt", "scala", "c", "h", "cpp", "hpp", "cs", "js", "ts", "go", "rs", "swift",
        ] {
            by_extension.insert(ext.to_string(), CommentSyntax::c_like());
        }
        for ext in ["xml", "html", "xhtml", "xsd", "xsl", "pom"] {
            by_extension.insert(ext.to_string(), CommentSyntax::markup());
        }
        for ext in ["py", "sh", "rb", "yml", "yaml", "toml", "properties"] {
            by_extension.insert(ext.to_string(), CommentSyntax::hash());
        }
        Self { by_extension }
    }
}

impl CommentRules {
    pub fn syntax_for(&self, path: &Path) -> Option<&CommentSyntax> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        self.by_extension.get(&ext)
    }
}

/// Counts code lines of one source text: lines that are not blank and not
/// entirely inside comments.
pub fn count_code_lines(text: &str, syntax: Option<&CommentSyntax>) -> u64 {
    let Some(syntax) = syntax else {
        return text.lines().filter(|l| !l.trim().is_empty()).count() as u64;
    };
    let mut open_block: Option<&str> = None;
    let mut count = 0;
    for line in text.lines() {
        let mut rest = line;
        let mut has_code = false;
        while !rest.is_empty() {
            if let Some(end) = open_block {
                match rest.find(end) {
                    Some(pos) => {
                        rest = &rest[pos + end.len()..];
                        open_block = None;
                    }
                    None => rest = "",
                }
                continue;
            }
            rest = rest.trim_start();
            if rest.is_empty() || syntax.line.iter().any(|m| rest.starts_with(m.as_str())) {
                break;
            }
            if let Some((start, end)) = syntax
                .block
                .iter()
                .find(|(s, _)| rest.starts_with(s.as_str()))
            {
                rest = &rest[start.len()..];
                open_block = Some(end.as_str());
                continue;
            }
            has_code = true;
            let mut chars = rest.char_indices();
            let (_, first) = chars.next().expect("rest is non-empty");
            if syntax.quotes.contains(&first) {
                rest = skip_quoted(&rest[first.len_utf8()..], first);
            } else {
                rest = &rest[first.len_utf8()..];
            }
        }
        if has_code {
            count += 1;
        }
    }
    count
}

/// Returns the text after the closing `quote`, honouring backslash escapes.
/// An unterminated literal consumes the rest of the line.
fn skip_quoted(text: &str, quote: char) -> &str {
    let mut escaped = false;
    for (idx, c) in text.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == quote {
            return &text[idx + c.len_utf8()..];
        }
    }
    ""
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineCount {
    pub loc: u64,
    pub files: u64,
    pub diagnostics: IngestDiagnostics,
}

/// Counts code lines of every file under `root` whose root-relative path
/// matches `globs`. Unreadable files are skipped with a warning.
pub fn count_lines<S: AsRef<str>>(
    root: &Path,
    globs: &[S],
    rules: &CommentRules,
) -> Result<LineCount, IngestError> {
    let filter = PathFilter::new(globs)?;
    let mut result = LineCount::default();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = match entry {
            Ok(entry) => entry,
            Err(err) => {
                result
                    .diagnostics
                    .warn(format!("skipping unreadable entry: {err}"));
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let relative = entry.path().strip_prefix(root).unwrap_or(entry.path());
        if !filter.matches(relative) {
            continue;
        }
        match fs::read(entry.path()) {
            Ok(bytes) => {
                let text = String::from_utf8_lossy(&bytes);
                result.loc += count_code_lines(&text, rules.syntax_for(entry.path()));
                result.files += 1;
            }
            Err(err) => result.diagnostics.warn(format!(
                "skipping unreadable file {}: {err}",
                entry.path().display()
            )),
        }
    }
    Ok(result)
}

/// The validated, normalised record set written by `ingest` and read by
/// `analyze`. Records are kept sorted so that serialisation is
/// deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventStore {
    pub commits: Vec<CommitRecord>,
    pub pull_requests: Vec<PullRequestRecord>,
    pub tickets: Vec<TicketRecord>,
    pub td_issues: Vec<TdIssueRecord>,
    pub sizes: Vec<SizeSnapshot>,
    pub affiliations: AffiliationTimeline,
}

pub const STORE_COMMITS: &str = "commits.jsonl";
pub const STORE_PRS: &str = "prs.jsonl";
pub const STORE_TICKETS: &str = "tickets.jsonl";
pub const STORE_TD_ISSUES: &str = "td_issues.jsonl";
pub const STORE_SIZES: &str = "sizes.csv";
pub const STORE_AFFILIATIONS: &str = "affiliations.json";

impl EventStore {
    pub fn normalize(&mut self) {
        self.commits.sort_by(|a, b| {
            (&a.component_id, a.timestamp, &a.commit_hash).cmp(&(
                &b.component_id,
                b.timestamp,
                &b.commit_hash,
            ))
        });
        let by_item = |a: &WorkItemRecord, b: &WorkItemRecord| {
            (&a.component_id, a.created_at, &a.item_id).cmp(&(
                &b.component_id,
                b.created_at,
                &b.item_id,
            ))
        };
        self.pull_requests.sort_by(by_item);
        self.tickets.sort_by(by_item);
        self.td_issues.sort_by(|a, b| {
            (&a.component_id, a.introduced_at, &a.issue_id).cmp(&(
                &b.component_id,
                b.introduced_at,
                &b.issue_id,
            ))
        });
        self.sizes
            .sort_by(|a, b| (&a.component_id, a.week).cmp(&(&b.component_id, b.week)));
    }

    pub fn save(&self, dir: &Path) -> Result<(), IngestError> {
        let mut store = self.clone();
        store.normalize();
        fs::create_dir_all(dir).map_err(|source| IngestError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let write = |name: &str, bytes: Vec<u8>| {
            let path = dir.join(name);
            write_atomic(&path, &bytes).map_err(|source| IngestError::Write { path, source })
        };
        write(STORE_COMMITS, to_jsonl(&store.commits))?;
        write(STORE_PRS, to_jsonl(&store.pull_requests))?;
        write(STORE_TICKETS, to_jsonl(&store.tickets))?;
        write(STORE_TD_ISSUES, to_jsonl(&store.td_issues))?;
        let mut sizes = Vec::new();
        write_sizes(&mut sizes, &store.sizes).map_err(|source| IngestError::Csv {
            path: dir.join(STORE_SIZES),
            source,
        })?;
        write(STORE_SIZES, sizes)?;
        let mut affiliations =
            serde_json::to_vec_pretty(&store.affiliations).expect("affiliations serialise");
        affiliations.push(b'\n');
        write(STORE_AFFILIATIONS, affiliations)
    }

    /// Loads a store written by [`EventStore::save`]. Any invalid record is
    /// an error here: the store is expected to be pre-validated.
    pub fn load(dir: &Path) -> Result<Self, IngestError> {
        let sizes_path = dir.join(STORE_SIZES);
        let (sizes, diag) = read_sizes(open(&sizes_path)?)?;
        if diag.records_rejected > 0 {
            return Err(IngestError::Read {
                path: sizes_path,
                source: io::Error::new(io::ErrorKind::InvalidData, diag.warnings.join("; ")),
            });
        }
        Ok(Self {
            commits: from_jsonl(&dir.join(STORE_COMMITS))?,
            pull_requests: from_jsonl(&dir.join(STORE_PRS))?,
            tickets: from_jsonl(&dir.join(STORE_TICKETS))?,
            td_issues: from_jsonl(&dir.join(STORE_TD_ISSUES))?,
            sizes,
            affiliations: read_affiliations(&dir.join(STORE_AFFILIATIONS))?,
        })
    }

    pub fn component_ids(&self) -> BTreeSet<&str> {
        self.commits
            .iter()
            .map(|c| c.component_id.as_str())
            .collect()
    }
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).expect("records serialise");
        out.push(b'\n');
    }
    out
}

fn from_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IngestError> {
    let mut records = Vec::new();
    for line in open(path)?.lines() {
        let line = line.map_err(|source| IngestError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|source| IngestError::Json {
                path: path.to_path_buf(),
                source,
            })?,
        );
    }
    Ok(records)
}

/// Drops events dated before week 1 and counts them as rejected.
fn reject_before<T>(
    items: &mut Vec<T>,
    at: impl Fn(&T) -> DateTime<Utc>,
    start: DateTime<Utc>,
    what: &str,
    diag: &mut IngestDiagnostics,
) {
    let before = items.len();
    items.retain(|item| at(item) >= start);
    let dropped = before - items.len();
    if dropped > 0 {
        diag.records_rejected += dropped as u64;
        diag.warn(format!(
            "{dropped} {what} dated before the epoch ({}) rejected",
            start.date_naive()
        ));
    }
}

/// Locations of the raw exports of one run. A commit source (`git_log` or
/// `commits`) is required; everything else is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    /// Output of the documented `git log --numstat` invocation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub git_log: Option<PathBuf>,
    /// Commits as JSON Lines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commits: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tickets: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub td_issues: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliations: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aliases: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<PathBuf>,
}

impl InputPaths {
    /// Joins every relative path onto `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let join = |p: &Option<PathBuf>| {
            p.as_ref().map(|p| {
                if p.is_absolute() {
                    p.clone()
                } else {
                    base.join(p)
                }
            })
        };
        Self {
            git_log: join(&self.git_log),
            commits: join(&self.commits),
            prs: join(&self.prs),
            tickets: join(&self.tickets),
            td_issues: join(&self.td_issues),
            affiliations: join(&self.affiliations),
            aliases: join(&self.aliases),
            sizes: join(&self.sizes),
        }
    }
}

/// Parses every configured export into one normalised [`EventStore`].
///
/// Without a size table, components with a `repo_path` get the current
/// line count of their tree as a constant size for every week up to their
/// last commit.
pub fn ingest_inputs(
    inputs: &InputPaths,
    components: &[ComponentSpec],
    epoch: crate::model::Epoch,
) -> Result<(EventStore, IngestDiagnostics), IngestError> {
    if inputs.git_log.is_none() && inputs.commits.is_none() {
        return Err(IngestError::MissingInput("git_log or commits"));
    }
    let mut diag = IngestDiagnostics::default();
    let aliases = match &inputs.aliases {
        Some(path) => read_aliases(path)?,
        None => AliasMap::new(),
    };
    let affiliations = match &inputs.affiliations {
        Some(path) => read_affiliations(path)?,
        None => {
            diag.warn("no affiliation table: every author is unaffiliated");
            AffiliationTimeline::default()
        }
    };

    let mut store = EventStore {
        affiliations,
        ..EventStore::default()
    };
    for component in components {
        component.validate().map_err(|source| IngestError::Model {
            path: PathBuf::from(&component.component_id),
            source,
        })?;
        if let Some(path) = &inputs.git_log {
            let (commits, d) = parse_git_numstat(open(path)?, component, &aliases)?;
            store.commits.extend(commits);
            diag.merge(d);
        }
        if let Some(path) = &inputs.commits {
            let (commits, d) = parse_commits_jsonl(open(path)?, component, &aliases)?;
            store.commits.extend(commits);
            diag.merge(d);
        }
    }

    let known: BTreeSet<&str> = components.iter().map(|c| c.component_id.as_str()).collect();
    let ctx = LoadContext {
        aliases,
        default_component: match components {
            [only] => Some(only.component_id.clone()),
            _ => None,
        },
    };
    let sources = [
        (&inputs.prs, EventKind::Pr),
        (&inputs.tickets, EventKind::Ticket),
        (&inputs.td_issues, EventKind::TdIssue),
    ];
    for (path, kind) in sources {
        let Some(path) = path else { continue };
        let (batch, d) = load_events(path, kind, &ctx)?;
        diag.merge(d);
        let mut ignored = BTreeSet::new();
        let mut keep = |component: &str| {
            if known.contains(component) {
                return true;
            }
            ignored.insert(component.to_string());
            false
        };
        match batch {
            EventBatch::PullRequests(items) => store
                .pull_requests
                .extend(items.into_iter().filter(|i| keep(&i.component_id))),
            EventBatch::Tickets(items) => store
                .tickets
                .extend(items.into_iter().filter(|i| keep(&i.component_id))),
            EventBatch::TdIssues(items) => store
                .td_issues
                .extend(items.into_iter().filter(|i| keep(&i.component_id))),
        }
        for component in ignored {
            diag.warn(format!(
                "{}: records of unconfigured component {component:?} ignored",
                path.display()
            ));
        }
    }

    let start = WeekIndex::new(1).expect("week 1").start(epoch);
    reject_before(
        &mut store.commits,
        |c| c.timestamp,
        start,
        "commits",
        &mut diag,
    );
    reject_before(
        &mut store.pull_requests,
        |i| i.created_at,
        start,
        "pull requests",
        &mut diag,
    );
    reject_before(
        &mut store.tickets,
        |i| i.created_at,
        start,
        "tickets",
        &mut diag,
    );

    match &inputs.sizes {
        Some(path) => {
            let (sizes, d) = read_sizes(open(path)?)?;
            diag.merge(d);
            store.sizes = sizes
                .into_iter()
                .filter(|s| known.contains(s.component_id.as_str()))
                .collect();
        }
        None => {
            let rules = CommentRules::default();
            for component in components {
                let Some(root) = &component.repo_path else {
                    diag.warn(format!(
                        "{}: no sizes table and no repo_path, TDD cannot be computed",
                        component.component_id
                    ));
                    continue;
                };
                let count = count_lines(root, &component.path_globs, &rules)?;
                diag.merge(count.diagnostics);
                let last = store
                    .commits
                    .iter()
                    .filter(|c| c.component_id == component.component_id)
                    .filter_map(|c| crate::model::week_of(&c.timestamp, epoch).ok())
                    .max();
                diag.warn(format!(
                    "{}: no sizes table, using the current tree size ({} lines) for every week",
                    component.component_id, count.loc
                ));
                for week in 1..=last.map_or(0, WeekIndex::get) {
                    store.sizes.push(SizeSnapshot {
                        component_id: component.component_id.clone(),
                        week: WeekIndex::new(week).expect("week starts at 1"),
                        loc: count.loc,
                    });
                }
            }
        }
    }
    store.normalize();
    Ok((store, diag))
}
