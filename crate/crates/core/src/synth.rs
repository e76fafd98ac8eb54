//! Synthetic scenario generator and brute-force oracles.
//!
//! Randomness comes from SplitMix64 so that a seed reproduces the same
//! fileset byte for byte on any platform.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;
use crate::ingest::{
    to_jsonl, write_sizes, InputPaths, RawCommit, RawFileChange, RawTdIssue, RawWorkItem,
    STORE_AFFILIATIONS, STORE_COMMITS, STORE_PRS, STORE_SIZES, STORE_TD_ISSUES, STORE_TICKETS,
};
use crate::model::{
    ComponentSpec, Epoch, Membership, Ownership, SizeSnapshot, SplitEvent, WeekIndex,
};
use crate::stats::StatsError;

/// SplitMix64 (Steele, Lea and Flood). `next_u64` advances the state by the
/// golden-ratio increment and mixes it.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        // Lemire's multiply-shift; the bias is below 2^-40 for our bounds.
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Knuth's multiplication method; adequate for the small means used here.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let limit = (-mean).exp();
        let mut k = 0;
        let mut product = self.next_f64();
        while product > limit {
            k += 1;
            product *= self.next_f64();
        }
        k
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Mean number of events per week in each channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRates {
    pub commits: f64,
    pub prs: f64,
    pub tickets: f64,
}

impl Default for EventRates {
    fn default() -> Self {
        Self {
            commits: 8.0,
            prs: 3.0,
            tickets: 2.0,
        }
    }
}

fn default_component() -> String {
    "C1".to_string()
}

fn default_developers() -> usize {
    4
}

fn default_loc() -> u64 {
    100_000
}

fn default_td_minutes() -> f64 {
    20_000.0
}

fn default_share_range() -> (f64, f64) {
    (0.1, 0.95)
}

/// Parameters of one synthetic component history.
///
/// The owning team's expected share of every event is drawn uniformly from
/// `owner_share` each week. The open TD stock of week `w` is then set to
/// `base_td_minutes * (1 + (-beta * (degree - 50) / 50 + noise) / 2)` where
/// `degree` is the realised contribution degree of that week and `noise` is
/// normal with standard deviation `noise_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub weeks: u32,
    pub teams: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_week: Option<u32>,
    pub coupling_before: f64,
    #[serde(default)]
    pub coupling_after: f64,
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default)]
    pub event_rates: EventRates,
    #[serde(default = "default_component")]
    pub component_id: String,
    #[serde(default)]
    pub epoch: Epoch,
    #[serde(default = "default_developers")]
    pub developers_per_team: usize,
    #[serde(default = "default_loc")]
    pub loc: u64,
    #[serde(default = "default_td_minutes")]
    pub base_td_minutes: f64,
    #[serde(default = "default_share_range")]
    pub owner_share: (f64, f64),
}

impl Scenario {
    pub fn new(seed: u64, weeks: u32, coupling: f64) -> Self {
        Self {
            seed,
            weeks,
            teams: vec!["blue".into(), "red".into()],
            split_week: None,
            coupling_before: coupling,
            coupling_after: coupling,
            noise_scale: 0.0,
            event_rates: EventRates::default(),
            component_id: default_component(),
            epoch: Epoch::default(),
            developers_per_team: default_developers(),
            loc: default_loc(),
            base_td_minutes: default_td_minutes(),
            owner_share: default_share_range(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |msg: String| Err(SynthError::Invalid(msg));
        if self.weeks == 0 {
            return invalid("weeks must be at least 1".into());
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return invalid(format!(
                "noise_scale must be finite and non-negative, got {}",
                self.noise_scale
            ));
        }
        let rates = self.event_rates;
        for (name, rate) in [
            ("commits", rates.commits),
            ("prs", rates.prs),
            ("tickets", rates.tickets),
        ] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return invalid(format!(
                    "event rate {name} must be finite and non-negative, got {rate}"
                ));
            }
            if rate > 500.0 {
                return invalid(format!("event rate {name} = {rate} is too large"));
            }
        }
        if !self.coupling_before.is_finite() || !self.coupling_after.is_finite() {
            return invalid("couplings must be finite".into());
        }
        if self.teams.len() < 2 {
            return invalid("at least two teams are needed".into());
        }
        let mut names: Vec<&String> = self.teams.iter().collect();
        names.sort();
        names.dedup();
        if names.len() != self.teams.len() || self.teams.iter().any(|t| t.trim().is_empty()) {
            return invalid("team names must be distinct and non-empty".into());
        }
        if self.developers_per_team < 2 {
            return invalid("developers_per_team must be at least 2".into());
        }
        if let Some(split) = self.split_week {
            if split < 2 || split > self.weeks {
                return invalid(format!("split_week must lie in 2..={}", self.weeks));
            }
            if self.teams.len() < 3 {
                return invalid("a split needs a third team to absorb half of the owners".into());
            }
        }
        if self.loc == 0 {
            return invalid("loc must be positive".into());
        }
        if !(self.base_td_minutes > 0.0 && self.base_td_minutes.is_finite()) {
            return invalid("base_td_minutes must be positive".into());
        }
        let (low, high) = self.owner_share;
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low > high {
            return invalid("owner_share must be an ordered range within [0, 1]".into());
        }
        if self.component_id.trim().is_empty() {
            return invalid("component_id must not be empty".into());
        }
        Ok(())
    }
}

/// Configuration written next to a generated fileset; readable by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilesetConfig {
    pub epoch: Epoch,
    pub components: Vec<ComponentSpec>,
    pub inputs: InputPaths,
}

pub const FILE_ALIASES: &str = "aliases.json";
pub const FILE_CONFIG: &str = "config.json";

/// Files of one generated scenario, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct Fileset {
    pub files: Vec<(String, Vec<u8>)>,
    /// Realised contribution degree and planted TD stock per week.
    pub truth: Vec<WeekTruth>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeekTruth {
    pub week: WeekIndex,
    pub degree: f64,
    pub td_minutes: f64,
}

impl Fileset {
    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir).map_err(|source| SynthError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            write_atomic(&path, bytes).map_err(|source| SynthError::Write { path, source })?;
        }
        Ok(())
    }
}

struct Developer {
    canonical: String,
    name: String,
    emails: Vec<String>,
}

/// Team of every developer before and after the split.
struct Roster {
    developers: Vec<Developer>,
    before: Vec<usize>,
    after: Vec<usize>,
}

impl Roster {
    fn build(s: &Scenario) -> Self {
        let mut developers = Vec::new();
        let mut before = Vec::new();
        let mut after = Vec::new();
        for (t, team) in s.teams.iter().enumerate() {
            for d in 0..s.developers_per_team {
                let canonical = format!("{team}{}", d + 1);
                let mut emails = vec![format!("{canonical}@example.com")];
                if d == 0 {
                    // One alias per team exercises identity merging.
                    emails.push(format!("{}.{team}@users.example.org", d + 1));
                }
                developers.push(Developer {
                    name: format!("Dev {team} {}", d + 1),
                    canonical,
                    emails,
                });
                before.push(t);
                // The first team dissolves at the split: its members
                // alternate between the second and third teams.
                after.push(if t == 0 { 1 + d % 2 } else { t });
            }
        }
        Self {
            developers,
            before,
            after,
        }
    }

    fn team_at(&self, dev: usize, post_split: bool) -> usize {
        if post_split {
            self.after[dev]
        } else {
            self.before[dev]
        }
    }
}

fn iso(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Per-channel owner and total weights of one week.
#[derive(Default)]
struct Tally {
    owner: f64,
    total: f64,
}

impl Tally {
    fn add(&mut self, owned: bool, weight: f64) {
        self.total += weight;
        if owned {
            self.owner += weight;
        }
    }

    fn share(&self) -> Option<f64> {
        (self.total > 0.0).then(|| self.owner / self.total * 100.0)
    }
}

/// Generates the full input fileset of `s`: commits, pull requests,
/// tickets, TD issues, affiliations, aliases, sizes and a run config.
pub fn generate_scenario(s: &Scenario) -> Result<Fileset, SynthError> {
    s.validate()?;
    let mut rng = SplitMix64::new(s.seed);
    let roster = Roster::build(s);
    let epoch = s.epoch;
    let split_date = s.split_week.map(|w| {
        WeekIndex::new(w)
            .expect("validated")
            .start(epoch)
            .date_naive()
    });

    let mut commits = Vec::new();
    let mut prs = Vec::new();
    let mut tickets = Vec::new();
    let mut issues: Vec<RawTdIssue> = Vec::new();
    let mut open: Vec<(usize, f64)> = Vec::new();
    let mut stock_quarters: u64 = 0;
    let mut truth = Vec::new();

    for w in 1..=s.weeks {
        let week = WeekIndex::new(w).expect("w >= 1");
        let start = week.start(epoch);
        let post_split = s.split_week.is_some_and(|split| w >= split);
        let owner_team = if post_split { 1 } else { 0 };
        let share = rng.uniform(s.owner_share.0, s.owner_share.1);

        let pick = |rng: &mut SplitMix64| -> (usize, bool) {
            let owned = rng.next_f64() < share;
            let pool: Vec<usize> = (0..roster.developers.len())
                .filter(|&d| (roster.team_at(d, post_split) == owner_team) == owned)
                .collect();
            (pool[rng.below(pool.len() as u64) as usize], owned)
        };
        let at = |rng: &mut SplitMix64| start + Duration::seconds(rng.below(7 * 86_400) as i64);
        let email = |rng: &mut SplitMix64, dev: &Developer| {
            dev.emails[rng.below(dev.emails.len() as u64) as usize].clone()
        };

        let (mut c, mut ch, mut p, mut t) = (
            Tally::default(),
            Tally::default(),
            Tally::default(),
            Tally::default(),
        );
        let n_commits = rng.poisson(s.event_rates.commits).max(1);
        for i in 0..n_commits {
            let (dev, owned) = pick(&mut rng);
            let additions = 1 + rng.below(120);
            let deletions = rng.below(60);
            let mut files = vec![RawFileChange {
                path: format!(
                    "src/main/java/{}/File{}.java",
                    s.component_id,
                    rng.below(40)
                ),
                additions: Some(additions),
                deletions: Some(deletions),
            }];
            if rng.below(4) == 0 {
                files.push(RawFileChange {
                    path: "docs/notes.md".into(),
                    additions: Some(1 + rng.below(20)),
                    deletions: Some(0),
                });
            }
            c.add(owned, 1.0);
            ch.add(owned, (additions + deletions) as f64);
            let developer = &roster.developers[dev];
            commits.push(RawCommit {
                hash: format!("{:016x}{:08x}{:04x}", rng.next_u64(), w, i),
                author_name: developer.name.clone(),
                author_email: email(&mut rng, developer),
                timestamp: iso(at(&mut rng)),
                files,
                parents: None,
            });
        }
        for (rate, tally, out, prefix) in [
            (s.event_rates.prs, &mut p, &mut prs, "PR"),
            (s.event_rates.tickets, &mut t, &mut tickets, "T"),
        ] {
            for _ in 0..rng.poisson(rate) {
                let (dev, owned) = pick(&mut rng);
                tally.add(owned, 1.0);
                let developer = &roster.developers[dev];
                out.push(RawWorkItem {
                    item_id: format!("{prefix}-{}", out.len() + 1),
                    author_name: developer.name.clone(),
                    author_email: email(&mut rng, developer),
                    created_at: iso(at(&mut rng)),
                    component_id: Some(s.component_id.clone()),
                });
            }
        }
        let present: Vec<f64> = [c.share(), ch.share(), p.share(), t.share()]
            .into_iter()
            .flatten()
            .collect();
        let degree = present.iter().sum::<f64>() / present.len() as f64;

        let beta = if post_split {
            s.coupling_after
        } else {
            s.coupling_before
        };
        let noise = if s.noise_scale > 0.0 {
            s.noise_scale * rng.standard_normal()
        } else {
            0.0
        };
        let level = s.base_td_minutes * (1.0 + (-beta * (degree - 50.0) / 50.0 + noise) / 2.0);
        // Quarter minutes keep every partial sum exact.
        let target = (level.max(0.0) * 4.0).round() as u64;

        let removed_at =
            |rng: &mut SplitMix64| iso(start + Duration::seconds(rng.below(7 * 86_400) as i64));
        while stock_quarters > target {
            let (idx, minutes) = open.remove(0);
            issues[idx].removed_at = Some(removed_at(&mut rng));
            stock_quarters -= (minutes * 4.0) as u64;
        }
        if target > stock_quarters {
            let minutes = (target - stock_quarters) as f64 / 4.0;
            issues.push(RawTdIssue {
                issue_id: format!("TD-{}", issues.len() + 1),
                component_id: Some(s.component_id.clone()),
                remediation_minutes: minutes,
                introduced_at: iso(at(&mut rng)),
                removed_at: None,
            });
            open.push((issues.len() - 1, minutes));
            stock_quarters = target;
        }
        truth.push(WeekTruth {
            week,
            degree,
            td_minutes: stock_quarters as f64 / 4.0,
        });
    }

    let mut memberships = Vec::new();
    for (d, developer) in roster.developers.iter().enumerate() {
        let team = |t: usize| s.teams[t].clone();
        match split_date {
            Some(date) if roster.before[d] != roster.after[d] => {
                memberships.push(Membership {
                    canonical_id: developer.canonical.clone(),
                    team_id: team(roster.before[d]),
                    start: epoch.date(),
                    end: Some(date),
                });
                memberships.push(Membership {
                    canonical_id: developer.canonical.clone(),
                    team_id: team(roster.after[d]),
                    start: date,
                    end: None,
                });
            }
            _ => memberships.push(Membership {
                canonical_id: developer.canonical.clone(),
                team_id: team(roster.before[d]),
                start: epoch.date(),
                end: None,
            }),
        }
    }
    let aliases: BTreeMap<String, String> = roster
        .developers
        .iter()
        .flat_map(|d| d.emails.iter().map(|e| (e.clone(), d.canonical.clone())))
        .collect();

    let mut component = ComponentSpec::new(s.component_id.clone());
    match split_date {
        Some(date) => {
            component.owner_timeline = vec![
                Ownership {
                    team_id: s.teams[0].clone(),
                    start: epoch.date(),
                    end: Some(date),
                },
                Ownership {
                    team_id: s.teams[1].clone(),
                    start: date,
                    end: None,
                },
            ];
            component.split_events = vec![SplitEvent {
                date,
                description: format!(
                    "{} split into {} and {}",
                    s.teams[0], s.teams[1], s.teams[2]
                ),
            }];
        }
        None => {
            component.owner_timeline = vec![Ownership {
                team_id: s.teams[0].clone(),
                start: epoch.date(),
                end: None,
            }]
        }
    }
    let config = FilesetConfig {
        epoch,
        components: vec![component],
        inputs: InputPaths {
            commits: Some(STORE_COMMITS.into()),
            prs: Some(STORE_PRS.into()),
            tickets: Some(STORE_TICKETS.into()),
            td_issues: Some(STORE_TD_ISSUES.into()),
            affiliations: Some(STORE_AFFILIATIONS.into()),
            aliases: Some(FILE_ALIASES.into()),
            sizes: Some(STORE_SIZES.into()),
            git_log: None,
        },
    };

    let sizes: Vec<SizeSnapshot> = (1..=s.weeks)
        .map(|w| SizeSnapshot {
            component_id: s.component_id.clone(),
            week: WeekIndex::new(w).expect("w >= 1"),
            loc: s.loc,
        })
        .collect();
    let mut sizes_csv = Vec::new();
    write_sizes(&mut sizes_csv, &sizes).expect("writing to memory");

    Ok(Fileset {
        files: vec![
            (STORE_COMMITS.into(), to_jsonl(&commits)),
            (STORE_PRS.into(), to_jsonl(&prs)),
            (STORE_TICKETS.into(), to_jsonl(&tickets)),
            (STORE_TD_ISSUES.into(), to_jsonl(&issues)),
            (STORE_AFFILIATIONS.into(), pretty(&memberships)),
            (FILE_ALIASES.into(), pretty(&aliases)),
            (STORE_SIZES.into(), sizes_csv),
            (FILE_CONFIG.into(), pretty(&config)),
        ],
        truth,
    })
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("in-memory values serialise");
    out.push(b'\n');
    out
}

/// Pair counts and tau-b by direct enumeration of all `n (n - 1) / 2` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteTau {
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in x (including pairs tied in both).
    pub ties_x: u64,
    /// Pairs tied in y (including pairs tied in both).
    pub ties_y: u64,
    pub tau_b: f64,
}

pub fn brute_force_tau(xs: &[f64], ys: &[f64]) -> Result<BruteTau, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooFew { needed: 2, got: n });
    }
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = xs[i] - xs[j];
            let dy = ys[i] - ys[j];
            if dx == 0.0 {
                ties_x += 1;
            }
            if dy == 0.0 {
                ties_y += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                if (dx > 0.0) == (dy > 0.0) {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as u64;
    if ties_x == n0 {
        return Err(StatsError::AllTied("x"));
    }
    if ties_y == n0 {
        return Err(StatsError::AllTied("y"));
    }
    let tau_b =
        (concordant as f64 - discordant as f64) / (((n0 - ties_x) * (n0 - ties_y)) as f64).sqrt();
    Ok(BruteTau {
        concordant,
        discordant,
        ties_x,
        ties_y,
        tau_b,
    })
}

/// Largest combined size [`permutation_mwu_p`] enumerates.
pub const PERMUTATION_MAX_TOTAL: usize = 14;

/// Exact two-sided Mann-Whitney p-value by enumerating every assignment of
/// the pooled values to a group of size `n1`. Ties are handled with mid-ranks
/// so this is the exact conditional p-value for tied data too.
pub fn permutation_mwu_p(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    let (n1, n2) = (xs.len(), ys.len());
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::Empty);
    }
    let n = n1 + n2;
    if n > PERMUTATION_MAX_TOTAL {
        return Err(StatsError::TooMany {
            limit: PERMUTATION_MAX_TOTAL,
            got: n,
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    // Doubled mid-ranks: 2 * rank is always an integer.
    let doubled: Vec<i64> = pooled
        .iter()
        .map(|v| {
            let below = pooled.iter().filter(|w| *w < v).count() as i64;
            let equal = pooled.iter().filter(|w| *w == v).count() as i64;
            2 * below + equal + 1
        })
        .collect();
    let offset = (n1 * (n1 + 1) + n1 * n2) as i64;
    // |2U - n1 n2| from the doubled rank sum of the first group.
    let centred = |rank_sum2: i64| (rank_sum2 - offset).abs();
    let observed = centred(doubled[..n1].iter().sum());
    let (mut extreme, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let sum: i64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| doubled[i])
            .sum();
        all += 1;
        if centred(sum) >= observed {
            extreme += 1;
        }
    }
    Ok(extreme as f64 / all as f64)
}

/// Open TD minutes at `week`, recomputed from scratch over every issue.
pub fn brute_force_td_stock(
    issues: &[crate::model::TdIssueRecord],
    week: WeekIndex,
    epoch: Epoch,
) -> f64 {
    let w = i64::from(week.get());
    let mut open: Vec<f64> = issues
        .iter()
        .filter(|i| {
            let opened = crate::model::week_number(&i.introduced_at, epoch);
            let closed = i.removed_at.map(|t| crate::model::week_number(&t, epoch));
            opened <= w && closed.is_none_or(|c| c > w)
        })
        .map(|i| i.remediation_minutes)
        .collect();
    open.sort_by(f64::total_cmp);
    open.iter().sum()
}

/// Outcome of one oracle-equivalence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestCheck {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    pub detail: String,
}

impl SelftestCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Cross-checks the fast statistics and metrics against the oracles above
/// on `instances` random inputs per check.
pub fn run_selftest(seed: u64, instances: usize) -> Vec<SelftestCheck> {
    let mut rng = SplitMix64::new(seed);
    let mut checks = Vec::new();

    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = 2 + rng.below(199) as usize;
        let levels = 1 + rng.below(12);
        let xs: Vec<f64> = (0..n).map(|_| rng.below(levels) as f64).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.below(levels) as f64).collect();
        match (
            crate::stats::kendall_tau_b(&xs, &ys),
            brute_force_tau(&xs, &ys),
        ) {
            (Ok(fast), Ok(slow)) => {
                let diff = (fast.tau_b - slow.tau_b).abs();
                worst = worst.max(diff);
                let counts = (fast.concordant, fast.discordant, fast.ties_x, fast.ties_y)
                    == (slow.concordant, slow.discordant, slow.ties_x, slow.ties_y);
                if diff > 1e-12 || !counts {
                    failures += 1;
                }
            }
            (Err(_), Err(_)) => {}
            _ => failures += 1,
        }
    }
    checks.push(SelftestCheck {
        name: "kendall tau-b vs pair enumeration".into(),
        instances,
        failures,
        detail: format!("max |tau difference| = {worst:e}"),
    });

    let mut failures = 0;
    for _ in 0..instances {
        let total = 2 + rng.below(11) as usize;
        let n1 = 1 + rng.below(total as u64 - 1) as usize;
        let mut values: Vec<f64> = (0..total)
            .map(|i| i as f64 + rng.next_f64() * 0.5)
            .collect();
        for i in (1..values.len()).rev() {
            values.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let (xs, ys) = values.split_at(n1);
        let exact = crate::stats::mann_whitney_u(xs, ys).map(|r| r.p_value);
        if exact.ok() != permutation_mwu_p(xs, ys).ok() {
            failures += 1;
        }
    }
    checks.push(SelftestCheck {
        name: "mann-whitney exact p vs permutation enumeration".into(),
        instances,
        failures,
        detail: "tie-free samples, n1 + n2 <= 12".into(),
    });

    let mut failures = 0;
    let epoch = Epoch::default();
    for case in 0..instances {
        let count = rng.below(200) as usize;
        let issues: Vec<crate::model::TdIssueRecord> = (0..count)
            .map(|i| {
                let intro = 1 + rng.below(150) as u32;
                let introduced_at = WeekIndex::new(intro).expect("positive").start(epoch)
                    + Duration::minutes(rng.below(10_080) as i64);
                let removed_at = (rng.below(3) > 0).then(|| {
                    introduced_at + Duration::minutes(1 + rng.below(60 * 24 * 7 * 40) as i64)
                });
                crate::model::TdIssueRecord {
                    component_id: "C".into(),
                    issue_id: format!("{case}-{i}"),
                    remediation_minutes: rng.below(4000) as f64 / 4.0,
                    introduced_at,
                    removed_at,
                }
            })
            .collect();
        let weeks: std::collections::BTreeSet<WeekIndex> = (1..=200)
            .map(|w| WeekIndex::new(w).expect("positive"))
            .collect();
        let incremental = crate::metrics::td_stock(&issues, &weeks, epoch);
        if incremental
            .iter()
            .any(|(w, v)| *v != brute_force_td_stock(&issues, *w, epoch))
        {
            failures += 1;
        }
    }
    checks.push(SelftestCheck {
        name: "incremental TD stock vs per-week rescan".into(),
        instances,
        failures,
        detail: "quarter-minute remediation times, 200 weeks".into(),
    });
    checks
}

/// One line per check, `PASS`/`FAIL` first.
pub fn format_selftest(checks: &[SelftestCheck]) -> String {
    let mut out = String::new();
    for check in checks {
        let _ = writeln!(
            out,
            "{} {} ({} instances, {} failures; {})",
            if check.passed() { "PASS" } else { "FAIL" },
            check.name,
            check.instances,
            check.failures,
            check.detail
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 1234567 from the reference C implementation.
        let mut rng = SplitMix64::new(1234567);
        assert_eq!(rng.next_u64(), 6457827717110365317);
        assert_eq!(rng.next_u64(), 3203168211198807973);
        assert_eq!(rng.next_u64(), 9817491932198370423);
    }

    #[test]
    fn poisson_mean_is_close() {
        let mut rng = SplitMix64::new(9);
        let draws: u64 = (0..20_000).map(|_| rng.poisson(3.0)).sum();
        let mean = draws as f64 / 20_000.0;
        assert!((mean - 3.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn brute_tau_hand_example() {
        let r = brute_force_tau(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(
            (r.concordant, r.discordant, r.ties_x, r.ties_y),
            (5, 0, 1, 0)
        );
        assert!((r.tau_b - 5.0 / 30f64.sqrt()).abs() < 1e-15);
        assert!(brute_force_tau(&[1.0, 2.0], &[3.0, 1.0]).unwrap().tau_b == -1.0);
        assert!(matches!(
            brute_force_tau(&[2.0, 2.0], &[1.0, 3.0]),
            Err(StatsError::AllTied("x"))
        ));
    }

    #[test]
    fn permutation_examples() {
        assert_eq!(
            permutation_mwu_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(),
            0.1
        );
        assert_eq!(
            permutation_mwu_p(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
        let big = [0.0; 8];
        assert!(matches!(
            permutation_mwu_p(&big, &big[..7]),
            Err(StatsError::TooMany { .. })
        ));
    }

    #[test]
    fn scenario_validation() {
        let mut s = Scenario::new(1, 10, 0.5);
        assert!(s.validate().is_ok());
        s.event_rates.prs = -1.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::new(1, 10, 0.5);
        s.split_week = Some(5);
        assert!(s.validate().is_err(), "split needs three teams");
        s.teams.push("green".into());
        assert!(s.validate().is_ok());
        s.noise_scale = -0.1;
        assert!(s.validate().is_err());
        assert!(Scenario::new(1, 0, 0.0).validate().is_err());
    }

    #[test]
    fn deterministic_filesets() {
        let mut s = Scenario::new(42, 30, 0.8);
        s.teams.push("green".into());
        s.split_week = Some(15);
        s.noise_scale = 0.05;
        let a = generate_scenario(&s).unwrap();
        let b = generate_scenario(&s).unwrap();
        assert_eq!(a, b);
        s.seed = 43;
        assert_ne!(generate_scenario(&s).unwrap().files, a.files);
    }

    #[test]
    fn noiseless_coupling_is_strictly_monotone() {
        let s = Scenario::new(5, 60, 0.8);
        let fileset = generate_scenario(&s).unwrap();
        let mut truth = fileset.truth.clone();
        truth.sort_by(|a, b| a.degree.total_cmp(&b.degree));
        for pair in truth.windows(2) {
            if pair[0].degree < pair[1].degree {
                assert!(pair[0].td_minutes >= pair[1].td_minutes);
            }
        }
        let degrees: Vec<f64> = fileset.truth.iter().map(|t| t.degree).collect();
        let stock: Vec<f64> = fileset.truth.iter().map(|t| t.td_minutes).collect();
        let tau = brute_force_tau(&degrees, &stock).unwrap().tau_b;
        assert!(tau < -0.999, "{tau}");
    }
}
