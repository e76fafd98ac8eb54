//! Builds a small repository with a merge and parses real `git log` output.

use std::path::Path;
use std::process::Command;

use ocam::ingest::parse_git_numstat;
use ocam::ingest::EventStore;
use ocam::metrics::{build_weekly_series, MetricsConfig};
use ocam::model::{AliasMap, ComponentSpec, Ownership, SizeSnapshot, WeekIndex};

const PRETTY: &str = "--pretty=format:@%H|%an|%ae|%ad|%P";

fn git(dir: &Path, args: &[&str], date: &str) -> String {
    let out = Command::new("git")
        .args(args)
        .current_dir(dir)
        .env("GIT_AUTHOR_DATE", date)
        .env("GIT_COMMITTER_DATE", date)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("HOME", dir)
        .output()
        .expect("git is installed");
    assert!(
        out.status.success(),
        "git {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn commit(dir: &Path, who: (&str, &str), file: &str, lines: usize, date: &str) {
    std::fs::write(dir.join(file), "x\n".repeat(lines)).unwrap();
    git(dir, &["add", file], date);
    git(
        dir,
        &[
            "-c",
            &format!("user.name={}", who.0),
            "-c",
            &format!("user.email={}", who.1),
            "commit",
            "-q",
            "-m",
            file,
        ],
        date,
    );
}

fn fixture_repo() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let date = "2020-01-07T10:00:00+00:00";
    git(dir, &["init", "-q", "-b", "main"], date);
    commit(dir, ("Ann", "ann@x.com"), "A.java", 10, date);
    git(dir, &["checkout", "-q", "-b", "feature"], date);
    commit(
        dir,
        ("Bob", "bob@x.com"),
        "B.java",
        4,
        "2020-01-14T10:00:00+00:00",
    );
    git(dir, &["checkout", "-q", "main"], date);
    commit(
        dir,
        ("Ann", "ann@x.com"),
        "notes.md",
        7,
        "2020-01-15T10:00:00+00:00",
    );
    let merge_date = "2020-01-28T10:00:00+00:00";
    git(
        dir,
        &[
            "-c",
            "user.name=Ann",
            "-c",
            "user.email=ann@x.com",
            "merge",
            "-q",
            "--no-ff",
            "-m",
            "merge",
            "feature",
        ],
        merge_date,
    );
    tmp
}

fn component() -> ComponentSpec {
    let mut spec = ComponentSpec::new("C1");
    spec.owner_timeline.push(Ownership {
        team_id: "blue".into(),
        start: "2020-01-06".parse().unwrap(),
        end: None,
    });
    spec
}

#[test]
fn merges_change_counts_only_when_included() {
    let repo = fixture_repo();
    let date = "2020-02-01T00:00:00+00:00";
    let without = git(
        repo.path(),
        &[
            "log",
            "--numstat",
            "--no-merges",
            "--date=iso-strict",
            PRETTY,
        ],
        date,
    );
    let with = git(
        repo.path(),
        &[
            "log",
            "--numstat",
            "--diff-merges=first-parent",
            "--date=iso-strict",
            PRETTY,
        ],
        date,
    );

    let spec = component();
    let (plain, diag) = parse_git_numstat(without.as_bytes(), &spec, &AliasMap::new()).unwrap();
    assert_eq!(diag.records_rejected, 0);
    // notes.md is outside the globs, so that commit is dropped.
    assert_eq!(plain.len(), 2);
    assert!(plain.iter().all(|c| !c.is_merge));
    assert_eq!(plain.iter().map(|c| c.churn()).sum::<u64>(), 14);

    let (merged, _) = parse_git_numstat(with.as_bytes(), &spec, &AliasMap::new()).unwrap();
    assert_eq!(merged.len(), 3);
    let merge = merged
        .iter()
        .find(|c| c.is_merge)
        .expect("merge commit parsed");
    assert_eq!((merge.additions, merge.deletions), (4, 0));
    assert_eq!(merge.author, "ann@x.com");

    let store = EventStore {
        commits: merged,
        sizes: (1..=5)
            .map(|w| SizeSnapshot {
                component_id: "C1".into(),
                week: WeekIndex::new(w).unwrap(),
                loc: 100,
            })
            .collect(),
        ..EventStore::default()
    };
    let default = build_weekly_series(&spec, &store, &MetricsConfig::default()).unwrap();
    let weeks: Vec<u32> = default.active_weeks.iter().map(|w| w.get()).collect();
    assert_eq!(weeks, vec![1, 2]);
    let included = MetricsConfig {
        include_merges: true,
        ..MetricsConfig::default()
    };
    let build = build_weekly_series(&spec, &store, &included).unwrap();
    let weeks: Vec<u32> = build.active_weeks.iter().map(|w| w.get()).collect();
    assert_eq!(weeks, vec![1, 2, 4]);
}
