use ocam::ingest::ingest_inputs;
use ocam::metrics::{build_weekly_series, MetricsConfig};
use ocam::synth::{generate_scenario, FilesetConfig, Scenario, FILE_CONFIG};

fn scenario(weeks: u32) -> Scenario {
    let mut s = Scenario::new(11, weeks, 0.8);
    s.teams = vec!["blue".into(), "brown".into(), "green".into()];
    s.split_week = Some(weeks / 2);
    s.coupling_after = -0.8;
    s.noise_scale = 0.1;
    s
}

#[test]
fn ingested_fileset_reproduces_planted_values() {
    let s = scenario(122);
    let fileset = generate_scenario(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    fileset.write_to(dir.path()).unwrap();

    let config: FilesetConfig = serde_json::from_slice(fileset.get(FILE_CONFIG).unwrap()).unwrap();
    let (store, diag) = ingest_inputs(
        &config.inputs.resolved(dir.path()),
        &config.components,
        config.epoch,
    )
    .unwrap();
    assert_eq!(diag.records_rejected, 0, "{:?}", diag.warnings);
    assert!(diag.unknown_identities.is_empty());

    let build =
        build_weekly_series(&config.components[0], &store, &MetricsConfig::default()).unwrap();
    // Every synthetic week has at least one commit.
    assert_eq!(build.active_weeks.len(), 122);
    assert_eq!(build.series.len(), 122);
    for (obs, truth) in build.series.observations.iter().zip(&fileset.truth) {
        assert_eq!(obs.week, truth.week);
        assert!(
            (obs.contribution.degree - truth.degree).abs() < 1e-9,
            "week {}",
            obs.week
        );
        assert_eq!(obs.tdd.td_minutes, truth.td_minutes, "week {}", obs.week);
        assert_eq!(obs.tdd.loc, s.loc);
    }
}

#[test]
fn written_filesets_are_byte_identical() {
    let s = scenario(40);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_scenario(&s).unwrap().write_to(a.path()).unwrap();
    generate_scenario(&s).unwrap().write_to(b.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for name in names {
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap()
        );
    }
}
