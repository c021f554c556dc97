use std::fs;
use std::path::PathBuf;

use qtrack_core::config::RunConfig;
use qtrack_core::metrics::load_report;
use qtrack_core::pipeline::{run_all, EVENT_FILE};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/noiseless_3x5")
}

#[test]
fn noiseless_fixture_is_reconstructed_perfectly() {
    let config = RunConfig::load(&fixture_dir().join("run.ini")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let paths = run_all(&config, out.path()).unwrap();

    // the generator still reproduces the frozen event
    assert_eq!(
        fs::read(&paths.event).unwrap(),
        fs::read(fixture_dir().join(EVENT_FILE)).unwrap()
    );

    let report = load_report(&paths.report.report).unwrap();
    let segments = report.segments.unwrap();
    assert_eq!(segments.efficiency, Some(1.0));
    assert_eq!(segments.purity, Some(1.0));
    let tracks = report.tracks.unwrap();
    assert_eq!(tracks.n_true, 3);
    assert_eq!(tracks.n_matched_tracks, 3);
    assert_eq!(tracks.purity, Some(1.0));
}

#[test]
fn rerun_after_deleting_outputs_is_identical() {
    let config = RunConfig::load(&fixture_dir().join("run.ini")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let first = run_all(&config, out.path()).unwrap();
    let before = fs::read(&first.result).unwrap();
    for entry in fs::read_dir(out.path()).unwrap() {
        fs::remove_file(entry.unwrap().path()).unwrap();
    }
    let second = run_all(&config, out.path()).unwrap();
    assert_eq!(fs::read(&second.result).unwrap(), before);
}
