//! Reconstruction quality against generator truth, and report files.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, HitId, Truth};
use crate::ising::BinaryState;
use crate::network::TrackCandidate;
use crate::segments::SegmentSet;
use crate::solvers::{Method, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentScore {
    pub n_true: usize,
    pub n_found: usize,
    pub n_matched: usize,
    /// `None` when there are no true segments.
    pub efficiency: Option<f64>,
    /// `None` when nothing was found.
    pub purity: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Hit pairs of the active segments.
pub fn active_segments(state: &BinaryState, segments: &SegmentSet) -> Result<Vec<(HitId, HitId)>> {
    if state.len() != segments.len() {
        return Err(Error::contract(format!(
            "state has {} entries, segment set has {}",
            state.len(),
            segments.len()
        )));
    }
    Ok(segments
        .segments()
        .iter()
        .zip(state.as_slice())
        .filter(|(_, &on)| on == 1)
        .map(|(s, _)| (s.from_hit, s.to_hit))
        .collect())
}

fn truth_of(event: &Event) -> Result<&Truth> {
    event
        .truth
        .as_ref()
        .ok_or_else(|| Error::contract("event carries no truth record"))
}

/// A found segment is true iff its hits are consecutive in one truth track.
pub fn score_segments(found: &[(HitId, HitId)], event: &Event) -> Result<SegmentScore> {
    let truth = truth_of(event)?;
    let known: HashSet<HitId> = event.hits.iter().map(|h| h.id).collect();
    if let Some((a, b)) = found
        .iter()
        .find(|(a, b)| !known.contains(a) || !known.contains(b))
    {
        return Err(Error::contract(format!("segment ({a}, {b}) references a foreign hit")));
    }
    let true_segments = truth.true_segments();
    let found_set: HashSet<(HitId, HitId)> = found.iter().copied().collect();
    let n_matched = found_set.intersection(&true_segments).count();
    Ok(SegmentScore {
        n_true: true_segments.len(),
        n_found: found_set.len(),
        n_matched,
        efficiency: ratio(n_matched, true_segments.len()),
        purity: ratio(n_matched, found_set.len()),
    })
}

/// Double-majority thresholds for matching a candidate to a truth track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRule {
    /// Minimum fraction of the candidate's hits that belong to the track.
    pub min_candidate_fraction: f64,
    /// Minimum fraction of the track's hits contained in the candidate.
    pub min_track_fraction: f64,
}

impl Default for MatchRule {
    fn default() -> Self {
        MatchRule {
            min_candidate_fraction: 0.75,
            min_track_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackScore {
    /// Truth tracks with at least two hits.
    pub n_true: usize,
    pub n_found: usize,
    /// Candidates that match some truth track.
    pub n_matched_candidates: usize,
    /// Truth tracks matched by at least one candidate.
    pub n_matched_tracks: usize,
    pub efficiency: Option<f64>,
    pub purity: Option<f64>,
}

pub fn score_tracks(candidates: &[TrackCandidate], truth: &Truth, rule: &MatchRule) -> TrackScore {
    let tracks: Vec<_> = truth.tracks.iter().filter(|t| t.hit_ids.len() >= 2).collect();
    let owner: BTreeMap<HitId, usize> = tracks
        .iter()
        .enumerate()
        .flat_map(|(t, track)| track.hit_ids.iter().map(move |&h| (h, t)))
        .collect();

    let mut matched_tracks = HashSet::new();
    let mut matched_candidates = 0;
    for cand in candidates {
        if cand.hits.is_empty() {
            continue;
        }
        let mut shared: BTreeMap<usize, usize> = BTreeMap::new();
        for h in &cand.hits {
            if let Some(&t) = owner.get(h) {
                *shared.entry(t).or_default() += 1;
            }
        }
        let hit = shared.into_iter().find(|&(t, count)| {
            count as f64 >= rule.min_candidate_fraction * cand.hits.len() as f64
                && count as f64 >= rule.min_track_fraction * tracks[t].hit_ids.len() as f64
        });
        if let Some((t, _)) = hit {
            matched_candidates += 1;
            matched_tracks.insert(t);
        }
    }
    TrackScore {
        n_true: tracks.len(),
        n_found: candidates.len(),
        n_matched_candidates: matched_candidates,
        n_matched_tracks: matched_tracks.len(),
        efficiency: ratio(matched_tracks.len(), tracks.len()),
        purity: ratio(matched_candidates, candidates.len()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub best_energy: f64,
    pub restarts: usize,
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        SolveSummary {
            method: r.method,
            seed: r.seed,
            n: r.n,
            best_energy: r.best_energy,
            restarts: r.restart_energies.len(),
        }
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub segments: Option<SegmentScore>,
    pub tracks: Option<TrackScore>,
    pub solves: Vec<SolveSummary>,
}

pub const TRACE_HEADER: &str = "restart,step,temperature_or_gamma,best_energy";

pub fn trace_csv(results: &[SolveResult]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for row in results.iter().flat_map(|r| &r.trace) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.restart, row.step, row.temperature_or_gamma, row.best_energy
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub report: PathBuf,
    pub trace: PathBuf,
}

/// Writes `report.json` and `trace.csv` into `dir`.
pub fn emit_report(
    segments: Option<SegmentScore>,
    tracks: Option<TrackScore>,
    results: &[SolveResult],
    dir: &Path,
) -> Result<ReportPaths> {
    let report = Report {
        segments,
        tracks,
        solves: results.iter().map(SolveSummary::from).collect(),
    };
    let paths = ReportPaths {
        report: dir.join("report.json"),
        trace: dir.join("trace.csv"),
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    std::fs::write(&paths.report, json)?;
    std::fs::write(&paths.trace, trace_csv(results))?;
    Ok(paths)
}

pub fn load_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        Error::parse_record(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })
}
