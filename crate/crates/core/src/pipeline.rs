//! File-to-file pipeline stages.
//!
//! Each stage reads its inputs from disk, writes its artifacts into an output
//! directory and returns the written paths. [`run_all`] chains the stages
//! through the same files, so its artifacts are identical to running the
//! stages one by one with the same configuration.
//!
//! Stage seeds are `derive_seed(config.seed, "<stage>", 0)`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::chimera::{build_chimera, embed_problem, find_embedding};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::event::{generate_event, load_event, save_event, EventGenConfig};
use crate::ising::{
    ising_from_text, load_ising, qubo_from_text, qubo_to_ising, save_ising, save_qubo, ising_to_qubo,
};
use crate::metrics::{active_segments, emit_report, score_segments, score_tracks, MatchRule, ReportPaths};
use crate::network::{extract_tracks, NeuronNetwork};
use crate::seed::derive_seed;
use crate::segments::{build_segments, segments_to_json};
use crate::solvers::{solve_ising, solve_qubo, Method, SolveResult};

pub const EVENT_FILE: &str = "event.json";
pub const SEGMENTS_FILE: &str = "segments.json";
pub const NETWORK_FILE: &str = "network.ising";
pub const QUBO_FILE: &str = "network.qubo";
pub const RESULT_FILE: &str = "result.json";
pub const EMBEDDING_FILE: &str = "embedding.json";
pub const PHYSICAL_FILE: &str = "physical.ising";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents)?;
    Ok(path)
}

pub fn generate(config: &RunConfig, out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let gen = EventGenConfig {
        seed: derive_seed(config.seed, "generate", 0),
        ..config.generator.clone()
    };
    let event = generate_event(&gen, &config.geometry)?;
    let path = out.join(EVENT_FILE);
    save_event(&event, &path)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkPaths {
    pub ising: PathBuf,
    pub segments: PathBuf,
}

/// Builds the segment network of an event and exports it as an Ising problem.
///
/// Neuron `a` is spin `a`; the activation encoding is `v = (1 + s) / 2`. The
/// constant dropped by the export does not affect minimizers.
pub fn build_net(event_path: &Path, config: &RunConfig, out: &Path) -> Result<NetworkPaths> {
    ensure_dir(out)?;
    let event = load_event(event_path)?;
    let segments = build_segments(&event, &config.cuts)?;
    let net = NeuronNetwork::from_segments(&segments, &config.dp, config.cuts.max_kink_angle)?;
    let (ising, _offset) = qubo_to_ising(&net.to_qubo());
    let paths = NetworkPaths {
        ising: out.join(NETWORK_FILE),
        segments: out.join(SEGMENTS_FILE),
    };
    save_ising(&ising, &paths.ising)?;
    fs::write(&paths.segments, segments_to_json(&event, &segments))?;
    Ok(paths)
}

pub fn to_qubo(ising_path: &Path, out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let p = load_ising(ising_path)?;
    let path = out.join(QUBO_FILE);
    save_qubo(&ising_to_qubo(&p), &path)?;
    Ok(path)
}

/// A problem file in either text format, told apart by its header keyword.
pub enum ProblemFile {
    Ising(crate::ising::IsingProblem),
    Qubo(crate::ising::QuboProblem),
}

pub fn load_problem(path: &Path) -> Result<ProblemFile> {
    let text = fs::read_to_string(path)?;
    let header = text
        .lines()
        .map(|l| l.split_once('#').map_or(l, |(b, _)| b).trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    match header.split_whitespace().next() {
        Some("ising") => Ok(ProblemFile::Ising(ising_from_text(&text)?)),
        Some("qubo") => Ok(ProblemFile::Qubo(qubo_from_text(&text)?)),
        _ => Err(Error::parse_line(1, "expected an 'ising' or 'qubo' header")),
    }
}

pub fn solve(problem_path: &Path, method: Method, config: &RunConfig, out: &Path) -> Result<PathBuf> {
    ensure_dir(out)?;
    let mut solver = config.solver.clone();
    solver.set_seed(derive_seed(config.seed, "solve", 0));
    let result = match load_problem(problem_path)? {
        ProblemFile::Ising(p) => solve_ising(&p, method, &solver)?,
        ProblemFile::Qubo(q) => solve_qubo(&q, method, &solver)?,
    };
    write(out.join(RESULT_FILE), &result.to_json())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedPaths {
    pub embedding: PathBuf,
    pub physical: PathBuf,
}

pub fn embed(ising_path: &Path, grid_n: usize, out: &Path) -> Result<EmbedPaths> {
    ensure_dir(out)?;
    let p = load_ising(ising_path)?;
    let graph = build_chimera(grid_n)?;
    let embedding = find_embedding(&p, &graph)?;
    let physical = embed_problem(&p, &embedding, &graph)?;
    let paths = EmbedPaths {
        embedding: out.join(EMBEDDING_FILE),
        physical: out.join(PHYSICAL_FILE),
    };
    embedding.save(&paths.embedding)?;
    save_ising(&physical.problem, &paths.physical)?;
    Ok(paths)
}

/// Scores a solve result against the event truth.
///
/// The segment list is rebuilt from the event with the configured cuts, so
/// the result must come from a network built with the same cuts.
pub fn evaluate(result_path: &Path, event_path: &Path, config: &RunConfig, out: &Path) -> Result<ReportPaths> {
    ensure_dir(out)?;
    let result = SolveResult::from_json(&fs::read_to_string(result_path)?)?;
    let event = load_event(event_path)?;
    let segments = build_segments(&event, &config.cuts)?;
    if result.n != segments.len() {
        return Err(Error::contract(format!(
            "result has {} variables but the event yields {} segments",
            result.n,
            segments.len()
        )));
    }
    let state = result.binary_state()?;
    let (seg_score, track_score) = match &event.truth {
        Some(truth) => {
            let found = active_segments(&state, &segments)?;
            let candidates = extract_tracks(&state, &segments)?;
            (
                Some(score_segments(&found, &event)?),
                Some(score_tracks(&candidates, truth, &MatchRule::default())),
            )
        }
        None => (None, None),
    };
    emit_report(seg_score, track_score, std::slice::from_ref(&result), out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub event: PathBuf,
    pub network: NetworkPaths,
    pub qubo: PathBuf,
    pub result: PathBuf,
    pub embedding: Option<EmbedPaths>,
    pub report: ReportPaths,
}

pub fn run_all(config: &RunConfig, out: &Path) -> Result<RunPaths> {
    let event = generate(config, out)?;
    let network = build_net(&event, config, out)?;
    let qubo = to_qubo(&network.ising, out)?;
    let result = solve(&network.ising, config.method, config, out)?;
    let embedding = config
        .chimera_grid
        .map(|n| embed(&network.ising, n, out))
        .transpose()?;
    let report = evaluate(&result, &event, config, out)?;
    Ok(RunPaths {
        event,
        network,
        qubo,
        result,
        embedding,
        report,
    })
}
