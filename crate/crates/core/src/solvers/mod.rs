//! Ground-state solvers for Ising and QUBO problems.

mod brute;
mod sa;
mod sqa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force, MAX_BRUTE_FORCE_SPINS};
pub use sa::{simulated_anneal, AnnealSchedule, MetropolisChain};
pub use sqa::{
    linear_ladder, perpendicular_coupling, replica_agreement, replica_energy, simulated_quantum_anneal,
    sqa_restart, SqaParams, SqaRestart,
};

use crate::error::{Error, Result};
use crate::ising::{ising_to_qubo, qubo_to_ising, BinaryState, IsingProblem, QuboProblem, SpinState};
use crate::network::{mean_field_anneal_with, MeanFieldSchedule, NeuronNetwork};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sa,
    Sqa,
    Meanfield,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Exact, Method::Sa, Method::Sqa, Method::Meanfield];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Sa => "sa",
            Method::Sqa => "sqa",
            Method::Meanfield => "meanfield",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown solver method '{s}' (expected exact, sa, sqa or meanfield)"
                ))
            })
    }
}

/// Variable domain of a reported state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Spin,
    Binary,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl AcceptanceStats {
    pub fn merge(&mut self, other: AcceptanceStats) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

/// One row of an annealing trace: best energy seen so far at the end of a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub restart: usize,
    pub step: usize,
    /// Temperature for thermal annealers, transverse field for the quantum one.
    pub temperature_or_gamma: f64,
    pub best_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub domain: Domain,
    pub best_energy: f64,
    /// Spins (+1/-1) or bits (0/1) depending on `domain`.
    pub best_state: Vec<i8>,
    pub restart_energies: Vec<f64>,
    pub acceptance: AcceptanceStats,
    pub params: serde_json::Value,
    #[serde(default)]
    pub trace: Vec<TraceRow>,
}

impl SolveResult {
    pub fn spin_state(&self) -> Result<SpinState> {
        match self.domain {
            Domain::Spin => SpinState::new(self.best_state.clone()),
            Domain::Binary => Ok(self.binary_state()?.to_spins()),
        }
    }

    pub fn binary_state(&self) -> Result<BinaryState> {
        match self.domain {
            Domain::Binary => BinaryState::new(
                self.best_state
                    .iter()
                    .map(|&v| u8::try_from(v).unwrap_or(u8::MAX))
                    .collect(),
            ),
            Domain::Spin => Ok(self.spin_state()?.to_binary()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serialization");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse_record(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }
}

/// Mean-field annealing applied to an arbitrary QUBO viewed as a neuron network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldParams {
    pub temperatures: Vec<f64>,
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl MeanFieldParams {
    pub fn schedule(&self) -> MeanFieldSchedule {
        MeanFieldSchedule {
            temperatures: self.temperatures.clone(),
            tolerance: self.tolerance,
            max_sweeps: self.max_sweeps,
        }
    }
}

/// Parameters for every method; `solve_*` picks the set matching the requested method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub sa: AnnealSchedule,
    pub sqa: SqaParams,
    pub meanfield: MeanFieldParams,
}

impl SolverConfig {
    /// Shipped presets with every stream seeded from `seed`.
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig {
            sa: AnnealSchedule::preset(seed),
            sqa: SqaParams::preset(seed),
            meanfield: crate::presets::meanfield_params(seed),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.sa.seed = seed;
        self.sqa.seed = seed;
        self.meanfield.seed = seed;
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

fn meanfield_binary(q: &QuboProblem, params: &MeanFieldParams) -> Result<SolveResult> {
    if params.restarts == 0 {
        return Err(Error::contract("restarts must be >= 1"));
    }
    let net = NeuronNetwork::from_qubo(q)?;
    let schedule = params.schedule();
    let mut best: Option<(Vec<u8>, f64)> = None;
    let mut restart_energies = Vec::with_capacity(params.restarts);
    let mut trace = Vec::new();
    for r in 0..params.restarts {
        let mut best_in_run = f64::INFINITY;
        let out = mean_field_anneal_with(
            &net,
            &schedule,
            derive_seed(params.seed, "meanfield", r as u64),
            |step, temp, v| {
                let y: Vec<u8> = v.iter().map(|&x| u8::from(x > 0.5)).collect();
                best_in_run = best_in_run.min(q.energy(&y));
                trace.push(TraceRow {
                    restart: r,
                    step,
                    temperature_or_gamma: temp,
                    best_energy: best_in_run,
                });
            },
        )?;
        let y = out.threshold().into_inner();
        let e = q.energy(&y);
        restart_energies.push(e);
        if best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((y, e));
        }
    }
    let (y, _) = best.expect("at least one restart");
    let best_energy = q.energy(&y);
    Ok(SolveResult {
        method: Method::Meanfield,
        seed: params.seed,
        n: q.n(),
        domain: Domain::Binary,
        best_energy,
        best_state: y.into_iter().map(|b| b as i8).collect(),
        restart_energies,
        acceptance: AcceptanceStats::default(),
        params: serde_json::to_value(params).expect("params serialize"),
        trace,
    })
}

/// Minimises an Ising problem; the result is in the spin domain.
pub fn solve_ising(p: &IsingProblem, method: Method, config: &SolverConfig) -> Result<SolveResult> {
    match method {
        Method::Exact => brute_force(p),
        Method::Sa => simulated_anneal(p, &config.sa),
        Method::Sqa => simulated_quantum_anneal(p, &config.sqa),
        Method::Meanfield => {
            let q = ising_to_qubo(p);
            let mut r = meanfield_binary(&q, &config.meanfield)?;
            let spins = BinaryState::new(r.best_state.iter().map(|&b| b as u8).collect())?.to_spins();
            // the transform is energy-preserving, so restart energies and trace carry over
            r.best_energy = p.energy(spins.as_slice());
            r.best_state = spins.into_inner();
            r.domain = Domain::Spin;
            Ok(r)
        }
    }
}

/// Minimises a QUBO. Thermal and quantum methods run on the equivalent Ising
/// problem; the state is mapped back through `y = (1 + s) / 2` and the energy
/// is recomputed in the binary domain (offset included).
pub fn solve_qubo(p: &QuboProblem, method: Method, config: &SolverConfig) -> Result<SolveResult> {
    if method == Method::Meanfield {
        return meanfield_binary(p, &config.meanfield);
    }
    let (ising, offset) = qubo_to_ising(p);
    let mut r = solve_ising(&ising, method, config)?;
    let y = SpinState::new(r.best_state.clone())?.to_binary();
    r.best_energy = p.energy(y.as_slice());
    r.restart_energies = r.restart_energies.iter().map(|e| e + offset).collect();
    for row in &mut r.trace {
        row.best_energy += offset;
    }
    r.best_state = y.into_inner().into_iter().map(|b| b as i8).collect();
    r.domain = Domain::Binary;
    Ok(r)
}

/// Checks that the reported energy is the energy of the reported state.
pub fn audit_ising(p: &IsingProblem, r: &SolveResult) -> bool {
    r.spin_state()
        .map(|s| p.energy(s.as_slice()) == r.best_energy)
        .unwrap_or(false)
}
