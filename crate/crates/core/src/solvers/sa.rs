//! Metropolis simulated annealing over single-spin flips.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AcceptanceStats, Domain, Method, SolveResult, TraceRow};
use crate::error::{Error, Result};
use crate::ising::IsingProblem;
use crate::network::geometric_ladder;
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    /// Strictly decreasing, positive (energy units).
    pub temperatures: Vec<f64>,
    /// Zero turns the anneal into a no-op that reports the random start state.
    pub sweeps_per_temperature: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl AnnealSchedule {
    /// Geometric ladder 2.0 -> 0.05 in 20 steps, 40 sweeps per step, 50 restarts.
    pub fn preset(seed: u64) -> Self {
        AnnealSchedule {
            temperatures: geometric_ladder(2.0, 0.05, 20),
            sweeps_per_temperature: 40,
            restarts: 50,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty() {
            return Err(Error::contract("temperature ladder is empty"));
        }
        if self.temperatures.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::contract("temperatures must be finite and positive"));
        }
        if self.temperatures.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::contract("temperatures must be strictly decreasing"));
        }
        if self.restarts == 0 {
            return Err(Error::contract("restarts must be >= 1"));
        }
        Ok(())
    }
}

/// A single Metropolis chain with best-so-far bookkeeping.
pub struct MetropolisChain<'a> {
    problem: &'a IsingProblem,
    adj: &'a [Vec<(usize, f64)>],
    state: Vec<i8>,
    energy: f64,
    best_state: Vec<i8>,
    best_energy: f64,
    order: Vec<usize>,
    rng: ChaCha8Rng,
    stats: AcceptanceStats,
}

impl<'a> MetropolisChain<'a> {
    /// Starts from a uniformly random state drawn from `seed`.
    pub fn new(problem: &'a IsingProblem, adj: &'a [Vec<(usize, f64)>], seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let state: Vec<i8> = (0..problem.n())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let energy = problem.energy(&state);
        MetropolisChain {
            problem,
            adj,
            best_state: state.clone(),
            best_energy: energy,
            state,
            energy,
            order: (0..problem.n()).collect(),
            rng,
            stats: AcceptanceStats::default(),
        }
    }

    pub fn state(&self) -> &[i8] {
        &self.state
    }

    /// Incrementally tracked energy of the current state.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn best_energy(&self) -> f64 {
        self.best_energy
    }

    pub fn best_state(&self) -> &[i8] {
        &self.best_state
    }

    pub fn stats(&self) -> AcceptanceStats {
        self.stats
    }

    /// One pass over all spins in a fresh random order, accepting each flip
    /// with probability `min(1, exp(-dE / T))`.
    pub fn sweep(&mut self, temperature: f64) {
        self.order.shuffle(&mut self.rng);
        for k in 0..self.order.len() {
            let i = self.order[k];
            let field = self.problem.local_field(self.adj, &self.state, i);
            let delta = -2.0 * f64::from(self.state[i]) * field;
            self.stats.proposed += 1;
            let accept = delta <= 0.0 || self.rng.random::<f64>() < (-delta / temperature).exp();
            if accept {
                self.state[i] = -self.state[i];
                self.energy += delta;
                self.stats.accepted += 1;
                if self.energy < self.best_energy {
                    self.best_energy = self.energy;
                    self.best_state.copy_from_slice(&self.state);
                }
            }
        }
    }
}

struct RestartOutcome {
    state: Vec<i8>,
    energy: f64,
    stats: AcceptanceStats,
    trace: Vec<TraceRow>,
}

fn run_restart(
    p: &IsingProblem,
    adj: &[Vec<(usize, f64)>],
    sched: &AnnealSchedule,
    restart: usize,
) -> RestartOutcome {
    let mut chain = MetropolisChain::new(p, adj, derive_seed(sched.seed, "sa", restart as u64));
    let mut trace = Vec::with_capacity(sched.temperatures.len());
    for (step, &t) in sched.temperatures.iter().enumerate() {
        for _ in 0..sched.sweeps_per_temperature {
            chain.sweep(t);
        }
        trace.push(TraceRow {
            restart,
            step,
            temperature_or_gamma: t,
            best_energy: chain.best_energy,
        });
    }
    let energy = p.energy(&chain.best_state);
    RestartOutcome {
        state: chain.best_state,
        energy,
        stats: chain.stats,
        trace,
    }
}

/// Independent restarts run in parallel; each owns a generator derived from
/// `(seed, restart index)` and results merge in restart order, so the outcome
/// does not depend on scheduling.
pub fn simulated_anneal(p: &IsingProblem, sched: &AnnealSchedule) -> Result<SolveResult> {
    sched.validate()?;
    let adj = p.adjacency();
    let outcomes: Vec<RestartOutcome> = (0..sched.restarts)
        .into_par_iter()
        .map(|r| run_restart(p, &adj, sched, r))
        .collect();

    let mut best = 0;
    let mut acceptance = AcceptanceStats::default();
    for (r, o) in outcomes.iter().enumerate() {
        acceptance.merge(o.stats);
        if o.energy < outcomes[best].energy {
            best = r;
        }
    }
    let best_energy = p.energy(&outcomes[best].state);
    Ok(SolveResult {
        method: Method::Sa,
        seed: sched.seed,
        n: p.n(),
        domain: Domain::Spin,
        best_energy,
        best_state: outcomes[best].state.clone(),
        restart_energies: outcomes.iter().map(|o| o.energy).collect(),
        acceptance,
        params: serde_json::to_value(sched).expect("schedule serializes"),
        trace: outcomes.into_iter().flat_map(|o| o.trace).collect(),
    })
}
