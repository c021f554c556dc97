//! Simulated quantum annealing: path-integral Monte Carlo of the transverse-field
//! Ising model.
//!
//! `P` replicas (Trotter slices) of the classical problem sit on a closed ring.
//! Corresponding spins of neighbouring slices couple ferromagnetically with
//! `J_perp = -(P T / 2) ln tanh(Gamma / (P T))`, and the replica system
//!
//! `H = sum_k E(s^k) - J_perp sum_k sum_i s_i^k s_i^{k+1}`
//!
//! is sampled by Metropolis at temperature `P T` while `Gamma` decreases.
//! Shrinking `Gamma` stiffens the ring until all slices agree.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AcceptanceStats, Domain, Method, SolveResult, TraceRow};
use crate::error::{Error, Result};
use crate::ising::IsingProblem;
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqaParams {
    pub trotter_slices: usize,
    /// Transverse-field ladder, strictly decreasing and positive.
    pub gammas: Vec<f64>,
    pub temperature: f64,
    pub sweeps_per_gamma: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl SqaParams {
    /// `P = 8`, `T = 0.1`, linear field ladder 3.0 -> 0.01 in 40 steps,
    /// 20 sweeps per step, 8 restarts.
    pub fn preset(seed: u64) -> Self {
        SqaParams {
            trotter_slices: 8,
            gammas: linear_ladder(3.0, 0.01, 40),
            temperature: 0.1,
            sweeps_per_gamma: 20,
            restarts: 8,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trotter_slices < 2 {
            return Err(Error::contract("need at least 2 Trotter slices"));
        }
        if self.gammas.is_empty() {
            return Err(Error::contract("transverse-field ladder is empty"));
        }
        if self.gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::contract("transverse fields must be finite and positive"));
        }
        if self.gammas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::contract("transverse fields must be strictly decreasing"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::contract("temperature must be finite and positive"));
        }
        if self.restarts == 0 {
            return Err(Error::contract("restarts must be >= 1"));
        }
        Ok(())
    }
}

/// `steps` evenly spaced values from `start` to `end`.
pub fn linear_ladder(start: f64, end: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..steps)
            .map(|k| {
                let t = k as f64 / (steps - 1) as f64;
                start * (1.0 - t) + end * t
            })
            .collect(),
    }
}

pub fn perpendicular_coupling(gamma: f64, slices: usize, temperature: f64) -> f64 {
    let pt = slices as f64 * temperature;
    -(pt / 2.0) * (gamma / pt).tanh().ln()
}

/// Energy of the replica system for the given slices and inter-slice coupling.
pub fn replica_energy(p: &IsingProblem, slices: &[Vec<i8>], j_perp: f64) -> f64 {
    let classical: f64 = slices.iter().map(|s| p.energy(s)).sum();
    let ring: f64 = (0..slices.len())
        .map(|k| {
            let next = &slices[(k + 1) % slices.len()];
            slices[k]
                .iter()
                .zip(next)
                .map(|(&a, &b)| f64::from(a * b))
                .sum::<f64>()
        })
        .sum();
    classical - j_perp * ring
}

/// Fraction of spins whose value is identical in every slice.
pub fn replica_agreement(slices: &[Vec<i8>]) -> f64 {
    let Some(first) = slices.first() else {
        return 1.0;
    };
    if first.is_empty() {
        return 1.0;
    }
    let locked = (0..first.len())
        .filter(|&i| slices.iter().all(|s| s[i] == first[i]))
        .count();
    locked as f64 / first.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqaRestart {
    pub best_state: Vec<i8>,
    pub best_energy: f64,
    /// Replica configuration after the last sweep.
    pub final_slices: Vec<Vec<i8>>,
    pub stats: AcceptanceStats,
    pub trace: Vec<TraceRow>,
}

/// One annealing run from the generator seeded by `seed`; `restart` only labels the trace.
pub fn sqa_restart(p: &IsingProblem, params: &SqaParams, restart: usize, seed: u64) -> Result<SqaRestart> {
    params.validate()?;
    let n = p.n();
    let slices_n = params.trotter_slices;
    let adj = p.adjacency();
    let sim_temp = slices_n as f64 * params.temperature;
    let mut rng = rng_from_seed(seed);

    let mut slices: Vec<Vec<i8>> = (0..slices_n)
        .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
        .collect();
    let mut slice_energy: Vec<f64> = slices.iter().map(|s| p.energy(s)).collect();
    let (mut best_state, mut best_energy) = {
        let k = argmin(&slice_energy);
        (slices[k].clone(), slice_energy[k])
    };

    let mut local_moves: Vec<(usize, usize)> = (0..slices_n)
        .flat_map(|k| (0..n).map(move |i| (k, i)))
        .collect();
    let mut global_moves: Vec<usize> = (0..n).collect();
    let mut stats = AcceptanceStats::default();
    let mut trace = Vec::with_capacity(params.gammas.len());

    for (step, &gamma) in params.gammas.iter().enumerate() {
        let j_perp = perpendicular_coupling(gamma, slices_n, params.temperature);
        for _ in 0..params.sweeps_per_gamma {
            local_moves.shuffle(&mut rng);
            for &(k, i) in &local_moves {
                let s = f64::from(slices[k][i]);
                let up = slices[(k + 1) % slices_n][i];
                let down = slices[(k + slices_n - 1) % slices_n][i];
                let d_classical = -2.0 * s * p.local_field(&adj, &slices[k], i);
                let delta = d_classical + 2.0 * j_perp * s * f64::from(up + down);
                stats.proposed += 1;
                if delta <= 0.0 || rng.random::<f64>() < (-delta / sim_temp).exp() {
                    slices[k][i] = -slices[k][i];
                    slice_energy[k] += d_classical;
                    stats.accepted += 1;
                }
            }
            // flipping a spin in every slice leaves the ring term unchanged
            global_moves.shuffle(&mut rng);
            for &i in &global_moves {
                let delta: f64 = slices
                    .iter()
                    .map(|s| -2.0 * f64::from(s[i]) * p.local_field(&adj, s, i))
                    .sum();
                stats.proposed += 1;
                if delta <= 0.0 || rng.random::<f64>() < (-delta / sim_temp).exp() {
                    for (k, s) in slices.iter_mut().enumerate() {
                        slice_energy[k] += -2.0 * f64::from(s[i]) * p.local_field(&adj, s, i);
                        s[i] = -s[i];
                    }
                    stats.accepted += 1;
                }
            }
            let k = argmin(&slice_energy);
            if slice_energy[k] < best_energy {
                best_energy = slice_energy[k];
                best_state.copy_from_slice(&slices[k]);
            }
        }
        for (k, s) in slices.iter().enumerate() {
            slice_energy[k] = p.energy(s);
        }
        trace.push(TraceRow {
            restart,
            step,
            temperature_or_gamma: gamma,
            best_energy,
        });
    }

    let best_energy = p.energy(&best_state);
    Ok(SqaRestart {
        best_state,
        best_energy,
        final_slices: slices,
        stats,
        trace,
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    best
}

pub fn simulated_quantum_anneal(p: &IsingProblem, params: &SqaParams) -> Result<SolveResult> {
    params.validate()?;
    let runs: Vec<SqaRestart> = (0..params.restarts)
        .into_par_iter()
        .map(|r| sqa_restart(p, params, r, derive_seed(params.seed, "sqa", r as u64)))
        .collect::<Result<_>>()?;

    let mut best = 0;
    let mut acceptance = AcceptanceStats::default();
    for (r, run) in runs.iter().enumerate() {
        acceptance.merge(run.stats);
        if run.best_energy < runs[best].best_energy {
            best = r;
        }
    }
    let best_state = runs[best].best_state.clone();
    Ok(SolveResult {
        method: Method::Sqa,
        seed: params.seed,
        n: p.n(),
        domain: Domain::Spin,
        best_energy: p.energy(&best_state),
        best_state,
        restart_energies: runs.iter().map(|r| r.best_energy).collect(),
        acceptance,
        params: serde_json::to_value(params).expect("params serialize"),
        trace: runs.into_iter().flat_map(|r| r.trace).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_problem() -> IsingProblem {
        let mut p = IsingProblem::new(4);
        p.add_coupling(0, 1, -1.0).unwrap();
        p.add_coupling(1, 2, 0.5).unwrap();
        p.add_coupling(2, 3, -0.75).unwrap();
        p.set_field(0, 0.2);
        p.set_field(3, -0.3);
        p
    }

    #[test]
    fn coupling_grows_as_field_vanishes() {
        let big = perpendicular_coupling(1e-4, 16, 0.1);
        let mid = perpendicular_coupling(0.05, 16, 0.1);
        let small = perpendicular_coupling(3.0, 16, 0.1);
        assert!(big > mid && mid > small && small > 0.0);
        // P T / 2 * ln coth(Gamma / (P T)) closed form
        let pt: f64 = 1.6;
        let expected = pt / 2.0 * (1.0 / (0.05f64 / pt).tanh()).ln();
        assert!((mid - expected).abs() < 1e-12);
    }

    #[test]
    fn ring_rotation_leaves_replica_energy_unchanged() {
        let p = small_problem();
        let mut rng = rng_from_seed(8);
        let slices: Vec<Vec<i8>> = (0..6)
            .map(|_| (0..4).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
            .collect();
        let e0 = replica_energy(&p, &slices, 0.8);
        for shift in 1..6 {
            let mut rotated = slices.clone();
            rotated.rotate_left(shift);
            assert!((replica_energy(&p, &rotated, 0.8) - e0).abs() < 1e-12);
        }
    }

    #[test]
    fn reported_energy_is_recomputed() {
        let p = small_problem();
        let mut params = SqaParams::preset(4);
        params.restarts = 2;
        let r = simulated_quantum_anneal(&p, &params).unwrap();
        assert_eq!(r.best_energy, p.energy(&r.best_state));
        assert_eq!(r.trace.len(), 2 * params.gammas.len());
    }

    #[test]
    fn invalid_params_are_contract_violations() {
        let p = small_problem();
        let base = SqaParams::preset(0);
        let bad = [
            SqaParams { trotter_slices: 1, ..base.clone() },
            SqaParams { gammas: vec![1.0, 2.0], ..base.clone() },
            SqaParams { gammas: vec![], ..base.clone() },
            SqaParams { temperature: 0.0, ..base.clone() },
            SqaParams { restarts: 0, ..base.clone() },
        ];
        for params in bad {
            assert!(matches!(simulated_quantum_anneal(&p, &params), Err(Error::Contract(_))));
        }
    }

    #[test]
    fn agreement_counts_locked_spins() {
        let slices = vec![vec![1, -1, 1], vec![1, -1, -1]];
        assert!((replica_agreement(&slices) - 2.0 / 3.0).abs() < 1e-15);
    }
}
