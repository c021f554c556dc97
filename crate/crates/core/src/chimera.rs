//! Chimera connectivity graphs, clique minor embedding, and chain decoding.
//!
//! An `n x n` Chimera graph has one K4,4 cell per grid position. Qubit ids are
//! cell-major, partition-minor: `id = (row * n + col) * 8 + side * 4 + k`, where
//! side 0 is the left (vertically linked) partition and side 1 the right
//! (horizontally linked) one. Left qubit `k` of cell `(r, c)` couples to left
//! qubit `k` of `(r + 1, c)`; right qubit `k` couples to right qubit `k` of `(r, c + 1)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingProblem, SpinState};

pub type Qubit = u32;

const LEFT: u32 = 0;
const RIGHT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChimeraGraph {
    n: usize,
    couplers: BTreeSet<(Qubit, Qubit)>,
}

impl ChimeraGraph {
    pub fn qubit(&self, row: usize, col: usize, side: u32, k: u32) -> Qubit {
        ((row * self.n + col) as u32) * 8 + side * 4 + k
    }

    pub fn grid_n(&self) -> usize {
        self.n
    }

    pub fn num_qubits(&self) -> usize {
        8 * self.n * self.n
    }

    pub fn couplers(&self) -> &BTreeSet<(Qubit, Qubit)> {
        &self.couplers
    }

    pub fn has_coupler(&self, a: Qubit, b: Qubit) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.couplers.contains(&key)
    }

    pub fn degree(&self, q: Qubit) -> usize {
        self.couplers.iter().filter(|&&(a, b)| a == q || b == q).count()
    }

    /// Largest complete logical graph the clique embedding supports.
    pub fn clique_capacity(&self) -> usize {
        4 * self.n
    }
}

pub fn build_chimera(n: usize) -> Result<ChimeraGraph> {
    if n < 1 {
        return Err(Error::contract("Chimera grid size must be >= 1"));
    }
    let mut g = ChimeraGraph {
        n,
        couplers: BTreeSet::new(),
    };
    let add = |g: &mut ChimeraGraph, a: Qubit, b: Qubit| {
        g.couplers.insert(if a < b { (a, b) } else { (b, a) });
    };
    for row in 0..n {
        for col in 0..n {
            for a in 0..4 {
                for b in 0..4 {
                    let (l, r) = (g.qubit(row, col, LEFT, a), g.qubit(row, col, RIGHT, b));
                    add(&mut g, l, r);
                }
                if row + 1 < n {
                    let (u, d) = (g.qubit(row, col, LEFT, a), g.qubit(row + 1, col, LEFT, a));
                    add(&mut g, u, d);
                }
                if col + 1 < n {
                    let (l, r) = (g.qubit(row, col, RIGHT, a), g.qubit(row, col + 1, RIGHT, a));
                    add(&mut g, l, r);
                }
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub grid_n: usize,
    /// Logical spin -> sorted physical qubits.
    pub chains: BTreeMap<usize, Vec<Qubit>>,
    pub chain_strength: f64,
}

impl Embedding {
    /// All chain qubits in ascending order; position in this list is the
    /// variable index in the embedded (physical) problem.
    pub fn physical_qubits(&self) -> Vec<Qubit> {
        let mut q: Vec<Qubit> = self.chains.values().flatten().copied().collect();
        q.sort_unstable();
        q
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("embedding serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::parse_record(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

pub fn default_chain_strength(p: &IsingProblem) -> f64 {
    1.0 + 2.0 * p.max_abs()
}

/// Checks chain disjointness, chain connectivity and coverage of every nonzero coupling.
pub fn validate_embedding(e: &Embedding, p: &IsingProblem, g: &ChimeraGraph) -> Result<()> {
    if e.grid_n != g.grid_n() {
        return Err(Error::contract("embedding grid size does not match the graph"));
    }
    if !(e.chain_strength.is_finite() && e.chain_strength > 0.0) {
        return Err(Error::contract("chain strength must be positive"));
    }
    let mut owner: BTreeMap<Qubit, usize> = BTreeMap::new();
    for logical in 0..p.n() {
        let chain = e
            .chains
            .get(&logical)
            .filter(|c| !c.is_empty())
            .ok_or_else(|| Error::contract(format!("logical spin {logical} has no chain")))?;
        for &q in chain {
            if q as usize >= g.num_qubits() {
                return Err(Error::contract(format!("qubit {q} is not in the graph")));
            }
            if owner.insert(q, logical).is_some() {
                return Err(Error::contract(format!("qubit {q} is in two chains")));
            }
        }
        if !chain_connected(chain, g) {
            return Err(Error::contract(format!("chain of spin {logical} is disconnected")));
        }
    }
    if let Some(extra) = e.chains.keys().find(|&&k| k >= p.n()) {
        return Err(Error::contract(format!("chain for unknown logical spin {extra}")));
    }
    for ((i, j), v) in p.couplings() {
        if v != 0.0 && inter_chain_coupler(&e.chains[&i], &e.chains[&j], g).is_none() {
            return Err(Error::contract(format!("no coupler realises logical ({i}, {j})")));
        }
    }
    Ok(())
}

fn chain_connected(chain: &[Qubit], g: &ChimeraGraph) -> bool {
    let members: BTreeSet<Qubit> = chain.iter().copied().collect();
    let mut seen = BTreeSet::from([chain[0]]);
    let mut queue = VecDeque::from([chain[0]]);
    while let Some(q) = queue.pop_front() {
        for &other in &members {
            if !seen.contains(&other) && g.has_coupler(q, other) {
                seen.insert(other);
                queue.push_back(other);
            }
        }
    }
    seen.len() == members.len()
}

/// First coupler, in ascending order, joining the two chains.
fn inter_chain_coupler(a: &[Qubit], b: &[Qubit], g: &ChimeraGraph) -> Option<(Qubit, Qubit)> {
    let (sa, sb): (BTreeSet<_>, BTreeSet<_>) = (a.iter().collect(), b.iter().collect());
    g.couplers()
        .iter()
        .find(|(x, y)| (sa.contains(x) && sb.contains(y)) || (sa.contains(y) && sb.contains(x)))
        .copied()
}

/// Deterministic L-shaped clique embedding: logical spin `4b + k` uses right
/// qubit `k` of cells `(b, 0..=b)` and left qubit `k` of cells `(b..n, b)`,
/// joined inside the diagonal cell `(b, b)`. Any two chains meet in some cell,
/// so complete logical graphs up to `4n` spins embed. A lone spin gets a single qubit.
pub fn find_embedding(p: &IsingProblem, g: &ChimeraGraph) -> Result<Embedding> {
    if p.n() > g.clique_capacity() {
        return Err(Error::EmbeddingInfeasible {
            logical: p.n(),
            max_supported: g.clique_capacity(),
        });
    }
    let n = g.grid_n();
    if p.n() == 1 {
        // nothing to couple to: one qubit is enough
        let e = Embedding {
            grid_n: n,
            chains: BTreeMap::from([(0, vec![g.qubit(0, 0, LEFT, 0)])]),
            chain_strength: default_chain_strength(p),
        };
        validate_embedding(&e, p, g)?;
        return Ok(e);
    }
    let chains = (0..p.n())
        .map(|logical| {
            let (b, k) = (logical / 4, (logical % 4) as u32);
            let mut chain: Vec<Qubit> = (0..=b)
                .map(|c| g.qubit(b, c, RIGHT, k))
                .chain((b..n).map(|r| g.qubit(r, b, LEFT, k)))
                .collect();
            chain.sort_unstable();
            (logical, chain)
        })
        .collect();
    let e = Embedding {
        grid_n: n,
        chains,
        chain_strength: default_chain_strength(p),
    };
    validate_embedding(&e, p, g)?;
    Ok(e)
}

/// An embedded problem: variable `v` lives on qubit `qubits[v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalProblem {
    pub problem: IsingProblem,
    pub qubits: Vec<Qubit>,
}

pub fn embed_problem(p: &IsingProblem, e: &Embedding, g: &ChimeraGraph) -> Result<PhysicalProblem> {
    validate_embedding(e, p, g)?;
    let qubits = e.physical_qubits();
    let index: BTreeMap<Qubit, usize> = qubits.iter().enumerate().map(|(v, &q)| (q, v)).collect();
    let mut phys = IsingProblem::new(qubits.len());

    for (logical, chain) in &e.chains {
        let share = p.field(*logical) / chain.len() as f64;
        for q in chain {
            phys.set_field(index[q], share);
        }
        let members: BTreeSet<&Qubit> = chain.iter().collect();
        for &(a, b) in g.couplers() {
            if members.contains(&a) && members.contains(&b) {
                phys.add_coupling(index[&a], index[&b], -e.chain_strength)?;
            }
        }
    }
    for ((i, j), v) in p.couplings() {
        if v == 0.0 {
            continue;
        }
        let (a, b) = inter_chain_coupler(&e.chains[&i], &e.chains[&j], g)
            .expect("validated embedding covers every coupling");
        phys.add_coupling(index[&a], index[&b], v)?;
    }
    Ok(PhysicalProblem {
        problem: phys,
        qubits,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedState {
    pub logical: SpinState,
    /// Per logical spin: did its chain disagree?
    pub broken: Vec<bool>,
    pub broken_count: usize,
}

/// Majority vote per chain; a tied vote resolves to -1. Any disagreement marks the chain broken.
pub fn decode_state(physical: &SpinState, e: &Embedding) -> Result<DecodedState> {
    let qubits = e.physical_qubits();
    if physical.len() != qubits.len() {
        return Err(Error::contract(format!(
            "physical state has {} values, embedding uses {} qubits",
            physical.len(),
            qubits.len()
        )));
    }
    let index: BTreeMap<Qubit, usize> = qubits.iter().enumerate().map(|(v, &q)| (q, v)).collect();
    let s = physical.as_slice();
    let mut logical = Vec::with_capacity(e.chains.len());
    let mut broken = Vec::with_capacity(e.chains.len());
    for (expected, (&spin, chain)) in e.chains.iter().enumerate() {
        if spin != expected {
            return Err(Error::contract("chains must cover logical spins 0..n"));
        }
        let vote: i32 = chain.iter().map(|q| i32::from(s[index[q]])).sum();
        logical.push(if vote > 0 { 1 } else { -1 });
        broken.push(vote.unsigned_abs() as usize != chain.len());
    }
    let broken_count = broken.iter().filter(|&&b| b).count();
    Ok(DecodedState {
        logical: SpinState::new(logical)?,
        broken,
        broken_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::brute_force;

    #[test]
    fn single_cell_is_k44() {
        let g = build_chimera(1).unwrap();
        assert_eq!(g.num_qubits(), 8);
        assert_eq!(g.couplers().len(), 16);
        for q in 0..8 {
            assert_eq!(g.degree(q), 4);
        }
    }

    #[test]
    fn nine_cells_hold_72_qubits() {
        assert_eq!(build_chimera(3).unwrap().num_qubits(), 72);
    }

    #[test]
    fn coupler_count_matches_counting_rule() {
        for n in 1..=4 {
            let g = build_chimera(n).unwrap();
            // 16 per cell, 4 per vertically adjacent cell pair, 4 per horizontal pair
            let expected = 16 * n * n + 4 * n * (n - 1) + 4 * n * (n - 1);
            assert_eq!(g.couplers().len(), expected, "n = {n}");
            assert!((0..g.num_qubits() as Qubit).all(|q| g.degree(q) <= 6));
            assert_eq!(g, build_chimera(n).unwrap());
        }
        assert_eq!(build_chimera(2).unwrap().couplers().len(), 80);
    }

    #[test]
    fn zero_grid_is_rejected() {
        assert!(matches!(build_chimera(0), Err(Error::Contract(_))));
    }

    fn complete(n: usize, j: f64) -> IsingProblem {
        let mut p = IsingProblem::new(n);
        for a in 0..n {
            for b in a + 1..n {
                p.add_coupling(a, b, j).unwrap();
            }
        }
        p
    }

    #[test]
    fn one_spin_gets_a_one_qubit_chain() {
        let mut p = IsingProblem::new(1);
        p.set_field(0, 0.5);
        for n in 1..=3 {
            let g = build_chimera(n).unwrap();
            let e = find_embedding(&p, &g).unwrap();
            assert_eq!(e.chains[&0], vec![0]);
            let phys = embed_problem(&p, &e, &g).unwrap();
            assert_eq!(phys.problem, p);
        }
    }

    #[test]
    fn k4_on_one_cell_uses_one_left_and_one_right_qubit_per_chain() {
        let g = build_chimera(1).unwrap();
        let e = find_embedding(&complete(4, 1.0), &g).unwrap();
        assert_eq!(e.chains.len(), 4);
        for chain in e.chains.values() {
            assert_eq!(chain.len(), 2);
            let sides: BTreeSet<u32> = chain.iter().map(|q| (q % 8) / 4).collect();
            assert_eq!(sides, BTreeSet::from([0, 1]));
        }
    }

    #[test]
    fn oversized_problem_is_infeasible() {
        let g = build_chimera(1).unwrap();
        match find_embedding(&complete(5, 1.0), &g) {
            Err(Error::EmbeddingInfeasible { logical, max_supported }) => {
                assert_eq!((logical, max_supported), (5, 4));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_capacity_cliques_embed() {
        for n in 1..=4 {
            let g = build_chimera(n).unwrap();
            let e = find_embedding(&complete(4 * n, 0.3), &g).unwrap();
            assert!(e.chains.values().all(|c| c.len() == n + 1));
        }
    }

    #[test]
    fn broken_embeddings_are_rejected() {
        let g = build_chimera(2).unwrap();
        let p = complete(2, 1.0);
        let overlap = Embedding { grid_n: 2, chains: BTreeMap::from([(0, vec![0]), (1, vec![0])]), chain_strength: 1.0 };
        assert!(validate_embedding(&overlap, &p, &g).is_err());
        // qubits 0 and 1 are both left qubits of cell 0: not coupled
        let split = Embedding { grid_n: 2, chains: BTreeMap::from([(0, vec![0, 1]), (1, vec![4])]), chain_strength: 1.0 };
        assert!(validate_embedding(&split, &p, &g).is_err());
        // left 0 of cell 0 and left 1 of cell 0 share no coupler
        let uncovered = Embedding { grid_n: 2, chains: BTreeMap::from([(0, vec![0]), (1, vec![1])]), chain_strength: 1.0 };
        assert!(validate_embedding(&uncovered, &p, &g).is_err());
    }

    #[test]
    fn field_splits_evenly_over_chain() {
        let g = build_chimera(1).unwrap();
        let mut p = IsingProblem::new(2);
        p.set_field(0, 1.0);
        let e = find_embedding(&p, &g).unwrap();
        let phys = embed_problem(&p, &e, &g).unwrap();
        let idx = |q: Qubit| phys.qubits.iter().position(|&x| x == q).unwrap();
        let chain = &e.chains[&0];
        assert_eq!(chain.len(), 2);
        for &q in chain {
            assert_eq!(phys.problem.field(idx(q)), 0.5);
        }
        assert_eq!(phys.problem.coupling(idx(chain[0]), idx(chain[1])), -e.chain_strength);
    }

    #[test]
    fn k4_physical_ground_state_decodes_to_logical_ground_state() {
        let g = build_chimera(1).unwrap();
        let mut p = complete(4, 0.0);
        let values = [0.7, -0.4, 0.9, -1.0, 0.2, 0.55];
        for (k, ((i, j), _)) in p.clone().couplings().enumerate() {
            p.add_coupling(i, j, values[k]).unwrap();
        }
        for (i, h) in [0.3, -0.2, 0.1, 0.6].into_iter().enumerate() {
            p.set_field(i, h);
        }
        let mut e = find_embedding(&p, &g).unwrap();
        e.chain_strength = 2.0 * p.max_abs();
        let phys = embed_problem(&p, &e, &g).unwrap();
        let physical = brute_force(&phys.problem).unwrap();
        let decoded = decode_state(&SpinState::new(physical.best_state).unwrap(), &e).unwrap();
        let logical = brute_force(&p).unwrap();
        assert_eq!(decoded.logical.as_slice(), logical.best_state.as_slice());
        assert_eq!(decoded.broken_count, 0);
    }

    #[test]
    fn decode_examples() {
        let e = Embedding { grid_n: 1, chains: BTreeMap::from([(0, vec![0, 4]), (1, vec![1, 5])]), chain_strength: 1.0 };
        // physical order is qubits [0, 1, 4, 5]
        let unanimous = decode_state(&SpinState::new(vec![1, -1, 1, -1]).unwrap(), &e).unwrap();
        assert_eq!(unanimous.logical.as_slice(), &[1, -1]);
        assert_eq!(unanimous.broken_count, 0);
        let tied = decode_state(&SpinState::new(vec![1, 1, -1, 1]).unwrap(), &e).unwrap();
        assert_eq!(tied.logical.as_slice(), &[-1, 1]);
        assert_eq!(tied.broken, vec![true, false]);
        assert_eq!(tied.broken_count, 1);
        assert!(matches!(decode_state(&SpinState::new(vec![1, 1]).unwrap(), &e), Err(Error::Contract(_))));
    }

    #[test]
    fn embedding_json_shape() {
        let g = build_chimera(1).unwrap();
        let e = find_embedding(&complete(2, 1.0), &g).unwrap();
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["grid_n"], 1);
        assert!(v["chains"]["0"].is_array());
        assert_eq!(Embedding::from_json(&e.to_json()).unwrap(), e);
    }
}
