//! Segment-neuron network: couplings that reward smooth continuations and
//! penalise bifurcations, its energy, mean-field annealing, and track extraction.
//!
//! Activations live in `[0, 1]`; an off neuron contributes nothing, so the
//! all-off state has energy 0. The energy is
//! `E = -1/2 sum_{a != b} T_ab v_a v_b - sum_a b_a v_a`
//! where the bias `b` is zero for networks built from segments.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::event::HitId;
use crate::ising::{BinaryState, QuboProblem};
use crate::segments::{direction_angle, SegmentSet};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpParams {
    /// Exponent on the cosine of the kink angle.
    pub m: u32,
    /// Bifurcation penalty weight.
    pub alpha: f64,
    /// Global inhibition weight.
    pub beta: f64,
}

impl DpParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Config("cost exponent m must be >= 1".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Pairwise weights: explicit entries (`a < b`) plus one value shared by every distinct pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Couplings {
    pub pairs: BTreeMap<(usize, usize), f64>,
    pub uniform: f64,
}

impl Couplings {
    fn add(&mut self, a: usize, b: usize, w: f64) {
        let key = if a < b { (a, b) } else { (b, a) };
        *self.pairs.entry(key).or_insert(0.0) += w;
    }

    /// Total weight between two distinct neurons.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.pairs.get(&key).copied().unwrap_or(0.0) + self.uniform
    }
}

/// Smoothness reward `cos^m(theta) / (r1 + r2)` for every head-to-tail pair
/// whose kink angle is at most `max_kink_angle`.
pub fn build_cost(segments: &SegmentSet, m: u32, max_kink_angle: f64) -> Couplings {
    let mut c = Couplings::default();
    for (a, b) in segments.connected_pairs() {
        let (s1, s2) = (segments.get(a), segments.get(b));
        let theta = direction_angle(s1.direction, s2.direction);
        if theta <= max_kink_angle {
            let w = theta.cos().powi(m as i32) / (s1.length + s2.length);
            c.add(a, b, w);
        }
    }
    c
}

/// `-alpha/2` between segments sharing a tail or sharing a head, and `-beta/2`
/// between every distinct pair.
pub fn build_constraints(segments: &SegmentSet, params: &DpParams) -> Couplings {
    let mut c = Couplings {
        pairs: BTreeMap::new(),
        uniform: -params.beta / 2.0,
    };
    if params.alpha != 0.0 {
        let penalty = -params.alpha / 2.0;
        let mut hits: Vec<HitId> = segments
            .segments()
            .iter()
            .flat_map(|s| [s.from_hit, s.to_hit])
            .collect();
        hits.sort_unstable();
        hits.dedup();
        for hit in hits {
            for group in [segments.outgoing(hit), segments.incoming(hit)] {
                for (k, &a) in group.iter().enumerate() {
                    for &b in &group[k + 1..] {
                        c.add(a, b, penalty);
                    }
                }
            }
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronNetwork {
    n: usize,
    couplings: Couplings,
    bias: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeuronNetwork {
    pub fn new(n: usize, couplings: Couplings, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != n {
            return Err(Error::contract("bias length must equal neuron count"));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (&(a, b), &w) in &couplings.pairs {
            if a == b || b >= n {
                return Err(Error::contract(format!("invalid coupling ({a}, {b})")));
            }
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        Ok(NeuronNetwork {
            n,
            couplings,
            bias,
            adjacency,
        })
    }

    /// Cost plus constraint couplings for a segment set.
    pub fn from_segments(
        segments: &SegmentSet,
        params: &DpParams,
        max_kink_angle: f64,
    ) -> Result<Self> {
        params.validate()?;
        let mut total = build_cost(segments, params.m, max_kink_angle);
        let constraints = build_constraints(segments, params);
        for (&(a, b), &w) in &constraints.pairs {
            total.add(a, b, w);
        }
        total.uniform += constraints.uniform;
        Self::new(segments.len(), total, vec![0.0; segments.len()])
    }

    /// Network whose energy equals `qubo_energy - offset` on binary states.
    pub fn from_qubo(q: &QuboProblem) -> Result<Self> {
        let mut couplings = Couplings::default();
        let mut bias = vec![0.0; q.n()];
        for ((i, j), v) in q.entries() {
            if i == j {
                bias[i] = -v;
            } else {
                couplings.add(i, j, -v);
            }
        }
        Self::new(q.n(), couplings, bias)
    }

    /// QUBO with the same energy on binary states: `Q_ab = -T_ab`, `Q_aa = -b_a`.
    pub fn to_qubo(&self) -> QuboProblem {
        let mut q = QuboProblem::new(self.n);
        for (a, &b) in self.bias.iter().enumerate() {
            if b != 0.0 {
                q.add(a, a, -b).expect("index in range");
            }
        }
        if self.couplings.uniform != 0.0 {
            for a in 0..self.n {
                for b in a + 1..self.n {
                    q.add(a, b, -self.couplings.weight(a, b)).expect("index in range");
                }
            }
        } else {
            for (&(a, b), &w) in &self.couplings.pairs {
                q.add(a, b, -w).expect("index in range");
            }
        }
        q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Symmetric weight `T_ab`; zero on the diagonal.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.couplings.weight(a, b)
    }

    /// `b_i + sum_{j != i} T_ij v_j`, with `total` the precomputed sum of all activations.
    fn field_with_total(&self, v: &[f64], i: usize, total: f64) -> f64 {
        let sparse = self.adjacency[i]
            .iter()
            .fold(0.0, |acc, &(j, w)| acc + w * v[j]);
        self.bias[i] + sparse + self.couplings.uniform * (total - v[i])
    }

    pub fn local_field(&self, v: &[f64], i: usize) -> f64 {
        self.field_with_total(v, i, v.iter().sum())
    }

    pub(crate) fn energy_unchecked(&self, v: &[f64]) -> f64 {
        let sparse: f64 = self
            .couplings
            .pairs
            .iter()
            .map(|(&(a, b), w)| w * v[a] * v[b])
            .sum();
        let total: f64 = v.iter().sum();
        let squares: f64 = v.iter().map(|x| x * x).sum();
        let uniform = self.couplings.uniform * (total * total - squares) / 2.0;
        let bias: f64 = self.bias.iter().zip(v).map(|(b, x)| b * x).sum();
        -(sparse + uniform) - bias
    }
}

/// Neuron activations in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationState(Vec<f64>);

impl ActivationState {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::contract("activations must lie in [0, 1]"));
        }
        Ok(ActivationState(values))
    }

    pub fn from_binary(state: &BinaryState) -> Self {
        ActivationState(state.as_slice().iter().map(|&b| f64::from(b)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// On/off snapshot: on iff the activation exceeds 1/2.
    pub fn threshold(&self) -> BinaryState {
        BinaryState::new(self.0.iter().map(|&v| u8::from(v > 0.5)).collect())
            .expect("thresholded values are binary")
    }
}

pub fn network_energy(net: &NeuronNetwork, state: &ActivationState) -> Result<f64> {
    if state.len() != net.n() {
        return Err(Error::contract(format!(
            "state has {} activations, network has {} neurons",
            state.len(),
            net.n()
        )));
    }
    Ok(net.energy_unchecked(state.values()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSchedule {
    /// Strictly decreasing, positive.
    pub temperatures: Vec<f64>,
    /// A temperature step ends once no activation moves more than this in a sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl MeanFieldSchedule {
    pub fn geometric(start: f64, end: f64, steps: usize, tolerance: f64, max_sweeps: usize) -> Self {
        MeanFieldSchedule {
            temperatures: geometric_ladder(start, end, steps),
            tolerance,
            max_sweeps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty() {
            return Err(Error::contract("temperature schedule is empty"));
        }
        if self.temperatures.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::contract("temperatures must be finite and positive"));
        }
        if self.temperatures.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::contract("temperatures must be strictly decreasing"));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 || self.max_sweeps == 0 {
            return Err(Error::contract("tolerance must be >= 0 and sweep cap >= 1"));
        }
        Ok(())
    }
}

/// `steps` values from `start` to `end`, evenly spaced in log scale.
pub fn geometric_ladder(start: f64, end: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let ratio = (end / start).ln() / (steps - 1) as f64;
            let mut ladder: Vec<f64> = (0..steps).map(|k| start * (ratio * k as f64).exp()).collect();
            ladder[steps - 1] = end;
            ladder
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Mean-field annealing: at each temperature, sweep neurons in a fresh seeded
/// random order applying `v_i <- logistic(field_i / T)` until the largest change
/// in a sweep drops below the tolerance or the sweep cap is hit.
///
/// `on_step(step, temperature, state)` runs after each temperature step.
pub fn mean_field_anneal_with<F>(
    net: &NeuronNetwork,
    schedule: &MeanFieldSchedule,
    seed: u64,
    mut on_step: F,
) -> Result<ActivationState>
where
    F: FnMut(usize, f64, &[f64]),
{
    schedule.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut v = vec![0.5; net.n()];
    let mut order: Vec<usize> = (0..net.n()).collect();
    let mut total: f64 = v.iter().sum();
    for (step, &temp) in schedule.temperatures.iter().enumerate() {
        for _ in 0..schedule.max_sweeps {
            order.shuffle(&mut rng);
            let mut max_change: f64 = 0.0;
            for &i in &order {
                let updated = logistic(net.field_with_total(&v, i, total) / temp);
                max_change = max_change.max((updated - v[i]).abs());
                total += updated - v[i];
                v[i] = updated;
            }
            // resync the running sum so rounding cannot drift across sweeps
            total = v.iter().sum();
            if max_change < schedule.tolerance {
                break;
            }
        }
        on_step(step, temp, &v);
    }
    Ok(ActivationState(v))
}

pub fn mean_field_anneal(
    net: &NeuronNetwork,
    schedule: &MeanFieldSchedule,
    seed: u64,
) -> Result<ActivationState> {
    mean_field_anneal_with(net, schedule, seed, |_, _, _| {})
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackCandidate {
    /// Hit ids from the innermost layer outwards.
    pub hits: Vec<HitId>,
    /// The chain passes through a hit with two or more active incoming or outgoing segments.
    pub ambiguous: bool,
}

/// Follows active segments outward from every chain start. At a branch hit the
/// chain splits, each branch keeping the shared stem, and all resulting chains
/// are flagged ambiguous. Chains of fewer than two segments are dropped.
pub fn extract_tracks(state: &BinaryState, segments: &SegmentSet) -> Result<Vec<TrackCandidate>> {
    if state.len() != segments.len() {
        return Err(Error::contract("state length must equal segment count"));
    }
    let on = |s: usize| state.as_slice()[s] == 1;
    let on_out = |hit: HitId| -> Vec<usize> {
        segments.outgoing(hit).iter().copied().filter(|&s| on(s)).collect()
    };
    let on_in_count = |hit: HitId| segments.incoming(hit).iter().filter(|&&s| on(s)).count();

    let mut starts: Vec<HitId> = segments
        .segments()
        .iter()
        .filter(|s| on(s.id) && on_in_count(s.from_hit) == 0)
        .map(|s| s.from_hit)
        .collect();
    starts.sort_unstable();
    starts.dedup();

    let mut out = Vec::new();
    for start in starts {
        // depth-first over maximal paths; stack holds (path, ambiguous)
        let mut stack = vec![(vec![start], false)];
        while let Some((path, ambiguous)) = stack.pop() {
            let tip = *path.last().expect("paths are non-empty");
            let next = on_out(tip);
            let branch = next.len() >= 2 || on_in_count(tip) >= 2;
            if next.is_empty() {
                if path.len() >= 3 {
                    out.push(TrackCandidate {
                        hits: path,
                        ambiguous: ambiguous || branch,
                    });
                }
                continue;
            }
            for &s in next.iter().rev() {
                let mut extended = path.clone();
                extended.push(segments.get(s).to_hit);
                stack.push((extended, ambiguous || branch));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{generate_event, DetectorGeometry, EventGenConfig};
    use crate::segments::{build_segments, Segment, SegmentCuts};

    fn seg(id: usize, from: HitId, to: HitId, dir: [f64; 2], length: f64) -> Segment {
        let n = dir[0].hypot(dir[1]);
        Segment {
            id,
            from_hit: from,
            to_hit: to,
            length,
            direction: [dir[0] / n, dir[1] / n],
        }
    }

    fn set(segs: Vec<Segment>) -> SegmentSet {
        SegmentSet::from_segments(segs)
    }

    const NO_CONSTRAINTS: DpParams = DpParams { m: 5, alpha: 0.0, beta: 0.0 };

    #[test]
    fn collinear_unit_pair_costs_one_half() {
        let s = set(vec![seg(0, 0, 1, [1.0, 0.0], 1.0), seg(1, 1, 2, [1.0, 0.0], 1.0)]);
        let c = build_cost(&s, 5, std::f64::consts::PI);
        // cos^5(0) / (1 + 1)
        assert_eq!(c.weight(0, 1), 0.5);
        assert_eq!(c.weight(1, 0), 0.5);
    }

    #[test]
    fn right_angle_with_even_exponent_costs_nothing() {
        let s = set(vec![seg(0, 0, 1, [1.0, 0.0], 1.0), seg(1, 1, 2, [0.0, 1.0], 1.0)]);
        let c = build_cost(&s, 4, std::f64::consts::PI);
        assert!(c.weight(0, 1).abs() < 1e-30);
    }

    #[test]
    fn unconnected_pair_costs_nothing() {
        let s = set(vec![seg(0, 0, 1, [1.0, 0.0], 1.0), seg(1, 2, 3, [1.0, 0.0], 1.0)]);
        assert_eq!(build_cost(&s, 5, std::f64::consts::PI).weight(0, 1), 0.0);
    }

    #[test]
    fn kink_cut_removes_sharp_pairs() {
        let s = set(vec![seg(0, 0, 1, [1.0, 0.0], 1.0), seg(1, 1, 2, [1.0, 1.0], 1.0)]);
        assert_eq!(build_cost(&s, 5, 0.5).weight(0, 1), 0.0);
        assert!(build_cost(&s, 5, 1.0).weight(0, 1) > 0.0);
    }

    #[test]
    fn constraint_examples() {
        let params = DpParams { m: 5, alpha: 2.0, beta: 0.5 };
        // 0: hit0 -> hit1, 1: hit0 -> hit2 (shared tail), 2: hit3 -> hit1 (shared head with 0), 3: hit4 -> hit5
        let s = set(vec![
            seg(0, 0, 1, [1.0, 0.0], 1.0),
            seg(1, 0, 2, [1.0, 0.1], 1.0),
            seg(2, 3, 1, [1.0, -0.1], 1.0),
            seg(3, 4, 5, [1.0, 0.0], 1.0),
        ]);
        let c = build_constraints(&s, &params);
        assert_eq!(c.weight(0, 1), -1.0 - 0.25);
        assert_eq!(c.weight(0, 2), -1.0 - 0.25);
        assert_eq!(c.weight(0, 3), -0.25);
        assert_eq!(c.weight(1, 2), -0.25);
        assert_eq!(c.weight(2, 2), 0.0);
    }

    #[test]
    fn energy_examples() {
        let s = set(vec![seg(0, 0, 1, [1.0, 0.0], 1.0), seg(1, 1, 2, [1.0, 0.0], 1.0)]);
        let net = NeuronNetwork::from_segments(&s, &NO_CONSTRAINTS, std::f64::consts::PI).unwrap();
        let e = |v: Vec<f64>| network_energy(&net, &ActivationState::new(v).unwrap()).unwrap();
        assert_eq!(e(vec![0.0, 0.0]), 0.0);
        assert_eq!(e(vec![1.0, 0.0]), 0.0);
        assert_eq!(e(vec![1.0, 1.0]), -0.5);
        assert!(network_energy(&net, &ActivationState::new(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn energy_matches_dense_double_sum() {
        let geo = DetectorGeometry::uniform(4, 1.0, 1.0, 0.0).unwrap();
        let ev = generate_event(&EventGenConfig { n_tracks: 3, noise_hit_count: 2, seed: 4, ..Default::default() }, &geo).unwrap();
        let segs = build_segments(&ev, &SegmentCuts::default()).unwrap();
        let params = DpParams { m: 3, alpha: 0.7, beta: 0.05 };
        let net = NeuronNetwork::from_segments(&segs, &params, 1.0).unwrap();
        let v: Vec<f64> = (0..net.n()).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
        let mut dense = 0.0;
        for a in 0..net.n() {
            for b in 0..net.n() {
                if a != b {
                    dense += net.weight(a, b) * v[a] * v[b];
                }
            }
        }
        let e = network_energy(&net, &ActivationState::new(v.clone()).unwrap()).unwrap();
        assert!((e - (-0.5 * dense)).abs() < 1e-9);
        // QUBO export agrees on binary states
        let q = net.to_qubo();
        let y: Vec<u8> = (0..net.n()).map(|i| (i % 3 == 0) as u8).collect();
        let act: Vec<f64> = y.iter().map(|&b| f64::from(b)).collect();
        assert!((q.energy(&y) - net.energy_unchecked(&act)).abs() < 1e-9);
    }

    #[test]
    fn isolated_neuron_sits_at_one_half() {
        let net = NeuronNetwork::new(1, Couplings::default(), vec![0.0]).unwrap();
        let sched = MeanFieldSchedule::geometric(5.0, 0.01, 10, 1e-9, 20);
        let mut seen = Vec::new();
        let out = mean_field_anneal_with(&net, &sched, 1, |_, _, v| seen.push(v[0])).unwrap();
        assert_eq!(out.values(), &[0.5]);
        assert!(seen.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn positive_input_saturates_at_low_temperature() {
        let net = NeuronNetwork::new(1, Couplings::default(), vec![0.1]).unwrap();
        let sched = MeanFieldSchedule::geometric(1.0, 1e-3, 8, 1e-12, 5);
        let out = mean_field_anneal(&net, &sched, 0).unwrap();
        assert!(out.values()[0] > 1.0 - 1e-12);
    }

    #[test]
    fn mean_field_is_deterministic_and_rejects_bad_schedules() {
        let s = set(vec![seg(0, 0, 1, [1.0, 0.0], 1.0), seg(1, 1, 2, [1.0, 0.0], 1.0), seg(2, 0, 3, [1.0, 0.3], 1.0)]);
        let net = NeuronNetwork::from_segments(&s, &DpParams { m: 5, alpha: 1.0, beta: 0.0 }, 1.0).unwrap();
        let sched = MeanFieldSchedule::geometric(1.0, 0.01, 12, 1e-6, 50);
        assert_eq!(mean_field_anneal(&net, &sched, 9).unwrap(), mean_field_anneal(&net, &sched, 9).unwrap());
        let empty = MeanFieldSchedule { temperatures: vec![], tolerance: 1e-6, max_sweeps: 5 };
        assert!(matches!(mean_field_anneal(&net, &empty, 0), Err(Error::Contract(_))));
        let rising = MeanFieldSchedule { temperatures: vec![0.1, 1.0], tolerance: 1e-6, max_sweeps: 5 };
        assert!(mean_field_anneal(&net, &rising, 0).is_err());
    }

    fn chain(n: usize) -> SegmentSet {
        set((0..n).map(|k| seg(k, k as HitId, k as HitId + 1, [1.0, 0.0], 1.0)).collect())
    }

    #[test]
    fn five_on_segments_make_one_six_hit_track() {
        let s = chain(5);
        let tracks = extract_tracks(&BinaryState::new(vec![1; 5]).unwrap(), &s).unwrap();
        assert_eq!(tracks, vec![TrackCandidate { hits: vec![0, 1, 2, 3, 4, 5], ambiguous: false }]);
    }

    #[test]
    fn all_off_gives_no_tracks() {
        let s = chain(5);
        assert!(extract_tracks(&BinaryState::new(vec![0; 5]).unwrap(), &s).unwrap().is_empty());
    }

    #[test]
    fn single_segment_is_not_a_track() {
        let s = chain(5);
        let tracks = extract_tracks(&BinaryState::new(vec![1, 0, 0, 1, 1]).unwrap(), &s).unwrap();
        assert_eq!(tracks, vec![TrackCandidate { hits: vec![3, 4, 5], ambiguous: false }]);
    }

    #[test]
    fn y_branch_splits_into_two_ambiguous_tracks() {
        // 0 -> 1, then 1 -> 2 and 1 -> 3
        let s = set(vec![
            seg(0, 0, 1, [1.0, 0.0], 1.0),
            seg(1, 1, 2, [1.0, 0.1], 1.0),
            seg(2, 1, 3, [1.0, -0.1], 1.0),
        ]);
        let tracks = extract_tracks(&BinaryState::new(vec![1, 1, 1]).unwrap(), &s).unwrap();
        assert_eq!(
            tracks,
            vec![
                TrackCandidate { hits: vec![0, 1, 2], ambiguous: true },
                TrackCandidate { hits: vec![0, 1, 3], ambiguous: true },
            ]
        );
    }

    #[test]
    fn merging_chains_are_ambiguous() {
        // 0 -> 2 and 1 -> 2 merge, then 2 -> 3
        let s = set(vec![
            seg(0, 0, 2, [1.0, 0.0], 1.0),
            seg(1, 1, 2, [1.0, 0.1], 1.0),
            seg(2, 2, 3, [1.0, 0.0], 1.0),
        ]);
        let tracks = extract_tracks(&BinaryState::new(vec![1, 1, 1]).unwrap(), &s).unwrap();
        assert_eq!(tracks.len(), 2);
        assert!(tracks.iter().all(|t| t.ambiguous && t.hits.len() == 3));
    }
}
