//! Candidate segments ("neurons"): directed hit pairs on adjacent detector layers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, HitId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub id: usize,
    pub from_hit: HitId,
    pub to_hit: HitId,
    /// Euclidean length.
    pub length: f64,
    /// Unit vector from `from_hit` to `to_hit`.
    pub direction: [f64; 2],
}

impl Segment {
    /// The same hit pair traversed the other way.
    pub fn reversed(&self) -> Segment {
        Segment {
            from_hit: self.to_hit,
            to_hit: self.from_hit,
            direction: [-self.direction[0], -self.direction[1]],
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentCuts {
    /// `None` means unbounded.
    pub max_segment_length: Option<f64>,
    /// Largest kink angle (radians) for which two connected segments are coupled.
    pub max_kink_angle: f64,
    pub max_neurons: usize,
}

impl Default for SegmentCuts {
    fn default() -> Self {
        SegmentCuts {
            max_segment_length: None,
            max_kink_angle: std::f64::consts::PI,
            max_neurons: 100_000,
        }
    }
}

impl SegmentCuts {
    pub fn validate(&self) -> Result<()> {
        let theta = self.max_kink_angle;
        if !(theta > 0.0 && theta <= std::f64::consts::PI) {
            return Err(Error::Config("max kink angle must lie in (0, pi]".into()));
        }
        if self.max_neurons == 0 {
            return Err(Error::Config("neuron budget must be at least 1".into()));
        }
        if let Some(len) = self.max_segment_length {
            if len.is_nan() || len <= 0.0 {
                return Err(Error::Config("max segment length must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct SegmentSet {
    segments: Vec<Segment>,
    outgoing: BTreeMap<HitId, Vec<usize>>,
    incoming: BTreeMap<HitId, Vec<usize>>,
}

impl SegmentSet {
    pub fn from_segments(segments: Vec<Segment>) -> Self {
        let mut outgoing: BTreeMap<HitId, Vec<usize>> = BTreeMap::new();
        let mut incoming: BTreeMap<HitId, Vec<usize>> = BTreeMap::new();
        for s in &segments {
            outgoing.entry(s.from_hit).or_default().push(s.id);
            incoming.entry(s.to_hit).or_default().push(s.id);
        }
        SegmentSet {
            segments,
            outgoing,
            incoming,
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn get(&self, id: usize) -> &Segment {
        &self.segments[id]
    }

    pub fn outgoing(&self, hit: HitId) -> &[usize] {
        self.outgoing.get(&hit).map_or(&[], Vec::as_slice)
    }

    pub fn incoming(&self, hit: HitId) -> &[usize] {
        self.incoming.get(&hit).map_or(&[], Vec::as_slice)
    }

    /// Segment id for a hit pair, if that pair is a candidate.
    pub fn find(&self, from: HitId, to: HitId) -> Option<usize> {
        self.outgoing(from)
            .iter()
            .copied()
            .find(|&s| self.segments[s].to_hit == to)
    }

    /// All ordered pairs `(a, b)` with `a.to_hit == b.from_hit`.
    pub fn connected_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.segments
            .iter()
            .flat_map(move |a| self.outgoing(a.to_hit).iter().map(move |&b| (a.id, b)))
    }
}

pub fn build_segments(event: &Event, cuts: &SegmentCuts) -> Result<SegmentSet> {
    cuts.validate()?;
    let n_layers = event.geometry.n_layers();
    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); n_layers];
    for (i, h) in event.hits.iter().enumerate() {
        if h.layer >= n_layers {
            return Err(Error::contract(format!("hit {} has invalid layer {}", h.id, h.layer)));
        }
        by_layer[h.layer].push(i);
    }

    let mut pairs = Vec::new();
    for layer in 0..n_layers.saturating_sub(1) {
        for &a in &by_layer[layer] {
            for &b in &by_layer[layer + 1] {
                let (ha, hb) = (&event.hits[a], &event.hits[b]);
                let (dx, dy) = (hb.x - ha.x, hb.y - ha.y);
                let length = dx.hypot(dy);
                if length <= 0.0 || cuts.max_segment_length.is_some_and(|m| length > m) {
                    continue;
                }
                pairs.push((ha.id, hb.id, length, [dx / length, dy / length]));
            }
        }
    }
    if pairs.len() > cuts.max_neurons {
        return Err(Error::NeuronBudget {
            required: pairs.len(),
            budget: cuts.max_neurons,
        });
    }
    pairs.sort_by_key(|p| (p.0, p.1));
    let segments = pairs
        .into_iter()
        .enumerate()
        .map(|(id, (from_hit, to_hit, length, direction))| Segment {
            id,
            from_hit,
            to_hit,
            length,
            direction,
        })
        .collect();
    Ok(SegmentSet::from_segments(segments))
}

/// Angle in `[0, pi]` between the directions of two segments joined head to tail.
pub fn segment_angle(s1: &Segment, s2: &Segment) -> Result<f64> {
    if s1.to_hit != s2.from_hit {
        return Err(Error::contract(format!(
            "segments {} and {} are not connected",
            s1.id, s2.id
        )));
    }
    Ok(direction_angle(s1.direction, s2.direction))
}

pub(crate) fn direction_angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1];
    let cross = a[0] * b[1] - a[1] * b[0];
    cross.abs().atan2(dot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: usize,
    pub from: HitId,
    pub to: HitId,
}

/// Event envelope plus a `segments` array, used for segment dumps.
#[derive(Debug, Serialize)]
pub struct SegmentDump<'a> {
    #[serde(flatten)]
    pub event: &'a Event,
    pub segments: Vec<SegmentRecord>,
}

pub fn segments_to_json(event: &Event, set: &SegmentSet) -> String {
    let dump = SegmentDump {
        event,
        segments: set
            .segments()
            .iter()
            .map(|s| SegmentRecord {
                id: s.id,
                from: s.from_hit,
                to: s.to_hit,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&dump).expect("segment dump serialization");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{generate_event, DetectorGeometry, EventGenConfig, Hit, Truth};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn seg(id: usize, from: HitId, to: HitId, dir: [f64; 2]) -> Segment {
        let n = dir[0].hypot(dir[1]);
        Segment {
            id,
            from_hit: from,
            to_hit: to,
            length: 1.0,
            direction: [dir[0] / n, dir[1] / n],
        }
    }

    fn two_hit_event(layer_b: usize) -> Event {
        let geometry = DetectorGeometry::new(vec![1.0, 2.0], 0.0).unwrap();
        Event {
            geometry,
            hits: vec![
                Hit { id: 0, layer: 0, x: 1.0, y: 0.0 },
                Hit { id: 1, layer: layer_b, x: if layer_b == 0 { 0.0 } else { 2.0 }, y: if layer_b == 0 { 1.0 } else { 0.0 } },
            ],
            truth: None,
        }
    }

    #[test]
    fn adjacent_pair_makes_one_segment() {
        let set = build_segments(&two_hit_event(1), &SegmentCuts::default()).unwrap();
        assert_eq!(set.len(), 1);
        let s = set.get(0);
        assert_eq!((s.from_hit, s.to_hit), (0, 1));
        assert_eq!(s.length, 1.0);
        assert_eq!(set.outgoing(0), &[0]);
        assert_eq!(set.incoming(1), &[0]);
    }

    #[test]
    fn same_layer_pair_makes_none() {
        let set = build_segments(&two_hit_event(0), &SegmentCuts::default()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn length_cut_prunes() {
        let cuts = SegmentCuts {
            max_segment_length: Some(0.5),
            ..Default::default()
        };
        assert!(build_segments(&two_hit_event(1), &cuts).unwrap().is_empty());
    }

    #[test]
    fn budget_overflow_reports_required_count() {
        let geo = DetectorGeometry::uniform(6, 1.0, 1.0, 0.0).unwrap();
        let cfg = EventGenConfig { n_tracks: 5, seed: 1, ..Default::default() };
        let ev = generate_event(&cfg, &geo).unwrap();
        let cuts = SegmentCuts { max_neurons: 10, ..Default::default() };
        match build_segments(&ev, &cuts) {
            Err(Error::NeuronBudget { required, budget }) => {
                assert_eq!(required, 5 * 25);
                assert_eq!(budget, 10);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn noiseless_event_contains_all_true_segments() {
        let geo = DetectorGeometry::uniform(6, 1.0, 1.0, 0.0).unwrap();
        let cfg = EventGenConfig { n_tracks: 5, seed: 21, ..Default::default() };
        let ev = generate_event(&cfg, &geo).unwrap();
        let set = build_segments(&ev, &SegmentCuts::default()).unwrap();
        // oracle: consecutive pairs of each truth track
        let truth: &Truth = ev.truth.as_ref().unwrap();
        let mut expected = 0;
        for t in &truth.tracks {
            for w in t.hit_ids.windows(2) {
                expected += 1;
                assert!(set.find(w[0], w[1]).is_some(), "missing {:?}", w);
            }
        }
        assert_eq!(expected, 25);
        // ordering by (from, to)
        let keys: Vec<_> = set.segments().iter().map(|s| (s.from_hit, s.to_hit)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn angle_examples() {
        let a = seg(0, 0, 1, [1.0, 0.0]);
        assert_eq!(segment_angle(&a, &seg(1, 1, 2, [1.0, 0.0])).unwrap(), 0.0);
        let perp = segment_angle(&a, &seg(1, 1, 2, [0.0, 1.0])).unwrap();
        assert!((perp - FRAC_PI_2).abs() < 1e-15);
        let diag = segment_angle(&a, &seg(1, 1, 2, [1.0, 1.0])).unwrap();
        // oracle: arccos of the dot product
        let oracle = (1.0f64 / 2f64.sqrt()).acos();
        assert!((diag - oracle).abs() < 1e-12);
        assert!((diag - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn angle_of_disconnected_pair_is_contract_violation() {
        let a = seg(0, 0, 1, [1.0, 0.0]);
        let b = seg(1, 5, 6, [1.0, 0.0]);
        assert!(matches!(segment_angle(&a, &b), Err(Error::Contract(_))));
    }

    #[test]
    fn invalid_cuts_rejected() {
        let ev = two_hit_event(1);
        for cuts in [
            SegmentCuts { max_kink_angle: 0.0, ..Default::default() },
            SegmentCuts { max_kink_angle: 4.0, ..Default::default() },
            SegmentCuts { max_neurons: 0, ..Default::default() },
        ] {
            assert!(build_segments(&ev, &cuts).is_err());
        }
    }

    proptest! {
        #[test]
        fn angle_is_reversal_symmetric_and_rotation_invariant(
            seed in 0u64..500, rot in -10.0f64..10.0
        ) {
            let geo = DetectorGeometry::uniform(4, 1.0, 1.0, 0.0).unwrap();
            let cfg = EventGenConfig { n_tracks: 3, noise_hit_count: 2, seed, ..Default::default() };
            let ev = generate_event(&cfg, &geo).unwrap();
            let set = build_segments(&ev, &SegmentCuts::default()).unwrap();
            let rotated = build_segments(&ev.rotated(rot), &SegmentCuts::default()).unwrap();
            prop_assert_eq!(set.len(), rotated.len());
            for (a, b) in set.connected_pairs() {
                let (s1, s2) = (set.get(a), set.get(b));
                let theta = segment_angle(s1, s2).unwrap();
                prop_assert!((0.0..=std::f64::consts::PI).contains(&theta));
                let back = segment_angle(&s2.reversed(), &s1.reversed()).unwrap();
                prop_assert!((theta - back).abs() < 1e-9);
                let turned = segment_angle(rotated.get(a), rotated.get(b)).unwrap();
                prop_assert!((theta - turned).abs() < 1e-9);
            }
        }
    }
}
