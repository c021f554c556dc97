//! Synthetic transverse-plane collision events.
//!
//! Tracks are circular arcs through the primary vertex at the origin. A track with
//! signed curvature `k` and initial azimuth `phi0` crosses a layer of radius `r`
//! at azimuth `phi0 + asin(r * k / 2)`, provided `|r * k| <= 2`.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub type HitId = u32;

/// Relative tolerance for a hit's distance from the origin versus its layer radius.
pub const RADIUS_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorGeometry {
    layer_radii: Vec<f64>,
    sigma_phi: f64,
}

impl DetectorGeometry {
    pub fn new(layer_radii: Vec<f64>, sigma_phi: f64) -> Result<Self> {
        if layer_radii.is_empty() {
            return Err(Error::Config("geometry needs at least one layer".into()));
        }
        if layer_radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::Config("layer radii must be finite and positive".into()));
        }
        if layer_radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("layer radii must be strictly increasing".into()));
        }
        if !sigma_phi.is_finite() || sigma_phi < 0.0 {
            return Err(Error::Config("sigma_phi must be finite and >= 0".into()));
        }
        Ok(Self {
            layer_radii,
            sigma_phi,
        })
    }

    /// Equally spaced layers at `first, first + spacing, ...`.
    pub fn uniform(n_layers: usize, first: f64, spacing: f64, sigma_phi: f64) -> Result<Self> {
        Self::new(
            (0..n_layers).map(|l| first + spacing * l as f64).collect(),
            sigma_phi,
        )
    }

    pub fn n_layers(&self) -> usize {
        self.layer_radii.len()
    }

    pub fn layer_radii(&self) -> &[f64] {
        &self.layer_radii
    }

    pub fn sigma_phi(&self) -> f64 {
        self.sigma_phi
    }
}

impl<'de> Deserialize<'de> for DetectorGeometry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            layer_radii: Vec<f64>,
            sigma_phi: f64,
        }
        let raw = Raw::deserialize(d)?;
        DetectorGeometry::new(raw.layer_radii, raw.sigma_phi).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hit {
    pub id: HitId,
    pub layer: usize,
    pub x: f64,
    pub y: f64,
}

impl Hit {
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthTrack {
    pub track_id: u32,
    pub hit_ids: Vec<HitId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub tracks: Vec<TruthTrack>,
    pub noise_hit_ids: Vec<HitId>,
}

impl Truth {
    /// Consecutive hit pairs of every truth track, i.e. the segments a perfect
    /// reconstruction would switch on.
    pub fn true_segments(&self) -> HashSet<(HitId, HitId)> {
        self.tracks
            .iter()
            .flat_map(|t| t.hit_ids.windows(2).map(|w| (w[0], w[1])))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub geometry: DetectorGeometry,
    pub hits: Vec<Hit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
}

impl Event {
    pub fn empty(geometry: DetectorGeometry) -> Self {
        Event {
            geometry,
            hits: Vec::new(),
            truth: Some(Truth::default()),
        }
    }

    /// Map from hit id to its position in `hits`.
    pub fn hit_index(&self) -> BTreeMap<HitId, usize> {
        self.hits.iter().enumerate().map(|(i, h)| (h.id, i)).collect()
    }

    /// Checks every structural invariant of an event.
    pub fn validate(&self) -> Result<()> {
        let n_layers = self.geometry.n_layers();
        let mut layer_of = BTreeMap::new();
        for (i, h) in self.hits.iter().enumerate() {
            let rec = || format!("hits[{i}] (id {})", h.id);
            if layer_of.insert(h.id, h.layer).is_some() {
                return Err(Error::parse_record(rec(), "duplicate hit id"));
            }
            if h.layer >= n_layers {
                return Err(Error::parse_record(
                    rec(),
                    format!("layer {} out of range (detector has {n_layers})", h.layer),
                ));
            }
            if !h.x.is_finite() || !h.y.is_finite() {
                return Err(Error::parse_record(rec(), "non-finite coordinate"));
            }
            let r = self.geometry.layer_radii[h.layer];
            if ((h.radius() - r) / r).abs() > RADIUS_REL_TOL {
                return Err(Error::parse_record(
                    rec(),
                    format!("radius {} is not on layer radius {r}", h.radius()),
                ));
            }
        }

        let Some(truth) = &self.truth else {
            return Ok(());
        };
        let mut seen = HashSet::new();
        let mut track_ids = HashSet::new();
        for (t, track) in truth.tracks.iter().enumerate() {
            let rec = || format!("truth.tracks[{t}] (track_id {})", track.track_id);
            if !track_ids.insert(track.track_id) {
                return Err(Error::parse_record(rec(), "duplicate track id"));
            }
            let mut prev_layer: Option<usize> = None;
            for id in &track.hit_ids {
                let Some(&layer) = layer_of.get(id) else {
                    return Err(Error::parse_record(rec(), format!("unknown hit id {id}")));
                };
                if prev_layer.is_some_and(|p| layer <= p) {
                    return Err(Error::parse_record(
                        rec(),
                        "hits must be on strictly increasing layers",
                    ));
                }
                prev_layer = Some(layer);
                if !seen.insert(*id) {
                    return Err(Error::parse_record(rec(), format!("hit {id} assigned twice")));
                }
            }
        }
        for id in &truth.noise_hit_ids {
            if !layer_of.contains_key(id) {
                return Err(Error::parse_record(
                    "truth.noise_hit_ids",
                    format!("unknown hit id {id}"),
                ));
            }
            if !seen.insert(*id) {
                return Err(Error::parse_record(
                    "truth.noise_hit_ids",
                    format!("hit {id} assigned twice"),
                ));
            }
        }
        if seen.len() != self.hits.len() {
            return Err(Error::parse_record(
                "truth",
                format!(
                    "truth covers {} of {} hits; every hit must be a track hit or noise",
                    seen.len(),
                    self.hits.len()
                ),
            ));
        }
        Ok(())
    }

    /// Applies a rigid rotation about the origin to every hit.
    pub fn rotated(&self, angle: f64) -> Event {
        let (s, c) = angle.sin_cos();
        let mut out = self.clone();
        for h in &mut out.hits {
            let (x, y) = (h.x, h.y);
            h.x = c * x - s * y;
            h.y = s * x + c * y;
        }
        out
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            geometry: DetectorGeometry,
            hits: Vec<Hit>,
            #[serde(default)]
            truth: Option<Truth>,
        }
        let raw = Raw::deserialize(d)?;
        Ok(Event {
            geometry: raw.geometry,
            hits: raw.hits,
            truth: raw.truth,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventGenConfig {
    pub n_tracks: usize,
    /// Signed curvature range (inverse length); both ends equal means a fixed value.
    pub curvature: (f64, f64),
    /// Initial azimuth drawn uniformly from this range (radians).
    pub azimuth: (f64, f64),
    pub noise_hit_count: usize,
    pub smear: bool,
    pub seed: u64,
}

impl Default for EventGenConfig {
    fn default() -> Self {
        EventGenConfig {
            n_tracks: 3,
            curvature: (-0.05, 0.05),
            azimuth: (0.0, TAU),
            noise_hit_count: 0,
            smear: false,
            seed: 0,
        }
    }
}

impl EventGenConfig {
    fn validate(&self) -> Result<()> {
        let (k0, k1) = self.curvature;
        let (a0, a1) = self.azimuth;
        if !(k0.is_finite() && k1.is_finite() && k0 <= k1) {
            return Err(Error::Config("curvature range must be finite with min <= max".into()));
        }
        if !(a0.is_finite() && a1.is_finite() && a0 <= a1) {
            return Err(Error::Config("azimuth range must be finite with min <= max".into()));
        }
        Ok(())
    }
}

fn uniform_in<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Azimuth at which an arc through the origin with curvature `k` and initial
/// azimuth `phi0` crosses radius `r`, or `None` when the arc never gets that far.
pub fn arc_crossing(phi0: f64, curvature: f64, r: f64) -> Option<f64> {
    let half_chord = r * curvature / 2.0;
    (half_chord.abs() <= 1.0).then(|| phi0 + half_chord.asin())
}

pub fn generate_event(config: &EventGenConfig, geometry: &DetectorGeometry) -> Result<Event> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let smear = if config.smear && geometry.sigma_phi() > 0.0 {
        Some(Normal::new(0.0, geometry.sigma_phi()).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };

    let mut hits = Vec::new();
    let mut tracks = Vec::with_capacity(config.n_tracks);
    let mut next_id: HitId = 0;
    for t in 0..config.n_tracks {
        let curvature = uniform_in(&mut rng, config.curvature);
        let phi0 = uniform_in(&mut rng, config.azimuth);
        let mut hit_ids = Vec::new();
        for (layer, &r) in geometry.layer_radii().iter().enumerate() {
            // radii increase, so once the arc turns back it misses every outer layer
            let Some(mut phi) = arc_crossing(phi0, curvature, r) else {
                break;
            };
            if let Some(normal) = &smear {
                phi += normal.sample(&mut rng);
            }
            let (s, c) = phi.sin_cos();
            hits.push(Hit {
                id: next_id,
                layer,
                x: r * c,
                y: r * s,
            });
            hit_ids.push(next_id);
            next_id += 1;
        }
        tracks.push(TruthTrack {
            track_id: t as u32,
            hit_ids,
        });
    }

    let mut noise_hit_ids = Vec::with_capacity(config.noise_hit_count);
    for _ in 0..config.noise_hit_count {
        let layer = rng.random_range(0..geometry.n_layers());
        let phi = rng.random_range(0.0..TAU);
        let r = geometry.layer_radii()[layer];
        let (s, c) = phi.sin_cos();
        hits.push(Hit {
            id: next_id,
            layer,
            x: r * c,
            y: r * s,
        });
        noise_hit_ids.push(next_id);
        next_id += 1;
    }

    Ok(Event {
        geometry: geometry.clone(),
        hits,
        truth: Some(Truth {
            tracks,
            noise_hit_ids,
        }),
    })
}

pub fn event_to_json(event: &Event) -> String {
    let mut s = serde_json::to_string_pretty(event).expect("event serialization is infallible");
    s.push('\n');
    s
}

pub fn event_from_json(text: &str) -> Result<Event> {
    let event: Event = serde_json::from_str(text).map_err(|e| {
        Error::parse_record(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    event.validate()?;
    Ok(event)
}

pub fn save_event(event: &Event, path: &Path) -> Result<()> {
    std::fs::write(path, event_to_json(event))?;
    Ok(())
}

pub fn load_event(path: &Path) -> Result<Event> {
    event_from_json(&std::fs::read_to_string(path)?)
}
