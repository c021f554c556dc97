//! Run configuration: a flat `key = value` file grouped into `[sections]`.
//!
//! ```text
//! [run]
//! seed = 42
//!
//! [geometry]
//! layer_radii = 1, 2, 3, 4, 5
//! sigma_phi = 0
//!
//! [solver]
//! method = meanfield
//! ```
//!
//! Every key is optional; missing keys keep the shipped presets. Unknown
//! sections or keys are rejected so typos do not pass silently.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::event::{DetectorGeometry, EventGenConfig};
use crate::network::{geometric_ladder, DpParams};
use crate::presets;
use crate::segments::SegmentCuts;
use crate::solvers::{linear_ladder, Method, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub geometry: DetectorGeometry,
    /// The generator seed is derived from `seed` at run time; the field here is ignored.
    pub generator: EventGenConfig,
    pub cuts: SegmentCuts,
    pub dp: DpParams,
    pub method: Method,
    pub solver: SolverConfig,
    pub chimera_grid: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            geometry: DetectorGeometry::uniform(5, 1.0, 1.0, 0.0).expect("valid preset geometry"),
            generator: EventGenConfig::default(),
            cuts: presets::segment_cuts(),
            dp: presets::DP_PARAMS,
            method: Method::Meanfield,
            solver: SolverConfig::default(),
            chimera_grid: None,
            out_dir: None,
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn parse_sections(text: &str) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split_once('#').map_or(raw, |(b, _)| b).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse_line(line_no, "expected 'key = value'"))?;
        let section = current
            .as_ref()
            .ok_or_else(|| Error::parse_line(line_no, "key outside of any [section]"))?;
        let key = key.trim().to_string();
        let entry = Entry {
            value: value.trim().to_string(),
            line: line_no,
        };
        if sections
            .get_mut(section)
            .expect("section exists")
            .insert(key.clone(), entry)
            .is_some()
        {
            return Err(Error::parse_line(line_no, format!("duplicate key '{key}'")));
        }
    }
    Ok(sections)
}

struct Reader<'a> {
    sections: &'a mut Sections,
}

impl Reader<'_> {
    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.sections.get_mut(section)?.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        match self.take(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| {
                Error::parse_line(e.line, format!("invalid value '{}' for {section}.{key}", e.value))
            }),
        }
    }

    fn float(&mut self, section: &str, key: &str) -> Result<Option<f64>> {
        self.parse(section, key)
    }

    fn list(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.take(section, key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|t| {
                t.trim().parse().map_err(|_| {
                    Error::parse_line(e.line, format!("invalid number '{}' in {section}.{key}", t.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    fn finish(self) -> Result<()> {
        for (section, keys) in self.sections.iter() {
            if let Some((key, e)) = keys.iter().next() {
                return Err(Error::parse_line(e.line, format!("unknown key '{section}.{key}'")));
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 10] = [
    "run", "geometry", "generator", "cuts", "dp", "solver", "meanfield", "sa", "sqa", "chimera",
];

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut sections = parse_sections(text)?;
        if let Some(bad) = sections.keys().find(|s| !SECTIONS.contains(&s.as_str())) {
            return Err(Error::Config(format!("unknown section [{bad}]")));
        }
        let mut r = Reader {
            sections: &mut sections,
        };
        let mut cfg = RunConfig::default();

        if let Some(seed) = r.parse("run", "seed")? {
            cfg.seed = seed;
        }
        cfg.out_dir = r.take("run", "out").map(|e| PathBuf::from(e.value));

        let radii = r.list("geometry", "layer_radii")?;
        let sigma = r.float("geometry", "sigma_phi")?;
        if radii.is_some() || sigma.is_some() {
            cfg.geometry = DetectorGeometry::new(
                radii.unwrap_or_else(|| cfg.geometry.layer_radii().to_vec()),
                sigma.unwrap_or(cfg.geometry.sigma_phi()),
            )?;
        }

        let g = &mut cfg.generator;
        if let Some(v) = r.parse("generator", "n_tracks")? {
            g.n_tracks = v;
        }
        if let Some(v) = r.float("generator", "curvature_min")? {
            g.curvature.0 = v;
        }
        if let Some(v) = r.float("generator", "curvature_max")? {
            g.curvature.1 = v;
        }
        if let Some(v) = r.float("generator", "azimuth_min")? {
            g.azimuth.0 = v;
        }
        if let Some(v) = r.float("generator", "azimuth_max")? {
            g.azimuth.1 = v;
        }
        if let Some(v) = r.parse("generator", "noise_hits")? {
            g.noise_hit_count = v;
        }
        if let Some(v) = r.parse("generator", "smear")? {
            g.smear = v;
        }

        if let Some(e) = r.take("cuts", "max_segment_length") {
            cfg.cuts.max_segment_length = match e.value.as_str() {
                "inf" | "none" | "unbounded" => None,
                v => Some(v.parse().map_err(|_| {
                    Error::parse_line(e.line, format!("invalid value '{v}' for cuts.max_segment_length"))
                })?),
            };
        }
        if let Some(v) = r.float("cuts", "max_kink_angle")? {
            cfg.cuts.max_kink_angle = v;
        }
        if let Some(v) = r.parse("cuts", "max_neurons")? {
            cfg.cuts.max_neurons = v;
        }
        cfg.cuts.validate()?;

        if let Some(v) = r.parse("dp", "m")? {
            cfg.dp.m = v;
        }
        if let Some(v) = r.float("dp", "alpha")? {
            cfg.dp.alpha = v;
        }
        if let Some(v) = r.float("dp", "beta")? {
            cfg.dp.beta = v;
        }
        cfg.dp.validate()?;

        if let Some(e) = r.take("solver", "method") {
            cfg.method = e.value.parse()?;
        }

        let mf = &mut cfg.solver.meanfield;
        let (t0, t1, steps) = (
            r.float("meanfield", "t_start")?,
            r.float("meanfield", "t_end")?,
            r.parse::<usize>("meanfield", "steps")?,
        );
        if t0.is_some() || t1.is_some() || steps.is_some() {
            mf.temperatures = geometric_ladder(
                t0.unwrap_or(mf.temperatures[0]),
                t1.unwrap_or(*mf.temperatures.last().expect("preset ladder")),
                steps.unwrap_or(mf.temperatures.len()),
            );
        }
        if let Some(v) = r.float("meanfield", "tolerance")? {
            mf.tolerance = v;
        }
        if let Some(v) = r.parse("meanfield", "max_sweeps")? {
            mf.max_sweeps = v;
        }
        if let Some(v) = r.parse("meanfield", "restarts")? {
            mf.restarts = v;
        }

        let sa = &mut cfg.solver.sa;
        let (t0, t1, steps) = (
            r.float("sa", "t_start")?,
            r.float("sa", "t_end")?,
            r.parse::<usize>("sa", "steps")?,
        );
        if t0.is_some() || t1.is_some() || steps.is_some() {
            sa.temperatures = geometric_ladder(
                t0.unwrap_or(sa.temperatures[0]),
                t1.unwrap_or(*sa.temperatures.last().expect("preset ladder")),
                steps.unwrap_or(sa.temperatures.len()),
            );
        }
        if let Some(v) = r.parse("sa", "sweeps")? {
            sa.sweeps_per_temperature = v;
        }
        if let Some(v) = r.parse("sa", "restarts")? {
            sa.restarts = v;
        }

        let sqa = &mut cfg.solver.sqa;
        let (g0, g1, steps) = (
            r.float("sqa", "gamma_start")?,
            r.float("sqa", "gamma_end")?,
            r.parse::<usize>("sqa", "steps")?,
        );
        if g0.is_some() || g1.is_some() || steps.is_some() {
            sqa.gammas = linear_ladder(
                g0.unwrap_or(sqa.gammas[0]),
                g1.unwrap_or(*sqa.gammas.last().expect("preset ladder")),
                steps.unwrap_or(sqa.gammas.len()),
            );
        }
        if let Some(v) = r.parse("sqa", "slices")? {
            sqa.trotter_slices = v;
        }
        if let Some(v) = r.float("sqa", "temperature")? {
            sqa.temperature = v;
        }
        if let Some(v) = r.parse("sqa", "sweeps")? {
            sqa.sweeps_per_gamma = v;
        }
        if let Some(v) = r.parse("sqa", "restarts")? {
            sqa.restarts = v;
        }

        cfg.chimera_grid = r.parse("chimera", "grid_n")?;
        r.finish()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_presets() {
        assert_eq!(RunConfig::from_text("").unwrap(), RunConfig::default());
    }

    #[test]
    fn reads_every_section() {
        let text = "\
# fixture
[run]
seed = 7
out = results

[geometry]
layer_radii = 2, 4, 6
sigma_phi = 0.001

[generator]
n_tracks = 4
noise_hits = 3
smear = true
curvature_min = -0.01
curvature_max = 0.02

[cuts]
max_segment_length = 3.5
max_kink_angle = 0.3

[dp]
alpha = 2.5

[solver]
method = sqa

[sqa]
slices = 8
gamma_start = 2
gamma_end = 0.1
steps = 5

[chimera]
grid_n = 2
";
        let cfg = RunConfig::from_text(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.out_dir, Some(PathBuf::from("results")));
        assert_eq!(cfg.geometry.layer_radii(), &[2.0, 4.0, 6.0]);
        assert_eq!(cfg.generator.n_tracks, 4);
        assert!(cfg.generator.smear);
        assert_eq!(cfg.generator.curvature, (-0.01, 0.02));
        assert_eq!(cfg.cuts.max_segment_length, Some(3.5));
        assert_eq!(cfg.dp.alpha, 2.5);
        assert_eq!(cfg.method, Method::Sqa);
        assert_eq!(cfg.solver.sqa.trotter_slices, 8);
        let expected = [2.0, 1.525, 1.05, 0.575, 0.1];
        assert_eq!(cfg.solver.sqa.gammas.len(), 5);
        for (g, e) in cfg.solver.sqa.gammas.iter().zip(expected) {
            assert!((g - e).abs() < 1e-12);
        }
        assert_eq!(cfg.chimera_grid, Some(2));
    }

    #[test]
    fn unknown_method_is_usage_error() {
        let err = RunConfig::from_text("[solver]\nmethod = magic\n").unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn typos_are_rejected_with_line_numbers() {
        match RunConfig::from_text("[dp]\nalpah = 1\n") {
            Err(Error::Parse { location, .. }) => assert_eq!(location, crate::error::Location::Line(2)),
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::from_text("[nope]\n").is_err());
        assert!(RunConfig::from_text("seed = 1\n").is_err());
        assert!(RunConfig::from_text("[run]\nseed = x\n").is_err());
        assert!(RunConfig::from_text("[run]\nseed = 1\nseed = 2\n").is_err());
    }
}
