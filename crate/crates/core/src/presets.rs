//! Shipped parameter presets.
//!
//! The track-finding defaults were tuned on a noiseless three-track, five-layer
//! event and then frozen; the regression fixture in `tests/fixtures` pins them.

use crate::network::{geometric_ladder, DpParams, MeanFieldSchedule};
use crate::segments::SegmentCuts;
use crate::solvers::MeanFieldParams;

pub const DP_PARAMS: DpParams = DpParams {
    m: 5,
    alpha: 2.0,
    beta: 0.01,
};

pub const MAX_KINK_ANGLE: f64 = 0.5;

pub fn segment_cuts() -> SegmentCuts {
    SegmentCuts {
        max_segment_length: None,
        max_kink_angle: MAX_KINK_ANGLE,
        max_neurons: 20_000,
    }
}

pub fn meanfield_schedule() -> MeanFieldSchedule {
    MeanFieldSchedule {
        temperatures: geometric_ladder(1.0, 0.01, 30),
        tolerance: 1e-6,
        max_sweeps: 200,
    }
}

pub fn meanfield_params(seed: u64) -> MeanFieldParams {
    let s = meanfield_schedule();
    MeanFieldParams {
        temperatures: s.temperatures,
        tolerance: s.tolerance,
        max_sweeps: s.max_sweeps,
        restarts: 1,
        seed,
    }
}
