//! Track finding as energy minimisation.
//!
//! Synthetic detector events are turned into candidate segments, the segments
//! into a Hopfield-style neuron network, and the network into Ising/QUBO form
//! that exact, thermal, mean-field and path-integral annealers can minimise.
//! A Chimera-graph embedding layer maps logical problems onto annealer-style
//! hardware connectivity.

pub mod chimera;
pub mod config;
pub mod error;
pub mod event;
pub mod ising;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod presets;
pub mod seed;
pub mod segments;
pub mod solvers;

pub use error::{Error, Result};
pub use event::{DetectorGeometry, Event, EventGenConfig, Hit, HitId, Truth, TruthTrack};
pub use ising::{BinaryState, IsingProblem, QuboProblem, SpinState};
pub use network::{ActivationState, DpParams, MeanFieldSchedule, NeuronNetwork, TrackCandidate};
pub use segments::{Segment, SegmentCuts, SegmentSet};
pub use solvers::{Method, SolveResult, SolverConfig};
