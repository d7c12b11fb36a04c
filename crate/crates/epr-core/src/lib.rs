//! Deterministic simulator of EPR polarization-entanglement experiments.
//!
//! The crate has five layers:
//!
//! * [`polarization`] — exact one- and two-photon state algebra: the
//!   entangled pair, two-channel polarizer measurements, conditional
//!   collapse, half-wave plates, and closed-form coincidence probabilities.
//! * [`spacetime`] — 2+1-dimensional special relativity: Lorentz boosts
//!   along the apparatus axis, interval classification, event ordering, the
//!   critical boost velocity, and worldline simultaneity intersections.
//! * [`scenario`] — the experiment description (geometry, devices, run
//!   parameters), its text format, and timeline construction.
//! * [`engine`] — seeded, reproducible Monte Carlo trials with optional
//!   classical feed-forward, plus per-frame event-order reports.
//! * [`stats`] — coincidence tables, correlation estimates, CHSH values,
//!   and Malus-law fits.
//!
//! All values are immutable after construction and all operations are pure;
//! batches are bit-reproducible functions of `(scenario, seed)` regardless
//! of how many threads execute them.
//!
//! ```
//! use epr_core::{bell_state, joint_probabilities, Angle};
//!
//! // Coincidence probabilities at a 30-degree relative angle:
//! // ½cos²(30°) = 3/8 for equal channels, ½sin²(30°) = 1/8 for opposite.
//! let jp = joint_probabilities(&bell_state(), Angle::ZERO, Angle::degrees(30.0)).unwrap();
//! assert!((jp.tt - 0.375).abs() < 1e-12);
//! assert!((jp.tr - 0.125).abs() < 1e-12);
//! ```

pub mod engine;
pub mod polarization;
pub mod scenario;
pub mod spacetime;
pub mod stats;

pub use engine::{
    frame_report, records_to_csv, records_to_jsonl, run_batch, run_trial, CollapseLocus,
    EngineError, FrameReport, MirrorSide, PathTaken, TrialRecord,
};
pub use polarization::{
    bell_state, collapse, conditional_partner_state, conditional_probability, half_wave_plate,
    joint_probabilities, outcome_probabilities, Angle, Channel, JointProbabilities, Photon,
    PhotonState, StateError, TwoPhotonState,
};
pub use scenario::{
    build_timeline, parse_angle_literal, parse_scenario, parse_scenario_bytes, serialize_scenario,
    validate, CollapseOrder, DeviationMode, Diagnostic, FeedForward, ParseError, PathChoice,
    Point, RunConfig, Scenario, ScenarioError, Severity, Timeline,
};
pub use spacetime::{
    boost_event, critical_velocity, interval, ordering, simultaneous_point, Boost, Event,
    EventLabel, EventOrder, IntervalClass, IntervalKind, SpacetimeError, Worldline,
    WorldlinePoint,
};
pub use stats::{
    chsh_analytic, chsh_empirical, correlation, malus_fit, tabulate, ChshAngles, ChshResult,
    CoincidenceTable, MalusFit, MalusPoint, StatsError,
};
