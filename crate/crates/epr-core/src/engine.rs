//! Seeded Monte Carlo execution of scenarios.
//!
//! Determinism contract: a batch is a pure function of `(scenario, seed)`.
//! Trial `i` draws from its own ChaCha8 stream — the cipher is keyed by the
//! run seed and the stream index is the trial index — so parallel and serial
//! execution produce bit-identical records. Within a trial, draws are
//! consumed in a fixed order: route choice (beam-splitter mode only), then
//! the first photon's outcome, then the second's.

use crate::polarization::{
    bell_state, conditional_partner_state, half_wave_plate, outcome_probabilities, Angle, Channel,
    Photon, StateError,
};
use crate::scenario::{
    build_timeline, CollapseOrder, DeviationMode, PathChoice, Scenario, ScenarioError, Timeline,
};
use crate::spacetime::{
    boost_event, Boost, Event, EventLabel, IntervalClass, SpacetimeError, WorldlinePoint,
    SIMULTANEITY_TOLERANCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

/// Route a trial's photon two actually took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathTaken {
    Long,
    Short,
    Direct,
}

impl fmt::Display for PathTaken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathTaken::Long => write!(f, "long"),
            PathTaken::Short => write!(f, "short"),
            PathTaken::Direct => write!(f, "direct"),
        }
    }
}

/// Everything one trial produced. The timeline is shared between trials of
/// the same route (it depends only on the geometry, never on the draws).
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub path_taken: PathTaken,
    pub outcome1: Channel,
    pub outcome2: Channel,
    /// Axis of the half-wave-plate correction, when feed-forward fired.
    pub hwp_axis: Option<Angle>,
    pub timeline: Arc<Timeline>,
    /// Interval between the two detection events.
    pub interval_class: IntervalClass,
}

impl TrialRecord {
    pub fn hwp_applied(&self) -> bool {
        self.hwp_axis.is_some()
    }
}

fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

struct TrialSetup {
    scenario: Scenario,
    long: Option<Arc<Timeline>>,
    short: Option<Arc<Timeline>>,
}

impl TrialSetup {
    fn new(scenario: &Scenario) -> Result<TrialSetup, EngineError> {
        let (long, short) = match scenario.deviation_mode {
            DeviationMode::None => (
                None,
                Some(Arc::new(build_timeline(scenario, PathChoice::Short)?)),
            ),
            DeviationMode::Mirrors => (
                Some(Arc::new(build_timeline(scenario, PathChoice::Long)?)),
                None,
            ),
            DeviationMode::Beamsplitter => (
                Some(Arc::new(build_timeline(scenario, PathChoice::Long)?)),
                Some(Arc::new(build_timeline(scenario, PathChoice::Short)?)),
            ),
        };
        Ok(TrialSetup {
            scenario: scenario.clone(),
            long,
            short,
        })
    }

    fn run(&self, trial_index: u64) -> Result<TrialRecord, EngineError> {
        let s = &self.scenario;
        let mut rng = trial_rng(s.run.seed, trial_index);

        let path_taken = match s.deviation_mode {
            DeviationMode::None => PathTaken::Direct,
            DeviationMode::Mirrors => PathTaken::Long,
            DeviationMode::Beamsplitter => {
                if rng.random_bool(0.5) {
                    PathTaken::Long
                } else {
                    PathTaken::Short
                }
            }
        };
        let timeline = match path_taken {
            PathTaken::Long => self.long.as_ref(),
            PathTaken::Short | PathTaken::Direct => self.short.as_ref(),
        }
        .expect("timeline prepared for every reachable route")
        .clone();

        let state = bell_state();
        // The correction can only fire when the classical message reaches
        // Bob first; on the short/direct routes it is provably late.
        let feed_forward = s.feedforward.enabled && timeline.message_beats_photon2() == Some(true);

        // The feed-forward protocol is sequential in the lab frame (photon 1
        // strictly first), so it pins the sampling order; otherwise the
        // configured collapse order applies.
        let (first_photon, first_angle, second_angle) = if feed_forward {
            (Photon::One, s.orientation_a, s.orientation_b)
        } else {
            match s.run.collapse_order {
                CollapseOrder::Photon1First => (Photon::One, s.orientation_a, s.orientation_b),
                CollapseOrder::Photon2First => (Photon::Two, s.orientation_b, s.orientation_a),
            }
        };

        let (p_first_transmit, _) = outcome_probabilities(&state, first_photon, first_angle)?;
        let first_outcome = if rng.random::<f64>() < p_first_transmit {
            Channel::Transmitted
        } else {
            Channel::Reflected
        };
        let mut partner =
            conditional_partner_state(&state, first_photon, first_angle, first_outcome)?;

        let mut hwp_axis = None;
        if feed_forward {
            let collapsed = match first_outcome {
                Channel::Transmitted => s.orientation_a,
                Channel::Reflected => s.orientation_a.orthogonal(),
            };
            // Reflecting the collapsed direction about (φ + target)/2 sends
            // it onto the target for either channel of polarizer I.
            let axis = Angle::radians(
                ((collapsed.rad() + s.feedforward.target.rad()) / 2.0).rem_euclid(PI),
            );
            partner = half_wave_plate(&partner, axis);
            hwp_axis = Some(axis);
        }

        let p_second_transmit = partner.transmit_probability(second_angle);
        let second_outcome = if rng.random::<f64>() < p_second_transmit {
            Channel::Transmitted
        } else {
            Channel::Reflected
        };

        let (outcome1, outcome2) = match first_photon {
            Photon::One => (first_outcome, second_outcome),
            Photon::Two => (second_outcome, first_outcome),
        };
        let interval_class = timeline.detection_interval();

        Ok(TrialRecord {
            trial_index,
            path_taken,
            outcome1,
            outcome2,
            hwp_axis,
            timeline,
            interval_class,
        })
    }
}

/// Runs a single trial. Prefer [`run_batch`] for many trials; both agree
/// record-for-record.
pub fn run_trial(scenario: &Scenario, trial_index: u64) -> Result<TrialRecord, EngineError> {
    TrialSetup::new(scenario)?.run(trial_index)
}

/// Runs `scenario.run.trials` trials in parallel, records in trial order.
pub fn run_batch(scenario: &Scenario) -> Result<Vec<TrialRecord>, EngineError> {
    let setup = TrialSetup::new(scenario)?;
    (0..scenario.run.trials)
        .into_par_iter()
        .map(|i| setup.run(i))
        .collect()
}

/// Where the collapse locus sits relative to the first mirror on photon
/// two's route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MirrorSide {
    #[serde(rename = "before_mirror_M")]
    BeforeMirror,
    #[serde(rename = "past_mirror_M")]
    PastMirror,
}

impl fmt::Display for MirrorSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MirrorSide::BeforeMirror => write!(f, "before_mirror_M"),
            MirrorSide::PastMirror => write!(f, "past_mirror_M"),
        }
    }
}

/// The point on photon two's worldline that a frame deems simultaneous with
/// photon one's detection — that frame's answer to "when did photon two
/// acquire a definite polarization".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseLocus {
    pub event: Event,
    /// Index of the worldline segment carrying the locus.
    pub segment: usize,
    /// Relative position, `None` when the route has no mirror.
    pub position: Option<MirrorSide>,
}

/// Event ordering and collapse locus as seen from one boosted frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub beta: f64,
    /// All timeline labels sorted by boosted time; simultaneous events
    /// (within tolerance) are ordered lexicographically by label.
    pub event_order: Vec<EventLabel>,
    pub collapse_locus: Option<CollapseLocus>,
}

/// Sorts the timeline's events by their time in the frame moving at `beta`
/// and locates the collapse locus on photon two's worldline.
pub fn frame_report(timeline: &Timeline, beta: f64) -> Result<FrameReport, SpacetimeError> {
    let boost = Boost::new(beta)?;

    let mut items: Vec<(f64, String, EventLabel)> = timeline
        .events()
        .iter()
        .map(|e| (boost_event(e, boost).t, e.label.to_string(), e.label))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    // Events distinct in coordinates may still be simultaneous within
    // tolerance; order those runs by label too.
    let mut start = 0;
    for i in 1..=items.len() {
        let run_ends = i == items.len() || {
            let (ta, tb) = (items[i - 1].0, items[i].0);
            (tb - ta).abs() > SIMULTANEITY_TOLERANCE * ta.abs().max(tb.abs()).max(1.0)
        };
        if run_ends {
            items[start..i].sort_by(|a, b| a.1.cmp(&b.1));
            start = i;
        }
    }
    let event_order: Vec<EventLabel> = items.into_iter().map(|(_, _, label)| label).collect();

    let locus = crate::spacetime::simultaneous_point(
        timeline.photon2_worldline(),
        timeline.nu1_detection(),
        boost,
    );
    let collapse_locus = locus.map(|WorldlinePoint { event, segment }| {
        let position = timeline.first_mirror().map(|mirror| {
            let t_locus = boost_event(&event, boost).t;
            let t_mirror = boost_event(mirror, boost).t;
            let tol = SIMULTANEITY_TOLERANCE * t_locus.abs().max(t_mirror.abs()).max(1.0);
            if t_locus < t_mirror - tol {
                MirrorSide::BeforeMirror
            } else {
                MirrorSide::PastMirror
            }
        });
        CollapseLocus {
            event,
            segment,
            position,
        }
    });

    Ok(FrameReport {
        beta,
        event_order,
        collapse_locus,
    })
}

#[derive(Serialize)]
struct RecordRow {
    trial: u64,
    path: PathTaken,
    outcome1: Channel,
    outcome2: Channel,
    hwp_applied: bool,
    hwp_axis_rad: Option<f64>,
    interval_class: crate::spacetime::IntervalKind,
    s_squared: f64,
}

impl RecordRow {
    fn from_record(r: &TrialRecord) -> RecordRow {
        RecordRow {
            trial: r.trial_index,
            path: r.path_taken,
            outcome1: r.outcome1,
            outcome2: r.outcome2,
            hwp_applied: r.hwp_applied(),
            hwp_axis_rad: r.hwp_axis.map(|a| a.rad()),
            interval_class: r.interval_class.kind,
            s_squared: r.interval_class.s_squared,
        }
    }
}

/// One JSON object per line, fields: trial, path, outcome1, outcome2,
/// hwp_applied, hwp_axis_rad, interval_class, s_squared.
pub fn records_to_jsonl(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let row = RecordRow::from_record(r);
        out.push_str(&serde_json::to_string(&row).expect("record row serializes"));
        out.push('\n');
    }
    out
}

/// CSV with the same column order as the JSON Lines fields; an absent
/// half-wave-plate axis is an empty cell.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(
        "trial,path,outcome1,outcome2,hwp_applied,hwp_axis_rad,interval_class,s_squared\n",
    );
    for r in records {
        let axis = r.hwp_axis.map_or(String::new(), |a| a.rad().to_string());
        let channel = |c: Channel| match c {
            Channel::Transmitted => "transmitted",
            Channel::Reflected => "reflected",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.trial_index,
            r.path_taken,
            channel(r.outcome1),
            channel(r.outcome2),
            r.hwp_applied(),
            axis,
            r.interval_class.kind,
            r.interval_class.s_squared,
        )
        .expect("writing to a String cannot fail");
    }
    out
}
