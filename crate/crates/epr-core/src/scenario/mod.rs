//! Declarative experiment descriptions and their text format.
//!
//! A [`Scenario`] fixes the apparatus geometry (photon one's flight distance,
//! photon two's route with optional mirror detour or beam splitters), the
//! polarizer orientations, the feed-forward channel, and the run parameters.
//! [`build_timeline`] turns one into labeled spacetime events and worldlines;
//! [`parse_scenario`] reads the sectioned `key = value` text format.

mod parse;
mod timeline;

pub use parse::{parse_angle_literal, parse_scenario, parse_scenario_bytes, serialize_scenario,
                ParseError};
pub use timeline::{build_timeline, PathChoice, Timeline};

use crate::polarization::Angle;
use crate::spacetime::SpacetimeError;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("path choice `{choice}` is invalid for deviation mode `{mode}`")]
    InvalidPathChoice { mode: DeviationMode, choice: PathChoice },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

/// A 2D position in the plane of the apparatus (units of c·time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Route variant for photon two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviationMode {
    /// Straight flight to polarizer II; detections are spacelike for the
    /// symmetric geometry.
    None,
    /// Mirror detour: photon one is detected first in every frame.
    Mirrors,
    /// The lower mirrors replaced by 50/50 beam splitters; each pair takes
    /// the long or the short route at random.
    Beamsplitter,
}

impl fmt::Display for DeviationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviationMode::None => write!(f, "none"),
            DeviationMode::Mirrors => write!(f, "mirrors"),
            DeviationMode::Beamsplitter => write!(f, "beamsplitter"),
        }
    }
}

/// Classical message channel from Alice (at photon one's detector) to Bob
/// (at polarizer II) plus the half-wave-plate correction it triggers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedForward {
    pub enabled: bool,
    /// Orientation Bob steers photon two onto; defaults to polarizer II's
    /// setting, which forces transmission.
    pub target: Angle,
    /// Signal speed in units of c, in (0, 1].
    pub message_speed: f64,
}

/// Which photon the engine samples first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseOrder {
    Photon1First,
    Photon2First,
}

impl fmt::Display for CollapseOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollapseOrder::Photon1First => write!(f, "photon1_first"),
            CollapseOrder::Photon2First => write!(f, "photon2_first"),
        }
    }
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub trials: u64,
    pub seed: u64,
    pub collapse_order: CollapseOrder,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            trials: 10_000,
            seed: 0,
            collapse_order: CollapseOrder::Photon1First,
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Distance from the source to polarizer I / detector 1, toward −x.
    pub photon1_distance: f64,
    /// Polarizer I orientation.
    pub orientation_a: Angle,
    /// Vertices of photon two's route from the source at (0,0) to
    /// polarizer II: first and last points on the +x axis, intermediate
    /// points at y ≥ 0. Empty for the direct route.
    pub photon2_path: Vec<Point>,
    /// Polarizer II position on the +x axis for the direct route and for
    /// the beam-splitter "transmitted" branch. Equals the last path vertex's
    /// x whenever a path is present.
    pub photon2_direct_distance: f64,
    /// Polarizer II orientation.
    pub orientation_b: Angle,
    pub deviation_mode: DeviationMode,
    pub feedforward: FeedForward,
    pub run: RunConfig,
}

impl Scenario {
    /// Symmetric direct-route scenario (the spacelike configuration).
    pub fn direct(photon1_distance: f64, photon2_distance: f64) -> Scenario {
        Scenario {
            photon1_distance,
            orientation_a: Angle::ZERO,
            photon2_path: Vec::new(),
            photon2_direct_distance: photon2_distance,
            orientation_b: Angle::ZERO,
            deviation_mode: DeviationMode::None,
            feedforward: FeedForward {
                enabled: false,
                target: Angle::ZERO,
                message_speed: 1.0,
            },
            run: RunConfig::default(),
        }
    }

    /// Mirror-detour scenario along `path` (first vertex = first mirror,
    /// last vertex = polarizer II).
    pub fn with_path(photon1_distance: f64, path: Vec<Point>) -> Scenario {
        let direct = path.last().map_or(0.0, |p| p.x);
        Scenario {
            photon1_distance,
            orientation_a: Angle::ZERO,
            photon2_path: path,
            photon2_direct_distance: direct,
            orientation_b: Angle::ZERO,
            deviation_mode: DeviationMode::Mirrors,
            feedforward: FeedForward {
                enabled: false,
                target: Angle::ZERO,
                message_speed: 1.0,
            },
            run: RunConfig::default(),
        }
    }

    /// Total length of photon two's long route (path vertices chained from
    /// the source), or the direct distance when there is no path.
    pub fn long_route_length(&self) -> f64 {
        if self.photon2_path.is_empty() {
            return self.photon2_direct_distance;
        }
        let mut previous = Point::new(0.0, 0.0);
        let mut length = 0.0;
        for p in &self.photon2_path {
            length += previous.distance(p);
            previous = *p;
        }
        length
    }

    /// True when `validate` reports no error-severity diagnostics.
    pub fn is_valid(&self) -> bool {
        !validate(self).iter().any(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
            Severity::Info => write!(f, "info"),
        }
    }
}

/// One validation finding, tied to the field (dotted path) it concerns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(severity: Severity, field: &str, message: String) -> Diagnostic {
        Diagnostic {
            severity,
            field: field.to_string(),
            message,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.severity, self.field, self.message)
    }
}

/// Checks every scenario invariant and, when the geometry is sound, reports
/// informationally whether the photon-1-detection to photon-2-polarizer
/// interval is timelike and whether the feed-forward message wins its race.
pub fn validate(s: &Scenario) -> Vec<Diagnostic> {
    use Severity::{Error, Info, Warning};
    let mut out = structural_diagnostics(s);

    // Informational analysis needs a constructible geometry.
    if out.iter().any(|d| d.severity == Error) {
        return out;
    }

    let long_choice = match s.deviation_mode {
        DeviationMode::None => PathChoice::Short,
        _ => PathChoice::Long,
    };
    if let Ok(timeline) = build_timeline(s, long_choice) {
        let cls = timeline.detection_interval();
        let msg = match cls.kind {
            crate::spacetime::IntervalKind::Timelike => format!(
                "timelike guaranteed (s_squared = {}): photon 1 is detected before photon 2 \
                 reaches polarizer II in every frame",
                cls.s_squared
            ),
            kind => format!(
                "{kind} separation (s_squared = {}): detection order is frame-dependent",
                cls.s_squared
            ),
        };
        out.push(Diagnostic::new(Info, "timeline", msg));

        if s.feedforward.enabled {
            let received = timeline.message_received().expect("feed-forward timeline");
            let arrival = timeline.nu2_arrival();
            if received.t < arrival.t {
                out.push(Diagnostic::new(
                    Info,
                    "feedforward",
                    format!(
                        "message arrives first: received at t = {} before photon 2's polarizer \
                         arrival at t = {}",
                        received.t, arrival.t
                    ),
                ));
            } else {
                out.push(Diagnostic::new(
                    Warning,
                    "feedforward",
                    format!(
                        "message cannot arrive before photon 2 reaches polarizer II \
                         (received t = {}, photon arrival t = {})",
                        received.t, arrival.t
                    ),
                ));
            }
        }
    }

    if s.deviation_mode == DeviationMode::Beamsplitter {
        if let Ok(short) = build_timeline(s, PathChoice::Short) {
            let cls = short.detection_interval();
            out.push(Diagnostic::new(
                Info,
                "timeline",
                format!(
                    "short branch: detections are {} (s_squared = {})",
                    cls.kind, cls.s_squared
                ),
            ));
        }
    }

    out
}

/// Invariant checks alone, without the timeline-derived analysis.
pub(crate) fn structural_diagnostics(s: &Scenario) -> Vec<Diagnostic> {
    use Severity::Error;
    let mut out = Vec::new();
    let err = |field: &str, message: String| Diagnostic::new(Error, field, message);

    if s.photon1_distance <= 0.0 || !s.photon1_distance.is_finite() {
        out.push(err(
            "photon1.distance",
            format!("must be positive (got {})", s.photon1_distance),
        ));
    }
    if s.photon2_direct_distance <= 0.0 || !s.photon2_direct_distance.is_finite() {
        out.push(err(
            "photon2.distance",
            format!("must be positive (got {})", s.photon2_direct_distance),
        ));
    }
    for (field, angle) in [
        ("photon1.polarizer", s.orientation_a),
        ("photon2.polarizer", s.orientation_b),
        ("feedforward.target", s.feedforward.target),
    ] {
        if !angle.rad().is_finite() {
            out.push(err(field, "must be finite".to_string()));
        }
    }
    if !(s.feedforward.message_speed > 0.0 && s.feedforward.message_speed <= 1.0) {
        out.push(err(
            "feedforward.message_speed",
            format!("must lie in (0, 1] (got {})", s.feedforward.message_speed),
        ));
    }
    if s.run.trials == 0 {
        out.push(err("run.trials", "must be at least 1".to_string()));
    }

    match s.deviation_mode {
        DeviationMode::None => {
            if !s.photon2_path.is_empty() {
                out.push(err(
                    "photon2.deviation",
                    "mode `none` does not allow a path".to_string(),
                ));
            }
        }
        DeviationMode::Mirrors | DeviationMode::Beamsplitter => {
            if s.photon2_path.is_empty() {
                out.push(err(
                    "photon2.path",
                    format!("mode `{}` requires a path", s.deviation_mode),
                ));
            }
        }
    }

    if !s.photon2_path.is_empty() {
        out.extend(validate_path(s));
    }

    out
}

fn validate_path(s: &Scenario) -> Vec<Diagnostic> {
    use Severity::Error;
    let path = &s.photon2_path;
    let mut out = Vec::new();

    if path.len() < 2 {
        out.push(Diagnostic::new(
            Error,
            "photon2.path",
            "needs at least two points (a first mirror and the polarizer position)".to_string(),
        ));
        return out;
    }
    if path.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        out.push(Diagnostic::new(
            Error,
            "photon2.path",
            "coordinates must be finite".to_string(),
        ));
        return out;
    }
    let first = path[0];
    let last = *path.last().expect("non-empty path");
    if first.y != 0.0 || first.x <= 0.0 {
        out.push(Diagnostic::new(
            Error,
            "photon2.path",
            format!("must start on the +x axis, got {first}"),
        ));
    }
    if last.y != 0.0 || last.x <= 0.0 {
        out.push(Diagnostic::new(
            Error,
            "photon2.path",
            format!("must end on the +x axis, got {last}"),
        ));
    }
    for (i, p) in path.iter().enumerate() {
        if p.y < 0.0 {
            out.push(Diagnostic::new(
                Error,
                "photon2.path",
                format!("vertex {i} at {p} dips below the apparatus axis (y < 0)"),
            ));
        }
    }
    let mut previous = Point::new(0.0, 0.0);
    for (i, p) in path.iter().enumerate() {
        if previous.distance(p) == 0.0 {
            out.push(Diagnostic::new(
                Error,
                "photon2.path",
                format!("degenerate zero-length segment ending at vertex {i}"),
            ));
        }
        previous = *p;
    }
    if (s.photon2_direct_distance - last.x).abs() > 1e-12 {
        out.push(Diagnostic::new(
            Error,
            "photon2.distance",
            format!(
                "direct distance {} disagrees with the path's polarizer position {}",
                s.photon2_direct_distance, last.x
            ),
        ));
    }
    if s.deviation_mode == DeviationMode::Beamsplitter && last.x <= first.x {
        out.push(Diagnostic::new(
            Error,
            "photon2.path",
            "beam-splitter short branch needs the polarizer strictly past the first splitter"
                .to_string(),
        ));
    }
    out
}
