//! Special-relativity event algebra in 2+1 dimensions (t, x, y) with c = 1.
//!
//! Boosts are restricted to the x axis, the line joining the source to the
//! two polarizers. Positive `beta` means the frame moves toward photon two's
//! side (+x); photon one travels toward −x. The vertical detour of photon
//! two lives in y and is unaffected by x-boosts except through time.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Relative tolerance for classifying an interval as lightlike.
pub const LIGHTLIKE_TOLERANCE: f64 = 1e-9;

/// Relative tolerance under which two boosted times count as simultaneous.
pub const SIMULTANEITY_TOLERANCE: f64 = 1e-12;

/// Tolerance on the speed of worldline segments.
pub const SEGMENT_SPEED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpacetimeError {
    #[error("boost velocity {beta} is not inside (-1, 1)")]
    InvalidBoost { beta: f64 },
    #[error("distances must be positive, got x1 = {x1}, x2 = {x2}")]
    InvalidGeometry { x1: f64, x2: f64 },
    #[error("malformed worldline: {reason}")]
    MalformedWorldline { reason: String },
}

/// Role of an event in an experiment timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventLabel {
    Emission,
    Pol1Arrival,
    Detection1,
    /// k-th deflection (mirror or beam splitter) on photon two's route,
    /// counted from 1.
    Mirror(u32),
    Pol2Arrival,
    Detection2,
    MessageSent,
    MessageReceived,
    CollapseLocus,
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventLabel::Emission => write!(f, "emission"),
            EventLabel::Pol1Arrival => write!(f, "pol1_arrival"),
            EventLabel::Detection1 => write!(f, "detection1"),
            EventLabel::Mirror(k) => write!(f, "mirror_{k}"),
            EventLabel::Pol2Arrival => write!(f, "pol2_arrival"),
            EventLabel::Detection2 => write!(f, "detection2"),
            EventLabel::MessageSent => write!(f, "message_sent"),
            EventLabel::MessageReceived => write!(f, "message_received"),
            EventLabel::CollapseLocus => write!(f, "collapse_locus"),
        }
    }
}

impl Serialize for EventLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A labeled spacetime point in c = 1 units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub label: EventLabel,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Event {
    pub fn new(label: EventLabel, t: f64, x: f64, y: f64) -> Event {
        Event { label, t, x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.y.is_finite()
    }
}

/// An inertial frame moving with velocity `beta` (units of c) along +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boost {
    beta: f64,
}

impl Boost {
    pub fn new(beta: f64) -> Result<Boost, SpacetimeError> {
        if !beta.is_finite() || beta.abs() >= 1.0 {
            return Err(SpacetimeError::InvalidBoost { beta });
        }
        Ok(Boost { beta })
    }

    /// The lab frame itself.
    pub fn identity() -> Boost {
        Boost { beta: 0.0 }
    }

    pub fn beta(self) -> f64 {
        self.beta
    }

    pub fn gamma(self) -> f64 {
        1.0 / (1.0 - self.beta * self.beta).sqrt()
    }

    pub fn inverse(self) -> Boost {
        Boost { beta: -self.beta }
    }

    /// Relativistic composition: boosting by `self` and then by `other` is a
    /// single boost at `(β₁+β₂)/(1+β₁β₂)`.
    pub fn compose(self, other: Boost) -> Boost {
        Boost {
            beta: (self.beta + other.beta) / (1.0 + self.beta * other.beta),
        }
    }
}

/// Lorentz transformation of an event into the boosted frame:
/// `t' = γ(t − βx)`, `x' = γ(x − βt)`, `y' = y`. The label is preserved.
pub fn boost_event(e: &Event, b: Boost) -> Event {
    let gamma = b.gamma();
    Event {
        label: e.label,
        t: gamma * (e.t - b.beta * e.x),
        x: gamma * (e.x - b.beta * e.t),
        y: e.y,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    Timelike,
    Spacelike,
    Lightlike,
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalKind::Timelike => write!(f, "timelike"),
            IntervalKind::Spacelike => write!(f, "spacelike"),
            IntervalKind::Lightlike => write!(f, "lightlike"),
        }
    }
}

/// Classified spacetime interval `s² = Δt² − Δx² − Δy²` between two events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalClass {
    pub kind: IntervalKind,
    pub s_squared: f64,
}

/// Interval classification with a relative lightlike tolerance, so large
/// coordinates do not misclassify nearly-null pairs.
pub fn interval(e1: &Event, e2: &Event) -> IntervalClass {
    let dt = e2.t - e1.t;
    let dx = e2.x - e1.x;
    let dy = e2.y - e1.y;
    let spatial_sqr = dx * dx + dy * dy;
    let s_squared = dt * dt - spatial_sqr;
    let tol = LIGHTLIKE_TOLERANCE * (dt * dt).max(spatial_sqr).max(1.0);
    let kind = if s_squared > tol {
        IntervalKind::Timelike
    } else if s_squared < -tol {
        IntervalKind::Spacelike
    } else {
        IntervalKind::Lightlike
    };
    IntervalClass { kind, s_squared }
}

/// Temporal order of two events as seen from a boosted frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOrder {
    E1First,
    E2First,
    Simultaneous,
}

pub fn ordering(e1: &Event, e2: &Event, b: Boost) -> EventOrder {
    let t1 = boost_event(e1, b).t;
    let t2 = boost_event(e2, b).t;
    let tol = SIMULTANEITY_TOLERANCE * t1.abs().max(t2.abs()).max(1.0);
    if (t2 - t1).abs() <= tol {
        EventOrder::Simultaneous
    } else if t1 < t2 {
        EventOrder::E1First
    } else {
        EventOrder::E2First
    }
}

/// The boost velocity at which photon one's detection (distance `x1` toward
/// −x) and photon two's arrival at the first mirror (distance `x2` toward
/// +x) become simultaneous: `(x2 − x1)/(x2 + x1)`.
///
/// Above it the mirror event comes first. Negative when `x2 < x1`, meaning
/// any rightward boost already reverses the order. Scale-invariant in the
/// pair of distances.
pub fn critical_velocity(x1: f64, x2: f64) -> Result<f64, SpacetimeError> {
    if x1 <= 0.0 || x2 <= 0.0 || !x1.is_finite() || !x2.is_finite() {
        return Err(SpacetimeError::InvalidGeometry { x1, x2 });
    }
    Ok((x2 - x1) / (x2 + x1))
}

/// A piecewise-straight trajectory traversed at a single speed, with
/// strictly increasing event times along it.
#[derive(Debug, Clone, PartialEq)]
pub struct Worldline {
    vertices: Vec<Event>,
    speed: f64,
}

impl Worldline {
    /// A photon trajectory: every segment traversed at exactly c.
    pub fn lightlike(vertices: Vec<Event>) -> Result<Worldline, SpacetimeError> {
        Worldline::with_speed(vertices, 1.0)
    }

    /// A trajectory at uniform `speed` in (0, 1]. Each consecutive pair of
    /// vertices must satisfy Δt > 0 and |Δr| = speed·Δt within tolerance.
    pub fn with_speed(vertices: Vec<Event>, speed: f64) -> Result<Worldline, SpacetimeError> {
        if !(speed > 0.0 && speed <= 1.0) {
            return Err(SpacetimeError::MalformedWorldline {
                reason: format!("segment speed {speed} is outside (0, 1]"),
            });
        }
        if vertices.len() < 2 {
            return Err(SpacetimeError::MalformedWorldline {
                reason: format!("need at least two vertices, got {}", vertices.len()),
            });
        }
        for pair in vertices.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if !a.is_finite() || !b.is_finite() {
                return Err(SpacetimeError::MalformedWorldline {
                    reason: "non-finite vertex coordinates".into(),
                });
            }
            let dt = b.t - a.t;
            let dist = (b.x - a.x).hypot(b.y - a.y);
            if dt <= 0.0 {
                return Err(SpacetimeError::MalformedWorldline {
                    reason: format!("non-increasing time between {} and {}", a.label, b.label),
                });
            }
            if (dist - speed * dt).abs() > SEGMENT_SPEED_TOLERANCE * dt.max(1.0) {
                return Err(SpacetimeError::MalformedWorldline {
                    reason: format!(
                        "segment {} -> {} travels {dist} in time {dt}, expected speed {speed}",
                        a.label, b.label
                    ),
                });
            }
        }
        Ok(Worldline { vertices, speed })
    }

    pub fn vertices(&self) -> &[Event] {
        &self.vertices
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn start(&self) -> &Event {
        &self.vertices[0]
    }

    pub fn end(&self) -> &Event {
        self.vertices.last().expect("worldline has vertices")
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// A point on a worldline together with the index of the segment carrying it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldlinePoint {
    pub event: Event,
    pub segment: usize,
}

/// The unique point of `w` that, in frame `b`, is simultaneous with
/// `reference` — the frame's answer to "where was the particle when the
/// reference event happened". Returns `None` when the boosted reference time
/// falls outside the worldline's boosted time span.
///
/// Uniqueness holds because forward trajectories at speed ≤ c are monotone
/// in every boosted frame's time; within one straight segment the boosted
/// time is linear, so the intersection is exact.
pub fn simultaneous_point(w: &Worldline, reference: &Event, b: Boost) -> Option<WorldlinePoint> {
    let t_ref = boost_event(reference, b).t;
    let mut boosted_prev = boost_event(&w.vertices[0], b).t;
    if t_ref < boosted_prev {
        return None;
    }
    for (segment, pair) in w.vertices.windows(2).enumerate() {
        let (a, vb) = (&pair[0], &pair[1]);
        let boosted_next = boost_event(vb, b).t;
        if t_ref <= boosted_next {
            let span = boosted_next - boosted_prev;
            let s = if span > 0.0 { (t_ref - boosted_prev) / span } else { 0.0 };
            let event = Event {
                label: EventLabel::CollapseLocus,
                t: a.t + s * (vb.t - a.t),
                x: a.x + s * (vb.x - a.x),
                y: a.y + s * (vb.y - a.y),
            };
            return Some(WorldlinePoint { event, segment });
        }
        boosted_prev = boosted_next;
    }
    None
}
