//! Construction of labeled event timelines from a scenario.

use super::{DeviationMode, Point, Scenario, ScenarioError, Severity};
use crate::spacetime::{interval, Event, EventLabel, IntervalClass, Worldline};
use std::fmt;

/// Route selection for one trial. `Long` follows the scenario path; `Short`
/// is the straight flight (the only route in direct mode, the transmitted
/// branch in beam-splitter mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathChoice {
    Long,
    Short,
}

impl fmt::Display for PathChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathChoice::Long => write!(f, "long"),
            PathChoice::Short => write!(f, "short"),
        }
    }
}

/// Every labeled event of one experiment run, plus the worldlines that
/// connect them. Emission happens at the origin; photon one's polarizer and
/// detector are co-located (one event), and likewise for photon two.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    events: Vec<Event>,
    photon1: Worldline,
    photon2: Worldline,
    message: Option<Worldline>,
}

impl Timeline {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn photon1_worldline(&self) -> &Worldline {
        &self.photon1
    }

    pub fn photon2_worldline(&self) -> &Worldline {
        &self.photon2
    }

    pub fn message_worldline(&self) -> Option<&Worldline> {
        self.message.as_ref()
    }

    pub fn event(&self, label: EventLabel) -> Option<&Event> {
        self.events.iter().find(|e| e.label == label)
    }

    /// Photon one's detection (arrival at polarizer I).
    pub fn nu1_detection(&self) -> &Event {
        self.event(EventLabel::Detection1).expect("timeline has detection1")
    }

    /// Photon two's arrival at polarizer II (its detection).
    pub fn nu2_arrival(&self) -> &Event {
        self.event(EventLabel::Detection2).expect("timeline has detection2")
    }

    /// First deflection on photon two's route, if the route has one.
    pub fn first_mirror(&self) -> Option<&Event> {
        self.event(EventLabel::Mirror(1))
    }

    pub fn message_sent(&self) -> Option<&Event> {
        self.event(EventLabel::MessageSent)
    }

    pub fn message_received(&self) -> Option<&Event> {
        self.event(EventLabel::MessageReceived)
    }

    /// Interval between the two detections.
    pub fn detection_interval(&self) -> IntervalClass {
        interval(self.nu1_detection(), self.nu2_arrival())
    }

    /// Whether the classical message reaches Bob before photon two reaches
    /// polarizer II, in the lab frame. `None` when no message is modeled.
    pub fn message_beats_photon2(&self) -> Option<bool> {
        self.message_received()
            .map(|received| received.t < self.nu2_arrival().t)
    }
}

/// Lays out the events of one run: emission at the origin, photon one's
/// detection at `(x1, −x1, 0)`, photon two's events at cumulative route
/// length, and — when feed-forward is enabled — Alice's message from the
/// detection event to Bob's station at polarizer II.
pub fn build_timeline(s: &Scenario, choice: PathChoice) -> Result<Timeline, ScenarioError> {
    let diagnostics = super::structural_diagnostics(s);
    if let Some(first) = diagnostics.iter().find(|d| d.severity == Severity::Error) {
        return Err(ScenarioError::Invalid(first.to_string()));
    }

    let route = photon2_route(s, choice)?;

    let emission = Event::new(EventLabel::Emission, 0.0, 0.0, 0.0);
    let x1 = s.photon1_distance;
    let detection1 = Event::new(EventLabel::Detection1, x1, -x1, 0.0);
    let photon1 = Worldline::lightlike(vec![emission, detection1])?;

    let mut photon2_vertices = vec![emission];
    let mut position = Point::new(0.0, 0.0);
    let mut time = 0.0;
    let last = route.len() - 1;
    for (i, point) in route.iter().enumerate() {
        time += position.distance(point);
        position = *point;
        let label = if i == last {
            EventLabel::Detection2
        } else {
            EventLabel::Mirror(i as u32 + 1)
        };
        photon2_vertices.push(Event::new(label, time, point.x, point.y));
    }
    let photon2 = Worldline::lightlike(photon2_vertices.clone())?;
    let detection2 = *photon2.end();

    let mut events = vec![emission, detection1];
    events.extend(photon2_vertices.iter().skip(1));

    let message = if s.feedforward.enabled {
        let speed = s.feedforward.message_speed;
        let sent = Event::new(EventLabel::MessageSent, detection1.t, detection1.x, detection1.y);
        let travel = (detection2.x - sent.x).hypot(0.0 - sent.y);
        let received = Event::new(
            EventLabel::MessageReceived,
            sent.t + travel / speed,
            detection2.x,
            0.0,
        );
        events.push(sent);
        events.push(received);
        Some(Worldline::with_speed(vec![sent, received], speed)?)
    } else {
        None
    };

    Ok(Timeline {
        events,
        photon1,
        photon2,
        message,
    })
}

fn photon2_route(s: &Scenario, choice: PathChoice) -> Result<Vec<Point>, ScenarioError> {
    match (s.deviation_mode, choice) {
        (DeviationMode::None, PathChoice::Short) => {
            Ok(vec![Point::new(s.photon2_direct_distance, 0.0)])
        }
        (DeviationMode::Mirrors, PathChoice::Long) => Ok(s.photon2_path.clone()),
        (DeviationMode::Beamsplitter, PathChoice::Long) => Ok(s.photon2_path.clone()),
        (DeviationMode::Beamsplitter, PathChoice::Short) => {
            let splitter = s.photon2_path[0];
            Ok(vec![splitter, Point::new(s.photon2_direct_distance, 0.0)])
        }
        (mode, choice) => Err(ScenarioError::InvalidPathChoice { mode, choice }),
    }
}
