//! One- and two-photon polarization state algebra.
//!
//! States live over the `{|x>, |y>}` linear-polarization basis with complex
//! amplitudes. A two-channel polarizer at orientation `θ` either transmits a
//! photon (projecting it onto the ket parallel to `θ`) or reflects it
//! (projecting onto the perpendicular ket). Every operation here is pure and
//! every value is immutable, so the whole module is safe to share across
//! threads.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// States whose norm deviates from 1 by more than this are rejected by
/// measurement operations.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Outcomes with probability at or below this threshold are impossible;
/// collapsing onto them is an error. Double-precision noise floor.
pub const ZERO_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StateError {
    /// A measurement was requested on a state that is not normalized.
    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },
    /// A collapse was requested onto an outcome of (numerically) zero
    /// probability.
    #[error("requested outcome has probability {probability}, below the zero threshold")]
    ImpossibleOutcome { probability: f64 },
}

/// A polarizer orientation or linear-polarization direction in the plane
/// transverse to propagation, in radians.
///
/// Orientations are physically equivalent modulo π: a polarizer at `θ` and at
/// `θ + π` is the same device. The raw value is kept as constructed;
/// [`Angle::canonical`] gives the representative in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle {
    radians: f64,
}

impl Angle {
    pub const ZERO: Angle = Angle { radians: 0.0 };

    pub fn radians(value: f64) -> Self {
        Angle { radians: value }
    }

    pub fn degrees(value: f64) -> Self {
        Angle {
            radians: value.to_radians(),
        }
    }

    pub fn rad(self) -> f64 {
        self.radians
    }

    /// Canonical representative in `[0, π)`.
    pub fn canonical(self) -> f64 {
        let r = self.radians.rem_euclid(PI);
        if r == PI {
            0.0
        } else {
            r
        }
    }

    /// The orientation rotated by π/2 (the reflected channel of a polarizer
    /// at `self`).
    pub fn orthogonal(self) -> Angle {
        Angle::radians(self.radians + FRAC_PI_2)
    }

    /// True when the two orientations describe the same polarizer setting
    /// within `tol` (comparison modulo π, with wrap-around).
    pub fn same_orientation(self, other: Angle, tol: f64) -> bool {
        let d = (self.canonical() - other.canonical()).abs();
        d.min(PI - d) <= tol
    }
}

/// Output channel of a two-channel polarizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Component parallel to the polarizer orientation; transmitted.
    Transmitted,
    /// Component perpendicular to the polarizer orientation; reflected.
    Reflected,
}

impl Channel {
    pub fn other(self) -> Channel {
        match self {
            Channel::Transmitted => Channel::Reflected,
            Channel::Reflected => Channel::Transmitted,
        }
    }
}

/// Which photon of the pair an operation acts on. Photon one flies toward
/// polarizer I, photon two toward polarizer II.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Photon {
    One,
    Two,
}

impl Photon {
    pub fn partner(self) -> Photon {
        match self {
            Photon::One => Photon::Two,
            Photon::Two => Photon::One,
        }
    }
}

/// Polarization state of a single photon: amplitudes on `|x>` and `|y>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonState {
    pub amp_x: Complex64,
    pub amp_y: Complex64,
}

impl PhotonState {
    /// Builds a state from amplitudes, rejecting non-normalized input
    /// (tolerance 1e-12 on the norm).
    pub fn new(amp_x: Complex64, amp_y: Complex64) -> Result<Self, StateError> {
        let s = PhotonState { amp_x, amp_y };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(StateError::NotNormalized { norm });
        }
        Ok(s)
    }

    /// Linear polarization at `angle`: `cos θ |x> + sin θ |y>`.
    pub fn linear(angle: Angle) -> Self {
        let (s, c) = angle.rad().sin_cos();
        PhotonState {
            amp_x: Complex64::new(c, 0.0),
            amp_y: Complex64::new(s, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_x.norm_sqr() + self.amp_y.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `<self|other>`.
    pub fn overlap(&self, other: &PhotonState) -> Complex64 {
        self.amp_x.conj() * other.amp_x + self.amp_y.conj() * other.amp_y
    }

    /// Probability of transmission through a two-channel polarizer at
    /// `orientation` (Malus's law for linear states).
    pub fn transmit_probability(&self, orientation: Angle) -> f64 {
        let parallel = PhotonState::linear(orientation);
        parallel.overlap(self).norm_sqr()
    }

    /// True when both states describe the same ray, i.e. are equal up to a
    /// global phase: `|<self|other>| = 1` within `tol`.
    pub fn equal_up_to_phase(&self, other: &PhotonState, tol: f64) -> bool {
        (self.overlap(other).norm() - 1.0).abs() <= tol
    }
}

/// Reflects the linear-polarization direction about the plate's fast axis:
/// a state at angle φ maps to 2·axis − φ. Unitary and its own inverse.
pub fn half_wave_plate(state: &PhotonState, axis: Angle) -> PhotonState {
    let (s2, c2) = (2.0 * axis.rad()).sin_cos();
    PhotonState {
        amp_x: state.amp_x.scale(c2) + state.amp_y.scale(s2),
        amp_y: state.amp_x.scale(s2) - state.amp_y.scale(c2),
    }
}

/// The analyzer ket a two-channel polarizer at `orientation` projects onto
/// for the given output channel.
pub fn analyzer_ket(orientation: Angle, channel: Channel) -> PhotonState {
    match channel {
        Channel::Transmitted => PhotonState::linear(orientation),
        Channel::Reflected => PhotonState::linear(orientation.orthogonal()),
    }
}

/// Joint state of the photon pair: amplitudes on `|x>|x>`, `|x>|y>`,
/// `|y>|x>`, `|y>|y>` (first ket = photon one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    pub amp_xx: Complex64,
    pub amp_xy: Complex64,
    pub amp_yx: Complex64,
    pub amp_yy: Complex64,
}

impl TwoPhotonState {
    /// Builds a state from amplitudes, rejecting non-normalized input
    /// (tolerance 1e-12 on the norm).
    pub fn new(
        amp_xx: Complex64,
        amp_xy: Complex64,
        amp_yx: Complex64,
        amp_yy: Complex64,
    ) -> Result<Self, StateError> {
        let s = TwoPhotonState {
            amp_xx,
            amp_xy,
            amp_yx,
            amp_yy,
        };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(StateError::NotNormalized { norm });
        }
        Ok(s)
    }

    /// Product state `|p1> ⊗ |p2>`.
    pub fn product(p1: &PhotonState, p2: &PhotonState) -> Self {
        TwoPhotonState {
            amp_xx: p1.amp_x * p2.amp_x,
            amp_xy: p1.amp_x * p2.amp_y,
            amp_yx: p1.amp_y * p2.amp_x,
            amp_yy: p1.amp_y * p2.amp_y,
        }
    }

    /// Rescales the amplitudes to unit norm; `None` for the zero vector.
    pub fn normalized(
        amp_xx: Complex64,
        amp_xy: Complex64,
        amp_yx: Complex64,
        amp_yy: Complex64,
    ) -> Option<Self> {
        let n = (amp_xx.norm_sqr() + amp_xy.norm_sqr() + amp_yx.norm_sqr() + amp_yy.norm_sqr())
            .sqrt();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(TwoPhotonState {
            amp_xx: amp_xx.unscale(n),
            amp_xy: amp_xy.unscale(n),
            amp_yx: amp_yx.unscale(n),
            amp_yy: amp_yy.unscale(n),
        })
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.amp_xx, self.amp_xy, self.amp_yx, self.amp_yy]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `<self|other>`.
    pub fn overlap(&self, other: &TwoPhotonState) -> Complex64 {
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn equal_up_to_phase(&self, other: &TwoPhotonState, tol: f64) -> bool {
        (self.overlap(other).norm() - 1.0).abs() <= tol
    }

    fn check_normalized(&self) -> Result<(), StateError> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized { norm });
        }
        Ok(())
    }

    /// Applies `<ket|` to the chosen photon, returning the (unnormalized)
    /// amplitudes left on the partner photon.
    fn partial_projection(&self, photon: Photon, ket: &PhotonState) -> (Complex64, Complex64) {
        let (kx, ky) = (ket.amp_x.conj(), ket.amp_y.conj());
        match photon {
            Photon::One => (
                kx * self.amp_xx + ky * self.amp_yx,
                kx * self.amp_xy + ky * self.amp_yy,
            ),
            Photon::Two => (
                kx * self.amp_xx + ky * self.amp_xy,
                kx * self.amp_yx + ky * self.amp_yy,
            ),
        }
    }
}

/// The maximally entangled pair `(|x>|x> + |y>|y>)/√2`: identical polarizer
/// settings on the two sides always give identical outcomes, whatever the
/// common orientation.
pub fn bell_state() -> TwoPhotonState {
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    TwoPhotonState {
        amp_xx: a,
        amp_xy: zero,
        amp_yx: zero,
        amp_yy: a,
    }
}

/// Probability of the chosen photon being transmitted / reflected by a
/// two-channel polarizer at `orientation`. The two probabilities sum to 1.
pub fn outcome_probabilities(
    state: &TwoPhotonState,
    photon: Photon,
    orientation: Angle,
) -> Result<(f64, f64), StateError> {
    state.check_normalized()?;
    let p_transmit = probability_of(state, photon, orientation, Channel::Transmitted);
    let p_reflect = probability_of(state, photon, orientation, Channel::Reflected);
    Ok((p_transmit, p_reflect))
}

fn probability_of(state: &TwoPhotonState, photon: Photon, orientation: Angle, ch: Channel) -> f64 {
    let ket = analyzer_ket(orientation, ch);
    let (cx, cy) = state.partial_projection(photon, &ket);
    cx.norm_sqr() + cy.norm_sqr()
}

/// Post-measurement state after the chosen photon came out of the polarizer
/// at `orientation` in `outcome`'s channel, renormalized.
///
/// Measuring one photon of the Bell pair leaves the partner in the very
/// polarization state the measured photon was detected in.
pub fn collapse(
    state: &TwoPhotonState,
    photon: Photon,
    orientation: Angle,
    outcome: Channel,
) -> Result<TwoPhotonState, StateError> {
    let (ket, partner) = collapse_parts(state, photon, orientation, outcome)?;
    Ok(match photon {
        Photon::One => TwoPhotonState::product(&ket, &partner),
        Photon::Two => TwoPhotonState::product(&partner, &ket),
    })
}

/// The partner photon's pure state conditioned on the given measurement of
/// the other photon. Equivalent to [`collapse`] followed by factoring out
/// the measured photon.
pub fn conditional_partner_state(
    state: &TwoPhotonState,
    photon: Photon,
    orientation: Angle,
    outcome: Channel,
) -> Result<PhotonState, StateError> {
    let (_, partner) = collapse_parts(state, photon, orientation, outcome)?;
    Ok(partner)
}

fn collapse_parts(
    state: &TwoPhotonState,
    photon: Photon,
    orientation: Angle,
    outcome: Channel,
) -> Result<(PhotonState, PhotonState), StateError> {
    state.check_normalized()?;
    let ket = analyzer_ket(orientation, outcome);
    let (cx, cy) = state.partial_projection(photon, &ket);
    let probability = cx.norm_sqr() + cy.norm_sqr();
    if probability <= ZERO_PROBABILITY {
        return Err(StateError::ImpossibleOutcome { probability });
    }
    let scale = probability.sqrt();
    let partner = PhotonState {
        amp_x: cx.unscale(scale),
        amp_y: cy.unscale(scale),
    };
    Ok((ket, partner))
}

/// Coincidence probabilities for polarizer I at `orientation_a` and
/// polarizer II at `orientation_b`, indexed by (photon one channel,
/// photon two channel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointProbabilities {
    /// Both transmitted.
    pub tt: f64,
    /// Photon one transmitted, photon two reflected.
    pub tr: f64,
    /// Photon one reflected, photon two transmitted.
    pub rt: f64,
    /// Both reflected.
    pub rr: f64,
}

impl JointProbabilities {
    /// Cells in the order (tt, tr, rt, rr).
    pub fn as_array(&self) -> [f64; 4] {
        [self.tt, self.tr, self.rt, self.rr]
    }

    pub fn get(&self, photon1: Channel, photon2: Channel) -> f64 {
        match (photon1, photon2) {
            (Channel::Transmitted, Channel::Transmitted) => self.tt,
            (Channel::Transmitted, Channel::Reflected) => self.tr,
            (Channel::Reflected, Channel::Transmitted) => self.rt,
            (Channel::Reflected, Channel::Reflected) => self.rr,
        }
    }
}

/// Probabilities of the four coincidence outcomes. For the Bell pair these
/// are `½cos²(a−b)` for equal channels and `½sin²(a−b)` for opposite ones.
pub fn joint_probabilities(
    state: &TwoPhotonState,
    orientation_a: Angle,
    orientation_b: Angle,
) -> Result<JointProbabilities, StateError> {
    state.check_normalized()?;
    let cell = |c1: Channel, c2: Channel| {
        let ket_a = analyzer_ket(orientation_a, c1);
        let ket_b = analyzer_ket(orientation_b, c2);
        let (cx, cy) = state.partial_projection(Photon::One, &ket_a);
        let amp = ket_b.amp_x.conj() * cx + ket_b.amp_y.conj() * cy;
        amp.norm_sqr()
    };
    Ok(JointProbabilities {
        tt: cell(Channel::Transmitted, Channel::Transmitted),
        tr: cell(Channel::Transmitted, Channel::Reflected),
        rt: cell(Channel::Reflected, Channel::Transmitted),
        rr: cell(Channel::Reflected, Channel::Reflected),
    })
}

/// Probability of the partner photon producing `second_outcome` at
/// `second_orientation`, given that `first_photon` already produced
/// `first_outcome` at `first_orientation`.
pub fn conditional_probability(
    state: &TwoPhotonState,
    first_photon: Photon,
    first_orientation: Angle,
    first_outcome: Channel,
    second_orientation: Angle,
    second_outcome: Channel,
) -> Result<f64, StateError> {
    let partner = conditional_partner_state(state, first_photon, first_orientation, first_outcome)?;
    let ket = analyzer_ket(second_orientation, second_outcome);
    Ok(ket.overlap(&partner).norm_sqr())
}
