//! Estimators and closed-form analyses over trial batches: coincidence
//! tables with binomial errors, polarization correlations, CHSH values
//! (analytic and empirical), and Malus-law fits.

use crate::engine::TrialRecord;
use crate::polarization::{joint_probabilities, Angle, Channel, StateError, TwoPhotonState};
use serde::Serialize;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty record list")]
    EmptyInput,
    #[error("CHSH needs the four setting-pair batches, got {got}")]
    MissingBatch { got: usize },
    #[error("Malus fit needs at least 3 distinct relative angles, got {got}")]
    TooFewAngles { got: usize },
    #[error("Malus fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Coincidence counts over the four channel pairs, in the order
/// (transmitted,transmitted), (t,r), (r,t), (r,r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoincidenceTable {
    counts: [u64; 4],
}

impl CoincidenceTable {
    pub fn from_counts(tt: u64, tr: u64, rt: u64, rr: u64) -> CoincidenceTable {
        CoincidenceTable {
            counts: [tt, tr, rt, rr],
        }
    }

    pub fn counts(&self) -> [u64; 4] {
        self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, photon1: Channel, photon2: Channel) -> u64 {
        self.counts[cell_index(photon1, photon2)]
    }

    /// Estimated cell probabilities; they sum to one.
    pub fn probabilities(&self) -> [f64; 4] {
        let n = self.total() as f64;
        self.counts.map(|c| c as f64 / n)
    }

    pub fn probability(&self, photon1: Channel, photon2: Channel) -> f64 {
        self.probabilities()[cell_index(photon1, photon2)]
    }

    /// Binomial standard error per cell: `√(p̂(1−p̂)/N)`.
    pub fn standard_errors(&self) -> [f64; 4] {
        let n = self.total() as f64;
        self.probabilities().map(|p| (p * (1.0 - p) / n).sqrt())
    }

    /// Polarization correlation estimate `E = p̂tt + p̂rr − p̂tr − p̂rt`.
    pub fn correlation(&self) -> f64 {
        correlation(self.probabilities())
    }

    /// Standard error of [`CoincidenceTable::correlation`]:
    /// `√((1 − E²)/N)`.
    pub fn correlation_standard_error(&self) -> f64 {
        let e = self.correlation();
        ((1.0 - e * e).max(0.0) / self.total() as f64).sqrt()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel1,channel2,count,probability,standard_error\n");
        let names = [
            ("transmitted", "transmitted"),
            ("transmitted", "reflected"),
            ("reflected", "transmitted"),
            ("reflected", "reflected"),
        ];
        let probabilities = self.probabilities();
        let errors = self.standard_errors();
        for (i, (c1, c2)) in names.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                c1, c2, self.counts[i], probabilities[i], errors[i]
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

fn cell_index(photon1: Channel, photon2: Channel) -> usize {
    match (photon1, photon2) {
        (Channel::Transmitted, Channel::Transmitted) => 0,
        (Channel::Transmitted, Channel::Reflected) => 1,
        (Channel::Reflected, Channel::Transmitted) => 2,
        (Channel::Reflected, Channel::Reflected) => 3,
    }
}

/// Exact counts over a non-empty record list.
pub fn tabulate(records: &[TrialRecord]) -> Result<CoincidenceTable, StatsError> {
    if records.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut counts = [0u64; 4];
    for r in records {
        counts[cell_index(r.outcome1, r.outcome2)] += 1;
    }
    Ok(CoincidenceTable { counts })
}

/// Correlation `E = p(tt) + p(rr) − p(tr) − p(rt)` of a probability
/// 4-vector in table cell order. For the entangled pair this is
/// `cos 2(a−b)`.
pub fn correlation(probabilities: [f64; 4]) -> f64 {
    probabilities[0] + probabilities[3] - probabilities[1] - probabilities[2]
}

/// The four polarizer settings of a CHSH run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshAngles {
    pub a: Angle,
    pub a_prime: Angle,
    pub b: Angle,
    pub b_prime: Angle,
}

impl ChshAngles {
    pub fn new(a: Angle, a_prime: Angle, b: Angle, b_prime: Angle) -> ChshAngles {
        ChshAngles {
            a,
            a_prime,
            b,
            b_prime,
        }
    }

    /// The settings (0, π/4, π/8, 3π/8) that maximize the quantum value for
    /// the entangled pair.
    pub fn maximal() -> ChshAngles {
        use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
        ChshAngles {
            a: Angle::ZERO,
            a_prime: Angle::radians(FRAC_PI_4),
            b: Angle::radians(FRAC_PI_8),
            b_prime: Angle::radians(3.0 * FRAC_PI_8),
        }
    }

    /// Setting pairs in batch order: (a,b), (a,b'), (a',b), (a',b').
    pub fn setting_pairs(&self) -> [(Angle, Angle); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

/// CHSH combination `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`:
/// at most 2 classically, at most 2√2 for any quantum state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshResult {
    pub angles: ChshAngles,
    /// Correlations in batch order: E(a,b), E(a,b'), E(a',b), E(a',b').
    pub correlations: [f64; 4],
    pub s: f64,
    /// Propagated standard error of `s`; absent in analytic mode.
    pub standard_error: Option<f64>,
    /// `|S| > 2`, additionally at ≥ 3σ significance in empirical mode.
    pub violation: bool,
}

/// Numerical slack on the classical bound: S = 2 exactly (degenerate
/// settings) must not flag as a violation through rounding.
const CLASSICAL_BOUND_TOLERANCE: f64 = 1e-9;

fn chsh_s(correlations: [f64; 4]) -> f64 {
    correlations[0] - correlations[1] + correlations[2] + correlations[3]
}

/// Closed-form CHSH value of a state at the given settings.
pub fn chsh_analytic(
    state: &TwoPhotonState,
    angles: &ChshAngles,
) -> Result<ChshResult, StateError> {
    let mut correlations = [0.0; 4];
    for (i, (a, b)) in angles.setting_pairs().into_iter().enumerate() {
        correlations[i] = correlation(joint_probabilities(state, a, b)?.as_array());
    }
    let s = chsh_s(correlations);
    Ok(ChshResult {
        angles: *angles,
        correlations,
        s,
        standard_error: None,
        violation: s.abs() > 2.0 + CLASSICAL_BOUND_TOLERANCE,
    })
}

/// CHSH from four measured batches, one per setting pair in
/// [`ChshAngles::setting_pairs`] order. Violation requires the classical
/// bound 2 to be exceeded by at least three standard errors.
pub fn chsh_empirical(
    angles: &ChshAngles,
    tables: &[CoincidenceTable],
) -> Result<ChshResult, StatsError> {
    let [t_ab, t_ab2, t_a2b, t_a2b2]: &[CoincidenceTable; 4] = tables
        .try_into()
        .map_err(|_| StatsError::MissingBatch { got: tables.len() })?;
    let batches = [t_ab, t_ab2, t_a2b, t_a2b2];
    let mut correlations = [0.0; 4];
    let mut variance = 0.0;
    for (i, table) in batches.iter().enumerate() {
        correlations[i] = table.correlation();
        let se = table.correlation_standard_error();
        variance += se * se;
    }
    let s = chsh_s(correlations);
    let standard_error = variance.sqrt();
    Ok(ChshResult {
        angles: *angles,
        correlations,
        s,
        standard_error: Some(standard_error),
        violation: s.abs() > 2.0 + CLASSICAL_BOUND_TOLERANCE
            && (s.abs() - 2.0) >= 3.0 * standard_error,
    })
}

/// One point of a Malus-law comparison: observed conditional transmission
/// `p̂(b∥ | a∥)` against the model `cos²(a−b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MalusPoint {
    pub relative_angle_rad: f64,
    pub observed: f64,
    pub model: f64,
    pub residual: f64,
    pub standard_error: f64,
}

/// Unweighted least-squares fit of the conditional transmission against
/// `cos²Δ` (scale and offset free).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MalusFit {
    pub scale: f64,
    pub offset: f64,
    pub points: Vec<MalusPoint>,
    pub max_abs_residual: f64,
    /// `Σ (residual/σ)²` over points with σ > 0; `None` when no point has a
    /// positive error estimate.
    pub chi_square: Option<f64>,
    /// Points whose residual exceeds five standard errors — a systematic
    /// departure from Malus's law.
    pub flagged: usize,
}

/// Fits `p̂(b∥ | a∥)` from each table against `cos²Δ` at the table's
/// relative angle Δ. Needs at least three distinct relative angles.
pub fn malus_fit(tables: &[(Angle, CoincidenceTable)]) -> Result<MalusFit, StatsError> {
    let mut distinct: Vec<f64> = Vec::new();
    for (angle, _) in tables {
        let c = angle.canonical();
        if !distinct.iter().any(|d| (d - c).abs() < 1e-12) {
            distinct.push(c);
        }
    }
    if distinct.len() < 3 {
        return Err(StatsError::TooFewAngles {
            got: distinct.len(),
        });
    }

    let mut data = Vec::with_capacity(tables.len());
    for (angle, table) in tables {
        let transmitted = table.count(Channel::Transmitted, Channel::Transmitted)
            + table.count(Channel::Transmitted, Channel::Reflected);
        if transmitted == 0 {
            return Err(StatsError::DegenerateFit(format!(
                "no photon-1-transmitted trials at relative angle {}",
                angle.rad()
            )));
        }
        let hits = table.count(Channel::Transmitted, Channel::Transmitted);
        let observed = hits as f64 / transmitted as f64;
        let standard_error = (observed * (1.0 - observed) / transmitted as f64).sqrt();
        let model = angle.rad().cos().powi(2);
        data.push((angle.rad(), observed, model, standard_error));
    }

    let n = data.len() as f64;
    let sum_m: f64 = data.iter().map(|d| d.2).sum();
    let sum_y: f64 = data.iter().map(|d| d.1).sum();
    let sum_mm: f64 = data.iter().map(|d| d.2 * d.2).sum();
    let sum_my: f64 = data.iter().map(|d| d.2 * d.1).sum();
    let denom = n * sum_mm - sum_m * sum_m;
    if denom.abs() < 1e-12 {
        return Err(StatsError::DegenerateFit(
            "all relative angles give the same cos² value".to_string(),
        ));
    }
    let scale = (n * sum_my - sum_m * sum_y) / denom;
    let offset = (sum_y - scale * sum_m) / n;

    let mut points = Vec::with_capacity(data.len());
    let mut max_abs_residual: f64 = 0.0;
    let mut chi_square = 0.0;
    let mut weighted_points = 0usize;
    let mut flagged = 0usize;
    for (rad, observed, model, standard_error) in data {
        let residual = observed - (scale * model + offset);
        max_abs_residual = max_abs_residual.max(residual.abs());
        if standard_error > 0.0 {
            chi_square += (residual / standard_error).powi(2);
            weighted_points += 1;
            if residual.abs() > 5.0 * standard_error {
                flagged += 1;
            }
        }
        points.push(MalusPoint {
            relative_angle_rad: rad,
            observed,
            model,
            residual,
            standard_error,
        });
    }

    Ok(MalusFit {
        scale,
        offset,
        points,
        max_abs_residual,
        chi_square: (weighted_points > 0).then_some(chi_square),
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_batch;
    use crate::polarization::bell_state;
    use crate::scenario::Scenario;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, FRAC_PI_2};

    const EXACT: f64 = 1e-12;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn tabulate_counts_outcomes() {
        let mut s = Scenario::direct(1.0, 1.0);
        s.run.trials = 1000;
        let records = run_batch(&s).unwrap();
        let table = tabulate(&records).unwrap();
        assert_eq!(table.total(), 1000);
        // Same orientation: no anticorrelated counts at all.
        assert_eq!(table.count(Channel::Transmitted, Channel::Reflected), 0);
        assert_eq!(table.count(Channel::Reflected, Channel::Transmitted), 0);
        assert_close(table.probabilities().iter().sum::<f64>(), 1.0, EXACT);
    }

    #[test]
    fn tabulate_single_trial() {
        let mut s = Scenario::direct(1.0, 1.0);
        s.run.trials = 1;
        let records = run_batch(&s).unwrap();
        let table = tabulate(&records).unwrap();
        assert_eq!(table.counts().iter().sum::<u64>(), 1);
    }

    #[test]
    fn tabulate_rejects_empty() {
        assert!(matches!(tabulate(&[]), Err(StatsError::EmptyInput)));
    }

    #[test]
    fn correlation_closed_form_values() {
        let bell = bell_state();
        let e = |delta: f64| {
            correlation(
                joint_probabilities(&bell, Angle::ZERO, Angle::radians(delta))
                    .unwrap()
                    .as_array(),
            )
        };
        assert_close(e(0.0), 1.0, EXACT);
        assert_close(e(FRAC_PI_4), 0.0, EXACT);
        assert_close(e(FRAC_PI_8), std::f64::consts::SQRT_2 / 2.0, EXACT);
        assert_close(e(FRAC_PI_2), -1.0, EXACT);
    }

    #[test]
    fn chsh_analytic_maximal_violation() {
        let result = chsh_analytic(&bell_state(), &ChshAngles::maximal()).unwrap();
        assert_close(result.s, 2.0 * std::f64::consts::SQRT_2, 1e-9);
        assert!(result.violation);
        assert!(result.standard_error.is_none());
    }

    #[test]
    fn chsh_analytic_degenerate_settings() {
        // (0, π/4, 0, π/4): E values 1, 0, 0, 1 sum to S = 2 — no violation.
        let angles = ChshAngles::new(
            Angle::ZERO,
            Angle::radians(FRAC_PI_4),
            Angle::ZERO,
            Angle::radians(FRAC_PI_4),
        );
        let result = chsh_analytic(&bell_state(), &angles).unwrap();
        assert_close(result.s, 2.0, EXACT);
        assert!(!result.violation);
    }

    #[test]
    fn chsh_analytic_product_state_stays_classical() {
        let product = TwoPhotonState::product(
            &crate::polarization::PhotonState::linear(Angle::ZERO),
            &crate::polarization::PhotonState::linear(Angle::ZERO),
        );
        let result = chsh_analytic(&product, &ChshAngles::maximal()).unwrap();
        assert!(result.s.abs() <= 2.0 + 1e-12, "S = {}", result.s);
        assert!(!result.violation);
    }

    #[test]
    fn chsh_empirical_needs_four_batches() {
        let table = CoincidenceTable::from_counts(1, 0, 0, 1);
        let err = chsh_empirical(&ChshAngles::maximal(), &[table; 3]).unwrap_err();
        assert!(matches!(err, StatsError::MissingBatch { got: 3 }));
    }

    // Integer coincidence tables matching the closed form exactly at a
    // given relative angle, N = 80000.
    fn analytic_table(delta_cells: (u64, u64)) -> CoincidenceTable {
        let (same, diff) = delta_cells;
        CoincidenceTable::from_counts(same, diff, diff, same)
    }

    #[test]
    fn malus_fit_exact_model() {
        let tables = vec![
            (Angle::ZERO, analytic_table((40000, 0))),
            (Angle::radians(FRAC_PI_6), analytic_table((30000, 10000))),
            (Angle::radians(FRAC_PI_4), analytic_table((20000, 20000))),
            (Angle::radians(FRAC_PI_3), analytic_table((10000, 30000))),
            (Angle::radians(FRAC_PI_2), analytic_table((0, 40000))),
        ];
        let fit = malus_fit(&tables).unwrap();
        assert_close(fit.scale, 1.0, 1e-9);
        assert_close(fit.offset, 0.0, 1e-9);
        assert!(fit.max_abs_residual < 1e-9, "{}", fit.max_abs_residual);
        assert_eq!(fit.flagged, 0);
    }

    #[test]
    fn malus_fit_flags_rotated_polarizer() {
        // Tables generated as if polarizer II sat 0.1 rad off the recorded
        // angle: conditional transmission cos²(Δ+0.1) labeled as Δ.
        let n = 100_000u64;
        let angles = [0.0, FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2];
        let tables: Vec<(Angle, CoincidenceTable)> = angles
            .iter()
            .map(|&delta| {
                let p = (delta + 0.1).cos().powi(2);
                let tt = (p * n as f64).round() as u64;
                (
                    Angle::radians(delta),
                    CoincidenceTable::from_counts(tt, n - tt, n - tt, tt),
                )
            })
            .collect();
        let fit = malus_fit(&tables).unwrap();
        assert!(fit.flagged > 0, "fit should flag the systematic offset: {fit:?}");
        assert!(fit.max_abs_residual > 5e-3);
    }

    #[test]
    fn malus_fit_needs_three_angles() {
        let t = analytic_table((1, 1));
        let err = malus_fit(&[(Angle::ZERO, t), (Angle::radians(FRAC_PI_4), t)]).unwrap_err();
        assert!(matches!(err, StatsError::TooFewAngles { got: 2 }));
    }

    #[test]
    fn coincidence_table_csv() {
        let table = CoincidenceTable::from_counts(3, 1, 0, 4);
        let csv = table.to_csv();
        assert!(csv.starts_with("channel1,channel2,count,probability,standard_error\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("transmitted,transmitted,3,0.375,"));
    }
}
