//! Acceptance suite: every criterion below runs at its stated tolerance and
//! prints one `[PASS]` line (visible with `--nocapture`).
//!
//! ```text
//! cargo test -p epr-core --test acceptance -- --nocapture
//! ```

use epr_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, FRAC_PI_2, PI, SQRT_2};
use std::time::{Duration, Instant};

const EXACT: f64 = 1e-12;

fn fig2_text() -> &'static str {
    include_str!("../../../scenarios/fig2.epr")
}

fn beamsplitter_text() -> &'static str {
    include_str!("../../../scenarios/beamsplitter.epr")
}

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got}, want {want} (tol {tol})"
    );
}

fn finish(name: &str, started: Instant, limit: Option<Duration>) {
    let elapsed = started.elapsed();
    if let Some(limit) = limit {
        assert!(
            elapsed < limit,
            "{name}: took {elapsed:?}, limit {limit:?}"
        );
    }
    println!("[PASS] {name} ({elapsed:.2?})");
}

#[test]
fn a01_joint_probability_closed_form() {
    let started = Instant::now();
    let bell = bell_state();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..100 {
        let a = rng.random_range(-PI..PI);
        let b = rng.random_range(-PI..PI);
        let jp = joint_probabilities(&bell, Angle::radians(a), Angle::radians(b)).unwrap();
        let delta = a - b;
        let same = 0.5 * delta.cos().powi(2);
        let diff = 0.5 * delta.sin().powi(2);
        assert_close(jp.tt, same, EXACT, "p(tt)");
        assert_close(jp.tr, diff, EXACT, "p(tr)");
        assert_close(jp.rt, diff, EXACT, "p(rt)");
        assert_close(jp.rr, same, EXACT, "p(rr)");
    }
    finish(
        "joint probabilities match the closed form on 100 random settings",
        started,
        Some(Duration::from_secs(1)),
    );
}

#[test]
fn a02_coincidence_rates_monte_carlo() {
    let started = Instant::now();
    let n = 100_000u64;
    for (k, delta) in [0.0, FRAC_PI_8, FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2]
        .into_iter()
        .enumerate()
    {
        let mut s = Scenario::direct(1.0, 1.0);
        s.orientation_b = Angle::radians(delta);
        s.run.trials = n;
        s.run.seed = 1000 + k as u64;
        let table = tabulate(&run_batch(&s).unwrap()).unwrap();
        let same = 0.5 * delta.cos().powi(2);
        let diff = 0.5 * delta.sin().powi(2);
        let expected = [same, diff, diff, same];
        for (cell, (observed, want)) in table
            .probabilities()
            .into_iter()
            .zip(expected)
            .enumerate()
        {
            if want == 0.0 {
                assert_eq!(
                    table.counts()[cell],
                    0,
                    "cell {cell} must be empty at relative angle {delta}"
                );
            } else {
                let sigma = (want * (1.0 - want) / n as f64).sqrt();
                assert_close(
                    observed,
                    want,
                    4.0 * sigma,
                    &format!("cell {cell} at relative angle {delta}"),
                );
            }
        }
    }
    finish(
        "empirical coincidence rates stay within 4 sigma of the closed form",
        started,
        Some(Duration::from_secs(10)),
    );
}

#[test]
fn a03_conditioning_order_independence() {
    let started = Instant::now();
    let bell = bell_state();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let channels = [Channel::Transmitted, Channel::Reflected];
    for _ in 0..100 {
        let a = Angle::radians(rng.random_range(-PI..PI));
        let b = Angle::radians(rng.random_range(-PI..PI));
        let jp = joint_probabilities(&bell, a, b).unwrap();
        let (p1_t, p1_r) = outcome_probabilities(&bell, Photon::One, a).unwrap();
        let (p2_t, p2_r) = outcome_probabilities(&bell, Photon::Two, b).unwrap();
        for (o1, p1) in channels.iter().zip([p1_t, p1_r]) {
            for (o2, p2) in channels.iter().zip([p2_t, p2_r]) {
                let photon1_first = p1
                    * conditional_probability(&bell, Photon::One, a, *o1, b, *o2).unwrap();
                let photon2_first = p2
                    * conditional_probability(&bell, Photon::Two, b, *o2, a, *o1).unwrap();
                assert_close(photon1_first, photon2_first, EXACT, "factorization order");
                assert_close(photon1_first, jp.get(*o1, *o2), EXACT, "joint cell");
            }
        }
    }
    finish(
        "both conditioning orders give identical joint distributions",
        started,
        None,
    );
}

#[test]
fn a04_same_orientation_never_anticorrelates() {
    let started = Instant::now();
    let mut s = Scenario::direct(1.0, 1.0);
    s.orientation_a = Angle::radians(0.61);
    s.orientation_b = Angle::radians(0.61);
    s.run.trials = 100_000;
    s.run.seed = 4;
    let table = tabulate(&run_batch(&s).unwrap()).unwrap();
    assert_eq!(table.count(Channel::Transmitted, Channel::Reflected), 0);
    assert_eq!(table.count(Channel::Reflected, Channel::Transmitted), 0);
    assert_eq!(table.total(), 100_000);
    finish(
        "equal orientations give zero anticorrelated counts in 100000 trials",
        started,
        None,
    );
}

#[test]
fn a05_feed_forward_forces_transmission() {
    let started = Instant::now();
    let scenario = parse_scenario(fig2_text()).unwrap();
    assert_eq!(scenario.run.trials, 100_000);
    let records = run_batch(&scenario).unwrap();
    assert_eq!(records.len(), 100_000);
    for r in &records {
        assert_eq!(
            r.outcome2,
            Channel::Transmitted,
            "trial {} leaked into the reflected channel",
            r.trial_index
        );
        assert!(r.hwp_applied());
        let received = r.timeline.message_received().expect("message modeled");
        assert!(
            received.t < r.timeline.nu2_arrival().t,
            "message must precede photon 2's polarizer arrival"
        );
    }
    finish(
        "feed-forward sends every photon 2 into the transmitted channel",
        started,
        Some(Duration::from_secs(10)),
    );
}

#[test]
fn a06_mirror_detour_is_timelike_in_every_frame() {
    let started = Instant::now();
    let scenario = parse_scenario(fig2_text()).unwrap();
    let timeline = build_timeline(&scenario, PathChoice::Long).unwrap();
    let cls = timeline.detection_interval();
    assert_eq!(cls.kind, IntervalKind::Timelike);
    assert_close(cls.s_squared, 144.0, EXACT, "s_squared of the default geometry");
    let d1 = timeline.nu1_detection();
    let d2 = timeline.nu2_arrival();
    for k in 0..50 {
        let beta = -0.99 + 1.98 * k as f64 / 49.0;
        assert_eq!(
            ordering(d1, d2, Boost::new(beta).unwrap()),
            EventOrder::E1First,
            "photon 1 must be detected first at beta {beta}"
        );
    }
    finish(
        "the mirror detour keeps the detections timelike with photon 1 first",
        started,
        None,
    );
}

#[test]
fn a07_critical_velocity_flip() {
    let started = Instant::now();
    let detection1 = Event::new(EventLabel::Detection1, 1.0, -1.0, 0.0);
    let mirror = Event::new(EventLabel::Mirror(1), 3.0, 3.0, 0.0);
    let beta_c = critical_velocity(1.0, 3.0).unwrap();
    assert_close(beta_c, 0.5, EXACT, "critical velocity of (1, 3)");

    let order = |beta: f64| ordering(&detection1, &mirror, Boost::new(beta).unwrap());
    assert_eq!(order(beta_c - 1e-6), EventOrder::E1First);
    assert_eq!(order(beta_c), EventOrder::Simultaneous);
    assert_eq!(order(beta_c + 1e-6), EventOrder::E2First);

    for k in [0.1, 1.0, 10.0] {
        assert_close(
            critical_velocity(k * 1.0, k * 3.0).unwrap(),
            0.5,
            EXACT,
            "scale invariance",
        );
    }
    finish(
        "event order flips exactly at the critical velocity, scale-invariantly",
        started,
        None,
    );
}

#[test]
fn a08_collapse_locus_crosses_the_mirror() {
    let started = Instant::now();
    let scenario = parse_scenario(beamsplitter_text()).unwrap();
    let timeline = build_timeline(&scenario, PathChoice::Long).unwrap();

    let lab = frame_report(&timeline, 0.0).unwrap();
    let locus = lab.collapse_locus.expect("locus inside the worldline span");
    assert_eq!(locus.position, Some(MirrorSide::BeforeMirror));
    assert_eq!(locus.segment, 0);
    assert_close(locus.event.t, 1.0, 1e-9, "lab-frame locus time");

    let boosted = frame_report(&timeline, 0.6).unwrap();
    let locus = boosted.collapse_locus.expect("locus inside the worldline span");
    assert_eq!(locus.position, Some(MirrorSide::PastMirror));
    assert_close(locus.event.t, 3.4, 1e-9, "boosted locus t");
    assert_close(locus.event.x, 3.0, 1e-9, "boosted locus x");
    assert_close(locus.event.y, 0.4, 1e-9, "boosted locus y");
    finish(
        "the collapse locus moves past the mirror above the critical boost",
        started,
        None,
    );
}

#[test]
fn a09_beam_splitter_mixes_interval_classes() {
    let started = Instant::now();
    let scenario = parse_scenario(beamsplitter_text()).unwrap();
    let records = run_batch(&scenario).unwrap();
    let n = records.len() as f64;
    let mut longs = 0u64;
    for r in &records {
        match r.path_taken {
            PathTaken::Long => {
                longs += 1;
                assert_eq!(r.interval_class.kind, IntervalKind::Timelike);
            }
            PathTaken::Short => assert_eq!(r.interval_class.kind, IntervalKind::Spacelike),
            PathTaken::Direct => panic!("beam-splitter mode has no direct route"),
        }
    }
    let fraction = longs as f64 / n;
    let sigma = (0.25 / n).sqrt();
    assert_close(fraction, 0.5, 4.0 * sigma, "long-path fraction");
    finish(
        "long routes are timelike, short routes spacelike, split 50/50",
        started,
        None,
    );
}

#[test]
fn a10_chsh_violation() {
    let started = Instant::now();
    let angles = ChshAngles::maximal();

    let analytic = chsh_analytic(&bell_state(), &angles).unwrap();
    assert_close(analytic.s, 2.0 * SQRT_2, 1e-9, "analytic CHSH value");
    assert!(analytic.violation);

    let n = 100_000u64;
    let mut tables = Vec::new();
    for (i, (a, b)) in angles.setting_pairs().into_iter().enumerate() {
        let mut s = Scenario::direct(1.0, 1.0);
        s.orientation_a = a;
        s.orientation_b = b;
        s.run.trials = n;
        s.run.seed = 100 + i as u64;
        tables.push(tabulate(&run_batch(&s).unwrap()).unwrap());
    }
    let empirical = chsh_empirical(&angles, &tables).unwrap();
    let sigma = empirical.standard_error.unwrap();
    assert!(
        empirical.s > 2.0 && (empirical.s - 2.0) >= 3.0 * sigma,
        "S = {} with sigma {sigma} is not a 3-sigma violation",
        empirical.s
    );
    assert!(empirical.violation);
    finish(
        "CHSH reaches 2*sqrt(2) analytically and violates 2 at 3 sigma empirically",
        started,
        Some(Duration::from_secs(30)),
    );
}

#[test]
fn a11_relativity_invariants() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let boosts: Vec<Boost> = (0..20)
        .map(|k| Boost::new(-0.95 + 1.9 * k as f64 / 19.0).unwrap())
        .collect();
    for _ in 0..1000 {
        let mut random_event = |label| {
            Event::new(
                label,
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
            )
        };
        let e1 = random_event(EventLabel::Detection1);
        let e2 = random_event(EventLabel::Detection2);
        let lab = interval(&e1, &e2);
        let lab_order = ordering(&e1, &e2, Boost::identity());
        for b in &boosts {
            let b1 = boost_event(&e1, *b);
            let b2 = boost_event(&e2, *b);
            let seen = interval(&b1, &b2);
            assert_eq!(seen.kind, lab.kind, "interval class changed under boost");
            assert_close(
                seen.s_squared,
                lab.s_squared,
                1e-9 * lab.s_squared.abs().max(1.0),
                "interval invariance",
            );
            if lab.kind != IntervalKind::Spacelike && lab_order != EventOrder::Simultaneous {
                assert_eq!(
                    ordering(&e1, &e2, *b),
                    lab_order,
                    "causal order changed under boost"
                );
            }

            let back = boost_event(&boost_event(&e1, *b), b.inverse());
            assert_close(back.t, e1.t, 1e-9 * e1.t.abs().max(1.0), "roundtrip t");
            assert_close(back.x, e1.x, 1e-9 * e1.x.abs().max(1.0), "roundtrip x");
        }
        let b1 = Boost::new(rng.random_range(-0.9..0.9)).unwrap();
        let b2 = Boost::new(rng.random_range(-0.9..0.9)).unwrap();
        let two_step = boost_event(&boost_event(&e1, b1), b2);
        let composed = boost_event(&e1, b1.compose(b2));
        assert_close(two_step.t, composed.t, 1e-9 * composed.t.abs().max(1.0), "composition t");
        assert_close(two_step.x, composed.x, 1e-9 * composed.x.abs().max(1.0), "composition x");
    }
    finish(
        "interval class, causal order, and boost identities hold over 1000 pairs x 20 boosts",
        started,
        None,
    );
}

#[test]
fn a12_batches_are_bit_reproducible() {
    let started = Instant::now();
    let scenario = parse_scenario(fig2_text()).unwrap();

    let first = records_to_jsonl(&run_batch(&scenario).unwrap());
    let second = records_to_jsonl(&run_batch(&scenario).unwrap());
    assert_eq!(first, second, "repeated runs must serialize identically");

    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| records_to_jsonl(&run_batch(&scenario).unwrap()));
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap()
        .install(|| records_to_jsonl(&run_batch(&scenario).unwrap()));
    assert_eq!(serial, parallel, "parallelism must not change the records");
    assert_eq!(first, serial);
    finish(
        "fig2 batches are byte-identical across runs and thread counts",
        started,
        None,
    );
}
