use std::f64::consts::PI;

use ductmode::env::{DualChannelParams, Waveguide};
use ductmode::modes::dispersion_table;
use ductmode::ranging::*;
use ductmode::synth::TimeSeries;
use ductmode::tfr::{Envelope, Peak};
use proptest::prelude::*;

fn peaks_at(times: &[f64]) -> Vec<Peak> {
    times
        .iter()
        .enumerate()
        .map(|(i, &time)| Peak {
            index: i,
            time,
            amplitude: 1.0,
            prominence: 1.0,
        })
        .collect()
}

fn first_last() -> PeakPolicy {
    PeakPolicy {
        start: PeakAnchor::First,
        end: PeakAnchor::Last,
        ..PeakPolicy::duration()
    }
}

fn bumps(centers: &[f64], t0: f64, fs: f64, len: f64) -> Envelope {
    let times: Vec<f64> = (0..(len * fs) as usize).map(|i| t0 + i as f64 / fs).collect();
    let values = times
        .iter()
        .map(|&t| centers.iter().map(|c| (-((t - t0 - c) / 0.05).powi(2)).exp()).sum())
        .collect();
    Envelope { times, values }
}

#[test]
fn published_duration_anchors() {
    let d = anchored_delay(&peaks_at(&[17.5, 18.0919, 18.9, 19.6958]), &PeakPolicy::duration()).unwrap();
    assert!((d.delta_t - 1.6039).abs() < 1e-9);
    let d = anchored_delay(&peaks_at(&[16.2, 17.1042, 20.0, 21.3239]), &PeakPolicy::duration()).unwrap();
    assert!((d.delta_t - 4.2197).abs() < 1e-9);
}

#[test]
fn published_mode_pair_anchors() {
    let d = anchored_delay(&peaks_at(&[7.0, 7.5111, 7.8536]), &PeakPolicy::mode_pair()).unwrap();
    assert!((d.delta_t - 0.3425).abs() < 1e-9);
    let d = anchored_delay(&peaks_at(&[15.0, 15.8549, 16.2747]), &PeakPolicy::mode_pair()).unwrap();
    assert!((d.delta_t - 0.4198).abs() < 1e-9);
}

#[test]
fn two_bumps_first_to_last() {
    let env = bumps(&[1.0, 2.37], 0.0, 500.0, 4.0);
    let d = dispersion_duration(&env, &first_last()).unwrap();
    assert!((d.delta_t - 1.37).abs() <= 1.0 / 500.0);
    // the default policy needs a third peak
    assert!(matches!(
        dispersion_duration(&env, &PeakPolicy::duration()),
        Err(RangingError::TooFewPeaks { needed: 3, found: 2 })
    ));
}

#[test]
fn duration_formula_by_hand() {
    let speeds = EquivalentSpeeds::Duration {
        v_start: 1500.0,
        v_end: 1440.0,
        band: [10.0, 100.0],
        modes: vec![2, 3],
    };
    let r = estimate_range_duration(1.6039, &speeds).unwrap().range_m;
    // 1.6039 / (1/1440 - 1/1500) = 1.6039 * 36000
    assert!((r - 57_740.4).abs() < 1e-6);
    assert_eq!(estimate_range_duration(0.0, &speeds).unwrap().range_m, 0.0);
}

#[test]
fn rigid_table_closed_form_speeds() {
    let (c, depth) = (1500.0, 2000.0);
    let wg = Waveguide::ideal_rigid(c, depth).unwrap();
    let table = dispersion_table(&wg, 5.0, 100.0, 1.0, 5).unwrap();
    let EquivalentSpeeds::Duration { v_start, v_end, modes, .. } =
        equivalent_speeds_duration(&table, &[1], [5.0, 100.0]).unwrap()
    else {
        panic!()
    };
    assert_eq!(modes, vec![2, 3, 4, 5]);
    let vg = |m: usize, f: f64| {
        let kz = (m as f64 - 0.5) * PI / depth;
        let w = 2.0 * PI * f;
        c * c * ((w / c).powi(2) - kz * kz).sqrt() / w
    };
    let start: f64 = modes.iter().map(|&m| vg(m, 100.0)).sum::<f64>() / 4.0;
    let end: f64 = modes.iter().map(|&m| vg(m, 5.0)).sum::<f64>() / 4.0;
    assert!(v_start < c && ((v_start - start) / start).abs() < 1e-3);
    assert!(((v_end - end) / end).abs() < 1e-3);
}

#[test]
fn degenerate_band_fails_downstream() {
    let wg = Waveguide::dual_channel_fixture();
    let table = dispersion_table(&wg, 40.0, 60.0, 10.0, 4).unwrap();
    let speeds = equivalent_speeds_duration(&table, &[1], [50.0, 50.0]).unwrap();
    assert!(matches!(
        estimate_range_duration(1.0, &speeds),
        Err(RangingError::SpeedOrder { .. })
    ));
    assert!(matches!(
        equivalent_speeds_duration(&table, &[1], [70.0, 90.0]),
        Err(RangingError::EmptyBand(..))
    ));
}

#[test]
fn dual_channel_speeds_are_sane() {
    let wg = Waveguide::dual_channel_fixture();
    let table = dispersion_table(&wg, 10.0, 100.0, 1.0, 10).unwrap();
    let EquivalentSpeeds::Duration { v_start, v_end, .. } =
        equivalent_speeds_duration(&table, &[1], [10.0, 100.0]).unwrap()
    else {
        panic!()
    };
    assert!(v_start > v_end);
    assert!((1400.0..=1500.0).contains(&v_start) && (1400.0..=1500.0).contains(&v_end));

    let EquivalentSpeeds::ModePair { v_mode1, v_mode2, band } =
        equivalent_speeds_mode_pair(&table, MODE_PAIR_BAND).unwrap()
    else {
        panic!()
    };
    assert_eq!(band, [30.0, 80.0]);
    assert!(v_mode1 - v_mode2 >= MIN_MODE_PAIR_GAP);
    let est = estimate_range_mode_pair(0.3425, &table, MODE_PAIR_BAND).unwrap();
    assert!((est.range_m - 0.3425 / (1.0 / v_mode2 - 1.0 / v_mode1)).abs() < 1e-6);
    assert_eq!(estimate_range_mode_pair(0.0, &table, MODE_PAIR_BAND).unwrap().range_m, 0.0);
}

#[test]
fn guard_refuses_single_duct_profiles() {
    for p in [
        DualChannelParams { duct1_strength: 0.0, ..Default::default() },
        DualChannelParams { duct2_strength: 0.0, ..Default::default() },
    ] {
        let wg = Waveguide::dual_channel(&p).unwrap();
        let table = dispersion_table(&wg, 30.0, 80.0, 1.0, 4).unwrap();
        assert!(matches!(
            estimate_range_mode_pair(0.3, &table, MODE_PAIR_BAND),
            Err(RangingError::NoDualChannel { .. })
        ));
    }
}

#[test]
fn speeds_from_wrong_duct_depths_bias_the_estimate() {
    let truth = dispersion_table(&Waveguide::dual_channel_fixture(), 30.0, 80.0, 1.0, 4).unwrap();
    let p = DualChannelParams::default();
    let moved = DualChannelParams {
        duct1_depth: 1.2 * p.duct1_depth,
        duct2_depth: 1.2 * p.duct2_depth,
        ..p
    };
    let wrong = dispersion_table(&Waveguide::dual_channel(&moved).unwrap(), 30.0, 80.0, 1.0, 4).unwrap();
    let r0 = estimate_range_mode_pair(0.3425, &truth, MODE_PAIR_BAND).unwrap().range_m;
    let r = estimate_range_mode_pair(0.3425, &wrong, MODE_PAIR_BAND).unwrap().range_m;
    assert!(((r - r0) / r0).abs() > 0.1, "{r} vs {r0}");
}

#[test]
fn separated_modes_one_second_apart() {
    let fs = 200.0;
    let pulse = |c: f64| {
        TimeSeries::new(
            fs,
            10.0,
            (0..1200)
                .map(|i| {
                    let t = i as f64 / fs;
                    (-((t - c) / 0.2).powi(2)).exp() * (2.0 * PI * 40.0 * t).cos()
                })
                .collect(),
        )
    };
    let d = mode_pair_delay(&pulse(3.0), &pulse(2.0), 1).unwrap();
    assert!((d.delta_t - 1.0).abs() <= 1.0 / fs);
    assert!(matches!(
        mode_pair_delay(&pulse(3.0), &pulse(3.0), 1),
        Err(RangingError::Indistinguishable)
    ));
    let env = bumps(&[0.5, 1.4, 2.4], 0.0, fs, 3.0);
    let raw = mode_pair_delay_envelope(&env, &PeakPolicy::mode_pair()).unwrap();
    assert!((raw.delta_t - 1.0).abs() <= 1.0 / fs);
}

#[test]
fn report_json() {
    let speeds = EquivalentSpeeds::Duration {
        v_start: 1440.0,
        v_end: 1430.0,
        band: [10.0, 100.0],
        modes: vec![2, 3, 4],
    };
    let delay = Delay {
        delta_t: 1.0,
        start_time: 140.0,
        end_time: 141.0,
    };
    let est = estimate_range_duration(1.0, &speeds)
        .unwrap()
        .with_anchors(Anchors::from_policy(&PeakPolicy::duration(), &delay))
        .with_environment_hash("abc123");
    let mut buf = Vec::new();
    est.write_json(&mut buf).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(v["method"], "duration");
    assert_eq!(v["speeds"]["kind"], "duration");
    assert_eq!(v["anchors"]["start"], "second");
    assert_eq!(v["environment_hash"], "abc123");
    assert!(v["range_m"].as_f64().unwrap() > 0.0);
}

fn duration_speeds(v_end: f64, gap: f64) -> EquivalentSpeeds {
    EquivalentSpeeds::Duration {
        v_start: v_end + gap,
        v_end,
        band: [10.0, 100.0],
        modes: vec![2],
    }
}

proptest! {
    #[test]
    fn duration_estimate_is_linear(dt in 0.0f64..10.0, a in 0.0f64..10.0, v in 1400.0f64..1500.0, gap in 0.5f64..50.0) {
        let s = duration_speeds(v, gap);
        let r1 = estimate_range_duration(dt, &s).unwrap().range_m;
        let r2 = estimate_range_duration(a * dt, &s).unwrap().range_m;
        prop_assert!((r2 - a * r1).abs() <= 1e-9 * (a * r1).abs().max(1.0));
    }

    #[test]
    fn duration_estimate_is_monotone(dt in 0.0f64..10.0, extra in 1e-6f64..5.0, v in 1400.0f64..1500.0, gap in 0.5f64..50.0) {
        let s = duration_speeds(v, gap);
        let r1 = estimate_range_duration(dt, &s).unwrap().range_m;
        let r2 = estimate_range_duration(dt + extra, &s).unwrap().range_m;
        prop_assert!(r2 > r1);
    }

    #[test]
    fn delays_ignore_time_translation(
        c in proptest::collection::vec(0.3f64..5.7, 3..6),
        shift in -500.0f64..500.0,
    ) {
        let fs = 200.0;
        let a = bumps(&c, 0.0, fs, 6.0);
        let b = bumps(&c, shift, fs, 6.0);
        for policy in [PeakPolicy::duration(), first_last(), PeakPolicy::mode_pair()] {
            let da = dispersion_duration(&a, &policy);
            let db = dispersion_duration(&b, &policy);
            match (da, db) {
                (Ok(x), Ok(y)) => prop_assert!((x.delta_t - y.delta_t).abs() < 1e-9 * shift.abs().max(1.0)),
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
            }
        }
        let pa = mode_pair_delay_envelope(&a, &PeakPolicy::mode_pair());
        let pb = mode_pair_delay_envelope(&b, &PeakPolicy::mode_pair());
        if let (Ok(x), Ok(y)) = (pa, pb) {
            prop_assert!((x.delta_t - y.delta_t).abs() < 1e-9 * shift.abs().max(1.0));
        }
    }
}
