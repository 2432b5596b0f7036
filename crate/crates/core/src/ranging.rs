//! Single-receiver range estimators.
//!
//! Method A ranges from the duration of the dispersion structure: the first
//! and last arrivals travel at equivalent starting and ending group speeds,
//! so `r = dt / (1/v_end - 1/v_start)`. Method B ranges from the delay
//! between the first two modes, using their mean group speeds in a band
//! where the two ducts make them travel at different speeds.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modes::DispersionTable;
use crate::synth::TimeSeries;
use crate::tfr::{self, Envelope, Peak, TfrError};

#[derive(Debug, Error)]
pub enum RangingError {
    #[error("need {needed} envelope peaks for the anchors, found {found}")]
    TooFewPeaks { needed: usize, found: usize },
    #[error("anchors resolve to peaks out of order (start {start} s, end {end} s)")]
    AnchorOrder { start: f64, end: f64 },
    #[error("dispersion table has no grid frequency in [{0}, {1}] Hz")]
    EmptyBand(f64, f64),
    #[error("no usable mode in the band after exclusions")]
    NoModes,
    #[error("mode {mode} missing at {frequency} Hz")]
    MissingMode { mode: usize, frequency: f64 },
    #[error("starting speed {v_start} m/s must exceed ending speed {v_end} m/s")]
    SpeedOrder { v_start: f64, v_end: f64 },
    #[error("delay must be finite and >= 0, got {0}")]
    BadDelay(f64),
    #[error(
        "mode 1 ({v_mode1:.3} m/s) is not at least {min_gap} m/s faster than mode 2 \
         ({v_mode2:.3} m/s) in band; the profile does not look dual-channel"
    )]
    NoDualChannel {
        v_mode1: f64,
        v_mode2: f64,
        min_gap: f64,
    },
    #[error("mode arrivals are indistinguishable")]
    Indistinguishable,
    #[error("speeds are not of the kind required by this estimator")]
    WrongSpeeds,
    #[error(transparent)]
    Tfr(#[from] TfrError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakAnchor {
    First,
    Second,
    Penultimate,
    Last,
}

impl PeakAnchor {
    fn resolve(self, n: usize) -> Option<usize> {
        match self {
            PeakAnchor::First => (n >= 1).then_some(0),
            PeakAnchor::Second => (n >= 2).then_some(1),
            PeakAnchor::Penultimate => (n >= 2).then(|| n - 2),
            PeakAnchor::Last => n.checked_sub(1),
        }
    }

    /// Peaks counted from the start (positive) or from the end (negative).
    fn offset(self) -> isize {
        match self {
            PeakAnchor::First => 0,
            PeakAnchor::Second => 1,
            PeakAnchor::Penultimate => -2,
            PeakAnchor::Last => -1,
        }
    }
}

/// Which envelope peaks delimit a delay, and how peaks are picked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPolicy {
    pub start: PeakAnchor,
    pub end: PeakAnchor,
    pub min_prominence: f64,
    pub min_separation: f64,
}

impl PeakPolicy {
    /// Second peak to last peak.
    pub fn duration() -> Self {
        Self {
            start: PeakAnchor::Second,
            end: PeakAnchor::Last,
            min_prominence: tfr::DEFAULT_MIN_PROMINENCE,
            min_separation: tfr::DEFAULT_MIN_SEPARATION,
        }
    }

    /// The last two distinct arrivals.
    pub fn mode_pair() -> Self {
        Self {
            start: PeakAnchor::Penultimate,
            end: PeakAnchor::Last,
            ..Self::duration()
        }
    }

    /// Smallest peak count at which the two anchors are distinct.
    pub fn needed_peaks(&self) -> usize {
        let (a, b) = (self.start.offset(), self.end.offset());
        let need = |o: isize| if o >= 0 { o as usize + 1 } else { (-o) as usize };
        match (a >= 0, b >= 0) {
            (true, true) | (false, false) => need(a).max(need(b)),
            // one counted from each end: they meet when the counts add up
            _ => need(a) + need(b),
        }
    }
}

impl Default for PeakPolicy {
    fn default() -> Self {
        Self::duration()
    }
}

/// A delay between two anchored arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delay {
    pub delta_t: f64,
    pub start_time: f64,
    pub end_time: f64,
}

/// Delay between the anchored peaks of a time-sorted peak list. The anchors
/// must pick distinct peaks in time order, so the default second-to-last
/// policy needs three peaks.
pub fn anchored_delay(peaks: &[Peak], policy: &PeakPolicy) -> Result<Delay, RangingError> {
    let n = peaks.len();
    let needed = policy.needed_peaks();
    let (Some(a), Some(b)) = (policy.start.resolve(n), policy.end.resolve(n)) else {
        return Err(RangingError::TooFewPeaks { needed, found: n });
    };
    if n < needed {
        return Err(RangingError::TooFewPeaks { needed, found: n });
    }
    let (start_time, end_time) = (peaks[a].time, peaks[b].time);
    if a >= b {
        return Err(RangingError::AnchorOrder {
            start: start_time,
            end: end_time,
        });
    }
    Ok(Delay {
        delta_t: end_time - start_time,
        start_time,
        end_time,
    })
}

/// Duration of the dispersion structure: peaks of `env` under `policy`,
/// then the delay between the anchored ones.
pub fn dispersion_duration(env: &Envelope, policy: &PeakPolicy) -> Result<Delay, RangingError> {
    let peaks = tfr::find_peaks(env, policy.min_prominence, policy.min_separation)?;
    anchored_delay(&peaks, policy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquivalentSpeeds {
    Duration {
        v_start: f64,
        v_end: f64,
        band: [f64; 2],
        modes: Vec<usize>,
    },
    ModePair {
        v_mode1: f64,
        v_mode2: f64,
        band: [f64; 2],
    },
}

/// Mean over modes of the in-band maximum (start) and minimum (end) group
/// speed. Modes in `exclude`, and modes with no value in the band, are
/// skipped.
pub fn equivalent_speeds_duration(
    table: &DispersionTable,
    exclude: &[usize],
    band: [f64; 2],
) -> Result<EquivalentSpeeds, RangingError> {
    let idx = table.band_indices(band[0], band[1]);
    if idx.is_empty() {
        return Err(RangingError::EmptyBand(band[0], band[1]));
    }
    let mut modes = Vec::new();
    let (mut sum_max, mut sum_min) = (0.0, 0.0);
    for c in &table.curves {
        if exclude.contains(&c.mode) {
            continue;
        }
        let vals: Vec<f64> = idx.iter().filter_map(|&i| c.group_velocity[i]).collect();
        if vals.is_empty() {
            continue;
        }
        sum_max += vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        sum_min += vals.iter().copied().fold(f64::INFINITY, f64::min);
        modes.push(c.mode);
    }
    if modes.is_empty() {
        return Err(RangingError::NoModes);
    }
    let n = modes.len() as f64;
    Ok(EquivalentSpeeds::Duration {
        v_start: sum_max / n,
        v_end: sum_min / n,
        band,
        modes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangingMethod {
    Duration,
    ModePair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    pub method: RangingMethod,
    pub range_m: f64,
    pub delta_t: f64,
    pub speeds: EquivalentSpeeds,
    /// Arrival times the delay was measured between, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Anchors>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    pub start: String,
    pub end: String,
    pub start_time: f64,
    pub end_time: f64,
}

impl Anchors {
    pub fn from_policy(policy: &PeakPolicy, delay: &Delay) -> Self {
        let name = |a: PeakAnchor| {
            serde_json::to_value(a)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default()
        };
        Self {
            start: name(policy.start),
            end: name(policy.end),
            start_time: delay.start_time,
            end_time: delay.end_time,
        }
    }
}

impl RangeEstimate {
    pub fn with_anchors(mut self, anchors: Anchors) -> Self {
        self.anchors = Some(anchors);
        self
    }

    pub fn with_environment_hash(mut self, hash: impl Into<String>) -> Self {
        self.environment_hash = Some(hash.into());
        self
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), RangingError> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

fn check_delay(dt: f64) -> Result<(), RangingError> {
    if dt.is_finite() && dt >= 0.0 {
        Ok(())
    } else {
        Err(RangingError::BadDelay(dt))
    }
}

/// `r = dt / (1/v_end - 1/v_start)`.
pub fn estimate_range_duration(
    delta_t: f64,
    speeds: &EquivalentSpeeds,
) -> Result<RangeEstimate, RangingError> {
    check_delay(delta_t)?;
    let EquivalentSpeeds::Duration { v_start, v_end, .. } = *speeds else {
        return Err(RangingError::WrongSpeeds);
    };
    if !(v_start > v_end && v_end > 0.0) {
        return Err(RangingError::SpeedOrder { v_start, v_end });
    }
    Ok(RangeEstimate {
        method: RangingMethod::Duration,
        range_m: delta_t / (1.0 / v_end - 1.0 / v_start),
        delta_t,
        speeds: speeds.clone(),
        anchors: None,
        environment_hash: None,
    })
}

/// Envelope-peak delay between the first two modes, always non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePairDelay {
    pub delta_t: f64,
    pub t_mode1: f64,
    pub t_mode2: f64,
}

/// Delay between the envelope maxima of two separated mode signals.
pub fn mode_pair_delay(
    mode1: &TimeSeries,
    mode2: &TimeSeries,
    smoothing: usize,
) -> Result<ModePairDelay, RangingError> {
    let peak_time = |ts: &TimeSeries| {
        let env = tfr::envelope(ts, smoothing);
        let (i, v) = env
            .values
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        (v > 0.0).then(|| env.times[i])
    };
    let (Some(t1), Some(t2)) = (peak_time(mode1), peak_time(mode2)) else {
        return Err(RangingError::Indistinguishable);
    };
    let delta_t = (t1 - t2).abs();
    if delta_t < mode1.dt().max(mode2.dt()) {
        return Err(RangingError::Indistinguishable);
    }
    Ok(ModePairDelay {
        delta_t,
        t_mode1: t1,
        t_mode2: t2,
    })
}

/// Raw-envelope fallback: the delay between the anchored peaks (by default
/// the last two), without claiming which one is mode 1.
pub fn mode_pair_delay_envelope(env: &Envelope, policy: &PeakPolicy) -> Result<Delay, RangingError> {
    let peaks = tfr::find_peaks(env, policy.min_prominence, policy.min_separation)?;
    let n = peaks.len();
    let (Some(a), Some(b)) = (policy.start.resolve(n), policy.end.resolve(n)) else {
        return Err(RangingError::TooFewPeaks { needed: 2, found: n });
    };
    if a == b {
        return Err(RangingError::Indistinguishable);
    }
    let (a, b) = (a.min(b), a.max(b));
    Ok(Delay {
        delta_t: peaks[b].time - peaks[a].time,
        start_time: peaks[a].time,
        end_time: peaks[b].time,
    })
}

/// Default band for the mode-pair speeds.
pub const MODE_PAIR_BAND: [f64; 2] = [30.0, 80.0];
/// Mode 1 must beat mode 2 by at least this mean group speed in band.
pub const MIN_MODE_PAIR_GAP: f64 = 1.0;

/// Mean in-band group speeds of modes 1 and 2. Fails unless mode 1 is at
/// least [`MIN_MODE_PAIR_GAP`] faster, which is what the two ducts produce
/// in the upper band.
pub fn equivalent_speeds_mode_pair(
    table: &DispersionTable,
    band: [f64; 2],
) -> Result<EquivalentSpeeds, RangingError> {
    let idx = table.band_indices(band[0], band[1]);
    if idx.is_empty() {
        return Err(RangingError::EmptyBand(band[0], band[1]));
    }
    let mean = |mode: usize| -> Result<f64, RangingError> {
        let mut s = 0.0;
        for &i in &idx {
            s += table.vg(mode, i).ok_or(RangingError::MissingMode {
                mode,
                frequency: table.frequencies[i],
            })?;
        }
        Ok(s / idx.len() as f64)
    };
    let (v_mode1, v_mode2) = (mean(1)?, mean(2)?);
    if !(v_mode1 - v_mode2 >= MIN_MODE_PAIR_GAP) {
        return Err(RangingError::NoDualChannel {
            v_mode1,
            v_mode2,
            min_gap: MIN_MODE_PAIR_GAP,
        });
    }
    Ok(EquivalentSpeeds::ModePair {
        v_mode1,
        v_mode2,
        band,
    })
}

/// `r = dt12 / (1/v2 - 1/v1)` with the mean speeds of modes 1 and 2 in `band`.
pub fn estimate_range_mode_pair(
    delta_t12: f64,
    table: &DispersionTable,
    band: [f64; 2],
) -> Result<RangeEstimate, RangingError> {
    check_delay(delta_t12)?;
    let speeds = equivalent_speeds_mode_pair(table, band)?;
    let EquivalentSpeeds::ModePair { v_mode1, v_mode2, .. } = speeds else {
        unreachable!()
    };
    Ok(RangeEstimate {
        method: RangingMethod::ModePair,
        range_m: delta_t12 / (1.0 / v_mode2 - 1.0 / v_mode1),
        delta_t: delta_t12,
        speeds,
        anchors: None,
        environment_hash: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeCurve;

    fn peaks(times: &[f64]) -> Vec<Peak> {
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| Peak {
                index: i,
                time: t,
                amplitude: 1.0,
                prominence: 1.0,
            })
            .collect()
    }

    fn table(v1: f64, v2: f64) -> DispersionTable {
        let freqs: Vec<f64> = (30..=80).step_by(10).map(f64::from).collect();
        let n = freqs.len();
        DispersionTable {
            frequencies: freqs,
            curves: vec![
                ModeCurve {
                    mode: 1,
                    wavenumber: vec![Some(0.1); n],
                    group_velocity: vec![Some(v1); n],
                },
                ModeCurve {
                    mode: 2,
                    wavenumber: vec![Some(0.1); n],
                    group_velocity: vec![Some(v2); n],
                },
            ],
        }
    }

    #[test]
    fn anchors_resolve() {
        let p = peaks(&[1.0, 2.0, 4.0, 7.0]);
        let d = anchored_delay(&p, &PeakPolicy::duration()).unwrap();
        assert_eq!((d.start_time, d.end_time), (2.0, 7.0));
        let pol = PeakPolicy {
            start: PeakAnchor::First,
            end: PeakAnchor::Penultimate,
            ..PeakPolicy::duration()
        };
        assert_eq!(anchored_delay(&p, &pol).unwrap().delta_t, 3.0);
        assert!(matches!(
            anchored_delay(&p[..2], &PeakPolicy::duration()),
            Err(RangingError::TooFewPeaks { .. })
        ));
        let backwards = PeakPolicy {
            start: PeakAnchor::Last,
            end: PeakAnchor::First,
            ..PeakPolicy::duration()
        };
        assert!(matches!(anchored_delay(&p, &backwards), Err(RangingError::AnchorOrder { .. })));
    }

    #[test]
    fn duration_formula() {
        let sp = EquivalentSpeeds::Duration {
            v_start: 1500.0,
            v_end: 1440.0,
            band: [10.0, 100.0],
            modes: vec![2],
        };
        let r = estimate_range_duration(1.6039, &sp).unwrap().range_m;
        // 1.6039 * 1500 * 1440 / 60
        assert!((r - 57_740.4).abs() < 0.1, "{r}");
        assert_eq!(estimate_range_duration(0.0, &sp).unwrap().range_m, 0.0);
        assert!(estimate_range_duration(-1.0, &sp).is_err());
        let flat = EquivalentSpeeds::Duration {
            v_start: 1450.0,
            v_end: 1450.0,
            band: [50.0, 50.0],
            modes: vec![2],
        };
        assert!(matches!(
            estimate_range_duration(1.0, &flat),
            Err(RangingError::SpeedOrder { .. })
        ));
    }

    #[test]
    fn mode_pair_formula_and_guard() {
        let t = table(1432.0, 1430.0);
        let e = estimate_range_mode_pair(0.3, &t, MODE_PAIR_BAND).unwrap();
        let expect = 0.3 / (1.0 / 1430.0 - 1.0 / 1432.0);
        assert!((e.range_m - expect).abs() < 1e-6 * expect);
        assert_eq!(estimate_range_mode_pair(0.0, &t, MODE_PAIR_BAND).unwrap().range_m, 0.0);
        for (a, b) in [(1430.0, 1430.0), (1430.5, 1430.0), (1428.0, 1430.0)] {
            assert!(matches!(
                estimate_range_mode_pair(0.3, &table(a, b), MODE_PAIR_BAND),
                Err(RangingError::NoDualChannel { .. })
            ));
        }
    }

    #[test]
    fn estimate_json_has_report_fields() {
        let sp = EquivalentSpeeds::Duration {
            v_start: 1450.0,
            v_end: 1430.0,
            band: [10.0, 100.0],
            modes: vec![2, 3],
        };
        let delay = Delay {
            delta_t: 1.0,
            start_time: 10.0,
            end_time: 11.0,
        };
        let e = estimate_range_duration(1.0, &sp)
            .unwrap()
            .with_anchors(Anchors::from_policy(&PeakPolicy::duration(), &delay))
            .with_environment_hash("abc");
        let mut buf = Vec::new();
        e.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["method"], "duration");
        assert_eq!(v["speeds"]["kind"], "duration");
        assert_eq!(v["anchors"]["start"], "second");
        assert_eq!(v["environment_hash"], "abc");
        assert!(v["range_m"].as_f64().unwrap() > 0.0);
        let back: RangeEstimate = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn separated_mode_delay() {
        let fs = 200.0;
        let bump = |c: f64| {
            let samples = (0..1000)
                .map(|i| {
                    let t = i as f64 / fs;
                    (-((t - c) / 0.1).powi(2)).exp() * (2.0 * std::f64::consts::PI * 40.0 * t).cos()
                })
                .collect();
            TimeSeries::new(fs, 0.0, samples)
        };
        let d = mode_pair_delay(&bump(3.0), &bump(2.0), 1).unwrap();
        assert!((d.delta_t - 1.0).abs() <= 1.0 / fs, "{d:?}");
        assert!(matches!(
            mode_pair_delay(&bump(2.0), &bump(2.0), 1),
            Err(RangingError::Indistinguishable)
        ));
    }
}
