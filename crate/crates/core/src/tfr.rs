//! Time-frequency and envelope analysis.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::synth::TimeSeries;

#[derive(Debug, Error)]
pub enum TfrError {
    #[error("window of {window} samples longer than signal of {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("band [{0}, {1}] Hz contains no spectrogram bins")]
    EmptyBand(f64, f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Magnitude STFT. `magnitudes[frame][bin]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    pub times: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<Vec<f64>>,
    pub window_length: usize,
    pub hop: usize,
}

impl Spectrogram {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_s,f_hz,mag")?;
        for (t, row) in self.times.iter().zip(&self.magnitudes) {
            for (f, m) in self.frequencies.iter().zip(row) {
                writeln!(out, "{t:.6},{f:.6},{m:.9e}")?;
            }
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            0.0
        }
    }

    /// Sum of squared magnitudes over frames with `t_lo <= t <= t_hi` and bins
    /// with `f_lo <= f <= f_hi`.
    pub fn band_energy(&self, t_lo: f64, t_hi: f64, f_lo: f64, f_hi: f64) -> f64 {
        let mut e = 0.0;
        for (t, row) in self.times.iter().zip(&self.magnitudes) {
            if *t < t_lo || *t > t_hi {
                continue;
            }
            for (f, m) in self.frequencies.iter().zip(row) {
                if *f >= f_lo && *f <= f_hi {
                    e += m * m;
                }
            }
        }
        e
    }
}

/// Default analysis window: 0.2 s of samples.
pub fn default_window(fs: f64) -> usize {
    (0.2 * fs).round().max(4.0) as usize
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Hann-windowed magnitude STFT with FFT length equal to the window.
pub fn stft(ts: &TimeSeries, window_length: usize, hop: usize) -> Result<Spectrogram, TfrError> {
    stft_padded(ts, window_length, hop, window_length)
}

/// As [`stft`] but zero-padding each frame to `nfft` points.
pub fn stft_padded(
    ts: &TimeSeries,
    window_length: usize,
    hop: usize,
    nfft: usize,
) -> Result<Spectrogram, TfrError> {
    if window_length == 0 || hop == 0 || nfft < window_length {
        return Err(TfrError::BadParameter(
            "need window_length >= 1, hop >= 1 and nfft >= window_length".into(),
        ));
    }
    if window_length > ts.len() {
        return Err(TfrError::WindowTooLong {
            window: window_length,
            len: ts.len(),
        });
    }
    let win = hann(window_length);
    let frames = (ts.len() - window_length) / hop + 1;
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let nbins = nfft / 2 + 1;
    let magnitudes: Vec<Vec<f64>> = (0..frames)
        .into_par_iter()
        .map(|j| {
            let start = j * hop;
            let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
            for i in 0..window_length {
                buf[i].re = ts.samples[start + i] * win[i];
            }
            fft.process(&mut buf);
            buf[..nbins].iter().map(|c| c.norm()).collect()
        })
        .collect();
    let center = (window_length as f64 - 1.0) / 2.0;
    Ok(Spectrogram {
        times: (0..frames)
            .map(|j| ts.t0 + (j * hop) as f64 / ts.fs + center / ts.fs)
            .collect(),
        frequencies: (0..nbins).map(|k| k as f64 * ts.fs / nfft as f64).collect(),
        magnitudes,
        window_length,
        hop,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Envelope {
    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            1.0
        }
    }
}

/// Analytic signal by zeroing negative frequencies and doubling positive ones.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if n == 0 {
        return buf;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n.div_ceil(2);
    for c in buf.iter_mut().take(half).skip(1) {
        *c *= 2.0;
    }
    let start_zero = if n.is_multiple_of(2) { n / 2 + 1 } else { half };
    for c in buf.iter_mut().skip(start_zero) {
        *c = Complex64::new(0.0, 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Default smoothing width `fs / f_max` samples.
pub fn default_smoothing(fs: f64, f_max: f64) -> usize {
    (fs / f_max).round().max(1.0) as usize
}

/// Analytic-signal magnitude, optionally smoothed by a centered moving average
/// of `smoothing` samples (`0` or `1` disables it).
pub fn envelope(ts: &TimeSeries, smoothing: usize) -> Envelope {
    let mut values: Vec<f64> = analytic_signal(&ts.samples).iter().map(|c| c.norm()).collect();
    if smoothing > 1 {
        values = moving_average(&values, smoothing);
    }
    Envelope {
        times: ts.times(),
        values,
    }
}

fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + x[i];
    }
    let left = (w - 1) / 2;
    let right = w - 1 - left;
    (0..n)
        .map(|i| {
            let a = i.saturating_sub(left);
            let b = (i + right + 1).min(n);
            ((prefix[b] - prefix[a]) / (b - a) as f64).max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub time: f64,
    pub amplitude: f64,
    pub prominence: f64,
}

pub type PeakList = Vec<Peak>;

/// Default peak-picking thresholds.
pub const DEFAULT_MIN_PROMINENCE: f64 = 0.1;
pub const DEFAULT_MIN_SEPARATION: f64 = 0.05;

/// Local maxima of the envelope whose prominence is at least
/// `min_prominence` times the envelope maximum, thinned so that no two kept
/// peaks are closer than `min_separation` seconds (the higher one wins).
pub fn find_peaks(
    env: &Envelope,
    min_prominence: f64,
    min_separation: f64,
) -> Result<PeakList, TfrError> {
    if !(min_prominence > 0.0 && min_prominence <= 1.0) {
        return Err(TfrError::BadParameter(format!(
            "min_prominence must be in (0, 1], got {min_prominence}"
        )));
    }
    let v = &env.values;
    let gmax = v.iter().copied().fold(0.0, f64::max);
    if gmax <= 0.0 {
        return Ok(Vec::new());
    }
    let mut candidates = Vec::new();
    for i in local_maxima(v) {
        let p = prominence(v, i);
        if p >= min_prominence * gmax && p > 0.0 {
            candidates.push(Peak {
                index: i,
                time: env.times[i],
                amplitude: v[i],
                prominence: p,
            });
        }
    }
    // Separation: keep higher peaks first.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .amplitude
            .total_cmp(&candidates[a].amplitude)
            .then(a.cmp(&b))
    });
    let mut keep = vec![true; candidates.len()];
    for (oi, &a) in order.iter().enumerate() {
        if !keep[a] {
            continue;
        }
        for &b in &order[oi + 1..] {
            if keep[b] && (candidates[a].time - candidates[b].time).abs() < min_separation {
                keep[b] = false;
            }
        }
    }
    Ok(candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect())
}

/// Interior local maxima; a flat top is reported at its middle sample.
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    let n = v.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Topographic prominence of the peak at `i`.
fn prominence(v: &[f64], i: usize) -> f64 {
    let h = v[i];
    let mut left_min = h;
    for j in (0..i).rev() {
        if v[j] > h {
            break;
        }
        left_min = left_min.min(v[j]);
    }
    let mut right_min = h;
    for &x in &v[i + 1..] {
        if x > h {
            break;
        }
        right_min = right_min.min(x);
    }
    h - left_min.max(right_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    pub time: f64,
    pub frequency: f64,
    pub magnitude: f64,
}

pub type RidgeCurve = Vec<RidgePoint>;

/// Fraction of the in-band maximum below which frames are dropped from a ridge.
pub const RIDGE_FLOOR: f64 = 0.05;

/// Per-frame in-band argmax, refined by a parabola through the three
/// neighbouring bins.
pub fn extract_ridge(sp: &Spectrogram, band: [f64; 2]) -> Result<RidgeCurve, TfrError> {
    let bins: Vec<usize> = (0..sp.frequencies.len())
        .filter(|&k| sp.frequencies[k] >= band[0] && sp.frequencies[k] <= band[1])
        .collect();
    if bins.is_empty() {
        return Err(TfrError::EmptyBand(band[0], band[1]));
    }
    let (k0, k1) = (bins[0], bins[bins.len() - 1]);
    let gmax = sp
        .magnitudes
        .iter()
        .flat_map(|row| row[k0..=k1].iter().copied())
        .fold(0.0, f64::max);
    if gmax <= 0.0 {
        return Ok(Vec::new());
    }
    let df = sp.bin_width();
    let mut out = Vec::new();
    for (t, row) in sp.times.iter().zip(&sp.magnitudes) {
        let mut best = k0;
        for k in k0..=k1 {
            if row[k] > row[best] {
                best = k;
            }
        }
        let m = row[best];
        if m < RIDGE_FLOOR * gmax {
            continue;
        }
        let mut f = sp.frequencies[best];
        let mut mag = m;
        if best > 0 && best + 1 < row.len() {
            let (a, b, c) = (row[best - 1], m, row[best + 1]);
            let denom = a - 2.0 * b + c;
            if denom < 0.0 {
                let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
                f += delta * df;
                mag = b - 0.25 * (a - c) * delta;
            }
        }
        out.push(RidgePoint {
            time: *t,
            frequency: f,
            magnitude: mag,
        });
    }
    Ok(out)
}

pub fn write_ridge_csv<W: Write>(ridge: &[RidgePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t_s,f_hz,mag")?;
    for p in ridge {
        writeln!(out, "{:.6},{:.6},{:.9e}", p.time, p.frequency, p.magnitude)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, fs: f64, secs: f64, amp: f64) -> TimeSeries {
        let n = (fs * secs) as usize;
        TimeSeries::new(
            fs,
            0.0,
            (0..n).map(|i| amp * (2.0 * PI * f * i as f64 / fs).cos()).collect(),
        )
    }

    fn gaussian_bumps(centers: &[f64], fs: f64, secs: f64) -> Envelope {
        let n = (fs * secs) as usize;
        let times: Vec<f64> = (0..n).map(|i| i as f64 / fs).collect();
        let values = times
            .iter()
            .map(|t| {
                centers
                    .iter()
                    .map(|c| (-((t - c) / 0.1).powi(2)).exp())
                    .sum()
            })
            .collect();
        Envelope { times, values }
    }

    #[test]
    fn tone_spectrogram_peak_bin() {
        let ts = tone(50.0, 500.0, 2.0, 1.0);
        let sp = stft(&ts, 100, 50).unwrap();
        assert_eq!(sp.bin_width(), 5.0);
        for row in &sp.magnitudes {
            let k = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(sp.frequencies[k], 50.0);
        }
        // frame centers
        assert!((sp.times[0] - 99.0 / 2.0 / 500.0).abs() < 1e-12);
    }

    #[test]
    fn zero_signal_spectrogram() {
        let ts = TimeSeries::new(100.0, 0.0, vec![0.0; 256]);
        let sp = stft(&ts, 32, 16).unwrap();
        assert!(sp.magnitudes.iter().flatten().all(|&m| m == 0.0));
        assert!(extract_ridge(&sp, [0.0, 50.0]).unwrap().is_empty());
    }

    #[test]
    fn window_too_long() {
        let ts = TimeSeries::new(100.0, 0.0, vec![0.0; 10]);
        assert!(matches!(stft(&ts, 32, 16), Err(TfrError::WindowTooLong { .. })));
    }

    #[test]
    fn tone_envelope() {
        let ts = tone(40.0, 1000.0, 2.0, 3.0);
        let env = envelope(&ts, 0);
        for &v in &env.values[100..1900] {
            assert!((v - 3.0).abs() < 0.03, "{v}");
        }
        let zero = envelope(&TimeSeries::new(100.0, 0.0, vec![0.0; 64]), 4);
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_gaussian_peaks() {
        let env = gaussian_bumps(&[1.0, 3.0], 100.0, 4.0);
        let peaks = find_peaks(&env, 0.1, 0.05).unwrap();
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].time - 1.0).abs() <= 0.01);
        assert!((peaks[1].time - 3.0).abs() <= 0.01);
    }

    #[test]
    fn ripple_below_prominence() {
        let mut env = gaussian_bumps(&[2.0], 100.0, 4.0);
        for (i, v) in env.values.iter_mut().enumerate() {
            *v += 0.01 * (i as f64 * 0.7).sin().abs();
        }
        let peaks = find_peaks(&env, 0.1, 0.05).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].time - 2.0).abs() < 0.02);
        assert!(find_peaks(&env, 0.0, 0.05).is_err());
        assert!(find_peaks(&env, 1.5, 0.05).is_err());
    }

    #[test]
    fn separation_keeps_higher_peak() {
        let mut env = gaussian_bumps(&[], 100.0, 3.0);
        // main peak at 1.00 s, smaller one at 1.03 s
        env.values[99..105].copy_from_slice(&[0.5, 1.0, 0.5, 0.2, 0.6, 0.0]);
        let close = find_peaks(&env, 0.1, 0.05).unwrap();
        assert_eq!(close.len(), 1);
        let loose = find_peaks(&env, 0.1, 0.01).unwrap();
        assert_eq!(loose.len(), 2);
    }

    #[test]
    fn ridge_of_tone() {
        let ts = tone(37.0, 500.0, 2.0, 1.0);
        let sp = stft(&ts, 100, 50).unwrap();
        let ridge = extract_ridge(&sp, [10.0, 100.0]).unwrap();
        assert_eq!(ridge.len(), sp.times.len());
        for p in ridge {
            assert!((p.frequency - 37.0).abs() <= 2.5);
        }
        assert!(matches!(
            extract_ridge(&sp, [300.0, 400.0]),
            Err(TfrError::EmptyBand(..))
        ));
    }
}
