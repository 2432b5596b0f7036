//! Refractive-mode warping and warp-domain mode separation.
//!
//! The warping map is `h(u) = t_r - u^-2`, so a component whose phase goes as
//! `2 pi beta (t_r - t)^-1/2` becomes a tone at `beta` Hz in the warped
//! domain. Resampling in both directions uses cubic (Catmull-Rom)
//! interpolation on an 8x band-limited upsampling of the source samples.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modes::DispersionTable;
use crate::synth::{SynthError, TimeSeries};
use crate::tfr::{self, Envelope, Peak, RidgeCurve, TfrError};

#[derive(Debug, Error)]
pub enum WarpError {
    #[error("invalid warp configuration: {0}")]
    InvalidConfig(String),
    #[error("signal support reaches {t_last} s, past t_r - guard = {limit} s")]
    ReferenceInsideSupport { t_last: f64, limit: f64 },
    #[error("output rate {output_fs} Hz below the warped Nyquist rate {required} Hz")]
    OutputRateTooLow { output_fs: f64, required: f64 },
    #[error("time {t} s requested at or past t_r - guard = {limit} s")]
    TimeTooLate { t: f64, limit: f64 },
    #[error("no spectral peak found in the warped signal")]
    NoPeaks,
    #[error("bands {0} and {1} overlap")]
    OverlappingBands(usize, usize),
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error(transparent)]
    Tfr(#[from] TfrError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarpConfig {
    /// Reference time on the signal's absolute axis.
    pub t_r: f64,
    /// Sample rate of the warped domain.
    pub output_fs: f64,
    /// Exclusion zone before `t_r`.
    pub guard: f64,
}

impl WarpConfig {
    pub fn validate(&self) -> Result<(), WarpError> {
        if !self.t_r.is_finite() {
            return Err(WarpError::InvalidConfig("t_r must be finite".into()));
        }
        if !(self.output_fs > 0.0 && self.output_fs.is_finite()) {
            return Err(WarpError::InvalidConfig("output_fs must be > 0".into()));
        }
        if !(self.guard > 0.0) {
            return Err(WarpError::InvalidConfig("guard must be > 0".into()));
        }
        Ok(())
    }

    /// Config with the default warped rate for `ts`.
    pub fn for_signal(ts: &TimeSeries, t_r: f64, guard: f64) -> Result<Self, WarpError> {
        let (t_first, _) = support(ts).unwrap_or((ts.t0, ts.end_time()));
        if !(t_first < t_r) {
            return Err(WarpError::InvalidConfig(format!(
                "t_r = {t_r} s not after the signal start {t_first} s"
            )));
        }
        let f_max = effective_bandwidth(ts).max(ts.fs / ts.len().max(1) as f64);
        let cfg = Self {
            t_r,
            output_fs: default_output_fs(t_r, t_first, f_max),
            guard,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Warped frequency of an original-domain frequency `f` observed at time `t`.
pub fn warped_frequency(f: f64, t: f64, t_r: f64) -> f64 {
    2.0 * f * (t_r - t).powf(1.5)
}

/// Four times the highest warped frequency: `f_max` at the earliest time.
pub fn default_output_fs(t_r: f64, t_first: f64, f_max: f64) -> f64 {
    4.0 * warped_frequency(f_max, t_first, t_r)
}

/// Frequency below which 99.9% of the signal energy lies.
pub fn effective_bandwidth(ts: &TimeSeries) -> f64 {
    let n = ts.len();
    if n < 2 {
        return 0.0;
    }
    let mut buf: Vec<Complex64> = ts.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (k, p) in power.iter().enumerate() {
        acc += p;
        if acc >= 0.999 * total {
            return k as f64 * ts.fs / n as f64;
        }
    }
    ts.fs / 2.0
}

/// Times of the first and last nonzero samples.
fn support(ts: &TimeSeries) -> Option<(f64, f64)> {
    let first = ts.samples.iter().position(|&v| v != 0.0)?;
    let last = ts.samples.iter().rposition(|&v| v != 0.0)?;
    Some((ts.time(first), ts.time(last)))
}

const UPSAMPLE: usize = 8;
const MARGIN: usize = 4;

/// Catmull-Rom interpolation over an upsampled copy of a series; zero outside.
struct Interpolator {
    t0: f64,
    fs: f64,
    data: Vec<f64>,
}

impl Interpolator {
    fn new(ts: &TimeSeries) -> Self {
        let n = ts.len();
        let pad = (n / 8).max(16);
        let m = n + 2 * pad;
        let mut spec: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
        for (i, &v) in ts.samples.iter().enumerate() {
            spec[pad + i].re = v;
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(m).process(&mut spec);
        let big = m * UPSAMPLE;
        let mut up = vec![Complex64::new(0.0, 0.0); big];
        let half = m / 2;
        up[..=half].copy_from_slice(&spec[..=half]);
        up[big - (m - half - 1)..].copy_from_slice(&spec[half + 1..]);
        if m.is_multiple_of(2) {
            // split the Nyquist bin between the two halves
            let ny = spec[half] * 0.5;
            up[half] = ny;
            up[big - half] = ny;
        }
        planner.plan_fft_inverse(big).process(&mut up);
        let scale = 1.0 / m as f64;
        Self {
            t0: ts.t0 - pad as f64 / ts.fs,
            fs: ts.fs * UPSAMPLE as f64,
            data: up.iter().map(|c| c.re * scale).collect(),
        }
    }

    fn at(&self, t: f64) -> f64 {
        let x = (t - self.t0) * self.fs;
        let i = x.floor();
        let f = x - i;
        let i = i as i64;
        let get = |j: i64| {
            if j < 0 || j as usize >= self.data.len() {
                0.0
            } else {
                self.data[j as usize]
            }
        };
        let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
        p1 + 0.5
            * f
            * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

/// Forward warp. The output grid is uniform in `u` at `cfg.output_fs` and
/// spans the image of the signal's nonzero support plus a few samples.
pub fn warp(ts: &TimeSeries, cfg: &WarpConfig) -> Result<TimeSeries, WarpError> {
    cfg.validate()?;
    let limit = cfg.t_r - cfg.guard;
    let (t_first, t_last, zero) = match support(ts) {
        Some((a, b)) => (a, b, false),
        None => (ts.t0, ts.end_time().min(limit), true),
    };
    if t_last > limit + 1e-9 / ts.fs || t_first >= limit {
        return Err(WarpError::ReferenceInsideSupport { t_last, limit });
    }
    let u_lo = (cfg.t_r - t_first).powf(-0.5);
    let u_hi = (cfg.t_r - t_last).powf(-0.5);
    let du = 1.0 / cfg.output_fs;
    let u0 = (u_lo - MARGIN as f64 * du).max(0.5 * u_lo);
    let n = ((u_hi - u0) * cfg.output_fs).floor() as usize + 1 + MARGIN;
    if zero {
        return Ok(TimeSeries::new(cfg.output_fs, u0, vec![0.0; n]));
    }
    let required = 2.0 * warped_frequency(effective_bandwidth(ts), t_first, cfg.t_r);
    if cfg.output_fs < required {
        return Err(WarpError::OutputRateTooLow {
            output_fs: cfg.output_fs,
            required,
        });
    }
    let interp = Interpolator::new(ts);
    let samples = (0..n)
        .into_par_iter()
        .map(|k| {
            let u = u0 + k as f64 * du;
            let t = cfg.t_r - u.powi(-2);
            (2.0 * u.powi(-3)).sqrt() * interp.at(t)
        })
        .collect();
    Ok(TimeSeries::new(cfg.output_fs, u0, samples))
}

/// Inverse warp onto `n` samples starting at `t0` with rate `fs`.
pub fn unwarp_onto(
    warped: &TimeSeries,
    cfg: &WarpConfig,
    t0: f64,
    fs: f64,
    n: usize,
) -> Result<TimeSeries, WarpError> {
    cfg.validate()?;
    let limit = cfg.t_r - cfg.guard;
    if n > 0 {
        let t_end = t0 + (n - 1) as f64 / fs;
        if t_end >= limit {
            return Err(WarpError::TimeTooLate { t: t_end, limit });
        }
    }
    let interp = Interpolator::new(warped);
    let samples = (0..n)
        .into_par_iter()
        .map(|k| {
            let tau = cfg.t_r - (t0 + k as f64 / fs);
            (0.5 * tau.powf(-1.5)).sqrt() * interp.at(tau.powf(-0.5))
        })
        .collect();
    Ok(TimeSeries::new(fs, t0, samples))
}

/// Inverse warp at rate `fs` over the time image of the warped grid,
/// stopping short of `t_r - guard`.
pub fn unwarp(warped: &TimeSeries, cfg: &WarpConfig, fs: f64) -> Result<TimeSeries, WarpError> {
    cfg.validate()?;
    if !(fs > 0.0) {
        return Err(WarpError::InvalidConfig("output sample rate must be > 0".into()));
    }
    if warped.t0 <= 0.0 {
        return Err(WarpError::InvalidConfig("warped axis must start above 0".into()));
    }
    let t0 = cfg.t_r - warped.t0.powi(-2);
    let t_end = (cfg.t_r - warped.end_time().powi(-2)).min(cfg.t_r - cfg.guard);
    let span = t_end - t0;
    let mut n = if span > 0.0 { (span * fs).floor() as usize + 1 } else { 0 };
    while n > 0 && t0 + (n - 1) as f64 / fs >= cfg.t_r - cfg.guard {
        n -= 1;
    }
    unwarp_onto(warped, cfg, t0, fs, n)
}

/// A pass band in the warped domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBand {
    /// Mode number hint, when known.
    pub mode: Option<usize>,
    pub center: f64,
    pub halfwidth: f64,
}

impl ModeBand {
    pub fn new(center: f64, halfwidth: f64) -> Result<Self, WarpError> {
        let b = Self {
            mode: None,
            center,
            halfwidth,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), WarpError> {
        if !(self.center > self.halfwidth && self.halfwidth > 0.0) {
            return Err(WarpError::InvalidBand(format!(
                "need center > halfwidth > 0 (got {}, {})",
                self.center, self.halfwidth
            )));
        }
        Ok(())
    }

    /// Zero-phase response: squared magnitude of a 4th-order
    /// Butterworth-type response centred on the band.
    pub fn response(&self, f: f64) -> f64 {
        let x = (f.abs() - self.center) / self.halfwidth;
        1.0 / (1.0 + x.powi(8))
    }

    pub fn overlaps(&self, other: &ModeBand) -> bool {
        (self.center - other.center).abs() < (self.halfwidth + other.halfwidth) * (1.0 - 1e-9)
    }
}

/// Apply a real, even frequency response with zero padding against wrap-around.
fn filter_with<F: Fn(f64) -> f64>(ts: &TimeSeries, response: F) -> TimeSeries {
    let n = ts.len();
    if n == 0 {
        return ts.clone();
    }
    let m = (n + 2 * (n / 4).max(16)).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, &v) in buf.iter_mut().zip(&ts.samples) {
        b.re = v;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let kk = if k <= m / 2 { k } else { m - k };
        *c *= response(kk as f64 * ts.fs / m as f64);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    TimeSeries::new(ts.fs, ts.t0, buf[..n].iter().map(|c| c.re * scale).collect())
}

/// Zero-phase band-pass of `ts` (any domain) to `band`.
pub fn bandpass(ts: &TimeSeries, band: &ModeBand) -> TimeSeries {
    filter_with(ts, |f| band.response(f))
}

/// Zero-phase filter by the summed responses of `bands`, capped at one.
pub fn bandpass_union(ts: &TimeSeries, bands: &[ModeBand]) -> TimeSeries {
    filter_with(ts, |f| bands.iter().map(|b| b.response(f)).sum::<f64>().min(1.0))
}

/// Welch-averaged amplitude spectrum: half-length Hann segments, 50% overlap,
/// 4x zero padding. Returns (frequencies, amplitudes).
pub fn welch_spectrum(ts: &TimeSeries) -> (Vec<f64>, Vec<f64>) {
    let n = ts.len();
    let seg = (n / 2).max(2).min(n.max(1));
    let hop = (seg / 2).max(1);
    let nfft = 4 * seg;
    let win: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (seg - 1).max(1) as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let nb = nfft / 2 + 1;
    let mut psd = vec![0.0; nb];
    let mut count = 0;
    let mut start = 0;
    while start + seg <= n {
        let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
        for i in 0..seg {
            buf[i].re = ts.samples[start + i] * win[i];
        }
        fft.process(&mut buf);
        for (p, c) in psd.iter_mut().zip(&buf[..nb]) {
            *p += c.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let freqs = (0..nb).map(|k| k as f64 * ts.fs / nfft as f64).collect();
    let amp = psd.iter().map(|p| (p / count.max(1) as f64).sqrt()).collect();
    (freqs, amp)
}

/// Minimum peak prominence for automatic band detection, relative to the maximum.
pub const AUTO_BAND_PROMINENCE: f64 = 0.1;

/// One band per prominent peak of the Welch spectrum of a warped signal,
/// ordered by centre frequency. Each halfwidth is half the gap to the
/// nearest neighbouring peak; a lone peak gets half its centre frequency.
pub fn auto_bands(warped: &TimeSeries) -> Result<Vec<ModeBand>, WarpError> {
    let (freqs, amp) = welch_spectrum(warped);
    let spectrum = Envelope {
        times: freqs,
        values: amp,
    };
    let peaks = tfr::find_peaks(&spectrum, AUTO_BAND_PROMINENCE, 0.0)?;
    let centers: Vec<f64> = peaks.iter().map(|p| p.time).filter(|&f| f > 0.0).collect();
    if centers.is_empty() {
        return Err(WarpError::NoPeaks);
    }
    centers
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let left = (i > 0).then(|| c - centers[i - 1]);
            let right = centers.get(i + 1).map(|&n| n - c);
            let gap = match (left, right) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => c,
            };
            ModeBand::new(c, (0.5 * gap).min(0.999 * c))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BandSelection {
    Auto,
    Explicit(Vec<ModeBand>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationOptions {
    pub bands: BandSelection,
    pub allow_overlap: bool,
    /// Spectrogram window and hop (samples) for ridge extraction; 0 picks
    /// defaults.
    pub stft_window: usize,
    pub stft_hop: usize,
    /// Original-domain band searched for ridges; `None` is 0 to Nyquist.
    pub ridge_band: Option<[f64; 2]>,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        Self {
            bands: BandSelection::Auto,
            allow_overlap: false,
            stft_window: 0,
            stft_hop: 0,
            ridge_band: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeparatedMode {
    pub band: ModeBand,
    pub signal: TimeSeries,
    pub ridge: RidgeCurve,
}

#[derive(Debug, Clone)]
pub struct Separation {
    pub config: WarpConfig,
    pub warped: TimeSeries,
    pub modes: Vec<SeparatedMode>,
}

/// Warp, band-pass each mode band, unwarp back onto the input grid and
/// extract a spectrogram ridge per mode.
pub fn separate_modes(
    ts: &TimeSeries,
    cfg: &WarpConfig,
    opts: &SeparationOptions,
) -> Result<Separation, WarpError> {
    let warped = warp(ts, cfg)?;
    let mut bands = match &opts.bands {
        BandSelection::Auto => auto_bands(&warped)?,
        BandSelection::Explicit(b) => {
            for band in b {
                band.validate()?;
            }
            b.clone()
        }
    };
    if bands.is_empty() {
        return Err(WarpError::NoPeaks);
    }
    bands.sort_by(|a, b| a.center.total_cmp(&b.center));
    if !opts.allow_overlap {
        for i in 0..bands.len() {
            for j in i + 1..bands.len() {
                if bands[i].overlaps(&bands[j]) {
                    return Err(WarpError::OverlappingBands(i, j));
                }
            }
        }
    }
    let window = if opts.stft_window > 0 {
        opts.stft_window
    } else {
        tfr::default_window(ts.fs)
    }
    .min(ts.len());
    let hop = if opts.stft_hop > 0 {
        opts.stft_hop
    } else {
        (window / 8).max(1)
    };
    let ridge_band = opts.ridge_band.unwrap_or([0.0, ts.fs / 2.0]);
    let modes = bands
        .par_iter()
        .map(|band| {
            let filtered = bandpass(&warped, band);
            let signal = unwarp_to_grid(&filtered, cfg, ts)?;
            let nfft = (4 * window).next_power_of_two();
            let sp = tfr::stft_padded(&signal, window, hop, nfft)?;
            let ridge = tfr::extract_ridge(&sp, ridge_band)?;
            Ok(SeparatedMode {
                band: *band,
                signal,
                ridge,
            })
        })
        .collect::<Result<Vec<_>, WarpError>>()?;
    Ok(Separation {
        config: *cfg,
        warped,
        modes,
    })
}

/// Unwarp onto the grid of `like`, zero from `t_r - guard` onwards.
pub fn unwarp_to_grid(
    warped: &TimeSeries,
    cfg: &WarpConfig,
    like: &TimeSeries,
) -> Result<TimeSeries, WarpError> {
    let limit = cfg.t_r - cfg.guard;
    let valid = (0..like.len()).take_while(|&i| like.time(i) < limit).count();
    let mut out = unwarp_onto(warped, cfg, like.t0, like.fs, valid)?;
    out.samples.resize(like.len(), 0.0);
    Ok(out)
}

/// Sum of the separated mode signals.
pub fn mode_sum(sep: &Separation) -> Option<TimeSeries> {
    let first = sep.modes.first()?;
    let mut acc = first.signal.clone();
    for m in &sep.modes[1..] {
        for (a, b) in acc.samples.iter_mut().zip(&m.signal.samples) {
            *a += b;
        }
    }
    Some(acc)
}

/// RMS frequency difference between a ridge and the arrival curve
/// `(range / v_g(f), f)` of `mode` in `table`. Each ridge point is compared
/// with the closest model frequency among the curve segments spanning its
/// time; points outside the curve's time span are skipped. Returns the RMS
/// and the number of matched points, or `None` when nothing matched.
pub fn ridge_model_mismatch(
    ridge: &[tfr::RidgePoint],
    table: &DispersionTable,
    mode: usize,
    range: f64,
) -> Option<(f64, usize)> {
    let curve = table.curve(mode)?;
    let pts: Vec<(f64, f64)> = table
        .frequencies
        .iter()
        .zip(&curve.group_velocity)
        .filter_map(|(f, v)| v.map(|v| (range / v, *f)))
        .collect();
    let mut sum = 0.0;
    let mut n = 0;
    for p in ridge {
        let mut best: Option<f64> = None;
        for w in pts.windows(2) {
            let ((t0, f0), (t1, f1)) = (w[0], w[1]);
            if t1 == t0 || (p.time - t0) * (p.time - t1) > 0.0 {
                continue;
            }
            let e = p.frequency - (f0 + (f1 - f0) * (p.time - t0) / (t1 - t0));
            if best.is_none_or(|b| e.abs() < b.abs()) {
                best = Some(e);
            }
        }
        if let Some(e) = best {
            sum += e * e;
            n += 1;
        }
    }
    (n > 0).then(|| ((sum / n as f64).sqrt(), n))
}

/// Reference time: last envelope peak plus a tenth of the first-to-last span.
pub fn default_reference_time(peaks: &[Peak]) -> Option<f64> {
    let (first, last) = (peaks.first()?, peaks.last()?);
    Some(last.time + 0.1 * (last.time - first.time))
}

/// Interception window: the first-to-last peak span shrunk by 10% per side.
pub fn default_interception(peaks: &[Peak]) -> Option<(f64, f64)> {
    let (a, b) = (peaks.first()?.time, peaks.last()?.time);
    if !(b > a) {
        return None;
    }
    let d = b - a;
    Some((a + 0.1 * d, b - 0.1 * d))
}

/// Separation of a received waveform with every choice defaulted: envelope
/// peaks (smoothed over `smoothing` samples) give the reference time and the
/// interception window, the guard is `guard_fraction` of the gap between the
/// window end and `t_r`, and bands are picked automatically. Ridges are
/// searched in `ridge_band`.
pub fn separate_received(
    ts: &TimeSeries,
    smoothing: usize,
    guard_fraction: f64,
    ridge_band: [f64; 2],
) -> Result<Separation, WarpError> {
    if !(guard_fraction > 0.0 && guard_fraction < 1.0) {
        return Err(WarpError::InvalidConfig("guard_fraction must be in (0, 1)".into()));
    }
    let env = tfr::envelope(ts, smoothing);
    let peaks = tfr::find_peaks(&env, tfr::DEFAULT_MIN_PROMINENCE, tfr::DEFAULT_MIN_SEPARATION)?;
    let (Some(t_r), Some((t_a, t_b))) = (default_reference_time(&peaks), default_interception(&peaks))
    else {
        return Err(WarpError::NoPeaks);
    };
    let segment = ts.slice_time(t_a, t_b);
    let cfg = WarpConfig::for_signal(&segment, t_r, guard_fraction * (t_r - t_b))?;
    let opts = SeparationOptions {
        ridge_band: Some(ridge_band),
        ..Default::default()
    };
    separate_modes(&segment, &cfg, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub band: ModeBand,
    pub wav: String,
    pub csv: String,
    pub ridge_csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationManifest {
    pub t_r: f64,
    pub guard: f64,
    pub output_fs: f64,
    pub modes: Vec<ManifestEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Write `mode_NN.{wav,csv}`, `mode_NN_ridge.csv` and `manifest.json` into `dir`.
pub fn write_separation(
    sep: &Separation,
    dir: impl AsRef<Path>,
    config_hash: Option<&str>,
) -> Result<SeparationManifest, WarpError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (i, m) in sep.modes.iter().enumerate() {
        let stem = format!("mode_{:02}", i + 1);
        let wav = format!("{stem}.wav");
        let csv = format!("{stem}.csv");
        let ridge_csv = format!("{stem}_ridge.csv");
        m.signal.write_wav(dir.join(&wav))?;
        let mut w = BufWriter::new(File::create(dir.join(&csv))?);
        m.signal.write_csv(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(&ridge_csv))?);
        tfr::write_ridge_csv(&m.ridge, &mut w)?;
        w.flush()?;
        entries.push(ManifestEntry {
            index: i + 1,
            band: m.band,
            wav,
            csv,
            ridge_csv,
        });
    }
    let manifest = SeparationManifest {
        t_r: sep.config.t_r,
        guard: sep.config.guard,
        output_fs: sep.config.output_fs,
        modes: entries,
        config_hash: config_hash.map(str::to_owned),
    };
    let mut w = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(manifest)
}
