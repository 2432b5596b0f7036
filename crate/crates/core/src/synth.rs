//! Broadband received-waveform synthesis by modal summation.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Waveguide;
use crate::modes::dispersion::{frequency_grid, table_from_tracked, tracked_modes, TrackedMode};
use crate::modes::{default_dz, DispersionTable, ModeError, ModeSet};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("range must be > 0")]
    ZeroRange,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("band [{0}, {1}] Hz is empty")]
    EmptyBand(f64, f64),
    #[error("band edge {f_max} Hz violates Nyquist for fs = {fs} Hz")]
    Nyquist { f_max: f64, fs: f64 },
    #[error("window of {duration} s too short: predicted arrivals need {needed:.3} s")]
    WindowTooShort { duration: f64, needed: f64 },
    #[error(transparent)]
    Modes(#[from] ModeError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletKind {
    Ricker,
    GaussianPulse,
}

/// Zero-phase source spectrum `S(f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceWavelet {
    pub kind: WaveletKind,
    pub center_frequency: f64,
    /// Gaussian standard deviation in Hz (GAUSSIAN_PULSE only).
    #[serde(default)]
    pub bandwidth: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl SourceWavelet {
    pub fn ricker(center_frequency: f64) -> Self {
        Self {
            kind: WaveletKind::Ricker,
            center_frequency,
            bandwidth: 0.0,
            amplitude: 1.0,
        }
    }

    pub fn gaussian(center_frequency: f64, bandwidth: f64) -> Self {
        Self {
            kind: WaveletKind::GaussianPulse,
            center_frequency,
            bandwidth,
            amplitude: 1.0,
        }
    }

    pub fn scaled(mut self, a: f64) -> Self {
        self.amplitude *= a;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.center_frequency > 0.0) {
            return Err(SynthError::InvalidSource("center_frequency must be > 0".into()));
        }
        if self.kind == WaveletKind::GaussianPulse && !(self.bandwidth > 0.0) {
            return Err(SynthError::InvalidSource("bandwidth must be > 0".into()));
        }
        if !self.amplitude.is_finite() {
            return Err(SynthError::InvalidSource("amplitude must be finite".into()));
        }
        Ok(())
    }

    /// Spectrum magnitude at `f` (Hz). Ricker peaks at the center frequency with
    /// unit value; the Gaussian pulse is a unit-peak Gaussian around it.
    pub fn spectrum(&self, f: f64) -> f64 {
        let f = f.abs();
        let shape = match self.kind {
            WaveletKind::Ricker => {
                let x = (f / self.center_frequency).powi(2);
                x * (1.0 - x).exp()
            }
            WaveletKind::GaussianPulse => {
                let x = (f - self.center_frequency) / self.bandwidth;
                (-0.5 * x * x).exp()
            }
        };
        self.amplitude * shape
    }

    /// Rough time-domain duration used for window sizing.
    pub fn duration(&self) -> f64 {
        match self.kind {
            WaveletKind::Ricker => 2.0 / self.center_frequency,
            WaveletKind::GaussianPulse => 2.0 / self.bandwidth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub source_depth: f64,
    pub receiver_depth: f64,
    pub range: f64,
    pub sample_rate: f64,
    pub duration: f64,
}

impl Scenario {
    pub fn validate(&self, wg: &Waveguide) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidScenario(m));
        for (name, z) in [("source", self.source_depth), ("receiver", self.receiver_depth)] {
            if !(z > 0.0 && z < wg.water_depth) {
                return bad(format!("{name} depth {z} m outside (0, {})", wg.water_depth));
            }
        }
        if self.range == 0.0 {
            return Err(SynthError::ZeroRange);
        }
        if !(self.range > 0.0) {
            return bad(format!("range must be > 0, got {}", self.range));
        }
        if !(self.sample_rate > 0.0 && self.duration > 0.0) {
            return bad("sample_rate and duration must be > 0".into());
        }
        Ok(())
    }

    /// Window start: 0.95 of the travel time at the fastest water speed.
    pub fn window_start(&self, wg: &Waveguide) -> f64 {
        let (_, cmax) = wg.speed_bounds();
        0.95 * self.range / cmax
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }
}

/// Uniformly sampled real signal with an absolute start time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub fs: f64,
    pub t0: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(fs: f64, t0: f64, samples: Vec<f64>) -> Self {
        Self { fs, t0, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fs
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.fs
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Samples with times in `[t_a, t_b]`.
    pub fn slice_time(&self, t_a: f64, t_b: f64) -> TimeSeries {
        let i0 = ((t_a - self.t0) * self.fs).ceil().max(0.0) as usize;
        let i1 = (((t_b - self.t0) * self.fs).floor() as isize + 1).clamp(0, self.len() as isize) as usize;
        let i0 = i0.min(i1);
        TimeSeries::new(self.fs, self.time(i0), self.samples[i0..i1].to_vec())
    }

    pub fn scaled(&self, a: f64) -> TimeSeries {
        TimeSeries::new(self.fs, self.t0, self.samples.iter().map(|x| a * x).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_s,amplitude")?;
        for (i, x) in self.samples.iter().enumerate() {
            writeln!(out, "{:.6},{:.9e}", self.time(i), x)?;
        }
        Ok(())
    }

    /// Mono 32-bit float WAV. The sample rate is rounded to whole hertz.
    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<(), SynthError> {
        let path = path.as_ref();
        let io = |e: hound::Error| SynthError::Io {
            path: path.display().to_string(),
            source: match e {
                hound::Error::IoError(e) => e,
                other => std::io::Error::other(other.to_string()),
            },
        };
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.fs.round() as u32,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(path, spec).map_err(io)?;
        for &x in &self.samples {
            w.write_sample(x as f32).map_err(io)?;
        }
        w.finalize().map_err(io)
    }

    pub fn read_wav(path: impl AsRef<Path>, t0: f64) -> Result<TimeSeries, SynthError> {
        let path = path.as_ref();
        let io = |e: hound::Error| SynthError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        };
        let mut r = hound::WavReader::open(path).map_err(io)?;
        let spec = r.spec();
        let samples: Vec<f64> = match spec.sample_format {
            hound::SampleFormat::Float => r
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<Result<_, _>>()
                .map_err(io)?,
            hound::SampleFormat::Int => {
                let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
                r.samples::<i32>()
                    .map(|s| s.map(|v| v as f64 / scale))
                    .collect::<Result<_, _>>()
                    .map_err(io)?
            }
        };
        Ok(TimeSeries::new(spec.sample_rate as f64, t0, samples))
    }
}

/// Sidecar written next to each WAV file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WavSidecar {
    pub t0: f64,
    pub fs: f64,
    pub scenario: Option<Scenario>,
    pub environment_hash: Option<String>,
    pub config_hash: Option<String>,
}

impl WavSidecar {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), SynthError> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("sidecar serializes");
        fs::write(path, json + "\n").map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Phase and amplitude factor shared by every modal term:
/// `e^{iπ/4} / (ρ(z_s) √(8π r))`.
fn common_factor(wg: &Waveguide, range: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI / 4.0) / (wg.water_density * (8.0 * PI * range).sqrt())
}

fn modal_term(psi_s: f64, psi_r: f64, k: f64, alpha: f64, range: f64) -> Complex64 {
    let amp = psi_s * psi_r * (-alpha * range).exp() / k.sqrt();
    Complex64::from_polar(amp, k * range)
}

/// Complex pressure `P(ω, r, z_r)` for a unit source at `f`, summed over the
/// modes of `ms` (solved at `f` for `wg`).
pub fn transfer_function(
    wg: &Waveguide,
    sc: &Scenario,
    f: f64,
    ms: &ModeSet,
) -> Result<Complex64, SynthError> {
    if sc.range == 0.0 {
        return Err(SynthError::ZeroRange);
    }
    debug_assert!((ms.frequency - f).abs() < 1e-9 * f.max(1.0));
    let mut sum = Complex64::new(0.0, 0.0);
    for m in &ms.modes {
        let ps = ms.eigenfunction_at(m, sc.source_depth);
        let pr = ms.eigenfunction_at(m, sc.receiver_depth);
        sum += modal_term(ps, pr, m.wavenumber, m.attenuation, sc.range);
    }
    Ok(sum * common_factor(wg, sc.range))
}

/// Numerical knobs for [`synthesize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub max_modes: usize,
    /// Frequency step of the modal solve; wavenumbers are interpolated
    /// between solves with cubic Hermite polynomials using `dk/dω = 1/v_g`.
    pub mode_df: f64,
    /// Raised-cosine taper width applied inside each band edge (Hz).
    pub edge_taper: f64,
    /// Terms weaker than this fraction of the strongest one are ignored when
    /// predicting the arrival spread.
    pub relevance: f64,
    pub dz: Option<f64>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            max_modes: 80,
            mode_df: 1.0,
            edge_taper: 2.0,
            relevance: 1e-3,
            dz: None,
        }
    }
}

/// Modal quantities for one source/receiver depth pair, sampled on a
/// frequency grid covering a band. Range-independent, so one field serves
/// any number of ranges.
#[derive(Debug, Clone)]
pub struct ModalField {
    band: [f64; 2],
    source_depth: f64,
    receiver_depth: f64,
    freqs: Vec<f64>,
    modes: Vec<Vec<TrackedMode>>,
}

impl ModalField {
    pub fn compute(
        wg: &Waveguide,
        source_depth: f64,
        receiver_depth: f64,
        band: [f64; 2],
        opts: &SynthOptions,
    ) -> Result<Self, SynthError> {
        let [f_lo, f_hi] = band;
        if !(f_lo > 0.0 && f_hi > f_lo) {
            return Err(SynthError::EmptyBand(f_lo, f_hi));
        }
        for (name, z) in [("source", source_depth), ("receiver", receiver_depth)] {
            if !(z > 0.0 && z < wg.water_depth) {
                return Err(SynthError::InvalidScenario(format!(
                    "{name} depth {z} m outside (0, {})",
                    wg.water_depth
                )));
            }
        }
        if !(opts.mode_df > 0.0) {
            return Err(SynthError::InvalidScenario("mode_df must be > 0".into()));
        }
        let steps = ((f_hi - f_lo) / opts.mode_df).ceil().max(1.0);
        let solve_df = (f_hi - f_lo) / steps;
        let freqs = frequency_grid(f_lo, f_hi + 0.5 * solve_df, solve_df)?;
        let dz = opts.dz.unwrap_or_else(|| default_dz(wg, f_hi));
        let modes = tracked_modes(wg, &freqs, opts.max_modes, dz, &[source_depth, receiver_depth]);
        Ok(Self {
            band,
            source_depth,
            receiver_depth,
            freqs,
            modes,
        })
    }

    pub fn band(&self) -> [f64; 2] {
        self.band
    }

    /// Copy keeping only modes whose lower turning depth is at most
    /// `min_depth_on_path` (frequency by frequency).
    pub fn blocked(&self, min_depth_on_path: f64) -> Result<Self, SynthError> {
        if !(min_depth_on_path > 0.0) {
            return Err(ModeError::BadCutoffDepth(min_depth_on_path).into());
        }
        let mut out = self.clone();
        for ms in out.modes.iter_mut() {
            ms.retain(|m| m.turning_depth <= min_depth_on_path);
        }
        Ok(out)
    }

    /// Copy keeping only the tracked modes listed in `labels`.
    pub fn restricted_to(&self, labels: &[usize]) -> Self {
        let mut out = self.clone();
        for ms in out.modes.iter_mut() {
            ms.retain(|m| labels.contains(&m.label));
        }
        out
    }

    /// Tracked mode labels present anywhere in the band.
    pub fn mode_labels(&self) -> Vec<usize> {
        let mut l: Vec<usize> = self.modes.iter().flatten().map(|m| m.label).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// Dispersion curves on the solve grid, labelled consistently with the
    /// synthesized terms.
    pub fn dispersion_table(&self) -> DispersionTable {
        table_from_tracked(&self.freqs, &self.modes)
    }

    /// Terms `(ψ_s, ψ_r, k, α)` at `f` by interpolation between the
    /// bracketing solve frequencies.
    fn terms_at(&self, f: f64) -> Vec<(f64, f64, f64, f64)> {
        let fr = &self.freqs;
        if fr.len() == 1 {
            return self.modes[0]
                .iter()
                .map(|m| (m.probes[0], m.probes[1], m.wavenumber, m.attenuation))
                .collect();
        }
        let i = fr.partition_point(|&x| x <= f).clamp(1, fr.len() - 1) - 1;
        let h = fr[i + 1] - fr[i];
        let t = (f - fr[i]) / h;
        let hw = 2.0 * PI * h;
        // Cubic Hermite basis.
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let mut out = Vec::new();
        for a in &self.modes[i] {
            let Some(b) = self.modes[i + 1].iter().find(|b| b.label == a.label) else {
                continue;
            };
            let k = h00 * a.wavenumber
                + h10 * hw / a.group_velocity
                + h01 * b.wavenumber
                + h11 * hw / b.group_velocity;
            let lerp = |x: f64, y: f64| x + t * (y - x);
            out.push((
                lerp(a.probes[0], b.probes[0]),
                lerp(a.probes[1], b.probes[1]),
                k,
                lerp(a.attenuation, b.attenuation),
            ));
        }
        out
    }

    /// Share of the received energy carried by each mode at `range`,
    /// ignoring cross terms: `sum_f |S(f) psi_s psi_r|^2 e^{-2 alpha r} / k`
    /// over the solve grid, normalised to sum to one.
    pub fn mode_energy_fractions(&self, range: f64, src: &SourceWavelet) -> Vec<(usize, f64)> {
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for (f, ms) in self.freqs.iter().zip(&self.modes) {
            let s2 = src.spectrum(*f).powi(2);
            for m in ms {
                let e = s2 * (m.probes[0] * m.probes[1]).powi(2) * (-2.0 * m.attenuation * range).exp()
                    / m.wavenumber;
                match acc.iter_mut().find(|(l, _)| *l == m.label) {
                    Some(slot) => slot.1 += e,
                    None => acc.push((m.label, e)),
                }
            }
        }
        acc.sort_by_key(|x| x.0);
        let total: f64 = acc.iter().map(|x| x.1).sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|x| x.1 /= total);
        }
        acc
    }

    /// Group-velocity extremes over modes whose excitation is at least
    /// `relevance` of the strongest at range `r`.
    pub fn relevant_speed_bounds(&self, range: f64, relevance: f64) -> Option<(f64, f64)> {
        let weight = |m: &TrackedMode| {
            (m.probes[0] * m.probes[1]).abs() * (-m.attenuation * range).exp()
                / m.wavenumber.sqrt()
        };
        let strongest = self.modes.iter().flatten().map(weight).fold(0.0, f64::max);
        if strongest == 0.0 {
            return None;
        }
        let (mut vmin, mut vmax) = (f64::INFINITY, 0.0f64);
        for m in self.modes.iter().flatten() {
            if weight(m) >= relevance * strongest {
                vmin = vmin.min(m.group_velocity);
                vmax = vmax.max(m.group_velocity);
            }
        }
        Some((vmin, vmax))
    }

    /// Received time series for `sc` (whose depths must match the field).
    pub fn synthesize(
        &self,
        wg: &Waveguide,
        sc: &Scenario,
        src: &SourceWavelet,
        opts: &SynthOptions,
    ) -> Result<TimeSeries, SynthError> {
        sc.validate(wg)?;
        src.validate()?;
        if sc.source_depth != self.source_depth || sc.receiver_depth != self.receiver_depth {
            return Err(SynthError::InvalidScenario(
                "scenario depths differ from the modal field".into(),
            ));
        }
        let [f_lo, f_hi] = self.band;
        if f_hi >= sc.sample_rate / 2.0 {
            return Err(SynthError::Nyquist {
                f_max: f_hi,
                fs: sc.sample_rate,
            });
        }
        let n = sc.sample_count();
        let df = sc.sample_rate / n as f64;
        let t0 = sc.window_start(wg);
        self.check_window(sc, t0, src, opts)?;

        let factor = common_factor(wg, sc.range);
        let k_lo = (f_lo / df).ceil() as usize;
        let k_hi = ((f_hi / df).floor() as usize).min(n / 2);
        let bins: Vec<(usize, Complex64)> = (k_lo..=k_hi)
            .into_par_iter()
            .map(|k| {
                let f = k as f64 * df;
                let s = src.spectrum(f) * edge_taper(f, f_lo, f_hi, opts.edge_taper);
                if s == 0.0 {
                    return (k, Complex64::new(0.0, 0.0));
                }
                let mut p = Complex64::new(0.0, 0.0);
                for (ps, pr, km, am) in self.terms_at(f) {
                    p += modal_term(ps, pr, km, am, sc.range);
                }
                // e^{+iωt} convention for the inverse transform; shift to the window start.
                let u = (p * factor).conj() * s * Complex64::from_polar(1.0, 2.0 * PI * f * t0);
                (k, u)
            })
            .collect();

        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for (k, u) in bins {
            let x = u * sc.sample_rate;
            spec[k] = x;
            if k != 0 && 2 * k != n {
                spec[n - k] = x.conj();
            }
        }
        let samples = inverse_real(&mut spec);
        Ok(TimeSeries::new(sc.sample_rate, t0, samples))
    }

    /// Reject windows that would wrap relevant arrivals around.
    fn check_window(
        &self,
        sc: &Scenario,
        t0: f64,
        src: &SourceWavelet,
        opts: &SynthOptions,
    ) -> Result<(), SynthError> {
        let Some((vmin, vmax)) = self.relevant_speed_bounds(sc.range, opts.relevance) else {
            return Ok(());
        };
        let spread = sc.range / vmin - sc.range / vmax;
        let last = sc.range / vmin - t0 + src.duration();
        if spread > 0.9 * sc.duration || last > sc.duration {
            return Err(SynthError::WindowTooShort {
                duration: sc.duration,
                needed: last.max(spread / 0.9),
            });
        }
        Ok(())
    }
}

/// Time series received at `sc.receiver_depth` for source `src`, band-limited
/// to `band`. The window starts at [`Scenario::window_start`].
pub fn synthesize(
    wg: &Waveguide,
    sc: &Scenario,
    src: &SourceWavelet,
    band: [f64; 2],
) -> Result<TimeSeries, SynthError> {
    synthesize_with(wg, sc, src, band, &SynthOptions::default())
}

pub fn synthesize_with(
    wg: &Waveguide,
    sc: &Scenario,
    src: &SourceWavelet,
    band: [f64; 2],
    opts: &SynthOptions,
) -> Result<TimeSeries, SynthError> {
    sc.validate(wg)?;
    src.validate()?;
    if !(band[0] > 0.0 && band[1] > band[0]) {
        return Err(SynthError::EmptyBand(band[0], band[1]));
    }
    if band[1] >= sc.sample_rate / 2.0 {
        return Err(SynthError::Nyquist {
            f_max: band[1],
            fs: sc.sample_rate,
        });
    }
    ModalField::compute(wg, sc.source_depth, sc.receiver_depth, band, opts)?
        .synthesize(wg, sc, src, opts)
}

fn edge_taper(f: f64, lo: f64, hi: f64, width: f64) -> f64 {
    if f < lo || f > hi {
        return 0.0;
    }
    if width <= 0.0 {
        return 1.0;
    }
    let w = width.min(0.5 * (hi - lo));
    let d = (f - lo).min(hi - f);
    if d >= w {
        1.0
    } else {
        0.5 - 0.5 * (PI * d / w).cos()
    }
}

/// Inverse DFT (`1/N` scaled) of a Hermitian spectrum; returns the real part.
fn inverse_real(spec: &mut [Complex64]) -> Vec<f64> {
    let n = spec.len();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(spec);
    spec.iter().map(|c| c.re / n as f64).collect()
}

/// Energy of the one-sided spectrum of `ts` computed through the DFT
/// (Parseval bookkeeping).
pub fn spectral_energy(ts: &TimeSeries) -> f64 {
    let n = ts.len();
    let mut buf: Vec<Complex64> = ts.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64
}
