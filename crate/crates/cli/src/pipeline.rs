//! Analysis steps shared by the subcommands and the end-to-end demo.

use ductmode::env::{BathymetryTransect, Waveguide};
use ductmode::modes::DispersionTable;
use ductmode::ranging::{
    self, Anchors, EquivalentSpeeds, PeakPolicy, RangeEstimate,
};
use ductmode::synth::{ModalField, SourceWavelet, SynthOptions, TimeSeries};
use ductmode::tfr;
use ductmode::warp::{self, ModeBand, Separation};

use crate::config::RunConfig;
use crate::CliError;

/// Relevance threshold used to size synthesis windows.
pub const WINDOW_RELEVANCE: f64 = 1e-3;

pub fn stage<E: std::fmt::Display>(name: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Stage {
        stage: name,
        message: e.to_string(),
    }
}

pub fn modal_field(cfg: &RunConfig, wg: &Waveguide) -> Result<ModalField, CliError> {
    let s = &cfg.scenario;
    ModalField::compute(wg, s.source_depth, s.receiver_depth, s.band, &SynthOptions::default())
        .map_err(stage("modal field"))
}

/// Window long enough for every relevant arrival of `field` at `range`,
/// starting at the synthesis window origin, plus one second.
pub fn window_duration(wg: &Waveguide, field: &ModalField, range: f64) -> Result<f64, CliError> {
    let (vmin, vmax) = field
        .relevant_speed_bounds(range, WINDOW_RELEVANCE)
        .ok_or_else(|| CliError::Stage {
            stage: "synthesis",
            message: "no propagating modes in band".into(),
        })?;
    let cmax = wg.speed_bounds().1;
    let late = range / vmin - 0.95 * range / cmax;
    let spread = (range / vmin - range / vmax) / 0.9;
    Ok((late.max(spread) + 1.0).ceil())
}

pub fn synthesize(
    cfg: &RunConfig,
    wg: &Waveguide,
    field: &ModalField,
    range: f64,
    duration: Option<f64>,
) -> Result<TimeSeries, CliError> {
    let duration = match duration {
        Some(d) => d,
        None => window_duration(wg, field, range)?,
    };
    let sc = cfg.scenario_at(range, duration);
    field
        .synthesize(wg, &sc, &cfg.scenario.wavelet, &SynthOptions::default())
        .map_err(stage("synthesis"))
}

/// Depth profile dipping linearly to the seamount summit and back.
pub fn seamount_transect(cfg: &RunConfig, range: f64) -> Result<BathymetryTransect, CliError> {
    let d = cfg.environment.water_depth;
    BathymetryTransect::new(vec![
        (0.0, d),
        (cfg.demo.seamount_position * range, cfg.demo.seamount_depth),
        (range, d),
    ])
    .map_err(|e| CliError::Config(e.to_string()))
}

/// The field restricted to modes that clear the shallowest point of the path.
pub fn blocked_field(
    field: &ModalField,
    wg: &Waveguide,
    transect: &BathymetryTransect,
    range: f64,
) -> Result<(ModalField, f64), CliError> {
    let min_depth = ductmode::env::min_depth_over(transect, 0.0, range).map_err(stage("cutoff"))?;
    if min_depth >= wg.water_depth {
        return Ok((field.clone(), min_depth));
    }
    Ok((field.blocked(min_depth).map_err(stage("cutoff"))?, min_depth))
}

pub fn smoothing(cfg: &RunConfig) -> usize {
    tfr::default_smoothing(cfg.scenario.sample_rate, cfg.scenario.band[1])
}

pub fn spectrogram(cfg: &RunConfig, ts: &TimeSeries) -> Result<tfr::Spectrogram, CliError> {
    let window = match cfg.spectrogram.window {
        0 => tfr::default_window(ts.fs),
        w => w,
    }
    .min(ts.len());
    let hop = match cfg.spectrogram.hop {
        0 => (window / 2).max(1),
        h => h,
    };
    tfr::stft(ts, window, hop).map_err(stage("spectrogram"))
}

pub fn separate(cfg: &RunConfig, ts: &TimeSeries) -> Result<Separation, CliError> {
    warp::separate_received(ts, smoothing(cfg), cfg.separation.guard_fraction, cfg.scenario.band)
        .map_err(stage("separation"))
}

/// Model modes whose arrival curve a separated ridge follows within
/// `tolerance` Hz RMS over at least half of its points, best match first.
pub fn matched_modes(sep: &Separation, table: &DispersionTable, range: f64, tolerance: f64) -> Vec<Option<(usize, f64)>> {
    sep.modes
        .iter()
        .map(|m| {
            table
                .mode_numbers()
                .into_iter()
                .filter_map(|mode| {
                    let (rms, n) = warp::ridge_model_mismatch(&m.ridge, table, mode, range)?;
                    (2 * n >= m.ridge.len() && n > 0 && rms <= tolerance).then_some((mode, rms))
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
        })
        .collect()
}

/// Method-A speeds from the modes that carry at least the configured share
/// of the received energy at `range`.
pub fn duration_speeds(
    cfg: &RunConfig,
    field: &ModalField,
    range: f64,
    src: &SourceWavelet,
) -> Result<EquivalentSpeeds, CliError> {
    let keep: Vec<usize> = field
        .mode_energy_fractions(range, src)
        .into_iter()
        .filter(|&(_, e)| e >= cfg.ranging.min_energy_fraction)
        .map(|(m, _)| m)
        .collect();
    let table = field.restricted_to(&keep).dispersion_table();
    ranging::equivalent_speeds_duration(&table, &cfg.ranging.exclude_modes, cfg.scenario.band)
        .map_err(stage("method A speeds"))
}

pub fn method_a(cfg: &RunConfig, ts: &TimeSeries, speeds: &EquivalentSpeeds) -> Result<RangeEstimate, CliError> {
    let policy = cfg.policy();
    let env = tfr::envelope(ts, smoothing(cfg));
    let delay = ranging::dispersion_duration(&env, &policy).map_err(stage("method A delay"))?;
    Ok(ranging::estimate_range_duration(delay.delta_t, speeds)
        .map_err(stage("method A"))?
        .with_anchors(Anchors::from_policy(&policy, &delay)))
}

/// Mode-pair band as a warp-free band-pass filter.
pub fn mode_pair_filter(cfg: &RunConfig) -> Result<ModeBand, CliError> {
    let [lo, hi] = cfg.ranging.mode_pair_band;
    ModeBand::new(0.5 * (lo + hi), 0.5 * (hi - lo)).map_err(|e| CliError::Config(e.to_string()))
}

/// Method B on the raw envelope of the band-passed signal (last two peaks).
pub fn method_b(cfg: &RunConfig, ts: &TimeSeries, table: &DispersionTable) -> Result<RangeEstimate, CliError> {
    let band = mode_pair_filter(cfg)?;
    let env = tfr::envelope(&warp::bandpass(ts, &band), smoothing(cfg));
    let policy = PeakPolicy {
        min_prominence: cfg.ranging.min_prominence,
        min_separation: cfg.ranging.min_separation,
        ..PeakPolicy::mode_pair()
    };
    let delay = ranging::mode_pair_delay_envelope(&env, &policy).map_err(stage("method B delay"))?;
    Ok(ranging::estimate_range_mode_pair(delay.delta_t, table, cfg.ranging.mode_pair_band)
        .map_err(stage("method B"))?
        .with_anchors(Anchors::from_policy(&policy, &delay)))
}

/// `(arrival time, frequency)` curves `range / v_g(f)` for every mode in `table`.
pub fn arrival_curves(table: &DispersionTable, range: f64) -> Vec<Vec<(f64, f64)>> {
    table
        .curves
        .iter()
        .map(|c| {
            table
                .frequencies
                .iter()
                .zip(&c.group_velocity)
                .filter_map(|(f, v)| v.map(|v| (range / v, *f)))
                .collect()
        })
        .collect()
}
