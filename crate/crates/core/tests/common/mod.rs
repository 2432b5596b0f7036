#![allow(dead_code)]

use ductmode::env::Waveguide;
use ductmode::synth::{ModalField, Scenario, SourceWavelet, SynthOptions, TimeSeries};
use ductmode::tfr::{self, Peak};

pub const SOURCE_DEPTH: f64 = 10.0;
pub const RECEIVER_DEPTH: f64 = 52.0;
pub const BAND: [f64; 2] = [10.0, 100.0];
pub const FS: f64 = 500.0;

pub fn source() -> SourceWavelet {
    SourceWavelet::ricker(30.0)
}

pub fn field(wg: &Waveguide) -> ModalField {
    ModalField::compute(wg, SOURCE_DEPTH, RECEIVER_DEPTH, BAND, &SynthOptions::default()).unwrap()
}

/// Scenario whose window holds every relevant arrival of `field` at `range`.
pub fn scenario(wg: &Waveguide, field: &ModalField, range: f64) -> Scenario {
    let (vmin, vmax) = field.relevant_speed_bounds(range, 1e-3).unwrap();
    let cmax = wg.speed_bounds().1;
    let late = range / vmin - 0.95 * range / cmax;
    let spread = (range / vmin - range / vmax) / 0.9;
    Scenario {
        source_depth: SOURCE_DEPTH,
        receiver_depth: RECEIVER_DEPTH,
        range,
        sample_rate: FS,
        duration: (late.max(spread) + 1.0).ceil(),
    }
}

pub fn received(wg: &Waveguide, field: &ModalField, range: f64) -> TimeSeries {
    let sc = scenario(wg, field, range);
    field.synthesize(wg, &sc, &source(), &SynthOptions::default()).unwrap()
}

pub fn envelope_peaks(ts: &TimeSeries) -> Vec<Peak> {
    let env = tfr::envelope(ts, tfr::default_smoothing(FS, BAND[1]));
    tfr::find_peaks(&env, tfr::DEFAULT_MIN_PROMINENCE, tfr::DEFAULT_MIN_SEPARATION).unwrap()
}

pub fn spread(ts: &TimeSeries) -> f64 {
    let p = envelope_peaks(ts);
    p.last().unwrap().time - p[0].time
}
