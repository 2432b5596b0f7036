//! Run configuration: one TOML schema, every field defaulted, flags applied on top.

use std::path::{Path, PathBuf};

use ductmode::env::{self, BottomModel, DualChannelParams, SoundSpeedProfile, Waveguide};
use ductmode::ranging::PeakAnchor;
use ductmode::synth::{Scenario, SourceWavelet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Seed for randomized utilities. Nothing in the default pipelines draws from it.
    pub seed: u64,
    pub environment: EnvironmentConfig,
    pub scenario: ScenarioConfig,
    pub modes: ModesConfig,
    pub dispersion: DispersionConfig,
    pub spectrogram: SpectrogramConfig,
    pub separation: SeparationConfig,
    pub ranging: RangingConfig,
    pub demo: DemoConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    DualChannel,
    Isovelocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub profile: Profile,
    /// Measured profile (`depth_m,speed_mps`); replaces `profile` when set.
    pub ssp_csv: Option<PathBuf>,
    /// Bathymetry (`range_m,depth_m`) applied as a modal cutoff by `synth`.
    pub transect_csv: Option<PathBuf>,
    pub ducts: DualChannelParams,
    pub isovelocity_speed: f64,
    pub water_depth: f64,
    pub water_density: f64,
    pub bottom_speed: f64,
    pub bottom_density: f64,
    pub bottom_attenuation: f64,
    pub bottom_model: BottomModel,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        let wg = Waveguide::dual_channel_fixture();
        Self {
            profile: Profile::DualChannel,
            ssp_csv: None,
            transect_csv: None,
            ducts: DualChannelParams::default(),
            isovelocity_speed: 1500.0,
            water_depth: wg.water_depth,
            water_density: wg.water_density,
            bottom_speed: wg.bottom_speed,
            bottom_density: wg.bottom_density,
            bottom_attenuation: wg.bottom_attenuation,
            bottom_model: wg.bottom_model,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub source_depth: f64,
    pub receiver_depth: f64,
    pub range_km: f64,
    pub sample_rate: f64,
    pub band: [f64; 2],
    /// Window length in seconds; `None` sizes it to hold every relevant arrival.
    pub duration: Option<f64>,
    pub wavelet: SourceWavelet,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            source_depth: 10.0,
            receiver_depth: 52.0,
            range_km: 200.0,
            sample_rate: 500.0,
            band: [10.0, 100.0],
            duration: None,
            wavelet: SourceWavelet::ricker(30.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub frequencies: Vec<f64>,
    pub max_modes: usize,
    pub dz: Option<f64>,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            frequencies: vec![20.0, 70.0],
            max_modes: 30,
            dz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub df: f64,
    pub max_modes: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            f_min: 10.0,
            f_max: 100.0,
            df: 1.0,
            max_modes: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrogramConfig {
    /// Samples; 0 means 0.2 s.
    pub window: usize,
    /// Samples; 0 means half the window.
    pub hop: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationConfig {
    /// Guard before `t_r` as a fraction of the gap after the interception window.
    pub guard_fraction: f64,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self { guard_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangingConfig {
    pub start: PeakAnchor,
    pub end: PeakAnchor,
    pub min_prominence: f64,
    pub min_separation: f64,
    /// Modes left out of the method-A speeds.
    pub exclude_modes: Vec<usize>,
    /// Modes carrying less than this share of the received energy are left out too.
    pub min_energy_fraction: f64,
    pub mode_pair_band: [f64; 2],
}

impl Default for RangingConfig {
    fn default() -> Self {
        let p = ductmode::ranging::PeakPolicy::duration();
        Self {
            start: p.start,
            end: p.end,
            min_prominence: p.min_prominence,
            min_separation: p.min_separation,
            exclude_modes: vec![1],
            min_energy_fraction: 0.05,
            mode_pair_band: ductmode::ranging::MODE_PAIR_BAND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub ranges_km: Vec<f64>,
    /// Ranges whose path crosses the seamount.
    pub blocked_ranges_km: Vec<f64>,
    /// Shallowest depth of the V-shaped seamount transect.
    pub seamount_depth: f64,
    /// Position of the seamount summit as a fraction of the path length.
    pub seamount_position: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            ranges_km: vec![200.0, 300.0, 400.0, 518.0],
            blocked_ranges_km: vec![300.0, 400.0],
            seamount_depth: 450.0,
            seamount_position: 0.5,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 0,
            environment: EnvironmentConfig::default(),
            scenario: ScenarioConfig::default(),
            modes: ModesConfig::default(),
            dispersion: DispersionConfig::default(),
            spectrogram: SpectrogramConfig::default(),
            separation: SeparationConfig::default(),
            ranging: RangingConfig::default(),
            demo: DemoConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Check every field, reporting all problems at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs = Vec::new();
        let e = &self.environment;
        for p in [&e.ssp_csv, &e.transect_csv].into_iter().flatten() {
            if !p.is_file() {
                errs.push(format!("file not found: {}", p.display()));
            }
        }
        if e.ssp_csv.is_none() && e.profile == Profile::DualChannel {
            if let Err(err) = e.ducts.validate() {
                errs.push(err.to_string());
            }
        }
        if !(e.water_depth > 0.0) {
            errs.push("environment.water_depth must be > 0".into());
        }
        let s = &self.scenario;
        for (name, z) in [("source_depth", s.source_depth), ("receiver_depth", s.receiver_depth)] {
            if !(z > 0.0 && z < e.water_depth) {
                errs.push(format!("scenario.{name} must lie in (0, {})", e.water_depth));
            }
        }
        if !(s.range_km > 0.0) {
            errs.push("scenario.range_km must be > 0".into());
        }
        if !(s.band[0] > 0.0 && s.band[1] > s.band[0]) {
            errs.push("scenario.band must be increasing and positive".into());
        }
        if !(s.band[1] < s.sample_rate / 2.0) {
            errs.push("scenario.band must stay below Nyquist".into());
        }
        if let Err(err) = s.wavelet.validate() {
            errs.push(err.to_string());
        }
        if s.duration.is_some_and(|d| !(d > 0.0)) {
            errs.push("scenario.duration must be > 0".into());
        }
        if self.modes.frequencies.iter().any(|&f| !(f > 0.0)) {
            errs.push("modes.frequencies must be > 0".into());
        }
        let d = &self.dispersion;
        if !(d.f_min > 0.0 && d.f_max >= d.f_min && d.df > 0.0) {
            errs.push("dispersion needs 0 < f_min <= f_max and df > 0".into());
        }
        let g = self.separation.guard_fraction;
        if !(g > 0.0 && g < 1.0) {
            errs.push("separation.guard_fraction must lie in (0, 1)".into());
        }
        let r = &self.ranging;
        if !(r.min_prominence > 0.0 && r.min_prominence <= 1.0) {
            errs.push("ranging.min_prominence must lie in (0, 1]".into());
        }
        if !(r.mode_pair_band[1] > r.mode_pair_band[0]) {
            errs.push("ranging.mode_pair_band must be increasing".into());
        }
        let m = &self.demo;
        if m.ranges_km.is_empty() || m.ranges_km.iter().any(|&r| !(r > 0.0)) {
            errs.push("demo.ranges_km must be non-empty and positive".into());
        }
        if !(m.seamount_depth > 0.0) || !(m.seamount_position > 0.0 && m.seamount_position < 1.0) {
            errs.push("demo seamount needs depth > 0 and position in (0, 1)".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs.join("; ")))
        }
    }

    /// SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn waveguide(&self) -> Result<Waveguide, CliError> {
        let e = &self.environment;
        let ssp = match &e.ssp_csv {
            Some(p) => env::load_ssp_csv(p)
                .map_err(|err| CliError::Config(format!("{}: {err}", p.display())))?,
            None => match e.profile {
                Profile::DualChannel => env::build_dual_channel_ssp(&e.ducts, e.water_depth, 1.0)
                    .map_err(|err| CliError::Config(err.to_string()))?,
                Profile::Isovelocity => SoundSpeedProfile::constant(e.isovelocity_speed, e.water_depth)
                    .map_err(|err| CliError::Config(err.to_string()))?,
            },
        };
        Waveguide::new(
            ssp,
            e.water_depth,
            e.water_density,
            e.bottom_speed,
            e.bottom_density,
            e.bottom_attenuation,
            e.bottom_model,
        )
        .map_err(|err| CliError::Config(err.to_string()))
    }

    pub fn transect(&self) -> Result<Option<env::BathymetryTransect>, CliError> {
        self.environment
            .transect_csv
            .as_ref()
            .map(|p| {
                env::load_transect_csv(p).map_err(|err| CliError::Config(format!("{}: {err}", p.display())))
            })
            .transpose()
    }

    pub fn policy(&self) -> ductmode::ranging::PeakPolicy {
        let r = &self.ranging;
        ductmode::ranging::PeakPolicy {
            start: r.start,
            end: r.end,
            min_prominence: r.min_prominence,
            min_separation: r.min_separation,
        }
    }

    /// Scenario at `range_m` with the configured depths and rate; duration is
    /// filled in by the caller.
    pub fn scenario_at(&self, range_m: f64, duration: f64) -> Scenario {
        Scenario {
            source_depth: self.scenario.source_depth,
            receiver_depth: self.scenario.receiver_depth,
            range: range_m,
            sample_rate: self.scenario.sample_rate,
            duration,
        }
    }
}
