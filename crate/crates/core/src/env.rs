//! Environment description: sound-speed profiles, waveguides and bathymetry transects.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Seawater sanity bounds for sound speed (m/s).
pub const MIN_SEAWATER_SPEED: f64 = 1300.0;
pub const MAX_SEAWATER_SPEED: f64 = 1700.0;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("duplicate depth at line {0}")]
    DuplicateDepth(usize),
    #[error("duplicate range at line {0}")]
    DuplicateRange(usize),
    #[error("sound speed {speed} m/s at depth {depth} m outside [{MIN_SEAWATER_SPEED}, {MAX_SEAWATER_SPEED}]")]
    SpeedOutOfRange { depth: f64, speed: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid dual-channel parameters: {0}")]
    InvalidParams(String),
    #[error("invalid waveguide: {0}")]
    InvalidWaveguide(String),
    #[error("invalid transect: {0}")]
    InvalidTransect(String),
    #[error("range [{r0}, {r1}] m outside transect [0, {last}] m")]
    RangeOutsideTransect { r0: f64, r1: f64, last: f64 },
}

/// Sound speed as a function of depth, sampled at strictly increasing depths
/// starting at the surface. Linear between samples, constant below the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSamples", into = "ProfileSamples")]
pub struct SoundSpeedProfile {
    depths: Vec<f64>,
    speeds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileSamples {
    depth_m: Vec<f64>,
    speed_mps: Vec<f64>,
}

impl TryFrom<ProfileSamples> for SoundSpeedProfile {
    type Error = EnvError;
    fn try_from(p: ProfileSamples) -> Result<Self, EnvError> {
        SoundSpeedProfile::new(p.depth_m, p.speed_mps)
    }
}

impl From<SoundSpeedProfile> for ProfileSamples {
    fn from(p: SoundSpeedProfile) -> Self {
        ProfileSamples {
            depth_m: p.depths,
            speed_mps: p.speeds,
        }
    }
}

impl SoundSpeedProfile {
    pub fn new(depths: Vec<f64>, speeds: Vec<f64>) -> Result<Self, EnvError> {
        if depths.len() != speeds.len() {
            return Err(EnvError::InvalidProfile(format!(
                "{} depths but {} speeds",
                depths.len(),
                speeds.len()
            )));
        }
        if depths.len() < 2 {
            return Err(EnvError::InvalidProfile(
                "at least 2 samples required".into(),
            ));
        }
        if depths[0] != 0.0 {
            return Err(EnvError::InvalidProfile(format!(
                "first depth must be 0, got {}",
                depths[0]
            )));
        }
        for w in depths.windows(2) {
            if !(w[1] > w[0]) {
                return Err(EnvError::InvalidProfile(format!(
                    "depths not strictly increasing at {} m",
                    w[1]
                )));
            }
        }
        for (&z, &c) in depths.iter().zip(&speeds) {
            if !(MIN_SEAWATER_SPEED..=MAX_SEAWATER_SPEED).contains(&c) {
                return Err(EnvError::SpeedOutOfRange { depth: z, speed: c });
            }
        }
        Ok(Self { depths, speeds })
    }

    /// Isovelocity profile down to `max_depth`.
    pub fn constant(speed: f64, max_depth: f64) -> Result<Self, EnvError> {
        Self::new(vec![0.0, max_depth], vec![speed, speed])
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    /// Sound speed at depth `z` (m). Negative depths are clamped to the surface.
    pub fn speed_at(&self, z: f64) -> f64 {
        let d = &self.depths;
        if z <= 0.0 {
            return self.speeds[0];
        }
        let last = d.len() - 1;
        if z >= d[last] {
            return self.speeds[last];
        }
        let i = d.partition_point(|&x| x <= z) - 1;
        let t = (z - d[i]) / (d[i + 1] - d[i]);
        self.speeds[i] + t * (self.speeds[i + 1] - self.speeds[i])
    }

    /// Minimum and maximum speed over `[0, max_depth]`.
    pub fn speed_bounds(&self, max_depth: f64) -> (f64, f64) {
        let mut lo = self.speed_at(max_depth);
        let mut hi = lo;
        for (&z, &c) in self.depths.iter().zip(&self.speeds) {
            if z > max_depth {
                break;
            }
            lo = lo.min(c);
            hi = hi.max(c);
        }
        (lo, hi)
    }

    /// Indices of strict interior local minima (plateaus count once).
    pub fn local_minima(&self) -> Vec<usize> {
        local_minima(&self.speeds)
    }
}

/// Interior local minima of a sampled curve; a flat run counts once, at its first index.
pub fn local_minima(v: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = v.len();
    let mut i = 1;
    while i + 1 < n {
        if v[i] < v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] > v[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Parametric two-duct profile: a linear background with two Gaussian depressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualChannelParams {
    pub surface_speed: f64,
    pub surface_gradient: f64,
    pub duct1_depth: f64,
    pub duct2_depth: f64,
    pub duct1_strength: f64,
    pub duct2_strength: f64,
    pub duct_width1: f64,
    pub duct_width2: f64,
}

impl Default for DualChannelParams {
    fn default() -> Self {
        Self {
            surface_speed: 1435.0,
            surface_gradient: 0.009,
            duct1_depth: 80.0,
            duct2_depth: 300.0,
            duct1_strength: 9.0,
            duct2_strength: 6.0,
            duct_width1: 20.0,
            duct_width2: 120.0,
        }
    }
}

impl DualChannelParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::InvalidParams(m.into()));
        if !(self.duct1_depth > 0.0 && self.duct1_depth < self.duct2_depth) {
            return bad("require 0 < duct1_depth < duct2_depth");
        }
        if !(self.duct1_strength >= 0.0 && self.duct2_strength >= 0.0) {
            return bad("duct strengths must be >= 0");
        }
        if !(self.duct_width1 > 0.0 && self.duct_width2 > 0.0) {
            return bad("duct widths must be > 0");
        }
        if !self.surface_speed.is_finite() || !self.surface_gradient.is_finite() {
            return bad("surface speed and gradient must be finite");
        }
        Ok(())
    }

    /// Closed-form sound speed at depth `z`.
    pub fn speed_at(&self, z: f64) -> f64 {
        let g = |depth: f64, strength: f64, width: f64| {
            let x = (z - depth) / width;
            strength * (-x * x).exp()
        };
        self.surface_speed + self.surface_gradient * z
            - g(self.duct1_depth, self.duct1_strength, self.duct_width1)
            - g(self.duct2_depth, self.duct2_strength, self.duct_width2)
    }
}

/// Sample the parametric dual-channel profile on `[0, max_depth]` with step `dz`.
/// The last sample lands exactly on `max_depth`.
pub fn build_dual_channel_ssp(
    params: &DualChannelParams,
    max_depth: f64,
    dz: f64,
) -> Result<SoundSpeedProfile, EnvError> {
    params.validate()?;
    if !(dz > 0.0) {
        return Err(EnvError::InvalidParams("dz must be > 0".into()));
    }
    if !(max_depth > params.duct2_depth) {
        return Err(EnvError::InvalidParams(
            "max_depth must exceed duct2_depth".into(),
        ));
    }
    let n = (max_depth / dz).ceil() as usize;
    let mut depths: Vec<f64> = (0..n).map(|i| i as f64 * dz).collect();
    depths.push(max_depth);
    let speeds = depths.iter().map(|&z| params.speed_at(z)).collect();
    SoundSpeedProfile::new(depths, speeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BottomModel {
    Rigid,
    Halfspace,
}

const FIXTURE_DEPTH: f64 = 2000.0;

/// Range-independent waveguide: water column over a rigid or fluid bottom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveguide {
    pub ssp: SoundSpeedProfile,
    pub water_depth: f64,
    pub water_density: f64,
    pub bottom_speed: f64,
    pub bottom_density: f64,
    /// dB per wavelength.
    pub bottom_attenuation: f64,
    pub bottom_model: BottomModel,
}

impl Waveguide {
    pub fn new(
        ssp: SoundSpeedProfile,
        water_depth: f64,
        water_density: f64,
        bottom_speed: f64,
        bottom_density: f64,
        bottom_attenuation: f64,
        bottom_model: BottomModel,
    ) -> Result<Self, EnvError> {
        let wg = Self {
            ssp,
            water_depth,
            water_density,
            bottom_speed,
            bottom_density,
            bottom_attenuation,
            bottom_model,
        };
        wg.validate()?;
        Ok(wg)
    }

    /// The dual-channel reference environment: default duct parameters in
    /// 2000 m of water over a slightly faster, lossy fluid bottom.
    pub fn dual_channel_fixture() -> Self {
        Self::dual_channel(&DualChannelParams::default()).expect("fixture is valid")
    }

    /// [`Waveguide::dual_channel_fixture`] with other duct parameters.
    pub fn dual_channel(params: &DualChannelParams) -> Result<Self, EnvError> {
        let ssp = build_dual_channel_ssp(params, FIXTURE_DEPTH, 1.0)?;
        Self::new(ssp, FIXTURE_DEPTH, 1000.0, 1480.0, 1500.0, 0.5, BottomModel::Halfspace)
    }

    /// Isovelocity water over a rigid bottom (the ideal waveguide).
    pub fn ideal_rigid(speed: f64, depth: f64) -> Result<Self, EnvError> {
        Self::new(
            SoundSpeedProfile::constant(speed, depth)?,
            depth,
            1000.0,
            speed,
            1000.0,
            0.0,
            BottomModel::Rigid,
        )
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidWaveguide(m));
        if !(self.water_depth > 0.0) {
            return bad("water_depth must be > 0".into());
        }
        if !(self.water_density > 0.0 && self.bottom_density > 0.0) {
            return bad("densities must be > 0".into());
        }
        if !(self.bottom_attenuation >= 0.0) {
            return bad("bottom_attenuation must be >= 0".into());
        }
        if self.bottom_model == BottomModel::Halfspace {
            let (_, cmax) = self.speed_bounds();
            if !(self.bottom_speed > cmax) {
                return bad(format!(
                    "bottom_speed {} must exceed max water speed {cmax}",
                    self.bottom_speed
                ));
            }
        }
        Ok(())
    }

    /// Water sound speed at depth `z`, constant below the last profile sample.
    pub fn speed_at(&self, z: f64) -> f64 {
        self.ssp.speed_at(z)
    }

    /// (min, max) water sound speed over the water column.
    pub fn speed_bounds(&self) -> (f64, f64) {
        self.ssp.speed_bounds(self.water_depth)
    }

    /// Stable SHA-256 hex digest of the environment parameters.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("waveguide serializes");
        hex_digest(&json)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Water depth along a source-receiver path, linear between points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathymetryTransect {
    points: Vec<(f64, f64)>,
}

impl BathymetryTransect {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, EnvError> {
        let bad = |m: String| Err(EnvError::InvalidTransect(m));
        if points.len() < 2 {
            return bad("at least 2 points required".into());
        }
        if points[0].0 != 0.0 {
            return bad(format!("first range must be 0, got {}", points[0].0));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return bad(format!("ranges not strictly increasing at {} m", w[1].0));
            }
        }
        if let Some(p) = points.iter().find(|p| !(p.1 > 0.0)) {
            return bad(format!("depth must be > 0 at range {} m", p.0));
        }
        Ok(Self { points })
    }

    pub fn flat(depth: f64, length: f64) -> Result<Self, EnvError> {
        Self::new(vec![(0.0, depth), (length, depth)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn last_range(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn depth_at(&self, r: f64) -> f64 {
        let p = &self.points;
        let i = p.partition_point(|q| q.0 <= r).clamp(1, p.len() - 1) - 1;
        let t = ((r - p[i].0) / (p[i + 1].0 - p[i].0)).clamp(0.0, 1.0);
        p[i].1 + t * (p[i + 1].1 - p[i].1)
    }
}

/// Minimum interpolated depth over `[r0, r1]`. The minimum of a piecewise-linear
/// curve is attained at an endpoint or an interior vertex.
pub fn min_depth_over(transect: &BathymetryTransect, r0: f64, r1: f64) -> Result<f64, EnvError> {
    let last = transect.last_range();
    if !(r0 >= 0.0 && r0 < r1 && r1 <= last) {
        return Err(EnvError::RangeOutsideTransect { r0, r1, last });
    }
    let mut m = transect.depth_at(r0).min(transect.depth_at(r1));
    for &(r, d) in transect.points() {
        if r > r0 && r < r1 {
            m = m.min(d);
        }
    }
    Ok(m)
}

fn read_two_column_csv(
    path: &Path,
    header: [&str; 2],
) -> Result<Vec<(usize, f64, f64)>, EnvError> {
    let p = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| EnvError::Io {
        path: p.clone(),
        source,
    })?;
    let parse_err = |line: usize, msg: String| EnvError::Parse {
        path: p.clone(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let hdr = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if hdr.len() != 2 || hdr.get(0) != Some(header[0]) || hdr.get(1) != Some(header[1]) {
        return Err(parse_err(
            1,
            format!("expected header `{},{}`", header[0], header[1]),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|pos| pos.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|pos| pos.line() as usize).unwrap_or(0);
        if rec.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, got {}", rec.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("not a number: `{s}`")))
        };
        rows.push((line, num(&rec[0])?, num(&rec[1])?));
    }
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(rows)
}

/// Read a `depth_m,speed_mps` CSV. Rows are sorted by depth.
pub fn load_ssp_csv(path: impl AsRef<Path>) -> Result<SoundSpeedProfile, EnvError> {
    let rows = read_two_column_csv(path.as_ref(), ["depth_m", "speed_mps"])?;
    for w in rows.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(EnvError::DuplicateDepth(w[0].0.max(w[1].0)));
        }
    }
    let (depths, speeds) = rows.iter().map(|r| (r.1, r.2)).unzip();
    SoundSpeedProfile::new(depths, speeds)
}

pub fn save_ssp_csv(ssp: &SoundSpeedProfile, path: impl AsRef<Path>) -> Result<(), EnvError> {
    let rows: Vec<(f64, f64)> = ssp.depths().iter().copied().zip(ssp.speeds().iter().copied()).collect();
    write_two_column_csv(path.as_ref(), "depth_m,speed_mps", &rows)
}

/// Read a `range_m,depth_m` CSV.
pub fn load_transect_csv(path: impl AsRef<Path>) -> Result<BathymetryTransect, EnvError> {
    let rows = read_two_column_csv(path.as_ref(), ["range_m", "depth_m"])?;
    for w in rows.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(EnvError::DuplicateRange(w[0].0.max(w[1].0)));
        }
    }
    BathymetryTransect::new(rows.iter().map(|r| (r.1, r.2)).collect())
}

pub fn save_transect_csv(t: &BathymetryTransect, path: impl AsRef<Path>) -> Result<(), EnvError> {
    write_two_column_csv(path.as_ref(), "range_m,depth_m", t.points())
}

fn write_two_column_csv(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<(), EnvError> {
    let io = |source| EnvError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    writeln!(f, "{header}").map_err(io)?;
    for (a, b) in rows {
        writeln!(f, "{a},{b}").map_err(io)?;
    }
    f.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_csv() {
        let f = write_tmp("depth_m,speed_mps\n0,1435\n100,1440\n");
        let ssp = load_ssp_csv(f.path()).unwrap();
        assert_eq!(ssp.len(), 2);
        assert_eq!(ssp.speed_at(0.0), 1435.0);
        assert_eq!(ssp.speed_at(50.0), 1437.5);
        // constant extrapolation below the last sample
        assert_eq!(ssp.speed_at(5000.0), 1440.0);
    }

    #[test]
    fn csv_rows_are_sorted() {
        let f = write_tmp("depth_m,speed_mps\n100,1440\n0,1435\n50,1436\n");
        let ssp = load_ssp_csv(f.path()).unwrap();
        assert_eq!(ssp.depths(), &[0.0, 50.0, 100.0]);
    }

    #[test]
    fn csv_duplicate_depth() {
        let f = write_tmp("depth_m,speed_mps\n0,1435\n50,1436\n50,1437\n");
        match load_ssp_csv(f.path()) {
            Err(EnvError::DuplicateDepth(line)) => assert_eq!(line, 4),
            other => panic!("expected DuplicateDepth, got {other:?}"),
        }
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let f = write_tmp("depth_m,speed_mps\n0,1435\n10,abc\n");
        match load_ssp_csv(f.path()) {
            Err(EnvError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn csv_speed_out_of_range() {
        let f = write_tmp("depth_m,speed_mps\n0,1435\n10,1900\n");
        assert!(matches!(
            load_ssp_csv(f.path()),
            Err(EnvError::SpeedOutOfRange { .. })
        ));
    }

    #[test]
    fn csv_wrong_header() {
        let f = write_tmp("z,c\n0,1435\n10,1440\n");
        assert!(matches!(load_ssp_csv(f.path()), Err(EnvError::Parse { line: 1, .. })));
    }

    #[test]
    fn profile_must_start_at_surface() {
        assert!(SoundSpeedProfile::new(vec![1.0, 2.0], vec![1500.0, 1500.0]).is_err());
        assert!(SoundSpeedProfile::new(vec![0.0], vec![1500.0]).is_err());
    }

    #[test]
    fn no_ducts_is_monotone() {
        let p = DualChannelParams {
            duct1_strength: 0.0,
            duct2_strength: 0.0,
            ..Default::default()
        };
        let ssp = build_dual_channel_ssp(&p, 1000.0, 1.0).unwrap();
        assert!(ssp.speeds().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*ssp.depths().last().unwrap(), 1000.0);
    }

    #[test]
    fn single_duct_has_one_minimum() {
        let p = DualChannelParams {
            duct1_strength: 0.0,
            ..Default::default()
        };
        let ssp = build_dual_channel_ssp(&p, 1000.0, 1.0).unwrap();
        let mins = ssp.local_minima();
        assert_eq!(mins.len(), 1);
        let zmin = ssp.depths()[mins[0]];
        assert!((zmin - p.duct2_depth).abs() < 15.0, "minimum at {zmin}");
    }

    #[test]
    fn bad_params_rejected() {
        let p = DualChannelParams {
            duct1_depth: 300.0,
            ..Default::default()
        };
        assert!(build_dual_channel_ssp(&p, 1000.0, 1.0).is_err());
        let p = DualChannelParams {
            duct_width1: 0.0,
            ..Default::default()
        };
        assert!(build_dual_channel_ssp(&p, 1000.0, 1.0).is_err());
        assert!(build_dual_channel_ssp(&DualChannelParams::default(), 100.0, 1.0).is_err());
        assert!(build_dual_channel_ssp(&DualChannelParams::default(), 1000.0, 0.0).is_err());
    }

    #[test]
    fn halfspace_requires_fast_bottom() {
        let ssp = SoundSpeedProfile::constant(1500.0, 100.0).unwrap();
        let r = Waveguide::new(ssp, 100.0, 1000.0, 1450.0, 1500.0, 0.1, BottomModel::Halfspace);
        assert!(matches!(r, Err(EnvError::InvalidWaveguide(_))));
    }

    #[test]
    fn transect_minimum() {
        let flat = BathymetryTransect::flat(2000.0, 100e3).unwrap();
        assert_eq!(min_depth_over(&flat, 0.0, 100e3).unwrap(), 2000.0);

        let slope = BathymetryTransect::new(vec![(0.0, 3500.0), (518e3, 1500.0)]).unwrap();
        assert_eq!(min_depth_over(&slope, 0.0, 518e3).unwrap(), 1500.0);

        assert!(min_depth_over(&slope, 0.0, 600e3).is_err());
        assert!(min_depth_over(&slope, 10.0, 10.0).is_err());
    }

    #[test]
    fn narrow_ducts_example_deeper_minimum_slower() {
        let p = DualChannelParams {
            surface_speed: 1435.0,
            surface_gradient: 0.016,
            duct1_depth: 60.0,
            duct2_depth: 200.0,
            duct1_strength: 3.0,
            duct2_strength: 6.0,
            duct_width1: 30.0,
            duct_width2: 80.0,
        };
        let ssp = build_dual_channel_ssp(&p, 1000.0, 1.0).unwrap();
        let mins = ssp.local_minima();
        assert_eq!(mins.len(), 2);
        assert!(ssp.speeds()[mins[1]] < ssp.speeds()[mins[0]]);
    }

    #[test]
    fn fixture_has_two_channels() {
        let wg = Waveguide::dual_channel_fixture();
        let mins = wg.ssp.local_minima();
        assert_eq!(mins.len(), 2);
        let z: Vec<f64> = mins.iter().map(|&i| wg.ssp.depths()[i]).collect();
        assert!((z[0] - 80.0).abs() < 5.0 && (z[1] - 300.0).abs() < 20.0, "{z:?}");
    }

    #[test]
    fn shipped_csv_fixture_has_two_minima() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/dual_channel_ssp.csv");
        let ssp = load_ssp_csv(path).unwrap();
        assert_eq!(ssp.len(), 7);
        assert_eq!(ssp.local_minima().len(), 2);
    }
}
