use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ductmode::env::Waveguide;
use ductmode::modes::{self, dispersion_table};
use ductmode::ranging::RangeEstimate;
use ductmode::synth::{TimeSeries, WavSidecar};
use ductmode::tfr;
use ductmode::warp;
use serde::Serialize;

use crate::config::RunConfig;
use crate::pipeline::{self, stage};
use crate::{plot, CliError};

/// Files written by one command, relative to its output directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_owned());
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    fn png(&mut self, name: &str, draw: impl FnOnce(&Path) -> image::ImageResult<()>) -> Result<(), CliError> {
        let path = self.path(name);
        draw(&path).map_err(stage("plot"))
    }

    /// Run manifest carrying the config hash for every file listed.
    fn finish(mut self, command: &str, cfg: &RunConfig, wg: Option<&Waveguide>) -> Result<Vec<PathBuf>, CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            config_hash: String,
            environment_hash: Option<String>,
            files: &'a [String],
        }
        let files = std::mem::take(&mut self.files);
        let manifest = Manifest {
            command,
            config_hash: cfg.hash(),
            environment_hash: wg.map(Waveguide::fingerprint),
            files: &files,
        };
        let name = format!("{command}.manifest.json");
        self.json(&name, &manifest)?;
        let mut all: Vec<PathBuf> = files.iter().map(|f| self.dir.join(f)).collect();
        all.push(self.dir.join(name));
        Ok(all)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn freq_tag(f: f64) -> String {
    let s = format!("{f}");
    s.replace('.', "p")
}

/// Reads a waveform from WAV (with its `<stem>.json` sidecar for t0) or from
/// a `t_s,amplitude` CSV.
pub fn read_series(path: &Path) -> Result<TimeSeries, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!("input not found: {}", path.display())));
    }
    let is_wav = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    if is_wav {
        let side = path.with_extension("json");
        let t0 = match fs::read_to_string(&side) {
            Ok(text) => serde_json::from_str::<WavSidecar>(&text).map_err(|e| io_err(&side, e))?.t0,
            Err(_) => 0.0,
        };
        return TimeSeries::read_wav(path, t0).map_err(|e| io_err(path, e));
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut it = line.split(',');
        let parse = |v: Option<&str>| v.and_then(|s| s.trim().parse::<f64>().ok());
        match (parse(it.next()), parse(it.next())) {
            (Some(t), Some(a)) => {
                times.push(t);
                samples.push(a);
            }
            _ => return Err(CliError::Config(format!("{}:{}: expected t_s,amplitude", path.display(), i + 1))),
        }
    }
    if times.len() < 2 {
        return Err(CliError::Config(format!("{}: need at least two samples", path.display())));
    }
    let fs = (times.len() - 1) as f64 / (times[times.len() - 1] - times[0]);
    Ok(TimeSeries::new(fs, times[0], samples))
}

fn waveform_outputs(out: &mut Outputs, stem: &str, ts: &TimeSeries) -> Result<(), CliError> {
    out.write(&format!("{stem}.csv"), |w| ts.write_csv(w))?;
    let pts: Vec<(f64, f64)> = ts.times().into_iter().zip(ts.samples.iter().copied()).collect();
    out.png(&format!("{stem}.png"), |p| plot::lines(p, &[pts]))
}

fn spectrogram_outputs(
    out: &mut Outputs,
    stem: &str,
    sp: &tfr::Spectrogram,
    f_max: f64,
    overlays: &[Vec<(f64, f64)>],
) -> Result<(), CliError> {
    out.write(&format!("{stem}.csv"), |w| sp.write_csv(w))?;
    out.png(&format!("{stem}.png"), |p| plot::spectrogram(p, sp, f_max, overlays))
}

pub fn cmd_modes(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let wg = cfg.waveguide()?;
    let mut out = Outputs::new(&cfg.output_dir)?;
    for &f in &cfg.modes.frequencies {
        let dz = cfg.modes.dz.unwrap_or_else(|| modes::default_dz(&wg, f));
        let ms = modes::solve_modes(&wg, f, cfg.modes.max_modes, dz).map_err(stage("modes"))?;
        let tag = freq_tag(f);
        out.write(&format!("modes_{tag}hz.json"), |w| ms.write_json(w))?;
        out.write(&format!("eigenfunctions_{tag}hz.csv"), |w| ms.write_eigenfunction_csv(w))?;
        let depths = ms.depths();
        let curves: Vec<Vec<(f64, f64)>> = ms
            .modes
            .iter()
            .map(|m| {
                m.eigenfunction
                    .iter()
                    .zip(&depths)
                    .take_while(|(_, &z)| z <= wg.water_depth)
                    .map(|(&p, &z)| (p, -z))
                    .collect()
            })
            .collect();
        out.png(&format!("eigenfunctions_{tag}hz.png"), |p| plot::lines(p, &curves))?;
    }
    out.finish("modes", cfg, Some(&wg))
}

pub fn cmd_dispersion(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let wg = cfg.waveguide()?;
    let d = &cfg.dispersion;
    let table = dispersion_table(&wg, d.f_min, d.f_max, d.df, d.max_modes).map_err(stage("dispersion"))?;
    let mut out = Outputs::new(&cfg.output_dir)?;
    out.write("dispersion.csv", |w| table.write_csv(w))?;
    let curves: Vec<Vec<(f64, f64)>> = table
        .curves
        .iter()
        .map(|c| {
            table
                .frequencies
                .iter()
                .zip(&c.group_velocity)
                .filter_map(|(f, v)| v.map(|v| (*f, v)))
                .collect()
        })
        .collect();
    out.png("dispersion.png", |p| plot::lines(p, &curves))?;
    out.finish("dispersion", cfg, Some(&wg))
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let wg = cfg.waveguide()?;
    let range = cfg.scenario.range_km * 1e3;
    let full = pipeline::modal_field(cfg, &wg)?;
    let duration = match cfg.scenario.duration {
        Some(d) => d,
        None => pipeline::window_duration(&wg, &full, range)?,
    };
    let field = match cfg.transect()? {
        Some(t) => pipeline::blocked_field(&full, &wg, &t, range)?.0,
        None => full,
    };
    let ts = pipeline::synthesize(cfg, &wg, &field, range, Some(duration))?;
    let mut out = Outputs::new(&cfg.output_dir)?;
    waveform_outputs(&mut out, "waveform", &ts)?;
    let wav = out.path("waveform.wav");
    ts.write_wav(&wav).map_err(|e| io_err(&wav, e))?;
    let side = out.path("waveform.json");
    WavSidecar {
        t0: ts.t0,
        fs: ts.fs,
        scenario: Some(cfg.scenario_at(range, duration)),
        environment_hash: Some(wg.fingerprint()),
        config_hash: Some(cfg.hash()),
    }
    .write(&side)
    .map_err(|e| io_err(&side, e))?;
    out.finish("synth", cfg, Some(&wg))
}

pub fn cmd_spectrogram(cfg: &RunConfig, input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let ts = read_series(input)?;
    let sp = pipeline::spectrogram(cfg, &ts)?;
    let mut out = Outputs::new(&cfg.output_dir)?;
    spectrogram_outputs(&mut out, "spectrogram", &sp, ts.fs / 2.0, &[])?;
    out.finish("spectrogram", cfg, None)
}

pub fn cmd_separate(cfg: &RunConfig, input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let ts = read_series(input)?;
    let sep = pipeline::separate(cfg, &ts)?;
    let mut out = Outputs::new(&cfg.output_dir)?;
    let dir = cfg.output_dir.join("separation");
    let manifest = warp::write_separation(&sep, &dir, Some(&cfg.hash())).map_err(stage("separation output"))?;
    for m in &manifest.modes {
        for f in [&m.wav, &m.csv, &m.ridge_csv] {
            out.files.push(format!("separation/{f}"));
        }
    }
    out.files.push("separation/manifest.json".into());
    out.write("warped.csv", |w| sep.warped.write_csv(w))?;
    let ridges: Vec<Vec<(f64, f64)>> = sep
        .modes
        .iter()
        .map(|m| m.ridge.iter().map(|p| (p.time, p.frequency)).collect())
        .collect();
    out.png("ridges.png", |p| plot::scatter(p, &ridges))?;
    out.finish("separate", cfg, None)
}

fn estimate_outputs(out: &mut Outputs, name: &str, est: &RangeEstimate) -> Result<(), CliError> {
    out.write(name, |w| {
        est.write_json(&mut *w).map_err(std::io::Error::other)
    })
}

pub fn cmd_range_a(cfg: &RunConfig, input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let ts = read_series(input)?;
    let wg = cfg.waveguide()?;
    let field = pipeline::modal_field(cfg, &wg)?;
    // the energy split between modes depends on range only weakly; use the configured one
    let speeds = pipeline::duration_speeds(cfg, &field, cfg.scenario.range_km * 1e3, &cfg.scenario.wavelet)?;
    let est = pipeline::method_a(cfg, &ts, &speeds)?.with_environment_hash(wg.fingerprint());
    let mut out = Outputs::new(&cfg.output_dir)?;
    estimate_outputs(&mut out, "range_a.json", &est)?;
    out.finish("range-a", cfg, Some(&wg))
}

pub fn cmd_range_b(cfg: &RunConfig, input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let ts = read_series(input)?;
    let wg = cfg.waveguide()?;
    let [lo, hi] = cfg.ranging.mode_pair_band;
    let table = dispersion_table(&wg, lo, hi, cfg.dispersion.df, 4).map_err(stage("dispersion"))?;
    let est = pipeline::method_b(cfg, &ts, &table)?.with_environment_hash(wg.fingerprint());
    let mut out = Outputs::new(&cfg.output_dir)?;
    estimate_outputs(&mut out, "range_b.json", &est)?;
    out.finish("range-b", cfg, Some(&wg))
}

/// One row of the demo summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRow {
    pub range_km: f64,
    pub blocked: bool,
    pub min_depth_m: f64,
    pub modes_separated: usize,
    pub method_a: Option<RangeEstimate>,
    pub method_b: Option<RangeEstimate>,
}

impl DemoRow {
    pub fn structure(&self) -> &'static str {
        if self.blocked {
            "blocked"
        } else {
            "complete"
        }
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

pub fn write_summary<W: Write>(rows: &[DemoRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "range_km,structure,min_depth_m,modes_separated,delta_t_a_s,range_a_km,error_a_pct,delta_t_b_s,range_b_km,error_b_pct"
    )?;
    for r in rows {
        let cols = |e: &Option<RangeEstimate>| {
            let e = e.as_ref();
            (
                opt(e.map(|e| e.delta_t), 4),
                opt(e.map(|e| e.range_m / 1e3), 2),
                opt(e.map(|e| 100.0 * (e.range_m / 1e3 - r.range_km) / r.range_km), 2),
            )
        };
        let (a1, a2, a3) = cols(&r.method_a);
        let (b1, b2, b3) = cols(&r.method_b);
        writeln!(
            w,
            "{},{},{:.1},{},{a1},{a2},{a3},{b1},{b2},{b3}",
            r.range_km,
            r.structure(),
            r.min_depth_m,
            r.modes_separated
        )?;
    }
    Ok(())
}

/// Synthesize every demo range, block the seamount paths, separate modes and
/// run both range estimators. Returns the summary rows and the files written.
pub fn cmd_pipeline_demo(cfg: &RunConfig) -> Result<(Vec<DemoRow>, Vec<PathBuf>), CliError> {
    let wg = cfg.waveguide()?;
    let field = pipeline::modal_field(cfg, &wg)?;
    let table = field.dispersion_table();
    let mut out = Outputs::new(&cfg.output_dir)?;
    out.write("dispersion.csv", |w| table.write_csv(w))?;
    let mut rows = Vec::new();
    for &km in &cfg.demo.ranges_km {
        let range = km * 1e3;
        let tag = format!("{km}km");
        let duration = pipeline::window_duration(&wg, &field, range)?;
        let blocked = cfg.demo.blocked_ranges_km.contains(&km);
        let transect = if blocked {
            pipeline::seamount_transect(cfg, range)?
        } else {
            ductmode::env::BathymetryTransect::flat(wg.water_depth, range).map_err(stage("cutoff"))?
        };
        let (path_field, min_depth) = pipeline::blocked_field(&field, &wg, &transect, range)?;
        let blocked = min_depth < wg.water_depth;
        let ts = pipeline::synthesize(cfg, &wg, &path_field, range, Some(duration))?;
        waveform_outputs(&mut out, &format!("waveform_{tag}"), &ts)?;
        let sp = pipeline::spectrogram(cfg, &ts)?;
        let path_table = path_field.dispersion_table();
        spectrogram_outputs(
            &mut out,
            &format!("spectrogram_{tag}"),
            &sp,
            cfg.scenario.band[1],
            &pipeline::arrival_curves(&path_table, range),
        )?;

        let sep = pipeline::separate(cfg, &ts)?;
        let mut ridges = String::from("mode,t_s,f_hz,mag\n");
        for (i, m) in sep.modes.iter().enumerate() {
            for p in &m.ridge {
                ridges += &format!("{},{:.6},{:.6},{:.9e}\n", i + 1, p.time, p.frequency, p.magnitude);
            }
        }
        out.write(&format!("ridges_{tag}.csv"), |w| w.write_all(ridges.as_bytes()))?;
        let mut pts: Vec<Vec<(f64, f64)>> = sep
            .modes
            .iter()
            .map(|m| m.ridge.iter().map(|p| (p.time, p.frequency)).collect())
            .collect();
        pts.extend(pipeline::arrival_curves(&path_table, range));
        out.png(&format!("ridges_{tag}.png"), |p| plot::scatter(p, &pts))?;

        let method_a = if blocked {
            None
        } else {
            let speeds = pipeline::duration_speeds(cfg, &field, range, &cfg.scenario.wavelet)?;
            Some(pipeline::method_a(cfg, &ts, &speeds)?.with_environment_hash(wg.fingerprint()))
        };
        let method_b = Some(pipeline::method_b(cfg, &ts, &table)?.with_environment_hash(wg.fingerprint()));
        if let Some(e) = &method_a {
            estimate_outputs(&mut out, &format!("range_a_{tag}.json"), e)?;
        }
        if let Some(e) = &method_b {
            estimate_outputs(&mut out, &format!("range_b_{tag}.json"), e)?;
        }
        rows.push(DemoRow {
            range_km: km,
            blocked,
            min_depth_m: min_depth,
            modes_separated: sep.modes.len(),
            method_a,
            method_b,
        });
    }
    out.write("summary.csv", |w| write_summary(&rows, w))?;
    let truth: Vec<(f64, f64)> = rows.iter().map(|r| (r.range_km, r.range_km)).collect();
    let est = |f: fn(&DemoRow) -> &Option<RangeEstimate>| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| f(r).as_ref().map(|e| (r.range_km, e.range_m / 1e3)))
            .collect()
    };
    let series = [truth, est(|r| &r.method_a), est(|r| &r.method_b)];
    out.png("estimates.png", |p| plot::scatter(p, &series))?;
    let files = out.finish("pipeline-demo", cfg, Some(&wg))?;
    Ok((rows, files))
}
