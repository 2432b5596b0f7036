use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_dz, interp_grid, solve_on, Discretization, ModeError};
use crate::env::Waveguide;

/// Group velocity and wavenumber curves on a uniform frequency grid.
/// Curves are indexed by tracked mode number; cells where the mode is not
/// trapped are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionTable {
    pub frequencies: Vec<f64>,
    pub curves: Vec<ModeCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCurve {
    pub mode: usize,
    pub wavenumber: Vec<Option<f64>>,
    pub group_velocity: Vec<Option<f64>>,
}

impl DispersionTable {
    pub fn curve(&self, mode: usize) -> Option<&ModeCurve> {
        self.curves.iter().find(|c| c.mode == mode)
    }

    pub fn mode_numbers(&self) -> Vec<usize> {
        self.curves.iter().map(|c| c.mode).collect()
    }

    /// Group velocity of `mode` at grid frequency index `i`.
    pub fn vg(&self, mode: usize, i: usize) -> Option<f64> {
        self.curve(mode).and_then(|c| c.group_velocity.get(i).copied().flatten())
    }

    /// Group velocity of `mode` at arbitrary `f`, linear between grid points
    /// where both neighbours exist.
    pub fn vg_at(&self, mode: usize, f: f64) -> Option<f64> {
        let c = self.curve(mode)?;
        let fr = &self.frequencies;
        if fr.len() == 1 {
            return if (f - fr[0]).abs() < 1e-9 { c.group_velocity[0] } else { None };
        }
        if f < fr[0] - 1e-9 || f > fr[fr.len() - 1] + 1e-9 {
            return None;
        }
        let i = fr.partition_point(|&x| x <= f).clamp(1, fr.len() - 1) - 1;
        let t = ((f - fr[i]) / (fr[i + 1] - fr[i])).clamp(0.0, 1.0);
        let (a, b) = (c.group_velocity[i]?, c.group_velocity[i + 1]?);
        Some(a + t * (b - a))
    }

    /// Indices of grid frequencies inside `[f_lo, f_hi]`.
    pub fn band_indices(&self, f_lo: f64, f_hi: f64) -> Vec<usize> {
        let eps = 1e-9;
        (0..self.frequencies.len())
            .filter(|&i| self.frequencies[i] >= f_lo - eps && self.frequencies[i] <= f_hi + eps)
            .collect()
    }

    /// Long-form CSV `freq_hz,mode,k_radpm,vg_mps`; absent cells omitted.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "freq_hz,mode,k_radpm,vg_mps")?;
        for (i, f) in self.frequencies.iter().enumerate() {
            for c in &self.curves {
                if let (Some(k), Some(v)) = (c.wavenumber[i], c.group_velocity[i]) {
                    writeln!(out, "{f},{},{k:.12e},{v:.9}", c.mode)?;
                }
            }
        }
        Ok(())
    }
}

/// A mode at one frequency with its tracked identity and eigenfunction
/// samples at requested depths.
#[derive(Debug, Clone)]
pub(crate) struct TrackedMode {
    pub label: usize,
    pub wavenumber: f64,
    pub group_velocity: f64,
    pub attenuation: f64,
    pub turning_depth: f64,
    pub probes: Vec<f64>,
    /// Downsampled eigenfunction used for correlation tracking.
    shape: Vec<f64>,
}

pub(crate) fn frequency_grid(f_min: f64, f_max: f64, df: f64) -> Result<Vec<f64>, ModeError> {
    if !(f_min > 0.0 && f_min < f_max && df > 0.0) {
        return Err(ModeError::BadGrid(format!(
            "need 0 < f_min < f_max and df > 0 (got {f_min}, {f_max}, {df})"
        )));
    }
    let n = ((f_max - f_min) / df + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| f_min + i as f64 * df).collect())
}

const TRACK_SHAPE_LEN: usize = 1500;
const TRACK_MIN_CORRELATION: f64 = 0.5;

/// Solve modes on `freqs` (in parallel) and label them by following
/// eigenfunction correlation from one frequency to the next (sequentially).
pub(crate) fn tracked_modes(
    wg: &Waveguide,
    freqs: &[f64],
    max_modes: usize,
    dz: f64,
    probe_depths: &[f64],
) -> Vec<Vec<TrackedMode>> {
    let disc = Discretization::new(wg, dz);
    let stride = (disc.nodes / TRACK_SHAPE_LEN).max(1);
    let mut solved: Vec<Vec<TrackedMode>> = freqs
        .par_iter()
        .map(|&f| {
            let ms = solve_on(&disc, wg, f, max_modes);
            ms.modes
                .iter()
                .map(|m| {
                    let mut shape: Vec<f64> = m
                        .eigenfunction
                        .iter()
                        .step_by(stride)
                        .copied()
                        .collect();
                    let norm = shape.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        shape.iter_mut().for_each(|v| *v /= norm);
                    }
                    TrackedMode {
                        label: m.index,
                        wavenumber: m.wavenumber,
                        group_velocity: m.group_velocity,
                        attenuation: m.attenuation,
                        turning_depth: disc.turning_depth(ms.omega(), m.wavenumber),
                        probes: probe_depths
                            .iter()
                            .map(|&z| interp_grid(&m.eigenfunction, ms.dz, z))
                            .collect(),
                        shape,
                    }
                })
                .collect()
        })
        .collect();

    for i in 1..solved.len() {
        let (head, tail) = solved.split_at_mut(i);
        let prev = &head[i - 1];
        let cur = &mut tail[0];
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (a, pm) in prev.iter().enumerate() {
            for (b, cm) in cur.iter().enumerate() {
                let c: f64 = pm.shape.iter().zip(&cm.shape).map(|(x, y)| x * y).sum();
                pairs.push((c.abs(), a, b));
            }
        }
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut prev_used = vec![false; prev.len()];
        let mut label: Vec<Option<usize>> = vec![None; cur.len()];
        for (c, a, b) in pairs {
            if c < TRACK_MIN_CORRELATION {
                break;
            }
            if !prev_used[a] && label[b].is_none() {
                prev_used[a] = true;
                label[b] = Some(prev[a].label);
            }
        }
        let mut taken: Vec<usize> = label.iter().flatten().copied().collect();
        let mut next_free = prev.iter().map(|m| m.label).max().unwrap_or(0);
        for (b, cm) in cur.iter_mut().enumerate() {
            cm.label = match label[b] {
                Some(l) => l,
                None if !taken.contains(&cm.label) => cm.label,
                None => {
                    next_free = next_free.max(taken.iter().copied().max().unwrap_or(0)) + 1;
                    next_free
                }
            };
            taken.push(cm.label);
        }
    }
    solved
}

/// Group-velocity dispersion curves on `f_min..=f_max` in steps of `df`.
/// The grid step is chosen for the highest frequency and shared by all
/// frequencies so that eigenfunctions can be compared across the band.
pub fn dispersion_table(
    wg: &Waveguide,
    f_min: f64,
    f_max: f64,
    df: f64,
    max_modes: usize,
) -> Result<DispersionTable, ModeError> {
    let freqs = frequency_grid(f_min, f_max, df)?;
    let dz = default_dz(wg, *freqs.last().unwrap());
    Ok(table_from_tracked(&freqs, &tracked_modes(wg, &freqs, max_modes, dz, &[])))
}

pub(crate) fn table_from_tracked(freqs: &[f64], tracked: &[Vec<TrackedMode>]) -> DispersionTable {
    let mut labels: Vec<usize> = tracked.iter().flatten().map(|m| m.label).collect();
    labels.sort_unstable();
    labels.dedup();
    let curves = labels
        .iter()
        .map(|&l| {
            let mut wavenumber = vec![None; freqs.len()];
            let mut group_velocity = vec![None; freqs.len()];
            for (i, ms) in tracked.iter().enumerate() {
                if let Some(m) = ms.iter().find(|m| m.label == l) {
                    wavenumber[i] = Some(m.wavenumber);
                    group_velocity[i] = Some(m.group_velocity);
                }
            }
            ModeCurve {
                mode: l,
                wavenumber,
                group_velocity,
            }
        })
        .collect();
    DispersionTable {
        frequencies: freqs.to_vec(),
        curves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_degenerate_single_column() {
        assert_eq!(frequency_grid(10.0, 20.0, 50.0).unwrap(), vec![10.0]);
        assert_eq!(frequency_grid(5.0, 7.0, 1.0).unwrap(), vec![5.0, 6.0, 7.0]);
        assert!(frequency_grid(0.0, 7.0, 1.0).is_err());
        assert!(frequency_grid(8.0, 7.0, 1.0).is_err());
    }

    #[test]
    fn ideal_table_monotone_toward_c() {
        let wg = Waveguide::ideal_rigid(1500.0, 2000.0).unwrap();
        let t = dispersion_table(&wg, 5.0, 100.0, 1.0, 10).unwrap();
        for c in &t.curves {
            let vals: Vec<f64> = c.group_velocity.iter().flatten().copied().collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]), "mode {}", c.mode);
            assert!(vals.iter().all(|&v| v < 1500.0));
            let ks: Vec<f64> = c.wavenumber.iter().flatten().copied().collect();
            assert!(ks.windows(2).all(|w| w[1] > w[0]));
        }
        // tracking reproduces the natural ordering in the ideal guide
        for (i, f) in t.frequencies.iter().enumerate() {
            let mut prev = f64::INFINITY;
            for c in &t.curves {
                if let Some(k) = c.wavenumber[i] {
                    assert!(k < prev, "order broken at {f} Hz");
                    prev = k;
                }
            }
        }
    }

    #[test]
    fn csv_has_no_missing_cells() {
        let wg = Waveguide::ideal_rigid(1500.0, 100.0).unwrap();
        let t = dispersion_table(&wg, 5.0, 30.0, 5.0, 5).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("freq_hz,mode,k_radpm,vg_mps\n"));
        assert!(!s.contains("NaN") && !s.contains("None"));
        let rows = s.lines().count() - 1;
        let expected: usize = t
            .curves
            .iter()
            .map(|c| c.group_velocity.iter().flatten().count())
            .sum();
        assert_eq!(rows, expected);
    }
}
