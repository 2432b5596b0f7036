//! Normal modes of a range-independent waveguide.
//!
//! The depth equation `ρ (Ψ'/ρ)' + (ω²/c² − k²) Ψ = 0` is discretized with the
//! standard three-point stencil in its variational form, giving the generalized
//! symmetric problem `K ψ = k² W ψ` with diagonal `W` (trapezoid weights of
//! `1/ρ`). The eigenvectors come out normalized so that `∫ Ψ²/ρ dz = 1`, and
//! the group velocity `k / (ω ∫ Ψ²/(ρc²) dz)` is the exact derivative of the
//! discrete dispersion relation.
//!
//! A fluid half-space bottom is approximated by extending the grid two water
//! depths into the basement, terminating it with a pressure-release boundary
//! and keeping only modes whose phase speed is below the basement speed.

pub(crate) mod dispersion;
pub mod tridiag;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{BottomModel, Waveguide};
use tridiag::SymTridiagonal;

pub use dispersion::{dispersion_table, DispersionTable, ModeCurve};

/// Nepers per (dB/wavelength · radian): converts a dB/λ loss into the
/// imaginary fraction of the wavenumber.
const DB_PER_WAVELENGTH_TO_LOSS_TANGENT: f64 = 1.0 / (40.0 * PI * std::f64::consts::LOG10_E);

#[derive(Debug, Error)]
pub enum ModeError {
    #[error("frequency must be > 0, got {0}")]
    BadFrequency(f64),
    #[error("depth step {dz} m too coarse at {frequency} Hz (need <= {limit:.4} m)")]
    GridTooCoarse { dz: f64, frequency: f64, limit: f64 },
    #[error("invalid frequency grid: {0}")]
    BadGrid(String),
    #[error("min_depth_on_path must be > 0, got {0}")]
    BadCutoffDepth(f64),
}

/// One normal mode at a single frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// 1-based mode number (m − 1 interior zero crossings).
    pub index: usize,
    /// Horizontal wavenumber (rad/m).
    pub wavenumber: f64,
    /// Eigenfunction samples on the owning set's depth grid.
    pub eigenfunction: Vec<f64>,
    /// Modal attenuation (nepers/m).
    pub attenuation: f64,
    /// Group velocity (m/s).
    pub group_velocity: f64,
}

impl Mode {
    pub fn phase_speed(&self, frequency: f64) -> f64 {
        2.0 * PI * frequency / self.wavenumber
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub frequency: f64,
    /// Uniform depth step of the grid; node `i` sits at `i * dz`.
    pub dz: f64,
    /// Number of grid nodes, surface and any basement included.
    pub grid_len: usize,
    pub water_depth: f64,
    pub modes: Vec<Mode>,
    /// Set when no mode is trapped at this frequency.
    pub below_cutoff: bool,
}

impl ModeSet {
    pub fn depths(&self) -> Vec<f64> {
        (0..self.grid_len).map(|i| i as f64 * self.dz).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    /// Eigenfunction of `mode` at depth `z`, linear between grid nodes.
    pub fn eigenfunction_at(&self, mode: &Mode, z: f64) -> f64 {
        interp_grid(&mode.eigenfunction, self.dz, z)
    }

    /// The set as pretty JSON (the serde layout of [`ModeSet`] and [`Mode`]).
    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")
    }

    /// Water-column eigenfunctions as `z_m,psi_mode1,psi_mode2,...`. A set
    /// with no modes writes the depth column only.
    pub fn write_eigenfunction_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "z_m")?;
        for m in &self.modes {
            write!(out, ",psi_mode{}", m.index)?;
        }
        writeln!(out)?;
        let n_water = ((self.water_depth / self.dz).round() as usize + 1).min(self.grid_len);
        for i in 0..n_water {
            write!(out, "{}", i as f64 * self.dz)?;
            for m in &self.modes {
                write!(out, ",{:.9e}", m.eigenfunction[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub(crate) fn interp_grid(values: &[f64], dz: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return values[0];
    }
    let x = z / dz;
    let i = x.floor() as usize;
    if i + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let t = x - i as f64;
    values[i] + t * (values[i + 1] - values[i])
}

/// Default depth step: `min(1 m, wavelength / 20)` at the slowest water speed.
pub fn default_dz(wg: &Waveguide, frequency: f64) -> f64 {
    let (cmin, _) = wg.speed_bounds();
    (cmin / frequency / 20.0).min(1.0)
}

/// Per-node quadrature weights of the discretized depth operator.
pub(crate) struct Discretization {
    /// Actual grid step (water depth divides evenly into it).
    pub h: f64,
    /// Total node count including the surface node (and basement end node).
    pub nodes: usize,
    /// `∫ 1/ρ` weights for the unknown nodes `1..=unknowns`.
    pub w: Vec<f64>,
    /// `∫ 1/(ρc²)` weights.
    pub q: Vec<f64>,
    /// Basement part of `q` (attenuation perturbation).
    pub q_bottom: Vec<f64>,
    /// `1/(ρ h)` per segment between consecutive unknown-adjacent nodes;
    /// `s[j]` couples nodes `j` and `j + 1`.
    pub s: Vec<f64>,
    /// Suffix minima of the water sound speed over the water nodes, used for
    /// turning-depth lookups.
    pub speed_floor: Vec<f64>,
}

impl Discretization {
    pub fn new(wg: &Waveguide, dz: f64) -> Self {
        let n_water = (wg.water_depth / dz).ceil().max(1.0) as usize;
        let h = wg.water_depth / n_water as f64;
        let nodes = match wg.bottom_model {
            BottomModel::Rigid => n_water + 1,
            BottomModel::Halfspace => 3 * n_water + 1,
        };
        let last = nodes - 1;
        // Unknowns: nodes 1..=last for rigid (Neumann end), 1..last for the
        // pressure-release basement end.
        let unknowns = match wg.bottom_model {
            BottomModel::Rigid => last,
            BottomModel::Halfspace => last - 1,
        };
        let mut w = vec![0.0; unknowns];
        let mut q = vec![0.0; unknowns];
        let mut q_bottom = vec![0.0; unknowns];
        let mut s = vec![0.0; last];
        let water_rc = 1.0 / wg.water_density;
        let bottom_rc = 1.0 / wg.bottom_density;
        let cb2 = wg.bottom_speed * wg.bottom_speed;
        for (j, sj) in s.iter_mut().enumerate() {
            let in_water = j < n_water;
            let inv_rho = if in_water { water_rc } else { bottom_rc };
            *sj = inv_rho / h;
            for node in [j, j + 1] {
                if node == 0 || node > unknowns {
                    continue;
                }
                let k = node - 1;
                let c2 = if in_water {
                    let c = wg.speed_at(node as f64 * h);
                    c * c
                } else {
                    cb2
                };
                w[k] += 0.5 * h * inv_rho;
                q[k] += 0.5 * h * inv_rho / c2;
                if !in_water {
                    q_bottom[k] += 0.5 * h * inv_rho / c2;
                }
            }
        }
        Self {
            h,
            nodes,
            w,
            q,
            q_bottom,
            s,
            speed_floor: speed_suffix_min(wg, h, n_water),
        }
    }

    /// Deepest water node depth where a mode of wavenumber `k` is oscillatory.
    pub fn turning_depth(&self, omega: f64, k: f64) -> f64 {
        turning_depth_from(&self.speed_floor, self.h, omega / k)
    }

    fn unknowns(&self) -> usize {
        self.w.len()
    }

    /// `W^{-1/2} K W^{-1/2}` at angular frequency `omega`.
    fn operator(&self, omega: f64) -> SymTridiagonal {
        let n = self.unknowns();
        let om2 = omega * omega;
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n {
            let node = k + 1;
            let mut stiff = self.s[node - 1];
            if node < self.s.len() {
                stiff += self.s[node];
            }
            diag.push((om2 * self.q[k] - stiff) / self.w[k]);
            if k + 1 < n {
                off.push(self.s[node] / (self.w[k] * self.w[k + 1]).sqrt());
            }
        }
        SymTridiagonal::new(diag, off)
    }

    /// Weighted sums `Σ weight ψ²` over the unknown nodes of a full-grid eigenfunction.
    fn weighted(&self, weights: &[f64], psi: &[f64]) -> f64 {
        weights
            .iter()
            .zip(&psi[1..])
            .map(|(wt, p)| wt * p * p)
            .sum()
    }
}

/// Solve for up to `max_modes` trapped modes at `frequency`, ordered by
/// descending wavenumber. `dz` is the requested grid step (it is shrunk
/// slightly so the water depth is a whole number of steps).
pub fn solve_modes(
    wg: &Waveguide,
    frequency: f64,
    max_modes: usize,
    dz: f64,
) -> Result<ModeSet, ModeError> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(ModeError::BadFrequency(frequency));
    }
    let (cmin, _) = wg.speed_bounds();
    let limit = cmin / frequency / 10.0;
    if !(dz > 0.0 && dz <= limit) {
        return Err(ModeError::GridTooCoarse {
            dz,
            frequency,
            limit,
        });
    }
    let disc = Discretization::new(wg, dz);
    Ok(solve_on(&disc, wg, frequency, max_modes))
}

pub(crate) fn solve_on(
    disc: &Discretization,
    wg: &Waveguide,
    frequency: f64,
    max_modes: usize,
) -> ModeSet {
    let omega = 2.0 * PI * frequency;
    let op = disc.operator(omega);
    // Trapped modes: k² > 0 (rigid) or k > ω/c_bottom (basement).
    let floor = match wg.bottom_model {
        BottomModel::Rigid => 0.0,
        BottomModel::Halfspace => (omega / wg.bottom_speed).powi(2),
    };
    let eigenvalues = op.largest_eigenvalues(floor, max_modes);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
    let mut modes = Vec::with_capacity(eigenvalues.len());
    let sep_tol = 1e-9 * eigenvalues.first().map(|l| l.abs()).unwrap_or(1.0);
    for (j, &lambda) in eigenvalues.iter().enumerate() {
        let close: Vec<&[f64]> = eigenvalues[..j]
            .iter()
            .zip(&vectors)
            .filter(|(l, _)| (**l - lambda).abs() < sep_tol)
            .map(|(_, v)| v.as_slice())
            .collect();
        let phi = op.eigenvector(lambda, &close);
        let mut psi = vec![0.0; disc.nodes];
        for (k, p) in phi.iter().enumerate() {
            psi[k + 1] = p / disc.w[k].sqrt();
        }
        // Positive slope at the surface.
        if psi[1] < 0.0 {
            psi.iter_mut().for_each(|v| *v = -*v);
        }
        // Deep evanescent tails decay into round-off; flush them so they carry no sign.
        let peak = psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        psi.iter_mut()
            .filter(|v| v.abs() < 1e-14 * peak)
            .for_each(|v| *v = 0.0);
        let k_m = lambda.sqrt();
        let delta = wg.bottom_attenuation * DB_PER_WAVELENGTH_TO_LOSS_TANGENT;
        let attenuation = match wg.bottom_model {
            BottomModel::Rigid => 0.0,
            BottomModel::Halfspace => {
                delta * omega * omega * disc.weighted(&disc.q_bottom, &psi) / k_m
            }
        };
        let group_velocity = k_m / (omega * disc.weighted(&disc.q, &psi));
        vectors.push(phi);
        modes.push(Mode {
            index: j + 1,
            wavenumber: k_m,
            eigenfunction: psi,
            attenuation,
            group_velocity,
        });
    }
    ModeSet {
        frequency,
        dz: disc.h,
        grid_len: disc.nodes,
        water_depth: wg.water_depth,
        below_cutoff: modes.is_empty(),
        modes,
    }
}

/// Recompute group velocities with the perturbation formula
/// `v_g = k / (ω ∫ Ψ²/(ρc²) dz)`.
pub fn group_velocity_perturbation(ms: &ModeSet, wg: &Waveguide) -> ModeSet {
    let disc = Discretization::new(wg, ms.dz);
    assert_eq!(disc.nodes, ms.grid_len, "mode set does not match waveguide grid");
    let omega = ms.omega();
    let mut out = ms.clone();
    for m in out.modes.iter_mut() {
        m.group_velocity = m.wavenumber / (omega * disc.weighted(&disc.q, &m.eigenfunction));
    }
    out
}

/// `∫ Ψ_a Ψ_b / ρ dz` on the set's grid.
pub fn inner_product(ms: &ModeSet, wg: &Waveguide, a: &Mode, b: &Mode) -> f64 {
    let disc = Discretization::new(wg, ms.dz);
    disc.w
        .iter()
        .enumerate()
        .map(|(k, wt)| wt * a.eigenfunction[k + 1] * b.eigenfunction[k + 1])
        .sum()
}

/// Deepest water-column depth where the mode is oscillatory (ω²/c² > k²).
pub fn lower_turning_depth(ms: &ModeSet, wg: &Waveguide, mode: &Mode) -> f64 {
    let n_water = (wg.water_depth / ms.dz).round() as usize;
    let floor = speed_suffix_min(wg, ms.dz, n_water);
    turning_depth_from(&floor, ms.dz, mode.phase_speed(ms.frequency))
}

/// `out[i] = min_{j >= i} c(j h)` over the water nodes; non-decreasing in `i`.
fn speed_suffix_min(wg: &Waveguide, h: f64, n_water: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=n_water).map(|i| wg.speed_at(i as f64 * h)).collect();
    for i in (0..n_water).rev() {
        out[i] = out[i].min(out[i + 1]);
    }
    out
}

/// The deepest node with `c < phase_speed` is the last one whose suffix
/// minimum is below the phase speed.
fn turning_depth_from(floor: &[f64], h: f64, phase_speed: f64) -> f64 {
    let p = floor.partition_point(|&c| c < phase_speed);
    p.saturating_sub(1) as f64 * h
}

/// Drop modes whose lower turning depth exceeds the shallowest water depth on
/// the propagation path.
pub fn cutoff_filter(
    ms: &ModeSet,
    min_depth_on_path: f64,
    wg: &Waveguide,
) -> Result<ModeSet, ModeError> {
    if !(min_depth_on_path > 0.0) {
        return Err(ModeError::BadCutoffDepth(min_depth_on_path));
    }
    let mut out = ms.clone();
    out.modes
        .retain(|m| lower_turning_depth(ms, wg, m) <= min_depth_on_path);
    Ok(out)
}

/// Interior sign changes of an eigenfunction (exact zeros skipped).
pub fn zero_crossings(psi: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in psi {
        if v != 0.0 {
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
    }
    count
}
