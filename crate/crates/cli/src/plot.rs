//! Minimal PNG rendering. The CSV next to each plot carries the data.

use std::path::Path;

use ductmode::tfr::Spectrogram;
use image::{ImageResult, Rgb, RgbImage};

const W: u32 = 900;
const H: u32 = 500;
const MARGIN: u32 = 30;

const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [214, 39, 40],
    [44, 160, 44],
    [255, 127, 14],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [23, 190, 207],
];

struct Frame {
    x: [f64; 2],
    y: [f64; 2],
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let mut x = [f64::INFINITY, f64::NEG_INFINITY];
        let mut y = x;
        for &(a, b) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x = [x[0].min(a), x[1].max(a)];
            y = [y[0].min(b), y[1].max(b)];
        }
        let pad = |r: [f64; 2]| {
            if !r[0].is_finite() {
                [0.0, 1.0]
            } else if r[1] > r[0] {
                r
            } else {
                [r[0] - 0.5, r[0] + 0.5]
            }
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64, y: f64) -> Option<(i64, i64)> {
        let w = (W - 2 * MARGIN) as f64;
        let h = (H - 2 * MARGIN) as f64;
        let u = (x - self.x[0]) / (self.x[1] - self.x[0]);
        let v = (y - self.y[0]) / (self.y[1] - self.y[0]);
        (u.is_finite() && v.is_finite()).then(|| {
            (
                MARGIN as i64 + (u * w).round() as i64,
                (H - MARGIN) as i64 - (v * h).round() as i64,
            )
        })
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Rgb(c));
    }
}

fn line(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), c: [u8; 3]) {
    let n = (b.0 - a.0).abs().max((b.1 - a.1).abs()).max(1);
    for i in 0..=n {
        let x = a.0 + (b.0 - a.0) * i / n;
        let y = a.1 + (b.1 - a.1) * i / n;
        put(img, x, y, c);
    }
}

fn border(img: &mut RgbImage) {
    let (l, r, t, b) = (MARGIN as i64, (W - MARGIN) as i64, MARGIN as i64, (H - MARGIN) as i64);
    let k = [0, 0, 0];
    line(img, (l, t), (r, t), k);
    line(img, (l, b), (r, b), k);
    line(img, (l, t), (l, b), k);
    line(img, (r, t), (r, b), k);
}

/// Polylines sharing one auto-scaled frame.
pub fn lines(path: &Path, series: &[Vec<(f64, f64)>]) -> ImageResult<()> {
    let frame = Frame::fit(series.iter().flatten());
    let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
    for (i, s) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let pts: Vec<(i64, i64)> = s.iter().filter_map(|&(x, y)| frame.px(x, y)).collect();
        for w in pts.windows(2) {
            line(&mut img, w[0], w[1], c);
        }
        if let [p] = pts.as_slice() {
            put(&mut img, p.0, p.1, c);
        }
    }
    border(&mut img);
    img.save(path)
}

/// Scatter points, one color per series.
pub fn scatter(path: &Path, series: &[Vec<(f64, f64)>]) -> ImageResult<()> {
    let frame = Frame::fit(series.iter().flatten());
    let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
    for (i, s) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        for &(x, y) in s {
            if let Some((u, v)) = frame.px(x, y) {
                for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                    put(&mut img, u + dx, v + dy, c);
                }
            }
        }
    }
    border(&mut img);
    img.save(path)
}

/// Spectrogram in dB (60 dB range) up to `f_max`, with `(time, frequency)`
/// curves drawn on top.
pub fn spectrogram(path: &Path, sp: &Spectrogram, f_max: f64, overlays: &[Vec<(f64, f64)>]) -> ImageResult<()> {
    let (t0, t1) = match (sp.times.first(), sp.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 1.0),
    };
    let frame = Frame {
        x: if t1 > t0 { [t0, t1] } else { [t0, t0 + 1.0] },
        y: [0.0, f_max],
    };
    let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
    let peak = sp.magnitudes.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    let w = (W - 2 * MARGIN) as usize;
    let h = (H - 2 * MARGIN) as usize;
    let nf = sp.frequencies.len();
    let df = sp.bin_width();
    if peak > 0.0 && !sp.times.is_empty() && nf > 0 {
        for i in 0..w {
            let t = frame.x[0] + (frame.x[1] - frame.x[0]) * i as f64 / (w - 1) as f64;
            let j = sp
                .times
                .partition_point(|&x| x < t)
                .min(sp.times.len() - 1);
            for k in 0..h {
                let f = f_max * k as f64 / (h - 1) as f64;
                let bin = ((f / df).round() as usize).min(nf - 1);
                let db = 20.0 * (sp.magnitudes[j][bin] / peak).max(1e-6).log10();
                let level = ((db + 60.0) / 60.0).clamp(0.0, 1.0);
                let c = heat(level);
                put(&mut img, (MARGIN as usize + i) as i64, (H as usize - MARGIN as usize - k) as i64, c);
            }
        }
    }
    for (i, s) in overlays.iter().enumerate() {
        let c = PALETTE[(i + 1) % PALETTE.len()];
        let pts: Vec<(i64, i64)> = s
            .iter()
            .filter(|p| p.0 >= frame.x[0] && p.0 <= frame.x[1] && p.1 <= f_max)
            .filter_map(|&(x, y)| frame.px(x, y))
            .collect();
        for w in pts.windows(2) {
            line(&mut img, w[0], w[1], c);
        }
    }
    border(&mut img);
    img.save(path)
}

fn heat(v: f64) -> [u8; 3] {
    // dark blue -> yellow
    let r = (255.0 * (1.5 * v - 0.25).clamp(0.0, 1.0)) as u8;
    let g = (255.0 * v.powf(1.2)) as u8;
    let b = (255.0 * (0.5 - 0.5 * v).clamp(0.0, 1.0) + 60.0 * (1.0 - v)) as u8;
    [r, g, b]
}
