//! PNG renderings: energy history and mid-plane displacement slices.

use std::path::Path;

use image::{ImageResult, Rgb, RgbImage};
use pmlwave_core::diagnostics::EnergyTrace;

use crate::output::Snapshot;

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const AXES: Rgb<u8> = Rgb([40, 40, 40]);
const GRID: Rgb<u8> = Rgb([220, 220, 220]);
const SERIES: [Rgb<u8>; 3] = [Rgb([31, 119, 180]), Rgb([214, 39, 40]), Rgb([20, 20, 20])];

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Kinetic, potential and total energy on a log scale spanning `decades`
/// below the peak, one horizontal rule per decade.
pub fn energy_image(trace: &EnergyTrace, width: u32, height: u32, decades: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, BACKGROUND);
    let margin = 20i64;
    let (w, h) = (width as i64 - 2 * margin, height as i64 - 2 * margin);
    let peak = trace.total.iter().copied().fold(0.0, f64::max);
    let t_max = trace.times.last().copied().unwrap_or(0.0);
    if w <= 1 || h <= 1 {
        return img;
    }
    let top = if peak > 0.0 { peak.log10().ceil() } else { 0.0 };
    let bottom = top - decades.max(1) as f64;
    for d in 0..=decades.max(1) {
        let y = margin + h * d as i64 / decades.max(1) as i64;
        line(&mut img, (margin, y), (margin + w, y), GRID);
    }
    line(&mut img, (margin, margin), (margin, margin + h), AXES);
    line(&mut img, (margin, margin + h), (margin + w, margin + h), AXES);
    if peak <= 0.0 || t_max <= 0.0 {
        return img;
    }
    let to_px = |t: f64, e: f64| {
        let x = margin + ((t / t_max) * w as f64).round() as i64;
        let level = if e > 0.0 { e.log10().clamp(bottom, top) } else { bottom };
        let y = margin + (((top - level) / (top - bottom)) * h as f64).round() as i64;
        (x, y)
    };
    for (series, color) in [&trace.kinetic, &trace.potential, &trace.total].into_iter().zip(SERIES) {
        for i in 1..trace.len() {
            let a = to_px(trace.times[i - 1], series[i - 1]);
            let b = to_px(trace.times[i], series[i]);
            line(&mut img, a, b, color);
        }
    }
    img
}

/// Signed diverging map: blue for negative, red for positive, white at 0.
fn diverging(x: f64) -> Rgb<u8> {
    let s = x.clamp(-1.0, 1.0);
    let fade = (255.0 * (1.0 - s.abs())).round() as u8;
    if s >= 0.0 {
        Rgb([255, fade, fade])
    } else {
        Rgb([fade, fade, 255])
    }
}

/// Plane through the centre normal to `axis` (0, 1 or 2), coloured by the
/// displacement component along `component`, scaled to the slice maximum.
pub fn slice_image(snap: &Snapshot, axis: usize, component: usize) -> RgbImage {
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mid = snap.dims[axis] / 2;
    let at = |i: usize, j: usize| {
        let mut node = [0; 3];
        node[axis] = mid;
        node[a] = i;
        node[b] = j;
        snap.u[component][snap.index(node)]
    };
    let (na, nb) = (snap.dims[a], snap.dims[b]);
    let mut scale = 0.0f64;
    for j in 0..nb {
        for i in 0..na {
            scale = scale.max(at(i, j).abs());
        }
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    RgbImage::from_fn(na as u32, nb as u32, |i, j| diverging(at(i as usize, nb - 1 - j as usize) / scale))
}

pub fn write_energy_png(path: &Path, trace: &EnergyTrace) -> ImageResult<()> {
    energy_image(trace, 800, 500, 8).save(path)
}

/// Writes `<stem>_x.png`, `<stem>_y.png` and `<stem>_z.png`, the three
/// mid-planes of displacement component `component`.
pub fn write_slice_pngs(
    dir: &Path,
    stem: &str,
    snap: &Snapshot,
    component: usize,
) -> ImageResult<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for (axis, name) in ["x", "y", "z"].iter().enumerate() {
        let path = dir.join(format!("{stem}_{name}.png"));
        slice_image(snap, axis, component).save(&path)?;
        out.push(path);
    }
    Ok(out)
}
