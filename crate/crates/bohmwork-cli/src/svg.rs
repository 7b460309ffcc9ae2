//! Minimal self-contained SVG plots for the result files: a work histogram
//! and a trajectory fan. No plotting dependency; the outputs are inspection
//! aids, not data products.

use std::fmt::Write as _;
use std::path::Path;

use bohmwork_core::{BohmError, Result};

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Axes {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_lo) / (self.x_hi - self.x_lo) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y_lo) / (self.y_hi - self.y_lo) * (H - 2.0 * MARGIN)
    }

    fn frame(&self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "<rect x='{MARGIN}' y='{MARGIN}' width='{}' height='{}' fill='none' stroke='black'/>",
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        let _ = write!(
            s,
            "<text x='{}' y='24' text-anchor='middle' font-size='16'>{title}</text>",
            W / 2.0
        );
        let _ = write!(
            s,
            "<text x='{}' y='{}' text-anchor='middle' font-size='13'>{x_label}</text>",
            W / 2.0,
            H - 16.0
        );
        let _ = write!(
            s,
            "<text x='18' y='{}' text-anchor='middle' font-size='13' transform='rotate(-90 18 {})'>{y_label}</text>",
            H / 2.0,
            H / 2.0
        );
        for i in 0..=4 {
            let fx = self.x_lo + (self.x_hi - self.x_lo) * i as f64 / 4.0;
            let fy = self.y_lo + (self.y_hi - self.y_lo) * i as f64 / 4.0;
            let _ = write!(
                s,
                "<text x='{}' y='{}' text-anchor='middle' font-size='11'>{fx:.3}</text>",
                self.px(fx),
                H - MARGIN + 18.0
            );
            let _ = write!(
                s,
                "<text x='{}' y='{}' text-anchor='end' font-size='11'>{fy:.3}</text>",
                MARGIN - 6.0,
                self.py(fy) + 4.0
            );
        }
        s
    }
}

fn document(body: &str) -> String {
    format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{W}' height='{H}' viewBox='0 0 {W} {H}'>\
         <rect width='100%' height='100%' fill='white'/>{body}</svg>\n"
    )
}

/// Histogram of (bin_lo, bin_hi, mass) rows.
pub fn work_histogram(bins: &[(f64, f64, f64)], path: &Path) -> Result<()> {
    if bins.is_empty() {
        return Err(BohmError::InvalidParameter("empty histogram".into()));
    }
    let x_lo = bins.first().unwrap().0;
    let x_hi = bins.last().unwrap().1;
    let y_hi = bins.iter().map(|b| b.2).fold(0.0, f64::max);
    if !(x_hi > x_lo) || !(y_hi > 0.0) {
        return Err(BohmError::InvalidParameter("degenerate histogram".into()));
    }
    let axes = Axes { x_lo, x_hi, y_lo: 0.0, y_hi: y_hi * 1.05 };
    let mut body = axes.frame("Work distribution", "W", "mass");
    for &(lo, hi, mass) in bins {
        let x = axes.px(lo);
        let w = (axes.px(hi) - x).max(0.5);
        let y = axes.py(mass);
        let h = axes.py(0.0) - y;
        let _ = write!(
            body,
            "<rect x='{x:.2}' y='{y:.2}' width='{w:.2}' height='{h:.2}' fill='steelblue' stroke='none'/>"
        );
    }
    std::fs::write(path, document(&body))?;
    Ok(())
}

/// Position-versus-time fan of at most 50 trajectories given as
/// (sample, t, x) triples grouped by sample.
pub fn trajectory_fan(rows: &[(usize, f64, f64)], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(BohmError::InvalidParameter("no trajectory rows".into()));
    }
    let mut samples: Vec<usize> = rows.iter().map(|r| r.0).collect();
    samples.sort_unstable();
    samples.dedup();
    samples.truncate(50);

    let t_lo = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let t_hi = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let x_lo = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let x_hi = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let pad = (x_hi - x_lo).max(1e-9) * 0.05;
    let axes = Axes { x_lo: t_lo, x_hi: t_hi.max(t_lo + 1e-9), y_lo: x_lo - pad, y_hi: x_hi + pad };
    let mut body = axes.frame("Bohmian trajectories", "t", "x");
    for &s in &samples {
        let mut points = String::new();
        for &(sample, t, x) in rows.iter().filter(|r| r.0 == s) {
            let _ = (sample,);
            let _ = write!(points, "{:.2},{:.2} ", axes.px(t), axes.py(x));
        }
        let _ = write!(
            body,
            "<polyline points='{}' fill='none' stroke='darkorange' stroke-width='1' opacity='0.7'/>",
            points.trim_end()
        );
    }
    std::fs::write(path, document(&body))?;
    Ok(())
}
