//! Minimal line plots as standalone SVG.

use std::fmt::Write;

use crate::record::{Series, SweepRow};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

const COLORS: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        Self {
            x: span(&mut xs.clone()),
            y: span(&mut ys.clone()),
        }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }

    fn polyline(&self, pts: impl Iterator<Item = (f64, f64)>, stroke: &str, class: &str) -> String {
        let coords: Vec<String> = pts
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y.clamp(self.y.0, self.y.1))))
            .collect();
        format!(
            "<polyline class=\"{class}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            coords.join(" ")
        )
    }
}

fn document(title: &str, xlabel: &str, ylabel: &str, f: &Frame, body: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, escape(title));
    let (x0, x1, y0, y1) = (PAD, W - PAD, H - PAD, PAD);
    let _ = writeln!(
        s,
        "<path d=\"M{x0},{y1} L{x0},{y0} L{x1},{y0}\" fill=\"none\" stroke=\"black\"/>"
    );
    for (v, x, anchor) in [(f.x.0, x0, "start"), (f.x.1, x1, "end")] {
        let _ = writeln!(s, "<text x=\"{x}\" y=\"{}\" text-anchor=\"{anchor}\" font-size=\"11\">{}</text>", y0 + 16.0, tick(v));
    }
    for (v, y) in [(f.y.0, y0), (f.y.1, y1)] {
        let _ = writeln!(s, "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-size=\"11\">{}</text>", x0 - 4.0, tick(v));
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>", W / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// `t ↦ ‖A_t‖_op` per path and the envelope `1/t`.
fn covariance(id: &str, times: &[f64], paths: &[Vec<f64>]) -> String {
    let ys = paths.iter().flatten().copied();
    let mut f = Frame::new(times.iter().copied(), ys);
    f.y = (0.0, f.y.1 * 1.25);
    let mut body = String::new();
    for (k, p) in paths.iter().enumerate() {
        body.push_str(&f.polyline(times.iter().copied().zip(p.iter().copied()), COLORS[k % COLORS.len()], "path"));
    }
    let t_min = (1.0 / f.y.1).max(f.x.0);
    let n = 200;
    let env = (0..=n).map(|j| {
        let t = t_min + (f.x.1 - t_min) * j as f64 / n as f64;
        (t, 1.0 / t)
    });
    let mut e = f.polyline(env, "black", "envelope");
    e = e.replace("stroke-width", "stroke-dasharray=\"6 4\" stroke-width");
    body.push_str(&e);
    document(&format!("{id}: covariance norm"), "t", "||A_t||_op", &f, &body)
}

fn gap(id: &str, times: &[f64], paths: &[Vec<f64>]) -> String {
    let f = Frame::new(times.iter().copied(), paths.iter().flatten().copied());
    let mut body = String::new();
    for (k, p) in paths.iter().enumerate() {
        body.push_str(&f.polyline(times.iter().copied().zip(p.iter().copied()), COLORS[k % COLORS.len()], "path"));
    }
    document(&format!("{id}: spectral gap"), "t", "lambda_t", &f, &body)
}

/// One curve per direction over offsets, or a single curve over direction
/// index when each direction has one offset.
fn sweep(id: &str, quantity: &str, rows: &[SweepRow]) -> String {
    let mut groups: Vec<(&[f64], Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        match groups.last_mut() {
            Some((d, pts)) if *d == r.direction.as_slice() => pts.push((r.offset, r.value)),
            _ => groups.push((&r.direction, vec![(r.offset, r.value)])),
        }
    }
    let single = groups.iter().all(|(_, p)| p.len() == 1);
    let mut body = String::new();
    let (f, xlabel) = if single {
        let pts: Vec<(f64, f64)> = groups.iter().enumerate().map(|(i, (_, p))| (i as f64, p[0].1)).collect();
        let f = Frame::new(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1));
        body.push_str(&f.polyline(pts.into_iter(), COLORS[0], "sweep"));
        (f, "direction index")
    } else {
        let f = Frame::new(rows.iter().map(|r| r.offset), rows.iter().map(|r| r.value));
        for (k, (_, pts)) in groups.iter().enumerate() {
            body.push_str(&f.polyline(pts.iter().copied(), COLORS[k % COLORS.len()], "sweep"));
        }
        (f, "offset")
    };
    document(&format!("{id}: {quantity}"), xlabel, quantity, &f, &body)
}

/// The plot for a series, if it has one.
pub fn render(series: &Series) -> Option<String> {
    match series {
        Series::Covariance { id, times, paths, .. } => Some(covariance(id, times, paths)),
        Series::Gap { id, times, paths } => Some(gap(id, times, paths)),
        Series::Sweep { id, quantity, rows } => Some(sweep(id, quantity, rows)),
        Series::Path { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_plot_has_one_polyline_per_path_and_the_envelope() {
        let times = vec![0.0, 0.5, 1.0, 2.0];
        let paths = vec![vec![1.0, 0.7, 0.5, 0.33], vec![1.0, 0.6, 0.45, 0.3], vec![1.0, 0.66, 0.5, 0.3]];
        let s = covariance("c", &times, &paths);
        assert_eq!(s.matches("<polyline").count(), paths.len() + 1);
        assert_eq!(s.matches("class=\"envelope\"").count(), 1);
    }

    #[test]
    fn labels_are_escaped() {
        let s = gap("a<b", &[0.0, 1.0], &[vec![1.0, 2.0]]);
        assert!(s.contains("a&lt;b"));
    }
}
