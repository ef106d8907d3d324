//! Static SVG plots of trajectory datasets.

use std::fmt::Write as _;

use crate::odeint::TrajectoryDataset;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn fit<'a>(xs: impl Iterator<Item = &'a f64>, ys: impl Iterator<Item = &'a f64>) -> Self {
        let range = |it: &mut dyn Iterator<Item = &f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (mut xs, mut ys) = (xs, ys);
        Axes {
            x: range(&mut xs),
            y: range(&mut ys),
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let u = MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN);
        let v = H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN);
        (u, v)
    }
}

fn frame(s: &mut String, ax: &Axes, title: &str, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, MARGIN / 2.0, escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    let bottom = H - MARGIN + 16.0;
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{bottom}" text-anchor="middle">{:.3}</text>"#, ax.x.0);
    let _ = writeln!(s, r#"<text x="{}" y="{bottom}" text-anchor="middle">{:.3}</text>"#, W - MARGIN, ax.x.1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, H - MARGIN, ax.y.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, MARGIN + 4.0, ax.y.1);
}

fn polyline(s: &mut String, ax: &Axes, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
    let coords: Vec<String> = pts
        .map(|(x, y)| {
            let (u, v) = ax.px(x, y);
            format!("{u:.2},{v:.2}")
        })
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        coords.join(" ")
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// State-space curves `(y1, y2)` for two-dimensional systems, otherwise one
/// time series per trajectory and component.
pub fn plot_dataset(data: &TrajectoryDataset) -> String {
    let mut s = String::new();
    if data.dim == 2 {
        let ax = Axes::fit(
            data.trajectories.iter().flat_map(|t| t.y.iter().map(|y| &y[0])),
            data.trajectories.iter().flat_map(|t| t.y.iter().map(|y| &y[1])),
        );
        frame(&mut s, &ax, &data.name, "y1", "y2");
        for (i, tr) in data.trajectories.iter().enumerate() {
            polyline(&mut s, &ax, tr.y.iter().map(|y| (y[0], y[1])), COLORS[i % COLORS.len()]);
        }
    } else {
        let ax = Axes::fit(
            data.trajectories.iter().flat_map(|t| t.t.iter()),
            data.trajectories.iter().flat_map(|t| t.y.iter().flatten()),
        );
        frame(&mut s, &ax, &data.name, "t", "y");
        let mut c = 0;
        for tr in &data.trajectories {
            for k in 0..data.dim {
                polyline(
                    &mut s,
                    &ax,
                    tr.t.iter().zip(&tr.y).map(|(&t, y)| (t, y[k])),
                    COLORS[c % COLORS.len()],
                );
                c += 1;
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
