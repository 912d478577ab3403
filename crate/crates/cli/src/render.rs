//! Deterministic SVG and HTML rendering: fixed canvas sizes, two-decimal
//! coordinates, no timestamps or generated ids, so identical inputs always
//! produce identical bytes.

use phyloload::phylotree::Phylogeny;

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 64.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 52.0;
const ACCENT: &str = "#316e9e";
const INK: &str = "#333333";

fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Tick label: three decimals with trailing zeros trimmed.
fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Data-space to pixel-space mapping over the fixed plot area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    /// Pads each range by 5%; a collapsed range widens by half a unit so the
    /// mapping stays finite.
    fn padded(xs: (f64, f64), ys: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if lo == hi {
                (lo - 0.5, hi + 0.5)
            } else {
                let m = 0.05 * (hi - lo);
                (lo - m, hi + m)
            }
        };
        let (x0, x1) = pad(xs);
        let (y0, y1) = pad(ys);
        Self { x0, x1, y0, y1 }
    }

    fn sx(&self, x: f64) -> f64 {
        ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)
    }

    fn sy(&self, y: f64) -> f64 {
        MT + (H - MT - MB) * (1.0 - (y - self.y0) / (self.y1 - self.y0))
    }
}

fn open_svg(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\">\n",
        px(w),
        px(h),
        px(w),
        px(h)
    )
}

fn text(out: &mut String, x: f64, y: f64, anchor: &str, size: f64, content: &str) {
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-size=\"{}\" fill=\"{INK}\">{}</text>\n",
        px(x),
        px(y),
        px(size),
        esc(content)
    ));
}

fn line(out: &mut String, x1: f64, y1: f64, x2: f64, y2: f64, width: f64) {
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{INK}\" stroke-width=\"{}\"/>\n",
        px(x1),
        px(y1),
        px(x2),
        px(y2),
        px(width)
    ));
}

fn axes(out: &mut String, frame: &Frame, title: &str, x_label: &str, y_label: &str) {
    text(out, W / 2.0, MT - 16.0, "middle", 14.0, title);
    line(out, ML, MT, ML, H - MB, 1.0);
    line(out, ML, H - MB, W - MR, H - MB, 1.0);
    for i in 0..5 {
        let fx = frame.x0 + (frame.x1 - frame.x0) * i as f64 / 4.0;
        let sx = frame.sx(fx);
        line(out, sx, H - MB, sx, H - MB + 4.0, 1.0);
        text(out, sx, H - MB + 16.0, "middle", 10.0, &tick(fx));
        let fy = frame.y0 + (frame.y1 - frame.y0) * i as f64 / 4.0;
        let sy = frame.sy(fy);
        line(out, ML - 4.0, sy, ML, sy, 1.0);
        text(out, ML - 7.0, sy + 3.0, "end", 10.0, &tick(fy));
    }
    text(
        out,
        ML + (W - ML - MR) / 2.0,
        H - 14.0,
        "middle",
        12.0,
        x_label,
    );
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" fill=\"{INK}\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        px(MT + (H - MT - MB) / 2.0),
        px(MT + (H - MT - MB) / 2.0),
        esc(y_label)
    ));
}

/// Scatter plot; each point carries a hover label.
pub fn scatter(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64, String)]) -> String {
    let xs = points.iter().map(|p| p.0);
    let ys = points.iter().map(|p| p.1);
    let frame = Frame::padded(
        (
            xs.clone().fold(f64::INFINITY, f64::min),
            xs.fold(f64::NEG_INFINITY, f64::max),
        ),
        (
            ys.clone().fold(f64::INFINITY, f64::min),
            ys.fold(f64::NEG_INFINITY, f64::max),
        ),
    );
    let mut out = open_svg(W, H);
    axes(&mut out, &frame, title, x_label, y_label);
    for (x, y, label) in points {
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{ACCENT}\" fill-opacity=\"0.75\"><title>{}</title></circle>\n",
            px(frame.sx(*x)),
            px(frame.sy(*y)),
            esc(label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Histogram with equal-width bins over the data range.
pub fn histogram(title: &str, x_label: &str, values: &[f64], bins: usize) -> String {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(1).max(1);
    let frame = Frame {
        x0: lo,
        x1: hi,
        y0: 0.0,
        y1: max_count as f64,
    };
    let mut out = open_svg(W, H);
    axes(&mut out, &frame, title, x_label, "count");
    for (i, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let x = frame.sx(lo + i as f64 * width);
        let y = frame.sy(count as f64);
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{ACCENT}\" fill-opacity=\"0.8\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n",
            px(x),
            px(y),
            px(frame.sx(lo + (i + 1) as f64 * width) - x),
            px((H - MB) - y)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Rectangular cladogram of the first tree: branch lengths on x, tips evenly
/// spaced on y, labels at the tips.
pub fn cladogram(title: &str, tree: &Phylogeny) -> String {
    let n_tips = tree.n_tips();
    let row = if n_tips <= 40 {
        16.0
    } else if n_tips <= 80 {
        12.0
    } else {
        8.0
    };
    let font = if n_tips <= 40 { 10.0 } else { 7.0 };
    let label_w = 170.0;
    let h = MT + n_tips as f64 * row + 24.0;
    let depths = tree.depths();
    let height = tree.height().max(f64::MIN_POSITIVE);
    let sx = |d: f64| ML / 4.0 + d / height * (W - ML / 4.0 - MR - label_w);

    // Tips take consecutive rows in id (preorder) order; internal nodes sit
    // at the midpoint of their children, computed children-first.
    let mut y = vec![0.0f64; tree.n_nodes()];
    let mut next_tip = 0;
    for (id, slot) in y.iter_mut().enumerate() {
        if tree.children(id).is_empty() {
            *slot = MT + (next_tip as f64 + 0.5) * row;
            next_tip += 1;
        }
    }
    for id in (0..tree.n_nodes()).rev() {
        let kids = tree.children(id);
        if !kids.is_empty() {
            y[id] = kids.iter().map(|&c| y[c]).sum::<f64>() / kids.len() as f64;
        }
    }

    let mut out = open_svg(W, h);
    text(&mut out, W / 2.0, MT - 16.0, "middle", 14.0, title);
    for (id, &node_y) in y.iter().enumerate() {
        let kids = tree.children(id);
        if let Some(parent) = tree.parent(id) {
            line(
                &mut out,
                sx(depths[parent]),
                node_y,
                sx(depths[id]),
                node_y,
                1.2,
            );
        }
        if kids.len() > 1 {
            let lo = kids.iter().map(|&c| y[c]).fold(f64::INFINITY, f64::min);
            let hi = kids.iter().map(|&c| y[c]).fold(f64::NEG_INFINITY, f64::max);
            line(&mut out, sx(depths[id]), lo, sx(depths[id]), hi, 1.2);
        }
        if kids.is_empty() {
            if let Some(label) = tree.label(id) {
                text(
                    &mut out,
                    sx(depths[id]) + 4.0,
                    node_y + font / 3.0,
                    "start",
                    font,
                    label,
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Self-contained report page: inline styles, inline SVG sections.
pub fn page(title: &str, sections: &[(String, String)]) -> String {
    let mut out =
        String::from("<!doctype html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str(&format!("<title>{}</title>\n", esc(title)));
    out.push_str(
        "<style>\n\
         body { font-family: sans-serif; max-width: 72rem; margin: 2rem auto; padding: 0 1rem; color: #222; }\n\
         h1 { font-size: 1.6rem; } h2 { font-size: 1.2rem; margin-top: 2rem; }\n\
         table { border-collapse: collapse; margin: 0.5rem 0 1rem; }\n\
         td, th { border: 1px solid #bbb; padding: 0.25rem 0.6rem; font-size: 0.9rem; text-align: left; }\n\
         svg { max-width: 100%; height: auto; }\n\
         </style>\n</head>\n<body>\n",
    );
    out.push_str(&format!("<h1>{}</h1>\n", esc(title)));
    for (heading, body) in sections {
        out.push_str(&format!("<h2>{}</h2>\n", esc(heading)));
        out.push_str(body);
        out.push('\n');
    }
    out.push_str("</body>\n</html>\n");
    out
}

/// Two-column key/value HTML table.
pub fn kv_table(rows: &[(&str, String)]) -> String {
    let mut out = String::from("<table>\n");
    for (key, value) in rows {
        out.push_str(&format!(
            "<tr><th>{}</th><td>{}</td></tr>\n",
            esc(key),
            esc(value)
        ));
    }
    out.push_str("</table>\n");
    out
}
