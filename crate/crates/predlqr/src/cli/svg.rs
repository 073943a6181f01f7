//! Hand-rolled single-series SVG polyline charts. Self-contained output, no
//! external renderer.

pub struct ChartSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_y: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 80.0; // left margin
const MR: f64 = 24.0;
const MT: f64 = 44.0;
const MB: f64 = 56.0;

fn tick_values(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        fmt_compact(v)
    } else {
        format!("{v:.1e}")
    }
}

fn fmt_compact(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Renders one polyline through `points`. With `log_y`, points with y <= 0
/// are dropped and the axis is decorated in powers of ten.
pub fn polyline_chart(points: &[(f64, f64)], spec: &ChartSpec) -> String {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!spec.log_y || *y > 0.0))
        .map(|(x, y)| (x, if spec.log_y { y.log10() } else { y }))
        .collect();
    let (x_lo, x_hi) = usable
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
            (lo.min(*x), hi.max(*x))
        });
    let (y_lo, y_hi) = usable
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, y)| {
            (lo.min(*y), hi.max(*y))
        });
    let (x_lo, x_hi) = pad_range(x_lo, x_hi);
    let (y_lo, y_hi) = pad_range(y_lo, y_hi);
    let sx = |x: f64| ML + (x - x_lo) / (x_hi - x_lo) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>\n",
        W / 2.0,
        spec.title
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    // ticks
    for tx in tick_values(x_lo, x_hi, 6) {
        let px = sx(tx);
        s.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB,
            H - MB + 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>\n",
            H - MB + 18.0,
            fmt_tick(tx)
        ));
    }
    for ty in tick_values(y_lo, y_hi, 5) {
        let py = sy(ty);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{ML}\" y2=\"{py}\" stroke=\"black\"/>\n",
            ML - 5.0
        ));
        let label = if spec.log_y {
            format!("1e{}", fmt_compact(ty))
        } else {
            fmt_tick(ty)
        };
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{label}</text>\n",
            ML - 8.0,
            py + 4.0
        ));
    }
    // labels
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">{}</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0,
        spec.x_label
    ));
    s.push_str(&format!(
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" transform=\"rotate(-90 20 {})\">{}</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        spec.y_label
    ));
    // the series
    if !usable.is_empty() {
        let pts: Vec<String> = usable
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"#d95f02\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        for (x, y) in &usable {
            s.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#d95f02\"/>\n",
                sx(*x),
                sy(*y)
            ));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_self_contained_and_small() {
        let points: Vec<(f64, f64)> = (0..20)
            .map(|i| (i as f64, (0.5f64).powi(i) * 3.0))
            .collect();
        let svg = polyline_chart(
            &points,
            &ChartSpec {
                title: "decay",
                x_label: "k",
                y_label: "regret",
                log_y: true,
            },
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(!svg.contains("href"));
        assert!(svg.len() < 1_000_000);
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn log_scale_drops_nonpositive_points() {
        let svg = polyline_chart(
            &[(0.0, 1.0), (1.0, 0.0), (2.0, 0.5)],
            &ChartSpec {
                title: "t",
                x_label: "x",
                y_label: "y",
                log_y: true,
            },
        );
        assert!(svg.contains("polyline"));
    }
}
