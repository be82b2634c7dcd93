//! Minimal static SVG line charts: no dependencies, diffable text output.

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn fmt(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Render one polyline per series against a shared x column.
pub fn line_chart(x_label: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let (x_min, x_max) = bounds(x);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, values) in series {
        let (lo, hi) = bounds(values);
        y_min = y_min.min(lo);
        y_max = y_max.max(hi);
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let x_span = if (x_max - x_min).abs() < 1e-12 {
        1.0
    } else {
        x_max - x_min
    };

    let sx = |v: f64| MARGIN_LEFT + (v - x_min) / x_span * plot_w;
    let sy = |v: f64| MARGIN_TOP + (1.0 - (v - y_min) / (y_max - y_min)) * plot_h;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n",
        MARGIN_LEFT + plot_w
    ));
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{MARGIN_TOP}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));

    // ticks
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x_min + t * x_span;
        let xp = sx(xv);
        out.push_str(&format!(
            "<line x1=\"{xp}\" y1=\"{y0}\" x2=\"{xp}\" y2=\"{}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 20.0,
            fmt(xv)
        ));
        let yv = y_min + t * (y_max - y_min);
        let yp = sy(yv);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{yp}\" x2=\"{x0}\" y2=\"{yp}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 8.0,
            yp + 4.0,
            fmt(yv)
        ));
    }

    // axis labels
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    let y_label = series
        .iter()
        .map(|(name, _)| name.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&y_label)
    ));

    // series
    for (i, (_, values)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = x
            .iter()
            .zip(values)
            .map(|(&xv, &yv)| format!("{:.2},{:.2}", sx(xv), sy(yv)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
    }

    // legend
    for (i, (name, _)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_TOP + 8.0 + i as f64 * 18.0;
        let x = MARGIN_LEFT + plot_w - 180.0;
        out.push_str(&format!(
            "<rect x=\"{x}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            y - 10.0
        ));
        out.push_str(&format!(
            "<text class=\"legend-entry\" x=\"{}\" y=\"{y}\">{}</text>\n",
            x + 18.0,
            escape(name)
        ));
    }

    out.push_str("</svg>\n");
    out
}

fn bounds(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series_with_all_points() {
        let x: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (v / 20.0).sin()).collect();
        let svg = line_chart("step", &x, &[("wave".to_string(), y)]);
        assert_eq!(svg.matches("<polyline").count(), 1);
        let points = svg.split("points=\"").nth(1).unwrap();
        let points = &points[..points.find('"').unwrap()];
        assert_eq!(points.split(' ').count(), 200);
    }

    #[test]
    fn legend_lists_every_series() {
        let x = vec![0.0, 1.0, 2.0];
        let series = vec![
            ("a".to_string(), vec![0.0, 1.0, 0.0]),
            ("b".to_string(), vec![1.0, 0.0, 1.0]),
        ];
        let svg = line_chart("step", &x, &series);
        assert_eq!(svg.matches("class=\"legend-entry\"").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn constant_series_is_still_renderable() {
        let x = vec![0.0, 1.0];
        let svg = line_chart("step", &x, &[("flat".to_string(), vec![3.0, 3.0])]);
        assert!(svg.contains("<polyline"));
        assert!(!svg.contains("NaN"));
    }
}
