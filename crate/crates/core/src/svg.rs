//! Minimal self-contained SVG plots: polylines and box-and-whisker glyphs
//! on linear axes. No external assets, no dependencies in the output files.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub(crate) struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: Vec<String>,
    legend: Vec<(String, String)>, // (label, color)
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Plot {
        Plot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            x_range: (f64::INFINITY, f64::NEG_INFINITY),
            y_range: (f64::INFINITY, f64::NEG_INFINITY),
            body: Vec::new(),
            legend: Vec::new(),
        }
    }

    pub fn color(series: usize) -> &'static str {
        PALETTE[series % PALETTE.len()]
    }

    fn include(&mut self, x: f64, y: f64) {
        self.x_range.0 = self.x_range.0.min(x);
        self.x_range.1 = self.x_range.1.max(x);
        self.y_range.0 = self.y_range.0.min(y);
        self.y_range.1 = self.y_range.1.max(y);
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], color: &str, label: Option<&str>) {
        if points.is_empty() {
            return;
        }
        for &(x, y) in points {
            self.include(x, y);
        }
        self.body.push(format!(
            "POLYLINE|{}|{}",
            color,
            points
                .iter()
                .map(|&(x, y)| format!("{x:.6},{y:.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        ));
        if let Some(l) = label {
            self.legend.push((l.to_string(), color.to_string()));
        }
    }

    /// Box-and-whisker glyph from a five-number summary.
    pub fn box_whisker(&mut self, x: f64, five: [f64; 5], half_width: f64, color: &str) {
        let [min, q1, median, q3, max] = five;
        self.include(x - half_width, min);
        self.include(x + half_width, max);
        self.body.push(format!(
            "BOX|{color}|{x:.6}|{half_width:.6}|{min:.6}|{q1:.6}|{median:.6}|{q3:.6}|{max:.6}"
        ));
    }

    pub fn render(&self) -> String {
        let (mut x0, mut x1) = self.x_range;
        let (mut y0, mut y1) = self.y_range;
        if !x0.is_finite() || x0 >= x1 {
            x1 = x0 + 1.0;
        }
        if !y0.is_finite() || y0 >= y1 {
            y1 = y0 + 1.0;
        }
        let pad_y = 0.05 * (y1 - y0);
        y0 -= pad_y;
        y1 += pad_y;
        if x0 == x1 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |y: f64| HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str(&format!(
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"15\">{}</text>\n",
            WIDTH / 2.0,
            xml_escape(&self.title)
        ));
        // axes
        out.push_str(&format!(
            "<line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n\
             <line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n",
            l = MARGIN_L,
            r = WIDTH - MARGIN_R,
            t = MARGIN_T,
            b = HEIGHT - MARGIN_B
        ));
        for k in 0..=5 {
            let fx = x0 + (x1 - x0) * k as f64 / 5.0;
            let fy = y0 + (y1 - y0) * k as f64 / 5.0;
            out.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{b:.1}\" x2=\"{x:.1}\" y2=\"{b2:.1}\" stroke=\"black\"/>\n\
                 <text x=\"{x:.1}\" y=\"{ty:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"11\">{v}</text>\n",
                x = px(fx),
                b = HEIGHT - MARGIN_B,
                b2 = HEIGHT - MARGIN_B + 5.0,
                ty = HEIGHT - MARGIN_B + 18.0,
                v = tick(fx)
            ));
            out.push_str(&format!(
                "<line x1=\"{l:.1}\" y1=\"{y:.1}\" x2=\"{l2:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>\n\
                 <text x=\"{tx:.1}\" y=\"{y2:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
                 font-size=\"11\">{v}</text>\n",
                l = MARGIN_L - 5.0,
                l2 = MARGIN_L,
                y = py(fy),
                tx = MARGIN_L - 8.0,
                y2 = py(fy) + 4.0,
                v = tick(fy)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"13\">{}</text>\n",
            (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
            HEIGHT - 10.0,
            xml_escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"13\" transform=\"rotate(-90 16 {mid:.1})\">{}</text>\n",
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            xml_escape(&self.y_label),
            mid = (MARGIN_T + HEIGHT - MARGIN_B) / 2.0
        ));
        // data
        for item in &self.body {
            let parts: Vec<&str> = item.split('|').collect();
            match parts[0] {
                "POLYLINE" => {
                    let color = parts[1];
                    let pts: String = parts[2]
                        .split(' ')
                        .map(|pair| {
                            let mut it = pair.split(',');
                            let x: f64 = it.next().unwrap().parse().unwrap();
                            let y: f64 = it.next().unwrap().parse().unwrap();
                            format!("{:.1},{:.1} ", px(x), py(y))
                        })
                        .collect();
                    out.push_str(&format!(
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                        pts.trim_end(),
                        color
                    ));
                }
                "BOX" => {
                    let color = parts[1];
                    let x: f64 = parts[2].parse().unwrap();
                    let hw: f64 = parts[3].parse().unwrap();
                    let v: Vec<f64> = parts[4..9].iter().map(|s| s.parse().unwrap()).collect();
                    let (cx, l, r) = (px(x), px(x - hw), px(x + hw));
                    let (ymin, yq1, ymed, yq3, ymax) =
                        (py(v[0]), py(v[1]), py(v[2]), py(v[3]), py(v[4]));
                    out.push_str(&format!(
                        "<line x1=\"{cx:.1}\" y1=\"{ymin:.1}\" x2=\"{cx:.1}\" y2=\"{yq1:.1}\" stroke=\"{color}\"/>\n\
                         <line x1=\"{cx:.1}\" y1=\"{yq3:.1}\" x2=\"{cx:.1}\" y2=\"{ymax:.1}\" stroke=\"{color}\"/>\n\
                         <rect x=\"{l:.1}\" y=\"{yq3:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" \
                         fill=\"none\" stroke=\"{color}\"/>\n\
                         <line x1=\"{l:.1}\" y1=\"{ymed:.1}\" x2=\"{r:.1}\" y2=\"{ymed:.1}\" \
                         stroke=\"{color}\" stroke-width=\"2\"/>\n",
                        w = r - l,
                        h = yq1 - yq3
                    ));
                }
                _ => unreachable!(),
            }
        }
        // legend
        for (k, (label, color)) in self.legend.iter().enumerate() {
            let y = MARGIN_T + 14.0 + 16.0 * k as f64;
            out.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{x2:.1}\" y2=\"{y:.1}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n\
                 <text x=\"{tx:.1}\" y=\"{ty:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                xml_escape(label),
                x = WIDTH - MARGIN_R - 150.0,
                x2 = WIDTH - MARGIN_R - 130.0,
                tx = WIDTH - MARGIN_R - 124.0,
                ty = y + 4.0
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_valid_standalone_svg() {
        let mut plot = Plot::new("demo", "x", "y");
        plot.polyline(
            &[(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)],
            Plot::color(0),
            Some("series"),
        );
        plot.box_whisker(1.0, [0.1, 0.3, 0.5, 0.8, 1.2], 0.05, Plot::color(1));
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("rect"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let build = || {
            let mut p = Plot::new("t", "x", "y");
            p.polyline(&[(0.0, 1.0), (3.0, 4.0)], Plot::color(0), None);
            p.render()
        };
        assert_eq!(build(), build());
    }
}
