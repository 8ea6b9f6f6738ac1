//! Minimal standalone SVG line charts. CSV files are the contract; these
//! plots are a convenience view of the same rows.

use std::path::Path;

use fedcrit_core::error::Result;
use fedcrit_core::report::{DiagnosticsRow, ResultRow, SummaryRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl LinePlot {
    pub fn write_svg(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    fn render(&self) -> String {
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
        if !x_min.is_finite() {
            x_min = 0.0;
            x_max = 1.0;
        }
        if !y_min.is_finite() {
            y_min = 0.0;
            y_max = 1.0;
        }
        if (x_max - x_min).abs() < 1e-12 {
            x_max = x_min + 1.0;
        }
        // Metric-style y axes look best anchored near [0, 1].
        y_min = y_min.min(0.0);
        y_max = (y_max * 1.05).max(y_max + 1e-9);
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
        let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        ));

        // Axes.
        svg.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
             <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
            l = MARGIN_LEFT,
            r = MARGIN_LEFT + plot_w,
            t = MARGIN_TOP,
            b = MARGIN_TOP + plot_h,
        ));
        for i in 0..=4 {
            let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
            let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{:.2}</text>\n",
                MARGIN_LEFT - 8.0,
                sy(fy) + 4.0,
                fy
            ));
            svg.push_str(&format!(
                "<line x1=\"{l}\" y1=\"{y}\" x2=\"{r}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n",
                l = MARGIN_LEFT,
                r = MARGIN_LEFT + plot_w,
                y = sy(fy),
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                sx(fx),
                MARGIN_TOP + plot_h + 20.0,
                trim_number(fx)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" \
             transform=\"rotate(-90 18 {y})\">{}</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label),
            y = MARGIN_TOP + plot_h / 2.0,
        ));

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                pts.join(" ")
            ));
            for &(x, y) in &s.points {
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.6\" fill=\"{color}\"/>\n",
                    sx(x),
                    sy(y)
                ));
            }
            let ly = MARGIN_TOP + 16.0 * i as f64;
            let lx = WIDTH - MARGIN_RIGHT + 12.0;
            svg.push_str(&format!(
                "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
                 stroke-width=\"2\"/>\n",
                lx + 18.0
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
                lx + 24.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn trim_number(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Final-round F-score against worker count, one line per method.
pub fn fscore_vs_workers(summary: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let mut methods: Vec<String> = Vec::new();
    for row in summary {
        if !methods.contains(&row.method) {
            methods.push(row.method.clone());
        }
    }
    let series = methods
        .into_iter()
        .map(|m| Series {
            points: summary
                .iter()
                .filter(|r| r.method == m)
                .map(|r| (r.n_workers as f64, r.metrics.f_score))
                .collect(),
            label: m,
        })
        .collect();
    LinePlot {
        title: "F-score vs number of worker nodes".into(),
        x_label: "worker nodes".into(),
        y_label: "median F-score".into(),
        series,
    }
    .write_svg(path)
}

/// Homogeneity of the data division against the number of partitions.
pub fn homogeneity_vs_k(rows: &[DiagnosticsRow], path: impl AsRef<Path>) -> Result<()> {
    LinePlot {
        title: "Homogeneity of the data division".into(),
        x_label: "partitions (worker nodes)".into(),
        y_label: "homogeneity".into(),
        series: vec![Series {
            label: "homogeneity".into(),
            points: rows.iter().map(|r| (r.k as f64, r.homogeneity)).collect(),
        }],
    }
    .write_svg(path)
}

/// Minority-free and below-global-ratio partition counts against k.
pub fn critical_imbalance_vs_k(rows: &[DiagnosticsRow], path: impl AsRef<Path>) -> Result<()> {
    LinePlot {
        title: "Critical imbalance of the data division".into(),
        x_label: "partitions (worker nodes)".into(),
        y_label: "partitions".into(),
        series: vec![
            Series {
                label: "minority-free".into(),
                points: rows.iter().map(|r| (r.k as f64, r.minority_free as f64)).collect(),
            },
            Series {
                label: "below global ratio".into(),
                points: rows.iter().map(|r| (r.k as f64, r.below_global as f64)).collect(),
            },
        ],
    }
    .write_svg(path)
}

/// Per-round F-score of each local model and the global model for the
/// largest configured worker count, first seed and first method.
pub fn per_round_fscore(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let Some(pick) = rows
        .iter()
        .map(|r| (r.n_workers, r.seed, r.method.clone()))
        .max_by_key(|(k, _, _)| *k)
    else {
        return Ok(());
    };
    let (k, _, method) = pick;
    let seed = rows
        .iter()
        .filter(|r| r.n_workers == k && r.method == method)
        .map(|r| r.seed)
        .min()
        .expect("non-empty selection");
    let selected: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.n_workers == k && r.seed == seed && r.method == method)
        .collect();
    let mut scopes: Vec<String> = Vec::new();
    for r in &selected {
        if !scopes.contains(&r.scope) {
            scopes.push(r.scope.clone());
        }
    }
    let series = scopes
        .into_iter()
        .map(|scope| Series {
            points: selected
                .iter()
                .filter(|r| r.scope == scope)
                .map(|r| (r.round as f64, r.metrics.f_score))
                .collect(),
            label: scope,
        })
        .collect();
    LinePlot {
        title: format!("{method}: per-round F-score at {k} workers (seed {seed})"),
        x_label: "communication round".into(),
        y_label: "F-score".into(),
        series,
    }
    .write_svg(path)
}
