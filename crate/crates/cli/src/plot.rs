//! Standalone SVG plots, hand-rolled XML so there is no rendering dependency.

use fcpipe_core::importance::ImportanceRecord;
use fcpipe_core::search::KdeResult;
use fcpipe_core::synthgen::FunctionalLabel;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// White -> base color ramp.
fn ramp(base: (u8, u8, u8), t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |c: u8| (255.0 + (c as f64 - 255.0) * t).round() as u8;
    format!("rgb({},{},{})", mix(base.0), mix(base.1), mix(base.2))
}

const TOP_COLOR: (u8, u8, u8) = (31, 119, 180); // blue
const BOTTOM_COLOR: (u8, u8, u8) = (230, 126, 34); // orange

struct Panel {
    x0: f64,
    y0: f64,
    width: f64,
    height: f64,
}

impl Panel {
    /// Data coordinates -> pixel coordinates (y grows downward in SVG).
    fn to_px(&self, fx: f64, fy: f64) -> (f64, f64) {
        (self.x0 + fx * self.width, self.y0 + (1.0 - fy) * self.height)
    }
}

fn heatmap_panel(
    svg: &mut String,
    panel: &Panel,
    title: &str,
    density: &ndarray::Array2<f64>,
    grid_x: &[f64],
    grid_y: &[f64],
    peak: (usize, usize),
    base: (u8, u8, u8),
) {
    let (nx, ny) = density.dim();
    let max = density.iter().fold(0.0f64, |m, &v| m.max(v)).max(1e-300);
    // Stride down to at most 80 cells per axis to keep files small.
    let sx = nx.div_ceil(80);
    let sy = ny.div_ceil(80);

    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" font-family=\"sans-serif\">{}</text>\n",
        panel.x0,
        panel.y0 - 8.0,
        xml_escape(title)
    ));

    let span_x = grid_x[nx - 1] - grid_x[0];
    let span_y = grid_y[ny - 1] - grid_y[0];
    for i in (0..nx).step_by(sx) {
        for j in (0..ny).step_by(sy) {
            let i_hi = (i + sx).min(nx - 1);
            let j_hi = (j + sy).min(ny - 1);
            let fx0 = (grid_x[i] - grid_x[0]) / span_x;
            let fx1 = (grid_x[i_hi] - grid_x[0]) / span_x;
            let fy0 = (grid_y[j] - grid_y[0]) / span_y;
            let fy1 = (grid_y[j_hi] - grid_y[0]) / span_y;
            let (px, py1) = panel.to_px(fx0, fy1);
            let (px1, py) = panel.to_px(fx1, fy0);
            let fill = ramp(base, density[(i, j)] / max);
            svg.push_str(&format!(
                "<rect x=\"{px:.1}\" y=\"{py1:.1}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>\n",
                (px1 - px).max(0.1),
                (py - py1).max(0.1),
            ));
        }
    }

    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\">Number of Hidden Layers</text>\n",
        panel.x0 + panel.width / 2.0 - 60.0,
        panel.y0 + panel.height + 26.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\" transform=\"rotate(-90 {:.1} {:.1})\">Neurons per Layer (log2)</text>\n",
        panel.x0 - 10.0,
        panel.y0 + panel.height / 2.0 + 50.0,
        panel.x0 - 10.0,
        panel.y0 + panel.height / 2.0 + 50.0
    ));

    // Peak marker: an asterisk at the peak's data coordinates.
    let peak_fx = (peak.0 as f64 - grid_x[0]) / span_x;
    let peak_fy = ((peak.1 as f64).log2() - grid_y[0]) / span_y;
    let (mx, my) = panel.to_px(peak_fx, peak_fy);
    svg.push_str(&format!(
        "<path class=\"peak-marker\" transform=\"translate({mx:.1} {my:.1})\" \
         d=\"M-6 0H6M0 -6V6M-4.2 -4.2L4.2 4.2M-4.2 4.2L4.2 -4.2\" \
         stroke=\"black\" stroke-width=\"1.6\" fill=\"none\"/>\n"
    ));
}

/// Two heatmap panels (top and bottom quantile densities) with one peak
/// marker each.
pub fn render_kde_svg(result: &KdeResult) -> String {
    let width = 900.0;
    let height = 420.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    let grid_x = result.grid_layers.nodes();
    let grid_y = result.grid_log2_neurons.nodes();
    let top_panel = Panel { x0: 60.0, y0: 40.0, width: 340.0, height: 300.0 };
    let bottom_panel = Panel { x0: 500.0, y0: 40.0, width: 340.0, height: 300.0 };

    heatmap_panel(
        &mut svg,
        &top_panel,
        &format!(
            "Top quantile density (peak {} layers, {} neurons)",
            result.peak_top.0, result.peak_top.1
        ),
        &result.density_top,
        &grid_x,
        &grid_y,
        result.peak_top,
        TOP_COLOR,
    );
    heatmap_panel(
        &mut svg,
        &bottom_panel,
        &format!(
            "Bottom quantile density (peak {} layers, {} neurons)",
            result.peak_bottom.0, result.peak_bottom.1
        ),
        &result.density_bottom,
        &grid_x,
        &grid_y,
        result.peak_bottom,
        BOTTOM_COLOR,
    );

    svg.push_str("</svg>\n");
    svg
}

fn label_color(label: FunctionalLabel) -> (u8, u8, u8) {
    match label {
        FunctionalLabel::Motor => (59, 111, 182),    // blue
        FunctionalLabel::Language => (192, 57, 43),  // red
        FunctionalLabel::Other => (231, 199, 68),    // yellow
    }
}

/// Connections between two functional systems blend their endpoint colors
/// (motor-language lands on purple, and so on).
fn pair_color(pair: (FunctionalLabel, FunctionalLabel)) -> String {
    let a = label_color(pair.0);
    let b = label_color(pair.1);
    format!(
        "rgb({},{},{})",
        (a.0 as u16 + b.0 as u16) / 2,
        (a.1 as u16 + b.1 as u16) / 2,
        (a.2 as u16 + b.2 as u16) / 2
    )
}

/// Horizontal bar chart of the top-k feature importances, bars colored by the
/// functional labels of the connected regions.
pub fn render_importance_svg(records: &[ImportanceRecord]) -> String {
    let bar_h = 18.0;
    let gap = 7.0;
    let left = 190.0;
    let chart_w = 420.0;
    let top = 34.0;
    let width = left + chart_w + 80.0;
    let height = top + records.len() as f64 * (bar_h + gap) + 30.0;

    let max_z = records
        .iter()
        .map(|r| r.z_score)
        .fold(0.0f64, f64::max)
        .max(1e-12);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{left}\" y=\"20\" font-size=\"13\" font-family=\"sans-serif\">Feature importance (z-score of AUROC drop)</text>\n"
    ));

    for (row, r) in records.iter().enumerate() {
        let y = top + row as f64 * (bar_h + gap);
        let len = (r.z_score.max(0.0) / max_z) * chart_w;
        let label = match r.ba_pair {
            Some((a, b)) => format!("r{}-r{} (BA{a}-BA{b})", r.region_pair.0, r.region_pair.1),
            None => format!("r{}-r{}", r.region_pair.0, r.region_pair.1),
        };
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"end\">{}</text>\n",
            left - 8.0,
            y + bar_h - 5.0,
            xml_escape(&label)
        ));
        svg.push_str(&format!(
            "<rect class=\"bar\" x=\"{left}\" y=\"{y:.1}\" width=\"{:.2}\" height=\"{bar_h}\" fill=\"{}\"/>\n",
            len.max(0.5),
            pair_color(r.functional_pair)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\">{:.2}</text>\n",
            left + len.max(0.5) + 6.0,
            y + bar_h - 5.0,
            r.z_score
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
