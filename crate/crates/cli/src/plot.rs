//! Learning-curve plots as standalone SVG: mean error against step with a
//! +-1 std band, on a log y-axis.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::results::{aggregate, read_results, AggregateRow, ResultRow};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// Which error column to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Average,
    Worst,
}

struct Curve {
    label: String,
    points: Vec<(f64, f64, f64)>,
    shaded: bool,
}

fn curves(agg: &[AggregateRow], metric: Metric, multi_env: bool) -> Vec<Curve> {
    let mut out: Vec<Curve> = Vec::new();
    let mut last_key = None;
    for r in agg {
        let key = (r.env, r.algo);
        if last_key != Some(key) {
            let label = if multi_env { format!("{} / {}", r.env, r.algo) } else { r.algo.to_string() };
            out.push(Curve { label, points: Vec::new(), shaded: false });
            last_key = Some(key);
        }
        let (m, s) = match metric {
            Metric::Average => (r.mean_error_avg, r.std_error_avg),
            Metric::Worst => (r.mean_error_max, r.std_error_max),
        };
        let c = out.last_mut().expect("curve pushed above");
        c.shaded |= r.runs > 1;
        c.points.push((r.step as f64, m, s));
    }
    out
}

fn tick_label(exp: i32) -> String {
    format!("1e{exp}")
}

/// Renders the SVG for a set of result rows.
pub fn render_svg(rows: &[ResultRow], metric: Metric) -> Result<String> {
    if rows.is_empty() {
        return Err(CliError::Malformed("no result rows to plot".into()));
    }
    let agg = aggregate(rows);
    let multi_env = agg.iter().any(|r| r.env != agg[0].env);
    let curves = curves(&agg, metric, multi_env);

    let x_max = agg.iter().map(|r| r.step as f64).fold(1.0, f64::max);
    let positive = |v: f64| v > 0.0 && v.is_finite();
    let means: Vec<f64> = curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)).filter(|&v| positive(v)).collect();
    if means.is_empty() {
        return Err(CliError::Malformed("no positive errors to draw on a log axis".into()));
    }
    let y_lo_data = means.iter().copied().fold(f64::INFINITY, f64::min);
    let y_hi_data = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.1 + p.2))
        .filter(|&v| positive(v))
        .fold(0.0, f64::max);
    let lo_exp = y_lo_data.log10().floor() as i32;
    let hi_exp = (y_hi_data.log10().ceil() as i32).max(lo_exp + 1);
    let (ly0, ly1) = (lo_exp as f64, hi_exp as f64);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + plot_w * x / x_max;
    let sy = |y: f64| {
        let l = y.max(10f64.powf(ly0)).log10();
        TOP + plot_h * (1.0 - (l - ly0) / (ly1 - ly0))
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for e in lo_exp..=hi_exp {
        let y = sy(10f64.powi(e));
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + plot_w);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(e));
    }
    for i in 0..=5 {
        let step = x_max * i as f64 / 5.0;
        let x = sx(step);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eeeeee"/>"##, TOP + plot_h);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{:.0}</text>"#, TOP + plot_h + 18.0, step);
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let ylabel = match metric {
        Metric::Average => "mean error (average over pairs)",
        Metric::Worst => "mean error (worst pair)",
    };
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#, LEFT + plot_w / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18,{:.2}) rotate(-90)" text-anchor="middle">{ylabel}</text>"#,
        TOP + plot_h / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if c.shaded {
            let mut d = String::new();
            for (j, &(x, m, s)) in c.points.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, sx(x), sy(m + s));
            }
            for &(x, m, s) in c.points.iter().rev() {
                let _ = write!(d, "L{:.2},{:.2} ", sx(x), sy(m - s));
            }
            let _ = writeln!(svg, r#"<path class="band" d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, d);
        }
        let pts: Vec<String> = c.points.iter().map(|&(x, m, _)| format!("{:.2},{:.2}", sx(x), sy(m))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="curve" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 20.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, lx + 25.0);
        let _ = writeln!(svg, r#"<text class="label" x="{}" y="{}">{}</text>"#, lx + 32.0, ly + 4.0, c.label);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads a results CSV and writes its plot. Nothing is written on error.
pub fn emit_plot(input: &Path, output: &Path, metric: Metric) -> Result<()> {
    let file = std::fs::File::open(input).map_err(|e| CliError::io(input, e))?;
    let rows = read_results(file)?;
    let svg = render_svg(&rows, metric)?;
    std::fs::write(output, svg).map_err(|e| CliError::io(output, e))
}
