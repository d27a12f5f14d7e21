use std::fmt::Write;

use hais_core::{Estimator, SweepRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn color(e: Estimator) -> &'static str {
    match e {
        Estimator::Hais => "#1f4fd1",
        Estimator::AisMh => "#d1281f",
        Estimator::AisHmcReset => "#2a9d3a",
    }
}

fn marker(out: &mut String, e: Estimator, x: f64, y: f64) {
    let c = color(e);
    match e {
        Estimator::Hais => {
            let _ = write!(
                out,
                r#"<path d="M{:.1} {:.1}l8 8m0 -8l-8 8" stroke="{c}" stroke-width="1.5"/>"#,
                x - 4.0,
                y - 4.0
            );
        }
        Estimator::AisMh => {
            let _ = write!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{c}"/>"#);
        }
        Estimator::AisHmcReset => {
            let _ = write!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="6" height="6" fill="none" stroke="{c}"/>"#,
                x - 3.0,
                y - 3.0
            );
        }
    }
    out.push('\n');
}

/// log Ẑ against log10 N, one series per estimator, the mean over repeats
/// joined by a line, and the true value as a dashed line when known.
pub fn render(rows: &[SweepRow<f64>], estimators: &[Estimator], truth: Option<f64>) -> String {
    let xs: Vec<f64> = rows.iter().map(|r| (r.n_distributions as f64).log10()).collect();
    let (mut x0, mut x1) = xs.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let finite: Vec<f64> = rows.iter().map(|r| r.log_z).chain(truth).filter(|v| v.is_finite()).collect();
    let (mut y0, mut y1) = finite.iter().fold((f64::MAX, f64::MIN), |(a, b), &y| (a.min(y), b.max(y)));
    if finite.is_empty() {
        (y0, y1) = (0.0, 1.0);
    }
    let pad = ((y1 - y0) * 0.08).max(1e-3);
    y0 -= pad;
    y1 += pad;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let mut ns: Vec<usize> = rows.iter().map(|r| r.n_distributions).collect();
    ns.sort_unstable();
    ns.dedup();
    for n in &ns {
        let x = px((*n as f64).log10());
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{b:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{n}</text>"#,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            b = TOP + plot_h
        );
    }
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">intermediate distributions N</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">log Z estimate</text>"#,
        TOP + plot_h / 2.0
    );

    if let Some(t) = truth {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line class="truth" x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#1f4fd1" stroke-dasharray="6 4"/>"##,
            LEFT + plot_w
        );
    }

    for (i, &e) in estimators.iter().enumerate() {
        let mut means = Vec::new();
        for &n in &ns {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.estimator == e && r.n_distributions == n && r.log_z.is_finite())
                .map(|r| r.log_z)
                .collect();
            for &v in &vals {
                marker(&mut s, e, px((n as f64).log10()), py(v));
            }
            if !vals.is_empty() {
                means.push((n, vals.iter().sum::<f64>() / vals.len() as f64));
            }
        }
        let points: Vec<String> = means
            .iter()
            .map(|&(n, m)| format!("{:.1},{:.1}", px((n as f64).log10()), py(m)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
            points.join(" "),
            color(e)
        );
        let ly = TOP + 20.0 + 22.0 * i as f64;
        marker(&mut s, e, WIDTH - RIGHT + 20.0, ly);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, WIDTH - RIGHT + 32.0, ly + 4.0, e.name());
    }
    if truth.is_some() {
        let ly = TOP + 20.0 + 22.0 * estimators.len() as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r##"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="#1f4fd1" stroke-dasharray="6 4"/><text x="{:.1}" y="{:.1}">true value</text>"##,
            lx + 16.0,
            lx + 20.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
