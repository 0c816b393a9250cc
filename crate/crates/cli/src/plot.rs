//! Minimal SVG rendering for convergence traces. No plotting dependency:
//! a polyline, a running-mean overlay and labelled axes are all a trace
//! needs.

fn map(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi <= lo {
        return (out_lo + out_hi) / 2.0;
    }
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

pub fn trace_svg(values: &[f64], x_label: &str, y_label: &str) -> String {
    let w = 760.0;
    let h = 420.0;
    let ml = 70.0;
    let mr = 20.0;
    let mt = 20.0;
    let mb = 50.0;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = (hi - lo).max(1e-12) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);
    let n = values.len();

    let mut path = String::new();
    for (i, v) in values.iter().enumerate() {
        let x = map(i as f64, 0.0, (n - 1).max(1) as f64, ml, w - mr);
        let y = map(*v, lo, hi, h - mb, mt);
        path.push_str(if i == 0 { "M" } else { "L" });
        path.push_str(&format!("{x:.2},{y:.2} "));
    }

    // running mean
    let mut mean_path = String::new();
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        acc += v;
        let m = acc / (i + 1) as f64;
        let x = map(i as f64, 0.0, (n - 1).max(1) as f64, ml, w - mr);
        let y = map(m, lo, hi, h - mb, mt);
        mean_path.push_str(if i == 0 { "M" } else { "L" });
        mean_path.push_str(&format!("{x:.2},{y:.2} "));
    }

    let mut ticks = String::new();
    for j in 0..=4 {
        let v = lo + (hi - lo) * j as f64 / 4.0;
        let y = map(v, lo, hi, h - mb, mt);
        ticks.push_str(&format!(
            r#"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="rgb(204,204,204)"/><text x="{tx}" y="{ty:.2}" font-size="11" text-anchor="end">{v:.4}</text>"#,
            x0 = ml,
            x1 = w - mr,
            tx = ml - 6.0,
            ty = y + 4.0,
        ));
        let c = (n - 1) as f64 * j as f64 / 4.0;
        let x = map(c, 0.0, (n - 1).max(1) as f64, ml, w - mr);
        ticks.push_str(&format!(
            r#"<text x="{x:.2}" y="{ty}" font-size="11" text-anchor="middle">{c:.0}</text>"#,
            ty = h - mb + 18.0,
        ));
    }

    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect width="{w}" height="{h}" fill="white"/>
{ticks}
<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="rgb(51,51,51)"/>
<path d="{path}" fill="none" stroke="rgb(31,119,180)" stroke-width="1.2"/>
<path d="{mean_path}" fill="none" stroke="rgb(214,39,40)" stroke-width="1.5" stroke-dasharray="5,3"/>
<text x="{cx}" y="{h}" dy="-10" font-size="13" text-anchor="middle">{x_label}</text>
<text x="16" y="{cy}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {cy})">{y_label}</text>
</svg>
"#,
        pw = w - ml - mr,
        ph = h - mt - mb,
        cx = (ml + w - mr) / 2.0,
        cy = (mt + h - mb) / 2.0,
    )
}
