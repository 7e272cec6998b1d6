//! Rate-exponent comparison curves as CSV and a minimal hand-written SVG.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::measures::fmt17;

use super::rates::{rate_exponent_hr, rate_exponent_ours};

/// `0, 0.25, ..., 100`: covers both kinks for `d ∈ {12, 100}` and `α = 60`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=400).map(|k| k as f64 * 0.25).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FigurePanel {
    pub dim: usize,
    pub alpha: Vec<f64>,
    pub ours: Vec<f64>,
    pub hr: Vec<f64>,
    /// `α = d/2 - 2`, where `ours` switches formula.
    pub kink: f64,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

/// One CSV (`alpha,ours,hr`) and one SVG per dimension.
pub fn figure1(dims: &[usize], alpha_grid: &[f64], out: &Path) -> Result<Vec<FigurePanel>> {
    if alpha_grid.is_empty() || alpha_grid.windows(2).any(|w| !(w[0] < w[1])) || alpha_grid[0] < 0.0 {
        return Err(Error::InvalidArgument(
            "alpha grid must be nonempty, increasing and >= 0".into(),
        ));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument("dimensions must be >= 1".into()));
    }
    std::fs::create_dir_all(out)?;
    let mut panels = Vec::with_capacity(dims.len());
    for &d in dims {
        let df = d as f64;
        let ours: Vec<f64> = alpha_grid.iter().map(|&a| rate_exponent_ours(a, df)).collect();
        let hr: Vec<f64> = alpha_grid.iter().map(|&a| rate_exponent_hr(a, df)).collect();
        let csv_path = out.join(format!("figure1_d{d}.csv"));
        let svg_path = out.join(format!("figure1_d{d}.svg"));
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::Io(e.into()))?;
        w.write_record(["alpha", "ours", "hr"]).map_err(|e| Error::Io(e.into()))?;
        for ((a, o), h) in alpha_grid.iter().zip(&ours).zip(&hr) {
            w.write_record([fmt17(*a), fmt17(*o), fmt17(*h)])
                .map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        let panel = FigurePanel {
            dim: d,
            alpha: alpha_grid.to_vec(),
            ours,
            hr,
            kink: df / 2.0 - 2.0,
            csv: csv_path,
            svg: svg_path.clone(),
        };
        std::fs::write(&svg_path, render_svg(&panel))?;
        panels.push(panel);
    }
    Ok(panels)
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

fn render_svg(p: &FigurePanel) -> String {
    let (a0, a1) = (p.alpha[0], *p.alpha.last().expect("nonempty grid"));
    let span = if a1 > a0 { a1 - a0 } else { 1.0 };
    let sx = |a: f64| LEFT + (a - a0) / span * (W - LEFT - RIGHT);
    let sy = |v: f64| H - BOTTOM - v * (H - TOP - BOTTOM);
    let poly = |ys: &[f64]| {
        p.alpha
            .iter()
            .zip(ys)
            .map(|(a, v)| format!("{:.2},{:.2}", sx(*a), sy(*v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">Rate exponents, d = {}</text>"#,
        W / 2.0,
        p.dim
    );
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{:.2} H{:.2}" stroke="black" fill="none"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{LEFT}" y2="{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 5.0,
            sy(v),
            sy(v),
            LEFT - 8.0,
            sy(v) + 4.0
        );
    }
    for k in 0..=5 {
        let a = a0 + span * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(a),
            H - BOTTOM,
            sx(a),
            H - BOTTOM + 5.0,
            sx(a),
            H - BOTTOM + 20.0,
            trim(a)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">smoothness α</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">exponent e in n^(-e)</text>"#,
        (TOP + H - BOTTOM) / 2.0
    );
    if p.kink >= a0 && p.kink <= a1 {
        let _ = writeln!(
            s,
            r#"<line id="kink" x1="{:.2}" y1="{TOP}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/><text x="{:.2}" y="{:.2}" fill="gray">α = {}</text>"#,
            sx(p.kink),
            sx(p.kink),
            H - BOTTOM,
            sx(p.kink) + 4.0,
            TOP + 12.0,
            trim(p.kink)
        );
    }
    let _ = writeln!(
        s,
        r##"<polyline id="ours" fill="none" stroke="#1f77b4" stroke-width="2" points="{}"/>"##,
        poly(&p.ours)
    );
    let _ = writeln!(
        s,
        r##"<polyline id="hr" fill="none" stroke="#ff7f0e" stroke-width="2" stroke-dasharray="6 3" points="{}"/>"##,
        poly(&p.hr)
    );
    let lx = W - RIGHT - 190.0;
    let ly = H - BOTTOM - 50.0;
    let _ = writeln!(
        s,
        r##"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="#1f77b4" stroke-width="2"/><text x="{:.2}" y="{:.2}">plug-in semi-dual (ours)</text>"##,
        lx + 24.0,
        lx + 30.0,
        ly + 4.0
    );
    let _ = writeln!(
        s,
        r##"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ff7f0e" stroke-width="2" stroke-dasharray="6 3"/><text x="{:.2}" y="{:.2}">Hutter and Rigollet</text>"##,
        ly + 18.0,
        lx + 24.0,
        ly + 18.0,
        lx + 30.0,
        ly + 22.0
    );
    s.push_str("</svg>\n");
    s
}

fn trim(v: f64) -> String {
    let t = format!("{v:.2}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_both_panels() {
        let dir = tempfile::tempdir().unwrap();
        let panels = figure1(&[12, 100], &default_alpha_grid(), dir.path()).unwrap();
        assert_eq!(panels.len(), 2);
        for p in &panels {
            assert!(p.csv.exists() && p.svg.exists());
            let svg = std::fs::read_to_string(&p.svg).unwrap();
            assert!(svg.contains(r#"id="kink""#) && svg.contains(r#"id="ours""#) && svg.contains(r#"id="hr""#));
        }
    }

    #[test]
    fn rejects_bad_grid() {
        let dir = tempfile::tempdir().unwrap();
        assert!(figure1(&[12], &[], dir.path()).is_err());
        assert!(figure1(&[12], &[1.0, 0.5], dir.path()).is_err());
    }
}
