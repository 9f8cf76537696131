//! CSV emission, SVG line plots and `key = value` config files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::{ClosenessResult, FigureResult, FlowResult, PerturbSweepResult, SweepRow};
use crate::learners::RunTrace;

/// Round-trip float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// `t,loss,grad_norm,perturb_norm,x_0..x_{d-1}[,u_0..u_{d-1}]`.
pub fn trace_csv(trace: &RunTrace) -> String {
    let d = trace.final_x.len();
    let with_u = trace.records.iter().any(|r| r.u.is_some());
    let mut header: Vec<String> = ["t", "loss", "grad_norm", "perturb_norm"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..d).map(|i| format!("x_{i}")));
    if with_u {
        header.extend((0..d).map(|i| format!("u_{i}")));
    }
    let mut out = String::new();
    push_row(&mut out, &header);
    for r in &trace.records {
        let mut row = vec![
            r.t.to_string(),
            fmt_f64(r.loss),
            fmt_f64(r.grad_norm),
            fmt_f64(r.perturb_norm),
        ];
        row.extend(r.x.iter().map(|&v| fmt_f64(v)));
        if let Some(u) = &r.u {
            row.extend(u.iter().map(|&v| fmt_f64(v)));
        }
        push_row(&mut out, &row);
    }
    out
}

/// `T,eta,seed,regret,comparator,certificate`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("T,eta,seed,regret,comparator,certificate\n");
    for r in rows {
        push_row(
            &mut out,
            &[
                r.horizon.to_string(),
                fmt_f64(r.eta),
                r.seed.to_string(),
                fmt_f64(r.regret),
                fmt_f64(r.comparator),
                fmt_f64(r.certificate),
            ],
        );
    }
    out
}

pub fn closeness_csv(r: &ClosenessResult) -> String {
    let mut out = String::from("eta,max_distance\n");
    for (e, d) in &r.rows {
        push_row(&mut out, &[fmt_f64(*e), fmt_f64(*d)]);
    }
    out
}

pub fn flow_csv(r: &FlowResult) -> String {
    let mut out = String::from("h,max_deviation\n");
    for (h, d) in &r.rows {
        push_row(&mut out, &[fmt_f64(*h), fmt_f64(*d)]);
    }
    out
}

pub fn figure_csv(r: &FigureResult) -> String {
    let d = r.eg.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("eg_{i}")));
    header.extend((0..d).map(|i| format!("other_{i}")));
    header.push("distance".into());
    let mut out = String::new();
    push_row(&mut out, &header);
    for (t, ((a, b), dist)) in r.eg.iter().zip(&r.other).zip(&r.distances).enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(a.iter().chain(b).map(|&v| fmt_f64(v)));
        row.push(fmt_f64(*dist));
        push_row(&mut out, &row);
    }
    out
}

/// `rule,T,eta,magnitude,mean_regret,bound_G,bound_GF`.
pub fn perturb_csv(r: &PerturbSweepResult) -> String {
    let mut out = String::from("rule,T,eta,magnitude,mean_regret,bound_G,bound_GF\n");
    for b in &r.bounds {
        let mean = r
            .per_rule
            .iter()
            .find(|(rule, _)| *rule == b.rule)
            .and_then(|(_, s)| s.means.iter().find(|m| m.0 == b.horizon))
            .map_or(f64::NAN, |m| m.1);
        push_row(
            &mut out,
            &[
                b.rule.name().to_string(),
                b.horizon.to_string(),
                fmt_f64(b.eta),
                fmt_f64(b.magnitude),
                fmt_f64(mean),
                fmt_f64(b.bound_g),
                fmt_f64(b.bound_gf),
            ],
        );
    }
    out
}

/// Parsed numeric CSV: header and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Non-numeric cells parse as NaN.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::invalid("empty CSV"))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let rows = lines
            .enumerate()
            .map(|(i, l)| {
                let cells: Vec<f64> = l
                    .split(',')
                    .map(|c| c.trim().parse().unwrap_or(f64::NAN))
                    .collect();
                if cells.len() != header.len() {
                    return Err(Error::invalid(format!(
                        "CSV row {} has {} cells, header has {}",
                        i + 2,
                        cells.len(),
                        header.len()
                    )));
                }
                Ok(cells)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("no column named {name:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub log_x: bool,
    pub log_y: bool,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

impl Plot {
    /// Plot `y_cols` against `x_col` of a CSV table.
    pub fn from_table(
        table: &Table,
        x_col: &str,
        y_cols: &[&str],
        log_x: bool,
        log_y: bool,
    ) -> Result<Self> {
        let xi = table.column(x_col)?;
        let series = y_cols
            .iter()
            .map(|name| {
                let yi = table.column(name)?;
                Ok(Series {
                    name: name.to_string(),
                    points: table.rows.iter().map(|r| (r[xi], r[yi])).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Plot {
            x_label: x_col.to_string(),
            y_label: y_cols.join(", "),
            series,
            log_x,
            log_y,
        })
    }

    /// 800×600 SVG line plot; points that are non-finite or non-positive on a log axis are dropped.
    pub fn to_svg(&self) -> Result<String> {
        let tx = |v: f64, log: bool| if log { v.log10() } else { v };
        let keep = |&(x, y): &(f64, f64)| {
            let (a, b) = (tx(x, self.log_x), tx(y, self.log_y));
            (a.is_finite() && b.is_finite()).then_some((a, b))
        };
        let series: Vec<(&str, Vec<(f64, f64)>)> = self
            .series
            .iter()
            .map(|s| (s.name.as_str(), s.points.iter().filter_map(keep).collect()))
            .collect();
        let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
        if all.is_empty() {
            return Err(Error::invalid("nothing to plot"));
        }
        let range = |f: fn(&(f64, f64)) -> f64| {
            let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = range(|p| p.0);
        let (y0, y1) = range(|p| p.1);
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let label = |v: f64, log: bool| {
                if log {
                    format!("1e{v:.2}")
                } else {
                    format!("{v:.3e}")
                }
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                px(xv),
                HEIGHT - MARGIN + 16.0,
                label(xv, self.log_x)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
                MARGIN - 6.0,
                py(yv) + 4.0,
                label(yv, self.log_y)
            );
        }
        let axis = |name: &str, log: bool| {
            if log {
                format!("log10 {name}")
            } else {
                name.to_string()
            }
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 20.0,
            escape(&axis(&self.x_label, self.log_x))
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.1}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&axis(&self.y_label, self.log_y))
        );
        for (k, (name, pts)) in series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{}</text>"#,
                MARGIN + 10.0,
                MARGIN + 16.0 * (k as f64 + 1.0),
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("config line {} is not `key = value`", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::config(format!(
                "config line {} has an empty key",
                i + 1
            )));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn config_parsing() {
        let m = parse_config("# header\npair = eg\n T=100 # horizon\n\n").unwrap();
        assert_eq!(m["pair"], "eg");
        assert_eq!(m["T"], "100");
        assert!(parse_config("nonsense").is_err());
        assert!(parse_config("= 3").is_err());
    }

    #[test]
    fn table_and_plot() {
        let t = Table::parse("T,regret\n10,3.1\n100,10.2\n1000,31.0\n").unwrap();
        assert_eq!(t.column("regret").unwrap(), 1);
        assert!(t.column("nope").is_err());
        let svg = Plot::from_table(&t, "T", &["regret"], true, true)
            .unwrap()
            .to_svg()
            .unwrap();
        assert!(
            svg.starts_with("<svg") && svg.contains("polyline") && svg.contains("log10 regret")
        );
        assert!(Table::parse("a,b\n1\n").is_err());
    }
}
