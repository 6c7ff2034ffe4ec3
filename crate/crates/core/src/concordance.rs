//! Win ratios and metric agreement over experiments, the discordance ratio
//! and the concordance plot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricVector};
use crate::stats::{wilson_interval, Z_99};

/// Fold metrics of one technique on one dataset variant. An experiment is
/// a `(variant, fold)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: usize,
    pub p_min: f64,
    pub technique: String,
    pub fold: usize,
    pub metrics: MetricVector,
}

/// Records arranged as `table[experiment][technique]`.
struct Experiments<'a> {
    techniques: Vec<String>,
    table: Vec<Vec<&'a MetricVector>>,
}

fn arrange(records: &[RunRecord]) -> Result<Experiments<'_>> {
    let techniques: Vec<String> = records
        .iter()
        .map(|r| r.technique.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if techniques.is_empty() {
        return Err(Error::IncompleteRecords("no records".into()));
    }
    let index: BTreeMap<&str, usize> = techniques.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut cells: BTreeMap<(usize, usize), Vec<Option<&MetricVector>>> = BTreeMap::new();
    for r in records {
        let slot = &mut cells.entry((r.variant, r.fold)).or_insert_with(|| vec![None; techniques.len()])
            [index[r.technique.as_str()]];
        if slot.is_some() {
            return Err(Error::IncompleteRecords(format!(
                "duplicate record for `{}` at variant {} fold {}",
                r.technique, r.variant, r.fold
            )));
        }
        *slot = Some(&r.metrics);
    }
    let mut table = Vec::with_capacity(cells.len());
    for ((v, f), row) in cells {
        let row = row
            .into_iter()
            .enumerate()
            .map(|(t, m)| {
                m.ok_or_else(|| {
                    Error::IncompleteRecords(format!("`{}` missing at variant {v} fold {f}", techniques[t]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        table.push(row);
    }
    Ok(Experiments { techniques, table })
}

/// Indices of the techniques with the highest value.
fn winners(row: &[&MetricVector], metric: Metric) -> Vec<usize> {
    let best = row.iter().map(|m| m.get(metric)).fold(f64::NEG_INFINITY, f64::max);
    (0..row.len()).filter(|&t| row[t].get(metric) == best).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRatios {
    pub techniques: Vec<String>,
    pub ratios: Vec<f64>,
}

/// Share of experiments each technique wins under `metric`; ties split the
/// experiment equally.
pub fn win_ratios(records: &[RunRecord], metric: Metric) -> Result<WinRatios> {
    let ex = arrange(records)?;
    Ok(WinRatios {
        ratios: win_shares(&ex, metric),
        techniques: ex.techniques,
    })
}

fn win_shares(ex: &Experiments<'_>, metric: Metric) -> Vec<f64> {
    let e = ex.table.len() as f64;
    let mut ratios = vec![0.0; ex.techniques.len()];
    for row in &ex.table {
        let w = winners(row, metric);
        for t in &w {
            ratios[*t] += 1.0 / w.len() as f64 / e;
        }
    }
    ratios
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementCell {
    pub agreement: f64,
    /// Per technique; sums to `agreement`.
    pub shares: Vec<f64>,
    pub agreed: usize,
    pub experiments: usize,
}

/// How often `mi` and `mj` crown the same technique. A tie under either
/// metric counts as disagreement. The diagonal (`mi == mj`) holds the win
/// ratios with agreement 1.
pub fn pairwise_agreement(records: &[RunRecord], mi: Metric, mj: Metric) -> Result<AgreementCell> {
    let ex = arrange(records)?;
    Ok(cell(&ex, mi, mj))
}

fn cell(ex: &Experiments<'_>, mi: Metric, mj: Metric) -> AgreementCell {
    let e = ex.table.len();
    if mi == mj {
        return AgreementCell {
            agreement: 1.0,
            shares: win_shares(ex, mi),
            agreed: e,
            experiments: e,
        };
    }
    let mut counts = vec![0usize; ex.techniques.len()];
    for row in &ex.table {
        if let ([a], [b]) = (winners(row, mi).as_slice(), winners(row, mj).as_slice()) {
            if a == b {
                counts[*a] += 1;
            }
        }
    }
    let agreed: usize = counts.iter().sum();
    AgreementCell {
        agreement: agreed as f64 / e as f64,
        shares: counts.iter().map(|&c| c as f64 / e as f64).collect(),
        agreed,
        experiments: e,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub metrics: Vec<Metric>,
    pub techniques: Vec<String>,
    /// Upper triangle: `cells[i][j - i]` compares metric `i` with `j >= i`.
    pub cells: Vec<Vec<AgreementCell>>,
}

impl AgreementMatrix {
    pub fn cell(&self, i: usize, j: usize) -> &AgreementCell {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.cells[i][j - i]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `metric,technique,win_ratio` rows from the diagonal.
    pub fn win_ratios_csv(&self) -> String {
        let mut out = String::from("metric,technique,win_ratio\n");
        for (i, m) in self.metrics.iter().enumerate() {
            for (t, s) in self.techniques.iter().zip(&self.cell(i, i).shares) {
                let _ = writeln!(out, "{m},{t},{s:.6}");
            }
        }
        out
    }
}

pub fn agreement_matrix(records: &[RunRecord], metrics: &[Metric]) -> Result<AgreementMatrix> {
    let ex = arrange(records)?;
    let cells = (0..metrics.len())
        .map(|i| (i..metrics.len()).map(|j| cell(&ex, metrics[i], metrics[j])).collect())
        .collect();
    Ok(AgreementMatrix {
        metrics: metrics.to_vec(),
        techniques: ex.techniques,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discordance {
    pub ratio: f64,
    /// 99% Wilson interval over the pooled per-experiment disagreements.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Mean disagreement over the strictly upper triangle.
pub fn discordance_ratio(m: &AgreementMatrix) -> Discordance {
    let mut sum = 0.0;
    let mut cells = 0usize;
    let mut disagreed = 0usize;
    let mut total = 0usize;
    for i in 0..m.metrics.len() {
        for j in i + 1..m.metrics.len() {
            let c = m.cell(i, j);
            sum += 1.0 - c.agreement;
            cells += 1;
            disagreed += c.experiments - c.agreed;
            total += c.experiments;
        }
    }
    let (ci_low, ci_high) = wilson_interval(disagreed, total, Z_99);
    Discordance {
        ratio: if cells == 0 { 0.0 } else { sum / cells as f64 },
        ci_low,
        ci_high,
    }
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];
const CELL: f64 = 100.0;
const RADIUS: f64 = 40.0;
const LEFT: f64 = 90.0;
const TOP: f64 = 40.0;
const LEGEND: f64 = 180.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn pie(out: &mut String, cx: f64, cy: f64, shares: &[f64]) {
    let mut start = 0.0f64;
    for (t, &share) in shares.iter().enumerate() {
        if share <= 0.0 {
            continue;
        }
        let color = PALETTE[t % PALETTE.len()];
        if share >= 1.0 - 1e-12 {
            let _ = writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
                num(cx),
                num(cy),
                num(RADIUS)
            );
            return;
        }
        let end = start + share;
        let point = |frac: f64| {
            let a = frac * std::f64::consts::TAU - std::f64::consts::FRAC_PI_2;
            (cx + RADIUS * a.cos(), cy + RADIUS * a.sin())
        };
        let (x0, y0) = point(start);
        let (x1, y1) = point(end);
        let large = u8::from(share > 0.5);
        let _ = writeln!(
            out,
            r#"<path d="M {} {} L {} {} A {} {} 0 {large} 1 {} {} Z" fill="{color}"/>"#,
            num(cx),
            num(cy),
            num(x0),
            num(y0),
            num(RADIUS),
            num(RADIUS),
            num(x1),
            num(y1)
        );
        start = end;
    }
}

/// Upper-triangular grid of pies. Filled slices are agreement shares per
/// technique; the unfilled part of each circle is disagreement.
pub fn concordance_svg(m: &AgreementMatrix) -> String {
    let n = m.metrics.len() as f64;
    let width = LEFT + n * CELL + LEGEND;
    let height = TOP + n * CELL + 20.0f64.max(m.techniques.len() as f64 * 20.0 - n * CELL + 20.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        num(width),
        num(height),
        num(width),
        num(height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (j, metric) in m.metrics.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(LEFT + j as f64 * CELL + CELL / 2.0),
            num(TOP - 12.0),
            escape(metric.name())
        );
    }
    for (i, metric) in m.metrics.iter().enumerate() {
        let cy = TOP + i as f64 * CELL + CELL / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            num(LEFT - 8.0),
            num(cy),
            escape(metric.name())
        );
        for j in i..m.metrics.len() {
            let cx = LEFT + j as f64 * CELL + CELL / 2.0;
            let c = m.cell(i, j);
            let _ = writeln!(out, r#"<g class="cell" data-row="{i}" data-col="{j}">"#);
            pie(&mut out, cx, cy, &c.shares);
            let _ = writeln!(
                out,
                r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#444444" stroke-width="1"/>"##,
                num(cx),
                num(cy),
                num(RADIUS)
            );
            let _ = writeln!(out, "</g>");
        }
    }
    let lx = LEFT + n * CELL + 20.0;
    for (t, name) in m.techniques.iter().enumerate() {
        let y = TOP + t as f64 * 20.0;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{}"/>"#,
            num(lx),
            num(y),
            PALETTE[t % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            num(lx + 18.0),
            num(y + 10.0),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_concordance_svg(m: &AgreementMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, concordance_svg(m)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(variant: usize, t: &str, acc: f64, kappa: f64) -> RunRecord {
        RunRecord {
            variant,
            p_min: 0.1,
            technique: t.into(),
            fold: 0,
            metrics: MetricVector {
                acc,
                kappa,
                ..Default::default()
            },
        }
    }

    #[test]
    fn dominant_technique_wins_everything() {
        let recs: Vec<RunRecord> = (0..3)
            .flat_map(|v| [rec(v, "a", 0.9, 0.5), rec(v, "b", 0.1, 0.4)])
            .collect();
        let w = win_ratios(&recs, Metric::Acc).unwrap();
        assert_eq!(w.ratios, vec![1.0, 0.0]);
    }

    #[test]
    fn ties_split_wins() {
        let recs: Vec<RunRecord> = (0..3)
            .flat_map(|v| [rec(v, "a", 0.5, 0.5), rec(v, "b", 0.5, 0.5)])
            .collect();
        assert_eq!(win_ratios(&recs, Metric::Acc).unwrap().ratios, vec![0.5, 0.5]);
        let c = pairwise_agreement(&recs, Metric::Acc, Metric::Kappa).unwrap();
        assert_eq!(c.agreement, 0.0);
    }

    #[test]
    fn six_experiment_tally() {
        // a wins acc everywhere; kappa agrees in experiments 0..4
        let recs: Vec<RunRecord> = (0..6)
            .flat_map(|v| {
                let kb = if v < 4 { 0.1 } else { 0.9 };
                [rec(v, "a", 0.9, 0.5), rec(v, "b", 0.2, kb)]
            })
            .collect();
        let c = pairwise_agreement(&recs, Metric::Acc, Metric::Kappa).unwrap();
        assert!((c.agreement - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.shares[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.shares[1], 0.0);
        let back = pairwise_agreement(&recs, Metric::Kappa, Metric::Acc).unwrap();
        assert_eq!(c, back);
        let diag = pairwise_agreement(&recs, Metric::Kappa, Metric::Kappa).unwrap();
        assert_eq!(diag.agreement, 1.0);
        assert!((diag.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let wr = win_ratios(&recs, Metric::Kappa).unwrap();
        assert!((wr.ratios[0] - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn missing_technique_is_rejected() {
        let mut recs = vec![rec(0, "a", 0.1, 0.1), rec(0, "b", 0.2, 0.2), rec(1, "a", 0.3, 0.3)];
        assert!(matches!(win_ratios(&recs, Metric::Acc), Err(Error::IncompleteRecords(_))));
        recs.push(rec(1, "a", 0.3, 0.3));
        assert!(matches!(win_ratios(&recs, Metric::Acc), Err(Error::IncompleteRecords(_))));
    }

    fn hand_cell(agreement: f64) -> AgreementCell {
        AgreementCell {
            agreement,
            shares: vec![agreement, 0.0],
            agreed: (agreement * 2.0) as usize,
            experiments: 2,
        }
    }

    #[test]
    fn discordance_of_hand_matrix() {
        let m = AgreementMatrix {
            metrics: vec![Metric::Acc, Metric::Kappa, Metric::F1],
            techniques: vec!["a".into(), "b".into()],
            cells: vec![
                vec![hand_cell(1.0), hand_cell(1.0), hand_cell(0.5)],
                vec![hand_cell(1.0), hand_cell(0.0)],
                vec![hand_cell(1.0)],
            ],
        };
        let d = discordance_ratio(&m);
        assert_eq!(d.ratio, 0.5);
        assert!(d.ci_low < 0.5 && d.ci_high > 0.5);
    }

    #[test]
    fn svg_shapes() {
        let recs: Vec<RunRecord> = (0..2)
            .flat_map(|v| [rec(v, "a<1>", 0.9, 0.1), rec(v, "b", 0.1, 0.9)])
            .collect();
        let m = agreement_matrix(&recs, &[Metric::Acc, Metric::Kappa]).unwrap();
        let svg = concordance_svg(&m);
        assert!(svg.contains("a&lt;1&gt;"));
        // two full diagonal pies, one empty off-diagonal cell
        assert_eq!(svg.matches(r##"r="40.000" fill="#"##).count(), 2);
        assert_eq!(svg.matches("<path").count(), 0);
        assert_eq!(svg, concordance_svg(&m));
    }
}
