//! Method × variant grids of "mean ± std" cells in percent.
//!
//! A cell is bold when its mean is the best in its variant column and carries
//! a star after the mean when the method differs from identity with
//! `p <= alpha` in the favourable direction.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::calibrators::Method;
use crate::experiment::{mean_std, significance, ExperimentError, Metric, Record};
use crate::stats_tests::{significance_stars, DEFAULT_ALPHA};
use crate::synthetic::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(ExperimentError::Config(format!("unknown report format `{other}`"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Text => "text",
            ReportFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub metrics: Vec<Metric>,
    pub alpha: f64,
    pub format: ReportFormat,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            metrics: vec![Metric::Precision, Metric::Recall],
            alpha: DEFAULT_ALPHA,
            format: ReportFormat::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub metric: Metric,
    pub method: Method,
    pub variant: Variant,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub p_value: Option<f64>,
    pub best: bool,
    pub starred: bool,
}

impl Cell {
    /// `"12.3 ± 0.4"`, with `*` after the mean when starred and `**…**` when best.
    pub fn text(&self) -> String {
        let star = if self.starred { "*" } else { "" };
        let body = format!("{:.1}{star} ± {:.1}", 100.0 * self.mean, 100.0 * self.std);
        if self.best {
            format!("**{body}**")
        } else {
            body
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub metric: Metric,
    pub methods: Vec<Method>,
    pub variants: Vec<Variant>,
    /// Row-major over `methods × variants`; `None` where no value was recorded.
    pub cells: Vec<Option<Cell>>,
}

impl Grid {
    pub fn cell(&self, method: Method, variant: Variant) -> Option<&Cell> {
        let i = self.methods.iter().position(|&m| m == method)?;
        let j = self.variants.iter().position(|&v| v == variant)?;
        self.cells[i * self.variants.len() + j].as_ref()
    }
}

fn better(metric: Metric, a: f64, b: f64) -> bool {
    match metric.higher_is_better() {
        Some(false) => a < b,
        _ => a > b,
    }
}

pub fn build_grid(records: &[Record], metric: Metric, alpha: f64) -> Grid {
    let mut methods: Vec<Method> = Vec::new();
    for r in records {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let variants: Vec<Variant> = Variant::ALL
        .into_iter()
        .filter(|v| records.iter().any(|r| r.variant == *v))
        .collect();
    let tests = significance(records);

    let summary = |m: Method, v: Variant| {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.method == m && r.variant == v)
            .filter_map(|r| r.get(metric))
            .collect();
        mean_std(&values).map(|(mean, std)| (mean, std, values.len()))
    };

    let mut cells = Vec::with_capacity(methods.len() * variants.len());
    for &m in &methods {
        for &v in &variants {
            cells.push(summary(m, v).map(|(mean, std, n)| {
                let p_value = tests
                    .iter()
                    .find(|s| s.variant == v && s.method == m && s.metric == metric)
                    .map(|s| s.p_value);
                let improves = summary(Method::Identity, v).is_some_and(|(base, _, _)| {
                    metric.higher_is_better().is_none() || better(metric, mean, base)
                });
                Cell {
                    metric,
                    method: m,
                    variant: v,
                    mean,
                    std,
                    n,
                    p_value,
                    best: false,
                    starred: improves && p_value.is_some_and(|p| significance_stars(p, alpha)),
                }
            }));
        }
    }

    let nv = variants.len();
    for j in 0..nv {
        let column = || (0..methods.len()).filter_map(|i| cells[i * nv + j].as_ref());
        let Some(top) = column()
            .map(|c| c.mean)
            .reduce(|a, b| if better(metric, b, a) { b } else { a })
        else {
            continue;
        };
        for i in 0..methods.len() {
            if let Some(c) = cells[i * nv + j].as_mut() {
                c.best = c.mean == top;
            }
        }
    }

    Grid {
        metric,
        methods,
        variants,
        cells,
    }
}

fn legend(metric: Metric, alpha: f64) -> String {
    let best = match metric.higher_is_better() {
        Some(false) => "lowest",
        _ => "highest",
    };
    format!(
        "{metric} (%): mean ± sample std (n-1) over bootstraps; **bold** = {best} mean per variant; \
         * = two-sided Wilcoxon signed-rank p <= {alpha} vs identity, paired by bootstrap"
    )
}

fn render_text(grid: &Grid, alpha: f64) -> String {
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("method".to_string())
        .chain(grid.variants.iter().map(|v| v.title().to_string()))
        .collect()];
    for &m in &grid.methods {
        let mut row = vec![m.to_string()];
        for &v in &grid.variants {
            row.push(grid.cell(m, v).map_or_else(|| "n/a".to_string(), Cell::text));
        }
        rows.push(row);
    }
    let ncol = rows[0].len();
    let widths: Vec<usize> = (0..ncol)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let line = |r: &[String]| {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        format!("| {} |", cells.join(" | "))
    };
    let mut out = format!("{}\n\n", legend(grid.metric, alpha));
    out += &line(&rows[0]);
    out += "\n";
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out += &format!("|-{}-|\n", rule.join("-|-"));
    for r in &rows[1..] {
        out += &line(r);
        out += "\n";
    }
    out
}

pub fn render_report(records: &[Record], opts: &ReportOptions) -> Result<String, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::EmptyCell);
    }
    let grids: Vec<Grid> = opts
        .metrics
        .iter()
        .map(|&m| build_grid(records, m, opts.alpha))
        .collect();
    match opts.format {
        ReportFormat::Text => Ok(grids
            .iter()
            .map(|g| render_text(g, opts.alpha))
            .collect::<Vec<_>>()
            .join("\n")),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "metric", "method", "variant", "mean", "std", "n", "p_value", "best", "starred",
                "cell",
            ])?;
            for c in grids.iter().flat_map(|g| g.cells.iter().flatten()) {
                w.write_record([
                    c.metric.to_string(),
                    c.method.to_string(),
                    c.variant.to_string(),
                    c.mean.to_string(),
                    c.std.to_string(),
                    c.n.to_string(),
                    c.p_value.map_or_else(String::new, |p| p.to_string()),
                    c.best.to_string(),
                    c.starred.to_string(),
                    c.text(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| ExperimentError::Io {
                path: "<report>".into(),
                source: e.into_error(),
            })?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(variant: Variant, method: Method, b: u32, precision: f64) -> Record {
        Record {
            variant,
            method,
            bootstrap: b,
            precision: Some(precision),
            recall: Some(0.9),
            fpr: Some(0.1),
            tpr_at_fpr: None,
            ece: Some(0.05),
            brier: Some(0.01),
            nll: Some(0.2),
            threshold: Some(0.5),
        }
    }

    #[test]
    fn identity_winning_gives_no_stars() {
        let mut recs = Vec::new();
        for b in 0..10 {
            recs.push(rec(Variant::Base, Method::Identity, b, 0.5 + 0.001 * b as f64));
            recs.push(rec(Variant::Base, Method::Beta, b, 0.2 + 0.002 * b as f64));
        }
        let g = build_grid(&recs, Metric::Precision, DEFAULT_ALPHA);
        assert!(g.cells.iter().flatten().all(|c| !c.starred));
        assert!(g.cell(Method::Identity, Variant::Base).unwrap().best);
        assert!(g.cell(Method::Beta, Variant::Base).unwrap().p_value.unwrap() <= 0.01);
    }

    #[test]
    fn cell_text() {
        let c = Cell {
            metric: Metric::Precision,
            method: Method::Beta,
            variant: Variant::V,
            mean: 0.135,
            std: 0.01,
            n: 3,
            p_value: Some(0.001),
            best: true,
            starred: true,
        };
        assert_eq!(c.text(), "**13.5* ± 1.0**");
    }

    #[test]
    fn lower_is_better_metrics_bold_the_minimum() {
        let mut recs = vec![rec(Variant::I, Method::Identity, 0, 0.5)];
        let mut r = rec(Variant::I, Method::Platt, 0, 0.5);
        r.ece = Some(0.01);
        recs.push(r);
        let g = build_grid(&recs, Metric::Ece, DEFAULT_ALPHA);
        assert!(g.cell(Method::Platt, Variant::I).unwrap().best);
        assert!(!g.cell(Method::Identity, Variant::I).unwrap().best);
    }
}
