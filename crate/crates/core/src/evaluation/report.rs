use std::collections::BTreeMap;
use std::io::{self, Write};

use super::{EvalReport, RunAggregate, SignificanceResult};

/// Writes per-class scores followed by `macro_f1`, `accuracy` and `n` rows.
pub fn write_eval_tsv<W: Write>(report: &EvalReport, mut w: W) -> io::Result<()> {
    writeln!(w, "label\tprecision\trecall\tf1\tsupport")?;
    for (label, c) in &report.per_class {
        writeln!(
            w,
            "{label}\t{:.6}\t{:.6}\t{:.6}\t{}",
            c.precision, c.recall, c.f1, c.support
        )?;
    }
    writeln!(w, "macro_f1\t\t\t{:.6}\t{}", report.macro_f1, report.n)?;
    writeln!(w, "accuracy\t\t\t{:.6}\t{}", report.accuracy, report.n)?;
    writeln!(w, "unscorable\t\t\t\t{}", report.unscorable)?;
    Ok(())
}

pub fn write_significance_tsv<W: Write>(results: &[SignificanceResult], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "a\tb\tn_pairs\tn_effective\tw_plus\tmethod\tp_two_sided\tp_adjusted\talpha\tsignificant"
    )?;
    for r in results {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.9}\t{:.9}\t{}\t{}",
            r.a,
            r.b,
            r.n_pairs,
            r.n_effective,
            r.w_plus,
            serde_json::to_value(r.method).expect("enum serializes").as_str().unwrap_or(""),
            r.p_two_sided,
            r.p_adjusted,
            r.alpha,
            r.significant
        )?;
    }
    Ok(())
}

/// One cell of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub row: String,
    pub column: String,
    pub aggregate: RunAggregate,
    /// Marked with a dagger.
    pub significant: bool,
}

/// Renders cells as a tab-separated grid of `mean (stddev)` in percent,
/// two decimals, with `†` after significant cells. Rows and columns keep
/// their first-seen order.
pub fn render_table(cells: &[TableCell]) -> String {
    let mut rows: Vec<&str> = Vec::new();
    let mut cols: Vec<&str> = Vec::new();
    let mut grid: BTreeMap<(&str, &str), String> = BTreeMap::new();
    for c in cells {
        if !rows.contains(&c.row.as_str()) {
            rows.push(&c.row);
        }
        if !cols.contains(&c.column.as_str()) {
            cols.push(&c.column);
        }
        let a = &c.aggregate;
        let sd = if a.stddev_defined {
            format!("{:.2}", 100.0 * a.stddev)
        } else {
            "n=1".to_string()
        };
        let mark = if c.significant { "†" } else { "" };
        grid.insert(
            (&c.row, &c.column),
            format!("{:.2} ({sd}){mark}", 100.0 * a.mean_macro_f1),
        );
    }
    let mut out = String::new();
    out.push_str(&std::iter::once("").chain(cols.iter().copied()).collect::<Vec<_>>().join("\t"));
    out.push('\n');
    for r in &rows {
        out.push_str(r);
        for c in &cols {
            out.push('\t');
            out.push_str(grid.get(&(*r, *c)).map(String::as_str).unwrap_or(""));
        }
        out.push('\n');
    }
    out
}
