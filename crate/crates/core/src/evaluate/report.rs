use std::fmt::Write;

use super::{Counts, CrossvalReport, EvalReport};

const TSV_HEADER: &str = "#scope\tvariant\taggregation\trelation\ttp\tfp\tfn\tprecision\trecall\tf1";

fn tsv_line(out: &mut String, scope: &str, r: &EvalReport, relation: &str, c: &Counts, prf: (f64, f64, f64)) {
    let _ = writeln!(
        out,
        "{scope}\t{}\t{}\t{relation}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
        r.variant, r.aggregation, c.tp, c.fp, c.fn_, prf.0, prf.1, prf.2
    );
}

fn report_lines(out: &mut String, scope: &str, r: &EvalReport) {
    tsv_line(out, scope, r, "*", &r.counts, (r.precision, r.recall, r.f1));
    for (rel, c) in &r.per_relation {
        tsv_line(out, &format!("{scope}/relation"), r, rel, c, (c.precision(), c.recall(), c.f1()));
    }
}

/// Machine-readable report: one line for the total, then one per relation.
pub fn format_report_tsv(r: &EvalReport) -> String {
    let mut out = format!("{TSV_HEADER}\n");
    report_lines(&mut out, "total", r);
    out
}

pub fn format_crossval_tsv(cv: &CrossvalReport) -> String {
    let mut out = format!("{TSV_HEADER}\n");
    for (i, r) in &cv.folds {
        report_lines(&mut out, &format!("fold{i}"), r);
    }
    if let Some((_, first)) = cv.folds.first() {
        tsv_line(&mut out, "mean", first, "*", &cv.pooled, (cv.mean_precision, cv.mean_recall, cv.mean_f1));
    }
    for i in &cv.excluded {
        let _ = writeln!(out, "# fold{i} excluded: no gold sentences");
    }
    out
}

fn table_row(out: &mut String, name: &str, c: &Counts, p: f64, r: f64, f: f64) {
    let _ = writeln!(out, "{name:<24} {:>6} {:>6} {:>6} {p:>9.4} {r:>7.4} {f:>7.4}", c.tp, c.fp, c.fn_);
}

fn table_header(out: &mut String) {
    let _ = writeln!(out, "{:<24} {:>6} {:>6} {:>6} {:>9} {:>7} {:>7}", "", "tp", "fp", "fn", "precision", "recall", "f1");
}

pub fn format_report_table(r: &EvalReport) -> String {
    let mut out = format!("variant {} ({}), {} gold sentences\n", r.variant, r.aggregation, r.sentences);
    table_header(&mut out);
    table_row(&mut out, "total", &r.counts, r.precision, r.recall, r.f1);
    for (rel, c) in &r.per_relation {
        table_row(&mut out, rel, c, c.precision(), c.recall(), c.f1());
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

pub fn format_crossval_table(cv: &CrossvalReport) -> String {
    let mut out = String::new();
    if let Some((_, first)) = cv.folds.first() {
        let _ = writeln!(out, "variant {} ({}), {} splits scored", first.variant, first.aggregation, cv.folds.len());
    }
    table_header(&mut out);
    for (i, r) in &cv.folds {
        table_row(&mut out, &format!("split {i}"), &r.counts, r.precision, r.recall, r.f1);
    }
    table_row(&mut out, "mean", &cv.pooled, cv.mean_precision, cv.mean_recall, cv.mean_f1);
    for i in &cv.excluded {
        let _ = writeln!(out, "note: split {i} excluded, no gold sentences");
    }
    out
}
