use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::{mean, sample_std};

/// One measured value of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub dataset: String,
    pub model: String,
    pub run: usize,
    pub task: String,
    pub probe: String,
    pub target: String,
    pub metric: String,
    pub value: f64,
}

/// Writes `dataset,model,run,task,probe,target,metric,value` rows.
pub fn write_records(records: &[Record], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(["dataset", "model", "run", "task", "probe", "target", "metric", "value"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(input: impl Read) -> Result<Vec<Record>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Metrics where smaller is better.
pub fn lower_is_better(metric: &str) -> bool {
    matches!(metric, "mse" | "mae" | "db")
}

fn metric_label(metric: &str) -> String {
    match metric {
        "macro_f1" => "Macro-F1".into(),
        "micro_f1" => "Micro-F1".into(),
        m => m.to_ascii_uppercase(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Complete,
    /// Only one run was requested; the std is reported as 0.
    SingleRun,
    /// Some requested runs have no value; no mean is reported.
    Incomplete,
}

/// All runs of one (task, dataset, model, probe, target, metric).
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub task: String,
    pub dataset: String,
    pub model: String,
    pub probe: String,
    pub target: String,
    pub metric: String,
    pub values: BTreeMap<usize, f64>,
    pub expected_runs: usize,
}

impl Cell {
    pub fn status(&self) -> CellStatus {
        if (0..self.expected_runs).any(|r| !self.values.contains_key(&r)) {
            CellStatus::Incomplete
        } else if self.expected_runs == 1 {
            CellStatus::SingleRun
        } else {
            CellStatus::Complete
        }
    }

    /// Mean and sample std over the requested runs, or `None` if incomplete.
    pub fn summary(&self) -> Option<(f64, f64)> {
        if self.status() == CellStatus::Incomplete {
            return None;
        }
        let v: Vec<f64> = (0..self.expected_runs).map(|r| self.values[&r]).collect();
        Some((mean(&v), sample_std(&v)))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportTable {
    /// Cells in order of first appearance in the records.
    pub cells: Vec<Cell>,
}

/// Groups records into cells expecting runs `0..runs`. Values for runs
/// outside that range are ignored.
pub fn aggregate_runs(records: &[Record], runs: usize) -> ReportTable {
    let mut index: BTreeMap<(&str, &str, &str, &str, &str, &str), usize> = BTreeMap::new();
    let mut cells: Vec<Cell> = Vec::new();
    for r in records {
        let key = (
            r.task.as_str(),
            r.dataset.as_str(),
            r.model.as_str(),
            r.probe.as_str(),
            r.target.as_str(),
            r.metric.as_str(),
        );
        let slot = *index.entry(key).or_insert_with(|| {
            cells.push(Cell {
                task: r.task.clone(),
                dataset: r.dataset.clone(),
                model: r.model.clone(),
                probe: r.probe.clone(),
                target: r.target.clone(),
                metric: r.metric.clone(),
                values: BTreeMap::new(),
                expected_runs: runs,
            });
            cells.len() - 1
        });
        if r.run < runs {
            cells[slot].values.insert(r.run, r.value);
        }
    }
    ReportTable { cells }
}

impl ReportTable {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `task,dataset,model,probe,target,metric,mean,std,runs,status`; means
    /// of incomplete cells are left empty.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["task", "dataset", "model", "probe", "target", "metric", "mean", "std", "runs", "status"])?;
        for c in &self.cells {
            let (m, s) = c
                .summary()
                .map_or((String::new(), String::new()), |(m, s)| (m.to_string(), s.to_string()));
            let status = match c.status() {
                CellStatus::Complete => "complete",
                CellStatus::SingleRun => "single-run",
                CellStatus::Incomplete => "incomplete",
            };
            w.write_record([
                c.task.as_str(),
                &c.dataset,
                &c.model,
                &c.probe,
                &c.target,
                &c.metric,
                &m,
                &s,
                &format!("{}/{}", c.values.len(), c.expected_runs),
                status,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Metrics shown in rendered tables; all metrics stay in the CSVs.
fn displayed(task: &str, metric: &str) -> bool {
    !(task == "topo" && metric == "mae")
}

struct Group<'a> {
    task: &'a str,
    dataset: &'a str,
    cells: Vec<&'a Cell>,
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

fn groups(table: &ReportTable) -> Vec<Group<'_>> {
    let mut out: Vec<Group> = Vec::new();
    for c in &table.cells {
        match out.iter_mut().find(|g| g.task == c.task && g.dataset == c.dataset) {
            Some(g) => g.cells.push(c),
            None => out.push(Group {
                task: &c.task,
                dataset: &c.dataset,
                cells: vec![c],
            }),
        }
    }
    out
}

fn column_label(probe: &str, metric: &str) -> String {
    if probe.is_empty() {
        metric_label(metric)
    } else {
        format!("{probe} {}", metric_label(metric))
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// One laid-out section: rows are models, columns are (probe, metric).
struct Section<'a> {
    target: &'a str,
    models: Vec<&'a str>,
    columns: Vec<(&'a str, &'a str)>,
    cells: BTreeMap<(&'a str, &'a str, &'a str), &'a Cell>,
}

fn sections<'a>(g: &Group<'a>, filter: bool) -> Vec<Section<'a>> {
    let mut targets = Vec::new();
    for c in &g.cells {
        push_unique(&mut targets, c.target.as_str());
    }
    targets
        .into_iter()
        .map(|t| {
            let mut s = Section {
                target: t,
                models: Vec::new(),
                columns: Vec::new(),
                cells: BTreeMap::new(),
            };
            for c in g.cells.iter().filter(|c| c.target == t) {
                if filter && !displayed(g.task, &c.metric) {
                    continue;
                }
                push_unique(&mut s.models, c.model.as_str());
                push_unique(&mut s.columns, (c.probe.as_str(), c.metric.as_str()));
                s.cells.insert((c.model.as_str(), c.probe.as_str(), c.metric.as_str()), c);
            }
            s
        })
        .filter(|s| !s.columns.is_empty())
        .collect()
}

fn best(section: &Section, probe: &str, metric: &str) -> Option<f64> {
    let means = section
        .models
        .iter()
        .filter_map(|m| section.cells.get(&(*m, probe, metric)))
        .filter_map(|c| c.summary().map(|s| s.0));
    if lower_is_better(metric) {
        means.reduce(f64::min)
    } else {
        means.reduce(f64::max)
    }
}

fn render_markdown(g: &Group) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} / {}", g.task, g.dataset);
    for s in sections(g, true) {
        let _ = writeln!(out, "\n## {}\n", s.target);
        let header: Vec<String> = s.columns.iter().map(|(p, m)| column_label(p, m)).collect();
        let _ = writeln!(out, "| Model | {} |", header.join(" | "));
        let _ = writeln!(out, "|---|{}", "---:|".repeat(header.len()));
        let bests: Vec<Option<f64>> = s.columns.iter().map(|(p, m)| best(&s, p, m)).collect();
        for model in &s.models {
            let mut row = vec![model.to_string()];
            for ((p, m), b) in s.columns.iter().zip(&bests) {
                let text = match s.cells.get(&(*model, *p, *m)) {
                    None => "n/a".to_string(),
                    Some(c) => match c.summary() {
                        None => format!("incomplete ({}/{})", c.values.len(), c.expected_runs),
                        Some((mean, std)) => {
                            let mut t = format!("{mean:.4} ± {std:.4}");
                            if c.status() == CellStatus::SingleRun {
                                t.push_str(" (1 run)");
                            }
                            if Some(mean) == *b {
                                t = format!("**{t}**");
                            }
                            t
                        }
                    },
                };
                row.push(text);
            }
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
    }
    out
}

fn render_csv(g: &Group) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let all = sections(g, false);
    let mut columns: Vec<(&str, &str)> = Vec::new();
    for s in &all {
        for c in &s.columns {
            push_unique(&mut columns, *c);
        }
    }
    let mut header = vec!["target".to_string(), "model".to_string()];
    for (p, m) in &columns {
        header.push(column_label(p, m));
        header.push(format!("{} std", column_label(p, m)));
    }
    w.write_record(&header)?;
    for s in &all {
        for model in &s.models {
            let mut row = vec![s.target.to_string(), model.to_string()];
            for (p, m) in &columns {
                match s.cells.get(&(*model, *p, *m)).and_then(|c| c.summary()) {
                    Some((mean, std)) => {
                        row.push(mean.to_string());
                        row.push(std.to_string());
                    }
                    None => row.extend(["NA".to_string(), "NA".to_string()]),
                }
            }
            w.write_record(&row)?;
        }
    }
    w.into_inner().map_err(|e| crate::error::Error::Io(e.into_error()))
}

/// Writes one file per (task, dataset) and format into `dir`. Returns the
/// written paths; an empty table writes nothing.
pub fn emit_report(table: &ReportTable, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    if table.is_empty() {
        warn!("report selection is empty; no tables written");
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for g in groups(table) {
        let stem = format!("{}_{}", sanitize(g.task), sanitize(g.dataset));
        for f in formats {
            let (path, bytes) = match f {
                ReportFormat::Markdown => (dir.join(format!("{stem}.md")), render_markdown(&g).into_bytes()),
                ReportFormat::Csv => (dir.join(format!("{stem}.csv")), render_csv(&g)?),
            };
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(model: &str, run: usize, probe: &str, metric: &str, value: f64) -> Record {
        Record {
            dataset: "cora".into(),
            model: model.into(),
            run,
            task: "topo".into(),
            probe: probe.into(),
            target: "degree".into(),
            metric: metric.into(),
            value,
        }
    }

    #[test]
    fn mean_and_sample_std() {
        let t = aggregate_runs(&[rec("A", 0, "LN-R", "mse", 1.0), rec("A", 1, "LN-R", "mse", 1.0), rec("A", 2, "LN-R", "mse", 1.0)], 3);
        assert_eq!(t.cells[0].summary(), Some((1.0, 0.0)));
        let t = aggregate_runs(&[rec("A", 0, "LN-R", "mse", 0.0), rec("A", 1, "LN-R", "mse", 2.0)], 2);
        let (m, s) = t.cells[0].summary().unwrap();
        assert_eq!(m, 1.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        assert!((s - 1.414).abs() < 1e-3);
    }

    #[test]
    fn single_and_missing_runs() {
        let t = aggregate_runs(&[rec("A", 0, "LN-R", "mse", 0.7)], 1);
        assert_eq!(t.cells[0].status(), CellStatus::SingleRun);
        assert_eq!(t.cells[0].summary(), Some((0.7, 0.0)));
        let t = aggregate_runs(&[rec("A", 0, "LN-R", "mse", 0.7), rec("A", 2, "LN-R", "mse", 0.9)], 3);
        assert_eq!(t.cells[0].status(), CellStatus::Incomplete);
        assert_eq!(t.cells[0].summary(), None);
    }

    #[test]
    fn raw_csv_round_trip() {
        let rs = vec![rec("A", 0, "LN-R", "mse", 0.1 + 0.2), rec("B", 1, "LG-R", "macro_f1", 1.0 / 3.0)];
        let mut buf = Vec::new();
        write_records(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dataset,model,run,task,probe,target,metric,value\n"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), rs);
        let mut empty = Vec::new();
        write_records(&[], &mut empty).unwrap();
        assert!(read_records(empty.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn degree_table_layout_and_bolding() {
        let mut rs = Vec::new();
        for (model, mse, f1) in [("GAE_FIRST", 0.2, 0.9), ("GAE_L2_SUM", 0.6, 0.5)] {
            for run in 0..2 {
                rs.push(rec(model, run, "LN-R", "mse", mse));
                rs.push(rec(model, run, "LN-R", "mae", mse));
                for p in ["LG-R", "SVM-L", "MLP"] {
                    rs.push(rec(model, run, p, "macro_f1", f1));
                    rs.push(rec(model, run, p, "micro_f1", f1));
                }
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&aggregate_runs(&rs, 2), dir.path(), &[ReportFormat::Markdown, ReportFormat::Csv]).unwrap();
        assert_eq!(files.len(), 2);
        let md = std::fs::read_to_string(dir.path().join("topo_cora.md")).unwrap();
        assert!(md.contains(
            "| Model | LN-R MSE | LG-R Macro-F1 | LG-R Micro-F1 | SVM-L Macro-F1 | SVM-L Micro-F1 | MLP Macro-F1 | MLP Micro-F1 |"
        ));
        let first = md.lines().find(|l| l.starts_with("| GAE_FIRST")).unwrap();
        assert!(first.contains("**0.2000 ± 0.0000**"));
        assert!(first.contains("**0.9000 ± 0.0000**"));
        let l2 = md.lines().find(|l| l.starts_with("| GAE_L2_SUM")).unwrap();
        assert!(!l2.contains("**"));
        let csv = std::fs::read_to_string(dir.path().join("topo_cora.csv")).unwrap();
        assert!(csv.lines().next().unwrap().starts_with("target,model,LN-R MSE,LN-R MSE std,LN-R MAE"));
    }

    #[test]
    fn db_column_prefers_minimum() {
        let mut rs = Vec::new();
        for (model, db, sc) in [("A", 0.5, 0.1), ("B", 2.0, 0.4)] {
            for (metric, v) in [("db", db), ("sc", sc)] {
                rs.push(Record {
                    task: "homogeneity".into(),
                    probe: String::new(),
                    target: "label".into(),
                    metric: metric.into(),
                    value: v,
                    ..rec(model, 0, "", "", 0.0)
                });
            }
        }
        let dir = tempfile::tempdir().unwrap();
        emit_report(&aggregate_runs(&rs, 1), dir.path(), &[ReportFormat::Markdown]).unwrap();
        let md = std::fs::read_to_string(dir.path().join("homogeneity_cora.md")).unwrap();
        assert!(md.contains("| Model | DB | SC |"));
        assert!(md.contains("| A | **0.5000 ± 0.0000 (1 run)** | 0.1000 ± 0.0000 (1 run) |"));
        assert!(md.contains("| B | 2.0000 ± 0.0000 (1 run) | **0.4000 ± 0.0000 (1 run)** |"));
    }

    #[test]
    fn incomplete_cells_are_not_bolded_or_averaged() {
        let rs = vec![rec("A", 0, "LN-R", "mse", 0.1), rec("B", 0, "LN-R", "mse", 0.3), rec("B", 1, "LN-R", "mse", 0.3)];
        let dir = tempfile::tempdir().unwrap();
        emit_report(&aggregate_runs(&rs, 2), dir.path(), &[ReportFormat::Markdown]).unwrap();
        let md = std::fs::read_to_string(dir.path().join("topo_cora.md")).unwrap();
        assert!(md.contains("| A | incomplete (1/2) |"));
        assert!(md.contains("| B | **0.3000 ± 0.0000** |"));
    }

    #[test]
    fn empty_selection_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("reports");
        assert!(emit_report(&ReportTable::default(), &out, &[ReportFormat::Markdown]).unwrap().is_empty());
        assert!(!out.exists());
    }
}
