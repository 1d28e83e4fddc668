//! File formats: hierarchy CSV, score/LPR tables, ranking CSV, curve CSVs,
//! and the JSON summaries. All CSV is UTF-8, comma-separated, `.` decimal
//! point; floats print in shortest round-trip form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{LabelGraph, LabelRecord, Ranking};
use crate::metrics::CurveSet;

fn format_err(context: &str, detail: impl ToString) -> Error {
    Error::Format {
        context: context.to_string(),
        detail: detail.to_string(),
    }
}

/// Read a hierarchy from `label_id,parent_id,name` rows. An empty
/// `parent_id` marks a root; repeated `label_id` rows add parents (DAG).
pub fn read_hierarchy<R: Read>(reader: R) -> Result<LabelGraph> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = csv.headers()?;
        let expected = ["label_id", "parent_id", "name"];
        if headers.len() < 3 || headers.iter().take(3).ne(expected) {
            return Err(format_err(
                "hierarchy csv",
                format!("expected header `label_id,parent_id,name`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            ));
        }
    }
    let mut names: BTreeMap<usize, String> = BTreeMap::new();
    let mut edges = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        let parse = |idx: usize, what: &str| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| format_err("hierarchy csv", format!("row {}: missing {what}", line + 2)))
        };
        let label: usize = parse(0, "label_id")?
            .trim()
            .parse()
            .map_err(|e| format_err("hierarchy csv", format!("row {}: label_id: {e}", line + 2)))?;
        let parent_field = parse(1, "parent_id")?.trim();
        let name = parse(2, "name")?.trim().to_string();
        names.entry(label).or_insert(name);
        if !parent_field.is_empty() {
            let parent: usize = parent_field
                .parse()
                .map_err(|e| format_err("hierarchy csv", format!("row {}: parent_id: {e}", line + 2)))?;
            edges.push((label, parent));
        }
    }
    let k = names.len();
    let labels: Vec<LabelRecord> = names
        .into_iter()
        .map(|(id, name)| LabelRecord { id, name })
        .collect();
    if labels.iter().enumerate().any(|(i, r)| r.id != i) {
        return Err(Error::BadLabelIds {
            expected: k,
            detail: "label ids must be dense in [0, K)".to_string(),
        });
    }
    LabelGraph::new(labels, edges)
}

/// Write a hierarchy as `label_id,parent_id,name` rows: one row per parent
/// edge and one root row with an empty parent.
pub fn write_hierarchy<W: Write>(writer: W, graph: &LabelGraph) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["label_id", "parent_id", "name"])?;
    for record in graph.labels() {
        let parents = graph.parents(record.id);
        if parents.is_empty() {
            csv.write_record([record.id.to_string(), String::new(), record.name.clone()])?;
        } else {
            for &p in parents {
                csv.write_record([record.id.to_string(), p.to_string(), record.name.clone()])?;
            }
        }
    }
    csv.flush()?;
    Ok(())
}

/// Dense score (or LPR) table with the external sample ids preserved.
/// Samples are indexed by ascending sample id regardless of row order.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    pub sample_ids: Vec<u64>,
    pub label_count: usize,
    /// Layout `sample_index * K + label`.
    pub values: Vec<f64>,
    pub truth: Option<Vec<bool>>,
}

impl ScoreTable {
    pub fn sample_count(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn sample_index(&self, sample_id: u64) -> Option<usize> {
        self.sample_ids.binary_search(&sample_id).ok()
    }
}

/// Read `sample_id,label_id,value[,truth]` rows into a dense table over
/// `label_count` labels. Every (sample, label) cell must appear exactly
/// once; the truth column is all-or-nothing.
pub fn read_scores<R: Read>(reader: R, label_count: usize) -> Result<ScoreTable> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let has_truth = {
        let headers = csv.headers()?;
        let cols: Vec<&str> = headers.iter().collect();
        match cols.as_slice() {
            ["sample_id", "label_id", "value"] => false,
            ["sample_id", "label_id", "value", "truth"] => true,
            other => {
                return Err(format_err(
                    "scores csv",
                    format!(
                        "expected header `sample_id,label_id,value[,truth]`, got `{}`",
                        other.join(",")
                    ),
                ))
            }
        }
    };
    let mut rows: Vec<(u64, usize, f64, Option<bool>)> = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        let ctx = |what: &str, e: &dyn std::fmt::Display| {
            format_err("scores csv", format!("row {}: {what}: {e}", line + 2))
        };
        let sample: u64 = record
            .get(0)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|e| ctx("sample_id", &e))?;
        let label: usize = record
            .get(1)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|e| ctx("label_id", &e))?;
        if label >= label_count {
            return Err(format_err(
                "scores csv",
                format!("row {}: label_id {label} out of range [0, {label_count})", line + 2),
            ));
        }
        let value: f64 = record
            .get(2)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|e| ctx("value", &e))?;
        let truth = if has_truth {
            let raw = record.get(3).unwrap_or_default().trim();
            Some(match raw {
                "0" | "false" => false,
                "1" | "true" => true,
                other => {
                    return Err(format_err(
                        "scores csv",
                        format!("row {}: truth must be 0/1, got `{other}`", line + 2),
                    ))
                }
            })
        } else {
            None
        };
        rows.push((sample, label, value, truth));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("scores csv has no rows"));
    }

    let mut sample_ids: Vec<u64> = rows.iter().map(|r| r.0).collect();
    sample_ids.sort_unstable();
    sample_ids.dedup();
    let index_of: BTreeMap<u64, usize> = sample_ids
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i))
        .collect();

    let n = sample_ids.len() * label_count;
    let mut values = vec![f64::NAN; n];
    let mut truth = if has_truth { Some(vec![false; n]) } else { None };
    let mut seen = vec![false; n];
    for (sample, label, value, t) in rows {
        let idx = index_of[&sample] * label_count + label;
        if seen[idx] {
            return Err(format_err(
                "scores csv",
                format!("duplicate cell for sample {sample}, label {label}"),
            ));
        }
        seen[idx] = true;
        values[idx] = value;
        if let (Some(bits), Some(t)) = (&mut truth, t) {
            bits[idx] = t;
        }
    }
    if let Some(idx) = seen.iter().position(|&s| !s) {
        let sample = sample_ids[idx / label_count];
        return Err(format_err(
            "scores csv",
            format!(
                "missing cell for sample {sample}, label {}",
                idx % label_count
            ),
        ));
    }
    Ok(ScoreTable {
        sample_ids,
        label_count,
        values,
        truth,
    })
}

/// Write a dense table as `sample_id,label_id,value[,truth]` rows.
pub fn write_scores<W: Write>(writer: W, table: &ScoreTable) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    if table.truth.is_some() {
        csv.write_record(["sample_id", "label_id", "value", "truth"])?;
    } else {
        csv.write_record(["sample_id", "label_id", "value"])?;
    }
    let k = table.label_count;
    for (m, &sample_id) in table.sample_ids.iter().enumerate() {
        for label in 0..k {
            let value = table.values[m * k + label];
            match &table.truth {
                Some(bits) => csv.write_record([
                    sample_id.to_string(),
                    label.to_string(),
                    value.to_string(),
                    u8::from(bits[m * k + label]).to_string(),
                ])?,
                None => csv.write_record([
                    sample_id.to_string(),
                    label.to_string(),
                    value.to_string(),
                ])?,
            }
        }
    }
    csv.flush()?;
    Ok(())
}

/// One row of a ranking CSV.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RankRow {
    pub rank: usize,
    pub sample_id: u64,
    pub label_id: usize,
    pub lpr: f64,
    pub block_id: usize,
}

/// Write a ranking as `rank,sample_id,label_id,lpr,block_id` rows; sample
/// indices map back to the external ids of `sample_ids`.
pub fn write_ranking<W: Write>(
    writer: W,
    ranking: &Ranking,
    sample_ids: &[u64],
    label_count: usize,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for (pos, &id) in ranking.order.iter().enumerate() {
        csv.serialize(RankRow {
            rank: pos + 1,
            sample_id: sample_ids[id / label_count],
            label_id: id % label_count,
            lpr: ranking.lpr_in_order[pos],
            block_id: ranking.block_of(pos),
        })?;
    }
    csv.flush()?;
    Ok(())
}

/// Read a ranking CSV back, in rank order.
pub fn read_ranking<R: Read>(reader: R) -> Result<Vec<RankRow>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut rows: Vec<RankRow> = Vec::new();
    for record in csv.deserialize() {
        rows.push(record?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("ranking csv has no rows"));
    }
    rows.sort_by_key(|r| r.rank);
    for (i, row) in rows.iter().enumerate() {
        if row.rank != i + 1 {
            return Err(format_err(
                "ranking csv",
                format!("rank column must be 1..=n without gaps; saw {}", row.rank),
            ));
        }
    }
    Ok(rows)
}

/// Write a hit curve as `calls,hits` rows.
pub fn write_hit_curve<W: Write>(writer: W, points: &[(usize, usize)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["calls", "hits"])?;
    for &(calls, hits) in points {
        csv.write_record([calls.to_string(), hits.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Write a PR curve as `recall,precision` rows.
pub fn write_pr_curve<W: Write>(writer: W, points: &[(f64, f64)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["recall", "precision"])?;
    for &(recall, precision) in points {
        csv.write_record([recall.to_string(), precision.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Write paired averaged PR curves on a shared recall grid.
pub fn write_pr_pair<W: Write>(
    writer: W,
    hier: &[(f64, f64)],
    lpr_only: &[(f64, f64)],
) -> Result<()> {
    assert_eq!(hier.len(), lpr_only.len());
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["recall", "hierlpr_precision", "lpr_only_precision"])?;
    for (&(recall, hp), &(_, lp)) in hier.iter().zip(lpr_only) {
        csv.write_record([recall.to_string(), hp.to_string(), lp.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Scalar summary of a ranking evaluation, serialized to `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveSummary {
    pub eauc: f64,
    pub hit_auc: u64,
    pub max_f: f64,
    pub cut_index: usize,
}

impl From<&CurveSet> for CurveSummary {
    fn from(cs: &CurveSet) -> Self {
        Self {
            eauc: cs.eauc,
            hit_auc: cs.hit_auc,
            max_f: cs.max_f.0,
            cut_index: cs.max_f.1,
        }
    }
}
