//! Hyperedge ranking for binarized expression data.
//!
//! Input is a CSV with one header row of column names and one sample per row.
//! Each column (gene) is binarized within its cohort: `+1` when the value is
//! strictly above the cohort mean of that column, `-1` otherwise. A k-spin
//! model is fitted per cohort and its strongest hyperedges are reported.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use kspin::{recover_tensor, BicScaling, LambdaRule, LearnConfig, Method, Reconcile, SampleMatrix, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::commands::{create, open_read};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenesOptions {
    pub data: Option<PathBuf>,
    pub k: usize,
    pub method: Method,
    pub lambda_rule: LambdaRule,
    pub lambda: Option<f64>,
    pub class_column: Option<String>,
    pub top_m: usize,
    pub out_dir: Option<PathBuf>,
    pub reconcile: Reconcile,
    pub bic_scaling: BicScaling,
    pub solver: SolverConfig,
}

impl Default for GenesOptions {
    fn default() -> Self {
        Self {
            data: None,
            k: 3,
            method: Method::Rise,
            lambda_rule: LambdaRule::default(),
            lambda: None,
            class_column: None,
            top_m: 20,
            out_dir: None,
            reconcile: Reconcile::Mean,
            bic_scaling: BicScaling::SampleSize,
            solver: SolverConfig::default(),
        }
    }
}

/// Raw table split into cohorts, cells kept as text until binarization.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTable {
    pub genes: Vec<String>,
    /// `(label, rows)`, sorted by label; a single unnamed cohort without a
    /// class column.
    pub cohorts: Vec<(Option<String>, Vec<Vec<String>>)>,
}

pub fn read_table(path: &Path, class_column: Option<&str>) -> CliResult<ExpressionTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open_read(path)?);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let class_idx = match class_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Validation(format!("{}: class column `{name}` not found", path.display()))
        })?),
        None => None,
    };
    let genes: Vec<String> =
        headers.iter().enumerate().filter(|(i, _)| Some(*i) != class_idx).map(|(_, h)| h.clone()).collect();
    let mut groups: BTreeMap<Option<String>, Vec<Vec<String>>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let label = class_idx.map(|i| record[i].to_owned());
        let row = record.iter().enumerate().filter(|(i, _)| Some(*i) != class_idx).map(|(_, v)| v.to_owned()).collect();
        groups.entry(label).or_default().push(row);
    }
    if groups.is_empty() {
        return Err(CliError::Validation(format!("{}: no data rows", path.display())));
    }
    Ok(ExpressionTable { genes, cohorts: groups.into_iter().collect() })
}

/// `+1` strictly above the mean, `-1` otherwise. Constant columns map to all
/// `-1`.
pub fn binarize_column(values: &[f64]) -> Vec<i8> {
    let constant = values.windows(2).all(|w| w[0] == w[1]);
    if constant {
        return vec![-1; values.len()];
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|&v| if v > mean { 1 } else { -1 }).collect()
}

/// Binarizes one cohort column by column. Columns with a non-numeric cell or
/// no variation become all `-1` and are named in a warning.
pub fn binarize_cohort(genes: &[String], rows: &[Vec<String>], label: &str) -> CliResult<SampleMatrix> {
    let n = rows.len();
    let p = genes.len();
    let mut data = vec![0i8; n * p];
    for (j, gene) in genes.iter().enumerate() {
        let parsed: Option<Vec<f64>> =
            rows.iter().map(|row| row[j].parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        let column = match parsed {
            Some(values) => {
                if values.windows(2).all(|w| w[0] == w[1]) {
                    log::warn!("{label}: column `{gene}` is constant; mapped to -1");
                }
                binarize_column(&values)
            }
            None => {
                log::warn!("{label}: column `{gene}` has a non-numeric cell; mapped to -1");
                vec![-1; n]
            }
        };
        for (i, v) in column.into_iter().enumerate() {
            data[i * p + j] = v;
        }
    }
    Ok(SampleMatrix::new(n, p, data)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortReport {
    pub label: Option<String>,
    pub n: usize,
    /// Top hyperedges, 0-based sorted tuples, by decreasing |weight|.
    pub top: Vec<(Vec<usize>, f64)>,
    /// `(node, count)` over `top`, by decreasing count then node.
    pub frequency: Vec<(usize, usize)>,
    pub files: Vec<PathBuf>,
}

fn sanitize(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn node_frequency(top: &[(Vec<usize>, f64)]) -> Vec<(usize, usize)> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (e, _) in top {
        for &s in e {
            *counts.entry(s).or_default() += 1;
        }
    }
    let mut freq: Vec<(usize, usize)> = counts.into_iter().collect();
    freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    freq
}

fn write_cohort(dir: &Path, prefix: &str, genes: &[String], k: usize, report: &CohortReport) -> CliResult<Vec<PathBuf>> {
    let edges_path = dir.join(format!("{prefix}hyperedges.csv"));
    let mut w = csv::Writer::from_writer(create(&edges_path)?);
    let mut header = vec!["rank".to_string()];
    header.extend((1..=k).map(|i| format!("node_{i}")));
    header.extend((1..=k).map(|i| format!("gene_{i}")));
    header.push("weight".into());
    w.write_record(&header)?;
    for (rank, (e, weight)) in report.top.iter().enumerate() {
        let mut row = vec![(rank + 1).to_string()];
        row.extend(e.iter().map(|s| (s + 1).to_string()));
        row.extend(e.iter().map(|&s| genes[s].clone()));
        row.push(weight.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(&edges_path, e))?;

    let freq_path = dir.join(format!("{prefix}node_frequency.csv"));
    let mut w = csv::Writer::from_writer(create(&freq_path)?);
    w.write_record(["node", "gene", "frequency"])?;
    for &(s, count) in &report.frequency {
        w.write_record([(s + 1).to_string(), genes[s].clone(), count.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(&freq_path, e))?;

    let map_path = dir.join(format!("{prefix}nodes.csv"));
    let mut w = csv::Writer::from_writer(create(&map_path)?);
    w.write_record(["node", "gene"])?;
    for (s, gene) in genes.iter().enumerate() {
        w.write_record([(s + 1).to_string(), gene.clone()])?;
    }
    w.flush().map_err(|e| CliError::io(&map_path, e))?;
    Ok(vec![edges_path, freq_path, map_path])
}

pub fn genes(opts: &GenesOptions) -> CliResult<Vec<CohortReport>> {
    let data = opts.data.as_deref().ok_or_else(|| CliError::Validation("missing required input: data file".into()))?;
    let out_dir = opts.out_dir.as_deref().ok_or_else(|| CliError::Validation("missing required output: out_dir".into()))?;
    if opts.top_m == 0 {
        return Err(CliError::Validation("top_m must be >= 1".into()));
    }
    let table = read_table(data, opts.class_column.as_deref())?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let cfg = LearnConfig {
        method: opts.method,
        lambda_rule: opts.lambda.map(|lambda| LambdaRule::Fixed { lambda }).unwrap_or_else(|| opts.lambda_rule.clone()),
        support_threshold: 0.0,
        reconcile: opts.reconcile,
        bic_scaling: opts.bic_scaling,
        solver: opts.solver,
    };
    let mut reports = Vec::new();
    for (label, rows) in &table.cohorts {
        let name = label.as_deref().unwrap_or("all");
        let x = binarize_cohort(&table.genes, rows, name)?;
        let fit = recover_tensor(&x, opts.k, &cfg, None)?;
        let mut top = fit.ranked_edges();
        top.truncate(opts.top_m);
        let mut report =
            CohortReport { label: label.clone(), n: x.n(), frequency: node_frequency(&top), top, files: Vec::new() };
        let prefix = label.as_deref().map(|l| format!("{}_", sanitize(l))).unwrap_or_default();
        report.files = write_cohort(out_dir, &prefix, &table.genes, opts.k, &report)?;
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_above_mean() {
        assert_eq!(binarize_column(&[1.0, 2.0, 3.0]), vec![-1, -1, 1]);
        assert_eq!(binarize_column(&[0.1, 0.1, 0.1]), vec![-1, -1, -1]);
        assert_eq!(binarize_column(&[5.0, -1.0]), vec![1, -1]);
    }

    #[test]
    fn bad_columns_become_minus_one() {
        let genes = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let rows = vec![
            vec!["1".to_string(), "x".to_string(), "2".to_string()],
            vec!["3".to_string(), "4".to_string(), "2".to_string()],
        ];
        let x = binarize_cohort(&genes, &rows, "t").unwrap();
        assert_eq!(x.row(0), &[-1, -1, -1]);
        assert_eq!(x.row(1), &[1, -1, -1]);
    }

    #[test]
    fn frequency_order() {
        let top = vec![(vec![0, 1, 2], 1.0), (vec![1, 2, 3], 0.5)];
        assert_eq!(node_frequency(&top), vec![(1, 2), (2, 2), (0, 1), (3, 1)]);
    }

    #[test]
    fn labels_are_file_safe() {
        assert_eq!(sanitize("tumor / A"), "tumor___A");
    }
}
