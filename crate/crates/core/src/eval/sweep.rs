//! Rand index sweeps over cluster counts, methods and seeds.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::{run_baseline, BaselineMethod};
use super::metrics::{adjusted_rand_index, rand_index};
use crate::cocluster::{cocluster, CoClusterConfig};
use crate::data::{Dataset, Domain, GroundTruth};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cocluster,
    KmeansPlain,
    KmeansConstrained,
    KernelKmeansPlain,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Cocluster,
        Method::KmeansPlain,
        Method::KmeansConstrained,
        Method::KernelKmeansPlain,
    ];

    pub fn name(self) -> &'static str {
        match self.baseline() {
            Some(b) => b.name(),
            None => "cocluster",
        }
    }

    pub fn baseline(self) -> Option<BaselineMethod> {
        match self {
            Method::Cocluster => None,
            Method::KmeansPlain => Some(BaselineMethod::KmeansPlain),
            Method::KmeansConstrained => Some(BaselineMethod::KmeansConstrained),
            Method::KernelKmeansPlain => Some(BaselineMethod::KernelKmeansPlain),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Cluster counts; co-clustering uses the same count in both domains.
    pub ks: Vec<usize>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Settings shared by every cell; `k_*` and `seed` are overridden.
    pub base: CoClusterConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub domain: Domain,
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub rand_index: f64,
    pub adjusted_rand_index: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub domain: Domain,
    pub method: Method,
    pub k: usize,
    pub runs: usize,
    pub mean_rand_index: f64,
    pub mean_adjusted_rand_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub config: SweepConfig,
}

impl EvalReport {
    /// Writes `domain,method,k,seed,rand_index,adjusted_rand_index,runtime_s`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows)
    }

    /// Mean scores per (domain, method, k), sorted.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut out: Vec<SummaryRow> = Vec::new();
        let mut rows: Vec<&EvalRow> = self.rows.iter().collect();
        rows.sort_by_key(|r| (r.domain, r.method, r.k, r.seed));
        for r in rows {
            match out.last_mut() {
                Some(s) if (s.domain, s.method, s.k) == (r.domain, r.method, r.k) => {
                    s.runs += 1;
                    s.mean_rand_index += r.rand_index;
                    s.mean_adjusted_rand_index += r.adjusted_rand_index;
                }
                _ => out.push(SummaryRow {
                    domain: r.domain,
                    method: r.method,
                    k: r.k,
                    runs: 1,
                    mean_rand_index: r.rand_index,
                    mean_adjusted_rand_index: r.adjusted_rand_index,
                }),
            }
        }
        for s in &mut out {
            s.mean_rand_index /= s.runs as f64;
            s.mean_adjusted_rand_index /= s.runs as f64;
        }
        out
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "domain",
            "method",
            "k",
            "runs",
            "mean_rand_index",
            "mean_adjusted_rand_index",
        ])?;
        for s in self.summary() {
            w.write_record([
                s.domain.name().to_string(),
                s.method.name().to_string(),
                s.k.to_string(),
                s.runs.to_string(),
                s.mean_rand_index.to_string(),
                s.mean_adjusted_rand_index.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[EvalRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "domain",
        "method",
        "k",
        "seed",
        "rand_index",
        "adjusted_rand_index",
        "runtime_s",
    ])?;
    for r in rows {
        w.write_record([
            r.domain.name().to_string(),
            r.method.name().to_string(),
            r.k.to_string(),
            r.seed.to_string(),
            r.rand_index.to_string(),
            r.adjusted_rand_index.to_string(),
            format!("{:.6}", r.runtime_s),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Scores one predicted labeling against ground truth.
pub fn score(
    domain: Domain,
    method: Method,
    k: usize,
    seed: u64,
    pred: &[usize],
    truth: &GroundTruth,
    runtime_s: f64,
) -> Result<EvalRow> {
    let t = truth.labels(domain);
    Ok(EvalRow {
        domain,
        method,
        k,
        seed,
        rand_index: rand_index(pred, t)?,
        adjusted_rand_index: adjusted_rand_index(pred, t)?,
        runtime_s,
    })
}

fn run_cell(
    dataset: &Dataset,
    truth: &GroundTruth,
    base: &CoClusterConfig,
    method: Method,
    k: usize,
    seed: u64,
) -> Result<Vec<EvalRow>> {
    let config = CoClusterConfig {
        k_face: k,
        k_location: k,
        seed,
        ..base.clone()
    };
    let started = Instant::now();
    match method.baseline() {
        None => {
            let result = cocluster(dataset, &config)?;
            let elapsed = started.elapsed().as_secs_f64();
            [Domain::Face, Domain::Location]
                .into_iter()
                .map(|d| {
                    score(
                        d,
                        method,
                        k,
                        seed,
                        result.assignment(d).labels(),
                        truth,
                        elapsed,
                    )
                })
                .collect()
        }
        Some(b) => [Domain::Face, Domain::Location]
            .into_iter()
            .map(|d| {
                let started = Instant::now();
                let a = run_baseline(dataset, d, b, k, &config)?;
                score(
                    d,
                    method,
                    k,
                    seed,
                    a.labels(),
                    truth,
                    started.elapsed().as_secs_f64(),
                )
            })
            .collect(),
    }
}

/// Runs every (method, k, seed) cell in parallel and reports both domains.
pub fn sweep_k(
    dataset: &Dataset,
    truth: Option<&GroundTruth>,
    config: &SweepConfig,
) -> Result<EvalReport> {
    let truth = truth.ok_or(Error::MissingGroundTruth)?;
    truth.validate(dataset)?;
    if config.ks.is_empty() || config.methods.is_empty() || config.seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one k, method and seed".into(),
        ));
    }
    let cells: Vec<(Method, usize, u64)> = config
        .methods
        .iter()
        .flat_map(|&m| {
            config
                .ks
                .iter()
                .flat_map(move |&k| config.seeds.iter().map(move |&s| (m, k, s)))
        })
        .collect();
    let results: Vec<Result<Vec<EvalRow>>> = cells
        .par_iter()
        .map(|&(m, k, s)| run_cell(dataset, truth, &config.base, m, k, s))
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by_key(|r| (r.domain, r.method, r.k, r.seed));
    Ok(EvalReport {
        rows,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(domain: Domain, k: usize, seed: u64, ri: f64) -> EvalRow {
        EvalRow {
            domain,
            method: Method::Cocluster,
            k,
            seed,
            rand_index: ri,
            adjusted_rand_index: ri,
            runtime_s: 0.0,
        }
    }

    fn report(rows: Vec<EvalRow>) -> EvalReport {
        EvalReport {
            rows,
            config: SweepConfig {
                ks: vec![2],
                methods: vec![Method::Cocluster],
                seeds: vec![0],
                base: CoClusterConfig::default(),
            },
        }
    }

    #[test]
    fn summary_averages_seeds() {
        let r = report(vec![
            row(Domain::Face, 2, 0, 0.5),
            row(Domain::Face, 2, 1, 0.5),
            row(Domain::Location, 2, 0, 0.25),
            row(Domain::Location, 2, 1, 0.75),
        ]);
        let s = r.summary();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].mean_rand_index, 0.5);
        assert_eq!(s[1].mean_rand_index, 0.5);
        assert_eq!(s[1].runs, 2);
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        report(vec![row(Domain::Face, 3, 7, 1.0)])
            .write_csv(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "domain,method,k,seed,rand_index,adjusted_rand_index,runtime_s"
        );
        assert_eq!(lines.next().unwrap(), "face,cocluster,3,7,1,1,0.000000");
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn missing_truth_is_an_error() {
        let d = crate::data::generate_synthetic(
            &crate::data::SyntheticConfig {
                faces_per_cluster: 3,
                locations_per_cluster: 3,
                face_clusters: 2,
                location_clusters: 2,
                ..Default::default()
            },
            0,
        )
        .unwrap()
        .0;
        let cfg = report(vec![]).config;
        assert!(matches!(
            sweep_k(&d, None, &cfg),
            Err(Error::MissingGroundTruth)
        ));
    }
}
