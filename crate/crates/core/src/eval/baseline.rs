//! Single-domain baselines: Lloyd k-means with and without hard links, and
//! kernel k-means on the plain feature kernel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cocluster::{build_kernel, static_links, CoClusterConfig};
use crate::constraints::LinkSet;
use crate::data::{Dataset, Domain};
use crate::error::{Error, Result};
use crate::kernel::{affinity, KernelMatrix};
use crate::rng::{subseed, Stream};
use crate::solver::{kernel_kmeans, Assignment, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    KmeansPlain,
    KmeansConstrained,
    KernelKmeansPlain,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 3] = [
        BaselineMethod::KmeansPlain,
        BaselineMethod::KmeansConstrained,
        BaselineMethod::KernelKmeansPlain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::KmeansPlain => "kmeans_plain",
            BaselineMethod::KmeansConstrained => "kmeans_constrained",
            BaselineMethod::KernelKmeansPlain => "kernel_kmeans_plain",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown baseline '{s}'"))
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd k-means from `init`. With `links`, must components move together
/// and a move onto a cluster holding a cannot-linked point is skipped for the
/// next nearest centroid. Units are visited in index order against the
/// centroids of the previous sweep; ties go to the lowest cluster; an emptied
/// cluster takes the worst-placed unit of a cluster with two or more units.
pub fn lloyd_kmeans(
    features: &[Vec<f64>],
    init: &Assignment,
    links: Option<&LinkSet>,
    max_iter: usize,
) -> Result<Assignment> {
    let n = features.len();
    if init.len() != n {
        return Err(Error::LengthMismatch {
            left: init.len(),
            right: n,
        });
    }
    let k = init.k();
    let dim = features.first().map_or(0, Vec::len);

    let (unit_of, n_units) = match links {
        Some(l) => {
            let comp = l.must_components(n);
            let count = comp.iter().max().map_or(0, |m| m + 1);
            (comp, count)
        }
        None => ((0..n).collect::<Vec<_>>(), n),
    };
    let mut members = vec![Vec::new(); n_units];
    for (i, &u) in unit_of.iter().enumerate() {
        members[u].push(i);
    }
    let mut cannot = vec![Vec::new(); n_units];
    if let Some(l) = links {
        for (i, j) in l.cannot_pairs() {
            let (a, b) = (unit_of[i], unit_of[j]);
            if a != b {
                cannot[a].push(b);
                cannot[b].push(a);
            }
        }
    }
    let mut labels: Vec<usize> = members.iter().map(|m| init.labels()[m[0]]).collect();

    for _ in 0..max_iter {
        let mut centroids = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (u, m) in members.iter().enumerate() {
            for &i in m {
                sizes[labels[u]] += 1;
                for (c, x) in centroids[labels[u]].iter_mut().zip(&features[i]) {
                    *c += x;
                }
            }
        }
        for (c, &s) in centroids.iter_mut().zip(&sizes) {
            if s > 0 {
                c.iter_mut().for_each(|v| *v /= s as f64);
            }
        }
        let dist: Vec<Vec<f64>> = members
            .iter()
            .map(|m| {
                (0..k)
                    .map(|c| {
                        if sizes[c] == 0 {
                            f64::INFINITY
                        } else {
                            m.iter()
                                .map(|&i| squared_distance(&features[i], &centroids[c]))
                                .sum()
                        }
                    })
                    .collect()
            })
            .collect();

        let mut next = labels.clone();
        for u in 0..n_units {
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| dist[u][a].total_cmp(&dist[u][b]).then(a.cmp(&b)));
            let clashes =
                |c: usize, next: &[usize]| cannot[u].iter().filter(|&&v| next[v] == c).count();
            next[u] = order
                .iter()
                .copied()
                .find(|&c| clashes(c, &next) == 0)
                .unwrap_or_else(|| {
                    order
                        .iter()
                        .copied()
                        .min_by_key(|&c| clashes(c, &next))
                        .unwrap()
                });
        }
        loop {
            let mut counts = vec![0usize; k];
            for &l in &next {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let worst = (0..n_units)
                .filter(|&u| counts[next[u]] >= 2)
                .max_by(|&a, &b| {
                    dist[a][next[a]]
                        .total_cmp(&dist[b][next[b]])
                        .then(b.cmp(&a))
                });
            match worst {
                Some(u) => next[u] = empty,
                None => break,
            }
        }
        if next == labels {
            break;
        }
        labels = next;
    }

    let mut out = vec![0; n];
    for (u, m) in members.iter().enumerate() {
        for &i in m {
            out[i] = labels[u];
        }
    }
    Assignment::new(out, k)
}

/// Runs a baseline on one domain. The starting point is the same seeded
/// (and, for the constrained variant, link-repaired) initialization the
/// kernel solver would use on the linear kernel.
pub fn run_baseline(
    dataset: &Dataset,
    domain: Domain,
    method: BaselineMethod,
    k: usize,
    config: &CoClusterConfig,
) -> Result<Assignment> {
    let features = dataset.features(domain);
    let (face_links, location_links) = static_links(dataset, config)?;
    let links = match domain {
        Domain::Face => face_links,
        Domain::Location => location_links,
    };
    let stream = match domain {
        Domain::Face => Stream::FaceInit,
        Domain::Location => Stream::LocationInit,
    };
    let seed = subseed(config.seed, stream);
    let a = affinity(features)?;
    let solver = &config.solver;
    match method {
        BaselineMethod::KernelKmeansPlain => {
            let kernel = build_kernel(&a, &LinkSet::new(domain), None, None, 0.0, config.sigma)?;
            let plain = SolverConfig {
                hard: false,
                ..solver.clone()
            };
            Ok(kernel_kmeans(&kernel, k, &LinkSet::new(domain), seed, &plain)?.assignment)
        }
        BaselineMethod::KmeansPlain | BaselineMethod::KmeansConstrained => {
            let constrained = method == BaselineMethod::KmeansConstrained;
            let used = if constrained {
                links
            } else {
                LinkSet::new(domain)
            };
            let start_only = SolverConfig {
                max_iter: 0,
                hard: constrained,
                ..solver.clone()
            };
            let start =
                kernel_kmeans(&KernelMatrix::from_matrix(a)?, k, &used, seed, &start_only)?.start;
            lloyd_kmeans(
                features,
                &start,
                constrained.then_some(&used),
                solver.max_iter,
            )
        }
    }
}
