//! Batch kernel k-means with optional hard must-link / cannot-link
//! enforcement.
//!
//! The solver maximizes `tr(Z^T K Z)` over normalized indicator matrices.
//! Each sweep moves every unit (a single point, or a whole must-link
//! component in hard mode) to the cluster minimizing its kernel-space
//! distance to the cluster means of the previous sweep,
//!
//! ```text
//! d(i, c) = K_ii - 2 sum_{j in c} K_ij / |c| + sum_{j,l in c} K_jl / |c|^2
//! ```
//!
//! Distances use the unshifted kernel, so a diagonal shift changes the
//! reported objective by exactly `sigma * k` and never the labels. Ties
//! break toward the lowest cluster index. In hard mode a move onto a cluster
//! already holding a cannot-linked unit is skipped for the next best cluster.

mod feasible;
mod init;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use init::{init_assignment, InitStrategy};

use crate::constraints::LinkSet;
use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use feasible::make_feasible;

/// A sweep that lowers the objective by more than this (relative) is
/// rolled back; this only happens for indefinite kernels or forced
/// constraint violations.
const DESCENT_GUARD: f64 = 1e-12;

/// Cluster labels in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig(
                "cluster count must be positive".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidConfig(format!(
                "label {bad} is outside 0..{k}"
            )));
        }
        Ok(Assignment { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn indicator(&self) -> Result<IndicatorMatrix> {
        indicator_matrix(self)
    }

    /// Number of cannot-linked pairs sharing a cluster.
    pub fn cannot_violations(&self, links: &LinkSet) -> usize {
        links
            .cannot_pairs()
            .filter(|&(i, j)| self.labels[i] == self.labels[j])
            .count()
    }

    /// Number of must-linked pairs split across clusters.
    pub fn must_violations(&self, links: &LinkSet) -> usize {
        links
            .must_pairs()
            .filter(|&(i, j)| self.labels[i] != self.labels[j])
            .count()
    }
}

/// The N x k matrix whose column `c` is `z_c / sqrt(|c|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMatrix(DMatrix<f64>);

impl IndicatorMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_points(&self) -> usize {
        self.0.nrows()
    }

    pub fn k(&self) -> usize {
        self.0.ncols()
    }
}

pub fn indicator_matrix(a: &Assignment) -> Result<IndicatorMatrix> {
    let sizes = a.cluster_sizes();
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(empty));
    }
    let mut z = DMatrix::zeros(a.len(), a.k());
    for (i, &c) in a.labels().iter().enumerate() {
        z[(i, c)] = 1.0 / (sizes[c] as f64).sqrt();
    }
    Ok(IndicatorMatrix(z))
}

/// `tr(Z^T K Z)` including the kernel's diagonal shift.
pub fn kernel_objective(kernel: &KernelMatrix, z: &IndicatorMatrix) -> Result<f64> {
    if kernel.size() != z.n_points() {
        return Err(Error::DimensionMismatch {
            expected: kernel.size(),
            found: z.n_points(),
            context: "indicator rows vs kernel size".into(),
        });
    }
    let kz = kernel.to_matrix() * z.as_matrix();
    Ok(z.as_matrix().component_mul(&kz).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Stop once the relative objective change falls below this; 0 disables.
    pub tol: f64,
    pub init: InitStrategy,
    /// Treat must-links as atomic units and cannot-links as forbidden moves.
    pub hard: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 100,
            tol: 1e-6,
            init: InitStrategy::FarthestFirst,
            hard: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    pub assignment: Assignment,
    /// Objective of the starting assignment followed by one entry per
    /// accepted sweep.
    pub objective_trace: Vec<f64>,
    /// The feasible starting point the sweeps ran from.
    pub start: Assignment,
    pub iterations: usize,
    pub converged: bool,
    /// Cannot pairs left inside one cluster because no feasible move existed.
    pub cannot_violations: usize,
}

impl SolverOutput {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

/// Points grouped into atomic units plus unit-level cannot adjacency.
#[derive(Debug, Clone)]
pub(crate) struct Units {
    pub members: Vec<Vec<usize>>,
    pub of_point: Vec<usize>,
    pub cannot: Vec<Vec<usize>>,
}

impl Units {
    pub(crate) fn build(n: usize, links: &LinkSet, hard: bool) -> Result<Units> {
        if let Some(max) = links.max_index() {
            if max >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: max + 1,
                    context: "link index outside kernel".into(),
                });
            }
        }
        if !hard {
            return Ok(Units {
                members: (0..n).map(|i| vec![i]).collect(),
                of_point: (0..n).collect(),
                cannot: vec![Vec::new(); n],
            });
        }
        let of_point = links.must_components(n);
        let n_units = of_point.iter().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); n_units];
        for (i, &u) in of_point.iter().enumerate() {
            members[u].push(i);
        }
        let mut cannot = vec![Vec::new(); n_units];
        for (i, j) in links.cannot_pairs() {
            let (a, b) = (of_point[i], of_point[j]);
            if a != b {
                cannot[a].push(b);
                cannot[b].push(a);
            }
        }
        for adj in cannot.iter_mut() {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Units {
            members,
            of_point,
            cannot,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.members.len()
    }

    pub(crate) fn expand(&self, unit_labels: &[usize], n: usize) -> Vec<usize> {
        let mut labels = vec![0; n];
        for (u, members) in self.members.iter().enumerate() {
            for &i in members {
                labels[i] = unit_labels[u];
            }
        }
        labels
    }

    /// One label per unit: the most common point label, ties to the lowest.
    pub(crate) fn collapse(&self, labels: &[usize], k: usize) -> Vec<usize> {
        self.members
            .iter()
            .map(|members| {
                let mut counts = vec![0usize; k];
                for &i in members {
                    counts[labels[i]] += 1;
                }
                let best = *counts.iter().max().unwrap();
                counts.iter().position(|&c| c == best).unwrap()
            })
            .collect()
    }
}

/// Per-cluster sums used by the distance rule.
struct ClusterStats {
    sizes: Vec<usize>,
    /// `row_sums[i * k + c] = sum_{j in c} K_ij`
    row_sums: Vec<f64>,
    /// `sum_{j,l in c} K_jl / |c|^2`
    compactness: Vec<f64>,
}

impl ClusterStats {
    fn compute(base: &DMatrix<f64>, labels: &[usize], k: usize) -> Self {
        let n = labels.len();
        let mut sizes = vec![0usize; k];
        for &l in labels {
            sizes[l] += 1;
        }
        let row = |i: usize| {
            let mut sums = vec![0.0; k];
            for (j, &l) in labels.iter().enumerate() {
                sums[l] += base[(i, j)];
            }
            sums
        };
        let rows: Vec<Vec<f64>> = if n >= 256 {
            (0..n).into_par_iter().map(row).collect()
        } else {
            (0..n).map(row).collect()
        };
        let row_sums: Vec<f64> = rows.into_iter().flatten().collect();
        let mut within = vec![0.0; k];
        for (i, &l) in labels.iter().enumerate() {
            within[l] += row_sums[i * k + l];
        }
        let compactness = within
            .iter()
            .zip(&sizes)
            .map(|(&w, &s)| if s > 0 { w / (s * s) as f64 } else { 0.0 })
            .collect();
        ClusterStats {
            sizes,
            row_sums,
            compactness,
        }
    }

    /// `tr(Z^T K Z)` for the unshifted kernel.
    fn objective(&self) -> f64 {
        self.compactness
            .iter()
            .zip(&self.sizes)
            .map(|(&c, &s)| c * s as f64)
            .sum()
    }

    fn distance(&self, base: &DMatrix<f64>, i: usize, c: usize, k: usize) -> f64 {
        let size = self.sizes[c];
        if size == 0 {
            return f64::INFINITY;
        }
        base[(i, i)] - 2.0 * self.row_sums[i * k + c] / size as f64 + self.compactness[c]
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidConfig(
            "cluster count must be positive".into(),
        ));
    }
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    Ok(())
}

/// Kernel k-means from a seeded initialization.
pub fn kernel_kmeans(
    kernel: &KernelMatrix,
    k: usize,
    links: &LinkSet,
    seed: u64,
    config: &SolverConfig,
) -> Result<SolverOutput> {
    let n = kernel.size();
    check_k(n, k)?;
    let units = Units::build(n, links, config.hard)?;
    if units.len() < k {
        return Err(Error::Infeasible(format!(
            "{} must-link components cannot fill {k} clusters",
            units.len()
        )));
    }
    let (unit_labels, preferences) = init::init_units(kernel.base(), &units, k, seed, config.init);
    run(kernel, &units, k, unit_labels, preferences, config)
}

/// Kernel k-means warm-started from `start`. In hard mode a must component
/// with mixed starting labels takes its majority label.
pub fn kernel_kmeans_from(
    kernel: &KernelMatrix,
    start: &Assignment,
    links: &LinkSet,
    config: &SolverConfig,
) -> Result<SolverOutput> {
    let n = kernel.size();
    if start.len() != n {
        return Err(Error::LengthMismatch {
            left: start.len(),
            right: n,
        });
    }
    let k = start.k();
    check_k(n, k)?;
    let units = Units::build(n, links, config.hard)?;
    if units.len() < k {
        return Err(Error::Infeasible(format!(
            "{} must-link components cannot fill {k} clusters",
            units.len()
        )));
    }
    let unit_labels = units.collapse(start.labels(), k);
    let preferences = unit_labels
        .iter()
        .map(|&l| {
            std::iter::once(l)
                .chain((0..k).filter(|&c| c != l))
                .collect()
        })
        .collect();
    run(kernel, &units, k, unit_labels, preferences, config)
}

fn run(
    kernel: &KernelMatrix,
    units: &Units,
    k: usize,
    unit_labels: Vec<usize>,
    preferences: Vec<Vec<usize>>,
    config: &SolverConfig,
) -> Result<SolverOutput> {
    let n = kernel.size();
    let base = kernel.base();
    let shift_bonus = kernel.diagonal_shift() * k as f64;

    let mut unit_labels = make_feasible(units, k, unit_labels, &preferences);
    let start = Assignment::new(units.expand(&unit_labels, n), k)?;

    let mut labels = start.labels.clone();
    let mut stats = ClusterStats::compute(base, &labels, k);
    let mut objective = stats.objective();
    let mut trace = vec![objective + shift_bonus];
    let mut iterations = 0;
    let mut converged = false;
    let mut forced = 0;

    for _ in 0..config.max_iter {
        let dist: Vec<Vec<f64>> = units
            .members
            .iter()
            .map(|members| {
                (0..k)
                    .map(|c| members.iter().map(|&i| stats.distance(base, i, c, k)).sum())
                    .collect()
            })
            .collect();

        let (mut next, sweep_forced) = assign_units(units, k, &unit_labels, &dist);
        fill_empty_clusters(units, k, &mut next, &dist);

        if next == unit_labels {
            converged = true;
            break;
        }
        let next_labels = units.expand(&next, n);
        let next_stats = ClusterStats::compute(base, &next_labels, k);
        let next_objective = next_stats.objective();
        if next_objective < objective - DESCENT_GUARD * objective.abs().max(1.0) {
            log::debug!(
                "kernel k-means sweep would lower the objective ({objective} -> {next_objective}); stopping"
            );
            converged = true;
            break;
        }
        forced = sweep_forced;
        let change = (next_objective - objective).abs();
        unit_labels = next;
        labels = next_labels;
        stats = next_stats;
        objective = next_objective;
        trace.push(objective + shift_bonus);
        iterations += 1;
        if change < config.tol * objective.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let assignment = Assignment::new(labels, k)?;
    let violations = count_unit_violations(units, &unit_labels);
    if violations > 0 || forced > 0 {
        log::warn!("{violations} cannot-link pairs could not be separated");
    }
    Ok(SolverOutput {
        assignment,
        objective_trace: trace,
        start,
        iterations,
        converged,
        cannot_violations: violations,
    })
}

/// Sequential in unit order: distances come from the previous sweep, the
/// cannot check sees labels already chosen in this sweep.
fn assign_units(
    units: &Units,
    k: usize,
    current: &[usize],
    dist: &[Vec<f64>],
) -> (Vec<usize>, usize) {
    let mut next = current.to_vec();
    let mut forced = 0;
    for u in 0..units.len() {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| dist[u][a].total_cmp(&dist[u][b]).then(a.cmp(&b)));
        let blocked =
            |c: usize, next: &[usize]| units.cannot[u].iter().filter(|&&v| next[v] == c).count();
        match order.iter().copied().find(|&c| blocked(c, &next) == 0) {
            Some(c) => next[u] = c,
            None => {
                forced += 1;
                next[u] = order
                    .iter()
                    .copied()
                    .min_by_key(|&c| blocked(c, &next))
                    .expect("k >= 1");
            }
        }
    }
    (next, forced)
}

/// Moves the worst-placed unit of a multi-unit cluster into each empty
/// cluster.
fn fill_empty_clusters(units: &Units, k: usize, labels: &mut [usize], dist: &[Vec<f64>]) {
    loop {
        let mut unit_counts = vec![0usize; k];
        for &l in labels.iter() {
            unit_counts[l] += 1;
        }
        let Some(empty) = unit_counts.iter().position(|&c| c == 0) else {
            return;
        };
        let worst = (0..units.len())
            .filter(|&u| unit_counts[labels[u]] >= 2)
            .max_by(|&a, &b| {
                dist[a][labels[a]]
                    .total_cmp(&dist[b][labels[b]])
                    .then(b.cmp(&a))
            });
        match worst {
            Some(u) => labels[u] = empty,
            None => return,
        }
    }
}

fn count_unit_violations(units: &Units, labels: &[usize]) -> usize {
    let mut count = 0;
    for (u, adj) in units.cannot.iter().enumerate() {
        for &v in adj {
            if u < v && labels[u] == labels[v] {
                count += units.members[u].len() * units.members[v].len();
            }
        }
    }
    count
}
