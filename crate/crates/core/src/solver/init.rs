//! Starting assignments.

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_k, Assignment, Units};
use crate::constraints::LinkSet;
use crate::data::Domain;
use crate::error::Result;
use crate::kernel::KernelMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Uniform random label per unit.
    Random,
    /// A random first seed, then greedy max-min kernel distance seeds;
    /// each unit joins its nearest seed.
    #[default]
    FarthestFirst,
}

impl std::str::FromStr for InitStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(InitStrategy::Random),
            "farthest_first" | "farthest-first" => Ok(InitStrategy::FarthestFirst),
            other => Err(format!("unknown init strategy '{other}'")),
        }
    }
}

impl std::fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitStrategy::Random => "random",
            InitStrategy::FarthestFirst => "farthest_first",
        })
    }
}

/// Unconstrained starting assignment over single points.
pub fn init_assignment(
    kernel: &KernelMatrix,
    k: usize,
    seed: u64,
    strategy: InitStrategy,
) -> Result<Assignment> {
    let n = kernel.size();
    check_k(n, k)?;
    let units = Units::build(n, &LinkSet::new(Domain::Face), false)?;
    let (labels, _) = init_units(kernel.base(), &units, k, seed, strategy);
    Assignment::new(labels, k)
}

fn kernel_distance(base: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    base[(i, i)] + base[(j, j)] - 2.0 * base[(i, j)]
}

/// Unit labels plus, per unit, the clusters in order of preference.
pub(crate) fn init_units(
    base: &DMatrix<f64>,
    units: &Units,
    k: usize,
    seed: u64,
    strategy: InitStrategy,
) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match strategy {
        InitStrategy::Random => {
            let mut labels: Vec<usize> = (0..units.len()).map(|_| rng.random_range(0..k)).collect();
            fill_randomly(&mut labels, k, &mut rng);
            let prefs = labels
                .iter()
                .map(|&l| {
                    std::iter::once(l)
                        .chain((0..k).filter(|&c| c != l))
                        .collect()
                })
                .collect();
            (labels, prefs)
        }
        InitStrategy::FarthestFirst => farthest_first(base, units, k, &mut rng),
    }
}

/// Moves a random unit from a cluster holding at least two units into each
/// empty cluster.
fn fill_randomly(labels: &mut [usize], k: usize, rng: &mut ChaCha8Rng) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donors: Vec<usize> = (0..labels.len())
            .filter(|&u| counts[labels[u]] >= 2)
            .collect();
        match donors.choose(rng) {
            Some(&u) => labels[u] = empty,
            None => return,
        }
    }
}

fn farthest_first(
    base: &DMatrix<f64>,
    units: &Units,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = units.of_point.len();
    let mut seeds = Vec::with_capacity(k);
    let mut seeded_unit = vec![false; units.len()];
    let mut min_dist = vec![f64::INFINITY; n];

    let mut next = rng.random_range(0..n);
    while seeds.len() < k {
        seeds.push(next);
        seeded_unit[units.of_point[next]] = true;
        if seeds.len() == k {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if seeded_unit[units.of_point[j]] {
                continue;
            }
            min_dist[j] = min_dist[j].min(kernel_distance(base, next, j));
            if best.is_none_or(|(_, d)| min_dist[j] > d) {
                best = Some((j, min_dist[j]));
            }
        }
        match best {
            Some((j, _)) => next = j,
            None => break,
        }
    }

    let mut labels = Vec::with_capacity(units.len());
    let mut prefs = Vec::with_capacity(units.len());
    for members in &units.members {
        let cost: Vec<f64> = (0..k)
            .map(|c| match seeds.get(c) {
                Some(&s) => members.iter().map(|&i| kernel_distance(base, i, s)).sum(),
                None => f64::INFINITY,
            })
            .collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
        labels.push(order[0]);
        prefs.push(order);
    }
    (labels, prefs)
}
