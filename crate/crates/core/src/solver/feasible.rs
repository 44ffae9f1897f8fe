//! Repairs a starting assignment so that no cannot-linked units share a
//! cluster and no cluster is empty.
//!
//! Units with cannot-links are recoloured with DSatur, trying each unit's
//! preferred clusters first. DSatur is exact for two clusters. If it fails
//! and the constrained part is small, an exhaustive search follows; as a last
//! resort each unit takes the cluster with the fewest conflicts.

use super::Units;

const EXHAUSTIVE_MAX_UNITS: usize = 24;

pub(crate) fn make_feasible(
    units: &Units,
    k: usize,
    mut labels: Vec<usize>,
    prefs: &[Vec<usize>],
) -> Vec<usize> {
    let constrained: Vec<usize> = (0..units.len())
        .filter(|&u| !units.cannot[u].is_empty())
        .collect();
    let violated = constrained
        .iter()
        .any(|&u| units.cannot[u].iter().any(|&v| labels[v] == labels[u]));
    if violated {
        let colouring = dsatur(units, k, &constrained, prefs)
            .or_else(|| {
                (constrained.len() <= EXHAUSTIVE_MAX_UNITS)
                    .then(|| exhaustive(units, &constrained, prefs))
                    .flatten()
            })
            .unwrap_or_else(|| {
                log::warn!("no cannot-link-feasible start found; using fewest conflicts");
                least_conflict(units, k, &constrained, prefs)
            });
        for (&u, c) in constrained.iter().zip(colouring) {
            labels[u] = c;
        }
    }
    fill_empty(units, k, &mut labels);
    labels
}

fn dsatur(
    units: &Units,
    k: usize,
    constrained: &[usize],
    prefs: &[Vec<usize>],
) -> Option<Vec<usize>> {
    let mut colour: Vec<Option<usize>> = vec![None; units.len()];
    for _ in 0..constrained.len() {
        let u = constrained
            .iter()
            .copied()
            .filter(|&u| colour[u].is_none())
            .max_by(|&a, &b| {
                let key = |u: usize| {
                    let mut seen: Vec<usize> =
                        units.cannot[u].iter().filter_map(|&v| colour[v]).collect();
                    seen.sort_unstable();
                    seen.dedup();
                    (seen.len(), units.cannot[u].len())
                };
                key(a).cmp(&key(b)).then(b.cmp(&a))
            })?;
        let c = prefs[u]
            .iter()
            .copied()
            .find(|&c| units.cannot[u].iter().all(|&v| colour[v] != Some(c)))?;
        debug_assert!(c < k);
        colour[u] = Some(c);
    }
    Some(constrained.iter().map(|&u| colour[u].unwrap()).collect())
}

fn exhaustive(units: &Units, constrained: &[usize], prefs: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = constrained.to_vec();
    order.sort_by_key(|&u| (std::cmp::Reverse(units.cannot[u].len()), u));
    let mut colour: Vec<Option<usize>> = vec![None; units.len()];

    fn search(
        depth: usize,
        order: &[usize],
        units: &Units,
        prefs: &[Vec<usize>],
        colour: &mut Vec<Option<usize>>,
    ) -> bool {
        let Some(&u) = order.get(depth) else {
            return true;
        };
        for &c in &prefs[u] {
            if units.cannot[u].iter().all(|&v| colour[v] != Some(c)) {
                colour[u] = Some(c);
                if search(depth + 1, order, units, prefs, colour) {
                    return true;
                }
                colour[u] = None;
            }
        }
        false
    }

    search(0, &order, units, prefs, &mut colour)
        .then(|| constrained.iter().map(|&u| colour[u].unwrap()).collect())
}

fn least_conflict(
    units: &Units,
    k: usize,
    constrained: &[usize],
    prefs: &[Vec<usize>],
) -> Vec<usize> {
    let mut colour: Vec<Option<usize>> = vec![None; units.len()];
    for &u in constrained {
        let conflicts = |c: usize| {
            units.cannot[u]
                .iter()
                .filter(|&&v| colour[v] == Some(c))
                .count()
        };
        let best = prefs[u]
            .iter()
            .copied()
            .enumerate()
            .min_by_key(|&(rank, c)| (conflicts(c), rank))
            .map(|(_, c)| c)
            .unwrap_or(0);
        debug_assert!(best < k);
        colour[u] = Some(best);
    }
    constrained.iter().map(|&u| colour[u].unwrap()).collect()
}

/// Fills each empty cluster with the highest-index unit of the cluster
/// holding the most units. An empty cluster has no cannot partners, so
/// feasibility is kept.
fn fill_empty(units: &Units, k: usize, labels: &mut [usize]) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..k)
            .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
            .unwrap();
        if counts[donor] < 2 {
            return;
        }
        let u = (0..units.len())
            .rev()
            .find(|&u| labels[u] == donor)
            .unwrap();
        labels[u] = empty;
    }
}
