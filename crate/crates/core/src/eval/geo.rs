//! Location ground truth from geotags by single-linkage clustering.

use crate::constraints::UnionFind;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint};

/// Single-linkage agglomerative clustering under haversine distance, merged
/// until `target` clusters remain. Merges happen in order of
/// (distance, smaller index, larger index) along the minimum spanning tree.
/// Labels are numbered by first appearance.
pub fn geo_ground_truth(points: &[GeoPoint], target: usize) -> Result<Vec<usize>> {
    let n = points.len();
    if target == 0 {
        return Err(Error::InvalidConfig(
            "target cluster count must be positive".into(),
        ));
    }
    if n < target {
        return Err(Error::TooFewPoints {
            needed: target,
            got: n,
        });
    }

    // Prim's algorithm on the complete graph
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = haversine_km(points[current], points[j]);
            let (bd, bi) = best[j];
            if d < bd || (d == bd && current < bi) {
                best[j] = (d, current);
            }
            if next == usize::MAX || best[j].0 < best[next].0 {
                next = j;
            }
        }
        let (d, from) = best[next];
        edges.push((d, from.min(next), from.max(next)));
        in_tree[next] = true;
        current = next;
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf = UnionFind::new(n);
    for &(_, i, j) in edges.iter().take(n - target) {
        uf.union(i, j);
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut next_label = 0;
    Ok((0..n)
        .map(|i| {
            let r = uf.find(i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next_label;
                next_label += 1;
            }
            label_of_root[r]
        })
        .collect())
}

/// Location-patch labels from the geotags of their photos.
pub fn location_truth_from_geo(dataset: &Dataset, target: usize) -> Result<Vec<usize>> {
    let images = dataset.images();
    let mut tagged = Vec::new();
    let mut point_of_image = vec![usize::MAX; images.len()];
    for (i, image) in images.iter().enumerate() {
        if image.locations.is_empty() {
            continue;
        }
        let geo = image.geo.ok_or_else(|| {
            Error::InvalidDataset(format!(
                "image {} has location patches but no geotag",
                image.id
            ))
        })?;
        point_of_image[i] = tagged.len();
        tagged.push(geo);
    }
    let image_labels = geo_ground_truth(&tagged, target)?;
    let mut labels = vec![0; dataset.n_locations()];
    for (i, image) in images.iter().enumerate() {
        for &l in &image.locations {
            labels[l] = image_labels[point_of_image[i]];
        }
    }
    Ok(labels)
}
