//! Temporal grouping of images by 1-D mean-shift over timestamps.

use crate::data::Dataset;
use crate::error::{Error, Result};

const MODE_TOLERANCE_S: f64 = 1e-6;
const MAX_SHIFT_ITERATIONS: usize = 500;

/// Disjoint groups of images taken within a short time of each other, and
/// the location patches of each group (the nonzero diagonal of T_i).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGroups {
    groups: Vec<Vec<usize>>,
    location_sets: Vec<Vec<usize>>,
    image_group: Vec<usize>,
    modes: Vec<f64>,
}

impl TimeGroups {
    /// Builds groups from explicit image index sets.
    pub fn from_image_groups(dataset: &Dataset, groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = dataset.images().len();
        let mut image_group = vec![usize::MAX; n];
        for (g, members) in groups.iter().enumerate() {
            for &img in members {
                if img >= n || image_group[img] != usize::MAX {
                    return Err(Error::InvalidConfig(format!(
                        "time groups must partition the {n} images (image {img})"
                    )));
                }
                image_group[img] = g;
            }
        }
        if image_group.contains(&usize::MAX) {
            return Err(Error::InvalidConfig(
                "time groups must cover every image".into(),
            ));
        }
        let location_sets = groups
            .iter()
            .map(|members| {
                let mut locs: Vec<usize> = members
                    .iter()
                    .flat_map(|&img| dataset.images()[img].locations.iter().copied())
                    .collect();
                locs.sort_unstable();
                locs
            })
            .collect();
        let modes = groups
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&i| dataset.images()[i].timestamp as f64)
                    .sum::<f64>()
                    / m.len().max(1) as f64
            })
            .collect();
        Ok(TimeGroups {
            groups,
            location_sets,
            image_group,
            modes,
        })
    }

    /// Number of groups (t).
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Location patch indices selected by each T_i.
    pub fn location_sets(&self) -> &[Vec<usize>] {
        &self.location_sets
    }

    pub fn group_of_image(&self, image: usize) -> usize {
        self.image_group[image]
    }

    /// Converged mode (seconds) of each group.
    pub fn modes(&self) -> &[f64] {
        &self.modes
    }
}

/// Flat-kernel mean-shift on scalars: every value climbs to the mean of the
/// values within `bandwidth` of the current estimate until it moves less
/// than 1e-6 or 500 steps pass. Returns one mode per input value.
pub fn mean_shift_1d(values: &[f64], bandwidth: f64) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0.0);
    for &v in &sorted {
        prefix.push(prefix.last().unwrap() + v);
    }
    values
        .iter()
        .map(|&start| {
            let mut m = start;
            for _ in 0..MAX_SHIFT_ITERATIONS {
                let lo = sorted.partition_point(|&v| v < m - bandwidth);
                let hi = sorted.partition_point(|&v| v <= m + bandwidth);
                if hi == lo {
                    break;
                }
                let next = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
                let step = (next - m).abs();
                m = next;
                if step < MODE_TOLERANCE_S {
                    break;
                }
            }
            m
        })
        .collect()
}

/// Groups images whose timestamps converge to modes less than half a
/// bandwidth apart. Groups are ordered by mode; members by image index.
pub fn build_time_groups(dataset: &Dataset, bandwidth: f64) -> Result<TimeGroups> {
    let images = dataset.images();
    if images.is_empty() {
        return Err(Error::InvalidDataset("no images to group".into()));
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "temporal bandwidth must be positive, got {bandwidth}"
        )));
    }
    let origin = images.iter().map(|i| i.timestamp).min().unwrap();
    let times: Vec<f64> = images
        .iter()
        .map(|i| (i.timestamp - origin) as f64)
        .collect();
    let modes = mean_shift_1d(&times, bandwidth);

    let mut order: Vec<usize> = (0..images.len()).collect();
    order.sort_by(|&a, &b| modes[a].total_cmp(&modes[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last_mode = f64::NEG_INFINITY;
    for img in order {
        if groups.is_empty() || modes[img] - last_mode >= bandwidth / 2.0 {
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(img);
        last_mode = modes[img];
    }
    for g in groups.iter_mut() {
        g.sort_unstable();
    }
    TimeGroups::from_image_groups(dataset, groups)
}
