//! Link-generation rules for faces and locations.

use std::collections::BTreeMap;

use super::{LinkSet, TimeGroups};
use crate::data::{Dataset, Domain};
use crate::error::{Error, Result};
use crate::geo::haversine_km;
use crate::solver::Assignment;

fn all_pairs(links: &mut LinkSet, members: &[usize], must: bool) {
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            if must {
                links.add_must(members[a], members[b]);
            } else {
                links.add_cannot(members[a], members[b]);
            }
        }
    }
}

/// One person cannot appear twice in a photo.
pub fn cannot_links_faces_same_image(dataset: &Dataset) -> LinkSet {
    let mut links = LinkSet::new(Domain::Face);
    for image in dataset.images() {
        all_pairs(&mut links, &image.faces, false);
    }
    links
}

/// Faces from two geotagged photos taken at most `window_s` apart but more
/// than `geo_threshold_km` apart cannot be the same person. Photos without
/// a geotag are skipped.
pub fn cannot_links_faces_teleport(
    dataset: &Dataset,
    window_s: i64,
    geo_threshold_km: f64,
) -> LinkSet {
    let mut links = LinkSet::new(Domain::Face);
    let mut tagged: Vec<usize> = (0..dataset.images().len())
        .filter(|&i| {
            let img = &dataset.images()[i];
            img.geo.is_some() && !img.faces.is_empty()
        })
        .collect();
    let images = dataset.images();
    tagged.sort_by_key(|&i| (images[i].timestamp, i));
    for (pos, &a) in tagged.iter().enumerate() {
        for &b in &tagged[pos + 1..] {
            if images[b].timestamp - images[a].timestamp > window_s {
                break;
            }
            let (ga, gb) = (images[a].geo.unwrap(), images[b].geo.unwrap());
            if haversine_km(ga, gb) > geo_threshold_km {
                for &fa in &images[a].faces {
                    for &fb in &images[b].faces {
                        links.add_cannot(fa, fb);
                    }
                }
            }
        }
    }
    links
}

/// Location patches cut from the same photo belong to the same place.
pub fn must_links_locations_same_image(dataset: &Dataset) -> LinkSet {
    let mut links = LinkSet::new(Domain::Location);
    for image in dataset.images() {
        all_pairs(&mut links, &image.locations, true);
    }
    links
}

/// Pre-verified geometric matches become must-links.
pub fn must_links_locations_verified(dataset: &Dataset) -> Result<LinkSet> {
    let mut links = LinkSet::new(Domain::Location);
    let n = dataset.n_locations();
    for &(a, b) in dataset.verified_pairs() {
        if a >= n || b >= n {
            return Err(Error::InvalidDataset(format!(
                "verified pair ({a}, {b}) is out of range"
            )));
        }
        links.add_must(a, b);
    }
    Ok(links)
}

/// Within one time group, every location seen together with a face of a
/// given face cluster is must-linked to every other such location.
pub fn must_links_locations_shared_person(
    dataset: &Dataset,
    face_assignment: &Assignment,
    time_groups: &TimeGroups,
) -> Result<LinkSet> {
    if face_assignment.len() != dataset.n_faces() {
        return Err(Error::LengthMismatch {
            left: face_assignment.len(),
            right: dataset.n_faces(),
        });
    }
    let labels = face_assignment.labels();
    let mut links = LinkSet::new(Domain::Location);
    for group in time_groups.groups() {
        let mut by_cluster: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &img in group {
            let image = &dataset.images()[img];
            let mut clusters: Vec<usize> = image.faces.iter().map(|&f| labels[f]).collect();
            clusters.sort_unstable();
            clusters.dedup();
            for c in clusters {
                by_cluster
                    .entry(c)
                    .or_default()
                    .extend(image.locations.iter().copied());
            }
        }
        for locations in by_cluster.values() {
            all_pairs(&mut links, locations, true);
        }
    }
    Ok(links)
}
