//! Planted two-domain benchmark data.
//!
//! Face and location features are Gaussian blobs around random directions on
//! the unit sphere. Every face cluster ("person") has a home location
//! cluster; with probability `cooccurrence_strength` a photo of that person is
//! taken at home, otherwise at a public location (or anywhere if there are no
//! public locations). Photos of one person at one location cluster are grouped
//! into short bursts, and bursts are spread far apart in time.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{l2_normalize, Dataset, GroundTruth, ImageRecord};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub face_clusters: usize,
    pub location_clusters: usize,
    pub faces_per_cluster: usize,
    pub locations_per_cluster: usize,
    pub face_dim: usize,
    pub location_dim: usize,
    /// Norm of the cluster centers before noise is added.
    pub separation: f64,
    /// Per-coordinate standard deviation of the isotropic noise.
    pub noise: f64,
    /// Probability that a photo of a person is taken at their home location.
    pub cooccurrence_strength: f64,
    /// Fraction of location clusters that are private (home to few people).
    pub private_fraction: f64,
    /// Expected fraction of location patches carrying a verified match.
    pub verified_fraction: f64,
    pub images_per_burst: usize,
    pub burst_spread_s: i64,
    pub burst_gap_s: i64,
    pub start_timestamp: i64,
    pub geotag: bool,
    pub normalize: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            face_clusters: 5,
            location_clusters: 5,
            faces_per_cluster: 20,
            locations_per_cluster: 20,
            face_dim: 32,
            location_dim: 32,
            separation: 1.0,
            noise: 0.35,
            cooccurrence_strength: 0.9,
            private_fraction: 0.8,
            verified_fraction: 0.1,
            images_per_burst: 4,
            burst_spread_s: 900,
            burst_gap_s: 6 * 3600,
            start_timestamp: 1_400_000_000,
            geotag: true,
            normalize: true,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.face_clusters == 0 || self.location_clusters == 0 {
            return fail("cluster counts must be at least 1");
        }
        if self.faces_per_cluster == 0 || self.locations_per_cluster == 0 {
            return fail("patches per cluster must be at least 1");
        }
        if self.face_dim == 0 || self.location_dim == 0 {
            return fail("feature dimensions must be at least 1");
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return fail("separation must be a finite non-negative number");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail("noise must be a finite non-negative number");
        }
        if self.normalize && self.separation == 0.0 && self.noise == 0.0 {
            return fail("normalize needs nonzero separation or noise");
        }
        for (name, p) in [
            ("cooccurrence_strength", self.cooccurrence_strength),
            ("private_fraction", self.private_fraction),
            ("verified_fraction", self.verified_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.images_per_burst == 0 {
            return fail("images_per_burst must be at least 1");
        }
        if self.burst_spread_s < 0 || self.burst_gap_s <= self.burst_spread_s {
            return fail("burst_gap_s must exceed burst_spread_s >= 0");
        }
        Ok(())
    }
}

struct Photo {
    faces: Vec<usize>,
    locations: Vec<usize>,
    person: usize,
    place: usize,
}

pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let mut rng = substream(seed, Stream::Generator);

    let (face_features, face_labels) = blobs(
        &mut rng,
        config.face_clusters,
        config.faces_per_cluster,
        config.face_dim,
        config,
    )?;
    let (location_features, location_labels) = blobs(
        &mut rng,
        config.location_clusters,
        config.locations_per_cluster,
        config.location_dim,
        config,
    )?;

    let mut places: Vec<usize> = (0..config.location_clusters).collect();
    places.shuffle(&mut rng);
    let n_private = (config.private_fraction * config.location_clusters as f64).round() as usize;
    let (private, public) = places.split_at(n_private.min(config.location_clusters));
    let home = |person: usize| -> usize {
        if private.is_empty() {
            public[person % public.len()]
        } else {
            private[person % private.len()]
        }
    };

    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); config.location_clusters];
    for (idx, &label) in location_labels.iter().enumerate() {
        pools[label].push(idx);
    }
    for pool in pools.iter_mut() {
        pool.shuffle(&mut rng);
    }

    let mut face_order: Vec<usize> = (0..face_labels.len()).collect();
    face_order.shuffle(&mut rng);

    let mut photos: Vec<Photo> = Vec::new();
    for &face in &face_order {
        let person = face_labels[face];
        let target = if rng.random::<f64>() < config.cooccurrence_strength {
            home(person)
        } else if !public.is_empty() {
            public[rng.random_range(0..public.len())]
        } else {
            rng.random_range(0..config.location_clusters)
        };

        if let Some(loc) = pools[target].pop() {
            photos.push(Photo {
                faces: vec![face],
                locations: vec![loc],
                person,
                place: target,
            });
            continue;
        }
        // Out of patches at the target: join an existing photo there as a
        // group shot with someone else.
        let others_there: Vec<usize> = photos
            .iter()
            .enumerate()
            .filter(|(_, p)| p.place == target && !has_person(p, &face_labels, person))
            .map(|(i, _)| i)
            .collect();
        if !others_there.is_empty() {
            let pick = others_there[rng.random_range(0..others_there.len())];
            photos[pick].faces.push(face);
            continue;
        }
        let fallback = (0..config.location_clusters)
            .filter(|&c| !pools[c].is_empty())
            .max_by_key(|&c| (pools[c].len(), std::cmp::Reverse(c)));
        if let Some(place) = fallback {
            let loc = pools[place].pop().expect("pool is non-empty");
            photos.push(Photo {
                faces: vec![face],
                locations: vec![loc],
                person,
                place,
            });
            continue;
        }
        let anyone: Vec<usize> = (0..photos.len())
            .filter(|&i| !has_person(&photos[i], &face_labels, person))
            .collect();
        let candidates = if anyone.is_empty() {
            (0..photos.len()).collect()
        } else {
            anyone
        };
        let pick = candidates[rng.random_range(0..candidates.len())];
        photos[pick].faces.push(face);
    }

    // Unused location patches become extra background patches in a photo
    // taken at the same place.
    for place in 0..config.location_clusters {
        while let Some(loc) = pools[place].pop() {
            let there: Vec<usize> = (0..photos.len())
                .filter(|&i| photos[i].place == place)
                .collect();
            let pick = if there.is_empty() {
                rng.random_range(0..photos.len())
            } else {
                there[rng.random_range(0..there.len())]
            };
            photos[pick].locations.push(loc);
        }
    }

    // Bursts: consecutive photos of one person at one place.
    let mut keys: Vec<(usize, usize)> = photos.iter().map(|p| (p.person, p.place)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut bursts: Vec<Vec<usize>> = Vec::new();
    for key in keys {
        let members: Vec<usize> = (0..photos.len())
            .filter(|&i| (photos[i].person, photos[i].place) == key)
            .collect();
        for chunk in members.chunks(config.images_per_burst) {
            bursts.push(chunk.to_vec());
        }
    }
    bursts.shuffle(&mut rng);

    let geo_centers: Vec<GeoPoint> = (0..config.location_clusters)
        .map(|_| {
            GeoPoint::new(
                rng.random_range(-60.0..60.0),
                rng.random_range(-180.0..180.0),
            )
        })
        .collect();

    let mut timed: Vec<(i64, usize)> = Vec::with_capacity(photos.len());
    for (b, burst) in bursts.iter().enumerate() {
        let base = config.start_timestamp + b as i64 * config.burst_gap_s;
        for &photo in burst {
            timed.push((base + rng.random_range(0..=config.burst_spread_s), photo));
        }
    }
    timed.sort_by_key(|&(t, photo)| (t, photo));

    let mut images = Vec::with_capacity(timed.len());
    for (n, (timestamp, photo)) in timed.into_iter().enumerate() {
        let p = &mut photos[photo];
        p.faces.sort_unstable();
        p.locations.sort_unstable();
        let geo = if config.geotag {
            let c = geo_centers[p.place];
            Some(GeoPoint::new(
                c.lat + rng.random_range(-0.005..0.005),
                c.lon + rng.random_range(-0.005..0.005),
            ))
        } else {
            None
        };
        images.push(ImageRecord {
            id: format!("img{n:05}"),
            timestamp,
            geo,
            faces: std::mem::take(&mut p.faces),
            locations: std::mem::take(&mut p.locations),
        });
    }

    let mut verified = BTreeSet::new();
    if config.locations_per_cluster > 1 {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); config.location_clusters];
        for (idx, &label) in location_labels.iter().enumerate() {
            members[label].push(idx);
        }
        for group in &members {
            for (pos, &a) in group.iter().enumerate() {
                if rng.random::<f64>() < config.verified_fraction {
                    let mut other = rng.random_range(0..group.len() - 1);
                    if other >= pos {
                        other += 1;
                    }
                    let b = group[other];
                    verified.insert((a.min(b), a.max(b)));
                }
            }
        }
    }

    let dataset = Dataset::new(
        images,
        face_features,
        location_features,
        verified.into_iter().collect(),
    )?;
    let truth = GroundTruth {
        face_labels,
        location_labels,
    };
    Ok((dataset, truth))
}

fn has_person(photo: &Photo, face_labels: &[usize], person: usize) -> bool {
    photo.faces.iter().any(|&f| face_labels[f] == person)
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = l2_normalize(&v) {
            return u;
        }
    }
}

/// Gaussian blobs with shuffled patch order. Returns rows and planted labels.
fn blobs(
    rng: &mut ChaCha8Rng,
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    config: &SyntheticConfig,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| {
            unit_direction(rng, dim)
                .into_iter()
                .map(|x| x * config.separation)
                .collect()
        })
        .collect();
    let mut labels: Vec<usize> = (0..clusters)
        .flat_map(|c| std::iter::repeat_n(c, per_cluster))
        .collect();
    labels.shuffle(rng);
    let mut rows = Vec::with_capacity(labels.len());
    for &label in &labels {
        let row = loop {
            let row: Vec<f64> = centers[label]
                .iter()
                .map(|&c| c + config.noise * rng.sample::<f64, _>(StandardNormal))
                .collect();
            if !config.normalize {
                break row;
            }
            if let Ok(unit) = l2_normalize(&row) {
                break unit;
            }
        };
        rows.push(row);
    }
    Ok((rows, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_cooccurrence;

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = SyntheticConfig::default();
        let (a, ta) = generate_synthetic(&cfg, 11).unwrap();
        let (b, tb) = generate_synthetic(&cfg, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate_synthetic(&cfg, 12).unwrap();
        assert_ne!(a.face_features(), c.face_features());
    }

    #[test]
    fn every_image_has_a_face_and_a_location() {
        let (ds, truth) = generate_synthetic(&SyntheticConfig::default(), 3).unwrap();
        assert!(ds
            .images()
            .iter()
            .all(|i| !i.faces.is_empty() && !i.locations.is_empty()));
        assert_eq!(ds.n_faces(), 100);
        assert_eq!(ds.n_locations(), 100);
        truth.validate(&ds).unwrap();
    }

    #[test]
    fn label_multiset_sizes_do_not_depend_on_seed() {
        let cfg = SyntheticConfig {
            face_clusters: 3,
            faces_per_cluster: 7,
            ..SyntheticConfig::default()
        };
        for seed in 0..5 {
            let (_, truth) = generate_synthetic(&cfg, seed).unwrap();
            let mut counts = [0usize; 3];
            for &l in &truth.face_labels {
                counts[l] += 1;
            }
            assert_eq!(counts, [7, 7, 7]);
        }
    }

    #[test]
    fn strength_one_ties_people_to_their_home() {
        let cfg = SyntheticConfig {
            cooccurrence_strength: 1.0,
            private_fraction: 1.0,
            ..SyntheticConfig::default()
        };
        let (ds, truth) = generate_synthetic(&cfg, 5).unwrap();
        let c = build_cooccurrence(&ds);
        // with one home per person, each person's faces see a single location cluster
        for person in 0..cfg.face_clusters {
            let places: BTreeSet<usize> = (0..ds.n_faces())
                .filter(|&f| truth.face_labels[f] == person)
                .flat_map(|f| {
                    c.locations_of(f)
                        .map(|l| truth.location_labels[l])
                        .collect::<Vec<_>>()
                })
                .collect();
            assert_eq!(places.len(), 1, "person {person} visits {places:?}");
        }
    }

    #[test]
    fn rejects_empty_clusters() {
        let cfg = SyntheticConfig {
            faces_per_cluster: 0,
            ..SyntheticConfig::default()
        };
        assert!(generate_synthetic(&cfg, 0).is_err());
    }
}
