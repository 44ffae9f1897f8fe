//! Dataset schema: images, face and location patches, their feature vectors,
//! and the location x face co-occurrence matrix.

mod bundle;
mod synthetic;

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use bundle::{load_dataset, load_ground_truth, save_dataset};
pub use synthetic::{generate_synthetic, SyntheticConfig};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// The two coupled clustering domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Face,
    Location,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Face => "face",
            Domain::Location => "location",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "face" => Ok(Domain::Face),
            "location" => Ok(Domain::Location),
            other => Err(Error::InvalidConfig(format!("unknown domain {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchId {
    pub domain: Domain,
    pub index: usize,
}

impl PatchId {
    pub fn face(index: usize) -> Self {
        PatchId {
            domain: Domain::Face,
            index,
        }
    }

    pub fn location(index: usize) -> Self {
        PatchId {
            domain: Domain::Location,
            index,
        }
    }
}

/// One photo: its timestamp, optional geotag and the patches cut from it.
/// Patch lists hold 0-based indices into the dataset's feature tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    pub timestamp: i64,
    pub geo: Option<GeoPoint>,
    pub faces: Vec<usize>,
    pub locations: Vec<usize>,
}

impl ImageRecord {
    pub fn patches(&self) -> impl Iterator<Item = PatchId> + '_ {
        self.faces
            .iter()
            .map(|&i| PatchId::face(i))
            .chain(self.locations.iter().map(|&i| PatchId::location(i)))
    }
}

/// A validated collection of images and patch features.
///
/// Construction through [`Dataset::new`] enforces that every patch lives in
/// exactly one image, feature rows share a dimension per domain and verified
/// location pairs point at real patches. The value is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Vec<ImageRecord>,
    face_features: Vec<Vec<f64>>,
    location_features: Vec<Vec<f64>>,
    verified_pairs: Vec<(usize, usize)>,
    face_image: Vec<usize>,
    location_image: Vec<usize>,
}

impl Dataset {
    pub fn new(
        images: Vec<ImageRecord>,
        face_features: Vec<Vec<f64>>,
        location_features: Vec<Vec<f64>>,
        verified_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        check_features(&face_features, "face features")?;
        check_features(&location_features, "location features")?;

        let n_faces = face_features.len();
        let n_locations = location_features.len();
        let mut face_image = vec![usize::MAX; n_faces];
        let mut location_image = vec![usize::MAX; n_locations];
        let mut ids = HashSet::new();

        for (img_idx, image) in images.iter().enumerate() {
            if !ids.insert(image.id.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate image id {:?}",
                    image.id
                )));
            }
            if let Some(geo) = image.geo {
                if !(geo.lat.is_finite() && geo.lon.is_finite())
                    || geo.lat.abs() > 90.0
                    || geo.lon.abs() > 180.0
                {
                    return Err(Error::InvalidDataset(format!(
                        "image {:?} has out-of-range coordinates",
                        image.id
                    )));
                }
            }
            for (list, owner, domain, count) in [
                (&image.faces, &mut face_image, "face", n_faces),
                (
                    &image.locations,
                    &mut location_image,
                    "location",
                    n_locations,
                ),
            ] {
                for &patch in list.iter() {
                    if patch >= count {
                        return Err(Error::DanglingReference {
                            image: image.id.clone(),
                            domain,
                            index: patch,
                            count,
                        });
                    }
                    if owner[patch] != usize::MAX {
                        let msg = if owner[patch] == img_idx {
                            format!("image {:?} lists {domain} patch {patch} twice", image.id)
                        } else {
                            format!(
                                "{domain} patch {patch} appears in images {:?} and {:?}",
                                images[owner[patch]].id, image.id
                            )
                        };
                        return Err(Error::InvalidDataset(msg));
                    }
                    owner[patch] = img_idx;
                }
            }
        }

        for (domain, owner) in [("face", &face_image), ("location", &location_image)] {
            if let Some(orphan) = owner.iter().position(|&o| o == usize::MAX) {
                return Err(Error::InvalidDataset(format!(
                    "{domain} patch {orphan} does not appear in any image"
                )));
            }
        }

        for &(a, b) in &verified_pairs {
            if a >= n_locations || b >= n_locations {
                return Err(Error::InvalidDataset(format!(
                    "verified pair ({a}, {b}) references a location outside 0..{n_locations}"
                )));
            }
            if a == b {
                return Err(Error::InvalidDataset(format!(
                    "verified pair ({a}, {b}) links a patch to itself"
                )));
            }
        }

        Ok(Dataset {
            images,
            face_features,
            location_features,
            verified_pairs,
            face_image,
            location_image,
        })
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn face_features(&self) -> &[Vec<f64>] {
        &self.face_features
    }

    pub fn location_features(&self) -> &[Vec<f64>] {
        &self.location_features
    }

    pub fn features(&self, domain: Domain) -> &[Vec<f64>] {
        match domain {
            Domain::Face => &self.face_features,
            Domain::Location => &self.location_features,
        }
    }

    pub fn verified_pairs(&self) -> &[(usize, usize)] {
        &self.verified_pairs
    }

    pub fn n_faces(&self) -> usize {
        self.face_features.len()
    }

    pub fn n_locations(&self) -> usize {
        self.location_features.len()
    }

    pub fn n_patches(&self, domain: Domain) -> usize {
        self.features(domain).len()
    }

    /// Index of the image holding the given patch.
    pub fn image_of(&self, patch: PatchId) -> usize {
        match patch.domain {
            Domain::Face => self.face_image[patch.index],
            Domain::Location => self.location_image[patch.index],
        }
    }

    /// Returns a copy of the dataset with every feature row L2-normalized.
    pub fn normalized(&self) -> Result<Dataset> {
        let norm = |rows: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
            rows.iter().map(|r| l2_normalize(r)).collect()
        };
        Ok(Dataset {
            face_features: norm(&self.face_features)?,
            location_features: norm(&self.location_features)?,
            ..self.clone()
        })
    }

    /// Same images and features with the face-location coupling removed:
    /// faces and locations are moved into separate images. Used to check
    /// that the alternation reduces to independent clustering.
    pub fn without_cooccurrence(&self) -> Dataset {
        let mut images = Vec::with_capacity(self.images.len() * 2);
        for image in &self.images {
            if !image.faces.is_empty() {
                images.push(ImageRecord {
                    id: format!("{}#faces", image.id),
                    locations: Vec::new(),
                    ..image.clone()
                });
            }
            if !image.locations.is_empty() {
                images.push(ImageRecord {
                    id: format!("{}#locations", image.id),
                    faces: Vec::new(),
                    ..image.clone()
                });
            }
        }
        Dataset::new(
            images,
            self.face_features.clone(),
            self.location_features.clone(),
            self.verified_pairs.clone(),
        )
        .expect("splitting images preserves validity")
    }
}

fn check_features(rows: &[Vec<f64>], what: &str) -> Result<()> {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    let dim = first.len();
    if dim == 0 {
        return Err(Error::InvalidDataset(format!("{what} have dimension 0")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.len(),
                context: format!("{what} row {i}"),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "{what} row {i} contains a non-finite value"
            )));
        }
    }
    Ok(())
}

/// Scales `v` to unit Euclidean norm.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Concatenates `ratio * part_a` with `part_b`, e.g. a bag-of-words block
/// and a colour histogram weighted against each other.
pub fn combine_features(part_a: &[f64], part_b: &[f64], ratio: f64) -> Result<Vec<f64>> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::NonPositiveRatio(ratio));
    }
    Ok(part_a
        .iter()
        .map(|x| ratio * x)
        .chain(part_b.iter().copied())
        .collect())
}

/// Binary N_L x N_F matrix: entry (l, f) is 1 when location patch `l` and
/// face patch `f` were cut from the same image.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    entries: DMatrix<f64>,
}

impl CooccurrenceMatrix {
    pub fn zeros(n_locations: usize, n_faces: usize) -> Self {
        CooccurrenceMatrix {
            entries: DMatrix::zeros(n_locations, n_faces),
        }
    }

    /// Builds from explicit (location, face) incidences.
    pub fn from_pairs(
        n_locations: usize,
        n_faces: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut m = Self::zeros(n_locations, n_faces);
        for (l, f) in pairs {
            if l >= n_locations || f >= n_faces {
                return Err(Error::DimensionMismatch {
                    expected: n_locations.max(n_faces),
                    found: l.max(f),
                    context: "co-occurrence pair out of range".into(),
                });
            }
            m.entries[(l, f)] = 1.0;
        }
        Ok(m)
    }

    pub fn n_locations(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_faces(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, location: usize, face: usize) -> bool {
        self.entries[(location, face)] != 0.0
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Locations co-occurring with `face`.
    pub fn locations_of(&self, face: usize) -> impl Iterator<Item = usize> + '_ {
        let col = self.entries.column(face);
        (0..self.n_locations()).filter(move |&l| col[l] != 0.0)
    }

    /// Faces co-occurring with `location`.
    pub fn faces_of(&self, location: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_faces()).filter(move |&f| self.entries[(location, f)] != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }
}

pub fn build_cooccurrence(dataset: &Dataset) -> CooccurrenceMatrix {
    let mut m = CooccurrenceMatrix::zeros(dataset.n_locations(), dataset.n_faces());
    for image in dataset.images() {
        for &l in &image.locations {
            for &f in &image.faces {
                m.entries[(l, f)] = 1.0;
            }
        }
    }
    m
}

/// Planted or annotated labels for both domains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub face_labels: Vec<usize>,
    pub location_labels: Vec<usize>,
}

impl GroundTruth {
    pub fn labels(&self, domain: Domain) -> &[usize] {
        match domain {
            Domain::Face => &self.face_labels,
            Domain::Location => &self.location_labels,
        }
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        for domain in [Domain::Face, Domain::Location] {
            let labels = self.labels(domain);
            if labels.len() != dataset.n_patches(domain) {
                return Err(Error::LengthMismatch {
                    left: labels.len(),
                    right: dataset.n_patches(domain),
                });
            }
            let k = labels.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; k];
            for &l in labels {
                seen[l] = true;
            }
            if let Some(gap) = seen.iter().position(|s| !s) {
                return Err(Error::InvalidDataset(format!(
                    "{domain} ground-truth labels are not dense: label {gap} unused"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(id: &str, t: i64, faces: &[usize], locations: &[usize]) -> ImageRecord {
        ImageRecord {
            id: id.into(),
            timestamp: t,
            geo: None,
            faces: faces.to_vec(),
            locations: locations.to_vec(),
        }
    }

    #[test]
    fn l2_normalize_examples() {
        let v = l2_normalize(&[3.0, 4.0]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
        assert_eq!(l2_normalize(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(matches!(l2_normalize(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn combine_features_examples() {
        assert_eq!(
            combine_features(&[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap(),
            vec![1.0, 0.0, 0.0, 1.0]
        );
        assert_eq!(
            combine_features(&[1.0, 0.0], &[0.0, 1.0], 2.0).unwrap(),
            vec![2.0, 0.0, 0.0, 1.0]
        );
        assert_eq!(
            combine_features(&[0.6, 0.8], &[1.0, 0.0], 1.0).unwrap(),
            vec![0.6, 0.8, 1.0, 0.0]
        );
        assert!(combine_features(&[1.0], &[1.0], 0.0).is_err());
        assert!(combine_features(&[1.0], &[1.0], -1.0).is_err());
    }

    #[test]
    fn cooccurrence_column_matches_example() {
        // face 0 shares an image with the third and fifth location patches
        let ds = Dataset::new(
            vec![
                image("a", 0, &[0], &[2, 4]),
                image("b", 1, &[], &[0, 1, 3, 5]),
            ],
            vec![vec![1.0]],
            vec![vec![1.0]; 6],
            vec![],
        )
        .unwrap();
        let c = build_cooccurrence(&ds);
        let col: Vec<f64> = c.as_matrix().column(0).iter().copied().collect();
        assert_eq!(col, vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn cooccurrence_two_images_same_face_column() {
        // two images (f0, l0) and (f0, l1) cannot both hold face 0, so use f0 and f1
        // in the images and check the aggregate column sums instead
        let ds = Dataset::new(
            vec![image("a", 0, &[0], &[0, 1])],
            vec![vec![1.0]],
            vec![vec![1.0]; 2],
            vec![],
        )
        .unwrap();
        let c = build_cooccurrence(&ds);
        assert_eq!(
            c.as_matrix().column(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn no_shared_images_gives_zero_matrix() {
        let ds = Dataset::new(
            vec![image("a", 0, &[0], &[]), image("b", 1, &[], &[0])],
            vec![vec![1.0]],
            vec![vec![1.0]],
            vec![],
        )
        .unwrap();
        assert!(build_cooccurrence(&ds).is_zero());
    }

    #[test]
    fn dataset_rejects_bad_inputs() {
        let dangling = Dataset::new(
            vec![image("a", 0, &[5], &[])],
            vec![vec![1.0]; 3],
            vec![],
            vec![],
        );
        assert!(matches!(
            dangling,
            Err(Error::DanglingReference { index: 5, .. })
        ));

        let dim = Dataset::new(
            vec![image("a", 0, &[0, 1], &[])],
            vec![vec![1.0, 2.0], vec![1.0]],
            vec![],
            vec![],
        );
        assert!(matches!(dim, Err(Error::DimensionMismatch { .. })));

        let twice = Dataset::new(
            vec![image("a", 0, &[0], &[]), image("b", 0, &[0], &[])],
            vec![vec![1.0]],
            vec![],
            vec![],
        );
        assert!(twice.is_err());

        let orphan = Dataset::new(
            vec![image("a", 0, &[0], &[])],
            vec![vec![1.0]; 2],
            vec![],
            vec![],
        );
        assert!(orphan.is_err());

        let bad_pair = Dataset::new(
            vec![image("a", 0, &[], &[0])],
            vec![],
            vec![vec![1.0]],
            vec![(0, 3)],
        );
        assert!(bad_pair.is_err());
    }

    #[test]
    fn column_sums_count_shared_locations() {
        let ds = Dataset::new(
            vec![
                image("a", 0, &[0, 1], &[0, 1, 2]),
                image("b", 5, &[2], &[3]),
            ],
            vec![vec![1.0]; 3],
            vec![vec![1.0]; 4],
            vec![],
        )
        .unwrap();
        let c = build_cooccurrence(&ds);
        for f in 0..3 {
            let sum: f64 = c.as_matrix().column(f).sum();
            let img = &ds.images()[ds.image_of(PatchId::face(f))];
            assert_eq!(sum as usize, img.locations.len());
        }
        assert_eq!(build_cooccurrence(&ds), c);
    }

    #[test]
    fn ground_truth_must_be_dense() {
        let ds = Dataset::new(
            vec![image("a", 0, &[0, 1], &[0])],
            vec![vec![1.0]; 2],
            vec![vec![1.0]],
            vec![],
        )
        .unwrap();
        let ok = GroundTruth {
            face_labels: vec![0, 1],
            location_labels: vec![0],
        };
        assert!(ok.validate(&ds).is_ok());
        let gap = GroundTruth {
            face_labels: vec![0, 2],
            location_labels: vec![0],
        };
        assert!(gap.validate(&ds).is_err());
    }
}
