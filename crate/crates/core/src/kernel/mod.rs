//! Kernel assembly: feature affinities, constraint weights, the
//! private-location weights and the coupled kernels
//! `K = 2A + W_links + beta * (sum_i W_i + Q) + sigma * I`.

mod cross;
mod dump;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use cross::{cross_terms_face, cross_terms_location};
pub use dump::{read_matrix, write_matrix};

use crate::constraints::LinkSet;
use crate::data::CooccurrenceMatrix;
use crate::error::{Error, Result};
use crate::solver::Assignment;

/// Largest kernel for which [`SigmaPolicy::Exact`] runs an eigensolver.
pub const EXACT_SIGMA_MAX_N: usize = 2000;

/// Gram matrix `A_ij = x_i . x_j` of the feature rows.
pub fn affinity(features: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = features.len();
    let Some(first) = features.first() else {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    };
    let d = first.len();
    if let Some((i, row)) = features.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: row.len(),
            context: format!("feature row {i}"),
        });
    }
    let x = DMatrix::from_fn(n, d, |i, j| features[i][j]);
    let mut a = &x * x.transpose();
    symmetrize_upper(&mut a);
    Ok(a)
}

/// `+w` at must pairs, `-w` at cannot pairs, zero elsewhere.
pub fn constraint_weights(links: &LinkSet, n: usize, w: f64) -> Result<DMatrix<f64>> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "link weight must be positive, got {w}"
        )));
    }
    if let Some(max) = links.max_index() {
        if max >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: max + 1,
                context: "link index outside kernel".into(),
            });
        }
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, j) in links.must_pairs() {
        m[(i, j)] = w;
        m[(j, i)] = w;
    }
    for (i, j) in links.cannot_pairs() {
        m[(i, j)] = -w;
        m[(j, i)] = -w;
    }
    Ok(m)
}

/// Default link weight: twice the largest absolute affinity entry.
pub fn default_link_weight(a: &DMatrix<f64>) -> f64 {
    let max = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        2.0 * max
    } else {
        1.0
    }
}

/// Diagonal of P: one weight per location patch, near 1 for places visited
/// by a single face cluster and 0 for places visited by all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrivateWeights(pub Vec<f64>);

impl PrivateWeights {
    pub fn ones(n: usize) -> Self {
        PrivateWeights(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `log(k_F / n) / log(k_F)` where `n` is the number of distinct face
/// clusters visiting the location cluster (clamped to at least 1).
pub fn private_weight(k_face: usize, n_face_clusters: usize) -> f64 {
    let k = k_face as f64;
    let n = n_face_clusters.max(1) as f64;
    (k / n).ln() / k.ln()
}

pub fn private_weights(
    face_assignment: &Assignment,
    location_assignment: &Assignment,
    cooc: &CooccurrenceMatrix,
    k_face: usize,
) -> Result<PrivateWeights> {
    if k_face < 2 {
        return Err(Error::InvalidConfig(format!(
            "private weights need at least 2 face clusters, got {k_face}"
        )));
    }
    if face_assignment.len() != cooc.n_faces() {
        return Err(Error::LengthMismatch {
            left: face_assignment.len(),
            right: cooc.n_faces(),
        });
    }
    if location_assignment.len() != cooc.n_locations() {
        return Err(Error::LengthMismatch {
            left: location_assignment.len(),
            right: cooc.n_locations(),
        });
    }
    if let Some(&bad) = face_assignment.labels().iter().find(|&&l| l >= k_face) {
        return Err(Error::InvalidConfig(format!(
            "face label {bad} is outside 0..{k_face}"
        )));
    }
    let k_loc = location_assignment.k();
    let mut seen = vec![vec![false; k_face]; k_loc];
    let face_labels = face_assignment.labels();
    for (l, &c) in location_assignment.labels().iter().enumerate() {
        for f in cooc.faces_of(l) {
            seen[c][face_labels[f]] = true;
        }
    }
    let weight_of_cluster: Vec<f64> = seen
        .iter()
        .map(|s| private_weight(k_face, s.iter().filter(|&&b| b).count()))
        .collect();
    Ok(PrivateWeights(
        location_assignment
            .labels()
            .iter()
            .map(|&c| weight_of_cluster[c])
            .collect(),
    ))
}

/// How the diagonal shift of an assembled kernel is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum SigmaPolicy {
    Zero,
    Fixed(f64),
    /// Smallest shift that makes every Gershgorin disc non-negative.
    #[default]
    Gershgorin,
    /// Negative of the smallest eigenvalue; falls back to Gershgorin above
    /// [`EXACT_SIGMA_MAX_N`].
    Exact,
}

/// `zero`, `gershgorin`, `exact`, or a number for a fixed shift.
impl std::str::FromStr for SigmaPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zero" => Ok(SigmaPolicy::Zero),
            "gershgorin" => Ok(SigmaPolicy::Gershgorin),
            "exact" => Ok(SigmaPolicy::Exact),
            other => match other.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.is_finite() => Ok(SigmaPolicy::Fixed(v)),
                _ => Err(format!(
                    "expected zero, gershgorin, exact or a non-negative number, got '{other}'"
                )),
            },
        }
    }
}

impl std::fmt::Display for SigmaPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SigmaPolicy::Zero => f.write_str("zero"),
            SigmaPolicy::Gershgorin => f.write_str("gershgorin"),
            SigmaPolicy::Exact => f.write_str("exact"),
            SigmaPolicy::Fixed(v) => write!(f, "{v}"),
        }
    }
}

pub fn gershgorin_sigma(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut lower = f64::INFINITY;
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        lower = lower.min(m[(i, i)] - off);
    }
    if lower.is_finite() {
        (-lower).max(0.0)
    } else {
        0.0
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

pub fn choose_sigma(m: &DMatrix<f64>, policy: SigmaPolicy) -> Result<f64> {
    let sigma = match policy {
        SigmaPolicy::Zero => 0.0,
        SigmaPolicy::Fixed(s) => s,
        SigmaPolicy::Gershgorin => gershgorin_sigma(m),
        SigmaPolicy::Exact if m.nrows() <= EXACT_SIGMA_MAX_N && m.nrows() > 0 => {
            (-min_eigenvalue(m)).max(0.0)
        }
        SigmaPolicy::Exact => gershgorin_sigma(m),
    };
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "diagonal shift must be non-negative, got {sigma}"
        )));
    }
    Ok(sigma)
}

/// Symmetric kernel with a separately tracked diagonal shift.
///
/// The solver assigns points using the unshifted matrix; the shift only adds
/// `sigma * k` to the trace objective, so cluster assignments do not depend
/// on it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    base: DMatrix<f64>,
    shift: f64,
}

impl KernelMatrix {
    pub fn new(base: DMatrix<f64>, shift: f64) -> Result<Self> {
        if !base.is_square() {
            return Err(Error::DimensionMismatch {
                expected: base.nrows(),
                found: base.ncols(),
                context: "kernel must be square".into(),
            });
        }
        if !(shift >= 0.0) || !shift.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "diagonal shift must be non-negative, got {shift}"
            )));
        }
        let scale = base.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let n = base.nrows();
        for i in 0..n {
            for j in i + 1..n {
                if (base[(i, j)] - base[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidConfig(format!(
                        "kernel is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(KernelMatrix { base, shift })
    }

    pub fn from_matrix(base: DMatrix<f64>) -> Result<Self> {
        Self::new(base, 0.0)
    }

    pub fn size(&self) -> usize {
        self.base.nrows()
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn diagonal_shift(&self) -> f64 {
        self.shift
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.base[(i, j)] + self.shift
        } else {
            self.base[(i, j)]
        }
    }

    /// The shifted matrix `base + sigma * I`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = self.base.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += self.shift;
        }
        m
    }

    pub fn with_shift(self, shift: f64) -> Result<Self> {
        Self::new(self.base, shift)
    }

    pub fn add_shift(self, extra: f64) -> Result<Self> {
        let shift = self.shift + extra;
        Self::new(self.base, shift)
    }
}

/// `K = 2A + W_links + beta * (cross_sum + Q) + sigma * I`.
pub fn assemble_kernel(
    a: &DMatrix<f64>,
    w_links: &DMatrix<f64>,
    cross_sum: &DMatrix<f64>,
    q: &DMatrix<f64>,
    beta: f64,
    sigma: f64,
) -> Result<KernelMatrix> {
    let n = a.nrows();
    for (name, m) in [
        ("A", a),
        ("W_links", w_links),
        ("cross_sum", cross_sum),
        ("Q", q),
    ] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows().max(m.ncols()),
                context: format!("{name} has shape {}x{}", m.nrows(), m.ncols()),
            });
        }
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    let base = DMatrix::from_fn(n, n, |i, j| {
        2.0 * a[(i, j)] + w_links[(i, j)] + beta * (cross_sum[(i, j)] + q[(i, j)])
    });
    KernelMatrix::new(base, sigma)
}

fn symmetrize_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            m[(j, i)] = m[(i, j)];
        }
    }
}
