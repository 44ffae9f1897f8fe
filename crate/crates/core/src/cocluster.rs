//! Alternating co-clustering of faces and locations.
//!
//! Round 0 clusters each domain on its own (`K = 2A + W_links + sigma I`).
//! Every later round recomputes the private-location weights, refreshes the
//! shared-person location links from the current face clusters, re-solves the
//! locations against the face clustering and then the faces against the new
//! location clustering. The joint objective
//! `f_F + f_L - f_FL - f_LF` is evaluated after every round.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::constraints::{
    build_time_groups, cannot_links_faces_same_image, cannot_links_faces_teleport,
    must_links_locations_same_image, must_links_locations_shared_person,
    must_links_locations_verified, resolve_links, LinkSet, TimeGroups,
};
use crate::data::{build_cooccurrence, CooccurrenceMatrix, Dataset, Domain};
use crate::error::{Error, Result};
use crate::kernel::{
    affinity, assemble_kernel, choose_sigma, constraint_weights, cross_terms_face,
    cross_terms_location, default_link_weight, private_weights, KernelMatrix, PrivateWeights,
    SigmaPolicy,
};
use crate::rng::{subseed, Stream};
use crate::solver::{
    kernel_kmeans, kernel_kmeans_from, Assignment, IndicatorMatrix, SolverConfig, SolverOutput,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoClusterConfig {
    pub k_face: usize,
    pub k_location: usize,
    /// Weight of the cross-domain terms.
    pub beta: f64,
    /// Must/cannot weight in `W_links`; `None` uses `2 * max|A|` per domain.
    pub link_weight: Option<f64>,
    pub sigma: SigmaPolicy,
    pub seed: u64,
    pub outer_max: usize,
    pub outer_tol: f64,
    pub bandwidth_s: f64,
    pub teleport_window_s: i64,
    pub geo_threshold_km: f64,
    pub solver: SolverConfig,
    /// Drop all cross-domain terms and runtime links.
    pub freeze_coupling: bool,
    /// Keep the private weights and shared-person links from round 0.
    pub freeze_weights: bool,
}

impl Default for CoClusterConfig {
    fn default() -> Self {
        CoClusterConfig {
            k_face: 5,
            k_location: 5,
            beta: 1.0,
            link_weight: None,
            sigma: SigmaPolicy::Gershgorin,
            seed: 0,
            outer_max: 20,
            outer_tol: 1e-5,
            bandwidth_s: 3600.0,
            teleport_window_s: 3600,
            geo_threshold_km: 100.0,
            solver: SolverConfig::default(),
            freeze_coupling: false,
            freeze_weights: false,
        }
    }
}

impl CoClusterConfig {
    /// Kernel for one domain under this configuration. With hard enforcement
    /// the solver already keeps must components together and cannot pairs
    /// apart, so `W_links` is left out: it would only bias each unit toward
    /// its current cluster.
    pub fn kernel(
        &self,
        a: &DMatrix<f64>,
        links: &LinkSet,
        cross: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    ) -> Result<KernelMatrix> {
        let weighted = if self.solver.hard {
            LinkSet::new(links.domain())
        } else {
            links.clone()
        };
        build_kernel(a, &weighted, self.link_weight, cross, self.beta, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.k_face < 2 || self.k_location < 2 {
            return bad(format!(
                "k_face and k_location must be at least 2 (got {} and {})",
                self.k_face, self.k_location
            ));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if let Some(w) = self.link_weight {
            if !(w > 0.0) || !w.is_finite() {
                return bad(format!("link_weight must be positive, got {w}"));
            }
        }
        if !(self.outer_tol > 0.0) {
            return bad(format!(
                "outer_tol must be positive, got {}",
                self.outer_tol
            ));
        }
        if !(self.solver.tol >= 0.0) {
            return bad(format!(
                "solver tol must be non-negative, got {}",
                self.solver.tol
            ));
        }
        if !(self.bandwidth_s > 0.0) || !self.bandwidth_s.is_finite() {
            return bad(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_s
            ));
        }
        if self.teleport_window_s < 0 {
            return bad(format!(
                "teleport window must be non-negative, got {}",
                self.teleport_window_s
            ));
        }
        if !(self.geo_threshold_km >= 0.0) {
            return bad(format!(
                "geo threshold must be non-negative, got {}",
                self.geo_threshold_km
            ));
        }
        if let SigmaPolicy::Fixed(s) = self.sigma {
            if !(s >= 0.0) || !s.is_finite() {
                return bad(format!("sigma must be non-negative, got {s}"));
            }
        }
        Ok(())
    }
}

/// Components of the joint objective; `total = f_face + f_location - f_fl - f_lf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointObjective {
    pub f_face: f64,
    pub f_location: f64,
    pub f_fl: f64,
    pub f_lf: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCounts {
    pub round: usize,
    pub face_must: usize,
    pub face_cannot: usize,
    pub location_must: usize,
    pub location_cannot: usize,
    /// Shared-person location links implied by the face clustering at the
    /// end of the round.
    pub shared_person_must: usize,
    pub conflicts: usize,
}

/// One inner kernel k-means run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub round: usize,
    pub domain: Domain,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// The kernel and links matched the previous solve, so it was skipped.
    pub reused: bool,
    pub cannot_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoClusterResult {
    pub face_assignment: Assignment,
    pub location_assignment: Assignment,
    pub initial_face_assignment: Assignment,
    pub initial_location_assignment: Assignment,
    pub private_weights: PrivateWeights,
    /// Joint objective after round 0 and after every later round.
    pub objective_trace: Vec<JointObjective>,
    pub rounds: usize,
    pub converged: bool,
    pub link_counts: Vec<LinkCounts>,
    pub solves: Vec<SolveRecord>,
    pub config: CoClusterConfig,
}

impl CoClusterResult {
    pub fn joint_objective_trace(&self) -> Vec<f64> {
        self.objective_trace.iter().map(|o| o.total).collect()
    }

    pub fn assignment(&self, domain: Domain) -> &Assignment {
        match domain {
            Domain::Face => &self.face_assignment,
            Domain::Location => &self.location_assignment,
        }
    }

    /// The round-0 clustering of one domain.
    pub fn initial_assignment(&self, domain: Domain) -> &Assignment {
        match domain {
            Domain::Face => &self.initial_face_assignment,
            Domain::Location => &self.initial_location_assignment,
        }
    }
}

/// Squared Euclidean distances `E = A~ - 2A` (with `A~_ij = A_ii + A_jj`),
/// then must pairs set to 0 and cannot pairs to `10 * max(E)`.
pub fn distance_matrix(a: &DMatrix<f64>, links: &LinkSet) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if let Some(max) = links.max_index() {
        if max >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: max + 1,
                context: "link index outside distance matrix".into(),
            });
        }
    }
    let mut e = DMatrix::from_fn(n, n, |i, j| a[(i, i)] + a[(j, j)] - 2.0 * a[(i, j)]);
    let far = 10.0 * e.max();
    for (i, j) in links.must_pairs() {
        e[(i, j)] = 0.0;
        e[(j, i)] = 0.0;
    }
    for (i, j) in links.cannot_pairs() {
        e[(i, j)] = far;
        e[(j, i)] = far;
    }
    Ok(e)
}

fn trace_form(m: &DMatrix<f64>, z: &IndicatorMatrix) -> f64 {
    let z = z.as_matrix();
    z.component_mul(&(m * z)).sum()
}

/// Evaluates the joint objective. `location_sets` lists the location
/// patches of every time group.
pub fn joint_objective(
    e_face: &DMatrix<f64>,
    e_location: &DMatrix<f64>,
    z_face: &IndicatorMatrix,
    z_location: &IndicatorMatrix,
    cooc: &CooccurrenceMatrix,
    location_sets: &[Vec<usize>],
    private: &PrivateWeights,
) -> Result<JointObjective> {
    let (n_l, n_f) = (cooc.n_locations(), cooc.n_faces());
    let checks = [
        (n_f, e_face.nrows(), "E_F rows"),
        (n_f, e_face.ncols(), "E_F cols"),
        (n_l, e_location.nrows(), "E_L rows"),
        (n_l, e_location.ncols(), "E_L cols"),
        (n_f, z_face.n_points(), "Z_F rows"),
        (n_l, z_location.n_points(), "Z_L rows"),
        (n_l, private.len(), "P length"),
    ];
    for (expected, found, what) in checks {
        if expected != found {
            return Err(Error::DimensionMismatch {
                expected,
                found,
                context: format!("{what} vs co-occurrence shape"),
            });
        }
    }
    if let Some(&bad) = location_sets.iter().flatten().find(|&&l| l >= n_l) {
        return Err(Error::DimensionMismatch {
            expected: n_l,
            found: bad + 1,
            context: "time group references a location outside C".into(),
        });
    }

    let f_face = trace_form(e_face, z_face);
    let f_location = trace_form(e_location, z_location);

    // row l of C Z_F pairs with row l of Z_L
    let b = cooc.as_matrix() * z_face.as_matrix();
    let zl = z_location.as_matrix();
    let (kf, kl) = (b.ncols(), zl.ncols());
    let outer = |rows: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut m = DMatrix::<f64>::zeros(kf, kl);
        for (l, w) in rows {
            for a in 0..kf {
                let ba = b[(l, a)] * w;
                if ba == 0.0 {
                    continue;
                }
                for c in 0..kl {
                    m[(a, c)] += ba * zl[(l, c)];
                }
            }
        }
        m
    };
    let f_fl = location_sets
        .iter()
        .map(|set| outer(&mut set.iter().map(|&l| (l, 1.0))).norm_squared())
        .sum();
    let p = private.as_slice();
    let f_lf = outer(&mut (0..n_l).map(|l| (l, p[l]))).norm_squared();
    Ok(JointObjective {
        f_face,
        f_location,
        f_fl,
        f_lf,
        total: f_face + f_location - f_fl - f_lf,
    })
}

/// Face cannot-links (same photo, impossible travel) and location
/// must-links (same photo, verified matches), each resolved.
pub fn static_links(dataset: &Dataset, config: &CoClusterConfig) -> Result<(LinkSet, LinkSet)> {
    let mut face = cannot_links_faces_same_image(dataset);
    face.merge(&cannot_links_faces_teleport(
        dataset,
        config.teleport_window_s,
        config.geo_threshold_km,
    ))?;
    let mut location = must_links_locations_same_image(dataset);
    location.merge(&must_links_locations_verified(dataset)?)?;
    Ok((resolve_links(&face).links, resolve_links(&location).links))
}

/// Kernel `2A + W_links + beta (cross + Q) + sigma I` with sigma chosen by
/// policy on the unshifted matrix.
pub fn build_kernel(
    a: &DMatrix<f64>,
    links: &LinkSet,
    link_weight: Option<f64>,
    cross: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
    beta: f64,
    sigma: SigmaPolicy,
) -> Result<KernelMatrix> {
    let n = a.nrows();
    let w = link_weight.unwrap_or_else(|| default_link_weight(a));
    let w_links = constraint_weights(links, n, w)?;
    let zero;
    let (sum_w, q) = match cross {
        Some(pair) => pair,
        None => {
            zero = DMatrix::zeros(n, n);
            (&zero, &zero)
        }
    };
    let kernel = assemble_kernel(a, &w_links, sum_w, q, beta, 0.0)?;
    let shift = choose_sigma(kernel.base(), sigma)?;
    kernel.with_shift(shift)
}

/// Round-0 kernels for faces and locations.
pub fn independent_kernels(
    dataset: &Dataset,
    config: &CoClusterConfig,
) -> Result<(KernelMatrix, KernelMatrix)> {
    let (face_links, location_links) = static_links(dataset, config)?;
    let a_f = affinity(dataset.face_features())?;
    let a_l = affinity(dataset.location_features())?;
    Ok((
        config.kernel(&a_f, &face_links, None)?,
        config.kernel(&a_l, &location_links, None)?,
    ))
}

/// Per-domain state of the alternation.
struct Side {
    domain: Domain,
    affinity: DMatrix<f64>,
    assignment: Assignment,
    last: Option<(KernelMatrix, LinkSet)>,
}

impl Side {
    fn solve(
        &mut self,
        round: usize,
        kernel: KernelMatrix,
        links: LinkSet,
        solver: &SolverConfig,
        records: &mut Vec<SolveRecord>,
    ) -> Result<()> {
        if self.last.as_ref() == Some(&(kernel.clone(), links.clone())) {
            records.push(SolveRecord {
                round,
                domain: self.domain,
                objective_trace: Vec::new(),
                iterations: 0,
                reused: true,
                cannot_violations: 0,
            });
            return Ok(());
        }
        let out = kernel_kmeans_from(&kernel, &self.assignment, &links, solver)?;
        self.accept(round, out, records);
        self.last = Some((kernel, links));
        Ok(())
    }

    fn accept(&mut self, round: usize, out: SolverOutput, records: &mut Vec<SolveRecord>) {
        records.push(SolveRecord {
            round,
            domain: self.domain,
            objective_trace: out.objective_trace,
            iterations: out.iterations,
            reused: false,
            cannot_violations: out.cannot_violations,
        });
        self.assignment = out.assignment;
    }
}

pub fn cocluster(dataset: &Dataset, config: &CoClusterConfig) -> Result<CoClusterResult> {
    config.validate()?;
    let cooc = build_cooccurrence(dataset);
    let groups = build_time_groups(dataset, config.bandwidth_s)?;
    let (face_links, location_links) = static_links(dataset, config)?;
    let mut records = Vec::new();

    let mut face = Side {
        domain: Domain::Face,
        affinity: affinity(dataset.face_features())?,
        assignment: Assignment::new(vec![0; dataset.n_faces()], config.k_face)?,
        last: None,
    };
    let mut location = Side {
        domain: Domain::Location,
        affinity: affinity(dataset.location_features())?,
        assignment: Assignment::new(vec![0; dataset.n_locations()], config.k_location)?,
        last: None,
    };

    for (side, links, k, stream) in [
        (&mut face, &face_links, config.k_face, Stream::FaceInit),
        (
            &mut location,
            &location_links,
            config.k_location,
            Stream::LocationInit,
        ),
    ] {
        let kernel = config.kernel(&side.affinity, links, None)?;
        let out = kernel_kmeans(
            &kernel,
            k,
            links,
            subseed(config.seed, stream),
            &config.solver,
        )?;
        side.accept(0, out, &mut records);
        side.last = Some((kernel, links.clone()));
    }
    let initial_face = face.assignment.clone();
    let initial_location = location.assignment.clone();

    let e_face = distance_matrix(&face.affinity, &face_links)?;
    let location_sets = groups.location_sets().to_vec();
    let mut private =
        private_weights(&face.assignment, &location.assignment, &cooc, config.k_face)?;

    let evaluate = |face: &Side, location: &Side, private: &PrivateWeights, loc_links: &LinkSet| {
        let e_location = distance_matrix(&location.affinity, loc_links)?;
        joint_objective(
            &e_face,
            &e_location,
            &face.assignment.indicator()?,
            &location.assignment.indicator()?,
            &cooc,
            &location_sets,
            private,
        )
    };

    let mut trace = vec![evaluate(&face, &location, &private, &location_links)?];
    let mut link_counts = vec![count_links(
        0,
        &face_links,
        &location_links,
        shared_person_count(dataset, &face.assignment, &groups, config)?,
        0,
    )];

    let frozen_shared = if config.freeze_weights && !config.freeze_coupling {
        Some(must_links_locations_shared_person(
            dataset,
            &face.assignment,
            &groups,
        )?)
    } else {
        None
    };

    let mut rounds = 0;
    let mut converged = false;
    for round in 1..=config.outer_max {
        if !config.freeze_weights {
            private =
                private_weights(&face.assignment, &location.assignment, &cooc, config.k_face)?;
        }

        let (loc_links, conflicts) = if config.freeze_coupling {
            (location_links.clone(), 0)
        } else {
            let shared = match &frozen_shared {
                Some(s) => s.clone(),
                None => must_links_locations_shared_person(dataset, &face.assignment, &groups)?,
            };
            runtime_location_links(
                &location_links,
                &shared,
                dataset.n_locations(),
                config.k_location,
            )?
        };

        let cross_l = if config.freeze_coupling {
            None
        } else {
            Some(cross_terms_location(
                &cooc,
                &location_sets,
                &private,
                &face.assignment.indicator()?,
            )?)
        };
        let kernel_l = config.kernel(
            &location.affinity,
            &loc_links,
            cross_l.as_ref().map(|(w, q)| (w, q)),
        )?;
        location.solve(
            round,
            kernel_l,
            loc_links.clone(),
            &config.solver,
            &mut records,
        )?;

        let cross_f = if config.freeze_coupling {
            None
        } else {
            Some(cross_terms_face(
                &cooc,
                &location_sets,
                &private,
                &location.assignment.indicator()?,
            )?)
        };
        let kernel_f = config.kernel(
            &face.affinity,
            &face_links,
            cross_f.as_ref().map(|(w, q)| (w, q)),
        )?;
        face.solve(
            round,
            kernel_f,
            face_links.clone(),
            &config.solver,
            &mut records,
        )?;

        let objective = evaluate(&face, &location, &private, &loc_links)?;
        let previous = trace.last().unwrap().total;
        trace.push(objective);
        link_counts.push(count_links(
            round,
            &face_links,
            &loc_links,
            shared_person_count(dataset, &face.assignment, &groups, config)?,
            conflicts,
        ));
        rounds = round;
        let change = (objective.total - previous).abs();
        log::info!("round {round}: joint objective {:.6}", objective.total);
        if change < config.outer_tol * objective.total.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(CoClusterResult {
        face_assignment: face.assignment,
        location_assignment: location.assignment,
        initial_face_assignment: initial_face,
        initial_location_assignment: initial_location,
        private_weights: private,
        objective_trace: trace,
        rounds,
        converged,
        link_counts,
        solves: records,
        config: config.clone(),
    })
}

/// Static location links plus the shared-person links, resolved. If the
/// merged must components can no longer fill `k` clusters the shared-person
/// links are dropped for this round.
fn runtime_location_links(
    static_links: &LinkSet,
    shared: &LinkSet,
    n_locations: usize,
    k: usize,
) -> Result<(LinkSet, usize)> {
    let mut merged = static_links.clone();
    merged.merge(shared)?;
    let resolved = resolve_links(&merged);
    let units = resolved
        .links
        .must_components(n_locations)
        .into_iter()
        .max()
        .map_or(0, |m| m + 1);
    if units < k {
        log::warn!(
            "shared-person links leave {units} location components for {k} clusters; ignoring them this round"
        );
        return Ok((static_links.clone(), 0));
    }
    Ok((resolved.links, resolved.conflicts.len()))
}

fn shared_person_count(
    dataset: &Dataset,
    face: &Assignment,
    groups: &TimeGroups,
    config: &CoClusterConfig,
) -> Result<usize> {
    if config.freeze_coupling {
        return Ok(0);
    }
    Ok(must_links_locations_shared_person(dataset, face, groups)?.n_must())
}

fn count_links(
    round: usize,
    face: &LinkSet,
    location: &LinkSet,
    shared_person_must: usize,
    conflicts: usize,
) -> LinkCounts {
    LinkCounts {
        round,
        face_must: face.n_must(),
        face_cannot: face.n_cannot(),
        location_must: location.n_must(),
        location_cannot: location.n_cannot(),
        shared_person_must,
        conflicts,
    }
}
