//! Must-link and cannot-link constraints within one domain.

mod rules;
mod time;

use std::collections::BTreeSet;
use std::io::Write;

pub use rules::{
    cannot_links_faces_same_image, cannot_links_faces_teleport, must_links_locations_same_image,
    must_links_locations_shared_person, must_links_locations_verified,
};
pub use time::{build_time_groups, mean_shift_1d, TimeGroups};

use crate::data::Domain;
use crate::error::{Error, Result};

/// Unordered pairs of patch indices within a single domain.
///
/// Pairs are stored with the smaller index first and self-pairs are ignored.
/// Sets built by the individual rules never overlap; after merging raw sets
/// call [`resolve_links`] to close must-links and drop contradictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSet {
    domain: Domain,
    must: BTreeSet<(usize, usize)>,
    cannot: BTreeSet<(usize, usize)>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl LinkSet {
    pub fn new(domain: Domain) -> Self {
        LinkSet {
            domain,
            must: BTreeSet::new(),
            cannot: BTreeSet::new(),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn add_must(&mut self, i: usize, j: usize) -> bool {
        i != j && self.must.insert(ordered(i, j))
    }

    pub fn add_cannot(&mut self, i: usize, j: usize) -> bool {
        i != j && self.cannot.insert(ordered(i, j))
    }

    pub fn is_must(&self, i: usize, j: usize) -> bool {
        self.must.contains(&ordered(i, j))
    }

    pub fn is_cannot(&self, i: usize, j: usize) -> bool {
        self.cannot.contains(&ordered(i, j))
    }

    pub fn must_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.must.iter().copied()
    }

    pub fn cannot_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cannot.iter().copied()
    }

    pub fn n_must(&self) -> usize {
        self.must.len()
    }

    pub fn n_cannot(&self) -> usize {
        self.cannot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.must.is_empty() && self.cannot.is_empty()
    }

    /// Largest index mentioned by any pair, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.must.iter().chain(&self.cannot).map(|&(_, j)| j).max()
    }

    pub fn merge(&mut self, other: &LinkSet) -> Result<()> {
        if other.domain != self.domain {
            return Err(Error::InvalidConfig(format!(
                "cannot merge {} links into a {} link set",
                other.domain, self.domain
            )));
        }
        self.must.extend(other.must.iter().copied());
        self.cannot.extend(other.cannot.iter().copied());
        Ok(())
    }

    /// Must-link component id for each of `n` points, numbered by first
    /// appearance in index order.
    pub fn must_components(&self, n: usize) -> Vec<usize> {
        let mut uf = UnionFind::new(n);
        for &(i, j) in &self.must {
            uf.union(i, j);
        }
        let mut ids = vec![usize::MAX; n];
        let mut root_id = vec![usize::MAX; n];
        let mut next = 0;
        for (i, id) in ids.iter_mut().enumerate() {
            let r = uf.find(i);
            if root_id[r] == usize::MAX {
                root_id[r] = next;
                next += 1;
            }
            *id = root_id[r];
        }
        ids
    }

    /// Writes `domain,kind,i,j` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["domain", "kind", "i", "j"])?;
        for (kind, set) in [("must", &self.must), ("cannot", &self.cannot)] {
            for &(i, j) in set {
                w.write_record([self.domain.name(), kind, &i.to_string(), &j.to_string()])?;
            }
        }
        w.flush()
    }
}

/// Outcome of [`resolve_links`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub links: LinkSet,
    /// Cannot pairs dropped because both ends ended up in one must component.
    pub conflicts: Vec<(usize, usize)>,
}

/// Closes must-links under transitivity and lifts cannot-links to whole
/// must components. A cannot pair inside a single component is dropped in
/// favour of the must-links and reported as a conflict.
pub fn resolve_links(raw: &LinkSet) -> Resolved {
    let n = raw.max_index().map_or(0, |m| m + 1);
    let comp = raw.must_components(n);
    let n_comp = comp.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for (i, &c) in comp.iter().enumerate() {
        members[c].push(i);
    }

    let mut links = LinkSet::new(raw.domain);
    let mut touched = vec![false; n_comp];
    for &(i, _) in &raw.must {
        let c = comp[i];
        if std::mem::replace(&mut touched[c], true) {
            continue;
        }
        let m = &members[c];
        for a in 0..m.len() {
            for b in a + 1..m.len() {
                links.must.insert((m[a], m[b]));
            }
        }
    }

    let mut conflicts = Vec::new();
    let mut lifted = BTreeSet::new();
    for &(i, j) in &raw.cannot {
        let (ci, cj) = (comp[i], comp[j]);
        if ci == cj {
            log::warn!(
                "{} cannot-link ({i}, {j}) contradicts must-links; keeping the must-links",
                raw.domain
            );
            conflicts.push((i, j));
            continue;
        }
        if !lifted.insert(ordered(ci, cj)) {
            continue;
        }
        for &a in &members[ci] {
            for &b in &members[cj] {
                links.cannot.insert(ordered(a, b));
            }
        }
    }
    Resolved { links, conflicts }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn links(must: &[(usize, usize)], cannot: &[(usize, usize)]) -> LinkSet {
        let mut l = LinkSet::new(Domain::Location);
        for &(i, j) in must {
            l.add_must(i, j);
        }
        for &(i, j) in cannot {
            l.add_cannot(i, j);
        }
        l
    }

    #[test]
    fn transitive_closure() {
        let r = resolve_links(&links(&[(0, 1), (1, 2)], &[]));
        assert!(r.links.is_must(0, 2));
        assert_eq!(r.links.n_must(), 3);
        assert!(r.conflicts.is_empty());
    }

    #[test]
    fn must_wins_over_cannot() {
        let r = resolve_links(&links(&[(0, 1)], &[(0, 1)]));
        assert_eq!(r.conflicts, vec![(0, 1)]);
        assert_eq!(r.links.n_cannot(), 0);
        assert!(r.links.is_must(0, 1));
    }

    #[test]
    fn cannot_lifted_to_components() {
        let r = resolve_links(&links(&[(0, 1)], &[(1, 2)]));
        let cannot: Vec<_> = r.links.cannot_pairs().collect();
        assert_eq!(cannot, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn self_pairs_are_ignored() {
        let mut l = LinkSet::new(Domain::Face);
        assert!(!l.add_must(3, 3));
        assert!(!l.add_cannot(2, 2));
        assert!(l.is_empty());
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        links(&[(2, 1)], &[(0, 3)]).write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "domain,kind,i,j\nlocation,must,1,2\nlocation,cannot,0,3\n"
        );
    }

    fn pairs(n: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
        prop::collection::vec((0..n, 0..n), 0..12)
    }

    proptest! {
        #[test]
        fn resolution_invariants(must in pairs(10), cannot in pairs(10)) {
            let raw = links(&must, &cannot);
            let r = resolve_links(&raw);
            // no pair in both sets
            for (i, j) in r.links.cannot_pairs() {
                prop_assert!(!r.links.is_must(i, j));
            }
            // must relation is transitive
            let m: Vec<_> = r.links.must_pairs().collect();
            for &(a, b) in &m {
                for &(c, d) in &m {
                    let shared = [(a, c, b, d), (a, d, b, c), (b, c, a, d), (b, d, a, c)];
                    for (x, y, p, q) in shared {
                        if x == y && p != q {
                            prop_assert!(r.links.is_must(p, q));
                        }
                    }
                }
            }
            // every raw must pair survives
            for (i, j) in raw.must_pairs() {
                prop_assert!(r.links.is_must(i, j));
            }
            // every raw cannot pair survives unless reported as a conflict
            for (i, j) in raw.cannot_pairs() {
                prop_assert!(r.links.is_cannot(i, j) || r.conflicts.contains(&(i, j)));
            }
        }
    }
}
