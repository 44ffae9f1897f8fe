//! Cross-domain kernel terms.
//!
//! With `C` the N_L x N_F co-occurrence matrix, `T_i` the 0/1 diagonal
//! selecting the location patches of time group `i` and `P` the private
//! weights:
//!
//! ```text
//! location side:  W_Li = T_i C Z_F Z_F^T C^T T_i     Q_L = P C Z_F Z_F^T C^T P
//! face side:      W_Fi = C^T T_i Z_L Z_L^T T_i C     Q_F = C^T P Z_L Z_L^T P C
//! ```
//!
//! Both functions return `(sum_i W_i, Q)`.

use nalgebra::DMatrix;

use super::{symmetrize_upper, PrivateWeights};
use crate::data::CooccurrenceMatrix;
use crate::error::{Error, Result};
use crate::solver::IndicatorMatrix;

fn check_sets(location_sets: &[Vec<usize>], n_locations: usize) -> Result<()> {
    for set in location_sets {
        if let Some(&bad) = set.iter().find(|&&l| l >= n_locations) {
            return Err(Error::DimensionMismatch {
                expected: n_locations,
                found: bad + 1,
                context: "time group references a location outside C".into(),
            });
        }
    }
    Ok(())
}

fn check_len(expected: usize, found: usize, context: &str) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            expected,
            found,
            context: context.into(),
        });
    }
    Ok(())
}

pub fn cross_terms_location(
    cooc: &CooccurrenceMatrix,
    location_sets: &[Vec<usize>],
    private: &PrivateWeights,
    z_face: &IndicatorMatrix,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let c = cooc.as_matrix();
    let n_l = c.nrows();
    check_len(c.ncols(), z_face.n_points(), "Z_F rows vs faces in C")?;
    check_len(n_l, private.len(), "P length vs locations in C")?;
    check_sets(location_sets, n_l)?;

    // B = C Z_F, G = B B^T
    let b = c * z_face.as_matrix();
    let mut g = &b * b.transpose();
    symmetrize_upper(&mut g);

    let mut sum_w = DMatrix::zeros(n_l, n_l);
    for set in location_sets {
        for &l in set {
            for &m in set {
                sum_w[(l, m)] += g[(l, m)];
            }
        }
    }
    let p = private.as_slice();
    let q = DMatrix::from_fn(n_l, n_l, |l, m| p[l] * g[(l, m)] * p[m]);
    Ok((sum_w, q))
}

pub fn cross_terms_face(
    cooc: &CooccurrenceMatrix,
    location_sets: &[Vec<usize>],
    private: &PrivateWeights,
    z_location: &IndicatorMatrix,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let c = cooc.as_matrix();
    let (n_l, n_f) = (c.nrows(), c.ncols());
    check_len(n_l, z_location.n_points(), "Z_L rows vs locations in C")?;
    check_len(n_l, private.len(), "P length vs locations in C")?;
    check_sets(location_sets, n_l)?;
    let z = z_location.as_matrix();
    let k = z.ncols();

    // H_S = Z_L^T T_S C, accumulated row by row of C
    let project = |rows: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut h = DMatrix::zeros(k, n_f);
        for (l, weight) in rows {
            let zl = z.row(l);
            for f in 0..n_f {
                let cf = c[(l, f)];
                if cf == 0.0 {
                    continue;
                }
                for col in 0..k {
                    h[(col, f)] += zl[col] * weight * cf;
                }
            }
        }
        h
    };

    let mut sum_w = DMatrix::zeros(n_f, n_f);
    for set in location_sets {
        let h = project(&mut set.iter().map(|&l| (l, 1.0)));
        sum_w += h.transpose() * &h;
    }
    symmetrize_upper(&mut sum_w);

    let p = private.as_slice();
    let h = project(&mut (0..n_l).map(|l| (l, p[l])));
    let mut q = h.transpose() * &h;
    symmetrize_upper(&mut q);
    Ok((sum_w, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Assignment;

    fn indicator(labels: &[usize], k: usize) -> IndicatorMatrix {
        Assignment::new(labels.to_vec(), k)
            .unwrap()
            .indicator()
            .unwrap()
    }

    #[test]
    fn zero_cooccurrence_gives_zero_terms() {
        let c = CooccurrenceMatrix::zeros(3, 2);
        let p = PrivateWeights::ones(3);
        let (w, q) =
            cross_terms_location(&c, &[vec![0, 1, 2]], &p, &indicator(&[0, 1], 2)).unwrap();
        assert_eq!(w, DMatrix::zeros(3, 3));
        assert_eq!(q, DMatrix::zeros(3, 3));
        let (w, q) = cross_terms_face(&c, &[vec![0, 1, 2]], &p, &indicator(&[0, 1, 1], 2)).unwrap();
        assert_eq!(w, DMatrix::zeros(2, 2));
        assert_eq!(q, DMatrix::zeros(2, 2));
    }

    #[test]
    fn two_locations_one_face() {
        let c = CooccurrenceMatrix::from_pairs(2, 1, [(0, 0), (1, 0)]).unwrap();
        let p = PrivateWeights::ones(2);
        let (w, _) = cross_terms_location(&c, &[vec![0, 1]], &p, &indicator(&[0], 1)).unwrap();
        assert_eq!(w, DMatrix::from_element(2, 2, 1.0));
    }

    #[test]
    fn zero_private_weights_annihilate_q() {
        let c = CooccurrenceMatrix::from_pairs(2, 2, [(0, 0), (1, 1), (0, 1)]).unwrap();
        let p = PrivateWeights(vec![0.0, 0.0]);
        let (_, q) =
            cross_terms_location(&c, &[vec![0], vec![1]], &p, &indicator(&[0, 1], 2)).unwrap();
        assert_eq!(q, DMatrix::zeros(2, 2));
        let (_, q) = cross_terms_face(&c, &[vec![0], vec![1]], &p, &indicator(&[0, 1], 2)).unwrap();
        assert_eq!(q, DMatrix::zeros(2, 2));
    }

    #[test]
    fn single_location_shared_by_two_faces() {
        let c = CooccurrenceMatrix::from_pairs(1, 3, [(0, 0), (0, 1)]).unwrap();
        let p = PrivateWeights::ones(1);
        let (w, q) = cross_terms_face(&c, &[vec![0]], &p, &indicator(&[0], 1)).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(w, expected);
        assert_eq!(q, expected);
    }

    #[test]
    fn dimension_checks() {
        let c = CooccurrenceMatrix::zeros(2, 2);
        let p = PrivateWeights::ones(2);
        assert!(cross_terms_location(&c, &[], &p, &indicator(&[0, 0, 0], 1)).is_err());
        assert!(cross_terms_face(&c, &[vec![5]], &p, &indicator(&[0, 0], 1)).is_err());
        assert!(
            cross_terms_face(&c, &[], &PrivateWeights::ones(3), &indicator(&[0, 0], 1)).is_err()
        );
    }
}
