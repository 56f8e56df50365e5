use crate::error::{Error, Result};
use crate::nn::RngStream;
use crate::ordinal::matrix::{OrdinalMatrix, EQUAL, FARTHER};

/// Simulated ordinal predictions: each unmasked unordered pair is replaced,
/// with probability `1 - accuracy`, by a uniformly chosen different code.
/// Both ordered entries are rewritten, so the result stays consistent.
pub fn corrupt_ordinals(gt: &OrdinalMatrix, accuracy: f64, rng: &mut RngStream) -> Result<OrdinalMatrix> {
    if !(accuracy > 0.0 && accuracy <= 1.0) {
        return Err(Error::InvalidConfig(format!("ordinal accuracy must be in (0, 1], got {accuracy}")));
    }
    let mut out = gt.clone();
    let n = gt.size();
    for i in 0..n {
        for j in (i + 1)..n {
            let Some(code) = gt.code(i, j) else { continue };
            if rng.uniform() >= accuracy {
                let others: Vec<u8> = (FARTHER..=EQUAL).filter(|&c| c != code).collect();
                out.set_pair(i, j, others[rng.below(2)]);
            }
        }
    }
    Ok(out)
}

/// Fraction of unmasked unordered pairs of `reference` on which
/// `predicted` agrees.
pub fn pairwise_accuracy(predicted: &OrdinalMatrix, reference: &OrdinalMatrix) -> Result<f64> {
    if predicted.size() != reference.size() {
        return Err(Error::DimensionMismatch {
            expected: reference.size(),
            got: predicted.size(),
        });
    }
    let n = reference.size();
    let (mut hits, mut total) = (0usize, 0usize);
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(c) = reference.code(i, j) {
                total += 1;
                hits += usize::from(predicted.code(i, j) == Some(c));
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyList);
    }
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Pose3D;

    fn gt(seed: u64, n: usize) -> OrdinalMatrix {
        let mut r = RngStream::new(seed);
        let p = Pose3D::new((0..n).map(|_| [0.0, 0.0, r.uniform_range(-800.0, 800.0)]).collect()).unwrap();
        OrdinalMatrix::from_pose(&p, 100.0, &(0..n).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn perfect_accuracy_is_identity() {
        let m = gt(1, 16);
        assert_eq!(corrupt_ordinals(&m, 1.0, &mut RngStream::new(2)).unwrap(), m);
    }

    #[test]
    fn achieved_accuracy_matches_target() {
        // 84 matrices of 16 joints: 84 * 120 = 10080 pairs.
        let mut rng = RngStream::new(3);
        let (mut hits, mut total) = (0.0, 0.0);
        for s in 0..84 {
            let m = gt(100 + s, 16);
            let c = corrupt_ordinals(&m, 0.868, &mut rng).unwrap();
            hits += pairwise_accuracy(&c, &m).unwrap() * 120.0;
            total += 120.0;
        }
        let acc = hits / total;
        assert!((acc - 0.868).abs() < 0.01, "{acc}");
    }

    #[test]
    fn output_is_consistent() {
        let mut rng = RngStream::new(4);
        for s in 0..50 {
            let m = gt(s, 16);
            let c = corrupt_ordinals(&m, 0.5, &mut rng).unwrap();
            let clean = OrdinalMatrix::sanitize(16, c.raw_codes()).unwrap();
            assert_eq!(clean.unmasked_pairs(), 240);
            assert_eq!(clean.raw_codes(), c.raw_codes());
        }
    }

    #[test]
    fn masked_pairs_stay_masked() {
        let mut raw = gt(5, 4).raw_codes().to_vec();
        raw[1] = raw[4];
        if raw[1] == EQUAL {
            raw[1] = FARTHER;
            raw[4] = FARTHER;
        }
        let m = OrdinalMatrix::sanitize(4, &raw).unwrap();
        let c = corrupt_ordinals(&m, 0.01, &mut RngStream::new(6)).unwrap();
        assert!(c.is_masked(0, 1) && c.is_masked(1, 0));
    }

    #[test]
    fn rejects_bad_accuracy() {
        let m = gt(7, 3);
        for a in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(corrupt_ordinals(&m, a, &mut RngStream::new(0)).is_err());
        }
    }
}
