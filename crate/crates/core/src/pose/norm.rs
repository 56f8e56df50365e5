use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormSpace {
    Pose2D,
    Pose3DRootCentered,
}

impl fmt::Display for NormSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormSpace::Pose2D => "pose2d",
            NormSpace::Pose3DRootCentered => "pose3d-rootcentered",
        })
    }
}

impl FromStr for NormSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pose2d" => Ok(NormSpace::Pose2D),
            "pose3d-rootcentered" => Ok(NormSpace::Pose3DRootCentered),
            other => Err(Error::InvalidConfig(format!("unknown normalization space '{other}'"))),
        }
    }
}

/// Per-coordinate mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    mean: Vec<f64>,
    std: Vec<f64>,
    space: NormSpace,
}

impl NormStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>, space: NormSpace) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: std.len(),
            });
        }
        if let Some(i) = std.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::DegenerateCoordinate(i));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("normalization mean".into()));
        }
        Ok(NormStats { mean, std, space })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn space(&self) -> NormSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }

    pub fn denormalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| v * s + m)
            .collect())
    }
}

/// Fits mean and population standard deviation (divide by count) per coordinate.
pub fn fit_norm_stats<'a, I>(poses: I, space: NormSpace) -> Result<NormStats>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows: Vec<&[f64]> = poses.into_iter().collect();
    if rows.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: rows.len(),
        });
    }
    let dim = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: r.len(),
        });
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in &rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for r in &rows {
        for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
    if let Some(i) = std.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::DegenerateCoordinate(i));
    }
    NormStats::new(mean, std, space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_points_population_std() {
        let a = [0.0];
        let b = [2.0];
        let s = fit_norm_stats([&a[..], &b[..]], NormSpace::Pose2D).unwrap();
        assert_eq!(s.mean(), &[1.0]);
        assert_eq!(s.std(), &[1.0]);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let a = [3.0, 1.0];
        let b = [3.0, 2.0];
        let err = fit_norm_stats([&a[..], &b[..]], NormSpace::Pose2D).unwrap_err();
        assert!(matches!(err, Error::DegenerateCoordinate(0)));
    }

    #[test]
    fn standardized_data_is_a_fixed_point() {
        let rows: Vec<[f64; 1]> = vec![[-1.0], [1.0], [-1.0], [1.0]];
        let s = fit_norm_stats(rows.iter().map(|r| &r[..]), NormSpace::Pose2D).unwrap();
        assert!(s.mean()[0].abs() < 1e-9);
        assert!((s.std()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_examples() {
        let s = NormStats::new(vec![100.0, 5.0], vec![50.0, 2.0], NormSpace::Pose2D).unwrap();
        assert_eq!(s.normalize(&[150.0, 5.0]).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(s.normalize(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(s.denormalize(&[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip(x in prop::collection::vec(-5000.0f64..5000.0, 8),
                      mean in prop::collection::vec(-1000.0f64..1000.0, 8),
                      std in prop::collection::vec(0.01f64..500.0, 8)) {
            let s = NormStats::new(mean, std, NormSpace::Pose3DRootCentered).unwrap();
            let back = s.denormalize(&s.normalize(&x).unwrap()).unwrap();
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
