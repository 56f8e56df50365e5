use crate::error::{Error, Result};
use crate::lifter::SampleSet;
use crate::ordinal::mean_pose;
use crate::pose::Pose3D;

#[derive(Clone, Debug, PartialEq)]
pub struct DiversityStats {
    /// Per joint, the norm of the three per-axis population standard
    /// deviations (mm).
    pub per_joint_std: Vec<f64>,
    pub mean: Pose3D,
}

pub fn diversity_stats(samples: &SampleSet) -> Result<DiversityStats> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let mean = mean_pose(samples);
    let k = samples.len() as f64;
    let per_joint_std = (0..samples.num_joints())
        .map(|j| {
            let m = mean.joint(j);
            (0..3)
                .map(|a| {
                    samples
                        .candidates()
                        .iter()
                        .map(|c| (c.joint(j)[a] - m[a]).powi(2))
                        .sum::<f64>()
                        / k
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(DiversityStats { per_joint_std, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let p = Pose3D::new(vec![[0.0; 3], [1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let same = SampleSet::new(vec![p.clone(); 4]).unwrap();
        assert_eq!(diversity_stats(&same).unwrap().per_joint_std, vec![0.0; 3]);

        // Oracle: two points 2 mm apart have population std 1 mm.
        let mut moved = p.joints().to_vec();
        moved[1][0] += 2.0;
        let two = SampleSet::new(vec![p.clone(), Pose3D::new(moved).unwrap()]).unwrap();
        let s = diversity_stats(&two).unwrap();
        assert!((s.per_joint_std[1] - 1.0).abs() < 1e-12);
        assert_eq!(s.per_joint_std[0], 0.0);
        assert_eq!(s.per_joint_std[2], 0.0);

        let shifted = SampleSet::new(two.candidates().iter().map(|c| c.translated([50.0, -20.0, 7.0])).collect())
            .unwrap();
        let t = diversity_stats(&shifted).unwrap();
        for (a, b) in s.per_joint_std.iter().zip(&t.per_joint_std) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(diversity_stats(&SampleSet::new(vec![p]).unwrap()).is_err());
    }
}
