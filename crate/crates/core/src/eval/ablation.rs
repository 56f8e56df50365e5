use std::io::Write;

use crate::error::{Error, Result};
use crate::eval::metrics::{mpjpe, pa_mpjpe};
use crate::eval::report::{Method, Metric};
use crate::lifter::SampleSet;
use crate::ordinal::{mean_pose, oracle_select, score_samples, OrdinalMatrix};
use crate::pose::Pose3D;

/// One test item for an ablation: its candidate draw (at the largest K)
/// and the reference ordinals the ordinal methods need.
#[derive(Clone, Debug)]
pub struct AblationItem {
    pub ground_truth: Pose3D,
    pub samples: SampleSet,
    pub ordinal_gt: Option<OrdinalMatrix>,
    pub ordinal_pred: Option<OrdinalMatrix>,
}

#[derive(Clone, Debug)]
pub struct ScoringConfig {
    pub epsilon: f64,
    pub scoring_joints: Vec<usize>,
    pub temperature_gt: f64,
    pub temperature_pred: f64,
    pub metric: Metric,
    pub with_scale: bool,
}

/// Error under `metric` of `pred` against `gt`.
pub fn pose_error(pred: &Pose3D, gt: &Pose3D, metric: Metric, with_scale: bool) -> Result<f64> {
    match metric {
        Metric::Mpjpe => mpjpe(pred, gt),
        Metric::PaMpjpe => pa_mpjpe(pred, gt, with_scale),
    }
}

/// The final pose a method produces from a candidate set. `Baseline` is not
/// a sample-based method and is rejected.
pub fn estimate(item: &AblationItem, samples: &SampleSet, method: Method, cfg: &ScoringConfig) -> Result<Pose3D> {
    let reference = |m: &Option<OrdinalMatrix>| {
        m.clone()
            .ok_or_else(|| Error::InvalidConfig(format!("method {method} needs reference ordinals")))
    };
    match method {
        Method::Oracle => Ok(oracle_select(samples, &item.ground_truth)?.1),
        Method::Mean => Ok(mean_pose(samples)),
        Method::OrdinalGt => Ok(score_samples(
            samples,
            &reference(&item.ordinal_gt)?,
            cfg.epsilon,
            &cfg.scoring_joints,
            cfg.temperature_gt,
        )?
        .estimate()),
        Method::OrdinalPred => Ok(score_samples(
            samples,
            &reference(&item.ordinal_pred)?,
            cfg.epsilon,
            &cfg.scoring_joints,
            cfg.temperature_pred,
        )?
        .estimate()),
        Method::Baseline => Err(Error::InvalidConfig("baseline is not a sample-based method".into())),
    }
}

/// Error of each method against sample count.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationCurve {
    pub ks: Vec<usize>,
    pub series: Vec<(String, Vec<f64>)>,
}

impl AblationCurve {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Adds the columns of another curve over the same `ks`.
    pub fn extend(&mut self, other: AblationCurve) -> Result<()> {
        if other.ks != self.ks {
            return Err(Error::ShapeMismatch("ablation curves have different sample counts".into()));
        }
        self.series.extend(other.series);
        Ok(())
    }

    /// CSV: `k` then one column per series.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let names: Vec<&str> = self.series.iter().map(|(n, _)| n.as_str()).collect();
        writeln!(w, "k,{}", names.join(","))?;
        for (i, k) in self.ks.iter().enumerate() {
            let row: Vec<String> = self.series.iter().map(|(_, v)| v[i].to_string()).collect();
            writeln!(w, "{k},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Mean test error of each method at each `k`, using the first `k`
/// candidates of every item's draw.
pub fn ablation_curve(
    items: &[AblationItem],
    ks: &[usize],
    methods: &[Method],
    cfg: &ScoringConfig,
) -> Result<AblationCurve> {
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) || ks[0] == 0 {
        return Err(Error::InvalidConfig("sample counts must be positive and strictly increasing".into()));
    }
    let kmax = *ks.last().unwrap();
    if let Some(it) = items.iter().find(|it| it.samples.len() < kmax) {
        return Err(Error::TooFewSamples {
            needed: kmax,
            got: it.samples.len(),
        });
    }
    let mut series: Vec<(String, Vec<f64>)> = methods.iter().map(|m| (m.to_string(), vec![0.0; ks.len()])).collect();
    for item in items {
        for (ki, &k) in ks.iter().enumerate() {
            let prefix = item.samples.prefix(k)?;
            for (mi, &method) in methods.iter().enumerate() {
                let pose = estimate(item, &prefix, method, cfg)?;
                series[mi].1[ki] += pose_error(&pose, &item.ground_truth, cfg.metric, cfg.with_scale)?;
            }
        }
    }
    for (_, v) in &mut series {
        v.iter_mut().for_each(|e| *e /= items.len() as f64);
    }
    Ok(AblationCurve {
        ks: ks.to_vec(),
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::RngStream;
    use crate::pose::Skeleton;

    fn items(n: usize, k: usize, seed: u64) -> Vec<AblationItem> {
        let sk = Skeleton::h36m17();
        let mut rng = RngStream::new(seed);
        let mut pose = |scale: f64| {
            let mut j: Vec<[f64; 3]> = (0..17)
                .map(|_| {
                    [
                        rng.uniform_range(-scale, scale),
                        rng.uniform_range(-scale, scale),
                        rng.uniform_range(-scale, scale),
                    ]
                })
                .collect();
            j[0] = [0.0; 3];
            Pose3D::new(j).unwrap()
        };
        (0..n)
            .map(|_| {
                let gt = pose(500.0);
                let cands: Vec<Pose3D> = (0..k)
                    .map(|_| {
                        let noise = pose(150.0);
                        Pose3D::new(
                            gt.joints()
                                .iter()
                                .zip(noise.joints())
                                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                                .collect(),
                        )
                        .unwrap()
                    })
                    .collect();
                let ord = OrdinalMatrix::from_pose(&gt, 100.0, sk.scoring_joints()).unwrap();
                AblationItem {
                    ground_truth: gt,
                    samples: SampleSet::new(cands).unwrap(),
                    ordinal_gt: Some(ord.clone()),
                    ordinal_pred: Some(ord),
                }
            })
            .collect()
    }

    fn cfg() -> ScoringConfig {
        ScoringConfig {
            epsilon: 100.0,
            scoring_joints: Skeleton::h36m17().scoring_joints().to_vec(),
            temperature_gt: 0.9,
            temperature_pred: 0.3,
            metric: Metric::Mpjpe,
            with_scale: true,
        }
    }

    const SAMPLE_METHODS: [Method; 4] = [Method::Oracle, Method::Mean, Method::OrdinalGt, Method::OrdinalPred];

    #[test]
    fn oracle_is_monotone_and_k1_collapses() {
        let curve = ablation_curve(&items(10, 50, 1), &[1, 5, 10, 50], &SAMPLE_METHODS, &cfg()).unwrap();
        let oracle = curve.series("oracle").unwrap();
        assert!(oracle.windows(2).all(|w| w[1] <= w[0]));
        assert!(oracle[3] < oracle[0]);
        let first: Vec<f64> = curve.series.iter().map(|(_, v)| v[0]).collect();
        assert!(first.iter().all(|v| (v - first[0]).abs() < 1e-9), "{first:?}");
    }

    #[test]
    fn mean_error_saturates() {
        let curve = ablation_curve(&items(10, 200, 2), &[1, 10, 100, 200], &[Method::Mean], &cfg()).unwrap();
        let m = curve.series("mean").unwrap();
        assert!((m[3] - m[2]).abs() < 0.1 * (m[1] - m[0]).abs(), "{m:?}");
    }

    #[test]
    fn input_validation() {
        let it = items(2, 5, 3);
        assert!(ablation_curve(&it, &[1, 10], &[Method::Mean], &cfg()).is_err());
        assert!(ablation_curve(&it, &[2, 1], &[Method::Mean], &cfg()).is_err());
        assert!(ablation_curve(&it, &[0, 1], &[Method::Mean], &cfg()).is_err());
        assert!(ablation_curve(&[], &[1], &[Method::Mean], &cfg()).is_err());
        assert!(ablation_curve(&it, &[1], &[Method::Baseline], &cfg()).is_err());
    }

    #[test]
    fn csv_layout() {
        let curve = AblationCurve {
            ks: vec![1, 5],
            series: vec![("oracle".into(), vec![3.0, 2.5]), ("mean".into(), vec![3.0, 2.0])],
        };
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,oracle,mean\n1,3,3\n5,2.5,2\n");
    }
}
