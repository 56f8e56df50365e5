use nalgebra::{Matrix3, Matrix3xX, Vector3};

use crate::error::{Error, Result};
use crate::pose::Pose3D;

fn check_same(a: &Pose3D, b: &Pose3D) -> Result<()> {
    if a.num_joints() != b.num_joints() {
        return Err(Error::DimensionMismatch {
            expected: b.num_joints(),
            got: a.num_joints(),
        });
    }
    Ok(())
}

/// Mean over joints of the Euclidean joint distance, in the poses' units.
pub fn mpjpe(pred: &Pose3D, gt: &Pose3D) -> Result<f64> {
    check_same(pred, gt)?;
    if gt.num_joints() == 0 {
        return Err(Error::EmptyList);
    }
    let sum: f64 = pred
        .joints()
        .iter()
        .zip(gt.joints())
        .map(|(p, g)| ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2) + (p[2] - g[2]).powi(2)).sqrt())
        .sum();
    Ok(sum / gt.num_joints() as f64)
}

/// `x -> scale * rotation * x + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub rotation: [[f64; 3]; 3],
    pub scale: f64,
    pub translation: [f64; 3],
}

impl Similarity {
    pub fn apply(&self, p: &Pose3D) -> Pose3D {
        let r = &self.rotation;
        let joints = p
            .joints()
            .iter()
            .map(|x| {
                let mut y = [0.0; 3];
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = self.scale * (r[i][0] * x[0] + r[i][1] * x[1] + r[i][2] * x[2]) + self.translation[i];
                }
                y
            })
            .collect();
        Pose3D::new(joints).expect("finite transform of finite pose")
    }

    pub fn determinant(&self) -> f64 {
        to_matrix(&self.rotation).determinant()
    }
}

fn to_matrix(r: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| r[i][j])
}

fn centered(p: &Pose3D) -> (Matrix3xX<f64>, Vector3<f64>) {
    let m = Matrix3xX::from_fn(p.num_joints(), |i, j| p.joint(j)[i]);
    let c = m.column_mean();
    let mut out = m;
    for mut col in out.column_iter_mut() {
        col -= c;
    }
    (out, c)
}

fn check_spread(m: &Matrix3xX<f64>, which: &str) -> Result<()> {
    let sv = (m * m.transpose()).symmetric_eigenvalues();
    let mut s: Vec<f64> = sv.iter().map(|v| v.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    if s[0] <= 1e-12 || s[1] <= 1e-9 * s[0] {
        return Err(Error::DegenerateConfiguration(format!(
            "{which} joints are coincident or collinear"
        )));
    }
    Ok(())
}

/// The similarity transform (reflections excluded) minimizing the summed
/// squared joint distance from the transformed `pred` to `gt`. Without
/// `with_scale` the scale is fixed to 1.
pub fn procrustes_transform(pred: &Pose3D, gt: &Pose3D, with_scale: bool) -> Result<Similarity> {
    check_same(pred, gt)?;
    if pred.num_joints() < 3 {
        return Err(Error::DegenerateConfiguration("need at least three joints".into()));
    }
    let (x, mx) = centered(pred);
    let (y, my) = centered(gt);
    check_spread(&x, "predicted")?;
    check_spread(&y, "ground-truth")?;

    let h = &y * x.transpose();
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let d = (u * v_t).determinant().signum();
    let flip = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let r = u * flip * v_t;
    let scale = if with_scale {
        let sigma = svd.singular_values;
        let trace = sigma[0] + sigma[1] + d * sigma[2];
        trace / x.norm_squared()
    } else {
        1.0
    };
    let t = my - scale * (r * mx);
    Ok(Similarity {
        rotation: [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ],
        scale,
        translation: [t[0], t[1], t[2]],
    })
}

/// `pred` after optimal similarity alignment onto `gt`.
pub fn procrustes_align(pred: &Pose3D, gt: &Pose3D, with_scale: bool) -> Result<Pose3D> {
    Ok(procrustes_transform(pred, gt, with_scale)?.apply(pred))
}

/// MPJPE after Procrustes alignment.
pub fn pa_mpjpe(pred: &Pose3D, gt: &Pose3D, with_scale: bool) -> Result<f64> {
    mpjpe(&procrustes_align(pred, gt, with_scale)?, gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::RngStream;
    use proptest::prelude::*;

    fn random_pose(rng: &mut RngStream, n: usize) -> Pose3D {
        Pose3D::new(
            (0..n)
                .map(|_| {
                    [
                        rng.uniform_range(-800.0, 800.0),
                        rng.uniform_range(-800.0, 800.0),
                        rng.uniform_range(-800.0, 800.0),
                    ]
                })
                .collect(),
        )
        .unwrap()
    }

    /// Rotation from an axis-angle pair (Rodrigues).
    fn rotation(axis: [f64; 3], deg: f64) -> [[f64; 3]; 3] {
        let n = (axis[0].powi(2) + axis[1].powi(2) + axis[2].powi(2)).sqrt();
        let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
        let (s, c) = deg.to_radians().sin_cos();
        let t = 1.0 - c;
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    }

    fn sq_error(a: &Pose3D, b: &Pose3D) -> f64 {
        a.joints()
            .iter()
            .zip(b.joints())
            .map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>())
            .sum()
    }

    #[test]
    fn mpjpe_examples() {
        let g = random_pose(&mut RngStream::new(1), 17);
        assert_eq!(mpjpe(&g, &g).unwrap(), 0.0);
        // Oracle: every joint is displaced by the vector (10, 0, 0), whose
        // norm is 10.
        let shifted = g.translated([10.0, 0.0, 0.0]);
        assert!((mpjpe(&shifted, &g).unwrap() - 10.0).abs() < 1e-9);
        let rot = Similarity {
            rotation: rotation([1.0, 2.0, 3.0], 40.0),
            scale: 1.0,
            translation: [0.0; 3],
        };
        let a = mpjpe(&shifted, &g).unwrap();
        let b = mpjpe(&rot.apply(&shifted), &rot.apply(&g)).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(mpjpe(&g, &Pose3D::zeros(3)).is_err());
    }

    #[test]
    fn recovers_rotation_and_translation() {
        let g = random_pose(&mut RngStream::new(2), 17);
        let t = Similarity {
            rotation: rotation([0.0, 1.0, 0.0], 37.0),
            scale: 1.0,
            translation: [5.0, -3.0, 11.0],
        };
        let pred = t.apply(&g);
        let aligned = procrustes_align(&pred, &g, true).unwrap();
        for (a, b) in aligned.joints().iter().zip(g.joints()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-6);
            }
        }
        assert!(pa_mpjpe(&pred, &g, true).unwrap() < 1e-9);
        assert!(mpjpe(&pred, &g).unwrap() > 1.0);
        assert_eq!(pa_mpjpe(&g, &g, false).unwrap() < 1e-9, true);
    }

    #[test]
    fn degenerate_inputs() {
        let line = Pose3D::new((0..5).map(|i| [i as f64, 2.0 * i as f64, 0.0]).collect()).unwrap();
        let g = random_pose(&mut RngStream::new(3), 5);
        assert!(matches!(
            procrustes_align(&line, &g, true),
            Err(Error::DegenerateConfiguration(_))
        ));
        assert!(matches!(
            procrustes_align(&Pose3D::zeros(5), &g, true),
            Err(Error::DegenerateConfiguration(_))
        ));
        assert!(procrustes_align(&g, &line, true).is_err());
        let two = Pose3D::new(vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        assert!(procrustes_align(&two, &two, true).is_err());
    }

    /// Exhaustive oracle for planar point sets: the optimal proper 3D
    /// rotation maps the plane onto itself, either as an in-plane rotation
    /// or as an in-plane rotation composed with a half turn about the x
    /// axis. Each branch is a one-parameter problem solved by a fine grid
    /// followed by bisection on the derivative.
    fn planar_oracle(a: &[[f64; 2]], b: &[[f64; 2]], with_scale: bool) -> Vec<[f64; 2]> {
        let n = a.len() as f64;
        let ca = a.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0] / n, s[1] + p[1] / n]);
        let cb = b.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0] / n, s[1] + p[1] / n]);
        let mut best: Option<(f64, Vec<[f64; 2]>)> = None;
        for flip in [1.0, -1.0] {
            let src: Vec<[f64; 2]> = a.iter().map(|p| [p[0] - ca[0], flip * (p[1] - ca[1])]).collect();
            let dst: Vec<[f64; 2]> = b.iter().map(|p| [p[0] - cb[0], p[1] - cb[1]]).collect();
            let norm_src: f64 = src.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum();
            let place = |th: f64| -> (f64, Vec<[f64; 2]>) {
                let (s, c) = th.sin_cos();
                let rot: Vec<[f64; 2]> = src.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect();
                let k = if with_scale {
                    rot.iter().zip(&dst).map(|(r, d)| r[0] * d[0] + r[1] * d[1]).sum::<f64>() / norm_src
                } else {
                    1.0
                };
                let pts: Vec<[f64; 2]> = rot.iter().map(|r| [k * r[0] + cb[0], k * r[1] + cb[1]]).collect();
                let err = pts.iter().zip(b).map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sum();
                (err, pts)
            };
            let f = |th: f64| place(th).0;
            let steps = 20_000;
            let h = std::f64::consts::TAU / steps as f64;
            let mut arg = 0.0;
            for i in 0..steps {
                let th = i as f64 * h;
                if f(th) < f(arg) {
                    arg = th;
                }
            }
            let df = |th: f64| (f(th + 1e-7) - f(th - 1e-7)) / 2e-7;
            let (mut lo, mut hi) = (arg - h, arg + h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if df(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let (err, pts) = place(0.5 * (lo + hi));
            if best.as_ref().map_or(true, |(e, _)| err < *e) {
                best = Some((err, pts));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn planar_three_point_case_matches_exhaustive_search() {
        let a = [[0.0, 0.0], [120.0, 10.0], [30.0, 90.0]];
        let b = [[5.0, 2.0], [-60.0, 100.0], [-90.0, -10.0]];
        let lift = |p: &[[f64; 2]]| Pose3D::new(p.iter().map(|q| [q[0], q[1], 0.0]).collect()).unwrap();
        for with_scale in [false, true] {
            let expect = planar_oracle(&a, &b, with_scale);
            let got = procrustes_align(&lift(&a), &lift(&b), with_scale).unwrap();
            for (g, e) in got.joints().iter().zip(&expect) {
                assert!((g[0] - e[0]).abs() < 1e-9, "{g:?} vs {e:?}");
                assert!((g[1] - e[1]).abs() < 1e-9, "{g:?} vs {e:?}");
                assert!(g[2].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn least_squares_residual_never_exceeds_unaligned() {
        let mut rng = RngStream::new(4);
        for _ in 0..200 {
            let g = random_pose(&mut rng, 17);
            let p = random_pose(&mut rng, 17);
            for s in [false, true] {
                let aligned = procrustes_align(&p, &g, s).unwrap();
                assert!(sq_error(&aligned, &g) <= sq_error(&p, &g) + 1e-6);
            }
        }
    }

    #[test]
    fn mean_distance_can_grow_under_alignment() {
        // One grossly wrong joint: least squares spreads its error over all
        // joints, so the mean (not squared) distance increases.
        let g = random_pose(&mut RngStream::new(5), 17);
        let mut joints = g.joints().to_vec();
        joints[3][0] += 2000.0;
        let p = Pose3D::new(joints).unwrap();
        assert!(pa_mpjpe(&p, &g, true).unwrap() > mpjpe(&p, &g).unwrap());
    }

    fn pose_strategy() -> impl Strategy<Value = Pose3D> {
        prop::collection::vec(prop::array::uniform3(-800.0..800.0f64), 17)
            .prop_map(|j| Pose3D::new(j).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn pa_mpjpe_below_mpjpe(p in pose_strategy(), g in pose_strategy()) {
            prop_assert!(pa_mpjpe(&p, &g, true).unwrap() <= mpjpe(&p, &g).unwrap() + 1e-9);
        }

        #[test]
        fn exact_recovery(
            g in pose_strategy(),
            axis in prop::array::uniform3(-1.0..1.0f64),
            deg in -180.0..180.0f64,
            scale in 0.5..2.0f64,
            t in prop::array::uniform3(-1000.0..1000.0f64),
        ) {
            prop_assume!(axis.iter().map(|v| v * v).sum::<f64>() > 1e-3);
            let tf = Similarity { rotation: rotation(axis, deg), scale, translation: t };
            let pred = tf.apply(&g);
            let est = procrustes_transform(&pred, &g, true).unwrap();
            prop_assert!((est.determinant() - 1.0).abs() < 1e-9);
            let aligned = est.apply(&pred);
            for (a, b) in aligned.joints().iter().zip(g.joints()) {
                for c in 0..3 {
                    prop_assert!((a[c] - b[c]).abs() < 1e-6);
                }
            }
            let rigid = Similarity { scale: 1.0, ..tf }.apply(&g);
            prop_assert!(pa_mpjpe(&rigid, &g, false).unwrap() < 1e-6);
        }

        #[test]
        fn proper_rotation(p in pose_strategy(), g in pose_strategy()) {
            for s in [false, true] {
                let t = procrustes_transform(&p, &g, s).unwrap();
                prop_assert!((t.determinant() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn mpjpe_metric_axioms(a in pose_strategy(), b in pose_strategy(), c in pose_strategy()) {
            let ab = mpjpe(&a, &b).unwrap();
            prop_assert!((ab - mpjpe(&b, &a).unwrap()).abs() < 1e-9);
            prop_assert!(ab <= mpjpe(&a, &c).unwrap() + mpjpe(&c, &b).unwrap() + 1e-9);
            prop_assert!(ab >= 0.0);
        }
    }
}
