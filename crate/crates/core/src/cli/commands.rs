//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::cli::args::{
    AblateArgs, EvalArgs, InferArgs, MetricArg, ModelKind, Scoring, SourceKind, SynthArgs, TrainArgs, TuneArgs,
};
use crate::cli::pipeline::{
    baseline_predictions, baseline_samples, best_temperature, draw_samples, fit_baseline, fit_cvae, ground_truths,
    gt_ordinals, read_ordinal_file, reference_ordinals, temperature_sweep, OrdinalSource,
};
use crate::datagen::{build_dataset, generate_synthetic, read_dataset_file, split, write_dataset_file, DatasetRecord, SynthConfig};
use crate::eval::plot::line_chart_svg;
use crate::eval::{
    ablation_curve, estimate, format_table, pose_error, write_reports_csv, AblationCurve, AblationItem, EvalReport,
    Method, Metric, ScoringConfig,
};
use crate::lifter::{BaselineModel, CvaeModel, LifterModel};
use crate::nn::RngStream;
use crate::pose::poseset::PoseSet;
use crate::pose::{CameraIntrinsics, Pose3D, Skeleton};

type Result<T> = anyhow::Result<T>;

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((path, BufWriter::new(f)))
}

fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>> {
    let records = read_dataset_file(path)?;
    if records.is_empty() {
        bail!("{}: dataset is empty", path.display());
    }
    Ok(records)
}

fn load_cvae(path: &Path) -> Result<CvaeModel<f32>> {
    Ok(LifterModel::load(path)
        .and_then(LifterModel::into_cvae)
        .with_context(|| format!("loading {}", path.display()))?)
}

fn load_baseline(path: &Path) -> Result<BaselineModel<f32>> {
    Ok(LifterModel::load(path)
        .and_then(LifterModel::into_baseline)
        .with_context(|| format!("loading {}", path.display()))?)
}

fn metric(m: MetricArg) -> Metric {
    match m {
        MetricArg::Mpjpe => Metric::Mpjpe,
        MetricArg::PaMpjpe => Metric::PaMpjpe,
    }
}

fn check_scoring(s: &Scoring) -> Result<()> {
    if s.k_test == 0 {
        bail!("--k-test must be at least 1");
    }
    if !(s.epsilon_mm >= 0.0) {
        bail!("--epsilon-mm must be non-negative");
    }
    if !(s.ordinal_accuracy > 0.0 && s.ordinal_accuracy <= 1.0) {
        bail!("--ordinal-accuracy must lie in (0, 1]");
    }
    if !(s.temperature >= 0.0 && s.temperature_gt >= 0.0) {
        bail!("temperatures must be non-negative");
    }
    Ok(())
}

fn scoring_config(s: &Scoring, skeleton: &Skeleton, metric: Metric) -> ScoringConfig {
    ScoringConfig {
        epsilon: s.epsilon_mm,
        scoring_joints: skeleton.scoring_joints().to_vec(),
        temperature_gt: s.temperature_gt,
        temperature_pred: s.temperature,
        metric,
        with_scale: s.scale(),
    }
}

/// `None` when the predicted-ordinal method is disabled (`--ordinal-source gt`).
fn pred_source(s: &Scoring) -> Result<Option<OrdinalSource>> {
    Ok(match s.ordinal_source {
        SourceKind::Gt => None,
        SourceKind::Noisy => Some(OrdinalSource::Noisy {
            accuracy: s.ordinal_accuracy,
        }),
        SourceKind::File => {
            let path = s
                .ordinal_file
                .as_ref()
                .context("--ordinal-source file needs --ordinal-file")?;
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Some(OrdinalSource::File(
                read_ordinal_file(BufReader::new(f)).map_err(|e| e.with_path(path))?,
            ))
        }
    })
}

/// Candidate draws plus both kinds of reference ordinals for every record.
fn ablation_items(
    model: &CvaeModel<f32>,
    records: &[DatasetRecord],
    s: &Scoring,
    skeleton: &Skeleton,
    seed: u64,
) -> Result<(Vec<AblationItem>, bool)> {
    let samples = draw_samples(model, records, s.k_test, seed)?;
    let gts = ground_truths(records, skeleton)?;
    let ord_gt = gt_ordinals(records, s.epsilon_mm, skeleton)?;
    let pred = pred_source(s)?;
    let ord_pred = match &pred {
        Some(src) => Some(reference_ordinals(records, src, s.epsilon_mm, skeleton, seed)?),
        None => None,
    };
    let items = samples
        .into_iter()
        .zip(gts)
        .zip(ord_gt)
        .enumerate()
        .map(|(i, ((samples, ground_truth), og))| AblationItem {
            ground_truth,
            samples,
            ordinal_gt: Some(og),
            ordinal_pred: ord_pred.as_ref().map(|v| v[i].clone()),
        })
        .collect();
    Ok((items, pred.is_some()))
}

fn sample_methods(with_pred: bool) -> Vec<Method> {
    let mut m = vec![Method::Oracle, Method::OrdinalGt];
    if with_pred {
        m.push(Method::OrdinalPred);
    }
    m.push(Method::Mean);
    m
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    if !(a.val_fraction >= 0.0 && a.test_fraction > 0.0 && a.val_fraction + a.test_fraction < 1.0) {
        bail!("--val-fraction and --test-fraction must be non-negative and sum below 1");
    }
    let config = SynthConfig {
        seed: a.common.seed,
        num_poses: a.num_poses,
        mirror_fraction: a.mirror_fraction,
        camera_distance: a.camera_distance,
        rotations: a.rotations.clone(),
        ..SynthConfig::default()
    };
    let skeleton = Skeleton::h36m17();
    let poses = generate_synthetic(&config, &skeleton)?;
    let records = build_dataset(&poses, &config, &skeleton, &CameraIntrinsics::default(), a.epsilon_mm)?;
    let mut rng = RngStream::new(a.common.seed).derive("split");
    let (rest, test) = split(records, 1.0 - a.test_fraction, &mut rng)?;
    let train_share = (1.0 - a.test_fraction - a.val_fraction) / (1.0 - a.test_fraction);
    let (train, val) = split(rest, train_share, &mut rng)?;
    std::fs::create_dir_all(&a.common.out_dir)
        .with_context(|| format!("creating {}", a.common.out_dir.display()))?;
    for (name, recs) in [("train", &train), ("val", &val), ("test", &test)] {
        let path = a.common.out_dir.join(format!("{name}.dataset"));
        write_dataset_file(recs, &path)?;
        println!("{name}: {} records -> {}", recs.len(), path.display());
    }
    Ok(())
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let config = a.hyper.resolve()?;
    let records = load_dataset(&a.dataset)?;
    let skeleton = Skeleton::h36m17();
    let progress = |epoch: usize, loss: f64| log::info!("epoch {epoch}: loss {loss:.6}");
    let (model, log, kind) = match a.model {
        ModelKind::Cvae => {
            let (m, l) = fit_cvae(&records, &config, &skeleton, a.common.seed, progress)?;
            (LifterModel::Cvae(m), l, "cvae")
        }
        ModelKind::Baseline => {
            let (m, l) = fit_baseline(&records, &config, &skeleton, a.common.seed, progress)?;
            (LifterModel::Baseline(m), l, "baseline")
        }
    };
    let ckpt = a
        .checkpoint
        .clone()
        .unwrap_or_else(|| a.common.out_dir.join(format!("{kind}.ckpt")));
    if let Some(dir) = ckpt.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    model.save(&ckpt)?;
    let (path, mut w) = create(&a.common.out_dir, &format!("loss_{kind}.csv"))?;
    writeln!(w, "epoch,loss")?;
    for (e, l) in log.epoch_losses.iter().enumerate() {
        writeln!(w, "{e},{l}")?;
    }
    w.flush()?;
    println!("checkpoint -> {}\nloss curve -> {}", ckpt.display(), path.display());
    Ok(())
}

fn flat_row(id: &str, action: &str, method: Method, pose: &Pose3D) -> String {
    let coords: Vec<String> = pose.to_flat().iter().map(f64::to_string).collect();
    format!("{id},{action},{method},{}", coords.join(","))
}

pub fn cmd_infer(a: &InferArgs) -> Result<()> {
    check_scoring(&a.scoring)?;
    let records = load_dataset(&a.dataset)?;
    let skeleton = Skeleton::h36m17();
    let model = load_cvae(&a.checkpoint)?;
    let cfg = scoring_config(&a.scoring, &skeleton, Metric::Mpjpe);
    let (items, with_pred) = ablation_items(&model, &records, &a.scoring, &skeleton, a.common.seed)?;
    let baseline = match &a.baseline_checkpoint {
        Some(p) => Some(baseline_predictions(&load_baseline(p)?, &records)?),
        None => None,
    };

    let mut set = PoseSet::new("samples3d", skeleton.num_joints());
    let (index_path, mut index) = create(&a.common.out_dir, "samples_index.csv")?;
    writeln!(index, "item_id,first_row,count")?;
    let (est_path, mut est) = create(&a.common.out_dir, "estimates.csv")?;
    let header: Vec<String> = (0..skeleton.num_joints())
        .flat_map(|j| ["x", "y", "z"].map(|c| format!("{c}{j}")))
        .collect();
    writeln!(est, "item_id,action,method,{}", header.join(","))?;
    for (i, (item, rec)) in items.iter().zip(&records).enumerate() {
        writeln!(index, "{},{},{}", rec.id, set.records.len(), item.samples.len())?;
        set.records.extend(item.samples.candidates().iter().map(Pose3D::to_flat));
        for method in sample_methods(with_pred) {
            let pose = estimate(item, &item.samples, method, &cfg)?;
            writeln!(est, "{}", flat_row(&rec.id, &rec.action, method, &pose))?;
        }
        if let Some(b) = &baseline {
            writeln!(est, "{}", flat_row(&rec.id, &rec.action, Method::Baseline, &b[i]))?;
        }
    }
    index.flush()?;
    est.flush()?;
    let (samples_path, mut w) = create(&a.common.out_dir, "samples.poseset")?;
    set.write(&mut w)?;
    w.flush()?;
    println!(
        "samples -> {}\nindex -> {}\nestimates -> {}",
        samples_path.display(),
        index_path.display(),
        est_path.display()
    );
    Ok(())
}

/// Reads `estimates.csv` into method -> item id -> (action, pose).
pub fn read_estimates(path: &Path) -> Result<BTreeMap<Method, BTreeMap<String, Pose3D>>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out: BTreeMap<Method, BTreeMap<String, Pose3D>> = BTreeMap::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| anyhow::anyhow!("{}:{}: {msg}", path.display(), n + 1);
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(at("too few fields".into()));
        }
        let method: Method = fields[2].parse().map_err(|e| at(format!("{e}")))?;
        let flat = fields[3..]
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|_| at(format!("bad number '{v}'"))))
            .collect::<Result<Vec<_>>>()?;
        let pose = Pose3D::from_flat(&flat).map_err(|e| at(format!("{e}")))?;
        if out.entry(method).or_default().insert(fields[0].to_string(), pose).is_some() {
            return Err(at(format!("duplicate entry for {} / {method}", fields[0])));
        }
    }
    Ok(out)
}

fn reports_for(
    records: &[DatasetRecord],
    gts: &[Pose3D],
    method: Method,
    poses: &[Pose3D],
    with_scale: bool,
) -> Result<Vec<EvalReport>> {
    let mut out = Vec::new();
    for m in [Metric::Mpjpe, Metric::PaMpjpe] {
        let mut r = EvalReport::new(method, m);
        for ((rec, gt), p) in records.iter().zip(gts).zip(poses) {
            r.push(rec.id.clone(), rec.action.clone(), pose_error(p, gt, m, with_scale)?)?;
        }
        out.push(r);
    }
    Ok(out)
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    check_scoring(&a.scoring)?;
    let records = load_dataset(&a.dataset)?;
    let skeleton = Skeleton::h36m17();
    let gts = ground_truths(&records, &skeleton)?;
    let scale = a.scoring.scale();
    let mut reports = Vec::new();
    if let Some(path) = &a.predictions {
        for (method, by_id) in read_estimates(path)? {
            let poses = records
                .iter()
                .map(|r| {
                    by_id
                        .get(&r.id)
                        .cloned()
                        .with_context(|| format!("{}: no {method} estimate for item {}", path.display(), r.id))
                })
                .collect::<Result<Vec<_>>>()?;
            reports.extend(reports_for(&records, &gts, method, &poses, scale)?);
        }
    } else {
        let ckpt = a.checkpoint.as_ref().context("--checkpoint or --predictions is required")?;
        let model = load_cvae(ckpt)?;
        let cfg = scoring_config(&a.scoring, &skeleton, Metric::Mpjpe);
        let (items, with_pred) = ablation_items(&model, &records, &a.scoring, &skeleton, a.common.seed)?;
        for method in sample_methods(with_pred) {
            let poses = items
                .iter()
                .map(|it| estimate(it, &it.samples, method, &cfg))
                .collect::<crate::Result<Vec<_>>>()?;
            reports.extend(reports_for(&records, &gts, method, &poses, scale)?);
        }
        if let Some(p) = &a.baseline_checkpoint {
            let poses = baseline_predictions(&load_baseline(p)?, &records)?;
            reports.extend(reports_for(&records, &gts, Method::Baseline, &poses, scale)?);
        }
    }
    reports.sort_by_key(|r| (r.metric, r.method));
    let (path, mut w) = create(&a.common.out_dir, "eval.csv")?;
    write_reports_csv(&reports, &mut w)?;
    w.flush()?;
    print!("{}", format_table(&reports));
    println!("report -> {}", path.display());
    Ok(())
}

pub fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    check_scoring(&a.scoring)?;
    let kmax = *a.ks.iter().max().context("--ks is empty")?;
    let mut scoring = a.scoring.clone();
    scoring.k_test = scoring.k_test.max(kmax);
    let records = load_dataset(&a.dataset)?;
    let skeleton = Skeleton::h36m17();
    let model = load_cvae(&a.checkpoint)?;
    let cfg = scoring_config(&scoring, &skeleton, metric(a.metric));
    let (items, with_pred) = ablation_items(&model, &records, &scoring, &skeleton, a.common.seed)?;
    let mut curve = ablation_curve(&items, &a.ks, &sample_methods(with_pred), &cfg)?;
    if let Some(p) = &a.baseline_checkpoint {
        let preds = baseline_predictions(&load_baseline(p)?, &records)?;
        for &v in &a.variances {
            let sets = baseline_samples(&preds, v, kmax, skeleton.root(), a.common.seed)?;
            let b_items: Vec<AblationItem> = items
                .iter()
                .zip(sets)
                .map(|(it, samples)| AblationItem {
                    ground_truth: it.ground_truth.clone(),
                    samples,
                    ordinal_gt: None,
                    ordinal_pred: None,
                })
                .collect();
            let mut c = ablation_curve(&b_items, &a.ks, &[Method::Oracle], &cfg)?;
            c.series[0].0 = format!("baseline-var{v}");
            curve.extend(c)?;
        }
    }
    write_curve(&curve, &a.common.out_dir, metric(a.metric))
}

fn write_curve(curve: &AblationCurve, dir: &Path, metric: Metric) -> Result<()> {
    let (csv, mut w) = create(dir, "ablation.csv")?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    let svg = line_chart_svg(
        "Error against number of samples",
        "number of samples",
        &format!("{metric} (mm)"),
        &curve.ks,
        &curve.series,
    );
    let (svg_path, mut w) = create(dir, "ablation.svg")?;
    w.write_all(svg.as_bytes())?;
    w.flush()?;
    println!("curve -> {}\nchart -> {}", csv.display(), svg_path.display());
    Ok(())
}

pub fn cmd_tune_temp(a: &TuneArgs) -> Result<()> {
    check_scoring(&a.scoring)?;
    if a.grid.iter().any(|t| !(*t >= 0.0)) {
        bail!("--grid temperatures must be non-negative");
    }
    let records = load_dataset(&a.dataset)?;
    let skeleton = Skeleton::h36m17();
    let model = load_cvae(&a.checkpoint)?;
    let cfg = scoring_config(&a.scoring, &skeleton, metric(a.metric));
    let (items, with_pred) = ablation_items(&model, &records, &a.scoring, &skeleton, a.common.seed)?;
    let (path, mut w) = create(&a.common.out_dir, "tune_temp.csv")?;
    writeln!(w, "method,temperature,error_mm")?;
    let mut methods = vec![Method::OrdinalGt];
    if with_pred {
        methods.push(Method::OrdinalPred);
    }
    for method in methods {
        let sweep = temperature_sweep(&items, method, &a.grid, &cfg)?;
        for (t, e) in &sweep {
            writeln!(w, "{method},{t},{e}")?;
        }
        if let Some((t, e)) = best_temperature(&sweep) {
            println!("{method}: best temperature {t} ({e:.2} mm)");
        }
    }
    w.flush()?;
    println!("sweep -> {}", path.display());
    Ok(())
}
