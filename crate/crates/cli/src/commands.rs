use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use interhand_core::collision::{penetration_report, CollisionReport, REPORT_CSV_HEADER};
use interhand_core::config::RunConfig;
use interhand_core::encoder::{encoder_forward, matrix_csv, EncoderWeights, FeatureSet};
use interhand_core::hand_model::HandModel;
use interhand_core::metrics::{evaluate as evaluate_metrics, mmpd, HandTrack};
use interhand_core::obj::write_obj;
use interhand_core::refiner::{refine_sequence, synthesize_sequence, RefineError, Scenario};
use interhand_core::sequence::Sequence;
use ndarray::Array3;
use thiserror::Error;

use crate::ScenarioName;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Divergence(_) => 4,
        }
    }
}

fn input_err(context: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{context}: {e}"))
}

pub struct Context {
    config: RunConfig,
    seed: u64,
    out: PathBuf,
    models: (HandModel, HandModel),
}

impl Context {
    pub fn new(config_path: Option<&Path>, seed: Option<u64>, out: PathBuf) -> Result<Self, CliError> {
        let config = match config_path {
            Some(p) => RunConfig::load(p).map_err(|e| input_err(p.display(), e))?,
            None => RunConfig::default(),
        };
        let models = config.load_models().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(Self {
            seed: seed.unwrap_or(config.seed),
            config,
            out,
            models,
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| input_err(dir.display(), e))?;
        }
        fs::write(&path, contents).map_err(|e| input_err(path.display(), e))?;
        Ok(path)
    }

    fn load_sequence(&self, path: &Path) -> Result<Sequence, CliError> {
        let seq = Sequence::load(path).map_err(|e| input_err(path.display(), e))?;
        seq.check_models(&self.models.0, &self.models.1)
            .map_err(|e| input_err(path.display(), e))?;
        Ok(seq)
    }
}

fn track<'a>(joints: &'a Array3<f64>, vertices: &'a Array3<f64>) -> HandTrack<'a> {
    HandTrack {
        joints: joints.view(),
        vertices: Some(vertices.view()),
    }
}

fn collision_reports(ctx: &Context, seq: &Sequence, path: &Path) -> Result<Vec<CollisionReport>, CliError> {
    let (mr, ml) = &ctx.models;
    let posed = seq.pose(mr, ml).map_err(|e| input_err(path.display(), e))?;
    let (right, left) = posed.meshes(mr, ml).map_err(|e| input_err(path.display(), e))?;
    Ok(right.iter().zip(&left).map(|(r, l)| penetration_report(r, l)).collect())
}

pub fn evaluate(ctx: &Context, pred_path: &Path, gt_path: &Path) -> Result<(), CliError> {
    let (mr, ml) = &ctx.models;
    let pred = ctx.load_sequence(pred_path)?;
    let gt = ctx.load_sequence(gt_path)?;
    if pred.len() != gt.len() {
        return Err(CliError::Input(format!(
            "{} has {} frames but {} has {}",
            pred_path.display(),
            pred.len(),
            gt_path.display(),
            gt.len()
        )));
    }
    if pred.fps != gt.fps {
        return Err(CliError::Input(format!(
            "{} is at {} fps but {} is at {} fps",
            pred_path.display(),
            pred.fps,
            gt_path.display(),
            gt.fps
        )));
    }
    let posed = pred.pose(mr, ml).map_err(|e| input_err(pred_path.display(), e))?;
    let truth = gt.ground_truth(mr, ml).map_err(|e| input_err(gt_path.display(), e))?;
    let reports = collision_reports(ctx, &pred, pred_path)?;
    let [pj_r, pj_l] = posed.joints();
    let [pv_r, pv_l] = posed.vertices();
    let [gj_r, gj_l] = truth.joints();
    let [gv_r, gv_l] = truth.vertices();
    let report = evaluate_metrics(
        [track(&pj_r, &pv_r), track(&pj_l, &pv_l)],
        [track(&gj_r, &gv_r), track(&gj_l, &gv_l)],
        &gt.labeled(),
        gt.fps,
        &reports,
        &ctx.config.metrics,
    )
    .map_err(|e| CliError::Input(format!("evaluation: {e}")))?;
    let summary = report.summary_csv();
    ctx.write("metrics_summary.csv", &summary)?;
    ctx.write("metrics_per_frame.csv", &report.per_frame_csv())?;
    ctx.write("pck.csv", &report.pck_csv())?;
    print!("{summary}");
    Ok(())
}

pub fn collide(ctx: &Context, path: &Path, export_obj: bool) -> Result<(), CliError> {
    let seq = ctx.load_sequence(path)?;
    let reports = collision_reports(ctx, &seq, path)?;
    let mut csv = format!("{REPORT_CSV_HEADER}\n");
    for (t, r) in reports.iter().enumerate() {
        csv.push_str(&r.csv_record(t));
        csv.push('\n');
    }
    ctx.write("collisions.csv", &csv)?;
    let value = mmpd(&reports);
    ctx.write("collide_summary.csv", &format!("metric,value,unit\nmmpd,{value:.6},mm\n"))?;
    if export_obj {
        let (mr, ml) = &ctx.models;
        let posed = seq.pose(mr, ml).map_err(|e| input_err(path.display(), e))?;
        let dir = ctx.out.join("obj");
        fs::create_dir_all(&dir).map_err(|e| input_err(dir.display(), e))?;
        for (t, (r, l)) in posed.right.iter().zip(&posed.left).enumerate() {
            for (side, frame, model) in [("right", r, mr), ("left", l, ml)] {
                let file = dir.join(format!("frame_{t:04}_{side}.obj"));
                let out = fs::File::create(&file).map_err(|e| input_err(file.display(), e))?;
                write_obj(BufWriter::new(out), &frame.vertices, &model.faces)
                    .map_err(|e| input_err(file.display(), e))?;
            }
        }
    }
    println!("frames: {}", reports.len());
    println!("colliding frames: {}", reports.iter().filter(|r| r.penetrating_count > 0).count());
    println!("mmpd_mm: {value:.6}");
    Ok(())
}

pub fn refine(ctx: &Context, path: &Path) -> Result<(), CliError> {
    let (mr, ml) = &ctx.models;
    let seq = ctx.load_sequence(path)?;
    let config = ctx.config.refine_config();
    match refine_sequence(mr, ml, &seq, &config) {
        Ok((refined, trace)) => {
            ctx.write("refined.json", &refined.to_json())?;
            ctx.write("refine_trace.csv", &trace.to_csv())?;
            let after = trace.last();
            println!("iterations: {}", trace.records.len());
            println!("initial objective: {:.9}", trace.initial.objective);
            println!("final objective: {:.9}", after.objective);
            println!("initial mmpd_mm: {:.6}", trace.initial.mmpd_mm);
            println!("final mmpd_mm: {:.6}", after.mmpd_mm);
            Ok(())
        }
        Err(RefineError::Divergence { iteration, trace }) => {
            ctx.write("refine_trace.csv", &trace.to_csv())?;
            Err(CliError::Divergence(format!(
                "refinement diverged at iteration {iteration}; trace written to {}",
                ctx.out.join("refine_trace.csv").display()
            )))
        }
        Err(RefineError::Config(msg)) => Err(CliError::Input(format!("refine configuration: {msg}"))),
        Err(e) => Err(input_err(path.display(), e)),
    }
}

pub fn synth(
    ctx: &Context,
    scenario: ScenarioName,
    frames: Option<usize>,
    seed: Option<u64>,
    noise: f64,
) -> Result<(), CliError> {
    let (mr, ml) = &ctx.models;
    let scenario = match scenario {
        ScenarioName::Disjoint => Scenario::Disjoint,
        ScenarioName::Colliding => Scenario::Colliding,
        ScenarioName::Jittery => {
            if !(noise.is_finite() && noise >= 0.0) {
                return Err(CliError::Usage(format!("--noise must be non-negative, got {noise}")));
            }
            Scenario::Jittery { noise }
        }
    };
    let t_len = frames.unwrap_or(ctx.config.sequence.length);
    let seed = seed.unwrap_or(ctx.seed);
    let seq = synthesize_sequence(mr, ml, scenario, t_len, seed, ctx.config.sequence.fps).map_err(|e| match e {
        RefineError::Config(msg) => CliError::Usage(msg),
        other => CliError::Input(other.to_string()),
    })?;
    let path = ctx.write(&format!("{}.json", scenario.name()), &seq.to_json())?;
    println!("wrote {} frames to {}", seq.len(), path.display());
    Ok(())
}

pub fn encode(ctx: &Context, features: Option<&Path>, weights: Option<&Path>) -> Result<(), CliError> {
    let weights = match weights {
        Some(p) => EncoderWeights::load(p).map_err(|e| input_err(p.display(), e))?,
        None => EncoderWeights::random(&ctx.config.encoder, ctx.seed).map_err(|e| CliError::Input(e.to_string()))?,
    };
    let features = match features {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| input_err(p.display(), e))?;
            serde_json::from_str::<FeatureSet>(&text).map_err(|e| input_err(p.display(), e))?
        }
        None => FeatureSet::random(&ctx.config.encoder, ctx.config.sequence.length, ctx.seed),
    };
    let seqs = features.sequences().map_err(|e| CliError::Input(format!("features: {e}")))?;
    let out = encoder_forward(&seqs, &weights).map_err(|e| CliError::Input(format!("encoder: {e}")))?;
    ctx.write("encoder_weights.json", &weights.to_json())?;
    ctx.write("encoded_right.csv", &matrix_csv(&out.right.view(), "f"))?;
    ctx.write("encoded_left.csv", &matrix_csv(&out.left.view(), "f"))?;
    let mut index = String::from("block,stage,head,rows,cols,file\n");
    for map in &out.attention {
        let name = format!("attention/block{}_{}_head{}.csv", map.block, map.stage, map.head);
        ctx.write(&name, &matrix_csv(&map.matrix.view(), "key_"))?;
        let _ = writeln!(
            index,
            "{},{},{},{},{},{name}",
            map.block,
            map.stage,
            map.head,
            map.matrix.nrows(),
            map.matrix.ncols()
        );
    }
    ctx.write("attention/index.csv", &index)?;
    println!("frames: {}", out.right.nrows());
    println!("output channels: {}", out.right.ncols());
    println!("attention maps: {}", out.attention.len());
    Ok(())
}
