//! Subcommand arguments, their resolved configurations and bodies.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use cmr_forge::augment::{self, RotationAugmentation};
use cmr_forge::constants;
use cmr_forge::dataset::{self, BuildRequest, CohortManifest, CohortPatient, CohortVolume, TrainingConfig};
use cmr_forge::image::{self, LabelMap, SequenceKind, Volume};
use cmr_forge::io::{self, LabelRemap};
use cmr_forge::metrics::{self, DistanceMode, EvalOptions, EvalReport};
use cmr_forge::phantom::{self, CohortOptions, COHORT_FILE};
use cmr_forge::preprocess::{self, HistogramScope, PreprocessOptions};

use crate::config::{required, usage, write_run_record};

fn read_cohort_dir(dir: &Path) -> anyhow::Result<CohortManifest> {
    Ok(dataset::read_cohort(dir.join(COHORT_FILE))?)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn challenge_remap(on: bool) -> Option<LabelRemap> {
    on.then(LabelRemap::challenge)
}

// phantom

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PhantomArgs {
    /// Number of patients.
    #[arg(long)]
    pub patients: Option<usize>,
    /// Cohort seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// In-plane matrix size at 1.25 mm [default: 256].
    #[arg(long)]
    pub size: Option<usize>,
    /// Gaussian noise sigma relative to tissue intensities [default: 0.02].
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Maximum coefficient of the random log-linear bias field [default: 0].
    #[arg(long)]
    pub bias_strength: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PhantomRun {
    patients: usize,
    seed: u64,
    out: PathBuf,
    options: CohortOptions,
}

pub fn phantom(a: PhantomArgs, threads: usize) -> anyhow::Result<()> {
    let size = a.size.unwrap_or(constants::TARGET_SIZE.0);
    let run = PhantomRun {
        patients: required(a.patients, "--patients")?,
        seed: a.seed.unwrap_or(0),
        out: required(a.out, "--out")?,
        options: CohortOptions {
            size: (size, size),
            noise_sigma: a.noise_sigma.unwrap_or(0.02),
            bias_strength: a.bias_strength.unwrap_or(0.0),
            ..CohortOptions::default()
        },
    };
    if run.patients == 0 {
        return Err(usage("--patients must be at least 1"));
    }
    let records = phantom::generate_cohort(run.patients, run.seed, &run.options).map_err(|e| usage(e.to_string()))?;
    let manifest = phantom::write_cohort(&records, run.seed, &run.out)?;
    io::write_json(&records, run.out.join("phantoms.json"))?;
    write_run_record(&run.out, "phantom", threads, &run)?;
    println!("wrote {} patients to {}", manifest.patients.len(), run.out.display());
    Ok(())
}

// preprocess

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PreprocessArgs {
    /// Cohort directory holding cohort.json.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory (receives a cohort.json of the processed volumes).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reference histogram scope: global | per-sequence [default: global].
    #[arg(long)]
    pub scope: Option<String>,
    /// Polynomial degree of the log bias field [default: 3].
    #[arg(long)]
    pub bias_degree: Option<usize>,
    /// Skip bias-field correction.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_bias_correction: Option<bool>,
    /// Target in-plane spacing in mm [default: 1.25].
    #[arg(long)]
    pub target_spacing: Option<f64>,
    /// Target in-plane matrix size [default: 256].
    #[arg(long)]
    pub target_size: Option<usize>,
    /// Read ground truth with challenge label codes (200/500/600).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub challenge_labels: Option<bool>,
}

#[derive(Debug, Serialize)]
struct PreprocessRun {
    input: PathBuf,
    out: PathBuf,
    challenge_labels: bool,
    options: PreprocessOptions,
}

pub fn preprocess(a: PreprocessArgs, threads: usize) -> anyhow::Result<()> {
    let scope: HistogramScope = a
        .scope
        .as_deref()
        .unwrap_or("global")
        .parse()
        .map_err(|e: cmr_forge::Error| usage(e.to_string()))?;
    let spacing = a.target_spacing.unwrap_or(constants::TARGET_SPACING.0);
    let size = a.target_size.unwrap_or(constants::TARGET_SIZE.0);
    if !(spacing.is_finite() && spacing > 0.0) || size == 0 {
        return Err(usage("--target-spacing and --target-size must be positive"));
    }
    let run = PreprocessRun {
        input: required(a.input, "--input")?,
        out: required(a.out, "--out")?,
        challenge_labels: a.challenge_labels.unwrap_or(false),
        options: PreprocessOptions {
            bias_degree: (!a.no_bias_correction.unwrap_or(false))
                .then_some(a.bias_degree.unwrap_or(preprocess::DEFAULT_BIAS_DEGREE)),
            scope,
            target_spacing: (spacing, spacing),
            target_size: (size, size),
        },
    };
    let cohort = read_cohort_dir(&run.input)?;
    let remap = challenge_remap(run.challenge_labels);

    let mut entries: Vec<(&CohortPatient, &CohortVolume)> = Vec::new();
    for p in &cohort.patients {
        for v in &p.volumes {
            entries.push((p, v));
        }
    }
    let volumes = entries
        .par_iter()
        .map(|(p, v)| {
            let path = run.input.join(&v.image_path);
            let (vol, _) = io::read_volume_as(&path, v.sequence, &p.patient_id)?;
            if preprocess::mean_std(vol.data()).1 == 0.0 {
                anyhow::bail!("{}: volume is constant and cannot be normalized", path.display());
            }
            Ok(vol)
        })
        .collect::<anyhow::Result<Vec<Volume>>>()?;
    let processed = preprocess::preprocess_volumes(&volumes, &run.options)?;
    for (v, bias) in volumes.iter().zip(&processed.bias) {
        for s in bias {
            if let preprocess::SliceBias::Skipped { z, reason } = s {
                warn!(
                    "{} {} slice {z}: bias correction skipped ({reason})",
                    v.patient_id(),
                    v.sequence()
                );
            }
        }
    }

    let written = entries
        .par_iter()
        .zip(&processed.volumes)
        .map(|((_, v), out_vol)| {
            io::write_volume(out_vol, run.out.join(&v.image_path))?;
            if let Some(lp) = &v.label_path {
                let src = run.input.join(lp);
                let (labels, _) = io::read_label_map(&src, remap.as_ref())?;
                let (sx, sy) = run.options.target_spacing;
                let (nx, ny) = run.options.target_size;
                let labels = image::resample_labels_nearest(&labels, (sx, sy))
                    .and_then(|l| image::crop_or_pad_labels(&l, nx, ny))
                    .with_context(|| src.display().to_string())?;
                io::write_label_map(&labels, run.out.join(lp))?;
            }
            Ok(())
        })
        .collect::<anyhow::Result<Vec<()>>>()?;
    info!("wrote {} volumes", written.len());
    let out_cohort = CohortManifest {
        seed: cohort.seed,
        patients: cohort.patients.clone(),
    };
    io::write_json(&out_cohort, run.out.join(COHORT_FILE))?;
    io::write_json(&processed.references, run.out.join("references.json"))?;
    write_run_record(&run.out, "preprocess", threads, &run)?;
    println!(
        "preprocessed {} volumes into {}",
        processed.volumes.len(),
        run.out.display()
    );
    Ok(())
}

// augment

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct AugmentArgs {
    /// Cohort directory holding cohort.json.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rotation step in degrees, clockwise [default: 7.2].
    #[arg(long)]
    pub angle_step: Option<f64>,
    /// Number of rotated copies per slice [default: 20].
    #[arg(long)]
    pub rotations: Option<usize>,
    /// Landmarks per contour [default: 50].
    #[arg(long)]
    pub landmarks: Option<usize>,
    /// Also write one random whole-slice rotation per slice, drawn from this seed.
    #[arg(long)]
    pub global_seed: Option<u64>,
    /// Read ground truth with challenge label codes (200/500/600).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub challenge_labels: Option<bool>,
}

#[derive(Debug, Serialize)]
struct AugmentRun {
    input: PathBuf,
    out: PathBuf,
    rotation: RotationAugmentation,
    landmarks: usize,
    global_seed: Option<u64>,
    challenge_labels: bool,
}

#[derive(Debug, Serialize)]
struct GlobalRotation {
    image: PathBuf,
    labels: PathBuf,
    angle_deg: f64,
}

#[derive(Debug, Serialize)]
struct AugmentedSlice {
    patient_id: String,
    z: usize,
    labels: PathBuf,
    /// Index k holds the rotation by k steps; k = 0 is the original slice.
    rotations: Vec<PathBuf>,
    global: Option<GlobalRotation>,
}

fn slice_volume(s: &image::Slice2D, thickness: f64, patient: &str) -> cmr_forge::Result<Volume> {
    Volume::from_slices(std::slice::from_ref(s), thickness, SequenceKind::Lge, patient)
}

fn augment_patient(
    run: &AugmentRun,
    p: &CohortPatient,
    remap: Option<&LabelRemap>,
) -> anyhow::Result<Vec<AugmentedSlice>> {
    let Some(v) = p
        .volumes
        .iter()
        .find(|v| v.sequence == SequenceKind::Lge && v.label_path.is_some())
    else {
        return Ok(Vec::new());
    };
    let ipath = run.input.join(&v.image_path);
    let lpath = run.input.join(v.label_path.as_ref().expect("filtered"));
    let (img, _) = io::read_volume_as(&ipath, SequenceKind::Lge, &p.patient_id)?;
    let (labels, _) = io::read_label_map(&lpath, remap)?;
    labels
        .check_aligned(&img)
        .with_context(|| lpath.display().to_string())?;
    let dir = PathBuf::from(&p.patient_id);
    let thickness = img.spacing()[2];

    let set = augment::landmark_set(&labels, run.landmarks).with_context(|| lpath.display().to_string())?;
    io::write_json(&set, run.out.join(dir.join("landmarks.json")))?;

    let mut slices = Vec::new();
    for z in 0..img.dims()[2] {
        let (s, l) = (img.slice(z), labels.slice(z));
        let rotated = match augment::generate_rotation_set(&s, &l, &run.rotation) {
            Ok(r) => r,
            Err(cmr_forge::Error::Degenerate(m)) => {
                warn!("{} slice {z}: skipped ({m})", ipath.display());
                continue;
            }
            Err(e) => return Err(anyhow::Error::new(e).context(format!("{} slice {z}", ipath.display()))),
        };
        let stem = format!("lge_z{z:02}");
        let label_file = dir.join(format!("{stem}_labels.nii.gz"));
        io::write_label_map(&labels.extract_slice(z)?, run.out.join(&label_file))?;
        let mut rotations = Vec::new();
        for (k, r) in rotated.iter().enumerate() {
            let f = dir.join(format!("{stem}_rot{k:02}.nii.gz"));
            io::write_volume(&slice_volume(r, thickness, &p.patient_id)?, run.out.join(&f))?;
            rotations.push(f);
        }
        let global = match run.global_seed {
            None => None,
            Some(seed) => {
                let slice_seed = seed ^ ((z as u64) << 32) ^ fnv(&p.patient_id);
                let (gs, gl, angle) = augment::global_rotation(&s, &l, slice_seed)?;
                let image = dir.join(format!("{stem}_global.nii.gz"));
                let glabels = dir.join(format!("{stem}_global_labels.nii.gz"));
                io::write_volume(&slice_volume(&gs, thickness, &p.patient_id)?, run.out.join(&image))?;
                let lm = LabelMap::from_slices(std::slice::from_ref(&gl), thickness)?;
                io::write_label_map(&lm, run.out.join(&glabels))?;
                Some(GlobalRotation {
                    image,
                    labels: glabels,
                    angle_deg: angle,
                })
            }
        };
        slices.push(AugmentedSlice {
            patient_id: p.patient_id.clone(),
            z,
            labels: label_file,
            rotations,
            global,
        });
    }
    Ok(slices)
}

/// FNV-1a, to give each patient its own seed stream.
fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

pub fn augment(a: AugmentArgs, threads: usize) -> anyhow::Result<()> {
    let run = AugmentRun {
        input: required(a.input, "--input")?,
        out: required(a.out, "--out")?,
        rotation: RotationAugmentation {
            angle_step_deg: a.angle_step.unwrap_or(constants::ROTATION_STEP_DEG),
            count: a.rotations.unwrap_or(constants::ROTATION_COUNT),
        },
        landmarks: a.landmarks.unwrap_or(constants::LANDMARKS_PER_CONTOUR),
        global_seed: a.global_seed,
        challenge_labels: a.challenge_labels.unwrap_or(false),
    };
    if run.landmarks == 0 {
        return Err(usage("--landmarks must be at least 1"));
    }
    if !run.rotation.angle_step_deg.is_finite() {
        return Err(usage("--angle-step must be finite"));
    }
    let cohort = read_cohort_dir(&run.input)?;
    let remap = challenge_remap(run.challenge_labels);
    let mut patients: Vec<&CohortPatient> = cohort.patients.iter().collect();
    patients.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    let index: Vec<AugmentedSlice> = patients
        .par_iter()
        .map(|p| augment_patient(&run, p, remap.as_ref()))
        .collect::<anyhow::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    if index.is_empty() {
        anyhow::bail!(
            "{}: no labeled LGE slices to augment",
            run.input.join(COHORT_FILE).display()
        );
    }
    io::write_json(&index, run.out.join("augment.json"))?;
    write_run_record(&run.out, "augment", threads, &run)?;
    println!("augmented {} LGE slices into {}", index.len(), run.out.display());
    Ok(())
}

// build-dataset

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BuildDatasetArgs {
    /// Cohort directory holding cohort.json.
    #[arg(long)]
    pub cohort: Option<PathBuf>,
    /// Training configuration 1..=8.
    #[arg(long)]
    pub config: Option<u8>,
    /// Directory with a cohort.json of synthetic LGE volumes (configs 5..8).
    #[arg(long)]
    pub synthetic_dir: Option<PathBuf>,
    /// Split seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rotation step in degrees [default: 7.2].
    #[arg(long)]
    pub angle_step: Option<f64>,
    /// Rotated copies per LGE slice [default: 20].
    #[arg(long)]
    pub rotations: Option<usize>,
    /// List only the rotated copies, not the unrotated LGE slice.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub drop_original: Option<bool>,
    /// Read ground truth with challenge label codes (200/500/600).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub challenge_labels: Option<bool>,
}

#[derive(Debug, Serialize)]
struct BuildRun {
    cohort: PathBuf,
    config: TrainingConfig,
    synthetic_dir: Option<PathBuf>,
    seed: u64,
    out: PathBuf,
    rotation: RotationAugmentation,
    keep_original: bool,
    challenge_labels: bool,
}

pub fn build_dataset(a: BuildDatasetArgs, threads: usize) -> anyhow::Result<()> {
    let id = required(a.config, "--config")?;
    let config = TrainingConfig::from_id(id).map_err(|_| usage(format!("--config {id} is not one of 1..=8")))?;
    if config.include_synthetic_lge && a.synthetic_dir.is_none() {
        return Err(usage(format!(
            "--config {id} includes synthetic LGE and requires --synthetic-dir"
        )));
    }
    let run = BuildRun {
        cohort: required(a.cohort, "--cohort")?,
        config,
        synthetic_dir: a.synthetic_dir.filter(|_| config.include_synthetic_lge),
        seed: a.seed.unwrap_or(0),
        out: required(a.out, "--out")?,
        rotation: RotationAugmentation {
            angle_step_deg: a.angle_step.unwrap_or(constants::ROTATION_STEP_DEG),
            count: a.rotations.unwrap_or(constants::ROTATION_COUNT),
        },
        keep_original: !a.drop_original.unwrap_or(false),
        challenge_labels: a.challenge_labels.unwrap_or(false),
    };
    let cohort = read_cohort_dir(&run.cohort)?;
    let mut req = BuildRequest::new(config, &cohort, &run.cohort, &run.out);
    req.synthetic_dir = run.synthetic_dir.as_deref();
    req.seed = run.seed;
    req.rotation = run.rotation;
    req.keep_original = run.keep_original;
    req.remap = challenge_remap(run.challenge_labels);
    let manifest = dataset::build(&req)?;
    let path = run.out.join(dataset::manifest_file_name(id));
    dataset::write_manifest(&manifest, &path)?;
    let summary = dataset::summarize(&manifest).to_string();
    write_text(&run.out.join(format!("summary_config_{id}.txt")), &summary)?;
    write_run_record(&run.out, "build-dataset", threads, &run)?;
    print!("{summary}");
    println!("manifest: {}", path.display());
    Ok(())
}

// evaluate

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvaluateArgs {
    /// Directory of predicted label maps.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Directory of ground-truth label maps (same relative paths).
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Use the ground-truth header spacing (the default).
    #[arg(long, num_args = 0..=1, default_missing_value = "true", conflicts_with = "spacing")]
    pub spacing_from_header: Option<bool>,
    /// Voxel spacing in mm as x,y,z, overriding the headers.
    #[arg(long, value_delimiter = ',')]
    pub spacing: Option<Vec<f64>>,
    /// Surface distances over the volume (3d) or per slice (2d) [default: 3d].
    #[arg(long)]
    pub mode: Option<String>,
    /// Report this percentile of surface distances instead of the maximum.
    #[arg(long)]
    pub hausdorff_percentile: Option<f64>,
    /// Read both sides with challenge label codes (200/500/600).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub challenge_labels: Option<bool>,
    /// Output directory for report.json and metrics.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvaluateRun {
    pred: PathBuf,
    gt: PathBuf,
    spacing: Option<[f64; 3]>,
    options: EvalOptions,
    challenge_labels: bool,
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct EvaluationOutput {
    cases: Vec<EvalReport>,
    aggregate: metrics::AggregateReport,
}

fn is_nifti(p: &Path) -> bool {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".nii") || name.ends_with(".nii.gz")
}

fn nifti_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.with_context(|| format!("listing {}", dir.display()))?;
        if entry.file_type().is_file() && is_nifti(entry.path()) {
            files.push(
                entry
                    .path()
                    .strip_prefix(dir)
                    .expect("walk stays under root")
                    .to_owned(),
            );
        }
    }
    Ok(files)
}

pub fn evaluate(a: EvaluateArgs, threads: usize) -> anyhow::Result<()> {
    let mode: DistanceMode = a
        .mode
        .as_deref()
        .unwrap_or("3d")
        .parse()
        .map_err(|e: cmr_forge::Error| usage(e.to_string()))?;
    if let Some(q) = a.hausdorff_percentile {
        if !(q > 0.0 && q <= 100.0) {
            return Err(usage(format!("--hausdorff-percentile {q} not in (0, 100]")));
        }
    }
    let spacing = match (a.spacing, a.spacing_from_header.unwrap_or(false)) {
        (Some(_), true) => return Err(usage("--spacing and --spacing-from-header are mutually exclusive")),
        (Some(s), false) => {
            let s: [f64; 3] = s
                .try_into()
                .map_err(|_| usage("--spacing takes exactly three values x,y,z"))?;
            if !s.iter().all(|v| v.is_finite() && *v > 0.0) {
                return Err(usage("--spacing values must be positive"));
            }
            Some(s)
        }
        (None, _) => None,
    };
    let run = EvaluateRun {
        pred: required(a.pred, "--pred")?,
        gt: required(a.gt, "--gt")?,
        spacing,
        options: EvalOptions {
            mode,
            hausdorff_percentile: a.hausdorff_percentile,
        },
        challenge_labels: a.challenge_labels.unwrap_or(false),
        out: required(a.out, "--out")?,
    };
    let remap = challenge_remap(run.challenge_labels);
    let files = nifti_files(&run.gt)?;
    if files.is_empty() {
        anyhow::bail!("{}: no NIfTI label maps found", run.gt.display());
    }
    let cases = files
        .par_iter()
        .map(|rel| {
            let (gp, pp) = (run.gt.join(rel), run.pred.join(rel));
            if !pp.is_file() {
                anyhow::bail!("{}: no prediction for ground truth {}", pp.display(), gp.display());
            }
            let (gt, header) = io::read_label_map(&gp, remap.as_ref())?;
            let (pred, _) = io::read_label_map(&pp, remap.as_ref())?;
            let spacing = run.spacing.unwrap_or(header.spacing3());
            metrics::evaluate_case(rel.to_string_lossy(), &pred, &gt, spacing, &run.options)
                .with_context(|| format!("{} vs {}", pp.display(), gp.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let aggregate = metrics::aggregate(&cases);
    let table = aggregate.to_string();
    fs::create_dir_all(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    io::write_json(&EvaluationOutput { cases, aggregate }, run.out.join("report.json"))?;
    write_text(&run.out.join("metrics.txt"), &table)?;
    write_run_record(&run.out, "evaluate", threads, &run)?;
    print!("{table}");
    Ok(())
}

// inspect

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct InspectArgs {
    /// NIfTI file, cohort directory / cohort.json, or dataset manifest.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Also write inspect.json and run.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct InspectRun {
    input: PathBuf,
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Inspection {
    Nifti {
        dims: [usize; 3],
        spacing: [f64; 3],
        datatype: String,
        endianness: String,
        sequence: Option<SequenceKind>,
        patient_id: Option<String>,
        min: f32,
        max: f32,
        mean: f64,
        label_counts: Option<BTreeMap<String, usize>>,
    },
    Cohort {
        seed: u64,
        patients: usize,
        volumes: BTreeMap<String, usize>,
        labeled: BTreeMap<String, usize>,
    },
    Dataset {
        config_id: u8,
        seed: u64,
        summary: dataset::Summary,
    },
}

fn inspect_nifti(path: &Path) -> anyhow::Result<Inspection> {
    let img = io::read_nifti(path)?;
    let values = &img.values;
    let min = values.iter().copied().fold(f32::INFINITY, f32::min);
    let max = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let (mean, _) = preprocess::mean_std(values);
    let label_counts = img.to_label_map(None).ok().map(|l| {
        (0..=image::label::MAX)
            .map(|c| (c.to_string(), l.count(c)))
            .collect::<BTreeMap<_, _>>()
    });
    let tag = img.header.tagged_metadata();
    Ok(Inspection::Nifti {
        dims: img.header.dims3(),
        spacing: img.header.spacing3(),
        datatype: format!("{:?}", img.header.datatype),
        endianness: format!("{:?}", img.header.endianness),
        sequence: tag.as_ref().map(|t| t.0),
        patient_id: tag.map(|t| t.1),
        min,
        max,
        mean,
        label_counts,
    })
}

fn inspect_cohort(m: &CohortManifest) -> Inspection {
    let (mut volumes, mut labeled) = (BTreeMap::new(), BTreeMap::new());
    for v in m.patients.iter().flat_map(|p| &p.volumes) {
        *volumes.entry(v.sequence.to_string()).or_default() += 1;
        *labeled.entry(v.sequence.to_string()).or_default() += v.label_path.is_some() as usize;
    }
    Inspection::Cohort {
        seed: m.seed,
        patients: m.patients.len(),
        volumes,
        labeled,
    }
}

fn inspect_path(path: &Path) -> anyhow::Result<Inspection> {
    if path.is_dir() {
        return Ok(inspect_cohort(&read_cohort_dir(path)?));
    }
    if is_nifti(path) {
        return inspect_nifti(path);
    }
    if path.extension().is_some_and(|e| e == "json") {
        let value: serde_json::Value = io::read_json(path)?;
        if value.get("records").is_some() {
            let m = dataset::read_manifest(path)?;
            m.validate(path.parent().unwrap_or(Path::new(".")))
                .with_context(|| path.display().to_string())?;
            return Ok(Inspection::Dataset {
                config_id: m.config_id,
                seed: m.seed,
                summary: dataset::summarize(&m),
            });
        }
        return Ok(inspect_cohort(&dataset::read_cohort(path)?));
    }
    anyhow::bail!("{}: not a NIfTI file, cohort or dataset manifest", path.display())
}

pub fn inspect(a: InspectArgs, threads: usize) -> anyhow::Result<()> {
    let run = InspectRun {
        input: required(a.input, "--input")?,
        out: a.out,
    };
    let result = inspect_path(&run.input)?;
    match &result {
        Inspection::Dataset {
            config_id,
            seed,
            summary,
        } => {
            println!("dataset manifest, configuration {config_id}, seed {seed}");
            print!("{summary}");
        }
        other => println!("{}", io::to_json_string(other)?),
    }
    if let Some(out) = &run.out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        io::write_json(&result, out.join("inspect.json"))?;
        write_run_record(out, "inspect", threads, &run)?;
    }
    Ok(())
}
