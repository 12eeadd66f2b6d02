//! Training-set assembly: cohort manifests, the eight training
//! configurations, patient-level validation splits and per-slice dataset
//! manifests with materialized scar rotations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{generate_rotation_set, RotationAugmentation};
use crate::constants;
use crate::error::{Error, Result};
use crate::image::{LabelMap, SequenceKind, Volume};
use crate::io::{self, LabelRemap};

/// Volumes of a cohort directory (`cohort.json`). Paths are relative to the
/// directory holding the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortManifest {
    pub seed: u64,
    pub patients: Vec<CohortPatient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortPatient {
    pub patient_id: String,
    pub volumes: Vec<CohortVolume>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortVolume {
    pub sequence: SequenceKind,
    pub image_path: PathBuf,
    /// Ground truth, if this volume is segmented.
    #[serde(default)]
    pub label_path: Option<PathBuf>,
}

impl CohortManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in &self.patients {
            if !seen.insert(&p.patient_id) {
                return Err(Error::Config(format!(
                    "patient {} listed twice in cohort",
                    p.patient_id
                )));
            }
        }
        Ok(())
    }

    /// Patients with a labeled volume of `seq`, sorted.
    pub fn labeled_patients(&self, seq: SequenceKind) -> Vec<String> {
        let mut ids: Vec<String> = self
            .patients
            .iter()
            .filter(|p| p.volumes.iter().any(|v| v.sequence == seq && v.label_path.is_some()))
            .map(|p| p.patient_id.clone())
            .collect();
        ids.sort();
        ids
    }
}

pub fn read_cohort(path: impl AsRef<Path>) -> Result<CohortManifest> {
    let m: CohortManifest = io::read_json(path)?;
    m.validate()?;
    Ok(m)
}

/// One of the eight training configurations. LGE is always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub id: u8,
    pub include_bssfp: bool,
    pub include_t2: bool,
    pub include_scar_rotations: bool,
    pub include_synthetic_lge: bool,
}

impl TrainingConfig {
    pub const IDS: std::ops::RangeInclusive<u8> = 1..=8;

    /// 1 = LGE, 2 = +bSSFP, 3 = +T2, 4 = +rotations; 5..8 = 1..4 plus
    /// synthetic LGE.
    pub fn from_id(id: u8) -> Result<Self> {
        if !Self::IDS.contains(&id) {
            return Err(Error::Config(format!("training configuration {id} not in 1..=8")));
        }
        let base = (id - 1) % 4 + 1;
        Ok(TrainingConfig {
            id,
            include_bssfp: base >= 2,
            include_t2: base >= 3,
            include_scar_rotations: base == 4,
            include_synthetic_lge: id > 4,
        })
    }

    pub fn includes(&self, seq: SequenceKind) -> bool {
        match seq {
            SequenceKind::Lge => true,
            SequenceKind::Bssfp => self.include_bssfp,
            SequenceKind::T2 => self.include_t2,
            SequenceKind::SyntheticLge => self.include_synthetic_lge,
            SequenceKind::SyntheticBssfp => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Real,
    /// Scar rotation by k steps (k >= 1).
    Rotated(u32),
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Split::Train => "train",
            Split::Val => "val",
        })
    }
}

/// One 2D training item. Paths are relative to the manifest directory.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub image_path: PathBuf,
    pub label_path: PathBuf,
    pub sequence: SequenceKind,
    pub provenance: Provenance,
    pub patient_id: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub config_id: u8,
    pub seed: u64,
    pub records: Vec<Record>,
}

impl DatasetManifest {
    /// Checks that every referenced file exists under `base` and that no
    /// patient is in both splits of the same sequence pool.
    pub fn validate(&self, base: &Path) -> Result<()> {
        let mut splits: BTreeMap<(SequenceKind, &str), Split> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            for p in [&r.image_path, &r.label_path] {
                if !base.join(p).is_file() {
                    return Err(Error::Config(format!(
                        "record {i}: missing file {}",
                        base.join(p).display()
                    )));
                }
            }
            if let Some(&prev) = splits.get(&(r.sequence, r.patient_id.as_str())) {
                if prev != r.split {
                    return Err(Error::Config(format!(
                        "record {i}: patient {} appears in both train and val for {}",
                        r.patient_id, r.sequence
                    )));
                }
            }
            splits.insert((r.sequence, &r.patient_id), r.split);
        }
        Ok(())
    }
}

pub fn manifest_file_name(config_id: u8) -> String {
    format!("config_{config_id}.json")
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    io::read_json(path)
}

pub fn write_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    io::write_json(m, path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
}

impl PatientSplit {
    pub fn split_of(&self, id: &str) -> Option<Split> {
        if self.val.binary_search_by(|v| v.as_str().cmp(id)).is_ok() {
            Some(Split::Val)
        } else if self.train.binary_search_by(|v| v.as_str().cmp(id)).is_ok() {
            Some(Split::Train)
        } else {
            None
        }
    }
}

/// Seeded shuffle of the sorted ids; the first ceil(n * val_fraction) go to
/// validation. Both halves are returned sorted.
pub fn split_patients(ids: &[String], val_fraction: f64, seed: u64) -> Result<PatientSplit> {
    let mut ids: Vec<String> = ids.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let n = ids.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "a validation split needs at least 2 patients, got {n}"
        )));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "validation fraction {val_fraction} outside (0, 1)"
        )));
    }
    let n_val = ((n as f64 * val_fraction - 1e-9).ceil() as usize).clamp(1, n - 1);
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut val = ids.split_off(n - n_val);
    ids.sort();
    val.sort();
    Ok(PatientSplit { train: ids, val })
}

/// Inputs of one dataset build.
#[derive(Debug, Clone)]
pub struct BuildRequest<'a> {
    pub config: TrainingConfig,
    pub cohort: &'a CohortManifest,
    pub cohort_dir: &'a Path,
    /// Directory holding a `cohort.json` of synthetic LGE volumes.
    pub synthetic_dir: Option<&'a Path>,
    pub seed: u64,
    pub out_dir: &'a Path,
    pub rotation: RotationAugmentation,
    /// Keep the unrotated LGE slice alongside its rotations.
    pub keep_original: bool,
    pub remap: Option<LabelRemap>,
}

impl<'a> BuildRequest<'a> {
    pub fn new(config: TrainingConfig, cohort: &'a CohortManifest, cohort_dir: &'a Path, out_dir: &'a Path) -> Self {
        BuildRequest {
            config,
            cohort,
            cohort_dir,
            synthetic_dir: None,
            seed: 0,
            out_dir,
            rotation: RotationAugmentation::default(),
            keep_original: true,
            remap: None,
        }
    }
}

/// Directory under the output where slice files are materialized.
pub const SLICE_DIR: &str = "slices";

struct Job {
    sequence: SequenceKind,
    patient_id: String,
    image: PathBuf,
    labels: PathBuf,
    split: Split,
    rotate: bool,
}

fn pool_jobs(
    manifest: &CohortManifest,
    base: &Path,
    seq: SequenceKind,
    seed: u64,
    rotate: bool,
    jobs: &mut Vec<Job>,
) -> Result<()> {
    let ids = manifest.labeled_patients(seq);
    if ids.is_empty() {
        warn!("no labeled {seq} volumes in cohort");
        return Ok(());
    }
    let split = split_patients(&ids, constants::VALIDATION_FRACTION, seed)
        .map_err(|e| Error::Config(format!("{seq} pool: {e}")))?;
    let mut patients: Vec<&CohortPatient> = manifest.patients.iter().collect();
    patients.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    for p in patients {
        for v in p.volumes.iter().filter(|v| v.sequence == seq) {
            if let Some(l) = &v.label_path {
                jobs.push(Job {
                    sequence: seq,
                    patient_id: p.patient_id.clone(),
                    image: base.join(&v.image_path),
                    labels: base.join(l),
                    split: split.split_of(&p.patient_id).expect("pool member"),
                    rotate,
                });
            }
        }
    }
    Ok(())
}

fn slice_stem(seq: SequenceKind, patient: &str, z: usize) -> PathBuf {
    Path::new(SLICE_DIR)
        .join(patient)
        .join(format!("{}_z{z:02}", seq.file_stem()))
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run_job(job: &Job, req: &BuildRequest) -> Result<Vec<Record>> {
    let (img, _) = io::read_volume_as(&job.image, job.sequence, &job.patient_id)?;
    let (labels, _) = io::read_label_map(&job.labels, req.remap.as_ref())?;
    labels
        .check_aligned(&img)
        .map_err(|e| Error::Config(format!("{}: {e}", job.labels.display())))?;
    let base = if job.sequence.is_synthetic() {
        Provenance::Synthetic
    } else {
        Provenance::Real
    };
    let mut records = Vec::new();
    for z in 0..img.dims()[2] {
        let stem = slice_stem(job.sequence, &job.patient_id, z);
        let image_path = with_suffix(&stem, ".nii.gz");
        let label_path = with_suffix(&stem, "_labels.nii.gz");
        let slice = img.extract_slice(z)?;
        let lslice = labels.extract_slice(z)?;
        io::write_volume(&slice, req.out_dir.join(&image_path))?;
        io::write_label_map(&lslice, req.out_dir.join(&label_path))?;
        let record = |image_path: PathBuf, provenance| Record {
            image_path,
            label_path: label_path.clone(),
            sequence: job.sequence,
            provenance,
            patient_id: job.patient_id.clone(),
            split: job.split,
        };
        if !(job.rotate && req.config.include_scar_rotations) {
            records.push(record(image_path, base));
            continue;
        }
        let set = match generate_rotation_set(&img.slice(z), &labels.slice(z), &req.rotation) {
            Ok(set) => set,
            Err(Error::Degenerate(m)) => {
                warn!("{} slice {z}: no rotations ({m})", job.image.display());
                records.push(record(image_path, base));
                continue;
            }
            Err(e) => return Err(e),
        };
        if req.keep_original {
            records.push(record(image_path, base));
        }
        for (k, s) in set.iter().enumerate().skip(1) {
            let path = with_suffix(&stem, &format!("_rot{k:02}.nii.gz"));
            let v = Volume::from_slices(std::slice::from_ref(s), img.spacing()[2], job.sequence, &job.patient_id)?;
            io::write_volume(&v, req.out_dir.join(&path))?;
            records.push(record(path, Provenance::Rotated(k as u32)));
        }
    }
    Ok(records)
}

/// Slices every labeled volume of the configuration's sequences into 2D
/// NIfTI files under `out_dir/slices` and lists them. The split of each
/// sequence pool depends only on the pool and the seed, so it is shared by
/// all configurations.
pub fn build(req: &BuildRequest) -> Result<DatasetManifest> {
    req.cohort.validate()?;
    let synthetic = if req.config.include_synthetic_lge {
        let dir = req.synthetic_dir.ok_or_else(|| {
            Error::Config(format!(
                "configuration {} includes synthetic LGE and needs a synthetic directory",
                req.config.id
            ))
        })?;
        Some((read_cohort(dir.join(crate::phantom::COHORT_FILE))?, dir))
    } else {
        None
    };
    let mut jobs = Vec::new();
    for seq in [SequenceKind::Lge, SequenceKind::Bssfp, SequenceKind::T2] {
        if req.config.includes(seq) {
            pool_jobs(
                req.cohort,
                req.cohort_dir,
                seq,
                req.seed,
                seq == SequenceKind::Lge,
                &mut jobs,
            )?;
        }
    }
    if let Some((m, dir)) = &synthetic {
        let before = jobs.len();
        pool_jobs(m, dir, SequenceKind::SyntheticLge, req.seed, false, &mut jobs)?;
        if jobs.len() == before {
            return Err(Error::Config(format!(
                "{}: no labeled SyntheticLGE volumes",
                dir.display()
            )));
        }
    }
    let records = jobs
        .par_iter()
        .map(|j| run_job(j, req))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(DatasetManifest {
        config_id: req.config.id,
        seed: req.seed,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProvenanceKind {
    Real,
    Rotated,
    Synthetic,
}

impl From<Provenance> for ProvenanceKind {
    fn from(p: Provenance) -> Self {
        match p {
            Provenance::Real => ProvenanceKind::Real,
            Provenance::Rotated(_) => ProvenanceKind::Rotated,
            Provenance::Synthetic => ProvenanceKind::Synthetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sequence: SequenceKind,
    pub provenance: ProvenanceKind,
    pub split: Split,
    pub count: usize,
}

/// Record counts for every (sequence, provenance, split) combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub total: usize,
}

pub fn summarize(m: &DatasetManifest) -> Summary {
    let mut counts: BTreeMap<(SequenceKind, ProvenanceKind, Split), usize> = BTreeMap::new();
    for r in &m.records {
        *counts.entry((r.sequence, r.provenance.into(), r.split)).or_default() += 1;
    }
    let mut rows = Vec::new();
    for seq in SequenceKind::ALL {
        for prov in [ProvenanceKind::Real, ProvenanceKind::Rotated, ProvenanceKind::Synthetic] {
            for split in [Split::Train, Split::Val] {
                let count = counts.get(&(seq, prov, split)).copied().unwrap_or(0);
                rows.push(SummaryRow {
                    sequence: seq,
                    provenance: prov,
                    split,
                    count,
                });
            }
        }
    }
    Summary {
        rows,
        total: m.records.len(),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:<10} {:<6} {:>8}",
            "sequence", "provenance", "split", "count"
        )?;
        for r in &self.rows {
            let prov = serde_json::to_value(r.provenance).ok();
            let prov = prov.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
            writeln!(
                f,
                "{:<16} {:<10} {:<6} {:>8}",
                r.sequence.as_str(),
                prov,
                r.split,
                r.count
            )?;
        }
        writeln!(f, "{:<35} {:>8}", "total", self.total)
    }
}

/// Reads the image and labels of a record, relative to the manifest
/// directory.
pub fn load_record(base: &Path, r: &Record) -> Result<(Volume, LabelMap)> {
    let (v, _) = io::read_volume_as(base.join(&r.image_path), r.sequence, &r.patient_id)?;
    let (l, _) = io::read_label_map(base.join(&r.label_path), None)?;
    Ok((v, l))
}
