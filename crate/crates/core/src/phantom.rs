//! Procedural multi-sequence short-axis phantoms with exactly known
//! geometry: an LV blood-pool disc, a myocardial annulus carrying a scar
//! sector, a right-ventricle crescent and a body disc, rendered for bSSFP,
//! LGE and T2 at their native in-plane resolutions.
//!
//! Geometry is specified in pixels on a reference grid (`size` pixels at
//! `reference_spacing` mm). Each sequence is rasterized by mapping its own
//! pixel centers onto that grid, so after resampling to the reference
//! spacing all three sequences line up.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{self, TissueIntensities};
use crate::dataset::{CohortManifest, CohortPatient, CohortVolume};
use crate::error::{Error, Result};
use crate::image::{label, resampled_extent, LabelMap, SequenceKind, Volume};
use crate::io;

/// Per-sequence tissue intensity table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityTable {
    pub bssfp: TissueIntensities,
    pub lge: TissueIntensities,
    pub t2: TissueIntensities,
}

impl Default for IntensityTable {
    fn default() -> Self {
        IntensityTable {
            bssfp: constants::BSSFP_INTENSITIES,
            lge: constants::LGE_INTENSITIES,
            t2: constants::T2_INTENSITIES,
        }
    }
}

impl IntensityTable {
    pub fn get(&self, seq: SequenceKind) -> &TissueIntensities {
        match seq {
            SequenceKind::Bssfp | SequenceKind::SyntheticBssfp => &self.bssfp,
            SequenceKind::Lge | SequenceKind::SyntheticLge => &self.lge,
            SequenceKind::T2 => &self.t2,
        }
    }
}

/// Smooth multiplicative field `exp(coeff_x * x̂ + coeff_y * ŷ)` with
/// x̂, ŷ ∈ [-1, 1] spanning each image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSpec {
    pub coeff_x: f64,
    pub coeff_y: f64,
}

impl BiasSpec {
    pub fn factor(&self, x: usize, y: usize, nx: usize, ny: usize) -> f64 {
        let xh = if nx > 1 {
            2.0 * x as f64 / (nx - 1) as f64 - 1.0
        } else {
            0.0
        };
        let yh = if ny > 1 {
            2.0 * y as f64 / (ny - 1) as f64 - 1.0
        } else {
            0.0
        };
        (self.coeff_x * xh + self.coeff_y * yh).exp()
    }
}

/// Per-sequence integer triple (slice counts).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerSequence<T> {
    pub bssfp: T,
    pub lge: T,
    pub t2: T,
}

impl<T: Copy> PerSequence<T> {
    pub fn get(&self, seq: SequenceKind) -> T {
        match seq {
            SequenceKind::Bssfp | SequenceKind::SyntheticBssfp => self.bssfp,
            SequenceKind::Lge | SequenceKind::SyntheticLge => self.lge,
            SequenceKind::T2 => self.t2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub patient_id: String,
    /// Reference grid size in pixels.
    pub size: (usize, usize),
    pub reference_spacing: f64,
    /// Render each sequence at its native in-plane spacing; otherwise all
    /// sequences use the reference grid.
    pub native_resolution: bool,
    pub r_lv: f64,
    pub r_epi: f64,
    pub r_rv: f64,
    /// Distance from LV center to RV disc center.
    pub rv_offset: f64,
    /// Direction of the RV center, degrees clockwise from +x.
    pub rv_angle_deg: f64,
    pub body_radius: f64,
    /// Scar sector start, degrees clockwise from +x (screen, y down).
    pub scar_start_deg: f64,
    pub scar_extent_deg: f64,
    pub intensities: IntensityTable,
    pub noise_sigma: f64,
    pub bias: Option<BiasSpec>,
    pub slices: PerSequence<usize>,
    pub slice_thickness: PerSequence<f64>,
    /// Fractional shrink of all radii from the first to the last slice.
    pub apex_taper: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            patient_id: "P001".into(),
            size: constants::TARGET_SIZE,
            reference_spacing: constants::TARGET_SPACING.0,
            native_resolution: false,
            r_lv: 20.0,
            r_epi: 30.0,
            r_rv: 26.0,
            rv_offset: 44.0,
            rv_angle_deg: 180.0,
            body_radius: 108.0,
            scar_start_deg: 0.0,
            scar_extent_deg: 60.0,
            intensities: IntensityTable::default(),
            noise_sigma: 0.0,
            bias: None,
            slices: PerSequence {
                bssfp: 10,
                lge: 12,
                t2: 5,
            },
            slice_thickness: PerSequence {
                bssfp: 10.0,
                lge: 5.0,
                t2: 15.0,
            },
            apex_taper: 0.0,
            seed: 0,
        }
    }
}

/// Tissue classes rendered by the phantom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tissue {
    Air,
    Body,
    Lv,
    Myo,
    Scar,
    Rv,
}

impl Tissue {
    pub fn label(self) -> u8 {
        match self {
            Tissue::Air | Tissue::Body => label::BACKGROUND,
            Tissue::Lv => label::LV,
            Tissue::Myo | Tissue::Scar => label::MYO,
            Tissue::Rv => label::RV,
        }
    }

    fn intensity(self, t: &TissueIntensities) -> f32 {
        match self {
            Tissue::Air => 0.0,
            Tissue::Body => t.body,
            Tissue::Lv => t.lv,
            Tissue::Myo => t.myo,
            Tissue::Scar => t.scar,
            Tissue::Rv => t.rv,
        }
    }
}

/// Angle of (dx, dy) in degrees clockwise from +x on screen, in [0, 360).
pub fn screen_angle_deg(dx: f64, dy: f64) -> f64 {
    dy.atan2(dx).to_degrees().rem_euclid(360.0)
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let half = self.size.0.min(self.size.1) as f64 / 2.0;
        let bad = |msg: String| Err(Error::invalid(format!("phantom {}: {msg}", self.patient_id)));
        if self.size.0 == 0 || self.size.1 == 0 {
            return bad(format!("image size {:?} must be positive", self.size));
        }
        if !(self.r_lv > 0.0 && self.r_lv < self.r_epi && self.r_epi < half) {
            return bad(format!(
                "need 0 < r_lv ({}) < r_epi ({}) < min(size)/2 ({half})",
                self.r_lv, self.r_epi
            ));
        }
        if !(self.scar_extent_deg > 0.0 && self.scar_extent_deg <= 180.0) {
            return bad(format!("scar extent {} outside (0, 180]", self.scar_extent_deg));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {} must be >= 0", self.noise_sigma));
        }
        if !(self.reference_spacing > 0.0 && self.r_rv >= 0.0 && self.body_radius >= 0.0) {
            return bad("spacing must be positive and radii non-negative".into());
        }
        if !(0.0..1.0).contains(&self.apex_taper) {
            return bad(format!("apex taper {} outside [0, 1)", self.apex_taper));
        }
        for seq in SequenceKind::ACQUIRED {
            if self.slices.get(seq) == 0 || !(self.slice_thickness.get(seq) > 0.0) {
                return bad(format!("{seq}: slice count and thickness must be positive"));
            }
        }
        Ok(())
    }

    /// Reference-grid center of the LV (an integer pixel, so discs are
    /// symmetric).
    pub fn center(&self) -> (f64, f64) {
        ((self.size.0 / 2) as f64, (self.size.1 / 2) as f64)
    }

    pub fn native_spacing(&self, seq: SequenceKind) -> f64 {
        if self.native_resolution {
            constants::in_plane_spacing(seq)
        } else {
            self.reference_spacing
        }
    }

    pub fn native_size(&self, seq: SequenceKind) -> (usize, usize) {
        let s = self.native_spacing(seq);
        (
            resampled_extent(self.size.0, self.reference_spacing, s),
            resampled_extent(self.size.1, self.reference_spacing, s),
        )
    }

    fn taper(&self, z: usize, nz: usize) -> f64 {
        if nz <= 1 {
            1.0
        } else {
            1.0 - self.apex_taper * z as f64 / (nz - 1) as f64
        }
    }

    /// Tissue at reference-grid coordinate (u, v) on a slice with radius
    /// scale `f`.
    pub fn tissue_at(&self, u: f64, v: f64, f: f64) -> Tissue {
        let (cx, cy) = self.center();
        let (dx, dy) = (u - cx, v - cy);
        let d = dx.hypot(dy);
        if d <= self.r_lv * f {
            return Tissue::Lv;
        }
        if d <= self.r_epi * f {
            let rel = (screen_angle_deg(dx, dy) - self.scar_start_deg).rem_euclid(360.0);
            return if rel <= self.scar_extent_deg {
                Tissue::Scar
            } else {
                Tissue::Myo
            };
        }
        let a = self.rv_angle_deg.to_radians();
        let (rx, ry) = (cx + self.rv_offset * f * a.cos(), cy + self.rv_offset * f * a.sin());
        if (u - rx).hypot(v - ry) <= self.r_rv * f {
            return Tissue::Rv;
        }
        if d <= self.body_radius {
            Tissue::Body
        } else {
            Tissue::Air
        }
    }

    fn render_sequence(&self, seq: SequenceKind) -> Result<(Volume, LabelMap, LabelMap)> {
        let (nx, ny) = self.native_size(seq);
        let nz = self.slices.get(seq);
        let scale = self.native_spacing(seq) / self.reference_spacing;
        let table = self.intensities.get(seq);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(seq as u64 + 1);
        let noise = Normal::new(0.0, self.noise_sigma.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::invalid(format!("noise: {e}")))?;

        let n = nx * ny * nz;
        let mut data = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut scar = Vec::with_capacity(n);
        for z in 0..nz {
            let f = self.taper(z, nz);
            for y in 0..ny {
                let v = (y as f64 + 0.5) * scale - 0.5;
                for x in 0..nx {
                    let u = (x as f64 + 0.5) * scale - 0.5;
                    let t = self.tissue_at(u, v, f);
                    let mut value = t.intensity(table) as f64;
                    if let Some(b) = &self.bias {
                        value *= b.factor(x, y, nx, ny);
                    }
                    if self.noise_sigma > 0.0 {
                        value += noise.sample(&mut rng);
                    }
                    data.push(value as f32);
                    labels.push(t.label());
                    scar.push((t == Tissue::Scar) as u8);
                }
            }
        }
        let spacing = [
            self.native_spacing(seq),
            self.native_spacing(seq),
            self.slice_thickness.get(seq),
        ];
        Ok((
            Volume::new(data, [nx, ny, nz], spacing, seq, self.patient_id.clone())?,
            LabelMap::new(labels, [nx, ny, nz], spacing)?,
            LabelMap::new(scar, [nx, ny, nz], spacing)?,
        ))
    }
}

/// One sequence of a phantom patient.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomImage {
    pub volume: Volume,
    pub labels: LabelMap,
}

/// All three sequences of a phantom patient plus the LGE scar mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomPatient {
    pub patient_id: String,
    pub bssfp: PhantomImage,
    pub lge: PhantomImage,
    pub t2: PhantomImage,
    /// 1 where the LGE myocardium is scarred, on the LGE grid.
    pub scar_mask: LabelMap,
}

impl PhantomPatient {
    pub fn image(&self, seq: SequenceKind) -> &PhantomImage {
        match seq {
            SequenceKind::Bssfp | SequenceKind::SyntheticBssfp => &self.bssfp,
            SequenceKind::Lge | SequenceKind::SyntheticLge => &self.lge,
            SequenceKind::T2 => &self.t2,
        }
    }
}

/// Renders all sequences of one patient. Deterministic in `spec.seed`.
pub fn generate_patient(spec: &PhantomSpec) -> Result<PhantomPatient> {
    spec.validate()?;
    let (b, bl, _) = spec.render_sequence(SequenceKind::Bssfp)?;
    let (l, ll, scar) = spec.render_sequence(SequenceKind::Lge)?;
    let (t, tl, _) = spec.render_sequence(SequenceKind::T2)?;
    Ok(PhantomPatient {
        patient_id: spec.patient_id.clone(),
        bssfp: PhantomImage { volume: b, labels: bl },
        lge: PhantomImage { volume: l, labels: ll },
        t2: PhantomImage { volume: t, labels: tl },
        scar_mask: scar,
    })
}

/// Knobs shared by every patient of a generated cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortOptions {
    pub size: (usize, usize),
    pub native_resolution: bool,
    pub noise_sigma: f64,
    /// Maximum |coefficient| of a random linear log-bias; 0 disables bias.
    pub bias_strength: f64,
    /// Patients carrying ground truth, per sequence (clamped to the cohort
    /// size).
    pub labeled: PerSequence<usize>,
}

impl Default for CohortOptions {
    fn default() -> Self {
        CohortOptions {
            size: constants::TARGET_SIZE,
            native_resolution: true,
            noise_sigma: 0.02,
            bias_strength: 0.0,
            labeled: PerSequence {
                bssfp: constants::segmented_patients(SequenceKind::Bssfp),
                lge: constants::segmented_patients(SequenceKind::Lge),
                t2: constants::segmented_patients(SequenceKind::T2),
            },
        }
    }
}

/// A cohort member: its phantom parameters and which sequences carry labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRecord {
    pub spec: PhantomSpec,
    pub labeled: PerSequence<bool>,
}

fn uniform_usize(rng: &mut ChaCha8Rng, r: std::ops::RangeInclusive<usize>) -> usize {
    rng.random_range(r)
}

/// Draws `n` patients with randomized geometry, scar placement and
/// per-sequence slice counts/thicknesses within the acquisition ranges.
pub fn generate_cohort(n: usize, base_seed: u64, opts: &CohortOptions) -> Result<Vec<CohortRecord>> {
    if n == 0 {
        return Err(Error::invalid("cohort needs at least one patient"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    let s = opts.size.0.min(opts.size.1) as f64;
    let mut records: Vec<CohortRecord> = (0..n)
        .map(|i| {
            let r_lv = s * rng.random_range(0.07..0.10);
            let wall = s * rng.random_range(0.035..0.05);
            let r_epi = r_lv + wall;
            let r_rv = r_lv * rng.random_range(1.0..1.3);
            let slices = PerSequence {
                bssfp: uniform_usize(&mut rng, constants::slice_count_range(SequenceKind::Bssfp)),
                lge: uniform_usize(&mut rng, constants::slice_count_range(SequenceKind::Lge)),
                t2: uniform_usize(&mut rng, constants::slice_count_range(SequenceKind::T2)),
            };
            let thick = |rng: &mut ChaCha8Rng, seq| rng.random_range(constants::slice_thickness_range(seq)) as f64;
            let slice_thickness = PerSequence {
                bssfp: thick(&mut rng, SequenceKind::Bssfp),
                lge: thick(&mut rng, SequenceKind::Lge),
                t2: thick(&mut rng, SequenceKind::T2),
            };
            let bias = (opts.bias_strength > 0.0).then(|| BiasSpec {
                coeff_x: rng.random_range(-opts.bias_strength..=opts.bias_strength),
                coeff_y: rng.random_range(-opts.bias_strength..=opts.bias_strength),
            });
            CohortRecord {
                spec: PhantomSpec {
                    patient_id: format!("P{:03}", i + 1),
                    size: opts.size,
                    reference_spacing: constants::TARGET_SPACING.0,
                    native_resolution: opts.native_resolution,
                    r_lv,
                    r_epi,
                    r_rv,
                    rv_offset: r_epi + 0.55 * r_rv,
                    rv_angle_deg: rng.random_range(160.0..200.0),
                    body_radius: 0.42 * s,
                    scar_start_deg: rng.random_range(0.0..360.0),
                    scar_extent_deg: rng.random_range(30.0..120.0),
                    intensities: IntensityTable::default(),
                    noise_sigma: opts.noise_sigma,
                    bias,
                    slices,
                    slice_thickness,
                    apex_taper: rng.random_range(0.1..0.3),
                    seed: rng.random(),
                },
                labeled: PerSequence {
                    bssfp: false,
                    lge: false,
                    t2: false,
                },
            }
        })
        .collect();

    // Labeled subsets are nested: the LGE-labeled patients are the first of
    // one seeded ordering, the bSSFP/T2-labeled ones a longer prefix.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for (rank, &i) in order.iter().enumerate() {
        records[i].labeled = PerSequence {
            bssfp: rank < opts.labeled.bssfp,
            lge: rank < opts.labeled.lge,
            t2: rank < opts.labeled.t2,
        };
    }
    Ok(records)
}

/// File name of a sequence volume inside a patient directory.
pub fn volume_file(seq: SequenceKind) -> String {
    format!("{}.nii.gz", seq.file_stem())
}

pub fn labels_file(seq: SequenceKind) -> String {
    format!("{}_labels.nii.gz", seq.file_stem())
}

pub const SCAR_FILE: &str = "lge_scar.nii.gz";
pub const COHORT_FILE: &str = "cohort.json";

/// Renders and writes a cohort under `out_dir` (one sub-directory per
/// patient) and writes `cohort.json`. Label files are written for every
/// sequence; the manifest only references those marked as labeled.
pub fn write_cohort(records: &[CohortRecord], base_seed: u64, out_dir: &Path) -> Result<CohortManifest> {
    let patients = records
        .par_iter()
        .map(|rec| {
            let p = generate_patient(&rec.spec)?;
            let dir = PathBuf::from(&p.patient_id);
            let mut volumes = Vec::new();
            for seq in SequenceKind::ACQUIRED {
                let img = p.image(seq);
                let vpath = dir.join(volume_file(seq));
                let lpath = dir.join(labels_file(seq));
                io::write_volume(&img.volume, out_dir.join(&vpath))?;
                io::write_label_map(&img.labels, out_dir.join(&lpath))?;
                volumes.push(CohortVolume {
                    sequence: seq,
                    image_path: vpath,
                    label_path: rec.labeled.get(seq).then_some(lpath),
                });
            }
            io::write_label_map(&p.scar_mask, out_dir.join(dir.join(SCAR_FILE)))?;
            Ok(CohortPatient {
                patient_id: p.patient_id,
                volumes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = CohortManifest {
        seed: base_seed,
        patients,
    };
    io::write_json(&manifest, out_dir.join(COHORT_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_tissue_values_are_exact() {
        let spec = PhantomSpec::default();
        let p = generate_patient(&spec).unwrap();
        for seq in SequenceKind::ACQUIRED {
            let img = p.image(seq);
            let lv = spec.intensities.get(seq).lv;
            let n = img
                .labels
                .data()
                .iter()
                .zip(img.volume.data())
                .filter(|(&l, _)| l == label::LV)
                .map(|(_, &v)| assert_eq!(v, lv))
                .count();
            assert!(n > 1000);
        }
    }

    #[test]
    fn scar_lies_in_myocardium_within_sector() {
        let spec = PhantomSpec {
            scar_start_deg: 0.0,
            scar_extent_deg: 45.0,
            ..Default::default()
        };
        let p = generate_patient(&spec).unwrap();
        let (cx, cy) = spec.center();
        let [nx, ny, nz] = p.scar_mask.dims();
        let mut count = 0;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if p.scar_mask.get(x, y, z) == 0 {
                        continue;
                    }
                    count += 1;
                    assert_eq!(p.lge.labels.get(x, y, z), label::MYO);
                    // Within the angular window up to one pixel of arc.
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    let a = screen_angle_deg(dx, dy);
                    let slack = (1.0 / dx.hypot(dy)).to_degrees();
                    let outside = if a > 180.0 { 360.0 - a } else { (a - 45.0).max(0.0) };
                    assert!(outside <= slack, "({x},{y}) angle {a}");
                }
            }
        }
        assert!(count > 0);
    }

    #[test]
    fn same_seed_same_volumes() {
        let spec = PhantomSpec {
            noise_sigma: 0.05,
            seed: 9,
            native_resolution: true,
            ..Default::default()
        };
        assert_eq!(generate_patient(&spec).unwrap(), generate_patient(&spec).unwrap());
        let other = PhantomSpec {
            seed: 10,
            ..spec.clone()
        };
        assert_ne!(
            generate_patient(&spec).unwrap().lge.volume,
            generate_patient(&other).unwrap().lge.volume
        );
    }

    #[test]
    fn native_grids_follow_acquisition_spacing() {
        let spec = PhantomSpec {
            native_resolution: true,
            ..Default::default()
        };
        let p = generate_patient(&spec).unwrap();
        assert_eq!(p.lge.volume.dims()[..2], [427, 427]);
        assert_eq!(p.lge.volume.spacing()[0], 0.75);
        assert_eq!(p.t2.volume.dims()[..2], [237, 237]);
        assert_eq!(p.bssfp.volume.dims()[..2], [256, 256]);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        for spec in [
            PhantomSpec {
                r_lv: 30.0,
                r_epi: 20.0,
                ..Default::default()
            },
            PhantomSpec {
                r_epi: 200.0,
                ..Default::default()
            },
            PhantomSpec {
                scar_extent_deg: 0.0,
                ..Default::default()
            },
            PhantomSpec {
                scar_extent_deg: 190.0,
                ..Default::default()
            },
            PhantomSpec {
                noise_sigma: -1.0,
                ..Default::default()
            },
        ] {
            assert!(generate_patient(&spec).is_err());
        }
    }

    #[test]
    fn labels_partition_and_scar_inside_myo() {
        let rec = &generate_cohort(
            3,
            4,
            &CohortOptions {
                size: (96, 96),
                ..Default::default()
            },
        )
        .unwrap()[2];
        let p = generate_patient(&rec.spec).unwrap();
        for (&s, &l) in p.scar_mask.data().iter().zip(p.lge.labels.data()) {
            assert!(l <= label::MAX);
            assert!(s == 0 || l == label::MYO);
        }
    }

    #[test]
    fn cohort_follows_acquisition_ranges() {
        let cohort = generate_cohort(45, 11, &CohortOptions::default()).unwrap();
        assert_eq!(cohort.len(), 45);
        let mut ids: Vec<_> = cohort.iter().map(|r| r.spec.patient_id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 45);
        for r in &cohort {
            assert!((10..=18).contains(&r.spec.slices.lge));
            assert!((8..=12).contains(&r.spec.slices.bssfp));
            assert!((3..=7).contains(&r.spec.slices.t2));
            r.spec.validate().unwrap();
            // LGE-labeled patients are also labeled in bSSFP and T2.
            assert!(!r.labeled.lge || (r.labeled.bssfp && r.labeled.t2));
        }
        let count = |f: fn(&CohortRecord) -> bool| cohort.iter().filter(|r| f(r)).count();
        assert_eq!(count(|r| r.labeled.lge), 5);
        assert_eq!(count(|r| r.labeled.bssfp), 35);
        assert_eq!(count(|r| r.labeled.t2), 35);
        assert_eq!(cohort, generate_cohort(45, 11, &CohortOptions::default()).unwrap());
    }
}
