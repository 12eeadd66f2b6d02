//! Acquisition parameters of the three cine/LGE/T2 sequences and the
//! default tissue intensities used by the phantom generator. Tests cite
//! these values rather than repeating literals.

use std::ops::RangeInclusive;

use crate::image::SequenceKind;

/// Patients in the multi-sequence cohort.
pub const COHORT_PATIENTS: usize = 45;

/// Native in-plane resolution (mm) per sequence.
pub fn in_plane_spacing(seq: SequenceKind) -> f64 {
    match seq {
        SequenceKind::Bssfp | SequenceKind::SyntheticBssfp => 1.25,
        SequenceKind::Lge | SequenceKind::SyntheticLge => 0.75,
        SequenceKind::T2 => 1.35,
    }
}

/// Number of short-axis slices per volume.
pub fn slice_count_range(seq: SequenceKind) -> RangeInclusive<usize> {
    match seq {
        SequenceKind::Bssfp | SequenceKind::SyntheticBssfp => 8..=12,
        SequenceKind::Lge | SequenceKind::SyntheticLge => 10..=18,
        SequenceKind::T2 => 3..=7,
    }
}

/// Slice thickness (mm).
pub fn slice_thickness_range(seq: SequenceKind) -> RangeInclusive<u32> {
    match seq {
        SequenceKind::Bssfp | SequenceKind::SyntheticBssfp => 8..=13,
        SequenceKind::Lge | SequenceKind::SyntheticLge => 5..=5,
        SequenceKind::T2 => 12..=20,
    }
}

/// Patients with ground-truth segmentations per sequence.
pub fn segmented_patients(seq: SequenceKind) -> usize {
    match seq {
        SequenceKind::Bssfp | SequenceKind::T2 => 35,
        SequenceKind::Lge => 5,
        SequenceKind::SyntheticLge | SequenceKind::SyntheticBssfp => 0,
    }
}

/// Common in-plane grid after geometric standardization.
pub const TARGET_SPACING: (f64, f64) = (1.25, 1.25);
pub const TARGET_SIZE: (usize, usize) = (256, 256);

/// Mean and standard deviation after intensity normalization.
pub const NORMALIZED_MEAN: f64 = 0.5;
pub const NORMALIZED_STD: f64 = 0.5;

/// Scar rotation augmentation: twenty steps of 7.2 degrees (144 in total).
pub const ROTATION_STEP_DEG: f64 = 7.2;
pub const ROTATION_COUNT: usize = 20;

/// Bound of the uniform on-the-fly global rotation.
pub const GLOBAL_ROTATION_MAX_DEG: f64 = 15.0;

/// Landmarks placed on each of the epicardial and endocardial contours.
pub const LANDMARKS_PER_CONTOUR: usize = 50;

/// Fraction of each patient pool held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.2;

/// Phantom tissue intensities for one sequence. Air is always 0.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TissueIntensities {
    pub body: f32,
    pub lv: f32,
    pub myo: f32,
    pub scar: f32,
    pub rv: f32,
}

/// LGE: nulled (dark) myocardium, bright scar, mid-grey blood pool.
pub const LGE_INTENSITIES: TissueIntensities = TissueIntensities {
    body: 0.35,
    lv: 0.55,
    myo: 0.10,
    scar: 0.95,
    rv: 0.50,
};

/// bSSFP: bright blood, mid-grey myocardium, scar invisible.
pub const BSSFP_INTENSITIES: TissueIntensities = TissueIntensities {
    body: 0.35,
    lv: 0.90,
    myo: 0.30,
    scar: 0.30,
    rv: 0.85,
};

/// T2-weighted: dark-ish blood, slightly hyperintense (oedematous) scar.
pub const T2_INTENSITIES: TissueIntensities = TissueIntensities {
    body: 0.40,
    lv: 0.25,
    myo: 0.45,
    scar: 0.60,
    rv: 0.25,
};

pub fn default_intensities(seq: SequenceKind) -> TissueIntensities {
    match seq {
        SequenceKind::Bssfp | SequenceKind::SyntheticBssfp => BSSFP_INTENSITIES,
        SequenceKind::Lge | SequenceKind::SyntheticLge => LGE_INTENSITIES,
        SequenceKind::T2 => T2_INTENSITIES,
    }
}
