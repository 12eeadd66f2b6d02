//! Image containers shared by every pipeline stage.
//!
//! Axis convention: `x` is the fastest-varying index (columns), `y` indexes
//! rows and `z` short-axis slices. Data is stored flat in x-fastest order,
//! which is also the NIfTI on-disk order. Viewed on screen with x to the
//! right and y pointing down, a positive angle is a clockwise rotation.

mod ops;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ops::{
    crop_or_pad_center, crop_or_pad_labels, gaussian_blur_3x3, resample_bilinear, resample_labels_nearest,
    resampled_extent, rotate_labels, rotate_slice, Interpolation,
};

/// MR sequence a volume was acquired with (or synthesized as).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SequenceKind {
    #[serde(rename = "bSSFP")]
    Bssfp,
    #[serde(rename = "LGE")]
    Lge,
    #[serde(rename = "T2")]
    T2,
    #[serde(rename = "SyntheticLGE")]
    SyntheticLge,
    #[serde(rename = "SyntheticBSSFP")]
    SyntheticBssfp,
}

impl SequenceKind {
    pub const ALL: [SequenceKind; 5] = [
        SequenceKind::Bssfp,
        SequenceKind::Lge,
        SequenceKind::T2,
        SequenceKind::SyntheticLge,
        SequenceKind::SyntheticBssfp,
    ];

    /// Sequences acquired on the scanner.
    pub const ACQUIRED: [SequenceKind; 3] = [SequenceKind::Bssfp, SequenceKind::Lge, SequenceKind::T2];

    pub fn as_str(self) -> &'static str {
        match self {
            SequenceKind::Bssfp => "bSSFP",
            SequenceKind::Lge => "LGE",
            SequenceKind::T2 => "T2",
            SequenceKind::SyntheticLge => "SyntheticLGE",
            SequenceKind::SyntheticBssfp => "SyntheticBSSFP",
        }
    }

    /// Lower-case token used in file names.
    pub fn file_stem(self) -> &'static str {
        match self {
            SequenceKind::Bssfp => "bssfp",
            SequenceKind::Lge => "lge",
            SequenceKind::T2 => "t2",
            SequenceKind::SyntheticLge => "synthetic_lge",
            SequenceKind::SyntheticBssfp => "synthetic_bssfp",
        }
    }

    pub fn is_synthetic(self) -> bool {
        matches!(self, SequenceKind::SyntheticLge | SequenceKind::SyntheticBssfp)
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SequenceKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s) || k.file_stem() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown sequence kind `{s}`")))
    }
}

/// Internal label codes.
pub mod label {
    pub const BACKGROUND: u8 = 0;
    pub const LV: u8 = 1;
    pub const MYO: u8 = 2;
    pub const RV: u8 = 3;
    pub const MAX: u8 = RV;
}

/// The three segmented cardiac structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Structure {
    #[serde(rename = "LV")]
    Lv,
    #[serde(rename = "MYO")]
    Myo,
    #[serde(rename = "RV")]
    Rv,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::Lv, Structure::Myo, Structure::Rv];

    pub fn code(self) -> u8 {
        match self {
            Structure::Lv => label::LV,
            Structure::Myo => label::MYO,
            Structure::Rv => label::RV,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Structure::Lv => "LV",
            Structure::Myo => "MYO",
            Structure::Rv => "RV",
        }
    }
}

fn check_spacing(spacing: &[f64]) -> Result<()> {
    if spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "spacing must be finite and positive, got {spacing:?}"
        )))
    }
}

/// A single 2D plane of samples with in-plane spacing in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    data: Vec<T>,
    nx: usize,
    ny: usize,
    spacing: [f64; 2],
}

/// An intensity slice.
pub type Slice2D = Plane<f32>;
/// A label slice.
pub type LabelSlice = Plane<u8>;

impl<T: Copy> Plane<T> {
    pub fn new(data: Vec<T>, nx: usize, ny: usize, spacing: [f64; 2]) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid(format!("plane dimensions must be >= 1, got {nx}x{ny}")));
        }
        if data.len() != nx * ny {
            return Err(Error::invalid(format!(
                "plane data length {} does not match {nx}x{ny}",
                data.len()
            )));
        }
        check_spacing(&spacing)?;
        Ok(Plane { data, nx, ny, spacing })
    }

    pub fn filled(value: T, nx: usize, ny: usize, spacing: [f64; 2]) -> Result<Self> {
        Plane::new(vec![value; nx * ny], nx, ny, spacing)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[x + y * self.nx]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[x + y * self.nx] = value;
    }

    /// Applies `f` to every sample, keeping geometry.
    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Plane<U> {
        Plane {
            data: self.data.iter().map(|&v| f(v)).collect(),
            nx: self.nx,
            ny: self.ny,
            spacing: self.spacing,
        }
    }

    /// Geometric center in pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        ((self.nx as f64 - 1.0) / 2.0, (self.ny as f64 - 1.0) / 2.0)
    }
}

/// A 3D scalar image tagged with its sequence and patient.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    data: Vec<f32>,
    dims: [usize; 3],
    spacing: [f64; 3],
    sequence: SequenceKind,
    patient_id: String,
}

fn check_dims(dims: [usize; 3], len: usize) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::invalid(format!("all dimensions must be >= 1, got {dims:?}")));
    }
    let expected = dims[0] * dims[1] * dims[2];
    if expected != len {
        return Err(Error::invalid(format!(
            "data length {len} does not match dimensions {dims:?}"
        )));
    }
    Ok(())
}

impl Volume {
    pub fn new(
        data: Vec<f32>,
        dims: [usize; 3],
        spacing: [f64; 3],
        sequence: SequenceKind,
        patient_id: impl Into<String>,
    ) -> Result<Self> {
        check_dims(dims, data.len())?;
        check_spacing(&spacing)?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite voxel value at linear index {i}")));
        }
        Ok(Volume {
            data,
            dims,
            spacing,
            sequence,
            patient_id: patient_id.into(),
        })
    }

    /// Stacks equally-sized slices along z.
    pub fn from_slices(
        slices: &[Slice2D],
        slice_thickness: f64,
        sequence: SequenceKind,
        patient_id: impl Into<String>,
    ) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::invalid("cannot build a volume from zero slices"))?;
        let (nx, ny) = (first.nx(), first.ny());
        let mut data = Vec::with_capacity(nx * ny * slices.len());
        for (z, s) in slices.iter().enumerate() {
            if s.nx() != nx || s.ny() != ny {
                return Err(Error::invalid(format!(
                    "slice {z} is {}x{}, expected {nx}x{ny}",
                    s.nx(),
                    s.ny()
                )));
            }
            data.extend_from_slice(s.data());
        }
        let sp = first.spacing();
        Volume::new(
            data,
            [nx, ny, slices.len()],
            [sp[0], sp[1], slice_thickness],
            sequence,
            patient_id,
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn sequence(&self) -> SequenceKind {
        self.sequence
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[x + self.dims[0] * (y + self.dims[1] * z)]
    }

    pub fn slice(&self, z: usize) -> Slice2D {
        let n = self.dims[0] * self.dims[1];
        Plane {
            data: self.data[z * n..(z + 1) * n].to_vec(),
            nx: self.dims[0],
            ny: self.dims[1],
            spacing: [self.spacing[0], self.spacing[1]],
        }
    }

    pub fn slices(&self) -> impl Iterator<Item = Slice2D> + '_ {
        (0..self.dims[2]).map(move |z| self.slice(z))
    }

    /// Relabels the volume with another sequence kind, keeping the data.
    pub fn with_sequence(mut self, sequence: SequenceKind) -> Self {
        self.sequence = sequence;
        self
    }

    /// Replaces the voxel data, keeping geometry and metadata.
    pub fn with_data(&self, data: Vec<f32>) -> Result<Self> {
        Volume::new(data, self.dims, self.spacing, self.sequence, self.patient_id.clone())
    }

    /// Applies `f` to every slice in parallel and restacks the results.
    pub fn map_slices<F>(&self, f: F) -> Result<Volume>
    where
        F: Fn(usize, &Slice2D) -> Result<Slice2D> + Sync,
    {
        let slices = (0..self.dims[2])
            .into_par_iter()
            .map(|z| f(z, &self.slice(z)))
            .collect::<Result<Vec<_>>>()?;
        Volume::from_slices(&slices, self.spacing[2], self.sequence, self.patient_id.clone())
    }

    /// Returns a single-slice volume holding slice `z`.
    pub fn extract_slice(&self, z: usize) -> Result<Volume> {
        Volume::from_slices(
            &[self.slice(z)],
            self.spacing[2],
            self.sequence,
            self.patient_id.clone(),
        )
    }
}

/// A 3D segmentation with codes 0=background, 1=LV, 2=MYO, 3=RV.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    data: Vec<u8>,
    dims: [usize; 3],
    spacing: [f64; 3],
}

impl LabelMap {
    pub fn new(data: Vec<u8>, dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        check_dims(dims, data.len())?;
        check_spacing(&spacing)?;
        if let Some(i) = data.iter().position(|&v| v > label::MAX) {
            return Err(Error::Label(format!(
                "label value {} at linear index {i} is outside {{0,1,2,3}}",
                data[i]
            )));
        }
        Ok(LabelMap { data, dims, spacing })
    }

    /// Builds a 0/1 map from a boolean mask.
    pub fn from_mask(mask: &[bool], dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        LabelMap::new(mask.iter().map(|&m| m as u8).collect(), dims, spacing)
    }

    pub fn from_slices(slices: &[LabelSlice], slice_thickness: f64) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::invalid("cannot build a label map from zero slices"))?;
        let (nx, ny) = (first.nx(), first.ny());
        let mut data = Vec::with_capacity(nx * ny * slices.len());
        for (z, s) in slices.iter().enumerate() {
            if s.nx() != nx || s.ny() != ny {
                return Err(Error::invalid(format!(
                    "label slice {z} is {}x{}, expected {nx}x{ny}",
                    s.nx(),
                    s.ny()
                )));
            }
            data.extend_from_slice(s.data());
        }
        let sp = first.spacing();
        LabelMap::new(data, [nx, ny, slices.len()], [sp[0], sp[1], slice_thickness])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.data[x + self.dims[0] * (y + self.dims[1] * z)]
    }

    pub fn slice(&self, z: usize) -> LabelSlice {
        let n = self.dims[0] * self.dims[1];
        Plane {
            data: self.data[z * n..(z + 1) * n].to_vec(),
            nx: self.dims[0],
            ny: self.dims[1],
            spacing: [self.spacing[0], self.spacing[1]],
        }
    }

    pub fn extract_slice(&self, z: usize) -> Result<LabelMap> {
        LabelMap::from_slices(&[self.slice(z)], self.spacing[2])
    }

    /// Checks that `v` has exactly the same grid dimensions.
    pub fn check_aligned(&self, v: &Volume) -> Result<()> {
        if self.dims != v.dims() {
            return Err(Error::invalid(format!(
                "label dims {:?} do not match volume dims {:?} (patient {}, {})",
                self.dims,
                v.dims(),
                v.patient_id(),
                v.sequence()
            )));
        }
        Ok(())
    }

    /// Number of voxels carrying `code`.
    pub fn count(&self, code: u8) -> usize {
        self.data.iter().filter(|&&v| v == code).count()
    }
}
