//! Single-file NIfTI-1 (`.nii`, `.nii.gz`) reading and writing.
//!
//! Only datatypes 2 (uint8), 4 (int16) and 16 (float32) are accepted.
//! Orientation fields (qform/sform) are ignored; spacing comes from
//! `pixdim[1..=3]`. Files are written little-endian with `vox_offset = 352`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{label, LabelMap, SequenceKind, Volume};

pub const HEADER_SIZE: usize = 348;
pub const DEFAULT_VOX_OFFSET: usize = 352;
pub const MAGIC: &[u8; 4] = b"n+1\0";

const DESCRIP_TAG: &str = "cmr-forge";

mod offset {
    pub const SIZEOF_HDR: usize = 0;
    pub const REGULAR: usize = 38;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const DESCRIP: usize = 148;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    UInt8,
    Int16,
    Float32,
}

impl DataType {
    pub fn code(self) -> i16 {
        match self {
            DataType::UInt8 => 2,
            DataType::Int16 => 4,
            DataType::Float32 => 16,
        }
    }

    pub fn from_code(code: i16) -> Option<Self> {
        match code {
            2 => Some(DataType::UInt8),
            4 => Some(DataType::Int16),
            16 => Some(DataType::Float32),
            _ => None,
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            DataType::UInt8 => 1,
            DataType::Int16 => 2,
            DataType::Float32 => 4,
        }
    }
}

/// The subset of the 348-byte NIfTI-1 header this crate interprets.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub dim: [i16; 8],
    pub datatype: DataType,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub xyzt_units: u8,
    pub descrip: String,
    pub endianness: Endianness,
}

impl NiftiHeader {
    /// First three grid dimensions; missing ones count as 1.
    pub fn dims3(&self) -> [usize; 3] {
        let n = self.dim[0] as usize;
        std::array::from_fn(|i| if i < n { self.dim[i + 1] as usize } else { 1 })
    }

    pub fn spacing3(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.pixdim[i + 1] as f64)
    }

    /// Number of voxels over all declared dimensions.
    pub fn voxel_count(&self) -> usize {
        (1..=self.dim[0] as usize).map(|i| self.dim[i] as usize).product()
    }

    /// Sequence and patient recorded by [`write_volume`], if present.
    pub fn tagged_metadata(&self) -> Option<(SequenceKind, String)> {
        let mut fields = self.descrip.split(';');
        if fields.next()? != DESCRIP_TAG {
            return None;
        }
        let (mut seq, mut patient) = (None, None);
        for f in fields {
            match f.split_once('=') {
                Some(("seq", v)) => seq = v.parse().ok(),
                Some(("patient", v)) => patient = Some(v.to_owned()),
                _ => {}
            }
        }
        Some((seq?, patient?))
    }
}

/// Decoded file contents: header plus scaled voxel values in file order.
#[derive(Debug, Clone)]
pub struct NiftiImage {
    pub header: NiftiHeader,
    pub values: Vec<f32>,
}

fn parse_err(path: &Path, field: &'static str, offset: usize, reason: impl Into<String>) -> Error {
    Error::NiftiParse {
        path: path.to_path_buf(),
        field,
        offset,
        reason: reason.into(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    order: Endianness,
}

impl Reader<'_> {
    fn i16(&self, at: usize) -> i16 {
        match self.order {
            Endianness::Little => LittleEndian::read_i16(&self.bytes[at..]),
            Endianness::Big => BigEndian::read_i16(&self.bytes[at..]),
        }
    }

    fn f32(&self, at: usize) -> f32 {
        match self.order {
            Endianness::Little => LittleEndian::read_f32(&self.bytes[at..]),
            Endianness::Big => BigEndian::read_f32(&self.bytes[at..]),
        }
    }
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<NiftiHeader> {
    if bytes.len() < HEADER_SIZE {
        return Err(parse_err(
            path,
            "sizeof_hdr",
            offset::SIZEOF_HDR,
            format!("file is {} bytes, shorter than the 348-byte header", bytes.len()),
        ));
    }
    let order = if LittleEndian::read_i32(bytes) == HEADER_SIZE as i32 {
        Endianness::Little
    } else if BigEndian::read_i32(bytes) == HEADER_SIZE as i32 {
        Endianness::Big
    } else {
        return Err(parse_err(
            path,
            "sizeof_hdr",
            offset::SIZEOF_HDR,
            "expected 348 in either byte order",
        ));
    };
    let r = Reader { bytes, order };

    let magic = &bytes[offset::MAGIC..offset::MAGIC + 4];
    if magic != MAGIC {
        return Err(parse_err(
            path,
            "magic",
            offset::MAGIC,
            format!("expected \"n+1\\0\" (single-file NIfTI-1), found {magic:?}"),
        ));
    }

    let dim: [i16; 8] = std::array::from_fn(|i| r.i16(offset::DIM + 2 * i));
    if !(1..=7).contains(&dim[0]) {
        return Err(parse_err(
            path,
            "dim[0]",
            offset::DIM,
            format!("number of dimensions {} outside [1, 7]", dim[0]),
        ));
    }
    for i in 1..=dim[0] as usize {
        if dim[i] < 1 {
            return Err(parse_err(
                path,
                "dim",
                offset::DIM + 2 * i,
                format!("dim[{i}] = {} must be >= 1", dim[i]),
            ));
        }
    }

    let code = r.i16(offset::DATATYPE);
    let datatype = DataType::from_code(code).ok_or_else(|| Error::UnsupportedDatatype {
        path: path.to_path_buf(),
        code,
    })?;
    let bitpix = r.i16(offset::BITPIX);
    if bitpix as usize != datatype.bytes() * 8 {
        return Err(parse_err(
            path,
            "bitpix",
            offset::BITPIX,
            format!("bitpix {bitpix} inconsistent with datatype code {code}"),
        ));
    }

    let pixdim: [f32; 8] = std::array::from_fn(|i| r.f32(offset::PIXDIM + 4 * i));
    for (i, p) in pixdim.iter().enumerate().take(4).skip(1) {
        if !(p.is_finite() && *p > 0.0) {
            return Err(parse_err(
                path,
                "pixdim",
                offset::PIXDIM + 4 * i,
                format!("pixdim[{i}] = {p} must be finite and positive"),
            ));
        }
    }

    let vox_offset = r.f32(offset::VOX_OFFSET);
    if !(vox_offset >= DEFAULT_VOX_OFFSET as f32 && vox_offset.fract() == 0.0) {
        return Err(parse_err(
            path,
            "vox_offset",
            offset::VOX_OFFSET,
            format!("vox_offset {vox_offset} must be an integer >= 352"),
        ));
    }

    let descrip_raw = &bytes[offset::DESCRIP..offset::DESCRIP + 80];
    let end = descrip_raw.iter().position(|&b| b == 0).unwrap_or(80);
    let descrip = String::from_utf8_lossy(&descrip_raw[..end]).into_owned();

    Ok(NiftiHeader {
        dim,
        datatype,
        bitpix,
        pixdim,
        vox_offset,
        scl_slope: r.f32(offset::SCL_SLOPE),
        scl_inter: r.f32(offset::SCL_INTER),
        xyzt_units: bytes[offset::XYZT_UNITS],
        descrip,
        endianness: order,
    })
}

/// Decodes an uncompressed single-file NIfTI-1 byte stream. `path` is used
/// for error messages only.
pub fn decode(bytes: &[u8], path: &Path) -> Result<NiftiImage> {
    let header = parse_header(bytes, path)?;
    let start = header.vox_offset as usize;
    let count = header.voxel_count();
    let declared = count * header.datatype.bytes();
    let available = bytes.len().saturating_sub(start);
    if available < declared {
        return Err(Error::TruncatedData {
            path: path.to_path_buf(),
            offset: start,
            expected: declared,
            found: available,
        });
    }
    if available > declared {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            offset: start,
            declared,
            actual: available,
        });
    }
    let raw = &bytes[start..];
    let r = Reader {
        bytes: raw,
        order: header.endianness,
    };
    let mut values: Vec<f32> = match header.datatype {
        DataType::UInt8 => raw.iter().map(|&b| b as f32).collect(),
        DataType::Int16 => (0..count).map(|i| r.i16(2 * i) as f32).collect(),
        DataType::Float32 => (0..count).map(|i| r.f32(4 * i)).collect(),
    };
    let slope = header.scl_slope;
    if slope.is_finite() && slope != 0.0 {
        let inter = if header.scl_inter.is_finite() {
            header.scl_inter
        } else {
            0.0
        };
        for v in &mut values {
            *v = *v * slope + inter;
        }
    }
    Ok(NiftiImage { header, values })
}

fn load_bytes(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::with_capacity(bytes.len() * 4);
        GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Reads a `.nii` or `.nii.gz` file (gzip detected from the stream magic).
pub fn read_nifti(path: impl AsRef<Path>) -> Result<NiftiImage> {
    let path = path.as_ref();
    decode(&load_bytes(path)?, path)
}

impl NiftiImage {
    /// The first 3D frame of the image as scaled values.
    fn first_frame(&self) -> (&[f32], [usize; 3]) {
        let dims = self.header.dims3();
        let n = dims.iter().product::<usize>();
        if n < self.values.len() {
            log::warn!(
                "image has {} dimensions; using the first 3D frame only",
                self.header.dim[0]
            );
        }
        (&self.values[..n], dims)
    }

    pub fn to_volume(&self, sequence: SequenceKind, patient_id: impl Into<String>) -> Result<Volume> {
        let (data, dims) = self.first_frame();
        Volume::new(data.to_vec(), dims, self.header.spacing3(), sequence, patient_id)
    }

    pub fn to_label_map(&self, remap: Option<&LabelRemap>) -> Result<LabelMap> {
        let (data, dims) = self.first_frame();
        let codes = data
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v.fract() != 0.0 || !v.is_finite() {
                    return Err(Error::Label(format!("non-integer label value {v} at linear index {i}")));
                }
                match remap {
                    Some(m) => m.apply(v as i64),
                    None if (0.0..=label::MAX as f32).contains(&v) => Ok(v as u8),
                    None => Err(Error::Label(format!(
                        "label value {v} at linear index {i} outside {{0,1,2,3}}; supply a label remap"
                    ))),
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        LabelMap::new(codes, dims, self.header.spacing3())
    }
}

/// Reads a volume whose sequence and patient were recorded by [`write_volume`].
pub fn read_volume(path: impl AsRef<Path>) -> Result<(Volume, NiftiHeader)> {
    let path = path.as_ref();
    let img = read_nifti(path)?;
    let (seq, patient) = img.header.tagged_metadata().ok_or_else(|| {
        parse_err(
            path,
            "descrip",
            offset::DESCRIP,
            "no sequence/patient tag; use read_volume_as",
        )
    })?;
    Ok((img.to_volume(seq, patient)?, img.header))
}

/// Reads a volume, supplying sequence and patient explicitly.
pub fn read_volume_as(
    path: impl AsRef<Path>,
    sequence: SequenceKind,
    patient_id: &str,
) -> Result<(Volume, NiftiHeader)> {
    let img = read_nifti(path)?;
    Ok((img.to_volume(sequence, patient_id)?, img.header))
}

pub fn read_label_map(path: impl AsRef<Path>, remap: Option<&LabelRemap>) -> Result<(LabelMap, NiftiHeader)> {
    let path = path.as_ref();
    let img = read_nifti(path)?;
    let labels = img.to_label_map(remap).map_err(|e| match e {
        Error::Label(msg) => Error::Label(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok((labels, img.header))
}

fn encode(
    dims: [usize; 3],
    spacing: [f64; 3],
    datatype: DataType,
    descrip: &str,
    payload: impl FnOnce(&mut Vec<u8>),
) -> Result<Vec<u8>> {
    if dims.iter().any(|&d| d > i16::MAX as usize) {
        return Err(Error::invalid(format!(
            "dimensions {dims:?} exceed the NIfTI-1 limit of 32767"
        )));
    }
    let mut h = vec![0u8; DEFAULT_VOX_OFFSET];
    LittleEndian::write_i32(&mut h[offset::SIZEOF_HDR..], HEADER_SIZE as i32);
    h[offset::REGULAR] = b'r';
    let dim = [3, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut h[offset::DIM + 2 * i..], *d);
    }
    LittleEndian::write_i16(&mut h[offset::DATATYPE..], datatype.code());
    LittleEndian::write_i16(&mut h[offset::BITPIX..], (datatype.bytes() * 8) as i16);
    let pixdim = [
        1.0,
        spacing[0] as f32,
        spacing[1] as f32,
        spacing[2] as f32,
        0.0,
        0.0,
        0.0,
        0.0,
    ];
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut h[offset::PIXDIM + 4 * i..], *p);
    }
    LittleEndian::write_f32(&mut h[offset::VOX_OFFSET..], DEFAULT_VOX_OFFSET as f32);
    LittleEndian::write_f32(&mut h[offset::SCL_SLOPE..], 1.0);
    LittleEndian::write_f32(&mut h[offset::SCL_INTER..], 0.0);
    h[offset::XYZT_UNITS] = 2; // millimetres
    let d = descrip.as_bytes();
    let n = d.len().min(79);
    h[offset::DESCRIP..offset::DESCRIP + n].copy_from_slice(&d[..n]);
    LittleEndian::write_i16(&mut h[offset::QFORM_CODE..], 0);
    LittleEndian::write_i16(&mut h[offset::SFORM_CODE..], 0);
    h[offset::MAGIC..offset::MAGIC + 4].copy_from_slice(MAGIC);
    payload(&mut h);
    Ok(h)
}

/// Serializes a volume as uncompressed little-endian float32 NIfTI-1.
pub fn encode_volume(v: &Volume) -> Result<Vec<u8>> {
    let descrip = format!("{DESCRIP_TAG};seq={};patient={}", v.sequence().as_str(), v.patient_id());
    encode(v.dims(), v.spacing(), DataType::Float32, &descrip, |buf| {
        buf.reserve(v.len() * 4);
        for &x in v.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    })
}

/// Serializes a label map as uncompressed uint8 NIfTI-1.
pub fn encode_label_map(l: &LabelMap) -> Result<Vec<u8>> {
    encode(l.dims(), l.spacing(), DataType::UInt8, DESCRIP_TAG, |buf| {
        buf.extend_from_slice(l.data())
    })
}

fn write_bytes(bytes: &[u8], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let gz = path.extension().is_some_and(|e| e == "gz");
    let out = if gz {
        let mut enc = GzEncoder::new(Vec::with_capacity(bytes.len() / 2), Compression::fast());
        enc.write_all(bytes).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        bytes.to_vec()
    };
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a volume; a `.gz` extension selects gzip compression.
pub fn write_volume(v: &Volume, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(&encode_volume(v)?, path.as_ref())
}

pub fn write_label_map(l: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(&encode_label_map(l)?, path.as_ref())
}

/// External-to-internal label code table, e.g. `{"500": 1, "200": 2, "600": 3}`.
/// External 0 maps to background unless listed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, u8>", into = "BTreeMap<String, u8>")]
pub struct LabelRemap {
    table: BTreeMap<i64, u8>,
}

impl LabelRemap {
    pub fn new(table: BTreeMap<i64, u8>) -> Result<Self> {
        if let Some((k, v)) = table.iter().find(|(_, &v)| v > label::MAX) {
            return Err(Error::Label(format!(
                "remap target {v} for external label {k} outside {{0,1,2,3}}"
            )));
        }
        Ok(LabelRemap { table })
    }

    /// Codes used by the multi-sequence cardiac segmentation challenge
    /// (500 = LV, 200 = MYO, 600 = RV).
    pub fn challenge() -> Self {
        LabelRemap {
            table: BTreeMap::from([(200, label::MYO), (500, label::LV), (600, label::RV)]),
        }
    }

    pub fn apply(&self, external: i64) -> Result<u8> {
        match self.table.get(&external) {
            Some(&v) => Ok(v),
            None if external == 0 => Ok(label::BACKGROUND),
            None => Err(Error::Label(format!(
                "external label {external} not present in remap table"
            ))),
        }
    }
}

impl TryFrom<BTreeMap<String, u8>> for LabelRemap {
    type Error = Error;

    fn try_from(raw: BTreeMap<String, u8>) -> Result<Self> {
        let table = raw
            .into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse::<i64>()
                    .map(|k| (k, v))
                    .map_err(|_| Error::Label(format!("remap key `{k}` is not an integer")))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        LabelRemap::new(table)
    }
}

impl From<LabelRemap> for BTreeMap<String, u8> {
    fn from(r: LabelRemap) -> Self {
        r.table.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_volume() -> Volume {
        Volume::new(
            vec![1.5, -2.25, 3.0e-7, 1024.0],
            [2, 2, 1],
            [1.25, 1.25, 10.0],
            SequenceKind::Bssfp,
            "P007",
        )
        .unwrap()
    }

    #[test]
    fn volume_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.nii", "a.nii.gz"] {
            let p = dir.path().join(name);
            let v = sample_volume();
            write_volume(&v, &p).unwrap();
            let (back, h) = read_volume(&p).unwrap();
            assert_eq!(back, v);
            assert_eq!(h.datatype, DataType::Float32);
            assert_eq!(h.spacing3(), [1.25, 1.25, 10.0]);
            assert_eq!(h.vox_offset, 352.0);
            assert_eq!(h.endianness, Endianness::Little);
        }
    }

    #[test]
    fn label_maps_are_uint8() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.nii.gz");
        let l = LabelMap::new(vec![0, 1, 2, 3], [2, 2, 1], [1.0, 1.0, 8.0]).unwrap();
        write_label_map(&l, &p).unwrap();
        let (back, h) = read_label_map(&p, None).unwrap();
        assert_eq!(back, l);
        assert_eq!(h.datatype.code(), 2);
    }

    fn with_field(bytes: &mut [u8], at: usize, value: i16) {
        LittleEndian::write_i16(&mut bytes[at..], value);
    }

    #[test]
    fn unsupported_datatype_is_reported() {
        let mut b = encode_volume(&sample_volume()).unwrap();
        with_field(&mut b, offset::DATATYPE, 64);
        match decode(&b, Path::new("x.nii")) {
            Err(Error::UnsupportedDatatype { code: 64, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn int16_scaling_is_applied() {
        let l = LabelMap::new(vec![0; 4], [2, 2, 1], [1.0; 3]).unwrap();
        let mut b = encode_label_map(&l).unwrap();
        b.truncate(DEFAULT_VOX_OFFSET);
        with_field(&mut b, offset::DATATYPE, 4);
        with_field(&mut b, offset::BITPIX, 16);
        LittleEndian::write_f32(&mut b[offset::SCL_SLOPE..], 2.0);
        LittleEndian::write_f32(&mut b[offset::SCL_INTER..], 1.0);
        for raw in [5i16, 0, -3, 7] {
            b.extend_from_slice(&raw.to_le_bytes());
        }
        let img = decode(&b, Path::new("x.nii")).unwrap();
        assert_eq!(img.values, vec![11.0, 1.0, -5.0, 15.0]);
    }

    #[test]
    fn structural_errors_name_the_field() {
        let good = encode_volume(&sample_volume()).unwrap();

        let mut b = good.clone();
        b[offset::MAGIC..offset::MAGIC + 4].copy_from_slice(b"ni1\0");
        let msg = decode(&b, Path::new("x.nii")).unwrap_err().to_string();
        assert!(msg.contains("magic") && msg.contains("344"), "{msg}");

        let mut b = good.clone();
        LittleEndian::write_i32(&mut b, 540);
        let msg = decode(&b, Path::new("x.nii")).unwrap_err().to_string();
        assert!(msg.contains("sizeof_hdr"), "{msg}");

        let mut b = good.clone();
        b.truncate(b.len() - 3);
        assert!(matches!(
            decode(&b, Path::new("x.nii")),
            Err(Error::TruncatedData {
                expected: 16,
                found: 13,
                ..
            })
        ));

        let mut b = good.clone();
        b.extend_from_slice(&[0; 4]);
        assert!(matches!(
            decode(&b, Path::new("x.nii")),
            Err(Error::SizeMismatch { .. })
        ));

        let mut b = good.clone();
        with_field(&mut b, offset::DIM, 9);
        let msg = decode(&b, Path::new("x.nii")).unwrap_err().to_string();
        assert!(msg.contains("dim[0]"), "{msg}");

        let mut b = good;
        b.truncate(100);
        assert!(decode(&b, Path::new("x.nii")).is_err());
    }

    #[test]
    fn remap_converts_external_codes() {
        let remap: LabelRemap = serde_json::from_str(r#"{"500": 1, "200": 2, "600": 3}"#).unwrap();
        assert_eq!(remap, LabelRemap::challenge());
        assert_eq!(remap.apply(500).unwrap(), 1);
        assert_eq!(remap.apply(0).unwrap(), 0);
        assert!(remap.apply(421).is_err());
        assert!(serde_json::from_str::<LabelRemap>(r#"{"5": 9}"#).is_err());
        assert!(serde_json::from_str::<LabelRemap>(r#"{"x": 1}"#).is_err());

        let ext = Volume::new(
            vec![0.0, 500.0, 200.0, 600.0],
            [2, 2, 1],
            [1.0; 3],
            SequenceKind::Lge,
            "p",
        )
        .unwrap();
        let img = decode(&encode_volume(&ext).unwrap(), Path::new("x")).unwrap();
        assert!(img.to_label_map(None).is_err());
        assert_eq!(img.to_label_map(Some(&remap)).unwrap().data(), &[0, 1, 2, 3]);
    }

    #[test]
    fn untagged_volume_needs_explicit_metadata() {
        let l = LabelMap::new(vec![0, 1, 2, 3], [2, 2, 1], [1.0; 3]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.nii");
        write_label_map(&l, &p).unwrap();
        assert!(read_volume(&p).is_err());
        let (v, _) = read_volume_as(&p, SequenceKind::T2, "P1").unwrap();
        assert_eq!(v.data(), &[0.0, 1.0, 2.0, 3.0]);
    }
}
