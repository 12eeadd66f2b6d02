//! File formats: NIfTI-1 images and JSON documents (manifests, reference
//! histograms, reports).

pub mod nifti;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use nifti::{
    read_label_map, read_nifti, read_volume, read_volume_as, write_label_map, write_volume, LabelRemap, NiftiHeader,
    NiftiImage,
};

/// Parses JSON from `path`; errors carry the JSON path of the offending
/// value.
pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, path)
}

pub(crate) fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        json_path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Pretty-printed JSON with a trailing newline. Output is a pure function of
/// `value`, so equal values give byte-identical files.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: Default::default(),
        json_path: ".".into(),
        message: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, to_json_string(value)?).map_err(|e| Error::io(path, e))
}
