//! Intensity and geometry standardization: per-slice polynomial bias
//! correction, CDF matching to a shared reference histogram, resampling to
//! a common grid and affine normalization to mean/std 0.5.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants;
use crate::error::{Error, Result};
use crate::image::{crop_or_pad_center, resample_bilinear, Slice2D, Volume};

pub const HISTOGRAM_BINS: usize = 256;
pub const DEFAULT_BIAS_DEGREE: usize = 3;
const LOG_EPS: f64 = 1e-3;
const MIN_FIELD: f64 = 0.05;

/// Normalized coordinate in [-1, 1] of pixel `i` along an axis of `n`.
pub fn unit_coord(i: usize, n: usize) -> f64 {
    if n > 1 {
        2.0 * i as f64 / (n - 1) as f64 - 1.0
    } else {
        0.0
    }
}

/// Exponent pairs (i, j) of the monomials x^i y^j with i + j <= degree.
pub fn monomials(degree: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        for j in 0..=total {
            out.push((total - j, j));
        }
    }
    out
}

/// Multiplicative bias of one slice: `max(exp(p(x̂, ŷ) - offset), 0.05)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasField {
    pub z: usize,
    pub degree: usize,
    /// Coefficients in `monomials(degree)` order.
    pub coefficients: Vec<f64>,
    pub offset: f64,
    pub nx: usize,
    pub ny: usize,
}

impl BiasField {
    pub fn log_polynomial(&self, x: usize, y: usize) -> f64 {
        let (xh, yh) = (unit_coord(x, self.nx), unit_coord(y, self.ny));
        monomials(self.degree)
            .iter()
            .zip(&self.coefficients)
            .map(|(&(i, j), c)| c * xh.powi(i as i32) * yh.powi(j as i32))
            .sum()
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        (self.log_polynomial(x, y) - self.offset).exp().max(MIN_FIELD)
    }
}

/// Outcome of bias correction for one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceBias {
    Fitted(BiasField),
    Skipped { z: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasCorrection {
    pub volume: Volume,
    pub fields: Vec<SliceBias>,
}

/// Otsu threshold over a 256-bin histogram spanning [min, max]. `None` for
/// constant or empty input. Foreground is `value > threshold`.
pub fn otsu_threshold(values: &[f32]) -> Option<f64> {
    let (lo, hi) = min_max(values)?;
    if hi <= lo {
        return None;
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut hist = [0u64; HISTOGRAM_BINS];
    for &v in values {
        hist[bin_of((v as f64 - lo) / (hi - lo))] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_k) = (-1.0, 0);
    for (k, &c) in hist.iter().enumerate().take(HISTOGRAM_BINS - 1) {
        w0 += c as f64;
        sum0 += k as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_k = k;
        }
    }
    Some(lo + (best_k + 1) as f64 * width)
}

fn min_max(values: &[f32]) -> Option<(f64, f64)> {
    let mut it = values.iter().map(|&v| v as f64);
    let first = it.next()?;
    Some(it.fold((first, first), |(a, b), v| (a.min(v), b.max(v))))
}

fn bin_of(u: f64) -> usize {
    ((u * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

fn fit_slice(s: &Slice2D, z: usize, degree: usize) -> std::result::Result<(Slice2D, BiasField), String> {
    let t = otsu_threshold(s.data()).ok_or("constant slice, no foreground")?;
    let (nx, ny) = (s.nx(), s.ny());
    let fg: Vec<(usize, usize, f64)> = (0..ny)
        .flat_map(|y| (0..nx).map(move |x| (x, y)))
        .map(|(x, y)| (x, y, s.get(x, y) as f64))
        .filter(|&(_, _, v)| v > t)
        .collect();
    if fg.is_empty() {
        return Err("empty foreground".into());
    }
    let terms = monomials(degree);
    let m = terms.len();
    let mut ata = DMatrix::<f64>::zeros(m, m);
    let mut atb = DVector::<f64>::zeros(m);
    let mut row = vec![0.0; m];
    for &(x, y, v) in &fg {
        let (xh, yh) = (unit_coord(x, nx), unit_coord(y, ny));
        for (r, &(i, j)) in row.iter_mut().zip(&terms) {
            *r = xh.powi(i as i32) * yh.powi(j as i32);
        }
        let b = (v.max(0.0) + LOG_EPS).ln();
        for a in 0..m {
            atb[a] += row[a] * b;
            for c in 0..m {
                ata[(a, c)] += row[a] * row[c];
            }
        }
    }
    let coeffs = ata
        .svd(true, true)
        .solve(&atb, 1e-12)
        .map_err(|e| format!("least-squares solve failed: {e}"))?;
    let mut field = BiasField {
        z,
        degree,
        coefficients: coeffs.iter().copied().collect(),
        offset: 0.0,
        nx,
        ny,
    };
    // Pick the offset that keeps the foreground mean intensity unchanged.
    let (mut sum_in, mut sum_out) = (0.0, 0.0);
    for &(x, y, v) in &fg {
        sum_in += v;
        sum_out += v / field.log_polynomial(x, y).exp();
    }
    if !(sum_in > 0.0 && sum_out > 0.0) {
        return Err("non-positive foreground mean".into());
    }
    field.offset = (sum_in / sum_out).ln();
    let mut out = s.clone();
    for y in 0..ny {
        for x in 0..nx {
            out.set(x, y, (s.get(x, y) as f64 / field.value(x, y)) as f32);
        }
    }
    Ok((out, field))
}

/// Per-slice log-domain polynomial bias correction. Slices without a
/// foreground are passed through and reported as `SliceBias::Skipped`.
pub fn correct_bias(v: &Volume, degree: usize) -> Result<BiasCorrection> {
    if !v.data().iter().any(|&x| x > 0.0) {
        return Err(Error::invalid(format!(
            "bias correction of {}/{}: no positive intensities",
            v.patient_id(),
            v.sequence()
        )));
    }
    let nz = v.dims()[2];
    let results: Vec<(Slice2D, SliceBias)> = (0..nz)
        .into_par_iter()
        .map(|z| {
            let s = v.slice(z);
            match fit_slice(&s, z, degree) {
                Ok((out, field)) => (out, SliceBias::Fitted(field)),
                Err(reason) => {
                    warn!(
                        "{}/{} slice {z}: bias correction skipped: {reason}",
                        v.patient_id(),
                        v.sequence()
                    );
                    (s, SliceBias::Skipped { z, reason })
                }
            }
        })
        .collect();
    let mut data = Vec::with_capacity(v.len());
    let mut fields = Vec::with_capacity(nz);
    for (s, f) in results {
        data.extend_from_slice(s.data());
        fields.push(f);
    }
    Ok(BiasCorrection {
        volume: v.with_data(data)?,
        fields,
    })
}

/// Shared 256-bin CDF over min-max rescaled intensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceHistogram {
    pub cdf: Vec<f64>,
    pub sources: Vec<String>,
}

impl ReferenceHistogram {
    pub fn validate(&self) -> Result<()> {
        if self.cdf.len() != HISTOGRAM_BINS {
            return Err(Error::invalid(format!(
                "reference histogram has {} bins, expected {HISTOGRAM_BINS}",
                self.cdf.len()
            )));
        }
        let mut prev = 0.0;
        for (i, &c) in self.cdf.iter().enumerate() {
            if !(c.is_finite() && c >= prev && c <= 1.0 + 1e-9) {
                return Err(Error::invalid(format!(
                    "reference CDF not monotone in [0, 1] at bin {i}"
                )));
            }
            prev = c;
        }
        if (self.cdf[HISTOGRAM_BINS - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("reference CDF does not end at 1"));
        }
        if self.sources.is_empty() {
            return Err(Error::invalid("reference histogram lists no source volumes"));
        }
        Ok(())
    }
}

/// Id used for a volume in `ReferenceHistogram::sources`.
pub fn volume_id(v: &Volume) -> String {
    format!("{}:{}", v.patient_id(), v.sequence())
}

/// 256-bin CDF of a volume after min-max rescaling; `None` if constant.
pub fn volume_cdf(v: &Volume) -> Option<Vec<f64>> {
    let (lo, hi) = min_max(v.data())?;
    if hi <= lo {
        return None;
    }
    let mut hist = vec![0u64; HISTOGRAM_BINS];
    for &x in v.data() {
        hist[bin_of((x as f64 - lo) / (hi - lo))] += 1;
    }
    let n = v.len() as f64;
    let mut acc = 0u64;
    let mut cdf: Vec<f64> = hist
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / n
        })
        .collect();
    cdf[HISTOGRAM_BINS - 1] = 1.0;
    Some(cdf)
}

pub fn build_reference_histogram(vs: &[Volume]) -> Result<ReferenceHistogram> {
    if vs.is_empty() {
        return Err(Error::invalid("reference histogram needs at least one volume"));
    }
    let mut sum = vec![0.0; HISTOGRAM_BINS];
    let mut sources = Vec::new();
    for v in vs {
        match volume_cdf(v) {
            Some(cdf) => {
                for (s, c) in sum.iter_mut().zip(cdf) {
                    *s += c;
                }
                sources.push(volume_id(v));
            }
            None => warn!("{}: constant volume skipped in reference histogram", volume_id(v)),
        }
    }
    if sources.is_empty() {
        return Err(Error::Degenerate(
            "every volume is constant; no reference histogram".into(),
        ));
    }
    let n = sources.len() as f64;
    let mut cdf: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    cdf[HISTOGRAM_BINS - 1] = 1.0;
    Ok(ReferenceHistogram { cdf, sources })
}

/// Piecewise-linear CDF through (k/256, F_k) with F_0 = 0, F_{k+1} = cdf[k].
fn forward(cdf: &[f64], u: f64) -> f64 {
    let k = bin_of(u);
    let lo = if k == 0 { 0.0 } else { cdf[k - 1] };
    let hi = cdf[k];
    let t = (u * HISTOGRAM_BINS as f64 - k as f64).clamp(0.0, 1.0);
    (lo + (hi - lo) * t).clamp(lo, hi)
}

fn inverse(cdf: &[f64], p: f64) -> f64 {
    let k = cdf.partition_point(|&c| c < p).min(HISTOGRAM_BINS - 1);
    let lo = if k == 0 { 0.0 } else { cdf[k - 1] };
    let hi = cdf[k];
    let t = if hi > lo {
        ((p - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (k as f64 + t) / HISTOGRAM_BINS as f64
}

/// Monotone CDF matching of `v` to `reference`, mapped back onto the input
/// intensity range.
pub fn match_histogram(v: &Volume, reference: &ReferenceHistogram) -> Result<Volume> {
    reference.validate()?;
    let Some(cdf) = volume_cdf(v) else {
        warn!("{}: constant volume left unmatched", volume_id(v));
        return Ok(v.clone());
    };
    let (lo, hi) = min_max(v.data()).expect("non-empty");
    let range = hi - lo;
    let data = v
        .data()
        .par_iter()
        .map(|&x| {
            let u = ((x as f64 - lo) / range).clamp(0.0, 1.0);
            (lo + inverse(&reference.cdf, forward(&cdf, u)) * range) as f32
        })
        .collect();
    v.with_data(data)
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f32]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = values.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `0.5 + 0.5 (x - mean) / std`.
pub fn normalize(v: &Volume) -> Result<Volume> {
    let (mean, std) = mean_std(v.data());
    if !(std > 0.0) {
        return Err(Error::Degenerate(format!(
            "{}: zero standard deviation, cannot normalize",
            volume_id(v)
        )));
    }
    let data = v
        .data()
        .iter()
        .map(|&x| (constants::NORMALIZED_MEAN + constants::NORMALIZED_STD * (x as f64 - mean) / std) as f32)
        .collect();
    v.with_data(data)
}

pub fn standardize_geometry(v: &Volume, spacing: (f64, f64), size: (usize, usize)) -> Result<Volume> {
    crop_or_pad_center(&resample_bilinear(v, spacing)?, size.0, size.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HistogramScope {
    #[default]
    Global,
    PerSequence,
}

impl std::str::FromStr for HistogramScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(HistogramScope::Global),
            "per-sequence" => Ok(HistogramScope::PerSequence),
            _ => Err(Error::invalid(format!(
                "unknown histogram scope '{s}' (global|per-sequence)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// `None` disables bias correction.
    pub bias_degree: Option<usize>,
    pub scope: HistogramScope,
    pub target_spacing: (f64, f64),
    pub target_size: (usize, usize),
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            bias_degree: Some(DEFAULT_BIAS_DEGREE),
            scope: HistogramScope::Global,
            target_spacing: constants::TARGET_SPACING,
            target_size: constants::TARGET_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOutput {
    pub volumes: Vec<Volume>,
    /// Keyed by "global" or the sequence name.
    pub references: BTreeMap<String, ReferenceHistogram>,
    pub bias: Vec<Vec<SliceBias>>,
}

fn scope_key(scope: HistogramScope, v: &Volume) -> String {
    match scope {
        HistogramScope::Global => "global".into(),
        HistogramScope::PerSequence => v.sequence().to_string(),
    }
}

/// bias -> histogram match -> geometry -> normalize, over a set of volumes.
pub fn preprocess_volumes(volumes: &[Volume], opts: &PreprocessOptions) -> Result<PreprocessOutput> {
    let corrected: Vec<BiasCorrection> = volumes
        .par_iter()
        .map(|v| match opts.bias_degree {
            Some(d) => correct_bias(v, d),
            None => Ok(BiasCorrection {
                volume: v.clone(),
                fields: Vec::new(),
            }),
        })
        .collect::<Result<_>>()?;
    let mut groups: BTreeMap<String, Vec<Volume>> = BTreeMap::new();
    for c in &corrected {
        groups
            .entry(scope_key(opts.scope, &c.volume))
            .or_default()
            .push(c.volume.clone());
    }
    let references = groups
        .iter()
        .map(|(k, vs)| Ok((k.clone(), build_reference_histogram(vs)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let out = corrected
        .par_iter()
        .map(|c| {
            let r = &references[&scope_key(opts.scope, &c.volume)];
            let m = match_histogram(&c.volume, r)?;
            normalize(&standardize_geometry(&m, opts.target_spacing, opts.target_size)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreprocessOutput {
        volumes: out,
        references,
        bias: corrected.into_iter().map(|c| c.fields).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::SequenceKind;

    fn vol(data: Vec<f32>, nx: usize, ny: usize, nz: usize) -> Volume {
        Volume::new(data, [nx, ny, nz], [1.0, 1.0, 1.0], SequenceKind::Lge, "P001").unwrap()
    }

    #[test]
    fn monomial_count() {
        assert_eq!(monomials(0), vec![(0, 0)]);
        assert_eq!(monomials(3).len(), 10);
    }

    #[test]
    fn otsu_splits_two_levels() {
        let v: Vec<f32> = (0..100).map(|i| if i < 60 { 0.1 } else { 0.9 }).collect();
        let t = otsu_threshold(&v).unwrap();
        assert!(t > 0.1 && t < 0.9, "{t}");
    }

    #[test]
    fn normalize_mean_std_example() {
        // Values 80 and 120 alternating: mean 100, std 20.
        let v = vol(
            (0..64).map(|i| if i % 2 == 0 { 80.0 } else { 120.0 }).collect(),
            8,
            8,
            1,
        );
        let n = normalize(&v).unwrap();
        let (m, s) = mean_std(n.data());
        assert!((m - 0.5).abs() < 1e-6 && (s - 0.5).abs() < 1e-6);
        assert_eq!(n.data()[0], 0.0);
        assert_eq!(n.data()[1], 1.0);
    }

    #[test]
    fn normalize_rejects_constant() {
        assert!(normalize(&vol(vec![3.0; 16], 4, 4, 1)).is_err());
    }

    #[test]
    fn reference_of_low_and_high_volumes_is_average_step() {
        // Each volume: half at its min, half at its max => CDF 0.5 from bin 0
        // to 254, then 1. Mixed volume: quarter low.
        let a = vol([0.0f32; 8].iter().chain([1.0f32; 8].iter()).copied().collect(), 4, 4, 1);
        let b = vol(
            [0.0f32; 4].iter().chain([1.0f32; 12].iter()).copied().collect(),
            4,
            4,
            1,
        );
        let r = build_reference_histogram(&[a, b]).unwrap();
        assert_eq!(r.cdf[0], (0.5 + 0.25) / 2.0);
        assert_eq!(r.cdf[254], (0.5 + 0.25) / 2.0);
        assert_eq!(r.cdf[255], 1.0);
        assert_eq!(r.sources.len(), 2);
    }

    #[test]
    fn constant_volumes_skip_then_error() {
        let c = vol(vec![1.0; 16], 4, 4, 1);
        assert!(matches!(
            build_reference_histogram(&[c.clone()]),
            Err(Error::Degenerate(_))
        ));
        let r = build_reference_histogram(&[vol((0..16).map(|i| i as f32).collect(), 4, 4, 1)]).unwrap();
        assert_eq!(match_histogram(&c, &r).unwrap(), c);
    }

    #[test]
    fn degree_zero_preserves_mean() {
        let data: Vec<f32> = (0..256)
            .map(|i| {
                if (i / 16) % 4 == 0 {
                    0.0
                } else {
                    1.0 + (i % 7) as f32 * 0.1
                }
            })
            .collect();
        let v = vol(data, 16, 16, 1);
        let out = correct_bias(&v, 0).unwrap();
        let ratio: Vec<f64> = v
            .data()
            .iter()
            .zip(out.volume.data())
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| *b as f64 / *a as f64)
            .collect();
        for r in &ratio {
            assert!((r - ratio[0]).abs() < 1e-6);
        }
        assert!((ratio[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_slices_pass_through() {
        let mut data = vec![0.0f32; 32];
        data[20] = 1.0;
        data[21] = 2.0;
        let v = vol(data, 4, 4, 2);
        let out = correct_bias(&v, 2).unwrap();
        assert!(matches!(out.fields[0], SliceBias::Skipped { z: 0, .. }));
        assert_eq!(&out.volume.data()[..16], &v.data()[..16]);
    }

    #[test]
    fn reference_json_roundtrip_and_validation() {
        let r = build_reference_histogram(&[vol((0..16).map(|i| i as f32).collect(), 4, 4, 1)]).unwrap();
        let text = crate::io::to_json_string(&r).unwrap();
        let back: ReferenceHistogram = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let mut bad = r.clone();
        bad.cdf[10] = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn standardize_identity_on_reference_grid() {
        let v = Volume::new(
            (0..256 * 256).map(|i| (i % 97) as f32).collect(),
            [256, 256, 1],
            [1.25, 1.25, 10.0],
            SequenceKind::Bssfp,
            "P001",
        )
        .unwrap();
        let out = standardize_geometry(&v, (1.25, 1.25), (256, 256)).unwrap();
        for (a, b) in out.data().iter().zip(v.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn standardize_t2_crops_after_resample() {
        let v = Volume::new(
            vec![1.0; 240 * 240],
            [240, 240, 1],
            [1.35, 1.35, 15.0],
            SequenceKind::T2,
            "P001",
        )
        .unwrap();
        let out = standardize_geometry(&v, (1.25, 1.25), (256, 256)).unwrap();
        assert_eq!(out.dims(), [256, 256, 1]);
        assert_eq!(resample_bilinear(&v, (1.25, 1.25)).unwrap().dims(), [259, 259, 1]);
    }
}
