//! Overlap and surface-distance metrics per structure, with cohort
//! aggregation and a plain-text table.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{LabelMap, Structure};

fn check_dims(pred: &LabelMap, gt: &LabelMap) -> Result<()> {
    if pred.dims() != gt.dims() {
        return Err(Error::invalid(format!(
            "prediction dims {:?} differ from ground truth dims {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    Ok(())
}

fn counts(pred: &LabelMap, gt: &LabelMap, code: u8) -> (usize, usize, usize) {
    let (mut a, mut b, mut both) = (0, 0, 0);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let (x, y) = (p == code, g == code);
        a += x as usize;
        b += y as usize;
        both += (x && y) as usize;
    }
    (a, b, both)
}

/// 2|A∩B| / (|A|+|B|); 1 if both empty.
pub fn dice(pred: &LabelMap, gt: &LabelMap, code: u8) -> Result<f64> {
    check_dims(pred, gt)?;
    let (a, b, both) = counts(pred, gt, code);
    Ok(if a + b == 0 {
        1.0
    } else {
        2.0 * both as f64 / (a + b) as f64
    })
}

/// |A∩B| / |A∪B|; 1 if both empty.
pub fn jaccard(pred: &LabelMap, gt: &LabelMap, code: u8) -> Result<f64> {
    check_dims(pred, gt)?;
    let (a, b, both) = counts(pred, gt, code);
    let union = a + b - both;
    Ok(if union == 0 { 1.0 } else { both as f64 / union as f64 })
}

/// Voxels of `mask` with at least one face neighbour outside the mask;
/// neighbours beyond the grid count as outside. `in_plane` ignores z.
pub fn surface_voxels(mask: &[bool], dims: [usize; 3], in_plane: bool) -> Vec<[usize; 3]> {
    let [nx, ny, nz] = dims;
    let at = |x: usize, y: usize, z: usize| mask[x + nx * (y + ny * z)];
    let mut out = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !at(x, y, z) {
                    continue;
                }
                let mut edge = x == 0 || y == 0 || x + 1 == nx || y + 1 == ny;
                edge = edge || !at(x - 1, y, z) || !at(x + 1, y, z) || !at(x, y - 1, z) || !at(x, y + 1, z);
                if !in_plane {
                    edge = edge || z == 0 || z + 1 == nz || !at(x, y, z - 1) || !at(x, y, z + 1);
                }
                if edge {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// Euclidean distance in mm between two voxels.
pub fn physical_distance(a: [usize; 3], b: [usize; 3], spacing: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let d = (a[i] as f64 - b[i] as f64) * spacing[i];
        s += d * d;
    }
    s.sqrt()
}

const NO_SITE: usize = usize::MAX;

/// Lower envelope of parabolas w²(p - q)² + f(q) over finite f(q). Writes
/// the squared distance and the minimizing q for each p.
fn envelope_1d(f: &[f64], w: f64, d: &mut [f64], arg: &mut [usize], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    let w2 = w * w;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let Some(&r) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let (qf, rf) = (q as f64, r as f64);
            let s = ((f[q] + w2 * qf * qf) - (f[r] + w2 * rf * rf)) / (2.0 * w2 * (qf - rf));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        d.fill(f64::INFINITY);
        arg.fill(NO_SITE);
        return;
    }
    let mut k = 0;
    for p in 0..n {
        let pf = p as f64;
        while k + 1 < v.len() && z[k + 1] < pf {
            k += 1;
        }
        let q = v[k];
        d[p] = w2 * (pf - q as f64).powi(2) + f[q];
        arg[p] = q;
    }
}

/// Exact anisotropic Euclidean distance transform to the `true` voxels of
/// `sites`, as the index of the nearest site for every voxel (`None` if
/// there are no sites).
pub fn nearest_site_transform(sites: &[bool], dims: [usize; 3], spacing: [f64; 3]) -> Option<Vec<usize>> {
    if !sites.iter().any(|&s| s) {
        return None;
    }
    let [nx, ny, nz] = dims;
    let mut dist: Vec<f64> = sites.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let mut site: Vec<usize> = (0..sites.len()).map(|i| if sites[i] { i } else { NO_SITE }).collect();
    let (mut v, mut z) = (Vec::new(), Vec::new());
    for (axis, len, stride) in [(0, nx, 1), (1, ny, nx), (2, nz, nx * ny)] {
        let mut f = vec![0.0; len];
        let mut d = vec![0.0; len];
        let mut arg = vec![0usize; len];
        let mut line_sites = vec![0usize; len];
        for start in 0..sites.len() {
            let coord = match axis {
                0 => start % nx,
                1 => (start / nx) % ny,
                _ => start / (nx * ny),
            };
            if coord != 0 {
                continue;
            }
            for i in 0..len {
                f[i] = dist[start + i * stride];
                line_sites[i] = site[start + i * stride];
            }
            envelope_1d(&f, spacing[axis], &mut d, &mut arg, &mut v, &mut z);
            for i in 0..len {
                dist[start + i * stride] = d[i];
                site[start + i * stride] = if arg[i] == NO_SITE { NO_SITE } else { line_sites[arg[i]] };
            }
        }
    }
    Some(site)
}

fn coords(i: usize, dims: [usize; 3]) -> [usize; 3] {
    [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])]
}

/// Distances from each `from` voxel to the nearest voxel of `to_mask`.
fn directed(from: &[[usize; 3]], to_mask: &[bool], dims: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    let Some(site) = nearest_site_transform(to_mask, dims, spacing) else {
        return vec![f64::INFINITY; from.len()];
    };
    from.iter()
        .map(|&p| {
            let i = p[0] + dims[0] * (p[1] + dims[1] * p[2]);
            physical_distance(p, coords(site[i], dims), spacing)
        })
        .collect()
}

fn to_mask(points: &[[usize; 3]], dims: [usize; 3]) -> Vec<bool> {
    let mut m = vec![false; dims.iter().product()];
    for p in points {
        m[p[0] + dims[0] * (p[1] + dims[1] * p[2])] = true;
    }
    m
}

/// Nearest-rank percentile (q in (0, 100]).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((q / 100.0 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Mean surface distance and Hausdorff distance in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDistances {
    pub msd_mm: f64,
    pub hausdorff_mm: f64,
}

fn mask_of(l: &LabelMap, code: u8) -> Vec<bool> {
    l.data().iter().map(|&v| v == code).collect()
}

fn surface_pair(
    a: &[bool],
    b: &[bool],
    dims: [usize; 3],
    spacing: [f64; 3],
    in_plane: bool,
    hd_percentile: Option<f64>,
) -> Option<SurfaceDistances> {
    let sa = surface_voxels(a, dims, in_plane);
    let sb = surface_voxels(b, dims, in_plane);
    if sa.is_empty() || sb.is_empty() {
        return None;
    }
    let ab = directed(&sa, &to_mask(&sb, dims), dims, spacing);
    let ba = directed(&sb, &to_mask(&sa, dims), dims, spacing);
    let sum = ab.iter().sum::<f64>() + ba.iter().sum::<f64>();
    let hd = match hd_percentile {
        None => ab.iter().chain(&ba).cloned().fold(0.0, f64::max),
        Some(q) => percentile(&ab, q).max(percentile(&ba, q)),
    };
    Some(SurfaceDistances {
        msd_mm: sum / (ab.len() + ba.len()) as f64,
        hausdorff_mm: hd,
    })
}

/// Symmetric surface distances for one label in 3D. `None` when either
/// mask is empty.
pub fn surface_distances(
    pred: &LabelMap,
    gt: &LabelMap,
    code: u8,
    spacing: [f64; 3],
) -> Result<Option<SurfaceDistances>> {
    check_dims(pred, gt)?;
    Ok(surface_pair(
        &mask_of(pred, code),
        &mask_of(gt, code),
        pred.dims(),
        spacing,
        false,
        None,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Whole volume, 6-connected surfaces, anisotropic spacing.
    #[default]
    #[serde(rename = "3d")]
    ThreeD,
    /// Per slice with 4-connected surfaces, averaged over slices where both
    /// masks are present.
    #[serde(rename = "2d")]
    TwoD,
}

impl std::str::FromStr for DistanceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3d" => Ok(DistanceMode::ThreeD),
            "2d" => Ok(DistanceMode::TwoD),
            _ => Err(Error::invalid(format!("unknown distance mode '{s}' (2d|3d)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub mode: DistanceMode,
    /// Report this percentile of directed distances instead of the maximum.
    pub hausdorff_percentile: Option<f64>,
}

fn distances_with(
    pred: &[bool],
    gt: &[bool],
    dims: [usize; 3],
    spacing: [f64; 3],
    opts: &EvalOptions,
) -> Option<SurfaceDistances> {
    match opts.mode {
        DistanceMode::ThreeD => surface_pair(pred, gt, dims, spacing, false, opts.hausdorff_percentile),
        DistanceMode::TwoD => {
            let n = dims[0] * dims[1];
            let d2 = [dims[0], dims[1], 1];
            let per: Vec<SurfaceDistances> = (0..dims[2])
                .filter_map(|z| {
                    let r = z * n..(z + 1) * n;
                    surface_pair(&pred[r.clone()], &gt[r], d2, spacing, true, opts.hausdorff_percentile)
                })
                .collect();
            if per.is_empty() {
                return None;
            }
            let k = per.len() as f64;
            Some(SurfaceDistances {
                msd_mm: per.iter().map(|d| d.msd_mm).sum::<f64>() / k,
                hausdorff_mm: per.iter().map(|d| d.hausdorff_mm).sum::<f64>() / k,
            })
        }
    }
}

/// Metrics of one structure; distances are `None` (undefined) when either
/// mask is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureMetrics {
    pub dice: f64,
    pub jaccard: f64,
    pub msd_mm: Option<f64>,
    pub hausdorff_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub case_id: String,
    pub structures: BTreeMap<Structure, StructureMetrics>,
}

pub fn evaluate_case(
    case_id: impl Into<String>,
    pred: &LabelMap,
    gt: &LabelMap,
    spacing: [f64; 3],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    check_dims(pred, gt)?;
    if !spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
        return Err(Error::invalid(format!("spacing must be positive, got {spacing:?}")));
    }
    let mut structures = BTreeMap::new();
    for s in Structure::ALL {
        let code = s.code();
        let d = distances_with(&mask_of(pred, code), &mask_of(gt, code), pred.dims(), spacing, opts);
        structures.insert(
            s,
            StructureMetrics {
                dice: dice(pred, gt, code)?,
                jaccard: jaccard(pred, gt, code)?,
                msd_mm: d.map(|d| d.msd_mm),
                hausdorff_mm: d.map(|d| d.hausdorff_mm),
            },
        );
    }
    Ok(EvalReport {
        case_id: case_id.into(),
        structures,
    })
}

/// Mean and population standard deviation over defined values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
    pub undefined: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Stat {
        let (mut defined, mut undefined) = (Vec::new(), 0);
        for v in values {
            match v {
                Some(x) => defined.push(x),
                None => undefined += 1,
            }
        }
        if defined.is_empty() {
            return Stat {
                mean: None,
                std: None,
                n: 0,
                undefined,
            };
        }
        let n = defined.len() as f64;
        let mean = defined.iter().sum::<f64>() / n;
        let var = defined.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Stat {
            mean: Some(mean),
            std: Some(var.sqrt()),
            n: defined.len(),
            undefined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureAggregate {
    pub dice: Stat,
    pub jaccard: Stat,
    pub msd_mm: Stat,
    pub hausdorff_mm: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub cases: usize,
    pub structures: BTreeMap<Structure, StructureAggregate>,
}

pub fn aggregate(reports: &[EvalReport]) -> AggregateReport {
    let get = |s: Structure, f: fn(&StructureMetrics) -> Option<f64>| {
        Stat::of(reports.iter().map(move |r| r.structures.get(&s).and_then(f)))
    };
    let structures = Structure::ALL
        .into_iter()
        .map(|s| {
            (
                s,
                StructureAggregate {
                    dice: get(s, |m| Some(m.dice)),
                    jaccard: get(s, |m| Some(m.jaccard)),
                    msd_mm: get(s, |m| m.msd_mm),
                    hausdorff_mm: get(s, |m| m.hausdorff_mm),
                },
            )
        })
        .collect();
    AggregateReport {
        cases: reports.len(),
        structures,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3}"))
}

/// Rows are metrics, columns avg./std. per structure.
impl fmt::Display for AggregateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<26}", "")?;
        for s in Structure::ALL {
            write!(f, " {:>21}", s.name())?;
        }
        writeln!(f)?;
        write!(f, "{:<26}", "")?;
        for _ in Structure::ALL {
            write!(f, " {:>10} {:>10}", "avg.", "std.")?;
        }
        writeln!(f)?;
        let rows: [(&str, fn(&StructureAggregate) -> &Stat); 4] = [
            ("Dice score", |a| &a.dice),
            ("Jaccard index", |a| &a.jaccard),
            ("Surface distance (mm)", |a| &a.msd_mm),
            ("Hausdorff distance (mm)", |a| &a.hausdorff_mm),
        ];
        for (name, pick) in rows {
            write!(f, "{name:<26}")?;
            for s in Structure::ALL {
                let st = self.structures.get(&s).map(pick);
                write!(
                    f,
                    " {:>10} {:>10}",
                    cell(st.and_then(|x| x.mean)),
                    cell(st.and_then(|x| x.std))
                )?;
            }
            writeln!(f)?;
        }
        writeln!(f, "cases: {}", self.cases)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lm(data: Vec<u8>, dims: [usize; 3]) -> LabelMap {
        LabelMap::new(data, dims, [1.0; 3]).unwrap()
    }

    #[test]
    fn four_four_overlap_two() {
        let a = lm(vec![1, 1, 1, 1, 0, 0, 0, 0], [8, 1, 1]);
        let b = lm(vec![0, 0, 1, 1, 1, 1, 0, 0], [8, 1, 1]);
        assert_eq!(dice(&a, &b, 1).unwrap(), 0.5);
        assert_eq!(jaccard(&a, &b, 1).unwrap(), 2.0 / 6.0);
    }

    #[test]
    fn empty_conventions() {
        let e = lm(vec![0; 4], [4, 1, 1]);
        let a = lm(vec![1, 0, 0, 0], [4, 1, 1]);
        assert_eq!(dice(&e, &e, 1).unwrap(), 1.0);
        assert_eq!(dice(&e, &a, 1).unwrap(), 0.0);
        assert_eq!(jaccard(&a, &e, 1).unwrap(), 0.0);
        assert_eq!(surface_distances(&a, &e, 1, [1.0; 3]).unwrap(), None);
    }

    #[test]
    fn single_voxels_three_apart() {
        let mut a = vec![0u8; 10];
        let mut b = vec![0u8; 10];
        a[2] = 1;
        b[5] = 1;
        let d = surface_distances(&lm(a, [10, 1, 1]), &lm(b, [10, 1, 1]), 1, [1.25, 1.25, 1.25])
            .unwrap()
            .unwrap();
        assert_eq!(d.msd_mm, 3.75);
        assert_eq!(d.hausdorff_mm, 3.75);
    }

    #[test]
    fn identical_masks_zero_distance() {
        let a = lm((0..27).map(|i| (i % 2) as u8).collect(), [3, 3, 3]);
        let d = surface_distances(&a, &a, 1, [1.0, 2.0, 3.0]).unwrap().unwrap();
        assert_eq!((d.msd_mm, d.hausdorff_mm), (0.0, 0.0));
    }

    #[test]
    fn aggregate_population_std() {
        let mk = |d: f64| EvalReport {
            case_id: "c".into(),
            structures: Structure::ALL
                .into_iter()
                .map(|s| {
                    (
                        s,
                        StructureMetrics {
                            dice: d,
                            jaccard: d,
                            msd_mm: None,
                            hausdorff_mm: Some(1.0),
                        },
                    )
                })
                .collect(),
        };
        let agg = aggregate(&[mk(0.8), mk(1.0)]);
        let lv = agg.structures[&Structure::Lv];
        assert!((lv.dice.mean.unwrap() - 0.9).abs() < 1e-12);
        assert!((lv.dice.std.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(lv.msd_mm.undefined, 2);
        assert_eq!(lv.msd_mm.mean, None);
        assert_eq!(aggregate(&[mk(0.7)]).structures[&Structure::Rv].dice.std, Some(0.0));
        let text = agg.to_string();
        assert!(text.contains("Hausdorff distance (mm)") && text.contains("undefined"));
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&v, 100.0), 100.0);
    }

    #[test]
    fn two_d_mode_averages_slices() {
        // Slice 0: identical; slice 1: shifted by one column.
        let mut a = vec![0u8; 32];
        let mut b = vec![0u8; 32];
        for i in [5, 6, 9, 10] {
            a[i] = 1;
            b[i] = 1;
            a[16 + i] = 1;
            b[16 + i + 1] = 1;
        }
        let (a, b) = (lm(a, [4, 4, 2]), lm(b, [4, 4, 2]));
        let opts = EvalOptions {
            mode: DistanceMode::TwoD,
            hausdorff_percentile: None,
        };
        let r = evaluate_case("c", &a, &b, [1.0; 3], &opts).unwrap();
        let lv = r.structures[&Structure::Lv];
        assert_eq!(lv.hausdorff_mm, Some(0.5));
        assert_eq!(r.structures[&Structure::Rv].msd_mm, None);
    }
}
