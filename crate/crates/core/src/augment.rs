//! Scar-location augmentation: boundary tracing of the LV and LV+MYO
//! regions, equal-arc landmark placement, rotation of the myocardium about
//! the LV centroid with a blurred-mask blend, and seeded global rotations.

use std::collections::VecDeque;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants;
use crate::error::{Error, Result};
use crate::image::{
    gaussian_blur_3x3, label, rotate_labels, rotate_slice, Interpolation, LabelMap, LabelSlice, Plane, Slice2D,
};

pub const MIN_CONTOUR_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContourKind {
    Epicardial,
    Endocardial,
}

/// Closed polyline in pixel coordinates, counter-clockwise on screen,
/// starting at the point of maximum x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub kind: ContourKind,
    pub points: Vec<[f64; 2]>,
}

impl Contour {
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n).map(|i| dist(self.points[i], self.points[(i + 1) % n])).sum()
    }

    /// Shoelace area in pixel coordinates (y down): negative for
    /// counter-clockwise on screen.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Keeps the largest 4-connected component of `mask`. Returns the mask and
/// the number of components found.
pub fn largest_component(mask: &[bool], nx: usize, ny: usize) -> (Vec<bool>, usize) {
    let mut comp = vec![usize::MAX; mask.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || comp[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        comp[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % nx, i / nx);
            for j in neighbors4(x, y, nx, ny) {
                if mask[j] && comp[j] == usize::MAX {
                    comp[j] = id;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    let Some(best) = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))) else {
        return (vec![false; mask.len()], 0);
    };
    (comp.iter().map(|&c| c == best).collect(), sizes.len())
}

fn neighbors4(x: usize, y: usize, nx: usize, ny: usize) -> impl Iterator<Item = usize> {
    let mut out = [usize::MAX; 4];
    if x > 0 {
        out[0] = x - 1 + y * nx;
    }
    if x + 1 < nx {
        out[1] = x + 1 + y * nx;
    }
    if y > 0 {
        out[2] = x + (y - 1) * nx;
    }
    if y + 1 < ny {
        out[3] = x + (y + 1) * nx;
    }
    out.into_iter().filter(|&i| i != usize::MAX)
}

/// Fills background regions not 4-connected to the image border.
pub fn fill_holes(mask: &[bool], nx: usize, ny: usize) -> Vec<bool> {
    let mut outside = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    for y in 0..ny {
        for x in 0..nx {
            let i = x + y * nx;
            if (x == 0 || y == 0 || x + 1 == nx || y + 1 == ny) && !mask[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        for j in neighbors4(i % nx, i / nx, nx, ny) {
            if !mask[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        }
    }
    outside.iter().map(|&o| !o).collect()
}

// Clockwise on screen, starting east.
const MOORE: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// Moore-neighbour boundary trace of a single-component mask, clockwise on
/// screen from the top-left pixel. Empty mask gives an empty trace.
pub fn trace_boundary(mask: &[bool], nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let inside = |x: i64, y: i64| {
        x >= 0 && y >= 0 && (x as usize) < nx && (y as usize) < ny && mask[x as usize + y as usize * nx]
    };
    let Some(first) = mask.iter().position(|&m| m) else {
        return Vec::new();
    };
    let start = ((first % nx) as i64, (first / nx) as i64);
    // Entered from the west, which is outside by raster order.
    let step = |cur: (i64, i64), back_dir: usize| -> Option<((i64, i64), usize)> {
        for k in 1..=8 {
            let d = (back_dir + k) % 8;
            let p = (cur.0 + MOORE[d].0, cur.1 + MOORE[d].1);
            if inside(p.0, p.1) {
                // Next backtrack: the neighbour before p, seen from p.
                let prev = (back_dir + k - 1) % 8;
                let b = (cur.0 + MOORE[prev].0, cur.1 + MOORE[prev].1);
                let from_p = MOORE
                    .iter()
                    .position(|&(dx, dy)| (p.0 + dx, p.1 + dy) == b)
                    .unwrap_or(4);
                return Some((p, from_p));
            }
        }
        None
    };
    let mut out = vec![(start.0 as usize, start.1 as usize)];
    let Some((second, mut back)) = step(start, 4) else {
        return out;
    };
    let mut cur = second;
    let limit = 4 * mask.len() + 8;
    while out.len() < limit {
        if cur == start {
            let (next, _) = step(cur, back).expect("start has a neighbour");
            if next == second {
                break;
            }
        }
        out.push((cur.0 as usize, cur.1 as usize));
        let (next, b) = step(cur, back).expect("boundary pixel has a neighbour");
        cur = next;
        back = b;
    }
    out
}

fn to_contour(kind: ContourKind, trace: &[(usize, usize)]) -> Contour {
    let mut pts: Vec<[f64; 2]> = trace.iter().rev().map(|&(x, y)| [x as f64, y as f64]).collect();
    let start = (0..pts.len())
        .max_by(|&a, &b| {
            pts[a][0]
                .partial_cmp(&pts[b][0])
                .unwrap()
                .then(pts[b][1].partial_cmp(&pts[a][1]).unwrap())
                .then(b.cmp(&a))
        })
        .unwrap_or(0);
    pts.rotate_left(start);
    let c = Contour { kind, points: pts };
    debug_assert!(c.points.len() < 3 || c.signed_area() <= 0.0);
    c
}

fn region_mask(labels: &LabelSlice, codes: &[u8]) -> Vec<bool> {
    labels.data().iter().map(|v| codes.contains(v)).collect()
}

fn check_lv_myo(labels: &LabelSlice) -> Result<()> {
    let has = |c| labels.data().contains(&c);
    if !has(label::LV) || !has(label::MYO) {
        return Err(Error::Degenerate("slice lacks LV or MYO labels".into()));
    }
    Ok(())
}

fn traced(labels: &LabelSlice, codes: &[u8], kind: ContourKind) -> Result<Contour> {
    let (nx, ny) = (labels.nx(), labels.ny());
    let (mask, n) = largest_component(&region_mask(labels, codes), nx, ny);
    if n > 1 {
        warn!("{kind:?} region has {n} components; using the largest");
    }
    let c = to_contour(kind, &trace_boundary(&fill_holes(&mask, nx, ny), nx, ny));
    if c.points.len() < MIN_CONTOUR_POINTS {
        return Err(Error::Degenerate(format!(
            "{kind:?} contour has {} points, need {MIN_CONTOUR_POINTS}",
            c.points.len()
        )));
    }
    Ok(c)
}

/// Epicardial (LV+MYO) and endocardial (LV) contours of one label slice.
pub fn extract_slice_contours(labels: &LabelSlice) -> Result<(Contour, Contour)> {
    check_lv_myo(labels)?;
    Ok((
        traced(labels, &[label::LV, label::MYO], ContourKind::Epicardial)?,
        traced(labels, &[label::LV], ContourKind::Endocardial)?,
    ))
}

pub fn extract_contours(labels: &LabelMap, z: usize) -> Result<(Contour, Contour)> {
    if z >= labels.dims()[2] {
        return Err(Error::invalid(format!(
            "slice {z} out of range ({} slices)",
            labels.dims()[2]
        )));
    }
    extract_slice_contours(&labels.slice(z)).map_err(|e| match e {
        Error::Degenerate(m) => Error::Degenerate(format!("slice {z}: {m}")),
        e => e,
    })
}

/// `n` points at arc lengths k·P/n along the closed contour, starting at its
/// first point.
pub fn place_landmarks(c: &Contour, n: usize) -> Result<Vec<[f64; 2]>> {
    let p = c.perimeter();
    if n == 0 || c.points.len() < 2 || !(p > 0.0) {
        return Err(Error::Degenerate(format!(
            "cannot place {n} landmarks on a contour of {} points and perimeter {p}",
            c.points.len()
        )));
    }
    let m = c.points.len();
    let mut out = Vec::with_capacity(n);
    let (mut seg, mut seg_start) = (0, 0.0);
    for k in 0..n {
        let target = k as f64 * p / n as f64;
        loop {
            let len = dist(c.points[seg], c.points[(seg + 1) % m]);
            if target <= seg_start + len || seg + 1 == m {
                let (a, b) = (c.points[seg], c.points[(seg + 1) % m]);
                let t = if len > 0.0 {
                    ((target - seg_start) / len).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                out.push([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceLandmarks {
    pub z: usize,
    pub epicardial: Vec<[f64; 2]>,
    pub endocardial: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkSet {
    pub slices: Vec<SliceLandmarks>,
}

/// Landmarks for every slice with a usable myocardium; other slices are
/// skipped with a warning.
pub fn landmark_set(labels: &LabelMap, n: usize) -> Result<LandmarkSet> {
    let mut slices = Vec::new();
    for z in 0..labels.dims()[2] {
        match extract_contours(labels, z) {
            Ok((epi, endo)) => slices.push(SliceLandmarks {
                z,
                epicardial: place_landmarks(&epi, n)?,
                endocardial: place_landmarks(&endo, n)?,
            }),
            Err(Error::Degenerate(m)) => warn!("landmarks skipped: {m}"),
            Err(e) => return Err(e),
        }
    }
    Ok(LandmarkSet { slices })
}

/// Rotation schedule: `count` steps of `angle_step_deg`, clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationAugmentation {
    pub angle_step_deg: f64,
    pub count: usize,
}

impl Default for RotationAugmentation {
    fn default() -> Self {
        RotationAugmentation {
            angle_step_deg: constants::ROTATION_STEP_DEG,
            count: constants::ROTATION_COUNT,
        }
    }
}

impl RotationAugmentation {
    /// Angles for k = 1..=count.
    pub fn angles(&self) -> Vec<f64> {
        (1..=self.count).map(|k| k as f64 * self.angle_step_deg).collect()
    }
}

/// Region rotated by `rotate_myocardium`, its blend weights and pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct MyocardialRegion {
    /// Filled LV+MYO region (largest component).
    pub mask: Vec<bool>,
    /// 3x3 binomial blur of the mask.
    pub weight: Slice2D,
    /// Centroid of the LV pixels.
    pub center: (f64, f64),
}

impl MyocardialRegion {
    pub fn from_labels(labels: &LabelSlice) -> Result<Self> {
        extract_slice_contours(labels)?;
        let (nx, ny) = (labels.nx(), labels.ny());
        let (m, _) = largest_component(&region_mask(labels, &[label::LV, label::MYO]), nx, ny);
        let mask = fill_holes(&m, nx, ny);
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for y in 0..ny {
            for x in 0..nx {
                if labels.get(x, y) == label::LV {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1;
                }
            }
        }
        let center = (sx / n as f64, sy / n as f64);
        let binary = Plane::new(mask.iter().map(|&b| b as u8 as f32).collect(), nx, ny, labels.spacing())?;
        Ok(MyocardialRegion {
            mask,
            weight: gaussian_blur_3x3(&binary)?,
            center,
        })
    }

    /// Pixels whose output mixes rotated and original intensities, or is
    /// fully rotated: weight > 0.
    pub fn affected(&self) -> Vec<bool> {
        self.weight.data().iter().map(|&w| w > 0.0).collect()
    }

    fn composite(&self, s: &Slice2D, angle_deg: f64) -> Result<Slice2D> {
        let rot = rotate_slice(s, angle_deg, self.center, Interpolation::Bilinear)?;
        let data = s
            .data()
            .iter()
            .zip(rot.data())
            .zip(self.weight.data())
            .map(|((&o, &r), &w)| {
                if w == 0.0 {
                    o
                } else if w == 1.0 {
                    r
                } else {
                    (w as f64 * r as f64 + (1.0 - w as f64) * o as f64) as f32
                }
            })
            .collect();
        Plane::new(data, s.nx(), s.ny(), s.spacing())
    }
}

fn check_same_grid(s: &Slice2D, labels: &LabelSlice) -> Result<()> {
    if s.nx() != labels.nx() || s.ny() != labels.ny() {
        return Err(Error::invalid(format!(
            "image {}x{} and labels {}x{} differ",
            s.nx(),
            s.ny(),
            labels.nx(),
            labels.ny()
        )));
    }
    Ok(())
}

/// Rotates the LV+myocardium by `angle_deg` (clockwise on screen) about the
/// LV centroid, blending into the unrotated surroundings with a blurred
/// mask. Labels are not changed.
pub fn rotate_myocardium(s: &Slice2D, labels: &LabelSlice, angle_deg: f64) -> Result<Slice2D> {
    check_same_grid(s, labels)?;
    MyocardialRegion::from_labels(labels)?.composite(s, angle_deg)
}

/// The original slice followed by one rotation per schedule angle; all pair
/// with the unmodified label slice.
pub fn generate_rotation_set(s: &Slice2D, labels: &LabelSlice, aug: &RotationAugmentation) -> Result<Vec<Slice2D>> {
    check_same_grid(s, labels)?;
    let region = MyocardialRegion::from_labels(labels)?;
    let mut out = vec![s.clone()];
    out.par_extend(
        aug.angles()
            .into_par_iter()
            .map(|a| region.composite(s, a))
            .collect::<Result<Vec<_>>>()?,
    );
    Ok(out)
}

/// Uniform angle in [-15, 15] degrees.
pub fn draw_global_angle(rng: &mut impl Rng) -> f64 {
    let m = constants::GLOBAL_ROTATION_MAX_DEG;
    rng.random_range(-m..=m)
}

/// Rotates image (bilinear) and labels (nearest) about the image center by
/// a seeded uniform angle. Returns the angle used.
pub fn global_rotation(s: &Slice2D, labels: &LabelSlice, seed: u64) -> Result<(Slice2D, LabelSlice, f64)> {
    check_same_grid(s, labels)?;
    let angle = draw_global_angle(&mut ChaCha8Rng::seed_from_u64(seed));
    let c = s.center();
    Ok((
        rotate_slice(s, angle, c, Interpolation::Bilinear)?,
        rotate_labels(labels, angle, c)?,
        angle,
    ))
}
