//! Per-slice geometric primitives: rotation, 3x3 binomial blur, in-plane
//! resampling and centered crop/pad.

use rayon::prelude::*;

use super::{LabelMap, LabelSlice, Plane, Slice2D, Volume};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    Nearest,
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn check_rotation_args<T: Copy>(s: &Plane<T>, angle_deg: f64, center: (f64, f64)) -> Result<()> {
    if !angle_deg.is_finite() {
        return Err(Error::invalid(format!(
            "rotation angle must be finite, got {angle_deg}"
        )));
    }
    let (cx, cy) = center;
    if !cx.is_finite() || !cy.is_finite() {
        return Err(Error::invalid(format!(
            "rotation center must be finite, got ({cx}, {cy})"
        )));
    }
    let (mx, my) = ((s.nx() - 1) as f64, (s.ny() - 1) as f64);
    if !(0.0..=mx).contains(&cx) || !(0.0..=my).contains(&cy) {
        return Err(Error::invalid(format!(
            "rotation center ({cx}, {cy}) outside image bounds [0, {mx}] x [0, {my}]"
        )));
    }
    Ok(())
}

/// Maps every output pixel back to its source location under a rotation of
/// `angle_deg` about `center` and calls `sample` there.
fn inverse_rotate<T, F>(s: &Plane<T>, angle_deg: f64, center: (f64, f64), sample: F) -> Plane<T>
where
    T: Copy + Send + Sync,
    F: Fn(f64, f64) -> T + Sync,
{
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let (cx, cy) = center;
    let nx = s.nx();
    let mut data = Vec::with_capacity(nx * s.ny());
    data.par_extend((0..nx * s.ny()).into_par_iter().map(|i| {
        let dx = (i % nx) as f64 - cx;
        let dy = (i / nx) as f64 - cy;
        // Inverse of p' = R(angle) p.
        let qx = cos * dx + sin * dy + cx;
        let qy = -sin * dx + cos * dy + cy;
        sample(qx, qy)
    }));
    Plane {
        data,
        nx,
        ny: s.ny(),
        spacing: s.spacing(),
    }
}

fn sample_nearest_zero<T: Copy + Default>(s: &Plane<T>, qx: f64, qy: f64) -> T {
    let (x, y) = (qx.round(), qy.round());
    if x < 0.0 || y < 0.0 || x >= s.nx() as f64 || y >= s.ny() as f64 {
        T::default()
    } else {
        s.get(x as usize, y as usize)
    }
}

fn sample_bilinear_zero(s: &Slice2D, qx: f64, qy: f64) -> f32 {
    let (x0, y0) = (qx.floor(), qy.floor());
    let (fx, fy) = (qx - x0, qy - y0);
    let (nx, ny) = (s.nx() as i64, s.ny() as i64);
    let (x0, y0) = (x0 as i64, y0 as i64);
    if x0 < -1 || y0 < -1 || x0 >= nx || y0 >= ny {
        return 0.0;
    }
    let at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= nx || y >= ny {
            0.0
        } else {
            s.get(x as usize, y as usize) as f64
        }
    };
    let top = lerp(at(x0, y0), at(x0 + 1, y0), fx);
    let bottom = lerp(at(x0, y0 + 1), at(x0 + 1, y0 + 1), fx);
    lerp(top, bottom, fy) as f32
}

/// Rotates an intensity slice by `angle_deg` (clockwise on screen) about
/// `center`, given in pixel coordinates. Samples falling outside the
/// source are zero.
pub fn rotate_slice(s: &Slice2D, angle_deg: f64, center: (f64, f64), interp: Interpolation) -> Result<Slice2D> {
    check_rotation_args(s, angle_deg, center)?;
    if angle_deg == 0.0 {
        return Ok(s.clone());
    }
    Ok(match interp {
        Interpolation::Bilinear => inverse_rotate(s, angle_deg, center, |qx, qy| sample_bilinear_zero(s, qx, qy)),
        Interpolation::Nearest => inverse_rotate(s, angle_deg, center, |qx, qy| sample_nearest_zero(s, qx, qy)),
    })
}

/// Nearest-neighbour rotation of a label slice; out-of-source samples become
/// background.
pub fn rotate_labels(s: &LabelSlice, angle_deg: f64, center: (f64, f64)) -> Result<LabelSlice> {
    check_rotation_args(s, angle_deg, center)?;
    if angle_deg == 0.0 {
        return Ok(s.clone());
    }
    Ok(inverse_rotate(s, angle_deg, center, |qx, qy| {
        sample_nearest_zero(s, qx, qy)
    }))
}

/// Convolves with the normalized binomial kernel [[1,2,1],[2,4,2],[1,2,1]]/16
/// using edge replication at the borders.
pub fn gaussian_blur_3x3(s: &Slice2D) -> Result<Slice2D> {
    let (nx, ny) = (s.nx(), s.ny());
    if nx < 3 || ny < 3 {
        return Err(Error::invalid(format!(
            "3x3 blur needs a slice of at least 3x3, got {nx}x{ny}"
        )));
    }
    const W: [f64; 3] = [1.0, 2.0, 1.0];
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut data = vec![0.0f32; nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            let mut acc = 0.0f64;
            for (j, wy) in W.iter().enumerate() {
                let yy = clamp(y as isize + j as isize - 1, ny);
                for (i, wx) in W.iter().enumerate() {
                    let xx = clamp(x as isize + i as isize - 1, nx);
                    acc += wx * wy * s.get(xx, yy) as f64;
                }
            }
            data[x + y * nx] = (acc / 16.0) as f32;
        }
    }
    Plane::new(data, nx, ny, s.spacing())
}

/// Number of samples after resampling `n` samples at `spacing` onto a grid of
/// `target` spacing (rounded to nearest, at least 1).
pub fn resampled_extent(n: usize, spacing: f64, target: f64) -> usize {
    ((n as f64 * spacing / target).round() as usize).max(1)
}

fn check_target(target: (f64, f64)) -> Result<()> {
    if target.0.is_finite() && target.1.is_finite() && target.0 > 0.0 && target.1 > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "target spacing must be finite and positive, got {target:?}"
        )))
    }
}

/// Source coordinate (pixel-center aligned) for output index `i`.
#[inline]
fn source_coord(i: usize, ratio: f64, n: usize) -> f64 {
    ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (n - 1) as f64)
}

fn resample_plane_bilinear(s: &Slice2D, target: (f64, f64)) -> Slice2D {
    let [sx, sy] = s.spacing();
    let (nx, ny) = (s.nx(), s.ny());
    let (ox, oy) = (resampled_extent(nx, sx, target.0), resampled_extent(ny, sy, target.1));
    let (rx, ry) = (target.0 / sx, target.1 / sy);
    let mut data = Vec::with_capacity(ox * oy);
    for j in 0..oy {
        let qy = source_coord(j, ry, ny);
        let y0 = qy.floor() as usize;
        let y1 = (y0 + 1).min(ny - 1);
        let fy = qy - y0 as f64;
        for i in 0..ox {
            let qx = source_coord(i, rx, nx);
            let x0 = qx.floor() as usize;
            let x1 = (x0 + 1).min(nx - 1);
            let fx = qx - x0 as f64;
            let top = lerp(s.get(x0, y0) as f64, s.get(x1, y0) as f64, fx);
            let bottom = lerp(s.get(x0, y1) as f64, s.get(x1, y1) as f64, fx);
            data.push(lerp(top, bottom, fy) as f32);
        }
    }
    Plane {
        data,
        nx: ox,
        ny: oy,
        spacing: [target.0, target.1],
    }
}

fn resample_plane_nearest<T: Copy>(s: &Plane<T>, target: (f64, f64)) -> Plane<T> {
    let [sx, sy] = s.spacing();
    let (nx, ny) = (s.nx(), s.ny());
    let (ox, oy) = (resampled_extent(nx, sx, target.0), resampled_extent(ny, sy, target.1));
    let (rx, ry) = (target.0 / sx, target.1 / sy);
    let mut data = Vec::with_capacity(ox * oy);
    for j in 0..oy {
        let y = source_coord(j, ry, ny).round() as usize;
        for i in 0..ox {
            let x = source_coord(i, rx, nx).round() as usize;
            data.push(s.get(x, y));
        }
    }
    Plane {
        data,
        nx: ox,
        ny: oy,
        spacing: [target.0, target.1],
    }
}

/// Bilinear in-plane resampling of every slice to `target` spacing (mm).
/// The z axis is left untouched.
pub fn resample_bilinear(v: &Volume, target: (f64, f64)) -> Result<Volume> {
    check_target(target)?;
    v.map_slices(|_, s| Ok(resample_plane_bilinear(s, target)))
}

/// Nearest-neighbour counterpart of [`resample_bilinear`] for label maps.
pub fn resample_labels_nearest(l: &LabelMap, target: (f64, f64)) -> Result<LabelMap> {
    check_target(target)?;
    let slices: Vec<_> = (0..l.dims()[2])
        .map(|z| resample_plane_nearest(&l.slice(z), target))
        .collect();
    LabelMap::from_slices(&slices, l.spacing()[2])
}

/// Offsets for mapping an axis of length `n` into `target`: returns
/// (source start, destination start, copied length).
fn axis_window(n: usize, target: usize) -> (usize, usize, usize) {
    if target <= n {
        ((n - target) / 2, 0, target)
    } else {
        (0, (target - n) / 2, n)
    }
}

fn crop_or_pad_plane<T: Copy + Default>(s: &[T], nx: usize, ny: usize, tx: usize, ty: usize) -> Vec<T> {
    let (sx0, dx0, lx) = axis_window(nx, tx);
    let (sy0, dy0, ly) = axis_window(ny, ty);
    let mut out = vec![T::default(); tx * ty];
    for j in 0..ly {
        let src = (sy0 + j) * nx + sx0;
        let dst = (dy0 + j) * tx + dx0;
        out[dst..dst + lx].copy_from_slice(&s[src..src + lx]);
    }
    out
}

fn check_target_size(nx: usize, ny: usize) -> Result<()> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid(format!("target size must be >= 1, got {nx}x{ny}")));
    }
    Ok(())
}

/// Crops or zero-pads every slice to `nx` x `ny`, keeping the content
/// centered. With an odd difference the extra row/column lands on the
/// high-index side.
pub fn crop_or_pad_center(v: &Volume, nx: usize, ny: usize) -> Result<Volume> {
    check_target_size(nx, ny)?;
    let [sx, sy, sz] = v.dims();
    let plane = sx * sy;
    let data: Vec<f32> = (0..sz)
        .flat_map(|z| crop_or_pad_plane(&v.data()[z * plane..(z + 1) * plane], sx, sy, nx, ny))
        .collect();
    Volume::new(data, [nx, ny, sz], v.spacing(), v.sequence(), v.patient_id().to_owned())
}

pub fn crop_or_pad_labels(l: &LabelMap, nx: usize, ny: usize) -> Result<LabelMap> {
    check_target_size(nx, ny)?;
    let [sx, sy, sz] = l.dims();
    let plane = sx * sy;
    let data: Vec<u8> = (0..sz)
        .flat_map(|z| crop_or_pad_plane(&l.data()[z * plane..(z + 1) * plane], sx, sy, nx, ny))
        .collect();
    LabelMap::new(data, [nx, ny, sz], l.spacing())
}
