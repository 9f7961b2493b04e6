//! Sampled X-ray transform, its adjoint, and Fourier-side norms.
//!
//! Planar grids are cell-centered on `[-2,2)^2`. Cylinder grids sample
//! `theta = a / n_theta` and cell-centered `r` bins on `[-2,2)`. The X-ray
//! transform integrates the pixelwise-constant interpolant of a planar grid
//! exactly along each line and averages the result over each `r` bin; the
//! adjoint uses the same pixel-to-bin weights, so the two are exact transposes
//! for the discrete inner products.

pub mod fft;
mod norms;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use norms::{
    mixed_fourier, riesz_energy_fourier, riesz_gamma, slice_identity_residual, smoothing_ratio,
    smoothing_ratio_canonical, smoothing_ratios, sobolev_norm_cylinder, sobolev_norm_plane,
    zero_bin_excluded, SpectrumCylinder, DELTA_RHO,
};

pub const EXTENT: f64 = 4.0;
pub const SUPPORT_RADIUS: f64 = 1.5;
/// Largest admissible share of `sum |g|` sitting outside `B(SUPPORT_RADIUS)`.
pub const SUPPORT_LEAK_TOL: f64 = 1e-3;

/// Real samples at the cell centers of an `n x n` grid on `[-2,2)^2`, row-major in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarGrid {
    pub n: usize,
    pub values: Vec<f64>,
}

/// Complex samples `f(a / n_theta, -2 + (j + 1/2) h_r)`, row-major in `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderGrid {
    pub n_theta: usize,
    pub n_r: usize,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlanarRecord {
    n: usize,
    extent: [f64; 2],
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CylinderRecord {
    n_theta: usize,
    n_r: usize,
    extent: [f64; 2],
    values: Vec<[f64; 2]>,
}

fn check_size(n: usize) -> Result<()> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::Resolution(format!(
            "grid size {n} must be a power of two >= 16"
        )));
    }
    Ok(())
}

impl PlanarGrid {
    pub fn zeros(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self {
            n,
            values: vec![0.0; n * n],
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Result<Self> {
        check_size(n)?;
        let h = EXTENT / n as f64;
        let values = (0..n * n)
            .into_par_iter()
            .map(|i| {
                f(
                    -2.0 + ((i % n) as f64 + 0.5) * h,
                    -2.0 + ((i / n) as f64 + 0.5) * h,
                )
            })
            .collect();
        Ok(Self { n, values })
    }

    pub fn spacing(&self) -> f64 {
        EXTENT / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -2.0 + (i as f64 + 0.5) * self.spacing()
    }

    /// `h^2 sum a b`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        let h = self.spacing();
        h * h
            * pairwise_rows(self.n, |row| {
                (0..self.n)
                    .map(|i| self.values[row * self.n + i] * other.values[row * self.n + i])
                    .sum()
            })
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn integral(&self) -> f64 {
        let h = self.spacing();
        h * h
            * pairwise_rows(self.n, |row| {
                self.values[row * self.n..(row + 1) * self.n].iter().sum()
            })
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|a| a * c).collect(),
        }
    }

    /// Fraction of `sum |g|` carried by samples with `|z| > radius`.
    pub fn mass_outside(&self, radius: f64) -> f64 {
        let mut out = 0.0;
        let mut total = 0.0;
        for iy in 0..self.n {
            let y = self.coord(iy);
            for ix in 0..self.n {
                let v = self.values[iy * self.n + ix].abs();
                total += v;
                if self.coord(ix).hypot(y) > radius {
                    out += v;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            out / total
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PlanarRecord {
            n: self.n,
            extent: [-2.0, 2.0],
            values: self.values.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: PlanarRecord = serde_json::from_str(s)?;
        check_size(rec.n)?;
        if rec.values.len() != rec.n * rec.n || rec.extent != [-2.0, 2.0] {
            return Err(Error::Invalid(
                "planar grid record has the wrong shape".into(),
            ));
        }
        Ok(Self {
            n: rec.n,
            values: rec.values,
        })
    }
}

impl CylinderGrid {
    pub fn zeros(n_theta: usize, n_r: usize) -> Result<Self> {
        check_size(n_theta)?;
        check_size(n_r)?;
        Ok(Self {
            n_theta,
            n_r,
            values: vec![Complex64::new(0.0, 0.0); n_theta * n_r],
        })
    }

    pub fn from_fn(
        n_theta: usize,
        n_r: usize,
        f: impl Fn(f64, f64) -> Complex64 + Sync + Send,
    ) -> Result<Self> {
        let mut g = Self::zeros(n_theta, n_r)?;
        let h = EXTENT / n_r as f64;
        g.values.par_iter_mut().enumerate().for_each(|(i, v)| {
            *v = f(
                (i / n_r) as f64 / n_theta as f64,
                -2.0 + ((i % n_r) as f64 + 0.5) * h,
            );
        });
        Ok(g)
    }

    pub fn r_spacing(&self) -> f64 {
        EXTENT / self.n_r as f64
    }

    pub fn theta(&self, a: usize) -> f64 {
        a as f64 / self.n_theta as f64
    }

    pub fn r(&self, j: usize) -> f64 {
        -2.0 + (j as f64 + 0.5) * self.r_spacing()
    }

    pub fn at(&self, a: usize, j: usize) -> Complex64 {
        self.values[a * self.n_r + j]
    }

    /// `(1/n_theta) h_r sum a conj(b)`, real part.
    pub fn inner(&self, other: &Self) -> f64 {
        assert!(self.n_theta == other.n_theta && self.n_r == other.n_r);
        let n_r = self.n_r;
        let s = pairwise_rows(self.n_theta, |a| {
            (0..n_r)
                .map(|j| (self.values[a * n_r + j] * other.values[a * n_r + j].conj()).re)
                .sum()
        });
        s * self.r_spacing() / self.n_theta as f64
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Linear interpolation in `r` on row `a`, zero outside the node range.
    pub fn interpolate_r(&self, a: usize, r: f64) -> Complex64 {
        let u = (r + 2.0) / self.r_spacing() - 0.5;
        let j = u.floor();
        if j < 0.0 || j + 1.0 >= self.n_r as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let t = u - j;
        let j = j as usize;
        self.at(a, j) * (1.0 - t) + self.at(a, j + 1) * t
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CylinderRecord {
            n_theta: self.n_theta,
            n_r: self.n_r,
            extent: [-2.0, 2.0],
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: CylinderRecord = serde_json::from_str(s)?;
        let mut g = Self::zeros(rec.n_theta, rec.n_r)?;
        if rec.values.len() != g.values.len() || rec.extent != [-2.0, 2.0] {
            return Err(Error::Invalid(
                "cylinder grid record has the wrong shape".into(),
            ));
        }
        g.values = rec
            .values
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        Ok(g)
    }
}

/// Row sums evaluated in parallel and added in row order.
fn pairwise_rows(rows: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    let parts: Vec<f64> = (0..rows).into_par_iter().map(f).collect();
    crate::measures::neumaier_sum(parts)
}

/// Footprint of one pixel along direction `theta`: the projection of a square of
/// side `h` is a trapezoid, the convolution of boxes of widths `h |cos|` and `h |sin|`.
#[derive(Clone, Copy)]
struct Footprint {
    wide: f64,
    narrow: f64,
    half: f64,
}

impl Footprint {
    fn new(theta: f64, h: f64) -> Self {
        let (s, c) = (TAU * theta).sin_cos();
        let (a, b) = ((h * c).abs(), (h * s).abs());
        let (wide, narrow) = if a >= b { (a, b) } else { (b, a) };
        Self {
            wide,
            narrow,
            half: 0.5 * (wide + narrow),
        }
    }

    /// Mass of the unit-area trapezoid left of `t`, measured from its left end.
    #[inline]
    fn cdf(&self, t: f64) -> f64 {
        let (a, b) = (self.wide, self.narrow);
        if t <= 0.0 {
            0.0
        } else if t <= b {
            t * t / (2.0 * a * b)
        } else if t <= a {
            (t - 0.5 * b) / a
        } else if t < a + b {
            let u = a + b - t;
            1.0 - u * u / (2.0 * a * b)
        } else {
            1.0
        }
    }

    /// Calls `f(j, w)` for every `r` bin met by the footprint centred at `p`; bins
    /// outside the grid are clamped to the end bins, and the weights sum to 1.
    #[inline]
    fn for_each_bin(&self, p: f64, n_r: usize, h_r: f64, mut f: impl FnMut(usize, f64)) {
        let lo = p - self.half;
        let j0 = ((lo + 2.0) / h_r).floor() as i64;
        let j1 = ((p + self.half + 2.0) / h_r).floor() as i64;
        let last = n_r as i64 - 1;
        let mut prev = 0.0;
        for j in j0..=j1 {
            let c = if j == j1 {
                1.0
            } else {
                self.cdf(-2.0 + (j + 1) as f64 * h_r - lo)
            };
            let w = c - prev;
            prev = c;
            if w != 0.0 {
                f(j.clamp(0, last) as usize, w);
            }
        }
    }
}

/// X-ray transform sampled on an `n x n` cylinder grid.
pub fn xray(g: &PlanarGrid) -> Result<CylinderGrid> {
    xray_with(g, g.n, g.n)
}

/// X-ray transform of the pixelwise-constant interpolant of `g`, averaged over `r` bins.
pub fn xray_with(g: &PlanarGrid, n_theta: usize, n_r: usize) -> Result<CylinderGrid> {
    let leak = g.mass_outside(SUPPORT_RADIUS);
    if leak > SUPPORT_LEAK_TOL {
        return Err(Error::SupportTooLarge(format!(
            "{:.2e} of the mass lies outside B({SUPPORT_RADIUS})",
            leak
        )));
    }
    let mut out = CylinderGrid::zeros(n_theta, n_r)?;
    let n = g.n;
    let h = g.spacing();
    let h_r = out.r_spacing();
    let coords: Vec<f64> = (0..n).map(|i| g.coord(i)).collect();
    let nonzero: Vec<(usize, usize)> = (0..n * n)
        .filter(|&i| g.values[i] != 0.0)
        .map(|i| (i % n, i / n))
        .collect();
    let scale = h * h / h_r;
    out.values
        .par_chunks_mut(n_r)
        .enumerate()
        .for_each(|(a, row)| {
            let theta = a as f64 / n_theta as f64;
            let (s, c) = (TAU * theta).sin_cos();
            let fp = Footprint::new(theta, h);
            let mut acc = vec![0.0f64; n_r];
            for &(ix, iy) in &nonzero {
                let v = g.values[iy * n + ix];
                fp.for_each_bin(coords[ix] * c + coords[iy] * s, n_r, h_r, |j, w| {
                    acc[j] += w * v
                });
            }
            for (o, v) in row.iter_mut().zip(acc) {
                *o = Complex64::new(v * scale, 0.0);
            }
        });
    Ok(out)
}

/// Adjoint X-ray transform onto an `n x n` planar grid; `f` must be real.
///
/// Each pixel receives the angular mean of `f` averaged over the pixel footprint.
pub fn adjoint_xray(f: &CylinderGrid, n: usize) -> Result<PlanarGrid> {
    if !f.is_real() {
        return Err(Error::Invalid(
            "adjoint of a complex-valued cylinder function".into(),
        ));
    }
    let mut out = PlanarGrid::zeros(n)?;
    let h = out.spacing();
    let h_r = f.r_spacing();
    let angles: Vec<(f64, f64, Footprint)> = (0..f.n_theta)
        .map(|a| {
            let theta = a as f64 / f.n_theta as f64;
            let (s, c) = (TAU * theta).sin_cos();
            (c, s, Footprint::new(theta, h))
        })
        .collect();
    let coords: Vec<f64> = (0..n).map(|i| out.coord(i)).collect();
    let n_r = f.n_r;
    out.values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(iy, row)| {
            let y = coords[iy];
            for (ix, o) in row.iter_mut().enumerate() {
                let x = coords[ix];
                let mut acc = 0.0;
                for (a, (c, s, fp)) in angles.iter().enumerate() {
                    let base = &f.values[a * n_r..(a + 1) * n_r];
                    fp.for_each_bin(x * c + y * s, n_r, h_r, |j, w| acc += w * base[j].re);
                }
                *o = acc / f.n_theta as f64;
            }
        });
    Ok(out)
}

fn smooth_step_profile(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// The bump `exp(-1 / (1 - |u|^2))` for `|u| < 1`, zero elsewhere.
pub fn bump_profile(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// Smooth cutoff equal to 1 on `B(1)` and vanishing outside `B(1.5)`.
pub fn canonical_cutoff(x: f64, y: f64) -> f64 {
    let t = (x.hypot(y) - 1.0) / 0.5;
    let a = smooth_step_profile(1.0 - t);
    let b = smooth_step_profile(t);
    a / (a + b)
}

pub fn cutoff_grid(n: usize) -> Result<PlanarGrid> {
    PlanarGrid::from_fn(n, canonical_cutoff)
}

/// `exp(-pi |z|^2)`.
pub fn gaussian_grid(n: usize) -> Result<PlanarGrid> {
    PlanarGrid::from_fn(n, |x, y| (-PI * (x * x + y * y)).exp())
}

/// Radial bump of radius `width` centered at `(cx, cy)`.
pub fn bump_grid(n: usize, cx: f64, cy: f64, width: f64) -> Result<PlanarGrid> {
    PlanarGrid::from_fn(n, move |x, y| bump_profile((x - cx).hypot(y - cy) / width))
}

/// Indicator of the closed disk `B(0, radius)`.
pub fn disk_grid(n: usize, radius: f64) -> Result<PlanarGrid> {
    PlanarGrid::from_fn(n, move |x, y| if x.hypot(y) <= radius { 1.0 } else { 0.0 })
}

/// Sum of `k` bumps with random centres in `B(0.8)`, widths in `[0.15, 0.5)` and amplitudes in `[-1, 1)`.
pub fn random_bump_sum(n: usize, rng: &mut impl Rng, k: usize) -> Result<PlanarGrid> {
    let mut g = PlanarGrid::zeros(n)?;
    for _ in 0..k {
        let r = rng.gen_range(0.0..0.8);
        let a = rng.gen_range(0.0..TAU);
        let w = rng.gen_range(0.15..0.5);
        let amp = rng.gen_range(-1.0..1.0);
        let b = bump_grid(n, r * a.cos(), r * a.sin(), w)?;
        for (v, bv) in g.values.iter_mut().zip(&b.values) {
            *v += amp * bv;
        }
    }
    Ok(g)
}

/// One bump with a random centre in `B(1)` and width in `[0.05, 0.3]`.
pub fn random_bump(n: usize, rng: &mut impl Rng) -> Result<PlanarGrid> {
    let r = rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..TAU);
    let w = rng.gen_range(0.05..=0.3);
    bump_grid(n, r * a.cos(), r * a.sin(), w)
}

/// Real smooth function on the cylinder: four angular modes times Gaussians in `r`.
pub fn random_smooth_cylinder(
    n_theta: usize,
    n_r: usize,
    rng: &mut impl Rng,
) -> Result<CylinderGrid> {
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0..6) as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.2..1.2),
                rng.gen_range(0.2..0.6),
            )
        })
        .collect();
    CylinderGrid::from_fn(n_theta, n_r, move |th, r| {
        let v: f64 = modes
            .iter()
            .map(|&(k, a, c, w)| a * (TAU * k * th).cos() * (-((r - c) / w).powi(2)).exp())
            .sum();
        Complex64::new(v, 0.0)
    })
}
