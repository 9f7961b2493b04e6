use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use super::fft::{fft2, fft_cols, fft_rows, signed_bin};
use super::{cutoff_grid, xray, CylinderGrid, PlanarGrid, EXTENT};
use crate::error::{check_exponent, Error, Result};
use crate::measures::{neumaier_sum, AtomMeasure};

/// Frequency step of both the cylinder `r` transform and the planar transform.
pub const DELTA_RHO: f64 = 1.0 / EXTENT;

/// Coefficients `F(n, rho_k)` in FFT order: row `a` is mode `signed_bin(a, n_theta)`,
/// column `k` is `rho = signed_bin(k, n_r) / 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCylinder {
    pub n_theta: usize,
    pub n_r: usize,
    pub values: Vec<Complex64>,
}

impl SpectrumCylinder {
    pub fn mode(&self, a: usize) -> i64 {
        signed_bin(a, self.n_theta)
    }

    pub fn rho(&self, k: usize) -> f64 {
        signed_bin(k, self.n_r) as f64 * DELTA_RHO
    }

    /// Coefficient at integer mode `n` and signed bin `k`.
    pub fn get(&self, n: i64, k: i64) -> Complex64 {
        let a = n.rem_euclid(self.n_theta as i64) as usize;
        let j = k.rem_euclid(self.n_r as i64) as usize;
        self.values[a * self.n_r + j]
    }

    /// `sum |F|^2 Delta rho`.
    pub fn energy(&self) -> f64 {
        weighted_rows(self.n_theta, |a| {
            (0..self.n_r)
                .map(|k| self.values[a * self.n_r + k].norm_sqr())
                .sum()
        }) * DELTA_RHO
    }
}

fn weighted_rows(rows: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    let parts: Vec<f64> = (0..rows).into_par_iter().map(f).collect();
    neumaier_sum(parts)
}

/// Phase turning a DFT over cell-centered nodes `-2 + (j + 1/2) h` into `h sum e^{-2 pi i rho r_j}`.
fn center_phase(k: i64, n: usize) -> Complex64 {
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Complex64::from_polar(sign, -PI * k as f64 / n as f64)
}

/// Fourier series in `theta`, Fourier transform in `r`.
pub fn mixed_fourier(f: &CylinderGrid) -> SpectrumCylinder {
    let (nt, nr) = (f.n_theta, f.n_r);
    let mut data = f.values.clone();
    fft_rows(&mut data, nr, FftDirection::Forward);
    fft_cols(&mut data, nr, nt, FftDirection::Forward);
    let h = f.r_spacing();
    let phases: Vec<Complex64> = (0..nr)
        .map(|k| center_phase(signed_bin(k, nr), nr) * (h / nt as f64))
        .collect();
    data.par_chunks_mut(nr).for_each(|row| {
        for (v, p) in row.iter_mut().zip(&phases) {
            *v *= p;
        }
    });
    SpectrumCylinder {
        n_theta: nt,
        n_r: nr,
        values: data,
    }
}

/// Whether the zero-frequency cell is dropped at exponent `s` (only at `s <= -1/2`).
pub fn zero_bin_excluded(s: f64) -> bool {
    s <= -0.5
}

/// Mean of `|xi|^e` over the square `[-half, half]^2`, `e > -2`.
fn square_bin_average(half: f64, e: f64) -> f64 {
    // (2 / (e + 2)) int_0^{pi/4} sec^{e+2}(phi) dphi, composite Simpson
    let m = 2048;
    let step = (PI / 4.0) / m as f64;
    let f = |phi: f64| phi.cos().powf(-(e + 2.0));
    let mut acc = f(0.0) + f(PI / 4.0);
    for i in 1..m {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * step);
    }
    half.powf(e) * (2.0 / (e + 2.0)) * acc * step / 3.0
}

/// Bins within this many steps of the origin (in each axis) use bin averages of the weight.
const NEAR_BINS: i64 = 8;

/// Bin averages of `|xi|^e` on the unit lattice for `|kx|, |ky| <= NEAR_BINS`, row-major.
fn near_origin_averages(e: f64) -> Vec<f64> {
    let side = (2 * NEAR_BINS + 1) as usize;
    let sub = 32;
    let mut out = vec![0.0; side * side];
    for (idx, v) in out.iter_mut().enumerate() {
        let kx = (idx % side) as i64 - NEAR_BINS;
        let ky = (idx / side) as i64 - NEAR_BINS;
        *v = if kx == 0 && ky == 0 {
            square_bin_average(0.5, e)
        } else {
            let mut acc = 0.0;
            for i in 0..sub {
                for j in 0..sub {
                    let x = kx as f64 - 0.5 + (i as f64 + 0.5) / sub as f64;
                    let y = ky as f64 - 0.5 + (j as f64 + 0.5) / sub as f64;
                    acc += (x * x + y * y).powf(0.5 * e);
                }
            }
            acc / (sub * sub) as f64
        };
    }
    out
}

/// Weight `|xi|^e` for the planar bin `(kx, ky)` of step `dxi`, bin-averaged near the origin.
fn plane_weight(kx: i64, ky: i64, dxi: f64, e: f64, near: &[f64]) -> f64 {
    if e == 0.0 {
        return 1.0;
    }
    if kx.abs() <= NEAR_BINS && ky.abs() <= NEAR_BINS {
        let side = 2 * NEAR_BINS + 1;
        return dxi.powf(e) * near[((ky + NEAR_BINS) * side + kx + NEAR_BINS) as usize];
    }
    let (x, y) = (kx as f64 * dxi, ky as f64 * dxi);
    (x * x + y * y).powf(0.5 * e)
}

/// Squared homogeneous Sobolev norm `sum_n int |F f(n, rho)|^2 |(n, rho)|^{2s} d rho`.
///
/// For `-1/2 < s < 0` the zero cell uses the bin average of `|rho|^{2s}`; for `s <= -1/2` it is dropped.
pub fn sobolev_norm_cylinder(f: &CylinderGrid, s: f64) -> Result<f64> {
    check_exponent(s, -1.0, 1.0, false, false, "[-1, 1]")?;
    Ok(cylinder_norm_of(&mixed_fourier(f), s))
}

fn cylinder_norm_of(spec: &SpectrumCylinder, s: f64) -> f64 {
    let nr = spec.n_r;
    let zero_weight = if s >= 0.0 {
        if s == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if zero_bin_excluded(s) {
        0.0
    } else {
        (DELTA_RHO / 2.0).powf(2.0 * s) / (2.0 * s + 1.0)
    };
    let total = weighted_rows(spec.n_theta, |a| {
        let n = spec.mode(a) as f64;
        neumaier_sum((0..nr).map(|k| {
            let rho = spec.rho(k);
            let w = if a == 0 && k == 0 {
                zero_weight
            } else {
                (n * n + rho * rho).powf(s)
            };
            spec.values[a * nr + k].norm_sqr() * w
        }))
    });
    total * DELTA_RHO
}

/// Zero-padding factor of the planar transform: frequency step `1 / (4 pad)`.
pub fn plane_padding(n: usize) -> usize {
    if n <= 512 {
        4
    } else {
        2
    }
}

/// `|g^(xi)|^2` on the padded frequency lattice `xi = (kx, ky) / (4 pad)`, FFT order.
fn planar_power(g: &PlanarGrid, pad: usize) -> Vec<f64> {
    let n = g.n;
    let m = n * pad;
    let mut data = vec![Complex64::new(0.0, 0.0); m * m];
    for iy in 0..n {
        for ix in 0..n {
            data[iy * m + ix] = Complex64::new(g.values[iy * n + ix], 0.0);
        }
    }
    fft2(&mut data, m, m, FftDirection::Forward);
    let h2 = g.spacing() * g.spacing();
    data.into_par_iter()
        .map(|v| v.norm_sqr() * h2 * h2)
        .collect()
}

/// Squared homogeneous Sobolev norm `int |g^(xi)|^2 |xi|^{2s} d xi`; bins near the origin use
/// the bin average of `|xi|^{2s}`.
pub fn sobolev_norm_plane(g: &PlanarGrid, s: f64) -> Result<f64> {
    check_exponent(s, -1.0, 1.0, true, false, "(-1, 1]")?;
    let pad = plane_padding(g.n);
    Ok(plane_norm_of(&planar_power(g, pad), g.n * pad, pad, s))
}

fn plane_norm_of(power: &[f64], m: usize, pad: usize, s: f64) -> f64 {
    let dxi = DELTA_RHO / pad as f64;
    let near = near_origin_averages(2.0 * s);
    let total =
        weighted_rows(m, |ky| {
            let y = signed_bin(ky, m);
            neumaier_sum((0..m).map(|kx| {
                power[ky * m + kx] * plane_weight(signed_bin(kx, m), y, dxi, 2.0 * s, &near)
            }))
        });
    total * dxi * dxi
}

/// Largest lattice side used by [`riesz_energy_fourier`].
pub const MAX_FOURIER_LATTICE: usize = 4096;

/// `gamma(2, s) int_{|xi| <= 1/(4 delta)} |mu^(xi)|^2 |xi|^{s-2} d xi` with the atoms at cell centers.
pub fn riesz_energy_fourier(m: &AtomMeasure, s: f64) -> Result<f64> {
    check_exponent(s, 0.0, 2.0, true, true, "(0, 2)")?;
    if m.is_empty() {
        return Ok(0.0);
    }
    let (mut x0, mut x1, mut y0, mut y1) = (u64::MAX, 0, u64::MAX, 0);
    for &(x, y, _) in m.atoms() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = ((x1 - x0).max(y1 - y0) + 1) as usize;
    let delta = m.delta();
    let p = (2 * span).next_power_of_two().max((2.0 / delta) as usize);
    if p > MAX_FOURIER_LATTICE {
        return Err(Error::Resolution(format!(
            "Fourier lattice of side {p} exceeds {MAX_FOURIER_LATTICE}"
        )));
    }
    let mut grid = vec![Complex64::new(0.0, 0.0); p * p];
    for &(x, y, w) in m.atoms() {
        grid[(y - y0) as usize * p + (x - x0) as usize] = Complex64::new(w, 0.0);
    }
    fft2(&mut grid, p, p, FftDirection::Forward);
    let dxi = 1.0 / (p as f64 * delta);
    let cutoff = 1.0 / (4.0 * delta);
    let e = s - 2.0;
    let near = near_origin_averages(e);
    let total = weighted_rows(p, |ky| {
        let y = signed_bin(ky, p);
        neumaier_sum((0..p).map(|kx| {
            let x = signed_bin(kx, p);
            if (x as f64).hypot(y as f64) * dxi <= cutoff {
                grid[ky * p + kx].norm_sqr() * plane_weight(x, y, dxi, e, &near)
            } else {
                0.0
            }
        }))
    });
    Ok(riesz_gamma(s) * total * dxi * dxi)
}

/// `pi^{s-1} Gamma((2-s)/2) / Gamma(s/2)`.
pub fn riesz_gamma(s: f64) -> f64 {
    PI.powf(s - 1.0) * libm::tgamma((2.0 - s) / 2.0) / libm::tgamma(s / 2.0)
}

/// `g^(xi)` by a direct separable sum over the cell centers.
fn planar_transform_at(g: &PlanarGrid, xi: (f64, f64)) -> Complex64 {
    let n = g.n;
    let h = g.spacing();
    let ex: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0, -TAU * xi.0 * g.coord(i)))
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for iy in 0..n {
        let row = &g.values[iy * n..(iy + 1) * n];
        let inner: Complex64 = row.iter().zip(&ex).map(|(&v, e)| e * v).sum();
        acc += inner * Complex64::from_polar(1.0, -TAU * xi.1 * g.coord(iy));
    }
    acc * h * h
}

/// Angles `(2i + 1) / 16` and at most 129 frequencies `|rho| <= n / 8` per angle.
fn residual_samples(n_theta: usize, n_r: usize) -> Vec<(usize, i64)> {
    let step = (n_r / 128).max(1) as i64;
    let half = (n_r / 2) as i64;
    let mut out = Vec::new();
    for i in 0..8 {
        let a = (2 * i + 1) * n_theta / 16;
        let mut k = -half;
        while k <= half {
            if k < half {
                out.push((a, k));
            }
            k += step;
        }
    }
    out
}

/// Maximum of `|(Rg)~(theta, rho) - g^(rho e_theta)|` over a fixed sample of `(theta, rho)`.
pub fn slice_identity_residual(g: &PlanarGrid) -> Result<f64> {
    let rg = xray(g)?;
    let (nt, nr) = (rg.n_theta, rg.n_r);
    let mut rows = rg.values.clone();
    fft_rows(&mut rows, nr, FftDirection::Forward);
    let h = rg.r_spacing();
    let diffs: Vec<f64> = residual_samples(nt, nr)
        .into_par_iter()
        .map(|(a, k)| {
            let j = k.rem_euclid(nr as i64) as usize;
            let lhs = rows[a * nr + j] * center_phase(k, nr) * h;
            let rho = k as f64 * (1.0 / (nr as f64 * h));
            let (sn, cs) = (TAU * rg.theta(a)).sin_cos();
            let rhs = planar_transform_at(g, (rho * cs, rho * sn));
            (lhs - rhs).norm()
        })
        .collect();
    Ok(diffs.into_iter().fold(0.0, f64::max))
}

/// `||R(g chi)||_{H^{s+1/2}} / ||g||_{H^s}`.
pub fn smoothing_ratio(g: &PlanarGrid, s: f64, chi: &PlanarGrid) -> Result<f64> {
    Ok(smoothing_ratios(g, &[s], chi)?[0])
}

/// [`smoothing_ratio`] for several exponents, sharing the transforms.
pub fn smoothing_ratios(g: &PlanarGrid, ss: &[f64], chi: &PlanarGrid) -> Result<Vec<f64>> {
    for &s in ss {
        check_exponent(s, -0.5, 0.5, false, false, "[-1/2, 1/2]")?;
    }
    if chi.n != g.n {
        return Err(Error::Invalid(format!(
            "cutoff grid size {} differs from {}",
            chi.n, g.n
        )));
    }
    let pad = plane_padding(g.n);
    let power = planar_power(g, pad);
    let spec = mixed_fourier(&xray(&g.mul(chi))?);
    ss.iter()
        .map(|&s| {
            let den = plane_norm_of(&power, g.n * pad, pad, s);
            if !(den > 0.0) {
                return Err(Error::ZeroDenominator);
            }
            Ok((cylinder_norm_of(&spec, s + 0.5) / den).sqrt())
        })
        .collect()
}

/// [`smoothing_ratio`] with the canonical cutoff.
pub fn smoothing_ratio_canonical(g: &PlanarGrid, s: f64) -> Result<f64> {
    smoothing_ratio(g, s, &cutoff_grid(g.n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Root};
    use crate::measures::riesz_energy_direct;
    use crate::spectral::{bump_grid, disk_grid, gaussian_grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut acc = f(a) + f(b);
        for i in 1..m {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn pure_mode_is_isolated() {
        let phi = |r: f64| (-8.0 * r * r).exp();
        let f = CylinderGrid::from_fn(64, 128, |t, r| Complex64::from_polar(phi(r), TAU * 3.0 * t))
            .unwrap();
        let spec = mixed_fourier(&f);
        for a in 0..64 {
            for k in 0..128 {
                if spec.mode(a) != 3 {
                    assert!(spec.values[a * 128 + k].norm() <= 1e-10);
                }
            }
        }
        assert!(spec.get(3, 0).norm() > 0.1);
    }

    #[test]
    fn hermitian_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (nt, nr) = (32, 64);
        let vals: Vec<f64> = (0..nt * nr).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = CylinderGrid::from_fn(nt, nr, |t, r| {
            let a = (t * nt as f64).round() as usize;
            let j = ((r + 2.0) / (4.0 / nr as f64) - 0.5).round() as usize;
            Complex64::new(vals[a * nr + j], 0.0)
        })
        .unwrap();
        let spec = mixed_fourier(&f);
        for n in -(nt as i64) / 2 + 1..(nt as i64) / 2 {
            for k in -(nr as i64) / 2 + 1..(nr as i64) / 2 {
                assert!((spec.get(-n, -k) - spec.get(n, k).conj()).norm() <= 1e-12);
            }
        }
        let direct: f64 = vals.iter().map(|v| v * v).sum::<f64>() * (4.0 / nr as f64) / nt as f64;
        assert!((spec.energy() / direct - 1.0).abs() <= 1e-10);
        assert!((sobolev_norm_cylinder(&f, 0.0).unwrap() / direct - 1.0).abs() <= 1e-10);
        let c = 2.7;
        let scaled = CylinderGrid {
            values: f.values.iter().map(|v| v * c).collect(),
            ..f.clone()
        };
        for s in [-0.3, 0.5, 1.0] {
            let a = sobolev_norm_cylinder(&f, s).unwrap();
            let b = sobolev_norm_cylinder(&scaled, s).unwrap();
            assert!((b / (c * c * a) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn tight_gaussian_mode_norm() {
        let (rho0, sigma) = (8.0, 0.7);
        let f = CylinderGrid::from_fn(32, 256, |t, r| {
            Complex64::from_polar(
                (-PI * (r / sigma).powi(2)).exp(),
                TAU * (3.0 * t + rho0 * r),
            )
        })
        .unwrap();
        for s in [0.25, 0.5, 1.0] {
            let got = sobolev_norm_cylinder(&f, s).unwrap();
            // oracle: |phi^(rho)|^2 = sigma^2 exp(-2 pi sigma^2 (rho - rho0)^2)
            let oracle = simpson(
                |rho| {
                    sigma
                        * sigma
                        * (-2.0 * PI * sigma * sigma * (rho - rho0).powi(2)).exp()
                        * (9.0 + rho * rho).powf(s)
                },
                rho0 - 8.0,
                rho0 + 8.0,
                4000,
            );
            assert!((got / oracle - 1.0).abs() <= 1e-6, "{got} {oracle}");
            let approx = (9.0 + rho0 * rho0).powf(s) * sigma / 2f64.sqrt();
            assert!((got / approx - 1.0).abs() <= 0.05);
        }
    }

    #[test]
    fn zero_bin_rule() {
        assert!(zero_bin_excluded(-0.5) && !zero_bin_excluded(-0.49));
        let f = CylinderGrid::from_fn(16, 64, |_, r| Complex64::new((-4.0 * r * r).exp(), 0.0))
            .unwrap();
        for s in [-1.0, -0.5, -0.4, -0.1] {
            assert!(sobolev_norm_cylinder(&f, s).unwrap().is_finite());
        }
        let avg = square_bin_average(0.5, -1.0);
        // oracle: fine midpoint rule over the square
        let m = 2000;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = -0.5 + (i as f64 + 0.5) / m as f64;
                let y = -0.5 + (j as f64 + 0.5) / m as f64;
                acc += 1.0 / x.hypot(y);
            }
        }
        assert!((avg / (acc / (m * m) as f64) - 1.0).abs() < 2e-3);
    }

    #[test]
    fn gaussian_plane_norms() {
        let g = gaussian_grid(512).unwrap();
        assert!((sobolev_norm_plane(&g, 0.0).unwrap() - 0.5).abs() <= 1e-4);
        assert!((sobolev_norm_plane(&g, 0.0).unwrap() / g.l2_norm_sq() - 1.0).abs() <= 1e-10);
        for s in [0.5, -0.5, 1.0] {
            let oracle = TAU
                * simpson(
                    |r| (-TAU * r * r).exp() * r.powf(2.0 * s + 1.0),
                    0.0,
                    6.0,
                    20000,
                );
            let got = sobolev_norm_plane(&g, s).unwrap();
            let tol = if s < 0.0 { 5e-3 * oracle } else { 1e-3 };
            assert!((got - oracle).abs() <= tol, "s={s} {got} {oracle}");
        }
    }

    #[test]
    fn fourier_energy_matches_direct() {
        let j = 8;
        let one = AtomMeasure::from_points(Root::Plane, j, &[Point::new(0.1, -0.2)], 1.0).unwrap();
        let level = Root::Plane.level_for_resolution(j);
        let o = Root::Plane.cell_at(level, Point::new(0.0, 0.0)).unwrap();
        let n = 1u64 << j;
        let w = 1.0 / (n * n) as f64;
        let uniform = AtomMeasure::from_atoms(
            Root::Plane,
            j,
            (0..n)
                .flat_map(|x| (0..n).map(move |y| (o.ix + x, o.iy + y, w)))
                .collect(),
        )
        .unwrap();
        for m in [&one, &uniform] {
            for s in [0.5, 1.0, 1.5] {
                let f = riesz_energy_fourier(m, s).unwrap();
                let d = riesz_energy_direct(m, s).unwrap();
                assert!(f / d >= 0.25 && f / d <= 4.0, "s={s} ratio {}", f / d);
                let f2 = riesz_energy_fourier(&m.scaled(3.5), s).unwrap();
                assert!((f2 / (12.25 * f) - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn slice_identity_gaussian() {
        let r512 = slice_identity_residual(&gaussian_grid(512).unwrap()).unwrap();
        let r256 = slice_identity_residual(&gaussian_grid(256).unwrap()).unwrap();
        assert!(r512 <= 1e-3, "{r512}");
        assert!(r512 <= r256, "{r512} {r256}");
        assert_eq!(
            slice_identity_residual(&PlanarGrid::zeros(64).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn slice_identity_disk() {
        let r = slice_identity_residual(&disk_grid(1024, 1.0).unwrap()).unwrap();
        assert!(r <= 1e-2, "{r}");
    }

    #[test]
    fn smoothing_ratio_basics() {
        let g = bump_grid(128, 0.1, 0.0, 0.4).unwrap();
        let chi = cutoff_grid(128).unwrap();
        for s in [-0.5, 0.0, 0.5] {
            let r = smoothing_ratio(&g, s, &chi).unwrap();
            assert!(r.is_finite() && r > 0.0);
        }
        let base = smoothing_ratio(&g, -0.5, &chi).unwrap();
        let direct = (xray(&g.mul(&chi)).unwrap().l2_norm_sq()
            / sobolev_norm_plane(&g, -0.5).unwrap())
        .sqrt();
        assert!((base / direct - 1.0).abs() < 1e-10);
        assert!(matches!(
            smoothing_ratio(&PlanarGrid::zeros(128).unwrap(), 0.0, &chi),
            Err(Error::ZeroDenominator)
        ));
    }
}
