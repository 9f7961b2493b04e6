use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use super::{neumaier_sum, AtomMeasure};
use crate::error::{check_exponent, Result};
use crate::spectral::fft::fft2;

const BLOCK: usize = 64;
const MAX_LATTICE: usize = 4096;

/// Truncated Riesz energy with kernel `max(|x - y|, delta)^-s`, `delta` the measure resolution.
pub fn riesz_energy_direct(m: &AtomMeasure, s: f64) -> Result<f64> {
    riesz_energy_truncated(m, s, m.delta())
}

/// Truncated Riesz energy with kernel `max(|x - y|, trunc)^-s` between cell centers.
///
/// Picks the pairwise sum or the lattice convolution, whichever is cheaper.
pub fn riesz_energy_truncated(m: &AtomMeasure, s: f64, trunc: f64) -> Result<f64> {
    check_exponent(s, 0.0, 2.0, true, true, "(0, 2)")?;
    if m.is_empty() {
        return Ok(0.0);
    }
    let n = m.len() as f64;
    match lattice_size(m) {
        Some(p) if (p * p) as f64 * (p as f64).log2() * 8.0 < n * n => {
            riesz_energy_lattice(m, s, trunc)
        }
        _ => riesz_energy_pairwise(m, s, trunc),
    }
}

fn index_span(m: &AtomMeasure) -> (u64, u64, u64, u64) {
    let (mut x0, mut x1, mut y0, mut y1) = (u64::MAX, 0, u64::MAX, 0);
    for &(x, y, _) in m.atoms() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    (x0, x1, y0, y1)
}

fn lattice_size(m: &AtomMeasure) -> Option<usize> {
    let (x0, x1, y0, y1) = index_span(m);
    let span = ((x1 - x0).max(y1 - y0) + 1) as usize;
    let p = (2 * span).next_power_of_two();
    (p <= MAX_LATTICE).then_some(p)
}

/// Pairwise double sum, diagonal included, reduced over fixed row blocks.
pub fn riesz_energy_pairwise(m: &AtomMeasure, s: f64, trunc: f64) -> Result<f64> {
    check_exponent(s, 0.0, 2.0, true, true, "(0, 2)")?;
    let c = m.centers();
    let w = m.weights();
    let floor = trunc.powf(-s);
    let blocks: Vec<f64> = (0..c.len().div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(c.len());
            neumaier_sum((lo..hi).map(|i| {
                let row = neumaier_sum(c.iter().zip(&w).map(|(cj, &wj)| {
                    let d = c[i].dist(*cj);
                    wj * if d <= trunc { floor } else { d.powf(-s) }
                }));
                w[i] * row
            }))
        })
        .collect();
    Ok(neumaier_sum(blocks))
}

/// Same energy through the autocorrelation of the weight lattice.
pub fn riesz_energy_lattice(m: &AtomMeasure, s: f64, trunc: f64) -> Result<f64> {
    check_exponent(s, 0.0, 2.0, true, true, "(0, 2)")?;
    if m.is_empty() {
        return Ok(0.0);
    }
    let (x0, x1, y0, y1) = index_span(m);
    let span = ((x1 - x0).max(y1 - y0) + 1) as usize;
    let p = (2 * span).next_power_of_two();
    let mut grid = vec![Complex64::new(0.0, 0.0); p * p];
    for &(x, y, w) in m.atoms() {
        grid[(y - y0) as usize * p + (x - x0) as usize] = Complex64::new(w, 0.0);
    }
    fft2(&mut grid, p, p, FftDirection::Forward);
    for v in grid.iter_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    fft2(&mut grid, p, p, FftDirection::Inverse);
    let h = m.delta();
    let floor = trunc.powf(-s);
    let scale = 1.0 / (p * p) as f64;
    let rows: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|ky| {
            let dy = if ky < p / 2 {
                ky as f64
            } else {
                ky as f64 - p as f64
            };
            neumaier_sum((0..p).map(|kx| {
                let dx = if kx < p / 2 {
                    kx as f64
                } else {
                    kx as f64 - p as f64
                };
                let d = h * dx.hypot(dy);
                let k = if d <= trunc { floor } else { d.powf(-s) };
                grid[ky * p + kx].re * scale * k
            }))
        })
        .collect();
    Ok(neumaier_sum(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Root};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_unit_square(j: u32) -> AtomMeasure {
        let level = Root::Plane.level_for_resolution(j);
        let n = 1u64 << j;
        let off = Root::Plane.cell_at(level, Point::new(0.0, 0.0)).unwrap();
        let w = 1.0 / (n * n) as f64;
        let atoms = (0..n)
            .flat_map(|x| (0..n).map(move |y| (off.ix + x, off.iy + y, w)))
            .collect();
        AtomMeasure::from_atoms(Root::Plane, j, atoms).unwrap()
    }

    #[test]
    fn small_examples() {
        let one = AtomMeasure::from_points(Root::Plane, 6, &[Point::new(0.3, 0.3)], 1.0).unwrap();
        assert_eq!(riesz_energy_direct(&one, 1.0).unwrap(), 64.0);
        let level = Root::Plane.level_for_resolution(6);
        let a = Root::Plane.cell_at(level, Point::new(0.0, 0.0)).unwrap();
        let two = AtomMeasure::from_atoms(
            Root::Plane,
            6,
            vec![(a.ix, a.iy, 0.5), (a.ix + 64, a.iy, 0.5)],
        )
        .unwrap();
        assert!((riesz_energy_direct(&two, 1.0).unwrap() - 32.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_square_against_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs = 10_000_000;
        let mut acc = 0.0;
        for _ in 0..pairs {
            let (x1, y1, x2, y2): (f64, f64, f64, f64) =
                (rng.gen(), rng.gen(), rng.gen(), rng.gen());
            acc += 1.0 / (x1 - x2).hypot(y1 - y2);
        }
        let mc = acc / pairs as f64;
        let e = riesz_energy_direct(&uniform_unit_square(7), 1.0).unwrap();
        assert!((e / mc - 1.0).abs() < 0.05, "direct {e} mc {mc}");
    }

    #[test]
    fn lattice_matches_pairwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let atoms: Vec<_> = (0..400)
            .map(|_| {
                (
                    rng.gen_range(40..90),
                    rng.gen_range(30..100),
                    rng.gen_range(0.1..1.0),
                )
            })
            .collect();
        let m = AtomMeasure::from_atoms(Root::Plane, 5, atoms).unwrap();
        for s in [0.5, 1.0, 1.7] {
            for trunc in [m.delta(), 4.0 * m.delta()] {
                let a = riesz_energy_pairwise(&m, s, trunc).unwrap();
                let b = riesz_energy_lattice(&m, s, trunc).unwrap();
                assert!((a / b - 1.0).abs() < 1e-10, "{a} {b}");
            }
        }
    }

    #[test]
    fn monotone_in_exponent_on_small_diameter() {
        let m = uniform_unit_square(4);
        let level = m.level();
        let small: Vec<_> = m
            .atoms()
            .iter()
            .filter(|a| a.0 % 16 < 11 && a.1 % 16 < 11)
            .copied()
            .collect();
        let m = AtomMeasure::from_atoms(Root::Plane, 4, small).unwrap();
        assert!(m.iter().all(|(c, _)| c.level == level));
        let mut last = 0.0;
        for s in [0.2, 0.6, 1.0, 1.4, 1.9] {
            let e = riesz_energy_direct(&m, s).unwrap();
            assert!(e >= last);
            last = e;
        }
    }

    proptest! {
        #[test]
        fn weight_scaling_is_quadratic(c in 0.01f64..10.0, s in 0.1f64..1.9, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let atoms: Vec<_> = (0..60).map(|_| (rng.gen_range(0..64), rng.gen_range(0..64), rng.gen_range(0.1..1.0))).collect();
            let m = AtomMeasure::from_atoms(Root::Plane, 4, atoms).unwrap();
            let a = riesz_energy_direct(&m, s).unwrap();
            let b = riesz_energy_direct(&m.scaled(c), s).unwrap();
            prop_assert!((b / (c * c * a) - 1.0).abs() < 1e-10);
        }
    }
}
