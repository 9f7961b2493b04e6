use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{covering_number, frostman_constant, AtomMeasure};
use crate::error::{check_exponent, Error, Result};
use crate::geometry::Root;

/// Axis-aligned box tiled by `nx * ny` dyadic squares of side `side`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
    pub nx: u32,
    pub ny: u32,
}

impl Window {
    pub fn square(x0: f64, y0: f64, side: f64) -> Self {
        Self {
            x0,
            y0,
            side,
            nx: 1,
            ny: 1,
        }
    }

    /// `[0,1)^2`.
    pub fn unit() -> Self {
        Self::square(0.0, 0.0, 1.0)
    }

    /// Box `[x0,x1) x [y0,y1)` tiled by squares whose side is the shorter edge.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let side = (x1 - x0).min(y1 - y0);
        if !(side > 0.0) {
            return Err(Error::Invalid(format!(
                "degenerate window [{x0},{x1})x[{y0},{y1})"
            )));
        }
        let nx = (x1 - x0) / side;
        let ny = (y1 - y0) / side;
        if nx.fract() != 0.0 || ny.fract() != 0.0 {
            return Err(Error::Invalid(format!(
                "window [{x0},{x1})x[{y0},{y1}) is not tiled by squares"
            )));
        }
        Ok(Self {
            x0,
            y0,
            side,
            nx: nx as u32,
            ny: ny as u32,
        })
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.side * self.nx as f64
    }

    pub fn y1(&self) -> f64 {
        self.y0 + self.side * self.ny as f64
    }

    /// Subdivision depth from the tile side down to `2^-resolution_log2`, plus the
    /// cell index of the window's lower-left corner at that resolution.
    fn layout(&self, root: Root, resolution_log2: u32) -> Result<(u32, u64, u64)> {
        let a = -self.side.log2();
        if a.fract() != 0.0 || a > resolution_log2 as f64 {
            return Err(Error::Invalid(format!(
                "window side {} is not a dyadic scale above the resolution",
                self.side
            )));
        }
        let depth = (resolution_log2 as f64 - a) as u32;
        let delta = (-(resolution_log2 as f64)).exp2();
        let o = root.origin();
        let fx = (self.x0 - o.x) / delta;
        let fy = (self.y0 - o.y) / delta;
        if fx.fract() != 0.0 || fy.fract() != 0.0 || fx < 0.0 || fy < 0.0 {
            return Err(Error::Invalid(
                "window corner is not aligned with the resolution grid".into(),
            ));
        }
        let (cx, cy) = root.counts(root.level_for_resolution(resolution_log2));
        let ix0 = ((self.x0 - o.x) / delta) as u64;
        let iy0 = ((self.y0 - o.y) / delta) as u64;
        let n = 1u64 << depth;
        if ix0 + n * self.nx as u64 > cx || iy0 + n * self.ny as u64 > cy {
            return Err(Error::Invalid("window leaves the root box".into()));
        }
        Ok((depth, ix0, iy0))
    }
}

/// How children are selected at each subdivision step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    /// Seeded random children, `ceil(2^(j s))` cells kept after `j` steps.
    Random,
    /// Keep the four corner cells of every `4 x 4` block (dimension 1, needs even depth).
    FourCorner,
    /// The leftmost column of cells of every tile.
    Segment,
}

/// `ceil(2^x)`, exact when `x` is an integer.
fn ceil_pow2(x: f64) -> u64 {
    let v = x.exp2();
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        v.ceil() as u64
    }
}

/// Kept cells `(x, y)` after `depth` steps of the random rule, with branching
/// `2^dim` (`dim` is 1 or 2) and exponent `s <= dim`.
fn random_tree(depth: u32, s: f64, dim: u32, rng: &mut ChaCha8Rng) -> Vec<(u64, u64)> {
    let arity = 1usize << dim;
    let mut cells = vec![(0u64, 0u64)];
    for j in 1..=depth {
        let cap = 1u64 << (dim * j);
        let target = ceil_pow2(j as f64 * s).min(cap) as usize;
        let have = cells.len();
        let base = target / have;
        let rem = target % have;
        let mut order: Vec<usize> = (0..have).collect();
        order.shuffle(rng);
        let mut quota = vec![base; have];
        for &i in &order[..rem] {
            quota[i] += 1;
        }
        let mut next = Vec::with_capacity(target);
        for (&(x, y), &k) in cells.iter().zip(&quota) {
            for c in sample(rng, arity, k.min(arity)).into_iter() {
                let (cx, cy) = if dim == 2 {
                    ((c & 1) as u64, (c >> 1) as u64)
                } else {
                    (c as u64, 0)
                };
                next.push((2 * x + cx, 2 * y + cy));
            }
        }
        next.sort_unstable();
        cells = next;
    }
    cells
}

/// Kept indices of a seeded `s`-dimensional Cantor subset of `{0, .., 2^depth - 1}`.
pub fn cantor_indices_1d(s: f64, depth: u32, seed: u64) -> Result<Vec<u64>> {
    check_exponent(s, 0.0, 1.0, true, false, "(0, 1]")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_tree(depth, s, 1, &mut rng)
        .into_iter()
        .map(|c| c.0)
        .collect())
}

fn four_corner(depth: u32) -> Result<Vec<(u64, u64)>> {
    if depth % 2 != 0 {
        return Err(Error::Invalid(format!(
            "four-corner construction needs an even depth, got {depth}"
        )));
    }
    let mut cells = vec![(0u64, 0u64)];
    for _ in 0..depth / 2 {
        let mut next = Vec::with_capacity(cells.len() * 4);
        for &(x, y) in &cells {
            for (a, b) in [(0, 0), (3, 0), (0, 3), (3, 3)] {
                next.push((4 * x + a, 4 * y + b));
            }
        }
        next.sort_unstable();
        cells = next;
    }
    Ok(cells)
}

/// Dimension-`s` Cantor-type measure on `[0,1)^2`-style windows of the plane.
pub fn generate_cantor_measure(
    s: f64,
    resolution_log2: u32,
    seed: u64,
    window: Window,
) -> Result<AtomMeasure> {
    generate_cantor_with(
        Root::Plane,
        s,
        resolution_log2,
        seed,
        window,
        Construction::Random,
    )
}

/// Dimension-`s` measure on line space with support in `theta_window x r_window`.
pub fn generate_line_measure(
    s: f64,
    resolution_log2: u32,
    seed: u64,
    theta_window: (f64, f64),
    r_window: (f64, f64),
) -> Result<AtomMeasure> {
    if theta_window.0 < 0.25 || theta_window.1 > 0.75 || r_window.0 < -1.0 || r_window.1 > 1.0 {
        return Err(Error::Hypothesis(format!(
            "line window {theta_window:?} x {r_window:?} is not inside [1/4,3/4] x [-1,1]"
        )));
    }
    let w = Window::rect(theta_window.0, theta_window.1, r_window.0, r_window.1)?;
    generate_cantor_with(
        Root::LineSpace,
        s,
        resolution_log2,
        seed,
        w,
        Construction::Random,
    )
}

/// Generator with explicit root and construction; equal weights summing to 1.
pub fn generate_cantor_with(
    root: Root,
    s: f64,
    resolution_log2: u32,
    seed: u64,
    window: Window,
    construction: Construction,
) -> Result<AtomMeasure> {
    check_exponent(s, 0.0, 2.0, true, false, "(0, 2]")?;
    let (depth, ix0, iy0) = window.layout(root, resolution_log2)?;
    let n = 1u64 << depth;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = Vec::new();
    for ty in 0..window.ny as u64 {
        for tx in 0..window.nx as u64 {
            let tile = match construction {
                Construction::Random => random_tree(depth, s, 2, &mut rng),
                Construction::FourCorner => four_corner(depth)?,
                Construction::Segment => (0..n).map(|y| (0, y)).collect(),
            };
            cells.extend(
                tile.into_iter()
                    .map(|(x, y)| (ix0 + tx * n + x, iy0 + ty * n + y)),
            );
        }
    }
    let w = 1.0 / cells.len() as f64;
    let m = AtomMeasure::from_atoms(
        root,
        resolution_log2,
        cells.into_iter().map(|(x, y)| (x, y, w)).collect(),
    )?;
    if construction != Construction::Segment {
        check_generated(&m, s, &window, depth)?;
    }
    Ok(m)
}

fn check_generated(m: &AtomMeasure, s: f64, window: &Window, depth: u32) -> Result<()> {
    let bound = 16.0 * window.side.powf(-s);
    let f = frostman_constant(m, s)?;
    if f > bound {
        return Err(Error::Postcondition(format!(
            "Frostman constant {f} exceeds {bound} at exponent {s}"
        )));
    }
    let support = m.support();
    let count = m.len() as f64;
    for k in 0..=depth {
        let rho = window.side * (-(k as f64)).exp2();
        let got = covering_number(&support, rho)? as f64;
        let expect = (rho / m.delta()).powf(-s) * count;
        if got > 16.0 * expect || got < expect / 16.0 {
            return Err(Error::Postcondition(format!(
                "covering number {got} at scale {rho} is not within a factor 16 of {expect}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_dimension_is_the_grid() {
        let m = generate_cantor_measure(2.0, 5, 1, Window::unit()).unwrap();
        assert_eq!(m.len(), 1024);
        assert!(m.weights().iter().all(|&w| w == 1.0 / 1024.0));
    }

    #[test]
    fn four_corner_counts_and_constants() {
        for k in 1..=5u32 {
            let m = generate_cantor_with(
                Root::Plane,
                1.0,
                2 * k,
                0,
                Window::unit(),
                Construction::FourCorner,
            )
            .unwrap();
            assert_eq!(m.len(), 1 << (2 * k));
        }
        let m = generate_cantor_with(
            Root::Plane,
            1.0,
            10,
            0,
            Window::unit(),
            Construction::FourCorner,
        )
        .unwrap();
        let f = frostman_constant(&m, 1.0).unwrap();
        assert!((1.0..=8.0).contains(&f), "{f}");
        let p = m.support();
        for j in 0..=5 {
            let rho = 4f64.powi(-j);
            assert_eq!(covering_number(&p, rho).unwrap(), 4usize.pow(j as u32));
        }
    }

    #[test]
    fn half_dimension_count() {
        let m = generate_cantor_measure(0.5, 10, 9, Window::unit()).unwrap();
        assert!((32..=64).contains(&m.len()), "{}", m.len());
        assert!(frostman_constant(&m, 0.5).unwrap() <= 16.0);
    }

    #[test]
    fn line_measures() {
        let full = generate_line_measure(2.0, 5, 2, (0.25, 0.75), (-1.0, 1.0)).unwrap();
        assert_eq!(full.len(), 16 * 64);
        let m = generate_line_measure(1.5, 8, 4, (0.25, 0.75), (-1.0, 1.0)).unwrap();
        assert!(m.len() >= 1024 && m.len() <= 16384, "{}", m.len());
        assert!(frostman_constant(&m, 1.5).unwrap() <= 16.0);
        let w = Window::rect(0.25, 0.75, -1.0, 1.0).unwrap();
        let row =
            generate_cantor_with(Root::LineSpace, 1.0, 6, 0, w, Construction::Segment).unwrap();
        assert!(frostman_constant(&row, 1.0).unwrap() <= 4.0);
        assert!(generate_line_measure(1.0, 6, 0, (0.1, 0.6), (-1.0, 1.0)).is_err());
    }

    #[test]
    fn infeasible_exponent() {
        assert!(matches!(
            generate_cantor_measure(2.5, 5, 0, Window::unit()),
            Err(Error::Exponent { .. })
        ));
    }

    #[test]
    fn seeded_reproducibility() {
        let a = generate_cantor_measure(1.3, 8, 77, Window::unit()).unwrap();
        let b = generate_cantor_measure(1.3, 8, 77, Window::unit()).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_cantor_measure(1.3, 8, 78, Window::unit()).unwrap();
        assert_ne!(a.atoms(), c.atoms());
    }

    #[test]
    fn one_dimensional_counts() {
        for s in [0.2, 0.5, 0.9, 1.0] {
            let v = cantor_indices_1d(s, 8, 3).unwrap();
            assert_eq!(v.len() as u64, ceil_pow2(8.0 * s));
            assert!(v.windows(2).all(|w| w[0] < w[1]) && *v.last().unwrap() < 256);
        }
    }
}
