//! Lines, tubes, dyadic squares and dyadic tubes.
//!
//! Lines are `l(theta, r) = {z : z . e(theta) = r}` with
//! `e(theta) = (cos 2 pi theta, sin 2 pi theta)` and `theta` measured in
//! revolutions. Two root boxes carry dyadic trees: the plane box `[-2,2)^2`
//! and the line-parameter box `[0,1) x [-2,2)`, the latter split into four
//! unit strips at level 0 so that every cell is a square of side `2^-level`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Result};
use crate::measures::PlanarAtomMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

/// Unit vector `e(theta)` for `theta` in revolutions.
#[inline]
pub fn direction(theta: f64) -> Point {
    let (s, c) = (TAU * theta).sin_cos();
    Point::new(c, s)
}

/// Orthogonal projection `pi_theta(p) = p . e(theta)`.
#[inline]
pub fn project(p: Point, theta: f64) -> f64 {
    p.dot(direction(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParam {
    pub theta: f64,
    pub r: f64,
}

impl LineParam {
    pub fn new(theta: f64, r: f64) -> Self {
        debug_assert!((0.0..1.0).contains(&theta) && r.abs() <= 2.0);
        Self { theta, r }
    }

    pub fn direction(&self) -> Point {
        direction(self.theta)
    }
}

/// Distance from `p` to the line, `|p . e(theta) - r|`.
pub fn dist_to_line(p: Point, line: &LineParam) -> f64 {
    (project(p, line.theta) - line.r).abs()
}

/// Closed `halfwidth`-neighbourhood of a line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub line: LineParam,
    pub halfwidth: f64,
}

impl Tube {
    pub fn new(line: LineParam, halfwidth: f64) -> Self {
        debug_assert!(halfwidth > 0.0);
        Self { line, halfwidth }
    }

    pub fn contains(&self, p: Point) -> bool {
        tube_contains(p, self)
    }
}

pub fn tube_contains(p: Point, tube: &Tube) -> bool {
    dist_to_line(p, &tube.line) <= tube.halfwidth
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Root {
    #[serde(rename = "PLANE")]
    Plane,
    #[serde(rename = "LINESPACE")]
    LineSpace,
}

impl Root {
    /// Lower-left corner of the root box.
    pub fn origin(self) -> Point {
        match self {
            Root::Plane => Point::new(-2.0, -2.0),
            Root::LineSpace => Point::new(0.0, -2.0),
        }
    }

    /// Side length of cells at `level`.
    pub fn side(self, level: u32) -> f64 {
        let base = match self {
            Root::Plane => 4.0,
            Root::LineSpace => 1.0,
        };
        base * (-(level as f64)).exp2()
    }

    /// Cell counts `(horizontal, vertical)` at `level`.
    pub fn counts(self, level: u32) -> (u64, u64) {
        match self {
            Root::Plane => (1 << level, 1 << level),
            Root::LineSpace => (1 << level, 4 << level),
        }
    }

    /// Level whose cells have side `2^-log2_inv_side`.
    pub fn level_for_resolution(self, resolution_log2: u32) -> u32 {
        match self {
            Root::Plane => resolution_log2 + 2,
            Root::LineSpace => resolution_log2,
        }
    }

    /// Inverse of [`Root::level_for_resolution`]; `None` for plane levels 0 and 1.
    pub fn resolution_for_level(self, level: u32) -> Option<u32> {
        match self {
            Root::Plane => level.checked_sub(2),
            Root::LineSpace => Some(level),
        }
    }

    pub fn top_level(self) -> u32 {
        0
    }

    /// Cell at `level` containing `p`, if `p` is inside the root box.
    pub fn cell_at(self, level: u32, p: Point) -> Option<DyadicSquare> {
        let o = self.origin();
        let side = self.side(level);
        let fx = ((p.x - o.x) / side).floor();
        let fy = ((p.y - o.y) / side).floor();
        let (nx, ny) = self.counts(level);
        if fx < 0.0 || fy < 0.0 || fx >= nx as f64 || fy >= ny as f64 {
            return None;
        }
        Some(DyadicSquare {
            root: self,
            level,
            ix: fx as u64,
            iy: fy as u64,
        })
    }

    /// All top-level squares (one for the plane, four unit strips for line space).
    pub fn top_squares(self) -> Vec<DyadicSquare> {
        let (nx, ny) = self.counts(0);
        let mut out = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                out.push(DyadicSquare {
                    root: self,
                    level: 0,
                    ix,
                    iy,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub root: Root,
    pub level: u32,
    pub ix: u64,
    pub iy: u64,
}

impl DyadicSquare {
    pub fn new(root: Root, level: u32, ix: u64, iy: u64) -> Option<Self> {
        let (nx, ny) = root.counts(level);
        (ix < nx && iy < ny).then_some(Self {
            root,
            level,
            ix,
            iy,
        })
    }

    pub fn side(&self) -> f64 {
        self.root.side(self.level)
    }

    pub fn corner(&self) -> Point {
        let o = self.root.origin();
        let s = self.side();
        Point::new(o.x + self.ix as f64 * s, o.y + self.iy as f64 * s)
    }

    pub fn center(&self) -> Point {
        let c = self.corner();
        let h = 0.5 * self.side();
        Point::new(c.x + h, c.y + h)
    }

    /// Half-open membership `[x0, x0+side) x [y0, y0+side)`.
    pub fn contains_point(&self, p: Point) -> bool {
        let c = self.corner();
        let s = self.side();
        p.x >= c.x && p.x < c.x + s && p.y >= c.y && p.y < c.y + s
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            root: self.root,
            level: self.level - 1,
            ix: self.ix / 2,
            iy: self.iy / 2,
        })
    }

    /// Ancestor at a coarser (or equal) level.
    pub fn ancestor(&self, level: u32) -> Self {
        assert!(level <= self.level);
        let k = self.level - level;
        Self {
            root: self.root,
            level,
            ix: self.ix >> k,
            iy: self.iy >> k,
        }
    }

    pub fn children(&self) -> [Self; 4] {
        let (l, x, y) = (self.level + 1, 2 * self.ix, 2 * self.iy);
        let r = self.root;
        [
            Self {
                root: r,
                level: l,
                ix: x,
                iy: y,
            },
            Self {
                root: r,
                level: l,
                ix: x + 1,
                iy: y,
            },
            Self {
                root: r,
                level: l,
                ix: x,
                iy: y + 1,
            },
            Self {
                root: r,
                level: l,
                ix: x + 1,
                iy: y + 1,
            },
        ]
    }

    pub fn is_ancestor_of(&self, other: &Self) -> bool {
        self.root == other.root && self.level <= other.level && other.ancestor(self.level) == *self
    }

    /// Morton (Z-order) key among squares of the same level.
    pub fn morton(&self) -> u128 {
        let mut key = 0u128;
        for b in 0..64 {
            key |= (((self.ix >> b) & 1) as u128) << (2 * b);
            key |= (((self.iy >> b) & 1) as u128) << (2 * b + 1);
        }
        key
    }
}

/// Exact range of `theta -> p . e(theta)` over the closed interval `[t0, t1]`.
pub fn projection_range(p: Point, t0: f64, t1: f64) -> (f64, f64) {
    debug_assert!(t0 <= t1);
    let rho = p.norm();
    if rho == 0.0 {
        return (0.0, 0.0);
    }
    let v0 = project(p, t0);
    let v1 = project(p, t1);
    let (mut lo, mut hi) = if v0 <= v1 { (v0, v1) } else { (v1, v0) };
    // p . e(theta) = rho cos(2 pi (theta - phi)); extremes where theta - phi is a multiple of 1/2.
    let phi = p.y.atan2(p.x) / TAU;
    let a = t0 - phi;
    let b = t1 - phi;
    if (a.ceil()) <= b {
        hi = rho;
    }
    if ((a - 0.5).ceil() + 0.5) <= b {
        lo = -rho;
    }
    (lo, hi)
}

/// Union of all lines with parameters in a line-space dyadic square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicTube {
    pub square: DyadicSquare,
}

impl DyadicTube {
    pub fn new(square: DyadicSquare) -> Self {
        assert_eq!(
            square.root,
            Root::LineSpace,
            "dyadic tubes live in line space"
        );
        Self { square }
    }

    pub fn theta_interval(&self) -> (f64, f64) {
        let c = self.square.corner();
        (c.x, c.x + self.square.side())
    }

    pub fn r_interval(&self) -> (f64, f64) {
        let c = self.square.corner();
        (c.y, c.y + self.square.side())
    }

    pub fn contains(&self, p: Point) -> bool {
        dyadic_tube_contains(p, self)
    }

    pub fn hull(&self) -> Tube {
        dyadic_tube_hull(self)
    }
}

/// Whether some `(theta, r)` in the tube's square has `pi_theta(p) = r`.
pub fn dyadic_tube_contains(p: Point, dt: &DyadicTube) -> bool {
    dyadic_tube_contains_with_slack(p, dt, 0.0)
}

/// Whether some `(theta, r)` in the square has `|pi_theta(p) - r| <= slack`.
///
/// The enclosure of `pi_theta(p)` over a theta-interval is the exact cosine
/// range padded outward by a few ulps; bisection then searches for a witness
/// until the interval is shorter than `2^-40 * side`.
pub fn dyadic_tube_contains_with_slack(p: Point, dt: &DyadicTube, slack: f64) -> bool {
    let (t0, t1) = dt.theta_interval();
    let (r0, r1) = dt.r_interval();
    let (lo_r, hi_r) = (r0 - slack, r1 + slack);
    let pad = 4.0 * f64::EPSILON * (1.0 + p.norm());
    let tol = dt.square.side() * (-40f64).exp2();

    fn search(p: Point, a: f64, b: f64, lo_r: f64, hi_r: f64, pad: f64, tol: f64) -> bool {
        let (lo, hi) = projection_range(p, a, b);
        if hi + pad < lo_r || lo - pad > hi_r {
            return false;
        }
        let m = 0.5 * (a + b);
        let v = project(p, m);
        if v >= lo_r && v <= hi_r {
            return true;
        }
        if b - a <= tol {
            return true;
        }
        search(p, a, m, lo_r, hi_r, pad, tol) || search(p, m, b, lo_r, hi_r, pad, tol)
    }

    search(p, t0, t1, lo_r, hi_r, pad, tol)
}

/// Constant in `T(Q) cap B(radius) subset l(theta0, r0)(c * side(Q))`: the map
/// `theta -> pi_theta(p)` is `2 pi |p|`-Lipschitz, so `c = 2 pi radius + 1`.
pub fn hull_constant(radius: f64) -> f64 {
    TAU * radius + 1.0
}

/// The ordinary tube `l(theta0, r0)(10 side(Q))` at the lower-left corner of `Q`.
///
/// Contains `T(Q) cap B(1)`; on `B(radius)` the containment holds with the
/// halfwidth `hull_constant(radius) * side`, which exceeds 10 for `radius > 1.43`.
pub fn dyadic_tube_hull(dt: &DyadicTube) -> Tube {
    let c = dt.square.corner();
    Tube {
        line: LineParam { theta: c.x, r: c.y },
        halfwidth: 10.0 * dt.square.side(),
    }
}

/// Restrict `mu` to `10Q`, map `10Q` affinely onto `[0,1)^2` and multiply by `side(10Q)^-t`.
///
/// Output atoms are snapped to the plane grid of the finest dyadic resolution
/// not coarser than the image of one input cell, so distinct input cells stay distinct.
pub fn rescale_measure(
    mu: &PlanarAtomMeasure,
    q: &DyadicSquare,
    t: f64,
) -> Result<PlanarAtomMeasure> {
    check_exponent(t, 0.0, 2.0, true, false, "(0, 2]")?;
    if q.root != Root::Plane {
        return Err(crate::Error::Invalid(
            "rescale_measure needs a plane square".into(),
        ));
    }
    let big = 10.0 * q.side();
    let qc = q.center();
    let corner = Point::new(qc.x - 0.5 * big, qc.y - 0.5 * big);
    let scale = big.powf(-t);
    let image_side = mu.delta() / big;
    let out_log2 = (-image_side.log2()).ceil().max(0.0) as u32;
    let out_level = Root::Plane.level_for_resolution(out_log2);
    let mut atoms = Vec::new();
    for (cell, w) in mu.iter() {
        let c = cell.center();
        let u = Point::new((c.x - corner.x) / big, (c.y - corner.y) / big);
        if !(0.0..1.0).contains(&u.x) || !(0.0..1.0).contains(&u.y) {
            continue;
        }
        let target = Root::Plane
            .cell_at(out_level, u)
            .expect("unit square lies in the plane root");
        atoms.push((target.ix, target.iy, w * scale));
    }
    PlanarAtomMeasure::from_atoms_allow_empty(Root::Plane, out_log2, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_examples() {
        assert_eq!(
            dist_to_line(Point::new(0.0, 0.0), &LineParam::new(0.0, 0.0)),
            0.0
        );
        assert!(
            (dist_to_line(Point::new(0.0, 1.0), &LineParam::new(0.25, 0.0)) - 1.0).abs() < 1e-15
        );
        let d = dist_to_line(Point::new(0.3, 0.4), &LineParam::new(0.125, 0.1));
        let expected = (0.7 / 2f64.sqrt() - 0.1).abs();
        assert!((d - expected).abs() < 1e-14);
        assert!((d - 0.394975).abs() < 1e-6);
    }

    #[test]
    fn tube_examples() {
        let t = |th, r, w| Tube::new(LineParam::new(th, r), w);
        assert!(tube_contains(Point::new(0.0, 0.0), &t(0.0, 0.0, 0.01)));
        assert!(!tube_contains(Point::new(0.0, 0.0), &t(0.0, 0.5, 0.1)));
        assert!(tube_contains(Point::new(0.3, 0.4), &t(0.125, 0.1, 0.4)));
    }

    #[test]
    fn dist_symmetric_under_reflection() {
        let line = LineParam::new(0.3, 0.2);
        let e = line.direction();
        let p = Point::new(0.4, -0.7);
        let d = p.dot(e) - line.r;
        let refl = Point::new(p.x - 2.0 * d * e.x, p.y - 2.0 * d * e.y);
        assert!((dist_to_line(p, &line) - dist_to_line(refl, &line)).abs() < 1e-14);
    }

    #[test]
    fn dyadic_square_structure() {
        let q = DyadicSquare::new(Root::LineSpace, 3, 5, 17).unwrap();
        assert_eq!(q.side(), 0.125);
        assert_eq!(q.corner(), Point::new(0.625, 0.125));
        assert_eq!(
            q.parent().unwrap(),
            DyadicSquare::new(Root::LineSpace, 2, 2, 8).unwrap()
        );
        for c in q.children() {
            assert!(q.is_ancestor_of(&c));
            assert_eq!(c.parent().unwrap(), q);
        }
        assert!(DyadicSquare::new(Root::LineSpace, 0, 0, 4).is_none());
        assert_eq!(Root::LineSpace.top_squares().len(), 4);
        assert_eq!(Root::Plane.top_squares().len(), 1);
        let p = Root::Plane.cell_at(2, Point::new(0.5, 0.5)).unwrap();
        assert_eq!((p.ix, p.iy, p.side()), (2, 2, 1.0));
        assert!(Root::Plane.cell_at(2, Point::new(2.0, 0.0)).is_none());
    }

    #[test]
    fn projection_range_matches_dense_sampling() {
        let p = Point::new(-0.8, 1.1);
        for (a, b) in [
            (0.0, 0.3),
            (0.1, 0.9),
            (0.33, 0.34),
            (0.6, 0.61),
            (0.0, 1.0),
        ] {
            let (lo, hi) = projection_range(p, a, b);
            let mut slo = f64::INFINITY;
            let mut shi = f64::NEG_INFINITY;
            for i in 0..=20000 {
                let v = project(p, a + (b - a) * i as f64 / 20000.0);
                slo = slo.min(v);
                shi = shi.max(v);
            }
            assert!(lo <= slo + 1e-12 && hi >= shi - 1e-12);
            assert!(
                (lo - slo).abs() < 1e-6 && (hi - shi).abs() < 1e-6,
                "{a} {b}"
            );
        }
    }

    #[test]
    fn dyadic_tube_origin_is_in_every_tube_through_zero() {
        for level in [0, 3, 7] {
            for theta in [0.1, 0.37, 0.8] {
                let q = Root::LineSpace
                    .cell_at(level, Point::new(theta, 0.0))
                    .unwrap();
                assert!(dyadic_tube_contains(
                    Point::new(0.0, 0.0),
                    &DyadicTube::new(q)
                ));
            }
        }
    }

    #[test]
    fn dyadic_tube_closed_form_inversion() {
        // pi_theta((2,0)) = 2 cos(2 pi theta) lies in [1.9, 1.95] iff theta in [lo, hi].
        let lo = (0.975f64).acos() / TAU;
        let hi = (0.95f64).acos() / TAU;
        let p = Point::new(2.0, 0.0);
        // A level-5 square has side 1/32; build squares whose r-interval is [1.875, 1.90625)
        // and check against the closed form using a custom r window via slack-free squares
        // at level 6 with r-interval [1.90625, 1.921875).
        let level = 6;
        let side = Root::LineSpace.side(level);
        let iy = ((1.90625 + 2.0) / side) as u64;
        let (r0, r1) = (-2.0 + iy as f64 * side, -2.0 + (iy + 1) as f64 * side);
        assert!(r0 >= 1.9 && r1 <= 1.95);
        let t_lo = (r1 / 2.0).acos() / TAU;
        let t_hi = (r0 / 2.0).acos() / TAU;
        assert!(t_lo >= lo && t_hi <= hi);
        for ix in 0..(1u64 << level) {
            let q = DyadicSquare::new(Root::LineSpace, level, ix, iy).unwrap();
            let dt = DyadicTube::new(q);
            let (a, b) = dt.theta_interval();
            // the parameter set {theta : 2cos(2 pi theta) in [r0, r1]} is [t_lo,t_hi] union its mirror
            let meets = (a <= t_hi && b >= t_lo) || (a <= 1.0 - t_lo && b >= 1.0 - t_hi);
            assert_eq!(dyadic_tube_contains(p, &dt), meets, "ix={ix}");
        }
    }

    #[test]
    fn dyadic_tube_rejects_far_r() {
        let p = Point::new(0.3, -0.2);
        let q = DyadicSquare::new(Root::LineSpace, 4, 3, 4 * 16 - 8).unwrap();
        let dt = DyadicTube::new(q);
        assert!(dt.r_interval().0 > p.norm());
        assert!(!dyadic_tube_contains(p, &dt));
    }

    #[test]
    fn hull_corner_and_width() {
        let q = DyadicSquare::new(Root::LineSpace, 5, 9, 70).unwrap();
        let h = dyadic_tube_hull(&DyadicTube::new(q));
        assert_eq!(h.line.theta, q.corner().x);
        assert_eq!(h.line.r, q.corner().y);
        assert_eq!(h.halfwidth, 10.0 * q.side());
    }

    #[test]
    fn hull_lipschitz_corner_bound() {
        // p=(1,0), Q with theta-interval [0, d): members satisfy |pi_0(p) - r0| <= (2 pi + 1) d <= 10 d.
        let level = 6;
        let d = Root::LineSpace.side(level);
        let p = Point::new(1.0, 0.0);
        for iy in 0..(4u64 << level) {
            let q = DyadicSquare::new(Root::LineSpace, level, 0, iy).unwrap();
            let dt = DyadicTube::new(q);
            if dt.contains(p) {
                let c = q.corner();
                assert!((project(p, c.x) - c.y).abs() <= hull_constant(1.0) * d);
                assert!(dt.hull().contains(p));
            }
        }
    }
}
