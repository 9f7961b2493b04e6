//! Atomic measures on dyadic grids, point sets, and their diagnostics.

mod energy;
mod generate;

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::geometry::{DyadicSquare, Point, Root};

pub use energy::{
    riesz_energy_direct, riesz_energy_lattice, riesz_energy_pairwise, riesz_energy_truncated,
};
pub use generate::{
    cantor_indices_1d, generate_cantor_measure, generate_cantor_with, generate_line_measure,
    Construction, Window,
};

/// Finitely many positive weights on distinct cells of one dyadic level.
///
/// Atoms are kept sorted by `(ix, iy)`, which fixes every summation order.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomMeasure {
    root: Root,
    resolution_log2: u32,
    atoms: Vec<(u64, u64, f64)>,
    total: f64,
}

/// Measure on the plane box `[-2,2)^2`.
pub type PlanarAtomMeasure = AtomMeasure;
/// Measure on the line-parameter box `[0,1) x [-2,2)`.
pub type LineParamMeasure = AtomMeasure;

/// Flat serialized form `{root, resolution_log2, atoms: [(ix, iy, weight)]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub root: Root,
    pub resolution_log2: u32,
    pub atoms: Vec<(u64, u64, f64)>,
}

impl AtomMeasure {
    /// Builds a measure; duplicate cells are merged, zero weights dropped.
    pub fn from_atoms(
        root: Root,
        resolution_log2: u32,
        atoms: Vec<(u64, u64, f64)>,
    ) -> Result<Self> {
        let m = Self::from_atoms_allow_empty(root, resolution_log2, atoms)?;
        if m.atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(m)
    }

    pub fn from_atoms_allow_empty(
        root: Root,
        resolution_log2: u32,
        mut atoms: Vec<(u64, u64, f64)>,
    ) -> Result<Self> {
        let level = root.level_for_resolution(resolution_log2);
        let (nx, ny) = root.counts(level);
        for &(ix, iy, w) in &atoms {
            if ix >= nx || iy >= ny {
                return Err(Error::Invalid(format!(
                    "cell ({ix},{iy}) outside root at level {level}"
                )));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Invalid(format!(
                    "weight {w} is not a nonnegative finite number"
                )));
            }
        }
        atoms.retain(|a| a.2 > 0.0);
        atoms.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(u64, u64, f64)> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == a.0 && last.1 == a.1 => last.2 += a.2,
                _ => merged.push(a),
            }
        }
        let total = neumaier_sum(merged.iter().map(|a| a.2));
        Ok(Self {
            root,
            resolution_log2,
            atoms: merged,
            total,
        })
    }

    /// Unit-weight atoms placed at the cells containing `points`.
    pub fn from_points(
        root: Root,
        resolution_log2: u32,
        points: &[Point],
        weight: f64,
    ) -> Result<Self> {
        let level = root.level_for_resolution(resolution_log2);
        let mut atoms = Vec::with_capacity(points.len());
        for p in points {
            let c = root
                .cell_at(level, *p)
                .ok_or_else(|| Error::Invalid(format!("point {p:?} outside root")))?;
            atoms.push((c.ix, c.iy, weight));
        }
        Self::from_atoms(root, resolution_log2, atoms)
    }

    pub fn root(&self) -> Root {
        self.root
    }

    pub fn resolution_log2(&self) -> u32 {
        self.resolution_log2
    }

    /// Grid resolution `delta = 2^-resolution_log2`.
    pub fn delta(&self) -> f64 {
        (-(self.resolution_log2 as f64)).exp2()
    }

    /// Dyadic level of the atom cells.
    pub fn level(&self) -> u32 {
        self.root.level_for_resolution(self.resolution_log2)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn atoms(&self) -> &[(u64, u64, f64)] {
        &self.atoms
    }

    pub fn cell(&self, i: usize) -> DyadicSquare {
        let (ix, iy, _) = self.atoms[i];
        DyadicSquare {
            root: self.root,
            level: self.level(),
            ix,
            iy,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (DyadicSquare, f64)> + '_ {
        let (root, level) = (self.root, self.level());
        self.atoms.iter().map(move |&(ix, iy, w)| {
            (
                DyadicSquare {
                    root,
                    level,
                    ix,
                    iy,
                },
                w,
            )
        })
    }

    pub fn centers(&self) -> Vec<Point> {
        self.iter().map(|(c, _)| c.center()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.2).collect()
    }

    /// Every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite());
        let atoms: Vec<_> = self.atoms.iter().map(|&(x, y, w)| (x, y, w * c)).collect();
        let total = neumaier_sum(atoms.iter().map(|a| a.2));
        Self {
            root: self.root,
            resolution_log2: self.resolution_log2,
            atoms,
            total,
        }
    }

    /// Same weights, normalized to total mass 1.
    pub fn normalized(&self) -> Result<Self> {
        if self.total <= 0.0 {
            return Err(Error::EmptyMeasure);
        }
        Ok(self.scaled(1.0 / self.total))
    }

    /// Mass of the atoms whose cells lie inside `q`.
    pub fn mass_in(&self, q: &DyadicSquare) -> f64 {
        assert_eq!(q.root, self.root);
        if q.level > self.level() {
            return 0.0;
        }
        neumaier_sum(
            self.iter()
                .filter(|(c, _)| q.is_ancestor_of(c))
                .map(|(_, w)| w),
        )
    }

    pub fn support(&self) -> PointSet {
        PointSet {
            root: self.root,
            level: self.level(),
            cells: self.atoms.iter().map(|a| (a.0, a.1)).collect(),
        }
    }

    pub fn to_record(&self) -> MeasureRecord {
        MeasureRecord {
            root: self.root,
            resolution_log2: self.resolution_log2,
            atoms: self.atoms.clone(),
        }
    }

    pub fn from_record(rec: MeasureRecord) -> Result<Self> {
        Self::from_atoms(rec.root, rec.resolution_log2, rec.atoms)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(s)?)
    }

    /// Maximum Euclidean norm of an atom center.
    pub fn max_center_norm(&self) -> f64 {
        self.iter()
            .map(|(c, _)| c.center().norm())
            .fold(0.0, f64::max)
    }
}

/// Compensated summation in iteration order.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Per-level aggregation of `(ix, iy, value)` triples onto parents, in sorted order.
pub(crate) fn aggregate_to_parents(cells: &[(u64, u64, f64)]) -> Vec<(u64, u64, f64)> {
    let mut up: Vec<(u64, u64, f64)> = cells.iter().map(|&(x, y, w)| (x / 2, y / 2, w)).collect();
    up.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Vec<(u64, u64, f64)> = Vec::with_capacity(up.len());
    for a in up {
        match out.last_mut() {
            Some(last) if last.0 == a.0 && last.1 == a.1 => last.2 += a.2,
            _ => out.push(a),
        }
    }
    out
}

/// `max_Q m(Q) / side(Q)^s` over dyadic squares from the atom level up to the root.
pub fn frostman_constant(m: &AtomMeasure, s: f64) -> Result<f64> {
    check_exponent(s, 0.0, 2.0, true, false, "(0, 2]")?;
    if m.is_empty() || m.total() <= 0.0 {
        return Err(Error::EmptyMeasure);
    }
    let mut level = m.level();
    let mut cells = m.atoms.clone();
    let mut best = 0.0f64;
    loop {
        let side_pow = m.root.side(level).powf(s);
        for &(_, _, w) in &cells {
            best = best.max(w / side_pow);
        }
        if level == 0 {
            break;
        }
        cells = aggregate_to_parents(&cells);
        level -= 1;
    }
    Ok(best)
}

/// Distinct cells of one dyadic level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    pub root: Root,
    pub level: u32,
    pub cells: BTreeSet<(u64, u64)>,
}

impl PointSet {
    pub fn new(root: Root, level: u32) -> Self {
        Self {
            root,
            level,
            cells: BTreeSet::new(),
        }
    }

    /// Point set at resolution `2^-resolution_log2`.
    pub fn at_resolution(
        root: Root,
        resolution_log2: u32,
        cells: impl IntoIterator<Item = (u64, u64)>,
    ) -> Self {
        let level = root.level_for_resolution(resolution_log2);
        Self {
            root,
            level,
            cells: cells.into_iter().collect(),
        }
    }

    pub fn from_squares(
        root: Root,
        level: u32,
        squares: impl IntoIterator<Item = DyadicSquare>,
    ) -> Self {
        let cells = squares
            .into_iter()
            .map(|q| {
                assert!(
                    q.root == root && q.level == level,
                    "mixed levels in point set"
                );
                (q.ix, q.iy)
            })
            .collect();
        Self { root, level, cells }
    }

    pub fn side(&self) -> f64 {
        self.root.side(self.level)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn insert(&mut self, ix: u64, iy: u64) -> bool {
        self.cells.insert((ix, iy))
    }

    pub fn squares(&self) -> impl Iterator<Item = DyadicSquare> + '_ {
        let (root, level) = (self.root, self.level);
        self.cells.iter().map(move |&(ix, iy)| DyadicSquare {
            root,
            level,
            ix,
            iy,
        })
    }

    pub fn centers(&self) -> Vec<Point> {
        self.squares().map(|q| q.center()).collect()
    }

    pub fn contains(&self, q: &DyadicSquare) -> bool {
        q.root == self.root && q.level == self.level && self.cells.contains(&(q.ix, q.iy))
    }

    /// Cell counts of every dyadic ancestor level, finest first: `(level, [(ix, iy, count)])`.
    pub(crate) fn ancestor_counts(&self) -> Vec<(u32, Vec<(u64, u64, f64)>)> {
        let mut out = Vec::new();
        let mut cells: Vec<(u64, u64, f64)> =
            self.cells.iter().map(|&(x, y)| (x, y, 1.0)).collect();
        let mut level = self.level;
        loop {
            out.push((level, cells.clone()));
            if level == 0 {
                break;
            }
            cells = aggregate_to_parents(&cells);
            level -= 1;
        }
        out
    }
}

/// Number of dyadic squares of side `rho` containing a cell of `p`.
pub fn covering_number(p: &PointSet, rho: f64) -> Result<usize> {
    let ratio = rho / p.side();
    let k = ratio.log2().round();
    if !(ratio >= 1.0) || (k.exp2() - ratio).abs() > 1e-9 * ratio || k as u32 > p.level {
        return Err(Error::Invalid(format!(
            "scale {rho} is not a dyadic multiple of the resolution {}",
            p.side()
        )));
    }
    let shift = k as u32;
    let coarse: BTreeSet<(u64, u64)> = p
        .cells
        .iter()
        .map(|&(x, y)| (x >> shift, y >> shift))
        .collect();
    Ok(coarse.len())
}

/// Binary digits of the angular bins used by [`radial_projection_covering`]:
/// directions are bucketed into dyadic intervals of `[0,1)` of length `delta / 8`
/// revolutions, an arc length of about `0.79 delta`.
pub const RADIAL_BIN_EXTRA_BITS: u32 = 3;

/// Direction of `(q - y) / |q - y|` in revolutions, in `[0,1)`.
pub fn direction_angle(q: Point, y: Point) -> f64 {
    let a = (q.y - y.y).atan2(q.x - y.x) / TAU;
    if a < 0.0 {
        let b = a + 1.0;
        if b >= 1.0 {
            0.0
        } else {
            b
        }
    } else {
        a
    }
}

pub(crate) fn point_square_distance(q: Point, cell: &DyadicSquare) -> f64 {
    let c = cell.corner();
    let s = cell.side();
    let dx = (c.x - q.x).max(0.0).max(q.x - (c.x + s));
    let dy = (c.y - q.y).max(0.0).max(q.y - (c.y + s));
    dx.hypot(dy)
}

/// Minimum separation between the radial centre and the cells of the set.
pub const RADIAL_MIN_SEPARATION: f64 = 0.25;

/// Number of occupied angular bins of the radial projection of `p` from `q`.
pub fn radial_projection_covering(q: Point, p: &PointSet) -> Result<usize> {
    if p.root != Root::Plane {
        return Err(Error::Invalid(
            "radial projection needs a plane point set".into(),
        ));
    }
    let res = p
        .root
        .resolution_for_level(p.level)
        .ok_or_else(|| Error::Invalid("point set coarser than unit resolution".into()))?;
    let bits = res + RADIAL_BIN_EXTRA_BITS;
    let nbins = (bits as f64).exp2();
    let mut bins = BTreeSet::new();
    for cell in p.squares() {
        let d = point_square_distance(q, &cell);
        if d < RADIAL_MIN_SEPARATION {
            return Err(Error::SeparationViolated(format!(
                "cell ({}, {}) lies {d:.4} from ({}, {})",
                cell.ix, cell.iy, q.x, q.y
            )));
        }
        let a = direction_angle(q, cell.center());
        bins.insert(((a * nbins).floor() as u64).min(nbins as u64 - 1));
    }
    Ok(bins.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

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
    fn merge_and_drop() {
        let m =
            AtomMeasure::from_atoms(Root::Plane, 3, vec![(1, 1, 0.5), (1, 1, 0.25), (2, 2, 0.0)])
                .unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.total(), 0.75);
        assert!(matches!(
            AtomMeasure::from_atoms(Root::Plane, 3, vec![(1, 1, 0.0)]),
            Err(Error::EmptyMeasure)
        ));
        assert!(AtomMeasure::from_atoms(Root::Plane, 3, vec![(1, 1, -1.0)]).is_err());
        assert!(AtomMeasure::from_atoms(Root::Plane, 3, vec![(32, 1, 1.0)]).is_err());
    }

    #[test]
    fn frostman_examples() {
        let m = AtomMeasure::from_points(Root::Plane, 6, &[Point::new(0.1, 0.2)], 1.0).unwrap();
        assert_eq!(frostman_constant(&m, 1.0).unwrap(), 64.0);
        let u = uniform_unit_square(5);
        assert!((frostman_constant(&u, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let empty = AtomMeasure::from_atoms_allow_empty(Root::Plane, 3, vec![]).unwrap();
        assert!(matches!(
            frostman_constant(&empty, 1.0),
            Err(Error::EmptyMeasure)
        ));
    }

    #[test]
    fn frostman_at_least_root_ratio() {
        let u = uniform_unit_square(4);
        for s in [0.3, 1.0, 1.7, 2.0] {
            assert!(frostman_constant(&u, s).unwrap() >= u.total() * 4f64.powf(-s));
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = AtomMeasure::from_atoms(
            Root::LineSpace,
            5,
            vec![
                (3, 70, 0.1 + 0.2),
                (9, 1, 1.0 / 3.0),
                (0, 127, std::f64::consts::PI * 1e-7),
            ],
        )
        .unwrap();
        let back = AtomMeasure::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.atoms().iter().zip(m.atoms()) {
            assert_eq!(a.2.to_bits(), b.2.to_bits());
        }
    }

    #[test]
    fn covering_examples() {
        let u = uniform_unit_square(5).support();
        for k in 0..=5 {
            assert_eq!(
                covering_number(&u, (-(k as f64)).exp2()).unwrap(),
                1 << (2 * k)
            );
        }
        let one = PointSet::at_resolution(Root::Plane, 5, [(40, 41)]);
        for k in 0..=7 {
            assert_eq!(
                covering_number(&one, 4.0 * (-(k as f64)).exp2()).unwrap(),
                1
            );
        }
        assert!(covering_number(&one, 0.75).is_err());
        assert!(covering_number(&one, 1.0 / 64.0).is_err());
    }

    #[test]
    fn radial_single_ray() {
        let q = Point::new(-1.5, 0.0);
        let level = Root::Plane.level_for_resolution(6);
        let cells = (0..20).map(|i| {
            Root::Plane
                .cell_at(level, Point::new(0.01 + i as f64 * 0.04, 0.001))
                .unwrap()
        });
        let p = PointSet::from_squares(Root::Plane, level, cells);
        // all centers sit on the horizontal line y = delta/2 after snapping; directions differ by < bin width
        let ray = PointSet::from_squares(
            Root::Plane,
            level,
            (0..16).map(|i| DyadicSquare::new(Root::Plane, level, 160 + 2 * i, 128).unwrap()),
        );
        let q_on = Point::new(-1.5, ray.squares().next().unwrap().center().y);
        assert_eq!(radial_projection_covering(q_on, &ray).unwrap(), 1);
        assert!(radial_projection_covering(q, &p).unwrap() >= 1);
    }

    #[test]
    fn radial_separated_directions() {
        let q = Point::new(0.0, 0.0);
        let j = 7;
        let level = Root::Plane.level_for_resolution(j);
        let k = 100;
        let pts: Vec<DyadicSquare> = (0..k)
            .map(|i| {
                let th = (i as f64 + 0.5) / k as f64;
                Root::Plane
                    .cell_at(
                        level,
                        Point::new(1.5 * (TAU * th).cos(), 1.5 * (TAU * th).sin()),
                    )
                    .unwrap()
            })
            .collect();
        let p = PointSet::from_squares(Root::Plane, level, pts);
        assert_eq!(radial_projection_covering(q, &p).unwrap(), k);
    }

    #[test]
    fn radial_grid_against_sorted_angle_recount() {
        let j = 7;
        let u = uniform_unit_square(j).support();
        let q = Point::new(-1.5, 0.5);
        let got = radial_projection_covering(q, &u).unwrap();
        // independent recount: sort angles, count distinct bin indices along the sorted list
        let width = (1.0 / 128.0) / 8.0;
        let mut angles: Vec<f64> = u
            .centers()
            .iter()
            .map(|y| {
                let mut a = (q.y - y.y).atan2(q.x - y.x) / TAU;
                if a < 0.0 {
                    a += 1.0;
                }
                a
            })
            .collect();
        angles.sort_by(f64::total_cmp);
        let mut count = 0;
        let mut last = u64::MAX;
        for a in angles {
            let b = (a / width).floor() as u64;
            if b != last {
                count += 1;
                last = b;
            }
        }
        assert_eq!(got, count);
        assert!(got as f64 >= 0.1 * 128.0 && got <= 128, "{got}");
    }

    #[test]
    fn radial_separation_error() {
        let u = uniform_unit_square(4).support();
        assert!(matches!(
            radial_projection_covering(Point::new(1.1, 0.5), &u),
            Err(Error::SeparationViolated(_))
        ));
    }

    proptest! {
        #[test]
        fn mass_in_root_is_total(cells in proptest::collection::vec((0u64..32, 0u64..32, 0.01f64..5.0), 1..40)) {
            let m = AtomMeasure::from_atoms(Root::Plane, 3, cells).unwrap();
            let root = Root::Plane.top_squares()[0];
            prop_assert!((m.mass_in(&root) - m.total()).abs() <= 1e-12 * m.total());
        }
    }
}
