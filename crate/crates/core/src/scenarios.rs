//! Furstenberg, slicing and radial projection configurations and their measurements.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::content::{dyadic_content, smallest_delta_s_constant};
use crate::error::{check_exponent, Error, Result};
use crate::geometry::{
    dyadic_tube_contains_with_slack, project, DyadicSquare, DyadicTube, Point, Root,
};
use crate::incidence::log_slope;
use crate::measures::{
    cantor_indices_1d, generate_cantor_measure, radial_projection_covering, PlanarAtomMeasure,
    PointSet, Window,
};

/// Bound on the `(delta, s)` constant of every Furstenberg tube family.
pub const FAMILY_DELTA_S_BOUND: f64 = 16.0;

fn resolution_of(delta: f64) -> Result<u32> {
    let j = -delta.log2();
    if !(delta > 0.0) || j.fract() != 0.0 || j < 2.0 || j > 30.0 {
        return Err(Error::Invalid(format!(
            "delta {delta} is not a dyadic scale 2^-j with 2 <= j <= 30"
        )));
    }
    Ok(j as u32)
}

fn seed_stream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

/// Point measure with, for each support cell, a non-concentrated family of tubes through it.
#[derive(Debug, Clone, PartialEq)]
pub struct FurstenbergConfig {
    pub s: f64,
    pub t: f64,
    pub delta: f64,
    pub seed: u64,
    pub mu: PlanarAtomMeasure,
    /// Line-space cells at the resolution of `mu`, one family per atom of `mu`.
    pub families: Vec<Vec<(u64, u64)>>,
}

impl FurstenbergConfig {
    pub fn level(&self) -> u32 {
        self.mu.resolution_log2()
    }

    pub fn family(&self, i: usize) -> PointSet {
        PointSet::at_resolution(
            Root::LineSpace,
            self.level(),
            self.families[i].iter().copied(),
        )
    }

    /// Parameter cells of the union of all families.
    pub fn union(&self) -> PointSet {
        PointSet::at_resolution(
            Root::LineSpace,
            self.level(),
            self.families.iter().flatten().copied(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let v = serde_json::json!({
            "s": self.s,
            "t": self.t,
            "delta": self.delta,
            "seed": self.seed,
            "mu": self.mu.to_record(),
            "families": self.families,
        });
        Ok(serde_json::to_string(&v)?)
    }
}

/// `mu` is a `t`-dimensional measure on `[0,1)^2`; each cell gets directions from an
/// independently seeded `s`-dimensional Cantor subset of `[1/4, 3/4]`, each paired
/// with the parameter cell containing `(theta, pi_theta(center))`.
pub fn build_furstenberg(s: f64, t: f64, delta: f64, seed: u64) -> Result<FurstenbergConfig> {
    check_exponent(t, 1.0, 2.0, true, false, "(1, 2]")?;
    if !(s > 2.0 - t && s <= 1.0) {
        return Err(Error::Hypothesis(format!(
            "s = {s} is outside (2 - t, 1] for t = {t}"
        )));
    }
    let j = resolution_of(delta)?;
    let mu = generate_cantor_measure(t, j, seed, Window::unit())?;
    let mut rng = seed_stream(seed, 0xf0f0_1234_5678_9abc);
    let seeds: Vec<u64> = (0..mu.len()).map(|_| rng.next_u64()).collect();
    let quarter = 1u64 << (j - 2);
    let families = (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let p = mu.cell(i).center();
            let dirs = cantor_indices_1d(s, j - 1, seeds[i])?;
            let mut fam: Vec<(u64, u64)> = dirs
                .into_iter()
                .map(|k| {
                    let ix = quarter + k;
                    let theta = (ix as f64 + 0.5) * delta;
                    let q = Root::LineSpace
                        .cell_at(j, Point::new(theta, project(p, theta)))
                        .expect("inside line space");
                    (q.ix, q.iy)
                })
                .collect();
            fam.sort_unstable();
            fam.dedup();
            Ok(fam)
        })
        .collect::<Result<Vec<_>>>()?;
    let config = FurstenbergConfig {
        s,
        t,
        delta,
        seed,
        mu,
        families,
    };
    verify_furstenberg(&config)?;
    Ok(config)
}

/// Checks the `(delta, s)` bound of every family and that every tube cell lies
/// within `2 delta` of the curve `theta -> (theta, pi_theta(p))`.
pub fn verify_furstenberg(c: &FurstenbergConfig) -> Result<()> {
    let j = c.level();
    (0..c.families.len()).into_par_iter().try_for_each(|i| {
        let fam = c.family(i);
        let k = smallest_delta_s_constant(&fam, c.s)?;
        if k > FAMILY_DELTA_S_BOUND {
            return Err(Error::Postcondition(format!(
                "tube family {i} has (delta, s) constant {k}"
            )));
        }
        let p = c.mu.cell(i).center();
        for q in fam.squares() {
            let z = q.center();
            if (z.y - project(p, z.x)).abs() > 2.0 * c.delta {
                return Err(Error::Postcondition(format!(
                    "tube ({}, {}) of family {i} misses its point",
                    q.ix, q.iy
                )));
            }
        }
        debug_assert_eq!(fam.level, j);
        Ok(())
    })
}

/// Dyadic content of the union family at exponent `sigma + 1`.
pub fn furstenberg_content(c: &FurstenbergConfig, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0 && sigma < c.s) {
        return Err(Error::Exponent {
            value: sigma,
            range: "[0, s)",
        });
    }
    Ok(dyadic_content(&c.union(), sigma + 1.0)?.value)
}

/// Point set `E`, measure on `F`, and for each point of `E` the tubes through it that reach `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicingConfig {
    pub s: f64,
    pub t: f64,
    pub tau: f64,
    pub delta: f64,
    pub seed: u64,
    pub e: PlanarAtomMeasure,
    pub f: PlanarAtomMeasure,
    pub families: Vec<Vec<(u64, u64)>>,
    /// `mu(union of the family)` for each point of `E`.
    pub union_mass: Vec<f64>,
    /// `1 / min union_mass`.
    pub c: f64,
}

/// Lower-left corners of the `E` and `F` windows, both of side `1/4`.
pub const SLICING_E_CORNER: (f64, f64) = (-0.875, -0.125);
pub const SLICING_F_CORNER: (f64, f64) = (0.625, -0.125);
pub const SLICING_WINDOW: f64 = 0.25;

impl SlicingConfig {
    pub fn level(&self) -> u32 {
        self.f.resolution_log2()
    }

    pub fn tube(&self, i: usize, k: usize) -> DyadicTube {
        let (ix, iy) = self.families[i][k];
        DyadicTube::new(DyadicSquare {
            root: Root::LineSpace,
            level: self.level(),
            ix,
            iy,
        })
    }

    /// Min distance between the two support windows.
    pub fn separation(&self) -> f64 {
        SLICING_F_CORNER.0 - (SLICING_E_CORNER.0 + SLICING_WINDOW)
    }

    pub fn to_json(&self) -> Result<String> {
        let v = serde_json::json!({
            "s": self.s,
            "t": self.t,
            "tau": self.tau,
            "delta": self.delta,
            "seed": self.seed,
            "c": self.c,
            "e": self.e.to_record(),
            "f": self.f.to_record(),
            "families": self.families,
            "union_mass": self.union_mass,
        });
        Ok(serde_json::to_string(&v)?)
    }
}

fn window_corners(x0: f64, y0: f64, side: f64) -> [Point; 4] {
    [
        Point::new(x0, y0),
        Point::new(x0 + side, y0),
        Point::new(x0, y0 + side),
        Point::new(x0 + side, y0 + side),
    ]
}

/// Cells `Q` whose central line `theta_Q` has some `r` in `Q` with the line passing
/// within `2 delta` of `x` and meeting the closed `F` window.
fn tubes_through(x: Point, j: u32) -> Vec<(u64, u64)> {
    let delta = (-(j as f64)).exp2();
    let corners = window_corners(SLICING_F_CORNER.0, SLICING_F_CORNER.1, SLICING_WINDOW);
    let (_, nr) = Root::LineSpace.counts(j);
    let mut out = Vec::new();
    for ix in 0..(1u64 << j) {
        let theta = (ix as f64 + 0.5) * delta;
        let proj = corners.map(|c| project(c, theta));
        let wmin = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let wmax = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let px = project(x, theta);
        let lo = wmin.max(px - 2.0 * delta);
        let hi = wmax.min(px + 2.0 * delta);
        if lo > hi {
            continue;
        }
        let i0 = ((lo + 2.0) / delta).floor().max(0.0) as u64;
        let i1 = (((hi + 2.0) / delta).floor() as u64).min(nr - 1);
        for iy in i0..=i1 {
            out.push((ix, iy));
        }
    }
    out
}

/// Atoms of `f` whose centres lie in `tube` up to the slack `2 delta`.
fn cells_in_tube(f: &PlanarAtomMeasure, tube: &DyadicTube, delta: f64) -> Vec<usize> {
    let (t0, t1) = tube.theta_interval();
    let (r0, r1) = tube.r_interval();
    let tc = 0.5 * (t0 + t1);
    let rc = 0.5 * (r0 + r1);
    let half = 0.5 * (t1 - t0);
    (0..f.len())
        .filter(|&i| {
            let y = f.cell(i).center();
            let reach = 0.5 * (r1 - r0) + 2.0 * delta + 2.0 * PI * y.norm() * half + 1e-12;
            (project(y, tc) - rc).abs() <= reach
                && dyadic_tube_contains_with_slack(y, tube, 2.0 * delta)
        })
        .collect()
}

/// `E` an `s`-dimensional set near `(-3/4, 0)`, `F` a `t`-dimensional measure near
/// `(3/4, 0)`, and for every point of `E` all tubes through `B(x, 2 delta)` that meet
/// the window of `F`.
pub fn build_slicing(s: f64, t: f64, tau: f64, delta: f64, seed: u64) -> Result<SlicingConfig> {
    check_exponent(s, 0.0, 2.0, true, false, "(0, 2]")?;
    check_exponent(t, 0.0, 2.0, true, false, "(0, 2]")?;
    if !(s + t > 2.0) {
        return Err(Error::Hypothesis(format!(
            "s + t = {} is not above 2",
            s + t
        )));
    }
    if !(tau > 1.0 && tau < t) {
        return Err(Error::Hypothesis(format!("tau = {tau} is outside (1, t)")));
    }
    let j = resolution_of(delta)?;
    let e = generate_cantor_measure(
        s,
        j,
        seed,
        Window::square(SLICING_E_CORNER.0, SLICING_E_CORNER.1, SLICING_WINDOW),
    )?;
    let f = generate_cantor_measure(
        t,
        j,
        seed ^ 0x5151_5151_0000_0001,
        Window::square(SLICING_F_CORNER.0, SLICING_F_CORNER.1, SLICING_WINDOW),
    )?;
    let families: Vec<Vec<(u64, u64)>> = (0..e.len())
        .into_par_iter()
        .map(|i| tubes_through(e.cell(i).center(), j))
        .collect();
    let weights = f.weights();
    let union_mass: Vec<f64> = families
        .par_iter()
        .map(|fam| {
            let mut hit = vec![false; f.len()];
            for &(ix, iy) in fam {
                let tube = DyadicTube::new(DyadicSquare {
                    root: Root::LineSpace,
                    level: j,
                    ix,
                    iy,
                });
                for k in cells_in_tube(&f, &tube, delta) {
                    hit[k] = true;
                }
            }
            crate::measures::neumaier_sum(
                hit.iter()
                    .zip(&weights)
                    .filter(|(h, _)| **h)
                    .map(|(_, w)| *w),
            )
        })
        .collect();
    if let Some((index, &mass)) = union_mass.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
        return Err(Error::MassCondition { index, mass });
    }
    let min = union_mass.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SlicingConfig {
        s,
        t,
        tau,
        delta,
        seed,
        e,
        f,
        families,
        union_mass,
        c: 1.0 / min,
    })
}

/// Largest tube content with the point of `E` and the tube that realize it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeContent {
    pub value: f64,
    pub x_index: usize,
    pub tube: DyadicSquare,
}

/// Content of `F` inside one tube at exponent `tau - 1`.
pub fn tube_slice_content(c: &SlicingConfig, tube: &DyadicTube) -> Result<f64> {
    let cells = cells_in_tube(&c.f, tube, c.delta);
    let p = PointSet::from_squares(
        Root::Plane,
        c.f.level(),
        cells.into_iter().map(|i| c.f.cell(i)),
    );
    Ok(dyadic_content(&p, c.tau - 1.0)?.value)
}

/// `max over (x, T) of content(F cap T, tau - 1)`; `None` when no tube exists.
pub fn slicing_tube_content(c: &SlicingConfig) -> Result<Option<TubeContent>> {
    let mut first: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for (i, fam) in c.families.iter().enumerate() {
        for &q in fam {
            first.entry(q).or_insert(i);
        }
    }
    let tubes: Vec<((u64, u64), usize)> = first.into_iter().collect();
    let level = c.level();
    let values = tubes
        .par_iter()
        .map(|&((ix, iy), _)| {
            tube_slice_content(
                c,
                &DyadicTube::new(DyadicSquare {
                    root: Root::LineSpace,
                    level,
                    ix,
                    iy,
                }),
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best: Option<TubeContent> = None;
    for (&((ix, iy), x_index), &value) in tubes.iter().zip(&values) {
        if best.map_or(true, |b| value > b.value) {
            best = Some(TubeContent {
                value,
                x_index,
                tube: DyadicSquare {
                    root: Root::LineSpace,
                    level,
                    ix,
                    iy,
                },
            });
        }
    }
    Ok(best)
}

/// Per-scale values with their log-log slope against `1/delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSweep {
    pub rows: Vec<(f64, f64)>,
    pub slope: f64,
    pub min_value: f64,
}

impl ScaleSweep {
    pub fn new(rows: Vec<(f64, f64)>) -> Self {
        let slope = log_slope(&rows);
        let min_value = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        Self {
            rows,
            slope,
            min_value,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,value\n");
        for (d, v) in &self.rows {
            s.push_str(&format!("{d},{v}\n"));
        }
        s
    }
}

pub fn furstenberg_sweep(
    s: f64,
    t: f64,
    sigma: f64,
    deltas: &[f64],
    seed: u64,
) -> Result<ScaleSweep> {
    let mut rows = Vec::new();
    for &d in deltas {
        let c = build_furstenberg(s, t, d, seed)?;
        rows.push((d, furstenberg_content(&c, sigma)? / c.mu.total()));
    }
    Ok(ScaleSweep::new(rows))
}

pub fn slicing_sweep(s: f64, t: f64, tau: f64, deltas: &[f64], seed: u64) -> Result<ScaleSweep> {
    let mut rows = Vec::new();
    for &d in deltas {
        let c = build_slicing(s, t, tau, d, seed)?;
        rows.push((d, slicing_tube_content(&c)?.map_or(0.0, |b| b.value)));
    }
    Ok(ScaleSweep::new(rows))
}

/// Bound on [`relative_constant`] required of the radial sets.
pub const RADIAL_SET_CONSTANT: f64 = 4.0;

/// `max_Q (|P cap Q| / |P|) (D / side(Q))^s` with `D` the side of the bounding box of `P`.
pub fn relative_constant(p: &PointSet, s: f64) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (u64::MAX, 0, u64::MAX, 0);
    for &(x, y) in &p.cells {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let extent = ((x1 - x0).max(y1 - y0) + 1) as f64 * p.side();
    let k = smallest_delta_s_constant(p, s).expect("exponent checked by caller");
    k * extent.powf(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialRow {
    pub q: (f64, f64),
    pub full: usize,
    pub min_subset: usize,
    pub achieved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialReport {
    pub sigma: f64,
    pub delta: f64,
    pub threshold: f64,
    pub rows: Vec<RadialRow>,
    pub best: usize,
    pub fraction: f64,
}

impl RadialReport {
    pub fn best_row(&self) -> &RadialRow {
        &self.rows[self.best]
    }

    pub fn any_achieved(&self) -> bool {
        self.rows.iter().any(|r| r.achieved)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("qx,qy,full,min_subset,achieved\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.q.0, r.q.1, r.full, r.min_subset, r.achieved
            ));
        }
        s
    }
}

/// Sampled centres and half-subsets used by [`radial_check`].
pub const RADIAL_SAMPLE: usize = 256;
pub const RADIAL_SUBSETS: usize = 8;

/// Radial projections of `E` from up to 256 sampled cells of `F`, on the full set and
/// 8 seeded half-subsets, against the threshold `delta^-sigma`.
pub fn radial_check(
    e: &PointSet,
    f: &PointSet,
    s: f64,
    t: f64,
    sigma: f64,
    seed: u64,
) -> Result<RadialReport> {
    if e.root != Root::Plane || f.root != Root::Plane || e.level != f.level {
        return Err(Error::Invalid(
            "E and F must be plane point sets at one resolution".into(),
        ));
    }
    if e.is_empty() || f.is_empty() {
        return Err(Error::Invalid("E and F must be nonempty".into()));
    }
    check_exponent(s, 0.0, 2.0, true, false, "(0, 2]")?;
    check_exponent(t, 1.0, 2.0, true, false, "(1, 2]")?;
    if !(sigma > 0.0 && sigma < s) {
        return Err(Error::Hypothesis(format!(
            "sigma = {sigma} is outside (0, s) for s = {s}"
        )));
    }
    let ke = relative_constant(e, s);
    if ke > RADIAL_SET_CONSTANT {
        return Err(Error::Hypothesis(format!(
            "E is not a (delta, {s}) set: constant {ke}"
        )));
    }
    let kf = relative_constant(f, t);
    if kf > RADIAL_SET_CONSTANT {
        return Err(Error::Hypothesis(format!(
            "F is not a (delta, {t}) set: constant {kf}"
        )));
    }
    let delta = e.side();
    let threshold = delta.powf(-sigma);
    let mut rng = seed_stream(seed, 0x7261_6469_616c_0000);
    let f_cells: Vec<DyadicSquare> = f.squares().collect();
    let mut picks: Vec<usize> = if f_cells.len() <= RADIAL_SAMPLE {
        (0..f_cells.len()).collect()
    } else {
        sample(&mut rng, f_cells.len(), RADIAL_SAMPLE).into_vec()
    };
    picks.sort_unstable();
    let e_cells: Vec<DyadicSquare> = e.squares().collect();
    let subsets: Vec<PointSet> = (0..RADIAL_SUBSETS)
        .map(|_| {
            let idx = sample(&mut rng, e_cells.len(), e_cells.len().div_ceil(2));
            PointSet::from_squares(e.root, e.level, idx.into_iter().map(|i| e_cells[i]))
        })
        .collect();
    let rows = picks
        .par_iter()
        .map(|&i| {
            let q = f_cells[i].center();
            let full = radial_projection_covering(q, e)?;
            let mut min_subset = usize::MAX;
            for sub in &subsets {
                min_subset = min_subset.min(radial_projection_covering(q, sub)?);
            }
            let achieved = full as f64 >= threshold && min_subset as f64 >= threshold;
            Ok(RadialRow {
                q: (q.x, q.y),
                full,
                min_subset,
                achieved,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, r) in rows.iter().enumerate() {
        let b = &rows[best];
        if (r.min_subset.min(r.full), r.full) > (b.min_subset.min(b.full), b.full) {
            best = k;
        }
    }
    let fraction = rows.iter().filter(|r| r.achieved).count() as f64 / rows.len() as f64;
    Ok(RadialReport {
        sigma,
        delta,
        threshold,
        rows,
        best,
        fraction,
    })
}

/// `E` of dimension `s` on `[-2, 0) x [-1, 1)` and `F` of dimension `t` on
/// `[1/2, 3/2) x [-1/2, 1/2)`.
pub fn build_radial(s: f64, t: f64, delta: f64, seed: u64) -> Result<(PointSet, PointSet)> {
    let j = resolution_of(delta)?;
    let e = generate_cantor_measure(s, j, seed, Window::square(-2.0, -1.0, 2.0))?.support();
    let f = generate_cantor_measure(
        t,
        j,
        seed ^ 0x0f0f_0000_0000_0002,
        Window::square(0.5, -0.5, 1.0),
    )?
    .support();
    Ok((e, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::extract_katz_tao_subset;

    #[test]
    fn densest_furstenberg() {
        for j in 5..=6 {
            let d = (-(j as f64)).exp2();
            let c = build_furstenberg(1.0, 2.0, d, 3).unwrap();
            assert_eq!(c.mu.len(), 1 << (2 * j));
            for fam in &c.families {
                let n = fam.len() as f64;
                assert!(n >= 0.25 / d && n <= 4.0 / d);
            }
            assert!(furstenberg_content(&c, 0.9).unwrap() >= 0.05);
        }
    }

    #[test]
    fn furstenberg_family_sizes() {
        let c = build_furstenberg(0.5, 1.6, 1.0 / 128.0, 1).unwrap();
        let target = 3.5f64.exp2();
        for fam in &c.families {
            let n = fam.len() as f64;
            assert!(n >= target / 8.0 && n <= target * 8.0);
        }
        assert_eq!(c, build_furstenberg(0.5, 1.6, 1.0 / 128.0, 1).unwrap());
        assert_eq!(
            c.to_json().unwrap(),
            build_furstenberg(0.5, 1.6, 1.0 / 128.0, 1)
                .unwrap()
                .to_json()
                .unwrap()
        );
    }

    #[test]
    fn infeasible_furstenberg() {
        assert!(build_furstenberg(0.3, 1.5, 1.0 / 32.0, 0).is_err());
        assert!(build_furstenberg(0.8, 0.9, 1.0 / 32.0, 0).is_err());
        assert!(build_furstenberg(0.8, 1.5, 0.03, 0).is_err());
    }

    #[test]
    fn single_point_content_beats_extraction() {
        let c = build_furstenberg(0.7, 1.5, 1.0 / 256.0, 4).unwrap();
        let fam = c.family(0);
        for sigma in [0.2, 0.5, 0.65] {
            let v = dyadic_content(&fam, sigma + 1.0).unwrap().value;
            let e = extract_katz_tao_subset(&fam, sigma + 1.0).unwrap();
            assert!(v >= e.len() as f64 * c.delta.powf(sigma + 1.0) / 64.0);
        }
    }

    #[test]
    fn empty_config_has_zero_content() {
        let mut c = build_furstenberg(0.5, 1.6, 1.0 / 32.0, 1).unwrap();
        for f in &mut c.families {
            f.clear();
        }
        assert_eq!(furstenberg_content(&c, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn content_monotone_in_sigma() {
        let c = build_furstenberg(0.8, 1.4, 1.0 / 64.0, 2).unwrap();
        let sig = [0.0, 0.2, 0.4, 0.6, 0.79];
        for w in sig.windows(2) {
            let a = furstenberg_content(&c, w[0]).unwrap();
            let b = furstenberg_content(&c, w[1]).unwrap();
            assert!(a >= b * 4f64.powf(w[0] - w[1]));
        }
    }

    #[test]
    fn slicing_full_grid() {
        let c = build_slicing(0.6, 2.0, 1.3, 1.0 / 64.0, 5).unwrap();
        assert!(c.union_mass.iter().all(|&m| m >= 0.9));
        assert!(c.c <= 1.12);
        assert!(c.separation() >= 1.1);
        let best = slicing_tube_content(&c).unwrap().unwrap();
        let whole = PointSet::from_squares(Root::Plane, c.f.level(), c.f.iter().map(|(q, _)| q));
        let cap = dyadic_content(&whole, 0.3).unwrap().value;
        assert!(
            best.value >= 0.25f64.powf(0.3) && best.value <= cap * (1.0 + 1e-12),
            "{} {cap}",
            best.value
        );
        let tube = DyadicTube::new(best.tube);
        assert_eq!(tube_slice_content(&c, &tube).unwrap(), best.value);
        assert!(c.families[best.x_index].contains(&(best.tube.ix, best.tube.iy)));
    }

    #[test]
    fn slicing_determinism_and_hypotheses() {
        let a = build_slicing(0.6, 1.6, 1.3, 1.0 / 32.0, 9).unwrap();
        let b = build_slicing(0.6, 1.6, 1.3, 1.0 / 32.0, 9).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(matches!(
            build_slicing(0.3, 1.6, 1.3, 1.0 / 32.0, 9),
            Err(Error::Hypothesis(_))
        ));
        assert!(matches!(
            build_slicing(0.6, 1.6, 1.7, 1.0 / 32.0, 9),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn empty_family_gives_none() {
        let mut c = build_slicing(0.6, 1.6, 1.3, 1.0 / 32.0, 9).unwrap();
        for f in &mut c.families {
            f.clear();
        }
        assert!(slicing_tube_content(&c).unwrap().is_none());
    }

    #[test]
    fn radial_generator_fixture() {
        let d = 1.0 / 256.0;
        let (e, f) = build_radial(0.8, 1.5, d, 11).unwrap();
        let rep = radial_check(&e, &f, 0.8, 1.5, 0.6, 11).unwrap();
        assert_eq!(rep.rows.len(), 256);
        assert!(rep.best_row().full as f64 >= d.powf(-0.6));
        assert!(rep.fraction >= 0.5);
    }

    #[test]
    fn radial_rejects_collinear_sets() {
        let d = 1.0 / 256.0;
        let level = Root::Plane.level_for_resolution(8);
        let row = |x0: f64, x1: f64| {
            let mut p = PointSet::new(Root::Plane, level);
            let mut x = x0;
            while x < x1 {
                let q = Root::Plane.cell_at(level, Point::new(x, 0.001)).unwrap();
                p.insert(q.ix, q.iy);
                x += d;
            }
            p
        };
        let e = row(-1.5, -0.5);
        let f = row(0.5, 1.5);
        assert!(matches!(
            radial_check(&e, &f, 0.8, 1.5, 0.6, 0),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn radial_rejects_close_sets() {
        let (e, _) = build_radial(0.8, 1.5, 1.0 / 64.0, 1).unwrap();
        let f = e.clone();
        assert!(radial_check(&e, &f, 0.8, 1.5, 0.6, 0).is_err());
    }
}
