//! Dyadic Hausdorff content, Katz-Tao constants and multiscale covers of point sets.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::geometry::{DyadicSquare, Root};
use crate::measures::{neumaier_sum, PointSet};

/// Optimal dyadic cover and its cost `sum side(Q)^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentResult {
    pub s: f64,
    pub value: f64,
    pub cover: Vec<DyadicSquare>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ContentRecord {
    s: f64,
    value: f64,
    cover: Vec<(u32, u64, u64)>,
}

impl ContentResult {
    pub fn to_json(&self) -> Result<String> {
        let rec = ContentRecord {
            s: self.s,
            value: self.value,
            cover: self.cover.iter().map(|q| (q.level, q.ix, q.iy)).collect(),
        };
        Ok(serde_json::to_string(&rec)?)
    }
}

#[derive(Clone, Copy)]
struct Node {
    ix: u64,
    iy: u64,
    cost: f64,
    take_self: bool,
}

/// Relative slack under which a square is preferred over its children.
const TIE: f64 = 1e-12;

/// Dyadic content using only squares of level `>= coarsest`.
pub fn dyadic_content_from(p: &PointSet, s: f64, coarsest: u32) -> Result<ContentResult> {
    check_exponent(s, 0.0, 2.0, true, false, "(0, 2]")?;
    if p.is_empty() {
        return Ok(ContentResult {
            s,
            value: 0.0,
            cover: Vec::new(),
        });
    }
    let coarsest = coarsest.min(p.level);
    let root = p.root;
    let leaf_cost = root.side(p.level).powf(s);
    let mut levels: Vec<Vec<Node>> = vec![p
        .cells
        .iter()
        .map(|&(ix, iy)| Node {
            ix,
            iy,
            cost: leaf_cost,
            take_self: true,
        })
        .collect()];
    let mut level = p.level;
    while level > coarsest {
        level -= 1;
        let own = root.side(level).powf(s);
        let mut grouped: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
        for n in levels.last().unwrap() {
            grouped
                .entry((n.ix / 2, n.iy / 2))
                .or_default()
                .push(n.cost);
        }
        let nodes = grouped
            .into_iter()
            .map(|((ix, iy), costs)| {
                let sum = neumaier_sum(costs);
                let take_self = own <= sum * (1.0 + TIE);
                Node {
                    ix,
                    iy,
                    cost: if take_self { own } else { sum },
                    take_self,
                }
            })
            .collect();
        levels.push(nodes);
    }
    // levels[k] holds level p.level - k; walk down from the coarsest
    let mut cover = Vec::new();
    let mut pending: Vec<(u64, u64)> = levels
        .last()
        .unwrap()
        .iter()
        .map(|n| (n.ix, n.iy))
        .collect();
    for k in (0..levels.len()).rev() {
        let lvl = p.level - k as u32;
        let nodes = &levels[k];
        let mut next = Vec::new();
        for (ix, iy) in pending {
            let i = nodes
                .binary_search_by(|n| (n.ix, n.iy).cmp(&(ix, iy)))
                .expect("node present");
            if nodes[i].take_self {
                cover.push(DyadicSquare {
                    root,
                    level: lvl,
                    ix,
                    iy,
                });
            } else {
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let c = (2 * ix + dx, 2 * iy + dy);
                    if k > 0
                        && levels[k - 1]
                            .binary_search_by(|n| (n.ix, n.iy).cmp(&c))
                            .is_ok()
                    {
                        next.push(c);
                    }
                }
            }
        }
        next.sort_unstable();
        pending = next;
    }
    cover.sort_by_key(|q| (q.level, q.ix, q.iy));
    let value = neumaier_sum(cover.iter().map(|q| q.side().powf(s)));
    Ok(ContentResult { s, value, cover })
}

/// Minimum of `sum side(Q)^s` over covers of `p` by disjoint dyadic squares of side `>= delta`.
pub fn dyadic_content(p: &PointSet, s: f64) -> Result<ContentResult> {
    dyadic_content_from(p, s, 0)
}

fn max_ratio(p: &PointSet, ratio: impl Fn(f64, f64) -> f64) -> f64 {
    let mut best = 0.0f64;
    for (level, cells) in p.ancestor_counts() {
        let side = p.root.side(level);
        for &(_, _, count) in &cells {
            best = best.max(ratio(count, side));
        }
    }
    best
}

/// `max_Q |P cap Q| / (side(Q) / delta)^s`.
pub fn smallest_katz_tao_constant(p: &PointSet, s: f64) -> Result<f64> {
    check_exponent(s, 0.0, 2.0, true, false, "(0, 2]")?;
    if p.is_empty() {
        return Ok(0.0);
    }
    let delta = p.side();
    Ok(max_ratio(p, |count, side| count / (side / delta).powf(s)))
}

/// `max_Q |P cap Q| / (side(Q)^s |P|)`.
pub fn smallest_delta_s_constant(p: &PointSet, s: f64) -> Result<f64> {
    check_exponent(s, 0.0, 2.0, true, false, "(0, 2]")?;
    if p.is_empty() {
        return Ok(0.0);
    }
    let total = p.len() as f64;
    Ok(max_ratio(p, |count, side| count / (side.powf(s) * total)))
}

/// Greedy Katz-Tao subset: cells in Morton order, admitted while every dyadic
/// ancestor `Q` keeps at most `(side(Q) / delta)^s` admitted cells.
pub fn extract_katz_tao_subset(p: &PointSet, s: f64) -> Result<PointSet> {
    check_exponent(s, 0.0, 2.0, true, false, "(0, 2]")?;
    let mut order: Vec<DyadicSquare> = p.squares().collect();
    order.sort_by_key(|q| q.morton());
    let delta = p.side();
    let caps: Vec<f64> = (0..=p.level)
        .map(|l| (p.root.side(l) / delta).powf(s) * (1.0 + TIE))
        .collect();
    let mut counts: HashMap<(u32, u64, u64), u32> = HashMap::new();
    let mut out = PointSet::new(p.root, p.level);
    for q in order {
        let ok = (0..=p.level).all(|l| {
            let a = q.ancestor(l);
            let c = counts.get(&(l, a.ix, a.iy)).copied().unwrap_or(0);
            (c + 1) as f64 <= caps[l as usize]
        });
        if ok {
            for l in 0..=p.level {
                let a = q.ancestor(l);
                *counts.entry((l, a.ix, a.iy)).or_insert(0) += 1;
            }
            out.insert(q.ix, q.iy);
        }
    }
    Ok(out)
}

/// One scale of a multiscale cover.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFamily {
    pub level: u32,
    pub side: f64,
    pub squares: Vec<DyadicSquare>,
}

/// Optimal cover grouped by scale, with its verified properties.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleCover {
    pub s: f64,
    pub value: f64,
    pub families: Vec<ScaleFamily>,
    /// Largest Katz-Tao constant of a family, each at its own resolution.
    pub max_katz_tao: f64,
}

impl MultiscaleCover {
    /// `sum_j side_j^s |T_j|`.
    pub fn scale_sum(&self) -> f64 {
        neumaier_sum(
            self.families
                .iter()
                .map(|f| f.side.powf(self.s) * f.squares.len() as f64),
        )
    }
}

/// Family Katz-Tao bound enforced by [`multiscale_cover`].
pub const FAMILY_KATZ_TAO_BOUND: f64 = 4.0;

/// Groups the optimal cover by scale and checks the scale-sum identity, unique
/// covering of every cell, and the Katz-Tao bound of each family.
pub fn multiscale_cover(p: &PointSet, s: f64) -> Result<MultiscaleCover> {
    let content = dyadic_content(p, s)?;
    let mut by_level: BTreeMap<u32, Vec<DyadicSquare>> = BTreeMap::new();
    for q in &content.cover {
        by_level.entry(q.level).or_default().push(*q);
    }
    let families: Vec<ScaleFamily> = by_level
        .into_iter()
        .map(|(level, squares)| ScaleFamily {
            level,
            side: p.root.side(level),
            squares,
        })
        .collect();
    let mut max_kt = 0.0f64;
    for f in &families {
        let set = PointSet::from_squares(p.root, f.level, f.squares.iter().copied());
        let kt = smallest_katz_tao_constant(&set, s)?;
        if kt > FAMILY_KATZ_TAO_BOUND {
            return Err(Error::CoverNotKatzTao {
                level: f.level,
                constant: kt,
            });
        }
        max_kt = max_kt.max(kt);
    }
    let cover = MultiscaleCover {
        s,
        value: content.value,
        families,
        max_katz_tao: max_kt,
    };
    let sum = cover.scale_sum();
    if (sum - cover.value).abs() > 1e-12 * cover.value.max(f64::MIN_POSITIVE) {
        return Err(Error::Postcondition(format!(
            "scale sum {sum} differs from the optimum {}",
            cover.value
        )));
    }
    let covered = cover_multiplicities(p, &content.cover);
    if let Some((cell, k)) = covered.into_iter().find(|&(_, k)| k != 1) {
        return Err(Error::Postcondition(format!(
            "cell {cell:?} is covered {k} times"
        )));
    }
    Ok(cover)
}

/// Number of cover squares containing each cell of `p`.
pub fn cover_multiplicities(p: &PointSet, cover: &[DyadicSquare]) -> Vec<((u64, u64), usize)> {
    let mut index: HashMap<(u32, u64, u64), usize> = HashMap::new();
    for q in cover {
        *index.entry((q.level, q.ix, q.iy)).or_insert(0) += 1;
    }
    p.squares()
        .map(|c| {
            let k = (0..=p.level)
                .map(|l| {
                    let a = c.ancestor(l);
                    index.get(&(l, a.ix, a.iy)).copied().unwrap_or(0)
                })
                .sum();
            ((c.ix, c.iy), k)
        })
        .collect()
}

/// Cells of the unit square `[0,1)^2` at resolution `2^-j` selected by `keep(x, y)`.
pub fn unit_square_cells(j: u32, keep: impl Fn(u64, u64) -> bool) -> PointSet {
    let level = Root::Plane.level_for_resolution(j);
    let off = (2u64 << level) / 4;
    let n = 1u64 << j;
    let mut p = PointSet::new(Root::Plane, level);
    for y in 0..n {
        for x in 0..n {
            if keep(x, y) {
                p.insert(off + x, off + y);
            }
        }
    }
    p
}
