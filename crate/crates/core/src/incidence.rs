//! Weighted point-tube incidences, the angular-average upper bound, and the
//! incidence-energy ratio sweep.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use rand::Rng;

use crate::error::{check_exponent, Error, Result};
use crate::geometry::{project, Point, Root};
use crate::measures::{
    generate_cantor_measure, generate_line_measure, neumaier_sum, riesz_energy_truncated,
    AtomMeasure, LineParamMeasure, PlanarAtomMeasure, Window,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Brute,
    Bucketed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncidenceResult {
    pub delta: f64,
    pub value: f64,
    pub method: Method,
}

/// Largest scale accepted by [`inequality_sweep`].
pub const MAX_SWEEP_DELTA: f64 = 1.0 / 32.0;

#[inline]
fn incident(p: Point, theta: f64, r: f64, delta: f64) -> bool {
    (project(p, theta) - r).abs() <= delta
}

fn check_roots(mu: &PlanarAtomMeasure, nu: &LineParamMeasure) -> Result<()> {
    if mu.root() != Root::Plane || nu.root() != Root::LineSpace {
        return Err(Error::Invalid(
            "expected a planar measure and a line-space measure".into(),
        ));
    }
    Ok(())
}

/// Line-space atoms grouped by theta column, each column sorted by `r`.
struct Bands {
    thetas: Vec<f64>,
    starts: Vec<usize>,
    r: Vec<f64>,
    v: Vec<f64>,
}

impl Bands {
    fn new(nu: &LineParamMeasure) -> Self {
        let mut thetas = Vec::new();
        let mut starts = Vec::new();
        let mut r = Vec::with_capacity(nu.len());
        let mut v = Vec::with_capacity(nu.len());
        let mut last = None;
        for (i, (q, w)) in nu.iter().enumerate() {
            let c = q.center();
            if last != Some(q.ix) {
                last = Some(q.ix);
                thetas.push(c.x);
                starts.push(i);
            }
            r.push(c.y);
            v.push(w);
        }
        starts.push(r.len());
        Self {
            thetas,
            starts,
            r,
            v,
        }
    }

    /// Index range of band `b` with `r` in `[lo, hi]`.
    fn range(&self, b: usize, lo: f64, hi: f64) -> (usize, usize) {
        let rs = &self.r[self.starts[b]..self.starts[b + 1]];
        let a = rs.partition_point(|&x| x < lo);
        let e = rs.partition_point(|&x| x <= hi);
        (self.starts[b] + a, self.starts[b] + e)
    }
}

fn ordered_total(rows: Vec<f64>) -> f64 {
    neumaier_sum(rows)
}

/// `sum_{p,q} w_p v_q [ |center(p) . e_theta_q - r_q| <= delta ]`.
pub fn incidences(
    mu: &PlanarAtomMeasure,
    nu: &LineParamMeasure,
    delta: f64,
) -> Result<IncidenceResult> {
    incidences_with(mu, nu, delta, Method::Bucketed)
}

pub fn incidences_with(
    mu: &PlanarAtomMeasure,
    nu: &LineParamMeasure,
    delta: f64,
    method: Method,
) -> Result<IncidenceResult> {
    check_roots(mu, nu)?;
    let res = mu.delta().max(nu.delta());
    if !(delta >= res) {
        return Err(Error::Resolution(format!(
            "delta {delta} is below the measure resolution {res}"
        )));
    }
    let points = mu.centers();
    let weights = mu.weights();
    let rows: Vec<f64> = match method {
        Method::Brute => {
            let lines: Vec<(f64, f64, f64)> = nu
                .iter()
                .map(|(q, v)| (q.center().x, q.center().y, v))
                .collect();
            points
                .par_iter()
                .zip(weights.par_iter())
                .map(|(&p, &w)| {
                    w * neumaier_sum(
                        lines
                            .iter()
                            .filter(|&&(t, r, _)| incident(p, t, r, delta))
                            .map(|&(_, _, v)| v),
                    )
                })
                .collect()
        }
        Method::Bucketed => {
            let bands = &Bands::new(nu);
            let slack = 1e-9 * (1.0 + delta);
            points
                .par_iter()
                .zip(weights.par_iter())
                .map(|(&p, &w)| {
                    let hits = (0..bands.thetas.len()).flat_map(|b| {
                        let t = bands.thetas[b];
                        let c = project(p, t);
                        let (i0, i1) = bands.range(b, c - delta - slack, c + delta + slack);
                        (i0..i1).filter(move |&i| incident(p, t, bands.r[i], delta))
                    });
                    w * neumaier_sum(hits.map(|i| bands.v[i]))
                })
                .collect()
        }
    };
    Ok(IncidenceResult {
        delta,
        value: ordered_total(rows),
        method,
    })
}

/// Measure of `{theta in [0,1] : |(theta, pi_theta(p)) - q| <= radius}`.
///
/// Bisection with a second-order Taylor bound; undecided pieces shorter than
/// `tol / 16` are counted as inside, so the result never underestimates.
pub fn angular_measure(p: Point, q: (f64, f64), radius: f64, tol: f64) -> f64 {
    let (tq, rq) = q;
    let a = (tq - radius).max(0.0);
    let b = (tq + radius).min(1.0);
    if b <= a {
        return 0.0;
    }
    let np = p.norm();
    let leaf = tol / 16.0;
    let mut total = 0.0;
    let mut stack = vec![(a, b)];
    while let Some((lo, hi)) = stack.pop() {
        let h = 0.5 * (hi - lo);
        let m = lo + h;
        let (s, c) = (2.0 * PI * m).sin_cos();
        let d = p.x * c + p.y * s - rq;
        let dd = 2.0 * PI * (p.y * c - p.x * s);
        let g = (m - tq) * (m - tq) + d * d - radius * radius;
        let g1 = 2.0 * (m - tq) + 2.0 * d * dd;
        let m2 = 2.0
            + 2.0 * (4.0 * PI * PI * np * np + (d.abs() + 2.0 * PI * np * h) * 4.0 * PI * PI * np);
        let spread = g1.abs() * h + 0.5 * m2 * h * h;
        if g - spread > 0.0 {
            continue;
        }
        if g + spread < 0.0 || 2.0 * h <= leaf {
            total += 2.0 * h;
            continue;
        }
        stack.push((m, hi));
        stack.push((lo, m));
    }
    total
}

/// `delta^-1 sum_p w_p sum_q v_q |{theta : |(theta, pi_theta(p)) - q| <= 3 delta}|`.
pub fn lemma4_upper_bound(
    mu: &PlanarAtomMeasure,
    nu: &LineParamMeasure,
    delta: f64,
) -> Result<f64> {
    check_roots(mu, nu)?;
    if !(delta > 0.0) {
        return Err(Error::Invalid(format!("delta {delta} must be positive")));
    }
    if let Some((q, _)) = nu.iter().find(|(q, _)| {
        let t = q.center().x;
        t < delta || t > 1.0 - delta
    }) {
        return Err(Error::Hypothesis(format!(
            "line atom at theta {} is within delta {delta} of the ends of [0,1]",
            q.center().x
        )));
    }
    let bands = &Bands::new(nu);
    let radius = 3.0 * delta;
    let tol = 1e-4 * delta;
    let points = mu.centers();
    let weights = mu.weights();
    let rows: Vec<f64> = points
        .par_iter()
        .zip(weights.par_iter())
        .map(|(&p, &w)| {
            let reach = radius + 2.0 * PI * p.norm() * radius;
            let terms = (0..bands.thetas.len()).flat_map(|b| {
                let t = bands.thetas[b];
                let c = project(p, t);
                let (i0, i1) = bands.range(b, c - reach, c + reach);
                (i0..i1).map(move |i| (t, i))
            });
            w * neumaier_sum(
                terms.map(|(t, i)| bands.v[i] * angular_measure(p, (t, bands.r[i]), radius, tol)),
            )
        })
        .collect();
    Ok(ordered_total(rows) / delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub delta: f64,
    pub incidence: f64,
    pub energy_mu: f64,
    pub energy_nu: f64,
    pub ratio: f64,
}

/// Incidence-energy ratios per scale with the fitted log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioTable {
    pub t: f64,
    pub rows: Vec<RatioRow>,
    pub slope: f64,
}

/// Ordinary least squares slope of `ys` against `xs`; 0 with fewer than two points.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Slope of `ln value` against `ln(1/delta)` over the rows with positive value.
pub fn log_slope(points: &[(f64, f64)]) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|&&(_, v)| v > 0.0)
        .map(|&(d, v)| ((1.0 / d).ln(), v.ln()))
        .unzip();
    ols_slope(&xs, &ys)
}

impl RatioTable {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    /// Ratio at the largest delta.
    pub fn coarsest_ratio(&self) -> f64 {
        self.rows
            .iter()
            .max_by(|a, b| a.delta.total_cmp(&b.delta))
            .map(|r| r.ratio)
            .unwrap_or(0.0)
    }

    pub fn slope_ok(&self, max_slope: f64) -> bool {
        self.slope <= max_slope
    }

    pub fn growth_ok(&self, factor: f64) -> bool {
        self.max_ratio() <= factor * self.coarsest_ratio()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,t,incidence,energy_mu,energy_nu,ratio\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.delta, self.t, r.incidence, r.energy_mu, r.energy_nu, r.ratio
            ));
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let slope_ok = self.slope_ok(0.1);
        let growth_ok = self.growth_ok(4.0);
        serde_json::json!({
            "t": self.t,
            "slope": self.slope,
            "max_ratio": self.max_ratio(),
            "pass_slope": slope_ok,
            "pass_growth": growth_ok,
            "pass": slope_ok && growth_ok,
        })
    }
}

fn check_sweep_hypotheses(
    mu: &PlanarAtomMeasure,
    nu: &LineParamMeasure,
    t: f64,
    deltas: &[f64],
) -> Result<()> {
    check_exponent(t, 1.0, 2.0, true, true, "(1, 2)")?;
    check_roots(mu, nu)?;
    if mu.max_center_norm() > 1.0 {
        return Err(Error::Hypothesis("mu is not supported in B(1)".into()));
    }
    for (q, _) in nu.iter() {
        let c = q.corner();
        let h = q.side();
        if c.x < 0.25 || c.x + h > 0.75 {
            return Err(Error::Hypothesis(
                "nu theta-support is not inside [1/4, 3/4]".into(),
            ));
        }
        if c.y < -1.0 || c.y + h > 1.0 {
            return Err(Error::Hypothesis(
                "nu r-support is not inside [-1, 1]".into(),
            ));
        }
    }
    if deltas.is_empty() {
        return Err(Error::Invalid("no scales given".into()));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0 && d <= MAX_SWEEP_DELTA)) {
        return Err(Error::Hypothesis(format!("delta {d} is outside (0, 1/32]")));
    }
    Ok(())
}

/// Incidences against `delta sqrt(I_{3-t}(mu) I_t(nu))` for every delta, energies
/// truncated at the current delta.
pub fn inequality_sweep(
    mu: &PlanarAtomMeasure,
    nu: &LineParamMeasure,
    t: f64,
    deltas: &[f64],
) -> Result<RatioTable> {
    check_sweep_hypotheses(mu, nu, t, deltas)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let incidence = incidences(mu, nu, delta)?.value;
        let energy_mu = riesz_energy_truncated(mu, 3.0 - t, delta)?;
        let energy_nu = riesz_energy_truncated(nu, t, delta)?;
        let denom = delta * (energy_mu * energy_nu).sqrt();
        let ratio = if incidence == 0.0 {
            0.0
        } else {
            incidence / denom
        };
        rows.push(RatioRow {
            delta,
            incidence,
            energy_mu,
            energy_nu,
            ratio,
        });
    }
    let slope = log_slope(&rows.iter().map(|r| (r.delta, r.ratio)).collect::<Vec<_>>());
    Ok(RatioTable { t, rows, slope })
}

/// Resolution of the sweep fixtures.
pub const SWEEP_RESOLUTION_LOG2: u32 = 9;

/// `mu` of dimension `3 - t` on `[-1/8, 1/8)^2` and `nu` of dimension `t` on
/// `[3/8, 5/8) x [-1/8, 1/8)`, both probability measures at resolution `2^-9`.
pub fn sweep_fixture(t: f64, seed: u64) -> Result<(PlanarAtomMeasure, LineParamMeasure)> {
    check_exponent(t, 1.0, 2.0, true, true, "(1, 2)")?;
    let mu = generate_cantor_measure(
        3.0 - t,
        SWEEP_RESOLUTION_LOG2,
        seed,
        Window::square(-0.125, -0.125, 0.25),
    )?;
    let nu = generate_line_measure(
        t,
        SWEEP_RESOLUTION_LOG2,
        seed ^ 0x9e37_79b9_7f4a_7c15,
        (0.375, 0.625),
        (-0.125, 0.125),
    )?;
    Ok((mu, nu))
}

/// Default sweep scales `2^-5 .. 2^-9`.
pub fn default_deltas() -> Vec<f64> {
    (5..=9).map(|j| (-(j as f64)).exp2()).collect()
}

/// `n` random points in `B(0.95)` with random weights, and `n` lines with
/// `theta` in `[0.26, 0.74)`, each within `0.05` in `r` of the line through one of the points.
pub fn random_incidence_fixture(
    rng: &mut impl Rng,
    n: usize,
    res: u32,
) -> Result<(PlanarAtomMeasure, LineParamMeasure)> {
    let pts: Vec<Point> = (0..n)
        .map(|_| {
            let (r, a): (f64, f64) = (rng.gen::<f64>().sqrt() * 0.95, rng.gen::<f64>());
            Point::new(r * (2.0 * PI * a).cos(), r * (2.0 * PI * a).sin())
        })
        .collect();
    let lines: Vec<Point> = (0..n)
        .map(|i| {
            let t = rng.gen_range(0.26..0.74);
            let base = project(pts[i], t);
            Point::new(t, (base + rng.gen_range(-0.05..0.05)).clamp(-0.99, 0.99))
        })
        .collect();
    let level = Root::Plane.level_for_resolution(res);
    let mut mu_atoms = Vec::with_capacity(n);
    for p in &pts {
        let q = Root::Plane
            .cell_at(level, *p)
            .expect("inside the plane box");
        mu_atoms.push((q.ix, q.iy, rng.gen_range(0.1..1.0)));
    }
    let mut nu_atoms = Vec::with_capacity(n);
    for l in &lines {
        let q = Root::LineSpace.cell_at(res, *l).expect("inside line space");
        nu_atoms.push((q.ix, q.iy, rng.gen_range(0.1..1.0)));
    }
    Ok((
        AtomMeasure::from_atoms(Root::Plane, res, mu_atoms)?,
        AtomMeasure::from_atoms(Root::LineSpace, res, nu_atoms)?,
    ))
}
