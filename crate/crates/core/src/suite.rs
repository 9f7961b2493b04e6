//! The acceptance criteria as runnable checks with their artifacts.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::content::{
    dyadic_content, dyadic_content_from, extract_katz_tao_subset, multiscale_cover,
    unit_square_cells, FAMILY_KATZ_TAO_BOUND,
};
use crate::error::Result;
use crate::geometry::{DyadicSquare, Root};
use crate::incidence::{
    default_deltas, incidences, inequality_sweep, lemma4_upper_bound, random_incidence_fixture,
    sweep_fixture,
};
use crate::measures::{
    generate_cantor_measure, generate_cantor_with, generate_line_measure, riesz_energy_direct,
    AtomMeasure, Construction, PointSet, Window,
};
use crate::report::{csv_table, Artifact};
use crate::scenarios::{
    build_furstenberg, build_radial, furstenberg_sweep, radial_check, slicing_sweep,
};
use crate::spectral::{
    adjoint_xray, cutoff_grid, gaussian_grid, random_bump, random_bump_sum, random_smooth_cylinder,
    riesz_energy_fourier, slice_identity_residual, smoothing_ratios, xray,
};

/// Parameters shared by all criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Grid size of the smoothing criterion.
    pub n: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 1, n: 512 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub artifact: Artifact,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} {} ({:.1}s of {:.0}s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

/// Id, name and runtime budget in seconds; criterion 12 reruns 1 to 11 and
/// its budget is twice their total time.
pub const CRITERIA: [(u32, &str, f64); 12] = [
    (1, "fourier-slice", 30.0),
    (2, "adjoint-duality", 60.0),
    (3, "smoothing", 300.0),
    (4, "angular-bound", 60.0),
    (5, "incidence-energy", 600.0),
    (6, "energy-fourier", 300.0),
    (7, "content-dp", 120.0),
    (8, "multiscale-cover", 60.0),
    (9, "furstenberg", 600.0),
    (10, "slicing", 600.0),
    (11, "radial", 120.0),
    (12, "determinism", 0.0),
];

fn f(v: f64) -> String {
    format!("{v}")
}

fn finish(
    id: u32,
    start: Instant,
    ok: bool,
    detail: String,
    csv: String,
    extra: serde_json::Value,
) -> CriterionResult {
    finish_with(
        id,
        CRITERIA[id as usize - 1].2,
        start,
        ok,
        detail,
        csv,
        extra,
    )
}

fn finish_with(
    id: u32,
    budget: f64,
    start: Instant,
    ok: bool,
    detail: String,
    csv: String,
    extra: serde_json::Value,
) -> CriterionResult {
    let name = CRITERIA[id as usize - 1].1;
    let seconds = start.elapsed().as_secs_f64();
    let mut summary = serde_json::json!({ "criterion": id, "name": name, "pass": ok });
    if let (Some(m), serde_json::Value::Object(e)) = (summary.as_object_mut(), extra) {
        m.extend(e);
    }
    CriterionResult {
        id,
        name,
        pass: ok && seconds <= budget,
        detail: if seconds > budget {
            format!("{detail}; over the runtime budget")
        } else {
            detail
        },
        seconds,
        budget_seconds: budget,
        artifact: Artifact::new(format!("criterion_{id:02}_{name}"), csv, summary),
    }
}

pub fn fourier_slice(_: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let r256 = slice_identity_residual(&gaussian_grid(256)?)?;
    let r512 = slice_identity_residual(&gaussian_grid(512)?)?;
    let ok = r512 <= 1e-3 && r512 <= r256;
    let csv = csv_table(
        &["n", "residual"],
        [vec!["256".into(), f(r256)], vec!["512".into(), f(r512)]],
    );
    Ok(finish(
        1,
        start,
        ok,
        format!("residual {r512:.2e} at n=512, {r256:.2e} at n=256"),
        csv,
        serde_json::json!({"residual_512": r512, "residual_256": r256}),
    ))
}

pub fn adjoint_duality(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let n = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ 0x0002);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let k = rng.gen_range(1..5);
        let g = random_bump_sum(n, &mut rng, k)?;
        let rg = xray(&g)?;
        let fc = random_smooth_cylinder(rg.n_theta, rg.n_r, &mut rng)?;
        let lhs = adjoint_xray(&fc, n)?.inner(&g);
        let rhs = fc.inner(&rg);
        let gap = (lhs - rhs).abs() / (fc.l2_norm_sq() * rg.l2_norm_sq()).sqrt();
        worst = worst.max(gap);
        rows.push(vec![i.to_string(), f(lhs), f(rhs), f(gap)]);
    }
    let ok = worst <= 1e-6;
    Ok(finish(
        2,
        start,
        ok,
        format!("max relative gap {worst:.2e} over 100 pairs"),
        csv_table(&["pair", "lhs", "rhs", "gap"], rows),
        serde_json::json!({"max_gap": worst}),
    ))
}

pub const SMOOTHING_EXPONENTS: [f64; 5] = [-0.5, -0.25, 0.0, 0.25, 0.5];

pub fn smoothing(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ 0x0003);
    let chi = cutoff_grid(c.n)?;
    let mut ratios = Vec::new();
    for _ in 0..40 {
        ratios.push(smoothing_ratios(
            &random_bump(c.n, &mut rng)?,
            &SMOOTHING_EXPONENTS,
            &chi,
        )?);
    }
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (k, &s) in SMOOTHING_EXPONENTS.iter().enumerate() {
        let mx = ratios.iter().map(|r| r[k]).fold(0.0, f64::max);
        let mn = ratios.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
        worst = worst.max(mx / mn);
        rows.push(vec![f(s), f(mn), f(mx), f(mx / mn)]);
    }
    let ok = worst <= 50.0;
    Ok(finish(
        3,
        start,
        ok,
        format!("largest max/min {worst:.3} at n={}", c.n),
        csv_table(&["s", "min_ratio", "max_ratio", "spread"], rows),
        serde_json::json!({"max_spread": worst}),
    ))
}

pub fn angular_bound(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ 0x0004);
    let deltas = default_deltas();
    let mut rows = Vec::new();
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for i in 0..1000 {
        let n = rng.gen_range(1..=50);
        let (mu, nu) = random_incidence_fixture(&mut rng, n, 9)?;
        let d = deltas[rng.gen_range(0..deltas.len())];
        let inc = incidences(&mu, &nu, d)?.value;
        let bound = lemma4_upper_bound(&mu, &nu, d)?;
        if 1.01 * bound < inc {
            violations += 1;
        }
        if inc > 0.0 {
            min_ratio = min_ratio.min(bound / inc);
        }
        rows.push(vec![i.to_string(), f(d), f(inc), f(bound)]);
    }
    let ok = violations == 0;
    Ok(finish(
        4,
        start,
        ok,
        format!("{violations} violations in 1000 fixtures, min bound/incidence {min_ratio:.3}"),
        csv_table(&["fixture", "delta", "incidence", "bound"], rows),
        serde_json::json!({"violations": violations, "min_ratio": min_ratio}),
    ))
}

pub const SWEEP_EXPONENTS: [f64; 5] = [1.1, 1.3, 1.5, 1.7, 1.9];

pub fn incidence_energy(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut fixtures = Vec::new();
    let mut ok = true;
    let mut worst_slope = f64::NEG_INFINITY;
    for &t in &SWEEP_EXPONENTS {
        for k in 0..3 {
            let seed = c.seed.wrapping_add(k);
            let (mu, nu) = sweep_fixture(t, seed)?;
            let tab = inequality_sweep(&mu, &nu, t, &default_deltas())?;
            let pass = tab.slope_ok(0.1) && tab.growth_ok(4.0);
            ok &= pass;
            worst_slope = worst_slope.max(tab.slope);
            for r in &tab.rows {
                rows.push(vec![
                    f(t),
                    seed.to_string(),
                    f(r.delta),
                    f(r.incidence),
                    f(r.energy_mu),
                    f(r.energy_nu),
                    f(r.ratio),
                ]);
            }
            fixtures.push(serde_json::json!({"t": t, "seed": seed, "slope": tab.slope, "max_ratio": tab.max_ratio(), "pass": pass}));
        }
    }
    let csv = csv_table(
        &[
            "t",
            "seed",
            "delta",
            "incidence",
            "energy_mu",
            "energy_nu",
            "ratio",
        ],
        rows,
    );
    Ok(finish(
        5,
        start,
        ok,
        format!("largest slope {worst_slope:.3} over 15 fixtures"),
        csv,
        serde_json::json!({"fixtures": fixtures}),
    ))
}

/// Generated measures used by the energy comparison.
pub fn energy_fixtures(seed: u64) -> Result<Vec<(String, AtomMeasure)>> {
    let mut out = Vec::new();
    for s in [0.5, 1.0, 1.5, 2.0] {
        out.push((
            format!("cantor-{s}"),
            generate_cantor_measure(s, 7, seed, Window::unit())?,
        ));
    }
    out.push((
        "four-corner".into(),
        generate_cantor_with(
            Root::Plane,
            1.0,
            8,
            seed,
            Window::unit(),
            Construction::FourCorner,
        )?,
    ));
    out.push((
        "segment".into(),
        generate_cantor_with(
            Root::Plane,
            1.0,
            7,
            seed,
            Window::square(0.0, 0.0, 0.5),
            Construction::Segment,
        )?,
    ));
    out.push((
        "line-1.5".into(),
        generate_line_measure(1.5, 7, seed, (0.25, 0.75), (-0.5, 0.5))?,
    ));
    Ok(out)
}

pub fn energy_fourier(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rows = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (name, m) in energy_fixtures(c.seed)? {
        for s in [0.5, 1.0, 1.5] {
            let d = riesz_energy_direct(&m, s)?;
            let fr = riesz_energy_fourier(&m, s)?;
            lo = lo.min(fr / d);
            hi = hi.max(fr / d);
            rows.push(vec![name.clone(), f(s), f(d), f(fr), f(fr / d)]);
        }
    }
    let ok = lo >= 0.25 && hi <= 4.0;
    Ok(finish(
        6,
        start,
        ok,
        format!("fourier/direct in [{lo:.3}, {hi:.3}]"),
        csv_table(&["measure", "s", "direct", "fourier", "ratio"], rows),
        serde_json::json!({"min_ratio": lo, "max_ratio": hi}),
    ))
}

/// Minimum of `sum side^s` over every antichain cover of the cells of `p` inside
/// `q`, by explicit enumeration of all covers.
pub fn exhaustive_cover_cost(q: DyadicSquare, p: &PointSet, s: f64) -> f64 {
    fn covers(q: DyadicSquare, cells: &[(u64, u64)], leaf: u32) -> Vec<Vec<DyadicSquare>> {
        let sh = leaf - q.level;
        let inside: Vec<(u64, u64)> = cells
            .iter()
            .copied()
            .filter(|&(x, y)| (x >> sh, y >> sh) == (q.ix, q.iy))
            .collect();
        if inside.is_empty() {
            return vec![vec![]];
        }
        let mut out = vec![vec![q]];
        if q.level < leaf {
            let mut partial: Vec<Vec<DyadicSquare>> = vec![vec![]];
            for c in q.children() {
                let sub = covers(c, &inside, leaf);
                let mut next = Vec::with_capacity(partial.len() * sub.len());
                for a in &partial {
                    for b in &sub {
                        let mut v = a.clone();
                        v.extend_from_slice(b);
                        next.push(v);
                    }
                }
                partial = next;
            }
            out.extend(partial);
        }
        out
    }
    let cells: Vec<(u64, u64)> = p.cells.iter().copied().collect();
    covers(q, &cells, p.level)
        .iter()
        .map(|c| c.iter().map(|q| q.side().powf(s)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Random sparse set with at most 6 cells in each of up to 40 blocks of side `16 delta`.
pub fn random_sparse_set(rng: &mut impl Rng, j: u32) -> PointSet {
    let level = Root::Plane.level_for_resolution(j);
    let top = level - 4;
    let mut p = PointSet::new(Root::Plane, level);
    for _ in 0..rng.gen_range(1..40) {
        let (bx, by) = (
            rng.gen_range(0..(1u64 << top)),
            rng.gen_range(0..(1u64 << top)),
        );
        for _ in 0..rng.gen_range(1..6) {
            p.insert(
                bx * 16 + rng.gen_range(0..16),
                by * 16 + rng.gen_range(0..16),
            );
        }
    }
    p
}

pub fn content_dp(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ 0x0007);
    let mut rows = Vec::new();
    let mut mismatches = 0;
    for i in 0..100 {
        let p = random_sparse_set(&mut rng, 8);
        let s = rng.gen_range(0.2..2.0);
        let top = p.level - 4;
        let dp = dyadic_content_from(&p, s, top)?.value;
        let mut blocks: Vec<(u64, u64)> = p.cells.iter().map(|&(x, y)| (x >> 4, y >> 4)).collect();
        blocks.dedup();
        blocks.sort_unstable();
        blocks.dedup();
        let oracle: f64 = blocks
            .into_iter()
            .map(|(ix, iy)| {
                exhaustive_cover_cost(
                    DyadicSquare {
                        root: Root::Plane,
                        level: top,
                        ix,
                        iy,
                    },
                    &p,
                    s,
                )
            })
            .sum();
        if (dp - oracle).abs() > 1e-12 * oracle {
            mismatches += 1;
        }
        rows.push(vec![format!("random-{i}"), f(s), f(dp), f(oracle)]);
    }
    let mut rows_ok = true;
    for k in [3u32, 5, 7] {
        let p = unit_square_cells(k, |_, y| y == 0);
        let c1 = dyadic_content(&p, 1.0)?.value;
        let c2 = dyadic_content(&p, 2.0)?.value;
        let delta = (-(k as f64)).exp2();
        rows_ok &= c1 == 1.0 && c2 == delta;
        rows.push(vec![
            format!("bottom-row-{k}"),
            "1".into(),
            f(c1),
            "1".into(),
        ]);
        rows.push(vec![format!("bottom-row-{k}"), "2".into(), f(c2), f(delta)]);
    }
    let ok = mismatches == 0 && rows_ok;
    Ok(finish(
        7,
        start,
        ok,
        format!("{mismatches} mismatches in 100 sets; bottom rows exact: {rows_ok}"),
        csv_table(&["set", "s", "dp", "oracle"], rows),
        serde_json::json!({"mismatches": mismatches, "bottom_rows_exact": rows_ok}),
    ))
}

/// Named point sets with the exponent at which they are covered.
pub fn content_fixtures(seed: u64) -> Result<Vec<(String, PointSet, f64)>> {
    let mut out = Vec::new();
    for k in [3u32, 5, 7] {
        for s in [1.0, 2.0] {
            out.push((
                format!("bottom-row-{k}"),
                unit_square_cells(k, |_, y| y == 0),
                s,
            ));
        }
    }
    out.push(("full-square".into(), unit_square_cells(5, |_, _| true), 2.0));
    out.push(("diagonal".into(), unit_square_cells(6, |x, y| x == y), 1.0));
    out.push((
        "block-and-isolated".into(),
        unit_square_cells(7, |x, y| {
            (x < 32 && y < 32) || (x >= 40 && x % 8 == 0 && y == 100)
        }),
        2.0,
    ));
    for d in [0.5, 1.0, 1.5, 2.0] {
        let p = generate_cantor_measure(d, 7, seed, Window::unit())?.support();
        for s in [0.5, 1.0, 1.5] {
            out.push((format!("cantor-{d}"), p.clone(), s));
        }
    }
    let fu = build_furstenberg(0.8, 1.4, 1.0 / 64.0, seed)?.union();
    out.push(("furstenberg-union".into(), fu, 1.7));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0008);
    for i in 0..10 {
        out.push((
            format!("sparse-{i}"),
            random_sparse_set(&mut rng, 8),
            rng.gen_range(0.2..2.0),
        ));
    }
    Ok(out)
}

pub fn multiscale(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (name, p, s) in content_fixtures(c.seed)? {
        match multiscale_cover(&p, s) {
            Ok(m) => {
                let kt = extract_katz_tao_subset(&p, s)?.len() as f64 * p.side().powf(s);
                if kt < m.value / 64.0 {
                    failures.push(format!("{name}: extraction"));
                }
                rows.push(vec![
                    name,
                    f(s),
                    f(m.value),
                    f(m.scale_sum()),
                    m.families.len().to_string(),
                    f(m.max_katz_tao),
                ]);
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!(
            "{} fixtures, family Katz-Tao bound {FAMILY_KATZ_TAO_BOUND}",
            rows.len()
        )
    } else {
        failures.join("; ")
    };
    Ok(finish(
        8,
        start,
        ok,
        detail,
        csv_table(
            &[
                "fixture",
                "s",
                "value",
                "scale_sum",
                "families",
                "max_katz_tao",
            ],
            rows,
        ),
        serde_json::json!({"failures": failures}),
    ))
}

pub const FURSTENBERG_FIXTURES: [(f64, f64); 3] = [(0.5, 1.6), (0.8, 1.4), (1.0, 1.2)];

fn scales(j0: i32, j1: i32) -> Vec<f64> {
    (j0..=j1).map(|j| (-(j as f64)).exp2()).collect()
}

pub fn furstenberg(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut ok = true;
    let mut fixtures = Vec::new();
    for (s, t) in FURSTENBERG_FIXTURES {
        let sw = furstenberg_sweep(s, t, s - 0.1, &scales(5, 8), c.seed)?;
        let pass = sw.slope >= -0.1 && sw.min_value >= 0.01;
        ok &= pass;
        for &(d, v) in &sw.rows {
            rows.push(vec![f(s), f(t), f(d), f(v)]);
        }
        fixtures.push(serde_json::json!({"s": s, "t": t, "slope": sw.slope, "min_value": sw.min_value, "pass": pass}));
    }
    let detail = fixtures
        .iter()
        .map(|x| {
            format!(
                "slope {:.3} min {:.3}",
                x["slope"].as_f64().unwrap(),
                x["min_value"].as_f64().unwrap()
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    Ok(finish(
        9,
        start,
        ok,
        detail,
        csv_table(&["s", "t", "delta", "value"], rows),
        serde_json::json!({"fixtures": fixtures}),
    ))
}

pub fn slicing(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let sw = slicing_sweep(0.6, 1.6, 1.3, &scales(5, 8), c.seed)?;
    let ok = sw.slope >= -0.1 && sw.min_value >= 0.005;
    Ok(finish(
        10,
        start,
        ok,
        format!("slope {:.3}, min content {:.3}", sw.slope, sw.min_value),
        sw.to_csv(),
        serde_json::json!({"slope": sw.slope, "min_value": sw.min_value}),
    ))
}

pub fn radial(c: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let delta = 1.0 / 256.0;
    let (e, fset) = build_radial(0.8, 1.5, delta, c.seed)?;
    let rep = radial_check(&e, &fset, 0.8, 1.5, 0.6, c.seed)?;
    let ok = rep.any_achieved();
    let b = rep.best_row();
    Ok(finish(
        11,
        start,
        ok,
        format!(
            "best covering {} (subsets {}) vs {:.1}, fraction {:.2}",
            b.full, b.min_subset, rep.threshold, rep.fraction
        ),
        rep.to_csv(),
        serde_json::json!({"threshold": rep.threshold, "best_full": b.full, "best_min_subset": b.min_subset, "fraction": rep.fraction}),
    ))
}

pub type CriterionFn = fn(&SuiteConfig) -> Result<CriterionResult>;

pub const RUNNERS: [CriterionFn; 11] = [
    fourier_slice,
    adjoint_duality,
    smoothing,
    angular_bound,
    incidence_energy,
    energy_fourier,
    content_dp,
    multiscale,
    furstenberg,
    slicing,
    radial,
];

/// Runs criterion `id` in 1..=11.
pub fn run_criterion(id: u32, c: &SuiteConfig) -> Result<CriterionResult> {
    RUNNERS[id as usize - 1](c)
}

/// Runs criteria 1 to 11, calling `each` after every one.
pub fn run_core(
    c: &SuiteConfig,
    mut each: impl FnMut(&CriterionResult),
) -> Result<Vec<CriterionResult>> {
    let mut out = Vec::new();
    for id in 1..=11 {
        let r = run_criterion(id, c)?;
        each(&r);
        out.push(r);
    }
    Ok(out)
}

/// Criterion 12: a second run of 1 to 11 with the same seed gives byte-identical CSV.
pub fn determinism(c: &SuiteConfig, first: &[CriterionResult]) -> Result<CriterionResult> {
    let start = Instant::now();
    let second = run_core(c, |_| {})?;
    let mut rows = Vec::new();
    let mut same = true;
    for (a, b) in first.iter().zip(&second) {
        let eq = a.artifact.csv == b.artifact.csv;
        same &= eq;
        rows.push(vec![a.artifact.name.clone(), eq.to_string()]);
    }
    let suite: f64 = first.iter().map(|x| x.seconds).sum();
    Ok(finish_with(
        12,
        2.0 * suite.max(1.0),
        start,
        same,
        format!(
            "{} of {} artifacts identical",
            rows.iter().filter(|r| r[1] == "true").count(),
            rows.len()
        ),
        csv_table(&["artifact", "identical"], rows),
        serde_json::json!({}),
    ))
}

/// All twelve criteria.
pub fn verify_all(
    c: &SuiteConfig,
    mut each: impl FnMut(&CriterionResult),
) -> Result<Vec<CriterionResult>> {
    let mut out = run_core(c, &mut each)?;
    let d = determinism(c, &out)?;
    each(&d);
    out.push(d);
    Ok(out)
}
