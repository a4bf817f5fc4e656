//! Independent oracles and randomized property suites shared by the
//! integration tests and the acceptance target.
//!
//! Every suite returns a list of [`Check`]s instead of panicking so callers
//! can either assert or print one verdict per property.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fairapp_core::condition::{frank_wolfe_min_distance, FwOptions};
use fairapp_core::estimation::{
    assumption1_diagnostic, coverage_frequency, ConfidenceWidths, EmpiricalJoint, TradeoffSlack,
};
use fairapp_core::game::{solve_matrix_game, solve_weighted_minmax, weighted_minmax_value, MatrixGame};
use fairapp_core::geometry::{SetKind, TargetSet};
use fairapp_core::payoff::{CalibrationGrid, PayoffTensor, Shape};
use fairapp_core::prob::{tv_distance, ContextSpace, JointDistribution, MixedAction};
use fairapp_core::strategy::Monitoring;

/// Outcome of one property: the worst observed quantity against its bound.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn bound(name: &str, worst: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: worst <= limit, detail: format!("worst {worst:.3e} vs bound {limit:.1e}") }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

pub fn assert_all(checks: &[Check]) {
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
    assert!(failed.is_empty(), "failed checks: {failed:#?}");
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Polyhedral QP oracle

/// `{y : A y <= b}`.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl Polytope {
    fn empty(dim: usize) -> Self {
        let _ = dim;
        Self { a: Vec::new(), b: Vec::new() }
    }

    /// Inequality description of any target set (all variants are polyhedral).
    pub fn of(set: &TargetSet) -> Self {
        let d = set.dim();
        let unit = |i: usize, s: f64| {
            let mut r = vec![0.0; d];
            r[i] = s;
            r
        };
        let mut p = Self::empty(d);
        match set.kind() {
            SetKind::Orthant { .. } => {
                for i in 0..d {
                    p.a.push(unit(i, -1.0));
                    p.b.push(0.0);
                }
            }
            SetKind::WeightedL1Ball { weights, radius } => {
                for mask in 0..(1usize << d) {
                    p.a.push((0..d).map(|i| if mask >> i & 1 == 1 { -weights[i] } else { weights[i] }).collect());
                    p.b.push(*radius);
                }
            }
            SetKind::WeightedSlab { normal, half_width } => {
                p.a.push(normal.clone());
                p.b.push(*half_width);
                p.a.push(normal.iter().map(|w| -w).collect());
                p.b.push(*half_width);
            }
            SetKind::Box { lower, upper } => {
                for i in 0..d {
                    p.a.push(unit(i, 1.0));
                    p.b.push(upper[i]);
                    p.a.push(unit(i, -1.0));
                    p.b.push(-lower[i]);
                }
            }
            SetKind::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let fp = Self::of(f);
                    for (row, rhs) in fp.a.into_iter().zip(fp.b) {
                        let mut r = vec![0.0; d];
                        r[off..off + f.dim()].copy_from_slice(&row);
                        p.a.push(r);
                        p.b.push(rhs);
                    }
                    off += f.dim();
                }
            }
            SetKind::Intersection { members } => {
                for m in members {
                    let mp = Self::of(m);
                    p.a.extend(mp.a);
                    p.b.extend(mp.b);
                }
            }
        }
        p
    }

    pub fn max_violation(&self, y: &[f64]) -> f64 {
        self.a.iter().zip(&self.b).map(|(r, b)| dot(r, y) - b).fold(0.0, f64::max)
    }

    /// Euclidean projection: Hildreth's dual coordinate ascent, then an exact
    /// solve on the active set it identifies.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let m = self.a.len();
        let norms: Vec<f64> = self.a.iter().map(|r| dot(r, r)).collect();
        let mut lambda = vec![0.0; m];
        let mut y = x.to_vec();
        for _ in 0..200_000 {
            let mut moved: f64 = 0.0;
            for i in 0..m {
                if norms[i] == 0.0 {
                    continue;
                }
                let step = ((dot(&self.a[i], &y) - self.b[i]) / norms[i]).max(-lambda[i]);
                if step != 0.0 {
                    lambda[i] += step;
                    for (yj, aj) in y.iter_mut().zip(&self.a[i]) {
                        *yj -= step * aj;
                    }
                    moved = moved.max(step.abs() * norms[i].sqrt());
                }
            }
            if moved < 1e-15 {
                break;
            }
        }
        let support: Vec<usize> = (0..m).filter(|&i| lambda[i] > 1e-12).collect();
        if support.is_empty() {
            return y;
        }
        if let Some(p) = self.kkt_point(x, &support) {
            return p;
        }
        // Exact finish: the projection satisfies KKT on some linearly
        // independent subset of the constraints tight there, and any feasible
        // point with nonnegative multipliers on such a subset is the projection.
        let near: Vec<usize> = (0..m).filter(|&i| dot(&self.a[i], &y) - self.b[i] >= -1e-4 * (1.0 + norms[i].sqrt())).collect();
        for pool in [&support, &near] {
            for k in 1..=x.len().min(pool.len()) {
                for pick in subsets(pool.len(), k) {
                    let active: Vec<usize> = pick.iter().map(|&j| pool[j]).collect();
                    if let Some(p) = self.kkt_point(x, &active) {
                        return p;
                    }
                }
            }
        }
        y
    }

    /// Projection onto the face where the `active` rows are tight, kept when
    /// it is feasible and `x - p` lies in the cone of those rows (KKT).
    fn kkt_point(&self, x: &[f64], active: &[usize]) -> Option<Vec<f64>> {
        let d = x.len();
        let a_s = DMatrix::from_fn(active.len(), d, |r, c| self.a[active[r]][c]);
        let xv = DVector::from_column_slice(x);
        let b_s = DVector::from_iterator(active.len(), active.iter().map(|&i| self.b[i]));
        let pinv = (&a_s * a_s.transpose()).pseudo_inverse(1e-12).ok()?;
        let p = &xv - a_s.transpose() * (pinv * (&a_s * &xv - &b_s));
        if (&a_s * &p - &b_s).amax() > 1e-10 || self.max_violation(p.as_slice()) > 1e-12 {
            return None;
        }
        let r = &xv - &p;
        let mu = nnls(&a_s.transpose(), &r);
        ((a_s.transpose() * mu - &r).amax() <= 1e-10 * (1.0 + r.amax())).then(|| p.iter().copied().collect())
    }
}

/// Lawson–Hanson nonnegative least squares: `min |A mu - r|` over `mu >= 0`.
fn nnls(a: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut mu = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (r - a * &mu);
        let Some(j) = (0..n).filter(|&j| !passive[j] && w[j] > 1e-14).max_by(|&i, &k| w[i].total_cmp(&w[k])) else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |row, c| a[(row, idx[c])]);
            let Ok(z) = sub.clone().svd(true, true).solve(r, 1e-14) else { return mu };
            if z.iter().all(|&v| v > 0.0) {
                mu.fill(0.0);
                for (c, &j) in idx.iter().enumerate() {
                    mu[j] = z[c];
                }
                break;
            }
            // Step toward z until a passive coefficient hits zero.
            let mut alpha = 1.0f64;
            for (c, &j) in idx.iter().enumerate() {
                if z[c] <= 0.0 {
                    alpha = alpha.min(mu[j] / (mu[j] - z[c]));
                }
            }
            for (c, &j) in idx.iter().enumerate() {
                mu[j] += alpha * (z[c] - mu[j]);
                if mu[j] <= 1e-15 {
                    mu[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    mu
}

// ---------------------------------------------------------------------------
// Geometry suite

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| uniform(rng, -scale, scale)).collect()
}

fn random_basic(rng: &mut ChaCha8Rng, kind: usize, d: usize) -> TargetSet {
    match kind {
        0 => TargetSet::orthant(d).unwrap(),
        1 => {
            let w = (0..d).map(|_| uniform(rng, 0.2, 3.0)).collect();
            let r = if rng.random_bool(0.05) { 0.0 } else { uniform(rng, 0.0, 2.0) };
            TargetSet::weighted_l1_ball(w, r).unwrap()
        }
        2 => {
            let mut n = point(rng, d, 2.0);
            n[0] += if n[0] >= 0.0 { 0.1 } else { -0.1 };
            let h = if rng.random_bool(0.05) { 0.0 } else { uniform(rng, 0.0, 1.0) };
            TargetSet::slab(n, h).unwrap()
        }
        _ => {
            let lo: Vec<f64> = (0..d).map(|_| uniform(rng, -2.0, 1.0)).collect();
            let hi = lo.iter().map(|l| if rng.random_bool(0.05) { *l } else { l + uniform(rng, 0.0, 2.0) }).collect();
            TargetSet::boxed(lo, hi).unwrap()
        }
    }
}

pub const VARIANTS: [&str; 6] = ["orthant", "weighted_l1_ball", "slab", "box", "product", "intersection"];

fn random_set(rng: &mut ChaCha8Rng, variant: usize) -> TargetSet {
    match variant {
        0..=3 => {
            let d = rng.random_range(1..=5);
            random_basic(rng, variant, d)
        }
        4 => {
            let d1 = rng.random_range(1..=3);
            let d2 = rng.random_range(1..=2);
            let (k1, k2) = (rng.random_range(0..4), rng.random_range(0..4));
            TargetSet::product(vec![random_basic(rng, k1, d1), random_basic(rng, k2, d2)]).unwrap()
        }
        _ => {
            let d = rng.random_range(2..=4);
            let mut members = vec![TargetSet::l1_ball(d, uniform(rng, 0.2, 1.5)).unwrap(), random_basic(rng, 1, d)];
            if rng.random_bool(0.3) {
                members.push(random_basic(rng, 2, d));
            }
            TargetSet::intersection(members).unwrap()
        }
    }
}

/// Projection properties on `n` random instances of each variant.
pub fn geometry_suite(n: usize, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for (vi, name) in VARIANTS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (vi as u64) << 32);
        let (mut member, mut idem, mut nonexp, mut vi_worst, mut qp): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, f64::NEG_INFINITY, 0.0);
        let mut errors = 0usize;
        for _ in 0..n {
            let set = random_set(&mut rng, vi);
            let d = set.dim();
            let (u, v, w) = (point(&mut rng, d, 3.0), point(&mut rng, d, 3.0), point(&mut rng, d, 3.0));
            let (Ok(pu), Ok(pv), Ok(pw)) = (set.project(&u), set.project(&v), set.project(&w)) else {
                errors += 1;
                continue;
            };
            let poly = Polytope::of(&set);
            member = member.max(poly.max_violation(&pu));
            idem = idem.max(dist(&set.project(&pu).unwrap(), &pu));
            nonexp = nonexp.max(dist(&pu, &pv) - dist(&u, &v));
            let diff: Vec<f64> = u.iter().zip(&pu).map(|(a, b)| a - b).collect();
            let cm: Vec<f64> = pw.iter().zip(&pu).map(|(a, b)| a - b).collect();
            vi_worst = vi_worst.max(dot(&diff, &cm));
            qp = qp.max(dist(&pu, &poly.project(&u)));
        }
        let qp_tol = if *name == "intersection" { 1e-6 } else { 1e-7 };
        out.push(Check::flag(&format!("{name}: projection succeeds"), errors == 0, format!("{errors} failures of {n}")));
        out.push(Check::bound(&format!("{name}: membership"), member, 1e-9));
        out.push(Check::bound(&format!("{name}: idempotence"), idem, 1e-9));
        out.push(Check::bound(&format!("{name}: nonexpansive"), nonexp, 1e-9));
        out.push(Check::bound(&format!("{name}: variational inequality"), vi_worst, 1e-9));
        out.push(Check::bound(&format!("{name}: QP oracle"), qp, qp_tol));
    }
    out
}

// ---------------------------------------------------------------------------
// Game suites

fn solve_square(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = m.clone().lu();
    let sol = lu.solve(rhs)?;
    ((m * &sol - rhs).amax() < 1e-9).then_some(sol)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..(1usize << n)).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
}

/// Exact value by support enumeration: `(upper, lower)` bounds from every
/// equalizing strategy found on square supports; they coincide.
pub fn support_enumeration_value(m: &[Vec<f64>]) -> (f64, f64) {
    let (r, c) = (m.len(), m[0].len());
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 1..=r.min(c) {
        for rows in subsets(r, k) {
            for cols in subsets(c, k) {
                // Row side: p on `rows` equalizing `cols`.
                let mut a = DMatrix::zeros(k + 1, k + 1);
                for (j, &cj) in cols.iter().enumerate() {
                    for (i, &ri) in rows.iter().enumerate() {
                        a[(j, i)] = m[ri][cj];
                    }
                    a[(j, k)] = -1.0;
                }
                for i in 0..k {
                    a[(k, i)] = 1.0;
                }
                let mut rhs = DVector::zeros(k + 1);
                rhs[k] = 1.0;
                if let Some(sol) = solve_square(&a, &rhs) {
                    if (0..k).all(|i| sol[i] >= -1e-12) {
                        let guarantee = (0..c)
                            .map(|b| rows.iter().enumerate().map(|(i, &ri)| sol[i].max(0.0) * m[ri][b]).sum::<f64>())
                            .fold(f64::NEG_INFINITY, f64::max);
                        upper = upper.min(guarantee);
                    }
                }
                // Column side: q on `cols` equalizing `rows`.
                let mut a = DMatrix::zeros(k + 1, k + 1);
                for (i, &ri) in rows.iter().enumerate() {
                    for (j, &cj) in cols.iter().enumerate() {
                        a[(i, j)] = m[ri][cj];
                    }
                    a[(i, k)] = -1.0;
                }
                for j in 0..k {
                    a[(k, j)] = 1.0;
                }
                if let Some(sol) = solve_square(&a, &rhs) {
                    if (0..k).all(|j| sol[j] >= -1e-12) {
                        let guarantee = (0..r)
                            .map(|a_| cols.iter().enumerate().map(|(j, &cj)| sol[j].max(0.0) * m[a_][cj]).sum::<f64>())
                            .fold(f64::INFINITY, f64::min);
                        lower = lower.max(guarantee);
                    }
                }
            }
        }
    }
    (upper, lower)
}

/// Value of a two-row game on a dense grid of row strategies.
pub fn two_row_grid_value(m: &[Vec<f64>], steps: usize) -> f64 {
    (0..=steps)
        .map(|i| {
            let t = i as f64 / steps as f64;
            (0..m[0].len()).map(|b| t * m[0][b] + (1.0 - t) * m[1][b]).fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn random_game(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let (r, c) = (rng.random_range(1..=6), rng.random_range(1..=6));
    let integer = rng.random_bool(0.2);
    (0..r)
        .map(|_| {
            (0..c)
                .map(|_| if integer { rng.random_range(-1i32..=1) as f64 } else { uniform(rng, -1.0, 1.0) })
                .collect()
        })
        .collect()
}

/// Random games up to 6x6 against support enumeration, plus tagged examples.
pub fn game_suite(n: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut gap, mut oracle, mut grid, mut bracket): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut errors = 0;
    for _ in 0..n {
        let m = random_game(&mut rng);
        let g = MatrixGame::new(m.clone()).unwrap();
        let Ok(sol) = solve_matrix_game(&g) else {
            errors += 1;
            continue;
        };
        gap = gap.max(sol.duality_gap(&g));
        let (up, lo) = support_enumeration_value(&m);
        bracket = bracket.max(up - lo);
        oracle = oracle.max((sol.value - up).abs());
        if m.len() == 2 {
            grid = grid.max((sol.value - two_row_grid_value(&m, 100_000)).abs());
        }
    }
    let mp = solve_matrix_game(&MatrixGame::new(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()).unwrap();
    let half = |m: &MixedAction| m.weights().iter().all(|w| (w - 0.5).abs() < 1e-12);
    let pennies = mp.value.abs() < 1e-12 && half(&mp.row_strategy) && half(&mp.col_strategy);
    let v = solve_matrix_game(&MatrixGame::new(vec![vec![3.0, 1.0], vec![0.0, 2.0]]).unwrap()).unwrap().value;
    let closed: f64 = (3.0 * 2.0 - 1.0 * 0.0) / (3.0 + 2.0 - 1.0 - 0.0);
    let single = solve_matrix_game(&MatrixGame::new(vec![vec![-0.7]]).unwrap()).unwrap();
    vec![
        Check::flag("games: solver succeeds", errors == 0, format!("{errors} failures of {n}")),
        Check::bound("games: duality gap", gap, 1e-9),
        Check::bound("games: oracle bracket closes", bracket, 1e-9),
        Check::bound("games: support-enumeration agreement", oracle, 1e-4),
        Check::bound("games: two-row grid agreement", grid, 1e-4),
        Check::flag("games: matching pennies", pennies, format!("{mp:?}")),
        Check::flag("games: 2x2 closed form", (v - 1.5).abs() < 1e-12 && (closed - 1.5).abs() < 1e-15, format!("value {v}")),
        Check::flag(
            "games: 1x1",
            single.value == -0.7 && single.row_strategy.as_dirac() == Some(0) && single.col_strategy.as_dirac() == Some(0),
            format!("{single:?}"),
        ),
    ]
}

fn simplex_grid3(steps: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for i in 0..=steps {
        for j in 0..=steps - i {
            let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
            out.push([a, b, (1.0 - a - b).max(0.0)]);
        }
    }
    out
}

/// Weighted minmax on random 3x3x2 instances against a two-level grid.
pub fn weighted_minmax_suite(n: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = 100;
    let h = 1.0 / steps as f64;
    let (mut excess, mut below, mut attained): (f64, f64, f64) = (f64::NEG_INFINITY, 0.0, 0.0);
    for _ in 0..n {
        let blocks: Vec<(f64, Vec<Vec<f64>>)> = (0..2)
            .map(|_| (uniform(&mut rng, 0.0, 1.0), (0..3).map(|_| point(&mut rng, 3, 1.0)).collect()))
            .collect();
        let (p, v) = solve_weighted_minmax(&blocks).unwrap();
        let f = |w: [f64; 3]| weighted_minmax_value(&blocks, &MixedAction::new(w.to_vec()).unwrap());
        let coarse = simplex_grid3(steps);
        let best = coarse.iter().copied().min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
        let mut grid_min = f(best);
        // Refine in a window around the coarse minimizer.
        let fine = 20;
        for i in -fine..=fine {
            for j in -fine..=fine {
                let a = best[0] + i as f64 * h / fine as f64;
                let b = best[1] + j as f64 * h / fine as f64;
                if a >= 0.0 && b >= 0.0 && a + b <= 1.0 {
                    grid_min = grid_min.min(f([a, b, (1.0 - a - b).max(0.0)]));
                }
            }
        }
        let lip: f64 = blocks.iter().map(|(w, m)| w * m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()))).sum();
        excess = excess.max((grid_min - v) - 2.0 * h * lip);
        below = below.max(v - grid_min);
        attained = attained.max((weighted_minmax_value(&blocks, &p) - v).abs());
    }
    vec![
        Check::bound("weighted minmax: grid gap within 2 h L", excess, 0.0),
        Check::bound("weighted minmax: never above grid minimum", below, 1e-9),
        Check::bound("weighted minmax: returned p attains value", attained, 1e-9),
    ]
}

// ---------------------------------------------------------------------------
// Frank-Wolfe suite

/// Expected payoff of the family `p` (one mixed action per context).
pub fn family_payoff(payoff: &PayoffTensor, q: &JointDistribution, mon: Monitoring, nature: &[MixedAction], p: &[Vec<f64>]) -> Vec<f64> {
    let sh = payoff.shape();
    let mut out = vec![0.0; payoff.dim()];
    for x in 0..sh.n_x {
        for s in 0..sh.n_s {
            let qb = &nature[mon.observe(x, s).index(sh.n_s)];
            for a in 0..sh.n_a {
                for b in 0..sh.n_b {
                    let w = q.prob(x, s) * p[x][a] * qb.get(b);
                    for (o, m) in out.iter_mut().zip(payoff.entry(a, b, x, s)) {
                        *o += w * m;
                    }
                }
            }
        }
    }
    out
}

fn ternary(mut lo: f64, mut hi: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    for _ in 0..iters {
        let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

/// FW monotonicity and agreement with a nested ternary search on instances
/// with two actions and one or two contexts (the distance is convex in p).
pub fn frank_wolfe_suite(n: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rise, mut oracle_gap): (f64, f64) = (0.0, 0.0);
    for _ in 0..n {
        let n_x = rng.random_range(1..=2);
        let n_s = rng.random_range(1..=2);
        let d = rng.random_range(2..=3);
        let shape = Shape::new(2, 2, n_x, n_s).unwrap();
        let vals: Vec<f64> = point(&mut rng, 2 * 2 * n_x * n_s * d, 1.0);
        let payoff = PayoffTensor::from_fn(shape, d, |a, b, x, s, o| {
            let base = (((a * 2 + b) * n_x + x) * n_s + s) * d;
            o.copy_from_slice(&vals[base..base + d]);
        })
        .unwrap();
        let cells: Vec<f64> = (0..n_x * n_s).map(|_| uniform(&mut rng, 0.05, 1.0)).collect();
        let total: f64 = cells.iter().sum();
        let q = JointDistribution::from_flat(ContextSpace::indexed(n_x, n_s).unwrap(), cells.iter().map(|c| c / total).collect()).unwrap();
        let mon = if rng.random_bool(0.5) { Monitoring::Aware } else { Monitoring::Unaware };
        let nature: Vec<MixedAction> = (0..mon.n_observations(n_x, n_s))
            .map(|_| {
                let t = uniform(&mut rng, 0.0, 1.0);
                MixedAction::new(vec![t, 1.0 - t]).unwrap()
            })
            .collect();
        let set = match rng.random_range(0..3) {
            0 => TargetSet::l1_ball(d, uniform(&mut rng, 0.0, 0.3)).unwrap(),
            1 => TargetSet::orthant(d).unwrap(),
            _ => TargetSet::boxed(vec![0.1; d], vec![0.4; d]).unwrap(),
        };
        let opts = FwOptions { max_iter: 100_000, tol: 1e-7, trace: true };
        let fw = frank_wolfe_min_distance(&payoff, &q, mon, &nature, &set, opts).unwrap();
        rise = rise.max(fw.trace.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max));
        let dist_at = |t: &[f64]| {
            let p: Vec<Vec<f64>> = t.iter().map(|&ti| vec![ti, 1.0 - ti]).collect();
            set.distance(&family_payoff(&payoff, &q, mon, &nature, &p)).unwrap()
        };
        let best = if n_x == 1 {
            ternary(0.0, 1.0, 200, |t| dist_at(&[t])).1
        } else {
            ternary(0.0, 1.0, 100, |t0| ternary(0.0, 1.0, 100, |t1| dist_at(&[t0, t1])).1).1
        };
        oracle_gap = oracle_gap.max((fw.distance - best).abs());
    }
    vec![
        Check::bound("frank-wolfe: objective never increases", rise, 1e-12),
        Check::bound("frank-wolfe: matches convex search oracle", oracle_gap, 1e-4),
    ]
}

// ---------------------------------------------------------------------------
// Estimation suite

fn uniform_2x2() -> JointDistribution {
    JointDistribution::new(ContextSpace::indexed(2, 2).unwrap(), vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap()
}

pub fn estimation_suite(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();

    let rows = assumption1_diagnostic(&uniform_2x2(), &fairapp_core::estimation::DIAGNOSTIC_GRID, 200, seed).unwrap();
    let scaled: Vec<f64> = rows.iter().map(|r| r.t_times_mean_tv2).collect();
    let ratio = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max) / scaled.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(Check::bound("estimation: t E[TV^2] max/min ratio", ratio, 3.0));

    // Widths against direct arithmetic.
    let theta = |n: u64, t: u64, x: usize| if n == 0 { 1.0 } else { ((x as f64 + (8.0 * t as f64).ln()) / (2.0 * n as f64)).sqrt() };
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let t = rng.random_range(1..100_000u64);
        let n0 = rng.random_range(0..=t);
        let x = rng.random_range(1..10usize);
        let w = ConfidenceWidths::compute(t, n0, t - n0, x).unwrap();
        let a2 = ((8.0 * t as f64).ln() / (2.0 * t as f64)).sqrt().min(1.0);
        let a1 = (theta(n0, t, x) + theta(t - n0, t, x)).min(1.0);
        worst = worst.max((w.alpha2 - a2).abs()).max((w.alpha1 - a1).abs());
    }
    let w1 = ConfidenceWidths::compute(1, 1, 0, 2).unwrap();
    let w32 = ConfidenceWidths::compute(32, 16, 16, 2).unwrap();
    worst = worst.max((w1.alpha2 - 1.0).abs()).max((w32.alpha2 - (256f64.ln() / 64.0).sqrt()).abs()).max((w1.alpha1 - 1.0).abs());
    out.push(Check::bound("estimation: width formulas", worst, 1e-15));

    // Plug-in TV on hand-built counts.
    let counts = |c: &[(usize, usize, usize)]| {
        let mut e = EmpiricalJoint::new(ContextSpace::indexed(2, 2).unwrap());
        for &(x, s, k) in c {
            for _ in 0..k {
                e.update(x, s).unwrap();
            }
        }
        e.tv_plugin().unwrap()
    };
    let half = counts(&[(0, 0, 3), (1, 0, 1), (0, 1, 1), (1, 1, 3)]);
    let zero = counts(&[(0, 0, 2), (1, 0, 1), (0, 1, 2), (1, 1, 1)]);
    let one = counts(&[(0, 0, 4), (1, 1, 5)]);
    out.push(Check::flag("estimation: plug-in TV examples", half == 0.5 && zero == 0.0 && one == 1.0, format!("{half} {zero} {one}")));

    // Empirical Q converges: TV at t = 10^4 below 0.05 on every seed.
    let q = JointDistribution::from_conditionals(ContextSpace::indexed(2, 2).unwrap(), &[0.5, 0.5], &[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
    let mut worst_tv: f64 = 0.0;
    for s in 0..20 {
        let mut rng = fairapp_core::rng::stream(seed + s, fairapp_core::rng::Stream::Context);
        let mut e = EmpiricalJoint::new(q.space().clone());
        for _ in 0..10_000 {
            let (x, s) = q.sample(&mut rng);
            e.update(x, s).unwrap();
        }
        worst_tv = worst_tv.max(tv_distance(&e.q_hat().unwrap(), &q).unwrap());
    }
    out.push(Check::bound("estimation: TV(Q_hat, Q) at t = 10^4", worst_tv, 0.05));
    out
}

/// Coverage of the true tilde target by the hat sets over cheap replications.
pub fn coverage_checks(q: &JointDistribution, grid: CalibrationGrid, tau: f64, slack: TradeoffSlack, reps: usize, seed: u64) -> Vec<Check> {
    [256u64, 1024]
        .iter()
        .map(|&t| {
            let f = coverage_frequency(q, grid, tau, slack, t, reps, seed).unwrap();
            let need = 1.0 - 1.0 / (2.0 * t as f64) - 0.05;
            Check::flag(&format!("hat-set coverage at T_r = {t}"), f >= need, format!("frequency {f:.4} vs {need:.4}"))
        })
        .collect()
}
