//! Finite metric spaces, admissible nets, and the deterministic chaining
//! functionals.
//!
//! A net is a nested family `T_0 ⊆ T_1 ⊆ …` with `|T_n| ≤ N_n = psi(2^n)`
//! and `N_0 = 1` that eventually covers the whole (finite) point set. The
//! paper assumes such nets exist; we build them with deterministic greedy
//! farthest-point selection per level (ties to the lowest index), which is a
//! 2-approximation of the optimal covering radius.
//!
//! Two families of level distances coexist for two-distance spaces:
//!
//! - the *set* distance `d_j(t, T_n) = min_{u in T_n} d_j(t, u)`, which the
//!   modulus relations (`tau`, `k(s,t)`, the two-distance bounds) are stated
//!   and proven with, and
//! - the *projection* distance `d_j(t, pi_n(t))` to the single combined
//!   projection, which the pathwise certificates need because one chaining
//!   walk can only visit one point per level.
//!
//! For one-distance spaces the two coincide.

use crate::young::{validate_metric, YoungFunction};
use crate::{CoreError, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A finite point set with one or two distance matrices.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    d1: DMatrix<f64>,
    d2: Option<DMatrix<f64>>,
    p1: f64,
    p2: f64,
    /// Original row indices of the kept representatives after merging
    /// zero-distance duplicates.
    original: Vec<usize>,
}

impl FiniteMetricSpace {
    /// One-distance space. Validates the metric and merges points at
    /// distance zero (the increment condition forces a.s. equality of the
    /// process there).
    pub fn new(d1: DMatrix<f64>) -> Result<Self> {
        if d1.nrows() == 0 {
            return Err(CoreError::Argument("empty metric space".into()));
        }
        if !validate_metric(&d1)? {
            return Err(CoreError::Data("d1 is not a metric".into()));
        }
        let keep = merge_map(&d1, None);
        let d1 = select(&d1, &keep);
        Ok(FiniteMetricSpace { d1, d2: None, p1: 1.0, p2: 1.0, original: keep })
    }

    /// Two-distance space with exponents `(p1, p2)`; both matrices must be
    /// metrics of the same size. Points merge only when both distances
    /// vanish.
    pub fn with_two(d1: DMatrix<f64>, d2: DMatrix<f64>, p1: f64, p2: f64) -> Result<Self> {
        if d1.nrows() == 0 {
            return Err(CoreError::Argument("empty metric space".into()));
        }
        if d1.nrows() != d2.nrows() {
            return Err(CoreError::Data(format!(
                "distance matrices disagree: {} vs {} points",
                d1.nrows(),
                d2.nrows()
            )));
        }
        if !(p1 > 0.0 && p2 > 0.0) {
            return Err(CoreError::Argument("exponents p1, p2 must be positive".into()));
        }
        if !validate_metric(&d1)? {
            return Err(CoreError::Data("d1 is not a metric".into()));
        }
        if !validate_metric(&d2)? {
            return Err(CoreError::Data("d2 is not a metric".into()));
        }
        let keep = merge_map(&d1, Some(&d2));
        let (d1, d2) = (select(&d1, &keep), select(&d2, &keep));
        Ok(FiniteMetricSpace { d1, d2: Some(d2), p1, p2, original: keep })
    }

    /// Euclidean distances of a point cloud (rows are points).
    pub fn euclidean(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = l2(&points[i], &points[j]);
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        FiniteMetricSpace::new(d)
    }

    /// `l2` / `l_inf` two-distance space of a point cloud, scaled by
    /// `(c1, c2)`.
    pub fn two_norm_space(
        points: &[Vec<f64>],
        c1: f64,
        c2: f64,
        p1: f64,
        p2: f64,
    ) -> Result<Self> {
        let n = points.len();
        let mut m1 = DMatrix::zeros(n, n);
        let mut m2 = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let a = c1 * l2(&points[i], &points[j]);
                let b = c2 * linf(&points[i], &points[j]);
                m1[(i, j)] = a;
                m1[(j, i)] = a;
                m2[(i, j)] = b;
                m2[(j, i)] = b;
            }
        }
        FiniteMetricSpace::with_two(m1, m2, p1, p2)
    }

    pub fn len(&self) -> usize {
        self.d1.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has_two_distances(&self) -> bool {
        self.d2.is_some()
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.p1, self.p2)
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> Option<&DMatrix<f64>> {
        self.d2.as_ref()
    }

    pub fn dist(&self, s: usize, t: usize) -> f64 {
        self.d1[(s, t)]
    }

    /// `d_j(s, t)` with `j` in `{1, 2}`.
    pub fn dist_j(&self, j: usize, s: usize, t: usize) -> Result<f64> {
        match j {
            1 => Ok(self.d1[(s, t)]),
            2 => self
                .d2
                .as_ref()
                .map(|d| d[(s, t)])
                .ok_or_else(|| CoreError::Argument("space has no second distance".into())),
            _ => Err(CoreError::Argument(format!("distance index {j} out of range"))),
        }
    }

    /// Indices of the kept representatives in the pre-merge input.
    pub fn original_indices(&self) -> &[usize] {
        &self.original
    }

    /// Read a distance matrix from CSV (row-major; a first line with any
    /// non-numeric token is treated as a header and skipped).
    pub fn matrix_from_csv(path: &Path) -> Result<DMatrix<f64>> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
            match parsed {
                Ok(vals) => rows.push(vals),
                Err(e) if lineno == 0 && rows.is_empty() => {
                    // header line
                    let _ = e;
                }
                Err(e) => {
                    return Err(CoreError::Data(format!(
                        "{}:{}: bad matrix entry: {e}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        if rows.is_empty() {
            return Err(CoreError::Data(format!("{}: empty matrix", path.display())));
        }
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(CoreError::Data(format!("{}: ragged matrix rows", path.display())));
        }
        let nrows = rows.len();
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// First-representative indices after merging zero-distance duplicates.
fn merge_map(d1: &DMatrix<f64>, d2: Option<&DMatrix<f64>>) -> Vec<usize> {
    let n = d1.nrows();
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    'outer: for i in 0..n {
        for &r in &keep {
            let same = d1[(i, r)] == 0.0 && d2.map_or(true, |d| d[(i, r)] == 0.0);
            if same {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}

fn select(d: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| d[(keep[i], keep[j])])
}

/// Serializable net document (the on-disk interchange format).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetDoc {
    pub points: Vec<usize>,
    pub budgets: Vec<u64>,
    pub levels: Vec<Vec<usize>>,
    pub terminal_level: usize,
}

/// Nested net levels with budgets, projections and cached level distances.
#[derive(Debug, Clone)]
pub struct AdmissibleNet {
    levels: Vec<Vec<usize>>,
    budgets: Vec<u64>,
    terminal_level: usize,
    /// `[level][point]` projection under the build distance, lowest-index ties.
    proj: Vec<Vec<usize>>,
    /// `[level][point]` set distance `d_j(t, T_n)`.
    set_d1: Vec<Vec<f64>>,
    set_d2: Option<Vec<Vec<f64>>>,
    /// `[level][point]` projection distance `d_j(t, pi_n(t))`.
    proj_d1: Vec<Vec<f64>>,
    proj_d2: Option<Vec<Vec<f64>>>,
    p1: f64,
    p2: f64,
}

/// Greedy farthest-point net for `space` with budgets from `psi`.
///
/// `T_0` is the 1-medoid of the build distance; each level extends the
/// previous by repeatedly adding the point farthest from the current set
/// until the budget `N_n` or full coverage. Two-distance spaces build
/// against `max(d1/diam1, d2/diam2)` so one net serves both distances.
pub fn build_net(space: &FiniteMetricSpace, psi: &YoungFunction) -> Result<AdmissibleNet> {
    if space.is_empty() {
        return Err(CoreError::Argument("cannot build a net on an empty space".into()));
    }
    let n = space.len();
    let build_d = build_distance(space);

    // medoid: minimize the maximum distance, lowest index on ties
    let mut t0 = 0usize;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let mx = (0..n).map(|j| build_d[(i, j)]).fold(0.0f64, f64::max);
        if mx < best {
            best = mx;
            t0 = i;
        }
    }

    let mut levels: Vec<Vec<usize>> = vec![vec![t0]];
    let mut budgets: Vec<u64> = vec![1];
    let mut member = vec![vec![false; n]];
    member[0][t0] = true;
    let mut dist_to_set: Vec<f64> = (0..n).map(|i| build_d[(i, t0)]).collect();

    let mut lev = 0usize;
    while levels[lev].len() < n {
        lev += 1;
        let budget = psi.budget(lev as u32);
        budgets.push(budget);
        let mut cur = levels[lev - 1].clone();
        let mut memb = member[lev - 1].clone();
        let cap = (budget.min(n as u64)) as usize;
        while cur.len() < cap {
            let mut far = usize::MAX;
            let mut fv = -1.0;
            for i in 0..n {
                if dist_to_set[i] > fv {
                    fv = dist_to_set[i];
                    far = i;
                }
            }
            if fv <= 0.0 {
                break; // coverage reached under the build distance
            }
            cur.push(far);
            memb[far] = true;
            for i in 0..n {
                let v = build_d[(i, far)];
                if v < dist_to_set[i] {
                    dist_to_set[i] = v;
                }
            }
        }
        levels.push(cur);
        member.push(memb);
        if lev > 64 {
            return Err(CoreError::Numeric("net construction did not converge".into()));
        }
    }
    let terminal_level = levels.len() - 1;

    // projections and cached level distances
    let nlev = levels.len();
    let mut proj = vec![vec![0usize; n]; nlev];
    let mut set_d1 = vec![vec![0.0f64; n]; nlev];
    let mut proj_d1 = vec![vec![0.0f64; n]; nlev];
    let (mut set_d2, mut proj_d2) = if space.has_two_distances() {
        (Some(vec![vec![0.0f64; n]; nlev]), Some(vec![vec![0.0f64; n]; nlev]))
    } else {
        (None, None)
    };
    for (l, lvl) in levels.iter().enumerate() {
        for t in 0..n {
            let mut pi = lvl[0];
            let mut pv = build_d[(t, lvl[0])];
            let mut m1 = space.d1[(t, lvl[0])];
            let mut m2 = space.d2.as_ref().map(|d| d[(t, lvl[0])]);
            for &u in &lvl[1..] {
                let bv = build_d[(t, u)];
                if bv < pv {
                    pv = bv;
                    pi = u;
                }
                let v1 = space.d1[(t, u)];
                if v1 < m1 {
                    m1 = v1;
                }
                if let Some(d2) = space.d2.as_ref() {
                    let v2 = d2[(t, u)];
                    if v2 < m2.unwrap() {
                        m2 = Some(v2);
                    }
                }
            }
            proj[l][t] = pi;
            set_d1[l][t] = m1;
            proj_d1[l][t] = space.d1[(t, pi)];
            if let (Some(sd2), Some(pd2)) = (set_d2.as_mut(), proj_d2.as_mut()) {
                sd2[l][t] = m2.unwrap();
                pd2[l][t] = space.d2.as_ref().unwrap()[(t, pi)];
            }
        }
    }

    Ok(AdmissibleNet {
        levels,
        budgets,
        terminal_level,
        proj,
        set_d1,
        set_d2,
        proj_d1,
        proj_d2,
        p1: space.p1,
        p2: space.p2,
    })
}

fn build_distance(space: &FiniteMetricSpace) -> DMatrix<f64> {
    match space.d2.as_ref() {
        None => space.d1.clone(),
        Some(d2) => {
            let r1 = space.d1.iter().fold(0.0f64, |m, &v| m.max(v)).max(f64::MIN_POSITIVE);
            let r2 = d2.iter().fold(0.0f64, |m, &v| m.max(v)).max(f64::MIN_POSITIVE);
            DMatrix::from_fn(space.len(), space.len(), |i, j| {
                (space.d1[(i, j)] / r1).max(d2[(i, j)] / r2)
            })
        }
    }
}

/// One chaining level sequence `n_0 = m < n_1 < …`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainingSequence {
    pub base_level: usize,
    pub indices: Vec<usize>,
}

/// Per-pair modulus data; the `two` part is present on two-distance spaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusReport {
    pub k: usize,
    pub tau: f64,
    pub tau_bar: f64,
    pub two: Option<TwoDistModulus>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoDistModulus {
    pub k1: usize,
    pub k2: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub dbar1: f64,
    pub dbar2: f64,
    /// Additive correction of the upper comparability bound.
    pub gus_correction: f64,
}

impl AdmissibleNet {
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn budgets(&self) -> &[u64] {
        &self.budgets
    }

    pub fn terminal_level(&self) -> usize {
        self.terminal_level
    }

    pub fn points(&self) -> usize {
        self.set_d1[0].len()
    }

    fn check_point(&self, t: usize) -> Result<()> {
        if t >= self.points() {
            return Err(CoreError::Argument(format!("unknown point index {t}")));
        }
        Ok(())
    }

    /// Projection `pi_n(t)`; levels beyond the terminal return `t`'s
    /// terminal projection (which is `t` itself).
    pub fn proj_at(&self, t: usize, n: usize) -> Result<usize> {
        self.check_point(t)?;
        Ok(self.proj[n.min(self.terminal_level)][t])
    }

    /// Set distance `d(t, T_n)`; zero beyond the terminal level.
    pub fn dist_to_level(&self, t: usize, n: usize) -> Result<f64> {
        self.check_point(t)?;
        Ok(self.set_d1[n.min(self.terminal_level)][t])
    }

    /// `d_j(t, T_n)` for two-distance spaces (`j` in `{1, 2}`).
    pub fn dist_to_level_j(&self, j: usize, t: usize, n: usize) -> Result<f64> {
        self.check_point(t)?;
        let l = n.min(self.terminal_level);
        match j {
            1 => Ok(self.set_d1[l][t]),
            2 => self.set_d2.as_ref().map(|d| d[l][t]).ok_or_else(|| {
                CoreError::Argument("second distance requested on a one-distance net".into())
            }),
            _ => Err(CoreError::Argument(format!("distance index {j} out of range"))),
        }
    }

    /// Projection distance `d_j(t, pi_n(t))`.
    pub fn proj_dist_j(&self, j: usize, t: usize, n: usize) -> Result<f64> {
        self.check_point(t)?;
        let l = n.min(self.terminal_level);
        match j {
            1 => Ok(self.proj_d1[l][t]),
            2 => self.proj_d2.as_ref().map(|d| d[l][t]).ok_or_else(|| {
                CoreError::Argument("second distance requested on a one-distance net".into())
            }),
            _ => Err(CoreError::Argument(format!("distance index {j} out of range"))),
        }
    }

    /// `sigma_m(t) = sum_{n >= m} 2^n d(t, T_n)`, truncated at the terminal
    /// level (all later terms vanish exactly).
    pub fn sigma(&self, t: usize, m: usize) -> Result<f64> {
        self.check_point(t)?;
        let mut acc = 0.0;
        for n in m..=self.terminal_level {
            acc += (n as f64).exp2() * self.set_d1[n][t];
        }
        Ok(acc)
    }

    /// `sigma(t, a) = sum_n 2^n min(d(t, T_n), a)`, `a > 0`.
    pub fn sigma_trunc(&self, t: usize, a: f64) -> Result<f64> {
        self.check_point(t)?;
        if !(a > 0.0) {
            return Err(CoreError::Argument(format!("truncation level must be > 0, got {a}")));
        }
        let mut acc = 0.0;
        for n in 0..=self.terminal_level {
            acc += (n as f64).exp2() * self.set_d1[n][t].min(a);
        }
        Ok(acc)
    }

    /// Modulus distance `tau(s, t) = max(sigma(t, d(s,t)), sigma(s, d(s,t)))`.
    pub fn tau(&self, space: &FiniteMetricSpace, s: usize, t: usize) -> Result<f64> {
        self.check_point(s)?;
        self.check_point(t)?;
        if s == t {
            return Ok(0.0);
        }
        let a = space.dist(s, t);
        Ok(self.sigma_trunc(t, a)?.max(self.sigma_trunc(s, a)?))
    }

    /// Switch level `k(s,t) = max{k >= 0 : d(s,T_k) + d(t,T_k) >= d(s,t)}`.
    pub fn k_level(&self, space: &FiniteMetricSpace, s: usize, t: usize) -> Result<usize> {
        self.check_point(s)?;
        self.check_point(t)?;
        if s == t {
            return Err(CoreError::Argument("k(s,t) needs distinct points".into()));
        }
        let d = space.dist(s, t);
        let mut k = 0usize;
        for n in 0..=self.terminal_level {
            if self.set_d1[n][s] + self.set_d1[n][t] >= d {
                k = n;
            } else {
                break; // the level sums are nonincreasing
            }
        }
        Ok(k)
    }

    /// `tau_bar(s,t) = sigma_{k+1}(s) + sigma_{k+1}(t) + (2^{k+1} - 1) d(s,t)`
    /// at `k = k(s,t)`; zero for `s = t` by convention.
    pub fn tau_bar(&self, space: &FiniteMetricSpace, s: usize, t: usize) -> Result<f64> {
        if s == t {
            self.check_point(s)?;
            return Ok(0.0);
        }
        let k = self.k_level(space, s, t)?;
        Ok(self.f_at(space, s, t, k)?)
    }

    /// `f(k) = sigma_{k+1}(s) + sigma_{k+1}(t) + (2^{k+1} - 1) d(s,t)`.
    pub fn f_at(&self, space: &FiniteMetricSpace, s: usize, t: usize, k: usize) -> Result<f64> {
        Ok(self.sigma(s, k + 1)?
            + self.sigma(t, k + 1)?
            + ((k + 1) as f64).exp2_m1() * space.dist(s, t))
    }

    /// Halving chain `n_0 = m`, `n_i = inf{n > n_{i-1} : 2 d(t,T_n) < d(t,T_{n_{i-1}})}`,
    /// stopped at the first zero-distance level or the terminal level.
    pub fn chain_seq(&self, t: usize, m: usize) -> Result<ChainingSequence> {
        self.check_point(t)?;
        let mut indices = vec![m];
        loop {
            let prev = *indices.last().unwrap();
            let dp = self.dist_to_level(t, prev)?;
            if dp == 0.0 || prev >= self.terminal_level {
                break;
            }
            let mut next = None;
            for n in (prev + 1)..=self.terminal_level {
                if 2.0 * self.set_d1[n][t] < dp {
                    next = Some(n);
                    break;
                }
            }
            match next {
                Some(n) => indices.push(n),
                None => break,
            }
        }
        Ok(ChainingSequence { base_level: m, indices })
    }

    /// Net-based upper bound for the `gamma_2`-type functional:
    /// `sup_t sigma_0(t)` on this net.
    pub fn gamma2_upper(&self) -> f64 {
        let mut sup = 0.0f64;
        for t in 0..self.points() {
            let mut acc = 0.0;
            for n in 0..=self.terminal_level {
                acc += (n as f64).exp2() * self.set_d1[n][t];
            }
            sup = sup.max(acc);
        }
        sup
    }

    // ---- two-distance functionals (set-distance convention) ----

    fn weight(&self, j: usize, n: usize) -> f64 {
        let p = if j == 1 { self.p1 } else { self.p2 };
        (p * n as f64).exp2()
    }

    /// `sigma^j_m(t) = sum_{n >= m} 2^{p_j n} d_j(t, T_n)`.
    pub fn two_sigma(&self, j: usize, t: usize, m: usize) -> Result<f64> {
        self.check_point(t)?;
        let mut acc = 0.0;
        for n in m..=self.terminal_level {
            acc += self.weight(j, n) * self.dist_to_level_j(j, t, n)?;
        }
        Ok(acc)
    }

    /// `sigma_j(t, a) = sum_n 2^{p_j n} min(d_j(t, T_n), a)`.
    pub fn two_sigma_trunc(&self, j: usize, t: usize, a: f64) -> Result<f64> {
        self.check_point(t)?;
        if !(a > 0.0) {
            return Err(CoreError::Argument(format!("truncation level must be > 0, got {a}")));
        }
        let mut acc = 0.0;
        for n in 0..=self.terminal_level {
            acc += self.weight(j, n) * self.dist_to_level_j(j, t, n)?.min(a);
        }
        Ok(acc)
    }

    /// `tau_j(s,t) = max(sigma_j(t, d_j(s,t)), sigma_j(s, d_j(s,t)))`.
    pub fn two_tau_j(
        &self,
        space: &FiniteMetricSpace,
        j: usize,
        s: usize,
        t: usize,
    ) -> Result<f64> {
        if s == t {
            return Ok(0.0);
        }
        let a = space.dist_j(j, s, t)?;
        if a == 0.0 {
            return Ok(0.0);
        }
        Ok(self.two_sigma_trunc(j, t, a)?.max(self.two_sigma_trunc(j, s, a)?))
    }

    /// Per-distance switch level `k^j(s,t)`.
    pub fn two_k_j(
        &self,
        space: &FiniteMetricSpace,
        j: usize,
        s: usize,
        t: usize,
    ) -> Result<usize> {
        if s == t {
            return Err(CoreError::Argument("k^j(s,t) needs distinct points".into()));
        }
        let d = space.dist_j(j, s, t)?;
        let mut k = 0usize;
        for n in 0..=self.terminal_level {
            if self.dist_to_level_j(j, s, n)? + self.dist_to_level_j(j, t, n)? >= d {
                k = n;
            } else {
                break;
            }
        }
        Ok(k)
    }

    /// Combined switch level: the largest `k` with
    /// `sum_j sum_x 2^{p_j k} d_j(x, T_k) >= sum_j 2^{p_j k} d_j(s,t)`.
    ///
    /// The weighted balance can oscillate, so the whole range is scanned.
    pub fn two_k(&self, space: &FiniteMetricSpace, s: usize, t: usize) -> Result<usize> {
        if s == t {
            return Err(CoreError::Argument("k(s,t) needs distinct points".into()));
        }
        let mut k = 0usize;
        for n in 0..=self.terminal_level {
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for j in [1usize, 2] {
                let w = self.weight(j, n);
                lhs += w * (self.dist_to_level_j(j, s, n)? + self.dist_to_level_j(j, t, n)?);
                rhs += w * space.dist_j(j, s, t)?;
            }
            if lhs >= rhs {
                k = n;
            }
        }
        Ok(k)
    }

    fn coef(&self, j: usize, k: usize) -> f64 {
        let p = if j == 1 { self.p1 } else { self.p2 };
        ((p * (k + 1) as f64).exp2() - 1.0) / (p.exp2() - 1.0)
    }

    /// Two-distance `tau_bar` evaluated at level `k`.
    pub fn two_tau_bar_at(
        &self,
        space: &FiniteMetricSpace,
        s: usize,
        t: usize,
        k: usize,
    ) -> Result<f64> {
        let mut acc = 0.0;
        for j in [1usize, 2] {
            acc += self.two_sigma(j, s, k + 1)? + self.two_sigma(j, t, k + 1)?;
            acc += self.coef(j, k) * space.dist_j(j, s, t)?;
        }
        Ok(acc)
    }

    /// Combined-condition chain: `n_i` is the first level where the weighted
    /// previous-level distances exceed twice the current ones. Also returns
    /// `dbar_j = sum_i d_j(t, T_{n_i})`.
    pub fn two_chain_seq(&self, t: usize, m: usize) -> Result<(ChainingSequence, [f64; 2])> {
        self.check_point(t)?;
        let mut indices = vec![m];
        let mut dbar = [self.dist_to_level_j(1, t, m)?, self.dist_to_level_j(2, t, m)?];
        loop {
            let prev = *indices.last().unwrap();
            let a1 = self.dist_to_level_j(1, t, prev)?;
            let a2 = self.dist_to_level_j(2, t, prev)?;
            if (a1 == 0.0 && a2 == 0.0) || prev >= self.terminal_level {
                break;
            }
            let mut next = None;
            for n in (prev + 1)..=self.terminal_level {
                let w1 = self.weight(1, n);
                let w2 = self.weight(2, n);
                let lhs = w1 * a1 + w2 * a2;
                let rhs = 2.0
                    * (w1 * self.dist_to_level_j(1, t, n)?
                        + w2 * self.dist_to_level_j(2, t, n)?);
                if lhs > rhs {
                    next = Some(n);
                    break;
                }
            }
            match next {
                Some(n) => {
                    indices.push(n);
                    dbar[0] += self.dist_to_level_j(1, t, n)?;
                    dbar[1] += self.dist_to_level_j(2, t, n)?;
                }
                None => break,
            }
        }
        Ok((ChainingSequence { base_level: m, indices }, dbar))
    }

    /// Full per-pair modulus report (set-distance convention).
    pub fn two_modulus(
        &self,
        space: &FiniteMetricSpace,
        s: usize,
        t: usize,
    ) -> Result<ModulusReport> {
        if !space.has_two_distances() {
            return Err(CoreError::Argument("two_modulus needs a two-distance space".into()));
        }
        if s == t {
            return Ok(ModulusReport { k: 0, tau: 0.0, tau_bar: 0.0, two: None });
        }
        let k1 = self.two_k_j(space, 1, s, t)?;
        let k2 = self.two_k_j(space, 2, s, t)?;
        let k = self.two_k(space, s, t)?;
        let tau1 = self.two_tau_j(space, 1, s, t)?;
        let tau2 = self.two_tau_j(space, 2, s, t)?;
        let tau_bar = self.two_tau_bar_at(space, s, t, k)?;

        // pair version of dbar_j with both chains started from k+1
        let (_, dbt) = self.two_chain_seq(t, k + 1)?;
        let (_, dbs) = self.two_chain_seq(s, k + 1)?;
        let dbar1 = space.dist_j(1, s, t)? + dbt[0] + dbs[0];
        let dbar2 = space.dist_j(2, s, t)? + dbt[1] + dbs[1];

        let mut corr = 0.0;
        if k1 >= k2 {
            let p2 = self.p2;
            corr += p2.exp2() / (p2.exp2() - 1.0)
                * ((k1 as f64 * p2).exp2() - (k2 as f64 * p2).exp2())
                * space.dist_j(2, s, t)?;
        }
        if k2 >= k1 {
            let p1 = self.p1;
            corr += p1.exp2() / (p1.exp2() - 1.0)
                * ((k2 as f64 * p1).exp2() - (k1 as f64 * p1).exp2())
                * space.dist_j(1, s, t)?;
        }

        Ok(ModulusReport {
            k,
            tau: self.tau(space, s, t)?,
            tau_bar,
            two: Some(TwoDistModulus { k1, k2, tau1, tau2, dbar1, dbar2, gus_correction: corr }),
        })
    }

    // ---- projection-distance family (used by the pathwise certificates) ----

    /// `sum_{n >= m} 2^{p_j n} d_j(t, pi_n(t))`.
    pub fn proj_two_sigma(&self, j: usize, t: usize, m: usize) -> Result<f64> {
        self.check_point(t)?;
        let mut acc = 0.0;
        for n in m..=self.terminal_level {
            acc += self.weight(j, n) * self.proj_dist_j(j, t, n)?;
        }
        Ok(acc)
    }

    /// Combined-condition chain on projection distances, with
    /// `dbar_j = sum_i d_j(t, pi_{n_i}(t))`.
    pub fn proj_two_chain_seq(&self, t: usize, m: usize) -> Result<(ChainingSequence, [f64; 2])> {
        self.check_point(t)?;
        let mut indices = vec![m];
        let mut dbar = [self.proj_dist_j(1, t, m)?, self.proj_dist_j(2, t, m)?];
        loop {
            let prev = *indices.last().unwrap();
            let a1 = self.proj_dist_j(1, t, prev)?;
            let a2 = self.proj_dist_j(2, t, prev)?;
            if (a1 == 0.0 && a2 == 0.0) || prev >= self.terminal_level {
                break;
            }
            let mut next = None;
            for n in (prev + 1)..=self.terminal_level {
                let w1 = self.weight(1, n);
                let w2 = self.weight(2, n);
                let lhs = w1 * a1 + w2 * a2;
                let rhs = 2.0
                    * (w1 * self.proj_dist_j(1, t, n)? + w2 * self.proj_dist_j(2, t, n)?);
                if lhs > rhs {
                    next = Some(n);
                    break;
                }
            }
            match next {
                Some(n) => {
                    indices.push(n);
                    dbar[0] += self.proj_dist_j(1, t, n)?;
                    dbar[1] += self.proj_dist_j(2, t, n)?;
                }
                None => break,
            }
        }
        Ok((ChainingSequence { base_level: m, indices }, dbar))
    }

    /// Combined switch level on projection distances.
    pub fn proj_two_k(&self, space: &FiniteMetricSpace, s: usize, t: usize) -> Result<usize> {
        if s == t {
            return Err(CoreError::Argument("k(s,t) needs distinct points".into()));
        }
        let mut k = 0usize;
        for n in 0..=self.terminal_level {
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for j in [1usize, 2] {
                let w = self.weight(j, n);
                lhs += w * (self.proj_dist_j(j, s, n)? + self.proj_dist_j(j, t, n)?);
                rhs += w * space.dist_j(j, s, t)?;
            }
            if lhs >= rhs {
                k = n;
            }
        }
        Ok(k)
    }

    /// Two-distance `tau_bar` at level `k` on projection distances.
    pub fn proj_two_tau_bar_at(
        &self,
        space: &FiniteMetricSpace,
        s: usize,
        t: usize,
        k: usize,
    ) -> Result<f64> {
        let mut acc = 0.0;
        for j in [1usize, 2] {
            acc += self.proj_two_sigma(j, s, k + 1)? + self.proj_two_sigma(j, t, k + 1)?;
            acc += self.coef(j, k) * space.dist_j(j, s, t)?;
        }
        Ok(acc)
    }

    // ---- interchange ----

    pub fn to_doc(&self, space: &FiniteMetricSpace) -> NetDoc {
        NetDoc {
            points: space.original.clone(),
            budgets: self.budgets.clone(),
            levels: self.levels.clone(),
            terminal_level: self.terminal_level,
        }
    }

    /// Rebuild a net from a document, recomputing projections and level
    /// distances and validating budgets, nesting and coverage.
    pub fn from_doc(doc: &NetDoc, space: &FiniteMetricSpace) -> Result<AdmissibleNet> {
        let n = space.len();
        if doc.levels.is_empty() {
            return Err(CoreError::Data("net document has no levels".into()));
        }
        if doc.terminal_level + 1 != doc.levels.len() || doc.budgets.len() != doc.levels.len() {
            return Err(CoreError::Data("net document is inconsistent".into()));
        }
        for (l, lvl) in doc.levels.iter().enumerate() {
            if lvl.len() as u64 > doc.budgets[l] {
                return Err(CoreError::Data(format!("level {l} exceeds its budget")));
            }
            if lvl.iter().any(|&u| u >= n) {
                return Err(CoreError::Data(format!("level {l} references unknown points")));
            }
            if l > 0 {
                let prev = &doc.levels[l - 1];
                if !prev.iter().all(|u| lvl.contains(u)) {
                    return Err(CoreError::Data(format!("level {l} is not nested")));
                }
            }
        }
        {
            let last = &doc.levels[doc.terminal_level];
            let mut seen = vec![false; n];
            for &u in last {
                seen[u] = true;
            }
            if seen.iter().any(|&s| !s) {
                return Err(CoreError::Data("terminal level does not cover all points".into()));
            }
        }
        // rebuild caches with the same tie rules as build_net
        let build_d = build_distance(space);
        let nlev = doc.levels.len();
        let mut proj = vec![vec![0usize; n]; nlev];
        let mut set_d1 = vec![vec![0.0f64; n]; nlev];
        let mut proj_d1 = vec![vec![0.0f64; n]; nlev];
        let (mut set_d2, mut proj_d2) = if space.has_two_distances() {
            (Some(vec![vec![0.0f64; n]; nlev]), Some(vec![vec![0.0f64; n]; nlev]))
        } else {
            (None, None)
        };
        for (l, lvl) in doc.levels.iter().enumerate() {
            for t in 0..n {
                let mut pi = lvl[0];
                let mut pv = build_d[(t, lvl[0])];
                let mut m1 = space.d1[(t, lvl[0])];
                let mut m2 = space.d2.as_ref().map(|d| d[(t, lvl[0])]);
                for &u in &lvl[1..] {
                    let bv = build_d[(t, u)];
                    if bv < pv {
                        pv = bv;
                        pi = u;
                    }
                    let v1 = space.d1[(t, u)];
                    if v1 < m1 {
                        m1 = v1;
                    }
                    if let Some(d2) = space.d2.as_ref() {
                        let v2 = d2[(t, u)];
                        if v2 < m2.unwrap() {
                            m2 = Some(v2);
                        }
                    }
                }
                proj[l][t] = pi;
                set_d1[l][t] = m1;
                proj_d1[l][t] = space.d1[(t, pi)];
                if let (Some(sd2), Some(pd2)) = (set_d2.as_mut(), proj_d2.as_mut()) {
                    sd2[l][t] = m2.unwrap();
                    pd2[l][t] = space.d2.as_ref().unwrap()[(t, pi)];
                }
            }
        }
        Ok(AdmissibleNet {
            levels: doc.levels.clone(),
            budgets: doc.budgets.clone(),
            terminal_level: doc.terminal_level,
            proj,
            set_d1,
            set_d2,
            proj_d1,
            proj_d2,
            p1: space.p1,
            p2: space.p2,
        })
    }
}

/// Net-based `gamma_2` upper bound for a space under `psi` budgets.
pub fn gamma2_upper(space: &FiniteMetricSpace, psi: &YoungFunction) -> Result<f64> {
    Ok(build_net(space, psi)?.gamma2_upper())
}

trait Exp2M1 {
    fn exp2_m1(self) -> f64;
}

impl Exp2M1 for f64 {
    /// `2^x - 1`
    fn exp2_m1(self) -> f64 {
        (self * std::f64::consts::LN_2).exp_m1()
    }
}
