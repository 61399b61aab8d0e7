//! Square estimation for empirical processes.
//!
//! For a class of linear functionals `f(x) = <f, x>` and an i.i.d. batch
//! `X_1..X_N`, the centered square process is
//! `S_N(f) = (1/N) sum_i (f^2 - E f^2)(X_i)`. The square-process bound
//! controls `sup_f S_N(f)` by a deterministic part driven by the net-based
//! `gamma_2` functional plus `alpha^2 N^{-1/2} phi^{-1}(Z)` with the
//! Bernstein gauge `phi` at parameter `N`. As with the chaining
//! certificates, `Z` is built from the same batch, so the bound is checked
//! per realization.

use crate::chain::{build_net, AdmissibleNet, FiniteMetricSpace};
use crate::young::YoungFunction;
use crate::{CoreError, Result};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Pair-sum statistics are quadratic in the class size.
pub const MAX_CLASS_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleLaw {
    /// Standard Gaussian coordinates.
    GaussianIso,
    /// Independent signs.
    Rademacher,
}

/// A finite class of linear functionals with its calibrated distance
/// `d(f, g) = c |f - g|_2` and analytic second moments `E f^2 = |f|_2^2`
/// (both supported laws have isotropic unit covariance).
#[derive(Debug, Clone)]
pub struct FunctionClass {
    functions: Vec<Vec<f64>>,
    space: FiniteMetricSpace,
    scale: f64,
    alpha: f64,
}

impl FunctionClass {
    pub fn new(functions: Vec<Vec<f64>>, scale: f64) -> Result<Self> {
        if functions.is_empty() {
            return Err(CoreError::Argument("empty function class".into()));
        }
        if functions.len() > MAX_CLASS_SIZE {
            return Err(CoreError::Size(format!(
                "class of {} functions exceeds the pair-sum guard of {MAX_CLASS_SIZE}; shrink the class",
                functions.len()
            )));
        }
        let dim = functions[0].len();
        if dim == 0 || functions.iter().any(|f| f.len() != dim) {
            return Err(CoreError::Data("class functions must share a nonzero dimension".into()));
        }
        if !(scale > 0.0) {
            return Err(CoreError::Argument("distance scale must be positive".into()));
        }
        let n = functions.len();
        let d = DMatrix::from_fn(n, n, |i, j| scale * l2_diff(&functions[i], &functions[j]));
        let space = FiniteMetricSpace::new(d)?;
        if space.len() != n {
            return Err(CoreError::Data("class contains duplicate functions".into()));
        }
        let alpha = functions
            .iter()
            .map(|f| scale * f.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max);
        Ok(FunctionClass { functions, space, scale, alpha })
    }

    /// `count` random unit vectors in `R^dim`.
    pub fn random_unit(dim: usize, count: usize, scale: f64, seed: u64) -> Result<Self> {
        let mut rng = crate::substream(seed, 0);
        let functions: Vec<Vec<f64>> = (0..count)
            .map(|_| loop {
                let v: Vec<f64> =
                    (0..dim).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    return v.into_iter().map(|x| x / norm).collect::<Vec<f64>>();
                }
            })
            .collect();
        FunctionClass::new(functions, scale)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.functions[0].len()
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `alpha = sup_f d(f, 0)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Analytic `E f^2` under both supported laws.
    pub fn second_moment(&self, f: usize) -> f64 {
        self.functions[f].iter().map(|v| v * v).sum()
    }

    /// Class net with `phi_2` budgets.
    pub fn build_net(&self) -> Result<AdmissibleNet> {
        build_net(&self.space, &YoungFunction::phi_p(2.0)?)
    }
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One seeded batch of draws.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub draws: Vec<Vec<f64>>,
    pub law: SampleLaw,
    pub seed: u64,
    pub index: u64,
}

impl SampleBatch {
    /// Batch `index` of the substream family rooted at `seed`.
    pub fn sample(law: SampleLaw, dim: usize, n: usize, seed: u64, index: u64) -> Result<Self> {
        if n < 1 || dim < 1 {
            return Err(CoreError::Argument("batch needs n >= 1 and dim >= 1".into()));
        }
        let mut rng = crate::substream(seed, index);
        let draws = (0..n)
            .map(|_| {
                (0..dim)
                    .map(|_| match law {
                        SampleLaw::GaussianIso => rng.sample(rand_distr::StandardNormal),
                        SampleLaw::Rademacher => {
                            if rng.gen::<bool>() {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(SampleBatch { draws, law, seed, index })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// `k_0` with `2^{2 k_0} <= N < 2^{2(k_0 + 1)}`.
pub fn k0_level(n: usize) -> Result<usize> {
    if n < 1 {
        return Err(CoreError::Argument("k0 needs N >= 1".into()));
    }
    let mut k = 0usize;
    while 1u128 << (2 * (k + 1)) <= n as u128 {
        k += 1;
    }
    Ok(k)
}

/// Evaluation matrix `a[f][i] = <f, X_i>`.
fn eval_matrix(class: &FunctionClass, batch: &SampleBatch) -> Result<Vec<Vec<f64>>> {
    if batch.draws[0].len() != class.dim() {
        return Err(CoreError::Data(format!(
            "batch dim {} does not match class dim {}",
            batch.draws[0].len(),
            class.dim()
        )));
    }
    Ok(class
        .functions
        .iter()
        .map(|f| batch.draws.iter().map(|x| f.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
        .collect())
}

/// `S_N(f)` for every function; exact centering by the analytic moments.
pub fn s_n_process(class: &FunctionClass, batch: &SampleBatch) -> Result<Vec<f64>> {
    let a = eval_matrix(class, batch)?;
    let n = batch.len() as f64;
    Ok(a.iter()
        .enumerate()
        .map(|(f, row)| row.iter().map(|v| v * v).sum::<f64>() / n - class.second_moment(f))
        .collect())
}

/// The `P/Q/R` split of `(1/N) sum f^2(X_i)` around the level-`k_0`
/// projection, with analytic expectations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub k0: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub e_p: Vec<f64>,
    pub e_q: Vec<f64>,
    pub e_r: Vec<f64>,
}

/// Decompose `f = (f - pi_{k0} f) + pi_{k0} f` and average the expanded
/// square; projections beyond the net's terminal level are `f` itself.
pub fn pqr_decompose(
    class: &FunctionClass,
    batch: &SampleBatch,
    net: &AdmissibleNet,
) -> Result<Decomposition> {
    let a = eval_matrix(class, batch)?;
    let k0 = k0_level(batch.len())?;
    let n = batch.len() as f64;
    let m = class.len();
    let mut out = Decomposition {
        k0,
        p: vec![0.0; m],
        q: vec![0.0; m],
        r: vec![0.0; m],
        e_p: vec![0.0; m],
        e_q: vec![0.0; m],
        e_r: vec![0.0; m],
    };
    for f in 0..m {
        let pf = net.proj_at(f, k0)?;
        let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
        for i in 0..batch.len() {
            let df = a[f][i] - a[pf][i];
            p += df * df;
            q += 2.0 * df * a[pf][i];
            r += a[pf][i] * a[pf][i];
        }
        out.p[f] = p / n;
        out.q[f] = q / n;
        out.r[f] = r / n;
        let diff: Vec<f64> =
            class.functions[f].iter().zip(&class.functions[pf]).map(|(x, y)| x - y).collect();
        out.e_p[f] = diff.iter().map(|v| v * v).sum();
        out.e_q[f] = 2.0 * diff.iter().zip(&class.functions[pf]).map(|(d, g)| d * g).sum::<f64>();
        out.e_r[f] = class.second_moment(pf);
    }
    Ok(out)
}

/// `A (gamma^2/N + alpha gamma / sqrt(N)) + B alpha^2 phi^{-1}(z) / sqrt(N)`
/// with the Bernstein gauge at parameter `N`.
pub fn thm1_bound(gamma2: f64, alpha: f64, n: usize, a: f64, b: f64, z: f64) -> Result<f64> {
    if n < 1 {
        return Err(CoreError::Argument("bound needs N >= 1".into()));
    }
    if gamma2 < 0.0 || alpha < 0.0 || a < 0.0 || b < 0.0 || z < 0.0 {
        return Err(CoreError::Argument("bound inputs must be nonnegative".into()));
    }
    let phi = YoungFunction::bernstein(n as u64)?;
    let nn = n as f64;
    Ok(a * (gamma2 * gamma2 / nn + alpha * gamma2 / nn.sqrt())
        + b * alpha * alpha * phi.eval_inv(z)? / nn.sqrt())
}

/// Square-process constants; `a`/`b` are the closing constants of the
/// bound, `k`/`c` the measured Orlicz constants they are built from.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SquareConstants {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub c: f64,
}

impl SquareConstants {
    /// Closing constants `A = 900 (K + C)`, `B = 3456 max(C^2, K^2)`.
    pub fn from_kc(k: f64, c: f64) -> Self {
        SquareConstants { a: 900.0 * (k + c), b: 3456.0 * c.max(k) * c.max(k), k, c }
    }
}

/// Per-batch verification record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SquareProcessReport {
    pub sup_value: f64,
    pub per_function: Vec<f64>,
    pub decomposition: Decomposition,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub z: f64,
    pub bound_value: f64,
    pub pass: bool,
    /// `A` that would make the deterministic part alone tight.
    pub min_a_if_b_zero: f64,
    /// `B` that would make the `Z` part alone tight.
    pub min_b_if_a_zero: f64,
}

/// Verify the square-process bound on `reps` seeded batches.
///
/// Per batch: evaluate `sup_f S_N(f)`, the three `Z` statistics from their
/// defining normalizations, `Z = Z1/2 + Z2/4 + Z3/4`, and compare against
/// `thm1_bound` with the supplied constants.
pub fn verify_thm1(
    class: &FunctionClass,
    law: SampleLaw,
    n: usize,
    reps: usize,
    seed: u64,
    constants: SquareConstants,
) -> Result<Vec<SquareProcessReport>> {
    let net = class.build_net()?;
    let gamma2 = net.gamma2_upper();
    let alpha = class.alpha();
    let phi = YoungFunction::bernstein(n as u64)?;
    let sqrt_n = (n as f64).sqrt();
    let k2 = constants.k * constants.k;
    let mut reports = Vec::with_capacity(reps);

    for rep in 0..reps as u64 {
        let batch = SampleBatch::sample(law, class.dim(), n, seed, rep)?;
        let a = eval_matrix(class, &batch)?;
        let per_function: Vec<f64> = (0..class.len())
            .map(|f| a[f].iter().map(|v| v * v).sum::<f64>() / n as f64 - class.second_moment(f))
            .collect();
        let sup_value = per_function.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let decomposition = pqr_decompose(class, &batch, &net)?;

        // Z1: centered squares of differences over K^2 sqrt(N) d^2
        // Z2: differences of squares over 2 K^2 sqrt(N) alpha d
        let mut z1 = 0.0f64;
        let mut z2 = 0.0f64;
        for lev in 1..=net.terminal_level() {
            let members = &net.levels()[lev];
            let budget = net.budgets()[lev] as f64;
            let denom = budget * budget * budget;
            let mut u = 0.0f64;
            let mut v = 0.0f64;
            for (ai, &g) in members.iter().enumerate() {
                for &h in members.iter().skip(ai + 1) {
                    let d = class.space.dist(g, h);
                    if d == 0.0 {
                        continue;
                    }
                    let e_diff2: f64 = class.functions[g]
                        .iter()
                        .zip(&class.functions[h])
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum();
                    let mut t1 = 0.0f64;
                    let mut t2 = 0.0f64;
                    for i in 0..n {
                        let df = a[g][i] - a[h][i];
                        t1 += df * df;
                        t2 += a[g][i] * a[g][i] - a[h][i] * a[h][i];
                    }
                    t1 -= n as f64 * e_diff2;
                    t2 -= n as f64 * (class.second_moment(g) - class.second_moment(h));
                    let x1 = t1.abs() / (k2 * sqrt_n * d * d);
                    let x2 = t2.abs() / (2.0 * k2 * sqrt_n * alpha * d);
                    u += 2.0 * phi.eval(x1)?;
                    v += 2.0 * phi.eval(x2)?;
                }
            }
            z1 += u / denom;
            z2 += v / denom;
        }

        // Z3: the single root function
        let f0 = net.levels()[0][0];
        let mut t3 = 0.0f64;
        for i in 0..n {
            t3 += a[f0][i] * a[f0][i];
        }
        t3 -= n as f64 * class.second_moment(f0);
        let z3 = phi.eval(t3.abs() / (k2 * sqrt_n * alpha * alpha))?;

        let z = 0.5 * z1 + 0.25 * z2 + 0.25 * z3;
        let bound_value = thm1_bound(gamma2, alpha, n, constants.a, constants.b, z)?;
        let det_part = gamma2 * gamma2 / n as f64 + alpha * gamma2 / sqrt_n;
        let z_part = alpha * alpha * phi.eval_inv(z)? / sqrt_n;
        reports.push(SquareProcessReport {
            sup_value,
            per_function,
            decomposition,
            z1,
            z2,
            z3,
            z,
            bound_value,
            pass: sup_value <= bound_value,
            min_a_if_b_zero: if det_part > 0.0 { sup_value.max(0.0) / det_part } else { 0.0 },
            min_b_if_a_zero: if z_part > 0.0 { sup_value.max(0.0) / z_part } else { 0.0 },
        });
    }
    Ok(reports)
}

/// One row of a tail table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRow {
    pub u: f64,
    pub empirical: f64,
    pub bound: f64,
}

/// Monte Carlo tail of `|S_N(f-g)|` for a pair at calibrated distance
/// `d_value`, against `2 exp(-N min(u^2 / 4d^4, u / 4d^2))` on a `u`-grid.
pub fn bernstein_pair_tail(
    d_value: f64,
    n: usize,
    law: SampleLaw,
    trials: usize,
    seed: u64,
    u_grid: &[f64],
) -> Result<Vec<TailRow>> {
    if !(d_value > 0.0) {
        return Err(CoreError::Argument("pair distance must be positive".into()));
    }
    if n < 1 || trials < 1 {
        return Err(CoreError::Argument("tail needs N >= 1 and trials >= 1".into()));
    }
    // realize f - g as a vector h with c |h|_2 = d_value
    let scale = crate::procsim::GAUSSIAN_PHI2_NORM;
    let h_norm = d_value / scale;
    let dim = match law {
        SampleLaw::GaussianIso => 1,
        SampleLaw::Rademacher => 16,
    };
    let coord = h_norm / (dim as f64).sqrt();
    let e_sq = h_norm * h_norm;

    let mut devs = Vec::with_capacity(trials);
    for trial in 0..trials as u64 {
        let batch = SampleBatch::sample(law, dim, n, seed, trial)?;
        let mut acc = 0.0;
        for x in &batch.draws {
            let v: f64 = x.iter().map(|xi| coord * xi).sum();
            acc += v * v;
        }
        devs.push((acc / n as f64 - e_sq).abs());
    }

    let d2 = d_value * d_value;
    let d4 = d2 * d2;
    Ok(u_grid
        .iter()
        .map(|&u| {
            let count = devs.iter().filter(|&&v| v >= u).count();
            let expo = (u * u / (4.0 * d4)).min(u / (4.0 * d2));
            TailRow {
                u,
                empirical: count as f64 / trials as f64,
                bound: 2.0 * (-(n as f64) * expo).exp(),
            }
        })
        .collect())
}

/// Default 20-point grid spanning the tail range for a pair at distance
/// `d_value` (in units of `E (f-g)^2`).
pub fn default_u_grid(d_value: f64) -> Vec<f64> {
    let e_sq = (d_value / crate::procsim::GAUSSIAN_PHI2_NORM).powi(2);
    (1..=20).map(|i| e_sq * 0.1 * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn k0_examples() {
        assert_eq!(k0_level(1).unwrap(), 0);
        assert_eq!(k0_level(4).unwrap(), 1);
        assert_eq!(k0_level(100).unwrap(), 3);
        assert_eq!(k0_level(128).unwrap(), 3);
        assert!(k0_level(0).is_err());
    }

    #[test]
    fn s_n_zero_function_and_rademacher_identity() {
        let class = FunctionClass::new(
            vec![vec![1e-9, 0.0], vec![1.0, 0.0]],
            crate::procsim::GAUSSIAN_PHI2_NORM,
        )
        .unwrap();
        let batch = SampleBatch::sample(SampleLaw::GaussianIso, 2, 64, 1, 0).unwrap();
        let s = s_n_process(&class, &batch).unwrap();
        assert!(s[0].abs() < 1e-15);

        // all draws equal +1 realization: S_N(e1) = 1 - 1 = 0
        let batch = SampleBatch {
            draws: vec![vec![1.0, 1.0]; 16],
            law: SampleLaw::Rademacher,
            seed: 0,
            index: 0,
        };
        let s = s_n_process(&class, &batch).unwrap();
        assert_relative_eq!(s[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn s_n_concentrates() {
        let class =
            FunctionClass::new(vec![vec![1.0, 0.0, 0.0]], crate::procsim::GAUSSIAN_PHI2_NORM)
                .unwrap();
        let batch = SampleBatch::sample(SampleLaw::GaussianIso, 3, 100_000, 5, 0).unwrap();
        let s = s_n_process(&class, &batch).unwrap();
        // Var(f^2(X)) = 2 for a unit functional
        assert!(s[0].abs() <= 5.0 * (2.0f64 / 100_000.0).sqrt(), "S_N = {}", s[0]);
    }

    #[test]
    fn pqr_identity_and_cauchy_schwarz() {
        let class =
            FunctionClass::random_unit(6, 40, crate::procsim::GAUSSIAN_PHI2_NORM, 77).unwrap();
        let net = class.build_net().unwrap();
        for (n, idx) in [(4usize, 0u64), (64, 1), (128, 2)] {
            let batch = SampleBatch::sample(SampleLaw::GaussianIso, 6, n, 9, idx).unwrap();
            let dec = pqr_decompose(&class, &batch, &net).unwrap();
            let s = s_n_process(&class, &batch).unwrap();
            for f in 0..class.len() {
                let total = dec.p[f] + dec.q[f] + dec.r[f];
                let raw: f64 = s[f] + class.second_moment(f);
                assert_relative_eq!(total, raw, max_relative = 1e-9);
                let s_rebuilt =
                    dec.p[f] + dec.q[f] + dec.r[f] - dec.e_p[f] - dec.e_q[f] - dec.e_r[f];
                assert_relative_eq!(s_rebuilt, s[f], max_relative = 1e-9, epsilon = 1e-12);
                assert!(
                    dec.q[f].abs() <= 2.0 * (dec.p[f] * dec.r[f]).sqrt() + 1e-12,
                    "Cauchy-Schwarz violated"
                );
            }
            // with k0 >= terminal level, projections equal f: P = Q = 0
            if k0_level(n).unwrap() >= net.terminal_level() {
                for f in 0..class.len() {
                    assert_eq!(dec.p[f], 0.0);
                    assert_eq!(dec.q[f], 0.0);
                }
            }
        }
    }

    #[test]
    fn thm1_bound_arithmetic() {
        // z with phi^{-1}(z) = 1 means z = phi(1) = 1
        let b = thm1_bound(1.0, 1.0, 100, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(b, 0.21, max_relative = 1e-12);
        let b0 = thm1_bound(1.0, 1.0, 100, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(b0, 0.11, max_relative = 1e-12);
        let c = SquareConstants::from_kc(1.0, 1.0);
        assert_relative_eq!(c.a, 1800.0, max_relative = 1e-12);
        assert_relative_eq!(c.b, 3456.0, max_relative = 1e-12);
    }

    #[test]
    fn verify_thm1_trivial_class_and_small_run() {
        let class =
            FunctionClass::new(vec![vec![1e-12, 0.0]], crate::procsim::GAUSSIAN_PHI2_NORM)
                .unwrap();
        let reports = verify_thm1(
            &class,
            SampleLaw::GaussianIso,
            16,
            5,
            3,
            SquareConstants::from_kc(1.0, 1.0),
        )
        .unwrap();
        for r in reports {
            assert!(r.sup_value.abs() < 1e-20);
            assert!(r.pass);
        }

        let class =
            FunctionClass::random_unit(8, 32, crate::procsim::GAUSSIAN_PHI2_NORM, 4).unwrap();
        let reports = verify_thm1(
            &class,
            SampleLaw::GaussianIso,
            128,
            20,
            5,
            SquareConstants::from_kc(1.13, 1.01),
        )
        .unwrap();
        for r in &reports {
            assert!(r.pass, "sup {} vs bound {}", r.sup_value, r.bound_value);
            assert!(r.z1.is_finite() && r.z2.is_finite() && r.z3.is_finite());
            assert_relative_eq!(
                r.z,
                0.5 * r.z1 + 0.25 * r.z2 + 0.25 * r.z3,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn sup_is_monotone_in_the_class() {
        let big =
            FunctionClass::random_unit(6, 48, crate::procsim::GAUSSIAN_PHI2_NORM, 21).unwrap();
        let small = FunctionClass::new(big.functions()[..24].to_vec(), big.scale()).unwrap();
        let batch = SampleBatch::sample(SampleLaw::GaussianIso, 6, 64, 8, 0).unwrap();
        let s_big = s_n_process(&big, &batch).unwrap();
        let s_small = s_n_process(&small, &batch).unwrap();
        let sup_big = s_big.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sup_small = s_small.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(sup_big >= sup_small);
    }

    #[test]
    fn pair_tail_is_dominated() {
        let d = crate::procsim::GAUSSIAN_PHI2_NORM; // |f - g|_2 = 1
        let grid = default_u_grid(d);
        let rows = bernstein_pair_tail(d, 64, SampleLaw::GaussianIso, 20_000, 13, &grid).unwrap();
        for r in &rows {
            assert!(r.empirical <= r.bound, "u={} emp={} bound={}", r.u, r.empirical, r.bound);
        }
        // u = 0 is trivially dominated by the prefactor 2
        let rows = bernstein_pair_tail(d, 64, SampleLaw::GaussianIso, 100, 13, &[0.0]).unwrap();
        assert!(rows[0].empirical <= rows[0].bound);
        // Rademacher law runs too
        let rows = bernstein_pair_tail(d, 64, SampleLaw::Rademacher, 5_000, 14, &grid).unwrap();
        for r in &rows {
            assert!(r.empirical <= r.bound);
        }
    }

    #[test]
    fn sup_tail_is_dominated_qualitatively() {
        // frequency of sup S_N exceeding the bound grown by u stays under
        // exp(-min(sqrt(N) u, u^2))
        let class =
            FunctionClass::random_unit(6, 32, crate::procsim::GAUSSIAN_PHI2_NORM, 31).unwrap();
        let n = 64usize;
        let constants = SquareConstants::from_kc(1.07, 1.0);
        let reports =
            verify_thm1(&class, SampleLaw::GaussianIso, n, 100, 17, constants).unwrap();
        let net = class.build_net().unwrap();
        let gamma2 = net.gamma2_upper();
        let alpha = class.alpha();
        let det = constants.a * (gamma2 * gamma2 / n as f64 + alpha * gamma2 / (n as f64).sqrt());
        for u in [0.25f64, 1.0, 4.0] {
            let cut = det + constants.b * alpha * alpha * u / (n as f64).sqrt();
            let freq = reports.iter().filter(|r| r.sup_value > cut).count() as f64 / 100.0;
            let tail = (-((n as f64).sqrt() * u).min(u * u)).exp();
            assert!(freq <= tail, "u={u}: freq {freq} > tail {tail}");
        }
    }

    #[test]
    fn class_guards() {
        assert!(FunctionClass::new(vec![], 1.0).is_err());
        let too_big: Vec<Vec<f64>> = (0..257).map(|i| vec![i as f64, 1.0]).collect();
        match FunctionClass::new(too_big, 1.0) {
            Err(crate::CoreError::Size(msg)) => assert!(msg.contains("shrink")),
            other => panic!("expected size error, got {other:?}"),
        }
        // dimension mismatch inside a batch
        let class = FunctionClass::new(vec![vec![1.0, 0.0]], 1.0).unwrap();
        let batch = SampleBatch::sample(SampleLaw::GaussianIso, 3, 8, 0, 0).unwrap();
        assert!(s_n_process(&class, &batch).is_err());
    }
}
