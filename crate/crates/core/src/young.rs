//! Orlicz-type gauge functions and empirical Orlicz norms.
//!
//! Two gauge families are supported: the exponential family
//! `phi_p(x) = 2^(x^p) - 1` and the Bernstein gauge
//! `phi(x) = 2^min(sqrt(N) x, x^2) - 1`, which mixes a subgaussian regime
//! for small arguments with a subexponential one for large arguments. Both
//! vanish at 0, equal 1 at 1, and increase to infinity, which is all the
//! chaining arguments need.

use crate::{CoreError, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

const LN2: f64 = std::f64::consts::LN_2;

/// An Orlicz-type gauge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "YoungFunctionRaw")]
pub enum YoungFunction {
    /// `2^(x^p) - 1`, `p > 0`.
    PhiP { p: f64 },
    /// `2^min(sqrt(N) x, x^2) - 1`, `N >= 1`.
    Bernstein { n: u64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum YoungFunctionRaw {
    PhiP { p: f64 },
    Bernstein { n: u64 },
}

impl TryFrom<YoungFunctionRaw> for YoungFunction {
    type Error = String;

    fn try_from(raw: YoungFunctionRaw) -> std::result::Result<Self, String> {
        match raw {
            YoungFunctionRaw::PhiP { p } => YoungFunction::phi_p(p),
            YoungFunctionRaw::Bernstein { n } => YoungFunction::bernstein(n),
        }
        .map_err(|e| e.to_string())
    }
}

impl YoungFunction {
    pub fn phi_p(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(CoreError::Argument(format!("phi_p needs p > 0, got {p}")));
        }
        Ok(YoungFunction::PhiP { p })
    }

    pub fn bernstein(n: u64) -> Result<Self> {
        if n < 1 {
            return Err(CoreError::Argument("bernstein gauge needs N >= 1".into()));
        }
        Ok(YoungFunction::Bernstein { n })
    }

    /// Gauge value at `x >= 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || !x.is_finite() {
            return Err(CoreError::Domain(format!("gauge argument must be >= 0, got {x}")));
        }
        Ok(match *self {
            YoungFunction::PhiP { p } => exp2_m1(x.powf(p)),
            YoungFunction::Bernstein { n } => {
                let s = (n as f64).sqrt();
                exp2_m1((s * x).min(x * x))
            }
        })
    }

    /// Inverse gauge at `y >= 0`.
    ///
    /// For the Bernstein gauge this is the closed-form
    /// `max(log2(1+y)/sqrt(N), sqrt(log2(1+y)))`, used verbatim even where
    /// the gauge itself is non-convex.
    pub fn eval_inv(&self, y: f64) -> Result<f64> {
        if y < 0.0 || y.is_nan() {
            return Err(CoreError::Domain(format!("inverse argument must be >= 0, got {y}")));
        }
        if y.is_infinite() {
            return Ok(f64::INFINITY);
        }
        let l = log2_1p(y);
        Ok(match *self {
            YoungFunction::PhiP { p } => l.powf(1.0 / p),
            YoungFunction::Bernstein { n } => {
                let s = (n as f64).sqrt();
                (l / s).max(l.sqrt())
            }
        })
    }

    /// Subadditivity constant of the inverse: `K = 1` for `phi_p` with
    /// `p >= 1` and for the Bernstein gauge, `2^(1/p - 1)` for `p < 1`.
    pub fn subadd_k(&self) -> f64 {
        match *self {
            YoungFunction::PhiP { p } if p < 1.0 => (2.0f64).powf(1.0 / p - 1.0),
            _ => 1.0,
        }
    }

    /// Budget `N_n = floor(psi(2^n))` for `n >= 1`, `N_0 = 1`, saturating.
    pub fn budget(&self, n: u32) -> u64 {
        if n == 0 {
            return 1;
        }
        let x = (2.0f64).powi(n as i32);
        let expo = match *self {
            YoungFunction::PhiP { p } => x.powf(p),
            YoungFunction::Bernstein { n } => ((n as f64).sqrt() * x).min(x * x),
        };
        if expo >= 63.0 {
            u64::MAX
        } else {
            (expo.exp2() - 1.0).floor() as u64
        }
    }

    /// Convex companion of the Bernstein gauge: `2^q(x) - 1` with
    /// `q(x) = x^2` below `sqrt(N)` and its tangent `2 sqrt(N) x - N` above.
    pub fn bernstein_companion(&self, x: f64) -> Result<f64> {
        let YoungFunction::Bernstein { n } = *self else {
            return Err(CoreError::Argument("companion is defined for the Bernstein gauge".into()));
        };
        if x < 0.0 {
            return Err(CoreError::Domain("companion argument must be >= 0".into()));
        }
        let s = (n as f64).sqrt();
        let q = if x <= s { x * x } else { 2.0 * s * x - n as f64 };
        Ok(exp2_m1(q))
    }
}

/// `2^t - 1` with full precision near 0.
fn exp2_m1(t: f64) -> f64 {
    (t * LN2).exp_m1()
}

/// `log2(1 + y)` with full precision near 0.
fn log2_1p(y: f64) -> f64 {
    y.ln_1p() / LN2
}

/// Grid certificate for the exponential-type condition
/// `psi^{-1}(x y) <= K (psi^{-1}(x) + psi^{-1}(y))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubadditivityCertificate {
    pub k: f64,
    pub grid_max_ratio: f64,
    pub grid_spec: String,
}

/// Certify the subadditivity constant on a logarithmic `(x, y)` grid.
///
/// `K` is the analytic constant for the gauge; the certificate records the
/// grid and the maximum observed ratio so a failure is reproducible.
pub fn subadd_constant(
    psi: &YoungFunction,
    log2_min: f64,
    log2_max: f64,
    steps: usize,
) -> Result<SubadditivityCertificate> {
    if steps < 2 {
        return Err(CoreError::Argument("subadditivity grid needs at least 2 steps".into()));
    }
    if !(log2_min < log2_max) {
        return Err(CoreError::Argument("empty subadditivity grid range".into()));
    }
    let mut max_ratio: f64 = 0.0;
    for i in 0..steps {
        let lx = log2_min + (log2_max - log2_min) * i as f64 / (steps - 1) as f64;
        let x = lx.exp2();
        let ix = psi.eval_inv(x)?;
        for j in 0..steps {
            let ly = log2_min + (log2_max - log2_min) * j as f64 / (steps - 1) as f64;
            let y = ly.exp2();
            let denom = ix + psi.eval_inv(y)?;
            if denom == 0.0 {
                continue;
            }
            let ratio = psi.eval_inv(x * y)? / denom;
            if ratio > max_ratio {
                max_ratio = ratio;
            }
        }
    }
    let k = psi.subadd_k();
    Ok(SubadditivityCertificate {
        k,
        grid_max_ratio: max_ratio,
        grid_spec: format!("log2 grid [{log2_min}, {log2_max}] x same, {steps}x{steps} points"),
    })
}

/// Empirical Orlicz norm of a finite sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalOrliczNorm {
    pub value: f64,
    pub sample_count: usize,
    pub tolerance: f64,
}

/// Bisect for `C` with `mean psi(|s_i| / C)` in `[1 - tol, 1]`.
///
/// The bracket `[max|s| / psi^{-1}(big), 8 max|s|]` always straddles the
/// target band for finite samples; 200 iterations cap the search.
pub fn orlicz_norm(samples: &[f64], psi: &YoungFunction, tol: f64) -> Result<EmpiricalOrliczNorm> {
    if samples.is_empty() {
        return Err(CoreError::Argument("orlicz norm of an empty sample".into()));
    }
    if !(tol > 0.0) {
        return Err(CoreError::Argument("orlicz norm tolerance must be > 0".into()));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(CoreError::Data("orlicz norm input contains non-finite samples".into()));
    }
    let max_abs = samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    if max_abs == 0.0 {
        return Ok(EmpiricalOrliczNorm { value: 0.0, sample_count: samples.len(), tolerance: tol });
    }
    let mean_at = |c: f64| -> Result<f64> {
        let mut acc = 0.0;
        for &s in samples {
            acc += psi.eval(s.abs() / c)?;
        }
        Ok(acc / samples.len() as f64)
    };
    let big = (2 * samples.len()).max(4) as f64;
    let mut lo = max_abs / psi.eval_inv(big)?;
    let mut hi = max_abs * 8.0;
    let mut mid = hi;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let m = mean_at(mid)?;
        if m > 1.0 {
            lo = mid;
        } else if m < 1.0 - tol {
            hi = mid;
        } else {
            return Ok(EmpiricalOrliczNorm { value: mid, sample_count: samples.len(), tolerance: tol });
        }
    }
    // band narrower than f64 resolution along the way; return the midpoint
    Ok(EmpiricalOrliczNorm { value: mid, sample_count: samples.len(), tolerance: tol })
}

/// Check that a distance matrix is a metric: square, symmetric, zero
/// diagonal, nonnegative, triangle inequality within `1e-12` relative slack.
pub fn validate_metric(d: &DMatrix<f64>) -> Result<bool> {
    if d.nrows() != d.ncols() {
        return Err(CoreError::Data(format!(
            "distance matrix must be square, got {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    let n = d.nrows();
    let scale = d.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
    let tol = 1e-12 * scale;
    for i in 0..n {
        if d[(i, i)].abs() > tol {
            return Ok(false);
        }
        for j in 0..n {
            let v = d[(i, j)];
            if !v.is_finite() {
                return Err(CoreError::Data("distance matrix contains non-finite entries".into()));
            }
            if v < -tol || (d[(j, i)] - v).abs() > tol {
                return Ok(false);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if d[(i, k)] > d[(i, j)] + d[(j, k)] + tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let p2 = YoungFunction::phi_p(2.0).unwrap();
        assert_eq!(p2.eval(0.0).unwrap(), 0.0);
        assert_relative_eq!(p2.eval(1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(p2.eval(2.0).unwrap(), 15.0, max_relative = 1e-14);
        let b1 = YoungFunction::bernstein(1).unwrap();
        assert_relative_eq!(b1.eval(2.0).unwrap(), 3.0, max_relative = 1e-14);
        assert_relative_eq!(b1.eval(1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(p2.eval(-1.0).is_err());
    }

    #[test]
    fn eval_inv_examples() {
        let p2 = YoungFunction::phi_p(2.0).unwrap();
        assert_relative_eq!(p2.eval_inv(15.0).unwrap(), 2.0, max_relative = 1e-14);
        for n in [1u64, 4, 100] {
            let b = YoungFunction::bernstein(n).unwrap();
            assert_relative_eq!(b.eval_inv(1.0).unwrap(), 1.0, max_relative = 1e-14);
        }
        let b4 = YoungFunction::bernstein(4).unwrap();
        assert_relative_eq!(b4.eval_inv(3.0).unwrap(), 2.0f64.sqrt(), max_relative = 1e-14);
        assert!(b4.eval_inv(-0.5).is_err());
    }

    #[test]
    fn roundtrip_on_log_grid() {
        let gauges = [
            YoungFunction::phi_p(2.0).unwrap(),
            YoungFunction::phi_p(1.0).unwrap(),
            YoungFunction::phi_p(0.5).unwrap(),
            YoungFunction::bernstein(1).unwrap(),
            YoungFunction::bernstein(64).unwrap(),
        ];
        for g in gauges {
            for i in -40..=20 {
                let x = (i as f64 / 2.0).exp2();
                // keep the forward value finite
                if g.eval(x).unwrap().is_infinite() {
                    continue;
                }
                let back = g.eval_inv(g.eval(x).unwrap()).unwrap();
                assert_relative_eq!(back, x, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn subadd_certificates() {
        let c = subadd_constant(&YoungFunction::phi_p(2.0).unwrap(), -20.0, 40.0, 121).unwrap();
        assert_eq!(c.k, 1.0);
        assert!(c.grid_max_ratio <= 1.0 + 1e-12, "ratio {}", c.grid_max_ratio);

        let c = subadd_constant(&YoungFunction::phi_p(0.5).unwrap(), -20.0, 40.0, 121).unwrap();
        assert_eq!(c.k, 2.0);
        assert!(c.grid_max_ratio <= 2.0 + 1e-12);

        let c = subadd_constant(&YoungFunction::phi_p(1.0).unwrap(), -20.0, 40.0, 121).unwrap();
        assert!(c.grid_max_ratio <= 1.0 + 1e-12);

        let c = subadd_constant(&YoungFunction::bernstein(16).unwrap(), -20.0, 40.0, 121).unwrap();
        assert_eq!(c.k, 1.0);
        assert!(c.grid_max_ratio <= 1.0 + 1e-12);

        assert!(subadd_constant(&YoungFunction::phi_p(1.0).unwrap(), 0.0, 0.0, 10).is_err());
    }

    proptest! {
        #[test]
        fn subadd_ratio_bounded(p in 0.3f64..4.0) {
            let g = YoungFunction::phi_p(p).unwrap();
            let cert = subadd_constant(&g, -15.0, 30.0, 41).unwrap();
            let k = if p >= 1.0 { 1.0 } else { (2.0f64).powf(1.0/p - 1.0) };
            prop_assert!(cert.grid_max_ratio <= k * (1.0 + 1e-10));
        }
    }

    #[test]
    fn orlicz_constant_sample() {
        let p1 = YoungFunction::phi_p(1.0).unwrap();
        let samples = vec![3.5; 50];
        let n = orlicz_norm(&samples, &p1, 1e-9).unwrap();
        assert_relative_eq!(n.value, 3.5, max_relative = 1e-6);
        let zeros = vec![0.0; 10];
        assert_eq!(orlicz_norm(&zeros, &p1, 1e-9).unwrap().value, 0.0);
        assert!(orlicz_norm(&[1.0, f64::NAN], &p1, 1e-9).is_err());
        assert!(orlicz_norm(&[], &p1, 1e-9).is_err());
    }

    #[test]
    fn orlicz_gaussian_matches_quadrature_root() {
        // E 2^{(g/C)^2} = 2 has the closed-form root C = sqrt(8 ln2 / 3).
        use rand::Rng;
        let p2 = YoungFunction::phi_p(2.0).unwrap();
        let mut rng = crate::substream(7, 0);
        let samples: Vec<f64> =
            (0..100_000).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let n = orlicz_norm(&samples, &p2, 1e-6).unwrap();
        let exact = (8.0 * LN2 / 3.0).sqrt();
        assert!(n.value >= 1.0 && n.value <= 1.6, "value {}", n.value);
        assert_relative_eq!(n.value, exact, max_relative = 0.02);
    }

    #[test]
    fn bernstein_companion_sandwich_and_scaling() {
        for n in [1u64, 4, 16, 64] {
            let g = YoungFunction::bernstein(n).unwrap();
            for i in -30..=40 {
                let x = (i as f64 / 3.0).exp2();
                let phi = g.eval(x).unwrap();
                let psi = g.bernstein_companion(x).unwrap();
                let psi_half = g.bernstein_companion(x / 2.0).unwrap();
                if psi.is_finite() {
                    assert!(phi <= psi * (1.0 + 1e-12), "phi <= psi at x={x}, N={n}");
                }
                if psi_half.is_finite() && phi.is_finite() {
                    assert!(psi_half <= phi * (1.0 + 1e-12) + 1e-300, "psi(x/2) <= phi(x) at x={x}, N={n}");
                }
                // phi(x/D) <= phi(x)/D for D >= 1
                for d in [1.0, 1.5, 4.0, 32.0] {
                    let lhs = g.eval(x / d).unwrap();
                    let rhs = phi / d;
                    if rhs.is_finite() {
                        assert!(lhs <= rhs * (1.0 + 1e-12), "scaling at x={x}, D={d}, N={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn metric_validation() {
        let one = DMatrix::from_row_slice(1, 1, &[0.0]);
        assert!(validate_metric(&one).unwrap());

        let bad = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0]);
        assert!(!validate_metric(&bad).unwrap());

        let rect = DMatrix::from_row_slice(2, 3, &[0.0; 6]);
        assert!(validate_metric(&rect).is_err());

        // Euclidean distances of 10 random planar points are a metric.
        use rand::Rng;
        let mut rng = crate::substream(11, 0);
        let pts: Vec<(f64, f64)> = (0..10).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
        let mut d = DMatrix::zeros(10, 10);
        for i in 0..10 {
            for j in 0..10 {
                let dx = pts[i].0 - pts[j].0;
                let dy = pts[i].1 - pts[j].1;
                d[(i, j)] = (dx * dx + dy * dy).sqrt();
            }
        }
        assert!(validate_metric(&d).unwrap());
    }

    #[test]
    fn budgets_phi2() {
        let p2 = YoungFunction::phi_p(2.0).unwrap();
        assert_eq!(p2.budget(0), 1);
        assert_eq!(p2.budget(1), 15);
        assert_eq!(p2.budget(2), 65535);
        let p1 = YoungFunction::phi_p(1.0).unwrap();
        assert_eq!(p1.budget(1), 3);
        assert_eq!(p1.budget(2), 15);
        assert_eq!(p1.budget(3), 255);
    }
}
