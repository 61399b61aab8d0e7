//! Acceptance suite: one test per criterion, each printing a one-line
//! pass/fail summary with its headline numbers.
//!
//! Criteria 1-10 live here; reproducibility of CLI reports (criterion 11)
//! lives in the CLI crate's own acceptance tests.

use chaincert_core::calib::Calibration;
use chaincert_core::chain::{build_net, FiniteMetricSpace};
use chaincert_core::empsq::{self, SampleLaw, SquareConstants};
use chaincert_core::procsim::{
    self, CertificateConstants, NoiseKind, PathSampler, ProcessModel, Proposition,
};
use chaincert_core::sensing::{self, Ensemble};
use chaincert_core::young::YoungFunction;
use rand::Rng;

const RATIO_SLACK: f64 = 1.0 + 1e-9;
const REL: f64 = 1.0 + 1e-12;

fn repo_calibration() -> Calibration {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../calibration.json");
    Calibration::load(&path).expect("repo calibration.json")
}

fn fbm_setup(h: f64) -> (ProcessModel, procsim::IncrementGeometry, chaincert_core::AdmissibleNet)
{
    let grid: Vec<f64> = (1..=64).map(|k| k as f64 / 64.0).collect();
    let model = ProcessModel::fbm(h, grid).unwrap();
    let geo = procsim::increment_distance(&model, 0).unwrap();
    let net = build_net(&geo.space, geo.gauges.budget_gauge()).unwrap();
    (model, geo, net)
}

#[test]
fn criterion_01_prop1_pathwise() {
    let mut worst = 0.0f64;
    for h in [0.3, 0.5, 0.7] {
        let (model, geo, net) = fbm_setup(h);
        let sampler = PathSampler::new(&model).unwrap();
        let consts: Vec<(Proposition, CertificateConstants)> = [0usize, 1]
            .iter()
            .map(|&m| {
                let prop = Proposition::P1 { m };
                (prop, CertificateConstants::defaults(prop, &geo.gauges, &geo.space))
            })
            .collect();
        assert_eq!(consts[0].1.a, 15.0);
        assert_eq!(consts[0].1.b, 4.0);
        for i in 0..1000u64 {
            let path = sampler.sample(1001, i);
            let z = procsim::compute_z(&path, &net, &geo.space, &geo.gauges).unwrap();
            for &(prop, c) in &consts {
                let rep = procsim::verify_certificate(
                    &path, &z, &net, &geo.space, &geo.gauges, prop, c,
                )
                .unwrap();
                assert!(
                    rep.worst_ratio <= RATIO_SLACK,
                    "H={h} path={i} {prop:?}: ratio {}",
                    rep.worst_ratio
                );
                worst = worst.max(rep.worst_ratio);
            }
        }
    }
    println!("criterion 01 PASS: P1 pathwise, 3 H x 2 m x 1000 paths, worst ratio {worst:.4}");
}

#[test]
fn criterion_02_prop2_pathwise() {
    let mut worst = 0.0f64;
    for h in [0.3, 0.5, 0.7] {
        let (model, geo, net) = fbm_setup(h);
        let sampler = PathSampler::new(&model).unwrap();
        let c = CertificateConstants::defaults(Proposition::P2, &geo.gauges, &geo.space);
        assert_eq!(c.a, 30.0);
        assert_eq!(c.b, 10.0);
        for i in 0..1000u64 {
            let path = sampler.sample(2002, i);
            let z = procsim::compute_z(&path, &net, &geo.space, &geo.gauges).unwrap();
            let rep = procsim::verify_certificate(
                &path,
                &z,
                &net,
                &geo.space,
                &geo.gauges,
                Proposition::P2,
                c,
            )
            .unwrap();
            assert!(rep.worst_ratio <= RATIO_SLACK, "H={h} path={i}: {}", rep.worst_ratio);
            worst = worst.max(rep.worst_ratio);
        }
    }
    println!("criterion 02 PASS: P2 pathwise, 3 H x 1000 paths, worst ratio {worst:.4}");
}

fn canonical_setup(
    seed: u64,
) -> (ProcessModel, procsim::IncrementGeometry, chaincert_core::AdmissibleNet) {
    let mut rng = chaincert_core::substream(seed, 0);
    let points: Vec<Vec<f64>> = (0..32)
        .map(|_| {
            (0..16).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal) / 4.0).collect()
        })
        .collect();
    let model = ProcessModel::canonical(points, NoiseKind::SymExponential).unwrap();
    let geo = procsim::increment_distance(&model, seed).unwrap();
    let net = build_net(&geo.space, geo.gauges.budget_gauge()).unwrap();
    (model, geo, net)
}

#[test]
fn criterion_03_prop3_prop4_pathwise() {
    let (model, geo, net) = canonical_setup(33);
    assert!(geo.calibration_check <= 1.0, "calibration check {}", geo.calibration_check);
    let sampler = PathSampler::new(&model).unwrap();
    let props = [Proposition::P3 { m: 0 }, Proposition::P3 { m: 1 }, Proposition::P4];
    let consts: Vec<CertificateConstants> = props
        .iter()
        .map(|&p| CertificateConstants::defaults(p, &geo.gauges, &geo.space))
        .collect();
    // proof-version constants for (p1, p2) = (2, 1): A = 27, B = 2; Abar = 54, Bbar = 5
    assert_eq!(consts[0].a, 27.0);
    assert_eq!(consts[0].b, 2.0);
    assert_eq!(consts[2].a, 54.0);
    assert_eq!(consts[2].b, 5.0);
    let mut worst = 0.0f64;
    for i in 0..500u64 {
        let path = sampler.sample(3003, i);
        let z = procsim::compute_z(&path, &net, &geo.space, &geo.gauges).unwrap();
        for (&prop, &c) in props.iter().zip(&consts) {
            let rep =
                procsim::verify_certificate(&path, &z, &net, &geo.space, &geo.gauges, prop, c)
                    .unwrap();
            assert!(rep.worst_ratio <= RATIO_SLACK, "path={i} {prop:?}: {}", rep.worst_ratio);
            worst = worst.max(rep.worst_ratio);
        }
    }
    println!("criterion 03 PASS: P3/P4 pathwise, 500 paths, worst ratio {worst:.4}");
}

#[test]
fn criterion_04_expected_z_below_one() {
    let (model, geo, net) = fbm_setup(0.5);
    let (mean1, se1) = procsim::z_mean_mc(&model, &net, &geo, 2000, 4004).unwrap();
    assert!(mean1 <= 1.0 + 3.0 * se1, "one-distance EZ {mean1} +- {se1}");

    let (model2, geo2, net2) = canonical_setup(44);
    let (mean2, se2) = procsim::z_mean_mc(&model2, &net2, &geo2, 2000, 4005).unwrap();
    assert!(mean2 <= 1.0 + 3.0 * se2, "two-distance EZ {mean2} +- {se2}");
    println!(
        "criterion 04 PASS: E Z <= 1; one-dist {mean1:.4}+-{se1:.4}, two-dist {mean2:.4}+-{se2:.4}"
    );
}

fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).collect()
}

#[test]
fn criterion_05_deterministic_functional_suite() {
    let mut rng = chaincert_core::substream(5005, 0);
    let phi2 = YoungFunction::phi_p(2.0).unwrap();
    let phi_half = YoungFunction::phi_p(0.5).unwrap();
    let phi1 = YoungFunction::phi_p(1.0).unwrap();
    for trial in 0..200 {
        let pts = random_points(&mut rng, 15, 3);
        let space = FiniteMetricSpace::euclidean(&pts).unwrap();
        let psi = if trial % 2 == 0 { &phi2 } else { &phi_half };
        let net = build_net(&space, psi).unwrap();
        let n = space.len();
        let mut tau = vec![vec![0.0f64; n]; n];
        for s in 0..n {
            for t in 0..n {
                tau[s][t] = net.tau(&space, s, t).unwrap();
            }
        }
        let scale = tau.iter().flatten().fold(1.0f64, |m, &v| m.max(v));
        for s in 0..n {
            for t in 0..n {
                assert_eq!(tau[s][t], tau[t][s], "tau symmetry");
                for u in 0..n {
                    assert!(
                        tau[s][u] <= tau[s][t] + tau[t][u] + 1e-12 * scale,
                        "tau triangle"
                    );
                }
            }
        }
        for s in 0..n {
            for t in (s + 1)..n {
                let tb = net.tau_bar(&space, s, t).unwrap();
                assert!(0.5 * tb <= tau[s][t] * REL, "sandwich lower");
                assert!(tau[s][t] <= tb * REL, "sandwich upper");
                let k = net.k_level(&space, s, t).unwrap();
                let fs: Vec<f64> = (0..=net.terminal_level())
                    .map(|kk| net.f_at(&space, s, t, kk).unwrap())
                    .collect();
                let fmin = fs.iter().cloned().fold(f64::MAX, f64::min);
                assert!((fs[k] - fmin).abs() <= 1e-9 * (1.0 + fmin), "k argmin value");
                let largest = fs
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v <= fmin * REL)
                    .map(|(i, _)| i)
                    .max()
                    .unwrap();
                assert_eq!(k, largest, "k largest argmin");
            }
        }

        // two-distance relations on the same point cloud
        let space2 = FiniteMetricSpace::two_norm_space(&pts, 1.0, 1.0, 2.0, 1.0).unwrap();
        let net2 = build_net(&space2, &phi1).unwrap();
        let (p1, p2) = space2.exponents();
        for s in 0..n {
            for t in (s + 1)..n {
                let rep = net2.two_modulus(&space2, s, t).unwrap();
                let d = rep.two.as_ref().unwrap();
                assert!(
                    d.k1.min(d.k2) <= rep.k && rep.k <= d.k1.max(d.k2),
                    "two-distance k sandwich"
                );
                assert!(d.tau1 + d.tau2 <= rep.tau_bar * REL, "tau1+tau2 <= tau_bar");
                assert!(
                    rep.tau_bar <= (2.0 * (d.tau1 + d.tau2) + d.gus_correction) * REL,
                    "upper comparability with correction"
                );
                let w = (-(p1 * rep.k as f64)).exp2().max((-(p2 * rep.k as f64)).exp2());
                assert!(d.dbar1 + d.dbar2 <= w * rep.tau_bar * REL, "pair dbar bound");
            }
        }
        for t in 0..n {
            for m in 0..=2usize {
                let (_, dbar) = net2.two_chain_seq(t, m).unwrap();
                for (j, &db) in [1usize, 2].iter().zip(dbar.iter()) {
                    let p = if *j == 1 { p1 } else { p2 };
                    let bound = (-(p * m as f64)).exp2() * net2.two_sigma(*j, t, m).unwrap();
                    assert!(db <= bound * REL + 1e-15, "dbar level bound");
                }
            }
        }
    }
    println!("criterion 05 PASS: deterministic functional suite on 200 random 15-point spaces");
}

#[test]
fn criterion_06_bernstein_pair_tail() {
    // pair at unit l2 separation, calibrated distance
    let d_value = procsim::GAUSSIAN_PHI2_NORM;
    let grid = empsq::default_u_grid(d_value);
    assert_eq!(grid.len(), 20);
    let rows =
        empsq::bernstein_pair_tail(d_value, 64, SampleLaw::GaussianIso, 100_000, 6006, &grid)
            .unwrap();
    for r in &rows {
        assert!(
            r.empirical <= r.bound,
            "tail violated at u={}: {} > {}",
            r.u,
            r.empirical,
            r.bound
        );
    }
    println!("criterion 06 PASS: pair tail dominated on all 20 grid points (N=64, 1e5 trials)");
}

#[test]
fn criterion_07_square_process_bound() {
    let calib = repo_calibration();
    let constants = SquareConstants::from_kc(calib.empsq_k, calib.empsq_c);
    let class = empsq::FunctionClass::random_unit(8, 64, calib.alpha_gaussian_phi2, 707).unwrap();
    let reports =
        empsq::verify_thm1(&class, SampleLaw::GaussianIso, 128, 200, 7007, constants).unwrap();
    assert_eq!(reports.len(), 200);
    let mut worst_margin = 0.0f64;
    for (i, r) in reports.iter().enumerate() {
        assert!(r.pass, "rep {i}: sup {} > bound {}", r.sup_value, r.bound_value);
        worst_margin = worst_margin.max(r.sup_value / r.bound_value);
        let d = &r.decomposition;
        for f in 0..r.per_function.len() {
            let rebuilt = d.p[f] + d.q[f] + d.r[f] - d.e_p[f] - d.e_q[f] - d.e_r[f];
            let scale = r.per_function[f].abs().max(1.0);
            assert!(
                (rebuilt - r.per_function[f]).abs() <= 1e-9 * scale,
                "identity rep {i} fn {f}"
            );
            assert!(
                d.q[f].abs() <= 2.0 * (d.p[f] * d.r[f]).sqrt() + 1e-12,
                "Cauchy-Schwarz rep {i} fn {f}"
            );
        }
    }
    println!(
        "criterion 07 PASS: square-process bound on 200/200 reps (K={}, C={}), worst sup/bound {:.2e}",
        constants.k, constants.c, worst_margin
    );
}

#[test]
fn criterion_08_order_statistic_scaling() {
    let calib = repo_calibration();
    let ks = [1usize, 2, 4, 8];
    let ms = [16usize, 64, 256];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (gi, &m) in ms.iter().enumerate() {
        for (gj, &k) in ks.iter().enumerate() {
            let rep =
                sensing::gaussian_order_stat(k, m, 10_000, 8008 + (gi * 4 + gj) as u64).unwrap();
            let x = k as f64 * (m as f64 / k as f64).ln();
            xs.push(x);
            ys.push(rep.estimate * rep.estimate);
            // calibrated envelope
            let lo = (calib.order_stat_c1 * x).sqrt();
            let hi =
                2.0 * (k as f64 * (calib.order_stat_c0 * m as f64 / k as f64).ln()).sqrt();
            assert!(
                lo <= rep.estimate && rep.estimate <= hi,
                "envelope at k={k}, M={m}: {lo} <= {} <= {hi}",
                rep.estimate
            );
        }
    }
    // R^2 of the simple linear regression (with intercept)
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 >= 0.95, "R^2 = {r2}");

    // closed-form anchors
    let a1 = sensing::gaussian_order_stat(1, 1, 200_000, 8080).unwrap();
    assert!(
        (a1.estimate - (2.0 / std::f64::consts::PI).sqrt()).abs() <= 0.01,
        "k=M=1 anchor {}",
        a1.estimate
    );
    let a4 = sensing::gaussian_order_stat(4, 4, 200_000, 8081).unwrap();
    assert!((a4.estimate - 1.8800).abs() <= 0.02, "k=M=4 anchor {}", a4.estimate);
    println!("criterion 08 PASS: order-statistic scaling R^2 = {r2:.4}, envelope + anchors hold");
}

#[test]
fn criterion_09_rip_exactness() {
    for seed in 0..50u64 {
        let a = sensing::sample_matrix(8, 12, Ensemble::Gaussian, 9009 + seed).unwrap();
        for m in [1usize, 2] {
            let exact = sensing::delta_exact(&a, m).unwrap();
            let lower = sensing::delta_lower(&a, m, 30, seed).unwrap();
            assert!(lower <= exact + 1e-12, "lower {lower} > exact {exact}");
        }
        // independent dense-sphere-grid oracle on the M <= 8 sub-case
        let sub = sensing::MeasurementMatrix {
            entries: a.entries.columns(0, 8).into_owned(),
            ensemble: a.ensemble,
            alpha: a.alpha,
        };
        let gram = sub.entries.transpose() * &sub.entries;
        let exact1 = sensing::delta_exact(&sub, 1).unwrap();
        let diag = (0..8).map(|i| (gram[(i, i)] - 1.0).abs()).fold(0.0f64, f64::max);
        assert!((exact1 - diag).abs() < 1e-12);
        let exact2 = sensing::delta_exact(&sub, 2).unwrap();
        let mut grid_sup = 0.0f64;
        let steps = 1 << 15;
        for i in 0..8 {
            for j in (i + 1)..8 {
                let (gii, gij, gjj) = (gram[(i, i)], gram[(i, j)], gram[(j, j)]);
                for step in 0..steps {
                    let th = std::f64::consts::PI * step as f64 / steps as f64;
                    let (c, s) = (th.cos(), th.sin());
                    let q = c * c * gii + 2.0 * c * s * gij + s * s * gjj;
                    let dev = (q - 1.0).abs();
                    if dev > grid_sup {
                        grid_sup = dev;
                    }
                }
            }
        }
        assert!(
            (exact2 - grid_sup).abs() < 1e-6,
            "seed {seed}: eigen {exact2} vs sphere grid {grid_sup}"
        );
    }
    println!("criterion 09 PASS: delta_exact matches the sphere-grid oracle on 50 matrices");
}

#[test]
fn criterion_10_rip_tail_dominance() {
    let calib = repo_calibration();
    let rep =
        sensing::rip_tail_check(128, 32, 2, Ensemble::Gaussian, 500, 1010, &calib).unwrap();
    assert!(
        rep.exceed_frequency <= rep.tail_bound.max(if rep.delta_threshold > 1.0 { 1.0 } else { 0.0 }),
        "frequency {} > bound {}",
        rep.exceed_frequency,
        rep.tail_bound
    );
    assert!(rep.pass);
    println!(
        "criterion 10 PASS: RIP tail freq {} <= bound {:.2e} at delta {:.3}; sqrt2-1 rate {:.3}",
        rep.exceed_frequency, rep.tail_bound, rep.delta_threshold, rep.reconstruction_rate
    );
}
