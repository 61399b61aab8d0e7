//! Subcommand implementations.

use crate::config::{self, *};
use crate::report::{content_hash, fmt_f, jf, write_csv, RunReport};
use crate::{CliError, CliResult, RunOptions};
use chaincert_core::calib::Calibration;
use chaincert_core::chain::build_net;
use chaincert_core::empsq::{self, SquareConstants};
use chaincert_core::procsim::{
    self, CertificateConstants, GaugeSpec, PathSampler, Proposition,
};
use chaincert_core::sensing;
use serde_json::json;
use std::path::Path;
use std::time::Instant;

fn config_base(opts: &RunOptions) -> CliResult<std::path::PathBuf> {
    let p = opts
        .config_path
        .as_ref()
        .ok_or_else(|| CliError::Config("missing --config".into()))?;
    Ok(p.parent().unwrap_or_else(|| Path::new(".")).to_path_buf())
}

fn finish(report: RunReport, opts: &RunOptions, t0: Instant) -> CliResult<()> {
    let path = report.write(&opts.out_dir)?;
    eprintln!(
        "{}: {} checks, {} in {:.2?}",
        path.display(),
        report.checks.len(),
        if report.all_pass() { "all pass" } else { "FAILURES" },
        t0.elapsed()
    );
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::Numeric("one or more checks failed; see report.json".into()))
    }
}

fn hash_with_files(cfg_bytes: &[u8], base: &Path, files: &[&str]) -> CliResult<String> {
    let mut blobs: Vec<Vec<u8>> = vec![cfg_bytes.to_vec()];
    for f in files {
        blobs.push(
            std::fs::read(base.join(f))
                .map_err(|e| CliError::Data(format!("cannot read {f}: {e}")))?,
        );
    }
    let refs: Vec<&[u8]> = blobs.iter().map(|b| b.as_slice()).collect();
    Ok(content_hash(&refs))
}

fn space_files(space: &SpaceConfig) -> Vec<&str> {
    match space {
        SpaceConfig::Csv { d1, d2, .. } => {
            let mut v = vec![d1.as_str()];
            if let Some(d2) = d2 {
                v.push(d2.as_str());
            }
            v
        }
        _ => vec![],
    }
}

pub fn cmd_net(opts: &RunOptions) -> CliResult<()> {
    let t0 = Instant::now();
    let base = config_base(opts)?;
    let (cfg, bytes): (NetConfig, _) = config::load(opts.config_path.as_ref().unwrap())?;
    let hash = hash_with_files(&bytes, &base, &space_files(&cfg.space))?;
    let space = cfg.space.build(&base)?;
    let net = build_net(&space, &cfg.psi)?;
    let doc = net.to_doc(&space);

    let mut report = RunReport::new("net", serde_json::to_value(&cfg).unwrap(), hash);
    report.metric("points", json!(space.len()));
    report.metric("terminal_level", json!(net.terminal_level()));
    report.metric(
        "level_sizes",
        json!(net.levels().iter().map(|l| l.len()).collect::<Vec<_>>()),
    );
    report.metric("gamma2_upper", jf(net.gamma2_upper()));
    // budget/nesting audit
    let mut ok = true;
    for (n, lvl) in net.levels().iter().enumerate() {
        if lvl.len() as u64 > net.budgets()[n] {
            ok = false;
        }
        if n > 0 && !net.levels()[n - 1].iter().all(|u| lvl.contains(u)) {
            ok = false;
        }
    }
    report.check("net_validity", ok, json!({ "budgets": net.budgets() }));

    let text = serde_json::to_string_pretty(&doc).unwrap() + "\n";
    crate::report::atomic_write(&opts.out_dir.join("net.json"), text.as_bytes())?;
    report.tables.push("net.json".into());
    finish(report, opts, t0)
}

pub fn cmd_modulus(opts: &RunOptions) -> CliResult<()> {
    let t0 = Instant::now();
    let base = config_base(opts)?;
    let (cfg, bytes): (ModulusConfig, _) = config::load(opts.config_path.as_ref().unwrap())?;
    let hash = hash_with_files(&bytes, &base, &space_files(&cfg.space))?;
    let space = cfg.space.build(&base)?;
    let net = build_net(&space, &cfg.psi)?;
    let two = space.has_two_distances();

    let mut rows = Vec::new();
    let mut sandwich_ok = true;
    let mut argmin_ok = true;
    let mut two_ok = true;
    let (p1, p2) = space.exponents();
    for s in 0..space.len() {
        for t in (s + 1)..space.len() {
            let tau = net.tau(&space, s, t)?;
            let tau_bar = net.tau_bar(&space, s, t)?;
            let k = net.k_level(&space, s, t)?;
            if !(0.5 * tau_bar <= tau * (1.0 + 1e-12) && tau <= tau_bar * (1.0 + 1e-12)) {
                sandwich_ok = false;
            }
            let fs: Vec<f64> = (0..=net.terminal_level())
                .map(|kk| net.f_at(&space, s, t, kk))
                .collect::<chaincert_core::Result<_>>()?;
            let fmin = fs.iter().cloned().fold(f64::MAX, f64::min);
            if (fs[k] - fmin).abs() > 1e-9 * (1.0 + fmin) {
                argmin_ok = false;
            }
            let mut row = vec![
                s.to_string(),
                t.to_string(),
                fmt_f(space.dist(s, t)),
                fmt_f(tau),
                fmt_f(tau_bar),
                k.to_string(),
            ];
            if two {
                let rep = net.two_modulus(&space, s, t)?;
                let d = rep.two.as_ref().unwrap();
                if !(d.k1.min(d.k2) <= rep.k && rep.k <= d.k1.max(d.k2)) {
                    two_ok = false;
                }
                if d.tau1 + d.tau2 > rep.tau_bar * (1.0 + 1e-12) {
                    two_ok = false;
                }
                if rep.tau_bar > (2.0 * (d.tau1 + d.tau2) + d.gus_correction) * (1.0 + 1e-12) {
                    two_ok = false;
                }
                let w = (-(p1 * rep.k as f64)).exp2().max((-(p2 * rep.k as f64)).exp2());
                if d.dbar1 + d.dbar2 > w * rep.tau_bar * (1.0 + 1e-12) {
                    two_ok = false;
                }
                row.extend([
                    rep.k.to_string(),
                    d.k1.to_string(),
                    d.k2.to_string(),
                    fmt_f(d.tau1),
                    fmt_f(d.tau2),
                    fmt_f(rep.tau_bar),
                    fmt_f(d.dbar1),
                    fmt_f(d.dbar2),
                ]);
            }
            rows.push(row);
        }
    }

    let mut report = RunReport::new("modulus", serde_json::to_value(&cfg).unwrap(), hash);
    let header: Vec<&str> = if two {
        vec![
            "s", "t", "dist", "tau", "tau_bar", "k", "k_combined", "k1", "k2", "tau1", "tau2",
            "tau_bar_two", "dbar1", "dbar2",
        ]
    } else {
        vec!["s", "t", "dist", "tau", "tau_bar", "k"]
    };
    let name = write_csv(&opts.out_dir, "modulus.csv", &header, &rows)?;
    report.tables.push(name);
    report.check("sandwich", sandwich_ok, json!({}));
    report.check("k_is_argmin", argmin_ok, json!({}));
    if two {
        report.check("two_distance_bounds", two_ok, json!({}));
    }
    finish(report, opts, t0)
}

fn parse_props(names: &[String], m_levels: &[usize]) -> CliResult<Vec<Proposition>> {
    let mut out = Vec::new();
    for name in names {
        match name.as_str() {
            "p1" => out.extend(m_levels.iter().map(|&m| Proposition::P1 { m })),
            "p2" => out.push(Proposition::P2),
            "p3" => out.extend(m_levels.iter().map(|&m| Proposition::P3 { m })),
            "p4" => out.push(Proposition::P4),
            other => return Err(CliError::Config(format!("unknown proposition {other:?}"))),
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("no propositions requested".into()));
    }
    Ok(out)
}

pub fn cmd_prop_verify(opts: &RunOptions) -> CliResult<()> {
    let t0 = Instant::now();
    let base = config_base(opts)?;
    let (mut cfg, bytes): (PropVerifyConfig, _) = config::load(opts.config_path.as_ref().unwrap())?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let files = match &cfg.model {
        ModelConfig::GaussianCsv { cov } => vec![cov.as_str()],
        _ => vec![],
    };
    let hash = hash_with_files(&bytes, &base, &files)?;
    let model = cfg.model.build(&base)?;
    let geometry = procsim::increment_distance(&model, cfg.seed)?;
    let net = build_net(&geometry.space, geometry.gauges.budget_gauge())?;
    let sampler = PathSampler::new(&model)?;
    let props = parse_props(&cfg.props, &cfg.m_levels)?;

    let mut report = RunReport::new("prop-verify", serde_json::to_value(&cfg).unwrap(), hash);
    report.metric("points", json!(geometry.space.len()));
    report.metric("terminal_level", json!(net.terminal_level()));
    report.metric("scales", json!([jf(geometry.scales.0), jf(geometry.scales.1)]));
    if let GaugeSpec::Two { .. } = geometry.gauges {
        report.metric("calibration_check", jf(geometry.calibration_check));
    }

    let mut worst = vec![0.0f64; props.len()];
    let mut all_pass = vec![true; props.len()];
    for i in 0..cfg.paths as u64 {
        let path = sampler.sample(cfg.seed, i);
        let z = procsim::compute_z(&path, &net, &geometry.space, &geometry.gauges)?;
        for (pi, &prop) in props.iter().enumerate() {
            let mut c = CertificateConstants::defaults(prop, &geometry.gauges, &geometry.space);
            if let Some(o) = &cfg.constants {
                if let Some(a) = o.a {
                    c.a = a;
                }
                if let Some(b) = o.b {
                    c.b = b;
                }
                if let Some(k) = o.k {
                    c.k = k;
                }
                if let Some(p) = o.p {
                    c.p = p;
                }
            }
            let rep = procsim::verify_certificate(
                &path,
                &z,
                &net,
                &geometry.space,
                &geometry.gauges,
                prop,
                c,
            )?;
            if rep.worst_ratio > worst[pi] {
                worst[pi] = rep.worst_ratio;
            }
            if !rep.pass {
                all_pass[pi] = false;
            }
        }
    }
    for (pi, prop) in props.iter().enumerate() {
        let name = match prop {
            Proposition::P1 { m } => format!("p1_m{m}"),
            Proposition::P2 => "p2".into(),
            Proposition::P3 { m } => format!("p3_m{m}"),
            Proposition::P4 => "p4".into(),
        };
        report.check(
            &name,
            all_pass[pi],
            json!({ "worst_ratio": jf(worst[pi]), "paths": cfg.paths }),
        );
    }

    if cfg.z_paths > 0 {
        let (mean, se) = procsim::z_mean_mc(&model, &net, &geometry, cfg.z_paths, cfg.seed)?;
        report.check(
            "ez_le_one",
            mean <= 1.0 + 3.0 * se,
            json!({ "mean": jf(mean), "stderr": jf(se), "paths": cfg.z_paths }),
        );
    }

    if cfg.profile {
        if let ModelConfig::Fbm { h, grid_size } = cfg.model {
            let rows = procsim::fbm_modulus_profile(h, grid_size)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![fmt_f(r.s), fmt_f(r.t), fmt_f(r.dist), fmt_f(r.tau), fmt_f(r.ratio)]
                })
                .collect();
            let name = write_csv(
                &opts.out_dir,
                "profile.csv",
                &["s", "t", "dist", "tau", "ratio"],
                &table,
            )?;
            report.tables.push(name);
            let (mut lo, mut hi) = (f64::MAX, 0.0f64);
            for r in &rows {
                lo = lo.min(r.ratio);
                hi = hi.max(r.ratio);
            }
            report.check(
                "profile_band",
                hi / lo <= 8.0,
                json!({ "min": jf(lo), "max": jf(hi), "band": jf(hi / lo) }),
            );
        } else {
            return Err(CliError::Config("profile tables need an fbm model".into()));
        }
    }
    finish(report, opts, t0)
}

pub fn cmd_empirical(opts: &RunOptions) -> CliResult<()> {
    let t0 = Instant::now();
    let (mut cfg, bytes): (EmpiricalConfig, _) = config::load(opts.config_path.as_ref().unwrap())?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let hash = content_hash(&[&bytes]);
    let calib = Calibration::builtin();
    let mut constants = SquareConstants::from_kc(calib.empsq_k, calib.empsq_c);
    if let Some(o) = &cfg.constants {
        if let (Some(k), Some(c)) = (o.k, o.c) {
            constants = SquareConstants::from_kc(k, c);
        }
        if let Some(a) = o.a {
            constants.a = a;
        }
        if let Some(b) = o.b {
            constants.b = b;
        }
    }
    let class = empsq::FunctionClass::random_unit(
        cfg.dim,
        cfg.class_size,
        calib.alpha_gaussian_phi2,
        cfg.class_seed,
    )?;
    let reports = empsq::verify_thm1(&class, cfg.law, cfg.n, cfg.reps, cfg.seed, constants)?;

    let mut report = RunReport::new("empirical", serde_json::to_value(&cfg).unwrap(), hash);
    let mut rows = Vec::new();
    let mut pass_all = true;
    let mut identity_ok = true;
    let mut cs_ok = true;
    let (mut sz1, mut sz2, mut sz3) = (0.0f64, 0.0f64, 0.0f64);
    let (mut qz1, mut qz2, mut qz3) = (0.0f64, 0.0f64, 0.0f64);
    for (i, r) in reports.iter().enumerate() {
        pass_all &= r.pass;
        sz1 += r.z1;
        sz2 += r.z2;
        sz3 += r.z3;
        qz1 += r.z1 * r.z1;
        qz2 += r.z2 * r.z2;
        qz3 += r.z3 * r.z3;
        let d = &r.decomposition;
        for f in 0..r.per_function.len() {
            let rebuilt = d.p[f] + d.q[f] + d.r[f] - d.e_p[f] - d.e_q[f] - d.e_r[f];
            let scale = r.per_function[f].abs().max(1.0);
            if (rebuilt - r.per_function[f]).abs() > 1e-9 * scale {
                identity_ok = false;
            }
            if d.q[f].abs() > 2.0 * (d.p[f] * d.r[f]).sqrt() + 1e-12 {
                cs_ok = false;
            }
        }
        rows.push(vec![
            i.to_string(),
            fmt_f(r.sup_value),
            fmt_f(r.bound_value),
            fmt_f(r.z1),
            fmt_f(r.z2),
            fmt_f(r.z3),
            fmt_f(r.z),
            fmt_f(r.min_a_if_b_zero),
            fmt_f(r.min_b_if_a_zero),
            (r.pass as u8).to_string(),
        ]);
    }
    let name = write_csv(
        &opts.out_dir,
        "square_process.csv",
        &["rep", "sup_s_n", "bound", "z1", "z2", "z3", "z", "min_a", "min_b", "pass"],
        &rows,
    )?;
    report.tables.push(name);
    let n = cfg.reps as f64;
    let se = |s: f64, q: f64| ((q / n - (s / n) * (s / n)).max(0.0) / n).sqrt();
    report.check("bound_all_reps", pass_all, json!({ "reps": cfg.reps }));
    report.check("pqr_identity", identity_ok, json!({}));
    report.check("cauchy_schwarz", cs_ok, json!({}));
    report.check(
        "ez1_le_one",
        sz1 / n <= 1.0 + 3.0 * se(sz1, qz1),
        json!({ "mean": jf(sz1 / n), "stderr": jf(se(sz1, qz1)) }),
    );
    report.check(
        "ez2_le_one",
        sz2 / n <= 1.0 + 3.0 * se(sz2, qz2),
        json!({ "mean": jf(sz2 / n), "stderr": jf(se(sz2, qz2)) }),
    );
    report.check(
        "ez3_le_one",
        sz3 / n <= 1.0 + 3.0 * se(sz3, qz3),
        json!({ "mean": jf(sz3 / n), "stderr": jf(se(sz3, qz3)) }),
    );
    report.metric("gamma2_upper", jf(class.build_net()?.gamma2_upper()));
    report.metric("alpha", jf(class.alpha()));
    report.metric("constants", json!({ "a": jf(constants.a), "b": jf(constants.b), "k": jf(constants.k), "c": jf(constants.c) }));

    if let Some(tail) = &cfg.tail {
        let grid = tail.u_grid.clone().unwrap_or_else(|| empsq::default_u_grid(tail.d_value));
        let rows_t =
            empsq::bernstein_pair_tail(tail.d_value, cfg.n, cfg.law, tail.trials, cfg.seed, &grid)?;
        let dominated = rows_t.iter().all(|r| r.empirical <= r.bound);
        let table: Vec<Vec<String>> = rows_t
            .iter()
            .map(|r| vec![fmt_f(r.u), fmt_f(r.empirical), fmt_f(r.bound)])
            .collect();
        let name =
            write_csv(&opts.out_dir, "pair_tail.csv", &["u", "empirical", "bound"], &table)?;
        report.tables.push(name);
        report.check("pair_tail_dominated", dominated, json!({ "points": grid.len() }));
    }
    finish(report, opts, t0)
}

fn load_calibration(cfg_path: &Option<String>, base: &Path) -> CliResult<Calibration> {
    match cfg_path {
        None => Ok(Calibration::builtin()),
        Some(p) => Ok(Calibration::load(&base.join(p))?),
    }
}

pub fn cmd_sensing(opts: &RunOptions, cfg: SensingConfig, bytes: Vec<u8>) -> CliResult<()> {
    let t0 = Instant::now();
    let base = opts
        .config_path
        .as_ref()
        .and_then(|p| p.parent().map(|b| b.to_path_buf()))
        .unwrap_or_else(|| std::path::PathBuf::from("."));
    let hash = content_hash(&[&bytes]);
    let calib = load_calibration(&cfg.calibration_file, &base)?;
    let mut report = RunReport::new("sensing", serde_json::to_value(&cfg).unwrap(), hash);

    match cfg.mode.as_str() {
        "delta" => {
            let mut rows = Vec::new();
            let mut lower_ok = true;
            for i in 0..cfg.matrices as u64 {
                let a = sensing::sample_matrix(
                    cfg.n,
                    cfg.m_cols,
                    cfg.ensemble,
                    cfg.seed.wrapping_add(i),
                )?;
                if cfg.export_matrices {
                    let name = format!("matrix_{i}.csv");
                    a.to_csv(&opts.out_dir.join(&name))?;
                    report.tables.push(name);
                }
                let rep = sensing::rip_report(&a, cfg.m, cfg.trials, cfg.seed.wrapping_add(i))?;
                if let Some(ex) = rep.delta_exact {
                    if rep.delta_lower > ex + 1e-12 {
                        lower_ok = false;
                    }
                }
                rows.push(vec![
                    i.to_string(),
                    rep.delta_exact.map(fmt_f).unwrap_or_default(),
                    fmt_f(rep.delta_lower),
                    (rep.threshold_pass as u8).to_string(),
                ]);
            }
            let name = write_csv(
                &opts.out_dir,
                "rip_delta.csv",
                &["matrix", "delta_exact", "delta_lower", "threshold_pass"],
                &rows,
            )?;
            report.tables.push(name);
            report.check("lower_le_exact", lower_ok, json!({ "matrices": cfg.matrices }));
        }
        "tail" => {
            let rep = sensing::rip_tail_check(
                cfg.n,
                cfg.m_cols,
                cfg.m,
                cfg.ensemble,
                cfg.matrices,
                cfg.seed,
                &calib,
            )?;
            let rows: Vec<Vec<String>> =
                rep.deltas.iter().enumerate().map(|(i, d)| vec![i.to_string(), fmt_f(*d)]).collect();
            let name = write_csv(&opts.out_dir, "rip_tail.csv", &["matrix", "delta_2m"], &rows)?;
            report.tables.push(name);
            report.metric("gamma", jf(rep.gamma));
            report.metric("delta_threshold", jf(rep.delta_threshold));
            report.metric("reconstruction_rate", jf(rep.reconstruction_rate));
            report.check(
                "tail_dominated",
                rep.pass,
                json!({ "frequency": jf(rep.exceed_frequency), "bound": jf(rep.tail_bound) }),
            );
        }
        "order_stat" => {
            let mut rows = Vec::new();
            let mut envelope_ok = true;
            for (gi, k) in [1usize, 2, 4, 8].into_iter().enumerate() {
                if k > cfg.m_cols {
                    continue;
                }
                let r = sensing::gaussian_order_stat(
                    k,
                    cfg.m_cols,
                    cfg.trials,
                    cfg.seed.wrapping_add(gi as u64),
                )?;
                if k < cfg.m_cols {
                    let x = k as f64 * (cfg.m_cols as f64 / k as f64).ln();
                    let lo = (calib.order_stat_c1 * x).sqrt();
                    let hi = 2.0
                        * (k as f64 * (calib.order_stat_c0 * cfg.m_cols as f64 / k as f64).ln())
                            .sqrt();
                    if !(lo <= r.estimate && r.estimate <= hi) {
                        envelope_ok = false;
                    }
                }
                rows.push(vec![
                    k.to_string(),
                    cfg.m_cols.to_string(),
                    fmt_f(r.estimate),
                    fmt_f(r.stderr),
                ]);
            }
            let name = write_csv(
                &opts.out_dir,
                "order_stat.csv",
                &["k", "m", "estimate", "stderr"],
                &rows,
            )?;
            report.tables.push(name);
            report.check("envelope", envelope_ok, json!({}));
        }
        other => return Err(CliError::Config(format!("unknown sensing mode {other:?}"))),
    }
    finish(report, opts, t0)
}

pub fn cmd_calibrate(opts: &RunOptions) -> CliResult<()> {
    let t0 = Instant::now();
    let (cfg, bytes): (CalibrateConfig, Vec<u8>) = match &opts.config_path {
        Some(p) => config::load(p)?,
        None => (CalibrateConfig { seed: 90210 }, Vec::new()),
    };
    let seed = opts.seed.unwrap_or(cfg.seed);
    let calib = chaincert_core::calib::run_calibration(seed)?;
    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| CliError::Data(format!("cannot create out dir: {e}")))?;
    calib.save(&opts.out_dir.join("calibration.json"))?;
    let mut report = RunReport::new(
        "calibrate",
        json!({ "seed": seed }),
        content_hash(&[&bytes]),
    );
    report.metric("alpha_gaussian_phi2", jf(calib.alpha_gaussian_phi2));
    report.metric("order_stat_c0", jf(calib.order_stat_c0));
    report.metric("order_stat_c1", jf(calib.order_stat_c1));
    report.metric("rip_k0", jf(calib.rip_k0));
    report.metric("empsq_k", jf(calib.empsq_k));
    report.metric("empsq_c", jf(calib.empsq_c));
    report.tables.push("calibration.json".into());
    report.check("alpha_close_to_exact", (calib.alpha_gaussian_phi2 - chaincert_core::procsim::GAUSSIAN_PHI2_NORM).abs() < 0.02, json!({}));
    finish(report, opts, t0)
}
