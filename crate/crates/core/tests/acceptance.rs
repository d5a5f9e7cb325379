//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness). Exit status is 0 unless
//! `ACCEPTANCE_STRICT=1` is set and at least one line failed.

use esboot::bootstrap::{self, BootstrapContext};
use esboot::es_estimation::{analytic_nu_alpha, asymptotic_interval, conditional_es, empirical_quantile, gamma_hat, mu_hat, tail_count};
use esboot::experiments::{
    classify, density_comparison, high_persistence, low_persistence, run_study, IntervalKind, Outcome, Scenario,
    StudySummary,
};
use esboot::kde::ks_one_sample;
use esboot::special::norm_cdf;
use esboot::{qmle, rng, GarchParams, InitScheme, InnovationDist, QmleOptions, VolatilityModel};
use rand::Rng;
use std::time::Instant;

const COVERAGE_TOL_PP: f64 = 3.0;
const LENGTH_TOL: f64 = 0.10;
const ORACLE_TOL: f64 = 1e-8;

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn line(&mut self, id: &'static str, pass: bool, what: &str) {
        println!("{} {id:<4} {what}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn t6() -> InnovationDist {
    InnovationDist::student_t(6.0).unwrap()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn rel_within(x: f64, target: f64, tol: f64) -> bool {
    (x / target - 1.0).abs() <= tol
}

fn study(sc: &Scenario) -> (StudySummary, Vec<esboot::TrajectoryRecord>, f64) {
    let start = Instant::now();
    let s = run_study(sc, 0).expect("study runs");
    (s.summary, s.records, start.elapsed().as_secs_f64())
}

fn stats(s: &StudySummary, k: IntervalKind) -> &esboot::experiments::IntervalStats {
    s.get(k).expect("interval kind present")
}

fn coverage_and_lengths(r: &mut Report) {
    let sc = Scenario::desk(high_persistence(), t6(), 0.05, 500, 0.10);
    let (s, records, secs) = study(&sc);
    let (ep, rt, sy) = (stats(&s, IntervalKind::Ep), stats(&s, IntervalKind::Rt), stats(&s, IntervalKind::Sy));
    r.line(
        "c1",
        within(ep.coverage_pct, 84.35, COVERAGE_TOL_PP) && within(rt.coverage_pct, 86.00, COVERAGE_TOL_PP),
        &format!(
            "coverage t6 high n=500 S=B=500 seed 0: EP {:.2} (84.35 ± 3.0), RT {:.2} (86.00 ± 3.0), SY {:.2}; excluded {}; {secs:.0}s",
            ep.coverage_pct, rt.coverage_pct, sy.coverage_pct, s.excluded
        ),
    );
    println!(
        "     direction: EP below {:.1} above {:.1}; RT below {:.1} above {:.1}",
        ep.below_pct, ep.above_pct, rt.below_pct, rt.above_pct
    );
    let same = records
        .iter()
        .filter_map(|t| t.intervals.as_ref())
        .all(|iv| iv.ep.length == iv.rt.length);
    r.line(
        "c2",
        rel_within(ep.avg_length, 0.825, LENGTH_TOL)
            && rel_within(rt.avg_length, 0.825, LENGTH_TOL)
            && rel_within(sy.avg_length, 0.833, LENGTH_TOL)
            && same
            && ep.avg_length == rt.avg_length,
        &format!(
            "lengths same run: EP {:.4} RT {:.4} (0.825 ± 10%), SY {:.4} (0.833 ± 10%), EP == RT per trajectory: {same}",
            ep.avg_length, rt.avg_length, sy.avg_length
        ),
    );
}

fn gaussian_contrast(r: &mut Report) {
    let sc = Scenario::desk(high_persistence(), InnovationDist::normal(), 0.05, 500, 0.10);
    let (s, _, secs) = study(&sc);
    let (ep, rt) = (stats(&s, IntervalKind::Ep), stats(&s, IntervalKind::Rt));
    r.line(
        "c3",
        within(ep.coverage_pct, 86.30, COVERAGE_TOL_PP)
            && rel_within(ep.avg_length, 0.549, LENGTH_TOL)
            && rel_within(rt.avg_length, 0.549, LENGTH_TOL),
        &format!(
            "normal high n=500: EP coverage {:.2} (86.30 ± 3.0), EP/RT length {:.4}/{:.4} (0.549 ± 10%); {secs:.0}s",
            ep.coverage_pct, ep.avg_length, rt.avg_length
        ),
    );
}

fn extreme_level(r: &mut Report) {
    let sc = Scenario::desk(low_persistence(), t6(), 0.01, 500, 0.10);
    let (s, _, secs) = study(&sc);
    let (ep, rt) = (stats(&s, IntervalKind::Ep), stats(&s, IntervalKind::Rt));
    r.line(
        "c4",
        ep.coverage_pct < 80.0 && rt.below_pct < 2.0,
        &format!(
            "t6 low α=0.01 n=500: EP coverage {:.2} (< 80), RT below-rate {:.2} (< 2); {secs:.0}s",
            ep.coverage_pct, rt.below_pct
        ),
    );
}

fn oracle_equivalence(r: &mut Report) {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for dist in [InnovationDist::normal(), t6()] {
        for alpha in [0.01, 0.05] {
            let a = dist.tail_quantities_closed(alpha).unwrap();
            let b = dist.tail_quantities_numeric(alpha).unwrap();
            for (x, y) in [(a.xi, b.xi), (a.mu, b.mu), (a.p, b.p), (a.q, b.q), (a.kappa, b.kappa)] {
                worst = worst.max((x - y).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(
        "c5",
        worst < ORACLE_TOL && secs < 1.0,
        &format!("closed form vs quadrature, both laws, α ∈ {{0.01, 0.05}}: max |diff| {worst:.2e} (< 1e-8) in {secs:.3}s (< 1)"),
    );
}

fn plug_in_consistency(r: &mut Report) {
    let start = Instant::now();
    let path = high_persistence().simulate(&t6(), 1_000_000, 1000, &mut rng::stream(0, rng::tag::SIMULATE, 0)).unwrap();
    let fit = qmle::fit(&path.returns, &QmleOptions::default()).unwrap();
    let g = gamma_hat(&fit, 0.05).unwrap();
    let nu = analytic_nu_alpha(&t6().tail_quantities_closed(0.05).unwrap());
    let secs = start.elapsed().as_secs_f64();
    r.line(
        "c6",
        rel_within(g.nu_alpha_hat, nu, 0.05) && within(g.kappa_hat, 6.0, 0.15) && secs <= 120.0,
        &format!(
            "n=1e6 t6 high: ν̂ {:.4} vs {nu:.4} (± 5%), κ̂ {:.4} (6 ± 0.15); {secs:.1}s (≤ 120)",
            g.nu_alpha_hat, g.kappa_hat
        ),
    );
}

fn bootstrap_normality(r: &mut Report) {
    let start = Instant::now();
    let n = 5000;
    let path = high_persistence().simulate(&t6(), n, 1000, &mut rng::stream(0, rng::tag::SIMULATE, 0)).unwrap();
    let fit = qmle::fit(&path.returns, &QmleOptions::default()).unwrap();
    let g = gamma_hat(&fit, 0.05).unwrap();
    let mu = conditional_es(&fit, 0.05).unwrap().mu_hat;
    let theta = fit.theta_hat.to_array();
    let ctx = BootstrapContext::new(&path.returns, fit, 0.05, QmleOptions::default()).unwrap();
    let reps = bootstrap::run(&ctx, 2000, 0, 0).unwrap();
    let rn = (n as f64).sqrt();
    let d: Vec<f64> = reps.iter().map(|b| rn * (b.mu_star - mu)).collect();
    let sd = g.nu_alpha_hat.sqrt();
    let ks = ks_one_sample(&d, |x| norm_cdf(x / sd));

    let dev: Vec<[f64; 3]> = reps
        .iter()
        .map(|b| {
            let t = b.theta_star.to_array();
            std::array::from_fn(|k| rn * (t[k] - theta[k]))
        })
        .collect();
    let m = dev.len() as f64;
    let mean: [f64; 3] = std::array::from_fn(|k| dev.iter().map(|x| x[k]).sum::<f64>() / m);
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let emp = dev.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (m - 1.0);
            worst = worst.max((emp / g.gamma[i][j] - 1.0).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(
        "c7",
        ks < 0.05 && worst <= 0.20,
        &format!(
            "n=5000 B=2000: KS(√n(μ*−μ̂), N(0, ν̂)) {ks:.4} (< 0.05), θ* covariance worst relative error {worst:.3} (≤ 0.20); {secs:.0}s"
        ),
    );
}

fn structural_invariants(r: &mut Report) {
    let start = Instant::now();
    let mut rng = rng::stream(0, rng::tag::SIMULATE, 99);
    let mut fails = Vec::new();

    let mut tail_ok = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..400);
        let values: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { rng.random_range(-5i32..5) as f64 } else { rng.random_range(-3.0..3.0) })
            .collect();
        let alpha = rng.random_range(0.001..0.6);
        let k = tail_count(n, alpha);
        if k > n {
            tail_ok += 1;
            continue;
        }
        let q = empirical_quantile(&values, alpha).unwrap();
        let m = mu_hat(&values, alpha).unwrap();
        if q.tail.len() == (alpha * n as f64 + 1e-9).floor() as usize + 1
            && m.tail_count == k
            && q.tail.iter().all(|&i| values[i] <= q.xi)
            && values.iter().filter(|&&v| v < q.xi).count() < k
        {
            tail_ok += 1;
        }
    }
    if tail_ok != 1000 {
        fails.push("tail count");
    }

    let random_params = |rng: &mut rng::RngStream| loop {
        let (o, a, b) = (rng.random_range(0.01..2.0), rng.random_range(0.0..0.4), rng.random_range(0.0..0.9));
        if a + b < 0.99 {
            return GarchParams::new(o, a, b).unwrap();
        }
    };
    let mut worst_scale = 0.0f64;
    let mut worst_fd = 0.0f64;
    for i in 0..100u64 {
        let theta = random_params(&mut rng);
        let lambda: f64 = rng.random_range(0.05..20.0);
        let eps = theta.simulate(&t6(), 300, 100, &mut rng::stream(1, rng::tag::SIMULATE, i)).unwrap().returns;
        let a = theta.filter(&eps, InitScheme::Presample).unwrap();
        let b = theta.scale_params(lambda).unwrap().filter(&eps, InitScheme::Presample).unwrap();
        for (x, y) in a.sigma2.iter().zip(&b.sigma2) {
            worst_scale = worst_scale.max((lambda * lambda * x - y).abs() / y);
        }

        let base = theta.to_array();
        for k in 0..3 {
            let h = 1e-5 * base[k].abs().max(1e-2);
            if base[k] < h {
                continue;
            }
            let shifted = |s: f64| {
                let mut v = base;
                v[k] += s;
                GarchParams::from_array(v).unwrap().filter(&eps, InitScheme::Presample).unwrap().sigma2
            };
            let (up, down) = (shifted(h), shifted(-h));
            for t in 0..a.sigma2.len() {
                let fd = (up[t] - down[t]) / (2.0 * h);
                let an = a.dsigma2[t][k];
                worst_fd = worst_fd.max((fd - an).abs() / (an.abs() + 1e-6 * a.sigma2[t]));
            }
        }
    }
    if worst_scale > 1e-13 {
        fails.push("scaling");
    }
    if worst_fd >= 1e-5 {
        fails.push("derivatives");
    }

    let mut partition_ok = true;
    for _ in 0..1000 {
        let lo: f64 = rng.random_range(-5.0..5.0);
        let hi = lo + rng.random_range(0.0..3.0);
        let truth: f64 = rng.random_range(-10.0..10.0);
        let o = classify(lo, hi, truth);
        partition_ok &= (o == Outcome::Inside) == (lo <= truth && truth <= hi);
    }
    let tiny = Scenario { s: 8, b: 100, ..Scenario::desk(high_persistence(), t6(), 0.05, 300, 0.10) };
    let s1 = run_study(&tiny, 1).unwrap();
    let s3 = run_study(&tiny, 3).unwrap();
    for k in IntervalKind::BOOTSTRAP {
        let st = s1.summary.get(k).unwrap();
        partition_ok &= (st.coverage_pct + st.below_pct + st.above_pct - 100.0).abs() < 1e-9;
    }
    if !partition_ok {
        fails.push("partition");
    }
    let deterministic = s1.records == s3.records;
    if !deterministic {
        fails.push("determinism");
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(
        "c8",
        fails.is_empty() && secs < 60.0,
        &format!(
            "invariants: tail count {tail_ok}/1000, scaling worst {worst_scale:.1e}, derivative worst {worst_fd:.1e}, \
             partition {partition_ok}, workers 1 vs 3 identical {deterministic}; {secs:.1}s (< 60)"
        ),
    );
}

fn density_shape(r: &mut Report) {
    let start = Instant::now();
    let sc = Scenario::desk(high_persistence(), t6(), 0.05, 5000, 0.10);
    let d = density_comparison(&sc, 512).unwrap();
    let (a, b) = (&d.simulated_curve, &d.bootstrap_curve);
    let unimodal = a.local_maxima() == 1 && b.local_maxima() == 1;
    let modes = [a.mode(), b.mode()];
    let centred = modes.iter().all(|m| (-0.5..=0.5).contains(m));
    let secs = start.elapsed().as_secs_f64();
    r.line(
        "c9",
        unimodal && centred && d.ks < 0.10,
        &format!(
            "density S=B=500 n=5000: unimodal {unimodal} (local maxima {}/{}), modes {:.3}/{:.3} (in [-0.5, 0.5]), KS {:.4} (< 0.10); {secs:.0}s",
            a.local_maxima(), b.local_maxima(), modes[0], modes[1], d.ks
        ),
    );
}

fn asymptotic_band(r: &mut Report) {
    let sc = Scenario { b: 0, ..Scenario::desk(high_persistence(), t6(), 0.05, 5000, 0.10) };
    let (s, _, secs) = study(&sc);
    let asy = s.asymptotic.expect("asymptotic interval computed");
    r.line(
        "i1",
        (86.0..=93.0).contains(&asy.coverage_pct),
        &format!("delta-method interval coverage t6 high n=5000 S=500: {:.2} (in [86, 93]); {secs:.0}s", asy.coverage_pct),
    );
}

fn gamma_stability(r: &mut Report) {
    let path = high_persistence().simulate(&t6(), 200_000, 1000, &mut rng::stream(0, rng::tag::SIMULATE, 0)).unwrap();
    let g = |n: usize| gamma_hat(&qmle::fit(&path.returns[..n], &QmleOptions::default()).unwrap(), 0.05).unwrap();
    let (a, b) = (g(100_000), g(200_000));
    let mut worst = (0.0f64, 0, 0);
    for i in 0..4 {
        for j in 0..4 {
            let rel = (a.gamma[i][j] - b.gamma[i][j]).abs() / b.gamma[i][j].abs();
            if rel > worst.0 {
                worst = (rel, i, j);
            }
        }
    }
    r.line(
        "i2",
        worst.0 < 0.03,
        &format!("Γ̂ entries n=1e5 vs 2e5 paired: worst relative change {:.3} at ({},{}) (< 0.03)", worst.0, worst.1, worst.2),
    );
}

fn asymptotic_smoke(r: &mut Report) {
    let path = high_persistence().simulate(&t6(), 2000, 1000, &mut rng::stream(0, rng::tag::SIMULATE, 0)).unwrap();
    let fit = qmle::fit(&path.returns, &QmleOptions::default()).unwrap();
    let es = conditional_es(&fit, 0.05).unwrap();
    let g = gamma_hat(&fit, 0.05).unwrap();
    let iv = asymptotic_interval(&fit, &es, &g, 0.10).unwrap();
    r.line("i3", iv.lo < es.es_hat && es.es_hat < iv.hi, &format!("delta-method interval brackets ÊS: [{:.4}, {:.4}] ∋ {:.4}", iv.lo, iv.hi, es.es_hat));
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    oracle_equivalence(&mut r);
    structural_invariants(&mut r);
    asymptotic_smoke(&mut r);
    plug_in_consistency(&mut r);
    bootstrap_normality(&mut r);
    density_shape(&mut r);
    gamma_stability(&mut r);
    asymptotic_band(&mut r);
    coverage_and_lengths(&mut r);
    gaussian_contrast(&mut r);
    extreme_level(&mut r);
    if r.failed.is_empty() {
        println!("acceptance: all lines pass");
    } else {
        println!("acceptance: failing lines {:?}", r.failed);
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
