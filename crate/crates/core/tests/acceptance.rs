//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines always show up in `cargo test` output.

mod common;

use std::path::Path;
use std::time::Instant;

use evtrack::bounds::{certificate_delta, delta_bound, feasibility_report, feasibility_threshold, BoundRadii};
use evtrack::cli::compare;
use evtrack::config::{case1_config, case2_config, ScenarioConfig};
use evtrack::lyapunov::{lyapunov_residual, ultimate_bound, BetaConvention, LevelSetSpec, LyapunovCertificate};
use evtrack::sim::{self, scan_invariants, Metrics};
use evtrack::systems::stack_xi;
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn metrics_text(m: &Metrics) -> String {
    format!(
        "updates {}, min gap {:?} s, {:.2} Hz total, {:?} Hz transient, bound {:.5}",
        m.total_updates, m.min_inter_exec, m.avg_freq_total, m.avg_freq_transient, m.ultimate_bound_observed
    )
}

fn case1_reproduction() -> Outcome {
    let loaded = case1_config().build().unwrap();
    let start = Instant::now();
    let out = sim::run(&loaded.scenario);
    let wall = start.elapsed().as_secs_f64();
    let Ok(out) = out else {
        return outcome(false, format!("run failed: {:?}", out.err()));
    };
    let m = &out.metrics;
    let pass = wall <= 30.0
        && m.ultimate_bound_observed <= 0.1
        && within(m.total_updates as f64, 150.0, 600.0)
        && m.min_inter_exec.is_some_and(|t| within(t, 0.001, 0.02))
        && within(m.avg_freq_total, 15.0, 60.0)
        && m.avg_freq_transient.is_some_and(|f| within(f, 20.0, 90.0));
    outcome(pass, format!("{}; wall {wall:.2} s", metrics_text(m)))
}

fn constant_l_ablation() -> Outcome {
    let loaded = case1_config().build().unwrap();
    match compare(&loaded.scenario) {
        Ok(c) => outcome(
            c.frequency_ratio >= 5.0 && c.frozen.ultimate_bound_observed <= 0.1,
            format!(
                "varying {:.2} Hz, frozen {:.2} Hz, ratio {:.2}x, frozen bound {:.5}",
                c.varying.avg_freq_total, c.frozen.avg_freq_total, c.frequency_ratio, c.frozen.ultimate_bound_observed
            ),
        ),
        Err(e) => outcome(false, format!("compare failed: {e}")),
    }
}

fn case2_reproduction() -> Outcome {
    let loaded = case2_config().build().unwrap();
    match sim::run(&loaded.scenario) {
        Ok(out) => {
            let m = &out.metrics;
            let pass = within(m.total_updates as f64, 150.0, 600.0)
                && m.min_inter_exec.is_some_and(|t| within(t, 0.001, 0.02));
            outcome(pass, metrics_text(m))
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn shipped_scenarios() -> Vec<std::path::PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

fn bound_soundness() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for path in shipped_scenarios() {
        let loaded = ScenarioConfig::load(&path).unwrap().build().unwrap();
        let s = &loaded.scenario;
        let observed = match sim::run(s) {
            Ok(out) => out.metrics.min_inter_exec,
            Err(e) => {
                pass = false;
                notes.push(format!("{}: run failed: {e}", s.name));
                continue;
            }
        };
        pass &= observed.is_some_and(|t| t > 0.0);
        let radii = BoundRadii::for_scenario(s, loaded.r0).unwrap();
        for rep in feasibility_report(s, radii, &loaded.constants).unwrap() {
            match rep.t_lower {
                Some(t) => {
                    let sound = t > 0.0 && observed.is_some_and(|o| t <= o);
                    let bracket = match (s.name.as_str(), rep.theorem_id) {
                        ("case1", 1) | ("case2", 3) => within(t, 1e-9, 1e-6),
                        _ => true,
                    };
                    pass &= sound && bracket;
                    notes.push(format!("{} theorem {}: {t:.3e} s <= {:?}", s.name, rep.theorem_id, observed));
                }
                None => notes.push(format!("{} theorem {}: infeasible", s.name, rep.theorem_id)),
            }
        }
    }
    // the two reproduction scenarios must each have produced a bound
    let feasible = notes.iter().filter(|n| n.starts_with("case1 theorem 1:") || n.starts_with("case2 theorem 3:")).count();
    outcome(pass && feasible == 2, notes.join("; "))
}

fn feasibility_threshold_check() -> Outcome {
    let loaded = case2_config().build().unwrap();
    let radii = BoundRadii::for_scenario(&loaded.scenario, None).unwrap();
    match feasibility_threshold(&loaded.scenario, radii) {
        Ok(Some(r)) => outcome((r - 0.00744).abs() <= 1e-4, format!("r* = {r:.6}")),
        other => outcome(false, format!("{other:?}")),
    }
}

fn parameter_derivations() -> Outcome {
    let sp = common::spring();
    let h = DMatrix::identity(2, 2);
    let cert = sp.certificate(&h, BetaConvention::AbsorbInput).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[1.025, 0.025, 0.025, 0.025]);
    let residual = lyapunov_residual(cert.p(), &sp.a_tilde(), &h);
    let gap = (cert.p() - &expected).amax();
    let r1 = ultimate_bound(0.0154, cert.alpha1(), cert.alpha2()).unwrap();
    outcome(
        residual <= 1e-9 && gap <= 1e-9 && (r1 - 0.1).abs() <= 1e-3,
        format!("residual {residual:.1e}, max |P - P_expected| {gap:.1e}, r1 = {r1:.6}"),
    )
}

fn property_suites() -> Outcome {
    let mut checks: Vec<(&str, bool)> = Vec::new();
    let (c1, out1) = common::case1();
    let (c2, out2) = common::case2();
    let s1 = &c1.scenario;

    // Lipschitz inequality for the control law on S(R)
    let sp = common::spring();
    let cert = sp.certificate(&DMatrix::identity(2, 2), BetaConvention::AbsorbInput).unwrap();
    let model = sp.model().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let radius = 4.43;
    let l = s1.provider.at(radius);
    let region = LevelSetSpec::new(radius, 2.5);
    let mu = cert.level_radius(radius);
    let mut lip_ok = true;
    let mut pairs = 0;
    while pairs < 10_000 {
        let mut draw = || stack_xi(&common::ball(&mut rng, 2, mu), &common::ball(&mut rng, 2, 2.5), &common::ball(&mut rng, 1, 2.5));
        let (a, b) = (draw(), draw());
        if !(region.contains(&cert, &a) && region.contains(&cert, &b)) {
            continue;
        }
        pairs += 1;
        lip_ok &= (model.control(&a) - model.control(&b)).norm() <= l.dot(&(&a - &b).abs()) * (1.0 + 1e-12) + 1e-12;
    }
    checks.push(("lipschitz", lip_ok));

    let logs = [(c1, out1), (c2, out2)];
    checks.push((
        "ledger non-increase",
        logs.iter().all(|(_, o)| {
            o.events.events.windows(2).all(|w| w[1].l.iter().zip(w[0].l.iter()).all(|(a, b)| a <= b))
        }),
    ));
    checks.push((
        "no event inside r",
        logs.iter().all(|(c, o)| o.events.events.iter().all(|ev| ev.x_tilde.norm() >= c.scenario.params.r())),
    ));
    checks.push((
        "e = 0 at events",
        logs.iter().all(|(c, o)| {
            o.events.events.iter().all(|ev| {
                let k = (ev.t / c.scenario.sim.dt).round() as usize;
                o.trajectory.records[k].e.amax() == 0.0
            })
        }),
    ));
    checks.push((
        "lyapunov decrease",
        logs.iter().all(|(c, o)| {
            let s = &c.scenario;
            scan_invariants(&o.trajectory, s.params.sigma(), s.params.r(), s.sim.dt, s.certificate.as_ref()).is_empty()
        }),
    ));
    let t0 = out1.events.events[0].t;
    let cap = s1.certificate.alpha2().evaluate(out1.events.events[0].x_tilde.norm());
    checks.push((
        "sublevel invariance",
        out1.trajectory.records.iter().filter(|r| r.t >= t0).all(|r| r.value <= cap * (1.0 + 1e-9)),
    ));

    let mut delta_ok = true;
    for _ in 0..20 {
        let s_lo = rng.random_range(0.01..1.0);
        let s_hi = s_lo + rng.random_range(0.0..10.0);
        let sigma = rng.random_range(0.1..0.99);
        let amp = rng.random_range(0.0..0.8);
        let w = rng.random_range(0.5..5.0);
        let beta = move |s: f64| 0.07 * s * (1.0 + amp * (w * s).sin());
        let alpha3 = |s: f64| s * s;
        let got = delta_bound(s_lo, s_hi, sigma, alpha3, beta).unwrap();
        let n = 1_000_000;
        let oracle = (0..=n)
            .map(|i| s_lo + (s_hi - s_lo) * i as f64 / n as f64)
            .map(|s| sigma * alpha3(s) / beta(s))
            .fold(f64::INFINITY, f64::min);
        delta_ok &= ((got - oracle) / oracle).abs() <= 1e-9;
    }
    let spring_delta = certificate_delta(&cert, 0.95, 0.0154, 28.7).unwrap();
    delta_ok &= (spring_delta - 0.95 * 0.0154 / cert.beta_slope()).abs() <= 1e-12;
    checks.push(("delta oracle", delta_ok));

    let (local, global) = common::rk4_orders();
    checks.push(("rk4 order", local >= 4.5));

    let again = sim::run(s1).unwrap();
    checks.push((
        "determinism",
        again.trajectory == out1.trajectory && again.events == out1.events && again.metrics == out1.metrics,
    ));

    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    outcome(
        failed.is_empty(),
        format!(
            "{} suites, failed: {:?}; rk4 one-step order {local:.2}, global order {global:.2}",
            checks.len(),
            failed
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("case I reproduction", case1_reproduction),
        ("constant-L ablation", constant_l_ablation),
        ("case II reproduction", case2_reproduction),
        ("analytic bound soundness", bound_soundness),
        ("feasibility threshold", feasibility_threshold_check),
        ("parameter derivations", parameter_derivations),
        ("property suites", property_suites),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {name}: {}", i + 1, o.detail);
        failures += usize::from(!o.pass);
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
