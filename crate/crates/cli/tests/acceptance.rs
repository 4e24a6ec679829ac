//! Acceptance criteria, one PASS/FAIL line each. Thresholds are restated here so that
//! editing the shipped configuration cannot loosen them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use carnot::algebra::heisenberg1;
use carnot::gaussgreen::GaussGreenReport;
use carnot::rng::stream_rng;
use carnot_cli::{run_suite, Config, ScenarioOutcome};
use rand::Rng;

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.toml");

struct Run {
    outcomes: HashMap<String, ScenarioOutcome>,
    wall: Duration,
}

impl Run {
    fn get(&self, name: &str) -> &ScenarioOutcome {
        &self.outcomes[name]
    }

    fn reports(&self, name: &str) -> &[GaussGreenReport] {
        &self.get(name).reports
    }
}

fn run(names: &[&str]) -> Run {
    let mut cfg = Config::load(Path::new(CONFIG)).expect("shipped config loads");
    cfg.scenarios.retain(|s| names.contains(&s.name.as_str()));
    assert_eq!(cfg.scenarios.len(), names.len(), "missing shipped scenario among {names:?}");
    for s in &mut cfg.scenarios {
        s.suites = vec!["acceptance".into()];
    }
    let start = Instant::now();
    let suite = run_suite(&cfg, "acceptance").expect("suite runs");
    let wall = start.elapsed();
    Run { outcomes: suite.scenarios.into_iter().map(|o| (o.name.clone(), o)).collect(), wall }
}

#[derive(Default)]
struct Verdict {
    failures: Vec<String>,
}

impl Verdict {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    fn scenarios_pass(&mut self, r: &Run, names: &[&str]) {
        for n in names {
            let o = r.get(n);
            self.check(o.pass(), || format!("{n} failed: {:?} {:?}", o.error, o.reports.iter().filter(|r| !r.pass).collect::<Vec<_>>()));
        }
    }

    fn within(&mut self, r: &Run, limit: Duration) {
        self.check(r.wall < limit, || format!("took {:?}, limit {limit:?}", r.wall));
    }
}

fn meta_f64(r: &GaussGreenReport, key: &str) -> f64 {
    r.meta_get(key).and_then(|v| v.parse().ok()).unwrap_or_else(|| panic!("{} lacks numeric meta {key}", r.scenario))
}

fn meta_is(r: &GaussGreenReport, key: &str, value: &str) -> bool {
    r.meta_get(key) == Some(value)
}

fn c1_group_axioms() -> Verdict {
    let names = ["axioms_h1", "axioms_h2", "axioms_engel"];
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    v.within(&r, Duration::from_secs(1));
    for n in names {
        v.check(r.reports(n).len() == 3, || format!("{n}: expected associativity, identity, inverse"));
        for rep in r.reports(n) {
            v.check(rep.residual < 1e-12 && meta_is(rep, "samples", "1000"), || format!("{n}: {rep:?}"));
        }
    }
    // closed-form H^1 law: z'' = z + z' + x y' − y x'
    let a = heisenberg1::<f64>();
    let mut rng = stream_rng(1, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let m = a.mul(&p, &q);
        let exact = [p[0] + q[0], p[1] + q[1], p[2] + q[2] + p[0] * q[1] - p[1] * q[0]];
        worst = worst.max(m.iter().zip(exact).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    v.check(worst < 1e-12, || format!("H^1 product differs from the closed form by {worst:e}"));
    v
}

fn c2_dilation() -> Verdict {
    let names = ["dilation_h1", "dilation_engel"];
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    v.within(&r, Duration::from_secs(10));
    for (n, q) in [("dilation_h1", 4), ("dilation_engel", 7)] {
        for rep in r.reports(n) {
            if rep.scenario.starts_with("haar_scaling") {
                let se = meta_f64(rep, "std_error");
                v.check(rep.rhs == 2f64.powi(q), || format!("{n}: reference {} is not 2^{q}", rep.rhs));
                v.check((rep.lhs - 2f64.powi(q)).abs() <= 3.0 * se, || format!("{n}: ratio {} ± {se}", rep.lhs));
                v.check(meta_is(rep, "samples", "1000000"), || format!("{n}: {rep:?}"));
            } else {
                v.check(rep.residual < 1e-12, || format!("{n}: {rep:?}"));
            }
        }
    }
    v
}

fn c3_frame() -> Verdict {
    let names = ["frame_h1", "frame_engel"];
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    for n in names {
        for rep in r.reports(n) {
            let limit = if rep.scenario.starts_with("frame_rows") { 0.0 } else { 1e-6 };
            v.check(rep.rel_residual <= limit, || format!("{n}: {rep:?}"));
        }
    }
    let a = heisenberg1::<f64>();
    let mut rng = stream_rng(3, 0);
    for _ in 0..100 {
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
        let f = a.frame_coefficients(&p);
        v.check(f.row(0) == [1.0, 0.0, -p[1]] && f.row(1) == [0.0, 1.0, p[0]], || format!("frame rows at {p:?}"));
    }
    v
}

fn c4_commutation() -> Verdict {
    let names = ["commutation_z", "commutation_bump"];
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    v.within(&r, Duration::from_secs(60));
    for n in names {
        let rep = &r.reports(n)[0];
        v.check(rep.residual < 1e-3, || format!("{n}: residual {:e}", rep.residual));
        v.check(meta_is(rep, "decreasing", "true"), || format!("{n}: residual does not decrease under grid doubling"));
    }
    // ρ_ε ∗ z is z up to odd moments, so both sides equal X_1 z(p) = −y(p) = 0.2
    let z = &r.reports("commutation_z")[0];
    v.check((z.lhs - 0.2).abs() < 1e-3 && (z.rhs - 0.2).abs() < 1e-3, || format!("commutation_z sides {} {}", z.lhs, z.rhs));
    v
}

fn c5_pointwise() -> Verdict {
    let names = ["pointwise_abs", "pointwise_gauge", "pointwise_hinge"];
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    // Lipschitz fields: the right-ball average tends to f(p)
    let exact = [("pointwise_abs", 0.0), ("pointwise_gauge", 0.2f64.sqrt()), ("pointwise_hinge", 0.5 * (0.0 + 0.0) + 0.5 * 0.2)];
    for (n, fp) in exact {
        let rep = &r.reports(n)[0];
        let errors: Vec<f64> = rep.terms.iter().filter(|(k, _)| k.starts_with("error[")).map(|(_, e)| *e).collect();
        v.check(errors.len() == 4, || format!("{n}: ladder has {} levels", errors.len()));
        v.check(errors.windows(2).all(|w| w[1] < w[0]), || format!("{n}: errors {errors:?}"));
        v.check(errors.last().is_some_and(|&e| e < 1e-2), || format!("{n}: final error {errors:?}"));
        v.check((rep.rhs - fp).abs() < 1e-3, || format!("{n}: reference {} vs f(p) = {fp}", rep.rhs));
        v.check((rep.lhs - fp).abs() < 1e-2 + 1e-3, || format!("{n}: final value {} vs f(p) = {fp}", rep.lhs));
    }
    v
}

fn c6_half_density() -> Verdict {
    let names = ["half_density_ball", "half_density_half_space", "half_density_pole"];
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    v.within(&r, Duration::from_secs(300));
    for n in ["half_density_ball", "half_density_pole"] {
        let reps = r.reports(n);
        let eps: Vec<f64> = reps.iter().map(|x| meta_f64(x, "eps")).collect();
        v.check(eps == [0.2, 0.1, 0.05], || format!("{n}: ladder {eps:?}"));
        let dev: Vec<f64> = reps.iter().map(|x| (x.lhs - 0.5).abs()).collect();
        v.check(dev[2] <= 0.02, || format!("{n}: |A(ε_min) − 1/2| = {}", dev[2]));
        v.check(dev.windows(2).all(|w| w[1] <= 1.2 * w[0]), || format!("{n}: deviations {dev:?}"));
    }
    for rep in r.reports("half_density_half_space") {
        let se = meta_f64(rep, "std_error");
        v.check((rep.lhs - 0.5).abs() <= 3.0 * se + 1e-12, || format!("half-space control {} ± {se}", rep.lhs));
    }
    v
}

fn c7_gauss_green() -> Verdict {
    let free = ["gg_x1_ball", "gg_x2_ball", "gg_sin_example"];
    let pairing = ["divergence_free_sin", "divergence_free_x1"];
    let names = [&free[..], &pairing[..], &["gg_x1x1_ball", "gg_koranyi_poly"]].concat();
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    v.within(&r, Duration::from_secs(300));
    for n in free {
        let rep = &r.reports(n)[0];
        v.check(rep.lhs == 0.0 && rep.rhs.abs() < 1e-3, || format!("{n}: {rep:?}"));
    }
    for n in pairing {
        for rep in r.reports(n) {
            v.check(rep.lhs.abs() < 1e-3, || format!("{n}: {rep:?}"));
        }
    }
    // div(x_1 X_1) = 1, so the volume side is |B(0,1)| = 4π/3
    let x1 = r.reports("gg_x1x1_ball");
    let (coarse, fine) = (&x1[0], &x1[1]);
    v.check(meta_is(fine, "boundary", "auto96") && meta_is(fine, "volume", "grid96x2"), || format!("fine level is not 96³: {fine:?}"));
    v.check(fine.rel_residual < 1e-2, || format!("x1X1: {fine:?}"));
    v.check(fine.rel_residual <= coarse.rel_residual, || {
        format!("x1X1 does not improve: {} -> {}", coarse.rel_residual, fine.rel_residual)
    });
    v.check((fine.lhs - 4.0 * PI / 3.0).abs() < 1e-2 * 4.0 * PI / 3.0, || format!("x1X1 volume side {}", fine.lhs));
    // div F = 1 + z − xy + 2y integrates to the Korányi volume π²/8 by symmetry
    let k = r.reports("gg_koranyi_poly");
    for rep in k {
        v.check(rep.rel_residual < 1e-2, || format!("Korányi: {rep:?}"));
    }
    let kv = PI * PI / 8.0;
    v.check((k[1].lhs - kv).abs() < 1e-2 * kv && (k[1].rhs - kv).abs() < 1e-2 * kv, || {
        format!("Korányi sides {:?} vs {kv}", (k[1].lhs, k[1].rhs))
    });
    v
}

fn c8_green() -> Verdict {
    let pairs = ["green_first_ball", "green_first_harmonic", "green_swap_box", "green_second_ball"];
    let names = [&pairs[..], &["green_second_same"]].concat();
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    for n in pairs {
        for rep in r.reports(n) {
            v.check(rep.rel_residual < 1e-2, || format!("{n}: {rep:?}"));
        }
    }
    // Δ_H x² = 2 on the unit ball
    let b = &r.reports("green_first_ball")[0];
    v.check((b.lhs - 8.0 * PI / 3.0).abs() < 1e-2 * 8.0 * PI / 3.0, || format!("∫ Δ_H x² = {} vs 8π/3", b.lhs));
    let same = &r.reports("green_second_same")[0];
    v.check(same.lhs == 0.0 && same.rhs == 0.0 && same.residual == 0.0, || format!("u = v: {same:?}"));
    v
}

fn c9_traces() -> Verdict {
    let names = ["trace_bound_ball", "locality_same", "locality_opposite", "locality_tangent"];
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    let b = &r.reports("trace_bound_ball")[0];
    v.check(meta_is(b, "violations", "0") && b.lhs <= b.rhs * (1.0 + 1e-10), || format!("trace bound: {b:?}"));
    for (n, orientation) in [("locality_same", "same"), ("locality_opposite", "opposite")] {
        let rep = &r.reports(n)[0];
        v.check(rep.residual == 0.0 && meta_is(rep, "orientation", orientation), || format!("{n}: {rep:?}"));
    }
    v
}

/// h-perimeter of the sphere of radius `r` in H^1 by a midpoint rule in spherical angles.
fn sphere_h_perimeter(r: f64) -> f64 {
    let (nt, np) = (800, 1600);
    let (dt, dp) = (PI / nt as f64, 2.0 * PI / np as f64);
    let mut total = 0.0;
    for i in 0..nt {
        let t = (i as f64 + 0.5) * dt;
        for j in 0..np {
            let p = (j as f64 + 0.5) * dp;
            let n = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
            let (x, y) = (r * n[0], r * n[1]);
            let density = ((n[0] - y * n[2]).powi(2) + (n[1] + x * n[2]).powi(2)).sqrt();
            total += density * r * r * t.sin() * dt * dp;
        }
    }
    total
}

fn c10_total_variation() -> Verdict {
    let names = ["total_variation_half_space", "total_variation_ball"];
    let r = run(&names);
    let mut v = Verdict::default();
    v.scenarios_pass(&r, &names);
    let perimeter = [("total_variation_half_space", 4.0), ("total_variation_ball", sphere_h_perimeter(0.7))];
    for (n, p) in perimeter {
        let reps = r.reports(n);
        v.check(reps.len() == 3, || format!("{n}: {} ε values", reps.len()));
        for rep in reps {
            v.check(rep.lhs <= rep.rhs * 1.05, || format!("{n}: {rep:?}"));
            v.check((rep.rhs - p).abs() < 1e-3 * p, || format!("{n}: perimeter {} vs {p}", rep.rhs));
        }
    }
    v
}

fn c11_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let csv = |sub: &str, threads: &str| {
        let out = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_cgg"))
            .args(["--config", CONFIG, "--suite", "full", "--seed", "7", "--threads", threads, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        (status.status.code(), std::fs::read(out.join("report.csv")).unwrap_or_default())
    };
    let (c1, a) = csv("a", "1");
    let (c2, b) = csv("b", "2");
    let mut v = Verdict::default();
    v.check(c1 == Some(0) && c2 == Some(0), || format!("exit codes {c1:?} {c2:?}"));
    v.check(!a.is_empty() && a == b, || format!("CSV differs ({} vs {} bytes)", a.len(), b.len()));
    v
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 group axioms", c1_group_axioms),
        ("2 dilation laws and Haar scaling", c2_dilation),
        ("3 frame correctness", c3_frame),
        ("4 mollifier commutation", c4_commutation),
        ("5 right-average pointwise limit", c5_pointwise),
        ("6 half-density limit", c6_half_density),
        ("7 Gauss-Green", c7_gauss_green),
        ("8 Green identities", c8_green),
        ("9 trace bound and locality", c9_traces),
        ("10 total-variation bound", c10_total_variation),
        ("11 determinism", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (name, criterion) in criteria {
        let start = Instant::now();
        let v = criterion();
        let status = if v.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{status} criterion {name} ({:.1} s)", start.elapsed().as_secs_f64());
        for f in &v.failures {
            println!("     {f}");
        }
        if !v.failures.is_empty() {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
