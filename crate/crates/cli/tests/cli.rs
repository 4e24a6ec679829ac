use std::path::Path;
use std::process::{Command, Output};

use carnot_cli::{run_suite, CliError, Config};

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.toml");

fn cgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgg")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn smoke_suite_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = cgg(&["--config", CONFIG, "--suite", "smoke", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), 6, "{stdout}");
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("scenario,lhs,rhs,residual,rel_residual,pass,meta\n"));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["outcome"]["scenarios"].as_array().unwrap().len(), 6);
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "seed = 1\n[[scenario]]\nname = \"a\"\nsuites = [\"s\"]\ntolerance = 1e-3\ncheck = { kind = \"group_axioms\", samples = 10, bogus = 1 }\n",
    );
    let o = cgg(&["--config", &cfg, "--suite", "s", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("bogus"), "{}", text(&o.stderr));
}

#[test]
fn invalid_values_name_the_field_path() {
    let cfg = Config::parse(
        r#"
seed = 1
[[scenario]]
name = "ladder"
suites = ["s"]
tolerance = 0.02
[scenario.check]
kind = "half_density"
domain = { name = "half_space", axis = 1, half_width = 1.0 }
eps = [0.1, 0.2]
resolution = 8
pairs = 4
"#,
    )
    .unwrap();
    match cfg.validate() {
        Err(CliError::Invalid(m)) => assert!(m.starts_with("scenario[0] (ladder).check.eps"), "{m}"),
        other => panic!("{other:?}"),
    }
    let o = cgg(&["--config", CONFIG, "--suite", "no_such_suite"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(matches!(run_suite(&cfg, "s"), Err(CliError::Invalid(_))));
}

#[test]
fn failing_scenario_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // a zero tolerance cannot be met by quadrature
    let cfg = write(
        dir.path(),
        "strict.toml",
        "seed = 1\n[[scenario]]\nname = \"strict\"\nsuites = [\"s\"]\ntolerance = 0.0\n[scenario.check]\nkind = \"green_first\"\nu = { name = \"expr\", expr = \"x^2\" }\nv = { name = \"constant\", value = 1.0 }\ndomain = { name = \"euclidean_ball\", r = 1.0 }\nresolution = 8\nvolume = { cells = 8 }\n",
    );
    let o = cgg(&["--config", &cfg, "--suite", "s", "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o.stdout));
    assert!(text(&o.stdout).contains("FAIL strict"));
}

#[test]
fn presets_and_descriptions() {
    let o = cgg(&["--list-presets"]);
    assert_eq!(o.status.code(), Some(0));
    let s = text(&o.stdout);
    for name in ["heisenberg1", "heisenberg2", "engel", "koranyi_ball", "heisenberg_sin_example", "gauss_green"] {
        assert!(s.contains(name), "{name} missing from\n{s}");
    }
    let h = text(&cgg(&["--describe", "heisenberg1"]).stdout);
    assert!(h.contains("Q = 4") && h.contains("X1 = (1,0,-y)") && h.contains("X2 = (0,1,x)"), "{h}");
    let e = text(&cgg(&["--describe", "engel"]).stdout);
    assert!(e.contains("Q = 7") && e.contains("layer_dims = [2, 1, 1]"), "{e}");
    assert_eq!(cgg(&["--describe", "nope"]).status.code(), Some(2));
}

#[test]
fn json_report_reloads_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = cgg(&["--config", CONFIG, "--suite", "smoke", "--seed", "99", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let json = a.join("report.json");
    let reloaded = Config::load(&json).unwrap();
    assert_eq!(reloaded.seed, 99);
    let original = Config::load(Path::new(CONFIG)).unwrap();
    assert_eq!(reloaded.scenarios, original.scenarios);
    let o = cgg(&["--config", json.to_str().unwrap(), "--suite", "smoke", "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(std::fs::read(a.join("report.csv")).unwrap(), std::fs::read(b.join("report.csv")).unwrap());
}

#[test]
fn seeds_follow_names_not_positions() {
    let mut cfg = Config::load(Path::new(CONFIG)).unwrap();
    cfg.scenarios.retain(|s| s.in_suite("smoke"));
    let forward = run_suite(&cfg, "smoke").unwrap();
    cfg.scenarios.reverse();
    let backward = run_suite(&cfg, "smoke").unwrap();
    for f in &forward.scenarios {
        let b = backward.scenarios.iter().find(|b| b.name == f.name).unwrap();
        assert_eq!(f.seed, b.seed);
        let values = |o: &carnot_cli::ScenarioOutcome| o.reports.iter().map(|r| (r.lhs, r.rhs)).collect::<Vec<_>>();
        assert_eq!(values(f), values(b), "{}", f.name);
    }
}
