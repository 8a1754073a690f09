use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use slgfm::csvio::{read_nyquist, read_poles, PoleKind};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn slgfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slgfm")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = slgfm(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_body(stdout: &str) -> String {
    stdout.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

/// `(scenario, law, ad)` for the three reference grids under both laws and the
/// three damping designs at the worst case.
const REFERENCE_CASES: [(&str, &str, &str); 12] = [
    ("reference", "droop", "none"),
    ("reference", "droop-i", "none"),
    ("high_bandwidth", "droop", "none"),
    ("high_bandwidth", "droop-i", "none"),
    ("weak_grid", "droop", "none"),
    ("weak_grid", "droop-i", "none"),
    ("worst_case", "droop", "inv-current"),
    ("worst_case", "droop-i", "inv-current"),
    ("worst_case", "droop", "grid-current"),
    ("worst_case", "droop-i", "grid-current"),
    ("worst_case", "droop", "cap-voltage"),
    ("worst_case", "droop-i", "cap-voltage"),
];

/// Same rows, labels and flags; poles to 1e-9 of their modulus. Bytes are not
/// compared: the last ulp depends on whether the math routines come from
/// `std` or `libm`, which Cargo feature unification decides per build.
fn assert_same_table(got: &str, want: &str, what: &str) {
    assert_eq!(
        got.lines().filter(|l| l.starts_with('#')).collect::<Vec<_>>(),
        want.lines().filter(|l| l.starts_with('#')).collect::<Vec<_>>(),
        "{what}: report lines differ"
    );
    let got = read_poles(csv_body(got).as_bytes()).unwrap();
    let want = read_poles(csv_body(want).as_bytes()).unwrap();
    assert_eq!(got.len(), want.len(), "{what}: row count");
    for (a, b) in got.iter().zip(&want) {
        assert_eq!((&a.label, a.kind, a.rhp), (&b.label, b.kind, b.rhp), "{what}");
        // Near-double poles move by about sqrt(ulp), hence the loose bound.
        let (pa, pb) = (a.pole(), b.pole());
        assert!((pa - pb).norm() <= 1e-9 * pa.norm().max(1.0), "{what}: {pa} vs {pb}");
    }
}

/// Pole tables are byte-stable across runs and match checked-in copies. Set
/// `SLGFM_BLESS=1` to regenerate them.
#[test]
fn pole_tables_match_golden_files() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden");
    let bless = std::env::var_os("SLGFM_BLESS").is_some();
    for (name, law, ad) in REFERENCE_CASES {
        let cfg = scenario(name);
        let args = ["poles", "--config", cfg.to_str().unwrap(), "--law", law, "--ad", ad];
        let first = run_ok(&args);
        assert_eq!(first, run_ok(&args), "{name}/{law}/{ad} is not deterministic");
        let golden = dir.join(format!("{name}_{law}_{ad}.csv"));
        if bless {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&golden, &first).unwrap();
        } else {
            let want = std::fs::read_to_string(&golden).unwrap_or_else(|e| panic!("{}: {e}", golden.display()));
            assert_same_table(&first, &want, &format!("{name}/{law}/{ad} vs {}", golden.display()));
        }
    }
}

#[test]
fn high_bandwidth_droop_i_flags_both_pairs() {
    let cfg = scenario("high_bandwidth");
    let out = run_ok(&["poles", "--config", cfg.to_str().unwrap(), "--law", "droop-i"]);
    let rows = read_poles(csv_body(&out).as_bytes()).unwrap();
    let rhp_ol: Vec<_> = rows.iter().filter(|r| r.kind == PoleKind::Ol && r.rhp).collect();
    assert_eq!(rhp_ol.len(), 4);
    assert!(rhp_ol.iter().all(|r| r.im.abs() > 5000.0));
}

#[test]
fn out_directory_receives_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("reference");
    let out = slgfm(&["nyquist", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = std::fs::read_to_string(dir.path().join("nyquist.txt")).unwrap();
    assert!(report.contains("stable = true"), "{report}");
    let csv = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "csv"))
        .unwrap();
    let samples = read_nyquist(std::fs::File::open(csv).unwrap()).unwrap();
    assert!(samples.len() >= 1000);
    assert!(samples.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn hz_flag_rescales_frequencies() {
    let cfg = scenario("reference");
    let rad = read_poles(csv_body(&run_ok(&["poles", "--config", cfg.to_str().unwrap()])).as_bytes()).unwrap();
    let hz = read_poles(csv_body(&run_ok(&["poles", "--config", cfg.to_str().unwrap(), "--hz"])).as_bytes()).unwrap();
    assert_eq!(rad.len(), hz.len());
    let k = 2.0 * std::f64::consts::PI;
    for (a, b) in rad.iter().zip(&hz) {
        assert!((a.im / k - b.im).abs() <= 1e-9 * a.im.abs().max(1.0));
        assert!((a.re / k - b.re).abs() <= 1e-9 * a.re.abs().max(1.0));
    }
}

#[test]
fn sweep_rows_follow_sweep_order() {
    let cfg = scenario("kiq_sweep");
    let out = run_ok(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out, run_ok(&["sweep", "--config", cfg.to_str().unwrap()]));
    let body = csv_body(&out);
    let idx: Vec<usize> = body.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(idx.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*idx.last().unwrap(), 11);
    let verdicts: Vec<bool> = out
        .lines()
        .filter(|l| l.starts_with("# index"))
        .map(|l| l.contains("stable = true"))
        .collect();
    assert_eq!(verdicts.len(), 12);
    // Stable at 1..3, unstable from 4 on: the crossing lies in (2.99, 10.97).
    assert!(verdicts[..3].iter().all(|&s| s));
    assert!(verdicts[3..].iter().all(|&s| !s));
}

#[test]
fn weak_grid_sweep_turns_unstable() {
    let cfg = scenario("lg_sweep");
    let out = run_ok(&["sweep", "--config", cfg.to_str().unwrap()]);
    let last = out.lines().rfind(|l| l.starts_with("# index")).unwrap();
    assert!(last.contains("value = 0.5") && last.contains("stable = false"), "{last}");
}

#[test]
fn lossless_nyquist_is_a_numerical_failure() {
    let cfg = scenario("lossless");
    for cmd in ["verdict", "nyquist", "margins"] {
        let out = slgfm(&[cmd, "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(3), "{cmd}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("R_g"), "{cmd}: {err}");
    }
    // Pole tables and Routh arrays do not need the contour.
    run_ok(&["routh", "--config", cfg.to_str().unwrap(), "--law", "droop-i"]);
}

#[test]
fn invalid_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let reference = std::fs::read_to_string(scenario("reference")).unwrap();
    let unknown_key = write("unknown.json", &reference.replacen("\"h\"", "\"inertia\": 1, \"h\"", 1));
    let syntax = write("syntax.json", &reference.replacen('}', "", 1));
    let both_plants = write(
        "both.json",
        &reference.replacen(
            "\"plant\": {",
            "\"plant\": { \"per_unit\": {\"s_n\": 5e6, \"v_n\": 690, \"f_n\": 50, \"l_f\": 0.1, \"c_f\": 0.05, \"l_g\": 0.2},",
            1,
        ),
    );
    let mut no_kiq: serde_json::Value = serde_json::from_str(&reference).unwrap();
    no_kiq["control"].as_object_mut().unwrap().remove("k_iq");
    let no_kiq = write("no_kiq.json", &no_kiq.to_string());
    let mut empty_sweep: serde_json::Value = serde_json::from_str(&reference).unwrap();
    empty_sweep["sweep"] = serde_json::json!({"parameter": "control.k_iq", "values": []});
    let empty_sweep = write("empty_sweep.json", &empty_sweep.to_string());
    let missing = dir.path().join("missing.json");

    let cases: [(&[&str], &Path); 7] = [
        (&["poles"], &unknown_key),
        (&["poles"], &syntax),
        (&["poles"], &both_plants),
        (&["poles", "--law", "droop-i"], &no_kiq),
        (&["sweep"], &empty_sweep),
        (&["simulate"], &scenario("reference")),
        (&["poles"], &missing),
    ];
    for (args, cfg) in cases {
        let mut full = args.to_vec();
        full.extend(["--config", cfg.to_str().unwrap()]);
        let out = slgfm(&full);
        assert_eq!(out.status.code(), Some(2), "{full:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    let syntax_err = String::from_utf8(slgfm(&["poles", "--config", syntax.to_str().unwrap()]).stderr).unwrap();
    assert!(syntax_err.contains("line"), "{syntax_err}");
    assert_eq!(slgfm(&["poles"]).status.code(), Some(2));
    assert_eq!(slgfm(&["bogus"]).status.code(), Some(2));
    assert_eq!(slgfm(&["--help"]).status.code(), Some(0));
}
