//! Acceptance gate: one PASS/FAIL line per criterion. Run with
//! `cargo test -p slgfm --test acceptance`.

use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use slgfm::analysis::{build_model, run_nyquist};
use slgfm::config::{apply_param, LawName, Resolved, ScenarioConfig};
use slgfm::core::loops::*;
use slgfm::core::plant::*;
use slgfm::core::poly::*;
use slgfm::core::sim::*;
use slgfm::core::stability::*;
use slgfm::core::Complex64;
use slgfm::spectral::{dominant_frequency, envelope};

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
        self.pass &= ok;
    }
}

fn config(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"));
    ScenarioConfig::load(&path).unwrap()
}

fn resolve(name: &str, law: LawName) -> Resolved {
    config(name).resolve(Some(law), None).unwrap()
}

fn rel(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

/// Upper-half-plane poles above 1000 rad/s, highest frequency first.
fn hf_upper(m: &OlModel) -> Vec<Complex64> {
    let mut hf: Vec<Complex64> = m.ol_poles.iter().copied().filter(|p| p.im > 1000.0).collect();
    hf.sort_by(|a, b| b.im.total_cmp(&a.im));
    hf
}

fn fmt_poles(p: &[Complex64]) -> String {
    p.iter().map(|z| format!("{:.2}{:+.1}j", z.re, z.im)).collect::<Vec<_>>().join(", ")
}

// --- 1 -------------------------------------------------------------------

fn droop_poles() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    // (scenario, T_q, HF imaginary parts, HF real parts)
    let cases = [
        ("reference", 0.051, [5786.6, 5158.3], [-6.8, -6.8]),
        ("high_bandwidth", 0.014, [5786.6, 5158.3], [-6.8, -6.8]),
        ("weak_grid", 0.051, [5173.8, 4545.5], [-3.4, -3.4]),
    ];
    for (name, t_q, ims, res) in cases {
        let r = resolve(name, LawName::Droop);
        assert_eq!(r.cp.t_q, t_q);
        let m = build_model(&r).unwrap();
        let rap = m
            .ol_poles
            .iter()
            .filter(|p| p.im == 0.0)
            .min_by(|a, b| (a.re + 1.0 / t_q).abs().total_cmp(&(b.re + 1.0 / t_q).abs()))
            .unwrap();
        o.check(
            rel(rap.re, -1.0 / t_q) < 0.005,
            format!("{name}: RAP pole {:.3} vs -1/T_q = {:.3}", rap.re, -1.0 / t_q),
        );
        let hf = hf_upper(&m);
        let ok = hf.len() == 2
            && hf.iter().zip(ims).all(|(p, w)| rel(p.im, w) < 0.02)
            && hf.iter().zip(res).all(|(p, w)| p.re < 0.0 && rel(p.re, w) < 0.5);
        o.check(ok, format!("{name}: HF {} vs {res:?} ± j{ims:?}", fmt_poles(&hf)));
    }
    let dt = start.elapsed();
    o.check(dt < Duration::from_secs(1), format!("runtime {dt:.2?}"));
    o
}

// --- 2 -------------------------------------------------------------------

fn droop_i_poles() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let cases = [
        ("reference", false, [5786.3, 5158.6]),
        ("high_bandwidth", true, [5785.3, 5159.9]),
        ("weak_grid", true, [5173.4, 4545.9]),
    ];
    for (name, unstable, ims) in cases {
        let m = build_model(&resolve(name, LawName::DroopI)).unwrap();
        let hf = hf_upper(&m);
        let signs = hf.len() == 2 && hf.iter().all(|p| (p.re > 0.0) == unstable) && m.p_count == if unstable { 4 } else { 0 };
        let freqs = hf.iter().zip(ims).all(|(p, w)| rel(p.im, w) < 0.02);
        o.check(
            signs && freqs,
            format!("{name}: HF {} ({}), P = {}", fmt_poles(&hf), if unstable { "RHP" } else { "LHP" }, m.p_count),
        );
        if name == "reference" {
            let lf = m
                .ol_poles
                .iter()
                .filter(|p| p.im == 0.0)
                .min_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap();
            o.check(rel(lf.re, -19.6) < 0.05, format!("{name}: LF pole {:.3} vs -19.6", lf.re));
        }
    }
    let dt = start.elapsed();
    o.check(dt < Duration::from_secs(1), format!("runtime {dt:.2?}"));
    o
}

// --- 3 -------------------------------------------------------------------

fn sign_changes(col: &[RouthEntry]) -> usize {
    col.windows(2).filter(|w| w[0].sign() * w[1].sign() < 0).count()
}

fn rhp_roots(p: &Polynomial) -> usize {
    roots(p, DEFAULT_ROOT_TOL).unwrap().iter().filter(|z| z.re > 0.0).count()
}

fn routh_structure() -> Outcome {
    let mut o = Outcome::new();
    let r = resolve("lossless", LawName::DroopI);
    let op = solve_operating_point(&r.pp, &r.cp).unwrap();
    let cc = char_coeffs_lossless(&r.pp, &op, r.cp.d_q, r.cp.k_pq, r.cp.k_iq);
    let p = cc.polynomial();
    let rep = routh(&p).unwrap();
    let col = &rep.first_column;
    let head = col[2].limit == EpsLimit::NegInf && col[3].sign() > 0 && col[1].limit == EpsLimit::ZeroPos && col[0].sign() > 0;
    o.check(
        head && sign_changes(&col[..4]) == 2,
        format!(
            "reference lossless, k_iq = {}: column 1, {:?}, {:?}, {:?} -> 2 sign changes through a2 = {:.4e}",
            r.cp.k_iq, col[1].limit, col[2].limit, col[3].limit, cc.a2
        ),
    );
    o.check(
        rep.rhp_count == rhp_roots(&p),
        format!("full array: {} sign changes, root finder: {} RHP roots", rep.rhp_count, rhp_roots(&p)),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (mut draws, mut bad) = (0, 0);
    while draws < 100 {
        let Ok(pp) = PlantParams::new(rng.gen_range(0.03..0.3), rng.gen_range(0.01..0.2), rng.gen_range(0.05..1.0)) else {
            continue;
        };
        let cp = ControlParams {
            d_q: rng.gen_range(1.0..40.0),
            k_iq: rng.gen_range(0.05..30.0),
            k_pq: 0.0,
            ..ControlParams::reference(ControlLaw::DroopI)
        };
        let Ok(op) = solve_operating_point(&pp, &cp) else { continue };
        if !(op.v_d > 0.0) {
            continue;
        }
        let p = char_coeffs_lossless(&pp, &op, cp.d_q, 0.0, cp.k_iq).polynomial();
        let rep = routh(&p).unwrap();
        let structural = rep.first_column[2].limit == EpsLimit::NegInf && rep.first_column[3].sign() > 0;
        if !(structural && rep.rhp_count >= 2 && rhp_roots(&p) >= 2) {
            bad += 1;
        }
        draws += 1;
    }
    o.check(bad == 0, format!("{draws} random lossless draws, {bad} without the unstable pair"));
    o
}

// --- 4 -------------------------------------------------------------------

/// `(scenario, law, ad, open-loop RHP poles expected)`.
const REFERENCE_CONFIGS: [(&str, LawName, Option<AdKind>, bool); 12] = [
    ("reference", LawName::Droop, None, false),
    ("reference", LawName::DroopI, None, false),
    ("high_bandwidth", LawName::Droop, None, false),
    ("high_bandwidth", LawName::DroopI, None, true),
    ("weak_grid", LawName::Droop, None, false),
    ("weak_grid", LawName::DroopI, None, true),
    ("worst_case", LawName::Droop, Some(AdKind::InverterCurrent), false),
    ("worst_case", LawName::DroopI, Some(AdKind::InverterCurrent), true),
    ("worst_case", LawName::Droop, Some(AdKind::GridCurrent), false),
    ("worst_case", LawName::DroopI, Some(AdKind::GridCurrent), true),
    ("worst_case", LawName::Droop, Some(AdKind::CapVoltage), false),
    ("worst_case", LawName::DroopI, Some(AdKind::CapVoltage), true),
];

fn reference_resolved(name: &str, law: LawName, ad: Option<AdKind>) -> Resolved {
    let mut r = resolve(name, law);
    r.ad = ad.map(AdController::reference);
    r
}

fn nyquist_consistency() -> Outcome {
    let mut o = Outcome::new();
    for (name, law, ad, rhp) in REFERENCE_CONFIGS {
        let r = reference_resolved(name, law, ad);
        let m = build_model(&r).unwrap();
        let (_, v) = run_nyquist(&r, &m).unwrap();
        let z = closed_loop_rhp(&m).unwrap() as i64;
        let ok = v.n == 0 && v.stable == !rhp && (m.p_count > 0) == rhp && v.z == z;
        o.check(
            ok,
            format!("{name}/{law:?}/{ad:?}: N = {}, P = {}, Z = {}, CL RHP = {z}, stable = {}", v.n, v.p, v.z, v.stable),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut mismatches = 0;
    let (mut stable, mut unstable) = (0, 0);
    for _ in 0..50 {
        let law = if rng.gen_bool(0.5) { LawName::Droop } else { LawName::DroopI };
        let mut r = resolve("reference", law);
        r.pp = r.pp.clone().with_l_g(rng.gen_range(0.1..0.7)).unwrap();
        r.cp.d_q = rng.gen_range(3.0..30.0);
        r.cp.t_q = rng.gen_range(0.005..0.1);
        r.cp.k_iq = rng.gen_range(0.5..15.0);
        r.ad = match rng.gen_range(0..4) {
            0 => None,
            k => {
                let base = AdController::reference([AdKind::InverterCurrent, AdKind::GridCurrent, AdKind::CapVoltage][k - 1]);
                Some(base.with_gain(base.gain * rng.gen_range(0.2..2.0)))
            }
        };
        let m = build_model(&r).unwrap();
        let (_, v) = run_nyquist(&r, &m).unwrap();
        let z = closed_loop_rhp(&m).unwrap() as i64;

        mismatches += (v.z != z) as usize;
        if z == 0 {
            stable += 1;
        } else {
            unstable += 1;
        }
    }
    o.check(
        mismatches == 0,
        format!("50-point random grid ({stable} stable, {unstable} unstable): {mismatches} Z mismatches"),
    );
    o
}

// --- 5 -------------------------------------------------------------------

fn damped_poles() -> Outcome {
    let mut o = Outcome::new();
    let cases = [
        (AdKind::InverterCurrent, [-22.5, -22.5], [5171.0, 4546.6]),
        (AdKind::GridCurrent, [-22.1, -22.1], [5169.8, 4545.3]),
        (AdKind::CapVoltage, [-23.0, -21.0], [5180.0, 4554.0]),
    ];
    for (kind, droop_re, droop_i_im) in cases {
        let m = build_model(&reference_resolved("worst_case", LawName::Droop, Some(kind))).unwrap();
        let hf = hf_upper(&m);
        let ok = m.p_count == 0 && hf.len() == 2 && hf.iter().zip(droop_re).all(|(p, w)| p.re < 0.0 && rel(p.re, w) < 0.5);
        o.check(ok, format!("{kind:?} droop: {} vs re {droop_re:?}", fmt_poles(&hf)));

        let m = build_model(&reference_resolved("worst_case", LawName::DroopI, Some(kind))).unwrap();
        let hf = hf_upper(&m);
        let ok = m.p_count == 2
            && hf.len() == 2
            && hf[0].re < 0.0
            && hf[1].re > 0.0
            && hf.iter().zip(droop_i_im).all(|(p, w)| rel(p.im, w) < 0.02);
        o.check(ok, format!("{kind:?} droop-I: {} vs j{droop_i_im:?}, P = {}", fmt_poles(&hf), m.p_count));
    }
    o
}

// --- 6 and 7 ---------------------------------------------------------------

struct Run {
    trace: SimTrace,
    window: Option<(f64, f64)>,
    event: Option<f64>,
    elapsed: Duration,
    resolved: Resolved,
}

fn simulate_config(name: &str, law: LawName) -> Run {
    let cfg = config(name);
    let resolved = cfg.resolve(Some(law), None).unwrap();
    let (sc, fft) = cfg.sim_scenario(&resolved).unwrap();
    let start = Instant::now();
    let trace = simulate(&sc).unwrap();
    Run {
        elapsed: start.elapsed(),
        window: fft.map(|w| (w.t_start, w.t_end)),
        event: sc.events.last().map(|e| e.t),
        trace,
        resolved,
    }
}

/// Largest `|q - q(0)|` after `t_from`.
fn max_dq(tr: &SimTrace, t_from: f64) -> f64 {
    let q = tr.get(Signal::Q).unwrap();
    tr.window(t_from, f64::INFINITY).map(|k| (q[k] - q[0]).abs()).fold(0.0, f64::max)
}

const AD_STEPS: [(&str, f64); 3] = [("ad_inv_step", 8e-5), ("ad_grid_step", 2e-4), ("ad_cap_step", 9e-6)];

fn time_domain_frequencies() -> Outcome {
    let mut o = Outcome::new();
    // The 15 s weak-grid run is timed on its own.
    let wg = simulate_config("weak_grid_step", LawName::DroopI);
    o.check(wg.elapsed < Duration::from_secs(60), format!("15 s weak-grid run took {:.2?}", wg.elapsed));

    let mut jobs: Vec<(&str, LawName, f64)> = vec![("kiq_step", LawName::DroopI, 830.0), ("tq_step", LawName::Droop, 0.0)];
    jobs.push(("weak_grid_step", LawName::Droop, 0.0));
    for (name, _) in AD_STEPS {
        jobs.push((name, LawName::DroopI, 710.0));
        jobs.push((name, LawName::Droop, 0.0));
    }
    let runs: Vec<Run> = jobs.par_iter().map(|(name, law, _)| simulate_config(name, *law)).collect();

    let mut freq_checks = vec![("weak_grid_step", 710.0, &wg)];
    for ((name, _, f), run) in jobs.iter().zip(&runs) {
        if *f > 0.0 {
            freq_checks.push((name, *f, run));
        }
    }
    for (name, want, run) in freq_checks {
        let rep = dominant_frequency(&run.trace, Signal::Q, run.window.unwrap()).unwrap();
        o.check(
            rel(rep.dominant_freq, want) < 0.05 && run.trace.diverged_at.is_none(),
            format!(
                "{name} droop-I: {:.1} Hz vs {want} Hz, growth {:.2}/s",
                rep.dominant_freq, rep.growth_rate
            ),
        );
    }
    for ((name, law, f), run) in jobs.iter().zip(&runs) {
        if *f == 0.0 {
            let after = run.event.map_or(0.5, |t| t + 0.5);
            let dq = max_dq(&run.trace, after);
            o.check(
                dq < 0.1 && run.trace.diverged_at.is_none(),
                format!("{name} {law:?}: max |dq| = {dq:.2e} p.u. after t = {after} s"),
            );
        }
    }
    o
}

fn ad_suppression() -> Outcome {
    let mut o = Outcome::new();
    let runs: Vec<(&str, f64, Run)> =
        AD_STEPS.par_iter().map(|&(name, gain)| (name, gain, simulate_config(name, LawName::DroopI))).collect();
    for (name, gain, run) in runs {
        let before = run.resolved.clone();
        let mut after = run.resolved.clone();
        apply_param(&mut after, ParamPath::AdGain, gain).unwrap();
        let stable = |r: &Resolved| {
            let m = build_model(r).unwrap();
            run_nyquist(r, &m).unwrap().1.stable
        };
        let (s0, s1) = (stable(&before), stable(&after));
        o.check(!s0 && s1, format!("{name}: verdict stable {s0} -> {s1} at gain {gain:e}"));

        let t_ev = run.event.unwrap();
        let t_end = *run.trace.t.last().unwrap();
        let f0 = dominant_frequency(&run.trace, Signal::Q, run.window.unwrap()).unwrap().dominant_freq;
        let (t, env) = envelope(&run.trace, Signal::Q, (t_ev - 1.5, t_end), f0).unwrap();
        // Ignore the outer 0.3 s where the band-pass rings.
        let inner = |a: f64, b: f64| t.iter().zip(&env).filter(move |(tk, _)| **tk >= a && **tk <= b);
        let peak = inner(t_ev - 1.2, t_ev + 0.5).map(|(_, e)| *e).fold(0.0, f64::max);
        let settled = inner(t_ev, t_end - 0.3)
            .filter(|(_, e)| **e >= 0.01 * peak)
            .map(|(tk, _)| *tk)
            .fold(t_ev, f64::max);
        o.check(
            settled - t_ev <= 2.0 && peak > 0.0,
            format!("{name}: envelope below 1% of peak ({peak:.2e}) {:.2} s after the step", settled - t_ev),
        );
    }
    o
}

// --- 8 -------------------------------------------------------------------

fn oracle_suites() -> Outcome {
    let mut o = Outcome::new();

    // Routh against roots of random polynomials with known roots.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut checked, mut wrong) = (0, 0);
    while checked < 1000 {
        let n = rng.gen_range(1..=10);
        let mut r = Vec::new();
        while r.len() < n {
            let mag = 10f64.powf(rng.gen_range(-1.0..2.0));
            let re = mag * rng.gen_range(0.01..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            if r.len() + 2 <= n && rng.gen_bool(0.6) {
                let im = mag * rng.gen_range(0.1..3.0);
                r.extend([Complex64::new(re, im), Complex64::new(re, -im)]);
            } else {
                r.push(Complex64::new(re, 0.0));
            }
        }
        let p = Polynomial::from_roots(&r, 1.0);
        let found = roots(&p, DEFAULT_ROOT_TOL).unwrap();
        if found.iter().any(|z| z.re.abs() <= 1e-6 * z.norm().max(1.0)) {
            continue;
        }
        let want = r.iter().filter(|z| z.re > 0.0).count();
        wrong += (routh(&p).unwrap().rhp_count != want) as usize;
        checked += 1;
    }
    o.check(wrong == 0, format!("Routh vs roots: {wrong}/{checked} mismatches"));

    // State space to rational against a direct complex solve.
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let n = rng.gen_range(1..=8);
        let scale = 10f64.powf(rng.gen_range(-1.0..3.0));
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0) * scale);
        let b = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
        let c = DMatrix::from_fn(3, n, |_, _| rng.gen_range(-1.0..1.0));
        let d = DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-0.1..0.1));
        let m = StateSpaceModel::new(a, b, c, d).unwrap();
        let tm = ss_to_rational(&m).unwrap();
        let s = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0)) * scale;
        let direct = m.frequency_response(s).unwrap();
        let norm = direct.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        for i in 0..3 {
            for j in 0..2 {
                worst = worst.max((tm.entry(i, j).eval(s).unwrap() - direct[(i, j)]).norm() / norm);
            }
        }
    }
    o.check(worst < 1e-8, format!("ss_to_rational vs direct solve: worst relative error {worst:.1e}"));

    // Closed-form lossless coefficients against the numeric factor.
    let pp = PlantParams::reference().lossless();
    let mut worst: f64 = 0.0;
    for k_iq in [2.99, 10.97] {
        let cp = ControlParams {
            k_iq,
            ..ControlParams::reference(ControlLaw::DroopI)
        };
        let lp = linearize(&pp, &solve_operating_point(&pp, &cp).unwrap()).unwrap();
        let (q, _) = droopi_char_factor(&lp, cp.d_q, 0.0, k_iq).div_rem(&lp.det_a).unwrap();
        let q = q.scale(1.0 / q.leading());
        let cc = char_coeffs_lossless(&pp, &lp.op, cp.d_q, 0.0, k_iq);
        for (k, want) in [(3, cc.a3), (2, cc.a2), (1, cc.a1), (0, cc.a0)] {
            worst = worst.max(rel(q.coeff(k), want));
        }
    }
    o.check(worst < 1e-9, format!("lossless a3..a0 vs numeric factor: worst relative error {worst:.1e}"));

    // RK4 convergence order and step halving.
    let kicked = |dt: f64, t_end: f64| {
        let mut sc = SimScenario::new(PlantParams::reference(), ControlParams::reference(ControlLaw::DroopI), t_end);
        sc.dt = dt;
        sc.perturbation = vec![(StateVar::Vd, 1e-3), (StateVar::Omega, 1e-4)];
        final_state(&sc).unwrap()
    };
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let reference = kicked(2.5e-6, 0.02);
    let ratio = diff(&kicked(4e-5, 0.02), &reference) / diff(&kicked(2e-5, 0.02), &reference);
    let halving = diff(&kicked(5e-6, 0.05), &kicked(2.5e-6, 0.05));
    o.check(
        (12.0..=20.0).contains(&ratio) && halving < 1e-6,
        format!("RK4 error ratio on halving {ratio:.1} (16 expected); default-step change {halving:.1e}"),
    );

    // Linearized against nonlinear response to a small kick.
    let (dt, kick) = (5e-6, 1e-4);
    let mut worst: f64 = 0.0;
    for law in [ControlLaw::Droop, ControlLaw::DroopI] {
        let (pp, cp) = (PlantParams::reference(), ControlParams::reference(law));
        let mut sc = SimScenario::new(pp.clone(), cp.clone(), 0.1);
        sc.record = vec![Signal::Q];
        sc.perturbation = vec![(StateVar::Vd, kick)];
        let tr = simulate(&sc).unwrap();
        let op = solve_operating_point(&pp, &cp).unwrap();
        let lp = linearize(&pp, &op).unwrap();
        let a = full_state_matrix(&lp, &cp).unwrap();
        let c_q = DVector::from_vec(lp.output_row(OUT_Q));
        let mut x = DVector::zeros(a.nrows());
        x[V_D] = kick;
        let (mut e2, mut s2) = (0.0, 0.0);
        for &q in tr.get(Signal::Q).unwrap() {
            let d = c_q.dot(&x.rows(0, c_q.len()));
            e2 += (q - op.q - d).powi(2);
            s2 += d * d;
            let k1 = &a * &x;
            let k2 = &a * (&x + &k1 * (0.5 * dt));
            let k3 = &a * (&x + &k2 * (0.5 * dt));
            let k4 = &a * (&x + &k3 * dt);
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        worst = worst.max((e2 / s2).sqrt());
    }
    o.check(worst < 0.02, format!("linear vs nonlinear small-signal q: RMS error {:.3}%", 100.0 * worst));
    o
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("open-loop poles, droop", droop_poles),
        ("open-loop poles, droop-I", droop_i_poles),
        ("Routh structural instability", routh_structure),
        ("Nyquist/verdict consistency", nyquist_consistency),
        ("open-loop poles with active damping", damped_poles),
        ("time-domain frequencies", time_domain_frequencies),
        ("active-damping suppression", ad_suppression),
        ("oracle suites", oracle_suites),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        println!(
            "{} [{}] {title} ({:.1?})",
            if out.pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed()
        );
        for l in &out.lines {
            println!("       {l}");
        }
        failed += !out.pass as usize;
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
