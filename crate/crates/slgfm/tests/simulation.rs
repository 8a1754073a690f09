use std::path::Path;

use slgfm::analysis::{build_model, run_nyquist};
use slgfm::config::{apply_param, LawName, ScenarioConfig};
use slgfm::core::sim::{simulate, Signal};
use slgfm::core::stability::closed_loop_poles;
use slgfm::spectral::dominant_frequency;

fn config(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))).unwrap()
}

/// The post-event oscillation of an unstable run has the frequency and
/// growth of the fastest-growing closed-loop pole of the post-event model.
#[test]
fn unstable_runs_follow_the_predicted_pole() {
    for (name, law) in [("kiq_step", LawName::DroopI), ("ad_grid_step", LawName::DroopI)] {
        let cfg = config(name);
        let r = cfg.resolve(Some(law), None).unwrap();
        let (sc, fft) = cfg.sim_scenario(&r).unwrap();
        let fft = fft.unwrap();

        // Analyse the configuration in force over the FFT window.
        let mut post = r.clone();
        for e in sc.events.iter().filter(|e| e.t <= fft.t_start) {
            apply_param(&mut post, e.target, e.value).unwrap();
        }
        let m = build_model(&post).unwrap();
        assert!(!run_nyquist(&post, &m).unwrap().1.stable, "{name}");
        let pole = closed_loop_poles(&m)
            .unwrap()
            .into_iter()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .unwrap();

        let tr = simulate(&sc).unwrap();
        let rep = dominant_frequency(&tr, Signal::Q, (fft.t_start, fft.t_end)).unwrap();
        let f_pole = pole.im.abs() / (2.0 * std::f64::consts::PI);
        assert!((rep.dominant_freq - f_pole).abs() < 0.02 * f_pole, "{name}: {} Hz vs {f_pole} Hz", rep.dominant_freq);
        assert!((rep.growth_rate - pole.re).abs() < 0.2 * pole.re, "{name}: {}/s vs {}/s", rep.growth_rate, pole.re);
    }
}

#[test]
fn stable_runs_decay() {
    let cfg = config("tq_step");
    let r = cfg.resolve(Some(LawName::Droop), None).unwrap();
    let (sc, _) = cfg.sim_scenario(&r).unwrap();
    let tr = simulate(&sc).unwrap();
    assert!(tr.diverged_at.is_none());
    let q = tr.get(Signal::Q).unwrap();
    let dev = tr.window(5.5, 7.0).map(|k| (q[k] - q[0]).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-6, "{dev}");
}
