//! Command-line front end.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use slgfm_core::loops::{char_coeffs_lossless, droopi_char_factor, LoopError};
use slgfm_core::plant::{solve_operating_point, ControlLaw};
use slgfm_core::poly::Polynomial;
use slgfm_core::sim::{simulate, SimError};
use slgfm_core::stability::{closed_loop_rhp, margins_from, routh, RouthReport, StabilityError};

use crate::analysis::{build_model, build_plant, loop_error_is_input, plant_error_is_input, pole_rows, run_nyquist};
use crate::config::{apply_param, AdName, ConfigError, LawName, Resolved, ScenarioConfig};
use crate::csvio::{self, CsvError, PoleRow};
use crate::spectral::{dominant_frequency, SpectralError};

#[derive(Debug, Parser)]
#[command(name = "slgfm", version, about = "Small-signal and time-domain stability analysis of single-loop grid-forming converters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Open- and closed-loop pole table of the reactive-power loop.
    Poles(Common),
    /// Routh first-column tables (open-loop denominator, closed loop).
    Routh(Common),
    /// Nyquist samples of the loop and the resulting verdict.
    Nyquist(Common),
    /// Gain and phase margins.
    Margins(Common),
    /// Nyquist verdict with a closed-loop pole cross-check.
    Verdict(Common),
    /// Nonlinear time-domain simulation with optional FFT report.
    Simulate(Common),
    /// Pole tables and verdicts over a parameter sweep.
    Sweep(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Poles(c)
            | Command::Routh(c)
            | Command::Nyquist(c)
            | Command::Margins(c)
            | Command::Verdict(c)
            | Command::Simulate(c)
            | Command::Sweep(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Poles(_) => "poles",
            Command::Routh(_) => "routh",
            Command::Nyquist(_) => "nyquist",
            Command::Margins(_) => "margins",
            Command::Verdict(_) => "verdict",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; without it everything goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Control law, overriding the scenario file.
    #[arg(long, value_enum)]
    pub law: Option<LawName>,
    /// Active damping, overriding the scenario file.
    #[arg(long, value_enum)]
    pub ad: Option<AdName>,
    /// Report frequency columns in Hz instead of rad/s.
    #[arg(long)]
    pub hz: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("cannot write output: {0}")]
    Output(#[from] CsvError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let input = match self {
            CliError::Config(_) | CliError::Spectral(_) | CliError::Output(_) | CliError::Io { .. } => true,
            CliError::Loop(e) => loop_error_is_input(e),
            CliError::Stability(e) => matches!(e, StabilityError::InvalidRange(..)),
            CliError::Sim(SimError::InvalidScenario(_)) => true,
            CliError::Sim(SimError::Plant(e)) => plant_error_is_input(e),
            CliError::Sim(SimError::InitialResidualTooLarge(_)) => false,
        };
        if input {
            EXIT_INVALID_INPUT
        } else {
            EXIT_NUMERICAL
        }
    }
}

/// Collected command output: CSV payloads plus a plain-text report.
struct Output {
    csv: Vec<(String, Vec<u8>)>,
    report: String,
}

impl Output {
    fn new() -> Self {
        Self {
            csv: Vec::new(),
            report: String::new(),
        }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.report.push_str(s.as_ref());
        self.report.push('\n');
    }

    /// With a directory, writes `<name>.csv` files and `<cmd>.txt`; without,
    /// writes the report as `# ` lines followed by the CSV payloads.
    fn emit(self, cmd: &str, dir: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
        let io = |path: &std::path::Path, e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        };
        match dir {
            Some(d) => {
                std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
                for (name, data) in &self.csv {
                    let p = d.join(format!("{name}.csv"));
                    std::fs::write(&p, data).map_err(|e| io(&p, e))?;
                }
                if !self.report.is_empty() {
                    let p = d.join(format!("{cmd}.txt"));
                    std::fs::write(&p, &self.report).map_err(|e| io(&p, e))?;
                }
            }
            None => {
                let mut text = String::new();
                for l in self.report.lines() {
                    if l.starts_with('#') {
                        text.push_str(l);
                    } else {
                        text.push_str("# ");
                        text.push_str(l);
                    }
                    text.push('\n');
                }
                let stdout_err = |e| io(std::path::Path::new("<stdout>"), e);
                stdout.write_all(text.as_bytes()).map_err(stdout_err)?;
                for (_, data) in &self.csv {
                    stdout.write_all(data).map_err(stdout_err)?;
                }
                stdout.flush().map_err(stdout_err)?;
            }
        }
        Ok(())
    }
}

fn freq_scale(hz: bool) -> f64 {
    if hz {
        1.0 / (2.0 * PI)
    } else {
        1.0
    }
}

fn label(r: &Resolved) -> String {
    let law = match r.cp.law {
        ControlLaw::Droop => "droop",
        ControlLaw::DroopI => "droop-i",
    };
    match &r.ad {
        Some(ad) => format!("{}/{law}/{:?}", r.name, ad.kind),
        None => format!("{}/{law}", r.name),
    }
}

fn scaled_rows(rows: Vec<PoleRow>, scale: f64) -> Vec<PoleRow> {
    rows.into_iter()
        .map(|r| PoleRow {
            re: r.re * scale,
            im: r.im * scale,
            ..r
        })
        .collect()
}

/// Runs the command, writing stdout output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let c = cli.command.common();
    let cfg = ScenarioConfig::load(&c.config)?;
    let r = cfg.resolve(c.law, c.ad)?;
    let fs = freq_scale(c.hz);
    let unit = if c.hz { "Hz" } else { "rad/s" };
    let mut out = Output::new();
    out.line(format!("scenario = {}", label(&r)));

    match &cli.command {
        Command::Poles(_) => {
            let m = build_model(&r)?;
            let rows = scaled_rows(pole_rows(&label(&r), &m)?, fs);
            out.line(format!("units = {unit}"));
            out.line(format!("open_loop_rhp = {}", m.p_count));
            let mut buf = Vec::new();
            csvio::write_poles(&mut buf, &rows)?;
            out.csv.push(("poles".into(), buf));
        }
        Command::Routh(_) => {
            let mut sections: Vec<(&str, Polynomial)> = Vec::new();
            match build_model(&r) {
                Ok(m) => {
                    sections.push(("ol", m.tf.den().clone()));
                    sections.push(("cl", m.tf.feedback_characteristic()));
                }
                // An undamped plant can defeat the transfer-function build;
                // the characteristic factor of the integral law still exists.
                Err(e) if r.cp.law == ControlLaw::DroopI && r.pp.is_lossless() && !loop_error_is_input(&e) => {
                    let lp = build_plant(&r)?;
                    sections.push(("ol", droopi_char_factor(&lp, r.cp.d_q, r.cp.k_pq, r.cp.k_iq)));
                }
                Err(e) => return Err(e.into()),
            }
            if r.cp.law == ControlLaw::DroopI && r.pp.is_lossless() && r.ad.is_none() {
                let op = solve_operating_point(&r.pp, &r.cp).map_err(LoopError::from)?;
                let cc = char_coeffs_lossless(&r.pp, &op, r.cp.d_q, r.cp.k_pq, r.cp.k_iq);
                out.line(format!(
                    "lossless_quintic = s^5 + {:e} s^3 + {:e} s^2 + {:e} s + {:e}",
                    cc.a3, cc.a2, cc.a1, cc.a0
                ));
                sections.push(("lossless", cc.polynomial()));
            }
            let mut wr = csv::Writer::from_writer(Vec::new());
            wr.write_record(["section", "power", "limit", "sign", "epsilon", "auxiliary"])
                .map_err(CsvError::from)?;
            for (name, p) in &sections {
                let rep = routh(p)?;
                write_routh(&mut wr, name, &rep)?;
                out.line(format!(
                    "{name}: degree = {}, sign_changes = {}, rhp_count = {}, epsilon = {}, auxiliary = {}",
                    p.degree(),
                    rep.sign_changes,
                    rep.rhp_count,
                    rep.used_epsilon,
                    rep.used_auxiliary
                ));
            }
            let buf = wr.into_inner().map_err(|e| CsvError::from(e.into_error()))?;
            out.csv.push(("routh".into(), buf));
        }
        Command::Nyquist(_) => {
            let m = build_model(&r)?;
            let (rep, v) = run_nyquist(&r, &m)?;
            out.line(format!("omega_min = {} {unit}", rep.omega_min * fs));
            out.line(format!("omega_max = {} {unit}", rep.omega_max * fs));
            out.line(format!("samples = {}", rep.samples.len()));
            out.line(format!("closest_approach = {:.6e}", rep.closest_approach));
            out.line(v.to_string());
            let mut buf = Vec::new();
            csvio::write_nyquist(&mut buf, &rep.samples, fs)?;
            out.csv.push(("nyquist".into(), buf));
        }
        Command::Margins(_) => {
            let m = build_model(&r)?;
            let (rep, _) = run_nyquist(&r, &m)?;
            let mg = margins_from(&m, &rep)?;
            let w = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{:.6} {unit}", v * fs));
            out.line(format!("gain_margin_db = {:.4}", mg.gain_margin_db));
            out.line(format!("phase_crossover = {}", w(mg.phase_crossover)));
            out.line(format!("phase_margin_deg = {:.4}", mg.phase_margin_deg));
            out.line(format!("gain_crossover = {}", w(mg.gain_crossover)));
            out.line(format!("reliable = {}", mg.reliable));
            if !mg.reliable {
                out.line("# open-loop RHP poles present: margins do not describe stability");
            }
        }
        Command::Verdict(_) => {
            let m = build_model(&r)?;
            let (_, v) = run_nyquist(&r, &m)?;
            out.line(v.to_string());
            out.line(format!("closed_loop_rhp = {}", closed_loop_rhp(&m)?));
        }
        Command::Simulate(_) => {
            let (sc, fft) = cfg.sim_scenario(&r)?;
            let tr = simulate(&sc)?;
            out.line(format!("samples = {}", tr.t.len()));
            out.line(match tr.diverged_at {
                Some(t) => format!("diverged_at = {t}"),
                None => "diverged_at = none".to_string(),
            });
            if let Some(f) = fft {
                let end = tr.t.last().copied().unwrap_or(0.0);
                if tr.diverged_at.is_some() && f.t_end > end {
                    out.line("# FFT window extends past the divergence time; report skipped");
                } else {
                    out.line(format!("fft_signal = {}", f.signal));
                    out.line(dominant_frequency(&tr, f.signal, (f.t_start, f.t_end))?.to_string());
                }
            }
            let mut buf = Vec::new();
            csvio::write_trace(&mut buf, &tr)?;
            out.csv.push(("trace".into(), buf));
        }
        Command::Sweep(_) => {
            let (path, values) = cfg.sweep()?;
            let results: Vec<Result<_, CliError>> = values
                .par_iter()
                .map(|&v| {
                    let mut rv = r.clone();
                    apply_param(&mut rv, path, v)?;
                    let m = build_model(&rv)?;
                    let rows = pole_rows(&label(&rv), &m)?;
                    let (_, verdict) = run_nyquist(&rv, &m)?;
                    Ok((rows, verdict))
                })
                .collect();
            let mut wr = csv::Writer::from_writer(Vec::new());
            wr.write_record(["index", "value", "kind", "re", "im", "rhp"])
                .map_err(CsvError::from)?;
            out.line(format!("parameter = {path}"));
            out.line(format!("units = {unit}"));
            for (i, (res, v)) in results.into_iter().zip(&values).enumerate() {
                let (rows, verdict) = res?;
                for row in rows {
                    wr.write_record([
                        i.to_string(),
                        csvio::fmt_f64(*v),
                        row.kind.as_str().to_string(),
                        csvio::fmt_f64(row.re * fs),
                        csvio::fmt_f64(row.im * fs),
                        row.rhp.to_string(),
                    ])
                    .map_err(CsvError::from)?;
                }
                let mut s = String::new();
                let _ = write!(
                    s,
                    "index = {i}, value = {v}, P = {}, N = {}, Z = {}, stable = {}",
                    verdict.p, verdict.n, verdict.z, verdict.stable
                );
                out.line(s);
            }
            let buf = wr.into_inner().map_err(|e| CsvError::from(e.into_error()))?;
            out.csv.push(("sweep".into(), buf));
        }
    }
    out.emit(cli.command.name(), c.out.as_ref(), stdout)
}

fn write_routh(wr: &mut csv::Writer<Vec<u8>>, section: &str, rep: &RouthReport) -> Result<(), CsvError> {
    for e in &rep.first_column {
        wr.write_record([
            section.to_string(),
            e.power.to_string(),
            e.limit.to_string(),
            e.sign().to_string(),
            e.epsilon_substituted.to_string(),
            e.auxiliary.to_string(),
        ])?;
    }
    Ok(())
}
