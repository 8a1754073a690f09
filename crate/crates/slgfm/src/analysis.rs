//! Glue from resolved configuration to loop models and report rows.

use slgfm_core::loops::{apply_ad, build_rap_ol, count_rhp, LoopError, OlModel};
use slgfm_core::plant::{linearize, solve_operating_point, LinearPlant, PlantError};
use slgfm_core::poly::sort_roots;
use slgfm_core::stability::{closed_loop_poles, default_range, nyquist, verdict, NyquistReport, StabilityError, StabilityVerdict};
use slgfm_core::Complex64;

use crate::config::Resolved;
use crate::csvio::{PoleKind, PoleRow};

/// Linearized plant with the configured active damping applied.
pub fn build_plant(r: &Resolved) -> Result<LinearPlant, LoopError> {
    let op = solve_operating_point(&r.pp, &r.cp)?;
    let lp = linearize(&r.pp, &op)?;
    match &r.ad {
        Some(ad) => apply_ad(&lp, ad),
        None => Ok(lp),
    }
}

/// Reactive-power loop model of the configuration.
pub fn build_model(r: &Resolved) -> Result<OlModel, LoopError> {
    build_rap_ol(&build_plant(r)?, &r.cp)
}

pub fn sweep_range(r: &Resolved, m: &OlModel) -> (f64, f64) {
    r.omega_range.unwrap_or_else(|| default_range(m))
}

pub fn run_nyquist(r: &Resolved, m: &OlModel) -> Result<(NyquistReport, StabilityVerdict), StabilityError> {
    let (lo, hi) = sweep_range(r, m);
    let rep = nyquist(m, lo, hi, r.pts)?;
    let v = verdict(m, &rep);
    Ok((rep, v))
}

fn sorted(mut p: Vec<Complex64>) -> Vec<Complex64> {
    sort_roots(&mut p);
    p
}

/// Open-loop then closed-loop poles, each sorted, as pole-table rows.
pub fn pole_rows(label: &str, m: &OlModel) -> Result<Vec<PoleRow>, StabilityError> {
    let eps = m.stability_eps;
    let cl = closed_loop_poles(m)?;
    let mut rows = Vec::with_capacity(m.ol_poles.len() + cl.len());
    for (kind, poles) in [(PoleKind::Ol, sorted(m.ol_poles.clone())), (PoleKind::Cl, sorted(cl))] {
        for p in poles {
            rows.push(PoleRow {
                label: label.to_string(),
                re: p.re,
                im: p.im,
                kind,
                rhp: count_rhp(&[p], eps) == 1,
            });
        }
    }
    Ok(rows)
}

/// Whether an error reflects bad input (exit 2) rather than a numerical
/// failure (exit 3).
pub fn plant_error_is_input(e: &PlantError) -> bool {
    matches!(
        e,
        PlantError::NonPositiveBase(_) | PlantError::InvalidParameter(_) | PlantError::InfeasibleSetpoint { .. }
    )
}

pub fn loop_error_is_input(e: &LoopError) -> bool {
    match e {
        LoopError::InvalidParameter(_) => true,
        LoopError::Plant(p) => plant_error_is_input(p),
        _ => false,
    }
}
