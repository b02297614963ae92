//! Delayed Ornstein–Uhlenbeck stability boundary at `λ = π/2`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{check_positive, ExperimentReport, RunProvenance, Table, Verdict};
use crate::error::{Error, Result};
use crate::integrator::{simulate_ensemble, Ensemble};
use crate::metrics::{derive_seed, wasserstein_drho, EmpiricalLaw};
use crate::models::{make_brownian, make_delayed_ou, ModelSpec};
use crate::segment::{Grid, Segment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuBoundaryConfig {
    /// `λ = 0` runs plain Brownian motion.
    pub lambdas: Vec<f64>,
    pub t_end: f64,
    /// Reference time for the moment growth factor.
    pub t_early: f64,
    pub curve_step: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub n_grid: usize,
    /// Starts are the constant segments `±start`.
    pub start: f64,
    pub rho: f64,
    /// Stable when `Ŵ(t_end)` is below this.
    pub w_threshold: f64,
    /// Unstable when `E X(t_end)² ≥ growth_factor · E X(t_early)²`.
    pub growth_factor: f64,
}

impl Default for OuBoundaryConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.0, 1.0, 2.5],
            t_end: 40.0,
            t_early: 5.0,
            curve_step: 5.0,
            n_paths: 512,
            dt: 0.01,
            n_grid: 100,
            start: 5.0,
            rho: 20.0,
            w_threshold: 0.1,
            growth_factor: 10.0,
        }
    }
}

impl OuBoundaryConfig {
    fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("t_end", self.t_end),
            ("t_early", self.t_early),
            ("curve_step", self.curve_step),
            ("dt", self.dt),
            ("rho", self.rho),
        ] {
            check_positive(k, v)?;
        }
        if !(self.t_early < self.t_end) || self.n_paths < 2 {
            return Err(Error::Config("need t_early < t_end and n_paths ≥ 2".into()));
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::Config("lambdas must be nonnegative".into()));
        }
        let below = self.lambdas.iter().any(|&l| l < FRAC_PI_2);
        let above = self.lambdas.iter().any(|&l| l > FRAC_PI_2);
        if !(below && above) {
            return Err(Error::Config(
                "lambdas must lie on both sides of π/2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

fn model_for(lambda: f64) -> Result<ModelSpec> {
    if lambda == 0.0 {
        make_brownian(1.0)
    } else {
        make_delayed_ou(lambda)
    }
}

fn second_moment(e: &Ensemble, j: usize) -> f64 {
    let s = e.at(j);
    s.iter().map(|x| x.endpoint()[0].powi(2)).sum::<f64>() / s.len() as f64
}

fn mean_diameter(e: &Ensemble, j: usize) -> f64 {
    let s = e.at(j);
    s.iter().map(|x| x.diameter()).sum::<f64>() / s.len() as f64
}

pub fn repro_ou_boundary(
    cfg: &OuBoundaryConfig,
    seed: u64,
    prov: RunProvenance,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = Grid::new(1.0, cfg.n_grid)?;
    let mut times: Vec<f64> = Vec::new();
    let mut t = cfg.curve_step;
    while t < cfg.t_end - 1e-9 {
        times.push((t / cfg.dt).round() * cfg.dt);
        t += cfg.curve_step;
    }
    times.push(cfg.t_end);
    times.push(cfg.t_early);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let j_early = times.iter().position(|&t| t == cfg.t_early).unwrap();
    let j_end = times.len() - 1;

    let mut report = ExperimentReport::new("ou_boundary", prov);
    let mut summary = Table::new(&[
        "lambda", "w_end", "m2_early", "m2_end", "growth", "d_early", "d_end", "exploded", "stable",
    ]);
    let mut curves = Table::new(&["lambda", "t", "w", "ci"]);
    for (li, &lambda) in cfg.lambdas.iter().enumerate() {
        let model = model_for(lambda)?;
        let sx = derive_seed(seed, 2 * li as u64);
        let sy = derive_seed(seed, 2 * li as u64 + 1);
        let plus = Segment::constant(grid, &[cfg.start]);
        let minus = Segment::constant(grid, &[-cfg.start]);
        let ex = simulate_ensemble(
            &model,
            |_| plus.clone(),
            cfg.t_end,
            cfg.dt,
            cfg.n_paths,
            sx,
            &times,
        )?;
        let ey = simulate_ensemble(
            &model,
            |_| minus.clone(),
            cfg.t_end,
            cfg.dt,
            cfg.n_paths,
            sy,
            &times,
        )?;
        let exploded = ex.n_exploded() + ey.n_exploded();
        // an exploded path is the strongest instability evidence there is
        let (w_end, m2_early, m2_end, d_early, d_end) = if exploded > 0 {
            (1.0, f64::NAN, f64::INFINITY, f64::NAN, f64::INFINITY)
        } else {
            let mut w_end = 1.0;
            for (j, &t) in times.iter().enumerate() {
                let (w, plan) = wasserstein_drho(
                    &EmpiricalLaw::from_samples(ex.at(j))?,
                    &EmpiricalLaw::from_samples(ey.at(j))?,
                    cfg.rho,
                )?;
                curves.push(vec![lambda, t, w, plan.std_error]);
                w_end = w;
            }
            (
                w_end,
                second_moment(&ex, j_early),
                second_moment(&ex, j_end),
                mean_diameter(&ex, j_early),
                mean_diameter(&ex, j_end),
            )
        };
        let growth = m2_end / m2_early;
        let decays = w_end < cfg.w_threshold;
        let grows = exploded > 0 || growth >= cfg.growth_factor;
        let class = if decays && !grows {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        let expected = if lambda > 0.0 && lambda < FRAC_PI_2 {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        let oscillating = exploded > 0 || d_end >= cfg.growth_factor.sqrt() * d_early;
        summary.push(vec![
            lambda,
            w_end,
            m2_early,
            m2_end,
            growth,
            d_early,
            d_end,
            exploded as f64,
            (class == Stability::Stable) as u8 as f64,
        ]);
        report.metric(&format!("lambda={lambda}/w_end"), w_end);
        report.metric(&format!("lambda={lambda}/moment_growth"), growth);
        report.metric(&format!("lambda={lambda}/diameter_growth"), d_end / d_early);
        report.verdicts.push(Verdict::new(
            &format!("lambda={lambda}"),
            class == expected,
            format!(
                "classified {class:?} (expected {expected:?}): W(t_end) = {w_end:.4}, E X² growth {growth:.3}, {}",
                if oscillating { "diameter growing" } else { "diameter bounded" }
            ),
        ));
    }
    report.tables.insert("summary".into(), summary);
    report.tables.insert("curves".into(), curves);
    report.notes.push(format!(
        "stable: W between starts ±{} below {} at t = {}; unstable: E X(t_end)² ≥ {}× E X(t_early)² or explosion",
        cfg.start, cfg.w_threshold, cfg.t_end, cfg.growth_factor
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_one_sided_lambdas() {
        let cfg = OuBoundaryConfig {
            lambdas: vec![0.5, 1.0],
            ..Default::default()
        };
        let prov = RunProvenance {
            config_hash: String::new(),
            seed: 0,
            code_version: String::new(),
        };
        assert!(matches!(
            repro_ou_boundary(&cfg, 0, prov),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn small_run_classifies_both_sides() {
        let cfg = OuBoundaryConfig {
            n_paths: 64,
            t_end: 30.0,
            rho: 20.0,
            w_threshold: 0.2,
            ..Default::default()
        };
        let prov = RunProvenance {
            config_hash: String::new(),
            seed: 0,
            code_version: String::new(),
        };
        let r = repro_ou_boundary(&cfg, 5, prov).unwrap();
        assert!(r.verdict("lambda=2.5").unwrap().passed);
        assert!(r.verdict("lambda=0").unwrap().passed);
    }
}
