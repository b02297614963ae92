//! Exponential versus subexponential convergence of the power-delay
//! examples, together with the inward-drift scan and the Lyapunov scan.

use serde::{Deserialize, Serialize};

use super::{check_positive, ExperimentReport, RunProvenance, Table, Verdict};
use crate::conditions::{
    sample_segment, vk_margin_scan, DiameterPolicy, SegmentSamplerSpec, Shape, VkMode,
};
use crate::error::{Error, Result};
use crate::integrator::simulate_ensemble;
use crate::lyapunov::{
    drift_report, scan_samples, search_exp_spec, LyapunovSpec, LyapunovSubexpSpec, PowerFn, PsiSpec,
};
use crate::metrics::{
    derive_seed, prefer_kind, wasserstein_drho, CurvePoint, EmpiricalLaw, RateKind,
};
use crate::models::{
    make_distributed_delay_model, make_power_delay_model, Diffusion, KappaSpec, MeasureSpec,
    ModelSpec,
};
use crate::segment::{Grid, Segment};

/// Noise used for the target ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Path `i` of both ensembles shares its Brownian increments; the
    /// pairing is a coupling, so `Ŵ` stays an upper-bound estimate without
    /// the independent-sample floor.
    Synchronous,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VkSettings {
    pub n_samples: usize,
    pub sigma: f64,
    pub big_m: f64,
    pub radius_hi: f64,
}

impl Default for VkSettings {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            sigma: 0.25,
            big_m: 2.0,
            radius_hi: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSettings {
    pub n_states: usize,
    /// Defaults to 1000 for γ ≥ 0 and 4000 for γ < 0.
    pub n_samples: Option<usize>,
    /// Range of `|x(0)|`; defaults to `(20, 200)` for γ ≥ 0. For γ < 0 the
    /// drift gain shrinks like `1/|x(0)|`, so the default is `(4, 20)`.
    pub radius: Option<(f64, f64)>,
    /// Grids searched for the exponential form (γ ≥ 0).
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Subexponential form (γ < 0): `λ₁`, `λ₂` and `ψ(z) = c z^q`.
    pub lambda1: f64,
    pub lambda2: f64,
    pub psi: PowerFn,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        Self {
            n_states: 10,
            n_samples: None,
            radius: None,
            lambdas: vec![0.05, 0.1, 0.2, 0.5],
            gammas: vec![0.5, 1.0, 2.0, 4.0],
            lambda1: 0.25,
            lambda2: 0.01,
            psi: PowerFn { c: 16.0, q: 0.25 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub gamma: f64,
    /// Distributed-delay variant; absent means the point delay at `-r`.
    pub measure: Option<MeasureSpec>,
    /// Constant diffusion coefficient.
    pub noise: f64,
    /// Constant start segment value.
    pub start: f64,
    pub n_grid: usize,
    pub dt: f64,
    pub n_paths: usize,
    /// Horizon used to sample the invariant law from the zero segment.
    pub t_inv: f64,
    pub t_end: f64,
    pub step: f64,
    pub rho: f64,
    /// Competing subexponential α when γ ≥ 0 (where `γ + 1` leaves (0,1]).
    pub alpha_alt: f64,
    pub coupling: Coupling,
    pub vk: VkSettings,
    pub lyapunov: LyapunovSettings,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            measure: None,
            noise: 2.0,
            start: 0.0,
            n_grid: 100,
            dt: 0.01,
            n_paths: 512,
            t_inv: 150.0,
            t_end: 80.0,
            step: 4.0,
            rho: 5.0,
            alpha_alt: 0.5,
            coupling: Coupling::Synchronous,
            vk: VkSettings::default(),
            lyapunov: LyapunovSettings::default(),
        }
    }
}

impl ConvergenceConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma > -1.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in (-1,1), got {}",
                self.gamma
            )));
        }
        for (k, v) in [
            ("noise", self.noise),
            ("dt", self.dt),
            ("t_inv", self.t_inv),
            ("t_end", self.t_end),
            ("step", self.step),
            ("rho", self.rho),
        ] {
            check_positive(k, v)?;
        }
        if !(self.alpha_alt > 0.0 && self.alpha_alt < 1.0) {
            return Err(Error::Config("alpha_alt must lie in (0,1)".into()));
        }
        if self.n_paths < 2 || self.n_paths > crate::metrics::MAX_OT_SIZE {
            return Err(Error::Config(format!(
                "n_paths must lie in [2, {}]",
                crate::metrics::MAX_OT_SIZE
            )));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let g = Diffusion::scalar(self.noise);
        match &self.measure {
            None => make_power_delay_model(self.gamma, 1.0, g),
            Some(mu) => make_distributed_delay_model(self.gamma, mu.clone(), 1.0, 1, g),
        }
    }

    /// α of the competing subexponential fit.
    pub fn fit_alpha(&self) -> f64 {
        if self.gamma < 0.0 {
            self.gamma + 1.0
        } else {
            self.alpha_alt
        }
    }
}

fn kappa_for(gamma: f64) -> KappaSpec {
    KappaSpec {
        c: 1.0,
        p: (1.0 + gamma) / 2.0,
    }
}

fn curve(cfg: &ConvergenceConfig, model: &ModelSpec, seed: u64) -> Result<Vec<CurvePoint>> {
    let grid = Grid::new(model.r, cfg.n_grid)?;
    let zero = Segment::zeros(grid, 1);
    let pi = simulate_ensemble(
        model,
        |_| zero.clone(),
        cfg.t_inv,
        cfg.dt,
        cfg.n_paths,
        derive_seed(seed, 10),
        &[cfg.t_inv],
    )?;
    if pi.n_exploded() > 0 {
        return Err(Error::Infeasible("invariant-law sampling exploded".into()));
    }
    let pi = pi.at(0);
    let k = (cfg.t_end / cfg.step).round() as usize;
    let times: Vec<f64> = (1..=k)
        .map(|j| ((j as f64 * cfg.step) / cfg.dt).round() * cfg.dt)
        .collect();
    let x = Segment::constant(grid, &[cfg.start]);
    let sx = derive_seed(seed, 11);
    let sy = match cfg.coupling {
        Coupling::Synchronous => sx,
        Coupling::Independent => derive_seed(seed, 12),
    };
    let ex = simulate_ensemble(
        model,
        |_| x.clone(),
        cfg.t_end,
        cfg.dt,
        cfg.n_paths,
        sx,
        &times,
    )?;
    let ey = simulate_ensemble(
        model,
        |i| pi[i].clone(),
        cfg.t_end,
        cfg.dt,
        cfg.n_paths,
        sy,
        &times,
    )?;
    if ex.n_exploded() + ey.n_exploded() > 0 {
        return Err(Error::Infeasible("a curve path exploded".into()));
    }
    times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let (w, plan) = wasserstein_drho(
                &EmpiricalLaw::from_samples(ex.at(j))?,
                &EmpiricalLaw::from_samples(ey.at(j))?,
                cfg.rho,
            )?;
            Ok(CurvePoint {
                t,
                w,
                ci: plan.std_error,
            })
        })
        .collect()
}

fn vk_part(
    cfg: &ConvergenceConfig,
    model: &ModelSpec,
    seed: u64,
    report: &mut ExperimentReport,
) -> Result<()> {
    let kappa = kappa_for(cfg.gamma);
    let sampler = SegmentSamplerSpec {
        r: model.r,
        n_grid: cfg.n_grid,
        dim: 1,
        radius: (cfg.vk.big_m, cfg.vk.radius_hi),
        diameter: DiameterPolicy::RelativeToKappa {
            kappa,
            frac: (0.0, 1.0),
        },
        shapes: vec![
            Shape::ConstantPlusBridge,
            Shape::PiecewiseLinear,
            Shape::LastPointJump,
        ],
        seed: derive_seed(seed, 20),
    };
    // the derived bound h(x(-r)) x(0) ≤ -|x(0)|^{γ+1}/2 as a power-law scan
    let mode = VkMode::A3 {
        alpha: cfg.gamma + 1.0,
    };
    let vk = vk_margin_scan(
        model,
        mode,
        cfg.vk.sigma,
        cfg.vk.big_m,
        Some(kappa),
        &sampler,
        cfg.vk.n_samples,
    )?;
    report.metric("vk/sigma_star", vk.sigma_star);
    report.metric("vk/m_star", vk.m_star);
    report.metric("vk/violations", vk.report.n_violations as f64);
    report.verdicts.push(Verdict::new(
        "vk_condition",
        vk.report.passed() && vk.m_star_finite && vk.sigma_star >= cfg.vk.sigma,
        format!(
            "{} violations over {} samples, σ* = {:.4}, M* = {:.3}",
            vk.report.n_violations, vk.report.n_samples, vk.sigma_star, vk.m_star
        ),
    ));
    Ok(())
}

fn lyapunov_part(
    cfg: &ConvergenceConfig,
    model: &ModelSpec,
    seed: u64,
    report: &mut ExperimentReport,
) -> Result<()> {
    let l = &cfg.lyapunov;
    let kappa = kappa_for(cfg.gamma);
    let (radius, n_samples) = if cfg.gamma >= 0.0 {
        ((20.0, 200.0), 1000)
    } else {
        ((4.0, 20.0), 4000)
    };
    let radius = l.radius.unwrap_or(radius);
    let n_samples = l.n_samples.unwrap_or(n_samples);
    let sampler = SegmentSamplerSpec {
        r: model.r,
        n_grid: cfg.n_grid,
        dim: 1,
        radius,
        diameter: DiameterPolicy::RelativeToKappa {
            kappa,
            frac: (0.0, 1.0),
        },
        shapes: vec![Shape::ConstantPlusBridge, Shape::PiecewiseLinear],
        seed: derive_seed(seed, 30),
    };
    let states: Vec<Segment> = (0..l.n_states)
        .map(|i| sample_segment(&sampler, i))
        .collect::<Result<_>>()?;
    let samples = scan_samples(
        model,
        &states,
        1.0,
        n_samples,
        cfg.dt,
        derive_seed(seed, 31),
    )?;
    let mut table = Table::new(&[
        "x0_norm", "diameter", "log_v", "log_exv", "log_se", "margin",
    ]);
    if cfg.gamma >= 0.0 {
        let beta = model.declared.beta.unwrap_or(0.0);
        let (spec, dr) = search_exp_spec(&samples, beta, &l.lambdas, &l.gammas)?;
        for s in &dr.states {
            table.push(vec![
                s.x0_norm, s.diameter, s.log_v, s.log_exv, s.log_se, s.margin,
            ]);
        }
        let c1 = dr.c1.unwrap_or(f64::NEG_INFINITY);
        report.metric("lyapunov/c1", c1);
        report.metric("lyapunov/lambda", spec.lambda);
        report.metric("lyapunov/gamma", spec.gamma);
        report.verdicts.push(Verdict::new(
            "lyapunov_drift",
            c1 > 0.0,
            format!("fitted c₁ = {c1:.4e} over {} states", dr.states.len()),
        ));
    } else {
        let alpha = cfg.gamma + 1.0;
        let spec = LyapunovSubexpSpec::new(l.lambda1, l.lambda2, alpha, l.psi)?;
        let psi = PsiSpec::subexp(alpha)?;
        let dr = drift_report(&LyapunovSpec::Subexp(spec), None, &samples);
        // largest scale c with E V(X₁) ≤ V − c Ψ(V) on every state
        let mut c_psi = f64::INFINITY;
        for s in &dr.states {
            table.push(vec![
                s.x0_norm, s.diameter, s.log_v, s.log_exv, s.log_se, s.margin,
            ]);
            let psi_over_v = (psi.log_eval_from_log(s.log_v) - s.log_v).exp();
            c_psi = c_psi.min(s.margin / psi_over_v);
        }
        report.metric("lyapunov/psi_scale", c_psi);
        report.verdicts.push(Verdict::new(
            "lyapunov_psi_drift",
            c_psi > 0.0,
            format!(
                "fitted Ψ scale = {c_psi:.4e} over {} states",
                dr.states.len()
            ),
        ));
    }
    report.tables.insert("lyapunov".into(), table);
    Ok(())
}

pub fn repro_example_convergence(
    cfg: &ConvergenceConfig,
    seed: u64,
    prov: RunProvenance,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let model = cfg.model()?;
    let mut report = ExperimentReport::new("example_convergence", prov);
    vk_part(cfg, &model, seed, &mut report)?;
    lyapunov_part(cfg, &model, seed, &mut report)?;

    let c = curve(cfg, &model, seed)?;
    let mut table = Table::new(&["t", "w", "ci"]);
    for p in &c {
        table.push(vec![p.t, p.w, p.ci]);
    }
    report.tables.insert("curve".into(), table);
    let alpha = cfg.fit_alpha();
    let (best, other) = prefer_kind(&c, alpha)?;
    let (exp, sub) = if best.kind == RateKind::Exponential {
        (&best, &other)
    } else {
        (&other, &best)
    };
    report.metric("fit/exponential_r2", exp.r2);
    report.metric("fit/exponential_lambda2", exp.lambda2);
    report.metric("fit/subexponential_r2", sub.r2);
    report.metric("fit/subexponential_lambda2", sub.lambda2);
    report.metric("fit/subexponential_time_exponent", sub.kind.time_exponent());
    report.metric("fit/n_used", best.n_used as f64);
    let expected_exp = cfg.gamma >= 0.0;
    let preferred_exp = best.kind == RateKind::Exponential;
    report.verdicts.push(Verdict::new(
        "rate_kind",
        preferred_exp == expected_exp,
        format!(
            "preferred {} (R² exp {:.4} vs subexp {:.4}, time exponent {:.4}); expected {}",
            if preferred_exp {
                "exponential"
            } else {
                "subexponential"
            },
            exp.r2,
            sub.r2,
            sub.kind.time_exponent(),
            if expected_exp {
                "exponential"
            } else {
                "subexponential"
            }
        ),
    ));
    report.verdicts.push(Verdict::new(
        "rate_positive",
        best.lambda2 > 0.0,
        format!("λ₂ = {:.4}", best.lambda2),
    ));
    Ok(report)
}
