//! Exponential and subexponential Lyapunov functions, the concave rate
//! function Ψ with `H_Ψ`, and Monte-Carlo drift-inequality checks.
//!
//! Everything that exponentiates is carried as a logarithm; `V` itself is
//! only materialized when finite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::simulate_ensemble;
use crate::models::{KappaSpec, ModelSpec};
use crate::segment::{Segment, SegmentView};

/// `V(x) = exp{λ|x(0)| + (D(x) − γ|x(0)|^β)₊}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovExpSpec {
    pub lambda: f64,
    pub gamma: f64,
    pub beta: f64,
}

/// `ψ(z) = c z^q`, `q ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFn {
    pub c: f64,
    pub q: f64,
}

impl PowerFn {
    pub fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            self.c * z.powf(self.q)
        }
    }
}

/// `V(x) = exp(λ₁|x(0)|^α + λ₂(D(x)² − ψ(|x(0)|))₊)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSubexpSpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub psi: PowerFn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LyapunovSpec {
    Exp(LyapunovExpSpec),
    Subexp(LyapunovSubexpSpec),
}

/// `V` together with `log V`; `value` is infinite when `log V` exceeds the
/// f64 range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapValue {
    pub value: f64,
    pub log_value: f64,
}

impl LyapValue {
    fn from_log(log_value: f64) -> Self {
        Self {
            value: log_value.exp(),
            log_value,
        }
    }
}

impl LyapunovExpSpec {
    pub fn new(lambda: f64, gamma: f64, beta: f64) -> Result<Self> {
        if !(lambda > 0.0 && gamma > 0.0 && (0.0..1.0).contains(&beta)) {
            return Err(Error::InvalidArgument(format!(
                "need λ, γ > 0 and β ∈ [0,1), got {lambda}, {gamma}, {beta}"
            )));
        }
        Ok(Self {
            lambda,
            gamma,
            beta,
        })
    }

    pub fn log_v(&self, x0_norm: f64, diameter: f64) -> f64 {
        self.lambda * x0_norm + (diameter - self.gamma * x0_norm.powf(self.beta)).max(0.0)
    }
}

impl LyapunovSubexpSpec {
    pub fn new(lambda1: f64, lambda2: f64, alpha: f64, psi: PowerFn) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda2 > 0.0 && alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need λ₁, λ₂ > 0 and α ∈ (0,1), got {lambda1}, {lambda2}, {alpha}"
            )));
        }
        if !(psi.c > 0.0 && psi.q > 0.0 && psi.q <= 1.0) {
            return Err(Error::InvalidArgument(
                "ψ must be c z^q with c > 0, q ∈ (0,1]".into(),
            ));
        }
        Ok(Self {
            lambda1,
            lambda2,
            alpha,
            psi,
        })
    }

    pub fn log_v(&self, x0_norm: f64, diameter: f64) -> f64 {
        self.lambda1 * x0_norm.powf(self.alpha)
            + self.lambda2 * (diameter * diameter - self.psi.eval(x0_norm)).max(0.0)
    }
}

impl LyapunovSpec {
    pub fn log_v(&self, x0_norm: f64, diameter: f64) -> f64 {
        match self {
            LyapunovSpec::Exp(s) => s.log_v(x0_norm, diameter),
            LyapunovSpec::Subexp(s) => s.log_v(x0_norm, diameter),
        }
    }

    pub fn eval(&self, x: &SegmentView<'_>) -> LyapValue {
        let x0 = x.endpoint().iter().map(|v| v * v).sum::<f64>().sqrt();
        LyapValue::from_log(self.log_v(x0, x.diameter()))
    }
}

pub fn v_exp(spec: &LyapunovExpSpec, x: &Segment) -> LyapValue {
    LyapunovSpec::Exp(*spec).eval(&x.view())
}

pub fn v_subexp(spec: &LyapunovSubexpSpec, x: &Segment) -> LyapValue {
    LyapunovSpec::Subexp(*spec).eval(&x.view())
}

/// Concave increasing rate function `Ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    /// `Ψ(z) = c z`.
    Linear { c: f64 },
    /// `Ψ(z) = z / (ln z)^p`, `p = (2 − 2α)/α`, for `z ≥ z_min`; tangent line
    /// below.
    Subexp { alpha: f64, z_min: f64 },
}

impl PsiSpec {
    /// Smallest admissible `z_min`: at least `e²`, and large enough that
    /// the analytic branch is concave (`ln z ≥ p + 1`).
    pub fn min_z_min(alpha: f64) -> f64 {
        let p = (2.0 - 2.0 * alpha) / alpha;
        (2.0f64).max(p + 1.0).exp()
    }

    pub fn subexp(alpha: f64) -> Result<Self> {
        Self::subexp_with(alpha, Self::min_z_min(alpha))
    }

    pub fn subexp_with(alpha: f64, z_min: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "α must lie in (0,1), got {alpha}"
            )));
        }
        let p = (2.0 - 2.0 * alpha) / alpha;
        if !(z_min > std::f64::consts::E && z_min.ln() >= p + 1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "z_min = {z_min} must exceed e and e^(p+1) = {} for concavity",
                (p + 1.0).exp()
            )));
        }
        Ok(PsiSpec::Subexp { alpha, z_min })
    }

    pub fn linear(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "linear Ψ needs c > 0, got {c}"
            )));
        }
        Ok(PsiSpec::Linear { c })
    }

    fn power(alpha: f64) -> f64 {
        (2.0 - 2.0 * alpha) / alpha
    }

    fn analytic(p: f64, z: f64) -> (f64, f64) {
        let l = z.ln();
        (z / l.powf(p), l.powf(-p - 1.0) * (l - p))
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            PsiSpec::Linear { c } => c * z,
            PsiSpec::Subexp { alpha, z_min } => {
                let p = Self::power(alpha);
                if z >= z_min {
                    Self::analytic(p, z).0
                } else {
                    let (v, d) = Self::analytic(p, z_min);
                    v + d * (z - z_min)
                }
            }
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            PsiSpec::Linear { c } => c,
            PsiSpec::Subexp { alpha, z_min } => Self::analytic(Self::power(alpha), z.max(z_min)).1,
        }
    }

    /// `ln Ψ(z)` given `ln z`, valid far beyond the f64 range of `z`.
    pub fn log_eval_from_log(&self, log_z: f64) -> f64 {
        match *self {
            PsiSpec::Linear { c } => c.ln() + log_z,
            PsiSpec::Subexp { alpha, z_min } => {
                if log_z >= z_min.ln() {
                    log_z - Self::power(alpha) * log_z.ln()
                } else {
                    self.eval(log_z.exp()).ln()
                }
            }
        }
    }
}

pub fn psi_eval(spec: &PsiSpec, z: f64) -> f64 {
    spec.eval(z)
}

pub fn psi_derivative(spec: &PsiSpec, z: f64) -> f64 {
    spec.derivative(z)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫_a^b ds / Ψ(s)` for `1 ≤ a ≤ b`, integrating in `u = ln s`.
fn h_between(spec: &PsiSpec, a: f64, b: f64) -> f64 {
    match *spec {
        PsiSpec::Linear { c } => (b.ln() - a.ln()) / c,
        PsiSpec::Subexp { alpha, z_min } => {
            let p = PsiSpec::power(alpha);
            let mut total = 0.0;
            if a < z_min {
                // exact integral of 1 / (v + d (s − z_min))
                let (v, d) = PsiSpec::analytic(p, z_min);
                let hi = b.min(z_min);
                total += ((v + d * (hi - z_min)) / (v + d * (a - z_min))).ln() / d;
            }
            let lo = a.max(z_min);
            if b > lo {
                // ∫ (ln s)^p / s ds = ∫ u^p du, done numerically so the
                // same path serves any α
                let g = |u: f64| u.powf(p);
                let (ua, ub) = (lo.ln(), b.ln());
                let scale = ub.powf(p + 1.0).max(1.0);
                total += integrate(g, ua, ub, 1e-14 * scale);
            }
            total
        }
    }
}

/// `H_Ψ(t) = ∫₁ᵗ ds / Ψ(s)`.
pub fn h_psi(t: f64, spec: &PsiSpec) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "H_Ψ is defined for t ≥ 1, got {t}"
        )));
    }
    Ok(h_between(spec, 1.0, t))
}

/// `ln H_Ψ⁻¹(y)`, by bisection in `ln t`.
pub fn h_psi_inverse_log(y: f64, spec: &PsiSpec) -> Result<f64> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "H_Ψ⁻¹ needs y ≥ 0, got {y}"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if let PsiSpec::Linear { c } = spec {
        return Ok(c * y);
    }
    let h_log = |u: f64| h_between(spec, 1.0, u.exp());
    let mut lo = 0.0;
    let mut hi = 1.0;
    while h_log(hi) < y {
        lo = hi;
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::InvalidArgument(format!(
                "H_Ψ⁻¹({y}) exceeds the representable range"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h_log(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn h_psi_inverse(y: f64, spec: &PsiSpec) -> Result<f64> {
    Ok(h_psi_inverse_log(y, spec)?.exp())
}

/// `ln[C₁(1 + V(x)) / Ψ(H_Ψ⁻¹(C₂ t))^{1−ε}]`.
pub fn predicted_bound_log(
    c1: f64,
    c2: f64,
    eps: f64,
    log_vx: f64,
    spec: &PsiSpec,
    t: f64,
) -> Result<f64> {
    if !(c1 > 0.0 && c2 > 0.0 && (0.0..1.0).contains(&eps) && t >= 0.0) {
        return Err(Error::InvalidArgument(
            "need C₁, C₂ > 0, ε ∈ [0,1), t ≥ 0".into(),
        ));
    }
    let log_h = h_psi_inverse_log(c2 * t, spec)?;
    let log_one_plus_v = if log_vx > 0.0 {
        log_vx + (-log_vx).exp().ln_1p()
    } else {
        log_vx.exp().ln_1p()
    };
    Ok(c1.ln() + log_one_plus_v - (1.0 - eps) * spec.log_eval_from_log(log_h))
}

pub fn predicted_bound(c1: f64, c2: f64, eps: f64, vx: f64, spec: &PsiSpec, t: f64) -> Result<f64> {
    Ok(predicted_bound_log(c1, c2, eps, vx.ln(), spec, t)?.exp())
}

/// `(|X_h(0)|, D(X_h))` for each sample path started at `x`; exploded
/// paths are dropped and counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSamples {
    pub x0_norm: f64,
    pub diameter: f64,
    pub endpoint_norms: Vec<f64>,
    pub diameters: Vec<f64>,
    pub n_exploded: usize,
}

impl StateSamples {
    pub fn n(&self) -> usize {
        self.endpoint_norms.len()
    }
}

/// Simulates `n_samples` paths from `x` up to `horizon`.
pub fn sample_after(
    model: &ModelSpec,
    x: &Segment,
    horizon: f64,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<StateSamples> {
    let ens = simulate_ensemble(
        model,
        |_| x.clone(),
        horizon,
        dt,
        n_samples,
        seed,
        &[horizon],
    )?;
    let segs = ens.at(0);
    Ok(StateSamples {
        x0_norm: norm(x.endpoint()),
        diameter: x.diameter(),
        endpoint_norms: segs.iter().map(|s| norm(s.endpoint())).collect(),
        diameters: segs.iter().map(|s| s.diameter()).collect(),
        n_exploded: ens.n_exploded(),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Monte-Carlo mean of `e^{L_i}` kept in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogMean {
    pub log_mean: f64,
    /// `ln` of the standard error of the mean (`-∞` when it is zero).
    pub log_se: f64,
    pub n: usize,
}

/// Streaming-free log-sum-exp mean and standard error of `e^{L_i}`.
pub fn log_mean_exp(logs: &[f64]) -> LogMean {
    let n = logs.len();
    if n == 0 {
        return LogMean {
            log_mean: f64::NAN,
            log_se: f64::NAN,
            n,
        };
    }
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    LogMean {
        log_mean: m + mean.ln(),
        log_se: m + (var / n as f64).sqrt().ln(),
        n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExVEstimate {
    pub log_v: f64,
    pub log_mean: f64,
    pub log_se: f64,
    pub n_used: usize,
    pub n_exploded: usize,
    /// More than 1% of paths exploded.
    pub unreliable: bool,
}

impl ExVEstimate {
    pub fn mean(&self) -> f64 {
        self.log_mean.exp()
    }

    /// Half-width of the ±2 standard error band.
    pub fn ci_half_width(&self) -> f64 {
        2.0 * self.log_se.exp()
    }

    /// `(Ê + 2 SE) / V(x)`.
    pub fn upper_ratio(&self) -> f64 {
        (self.log_mean - self.log_v).exp() + 2.0 * (self.log_se - self.log_v).exp()
    }
}

fn estimate_from_samples(spec: &LyapunovSpec, s: &StateSamples) -> ExVEstimate {
    let logs: Vec<f64> = s
        .endpoint_norms
        .iter()
        .zip(&s.diameters)
        .map(|(&a, &d)| spec.log_v(a, d))
        .collect();
    let lm = log_mean_exp(&logs);
    let total = s.n() + s.n_exploded;
    ExVEstimate {
        log_v: spec.log_v(s.x0_norm, s.diameter),
        log_mean: lm.log_mean,
        log_se: lm.log_se,
        n_used: s.n(),
        n_exploded: s.n_exploded,
        unreliable: s.n_exploded * 100 > total,
    }
}

/// Monte-Carlo estimate of `E_x V(X_h)`.
pub fn estimate_exv(
    model: &ModelSpec,
    spec: &LyapunovSpec,
    x: &Segment,
    horizon: f64,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<ExVEstimate> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "estimate_exv needs at least 100 samples, got {n_samples}"
        )));
    }
    let s = sample_after(model, x, horizon, n_samples, dt, seed)?;
    Ok(estimate_from_samples(spec, &s))
}

/// One scanned state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateRecord {
    pub x0_norm: f64,
    pub diameter: f64,
    pub log_v: f64,
    pub log_exv: f64,
    pub log_se: f64,
    /// `1 − (Ê + 2 SE)/V`; positive means `Ê < V` at two standard errors.
    pub margin: f64,
    /// `1 − Ψ(V)/V + C/V − (Ê + 2 SE)/V` when a Ψ was supplied.
    pub psi_margin: Option<f64>,
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub states: Vec<StateRecord>,
    /// Largest `c₁` with `Ê ≤ (1 − c₁)V` on every state (at 2 SE).
    pub c1: Option<f64>,
    /// Smallest `c₂` making `(1 − c₁/2)V + c₂` an upper bound on every state.
    pub c2_at_half_c1: Option<f64>,
    pub violations: Vec<usize>,
    pub psi_violations: Vec<usize>,
}

impl DriftReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "x0_norm",
            "diameter",
            "log_v",
            "log_exv",
            "log_se",
            "margin",
            "psi_margin",
        ])?;
        for s in &self.states {
            w.write_record([
                s.x0_norm.to_string(),
                s.diameter.to_string(),
                s.log_v.to_string(),
                s.log_exv.to_string(),
                s.log_se.to_string(),
                s.margin.to_string(),
                s.psi_margin.map(|m| m.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ψ margin in units of `V`, with `C` an additive constant.
fn psi_margin(psi: &PsiSpec, c: f64, e: &ExVEstimate) -> f64 {
    let psi_over_v = (psi.log_eval_from_log(e.log_v) - e.log_v).exp();
    1.0 - psi_over_v + c * (-e.log_v).exp() - e.upper_ratio()
}

/// Builds a drift report from pre-simulated state samples.
pub fn drift_report(
    spec: &LyapunovSpec,
    psi: Option<(&PsiSpec, f64)>,
    samples: &[StateSamples],
) -> DriftReport {
    let ests: Vec<ExVEstimate> = samples
        .iter()
        .map(|s| estimate_from_samples(spec, s))
        .collect();
    let states: Vec<StateRecord> = samples
        .iter()
        .zip(&ests)
        .map(|(s, e)| StateRecord {
            x0_norm: s.x0_norm,
            diameter: s.diameter,
            log_v: e.log_v,
            log_exv: e.log_mean,
            log_se: e.log_se,
            margin: 1.0 - e.upper_ratio(),
            psi_margin: psi.map(|(p, c)| psi_margin(p, c, e)),
            unreliable: e.unreliable,
        })
        .collect();
    let c1 = states.iter().map(|s| s.margin).reduce(f64::min);
    let c2_at_half_c1 = c1.filter(|c| *c > 0.0).map(|c1| {
        ests.iter()
            .map(|e| ((e.upper_ratio() - (1.0 - 0.5 * c1)) * e.log_v.exp()).max(0.0))
            .fold(0.0, f64::max)
    });
    let violations = states
        .iter()
        .enumerate()
        .filter(|(_, s)| !(s.margin > 0.0))
        .map(|(i, _)| i)
        .collect();
    let psi_violations = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.psi_margin.is_some_and(|m| !(m > 0.0)))
        .map(|(i, _)| i)
        .collect();
    DriftReport {
        states,
        c1,
        c2_at_half_c1,
        violations,
        psi_violations,
    }
}

/// Simulates `n_samples` unit-time paths from each state and reports the
/// drift margins. State `i` uses seed `seed + i`.
pub fn lyapunov_scan(
    model: &ModelSpec,
    spec: &LyapunovSpec,
    psi: Option<(&PsiSpec, f64)>,
    states: &[Segment],
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<DriftReport> {
    let samples = scan_samples(model, states, 1.0, n_samples, dt, seed)?;
    Ok(drift_report(spec, psi, &samples))
}

pub fn scan_samples(
    model: &ModelSpec,
    states: &[Segment],
    horizon: f64,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<StateSamples>> {
    states
        .iter()
        .enumerate()
        .map(|(i, x)| {
            sample_after(
                model,
                x,
                horizon,
                n_samples,
                dt,
                seed.wrapping_add(i as u64),
            )
        })
        .collect()
}

/// Coarse grid search over `(λ, γ)` maximizing the fitted `c₁`.
pub fn search_exp_spec(
    samples: &[StateSamples],
    beta: f64,
    lambdas: &[f64],
    gammas: &[f64],
) -> Result<(LyapunovExpSpec, DriftReport)> {
    let mut best: Option<(LyapunovExpSpec, DriftReport)> = None;
    for &lambda in lambdas {
        for &gamma in gammas {
            let spec = LyapunovExpSpec::new(lambda, gamma, beta)?;
            let report = drift_report(&LyapunovSpec::Exp(spec), None, samples);
            let better = match &best {
                None => true,
                Some((_, b)) => {
                    report.c1.unwrap_or(f64::NEG_INFINITY) > b.c1.unwrap_or(f64::NEG_INFINITY)
                }
            };
            if better {
                best = Some((spec, report));
            }
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty parameter grid".into()))
}

/// Checks on a geometric grid that `ψ(t)/ln t` and `κ(t)²/ψ(t)` increase.
pub fn psi_growth_ok(psi: &PowerFn, kappa: &KappaSpec) -> bool {
    let grid: Vec<f64> = (1..=12).map(|k| 10f64.powi(k)).collect();
    let r1: Vec<f64> = grid.iter().map(|&t| psi.eval(t) / t.ln()).collect();
    let r2: Vec<f64> = grid
        .iter()
        .map(|&t| kappa.eval(t).powi(2) / psi.eval(t))
        .collect();
    r1.windows(2).all(|w| w[1] > w[0]) && r2.windows(2).all(|w| w[1] > w[0])
}

/// Output of [`moment_bound_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub x0_norm: f64,
    pub diameter: f64,
    /// `ln Ê e^{λ D(X_1)}`.
    pub log_moment: f64,
    /// `ln Ê e^{λ₀ D(X_1)²}`.
    pub log_gauss_moment: f64,
    /// Empirical `ln P(D(X_1) ≥ z)` at three equally spaced `z`.
    pub tail: Vec<(f64, f64)>,
    /// Second difference of the log tail is nonpositive; absent when a
    /// tail probability is zero.
    pub tail_concave: Option<bool>,
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub lambda: f64,
    pub lambda0: f64,
    pub rows: Vec<MomentRow>,
    /// Slope of `ln(ln Ê e^{λD})` against `ln |x(0)|`.
    pub growth_exponent: Option<f64>,
    /// Smallest `C` with `ln Ê e^{λD} ≤ Cλ(|x(0)|^β + D^β + λ + 1)` on all rows.
    pub fitted_c: Option<f64>,
}

/// Estimates the exponential diameter moments after unit time from each
/// start. Start `i` uses seed `seed + i`.
pub fn moment_bound_check(
    model: &ModelSpec,
    starts: &[Segment],
    lambda: f64,
    lambda0: f64,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<MomentReport> {
    let beta = model
        .declared
        .beta
        .ok_or_else(|| Error::InvalidArgument("moment bound needs a declared β".into()))?;
    if !(model.diffusion.sup_bound().is_finite()) {
        return Err(Error::InvalidArgument(
            "moment bound needs a bounded diffusion".into(),
        ));
    }
    let samples = scan_samples(model, starts, 1.0, n_samples, dt, seed)?;
    let rows: Vec<MomentRow> = samples
        .par_iter()
        .map(|s| {
            let lm = log_mean_exp(&s.diameters.iter().map(|d| lambda * d).collect::<Vec<_>>());
            let lg = log_mean_exp(
                &s.diameters
                    .iter()
                    .map(|d| lambda0 * d * d)
                    .collect::<Vec<_>>(),
            );
            let n = s.n() as f64;
            let mean = s.diameters.iter().sum::<f64>() / n;
            let sd = (s.diameters.iter().map(|d| (d - mean).powi(2)).sum::<f64>()
                / (n - 1.0).max(1.0))
            .sqrt();
            let tail: Vec<(f64, f64)> = (1..=3)
                .map(|j| {
                    let z = mean + j as f64 * sd;
                    let p = s.diameters.iter().filter(|&&d| d >= z).count() as f64 / n;
                    (z, p.ln())
                })
                .collect();
            let tail_concave = if tail.iter().all(|t| t.1.is_finite()) && sd > 0.0 {
                Some(tail[2].1 - 2.0 * tail[1].1 + tail[0].1 <= 0.0)
            } else {
                None
            };
            MomentRow {
                x0_norm: s.x0_norm,
                diameter: s.diameter,
                log_moment: lm.log_mean,
                log_gauss_moment: lg.log_mean,
                tail,
                tail_concave,
                finite: lm.log_mean.is_finite() && lg.log_mean.is_finite(),
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.x0_norm > 0.0 && r.log_moment > 0.0)
        .map(|r| (r.x0_norm.ln(), r.log_moment.ln()))
        .collect();
    let growth_exponent = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };
    let fitted_c = rows
        .iter()
        .filter(|r| r.finite)
        .map(|r| {
            r.log_moment / (lambda * (r.x0_norm.powf(beta) + r.diameter.powf(beta) + lambda + 1.0))
        })
        .reduce(f64::max);
    Ok(MomentReport {
        lambda,
        lambda0,
        rows,
        growth_exponent,
        fitted_c,
    })
}
