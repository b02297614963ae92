//! Configs and runners behind the single-purpose CLI subcommands. Each
//! config file is TOML with top-level `seed` and `out_dir`; unknown keys are
//! rejected by name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{config_hash, ExperimentReport, RunProvenance, Table, Verdict, CODE_VERSION};
use crate::conditions::{
    check_a4_structure, check_growth, check_nondegeneracy, check_one_sided_lipschitz,
    vk_margin_scan, AssumptionReport, DiameterPolicy, SegmentSamplerSpec, Shape, VkMode,
};
use crate::error::{Error, Result};
use crate::integrator::simulate_ensemble;
use crate::lyapunov::{
    drift_report, moment_bound_check, scan_samples, search_exp_spec, LyapunovSpec,
    LyapunovSubexpSpec, PowerFn, PsiSpec,
};
use crate::metrics::{
    convergence_curve, derive_seed, estimate_invariant_law, fit_rate, prefer_kind, write_curve_csv,
    CurveConfig, CurvePoint, CurveTarget, RateKind,
};
use crate::models::{KappaSpec, ModelConfig, ModelSpec};
use crate::segment::{Grid, Segment};

use super::reconstruction::ReconstructionConfig;

/// A report plus extra text artifacts written next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutput {
    pub report: ExperimentReport,
    pub files: BTreeMap<String, String>,
}

impl TaskOutput {
    fn new(report: ExperimentReport) -> Self {
        Self {
            report,
            files: BTreeMap::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.report.write(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Shared handling of `seed` and `out_dir`.
pub trait TaskConfig: Serialize + DeserializeOwned + Clone {
    const NAME: &'static str;
    fn seed_mut(&mut self) -> &mut u64;
    fn out_dir_mut(&mut self) -> &mut PathBuf;

    fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Hash of the config with the output directory blanked.
    fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        *c.out_dir_mut() = PathBuf::new();
        config_hash(&c)
    }

    fn provenance(&self) -> Result<RunProvenance> {
        let mut c = self.clone();
        Ok(RunProvenance {
            config_hash: self.hash()?,
            seed: *c.seed_mut(),
            code_version: CODE_VERSION.into(),
        })
    }

    fn run_dir(&self) -> Result<PathBuf> {
        let mut c = self.clone();
        Ok(c.out_dir_mut()
            .join(format!("{}-{}", Self::NAME, self.hash()?)))
    }
}

macro_rules! task_config {
    ($t:ty, $name:literal) => {
        impl TaskConfig for $t {
            const NAME: &'static str = $name;
            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
            fn out_dir_mut(&mut self) -> &mut PathBuf {
                &mut self.out_dir
            }
        }
    };
}

fn runs() -> PathBuf {
    PathBuf::from("runs")
}
fn n_grid_default() -> usize {
    100
}
fn dt_default() -> f64 {
    0.01
}
fn origin() -> Vec<f64> {
    vec![0.0]
}

fn constant_start(model: &ModelSpec, n_grid: usize, value: &[f64]) -> Result<Segment> {
    if value.len() != model.dim_d {
        return Err(Error::Config(format!(
            "start has {} components, model dimension is {}",
            value.len(),
            model.dim_d
        )));
    }
    Ok(Segment::constant(Grid::new(model.r, n_grid)?, value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "runs")]
    pub out_dir: PathBuf,
    pub model: ModelConfig,
    /// Constant initial segment.
    #[serde(default = "origin")]
    pub start: Vec<f64>,
    #[serde(default = "n_grid_default")]
    pub n_grid: usize,
    #[serde(default = "dt_default")]
    pub dt: f64,
    pub t_end: f64,
    pub n_paths: usize,
    /// Snapshot times; empty means `[t_end]`.
    #[serde(default)]
    pub times: Vec<f64>,
}
task_config!(SimulateConfig, "simulate");

pub fn run_simulate(cfg: &SimulateConfig) -> Result<TaskOutput> {
    let model = cfg.model.build()?;
    let x0 = constant_start(&model, cfg.n_grid, &cfg.start)?;
    let times = if cfg.times.is_empty() {
        vec![cfg.t_end]
    } else {
        cfg.times.clone()
    };
    let e = simulate_ensemble(
        &model,
        |_| x0.clone(),
        cfg.t_end,
        cfg.dt,
        cfg.n_paths,
        cfg.seed,
        &times,
    )?;
    let mut report = ExperimentReport::new("simulate", cfg.provenance()?);
    let mut table = Table::new(&["t", "n_alive", "mean_x0", "mean_sq_x0", "mean_diameter"]);
    for (j, &t) in times.iter().enumerate() {
        let s = e.at(j);
        let n = s.len().max(1) as f64;
        table.push(vec![
            t,
            s.len() as f64,
            s.iter().map(|x| x.endpoint()[0]).sum::<f64>() / n,
            s.iter()
                .map(|x| x.endpoint().iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                / n,
            s.iter().map(|x| x.diameter()).sum::<f64>() / n,
        ]);
    }
    report.tables.insert("summary".into(), table);
    report.metric("n_exploded", e.n_exploded() as f64);
    report.verdicts.push(Verdict::new(
        "no_explosion",
        e.n_exploded() == 0,
        format!("{} of {} paths exploded", e.n_exploded(), cfg.n_paths),
    ));
    let mut out = TaskOutput::new(report);
    let mut csv = Vec::new();
    e.write_csv(&mut csv)?;
    out.files.insert(
        "ensemble.csv".into(),
        String::from_utf8(csv).expect("csv is utf-8"),
    );
    out.files.insert(
        "manifest.json".into(),
        serde_json::to_string_pretty(&e.manifest(&model))?,
    );
    Ok(out)
}

/// Sampler settings without the memory length and seed, which come from
/// the model and the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub n_grid: usize,
    pub radius: (f64, f64),
    pub diameter: DiameterPolicy,
    pub shapes: Vec<Shape>,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            n_grid: 100,
            radius: (1.0, 1e3),
            diameter: DiameterPolicy::Absolute { range: (0.0, 10.0) },
            shapes: vec![
                Shape::ConstantPlusBridge,
                Shape::PiecewiseLinear,
                Shape::LastPointJump,
            ],
        }
    }
}

impl SamplerSettings {
    pub fn spec(&self, model: &ModelSpec, seed: u64) -> SegmentSamplerSpec {
        SegmentSamplerSpec {
            r: model.r,
            n_grid: self.n_grid,
            dim: model.dim_d,
            radius: self.radius,
            diameter: self.diameter,
            shapes: self.shapes.clone(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    OneSidedLipschitz,
    Nondegeneracy,
    Growth {
        beta: f64,
    },
    /// `⟨f(x), x(0)⟩ ≤ −σ|x(0)|^a` with `a = 1`, or `a = alpha` when given.
    Vk {
        alpha: Option<f64>,
        sigma: f64,
        big_m: f64,
        kappa: Option<KappaSpec>,
    },
    A4Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "runs")]
    pub out_dir: PathBuf,
    pub model: ModelConfig,
    #[serde(default = "thousand")]
    pub n_samples: usize,
    #[serde(default)]
    pub sampler: SamplerSettings,
    pub checks: Vec<Check>,
}
task_config!(VerifyConfig, "verify");

fn thousand() -> usize {
    1000
}

fn record_assumption(out: &mut TaskOutput, name: &str, a: &AssumptionReport) -> Result<()> {
    out.report
        .metric(&format!("{name}/violations"), a.n_violations as f64);
    out.report
        .metric(&format!("{name}/worst_margin"), a.worst_margin);
    for (k, v) in &a.fitted {
        out.report.metric(&format!("{name}/{k}"), *v);
    }
    if a.growth_flagged {
        out.report
            .notes
            .push(format!("{name}: fitted ratio grows with scale"));
    }
    if !a.witnesses.is_empty() {
        let mut buf = Vec::new();
        a.write_witnesses_csv(&mut buf)?;
        out.files.insert(
            format!("{name}_witnesses.csv"),
            String::from_utf8(buf).expect("csv is utf-8"),
        );
    }
    Ok(())
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<TaskOutput> {
    let model = cfg.model.build()?;
    let mut out = TaskOutput::new(ExperimentReport::new("verify", cfg.provenance()?));
    for (k, check) in cfg.checks.iter().enumerate() {
        let sampler = cfg.sampler.spec(&model, derive_seed(cfg.seed, k as u64));
        match check {
            Check::OneSidedLipschitz => {
                let a = check_one_sided_lipschitz(&model, cfg.n_samples, &sampler)?;
                record_assumption(&mut out, "one_sided_lipschitz", &a)?;
                let ok = a.passed() && !a.growth_flagged;
                out.report.verdicts.push(Verdict::new(
                    "one_sided_lipschitz",
                    ok,
                    format!(
                        "{} violations, growth flagged: {}",
                        a.n_violations, a.growth_flagged
                    ),
                ));
            }
            Check::Nondegeneracy => {
                let a = check_nondegeneracy(&model, &sampler, cfg.n_samples)?;
                record_assumption(&mut out, "nondegeneracy", &a)?;
                out.report.verdicts.push(Verdict::new(
                    "nondegeneracy",
                    a.passed(),
                    format!("{} violations", a.n_violations),
                ));
            }
            Check::Growth { beta } => {
                let a = check_growth(&model, *beta, &sampler, cfg.n_samples)?;
                record_assumption(&mut out, "growth", &a)?;
                let ok = a.passed() && !a.growth_flagged;
                out.report.verdicts.push(Verdict::new(
                    "growth",
                    ok,
                    format!(
                        "{} violations, growth flagged: {}",
                        a.n_violations, a.growth_flagged
                    ),
                ));
            }
            Check::Vk {
                alpha,
                sigma,
                big_m,
                kappa,
            } => {
                let mode = alpha.map_or(VkMode::A2, |alpha| VkMode::A3 { alpha });
                let vk = vk_margin_scan(
                    &model,
                    mode,
                    *sigma,
                    *big_m,
                    *kappa,
                    &sampler,
                    cfg.n_samples,
                )?;
                record_assumption(&mut out, "vk", &vk.report)?;
                out.report
                    .metric("vk/outside_region", vk.n_outside_region as f64);
                if vk.kappa_growth_ok == Some(false) {
                    out.report
                        .notes
                        .push("vk: κ does not outgrow the required rate".into());
                }
                let ok = vk.report.passed() && vk.m_star_finite;
                out.report.verdicts.push(Verdict::new(
                    "vk",
                    ok,
                    format!(
                        "{} violations, σ* = {:.4}, M* = {:.3}",
                        vk.report.n_violations, vk.sigma_star, vk.m_star
                    ),
                ));
            }
            Check::A4Structure => match check_a4_structure(&model) {
                Ok(past_independent) => {
                    out.report.verdicts.push(Verdict::new(
                        "a4_structure",
                        true,
                        format!("diffusion past-independent: {past_independent}"),
                    ));
                }
                Err(Error::StructureMismatch(msg)) => {
                    out.report
                        .verdicts
                        .push(Verdict::new("a4_structure", false, msg))
                }
                Err(e) => return Err(e),
            },
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum LyapunovForm {
    /// `V = exp{λ|x(0)| + (D − γ|x(0)|^β)₊}`, grid-searched over `(λ, γ)`.
    Exp { lambdas: Vec<f64>, gammas: Vec<f64> },
    /// `log V = λ₁|x(0)|^α + λ₂(D² − ψ(|x(0)|))₊`; `psi_c` adds the
    /// `E V(X₁) ≤ V − Ψ(V) + C` check with that `C`.
    Subexp {
        lambda1: f64,
        lambda2: f64,
        alpha: f64,
        psi: PowerFn,
        psi_c: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentSettings {
    /// Constant starts at these levels.
    pub radii: Vec<f64>,
    pub lambda: f64,
    pub lambda0: f64,
    pub n_samples: usize,
    /// Passes when the growth exponent is at most `β + excess`.
    pub excess: f64,
}

impl Default for MomentSettings {
    fn default() -> Self {
        Self {
            radii: vec![10.0, 20.0, 40.0, 80.0],
            lambda: 1.0,
            lambda0: 0.01,
            n_samples: 1000,
            excess: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovScanConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "runs")]
    pub out_dir: PathBuf,
    pub model: ModelConfig,
    pub n_states: usize,
    #[serde(default = "thousand")]
    pub n_samples: usize,
    #[serde(default = "dt_default")]
    pub dt: f64,
    #[serde(default)]
    pub sampler: SamplerSettings,
    pub lyapunov: LyapunovForm,
    pub moment: Option<MomentSettings>,
}
task_config!(LyapunovScanConfig, "lyapunov_scan");

pub fn run_lyapunov_scan(cfg: &LyapunovScanConfig) -> Result<TaskOutput> {
    let model = cfg.model.build()?;
    let sampler = cfg.sampler.spec(&model, derive_seed(cfg.seed, 0));
    let states: Vec<Segment> = (0..cfg.n_states)
        .map(|i| crate::conditions::sample_segment(&sampler, i))
        .collect::<Result<_>>()?;
    let samples = scan_samples(
        &model,
        &states,
        1.0,
        cfg.n_samples,
        cfg.dt,
        derive_seed(cfg.seed, 1),
    )?;
    let mut out = TaskOutput::new(ExperimentReport::new("lyapunov_scan", cfg.provenance()?));
    let dr = match &cfg.lyapunov {
        LyapunovForm::Exp { lambdas, gammas } => {
            let beta = model.declared.beta.ok_or_else(|| {
                Error::Config("the exponential form needs a model with declared β".into())
            })?;
            let (spec, dr) = search_exp_spec(&samples, beta, lambdas, gammas)?;
            out.report.metric("lambda", spec.lambda);
            out.report.metric("gamma", spec.gamma);
            dr
        }
        LyapunovForm::Subexp {
            lambda1,
            lambda2,
            alpha,
            psi,
            psi_c,
        } => {
            let spec =
                LyapunovSpec::Subexp(LyapunovSubexpSpec::new(*lambda1, *lambda2, *alpha, *psi)?);
            let psi_spec = PsiSpec::subexp(*alpha)?;
            let dr = drift_report(&spec, psi_c.map(|c| (&psi_spec, c)), &samples);
            if psi_c.is_some() {
                out.report.verdicts.push(Verdict::new(
                    "psi_drift",
                    dr.psi_violations.is_empty(),
                    format!(
                        "{} of {} states violate the Ψ drift",
                        dr.psi_violations.len(),
                        dr.states.len()
                    ),
                ));
            }
            dr
        }
    };
    let c1 = dr.c1.unwrap_or(f64::NEG_INFINITY);
    out.report.metric("c1", c1);
    if let Some(c2) = dr.c2_at_half_c1 {
        out.report.metric("c2_at_half_c1", c2);
    }
    let unreliable = dr.states.iter().filter(|s| s.unreliable).count();
    if unreliable > 0 {
        out.report.notes.push(format!(
            "{unreliable} states have unreliable tail estimates"
        ));
    }
    out.report.verdicts.push(Verdict::new(
        "drift",
        c1 > 0.0 && dr.violations.is_empty(),
        format!(
            "c₁ = {c1:.4e}, {} of {} states violate at 2 SE",
            dr.violations.len(),
            dr.states.len()
        ),
    ));
    let mut buf = Vec::new();
    dr.write_csv(&mut buf)?;
    out.files.insert(
        "drift.csv".into(),
        String::from_utf8(buf).expect("csv is utf-8"),
    );

    if let Some(m) = &cfg.moment {
        let beta = model.declared.beta.ok_or_else(|| {
            Error::Config("the moment check needs a model with declared β".into())
        })?;
        let starts: Vec<Segment> = m
            .radii
            .iter()
            .map(|&r| constant_start(&model, cfg.sampler.n_grid, &vec![r; model.dim_d]))
            .collect::<Result<_>>()?;
        let mr = moment_bound_check(
            &model,
            &starts,
            m.lambda,
            m.lambda0,
            m.n_samples,
            cfg.dt,
            derive_seed(cfg.seed, 2),
        )?;
        let mut table = Table::new(&["x0_norm", "diameter", "log_moment", "log_gauss_moment"]);
        for r in &mr.rows {
            table.push(vec![
                r.x0_norm,
                r.diameter,
                r.log_moment,
                r.log_gauss_moment,
            ]);
        }
        out.report.tables.insert("moments".into(), table);
        let g = mr.growth_exponent.unwrap_or(f64::INFINITY);
        out.report.metric("moment/growth_exponent", g);
        if let Some(c) = mr.fitted_c {
            out.report.metric("moment/fitted_c", c);
        }
        out.report.verdicts.push(Verdict::new(
            "moment_growth",
            g <= beta + m.excess,
            format!(
                "growth exponent {g:.4} vs β + {} = {:.4}",
                m.excess,
                beta + m.excess
            ),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveTargetConfig {
    /// Second ensemble from a constant segment.
    Start { value: Vec<f64> },
    /// Samples of one long path from the zero segment.
    Invariant { burn_in: f64, spacing: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "runs")]
    pub out_dir: PathBuf,
    pub model: ModelConfig,
    #[serde(default = "origin")]
    pub start: Vec<f64>,
    pub target: CurveTargetConfig,
    #[serde(default = "n_grid_default")]
    pub n_grid: usize,
    #[serde(default = "dt_default")]
    pub dt: f64,
    pub n_paths: usize,
    pub times: Vec<f64>,
    pub rho: f64,
    /// α of the competing subexponential fit.
    pub alpha: Option<f64>,
}
task_config!(ConvergeConfig, "converge");

fn record_fits(report: &mut ExperimentReport, curve: &[CurvePoint], alpha: Option<f64>) {
    let fits = match alpha {
        Some(a) => prefer_kind(curve, a).map(|(b, o)| vec![b, o]),
        None => fit_rate(curve, RateKind::Exponential).map(|b| vec![b]),
    };
    match fits {
        Ok(fits) => {
            for f in &fits {
                let key = match f.kind {
                    RateKind::Exponential => "exponential",
                    RateKind::Subexponential { .. } => "subexponential",
                };
                report.metric(&format!("fit/{key}_lambda2"), f.lambda2);
                report.metric(&format!("fit/{key}_r2"), f.r2);
            }
            let best = &fits[0];
            report.verdicts.push(Verdict::new(
                "rate_fit",
                best.lambda2 > 0.0,
                format!(
                    "preferred {:?}: λ₂ = {:.4}, R² = {:.4}, {} points",
                    best.kind, best.lambda2, best.r2, best.n_used
                ),
            ));
        }
        Err(e) => report
            .verdicts
            .push(Verdict::new("rate_fit", false, e.to_string())),
    }
}

pub fn run_converge(cfg: &ConvergeConfig) -> Result<TaskOutput> {
    let model = cfg.model.build()?;
    let x = constant_start(&model, cfg.n_grid, &cfg.start)?;
    let curve_cfg = CurveConfig::new(cfg.times.clone(), cfg.n_paths, cfg.dt, cfg.rho, cfg.seed);
    let curve = match &cfg.target {
        CurveTargetConfig::Start { value } => {
            let y = constant_start(&model, cfg.n_grid, value)?;
            convergence_curve(&model, &x, CurveTarget::Start(&y), &curve_cfg)?
        }
        CurveTargetConfig::Invariant { burn_in, spacing } => {
            let zero = Segment::zeros(x.grid(), model.dim_d);
            let law = estimate_invariant_law(
                &model,
                &zero,
                *burn_in,
                cfg.n_paths,
                *spacing,
                cfg.dt,
                derive_seed(cfg.seed, 2),
            )?;
            convergence_curve(&model, &x, CurveTarget::Law(&law), &curve_cfg)?
        }
    };
    let mut report = ExperimentReport::new("converge", cfg.provenance()?);
    record_fits(&mut report, &curve, cfg.alpha);
    let mut out = TaskOutput::new(report);
    let mut buf = Vec::new();
    write_curve_csv(&curve, &mut buf)?;
    out.files.insert(
        "curve.csv".into(),
        String::from_utf8(buf).expect("csv is utf-8"),
    );
    Ok(out)
}

/// Reads a curve with columns `t`, `W` and optionally `CI` (any case).
pub fn read_curve_csv<R: std::io::Read>(input: R) -> Result<Vec<CurvePoint>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(jt), Some(jw)) = (col("t"), col("w")) else {
        return Err(Error::Config(format!(
            "curve CSV needs `t` and `W` columns, found {headers:?}"
        )));
    };
    let jc = col("ci");
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    Error::Config(format!(
                        "row {}: column {} is not a number",
                        k + 1,
                        headers[j]
                    ))
                })
        };
        out.push(CurvePoint {
            t: num(jt)?,
            w: num(jw)?,
            ci: jc.map(num).transpose()?.unwrap_or(0.0),
        });
    }
    Ok(out)
}

/// Fits a stored curve; the provenance hash covers the curve itself.
pub fn fit_curve_report(curve: &[CurvePoint], alpha: Option<f64>) -> Result<ExperimentReport> {
    let prov = RunProvenance {
        config_hash: config_hash(&(curve, alpha))?,
        seed: 0,
        code_version: CODE_VERSION.into(),
    };
    let mut report = ExperimentReport::new("fit_rate", prov);
    record_fits(&mut report, curve, alpha);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "runs")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub reconstruction: ReconstructionConfig,
}
task_config!(ReconstructConfig, "reconstruct");

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: runs(),
            reconstruction: ReconstructionConfig::default(),
        }
    }
}

pub fn run_reconstruct(cfg: &ReconstructConfig) -> Result<TaskOutput> {
    Ok(TaskOutput::new(super::reconstruction_demo(
        &cfg.reconstruction,
        cfg.seed,
        cfg.provenance()?,
    )?))
}
