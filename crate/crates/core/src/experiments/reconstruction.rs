//! Recovering the previous unit of history from the quadratic variation of
//! an observed window, for `dX = f(X(t-1)) dt + g(X(t-1)) dW` with strictly
//! increasing `g`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_positive, ExperimentReport, RunProvenance, Table, Verdict};
use crate::error::{Error, Result};
use crate::integrator::{simulate_path, RngStreamSpec};
use crate::metrics::derive_seed;
use crate::models::{make_reconstruction_model, MonotoneMap, ScalarMap};
use crate::segment::{Grid, Segment};

/// One recovered history value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovered {
    /// Time relative to the start of the observed window, in `[-1, 0]`.
    pub t: f64,
    pub x: f64,
    pub clipped: bool,
}

/// Sliding-window estimate of `x(t-1)` from observations `obs[j] = X(j dt)`
/// on a unit window: over `delta_steps` increments the realized quadratic
/// variation divided by the window width estimates `g(X(t-1))²` at the
/// window midpoint.
pub fn reconstruct_from_window(
    obs: &[f64],
    dt: f64,
    delta_steps: usize,
    stride: usize,
    g: &MonotoneMap,
) -> Result<Vec<Recovered>> {
    if delta_steps == 0 || stride == 0 || obs.len() < delta_steps + 1 {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ delta_steps < {} and stride ≥ 1, got {delta_steps}, {stride}",
            obs.len()
        )));
    }
    let mut prefix = Vec::with_capacity(obs.len());
    prefix.push(0.0);
    for w in obs.windows(2) {
        let d = w[1] - w[0];
        prefix.push(prefix.last().unwrap() + d * d);
    }
    let width = delta_steps as f64 * dt;
    let mut out = Vec::new();
    let mut j = 0;
    while j + delta_steps < obs.len() {
        let qv = prefix[j + delta_steps] - prefix[j];
        let (x, clipped) = g.inverse((qv / width).sqrt());
        out.push(Recovered {
            t: (j as f64 + 0.5 * delta_steps as f64) * dt - 1.0,
            x,
            clipped,
        });
        j += stride;
    }
    Ok(out)
}

/// One refinement level: step `dt` and window `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level {
    pub dt: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionConfig {
    pub g: MonotoneMap,
    pub drift: ScalarMap,
    /// Integer observation time; the window `[n_obs, n_obs + 1]` is observed.
    pub n_obs: usize,
    /// Constant initial segment.
    pub start: f64,
    /// Refined in order; the window holds `delta / dt` increments, and the
    /// sampling error falls only when that count grows.
    pub levels: Vec<Level>,
    pub n_paths: usize,
    /// Windows start every `delta / stride_div`.
    pub stride_div: usize,
    /// Recovered values are clamped to `[-clip, clip]`.
    pub clip: f64,
    pub rmse_threshold: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            g: MonotoneMap::tanh(1.0, 0.5),
            drift: ScalarMap::Linear { slope: -1.0 },
            n_obs: 1,
            start: 0.0,
            levels: vec![
                Level {
                    dt: 1e-4,
                    delta: 1e-2,
                },
                Level {
                    dt: 1.25e-5,
                    delta: 5e-3,
                },
                Level {
                    dt: 1.5625e-6,
                    delta: 2.5e-3,
                },
            ],
            n_paths: 64,
            stride_div: 2,
            clip: 3.0,
            rmse_threshold: 0.2,
        }
    }
}

fn steps(x: f64, dt: f64, what: &str) -> Result<usize> {
    let n = (x / dt).round();
    if n < 1.0 || (n * dt - x).abs() > 1e-9 * x {
        return Err(Error::Config(format!(
            "{what} = {x} is not a multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}

struct LevelResult {
    rmse: f64,
    max_err: f64,
    n_points: usize,
    n_clipped: usize,
}

fn run_level(
    cfg: &ReconstructionConfig,
    level: Level,
    seed: u64,
) -> Result<(LevelResult, Vec<(f64, f64, f64)>)> {
    check_positive("dt", level.dt)?;
    check_positive("delta", level.delta)?;
    let n_grid = steps(1.0, level.dt, "memory length")?;
    let delta_steps = steps(level.delta, level.dt, "delta")?;
    let stride = (delta_steps / cfg.stride_div.max(1)).max(1);
    let model = make_reconstruction_model(cfg.drift.clone(), cfg.g.clone())?;
    let grid = Grid::new(1.0, n_grid)?;
    let x0 = Segment::constant(grid, &[cfg.start]);
    let t_obs = cfg.n_obs as f64;
    let times = [t_obs, t_obs + 1.0];
    let per_path: Vec<(Vec<f64>, usize, Vec<(f64, f64, f64)>)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let tr = simulate_path(
                &model,
                &x0,
                t_obs + 1.0,
                level.dt,
                RngStreamSpec::new(seed, i as u64),
                &times,
            )?;
            if let Some(t) = tr.exploded_at {
                return Err(Error::Exploded { t });
            }
            let truth = &tr.states[0];
            let obs = &tr.states[1];
            let rec = reconstruct_from_window(obs.values(), level.dt, delta_steps, stride, &cfg.g)?;
            let mut errs = Vec::with_capacity(rec.len());
            let mut trace = Vec::new();
            let mut clipped = 0;
            for r in &rec {
                let x = truth.eval_at(r.t)?[0];
                let xh = r.x.clamp(-cfg.clip, cfg.clip);
                errs.push(xh - x);
                clipped += (r.clipped || xh != r.x) as usize;
                if i == 0 {
                    trace.push((r.t + t_obs, x, xh));
                }
            }
            Ok((errs, clipped, trace))
        })
        .collect::<Result<_>>()?;
    let mut sq = 0.0;
    let mut n = 0;
    let mut max_err: f64 = 0.0;
    let mut clipped = 0;
    for (errs, c, _) in &per_path {
        for e in errs {
            sq += e * e;
            max_err = max_err.max(e.abs());
        }
        n += errs.len();
        clipped += c;
    }
    let trace = per_path.into_iter().next().map(|p| p.2).unwrap_or_default();
    Ok((
        LevelResult {
            rmse: (sq / n as f64).sqrt(),
            max_err,
            n_points: n,
            n_clipped: clipped,
        },
        trace,
    ))
}

pub fn reconstruction_demo(
    cfg: &ReconstructionConfig,
    seed: u64,
    prov: RunProvenance,
) -> Result<ExperimentReport> {
    if cfg.levels.is_empty() || cfg.n_paths == 0 {
        return Err(Error::Config("need at least one level and one path".into()));
    }
    check_positive("rmse_threshold", cfg.rmse_threshold)?;
    check_positive("clip", cfg.clip)?;
    let mut report = ExperimentReport::new("reconstruction", prov);
    let mut summary = Table::new(&[
        "level",
        "dt",
        "delta",
        "rmse",
        "max_err",
        "n_points",
        "n_clipped",
    ]);
    let mut traces = Table::new(&["level", "t", "truth", "recovered"]);
    let mut rmses = Vec::new();
    for (k, &level) in cfg.levels.iter().enumerate() {
        let (res, trace) = run_level(cfg, level, derive_seed(seed, 60 + k as u64))?;
        summary.push(vec![
            k as f64,
            level.dt,
            level.delta,
            res.rmse,
            res.max_err,
            res.n_points as f64,
            res.n_clipped as f64,
        ]);
        for (t, x, xh) in trace {
            traces.push(vec![k as f64, t, x, xh]);
        }
        report.metric(&format!("level{k}/rmse"), res.rmse);
        if res.n_clipped > 0 {
            report.notes.push(format!(
                "level {k}: {} estimates fell outside the range of g and were clipped",
                res.n_clipped
            ));
        }
        rmses.push(res.rmse);
    }
    let decreasing = rmses.windows(2).all(|w| w[1] < w[0]);
    let last = *rmses.last().unwrap();
    report.verdicts.push(Verdict::new(
        "rmse_decreasing",
        decreasing,
        format!("RMSE by level: {rmses:.4?}"),
    ));
    report.verdicts.push(Verdict::new(
        "rmse_final",
        last < cfg.rmse_threshold,
        format!("final RMSE {last:.4} vs threshold {}", cfg.rmse_threshold),
    ));
    report.tables.insert("summary".into(), summary);
    report.tables.insert("trace".into(), traces);
    Ok(report)
}
