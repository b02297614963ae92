//! Sampled checks of the drift and diffusion assumptions: one-sided
//! Lipschitz, non-degeneracy, sublinear growth, the restricted
//! inward-drift condition and the structural diffusion check.
//!
//! Universal conditions cannot be verified by sampling, only falsified, so
//! the sampler is stratified over radius and diameter and includes an
//! adversarial sign-flipped shape.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Ensemble;
use crate::models::{KappaSpec, ModelSpec};
use crate::segment::{Grid, Segment};

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const SQRT2_FRAC: f64 = std::f64::consts::SQRT_2 - 1.0;

/// Profile of the fluctuation added to the level `u R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Random walk pinned to zero at `t = 0`.
    ConstantPlusBridge,
    /// Random piecewise-linear path with four pieces, zero at `t = 0`.
    PiecewiseLinear,
    /// Constant on `[-r, 0)` with a jump at `t = 0`.
    LastPointJump,
    /// Straight line from `-x(0)` to `x(0)`; its diameter is `2R` whatever
    /// the policy asks.
    SignFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiameterPolicy {
    /// `D = f κ(R)` with `f` in `frac`.
    RelativeToKappa { kappa: KappaSpec, frac: (f64, f64) },
    /// `D` in `range`.
    Absolute { range: (f64, f64) },
    /// `D` up to `max_factor · R`; the only policy admitting sign flips.
    Unrestricted { max_factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSamplerSpec {
    pub r: f64,
    pub n_grid: usize,
    pub dim: usize,
    /// Range of `|x(0)|`, stratified on a log scale when `lo > 0`.
    pub radius: (f64, f64),
    pub diameter: DiameterPolicy,
    /// Sample `i` uses `shapes[i % len]`.
    pub shapes: Vec<Shape>,
    pub seed: u64,
}

impl SegmentSamplerSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.r, self.n_grid)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.radius;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid radius range ({lo}, {hi})"
            )));
        }
        if self.shapes.is_empty() || self.dim == 0 {
            return Err(Error::InvalidArgument(
                "sampler needs at least one shape and dim ≥ 1".into(),
            ));
        }
        match self.diameter {
            DiameterPolicy::RelativeToKappa { frac: (a, b), .. }
            | DiameterPolicy::Absolute { range: (a, b) } => {
                if !(a >= 0.0 && b >= a && b.is_finite()) {
                    return Err(Error::Infeasible(format!(
                        "diameter range ({a}, {b}) is not a valid interval"
                    )));
                }
            }
            DiameterPolicy::Unrestricted { max_factor } => {
                if !(max_factor >= 0.0 && max_factor.is_finite()) {
                    return Err(Error::Infeasible(format!(
                        "invalid max_factor {max_factor}"
                    )));
                }
            }
        }
        if self.shapes.contains(&Shape::SignFlip)
            && !matches!(self.diameter, DiameterPolicy::Unrestricted { .. })
        {
            return Err(Error::Infeasible(
                "sign-flipped segments have D = 2|x(0)| and need an unrestricted diameter policy"
                    .into(),
            ));
        }
        Ok(())
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// Builds a profile with zero endpoint, time-major, `n_nodes × dim`.
fn profile(shape: Shape, rng: &mut ChaCha8Rng, n_nodes: usize, dim: usize) -> Vec<f64> {
    let mut p = vec![0.0; n_nodes * dim];
    match shape {
        Shape::ConstantPlusBridge => {
            // walk backwards from the endpoint
            for i in (0..n_nodes - 1).rev() {
                for k in 0..dim {
                    p[i * dim + k] = p[(i + 1) * dim + k] + rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        Shape::PiecewiseLinear => {
            let knots: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    (0..dim)
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            let n = (n_nodes - 1) as f64;
            for i in 0..n_nodes - 1 {
                let s = i as f64 / n * 4.0;
                let j = (s.floor() as usize).min(3);
                let w = s - j as f64;
                for k in 0..dim {
                    let a = knots[j][k];
                    let b = if j == 3 { 0.0 } else { knots[j + 1][k] };
                    p[i * dim + k] = a + w * (b - a);
                }
            }
        }
        Shape::LastPointJump => {
            let v = unit_vector(rng, dim);
            for i in 0..n_nodes - 1 {
                p[i * dim..(i + 1) * dim].copy_from_slice(&v);
            }
        }
        Shape::SignFlip => {}
    }
    p
}

fn profile_diameter(p: &[f64], dim: usize, grid: Grid) -> f64 {
    Segment::from_values(grid, dim, p.to_vec())
        .map(|s| s.diameter())
        .unwrap_or(0.0)
}

/// Deterministic sample `i` of the sampler.
pub fn sample_segment(spec: &SegmentSamplerSpec, i: usize) -> Result<Segment> {
    spec.validate()?;
    let grid = spec.grid()?;
    let (n_nodes, dim) = (grid.n_nodes(), spec.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(i as u64);
    let u = unit_vector(&mut rng, dim);

    let (lo, hi) = spec.radius;
    let v = frac(0.5 + i as f64 * GOLDEN);
    let radius = if lo > 0.0 {
        lo * (hi / lo).powf(v)
    } else {
        lo + (hi - lo) * v
    };
    let f = frac(i as f64 * SQRT2_FRAC + 0.25 * rng.random::<f64>());
    let target = match spec.diameter {
        DiameterPolicy::RelativeToKappa {
            kappa,
            frac: (a, b),
        } => kappa.eval(radius) * (a + (b - a) * f),
        DiameterPolicy::Absolute { range: (a, b) } => a + (b - a) * f,
        DiameterPolicy::Unrestricted { max_factor } => max_factor * radius * f,
    };
    let shape = spec.shapes[i % spec.shapes.len()];

    let mut values = vec![0.0; n_nodes * dim];
    if shape == Shape::SignFlip {
        for j in 0..n_nodes {
            let s = 2.0 * j as f64 / (n_nodes - 1) as f64 - 1.0;
            for k in 0..dim {
                values[j * dim + k] = s * radius * u[k];
            }
        }
        return Segment::from_values(grid, dim, values);
    }
    let p = profile(shape, &mut rng, n_nodes, dim);
    let pd = profile_diameter(&p, dim, grid);
    let scale = if target > 0.0 {
        if !(pd > 0.0) {
            return Err(Error::Infeasible(format!(
                "shape {shape:?} cannot reach diameter {target}"
            )));
        }
        target / pd
    } else {
        0.0
    };
    for j in 0..n_nodes {
        for k in 0..dim {
            values[j * dim + k] = radius * u[k] + scale * p[j * dim + k];
        }
    }
    let x = Segment::from_values(grid, dim, values)?;
    let achieved = x.diameter();
    if (achieved - target).abs() > 0.05 * target.max(1e-300) && target > 0.0 {
        return Err(Error::Infeasible(format!(
            "achieved diameter {achieved} misses target {target}"
        )));
    }
    Ok(x)
}

/// A sample that violated a condition, with what it takes to replay it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub index: usize,
    pub margin: f64,
    /// The state (or pair of states) evaluated.
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub condition: String,
    pub n_samples: usize,
    pub n_violations: usize,
    /// Largest margin (positive margins are violations).
    pub worst_margin: f64,
    pub fitted: BTreeMap<String, f64>,
    /// Systematic growth of the fitted ratio with scale.
    pub growth_flagged: bool,
    pub seed: u64,
    /// Up to [`MAX_WITNESSES`] violations, worst first.
    pub witnesses: Vec<Witness>,
}

pub const MAX_WITNESSES: usize = 16;

impl AssumptionReport {
    fn new(condition: &str, seed: u64) -> Self {
        Self {
            condition: condition.into(),
            n_samples: 0,
            n_violations: 0,
            worst_margin: f64::NEG_INFINITY,
            fitted: BTreeMap::new(),
            growth_flagged: false,
            seed,
            witnesses: Vec::new(),
        }
    }

    fn record(&mut self, index: usize, margin: f64, segments: impl FnOnce() -> Vec<Segment>) {
        self.n_samples += 1;
        self.worst_margin = self.worst_margin.max(margin);
        if margin > 0.0 {
            self.n_violations += 1;
            if self.witnesses.len() < MAX_WITNESSES
                || margin
                    > self
                        .witnesses
                        .last()
                        .map_or(f64::NEG_INFINITY, |w| w.margin)
            {
                self.witnesses.push(Witness {
                    index,
                    margin,
                    segments: segments(),
                });
                self.witnesses
                    .sort_by(|a, b| b.margin.total_cmp(&a.margin).then(a.index.cmp(&b.index)));
                self.witnesses.truncate(MAX_WITNESSES);
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.n_violations == 0
    }

    pub fn violation_fraction(&self) -> f64 {
        if self.n_samples == 0 {
            0.0
        } else {
            self.n_violations as f64 / self.n_samples as f64
        }
    }

    /// Witness segments in replayable CSV form.
    pub fn write_witnesses_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let segs: Vec<Segment> = self
            .witnesses
            .iter()
            .flat_map(|w| w.segments.iter().cloned())
            .collect();
        Segment::write_csv(&segs, out)
    }
}

fn samples(spec: &SegmentSamplerSpec, n: usize) -> Result<Vec<Segment>> {
    (0..n)
        .into_par_iter()
        .map(|i| sample_segment(spec, i))
        .collect()
}

/// Per-decade maxima of `ratio` keyed by `floor(log10 scale)`, and whether
/// they grow: log-log slope over the last three decades above `0.1`.
fn decade_growth(points: &[(f64, f64)], ascending: bool) -> bool {
    let mut bins: BTreeMap<i64, f64> = BTreeMap::new();
    for &(scale, ratio) in points {
        if scale > 0.0 && ratio > 0.0 {
            let b = scale.log10().floor() as i64;
            let e = bins.entry(b).or_insert(0.0);
            *e = e.max(ratio);
        }
    }
    let pts: Vec<(f64, f64)> = bins.iter().map(|(&b, &m)| (b as f64, m.log10())).collect();
    if pts.len() < 3 {
        return false;
    }
    let tail: Vec<(f64, f64)> = if ascending {
        pts[pts.len() - 3..].to_vec()
    } else {
        pts[..3].to_vec()
    };
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    if ascending {
        slope > 0.1
    } else {
        slope < -0.1
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `(⟨Δf, Δx(0)⟩₊ + ‖Δg‖²_F) / ‖x − y‖²`, `None` for coincident pairs.
pub fn one_sided_ratio(model: &ModelSpec, x: &Segment, y: &Segment) -> Result<Option<f64>> {
    let d = x.sup_distance(y)?;
    if d == 0.0 {
        return Ok(None);
    }
    let (fx, fy) = (model.drift_of(x), model.drift_of(y));
    let (gx, gy) = (model.diffusion_of(x), model.diffusion_of(y));
    let df: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
    let dx: Vec<f64> = x
        .endpoint()
        .iter()
        .zip(y.endpoint())
        .map(|(a, b)| a - b)
        .collect();
    let dg: f64 = gx.iter().zip(&gy).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(Some((dot(&df, &dx).max(0.0) + dg) / (d * d)))
}

/// Pairs `(x, x + δ p)` with `p` a random unit-sup perturbation and `δ`
/// log-uniform in `[10⁻³, 1] · max(‖x‖, 1)`. Reports the largest ratio as
/// `C`; flags growth with state size or as the separation shrinks.
pub fn check_one_sided_lipschitz(
    model: &ModelSpec,
    n_pairs: usize,
    sampler: &SegmentSamplerSpec,
) -> Result<AssumptionReport> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be at least 1".into()));
    }
    let rows: Vec<Option<(f64, f64, f64, Segment, Segment)>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let x = sample_segment(sampler, i)?;
            let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed ^ 0x005E_ED0F_1A1B);
            rng.set_stream(i as u64);
            let scale = x.sup_norm().max(1.0) * 10f64.powf(rng.random_range(-3.0..0.0));
            let y = x.map(|v| v + scale * rng.random_range(-1.0..1.0));
            Ok(one_sided_ratio(model, &x, &y)?
                .map(|q| (q, x.sup_norm(), x.sup_distance(&y).unwrap_or(0.0), x, y)))
        })
        .collect::<Result<_>>()?;
    let mut report = AssumptionReport::new("one_sided_lipschitz", sampler.seed);
    let mut by_size = Vec::new();
    let mut by_sep = Vec::new();
    let mut c = 0.0f64;
    for (i, row) in rows.into_iter().enumerate() {
        let Some((q, size, sep, x, y)) = row else {
            continue;
        };
        c = c.max(q);
        by_size.push((size, q));
        by_sep.push((sep, q));
        // no fixed constant to violate; growth is judged below
        report.record(i, f64::NEG_INFINITY.max(-q), || vec![x, y]);
    }
    report.fitted.insert("C".into(), c);
    report.growth_flagged = decade_growth(&by_size, true) || decade_growth(&by_sep, false);
    Ok(report)
}

/// Frobenius norm of the pseudo-inverse of the `d × m` matrix `g`, or
/// `None` when `g` has no right inverse (rank below `d` at tolerance
/// `10⁻¹⁰ σ_max`).
pub fn right_inverse_norm(g: &[f64], d: usize, m: usize) -> Option<f64> {
    if m < d {
        return None;
    }
    let mat = DMatrix::from_row_slice(d, m, g);
    let sv = mat.svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if !(smax > 0.0) || sv.iter().any(|&s| s <= 1e-10 * smax) {
        return None;
    }
    Some(sv.iter().map(|s| 1.0 / (s * s)).sum::<f64>().sqrt())
}

pub fn check_nondegeneracy(
    model: &ModelSpec,
    sampler: &SegmentSamplerSpec,
    n: usize,
) -> Result<AssumptionReport> {
    let xs = samples(sampler, n)?;
    let mut report = AssumptionReport::new("nondegeneracy", sampler.seed);
    let mut sup = 0.0f64;
    for (i, x) in xs.into_iter().enumerate() {
        let g = model.diffusion_of(&x);
        match right_inverse_norm(&g, model.dim_d, model.dim_m) {
            Some(v) => {
                sup = sup.max(v);
                report.record(i, -1.0, Vec::new);
            }
            None => report.record(i, 1.0, || vec![x]),
        }
    }
    report.fitted.insert(
        "sup_right_inverse_norm".into(),
        if report.passed() { sup } else { f64::INFINITY },
    );
    Ok(report)
}

/// `C = max |f(x)| / (1 + ‖x‖^β)`, flagged when its per-decade maximum
/// keeps growing.
pub fn check_growth(
    model: &ModelSpec,
    beta: f64,
    sampler: &SegmentSamplerSpec,
    n: usize,
) -> Result<AssumptionReport> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "β must lie in [0,1), got {beta}"
        )));
    }
    let xs = samples(sampler, n)?;
    let mut report = AssumptionReport::new("growth", sampler.seed);
    let mut pts = Vec::with_capacity(n);
    let mut c = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let s = x.sup_norm();
        let ratio = norm(&model.drift_of(x)) / (1.0 + s.powf(beta));
        c = c.max(ratio);
        pts.push((s, ratio));
        report.record(i, -ratio, Vec::new);
    }
    report.fitted.insert("C".into(), c);
    report.growth_flagged = decade_growth(&pts, true);
    Ok(report)
}

/// Which inequality the scan tests: `⟨f(x), x(0)⟩ ≤ −σ|x(0)|^a` with
/// `a = 1` or `a = α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VkMode {
    A2,
    /// Any positive exponent is accepted so stronger power-law bounds can
    /// be probed with the same scan.
    A3 {
        alpha: f64,
    },
}

impl VkMode {
    pub fn exponent(&self) -> f64 {
        match self {
            VkMode::A2 => 1.0,
            VkMode::A3 { alpha } => *alpha,
        }
    }
}

/// `⟨f(x), x(0)⟩ + σ|x(0)|^a`; positive values violate the condition.
pub fn vk_margin(model: &ModelSpec, x: &Segment, sigma: f64, a: f64) -> f64 {
    let f = model.drift_of(x);
    dot(&f, x.endpoint()) + sigma * norm(x.endpoint()).powf(a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VkReport {
    pub report: AssumptionReport,
    pub mode: VkMode,
    pub sigma: f64,
    pub big_m: f64,
    /// Samples outside `{D ≤ κ(|x(0)|), |x(0)| ≥ M}` that were skipped.
    pub n_outside_region: usize,
    /// Smallest threshold above which no sample violates at `σ`.
    pub m_star: f64,
    /// Largest `σ` with no violation among samples above `m_star`.
    pub sigma_star: f64,
    /// Some sample lies above `m_star`.
    pub m_star_finite: bool,
    /// `κ(z)/z^β` (A2) or `κ(z)/√ln z` (A3) increases on a geometric grid.
    pub kappa_growth_ok: Option<bool>,
}

pub fn vk_margin_scan(
    model: &ModelSpec,
    mode: VkMode,
    sigma: f64,
    big_m: f64,
    kappa: Option<KappaSpec>,
    sampler: &SegmentSamplerSpec,
    n: usize,
) -> Result<VkReport> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "σ must be positive, got {sigma}"
        )));
    }
    let a = mode.exponent();
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "exponent must be positive, got {a}"
        )));
    }
    let xs = samples(sampler, n)?;
    let mut report = AssumptionReport::new(
        match mode {
            VkMode::A2 => "vk_a2",
            VkMode::A3 { .. } => "vk_a3",
        },
        sampler.seed,
    );
    let mut outside = 0;
    let mut used: Vec<(f64, f64)> = Vec::new();
    for (i, x) in xs.into_iter().enumerate() {
        let r = norm(x.endpoint());
        let in_region =
            r >= big_m && kappa.is_none_or(|k| x.diameter() <= k.eval(r) * (1.0 + 1e-12));
        if !in_region {
            outside += 1;
            continue;
        }
        let inner = dot(&model.drift_of(&x), x.endpoint());
        let margin = inner + sigma * r.powf(a);
        used.push((r, -inner / r.powf(a)));
        report.record(i, margin, || vec![x]);
    }
    let m_star = if report.n_violations == 0 {
        big_m
    } else {
        used.iter()
            .filter(|(r, s)| *s < sigma && r.is_finite())
            .map(|p| p.0)
            .fold(big_m, f64::max)
    };
    let above: Vec<f64> = used
        .iter()
        .filter(|(r, _)| *r > m_star || (report.n_violations == 0 && *r >= m_star))
        .map(|p| p.1)
        .collect();
    let sigma_star = above.iter().copied().fold(f64::INFINITY, f64::min);
    report.fitted.insert("sigma_star".into(), sigma_star);
    report.fitted.insert("m_star".into(), m_star);
    let kappa_growth_ok = kappa.map(|k| {
        let grid: Vec<f64> = (1..=12).map(|e| 10f64.powi(e)).collect();
        let ratio = |z: f64| match (mode, model.declared.beta) {
            (VkMode::A2, beta) => k.eval(z) / z.powf(beta.unwrap_or(0.0)),
            (VkMode::A3 { .. }, _) => k.eval(z) / z.ln().sqrt(),
        };
        grid.windows(2).all(|w| ratio(w[1]) > ratio(w[0]))
    });
    Ok(VkReport {
        report,
        mode,
        sigma,
        big_m,
        n_outside_region: outside,
        m_star,
        sigma_star,
        m_star_finite: !above.is_empty(),
        kappa_growth_ok,
    })
}

/// Compares declared past-independence of the diffusion with its behavior:
/// random segments are perturbed away from `t = 0` and `g` is compared.
pub fn check_a4_structure(model: &ModelSpec) -> Result<bool> {
    let grid = Grid::new(model.r, 32)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    let mut independent = true;
    for _ in 0..200 {
        let scale = 10f64.powf(rng.random_range(-1.0..2.0));
        let vals: Vec<f64> = (0..grid.n_nodes() * model.dim_d)
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect();
        let x = Segment::from_values(grid, model.dim_d, vals.clone())?;
        let mut pert = vals;
        let last = pert.len() - model.dim_d;
        for v in &mut pert[..last] {
            *v += scale * rng.random_range(-1.0..1.0);
        }
        let y = Segment::from_values(grid, model.dim_d, pert)?;
        if model.diffusion_of(&x) != model.diffusion_of(&y) {
            independent = false;
            break;
        }
    }
    let declared = model.declared.diffusion_past_independent;
    if declared != independent || model.diffusion.past_independent() != independent {
        return Err(Error::StructureMismatch(format!(
            "diffusion declared past-independent = {declared}, observed = {independent}"
        )));
    }
    Ok(independent)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiameterRow {
    pub t: f64,
    pub n: usize,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

/// Quantiles of `D(X_t) / (1 + |X(t)|^β)` per snapshot time.
pub fn diameter_stats(ensemble: &Ensemble, beta: f64) -> Vec<DiameterRow> {
    ensemble
        .times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut r: Vec<f64> = ensemble.snapshots[j]
                .iter()
                .flatten()
                .map(|s| s.diameter() / (1.0 + norm(s.endpoint()).powf(beta)))
                .collect();
            r.sort_by(f64::total_cmp);
            DiameterRow {
                t,
                n: r.len(),
                q50: quantile(&r, 0.5),
                q90: quantile(&r, 0.9),
                q99: quantile(&r, 0.99),
            }
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (i, w) = (pos.floor() as usize, pos - pos.floor());
    if i + 1 < sorted.len() {
        sorted[i] + w * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}
