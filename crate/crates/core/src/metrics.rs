//! Empirical Wasserstein distance under `d_ρ`, a histogram lower bound for
//! total variation, two-ensemble convergence curves and decay-rate fits.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::integrator::{simulate_ensemble, simulate_path, RngStreamSpec};
use crate::models::ModelSpec;
use crate::segment::Segment;

pub const MAX_OT_SIZE: usize = 2048;

/// Where an empirical law came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub time: f64,
    pub seed: u64,
}

/// Uniform measure on a list of segments sharing grid and dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    pub samples: Vec<Segment>,
    pub provenance: Provenance,
}

impl EmpiricalLaw {
    pub fn new(samples: Vec<Segment>, provenance: Provenance) -> Result<Self> {
        if let Some(first) = samples.first() {
            for s in &samples[1..] {
                first.check_compatible(s)?;
            }
        }
        Ok(Self {
            samples,
            provenance,
        })
    }

    pub fn from_samples(samples: Vec<Segment>) -> Result<Self> {
        Self::new(samples, Provenance::default())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Optimal matching between two equal-size laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingPlan {
    /// Sample `i` of the first law is matched with `perm[i]` of the second.
    pub perm: Vec<usize>,
    /// Mean matched cost.
    pub total_cost: f64,
    /// Standard error of the matched costs, `sd / √n`.
    pub std_error: f64,
}

fn capped_distance(a: &[f64], b: &[f64], dim: usize, rho: f64) -> f64 {
    let mut best = 0.0f64;
    for (pa, pb) in a.chunks_exact(dim).zip(b.chunks_exact(dim)) {
        let d2: f64 = pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum();
        best = best.max(d2);
    }
    (best.sqrt() / rho).min(1.0)
}

/// Exact `W_{d_ρ}` between two uniform empirical laws of equal size.
pub fn wasserstein_drho(
    a: &EmpiricalLaw,
    b: &EmpiricalLaw,
    rho: f64,
) -> Result<(f64, CouplingPlan)> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must be positive, got {rho}"
        )));
    }
    let n = a.len();
    if n != b.len() {
        return Err(Error::InvalidArgument(format!(
            "laws must have equal size, got {n} and {}",
            b.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("laws must be nonempty".into()));
    }
    if n > MAX_OT_SIZE {
        return Err(Error::InvalidArgument(format!(
            "exact OT limited to {MAX_OT_SIZE} samples, got {n}"
        )));
    }
    a.samples[0].check_compatible(&b.samples[0])?;
    let dim = a.samples[0].dim();
    let cost: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = a.samples[i].values();
            b.samples
                .iter()
                .map(move |y| capped_distance(x, y.values(), dim, rho))
        })
        .collect();
    let (perm, total) = assignment::solve(n, &cost)?;
    let mean = total / n as f64;
    let var = if n > 1 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| (cost[i * n + j] - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64
    } else {
        0.0
    };
    let std_error = (var / n as f64).sqrt();
    Ok((
        mean,
        CouplingPlan {
            perm,
            total_cost: mean,
            std_error,
        },
    ))
}

/// Histogram cells on each projected axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BinSpec {
    /// `bins` equal cells spanning the pooled range of each axis.
    Uniform { bins: usize },
    /// Cell boundaries shared by all axes; cells are `(-∞, e₀), [e₀, e₁), …, [e_last, ∞)`.
    Edges { edges: Vec<f64> },
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::Uniform { bins: 32 }
    }
}

/// Default projection times `{-r, -r/2, 0}`.
pub fn default_projection_times(r: f64) -> Vec<f64> {
    vec![-r, -0.5 * r, 0.0]
}

/// Histogram lower bound on the total-variation distance: samples are
/// projected to their values at `projection_times` and the half-L1 distance
/// of the joint histograms is returned.
pub fn tv_proxy(
    a: &EmpiricalLaw,
    b: &EmpiricalLaw,
    projection_times: &[f64],
    bins: &BinSpec,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "tv_proxy needs nonempty laws".into(),
        ));
    }
    a.samples[0].check_compatible(&b.samples[0])?;
    let project = |s: &Segment| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for &t in projection_times {
            out.extend(s.eval_at(t)?);
        }
        Ok(out)
    };
    let pa: Vec<Vec<f64>> = a.samples.iter().map(project).collect::<Result<_>>()?;
    let pb: Vec<Vec<f64>> = b.samples.iter().map(project).collect::<Result<_>>()?;
    let axes = pa[0].len();
    let cell_of: Box<dyn Fn(usize, f64) -> u32> = match bins {
        BinSpec::Uniform { bins } => {
            if *bins == 0 {
                return Err(Error::InvalidArgument("bin count must be positive".into()));
            }
            let mut lo = vec![f64::INFINITY; axes];
            let mut hi = vec![f64::NEG_INFINITY; axes];
            for p in pa.iter().chain(&pb) {
                for k in 0..axes {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let nb = *bins;
            Box::new(move |k, v| {
                let span = hi[k] - lo[k];
                if span <= 0.0 {
                    return 0;
                }
                let u = (v - lo[k]) / span;
                ((u * nb as f64).floor() as usize).min(nb - 1) as u32
            })
        }
        BinSpec::Edges { edges } => {
            if edges.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument(
                    "bin edges must be strictly increasing".into(),
                ));
            }
            let edges = edges.clone();
            Box::new(move |_, v| edges.partition_point(|&e| e <= v) as u32)
        }
    };
    let mut hist: BTreeMap<Vec<u32>, (f64, f64)> = BTreeMap::new();
    let (wa, wb) = (1.0 / pa.len() as f64, 1.0 / pb.len() as f64);
    for p in &pa {
        let key: Vec<u32> = p.iter().enumerate().map(|(k, &v)| cell_of(k, v)).collect();
        hist.entry(key).or_default().0 += wa;
    }
    for p in &pb {
        let key: Vec<u32> = p.iter().enumerate().map(|(k, &v)| cell_of(k, v)).collect();
        hist.entry(key).or_default().1 += wb;
    }
    let tv = 0.5 * hist.values().map(|(x, y)| (x - y).abs()).sum::<f64>();
    Ok(tv.min(1.0))
}

/// One point of a convergence curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub w: f64,
    /// Standard error of the matched costs.
    pub ci: f64,
}

pub fn write_curve_csv<W: std::io::Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "W", "CI"])?;
    for p in curve {
        w.write_record([p.t.to_string(), p.w.to_string(), p.ci.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Second argument of [`convergence_curve`].
#[derive(Debug, Clone, Copy)]
pub enum CurveTarget<'a> {
    /// Simulate a second ensemble from this segment.
    Start(&'a Segment),
    /// Compare against a fixed sample, e.g. of the invariant law.
    Law(&'a EmpiricalLaw),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub dt: f64,
    pub rho: f64,
    pub seed_x: u64,
    pub seed_y: u64,
}

impl CurveConfig {
    /// Uses an independent stream family for the second ensemble.
    pub fn new(times: Vec<f64>, n_paths: usize, dt: f64, rho: f64, seed: u64) -> Self {
        Self {
            times,
            n_paths,
            dt,
            rho,
            seed_x: seed,
            seed_y: derive_seed(seed, 1),
        }
    }
}

/// SplitMix64 mix of `(seed, salt)`, used to derive independent seeds.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed
        .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `Ŵ(t)` between the ensemble started at `x` and the target, at each time.
/// Both ensembles use independent noise unless the seeds coincide. The
/// empirical value estimates `W(P_t(x,·), ·)` only up to sampling error.
pub fn convergence_curve(
    model: &ModelSpec,
    x: &Segment,
    target: CurveTarget<'_>,
    cfg: &CurveConfig,
) -> Result<Vec<CurvePoint>> {
    if cfg.times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "curve times must be increasing".into(),
        ));
    }
    let t_end = cfg.times.last().copied().unwrap_or(0.0);
    let ex = simulate_ensemble(
        model,
        |_| x.clone(),
        t_end,
        cfg.dt,
        cfg.n_paths,
        cfg.seed_x,
        &cfg.times,
    )?;
    let ey = match target {
        CurveTarget::Start(y) => Some(simulate_ensemble(
            model,
            |_| y.clone(),
            t_end,
            cfg.dt,
            cfg.n_paths,
            cfg.seed_y,
            &cfg.times,
        )?),
        CurveTarget::Law(_) => None,
    };
    for e in std::iter::once(&ex).chain(ey.as_ref()) {
        if let Some(t) = e.exploded_at.iter().flatten().next() {
            return Err(Error::Exploded { t: *t });
        }
    }
    let mut out = Vec::with_capacity(cfg.times.len());
    for (j, &t) in cfg.times.iter().enumerate() {
        let a = EmpiricalLaw::from_samples(ex.at(j))?;
        let (w, plan) = match (&ey, target) {
            (Some(ey), _) => wasserstein_drho(&a, &EmpiricalLaw::from_samples(ey.at(j))?, cfg.rho)?,
            (None, CurveTarget::Law(law)) => wasserstein_drho(&a, law, cfg.rho)?,
            (None, CurveTarget::Start(_)) => unreachable!(),
        };
        out.push(CurvePoint {
            t,
            w,
            ci: plan.std_error,
        });
    }
    Ok(out)
}

/// Samples one long path every `spacing` after `burn_in`.
pub fn estimate_invariant_law(
    model: &ModelSpec,
    x0: &Segment,
    burn_in: f64,
    n_samples: usize,
    spacing: f64,
    dt: f64,
    seed: u64,
) -> Result<EmpiricalLaw> {
    if n_samples == 0 || !(spacing > 0.0) || !(burn_in >= 0.0) {
        return Err(Error::InvalidArgument(
            "need n_samples ≥ 1, spacing > 0, burn_in ≥ 0".into(),
        ));
    }
    let times: Vec<f64> = (0..n_samples)
        .map(|j| ((burn_in + j as f64 * spacing) / dt).round() * dt)
        .collect();
    let t_end = *times.last().unwrap();
    let tr = simulate_path(model, x0, t_end, dt, RngStreamSpec::new(seed, 0), &times)?;
    if let Some(t) = tr.exploded_at {
        return Err(Error::Infeasible(format!(
            "trajectory exploded at t = {t}; the model is likely not ergodic"
        )));
    }
    EmpiricalLaw::new(
        tr.states,
        Provenance {
            model: model.name.clone(),
            time: burn_in,
            seed,
        },
    )
}

/// Decay shape used in a rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateKind {
    /// `e^{-λ₂ t}`.
    Exponential,
    /// `e^{-λ₂ t^{α/(2-α)}}`.
    Subexponential { alpha: f64 },
}

impl RateKind {
    pub fn time_exponent(&self) -> f64 {
        match self {
            RateKind::Exponential => 1.0,
            RateKind::Subexponential { alpha } => alpha / (2.0 - alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFitReport {
    pub kind: RateKind,
    pub lambda2: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_used: usize,
    /// `(t, log Ŵ, fitted log Ŵ)` for the points used.
    pub residuals: Vec<(f64, f64, f64)>,
}

/// Points that carry rate information: positive values not within two
/// standard errors of the cap.
pub fn usable_points(curve: &[CurvePoint]) -> Vec<CurvePoint> {
    let first = curve
        .iter()
        .position(|p| p.w < 1.0 - 2.0 * p.ci && p.w < 1.0)
        .unwrap_or(curve.len());
    curve[first..]
        .iter()
        .copied()
        .filter(|p| p.w > 0.0 && p.w.is_finite())
        .collect()
}

/// Least-squares fit of `log Ŵ` against `t^κ` (κ = 1 for exponential).
pub fn fit_rate(curve: &[CurvePoint], kind: RateKind) -> Result<RateFitReport> {
    if let RateKind::Subexponential { alpha } = kind {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0,1], got {alpha}"
            )));
        }
    }
    let pts = usable_points(curve);
    if pts.is_empty() && !curve.is_empty() {
        return Err(Error::Fit(
            "all curve points are saturated at the cap; increase horizon".into(),
        ));
    }
    if pts.len() < 4 {
        return Err(Error::Fit(format!(
            "rate fit needs at least 4 usable points, got {}",
            pts.len()
        )));
    }
    let kappa = kind.time_exponent();
    let xs: Vec<f64> = pts.iter().map(|p| p.t.powf(kappa)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.w.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("rate fit needs distinct times".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fitted: Vec<f64> = xs.iter().map(|x| intercept + slope * x).collect();
    let ss_res: f64 = ys.iter().zip(&fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let residuals = pts
        .iter()
        .zip(ys.iter().zip(&fitted))
        .map(|(p, (y, f))| (p.t, *y, *f))
        .collect();
    Ok(RateFitReport {
        kind,
        lambda2: (-slope).max(0.0),
        slope,
        intercept,
        r2,
        n_used: pts.len(),
        residuals,
    })
}

/// Fits both shapes and returns the one with higher R² first.
pub fn prefer_kind(curve: &[CurvePoint], alpha: f64) -> Result<(RateFitReport, RateFitReport)> {
    let e = fit_rate(curve, RateKind::Exponential)?;
    let s = fit_rate(curve, RateKind::Subexponential { alpha })?;
    Ok(if e.r2 >= s.r2 { (e, s) } else { (s, e) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_delayed_ou, DeclaredParams, Diffusion, Drift};
    use crate::segment::Grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn law(values: &[f64]) -> EmpiricalLaw {
        let g = Grid::new(1.0, 1).unwrap();
        EmpiricalLaw::from_samples(values.iter().map(|&v| Segment::constant(g, &[v])).collect())
            .unwrap()
    }

    #[test]
    fn wasserstein_examples() {
        let a = law(&[0.0, 0.3, 0.9]);
        let b = law(&[0.9, 0.0, 0.3]);
        let (w, plan) = wasserstein_drho(&a, &b, 1.0).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(plan.perm, vec![1, 2, 0]);
        let (w, _) = wasserstein_drho(&law(&[0.2]), &law(&[0.7]), 2.0).unwrap();
        assert!((w - 0.25).abs() < 1e-15);
        assert!(wasserstein_drho(&law(&[0.2]), &law(&[0.7, 0.1]), 2.0).is_err());
        let g2 = Grid::new(1.0, 2).unwrap();
        let other = EmpiricalLaw::from_samples(vec![Segment::zeros(g2, 1)]).unwrap();
        assert!(wasserstein_drho(&law(&[0.2]), &other, 1.0).is_err());
    }

    #[test]
    fn swapping_laws_inverts_plan() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (law(&xs), law(&ys));
        let (w1, p1) = wasserstein_drho(&a, &b, 0.5).unwrap();
        let (w2, p2) = wasserstein_drho(&b, &a, 0.5).unwrap();
        assert!((w1 - w2).abs() < 1e-12);
        // each plan is optimal for the swapped problem when inverted
        let mut inv = [0; 20];
        for (i, &j) in p1.perm.iter().enumerate() {
            inv[j] = i;
        }
        let cost_inv: f64 = inv
            .iter()
            .enumerate()
            .map(|(i, &j)| (((ys[i] - xs[j]).abs()) / 0.5).min(1.0))
            .sum::<f64>()
            / 20.0;
        assert!((cost_inv - w2).abs() < 1e-12);
        assert_eq!(p2.perm.len(), 20);
    }

    #[test]
    fn saturation_and_bounds() {
        let (w, _) = wasserstein_drho(&law(&[-10.0, -11.0]), &law(&[10.0, 12.0]), 1.0).unwrap();
        assert_eq!(w, 1.0);
    }

    #[test]
    fn tv_examples() {
        let a = law(&[-1.0, -0.5, -0.2]);
        let b = law(&[0.1, 0.4, 2.0]);
        let edges = BinSpec::Edges { edges: vec![0.0] };
        assert_eq!(tv_proxy(&a, &a, &[0.0], &BinSpec::default()).unwrap(), 0.0);
        assert_eq!(tv_proxy(&a, &b, &[0.0], &edges).unwrap(), 1.0);
        assert!(tv_proxy(&a, &b, &[0.5], &edges).is_err());
    }

    #[test]
    fn tv_dominates_single_cell_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..150).map(|_| rng.random_range(-0.5..1.5)).collect();
        let edges = vec![-0.5, 0.0, 0.5, 1.0];
        let tv = tv_proxy(
            &law(&xs),
            &law(&ys),
            &[0.0],
            &BinSpec::Edges {
                edges: edges.clone(),
            },
        )
        .unwrap();
        let frac = |v: &[f64], lo: f64, hi: f64| {
            v.iter().filter(|&&x| x >= lo && x < hi).count() as f64 / v.len() as f64
        };
        for w in edges.windows(2) {
            assert!(tv >= (frac(&xs, w[0], w[1]) - frac(&ys, w[0], w[1])).abs() - 1e-15);
        }
    }

    proptest! {
        #[test]
        fn coarsening_never_increases_tv(
            xs in proptest::collection::vec(-2.0f64..2.0, 1..40),
            ys in proptest::collection::vec(-2.0f64..2.0, 1..40),
            edges in proptest::collection::btree_set(-200i32..200, 1..20),
            keep in proptest::collection::vec(any::<bool>(), 20),
        ) {
            let fine: Vec<f64> = edges.iter().map(|&e| e as f64 / 100.0).collect();
            let coarse: Vec<f64> = fine.iter().zip(&keep).filter(|(_, k)| **k).map(|(e, _)| *e).collect();
            let (a, b) = (law(&xs), law(&ys));
            let tf = tv_proxy(&a, &b, &[0.0], &BinSpec::Edges { edges: fine }).unwrap();
            let tc = tv_proxy(&a, &b, &[0.0], &BinSpec::Edges { edges: coarse }).unwrap();
            prop_assert!(tc <= tf + 1e-12);
            prop_assert!(tf <= 1.0);
        }

        #[test]
        fn uniform_bins_nest_under_doubling(
            xs in proptest::collection::vec(-2.0f64..2.0, 2..40),
            ys in proptest::collection::vec(-2.0f64..2.0, 2..40),
            p in 0u32..6,
        ) {
            let (a, b) = (law(&xs), law(&ys));
            let coarse = tv_proxy(&a, &b, &[0.0], &BinSpec::Uniform { bins: 1 << p }).unwrap();
            let fine = tv_proxy(&a, &b, &[0.0], &BinSpec::Uniform { bins: 2 << p }).unwrap();
            prop_assert!(coarse <= fine + 1e-12);
        }
    }

    #[test]
    fn curve_is_zero_for_identical_ensembles_and_capped_at_start() {
        let ou = make_delayed_ou(1.0).unwrap();
        let g = Grid::new(1.0, 10).unwrap();
        let x = Segment::constant(g, &[5.0]);
        let cfg = CurveConfig {
            times: vec![0.0, 0.5, 1.0],
            n_paths: 8,
            dt: 0.1,
            rho: 1.0,
            seed_x: 3,
            seed_y: 3,
        };
        let curve = convergence_curve(&ou, &x, CurveTarget::Start(&x), &cfg).unwrap();
        assert!(curve.iter().all(|p| p.w == 0.0));
        let y = Segment::constant(g, &[-5.0]);
        let curve = convergence_curve(
            &ou,
            &x,
            CurveTarget::Start(&y),
            &CurveConfig::new(vec![0.0, 1.0], 8, 0.1, 1.0, 3),
        )
        .unwrap();
        assert_eq!(curve[0].w, 1.0);
    }

    #[test]
    fn invariant_law_collapses_under_contraction() {
        let m = ModelSpec::new(
            "contract",
            1.0,
            1,
            Drift::Linear { coef: 1.0 },
            Diffusion::scalar(0.0),
            DeclaredParams::default(),
        )
        .unwrap();
        let g = Grid::new(1.0, 10).unwrap();
        let law = estimate_invariant_law(&m, &Segment::constant(g, &[3.0]), 40.0, 5, 1.0, 0.1, 0)
            .unwrap();
        assert_eq!(law.len(), 5);
        assert!(law.samples.iter().all(|s| s.sup_norm() < 1e-10));
    }

    #[test]
    fn fit_rate_examples() {
        let exp: Vec<CurvePoint> = (0..20)
            .map(|i| CurvePoint {
                t: i as f64,
                w: (-0.3 * i as f64).exp(),
                ci: 0.0,
            })
            .collect();
        let r = fit_rate(&exp, RateKind::Exponential).unwrap();
        assert!((r.lambda2 - 0.3).abs() < 1e-12);
        assert!((r.r2 - 1.0).abs() < 1e-12);

        let sub: Vec<CurvePoint> = (1..=20)
            .map(|i| CurvePoint {
                t: i as f64,
                w: (-0.5 * (i as f64).powf(1.0 / 3.0)).exp(),
                ci: 0.0,
            })
            .collect();
        let r = fit_rate(&sub, RateKind::Subexponential { alpha: 0.5 }).unwrap();
        assert!((r.lambda2 - 0.5).abs() < 1e-12);
        assert!((r.r2 - 1.0).abs() < 1e-12);
        assert_eq!(
            prefer_kind(&sub, 0.5).unwrap().0.kind,
            RateKind::Subexponential { alpha: 0.5 }
        );
        assert_eq!(
            prefer_kind(&exp[1..], 0.5).unwrap().0.kind,
            RateKind::Exponential
        );
    }

    #[test]
    fn fit_rate_trims_saturated_points_and_rejects_flat_curves() {
        let mut pts: Vec<CurvePoint> = (0..10)
            .map(|i| CurvePoint {
                t: i as f64,
                w: (-0.2 * i as f64).exp(),
                ci: 0.01,
            })
            .collect();
        pts[0].w = 1.0;
        pts[1].w = 0.99;
        let r = fit_rate(&pts, RateKind::Exponential).unwrap();
        assert_eq!(r.n_used, 8);
        let flat: Vec<CurvePoint> = (0..10)
            .map(|i| CurvePoint {
                t: i as f64,
                w: 1.0,
                ci: 0.0,
            })
            .collect();
        let err = fit_rate(&flat, RateKind::Exponential)
            .unwrap_err()
            .to_string();
        assert!(err.contains("increase horizon"));
    }
}
