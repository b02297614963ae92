//! Model zoo: drift and diffusion functionals on history segments together
//! with the condition parameters each model is expected to satisfy.
//!
//! Drifts and diffusions are closed enums so that models can be loaded from
//! config files and their structure inspected (the total-variation check
//! reads whether the diffusion looks at the past). A `Custom` variant exists
//! for test fixtures and is never serialized.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::{Segment, SegmentView};

/// Cubic smoothstep rising from 0 at `u <= 0` to 1 at `u >= 1`.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Radial profile `q` with `h(z) = -z q(|z|)`.
///
/// For `s >= 1` this is `s^(γ-1)`, giving `h(z) = -|z|^γ sign z`. Inside the
/// unit ball `q(s) = (3-γ)/2 + (γ-1)/2 s²`, which matches value and slope
/// at `s = 1`, has `q'(0) = 0`, and stays within `[1, (3-γ)/2]`.
#[inline]
pub fn power_profile(gamma: f64, s: f64) -> f64 {
    if s >= 1.0 {
        s.powf(gamma - 1.0)
    } else {
        0.5 * (3.0 - gamma) + 0.5 * (gamma - 1.0) * s * s
    }
}

/// Scalar restoring function `h(z) = -|z|^γ sign z` for `|z| >= 1`, with the
/// odd C¹ blend inside.
#[inline]
pub fn power_h(gamma: f64, z: f64) -> f64 {
    -z * power_profile(gamma, z.abs())
}

/// `κ(z) = c z^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaSpec {
    pub c: f64,
    pub p: f64,
}

impl KappaSpec {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && (0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidArgument(format!(
                "kappa needs c > 0 and p in [0,1], got c={c}, p={p}"
            )));
        }
        Ok(Self { c, p })
    }

    pub fn eval(&self, z: f64) -> f64 {
        kappa_eval(self, z)
    }
}

pub fn kappa_eval(kappa: &KappaSpec, z: f64) -> f64 {
    if z <= 0.0 {
        return if kappa.p == 0.0 { kappa.c } else { 0.0 };
    }
    kappa.c * z.powf(kappa.p)
}

/// Condition parameters a model declares.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredParams {
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub big_m: Option<f64>,
    pub kappa: Option<KappaSpec>,
    pub diffusion_past_independent: bool,
}

impl DeclaredParams {
    fn validate(&self) -> Result<()> {
        if let Some(b) = self.beta {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidArgument(format!(
                    "declared beta {b} not in [0,1)"
                )));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "declared alpha {a} not in (0,1]"
                )));
            }
        }
        Ok(())
    }
}

/// Finite signed measure on `[-r, 0]`: point masses plus a piecewise-constant
/// density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    /// `(location, weight)` pairs.
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    /// `(start, end, density)` pieces.
    #[serde(default)]
    pub density: Vec<(f64, f64, f64)>,
}

impl MeasureSpec {
    pub fn dirac(at: f64) -> Self {
        Self {
            atoms: vec![(at, 1.0)],
            density: Vec::new(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>()
            + self
                .density
                .iter()
                .map(|(a, b, c)| c * (b - a))
                .sum::<f64>()
    }

    /// Total variation `μ⁺([-r,0]) + μ⁻([-r,0])`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.1.abs()).sum::<f64>()
            + self
                .density
                .iter()
                .map(|(a, b, c)| c.abs() * (b - a))
                .sum::<f64>()
    }

    fn validate(&self, r: f64) -> Result<()> {
        let inside = |t: f64| t >= -r - 1e-12 && t <= 1e-12;
        for &(t, w) in &self.atoms {
            if !inside(t) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "atom ({t}, {w}) outside [-{r}, 0]"
                )));
            }
        }
        for &(a, b, c) in &self.density {
            if !(inside(a) && inside(b) && a < b && c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "density piece ({a}, {b}, {c}) invalid"
                )));
            }
        }
        if !(self.total_mass() > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "measure total mass must be positive, got {}",
                self.total_mass()
            )));
        }
        Ok(())
    }

    /// `∫ x(s) μ(ds)`, component-wise. Atoms use linear interpolation and
    /// density pieces integrate the interpolant exactly.
    pub fn integrate(&self, x: &SegmentView<'_>, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(t, w) in &self.atoms {
            let t = t.clamp(-x.grid().r(), 0.0);
            if let Ok(p) = x.eval_at(t) {
                for (o, v) in out.iter_mut().zip(p) {
                    *o += w * v;
                }
            }
        }
        for &(a, b, c) in &self.density {
            for (k, o) in out.iter_mut().enumerate() {
                *o += c * x.integrate_component(k, a, b);
            }
        }
    }
}

/// Strictly increasing bounded map used for past-dependent diffusions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MonotoneMap {
    /// `base + amp * tanh(scale * z)`.
    Tanh {
        base: f64,
        amp: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Piecewise-linear interpolation of `(z, g)` knots, constant outside.
    Table { knots: Vec<(f64, f64)> },
}

fn one() -> f64 {
    1.0
}

impl MonotoneMap {
    pub fn tanh(base: f64, amp: f64) -> Self {
        MonotoneMap::Tanh {
            base,
            amp,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MonotoneMap::Tanh { base, amp, scale } => {
                if !(*amp > 0.0 && *scale > 0.0) {
                    return Err(Error::InvalidArgument(
                        "tanh map must be strictly increasing (amp, scale > 0)".into(),
                    ));
                }
                if !(base - amp > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "tanh map lower bound {} must be positive",
                        base - amp
                    )));
                }
            }
            MonotoneMap::Table { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidArgument(
                        "monotone table needs at least two knots".into(),
                    ));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                        return Err(Error::InvalidArgument(format!(
                            "table is not strictly increasing between {:?} and {:?}",
                            w[0], w[1]
                        )));
                    }
                }
                if !(knots[0].1 > 0.0) {
                    return Err(Error::InvalidArgument(
                        "monotone table values must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            MonotoneMap::Tanh { base, amp, scale } => base + amp * (scale * z).tanh(),
            MonotoneMap::Table { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if z <= first.0 {
                    return first.1;
                }
                if z >= last.0 {
                    return last.1;
                }
                let j = knots.partition_point(|k| k.0 <= z);
                let (a, b) = (knots[j - 1], knots[j]);
                a.1 + (z - a.0) / (b.0 - a.0) * (b.1 - a.1)
            }
        }
    }

    /// Open range `(g_lo, g_hi)` of the map.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            MonotoneMap::Tanh { base, amp, .. } => (base - amp, base + amp),
            MonotoneMap::Table { knots } => (knots[0].1, knots[knots.len() - 1].1),
        }
    }

    /// Bisection search bracket on the argument axis.
    fn argument_bracket(&self) -> (f64, f64) {
        match self {
            MonotoneMap::Tanh { scale, .. } => (-40.0 / scale, 40.0 / scale),
            MonotoneMap::Table { knots } => (knots[0].0, knots[knots.len() - 1].0),
        }
    }

    /// Inverse by bisection. Values outside the open range are clipped to
    /// the bracket ends; the second component reports whether clipping
    /// happened.
    pub fn inverse(&self, y: f64) -> (f64, bool) {
        let (lo_v, hi_v) = self.bounds();
        let (mut lo, mut hi) = self.argument_bracket();
        if !(y > lo_v) {
            return (lo, true);
        }
        if !(y < hi_v) {
            return (hi, true);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi), false)
    }
}

/// Scalar map used as the drift of the reconstruction model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarMap {
    Zero,
    /// `slope * z`.
    Linear {
        slope: f64,
    },
    /// `power_h(gamma, z)`.
    Power {
        gamma: f64,
    },
}

impl ScalarMap {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            ScalarMap::Zero => 0.0,
            ScalarMap::Linear { slope } => slope * z,
            ScalarMap::Power { gamma } => power_h(*gamma, z),
        }
    }
}

type DriftFn = dyn Fn(&SegmentView<'_>, &mut [f64]) + Send + Sync;

/// Arbitrary drift closure for test fixtures.
#[derive(Clone)]
pub struct CustomDrift(pub Arc<DriftFn>);

impl fmt::Debug for CustomDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomDrift")
    }
}

impl PartialEq for CustomDrift {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Drift functionals `f: C → R^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    Zero,
    /// `-coef * x(0)`.
    Linear {
        coef: f64,
    },
    /// `h(x(-r))` with the power restoring function.
    PowerDelay {
        gamma: f64,
    },
    /// `h(∫ x(s) μ(ds))`, radial version of the power restoring function.
    DistributedDelay {
        gamma: f64,
        measure: MeasureSpec,
    },
    /// `-λ x(-1)`.
    DelayedOu {
        lambda: f64,
    },
    /// `A s(D-N) - (1 - s(D-N)) clamp(x(0), -1, 1)`.
    CounterexampleBeta0 {
        n: f64,
        a: f64,
    },
    /// Blend of `5N max(x(0),1)^β` and `-clamp(x(0), -1, 1)`.
    CounterexampleBetaPos {
        n: f64,
        beta: f64,
    },
    /// `map(x(-r))`.
    DelayedScalar {
        map: ScalarMap,
    },
    #[serde(skip)]
    Custom(CustomDrift),
}

impl Drift {
    pub fn custom(f: impl Fn(&SegmentView<'_>, &mut [f64]) + Send + Sync + 'static) -> Self {
        Drift::Custom(CustomDrift(Arc::new(f)))
    }

    pub fn eval(&self, x: &SegmentView<'_>, out: &mut [f64]) {
        match self {
            Drift::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            Drift::Linear { coef } => {
                for (o, v) in out.iter_mut().zip(x.endpoint()) {
                    *o = -coef * v;
                }
            }
            Drift::PowerDelay { gamma } => out[0] = power_h(*gamma, x.oldest()[0]),
            Drift::DistributedDelay { gamma, measure } => {
                measure.integrate(x, out);
                let s = out.iter().map(|v| v * v).sum::<f64>().sqrt();
                let q = power_profile(*gamma, s);
                out.iter_mut().for_each(|v| *v *= -q);
            }
            Drift::DelayedOu { lambda } => out[0] = -lambda * x.oldest()[0],
            Drift::CounterexampleBeta0 { n, a } => {
                let w = smoothstep(x.diameter() - n);
                let x0 = x.endpoint()[0];
                out[0] = a * w - (1.0 - w) * x0.clamp(-1.0, 1.0);
            }
            Drift::CounterexampleBetaPos { n, beta } => {
                let x0 = x.endpoint()[0];
                let level = x0.max(1.0).powf(*beta);
                let w = if x0 <= 1.0 {
                    0.0
                } else {
                    smoothstep(x0 - 1.0) * smoothstep(x.diameter() - n * level)
                };
                out[0] = 5.0 * n * level * w - (1.0 - w) * x0.clamp(-1.0, 1.0);
            }
            Drift::DelayedScalar { map } => out[0] = map.eval(x.oldest()[0]),
            Drift::Custom(c) => (c.0)(x, out),
        }
    }
}

/// Diffusion functionals `g: C → R^{d×m}` (row-major output).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diffusion {
    /// Constant `rows × cols` matrix.
    Constant {
        rows: usize,
        cols: usize,
        matrix: Vec<f64>,
    },
    /// Scalar `map(x(0))`.
    Endpoint { map: MonotoneMap },
    /// Scalar `map(x(-r))`.
    Delayed { map: MonotoneMap },
}

impl Diffusion {
    pub fn identity(d: usize) -> Self {
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            matrix[i * d + i] = 1.0;
        }
        Diffusion::Constant {
            rows: d,
            cols: d,
            matrix,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Diffusion::Constant {
            rows: 1,
            cols: 1,
            matrix: vec![value],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Diffusion::Constant { rows, cols, .. } => (*rows, *cols),
            _ => (1, 1),
        }
    }

    /// Whether the functional only reads `x(0)`.
    pub fn past_independent(&self) -> bool {
        !matches!(self, Diffusion::Delayed { .. })
    }

    /// Bound on the diffusion entries, when it is bounded.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Diffusion::Constant { matrix, .. } => matrix.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Diffusion::Endpoint { map } | Diffusion::Delayed { map } => map.bounds().1,
        }
    }

    pub fn eval(&self, x: &SegmentView<'_>, out: &mut [f64]) {
        match self {
            Diffusion::Constant { matrix, .. } => out.copy_from_slice(matrix),
            Diffusion::Endpoint { map } => out[0] = map.eval(x.endpoint()[0]),
            Diffusion::Delayed { map } => out[0] = map.eval(x.oldest()[0]),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            Diffusion::Constant { rows, cols, matrix } => {
                if *rows != d || matrix.len() != rows * cols || *cols == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "constant diffusion must be {d}×m with {} entries",
                        rows * cols
                    )));
                }
            }
            Diffusion::Endpoint { map } | Diffusion::Delayed { map } => {
                if d != 1 {
                    return Err(Error::InvalidArgument(
                        "scalar diffusion maps need d = 1".into(),
                    ));
                }
                map.validate()?;
            }
        }
        Ok(())
    }
}

/// An SFDE `dX = f(X_t) dt + g(X_t) dW`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub name: String,
    pub r: f64,
    pub dim_d: usize,
    pub dim_m: usize,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub declared: DeclaredParams,
    /// Model-specific constants (stability thresholds, `z₀`, ...).
    pub metadata: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        r: f64,
        dim_d: usize,
        drift: Drift,
        diffusion: Diffusion,
        declared: DeclaredParams,
    ) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "memory length must be positive, got {r}"
            )));
        }
        if dim_d == 0 {
            return Err(Error::InvalidArgument(
                "state dimension must be positive".into(),
            ));
        }
        diffusion.validate(dim_d)?;
        declared.validate()?;
        let dim_m = diffusion.shape().1;
        Ok(Self {
            name: name.into(),
            r,
            dim_d,
            dim_m,
            drift,
            diffusion,
            declared,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: &str, value: f64) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn drift_at(&self, x: &SegmentView<'_>, out: &mut [f64]) {
        self.drift.eval(x, out)
    }

    pub fn diffusion_at(&self, x: &SegmentView<'_>, out: &mut [f64]) {
        self.diffusion.eval(x, out)
    }

    pub fn drift_of(&self, x: &Segment) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_d];
        self.drift.eval(&x.view(), &mut out);
        out
    }

    pub fn diffusion_of(&self, x: &Segment) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_d * self.dim_m];
        self.diffusion.eval(&x.view(), &mut out);
        out
    }

    /// Checks that `x` has this model's memory length and dimension.
    pub fn check_segment(&self, x: &Segment) -> Result<()> {
        if (x.grid().r() - self.r).abs() > 1e-12 * self.r {
            return Err(Error::GridMismatch(format!(
                "segment memory {} vs model memory {}",
                x.grid().r(),
                self.r
            )));
        }
        if x.dim() != self.dim_d {
            return Err(Error::DimMismatch {
                expected: self.dim_d,
                got: x.dim(),
            });
        }
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > -1.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (-1, 1), got {gamma}"
        )));
    }
    Ok(())
}

fn power_declared(gamma: f64, diffusion: &Diffusion) -> DeclaredParams {
    DeclaredParams {
        beta: Some(gamma.max(0.0)),
        // γ+1 exceeds the admissible range for γ > 0, where the A2 form applies
        alpha: Some((gamma + 1.0).min(1.0)),
        sigma: None,
        big_m: None,
        kappa: Some(KappaSpec {
            c: 1.0,
            p: 0.5 * (1.0 + gamma),
        }),
        diffusion_past_independent: diffusion.past_independent(),
    }
}

/// `dX = h(X(t-r)) dt + g(X_t) dW` with the power restoring function.
pub fn make_power_delay_model(gamma: f64, r: f64, diffusion: Diffusion) -> Result<ModelSpec> {
    check_gamma(gamma)?;
    let declared = power_declared(gamma, &diffusion);
    ModelSpec::new(
        format!("power_delay(gamma={gamma})"),
        r,
        1,
        Drift::PowerDelay { gamma },
        diffusion,
        declared,
    )
}

/// `dX = h(∫ X(t+s) μ(ds)) dt + g(X_t) dW` in dimension `d`.
pub fn make_distributed_delay_model(
    gamma: f64,
    measure: MeasureSpec,
    r: f64,
    d: usize,
    diffusion: Diffusion,
) -> Result<ModelSpec> {
    check_gamma(gamma)?;
    measure.validate(r)?;
    let declared = power_declared(gamma, &diffusion);
    let mass = measure.total_mass();
    let tv = measure.total_variation();
    Ok(ModelSpec::new(
        format!("distributed_delay(gamma={gamma})"),
        r,
        d,
        Drift::DistributedDelay { gamma, measure },
        diffusion,
        declared,
    )?
    .with_metadata("mass", mass)
    .with_metadata("total_variation", tv))
}

/// Delayed Ornstein–Uhlenbeck `dX = -λ X(t-1) dt + dW`.
pub fn make_delayed_ou(lambda: f64) -> Result<ModelSpec> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let declared = DeclaredParams {
        diffusion_past_independent: true,
        ..Default::default()
    };
    Ok(ModelSpec::new(
        format!("delayed_ou(lambda={lambda})"),
        1.0,
        1,
        Drift::DelayedOu { lambda },
        Diffusion::scalar(1.0),
        declared,
    )?
    .with_metadata("stability_threshold", FRAC_PI_2))
}

/// Standard Brownian motion on segments of memory `r`.
pub fn make_brownian(r: f64) -> Result<ModelSpec> {
    let declared = DeclaredParams {
        diffusion_past_independent: true,
        ..Default::default()
    };
    ModelSpec::new(
        "brownian",
        r,
        1,
        Drift::Zero,
        Diffusion::scalar(1.0),
        declared,
    )
}

/// Counterexample with bounded drift that fires once the diameter exceeds
/// `N + 1`. Memory `r = 2`, unit diffusion.
pub fn make_counterexample_beta0(n: f64, a: f64) -> Result<ModelSpec> {
    if !(n > 0.0 && a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "N and A must be positive, got N={n}, A={a}"
        )));
    }
    let declared = DeclaredParams {
        beta: Some(0.0),
        sigma: Some(1.0),
        big_m: Some(1.0),
        kappa: Some(KappaSpec { c: n, p: 0.0 }),
        diffusion_past_independent: true,
        ..Default::default()
    };
    Ok(ModelSpec::new(
        format!("counterexample_beta0(N={n}, A={a})"),
        2.0,
        1,
        Drift::CounterexampleBeta0 { n, a },
        Diffusion::scalar(1.0),
        declared,
    )?
    .with_metadata("A", a)
    .with_metadata("N", n))
}

/// `z₀ = (2N)^{1/(1-β)}`.
pub fn ex35_z0(n: f64, beta: f64) -> f64 {
    (2.0 * n).powf(1.0 / (1.0 - beta))
}

/// Counterexample with drift `5N x(0)^β` on large-diameter segments.
/// Memory `r = 2`, unit diffusion.
pub fn make_counterexample_betapos(n: f64, beta: f64) -> Result<ModelSpec> {
    if !(n > 1.0) {
        return Err(Error::InvalidArgument(format!("N must exceed 1, got {n}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must lie in (0,1), got {beta}"
        )));
    }
    let declared = DeclaredParams {
        beta: Some(beta),
        sigma: Some(1.0),
        big_m: Some(1.0),
        kappa: Some(KappaSpec {
            c: n - 1.0,
            p: beta,
        }),
        diffusion_past_independent: true,
        ..Default::default()
    };
    Ok(ModelSpec::new(
        format!("counterexample_betapos(N={n}, beta={beta})"),
        2.0,
        1,
        Drift::CounterexampleBetaPos { n, beta },
        Diffusion::scalar(1.0),
        declared,
    )?
    .with_metadata("z0", ex35_z0(n, beta))
    .with_metadata("N", n))
}

/// Checks `D(x) >= N |x(0)|^β` for a segment satisfying
/// the hypotheses `x(t₂) >= z₀` and `x(t₁) >= x(t₂) + 2N x(t₂)^β`.
pub fn check_ex35_lemma(x: &Segment, n: f64, beta: f64, t1: f64, t2: f64) -> Result<bool> {
    if x.dim() != 1 || (x.grid().r() - 2.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(
            "the check applies to scalar segments with r = 2".into(),
        ));
    }
    if !(n > 1.0 && beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need N > 1 and beta in (0,1), got N={n}, beta={beta}"
        )));
    }
    let z0 = ex35_z0(n, beta);
    let x1 = x.eval_at(t1)?[0];
    let x2 = x.eval_at(t2)?[0];
    if !(x2 >= z0) {
        return Err(Error::InvalidArgument(format!(
            "x(t2) = {x2} is below z0 = {z0}"
        )));
    }
    if !(x1 >= x2 + 2.0 * n * x2.powf(beta)) {
        return Err(Error::InvalidArgument(format!(
            "x(t1) = {x1} does not exceed x(t2) + 2N x(t2)^beta"
        )));
    }
    let target = n * x.endpoint()[0].abs().powf(beta);
    Ok(x.diameter() >= target * (1.0 - 1e-12))
}

/// `dX = drift(X(t-1)) dt + g(X(t-1)) dW` with strictly increasing bounded
/// `g`, so the quadratic variation of a window reveals the preceding one.
pub fn make_reconstruction_model(drift: ScalarMap, g: MonotoneMap) -> Result<ModelSpec> {
    g.validate()?;
    let declared = DeclaredParams {
        diffusion_past_independent: false,
        ..Default::default()
    };
    ModelSpec::new(
        "reconstruction",
        1.0,
        1,
        Drift::DelayedScalar { map: drift },
        Diffusion::Delayed { map: g },
        declared,
    )
}

/// Models loadable from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    DelayedOu {
        lambda: f64,
    },
    Brownian {
        #[serde(default = "one")]
        r: f64,
    },
    PowerDelay {
        gamma: f64,
        #[serde(default = "one")]
        r: f64,
        #[serde(default)]
        diffusion: DiffusionConfig,
    },
    DistributedDelay {
        gamma: f64,
        measure: MeasureSpec,
        #[serde(default = "one")]
        r: f64,
        #[serde(default)]
        diffusion: DiffusionConfig,
    },
    CounterexampleBeta0 {
        n: f64,
        a: f64,
    },
    CounterexampleBetapos {
        n: f64,
        beta: f64,
    },
    Reconstruction {
        drift: ScalarMap,
        g: MonotoneMap,
    },
}

/// Diffusion choices for config-loaded models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionConfig {
    Constant { value: f64 },
    Endpoint { map: MonotoneMap },
    Delayed { map: MonotoneMap },
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig::Constant { value: 1.0 }
    }
}

impl DiffusionConfig {
    pub fn build(&self) -> Diffusion {
        match self {
            DiffusionConfig::Constant { value } => Diffusion::scalar(*value),
            DiffusionConfig::Endpoint { map } => Diffusion::Endpoint { map: map.clone() },
            DiffusionConfig::Delayed { map } => Diffusion::Delayed { map: map.clone() },
        }
    }
}

/// Names accepted by [`ModelConfig`].
pub const REGISTERED_MODELS: &[&str] = &[
    "delayed_ou",
    "brownian",
    "power_delay",
    "distributed_delay",
    "counterexample_beta0",
    "counterexample_betapos",
    "reconstruction",
];

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        match self {
            ModelConfig::DelayedOu { lambda } => make_delayed_ou(*lambda),
            ModelConfig::Brownian { r } => make_brownian(*r),
            ModelConfig::PowerDelay {
                gamma,
                r,
                diffusion,
            } => make_power_delay_model(*gamma, *r, diffusion.build()),
            ModelConfig::DistributedDelay {
                gamma,
                measure,
                r,
                diffusion,
            } => make_distributed_delay_model(*gamma, measure.clone(), *r, 1, diffusion.build()),
            ModelConfig::CounterexampleBeta0 { n, a } => make_counterexample_beta0(*n, *a),
            ModelConfig::CounterexampleBetapos { n, beta } => {
                make_counterexample_betapos(*n, *beta)
            }
            ModelConfig::Reconstruction { drift, g } => {
                make_reconstruction_model(drift.clone(), g.clone())
            }
        }
    }

    /// Parses a model table, naming the registered models when the name is
    /// unknown.
    pub fn from_toml_value(value: toml::Value) -> Result<Self> {
        if let Some(name) = value.get("name").and_then(|n| n.as_str()) {
            if !REGISTERED_MODELS.contains(&name) {
                return Err(Error::Config(format!(
                    "unknown model `{name}`; registered models: {}",
                    REGISTERED_MODELS.join(", ")
                )));
            }
        }
        value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }
}
