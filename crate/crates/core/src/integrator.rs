//! Euler–Maruyama integration on segment states and seeded ensembles.
//!
//! A path keeps a fine history buffer at resolution `dt = h_grid / k`.
//! Drift and diffusion always see the `n_grid + 1` values spaced `h_grid`
//! apart that end at the current time, read straight from the buffer, so no
//! interpolation happens after the initial segment is loaded.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::segment::{Grid, Segment, SegmentView};

pub const DEFAULT_EXPLOSION_THRESHOLD: f64 = 1e12;

/// Gaussian stream keyed by `(master_seed, stream_id)`; draw `j` of the
/// stream is fixed by the ChaCha block counter regardless of scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngStreamSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStreamSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Fills `out` with standard normal draws.
pub fn fill_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// Number of sub-steps per grid mesh, checking `dt = h / k`.
pub fn substeps(grid: Grid, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let ratio = grid.h() / dt;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} does not divide the grid mesh {}",
            grid.h()
        )));
    }
    Ok(k as usize)
}

/// Converts times to step indices, requiring multiples of `dt` in `[0, T]`
/// in increasing order.
pub fn steps_for_times(times: &[f64], dt: f64, t_end: f64) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12) + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "snapshot time {t} outside [0, {t_end}]"
            )));
        }
        let n = (t / dt).round();
        if (n * dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "snapshot time {t} is not a multiple of dt = {dt}"
            )));
        }
        let n = n as u64;
        if out.last().is_some_and(|&p| n <= p) {
            return Err(Error::InvalidArgument(
                "snapshot times must be strictly increasing".into(),
            ));
        }
        out.push(n);
    }
    Ok(out)
}

fn total_steps(t_end: f64, dt: f64) -> Result<u64> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be nonnegative, got {t_end}"
        )));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon {t_end} is not a multiple of dt = {dt}"
        )));
    }
    Ok(n as u64)
}

/// One Euler–Maruyama step applied directly to a segment. Requires `dt`
/// equal to the grid mesh; finer steps need a [`PathState`].
pub fn em_step(model: &ModelSpec, x: &Segment, dt: f64, xi: &[f64]) -> Result<Segment> {
    model.check_segment(x)?;
    if substeps(x.grid(), dt)? != 1 {
        return Err(Error::InvalidArgument(
            "em_step on a bare segment needs dt equal to the grid mesh; use PathState".into(),
        ));
    }
    if xi.len() != model.dim_m {
        return Err(Error::DimMismatch {
            expected: model.dim_m,
            got: xi.len(),
        });
    }
    let mut next = vec![0.0; model.dim_d];
    let mut f = vec![0.0; model.dim_d];
    let mut g = vec![0.0; model.dim_d * model.dim_m];
    advance(model, &x.view(), dt, xi, &mut f, &mut g, &mut next)?;
    x.shift_append(&next)
}

fn advance(
    model: &ModelSpec,
    view: &SegmentView<'_>,
    dt: f64,
    xi: &[f64],
    f: &mut [f64],
    g: &mut [f64],
    next: &mut [f64],
) -> Result<()> {
    model.drift_at(view, f);
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "drift",
            endpoint: view.endpoint().to_vec(),
        });
    }
    model.diffusion_at(view, g);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "diffusion",
            endpoint: view.endpoint().to_vec(),
        });
    }
    let sq = dt.sqrt();
    let m = xi.len();
    for (i, out) in next.iter_mut().enumerate() {
        let noise: f64 = (0..m).map(|j| g[i * m + j] * xi[j]).sum();
        *out = view.endpoint()[i] + f[i] * dt + sq * noise;
    }
    Ok(())
}

/// Running state of one path.
#[derive(Debug, Clone)]
pub struct PathState<'m> {
    model: &'m ModelSpec,
    grid: Grid,
    k: usize,
    dt: f64,
    dim: usize,
    /// Fine history, time-major; the last point is the current value.
    buf: Vec<f64>,
    step: u64,
    threshold: f64,
    f: Vec<f64>,
    g: Vec<f64>,
    next: Vec<f64>,
}

impl<'m> PathState<'m> {
    /// Starts at time 0 from `x0`; the fine history between grid nodes is
    /// the linear interpolant of `x0`.
    pub fn new(model: &'m ModelSpec, x0: &Segment, dt: f64) -> Result<Self> {
        model.check_segment(x0)?;
        let grid = x0.grid();
        let k = substeps(grid, dt)?;
        let dim = model.dim_d;
        let n_fine = grid.n_grid() * k + 1;
        let mut buf = Vec::with_capacity(3 * n_fine * dim);
        for j in 0..n_fine {
            let (i, rem) = (j / k, j % k);
            if rem == 0 {
                buf.extend_from_slice(x0.node(i));
            } else {
                let w = rem as f64 / k as f64;
                let (a, b) = (x0.node(i), x0.node(i + 1));
                buf.extend(a.iter().zip(b).map(|(a, b)| a + w * (b - a)));
            }
        }
        Ok(Self {
            model,
            grid,
            k,
            dt,
            dim,
            buf,
            step: 0,
            threshold: DEFAULT_EXPLOSION_THRESHOLD,
            f: vec![0.0; dim],
            g: vec![0.0; dim * model.dim_m],
            next: vec![0.0; dim],
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn window_start(&self) -> usize {
        self.buf.len() - (self.grid.n_grid() * self.k + 1) * self.dim
    }

    /// The current segment `X_t` on the grid.
    pub fn view(&self) -> SegmentView<'_> {
        SegmentView::new(
            self.grid,
            self.dim,
            self.k,
            &self.buf[self.window_start()..],
        )
        .expect("window holds a full segment")
    }

    pub fn segment(&self) -> Segment {
        self.view().to_segment()
    }

    pub fn current(&self) -> &[f64] {
        &self.buf[self.buf.len() - self.dim..]
    }

    /// Advances by `dt` with standard normal increments `xi` (length `m`).
    pub fn step(&mut self, xi: &[f64]) -> Result<()> {
        let start = self.window_start();
        let view = SegmentView::new(self.grid, self.dim, self.k, &self.buf[start..])?;
        advance(
            self.model,
            &view,
            self.dt,
            xi,
            &mut self.f,
            &mut self.g,
            &mut self.next,
        )?;
        self.step += 1;
        let norm = self.next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm <= self.threshold) {
            return Err(Error::Exploded { t: self.time() });
        }
        let window = (self.grid.n_grid() * self.k + 1) * self.dim;
        if self.buf.len() + self.dim > 3 * window {
            self.buf.drain(..start + self.dim);
        }
        self.buf.extend_from_slice(&self.next);
        Ok(())
    }
}

/// Snapshots of one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub model_name: String,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Segment>,
    pub stream: Option<RngStreamSpec>,
    /// Time at which the path left the explosion threshold; snapshots after
    /// it are missing.
    pub exploded_at: Option<f64>,
}

/// Runs a path with caller-supplied increments: `noise(step, xi)` fills the
/// standard normal vector used for step `step` (0-based).
pub fn simulate_path_with(
    model: &ModelSpec,
    x0: &Segment,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
    mut noise: impl FnMut(u64, &mut [f64]),
) -> Result<Trajectory> {
    let n_steps = total_steps(t_end, dt)?;
    let snaps = steps_for_times(snapshot_times, dt, t_end)?;
    let mut state = PathState::new(model, x0, dt)?;
    let mut xi = vec![0.0; model.dim_m];
    let mut states = Vec::with_capacity(snaps.len());
    let mut times = Vec::with_capacity(snaps.len());
    let mut next_snap = 0;
    let mut exploded_at = None;
    for n in 0..=n_steps {
        while next_snap < snaps.len() && snaps[next_snap] == n {
            times.push(snapshot_times[next_snap]);
            states.push(state.segment());
            next_snap += 1;
        }
        if n == n_steps {
            break;
        }
        noise(n, &mut xi);
        match state.step(&xi) {
            Ok(()) => {}
            Err(Error::Exploded { t }) => {
                exploded_at = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory {
        model_name: model.name.clone(),
        dt,
        times,
        states,
        stream: None,
        exploded_at,
    })
}

/// Runs a path driven by the Gaussian stream `stream`.
pub fn simulate_path(
    model: &ModelSpec,
    x0: &Segment,
    t_end: f64,
    dt: f64,
    stream: RngStreamSpec,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    let mut rng = stream.rng();
    let mut tr = simulate_path_with(model, x0, t_end, dt, snapshot_times, |_, xi| {
        fill_normal(&mut rng, xi)
    })?;
    tr.stream = Some(stream);
    Ok(tr)
}

/// Snapshots of many paths; `snapshots[j][i]` is path `i` at `times[j]`,
/// absent when the path exploded earlier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub model_name: String,
    pub n_paths: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<Option<Segment>>>,
    pub exploded_at: Vec<Option<f64>>,
}

impl Ensemble {
    /// Segments of non-exploded paths at snapshot `j`.
    pub fn at(&self, j: usize) -> Vec<Segment> {
        self.snapshots[j].iter().flatten().cloned().collect()
    }

    pub fn n_exploded(&self) -> usize {
        self.exploded_at.iter().filter(|e| e.is_some()).count()
    }

    /// CSV with columns `path,time,grid_index,dim_index,value`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["path", "time", "grid_index", "dim_index", "value"])?;
        for (j, t) in self.times.iter().enumerate() {
            for (p, seg) in self.snapshots[j].iter().enumerate() {
                let Some(seg) = seg else { continue };
                for i in 0..seg.grid().n_nodes() {
                    for (d, v) in seg.node(i).iter().enumerate() {
                        w.write_record([
                            p.to_string(),
                            t.to_string(),
                            i.to_string(),
                            d.to_string(),
                            v.to_string(),
                        ])?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn manifest(&self, model: &ModelSpec) -> serde_json::Value {
        serde_json::json!({
            "model": model.name,
            "drift": serde_json::to_value(&model.drift).unwrap_or(serde_json::Value::Null),
            "diffusion": serde_json::to_value(&model.diffusion).unwrap_or(serde_json::Value::Null),
            "master_seed": self.master_seed,
            "n_paths": self.n_paths,
            "dt": self.dt,
            "times": self.times,
            "n_exploded": self.n_exploded(),
        })
    }
}

/// Simulates `n_paths` paths, path `i` starting from `init(i)` and driven by
/// stream `(master_seed, i)`. Output is independent of the rayon pool size.
pub fn simulate_ensemble(
    model: &ModelSpec,
    init: impl Fn(usize) -> Segment + Sync,
    t_end: f64,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
    snapshot_times: &[f64],
) -> Result<Ensemble> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    let paths: Vec<Trajectory> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            simulate_path(
                model,
                &init(i),
                t_end,
                dt,
                RngStreamSpec::new(master_seed, i as u64),
                snapshot_times,
            )
        })
        .collect::<Result<_>>()?;
    let mut snapshots = vec![Vec::with_capacity(n_paths); snapshot_times.len()];
    let mut exploded_at = Vec::with_capacity(n_paths);
    for tr in paths {
        exploded_at.push(tr.exploded_at);
        let mut states = tr.states.into_iter();
        for snap in snapshots.iter_mut() {
            snap.push(states.next());
        }
    }
    Ok(Ensemble {
        model_name: model.name.clone(),
        n_paths,
        master_seed,
        dt,
        times: snapshot_times.to_vec(),
        snapshots,
        exploded_at,
    })
}
