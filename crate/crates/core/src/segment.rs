//! History segments: discretized elements of `C([-r, 0], R^d)` with the
//! supremum norm.
//!
//! A [`Segment`] owns `n_grid + 1` points on a uniform grid, index `i`
//! holding `x(-r + i * h)`. Points are stored contiguously, time-major.
//! [`SegmentView`] is a borrowed, possibly strided, window onto a finer
//! history buffer; the integrator hands views to drift functionals so that
//! no copy is made per step.
//!
//! Norms and the diameter are taken over grid nodes only. The true
//! supremum over `[-r, 0]` differs by at most the interpolation error,
//! which is `O(h)` for Lipschitz paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[-r, 0]`. Only `r` and `n_grid` are stored; the mesh is
/// derived so that `h * n_grid == r` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    r: f64,
    n_grid: usize,
}

impl Grid {
    pub fn new(r: f64, n_grid: usize) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "memory length must be positive, got {r}"
            )));
        }
        if n_grid == 0 {
            return Err(Error::InvalidArgument("n_grid must be at least 1".into()));
        }
        Ok(Self { r, n_grid })
    }

    /// Grid with mesh as close as possible to `h` (rounded to an integer
    /// number of subintervals).
    pub fn with_mesh(r: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mesh must be positive, got {h}"
            )));
        }
        Self::new(r, ((r / h).round() as usize).max(1))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn n_nodes(&self) -> usize {
        self.n_grid + 1
    }

    pub fn h(&self) -> f64 {
        self.r / self.n_grid as f64
    }

    /// Time of node `i`, exact at both ends of the window.
    pub fn node_time(&self, i: usize) -> f64 {
        -self.r * ((self.n_grid - i) as f64) / self.n_grid as f64
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "(r={}, n={}) vs (r={}, n={})",
                self.r, self.n_grid, other.r, other.n_grid
            )));
        }
        Ok(())
    }
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Borrowed view of a segment. Node `i` starts at `data[i * stride * dim]`.
#[derive(Debug, Clone, Copy)]
pub struct SegmentView<'a> {
    grid: Grid,
    dim: usize,
    stride: usize,
    data: &'a [f64],
}

impl<'a> SegmentView<'a> {
    /// `data` must hold at least `n_grid * stride + 1` points of `dim`
    /// values each.
    pub fn new(grid: Grid, dim: usize, stride: usize, data: &'a [f64]) -> Result<Self> {
        if dim == 0 || stride == 0 {
            return Err(Error::InvalidArgument(
                "dim and stride must be positive".into(),
            ));
        }
        let needed = (grid.n_grid * stride + 1) * dim;
        if data.len() < needed {
            return Err(Error::InvalidArgument(format!(
                "segment view needs {needed} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            grid,
            dim,
            stride,
            data,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn node(&self, i: usize) -> &'a [f64] {
        let start = i * self.stride * self.dim;
        &self.data[start..start + self.dim]
    }

    /// `x(0)`.
    #[inline]
    pub fn endpoint(&self) -> &'a [f64] {
        self.node(self.grid.n_grid)
    }

    /// `x(-r)`.
    #[inline]
    pub fn oldest(&self) -> &'a [f64] {
        self.node(0)
    }

    /// Scalar value of node `i` for one-dimensional segments.
    #[inline]
    pub fn scalar(&self, i: usize) -> f64 {
        self.data[i * self.stride * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &'a [f64]> + '_ {
        (0..self.grid.n_nodes()).map(move |i| self.node(i))
    }

    pub fn sup_norm(&self) -> f64 {
        self.nodes().map(norm).fold(0.0, f64::max)
    }

    /// Diameter of the range over grid nodes. Linear time for `dim == 1`,
    /// all pairs otherwise.
    pub fn diameter(&self) -> f64 {
        if self.dim == 1 {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..self.grid.n_nodes() {
                let v = self.scalar(i);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            return hi - lo;
        }
        let n = self.grid.n_nodes();
        let mut best = 0.0f64;
        for i in 0..n {
            let a = self.node(i);
            for j in (i + 1)..n {
                best = best.max(dist(a, self.node(j)));
            }
        }
        best
    }

    /// Linear interpolation between grid nodes; exact at nodes.
    pub fn eval_at(&self, t: f64) -> Result<Vec<f64>> {
        let r = self.grid.r;
        if !(t >= -r - 1e-12 * r && t <= 1e-12 * r) {
            return Err(Error::OutOfWindow { t, lo: -r });
        }
        let pos = ((t + r) / self.grid.h()).clamp(0.0, self.grid.n_grid as f64);
        let i = (pos.floor() as usize).min(self.grid.n_grid - 1);
        let w = pos - i as f64;
        let (a, b) = (self.node(i), self.node(i + 1));
        Ok(a.iter().zip(b).map(|(p, q)| p + w * (q - p)).collect())
    }

    /// Exact integral of the piecewise-linear interpolant of the scalar
    /// component `k` over `[a, b] ⊂ [-r, 0]`.
    pub fn integrate_component(&self, k: usize, a: f64, b: f64) -> f64 {
        let r = self.grid.r;
        let h = self.grid.h();
        let (a, b) = (a.clamp(-r, 0.0), b.clamp(-r, 0.0));
        if b <= a {
            return 0.0;
        }
        let value = |pos: f64| -> f64 {
            let pos = pos.clamp(0.0, self.grid.n_grid as f64);
            let i = (pos.floor() as usize).min(self.grid.n_grid - 1);
            let w = pos - i as f64;
            let (p, q) = (self.node(i)[k], self.node(i + 1)[k]);
            p + w * (q - p)
        };
        let pa = (a + r) / h;
        let pb = (b + r) / h;
        let first = pa.floor() as usize + 1;
        let last = pb.ceil() as usize;
        let mut total = 0.0;
        let mut prev = pa;
        let mut prev_v = value(pa);
        for node in first..last {
            let p = node as f64;
            if p <= prev || p >= pb {
                continue;
            }
            let v = value(p);
            total += 0.5 * (prev_v + v) * (p - prev) * h;
            prev = p;
            prev_v = v;
        }
        let vb = value(pb);
        total + 0.5 * (prev_v + vb) * (pb - prev) * h
    }

    pub fn to_segment(&self) -> Segment {
        let mut values = Vec::with_capacity(self.grid.n_nodes() * self.dim);
        for p in self.nodes() {
            values.extend_from_slice(p);
        }
        Segment {
            grid: self.grid,
            dim: self.dim,
            values,
        }
    }
}

/// An owned history segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Segment {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl Segment {
    /// Builds a segment from time-major values (`n_grid + 1` points of
    /// `dim` entries each).
    pub fn from_values(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        if values.len() != grid.n_nodes() * dim {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.n_nodes() * dim,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "segment value {bad} is not finite"
            )));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn scalar(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::from_values(grid, 1, values)
    }

    pub fn constant(grid: Grid, point: &[f64]) -> Self {
        let mut values = Vec::with_capacity(grid.n_nodes() * point.len());
        for _ in 0..grid.n_nodes() {
            values.extend_from_slice(point);
        }
        Self {
            grid,
            dim: point.len().max(1),
            values,
        }
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        Self::constant(grid, &vec![0.0; dim])
    }

    /// Samples a scalar path `t ↦ f(t)` at the grid nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n_nodes()).map(|i| f(grid.node_time(i))).collect();
        Self::scalar(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn view(&self) -> SegmentView<'_> {
        SegmentView {
            grid: self.grid,
            dim: self.dim,
            stride: 1,
            data: &self.values,
        }
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn endpoint(&self) -> &[f64] {
        self.node(self.grid.n_grid)
    }

    pub fn sup_norm(&self) -> f64 {
        self.view().sup_norm()
    }

    pub fn diameter(&self) -> f64 {
        self.view().diameter()
    }

    pub fn eval_at(&self, t: f64) -> Result<Vec<f64>> {
        self.view().eval_at(t)
    }

    /// Drops the oldest `k` points and appends `k` new ones, where
    /// `new_values` holds `k * dim` values in time order.
    pub fn shift_append(&self, new_values: &[f64]) -> Result<Segment> {
        if !new_values.len().is_multiple_of(self.dim) {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: new_values.len() % self.dim,
            });
        }
        let k = new_values.len() / self.dim;
        if k > self.grid.n_grid {
            return Err(Error::InvalidArgument(format!(
                "cannot append {k} points to a window of {} intervals",
                self.grid.n_grid
            )));
        }
        let mut values = Vec::with_capacity(self.values.len());
        values.extend_from_slice(&self.values[k * self.dim..]);
        values.extend_from_slice(new_values);
        Segment::from_values(self.grid, self.dim, values)
    }

    /// Pointwise difference `self - other`.
    pub fn sub(&self, other: &Segment) -> Result<Segment> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Segment {
            grid: self.grid,
            dim: self.dim,
            values,
        })
    }

    /// Adds the constant vector `c` to every point.
    pub fn shifted(&self, c: &[f64]) -> Segment {
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            *v += c[i % self.dim];
        }
        out
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Segment {
        Segment {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn check_compatible(&self, other: &Segment) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    /// Sup-norm distance between two compatible segments.
    pub fn sup_distance(&self, other: &Segment) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .chunks_exact(self.dim)
            .zip(other.values.chunks_exact(self.dim))
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max))
    }

    /// Flat serialization row: `r, n_grid, dim`, then values with the
    /// dimension index outermost and time ascending within each dimension.
    pub fn to_row(&self) -> Vec<f64> {
        let n = self.grid.n_nodes();
        let mut row = Vec::with_capacity(3 + self.values.len());
        row.push(self.grid.r);
        row.push(self.grid.n_grid as f64);
        row.push(self.dim as f64);
        for k in 0..self.dim {
            for i in 0..n {
                row.push(self.values[i * self.dim + k]);
            }
        }
        row
    }

    pub fn from_row(row: &[f64]) -> Result<Segment> {
        if row.len() < 3 {
            return Err(Error::InvalidArgument(
                "segment row needs a 3-value header".into(),
            ));
        }
        let n_grid = row[1];
        let dim = row[2];
        if n_grid.fract() != 0.0 || dim.fract() != 0.0 || n_grid < 1.0 || dim < 1.0 {
            return Err(Error::InvalidArgument(
                "segment row header must hold positive integers".into(),
            ));
        }
        let grid = Grid::new(row[0], n_grid as usize)?;
        let dim = dim as usize;
        let n = grid.n_nodes();
        let body = &row[3..];
        if body.len() != n * dim {
            return Err(Error::InvalidArgument(format!(
                "segment row has {} values, expected {}",
                body.len(),
                n * dim
            )));
        }
        let mut values = vec![0.0; n * dim];
        for k in 0..dim {
            for i in 0..n {
                values[i * dim + k] = body[k * n + i];
            }
        }
        Segment::from_values(grid, dim, values)
    }

    /// Writes segments as CSV rows (one segment per row) for replay.
    pub fn write_csv<W: std::io::Write>(segments: &[Segment], out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        for s in segments {
            w.write_record(s.to_row().iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<Segment>> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad segment csv value: {e}")))?;
            out.push(Segment::from_row(&row)?);
        }
        Ok(out)
    }
}

impl From<Segment> for Vec<f64> {
    fn from(s: Segment) -> Self {
        s.to_row()
    }
}

impl TryFrom<Vec<f64>> for Segment {
    type Error = Error;

    fn try_from(row: Vec<f64>) -> Result<Self> {
        Segment::from_row(&row)
    }
}

/// Truncated distance `d_ρ(x, y) = min(‖x − y‖ / ρ, 1)`.
pub fn d_rho(x: &Segment, y: &Segment, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must be positive, got {rho}"
        )));
    }
    Ok((x.sup_distance(y)? / rho).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid {
        Grid::new(1.0, n).unwrap()
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(Segment::zeros(grid(4), 1).sup_norm(), 0.0);
        assert_eq!(Segment::constant(grid(4), &[3.0, 4.0]).sup_norm(), 5.0);
        let s = Segment::scalar(grid(2), vec![-2.0, 1.0, 0.5]).unwrap();
        assert_eq!(s.sup_norm(), 2.0);
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(Segment::constant(grid(5), &[7.0]).diameter(), 0.0);
        let lin = Segment::from_fn(grid(10), |t| 2.0 * t + 1.0).unwrap();
        assert!((lin.diameter() - 2.0).abs() < 1e-15);
        let s = Segment::scalar(grid(2), vec![0.0, 3.0, 1.0]).unwrap();
        assert_eq!(s.diameter(), 3.0);
    }

    #[test]
    fn diameter_multidim_pairs() {
        let s = Segment::from_values(grid(2), 2, vec![0.0, 0.0, 3.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(s.diameter(), 5.0);
    }

    #[test]
    fn d_rho_examples() {
        let g = grid(3);
        let x = Segment::constant(g, &[1.0]);
        assert_eq!(d_rho(&x, &x, 1.0).unwrap(), 0.0);
        let y = Segment::constant(g, &[1.5]);
        assert_eq!(d_rho(&x, &y, 1.0).unwrap(), 0.5);
        let z = Segment::constant(g, &[8.0]);
        assert_eq!(d_rho(&x, &z, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn d_rho_rejects_mismatch() {
        let x = Segment::zeros(grid(3), 1);
        let y = Segment::zeros(grid(4), 1);
        assert!(matches!(d_rho(&x, &y, 1.0), Err(Error::GridMismatch(_))));
        let z = Segment::zeros(grid(3), 2);
        assert!(matches!(d_rho(&x, &z, 1.0), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn endpoint_eval_and_shift() {
        let g = Grid::new(2.0, 4).unwrap();
        assert_eq!(Segment::constant(g, &[2.5]).endpoint(), &[2.5]);
        let lin = Segment::from_fn(g, |t| 1.0 + t).unwrap();
        assert!((lin.eval_at(-1.0).unwrap()[0]).abs() < 1e-15);
        assert!(lin.eval_at(0.1).is_err());
        assert!(lin.eval_at(-2.1).is_err());

        let x = Segment::scalar(g, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let k = 2;
        let y = x.shift_append(&[10.0, 11.0]).unwrap();
        assert_eq!(y.values().len(), 5);
        let h = g.h();
        for j in 0..(g.n_nodes() - k) {
            let t = -g.r() + j as f64 * h;
            let old = x.eval_at(t + k as f64 * h).unwrap();
            assert_eq!(y.eval_at(t).unwrap(), old);
        }
        assert_eq!(y.endpoint(), &[11.0]);
        assert!(x.shift_append(&[0.0; 5]).is_err());
    }

    #[test]
    fn integrate_linear_interpolant() {
        let g = Grid::new(1.0, 7).unwrap();
        let s = Segment::from_fn(g, |t| 3.0 * t + 1.0).unwrap();
        let exact = |a: f64, b: f64| 1.5 * (b * b - a * a) + (b - a);
        for (a, b) in [(-1.0, 0.0), (-0.33, -0.1), (-0.9, -0.05), (-0.5, -0.5)] {
            let got = s.view().integrate_component(0, a, b);
            assert!((got - exact(a, b)).abs() < 1e-12, "{a} {b}: {got}");
        }
    }

    #[test]
    fn row_round_trip_and_json() {
        let s = Segment::from_values(grid(2), 2, vec![1.0, -1.0, 2.0, -2.0, 3.0, -3.0]).unwrap();
        let row = s.to_row();
        assert_eq!(row, vec![1.0, 2.0, 2.0, 1.0, 2.0, 3.0, -1.0, -2.0, -3.0]);
        let json = serde_json::to_string(&s).unwrap();
        let back: Segment = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let mut buf = Vec::new();
        Segment::write_csv(std::slice::from_ref(&s), &mut buf).unwrap();
        assert_eq!(Segment::read_csv(buf.as_slice()).unwrap(), vec![s]);
    }

    #[test]
    fn strided_view_samples_every_stride() {
        let data: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let v = SegmentView::new(Grid::new(1.0, 4).unwrap(), 1, 2, &data).unwrap();
        let nodes: Vec<f64> = v.nodes().map(|p| p[0]).collect();
        assert_eq!(nodes, vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert_eq!(v.diameter(), 8.0);
    }

    fn seg_strategy() -> impl Strategy<Value = Segment> {
        prop::collection::vec(-50.0..50.0f64, 9)
            .prop_map(|v| Segment::scalar(Grid::new(1.0, 8).unwrap(), v).unwrap())
    }

    proptest! {
        #[test]
        fn d_rho_is_a_bounded_metric(x in seg_strategy(), y in seg_strategy(), z in seg_strategy(), rho in 0.1..20.0f64) {
            let dxy = d_rho(&x, &y, rho).unwrap();
            prop_assert!((0.0..=1.0).contains(&dxy));
            prop_assert_eq!(dxy, d_rho(&y, &x, rho).unwrap());
            prop_assert_eq!(d_rho(&x, &x, rho).unwrap(), 0.0);
            let dxz = d_rho(&x, &z, rho).unwrap();
            let dzy = d_rho(&z, &y, rho).unwrap();
            prop_assert!(dxy <= dxz + dzy + 1e-12);
            if x.sup_distance(&y).unwrap() >= rho {
                prop_assert_eq!(dxy, 1.0);
            }
        }

        #[test]
        fn diameter_bounds_and_lipschitz(x in seg_strategy(), y in seg_strategy(), c in -100.0..100.0f64) {
            prop_assert!(x.diameter() <= 2.0 * x.sup_norm() + 1e-12);
            prop_assert!((x.shifted(&[c]).diameter() - x.diameter()).abs() < 1e-9);
            let dist = x.sup_distance(&y).unwrap();
            prop_assert!((x.diameter() - y.diameter()).abs() <= 2.0 * dist + 1e-9);
            prop_assert!((x.endpoint()[0] - y.endpoint()[0]).abs() <= dist + 1e-12);
        }
    }
}
