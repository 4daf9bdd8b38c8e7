//! Sector geometry: the domain Ω_m = {x ∈ ℝ^N : x_1,…,x_m > 0}, staggered
//! tensor grids on it, sampled fields, reflections and the antisymmetric
//! extension to ℝ^N.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Problem parameters: ambient dimension N, number of Dirichlet axes m,
/// weight exponent γ ∈ (0, N) and absorption power α > 0.
///
/// m = 0 is admitted as a free-space validation mode (no Dirichlet axis);
/// the main theory assumes 1 ≤ m ≤ N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub dim: usize,
    pub m: usize,
    pub gamma: f64,
    pub alpha: f64,
}

impl DomainSpec {
    pub fn new(dim: usize, m: usize, gamma: f64, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be >= 1".into()));
        }
        if m > dim {
            return Err(Error::InvalidSpec(format!("m = {m} exceeds dimension {dim}")));
        }
        if !(gamma > 0.0 && gamma < dim as f64) {
            return Err(Error::InvalidSpec(format!(
                "gamma = {gamma} outside (0, {dim})"
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidSpec(format!("alpha = {alpha} must be positive")));
        }
        Ok(DomainSpec { dim, m, gamma, alpha })
    }

    /// The exponent 2/(γ+m) separating the three large-time regimes.
    pub fn critical_alpha(&self) -> f64 {
        2.0 / (self.gamma + self.m as f64)
    }

    /// Homogeneity degree γ + m of the canonical singular profile.
    pub fn degree(&self) -> f64 {
        self.gamma + self.m as f64
    }

    /// Normalization c_{m,γ} = γ(γ+2)⋯(γ+2m−2); equals 1 for m = 0.
    pub fn c_m_gamma(&self) -> f64 {
        let mut c = 1.0;
        for k in 0..self.m {
            c *= self.gamma + 2.0 * k as f64;
        }
        c
    }

    /// Product x_1⋯x_m over the Dirichlet coordinates (1 for m = 0).
    pub fn dirichlet_product(&self, x: &[f64]) -> f64 {
        x[..self.m].iter().product()
    }

    /// Strict interior test: all Dirichlet coordinates positive and x ≠ 0.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && x[..self.m].iter().all(|&v| v > 0.0)
            && x.iter().any(|&v| v != 0.0)
    }
}

/// Axis role in the tensor grid. Dirichlet axes carry the boundary of the
/// sector (staggered nodes in (0, R)); free axes are whole lines (staggered
/// nodes symmetric about 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Dirichlet,
    Free,
}

/// One axis of the tensor grid: `n` staggered nodes with spacing `h`.
///
/// Dirichlet: nodes (i + 1/2)h, i = 0..n, covering (0, nh).
/// Free: nodes (i + 1/2 − n/2)h, covering (−nh/2, nh/2); n must be even.
/// No node ever lies on the singular set {x_i = 0}.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    pub n: usize,
    pub h: f64,
}

impl Axis {
    pub fn new(kind: AxisKind, n: usize, h: f64) -> Result<Self> {
        if n == 0 || !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidGrid(format!("axis with n = {n}, h = {h}")));
        }
        if kind == AxisKind::Free && n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("free axis needs even n, got {n}")));
        }
        Ok(Axis { kind, n, h })
    }

    /// Node coordinate.
    pub fn coord(&self, i: usize) -> f64 {
        match self.kind {
            AxisKind::Dirichlet => (i as f64 + 0.5) * self.h,
            AxisKind::Free => (i as f64 + 0.5 - self.n as f64 / 2.0) * self.h,
        }
    }

    /// Covered extent: (0, R) for Dirichlet, (−R, R) for free.
    pub fn radius(&self) -> f64 {
        match self.kind {
            AxisKind::Dirichlet => self.n as f64 * self.h,
            AxisKind::Free => self.n as f64 * self.h / 2.0,
        }
    }
}

/// Tensor-product grid over the truncated sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorGrid {
    axes: Vec<Axis>,
}

impl SectorGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("no axes".into()));
        }
        Ok(SectorGrid { axes })
    }

    /// Uniform grid matching `spec`: the first m axes Dirichlet with
    /// (n_d, h_d), the rest free with (n_f, h_f).
    pub fn regular(spec: &DomainSpec, n_d: usize, h_d: f64, n_f: usize, h_f: f64) -> Result<Self> {
        let mut axes = Vec::with_capacity(spec.dim);
        for a in 0..spec.dim {
            if a < spec.m {
                axes.push(Axis::new(AxisKind::Dirichlet, n_d, h_d)?);
            } else {
                axes.push(Axis::new(AxisKind::Free, n_f, h_f)?);
            }
        }
        SectorGrid::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|ax| ax.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|ax| ax.n).collect()
    }

    /// Row-major strides, last axis contiguous.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.axes.len()];
        for a in (0..self.axes.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.axes[a + 1].n;
        }
        s
    }

    /// Coordinates of the node with flat index `idx`.
    pub fn coords(&self, mut idx: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.axes.len(), 0.0);
        for (a, ax) in self.axes.iter().enumerate().rev() {
            out[a] = ax.coord(idx % ax.n);
            idx /= ax.n;
        }
    }

    /// Largest spacing over all axes; controls the coarsest resolvable
    /// diffusion time.
    pub fn h_max(&self) -> f64 {
        self.axes.iter().map(|ax| ax.h).fold(0.0, f64::max)
    }
}

/// A scalar function sampled on a [`SectorGrid`], stamped with a time.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<SectorGrid>,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Arc<SectorGrid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value table length {} != grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(Field { grid, values, time })
    }

    pub fn zeros(grid: Arc<SectorGrid>, time: f64) -> Self {
        let n = grid.len();
        Field { grid, values: vec![0.0; n], time }
    }

    /// Sample a point function on every node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<SectorGrid>, time: f64, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        let mut x = Vec::new();
        for idx in 0..grid.len() {
            grid.coords(idx, &mut x);
            values.push(f(&x));
        }
        Field::new(grid, values, time)
    }

    pub fn grid(&self) -> &Arc<SectorGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            time: self.time,
        }
    }

    /// Nodewise a·self + b·other; grids must be identical.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::InvalidGrid("field grids differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        Ok(Field { grid: self.grid.clone(), values, time: self.time })
    }

    /// Clamped cubic interpolation at an arbitrary point. Dirichlet axes use
    /// odd-reflected ghost values across x_i = 0 (so the implicit boundary
    /// value is 0); beyond the outer truncation radius the data is taken
    /// as 0. Returns (value, fully_inside).
    pub fn eval_checked(&self, x: &[f64]) -> (f64, bool) {
        debug_assert_eq!(x.len(), self.grid.dim());
        let mut inside = true;
        let v = self.eval_rec(0, x, 0, &self.grid.strides(), &mut inside);
        (v, inside)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_checked(x).0
    }

    fn eval_rec(&self, axis: usize, x: &[f64], offset: usize, strides: &[usize], inside: &mut bool) -> f64 {
        let ax = self.grid.axis(axis);
        // Fractional node index along this axis.
        let u = match ax.kind {
            AxisKind::Dirichlet => x[axis] / ax.h - 0.5,
            AxisKind::Free => x[axis] / ax.h - 0.5 + ax.n as f64 / 2.0,
        };
        let k = u.floor();
        let theta = u - k;
        let k = k as isize;
        let mut s = [0.0f64; 4];
        for (d, sv) in s.iter_mut().enumerate() {
            let j = k - 1 + d as isize;
            *sv = self.sample_axis(axis, j, x, offset, strides, inside);
        }
        // Catmull-Rom weights.
        let t = theta;
        let w0 = 0.5 * (-t + 2.0 * t * t - t * t * t);
        let w1 = 0.5 * (2.0 - 5.0 * t * t + 3.0 * t * t * t);
        let w2 = 0.5 * (t + 4.0 * t * t - 3.0 * t * t * t);
        let w3 = 0.5 * (-t * t + t * t * t);
        let raw = w0 * s[0] + w1 * s[1] + w2 * s[2] + w3 * s[3];
        // Clamp to the stencil range so interpolation cannot create extrema.
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        raw.clamp(lo, hi)
    }

    /// Value of the (ghost-extended) lattice at signed index j along `axis`,
    /// recursing over the remaining axes.
    fn sample_axis(&self, axis: usize, j: isize, x: &[f64], offset: usize, strides: &[usize], inside: &mut bool) -> f64 {
        let ax = self.grid.axis(axis);
        let n = ax.n as isize;
        let (jj, sign) = match ax.kind {
            AxisKind::Dirichlet => {
                if j < 0 {
                    // Odd reflection across x = 0: node -(i+1/2)h mirrors (i+1/2)h.
                    (-j - 1, -1.0)
                } else {
                    (j, 1.0)
                }
            }
            AxisKind::Free => (j, 1.0),
        };
        if jj < 0 || jj >= n {
            *inside = false;
            return 0.0;
        }
        let off = offset + jj as usize * strides[axis];
        if axis + 1 == self.grid.dim() {
            sign * self.values[off]
        } else {
            sign * self.eval_rec(axis + 1, x, off, strides, inside)
        }
    }
}

/// A shareable point function on ℝ^N (or on the sector).
pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Reflection T_i: flips the sign of coordinate `axis` (0-based) before
/// evaluating. Applying it twice gives back the original evaluator.
pub fn reflect(f: &PointFn, axis: usize, dim: usize) -> Result<PointFn> {
    if axis >= dim {
        return Err(Error::AxisOutOfRange { axis, dim });
    }
    let g = f.clone();
    Ok(Arc::new(move |x: &[f64]| {
        let mut y = x.to_vec();
        y[axis] = -y[axis];
        g(&y)
    }))
}

/// Odd extension across the first m coordinate hyperplanes: equals `psi` on
/// the open sector, picks up one sign per flipped Dirichlet coordinate, and
/// vanishes whenever some x_i = 0, i < m.
pub fn antisym_extend(psi: &PointFn, spec: &DomainSpec) -> PointFn {
    let g = psi.clone();
    let m = spec.m;
    Arc::new(move |x: &[f64]| {
        let mut sign = 1.0;
        for &xi in &x[..m] {
            if xi == 0.0 {
                return 0.0;
            }
            if xi < 0.0 {
                sign = -sign;
            }
        }
        let mut y = x.to_vec();
        for yi in &mut y[..m] {
            *yi = yi.abs();
        }
        sign * g(&y)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec21() -> DomainSpec {
        DomainSpec::new(2, 1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(DomainSpec::new(2, 3, 1.0, 1.0).is_err());
        assert!(DomainSpec::new(2, 1, 2.5, 1.0).is_err());
        assert!(DomainSpec::new(2, 1, 0.0, 1.0).is_err());
        assert!(DomainSpec::new(2, 1, 1.0, 0.0).is_err());
        assert!(DomainSpec::new(2, 0, 0.5, 1.0).is_ok());
        assert_eq!(spec21().critical_alpha(), 1.0);
    }

    #[test]
    fn c_m_gamma_values() {
        // m = 2, γ = 1: γ(γ+2) = 3.
        let s = DomainSpec::new(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(s.c_m_gamma(), 3.0);
        let s = DomainSpec::new(3, 0, 1.0, 1.0).unwrap();
        assert_eq!(s.c_m_gamma(), 1.0);
    }

    #[test]
    fn staggered_nodes_avoid_boundary() {
        let ax = Axis::new(AxisKind::Dirichlet, 8, 0.25).unwrap();
        assert_eq!(ax.coord(0), 0.125);
        assert_eq!(ax.radius(), 2.0);
        let ax = Axis::new(AxisKind::Free, 8, 0.25).unwrap();
        assert_eq!(ax.coord(0), -0.875);
        assert_eq!(ax.coord(7), 0.875);
        for i in 0..8 {
            assert_ne!(ax.coord(i), 0.0);
        }
        assert!(Axis::new(AxisKind::Free, 7, 0.25).is_err());
    }

    #[test]
    fn reflect_is_involutive() {
        let f: PointFn = Arc::new(|x: &[f64]| x[0] * (x[1] + 2.0).cos() + x[1].powi(3));
        let r = reflect(&f, 1, 2).unwrap();
        let rr = reflect(&r, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert_eq!(rr(&x), f(&x));
        }
        assert!(reflect(&f, 2, 2).is_err());
    }

    #[test]
    fn reflect_odd_monomial_and_radial() {
        let f: PointFn = Arc::new(|x: &[f64]| x[0]);
        let g = reflect(&f, 0, 2).unwrap();
        assert_eq!(g(&[1.5, 0.3]), -1.5);
        let r: PointFn = Arc::new(|x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt());
        let gr = reflect(&r, 0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert_eq!(gr(&x), r(&x));
        }
    }

    #[test]
    fn antisym_extension_sign_rule() {
        let spec = spec21();
        let psi: PointFn = Arc::new(|x: &[f64]| x[0] / (x[0] * x[0] + x[1] * x[1] + 1.0));
        let ext = antisym_extend(&psi, &spec);
        assert_eq!(ext(&[-1.0, 0.5]), -psi(&[1.0, 0.5]));
        assert_eq!(ext(&[0.0, 0.7]), 0.0);
        // Restriction to the sector reproduces the input exactly.
        assert_eq!(ext(&[0.4, -0.9]), psi(&[0.4, -0.9]));
    }

    #[test]
    fn antisym_extension_anticommutes_with_reflections() {
        let spec = DomainSpec::new(3, 2, 1.0, 1.0).unwrap();
        let psi: PointFn = Arc::new(|x: &[f64]| x[0] * x[1] * (1.0 + x[2] * x[2]).recip());
        let ext = antisym_extend(&psi, &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for axis in 0..2 {
            let refl = reflect(&ext, axis, 3).unwrap();
            for _ in 0..100 {
                let x = [
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                ];
                assert_eq!(refl(&x), -ext(&x), "axis {axis} at {x:?}");
            }
        }
    }

    #[test]
    fn field_eval_reproduces_smooth_function() {
        let spec = spec21();
        let grid = Arc::new(SectorGrid::regular(&spec, 64, 0.125, 128, 0.125).unwrap());
        let f = |x: &[f64]| x[0] * (-0.25 * (x[0] * x[0] + x[1] * x[1])).exp();
        let field = Field::from_fn(grid, 0.0, f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = [rng.gen_range(0.3..6.0), rng.gen_range(-6.0..6.0)];
            let (v, inside) = field.eval_checked(&x);
            assert!(inside);
            assert!((v - f(&x)).abs() < 2e-4, "at {x:?}: {v} vs {}", f(&x));
        }
        // Odd ghost: interpolation through the boundary stays small and odd-ish.
        let near = field.eval(&[0.01, 1.0]);
        assert!(near.abs() < 0.02);
        // Outside the truncation radius the extension is 0.
        let (far, inside) = field.eval_checked(&[7.9, 0.0]);
        assert_eq!(far, 0.0);
        assert!(!inside);
    }

    #[test]
    fn field_validation() {
        let spec = spec21();
        let grid = Arc::new(SectorGrid::regular(&spec, 4, 0.5, 4, 0.5).unwrap());
        assert!(Field::new(grid.clone(), vec![0.0; 15], 0.0).is_err());
        assert!(Field::new(grid.clone(), vec![f64::NAN; 16], 0.0).is_err());
        assert!(Field::new(grid, vec![1.0; 16], 0.0).is_ok());
    }
}
