//! Pullback connections on gridded chart covers.
//!
//! A bundle is given by charts with rectangular parameter grids, transition
//! functions `h_ki` sampled on chart `k`, and a partition of unity `λ_i`. The
//! local connection on chart `k` is
//!
//! ```text
//! A_k = Σ_i λ_i · h_ki⁻¹ dh_ki,      F_k = dA_k + [A_x, A_y] dx∧dy
//! ```
//!
//! with derivatives from centered three-point stencils (second-order
//! one-sided stencils on grid edges). Three base models are shipped: an
//! interval (one chart), a circle covered by two arcs, and a sphere covered
//! by two stereographic disks `w` and `u = 1/w`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Interval,
    Circle,
    Sphere,
}

impl Base {
    pub fn dimension(&self) -> usize {
        match self {
            Base::Interval | Base::Circle => 1,
            Base::Sphere => 2,
        }
    }

    pub fn chart_count(&self) -> usize {
        match self {
            Base::Interval => 1,
            Base::Circle | Base::Sphere => 2,
        }
    }
}

/// Closed-form transition functions of the shipped models.
#[derive(Debug, Clone, PartialEq)]
pub enum Transition {
    /// Identity transitions in `U(size)`.
    Trivial { size: usize },
    /// Circle only: transition `e^{2πi·phase}` on the overlap component at
    /// angle `−π/2` and `1` on the one at `π/2`. `phase = 0.5` is the Möbius
    /// sign.
    Holonomy { phase: f64 },
    /// Sphere only: clutching `exp(i(nθ + s·sin θ))`.
    U1Clutching { degree: i64, homotopy: f64 },
    /// Sphere only: clutching `R(θ)·diag(e^{inθ}, 1)·R(θ)ᵀ` in `U(2)`.
    U2Clutching { degree: i64 },
}

impl Transition {
    pub fn matrix_size(&self) -> usize {
        match self {
            Transition::Trivial { size } => *size,
            Transition::Holonomy { .. } | Transition::U1Clutching { .. } => 1,
            Transition::U2Clutching { .. } => 2,
        }
    }

    /// Clutching value at angle `θ` on the sphere equator.
    pub fn clutching(&self, theta: f64) -> CMatrix {
        match self {
            Transition::Trivial { size } => CMatrix::identity(*size, *size),
            Transition::Holonomy { .. } => CMatrix::identity(1, 1),
            Transition::U1Clutching { degree, homotopy } => {
                CMatrix::from_element(1, 1, C64::from_polar(1.0, *degree as f64 * theta + homotopy * theta.sin()))
            }
            Transition::U2Clutching { degree } => {
                let (s, c) = theta.sin_cos();
                let r = CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]);
                let mut d = CMatrix::identity(2, 2);
                d[(0, 0)] = C64::from_polar(1.0, *degree as f64 * theta);
                &r * d * r.transpose()
            }
        }
    }
}

/// Smooth step equal to 1 on `[0, inner]` and 0 on `[outer, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionProfile {
    pub inner: f64,
    pub outer: f64,
}

impl PartitionProfile {
    pub fn value(&self, r: f64) -> f64 {
        fn f(t: f64) -> f64 {
            if t > 0.0 {
                (-1.0 / t).exp()
            } else {
                0.0
            }
        }
        if r <= self.inner {
            return 1.0;
        }
        if r >= self.outer {
            return 0.0;
        }
        let a = f(self.outer - r);
        a / (a + f(r - self.inner))
    }
}

/// Rectangular grid; one-dimensional charts use `shape[1] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Point,
    pub spacing: Point,
    pub shape: [usize; 2],
}

impl Grid {
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.shape[1] + iy
    }

    pub fn coords(&self, p: usize) -> [usize; 2] {
        [p / self.shape[1], p % self.shape[1]]
    }

    pub fn point(&self, p: usize) -> Point {
        let [ix, iy] = self.coords(p);
        [self.origin[0] + ix as f64 * self.spacing[0], self.origin[1] + iy as f64 * self.spacing[1]]
    }

    fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + (self.shape[axis] - 1) as f64 * self.spacing[axis]
    }

    /// Whether `x` lies in the grid box shrunk by `margin` spacings.
    pub fn contains(&self, x: Point, margin: f64, dimension: usize) -> bool {
        (0..dimension).all(|a| {
            let m = margin * self.spacing[a];
            x[a] >= self.origin[a] + m - 1e-12 && x[a] <= self.upper(a) - m + 1e-12
        })
    }

    /// Distance in grid steps from the nearest edge.
    fn edge_distance(&self, p: usize, dimension: usize) -> usize {
        let c = self.coords(p);
        (0..dimension).map(|a| c[a].min(self.shape[a] - 1 - c[a])).min().unwrap_or(0)
    }

    /// Second-order finite difference of sampled values along `axis`.
    fn derivative<T>(&self, values: &[T], p: usize, axis: usize, get: impl Fn(&T) -> CMatrix) -> CMatrix {
        let c = self.coords(p);
        let n = self.shape[axis];
        let h = self.spacing[axis];
        let at = |i: usize| {
            let mut q = c;
            q[axis] = i;
            get(&values[self.index(q[0], q[1])])
        };
        let i = c[axis];
        if i == 0 {
            (at(0) * C64::new(-3.0, 0.0) + at(1) * C64::new(4.0, 0.0) - at(2)) / C64::new(2.0 * h, 0.0)
        } else if i == n - 1 {
            (at(n - 1) * C64::new(3.0, 0.0) - at(n - 2) * C64::new(4.0, 0.0) + at(n - 3)) / C64::new(2.0 * h, 0.0)
        } else {
            (at(i + 1) - at(i - 1)) / C64::new(2.0 * h, 0.0)
        }
    }
}

/// Base, transitions, partition profile and grid resolution of a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleModel {
    pub base: Base,
    pub transition: Transition,
    pub resolution: usize,
    pub profile: PartitionProfile,
    /// Half-width of the sphere chart boxes.
    pub extent: f64,
}

const SPHERE_EXTENT: f64 = 1.5;

fn wrap(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI {
        t + 2.0 * PI
    } else {
        t
    }
}

fn invert(p: Point) -> Point {
    let r2 = p[0] * p[0] + p[1] * p[1];
    [p[0] / r2, -p[1] / r2]
}

impl BundleModel {
    pub fn new(base: Base, transition: Transition, resolution: usize) -> Result<Self> {
        let profile = match base {
            Base::Sphere => PartitionProfile { inner: 0.7, outer: 1.4 },
            Base::Circle => PartitionProfile { inner: PI / 4.0, outer: 3.0 * PI / 4.0 },
            Base::Interval => PartitionProfile { inner: 1.0, outer: 2.0 },
        };
        let model = BundleModel { base, transition, resolution, profile, extent: SPHERE_EXTENT };
        model.validate()?;
        Ok(model)
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        let model = BundleModel { resolution, ..self.clone() };
        model.validate()?;
        Ok(model)
    }

    pub fn with_profile(&self, inner: f64, outer: f64) -> Result<Self> {
        let model = BundleModel { profile: PartitionProfile { inner, outer }, ..self.clone() };
        model.validate()?;
        Ok(model)
    }

    /// U(1) bundle on the sphere with clutching `e^{inθ}`.
    pub fn sphere_u1(degree: i64, resolution: usize) -> Result<Self> {
        Self::new(Base::Sphere, Transition::U1Clutching { degree, homotopy: 0.0 }, resolution)
    }

    fn validate(&self) -> Result<()> {
        if self.resolution < 3 {
            return Err(Error::GridTooCoarse(format!("{} points per axis, need at least 3", self.resolution)));
        }
        let ok = matches!(
            (self.base, &self.transition),
            (_, Transition::Trivial { .. })
                | (Base::Circle, Transition::Holonomy { .. })
                | (Base::Sphere, Transition::U1Clutching { .. } | Transition::U2Clutching { .. })
        );
        if !ok {
            return Err(Error::InvalidTransition(format!("{:?} is not available on {:?}", self.transition, self.base)));
        }
        if self.transition.matrix_size() == 0 {
            return Err(Error::InvalidTransition("matrix size must be positive".into()));
        }
        let PartitionProfile { inner, outer } = self.profile;
        if !(inner > 0.0 && inner < outer) {
            return Err(Error::InvalidPartition(format!("profile radii {inner} < {outer} required")));
        }
        match self.base {
            Base::Sphere if outer >= self.extent || 1.0 / inner >= self.extent => Err(Error::InvalidPartition(format!(
                "supports must stay inside the chart boxes of half-width {}",
                self.extent
            ))),
            Base::Circle if inner < PI / 4.0 || outer > 3.0 * PI / 4.0 => {
                Err(Error::InvalidPartition("circle profile must lie within [π/4, 3π/4]".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn chart_count(&self) -> usize {
        self.base.chart_count()
    }

    pub fn dimension(&self) -> usize {
        self.base.dimension()
    }

    pub fn matrix_size(&self) -> usize {
        self.transition.matrix_size()
    }

    pub fn grid(&self, chart: usize) -> Grid {
        let n = self.resolution;
        match self.base {
            Base::Interval => Grid { origin: [0.0, 0.0], spacing: [1.0 / (n - 1) as f64, 1.0], shape: [n, 1] },
            Base::Circle => {
                let start = if chart == 0 { -3.0 * PI / 4.0 } else { PI / 4.0 };
                Grid { origin: [start, 0.0], spacing: [1.5 * PI / (n - 1) as f64, 1.0], shape: [n, 1] }
            }
            Base::Sphere => {
                let h = 2.0 * self.extent / (n - 1) as f64;
                Grid { origin: [-self.extent, -self.extent], spacing: [h, h], shape: [n, n] }
            }
        }
    }

    /// Whether `p` is a valid point of `chart` (inside its box, off any
    /// coordinate singularity).
    pub fn in_chart(&self, chart: usize, p: Point) -> bool {
        chart < self.chart_count() && self.grid(chart).contains(p, 0.0, self.dimension()) && p.iter().all(|x| x.is_finite())
    }

    /// Coordinate change from chart `from` to chart `to`, when the image lies
    /// in the target chart.
    pub fn change(&self, from: usize, to: usize, p: Point) -> Option<Point> {
        if !self.in_chart(from, p) {
            return None;
        }
        let q = if from == to {
            p
        } else {
            match self.base {
                Base::Interval => return None,
                Base::Circle => {
                    let t = wrap(p[0]);
                    let q = if to == 1 && t < 0.0 { t + 2.0 * PI } else if to == 0 { wrap(t) } else { t };
                    [q, 0.0]
                }
                Base::Sphere => {
                    if p[0] == 0.0 && p[1] == 0.0 {
                        return None;
                    }
                    invert(p)
                }
            }
        };
        self.in_chart(to, q).then_some(q)
    }

    /// Jacobian `∂q_a/∂p_b` of the coordinate change at `p`.
    pub fn jacobian(&self, from: usize, to: usize, p: Point) -> [[f64; 2]; 2] {
        if from == to || self.base != Base::Sphere {
            return [[1.0, 0.0], [0.0, 1.0]];
        }
        // q = 1/w, dq/dw = −1/w² = a + ib
        let (x, y) = (p[0], p[1]);
        let r4 = (x * x + y * y).powi(2);
        let a = -(x * x - y * y) / r4;
        let b = 2.0 * x * y / r4;
        [[a, -b], [b, a]]
    }

    /// Polar data `(|w|, arg w)` of a sphere point given in chart coordinates.
    fn sphere_polar(chart: usize, p: Point) -> (f64, f64) {
        let r = p[0].hypot(p[1]);
        let theta = p[1].atan2(p[0]);
        if chart == 0 {
            (r, theta)
        } else {
            (1.0 / r, -theta)
        }
    }

    /// `λ_i` at a point of chart `chart`.
    pub fn weight(&self, i: usize, chart: usize, p: Point) -> f64 {
        let first = match self.base {
            Base::Interval => 1.0,
            Base::Circle => self.profile.value(wrap(p[0]).abs()),
            Base::Sphere => self.profile.value(Self::sphere_polar(chart, p).0),
        };
        if i == 0 {
            first
        } else {
            1.0 - first
        }
    }

    /// `h_ki` at a point of chart `k`.
    pub fn transition(&self, k: usize, i: usize, p: Point) -> CMatrix {
        let n = self.matrix_size();
        if k == i {
            return CMatrix::identity(n, n);
        }
        match (&self.base, &self.transition) {
            (Base::Circle, Transition::Holonomy { phase }) => {
                // component at −π/2 carries the holonomy; h_10 = h_01⁻¹
                let sign = if k == 0 { 1.0 } else { -1.0 };
                let value = if wrap(p[0]) < 0.0 { C64::from_polar(1.0, sign * 2.0 * PI * phase) } else { C64::new(1.0, 0.0) };
                CMatrix::from_element(1, 1, value)
            }
            (Base::Sphere, t) => {
                let (_, theta) = Self::sphere_polar(k, p);
                let c = t.clutching(theta);
                if k == 1 {
                    c
                } else {
                    c.adjoint()
                }
            }
            _ => CMatrix::identity(n, n),
        }
    }

    /// Samples transitions and partition on every chart grid.
    pub fn sample(&self) -> Result<SampledBundle> {
        let charts = self.chart_count();
        let grids: Vec<Grid> = (0..charts).map(|k| self.grid(k)).collect();
        let transitions = SampledTransitionFamily {
            per_chart: (0..charts)
                .map(|k| {
                    (0..charts)
                        .map(|i| (0..grids[k].len()).into_par_iter().map(|p| self.transition(k, i, grids[k].point(p))).collect())
                        .collect()
                })
                .collect(),
        };
        let partition = SampledPartition {
            per_chart: (0..charts)
                .map(|k| {
                    (0..charts)
                        .map(|i| (0..grids[k].len()).map(|p| self.weight(i, k, grids[k].point(p))).collect())
                        .collect()
                })
                .collect(),
        };
        transitions.validate(UNITARITY_TOLERANCE)?;
        partition.validate()?;
        Ok(SampledBundle { model: self.clone(), grids, transitions, partition })
    }
}

pub const UNITARITY_TOLERANCE: f64 = 1e-8;
pub const PARTITION_TOLERANCE: f64 = 1e-12;

/// `per_chart[k][i][p] = h_ki` at grid point `p` of chart `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTransitionFamily {
    pub per_chart: Vec<Vec<Vec<CMatrix>>>,
}

impl SampledTransitionFamily {
    pub fn validate(&self, tolerance: f64) -> Result<()> {
        for (k, row) in self.per_chart.iter().enumerate() {
            for (i, samples) in row.iter().enumerate() {
                for (p, h) in samples.iter().enumerate() {
                    let n = h.nrows();
                    let drift = (h.adjoint() * h - CMatrix::identity(n, n)).norm();
                    if !(drift <= tolerance) {
                        return Err(Error::InvalidTransition(format!("h_{k}{i} is not unitary at sample {p} (drift {drift:.3e})")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `per_chart[k][i][p] = λ_i` at grid point `p` of chart `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPartition {
    pub per_chart: Vec<Vec<Vec<f64>>>,
}

impl SampledPartition {
    pub fn validate(&self) -> Result<()> {
        for (k, row) in self.per_chart.iter().enumerate() {
            let len = row.first().map(Vec::len).unwrap_or(0);
            for p in 0..len {
                let sum: f64 = row.iter().map(|w| w[p]).sum();
                if (sum - 1.0).abs() > PARTITION_TOLERANCE || row.iter().any(|w| w[p] < 0.0) {
                    return Err(Error::InvalidPartition(format!("weights sum to {sum} at sample {p} of chart {k}")));
                }
            }
        }
        Ok(())
    }
}

/// Matrix-valued form on one chart grid. Degree 1 stores one component per
/// coordinate direction, degree 2 stores the `dx∧dy` coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledForm {
    pub degree: usize,
    pub chart: usize,
    pub grid: Grid,
    pub components: Vec<Vec<CMatrix>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledBundle {
    pub model: BundleModel,
    pub grids: Vec<Grid>,
    pub transitions: SampledTransitionFamily,
    pub partition: SampledPartition,
}

impl SampledBundle {
    /// Multiplies one transition sample by a phase; used to exercise the
    /// consistency checks.
    pub fn corrupt_transition(&mut self, k: usize, i: usize, p: usize, angle: f64) {
        let h = &mut self.transitions.per_chart[k][i][p];
        *h *= C64::from_polar(1.0, angle);
    }

    /// Grid index of the sample nearest to `x` on chart `k`.
    pub fn nearest_sample(&self, k: usize, x: Point) -> usize {
        let g = &self.grids[k];
        let idx = |a: usize| (((x[a] - g.origin[a]) / g.spacing[a]).round().max(0.0) as usize).min(g.shape[a] - 1);
        g.index(idx(0), if self.model.dimension() == 2 { idx(1) } else { 0 })
    }
}

/// `(i, √λ_i(x), h_ki(x))` over the charts with positive weight at `x`.
pub fn classifying_point(model: &BundleModel, k: usize, x: Point) -> Result<Vec<(usize, f64, CMatrix)>> {
    if !model.in_chart(k, x) {
        return Err(Error::PointOutsideCharts(x[..model.dimension()].to_vec()));
    }
    Ok((0..model.chart_count())
        .filter_map(|i| {
            let w = model.weight(i, k, x);
            (w > 0.0).then(|| (i, w.sqrt(), model.transition(k, i, x)))
        })
        .collect())
}

fn check_grid(grid: &Grid, dimension: usize) -> Result<()> {
    if (0..dimension).any(|a| grid.shape[a] < 3) {
        return Err(Error::GridTooCoarse(format!("grid shape {:?}", grid.shape)));
    }
    Ok(())
}

fn inverse(h: &CMatrix) -> CMatrix {
    h.clone().try_inverse().unwrap_or_else(|| h.adjoint())
}

/// `A_k = Σ_i λ_i h_ki⁻¹ dh_ki` from sampled data on chart `k`.
pub fn local_connection(bundle: &SampledBundle, k: usize) -> Result<SampledForm> {
    let grid = bundle.grids[k];
    let dim = bundle.model.dimension();
    check_grid(&grid, dim)?;
    let n = bundle.model.matrix_size();
    let hs = &bundle.transitions.per_chart[k];
    let ws = &bundle.partition.per_chart[k];
    let components = (0..dim)
        .map(|axis| {
            (0..grid.len())
                .into_par_iter()
                .map(|p| {
                    let mut acc = CMatrix::zeros(n, n);
                    for (h, w) in hs.iter().zip(ws) {
                        if w[p] != 0.0 {
                            acc += inverse(&h[p]) * grid.derivative(h, p, axis, CMatrix::clone) * C64::new(w[p], 0.0);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(SampledForm { degree: 1, chart: k, grid, components })
}

/// `F = ∂_x A_y − ∂_y A_x + [A_x, A_y]`. One-dimensional charts carry no
/// 2-forms, so the result there has no components.
pub fn curvature(a: &SampledForm, dimension: usize) -> Result<SampledForm> {
    if a.degree != 1 || a.components.len() != dimension {
        return Err(Error::ShapeMismatch(format!("curvature needs a 1-form, got degree {}", a.degree)));
    }
    check_grid(&a.grid, dimension)?;
    if dimension < 2 {
        return Ok(SampledForm { degree: 2, chart: a.chart, grid: a.grid, components: Vec::new() });
    }
    let (ax, ay) = (&a.components[0], &a.components[1]);
    let g = a.grid;
    let f = (0..g.len())
        .into_par_iter()
        .map(|p| {
            g.derivative(ay, p, 0, CMatrix::clone) - g.derivative(ax, p, 1, CMatrix::clone) + (&ax[p] * &ay[p] - &ay[p] * &ax[p])
        })
        .collect();
    Ok(SampledForm { degree: 2, chart: a.chart, grid: g, components: vec![f] })
}

/// Closed-form evaluation of the same difference stencils at an arbitrary
/// point of chart `k`, with that chart's spacing.
struct Stencil<'a> {
    model: &'a BundleModel,
    k: usize,
    h: Point,
}

impl Stencil<'_> {
    fn shifted(&self, p: Point, axis: usize, s: f64) -> Point {
        let mut q = p;
        q[axis] += s * self.h[axis];
        q
    }

    fn dh(&self, i: usize, p: Point, axis: usize) -> CMatrix {
        let plus = self.model.transition(self.k, i, self.shifted(p, axis, 1.0));
        let minus = self.model.transition(self.k, i, self.shifted(p, axis, -1.0));
        (plus - minus) / C64::new(2.0 * self.h[axis], 0.0)
    }

    fn connection(&self, p: Point, axis: usize) -> CMatrix {
        let n = self.model.matrix_size();
        let mut acc = CMatrix::zeros(n, n);
        for i in 0..self.model.chart_count() {
            let w = self.model.weight(i, self.k, p);
            if w != 0.0 {
                acc += inverse(&self.model.transition(self.k, i, p)) * self.dh(i, p, axis) * C64::new(w, 0.0);
            }
        }
        acc
    }

    fn curvature(&self, p: Point) -> CMatrix {
        let d = |comp: usize, axis: usize| {
            (self.connection(self.shifted(p, axis, 1.0), comp) - self.connection(self.shifted(p, axis, -1.0), comp))
                / C64::new(2.0 * self.h[axis], 0.0)
        };
        let (ax, ay) = (self.connection(p, 0), self.connection(p, 1));
        d(1, 0) - d(0, 1) + (&ax * &ay - &ay * &ax)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeResidual {
    /// Max Frobenius deviation of `A_ℓ = Ad_{h_ℓk⁻¹} A_k + h_ℓk⁻¹ dh_ℓk`.
    pub connection: f64,
    /// Max Frobenius deviation of `F_ℓ = Ad_{h_ℓk⁻¹} F_k`.
    pub curvature: f64,
    pub points: usize,
    /// Chart-`ℓ` point of the largest deviation.
    pub worst: Option<Point>,
}

impl GaugeResidual {
    pub fn max(&self) -> f64 {
        self.connection.max(self.curvature)
    }
}

/// Compares the sampled forms on chart `ℓ` with the gauge transform of the
/// forms of chart `k` over the interior of the overlap.
pub fn gauge_residual(bundle: &SampledBundle, k: usize, l: usize) -> Result<GaugeResidual> {
    let model = &bundle.model;
    let dim = model.dimension();
    let charts = model.chart_count();
    if k >= charts || l >= charts {
        return Err(Error::NoOverlap(k, l));
    }
    let a_l = local_connection(bundle, l)?;
    let f_l = curvature(&a_l, dim)?;
    let grid_l = bundle.grids[l];
    let grid_k = bundle.grids[k];
    let stencil_k = Stencil { model, k, h: grid_k.spacing };
    let stencil_l = Stencil { model, k: l, h: grid_l.spacing };
    let margin = if dim == 2 { 3.0 } else { 2.0 };
    let deviations: Vec<Option<(f64, f64, Point)>> = (0..grid_l.len())
        .into_par_iter()
        .map(|p| {
            let q = grid_l.point(p);
            if grid_l.edge_distance(p, dim) < 2 {
                return None;
            }
            let x = model.change(l, k, q)?;
            if !grid_k.contains(x, margin, dim) {
                return None;
            }
            let h_lk = model.transition(l, k, q);
            let h_inv = inverse(&h_lk);
            let jac = model.jacobian(l, k, q);
            let a_k: Vec<CMatrix> = (0..dim).map(|axis| stencil_k.connection(x, axis)).collect();
            let mut conn = 0.0f64;
            for b in 0..dim {
                // pullback: (φ*A)_b = Σ_a A_a ∂x_a/∂q_b
                let mut pulled = CMatrix::zeros(h_lk.nrows(), h_lk.ncols());
                for (axis, comp) in a_k.iter().enumerate() {
                    pulled += comp * C64::new(jac[axis][b], 0.0);
                }
                let maurer_cartan = &h_inv * stencil_l.dh(k, q, b);
                let predicted = &h_inv * pulled * &h_lk + maurer_cartan;
                conn = conn.max((&a_l.components[b][p] - predicted).norm());
            }
            let mut curv = 0.0;
            if dim == 2 {
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                let predicted = &h_inv * stencil_k.curvature(x) * &h_lk * C64::new(det, 0.0);
                curv = (&f_l.components[0][p] - predicted).norm();
            }
            Some((conn, curv, q))
        })
        .collect();
    let mut out = GaugeResidual { connection: 0.0, curvature: 0.0, points: 0, worst: None };
    let mut worst = -1.0;
    for (conn, curv, q) in deviations.into_iter().flatten() {
        out.points += 1;
        out.connection = out.connection.max(conn);
        out.curvature = out.curvature.max(curv);
        if conn.max(curv) > worst {
            worst = conn.max(curv);
            out.worst = Some(q);
        }
    }
    if out.points == 0 {
        return Err(Error::NoOverlap(k, l));
    }
    Ok(out)
}

/// `(i/2π)·∫ tr F` as a partition-weighted Riemann sum over the chart grids.
pub fn chern_number(bundle: &SampledBundle) -> Result<f64> {
    if bundle.model.base != Base::Sphere {
        return Err(Error::NotClosedSurface);
    }
    let mut total = 0.0;
    for k in 0..bundle.model.chart_count() {
        let f = curvature(&local_connection(bundle, k)?, 2)?;
        let w = &bundle.partition.per_chart[k][k];
        let g = f.grid;
        let chart_sum: f64 = f.components[0]
            .iter()
            .zip(w)
            .map(|(fp, &lam)| if lam == 0.0 { 0.0 } else { lam * (C64::new(0.0, 1.0) * fp.trace()).re })
            .sum();
        total += chart_sum * g.spacing[0] * g.spacing[1] / (2.0 * PI);
    }
    Ok(total)
}
