//! Brenier maps from the standard Gaussian, the coupling
//! `(T₀(Z), T₁(Z))`, interpolants `T_t = (1−t)T₀ + tT₁` and their velocity
//! fields `v_t(T_t x) = T₁(x) − T₀(x)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::distributions::{validate, EvenStrongLogConcave, OneD};
use crate::error::{check_unit, Error, Result};
use crate::gauss::SpdMatrix;
use crate::quadrature::{gaussian_grid_1d, gaussian_moments, IntegrationSpec};
use crate::rng::Stream;
use crate::special::{normal_cdf, normal_log_pdf};
use crate::Estimate;

/// Nodes and half-width of the source-space table of a monotone 1D map.
pub const MAP_NODES: usize = 2049;
pub const MAP_RADIUS: f64 = 10.0;

/// Tolerance of 1D map inversion.
pub const INVERSION_TOL: f64 = 1e-12;

/// Monotone rearrangement `T = F⁻¹ ∘ Φ` from the standard Gaussian to an even
/// 1D law, tabulated on `MAP_NODES` source nodes over `[-MAP_RADIUS,
/// MAP_RADIUS]`.
///
/// `T` is a cubic Hermite interpolant through exact node values and
/// derivatives (with the Fritsch–Carlson limiter). The log-derivative
/// `ℓ = log T' = log φ(z) − log ρ(T(z))` is tabulated separately together with
/// `ℓ' = −z + U'(T)T'`, so `T'` stays accurate and positive far into the
/// tails where `T` itself saturates at the edge of a bounded support.
/// Linear extrapolation beyond the table.
#[derive(Debug, Clone)]
pub struct Monotone1D {
    h: f64,
    t: Vec<f64>,
    dt: Vec<f64>,
    l: Vec<f64>,
    dl: Vec<f64>,
    support: f64,
}

impl Monotone1D {
    pub fn from_target(target: &OneD) -> Self {
        let n = MAP_NODES;
        let mid = n / 2;
        let h = 2.0 * MAP_RADIUS / (n - 1) as f64;
        let mut t = vec![0.0; n];
        let mut dt = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut dl = vec![0.0; n];
        for j in 0..=mid {
            let z = -MAP_RADIUS + h * j as f64;
            let y = if j == mid { 0.0 } else { target.quantile(normal_cdf(z)) };
            let lj = normal_log_pdf(z) - target.log_density(y);
            let d = libm::exp(lj);
            t[j] = y;
            dt[j] = d;
            l[j] = lj;
            dl[j] = -z + target.potential().first(y) * d;
            let k = n - 1 - j;
            t[k] = -y;
            dt[k] = d;
            l[k] = lj;
            dl[k] = -dl[j];
        }
        dl[mid] = 0.0;
        Self {
            h,
            t,
            dt,
            l,
            dl,
            support: target.radius(),
        }
    }

    /// Half-width of the target support.
    pub fn support(&self) -> f64 {
        self.support
    }

    fn cell(&self, z: f64) -> (usize, f64) {
        let k = (((z + MAP_RADIUS) / self.h) as usize).min(MAP_NODES - 2);
        (k, (z + MAP_RADIUS) / self.h - k as f64)
    }

    fn eval_nonneg(&self, z: f64) -> f64 {
        let last = MAP_NODES - 1;
        if z >= MAP_RADIUS {
            return self.t[last] + self.dt[last] * (z - MAP_RADIUS);
        }
        let (k, s) = self.cell(z);
        let (y0, y1) = (self.t[k], self.t[k + 1]);
        let delta = y1 - y0;
        if delta <= 0.0 {
            return y0;
        }
        let mut m0 = self.dt[k] * self.h;
        let mut m1 = self.dt[k + 1] * self.h;
        let (a, b) = (m0 / delta, m1 / delta);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / libm::sqrt(r);
            m0 *= tau;
            m1 *= tau;
        }
        hermite(s, y0, y1, m0, m1)
    }

    fn log_jac_nonneg(&self, z: f64) -> f64 {
        let last = MAP_NODES - 1;
        if z >= MAP_RADIUS {
            return self.l[last];
        }
        let (k, s) = self.cell(z);
        hermite(s, self.l[k], self.l[k + 1], self.dl[k] * self.h, self.dl[k + 1] * self.h)
    }

    /// `T(z)`; odd by construction.
    pub fn eval(&self, z: f64) -> f64 {
        if z < 0.0 {
            -self.eval_nonneg(-z)
        } else {
            self.eval_nonneg(z)
        }
    }

    /// `log T'(z)`; even by construction.
    pub fn log_jac(&self, z: f64) -> f64 {
        self.log_jac_nonneg(z.abs())
    }

    pub fn jac(&self, z: f64) -> f64 {
        libm::exp(self.log_jac(z))
    }

    /// `T⁻¹(y)`; fails where `T` is numerically flat or `|y|` is not below
    /// the support half-width.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return self.inverse(-y).map(|z| -z);
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if !(y < self.support) {
            return Err(Error::Inversion(y));
        }
        let last = MAP_NODES - 1;
        if y > self.t[last] {
            if self.dt[last] > 0.0 {
                return Ok(MAP_RADIUS + (y - self.t[last]) / self.dt[last]);
            }
            return Err(Error::Inversion(y));
        }
        let mid = MAP_NODES / 2;
        let k = mid + self.t[mid..].partition_point(|v| *v < y) - 1;
        let k = k.min(last - 1);
        if self.t[k + 1] <= self.t[k] {
            return Err(Error::Inversion(y));
        }
        let z0 = -MAP_RADIUS + self.h * k as f64;
        invert_increasing(|z| (self.eval(z), self.jac(z)), y, z0, z0 + self.h)
    }

    /// Extreme finite-difference slopes over `points` equispaced nodes on
    /// `[-radius, radius]`, together with the extreme tabulated derivatives
    /// inside that range.
    pub fn slope_range(&self, radius: f64, points: usize) -> (f64, f64) {
        let dx = 2.0 * radius / (points - 1) as f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut prev = self.eval(-radius);
        for i in 1..points {
            let x = -radius + dx * i as f64;
            let cur = self.eval(x);
            let s = (cur - prev) / dx;
            lo = lo.min(s);
            hi = hi.max(s);
            prev = cur;
        }
        for i in 0..points {
            let d = self.jac(-radius + dx * i as f64);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }
}

fn hermite(s: f64, y0: f64, y1: f64, m0: f64, m1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
}

/// Solves `g(z) = y` for increasing `g` on a bracket `[lo, hi]` by Newton
/// with bisection safeguard.
fn invert_increasing<G: Fn(f64) -> (f64, f64)>(g: G, y: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, d) = g(z);
        if v > y {
            hi = z;
        } else {
            lo = z;
        }
        let mut next = z - (v - y) / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= INVERSION_TOL * (1.0 + z.abs()) * 1e-2 || hi - lo <= INVERSION_TOL * 1e-3 {
            return Ok(next);
        }
        z = next;
    }
    if hi - lo <= INVERSION_TOL * (1.0 + z.abs()) {
        Ok(z)
    } else {
        Err(Error::Inversion(y))
    }
}

/// A one-dimensional coordinate map.
#[derive(Debug, Clone)]
pub enum Map1D {
    Scale(f64),
    Monotone(Arc<Monotone1D>),
}

impl Map1D {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Map1D::Scale(s) => s * z,
            Map1D::Monotone(m) => m.eval(z),
        }
    }

    pub fn jac(&self, z: f64) -> f64 {
        match self {
            Map1D::Scale(s) => *s,
            Map1D::Monotone(m) => m.jac(z),
        }
    }

    pub fn log_jac(&self, z: f64) -> f64 {
        match self {
            Map1D::Scale(s) => libm::log(*s),
            Map1D::Monotone(m) => m.log_jac(z),
        }
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        match self {
            Map1D::Scale(s) => Ok(y / s),
            Map1D::Monotone(m) => m.inverse(y),
        }
    }

    fn slope_range(&self, radius: f64, points: usize) -> (f64, f64) {
        match self {
            Map1D::Scale(s) => (*s, *s),
            Map1D::Monotone(m) => m.slope_range(radius, points),
        }
    }
}

/// Gradient of a convex function pushing `γ` forward to a target law.
#[derive(Debug, Clone)]
pub enum BrenierMap {
    /// `x ↦ Sx` with `S = Σ^{1/2}`.
    Linear { s: SpdMatrix },
    Monotone1D(Arc<Monotone1D>),
    /// Coordinatewise maps.
    Product { factors: Vec<Map1D> },
}

impl BrenierMap {
    pub fn identity(n: usize) -> Self {
        BrenierMap::Linear { s: SpdMatrix::identity(n) }
    }

    pub fn dim(&self) -> usize {
        match self {
            BrenierMap::Linear { s } => s.dim(),
            BrenierMap::Monotone1D(_) => 1,
            BrenierMap::Product { factors } => factors.len(),
        }
    }

    /// Coordinate maps when the map acts coordinatewise.
    pub fn separable(&self) -> Option<Vec<Map1D>> {
        match self {
            BrenierMap::Linear { s } if s.is_diagonal() => Some(s.diagonal().into_iter().map(Map1D::Scale).collect()),
            BrenierMap::Linear { .. } => None,
            BrenierMap::Monotone1D(m) => Some(vec![Map1D::Monotone(m.clone())]),
            BrenierMap::Product { factors } => Some(factors.clone()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            BrenierMap::Linear { s } => {
                let m = s.matrix();
                let n = x.len();
                (0..n).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum()).collect()
            }
            BrenierMap::Monotone1D(m) => vec![m.eval(x[0])],
            BrenierMap::Product { factors } => factors.iter().zip(x).map(|(f, v)| f.eval(*v)).collect(),
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            BrenierMap::Linear { s } => s.matrix().clone(),
            BrenierMap::Monotone1D(m) => DMatrix::from_element(1, 1, m.jac(x[0])),
            BrenierMap::Product { factors } => {
                DMatrix::from_diagonal(&DVector::from_iterator(factors.len(), factors.iter().zip(x).map(|(f, v)| f.jac(*v))))
            }
        }
    }

    pub fn log_det_jacobian(&self, x: &[f64]) -> f64 {
        match self {
            BrenierMap::Linear { s } => s.log_det(),
            BrenierMap::Monotone1D(m) => m.log_jac(x[0]),
            BrenierMap::Product { factors } => factors.iter().zip(x).map(|(f, v)| f.log_jac(*v)).sum(),
        }
    }

    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            BrenierMap::Linear { s } => {
                let v = s.inverse().matrix() * DVector::from_column_slice(y);
                Ok(v.iter().copied().collect())
            }
            BrenierMap::Monotone1D(m) => Ok(vec![m.inverse(y[0])?]),
            BrenierMap::Product { factors } => factors.iter().zip(y).map(|(f, v)| f.inverse(*v)).collect(),
        }
    }
}

/// The Brenier map from `γ` to `target`: `Σ^{1/2}` for Gaussians, the
/// monotone rearrangement for 1D laws, and coordinatewise maps for products
/// and boxes.
pub fn brenier_from_gaussian(target: &EvenStrongLogConcave) -> Result<BrenierMap> {
    let v = validate(target)?;
    if !(v.even_ok && v.slc_ok) {
        return Err(Error::Malformed(alloc::format!(
            "target is not even strongly log-concave (worst violation {:e})",
            v.worst_violation
        )));
    }
    match target {
        EvenStrongLogConcave::GaussianZeroMean { cov } => Ok(BrenierMap::Linear { s: cov.sqrt() }),
        _ => match target.one_d_factors()? {
            Some(f) if f.len() == 1 => Ok(BrenierMap::Monotone1D(Arc::new(Monotone1D::from_target(&f[0])))),
            Some(f) => Ok(BrenierMap::Product {
                factors: f.iter().map(|g| Map1D::Monotone(Arc::new(Monotone1D::from_target(g)))).collect(),
            }),
            None => Err(Error::Unsupported(
                "Brenier maps to non-product targets beyond the Gaussian family".into(),
            )),
        },
    }
}

/// Grid for [`lipschitz_certificate`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub radius: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            radius: MAP_RADIUS,
            points: 8001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LipschitzCertificate {
    pub max_slope: f64,
    pub min_slope: f64,
}

/// Slope bound certifying the contraction property.
pub const CONTRACTION_TOL: f64 = 1e-8;

impl LipschitzCertificate {
    pub fn contraction(&self) -> bool {
        self.max_slope <= 1.0 + CONTRACTION_TOL
    }
}

/// Extreme slopes: exact eigenvalues for linear maps, grid slopes otherwise.
pub fn lipschitz_certificate(map: &BrenierMap, grid: GridSpec) -> LipschitzCertificate {
    match map {
        BrenierMap::Linear { s } => {
            let e = s.eigenvalues();
            LipschitzCertificate {
                max_slope: *e.last().unwrap(),
                min_slope: e[0],
            }
        }
        _ => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for f in map.separable().unwrap() {
                let (a, b) = f.slope_range(grid.radius, grid.points);
                lo = lo.min(a);
                hi = hi.max(b);
            }
            LipschitzCertificate {
                max_slope: hi,
                min_slope: lo,
            }
        }
    }
}

/// Two Brenier maps over a shared standard Gaussian source.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub t0: BrenierMap,
    pub t1: BrenierMap,
}

impl Coupling {
    pub fn new(t0: BrenierMap, t1: BrenierMap) -> Result<Self> {
        if t0.dim() != t1.dim() {
            return Err(Error::DimensionMismatch {
                expected: t0.dim(),
                got: t1.dim(),
            });
        }
        Ok(Self { t0, t1 })
    }

    /// Couples two targets through their Brenier maps.
    pub fn from_targets(a: &EvenStrongLogConcave, b: &EvenStrongLogConcave) -> Result<Self> {
        Self::new(brenier_from_gaussian(a)?, brenier_from_gaussian(b)?)
    }

    pub fn dim(&self) -> usize {
        self.t0.dim()
    }

    /// `(S₀, S₁)` when both maps are linear.
    pub fn linear_pair(&self) -> Option<(&SpdMatrix, &SpdMatrix)> {
        match (&self.t0, &self.t1) {
            (BrenierMap::Linear { s: a }, BrenierMap::Linear { s: b }) => Some((a, b)),
            _ => None,
        }
    }

    /// Coordinate maps of both ends when both act coordinatewise.
    pub fn separable_pair(&self) -> Option<(Vec<Map1D>, Vec<Map1D>)> {
        Some((self.t0.separable()?, self.t1.separable()?))
    }

    /// Swaps the endpoints; `T_t` of the result is `T_{1−t}` of `self`.
    pub fn reversed(&self) -> Self {
        Self {
            t0: self.t1.clone(),
            t1: self.t0.clone(),
        }
    }
}

/// `T_t = (1−t)T₀ + tT₁`.
#[derive(Debug, Clone, Copy)]
pub struct InterpolantMap<'a> {
    pub coupling: &'a Coupling,
    pub t: f64,
}

pub fn interpolant(c: &Coupling, t: f64) -> Result<InterpolantMap<'_>> {
    check_unit("t", t)?;
    Ok(InterpolantMap { coupling: c, t })
}

impl InterpolantMap<'_> {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let a = self.coupling.t0.eval(x);
        let b = self.coupling.t1.eval(x);
        a.iter().zip(&b).map(|(u, v)| (1.0 - self.t) * u + self.t * v).collect()
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.coupling.t0.jacobian(x) * (1.0 - self.t) + self.coupling.t1.jacobian(x) * self.t
    }

    pub fn log_det_jacobian(&self, x: &[f64]) -> Result<f64> {
        let v = match self.coupling.separable_pair() {
            Some((a, b)) => a
                .iter()
                .zip(&b)
                .zip(x)
                .map(|((f, g), v)| libm::log((1.0 - self.t) * f.jac(*v) + self.t * g.jac(*v)))
                .sum(),
            None => {
                let j = self.jacobian(x);
                let n = j.nrows();
                match j.cholesky() {
                    Some(c) => 2.0 * (0..n).map(|i| libm::log(c.l_dirty()[(i, i)])).sum::<f64>(),
                    None => f64::NAN,
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DegenerateMap)
        }
    }

    /// `T_t⁻¹(y)`.
    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        let t = self.t;
        if let Some((a, b)) = self.coupling.linear_pair() {
            let m = a.matrix() * (1.0 - t) + b.matrix() * t;
            let sol = m
                .lu()
                .solve(&DVector::from_column_slice(y))
                .ok_or(Error::DegenerateMap)?;
            return Ok(sol.iter().copied().collect());
        }
        if let Some((a, b)) = self.coupling.separable_pair() {
            return a
                .iter()
                .zip(&b)
                .zip(y)
                .map(|((f, g), v)| invert_1d(f, g, t, *v))
                .collect();
        }
        // strongly monotone map: damped Newton
        let mut x: Vec<f64> = y.to_vec();
        for _ in 0..100 {
            let r: Vec<f64> = self.eval(&x).iter().zip(y).map(|(p, q)| p - q).collect();
            let norm = libm::sqrt(r.iter().map(|v| v * v).sum::<f64>());
            if norm <= INVERSION_TOL * 1e-2 {
                return Ok(x);
            }
            let step = self
                .jacobian(&x)
                .lu()
                .solve(&DVector::from_vec(r))
                .ok_or(Error::Inversion(y[0]))?;
            let mut lambda = 1.0;
            loop {
                let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - lambda * b).collect();
                let rn: f64 = self.eval(&cand).iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
                if libm::sqrt(rn) < norm || lambda < 1e-8 {
                    x = cand;
                    break;
                }
                lambda *= 0.5;
            }
        }
        Err(Error::Inversion(y[0]))
    }
}

fn invert_1d(f: &Map1D, g: &Map1D, t: f64, y: f64) -> Result<f64> {
    let h = |z: f64| ((1.0 - t) * f.eval(z) + t * g.eval(z), (1.0 - t) * f.jac(z) + t * g.jac(z));
    if y == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while h(lo).0 > y {
        lo *= 2.0;
        if lo < -1e6 {
            return Err(Error::Inversion(y));
        }
    }
    while h(hi).0 < y {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Inversion(y));
        }
    }
    let z = invert_increasing(h, y, lo, hi)?;
    let (v, d) = h(z);
    if !(d > 0.0) || (v - y).abs() > 1e-9 * (1.0 + y.abs()) {
        return Err(Error::Inversion(y));
    }
    Ok(z)
}

/// `E|T₀(Z) − T₁(Z)|²`: exact `tr((S₀−S₁)²)` for linear pairs, 1D grid
/// quadrature for coordinatewise pairs, otherwise per `spec`.
pub fn mean_square_displacement(c: &Coupling, spec: IntegrationSpec) -> Result<Estimate> {
    if let Some((a, b)) = c.linear_pair() {
        let d = a.matrix() - b.matrix();
        return Ok(Estimate::exact((&d * &d).trace()));
    }
    if let (Some((a, b)), false) = (c.separable_pair(), matches!(spec, IntegrationSpec::MonteCarlo { .. })) {
        let (nodes, weights) = gaussian_grid_1d();
        let mut total = 0.0;
        for (f, g) in a.iter().zip(&b) {
            total += nodes
                .iter()
                .zip(&weights)
                .map(|(z, w)| {
                    let d = g.eval(*z) - f.eval(*z);
                    w * d * d
                })
                .sum::<f64>();
        }
        return Ok(Estimate::exact(total));
    }
    let m = gaussian_moments(c.dim(), 1, spec, |z, out| {
        let a = c.t0.eval(z);
        let b = c.t1.eval(z);
        out[0] = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum();
        Ok(())
    })?;
    Ok(m.estimate(0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoCrossing {
    /// Minimum of `⟨T_t x − T_t y, x − y⟩ / |x − y|²` over pairs and times.
    pub min_monotonicity: f64,
    /// Smaller of the two maps' certified lower slopes over the sampled range.
    pub lambda: f64,
}

impl NoCrossing {
    pub fn holds(&self) -> bool {
        self.lambda > 0.0 && self.min_monotonicity >= self.lambda * (1.0 - 1e-9)
    }
}

/// Samples `pair_count` pairs from `γ` and evaluates the monotonicity ratio
/// of `T_t` at every grid time.
pub fn no_crossing_check(c: &Coupling, pair_count: usize, t_grid: &[f64], seed: u64) -> Result<NoCrossing> {
    if pair_count == 0 {
        return Err(Error::OutOfRange {
            name: "pair_count",
            value: 0.0,
            expected: "> 0",
        });
    }
    for t in t_grid {
        check_unit("t", *t)?;
    }
    let n = c.dim();
    let mut s = Stream::new(seed, 0);
    let mut pairs = Vec::with_capacity(pair_count);
    let mut range = 0.0f64;
    for _ in 0..pair_count {
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        s.fill_normal(&mut x);
        s.fill_normal(&mut y);
        range = x.iter().chain(&y).fold(range, |m, v| m.max(v.abs()));
        pairs.push((x, y));
    }
    let grid = GridSpec {
        radius: (range + 0.5).min(MAP_RADIUS),
        points: 4001,
    };
    let lambda = lipschitz_certificate(&c.t0, grid)
        .min_slope
        .min(lipschitz_certificate(&c.t1, grid).min_slope);
    let mut min = f64::INFINITY;
    for (x, y) in &pairs {
        let a0 = c.t0.eval(x);
        let a1 = c.t1.eval(x);
        let b0 = c.t0.eval(y);
        let b1 = c.t1.eval(y);
        let d2: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
        if d2 == 0.0 {
            continue;
        }
        for &t in t_grid {
            let mut ip = 0.0;
            for i in 0..n {
                let tx = (1.0 - t) * a0[i] + t * a1[i];
                let ty = (1.0 - t) * b0[i] + t * b1[i];
                ip += (tx - ty) * (x[i] - y[i]);
            }
            min = min.min(ip / d2);
        }
    }
    Ok(NoCrossing {
        min_monotonicity: min,
        lambda,
    })
}

/// `v_t(y) = (T₁ − T₀)(T_t⁻¹ y)`.
pub fn velocity_at(c: &Coupling, t: f64, y: &[f64]) -> Result<Vec<f64>> {
    let x = interpolant(c, t)?.inverse(y)?;
    let a = c.t0.eval(&x);
    let b = c.t1.eval(&x);
    Ok(b.iter().zip(&a).map(|(p, q)| p - q).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{EvenPolynomial, Potential};
    use crate::geometry::SymmetricBody;

    fn linear(s: f64) -> BrenierMap {
        BrenierMap::Linear {
            s: SpdMatrix::scaled_identity(1, s).unwrap(),
        }
    }

    fn truncated(a: f64) -> EvenStrongLogConcave {
        EvenStrongLogConcave::TruncatedGaussian {
            body: SymmetricBody::interval(a).unwrap(),
        }
    }

    #[test]
    fn standard_gaussian_maps_to_identity() {
        let g = EvenStrongLogConcave::gaussian(SpdMatrix::identity(2));
        let m = brenier_from_gaussian(&g).unwrap();
        assert_eq!(m.eval(&[0.3, -1.2]), vec![0.3, -1.2]);
        let c = lipschitz_certificate(&m, GridSpec::default());
        assert_eq!((c.max_slope, c.min_slope), (1.0, 1.0));
    }

    #[test]
    fn monotone_construction_matches_linear() {
        let f = OneD::new(Potential::Polynomial(EvenPolynomial::gaussian(0.25).unwrap()), 10.0).unwrap();
        let m = Monotone1D::from_target(&f);
        for i in 0..=1000 {
            let z = -5.0 + 0.01 * i as f64;
            assert!((m.eval(z) - 0.5 * z).abs() < 1e-8, "{z}");
            assert!((m.jac(z) - 0.5).abs() < 1e-8, "{z}");
        }
        let c = lipschitz_certificate(&BrenierMap::Monotone1D(Arc::new(m)), GridSpec::default());
        assert!((c.max_slope - 0.5).abs() < 1e-8);
    }

    #[test]
    fn truncated_gaussian_map_is_a_contraction() {
        let m = brenier_from_gaussian(&truncated(1.0)).unwrap();
        let BrenierMap::Monotone1D(mm) = &m else { panic!() };
        for i in 0..=400 {
            let z = -10.0 + 0.05 * i as f64;
            let y = mm.eval(z);
            assert!(y.abs() <= 1.0);
            assert!((mm.eval(-z) + y).abs() <= 1e-15);
        }
        let c = lipschitz_certificate(&m, GridSpec::default());
        assert!(c.max_slope <= 1.0 + 1e-8, "{c:?}");
        // T'(0) = γ([-1,1]) for the restriction
        assert!((mm.jac(0.0) - 0.682_689_492_137_085_9).abs() < 1e-10);
        // T pushes γ to the target: E T(Z)² equals the target variance
        let (x, w) = gaussian_grid_1d();
        let m2: f64 = x.iter().zip(&w).map(|(z, w)| w * mm.eval(*z).powi(2)).sum();
        let f = OneD::truncated_gaussian(1.0).unwrap();
        assert!((m2 - f.variance()).abs() < 1e-10);
    }

    #[test]
    fn monotone_inverse_roundtrip() {
        let m = brenier_from_gaussian(&EvenStrongLogConcave::OneDPotential(OneD::quartic(1.0).unwrap())).unwrap();
        for z in [-4.0, -1.3, 0.0, 0.2, 3.7] {
            let y = m.eval(&[z]);
            assert!((m.inverse(&y).unwrap()[0] - z).abs() < 1e-10);
        }
        let t = brenier_from_gaussian(&truncated(0.5)).unwrap();
        assert!(t.inverse(&[0.7]).is_err());
    }

    #[test]
    fn interpolant_examples() {
        let c = Coupling::new(linear(0.5), linear(0.8)).unwrap();
        let it = interpolant(&c, 0.5).unwrap();
        assert!((it.eval(&[2.0])[0] - 1.3).abs() < 1e-15);
        assert!((it.jacobian(&[2.0])[(0, 0)] - 0.65).abs() < 1e-15);
        assert!((it.log_det_jacobian(&[2.0]).unwrap() - libm::log(0.65)).abs() < 1e-15);
        assert_eq!(interpolant(&c, 0.0).unwrap().eval(&[1.7]), c.t0.eval(&[1.7]));
        assert!(interpolant(&c, 1.5).is_err());
    }

    #[test]
    fn displacement_examples() {
        let c = Coupling::new(linear(0.5), linear(0.8)).unwrap();
        assert!((mean_square_displacement(&c, IntegrationSpec::Auto).unwrap().value - 0.09).abs() < 1e-15);
        let d = |a: &[f64]| BrenierMap::Linear { s: SpdMatrix::from_diagonal(a).unwrap() };
        let c2 = Coupling::new(d(&[0.5, 0.9]), d(&[0.8, 0.9])).unwrap();
        assert!((mean_square_displacement(&c2, IntegrationSpec::Auto).unwrap().value - 0.09).abs() < 1e-15);
        let same = Coupling::new(linear(0.5), linear(0.5)).unwrap();
        assert_eq!(mean_square_displacement(&same, IntegrationSpec::Auto).unwrap().value, 0.0);
        // product path agrees with linear
        let p = Coupling::new(
            BrenierMap::Product { factors: vec![Map1D::Scale(0.5), Map1D::Scale(0.9)] },
            BrenierMap::Product { factors: vec![Map1D::Scale(0.8), Map1D::Scale(0.9)] },
        )
        .unwrap();
        assert!((mean_square_displacement(&p, IntegrationSpec::Auto).unwrap().value - 0.09).abs() < 1e-13);
    }

    #[test]
    fn no_crossing_examples() {
        let id = Coupling::new(linear(1.0), linear(1.0)).unwrap();
        let r = no_crossing_check(&id, 100, &[0.0, 0.5, 1.0], 1).unwrap();
        assert!((r.min_monotonicity - 1.0).abs() < 1e-12);
        let c = Coupling::new(linear(0.5), linear(0.8)).unwrap();
        let r = no_crossing_check(&c, 100, &[0.0, 0.25, 0.5, 1.0], 1).unwrap();
        assert!((r.min_monotonicity - 0.5).abs() < 1e-12);
        assert!(r.holds());
        let tc = Coupling::from_targets(&truncated(0.5), &truncated(2.0)).unwrap();
        let r = no_crossing_check(&tc, 2000, &[0.0, 0.3, 0.7, 1.0], 2).unwrap();
        assert!(r.min_monotonicity > 0.0 && r.holds(), "{r:?}");
    }

    #[test]
    fn velocity_examples() {
        let c = Coupling::new(linear(0.5), linear(0.8)).unwrap();
        let v = velocity_at(&c, 0.5, &[1.0]).unwrap();
        assert!((v[0] - 0.3 / 0.65).abs() < 1e-15);
        let same = Coupling::new(linear(0.7), linear(0.7)).unwrap();
        assert_eq!(velocity_at(&same, 0.3, &[2.0]).unwrap(), vec![0.0]);
        let tc = Coupling::from_targets(&truncated(1.0), &EvenStrongLogConcave::OneDPotential(OneD::quartic(0.1).unwrap())).unwrap();
        for t in [0.0, 0.4, 1.0] {
            let it = interpolant(&tc, t).unwrap();
            let y = it.eval(&[1.7]);
            let v = velocity_at(&tc, t, &y).unwrap();
            let expect = tc.t1.eval(&[1.7])[0] - tc.t0.eval(&[1.7])[0];
            assert!((v[0] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_coupling_inverse_by_newton() {
        let a = BrenierMap::Linear {
            s: SpdMatrix::from_rows(&[vec![0.6, 0.1], vec![0.1, 0.5]]).unwrap(),
        };
        let b = brenier_from_gaussian(&EvenStrongLogConcave::ProductOfOneD {
            factors: vec![OneD::quartic(0.1).unwrap(), OneD::truncated_gaussian(2.0).unwrap()],
        })
        .unwrap();
        let c = Coupling::new(a, b).unwrap();
        let it = interpolant(&c, 0.4).unwrap();
        let x = [0.8, -1.1];
        let back = it.inverse(&it.eval(&x)).unwrap();
        assert!((back[0] - x[0]).abs() < 1e-10 && (back[1] - x[1]).abs() < 1e-10);
    }

    #[test]
    fn unsupported_targets_are_signalled() {
        let e = EvenStrongLogConcave::TruncatedGaussian {
            body: SymmetricBody::ellipsoid(SpdMatrix::identity(2)),
        };
        assert!(matches!(brenier_from_gaussian(&e), Err(Error::Unsupported(_))));
        let wide = EvenStrongLogConcave::gaussian(SpdMatrix::scaled_identity(1, 4.0).unwrap());
        assert!(brenier_from_gaussian(&wide).is_err());
    }
}
