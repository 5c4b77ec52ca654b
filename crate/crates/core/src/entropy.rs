//! Relative entropy along the interpolant and its derivatives.
//!
//! Every `μ_t`-integral is pulled back to the Gaussian source through
//! `y = T_t(x)`. With `Δ = T₁ − T₀`, `ΔJ = ∇T₁ − ∇T₀` and `B = (∇T_t)⁻¹`:
//!
//! ```text
//! D(t)   = E_γ[ W(T_t) − ½|Z|² − log det ∇T_t ]        (W = |x|²/2 gives D(μ_t‖γ))
//! D'(t)  = −E_γ[ tr(ΔJ·B) − ⟨∇W(T_t), Δ⟩ ]              = −∫ div^W(v_t) dμ_t
//! D''(t) =  E_γ[ tr((ΔJ·B)²) + ⟨∇²W(T_t)Δ, Δ⟩ ]          = ∫ 𝒢^W(v_t) dμ_t
//! ```
//!
//! and the local residual `D'' − 2∫|v_t|² − (D')²/n`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_unit, Error, Result};
use crate::gauss::{entropic_bm_gaps, gaussian_relative_entropy, SpdMatrix};
use crate::quadrature::{gaussian_grid_1d, gaussian_moments, IntegrationSpec};
use crate::special::HALF_LN_2PI;
use crate::transport::{interpolant, lipschitz_certificate, mean_square_displacement, Coupling, GridSpec, Map1D};
use crate::Estimate;

/// A smooth convex reference potential `W` (reference density `e^{-W}`).
pub trait WeightPotential: fmt::Debug + Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub enum Weight {
    /// `W(x) = |x|²/2`.
    Gaussian,
    Custom(Arc<dyn WeightPotential>),
}

#[derive(Debug, Clone)]
pub struct WeightedContext {
    pub weight: Weight,
    pub dim: usize,
}

impl WeightedContext {
    pub fn gaussian(dim: usize) -> Self {
        Self {
            weight: Weight::Gaussian,
            dim,
        }
    }

    pub fn custom(w: Arc<dyn WeightPotential>, dim: usize) -> Self {
        Self {
            weight: Weight::Custom(w),
            dim,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.weight, Weight::Gaussian)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.weight {
            Weight::Gaussian => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Weight::Custom(w) => w.value(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.weight {
            Weight::Gaussian => x.to_vec(),
            Weight::Custom(w) => w.gradient(x),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.weight {
            Weight::Gaussian => DMatrix::identity(x.len(), x.len()),
            Weight::Custom(w) => w.hessian(x),
        }
    }

    /// `div^W(v)(x) = div v − ⟨∇W, v⟩` from `v(x)` and `∇v(x)`.
    pub fn weighted_divergence(&self, x: &[f64], v: &[f64], jac: &DMatrix<f64>) -> f64 {
        jac.trace() - dot(&self.gradient(x), v)
    }

    /// `𝒢^W(v)(x) = tr((∇v)²) + ⟨∇²W v, v⟩`.
    pub fn gamma2(&self, x: &[f64], v: &[f64], jac: &DMatrix<f64>) -> f64 {
        let h = self.hessian(x);
        let hv = &h * DVector::from_column_slice(v);
        (jac * jac).trace() + dot(hv.as_slice(), v)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim != n {
            return Err(Error::DimensionMismatch { expected: self.dim, got: n });
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Entropy, its two derivatives, the displacement `∫|v_t|²dμ_t` and the
/// local residual at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowPoint {
    pub entropy: Estimate,
    pub first: Estimate,
    pub second: Estimate,
    pub displacement: Estimate,
    /// Only for the Gaussian reference; `None` otherwise.
    pub local_gap: Option<Estimate>,
}

fn closed_form(s0: &SpdMatrix, s1: &SpdMatrix, t: f64) -> Result<FlowPoint> {
    let n = s0.dim() as f64;
    let st = SpdMatrix::new(s0.matrix() * (1.0 - t) + s1.matrix() * t)?;
    let ds = s1.matrix() - s0.matrix();
    let cov = SpdMatrix::new(st.matrix() * st.matrix())?;
    let dsb = &ds * st.inverse().matrix();
    let l = dsb.trace() - (st.matrix() * &ds).trace();
    let m = (&ds * &ds).trace();
    let second = (&dsb * &dsb).trace() + m;
    Ok(FlowPoint {
        entropy: Estimate::exact(gaussian_relative_entropy(&cov)),
        first: Estimate::exact(-l),
        second: Estimate::exact(second),
        displacement: Estimate::exact(m),
        local_gap: Some(Estimate::exact(second - 2.0 * m - l * l / n)),
    })
}

fn separable(a: &[Map1D], b: &[Map1D], t: f64, entropy_only: bool) -> Result<FlowPoint> {
    let (nodes, weights) = gaussian_grid_1d();
    let n = a.len() as f64;
    let (mut e, mut l, mut g, mut m) = (0.0, 0.0, 0.0, 0.0);
    for (f0, f1) in a.iter().zip(b) {
        for (z, w) in nodes.iter().zip(&weights) {
            let (y0, y1) = (f0.eval(*z), f1.eval(*z));
            let (j0, j1) = (f0.jac(*z), f1.jac(*z));
            let yt = (1.0 - t) * y0 + t * y1;
            let jt = (1.0 - t) * j0 + t * j1;
            let log_jt = if t == 0.0 {
                f0.log_jac(*z)
            } else if t == 1.0 {
                f1.log_jac(*z)
            } else {
                libm::log(jt)
            };
            if !log_jt.is_finite() {
                return Err(Error::DegenerateMap);
            }
            e += w * (0.5 * yt * yt - 0.5 * z * z - log_jt);
            if entropy_only {
                continue;
            }
            let d = y1 - y0;
            let r = (j1 - j0) / jt;
            l += w * (r - yt * d);
            g += w * (r * r + d * d);
            m += w * d * d;
        }
    }
    Ok(FlowPoint {
        entropy: Estimate::exact(e),
        first: Estimate::exact(-l),
        second: Estimate::exact(g),
        displacement: Estimate::exact(m),
        local_gap: Some(Estimate::exact(g - 2.0 * m - l * l / n)),
    })
}

fn generic(ctx: &WeightedContext, c: &Coupling, t: f64, spec: IntegrationSpec) -> Result<FlowPoint> {
    let n = c.dim();
    let it = interpolant(c, t)?;
    let constant = if ctx.is_gaussian() { 0.0 } else { -(n as f64) * HALF_LN_2PI };
    let mom = gaussian_moments(n, 4, spec, |z, out| {
        let y0 = c.t0.eval(z);
        let y1 = c.t1.eval(z);
        let j0 = c.t0.jacobian(z);
        let j1 = c.t1.jacobian(z);
        let yt: Vec<f64> = y0.iter().zip(&y1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        let jt = &j0 * (1.0 - t) + &j1 * t;
        let log_det = it.log_det_jacobian(z)?;
        let d: Vec<f64> = y1.iter().zip(&y0).map(|(a, b)| a - b).collect();
        let dj = &j1 - &j0;
        let b = jt.clone().lu().try_inverse().ok_or(Error::DegenerateMap)?;
        let db = &dj * &b;
        let zz: f64 = z.iter().map(|v| v * v).sum();
        out[0] = ctx.value(&yt) - 0.5 * zz - log_det + constant;
        out[1] = ctx.weighted_divergence(&yt, &d, &db);
        out[2] = ctx.gamma2(&yt, &d, &db);
        out[3] = dot(&d, &d);
        Ok(())
    })?;
    let l = mom.mean[1];
    let nf = n as f64;
    let local = if ctx.is_gaussian() {
        let gap = mom.mean[2] - 2.0 * mom.mean[3] - l * l / nf;
        Some(Estimate::new(gap, mom.linear_se(&[0.0, -2.0 * l / nf, 1.0, -2.0])))
    } else {
        None
    };
    Ok(FlowPoint {
        entropy: mom.estimate(0),
        first: Estimate::new(-l, mom.estimate(1).std_error),
        second: mom.estimate(2),
        displacement: mom.estimate(3),
        local_gap: local,
    })
}

/// All flow quantities at time `t`.
///
/// Gaussian reference with two linear maps: closed forms. Gaussian reference
/// with coordinatewise maps (unless Monte Carlo is requested): composite 1D
/// quadrature per coordinate. Otherwise [`gaussian_moments`] under `spec`.
pub fn flow_point(ctx: &WeightedContext, c: &Coupling, t: f64, spec: IntegrationSpec) -> Result<FlowPoint> {
    check_unit("t", t)?;
    ctx.check_dim(c.dim())?;
    let mc = matches!(spec, IntegrationSpec::MonteCarlo { .. });
    if ctx.is_gaussian() {
        if let Some((a, b)) = c.linear_pair() {
            return closed_form(a, b, t);
        }
        if let (Some((a, b)), false) = (c.separable_pair(), mc) {
            return separable(&a, &b, t, false);
        }
    }
    generic(ctx, c, t, spec)
}

fn entropy_only(ctx: &WeightedContext, c: &Coupling, t: f64, spec: IntegrationSpec) -> Result<f64> {
    if ctx.is_gaussian() && c.linear_pair().is_none() && !matches!(spec, IntegrationSpec::MonteCarlo { .. }) {
        if let Some((a, b)) = c.separable_pair() {
            return Ok(separable(&a, &b, t, true)?.entropy.value);
        }
    }
    Ok(flow_point(ctx, c, t, spec)?.entropy.value)
}

/// `D(μ_t‖γ)` by change of variables.
pub fn pushforward_entropy(c: &Coupling, t: f64, spec: IntegrationSpec) -> Result<Estimate> {
    Ok(flow_point(&WeightedContext::gaussian(c.dim()), c, t, spec)?.entropy)
}

/// `dD/dt = −∫ div^W(v_t) dμ_t`.
pub fn entropy_first_derivative(ctx: &WeightedContext, c: &Coupling, t: f64, spec: IntegrationSpec) -> Result<Estimate> {
    Ok(flow_point(ctx, c, t, spec)?.first)
}

/// `d²D/dt² = ∫ 𝒢^W(v_t) dμ_t`.
pub fn entropy_second_derivative(ctx: &WeightedContext, c: &Coupling, t: f64, spec: IntegrationSpec) -> Result<Estimate> {
    Ok(flow_point(ctx, c, t, spec)?.second)
}

/// `∫𝒢(v_t)dμ_t − 2∫|v_t|²dμ_t − (1/n)(∫div(v_t)dμ_t)²` for the Gaussian
/// reference. Refuses couplings whose maps are not certified contractions.
pub fn local_inequality_gap(ctx: &WeightedContext, c: &Coupling, t: f64, spec: IntegrationSpec) -> Result<Estimate> {
    if !ctx.is_gaussian() {
        return Err(Error::Unsupported("local inequality needs the Gaussian reference".into()));
    }
    for m in [&c.t0, &c.t1] {
        let cert = lipschitz_certificate(m, GridSpec::default());
        if !cert.contraction() {
            return Err(Error::NotContraction(cert.max_slope));
        }
    }
    flow_point(ctx, c, t, spec)?
        .local_gap
        .ok_or_else(|| Error::Unsupported("local inequality".into()))
}

/// Finite-difference step for derivative checks.
pub const FD_STEP: f64 = 1e-4;

/// Richardson-refined finite differences of `D` at `t`; one-sided near the
/// ends of `[0, 1]`.
pub fn finite_differences<F: Fn(f64) -> Result<f64>>(d: F, t: f64, h: f64) -> Result<(f64, f64)> {
    if t - 2.0 * h >= 0.0 && t + 2.0 * h <= 1.0 {
        let (m2, m1, z, p1, p2) = (d(t - 2.0 * h)?, d(t - h)?, d(t)?, d(t + h)?, d(t + 2.0 * h)?);
        let d1h = (p1 - m1) / (2.0 * h);
        let d12h = (p2 - m2) / (4.0 * h);
        let d2h = (p1 - 2.0 * z + m1) / (h * h);
        let d22h = (p2 - 2.0 * z + m2) / (4.0 * h * h);
        Ok(((4.0 * d1h - d12h) / 3.0, (4.0 * d2h - d22h) / 3.0))
    } else {
        let s = if t - 2.0 * h < 0.0 { 1.0 } else { -1.0 };
        let f: Vec<f64> = (0..4).map(|k| d(t + s * h * k as f64)).collect::<Result<_>>()?;
        let first = s * (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        let second = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
        Ok((first, second))
    }
}

/// Sampled entropy curve with analytic and finite-difference derivatives and
/// the inequality residuals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyCurveReport {
    pub dim: usize,
    pub t_grid: Vec<f64>,
    pub entropy: Vec<f64>,
    pub entropy_std_error: Vec<f64>,
    pub first_derivative_analytic: Vec<f64>,
    pub first_derivative_fd: Vec<f64>,
    pub second_derivative_analytic: Vec<f64>,
    pub second_derivative_fd: Vec<f64>,
    /// `l = ∫div(v_t)dμ_t = −dD/dt`.
    pub l_values: Vec<f64>,
    /// Empty for non-Gaussian references.
    pub local_gap: Vec<f64>,
    pub local_gap_std_error: Vec<f64>,
    /// `θ = (E|X₀ − X₁|²)^{1/2}`.
    pub theta: f64,
    pub theta_std_error: f64,
    pub plain_gap: Vec<f64>,
    pub sigma_gap: Vec<f64>,
    /// Smallest midpoint residual of `t ↦ e^{-D(t)/n}` over consecutive grid
    /// triples (non-negative for a concave curve).
    pub concavity_residual: f64,
}

impl EntropyCurveReport {
    pub fn min_plain_gap(&self) -> f64 {
        self.plain_gap.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_sigma_gap(&self) -> f64 {
        self.sigma_gap.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest `|analytic − fd| / max(|analytic|, floor)` for the first and
    /// second derivatives.
    pub fn fd_discrepancy(&self, floor: f64) -> (f64, f64) {
        let rel = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs() / x.abs().max(floor))
                .fold(0.0, f64::max)
        };
        (
            rel(&self.first_derivative_analytic, &self.first_derivative_fd),
            rel(&self.second_derivative_analytic, &self.second_derivative_fd),
        )
    }
}

/// Fills an [`EntropyCurveReport`] over an increasing grid in `[0, 1]`.
pub fn entropy_curve(ctx: &WeightedContext, c: &Coupling, t_grid: &[f64], spec: IntegrationSpec) -> Result<EntropyCurveReport> {
    if t_grid.is_empty() {
        return Err(Error::Malformed("empty t grid".into()));
    }
    for w in t_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Malformed("t grid must be strictly increasing".into()));
        }
    }
    for t in t_grid {
        check_unit("t", *t)?;
    }
    let n = c.dim();
    let nf = n as f64;
    let theta_sq = mean_square_displacement(c, spec)?;
    let theta = libm::sqrt(theta_sq.value.max(0.0));
    let theta_se = if theta > 0.0 { theta_sq.std_error / (2.0 * theta) } else { 0.0 };
    let d_end0 = entropy_only(ctx, c, 0.0, spec)?;
    let d_end1 = entropy_only(ctx, c, 1.0, spec)?;
    let mut r = EntropyCurveReport {
        dim: n,
        t_grid: t_grid.to_vec(),
        entropy: Vec::new(),
        entropy_std_error: Vec::new(),
        first_derivative_analytic: Vec::new(),
        first_derivative_fd: Vec::new(),
        second_derivative_analytic: Vec::new(),
        second_derivative_fd: Vec::new(),
        l_values: Vec::new(),
        local_gap: Vec::new(),
        local_gap_std_error: Vec::new(),
        theta,
        theta_std_error: theta_se,
        plain_gap: Vec::new(),
        sigma_gap: Vec::new(),
        concavity_residual: f64::INFINITY,
    };
    for &t in t_grid {
        let p = flow_point(ctx, c, t, spec)?;
        let (fd1, fd2) = finite_differences(|s| entropy_only(ctx, c, s, spec), t, FD_STEP)?;
        r.entropy.push(p.entropy.value);
        r.entropy_std_error.push(p.entropy.std_error);
        r.first_derivative_analytic.push(p.first.value);
        r.first_derivative_fd.push(fd1);
        r.second_derivative_analytic.push(p.second.value);
        r.second_derivative_fd.push(fd2);
        r.l_values.push(-p.first.value);
        if let Some(g) = p.local_gap {
            r.local_gap.push(g.value);
            r.local_gap_std_error.push(g.std_error);
        }
        let gaps = entropic_bm_gaps(d_end0, d_end1, p.entropy.value, t, n, theta)?;
        r.plain_gap.push(gaps.plain_gap);
        r.sigma_gap.push(gaps.sigma_gap);
    }
    let e: Vec<f64> = r.entropy.iter().map(|d| libm::exp(-d / nf)).collect();
    for i in 1..t_grid.len().saturating_sub(1) {
        let (a, b, m) = (t_grid[i - 1], t_grid[i + 1], t_grid[i]);
        let w = (m - a) / (b - a);
        let chord = (1.0 - w) * e[i - 1] + w * e[i + 1];
        r.concavity_residual = r.concavity_residual.min(e[i] - chord);
    }
    Ok(r)
}

/// A vector field with analytic first and second derivatives.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Vec<f64>;
    /// `J[i][j] = ∂ⱼvᵢ`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
    /// `H[i][(j, k)] = ∂ⱼ∂ₖvᵢ`.
    fn hessians(&self, x: &[f64]) -> Vec<DMatrix<f64>>;
}

/// `vᵢ(x) = bᵢ + Σⱼ Mᵢⱼxⱼ + ½ Σⱼₖ Qᵢⱼₖ xⱼxₖ` with `Qᵢ` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticField {
    pub b: Vec<f64>,
    pub m: DMatrix<f64>,
    pub q: Vec<DMatrix<f64>>,
}

impl QuadraticField {
    pub fn new(b: Vec<f64>, m: DMatrix<f64>, q: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = b.len();
        if m.nrows() != n || m.ncols() != n || q.len() != n || q.iter().any(|h| h.nrows() != n || h.ncols() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
        let q = q.into_iter().map(|h| (&h + h.transpose()) * 0.5).collect();
        Ok(Self { b, m, q })
    }

    /// `v(x) = Mx`.
    pub fn linear(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self {
            b: vec![0.0; n],
            m,
            q: vec![DMatrix::zeros(n, n); n],
        }
    }
}

impl VectorField for QuadraticField {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        let xv = DVector::from_column_slice(x);
        let lin = &self.m * &xv;
        (0..self.dim())
            .map(|i| self.b[i] + lin[i] + 0.5 * (xv.transpose() * &self.q[i] * &xv)[(0, 0)])
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let xv = DVector::from_column_slice(x);
        let mut j = self.m.clone();
        for i in 0..self.dim() {
            let row = &self.q[i] * &xv;
            for k in 0..self.dim() {
                j[(i, k)] += row[k];
            }
        }
        j
    }

    fn hessians(&self, _x: &[f64]) -> Vec<DMatrix<f64>> {
        self.q.clone()
    }
}

/// Derivatives of a field by central differences.
pub struct FiniteDifferenceField<F> {
    pub f: F,
    pub dim: usize,
    pub h: f64,
}

impl<F: Fn(&[f64]) -> Vec<f64>> VectorField for FiniteDifferenceField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut j = DMatrix::zeros(n, n);
        let mut p = x.to_vec();
        for k in 0..n {
            p[k] = x[k] + self.h;
            let a = (self.f)(&p);
            p[k] = x[k] - self.h;
            let b = (self.f)(&p);
            p[k] = x[k];
            for i in 0..n {
                j[(i, k)] = (a[i] - b[i]) / (2.0 * self.h);
            }
        }
        j
    }

    fn hessians(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let n = self.dim;
        let mut h = vec![DMatrix::zeros(n, n); n];
        let mut p = x.to_vec();
        for k in 0..n {
            p[k] = x[k] + self.h;
            let a = self.jacobian(&p);
            p[k] = x[k] - self.h;
            let b = self.jacobian(&p);
            p[k] = x[k];
            for i in 0..n {
                for j in 0..n {
                    h[i][(j, k)] = (a[(i, j)] - b[(i, j)]) / (2.0 * self.h);
                }
            }
        }
        h
    }
}

/// `|𝒢^W(v) − [div^W(∇_v v) − ⟨∇div^W(v), v⟩]|` at `x`, with both sides
/// assembled term by term from the field's derivatives.
pub fn bochner_identity_check<V: VectorField + ?Sized>(ctx: &WeightedContext, v: &V, x: &[f64]) -> Result<f64> {
    let n = v.dim();
    ctx.check_dim(n)?;
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let val = v.value(x);
    let j = v.jacobian(x);
    let hs = v.hessians(x);
    let gw = ctx.gradient(x);
    let hw = ctx.hessian(x);
    let lhs = ctx.gamma2(x, &val, &j);

    // u = ∇_v v, uᵢ = Σⱼ ∂ⱼvᵢ vⱼ; div u = Σᵢⱼ ∂ᵢ∂ⱼvᵢ vⱼ + Σᵢⱼ ∂ⱼvᵢ ∂ᵢvⱼ
    let mut u = vec![0.0; n];
    let mut div_u = 0.0;
    for i in 0..n {
        for jj in 0..n {
            u[i] += j[(i, jj)] * val[jj];
            div_u += hs[i][(i, jj)] * val[jj] + j[(i, jj)] * j[(jj, i)];
        }
    }
    let divw_u = div_u - dot(&gw, &u);
    // ∂ₖ div^W(v) = Σᵢ ∂ₖ∂ᵢvᵢ − Σᵢ ∂ₖ∂ᵢW vᵢ − Σᵢ ∂ᵢW ∂ₖvᵢ
    let mut grad_divw = vec![0.0; n];
    for (k, g) in grad_divw.iter_mut().enumerate() {
        for i in 0..n {
            *g += hs[i][(i, k)] - hw[(k, i)] * val[i] - gw[i] * j[(i, k)];
        }
    }
    let rhs = divw_u - dot(&grad_divw, &val);
    Ok((lhs - rhs).abs())
}

/// `(tr((AB)²), tr(A²B), tr(A²))` for the trace chain
/// `tr((AB)²) ≥ tr(A²B) ≥ tr(A²)` with `A` symmetric and `B ⪰ I`.
pub fn trace_chain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (f64, f64, f64) {
    let ab = a * b;
    let a2 = a * a;
    ((&ab * &ab).trace(), (&a2 * b).trace(), a2.trace())
}
