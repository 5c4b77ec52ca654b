//! Sup-convolutions `h = sup M_p^t(f(x₀), g(x₁))`, the Borell–Brascamp–Lieb
//! checks in Gauss space and for β-homogeneous reference measures, the
//! Hölder chain behind the functional inequality, and Donsker–Varadhan
//! duality.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::Cell;

use nalgebra::DMatrix;

use crate::error::{check_unit, Error, Result};
use crate::gauss::{gaussian_relative_entropy, power_mean, spd_sqrt, ExtReal, SpdMatrix};
use crate::geometry::{combo_membership, gaussian_measure_mc, Membership, MinkowskiCombination, Region, SymmetricBody, MEMBERSHIP_MAX_ITER, MEMBERSHIP_TOL};
use crate::quadrature::{Adaptive, IntegrationSpec, Rule, DEFAULT_MC_SAMPLES};
use crate::special::{normal_log_pdf, normal_pdf};
use crate::Verdict;

/// Relative tolerance for the log-concavity and monotonicity checks on
/// tabulated functions.
pub const SHAPE_TOL: f64 = 1e-10;

/// Even log-concave functions with finite Gaussian integral.
#[derive(Debug, Clone, PartialEq)]
pub enum LogConcaveFunction {
    /// `exp(−½xᵀAx)`, `A ⪰ 0`.
    GaussianQuadratic { a: DMatrix<f64> },
    /// `1_K`.
    BodyIndicator { body: SymmetricBody },
    /// `f(x)` log-linearly interpolated in `|x|` between `nodes` (starting at
    /// 0, increasing) and zero beyond the last node.
    TabulatedEven1D { nodes: Vec<f64>, values: Vec<f64> },
}

impl LogConcaveFunction {
    pub fn gaussian_quadratic(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Malformed(format!("quadratic form must be square, got {}×{}", a.nrows(), a.ncols())));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("A"));
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let asym = (&a - a.transpose()).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
        if asym > 1e-12 {
            return Err(Error::NotSymmetric(asym));
        }
        let min = a.clone().symmetric_eigen().eigenvalues.min();
        if min < -1e-12 * scale {
            return Err(Error::NotPositiveDefinite(min / scale));
        }
        Ok(Self::GaussianQuadratic { a })
    }

    /// `exp(−a x²/2)` on the line.
    pub fn gaussian_1d(a: f64) -> Result<Self> {
        Self::gaussian_quadratic(DMatrix::from_element(1, 1, a))
    }

    pub fn indicator(body: SymmetricBody) -> Self {
        Self::BodyIndicator { body }
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: values.len(),
            });
        }
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::Malformed("table needs at least two nodes starting at 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Malformed("table nodes must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Malformed("table values must be finite and positive".into()));
        }
        let logs: Vec<f64> = values.iter().map(|v| libm::log(*v)).collect();
        let slopes: Vec<f64> = (0..nodes.len() - 1)
            .map(|i| (logs[i + 1] - logs[i]) / (nodes[i + 1] - nodes[i]))
            .collect();
        let tol = |s: f64| SHAPE_TOL * s.abs().max(1.0);
        if slopes[0] > tol(slopes[0]) {
            return Err(Error::Malformed("tabulated function increases away from 0".into()));
        }
        if let Some(w) = slopes.windows(2).find(|w| w[1] > w[0] + tol(w[0])) {
            return Err(Error::Malformed(format!("tabulated function is not log-concave: slope {} after {}", w[1], w[0])));
        }
        Ok(Self::TabulatedEven1D { nodes, values })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::GaussianQuadratic { a } => a.nrows(),
            Self::BodyIndicator { body } => body.dim(),
            Self::TabulatedEven1D { .. } => 1,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::GaussianQuadratic { a } => {
                let n = a.nrows();
                let mut q = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        q += x[i] * a[(i, j)] * x[j];
                    }
                }
                libm::exp(-0.5 * q)
            }
            Self::BodyIndicator { body } => {
                if body.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::TabulatedEven1D { nodes, values } => table_eval(nodes, values, x[0]),
        }
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        self.eval(&[x])
    }

    /// Radius of the support in 1D (`∞` when unbounded).
    fn support_radius_1d(&self) -> f64 {
        match self {
            Self::GaussianQuadratic { .. } => f64::INFINITY,
            Self::BodyIndicator { body } => body.as_box().map(|w| w[0]).unwrap_or(f64::INFINITY),
            Self::TabulatedEven1D { nodes, .. } => nodes[nodes.len() - 1],
        }
    }

    /// `∫ f dγ` with its standard error (zero unless a body needs Monte
    /// Carlo).
    pub fn gaussian_integral(&self, integ: IntegrationSpec) -> Result<(f64, f64)> {
        match self {
            Self::GaussianQuadratic { a } => {
                let n = a.nrows();
                let m = SpdMatrix::new(DMatrix::identity(n, n) + a)?;
                Ok((libm::exp(-0.5 * m.log_det()), 0.0))
            }
            Self::BodyIndicator { body } => match body.gaussian_measure_exact() {
                Some(v) => Ok((v, 0.0)),
                None => {
                    let (samples, seed) = mc_budget(integ);
                    let m = gaussian_measure_mc(Region::Body(body), samples, seed)?;
                    Ok((m.estimate, m.std_error))
                }
            },
            Self::TabulatedEven1D { nodes, values } => {
                let q = Adaptive::new(1e-12).with_atol(1e-15);
                let mut total = 0.0;
                for w in nodes.windows(2) {
                    let (v, _) = q.integrate(w[0], w[1], |x| table_eval(nodes, values, x) * normal_pdf(x))?;
                    total += v;
                }
                Ok((2.0 * total, 0.0))
            }
        }
    }
}

fn table_eval(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let r = x.abs();
    let last = nodes.len() - 1;
    if r > nodes[last] {
        return 0.0;
    }
    let i = match nodes.binary_search_by(|v| v.total_cmp(&r)) {
        Ok(i) => return values[i],
        Err(i) => i - 1,
    };
    let s = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
    libm::exp((1.0 - s) * libm::log(values[i]) + s * libm::log(values[i + 1]))
}

fn mc_budget(integ: IntegrationSpec) -> (usize, u64) {
    match integ {
        IntegrationSpec::MonteCarlo { samples, seed } => (samples, seed),
        _ => (DEFAULT_MC_SAMPLES, 0),
    }
}

/// The data of `h((1−t)x₀ + tx₁) ≥ M_p^t(f(x₀), g(x₁))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupConvolutionSpec {
    pub f: LogConcaveFunction,
    pub g: LogConcaveFunction,
    pub p: ExtReal,
    pub t: f64,
}

impl SupConvolutionSpec {
    pub fn new(f: LogConcaveFunction, g: LogConcaveFunction, p: ExtReal, t: f64) -> Result<Self> {
        check_unit("t", t)?;
        if !p.is_nonnegative() || matches!(p, ExtReal::Finite(v) if !v.is_finite()) {
            return Err(Error::OutOfRange {
                name: "p",
                value: p.as_f64(),
                expected: "≥ 0",
            });
        }
        if f.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: g.dim(),
            });
        }
        Ok(Self { f, g, p, t })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }
}

/// 1D search grid for the sup-convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchSpec {
    pub radius: f64,
    pub points: usize,
    pub polish_tol: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            radius: 10.0,
            points: 4097,
            polish_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupValue {
    pub value: f64,
    /// Best grid value before the golden-section polish.
    pub grid_value: f64,
    /// Set when `value` comes from a search and is only a lower bound.
    pub lower_bound: bool,
    /// Cleared when the maximizer sits on the edge of the search range or a
    /// membership query was inconclusive.
    pub converged: bool,
}

impl SupValue {
    fn exact(value: f64) -> Self {
        Self {
            value,
            grid_value: value,
            lower_bound: false,
            converged: true,
        }
    }
}

/// `sup { M_p^t(f(x₀), g(x₁)) : (1−t)x₀ + tx₁ = x }` for scalar oracles.
pub fn sup_convolution_1d<F, G>(f: F, g: G, p: ExtReal, t: f64, x: f64, search: &SearchSpec) -> Result<SupValue>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    check_unit("t", t)?;
    if t == 0.0 {
        return Ok(SupValue::exact(f(x)));
    }
    if t == 1.0 {
        return Ok(SupValue::exact(g(x)));
    }
    if search.points < 3 || !(search.radius > 0.0) {
        return Err(Error::Malformed("search grid needs ≥ 3 points and a positive radius".into()));
    }
    let objective = |x0: f64| -> Result<f64> { power_mean(p, t, f(x0), g((x - (1.0 - t) * x0) / t)) };
    let m = search.points;
    let step = 2.0 * search.radius / (m - 1) as f64;
    let values = (0..m)
        .map(|i| objective(-search.radius + step * i as f64))
        .collect::<Result<Vec<f64>>>()?;
    let (best_i, grid_value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if *v > b.1 { (i, *v) } else { b });
    if grid_value <= 0.0 {
        return Ok(SupValue {
            value: 0.0,
            grid_value: 0.0,
            lower_bound: true,
            converged: true,
        });
    }
    // Polish every grid-local maximum so that a basin switch between
    // neighbouring x never drops to a worse local optimum.
    let mut polished = grid_value;
    for i in 0..m {
        let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < m { values[i + 1] } else { f64::NEG_INFINITY };
        if values[i] > 0.0 && values[i] >= left && values[i] >= right && (values[i] > left || values[i] > right) {
            let centre = -search.radius + step * i as f64;
            polished = polished.max(golden_max(&objective, centre - step, centre + step, search.polish_tol)?);
        }
    }
    Ok(SupValue {
        value: polished,
        grid_value,
        lower_bound: true,
        converged: best_i != 0 && best_i != m - 1,
    })
}

/// Golden-section search for the largest value of `f` on `[a, b]`.
fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let inv_phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = fc.max(fd);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        best = best.max(fc).max(fd);
    }
    Ok(best)
}

/// The minimal admissible `h` at `x`.
///
/// Closed forms: the quadratic `((1−t)A⁻¹ + tB⁻¹)⁻¹` for positive-definite
/// Gaussian pairs at `p = 0`, and the indicator of `(1−t)K₀ + tK₁` for
/// indicator pairs (any `p`, since `M_p^t(1,1) = 1` and `M_p^t(1,0) = 0`).
/// Remaining 1D cases use a grid search with golden-section polish.
pub fn sup_convolution(spec: &SupConvolutionSpec, x: &[f64], search: &SearchSpec) -> Result<SupValue> {
    let n = spec.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let t = spec.t;
    if t == 0.0 {
        return Ok(SupValue::exact(spec.f.eval(x)));
    }
    if t == 1.0 {
        return Ok(SupValue::exact(spec.g.eval(x)));
    }
    if let Some(c) = gaussian_harmonic(spec)? {
        let xv = nalgebra::DVector::from_column_slice(x);
        return Ok(SupValue::exact(libm::exp(-0.5 * xv.dot(&(&c * &xv)))));
    }
    if let (LogConcaveFunction::BodyIndicator { body: k0 }, LogConcaveFunction::BodyIndicator { body: k1 }) = (&spec.f, &spec.g) {
        let mc = MinkowskiCombination::new(k0.clone(), k1.clone(), t)?;
        if let Some(w) = mc.as_box() {
            let inside = x.iter().zip(&w).all(|(xi, wi)| xi.abs() <= *wi);
            return Ok(SupValue::exact(if inside { 1.0 } else { 0.0 }));
        }
        return Ok(match combo_membership(&mc, x, MEMBERSHIP_TOL, MEMBERSHIP_MAX_ITER)? {
            Membership::Inside => SupValue::exact(1.0),
            Membership::Outside => SupValue::exact(0.0),
            Membership::BoundaryUncertain => SupValue {
                value: 0.0,
                grid_value: 0.0,
                lower_bound: true,
                converged: false,
            },
        });
    }
    if n == 1 {
        return sup_convolution_1d(|y| spec.f.eval_1d(y), |y| spec.g.eval_1d(y), spec.p, t, x[0], search);
    }
    Err(Error::Unsupported(format!("sup-convolution of this pair in dimension {n}")))
}

/// `C = ((1−t)A⁻¹ + tB⁻¹)⁻¹` when both forms are positive definite and
/// `p = 0`.
fn gaussian_harmonic(spec: &SupConvolutionSpec) -> Result<Option<DMatrix<f64>>> {
    let (LogConcaveFunction::GaussianQuadratic { a }, LogConcaveFunction::GaussianQuadratic { a: b }) = (&spec.f, &spec.g) else {
        return Ok(None);
    };
    if spec.p != ExtReal::Finite(0.0) {
        return Ok(None);
    }
    let (Ok(ai), Ok(bi)) = (SpdMatrix::new(a.clone()), SpdMatrix::new(b.clone())) else {
        return Ok(None);
    };
    let t = spec.t;
    let mix = ai.inverse().matrix() * (1.0 - t) + bi.inverse().matrix() * t;
    Ok(Some(SpdMatrix::new(mix)?.inverse().into_matrix()))
}

/// Exponent `p/(1+np)` of the Gaussian functional inequality (`1/n` at
/// `p = ∞`).
pub fn bbl_exponent(p: ExtReal, n: usize) -> ExtReal {
    let nf = n as f64;
    match p {
        ExtReal::PosInf => ExtReal::Finite(1.0 / nf),
        ExtReal::Finite(p) => ExtReal::Finite(p / (1.0 + nf * p)),
        ExtReal::NegInf => ExtReal::NegInf,
    }
}

/// Exponent `(β−1)p/((β−1)+βnp)` for β-homogeneous reference measures.
pub fn homogeneous_exponent(p: ExtReal, n: usize, beta: f64) -> ExtReal {
    let nf = n as f64;
    match p {
        ExtReal::PosInf => ExtReal::Finite((beta - 1.0) / (beta * nf)),
        ExtReal::Finite(p) => ExtReal::Finite((beta - 1.0) * p / ((beta - 1.0) + beta * nf * p)),
        ExtReal::NegInf => ExtReal::NegInf,
    }
}

/// Absolute floor added to the quadrature error when grading a check.
pub const BBL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BblCheck {
    /// `∫ h dν`.
    pub lhs: f64,
    /// `M^t_r(∫f dν, ∫g dν)`.
    pub rhs: f64,
    pub gap: f64,
    /// Quadrature error bound plus three standard errors of any Monte Carlo
    /// term.
    pub quadrature_error: f64,
    /// Largest observed polish gain `h − h_grid`; bounds how far the grid
    /// lower bound can sit below the true `h`.
    pub slack: f64,
    pub lower_bound: bool,
    pub converged: bool,
}

impl BblCheck {
    /// Pass when `gap ≥ −(quadrature_error + BBL_TOL)`, inconclusive when the
    /// shortfall is within the search slack of a lower-bound `h`, fail
    /// otherwise.
    pub fn verdict(&self) -> Verdict {
        let tol = self.quadrature_error + BBL_TOL;
        if self.gap >= -tol {
            Verdict::Pass
        } else if (self.lower_bound || !self.converged) && self.gap >= -(tol + self.slack) {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.quadrature_error + BBL_TOL
    }
}

/// Tracks the worst polish gain and the search flags across `h` evaluations.
struct SearchLog {
    slack: Cell<f64>,
    lower_bound: Cell<bool>,
    converged: Cell<bool>,
}

impl SearchLog {
    fn new() -> Self {
        Self {
            slack: Cell::new(0.0),
            lower_bound: Cell::new(false),
            converged: Cell::new(true),
        }
    }

    fn record(&self, v: &SupValue) {
        self.slack.set(self.slack.get().max(v.value - v.grid_value));
        if v.lower_bound {
            self.lower_bound.set(true);
        }
        if !v.converged {
            self.converged.set(false);
        }
    }
}

/// Integrates an even `h` against the density `w` over `[−r, r]` with
/// adaptive Gauss–Legendre, stopping evaluation at the first error.
fn even_integral<H, W>(h: H, w: W, r: f64) -> Result<(f64, f64)>
where
    H: Fn(f64) -> Result<f64>,
    W: Fn(f64) -> f64,
{
    let failure: Cell<Option<Error>> = Cell::new(None);
    let q = Adaptive::new(1e-10).with_atol(1e-13);
    let out = q.integrate(0.0, r, |x| match h(x) {
        Ok(v) => v * w(x),
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    });
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let (v, err) = out?;
    Ok((2.0 * v, 2.0 * err))
}

/// Both sides of `∫h dγ ≥ M^t_{p/(1+np)}(∫f dγ, ∫g dγ)`.
pub fn bbl_check(spec: &SupConvolutionSpec, integ: IntegrationSpec, search: &SearchSpec) -> Result<BblCheck> {
    let n = spec.dim();
    let (if_, se_f) = spec.f.gaussian_integral(integ)?;
    let (ig, se_g) = spec.g.gaussian_integral(integ)?;
    let r = bbl_exponent(spec.p, n);
    let rhs = power_mean(r, spec.t, if_, ig)?;
    let rhs_se = if se_f > 0.0 || se_g > 0.0 {
        // finite-difference propagation through the power mean
        let df = (power_mean(r, spec.t, if_ + se_f, ig)? - rhs).abs();
        let dg = (power_mean(r, spec.t, if_, ig + se_g)? - rhs).abs();
        libm::sqrt(df * df + dg * dg)
    } else {
        0.0
    };
    let log = SearchLog::new();
    let (lhs, lhs_err) = if spec.t == 0.0 {
        (if_, 3.0 * se_f)
    } else if spec.t == 1.0 {
        (ig, 3.0 * se_g)
    } else if let Some(c) = gaussian_harmonic(spec)? {
        let m = SpdMatrix::new(DMatrix::identity(n, n) + c)?;
        (libm::exp(-0.5 * m.log_det()), 0.0)
    } else if let (LogConcaveFunction::BodyIndicator { body: k0 }, LogConcaveFunction::BodyIndicator { body: k1 }) = (&spec.f, &spec.g) {
        let mc = MinkowskiCombination::new(k0.clone(), k1.clone(), spec.t)?;
        match mc.as_box() {
            Some(w) => (w.iter().map(|a| crate::special::interval_mass(*a)).product(), 0.0),
            None => {
                let (samples, seed) = mc_budget(integ);
                let m = gaussian_measure_mc(Region::Combination(&mc), samples, seed)?.require_reliable()?;
                (m.estimate, 3.0 * m.std_error)
            }
        }
    } else if n == 1 {
        let reach = (1.0 - spec.t) * spec.f.support_radius_1d() + spec.t * spec.g.support_radius_1d();
        let h = |x: f64| -> Result<f64> {
            let v = sup_convolution(spec, &[x], search)?;
            log.record(&v);
            Ok(v.value)
        };
        even_integral(h, normal_pdf, reach.min(GAUSS_REACH))?
    } else {
        return Err(Error::Unsupported(format!("BBL check for this pair in dimension {n}")));
    };
    let gap = lhs - rhs;
    Ok(BblCheck {
        lhs,
        rhs,
        gap,
        quadrature_error: lhs_err + 3.0 * rhs_se,
        slack: log.slack.get(),
        lower_bound: log.lower_bound.get(),
        converged: log.converged.get(),
    })
}

/// Integration half-width for 1D Gaussian integrals (`φ(12) ≈ 5e-32`).
const GAUSS_REACH: f64 = 12.0;

/// Grid used to check that oracles decrease along both rays.
pub const RADIAL_CHECK_POINTS: usize = 2049;

/// `∫ e^{-V}` of `V = |x|^β/β` is negligible beyond `V = 60`.
fn homogeneous_reach(beta: f64) -> f64 {
    libm::pow(60.0 * beta, 1.0 / beta)
}

fn check_radially_decreasing<F: Fn(f64) -> f64>(name: &'static str, f: &F, reach: f64) -> Result<()> {
    for sign in [1.0, -1.0] {
        let mut prev = f(0.0);
        if !(prev.is_finite() && prev >= 0.0) {
            return Err(Error::Malformed(format!("{name}(0) = {prev} is not a finite non-negative value")));
        }
        for i in 1..RADIAL_CHECK_POINTS {
            let x = sign * reach * i as f64 / (RADIAL_CHECK_POINTS - 1) as f64;
            let v = f(x);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Malformed(format!("{name}({x}) = {v} is not a finite non-negative value")));
            }
            if v > prev * (1.0 + SHAPE_TOL) + f64::MIN_POSITIVE {
                return Err(Error::Malformed(format!("{name} is not radially decreasing: increases to {v} at {x}")));
            }
            prev = v;
        }
    }
    Ok(())
}

/// The check against `ν ∝ e^{-|x|^β/β}` on the line, `β > 1`; `β = 2` is
/// the standard Gaussian. `f` and `g` must be non-increasing along both
/// rays from the origin; evenness is not required.
pub fn bbl_homogeneous_check<F, G>(f: F, g: G, p: ExtReal, t: f64, beta: f64, search: &SearchSpec) -> Result<BblCheck>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    check_unit("t", t)?;
    if !(beta.is_finite() && beta > 1.0) {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
            expected: "> 1",
        });
    }
    if !p.is_nonnegative() {
        return Err(Error::OutOfRange {
            name: "p",
            value: p.as_f64(),
            expected: "≥ 0",
        });
    }
    let reach = homogeneous_reach(beta);
    check_radially_decreasing("f", &f, reach)?;
    check_radially_decreasing("g", &g, reach)?;
    let q = Adaptive::new(1e-12).with_atol(1e-15);
    let kernel = |x: f64| libm::exp(-libm::pow(x.abs(), beta) / beta);
    let (half, _) = q.integrate(0.0, reach, kernel)?;
    let z = 2.0 * half;
    let closed = 2.0 * libm::pow(beta, 1.0 / beta - 1.0) * libm::tgamma(1.0 / beta);
    if !((z - closed).abs() <= 1e-10 * closed) {
        return Err(Error::Quadrature {
            estimate: z,
            error: (z - closed).abs(),
        });
    }
    let density = |x: f64| kernel(x) / z;
    let both_rays = |h: &dyn Fn(f64) -> Result<f64>| -> Result<(f64, f64)> {
        let failure: Cell<Option<Error>> = Cell::new(None);
        let q = Adaptive::new(1e-10).with_atol(1e-13);
        let mut total = 0.0;
        let mut err = 0.0;
        for (a, b) in [(-reach, 0.0), (0.0, reach)] {
            let (v, e) = q.integrate(a, b, |x| match h(x) {
                Ok(v) => v * density(x),
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            })?;
            total += v;
            err += e;
        }
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok((total, err))
    };
    let (if_, ef) = both_rays(&|x| Ok(f(x)))?;
    let (ig, eg) = both_rays(&|x| Ok(g(x)))?;
    let r = homogeneous_exponent(p, 1, beta);
    let rhs = power_mean(r, t, if_, ig)?;
    let log = SearchLog::new();
    let search = SearchSpec {
        radius: search.radius.max(reach),
        ..*search
    };
    let (lhs, el) = both_rays(&|x| {
        let v = sup_convolution_1d(&f, &g, p, t, x, &search)?;
        log.record(&v);
        Ok(v.value)
    })?;
    Ok(BblCheck {
        lhs,
        rhs,
        gap: lhs - rhs,
        quadrature_error: el + ef + eg,
        slack: log.slack.get(),
        lower_bound: log.lower_bound.get(),
        converged: log.converged.get(),
    })
}

/// `Ψ_t(u, v) = log((1−t)eᵘ + teᵛ)`, evaluated stably.
pub fn psi(t: f64, u: f64, v: f64) -> f64 {
    if t <= 0.0 {
        return u;
    }
    if t >= 1.0 {
        return v;
    }
    let m = u.max(v);
    m + libm::log((1.0 - t) * libm::exp(u - m) + t * libm::exp(v - m))
}

/// The Hölder step `M_p^t(a,b)·M_{1/n}^t(x,y) ≥ M_r^t(ax, by)` for
/// Gaussian-quadratic `f = e^{-xᵀAx/2}`, `g = e^{-xᵀBx/2}`, with
/// `dμ₀ ∝ f dγ`, `dμ₁ ∝ g dγ`, `a = e^{∫log f dμ₀}`, `x = e^{-D(μ₀‖γ)}`
/// and likewise for `b`, `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HolderChain {
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
    /// `M_p^t(a, b)`.
    pub functional_piece: f64,
    /// `M_{1/n}^t(x, y)`.
    pub entropic_piece: f64,
    /// `M_r^t(ax, by)`, `r = p/(1+np)`.
    pub holder_bound: f64,
    /// `M_r^t(∫f dγ, ∫g dγ)`; equals `holder_bound` by duality.
    pub closed_form_rhs: f64,
    /// At `p = 0`: `e^{∫H dμ_t − D(μ_t‖γ)}` along the Brenier interpolant,
    /// which sits between `∫h dγ` and the product of the two pieces.
    pub interpolant_bound: Option<f64>,
    /// At `p = 0`: `∫h dγ`.
    pub lhs: Option<f64>,
}

impl HolderChain {
    /// Largest violation over the links of the chain (non-positive when it
    /// holds).
    pub fn worst_violation(&self) -> f64 {
        let product = self.functional_piece * self.entropic_piece;
        let mut worst = self.holder_bound - product;
        worst = worst.max((self.holder_bound - self.closed_form_rhs).abs() - 1e-12 * self.closed_form_rhs.max(1.0));
        if let Some(mid) = self.interpolant_bound {
            worst = worst.max(product - mid);
            if let Some(lhs) = self.lhs {
                worst = worst.max(mid - lhs);
            }
        }
        worst
    }
}

pub fn holder_chain(a: &DMatrix<f64>, b: &DMatrix<f64>, p: ExtReal, t: f64) -> Result<HolderChain> {
    check_unit("t", t)?;
    let f = LogConcaveFunction::gaussian_quadratic(a.clone())?;
    let g = LogConcaveFunction::gaussian_quadratic(b.clone())?;
    let n = f.dim();
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.dim() });
    }
    let id = DMatrix::<f64>::identity(n, n);
    let c0 = SpdMatrix::new(&id + a)?.inverse();
    let c1 = SpdMatrix::new(&id + b)?.inverse();
    let mean_log = |m: &DMatrix<f64>, c: &SpdMatrix| -0.5 * (m * c.matrix()).trace();
    let a_ = libm::exp(mean_log(a, &c0));
    let b_ = libm::exp(mean_log(b, &c1));
    let x = libm::exp(-gaussian_relative_entropy(&c0));
    let y = libm::exp(-gaussian_relative_entropy(&c1));
    let nf = n as f64;
    let r = bbl_exponent(p, n);
    let functional_piece = power_mean(p, t, a_, b_)?;
    let entropic_piece = power_mean(ExtReal::Finite(1.0 / nf), t, x, y)?;
    let holder_bound = power_mean(r, t, a_ * x, b_ * y)?;
    let (if_, _) = f.gaussian_integral(IntegrationSpec::Quadrature)?;
    let (ig, _) = g.gaussian_integral(IntegrationSpec::Quadrature)?;
    let closed_form_rhs = power_mean(r, t, if_, ig)?;
    let (mut interpolant_bound, mut lhs) = (None, None);
    if p == ExtReal::Finite(0.0) && t > 0.0 && t < 1.0 {
        let spec = SupConvolutionSpec::new(f, g, p, t)?;
        if let Some(c) = gaussian_harmonic(&spec)? {
            let s = spd_sqrt(&c0).into_matrix() * (1.0 - t) + spd_sqrt(&c1).into_matrix() * t;
            let cov = SpdMatrix::new(&s * &s)?;
            let mean_h = -0.5 * (&c * cov.matrix()).trace();
            interpolant_bound = Some(libm::exp(mean_h - gaussian_relative_entropy(&cov)));
            lhs = Some(libm::exp(-0.5 * SpdMatrix::new(&id + c)?.log_det()));
        }
    }
    Ok(HolderChain {
        a: a_,
        b: b_,
        x,
        y,
        functional_piece,
        entropic_piece,
        holder_bound,
        closed_form_rhs,
        interpolant_bound,
        lhs,
    })
}

/// Reference measure and potential for the duality formula
/// `log ∫e^φ dν = sup_μ {∫φ dμ − D(μ‖ν)}`.
pub enum DvReference<'a> {
    /// Atoms `i` with masses `weights[i]` and potential `phi[i]`.
    Discrete { weights: Vec<f64>, phi: Vec<f64> },
    /// The standard Gaussian on the line with a potential oracle.
    Gaussian1D { phi: &'a dyn Fn(f64) -> f64 },
}

/// Members of the comparison family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DvCandidate {
    /// `dμ ∝ e^φ dν`.
    Gibbs,
    /// `μ = ν`.
    Reference,
    /// Masses on the atoms of a discrete reference.
    Discrete { weights: Vec<f64> },
    /// `N(mean, variance)` against the Gaussian reference.
    Gaussian { mean: f64, variance: f64 },
}

impl DvCandidate {
    pub fn label(&self) -> String {
        match self {
            DvCandidate::Gibbs => "gibbs".into(),
            DvCandidate::Reference => "reference".into(),
            DvCandidate::Discrete { weights } => format!("discrete({weights:?})"),
            DvCandidate::Gaussian { mean, variance } => format!("gaussian({mean}, {variance})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DvMember {
    pub label: String,
    /// `∫φ dμ − D(μ‖ν)`; `None` when rejected.
    pub value: Option<f64>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DvReport {
    pub lhs: f64,
    pub sup_over_family: f64,
    pub gibbs_value: f64,
    /// `|lhs − gibbs_value|`.
    pub equality_residual: f64,
    /// `1e-8` for discrete references, `1e-6` for quadrature.
    pub tolerance: f64,
    /// Every accepted member satisfies `value ≤ lhs + tolerance`.
    pub bounded: bool,
    pub members: Vec<DvMember>,
}

impl DvReport {
    pub fn holds(&self) -> bool {
        self.bounded && self.equality_residual <= self.tolerance
    }
}

pub const DV_TOL_DISCRETE: f64 = 1e-8;
pub const DV_TOL_QUADRATURE: f64 = 1e-6;

/// Half-width of the integration window for Gaussian-reference integrals.
const DV_REACH: f64 = 40.0;

fn discrete_value(weights: &[f64], phi: &[f64], mu: &[f64]) -> core::result::Result<f64, String> {
    if mu.len() != weights.len() {
        return Err(format!("expected {} masses, got {}", weights.len(), mu.len()));
    }
    if mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) || (mu.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err("masses must be non-negative and sum to 1".into());
    }
    let mut v = 0.0;
    for i in 0..mu.len() {
        if mu[i] == 0.0 {
            continue;
        }
        if weights[i] == 0.0 {
            return Err(format!("mass {} on atom {i} where the reference has none", mu[i]));
        }
        v += mu[i] * (phi[i] - libm::log(mu[i] / weights[i]));
    }
    Ok(v)
}

pub fn dv_duality_check(nu: &DvReference<'_>, family: &[DvCandidate]) -> Result<DvReport> {
    let (lhs, tolerance, gibbs_value) = match nu {
        DvReference::Discrete { weights, phi } => {
            if weights.len() != phi.len() || weights.is_empty() {
                return Err(Error::DimensionMismatch {
                    expected: weights.len(),
                    got: phi.len(),
                });
            }
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::Malformed("reference masses must be non-negative and sum to 1".into()));
            }
            if phi.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("phi"));
            }
            let m = phi.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
            let z: f64 = weights.iter().zip(phi).map(|(w, v)| w * libm::exp(v - m)).sum();
            let lhs = m + libm::log(z);
            let gibbs: Vec<f64> = weights.iter().zip(phi).map(|(w, v)| w * libm::exp(v - m) / z).collect();
            let gv = discrete_value(weights, phi, &gibbs).map_err(Error::Malformed)?;
            (lhs, DV_TOL_DISCRETE, gv)
        }
        DvReference::Gaussian1D { phi } => {
            let q = Adaptive::new(1e-12).with_atol(1e-300);
            let mut z = 0.0;
            for (a, b) in [(-DV_REACH, 0.0), (0.0, DV_REACH)] {
                z += q.integrate(a, b, |x| libm::exp(phi(x) + normal_log_pdf(x)))?.0;
            }
            if !(z.is_finite() && z > 0.0) {
                return Err(Error::Quadrature { estimate: z, error: f64::NAN });
            }
            let lhs = libm::log(z);
            // Gibbs value by an independent route: Gauss–Hermite for the
            // normalizer and for ∫φ dμ, then ∫φ dμ − D(μ‖γ) with
            // D = ∫φ dμ − log Z.
            let rule = Rule::gauss_hermite(200);
            let mut z2 = 0.0;
            let mut m1 = 0.0;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let v = phi(*x);
                let e = w * libm::exp(v);
                z2 += e;
                m1 += e * v;
            }
            let mean_phi = m1 / z2;
            let d = mean_phi - libm::log(z2);
            (lhs, DV_TOL_QUADRATURE, mean_phi - d)
        }
    };
    let mut members = Vec::new();
    let mut sup = f64::NEG_INFINITY;
    let mut bounded = true;
    for c in family {
        let value: core::result::Result<f64, String> = match (c, nu) {
            (DvCandidate::Gibbs, _) => Ok(gibbs_value),
            (DvCandidate::Reference, DvReference::Discrete { weights, phi }) => discrete_value(weights, phi, weights),
            (DvCandidate::Reference, DvReference::Gaussian1D { phi }) => Ok(gaussian_candidate_value(*phi, 0.0, 1.0)),
            (DvCandidate::Discrete { weights: mu }, DvReference::Discrete { weights, phi }) => discrete_value(weights, phi, mu),
            (DvCandidate::Gaussian { mean, variance }, DvReference::Gaussian1D { phi }) => {
                if !(variance.is_finite() && *variance > 0.0 && mean.is_finite()) {
                    Err(format!("N({mean}, {variance}) is not absolutely continuous w.r.t. γ"))
                } else {
                    Ok(gaussian_candidate_value(*phi, *mean, *variance))
                }
            }
            (DvCandidate::Discrete { .. }, DvReference::Gaussian1D { .. }) => {
                Err("atomic law is not absolutely continuous w.r.t. γ".into())
            }
            (DvCandidate::Gaussian { .. }, DvReference::Discrete { .. }) => {
                Err("Gaussian law is not absolutely continuous w.r.t. a discrete reference".into())
            }
        };
        match value {
            Ok(v) => {
                sup = sup.max(v);
                if v > lhs + tolerance {
                    bounded = false;
                }
                members.push(DvMember {
                    label: c.label(),
                    value: Some(v),
                    diagnostic: None,
                });
            }
            Err(msg) => members.push(DvMember {
                label: c.label(),
                value: None,
                diagnostic: Some(msg),
            }),
        }
    }
    Ok(DvReport {
        lhs,
        sup_over_family: sup,
        gibbs_value,
        equality_residual: (lhs - gibbs_value).abs(),
        tolerance,
        bounded,
        members,
    })
}

/// `∫φ dN(m, s²) − D(N(m, s²)‖γ)` with Gauss–Hermite for the first term.
fn gaussian_candidate_value(phi: &dyn Fn(f64) -> f64, mean: f64, variance: f64) -> f64 {
    let rule = Rule::gauss_hermite(200);
    let s = libm::sqrt(variance);
    let e: f64 = rule.nodes.iter().zip(&rule.weights).map(|(z, w)| w * phi(mean + s * z)).sum();
    let d = 0.5 * (variance + mean * mean - 1.0 - libm::log(variance));
    e - d
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn gq(a: f64) -> LogConcaveFunction {
        LogConcaveFunction::gaussian_1d(a).unwrap()
    }

    fn ind(a: f64) -> LogConcaveFunction {
        LogConcaveFunction::indicator(SymmetricBody::interval(a).unwrap())
    }

    #[test]
    fn harmonic_quadratic_closed_form() {
        let spec = SupConvolutionSpec::new(gq(1.0), gq(3.0), ExtReal::Finite(0.0), 0.5).unwrap();
        let h = sup_convolution(&spec, &[1.0], &SearchSpec::default()).unwrap();
        assert!(!h.lower_bound);
        assert!((h.value - libm::exp(-0.75)).abs() < 1e-15);
    }

    #[test]
    fn grid_search_matches_closed_form() {
        let h = sup_convolution_1d(|x| libm::exp(-0.5 * x * x), |x| libm::exp(-1.5 * x * x), ExtReal::Finite(0.0), 0.5, 1.0, &SearchSpec::default()).unwrap();
        assert!(h.lower_bound && h.converged);
        assert!(h.value <= libm::exp(-0.75) + 1e-15);
        assert!((h.value - libm::exp(-0.75)).abs() < 1e-12);
    }

    #[test]
    fn idempotent_quadratic() {
        let spec = SupConvolutionSpec::new(gq(2.0), gq(2.0), ExtReal::Finite(0.0), 0.3).unwrap();
        for x in [-1.5, 0.0, 0.7] {
            let h = sup_convolution(&spec, &[x], &SearchSpec::default()).unwrap();
            assert!((h.value - spec.f.eval_1d(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn indicator_sup_convolution_is_minkowski_indicator() {
        let spec = SupConvolutionSpec::new(ind(1.0), ind(2.0), ExtReal::PosInf, 0.5).unwrap();
        for (x, v) in [(1.49, 1.0), (1.5, 1.0), (1.51, 0.0), (-1.2, 1.0), (-1.6, 0.0)] {
            assert_eq!(sup_convolution(&spec, &[x], &SearchSpec::default()).unwrap().value, v, "x = {x}");
        }
    }

    #[test]
    fn gaussian_bbl_fixture() {
        let spec = SupConvolutionSpec::new(gq(1.0), gq(3.0), ExtReal::Finite(0.0), 0.5).unwrap();
        let c = bbl_check(&spec, IntegrationSpec::Auto, &SearchSpec::default()).unwrap();
        assert!((c.lhs - 0.6324555320336759).abs() < 1e-14);
        assert!((c.rhs - 0.5946035575013606).abs() < 1e-14);
        assert!((c.gap - 0.03785197453231533).abs() < 1e-14);
        assert_eq!(c.verdict(), Verdict::Pass);
    }

    #[test]
    fn indicator_bbl_reproduces_geometric_numbers() {
        let spec = SupConvolutionSpec::new(ind(1.0), ind(2.0), ExtReal::PosInf, 0.5).unwrap();
        let c = bbl_check(&spec, IntegrationSpec::Auto, &SearchSpec::default()).unwrap();
        assert!((c.lhs - 0.8663855974622839).abs() < 1e-12);
        assert!((c.rhs - 0.8185946141203637).abs() < 1e-12);
        assert!((c.gap - 0.04779098334192013).abs() < 1e-12);
    }

    #[test]
    fn grid_bbl_on_gaussian_pair_agrees_with_closed_form() {
        // p = 0 but a PSD-singular form forces the search path
        let f = LogConcaveFunction::gaussian_1d(0.0).unwrap();
        let spec = SupConvolutionSpec::new(f, gq(3.0), ExtReal::Finite(0.0), 0.5).unwrap();
        let wide = SearchSpec {
            radius: 30.0,
            ..SearchSpec::default()
        };
        let c = bbl_check(&spec, IntegrationSpec::Auto, &wide).unwrap();
        // h ≡ 1 wherever x₀ = 2x lies in the search window
        assert!((c.lhs - 1.0).abs() < 1e-8, "{c:?}");
        assert!((c.rhs - libm::sqrt(0.5)).abs() < 1e-14);
        assert_eq!(c.verdict(), Verdict::Pass);
    }

    #[test]
    fn grid_bbl_with_positive_p_passes() {
        let spec = SupConvolutionSpec::new(gq(1.0), gq(3.0), ExtReal::Finite(1.0), 0.5).unwrap();
        let c = bbl_check(&spec, IntegrationSpec::Auto, &SearchSpec::default()).unwrap();
        assert!(c.lower_bound);
        assert!(c.gap > 0.0, "{c:?}");
        assert_eq!(c.verdict(), Verdict::Pass);
    }

    #[test]
    fn tabulated_function_shape_checks() {
        assert!(LogConcaveFunction::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.25]).is_ok());
        assert!(LogConcaveFunction::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.4]).is_err());
        assert!(LogConcaveFunction::tabulated(vec![0.0, 1.0], vec![0.5, 1.0]).is_err());
        let f = LogConcaveFunction::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.25]).unwrap();
        assert!((f.eval_1d(-0.5) - libm::sqrt(0.5)).abs() < 1e-15);
        assert_eq!(f.eval_1d(2.5), 0.0);
    }

    #[test]
    fn tabulated_gaussian_integral() {
        let f = LogConcaveFunction::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let (v, _) = f.gaussian_integral(IntegrationSpec::Auto).unwrap();
        assert!((v - crate::special::interval_mass(1.0)).abs() < 1e-13);
    }

    #[test]
    fn exponent_maps() {
        assert_eq!(bbl_exponent(ExtReal::Finite(1.0), 1), ExtReal::Finite(0.5));
        assert_eq!(homogeneous_exponent(ExtReal::Finite(1.0), 1, 2.0), ExtReal::Finite(1.0 / 3.0));
        assert_eq!(bbl_exponent(ExtReal::Finite(0.0), 3), ExtReal::Finite(0.0));
        assert_eq!(bbl_exponent(ExtReal::PosInf, 2), ExtReal::Finite(0.5));
    }

    #[test]
    fn homogeneous_beta_two_is_gaussian() {
        let f = |x: f64| libm::exp(-0.5 * x * x);
        let g = |x: f64| libm::exp(-1.5 * x * x);
        let c = bbl_homogeneous_check(f, g, ExtReal::Finite(0.0), 0.5, 2.0, &SearchSpec::default()).unwrap();
        assert!((c.lhs - 0.6324555320336759).abs() < 1e-8, "{c:?}");
        assert!((c.rhs - 0.5946035575013606).abs() < 1e-10);
        let same = bbl_homogeneous_check(f, f, ExtReal::Finite(0.0), 0.3, 2.0, &SearchSpec::default()).unwrap();
        assert!(same.gap.abs() < 1e-9, "{same:?}");
    }

    #[test]
    fn homogeneous_rejects_increasing_input() {
        let bump = |x: f64| libm::exp(-(x - 1.0) * (x - 1.0));
        let f = |x: f64| libm::exp(-x * x);
        assert!(matches!(
            bbl_homogeneous_check(bump, f, ExtReal::Finite(0.0), 0.5, 2.0, &SearchSpec::default()),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    fn holder_chain_on_gaussians() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let b = DMatrix::from_element(1, 1, 3.0);
        for p in [ExtReal::Finite(0.0), ExtReal::Finite(0.5), ExtReal::PosInf] {
            let c = holder_chain(&a, &b, p, 0.5).unwrap();
            assert!(c.worst_violation() <= 1e-14, "{p:?}: {c:?}");
        }
        let c = holder_chain(&a, &b, ExtReal::Finite(0.0), 0.5).unwrap();
        assert!((c.lhs.unwrap() - 0.6324555320336759).abs() < 1e-14);
        assert!((c.closed_form_rhs - 0.5946035575013606).abs() < 1e-14);
    }

    #[test]
    fn psi_endpoints_and_value() {
        assert_eq!(psi(0.0, 1.0, 2.0), 1.0);
        assert_eq!(psi(1.0, 1.0, 2.0), 2.0);
        assert!((psi(0.5, 0.0, libm::log(3.0)) - libm::log(2.0)).abs() < 1e-15);
    }

    #[test]
    fn dv_two_point() {
        let nu = DvReference::Discrete {
            weights: vec![0.5, 0.5],
            phi: vec![0.0, libm::log(3.0)],
        };
        let fam = [
            DvCandidate::Gibbs,
            DvCandidate::Reference,
            DvCandidate::Discrete { weights: vec![0.25, 0.75] },
            DvCandidate::Discrete { weights: vec![0.1, 0.9] },
        ];
        let r = dv_duality_check(&nu, &fam).unwrap();
        assert!((r.lhs - core::f64::consts::LN_2).abs() < 1e-15);
        assert!(r.holds());
        assert!((r.members[2].value.unwrap() - r.lhs).abs() < 1e-15);
        assert!(r.members[3].value.unwrap() < r.lhs);
    }

    #[test]
    fn dv_two_point_brute_force() {
        let phi = [0.0, libm::log(3.0)];
        let mut best = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let m = i as f64 / 1000.0;
            let v = discrete_value(&[0.5, 0.5], &phi, &[1.0 - m, m]).unwrap();
            best = best.max(v);
        }
        assert!((best - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn dv_constant_potential() {
        let nu = DvReference::Discrete {
            weights: vec![0.2, 0.3, 0.5],
            phi: vec![1.5; 3],
        };
        let r = dv_duality_check(&nu, &[DvCandidate::Reference, DvCandidate::Discrete { weights: vec![1.0, 0.0, 0.0] }]).unwrap();
        assert!((r.lhs - 1.5).abs() < 1e-15);
        assert!((r.members[0].value.unwrap() - 1.5).abs() < 1e-15);
        assert!(r.members[1].value.unwrap() < 1.5);
    }

    #[test]
    fn dv_gaussian_reference() {
        let phi = |x: f64| -0.25 * x * x;
        let nu = DvReference::Gaussian1D { phi: &phi };
        let fam = [
            DvCandidate::Gibbs,
            DvCandidate::Gaussian { mean: 0.0, variance: 2.0 / 3.0 },
            DvCandidate::Gaussian { mean: 0.3, variance: 0.5 },
            DvCandidate::Reference,
            DvCandidate::Discrete { weights: vec![1.0] },
        ];
        let r = dv_duality_check(&nu, &fam).unwrap();
        assert!((r.lhs + 0.5 * libm::log(1.5)).abs() < 1e-12);
        assert!(r.holds(), "{r:?}");
        assert!((r.members[1].value.unwrap() - r.lhs).abs() < 1e-12);
        assert!(r.members[2].value.unwrap() < r.lhs);
        assert!(r.members[4].value.is_none());
    }
}
