//! Even strongly log-concave laws: representation, validation,
//! Ornstein–Uhlenbeck smoothing, one-dimensional distribution functions and
//! deterministic sampling.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::gauss::SpdMatrix;
use crate::geometry::SymmetricBody;
use crate::quadrature::Rule;
use crate::rng::{self, Stream};

/// Default truncation radius for one-dimensional potentials.
pub const DEFAULT_RADIUS: f64 = 10.0;

/// Points per axis of the evenness / convexity validation grid.
pub const VALIDATION_GRID: usize = 257;

/// Cells of the distribution-function table on `[-L, 0]`.
pub const CDF_CELLS: usize = 8192;

/// A smooth even potential `U` on the line.
pub trait Potential1D: fmt::Debug + Send + Sync {
    /// `(U(x), U'(x), U''(x))`.
    fn eval(&self, x: f64) -> (f64, f64, f64);
}

/// `U(x) = Σₖ cₖ x^{2k}` for `k = 1, 2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenPolynomial {
    pub coeffs: Vec<f64>,
}

impl EvenPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Malformed("even polynomial needs finite coefficients".into()));
        }
        Ok(Self { coeffs })
    }

    /// `x²/2 + λx⁴`.
    pub fn quartic(lambda: f64) -> Result<Self> {
        Self::new(vec![0.5, lambda])
    }

    /// `x²/(2σ²)`, the centered Gaussian of variance `σ²`.
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::OutOfRange {
                name: "variance",
                value: variance,
                expected: "> 0",
            });
        }
        Self::new(vec![0.5 / variance])
    }
}

impl Potential1D for EvenPolynomial {
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let x2 = x * x;
        let (mut u, mut d1, mut d2) = (0.0, 0.0, 0.0);
        let mut pw = 1.0; // x^{2k-2}
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = (i + 1) as f64;
            d2 += c * 2.0 * k * (2.0 * k - 1.0) * pw;
            d1 += c * 2.0 * k * pw * x;
            pw *= x2;
            u += c * pw;
        }
        (u, d1, d2)
    }
}

/// The potential of `√(1−ε)X + √ε Z′` where `X` has potential `base` on
/// `[-L, L]`:
/// `U_ε(y) = −log ∫ e^{−U(x) − (y−cx)²/(2ε)} dx` with `c = √(1−ε)`.
#[derive(Debug, Clone)]
pub struct SmoothedPotential {
    base: Potential,
    base_radius: f64,
    epsilon: f64,
    rule: Rule,
}

impl SmoothedPotential {
    pub fn new(base: Potential, base_radius: f64, epsilon: f64) -> Self {
        Self {
            base,
            base_radius,
            epsilon,
            rule: Rule::gauss_legendre(8),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Potential1D for SmoothedPotential {
    fn eval(&self, y: f64) -> (f64, f64, f64) {
        let eps = self.epsilon;
        let c = libm::sqrt(1.0 - eps);
        let l = self.base_radius;
        let phase = |x: f64| -> (f64, f64, f64) {
            let (u, d1, d2) = self.base.eval(x);
            let r = y - c * x;
            (-u - r * r / (2.0 * eps), -d1 + c * r / eps, -d2 - c * c / eps)
        };
        // mode of the log-concave integrand by safeguarded Newton
        let (mut lo, mut hi) = (-l, l);
        let mut m = (y / c).clamp(-l, l);
        for _ in 0..100 {
            let (_, g, h) = phase(m);
            if g > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
            let mut next = m - g / h;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - m).abs() <= 1e-14 * (1.0 + m.abs()) {
                m = next;
                break;
            }
            m = next;
        }
        let width = 40.0 * libm::sqrt(eps) / c;
        let a = (m - width).max(-l);
        let b = (m + width).min(l);
        let peak = phase(m).0;
        let cells = 64;
        let hcell = (b - a) / cells as f64;
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for k in 0..cells {
            let lo = a + hcell * k as f64;
            let mid = lo + 0.5 * hcell;
            for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let xx = mid + 0.5 * hcell * x;
                let wt = w * 0.5 * hcell * libm::exp(phase(xx).0 - peak);
                let s = (y - c * xx) / eps;
                s0 += wt;
                s1 += wt * s;
                s2 += wt * s * s;
            }
        }
        let mean = s1 / s0;
        let var = (s2 / s0 - mean * mean).max(0.0);
        (-(peak + libm::log(s0)), mean, 1.0 / eps - var)
    }
}

/// A one-dimensional even potential.
#[derive(Debug, Clone)]
pub enum Potential {
    Polynomial(EvenPolynomial),
    Smoothed(Arc<SmoothedPotential>),
    Custom(Arc<dyn Potential1D>),
}

impl Potential {
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Potential::Polynomial(p) => p.eval(x),
            Potential::Smoothed(p) => p.eval(x),
            Potential::Custom(p) => p.eval(x),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn first(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    pub fn second(&self, x: f64) -> f64 {
        self.eval(x).2
    }
}

/// Tabulated distribution function of `e^{-U}` on `[-L, L]`.
///
/// Cumulative masses are accumulated from the left end, so left-tail values
/// keep full relative precision; the right half follows by symmetry.
#[derive(Debug)]
pub(crate) struct CdfTable {
    l: f64,
    h: f64,
    u0: f64,
    cum: Vec<f64>,
    half: f64,
    rule: Rule,
}

impl CdfTable {
    fn build(potential: &Potential, l: f64) -> Result<Self> {
        let rule = Rule::gauss_legendre(8);
        let u0 = potential.value(0.0);
        let h = l / CDF_CELLS as f64;
        let mut cum = Vec::with_capacity(CDF_CELLS + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for k in 0..CDF_CELLS {
            let lo = -l + h * k as f64;
            let hi = if k + 1 == CDF_CELLS { 0.0 } else { lo + h };
            acc += rule.integrate(lo, hi, |x| libm::exp(u0 - potential.value(x)));
            cum.push(acc);
        }
        if !(acc.is_finite() && acc > 0.0) {
            return Err(Error::Malformed("potential does not define a finite positive mass".into()));
        }
        Ok(Self { l, h, u0, cum, half: acc, rule })
    }

    fn density_unnorm(&self, potential: &Potential, x: f64) -> f64 {
        libm::exp(self.u0 - potential.value(x))
    }

    /// Unnormalized mass of `[-L, x]` for `x ≤ 0`.
    fn left_mass(&self, potential: &Potential, x: f64) -> f64 {
        if x <= -self.l {
            return 0.0;
        }
        let k = (((x + self.l) / self.h) as usize).min(CDF_CELLS - 1);
        let xk = -self.l + self.h * k as f64;
        self.cum[k] + self.rule.integrate(xk, x, |s| self.density_unnorm(potential, s))
    }

    fn cdf(&self, potential: &Potential, x: f64) -> f64 {
        if x == 0.0 {
            0.5
        } else if x < 0.0 {
            self.left_mass(potential, x) / (2.0 * self.half)
        } else if x >= self.l {
            1.0
        } else {
            1.0 - self.left_mass(potential, -x) / (2.0 * self.half)
        }
    }

    fn quantile_left(&self, potential: &Potential, p: f64) -> f64 {
        let target = p * 2.0 * self.half;
        if target <= 0.0 {
            return -self.l;
        }
        let k = self.cum.partition_point(|c| *c <= target).clamp(1, CDF_CELLS) - 1;
        let xk = -self.l + self.h * k as f64;
        let (mut lo, mut hi) = (xk, if k + 1 == CDF_CELLS { 0.0 } else { xk + self.h });
        let r = target - self.cum[k];
        let mut x = (xk + r / self.density_unnorm(potential, xk)).clamp(lo, hi);
        for _ in 0..100 {
            let g = self.rule.integrate(xk, x, |s| self.density_unnorm(potential, s)) - r;
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - g / self.density_unnorm(potential, x);
            if !(next >= lo && next <= hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - x).abs() <= 1e-14 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs());
            x = next;
            if done {
                break;
            }
        }
        x
    }

    fn quantile(&self, potential: &Potential, p: f64) -> f64 {
        if p <= 0.0 {
            -self.l
        } else if p >= 1.0 {
            self.l
        } else if p == 0.5 {
            0.0
        } else if p < 0.5 {
            self.quantile_left(potential, p)
        } else {
            -self.quantile_left(potential, 1.0 - p)
        }
    }
}

/// A one-dimensional law with density `∝ e^{-U}` on `[-R, R]`.
///
/// With `U(x) = x²/2` and `R = a` this is the standard Gaussian restricted
/// to `[-a, a]`.
#[derive(Debug, Clone)]
pub struct OneD {
    potential: Potential,
    radius: f64,
    table: Arc<CdfTable>,
}

impl OneD {
    /// Builds the law and its distribution table. Rejects radii for which
    /// the mass beyond `±R` exceeds `1e-10` of the total.
    pub fn new(potential: Potential, radius: f64) -> Result<Self> {
        Self::build(potential, radius, true)
    }

    /// A genuinely truncated law: the mass beyond `±R` is discarded.
    pub fn truncated(potential: Potential, radius: f64) -> Result<Self> {
        Self::build(potential, radius, false)
    }

    fn build(potential: Potential, radius: f64, check_tail: bool) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Malformed(format!("truncation radius {radius} must be positive")));
        }
        let table = CdfTable::build(&potential, radius)?;
        if check_tail {
            // convexity gives ∫_R^∞ e^{-U} ≤ e^{-U(R)}/U'(R)
            let (u, d1, _) = potential.eval(radius);
            let tail = if d1 > 0.0 { libm::exp(table.u0 - u) / d1 } else { f64::INFINITY };
            let rel = tail / table.half;
            if !(rel <= 1e-10) {
                return Err(Error::Truncation(rel));
            }
        }
        Ok(Self {
            potential,
            radius,
            table: Arc::new(table),
        })
    }

    pub fn quartic(lambda: f64) -> Result<Self> {
        Self::new(Potential::Polynomial(EvenPolynomial::quartic(lambda)?), DEFAULT_RADIUS)
    }

    /// Standard Gaussian restricted to `[-a, a]`.
    pub fn truncated_gaussian(a: f64) -> Result<Self> {
        Self::truncated(Potential::Polynomial(EvenPolynomial::gaussian(1.0)?), a)
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Normalized log-density; `-∞` outside `[-R, R]`.
    pub fn log_density(&self, x: f64) -> f64 {
        if x.abs() > self.radius {
            return f64::NEG_INFINITY;
        }
        self.table.u0 - self.potential.value(x) - libm::log(2.0 * self.table.half)
    }

    pub fn density(&self, x: f64) -> f64 {
        libm::exp(self.log_density(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.table.cdf(&self.potential, x)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.table.quantile(&self.potential, p)
    }

    /// Second moment by composite quadrature.
    pub fn variance(&self) -> f64 {
        let rule = Rule::gauss_legendre(8);
        2.0 * crate::quadrature::composite(&rule, -self.radius, 0.0, 2048, |x| x * x * self.density(x))
    }
}

/// A zero-symmetric strongly log-concave probability law.
#[derive(Debug, Clone)]
pub enum EvenStrongLogConcave {
    GaussianZeroMean { cov: SpdMatrix },
    OneDPotential(OneD),
    ProductOfOneD { factors: Vec<OneD> },
    TruncatedGaussian { body: SymmetricBody },
}

impl EvenStrongLogConcave {
    pub fn gaussian(cov: SpdMatrix) -> Self {
        Self::GaussianZeroMean { cov }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::GaussianZeroMean { cov } => cov.dim(),
            Self::OneDPotential(_) => 1,
            Self::ProductOfOneD { factors } => factors.len(),
            Self::TruncatedGaussian { body } => body.dim(),
        }
    }

    /// Coordinate factors for laws that are products of 1D laws other than
    /// centered Gaussians; boxes become truncated Gaussian factors.
    pub fn one_d_factors(&self) -> Result<Option<Vec<OneD>>> {
        match self {
            Self::GaussianZeroMean { .. } => Ok(None),
            Self::OneDPotential(f) => Ok(Some(vec![f.clone()])),
            Self::ProductOfOneD { factors } => Ok(Some(factors.clone())),
            Self::TruncatedGaussian { body } => match body.as_box() {
                Some(w) => w.iter().map(|a| OneD::truncated_gaussian(*a)).collect::<Result<Vec<_>>>().map(Some),
                None => Ok(None),
            },
        }
    }
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Validation {
    pub even_ok: bool,
    pub slc_ok: bool,
    pub worst_violation: f64,
}

/// Tolerance for covariance eigenvalues above one.
pub const GAUSSIAN_SLC_TOL: f64 = 1e-10;
/// Tolerance for second differences of `U` below one.
pub const POTENTIAL_SLC_TOL: f64 = 1e-6;

fn validate_one_d(f: &OneD) -> Result<(f64, f64)> {
    let r = f.radius;
    let m = VALIDATION_GRID;
    let h = 2.0 * r / (m - 1) as f64;
    let mut even_dev = 0.0f64;
    let mut slc_dev = 0.0f64;
    for i in 0..m {
        let x = -r + h * i as f64;
        let (u, _, d2) = f.potential.eval(x);
        let (um, _, _) = f.potential.eval(-x);
        if !(u.is_finite() && d2.is_finite()) {
            return Err(Error::NonFinite("potential"));
        }
        // |ρ(x) − ρ(−x)| / ρ(x) = |1 − e^{U(x) − U(−x)}|
        even_dev = even_dev.max(libm::expm1(u - um).abs());
        slc_dev = slc_dev.max(1.0 - d2);
        if i > 0 && i + 1 < m {
            let second = (f.potential.value(x + h) - 2.0 * u + f.potential.value(x - h)) / (h * h);
            slc_dev = slc_dev.max(1.0 - second);
        }
    }
    Ok((even_dev, slc_dev))
}

/// Checks evenness on a symmetric grid and strong log-concavity.
pub fn validate(dist: &EvenStrongLogConcave) -> Result<Validation> {
    match dist {
        EvenStrongLogConcave::GaussianZeroMean { cov } => {
            let top = cov.eigenvalues().last().copied().unwrap_or(0.0);
            let v = (top - 1.0).max(0.0);
            Ok(Validation {
                even_ok: true,
                slc_ok: v <= GAUSSIAN_SLC_TOL,
                worst_violation: v,
            })
        }
        EvenStrongLogConcave::OneDPotential(f) => {
            let (e, s) = validate_one_d(f)?;
            Ok(Validation {
                even_ok: e <= 1e-12,
                slc_ok: s <= POTENTIAL_SLC_TOL,
                worst_violation: e.max(s).max(0.0),
            })
        }
        EvenStrongLogConcave::ProductOfOneD { factors } => {
            if factors.is_empty() {
                return Err(Error::Malformed("product needs at least one factor".into()));
            }
            let mut e = 0.0f64;
            let mut s = f64::NEG_INFINITY;
            for f in factors {
                let (a, b) = validate_one_d(f)?;
                e = e.max(a);
                s = s.max(b);
            }
            Ok(Validation {
                even_ok: e <= 1e-12,
                slc_ok: s <= POTENTIAL_SLC_TOL,
                worst_violation: e.max(s).max(0.0),
            })
        }
        // γ restricted to a convex symmetric body
        EvenStrongLogConcave::TruncatedGaussian { .. } => Ok(Validation {
            even_ok: true,
            slc_ok: true,
            worst_violation: 0.0,
        }),
    }
}

/// The law of `√(1−ε)X + √ε Z′`, `ε ∈ (0, ½)`.
pub fn ou_smooth(dist: &EvenStrongLogConcave, epsilon: f64) -> Result<EvenStrongLogConcave> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: epsilon,
            expected: "(0, 1/2)",
        });
    }
    let smooth = |f: &OneD| -> Result<OneD> {
        let p = SmoothedPotential::new(f.potential.clone(), f.radius, epsilon);
        OneD::new(Potential::Smoothed(Arc::new(p)), f.radius.max(DEFAULT_RADIUS))
    };
    match dist {
        EvenStrongLogConcave::GaussianZeroMean { cov } => {
            let n = cov.dim();
            let m = cov.matrix() * (1.0 - epsilon) + nalgebra::DMatrix::identity(n, n) * epsilon;
            Ok(EvenStrongLogConcave::GaussianZeroMean { cov: SpdMatrix::new(m)? })
        }
        EvenStrongLogConcave::OneDPotential(f) => Ok(EvenStrongLogConcave::OneDPotential(smooth(f)?)),
        EvenStrongLogConcave::ProductOfOneD { factors } => Ok(EvenStrongLogConcave::ProductOfOneD {
            factors: factors.iter().map(smooth).collect::<Result<_>>()?,
        }),
        EvenStrongLogConcave::TruncatedGaussian { .. } => match dist.one_d_factors()? {
            Some(f) if f.len() == 1 => Ok(EvenStrongLogConcave::OneDPotential(smooth(&f[0])?)),
            Some(f) => Ok(EvenStrongLogConcave::ProductOfOneD {
                factors: f.iter().map(smooth).collect::<Result<_>>()?,
            }),
            None => Err(Error::Unsupported("smoothing of a non-box truncated Gaussian".into())),
        },
    }
}

/// Normalized distribution function of a one-dimensional law.
pub fn cdf_1d(dist: &EvenStrongLogConcave, x: f64) -> Result<f64> {
    if dist.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: dist.dim() });
    }
    match dist {
        EvenStrongLogConcave::GaussianZeroMean { cov } => {
            Ok(crate::special::normal_cdf(x / libm::sqrt(cov.matrix()[(0, 0)])))
        }
        EvenStrongLogConcave::OneDPotential(f) => Ok(f.cdf(x)),
        EvenStrongLogConcave::ProductOfOneD { factors } => Ok(factors[0].cdf(x)),
        EvenStrongLogConcave::TruncatedGaussian { .. } => {
            let f = dist.one_d_factors()?.ok_or_else(|| Error::Unsupported("1D body".into()))?;
            Ok(f[0].cdf(x))
        }
    }
}

/// Deterministic samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub dim: usize,
    pub data: Vec<f64>,
    pub seed: u64,
    pub generator_id: String,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        let k = self.len() as f64;
        m.iter().map(|v| v / k).collect()
    }

    /// Empirical second-moment matrix (the law is centered), row-major.
    pub fn second_moments(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for p in self.points() {
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += p[i] * p[j];
                }
            }
        }
        let k = self.len() as f64;
        m.iter().map(|v| v / k).collect()
    }
}

/// Minimum acceptance rate of the rejection sampler.
pub const MIN_ACCEPTANCE: f64 = 1e-6;
const REJECTION_PATIENCE: u64 = 10_000_000;

/// Draws `count` points: covariance square root for Gaussians, inverse
/// distribution function for 1D factors, rejection from `γ` for restrictions
/// to non-box bodies.
pub fn sample(dist: &EvenStrongLogConcave, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::OutOfRange {
            name: "count",
            value: 0.0,
            expected: "> 0",
        });
    }
    let n = dist.dim();
    let chunks = count.div_ceil(rng::CHUNK);
    let factors = dist.one_d_factors()?;
    let sqrt = match dist {
        EvenStrongLogConcave::GaussianZeroMean { cov } => Some(cov.sqrt()),
        _ => None,
    };
    let body = match (dist, &factors) {
        (EvenStrongLogConcave::TruncatedGaussian { body }, None) => {
            if let Some(m) = body.gaussian_measure_exact() {
                if m < MIN_ACCEPTANCE {
                    return Err(Error::Rejection { rate: m, attempts: 0 });
                }
            }
            Some(body)
        }
        _ => None,
    };
    let parts = rng::map_chunks(chunks, |c| -> Result<Vec<f64>> {
        let mut s = Stream::new(seed, c as u64);
        let len = rng::CHUNK.min(count - c * rng::CHUNK);
        let mut out = Vec::with_capacity(len * n);
        let mut z = vec![0.0; n];
        if let Some(f) = &factors {
            for _ in 0..len {
                for fi in f {
                    out.push(fi.quantile(s.uniform()));
                }
            }
        } else if let Some(sq) = &sqrt {
            let m = sq.matrix();
            for _ in 0..len {
                s.fill_normal(&mut z);
                for i in 0..n {
                    out.push((0..n).map(|j| m[(i, j)] * z[j]).sum());
                }
            }
        } else if let Some(b) = body {
            let (mut accepted, mut attempts) = (0u64, 0u64);
            while (accepted as usize) < len {
                s.fill_normal(&mut z);
                attempts += 1;
                if b.contains(&z) {
                    accepted += 1;
                    out.extend_from_slice(&z);
                } else if attempts >= REJECTION_PATIENCE && (accepted as f64) < MIN_ACCEPTANCE * attempts as f64 {
                    return Err(Error::Rejection {
                        rate: accepted as f64 / attempts as f64,
                        attempts,
                    });
                }
            }
        }
        Ok(out)
    });
    let mut data = Vec::with_capacity(count * n);
    for p in parts {
        data.extend(p?);
    }
    Ok(SampleSet {
        dim: n,
        data,
        seed,
        generator_id: rng::GENERATOR_ID.into(),
    })
}
