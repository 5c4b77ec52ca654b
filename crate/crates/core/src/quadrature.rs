//! Gauss–Legendre and Gauss–Hermite rules, composite and adaptive integration.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of an `m`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn gauss_legendre(m: usize) -> Self {
        assert!(m >= 1);
        let mut nodes = alloc::vec![0.0; m];
        let mut weights = alloc::vec![0.0; m];
        let half = m.div_ceil(2);
        for i in 0..half {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (m as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Probabilists' Gauss–Hermite rule: `Σ wᵢ f(xᵢ) ≈ ∫ f dγ` in one
    /// dimension. Weights sum to one.
    pub fn gauss_hermite(m: usize) -> Self {
        assert!(m >= 1);
        // Newton on orthonormal Hermite functions (physicists' convention),
        // then rescale x → √2 x and w → w/√π.
        let mut nodes = alloc::vec![0.0; m];
        let mut weights = alloc::vec![0.0; m];
        let pim4 = libm::pow(PI, -0.25);
        let mf = m as f64;
        // Golub–Welsch eigenvalues seed the Newton polish; the recurrence
        // then yields accurate weights even in the far tails.
        let mut jac = nalgebra::DMatrix::<f64>::zeros(m, m);
        for k in 1..m {
            let b = libm::sqrt(k as f64 / 2.0);
            jac[(k - 1, k)] = b;
            jac[(k, k - 1)] = b;
        }
        let mut seeds: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
        seeds.sort_by(|a, b| b.total_cmp(a));
        for i in 0..m.div_ceil(2) {
            let mut z = if 2 * i + 1 == m { 0.0 } else { seeds[i] };
            let mut pp = 0.0;
            for _ in 0..200 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..m {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * libm::sqrt(2.0 / (jf + 1.0)) * p2 - libm::sqrt(jf / (jf + 1.0)) * p3;
                }
                pp = libm::sqrt(2.0 * mf) * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[m - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[m - 1 - i] = weights[i];
        }
        let s2 = libm::sqrt(2.0);
        let spi = libm::sqrt(PI);
        let mut pairs: Vec<(f64, f64)> = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| (x * s2, w / spi))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Applies the Legendre rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre over `cells` equal cells of `[a, b]`.
pub fn composite<F: FnMut(f64) -> f64>(rule: &Rule, a: f64, b: f64, cells: usize, mut f: F) -> f64 {
    let h = (b - a) / cells as f64;
    let mut s = 0.0;
    for k in 0..cells {
        let lo = a + h * k as f64;
        s += rule.integrate(lo, lo + h, &mut f);
    }
    s
}

/// Adaptive Gauss–Legendre with interval bisection.
///
/// Each panel is accepted once the one-panel and two-half-panel estimates
/// agree to `max(rtol·|total|, atol)` scaled by the panel's share. Panels that
/// hit `max_depth` (jumps) are kept; the result is an error only when the
/// summed panel errors exceed twice the global tolerance.
#[derive(Debug, Clone)]
pub struct Adaptive {
    rule: Rule,
    pub rtol: f64,
    pub atol: f64,
    pub max_depth: u32,
}

impl Adaptive {
    pub fn new(rtol: f64) -> Self {
        Self {
            rule: Rule::gauss_legendre(10),
            rtol,
            atol: 1e-300,
            max_depth: 40,
        }
    }

    pub fn with_atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }

    /// Integrates `f` over `[a, b]`, returning the estimate and an error bound.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> Result<(f64, f64)> {
        if a == b {
            return Ok((0.0, 0.0));
        }
        // Initial coarse pass over 16 panels gives the scale for the tolerance.
        let panels = 16;
        let h = (b - a) / panels as f64;
        let mut stack: Vec<(f64, f64, f64, u32)> = Vec::new();
        let mut scale = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            let whole = self.rule.integrate(lo, hi, &mut f);
            scale += whole.abs();
            stack.push((lo, hi, whole, 0));
        }
        let mut total = 0.0;
        let mut err = 0.0;
        let width = (b - a).abs();
        while let Some((lo, hi, whole, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = self.rule.integrate(lo, mid, &mut f);
            let right = self.rule.integrate(mid, hi, &mut f);
            let refined = left + right;
            let diff = (refined - whole).abs();
            let share = (hi - lo).abs() / width;
            let tol = (self.rtol * scale).max(self.atol) * share;
            if diff <= tol || depth >= self.max_depth {
                total += refined;
                err += diff;
            } else {
                stack.push((lo, mid, left, depth + 1));
                stack.push((mid, hi, right, depth + 1));
            }
        }
        if !total.is_finite() || err > 2.0 * (self.rtol * scale).max(self.atol) {
            return Err(Error::Quadrature { estimate: total, error: err });
        }
        Ok((total, err))
    }
}

/// Half-width, cell count and points per cell of the composite 1D grid for
/// expectations under the standard Gaussian. Cells line up with the
/// monotone map tables.
pub const GRID_RADIUS: f64 = 10.0;
pub const GRID_CELLS: usize = 2048;
pub const GRID_POINTS: usize = 6;

/// Nodes and `φ`-weighted weights of the composite grid on
/// `[-GRID_RADIUS, GRID_RADIUS]`; `Σ wᵢ f(xᵢ) ≈ ∫ f dγ`.
pub fn gaussian_grid_1d() -> (Vec<f64>, Vec<f64>) {
    let rule = Rule::gauss_legendre(GRID_POINTS);
    let h = 2.0 * GRID_RADIUS / GRID_CELLS as f64;
    let mut nodes = Vec::with_capacity(GRID_CELLS * GRID_POINTS);
    let mut weights = Vec::with_capacity(GRID_CELLS * GRID_POINTS);
    for k in 0..GRID_CELLS {
        let mid = -GRID_RADIUS + h * (k as f64 + 0.5);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let z = mid + 0.5 * h * x;
            nodes.push(z);
            weights.push(0.5 * h * w * crate::special::normal_pdf(z));
        }
    }
    (nodes, weights)
}

/// How expectations under the standard Gaussian are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum IntegrationSpec {
    /// Quadrature when `n ≤ 3`, Monte Carlo otherwise.
    Auto,
    /// Tensor Gauss–Hermite; `n ≤ 3` only.
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Monte Carlo budget used by [`IntegrationSpec::Auto`] beyond three
/// dimensions.
pub const DEFAULT_MC_SAMPLES: usize = 200_000;

/// Gauss–Hermite points per axis for `n = 1, 2, 3`.
pub const HERMITE_POINTS: [usize; 3] = [200, 64, 24];

/// Means of `k` integrands with their sample covariance (zero for
/// quadrature).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    /// Row-major `k×k` covariance of one draw.
    pub cov: Vec<f64>,
    /// Zero for quadrature.
    pub samples: u64,
}

impl Moments {
    pub fn estimate(&self, i: usize) -> crate::Estimate {
        crate::Estimate::new(self.mean[i], self.linear_se(&unit(self.mean.len(), i)))
    }

    /// Standard error of `Σ wᵢ meanᵢ`.
    pub fn linear_se(&self, w: &[f64]) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        let k = self.mean.len();
        let mut v = 0.0;
        for i in 0..k {
            for j in 0..k {
                v += w[i] * w[j] * self.cov[i * k + j];
            }
        }
        libm::sqrt(v.max(0.0) / self.samples as f64)
    }
}

fn unit(k: usize, i: usize) -> Vec<f64> {
    let mut v = alloc::vec![0.0; k];
    v[i] = 1.0;
    v
}

/// `E_γ[f(Z)]` for a vector-valued `f: ℝⁿ → ℝᵏ` written into its second
/// argument.
pub fn gaussian_moments<F>(n: usize, k: usize, spec: IntegrationSpec, f: F) -> Result<Moments>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync + Send,
{
    let (samples, seed) = match spec {
        IntegrationSpec::MonteCarlo { samples, seed } => (samples, seed),
        IntegrationSpec::Auto if n > 3 => (DEFAULT_MC_SAMPLES, 0),
        IntegrationSpec::Quadrature if n > 3 => {
            return Err(Error::Unsupported(alloc::format!("tensor quadrature in dimension {n}")))
        }
        _ => return hermite_moments(n, k, &f),
    };
    if samples < 2 {
        return Err(Error::OutOfRange {
            name: "samples",
            value: samples as f64,
            expected: "≥ 2",
        });
    }
    let chunks = samples.div_ceil(crate::rng::CHUNK);
    let parts = crate::rng::map_chunks(chunks, |c| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut s = crate::rng::Stream::new(seed, c as u64);
        let len = crate::rng::CHUNK.min(samples - c * crate::rng::CHUNK);
        let mut z = alloc::vec![0.0; n];
        let mut out = alloc::vec![0.0; k];
        let mut s1 = alloc::vec![0.0; k];
        let mut s2 = alloc::vec![0.0; k * k];
        for _ in 0..len {
            s.fill_normal(&mut z);
            f(&z, &mut out)?;
            for i in 0..k {
                s1[i] += out[i];
                for j in 0..k {
                    s2[i * k + j] += out[i] * out[j];
                }
            }
        }
        Ok((s1, s2))
    });
    let mut s1 = alloc::vec![0.0; k];
    let mut s2 = alloc::vec![0.0; k * k];
    for p in parts {
        let (a, b) = p?;
        for (x, y) in s1.iter_mut().zip(a) {
            *x += y;
        }
        for (x, y) in s2.iter_mut().zip(b) {
            *x += y;
        }
    }
    let m = samples as f64;
    let mean: Vec<f64> = s1.iter().map(|v| v / m).collect();
    let mut cov = alloc::vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            cov[i * k + j] = (s2[i * k + j] / m - mean[i] * mean[j]) * m / (m - 1.0);
        }
    }
    Ok(Moments {
        mean,
        cov,
        samples: samples as u64,
    })
}

fn hermite_moments<F>(n: usize, k: usize, f: &F) -> Result<Moments>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    if n == 0 {
        return Err(Error::Malformed("dimension must be positive".into()));
    }
    let rule = Rule::gauss_hermite(HERMITE_POINTS[n - 1]);
    let m = rule.nodes.len();
    let mut idx = alloc::vec![0usize; n];
    let mut z = alloc::vec![0.0; n];
    let mut out = alloc::vec![0.0; k];
    let mut mean = alloc::vec![0.0; k];
    loop {
        let mut w = 1.0;
        for d in 0..n {
            z[d] = rule.nodes[idx[d]];
            w *= rule.weights[idx[d]];
        }
        f(&z, &mut out)?;
        for i in 0..k {
            mean[i] += w * out[i];
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return Ok(Moments {
                    mean,
                    cov: alloc::vec![0.0; k * k],
                    samples: 0,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = Rule::gauss_legendre(6);
        let v = r.integrate(-1.0, 2.0, |x| x.powi(11) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(12) - 1.0) / 12.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((v - exact).abs() < 1e-11);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_moments() {
        for m in [1usize, 2, 7, 40, 201] {
            let r = Rule::gauss_hermite(m);
            let s0: f64 = r.weights.iter().sum();
            assert!((s0 - 1.0).abs() < 1e-12, "m={m} sum={s0}");
            if m >= 3 {
                let s2: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
                let s4: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
                assert!((s2 - 1.0).abs() < 1e-12);
                assert!((s4 - 3.0).abs() < 1e-11);
            }
        }
        // ∫ e^{-x²/4} dγ = (3/2)^{-1/2}
        let r = Rule::gauss_hermite(201);
        let v: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * libm::exp(-x * x / 4.0)).sum();
        assert!((v - libm::pow(1.5, -0.5)).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let q = Adaptive::new(1e-12);
        let (v, _) = q.integrate(-1.0, 2.0, |x| x.abs()).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
        let (g, _) = q.integrate(-8.0, 1.0, crate::special::normal_pdf).unwrap();
        assert!((g - crate::special::normal_cdf(1.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_grid_moments() {
        let (x, w) = gaussian_grid_1d();
        let m0: f64 = w.iter().sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-14);
        assert!((m4 - 3.0).abs() < 1e-13);
    }

    #[test]
    fn tensor_and_monte_carlo_moments_agree() {
        let f = |z: &[f64], out: &mut [f64]| -> Result<()> {
            out[0] = z.iter().map(|v| v * v).sum();
            out[1] = libm::exp(-0.25 * z[0] * z[0]);
            Ok(())
        };
        for n in 1..=3 {
            let q = gaussian_moments(n, 2, IntegrationSpec::Quadrature, f).unwrap();
            assert!((q.mean[0] - n as f64).abs() < 1e-12);
            assert!((q.mean[1] - libm::pow(1.5, -0.5)).abs() < 1e-12);
            let mc = gaussian_moments(n, 2, IntegrationSpec::MonteCarlo { samples: 100_000, seed: 1 }, f).unwrap();
            let e = mc.estimate(0);
            assert!((e.value - n as f64).abs() < 4.0 * e.std_error);
        }
        assert!(gaussian_moments(4, 1, IntegrationSpec::Quadrature, f).is_err());
    }
}
