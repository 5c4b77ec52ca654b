//! Scalar and matrix kernels: power means, the σ comparison function,
//! symmetric positive-definite square roots, and the closed-form relative
//! entropy of centered Gaussians against the standard Gaussian.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{check_unit, Error, Result};

/// Extended real `[-∞, +∞]` used for power-mean exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_nonnegative(self) -> bool {
        match self {
            ExtReal::NegInf => false,
            ExtReal::Finite(p) => p >= 0.0,
            ExtReal::PosInf => true,
        }
    }

    /// Sort key; `-∞ < finite < +∞`.
    pub fn as_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(p) => p,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn from_f64(p: f64) -> Self {
        if p == f64::INFINITY {
            ExtReal::PosInf
        } else if p == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(p)
        }
    }
}

/// `M_p^t(x, y)`: the weighted power mean with weights `(1-t, t)`, and zero
/// whenever `x·y = 0`.
pub fn power_mean(p: ExtReal, t: f64, x: f64, y: f64) -> Result<f64> {
    check_unit("t", t)?;
    if !x.is_finite() {
        return Err(Error::NonFinite("x"));
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("y"));
    }
    if x < 0.0 || y < 0.0 {
        return Err(Error::OutOfRange {
            name: "x, y",
            value: x.min(y),
            expected: "≥ 0",
        });
    }
    if x == 0.0 || y == 0.0 {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(x);
    }
    if t == 1.0 {
        return Ok(y);
    }
    Ok(match p {
        ExtReal::NegInf => x.min(y),
        ExtReal::PosInf => x.max(y),
        ExtReal::Finite(0.0) => libm::exp((1.0 - t) * libm::log(x) + t * libm::log(y)),
        ExtReal::Finite(p) => {
            // log-sum-exp form keeps large |p| finite
            let a = p * libm::log(x);
            let b = p * libm::log(y);
            let m = a.max(b);
            let s1 = (1.0 - t) * libm::expm1(a - m) + t * libm::expm1(b - m);
            libm::exp((m + libm::log1p(s1)) / p)
        }
    })
}

/// Switch point for the small-angle series of [`sigma_comparison`].
pub const SIGMA_SERIES_THRESHOLD: f64 = 1e-6;

/// `σ^{(t)}(θ) = sin(√(2/n)·tθ) / sin(√(2/n)·θ)` for dimension `n`.
///
/// Defined only for `θ < √(n/2)·π`; outside that range the comparison is
/// infinite and an error is returned instead.
pub fn sigma_comparison(n: usize, theta: f64, t: f64) -> Result<f64> {
    check_unit("t", t)?;
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "n",
            value: 0.0,
            expected: "≥ 1",
        });
    }
    if !theta.is_finite() {
        return Err(Error::NonFinite("theta"));
    }
    if theta < 0.0 {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            expected: "≥ 0",
        });
    }
    let a = libm::sqrt(2.0 / n as f64) * theta;
    if a >= PI {
        return Err(Error::SigmaDomain(a));
    }
    if a > SIGMA_SERIES_THRESHOLD {
        return Ok(libm::sin(a * t) / libm::sin(a));
    }
    let a2 = a * a;
    let u = 1.0 - t * t;
    Ok(t * (1.0 + a2 * u / 6.0 + a2 * a2 * u * (7.0 - 3.0 * t * t) / 360.0))
}

/// A symmetric positive-definite matrix.
///
/// Accepted when the relative asymmetry is at most `1e-12` and the smallest
/// eigenvalue exceeds `1e-12` times the largest. The stored matrix is the
/// exact symmetrization of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
}

pub const SYMMETRY_RTOL: f64 = 1e-12;
pub const EIGEN_RATIO_TOL: f64 = 1e-12;

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let m = symmetrized(m)?;
        let eig = m.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || !(min > EIGEN_RATIO_TOL * max) {
            return Err(Error::NotPositiveDefinite(if max > 0.0 { min / max } else { min }));
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn scaled_identity(n: usize, s: f64) -> Result<Self> {
        Self::new(DMatrix::identity(n, n) * s)
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)] == 0.0))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.m.diagonal().iter().copied().collect()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn log_det(&self) -> f64 {
        self.eigenvalues().iter().map(|l| libm::log(*l)).sum()
    }

    pub fn inverse(&self) -> SpdMatrix {
        let eig = self.m.clone().symmetric_eigen();
        let d = eig.eigenvalues.map(|l| 1.0 / l);
        let inv = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
        SpdMatrix { m: symmetrize_unchecked(inv) }
    }

    /// Principal square root by spectral decomposition.
    pub fn sqrt(&self) -> SpdMatrix {
        let eig = self.m.clone().symmetric_eigen();
        let d = eig.eigenvalues.map(libm::sqrt);
        let r = &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose();
        SpdMatrix { m: symmetrize_unchecked(r) }
    }
}

/// Principal SPD square root; see [`SpdMatrix::sqrt`].
pub fn spd_sqrt(m: &SpdMatrix) -> SpdMatrix {
    m.sqrt()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Malformed("empty matrix".into()));
    }
    for r in rows {
        if r.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub(crate) fn symmetrized(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(Error::Malformed("empty matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entry"));
    }
    let scale = m.amax();
    let dev = (&m - m.transpose()).amax();
    if dev > SYMMETRY_RTOL * scale {
        return Err(Error::NotSymmetric(if scale > 0.0 { dev / scale } else { dev }));
    }
    Ok(symmetrize_unchecked(m))
}

fn symmetrize_unchecked(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Relative entropy `½(tr Σ − n − ln det Σ)` of `N(0, Σ)` to the standard
/// Gaussian, in nats.
pub fn gaussian_relative_entropy(cov: &SpdMatrix) -> f64 {
    cov.eigenvalues()
        .iter()
        .map(|&l| {
            let x = l - 1.0;
            x - libm::log1p(x)
        })
        .sum::<f64>()
        * 0.5
}

/// Residuals of the entropic inequality and its σ-strengthened form.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropicGaps {
    pub plain_gap: f64,
    pub sigma_gap: f64,
}

/// `plain = e^{-D_t/n} − (1−t)e^{-D_0/n} − t e^{-D_1/n}` and the same with
/// weights `σ^{(1−t)}(θ), σ^{(t)}(θ)`.
pub fn entropic_bm_gaps(d0: f64, d1: f64, dt: f64, t: f64, n: usize, theta: f64) -> Result<EntropicGaps> {
    check_unit("t", t)?;
    for (name, d) in [("d0", d0), ("d1", d1), ("dt", dt)] {
        if !d.is_finite() {
            return Err(Error::NonFinite(name));
        }
    }
    let nf = n as f64;
    let e0 = libm::exp(-d0 / nf);
    let e1 = libm::exp(-d1 / nf);
    let et = libm::exp(-dt / nf);
    let s0 = sigma_comparison(n, theta, 1.0 - t)?;
    let s1 = sigma_comparison(n, theta, t)?;
    Ok(EntropicGaps {
        plain_gap: et - (1.0 - t) * e0 - t * e1,
        sigma_gap: et - s0 * e0 - s1 * e1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Adaptive;
    use crate::rng::Stream;
    use crate::special::normal_log_pdf;

    const P: ExtReal = ExtReal::Finite(1.0);

    #[test]
    fn power_mean_examples() {
        assert!((power_mean(ExtReal::Finite(0.0), 0.5, 4.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((power_mean(P, 0.5, 2.0, 4.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(power_mean(ExtReal::Finite(2.0), 0.5, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(power_mean(ExtReal::NegInf, 0.3, 3.0, 2.0).unwrap(), 2.0);
        assert_eq!(power_mean(ExtReal::PosInf, 0.3, 3.0, 2.0).unwrap(), 3.0);
        assert_eq!(power_mean(ExtReal::PosInf, 0.3, 3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn power_mean_rejects_bad_input() {
        assert!(power_mean(P, 1.5, 1.0, 1.0).is_err());
        assert!(power_mean(P, -0.1, 1.0, 1.0).is_err());
        assert!(power_mean(P, 0.5, f64::INFINITY, 1.0).is_err());
        assert!(power_mean(P, 0.5, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn power_mean_limits_are_continuous() {
        let (x, y, t) = (0.7, 3.1, 0.35);
        let g = power_mean(ExtReal::Finite(0.0), t, x, y).unwrap();
        assert!((power_mean(ExtReal::Finite(1e-9), t, x, y).unwrap() - g).abs() < 1e-8);
        assert!((power_mean(ExtReal::Finite(1e5), t, x, y).unwrap() - y).abs() < 1e-4);
        assert!((power_mean(ExtReal::Finite(-1e5), t, x, y).unwrap() - x).abs() < 1e-4);
    }

    #[test]
    fn sigma_examples() {
        assert!((sigma_comparison(1, 1e-9, 0.3).unwrap() - 0.3).abs() < 1e-15);
        assert!((sigma_comparison(3, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let v = sigma_comparison(2, PI / 2.0, 0.5).unwrap();
        assert!((v - 0.707_106_781_186_547_5).abs() < 1e-15);
    }

    #[test]
    fn sigma_series_matches_direct_ratio_near_threshold() {
        // just above the threshold the direct ratio is still accurate to ~1e-10
        for &t in &[0.0, 0.1, 0.5, 0.9, 1.0] {
            let a = 2e-6;
            let direct = libm::sin(a * t) / libm::sin(a);
            let theta = a / libm::sqrt(2.0);
            let a2 = 0.9e-6 / libm::sqrt(2.0);
            assert!((sigma_comparison(1, theta, t).unwrap() - direct).abs() < 1e-10);
            let series = sigma_comparison(1, a2, t).unwrap();
            assert!((series - t).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_domain_error() {
        let bound = libm::sqrt(0.5) * PI;
        assert!(matches!(sigma_comparison(1, bound, 0.5), Err(Error::SigmaDomain(_))));
        assert!(sigma_comparison(1, bound * 0.999, 0.5).is_ok());
        assert!(sigma_comparison(4, -1.0, 0.5).is_err());
    }

    #[test]
    fn spd_acceptance() {
        assert!(SpdMatrix::from_rows(&[alloc::vec![1.0, 0.2], alloc::vec![0.2 + 1e-9, 1.0]]).is_err());
        assert!(SpdMatrix::from_rows(&[alloc::vec![1.0, 2.0], alloc::vec![2.0, 1.0]]).is_err());
        assert!(matches!(
            SpdMatrix::from_diagonal(&[1.0, 1e-13]),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(SpdMatrix::from_diagonal(&[1.0, 1e-11]).is_ok());
    }

    #[test]
    fn sqrt_examples() {
        let i = SpdMatrix::identity(3).sqrt();
        assert!((i.matrix() - DMatrix::identity(3, 3)).amax() < 1e-15);
        let d = SpdMatrix::from_diagonal(&[0.25, 0.81]).unwrap().sqrt();
        assert!((d.matrix()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((d.matrix()[(1, 1)] - 0.9).abs() < 1e-15);
        assert!(d.matrix()[(0, 1)].abs() < 1e-15);
    }

    fn random_spd(s: &mut Stream, n: usize) -> SpdMatrix {
        let g = DMatrix::from_fn(n, n, |_, _| s.normal());
        SpdMatrix::new(&g * g.transpose() + DMatrix::identity(n, n) * 0.1).unwrap()
    }

    #[test]
    fn sqrt_reconstruction_residual() {
        let mut s = Stream::new(11, 0);
        for n in 1..=6 {
            for _ in 0..20 {
                let m = random_spd(&mut s, n);
                let r = m.sqrt();
                let res = (r.matrix() * r.matrix() - m.matrix()).norm();
                assert!(res <= 1e-10 * m.matrix().norm(), "n={n} res={res}");
            }
        }
    }

    #[test]
    fn relative_entropy_examples() {
        assert_eq!(gaussian_relative_entropy(&SpdMatrix::identity(4)), 0.0);
        let d = gaussian_relative_entropy(&SpdMatrix::scaled_identity(1, 0.25).unwrap());
        // independent oracle: quadrature of ∫ ρ log(ρ/φ) dx with ρ = N(0, 1/4)
        let q = Adaptive::new(1e-13)
            .integrate(-12.0, 12.0, |x| {
                let lr = normal_log_pdf(2.0 * x) + libm::log(2.0);
                libm::exp(lr) * (lr - normal_log_pdf(x))
            })
            .unwrap()
            .0;
        assert!((d - q).abs() < 1e-10);
        assert!((d - 0.318_147_180_559_945_3).abs() < 1e-15);
        let d2 = gaussian_relative_entropy(&SpdMatrix::from_diagonal(&[0.25, 0.25]).unwrap());
        assert!((d2 - 2.0 * d).abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_orthogonal_invariance() {
        let mut s = Stream::new(5, 3);
        for n in 2..=5 {
            let m = random_spd(&mut s, n);
            let g = DMatrix::from_fn(n, n, |_, _| s.normal());
            let q = g.qr().q();
            let rotated = SpdMatrix::new(&q * m.matrix() * q.transpose()).unwrap();
            let a = gaussian_relative_entropy(&m);
            let b = gaussian_relative_entropy(&rotated);
            assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn gaps_examples() {
        let g = entropic_bm_gaps(0.3, 0.3, 0.3, 0.4, 2, 0.0).unwrap();
        assert!(g.plain_gap.abs() < 1e-15 && g.sigma_gap.abs() < 1e-15);
        let g = entropic_bm_gaps(0.7, 0.1, 0.7, 0.0, 3, 0.5).unwrap();
        assert_eq!(g.plain_gap, 0.0);
        let d0 = 0.318_147_180_559_945_3;
        let d1 = 0.043_143_551_314_209_75;
        let dt = 0.142_032_916_092_454_26;
        let g = entropic_bm_gaps(d0, d1, dt, 0.5, 1, 0.3).unwrap();
        // mpmath
        assert!((g.plain_gap - 0.024_957_899_351_161_13).abs() < 1e-14);
        assert!((g.sigma_gap - 0.005_636_503_519_851_694).abs() < 1e-14);
        assert!(g.sigma_gap <= g.plain_gap);
        assert!(entropic_bm_gaps(d0, d1, dt, 0.5, 1, 3.0).is_err());
    }
}
