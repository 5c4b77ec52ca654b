//! Origin-symmetric convex bodies and the geometric side of the inequality:
//! Minkowski-combination membership, Gaussian measure, the Gaussian
//! dimensional Brunn–Minkowski check, the translated-point counterexample,
//! and the entropy variational principle `γ(K) = sup_μ e^{-D(μ‖γ)}`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::distributions::EvenStrongLogConcave;
use crate::error::{check_unit, Error, Result};
use crate::gauss::SpdMatrix;
use crate::quadrature::Adaptive;
use crate::rng::{self, Stream};
use crate::special::{interval_mass, interval_mass_between, normal_log_pdf};

#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    /// `|xᵢ| ≤ wᵢ`.
    Box { half_widths: Vec<f64> },
    /// `xᵀAx ≤ 1`.
    Ellipsoid { shape: SpdMatrix },
    /// `‖x‖_p ≤ radius`, `p ∈ [1, ∞]`.
    PNormBall { dim: usize, p: f64, radius: f64 },
    /// `|⟨aᵢ, x⟩| ≤ bᵢ` for every row.
    HPolytope { rows: Vec<(Vec<f64>, f64)> },
}

#[derive(Debug, Clone)]
enum Cache {
    None,
    Ellipsoid {
        a: Vec<f64>,
        a_inv: Vec<f64>,
        eigvals: Vec<f64>,
        eigvecs: Vec<f64>,
    },
    Polytope {
        vertices: Vec<Vec<f64>>,
    },
}

/// An origin-symmetric convex body with membership, projection and
/// support-function oracles.
#[derive(Debug, Clone)]
pub struct SymmetricBody {
    kind: BodyKind,
    dim: usize,
    cache: Cache,
}

impl PartialEq for SymmetricBody {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Iteration cap of the cyclic slab projection for polytopes.
pub const POLYTOPE_PROJECTION_ITERS: usize = 500;

impl SymmetricBody {
    pub fn new(kind: BodyKind) -> Result<Self> {
        match kind {
            BodyKind::Box { half_widths } => Self::cuboid(half_widths),
            BodyKind::Ellipsoid { shape } => Ok(Self::ellipsoid(shape)),
            BodyKind::PNormBall { dim, p, radius } => Self::pnorm_ball(dim, p, radius),
            BodyKind::HPolytope { rows } => Self::hpolytope(rows),
        }
    }

    pub fn cuboid(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() {
            return Err(Error::Malformed("box needs at least one half-width".into()));
        }
        if half_widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Malformed("box half-widths must be positive and finite".into()));
        }
        Ok(Self {
            dim: half_widths.len(),
            kind: BodyKind::Box { half_widths },
            cache: Cache::None,
        })
    }

    /// Symmetric interval `[-a, a]`.
    pub fn interval(a: f64) -> Result<Self> {
        Self::cuboid(vec![a])
    }

    pub fn ellipsoid(shape: SpdMatrix) -> Self {
        let n = shape.dim();
        let eig = shape.matrix().clone().symmetric_eigen();
        let inv = shape.inverse();
        let cache = Cache::Ellipsoid {
            a: shape.matrix().as_slice().to_vec(),
            a_inv: inv.matrix().as_slice().to_vec(),
            eigvals: eig.eigenvalues.iter().copied().collect(),
            eigvecs: eig.eigenvectors.as_slice().to_vec(),
        };
        Self {
            dim: n,
            kind: BodyKind::Ellipsoid { shape },
            cache,
        }
    }

    pub fn pnorm_ball(dim: usize, p: f64, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Malformed("p-norm ball needs dim ≥ 1".into()));
        }
        if !(p >= 1.0) {
            return Err(Error::Malformed(format!("p-norm ball needs p ≥ 1 (nonconvex for p = {p})")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Malformed("p-norm ball radius must be positive".into()));
        }
        Ok(Self {
            dim,
            kind: BodyKind::PNormBall { dim, p, radius },
            cache: Cache::None,
        })
    }

    pub fn hpolytope(rows: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let n = rows.first().map(|r| r.0.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::Malformed("polytope needs at least one row".into()));
        }
        for (a, b) in &rows {
            if a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.len() });
            }
            if !(b.is_finite() && *b > 0.0) {
                return Err(Error::Malformed("polytope offsets must be positive".into()));
            }
            if a.iter().all(|v| *v == 0.0) || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Malformed("polytope normals must be finite and nonzero".into()));
            }
        }
        let vertices = polytope_vertices(&rows, n)?;
        Ok(Self {
            dim: n,
            kind: BodyKind::HPolytope { rows },
            cache: Cache::Polytope { vertices },
        })
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half-widths when the body is an axis-aligned box (every 1D body is an
    /// interval).
    pub fn as_box(&self) -> Option<Vec<f64>> {
        match &self.kind {
            BodyKind::Box { half_widths } => Some(half_widths.clone()),
            BodyKind::PNormBall { dim, p, radius } if *p == f64::INFINITY => Some(vec![*radius; *dim]),
            _ if self.dim == 1 => Some(vec![self.support(&[1.0])]),
            _ => None,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        match (&self.kind, &self.cache) {
            (BodyKind::Box { half_widths }, _) => x.iter().zip(half_widths).all(|(v, w)| v.abs() <= *w),
            (BodyKind::Ellipsoid { .. }, Cache::Ellipsoid { a, .. }) => quad_form(a, x, self.dim) <= 1.0,
            (BodyKind::PNormBall { p, radius, .. }, _) => pnorm(x, *p) <= *radius,
            (BodyKind::HPolytope { rows }, _) => rows.iter().all(|(a, b)| dot(a, x).abs() <= *b),
            _ => unreachable!(),
        }
    }

    /// Support function `h_K(u) = max_{y∈K} ⟨u, y⟩`.
    pub fn support(&self, u: &[f64]) -> f64 {
        match (&self.kind, &self.cache) {
            (BodyKind::Box { half_widths }, _) => u.iter().zip(half_widths).map(|(v, w)| v.abs() * w).sum(),
            (BodyKind::Ellipsoid { .. }, Cache::Ellipsoid { a_inv, .. }) => libm::sqrt(quad_form(a_inv, u, self.dim)),
            (BodyKind::PNormBall { p, radius, .. }, _) => {
                let q = if *p == 1.0 {
                    f64::INFINITY
                } else if *p == f64::INFINITY {
                    1.0
                } else {
                    p / (p - 1.0)
                };
                radius * pnorm(u, q)
            }
            (BodyKind::HPolytope { .. }, Cache::Polytope { vertices }) => {
                vertices.iter().map(|v| dot(v, u)).fold(f64::NEG_INFINITY, f64::max)
            }
            _ => unreachable!(),
        }
    }

    /// Euclidean projection onto the body.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        if self.contains(x) {
            return x.to_vec();
        }
        match (&self.kind, &self.cache) {
            (BodyKind::Box { half_widths }, _) => x.iter().zip(half_widths).map(|(v, w)| v.clamp(-w, *w)).collect(),
            (BodyKind::Ellipsoid { .. }, Cache::Ellipsoid { eigvals, eigvecs, .. }) => {
                project_ellipsoid(x, eigvals, eigvecs, self.dim)
            }
            (BodyKind::PNormBall { p, radius, .. }, _) => project_pnorm(x, *p, *radius),
            (BodyKind::HPolytope { rows }, _) => project_polytope(x, rows),
            _ => unreachable!(),
        }
    }

    /// A maximizer of `⟨u, y⟩` over the body.
    pub fn support_point(&self, u: &[f64]) -> Vec<f64> {
        let sign = |v: f64| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 };
        match (&self.kind, &self.cache) {
            (BodyKind::Box { half_widths }, _) => u.iter().zip(half_widths).map(|(v, w)| sign(*v) * w).collect(),
            (BodyKind::Ellipsoid { .. }, Cache::Ellipsoid { a_inv, .. }) => {
                let n = self.dim;
                let h = libm::sqrt(quad_form(a_inv, u, n));
                if h == 0.0 {
                    return vec![0.0; n];
                }
                (0..n).map(|i| (0..n).map(|j| a_inv[i + j * n] * u[j]).sum::<f64>() / h).collect()
            }
            (BodyKind::PNormBall { p, radius, .. }, _) if *p == 1.0 => {
                let k = (0..u.len()).fold(0, |b, i| if u[i].abs() > u[b].abs() { i } else { b });
                let mut y = vec![0.0; u.len()];
                y[k] = radius * sign(u[k]);
                y
            }
            (BodyKind::PNormBall { p, radius, .. }, _) if *p == f64::INFINITY => u.iter().map(|v| radius * sign(*v)).collect(),
            (BodyKind::PNormBall { p, radius, .. }, _) => {
                let q = p / (p - 1.0);
                let nq = pnorm(u, q);
                if nq == 0.0 {
                    return vec![0.0; u.len()];
                }
                u.iter().map(|v| radius * sign(*v) * libm::pow(v.abs() / nq, q - 1.0)).collect()
            }
            (BodyKind::HPolytope { .. }, Cache::Polytope { vertices }) => vertices
                .iter()
                .max_by(|a, b| dot(a, u).total_cmp(&dot(b, u)))
                .cloned()
                .unwrap_or_else(|| vec![0.0; self.dim]),
            _ => unreachable!(),
        }
    }

    /// Vertices of the face exposed by `u` for boxes and polytopes; the
    /// support point otherwise.
    fn face_points(&self, u: &[f64]) -> Vec<Vec<f64>> {
        match (&self.kind, &self.cache) {
            (BodyKind::Box { half_widths }, _) => {
                let mut pts = vec![Vec::new()];
                for (v, w) in u.iter().zip(half_widths) {
                    let choices: &[f64] = if v.abs() > FACE_EPS {
                        &[if *v > 0.0 { 1.0 } else { -1.0 }]
                    } else {
                        &[1.0, -1.0]
                    };
                    pts = pts
                        .iter()
                        .flat_map(|p| {
                            choices.iter().map(move |c| {
                                let mut q = p.clone();
                                q.push(c * w);
                                q
                            })
                        })
                        .collect();
                }
                pts
            }
            (BodyKind::HPolytope { .. }, Cache::Polytope { vertices }) => {
                let h = self.support(u);
                vertices.iter().filter(|v| dot(v, u) >= h - FACE_EPS * h.abs().max(1.0)).cloned().collect()
            }
            _ => vec![self.support_point(u)],
        }
    }

    /// Radius of the largest centered Euclidean ball inside the body.
    pub fn inradius(&self) -> f64 {
        match (&self.kind, &self.cache) {
            (BodyKind::Box { half_widths }, _) => half_widths.iter().copied().fold(f64::INFINITY, f64::min),
            (BodyKind::Ellipsoid { .. }, Cache::Ellipsoid { eigvals, .. }) => {
                1.0 / libm::sqrt(eigvals.iter().copied().fold(0.0, f64::max))
            }
            (BodyKind::PNormBall { dim, p, radius }, _) if *p < 2.0 => {
                radius * libm::pow(*dim as f64, 0.5 - 1.0 / p)
            }
            (BodyKind::PNormBall { radius, .. }, _) => *radius,
            (BodyKind::HPolytope { rows }, _) => rows.iter().map(|(a, b)| b / norm2(a)).fold(f64::INFINITY, f64::min),
            _ => unreachable!(),
        }
    }

    /// Exact standard Gaussian measure, available for boxes and 1D bodies.
    pub fn gaussian_measure_exact(&self) -> Option<f64> {
        self.as_box().map(|w| w.iter().map(|a| interval_mass(*a)).product())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn quad_form(m: &[f64], x: &[f64], n: usize) -> f64 {
    // column-major storage
    let mut s = 0.0;
    for j in 0..n {
        let mut c = 0.0;
        for i in 0..n {
            c += m[j * n + i] * x[i];
        }
        s += x[j] * c;
    }
    s
}

fn pnorm(x: &[f64], p: f64) -> f64 {
    if p == f64::INFINITY {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        norm2(x)
    } else {
        let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * libm::pow(x.iter().map(|v| libm::pow(v.abs() / m, p)).sum::<f64>(), 1.0 / p)
    }
}

fn project_ellipsoid(x: &[f64], eigvals: &[f64], eigvecs: &[f64], n: usize) -> Vec<f64> {
    // x̃ = Qᵀx; find μ ≥ 0 with Σ λᵢ x̃ᵢ² / (1 + μλᵢ)² = 1
    let xt: Vec<f64> = (0..n).map(|j| (0..n).map(|i| eigvecs[j * n + i] * x[i]).sum()).collect();
    let f = |mu: f64| -> (f64, f64) {
        let mut v = -1.0;
        let mut d = 0.0;
        for i in 0..n {
            let den = 1.0 + mu * eigvals[i];
            let term = eigvals[i] * xt[i] * xt[i] / (den * den);
            v += term;
            d -= 2.0 * term * eigvals[i] / den;
        }
        (v, d)
    };
    // f is convex and decreasing, so Newton from μ = 0 increases monotonically
    let mut mu = 0.0;
    for _ in 0..200 {
        let (v, d) = f(mu);
        if v <= 0.0 || d == 0.0 {
            break;
        }
        let step = v / d;
        mu -= step;
        if step.abs() <= 1e-16 * mu.abs() {
            break;
        }
    }
    let yt: Vec<f64> = (0..n).map(|i| xt[i] / (1.0 + mu * eigvals[i])).collect();
    let mut y: Vec<f64> = (0..n).map(|i| (0..n).map(|j| eigvecs[j * n + i] * yt[j]).sum()).collect();
    // pull rounding overshoot back inside
    let mut a = 0.0;
    for i in 0..n {
        a += eigvals[i] * yt[i] * yt[i];
    }
    if a > 1.0 {
        let s = 1.0 / libm::sqrt(a);
        for v in &mut y {
            *v *= s;
        }
    }
    y
}

fn project_l1(x: &[f64], r: f64) -> Vec<f64> {
    let mut u: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, v) in u.iter().enumerate() {
        cum += v;
        let th = (cum - r) / (k as f64 + 1.0);
        if *v > th {
            theta = th;
        }
    }
    x.iter().map(|v| v.signum() * (v.abs() - theta).max(0.0)).collect()
}

fn project_pnorm(x: &[f64], p: f64, r: f64) -> Vec<f64> {
    if p == f64::INFINITY {
        return x.iter().map(|v| v.clamp(-r, r)).collect();
    }
    if p == 2.0 {
        let s = r / norm2(x);
        return x.iter().map(|v| v * s).collect();
    }
    if p == 1.0 {
        return project_l1(x, r);
    }
    // KKT: sᵢ + μ p sᵢ^{p-1} = |xᵢ|, with μ chosen so that Σ sᵢ^p = r^p.
    let solve_s = |xi: f64, mu: f64| -> f64 {
        let (mut lo, mut hi) = (0.0, xi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + mu * p * libm::pow(mid, p - 1.0) > xi {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-16 * xi {
                break;
            }
        }
        lo
    };
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mass = |mu: f64| ax.iter().map(|&xi| libm::pow(solve_s(xi, mu), p)).sum::<f64>();
    let target = libm::pow(r, p);
    let mut hi = 1.0;
    while mass(hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    x.iter().zip(&ax).map(|(v, &xi)| v.signum() * solve_s(xi, hi)).collect()
}

fn project_polytope(x: &[f64], rows: &[(Vec<f64>, f64)]) -> Vec<f64> {
    // Dykstra's algorithm over the slabs
    let m = rows.len();
    let n = x.len();
    let mut y = x.to_vec();
    let mut incr = vec![vec![0.0; n]; m];
    let norms: Vec<f64> = rows.iter().map(|(a, _)| dot(a, a)).collect();
    for _ in 0..POLYTOPE_PROJECTION_ITERS {
        let mut change = 0.0;
        for (k, (a, b)) in rows.iter().enumerate() {
            let z: Vec<f64> = y.iter().zip(&incr[k]).map(|(u, v)| u + v).collect();
            let s = dot(a, &z);
            let clamped = s.clamp(-b, *b);
            let shift = (s - clamped) / norms[k];
            let next: Vec<f64> = z.iter().zip(a).map(|(zi, ai)| zi - shift * ai).collect();
            for i in 0..n {
                incr[k][i] = z[i] - next[i];
                change += (next[i] - y[i]).abs();
            }
            y = next;
        }
        if change <= 1e-15 * (1.0 + norm2(&y)) && rows.iter().all(|(a, b)| dot(a, &y).abs() <= b * (1.0 + 1e-14)) {
            break;
        }
    }
    y
}

fn polytope_vertices(rows: &[(Vec<f64>, f64)], n: usize) -> Result<Vec<Vec<f64>>> {
    let m = rows.len();
    let a = DMatrix::from_fn(m, n, |i, j| rows[i].0[j]);
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if m < n || sv.iter().filter(|s| **s > 1e-12 * smax).count() < n {
        return Err(Error::Malformed("polytope rows do not span the space: body is unbounded".into()));
    }
    let combos = binomial(m, n) as f64 * libm::pow(2.0, (n - 1) as f64);
    if combos > 2e6 {
        return Err(Error::Unsupported(format!("vertex enumeration over {combos} systems")));
    }
    let mut verts: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        // first sign fixed to +; the opposite vertex is added by symmetry
        for signs in 0..(1u64 << (n - 1)) {
            let sys = DMatrix::from_fn(n, n, |i, j| rows[idx[i]].0[j]);
            let rhs = DVector::from_fn(n, |i, _| {
                let s = if i == 0 || (signs >> (i - 1)) & 1 == 0 { 1.0 } else { -1.0 };
                s * rows[idx[i]].1
            });
            if let Some(v) = sys.lu().solve(&rhs) {
                let v: Vec<f64> = v.iter().copied().collect();
                let feasible = rows.iter().all(|(a, b)| dot(a, &v).abs() <= b * (1.0 + 1e-10));
                if feasible && v.iter().all(|x| x.is_finite()) {
                    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
                    for cand in [v, neg] {
                        let scale = 1.0 + norm2(&cand);
                        if !verts.iter().any(|w| {
                            w.iter().zip(&cand).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) <= 1e-10 * scale
                        }) {
                            verts.push(cand);
                        }
                    }
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(verts);
            }
            i -= 1;
            if idx[i] != i + m - n {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(m: usize, k: usize) -> u64 {
    let mut r = 1u64;
    for i in 0..k {
        r = r.saturating_mul((m - i) as u64) / (i as u64 + 1);
    }
    r
}

/// Quasi-uniform unit directions: 2 (1D), 256 (2D), 1024 (3D, Fibonacci
/// sphere), `±eᵢ` and `±(1,…,1)/√n` otherwise.
pub fn direction_net(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..256)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 256.0;
                vec![libm::cos(a), libm::sin(a)]
            })
            .collect(),
        3 => {
            let m = 1024;
            let golden = PI * (3.0 - libm::sqrt(5.0));
            (0..m)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / m as f64;
                    let r = libm::sqrt(1.0 - z * z);
                    let a = golden * k as f64;
                    vec![r * libm::cos(a), r * libm::sin(a), z]
                })
                .collect()
        }
        _ => {
            let mut v = Vec::new();
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = s;
                    v.push(e);
                }
            }
            let d = 1.0 / libm::sqrt(n as f64);
            v.push(vec![d; n]);
            v.push(vec![-d; n]);
            v
        }
    }
}

/// Dense nets for the inscribed polytope; empty beyond three dimensions.
fn hull_net(n: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..HULL_NET_2D)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / HULL_NET_2D as f64;
                vec![libm::cos(a), libm::sin(a)]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - libm::sqrt(5.0));
            (0..HULL_NET_3D)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / HULL_NET_3D as f64;
                    let r = libm::sqrt(1.0 - z * z);
                    let a = golden * k as f64;
                    vec![r * libm::cos(a), r * libm::sin(a), z]
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

const HULL_NET_2D: usize = 4096;
const HULL_NET_3D: usize = 32768;
const NEAREST: usize = 10;
const FACE_COS: f64 = 0.99;
const FACE_EPS: f64 = 1e-12;

/// Long-range neighbours of net index `j`: power-of-two steps around the
/// circle, Fibonacci steps on the Fibonacci sphere (whose nearest neighbours
/// sit at Fibonacci index offsets).
fn hull_jumps(n: usize, m: usize, j: usize) -> impl Iterator<Item = usize> {
    let mut steps = Vec::new();
    if n == 2 {
        let mut s = 1;
        while s < m {
            steps.push((j + s) % m);
            steps.push((j + m - s) % m);
            s *= 2;
        }
    } else {
        let (mut a, mut b) = (1, 2);
        while a < m {
            if j + a < m {
                steps.push(j + a);
            }
            if j >= a {
                steps.push(j - a);
            }
            (a, b) = (b, a + b);
        }
    }
    steps.into_iter()
}

/// `x = Σλᵢvᵢ` with `λ ≥ 0`, `Σλ ≤ 1`: `x` in the simplex spanned by the
/// origin and the `n` vertices.
fn in_simplex(x: &[f64], v: &[&[f64]]) -> bool {
    let lam = match x.len() {
        2 => {
            let det = v[0][0] * v[1][1] - v[1][0] * v[0][1];
            if det.abs() < 1e-300 {
                return false;
            }
            [(x[0] * v[1][1] - v[1][0] * x[1]) / det, (v[0][0] * x[1] - x[0] * v[0][1]) / det, 0.0]
        }
        3 => {
            let c = |a: &[f64], b: &[f64]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            let det = dot(v[0], &c(v[1], v[2]));
            if det.abs() < 1e-300 {
                return false;
            }
            [dot(x, &c(v[1], v[2])) / det, dot(v[0], &c(x, v[2])) / det, dot(v[0], &c(v[1], x)) / det]
        }
        _ => return false,
    };
    let margin = 1e-12;
    lam.iter().all(|l| *l >= 0.0) && lam.iter().sum::<f64>() <= 1.0 - margin
}

/// Three-valued membership verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Membership {
    Inside,
    Outside,
    BoundaryUncertain,
}

/// The set `(1−t)K₀ + tK₁`, with precomputed support values on the
/// direction net.
#[derive(Debug, Clone)]
pub struct MinkowskiCombination {
    k0: SymmetricBody,
    k1: SymmetricBody,
    t: f64,
    net: Vec<Vec<f64>>,
    net_support: Vec<f64>,
    inradius: f64,
    /// Boundary points `(1−t)s₀(u) + t·s₁(u)` over a dense net, with their
    /// directions; their convex hull is an inscribed polytope (2D and 3D).
    hull_dirs: Vec<Vec<f64>>,
    hull_points: Vec<Vec<f64>>,
    /// Nearest net neighbours of each 3D net direction, itself included.
    hull_near: Vec<Vec<usize>>,
    /// Exact faces of the combination with facet normals of a summand, as
    /// `(normal, vertices)` (3D only).
    faces: Vec<(Vec<f64>, Vec<Vec<f64>>)>,
}

impl MinkowskiCombination {
    pub fn new(k0: SymmetricBody, k1: SymmetricBody, t: f64) -> Result<Self> {
        check_unit("t", t)?;
        if k0.dim() != k1.dim() {
            return Err(Error::DimensionMismatch { expected: k0.dim(), got: k1.dim() });
        }
        let n = k0.dim();
        let mut net = direction_net(n);
        // faces of the combination are parallel to faces of the summands
        let mut normals: Vec<Vec<f64>> = Vec::new();
        for k in [&k0, &k1] {
            match k.kind() {
                BodyKind::Box { .. } => normals.extend((0..n).map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })),
                BodyKind::HPolytope { rows } => normals.extend(rows.iter().map(|(a, _)| {
                    let na = norm2(a);
                    a.iter().map(|v| v / na).collect()
                })),
                _ => {}
            }
        }
        let mut faces = Vec::new();
        for u in normals {
            if n == 3 {
                for s in [1.0, -1.0] {
                    let w: Vec<f64> = u.iter().map(|v| s * v).collect();
                    let (f0, f1) = (k0.face_points(&w), k1.face_points(&w));
                    let pts: Vec<Vec<f64>> = f0
                        .iter()
                        .flat_map(|a| f1.iter().map(move |b| a.iter().zip(b).map(|(p, q)| (1.0 - t) * p + t * q).collect()))
                        .collect();
                    if pts.len() >= 3 {
                        faces.push((w, pts));
                    }
                }
            }
            if !net.iter().any(|v| dot(v, &u).abs() > 1.0 - 1e-15) {
                net.push(u.iter().map(|v| -v).collect());
                net.push(u);
            }
        }
        let net_support = net.iter().map(|u| (1.0 - t) * k0.support(u) + t * k1.support(u)).collect();
        let inradius = (1.0 - t) * k0.inradius() + t * k1.inradius();
        let hull_dirs = hull_net(k0.dim());
        let hull_points = hull_dirs
            .iter()
            .map(|u| {
                let a = k0.support_point(u);
                let b = k1.support_point(u);
                a.iter().zip(&b).map(|(p, q)| (1.0 - t) * p + t * q).collect()
            })
            .collect();
        let hull_near = if hull_dirs.len() == HULL_NET_3D {
            (0..HULL_NET_3D)
                .map(|j| {
                    let mut c: Vec<usize> = hull_jumps(3, HULL_NET_3D, j).chain([j]).collect();
                    c.sort_by(|a, b| dot(&hull_dirs[*b], &hull_dirs[j]).total_cmp(&dot(&hull_dirs[*a], &hull_dirs[j])));
                    c.dedup();
                    c.truncate(NEAREST);
                    c
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            k0,
            k1,
            t,
            net,
            net_support,
            inradius,
            hull_dirs,
            hull_points,
            hull_near,
            faces,
        })
    }

    pub fn dim(&self) -> usize {
        self.k0.dim()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn bodies(&self) -> (&SymmetricBody, &SymmetricBody) {
        (&self.k0, &self.k1)
    }

    /// `h = (1−t)h_{K₀} + t·h_{K₁}`.
    pub fn support(&self, u: &[f64]) -> f64 {
        (1.0 - self.t) * self.k0.support(u) + self.t * self.k1.support(u)
    }

    /// Half-widths of the combination when both bodies are boxes.
    pub fn as_box(&self) -> Option<Vec<f64>> {
        let a = self.k0.as_box()?;
        let b = self.k1.as_box()?;
        Some(a.iter().zip(&b).map(|(x, y)| (1.0 - self.t) * x + self.t * y).collect())
    }

    /// Climbs the dense net to the direction maximizing `⟨x,u⟩/h(u)`. Outside
    /// if that direction separates `x`; inside if `probe` lies in a simplex
    /// spanned by the origin and boundary points of nearby directions.
    fn inscribed_verdict(&self, x: &[f64], probe: &[f64], tol: f64) -> Option<Membership> {
        let n = x.len();
        if self.hull_dirs.is_empty() {
            return None;
        }
        let score = |j: usize| {
            let b = &self.hull_points[j];
            let u = &self.hull_dirs[j];
            dot(x, u) / dot(b, u)
        };
        let m = self.hull_dirs.len();
        let mut best = if n == 2 {
            let a = libm::atan2(x[1], x[0]).rem_euclid(2.0 * PI);
            (libm::round(a / (2.0 * PI) * m as f64) as usize) % m
        } else {
            let z = x[2] / norm2(x);
            (libm::round((1.0 - z) * m as f64 / 2.0 - 0.5).max(0.0) as usize).min(m - 1)
        };
        // the score is quasi-concave on the sphere, so climbing over long
        // jumps reaches its maximizer
        let mut top = score(best);
        loop {
            let next = hull_jumps(n, m, best).map(|j| (score(j), j)).fold((top, best), |a, c| if c.0 > a.0 { c } else { a });
            if next.1 == best {
                break;
            }
            (top, best) = next;
        }
        if self.separated(x, &self.hull_dirs[best], tol) {
            return Some(Membership::Outside);
        }
        let in_any = |near: &[usize]| {
            let pts = |k: &[usize]| k.iter().map(|&j| self.hull_points[j].as_slice()).collect::<Vec<_>>();
            for a in 0..near.len() {
                for b in a + 1..near.len() {
                    if n == 2 {
                        if in_simplex(probe, &pts(&[near[a], near[b]])) {
                            return true;
                        }
                        continue;
                    }
                    for c in b + 1..near.len() {
                        if in_simplex(probe, &pts(&[near[a], near[b], near[c]])) {
                            return true;
                        }
                    }
                }
            }
            false
        };
        if n == 2 {
            let near: Vec<usize> = (0..8).map(|k| (best + m + k - 4) % m).collect();
            return in_any(&near).then_some(Membership::Inside);
        }
        if in_any(&self.hull_near[best]) {
            return Some(Membership::Inside);
        }
        // the inscribed points sit slightly below flat faces; use the exact
        // face vertices for faces whose normal is close
        let ub = &self.hull_dirs[best];
        for (normal, pts) in &self.faces {
            if dot(normal, ub) > FACE_COS {
                let all: Vec<usize> = (0..pts.len()).collect();
                for a in 0..all.len() {
                    for b in a + 1..all.len() {
                        for c in b + 1..all.len() {
                            if in_simplex(probe, &[&pts[a], &pts[b], &pts[c]]) {
                                return Some(Membership::Inside);
                            }
                        }
                    }
                }
            }
        }
        None
    }

    fn separated(&self, x: &[f64], u: &[f64], tol: f64) -> bool {
        let nu = norm2(u);
        if !(nu > 0.0) {
            return false;
        }
        let un: Vec<f64> = u.iter().map(|v| v / nu).collect();
        dot(x, &un) > self.support(&un) + tol
    }
}

/// Decides membership of `x` in `(1−t)K₀ + tK₁`.
///
/// Runs alternating exact projections for `min |p − (1−t)y₀ − ty₁|` over
/// `y₀ ∈ K₀, y₁ ∈ K₁` on probes `p = (1+η)x` pushed outward. Since the
/// combination contains the centered ball of radius `ρ` (its inradius), a
/// residual `r` with `|r| ≤ ηρ/2` certifies `x = (p − r)/(1+η) + r/(1+η)` as a
/// member at depth at least `ηρ/(2(1+η))`. Points inside a simplex of the
/// inscribed polytope are accepted first. Coarse pushes settle deep points in a few sweeps; the last push is
/// `η = 2·tol/|x|`. Outside when some direction `u` (from the net or from the
/// residual) gives `⟨x,u⟩ > h(u) + tol`; otherwise (or on iteration
/// exhaustion) boundary-uncertain, so points within a few `tol` of the
/// boundary are never forced into a side.
pub fn combo_membership(mc: &MinkowskiCombination, x: &[f64], tol: f64, max_iter: usize) -> Result<Membership> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange {
            name: "tol",
            value: tol,
            expected: "> 0",
        });
    }
    if x.len() != mc.dim() {
        return Err(Error::DimensionMismatch { expected: mc.dim(), got: x.len() });
    }
    let nx = norm2(x);
    if nx == 0.0 {
        return Ok(Membership::Inside);
    }
    let fine = 2.0 * tol / nx;
    let probe: Vec<f64> = x.iter().map(|v| v * (1.0 + fine)).collect();
    let t = mc.t;
    if t == 0.0 || t == 1.0 {
        let k = if t == 0.0 { &mc.k0 } else { &mc.k1 };
        if k.contains(&probe) {
            return Ok(Membership::Inside);
        }
        let p = k.project(x);
        let r: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
        if norm2(&r) > tol || mc.separated(x, &r, tol) {
            return Ok(Membership::Outside);
        }
        return Ok(Membership::BoundaryUncertain);
    }
    if mc.k0.contains(&probe) && mc.k1.contains(&probe) {
        return Ok(Membership::Inside);
    }
    for (u, h) in mc.net.iter().zip(&mc.net_support) {
        if dot(x, u) > h + tol {
            return Ok(Membership::Outside);
        }
    }
    if let Some(m) = mc.inscribed_verdict(x, &probe, tol) {
        return Ok(m);
    }
    let mut y1 = mc.k1.project(x);
    for eta in COARSE_PUSHES {
        if eta <= fine {
            break;
        }
        let p: Vec<f64> = x.iter().map(|v| v * (1.0 + eta)).collect();
        if let Some(m) = sweep(mc, x, &p, &mut y1, COARSE_SWEEPS, 0.5 * eta * mc.inradius, tol) {
            return Ok(m);
        }
    }
    let accept = 0.5 * fine * mc.inradius;
    if let Some(m) = sweep(mc, x, &probe, &mut y1, max_iter, accept, tol) {
        return Ok(m);
    }
    Ok(accelerated(mc, x, &probe, &y1, ACCELERATED_FACTOR * max_iter, accept, tol).unwrap_or(Membership::BoundaryUncertain))
}

/// Projected gradient with Nesterov momentum and adaptive restart on the
/// joint `(y₀, y₁)` problem. Slower per step than block sweeps, but it does
/// not stall where the two projections fight across a kink.
fn accelerated(mc: &MinkowskiCombination, x: &[f64], probe: &[f64], y1: &[f64], iters: usize, accept: f64, tol: f64) -> Option<Membership> {
    let n = x.len();
    let (a, b) = (1.0 - mc.t, mc.t);
    let step = 1.0 / (a * a + b * b);
    let resid = |y0: &[f64], y1: &[f64]| -> Vec<f64> { (0..n).map(|i| probe[i] - a * y0[i] - b * y1[i]).collect() };
    let start: Vec<f64> = (0..n).map(|i| (probe[i] - b * y1[i]) / a).collect();
    let mut y = (mc.k0.project(&start), y1.to_vec());
    let mut w = y.clone();
    let mut theta = 1.0;
    let mut last = norm2(&resid(&y.0, &y.1));
    for _ in 0..iters {
        let r = resid(&w.0, &w.1);
        let g0: Vec<f64> = (0..n).map(|i| w.0[i] + step * a * r[i]).collect();
        let g1: Vec<f64> = (0..n).map(|i| w.1[i] + step * b * r[i]).collect();
        let next = (mc.k0.project(&g0), mc.k1.project(&g1));
        let r = resid(&next.0, &next.1);
        let res = norm2(&r);
        if res <= accept {
            return Some(Membership::Inside);
        }
        if mc.separated(x, &r, tol) {
            return Some(Membership::Outside);
        }
        if res > last {
            theta = 1.0;
            w = y.clone();
            last = norm2(&resid(&y.0, &y.1));
            continue;
        }
        let theta_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * theta * theta));
        let beta = (theta - 1.0) / theta_next;
        w = (
            (0..n).map(|i| next.0[i] + beta * (next.0[i] - y.0[i])).collect(),
            (0..n).map(|i| next.1[i] + beta * (next.1[i] - y.1[i])).collect(),
        );
        theta = theta_next;
        y = next;
        last = res;
    }
    None
}

const ACCELERATED_FACTOR: usize = 4;

/// Outward pushes tried before the final one, and the sweeps spent on each.
const COARSE_PUSHES: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
const COARSE_SWEEPS: usize = 60;

/// Alternating projections on `probe`, warm-started from `y1`. `Inside`
/// once the residual is at most `accept`, `Outside` once the residual
/// direction separates `x`, `None` on stagnation or exhaustion.
fn sweep(mc: &MinkowskiCombination, x: &[f64], probe: &[f64], y1: &mut Vec<f64>, iters: usize, accept: f64, tol: f64) -> Option<Membership> {
    let n = x.len();
    let t = mc.t;
    let mut buf = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut last = f64::INFINITY;
    for it in 0..iters {
        for i in 0..n {
            buf[i] = (probe[i] - t * y1[i]) / (1.0 - t);
        }
        let y0 = mc.k0.project(&buf);
        for i in 0..n {
            buf[i] = (probe[i] - (1.0 - t) * y0[i]) / t;
        }
        *y1 = mc.k1.project(&buf);
        for i in 0..n {
            r[i] = probe[i] - (1.0 - t) * y0[i] - t * y1[i];
        }
        let res = norm2(&r);
        if res <= accept {
            return Some(Membership::Inside);
        }
        if mc.separated(x, &r, tol) {
            return Some(Membership::Outside);
        }
        if it > 10 && (last - res).abs() <= 1e-15 * res {
            return None;
        }
        last = res;
    }
    None
}

/// Default tolerance and iteration cap for Monte Carlo membership calls.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
pub const MEMBERSHIP_MAX_ITER: usize = 500;

/// Region whose standard Gaussian measure is estimated.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Body(&'a SymmetricBody),
    Combination(&'a MinkowskiCombination),
}

impl Region<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Region::Body(b) => b.dim(),
            Region::Combination(c) => c.dim(),
        }
    }

    fn classify(&self, x: &[f64]) -> Membership {
        match self {
            Region::Body(b) => {
                if b.contains(x) {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
            Region::Combination(c) => {
                combo_membership(c, x, MEMBERSHIP_TOL, MEMBERSHIP_MAX_ITER).unwrap_or(Membership::BoundaryUncertain)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub uncertain_fraction: f64,
    pub samples: u64,
}

/// Uncertain fraction above which an estimate is flagged unreliable.
pub const UNRELIABLE_FRACTION: f64 = 1e-3;

impl MeasureEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            estimate: value,
            std_error: 0.0,
            uncertain_fraction: 0.0,
            samples: 0,
        }
    }

    pub fn reliable(&self) -> bool {
        self.uncertain_fraction <= UNRELIABLE_FRACTION
    }

    pub fn require_reliable(self) -> Result<Self> {
        if self.reliable() {
            Ok(self)
        } else {
            Err(Error::Unreliable(self.uncertain_fraction))
        }
    }
}

/// Monte Carlo estimate of `γ(region)`: the hit fraction of standard normal
/// draws with its binomial standard error. Boundary-uncertain points count
/// as misses and are reported separately.
pub fn gaussian_measure_mc(region: Region<'_>, samples: usize, seed: u64) -> Result<MeasureEstimate> {
    if samples == 0 {
        return Err(Error::OutOfRange {
            name: "samples",
            value: 0.0,
            expected: "> 0",
        });
    }
    let n = region.dim();
    let chunks = samples.div_ceil(rng::CHUNK);
    let counts = rng::map_chunks(chunks, |c| {
        let mut s = Stream::new(seed, c as u64);
        let len = rng::CHUNK.min(samples - c * rng::CHUNK);
        let mut x = vec![0.0; n];
        let (mut inside, mut uncertain) = (0u64, 0u64);
        for _ in 0..len {
            s.fill_normal(&mut x);
            match region.classify(&x) {
                Membership::Inside => inside += 1,
                Membership::BoundaryUncertain => uncertain += 1,
                Membership::Outside => {}
            }
        }
        (inside, uncertain)
    });
    let (inside, uncertain) = counts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let p = inside as f64 / m;
    Ok(MeasureEstimate {
        estimate: p,
        std_error: libm::sqrt(p * (1.0 - p) / m),
        uncertain_fraction: uncertain as f64 / m,
        samples: samples as u64,
    })
}

fn body_measure(k: &SymmetricBody, samples: usize, seed: u64) -> Result<MeasureEstimate> {
    match k.gaussian_measure_exact() {
        Some(v) => Ok(MeasureEstimate::exact(v)),
        None => gaussian_measure_mc(Region::Body(k), samples, seed),
    }
}

/// Both sides of `γ((1−t)K₀+tK₁)^{1/n} ≥ (1−t)γ(K₀)^{1/n} + tγ(K₁)^{1/n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeometricCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// `gap − 3·(propagated standard error)`.
    pub confidence_gap: f64,
    pub std_error: f64,
    pub uncertain_fraction: f64,
    pub exact: bool,
    /// `γ((1−t)K₀+tK₁)`, `γ(K₀)` and `γ(K₁)`.
    pub measures: [MeasureEstimate; 3],
}

fn root_with_se(m: MeasureEstimate, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let v = libm::pow(m.estimate, 1.0 / nf);
    let se = if m.estimate > 0.0 { v / (nf * m.estimate) * m.std_error } else { 0.0 };
    (v, se)
}

pub fn geometric_bm_check(k0: &SymmetricBody, k1: &SymmetricBody, t: f64, samples: usize, seed: u64) -> Result<GeometricCheck> {
    check_unit("t", t)?;
    let n = k0.dim();
    if k1.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: k1.dim() });
    }
    if k0 == k1 {
        let m = body_measure(k0, samples, rng::derive_seed(seed, 2))?;
        let (v, _) = root_with_se(m, n);
        return Ok(GeometricCheck {
            lhs: v,
            rhs: v,
            gap: 0.0,
            confidence_gap: 0.0,
            std_error: 0.0,
            uncertain_fraction: 0.0,
            exact: m.std_error == 0.0 && m.samples == 0,
            measures: [m; 3],
        });
    }
    let mc = MinkowskiCombination::new(k0.clone(), k1.clone(), t)?;
    let lhs_m = match mc.as_box() {
        Some(w) => MeasureEstimate::exact(w.iter().map(|a| interval_mass(*a)).product()),
        None => gaussian_measure_mc(Region::Combination(&mc), samples, rng::derive_seed(seed, 1))?.require_reliable()?,
    };
    let m0 = body_measure(k0, samples, rng::derive_seed(seed, 2))?;
    let m1 = body_measure(k1, samples, rng::derive_seed(seed, 3))?;
    let (lhs, se_l) = root_with_se(lhs_m, n);
    let (r0, se0) = root_with_se(m0, n);
    let (r1, se1) = root_with_se(m1, n);
    let rhs = (1.0 - t) * r0 + t * r1;
    let (a0, a1) = ((1.0 - t) * se0, t * se1);
    let se_r = libm::sqrt(a0 * a0 + a1 * a1);
    let se = libm::sqrt(se_l * se_l + se_r * se_r);
    let gap = lhs - rhs;
    Ok(GeometricCheck {
        lhs,
        rhs,
        gap,
        confidence_gap: gap - 3.0 * se,
        std_error: se,
        uncertain_fraction: lhs_m.uncertain_fraction,
        exact: se == 0.0,
        measures: [lhs_m, m0, m1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterexampleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// The dimensional inequality with `K₁ = {shift}`, a single point: closed
/// form for boxes and intervals. A negative gap shows that the symmetry
/// hypothesis cannot be dropped.
pub fn asymmetry_counterexample(k0: &SymmetricBody, shift: &[f64], t: f64) -> Result<CounterexampleCheck> {
    check_unit("t", t)?;
    let n = k0.dim();
    if shift.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: shift.len() });
    }
    let w = k0
        .as_box()
        .ok_or_else(|| Error::Unsupported("counterexample needs a box or 1D body".into()))?;
    let nf = n as f64;
    let combo: f64 = w
        .iter()
        .zip(shift)
        .map(|(a, s)| interval_mass_between(t * s - (1.0 - t) * a, t * s + (1.0 - t) * a))
        .product();
    let base: f64 = w.iter().map(|a| interval_mass(*a)).product();
    // γ({shift}) = 0 for n ≥ 1
    let point = if t == 0.0 { base } else { 0.0 };
    let lhs = if t == 1.0 { 0.0 } else { libm::pow(combo, 1.0 / nf) };
    let rhs = (1.0 - t) * libm::pow(base, 1.0 / nf) + if t == 0.0 { 0.0 } else { t * libm::pow(point, 1.0 / nf) };
    Ok(CounterexampleCheck { lhs, rhs, gap: lhs - rhs })
}

/// Samples used to screen `γ(K)` when no closed form exists.
pub const RESTRICTION_SCREEN_SAMPLES: usize = 100_000;

/// The normalized restriction `γ_K(E) = γ(E∩K)/γ(K)`.
pub fn restricted_measure(k: &SymmetricBody) -> Result<EvenStrongLogConcave> {
    let m = body_measure(k, RESTRICTION_SCREEN_SAMPLES, 0x5EED)?;
    if m.estimate < 1e-9 {
        return Err(Error::NegligibleMeasure(m.estimate));
    }
    Ok(EvenStrongLogConcave::TruncatedGaussian { body: k.clone() })
}

/// Probability laws supported in `K` for the variational principle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Candidate {
    /// `γ_K`.
    Restriction,
    /// `γ_{sK}`, `0 < s ≤ 1`.
    ScaledRestriction { scale: f64 },
    /// Uniform law on `K` (boxes only).
    Uniform,
    /// `w·a + (1−w)·b` (1D only).
    Mixture { weight: f64, a: Box<Candidate>, b: Box<Candidate> },
    PointMass { x: Vec<f64> },
}

impl Candidate {
    pub fn label(&self) -> String {
        match self {
            Candidate::Restriction => "restriction".into(),
            Candidate::ScaledRestriction { scale } => format!("scaled_restriction({scale})"),
            Candidate::Uniform => "uniform".into(),
            Candidate::Mixture { weight, a, b } => format!("mixture({weight}; {}, {})", a.label(), b.label()),
            Candidate::PointMass { x } => format!("point_mass({x:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateOutcome {
    pub label: String,
    /// `e^{-D(μ‖γ)}`; `None` when the candidate was rejected.
    pub exp_neg_entropy: Option<f64>,
    pub std_error: f64,
    /// `γ(K) − e^{-D(μ‖γ)}`.
    pub gap: Option<f64>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariationalReport {
    pub measure: f64,
    pub best_exponential: f64,
    pub attained_by_restriction: bool,
    pub candidates: Vec<CandidateOutcome>,
}

/// Tolerance for `e^{-D(γ_K‖γ)} = γ(K)` by quadrature.
pub const VARIATIONAL_TOL: f64 = 1e-6;

type Density1d = Box<dyn Fn(f64) -> f64>;

/// 1D density on `[-a, a]` with its breakpoints.
fn candidate_density_1d(c: &Candidate, a: f64) -> Result<(Density1d, Vec<f64>)> {
    match c {
        Candidate::Restriction | Candidate::ScaledRestriction { .. } => {
            let s = match c {
                Candidate::ScaledRestriction { scale } => *scale,
                _ => 1.0,
            };
            let r = s * a;
            let z = interval_mass(r);
            let ln_z = libm::log(z);
            Ok((
                Box::new(move |x: f64| if x.abs() <= r { libm::exp(normal_log_pdf(x) - ln_z) } else { 0.0 }),
                vec![-r, r],
            ))
        }
        Candidate::Uniform => Ok((Box::new(move |_| 0.5 / a), vec![])),
        Candidate::Mixture { weight, a: ca, b: cb } => {
            let (fa, mut ba) = candidate_density_1d(ca, a)?;
            let (fb, bb) = candidate_density_1d(cb, a)?;
            let w = *weight;
            ba.extend(bb);
            Ok((Box::new(move |x| w * fa(x) + (1.0 - w) * fb(x)), ba))
        }
        Candidate::PointMass { .. } => Err(Error::NotAbsolutelyContinuous("point mass".into())),
    }
}

fn validate_candidate(c: &Candidate, k: &SymmetricBody) -> core::result::Result<(), String> {
    match c {
        Candidate::Restriction | Candidate::Uniform => Ok(()),
        Candidate::ScaledRestriction { scale } => {
            if *scale > 0.0 && *scale <= 1.0 {
                Ok(())
            } else {
                Err(format!("scale {scale} outside (0, 1]: law not supported in K"))
            }
        }
        Candidate::Mixture { weight, a, b } => {
            if !(0.0..=1.0).contains(weight) {
                return Err(format!("mixture weight {weight} outside [0, 1]"));
            }
            validate_candidate(a, k)?;
            validate_candidate(b, k)
        }
        Candidate::PointMass { x } => {
            if x.len() != k.dim() || !k.contains(x) {
                Err("point mass not supported in K".into())
            } else {
                Ok(())
            }
        }
    }
}

/// Entropy of a product candidate on a box, by 1D quadrature per axis.
fn candidate_entropy_box(c: &Candidate, widths: &[f64]) -> Result<f64> {
    if let Candidate::Mixture { .. } = c {
        if widths.len() != 1 {
            return Err(Error::Unsupported("mixtures are 1D only".into()));
        }
    }
    let q = Adaptive::new(1e-13).with_atol(1e-300);
    let mut total = 0.0;
    for &a in widths {
        let (rho, mut breaks) = candidate_density_1d(c, a)?;
        breaks.push(-a);
        breaks.push(a);
        breaks.push(0.0);
        breaks.retain(|b| b.abs() <= a);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        for w in breaks.windows(2) {
            let (v, _) = q.integrate(w[0], w[1], |x| {
                let r = rho(x);
                if r > 0.0 {
                    r * (libm::log(r) - normal_log_pdf(x))
                } else {
                    0.0
                }
            })?;
            total += v;
        }
    }
    Ok(total)
}

/// Checks `γ(K) ≥ e^{-D(μ‖γ)}` for each candidate and equality at `γ_K`.
///
/// Boxes and intervals use quadrature; other bodies support the (scaled)
/// restriction candidates through `D(γ_{sK}‖γ) = −log γ(sK)` with a Monte
/// Carlo measure.
pub fn variational_principle_check(k: &SymmetricBody, candidates: &[Candidate], samples: usize, seed: u64) -> Result<VariationalReport> {
    let kmeasure = body_measure(k, samples, rng::derive_seed(seed, 10))?;
    let gk = kmeasure.estimate;
    let widths = k.as_box();
    let mut outcomes = Vec::new();
    let mut best = 0.0f64;
    let mut attained = false;
    for (i, c) in candidates.iter().enumerate() {
        let label = c.label();
        if let Err(msg) = validate_candidate(c, k) {
            outcomes.push(CandidateOutcome {
                label,
                exp_neg_entropy: None,
                std_error: 0.0,
                gap: None,
                diagnostic: Some(msg),
            });
            continue;
        }
        let value: Result<(f64, f64)> = match (c, &widths) {
            (Candidate::PointMass { .. }, _) => Ok((0.0, 0.0)),
            (_, Some(w)) => candidate_entropy_box(c, w).map(|d| (libm::exp(-d), 0.0)),
            (Candidate::Restriction, None) => Ok((gk, kmeasure.std_error)),
            (Candidate::ScaledRestriction { scale }, None) => {
                let scaled = scale_body(k, *scale)?;
                let m = gaussian_measure_mc(Region::Body(&scaled), samples, rng::derive_seed(seed, 11 + i as u64))?;
                Ok((m.estimate, m.std_error))
            }
            _ => Err(Error::Unsupported("candidate needs a box or interval body".into())),
        };
        match value {
            Ok((e, se)) => {
                best = best.max(e);
                let tol = VARIATIONAL_TOL + 3.0 * (se + kmeasure.std_error);
                if matches!(c, Candidate::Restriction) && (e - gk).abs() <= tol {
                    attained = true;
                }
                outcomes.push(CandidateOutcome {
                    label,
                    exp_neg_entropy: Some(e),
                    std_error: se,
                    gap: Some(gk - e),
                    diagnostic: None,
                });
            }
            Err(err) => outcomes.push(CandidateOutcome {
                label,
                exp_neg_entropy: None,
                std_error: 0.0,
                gap: None,
                diagnostic: Some(format!("{err}")),
            }),
        }
    }
    Ok(VariationalReport {
        measure: gk,
        best_exponential: best,
        attained_by_restriction: attained,
        candidates: outcomes,
    })
}

/// The body `s·K`.
pub fn scale_body(k: &SymmetricBody, s: f64) -> Result<SymmetricBody> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::OutOfRange {
            name: "scale",
            value: s,
            expected: "> 0",
        });
    }
    match k.kind() {
        BodyKind::Box { half_widths } => SymmetricBody::cuboid(half_widths.iter().map(|w| w * s).collect()),
        BodyKind::Ellipsoid { shape } => Ok(SymmetricBody::ellipsoid(SpdMatrix::new(shape.matrix() / (s * s))?)),
        BodyKind::PNormBall { dim, p, radius } => SymmetricBody::pnorm_ball(*dim, *p, radius * s),
        BodyKind::HPolytope { rows } => SymmetricBody::hpolytope(rows.iter().map(|(a, b)| (a.clone(), b * s)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> SymmetricBody {
        SymmetricBody::pnorm_ball(2, 2.0, 1.0).unwrap()
    }

    #[test]
    fn constructors_reject_malformed() {
        assert!(SymmetricBody::cuboid(vec![1.0, -1.0]).is_err());
        assert!(SymmetricBody::pnorm_ball(2, 0.5, 1.0).is_err());
        assert!(SymmetricBody::hpolytope(vec![(vec![1.0, 0.0], 1.0)]).is_err());
        assert!(SymmetricBody::hpolytope(vec![(vec![1.0, 0.0], 1.0), (vec![2.0, 0.0], 1.0)]).is_err());
    }

    #[test]
    fn supports_agree_with_known_values() {
        let b = SymmetricBody::cuboid(vec![1.0, 2.0]).unwrap();
        assert_eq!(b.support(&[1.0, -1.0]), 3.0);
        let e = SymmetricBody::ellipsoid(SpdMatrix::from_diagonal(&[0.25, 4.0]).unwrap());
        assert!((e.support(&[1.0, 0.0]) - 2.0).abs() < 1e-15);
        assert!((e.support(&[0.0, 1.0]) - 0.5).abs() < 1e-15);
        let l1 = SymmetricBody::pnorm_ball(3, 1.0, 2.0).unwrap();
        assert_eq!(l1.support(&[0.3, -0.5, 0.1]), 1.0);
        // the octahedron as a polytope: |x ± y ± z| ≤ 1
        let oct = SymmetricBody::hpolytope(vec![
            (vec![1.0, 1.0, 1.0], 1.0),
            (vec![1.0, 1.0, -1.0], 1.0),
            (vec![1.0, -1.0, 1.0], 1.0),
            (vec![-1.0, 1.0, 1.0], 1.0),
        ])
        .unwrap();
        let l1u = SymmetricBody::pnorm_ball(3, 1.0, 1.0).unwrap();
        for u in direction_net(3).iter().step_by(37) {
            assert!((oct.support(u) - l1u.support(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn support_points_attain_support() {
        let bodies = [
            SymmetricBody::cuboid(vec![1.0, 0.5]).unwrap(),
            SymmetricBody::ellipsoid(SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap()),
            SymmetricBody::pnorm_ball(2, 1.0, 1.0).unwrap(),
            SymmetricBody::pnorm_ball(2, 3.0, 1.0).unwrap(),
            SymmetricBody::pnorm_ball(2, f64::INFINITY, 0.8).unwrap(),
            SymmetricBody::hpolytope(vec![(vec![1.0, 0.2], 1.0), (vec![-0.3, 1.0], 0.7), (vec![1.0, 1.0], 1.2)]).unwrap(),
        ];
        for b in &bodies {
            for u in direction_net(2).iter().step_by(7) {
                let y = b.support_point(u);
                assert!((dot(&y, u) - b.support(u)).abs() < 1e-12, "{:?}", b.kind());
                assert!(b.contains(&[y[0] * (1.0 - 1e-9), y[1] * (1.0 - 1e-9)]), "{:?}", b.kind());
            }
            let r = b.inradius();
            assert!(direction_net(2).iter().all(|u| b.support(u) >= r - 1e-12));
        }
    }

    #[test]
    fn projections_land_on_nearest_point() {
        let bodies = [
            SymmetricBody::cuboid(vec![1.0, 0.5]).unwrap(),
            SymmetricBody::ellipsoid(SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap()),
            SymmetricBody::pnorm_ball(2, 1.0, 1.0).unwrap(),
            SymmetricBody::pnorm_ball(2, 3.0, 1.0).unwrap(),
            SymmetricBody::hpolytope(vec![(vec![1.0, 0.2], 1.0), (vec![-0.3, 1.0], 0.7), (vec![1.0, 1.0], 1.2)]).unwrap(),
        ];
        let mut s = Stream::new(4, 4);
        for b in &bodies {
            for _ in 0..50 {
                let x = [3.0 * s.normal(), 3.0 * s.normal()];
                let p = b.project(&x);
                let d = norm2(&[x[0] - p[0], x[1] - p[1]]);
                // projection is feasible (up to rounding)
                let shrunk = [p[0] * (1.0 - 1e-9), p[1] * (1.0 - 1e-9)];
                assert!(b.contains(&shrunk), "{:?}", b.kind());
                // brute force over boundary samples along rays
                for k in 0..720 {
                    let a = 2.0 * PI * k as f64 / 720.0;
                    let u = [libm::cos(a), libm::sin(a)];
                    let (mut lo, mut hi) = (0.0, 10.0);
                    for _ in 0..60 {
                        let m = 0.5 * (lo + hi);
                        if b.contains(&[m * u[0], m * u[1]]) {
                            lo = m
                        } else {
                            hi = m
                        }
                    }
                    let q = [lo * u[0], lo * u[1]];
                    assert!(norm2(&[x[0] - q[0], x[1] - q[1]]) >= d - 1e-7, "{:?}", b.kind());
                }
            }
        }
    }

    #[test]
    fn membership_examples() {
        let mc = MinkowskiCombination::new(
            SymmetricBody::cuboid(vec![1.0, 1.0]).unwrap(),
            SymmetricBody::cuboid(vec![2.0, 2.0]).unwrap(),
            0.5,
        )
        .unwrap();
        assert_eq!(combo_membership(&mc, &[1.4, 0.0], 1e-9, 200).unwrap(), Membership::Inside);
        assert_eq!(combo_membership(&mc, &[1.6, 0.0], 1e-9, 200).unwrap(), Membership::Outside);
        let dd = MinkowskiCombination::new(disk(), disk(), 0.5).unwrap();
        for k in 0..12 {
            let a = 0.37 + k as f64;
            let x = [libm::cos(a), libm::sin(a)];
            assert_eq!(combo_membership(&dd, &x, 1e-12, 200).unwrap(), Membership::BoundaryUncertain);
        }
        assert!(combo_membership(&mc, &[0.0, 0.0], 0.0, 10).is_err());
    }

    #[test]
    fn inside_points_respect_support_bounds() {
        let mc = MinkowskiCombination::new(
            SymmetricBody::ellipsoid(SpdMatrix::from_diagonal(&[0.25, 4.0]).unwrap()),
            SymmetricBody::pnorm_ball(2, 1.0, 1.5).unwrap(),
            0.3,
        )
        .unwrap();
        let net = direction_net(2);
        let mut s = Stream::new(9, 1);
        let mut uncertain = 0;
        for _ in 0..2000 {
            let x = [1.5 * s.normal(), 1.5 * s.normal()];
            match combo_membership(&mc, &x, 1e-9, 500).unwrap() {
                Membership::Inside => {
                    for u in &net {
                        assert!(dot(&x, u) <= mc.support(u) + 1e-9);
                    }
                }
                Membership::BoundaryUncertain => uncertain += 1,
                Membership::Outside => {}
            }
        }
        assert!(uncertain <= 2, "{uncertain}");
    }

    #[test]
    fn three_dimensional_verdicts_match_known_sums() {
        // equal ellipsoids and boxes sum to themselves
        let shape = SpdMatrix::from_diagonal(&[1.0, 0.5, 2.0]).unwrap();
        let cases = [
            (SymmetricBody::ellipsoid(shape.clone()), SymmetricBody::ellipsoid(shape)),
            (
                SymmetricBody::cuboid(vec![1.0, 0.5, 2.0]).unwrap(),
                SymmetricBody::cuboid(vec![0.2, 1.5, 1.0]).unwrap(),
            ),
        ];
        for (k0, k1) in cases {
            let mc = MinkowskiCombination::new(k0.clone(), k1.clone(), 0.4).unwrap();
            let exact = |x: &[f64]| match (k0.kind(), k1.kind()) {
                (BodyKind::Box { half_widths: a }, BodyKind::Box { half_widths: b }) => {
                    (0..3).all(|i| x[i].abs() <= 0.6 * a[i] + 0.4 * b[i])
                }
                _ => k0.contains(x),
            };
            let mut s = Stream::new(5, 5);
            let mut uncertain = 0;
            for _ in 0..5000 {
                let x = [s.normal(), s.normal(), s.normal()];
                match combo_membership(&mc, &x, 1e-9, 500).unwrap() {
                    Membership::Inside => assert!(exact(&x), "{x:?}"),
                    Membership::Outside => assert!(!exact(&x), "{x:?}"),
                    Membership::BoundaryUncertain => uncertain += 1,
                }
            }
            assert!(uncertain <= 1, "{uncertain}");
        }
    }

    #[test]
    fn box_identity_against_closed_form() {
        let a = [1.0, 0.4];
        let b = [0.3, 2.0];
        let t = 0.35;
        let mc = MinkowskiCombination::new(
            SymmetricBody::cuboid(a.to_vec()).unwrap(),
            SymmetricBody::cuboid(b.to_vec()).unwrap(),
            t,
        )
        .unwrap();
        let w: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - t) * x + t * y).collect();
        let mut s = Stream::new(3, 3);
        let tol = 1e-9;
        let mut disagreements = 0;
        for _ in 0..10_000 {
            let x = [2.0 * s.normal(), 2.0 * s.normal()];
            let slack = x.iter().zip(&w).map(|(v, wi)| v.abs() - wi).fold(f64::NEG_INFINITY, f64::max);
            let v = combo_membership(&mc, &x, tol, 500).unwrap();
            if slack.abs() > 1e-6 {
                let expect = if slack < 0.0 { Membership::Inside } else { Membership::Outside };
                if v != expect {
                    disagreements += 1;
                }
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn measure_examples() {
        let b1 = SymmetricBody::interval(1.0).unwrap();
        let m = gaussian_measure_mc(Region::Body(&b1), 200_000, 1).unwrap();
        assert!((m.estimate - 0.682_689_492_137_085_9).abs() <= 3.0 * m.std_error);
        let b2 = SymmetricBody::interval(2.0).unwrap();
        let m = gaussian_measure_mc(Region::Body(&b2), 200_000, 2).unwrap();
        assert!((m.estimate - 0.954_499_736_103_641_6).abs() <= 3.0 * m.std_error);
        let big = SymmetricBody::cuboid(vec![100.0, 100.0]).unwrap();
        let m = gaussian_measure_mc(Region::Body(&big), 10_000, 3).unwrap();
        assert_eq!(m.estimate, 1.0);
        assert_eq!(m.std_error, 0.0);
        assert!(gaussian_measure_mc(Region::Body(&big), 0, 3).is_err());
    }

    #[test]
    fn measure_is_deterministic() {
        let e = SymmetricBody::ellipsoid(SpdMatrix::from_diagonal(&[0.5, 2.0]).unwrap());
        let a = gaussian_measure_mc(Region::Body(&e), 100_000, 17).unwrap();
        let b = gaussian_measure_mc(Region::Body(&e), 100_000, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn combination_with_itself_matches_body() {
        let e = SymmetricBody::ellipsoid(SpdMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.6]]).unwrap());
        let mc = MinkowskiCombination::new(e.clone(), e.clone(), 0.4).unwrap();
        let a = gaussian_measure_mc(Region::Body(&e), 100_000, 5).unwrap();
        let b = gaussian_measure_mc(Region::Combination(&mc), 100_000, 5).unwrap();
        assert!((a.estimate - b.estimate).abs() <= 3.0 * libm::sqrt(a.std_error.powi(2) + b.std_error.powi(2)) + 1e-12);
    }

    #[test]
    fn geometric_check_closed_form() {
        let k0 = SymmetricBody::interval(1.0).unwrap();
        let k1 = SymmetricBody::interval(2.0).unwrap();
        let g = geometric_bm_check(&k0, &k1, 0.5, 1000, 1).unwrap();
        assert!(g.exact);
        // erf oracle (mpmath)
        assert!((g.lhs - 0.866_385_597_462_283_9).abs() < 1e-14);
        assert!((g.rhs - 0.818_594_614_120_363_7).abs() < 1e-14);
        assert!((g.gap - 0.047_790_983_341_920_13).abs() < 1e-14);
        let same = geometric_bm_check(&k0, &k0, 0.3, 1000, 1).unwrap();
        assert_eq!(same.gap, 0.0);
        let e = SymmetricBody::ellipsoid(SpdMatrix::from_diagonal(&[0.5, 2.0]).unwrap());
        let same = geometric_bm_check(&e, &e, 0.3, 1000, 1).unwrap();
        assert_eq!(same.gap, 0.0);
    }

    #[test]
    fn counterexample_values() {
        let k0 = SymmetricBody::interval(1.0).unwrap();
        let c = asymmetry_counterexample(&k0, &[6.0], 0.5).unwrap();
        assert!((c.lhs - 0.005_977_036_246_740_61).abs() < 1e-14);
        assert!((c.rhs - 0.341_344_746_068_543).abs() < 1e-14);
        assert!((c.gap + 0.335_367_709_821_802_34).abs() < 1e-14);
        let c = asymmetry_counterexample(&k0, &[0.0], 0.5).unwrap();
        assert!((c.lhs - 0.382_924_922_548_026_2).abs() < 1e-14);
        assert!(c.lhs >= c.rhs);
        let c = asymmetry_counterexample(&k0, &[6.0], 0.0).unwrap();
        assert!(c.gap.abs() < 1e-15);
        let e = SymmetricBody::ellipsoid(SpdMatrix::identity(2));
        assert!(asymmetry_counterexample(&e, &[1.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn restriction_rejects_negligible_bodies() {
        assert!(restricted_measure(&SymmetricBody::interval(1e-12).unwrap()).is_err());
        assert!(restricted_measure(&SymmetricBody::interval(1.0).unwrap()).is_ok());
    }

    #[test]
    fn variational_examples() {
        let k = SymmetricBody::interval(1.0).unwrap();
        let r = variational_principle_check(
            &k,
            &[
                Candidate::Restriction,
                Candidate::Uniform,
                Candidate::PointMass { x: vec![0.2] },
                Candidate::ScaledRestriction { scale: 0.5 },
                Candidate::ScaledRestriction { scale: 1.5 },
                Candidate::Mixture {
                    weight: 0.5,
                    a: Box::new(Candidate::Restriction),
                    b: Box::new(Candidate::Uniform),
                },
            ],
            1000,
            1,
        )
        .unwrap();
        assert!(r.attained_by_restriction);
        let c = &r.candidates;
        assert!((c[0].exp_neg_entropy.unwrap() - 0.682_689_492_137_085_9).abs() < 1e-9);
        // closed form: D(unif‖γ) = −ln 2 + ½ ln 2π + 1/6
        let d = -libm::log(2.0) + crate::special::HALF_LN_2PI + 1.0 / 6.0;
        assert!((c[1].exp_neg_entropy.unwrap() - libm::exp(-d)).abs() < 1e-10);
        assert!(c[1].gap.unwrap() > 1e-3);
        assert_eq!(c[2].exp_neg_entropy, Some(0.0));
        assert!((c[3].exp_neg_entropy.unwrap() - interval_mass(0.5)).abs() < 1e-9);
        assert!(c[4].diagnostic.is_some());
        assert!(c[5].gap.unwrap() > 0.0);
        assert!((r.best_exponential - r.measure).abs() < 1e-9);
    }
}
