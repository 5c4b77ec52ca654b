//! Experiment configuration: one JSON document describing which suites to run
//! and over which distributions, bodies and functions.
//!
//! Every block is optional. A missing block falls back to the built-in
//! fixtures; an explicit empty list runs nothing for that block.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gaussbm::distributions::{ou_smooth, validate as validate_distribution, EvenPolynomial, EvenStrongLogConcave, OneD, Potential, DEFAULT_RADIUS};
use gaussbm::functional::{DvCandidate, LogConcaveFunction, SearchSpec};
use gaussbm::geometry::{Candidate, SymmetricBody};
use gaussbm::{ExtReal, SpdMatrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Entropic,
    Sigma,
    Dynamics,
    Geometric,
    Counterexample,
    Bbl,
    BblHomogeneous,
    Dv,
    All,
}

impl Suite {
    /// The concrete suites in execution order.
    pub const CONCRETE: [Suite; 8] = [
        Suite::Entropic,
        Suite::Sigma,
        Suite::Dynamics,
        Suite::Geometric,
        Suite::Counterexample,
        Suite::Bbl,
        Suite::BblHomogeneous,
        Suite::Dv,
    ];

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Self::CONCRETE.to_vec(),
            s => vec![s],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Entropic => "entropic",
            Suite::Sigma => "sigma",
            Suite::Dynamics => "dynamics",
            Suite::Geometric => "geometric",
            Suite::Counterexample => "counterexample",
            Suite::Bbl => "bbl",
            Suite::BblHomogeneous => "bbl-homogeneous",
            Suite::Dv => "dv",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An exponent that may be `+∞`, written as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Finite(f64),
    Named(NamedExponent),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NamedExponent {
    #[serde(rename = "inf")]
    Inf,
    #[serde(rename = "-inf")]
    NegInf,
}

impl Exponent {
    pub fn to_ext(self) -> ExtReal {
        match self {
            Exponent::Finite(p) => ExtReal::Finite(p),
            Exponent::Named(NamedExponent::Inf) => ExtReal::PosInf,
            Exponent::Named(NamedExponent::NegInf) => ExtReal::NegInf,
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Named(NamedExponent::Inf) => f64::INFINITY,
            Exponent::Named(NamedExponent::NegInf) => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistConfig {
    /// Centered Gaussian with covariance `cov ⪯ I`.
    Gaussian { cov: Vec<Vec<f64>> },
    /// `x²/2 + λx⁴`.
    Quartic { lambda: f64 },
    /// `U(x) = Σₖ cₖ x^{2k}`, `k ≥ 1`.
    Polynomial {
        coeffs: Vec<f64>,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// Standard Gaussian restricted to the box with these half-widths.
    TruncatedGaussian { half_widths: Vec<f64> },
    /// Product of one-dimensional factors.
    Product { factors: Vec<DistConfig> },
    /// Ornstein–Uhlenbeck evolute of `base`.
    Smoothed { base: Box<DistConfig>, epsilon: f64 },
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS
}

impl DistConfig {
    pub fn build(&self) -> Result<EvenStrongLogConcave, gaussbm::Error> {
        Ok(match self {
            DistConfig::Gaussian { cov } => EvenStrongLogConcave::gaussian(SpdMatrix::from_rows(cov)?),
            DistConfig::Quartic { lambda } => EvenStrongLogConcave::OneDPotential(OneD::quartic(*lambda)?),
            DistConfig::Polynomial { coeffs, radius } => {
                let p = Potential::Polynomial(EvenPolynomial::new(coeffs.clone())?);
                EvenStrongLogConcave::OneDPotential(OneD::new(p, *radius)?)
            }
            DistConfig::TruncatedGaussian { half_widths } if half_widths.len() == 1 => {
                EvenStrongLogConcave::OneDPotential(OneD::truncated_gaussian(half_widths[0])?)
            }
            DistConfig::TruncatedGaussian { half_widths } => EvenStrongLogConcave::TruncatedGaussian {
                body: SymmetricBody::cuboid(half_widths.clone())?,
            },
            DistConfig::Product { factors } => EvenStrongLogConcave::ProductOfOneD {
                factors: factors.iter().map(|f| f.build_one_d()).collect::<Result<_, _>>()?,
            },
            DistConfig::Smoothed { base, epsilon } => ou_smooth(&base.build()?, *epsilon)?,
        })
    }

    fn build_one_d(&self) -> Result<OneD, gaussbm::Error> {
        match self.build()? {
            EvenStrongLogConcave::OneDPotential(f) => Ok(f),
            EvenStrongLogConcave::GaussianZeroMean { cov } if cov.dim() == 1 => {
                let v = cov.matrix()[(0, 0)];
                let radius = DEFAULT_RADIUS.max(10.0 * v.sqrt());
                OneD::new(Potential::Polynomial(EvenPolynomial::gaussian(v)?), radius)
            }
            other => Err(gaussbm::Error::Malformed(format!(
                "product factors must be one-dimensional, got dimension {}",
                other.dim()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistPair {
    pub name: String,
    pub mu0: DistConfig,
    pub mu1: DistConfig,
}

/// `v(x) = b + Mx + ½(xᵀQᵢx)ᵢ` evaluated at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub name: String,
    pub b: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    #[serde(default)]
    pub q: Vec<Vec<Vec<f64>>>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionsConfig {
    pub pairs: Vec<DistPair>,
    pub fields: Vec<FieldConfig>,
    /// Sampled pairs for the no-crossing check.
    pub crossing_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyConfig {
    Interval { half_width: f64 },
    Box { half_widths: Vec<f64> },
    /// `xᵀAx ≤ 1`.
    Ellipsoid { shape: Vec<Vec<f64>> },
    PnormBall { dim: usize, p: Exponent, radius: f64 },
    /// `|⟨normal, x⟩| ≤ offset` per row.
    Hpolytope { rows: Vec<PolytopeRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeRow {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl BodyConfig {
    pub fn build(&self) -> Result<SymmetricBody, gaussbm::Error> {
        match self {
            BodyConfig::Interval { half_width } => SymmetricBody::interval(*half_width),
            BodyConfig::Box { half_widths } => SymmetricBody::cuboid(half_widths.clone()),
            BodyConfig::Ellipsoid { shape } => Ok(SymmetricBody::ellipsoid(SpdMatrix::from_rows(shape)?)),
            BodyConfig::PnormBall { dim, p, radius } => SymmetricBody::pnorm_ball(*dim, p.as_f64(), *radius),
            BodyConfig::Hpolytope { rows } => {
                SymmetricBody::hpolytope(rows.iter().map(|r| (r.normal.clone(), r.offset)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyPair {
    pub name: String,
    pub k0: BodyConfig,
    pub k1: BodyConfig,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub name: String,
    pub body: BodyConfig,
    pub shift: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationalConfig {
    pub name: String,
    pub body: BodyConfig,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodiesConfig {
    pub pairs: Vec<BodyPair>,
    pub counterexamples: Vec<CounterexampleConfig>,
    pub variational: Vec<VariationalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FuncConfig {
    /// `e^{-xᵀAx/2}`, `A ⪰ 0`.
    GaussianQuadratic { a: Vec<Vec<f64>> },
    Indicator { body: BodyConfig },
    /// Even, log-concave, non-increasing on `[0, ∞)`; log-linear between
    /// nodes and zero past the last node.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

impl FuncConfig {
    pub fn build(&self) -> Result<LogConcaveFunction, gaussbm::Error> {
        match self {
            FuncConfig::GaussianQuadratic { a } => {
                let n = a.len();
                let m = DMatrix::from_fn(n, n, |i, j| a[i].get(j).copied().unwrap_or(f64::NAN));
                if a.iter().any(|r| r.len() != n) {
                    return Err(gaussbm::Error::Malformed("quadratic form must be square".into()));
                }
                LogConcaveFunction::gaussian_quadratic(m)
            }
            FuncConfig::Indicator { body } => Ok(LogConcaveFunction::indicator(body.build()?)),
            FuncConfig::Tabulated { nodes, values } => LogConcaveFunction::tabulated(nodes.clone(), values.clone()),
        }
    }

    /// The quadratic form, when this is a Gaussian quadratic.
    pub fn quadratic(&self) -> Option<DMatrix<f64>> {
        match self {
            FuncConfig::GaussianQuadratic { a } => {
                let n = a.len();
                Some(DMatrix::from_fn(n, n, |i, j| a[i][j]))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BblConfig {
    pub name: String,
    pub f: FuncConfig,
    pub g: FuncConfig,
    pub p: Exponent,
    pub t: f64,
}

/// Radially non-increasing functions on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialConfig {
    /// `e^{-ax²/2}`.
    Gaussian { a: f64 },
    /// `1/(1 + e^{(|x|−radius)/width})`.
    SmoothCap { radius: f64, width: f64 },
    /// `e^{-c|x|^q}`.
    ExpPower { c: f64, q: f64 },
    /// `1` on `[-half_width, half_width]`.
    Interval { half_width: f64 },
}

impl RadialConfig {
    pub fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            RadialConfig::Gaussian { a } => a >= 0.0 && a.is_finite(),
            RadialConfig::SmoothCap { radius, width } => radius.is_finite() && width > 0.0 && width.is_finite(),
            RadialConfig::ExpPower { c, q } => c >= 0.0 && c.is_finite() && q > 0.0 && q.is_finite(),
            RadialConfig::Interval { half_width } => half_width > 0.0 && half_width.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("invalid radial function parameters: {self:?}"))
        }
    }

    pub fn oracle(&self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        match *self {
            RadialConfig::Gaussian { a } => Arc::new(move |x: f64| (-0.5 * a * x * x).exp()),
            RadialConfig::SmoothCap { radius, width } => Arc::new(move |x: f64| {
                let z = (x.abs() - radius) / width;
                // stable for both signs of z
                if z > 0.0 {
                    let e = (-z).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + z.exp())
                }
            }),
            RadialConfig::ExpPower { c, q } => Arc::new(move |x: f64| (-c * x.abs().powf(q)).exp()),
            RadialConfig::Interval { half_width } => Arc::new(move |x: f64| if x.abs() <= half_width { 1.0 } else { 0.0 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousConfig {
    pub name: String,
    pub f: RadialConfig,
    pub g: RadialConfig,
    pub p: Exponent,
    pub t: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DvReferenceConfig {
    Discrete { weights: Vec<f64>, phi: Vec<f64> },
    /// Standard Gaussian reference with `φ(x) = Σₖ phi[k]·xᵏ`.
    Gaussian { phi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvConfig {
    pub name: String,
    pub reference: DvReferenceConfig,
    pub family: Vec<DvCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionsConfig {
    pub bbl: Vec<BblConfig>,
    pub homogeneous: Vec<HomogeneousConfig>,
    pub dv: Vec<DvConfig>,
    pub search: SearchSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Closed-form entropic gaps.
    pub closed_form: f64,
    /// Deterministic quadrature.
    pub quadrature: f64,
    /// Standard errors allowed before a Monte Carlo gap counts as negative.
    pub mc_sigmas: f64,
    /// Closed-form local gap.
    pub local_closed_form: f64,
    pub fd_first: f64,
    pub fd_second: f64,
    /// Denominator floor of the relative derivative error.
    pub fd_floor: f64,
    pub bochner: f64,
    pub contraction: f64,
    pub geometric_exact: f64,
    pub variational: f64,
    /// Margin a strict inequality must clear.
    pub strict: f64,
    pub holder: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            closed_form: 1e-10,
            quadrature: 1e-6,
            mc_sigmas: 3.0,
            local_closed_form: 1e-8,
            fd_first: 1e-5,
            fd_second: 1e-4,
            fd_floor: 1e-3,
            bochner: 1e-8,
            contraction: 1e-8,
            geometric_exact: 1e-12,
            variational: 1e-6,
            strict: 1e-9,
            holder: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub seed: u64,
    /// Monte Carlo budget for Gaussian measures and entropies beyond three
    /// dimensions.
    pub samples: usize,
    pub t_grid: Vec<f64>,
    pub output_dir: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub distributions: DistributionsConfig,
    pub bodies: BodiesConfig,
    pub functions: FunctionsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            seed: 20_240_917,
            samples: 200_000,
            t_grid: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            output_dir: None,
            tolerances: Tolerances::default(),
            distributions: DistributionsConfig::default(),
            bodies: BodiesConfig::default(),
            functions: FunctionsConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.to_path_buf(), e))?;
        Self::from_json(&text)
    }

    /// Grid, budget and name checks, then every block through its module
    /// constructor.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.t_grid.is_empty() {
            return bad("t_grid is empty".into());
        }
        if self.t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return bad(format!("t_grid must lie in [0, 1]: {:?}", self.t_grid));
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("t_grid must be strictly increasing: {:?}", self.t_grid));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.distributions.crossing_pairs == 0 {
            return bad("distributions.crossing_pairs must be positive".into());
        }
        let s = &self.functions.search;
        if !(s.radius > 0.0 && s.points >= 3 && s.polish_tol > 0.0) {
            return bad(format!("invalid search spec {s:?}"));
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("closed_form", tol.closed_form),
            ("quadrature", tol.quadrature),
            ("mc_sigmas", tol.mc_sigmas),
            ("local_closed_form", tol.local_closed_form),
            ("fd_first", tol.fd_first),
            ("fd_second", tol.fd_second),
            ("fd_floor", tol.fd_floor),
            ("bochner", tol.bochner),
            ("contraction", tol.contraction),
            ("geometric_exact", tol.geometric_exact),
            ("variational", tol.variational),
            ("strict", tol.strict),
            ("holder", tol.holder),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("tolerance {name} must be finite and non-negative"));
            }
        }
        self.validate_names()?;
        let ctx = |what: &str, name: &str, e: gaussbm::Error| HarnessError::Config(format!("{what} `{name}`: {e}"));
        for p in &self.distributions.pairs {
            let a = p.mu0.build().map_err(|e| ctx("distribution pair", &p.name, e))?;
            let b = p.mu1.build().map_err(|e| ctx("distribution pair", &p.name, e))?;
            if a.dim() != b.dim() {
                return bad(format!("distribution pair `{}`: dimensions {} and {}", p.name, a.dim(), b.dim()));
            }
            for d in [&a, &b] {
                let v = validate_distribution(d).map_err(|e| ctx("distribution pair", &p.name, e))?;
                if !(v.even_ok && v.slc_ok) {
                    return bad(format!(
                        "distribution pair `{}`: not even and strongly log-concave (worst violation {:e})",
                        p.name, v.worst_violation
                    ));
                }
            }
        }
        for f in &self.distributions.fields {
            let n = f.b.len();
            if n == 0 || f.m.len() != n || f.m.iter().any(|r| r.len() != n) {
                return bad(format!("field `{}`: b and m must have matching dimension", f.name));
            }
            if !(f.q.is_empty() || (f.q.len() == n && f.q.iter().all(|h| h.len() == n && h.iter().all(|r| r.len() == n)))) {
                return bad(format!("field `{}`: q must hold {n} square matrices of size {n}", f.name));
            }
            if f.points.is_empty() || f.points.iter().any(|x| x.len() != n) {
                return bad(format!("field `{}`: points must be non-empty with dimension {n}", f.name));
            }
        }
        for p in &self.bodies.pairs {
            check_unit_t(&p.name, p.t)?;
            let a = p.k0.build().map_err(|e| ctx("body pair", &p.name, e))?;
            let b = p.k1.build().map_err(|e| ctx("body pair", &p.name, e))?;
            if a.dim() != b.dim() {
                return bad(format!("body pair `{}`: dimensions {} and {}", p.name, a.dim(), b.dim()));
            }
        }
        for c in &self.bodies.counterexamples {
            check_unit_t(&c.name, c.t)?;
            let k = c.body.build().map_err(|e| ctx("counterexample", &c.name, e))?;
            if k.dim() != c.shift.len() {
                return bad(format!("counterexample `{}`: shift has dimension {}", c.name, c.shift.len()));
            }
        }
        for v in &self.bodies.variational {
            v.body.build().map_err(|e| ctx("variational body", &v.name, e))?;
        }
        for b in &self.functions.bbl {
            check_unit_t(&b.name, b.t)?;
            let f = b.f.build().map_err(|e| ctx("bbl", &b.name, e))?;
            let g = b.g.build().map_err(|e| ctx("bbl", &b.name, e))?;
            gaussbm::functional::SupConvolutionSpec::new(f, g, b.p.to_ext(), b.t).map_err(|e| ctx("bbl", &b.name, e))?;
        }
        for h in &self.functions.homogeneous {
            check_unit_t(&h.name, h.t)?;
            h.f.validate().and(h.g.validate()).map_err(|m| HarnessError::Config(format!("homogeneous `{}`: {m}", h.name)))?;
            if !(h.beta > 1.0 && h.beta.is_finite()) {
                return bad(format!("homogeneous `{}`: beta must exceed 1", h.name));
            }
            if !h.p.to_ext().is_nonnegative() {
                return bad(format!("homogeneous `{}`: p must be non-negative", h.name));
            }
        }
        for d in &self.functions.dv {
            if let DvReferenceConfig::Discrete { weights, phi } = &d.reference {
                if weights.len() != phi.len() || weights.is_empty() {
                    return bad(format!("dv `{}`: weights and phi must be non-empty and equally long", d.name));
                }
            }
            if let DvReferenceConfig::Gaussian { phi } = &d.reference {
                // e^φ must be γ-integrable: degree ≤ 2 with x² coefficient < ½
                let deg_ok = phi.len() <= 3 && phi.get(2).is_none_or(|c| *c < 0.5);
                if phi.is_empty() || !deg_ok {
                    return bad(format!("dv `{}`: phi must be a polynomial of degree ≤ 2 with x² coefficient < 1/2", d.name));
                }
            }
        }
        Ok(())
    }

    fn validate_names(&self) -> Result<(), HarnessError> {
        let mut seen = std::collections::BTreeSet::new();
        let names = self
            .distributions
            .pairs
            .iter()
            .map(|p| ("distributions.pairs", &p.name))
            .chain(self.distributions.fields.iter().map(|p| ("distributions.fields", &p.name)))
            .chain(self.bodies.pairs.iter().map(|p| ("bodies.pairs", &p.name)))
            .chain(self.bodies.counterexamples.iter().map(|p| ("bodies.counterexamples", &p.name)))
            .chain(self.bodies.variational.iter().map(|p| ("bodies.variational", &p.name)))
            .chain(self.functions.bbl.iter().map(|p| ("functions.bbl", &p.name)))
            .chain(self.functions.homogeneous.iter().map(|p| ("functions.homogeneous", &p.name)))
            .chain(self.functions.dv.iter().map(|p| ("functions.dv", &p.name)));
        for (block, name) in names {
            if name.is_empty() || name.contains('/') {
                return Err(HarnessError::Config(format!("{block}: name `{name}` must be non-empty without '/'")));
            }
            if !seen.insert((block, name.clone())) {
                return Err(HarnessError::Config(format!("{block}: duplicate name `{name}`")));
            }
        }
        Ok(())
    }
}

fn check_unit_t(name: &str, t: f64) -> Result<(), HarnessError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("`{name}`: t = {t} outside [0, 1]")))
    }
}

fn gaussian(cov: &[&[f64]]) -> DistConfig {
    DistConfig::Gaussian {
        cov: cov.iter().map(|r| r.to_vec()).collect(),
    }
}

fn truncated(w: &[f64]) -> DistConfig {
    DistConfig::TruncatedGaussian { half_widths: w.to_vec() }
}

fn pair(name: &str, mu0: DistConfig, mu1: DistConfig) -> DistPair {
    DistPair {
        name: name.into(),
        mu0,
        mu1,
    }
}

impl Default for DistributionsConfig {
    fn default() -> Self {
        let q = |lambda| DistConfig::Quartic { lambda };
        let pairs = vec![
            pair("gaussian-1d", gaussian(&[&[0.25]]), gaussian(&[&[0.64]])),
            pair("gaussian-1d-equal", gaussian(&[&[0.36]]), gaussian(&[&[0.36]])),
            pair(
                "gaussian-3d",
                gaussian(&[&[0.5, 0.1, 0.0], &[0.1, 0.4, 0.05], &[0.0, 0.05, 0.9]]),
                gaussian(&[&[0.8, -0.2, 0.1], &[-0.2, 0.6, 0.0], &[0.1, 0.0, 0.3]]),
            ),
            pair(
                "gaussian-5d",
                gaussian(&[
                    &[0.9, 0.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.7, 0.1, 0.0, 0.0],
                    &[0.0, 0.1, 0.5, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 0.3, 0.05],
                    &[0.0, 0.0, 0.0, 0.05, 0.2],
                ]),
                gaussian(&[
                    &[0.2, 0.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.4, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.6, 0.1, 0.0],
                    &[0.0, 0.0, 0.1, 0.8, 0.0],
                    &[0.0, 0.0, 0.0, 0.0, 1.0],
                ]),
            ),
            pair("truncated-0.5-2", truncated(&[0.5]), truncated(&[2.0])),
            pair("truncated-1-1", truncated(&[1.0]), truncated(&[1.0])),
            pair("quartic-0.1-1", q(0.1), q(1.0)),
            pair("truncated-quartic", truncated(&[1.0]), q(1.0)),
            pair(
                "smoothed-quartic",
                DistConfig::Smoothed {
                    base: Box::new(q(1.0)),
                    epsilon: 0.2,
                },
                truncated(&[1.5]),
            ),
            pair("box-restrictions-2d", truncated(&[1.0, 0.5]), truncated(&[2.0, 1.5])),
            pair(
                "product-4d",
                DistConfig::Product {
                    factors: vec![truncated(&[1.0]), q(0.5), gaussian(&[&[0.5]]), truncated(&[2.0])],
                },
                DistConfig::Product {
                    factors: vec![q(1.0), truncated(&[0.8]), truncated(&[1.5]), gaussian(&[&[0.8]])],
                },
            ),
        ];
        let fields = vec![
            FieldConfig {
                name: "quadratic-1d".into(),
                b: vec![1.0],
                m: vec![vec![2.0]],
                q: vec![vec![vec![3.0]]],
                points: vec![vec![-1.0], vec![0.3], vec![2.0]],
            },
            FieldConfig {
                name: "linear-2d".into(),
                b: vec![0.0, 0.0],
                m: vec![vec![1.0, 2.0], vec![-0.5, 0.3]],
                q: vec![],
                points: vec![vec![0.5, -1.0], vec![2.0, 1.5]],
            },
            FieldConfig {
                name: "quadratic-3d".into(),
                b: vec![0.2, -0.1, 0.5],
                m: vec![vec![1.0, 0.5, 0.0], vec![0.0, -1.0, 0.3], vec![0.2, 0.0, 0.7]],
                q: vec![
                    vec![vec![1.0, 0.2, 0.0], vec![0.2, 0.0, 0.1], vec![0.0, 0.1, -0.5]],
                    vec![vec![0.0, 0.3, 0.0], vec![0.3, 2.0, 0.0], vec![0.0, 0.0, 1.0]],
                    vec![vec![-1.0, 0.0, 0.4], vec![0.0, 0.5, 0.0], vec![0.4, 0.0, 0.0]],
                ],
                points: vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 2.0]],
            },
        ];
        Self {
            pairs,
            fields,
            crossing_pairs: 2000,
        }
    }
}

fn diag(d: &[f64]) -> Vec<Vec<f64>> {
    (0..d.len())
        .map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect())
        .collect()
}

impl Default for BodiesConfig {
    fn default() -> Self {
        let interval = |a| BodyConfig::Interval { half_width: a };
        let bx = |w: &[f64]| BodyConfig::Box { half_widths: w.to_vec() };
        let ell = |d: &[f64]| BodyConfig::Ellipsoid { shape: diag(d) };
        let l1 = |dim, radius| BodyConfig::PnormBall {
            dim,
            p: Exponent::Finite(1.0),
            radius,
        };
        let bp = |name: &str, k0, k1, t| BodyPair {
            name: name.into(),
            k0,
            k1,
            t,
        };
        let hexagon = BodyConfig::Hpolytope {
            rows: vec![
                PolytopeRow {
                    normal: vec![1.0, 0.0],
                    offset: 1.0,
                },
                PolytopeRow {
                    normal: vec![0.5, 0.866_025_403_784_438_6],
                    offset: 1.0,
                },
                PolytopeRow {
                    normal: vec![-0.5, 0.866_025_403_784_438_6],
                    offset: 1.0,
                },
            ],
        };
        let pairs = vec![
            bp("interval-1-2", interval(1.0), interval(2.0), 0.5),
            bp("box-2d", bx(&[1.0, 0.5]), bx(&[0.5, 2.0]), 0.3),
            bp("ellipsoid-box-2d", ell(&[1.0, 4.0]), bx(&[1.0, 0.7]), 0.5),
            bp("ellipsoid-l1-2d", ell(&[0.5, 2.0]), l1(2, 1.5), 0.4),
            bp("hexagon-box-2d", hexagon, bx(&[0.6, 1.2]), 0.5),
            bp("box-ellipsoid-3d", bx(&[1.0, 0.5, 2.0]), ell(&[1.0, 0.5, 2.0]), 0.5),
            bp("l1-box-3d", l1(3, 2.0), bx(&[0.8, 0.8, 0.8]), 0.6),
        ];
        let counterexamples = vec![CounterexampleConfig {
            name: "shift-6".into(),
            body: interval(1.0),
            shift: vec![6.0],
            t: 0.5,
        }];
        let candidates = || {
            vec![
                Candidate::Restriction,
                Candidate::ScaledRestriction { scale: 0.5 },
                Candidate::Uniform,
                Candidate::Mixture {
                    weight: 0.5,
                    a: Box::new(Candidate::Restriction),
                    b: Box::new(Candidate::Uniform),
                },
                Candidate::PointMass { x: vec![0.0] },
            ]
        };
        let variational = vec![
            VariationalConfig {
                name: "interval-1".into(),
                body: interval(1.0),
                candidates: candidates(),
            },
            VariationalConfig {
                name: "interval-2.5".into(),
                body: interval(2.5),
                candidates: candidates(),
            },
        ];
        Self {
            pairs,
            counterexamples,
            variational,
        }
    }
}

impl Default for FunctionsConfig {
    fn default() -> Self {
        let gq = |a: &[&[f64]]| FuncConfig::GaussianQuadratic {
            a: a.iter().map(|r| r.to_vec()).collect(),
        };
        let ind = |body| FuncConfig::Indicator { body };
        let bbl = |name: &str, f, g, p, t| BblConfig {
            name: name.into(),
            f,
            g,
            p,
            t,
        };
        let inf = Exponent::Named(NamedExponent::Inf);
        let fin = Exponent::Finite;
        let tab = FuncConfig::Tabulated {
            nodes: vec![0.0, 0.5, 1.0, 2.0, 3.0],
            values: vec![1.0, 0.9, 0.7, 0.3, 0.05],
        };
        let bbl_list = vec![
            bbl("gaussian-1-3-p0", gq(&[&[1.0]]), gq(&[&[3.0]]), fin(0.0), 0.5),
            bbl(
                "gaussian-2d-p0",
                gq(&[&[1.0, 0.3], &[0.3, 0.5]]),
                gq(&[&[2.0, 0.0], &[0.0, 0.2]]),
                fin(0.0),
                0.3,
            ),
            bbl("same-gaussian-p0", gq(&[&[2.0]]), gq(&[&[2.0]]), fin(0.0), 0.4),
            bbl("gaussian-p1", gq(&[&[1.0]]), gq(&[&[0.2]]), fin(1.0), 0.5),
            bbl(
                "indicators-1-2-pinf",
                ind(BodyConfig::Interval { half_width: 1.0 }),
                ind(BodyConfig::Interval { half_width: 2.0 }),
                inf,
                0.5,
            ),
            bbl(
                "indicators-ellipsoid-box-pinf",
                ind(BodyConfig::Ellipsoid { shape: diag(&[1.0, 4.0]) }),
                ind(BodyConfig::Box {
                    half_widths: vec![1.0, 0.7],
                }),
                inf,
                0.5,
            ),
            bbl("tabulated-gaussian-p0.5", tab.clone(), gq(&[&[0.5]]), fin(0.5), 0.4),
            bbl("tabulated-indicator-p0", tab, ind(BodyConfig::Interval { half_width: 1.5 }), fin(0.0), 0.5),
        ];
        let hom = |name: &str, f, g, p, t, beta| HomogeneousConfig {
            name: name.into(),
            f,
            g,
            p,
            t,
            beta,
        };
        let cap = |radius, width| RadialConfig::SmoothCap { radius, width };
        let homogeneous = vec![
            hom("beta-1.5", cap(1.0, 0.3), RadialConfig::Gaussian { a: 2.0 }, fin(0.5), 0.3, 1.5),
            hom("beta-2", cap(0.5, 0.2), RadialConfig::ExpPower { c: 1.0, q: 1.5 }, fin(0.0), 0.5, 2.0),
            hom("beta-4", RadialConfig::Gaussian { a: 1.0 }, cap(1.5, 0.4), fin(1.0), 0.6, 4.0),
        ];
        let dv = vec![
            DvConfig {
                name: "two-point".into(),
                reference: DvReferenceConfig::Discrete {
                    weights: vec![0.5, 0.5],
                    phi: vec![0.0, 3f64.ln()],
                },
                family: vec![
                    DvCandidate::Gibbs,
                    DvCandidate::Reference,
                    DvCandidate::Discrete { weights: vec![0.3, 0.7] },
                    DvCandidate::Discrete { weights: vec![0.0, 1.0] },
                ],
            },
            DvConfig {
                name: "gaussian-quadratic".into(),
                reference: DvReferenceConfig::Gaussian {
                    phi: vec![0.0, 0.5, -0.25],
                },
                family: vec![
                    DvCandidate::Gibbs,
                    DvCandidate::Reference,
                    DvCandidate::Gaussian { mean: 0.0, variance: 1.0 },
                    DvCandidate::Gaussian { mean: 0.3, variance: 0.7 },
                ],
            },
        ];
        Self {
            bbl: bbl_list,
            homogeneous,
            dv,
            search: SearchSpec::default(),
        }
    }
}
