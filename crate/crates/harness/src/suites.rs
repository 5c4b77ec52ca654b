//! Suite orchestration. Checks run sequentially in configuration order; a
//! structural error fails that check with a diagnostic and the suite moves on.

use std::collections::BTreeMap;
use std::rc::Rc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use gaussbm::entropy::{bochner_identity_check, entropy_curve, EntropyCurveReport, QuadraticField, WeightedContext};
use gaussbm::functional::{
    bbl_check, bbl_homogeneous_check, dv_duality_check, holder_chain, DvReference, SupConvolutionSpec,
};
use gaussbm::geometry::{asymmetry_counterexample, geometric_bm_check, variational_principle_check, Candidate, MeasureEstimate};
use gaussbm::quadrature::IntegrationSpec;
use gaussbm::rng::{derive_seed, GENERATOR_ID};
use gaussbm::transport::{lipschitz_certificate, no_crossing_check, Coupling, GridSpec};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::config::{DvReferenceConfig, ExperimentConfig, FieldConfig, Suite};
use crate::report::{digest, CheckRecord, Criterion, CurveRecord, MeasureRecord, Metadata, Outcome, SuiteReport};
use crate::HarnessError;

/// Slack for `sigma_gap ≤ plain_gap`, which holds exactly since `σ ≥ t`.
pub const ORDERING_TOL: f64 = 1e-12;

/// How an entropy curve was evaluated; picks the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

struct PairData {
    coupling: Coupling,
    curve: EntropyCurveReport,
    method: Method,
}

/// Executes the configured suites. Deterministic given the config; only
/// the timestamp and runtimes vary between runs.
pub fn run(config: &ExperimentConfig) -> Result<SuiteReport, HarnessError> {
    config.validate()?;
    let mut r = Runner {
        cfg: config,
        checks: Vec::new(),
        curves: Vec::new(),
        measures: Vec::new(),
        pairs: BTreeMap::new(),
    };
    for suite in config.suite.expand() {
        match suite {
            Suite::Entropic => r.entropic(),
            Suite::Sigma => r.sigma(),
            Suite::Dynamics => r.dynamics(),
            Suite::Geometric => r.geometric(),
            Suite::Counterexample => r.counterexample(),
            Suite::Bbl => r.bbl(),
            Suite::BblHomogeneous => r.bbl_homogeneous(),
            Suite::Dv => r.dv(),
            Suite::All => unreachable!("expanded"),
        }
    }
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    Ok(SuiteReport {
        metadata: Metadata {
            suite: config.suite,
            seed: config.seed,
            samples: config.samples,
            version: env!("CARGO_PKG_VERSION").into(),
            generator: GENERATOR_ID.into(),
            timestamp,
        },
        summary: SuiteReport::summarize(&r.checks),
        checks: r.checks,
        curves: r.curves,
        measures: r.measures,
    })
}

fn failure(msg: impl Into<String>) -> Outcome {
    Outcome {
        gap: None,
        ..Outcome::bare_gap(Criterion::GapNonnegative, f64::NAN, 0.0)
    }
    .with_diagnostic(msg)
}

fn measure_record(name: String, m: &MeasureEstimate, sigmas: f64) -> MeasureRecord {
    MeasureRecord {
        name,
        estimate: m.estimate,
        std_error: m.std_error,
        ci_low: m.estimate - sigmas * m.std_error,
        ci_high: m.estimate + sigmas * m.std_error,
        uncertain_fraction: m.uncertain_fraction,
        exact: m.samples == 0,
    }
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    checks: Vec<CheckRecord>,
    curves: Vec<CurveRecord>,
    measures: Vec<MeasureRecord>,
    pairs: BTreeMap<usize, Result<Rc<PairData>, String>>,
}

impl Runner<'_> {
    fn seed(&self, suite: Suite, index: usize) -> u64 {
        let base = 1000 * (Suite::CONCRETE.iter().position(|s| *s == suite).unwrap_or(0) as u64 + 1);
        derive_seed(self.cfg.seed, base + index as u64)
    }

    /// Times `f` and appends its record.
    fn check<I: Serialize>(&mut self, suite: Suite, name: String, inputs: &I, f: impl FnOnce(&mut Self) -> Result<Outcome, String>) {
        let digest = digest(&json!({
            "name": name,
            "inputs": inputs,
            "seed": self.cfg.seed,
            "samples": self.cfg.samples,
            "tolerances": self.cfg.tolerances,
        }));
        let start = Instant::now();
        let out = f(self).unwrap_or_else(failure);
        let runtime_ms = start.elapsed().as_millis() as u64;
        let mut rec = CheckRecord {
            name,
            suite,
            inputs_digest: digest,
            criterion: out.criterion,
            lhs: out.lhs,
            rhs: out.rhs,
            gap: out.gap,
            residual: out.residual,
            tolerance: out.tolerance,
            std_error: out.std_error,
            sigmas: out.sigmas,
            slack: out.slack,
            verdict: gaussbm::Verdict::Fail,
            runtime_ms,
            diagnostic: out.diagnostic,
        };
        rec.verdict = rec.grade();
        self.checks.push(rec);
    }

    /// Coupling and entropy curve of distribution pair `i`, computed once.
    fn pair(&mut self, i: usize) -> Result<Rc<PairData>, String> {
        if let Some(p) = self.pairs.get(&i) {
            return p.clone();
        }
        let p = self.build_pair(i).map(Rc::new);
        if let Ok(d) = &p {
            self.curves.push(CurveRecord {
                name: self.cfg.distributions.pairs[i].name.clone(),
                curve: d.curve.clone(),
            });
        }
        self.pairs.insert(i, p.clone());
        p
    }

    fn build_pair(&self, i: usize) -> Result<PairData, String> {
        let cfg = &self.cfg.distributions.pairs[i];
        let a = cfg.mu0.build().map_err(|e| e.to_string())?;
        let b = cfg.mu1.build().map_err(|e| e.to_string())?;
        let coupling = Coupling::from_targets(&a, &b).map_err(|e| e.to_string())?;
        let n = coupling.dim();
        let (spec, method) = if coupling.linear_pair().is_some() {
            (IntegrationSpec::Auto, Method::ClosedForm)
        } else if n <= 3 {
            (IntegrationSpec::Auto, Method::Quadrature)
        } else {
            let seed = derive_seed(self.cfg.seed, 100 + i as u64);
            (
                IntegrationSpec::MonteCarlo {
                    samples: self.cfg.samples,
                    seed,
                },
                Method::MonteCarlo,
            )
        };
        let curve = entropy_curve(&WeightedContext::gaussian(n), &coupling, &self.cfg.t_grid, spec).map_err(|e| e.to_string())?;
        Ok(PairData { coupling, curve, method })
    }

    fn entropy_tolerance(&self, method: Method) -> f64 {
        match method {
            Method::ClosedForm => self.cfg.tolerances.closed_form,
            Method::Quadrature => self.cfg.tolerances.quadrature,
            Method::MonteCarlo => 0.0,
        }
    }

    /// Standard error of a gap at grid index `k`: the interpolant's error plus
    /// the largest grid error standing in for the endpoint errors.
    fn gap_std_error(d: &PairData, k: usize) -> f64 {
        let c = &d.curve;
        let n = c.dim as f64;
        let worst = c.entropy_std_error.iter().copied().fold(0.0, f64::max);
        let lhs = (-c.entropy[k] / n).exp();
        (lhs * c.entropy_std_error[k] + worst) / n
    }

    fn curve_checks(&mut self, suite: Suite) {
        for (i, p) in self.cfg.distributions.pairs.iter().enumerate() {
            for (k, &t) in self.cfg.t_grid.iter().enumerate() {
                let name = format!("{suite}/{}/t={t}", p.name);
                self.check(suite, name, &json!({ "pair": p, "t": t }), |r| {
                    let d = r.pair(i)?;
                    let c = &d.curve;
                    let tol = r.entropy_tolerance(d.method);
                    let se = Self::gap_std_error(&d, k);
                    let sig = r.cfg.tolerances.mc_sigmas;
                    let lhs = (-c.entropy[k] / c.dim as f64).exp();
                    let gap = if suite == Suite::Sigma { c.sigma_gap[k] } else { c.plain_gap[k] };
                    Ok(Outcome::gap(Criterion::GapNonnegative, lhs, lhs - gap, tol).with_error(se, sig))
                });
                if suite == Suite::Sigma {
                    let name = format!("sigma/{}/ordering/t={t}", p.name);
                    self.check(suite, name, &json!({ "pair": p, "t": t }), |r| {
                        let c = &r.pair(i)?.curve;
                        Ok(Outcome::gap(Criterion::GapNonnegative, c.plain_gap[k], c.sigma_gap[k], ORDERING_TOL))
                    });
                }
            }
        }
    }

    fn entropic(&mut self) {
        self.curve_checks(Suite::Entropic);
    }

    fn sigma(&mut self) {
        self.curve_checks(Suite::Sigma);
    }

    fn dynamics(&mut self) {
        let s = Suite::Dynamics;
        let tol = self.cfg.tolerances.clone();
        let interior: Vec<usize> = (0..self.cfg.t_grid.len())
            .filter(|&k| self.cfg.t_grid[k] > 0.0 && self.cfg.t_grid[k] < 1.0)
            .collect();
        for (i, p) in self.cfg.distributions.pairs.iter().enumerate() {
            let inputs = json!({ "pair": p, "t_grid": self.cfg.t_grid });
            let mc = matches!(self.pair(i), Ok(d) if d.method == Method::MonteCarlo);
            if !interior.is_empty() && !mc {
                for (which, limit) in [("fd-first", tol.fd_first), ("fd-second", tol.fd_second)] {
                    self.check(s, format!("dynamics/{}/{which}", p.name), &inputs, |r| {
                        let d = r.pair(i)?;
                        let c = &d.curve;
                        let (a, f) = if which == "fd-first" {
                            (&c.first_derivative_analytic, &c.first_derivative_fd)
                        } else {
                            (&c.second_derivative_analytic, &c.second_derivative_fd)
                        };
                        let rel = interior
                            .iter()
                            .map(|&k| (a[k] - f[k]).abs() / a[k].abs().max(tol.fd_floor))
                            .fold(0.0, f64::max);
                        Ok(Outcome::residual(rel, limit))
                    });
                }
            }
            for (k, &t) in self.cfg.t_grid.iter().enumerate() {
                let name = format!("dynamics/{}/local-gap/t={t}", p.name);
                self.check(s, name, &json!({ "pair": p, "t": t }), |r| {
                    let d = r.pair(i)?;
                    let c = &d.curve;
                    let g = *c.local_gap.get(k).ok_or("no local gap for this reference")?;
                    let limit = match d.method {
                        Method::ClosedForm => tol.local_closed_form,
                        Method::Quadrature => tol.quadrature,
                        Method::MonteCarlo => 0.0,
                    };
                    Ok(Outcome::bare_gap(Criterion::GapNonnegative, g, limit).with_error(c.local_gap_std_error[k], tol.mc_sigmas))
                });
            }
            for (end, label) in [(0, "mu0"), (1, "mu1")] {
                self.check(s, format!("dynamics/{}/lipschitz-{label}", p.name), &inputs, |r| {
                    let d = r.pair(i)?;
                    let map = if end == 0 { &d.coupling.t0 } else { &d.coupling.t1 };
                    let cert = lipschitz_certificate(map, GridSpec::default());
                    let mut o = Outcome::residual(cert.max_slope - 1.0, tol.contraction);
                    o.lhs = Some(cert.max_slope);
                    o.rhs = Some(1.0);
                    Ok(o)
                });
            }
            let seed = self.seed(s, i);
            let pairs = self.cfg.distributions.crossing_pairs;
            let grid = self.cfg.t_grid.clone();
            let mut crossing = None;
            self.check(s, format!("dynamics/{}/no-crossing", p.name), &inputs, |r| {
                let d = r.pair(i)?;
                let nc = no_crossing_check(&d.coupling, pairs, &grid, seed).map_err(|e| e.to_string())?;
                crossing = Some(nc);
                Ok(Outcome::gap(Criterion::GapNonnegative, nc.min_monotonicity, nc.lambda * (1.0 - 1e-9), 0.0))
            });
            self.check(s, format!("dynamics/{}/lambda", p.name), &inputs, |_| {
                let nc = crossing.ok_or("no-crossing check did not run")?;
                Ok(Outcome::bare_gap(Criterion::GapPositive, nc.lambda, 0.0))
            });
        }
        for f in &self.cfg.distributions.fields {
            let n = f.b.len();
            for (k, x) in f.points.iter().enumerate() {
                let name = format!("dynamics/bochner/{}/x{k}", f.name);
                self.check(s, name, &json!({ "field": f, "x": x }), |_| {
                    let v = build_field(f)?;
                    let res = bochner_identity_check(&WeightedContext::gaussian(n), &v, x).map_err(|e| e.to_string())?;
                    Ok(Outcome::residual(res, tol.bochner))
                });
            }
        }
    }

    fn geometric(&mut self) {
        let s = Suite::Geometric;
        let tol = self.cfg.tolerances.clone();
        let samples = self.cfg.samples;
        for (i, p) in self.cfg.bodies.pairs.iter().enumerate() {
            let seed = self.seed(s, i);
            self.check(s, format!("geometric/{}", p.name), p, |r| {
                let k0 = p.k0.build().map_err(|e| e.to_string())?;
                let k1 = p.k1.build().map_err(|e| e.to_string())?;
                let g = geometric_bm_check(&k0, &k1, p.t, samples, seed).map_err(|e| e.to_string())?;
                for (m, label) in g.measures.iter().zip(["combination", "k0", "k1"]) {
                    r.measures.push(measure_record(format!("{}/{label}", p.name), m, tol.mc_sigmas));
                }
                let o = if g.exact {
                    Outcome::gap(Criterion::GapNonnegative, g.lhs, g.rhs, tol.geometric_exact)
                } else {
                    Outcome::gap(Criterion::GapConfirmed, g.lhs, g.rhs, 0.0).with_error(g.std_error, tol.mc_sigmas)
                };
                Ok(if g.uncertain_fraction > 0.0 {
                    o.with_diagnostic(format!("boundary-uncertain fraction {:e}", g.uncertain_fraction))
                } else {
                    o
                })
            });
        }
        for (i, v) in self.cfg.bodies.variational.iter().enumerate() {
            let seed = self.seed(s, 500 + i);
            let report = v
                .body
                .build()
                .and_then(|k| variational_principle_check(&k, &v.candidates, samples, seed))
                .map_err(|e| e.to_string());
            for (j, c) in v.candidates.iter().enumerate() {
                let name = format!("geometric/variational/{}/{}", v.name, c.label());
                self.check(s, name, &json!({ "body": v.body, "candidate": c }), |_| {
                    let rep = report.as_ref().map_err(Clone::clone)?;
                    let out = &rep.candidates[j];
                    let e = out.exp_neg_entropy.ok_or_else(|| out.diagnostic.clone().unwrap_or_default())?;
                    Ok(if matches!(c, Candidate::Restriction) {
                        let mut o = Outcome::residual((rep.measure - e).abs(), tol.variational).with_error(out.std_error, tol.mc_sigmas);
                        o.lhs = Some(rep.measure);
                        o.rhs = Some(e);
                        o
                    } else {
                        Outcome::gap(Criterion::GapPositive, rep.measure, e, tol.strict).with_error(out.std_error, tol.mc_sigmas)
                    })
                });
            }
        }
    }

    fn counterexample(&mut self) {
        let s = Suite::Counterexample;
        for c in &self.cfg.bodies.counterexamples {
            self.check(s, format!("counterexample/{}", c.name), c, |_| {
                let k = c.body.build().map_err(|e| e.to_string())?;
                let r = asymmetry_counterexample(&k, &c.shift, c.t).map_err(|e| e.to_string())?;
                Ok(Outcome::gap(Criterion::GapNegative, r.lhs, r.rhs, 0.0))
            });
        }
    }

    fn bbl(&mut self) {
        let s = Suite::Bbl;
        let search = self.cfg.functions.search;
        let holder_tol = self.cfg.tolerances.holder;
        for (i, b) in self.cfg.functions.bbl.iter().enumerate() {
            let integ = IntegrationSpec::MonteCarlo {
                samples: self.cfg.samples,
                seed: self.seed(s, i),
            };
            self.check(s, format!("bbl/{}", b.name), b, |_| {
                let f = b.f.build().map_err(|e| e.to_string())?;
                let g = b.g.build().map_err(|e| e.to_string())?;
                let spec = SupConvolutionSpec::new(f, g, b.p.to_ext(), b.t).map_err(|e| e.to_string())?;
                let c = bbl_check(&spec, integ, &search).map_err(|e| e.to_string())?;
                let slack = if c.lower_bound || !c.converged { c.slack } else { 0.0 };
                let o = Outcome::gap(Criterion::GapNonnegative, c.lhs, c.rhs, c.tolerance()).with_slack(slack);
                Ok(match (c.lower_bound, c.converged) {
                    (_, false) => o.with_diagnostic("search maximizer at the edge of the window: lower bound"),
                    (true, _) => o.with_diagnostic("grid search value: certified lower bound"),
                    _ => o,
                })
            });
            if let (Some(qa), Some(qb)) = (b.f.quadratic(), b.g.quadratic()) {
                self.check(s, format!("bbl/{}/holder-chain", b.name), b, |_| {
                    let h = holder_chain(&qa, &qb, b.p.to_ext(), b.t).map_err(|e| e.to_string())?;
                    let mut o = Outcome::residual(h.worst_violation(), holder_tol);
                    o.lhs = Some(h.functional_piece * h.entropic_piece);
                    o.rhs = Some(h.holder_bound);
                    Ok(o)
                });
            }
        }
    }

    fn bbl_homogeneous(&mut self) {
        let s = Suite::BblHomogeneous;
        let search = self.cfg.functions.search;
        for h in &self.cfg.functions.homogeneous {
            self.check(s, format!("bbl-homogeneous/{}", h.name), h, |_| {
                let (f, g) = (h.f.oracle(), h.g.oracle());
                let c = bbl_homogeneous_check(|x| f(x), |x| g(x), h.p.to_ext(), h.t, h.beta, &search).map_err(|e| e.to_string())?;
                let slack = if c.lower_bound || !c.converged { c.slack } else { 0.0 };
                Ok(Outcome::gap(Criterion::GapNonnegative, c.lhs, c.rhs, c.tolerance()).with_slack(slack))
            });
        }
    }

    fn dv(&mut self) {
        let s = Suite::Dv;
        for d in &self.cfg.functions.dv {
            let report = match &d.reference {
                DvReferenceConfig::Discrete { weights, phi } => dv_duality_check(
                    &DvReference::Discrete {
                        weights: weights.clone(),
                        phi: phi.clone(),
                    },
                    &d.family,
                ),
                DvReferenceConfig::Gaussian { phi } => {
                    let poly = |x: f64| phi.iter().rev().fold(0.0, |acc, c| acc * x + c);
                    dv_duality_check(&DvReference::Gaussian1D { phi: &poly }, &d.family)
                }
            }
            .map_err(|e| e.to_string());
            self.check(s, format!("dv/{}/equality", d.name), d, |_| {
                let rep = report.as_ref().map_err(Clone::clone)?;
                let mut o = Outcome::residual(rep.equality_residual, rep.tolerance);
                o.lhs = Some(rep.lhs);
                o.rhs = Some(rep.gibbs_value);
                Ok(o)
            });
            self.check(s, format!("dv/{}/bound", d.name), d, |_| {
                let rep = report.as_ref().map_err(Clone::clone)?;
                let rejected: Vec<String> = rep
                    .members
                    .iter()
                    .filter_map(|m| m.diagnostic.as_ref().map(|x| format!("{}: {x}", m.label)))
                    .collect();
                let o = Outcome::gap(Criterion::GapNonnegative, rep.lhs, rep.sup_over_family, rep.tolerance);
                Ok(if rejected.is_empty() { o } else { o.with_diagnostic(rejected.join("; ")) })
            });
        }
    }
}

fn build_field(f: &FieldConfig) -> Result<QuadraticField, String> {
    let n = f.b.len();
    let mat = |rows: &[Vec<f64>]| DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let q = if f.q.is_empty() {
        vec![DMatrix::zeros(n, n); n]
    } else {
        f.q.iter().map(|h| mat(h)).collect()
    };
    QuadraticField::new(f.b.clone(), mat(&f.m), q).map_err(|e| e.to_string())
}
