//! The extragradient driver with the explicit adaptive stepsize.
//!
//! Given `x_n` and `lambda_n`:
//!
//! ```text
//! y_n     = argmin_{y in C} f(x_n, y) + d^2(x_n, y) / (2 lambda_n)
//! x_{n+1} = argmin_{y in C} f(y_n, y) + d^2(x_n, y) / (2 lambda_n)
//! lambda_{n+1} = min(lambda_n, mu (d^2(x_n, y_n) + d^2(x_{n+1}, y_n)) / (2 [denom]_+))
//! denom = f(x_n, x_{n+1}) - f(x_n, y_n) - f(y_n, x_{n+1})
//! ```
//!
//! Both proximal steps are anchored at `x_n`. A nonpositive `denom` keeps the
//! stepsize unchanged, so the stepsize sequence never increases.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bifunction::Bifunction;
use crate::error::{Error, Result};
use crate::feasible::BoxSet;
use crate::manifold::{Manifold, Point};
use crate::prox::{ProxConfig, ProxProblem, FEASIBILITY_SLACK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda0: f64,
    pub mu: f64,
    pub stop_tol: f64,
    pub max_outer: usize,
    #[serde(default)]
    pub inner: ProxConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda0: 0.5,
            mu: 0.5,
            stop_tol: 1e-6,
            max_outer: 500,
            inner: ProxConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mu must lie in (0, 1), got {}",
                self.mu
            )));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stop_tol must be positive, got {}",
                self.stop_tol
            )));
        }
        if !(self.inner.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inner.tol must be positive, got {}",
                self.inner.tol
            )));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidArgument("max_outer must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_next: Vec<f64>,
    pub lambda: f64,
    pub lambda_next: f64,
    /// `d(x_n, y_n)`.
    pub eps: f64,
    pub denom: f64,
    /// Seconds since the start of the run, taken after this iteration.
    pub elapsed_s: f64,
    pub inner_iters_y: usize,
    pub inner_iters_x: usize,
    pub inner_converged_y: bool,
    pub inner_converged_x: bool,
}

impl IterationRecord {
    pub fn inner_converged(&self) -> bool {
        self.inner_converged_y && self.inner_converged_x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub lambda0: f64,
    pub mu: f64,
    pub stop_tol: f64,
    pub records: Vec<IterationRecord>,
}

pub const TRACE_COLUMNS: [&str; 7] = [
    "n",
    "eps",
    "lambda",
    "denom",
    "elapsed_s",
    "inner_iters_y",
    "inner_iters_x",
];

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `x_0, x_1, ...` including the iterate produced by the last record.
    pub fn iterates(&self) -> Vec<&[f64]> {
        let mut xs: Vec<&[f64]> = self.records.iter().map(|r| r.x.as_slice()).collect();
        if let Some(last) = self.records.last() {
            xs.push(&last.x_next);
        }
        xs
    }

    /// One row per iteration: the fixed columns, then `x_0 .. x_{d-1}` of `x_n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.records.first().map_or(0, |r| r.x.len());
        let mut header: Vec<String> = TRACE_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.extend((0..dim).map(|i| format!("x{i}")));
        writeln!(w, "{}", header.join(","))?;
        for r in &self.records {
            write!(
                w,
                "{},{},{},{},{:.6},{},{}",
                r.n, r.eps, r.lambda, r.denom, r.elapsed_s, r.inner_iters_y, r.inner_iters_x
            )?;
            for c in &r.x {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIterations,
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: Trace,
    pub final_x: Point,
    pub status: RunStatus,
    /// Reason for an aborted run.
    pub message: Option<String>,
}

impl RunOutcome {
    /// `y_n` of the last recorded iteration.
    pub fn final_y(&self) -> Option<&[f64]> {
        self.trace.records.last().map(|r| r.y.as_slice())
    }
}

pub struct Solver<'a> {
    f: &'a dyn Bifunction,
    manifold: &'a Manifold,
    set: &'a BoxSet,
    cfg: SolverConfig,
}

/// Result of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub x_next: Point,
    pub lambda_next: f64,
    pub record: IterationRecord,
}

impl<'a> Solver<'a> {
    pub fn new(f: &'a dyn Bifunction, manifold: &'a Manifold, set: &'a BoxSet, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        for dim in [f.dim(), set.dim()] {
            if dim != manifold.dim() {
                return Err(Error::DimensionMismatch {
                    expected: manifold.dim(),
                    got: dim,
                });
            }
        }
        Ok(Self { f, manifold, set, cfg })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn inner_cfg(&self, n: usize, which: u64) -> ProxConfig {
        ProxConfig {
            seed: crate::rng::derive_seed(self.cfg.inner.seed, 2 * n as u64 + which),
            ..self.cfg.inner
        }
    }

    fn eval(&self, n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        let v = self.f.evaluate(x, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Aborted {
                iteration: n,
                reason: format!("f({x:?}, {y:?}) = {v}"),
            })
        }
    }

    /// One iteration from `(x_n, lambda_n)`. `elapsed_s` is left at 0.
    pub fn step(&self, n: usize, x: &Point, lambda: f64) -> Result<Step> {
        let m = self.manifold;
        let predictor = ProxProblem::centered(self.f, m, self.set, x, lambda)?;
        let y_sol = predictor.solve(&self.inner_cfg(n, 0)).map_err(|e| abort(n, e))?;
        let y = y_sol.y;
        let corrector = ProxProblem::new(self.f, m, self.set, &y, x, lambda)?;
        let x_sol = corrector.solve(&self.inner_cfg(n, 1)).map_err(|e| abort(n, e))?;
        let x_next = x_sol.y;

        let (xc, yc, xn) = (x.coords(), y.coords(), x_next.coords());
        let denom = self.eval(n, xc, xn)? - self.eval(n, xc, yc)? - self.eval(n, yc, xn)?;
        let d_xy = m.chart_distance_unchecked(xc, yc);
        let d_xny = m.chart_distance_unchecked(xn, yc);
        let numer = self.cfg.mu * (d_xy * d_xy + d_xny * d_xny);
        // a / 0 = 0 / 0 = +inf: a nonpositive denominator keeps the stepsize. A zero
        // numerator with a positive denominator is rounding noise (the
        // Lipschitz-type bound forces denom <= 0 there) and is treated the same way.
        let lambda_next = if denom > 0.0 && numer > 0.0 {
            lambda.min(numer / (2.0 * denom))
        } else {
            lambda
        };

        let record = IterationRecord {
            n,
            x: xc.to_vec(),
            y: yc.to_vec(),
            x_next: xn.to_vec(),
            lambda,
            lambda_next,
            eps: d_xy,
            denom,
            elapsed_s: 0.0,
            inner_iters_y: y_sol.iterations,
            inner_iters_x: x_sol.iterations,
            inner_converged_y: y_sol.converged,
            inner_converged_x: x_sol.converged,
        };
        Ok(Step {
            x_next,
            lambda_next,
            record,
        })
    }

    pub fn run(&self, x0: &Point) -> Result<RunOutcome> {
        if !self.set.contains_with_slack(x0, FEASIBILITY_SLACK)? {
            return Err(Error::InvalidPoint(format!(
                "starting point {:?} is outside the feasible set",
                x0.coords()
            )));
        }
        let clock = Instant::now();
        let mut trace = Trace {
            lambda0: self.cfg.lambda0,
            mu: self.cfg.mu,
            stop_tol: self.cfg.stop_tol,
            records: Vec::new(),
        };
        let mut x = x0.clone();
        let mut lambda = self.cfg.lambda0;

        for n in 0..self.cfg.max_outer {
            let step = match self.step(n, &x, lambda) {
                Ok(step) => step,
                Err(e @ Error::Aborted { .. }) => {
                    return Ok(RunOutcome {
                        trace,
                        final_x: x,
                        status: RunStatus::Aborted,
                        message: Some(e.to_string()),
                    });
                }
                Err(e) => return Err(e),
            };
            let mut record = step.record;
            record.elapsed_s = clock.elapsed().as_secs_f64();
            let done = record.eps <= self.cfg.stop_tol;
            trace.records.push(record);
            if done {
                return Ok(RunOutcome {
                    trace,
                    final_x: x,
                    status: RunStatus::Converged,
                    message: None,
                });
            }
            x = step.x_next;
            lambda = step.lambda_next;
        }
        Ok(RunOutcome {
            trace,
            final_x: x,
            status: RunStatus::MaxIterations,
            message: None,
        })
    }
}

fn abort(n: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(reason) => Error::Aborted { iteration: n, reason },
        other => other,
    }
}

/// Minimum number of points for a rate fit.
pub const RATE_MIN_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Smallest `n0` with `d(x_{n+1}, ref) <= d(x_n, ref)` for every `n >= n0`;
    /// `None` when even the final step moves away from the reference.
    pub fejer_monotone_after: Option<usize>,
    /// `d^2(x_n, ref) ~ M r^n` over `n >= n0`.
    pub r: Option<f64>,
    pub m: Option<f64>,
    pub fit_points: usize,
    pub fit_rms: Option<f64>,
    pub lambda_nonincreasing: bool,
    pub lambda_limit: f64,
    /// `min{lambda0, mu / (2 gamma)}` when a Lipschitz-type estimate was supplied.
    pub lambda_lower_bound: Option<f64>,
    pub lambda_lower_bound_holds: Option<bool>,
    /// Smallest `1 - mu lambda_n / lambda_{n+1}` over `n >= n0`.
    pub kappa: Option<f64>,
    pub kappa_margin_ok: bool,
    /// Largest `lhs - rhs` of the per-iteration distance certificate.
    pub certificate_max_excess: f64,
}

/// Slack used for the per-iteration certificate.
pub const CERTIFICATE_SLACK: f64 = 1e-7;

/// Per-iteration excess of
/// `d^2(x_{n+1}, p) <= d^2(x_n, p) - (1 - mu lambda_n / lambda_{n+1}) (d^2(x_n, y_n) + d^2(x_{n+1}, y_n))`.
pub fn certificate_excess(trace: &Trace, manifold: &Manifold, reference: &Point) -> Vec<f64> {
    let p = reference.coords();
    let d2 = |a: &[f64], b: &[f64]| manifold.chart_distance_unchecked(a, b).powi(2);
    trace
        .records
        .iter()
        .map(|r| {
            let margin = 1.0 - trace.mu * r.lambda / r.lambda_next;
            let rhs = d2(&r.x, p) - margin * (d2(&r.x, &r.y) + d2(&r.x_next, &r.y));
            d2(&r.x_next, p) - rhs
        })
        .collect()
}

pub fn analyze_rate(
    trace: &Trace,
    manifold: &Manifold,
    reference: &Point,
    lipschitz_gamma: Option<f64>,
) -> Result<RateReport> {
    if trace.is_empty() {
        return Err(Error::InvalidArgument("cannot analyze an empty trace".into()));
    }
    if reference.dim() != manifold.dim() {
        return Err(Error::DimensionMismatch {
            expected: manifold.dim(),
            got: reference.dim(),
        });
    }
    let dist: Vec<f64> = trace
        .iterates()
        .iter()
        .map(|x| manifold.chart_distance_unchecked(x, reference.coords()))
        .collect();

    let fejer_ok = |n: usize| dist[n + 1] <= dist[n] * (1.0 + 1e-12) + 1e-15;
    let pairs = dist.len() - 1;
    let mut n0 = pairs;
    while n0 > 0 && fejer_ok(n0 - 1) {
        n0 -= 1;
    }
    let fejer_monotone_after = (n0 < pairs).then_some(n0);

    let start = fejer_monotone_after.unwrap_or(0);
    let pts: Vec<(f64, f64)> = dist
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, d)| **d > 0.0)
        .map(|(n, d)| (n as f64, (d * d).ln()))
        .collect();
    let (mut r, mut m, mut fit_rms) = (None, None, None);
    if fejer_monotone_after.is_some() && pts.len() >= RATE_MIN_POINTS {
        let (slope, intercept, rms) = least_squares(&pts);
        fit_rms = Some(rms);
        r = Some(slope.exp());
        m = Some(intercept.exp());
    }

    let lambdas: Vec<f64> = trace
        .records
        .iter()
        .map(|r| r.lambda)
        .chain(trace.records.last().map(|r| r.lambda_next))
        .collect();
    let lambda_nonincreasing = lambdas.windows(2).all(|w| w[1] <= w[0]);
    let lambda_lower_bound = lipschitz_gamma.map(|g| {
        if g > 0.0 {
            trace.lambda0.min(trace.mu / (2.0 * g))
        } else {
            trace.lambda0
        }
    });
    let lambda_lower_bound_holds = lambda_lower_bound.map(|b| lambdas.iter().all(|&l| l >= b - 1e-12));

    let kappa = trace
        .records
        .iter()
        .skip(start)
        .map(|r| 1.0 - trace.mu * r.lambda / r.lambda_next)
        .fold(None, |acc: Option<f64>, k| Some(acc.map_or(k, |a| a.min(k))));

    let certificate_max_excess = certificate_excess(trace, manifold, reference)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(RateReport {
        fejer_monotone_after,
        r,
        m,
        fit_points: pts.len(),
        fit_rms,
        lambda_nonincreasing,
        lambda_limit: *lambdas.last().expect("trace is nonempty"),
        lambda_lower_bound,
        lambda_lower_bound_holds,
        kappa,
        kappa_margin_ok: kappa.is_some_and(|k| k > 0.0),
        certificate_max_excess,
    })
}

/// Ordinary least squares `v ~ intercept + slope * t`; returns (slope, intercept, rms residual).
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_v = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut stv) = (0.0, 0.0);
    for &(t, v) in pts {
        stt += (t - mean_t) * (t - mean_t);
        stv += (t - mean_t) * (v - mean_v);
    }
    let slope = if stt > 0.0 { stv / stt } else { 0.0 };
    let intercept = mean_v - slope * mean_t;
    let rms = (pts
        .iter()
        .map(|&(t, v)| (v - intercept - slope * t).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunction::Builtin1d;

    fn toy() -> (Manifold, BoxSet) {
        let m = Manifold::euclidean(1).unwrap();
        let b = BoxSet::new(&m, vec![-5.0], vec![5.0]).unwrap();
        (m, b)
    }

    #[test]
    fn first_step_matches_hand_arithmetic() {
        let (m, b) = toy();
        let solver = Solver::new(&Builtin1d::Product, &m, &b, SolverConfig::default()).unwrap();
        let x0 = m.point(vec![1.0]).unwrap();
        let step = solver.step(0, &x0, 0.5).unwrap();
        let r = &step.record;
        assert!((r.y[0] - 0.5).abs() < 1e-10);
        assert!((step.x_next.coords()[0] - 0.75).abs() < 1e-10);
        assert!((r.denom - 0.125).abs() < 1e-9);
        assert!((r.eps - 0.5).abs() < 1e-10);
        assert_eq!(step.lambda_next, 0.5);
    }

    #[test]
    fn nonpositive_denominator_keeps_stepsize() {
        // f(x, y) = y - x gives denom = 0 identically.
        let m = Manifold::euclidean(1).unwrap();
        let b = BoxSet::new(&m, vec![0.0], vec![1.0]).unwrap();
        let solver = Solver::new(&Builtin1d::Difference, &m, &b, SolverConfig::default()).unwrap();
        let x0 = m.point(vec![0.8]).unwrap();
        let step = solver.step(0, &x0, 0.3).unwrap();
        assert!(step.record.denom <= 0.0);
        assert_eq!(step.lambda_next, 0.3);
    }

    #[test]
    fn equilibrium_start_stops_immediately() {
        let (m, b) = toy();
        let solver = Solver::new(&Builtin1d::Product, &m, &b, SolverConfig::default()).unwrap();
        let x0 = m.point(vec![0.0]).unwrap();
        let out = solver.run(&x0).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.final_x, x0);
    }

    #[test]
    fn geometric_decay() {
        let (m, b) = toy();
        let cfg = SolverConfig {
            stop_tol: 1e-8,
            ..SolverConfig::default()
        };
        let solver = Solver::new(&Builtin1d::Product, &m, &b, cfg).unwrap();
        let out = solver.run(&m.point(vec![1.0]).unwrap()).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        for r in &out.trace.records {
            assert!((r.x[0] - 0.75f64.powi(r.n as i32)).abs() < 1e-8);
            assert_eq!(r.lambda, 0.5);
        }
        assert!(out.trace.records.last().unwrap().eps <= 1e-8);
    }

    #[test]
    fn config_validation() {
        let bad = [
            SolverConfig {
                lambda0: 0.0,
                ..Default::default()
            },
            SolverConfig {
                mu: 1.0,
                ..Default::default()
            },
            SolverConfig {
                mu: 0.0,
                ..Default::default()
            },
            SolverConfig {
                stop_tol: -1.0,
                ..Default::default()
            },
            SolverConfig {
                max_outer: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn start_outside_set_rejected() {
        let (m, b) = toy();
        let solver = Solver::new(&Builtin1d::Product, &m, &b, SolverConfig::default()).unwrap();
        assert!(solver.run(&m.point(vec![7.0]).unwrap()).is_err());
    }

    struct Exploding;

    impl Bifunction for Exploding {
        fn dim(&self) -> usize {
            1
        }
        fn name(&self) -> &str {
            "exploding"
        }
        fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
            if y[0] < 0.5 {
                f64::NAN
            } else {
                x[0] * (y[0] - x[0])
            }
        }
        fn grad_second_ambient(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
            vec![x[0]]
        }
    }

    #[test]
    fn non_finite_values_abort() {
        let (m, b) = toy();
        let solver = Solver::new(&Exploding, &m, &b, SolverConfig::default()).unwrap();
        let out = solver.run(&m.point(vec![1.0]).unwrap()).unwrap();
        assert_eq!(out.status, RunStatus::Aborted);
        assert!(out.message.is_some());
    }

    fn synthetic_trace(distances: &[f64]) -> Trace {
        let records = distances
            .windows(2)
            .enumerate()
            .map(|(n, w)| IterationRecord {
                n,
                x: vec![w[0]],
                y: vec![w[0]],
                x_next: vec![w[1]],
                lambda: 0.5,
                lambda_next: 0.5,
                eps: 0.0,
                denom: 0.0,
                elapsed_s: 0.0,
                inner_iters_y: 0,
                inner_iters_x: 0,
                inner_converged_y: true,
                inner_converged_x: true,
            })
            .collect();
        Trace {
            lambda0: 0.5,
            mu: 0.5,
            stop_tol: 1e-8,
            records,
        }
    }

    #[test]
    fn rate_of_exact_geometric_sequence() {
        let m = Manifold::euclidean(1).unwrap();
        let xs: Vec<f64> = (0..30).map(|n| 0.75f64.powi(n)).collect();
        let rep = analyze_rate(&synthetic_trace(&xs), &m, &m.point(vec![0.0]).unwrap(), None).unwrap();
        assert_eq!(rep.fejer_monotone_after, Some(0));
        assert!((rep.r.unwrap() - 0.5625).abs() < 1e-12);
        assert!((rep.m.unwrap() - 1.0).abs() < 1e-10);
        assert!(rep.fit_rms.unwrap() < 1e-12);
    }

    #[test]
    fn constant_trace_has_no_rate() {
        let m = Manifold::euclidean(1).unwrap();
        let rep = analyze_rate(&synthetic_trace(&[2.0; 10]), &m, &m.point(vec![2.0]).unwrap(), None).unwrap();
        assert_eq!(rep.fejer_monotone_after, Some(0));
        assert_eq!(rep.r, None);
        assert_eq!(rep.fit_points, 0);
    }

    #[test]
    fn too_few_points_gives_no_rate() {
        let m = Manifold::euclidean(1).unwrap();
        let rep = analyze_rate(
            &synthetic_trace(&[1.0, 0.5, 0.25]),
            &m,
            &m.point(vec![0.0]).unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(rep.r, None);
        assert_eq!(rep.fit_points, 3);
    }

    #[test]
    fn late_fejer_index() {
        let m = Manifold::euclidean(1).unwrap();
        let xs = [1.0, 2.0, 3.0, 1.0, 0.5, 0.25, 0.125, 0.0625];
        let rep = analyze_rate(&synthetic_trace(&xs), &m, &m.point(vec![0.0]).unwrap(), None).unwrap();
        assert_eq!(rep.fejer_monotone_after, Some(2));
        let rising = [1.0, 0.5, 2.0];
        let rep = analyze_rate(&synthetic_trace(&rising), &m, &m.point(vec![0.0]).unwrap(), None).unwrap();
        assert_eq!(rep.fejer_monotone_after, None);
    }

    #[test]
    fn empty_trace_rejected() {
        let m = Manifold::euclidean(1).unwrap();
        let t = Trace {
            lambda0: 1.0,
            mu: 0.5,
            stop_tol: 1e-6,
            records: vec![],
        };
        assert!(analyze_rate(&t, &m, &m.point(vec![0.0]).unwrap(), None).is_err());
    }

    #[test]
    fn csv_layout() {
        let (m, b) = toy();
        let solver = Solver::new(&Builtin1d::Product, &m, &b, SolverConfig::default()).unwrap();
        let out = solver.run(&m.point(vec![1.0]).unwrap()).unwrap();
        let csv = out.trace.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,eps,lambda,denom,elapsed_s,inner_iters_y,inner_iters_x,x0"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 8);
        assert_eq!(first[0], "0");
        assert_eq!(first[7], "1");
        assert_eq!(csv.lines().count(), out.trace.len() + 1);
    }
}
