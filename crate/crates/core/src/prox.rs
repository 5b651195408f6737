//! Proximal subproblem `argmin_{y in C} f(p, y) + d^2(a, y) / (2 lambda)`.
//!
//! Solved in chart coordinates, where `d(a, y)` is the Euclidean distance of
//! the charts, by minimizing the equivalent scaled objective
//!
//! ```text
//! g(u) = lambda * f(p, from_chart(u)) + 0.5 * |u - to_chart(a)|^2
//! ```
//!
//! with projected gradient descent, Barzilai-Borwein trial steps and Armijo
//! backtracking along the projection arc. Once value differences drop below
//! rounding, a trial is accepted on its directional derivative instead
//! (approximate Armijo, Hager-Zhang style).

use serde::{Deserialize, Serialize};

use crate::bifunction::Bifunction;
use crate::error::{Error, Result};
use crate::feasible::BoxSet;
use crate::manifold::{Manifold, Point};

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const STEP_MIN: f64 = 1e-8;
const STEP_MAX: f64 = 1e8;
const MAX_BACKTRACKS: usize = 80;
/// Relative value change treated as rounding noise.
const VALUE_NOISE: f64 = 1e-12;
/// `delta` of the approximate condition `phi'(a) <= (2 delta - 1) phi'(0)`.
const APPROX_DELTA: f64 = 0.1;
/// Feasibility slack for anchors and returned points.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProxConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Random feasible starts in addition to the anchor. `None` picks 0 on
    /// Euclidean manifolds and 4 when an orthant component is present.
    pub multi_starts: Option<usize>,
    pub seed: u64,
}

impl Default for ProxConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 500,
            multi_starts: None,
            seed: 0,
        }
    }
}

impl ProxConfig {
    pub fn starts_for(&self, manifold: &Manifold) -> usize {
        self.multi_starts.unwrap_or(if manifold.is_euclidean() { 0 } else { 4 })
    }
}

/// One proximal subproblem. `at` fills the first slot of the bifunction,
/// `anchor` is the centre of the distance penalty.
#[derive(Clone, Copy)]
pub struct ProxProblem<'a> {
    f: &'a dyn Bifunction,
    manifold: &'a Manifold,
    set: &'a BoxSet,
    at: &'a Point,
    anchor: &'a Point,
    lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxSolution {
    pub y: Point,
    /// `f(at, y) + d^2(anchor, y) / (2 lambda)`.
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub starts_used: usize,
    /// Index of the winning start; 0 is the anchor.
    pub best_start: usize,
    /// Scaled objective after every accepted step of the winning start.
    pub history: Vec<f64>,
}

impl<'a> ProxProblem<'a> {
    pub fn new(
        f: &'a dyn Bifunction,
        manifold: &'a Manifold,
        set: &'a BoxSet,
        at: &'a Point,
        anchor: &'a Point,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "stepsize must be positive, got {lambda}"
            )));
        }
        for dim in [f.dim(), set.dim(), at.dim(), anchor.dim()] {
            if dim != manifold.dim() {
                return Err(Error::DimensionMismatch {
                    expected: manifold.dim(),
                    got: dim,
                });
            }
        }
        if !set.contains_with_slack(anchor, FEASIBILITY_SLACK)? {
            return Err(Error::InvalidPoint(format!(
                "anchor {:?} is outside the feasible set",
                anchor.coords()
            )));
        }
        Ok(Self {
            f,
            manifold,
            set,
            at,
            anchor,
            lambda,
        })
    }

    /// A prox problem whose bifunction section and anchor are the same point.
    pub fn centered(
        f: &'a dyn Bifunction,
        manifold: &'a Manifold,
        set: &'a BoxSet,
        anchor: &'a Point,
        lambda: f64,
    ) -> Result<Self> {
        Self::new(f, manifold, set, anchor, anchor, lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn manifold(&self) -> &Manifold {
        self.manifold
    }

    pub fn set(&self) -> &BoxSet {
        self.set
    }

    pub fn anchor(&self) -> &Point {
        self.anchor
    }

    pub fn at(&self) -> &Point {
        self.at
    }

    pub fn bifunction(&self) -> &dyn Bifunction {
        self.f
    }

    /// Unscaled objective `f(at, y) + d^2(anchor, y) / (2 lambda)`.
    pub fn objective(&self, y: &Point) -> f64 {
        let d = self.manifold.chart_distance_unchecked(self.anchor.coords(), y.coords());
        self.f.evaluate(self.at.coords(), y.coords()) + d * d / (2.0 * self.lambda)
    }

    pub fn residual(&self, y: &Point) -> Result<f64> {
        let u = self.manifold.to_chart(y)?;
        let scaled = Scaled::new(self);
        Ok(scaled.residual(&u, &scaled.gradient(&u)))
    }

    pub fn solve(&self, cfg: &ProxConfig) -> Result<ProxSolution> {
        if !(cfg.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inner tolerance must be positive, got {}",
                cfg.tol
            )));
        }
        let scaled = Scaled::new(self);
        let extra = cfg.starts_for(self.manifold);
        let mut rng = crate::rng::stream(cfg.seed, 0x70_72_6f_78);

        let mut starts = Vec::with_capacity(extra + 1);
        starts.push(self.set.project_chart(&scaled.center));
        for _ in 0..extra {
            starts.push(self.set.sample_chart(&mut rng));
        }

        let mut best: Option<(usize, Descent)> = None;
        for (index, start) in starts.into_iter().enumerate() {
            let run = scaled.descend(start, cfg)?;
            let better = match &best {
                None => true,
                Some((_, incumbent)) => run.value < incumbent.value,
            };
            if better {
                best = Some((index, run));
            }
        }
        let (best_start, run) = best.expect("at least the anchor start runs");
        let y = Point::from_validated(self.clamped_ambient(&run.u));
        Ok(ProxSolution {
            objective: run.value / self.lambda,
            residual: run.residual,
            iterations: run.iterations,
            converged: run.converged,
            starts_used: extra + 1,
            best_start,
            history: run.history,
            y,
        })
    }

    // exp(ln b) may differ from b by an ulp; keep returned points inside the box.
    fn clamped_ambient(&self, u: &[f64]) -> Vec<f64> {
        self.manifold
            .from_chart_unchecked(u)
            .into_iter()
            .zip(self.set.lower().iter().zip(self.set.upper()))
            .map(|(c, (&lo, &hi))| c.clamp(lo, hi))
            .collect()
    }
}

struct Descent {
    u: Vec<f64>,
    value: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// The scaled objective `g` in chart coordinates.
struct Scaled<'p, 'a> {
    problem: &'p ProxProblem<'a>,
    center: Vec<f64>,
}

impl<'p, 'a> Scaled<'p, 'a> {
    fn new(problem: &'p ProxProblem<'a>) -> Self {
        let center = problem.manifold.to_chart_unchecked(problem.anchor.coords());
        Self { problem, center }
    }

    fn value(&self, u: &[f64]) -> f64 {
        let p = self.problem;
        let y = p.manifold.from_chart_unchecked(u);
        let quad: f64 = u.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        p.lambda * p.f.evaluate(p.at.coords(), &y) + 0.5 * quad
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let p = self.problem;
        let y = p.manifold.from_chart_unchecked(u);
        let mut g = p.f.grad_second_ambient(p.at.coords(), &y);
        p.manifold.pull_back_gradient(&y, &mut g);
        g.iter_mut()
            .zip(u.iter().zip(&self.center))
            .for_each(|(gi, (ui, ci))| *gi = p.lambda * *gi + (ui - ci));
        g
    }

    fn residual(&self, u: &[f64], grad: &[f64]) -> f64 {
        let mut trial: Vec<f64> = u.iter().zip(grad).map(|(a, g)| a - g).collect();
        self.problem.set.project_chart_in_place(&mut trial);
        u.iter().zip(&trial).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    fn descend(&self, mut u: Vec<f64>, cfg: &ProxConfig) -> Result<Descent> {
        let mut value = self.value(&u);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("prox objective at start {u:?}")));
        }
        let mut grad = self.gradient(&u);
        let mut residual = self.residual(&u, &grad);
        let mut history = vec![value];
        let mut step = 1.0;
        let mut iterations = 0;

        while residual > cfg.tol && iterations < cfg.max_iters {
            iterations += 1;
            let mut alpha = step;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let mut trial: Vec<f64> = u.iter().zip(&grad).map(|(a, g)| a - alpha * g).collect();
                self.problem.set.project_chart_in_place(&mut trial);
                let slope: f64 = grad
                    .iter()
                    .zip(trial.iter().zip(&u))
                    .map(|(g, (t, a))| g * (t - a))
                    .sum();
                let trial_value = self.value(&trial);
                if !trial_value.is_finite() {
                    return Err(Error::NonFinite(format!("prox objective at {trial:?}")));
                }
                if trial_value <= value + ARMIJO * slope {
                    accepted = Some((trial, trial_value));
                    break;
                }
                if slope < 0.0 && trial_value <= value + VALUE_NOISE * value.abs() {
                    let g = self.gradient(&trial);
                    let end_slope: f64 = g.iter().zip(trial.iter().zip(&u)).map(|(g, (t, a))| g * (t - a)).sum();
                    if end_slope <= (2.0 * APPROX_DELTA - 1.0) * slope {
                        accepted = Some((trial, trial_value));
                        break;
                    }
                }
                alpha *= SHRINK;
            }
            let Some((next, next_value)) = accepted else {
                // No representable decrease left along the arc.
                break;
            };
            let next_grad = self.gradient(&next);
            let (mut ss, mut sy) = (0.0, 0.0);
            for i in 0..u.len() {
                let s = next[i] - u[i];
                ss += s * s;
                sy += s * (next_grad[i] - grad[i]);
            }
            step = if sy > 0.0 {
                (ss / sy).clamp(STEP_MIN, STEP_MAX)
            } else {
                1.0
            };
            u = next;
            value = next_value;
            grad = next_grad;
            residual = self.residual(&u, &grad);
            history.push(value);
            if ss == 0.0 {
                break;
            }
        }

        Ok(Descent {
            converged: residual <= cfg.tol,
            u,
            value,
            residual,
            iterations,
            history,
        })
    }
}
