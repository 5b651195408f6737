//! Brute-force verifiers: grid argmin of prox subproblems, grid certification
//! of equilibria and central finite differences in chart coordinates.
//!
//! Grids live in chart coordinates, so spacing is uniform in the manifold metric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifunction::Bifunction;
use crate::error::{Error, Result};
use crate::feasible::BoxSet;
use crate::manifold::{Manifold, Point};
use crate::prox::{ProxProblem, FEASIBILITY_SLACK};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    counts: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Grid {
    /// `points_per_axis` samples per chart axis of `set`, endpoints included.
    pub fn uniform(set: &BoxSet, points_per_axis: usize, budget: u64) -> Result<Self> {
        Self::with_counts(set, vec![points_per_axis; set.dim()], budget)
    }

    /// Smallest grid whose chart spacing does not exceed `spacing` on any axis.
    pub fn with_spacing(set: &BoxSet, spacing: f64, budget: u64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        let counts = set
            .chart_lower()
            .iter()
            .zip(set.chart_upper())
            .map(|(lo, hi)| (((hi - lo) / spacing - 1e-9).ceil().max(1.0) as usize) + 1)
            .collect();
        Self::with_counts(set, counts, budget)
    }

    pub fn with_counts(set: &BoxSet, counts: Vec<usize>, budget: u64) -> Result<Self> {
        if counts.len() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: counts.len(),
            });
        }
        if let Some(i) = counts.iter().position(|&c| c < 2) {
            return Err(Error::InvalidArgument(format!("grid axis {i} needs at least 2 points")));
        }
        let points = counts.iter().map(|&c| c as u128).product::<u128>();
        if points > budget as u128 {
            return Err(Error::BudgetExceeded { points, budget });
        }
        Ok(Self {
            counts,
            lower: set.chart_lower().to_vec(),
            upper: set.chart_upper().to_vec(),
        })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Chart spacing along axis `i`.
    pub fn spacing(&self, i: usize) -> f64 {
        (self.upper[i] - self.lower[i]) / (self.counts[i] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.counts.len()).map(|i| self.spacing(i)).fold(0.0, f64::max)
    }

    /// Chart coordinates of the point with lexicographic index `index`
    /// (the first axis varies slowest).
    pub fn chart_point(&self, mut index: usize) -> Vec<f64> {
        let mut u = vec![0.0; self.counts.len()];
        for i in (0..self.counts.len()).rev() {
            let k = index % self.counts[i];
            index /= self.counts[i];
            u[i] = if k == self.counts[i] - 1 {
                self.upper[i]
            } else {
                self.lower[i] + k as f64 * self.spacing(i)
            };
        }
        u
    }

    fn ambient_point(&self, manifold: &Manifold, set: &BoxSet, index: usize) -> Vec<f64> {
        manifold
            .from_chart_unchecked(&self.chart_point(index))
            .into_iter()
            .zip(set.lower().iter().zip(set.upper()))
            .map(|(c, (&lo, &hi))| c.clamp(lo, hi))
            .collect()
    }

    /// Index and value of the smallest `eval` over the grid; NaN counts as +inf
    /// and ties go to the lowest index.
    fn argmin<F>(&self, eval: F) -> (usize, f64)
    where
        F: Fn(usize) -> f64 + Sync,
    {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let v = eval(i);
                (i, if v.is_nan() { f64::INFINITY } else { v })
            })
            .reduce(
                || (usize::MAX, f64::INFINITY),
                |a, b| match a.1.partial_cmp(&b.1) {
                    Some(std::cmp::Ordering::Less) => a,
                    Some(std::cmp::Ordering::Greater) => b,
                    _ => {
                        if a.0 <= b.0 {
                            a
                        } else {
                            b
                        }
                    }
                },
            )
    }
}

/// Exhaustive argmin of the prox objective over `grid`.
pub fn grid_prox(problem: &ProxProblem<'_>, grid: &Grid) -> Result<Point> {
    let (m, set) = (problem.manifold(), problem.set());
    if grid.counts().len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: grid.counts().len(),
        });
    }
    let (best, _) = grid.argmin(|i| problem.objective(&Point::from_validated(grid.ambient_point(m, set, i))));
    Ok(Point::from_validated(grid.ambient_point(m, set, best)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub certified: bool,
    pub worst_y: Vec<f64>,
    pub worst_value: f64,
    pub points: usize,
    pub slack: f64,
}

/// Checks `min_y f(x*, y) >= -slack` over the grid.
pub fn certify_equilibrium(
    f: &dyn Bifunction,
    manifold: &Manifold,
    set: &BoxSet,
    x_star: &Point,
    grid: &Grid,
    slack: f64,
) -> Result<Certificate> {
    if !set.contains_with_slack(x_star, FEASIBILITY_SLACK)? {
        return Err(Error::InvalidPoint(format!(
            "candidate {:?} is outside the feasible set",
            x_star.coords()
        )));
    }
    let (best, worst_value) = grid.argmin(|i| f.evaluate(x_star.coords(), &grid.ambient_point(manifold, set, i)));
    Ok(Certificate {
        certified: worst_value >= -slack,
        worst_y: grid.ambient_point(manifold, set, best),
        worst_value,
        points: grid.len(),
        slack,
    })
}

/// Central differences of `u -> f(x, from_chart(u))` at `u = to_chart(y)`.
pub fn fd_gradient(f: &dyn Bifunction, manifold: &Manifold, x: &Point, y: &Point, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let u = manifold.to_chart(y)?;
    let mut g = Vec::with_capacity(u.len());
    let mut probe = u.clone();
    for i in 0..u.len() {
        probe[i] = u[i] + step;
        let plus = f.evaluate(x.coords(), &manifold.from_chart_unchecked(&probe));
        probe[i] = u[i] - step;
        let minus = f.evaluate(x.coords(), &manifold.from_chart_unchecked(&probe));
        probe[i] = u[i];
        g.push((plus - minus) / (2.0 * step));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunction::{grad_second, Builtin1d, LinearBifunction, ZeroBifunction};

    #[test]
    fn grid_layout() {
        let m = Manifold::euclidean(2).unwrap();
        let b = BoxSet::new(&m, vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let g = Grid::with_counts(&b, vec![2, 3], DEFAULT_BUDGET).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.chart_point(0), vec![0.0, -1.0]);
        assert_eq!(g.chart_point(1), vec![0.0, 0.0]);
        assert_eq!(g.chart_point(5), vec![1.0, 1.0]);
        let g = Grid::with_spacing(&b, 0.3, DEFAULT_BUDGET).unwrap();
        assert_eq!(g.counts(), &[5, 8]);
        assert!(g.max_spacing() <= 0.3);
    }

    #[test]
    fn budget_guard() {
        let m = Manifold::euclidean(4).unwrap();
        let b = BoxSet::new(&m, vec![0.0; 4], vec![1.0; 4]).unwrap();
        assert!(matches!(
            Grid::uniform(&b, 100, DEFAULT_BUDGET),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(Grid::uniform(&b, 21, DEFAULT_BUDGET).is_ok());
        assert!(Grid::uniform(&b, 1, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn grid_prox_closed_form() {
        let m = Manifold::euclidean(1).unwrap();
        let b = BoxSet::new(&m, vec![-5.0], vec![5.0]).unwrap();
        let x = m.point(vec![1.0]).unwrap();
        let p = ProxProblem::centered(&Builtin1d::Product, &m, &b, &x, 0.5).unwrap();
        let g = Grid::with_spacing(&b, 1e-4, DEFAULT_BUDGET).unwrap();
        let y = grid_prox(&p, &g).unwrap();
        assert!((y.coords()[0] - 0.5).abs() <= 1e-4);
    }

    #[test]
    fn grid_prox_zero_returns_nearest_point() {
        let m = Manifold::euclidean(1).unwrap();
        let b = BoxSet::new(&m, vec![0.0], vec![1.0]).unwrap();
        let x = m.point(vec![0.33]).unwrap();
        let p = ProxProblem::centered(&ZeroBifunction(1), &m, &b, &x, 1.0).unwrap();
        let g = Grid::with_counts(&b, vec![11], DEFAULT_BUDGET).unwrap();
        assert!((grid_prox(&p, &g).unwrap().coords()[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn certify_examples() {
        let m = Manifold::euclidean(1).unwrap();
        let b = BoxSet::new(&m, vec![-5.0], vec![5.0]).unwrap();
        let g = Grid::uniform(&b, 1001, DEFAULT_BUDGET).unwrap();
        let zero = m.point(vec![0.0]).unwrap();
        let c = certify_equilibrium(&Builtin1d::Product, &m, &b, &zero, &g, 0.0).unwrap();
        assert!(c.certified);

        let one = m.point(vec![1.0]).unwrap();
        let c = certify_equilibrium(&Builtin1d::Product, &m, &b, &one, &g, 0.0).unwrap();
        assert!(!c.certified);
        assert_eq!(c.worst_y, vec![-5.0]);
        assert_eq!(c.worst_value, -6.0);

        let outside = m.point(vec![9.0]).unwrap();
        assert!(certify_equilibrium(&Builtin1d::Product, &m, &b, &outside, &g, 0.0).is_err());
    }

    #[test]
    fn fd_matches_linear_gradient() {
        let m = Manifold::euclidean(2).unwrap();
        let f = LinearBifunction::from_rows(
            &[vec![1.0, 0.5], vec![-0.25, 2.0]],
            &[vec![2.0, 0.3], vec![0.3, 1.0]],
            &[0.1, -0.2],
        )
        .unwrap();
        let x = m.point(vec![0.4, -1.0]).unwrap();
        let y = m.point(vec![1.5, 0.25]).unwrap();
        let exact = grad_second(&f, &m, &x, &y);
        let fd = fd_gradient(&f, &m, &x, &y, 1e-4).unwrap();
        for i in 0..2 {
            // Quadratic in y: central differences are exact up to rounding.
            assert!((fd[i] - exact[i]).abs() < 1e-8);
        }
        assert_eq!(
            fd_gradient(&ZeroBifunction(2), &m, &x, &y, 1e-3).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(fd_gradient(&f, &m, &x, &y, 0.0).is_err());
    }
}
