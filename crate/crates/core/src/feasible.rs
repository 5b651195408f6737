//! Feasible sets: coordinate boxes on a flat manifold.
//!
//! A box `lower <= x <= upper` maps to a box in chart coordinates, so it is
//! geodesically convex and its chart projection is a componentwise clamp.

use rand::Rng;

use crate::error::{Error, Result};
use crate::manifold::{chart_coord, Manifold, Point};

/// Anything that can be asked for membership and sampled from.
pub trait FeasibleSet {
    fn contains(&self, x: &Point) -> Result<bool>;

    /// Membership allowing each coordinate to overshoot by `rel_slack * (1 + |bound|)`.
    fn contains_within(&self, x: &Point, rel_slack: f64) -> Result<bool> {
        let _ = rel_slack;
        self.contains(x)
    }

    /// Draws a member of the set.
    fn sample<R: Rng + ?Sized>(&self, manifold: &Manifold, rng: &mut R) -> Point;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
    chart_lower: Vec<f64>,
    chart_upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(manifold: &Manifold, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = manifold.dim();
        for len in [lower.len(), upper.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        for i in 0..n {
            let (lo, hi) = (lower[i], upper[i]);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite(format!("bound {i} = [{lo}, {hi}]")));
            }
            if lo > hi {
                return Err(Error::InvalidArgument(format!("bound {i}: lower {lo} > upper {hi}")));
            }
        }
        // Positivity of orthant bounds is checked by point construction.
        let chart_lower = manifold.to_chart(&manifold.point(lower.clone())?)?;
        let chart_upper = manifold.to_chart(&manifold.point(upper.clone())?)?;
        Ok(Self {
            lower,
            upper,
            chart_lower,
            chart_upper,
        })
    }

    /// Builds a box from `[[lo, hi], ...]` pairs.
    pub fn from_pairs(manifold: &Manifold, pairs: &[[f64; 2]]) -> Result<Self> {
        let (lower, upper) = pairs.iter().map(|p| (p[0], p[1])).unzip();
        Self::new(manifold, lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn chart_lower(&self) -> &[f64] {
        &self.chart_lower
    }

    pub fn chart_upper(&self) -> &[f64] {
        &self.chart_upper
    }

    /// Membership with an absolute slack on every coordinate.
    pub fn contains_with_slack(&self, x: &Point, slack: f64) -> Result<bool> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(x.coords()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&c, (&lo, &hi))| c >= lo - slack && c <= hi + slack))
    }

    /// Clamps chart coordinates onto the chart image of the box.
    pub fn project_chart(&self, u: &[f64]) -> Vec<f64> {
        let mut out = u.to_vec();
        self.project_chart_in_place(&mut out);
        out
    }

    pub fn project_chart_in_place(&self, u: &mut [f64]) {
        for ((c, &lo), &hi) in u.iter_mut().zip(&self.chart_lower).zip(&self.chart_upper) {
            *c = c.clamp(lo, hi);
        }
    }

    /// Uniform draw in chart coordinates.
    pub fn sample_chart<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.chart_lower
            .iter()
            .zip(&self.chart_upper)
            .map(|(&lo, &hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
            .collect()
    }

    /// Chart image of the ambient bound pair on coordinate `i`.
    pub fn chart_bounds(&self, manifold: &Manifold, i: usize) -> (f64, f64) {
        let kind = manifold.kind_at(i);
        (chart_coord(kind, self.lower[i]), chart_coord(kind, self.upper[i]))
    }
}

impl FeasibleSet for BoxSet {
    fn contains(&self, x: &Point) -> Result<bool> {
        self.contains_with_slack(x, 0.0)
    }

    fn contains_within(&self, x: &Point, rel_slack: f64) -> Result<bool> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(x.coords()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&c, (&lo, &hi))| c >= lo - rel_slack * (1.0 + lo.abs()) && c <= hi + rel_slack * (1.0 + hi.abs())))
    }

    fn sample<R: Rng + ?Sized>(&self, manifold: &Manifold, rng: &mut R) -> Point {
        let u = self.sample_chart(rng);
        // Clamp guards against exp(ln(b)) landing one ulp outside the bound.
        let coords = manifold
            .from_chart_unchecked(&u)
            .into_iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(c, (&lo, &hi))| c.clamp(lo, hi))
            .collect();
        Point::from_validated(coords)
    }
}

/// Samples member pairs and geodesic parameters in `[0, 1]`; returns `false`
/// as soon as a sampled geodesic point leaves the set.
pub fn convexity_probe<S: FeasibleSet>(set: &S, manifold: &Manifold, trials: usize, seed: u64) -> Result<bool> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "convexity probe needs at least one trial".into(),
        ));
    }
    let mut rng = crate::rng::stream(seed, 0);
    for _ in 0..trials {
        let x = set.sample(manifold, &mut rng);
        let y = set.sample(manifold, &mut rng);
        let t: f64 = rng.gen_range(0.0..=1.0);
        let z = manifold.geodesic(&x, &y, t)?;
        // exp(ln) round trips can overshoot a bound by a few ulps.
        if !set.contains_within(&z, 1e-12)? {
            return Ok(false);
        }
    }
    Ok(true)
}
