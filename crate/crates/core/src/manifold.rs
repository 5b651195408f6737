//! Geometry kernel for flat Hadamard manifolds.
//!
//! Supported components are Euclidean space and the positive orthant with the
//! scale-invariant metric `<u, v>_x = u v / x^2`, whose distance is
//! `|ln(x / y)|` per coordinate. Products of components are flat as well, so
//! every manifold here is globally isometric to Euclidean space through the
//! chart `u = x` (Euclidean) / `u = ln x` (orthant).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible coordinate on a positive-orthant component.
pub const ORTHANT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Euclidean,
    LogPositiveOrthant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub kind: ComponentKind,
    pub dim: usize,
}

/// A point given by its ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Wraps coordinates already known to satisfy the manifold's constraints.
    pub(crate) fn from_validated(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// A tangent vector, stored in ambient coordinates together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    base: Point,
    coords: Vec<f64>,
}

impl Tangent {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// A finite product of flat components.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifold {
    components: Vec<Component>,
    kinds: Vec<ComponentKind>,
}

impl Manifold {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("manifold needs at least one component".into()));
        }
        if let Some(c) = components.iter().find(|c| c.dim == 0) {
            return Err(Error::InvalidArgument(format!(
                "{:?} component with dimension 0",
                c.kind
            )));
        }
        let kinds = components
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.kind, c.dim))
            .collect();
        Ok(Self { components, kinds })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(vec![Component {
            kind: ComponentKind::Euclidean,
            dim,
        }])
    }

    pub fn log_orthant(dim: usize) -> Result<Self> {
        Self::new(vec![Component {
            kind: ComponentKind::LogPositiveOrthant,
            dim,
        }])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.kinds.len()
    }

    /// Kind of the component that owns coordinate `i`.
    pub fn kind_at(&self, i: usize) -> ComponentKind {
        self.kinds[i]
    }

    pub fn is_euclidean(&self) -> bool {
        self.kinds.iter().all(|k| *k == ComponentKind::Euclidean)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            })
        }
    }

    /// Validates ambient coordinates and wraps them as a point.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        self.check_dim(coords.len())?;
        for (i, (&c, kind)) in coords.iter().zip(&self.kinds).enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFinite(format!("coordinate {i} = {c}")));
            }
            if *kind == ComponentKind::LogPositiveOrthant && c <= ORTHANT_FLOOR {
                return Err(Error::InvalidPoint(format!(
                    "coordinate {i} = {c} is not strictly positive"
                )));
            }
        }
        Ok(Point { coords })
    }

    pub fn tangent(&self, base: &Point, coords: Vec<f64>) -> Result<Tangent> {
        self.check_dim(base.dim())?;
        self.check_dim(coords.len())?;
        Ok(Tangent {
            base: base.clone(),
            coords,
        })
    }

    pub fn zero_tangent(&self, base: &Point) -> Tangent {
        Tangent {
            base: base.clone(),
            coords: vec![0.0; base.dim()],
        }
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        Ok(self.chart_distance_unchecked(x.coords(), y.coords()))
    }

    /// Distance between two points given by ambient coordinates, without validation.
    pub(crate) fn chart_distance_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.kinds)
            .map(|((&a, &b), kind)| {
                let d = match kind {
                    ComponentKind::Euclidean => b - a,
                    ComponentKind::LogPositiveOrthant => (b / a).ln(),
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Point reached at time `t` along the geodesic with initial velocity `v`.
    pub fn exp_map(&self, v: &Tangent, t: f64) -> Result<Point> {
        self.check_dim(v.coords.len())?;
        let coords = v
            .base
            .coords
            .iter()
            .zip(&v.coords)
            .zip(&self.kinds)
            .map(|((&x, &w), kind)| match kind {
                ComponentKind::Euclidean => x + t * w,
                ComponentKind::LogPositiveOrthant => x * ((w / x) * t).exp(),
            })
            .collect();
        self.point(coords)
    }

    pub fn log_map(&self, x: &Point, y: &Point) -> Result<Tangent> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        let coords = x
            .coords
            .iter()
            .zip(&y.coords)
            .zip(&self.kinds)
            .map(|((&a, &b), kind)| match kind {
                ComponentKind::Euclidean => b - a,
                ComponentKind::LogPositiveOrthant => a * (b / a).ln(),
            })
            .collect();
        Ok(Tangent {
            base: x.clone(),
            coords,
        })
    }

    /// Riemannian inner product of two tangent vectors at the same base point.
    pub fn inner(&self, u: &Tangent, v: &Tangent) -> Result<f64> {
        self.check_dim(u.coords.len())?;
        self.check_dim(v.coords.len())?;
        if u.base != v.base {
            return Err(Error::InvalidArgument(
                "tangent vectors have different base points".into(),
            ));
        }
        Ok(u.coords
            .iter()
            .zip(&v.coords)
            .zip(u.base.coords.iter().zip(&self.kinds))
            .map(|((&a, &b), (&x, kind))| match kind {
                ComponentKind::Euclidean => a * b,
                ComponentKind::LogPositiveOrthant => a * b / (x * x),
            })
            .sum())
    }

    pub fn norm(&self, v: &Tangent) -> Result<f64> {
        Ok(self.inner(v, v)?.sqrt())
    }

    /// Parallel transport of `v` along the geodesic from its base point to `y`.
    ///
    /// In chart coordinates transport is the identity; on orthant coordinates
    /// this pulls back to the scaling `w -> w * y / x`.
    pub fn parallel_transport(&self, v: &Tangent, y: &Point) -> Result<Tangent> {
        self.check_dim(v.coords.len())?;
        self.check_dim(y.dim())?;
        let coords = v
            .coords
            .iter()
            .zip(v.base.coords.iter().zip(&y.coords))
            .zip(&self.kinds)
            .map(|((&w, (&a, &b)), kind)| match kind {
                ComponentKind::Euclidean => w,
                ComponentKind::LogPositiveOrthant => w * b / a,
            })
            .collect();
        Ok(Tangent {
            base: y.clone(),
            coords,
        })
    }

    /// `gamma(t)` on the geodesic with `gamma(0) = x` and `gamma(1) = y`.
    pub fn geodesic(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        let v = self.log_map(x, y)?;
        self.exp_map(&v, t)
    }

    pub fn to_chart(&self, x: &Point) -> Result<Vec<f64>> {
        self.check_dim(x.dim())?;
        Ok(self.to_chart_unchecked(x.coords()))
    }

    pub(crate) fn to_chart_unchecked(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.kinds)
            .map(|(&c, kind)| chart_coord(*kind, c))
            .collect()
    }

    pub fn from_chart(&self, u: &[f64]) -> Result<Point> {
        self.check_dim(u.len())?;
        if let Some((i, c)) = u.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(Error::NonFinite(format!("chart coordinate {i} = {c}")));
        }
        self.point(self.from_chart_unchecked(u))
    }

    #[allow(clippy::wrong_self_convention)]
    pub(crate) fn from_chart_unchecked(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.kinds)
            .map(|(&c, kind)| ambient_coord(*kind, c))
            .collect()
    }

    /// Multiplies an ambient gradient by the chart differential, giving the
    /// gradient with respect to chart coordinates at `y`.
    pub(crate) fn pull_back_gradient(&self, y: &[f64], grad: &mut [f64]) {
        for ((g, &c), kind) in grad.iter_mut().zip(y).zip(&self.kinds) {
            if *kind == ComponentKind::LogPositiveOrthant {
                *g *= c;
            }
        }
    }
}

pub(crate) fn chart_coord(kind: ComponentKind, x: f64) -> f64 {
    match kind {
        ComponentKind::Euclidean => x,
        ComponentKind::LogPositiveOrthant => x.ln(),
    }
}

pub(crate) fn ambient_coord(kind: ComponentKind, u: f64) -> f64 {
    match kind {
        ComponentKind::Euclidean => u,
        ComponentKind::LogPositiveOrthant => u.exp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn orthant1() -> Manifold {
        Manifold::log_orthant(1).unwrap()
    }

    #[test]
    fn distance_examples() {
        let m = orthant1();
        let two = m.point(vec![2.0]).unwrap();
        assert_eq!(m.distance(&two, &two).unwrap(), 0.0);
        let one = m.point(vec![1.0]).unwrap();
        let e = m.point(vec![E]).unwrap();
        assert!((m.distance(&one, &e).unwrap() - 1.0).abs() < 1e-15);

        let r2 = Manifold::euclidean(2).unwrap();
        let a = r2.point(vec![0.0, 0.0]).unwrap();
        let b = r2.point(vec![3.0, 4.0]).unwrap();
        assert_eq!(r2.distance(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn distance_dimension_mismatch() {
        let r2 = Manifold::euclidean(2).unwrap();
        let r3 = Manifold::euclidean(3).unwrap();
        let a = r2.point(vec![0.0, 0.0]).unwrap();
        let b = r3.point(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(r2.distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn exp_map_examples() {
        let m = orthant1();
        let one = m.point(vec![1.0]).unwrap();
        let v = m.tangent(&one, vec![1.0]).unwrap();
        assert!((m.exp_map(&v, 1.0).unwrap().coords()[0] - E).abs() < 1e-15);
        assert_eq!(m.exp_map(&v, 0.0).unwrap(), one);

        let r2 = Manifold::euclidean(2).unwrap();
        let x = r2.point(vec![1.0, 1.0]).unwrap();
        let v = r2.tangent(&x, vec![2.0, -1.0]).unwrap();
        assert_eq!(r2.exp_map(&v, 0.5).unwrap().coords(), &[2.0, 0.5]);
    }

    #[test]
    fn log_map_examples() {
        let m = orthant1();
        let one = m.point(vec![1.0]).unwrap();
        let e = m.point(vec![E]).unwrap();
        assert!((m.log_map(&one, &e).unwrap().coords()[0] - 1.0).abs() < 1e-15);
        let two = m.point(vec![2.0]).unwrap();
        assert_eq!(m.log_map(&two, &two).unwrap().coords(), &[0.0]);

        let r2 = Manifold::euclidean(2).unwrap();
        let x = r2.point(vec![1.0, 0.0]).unwrap();
        let y = r2.point(vec![4.0, 4.0]).unwrap();
        let v = r2.log_map(&x, &y).unwrap();
        assert_eq!(v.coords(), &[3.0, 4.0]);
        assert_eq!(r2.norm(&v).unwrap(), 5.0);
        assert_eq!(r2.distance(&x, &y).unwrap(), 5.0);
    }

    #[test]
    fn inner_examples() {
        let m = orthant1();
        let one = m.point(vec![1.0]).unwrap();
        let u = m.tangent(&one, vec![1.0]).unwrap();
        assert_eq!(m.inner(&u, &u).unwrap(), 1.0);

        let two = m.point(vec![2.0]).unwrap();
        let u = m.tangent(&two, vec![2.0]).unwrap();
        assert_eq!(m.inner(&u, &u).unwrap(), 1.0);

        let r2 = Manifold::euclidean(2).unwrap();
        let x = r2.point(vec![0.0, 0.0]).unwrap();
        let u = r2.tangent(&x, vec![1.0, 2.0]).unwrap();
        let v = r2.tangent(&x, vec![3.0, 4.0]).unwrap();
        assert_eq!(r2.inner(&u, &v).unwrap(), 11.0);
    }

    #[test]
    fn inner_rejects_mismatched_bases() {
        let m = orthant1();
        let a = m.point(vec![1.0]).unwrap();
        let b = m.point(vec![2.0]).unwrap();
        let u = m.tangent(&a, vec![1.0]).unwrap();
        let v = m.tangent(&b, vec![1.0]).unwrap();
        assert!(m.inner(&u, &v).is_err());
    }

    #[test]
    fn orthant_metric_matches_arclength() {
        // Finite-difference arclength along exp_2(t * 2): d(2, exp_2(t v)) / |t| -> |v|_2 = 1.
        let m = orthant1();
        let x = m.point(vec![2.0]).unwrap();
        let v = m.tangent(&x, vec![2.0]).unwrap();
        for t in [1e-3, -1e-3, 1e-5] {
            let y = m.exp_map(&v, t).unwrap();
            let speed = m.distance(&x, &y).unwrap() / t.abs();
            assert!((speed - m.norm(&v).unwrap()).abs() < 1e-9, "speed {speed}");
        }
    }

    #[test]
    fn transport_examples() {
        let m = orthant1();
        let one = m.point(vec![1.0]).unwrap();
        let e = m.point(vec![E]).unwrap();
        let v = m.tangent(&one, vec![1.0]).unwrap();
        let w = m.parallel_transport(&v, &e).unwrap();
        assert!((w.coords()[0] - E).abs() < 1e-15);
        assert!((m.norm(&w).unwrap() - m.norm(&v).unwrap()).abs() < 1e-15);
        assert_eq!(m.parallel_transport(&v, &one).unwrap(), v);

        let r2 = Manifold::euclidean(2).unwrap();
        let x = r2.point(vec![1.0, 2.0]).unwrap();
        let y = r2.point(vec![-3.0, 7.0]).unwrap();
        let v = r2.tangent(&x, vec![0.5, -1.5]).unwrap();
        assert_eq!(r2.parallel_transport(&v, &y).unwrap().coords(), v.coords());
    }

    #[test]
    fn chart_examples() {
        let m = orthant1();
        let e = m.point(vec![E]).unwrap();
        assert!((m.to_chart(&e).unwrap()[0] - 1.0).abs() < 1e-15);

        let prod = Manifold::new(vec![
            Component {
                kind: ComponentKind::Euclidean,
                dim: 1,
            },
            Component {
                kind: ComponentKind::LogPositiveOrthant,
                dim: 1,
            },
        ])
        .unwrap();
        let x = prod.point(vec![3.0, E]).unwrap();
        let u = prod.to_chart(&x).unwrap();
        assert_eq!(u[0], 3.0);
        assert!((u[1] - 1.0).abs() < 1e-15);
        let back = prod.from_chart(&u).unwrap();
        assert!((back.coords()[1] - E).abs() < 1e-15);
        assert_eq!(back.coords()[0], 3.0);
    }

    #[test]
    fn from_chart_rejects_non_finite() {
        let m = Manifold::euclidean(2).unwrap();
        assert!(matches!(m.from_chart(&[0.0, f64::NAN]), Err(Error::NonFinite(_))));
        assert!(matches!(m.from_chart(&[f64::INFINITY, 0.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn orthant_rejects_nonpositive() {
        let m = orthant1();
        assert!(m.point(vec![0.0]).is_err());
        assert!(m.point(vec![1e-301]).is_err());
        assert!(m.point(vec![-1.0]).is_err());
        assert!(m.point(vec![1e-299]).is_ok());
    }

    #[test]
    fn empty_or_zero_components_rejected() {
        assert!(Manifold::new(vec![]).is_err());
        assert!(Manifold::euclidean(0).is_err());
    }
}
