//! Equilibrium bifunctions, built-in problem families and sampling diagnostics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::{BoxSet, FeasibleSet};
use crate::manifold::{Manifold, Point};

/// A bifunction `f : C x C -> R` with `f(x, x) = 0`, evaluated on ambient coordinates.
pub trait Bifunction: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    fn evaluate(&self, x: &[f64], y: &[f64]) -> f64;

    /// Ambient gradient of `y -> f(x, y)`.
    fn grad_second_ambient(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
}

/// Gradient of `u -> f(x, from_chart(u))` at `u = to_chart(y)`.
pub fn grad_second(f: &dyn Bifunction, manifold: &Manifold, x: &Point, y: &Point) -> Vec<f64> {
    let mut g = f.grad_second_ambient(x.coords(), y.coords());
    manifold.pull_back_gradient(y.coords(), &mut g);
    g
}

/// `f(x, y) = <C x + D y + q, y - x>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBifunction {
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    q: DVector<f64>,
    name: String,
}

/// Spectral facts about a [`LinearBifunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearStructure {
    pub d_symmetric: bool,
    pub d_min_eigenvalue: f64,
    pub d_psd: bool,
    /// Whether `D - C` itself is symmetric.
    pub d_minus_c_symmetric: bool,
    /// Largest eigenvalue of the symmetric part of `D - C`.
    pub sym_d_minus_c_max_eigenvalue: f64,
    pub sym_d_minus_c_nsd: bool,
    pub sym_d_minus_c_negative_definite: bool,
}

const SPECTRAL_TOL: f64 = 1e-9;

impl LinearBifunction {
    pub fn new(c: DMatrix<f64>, d: DMatrix<f64>, q: DVector<f64>) -> Result<Self> {
        let n = q.len();
        for (label, m) in [("C", &c), ("D", &d)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidArgument(format!(
                    "{label} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if c.iter().chain(d.iter()).chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear bifunction data".into()));
        }
        Ok(Self {
            c,
            d,
            q,
            name: format!("linear{n}"),
        })
    }

    pub fn from_rows(c: &[Vec<f64>], d: &[Vec<f64>], q: &[f64]) -> Result<Self> {
        let n = q.len();
        let to_matrix = |label: &str, rows: &[Vec<f64>]| -> Result<DMatrix<f64>> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidArgument(format!("{label} must be {n}x{n}")));
            }
            Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        };
        Self::new(to_matrix("C", c)?, to_matrix("D", d)?, DVector::from_column_slice(q))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    /// A constant `gamma` that provably satisfies the Lipschitz-type condition
    /// `f(x,y) + f(y,z) >= f(x,z) - gamma (d^2(x,y) + d^2(y,z))` on `set`.
    ///
    /// The excess equals `(z - y)^T (C - D) (y - x)` when `D` is symmetric, so
    /// `|C - D|_2 / 2` works in ambient coordinates; orthant coordinates add
    /// the squared largest upper bound, which bounds the chart differential.
    pub fn lipschitz_upper_bound(&self, manifold: &Manifold, set: &BoxSet) -> f64 {
        let sigma = (&self.c - &self.d).svd(false, false).singular_values.max();
        let scale = (0..manifold.dim())
            .map(|i| match manifold.kind_at(i) {
                crate::manifold::ComponentKind::Euclidean => 1.0,
                crate::manifold::ComponentKind::LogPositiveOrthant => set.upper()[i],
            })
            .fold(0.0, f64::max);
        0.5 * sigma * scale * scale
    }

    pub fn structure(&self) -> LinearStructure {
        let d_symmetric = (&self.d - self.d.transpose()).amax() <= SPECTRAL_TOL;
        let d_sym = (&self.d + self.d.transpose()) * 0.5;
        let d_min_eigenvalue = SymmetricEigen::new(d_sym).eigenvalues.min();
        let dc = &self.d - &self.c;
        let d_minus_c_symmetric = (&dc - dc.transpose()).amax() <= SPECTRAL_TOL;
        let sym_dc = (&dc + dc.transpose()) * 0.5;
        let max_eig = SymmetricEigen::new(sym_dc).eigenvalues.max();
        LinearStructure {
            d_symmetric,
            d_min_eigenvalue,
            d_psd: d_symmetric && d_min_eigenvalue >= -SPECTRAL_TOL,
            d_minus_c_symmetric,
            sym_d_minus_c_max_eigenvalue: max_eig,
            sym_d_minus_c_nsd: max_eig <= SPECTRAL_TOL,
            sym_d_minus_c_negative_definite: max_eig < -SPECTRAL_TOL,
        }
    }
}

impl Bifunction for LinearBifunction {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.q.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut row = self.q[i];
            for j in 0..n {
                row += self.c[(i, j)] * x[j] + self.d[(i, j)] * y[j];
            }
            total += row * (y[i] - x[i]);
        }
        total
    }

    fn grad_second_ambient(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        // D^T (y - x) + C x + D y + q
        let n = self.q.len();
        (0..n)
            .map(|i| {
                let mut g = self.q[i];
                for j in 0..n {
                    g += self.d[(j, i)] * (y[j] - x[j]) + self.c[(i, j)] * x[j] + self.d[(i, j)] * y[j];
                }
                g
            })
            .collect()
    }
}

/// Scalar test bifunctions on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin1d {
    /// `f(x, y) = x (y - x)`
    Product,
    /// `f(x, y) = y - x`
    Difference,
    /// `f = 0`
    Zero,
}

impl Builtin1d {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "product" => Ok(Self::Product),
            "difference" => Ok(Self::Difference),
            "zero" => Ok(Self::Zero),
            other => Err(Error::InvalidArgument(format!(
                "unknown builtin_1d `{other}` (expected product, difference or zero)"
            ))),
        }
    }
}

impl Bifunction for Builtin1d {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        match self {
            Self::Product => "product",
            Self::Difference => "difference",
            Self::Zero => "zero",
        }
    }

    fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::Product => x[0] * (y[0] - x[0]),
            Self::Difference => y[0] - x[0],
            Self::Zero => 0.0,
        }
    }

    fn grad_second_ambient(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        match self {
            Self::Product => vec![x[0]],
            Self::Difference => vec![1.0],
            Self::Zero => vec![0.0],
        }
    }
}

/// The zero bifunction in any dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroBifunction(pub usize);

impl Bifunction for ZeroBifunction {
    fn dim(&self) -> usize {
        self.0
    }

    fn name(&self) -> &str {
        "zero"
    }

    fn evaluate(&self, _x: &[f64], _y: &[f64]) -> f64 {
        0.0
    }

    fn grad_second_ambient(&self, _x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![0.0; self.0]
    }
}

/// Oligopoly with affine prices `p_i(s) = a_i - b_i s` and affine fees
/// `c_i(x_i) = alpha_i x_i + beta_i`, where `s` is total production.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashCournotModel {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub bounds: Vec<[f64; 2]>,
}

impl NashCournotModel {
    /// Four-firm instance used by the bundled experiment.
    pub fn four_firm() -> Self {
        Self {
            a: vec![100.0, 110.0, 100.0, 115.0],
            b: vec![0.01, 0.02, 0.015, 0.05],
            alpha: vec![20.0, 15.0, 17.0, 20.0],
            beta: vec![0.0, 100.0, 0.0, 75.0],
            bounds: vec![[1000.0, 2000.0], [500.0, 2500.0], [800.0, 1500.0], [500.0, 3000.0]],
        }
    }

    pub fn firms(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.len();
        for (label, len) in [
            ("b", self.b.len()),
            ("alpha", self.alpha.len()),
            ("beta", self.beta.len()),
            ("bounds", self.bounds.len()),
        ] {
            if len != n {
                return Err(Error::InvalidArgument(format!(
                    "nash_cournot `{label}` has {len} entries, `a` has {n}"
                )));
            }
        }
        if n == 0 {
            return Err(Error::InvalidArgument("nash_cournot needs at least one firm".into()));
        }
        if let Some(i) = self.b.iter().position(|&b| !(b >= 0.0)) {
            return Err(Error::InvalidArgument(format!("price slope b[{i}] must be >= 0")));
        }
        if let Some(i) = self.bounds.iter().position(|p| !(p[0] <= p[1])) {
            return Err(Error::InvalidArgument(format!("bounds[{i}] has lower > upper")));
        }
        Ok(())
    }

    /// Expands `phi(x, y) - phi(x, x)` into `<C x + D y + q, y - x>` with
    /// `D = diag(b)`, `C[i][j] = b_i` for all `j`, `q = alpha - a`.
    /// Fixed fees cancel.
    pub fn build(&self) -> Result<LinearBifunction> {
        self.validate()?;
        let n = self.firms();
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.b));
        let c = DMatrix::from_fn(n, n, |i, _| self.b[i]);
        let q = DVector::from_fn(n, |i, _| self.alpha[i] - self.a[i]);
        Ok(LinearBifunction::new(c, d, q)?.with_name(format!("nash_cournot{n}")))
    }

    pub fn feasible_set(&self, manifold: &Manifold) -> Result<BoxSet> {
        BoxSet::from_pairs(manifold, &self.bounds)
    }
}

/// Lower estimate of the Lipschitz-type constant with `gamma_1 = gamma_2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub gamma: f64,
    /// Triple `(x, y, z)` that attained the estimate.
    pub worst: Option<[Vec<f64>; 3]>,
    pub samples: usize,
    pub seed: u64,
}

/// Smallest `gamma` with `f(x,y) + f(y,z) >= f(x,z) - gamma (d^2(x,y) + d^2(y,z))`
/// over `samples` random triples in `set`.
pub fn estimate_lipschitz(
    f: &dyn Bifunction,
    manifold: &Manifold,
    set: &BoxSet,
    samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("estimate_lipschitz needs samples >= 1".into()));
    }
    let mut rng = crate::rng::stream(seed, 1);
    let mut gamma = 0.0_f64;
    let mut worst = None;
    for _ in 0..samples {
        let x = set.sample(manifold, &mut rng);
        let y = set.sample(manifold, &mut rng);
        let z = set.sample(manifold, &mut rng);
        let (x, y, z) = (x.coords(), y.coords(), z.coords());
        let excess = f.evaluate(x, z) - f.evaluate(x, y) - f.evaluate(y, z);
        let dxy = manifold.chart_distance_unchecked(x, y);
        let dyz = manifold.chart_distance_unchecked(y, z);
        let denom = dxy * dxy + dyz * dyz;
        if denom > 0.0 && excess / denom > gamma {
            gamma = excess / denom;
            worst = Some([x.to_vec(), y.to_vec(), z.to_vec()]);
        }
    }
    Ok(LipschitzEstimate {
        gamma,
        worst,
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    NotFalsified,
    Violated { x: Vec<f64>, y: Vec<f64>, value: f64 },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::NotFalsified)
    }
}

/// Largest modulus consistent with the samples, under both the manifold
/// distance and the ambient Euclidean distance. `None` means no positive
/// modulus fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    pub manifold: Option<f64>,
    pub ambient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub samples: usize,
    pub seed: u64,
    pub monotone: Verdict,
    pub strongly_monotone: Modulus,
    pub pseudomonotone: Verdict,
    pub strongly_pseudomonotone: Modulus,
    /// `f(p, y) >= 0  =>  f(y, p) <= 0` for the reference point `p`, when one was given.
    pub pseudomonotone_at_reference: Option<Verdict>,
    pub strongly_pseudomonotone_at_reference: Option<Modulus>,
}

struct ModulusTracker {
    manifold: f64,
    ambient: f64,
}

impl ModulusTracker {
    fn new() -> Self {
        Self {
            manifold: f64::INFINITY,
            ambient: f64::INFINITY,
        }
    }

    fn observe(&mut self, margin: f64, d2_manifold: f64, d2_ambient: f64) {
        if d2_manifold > 0.0 {
            self.manifold = self.manifold.min(margin / d2_manifold);
        }
        if d2_ambient > 0.0 {
            self.ambient = self.ambient.min(margin / d2_ambient);
        }
    }

    fn finish(self) -> Modulus {
        let keep = |m: f64| (m.is_finite() && m > MODULUS_FLOOR).then_some(m);
        Modulus {
            manifold: keep(self.manifold),
            ambient: keep(self.ambient),
        }
    }
}

const MODULUS_FLOOR: f64 = 1e-12;

fn sign_tol(a: f64, b: f64) -> f64 {
    1e-10 * (1.0 + a.abs() + b.abs())
}

/// Sampling-based falsification of monotonicity properties.
pub fn classify_monotonicity(
    f: &dyn Bifunction,
    manifold: &Manifold,
    set: &BoxSet,
    samples: usize,
    seed: u64,
    reference: Option<&Point>,
) -> Result<MonotonicityReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "classify_monotonicity needs samples >= 1".into(),
        ));
    }
    let mut rng = crate::rng::stream(seed, 2);
    let mut monotone = Verdict::NotFalsified;
    let mut pseudo = Verdict::NotFalsified;
    let mut strong = ModulusTracker::new();
    let mut strong_pseudo = ModulusTracker::new();
    let mut pseudo_ref = reference.map(|_| Verdict::NotFalsified);
    let mut strong_ref = ModulusTracker::new();

    let ambient_d2 = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();

    for _ in 0..samples {
        let xp = set.sample(manifold, &mut rng);
        let yp = set.sample(manifold, &mut rng);
        let (x, y) = (xp.coords(), yp.coords());
        let fxy = f.evaluate(x, y);
        let fyx = f.evaluate(y, x);
        let dm = manifold.chart_distance_unchecked(x, y);
        let (d2m, d2a) = (dm * dm, ambient_d2(x, y));

        let sum = fxy + fyx;
        if sum > sign_tol(fxy, fyx) && monotone.holds() {
            monotone = Verdict::Violated {
                x: x.to_vec(),
                y: y.to_vec(),
                value: sum,
            };
        }
        strong.observe(-sum, d2m, d2a);

        // Check both orderings of the pair for the implication.
        for (p, r, fpr, frp) in [(x, y, fxy, fyx), (y, x, fyx, fxy)] {
            if fpr >= 0.0 {
                if frp > sign_tol(fpr, frp) && pseudo.holds() {
                    pseudo = Verdict::Violated {
                        x: p.to_vec(),
                        y: r.to_vec(),
                        value: frp,
                    };
                }
                strong_pseudo.observe(-frp, d2m, d2a);
            }
        }

        if let Some(p) = reference {
            let p = p.coords();
            let fpy = f.evaluate(p, y);
            let fyp = f.evaluate(y, p);
            if fpy >= 0.0 {
                let dm = manifold.chart_distance_unchecked(p, y);
                strong_ref.observe(-fyp, dm * dm, ambient_d2(p, y));
                if fyp > sign_tol(fpy, fyp) {
                    if let Some(v @ Verdict::NotFalsified) = pseudo_ref.as_mut() {
                        *v = Verdict::Violated {
                            x: p.to_vec(),
                            y: y.to_vec(),
                            value: fyp,
                        };
                    }
                }
            }
        }
    }

    Ok(MonotonicityReport {
        samples,
        seed,
        monotone,
        strongly_monotone: strong.finish(),
        pseudomonotone: pseudo,
        strongly_pseudomonotone: strong_pseudo.finish(),
        strongly_pseudomonotone_at_reference: reference.map(|_| strong_ref.finish()),
        pseudomonotone_at_reference: pseudo_ref,
    })
}
