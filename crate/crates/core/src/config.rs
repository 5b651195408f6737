//! JSON run configuration.

use serde::{Deserialize, Serialize};

use crate::bifunction::{Builtin1d, LinearBifunction, NashCournotModel};
use crate::error::{Error, Result};
use crate::extragradient::SolverConfig;
use crate::feasible::BoxSet;
use crate::manifold::{Component, ComponentKind, Manifold, Point};
use crate::prox::ProxConfig;

/// Label stored in manifests when the default sweep values are used.
pub const DEFAULT_SWEEP_LABEL: &str = "default sweep (stand-in values, not taken from published figures)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    NashCournot {
        a: Vec<f64>,
        b: Vec<f64>,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        bounds: Vec<[f64; 2]>,
    },
    Linear {
        #[serde(rename = "C")]
        c: Vec<Vec<f64>>,
        #[serde(rename = "D")]
        d: Vec<Vec<f64>>,
        q: Vec<f64>,
    },
    #[serde(rename = "builtin_1d")]
    Builtin1d { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub multi_starts: Option<usize>,
}

impl Default for InnerSettings {
    fn default() -> Self {
        let d = ProxConfig::default();
        Self {
            tol: d.tol,
            max_iters: d.max_iters,
            multi_starts: d.multi_starts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: Vec<Component>,
    pub problem: ProblemSpec,
    /// Feasible box for `linear` and `builtin_1d` problems; `nash_cournot` carries its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    pub x0: Vec<f64>,
    pub lambda0: Vec<f64>,
    pub mu: Vec<f64>,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default)]
    pub inner: InnerSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub seed: u64,
    /// Known solution used for rate analysis; the run's own final point otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_label: Option<String>,
}

fn default_stop_tol() -> f64 {
    1e-6
}

fn default_max_outer() -> usize {
    500
}

fn default_output_dir() -> String {
    "out".into()
}

/// Everything needed to run the solver, built from a validated config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub manifold: Manifold,
    pub set: BoxSet,
    pub bifunction: LinearBifunction,
}

impl ProblemSpec {
    pub fn build_bifunction(&self) -> Result<LinearBifunction> {
        match self {
            ProblemSpec::NashCournot {
                a,
                b,
                alpha,
                beta,
                bounds,
            } => NashCournotModel {
                a: a.clone(),
                b: b.clone(),
                alpha: alpha.clone(),
                beta: beta.clone(),
                bounds: bounds.clone(),
            }
            .build(),
            ProblemSpec::Linear { c, d, q } => LinearBifunction::from_rows(c, d, q),
            ProblemSpec::Builtin1d { name } => {
                // Every scalar builtin is a linear bifunction `(c x + d y + q)(y - x)`.
                let (c, q) = match Builtin1d::from_name(name)? {
                    Builtin1d::Product => (1.0, 0.0),
                    Builtin1d::Difference => (0.0, 1.0),
                    Builtin1d::Zero => (0.0, 0.0),
                };
                Ok(LinearBifunction::from_rows(&[vec![c]], &[vec![0.0]], &[q])?.with_name(name.clone()))
            }
        }
    }

    fn own_bounds(&self) -> Option<&[[f64; 2]]> {
        match self {
            ProblemSpec::NashCournot { bounds, .. } => Some(bounds),
            _ => None,
        }
    }
}

impl RunConfig {
    /// Parses and validates; errors carry the 1-based line of the offending entry.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config {
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|(key, e)| Error::Config {
            line: line_of(text, key),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// The four-firm experiment with every default spelled out.
    pub fn nash_cournot_default() -> Self {
        let model = NashCournotModel::four_firm();
        RunConfig {
            manifold: vec![Component {
                kind: ComponentKind::LogPositiveOrthant,
                dim: 4,
            }],
            problem: ProblemSpec::NashCournot {
                a: model.a,
                b: model.b,
                alpha: model.alpha,
                beta: model.beta,
                bounds: model.bounds,
            },
            bounds: None,
            x0: vec![1000.0, 500.0, 800.0, 500.0],
            lambda0: vec![0.1, 0.5, 1.0],
            mu: vec![0.3, 0.5, 0.7],
            stop_tol: default_stop_tol(),
            max_outer: default_max_outer(),
            inner: InnerSettings {
                multi_starts: Some(4),
                ..InnerSettings::default()
            },
            output_dir: default_output_dir(),
            seed: 0,
            reference: None,
            sweep_label: Some(DEFAULT_SWEEP_LABEL.into()),
        }
    }

    fn bounds(&self) -> Option<&[[f64; 2]]> {
        self.problem.own_bounds().or(self.bounds.as_deref())
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, Error)> {
        if self.lambda0.is_empty() {
            return Err(("lambda0", Error::InvalidArgument("lambda0 sweep list is empty".into())));
        }
        if self.mu.is_empty() {
            return Err(("mu", Error::InvalidArgument("mu sweep list is empty".into())));
        }
        if self.problem.own_bounds().is_some() && self.bounds.is_some() {
            return Err((
                "bounds",
                Error::InvalidArgument("nash_cournot carries its own bounds; drop the top-level `bounds`".into()),
            ));
        }
        for &lambda0 in &self.lambda0 {
            self.solver_config(lambda0, self.mu[0])
                .validate()
                .map_err(|e| ("lambda0", e))?;
        }
        for &mu in &self.mu {
            self.solver_config(self.lambda0[0], mu)
                .validate()
                .map_err(|e| ("mu", e))?;
        }
        let problem = self.build().map_err(|e| {
            let key = match &e {
                Error::InvalidPoint(msg) if msg.contains("starting point") => "x0",
                Error::DimensionMismatch { .. } => "manifold",
                _ => "problem",
            };
            (key, e)
        })?;
        if let Some(r) = &self.reference {
            problem.manifold.point(r.clone()).map_err(|e| ("reference", e))?;
        }
        Ok(())
    }

    pub fn solver_config(&self, lambda0: f64, mu: f64) -> SolverConfig {
        SolverConfig {
            lambda0,
            mu,
            stop_tol: self.stop_tol,
            max_outer: self.max_outer,
            inner: ProxConfig {
                tol: self.inner.tol,
                max_iters: self.inner.max_iters,
                multi_starts: self.inner.multi_starts,
                seed: self.seed,
            },
        }
    }

    /// `(lambda0, mu)` pairs, `lambda0` varying slowest.
    pub fn sweep(&self) -> Vec<(f64, f64)> {
        self.lambda0
            .iter()
            .flat_map(|&l| self.mu.iter().map(move |&m| (l, m)))
            .collect()
    }

    pub fn build(&self) -> Result<Problem> {
        let manifold = Manifold::new(self.manifold.clone())?;
        let bifunction = self.problem.build_bifunction()?;
        if bifunction.q().len() != manifold.dim() {
            return Err(Error::DimensionMismatch {
                expected: manifold.dim(),
                got: bifunction.q().len(),
            });
        }
        let bounds = self
            .bounds()
            .ok_or_else(|| Error::InvalidArgument("`bounds` is required for this problem kind".into()))?;
        let set = BoxSet::from_pairs(&manifold, bounds)?;
        let x0 = manifold.point(self.x0.clone())?;
        if !set.contains_with_slack(&x0, crate::prox::FEASIBILITY_SLACK)? {
            return Err(Error::InvalidPoint(format!(
                "starting point {:?} is outside the feasible set",
                self.x0
            )));
        }
        Ok(Problem {
            manifold,
            set,
            bifunction,
        })
    }

    pub fn x0(&self, problem: &Problem) -> Result<Point> {
        problem.manifold.point(self.x0.clone())
    }
}

/// 1-based line of the first occurrence of `"key"`, or 1 when absent.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}
