#![allow(dead_code)]

use std::path::PathBuf;

use heg_core::config::RunConfig;
use heg_core::extragradient::Solver;
use heg_core::{Manifold, NashCournotModel, Point, ProxConfig, RunStatus, SolverConfig};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn bundled_configs() -> Vec<(&'static str, RunConfig)> {
    ["toy1d.cfg", "linear2d.cfg", "duopoly.cfg", "nash_cournot.cfg"]
        .into_iter()
        .map(|n| (n, RunConfig::load(&config_path(n)).unwrap()))
        .collect()
}

/// Profit of firm `i` when production is `z`: `(a_i - b_i sum z) z_i - alpha_i z_i - beta_i`.
pub fn profit(m: &NashCournotModel, i: usize, z: &[f64]) -> f64 {
    let s: f64 = z.iter().sum();
    (m.a[i] - m.b[i] * s) * z[i] - (m.alpha[i] * z[i] + m.beta[i])
}

/// `phi(x, y) - phi(x, x)` with `phi(x, y) = -sum_i profit_i(x[y_i])`.
pub fn profit_bifunction(m: &NashCournotModel, x: &[f64], y: &[f64]) -> f64 {
    let phi = |y: &[f64]| -> f64 {
        (0..x.len())
            .map(|i| {
                let mut z = x.to_vec();
                z[i] = y[i];
                -profit(m, i, &z)
            })
            .sum()
    };
    phi(y) - phi(x)
}

/// Largest gap between `x_i` and firm `i`'s clamped best response to the others.
pub fn best_response_gap(m: &NashCournotModel, x: &[f64]) -> f64 {
    let s: f64 = x.iter().sum();
    (0..x.len())
        .map(|i| {
            let others = s - x[i];
            let br = ((m.a[i] - m.alpha[i] - m.b[i] * others) / (2.0 * m.b[i])).clamp(m.bounds[i][0], m.bounds[i][1]);
            (br - x[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Equilibrium from a long, tight run of the solver itself. Callers verify it
/// independently before relying on it.
pub fn high_precision_reference(cfg: &RunConfig) -> Point {
    let p = cfg.build().unwrap();
    let solver_cfg = SolverConfig {
        stop_tol: 1e-12,
        max_outer: 5000,
        inner: ProxConfig {
            tol: 1e-13,
            ..cfg.solver_config(cfg.lambda0[0], cfg.mu[0]).inner
        },
        ..cfg.solver_config(cfg.lambda0[0], cfg.mu[0])
    };
    let out = Solver::new(&p.bifunction, &p.manifold, &p.set, solver_cfg)
        .unwrap()
        .run(&cfg.x0(&p).unwrap())
        .unwrap();
    assert_eq!(out.status, RunStatus::Converged);
    out.final_x
}

pub fn model_of(cfg: &RunConfig) -> Option<NashCournotModel> {
    match &cfg.problem {
        heg_core::config::ProblemSpec::NashCournot {
            a,
            b,
            alpha,
            beta,
            bounds,
        } => Some(NashCournotModel {
            a: a.clone(),
            b: b.clone(),
            alpha: alpha.clone(),
            beta: beta.clone(),
            bounds: bounds.clone(),
        }),
        _ => None,
    }
}

pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn manifold_of(cfg: &RunConfig) -> Manifold {
    Manifold::new(cfg.manifold.clone()).unwrap()
}
