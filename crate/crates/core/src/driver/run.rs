//! Time loops for the bubble and spectral solvers.

use log::{debug, info, warn};
use num_complex::Complex64;

use crate::bubble::BubbleEnsemble;
use crate::dfmp::{nonlinear_rates, step_nonlinear, NonlinearOptions, SolveDiagnostics};
use crate::error::{Error, Result};
use crate::linear::propagate_ensemble_linear;
use crate::observables::{bubble_moments, grid_moments, ObservableParams, ObservableRecord};
use crate::ode::ButcherTableau;
use crate::spectral::{Grid, GridField, SpectralSolver};

use super::config::{RunConfig, TestCase};
use super::output::write_outputs;
use super::testcase::load_test_case;

/// High-frequency mass fraction above which the spectral run warns about aliasing.
pub const ALIASING_THRESHOLD: f64 = 1e-10;

/// One row of `diagnostics.csv`: worst projection conditioning since the
/// previous row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub gram_condition: f64,
    pub effective_rank: usize,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub bubble_observables: Option<Vec<ObservableRecord>>,
    pub spectral_observables: Option<Vec<ObservableRecord>>,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub final_bubbles: Option<BubbleEnsemble>,
    pub final_spectral: Option<GridField>,
    /// Grid of the spectral run, also used to sample the final bubble field.
    pub grid: Option<Grid>,
    pub aliasing_warned: bool,
}

/// Bubble state after one Strang step with the conditioning of its
/// nonlinear stage, if one ran.
#[derive(Clone, Debug)]
pub struct StrangStep {
    pub ensemble: BubbleEnsemble,
    pub diagnostics: Option<SolveDiagnostics>,
}

fn nonlinear_options(cfg: &RunConfig) -> NonlinearOptions {
    NonlinearOptions {
        lambda: cfg.lambda,
        svd_rtol: cfg.svd_rtol,
        tableau: ButcherTableau::rk4(),
    }
}

/// Half exact linear flow, one RK4 step of the projected nonlinear flow,
/// half linear flow. Linear stages are skipped for `μ = 0`, the nonlinear
/// stage for `λ = 0`.
pub fn strang_step_bubbles(e: &BubbleEnsemble, dt: f64, cfg: &RunConfig) -> Result<StrangStep> {
    let half = 0.5 * cfg.mu * dt;
    let linear = |e: &BubbleEnsemble| {
        if half == 0.0 {
            Ok(e.clone())
        } else {
            propagate_ensemble_linear(e, half)
        }
    };
    let a = linear(e)?;
    if cfg.lambda == 0.0 {
        return Ok(StrangStep {
            ensemble: linear(&a)?,
            diagnostics: None,
        });
    }
    let step = step_nonlinear(&a, dt, &nonlinear_options(cfg))?;
    Ok(StrangStep {
        ensemble: linear(&step.ensemble)?,
        diagnostics: Some(step.diagnostics),
    })
}

/// Grid of a run: `nx × ny` on `[−w, w]²`, or `nx` points on `[−w, w]` for `d = 1`.
pub fn run_grid(cfg: &RunConfig) -> Result<Grid> {
    match cfg.d {
        1 => Grid::new(vec![cfg.nx], vec![cfg.halfwidth]),
        2 => Grid::new(vec![cfg.nx, cfg.ny], vec![cfg.halfwidth; 2]),
        d => Err(Error::Config {
            field: "d",
            reason: format!("no grid for d = {d}"),
        }),
    }
}

fn params(cfg: &RunConfig) -> ObservableParams {
    ObservableParams {
        mu: cfg.mu,
        lambda: cfg.lambda,
    }
}

fn check_record(r: ObservableRecord, what: &'static str) -> Result<ObservableRecord> {
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Observables of an ensemble: closed form for Gaussians, grid quadrature
/// for ensembles carrying higher Hermite modes.
fn ensemble_record(
    e: &BubbleEnsemble,
    t: f64,
    p: ObservableParams,
    solver: Option<&SpectralSolver>,
) -> Result<ObservableRecord> {
    let moments = match bubble_moments(e) {
        Ok(m) => m,
        Err(Error::NonGaussian(j)) => {
            let solver = solver.ok_or(Error::NonGaussian(j))?;
            grid_moments(&sample(e, solver.grid())?, solver)?
        }
        Err(err) => return Err(err),
    };
    check_record(moments.record(t, p), "bubble observables")
}

fn sample(e: &BubbleEnsemble, grid: &Grid) -> Result<GridField> {
    let values = e.evaluate(&grid.points())?;
    GridField::new(grid.clone(), values)
}

fn projection_diagnostics(e: &BubbleEnsemble, t: f64, cfg: &RunConfig) -> DiagnosticRecord {
    match nonlinear_rates(e, 0.0, cfg.svd_rtol) {
        Ok((_, d)) => DiagnosticRecord {
            t,
            gram_condition: d.condition,
            effective_rank: d.effective_rank,
        },
        Err(_) => DiagnosticRecord {
            t,
            gram_condition: f64::NAN,
            effective_rank: 0,
        },
    }
}

struct BubbleRun {
    observables: Vec<ObservableRecord>,
    diagnostics: Vec<DiagnosticRecord>,
    last: BubbleEnsemble,
}

fn run_bubbles(e0: &BubbleEnsemble, cfg: &RunConfig, solver: Option<&SpectralSolver>) -> Result<BubbleRun> {
    let n = cfg.step_count();
    let p = params(cfg);
    let mut observables = vec![ensemble_record(e0, 0.0, p, solver)?];
    let mut diagnostics = vec![projection_diagnostics(e0, 0.0, cfg)];

    if cfg.lambda == 0.0 {
        // exact flow: every state is propagated from t = 0, no accumulation
        let at = |k: usize| propagate_ensemble_linear(e0, cfg.mu * k as f64 * cfg.dt);
        for k in (cfg.stride..=n).step_by(cfg.stride) {
            let t = k as f64 * cfg.dt;
            let e = at(k)?;
            observables.push(ensemble_record(&e, t, p, solver)?);
            diagnostics.push(projection_diagnostics(&e, t, cfg));
        }
        return Ok(BubbleRun {
            observables,
            diagnostics,
            last: at(n)?,
        });
    }

    let mut e = e0.clone();
    let mut worst: Option<SolveDiagnostics> = None;
    for k in 1..=n {
        let step = strang_step_bubbles(&e, cfg.dt, cfg)?;
        e = step.ensemble;
        if let Some(d) = step.diagnostics {
            debug!(
                "step {k}: gram condition {:.3e}, effective rank {}",
                d.condition, d.effective_rank
            );
            worst = Some(match worst {
                Some(w) => SolveDiagnostics {
                    condition: if d.condition > w.condition || d.condition.is_nan() {
                        d.condition
                    } else {
                        w.condition
                    },
                    effective_rank: w.effective_rank.min(d.effective_rank),
                },
                None => d,
            });
        }
        if k % cfg.stride == 0 {
            let t = k as f64 * cfg.dt;
            observables.push(ensemble_record(&e, t, p, solver)?);
            let d = worst.take().expect("nonlinear stage ran");
            diagnostics.push(DiagnosticRecord {
                t,
                gram_condition: d.condition,
                effective_rank: d.effective_rank,
            });
        }
    }
    Ok(BubbleRun {
        observables,
        diagnostics,
        last: e,
    })
}

struct SpectralRun {
    observables: Vec<ObservableRecord>,
    last: GridField,
    aliasing_warned: bool,
}

fn run_spectral(f0: GridField, solver: &SpectralSolver, cfg: &RunConfig) -> Result<SpectralRun> {
    let n = cfg.step_count();
    let p = params(cfg);
    let record = |f: &GridField, t: f64| check_record(grid_moments(f, solver)?.record(t, p), "spectral observables");
    let mut aliasing_warned = false;
    let mut check_aliasing = |f: &GridField, t: f64| -> Result<()> {
        let frac = solver.high_frequency_fraction(f)?;
        if !aliasing_warned && frac > ALIASING_THRESHOLD {
            warn!("spectral field carries {frac:.2e} of its mass in the top third of wavenumbers at t = {t}; expect aliasing");
            aliasing_warned = true;
        }
        Ok(())
    };
    check_aliasing(&f0, 0.0)?;
    let mut observables = vec![record(&f0, 0.0)?];
    let mut f = f0;
    for k in 1..=n {
        f = solver.strang_step(&f, cfg.dt, cfg.mu, cfg.lambda)?;
        if k % cfg.stride == 0 {
            let t = k as f64 * cfg.dt;
            if !f.is_finite() {
                return Err(Error::NonFinite("spectral field"));
            }
            check_aliasing(&f, t)?;
            observables.push(record(&f, t)?);
        }
    }
    Ok(SpectralRun {
        observables,
        last: f,
        aliasing_warned,
    })
}

/// Runs the configured solvers without touching the file system.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (ensemble, initial): (BubbleEnsemble, Option<fn(&[f64]) -> Complex64>) = match cfg.testcase {
        TestCase::Preset(id) => {
            let tc = load_test_case(id)?;
            (tc.ensemble, Some(tc.initial))
        }
        TestCase::Custom => (cfg.custom_ensemble()?, None),
    };
    let grid = if cfg.d <= 2 { Some(run_grid(cfg)?) } else { None };
    let solver = grid.clone().map(SpectralSolver::new);
    info!(
        "{} run: d = {}, {} steps of {}, mu = {}, lambda = {}, {} bubbles",
        cfg.method,
        cfg.d,
        cfg.step_count(),
        cfg.dt,
        cfg.mu,
        cfg.lambda,
        ensemble.len()
    );

    let bubbles = if cfg.method.uses_bubbles() {
        Some(run_bubbles(&ensemble, cfg, solver.as_ref())?)
    } else {
        None
    };
    let spectral = if cfg.method.uses_spectral() {
        let solver = solver.as_ref().expect("validated: spectral runs have a grid");
        // exact initial data when available, not a projection of the bubbles
        let f0 = match initial {
            Some(f) => GridField::from_fn(solver.grid().clone(), f),
            None => sample(&ensemble, solver.grid())?,
        };
        Some(run_spectral(f0, solver, cfg)?)
    } else {
        None
    };

    let (bubble_observables, diagnostics, final_bubbles) = match bubbles {
        Some(b) => (Some(b.observables), b.diagnostics, Some(b.last)),
        None => (None, Vec::new(), None),
    };
    let (spectral_observables, final_spectral, aliasing_warned) = match spectral {
        Some(s) => (Some(s.observables), Some(s.last), s.aliasing_warned),
        None => (None, None, false),
    };
    Ok(RunOutput {
        bubble_observables,
        spectral_observables,
        diagnostics,
        final_bubbles,
        final_spectral,
        grid,
        aliasing_warned,
    })
}

/// [`simulate`] followed by writing every artifact under `cfg.output`.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunOutput> {
    let out = simulate(cfg)?;
    write_outputs(cfg, &out)?;
    Ok(out)
}
