use rayon::prelude::*;
use serde::Serialize;

use super::{SolveMode, SolverConfig};
use crate::error::{Error, Result};
use crate::problems::{BsdeProblem, GeneratorSpec, TerminalSpec};
use crate::stochastic::{FittedFunction, PathEnsemble, PathField, Projector, TimeGrid};
use crate::transforms::{desingularize, BackMap, Transform};

const MODULE: &str = "bsde-solver";

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Number of (path, step) pairs where the positivity floor bound.
    pub floor_activations: usize,
    /// Largest final Picard increment over paths, per step (index = step).
    pub picard_residuals: Vec<f64>,
    pub unconverged_steps: Vec<usize>,
    /// Paths where Picard stalled and a bracketed root solve took over.
    pub root_fallbacks: usize,
    pub condition_numbers: Vec<f64>,
    pub ridge_steps: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct BackwardSolution {
    pub grid: TimeGrid,
    /// `n_paths x (n_steps+1)` scalar field.
    pub y: PathField,
    /// `n_paths x n_steps x d`.
    pub z: PathField,
    /// Regression state at every grid time (`W` or the forward SDE).
    pub state: PathField,
    pub mode: SolveMode,
    pub y0: f64,
    pub y0_stderr: f64,
    pub diagnostics: Diagnostics,
    /// Regression functions per step, for evaluation off the ensemble.
    pub models: Vec<StepModel>,
    evaluator: Evaluator,
}

/// Frozen `E_i[Y_{i+1}]` and `Z_i` as functions of the state.
#[derive(Debug, Clone)]
pub struct StepModel {
    pub cont: FittedFunction,
    pub z: Vec<FittedFunction>,
}

#[derive(Debug, Clone)]
struct Evaluator {
    generator: GeneratorSpec,
    terminal: TerminalSpec,
    floor: Option<f64>,
    back: Option<BackMap>,
    config: SolverConfig,
}

impl BackwardSolution {
    /// `Y_i` at an arbitrary state row, re-solving the implicit step with
    /// the stored regression functions (and mapping back in transform mode).
    pub fn value_at(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.grid.n_steps();
        let ev = &self.evaluator;
        if i >= n {
            return ev.terminal.eval(x);
        }
        let m = &self.models[i];
        let z: Vec<f64> = m.z.iter().map(|f| f.eval(x)).collect();
        let t = self.grid.t(i);
        let step = implicit_step(
            |yv| ev.generator.eval(t, x, yv, &z),
            m.cont.eval(x),
            self.grid.dt(),
            ev.floor,
            &ev.config,
        );
        match &ev.back {
            Some(b) => b.y(step.y),
            None => step.y,
        }
    }

    /// `Z_i` at an arbitrary state row.
    pub fn z_at(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let z0: Vec<f64> = self.models[i].z.iter().map(|f| f.eval(x)).collect();
        match &self.evaluator.back {
            Some(b) => {
                let mut out = vec![0.0; z0.len()];
                b.z_into(self.value_at(i, x), &z0, &mut out);
                out
            }
            None => z0,
        }
    }

    pub fn n_paths(&self) -> usize {
        self.y.n_paths()
    }

    pub fn dim(&self) -> usize {
        self.z.width()
    }

    pub fn is_converged(&self) -> bool {
        self.diagnostics.unconverged_steps.is_empty()
    }
}

/// Regression state per grid time: the Brownian positions, or an
/// Euler-Maruyama discretization of the forward SDE driven by the first
/// Brownian component.
pub fn simulate_state(problem: &BsdeProblem, paths: &PathEnsemble) -> Result<PathField> {
    let Some(fwd) = &problem.forward else {
        return Ok(paths.positions().clone());
    };
    let grid = paths.grid();
    let (n_paths, n) = (paths.n_paths(), grid.n_steps());
    let dt = grid.dt();
    let mut x = PathField::zeros(n_paths, n + 1, 1);
    x.at_mut(0).fill(fwd.x0);
    for i in 0..n {
        let t = grid.t(i);
        let dw = paths.increments().at(i);
        let d = paths.dim();
        let (head, tail) = x.as_mut_split(i);
        for p in 0..n_paths {
            let xi = head[p];
            tail[p] = xi + fwd.coeffs.drift(t, xi) * dt + fwd.coeffs.vol(t, xi) * dw[p * d];
        }
        if tail.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(
                MODULE,
                i + 1,
                "forward SDE produced a non-finite state",
            ));
        }
    }
    Ok(x)
}

/// Solves the problem with the configured mode (`Auto` picks the transform
/// route for singular generators that are exactly their power envelope).
pub fn solve(problem: &BsdeProblem, paths: &PathEnsemble, config: &SolverConfig) -> Result<BackwardSolution> {
    match resolve_mode(problem, config.mode) {
        SolveMode::Transform => solve_via_transform(problem, paths, config),
        _ => solve_backward(problem, paths, config),
    }
}

pub fn resolve_mode(problem: &BsdeProblem, mode: SolveMode) -> SolveMode {
    match mode {
        SolveMode::Auto => {
            let g = &problem.generator;
            if g.is_singular() && g.is_pure_envelope() && problem.terminal.is_positive() {
                SolveMode::Transform
            } else {
                SolveMode::Direct
            }
        }
        m => m,
    }
}

/// Direct backward scheme. The floor `ε` clamps `y` inside singular
/// generators and `Y` itself; regular generators run unclamped.
pub fn solve_backward(problem: &BsdeProblem, paths: &PathEnsemble, config: &SolverConfig) -> Result<BackwardSolution> {
    check_inputs(problem, paths, config)?;
    let singular = problem.generator.is_singular();
    if singular && !problem.terminal.is_positive() {
        return Err(Error::invalid(format!(
            "singular generator needs a strictly positive terminal; {} declares no lower bound c > 0",
            problem.terminal.label()
        )));
    }
    let floor = if singular {
        Some(config.floor_for(problem)?)
    } else {
        None
    };
    let state = simulate_state(problem, paths)?;
    let mut sol = backward_core(problem, paths, state, config, floor)?;
    sol.mode = SolveMode::Direct;
    Ok(sol)
}

/// Desingularizes with `u`, solves the regular problem, then maps
/// `Y = u⁻¹(Y⁰)` and `Z = Z⁰/u'(Y)` path by path.
pub fn solve_via_transform(
    problem: &BsdeProblem,
    paths: &PathEnsemble,
    config: &SolverConfig,
) -> Result<BackwardSolution> {
    check_inputs(problem, paths, config)?;
    let dp = desingularize(problem)?;
    let state = simulate_state(problem, paths)?;
    let inner = backward_core(&dp.problem, paths, state, config, None)?;
    let mut sol = inner.clone();
    let n = paths.n_steps();
    let d = sol.z.width();
    for i in 0..=n {
        let y0 = inner.y.at(i);
        let out = sol.y.at_mut(i);
        for (o, &v) in out.iter_mut().zip(y0) {
            *o = dp.back.y(v);
        }
    }
    // terminal values are set from ξ, not round-tripped through u
    {
        let last = sol.state.at(n).to_vec();
        let w = sol.state.width();
        let out = sol.y.at_mut(n);
        for (p, o) in out.iter_mut().enumerate() {
            *o = problem.terminal.eval(&last[p * w..(p + 1) * w]);
        }
    }
    for i in 0..n {
        let yi = sol.y.at(i).to_vec();
        let z0 = inner.z.at(i);
        let out = sol.z.at_mut(i);
        for p in 0..yi.len() {
            dp.back
                .z_into(yi[p], &z0[p * d..(p + 1) * d], &mut out[p * d..(p + 1) * d]);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(MODULE, i, "back-mapped Z is not finite"));
        }
    }
    sol.y0 = dp.back.y(inner.y0);
    // delta method: sd(Y0) ≈ sd(Y⁰0) / u'(Y0)
    let slope = dp.back.transform().derivative(sol.y0, 1)?;
    sol.y0_stderr = inner.y0_stderr / slope;
    sol.mode = SolveMode::Transform;
    sol.evaluator.back = Some(dp.back);
    sol.evaluator.terminal = problem.terminal.clone();
    Ok(sol)
}

fn check_inputs(problem: &BsdeProblem, paths: &PathEnsemble, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    if paths.n_steps() != config.n_steps {
        return Err(Error::invalid(format!(
            "paths have {} steps but config asks for {}",
            paths.n_steps(),
            config.n_steps
        )));
    }
    if paths.n_paths() != config.n_paths {
        return Err(Error::invalid(format!(
            "paths hold {} samples but config asks for {}",
            paths.n_paths(),
            config.n_paths
        )));
    }
    if (paths.grid().horizon() - config.horizon).abs() > 1e-12 * config.horizon {
        return Err(Error::invalid("path horizon differs from config horizon"));
    }
    if paths.dim() != problem.dim {
        return Err(Error::invalid(format!(
            "problem has d = {} but paths have dimension {}",
            problem.dim,
            paths.dim()
        )));
    }
    Ok(())
}

struct PathStep {
    y: f64,
    residual: f64,
    floored: bool,
    fallback: bool,
    converged: bool,
}

fn backward_core(
    problem: &BsdeProblem,
    paths: &PathEnsemble,
    state: PathField,
    config: &SolverConfig,
    floor: Option<f64>,
) -> Result<BackwardSolution> {
    let grid = paths.grid().clone();
    let (n_paths, n, d) = (paths.n_paths(), grid.n_steps(), paths.dim());
    let dt = grid.dt();
    let w = state.width();
    let gen = &problem.generator;

    let mut y = PathField::zeros(n_paths, n + 1, 1);
    let mut z = PathField::zeros(n_paths, n, d);
    let mut diag = Diagnostics {
        picard_residuals: vec![0.0; n],
        condition_numbers: vec![0.0; n],
        ..Diagnostics::default()
    };

    {
        let xs = state.at(n);
        let out = y.at_mut(n);
        for (p, o) in out.iter_mut().enumerate() {
            *o = problem.terminal.eval(&xs[p * w..(p + 1) * w]);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(MODULE, n, "terminal condition is not finite"));
        }
    }

    // pathwise Σ Δt·f for the Y0 standard error
    let mut drift_sum = vec![0.0; n_paths];
    let mut models = Vec::with_capacity(n);
    let mut target = vec![0.0; n_paths];

    for i in (0..n).rev() {
        let t = grid.t(i);
        let xs = state.at(i);
        let proj = Projector::new(&config.basis, xs, w)
            .map_err(|e| Error::numerical(MODULE, i, format!("regression setup failed: {e}")))?;
        diag.condition_numbers[i] = proj.condition_number();
        if proj.ridge() > 0.0 {
            diag.ridge_steps.push(i);
        }

        let next = y.at(i + 1);
        let (cont, cont_fn) = proj.fit(next).map_err(|e| Error::numerical(MODULE, i, e.to_string()))?;
        let mut z_fns = Vec::with_capacity(d);

        // Z_i = E_i[(Y_{i+1} − E_i Y_{i+1}) ΔW_i] / Δt, component by component
        let dw = paths.increments().at(i);
        let mut zi = vec![0.0; n_paths * d];
        for k in 0..d {
            for p in 0..n_paths {
                target[p] = (next[p] - cont[p]) * dw[p * d + k] / dt;
            }
            let (zk, zf) = proj
                .fit(&target)
                .map_err(|e| Error::numerical(MODULE, i, e.to_string()))?;
            z_fns.push(zf);
            for p in 0..n_paths {
                zi[p * d + k] = zk[p];
            }
        }
        if zi.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(MODULE, i, "Z regression produced NaN or infinity"));
        }

        let steps: Vec<PathStep> = (0..n_paths)
            .into_par_iter()
            .map(|p| {
                let x = &xs[p * w..(p + 1) * w];
                let zp = &zi[p * d..(p + 1) * d];
                implicit_step(|yv| gen.eval(t, x, yv, zp), cont[p], dt, floor, config)
            })
            .collect();

        let mut worst = 0.0f64;
        let mut all_converged = true;
        {
            let out = y.at_mut(i);
            for (p, s) in steps.iter().enumerate() {
                if !s.y.is_finite() {
                    return Err(Error::numerical(
                        MODULE,
                        i,
                        format!("Y became non-finite on path {p} (continuation {})", cont[p]),
                    ));
                }
                out[p] = s.y;
                worst = worst.max(s.residual);
                all_converged &= s.converged;
                diag.floor_activations += s.floored as usize;
                diag.root_fallbacks += s.fallback as usize;
            }
        }
        diag.picard_residuals[i] = worst;
        if !all_converged {
            diag.unconverged_steps.push(i);
        }
        let yi = y.at(i);
        for p in 0..n_paths {
            let x = &xs[p * w..(p + 1) * w];
            let f = gen.eval(t, x, floor.map_or(yi[p], |e| yi[p].max(e)), &zi[p * d..(p + 1) * d]);
            drift_sum[p] += dt * f;
        }
        z.at_mut(i).copy_from_slice(&zi);
        models.push(StepModel {
            cont: cont_fn,
            z: z_fns,
        });
    }
    models.reverse();

    diag.unconverged_steps.sort_unstable();
    diag.ridge_steps.sort_unstable();
    if !diag.unconverged_steps.is_empty() {
        diag.warnings.push(format!(
            "Picard iteration did not reach tolerance at {} step(s); worst residual {:.3e}",
            diag.unconverged_steps.len(),
            diag.picard_residuals.iter().cloned().fold(0.0, f64::max)
        ));
    }
    if diag.floor_activations > 0 {
        diag.warnings
            .push(format!("positivity floor bound {} time(s)", diag.floor_activations));
    }
    if !diag.ridge_steps.is_empty() {
        diag.warnings.push(format!(
            "ridge regularization used at {} step(s)",
            diag.ridge_steps.len()
        ));
    }

    let y0_row = y.at(0);
    let y0 = mean(y0_row);
    let terminal = y.at(n);
    let samples: Vec<f64> = (0..n_paths).map(|p| terminal[p] + drift_sum[p]).collect();
    let y0_stderr = sample_sd(&samples) / (n_paths as f64).sqrt();

    Ok(BackwardSolution {
        grid,
        y,
        z,
        state,
        mode: SolveMode::Direct,
        y0,
        y0_stderr,
        diagnostics: diag,
        models,
        evaluator: Evaluator {
            generator: gen.clone(),
            terminal: problem.terminal.clone(),
            floor,
            back: None,
            config: config.clone(),
        },
    })
}

/// Solves `y = c + Δt·f(y)` by Picard iteration, falling back to a
/// bracketed bisection on the residual when the iteration stalls.
fn implicit_step(f: impl Fn(f64) -> f64, c: f64, dt: f64, floor: Option<f64>, config: &SolverConfig) -> PathStep {
    let clamp = |v: f64| floor.map_or(v, |e| v.max(e));
    let tol = config.picard_tol * c.abs().max(1.0);
    let mut yv = c;
    let mut residual = f64::INFINITY;
    for _ in 0..config.picard_iters {
        let next = c + dt * f(clamp(yv));
        residual = (next - yv).abs();
        yv = next;
        if !(residual > tol) {
            break;
        }
    }
    let mut fallback = false;
    let mut converged = residual <= tol;
    if !converged || !yv.is_finite() {
        if let Some(root) = bracketed_root(&f, c, dt, floor, tol) {
            yv = root.0;
            residual = root.1;
            fallback = true;
            converged = residual <= tol;
        }
    }
    let floored = floor.is_some_and(|e| yv < e);
    PathStep {
        y: clamp(yv),
        residual,
        floored,
        fallback,
        converged,
    }
}

fn bracketed_root(f: &impl Fn(f64) -> f64, c: f64, dt: f64, floor: Option<f64>, tol: f64) -> Option<(f64, f64)> {
    let g = |v: f64| v - c - dt * f(floor.map_or(v, |e| v.max(e)));
    let scale = c.abs().max(1.0);
    let mut lo = floor.unwrap_or(c - scale);
    let mut hi = c + scale;
    let mut glo = g(lo);
    let mut ghi = g(hi);
    let mut width = scale;
    for _ in 0..60 {
        if glo.is_finite() && ghi.is_finite() && glo <= 0.0 && ghi >= 0.0 {
            break;
        }
        width *= 2.0;
        if !(glo <= 0.0) && floor.is_none() {
            lo = c - width;
            glo = g(lo);
        }
        if !(ghi >= 0.0) {
            hi = c + width;
            ghi = g(hi);
        }
    }
    if !(glo <= 0.0 && ghi >= 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if !gm.is_finite() {
            return None;
        }
        if gm <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Some((0.5 * (lo + hi), hi - lo))
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (v.len() as f64 - 1.0).max(1.0)).sqrt()
}

/// Regression standard error of `Y` on every path and grid time, from
/// `batches` disjoint path subsets: each batch is solved on its own, its
/// value functions are evaluated on the full ensemble, and the spread across
/// batches is divided by `sqrt(batches)`.
pub fn batch_stderr(
    problem: &BsdeProblem,
    paths: &PathEnsemble,
    config: &SolverConfig,
    batches: usize,
) -> Result<PathField> {
    if batches < 2 {
        return Err(Error::invalid("need at least two batches"));
    }
    let size = paths.n_paths() / batches;
    if size < 2 {
        return Err(Error::invalid("too few paths per batch"));
    }
    let cfg = SolverConfig {
        n_paths: size,
        ..config.clone()
    };
    let state = simulate_state(problem, paths)?;
    let (n_paths, n_times, w) = (state.n_paths(), state.n_times(), state.width());
    let mut sum = PathField::zeros(n_paths, n_times, 1);
    let mut sum_sq = PathField::zeros(n_paths, n_times, 1);
    for b in 0..batches {
        let sub = paths.subset(b * size..(b + 1) * size);
        let sol = solve(problem, &sub, &cfg)?;
        for i in 0..n_times {
            let xs = state.at(i);
            let vals: Vec<f64> = (0..n_paths)
                .into_par_iter()
                .map(|p| sol.value_at(i, &xs[p * w..(p + 1) * w]))
                .collect();
            for (p, v) in vals.iter().enumerate() {
                let (s, q) = (sum.get(p, i, 0), sum_sq.get(p, i, 0));
                sum.set(p, i, 0, s + v);
                sum_sq.set(p, i, 0, q + v * v);
            }
        }
    }
    let bf = batches as f64;
    let se = PathField::from_fn(n_paths, n_times, |p, i| {
        let m = sum.get(p, i, 0) / bf;
        let var = ((sum_sq.get(p, i, 0) - bf * m * m) / (bf - 1.0)).max(0.0);
        (var / bf).sqrt()
    });
    if !se.all_finite() {
        return Err(Error::NonFinite {
            context: "batch standard errors".into(),
        });
    }
    Ok(se)
}
