use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{
    norm_sq, BsdeProblem, EnvelopeSpec, ForwardSde, GeneralizedEnvelope, GeneratorSpec, SdeCoefficients, TerminalSpec,
    TimeFn,
};
use crate::solver::{solve, BackwardSolution, SolverConfig};
use crate::stochastic::{PathEnsemble, PathField};
use crate::transforms::{GeneralizedTransforms, PhiProfile, PsiProfile};

/// Aggregator `F(t, y)`, evaluated for `y < 0`.
pub type Aggregator = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Lower envelope `F(t, y) ≥ −α − β·φ(−y)`.
#[derive(Debug, Clone)]
pub struct SduEnvelope {
    pub alpha: f64,
    pub beta: f64,
    pub phi: PhiProfile,
}

impl SduEnvelope {
    pub fn zero() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            phi: PhiProfile::Identity,
        }
    }
}

/// Robust recursive utility with aggregator `F`, ambiguity profile `ψ`
/// (aversion level `1/ψ`) and a bounded terminal utility
/// `terminal_min ≤ ξ < −margin`.
#[derive(Clone)]
pub struct RobustSduSpec {
    pub label: String,
    pub aggregator: Aggregator,
    pub psi: PsiProfile,
    pub terminal: TerminalSpec,
    pub margin: f64,
    pub terminal_min: f64,
    pub envelope: SduEnvelope,
}

impl fmt::Debug for RobustSduSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RobustSduSpec")
            .field("label", &self.label)
            .field("psi", &self.psi)
            .field("terminal", &self.terminal.label())
            .field("margin", &self.margin)
            .field("terminal_min", &self.terminal_min)
            .field("envelope", &self.envelope)
            .finish()
    }
}

impl RobustSduSpec {
    pub fn new(
        label: impl Into<String>,
        aggregator: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        psi: PsiProfile,
        terminal: TerminalSpec,
        margin: f64,
        terminal_min: f64,
        envelope: SduEnvelope,
    ) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(Error::invalid(format!("margin D must be positive, got {margin}")));
        }
        if !(terminal_min < -margin) || !terminal_min.is_finite() {
            return Err(Error::invalid(format!(
                "terminal band [{terminal_min}, {}) is empty or unbounded",
                -margin
            )));
        }
        GeneralizedTransforms::new(envelope.phi.clone(), psi.clone())?;
        Ok(Self {
            label: label.into(),
            aggregator: Arc::new(aggregator),
            psi,
            terminal,
            margin,
            terminal_min,
            envelope,
        })
    }

    /// `F ≡ 0`.
    pub fn without_aggregator(psi: PsiProfile, terminal: TerminalSpec, margin: f64, terminal_min: f64) -> Result<Self> {
        Self::new(
            "F=0",
            |_, _| 0.0,
            psi,
            terminal,
            margin,
            terminal_min,
            SduEnvelope::zero(),
        )
    }

    /// `−min(e^{σW_T}, cap) − margin`, bounded in `[−cap − margin, −margin)`.
    pub fn capped_exponential_terminal(sigma: f64, cap: f64, margin: f64) -> TerminalSpec {
        TerminalSpec::custom(
            format!("-min(exp({sigma}W),{cap})-{margin}"),
            move |x| -(sigma * x[0]).exp().min(cap) - margin,
            None,
        )
    }

    #[inline]
    pub fn aggregate(&self, t: f64, y: f64) -> f64 {
        (self.aggregator)(t, y)
    }

    /// Right end of the sampled `y`-band: the comparison bound
    /// `(|ξ|_∞ + αT)e^{βT}` for `−V` (exact for linear `φ`), with 50% slack.
    fn band_hi(&self, horizon: f64) -> f64 {
        1.5 * (self.terminal_min.abs() + horizon * self.envelope.alpha) * (self.envelope.beta * horizon).exp()
    }

    /// Checks `terminal_min ≤ ξ < −D` on the ensemble and
    /// `−α − βφ(−y) ≤ F(t,y) ≤ 0` on `n` sampled `(t, y)` with
    /// `y ∈ [−y_hi, −D]`.
    pub fn check(&self, paths: &PathEnsemble, n: usize, seed: u64) -> Result<()> {
        let grid = paths.grid();
        let last = paths.positions().at(grid.n_steps());
        let d = paths.dim();
        for row in last.chunks(d) {
            let v = self.terminal.eval(row);
            if !(v < -self.margin) || v < self.terminal_min {
                return Err(Error::Invariant(format!(
                    "{}: terminal sample {v} outside [{}, {})",
                    self.label, self.terminal_min, -self.margin
                )));
            }
        }
        let horizon = grid.horizon();
        let (lo, hi) = (self.margin.ln(), self.band_hi(horizon).ln());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n {
            let t = rng.random::<f64>() * horizon;
            let y = -(lo + rng.random::<f64>() * (hi - lo)).exp();
            let f = self.aggregate(t, y);
            let lower = -self.envelope.alpha - self.envelope.beta * self.envelope.phi.phi(-y);
            if !f.is_finite() || f > 1e-12 || f < lower - 1e-9 * (1.0 + lower.abs()) {
                return Err(Error::Invariant(format!(
                    "{}: F({t}, {y}) = {f} outside [{lower}, 0]",
                    self.label
                )));
            }
        }
        Ok(())
    }

    /// Sign-flipped problem for `(V̄, M̄) = (−V, −M)`: generator
    /// `−F(t, −ȳ) + |z̄|²/(2ψ(ȳ))`, terminal `−ξ > D`.
    pub fn reflected_problem(&self, dim: usize) -> Result<BsdeProblem> {
        let (agg, psi) = (self.aggregator.clone(), self.psi.clone());
        let transforms = GeneralizedTransforms::new(self.envelope.phi.clone(), self.psi.clone())?;
        let mut g = GeneratorSpec::custom(format!("reflected({})", self.label), move |t, _x, y, z| {
            -agg(t, -y) + norm_sq(z) / (2.0 * psi.psi(y))
        })
        .with_envelope(EnvelopeSpec::Generalized(GeneralizedEnvelope {
            a: TimeFn::Constant(self.envelope.alpha),
            b: TimeFn::Constant(self.envelope.beta),
            gamma: TimeFn::zero(),
            transforms,
        }));
        if let PsiProfile::Linear { slope } = self.psi {
            g = g.with_singular_delta(1.0 / slope);
        }
        let terminal = self
            .terminal
            .mapped(format!("-({})", self.terminal.label()), |v| -v)
            .with_lower_bound(self.margin);
        Ok(BsdeProblem::new(g, terminal, dim)?.with_label(format!("sdu:{}", self.label)))
    }
}

/// `V = −V̄`, `M = −M̄` together with the reflected solve.
#[derive(Debug, Clone)]
pub struct SduSolution {
    pub reflected: BackwardSolution,
    pub v: PathField,
    pub m: PathField,
    pub v0: f64,
    pub v0_stderr: f64,
}

fn negated(f: &PathField) -> PathField {
    PathField::from_time_major(
        f.n_paths(),
        f.n_times(),
        f.width(),
        f.as_slice().iter().map(|v| -v).collect(),
    )
}

/// Solves `V_t = ξ + ∫(F(r,V) − |M|²/(2ψ(−V)))dr − ∫M dW` through the
/// reflected positive problem.
pub fn solve_sdu(spec: &RobustSduSpec, paths: &PathEnsemble, config: &SolverConfig) -> Result<SduSolution> {
    spec.check(paths, 10_000, config.seed)?;
    let problem = spec.reflected_problem(paths.dim())?;
    let sol = solve(&problem, paths, config)?;
    if sol.diagnostics.floor_activations > 0 || sol.y.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Invariant(format!(
            "{}: -V reached the floor on {} path-steps; the problem is outside the positive class",
            spec.label, sol.diagnostics.floor_activations
        )));
    }
    Ok(SduSolution {
        v: negated(&sol.y),
        m: negated(&sol.z),
        v0: -sol.y0,
        v0_stderr: sol.y0_stderr,
        reflected: sol,
    })
}

/// Scalar Girsanov drift `x(t, w)` with a declared bound on `|x|`.
#[derive(Clone)]
pub struct DistortionProcess {
    pub label: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub bound: f64,
    pub note: String,
}

impl fmt::Debug for DistortionProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistortionProcess")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .finish()
    }
}

impl DistortionProcess {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, bound: f64) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            bound,
            note: "bounded drift".into(),
        }
    }

    pub fn zero() -> Self {
        Self::new("0", |_, _| 0.0, 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_, _| c, c.abs())
    }

    #[inline]
    pub fn eval(&self, t: f64, w: f64) -> f64 {
        (self.f)(t, w)
    }

    /// Samples `|x| ≤ bound` on `[0, horizon] × [w_min, w_max]`.
    pub fn check(&self, horizon: f64, w_min: f64, w_max: f64, n: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n {
            let t = rng.random::<f64>() * horizon;
            let w = w_min + rng.random::<f64>() * (w_max - w_min);
            let v = self.eval(t, w);
            if !(v.abs() <= self.bound * (1.0 + 1e-12)) {
                return Err(Error::Invariant(format!(
                    "distortion {}: |x({t}, {w})| = {} exceeds bound {}",
                    self.label,
                    v.abs(),
                    self.bound
                )));
            }
        }
        Ok(())
    }

    /// `a + b·sin(k·w + c·t + φ)` with `|a| + |b| ≤ bound`.
    pub fn random(rng: &mut impl Rng, bound: f64, index: usize) -> Self {
        let a = (rng.random::<f64>() - 0.5) * bound;
        let b = (rng.random::<f64>() - 0.5) * bound;
        let k = 2.0 * rng.random::<f64>();
        let c = std::f64::consts::TAU * rng.random::<f64>();
        let phase = std::f64::consts::TAU * rng.random::<f64>();
        Self::new(
            format!("draw{index}: {a:.3}{b:+.3}sin({k:.3}w+{c:.3}t+{phase:.3})"),
            move |t, w| a + b * (k * w + c * t + phase).sin(),
            a.abs() + b.abs(),
        )
    }
}

/// `V^x` under the drifted measure.
#[derive(Debug, Clone)]
pub struct PenalizedSolution {
    pub reflected: BackwardSolution,
    pub v: PathField,
    pub v0: f64,
    pub v0_stderr: f64,
}

/// `V^x_t = E^x[ξ + ∫(F + ψ(−V^x)|x|²/2)dr | F_t]`. The state is
/// re-simulated as `W̃_{i+1} = W̃_i + x(t_i, W̃_i)Δt + ΔW_i`, with `ΔW` the
/// Brownian increment under the new measure, and the penalized BSDE
/// is solved on it.
pub fn evaluate_penalized(
    spec: &RobustSduSpec,
    x: &DistortionProcess,
    paths: &PathEnsemble,
    config: &SolverConfig,
) -> Result<PenalizedSolution> {
    if paths.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "drift distortions act on a scalar state; got d = {}",
            paths.dim()
        )));
    }
    let (agg, psi) = (spec.aggregator.clone(), spec.psi.clone());
    let xf = x.clone();
    let g = GeneratorSpec::custom(format!("penalized({}, {})", spec.label, x.label), move |t, w, y, _z| {
        let y = y.max(f64::MIN_POSITIVE);
        let xv = xf.eval(t, w[0]);
        -agg(t, -y) - psi.psi(y) * xv * xv / 2.0
    });
    let xd = x.clone();
    let coeffs = SdeCoefficients::new(
        format!("drift({})", x.label),
        move |t, w| xd.eval(t, w),
        |_, _| 1.0,
        x.bound + 1.0,
    );
    let terminal = spec.terminal.mapped(format!("-({})", spec.terminal.label()), |v| -v);
    let problem = BsdeProblem::new(g, terminal, 1)?.with_forward(ForwardSde { coeffs, x0: 0.0 })?;
    let sol = solve(&problem, paths, config)?;
    Ok(PenalizedSolution {
        v: negated(&sol.y),
        v0: -sol.y0,
        v0_stderr: sol.y0_stderr,
        reflected: sol,
    })
}

/// `x̂ = −M/ψ(−V)` pointwise.
#[inline]
pub fn distortion_at(v: f64, m: f64, psi: &PsiProfile) -> f64 {
    -m / psi.psi(-v)
}

/// Pathwise `x̂` on the solve ensemble and as a process of `(t, w)`.
#[derive(Debug, Clone)]
pub struct OptimalDistortion {
    pub field: PathField,
    pub process: DistortionProcess,
}

/// `x̂ = M̄/ψ(V̄)` from the regression functions of the reflected solve.
/// Off-ensemble evaluations are clamped to the largest `|x̂|` seen on the
/// ensemble, which becomes the declared bound.
pub fn optimal_distortion(sol: &SduSolution, psi: &PsiProfile) -> Result<OptimalDistortion> {
    let r = &sol.reflected;
    if r.dim() != 1 {
        return Err(Error::Unsupported("optimal distortion is built for d = 1".into()));
    }
    let n = r.grid.n_steps();
    let np = r.n_paths();
    let mut field = PathField::zeros(np, n, 1);
    let mut bound = 0.0f64;
    for i in 0..n {
        for p in 0..np {
            let x = distortion_at(sol.v.get(p, i, 0), sol.m.get(p, i, 0), psi);
            bound = bound.max(x.abs());
            field.set(p, i, 0, x);
        }
    }
    if !bound.is_finite() {
        return Err(Error::NonFinite {
            context: "optimal distortion".into(),
        });
    }
    let model = r.clone();
    let psi = psi.clone();
    let dt = r.grid.dt();
    let process = DistortionProcess::new(
        "x_hat",
        move |t, w| {
            let i = ((t / dt).round() as usize).min(n - 1);
            let x = [w];
            let y = model.value_at(i, &x).max(f64::MIN_POSITIVE);
            (model.z_at(i, &x)[0] / psi.psi(y)).clamp(-bound, bound)
        },
        bound,
    );
    Ok(OptimalDistortion { field, process })
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionRow {
    pub label: String,
    pub v0_x: f64,
    pub v0_x_stderr: f64,
    /// `V₀^x + 3·se − V₀`; non-negative when the infimum property holds.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessReport {
    pub v0: f64,
    pub v0_stderr: f64,
    pub rows: Vec<DistortionRow>,
    pub v0_hat: f64,
    pub v0_hat_stderr: f64,
    pub closure_discrepancy: f64,
    pub closure_tolerance: f64,
    pub closure_pass: bool,
    pub pass: bool,
}

/// Solves the robust problem, evaluates `draws` random bounded distortions
/// (`|x| ≤ bound`) and the optimal one, all on the same ensemble.
pub fn robustness_battery(
    spec: &RobustSduSpec,
    paths: &PathEnsemble,
    config: &SolverConfig,
    draws: usize,
    bound: f64,
) -> Result<RobustnessReport> {
    let sol = solve_sdu(spec, paths, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5d0);
    let xs: Vec<DistortionProcess> = (0..draws)
        .map(|k| DistortionProcess::random(&mut rng, bound, k))
        .collect();
    let rows = xs
        .par_iter()
        .map(|x| {
            let pen = evaluate_penalized(spec, x, paths, config)?;
            let se = sol.v0_stderr.hypot(pen.v0_stderr);
            let slack = pen.v0 + 3.0 * se - sol.v0;
            Ok(DistortionRow {
                label: x.label.clone(),
                v0_x: pen.v0,
                v0_x_stderr: pen.v0_stderr,
                slack,
                pass: slack >= 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let hat = optimal_distortion(&sol, &spec.psi)?;
    let pen = evaluate_penalized(spec, &hat.process, paths, config)?;
    let closure_discrepancy = (pen.v0 - sol.v0).abs();
    let closure_tolerance = (0.02 * sol.v0.abs()).max(3.0 * sol.v0_stderr.hypot(pen.v0_stderr));
    let closure_pass = closure_discrepancy <= closure_tolerance;
    Ok(RobustnessReport {
        v0: sol.v0,
        v0_stderr: sol.v0_stderr,
        pass: closure_pass && rows.iter().all(|r| r.pass),
        rows,
        v0_hat: pen.v0,
        v0_hat_stderr: pen.v0_stderr,
        closure_discrepancy,
        closure_tolerance,
        closure_pass,
    })
}

/// Epstein-Zin aggregator
/// `F(t,V) = (1/(1−ρ))·{c_t^{1−ρ}/((1−γ)V)^{(γ−ρ)/(1−γ)} − η(1−γ)V}`.
#[derive(Debug, Clone)]
pub struct EpsteinZin {
    pub rho: f64,
    pub gamma: f64,
    pub eta: f64,
    pub consumption: TimeFn,
}

pub fn epstein_zin_generator(rho: f64, gamma: f64, eta: f64, consumption: TimeFn) -> Result<EpsteinZin> {
    if !(rho > 1.0) || !(gamma > 1.0) {
        return Err(Error::invalid(format!(
            "need rho > 1 and gamma > 1, got rho={rho}, gamma={gamma}"
        )));
    }
    if !(gamma < rho) {
        return Err(Error::invalid(format!(
            "need gamma < rho, got gamma={gamma}, rho={rho}"
        )));
    }
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("eta must be >= 0, got {eta}")));
    }
    Ok(EpsteinZin {
        rho,
        gamma,
        eta,
        consumption,
    })
}

impl EpsteinZin {
    /// `(γ−ρ)/(1−γ)`, positive under the parameter constraints.
    pub fn exponent(&self) -> f64 {
        (self.gamma - self.rho) / (1.0 - self.gamma)
    }

    /// `c^{1−ρ}`, zero where consumption vanishes (the term is absent).
    fn utility_flow(&self, t: f64) -> f64 {
        let c = self.consumption.at(t);
        if c == 0.0 {
            0.0
        } else {
            c.powf(1.0 - self.rho)
        }
    }

    pub fn eval(&self, t: f64, v: f64) -> f64 {
        let w = (1.0 - self.gamma) * v;
        let flow = self.utility_flow(t);
        let cons = if flow == 0.0 {
            0.0
        } else {
            flow / w.powf(self.exponent())
        };
        (cons - self.eta * w) / (1.0 - self.rho)
    }

    /// `ψ(x) = ((γ−1)/(ρ−γ))·x`.
    pub fn psi(&self) -> PsiProfile {
        PsiProfile::Linear {
            slope: (self.gamma - 1.0) / (self.rho - self.gamma),
        }
    }

    /// `α = sup_t c^{1−ρ}·((γ−1)D)^{−e}/(ρ−1)`, `β = 0`: valid on `y ≤ −D`,
    /// where `w = (1−γ)y ≥ (γ−1)D` and the `η`-term only raises `F`.
    pub fn envelope(&self, margin: f64, horizon: f64) -> Result<SduEnvelope> {
        let sup_flow = (0..=1000)
            .map(|k| self.utility_flow(horizon * k as f64 / 1000.0))
            .fold(0.0f64, f64::max);
        if !sup_flow.is_finite() {
            return Err(Error::invalid("consumption utility flow c^(1-rho) is unbounded"));
        }
        Ok(SduEnvelope {
            alpha: sup_flow * ((self.gamma - 1.0) * margin).powf(-self.exponent()) / (self.rho - 1.0),
            beta: 0.0,
            phi: PhiProfile::Identity,
        })
    }

    /// Robust spec with this aggregator, its `ψ` and derived envelope.
    pub fn spec(&self, terminal: TerminalSpec, margin: f64, terminal_min: f64, horizon: f64) -> Result<RobustSduSpec> {
        let ez = self.clone();
        RobustSduSpec::new(
            format!("epstein-zin(rho={},gamma={},eta={})", self.rho, self.gamma, self.eta),
            move |t, v| ez.eval(t, v),
            self.psi(),
            terminal,
            margin,
            terminal_min,
            self.envelope(margin, horizon)?,
        )
    }
}
