use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{BsdeProblem, GeneratorSpec, TerminalSpec};
use crate::solver::{simulate_state, solve, SolverConfig};
use crate::stochastic::PathEnsemble;

/// Data `(ξₙ, fₙ)` converging to the base problem as `n` grows.
#[derive(Debug, Clone)]
pub struct PerturbationSequence {
    pub base: BsdeProblem,
    pub ns: Vec<usize>,
    pub terminals: Vec<TerminalSpec>,
    pub generators: Vec<GeneratorSpec>,
    pub note: String,
}

impl PerturbationSequence {
    /// `ξₙ = ξ(1 + 1/n)`, `fₙ = f`.
    pub fn scaled_terminals(base: &BsdeProblem, ns: &[usize]) -> Self {
        Self {
            base: base.clone(),
            ns: ns.to_vec(),
            terminals: ns.iter().map(|&n| base.terminal.scaled(1.0 + 1.0 / n as f64)).collect(),
            generators: vec![base.generator.clone(); ns.len()],
            note: "xi_n = xi (1 + 1/n)".into(),
        }
    }

    /// `ξₙ = ξ`, `fₙ = f + 1/n`.
    pub fn shifted_generators(base: &BsdeProblem, ns: &[usize]) -> Self {
        let generators = ns
            .iter()
            .map(|&n| {
                let shift = 1.0 / n as f64;
                let f = base.generator.func().clone();
                let mut g = GeneratorSpec::custom(format!("{} + 1/{n}", base.generator.label()), move |t, x, y, z| {
                    f(t, x, y, z) + shift
                })
                .with_flags(base.generator.convex_in_yz(), base.generator.nonnegative());
                if let Some(d) = base.generator.singular_delta() {
                    g = g.with_singular_delta(d);
                }
                g
            })
            .collect();
        Self {
            base: base.clone(),
            ns: ns.to_vec(),
            terminals: vec![base.terminal.clone(); ns.len()],
            generators,
            note: "f_n = f + 1/n".into(),
        }
    }

    pub fn member(&self, k: usize) -> Result<BsdeProblem> {
        let mut p = BsdeProblem::new(self.generators[k].clone(), self.terminals[k].clone(), self.base.dim)?;
        p.forward = self.base.forward.clone();
        Ok(p.with_label(format!("{} [n={}]", self.base.label, self.ns[k])))
    }

    /// Length, increasing `n`, and `|ξₙ − ξ|` non-increasing in `n` on the
    /// terminal states of `paths`.
    pub fn validate(&self, paths: &PathEnsemble) -> Result<()> {
        if self.ns.len() < 4 {
            return Err(Error::invalid("a perturbation sequence needs at least four members"));
        }
        if self.terminals.len() != self.ns.len() || self.generators.len() != self.ns.len() {
            return Err(Error::invalid("sequence members have inconsistent lengths"));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sequence indices must increase"));
        }
        let state = simulate_state(&self.base, paths)?;
        let last = state.n_times() - 1;
        for p in 0..state.n_paths() {
            let x = state.row(p, last);
            let xi = self.base.terminal.eval(x);
            let gaps: Vec<f64> = self.terminals.iter().map(|t| (t.eval(x) - xi).abs()).collect();
            if gaps.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-300) {
                return Err(Error::Invariant(format!(
                    "|xi_n - xi| is not decreasing at {x:?}: {gaps:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Checks midpoint convexity of `f` in `(y, z)` on `n` random segments with
/// `y ∈ [1e-2, 1e2]`. Sampling can refute convexity, never certify it.
pub fn sample_convexity(f: &GeneratorSpec, horizon: f64, d: usize, n: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = vec![0.0; d];
    let draw = |rng: &mut ChaCha8Rng| {
        let y = 10f64.powf(rng.random_range(-2.0..2.0));
        let z: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        (y, z)
    };
    (0..n).all(|_| {
        let t = rng.random_range(0.0..=horizon);
        let (y1, z1) = draw(&mut rng);
        let (y2, z2) = draw(&mut rng);
        let zm: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| 0.5 * (a + b)).collect();
        let mid = f.eval(t, &x, 0.5 * (y1 + y2), &zm);
        let avg = 0.5 * (f.eval(t, &x, y1, &z1) + f.eval(t, &x, y2, &z2));
        mid <= avg + 1e-10 * (1.0 + avg.abs())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub note: String,
    pub ns: Vec<usize>,
    /// `eₙ = max_i mean_paths |Yⁿ_i − Y_i|`.
    pub errors: Vec<f64>,
    /// `sqrt(mean_paths Σ_i |Zⁿ_i − Z_i|² Δt)`; reported when `δ < 1`.
    pub z_errors: Option<Vec<f64>>,
    pub monotone: bool,
    pub z_monotone: Option<bool>,
    /// `e_last / e_first`.
    pub contraction: f64,
    pub convexity_sampled: bool,
    pub pass: bool,
}

fn monotone_within(v: &[f64], band: f64) -> bool {
    v.windows(2).all(|w| w[1] <= band * w[0])
}

/// Solves the base problem and every member on one ensemble.
pub fn stability_battery(
    seq: &PerturbationSequence,
    paths: &PathEnsemble,
    config: &SolverConfig,
) -> Result<StabilityReport> {
    seq.validate(paths)?;
    let base = solve(&seq.base, paths, config)?;
    let delta = seq.base.generator.singular_delta().unwrap_or(0.0);
    let report_z = delta < 1.0;
    let dt = base.grid.dt();
    let mut errors = Vec::new();
    let mut z_errors = Vec::new();
    let mut convex = true;
    for k in 0..seq.ns.len() {
        let member = seq.member(k)?;
        convex &= sample_convexity(
            &member.generator,
            config.horizon,
            member.dim,
            2_000,
            config.seed ^ k as u64,
        );
        let sol = solve(&member, paths, config)?;
        let e = (0..sol.y.n_times())
            .map(|i| {
                let a = sol.y.at(i);
                let b = base.y.at(i);
                a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum::<f64>() / a.len() as f64
            })
            .fold(0.0, f64::max);
        errors.push(e);
        if report_z {
            let n_paths = sol.z.n_paths();
            let mut acc = 0.0;
            for i in 0..sol.z.n_times() {
                acc += sol
                    .z
                    .at(i)
                    .iter()
                    .zip(base.z.at(i))
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    * dt;
            }
            z_errors.push((acc / n_paths as f64).sqrt());
        }
    }
    let monotone = monotone_within(&errors, 1.2);
    let contraction = errors.last().unwrap() / errors[0];
    let z_monotone = report_z.then(|| monotone_within(&z_errors, 1.2));
    let pass = monotone && contraction <= 0.1 && z_monotone.unwrap_or(true);
    Ok(StabilityReport {
        note: seq.note.clone(),
        ns: seq.ns.clone(),
        errors,
        z_errors: report_z.then_some(z_errors),
        monotone,
        z_monotone,
        contraction,
        convexity_sampled: convex,
        pass,
    })
}
