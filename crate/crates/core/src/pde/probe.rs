use rayon::prelude::*;
use serde::Serialize;

use super::{solve_semilinear, Boundary, PdeGrid, PdeSolution};
use crate::error::{Error, Result};
use crate::problems::{BsdeProblem, ForwardSde, GeneratorSpec, SdeCoefficients, TerminalSpec};
use crate::solver::{solve, SolverConfig};
use crate::stochastic::{PathEnsemble, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkReport {
    pub x0: f64,
    pub u_pde: f64,
    pub y0_mc: f64,
    pub mc_stderr: f64,
    pub discrepancy: f64,
    /// `max(2%·|u_pde|, 3·stderr)`.
    pub tolerance: f64,
    /// `|u(0, x₀)|` change when the domain width doubles at fixed `Δx`.
    pub boundary_influence: f64,
    pub pass: bool,
}

/// Compares the Monte Carlo value `Y₀` of the Markovian problem started at
/// `x₀` with the finite-difference value `u(0, x₀)`.
pub fn fk_cross_validate(
    problem: &BsdeProblem,
    coeffs: &SdeCoefficients,
    grid: &PdeGrid,
    mc: &SolverConfig,
    x0: f64,
) -> Result<FkReport> {
    grid.validate()?;
    if !(x0 >= grid.x_min && x0 <= grid.x_max) {
        return Err(Error::invalid(format!(
            "x0 = {x0} lies outside the PDE domain [{}, {}]",
            grid.x_min, grid.x_max
        )));
    }
    if problem.dim != 1 {
        return Err(Error::invalid("Feynman-Kac cross-validation needs d = 1"));
    }
    if (grid.horizon - mc.horizon).abs() > 1e-12 * grid.horizon {
        return Err(Error::invalid("PDE and Monte Carlo horizons differ"));
    }
    let floor = mc.floor_for(problem)?;
    let markov = problem.clone().with_forward(ForwardSde {
        coeffs: coeffs.clone(),
        x0,
    })?;

    let wide = {
        let half = grid.x_max - grid.x_min;
        let mid = 0.5 * (grid.x_min + grid.x_max);
        PdeGrid {
            x_min: mid - half,
            x_max: mid + half,
            n_x: 2 * grid.n_x,
            ..grid.clone()
        }
    };
    let pdes: Vec<Result<PdeSolution>> = [grid, &wide]
        .par_iter()
        .map(|g| solve_semilinear(&problem.generator, &problem.terminal, coeffs, g, floor))
        .collect();
    let mut it = pdes.into_iter();
    let (base, doubled) = (it.next().unwrap()?, it.next().unwrap()?);
    let u_pde = base.value_at(0, x0)?;
    let boundary_influence = (doubled.value_at(0, x0)? - u_pde).abs();

    let paths = PathEnsemble::sample(&TimeGrid::new(mc.horizon, mc.n_steps)?, 1, mc.n_paths, mc.seed)?;
    let sol = solve(&markov, &paths, mc)?;
    let discrepancy = (u_pde - sol.y0).abs();
    let tolerance = (0.02 * u_pde.abs()).max(3.0 * sol.y0_stderr);
    Ok(FkReport {
        x0,
        u_pde,
        y0_mc: sol.y0,
        mc_stderr: sol.y0_stderr,
        discrepancy,
        tolerance,
        boundary_influence,
        pass: discrepancy <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeCase {
    pub boundary: String,
    pub n_x: usize,
    pub n_t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDiscrepancy {
    pub a: usize,
    pub b: usize,
    /// Largest relative gap `|u_a − u_b| / max(|u_a|, |u_b|)`.
    pub max_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub cases: Vec<ProbeCase>,
    /// Every pair, compared at `t = 0` on the interior coarse nodes.
    pub pairs: Vec<PairDiscrepancy>,
    pub max_discrepancy: f64,
}

impl UniquenessReport {
    pub fn discrepancy(&self, a: usize, b: usize) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| (p.a, p.b) == (a.min(b), a.max(b)))
            .map(|p| p.max_rel)
    }

    /// For each boundary policy, discrepancies between consecutive
    /// resolutions in increasing order of `n_x`.
    pub fn refinement_sequence(&self, boundary: &str) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..self.cases.len())
            .filter(|&i| self.cases[i].boundary == boundary)
            .collect();
        idx.sort_by_key(|&i| (self.cases[i].n_x, self.cases[i].n_t));
        idx.windows(2).filter_map(|w| self.discrepancy(w[0], w[1])).collect()
    }

    /// Gap between the two boundary policies at each shared resolution.
    pub fn policy_gaps(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (i, a) in self.cases.iter().enumerate() {
            for (j, b) in self.cases.iter().enumerate().skip(i + 1) {
                if a.boundary != b.boundary && (a.n_x, a.n_t) == (b.n_x, b.n_t) {
                    out.push((a.n_x, self.discrepancy(i, j).unwrap()));
                }
            }
        }
        out.sort_by_key(|g| g.0);
        out
    }
}

/// Solves on every grid and reports pairwise `t = 0` discrepancies on the
/// central half of the coarsest grid. Small, shrinking discrepancies support
/// (never prove) uniqueness of the limit.
pub fn uniqueness_probe(
    f: &GeneratorSpec,
    psi: &TerminalSpec,
    coeffs: &SdeCoefficients,
    grids: &[PdeGrid],
    floor: f64,
) -> Result<UniquenessReport> {
    let mut resolutions: Vec<(usize, usize)> = grids.iter().map(|g| (g.n_x, g.n_t)).collect();
    resolutions.sort_unstable();
    resolutions.dedup();
    if resolutions.len() < 2 {
        return Err(Error::invalid("uniqueness probe needs at least two grid resolutions"));
    }
    let policies: std::collections::BTreeSet<&str> = grids.iter().map(|g| g.boundary.name()).collect();
    if policies.len() < 2 {
        return Err(Error::invalid("uniqueness probe needs both boundary policies"));
    }
    let coarse = grids.iter().min_by_key(|g| g.n_x).unwrap();
    let (lo, hi) = {
        let q = 0.25 * (coarse.x_max - coarse.x_min);
        (coarse.x_min + q, coarse.x_max - q)
    };
    let nodes: Vec<f64> = (0..=coarse.n_x)
        .map(|j| coarse.x(j))
        .filter(|&x| x >= lo && x <= hi)
        .collect();

    let sols: Vec<Result<PdeSolution>> = grids
        .par_iter()
        .map(|g| solve_semilinear(f, psi, coeffs, g, floor))
        .collect();
    let sols: Vec<PdeSolution> = sols.into_iter().collect::<Result<_>>()?;
    let profiles: Vec<Vec<f64>> = sols
        .iter()
        .map(|s| nodes.iter().map(|&x| s.value_at(0, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut pairs = Vec::new();
    for a in 0..grids.len() {
        for b in a + 1..grids.len() {
            let max_rel = profiles[a]
                .iter()
                .zip(&profiles[b])
                .map(|(u, v)| (u - v).abs() / u.abs().max(v.abs()).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            pairs.push(PairDiscrepancy { a, b, max_rel });
        }
    }
    let max_discrepancy = pairs.iter().map(|p| p.max_rel).fold(0.0, f64::max);
    Ok(UniquenessReport {
        cases: grids
            .iter()
            .map(|g| ProbeCase {
                boundary: g.boundary.name().to_string(),
                n_x: g.n_x,
                n_t: g.n_t,
            })
            .collect(),
        pairs,
        max_discrepancy,
    })
}

/// Grids at `n`, `2n`, `4n`, ... for both boundary policies.
pub fn probe_grids(base: &PdeGrid, dirichlet: Boundary, levels: usize) -> Vec<PdeGrid> {
    let mut out = Vec::new();
    for l in 0..levels {
        let g = base.refined(1 << l);
        out.push(g.with_boundary(dirichlet.clone()));
        out.push(g.with_boundary(Boundary::LogLinear));
    }
    out
}
