//! Least-squares projection onto a finite basis of functions of the path
//! state, the discrete stand-in for the conditional expectation `E[. | F_t]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows per partial sum in the normal-equation reduction. Fixed so that the
/// summation order (and therefore every bit of the result) does not depend
/// on the number of worker threads.
const REDUCTION_CHUNK: usize = 4096;

/// Condition number above which the normal matrix is regularized.
const CONDITION_LIMIT: f64 = 1e12;

/// Relative ridge coefficient: `lambda = RIDGE_SCALE * trace(A) / size`.
pub const RIDGE_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BasisKind {
    /// Hermite polynomials of the standardized state, total degree `<= degree`.
    Polynomial { degree: usize },
    /// Indicators of equal-count bins of the first mapped coordinate.
    PiecewiseConstant { n_bins: usize },
    /// Polynomials of degree `<= degree` on each equal-count bin of the
    /// first mapped coordinate (other coordinates are ignored).
    LocalPolynomial { n_bins: usize, degree: usize },
}

/// Serialized as one flat table: `{ kind, degree?, n_bins?, state_map? }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBasis")]
pub struct RegressionBasis {
    #[serde(flatten)]
    pub kind: BasisKind,
    /// State coordinates that feed the regression.
    pub state_map: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawKind {
    Polynomial,
    PiecewiseConstant,
    LocalPolynomial,
}

// serde cannot combine `flatten` with `deny_unknown_fields`, so the flat
// form is read here and the fields each kind needs are checked by hand
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBasis {
    kind: RawKind,
    degree: Option<usize>,
    n_bins: Option<usize>,
    state_map: Option<Vec<usize>>,
}

impl TryFrom<RawBasis> for RegressionBasis {
    type Error = String;

    fn try_from(r: RawBasis) -> std::result::Result<Self, String> {
        let need = |v: Option<usize>, field: &str, kind: &str| v.ok_or(format!("basis kind `{kind}` needs `{field}`"));
        let kind = match r.kind {
            RawKind::Polynomial => {
                if r.n_bins.is_some() {
                    return Err("basis kind `polynomial` takes no `n_bins`".into());
                }
                BasisKind::Polynomial {
                    degree: need(r.degree, "degree", "polynomial")?,
                }
            }
            RawKind::PiecewiseConstant => {
                if r.degree.is_some() {
                    return Err("basis kind `piecewise-constant` takes no `degree`".into());
                }
                BasisKind::PiecewiseConstant {
                    n_bins: need(r.n_bins, "n_bins", "piecewise-constant")?,
                }
            }
            RawKind::LocalPolynomial => BasisKind::LocalPolynomial {
                n_bins: need(r.n_bins, "n_bins", "local-polynomial")?,
                degree: need(r.degree, "degree", "local-polynomial")?,
            },
        };
        Ok(Self {
            kind,
            state_map: r.state_map.unwrap_or_else(default_state_map),
        })
    }
}

fn default_state_map() -> Vec<usize> {
    vec![0]
}

impl RegressionBasis {
    pub fn polynomial(degree: usize) -> Self {
        Self {
            kind: BasisKind::Polynomial { degree },
            state_map: default_state_map(),
        }
    }

    pub fn bins(n_bins: usize) -> Self {
        Self {
            kind: BasisKind::PiecewiseConstant { n_bins },
            state_map: default_state_map(),
        }
    }

    pub fn local(n_bins: usize, degree: usize) -> Self {
        Self {
            kind: BasisKind::LocalPolynomial { n_bins, degree },
            state_map: default_state_map(),
        }
    }

    pub fn with_state_map(mut self, map: Vec<usize>) -> Self {
        self.state_map = map;
        self
    }

    /// Number of basis functions for a non-degenerate state.
    pub fn size(&self) -> usize {
        match self.kind {
            BasisKind::Polynomial { degree } => multi_indices(self.state_map.len(), degree).len(),
            BasisKind::PiecewiseConstant { n_bins } => n_bins,
            BasisKind::LocalPolynomial { n_bins, degree } => n_bins * (degree + 1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_map.is_empty() {
            return Err(Error::invalid("regression state_map is empty"));
        }
        match self.kind {
            BasisKind::PiecewiseConstant { n_bins } | BasisKind::LocalPolynomial { n_bins, .. } if n_bins == 0 => {
                Err(Error::invalid("n_bins must be positive"))
            }
            BasisKind::LocalPolynomial { degree, .. } if degree > 3 => {
                Err(Error::invalid("local polynomial degree above 3 is not supported"))
            }
            _ => Ok(()),
        }
    }
}

/// Maps a raw state row to basis-function values.
#[derive(Debug, Clone, PartialEq)]
enum Encoder {
    Poly {
        coords: Vec<usize>,
        means: Vec<f64>,
        scales: Vec<f64>,
        degree: usize,
        exponents: Vec<Vec<usize>>,
    },
    Bins {
        coord: usize,
        /// Upper edges of all bins but the last.
        edges: Vec<f64>,
    },
    Local {
        coord: usize,
        edges: Vec<f64>,
        centers: Vec<f64>,
        scales: Vec<f64>,
        degree: usize,
    },
}

impl Encoder {
    fn size(&self) -> usize {
        match self {
            Encoder::Poly { exponents, .. } => exponents.len(),
            Encoder::Bins { edges, .. } => edges.len() + 1,
            Encoder::Local { edges, degree, .. } => (edges.len() + 1) * (degree + 1),
        }
    }

    /// Bin index and standardized local coordinate.
    fn local_coords(&self, row: &[f64]) -> (usize, f64) {
        match self {
            Encoder::Local {
                coord,
                edges,
                centers,
                scales,
                ..
            } => {
                let x = row[*coord];
                let b = bin_of(edges, x);
                (b, (x - centers[b]) / scales[b])
            }
            _ => unreachable!(),
        }
    }

    fn eval_into(&self, row: &[f64], out: &mut [f64]) {
        match self {
            Encoder::Poly {
                coords,
                means,
                scales,
                degree,
                exponents,
            } => {
                // Hermite tables per active coordinate
                let mut tables = [[0.0f64; 16]; 8];
                for (c, &j) in coords.iter().enumerate() {
                    let x = (row[j] - means[c]) / scales[c];
                    hermite_into(x, *degree, &mut tables[c]);
                }
                for (b, e) in exponents.iter().enumerate() {
                    let mut v = 1.0;
                    for (c, &pow) in e.iter().enumerate() {
                        v *= tables[c][pow];
                    }
                    out[b] = v;
                }
            }
            Encoder::Bins { coord, edges } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[bin_of(edges, row[*coord])] = 1.0;
            }
            Encoder::Local { degree, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let (b, s) = self.local_coords(row);
                let k = degree + 1;
                let mut v = 1.0;
                for slot in &mut out[b * k..(b + 1) * k] {
                    *slot = v;
                    v *= s;
                }
            }
        }
    }
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e < x)
}

fn hermite_into(x: f64, degree: usize, out: &mut [f64; 16]) {
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = x;
    }
    for k in 1..degree {
        out[k + 1] = x * out[k] - k as f64 * out[k - 1];
    }
}

/// All exponent vectors of `dims` variables with total degree `<= degree`,
/// in graded order starting with the constant.
fn multi_indices(dims: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut cur = vec![0; dims];
        collect_exact(dims, total, 0, &mut cur, &mut out);
    }
    out
}

fn collect_exact(dims: usize, left: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if dims == 0 {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == dims - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        collect_exact(dims, left - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// A regression function frozen after fitting; can be evaluated at states
/// outside the ensemble it was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedFunction {
    encoder: Encoder,
    coefficients: Vec<f64>,
}

impl FittedFunction {
    pub fn constant(value: f64) -> Self {
        Self {
            encoder: Encoder::Poly {
                coords: Vec::new(),
                means: Vec::new(),
                scales: Vec::new(),
                degree: 0,
                exponents: vec![Vec::new()],
            },
            coefficients: vec![value],
        }
    }

    pub fn eval(&self, state_row: &[f64]) -> f64 {
        if let Encoder::Local { degree, .. } = &self.encoder {
            let (b, s) = self.encoder.local_coords(state_row);
            return local_poly(&self.coefficients[b * (degree + 1)..(b + 1) * (degree + 1)], s);
        }
        let mut buf = [0.0f64; 64];
        let m = self.encoder.size();
        if m <= buf.len() {
            self.encoder.eval_into(state_row, &mut buf[..m]);
            dot(&buf[..m], &self.coefficients)
        } else {
            let mut v = vec![0.0; m];
            self.encoder.eval_into(state_row, &mut v);
            dot(&v, &self.coefficients)
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// `Σ c_k s^k` by Horner.
#[inline]
fn local_poly(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares projector for one state slice. Build once per grid step,
/// then project as many targets as needed.
#[derive(Debug, Clone)]
pub struct Projector {
    n: usize,
    encoder: Encoder,
    solver: ProjectorSolver,
    condition_number: f64,
    ridge: f64,
}

#[derive(Debug, Clone)]
enum ProjectorSolver {
    Dense {
        /// `n x m` row-major design matrix.
        design: Vec<f64>,
        m: usize,
        chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    },
    Bins {
        bin: Vec<usize>,
        counts: Vec<usize>,
    },
    Local {
        bin: Vec<usize>,
        local: Vec<f64>,
        k: usize,
        chols: Vec<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    },
}

impl Projector {
    /// `state` holds `n` rows of `width` values (path-contiguous).
    pub fn new(basis: &RegressionBasis, state: &[f64], width: usize) -> Result<Self> {
        basis.validate()?;
        if width == 0 || !state.len().is_multiple_of(width) {
            return Err(Error::invalid("state slice is not a whole number of rows"));
        }
        let n = state.len() / width;
        if let Some(&bad) = basis.state_map.iter().find(|&&j| j >= width) {
            return Err(Error::invalid(format!("state_map index {bad} >= state width {width}")));
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "regression state".into(),
            });
        }
        match basis.kind {
            BasisKind::Polynomial { degree } => Self::new_poly(basis, state, width, n, degree),
            BasisKind::PiecewiseConstant { n_bins } => Self::new_bins(basis, state, width, n, n_bins),
            BasisKind::LocalPolynomial { n_bins, degree } => Self::new_local(basis, state, width, n, n_bins, degree),
        }
    }

    fn new_poly(basis: &RegressionBasis, state: &[f64], width: usize, n: usize, degree: usize) -> Result<Self> {
        if degree > 15 {
            return Err(Error::invalid("polynomial degree above 15 is not supported"));
        }
        if basis.state_map.len() > 8 {
            return Err(Error::invalid("at most 8 regression coordinates are supported"));
        }
        let mut coords = Vec::new();
        let mut means = Vec::new();
        let mut scales = Vec::new();
        for &j in &basis.state_map {
            let mean = state.iter().skip(j).step_by(width).sum::<f64>() / n as f64;
            let var = state
                .iter()
                .skip(j)
                .step_by(width)
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
                / n as f64;
            let sd = var.sqrt();
            // coordinates frozen across paths carry no information
            if sd > 1e-12 * (1.0 + mean.abs()) {
                coords.push(j);
                means.push(mean);
                scales.push(sd);
            }
        }
        let exponents = multi_indices(coords.len(), if coords.is_empty() { 0 } else { degree });
        let m = exponents.len();
        if n <= m {
            return Err(Error::invalid(format!(
                "regression needs n_paths > basis size ({n} <= {m})"
            )));
        }
        let encoder = Encoder::Poly {
            coords,
            means,
            scales,
            degree,
            exponents,
        };
        let mut design = vec![0.0; n * m];
        design
            .par_chunks_mut(m)
            .zip(state.par_chunks(width))
            .for_each(|(row_out, row)| encoder.eval_into(row, row_out));

        let partials: Vec<Vec<f64>> = design
            .par_chunks(REDUCTION_CHUNK * m)
            .map(|block| {
                let mut acc = vec![0.0; m * m];
                for row in block.chunks(m) {
                    for a in 0..m {
                        let ra = row[a];
                        for b in a..m {
                            acc[a * m + b] += ra * row[b];
                        }
                    }
                }
                acc
            })
            .collect();
        let mut normal = DMatrix::<f64>::zeros(m, m);
        for acc in &partials {
            for a in 0..m {
                for b in a..m {
                    normal[(a, b)] += acc[a * m + b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                normal[(a, b)] = normal[(b, a)];
            }
        }

        let eig = normal.clone().symmetric_eigenvalues();
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
        let condition_number = if lo > 0.0 { hi / lo } else { f64::INFINITY };

        let mut ridge = 0.0;
        let chol = if condition_number <= CONDITION_LIMIT {
            normal.clone().cholesky()
        } else {
            None
        };
        let chol = match chol {
            Some(c) => c,
            None => {
                ridge = RIDGE_SCALE * normal.trace() / m as f64;
                let mut reg = normal.clone();
                for a in 0..m {
                    reg[(a, a)] += ridge;
                }
                reg.cholesky().ok_or_else(|| {
                    Error::numerical("regression", 0, "normal matrix not positive definite after ridge")
                })?
            }
        };
        Ok(Self {
            n,
            encoder,
            solver: ProjectorSolver::Dense { design, m, chol },
            condition_number,
            ridge,
        })
    }

    fn new_bins(basis: &RegressionBasis, state: &[f64], width: usize, n: usize, n_bins: usize) -> Result<Self> {
        let coord = basis.state_map[0];
        let xs: Vec<f64> = state.iter().skip(coord).step_by(width).copied().collect();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let edges = if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
            Vec::new()
        } else {
            if n <= n_bins {
                return Err(Error::invalid(format!(
                    "regression needs n_paths > basis size ({n} <= {n_bins})"
                )));
            }
            let mut sorted = xs.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let mut edges: Vec<f64> = (1..n_bins).map(|b| sorted[b * n / n_bins - 1]).collect();
            // ties (atoms in the state distribution) collapse bins
            edges.dedup();
            edges.retain(|&e| e < hi);
            edges
        };
        let encoder = Encoder::Bins { coord, edges };
        let (bin, counts) = match &encoder {
            Encoder::Bins { edges, .. } => {
                let bin: Vec<usize> = xs.iter().map(|&x| bin_of(edges, x)).collect();
                let mut counts = vec![0usize; edges.len() + 1];
                for &b in &bin {
                    counts[b] += 1;
                }
                (bin, counts)
            }
            _ => unreachable!(),
        };
        let (mx, mn) = counts
            .iter()
            .fold((0usize, usize::MAX), |(mx, mn), &c| (mx.max(c), mn.min(c)));
        Ok(Self {
            n,
            encoder,
            solver: ProjectorSolver::Bins { bin, counts },
            condition_number: mx as f64 / mn.max(1) as f64,
            ridge: 0.0,
        })
    }

    fn new_local(
        basis: &RegressionBasis,
        state: &[f64],
        width: usize,
        n: usize,
        n_bins: usize,
        degree: usize,
    ) -> Result<Self> {
        let coord = basis.state_map[0];
        let xs: Vec<f64> = state.iter().skip(coord).step_by(width).copied().collect();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let degenerate = hi - lo <= 1e-12 * (1.0 + lo.abs());
        let (edges, degree) = if degenerate {
            (Vec::new(), 0)
        } else {
            if n < n_bins * (degree + 2) {
                return Err(Error::invalid(format!(
                    "local regression needs at least {} paths ({n} given)",
                    n_bins * (degree + 2)
                )));
            }
            let mut sorted = xs.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let mut edges: Vec<f64> = (1..n_bins).map(|b| sorted[b * n / n_bins - 1]).collect();
            edges.dedup();
            edges.retain(|&e| e < hi);
            (edges, degree)
        };
        let nb = edges.len() + 1;
        let k = degree + 1;
        let bin: Vec<usize> = xs.iter().map(|&x| bin_of(&edges, x)).collect();
        let mut count = vec![0usize; nb];
        let mut sum = vec![0.0; nb];
        let mut sum_sq = vec![0.0; nb];
        for (&b, &x) in bin.iter().zip(&xs) {
            count[b] += 1;
            sum[b] += x;
            sum_sq[b] += x * x;
        }
        let centers: Vec<f64> = (0..nb).map(|b| sum[b] / count[b].max(1) as f64).collect();
        let scales: Vec<f64> = (0..nb)
            .map(|b| {
                let c = count[b].max(1) as f64;
                let var = (sum_sq[b] / c - centers[b] * centers[b]).max(0.0);
                if var.sqrt() > 1e-12 * (1.0 + centers[b].abs()) {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let local: Vec<f64> = bin
            .iter()
            .zip(&xs)
            .map(|(&b, &x)| (x - centers[b]) / scales[b])
            .collect();
        let mut normals = vec![DMatrix::<f64>::zeros(k, k); nb];
        for (&b, &s) in bin.iter().zip(&local) {
            let mut pw = [1.0f64; 7];
            for e in 1..2 * k - 1 {
                pw[e] = pw[e - 1] * s;
            }
            let m = &mut normals[b];
            for r in 0..k {
                for c in 0..k {
                    m[(r, c)] += pw[r + c];
                }
            }
        }
        let mut condition_number = 1.0f64;
        let mut ridge = 0.0f64;
        let mut chols = Vec::with_capacity(nb);
        for m in normals {
            let eig = m.clone().symmetric_eigenvalues();
            let (emin, emax) = eig
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e.abs())));
            let cond = if emin > 0.0 { emax / emin } else { f64::INFINITY };
            condition_number = condition_number.max(cond);
            let chol = if cond <= CONDITION_LIMIT {
                m.clone().cholesky()
            } else {
                None
            };
            let chol = match chol {
                Some(c) => c,
                None => {
                    let lam = RIDGE_SCALE * m.trace().max(1.0) / k as f64;
                    ridge = ridge.max(lam);
                    let mut reg = m.clone();
                    for a in 0..k {
                        reg[(a, a)] += lam;
                    }
                    reg.cholesky().ok_or_else(|| {
                        Error::numerical("regression", 0, "local normal matrix not positive definite after ridge")
                    })?
                }
            };
            chols.push(chol);
        }
        Ok(Self {
            n,
            encoder: Encoder::Local {
                coord,
                edges,
                centers,
                scales,
                degree,
            },
            solver: ProjectorSolver::Local { bin, local, k, chols },
            condition_number,
            ridge,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn basis_size(&self) -> usize {
        self.encoder.size()
    }

    /// Spectral condition number of the normal matrix.
    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// Ridge added to the normal matrix diagonal (zero when not needed).
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn coefficients(&self, targets: &[f64]) -> Result<Vec<f64>> {
        if targets.len() != self.n {
            return Err(Error::invalid(format!(
                "target length {} does not match {} state rows",
                targets.len(),
                self.n
            )));
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "regression targets".into(),
            });
        }
        match &self.solver {
            ProjectorSolver::Dense { design, m, chol } => {
                let m = *m;
                let partials: Vec<Vec<f64>> = design
                    .par_chunks(REDUCTION_CHUNK * m)
                    .zip(targets.par_chunks(REDUCTION_CHUNK))
                    .map(|(block, ys)| {
                        let mut acc = vec![0.0; m];
                        for (row, y) in block.chunks(m).zip(ys) {
                            for a in 0..m {
                                acc[a] += row[a] * y;
                            }
                        }
                        acc
                    })
                    .collect();
                let mut rhs = DVector::<f64>::zeros(m);
                for acc in &partials {
                    for a in 0..m {
                        rhs[a] += acc[a];
                    }
                }
                Ok(chol.solve(&rhs).iter().copied().collect())
            }
            ProjectorSolver::Bins { bin, counts } => {
                let mut sums = vec![0.0; counts.len()];
                for (&b, &y) in bin.iter().zip(targets) {
                    sums[b] += y;
                }
                Ok(sums
                    .iter()
                    .zip(counts)
                    .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                    .collect())
            }
            ProjectorSolver::Local { bin, local, k, chols } => {
                let k = *k;
                let mut rhs = vec![DVector::<f64>::zeros(k); chols.len()];
                for ((&b, &s), &y) in bin.iter().zip(local).zip(targets) {
                    let mut v = y;
                    for a in 0..k {
                        rhs[b][a] += v;
                        v *= s;
                    }
                }
                let mut coef = Vec::with_capacity(chols.len() * k);
                for (c, r) in chols.iter().zip(&rhs) {
                    coef.extend(c.solve(r).iter().copied());
                }
                Ok(coef)
            }
        }
    }

    /// Fitted values at the ensemble's own states.
    pub fn project(&self, targets: &[f64]) -> Result<Vec<f64>> {
        let coef = self.coefficients(targets)?;
        Ok(self.evaluate(&coef))
    }

    fn evaluate(&self, coef: &[f64]) -> Vec<f64> {
        match &self.solver {
            ProjectorSolver::Dense { design, m, .. } => design.par_chunks(*m).map(|row| dot(row, coef)).collect(),
            ProjectorSolver::Bins { bin, .. } => bin.iter().map(|&b| coef[b]).collect(),
            ProjectorSolver::Local { bin, local, k, .. } => bin
                .iter()
                .zip(local)
                .map(|(&b, &s)| local_poly(&coef[b * k..(b + 1) * k], s))
                .collect(),
        }
    }

    /// Fitted values together with the frozen regression function.
    pub fn fit(&self, targets: &[f64]) -> Result<(Vec<f64>, FittedFunction)> {
        let coef = self.coefficients(targets)?;
        let fitted = self.evaluate(&coef);
        Ok((
            fitted,
            FittedFunction {
                encoder: self.encoder.clone(),
                coefficients: coef,
            },
        ))
    }
}

/// Least-squares estimate of `E[target | state]` evaluated on every path.
///
/// `state` is `n_paths` rows of `width` values. Near-singular normal
/// equations fall back to a ridge of `1e-10 * trace / size`.
pub fn conditional_expectation(
    targets: &[f64],
    state: &[f64],
    width: usize,
    basis: &RegressionBasis,
) -> Result<Vec<f64>> {
    Projector::new(basis, state, width)?.project(targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{sample_brownian, TimeGrid};

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 4).len(), 5);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(0, 3).len(), 1);
        assert_eq!(multi_indices(3, 0), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn constants_are_reproduced() {
        let state: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        for basis in [
            RegressionBasis::polynomial(4),
            RegressionBasis::bins(8),
            RegressionBasis::local(6, 2),
        ] {
            let out = conditional_expectation(&vec![3.5; 100], &state, 1, &basis).unwrap();
            assert!(out.iter().all(|v| (v - 3.5).abs() < 1e-12), "{basis:?}");
        }
    }

    #[test]
    fn identity_is_representable() {
        let state: Vec<f64> = (0..200).map(|i| (i as f64 * 0.11).cos() * 3.0).collect();
        let out = conditional_expectation(&state, &state, 1, &RegressionBasis::polynomial(1)).unwrap();
        for (a, b) in out.iter().zip(&state) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_state_reduces_to_mean() {
        let state = vec![0.0; 10];
        let targets: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let p = Projector::new(&RegressionBasis::polynomial(4), &state, 1).unwrap();
        assert_eq!(p.basis_size(), 1);
        let out = p.project(&targets).unwrap();
        assert!(out.iter().all(|v| (v - 4.5).abs() < 1e-12));
        let b = Projector::new(&RegressionBasis::bins(4), &state, 1).unwrap();
        assert_eq!(b.basis_size(), 1);
    }

    #[test]
    fn local_basis_fits_piecewise_linear_exactly() {
        let state: Vec<f64> = (0..400).map(|i| (i as f64 * 0.173).sin() * 2.0).collect();
        // kink at the bin edge, the lower median
        let mut sorted = state.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let m = sorted[199];
        let kink: Vec<f64> = state.iter().map(|&x| x.min(m)).collect();
        let p = Projector::new(&RegressionBasis::local(2, 1), &state, 1).unwrap();
        let (_, fit) = p.fit(&kink).unwrap();
        let proj = p.project(&kink).unwrap();
        for ((&x, &y), &q) in state.iter().zip(&kink).zip(&proj) {
            assert!((q - y).abs() < 1e-10, "x={x} y={y} q={q}");
            assert!((fit.eval(&[x]) - q).abs() < 1e-12);
        }
        let deg = Projector::new(&RegressionBasis::local(4, 2), &[1.0; 20], 1).unwrap();
        assert_eq!(deg.basis_size(), 1);
        assert!(Projector::new(&RegressionBasis::local(10, 2), &state[..20], 1).is_err());
    }

    #[test]
    fn too_few_rows_rejected() {
        let state = [0.0, 1.0, 2.0];
        assert!(Projector::new(&RegressionBasis::polynomial(4), &state, 1).is_err());
    }

    #[test]
    fn duplicated_coordinate_triggers_ridge() {
        // two identical columns make the normal matrix singular
        let state: Vec<f64> = (0..50).flat_map(|i| [i as f64, i as f64]).collect();
        let basis = RegressionBasis::polynomial(1).with_state_map(vec![0, 1]);
        let p = Projector::new(&basis, &state, 2).unwrap();
        assert!(p.ridge() > 0.0);
        let out = p
            .project(&state.iter().step_by(2).copied().collect::<Vec<_>>())
            .unwrap();
        for (i, v) in out.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-4);
        }
    }

    #[test]
    fn fitted_function_matches_in_sample() {
        let state: Vec<f64> = (0..300).map(|i| (i as f64 * 0.05) - 7.0).collect();
        let targets: Vec<f64> = state.iter().map(|x| x.exp().min(5.0)).collect();
        for basis in [RegressionBasis::polynomial(3), RegressionBasis::bins(10)] {
            let p = Projector::new(&basis, &state, 1).unwrap();
            let (fitted, func) = p.fit(&targets).unwrap();
            for (x, f) in state.iter().zip(&fitted) {
                assert!((func.eval(&[*x]) - f).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn martingale_regression() {
        // E[W_T | W_t] = W_t
        let g = TimeGrid::new(1.0, 4).unwrap();
        let e = sample_brownian(&g, 1, 50_000, 17).unwrap();
        let state = e.positions().at(2);
        let target = e.positions().at(4);
        let out = conditional_expectation(target, state, 1, &RegressionBasis::polynomial(1)).unwrap();
        let err = out.iter().zip(state).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // slope and intercept errors ~ 1/sqrt(n) times a few
        assert!(err < 0.05, "max error {err}");
    }
}
