use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problems::{GeneratorSpec, OracleSolution, SdeCoefficients, TerminalSpec};

const MODULE: &str = "pde-solver";
const BLOWUP: f64 = 1e12;

pub type BoundaryFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Boundary {
    /// Prescribed values `g(t, x)` at both ends (typically a closed form).
    Dirichlet(BoundaryFn),
    /// `ln u` extrapolated linearly from the two nearest interior nodes,
    /// with the slope lagged by one layer.
    LogLinear,
}

impl Boundary {
    pub fn from_oracle(oracle: &OracleSolution) -> Self {
        let o = oracle.clone();
        Boundary::Dirichlet(Arc::new(move |t, x| o.y(t, &[x])))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Dirichlet(_) => "dirichlet",
            Boundary::LogLinear => "log-linear",
        }
    }
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct PdeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub horizon: f64,
    pub boundary: Boundary,
}

impl PdeGrid {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, n_t: usize, horizon: f64, boundary: Boundary) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            n_x,
            n_t,
            horizon,
            boundary,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::invalid(format!(
                "need x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_x < 16 || self.n_t < 16 {
            return Err(Error::invalid(format!(
                "n_x and n_t must be >= 16 (got {} and {})",
                self.n_x, self.n_t
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon must be positive"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.n_x {
            self.x_max
        } else {
            self.x_min + j as f64 * self.dx()
        }
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.n_t {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    /// Same domain and boundary with both resolutions scaled by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_x: self.n_x * factor,
            n_t: self.n_t * factor,
            ..self.clone()
        }
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self {
            boundary,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub grid: PdeGrid,
    /// Row-major `(n_t+1) x (n_x+1)`; row `k` is time `t_k`.
    pub u: Vec<f64>,
    /// Smallest `C` with `u ≤ C·exp{C|x|^q}` on the grid, for `q = 1`.
    pub growth_params: (f64, f64),
}

impl PdeSolution {
    pub fn layer(&self, k: usize) -> &[f64] {
        let w = self.grid.n_x + 1;
        &self.u[k * w..(k + 1) * w]
    }

    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.u[k * (self.grid.n_x + 1) + j]
    }

    /// Linear interpolation in `x` on layer `k`.
    pub fn value_at(&self, k: usize, x: f64) -> Result<f64> {
        let g = &self.grid;
        if !(x >= g.x_min && x <= g.x_max) {
            return Err(Error::invalid(format!("x = {x} outside [{}, {}]", g.x_min, g.x_max)));
        }
        let s = (x - g.x_min) / g.dx();
        let j = (s.floor() as usize).min(g.n_x - 1);
        let w = s - j as f64;
        let row = self.layer(k);
        Ok((1.0 - w) * row[j] + w * row[j + 1])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "u"]).map_err(csv_err)?;
        for k in 0..=self.grid.n_t {
            for j in 0..=self.grid.n_x {
                w.write_record([
                    format!("{:e}", self.grid.t(k)),
                    format!("{:e}", self.grid.x(j)),
                    format!("{:e}", self.at(k, j)),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `true` iff `0 < u ≤ C·exp{C|x|^q}` at every grid node.
pub fn growth_check(sol: &PdeSolution, c: f64, q: f64) -> bool {
    let g = &sol.grid;
    (0..=g.n_t).all(|k| {
        (0..=g.n_x).all(|j| {
            let u = sol.at(k, j);
            u > 0.0 && u <= c * (c * g.x(j).abs().powf(q)).exp()
        })
    })
}

fn minimal_growth_constant(grid: &PdeGrid, u: &[f64], q: f64) -> f64 {
    let w = grid.n_x + 1;
    let holds = |c: f64| {
        u.iter()
            .enumerate()
            .all(|(idx, &v)| v <= c * (c * grid.x(idx % w).abs().powf(q)).exp())
    };
    let mut hi = 1.0;
    while !holds(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Backward IMEX scheme for `∂ₜu + B∂ₓu + ½σ²∂ₓₓu + f(t, x, u, σ∂ₓu) = 0`,
/// `u(T) = Ψ`. The operator part is implicit (tridiagonal); `f` is explicit
/// in the later layer with a centered gradient and `u` clamped at `floor`.
pub fn solve_semilinear(
    f: &GeneratorSpec,
    psi: &TerminalSpec,
    coeffs: &SdeCoefficients,
    grid: &PdeGrid,
    floor: f64,
) -> Result<PdeSolution> {
    grid.validate()?;
    if !(floor > 0.0) {
        return Err(Error::invalid("floor must be positive"));
    }
    let (nx, nt) = (grid.n_x, grid.n_t);
    let (dx, dt) = (grid.dx(), grid.dt());
    let w = nx + 1;
    let mut u = vec![0.0; (nt + 1) * w];
    let xs: Vec<f64> = (0..=nx).map(|j| grid.x(j)).collect();
    {
        let last = &mut u[nt * w..];
        for (j, v) in last.iter_mut().enumerate() {
            *v = psi.eval(&[xs[j]]);
        }
        if let Some((j, v)) = last.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!(
                "terminal must be positive and finite; Ψ({}) = {v}",
                xs[j]
            )));
        }
    }
    let scale0 = u[nt * w..].iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w]);
    let mut ratio = [0.0; 2];
    for k in (0..nt).rev() {
        let (head, tail) = u.split_at_mut((k + 1) * w);
        let prev = &tail[..w];
        let cur = &mut head[k * w..];
        let t_prev = grid.t(k + 1);
        let t = grid.t(k);

        for j in 1..nx {
            let x = xs[j];
            let sig_prev = coeffs.vol(t_prev, x);
            let grad = (prev[j + 1] - prev[j - 1]) / (2.0 * dx);
            let fv = f.eval(t_prev, &[x], prev[j].max(floor), &[sig_prev * grad]);
            rhs[j] = prev[j] + dt * fv;

            let sig = coeffs.vol(t, x);
            let b = coeffs.drift(t, x);
            let diff = 0.5 * sig * sig / (dx * dx);
            // centered drift keeps an M-matrix while |B|Δx ≤ σ²; upwind beyond
            let (lo, up) = if b.abs() * dx <= sig * sig {
                (diff - b / (2.0 * dx), diff + b / (2.0 * dx))
            } else if b > 0.0 {
                (diff, diff + b / dx)
            } else {
                (diff - b / dx, diff)
            };
            lower[j] = -dt * lo;
            upper[j] = -dt * up;
            diag[j] = 1.0 + dt * (lo + up);
        }
        match &grid.boundary {
            Boundary::Dirichlet(g) => {
                lower[0] = 0.0;
                diag[0] = 1.0;
                upper[0] = 0.0;
                rhs[0] = g(t, xs[0]);
                lower[nx] = 0.0;
                diag[nx] = 1.0;
                upper[nx] = 0.0;
                rhs[nx] = g(t, xs[nx]);
            }
            Boundary::LogLinear => {
                ratio[0] = prev[1] / prev[2];
                ratio[1] = prev[nx - 1] / prev[nx - 2];
                diag[0] = 1.0;
                upper[0] = -ratio[0];
                rhs[0] = 0.0;
                lower[nx] = -ratio[1];
                diag[nx] = 1.0;
                rhs[nx] = 0.0;
            }
        }
        thomas(&lower, &diag, &upper, &rhs, cur).map_err(|msg| Error::numerical(MODULE, k, msg))?;

        if let Some((j, v)) = cur.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::numerical(
                MODULE,
                k,
                format!("non-finite value {v} at x = {}", xs[j]),
            ));
        }
        let peak = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > BLOWUP * scale0.max(1.0) {
            return Err(Error::numerical(
                MODULE,
                k,
                format!("solution grew to {peak:e}; the explicit nonlinearity is unstable, increase n_t"),
            ));
        }
        if let Some((j, v)) = cur.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::numerical(
                MODULE,
                k,
                format!(
                    "positivity violated: u = {v} at x = {}; refine n_t or raise the floor",
                    xs[j]
                ),
            ));
        }
    }
    let c = minimal_growth_constant(grid, &u, 1.0);
    Ok(PdeSolution {
        grid: grid.clone(),
        u,
        growth_params: (c, 1.0),
    })
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], out: &mut [f64]) -> std::result::Result<(), String> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut m = diag[0];
    if m == 0.0 {
        return Err("singular tridiagonal system".into());
    }
    c[0] = upper[0] / m;
    d[0] = rhs[0] / m;
    for i in 1..n {
        m = diag[i] - lower[i] * c[i - 1];
        if m == 0.0 || !m.is_finite() {
            return Err("singular tridiagonal system".into());
        }
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
    Ok(())
}
