use std::io::{Read, Write};
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{PathField, TimeGrid};
use crate::error::{Error, Result};

/// Simulated `d`-dimensional Brownian paths on a uniform grid.
///
/// Every path draws from its own ChaCha8 stream (`seed`, stream = path index),
/// so generation order and thread count never change the numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: TimeGrid,
    dim: usize,
    seed: u64,
    increments: PathField,
    positions: PathField,
}

pub fn sample_brownian(grid: &TimeGrid, d: usize, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    PathEnsemble::sample(grid, d, n_paths, seed)
}

impl PathEnsemble {
    pub fn sample(grid: &TimeGrid, d: usize, n_paths: usize, seed: u64) -> Result<Self> {
        if n_paths < 2 {
            return Err(Error::invalid(format!(
                "n_paths < 2 (got {n_paths}); regression needs at least two paths"
            )));
        }
        if d == 0 {
            return Err(Error::invalid("dimension d must be at least 1"));
        }
        let n = grid.n_steps();
        let sd = grid.dt().sqrt();
        let per_path = n * d;

        // path-major scratch, filled in parallel, then transposed
        let mut scratch = vec![0.0; n_paths * per_path];
        scratch.par_chunks_mut(per_path).enumerate().for_each(|(p, chunk)| {
            let mut rng = path_rng(seed, p as u64);
            for v in chunk.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = sd * z;
            }
        });

        let mut increments = PathField::zeros(n_paths, n, d);
        let mut positions = PathField::zeros(n_paths, n + 1, d);
        for p in 0..n_paths {
            let src = &scratch[p * per_path..(p + 1) * per_path];
            for k in 0..d {
                let mut w = 0.0;
                for i in 0..n {
                    let dw = src[i * d + k];
                    increments.set(p, i, k, dw);
                    w += dw;
                    positions.set(p, i + 1, k, w);
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            dim: d,
            seed,
            increments,
            positions,
        })
    }

    /// Builds an ensemble from explicit increments, recomputing `W` by cumulative sums.
    pub fn from_increments(grid: TimeGrid, seed: u64, increments: PathField) -> Result<Self> {
        if increments.n_times() != grid.n_steps() {
            return Err(Error::invalid("increment field does not match grid"));
        }
        if increments.n_paths() < 2 {
            return Err(Error::invalid("n_paths < 2"));
        }
        if !increments.all_finite() {
            return Err(Error::NonFinite {
                context: "Brownian increments".into(),
            });
        }
        let (n_paths, d, n) = (increments.n_paths(), increments.width(), grid.n_steps());
        let mut positions = PathField::zeros(n_paths, n + 1, d);
        for p in 0..n_paths {
            for k in 0..d {
                let mut w = 0.0;
                for i in 0..n {
                    w += increments.get(p, i, k);
                    positions.set(p, i + 1, k, w);
                }
            }
        }
        Ok(Self {
            grid,
            dim: d,
            seed,
            increments,
            positions,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_paths(&self) -> usize {
        self.increments.n_paths()
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn dw(&self, p: usize, i: usize, k: usize) -> f64 {
        self.increments.get(p, i, k)
    }

    #[inline]
    pub fn w(&self, p: usize, i: usize, k: usize) -> f64 {
        self.positions.get(p, i, k)
    }

    pub fn increments(&self) -> &PathField {
        &self.increments
    }

    pub fn positions(&self) -> &PathField {
        &self.positions
    }

    /// Contiguous-path sub-ensemble (used for batch standard errors).
    pub fn subset(&self, paths: Range<usize>) -> Self {
        Self {
            grid: self.grid.clone(),
            dim: self.dim,
            seed: self.seed,
            increments: self.increments.subset(paths.clone()),
            positions: self.positions.subset(paths),
        }
    }

    /// Writes `path,step,component,dW,W`; `dW` at step `i` is the increment
    /// arriving at `t_i` (zero at step 0).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["path", "step", "component", "dW", "W"])
            .map_err(csv_err)?;
        for p in 0..self.n_paths() {
            for i in 0..=self.n_steps() {
                for k in 0..self.dim {
                    let dw = if i == 0 { 0.0 } else { self.dw(p, i - 1, k) };
                    wr.write_record([
                        p.to_string(),
                        i.to_string(),
                        k.to_string(),
                        dw.to_string(),
                        self.w(p, i, k).to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a dump produced by [`write_csv`](Self::write_csv) and checks the
    /// cumulative-sum invariant.
    pub fn read_csv<R: Read>(input: R, horizon: f64, seed: u64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let headers = rd.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["path", "step", "component", "dW", "W"] {
            return Err(Error::Config(format!("unexpected ensemble CSV header {headers:?}")));
        }
        let mut rows = Vec::new();
        let (mut max_p, mut max_i, mut max_k) = (0usize, 0usize, 0usize);
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            let parse_u = |j: usize| -> Result<usize> {
                rec[j]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad integer '{}': {e}", &rec[j])))
            };
            let parse_f = |j: usize| -> Result<f64> {
                rec[j]
                    .parse()
                    .map_err(|e| Error::Config(format!("bad number '{}': {e}", &rec[j])))
            };
            let (p, i, k, dw, w) = (parse_u(0)?, parse_u(1)?, parse_u(2)?, parse_f(3)?, parse_f(4)?);
            max_p = max_p.max(p);
            max_i = max_i.max(i);
            max_k = max_k.max(k);
            rows.push((p, i, k, dw, w));
        }
        if max_i == 0 {
            return Err(Error::Config("ensemble CSV has no time steps".into()));
        }
        let (n_paths, n_steps, d) = (max_p + 1, max_i, max_k + 1);
        if rows.len() != n_paths * (n_steps + 1) * d {
            return Err(Error::Config(
                "ensemble CSV is not a full path x step x component table".into(),
            ));
        }
        let grid = TimeGrid::new(horizon, n_steps)?;
        let mut inc = PathField::zeros(n_paths, n_steps, d);
        for &(p, i, k, dw, _) in &rows {
            if i > 0 {
                inc.set(p, i - 1, k, dw);
            }
        }
        let ens = Self::from_increments(grid, seed, inc)?;
        for &(p, i, k, _, w) in &rows {
            let diff = (ens.w(p, i, k) - w).abs();
            if diff > 1e-12 * (1.0 + w.abs()) {
                return Err(Error::Invariant(format!(
                    "W[{p},{i},{k}] = {w} is not the cumulative sum of dW"
                )));
            }
        }
        Ok(ens)
    }
}

pub(crate) fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_zero() {
        let g = TimeGrid::new(1.0, 1).unwrap();
        let e = sample_brownian(&g, 1, 4, 7).unwrap();
        for p in 0..4 {
            assert_eq!(e.w(p, 0, 0), 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let a = sample_brownian(&g, 2, 50, 3).unwrap();
        let b = sample_brownian(&g, 2, 50, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_brownian(&g, 2, 50, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_single_path() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let err = sample_brownian(&g, 1, 1, 0).unwrap_err();
        assert!(err.to_string().contains("n_paths < 2"));
    }

    #[test]
    fn path_streams_do_not_depend_on_ensemble_size() {
        // path p sees the same draws whatever n_paths is
        let g = TimeGrid::new(1.0, 5).unwrap();
        let small = sample_brownian(&g, 1, 3, 11).unwrap();
        let big = sample_brownian(&g, 1, 9, 11).unwrap();
        for p in 0..3 {
            for i in 0..5 {
                assert_eq!(small.dw(p, i, 0), big.dw(p, i, 0));
            }
        }
    }

    #[test]
    fn cumulative_sum_invariant() {
        let g = TimeGrid::new(2.0, 16).unwrap();
        let e = sample_brownian(&g, 3, 10, 5).unwrap();
        for p in 0..10 {
            for i in 0..16 {
                for k in 0..3 {
                    let d = e.w(p, i + 1, k) - e.w(p, i, k) - e.dw(p, i, k);
                    assert!(d.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let e = sample_brownian(&g, 2, 5, 9).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("path,step,component,dW,W\n"));
        let back = PathEnsemble::read_csv(buf.as_slice(), 1.0, 9).unwrap();
        assert_eq!(back.increments(), e.increments());
        assert_eq!(back.positions(), e.positions());
    }
}
