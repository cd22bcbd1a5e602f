use std::ops::Range;

/// Dense per-path field sampled on grid indices, stored time-major:
/// index `(i * n_paths + p) * width + k`.
///
/// Time-major storage keeps each grid slice contiguous, which is what the
/// per-step regressions consume.
#[derive(Debug, Clone, PartialEq)]
pub struct PathField {
    n_paths: usize,
    n_times: usize,
    width: usize,
    data: Vec<f64>,
}

impl PathField {
    pub fn zeros(n_paths: usize, n_times: usize, width: usize) -> Self {
        Self {
            n_paths,
            n_times,
            width,
            data: vec![0.0; n_paths * n_times * width],
        }
    }

    pub fn from_time_major(n_paths: usize, n_times: usize, width: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n_paths * n_times * width, "field size mismatch");
        Self {
            n_paths,
            n_times,
            width,
            data,
        }
    }

    /// Builds a scalar field from a closure over `(path, time index)`.
    pub fn from_fn(n_paths: usize, n_times: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(n_paths, n_times, 1);
        for i in 0..n_times {
            for p in 0..n_paths {
                out.data[i * n_paths + p] = f(p, i);
            }
        }
        out
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    fn index(&self, p: usize, i: usize, k: usize) -> usize {
        debug_assert!(p < self.n_paths && i < self.n_times && k < self.width);
        (i * self.n_paths + p) * self.width + k
    }

    #[inline]
    pub fn get(&self, p: usize, i: usize, k: usize) -> f64 {
        self.data[self.index(p, i, k)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, i: usize, k: usize, v: f64) {
        let idx = self.index(p, i, k);
        self.data[idx] = v;
    }

    /// Row of `width` values for path `p` at time index `i`.
    #[inline]
    pub fn row(&self, p: usize, i: usize) -> &[f64] {
        let start = self.index(p, i, 0);
        &self.data[start..start + self.width]
    }

    /// All paths at time index `i`, `n_paths * width` values.
    pub fn at(&self, i: usize) -> &[f64] {
        let stride = self.n_paths * self.width;
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut [f64] {
        let stride = self.n_paths * self.width;
        &mut self.data[i * stride..(i + 1) * stride]
    }

    /// Time slice `i` (read) together with slice `i + 1` (write).
    pub fn as_mut_split(&mut self, i: usize) -> (&[f64], &mut [f64]) {
        let stride = self.n_paths * self.width;
        let (head, tail) = self.data.split_at_mut((i + 1) * stride);
        (&head[i * stride..], &mut tail[..stride])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Restriction to a contiguous range of paths.
    pub fn subset(&self, paths: Range<usize>) -> Self {
        assert!(paths.end <= self.n_paths);
        let m = paths.len();
        let mut data = Vec::with_capacity(m * self.n_times * self.width);
        for i in 0..self.n_times {
            let base = i * self.n_paths * self.width;
            data.extend_from_slice(&self.data[base + paths.start * self.width..base + paths.end * self.width]);
        }
        Self::from_time_major(m, self.n_times, self.width, data)
    }

    /// Mean over paths of component `k` at time index `i`.
    pub fn mean_at(&self, i: usize, k: usize) -> f64 {
        let s: f64 = (0..self.n_paths).map(|p| self.get(p, i, k)).sum();
        s / self.n_paths as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_subset() {
        let f = PathField::from_fn(3, 2, |p, i| (10 * i + p) as f64);
        assert_eq!(f.at(1), &[10.0, 11.0, 12.0]);
        let s = f.subset(1..3);
        assert_eq!(s.n_paths(), 2);
        assert_eq!(s.get(0, 1, 0), 11.0);
        assert_eq!(s.get(1, 0, 0), 2.0);
        assert!((f.mean_at(0, 0) - 1.0).abs() < 1e-15);
    }
}
