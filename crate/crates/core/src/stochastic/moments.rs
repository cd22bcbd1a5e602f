use crate::error::{Error, Result};
use crate::stochastic::PathField;

/// Monte Carlo estimate of `E[sup_t |Y_t|^p]^{1/p}` over the paths of a
/// scalar field. Non-finite entries are rejected.
pub fn empirical_sup_moment(y: &PathField, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid(format!("moment order must be >= 1, got {p}")));
    }
    if !y.all_finite() {
        return Err(Error::NonFinite {
            context: "sup-moment input".into(),
        });
    }
    let n = y.n_paths();
    if n == 0 {
        return Err(Error::invalid("empty field"));
    }
    let mut sup = vec![0.0f64; n];
    for i in 0..y.n_times() {
        let slice = y.at(i);
        for (s, row) in sup.iter_mut().zip(slice.chunks(y.width())) {
            for v in row {
                *s = s.max(v.abs());
            }
        }
    }
    let mean = sup.iter().map(|s| s.powf(p)).sum::<f64>() / n as f64;
    Ok(mean.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let ones = PathField::from_fn(5, 4, |_, _| 1.0);
        let zeros = PathField::from_fn(5, 4, |_, _| 0.0);
        for p in [1.0, 2.0, 3.7] {
            assert!((empirical_sup_moment(&ones, p).unwrap() - 1.0).abs() < 1e-15);
            assert_eq!(empirical_sup_moment(&zeros, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let f = PathField::from_fn(3, 2, |p, _| if p == 1 { f64::NAN } else { 0.0 });
        assert!(empirical_sup_moment(&f, 2.0).is_err());
        let g = PathField::from_fn(3, 2, |_, _| 0.0);
        assert!(empirical_sup_moment(&g, 0.5).is_err());
    }
}
