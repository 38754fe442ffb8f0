use crate::error::{Error, Result};

const NORMALISATION_TOL: f64 = 1e-9;
const PARTIAL_SUM_TOL: f64 = 1e-10;

/// `v ≺ w`: true when every descending partial sum of `w` dominates the
/// corresponding partial sum of `v`.
///
/// Both inputs must be probability vectors of equal length.
pub fn majorizes(v: &[f64], w: &[f64]) -> Result<bool> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch(v.len(), w.len()));
    }
    for x in [v, w] {
        let s: f64 = x.iter().sum();
        if (s - 1.0).abs() > NORMALISATION_TOL {
            return Err(Error::NotNormalised(s));
        }
    }
    let sorted = |x: &[f64]| {
        let mut y = x.to_vec();
        y.sort_by(|a, b| b.total_cmp(a));
        y
    };
    let (v, w) = (sorted(v), sorted(w));
    let (mut sv, mut sw) = (0.0, 0.0);
    for (a, b) in v.iter().zip(&w) {
        sv += a;
        sw += b;
        if sv > sw + PARTIAL_SUM_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_majorizes_everything() {
        assert!(majorizes(&[0.5, 0.5], &[1.0, 0.0]).unwrap());
        assert!(majorizes(&[0.2, 0.3, 0.5], &[0.0, 1.0, 0.0]).unwrap());
    }

    #[test]
    fn uniform_does_not_majorize_pure() {
        assert!(!majorizes(&[1.0, 0.0], &[0.5, 0.5]).unwrap());
    }

    #[test]
    fn order_of_entries_is_irrelevant() {
        assert!(majorizes(&[0.3, 0.7], &[0.1, 0.9]).unwrap());
        assert!(!majorizes(&[0.9, 0.1], &[0.7, 0.3]).unwrap());
    }

    #[test]
    fn errors() {
        assert_eq!(majorizes(&[1.0], &[0.5, 0.5]), Err(Error::LengthMismatch(1, 2)));
        assert!(matches!(majorizes(&[0.6, 0.6], &[0.5, 0.5]), Err(Error::NotNormalised(_))));
    }
}
