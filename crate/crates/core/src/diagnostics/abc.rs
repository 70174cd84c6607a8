use crate::error::{check_dim, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbcWeights {
    /// `w(k) = 2k/(K(K+1))`, summing to one.
    #[default]
    Normalized,
    /// `(1/K) · 2/(K(1+K)) · k/K`, which sum to `1/K`.
    Unnormalized,
}

/// Area between curves with normalized weights; positive when `mpd` lies below `pgd`.
pub fn abc(pgd: &[f64], mpd: &[f64]) -> Result<f64> {
    abc_with(pgd, mpd, AbcWeights::Normalized)
}

pub fn abc_with(pgd: &[f64], mpd: &[f64], weights: AbcWeights) -> Result<f64> {
    if pgd.is_empty() {
        return Err(Error::Empty("abc curves"));
    }
    check_dim("abc curve", pgd.len(), mpd.len())?;
    let k_total = pgd.len() as f64;
    let norm = match weights {
        AbcWeights::Normalized => 2.0 / (k_total * (k_total + 1.0)),
        AbcWeights::Unnormalized => 2.0 / (k_total * k_total * k_total * (k_total + 1.0)),
    };
    Ok(pgd
        .iter()
        .zip(mpd)
        .enumerate()
        .map(|(k, (p, m))| (k + 1) as f64 * norm * (p - m))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let c = [1.0, 5.0, 2.0, 0.5];
        assert_eq!(abc(&c, &c).unwrap(), 0.0);
        let shifted: Vec<f64> = c.iter().map(|v| v - 0.75).collect();
        assert_relative_eq!(abc(&c, &shifted).unwrap(), 0.75, epsilon = 1e-14);
        assert_relative_eq!(
            abc(&[3.0, 0.0, 0.0], &[0.0; 3]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            abc_with(&[3.0, 0.0, 0.0], &[0.0; 3], AbcWeights::Unnormalized).unwrap(),
            0.5 / 9.0,
            epsilon = 1e-15
        );
        assert!(abc(&[1.0], &[1.0, 2.0]).is_err());
        assert!(abc(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn antisymmetric(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert_eq!(abc(&a, &b).unwrap(), -abc(&b, &a).unwrap());
        }
    }
}
