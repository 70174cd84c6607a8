use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `‖θ − θ*‖` against the closed-form maximum-likelihood estimate.
    ParamError,
    /// Wasserstein-1 between model samples and held-out data samples.
    W1,
    /// `−log p_θ(y)` when closed-form, otherwise the particle average of `−ℓ(θ, X)`.
    Loss,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::ParamError => "param_error",
            Metric::W1 => "w1",
            Metric::Loss => "loss",
        }
    }
}

/// One recorded iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iteration: u64,
    pub theta: Vec<f64>,
    pub metrics: Vec<(Metric, f64)>,
    /// Seconds since the start of the run.
    pub wallclock: f64,
}

impl RunRecord {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| *k == m).map(|(_, v)| *v)
    }
}

/// Records with strictly increasing iteration indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    records: Vec<RunRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: RunRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.iteration <= last.iteration {
                return Err(invalid(format!(
                    "trace iterations must increase: {} after {}",
                    record.iteration, last.iteration
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&RunRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The curve of one metric; `None` if some record lacks it.
    pub fn curve(&self, m: Metric) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.metric(m)).collect()
    }

    /// The curve of one θ coordinate.
    pub fn theta_curve(&self, j: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.theta[j]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: u64, e: f64) -> RunRecord {
        RunRecord {
            iteration: k,
            theta: vec![k as f64],
            metrics: vec![(Metric::ParamError, e)],
            wallclock: 0.0,
        }
    }

    #[test]
    fn iterations_must_increase() {
        let mut t = Trace::new();
        t.push(rec(0, 3.0)).unwrap();
        t.push(rec(5, 2.0)).unwrap();
        assert!(t.push(rec(5, 1.0)).is_err());
        assert!(t.push(rec(2, 1.0)).is_err());
        assert_eq!(t.curve(Metric::ParamError), Some(vec![3.0, 2.0]));
        assert_eq!(t.curve(Metric::W1), None);
        assert_eq!(t.theta_curve(0), vec![0.0, 5.0]);
    }
}
