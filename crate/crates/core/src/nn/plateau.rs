//! Learning-rate decay on plateau of an improvement metric (higher is better).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateauScheduler {
    pub decay_factor: f64,
    /// Number of consecutive non-improving evaluation windows tolerated
    /// before the learning rate is decayed.
    pub patience: usize,
    pub min_improvement: f64,
    best_metric: f64,
    windows_since_improvement: usize,
}

impl PlateauScheduler {
    pub fn new(decay_factor: f64, patience: usize, min_improvement: f64) -> Result<Self> {
        if !(decay_factor > 0.0 && decay_factor < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decay factor must lie in (0, 1), got {decay_factor}"
            )));
        }
        if patience == 0 {
            return Err(Error::InvalidArgument("patience must be at least 1".into()));
        }
        Ok(PlateauScheduler {
            decay_factor,
            patience,
            min_improvement,
            best_metric: f64::NEG_INFINITY,
            windows_since_improvement: 0,
        })
    }

    pub fn best_metric(&self) -> f64 {
        self.best_metric
    }

    /// Report the metric for one evaluation window; returns the learning rate
    /// to use from now on. Decays once each time the metric has failed to
    /// improve by `min_improvement` for `patience` consecutive windows.
    pub fn update(&mut self, metric: f64, current_lr: f64) -> f64 {
        if metric > self.best_metric + self.min_improvement {
            self.best_metric = metric;
            self.windows_since_improvement = 0;
            return current_lr;
        }
        self.best_metric = self.best_metric.max(metric);
        self.windows_since_improvement += 1;
        if self.windows_since_improvement >= self.patience {
            self.windows_since_improvement = 0;
            current_lr * self.decay_factor
        } else {
            current_lr
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improving_metric_keeps_lr() {
        let mut sched = PlateauScheduler::new(0.5, 3, 1e-3).unwrap();
        let mut lr = 0.1;
        for i in 0..20 {
            lr = sched.update(i as f64, lr);
        }
        assert_eq!(lr, 0.1);
    }

    #[test]
    fn constant_metric_decays_once_after_patience() {
        let mut sched = PlateauScheduler::new(0.5, 5, 1e-3).unwrap();
        let mut lr = 0.1;
        // First window establishes the best metric; patience more trigger one decay.
        for _ in 0..6 {
            lr = sched.update(1.0, lr);
        }
        assert!((lr - 0.05).abs() < 1e-15);
    }

    #[test]
    fn oscillation_with_improvement_every_other_window_keeps_lr() {
        let mut sched = PlateauScheduler::new(0.5, 5, 1e-3).unwrap();
        let mut lr = 0.1;
        let mut metric = 0.0;
        for step in 0..40 {
            let m = if step % 2 == 0 {
                metric += 1.0;
                metric
            } else {
                metric - 0.5
            };
            lr = sched.update(m, lr);
        }
        assert_eq!(lr, 0.1);
    }

    #[test]
    fn sub_threshold_improvement_counts_as_plateau() {
        let mut sched = PlateauScheduler::new(0.5, 2, 1e-2).unwrap();
        let mut lr = 1.0;
        lr = sched.update(0.0, lr);
        lr = sched.update(1e-3, lr);
        lr = sched.update(2e-3, lr);
        assert!((lr - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PlateauScheduler::new(1.5, 3, 0.0).is_err());
        assert!(PlateauScheduler::new(0.5, 0, 0.0).is_err());
    }
}
