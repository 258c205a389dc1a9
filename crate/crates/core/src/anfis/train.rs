//! Batch gradient descent and the hybrid least-squares / gradient regime.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::network::AnfisNetwork;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Sample<T> {
    pub input: Vec<T>,
    pub target: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrainingSet<T> {
    pub samples: Vec<Sample<T>>,
}

impl<T: Real> TrainingSet<T> {
    pub fn new(samples: Vec<Sample<T>>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, input: Vec<T>, target: T) {
        self.samples.push(Sample { input, target });
    }

    pub fn validate(&self, arity: usize) -> Result<()> {
        for (k, s) in self.samples.iter().enumerate() {
            if s.input.len() != arity {
                return Err(Error::validation(format!(
                    "sample {k} has arity {} but the network expects {arity}",
                    s.input.len()
                )));
            }
            if !s.target.is_finite() || s.input.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("sample {k} is not finite")));
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[T], T)> {
        self.samples.iter().map(|s| (s.input.as_slice(), s.target))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Batch gradient descent on every parameter.
    Gd,
    /// Least-squares consequents, then a gradient step on the premises.
    Hybrid,
}

impl<T: Real> AnfisNetwork<T> {
    /// Set error `E = sum_p 1/2 (y_p - o_p)^2`.
    pub fn set_loss(&self, data: &TrainingSet<T>) -> Result<T> {
        data.samples.iter().try_fold(T::zero(), |acc, s| Ok(acc + self.loss(&s.input, s.target)?))
    }

    /// Batch gradient descent on all parameters for `epochs` epochs.
    /// Returns the set error after each epoch.
    pub fn train_gd(&mut self, data: &TrainingSet<T>, epochs: usize) -> Result<Vec<T>> {
        if epochs == 0 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        data.validate(self.arity())?;
        let mut losses = Vec::with_capacity(epochs);
        let (_, mut grad) = self.gradient(data.pairs())?;
        for epoch in 1..=epochs {
            self.descend(&grad, self.param_count(), epoch)?;
            let (loss, next) = self.gradient(data.pairs())?;
            losses.push(loss);
            grad = next;
        }
        Ok(losses)
    }

    /// Hybrid learning. Each epoch solves the consequents by linear least
    /// squares with the premises frozen, records the resulting set error, then
    /// takes one gradient step on the premise parameters. A final
    /// least-squares pass leaves the consequents optimal for the returned
    /// premises.
    pub fn train_hybrid(&mut self, data: &TrainingSet<T>, epochs: usize) -> Result<Vec<T>> {
        if epochs == 0 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        data.validate(self.arity())?;
        if data.len() < self.rules.len() {
            return Err(Error::validation(format!(
                "hybrid training needs at least as many samples ({}) as rules ({})",
                data.len(),
                self.rules.len()
            )));
        }
        let mut warned = false;
        let mut losses = Vec::with_capacity(epochs);
        for epoch in 1..=epochs {
            self.fit_consequents(data, &mut warned)?;
            let (loss, grad) = self.gradient(data.pairs())?;
            losses.push(loss);
            self.descend(&grad, self.premise_param_count(), epoch)?;
        }
        self.fit_consequents(data, &mut warned)?;
        Ok(losses)
    }

    /// Solves `sum_r beta_r(x_p) z_r = y_p` for `z` in the least-squares sense
    /// (minimum norm when rank deficient). Returns the numerical rank.
    pub fn fit_consequents(&mut self, data: &TrainingSet<T>, warned: &mut bool) -> Result<usize> {
        let (p, r) = (data.len(), self.rules.len());
        let mut design = DMatrix::<f64>::zeros(p, r);
        let mut y = DVector::<f64>::zeros(p);
        for (row, s) in data.samples.iter().enumerate() {
            let (_, trace) = self.forward(&s.input)?;
            for (col, b) in trace.beta.iter().enumerate() {
                design[(row, col)] = b.as_f64();
            }
            y[row] = s.target.as_f64();
        }
        let svd = design.svd(true, true);
        let max_sv = svd.singular_values.max();
        let eps = max_sv * 1e-12 * p.max(r) as f64;
        let rank = svd.rank(eps);
        if rank < r && !*warned {
            warn!("least-squares system is rank deficient ({rank} < {r}); using the minimum-norm solution");
            *warned = true;
        }
        let z = svd.solve(&y, eps).map_err(|e| Error::validation(format!("least-squares solve failed: {e}")))?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("least-squares solve produced non-finite consequents"));
        }
        let z: Vec<T> = z.iter().map(|&v| T::lit(v)).collect();
        self.set_consequents(&z);
        Ok(rank)
    }

    /// `theta <- theta - eta * grad` on the first `n` parameters.
    fn descend(&mut self, grad: &[T], n: usize, epoch: usize) -> Result<()> {
        if let Some(parameter) = grad[..n].iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { epoch, parameter });
        }
        let mut params = self.params();
        for (p, g) in params[..n].iter_mut().zip(grad) {
            *p = *p - self.eta * *g;
        }
        self.set_params(&params)?;
        self.project_premises();
        Ok(())
    }
}
