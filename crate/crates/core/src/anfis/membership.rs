use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Premise membership function. Parameters live in the normalized `[-1, 1]`
/// input space of the owning network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", bound = "T: Real")]
pub enum MembershipFn<T> {
    /// `1 / (1 + exp(-a (x - c)))`.
    Sigmoid { a: T, c: T },
    /// Generalized bell `1 / (1 + |(x - c) / a|^(2b))`.
    Bell { a: T, b: T, c: T },
}

/// Smallest bell width / exponent and sigmoid slope magnitude kept after a
/// gradient step.
pub(crate) const MIN_PARAM: f64 = 1e-6;

impl<T: Real> MembershipFn<T> {
    pub fn sigmoid(a: T, c: T) -> Result<Self> {
        let mf = MembershipFn::Sigmoid { a, c };
        mf.validate()?;
        Ok(mf)
    }

    pub fn bell(a: T, b: T, c: T) -> Result<Self> {
        let mf = MembershipFn::Bell { a, b, c };
        mf.validate()?;
        Ok(mf)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MembershipFn::Sigmoid { a, c } => {
                if !(a.is_finite() && c.is_finite()) || a == T::zero() {
                    return Err(Error::validation(format!("sigmoid needs finite nonzero slope, got a={a}, c={c}")));
                }
            }
            MembershipFn::Bell { a, b, c } => {
                if !(a.is_finite() && b.is_finite() && c.is_finite()) || a <= T::zero() || b <= T::zero() {
                    return Err(Error::validation(format!("bell needs a > 0, b > 0, got a={a}, b={b}, c={c}")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: T) -> T {
        match *self {
            MembershipFn::Sigmoid { a, c } => T::one() / (T::one() + (-a * (x - c)).exp()),
            MembershipFn::Bell { a, b, c } => {
                let z = ((x - c) / a).abs();
                T::one() / (T::one() + z.powf(b + b))
            }
        }
    }

    /// Number of trainable parameters (2 for sigmoid, 3 for bell).
    pub fn param_count(&self) -> usize {
        match self {
            MembershipFn::Sigmoid { .. } => 2,
            MembershipFn::Bell { .. } => 3,
        }
    }

    /// Parameters in canonical order: sigmoid `(a, c)`, bell `(a, b, c)`.
    pub fn params(&self) -> Vec<T> {
        match *self {
            MembershipFn::Sigmoid { a, c } => vec![a, c],
            MembershipFn::Bell { a, b, c } => vec![a, b, c],
        }
    }

    /// Overwrites the parameters from `p` (canonical order). No validation.
    pub fn set_params(&mut self, p: &[T]) {
        match self {
            MembershipFn::Sigmoid { a, c } => {
                *a = p[0];
                *c = p[1];
            }
            MembershipFn::Bell { a, b, c } => {
                *a = p[0];
                *b = p[1];
                *c = p[2];
            }
        }
    }

    /// Membership value and its partial derivatives w.r.t. the parameters.
    ///
    /// The derivatives are written in terms of `mu (1 - mu)` so they stay
    /// finite when the bell power overflows.
    pub fn eval_with_grad(&self, x: T) -> (T, [T; 3]) {
        let zero = T::zero();
        match *self {
            MembershipFn::Sigmoid { a, c } => {
                let s = self.eval(x);
                let ds = s * (T::one() - s);
                (s, [ds * (x - c), -a * ds, zero])
            }
            MembershipFn::Bell { a, b, c } => {
                let z = (x - c) / a;
                if z == zero {
                    return (T::one(), [zero; 3]);
                }
                let mu = self.eval(x);
                let m = mu * (T::one() - mu);
                let two_b = b + b;
                let d_a = two_b * m / a;
                let d_b = -(T::one() + T::one()) * m * z.abs().ln();
                let d_c = two_b * m / (z * a);
                (mu, [d_a, d_b, d_c])
            }
        }
    }

    /// Keeps the parameters inside the valid region after an unconstrained step.
    pub(crate) fn project(&mut self) {
        let min = T::lit(MIN_PARAM);
        match self {
            MembershipFn::Sigmoid { a, .. } => {
                if a.abs() < min {
                    *a = if *a < T::zero() { -min } else { min };
                }
            }
            MembershipFn::Bell { a, b, .. } => {
                *a = a.max(min);
                *b = b.max(min);
            }
        }
    }

    pub fn center(&self) -> T {
        match *self {
            MembershipFn::Sigmoid { c, .. } | MembershipFn::Bell { c, .. } => c,
        }
    }
}

/// Linguistic labels, ordered from negative big to positive big.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NB,
    NM,
    NS,
    ZE,
    PS,
    PM,
    PB,
}

impl Label {
    pub const ALL: [Label; 7] = [Label::NB, Label::NM, Label::NS, Label::ZE, Label::PS, Label::PM, Label::PB];

    /// A symmetric selection of `n` labels (1..=7), in ascending order.
    pub fn spread(n: usize) -> Result<Vec<Label>> {
        use Label::*;
        let labels = match n {
            1 => vec![ZE],
            2 => vec![NB, PB],
            3 => vec![NB, ZE, PB],
            4 => vec![NB, NS, PS, PB],
            5 => vec![NB, NS, ZE, PS, PB],
            6 => vec![NB, NM, NS, PS, PM, PB],
            7 => Label::ALL.to_vec(),
            _ => return Err(Error::validation(format!("between 1 and 7 linguistic terms supported, got {n}"))),
        };
        Ok(labels)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LinguisticTerm<T> {
    pub label: Label,
    pub mf: MembershipFn<T>,
}
