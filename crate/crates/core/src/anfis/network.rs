//! Five-layer zero-order Sugeno network: membership degrees, product
//! T-norm firing, normalization, weighted consequents and the summing output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::membership::{Label, LinguisticTerm, MembershipFn};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InputVar<T> {
    pub name: String,
    /// Declared `[lo, hi]`; mapped affinely onto `[-1, 1]` before layer 1.
    pub range: [T; 2],
    pub terms: Vec<LinguisticTerm<T>>,
}

impl<T: Real> InputVar<T> {
    pub fn normalize(&self, x: T) -> T {
        let [lo, hi] = self.range;
        (x - lo) * (T::lit(2.0) / (hi - lo)) - T::one()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule<T> {
    /// One term index per network input.
    pub antecedent: Vec<usize>,
    /// Zero-order Sugeno consequent `z`.
    pub consequent: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Bell,
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleBase {
    /// Rule `k` uses term `k` of every input.
    Compact,
    /// Every combination of terms (`terms^inputs` rules).
    Grid,
}

/// Construction recipe for a fresh network.
#[derive(Clone, Debug)]
pub struct AnfisConfig<T> {
    pub inputs: Vec<(String, [T; 2])>,
    pub terms: usize,
    pub shape: Shape,
    pub rule_base: RuleBase,
    pub eta: T,
    /// Seed for an optional +-1% uniform jitter on the premise parameters.
    pub jitter_seed: Option<u64>,
}

impl<T: Real> AnfisConfig<T> {
    pub fn new(inputs: Vec<(String, [T; 2])>, terms: usize, eta: T) -> Self {
        Self { inputs, terms, shape: Shape::Bell, rule_base: RuleBase::Compact, eta, jitter_seed: None }
    }
}

/// Which family a flat parameter belongs to; used by gradient checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamClass {
    SigmoidA,
    SigmoidC,
    BellA,
    BellB,
    BellC,
    Consequent,
}

/// Layer values retained by a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace<T> {
    pub normalized: Vec<T>,
    pub degrees: Vec<Vec<T>>,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub output: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDoc<T>", into = "NetworkDoc<T>", bound = "T: Real")]
pub struct AnfisNetwork<T> {
    pub inputs: Vec<InputVar<T>>,
    pub rules: Vec<Rule<T>>,
    /// Learning rate of the gradient step.
    pub eta: T,
}

/// On-disk layout: antecedents and consequents are stored side by side.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct NetworkDoc<T> {
    inputs: Vec<InputVar<T>>,
    rules: Vec<Vec<usize>>,
    consequents: Vec<T>,
    eta: T,
}

impl<T: Real> TryFrom<NetworkDoc<T>> for AnfisNetwork<T> {
    type Error = Error;

    fn try_from(doc: NetworkDoc<T>) -> Result<Self> {
        if doc.rules.len() != doc.consequents.len() {
            return Err(Error::validation(format!(
                "{} rules but {} consequents",
                doc.rules.len(),
                doc.consequents.len()
            )));
        }
        let rules = doc
            .rules
            .into_iter()
            .zip(doc.consequents)
            .map(|(antecedent, consequent)| Rule { antecedent, consequent })
            .collect();
        AnfisNetwork::new(doc.inputs, rules, doc.eta)
    }
}

impl<T: Real> From<AnfisNetwork<T>> for NetworkDoc<T> {
    fn from(net: AnfisNetwork<T>) -> Self {
        let (rules, consequents) = net.rules.into_iter().map(|r| (r.antecedent, r.consequent)).unzip();
        NetworkDoc { inputs: net.inputs, rules, consequents, eta: net.eta }
    }
}

impl<T: Real> AnfisNetwork<T> {
    pub fn new(inputs: Vec<InputVar<T>>, rules: Vec<Rule<T>>, eta: T) -> Result<Self> {
        let net = Self { inputs, rules, eta };
        net.validate()?;
        Ok(net)
    }

    /// Builds a network with equally spaced term centers over `[-1, 1]`,
    /// bell width half the center spacing, `b = 2` and zero consequents.
    pub fn initialize(cfg: &AnfisConfig<T>) -> Result<Self> {
        let labels = Label::spread(cfg.terms)?;
        let n = cfg.terms;
        let spacing = if n > 1 { T::lit(2.0) / T::from_count(n - 1) } else { T::lit(2.0) };
        let mut rng = cfg.jitter_seed.map(ChaCha8Rng::seed_from_u64);
        let mut jitter = |v: T| match rng.as_mut() {
            Some(r) => v * (T::one() + T::lit(0.01 * (2.0 * r.random::<f64>() - 1.0))),
            None => v,
        };

        let mut inputs = Vec::with_capacity(cfg.inputs.len());
        for (name, range) in &cfg.inputs {
            let mut terms = Vec::with_capacity(n);
            for (j, &label) in labels.iter().enumerate() {
                let center = if n > 1 { -T::one() + spacing * T::from_count(j) } else { T::zero() };
                let mf = match cfg.shape {
                    Shape::Bell => MembershipFn::Bell {
                        a: jitter(spacing * T::lit(0.5)),
                        b: jitter(T::lit(2.0)),
                        c: jitter(center),
                    },
                    Shape::Sigmoid => {
                        let slope = T::lit(4.0) / spacing;
                        let a = if center < T::zero() { -slope } else { slope };
                        MembershipFn::Sigmoid { a: jitter(a), c: jitter(center) }
                    }
                };
                terms.push(LinguisticTerm { label, mf });
            }
            inputs.push(InputVar { name: name.clone(), range: *range, terms });
        }

        let arity = inputs.len();
        let rules = match cfg.rule_base {
            RuleBase::Compact => (0..n).map(|k| Rule { antecedent: vec![k; arity], consequent: T::zero() }).collect(),
            RuleBase::Grid => {
                let total = n.checked_pow(arity as u32).ok_or_else(|| Error::validation("grid rule base too large"))?;
                (0..total)
                    .map(|mut idx| {
                        let mut antecedent = vec![0; arity];
                        for slot in antecedent.iter_mut().rev() {
                            *slot = idx % n;
                            idx /= n;
                        }
                        Rule { antecedent, consequent: T::zero() }
                    })
                    .collect()
            }
        };
        Self::new(inputs, rules, cfg.eta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::validation("network needs at least one input"));
        }
        if self.rules.is_empty() {
            return Err(Error::validation("network needs at least one rule"));
        }
        if !(self.eta.is_finite() && self.eta >= T::zero()) {
            return Err(Error::validation(format!("learning rate must be finite and >= 0, got {}", self.eta)));
        }
        for input in &self.inputs {
            let [lo, hi] = input.range;
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::validation(format!("input '{}' has invalid range [{lo}, {hi}]", input.name)));
            }
            if input.terms.is_empty() {
                return Err(Error::validation(format!("input '{}' has no terms", input.name)));
            }
            for (j, t) in input.terms.iter().enumerate() {
                t.mf.validate()?;
                if input.terms[..j].iter().any(|o| o.label == t.label) {
                    return Err(Error::validation(format!("input '{}' repeats label {:?}", input.name, t.label)));
                }
            }
        }
        for (r, rule) in self.rules.iter().enumerate() {
            if rule.antecedent.len() != self.inputs.len() {
                return Err(Error::validation(format!("rule {r} has arity {}", rule.antecedent.len())));
            }
            for (i, &j) in rule.antecedent.iter().enumerate() {
                if j >= self.inputs[i].terms.len() {
                    return Err(Error::validation(format!("rule {r} references missing term {j} of input {i}")));
                }
            }
            if !rule.consequent.is_finite() {
                return Err(Error::validation(format!("rule {r} has a non-finite consequent")));
            }
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn consequents(&self) -> Vec<T> {
        self.rules.iter().map(|r| r.consequent).collect()
    }

    pub fn set_consequents(&mut self, z: &[T]) {
        for (rule, &v) in self.rules.iter_mut().zip(z) {
            rule.consequent = v;
        }
    }

    fn check_arity(&self, input: &[T]) -> Result<()> {
        if input.len() != self.arity() {
            return Err(Error::validation(format!(
                "input arity {} does not match network arity {}",
                input.len(),
                self.arity()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite network input"));
        }
        Ok(())
    }

    /// Layer 1: degree of every (input, term) pair.
    pub fn layer1(&self, input: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_arity(input)?;
        Ok(self
            .inputs
            .iter()
            .zip(input)
            .map(|(var, &x)| {
                let u = var.normalize(x);
                var.terms.iter().map(|t| t.mf.eval(u)).collect()
            })
            .collect())
    }

    /// Layer 2: product T-norm over each rule's antecedent terms.
    pub fn layer2_firing(&self, degrees: &[Vec<T>]) -> Vec<T> {
        self.rules
            .iter()
            .map(|rule| rule.antecedent.iter().enumerate().fold(T::one(), |acc, (i, &j)| acc * degrees[i][j]))
            .collect()
    }

    pub fn forward(&self, input: &[T]) -> Result<(T, Trace<T>)> {
        self.check_arity(input)?;
        let normalized: Vec<T> = self.inputs.iter().zip(input).map(|(v, &x)| v.normalize(x)).collect();
        let degrees = self.layer1(input)?;
        let alpha = self.layer2_firing(&degrees);
        let beta = layer3_normalize(&alpha)?;
        // layers 4 and 5
        let output = beta.iter().zip(&self.rules).map(|(&b, r)| b * r.consequent).sum();
        Ok((output, Trace { normalized, degrees, alpha, beta, output }))
    }

    pub fn predict(&self, input: &[T]) -> Result<T> {
        self.forward(input).map(|(o, _)| o)
    }

    /// Per-sample error `1/2 (y - o)^2`.
    pub fn loss(&self, input: &[T], target: T) -> Result<T> {
        let o = self.predict(input)?;
        let e = target - o;
        Ok(T::lit(0.5) * e * e)
    }

    pub fn premise_param_count(&self) -> usize {
        self.inputs.iter().flat_map(|v| &v.terms).map(|t| t.mf.param_count()).sum()
    }

    /// Total number of trainable parameters (premises, then consequents).
    pub fn param_count(&self) -> usize {
        self.premise_param_count() + self.rules.len()
    }

    /// Flat parameter vector: each input's terms' membership parameters in
    /// order, followed by one consequent per rule.
    pub fn params(&self) -> Vec<T> {
        let mut p: Vec<T> = self.inputs.iter().flat_map(|v| &v.terms).flat_map(|t| t.mf.params()).collect();
        p.extend(self.rules.iter().map(|r| r.consequent));
        p
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::validation(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let mut k = 0;
        for term in self.inputs.iter_mut().flat_map(|v| v.terms.iter_mut()) {
            let n = term.mf.param_count();
            term.mf.set_params(&p[k..k + n]);
            k += n;
        }
        self.set_consequents(&p[k..]);
        Ok(())
    }

    pub fn param_classes(&self) -> Vec<ParamClass> {
        let mut c = Vec::with_capacity(self.param_count());
        for term in self.inputs.iter().flat_map(|v| &v.terms) {
            match term.mf {
                MembershipFn::Sigmoid { .. } => c.extend([ParamClass::SigmoidA, ParamClass::SigmoidC]),
                MembershipFn::Bell { .. } => c.extend([ParamClass::BellA, ParamClass::BellB, ParamClass::BellC]),
            }
        }
        c.extend(std::iter::repeat_n(ParamClass::Consequent, self.rules.len()));
        c
    }

    pub(crate) fn project_premises(&mut self) {
        for term in self.inputs.iter_mut().flat_map(|v| v.terms.iter_mut()) {
            term.mf.project();
        }
    }

    /// Offsets of each (input, term) block inside the flat parameter vector.
    fn term_offsets(&self) -> Vec<Vec<usize>> {
        let mut k = 0;
        self.inputs
            .iter()
            .map(|v| {
                v.terms
                    .iter()
                    .map(|t| {
                        let off = k;
                        k += t.mf.param_count();
                        off
                    })
                    .collect()
            })
            .collect()
    }

    /// Analytic gradient of `E = sum_p 1/2 (y_p - o_p)^2` w.r.t. every parameter,
    /// together with `E` itself.
    pub fn gradient<'a, I>(&self, samples: I) -> Result<(T, Vec<T>)>
    where
        I: IntoIterator<Item = (&'a [T], T)>,
    {
        let offsets = self.term_offsets();
        let n_premise = self.premise_param_count();
        let mut grad = vec![T::zero(); self.param_count()];
        let mut total = T::zero();
        let arity = self.arity();

        for (input, target) in samples {
            self.check_arity(input)?;
            // layer 1 with parameter derivatives
            let mut degrees = Vec::with_capacity(arity);
            let mut dmu = Vec::with_capacity(arity);
            for (var, &x) in self.inputs.iter().zip(input) {
                let u = var.normalize(x);
                let (d, g): (Vec<T>, Vec<[T; 3]>) = var.terms.iter().map(|t| t.mf.eval_with_grad(u)).unzip();
                degrees.push(d);
                dmu.push(g);
            }
            let alpha = self.layer2_firing(&degrees);
            let sum: T = alpha.iter().copied().sum();
            if !(sum > T::zero()) {
                return Err(Error::DegenerateFiring);
            }
            let output: T = alpha.iter().zip(&self.rules).map(|(&a, r)| a * r.consequent).sum::<T>() / sum;
            let err = output - target;
            total = total + T::lit(0.5) * err * err;

            // dE/dmu accumulated per (input, term)
            let mut d_deg: Vec<Vec<T>> = degrees.iter().map(|d| vec![T::zero(); d.len()]).collect();
            let mut prefix = vec![T::one(); arity + 1];
            for (r, rule) in self.rules.iter().enumerate() {
                grad[n_premise + r] = grad[n_premise + r] + err * alpha[r] / sum;
                let g_r = err * (rule.consequent - output) / sum;
                // product of the other antecedent degrees, without dividing by a possibly-zero degree
                for i in 0..arity {
                    prefix[i + 1] = prefix[i] * degrees[i][rule.antecedent[i]];
                }
                let mut suffix = T::one();
                for i in (0..arity).rev() {
                    let j = rule.antecedent[i];
                    d_deg[i][j] = d_deg[i][j] + g_r * prefix[i] * suffix;
                    suffix = suffix * degrees[i][j];
                }
            }
            for (i, var) in self.inputs.iter().enumerate() {
                for (j, term) in var.terms.iter().enumerate() {
                    let off = offsets[i][j];
                    for q in 0..term.mf.param_count() {
                        grad[off + q] = grad[off + q] + d_deg[i][j] * dmu[i][j][q];
                    }
                }
            }
        }
        Ok((total, grad))
    }
}

/// Layer 3: `beta_r = alpha_r / sum(alpha)`.
pub fn layer3_normalize<T: Real>(alpha: &[T]) -> Result<Vec<T>> {
    let sum: T = alpha.iter().copied().sum();
    if !(sum > T::zero()) || !sum.is_finite() {
        return Err(Error::DegenerateFiring);
    }
    Ok(alpha.iter().map(|&a| a / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_sigmoid() -> AnfisNetwork<f64> {
        AnfisNetwork::new(
            vec![InputVar {
                name: "x".into(),
                range: [-1.0, 1.0],
                terms: vec![LinguisticTerm { label: Label::ZE, mf: MembershipFn::Sigmoid { a: 1.0, c: 0.0 } }],
            }],
            vec![Rule { antecedent: vec![0], consequent: -2.5 }],
            0.1,
        )
        .unwrap()
    }

    fn default_net() -> AnfisNetwork<f64> {
        let cfg = AnfisConfig::new(
            vec![("p".into(), [-1.0, 1.0]), ("v".into(), [-2.0, 2.0]), ("o".into(), [-1.5, 1.5])],
            7,
            0.01,
        );
        AnfisNetwork::initialize(&cfg).unwrap()
    }

    #[test]
    fn layer1_examples() {
        assert_eq!(single_sigmoid().layer1(&[0.0]).unwrap(), vec![vec![0.5]]);
        let net = default_net();
        // every term's center, one at a time: the matching term has degree 1
        let d = net.layer1(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d[0][3], 1.0);
        assert_eq!(d[1][3], 1.0);
        assert!(matches!(net.layer1(&[0.0, 0.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn all_degrees_one_at_shared_center() {
        let inputs = (0..3)
            .map(|i| InputVar {
                name: format!("in{i}"),
                range: [-1.0, 1.0],
                terms: vec![
                    LinguisticTerm { label: Label::NS, mf: MembershipFn::Bell { a: 0.5, b: 2.0, c: 0.25 } },
                    LinguisticTerm { label: Label::PS, mf: MembershipFn::Bell { a: 0.2, b: 1.0, c: 0.25 } },
                ],
            })
            .collect();
        let net = AnfisNetwork::new(inputs, vec![Rule { antecedent: vec![0, 1, 0], consequent: 1.0 }], 0.1).unwrap();
        let d = net.layer1(&[0.25, 0.25, 0.25]).unwrap();
        assert!(d.iter().flatten().all(|&v| v == 1.0));
    }

    #[test]
    fn firing_and_normalization() {
        let net = default_net();
        let mut degrees = vec![vec![0.0; 7]; 3];
        degrees[0][2] = 0.5;
        degrees[1][2] = 0.4;
        degrees[2][2] = 0.2;
        let alpha = net.layer2_firing(&degrees);
        assert!((alpha[2] - 0.04).abs() < 1e-15);
        assert_eq!(alpha[0], 0.0);

        assert_eq!(layer3_normalize(&[2.0, 3.0, 5.0]).unwrap(), vec![0.2, 0.3, 0.5]);
        assert_eq!(layer3_normalize(&[0.7]).unwrap(), vec![1.0]);
        assert!(matches!(layer3_normalize(&[0.0, 0.0]), Err(Error::DegenerateFiring)));
    }

    #[test]
    fn forward_examples() {
        let (o, trace) = single_sigmoid().forward(&[0.3]).unwrap();
        assert_eq!(o, -2.5);
        assert_eq!(trace.beta, vec![1.0]);

        let mut net = default_net();
        net.set_consequents(&[4.25; 7]);
        assert!((net.predict(&[0.3, -1.1, 0.9]).unwrap() - 4.25).abs() < 1e-12);

        // at x = 0 the degrees are 1/(1 + 2) and 1, so beta = (0.25, 0.75)
        let two = AnfisNetwork::new(
            vec![InputVar {
                name: "x".into(),
                range: [-1.0, 1.0],
                terms: vec![
                    LinguisticTerm { label: Label::NB, mf: MembershipFn::Bell { a: 1.0, b: 1.0, c: 2f64.sqrt() } },
                    LinguisticTerm { label: Label::PB, mf: MembershipFn::Bell { a: 1.0, b: 1.0, c: 0.0 } },
                ],
            }],
            vec![Rule { antecedent: vec![0], consequent: 4.0 }, Rule { antecedent: vec![1], consequent: 8.0 }],
            0.1,
        )
        .unwrap();
        let (o, t) = two.forward(&[0.0]).unwrap();
        assert!((t.beta[0] - 0.25).abs() < 1e-15);
        assert!((o - 7.0).abs() < 1e-14);
    }

    #[test]
    fn loss_examples() {
        let net = single_sigmoid();
        assert_eq!(net.loss(&[0.0], -2.5).unwrap(), 0.0);
        let mut zero = net.clone();
        zero.set_consequents(&[0.0]);
        assert_eq!(zero.loss(&[0.0], 1.0).unwrap(), 0.5);
        let samples: Vec<(Vec<f64>, f64)> = vec![(vec![0.0], 1.0), (vec![0.5], 2.0)];
        let (e, _) = zero.gradient(samples.iter().map(|(x, y)| (x.as_slice(), *y))).unwrap();
        assert_eq!(e, 2.5);
    }

    #[test]
    fn initialization_layout() {
        let net = default_net();
        assert_eq!(net.rules.len(), 7);
        let centers: Vec<f64> = net.inputs[0].terms.iter().map(|t| t.mf.center()).collect();
        assert!((centers[0] + 1.0).abs() < 1e-15 && (centers[6] - 1.0).abs() < 1e-15);
        match net.inputs[0].terms[0].mf {
            MembershipFn::Bell { a, b, .. } => {
                assert!((a - 1.0 / 6.0).abs() < 1e-15);
                assert_eq!(b, 2.0);
            }
            _ => panic!("expected bell"),
        }
        assert!(net.consequents().iter().all(|&z| z == 0.0));

        let mut grid = AnfisConfig::new(vec![("a".into(), [0.0, 1.0]), ("b".into(), [0.0, 1.0])], 3, 0.1);
        grid.rule_base = RuleBase::Grid;
        let g = AnfisNetwork::<f64>::initialize(&grid).unwrap();
        assert_eq!(g.rules.len(), 9);
        assert_eq!(g.rules[5].antecedent, vec![1, 2]);
    }

    #[test]
    fn params_round_trip() {
        let mut net = default_net();
        let mut p = net.params();
        assert_eq!(p.len(), 3 * 7 * 3 + 7);
        assert_eq!(net.param_classes().len(), p.len());
        p[0] = 0.3;
        *p.last_mut().unwrap() = 9.0;
        net.set_params(&p).unwrap();
        assert_eq!(net.params(), p);
        assert!(net.set_params(&p[1..]).is_err());
    }

    #[test]
    fn invalid_networks_rejected() {
        let mut net = single_sigmoid();
        net.rules[0].antecedent = vec![1];
        assert!(net.validate().is_err());
        let mut net = single_sigmoid();
        net.inputs[0].range = [1.0, 1.0];
        assert!(net.validate().is_err());
    }
}
