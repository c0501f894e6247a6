//! Maximum conditional likelihood training by full-batch gradient ascent.

use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureTemplateConfig};
use super::model::{CrfModel, SequenceFeatures, TrainingMeta};
use crate::bilou::{validate, TaggedSequence};
use crate::error::{Error, Result};
use crate::num::{cast, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub l2: f64,
    /// Step applied to the per-sequence mean gradient in the first epoch.
    pub initial_step: f64,
    /// Step at epoch `t` is `initial_step / (1 + decay * t)`.
    pub decay: f64,
    /// Halve the step until the objective does not decrease.
    pub backtrack: bool,
    /// Stop once the norm of the per-sequence mean gradient drops below this.
    pub tolerance: f64,
    /// Reserved for data shuffling; full-batch ascent does not consume it.
    pub seed: u64,
    pub template: FeatureTemplateConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            l2: 1.0,
            initial_step: 1.0,
            decay: 0.0,
            backtrack: true,
            tolerance: 1e-4,
            seed: 0,
            template: FeatureTemplateConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Training(m.into()));
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be a finite non-negative number");
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step must be positive");
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return bad("decay must be non-negative");
        }
        if self.template.is_empty() {
            return bad("feature template enables no features");
        }
        Ok(())
    }
}

/// Penalized conditional log-likelihood of a featurized corpus,
/// `sum log p(y | x) - l2/2 * |w|^2`, over a model's parameter layout.
pub struct Objective<F> {
    model: CrfModel<F>,
    data: Vec<(SequenceFeatures, Vec<usize>)>,
}

impl<F: Scalar> Objective<F> {
    /// Featurize `corpus`, registering every observed feature.
    pub fn new(corpus: &[TaggedSequence], template: FeatureTemplateConfig, l2: F) -> Result<Self> {
        let mut model = CrfModel::new(template);
        model.set_l2(l2);
        let mut data = Vec::with_capacity(corpus.len());
        for seq in corpus {
            if let Some(v) = validate(&seq.tags).first() {
                return Err(Error::Training(format!(
                    "record {:?}: invalid BILOU tags ({} at token {})",
                    seq.record_id, v.kind, v.index
                )));
            }
            if seq.is_empty() {
                continue;
            }
            let positions = (0..seq.len())
                .map(|p| {
                    featurize(&seq.tokens, p, model.template())
                        .iter()
                        .map(|f| model.intern(f))
                        .collect()
                })
                .collect();
            let gold = seq.tags.iter().map(|t| t.index()).collect();
            data.push((SequenceFeatures { positions }, gold));
        }
        Ok(Objective { model, data })
    }

    pub fn n_params(&self) -> usize {
        self.model.n_params()
    }

    pub fn n_sequences(&self) -> usize {
        self.data.len()
    }

    pub fn model(&self) -> &CrfModel<F> {
        &self.model
    }

    pub fn into_model(self) -> CrfModel<F> {
        self.model
    }

    pub fn value(&self, params: &[F]) -> F {
        let ll = self.data.iter().fold(F::zero(), |acc, (feats, gold)| {
            let lat = self.model.lattice_with(params, feats);
            acc + lat.score(gold) - lat.log_partition()
        });
        ll - self.penalty(params)
    }

    fn penalty(&self, params: &[F]) -> F {
        let half: F = cast(0.5);
        half * self.model.l2() * params.iter().fold(F::zero(), |a, &w| a + w * w)
    }

    /// Objective value and its gradient: empirical minus expected feature
    /// counts, minus the L2 term. Sequences are summed in corpus order.
    pub fn value_and_gradient(&self, params: &[F]) -> (F, Vec<F>) {
        let k = self.model.n_tags();
        let e = self.model.emission_len();
        let (tr, st, sp) = (e, e + k * k, e + k * k + k);
        let mut grad = vec![F::zero(); params.len()];
        let mut ll = F::zero();
        for (feats, gold) in &self.data {
            let lat = self.model.lattice_with(params, feats);
            let m = lat.marginals();
            ll = ll + lat.score(gold) - m.log_z;
            let n = gold.len();
            for (t, ids) in feats.positions.iter().enumerate() {
                for &f in ids {
                    grad[f * k + gold[t]] = grad[f * k + gold[t]] + F::one();
                    for j in 0..k {
                        grad[f * k + j] = grad[f * k + j] - m.node[t * k + j];
                    }
                }
            }
            for (t, w) in gold.windows(2).enumerate() {
                grad[tr + w[0] * k + w[1]] = grad[tr + w[0] * k + w[1]] + F::one();
                for ij in 0..k * k {
                    grad[tr + ij] = grad[tr + ij] - m.edge[t * k * k + ij];
                }
            }
            grad[st + gold[0]] = grad[st + gold[0]] + F::one();
            grad[sp + gold[n - 1]] = grad[sp + gold[n - 1]] + F::one();
            for j in 0..k {
                grad[st + j] = grad[st + j] - m.node[j];
                grad[sp + j] = grad[sp + j] - m.node[(n - 1) * k + j];
            }
        }
        let l2 = self.model.l2();
        for (g, &w) in grad.iter_mut().zip(params) {
            *g = *g - l2 * w;
        }
        (ll - self.penalty(params), grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub step: f64,
}

/// Train and return the model with one log entry per completed epoch.
/// Entry `t` holds the objective after epoch `t`'s update.
pub fn train_logged<F: Scalar>(
    corpus: &[TaggedSequence],
    config: &TrainConfig,
) -> Result<(CrfModel<F>, Vec<EpochLog>)> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::Training("empty training corpus".into()));
    }
    let objective = Objective::new(corpus, config.template.clone(), cast(config.l2))?;
    let scale = F::one() / cast::<F>(objective.n_sequences().max(1) as f64);
    let mut params = objective.model().params().to_vec();
    let (mut value, mut grad) = objective.value_and_gradient(&params);
    let mut log = Vec::new();
    let mut converged = false;
    let to_f64 = |x: F| x.to_f64().unwrap_or(f64::NAN);
    for epoch in 0..config.max_epochs {
        let gnorm = grad.iter().fold(F::zero(), |a, &g| a + g * g).sqrt() * scale;
        if to_f64(gnorm) < config.tolerance {
            converged = true;
            break;
        }
        let mut step = config.initial_step / (1.0 + config.decay * epoch as f64);
        let mut accepted = None;
        for _ in 0..60 {
            let s: F = cast::<F>(step) * scale;
            let cand: Vec<F> = params.iter().zip(&grad).map(|(&w, &g)| w + s * g).collect();
            let (v, g) = objective.value_and_gradient(&cand);
            if !config.backtrack || v >= value {
                accepted = Some((cand, v, g));
                break;
            }
            step /= 2.0;
        }
        let Some((cand, v, g)) = accepted else {
            // No ascent direction left at machine precision.
            converged = true;
            break;
        };
        params = cand;
        value = v;
        grad = g;
        log.push(EpochLog {
            epoch,
            objective: to_f64(value),
            gradient_norm: to_f64(gnorm),
            step,
        });
    }
    let mut model = objective.into_model();
    model.set_params(params);
    model.training_meta = TrainingMeta {
        epochs: log.len(),
        final_objective: to_f64(value),
        converged,
    };
    Ok((model, log))
}

pub fn train<F: Scalar>(corpus: &[TaggedSequence], config: &TrainConfig) -> Result<CrfModel<F>> {
    train_logged(corpus, config).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilou::Tag;
    use crate::tokenizer::tokenize;

    #[test]
    fn memorizes_single_record() {
        let seq = TaggedSequence::new("a", tokenize("HEROIN"), vec![Tag::U_DRUG]).unwrap();
        let config = TrainConfig {
            max_epochs: 200,
            ..Default::default()
        };
        let m: CrfModel<f64> = train(&[seq], &config).unwrap();
        assert_eq!(m.predict(&tokenize("HEROIN")), [Tag::U_DRUG]);
        assert!(m.training_meta.epochs > 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(train::<f64>(&[], &TrainConfig::default()).is_err());
        let bad = TaggedSequence::new("a", tokenize("X Y"), vec![Tag::B_DRUG, Tag::O]).unwrap();
        let err = train::<f64>(&[bad], &TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("unclosed B"), "{err}");
        let ok = TaggedSequence::new("a", tokenize("X"), vec![Tag::O]).unwrap();
        let cfg = TrainConfig {
            max_epochs: 0,
            ..Default::default()
        };
        assert!(train::<f64>(std::slice::from_ref(&ok), &cfg).is_err());
        let cfg = TrainConfig {
            l2: -1.0,
            ..Default::default()
        };
        assert!(train::<f64>(&[ok], &cfg).is_err());
    }

    #[test]
    fn value_matches_value_and_gradient() {
        let seq = TaggedSequence::new(
            "a",
            tokenize("HEROIN AND FENTANYL"),
            vec![Tag::U_DRUG, Tag::O, Tag::U_DRUG],
        )
        .unwrap();
        let obj: Objective<f64> = Objective::new(&[seq], FeatureTemplateConfig::default(), 0.5).unwrap();
        let p: Vec<f64> = (0..obj.n_params()).map(|i| (i as f64 * 0.37).sin() * 0.3).collect();
        assert!((obj.value(&p) - obj.value_and_gradient(&p).0).abs() < 1e-12);
    }
}
