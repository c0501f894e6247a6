use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureTemplateConfig};
use super::lattice::Lattice;
use crate::bilou::Tag;
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::tokenizer::Token;

pub const MODEL_FORMAT_VERSION: &str = "1";

const K: usize = Tag::ALL.len();

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub final_objective: f64,
    pub converged: bool,
}

/// Feature ids of a tokenized sequence, one list per position. Features
/// unknown to the model are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceFeatures {
    pub positions: Vec<Vec<usize>>,
}

impl SequenceFeatures {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Linear-chain CRF over the five BILOU tags.
///
/// All weights live in one flat vector laid out as
/// `[emissions (features x tags) | transitions (tags x tags) | start | stop]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel<F> {
    template: FeatureTemplateConfig,
    l2: F,
    features: Vec<String>,
    index: HashMap<String, usize>,
    weights: Vec<F>,
    pub training_meta: TrainingMeta,
}

impl<F: Scalar> CrfModel<F> {
    pub fn new(template: FeatureTemplateConfig) -> Self {
        CrfModel {
            template,
            l2: F::zero(),
            features: Vec::new(),
            index: HashMap::new(),
            weights: vec![F::zero(); K * K + 2 * K],
            training_meta: TrainingMeta::default(),
        }
    }

    pub fn tag_set(&self) -> &'static [Tag] {
        &Tag::ALL
    }

    pub fn n_tags(&self) -> usize {
        K
    }

    pub fn template(&self) -> &FeatureTemplateConfig {
        &self.template
    }

    pub fn l2(&self) -> F {
        self.l2
    }

    pub fn set_l2(&mut self, l2: F) {
        self.l2 = l2;
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.features
    }

    pub fn feature_id(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    /// Id of `feature`, registering it with zero weights if new.
    pub fn intern(&mut self, feature: &str) -> usize {
        if let Some(&id) = self.index.get(feature) {
            return id;
        }
        let id = self.features.len();
        self.features.push(feature.to_string());
        self.index.insert(feature.to_string(), id);
        let at = id * K;
        self.weights.splice(at..at, std::iter::repeat_n(F::zero(), K));
        id
    }

    pub fn n_params(&self) -> usize {
        self.weights.len()
    }

    pub fn params(&self) -> &[F] {
        &self.weights
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.weights
    }

    pub(crate) fn set_params(&mut self, params: Vec<F>) {
        assert_eq!(params.len(), self.weights.len());
        self.weights = params;
    }

    pub(crate) fn emission_len(&self) -> usize {
        self.features.len() * K
    }

    pub fn emission(&self, feature: usize, tag: usize) -> F {
        self.weights[feature * K + tag]
    }

    pub fn set_emission(&mut self, feature: &str, tag: Tag, w: F) {
        let id = self.intern(feature);
        self.weights[id * K + tag.index()] = w;
    }

    pub fn transitions(&self) -> &[F] {
        let e = self.emission_len();
        &self.weights[e..e + K * K]
    }

    pub fn set_transition(&mut self, from: Tag, to: Tag, w: F) {
        let e = self.emission_len();
        self.weights[e + from.index() * K + to.index()] = w;
    }

    pub fn start(&self) -> &[F] {
        let e = self.emission_len() + K * K;
        &self.weights[e..e + K]
    }

    pub fn set_start(&mut self, tag: Tag, w: F) {
        let e = self.emission_len() + K * K;
        self.weights[e + tag.index()] = w;
    }

    pub fn stop(&self) -> &[F] {
        let e = self.emission_len() + K * K + K;
        &self.weights[e..e + K]
    }

    pub fn set_stop(&mut self, tag: Tag, w: F) {
        let e = self.emission_len() + K * K + K;
        self.weights[e + tag.index()] = w;
    }

    pub fn featurize(&self, tokens: &[Token]) -> SequenceFeatures {
        SequenceFeatures {
            positions: (0..tokens.len())
                .map(|p| {
                    featurize(tokens, p, &self.template)
                        .iter()
                        .filter_map(|f| self.feature_id(f))
                        .collect()
                })
                .collect(),
        }
    }

    /// Lattice of `feats` under an explicit parameter vector with this
    /// model's layout.
    pub fn lattice_with<'a>(&self, params: &'a [F], feats: &SequenceFeatures) -> Lattice<'a, F> {
        let e = self.emission_len();
        let mut emissions = vec![F::zero(); feats.len() * K];
        for (t, ids) in feats.positions.iter().enumerate() {
            let row = &mut emissions[t * K..(t + 1) * K];
            for &f in ids {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = *cell + params[f * K + j];
                }
            }
        }
        Lattice {
            n_tags: K,
            emissions,
            transitions: &params[e..e + K * K],
            start: &params[e + K * K..e + K * K + K],
            stop: &params[e + K * K + K..e + K * K + 2 * K],
        }
    }

    pub fn lattice(&self, feats: &SequenceFeatures) -> Lattice<'_, F> {
        self.lattice_with(&self.weights, feats)
    }

    /// `ln Z` of a featurized sequence.
    pub fn log_partition(&self, feats: &SequenceFeatures) -> F {
        self.lattice(feats).log_partition()
    }

    /// Viterbi decoding.
    pub fn predict(&self, tokens: &[Token]) -> Vec<Tag> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let (path, _) = self.lattice(&self.featurize(tokens)).viterbi();
        path.into_iter().map(|i| Tag::ALL[i]).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&crate::io::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let s = |x: F| x.to_string();
        let mut emissions: Vec<(String, String, String)> = Vec::new();
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        order.sort_by(|&a, &b| self.features[a].cmp(&self.features[b]));
        for f in order {
            for (j, tag) in Tag::ALL.iter().enumerate() {
                let w = self.emission(f, j);
                if w != F::zero() {
                    emissions.push((self.features[f].clone(), tag.to_string(), s(w)));
                }
            }
        }
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION.to_string(),
            tag_set: Tag::ALL.iter().map(Tag::to_string).collect(),
            template: self.template.clone(),
            l2: s(self.l2),
            transitions: self.transitions().chunks(K).map(|r| r.iter().map(|&x| s(x)).collect()).collect(),
            start: self.start().iter().map(|&x| s(x)).collect(),
            stop: self.stop().iter().map(|&x| s(x)).collect(),
            emissions,
            training_meta: self.training_meta.clone(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("model file serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("corrupt model file: {e}")))?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Model("missing format_version".into()))?;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion {
                found: version.to_string(),
                expected: MODEL_FORMAT_VERSION.to_string(),
            });
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::Model(format!("corrupt model file: {e}")))?;
        let want: Vec<String> = Tag::ALL.iter().map(Tag::to_string).collect();
        if file.tag_set != want {
            return Err(Error::Model(format!("tag set {:?} differs from {want:?}", file.tag_set)));
        }
        let num = |s: &str| -> Result<F> {
            let x: F = s
                .parse()
                .map_err(|_| Error::Model(format!("invalid weight {s:?}")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Model(format!("non-finite weight {s:?}")))
            }
        };
        let mut m = CrfModel::new(file.template);
        m.l2 = num(&file.l2)?;
        m.training_meta = file.training_meta;
        if file.transitions.len() != K || file.transitions.iter().any(|r| r.len() != K) {
            return Err(Error::Model("transitions must be 5x5".into()));
        }
        if file.start.len() != K || file.stop.len() != K {
            return Err(Error::Model("start/stop must have 5 entries".into()));
        }
        for (feature, tag, w) in &file.emissions {
            let tag: Tag = tag
                .parse()
                .map_err(|_| Error::Model(format!("invalid tag {tag:?}")))?;
            m.set_emission(feature, tag, num(w)?);
        }
        for (i, row) in file.transitions.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                m.set_transition(Tag::ALL[i], Tag::ALL[j], num(w)?);
            }
        }
        for j in 0..K {
            m.set_start(Tag::ALL[j], num(&file.start[j])?);
            m.set_stop(Tag::ALL[j], num(&file.stop[j])?);
        }
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: String,
    tag_set: Vec<String>,
    template: FeatureTemplateConfig,
    l2: String,
    transitions: Vec<Vec<String>>,
    start: Vec<String>,
    stop: Vec<String>,
    emissions: Vec<(String, String, String)>,
    training_meta: TrainingMeta,
}
