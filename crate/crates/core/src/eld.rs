//! Lexical language detection: TF-IDF over confidence-weighted word counts
//! followed by logistic regression. The same classifier serves speaker-role
//! detection.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Token;

/// Decision threshold on the model probability.
pub const THRESHOLD: f64 = 0.5;
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EldError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training corpus contains only label {0}")]
    SingleClassCorpus(u8),
    #[error("label must be 0 or 1, got {0}")]
    BadLabel(u8),
    #[error("no in-vocabulary evidence to score")]
    EmptyEvidence,
    #[error("invalid confidence {0}")]
    BadConfidence(f64),
    #[error("invalid model: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Word to accumulated confidence mass.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SoftCountVector(pub BTreeMap<String, f64>);

impl SoftCountVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str, conf: f64) -> Result<(), EldError> {
        if !(0.0..=1.0).contains(&conf) {
            return Err(EldError::BadConfidence(conf));
        }
        *self.0.entry(word.to_string()).or_default() += conf;
        Ok(())
    }

    pub fn get(&self, word: &str) -> f64 {
        self.0.get(word).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(w, m)| (w.as_str(), *m))
    }
}

pub fn soft_counts(transcript: &[Token]) -> Result<SoftCountVector, EldError> {
    let mut v = SoftCountVector::new();
    for t in transcript {
        v.add(&t.word, t.conf)?;
    }
    Ok(v)
}

/// Plain term counts (every confidence 1).
pub fn term_counts<S: AsRef<str>>(words: &[S]) -> SoftCountVector {
    let mut v = SoftCountVector::new();
    for w in words {
        *v.0.entry(w.as_ref().to_string()).or_default() += 1.0;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Label 1 = English.
    Eld,
    /// Label 1 = ATCO, 0 = pilot.
    Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    /// Upper bound on the step size; the effective step is also capped by
    /// the inverse smoothness constant of the loss so descent is monotone.
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 7,
            epochs: 300,
            learning_rate: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTextModel {
    pub version: u32,
    pub kind: ModelKind,
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
}

/// Sparse feature vector: (vocabulary index, value), sorted by index.
pub type Features = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Features,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Cross-entropy of logit `z` against label `y`, computed stably.
fn log_loss(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

impl LinearTextModel {
    /// Model with unit IDF and uniform random parameters in [-1, 1].
    pub fn random(kind: ModelKind, vocabulary: Vec<String>, seed: u64) -> Self {
        let mut vocabulary = vocabulary;
        vocabulary.sort();
        vocabulary.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..vocabulary.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        LinearTextModel {
            version: MODEL_VERSION,
            kind,
            idf: vec![1.0; vocabulary.len()],
            vocabulary,
            weights,
            bias: rng.gen_range(-1.0..=1.0),
            config: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
        }
    }

    fn index(&self, word: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|w| w.as_str().cmp(word)).ok()
    }

    /// TF-IDF features. TF is normalized over in-vocabulary mass, so
    /// unknown words are ignored entirely.
    pub fn features(&self, v: &SoftCountVector) -> Result<Features, EldError> {
        let known: Vec<(usize, f64)> = v
            .iter()
            .filter(|(_, m)| *m > 0.0)
            .filter_map(|(w, m)| self.index(w).map(|i| (i, m)))
            .collect();
        let mass: f64 = known.iter().map(|(_, m)| m).sum();
        if mass <= 0.0 {
            return Err(EldError::EmptyEvidence);
        }
        Ok(known
            .into_iter()
            .map(|(i, m)| (i, m / mass * self.idf[i]))
            .collect())
    }

    fn logit_with(weights: &[f64], bias: f64, x: &Features) -> f64 {
        bias + x.iter().map(|&(i, v)| weights[i] * v).sum::<f64>()
    }

    fn logit(&self, x: &Features) -> f64 {
        Self::logit_with(&self.weights, self.bias, x)
    }

    /// Probability of label 1, strictly inside (0, 1).
    pub fn score(&self, v: &SoftCountVector) -> Result<f64, EldError> {
        let x = self.features(v)?;
        Ok(sigmoid(self.logit(&x)).clamp(f64::EPSILON, 1.0 - f64::EPSILON))
    }

    pub fn decide(&self, v: &SoftCountVector) -> Result<bool, EldError> {
        Ok(self.score(v)? >= THRESHOLD)
    }

    /// Cross-entropy loss on one example.
    pub fn loss(&self, v: &SoftCountVector, label: u8) -> Result<f64, EldError> {
        let x = self.features(v)?;
        Ok(log_loss(self.logit(&x), f64::from(label)))
    }

    /// Analytic loss gradient on one example: (p - y) x for the weights.
    pub fn gradient(&self, v: &SoftCountVector, label: u8) -> Result<Gradient, EldError> {
        check_label(label)?;
        let x = self.features(v)?;
        let r = sigmoid(self.logit(&x)) - f64::from(label);
        Ok(Gradient {
            weights: x.iter().map(|&(i, xi)| (i, r * xi)).collect(),
            bias: r,
        })
    }

    /// Largest relative error between the analytic gradient and central
    /// differences with step `eps`, over every parameter the samples touch.
    pub fn gradient_check(&self, samples: &[(SoftCountVector, u8)], eps: f64) -> Result<f64, EldError> {
        let mut weights = self.weights.clone();
        let mut worst: f64 = 0.0;
        for (v, y) in samples {
            let g = self.gradient(v, *y)?;
            let x = self.features(v)?;
            let y = f64::from(*y);
            let loss = |w: &[f64], b: f64| log_loss(Self::logit_with(w, b, &x), y);
            for &(i, analytic) in &g.weights {
                let orig = weights[i];
                weights[i] = orig + eps;
                let up = loss(&weights, self.bias);
                weights[i] = orig - eps;
                let down = loss(&weights, self.bias);
                weights[i] = orig;
                worst = worst.max(rel_err(analytic, (up - down) / (2.0 * eps)));
            }
            let numeric = (loss(&weights, self.bias + eps) - loss(&weights, self.bias - eps)) / (2.0 * eps);
            worst = worst.max(rel_err(g.bias, numeric));
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EldError> {
        let m: LinearTextModel = serde_json::from_str(text)?;
        m.check()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EldError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EldError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<(), EldError> {
        if self.version != MODEL_VERSION {
            return Err(EldError::Model(format!("unsupported version {}", self.version)));
        }
        let n = self.vocabulary.len();
        if self.idf.len() != n || self.weights.len() != n {
            return Err(EldError::Model(format!(
                "vocabulary {n}, idf {}, weights {}",
                self.idf.len(),
                self.weights.len()
            )));
        }
        if !self.vocabulary.windows(2).all(|w| w[0] < w[1]) {
            return Err(EldError::Model("vocabulary must be sorted and unique".into()));
        }
        Ok(())
    }
}

fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (a - n).abs() / scale
    }
}

fn check_label(label: u8) -> Result<(), EldError> {
    if label > 1 {
        Err(EldError::BadLabel(label))
    } else {
        Ok(())
    }
}

/// Fitted model plus the mean training loss before each epoch and after
/// the last one.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearTextModel,
    pub losses: Vec<f64>,
}

pub fn train(
    kind: ModelKind,
    corpus: &[(SoftCountVector, u8)],
    config: TrainConfig,
) -> Result<LinearTextModel, EldError> {
    train_with_history(kind, corpus, config).map(|o| o.model)
}

pub fn train_with_history(
    kind: ModelKind,
    corpus: &[(SoftCountVector, u8)],
    config: TrainConfig,
) -> Result<TrainOutcome, EldError> {
    if corpus.is_empty() {
        return Err(EldError::EmptyCorpus);
    }
    for (_, y) in corpus {
        check_label(*y)?;
    }
    let first = corpus[0].1;
    if corpus.iter().all(|(_, y)| *y == first) {
        return Err(EldError::SingleClassCorpus(first));
    }

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (v, _) in corpus {
        for (w, m) in v.iter() {
            if !(m.is_finite() && m >= 0.0) {
                return Err(EldError::BadConfidence(m));
            }
            if m > 0.0 {
                *df.entry(w).or_default() += 1;
            }
        }
    }
    let n = corpus.len() as f64;
    let vocabulary: Vec<String> = df.keys().map(|w| w.to_string()).collect();
    let idf: Vec<f64> = df.values().map(|&d| (n / (1.0 + d as f64)).ln() + 1.0).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = LinearTextModel {
        version: MODEL_VERSION,
        kind,
        weights: (0..vocabulary.len()).map(|_| rng.gen_range(-0.01..=0.01)).collect(),
        bias: 0.0,
        vocabulary,
        idf,
        config,
    };

    let data: Vec<(Features, f64)> = corpus
        .iter()
        .map(|(v, y)| (model.features(v).unwrap_or_default(), f64::from(*y)))
        .collect();
    let smoothness = 0.25
        * data
            .iter()
            .map(|(x, _)| 1.0 + x.iter().map(|(_, v)| v * v).sum::<f64>())
            .fold(0.0, f64::max);
    let step = config.learning_rate.min(1.0 / smoothness);

    let mean_loss = |m: &LinearTextModel| data.iter().map(|(x, y)| log_loss(m.logit(x), *y)).sum::<f64>() / n;
    let mut losses = Vec::with_capacity(config.epochs + 1);
    let mut grad = vec![0.0; model.weights.len()];
    for _ in 0..config.epochs {
        losses.push(mean_loss(&model));
        grad.fill(0.0);
        let mut grad_b = 0.0;
        for (x, y) in &data {
            let r = sigmoid(model.logit(x)) - y;
            for &(i, v) in x {
                grad[i] += r * v;
            }
            grad_b += r;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= step * g / n;
        }
        model.bias -= step * grad_b / n;
    }
    losses.push(mean_loss(&model));
    Ok(TrainOutcome { model, losses })
}

/// Fraction of examples whose thresholded score matches the label.
/// Examples without evidence count as errors.
pub fn accuracy(model: &LinearTextModel, data: &[(SoftCountVector, u8)]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let right = data
        .iter()
        .filter(|(v, y)| model.decide(v).is_ok_and(|d| d == (*y == 1)))
        .count();
    right as f64 / data.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn doc(words: &str) -> SoftCountVector {
        term_counts(&words.split_whitespace().collect::<Vec<_>>())
    }

    fn bilingual() -> Vec<(SoftCountVector, u8)> {
        let en = [
            "descend flight level one two zero",
            "climb flight level three four zero",
            "contact tower one one eight decimal five",
            "cleared to land runway two four",
            "turn left heading two seven zero",
            "good morning descend altitude four thousand",
        ];
        let cz = [
            "dobry den na shledanou",
            "klesejte hladina letu sto dvacet",
            "stoupejte hladina tri sta",
            "kontaktujte vez dekuji",
            "na shledanou dobry den",
            "dekuji pristani povoleno drahou",
        ];
        en.iter()
            .map(|s| (doc(s), 1))
            .chain(cz.iter().map(|s| (doc(s), 0)))
            .collect()
    }

    #[test]
    fn soft_count_examples() {
        let v = soft_counts(&[Token::new("seven", 0.9), Token::new("seven", 0.5)]).unwrap();
        assert!((v.get("seven") - 1.4).abs() < 1e-12);
        assert!(soft_counts(&[]).unwrap().is_empty());
        let ones = soft_counts(&[Token::new("a", 1.0), Token::new("b", 1.0), Token::new("a", 1.0)]).unwrap();
        assert_eq!(ones, doc("a b a"));
        assert!(soft_counts(&[Token::new("a", 1.5)]).is_err());
    }

    #[test]
    fn separable_corpus_is_learned() {
        let corpus: Vec<_> = (0..10)
            .map(|i| if i % 2 == 0 { (doc("alpha alpha"), 1) } else { (doc("beta"), 0) })
            .collect();
        let m = train(ModelKind::Eld, &corpus, TrainConfig::default()).unwrap();
        assert_eq!(accuracy(&m, &corpus), 1.0);
    }

    #[test]
    fn training_is_deterministic_and_monotone() {
        let c = bilingual();
        let a = train_with_history(ModelKind::Eld, &c, TrainConfig::default()).unwrap();
        let b = train_with_history(ModelKind::Eld, &c, TrainConfig::default()).unwrap();
        assert_eq!(a.model, b.model);
        assert!(a.model.weights.iter().zip(&b.model.weights).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.losses.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{:?}", a.losses);
        let other = train(ModelKind::Eld, &c, TrainConfig { seed: 8, ..TrainConfig::default() }).unwrap();
        assert_ne!(other.weights, a.model.weights);
    }

    #[test]
    fn training_errors() {
        assert!(matches!(train(ModelKind::Eld, &[], TrainConfig::default()), Err(EldError::EmptyCorpus)));
        let one = vec![(doc("a"), 1), (doc("b"), 1)];
        assert!(matches!(
            train(ModelKind::Eld, &one, TrainConfig::default()),
            Err(EldError::SingleClassCorpus(1))
        ));
    }

    #[test]
    fn scores_bilingual_examples() {
        let m = train(ModelKind::Eld, &bilingual(), TrainConfig::default()).unwrap();
        assert!(m.score(&doc("descend flight level one two zero")).unwrap() >= 0.5);
        assert!(m.score(&doc("dobry den na shledanou")).unwrap() < 0.5);
        assert!(matches!(m.score(&doc("")), Err(EldError::EmptyEvidence)));
        assert!(matches!(m.score(&doc("zzz qqq")), Err(EldError::EmptyEvidence)));
        let s = m.score(&doc("descend zzz")).unwrap();
        assert_eq!(s, m.score(&doc("descend")).unwrap());
    }

    #[test]
    fn zero_model_gradient_is_closed_form() {
        let mut m = LinearTextModel::random(ModelKind::Eld, vec!["a".into(), "b".into()], 1);
        m.weights.fill(0.0);
        m.bias = 0.0;
        let v = doc("a b b");
        let g = m.gradient(&v, 1).unwrap();
        let x = m.features(&v).unwrap();
        assert_eq!(g.bias, -0.5);
        for ((i, gi), (j, xi)) in g.weights.iter().zip(&x) {
            assert_eq!(i, j);
            assert_eq!(*gi, -0.5 * xi);
        }
        assert!(m.gradient_check(&[(v, 1)], 1e-5).unwrap() >= 0.0);
    }

    #[test]
    fn random_model_gradient_check() {
        let vocab: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let m = LinearTextModel::random(ModelKind::Eld, vocab.clone(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<_> = (0..100)
            .map(|_| {
                let mut v = SoftCountVector::new();
                for _ in 0..rng.gen_range(1..6) {
                    let w = &vocab[rng.gen_range(0..vocab.len())];
                    v.add(w, rng.gen_range(0.05..=1.0)).unwrap();
                }
                (v, rng.gen_range(0..=1u8))
            })
            .collect();
        let err = m.gradient_check(&samples, 1e-5).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn model_json_round_trip() {
        let m = train(ModelKind::Role, &bilingual(), TrainConfig::default()).unwrap();
        let back = LinearTextModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let mut bad = m.clone();
        bad.weights.pop();
        assert!(LinearTextModel::from_json(&bad.to_json()).is_err());
        bad = m;
        bad.version = 99;
        assert!(LinearTextModel::from_json(&bad.to_json()).is_err());
    }

    proptest! {
        #[test]
        fn confidence_scaling_preserves_score(scale in 0.01f64..1.0, words in prop::collection::vec(0usize..6, 1..8)) {
            let m = train(ModelKind::Eld, &bilingual(), TrainConfig { epochs: 20, ..TrainConfig::default() }).unwrap();
            let pool = ["descend", "flight", "dobry", "den", "level", "shledanou"];
            let mut v = SoftCountVector::new();
            let mut scaled = SoftCountVector::new();
            for (k, &w) in words.iter().enumerate() {
                let c = 0.5 + 0.5 * (k as f64 / 8.0);
                v.add(pool[w], c).unwrap();
                scaled.add(pool[w], c * scale).unwrap();
            }
            let a = m.score(&v).unwrap();
            let b = m.score(&scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!(a > 0.0 && a < 1.0);
        }
    }
}
