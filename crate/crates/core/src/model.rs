//! Class-to-bitstring mapping, probability readout, argmax prediction and
//! the softmax-log loss.

use serde::{Deserialize, Serialize};

use crate::circuit::{parse_text, to_text, Circuit};
use crate::encoding::Encoding;
use crate::error::{Error, Result};
use crate::simulator::{self, index_of_bitstring, Distribution, ShotCounts};

/// Ordered association of class labels with designated measurement
/// bitstrings. Prediction ties break toward the earliest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, String)>", into = "Vec<(String, String)>")]
pub struct ClassMap {
    entries: Vec<(String, String)>,
    width: usize,
}

impl ClassMap {
    pub fn new(entries: Vec<(String, String)>) -> Result<ClassMap> {
        if entries.is_empty() {
            return Err(Error::Empty("class map"));
        }
        let width = entries[0].1.len();
        for (label, bits) in &entries {
            if bits.len() != width {
                return Err(Error::ClassMap(format!(
                    "bitstring for `{label}` has length {}, expected {width}",
                    bits.len()
                )));
            }
            index_of_bitstring(bits, width)?;
        }
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                if entries[i].0 == entries[j].0 {
                    return Err(Error::ClassMap(format!("duplicate label `{}`", entries[i].0)));
                }
                if entries[i].1 == entries[j].1 {
                    return Err(Error::ClassMap(format!(
                        "bitstring `{}` assigned to both `{}` and `{}`",
                        entries[i].1, entries[i].0, entries[j].0
                    )));
                }
            }
        }
        Ok(ClassMap { entries, width })
    }

    pub fn num_classes(&self) -> usize {
        self.entries.len()
    }

    /// Bitstring length; must equal the circuit width.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn label(&self, class: usize) -> &str {
        &self.entries[class].0
    }

    pub fn bitstring(&self, class: usize) -> &str {
        &self.entries[class].1
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    pub fn position_of_label(&self, label: &str) -> Option<usize> {
        self.entries.iter().position(|(l, _)| l == label)
    }
}

impl TryFrom<Vec<(String, String)>> for ClassMap {
    type Error = Error;
    fn try_from(entries: Vec<(String, String)>) -> Result<ClassMap> {
        ClassMap::new(entries)
    }
}

impl From<ClassMap> for Vec<(String, String)> {
    fn from(map: ClassMap) -> Self {
        map.entries
    }
}

/// Estimated probability P̂_k of each class's bitstring. Probabilities of
/// unmapped bitstrings are simply not represented, so the entries sum to at
/// most one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbs(pub Vec<f64>);

impl ClassProbs {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Read P(s_k) from an exact distribution.
pub fn class_probs_from_distribution(dist: &Distribution, map: &ClassMap) -> Result<ClassProbs> {
    if dist.width() != map.width() {
        return Err(Error::DimensionMismatch {
            what: "class-map bitstring length",
            expected: dist.width(),
            got: map.width(),
        });
    }
    let probs = (0..map.num_classes())
        .map(|k| dist.prob(map.bitstring(k)))
        .collect::<Result<_>>()?;
    Ok(ClassProbs(probs))
}

/// Read Ĉ(s_k)/n from a finite-shot run.
pub fn class_probs_from_counts(counts: &ShotCounts, map: &ClassMap) -> Result<ClassProbs> {
    if counts.width() != map.width() {
        return Err(Error::DimensionMismatch {
            what: "class-map bitstring length",
            expected: counts.width(),
            got: map.width(),
        });
    }
    let n = counts.shots() as f64;
    let probs = (0..map.num_classes())
        .map(|k| Ok(counts.count(map.bitstring(k))? as f64 / n))
        .collect::<Result<_>>()?;
    Ok(ClassProbs(probs))
}

/// Argmax over P̂_k; ties break toward the earliest class.
pub fn predict(probs: &ClassProbs) -> usize {
    let mut best = 0;
    for (k, &p) in probs.0.iter().enumerate().skip(1) {
        if p > probs.0[best] {
            best = k;
        }
    }
    best
}

/// L = −log(e^{P̂_y} / Σ_k e^{P̂_k}), stabilized by subtracting max P̂.
pub fn loss_single(probs: &ClassProbs, y: usize) -> f64 {
    let max = probs.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = probs.0.iter().map(|p| (p - max).exp()).sum::<f64>().ln();
    -(probs.0[y] - max) + log_sum
}

/// How class probabilities are estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    /// Theoretical P(s) from the statevector.
    Exact,
    /// Finite-shot frequency estimates, seeded for reproducibility.
    Sampled { shots: u64, seed: u64 },
}

/// Everything a classifier needs except the trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTemplate {
    pub circuit: Circuit,
    pub class_map: ClassMap,
    pub encoding: Encoding,
}

impl ModelTemplate {
    pub fn with_theta(self, theta: Vec<f64>) -> Result<ModelSpec> {
        ModelSpec::new(self.circuit, self.class_map, self.encoding, theta)
    }
}

/// A complete classifier: circuit, readout map, feature encoding and the
/// trained parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(with = "circuit_text")]
    pub circuit: Circuit,
    pub class_map: ClassMap,
    pub encoding: Encoding,
    pub theta: Vec<f64>,
}

impl ModelSpec {
    pub fn new(
        circuit: Circuit,
        class_map: ClassMap,
        encoding: Encoding,
        theta: Vec<f64>,
    ) -> Result<ModelSpec> {
        if class_map.width() != circuit.width() {
            return Err(Error::DimensionMismatch {
                what: "class-map bitstring length",
                expected: circuit.width(),
                got: class_map.width(),
            });
        }
        if theta.len() != circuit.num_params() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector θ",
                expected: circuit.num_params(),
                got: theta.len(),
            });
        }
        Ok(ModelSpec {
            circuit,
            class_map,
            encoding,
            theta,
        })
    }

    /// Class probabilities for one raw feature vector under `theta`.
    pub fn class_probs_with(
        &self,
        theta: &[f64],
        x: &[f64],
        mode: EvalMode,
    ) -> Result<ClassProbs> {
        let omega = self.encoding.encode(x)?;
        self.class_probs_encoded(theta, &omega, mode)
    }

    /// Same, for a pre-encoded angle vector.
    pub fn class_probs_encoded(
        &self,
        theta: &[f64],
        omega: &[f64],
        mode: EvalMode,
    ) -> Result<ClassProbs> {
        let bound = self.circuit.bind(omega, theta)?;
        match mode {
            EvalMode::Exact => {
                let dist = simulator::distribution(&bound)?;
                class_probs_from_distribution(&dist, &self.class_map)
            }
            EvalMode::Sampled { shots, seed } => {
                let counts = simulator::sample(&bound, shots, seed)?;
                class_probs_from_counts(&counts, &self.class_map)
            }
        }
    }

    /// Predicted class index for one raw feature vector.
    pub fn predict_class(&self, x: &[f64], mode: EvalMode) -> Result<usize> {
        Ok(predict(&self.class_probs_with(&self.theta, x, mode)?))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        crate::write_atomic(path, json.as_bytes())
    }

    pub fn load(path: &std::path::Path) -> Result<ModelSpec> {
        let text = std::fs::read_to_string(path)?;
        let spec: ModelSpec = serde_json::from_str(&text)?;
        // re-validate cross-field invariants
        ModelSpec::new(spec.circuit, spec.class_map, spec.encoding, spec.theta)
    }
}

mod circuit_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(circuit: &Circuit, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&to_text(circuit))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Circuit, D::Error> {
        let text = String::deserialize(de)?;
        parse_text(&text).map_err(serde::de::Error::custom)
    }
}

/// Mean of `loss_single` over a batch, each sample encoded, bound with
/// (ω, θ) and evaluated in the given mode. In sampled mode each sample draws
/// its own shot seed from a stream seeded by `mode.seed`, so the result is
/// deterministic. The mean uses pairwise summation so the reduction order
/// cannot perturb the result.
pub fn loss_batch(
    spec: &ModelSpec,
    theta: &[f64],
    batch: &[(Vec<f64>, usize)],
    mode: EvalMode,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let encoded: Vec<(Vec<f64>, usize)> = batch
        .iter()
        .map(|(x, y)| Ok((spec.encoding.encode(x)?, *y)))
        .collect::<Result<_>>()?;
    loss_batch_encoded(spec, theta, &encoded, mode)
}

/// [`loss_batch`] over pre-encoded angle vectors (the training loop encodes
/// the dataset once up front).
pub fn loss_batch_encoded(
    spec: &ModelSpec,
    theta: &[f64],
    encoded: &[(Vec<f64>, usize)],
    mode: EvalMode,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    if encoded.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let mut seed_stream = match mode {
        EvalMode::Sampled { seed, .. } => Some(rand_chacha::ChaCha8Rng::seed_from_u64(seed)),
        EvalMode::Exact => None,
    };
    let mut losses = Vec::with_capacity(encoded.len());
    for (omega, y) in encoded {
        let sample_mode = match (&mode, &mut seed_stream) {
            (EvalMode::Exact, _) => EvalMode::Exact,
            (EvalMode::Sampled { shots, .. }, Some(stream)) => EvalMode::Sampled {
                shots: *shots,
                seed: stream.gen(),
            },
            _ => unreachable!(),
        };
        let probs = spec.class_probs_encoded(theta, omega, sample_mode)?;
        losses.push(loss_single(&probs, *y));
    }
    Ok(pairwise_sum(&losses) / losses.len() as f64)
}

/// Pairwise (cascade) summation: deterministic and order-insensitive to
/// floating-point roundoff at the 1e-12 level for these batch sizes.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
