//! Linear SVM training: L2-regularized L1-loss dual coordinate descent for
//! the binary case, one-vs-rest reduction for the three classes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::Error;
use crate::features::SparseVector;
use crate::rng;
use crate::scalar::Scalar;
use crate::Result;

/// Solver hyperparameters.
///
/// `bias` is the value of a constant feature appended to every instance;
/// 0 disables it. `tolerance` bounds the largest projected-gradient
/// violation at which a pass counts as converged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingParams {
    pub c: f64,
    pub bias: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TrainingParams {
    fn default() -> Self {
        TrainingParams {
            c: 1.0,
            bias: 1.0,
            tolerance: 0.1,
            max_iterations: 1000,
        }
    }
}

impl TrainingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("c = {} must be positive", self.c)));
        }
        if !(self.bias.is_finite() && self.bias >= 0.0) {
            return Err(Error::Config(format!(
                "bias = {} must be nonnegative",
                self.bias
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance = {} must be positive",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Feature vectors with their gold labels, all of one dimension.
#[derive(Debug, Clone)]
pub struct TrainingProblem<F> {
    features: Vec<SparseVector<F>>,
    labels: Vec<Label>,
}

impl<F: Scalar> TrainingProblem<F> {
    pub fn new(features: Vec<SparseVector<F>>, labels: Vec<Label>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Training("empty training set".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature vectors but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].dim();
        if let Some(bad) = features.iter().find(|x| x.dim() != dim) {
            return Err(Error::Dimension(format!(
                "mixed dimensions {} and {}",
                dim,
                bad.dim()
            )));
        }
        Ok(TrainingProblem { features, labels })
    }

    pub fn features(&self) -> &[SparseVector<F>] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> u32 {
        self.features[0].dim()
    }
}

/// Result of one binary solve.
#[derive(Debug, Clone)]
pub struct BinaryOutcome<F> {
    /// Feature weights; the bias weight sits at index `dim` when enabled.
    pub weights: Vec<F>,
    /// Final dual variables, one per instance, each in `[0, c]`.
    pub alpha: Vec<F>,
    /// Full passes executed.
    pub epochs: usize,
    /// Whether the violation bound was met on an unshrunk pass.
    pub converged: bool,
    /// Dual objective after each pass; nonincreasing.
    pub dual_objectives: Vec<f64>,
}

/// Solve the binary L1-loss SVM dual by coordinate descent.
///
/// Minimizes `0.5 a'Qa - e'a` over `0 <= a <= c` with
/// `Q_ij = y_i y_j <x~_i, x~_j>`, maintaining `w = sum y_i a_i x~_i`
/// (`x~` is the instance with the bias feature appended). One epoch visits
/// the active set in a freshly shuffled order; bounded coordinates whose
/// gradient cannot improve are shrunk away and re-verified before the
/// solver reports convergence. `targets` must be +1/-1.
pub fn train_binary<F: Scalar>(
    features: &[SparseVector<F>],
    targets: &[i8],
    params: &TrainingParams,
    seed: u64,
) -> Result<BinaryOutcome<F>> {
    params.validate()?;
    if features.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if features.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} feature vectors but {} targets",
            features.len(),
            targets.len()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t != 1 && t != -1) {
        return Err(Error::Training(format!("target {t} is not +1 or -1")));
    }
    let dim = features[0].dim() as usize;
    if let Some(bad) = features.iter().find(|x| x.dim() as usize != dim) {
        return Err(Error::Dimension(format!(
            "mixed dimensions {} and {}",
            dim,
            bad.dim()
        )));
    }

    let n = features.len();
    let has_bias = params.bias > 0.0;
    let bias = F::from_f64(params.bias).expect("bias fits scalar");
    let c = F::from_f64(params.c).expect("c fits scalar");
    let update_threshold = F::from_f64(1e-12).expect("threshold fits scalar");

    let y: Vec<F> = targets
        .iter()
        .map(|&t| if t > 0 { F::one() } else { -F::one() })
        .collect();
    let qd: Vec<F> = features
        .iter()
        .map(|x| {
            let mut q = x.squared_norm();
            if has_bias {
                q = q + bias * bias;
            }
            q
        })
        .collect();

    let w_len = dim + usize::from(has_bias);
    let mut w = vec![F::zero(); w_len];
    let mut alpha = vec![F::zero(); n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut pg_max_old = F::infinity();
    let mut pg_min_old = F::neg_infinity();
    let mut rng = rng::seeded(seed);
    let mut dual_objectives = Vec::new();
    let mut converged = false;

    while dual_objectives.len() < params.max_iterations {
        rng::shuffle(&mut active, &mut rng);
        let mut pg_max = F::neg_infinity();
        let mut pg_min = F::infinity();

        let mut s = 0;
        while s < active.len() {
            let i = active[s];
            let mut value = features[i].dot_dense(&w);
            if has_bias {
                value = value + w[dim] * bias;
            }
            let g = y[i] * value - F::one();

            let mut pg = F::zero();
            if alpha[i] == F::zero() {
                if g > pg_max_old {
                    active.swap_remove(s);
                    continue;
                }
                if g < F::zero() {
                    pg = g;
                }
            } else if alpha[i] == c {
                if g < pg_min_old {
                    active.swap_remove(s);
                    continue;
                }
                if g > F::zero() {
                    pg = g;
                }
            } else {
                pg = g;
            }

            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);

            if pg.abs() > update_threshold {
                let old = alpha[i];
                // qd can be (negative) zero for an all-zero instance with
                // bias disabled; the objective is then linear in alpha, so
                // the optimum sits at the bound the gradient points to.
                alpha[i] = if qd[i] > F::zero() {
                    (old - g / qd[i]).max(F::zero()).min(c)
                } else if g < F::zero() {
                    c
                } else {
                    F::zero()
                };
                let delta = (alpha[i] - old) * y[i];
                features[i].add_scaled(&mut w, delta);
                if has_bias {
                    w[dim] = w[dim] + delta * bias;
                }
            }
            s += 1;
        }

        let norm_sq: F = w.iter().map(|&v| v * v).sum();
        let alpha_sum: F = alpha.iter().copied().sum();
        let objective = F::from_f64(0.5).expect("half fits scalar") * norm_sq - alpha_sum;
        dual_objectives.push(objective.to_f64().unwrap_or(f64::NAN));

        let violation = pg_max.max(-pg_min).max(F::zero());
        if violation.to_f64().unwrap_or(f64::INFINITY) < params.tolerance {
            if active.len() == n {
                converged = true;
                break;
            }
            // re-verify on the full set before accepting convergence
            active = (0..n).collect();
            pg_max_old = F::infinity();
            pg_min_old = F::neg_infinity();
            continue;
        }

        pg_max_old = if pg_max <= F::zero() {
            F::infinity()
        } else {
            pg_max
        };
        pg_min_old = if pg_min >= F::zero() {
            F::neg_infinity()
        } else {
            pg_min
        };
    }

    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "training produced non-finite weights".into(),
        ));
    }
    Ok(BinaryOutcome {
        epochs: dual_objectives.len(),
        weights: w,
        alpha,
        converged,
        dual_objectives,
    })
}

/// One-vs-rest linear classifier over the three classes.
#[derive(Debug, Clone)]
pub struct LinearModel<F> {
    dim: u32,
    bias: f64,
    weights: Vec<Vec<F>>,
    bias_weights: Vec<F>,
    vocab_id: Option<String>,
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    dim: u32,
    bias: f64,
    labels: Vec<String>,
    vocab_id: Option<String>,
    weights: Vec<Vec<f64>>,
    bias_weights: Vec<f64>,
}

/// A trained one-vs-rest model plus per-class solver diagnostics.
#[derive(Debug, Clone)]
pub struct OvrTraining<F> {
    pub model: LinearModel<F>,
    pub converged: [bool; 3],
    pub epochs: [usize; 3],
}

/// Train one binary classifier per class (that class against the rest)
/// and assemble them into a [`LinearModel`]. Per-class runs use seeds
/// derived from `seed`, so results do not depend on scheduling.
pub fn train_ovr<F: Scalar>(
    problem: &TrainingProblem<F>,
    params: &TrainingParams,
    seed: u64,
) -> Result<OvrTraining<F>> {
    let distinct = {
        let mut seen = [false; 3];
        for label in problem.labels() {
            seen[label.index()] = true;
        }
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::Training(
            "training set has fewer than two distinct labels".into(),
        ));
    }

    let outcomes: Vec<BinaryOutcome<F>> = Label::ALL
        .par_iter()
        .map(|&class| {
            let targets: Vec<i8> = problem
                .labels()
                .iter()
                .map(|&l| if l == class { 1 } else { -1 })
                .collect();
            train_binary(
                problem.features(),
                &targets,
                params,
                rng::mix_seed(seed, class.index() as u64),
            )
        })
        .collect::<Result<_>>()?;

    let dim = problem.dim();
    let has_bias = params.bias > 0.0;
    let mut weights = Vec::with_capacity(3);
    let mut bias_weights = Vec::with_capacity(3);
    let mut converged = [false; 3];
    let mut epochs = [0usize; 3];
    for (k, outcome) in outcomes.into_iter().enumerate() {
        let mut w = outcome.weights;
        let bias_weight = if has_bias {
            w.pop().expect("bias weight present")
        } else {
            F::zero()
        };
        weights.push(w);
        bias_weights.push(bias_weight);
        converged[k] = outcome.converged;
        epochs[k] = outcome.epochs;
    }

    Ok(OvrTraining {
        model: LinearModel {
            dim,
            bias: params.bias,
            weights,
            bias_weights,
            vocab_id: None,
        },
        converged,
        epochs,
    })
}

impl<F: Scalar> LinearModel<F> {
    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Per-class feature weights, indexed by canonical class order.
    pub fn class_weights(&self, label: Label) -> &[F] {
        &self.weights[label.index()]
    }

    pub fn vocab_id(&self) -> Option<&str> {
        self.vocab_id.as_deref()
    }

    /// Stamp the vocabulary fingerprint the model was trained against.
    pub fn set_vocab_id(&mut self, vocab_id: impl Into<String>) {
        self.vocab_id = Some(vocab_id.into());
    }

    /// Raw decision value of every one-vs-rest classifier, canonical order.
    pub fn decision_values(&self, x: &SparseVector<F>) -> Result<[F; 3]> {
        if x.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "input has dimension {} but the model expects {}",
                x.dim(),
                self.dim
            )));
        }
        let bias = F::from_f64(self.bias).expect("bias fits scalar");
        let mut values = [F::zero(); 3];
        for (k, value) in values.iter_mut().enumerate() {
            *value = x.dot_dense(&self.weights[k]) + self.bias_weights[k] * bias;
        }
        Ok(values)
    }

    /// Argmax over decision values; ties go to the earliest class in
    /// canonical order.
    pub fn predict(&self, x: &SparseVector<F>) -> Result<Label> {
        let values = self.decision_values(x)?;
        let mut best = 0;
        for k in 1..3 {
            if values[k] > values[best] {
                best = k;
            }
        }
        Ok(Label::from_index(best).expect("index in range"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            dim: self.dim,
            bias: self.bias,
            labels: Label::ALL.iter().map(|l| l.name().to_string()).collect(),
            vocab_id: self.vocab_id.clone(),
            weights: self
                .weights
                .iter()
                .map(|row| row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
                .collect(),
            bias_weights: self
                .bias_weights
                .iter()
                .map(|v| v.to_f64().unwrap_or(f64::NAN))
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(json)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        let expected: Vec<String> = Label::ALL.iter().map(|l| l.name().to_string()).collect();
        if file.labels != expected {
            return Err(Error::Format(format!(
                "unexpected label order {:?}",
                file.labels
            )));
        }
        if file.weights.len() != 3 || file.bias_weights.len() != 3 {
            return Err(Error::Format("model must have three classes".into()));
        }
        let dim = file.dim as usize;
        if let Some(row) = file.weights.iter().find(|row| row.len() != dim) {
            return Err(Error::Format(format!(
                "weight row of length {} does not match dimension {dim}",
                row.len()
            )));
        }
        let convert = |v: f64| F::from_f64(v).ok_or_else(|| {
            Error::Format(format!("weight {v} does not fit the scalar type"))
        });
        let mut weights = Vec::with_capacity(3);
        for row in file.weights {
            weights.push(row.into_iter().map(convert).collect::<Result<Vec<F>>>()?);
        }
        let bias_weights = file
            .bias_weights
            .into_iter()
            .map(convert)
            .collect::<Result<Vec<F>>>()?;
        Ok(LinearModel {
            dim: file.dim,
            bias: file.bias,
            weights,
            bias_weights,
            vocab_id: file.vocab_id,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        Self::from_json_str(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthesize_corpus;
    use crate::features::{build_vocabulary, vectorize, FeatureSpec};

    fn sparse(dim: u32, pairs: &[(u32, f64)]) -> SparseVector<f64> {
        SparseVector::new(dim, pairs.to_vec()).unwrap()
    }

    #[test]
    fn defaults_are_fixed() {
        let p = TrainingParams::default();
        assert_eq!(p.c, 1.0);
        assert_eq!(p.bias, 1.0);
        assert_eq!(p.tolerance, 0.1);
        assert_eq!(p.max_iterations, 1000);
        assert!(p.validate().is_ok());
        assert!(TrainingParams { c: 0.0, ..p }.validate().is_err());
        assert!(TrainingParams { bias: -1.0, ..p }.validate().is_err());
        assert!(TrainingParams { tolerance: 0.0, ..p }.validate().is_err());
    }

    #[test]
    fn binary_solver_hits_unit_margins_on_separable_pair() {
        let x = vec![sparse(2, &[(0, 1.0)]), sparse(2, &[(1, 1.0)])];
        let y = [1i8, -1];
        let params = TrainingParams {
            tolerance: 1e-8,
            ..TrainingParams::default()
        };
        let out = train_binary(&x, &y, &params, 0).unwrap();
        assert!(out.converged);
        // optimum: w = (1, -1, 0), both margins exactly 1
        for (xi, &yi) in x.iter().zip(&y) {
            let f = xi.dot_dense(&out.weights) + out.weights[2] * 1.0;
            assert!((f - yi as f64).abs() < 1e-6, "margin {f} for target {yi}");
        }
        for &a in &out.alpha {
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn dual_objective_is_nonincreasing() {
        let gen = lexiclass_testkit::random_problem(7, 40, 12, 0.5);
        let (xd, yd) = (gen.x, gen.y);
        let x: Vec<SparseVector<f64>> = xd
            .iter()
            .map(|row| {
                let pairs: Vec<(u32, f64)> = row
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(i, &v)| (i as u32, v))
                    .collect();
                SparseVector::new(12, pairs).unwrap()
            })
            .collect();
        let y: Vec<i8> = yd.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect();
        let params = TrainingParams {
            tolerance: 1e-6,
            ..TrainingParams::default()
        };
        let out = train_binary(&x, &y, &params, 3).unwrap();
        assert!(out.epochs >= 2);
        for pair in out.dual_objectives.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{} then {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn weights_match_alpha_expansion() {
        let gen = lexiclass_testkit::random_problem(11, 25, 8, 0.6);
        let (xd, yd) = (gen.x, gen.y);
        let x: Vec<SparseVector<f64>> = xd
            .iter()
            .map(|row| {
                let pairs: Vec<(u32, f64)> = row
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(i, &v)| (i as u32, v))
                    .collect();
                SparseVector::new(8, pairs).unwrap()
            })
            .collect();
        let y: Vec<i8> = yd.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).collect();
        let out = train_binary(&x, &y, &TrainingParams::default(), 5).unwrap();
        let mut expected = vec![0.0f64; 9];
        for ((xi, &yi), &ai) in x.iter().zip(&y).zip(&out.alpha) {
            xi.add_scaled(&mut expected, yi as f64 * ai);
            expected[8] += yi as f64 * ai * 1.0;
        }
        for (have, want) in out.weights.iter().zip(&expected) {
            assert!((have - want).abs() < 1e-10);
        }
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let x = vec![
            sparse(3, &[(0, 1.0), (2, 0.5)]),
            sparse(3, &[(1, 1.0)]),
            sparse(3, &[(0, 0.3), (1, 0.8)]),
            sparse(3, &[(2, 1.0)]),
        ];
        let y = [1i8, -1, -1, 1];
        let a = train_binary(&x, &y, &TrainingParams::default(), 42).unwrap();
        let b = train_binary(&x, &y, &TrainingParams::default(), 42).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.alpha, b.alpha);
        assert_eq!(a.epochs, b.epochs);
    }

    #[test]
    fn zero_feature_instance_is_handled() {
        // a zero vector with bias disabled exercises the qd = 0 path
        let x = vec![sparse(2, &[]), sparse(2, &[(0, 1.0)])];
        let y = [-1i8, 1];
        let params = TrainingParams {
            bias: 0.0,
            tolerance: 1e-6,
            ..TrainingParams::default()
        };
        let out = train_binary(&x, &y, &params, 1).unwrap();
        assert!(out.converged);
        assert!(out.weights.iter().all(|w| w.is_finite()));
        assert_eq!(out.alpha[0], 1.0);
    }

    #[test]
    fn ovr_fits_separable_corpus() {
        let corpus = synthesize_corpus(5, [8, 8, 8], 0.0);
        let specs = [FeatureSpec::parse("word:1").unwrap()];
        let vocab = build_vocabulary(corpus.instances().iter(), &specs, 1).unwrap();
        let features: Vec<SparseVector<f64>> = corpus
            .instances()
            .iter()
            .map(|i| vectorize(&vocab, i))
            .collect();
        let problem = TrainingProblem::new(features.clone(), corpus.labels()).unwrap();
        let trained = train_ovr(&problem, &TrainingParams::default(), 42).unwrap();
        let mut model = trained.model;
        model.set_vocab_id(vocab.vocab_id());
        assert_eq!(model.vocab_id(), Some(vocab.vocab_id().as_str()));
        for (x, inst) in features.iter().zip(corpus.instances()) {
            assert_eq!(model.predict(x).unwrap(), inst.label);
        }
    }

    #[test]
    fn ovr_rejects_single_class() {
        let x = vec![sparse(2, &[(0, 1.0)]), sparse(2, &[(1, 1.0)])];
        let problem = TrainingProblem::new(x, vec![Label::Ok, Label::Ok]).unwrap();
        assert!(matches!(
            train_ovr(&problem, &TrainingParams::default(), 0),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn prediction_ties_break_canonically() {
        let model = LinearModel::<f64> {
            dim: 2,
            bias: 1.0,
            weights: vec![vec![0.0; 2]; 3],
            bias_weights: vec![0.0; 3],
            vocab_id: None,
        };
        let x = sparse(2, &[(0, 1.0)]);
        assert_eq!(model.predict(&x).unwrap(), Label::Hate);
    }

    #[test]
    fn decision_values_check_dimension() {
        let corpus = synthesize_corpus(9, [4, 4, 4], 0.0);
        let specs = [FeatureSpec::parse("word:1").unwrap()];
        let vocab = build_vocabulary(corpus.instances().iter(), &specs, 1).unwrap();
        let features: Vec<SparseVector<f64>> = corpus
            .instances()
            .iter()
            .map(|i| vectorize(&vocab, i))
            .collect();
        let problem = TrainingProblem::new(features, corpus.labels()).unwrap();
        let model = train_ovr(&problem, &TrainingParams::default(), 0).unwrap().model;
        let wrong = sparse(1, &[(0, 1.0)]);
        assert!(matches!(
            model.decision_values(&wrong),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn model_json_round_trips_to_both_scalars() {
        let corpus = synthesize_corpus(13, [5, 5, 5], 0.2);
        let specs = [FeatureSpec::parse("word:1").unwrap()];
        let vocab = build_vocabulary(corpus.instances().iter(), &specs, 1).unwrap();
        let features: Vec<SparseVector<f64>> = corpus
            .instances()
            .iter()
            .map(|i| vectorize(&vocab, i))
            .collect();
        let problem = TrainingProblem::new(features.clone(), corpus.labels()).unwrap();
        let mut model = train_ovr(&problem, &TrainingParams::default(), 7).unwrap().model;
        model.set_vocab_id(vocab.vocab_id());

        let json = model.to_json_string().unwrap();
        let back64 = LinearModel::<f64>::from_json_str(&json).unwrap();
        assert_eq!(back64.vocab_id(), model.vocab_id());
        for x in &features {
            assert_eq!(back64.predict(x).unwrap(), model.predict(x).unwrap());
        }

        let back32 = LinearModel::<f32>::from_json_str(&json).unwrap();
        assert_eq!(back32.dim(), model.dim());

        let bad = json.replace("\"format_version\":1", "\"format_version\":9");
        assert!(LinearModel::<f64>::from_json_str(&bad).is_err());
    }
}
