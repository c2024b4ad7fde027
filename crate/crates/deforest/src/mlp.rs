//! Three-layer perceptron trained on mean squared error, from scratch:
//! forward pass, analytic backpropagation, full-batch gradient descent, and
//! Levenberg-Marquardt with a damping schedule. Both trainers share the
//! early-stopping contract: validation MSE is checked every epoch and the
//! best-validation weights are restored on return.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::SampleSet;

/// Damping beyond this aborts Levenberg-Marquardt iteration.
pub const LAMBDA_MAX: f64 = 1e10;

const LAMBDA_MIN: f64 = 1e-15;

/// Largest value the sigmoid may return; keeps outputs strictly below 1.
const SIGMOID_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("input has {got} components, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("layer sizes must be at least 1, got n_in={n_in}, n_hidden={n_hidden}")]
    BadLayerSizes { n_in: usize, n_hidden: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("invalid train config: {0}")]
    BadConfig(String),
    #[error("training diverged after epoch {last_finite_epoch}: loss became non-finite")]
    Diverged { last_finite_epoch: usize },
    #[error("normal-equation factorization failed with damping raised to {lambda}")]
    FactorizationFailed { lambda: f64 },
    #[error("scores hold a single class; metric undefined")]
    SingleClassData,
    #[error("model file line {line}: {msg}")]
    BadModelFile { line: usize, msg: String },
}

/// Numerically stable logistic function, clamped into the open interval
/// (0, 1) so downstream probabilities never saturate to exactly 0 or 1.
pub fn sigmoid(z: f64) -> f64 {
    let y = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, SIGMOID_MAX)
}

/// Input-hidden-output perceptron with logistic activations on both layers.
///
/// Weights are row-major: `w1[j * n_in + k]` connects input `k` to hidden
/// unit `j`; `w2[j]` connects hidden unit `j` to the single output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpModel {
    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// All parameters flattened in the fixed order [w1, b1, w2, b2].
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.extend_from_slice(&self.b2);
        p
    }

    /// Inverse of [`MlpModel::params`]. Panics on a length mismatch, which
    /// is a programmer error.
    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count(), "parameter vector length");
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, b2) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
    }

    fn check_input(&self, x: &[f64]) -> Result<(), MlpError> {
        if x.len() != self.n_in {
            return Err(MlpError::DimensionMismatch {
                expected: self.n_in,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn forward_parts(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let mut hidden = vec![0.0; self.n_hidden];
        for j in 0..self.n_hidden {
            let mut z = self.b1[j];
            for (k, &xk) in x.iter().enumerate() {
                z += self.w1[j * self.n_in + k] * xk;
            }
            hidden[j] = sigmoid(z);
        }
        let mut z2 = self.b2[0];
        for j in 0..self.n_hidden {
            z2 += self.w2[j] * hidden[j];
        }
        (hidden, sigmoid(z2))
    }

    /// Network output for one input vector, strictly inside (0, 1).
    pub fn forward(&self, x: &[f64]) -> Result<f64, MlpError> {
        self.check_input(x)?;
        Ok(self.forward_parts(x).1)
    }

    /// Serialize as plain text: a dimensions line, then w1 rows, b1, w2
    /// rows, b2, all with shortest round-trip number formatting.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n_in, self.n_hidden, self.n_out);
        let mut write_rows = |data: &[f64], width: usize| {
            for row in data.chunks(width) {
                for (i, v) in row.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{v}");
                }
                out.push('\n');
            }
        };
        write_rows(&self.w1, self.n_in);
        write_rows(&self.b1, self.n_hidden);
        write_rows(&self.w2, self.n_hidden);
        write_rows(&self.b2, self.n_out);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MlpError> {
        let mut tokens: Vec<(usize, &str)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            for tok in line.split_whitespace() {
                tokens.push((lineno + 1, tok));
            }
        }
        let mut pos = 0usize;
        let mut next = |what: &str| -> Result<(usize, &str), MlpError> {
            let t = tokens.get(pos).copied().ok_or_else(|| MlpError::BadModelFile {
                line: tokens.last().map(|(l, _)| *l).unwrap_or(1),
                msg: format!("unexpected end of file, expected {what}"),
            })?;
            pos += 1;
            Ok(t)
        };
        let mut dim = |what: &str| -> Result<usize, MlpError> {
            let (line, tok) = next(what)?;
            let v: usize = tok.parse().map_err(|_| MlpError::BadModelFile {
                line,
                msg: format!("`{tok}` is not a valid {what}"),
            })?;
            if v == 0 {
                return Err(MlpError::BadModelFile {
                    line,
                    msg: format!("{what} must be positive"),
                });
            }
            Ok(v)
        };
        let n_in = dim("n_in")?;
        let n_hidden = dim("n_hidden")?;
        let n_out = dim("n_out")?;
        if n_out != 1 {
            return Err(MlpError::BadModelFile {
                line: 1,
                msg: format!("only single-output models are supported, got n_out={n_out}"),
            });
        }
        let mut values = |count: usize, what: &str| -> Result<Vec<f64>, MlpError> {
            let mut v = Vec::with_capacity(count);
            for _ in 0..count {
                let (line, tok) = next(what)?;
                let val: f64 = tok.parse().map_err(|_| MlpError::BadModelFile {
                    line,
                    msg: format!("`{tok}` is not a number in {what}"),
                })?;
                v.push(val);
            }
            Ok(v)
        };
        let w1 = values(n_hidden * n_in, "w1")?;
        let b1 = values(n_hidden, "b1")?;
        let w2 = values(n_out * n_hidden, "w2")?;
        let b2 = values(n_out, "b2")?;
        if pos != tokens.len() {
            return Err(MlpError::BadModelFile {
                line: tokens[pos].0,
                msg: "trailing data after parameters".to_string(),
            });
        }
        Ok(MlpModel {
            n_in,
            n_hidden,
            n_out,
            w1,
            b1,
            w2,
            b2,
        })
    }
}

/// Fresh model with Xavier-uniform weights (`r = sqrt(6 / (fan_in +
/// fan_out))` per layer) and zero biases, deterministic per seed.
pub fn init_model(n_in: usize, n_hidden: usize, seed: u64) -> Result<MlpModel, MlpError> {
    if n_in == 0 || n_hidden == 0 {
        return Err(MlpError::BadLayerSizes { n_in, n_hidden });
    }
    let n_out = 1usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r1 = (6.0 / (n_in + n_hidden) as f64).sqrt();
    let r2 = (6.0 / (n_hidden + n_out) as f64).sqrt();
    let w1 = (0..n_hidden * n_in).map(|_| rng.gen_range(-r1..=r1)).collect();
    let w2 = (0..n_out * n_hidden).map(|_| rng.gen_range(-r2..=r2)).collect();
    Ok(MlpModel {
        n_in,
        n_hidden,
        n_out,
        w1,
        b1: vec![0.0; n_hidden],
        w2,
        b2: vec![0.0; n_out],
    })
}

/// Output and its gradient with respect to every parameter, in the flat
/// [w1, b1, w2, b2] order. One call per sample is one Jacobian row.
pub fn output_and_gradient(model: &MlpModel, x: &[f64]) -> Result<(f64, Vec<f64>), MlpError> {
    model.check_input(x)?;
    let (hidden, y) = model.forward_parts(x);
    let n_in = model.n_in;
    let n_hidden = model.n_hidden;
    let mut grad = vec![0.0; model.param_count()];
    let d_out = y * (1.0 - y);

    let (w1_off, b1_off) = (0, n_hidden * n_in);
    let (w2_off, b2_off) = (b1_off + n_hidden, b1_off + n_hidden + n_hidden);
    for j in 0..n_hidden {
        let d_hidden = d_out * model.w2[j] * hidden[j] * (1.0 - hidden[j]);
        for (k, &xk) in x.iter().enumerate() {
            grad[w1_off + j * n_in + k] = d_hidden * xk;
        }
        grad[b1_off + j] = d_hidden;
        grad[w2_off + j] = d_out * hidden[j];
    }
    grad[b2_off] = d_out;
    Ok((y, grad))
}

/// Mean squared error over a sample set.
pub fn mse(model: &MlpModel, data: &SampleSet) -> Result<f64, MlpError> {
    if data.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let mut acc = 0.0;
    for s in &data.samples {
        let e = model.forward(&s.x)? - s.y;
        acc += e * e;
    }
    Ok(acc / data.len() as f64)
}

/// Batch MSE and its analytic gradient over the flattened parameters.
pub fn loss_and_gradient(
    model: &MlpModel,
    batch: &SampleSet,
) -> Result<(f64, Vec<f64>), MlpError> {
    if batch.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut grad = vec![0.0; model.param_count()];
    let mut sse = 0.0;
    for s in &batch.samples {
        let (y, row) = output_and_gradient(model, &s.x)?;
        let e = y - s.y;
        sse += e * e;
        let w = 2.0 * e / n;
        for (g, r) in grad.iter_mut().zip(&row) {
            *g += w * r;
        }
    }
    Ok((sse / n, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Backprop,
    Lm,
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "backprop" => Ok(Algorithm::Backprop),
            "lm" => Ok(Algorithm::Lm),
            other => Err(format!("unknown algorithm `{other}` (expected backprop or lm)")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Backprop => "backprop",
            Algorithm::Lm => "lm",
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub max_epochs: usize,
    /// Gradient-descent step size (backprop only).
    pub learning_rate: f64,
    /// Initial Levenberg-Marquardt damping and its up/down factors.
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Consecutive non-improving validation checks tolerated before
    /// stopping; must be at least 1.
    pub patience: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            algorithm: Algorithm::Lm,
            max_epochs: 500,
            learning_rate: 0.5,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            patience: 25,
            grad_tol: 1e-12,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MlpError> {
        let bad = |msg: &str| Err(MlpError::BadConfig(msg.to_string()));
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.lambda0 > 0.0) {
            return bad("lambda0 must be positive");
        }
        if !(self.lambda_up > 1.0) {
            return bad("lambda_up must exceed 1");
        }
        if !(self.lambda_down > 0.0 && self.lambda_down < 1.0) {
            return bad("lambda_down must lie in (0, 1)");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    GradTol,
    /// Levenberg-Marquardt damping exceeded [`LAMBDA_MAX`].
    LambdaLimit,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::EarlyStop => "early_stop",
            StopReason::GradTol => "grad_tol",
            StopReason::LambdaLimit => "lambda_limit",
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub train_mse_history: Vec<f64>,
    pub val_mse_history: Vec<f64>,
    pub stop_reason: StopReason,
}

impl TrainReport {
    pub fn final_train_mse(&self) -> f64 {
        self.train_mse_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_val_mse(&self) -> f64 {
        self.val_mse_history.last().copied().unwrap_or(f64::NAN)
    }
}

struct EarlyStopper {
    patience: usize,
    best_val: f64,
    best_params: Option<Vec<f64>>,
    bad: usize,
}

impl EarlyStopper {
    fn new(patience: usize) -> Self {
        EarlyStopper {
            patience,
            best_val: f64::INFINITY,
            best_params: None,
            bad: 0,
        }
    }

    /// Record one validation check; true means patience is exhausted.
    fn observe(&mut self, val_mse: f64, params: Vec<f64>) -> bool {
        if val_mse < self.best_val {
            self.best_val = val_mse;
            self.best_params = Some(params);
            self.bad = 0;
            false
        } else {
            self.bad += 1;
            self.bad >= self.patience
        }
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dispatch to the trainer selected by `cfg.algorithm`.
pub fn train(
    model: MlpModel,
    train_set: &SampleSet,
    val: &SampleSet,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), MlpError> {
    match cfg.algorithm {
        Algorithm::Backprop => train_backprop(model, train_set, val, cfg),
        Algorithm::Lm => train_lm(model, train_set, val, cfg),
    }
}

/// Full-batch gradient descent with validation-based early stopping.
pub fn train_backprop(
    mut model: MlpModel,
    train_set: &SampleSet,
    val: &SampleSet,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), MlpError> {
    cfg.validate()?;
    if cfg.algorithm != Algorithm::Backprop {
        return Err(MlpError::BadConfig(
            "train_backprop requires algorithm = backprop".to_string(),
        ));
    }
    if train_set.is_empty() || val.is_empty() {
        return Err(MlpError::EmptyBatch);
    }

    let mut train_hist = Vec::new();
    let mut val_hist = Vec::new();
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut stop = StopReason::MaxEpochs;
    let mut epochs_run = 0;

    for epoch in 1..=cfg.max_epochs {
        let (mse_here, grad) = loss_and_gradient(&model, train_set)?;
        if !mse_here.is_finite() {
            return Err(MlpError::Diverged {
                last_finite_epoch: epoch - 1,
            });
        }
        if l2_norm(&grad) < cfg.grad_tol {
            let val_mse = mse(&model, val)?;
            train_hist.push(mse_here);
            val_hist.push(val_mse);
            stopper.observe(val_mse, model.params());
            epochs_run = epoch;
            stop = StopReason::GradTol;
            break;
        }

        let mut params = model.params();
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= cfg.learning_rate * g;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(MlpError::Diverged {
                last_finite_epoch: epoch - 1,
            });
        }
        model.set_params(&params);

        let train_mse = mse(&model, train_set)?;
        let val_mse = mse(&model, val)?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(MlpError::Diverged {
                last_finite_epoch: epoch - 1,
            });
        }
        train_hist.push(train_mse);
        val_hist.push(val_mse);
        epochs_run = epoch;
        if stopper.observe(val_mse, params) {
            stop = StopReason::EarlyStop;
            break;
        }
    }

    if let Some(best) = stopper.best_params {
        model.set_params(&best);
    }
    Ok((
        model,
        TrainReport {
            epochs_run,
            train_mse_history: train_hist,
            val_mse_history: val_hist,
            stop_reason: stop,
        },
    ))
}

fn residuals_and_jacobian(
    model: &MlpModel,
    data: &SampleSet,
) -> Result<(DVector<f64>, DMatrix<f64>), MlpError> {
    let n = data.len();
    let p = model.param_count();
    let mut residuals = DVector::zeros(n);
    let mut jacobian = DMatrix::zeros(n, p);
    for (i, s) in data.samples.iter().enumerate() {
        let (y, row) = output_and_gradient(model, &s.x)?;
        residuals[i] = y - s.y;
        for (k, &g) in row.iter().enumerate() {
            jacobian[(i, k)] = g;
        }
    }
    Ok((residuals, jacobian))
}

fn sum_squared_error(model: &MlpModel, data: &SampleSet) -> Result<f64, MlpError> {
    let mut acc = 0.0;
    for s in &data.samples {
        let e = model.forward(&s.x)? - s.y;
        acc += e * e;
    }
    Ok(acc)
}

/// Levenberg-Marquardt on the sum of squared residuals.
///
/// Each iteration solves `(J'J + lambda I) delta = -J'r` by Cholesky
/// factorization and accepts the step only if the sum of squares strictly
/// decreases (lambda shrinks); otherwise the step is rejected and lambda
/// grows. Iteration stops on the shared early-stopping contract or once
/// lambda exceeds [`LAMBDA_MAX`].
pub fn train_lm(
    mut model: MlpModel,
    train_set: &SampleSet,
    val: &SampleSet,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport), MlpError> {
    cfg.validate()?;
    if cfg.algorithm != Algorithm::Lm {
        return Err(MlpError::BadConfig(
            "train_lm requires algorithm = lm".to_string(),
        ));
    }
    if train_set.is_empty() || val.is_empty() {
        return Err(MlpError::EmptyBatch);
    }

    let n = train_set.len() as f64;
    let mut lambda = cfg.lambda0;
    let mut current_sse = sum_squared_error(&model, train_set)?;
    if !current_sse.is_finite() {
        return Err(MlpError::Diverged {
            last_finite_epoch: 0,
        });
    }

    let mut train_hist = Vec::new();
    let mut val_hist = Vec::new();
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut stop = StopReason::MaxEpochs;
    let mut epochs_run = 0;

    for iter in 1..=cfg.max_epochs {
        let (residuals, jacobian) = residuals_and_jacobian(&model, train_set)?;
        let jtr = jacobian.transpose() * &residuals;
        if (2.0 / n) * jtr.norm() < cfg.grad_tol {
            let val_mse = mse(&model, val)?;
            train_hist.push(current_sse / n);
            val_hist.push(val_mse);
            stopper.observe(val_mse, model.params());
            epochs_run = iter;
            stop = StopReason::GradTol;
            break;
        }
        let jtj = jacobian.transpose() * &jacobian;

        // factor (J'J + lambda I), escalating lambda until it succeeds
        let delta = loop {
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda;
            }
            match Cholesky::new(damped) {
                Some(chol) => break chol.solve(&(-&jtr)),
                None => {
                    lambda *= cfg.lambda_up;
                    if lambda > LAMBDA_MAX {
                        return Err(MlpError::FactorizationFailed { lambda });
                    }
                }
            }
        };

        let mut trial = model.params();
        for (t, d) in trial.iter_mut().zip(delta.iter()) {
            *t += d;
        }
        let mut trial_model = model.clone();
        trial_model.set_params(&trial);
        let trial_sse = sum_squared_error(&trial_model, train_set)?;

        let accepted = trial_sse.is_finite() && trial_sse < current_sse;
        if accepted {
            model = trial_model;
            current_sse = trial_sse;
            lambda = (lambda * cfg.lambda_down).max(LAMBDA_MIN);
        } else {
            lambda *= cfg.lambda_up;
        }

        let val_mse = mse(&model, val)?;
        if !val_mse.is_finite() {
            return Err(MlpError::Diverged {
                last_finite_epoch: iter - 1,
            });
        }
        train_hist.push(current_sse / n);
        val_hist.push(val_mse);
        epochs_run = iter;

        if stopper.observe(val_mse, model.params()) {
            stop = StopReason::EarlyStop;
            break;
        }
        if !accepted && lambda > LAMBDA_MAX {
            stop = StopReason::LambdaLimit;
            break;
        }
    }

    if let Some(best) = stopper.best_params {
        model.set_params(&best);
    }
    Ok((
        model,
        TrainReport {
            epochs_run,
            train_mse_history: train_hist,
            val_mse_history: val_hist,
            stop_reason: stop,
        },
    ))
}

/// Confusion counts and the derived rates for a thresholded binary
/// classifier. Undefined rates (zero denominators) report 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Threshold the model at `threshold` (ties classify as 1) and count the
/// confusion matrix over `data`.
pub fn evaluate_binary(
    model: &MlpModel,
    data: &SampleSet,
    threshold: f64,
) -> Result<BinaryMetrics, MlpError> {
    if data.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for s in &data.samples {
        let pred = model.forward(&s.x)? >= threshold;
        match (pred, s.y == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let n = data.len() as f64;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(BinaryMetrics {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        accuracy: (tp + tn) as f64 / n,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
    })
}

/// Area under the ROC curve by the rank statistic, with average ranks for
/// tied scores. `pairs` holds (score, label) with labels 0 or 1.
pub fn roc_auc(pairs: &[(f64, f64)]) -> Result<f64, MlpError> {
    let n_pos = pairs.iter().filter(|(_, y)| *y == 1.0).count();
    let n_neg = pairs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MlpError::SingleClassData);
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].0.partial_cmp(&pairs[b].0).unwrap());

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && pairs[order[j]].0 == pairs[order[i]].0 {
            j += 1;
        }
        // 1-based average rank across the tie group [i, j)
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            if pairs[k].1 == 1.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}
