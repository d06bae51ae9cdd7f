//! Parameter optimization and evaluation: quasi-Newton descent on the exact
//! loss, a derivative-free linear-model trust-region method for the sampled
//! loss, shot scheduling and test-set evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{loss_batch_encoded, EvalMode, ModelSpec, ModelTemplate};

// ---------------------------------------------------------------------------
// Shot schedule
// ---------------------------------------------------------------------------

/// Shots per run as a step function of the iteration index: entry
/// `(until, shots)` applies to iterations `< until`; the final entry covers
/// the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotSchedule {
    stages: Vec<(u64, u64)>,
}

impl ShotSchedule {
    /// `breaks` are `(until_iteration, shots)` pairs with strictly increasing
    /// thresholds; `final_shots` applies from the last threshold on.
    pub fn new(breaks: &[(u64, u64)], final_shots: u64) -> Result<ShotSchedule> {
        let mut stages = breaks.to_vec();
        stages.push((u64::MAX, final_shots));
        let mut prev = 0u64;
        for (i, &(until, shots)) in stages.iter().enumerate() {
            if shots == 0 {
                return Err(Error::ZeroShots);
            }
            if i > 0 && until <= prev {
                return Err(Error::OutOfRange {
                    what: "shot schedule thresholds",
                    range: "strictly increasing",
                    got: until as f64,
                });
            }
            prev = until;
        }
        Ok(ShotSchedule { stages })
    }

    pub fn constant(shots: u64) -> Result<ShotSchedule> {
        ShotSchedule::new(&[], shots)
    }

    /// 250 shots for the first 20 iterations, 500 until iteration 50, then
    /// 750.
    pub fn staged_default() -> ShotSchedule {
        ShotSchedule::new(&[(20, 250), (50, 500)], 750).expect("static schedule is valid")
    }

    pub fn shots_for(&self, iteration: u64) -> u64 {
        for &(until, shots) in &self.stages {
            if iteration < until {
                return shots;
            }
        }
        self.stages.last().expect("schedule has a final stage").1
    }

    pub fn stages(&self) -> &[(u64, u64)] {
        &self.stages
    }
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central differences per coordinate: (f(θ+h·e_i) − f(θ−h·e_i)) / 2h.
pub fn finite_diff_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, theta: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; theta.len()];
    let mut probe = theta.to_vec();
    for i in 0..theta.len() {
        probe[i] = theta[i] + h;
        let plus = f(&probe);
        probe[i] = theta[i] - h;
        let minus = f(&probe);
        probe[i] = theta[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

// ---------------------------------------------------------------------------
// Minimizers
// ---------------------------------------------------------------------------

/// Result of a single minimization trajectory.
#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Objective value per iterate (quasi-Newton) or per evaluation
    /// (derivative-free).
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub line_search_failed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct QuasiNewtonOptions {
    /// Finite-difference step for the internal gradient.
    pub grad_step: f64,
    /// Terminate when the gradient sup-norm drops below this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for QuasiNewtonOptions {
    fn default() -> Self {
        QuasiNewtonOptions {
            grad_step: 1e-4,
            tolerance: 1e-6,
            max_iters: 200,
        }
    }
}

/// BFGS with an inverse-Hessian update and backtracking (Armijo) line search
/// over finite-difference gradients.
pub fn minimize_quasi_newton<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    theta0: &[f64],
    opts: &QuasiNewtonOptions,
) -> MinimizeOutcome {
    let p = theta0.len();
    let mut evaluations = 0usize;
    let eval = |f: &mut F, x: &[f64], n: &mut usize| {
        *n += 1;
        f(x)
    };
    let mut x = theta0.to_vec();
    let mut fx = eval(f, &x, &mut evaluations);
    let mut trace = vec![fx];
    if p == 0 || opts.max_iters == 0 {
        return MinimizeOutcome {
            best: x,
            best_value: fx,
            trace,
            evaluations,
            line_search_failed: false,
        };
    }

    let mut grad = {
        evaluations += 2 * p;
        finite_diff_gradient(f, &x, opts.grad_step)
    };
    let mut h_inv = identity(p);
    let mut line_search_failed = false;

    for _ in 0..opts.max_iters {
        if sup_norm(&grad) < opts.tolerance {
            break;
        }
        let mut dir = neg_matvec(&h_inv, &grad);
        let mut slope = dot(&dir, &grad);
        if slope >= 0.0 {
            // Curvature information went bad; restart from steepest descent.
            h_inv = identity(p);
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&dir, &grad);
        }

        // Backtracking Armijo line search.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let candidate: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let fc = eval(f, &candidate, &mut evaluations);
            if fc <= fx + 1e-4 * step * slope {
                accepted = Some((candidate, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            line_search_failed = true;
            break;
        };

        let grad_new = {
            evaluations += 2 * p;
            finite_diff_gradient(f, &x_new, opts.grad_step)
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        x = x_new;
        fx = f_new;
        grad = grad_new;
        trace.push(fx);
    }

    MinimizeOutcome {
        best: x,
        best_value: fx,
        trace,
        evaluations,
        line_search_failed,
    }
}

fn identity(p: usize) -> Vec<f64> {
    let mut m = vec![0.0; p * p];
    for i in 0..p {
        m[i * p + i] = 1.0;
    }
    m
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn neg_matvec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let p = v.len();
    (0..p)
        .map(|i| -(0..p).map(|j| m[i * p + j] * v[j]).sum::<f64>())
        .collect()
}

/// H ← H + ((sᵀy + yᵀHy)/(sᵀy)²)·ssᵀ − (Hysᵀ + syᵀH)/(sᵀy)
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let p = s.len();
    let hy: Vec<f64> = (0..p)
        .map(|i| (0..p).map(|j| h[i * p + j] * y[j]).sum())
        .collect();
    let yhy = dot(y, &hy);
    let c = (sy + yhy) / (sy * sy);
    for i in 0..p {
        for j in 0..p {
            h[i * p + j] += c * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
        }
    }
}

/// Derivative-free minimization in the COBYLA family: keep a simplex of p+1
/// points, interpolate a linear model of the objective through it, and step
/// the best vertex downhill within a trust radius that shrinks when the step
/// stops paying. The seed only enters when a degenerate simplex is re-spanned
/// with random axis orientations, so runs are reproducible.
pub fn minimize_derivative_free<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    theta0: &[f64],
    initial_step: f64,
    max_evals: usize,
    seed: u64,
) -> MinimizeOutcome {
    let p = theta0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Vec::new();
    let mut evals = 0usize;
    let mut best = (theta0.to_vec(), f64::INFINITY);

    let eval = |f: &mut F, x: &[f64], trace: &mut Vec<f64>, evals: &mut usize, best: &mut (Vec<f64>, f64)| {
        let v = f(x);
        trace.push(v);
        *evals += 1;
        if v < best.1 {
            *best = (x.to_vec(), v);
        }
        v
    };

    let f0 = eval(f, theta0, &mut trace, &mut evals, &mut best);
    if p == 0 || max_evals <= 1 {
        return MinimizeOutcome {
            best: best.0,
            best_value: best.1,
            trace,
            evaluations: evals,
            line_search_failed: false,
        };
    }

    let mut rho = initial_step;
    let rho_end = 1e-8;
    // simplex entries: (point, value)
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(theta0.to_vec(), f0)];
    let span = |rng: &mut ChaCha8Rng, center: &[f64], rho: f64| -> Vec<Vec<f64>> {
        (0..p)
            .map(|i| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let mut v = center.to_vec();
                v[i] += sign * rho;
                v
            })
            .collect()
    };
    for v in span(&mut rng, theta0, rho) {
        if evals >= max_evals {
            break;
        }
        let fv = eval(f, &v, &mut trace, &mut evals, &mut best);
        simplex.push((v, fv));
    }

    let mut stalls = 0usize;
    while evals < max_evals && rho > rho_end && simplex.len() == p + 1 {
        let best_idx = argmin(&simplex);
        let (anchor, f_anchor) = simplex[best_idx].clone();

        // Keep the interpolation points within a sane radius of the
        // incumbent; re-span when they drift too far or go degenerate.
        let max_dist = simplex
            .iter()
            .map(|(pt, _)| dist(pt, &anchor))
            .fold(0.0, f64::max);
        let needs_refresh = max_dist > 16.0 * rho;

        // Linear model through the simplex: D g = v.
        let gradient = if needs_refresh {
            None
        } else {
            let mut d = Vec::with_capacity(p * p);
            let mut rhs = Vec::with_capacity(p);
            for (i, (pt, fv)) in simplex.iter().enumerate() {
                if i == best_idx {
                    continue;
                }
                for k in 0..p {
                    d.push(pt[k] - anchor[k]);
                }
                rhs.push(fv - f_anchor);
            }
            solve_linear(&mut d, &mut rhs, p)
        };
        let Some(gradient) = gradient else {
            // Degenerate or drifted geometry: re-span around the incumbent.
            simplex = vec![(anchor.clone(), f_anchor)];
            for v in span(&mut rng, &anchor, rho) {
                if evals >= max_evals {
                    break;
                }
                let fv = eval(f, &v, &mut trace, &mut evals, &mut best);
                simplex.push((v, fv));
            }
            continue;
        };
        let g_norm = dot(&gradient, &gradient).sqrt();
        if g_norm < 1e-14 {
            rho *= 0.5;
            stalls = 0;
            continue;
        }
        let candidate: Vec<f64> = anchor
            .iter()
            .zip(&gradient)
            .map(|(a, g)| a - rho * g / g_norm)
            .collect();
        let f_cand = eval(f, &candidate, &mut trace, &mut evals, &mut best);
        let worst = argmax(&simplex);
        if f_cand < f_anchor {
            simplex[worst] = (candidate, f_cand);
            stalls = 0;
        } else {
            // Keep the sample if it at least improves the simplex, so the
            // model still learns from the failed probe.
            if f_cand < simplex[worst].1 {
                simplex[worst] = (candidate, f_cand);
            }
            stalls += 1;
            if stalls >= 2 {
                rho *= 0.5;
                stalls = 0;
            }
        }
    }

    MinimizeOutcome {
        best: best.0,
        best_value: best.1,
        trace,
        evaluations: evals,
        line_search_failed: false,
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn argmin(simplex: &[(Vec<f64>, f64)]) -> usize {
    let mut idx = 0;
    for (i, (_, v)) in simplex.iter().enumerate() {
        if *v < simplex[idx].1 {
            idx = i;
        }
    }
    idx
}

fn argmax(simplex: &[(Vec<f64>, f64)]) -> usize {
    let mut idx = 0;
    for (i, (_, v)) in simplex.iter().enumerate() {
        if *v > simplex[idx].1 {
            idx = i;
        }
    }
    idx
}

/// Gaussian elimination with partial pivoting on a row-major p×p system.
/// Returns None when the matrix is numerically singular.
fn solve_linear(a: &mut [f64], b: &mut [f64], p: usize) -> Option<Vec<f64>> {
    for col in 0..p {
        let pivot_row = (col..p).max_by(|&r1, &r2| {
            a[r1 * p + col]
                .abs()
                .partial_cmp(&a[r2 * p + col].abs())
                .unwrap()
        })?;
        if a[pivot_row * p + col].abs() < 1e-12 {
            return None;
        }
        if pivot_row != col {
            for k in 0..p {
                a.swap(col * p + k, pivot_row * p + k);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..p {
            let factor = a[row * p + col] / a[col * p + col];
            for k in col..p {
                a[row * p + k] -= factor * a[col * p + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for row in (0..p).rev() {
        let mut acc = b[row];
        for k in row + 1..p {
            acc -= a[row * p + k] * x[k];
        }
        x[row] = acc / a[row * p + row];
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum TrainMode {
    Exact,
    Sampled { schedule: ShotSchedule },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    QuasiNewton,
    DerivativeFree,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub mode: TrainMode,
    pub optimizer: OptimizerKind,
    pub max_iters: usize,
    pub seed: u64,
    pub grad_step: f64,
    pub qn_tolerance: f64,
    pub df_initial_step: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            mode: TrainMode::Exact,
            optimizer: OptimizerKind::QuasiNewton,
            max_iters: 150,
            seed: 0,
            grad_step: 1e-4,
            qn_tolerance: 1e-6,
            df_initial_step: 1.0,
        }
    }
}

/// One training trajectory's record.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Loss per iterate (quasi-Newton) or per objective evaluation
    /// (derivative-free).
    pub trace: Vec<f64>,
    /// Shots per run used at each trace entry (0 in exact mode).
    pub trace_shots: Vec<u64>,
    pub best_theta: Vec<f64>,
    pub best_loss: f64,
    pub iterations: usize,
    pub total_shots: u64,
    pub seed: u64,
    pub line_search_failed: bool,
}

/// Train one trajectory from a fresh uniform-random θ₀ ∈ (−π, π]^p,
/// minimizing the mean loss over the full training set. Random restarts are
/// the caller's loop.
pub fn train(
    template: &ModelTemplate,
    train_set: &Dataset,
    opts: &TrainOptions,
) -> Result<(ModelSpec, TrainReport)> {
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if matches!(opts.mode, TrainMode::Sampled { .. })
        && opts.optimizer == OptimizerKind::QuasiNewton
    {
        return Err(Error::IncompatibleOptimizer);
    }
    let lookup = class_lookup(template, train_set)?;
    let spec = template.clone().with_theta(vec![0.0; template.circuit.num_params()])?;

    // Encode once, up front.
    let encoded: Vec<(Vec<f64>, usize)> = train_set
        .features
        .iter()
        .zip(&train_set.labels)
        .map(|(x, &y)| Ok((template.encoding.encode(x)?, lookup[y])))
        .collect::<Result<_>>()?;

    let p = template.circuit.num_params();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let theta0: Vec<f64> = (0..p).map(|_| rng.gen_range(-PI..PI)).collect();

    // Surface simulation/shape errors before entering the optimizer, whose
    // closures cannot propagate them.
    loss_batch_encoded(&spec, &theta0, &encoded, EvalMode::Exact)?;

    let batch = encoded.len() as u64;
    let mut shot_log: Vec<u64> = Vec::new();
    let mut eval_seeds = ChaCha8Rng::seed_from_u64(rng.gen());

    let outcome = match (&opts.mode, opts.optimizer) {
        (TrainMode::Exact, OptimizerKind::QuasiNewton) => {
            let mut objective = |theta: &[f64]| {
                loss_batch_encoded(&spec, theta, &encoded, EvalMode::Exact)
                    .expect("validated loss evaluation")
            };
            minimize_quasi_newton(
                &mut objective,
                &theta0,
                &QuasiNewtonOptions {
                    grad_step: opts.grad_step,
                    tolerance: opts.qn_tolerance,
                    max_iters: opts.max_iters,
                },
            )
        }
        (TrainMode::Exact, OptimizerKind::DerivativeFree) => {
            let mut objective = |theta: &[f64]| {
                loss_batch_encoded(&spec, theta, &encoded, EvalMode::Exact)
                    .expect("validated loss evaluation")
            };
            minimize_derivative_free(
                &mut objective,
                &theta0,
                opts.df_initial_step,
                opts.max_iters.max(1),
                rng.gen(),
            )
        }
        (TrainMode::Sampled { schedule }, OptimizerKind::DerivativeFree) => {
            let schedule = schedule.clone();
            let shot_log = &mut shot_log;
            let eval_seeds = &mut eval_seeds;
            let mut objective = move |theta: &[f64]| {
                let iteration = shot_log.len() as u64;
                let shots = schedule.shots_for(iteration);
                shot_log.push(shots);
                let mode = EvalMode::Sampled {
                    shots,
                    seed: eval_seeds.gen(),
                };
                loss_batch_encoded(&spec, theta, &encoded, mode)
                    .expect("validated loss evaluation")
            };
            minimize_derivative_free(
                &mut objective,
                &theta0,
                opts.df_initial_step,
                opts.max_iters.max(1),
                rng.gen(),
            )
        }
        (TrainMode::Sampled { .. }, OptimizerKind::QuasiNewton) => unreachable!("rejected above"),
    };

    let trace_shots = if shot_log.is_empty() {
        vec![0; outcome.trace.len()]
    } else {
        debug_assert_eq!(shot_log.len(), outcome.trace.len());
        shot_log
    };
    let total_shots = trace_shots.iter().map(|&s| s * batch).sum();
    let report = TrainReport {
        trace: outcome.trace,
        trace_shots,
        best_theta: outcome.best.clone(),
        best_loss: outcome.best_value,
        iterations: outcome.evaluations,
        total_shots,
        seed: opts.seed,
        line_search_failed: outcome.line_search_failed,
    };
    let spec = template.clone().with_theta(outcome.best)?;
    Ok((spec, report))
}

/// Map dataset class indices to class-map positions, by label name.
fn class_lookup(template: &ModelTemplate, ds: &Dataset) -> Result<Vec<usize>> {
    ds.class_names
        .iter()
        .map(|name| {
            template
                .class_map
                .position_of_label(name)
                .ok_or_else(|| Error::ClassMap(format!("dataset class `{name}` has no bitstring")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// K×K counts with rows = actual class, columns = predicted class (indices
/// follow the class map order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> ConfusionMatrix {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn record(&mut self, actual: usize, predicted: usize) {
        self.counts[actual * self.k + predicted] += 1;
    }

    pub fn count(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.k + predicted]
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.k)
            .map(|r| self.counts[r * self.k..(r + 1) * self.k].iter().sum())
            .collect()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: u64 = (0..self.k).map(|i| self.count(i, i)).sum();
        correct as f64 / self.total() as f64
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.k).all(|r| (0..self.k).all(|c| r == c || self.count(r, c) == 0))
    }
}

impl std::fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.k {
            for c in 0..self.k {
                write!(f, "{:>6}", self.count(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Accuracy and confusion matrix of a trained model on a test set. Rows and
/// columns follow the model's class-map order. In sampled mode every test
/// sample draws its shot seed from a stream seeded by the mode's seed.
pub fn evaluate(spec: &ModelSpec, test_set: &Dataset, mode: EvalMode) -> Result<(f64, ConfusionMatrix)> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let template = ModelTemplate {
        circuit: spec.circuit.clone(),
        class_map: spec.class_map.clone(),
        encoding: spec.encoding.clone(),
    };
    let lookup = class_lookup(&template, test_set)?;
    let mut seed_stream = match mode {
        EvalMode::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        EvalMode::Exact => None,
    };
    let mut matrix = ConfusionMatrix::new(spec.class_map.num_classes());
    for (x, &y) in test_set.features.iter().zip(&test_set.labels) {
        let sample_mode = match (&mode, &mut seed_stream) {
            (EvalMode::Exact, _) => EvalMode::Exact,
            (EvalMode::Sampled { shots, .. }, Some(stream)) => EvalMode::Sampled {
                shots: *shots,
                seed: stream.gen(),
            },
            _ => unreachable!(),
        };
        let predicted = spec.predict_class(x, sample_mode)?;
        matrix.record(lookup[y], predicted);
    }
    Ok((matrix.accuracy(), matrix))
}
