//! Minimal dense-network substrate: forward/backward passes over flat
//! parameter vectors, a tanh-squashed Gaussian policy head, and Adam.
//!
//! Parameters live in one flat `Vec<f64>` per network (per layer: weights in
//! row-major `out × in` order, then biases), which keeps optimizer state,
//! checkpoints, and finite-difference probing trivial. All sampling takes
//! explicit noise, so every caller controls its own randomness.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Error;

/// Clamp bounds for the policy's log-scale head.
pub const LOG_SCALE_MIN: f64 = -20.0;
pub const LOG_SCALE_MAX: f64 = 2.0;

const LN_2PI: f64 = 1.8378770664093453;

/// Fully connected network with rectified-linear hidden layers and a linear
/// output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by a cached forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[0]` is the input; `activations[l+1]` is layer `l`'s
    /// post-activation output.
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has at least the input")
    }
}

impl DenseNet {
    /// Fan-in-scaled uniform initialization; the output layer is shrunk by
    /// 1e-3 so downstream heads start near zero.
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Result<Self, Error> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("invalid layer dims {dims:?}")));
        }
        let mut params = Vec::with_capacity(Self::param_count(dims));
        let last = dims.len() - 2;
        for (l, win) in dims.windows(2).enumerate() {
            let (n_in, n_out) = (win[0], win[1]);
            let bound = 1.0 / (n_in as f64).sqrt();
            let scale = if l == last { 1e-3 } else { 1.0 };
            for _ in 0..n_out * n_in + n_out {
                params.push(scale * rng.random_range(-bound..bound));
            }
        }
        Ok(Self { dims: dims.to_vec(), params })
    }

    /// All-zero parameters (useful for targets of known value in tests).
    pub fn zeros(dims: &[usize]) -> Self {
        Self { dims: dims.to_vec(), params: vec![0.0; Self::param_count(dims)] }
    }

    fn param_count(dims: &[usize]) -> usize {
        dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Plain forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, Error> {
        let mut trace = self.forward_cached(input)?;
        Ok(trace.activations.pop().expect("trace holds the output"))
    }

    /// Forward pass that records every activation for a later backward pass.
    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardTrace, Error> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let n_layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(input.to_vec());
        let mut offset = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let w = &self.params[offset..offset + n_out * n_in];
            let b = &self.params[offset + n_out * n_in..offset + n_out * n_in + n_out];
            offset += n_out * n_in + n_out;
            let x = &activations[l];
            let mut y = Vec::with_capacity(n_out);
            for i in 0..n_out {
                let row = &w[i * n_in..(i + 1) * n_in];
                let mut acc = b[i];
                for (wij, xj) in row.iter().zip(x.iter()) {
                    acc += wij * xj;
                }
                if l + 1 < n_layers && acc < 0.0 {
                    acc = 0.0;
                }
                y.push(acc);
            }
            activations.push(y);
        }
        Ok(ForwardTrace { activations })
    }

    /// Gradient of the output with respect to the input only, skipping the
    /// parameter-gradient accumulation of [`DenseNet::backward`].
    pub fn input_gradient(&self, trace: &ForwardTrace, output_grad: &[f64]) -> Result<Vec<f64>, Error> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::Shape("output gradient does not match the network".into()));
        }
        let n_layers = self.dims.len() - 1;
        let mut layer_offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            layer_offsets.push(offset);
            offset += self.dims[l + 1] * self.dims[l] + self.dims[l + 1];
        }
        let mut upstream = output_grad.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let off = layer_offsets[l];
            let w = &self.params[off..off + n_out * n_in];
            let y = &trace.activations[l + 1];
            let mut dpre = upstream;
            if l + 1 < n_layers {
                for (d, &yi) in dpre.iter_mut().zip(y.iter()) {
                    if yi <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let mut dx = vec![0.0; n_in];
            for i in 0..n_out {
                let di = dpre[i];
                if di != 0.0 {
                    let row = &w[i * n_in..(i + 1) * n_in];
                    for j in 0..n_in {
                        dx[j] += di * row[j];
                    }
                }
            }
            upstream = dx;
        }
        Ok(upstream)
    }

    /// Backpropagate `output_grad` through the recorded pass, accumulating
    /// parameter gradients into `grads` (same layout as `params`) and
    /// returning the gradient with respect to the input.
    pub fn backward(&self, trace: &ForwardTrace, output_grad: &[f64], grads: &mut [f64]) -> Result<Vec<f64>, Error> {
        if output_grad.len() != self.output_dim() || grads.len() != self.params.len() {
            return Err(Error::Shape("gradient buffers do not match the network".into()));
        }
        let n_layers = self.dims.len() - 1;
        if trace.activations.len() != n_layers + 1 {
            return Err(Error::Shape("forward trace does not match the network".into()));
        }
        let mut layer_offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            layer_offsets.push(offset);
            offset += self.dims[l + 1] * self.dims[l] + self.dims[l + 1];
        }

        let mut upstream = output_grad.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let off = layer_offsets[l];
            let w = &self.params[off..off + n_out * n_in];
            let x = &trace.activations[l];
            let y = &trace.activations[l + 1];

            // hidden layers: kill gradient where the rectifier was inactive
            let mut dpre = upstream;
            if l + 1 < n_layers {
                for (d, &yi) in dpre.iter_mut().zip(y.iter()) {
                    if yi <= 0.0 {
                        *d = 0.0;
                    }
                }
            }

            let (gw, gb) = grads[off..off + n_out * n_in + n_out].split_at_mut(n_out * n_in);
            let mut dx = vec![0.0; n_in];
            for i in 0..n_out {
                let di = dpre[i];
                gb[i] += di;
                if di != 0.0 {
                    let row = &w[i * n_in..(i + 1) * n_in];
                    let grow = &mut gw[i * n_in..(i + 1) * n_in];
                    for j in 0..n_in {
                        grow[j] += di * x[j];
                        dx[j] += di * row[j];
                    }
                }
            }
            upstream = dx;
        }
        Ok(upstream)
    }
}

/// One policy draw: squashed action in `[-1, 1]^dim`, its log-density, and
/// the deterministic (mean) action for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub mean_action: Vec<f64>,
}

/// Cached quantities from a reparameterized policy draw, kept for backprop.
#[derive(Debug, Clone)]
pub struct PolicyEval {
    pub trace: ForwardTrace,
    pub scale: Vec<f64>,
    /// Whether each raw log-scale was inside the clamp bounds (gradient
    /// passes only there).
    pub clamp_pass: Vec<bool>,
    /// Pre-squash values `u = loc + scale·noise`.
    pub pre_squash: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// log(1 - tanh²(u)), evaluated without catastrophic cancellation.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u.abs() - softplus(-2.0 * u.abs()))
}

fn action_dim_of(actor: &DenseNet) -> usize {
    actor.output_dim() / 2
}

/// Draw an action from the squashed Gaussian head: the actor outputs
/// per-dimension location and raw log-scale (clamped to
/// `[LOG_SCALE_MIN, LOG_SCALE_MAX]`), the noise is a standard normal vector,
/// and the sample is `tanh(loc + scale·noise)` with the change-of-variables
/// correction folded into the log-probability.
pub fn sample_policy(actor: &DenseNet, state: &[f64], noise: &[f64]) -> Result<PolicySample, Error> {
    let eval = sample_policy_cached(actor, state, noise)?;
    let dim = action_dim_of(actor);
    let loc = &eval.trace.output()[..dim];
    Ok(PolicySample {
        action: eval.action,
        log_prob: eval.log_prob,
        mean_action: loc.iter().map(|&m| m.tanh()).collect(),
    })
}

/// As [`sample_policy`], keeping the internals needed by
/// [`policy_backward`].
pub fn sample_policy_cached(actor: &DenseNet, state: &[f64], noise: &[f64]) -> Result<PolicyEval, Error> {
    let dim = action_dim_of(actor);
    if actor.output_dim() != 2 * dim || dim == 0 {
        return Err(Error::Shape("actor must output (location, log-scale) pairs".into()));
    }
    if noise.len() != dim {
        return Err(Error::Shape(format!("noise has {} values, action dim is {dim}", noise.len())));
    }
    let trace = actor.forward_cached(state)?;
    let out = trace.output();
    let mut scale = Vec::with_capacity(dim);
    let mut clamp_pass = Vec::with_capacity(dim);
    let mut pre_squash = Vec::with_capacity(dim);
    let mut action = Vec::with_capacity(dim);
    let mut log_prob = 0.0;
    for i in 0..dim {
        let loc = out[i];
        let raw = out[dim + i];
        let clamped = raw.clamp(LOG_SCALE_MIN, LOG_SCALE_MAX);
        let s = clamped.exp();
        let u = loc + s * noise[i];
        let a = u.tanh();
        log_prob += -clamped - 0.5 * LN_2PI - 0.5 * noise[i] * noise[i] - log_one_minus_tanh_sq(u);
        scale.push(s);
        clamp_pass.push(raw > LOG_SCALE_MIN && raw < LOG_SCALE_MAX);
        pre_squash.push(u);
        action.push(a);
    }
    Ok(PolicyEval { trace, scale, clamp_pass, pre_squash, action, log_prob })
}

/// Backpropagate through a reparameterized draw: `d_action` is the upstream
/// gradient on the squashed action, `d_log_prob` the upstream gradient on the
/// log-probability. Parameter gradients accumulate into `grads`.
pub fn policy_backward(
    actor: &DenseNet,
    eval: &PolicyEval,
    noise: &[f64],
    d_action: &[f64],
    d_log_prob: f64,
    grads: &mut [f64],
) -> Result<(), Error> {
    let dim = action_dim_of(actor);
    if d_action.len() != dim || noise.len() != dim {
        return Err(Error::Shape("policy gradient buffers do not match the action dim".into()));
    }
    let mut head_grad = vec![0.0; 2 * dim];
    for i in 0..dim {
        let a = eval.action[i];
        let du = d_action[i] * (1.0 - a * a) + d_log_prob * 2.0 * a;
        head_grad[i] = du;
        if eval.clamp_pass[i] {
            // u = loc + exp(log_scale)·noise, and log π carries an explicit
            // -log_scale term
            head_grad[dim + i] = du * eval.scale[i] * noise[i] - d_log_prob;
        }
    }
    actor.backward(&eval.trace, &head_grad, grads)?;
    Ok(())
}

/// Log-density of a fixed, already-squashed action under the current policy,
/// cached for the score-function gradient used by the on-policy baseline.
#[derive(Debug, Clone)]
pub struct FixedActionEval {
    pub trace: ForwardTrace,
    pub eps: Vec<f64>,
    pub scale: Vec<f64>,
    pub clamp_pass: Vec<bool>,
    pub log_prob: f64,
}

/// Evaluate `log π(action | state)` with the action held fixed.
pub fn eval_log_prob(actor: &DenseNet, state: &[f64], action: &[f64]) -> Result<FixedActionEval, Error> {
    let dim = action_dim_of(actor);
    if action.len() != dim {
        return Err(Error::Shape(format!("action has {} values, dim is {dim}", action.len())));
    }
    let trace = actor.forward_cached(state)?;
    let out = trace.output();
    let mut eps = Vec::with_capacity(dim);
    let mut scale = Vec::with_capacity(dim);
    let mut clamp_pass = Vec::with_capacity(dim);
    let mut log_prob = 0.0;
    for i in 0..dim {
        let loc = out[i];
        let raw = out[dim + i];
        let clamped = raw.clamp(LOG_SCALE_MIN, LOG_SCALE_MAX);
        let s = clamped.exp();
        // clamp the squashed action away from ±1 before inverting
        let a = action[i].clamp(-1.0 + 1e-12, 1.0 - 1e-12);
        let u = a.atanh();
        let e = (u - loc) / s;
        log_prob += -clamped - 0.5 * LN_2PI - 0.5 * e * e - log_one_minus_tanh_sq(u);
        eps.push(e);
        scale.push(s);
        clamp_pass.push(raw > LOG_SCALE_MIN && raw < LOG_SCALE_MAX);
    }
    Ok(FixedActionEval { trace, eps, scale, clamp_pass, log_prob })
}

/// Score-function gradient: accumulate `d_log_prob · ∇_φ log π(a|s)` into
/// `grads` for a fixed action.
pub fn log_prob_backward(
    actor: &DenseNet,
    eval: &FixedActionEval,
    d_log_prob: f64,
    grads: &mut [f64],
) -> Result<(), Error> {
    let dim = eval.eps.len();
    let mut head_grad = vec![0.0; 2 * dim];
    for i in 0..dim {
        head_grad[i] = d_log_prob * eval.eps[i] / eval.scale[i];
        if eval.clamp_pass[i] {
            head_grad[dim + i] = d_log_prob * (eval.eps[i] * eval.eps[i] - 1.0);
        }
    }
    actor.backward(&eval.trace, &head_grad, grads)?;
    Ok(())
}

/// Bias-corrected adaptive moment optimizer over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    /// One update step. Rejects non-finite gradients so training failures
    /// surface at the step that produced them.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), Error> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape("optimizer state does not match the parameter vector".into()));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training("non-finite gradient".into()));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
