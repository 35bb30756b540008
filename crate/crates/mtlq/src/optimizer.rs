//! Full-batch Adam training of the global multi-task loss.
//!
//! Every epoch computes the exact gradient over the whole training set and
//! applies one bias-corrected Adam update, so a run is a pure function of
//! (spec, initial params, dataset order, config).

use std::io::Write;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::{self, NetworkParams, NetworkSpec};

/// Optimizer settings. Loss weights live on the network spec's branches.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Evaluate the dev-set loss every this many epochs (0 disables).
    pub dev_eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 4000,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dev_eval_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidSpec("epochs must be at least 1".into()));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must lie in [0, 1), got {beta}"
                )));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: NetworkParams,
    pub v: NetworkParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(spec: &NetworkSpec) -> Self {
        AdamState {
            m: NetworkParams::zeros(spec),
            v: NetworkParams::zeros(spec),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update:
/// `m <- b1*m + (1-b1)*g`, `v <- b2*v + (1-b2)*g^2`,
/// `theta <- theta - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)`.
///
/// Aborts without touching any state if the gradient contains a non-finite
/// entry, naming the offending layer.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &NetworkParams,
    state: &mut AdamState,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<()> {
    if let Some(layer) = grads.first_non_finite(spec) {
        return Err(Error::NonFinite(format!(
            "gradient of layer {layer} contains NaN or infinity"
        )));
    }
    let t = state.step + 1;
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for ((layer, grad), (m, v)) in params
        .layers_mut()
        .into_iter()
        .zip(grads.layers())
        .zip(state.m.layers_mut().into_iter().zip(state.v.layers_mut()))
    {
        let update = |theta: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *theta -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        };
        for (((theta, &g), m), v) in layer
            .weights
            .iter_mut()
            .zip(grad.weights.iter())
            .zip(m.weights.iter_mut())
            .zip(v.weights.iter_mut())
        {
            update(theta, g, m, v);
        }
        for (((theta, &g), m), v) in layer
            .bias
            .iter_mut()
            .zip(grad.bias.iter())
            .zip(m.bias.iter_mut())
            .zip(v.bias.iter_mut())
        {
            update(theta, g, m, v);
        }
    }
    state.step = t;
    Ok(())
}

/// Losses recorded for one epoch. Training losses come from the same forward
/// pass that produced the epoch's gradient (i.e. before its update).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub global_loss: f64,
    pub branch_losses: Vec<f64>,
    pub dev_global_loss: Option<f64>,
}

/// Per-epoch loss history of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub branch_names: Vec<String>,
    pub epochs: Vec<EpochRecord>,
}

impl TrainTrace {
    /// CSV with columns `epoch,global_loss,branch_<name>_loss,...` plus a
    /// `dev_global_loss` column when dev evaluation was enabled (blank on
    /// epochs without one).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let has_dev = self.epochs.iter().any(|e| e.dev_global_loss.is_some());
        let mut header = vec!["epoch".to_string(), "global_loss".to_string()];
        header.extend(
            self.branch_names
                .iter()
                .map(|n| format!("branch_{n}_loss")),
        );
        if has_dev {
            header.push("dev_global_loss".to_string());
        }
        writeln!(w, "{}", header.join(","))?;
        for rec in &self.epochs {
            let mut fields = vec![rec.epoch.to_string(), format!("{:.16e}", rec.global_loss)];
            fields.extend(rec.branch_losses.iter().map(|l| format!("{l:.16e}")));
            if has_dev {
                fields.push(
                    rec.dev_global_loss
                        .map(|l| format!("{l:.16e}"))
                        .unwrap_or_default(),
                );
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Train for exactly `cfg.epochs` full-batch Adam steps. Targets must already
/// be normalized to [0, 1]. Returns the final parameters and the loss trace.
pub fn train(
    spec: &NetworkSpec,
    params: NetworkParams,
    train_set: &Dataset,
    dev_set: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<(NetworkParams, TrainTrace)> {
    spec.validate()?;
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidSpec("training set is empty".into()));
    }
    if train_set.normalization.is_none() {
        return Err(Error::InvalidSpec(
            "training targets must be normalized before training".into(),
        ));
    }
    if let Some(dev) = dev_set {
        if dev.normalization.is_none() {
            return Err(Error::InvalidSpec(
                "dev targets must be normalized before training".into(),
            ));
        }
    }

    let x = train_set.feature_matrix();
    let y = train_set.target_matrix();
    let dev_xy = dev_set.map(|d| (d.feature_matrix(), d.target_matrix()));

    let mut params = params;
    let mut state = AdamState::new(spec);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let out = network::backward(spec, &params, &x.view(), &y.view())?;
        if !out.global_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "training loss became non-finite at epoch {epoch}"
            )));
        }
        let dev_global_loss = match (&dev_xy, cfg.dev_eval_every) {
            (Some((dx, dy)), k) if k > 0 && (epoch % k == 0 || epoch == cfg.epochs) => {
                let outputs = network::forward(spec, &params, &dx.view())?;
                let (global, _) = network::loss(spec, &outputs, &dy.view())?;
                Some(global)
            }
            _ => None,
        };
        epochs.push(EpochRecord {
            epoch,
            global_loss: out.global_loss,
            branch_losses: out.branch_losses,
            dev_global_loss,
        });
        adam_step(&mut params, &out.grads, &mut state, spec, cfg)?;
    }
    let trace = TrainTrace {
        branch_names: spec.branches.iter().map(|b| b.name.clone()).collect(),
        epochs,
    };
    Ok((params, trace))
}
