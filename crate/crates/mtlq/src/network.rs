//! Branched multilayer perceptron: a shared trunk of dense sigmoid layers
//! feeding any number of task-specific branches, each a stack of dense sigmoid
//! layers ending in a sigmoid output layer.
//!
//! Every layer computes `sigmoid(a W + b)` with `W` stored `(fan_in, fan_out)`
//! row-major. The trunk's final activation (the shared representation) is the
//! input of every branch; a network with an empty trunk feeds the raw batch to
//! the branches. The global training loss is the weighted sum of per-branch
//! mean-squared errors, so trunk gradients accumulate contributions from all
//! branches.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// The two regression targets and their column positions in a target matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetLabel {
    O2,
    T,
}

impl TargetLabel {
    pub fn column(self) -> usize {
        match self {
            TargetLabel::O2 => 0,
            TargetLabel::T => 1,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "o2" => Ok(TargetLabel::O2),
            "t" | "temp" => Ok(TargetLabel::T),
            other => Err(Error::Parse(format!("unknown target label '{other}'"))),
        }
    }
}

impl std::fmt::Display for TargetLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetLabel::O2 => write!(f, "O2"),
            TargetLabel::T => write!(f, "T"),
        }
    }
}

/// One task branch: optional hidden layers, the targets it emits, and its
/// weight in the global loss.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub name: String,
    pub hidden: Vec<usize>,
    pub outputs: Vec<TargetLabel>,
    pub loss_weight: f64,
}

/// Topology of a branched network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub trunk: Vec<usize>,
    pub branches: Vec<BranchSpec>,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidSpec("input_dim must be at least 1".into()));
        }
        if self.branches.is_empty() {
            return Err(Error::InvalidSpec("at least one branch required".into()));
        }
        if self.trunk.contains(&0)
            || self
                .branches
                .iter()
                .any(|b| b.hidden.contains(&0))
        {
            return Err(Error::InvalidSpec("layer widths must be at least 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for b in &self.branches {
            if b.outputs.is_empty() {
                return Err(Error::InvalidSpec(format!(
                    "branch '{}' emits no outputs",
                    b.name
                )));
            }
            if !(b.loss_weight >= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "branch '{}' has negative loss weight {}",
                    b.name, b.loss_weight
                )));
            }
            if !seen.insert(b.name.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate branch name '{}'",
                    b.name
                )));
            }
        }
        for label in [TargetLabel::O2, TargetLabel::T] {
            if !self
                .branches
                .iter()
                .any(|b| b.outputs.contains(&label))
            {
                return Err(Error::InvalidSpec(format!(
                    "no branch emits target {label}"
                )));
            }
        }
        Ok(())
    }

    /// Width of the shared representation consumed by the branches.
    pub fn shared_dim(&self) -> usize {
        self.trunk.last().copied().unwrap_or(self.input_dim)
    }

    /// `(fan_in, fan_out)` of every layer, trunk first, then branches in
    /// declaration order; each branch ends with its output layer.
    pub fn layer_shapes(&self) -> Vec<(String, usize, usize)> {
        let mut shapes = Vec::new();
        let mut dim = self.input_dim;
        for (i, &w) in self.trunk.iter().enumerate() {
            shapes.push((format!("trunk.{i}"), dim, w));
            dim = w;
        }
        let shared = dim;
        for b in &self.branches {
            let mut d = shared;
            for (i, &w) in b.hidden.iter().enumerate() {
                shapes.push((format!("branch.{}.{i}", b.name), d, w));
                d = w;
            }
            shapes.push((format!("branch.{}.out", b.name), d, b.outputs.len()));
        }
        shapes
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.layer_shapes()
            .iter()
            .map(|(_, fan_in, fan_out)| fan_in * fan_out + fan_out)
            .sum()
    }
}

/// Weights and bias of one dense layer. `weights` is `(fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerParams {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        LayerParams {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }
}

/// All trainable parameters of a network, mirroring its spec. Also used as the
/// container for gradients and optimizer moments, which share the structure.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub trunk: Vec<LayerParams>,
    pub branches: Vec<Vec<LayerParams>>,
}

impl NetworkParams {
    /// All-zero parameters shaped after `spec`.
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let mut dim = spec.input_dim;
        let trunk = spec
            .trunk
            .iter()
            .map(|&w| {
                let layer = LayerParams::zeros(dim, w);
                dim = w;
                layer
            })
            .collect();
        let shared = dim;
        let branches = spec
            .branches
            .iter()
            .map(|b| {
                let mut d = shared;
                let mut layers: Vec<LayerParams> = b
                    .hidden
                    .iter()
                    .map(|&w| {
                        let layer = LayerParams::zeros(d, w);
                        d = w;
                        layer
                    })
                    .collect();
                layers.push(LayerParams::zeros(d, b.outputs.len()));
                layers
            })
            .collect();
        NetworkParams { trunk, branches }
    }

    /// Layers in canonical order (trunk, then branches as declared), parallel
    /// to [`NetworkSpec::layer_shapes`].
    pub fn layers(&self) -> Vec<&LayerParams> {
        self.trunk
            .iter()
            .chain(self.branches.iter().flatten())
            .collect()
    }

    pub fn layers_mut(&mut self) -> Vec<&mut LayerParams> {
        self.trunk
            .iter_mut()
            .chain(self.branches.iter_mut().flatten())
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers()
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Name of the first layer containing a non-finite entry, if any.
    pub fn first_non_finite(&self, spec: &NetworkSpec) -> Option<String> {
        let names = spec.layer_shapes();
        for (layer, (name, _, _)) in self.layers().iter().zip(names.iter()) {
            if layer.weights.iter().chain(layer.bias.iter()).any(|v| !v.is_finite()) {
                return Some(name.clone());
            }
        }
        None
    }

    fn shapes_match(&self, spec: &NetworkSpec) -> bool {
        let shapes = spec.layer_shapes();
        let layers = self.layers();
        layers.len() == shapes.len()
            && layers.iter().zip(shapes.iter()).all(|(l, (_, fi, fo))| {
                l.weights.dim() == (*fi, *fo) && l.bias.len() == *fo
            })
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Glorot-uniform initial parameters: weights from uniform(-L, L) with
/// `L = sqrt(6 / (fan_in + fan_out))`, biases zero. Weights are drawn row by
/// row, trunk layers first and branches in declaration order, from a single
/// ChaCha20 stream, so a seed pins every parameter.
pub fn build(spec: &NetworkSpec, seed: u64) -> Result<NetworkParams> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut params = NetworkParams::zeros(spec);
    for layer in params.layers_mut() {
        let (fan_in, fan_out) = layer.weights.dim();
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in layer.weights.iter_mut() {
            *w = rng.gen_range(-bound..bound);
        }
    }
    Ok(params)
}

fn dense_sigmoid(input: &ArrayView2<f64>, layer: &LayerParams) -> Array2<f64> {
    let mut z = input.dot(&layer.weights);
    z += &layer.bias;
    z.mapv_inplace(sigmoid);
    z
}

/// Post-sigmoid activations of every layer for one batch.
struct ForwardCache {
    trunk: Vec<Array2<f64>>,
    branches: Vec<Vec<Array2<f64>>>,
}

fn run_forward(
    spec: &NetworkSpec,
    params: &NetworkParams,
    batch: &ArrayView2<f64>,
) -> Result<ForwardCache> {
    if batch.ncols() != spec.input_dim {
        return Err(Error::Shape(format!(
            "batch has {} columns, spec expects {}",
            batch.ncols(),
            spec.input_dim
        )));
    }
    if !params.shapes_match(spec) {
        return Err(Error::Shape(
            "parameter shapes do not match the network spec".into(),
        ));
    }
    let mut trunk = Vec::with_capacity(params.trunk.len());
    for layer in &params.trunk {
        let input = trunk.last().map(Array2::view).unwrap_or(batch.view());
        trunk.push(dense_sigmoid(&input, layer));
    }
    let shared = trunk.last().map(Array2::view).unwrap_or(batch.view());
    let branches = params
        .branches
        .iter()
        .map(|layers| {
            let mut acts: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
            for layer in layers {
                let input = acts.last().map(Array2::view).unwrap_or(shared.view());
                acts.push(dense_sigmoid(&input, layer));
            }
            acts
        })
        .collect();
    Ok(ForwardCache { trunk, branches })
}

/// Evaluate the network on a batch (rows are observations). Returns one output
/// matrix per branch, columns ordered as the branch's `outputs`; every entry
/// lies strictly inside (0, 1).
pub fn forward(
    spec: &NetworkSpec,
    params: &NetworkParams,
    batch: &ArrayView2<f64>,
) -> Result<Vec<Array2<f64>>> {
    let cache = run_forward(spec, params, batch)?;
    Ok(cache
        .branches
        .into_iter()
        .map(|mut acts| acts.pop().expect("branch has an output layer"))
        .collect())
}

/// Columns of `targets` selected by a branch's output labels.
fn branch_targets(branch: &BranchSpec, targets: &ArrayView2<f64>) -> Array2<f64> {
    let cols: Vec<usize> = branch.outputs.iter().map(|l| l.column()).collect();
    targets.select(Axis(1), &cols)
}

/// Global and per-branch training loss.
///
/// A branch's loss is the batch mean of the squared error summed over that
/// branch's outputs; the global loss weighs each branch by its `loss_weight`.
pub fn loss(
    spec: &NetworkSpec,
    outputs: &[Array2<f64>],
    targets: &ArrayView2<f64>,
) -> Result<(f64, Vec<f64>)> {
    if outputs.len() != spec.branches.len() {
        return Err(Error::Shape(format!(
            "{} outputs for {} branches",
            outputs.len(),
            spec.branches.len()
        )));
    }
    let n = targets.nrows();
    let mut branch_losses = Vec::with_capacity(outputs.len());
    for (branch, out) in spec.branches.iter().zip(outputs.iter()) {
        if out.nrows() != n || out.ncols() != branch.outputs.len() {
            return Err(Error::Shape(format!(
                "branch '{}' output is {}x{}, expected {}x{}",
                branch.name,
                out.nrows(),
                out.ncols(),
                n,
                branch.outputs.len()
            )));
        }
        let t = branch_targets(branch, targets);
        let sq_sum = out
            .iter()
            .zip(t.iter())
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>();
        branch_losses.push(sq_sum / n as f64);
    }
    let global = spec
        .branches
        .iter()
        .zip(branch_losses.iter())
        .map(|(b, l)| b.loss_weight * l)
        .sum();
    Ok((global, branch_losses))
}

/// Gradients of the global loss plus the losses of the pass that produced them.
pub struct BackwardOutput {
    pub grads: NetworkParams,
    pub global_loss: f64,
    pub branch_losses: Vec<f64>,
}

/// Exact reverse-mode gradient of the global loss with respect to every
/// parameter. Trunk gradients accumulate the contributions of all branches.
pub fn backward(
    spec: &NetworkSpec,
    params: &NetworkParams,
    batch: &ArrayView2<f64>,
    targets: &ArrayView2<f64>,
) -> Result<BackwardOutput> {
    if targets.nrows() != batch.nrows() {
        return Err(Error::Shape(format!(
            "{} target rows for {} batch rows",
            targets.nrows(),
            batch.nrows()
        )));
    }
    let cache = run_forward(spec, params, batch)?;
    let n = batch.nrows() as f64;
    let shared = cache.trunk.last().map(Array2::view).unwrap_or(batch.view());

    let mut grads = NetworkParams::zeros(spec);
    let mut branch_losses = Vec::with_capacity(spec.branches.len());
    let mut shared_grad: Array2<f64> = Array2::zeros(shared.dim());

    for (bi, branch) in spec.branches.iter().enumerate() {
        let acts = &cache.branches[bi];
        let out = acts.last().expect("branch has an output layer");
        let t = branch_targets(branch, targets);
        let diff = out - &t;
        branch_losses.push(diff.iter().map(|e| e * e).sum::<f64>() / n);

        // d(global)/d(pre-activation of the output layer)
        let scale = 2.0 * branch.loss_weight / n;
        let mut delta = &diff * scale * out * &(1.0 - out);
        for li in (0..acts.len()).rev() {
            let input = if li == 0 {
                shared.view()
            } else {
                acts[li - 1].view()
            };
            let layer = &params.branches[bi][li];
            grads.branches[bi][li].weights = input.t().dot(&delta);
            grads.branches[bi][li].bias = delta.sum_axis(Axis(0));
            let upstream = delta.dot(&layer.weights.t());
            if li > 0 {
                let a = &acts[li - 1];
                delta = upstream * a * &(1.0 - a);
            } else {
                shared_grad += &upstream;
            }
        }
    }

    if !spec.trunk.is_empty() {
        let s = cache.trunk.last().expect("non-empty trunk");
        let mut delta = shared_grad * s * &(1.0 - s);
        for li in (0..cache.trunk.len()).rev() {
            let input = if li == 0 {
                batch.view()
            } else {
                cache.trunk[li - 1].view()
            };
            let layer = &params.trunk[li];
            grads.trunk[li].weights = input.t().dot(&delta);
            grads.trunk[li].bias = delta.sum_axis(Axis(0));
            if li > 0 {
                let upstream = delta.dot(&layer.weights.t());
                let a = &cache.trunk[li - 1];
                delta = upstream * a * &(1.0 - a);
            }
        }
    }

    let global_loss = spec
        .branches
        .iter()
        .zip(branch_losses.iter())
        .map(|(b, l)| b.loss_weight * l)
        .sum();
    Ok(BackwardOutput {
        grads,
        global_loss,
        branch_losses,
    })
}
