//! Finite-difference validation of the analytic gradients.
//!
//! The oracle perturbs one parameter at a time and differences the loss
//! computed through the public forward/loss path; it never touches the
//! reverse-mode code it checks.

use mtlq::network::{
    backward, build, forward, loss, BranchSpec, NetworkParams, NetworkSpec, TargetLabel,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const FD_STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn loss_at(spec: &NetworkSpec, params: &NetworkParams, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let outputs = forward(spec, params, &x.view()).unwrap();
    loss(spec, &outputs, &y.view()).unwrap().0
}

/// Central finite difference for every parameter, compared against the
/// analytic gradient at relative tolerance `REL_TOL`.
fn check_gradients(spec: &NetworkSpec, params: &NetworkParams, x: &Array2<f64>, y: &Array2<f64>) {
    let analytic = backward(spec, params, &x.view(), &y.view()).unwrap().grads;
    let names: Vec<String> = spec.layer_shapes().into_iter().map(|(n, _, _)| n).collect();

    for (li, name) in names.iter().enumerate() {
        let n_weights = analytic.layers()[li].weights.len();
        let n_bias = analytic.layers()[li].bias.len();
        for k in 0..n_weights + n_bias {
            let read = |p: &NetworkParams| {
                let layer = p.layers()[li];
                if k < n_weights {
                    let cols = layer.weights.ncols();
                    layer.weights[[k / cols, k % cols]]
                } else {
                    layer.bias[k - n_weights]
                }
            };
            let write = |p: &mut NetworkParams, v: f64| {
                let layer = &mut p.layers_mut()[li];
                if k < n_weights {
                    let cols = layer.weights.ncols();
                    layer.weights[[k / cols, k % cols]] = v;
                } else {
                    layer.bias[k - n_weights] = v;
                }
            };

            let base = read(params);
            let mut plus = params.clone();
            write(&mut plus, base + FD_STEP);
            let mut minus = params.clone();
            write(&mut minus, base - FD_STEP);
            let numeric = (loss_at(spec, &plus, x, y) - loss_at(spec, &minus, x, y))
                / (2.0 * FD_STEP);
            let got = read(&analytic);
            let rel = (got - numeric).abs() / got.abs().max(1e-8);
            assert!(
                rel < REL_TOL,
                "{name}[{k}]: analytic {got:.10e} vs numeric {numeric:.10e} (rel {rel:.2e})"
            );
        }
    }
}

fn random_batch(n: usize, dim: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, dim), |_| rng.gen_range(0.0..1.0));
    let y = Array2::from_shape_fn((n, 2), |_| rng.gen_range(0.05..0.95));
    (x, y)
}

fn two_task_spec(input_dim: usize) -> NetworkSpec {
    NetworkSpec {
        input_dim,
        trunk: vec![4],
        branches: vec![
            BranchSpec {
                name: "o2".into(),
                hidden: vec![3],
                outputs: vec![TargetLabel::O2],
                loss_weight: 5.0,
            },
            BranchSpec {
                name: "t".into(),
                hidden: vec![3],
                outputs: vec![TargetLabel::T],
                loss_weight: 1.0,
            },
        ],
    }
}

fn three_branch_spec(input_dim: usize) -> NetworkSpec {
    let mut spec = two_task_spec(input_dim);
    spec.branches.push(BranchSpec {
        name: "joint".into(),
        hidden: vec![],
        outputs: vec![TargetLabel::O2, TargetLabel::T],
        loss_weight: 0.3,
    });
    spec
}

#[test]
fn gradients_match_finite_differences_across_seeds() {
    for seed in 0..5u64 {
        let spec = three_branch_spec(6);
        let params = build(&spec, seed).unwrap();
        let (x, y) = random_batch(8, 6, 100 + seed);
        check_gradients(&spec, &params, &x, &y);
    }
}

#[test]
fn gradients_match_on_two_task_topology() {
    for seed in [11, 12] {
        let spec = two_task_spec(5);
        let params = build(&spec, seed).unwrap();
        let (x, y) = random_batch(6, 5, seed);
        check_gradients(&spec, &params, &x, &y);
    }
}

#[test]
fn gradients_match_with_empty_trunk() {
    let spec = NetworkSpec {
        input_dim: 4,
        trunk: vec![],
        branches: vec![
            BranchSpec {
                name: "o2".into(),
                hidden: vec![3],
                outputs: vec![TargetLabel::O2],
                loss_weight: 2.0,
            },
            BranchSpec {
                name: "joint".into(),
                hidden: vec![],
                outputs: vec![TargetLabel::O2, TargetLabel::T],
                loss_weight: 1.0,
            },
        ],
    };
    let params = build(&spec, 5).unwrap();
    let (x, y) = random_batch(7, 4, 55);
    check_gradients(&spec, &params, &x, &y);
}

#[test]
fn gradients_match_on_single_observation() {
    let spec = three_branch_spec(3);
    let params = build(&spec, 2).unwrap();
    let (x, y) = random_batch(1, 3, 9);
    check_gradients(&spec, &params, &x, &y);
}
