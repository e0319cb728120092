use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn t(shape: &[usize], data: Vec<f64>) -> Tensor {
    Tensor::new(shape, data).unwrap()
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    t(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

#[test]
fn identity_graph_returns_input() {
    let mut g = Graph::new();
    g.input(&[3]);
    let out = g.forward(&[t(&[3], vec![1.0, 2.0, 3.0])]).unwrap();
    assert_eq!(out.data(), &[1.0, 2.0, 3.0]);
}

#[test]
fn sigmoid_of_zero() {
    let mut g = Graph::new();
    let x = g.input(&[1]);
    g.sigmoid(x).unwrap();
    assert_eq!(g.forward(&[t(&[1], vec![0.0])]).unwrap().data(), &[0.5]);
}

#[test]
fn mse_of_equal_operands_is_zero() {
    let mut g = Graph::new();
    let p = g.input(&[2]);
    let q = g.input(&[2]);
    g.mse(p, q).unwrap();
    let v = vec![1.0, 2.0];
    assert_eq!(g.forward(&[t(&[2], v.clone()), t(&[2], v)]).unwrap().item(), 0.0);
}

#[test]
fn square_gradient() {
    let mut g = Graph::new();
    let x = g.param(t(&[1], vec![3.0]));
    let y = g.mul(x, x).unwrap();
    g.forward(&[]).unwrap();
    let grads = g.backward(y).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[6.0]);
}

#[test]
fn sigmoid_gradient_at_zero() {
    let mut g = Graph::new();
    let x = g.param(t(&[1], vec![0.0]));
    let y = g.sigmoid(x).unwrap();
    g.forward(&[]).unwrap();
    let grads = g.backward(y).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[0.25]);
}

#[test]
fn mse_gradient_vanishes_at_minimum() {
    let mut g = Graph::new();
    let x = g.param(t(&[3], vec![0.3, -1.0, 2.0]));
    let y = g.param(t(&[3], vec![0.3, -1.0, 2.0]));
    let l = g.mse(x, y).unwrap();
    g.forward(&[]).unwrap();
    let grads = g.backward(l).unwrap();
    assert!(grads.iter().all(|(_, gr)| gr.data().iter().all(|&v| v == 0.0)));
}

#[test]
fn backward_before_forward_is_rejected() {
    let mut g = Graph::new();
    let x = g.param(t(&[1], vec![1.0]));
    let y = g.mul(x, x).unwrap();
    assert_eq!(g.backward(y).unwrap_err(), AutodiffError::NotForwarded);
}

#[test]
fn backward_requires_scalar() {
    let mut g = Graph::new();
    let x = g.param(t(&[2], vec![1.0, 2.0]));
    let y = g.sigmoid(x).unwrap();
    g.forward(&[]).unwrap();
    assert!(matches!(g.backward(y), Err(AutodiffError::NonScalarOutput { .. })));
}

#[test]
fn input_shape_mismatch_names_node() {
    let mut g = Graph::new();
    let x = g.input(&[2, 3]);
    g.set_label(x, "features");
    g.relu(x).unwrap();
    let err = g.forward(&[Tensor::zeros(&[3, 2])]).unwrap_err();
    match err {
        AutodiffError::ShapeMismatch { node, .. } => assert_eq!(node, "features"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn builder_rejects_incompatible_affine() {
    let mut g = Graph::new();
    let x = g.input(&[4, 3]);
    let w = g.param(Tensor::zeros(&[2, 5]));
    let b = g.param(Tensor::zeros(&[5]));
    let err = g.affine(x, w, b).unwrap_err();
    assert!(err.to_string().contains("affine#3"), "{err}");
}

#[test]
fn quadratic_finite_difference() {
    let mut g = Graph::new();
    let x = g.param(t(&[1], vec![1.7]));
    g.mul(x, x).unwrap();
    let err = finite_difference_check(&mut g, 1e-5).unwrap();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn constant_graph_has_zero_error() {
    let mut g = Graph::new();
    let c = g.constant(t(&[1], vec![4.0]));
    let p = g.param(t(&[1], vec![2.0]));
    // p is unreachable from the output
    let _ = p;
    let s = g.sigmoid(c).unwrap();
    g.set_output(s).unwrap();
    assert_eq!(finite_difference_check(&mut g, 1e-5).unwrap(), 0.0);
}

fn two_layer_sigmoid(seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new();
    let x = g.input(&[5, 4]);
    let y = g.input(&[5, 2]);
    let w1 = g.param(random(&mut rng, &[4, 6]));
    let b1 = g.param(random(&mut rng, &[6]));
    let w2 = g.param(random(&mut rng, &[6, 2]));
    let b2 = g.param(random(&mut rng, &[2]));
    let h = g.affine(x, w1, b1).unwrap();
    let h = g.sigmoid(h).unwrap();
    let o = g.affine(h, w2, b2).unwrap();
    g.mse(o, y).unwrap();
    let xs = random(&mut rng, &[5, 4]);
    let ys = random(&mut rng, &[5, 2]);
    g.forward(&[xs, ys]).unwrap();
    g
}

#[test]
fn perceptron_finite_difference() {
    let mut g = two_layer_sigmoid(0);
    let err = finite_difference_check(&mut g, 1e-5).unwrap();
    assert!(err < 1e-4, "{err}");
}

/// Builds a small random graph exercising one op kind and reduces it to a scalar.
fn op_graph(kind: usize, rng: &mut ChaCha8Rng) -> Graph {
    let rows = rng.random_range(1..4);
    let cols = rng.random_range(1..5);
    let mut g = Graph::new();
    let a = g.param(random(rng, &[rows, cols]));
    let body = match kind {
        0 => {
            let out = rng.random_range(1..4);
            let w = g.param(random(rng, &[cols, out]));
            let b = g.param(random(rng, &[out]));
            g.affine(a, w, b).unwrap()
        }
        1 => {
            // keep pre-activations away from the kink
            let shifted: Vec<f64> = g
                .param_value(a)
                .unwrap()
                .data()
                .iter()
                .map(|v| if v.abs() < 0.05 { v + 0.1 } else { *v })
                .collect();
            g.set_param(a, t(&[rows, cols], shifted)).unwrap();
            g.relu(a).unwrap()
        }
        2 => g.sigmoid(a).unwrap(),
        3 => {
            let b = if rng.random_bool(0.5) {
                g.param(random(rng, &[rows, cols]))
            } else {
                g.param(random(rng, &[1, cols]))
            };
            g.mul(a, b).unwrap()
        }
        4 => {
            let extra = rng.random_range(1..3);
            let b = g.param(random(rng, &[rows, extra]));
            g.concat(a, b).unwrap()
        }
        5 => {
            let b = g.param(random(rng, &[rows, cols]));
            g.add(a, b).unwrap()
        }
        _ => a,
    };
    let shape = g.shape_of(body).to_vec();
    if kind == 6 {
        let labels = (0..rows).map(|_| rng.random_range(0..cols)).collect();
        g.softmax_cross_entropy(body, labels).unwrap();
    } else {
        let n = shape.iter().product();
        let target = g.constant(t(&shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()));
        g.mse(body, target).unwrap();
    }
    g
}

#[test]
fn every_op_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in 0..7 {
        for trial in 0..100 {
            let mut g = op_graph(kind, &mut rng);
            let err = finite_difference_check(&mut g, 1e-5).unwrap();
            assert!(err < 1e-4, "op kind {kind}, trial {trial}: relative error {err}");
        }
    }
}

#[test]
fn forward_is_bitwise_deterministic() {
    let mut a = two_layer_sigmoid(3);
    let mut b = two_layer_sigmoid(3);
    let inputs = a.last_inputs().unwrap();
    let va = a.forward(&inputs).unwrap();
    let vb = b.forward(&inputs).unwrap();
    assert_eq!(va.data()[0].to_bits(), vb.data()[0].to_bits());
}

#[test]
fn gradient_of_sum_is_sum_of_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let mut g = Graph::new();
        let x = g.param(random(&mut rng, &[2, 3]));
        let w = g.param(random(&mut rng, &[3, 2]));
        let b = g.param(random(&mut rng, &[2]));
        let h = g.affine(x, w, b).unwrap();
        let s = g.sigmoid(h).unwrap();
        let t1 = g.constant(random(&mut rng, &[2, 2]));
        let l1 = g.mse(s, t1).unwrap();
        let l2 = g.softmax_cross_entropy(h, vec![0, 1]).unwrap();
        let total = g.add(l1, l2).unwrap();
        g.forward(&[]).unwrap();
        let g1 = g.backward(l1).unwrap();
        let g2 = g.backward(l2).unwrap();
        let gt = g.backward(total).unwrap();
        for (id, grad) in gt.iter() {
            let expect = g1.get(id).unwrap().data().iter().zip(g2.get(id).unwrap().data());
            for (v, (a, b)) in grad.data().iter().zip(expect) {
                assert_abs_diff_eq!(*v, a + b, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn uniform_logits_cross_entropy_is_log_classes() {
    let mut g = Graph::new();
    let l = g.input(&[2, 3]);
    g.softmax_cross_entropy(l, vec![0, 2]).unwrap();
    let v = g.forward(&[t(&[2, 3], vec![0.7; 6])]).unwrap().item();
    assert_abs_diff_eq!(v, 3f64.ln(), epsilon = 1e-12);
}

#[test]
fn row_broadcast_mask() {
    let mut g = Graph::new();
    let x = g.input(&[2, 2]);
    let m = g.constant(t(&[1, 2], vec![1.0, 0.0]));
    g.mul(x, m).unwrap();
    let out = g.forward(&[t(&[2, 2], vec![1.0, 2.0, 3.0, 4.0])]).unwrap();
    assert_eq!(out.data(), &[1.0, 0.0, 3.0, 0.0]);
}
