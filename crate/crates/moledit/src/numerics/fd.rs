//! Finite-difference gradient verification.

use std::collections::BTreeMap;

use super::params::ParamStore;
use super::rng::Rng;
use super::tensor::Tensor;

/// Relative-error floor: differences below this magnitude are compared
/// against it rather than against a vanishing denominator.
const DENOM_FLOOR: f64 = 1e-8;

/// Compares analytic gradients against central differences.
///
/// `eval(store, need_grad)` must return the scalar loss and, when
/// `need_grad`, the analytic gradient of every checked parameter. At most
/// `max_coords` coordinates are probed (sampled without replacement when
/// there are more); returns the worst relative error seen.
pub fn fd_check<F>(
    store: &mut ParamStore,
    mut eval: F,
    h: f64,
    max_coords: usize,
    rng: &mut Rng,
) -> f64
where
    F: FnMut(&ParamStore, bool) -> (f64, BTreeMap<String, Tensor>),
{
    let (_, grads) = eval(store, true);
    let mut coords: Vec<(String, usize)> = grads
        .iter()
        .flat_map(|(name, g)| (0..g.len()).map(move |i| (name.clone(), i)))
        .collect();
    if coords.len() > max_coords {
        rng.shuffle(&mut coords);
        coords.truncate(max_coords);
    }

    let mut worst = 0.0f64;
    for (name, i) in coords {
        let analytic = grads[&name].data()[i];
        let original = store.get(&name).data()[i];

        store.get_mut(&name).data_mut()[i] = original + h;
        let (loss_plus, _) = eval(store, false);
        store.get_mut(&name).data_mut()[i] = original - h;
        let (loss_minus, _) = eval(store, false);
        store.get_mut(&name).data_mut()[i] = original;

        let numeric = (loss_plus - loss_minus) / (2.0 * h);
        let denom = analytic.abs().max(numeric.abs()).max(DENOM_FLOOR);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Graph;

    /// f(x) = x^T x has exact gradient 2x.
    #[test]
    fn quadratic_gradient_matches_to_1e6() {
        let mut store = ParamStore::new();
        store.insert("x", Tensor::new(vec![1, 4], vec![0.3, -1.2, 0.7, 2.0]));
        let mut rng = Rng::new(1);
        let worst = fd_check(
            &mut store,
            |s, need_grad| {
                let x = s.get("x");
                let loss: f64 = x.data().iter().map(|v| v * v).sum();
                let mut grads = BTreeMap::new();
                if need_grad {
                    grads.insert("x".to_string(), x.map(|v| 2.0 * v));
                }
                (loss, grads)
            },
            1e-5,
            200,
            &mut rng,
        );
        assert!(worst <= 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let mut store = ParamStore::new();
        store.insert("x", Tensor::new(vec![1, 3], vec![1.0, 2.0, 3.0]));
        let mut rng = Rng::new(2);
        let worst = fd_check(
            &mut store,
            |s, need_grad| {
                let mut grads = BTreeMap::new();
                if need_grad {
                    grads.insert("x".to_string(), Tensor::zeros(s.get("x").shape()));
                }
                (7.5, grads)
            },
            1e-5,
            200,
            &mut rng,
        );
        assert_eq!(worst, 0.0);
    }

    /// Random 3-layer MLP through the graph: analytic vs central differences.
    #[test]
    fn three_layer_mlp_gradients_match_to_1e4() {
        let mut rng = Rng::new(42);
        let mut store = ParamStore::new();
        let dims = [(6, 8), (8, 8), (8, 4)];
        for (l, (din, dout)) in dims.iter().enumerate() {
            store.insert(&format!("w{l}"), Tensor::randn(&[*din, *dout], 0.6, &mut rng));
            store.insert(&format!("b{l}"), Tensor::randn(&[1, *dout], 0.3, &mut rng));
        }
        let input = Tensor::randn(&[3, 6], 1.0, &mut rng);

        let mut check_rng = Rng::new(7);
        let worst = fd_check(
            &mut store,
            |s, need_grad| {
                let mut g = Graph::new();
                let mut ids = BTreeMap::new();
                let mut h = g.constant(input.clone());
                for l in 0..3 {
                    let (wn, bn) = (format!("w{l}"), format!("b{l}"));
                    let w = g.leaf(s.get(&wn).clone(), true);
                    let b = g.leaf(s.get(&bn).clone(), true);
                    ids.insert(wn, w);
                    ids.insert(bn, b);
                    h = g.matmul(h, w).unwrap();
                    h = g.add_bias(h, b).unwrap();
                    if l < 2 {
                        h = g.relu(h);
                    }
                }
                let loss = g.cross_entropy(h, &[0, 3, 1]).unwrap();
                let value = g.value(loss).item();
                let mut grads = BTreeMap::new();
                if need_grad {
                    g.backward(loss).unwrap();
                    for (name, id) in &ids {
                        grads.insert(name.clone(), g.grad(*id).unwrap().clone());
                    }
                }
                (value, grads)
            },
            1e-5,
            200,
            &mut check_rng,
        );
        assert!(worst <= 1e-4, "worst relative error {worst}");
    }
}
