//! Orthogonal weight initialization.

use super::ParamNet;
use crate::rng::Rng;
use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Initializes every weight matrix orthogonally (scaled by `gain`) and
/// zeroes the biases.
///
/// For an `out x in` matrix with `out <= in` the rows are orthonormal
/// (`W W^T = gain^2 I`); otherwise the columns are.
pub fn orthogonal_init(net: &mut ParamNet, gain: f64, rng: &mut Rng) {
    for layer in 0..net.num_layers() {
        orthogonal_init_layer(net, layer, gain, rng);
    }
}

/// Per-layer variant; the trainer uses sqrt(2) on hidden layers and the
/// configured gain on output heads.
pub fn orthogonal_init_layer(net: &mut ParamNet, layer: usize, gain: f64, rng: &mut Rng) {
    let (out_w, in_w) = net.layer_shape(layer);
    let w = orthogonal_matrix(out_w, in_w, gain, rng);
    let off = net.weight_offset(layer);
    let params = net.params_mut();
    for r in 0..out_w {
        for c in 0..in_w {
            params[off + r * in_w + c] = w[(r, c)];
        }
    }
    for b in 0..out_w {
        params[off + out_w * in_w + b] = 0.0;
    }
}

fn orthogonal_matrix(rows: usize, cols: usize, gain: f64, rng: &mut Rng) -> DMatrix<f64> {
    let big = rows.max(cols);
    let small = rows.min(cols);
    let a = DMatrix::from_fn(big, small, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    // Sign-fix columns by the R diagonal so the distribution is uniform over
    // the orthogonal group rather than biased by the QR convention.
    let r = qr.r();
    for j in 0..small {
        if r[(j, j)] < 0.0 {
            for i in 0..big {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    let m = if rows <= cols { q.transpose() } else { q };
    m * gain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::rng;

    fn weight(net: &ParamNet, layer: usize) -> Vec<Vec<f64>> {
        let (out_w, in_w) = net.layer_shape(layer);
        let off = net.weight_offset(layer);
        (0..out_w)
            .map(|r| net.params()[off + r * in_w..off + (r + 1) * in_w].to_vec())
            .collect()
    }

    #[test]
    fn one_by_one_layer_is_plus_minus_gain() {
        for seed in 0..8 {
            let mut net = ParamNet::new(&[1, 1], false, Activation::Identity);
            let mut rng = rng::stream(seed, "init", 0);
            orthogonal_init(&mut net, 0.3, &mut rng);
            assert!((net.params()[0].abs() - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gain_zeroes_weights() {
        let mut net = ParamNet::new(&[4, 4], false, Activation::Identity);
        let mut rng = rng::stream(1, "init", 0);
        orthogonal_init(&mut net, 0.0, &mut rng);
        assert!(net.params().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn rows_orthogonal_for_square_and_tall_inputs() {
        // (out, in) with out <= in: W W^T should be gain^2 I.
        for (out_w, in_w) in [(4usize, 4usize), (3, 7), (8, 8)] {
            let mut net = ParamNet::new(&[in_w, out_w], false, Activation::Identity);
            let mut rng = rng::stream(9, "init", (out_w * 100 + in_w) as u64);
            let gain = 0.01;
            orthogonal_init(&mut net, gain, &mut rng);
            let w = weight(&net, 0);
            for i in 0..out_w {
                for j in 0..out_w {
                    let dot: f64 = (0..in_w).map(|k| w[i][k] * w[j][k]).sum();
                    let want = if i == j { gain * gain } else { 0.0 };
                    assert!((dot - want).abs() < 1e-6, "({i},{j}): {dot} vs {want}");
                }
            }
        }
    }

    #[test]
    fn columns_orthogonal_for_wide_outputs() {
        let (out_w, in_w) = (6usize, 3usize);
        let mut net = ParamNet::new(&[in_w, out_w], false, Activation::Identity);
        let mut rng = rng::stream(2, "init", 0);
        orthogonal_init(&mut net, 1.0, &mut rng);
        let w = weight(&net, 0);
        for i in 0..in_w {
            for j in 0..in_w {
                let dot: f64 = (0..out_w).map(|k| w[k][i] * w[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-6);
            }
        }
    }
}
