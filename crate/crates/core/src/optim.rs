//! Parameter initialization, Adam and checkpoint averaging.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::GradTriple;
use crate::error::{invalid, Result};
use crate::matrix::RealMatrix;
use crate::tree::DenseTreeParams;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Separate step sizes for feature logits, thresholds and leaf logits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    pub index: f64,
    pub values: f64,
    pub leaf: f64,
}

/// Uniform init: `I`, `T` in `±sqrt(6 / (2^(2d-1) + n))`, `L` in `±sqrt(6 / (2^(2d) + c))`.
pub fn init_params<R: Rng + ?Sized>(
    depth: usize,
    n_features: usize,
    n_classes: usize,
    rng: &mut R,
) -> Result<DenseTreeParams> {
    let mut p = DenseTreeParams::zeros(depth, n_features, n_classes)?;
    let (split_bound, leaf_bound) = init_bounds(depth, n_features, n_classes);
    for v in p.index.as_mut_slice() {
        *v = rng.gen_range(-split_bound..=split_bound);
    }
    for v in p.threshold.as_mut_slice() {
        *v = rng.gen_range(-split_bound..=split_bound);
    }
    for v in p.leaf.as_mut_slice() {
        *v = rng.gen_range(-leaf_bound..=leaf_bound);
    }
    Ok(p)
}

/// `(bound for I and T, bound for L)`.
pub fn init_bounds(depth: usize, n_features: usize, n_classes: usize) -> (f64, f64) {
    let split = (6.0 / (2f64.powi(2 * depth as i32 - 1) + n_features as f64)).sqrt();
    let leaf = (6.0 / (2f64.powi(2 * depth as i32) + n_classes as f64)).sqrt();
    (split, leaf)
}

#[derive(Debug, Clone, PartialEq)]
struct Moments {
    m: RealMatrix,
    v: RealMatrix,
}

impl Moments {
    fn like(p: &RealMatrix) -> Self {
        Self {
            m: RealMatrix::zeros(p.rows(), p.cols()),
            v: RealMatrix::zeros(p.rows(), p.cols()),
        }
    }

    fn step(&mut self, param: &mut RealMatrix, grad: &RealMatrix, lr: f64, bc1: f64, bc2: f64) {
        let m = self.m.as_mut_slice();
        let v = self.v.as_mut_slice();
        for (((w, &g), m), v) in param
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

/// First/second moment estimates for the three parameter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    index: Moments,
    threshold: Moments,
    leaf: Moments,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &DenseTreeParams) -> Self {
        Self {
            index: Moments::like(&params.index),
            threshold: Moments::like(&params.threshold),
            leaf: Moments::like(&params.leaf),
            t: 0,
        }
    }

    /// One bias-corrected Adam update of all three matrices.
    pub fn step(
        &mut self,
        params: &mut DenseTreeParams,
        grads: &GradTriple,
        lrs: &LearningRates,
    ) -> Result<()> {
        let shapes = [
            (params.index.shape(), grads.d_index.shape(), self.index.m.shape()),
            (params.threshold.shape(), grads.d_threshold.shape(), self.threshold.m.shape()),
            (params.leaf.shape(), grads.d_leaf.shape(), self.leaf.m.shape()),
        ];
        if shapes.iter().any(|(p, g, s)| p != g || p != s) {
            return invalid("Adam: parameter, gradient and state shapes differ");
        }
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        self.index.step(&mut params.index, &grads.d_index, lrs.index, bc1, bc2);
        self.threshold
            .step(&mut params.threshold, &grads.d_threshold, lrs.values, bc1, bc2);
        self.leaf.step(&mut params.leaf, &grads.d_leaf, lrs.leaf, bc1, bc2);
        Ok(())
    }
}

/// Element-wise mean of parameter checkpoints.
pub fn swa_average<'a, I>(checkpoints: I) -> Result<DenseTreeParams>
where
    I: IntoIterator<Item = &'a DenseTreeParams>,
{
    let mut iter = checkpoints.into_iter();
    let Some(first) = iter.next() else {
        return invalid("weight averaging needs at least one checkpoint");
    };
    let mut acc = first.clone();
    let mut count = 1usize;
    for p in iter {
        if p.index.shape() != acc.index.shape()
            || p.threshold.shape() != acc.threshold.shape()
            || p.leaf.shape() != acc.leaf.shape()
        {
            return invalid("checkpoints have different shapes");
        }
        acc.index.add_scaled(&p.index, 1.0);
        acc.threshold.add_scaled(&p.threshold, 1.0);
        acc.leaf.add_scaled(&p.leaf, 1.0);
        count += 1;
    }
    if count > 1 {
        let inv = count as f64;
        acc.index.map_inplace(|v| v / inv);
        acc.threshold.map_inplace(|v| v / inv);
        acc.leaf.map_inplace(|v| v / inv);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_params(v: f64) -> DenseTreeParams {
        // depth 1, one feature, two classes: I and T are 1x1
        let mut p = DenseTreeParams::zeros(1, 1, 2).unwrap();
        p.index.set(0, 0, v);
        p.threshold.set(0, 0, v);
        p
    }

    fn grads_for(p: &DenseTreeParams, g: f64) -> GradTriple {
        let mut gr = GradTriple::zeros_like(&p.index, &p.threshold, &p.leaf);
        gr.d_index.set(0, 0, g);
        gr.d_threshold.set(0, 0, g);
        gr
    }

    #[test]
    fn init_bounds_examples() {
        let (s, _) = init_bounds(1, 2, 2);
        assert!((s - 1.224744871391589).abs() < 1e-12);
        let (_, l) = init_bounds(1, 2, 2);
        assert!((l - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = init_params(1, 2, 2, &mut rng).unwrap();
        assert!(p.index.as_slice().iter().chain(p.threshold.as_slice()).all(|v| v.abs() <= s));
        assert!(p.leaf.as_slice().iter().all(|v| v.abs() <= l));

        let a = init_params(4, 5, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = init_params(4, 5, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(init_params(0, 5, 3, &mut rng).is_err());
        assert!(init_params(2, 5, 1, &mut rng).is_err());
    }

    #[test]
    fn adam_single_step() {
        let mut p = scalar_params(0.0);
        let mut st = AdamState::new(&p);
        let lrs = LearningRates { index: 0.1, values: 0.1, leaf: 0.1 };
        let grads = grads_for(&p, 1.0);
        st.step(&mut p, &grads, &lrs).unwrap();
        let expect = -0.1 / (1.0 + ADAM_EPS);
        assert!((p.index.get(0, 0) - expect).abs() < 1e-15);
        assert!((p.index.get(0, 0) + 0.1).abs() < 1e-6);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut p = scalar_params(0.7);
        let before = p.clone();
        let mut st = AdamState::new(&p);
        let lrs = LearningRates { index: 0.1, values: 0.2, leaf: 0.3 };
        let grads = grads_for(&p, 0.0);
        st.step(&mut p, &grads, &lrs).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_two_steps_closed_form() {
        // constant gradient g: m_hat = v_hat/|g|^2 = 1 at every step, so each
        // step has size lr*|g|/(|g|+eps) regardless of |g|, unlike SGD's lr*|g|
        let g = 4.0;
        let lr = 0.05;
        let mut p = scalar_params(0.0);
        let mut st = AdamState::new(&p);
        let lrs = LearningRates { index: lr, values: lr, leaf: lr };
        let grads = grads_for(&p, g);
        st.step(&mut p, &grads, &lrs).unwrap();
        let first = p.index.get(0, 0);
        let grads = grads_for(&p, g);
        st.step(&mut p, &grads, &lrs).unwrap();
        let second = p.index.get(0, 0) - first;

        let m2 = (1.0 - ADAM_BETA1) * ADAM_BETA1 * g + (1.0 - ADAM_BETA1) * g;
        let v2 = (1.0 - ADAM_BETA2) * ADAM_BETA2 * g * g + (1.0 - ADAM_BETA2) * g * g;
        let step2 = lr * (m2 / (1.0 - ADAM_BETA1.powi(2)))
            / ((v2 / (1.0 - ADAM_BETA2.powi(2))).sqrt() + ADAM_EPS);
        assert!((second + step2).abs() < 1e-14);
        assert!(second.abs() < lr * g);
    }

    #[test]
    fn adam_shape_mismatch() {
        let mut p = scalar_params(0.0);
        let mut st = AdamState::new(&p);
        let other = DenseTreeParams::zeros(2, 1, 2).unwrap();
        let g = GradTriple::zeros_like(&other.index, &other.threshold, &other.leaf);
        let lrs = LearningRates { index: 0.1, values: 0.1, leaf: 0.1 };
        assert!(st.step(&mut p, &g, &lrs).is_err());
    }

    #[test]
    fn swa_examples() {
        let a = scalar_params(0.0);
        assert_eq!(swa_average([&a]).unwrap(), a);
        let b = scalar_params(2.0);
        assert_eq!(swa_average([&a, &b]).unwrap().index.get(0, 0), 1.0);
        assert!(swa_average(std::iter::empty::<&DenseTreeParams>()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cps: Vec<_> = (0..5).map(|_| init_params(3, 4, 3, &mut rng).unwrap()).collect();
        let avg = swa_average(&cps).unwrap();
        for i in 0..avg.index.as_slice().len() {
            let mean = cps.iter().map(|c| c.index.as_slice()[i]).sum::<f64>() / 5.0;
            assert!((avg.index.as_slice()[i] - mean).abs() < 1e-15);
        }
        for i in 0..avg.leaf.as_slice().len() {
            let mean = cps.iter().map(|c| c.leaf.as_slice()[i]).sum::<f64>() / 5.0;
            assert!((avg.leaf.as_slice()[i] - mean).abs() < 1e-15);
        }
        assert!(swa_average([&a, &cps[0]]).is_err());
    }
}
