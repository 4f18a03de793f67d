//! Toy-scale training: explicit backprop over dense networks with shared
//! weights, Adam with cosine-annealed learning rate.
//!
//! A shared basic block receives the sum of the gradients from all its uses,
//! with the transform adjoint applied per use: the transpose view contributes
//! the transposed outer product, shuffles backpropagate through the inverse
//! permutation. Training is single-threaded and seeded, so trained weights
//! are bit-reproducible.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::{Dataset, Layer, LayerPos, NetworkDesc};
use crate::numerics::{matvec_reference, Tensor, WeightEntry, WeightStore};
use crate::obu::{ObuTransform, WeightView};
use crate::prm::{build_schedule, Schedule};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Quadratic,
    CrossEntropy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            weight_decay: 0.01,
            epochs: 100,
            batch_size: 32,
            seed: 1,
            loss: Loss::CrossEntropy,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub lr: f64,
}

/// Xavier-uniform initialization of every distinct basic matrix, in a fixed
/// key order from one seeded stream.
pub fn init_weights(net: &NetworkDesc, seed: u64) -> Result<WeightStore> {
    let schedule = build_schedule(net)?;
    let mut rng = SplitMix64::new(seed);
    let mut store = WeightStore::new();
    for basic in schedule.distinct_basics() {
        let layer = net.layer(basic).expect("validated");
        let (rows, cols) = layer.weight_dims().expect("weighted");
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.next_range(-bound, bound))
            .collect();
        store.insert(
            basic.key(),
            WeightEntry::Float(Tensor::new(vec![rows, cols], data)?),
        );
    }
    Ok(store)
}

/// Trainable parameters: one copy per distinct basic matrix, nothing per
/// reused member.
pub fn trainable_parameter_count(net: &NetworkDesc) -> Result<usize> {
    let schedule = build_schedule(net)?;
    let mut count = 0;
    for basic in schedule.distinct_basics() {
        let (rows, cols) = net
            .layer(basic)
            .expect("validated")
            .weight_dims()
            .expect("weighted");
        count += rows * cols;
    }
    Ok(count)
}

enum StepCache {
    Dense {
        key: String,
        view: WeightView,
        transform: Option<ObuTransform>,
        /// Post-transform, flattened layer input.
        u: Tensor,
        /// Shape of the activation before flattening (== after transform).
        pre_shape: Vec<usize>,
    },
    Relu {
        input: Tensor,
    },
    Norm {
        scale: f64,
    },
}

fn forward_item(
    net: &NetworkDesc,
    schedule: &Schedule,
    params: &BTreeMap<String, Tensor>,
    x: &Tensor,
) -> Result<(Tensor, Vec<StepCache>)> {
    let mut act = x.clone();
    let mut tape = Vec::new();
    for (b, block) in net.blocks.iter().enumerate() {
        for (l, layer) in block.layers.iter().enumerate() {
            let pos = LayerPos { block: b, layer: l };
            match *layer {
                Layer::Relu => {
                    tape.push(StepCache::Relu { input: act.clone() });
                    let mut y = act.clone();
                    for v in y.data_mut() {
                        *v = v.max(0.0);
                    }
                    act = y;
                }
                Layer::Norm { scale, offset } => {
                    tape.push(StepCache::Norm { scale });
                    let mut y = act.clone();
                    for v in y.data_mut() {
                        *v = scale * *v + offset;
                    }
                    act = y;
                }
                Layer::Dense { in_dim, .. } => {
                    let binding = &schedule.bindings[&pos];
                    let key = binding.basic.key();
                    let transformed = match &binding.activation {
                        Some(t) => t.apply_activation(&act)?,
                        None => act.clone(),
                    };
                    if transformed.numel() != in_dim {
                        return Err(Error::Dimension(format!(
                            "{pos}: dense expects {in_dim} inputs, activation has {}",
                            transformed.numel()
                        )));
                    }
                    let pre_shape = transformed.shape().to_vec();
                    let u = transformed.reshaped(vec![in_dim])?;
                    let w = &params[&key];
                    let w_eff = match binding.view {
                        WeightView::Direct => w.clone(),
                        WeightView::Transposed => w.transposed()?,
                    };
                    let y = matvec_reference(&w_eff, &u)?;
                    tape.push(StepCache::Dense {
                        key,
                        view: binding.view,
                        transform: binding.activation.clone(),
                        u,
                        pre_shape,
                    });
                    act = y;
                }
                Layer::Conv2d { .. } => {
                    return Err(Error::InvalidInput(format!(
                        "{pos}: toy training covers dense networks; conv layers are inference-only"
                    )))
                }
            }
        }
    }
    Ok((act, tape))
}

fn loss_grad(output: &Tensor, label: usize, loss: Loss) -> (f64, Tensor) {
    match loss {
        Loss::Quadratic => {
            let mut diff = output.clone();
            let mut value = 0.0;
            for (i, v) in diff.data_mut().iter_mut().enumerate() {
                let target = if i == label { 1.0 } else { 0.0 };
                *v -= target;
                value += 0.5 * *v * *v;
            }
            (value, diff)
        }
        Loss::CrossEntropy => {
            let max = output
                .data()
                .iter()
                .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let exps: Vec<f64> = output.data().iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            let mut grad = output.clone();
            let mut value = 0.0;
            for (i, g) in grad.data_mut().iter_mut().enumerate() {
                let p = exps[i] / sum;
                if i == label {
                    value = -p.max(1e-300).ln();
                    *g = p - 1.0;
                } else {
                    *g = p;
                }
            }
            (value, grad)
        }
    }
}

/// Mean loss and parameter gradients over a batch. The gradient of a shared
/// basic matrix is the sum over its uses.
pub fn loss_and_gradients(
    net: &NetworkDesc,
    schedule: &Schedule,
    params: &BTreeMap<String, Tensor>,
    inputs: &[Tensor],
    labels: &[usize],
    loss: Loss,
) -> Result<(f64, BTreeMap<String, Tensor>)> {
    let mut grads: BTreeMap<String, Tensor> = params
        .iter()
        .map(|(k, w)| (k.clone(), Tensor::zeros(w.shape().to_vec())))
        .collect();
    let mut total_loss = 0.0;
    let scale = 1.0 / inputs.len().max(1) as f64;
    for (x, &label) in inputs.iter().zip(labels) {
        let (output, tape) = forward_item(net, schedule, params, x)?;
        let (value, mut dy) = loss_grad(&output, label, loss);
        total_loss += value * scale;
        for v in dy.data_mut() {
            *v *= scale;
        }
        for step in tape.iter().rev() {
            match step {
                StepCache::Norm { scale } => {
                    for v in dy.data_mut() {
                        *v *= scale;
                    }
                }
                StepCache::Relu { input } => {
                    let mut dx = dy.clone();
                    for (v, &inp) in dx.data_mut().iter_mut().zip(input.data()) {
                        if inp <= 0.0 {
                            *v = 0.0;
                        }
                    }
                    dy = dx.reshaped(input.shape().to_vec())?;
                }
                StepCache::Dense {
                    key,
                    view,
                    transform,
                    u,
                    pre_shape,
                } => {
                    let w = &params[key];
                    let grad = grads.get_mut(key).expect("registered param");
                    let (rows, cols) = (w.shape()[0], w.shape()[1]);
                    // dW_eff = dy (x) u; the transposed view contributes its
                    // transpose to the stored matrix.
                    match view {
                        WeightView::Direct => {
                            for i in 0..rows {
                                let dyi = dy.data()[i];
                                for j in 0..cols {
                                    grad.data_mut()[i * cols + j] += dyi * u.data()[j];
                                }
                            }
                        }
                        WeightView::Transposed => {
                            for i in 0..cols {
                                let dyi = dy.data()[i];
                                for j in 0..rows {
                                    grad.data_mut()[j * cols + i] += dyi * u.data()[j];
                                }
                            }
                        }
                    }
                    // du = W_eff^T dy.
                    let w_eff_t = match view {
                        WeightView::Direct => w.transposed()?,
                        WeightView::Transposed => w.clone(),
                    };
                    let du = matvec_reference(&w_eff_t, &dy)?;
                    let du = du.reshaped(pre_shape.clone())?;
                    dy = match transform {
                        Some(t) => t.invert_activation(&du)?,
                        None => du,
                    };
                }
            }
        }
    }
    Ok((total_loss, grads))
}

struct Adam {
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
    step: u64,
}

impl Adam {
    fn new(params: &BTreeMap<String, Tensor>) -> Self {
        let zeros = |p: &BTreeMap<String, Tensor>| {
            p.iter()
                .map(|(k, w)| (k.clone(), vec![0.0; w.numel()]))
                .collect()
        };
        Self {
            m: zeros(params),
            v: zeros(params),
            step: 0,
        }
    }

    fn update(
        &mut self,
        params: &mut BTreeMap<String, Tensor>,
        grads: &BTreeMap<String, Tensor>,
        lr: f64,
        weight_decay: f64,
    ) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step as i32);
        let bc2 = 1.0 - BETA2.powi(self.step as i32);
        for (key, w) in params.iter_mut() {
            let g = &grads[key];
            let m = self.m.get_mut(key).unwrap();
            let v = self.v.get_mut(key).unwrap();
            for ((wi, &gi), (mi, vi)) in w
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                // Coupled L2 weight decay, matching the reference optimizer.
                let gi = gi + weight_decay * *wi;
                *mi = BETA1 * *mi + (1.0 - BETA1) * gi;
                *vi = BETA2 * *vi + (1.0 - BETA2) * gi * gi;
                let mhat = *mi / bc1;
                let vhat = *vi / bc2;
                *wi -= lr * mhat / (vhat.sqrt() + EPS);
            }
        }
    }
}

/// Cosine annealing from the initial rate to zero over the epoch budget.
fn cosine_lr(lr0: f64, epoch: usize, epochs: usize) -> f64 {
    if epochs <= 1 {
        return lr0;
    }
    0.5 * lr0 * (1.0 + (std::f64::consts::PI * epoch as f64 / epochs as f64).cos())
}

/// Trains the network on the dataset and returns weights plus per-epoch
/// metrics. `epochs = 0` returns the seeded initial weights unchanged.
pub fn toy_train(
    net: &NetworkDesc,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(WeightStore, Vec<TrainMetrics>)> {
    let schedule = build_schedule(net)?;
    let store = init_weights(net, cfg.seed)?;
    let mut params: BTreeMap<String, Tensor> = store
        .iter()
        .map(|(k, e)| (k.clone(), e.to_tensor()))
        .collect();
    let mut optimizer = Adam::new(&params);
    let mut shuffle_rng = SplitMix64::new(cfg.seed.wrapping_add(0xA5A5_A5A5));
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
        let mut order: Vec<usize> = (0..data.len()).collect();
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.next_below(i as u64 + 1) as usize;
            order.swap(i, j);
        }
        let batch = cfg.batch_size.max(1);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(batch) {
            let inputs: Vec<Tensor> = chunk.iter().map(|&i| data.inputs[i].clone()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
            let (loss, grads) =
                loss_and_gradients(net, &schedule, &params, &inputs, &labels, cfg.loss)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: format!("loss {loss}"),
                });
            }
            optimizer.update(&mut params, &grads, lr, cfg.weight_decay);
            epoch_loss += loss;
            batches += 1;
        }
        let accuracy = train_accuracy(net, &schedule, &params, data)?;
        metrics.push(TrainMetrics {
            epoch,
            loss: epoch_loss / batches.max(1) as f64,
            accuracy,
            lr,
        });
    }

    let out: WeightStore = params
        .into_iter()
        .map(|(k, w)| (k, WeightEntry::Float(w)))
        .collect();
    Ok((out, metrics))
}

fn train_accuracy(
    net: &NetworkDesc,
    schedule: &Schedule,
    params: &BTreeMap<String, Tensor>,
    data: &Dataset,
) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (x, &label) in data.inputs.iter().zip(&data.labels) {
        let (out, _) = forward_item(net, schedule, params, x)?;
        let pred = out
            .data()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if pred == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
