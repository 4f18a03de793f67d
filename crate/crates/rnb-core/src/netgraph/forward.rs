//! Inference engines: a float reference path and the photonic path.
//!
//! The photonic path executes layer-major over the batch: each weighted
//! layer is programmed (or found resident) once, then every batch item
//! streams through it. Activations are rescaled to [0, 1] per layer, encoded
//! at 8 bits, weighted optically against the offset-decomposed tile contents,
//! read out through per-tile ADCs and rescaled electrically. ReLU and norm
//! run in the electrical domain.

use std::collections::BTreeMap;

use crate::cost::{ComponentParams, WorkloadCounts};
use crate::error::{Error, Result};
use crate::netgraph::{Layer, LayerPos, NetworkDesc};
use crate::numerics::{
    dequantize, matmul_reference, matvec_reference, quantize, Tensor, WeightStore,
};
use crate::obu::WeightView;
use crate::prm::{build_schedule, tile_matrix, MappingPlan, Schedule, Session, WriteTrace};
use crate::tile::{adc_step, decompose_offset, CalibrationCurve, TileConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    FloatRef,
    Photonic,
}

/// Network description bound to concrete weights and tile plans.
#[derive(Debug, Clone)]
pub struct CompiledNet {
    pub desc: NetworkDesc,
    pub schedule: Schedule,
    /// Per distinct basic matrix: the tile plan.
    pub plans: BTreeMap<String, MappingPlan>,
    /// Float weights of the basic matrices, in logical (rows x cols) layout.
    pub weights: BTreeMap<String, Tensor>,
    /// Offset-decomposed, 8-bit-gridded programming targets per basic matrix.
    pub targets: BTreeMap<String, Tensor>,
}

/// Binds weights to a network description and precomputes tile plans and
/// programming targets.
pub fn compile(desc: &NetworkDesc, store: &WeightStore, tile: &TileConfig) -> Result<CompiledNet> {
    let schedule = build_schedule(desc)?;
    let mut plans = BTreeMap::new();
    let mut weights = BTreeMap::new();
    let mut targets = BTreeMap::new();
    for basic in schedule.distinct_basics() {
        let key = basic.key();
        let layer = desc.layer(basic).expect("validated");
        let (rows, cols) = layer.weight_dims().expect("weighted");
        let entry = store.get(&key).ok_or_else(|| Error::Schema {
            path: key.clone(),
            message: "missing weights".into(),
        })?;
        let w = entry.to_tensor();
        let w = if w.shape() == [rows, cols] {
            w
        } else if w.numel() == rows * cols {
            w.reshaped(vec![rows, cols])?
        } else {
            return Err(Error::Dimension(format!(
                "weights {key}: expected {rows}x{cols}, found {:?}",
                w.shape()
            )));
        };
        let plan = tile_matrix(&key, &w, tile)?;
        // Normalize, quantize to the 8-bit weight grid, offset-decompose.
        let w_b = Tensor::new(
            vec![rows, cols],
            w.data().iter().map(|v| v / plan.scale).collect(),
        )?;
        let w_b8 = dequantize(&quantize(&w_b, 8)?);
        let dec = decompose_offset(&w_b8)?;
        plans.insert(key.clone(), plan);
        targets.insert(key.clone(), dec.w_prime);
        weights.insert(key, w);
    }
    Ok(CompiledNet {
        desc: desc.clone(),
        schedule,
        plans,
        weights,
        targets,
    })
}

impl CompiledNet {
    /// Effective float weight for a layer position under its bound view.
    fn effective_weight(&self, pos: LayerPos) -> Result<(Tensor, WeightView, String)> {
        let binding = self
            .schedule
            .bindings
            .get(&pos)
            .ok_or_else(|| Error::Schedule(format!("{pos} has no binding")))?;
        let key = binding.basic.key();
        let w = &self.weights[&key];
        Ok(match binding.view {
            WeightView::Direct => (w.clone(), WeightView::Direct, key),
            WeightView::Transposed => (w.transposed()?, WeightView::Transposed, key),
        })
    }
}

/// Photonic execution state: the tile pool plus session trace.
pub struct PhotonicSession {
    pub session: Session,
}

impl PhotonicSession {
    pub fn new(tile: TileConfig, curve: CalibrationCurve, params: ComponentParams) -> Self {
        Self {
            session: Session::new(tile, curve, params),
        }
    }

    /// Sizes the physical pool to the reuse-aware design of `net`: each
    /// matrix shape gets as many slots as the annotated schedule has
    /// distinct basics. Running a reuse-disabled twin against this budget
    /// streams its matrices through the pool.
    pub fn apply_design_budget(&mut self, net: &CompiledNet) {
        let mut per_class: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for plan in net.plans.values() {
            *per_class.entry((plan.rows, plan.cols)).or_insert(0) += 1;
        }
        for ((rows, cols), count) in per_class {
            self.session.set_slot_budget(rows, cols, count);
        }
    }

    pub fn trace(&self) -> &WriteTrace {
        self.session.trace()
    }
}

/// Worst per-layer deviation of the photonic path against the float oracle
/// applied to the same layer input, in absolute units and in output-referred
/// ADC steps.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LayerDeviation {
    pub layer: String,
    pub max_abs: f64,
    pub steps: f64,
}

/// Photonic batch result: outputs plus activity counts and per-layer
/// equivalence diagnostics.
#[derive(Debug, Clone)]
pub struct PhotonicOutcome {
    pub outputs: Vec<Tensor>,
    pub workload: WorkloadCounts,
    pub deviations: Vec<LayerDeviation>,
}

fn flatten_for_dense(x: &Tensor, in_dim: usize) -> Result<Tensor> {
    if x.numel() != in_dim {
        return Err(Error::Dimension(format!(
            "dense layer expects {in_dim} inputs, activation has {}",
            x.numel()
        )));
    }
    x.reshaped(vec![in_dim])
}

fn relu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    for v in y.data_mut() {
        *v = v.max(0.0);
    }
    y
}

fn affine(x: &Tensor, scale: f64, offset: f64) -> Tensor {
    let mut y = x.clone();
    for v in y.data_mut() {
        *v = scale * *v + offset;
    }
    y
}

/// Float-reference forward pass over a batch.
pub fn forward_float(net: &CompiledNet, items: &[Tensor]) -> Result<Vec<Tensor>> {
    let mut acts: Vec<Tensor> = items.to_vec();
    for (b, block) in net.desc.blocks.iter().enumerate() {
        for (l, layer) in block.layers.iter().enumerate() {
            let pos = LayerPos { block: b, layer: l };
            match layer {
                Layer::Relu => acts = acts.iter().map(relu).collect(),
                Layer::Norm { scale, offset } => {
                    acts = acts.iter().map(|x| affine(x, *scale, *offset)).collect()
                }
                Layer::Dense { in_dim, .. } => {
                    let binding = &net.schedule.bindings[&pos];
                    let (w_eff, _, _) = net.effective_weight(pos)?;
                    let mut next = Vec::with_capacity(acts.len());
                    for x in &acts {
                        let x = match &binding.activation {
                            Some(t) => t.apply_activation(x)?,
                            None => x.clone(),
                        };
                        let x = flatten_for_dense(&x, *in_dim)?;
                        next.push(matvec_reference(&w_eff, &x)?);
                    }
                    acts = next;
                }
                Layer::Conv2d { k, stride, pad, .. } => {
                    let binding = &net.schedule.bindings[&pos];
                    let (w_eff, _, _) = net.effective_weight(pos)?;
                    let cout = w_eff.shape()[0];
                    let mut next = Vec::with_capacity(acts.len());
                    for x in &acts {
                        let x = match &binding.activation {
                            Some(t) => t.apply_activation(x)?,
                            None => x.clone(),
                        };
                        let (patches, oh, ow) = super::lower_conv_im2col(&x, *k, *stride, *pad)?;
                        let y = matmul_reference(&w_eff, &patches)?;
                        next.push(y.reshaped(vec![cout, oh, ow])?);
                    }
                    acts = next;
                }
            }
        }
    }
    Ok(acts)
}

/// Encodes an activation for the optical path: non-negative check, rescale to
/// [0, 1] by its max, quantize to the 8-bit grid. Returns (encoded, scale).
fn encode_activation(x: &Tensor) -> Result<(Tensor, f64)> {
    if let Some(bad) = x.data().iter().find(|v| **v < 0.0) {
        return Err(Error::Encoding(format!(
            "negative activation {bad} cannot enter the all-positive optical path"
        )));
    }
    let s = x.max_abs();
    let s = if s == 0.0 { 1.0 } else { s };
    let normalized = Tensor::new(x.shape().to_vec(), x.data().iter().map(|v| v / s).collect())?;
    Ok((dequantize(&quantize(&normalized, 8)?), s))
}

/// Photonic forward pass, layer-major over the batch. Programs each weighted
/// layer's basic matrix on demand (free when already resident), so weights
/// persist across batch items.
pub fn forward_photonic(
    net: &CompiledNet,
    photonic: &mut PhotonicSession,
    items: &[Tensor],
) -> Result<PhotonicOutcome> {
    let mut acts: Vec<Tensor> = items.to_vec();
    let mut workload = WorkloadCounts::default();
    let mut deviations = Vec::new();
    let cfg = photonic.session.tile_config;
    let adc_bits = photonic.session.params.adc_bits;

    for (b, block) in net.desc.blocks.iter().enumerate() {
        for (l, layer) in block.layers.iter().enumerate() {
            let pos = LayerPos { block: b, layer: l };
            match layer {
                Layer::Relu => acts = acts.iter().map(relu).collect(),
                Layer::Norm { scale, offset } => {
                    // Folded into TIA gain and signal offset: no latency or
                    // activity charged.
                    acts = acts.iter().map(|x| affine(x, *scale, *offset)).collect()
                }
                Layer::Dense { .. } | Layer::Conv2d { .. } => {
                    let binding = net.schedule.bindings[&pos].clone();
                    let key = binding.basic.key();
                    let plan = net.plans[&key].clone();
                    photonic
                        .session
                        .ensure_programmed(&plan, &net.targets[&key])?;
                    let (w_eff, view, _) = net.effective_weight(pos)?;
                    let sum_width = match view {
                        WeightView::Direct => cfg.cols,
                        WeightView::Transposed => cfg.rows,
                    };
                    let mut max_abs_dev = 0.0f64;
                    let mut max_steps = 0.0f64;
                    let mut next = Vec::with_capacity(acts.len());
                    for x in &acts {
                        let x = match &binding.activation {
                            Some(t) => t.apply_activation(x)?,
                            None => x.clone(),
                        };
                        let y = match *layer {
                            Layer::Dense { in_dim, .. } => {
                                let x = flatten_for_dense(&x, in_dim)?;
                                let (xq, s_x) = encode_activation(&x)?;
                                let (raw, counts) = photonic.session.matrix_mvm(&key, &xq, view)?;
                                workload.merge(&counts);
                                let y = Tensor::new(
                                    vec![raw.numel()],
                                    raw.data().iter().map(|v| v * plan.scale * s_x).collect(),
                                )?;
                                let step = 2.0 * plan.scale * s_x * adc_step(sum_width, adc_bits);
                                let reference = matvec_reference(&w_eff, &x)?;
                                track_deviation(
                                    &y,
                                    &reference,
                                    step,
                                    &mut max_abs_dev,
                                    &mut max_steps,
                                );
                                y
                            }
                            Layer::Conv2d {
                                cout,
                                k,
                                stride,
                                pad,
                                ..
                            } => {
                                let (patches, oh, ow) =
                                    super::lower_conv_im2col(&x, k, stride, pad)?;
                                let (pq, s_x) = encode_activation(&patches)?;
                                let n_patches = oh * ow;
                                let mut y = vec![0.0; cout * n_patches];
                                for p in 0..n_patches {
                                    let col = Tensor::new(
                                        vec![patches.shape()[0]],
                                        (0..patches.shape()[0])
                                            .map(|r| pq.data()[r * n_patches + p])
                                            .collect(),
                                    )?;
                                    let (raw, counts) =
                                        photonic.session.matrix_mvm(&key, &col, view)?;
                                    workload.merge(&counts);
                                    for (co, v) in raw.data().iter().enumerate() {
                                        y[co * n_patches + p] = v * plan.scale * s_x;
                                    }
                                }
                                let y = Tensor::new(vec![cout, oh, ow], y)?;
                                let step = 2.0 * plan.scale * s_x * adc_step(sum_width, adc_bits);
                                let reference = matmul_reference(&w_eff, &patches)?
                                    .reshaped(vec![cout, oh, ow])?;
                                track_deviation(
                                    &y,
                                    &reference,
                                    step,
                                    &mut max_abs_dev,
                                    &mut max_steps,
                                );
                                y
                            }
                            _ => unreachable!(),
                        };
                        next.push(y);
                    }
                    deviations.push(LayerDeviation {
                        layer: key.clone(),
                        max_abs: max_abs_dev,
                        steps: max_steps,
                    });
                    acts = next;
                }
            }
        }
    }
    Ok(PhotonicOutcome {
        outputs: acts,
        workload,
        deviations,
    })
}

fn track_deviation(got: &Tensor, want: &Tensor, step: f64, max_abs: &mut f64, max_steps: &mut f64) {
    for (a, b) in got.data().iter().zip(want.data()) {
        let d = (a - b).abs();
        if d > *max_abs {
            *max_abs = d;
        }
        if step > 0.0 {
            let s = d / step;
            if s > *max_steps {
                *max_steps = s;
            }
        }
    }
}

/// Engine-dispatching batch forward. Photonic runs need a session.
pub fn forward_batch(
    net: &CompiledNet,
    items: &[Tensor],
    engine: EngineKind,
    session: Option<&mut PhotonicSession>,
) -> Result<Vec<Tensor>> {
    match engine {
        EngineKind::FloatRef => forward_float(net, items),
        EngineKind::Photonic => {
            let session = session.ok_or_else(|| {
                Error::Mapping("photonic engine requires a programmed session".into())
            })?;
            Ok(forward_photonic(net, session, items)?.outputs)
        }
    }
}

/// Single-input forward.
pub fn forward(
    net: &CompiledNet,
    x: &Tensor,
    engine: EngineKind,
    session: Option<&mut PhotonicSession>,
) -> Result<Tensor> {
    let mut out = forward_batch(net, std::slice::from_ref(x), engine, session)?;
    Ok(out.remove(0))
}

/// Argmax classification accuracy over a dataset split.
pub fn evaluate(
    net: &CompiledNet,
    data: &super::Dataset,
    engine: EngineKind,
    session: Option<&mut PhotonicSession>,
) -> Result<f64> {
    if data.inputs.is_empty() {
        return Ok(0.0);
    }
    let outputs = forward_batch(net, &data.inputs, engine, session)?;
    let mut correct = 0usize;
    for (out, &label) in outputs.iter().zip(&data.labels) {
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
    Ok(correct as f64 / data.inputs.len() as f64)
}
