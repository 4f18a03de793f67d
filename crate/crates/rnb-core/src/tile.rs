//! One MRR crossbar tile: signed-weight offset decomposition, voltage
//! encoding, the per-element program/calibrate write loop, and the tile-level
//! matrix-vector product.
//!
//! The transmission of each ring encodes one weight in [0, 1]. Signed weights
//! ride on a uniform offset: W_b x = 2 (W'_b x - W_o x) with
//! W'_b = 0.5 W_b + W_o and W_o = 0.5 everywhere, so a single extra ring row
//! per matrix recovers the full [-1, 1] range.

use crate::cost::ComponentParams;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::obu::WeightView;
use std::sync::Arc;

/// Rewrite threshold: targets within one 8-bit weight step of the programmed
/// value are not rewritten.
pub const WRITE_TOLERANCE: f64 = 1.0 / 255.0;

/// Uniform entry of the offset matrix W_o.
pub const OFFSET_VALUE: f64 = 0.5;

/// Geometry of one crossbar tile plus the DWDM readout capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TileConfig {
    pub rows: usize,
    pub cols: usize,
    /// Wavelength channels usable per readout bus.
    pub dwdm_capacity: usize,
}

impl Default for TileConfig {
    fn default() -> Self {
        // 8x8 is the largest array considered crosstalk-safe.
        Self {
            rows: 8,
            cols: 8,
            dwdm_capacity: 16,
        }
    }
}

/// Signed weight matrix split into an all-positive part and a uniform offset.
#[derive(Debug, Clone)]
pub struct OffsetDecomposition {
    pub w_b: Tensor,
    pub w_prime: Tensor,
    pub w_offset_value: f64,
}

/// Splits a normalized signed matrix per the offset strategy.
pub fn decompose_offset(w_b: &Tensor) -> Result<OffsetDecomposition> {
    if w_b.rank() != 2 {
        return Err(Error::Dimension(format!(
            "offset decomposition needs rank 2, got {:?}",
            w_b.shape()
        )));
    }
    if let Some(bad) = w_b.data().iter().find(|v| v.abs() > 1.0 + 1e-12) {
        return Err(Error::Normalization(format!(
            "entry {bad} outside [-1, 1]; normalize first"
        )));
    }
    let data = w_b
        .data()
        .iter()
        .map(|&v| (0.5 * v.clamp(-1.0, 1.0) + OFFSET_VALUE).clamp(0.0, 1.0))
        .collect();
    Ok(OffsetDecomposition {
        w_b: w_b.clone(),
        w_prime: Tensor::new(w_b.shape().to_vec(), data)?,
        w_offset_value: OFFSET_VALUE,
    })
}

/// Extra MRR devices (and first-session writes) charged for computing W_o x:
/// one ring per column, shared by every row of the matrix.
pub fn offset_row_cost(n: usize) -> usize {
    n
}

/// Reconstructs W_b x from the two all-positive products: 2 (W' x - W_o x).
pub fn offset_reconstruct(w_prime_x: &[f64], w_o_x: f64) -> Vec<f64> {
    w_prime_x.iter().map(|&v| 2.0 * (v - w_o_x)).collect()
}

/// Monotone device curve on [0, 1]. `Identity` and `SinSquared` invert
/// analytically; `Custom` inverts by bisection.
#[derive(Clone)]
pub enum TransferCurve {
    Identity,
    /// f(t) = sin^2(t * pi / 2), the resonance-flank transmission shape.
    SinSquared,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for TransferCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransferCurve::Identity => write!(f, "Identity"),
            TransferCurve::SinSquared => write!(f, "SinSquared"),
            TransferCurve::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl TransferCurve {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TransferCurve::Identity => t,
            TransferCurve::SinSquared => {
                let s = (t * std::f64::consts::FRAC_PI_2).sin();
                s * s
            }
            TransferCurve::Custom(f) => f(t),
        }
    }

    /// Inverse on the declared [0, 1] operating branch.
    pub fn invert(&self, y: f64) -> Result<f64> {
        let (lo, hi) = (self.eval(0.0), self.eval(1.0));
        if y < lo - 1e-12 || y > hi + 1e-12 {
            return Err(Error::UnreachableTarget(format!(
                "{y} outside curve range [{lo}, {hi}]"
            )));
        }
        match self {
            TransferCurve::Identity => Ok(y.clamp(0.0, 1.0)),
            TransferCurve::SinSquared => {
                Ok(y.clamp(0.0, 1.0).sqrt().asin() / std::f64::consts::FRAC_PI_2)
            }
            TransferCurve::Custom(f) => {
                let (mut a, mut b) = (0.0f64, 1.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if f(mid) < y {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                Ok(0.5 * (a + b))
            }
        }
    }
}

/// Device calibration: transmission f(phase), phase phi(v^2), and the
/// closed-loop iteration count per element write.
#[derive(Debug, Clone)]
pub struct CalibrationCurve {
    pub f: TransferCurve,
    pub phi: TransferCurve,
    /// Loop length C: write attempts per element.
    pub c_loop: u32,
}

impl Default for CalibrationCurve {
    fn default() -> Self {
        Self {
            f: TransferCurve::Identity,
            phi: TransferCurve::Identity,
            c_loop: 100,
        }
    }
}

impl CalibrationCurve {
    pub fn with_c(c_loop: u32) -> Self {
        Self {
            c_loop,
            ..Self::default()
        }
    }
}

/// Drive voltage that lands transmission x: v = sqrt(phi^-1(f^-1(x))).
pub fn voltage_for_target(curve: &CalibrationCurve, x: f64) -> Result<f64> {
    let theta = curve.f.invert(x)?;
    let u = curve.phi.invert(theta)?;
    if u < -1e-12 {
        return Err(Error::UnreachableTarget(format!(
            "negative squared drive {u}"
        )));
    }
    let v = u.max(0.0).sqrt();
    debug_assert!((curve.f.eval(curve.phi.eval(v * v)) - x).abs() < 1e-9);
    Ok(v)
}

/// One program/calibrate event on one ring.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteEvent {
    pub tile_id: u32,
    pub row: u32,
    pub col: u32,
    pub target: f64,
    pub iterations: u32,
    pub energy_nj: f64,
    pub time_ns: f64,
}

/// Programmed contents and per-cell write counters of one physical tile.
#[derive(Debug, Clone)]
pub struct MrrTileState {
    pub tile_id: u32,
    pub config: TileConfig,
    programmed: Tensor,
    write_count: Vec<u32>,
}

impl MrrTileState {
    pub fn fresh(tile_id: u32, config: TileConfig) -> Self {
        Self {
            tile_id,
            config,
            programmed: Tensor::zeros(vec![config.rows, config.cols]),
            write_count: vec![0; config.rows * config.cols],
        }
    }

    pub fn programmed(&self) -> &Tensor {
        &self.programmed
    }

    pub fn write_count(&self, row: usize, col: usize) -> u32 {
        self.write_count[row * self.config.cols + col]
    }

    pub fn total_writes(&self) -> u64 {
        self.write_count.iter().map(|&c| c as u64).sum()
    }

    /// Runs the write loop for every cell whose target differs from the
    /// programmed value by more than [`WRITE_TOLERANCE`] (never-written cells
    /// always program). Returns one event per rewritten cell, row-major.
    pub fn program_tile(
        &mut self,
        target: &Tensor,
        curve: &CalibrationCurve,
        params: &ComponentParams,
    ) -> Result<Vec<WriteEvent>> {
        self.program_tile_inner(target, curve, params, false)
    }

    /// Write loop without the tolerance skip: every cell programs. Used when
    /// a different logical matrix streams into the tile, where the stale
    /// calibration state is not trusted.
    pub fn program_tile_forced(
        &mut self,
        target: &Tensor,
        curve: &CalibrationCurve,
        params: &ComponentParams,
    ) -> Result<Vec<WriteEvent>> {
        self.program_tile_inner(target, curve, params, true)
    }

    fn program_tile_inner(
        &mut self,
        target: &Tensor,
        curve: &CalibrationCurve,
        params: &ComponentParams,
        force: bool,
    ) -> Result<Vec<WriteEvent>> {
        if target.shape() != [self.config.rows, self.config.cols] {
            return Err(Error::Mapping(format!(
                "target shape {:?} does not match {}x{} tile",
                target.shape(),
                self.config.rows,
                self.config.cols
            )));
        }
        let c = curve.c_loop.max(1);
        let energy_nj = per_write_energy_nj(curve, params);
        let time_ns = c as f64 * params.write_settle_ns;
        let mut events = Vec::new();
        for row in 0..self.config.rows {
            for col in 0..self.config.cols {
                let idx = row * self.config.cols + col;
                let t = target.data()[idx];
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::Mapping(format!(
                        "target {t} at ({row},{col}) outside [0,1]"
                    )));
                }
                let never_written = self.write_count[idx] == 0;
                if !force
                    && !never_written
                    && (t - self.programmed.data()[idx]).abs() <= WRITE_TOLERANCE
                {
                    continue;
                }
                // The write procedure drives the solved voltage C times;
                // functionally the ring lands on the target.
                voltage_for_target(curve, t)?;
                self.programmed.data_mut()[idx] = t;
                self.write_count[idx] += 1;
                events.push(WriteEvent {
                    tile_id: self.tile_id,
                    row: row as u32,
                    col: col as u32,
                    target: t,
                    iterations: c,
                    energy_nj,
                    time_ns,
                });
            }
        }
        Ok(events)
    }

    /// Optical MVM against the programmed transmissions.
    ///
    /// `Direct` drives the horizontal port (returns programmed * x, length
    /// rows); `Transposed` drives the vertical port (programmed^T * x, length
    /// cols) with zero writes. Each readout is digitized by an ADC whose full
    /// scale is the summation width.
    pub fn tile_mvm(&self, x: &Tensor, view: WeightView, adc_bits: u32) -> Result<Tensor> {
        if x.rank() != 1 {
            return Err(Error::Dimension(format!(
                "tile input must be rank 1, got {:?}",
                x.shape()
            )));
        }
        if let Some(bad) = x.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Encoding(format!("input value {bad} outside [0, 1]")));
        }
        let (out_len, sum_width) = match view {
            WeightView::Direct => (self.config.rows, self.config.cols),
            WeightView::Transposed => (self.config.cols, self.config.rows),
        };
        if x.numel() != sum_width {
            return Err(Error::Dimension(format!(
                "input length {} does not match {sum_width}-wide summation",
                x.numel()
            )));
        }
        let step = adc_step(sum_width, adc_bits);
        let mut out = vec![0.0; out_len];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for j in 0..sum_width {
                let w = match view {
                    WeightView::Direct => self.programmed.data()[i * self.config.cols + j],
                    WeightView::Transposed => self.programmed.data()[j * self.config.cols + i],
                };
                acc += w * x.data()[j];
            }
            *o = quantize_adc(acc, step);
        }
        Tensor::new(vec![out_len], out)
    }
}

/// ADC least-significant-bit step for a readout summing `width` lanes.
pub fn adc_step(width: usize, adc_bits: u32) -> f64 {
    width as f64 / ((1u64 << adc_bits) - 1) as f64
}

/// Rounds a balanced-photodetector current to the nearest ADC code.
pub fn quantize_adc(value: f64, step: f64) -> f64 {
    (value / step).round() * step
}

/// Offset-row product 0.5 * sum(x), computed over tile-width segments with
/// one ADC per segment, the same readout chain as the weight tiles.
pub fn offset_dot(x: &[f64], segment_width: usize, adc_bits: u32) -> f64 {
    let step = adc_step(segment_width, adc_bits);
    x.chunks(segment_width)
        .map(|seg| quantize_adc(OFFSET_VALUE * seg.iter().sum::<f64>(), step))
        .sum()
}

/// Energy of one element write: C loop iterations of heater+tuner power over
/// the settle time.
pub fn per_write_energy_nj(curve: &CalibrationCurve, params: &ComponentParams) -> f64 {
    // mW * ns = pJ; divide to nJ.
    curve.c_loop.max(1) as f64 * params.heater_tuner_mw * params.write_settle_ns / 1000.0
}
