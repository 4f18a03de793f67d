//! Energy, latency and area accounting.
//!
//! Component constants follow the published device table for the modeled
//! silicon-photonic platform; the analytic comparison covers four
//! architectures (MZI mesh, two MRR baselines with per-matrix recalibration,
//! and the reuse-and-blend design). The affine sweep fit decomposes measured
//! delay/energy rows into a write component and a residual, each affine in
//! 1/N over the tile-size sweep.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prm::WriteTrace;

/// Device and peripheral constants.
///
/// Powers in mW, areas in mm^2, times in ns. The published table fixes the
/// heater/tuner, modulator, ADC and DAC figures; `write_settle_ns` (the
/// per-iteration loop duration), the laser wall-plug power and the S&H/eDRAM
/// powers are not tabulated and are exposed as documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentParams {
    pub heater_tuner_mw: f64,
    pub modulator_driver_mw: f64,
    pub adc_mw: f64,
    pub dac_mw: f64,
    pub mrr_cell_area_mm2: f64,
    pub adc_area_mm2: f64,
    pub dac_area_mm2: f64,
    pub sh_area_mm2: f64,
    pub edram_area_mm2: f64,
    pub bus_area_mm2: f64,
    pub pd_responsivity_a_per_w: f64,
    /// Settle time of one write-loop iteration.
    pub write_settle_ns: f64,
    /// MVM pipeline clock.
    pub clock_ghz: f64,
    /// Readout/activation resolution.
    pub adc_bits: u32,
    /// Wall-plug laser power per wavelength channel (not tabulated).
    pub laser_mw_per_channel: f64,
    /// Sample-and-hold active power (not tabulated).
    pub sh_mw: f64,
    /// eDRAM access power (not tabulated).
    pub edram_mw: f64,
}

impl Default for ComponentParams {
    fn default() -> Self {
        Self {
            heater_tuner_mw: 14.0,
            modulator_driver_mw: 0.8,
            adc_mw: 39.0,
            dac_mw: 3.93,
            mrr_cell_area_mm2: 0.127 * 0.127,
            adc_area_mm2: 1.2288,
            dac_area_mm2: 0.0004,
            sh_area_mm2: 0.00004,
            edram_area_mm2: 0.268,
            bus_area_mm2: 0.009,
            pd_responsivity_a_per_w: 1.1,
            write_settle_ns: 100.0,
            clock_ghz: 1.0,
            adc_bits: 8,
            laser_mw_per_channel: 10.0,
            sh_mw: 0.01,
            edram_mw: 10.0,
        }
    }
}

impl ComponentParams {
    pub fn cycle_ns(&self) -> f64 {
        1.0 / self.clock_ghz
    }
}

/// Architectures covered by the analytic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    MziOnn,
    CrossLight,
    HolyLight,
    RnB,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::MziOnn,
        Architecture::CrossLight,
        Architecture::HolyLight,
        Architecture::RnB,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Architecture::MziOnn => "mzi-onn",
            Architecture::CrossLight => "crosslight",
            Architecture::HolyLight => "holylight",
            Architecture::RnB => "rnb",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mzi" | "mzi-onn" | "mzionn" => Ok(Architecture::MziOnn),
            "crosslight" => Ok(Architecture::CrossLight),
            "holylight" => Ok(Architecture::HolyLight),
            "rnb" | "r&b" => Ok(Architecture::RnB),
            other => Err(Error::InvalidInput(format!("unknown architecture {other}"))),
        }
    }
}

/// Inputs to the analytic formulas: K matrices of M x N, loop length C,
/// DWDM capacity B, plus the MZI/MRR area and power ratios and the thermal
/// eigendecomposition ratio.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArchFormulaInputs {
    pub m: u64,
    pub n: u64,
    pub k: u64,
    pub c: u64,
    pub b: u64,
    pub beta_a: u64,
    pub beta_p: u64,
    pub beta_t: f64,
}

impl Default for ArchFormulaInputs {
    fn default() -> Self {
        Self {
            m: 8,
            n: 8,
            k: 1,
            c: 100,
            b: 16,
            beta_a: 24,
            beta_p: 12,
            beta_t: 1.0,
        }
    }
}

impl ArchFormulaInputs {
    fn validate(&self) -> Result<()> {
        if self.m < 1 || self.n < 1 || self.k < 1 || self.c < 1 || self.b < 1 {
            return Err(Error::InvalidInput("M, N, K, C, B must all be >= 1".into()));
        }
        if self.beta_t <= 0.0 {
            return Err(Error::InvalidInput("beta_t must be positive".into()));
        }
        Ok(())
    }
}

/// Normalized programming count, latency units and power units for one
/// architecture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchCost {
    pub programming_times: u64,
    pub latency_units: u64,
    pub power_units: f64,
}

/// Evaluates the analytic cost row for one architecture.
pub fn analytic_cost(arch: Architecture, inputs: &ArchFormulaInputs) -> Result<ArchCost> {
    inputs.validate()?;
    let &ArchFormulaInputs {
        m,
        n,
        k,
        c,
        b,
        beta_a,
        beta_p,
        beta_t,
    } = inputs;
    let min_nb = n.min(b);
    Ok(match arch {
        Architecture::MziOnn => ArchCost {
            programming_times: beta_a * m * n * k,
            latency_units: beta_a,
            power_units: (beta_p * m * n * k) as f64,
        },
        Architecture::CrossLight => ArchCost {
            programming_times: min_nb * k * c,
            latency_units: ((n * c) as f64 / (b as f64 * beta_t)).ceil() as u64,
            power_units: (min_nb * k) as f64 / beta_t,
        },
        Architecture::HolyLight => ArchCost {
            programming_times: min_nb * k * c,
            latency_units: (n * c).div_ceil(b),
            power_units: (min_nb * k) as f64,
        },
        Architecture::RnB => ArchCost {
            programming_times: min_nb,
            latency_units: n.div_ceil(b * k),
            power_units: min_nb as f64,
        },
    })
}

/// Aggregate pipeline activity of one inference session.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct WorkloadCounts {
    /// Sequential MVM pipeline cycles.
    pub mvm_cycles: u64,
    /// Input encodings through DAC + modulator.
    pub dac_conversions: u64,
    /// Readouts through the BPD + ADC chain.
    pub adc_conversions: u64,
    pub sh_operations: u64,
    pub edram_accesses: u64,
    /// Concurrently lit wavelength channels.
    pub laser_channels: u64,
}

impl WorkloadCounts {
    pub fn merge(&mut self, other: &WorkloadCounts) {
        self.mvm_cycles += other.mvm_cycles;
        self.dac_conversions += other.dac_conversions;
        self.adc_conversions += other.adc_conversions;
        self.sh_operations += other.sh_operations;
        self.edram_accesses += other.edram_accesses;
        self.laser_channels = self.laser_channels.max(other.laser_channels);
    }
}

/// Energy by category, all in microjoules.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub programming_uj: f64,
    pub calibration_uj: f64,
    pub laser_uj: f64,
    pub modulation_uj: f64,
    pub adc_uj: f64,
    pub dac_uj: f64,
    pub sample_hold_uj: f64,
    pub memory_uj: f64,
}

impl EnergyBreakdown {
    pub fn total_uj(&self) -> f64 {
        self.programming_uj
            + self.calibration_uj
            + self.laser_uj
            + self.modulation_uj
            + self.adc_uj
            + self.dac_uj
            + self.sample_hold_uj
            + self.memory_uj
    }

    pub fn categories(&self) -> [(&'static str, f64); 8] {
        [
            ("programming", self.programming_uj),
            ("calibration", self.calibration_uj),
            ("laser", self.laser_uj),
            ("modulation", self.modulation_uj),
            ("adc", self.adc_uj),
            ("dac", self.dac_uj),
            ("sample_hold", self.sample_hold_uj),
            ("memory", self.memory_uj),
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub write_ns: f64,
    pub compute_ns: f64,
}

impl LatencyBreakdown {
    pub fn total_ns(&self) -> f64 {
        self.write_ns + self.compute_ns
    }
}

/// Full cost report for one session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub energy: EnergyBreakdown,
    pub total_energy_uj: f64,
    pub latency: LatencyBreakdown,
    pub total_latency_ns: f64,
}

/// Accounts a programming trace plus pipeline activity into a cost report.
///
/// Programming energy charges one loop iteration per write; calibration
/// charges the remaining C-1. Both derive from integer event counts times the
/// per-iteration energy, so reuse ratios come out exact.
pub fn simulate_cost(
    trace: &WriteTrace,
    workload: &WorkloadCounts,
    params: &ComponentParams,
) -> CostReport {
    let iter_pj = params.heater_tuner_mw * params.write_settle_ns;
    let writes = trace.total_writes();
    let program_iters = writes;
    let calib_iters = trace.calibration_iterations.saturating_sub(writes);

    let cyc = params.cycle_ns();
    let active_ns = workload.mvm_cycles as f64 * cyc;
    let energy = EnergyBreakdown {
        programming_uj: program_iters as f64 * iter_pj / 1e6,
        calibration_uj: calib_iters as f64 * iter_pj / 1e6,
        laser_uj: params.laser_mw_per_channel * workload.laser_channels as f64 * active_ns / 1e6,
        modulation_uj: params.modulator_driver_mw * workload.dac_conversions as f64 * cyc / 1e6,
        adc_uj: params.adc_mw * workload.adc_conversions as f64 * cyc / 1e6,
        dac_uj: params.dac_mw * workload.dac_conversions as f64 * cyc / 1e6,
        sample_hold_uj: params.sh_mw * workload.sh_operations as f64 * cyc / 1e6,
        memory_uj: params.edram_mw * workload.edram_accesses as f64 * cyc / 1e6,
    };
    let latency = LatencyBreakdown {
        write_ns: trace.write_time_ns,
        compute_ns: active_ns,
    };
    CostReport {
        total_energy_uj: energy.total_uj(),
        total_latency_ns: latency.total_ns(),
        energy,
        latency,
    }
}

// ---------------------------------------------------------------------------
// Affine sweep fit
// ---------------------------------------------------------------------------

/// One row pair of the reuse-vs-no-reuse tile-size sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tile_n: f64,
    pub no_reuse: f64,
    pub reuse: f64,
}

/// a/N + b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineInInverse {
    pub a: f64,
    pub b: f64,
}

impl AffineInInverse {
    pub fn eval(&self, n: f64) -> f64 {
        self.a / n + self.b
    }
}

/// Write/residual decomposition fitted over a tile-size sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReuseSweepFit {
    pub reuse_factor: u32,
    /// Write component W(N): the part scaled down by the reuse factor.
    pub write: AffineInInverse,
    /// Residual D(N): compute/IO component common to both rows.
    pub residual: AffineInInverse,
    /// (tile_n, no_reuse residual, reuse residual) at the input points.
    pub residuals: Vec<(f64, f64, f64)>,
}

impl ReuseSweepFit {
    pub fn predict_no_reuse(&self, n: f64) -> f64 {
        self.write.eval(n) + self.residual.eval(n)
    }

    pub fn predict_reuse(&self, n: f64) -> f64 {
        self.write.eval(n) / self.reuse_factor as f64 + self.residual.eval(n)
    }
}

/// Decomposes each sweep row pair into a write component
/// W(N) = T/(T-1) * (no_reuse - reuse) and residual D(N) = no_reuse - W(N),
/// then fits W and D as a/N + b by exact two-point solve on the first two
/// points. Residuals are reported at every input point.
pub fn fit_reuse_sweep(points: &[SweepPoint], reuse_factor: u32) -> Result<ReuseSweepFit> {
    if points.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 sweep points, got {}",
            points.len()
        )));
    }
    if reuse_factor < 2 {
        return Err(Error::Fit("reuse factor must be at least 2".into()));
    }
    let t = reuse_factor as f64;
    let split = |p: &SweepPoint| {
        let w = t / (t - 1.0) * (p.no_reuse - p.reuse);
        (w, p.no_reuse - w)
    };
    let (w0, d0) = split(&points[0]);
    let (w1, d1) = split(&points[1]);
    let (n0, n1) = (points[0].tile_n, points[1].tile_n);
    if n0 <= 0.0 || n1 <= 0.0 || n0 == n1 {
        return Err(Error::Fit(format!("degenerate tile sizes {n0}, {n1}")));
    }
    let solve = |y0: f64, y1: f64| {
        let a = (y0 - y1) / (1.0 / n0 - 1.0 / n1);
        AffineInInverse { a, b: y0 - a / n0 }
    };
    let fit = ReuseSweepFit {
        reuse_factor,
        write: solve(w0, w1),
        residual: solve(d0, d1),
        residuals: Vec::new(),
    };
    let residuals = points
        .iter()
        .map(|p| {
            (
                p.tile_n,
                fit.predict_no_reuse(p.tile_n) - p.no_reuse,
                fit.predict_reuse(p.tile_n) - p.reuse,
            )
        })
        .collect();
    Ok(ReuseSweepFit { residuals, ..fit })
}

/// Published delay reference for the reuse-vs-no-reuse scenario: 8 matrices
/// of 256x256 with one basic matrix reused 8 times, swept over photonic tile
/// sizes. Delay in ns.
pub const REFERENCE_SWEEP_DELAY_NS: [SweepPoint; 3] = [
    SweepPoint {
        tile_n: 64.0,
        no_reuse: 217_190.0,
        reuse: 77_490.0,
    },
    SweepPoint {
        tile_n: 256.0,
        no_reuse: 54_297.0,
        reuse: 20_197.0,
    },
    SweepPoint {
        tile_n: 1024.0,
        no_reuse: 13_574.0,
        reuse: 5_874.0,
    },
];

/// Published energy reference for the same scenario, in microjoules.
pub const REFERENCE_SWEEP_ENERGY_UJ: [SweepPoint; 3] = [
    SweepPoint {
        tile_n: 64.0,
        no_reuse: 35.70,
        reuse: 12.50,
    },
    SweepPoint {
        tile_n: 256.0,
        no_reuse: 9.68,
        reuse: 3.35,
    },
    SweepPoint {
        tile_n: 1024.0,
        no_reuse: 3.17,
        reuse: 1.06,
    },
];

/// Reuse factor of the reference scenario.
pub const REFERENCE_SWEEP_REUSE_FACTOR: u32 = 8;

// ---------------------------------------------------------------------------
// Area accounting
// ---------------------------------------------------------------------------

/// Area by component for one accelerator design, all in mm^2.
///
/// `mrr_mm2` covers the weight-tile rings only; the offset rows are reported
/// separately so tile-level figures stay comparable across matrix widths.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct AreaBreakdown {
    pub mrr_mm2: f64,
    pub offset_mrr_mm2: f64,
    pub adc_mm2: f64,
    pub dac_mm2: f64,
    pub sample_hold_mm2: f64,
    pub edram_mm2: f64,
    pub bus_mm2: f64,
}

impl AreaBreakdown {
    pub fn total_mm2(&self) -> f64 {
        self.mrr_mm2
            + self.offset_mrr_mm2
            + self.adc_mm2
            + self.dac_mm2
            + self.sample_hold_mm2
            + self.edram_mm2
            + self.bus_mm2
    }
}

/// Resident footprint of one distinct matrix: its tile grid and offset row.
#[derive(Debug, Clone, Copy)]
pub struct ResidentMatrix {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub cols: usize,
}

/// Area of the resident design: every distinct basic matrix holds its own
/// tiles, so a group shared T times contributes one member's footprint.
/// Per-lane ADC/DAC/S&H scale with the tile count; eDRAM and bus are fixed.
pub fn area_report(
    distinct: &[ResidentMatrix],
    cfg: &crate::tile::TileConfig,
    params: &ComponentParams,
) -> AreaBreakdown {
    let mut tiles = 0usize;
    let mut offset_cells = 0usize;
    for m in distinct {
        tiles += m.grid_rows * m.grid_cols;
        offset_cells += crate::tile::offset_row_cost(m.cols);
    }
    let cells = tiles * cfg.rows * cfg.cols;
    AreaBreakdown {
        mrr_mm2: cells as f64 * params.mrr_cell_area_mm2,
        offset_mrr_mm2: offset_cells as f64 * params.mrr_cell_area_mm2,
        adc_mm2: (tiles * cfg.rows) as f64 * params.adc_area_mm2,
        dac_mm2: (tiles * cfg.cols) as f64 * params.dac_area_mm2,
        sample_hold_mm2: (tiles * cfg.rows) as f64 * params.sh_area_mm2,
        edram_mm2: params.edram_area_mm2,
        bus_mm2: params.bus_area_mm2,
    }
}

// ---------------------------------------------------------------------------
// Aging proxy
// ---------------------------------------------------------------------------

/// Write-count distribution over physical cells: the wear proxy.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AgingReport {
    /// writes-per-cell -> number of cells.
    pub histogram: BTreeMap<u32, u64>,
    pub max_writes: u32,
    pub mean_writes: f64,
    pub cells_touched: u64,
}

/// Histogram of per-cell write counts over a trace.
pub fn aging_proxy(trace: &WriteTrace) -> AgingReport {
    let mut per_cell: BTreeMap<(u32, u32, u32), u32> = BTreeMap::new();
    for e in &trace.events {
        *per_cell.entry((e.tile_id, e.row, e.col)).or_insert(0) += 1;
    }
    let mut histogram = BTreeMap::new();
    let mut max_writes = 0u32;
    let mut total = 0u64;
    for &count in per_cell.values() {
        *histogram.entry(count).or_insert(0) += 1;
        max_writes = max_writes.max(count);
        total += count as u64;
    }
    let cells = per_cell.len() as u64;
    AgingReport {
        histogram,
        max_writes,
        mean_writes: if cells == 0 {
            0.0
        } else {
            total as f64 / cells as f64
        },
        cells_touched: cells,
    }
}
