//! Report schema and comparison logic.

use serde::{Deserialize, Serialize};

use rnb_core::cost::{AreaBreakdown, CostReport};
use rnb_core::netgraph::LayerDeviation;
use rnb_core::prm::ProgrammingStats;
use rnb_core::{Error, Result};

pub const SCHEMA: &str = "rnb-report/1";

/// Scenario echo: everything needed to reproduce the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub net: String,
    pub weights: String,
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub dwdm_capacity: usize,
    pub c_loop: u32,
    pub reuse: bool,
    pub seed: u64,
    pub batch: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params_file: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceSummary {
    /// Worst per-layer deviation of the photonic engine from the float
    /// reference, in output-referred ADC steps.
    pub max_steps: f64,
    pub max_abs: f64,
    pub layers: Vec<LayerDeviation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix_s: Option<u64>,
    pub scenario: ScenarioEcho,
    pub programming: ProgrammingStats,
    pub cost: CostReport,
    pub area: AreaBreakdown,
    pub total_area_mm2: f64,
    pub equivalence: EquivalenceSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

impl Report {
    pub fn check_schema(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::InvalidInput(format!(
                "report schema {} is not {SCHEMA}",
                self.schema
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryDelta {
    pub category: String,
    pub baseline: f64,
    pub scenario: f64,
    pub delta: f64,
    pub savings_pct: f64,
}

/// Per-axis savings of a scenario against a baseline report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavingsSummary {
    pub baseline: String,
    pub scenario: String,
    pub energy_savings_pct: f64,
    pub delay_savings_pct: f64,
    pub write_ratio: f64,
    pub categories: Vec<CategoryDelta>,
}

fn savings_pct(baseline: f64, scenario: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        (1.0 - scenario / baseline) * 100.0
    }
}

/// Savings of `scenario` relative to `baseline`, per axis and per category.
pub fn compare(baseline: &Report, scenario: &Report) -> Result<SavingsSummary> {
    baseline.check_schema()?;
    scenario.check_schema()?;
    let mut categories = Vec::new();
    for ((name, b), (_, s)) in baseline
        .cost
        .energy
        .categories()
        .iter()
        .zip(scenario.cost.energy.categories().iter())
    {
        categories.push(CategoryDelta {
            category: name.to_string(),
            baseline: *b,
            scenario: *s,
            delta: s - b,
            savings_pct: savings_pct(*b, *s),
        });
    }
    categories.push(CategoryDelta {
        category: "latency_ns".into(),
        baseline: baseline.cost.total_latency_ns,
        scenario: scenario.cost.total_latency_ns,
        delta: scenario.cost.total_latency_ns - baseline.cost.total_latency_ns,
        savings_pct: savings_pct(
            baseline.cost.total_latency_ns,
            scenario.cost.total_latency_ns,
        ),
    });
    let write_ratio = if scenario.programming.element_writes == 0 {
        0.0
    } else {
        baseline.programming.element_writes as f64 / scenario.programming.element_writes as f64
    };
    Ok(SavingsSummary {
        baseline: baseline.scenario.net.clone(),
        scenario: scenario.scenario.net.clone(),
        energy_savings_pct: savings_pct(
            baseline.cost.total_energy_uj,
            scenario.cost.total_energy_uj,
        ),
        delay_savings_pct: savings_pct(
            baseline.cost.total_latency_ns,
            scenario.cost.total_latency_ns,
        ),
        write_ratio,
        categories,
    })
}

/// Plot-ready CSV: `category,baseline,scenario,delta`.
pub fn comparison_csv(summary: &SavingsSummary) -> String {
    let mut out = String::from("category,baseline,scenario,delta\n");
    for c in &summary.categories {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.category, c.baseline, c.scenario, c.delta
        ));
    }
    out
}

/// Long-form CSV of one report: `category,value`.
pub fn report_csv(report: &Report) -> String {
    let mut out = String::from("category,value\n");
    for (name, v) in report.cost.energy.categories() {
        out.push_str(&format!("energy_{name}_uj,{v}\n"));
    }
    out.push_str(&format!(
        "energy_total_uj,{}\n",
        report.cost.total_energy_uj
    ));
    out.push_str(&format!(
        "latency_write_ns,{}\n",
        report.cost.latency.write_ns
    ));
    out.push_str(&format!(
        "latency_compute_ns,{}\n",
        report.cost.latency.compute_ns
    ));
    out.push_str(&format!(
        "latency_total_ns,{}\n",
        report.cost.total_latency_ns
    ));
    out.push_str(&format!("area_mrr_mm2,{}\n", report.area.mrr_mm2));
    out.push_str(&format!("area_total_mm2,{}\n", report.total_area_mm2));
    out.push_str(&format!(
        "element_writes,{}\n",
        report.programming.element_writes
    ));
    out.push_str(&format!(
        "offset_writes,{}\n",
        report.programming.offset_writes
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rnb_core::cost::{EnergyBreakdown, LatencyBreakdown};

    pub fn synthetic_report(total_energy_uj: f64, latency_ns: f64, writes: u64) -> Report {
        let energy = EnergyBreakdown {
            programming_uj: total_energy_uj,
            ..Default::default()
        };
        Report {
            schema: SCHEMA.into(),
            generated_unix_s: None,
            scenario: ScenarioEcho {
                net: "synthetic".into(),
                weights: "none".into(),
                tile_rows: 8,
                tile_cols: 8,
                dwdm_capacity: 16,
                c_loop: 100,
                reuse: true,
                seed: 1,
                batch: 1,
                params_file: None,
            },
            programming: rnb_core::prm::ProgrammingStats {
                element_writes: writes,
                offset_writes: 0,
                tile_programs: 0,
                calibration_iterations: 0,
                normalized_programming_times: 0,
            },
            cost: CostReport {
                total_energy_uj: energy.total_uj(),
                total_latency_ns: latency_ns,
                energy,
                latency: LatencyBreakdown {
                    write_ns: latency_ns,
                    compute_ns: 0.0,
                },
            },
            area: AreaBreakdown::default(),
            total_area_mm2: 0.0,
            equivalence: EquivalenceSummary {
                max_steps: 0.0,
                max_abs: 0.0,
                layers: vec![],
            },
            accuracy: None,
        }
    }

    #[test]
    fn identical_reports_compare_to_zero() {
        let r = synthetic_report(12.0, 340.0, 64);
        let s = compare(&r, &r).unwrap();
        assert_eq!(s.energy_savings_pct, 0.0);
        assert_eq!(s.delay_savings_pct, 0.0);
        assert!(s
            .categories
            .iter()
            .all(|c| c.delta == 0.0 && c.savings_pct == 0.0));
    }

    #[test]
    fn reference_pair_savings() {
        let baseline = synthetic_report(35.70, 217_190.0, 524_288);
        let scenario = synthetic_report(12.50, 77_490.0, 65_536);
        let s = compare(&baseline, &scenario).unwrap();
        assert!(
            (s.energy_savings_pct - 65.0).abs() < 0.1,
            "{}",
            s.energy_savings_pct
        );
        assert!(
            (s.delay_savings_pct - 64.3).abs() < 0.1,
            "{}",
            s.delay_savings_pct
        );
        assert!((s.write_ratio - 8.0).abs() < 1e-12);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let good = synthetic_report(1.0, 1.0, 1);
        let mut bad = good.clone();
        bad.schema = "rnb-report/0".into();
        assert!(compare(&good, &bad).is_err());
    }
}
