//! Command-line front end: scenario simulation, analytic architecture
//! comparison, report diffing, toy training and plot-data emission.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rnb_core::cost::{
    analytic_cost, area_report, simulate_cost, ArchFormulaInputs, Architecture, ComponentParams,
    ResidentMatrix,
};
use rnb_core::netgraph::{
    blobs, compile, forward_photonic, parse_netdesc, read_idx_images, read_idx_labels, CompiledNet,
    Dataset, Layer, Loss, NetworkDesc, PhotonicSession, TrainConfig,
};
use rnb_core::numerics::{read_weights_file, write_weights_file, Tensor, WeightStore};
use rnb_core::prm::ProgrammingStats;
use rnb_core::rng::SplitMix64;
use rnb_core::tile::{CalibrationCurve, TileConfig};
use rnb_core::{Error, Result};

use rnb_cli::report::{
    compare, comparison_csv, report_csv, EquivalenceSummary, Report, ScenarioEcho, SCHEMA,
};

#[derive(Parser)]
#[command(
    name = "rnb",
    version,
    about = "Reuse-and-blend photonic accelerator simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every stochastic choice (inputs, init, shuffles).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// JSON file with component-parameter overrides.
    #[arg(long, global = true)]
    params: Option<PathBuf>,

    /// Output directory for reports, traces and weights.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Omit the timestamp field so reports are byte-reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the program -> infer -> account pipeline for one scenario.
    Simulate(SimulateArgs),
    /// Print the analytic four-architecture cost comparison.
    Cost(CostArgs),
    /// Compare two reports and emit savings percentages.
    Compare(CompareArgs),
    /// Train a toy network and write RNBW weights plus metrics.
    TrainToy(TrainArgs),
    /// Convert a report to long-form plot CSV.
    EmitPlotData(PlotArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct SimulateArgs {
    /// Network description (JSON).
    #[arg(long)]
    net: PathBuf,
    /// RNBW weights container.
    #[arg(long)]
    weights: PathBuf,
    /// Tile geometry ROWSxCOLS.
    #[arg(long, default_value = "8x8")]
    tile: String,
    /// Calibration loop length C per element write.
    #[arg(long, default_value_t = 100)]
    c_loop: u32,
    /// DWDM capacity B.
    #[arg(long, default_value_t = 16)]
    dwdm: usize,
    /// Honor or strip the reuse annotations (the chip stays sized by the
    /// annotated design either way).
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    reuse: Toggle,
    /// Batch of seeded random inputs driven through the photonic engine.
    #[arg(long, default_value_t = 8)]
    batch: usize,
    /// Spatial input size HxW, required when the first layer is a conv.
    #[arg(long)]
    input_hw: Option<String>,
    /// Report file name inside --out.
    #[arg(long, default_value = "report.json")]
    report: String,
    /// Trace CSV file name inside --out.
    #[arg(long, default_value = "trace.csv")]
    trace: String,
}

#[derive(Args)]
struct CostArgs {
    /// Architecture to evaluate.
    #[arg(long, value_enum, conflicts_with = "all")]
    arch: Option<ArchArg>,
    /// Evaluate all four architectures.
    #[arg(long)]
    all: bool,
    #[arg(short = 'M', long, default_value_t = 8)]
    m: u64,
    #[arg(short = 'N', long, default_value_t = 256)]
    n: u64,
    #[arg(short = 'K', long, default_value_t = 1)]
    k: u64,
    #[arg(short = 'C', long, default_value_t = 100)]
    c: u64,
    #[arg(short = 'B', long, default_value_t = 16)]
    b: u64,
    #[arg(long, default_value_t = 24)]
    beta_a: u64,
    #[arg(long, default_value_t = 12)]
    beta_p: u64,
    #[arg(long, default_value_t = 1.0)]
    beta_t: f64,
    /// Also write the rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Mzi,
    Crosslight,
    Holylight,
    Rnb,
}

impl From<ArchArg> for Architecture {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Mzi => Architecture::MziOnn,
            ArchArg::Crosslight => Architecture::CrossLight,
            ArchArg::Holylight => Architecture::HolyLight,
            ArchArg::Rnb => Architecture::RnB,
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Baseline report.
    report_a: PathBuf,
    /// Scenario report.
    report_b: PathBuf,
    /// Plot-ready CSV output path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Network description (JSON).
    #[arg(long)]
    net: PathBuf,
    /// Dataset kind.
    #[arg(long, value_enum, default_value_t = DatasetArg::Blobs)]
    dataset: DatasetArg,
    /// Sample count for the synthetic dataset.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// IDX image file (dataset = idx).
    #[arg(long)]
    idx_images: Option<PathBuf>,
    /// IDX label file (dataset = idx).
    #[arg(long)]
    idx_labels: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 0.01)]
    weight_decay: f64,
    #[arg(long, value_enum, default_value_t = LossArg::CrossEntropy)]
    loss: LossArg,
    /// Weights file name inside --out.
    #[arg(long, default_value = "weights.rnbw")]
    weights: String,
    /// Metrics CSV file name inside --out.
    #[arg(long, default_value = "metrics.csv")]
    metrics: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Blobs,
    Idx,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Quadratic,
    CrossEntropy,
}

#[derive(Args)]
struct PlotArgs {
    /// Report to convert.
    report: PathBuf,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Simulate(args) => run_simulate(&cli, args),
        Command::Cost(args) => run_cost(args),
        Command::Compare(args) => run_compare(args),
        Command::TrainToy(args) => run_train(&cli, args),
        Command::EmitPlotData(args) => run_plot(args),
    }
}

fn load_params(path: &Option<PathBuf>) -> Result<ComponentParams> {
    match path {
        None => Ok(ComponentParams::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() == 2 {
        if let (Ok(a), Ok(b)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
            if a >= 1 && b >= 1 {
                return Ok((a, b));
            }
        }
    }
    Err(Error::InvalidInput(format!(
        "{what} must look like 8x8, got {s:?}"
    )))
}

fn timestamp(cli: &Cli) -> Option<u64> {
    if cli.no_timestamp {
        None
    } else {
        Some(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        )
    }
}

fn load_net(path: &Path) -> Result<NetworkDesc> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("net not found: {} ({e})", path.display())))?;
    parse_netdesc(&text)
}

/// Seeded batch of inputs in [0, 1] matching the network's first layer.
fn gen_inputs(
    desc: &NetworkDesc,
    batch: usize,
    seed: u64,
    input_hw: &Option<String>,
) -> Result<Vec<Tensor>> {
    let first = desc
        .weighted_positions()
        .first()
        .and_then(|p| desc.layer(*p).cloned())
        .ok_or_else(|| Error::Schema {
            path: "blocks".into(),
            message: "no weighted layers".into(),
        })?;
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(batch);
    for _ in 0..batch {
        let t = match first {
            Layer::Dense { in_dim, .. } => {
                Tensor::new(vec![in_dim], (0..in_dim).map(|_| rng.next_f64()).collect())?
            }
            Layer::Conv2d { cin, .. } => {
                let (h, w) = match input_hw {
                    Some(s) => parse_pair(s, "--input-hw")?,
                    None => {
                        return Err(Error::InvalidInput(
                            "--input-hw HxW is required for convolutional networks".into(),
                        ))
                    }
                };
                Tensor::new(
                    vec![cin, h, w],
                    (0..cin * h * w).map(|_| rng.next_f64()).collect(),
                )?
            }
            _ => unreachable!("weighted layer"),
        };
        out.push(t);
    }
    Ok(out)
}

/// Analytic-formula inputs derived from a compiled scenario: K weighted uses
/// of (max) M x N matrices, the session's loop length and DWDM capacity.
fn scenario_arch_inputs(net: &CompiledNet, tile: &TileConfig, c_loop: u32) -> ArchFormulaInputs {
    let mut m = 1u64;
    let mut n = 1u64;
    for plan in net.plans.values() {
        m = m.max(plan.rows as u64);
        n = n.max(plan.cols as u64);
    }
    ArchFormulaInputs {
        m,
        n,
        k: net.schedule.bindings.len() as u64,
        c: c_loop as u64,
        b: tile.dwdm_capacity as u64,
        ..Default::default()
    }
}

fn run_simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    if !args.weights.exists() {
        return Err(Error::InvalidInput(format!(
            "weights not found: {}",
            args.weights.display()
        )));
    }
    let desc = load_net(&args.net)?;
    let store = read_weights_file(&args.weights)?;
    let params = load_params(&cli.params)?;
    let (rows, cols) = parse_pair(&args.tile, "--tile")?;
    let tile = TileConfig {
        rows,
        cols,
        dwdm_capacity: args.dwdm,
    };
    let curve = CalibrationCurve {
        c_loop: args.c_loop,
        ..Default::default()
    };

    // The annotated design sizes the chip; the executed schedule honors or
    // strips the reuse annotations.
    let annotated = compile(&desc, &store, &tile)?;
    let (exec_desc, exec_store) = if args.reuse == Toggle::Off {
        let mut stripped = desc.clone();
        stripped.reuse.clear();
        let mut per_position = WeightStore::new();
        for (pos, binding) in &annotated.schedule.bindings {
            per_position.insert(pos.key(), store[&binding.basic.key()].clone());
        }
        (stripped, per_position)
    } else {
        (desc.clone(), store.clone())
    };
    let exec = compile(&exec_desc, &exec_store, &tile)?;

    let mut session = PhotonicSession::new(tile, curve.clone(), params.clone());
    session.apply_design_budget(&annotated);

    let inputs = gen_inputs(&exec_desc, args.batch.max(1), cli.seed, &args.input_hw)?;
    let outcome = forward_photonic(&exec, &mut session, &inputs)?;

    let trace = session.trace();
    let arch_inputs = scenario_arch_inputs(&exec, &tile, curve.c_loop);
    let programming = ProgrammingStats::from_trace(trace, &arch_inputs)?;
    let cost = simulate_cost(trace, &outcome.workload, &params);
    // Resident-design area: every distinct matrix of the executed schedule
    // holds its own tiles.
    let footprints: Vec<ResidentMatrix> = exec
        .plans
        .values()
        .map(|p| ResidentMatrix {
            grid_rows: p.grid_rows,
            grid_cols: p.grid_cols,
            cols: p.cols,
        })
        .collect();
    let area = area_report(&footprints, &tile, &params);

    let max_steps = outcome
        .deviations
        .iter()
        .fold(0.0f64, |m, d| m.max(d.steps));
    let max_abs = outcome
        .deviations
        .iter()
        .fold(0.0f64, |m, d| m.max(d.max_abs));
    let report = Report {
        schema: SCHEMA.into(),
        generated_unix_s: timestamp(cli),
        scenario: ScenarioEcho {
            net: args.net.display().to_string(),
            weights: args.weights.display().to_string(),
            tile_rows: rows,
            tile_cols: cols,
            dwdm_capacity: args.dwdm,
            c_loop: args.c_loop,
            reuse: args.reuse == Toggle::On,
            seed: cli.seed,
            batch: args.batch,
            params_file: cli.params.as_ref().map(|p| p.display().to_string()),
        },
        programming,
        total_area_mm2: area.total_mm2(),
        area,
        cost,
        equivalence: EquivalenceSummary {
            max_steps,
            max_abs,
            layers: outcome.deviations.clone(),
        },
        accuracy: None,
    };

    let report_path = cli.out.join(&args.report);
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    let trace_path = cli.out.join(&args.trace);
    std::fs::write(&trace_path, trace.to_csv())?;
    println!(
        "simulate: {} element writes, {} offset writes, {:.3} uJ, {:.0} ns, max deviation {:.2} steps",
        report.programming.element_writes,
        report.programming.offset_writes,
        report.cost.total_energy_uj,
        report.cost.total_latency_ns,
        max_steps
    );
    println!("report: {}", report_path.display());
    println!("trace: {}", trace_path.display());
    Ok(())
}

fn run_cost(args: &CostArgs) -> Result<()> {
    let inputs = ArchFormulaInputs {
        m: args.m,
        n: args.n,
        k: args.k,
        c: args.c,
        b: args.b,
        beta_a: args.beta_a,
        beta_p: args.beta_p,
        beta_t: args.beta_t,
    };
    let archs: Vec<Architecture> = match args.arch {
        Some(arch) if !args.all => vec![arch.into()],
        _ => Architecture::ALL.to_vec(),
    };
    println!(
        "M={} N={} K={} C={} B={} beta_a={} beta_p={} beta_t={}",
        inputs.m,
        inputs.n,
        inputs.k,
        inputs.c,
        inputs.b,
        inputs.beta_a,
        inputs.beta_p,
        inputs.beta_t
    );
    println!(
        "{:<12} {:>16} {:>12} {:>14}",
        "arch", "programming", "latency", "power"
    );
    let mut csv = String::from("arch,programming_times,latency_units,power_units\n");
    for arch in archs {
        let cost = analytic_cost(arch, &inputs)?;
        println!(
            "{:<12} {:>16} {:>12} {:>14.3}",
            arch.label(),
            cost.programming_times,
            cost.latency_units,
            cost.power_units
        );
        csv.push_str(&format!(
            "{},{},{},{}\n",
            arch.label(),
            cost.programming_times,
            cost.latency_units,
            cost.power_units
        ));
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, csv)?;
    }
    Ok(())
}

fn load_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("report not found: {} ({e})", path.display())))?;
    let report: Report = serde_json::from_str(&text)?;
    report.check_schema()?;
    Ok(report)
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let baseline = load_report(&args.report_a)?;
    let scenario = load_report(&args.report_b)?;
    let summary = compare(&baseline, &scenario)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(path) = &args.csv {
        std::fs::write(path, comparison_csv(&summary))?;
    }
    Ok(())
}

fn run_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let desc = load_net(&args.net)?;
    let data = if args.epochs == 0 {
        // Zero epochs only emits the seeded initial weights; no data needed.
        Dataset {
            inputs: vec![],
            labels: vec![],
            n_classes: 0,
        }
    } else {
        match args.dataset {
            DatasetArg::Blobs => {
                let dim = desc
                    .weighted_positions()
                    .first()
                    .and_then(|p| desc.layer(*p))
                    .and_then(|l| match *l {
                        Layer::Dense { in_dim, .. } => Some(in_dim),
                        _ => None,
                    })
                    .ok_or_else(|| {
                        Error::InvalidInput("blob training needs a dense first layer".into())
                    })?;
                blobs(cli.seed, args.samples, dim)
            }
            DatasetArg::Idx => {
                let (images, labels) = match (&args.idx_images, &args.idx_labels) {
                    (Some(i), Some(l)) => (read_idx_images(i)?, read_idx_labels(l)?),
                    _ => {
                        return Err(Error::InvalidInput(
                            "--idx-images and --idx-labels are required for dataset=idx".into(),
                        ))
                    }
                };
                if images.len() != labels.len() {
                    return Err(Error::InvalidInput(format!(
                        "{} images vs {} labels",
                        images.len(),
                        labels.len()
                    )));
                }
                let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;
                // Dense toy nets take flat vectors.
                let inputs = images
                    .into_iter()
                    .map(|t| {
                        let n = t.numel();
                        t.reshaped(vec![n])
                    })
                    .collect::<Result<Vec<_>>>()?;
                Dataset {
                    inputs,
                    labels,
                    n_classes,
                }
            }
        }
    };
    let cfg = TrainConfig {
        lr: args.lr,
        weight_decay: args.weight_decay,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: cli.seed,
        loss: match args.loss {
            LossArg::Quadratic => Loss::Quadratic,
            LossArg::CrossEntropy => Loss::CrossEntropy,
        },
    };
    let (weights, metrics) = rnb_core::netgraph::toy_train(&desc, &data, &cfg)?;

    let weights_path = cli.out.join(&args.weights);
    write_weights_file(&weights_path, &weights)?;
    let mut csv = String::from("epoch,loss,accuracy,lr\n");
    for m in &metrics {
        csv.push_str(&format!("{},{},{},{}\n", m.epoch, m.loss, m.accuracy, m.lr));
    }
    let metrics_path = cli.out.join(&args.metrics);
    std::fs::write(&metrics_path, csv)?;
    match metrics.last() {
        Some(last) => println!(
            "train-toy: {} epochs, final loss {:.5}, accuracy {:.4}",
            metrics.len(),
            last.loss,
            last.accuracy
        ),
        None => println!("train-toy: 0 epochs, initial weights emitted"),
    }
    println!("weights: {}", weights_path.display());
    println!("metrics: {}", metrics_path.display());
    Ok(())
}

fn run_plot(args: &PlotArgs) -> Result<()> {
    let report = load_report(&args.report)?;
    let csv = report_csv(&report);
    match &args.csv {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
