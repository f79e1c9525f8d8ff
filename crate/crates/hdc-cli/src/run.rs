//! Command implementations and report rendering.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use hdc::cost::{
    asymptotic_saving, datapath_activity, estimate_power, plan_architecture, CostReport,
    DatapathActivity, HardwareConfig, PowerCalibration,
};
use hdc::dataset::{gen_synthetic, load_csv, write_csv, Dataset, LabelColumn};
use hdc::encoders::EncoderKind;
use hdc::hv::{stream_rng, IdTable, LevelTable, SeedStream};
use hdc::persist::{load_model, save_model};
use hdc::trainer::{evaluate, train as train_model, EvalReport, TrainParams};

use crate::{EstimateArgs, EvalArgs, Format, GenDataArgs, SweepArgs, TrainArgs};

fn read_dataset(path: &Path, label: &LabelColumn, no_header: bool) -> Result<Dataset> {
    load_csv(path, label, !no_header)
        .with_context(|| format!("loading dataset {}", path.display()))
}

fn read_hardware(path: &Path) -> Result<HardwareConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading hardware config {}", path.display()))?;
    HardwareConfig::parse(&text)
        .with_context(|| format!("parsing hardware config {}", path.display()))
}

fn read_calibration(path: &Path) -> Result<PowerCalibration> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading power calibration {}", path.display()))?;
    PowerCalibration::parse(&text)
        .with_context(|| format!("parsing power calibration {}", path.display()))
}

/// Measure datapath activity over the first `limit` samples.
fn measure_activity(
    features: &[Vec<f64>],
    model_quantize: impl Fn(&[f64]) -> Result<Vec<usize>>,
    levels: &LevelTable,
    ids: &IdTable,
    hw: &HardwareConfig,
    report: &CostReport,
    limit: usize,
) -> Result<DatapathActivity> {
    if hw.port_width_bits != 64 {
        bail!("activity estimation assumes 64-bit level words (port_width_bits = 64)");
    }
    let take = limit.max(1).min(features.len());
    let quantized = features[..take]
        .iter()
        .map(|row| model_quantize(row))
        .collect::<Result<Vec<_>>>()?;
    Ok(datapath_activity(
        &quantized,
        levels,
        ids,
        report.features_per_cycle,
    )?)
}

#[derive(Serialize)]
struct CostJson {
    encoder: String,
    lut_per_dimension_tree: u64,
    total_luts: u64,
    parallel_trees: u64,
    lut_utilization: f64,
    bram_group_size: u64,
    feature_groups: u64,
    level_brams: u64,
    features_per_cycle: u64,
    id_brams: u64,
    id_memory_width_bits: u64,
    cycles_per_sample: u64,
    throughput_samples_per_sec: f64,
    estimated_power_watts: Option<f64>,
    adder_input_activity: Option<f64>,
    bram_read_activity: Option<f64>,
}

impl CostJson {
    fn new(report: &CostReport, hw: &HardwareConfig, activity: Option<&DatapathActivity>) -> Self {
        Self {
            encoder: report.encoder.to_string(),
            lut_per_dimension_tree: report.lut_per_dimension_tree,
            total_luts: report.total_luts,
            parallel_trees: report.parallel_trees,
            lut_utilization: report.total_luts as f64 / hw.lut_budget as f64,
            bram_group_size: report.bram_group_size,
            feature_groups: report.feature_groups,
            level_brams: report.level_brams,
            features_per_cycle: report.features_per_cycle,
            id_brams: report.id_brams,
            id_memory_width_bits: report.id_memory_width_bits,
            cycles_per_sample: report.cycles_per_sample,
            throughput_samples_per_sec: report.throughput_samples_per_sec,
            estimated_power_watts: report.estimated_power_watts,
            adder_input_activity: activity.map(|a| a.adder_inputs),
            bram_read_activity: activity.map(|a| a.bram_reads),
        }
    }
}

fn render_cost_text(c: &CostJson) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "resource estimate ({}):", c.encoder);
    let _ = writeln!(s, "  bram group size: {}", c.bram_group_size);
    let _ = writeln!(
        s,
        "  feature groups: {} (level BRAMs: {})",
        c.feature_groups, c.level_brams
    );
    let _ = writeln!(s, "  features per cycle: {}", c.features_per_cycle);
    let _ = writeln!(
        s,
        "  id BRAMs: {} (data width {} bits)",
        c.id_brams, c.id_memory_width_bits
    );
    let _ = writeln!(
        s,
        "  LUTs per tree: {}; parallel trees: {}; total LUTs: {} ({:.1}% of budget)",
        c.lut_per_dimension_tree,
        c.parallel_trees,
        c.total_luts,
        100.0 * c.lut_utilization
    );
    let _ = writeln!(s, "  cycles per sample: {}", c.cycles_per_sample);
    let _ = writeln!(
        s,
        "  throughput: {:.1} samples/s",
        c.throughput_samples_per_sec
    );
    match (c.estimated_power_watts, c.adder_input_activity) {
        (Some(w), Some(a)) => {
            let _ = writeln!(
                s,
                "  estimated power: {:.3} W (adder activity {:.3}, bram activity {:.3})",
                w,
                a,
                c.bram_read_activity.unwrap_or(f64::NAN)
            );
        }
        _ => {
            let _ = writeln!(s, "  estimated power: n/a (no calibration)");
        }
    }
    s
}

#[derive(Serialize)]
struct TrainJson {
    command: &'static str,
    data: String,
    encoder: String,
    d_hv: usize,
    levels: usize,
    epochs: usize,
    seed: u64,
    alpha: f64,
    alpha_searched: bool,
    alpha_probes: Vec<(f64, f64)>,
    epoch_errors: Vec<usize>,
    train_accuracy: f64,
    validation_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
    model_path: String,
    model_bytes: usize,
    cost: Option<CostJson>,
}

pub fn train(args: TrainArgs) -> Result<()> {
    let data = read_dataset(&args.data, &args.csv.label_col, args.csv.no_header)?;
    let params = TrainParams {
        d_hv: args.params.dhv,
        levels: args.params.levels,
        epochs: args.epochs,
        alpha: args.alpha,
        seed: args.params.seed,
        encoder: args.params.encoder,
        shuffle: args.shuffle,
    };
    let outcome = train_model(&data, &params).context("training failed")?;
    let model = &outcome.model;
    save_model(model, &args.out)
        .with_context(|| format!("writing model to {}", args.out.display()))?;
    let model_bytes = std::fs::metadata(&args.out)?.len() as usize;

    let test_accuracy = match &args.test {
        Some(path) => {
            let test_set = read_dataset(path, &args.csv.label_col, args.csv.no_header)?;
            Some(evaluate(model, &test_set).context("evaluating the test set")?.accuracy)
        }
        None => None,
    };

    let cost = match &args.hw {
        Some(hw_path) => {
            let hw = read_hardware(hw_path)?;
            let mut report = plan_architecture(
                data.feature_count(),
                params.d_hv,
                params.levels,
                &hw,
                params.encoder,
            )?;
            let activity = match &args.power_cal {
                Some(cal_path) => {
                    let cal = read_calibration(cal_path)?;
                    let act = measure_activity(
                        data.features(),
                        |row| Ok(model.quantizer.quantize(row)?),
                        &model.levels,
                        &model.ids,
                        &hw,
                        &report,
                        args.activity_samples,
                    )?;
                    report.estimated_power_watts = Some(estimate_power(&report, &act, &cal)?);
                    Some(act)
                }
                None => None,
            };
            Some(CostJson::new(&report, &hw, activity.as_ref()))
        }
        None => None,
    };

    let json = TrainJson {
        command: "train",
        data: args.data.display().to_string(),
        encoder: params.encoder.to_string(),
        d_hv: params.d_hv,
        levels: params.levels,
        epochs: params.epochs,
        seed: params.seed,
        alpha: model.alpha,
        alpha_searched: args.alpha.is_none(),
        alpha_probes: outcome.alpha_probes.clone(),
        epoch_errors: outcome.epoch_errors.clone(),
        train_accuracy: outcome.train_accuracy,
        validation_accuracy: outcome.validation_accuracy,
        test_accuracy,
        model_path: args.out.display().to_string(),
        model_bytes,
        cost,
    };

    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&json)?),
        Format::Text => {
            println!(
                "trained {} model: {} samples, {} classes, {} features",
                json.encoder,
                data.len(),
                model.class_count(),
                model.d_iv()
            );
            let errors: Vec<String> = json.epoch_errors.iter().map(|e| e.to_string()).collect();
            println!("epoch errors: {}", errors.join(" "));
            if json.alpha_searched {
                println!(
                    "alpha: {} (searched; validation accuracy {:.4})",
                    json.alpha,
                    json.validation_accuracy.unwrap_or(f64::NAN)
                );
            } else {
                println!("alpha: {} (given)", json.alpha);
            }
            println!("train accuracy: {:.4}", json.train_accuracy);
            if let Some(acc) = json.test_accuracy {
                println!("test accuracy: {:.4}", acc);
            }
            println!("model: {} ({} bytes)", json.model_path, json.model_bytes);
            if let Some(cost) = &json.cost {
                print!("{}", render_cost_text(cost));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalJson {
    command: &'static str,
    model: String,
    data: String,
    samples: usize,
    correct: usize,
    accuracy: f64,
    labels: Vec<String>,
    confusion: Vec<Vec<usize>>,
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let data = read_dataset(&args.data, &args.csv.label_col, args.csv.no_header)?;
    let report: EvalReport = evaluate(&model, &data).context("evaluation failed")?;
    let json = EvalJson {
        command: "eval",
        model: args.model.display().to_string(),
        data: args.data.display().to_string(),
        samples: report.total,
        correct: report.correct,
        accuracy: report.accuracy,
        labels: model.labels.clone(),
        confusion: report.confusion.clone(),
    };
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&json)?),
        Format::Text => {
            println!(
                "accuracy: {:.4} ({}/{})",
                json.accuracy, json.correct, json.samples
            );
            println!("confusion (rows = truth, columns = predicted):");
            println!("label\t{}", json.labels.join("\t"));
            for (label, row) in json.labels.iter().zip(&json.confusion) {
                let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                println!("{label}\t{}", cells.join("\t"));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateJson {
    command: &'static str,
    d_iv: usize,
    d_hv: usize,
    levels: usize,
    seed: u64,
    hardware: HardwareJson,
    cost: CostJson,
}

#[derive(Serialize)]
struct HardwareJson {
    total_brams: u64,
    bram_capacity_bits: u64,
    port_width_bits: u64,
    ports_per_bram: u64,
    lut_budget: u64,
    clock_hz: f64,
}

pub fn estimate(args: EstimateArgs) -> Result<()> {
    let hw = read_hardware(&args.hw)?;
    let data = match &args.width.data {
        Some(path) => Some(read_dataset(path, &args.csv.label_col, args.csv.no_header)?),
        None => None,
    };
    let d_iv = match (args.width.div, &data) {
        (Some(d), _) => d,
        (None, Some(ds)) => ds.feature_count(),
        (None, None) => unreachable!("clap enforces the group"),
    };
    let mut report = plan_architecture(
        d_iv,
        args.params.dhv,
        args.params.levels,
        &hw,
        args.params.encoder,
    )?;

    let activity = match &args.power_cal {
        Some(cal_path) => {
            let Some(ds) = &data else {
                bail!("--power-cal needs --data to measure signal activity");
            };
            let cal = read_calibration(cal_path)?;
            let quantizer = hdc::dataset::Quantizer::fit(ds.features(), args.params.levels)?;
            let levels = LevelTable::generate(
                args.params.dhv,
                args.params.levels,
                &mut stream_rng(args.params.seed, SeedStream::Levels),
            )?;
            let ids = IdTable::generate(
                args.params.dhv,
                d_iv,
                &mut stream_rng(args.params.seed, SeedStream::Ids),
            )?;
            let act = measure_activity(
                ds.features(),
                |row| Ok(quantizer.quantize(row)?),
                &levels,
                &ids,
                &hw,
                &report,
                args.activity_samples,
            )?;
            report.estimated_power_watts = Some(estimate_power(&report, &act, &cal)?);
            Some(act)
        }
        None => None,
    };

    let json = EstimateJson {
        command: "estimate",
        d_iv,
        d_hv: args.params.dhv,
        levels: args.params.levels,
        seed: args.params.seed,
        hardware: HardwareJson {
            total_brams: hw.total_brams,
            bram_capacity_bits: hw.bram_capacity_bits,
            port_width_bits: hw.port_width_bits,
            ports_per_bram: hw.ports_per_bram,
            lut_budget: hw.lut_budget,
            clock_hz: hw.clock_hz,
        },
        cost: CostJson::new(&report, &hw, activity.as_ref()),
    };
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&json)?),
        Format::Text => {
            println!(
                "estimate for {} features, d_hv {}, {} levels:",
                json.d_iv, json.d_hv, json.levels
            );
            print!("{}", render_cost_text(&json.cost));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    encoder: String,
    accuracy: f64,
    delta_vs_exact: Option<f64>,
    alpha: f64,
    lut_per_tree: Option<u64>,
    lut_saving: f64,
    cycles_per_sample: Option<u64>,
    power_watts: Option<f64>,
}

#[derive(Serialize)]
struct SweepJson {
    command: &'static str,
    data: String,
    test: String,
    d_hv: usize,
    levels: usize,
    epochs: usize,
    seed: u64,
    rows: Vec<SweepRow>,
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    if args.encoders.is_empty() {
        bail!("--encoders list is empty");
    }
    let data = read_dataset(&args.data, &args.csv.label_col, args.csv.no_header)?;
    let test_set = read_dataset(&args.test, &args.csv.label_col, args.csv.no_header)?;
    let hw = match &args.hw {
        Some(path) => Some(read_hardware(path)?),
        None => None,
    };
    let cal = match &args.power_cal {
        Some(path) => Some(read_calibration(path)?),
        None => None,
    };

    let mut rows = Vec::with_capacity(args.encoders.len());
    for &kind in &args.encoders {
        let params = TrainParams {
            d_hv: args.dhv,
            levels: args.levels,
            epochs: args.epochs,
            alpha: args.alpha,
            seed: args.seed,
            encoder: kind,
            shuffle: false,
        };
        let outcome = train_model(&data, &params)
            .with_context(|| format!("training the {kind} encoder"))?;
        let accuracy = evaluate(&outcome.model, &test_set)
            .with_context(|| format!("evaluating the {kind} encoder"))?
            .accuracy;

        let (lut_per_tree, cycles, power) = match &hw {
            Some(hw) => {
                let mut report =
                    plan_architecture(data.feature_count(), args.dhv, args.levels, hw, kind)?;
                let power = match &cal {
                    Some(cal) => {
                        let act = measure_activity(
                            data.features(),
                            |row| Ok(outcome.model.quantizer.quantize(row)?),
                            &outcome.model.levels,
                            &outcome.model.ids,
                            hw,
                            &report,
                            args.activity_samples,
                        )?;
                        report.estimated_power_watts =
                            Some(estimate_power(&report, &act, cal)?);
                        report.estimated_power_watts
                    }
                    None => None,
                };
                (
                    Some(report.lut_per_dimension_tree),
                    Some(report.cycles_per_sample),
                    power,
                )
            }
            None => (None, None, None),
        };

        rows.push(SweepRow {
            encoder: kind.to_string(),
            accuracy,
            delta_vs_exact: None,
            alpha: outcome.model.alpha,
            lut_per_tree,
            lut_saving: asymptotic_saving(kind),
            cycles_per_sample: cycles,
            power_watts: power,
        });
    }
    let exact_accuracy = args
        .encoders
        .iter()
        .position(|&k| k == EncoderKind::Exact)
        .map(|i| rows[i].accuracy);
    if let Some(base) = exact_accuracy {
        for row in &mut rows {
            row.delta_vs_exact = Some(row.accuracy - base);
        }
    }

    let json = SweepJson {
        command: "sweep",
        data: args.data.display().to_string(),
        test: args.test.display().to_string(),
        d_hv: args.dhv,
        levels: args.levels,
        epochs: args.epochs,
        seed: args.seed,
        rows,
    };
    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&json)? + "\n",
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "encoder\taccuracy\tdelta_vs_exact\talpha\tluts_per_tree\tlut_saving\tcycles\tpower_w"
            );
            for row in &json.rows {
                let delta = row
                    .delta_vs_exact
                    .map(|d| format!("{d:+.4}"))
                    .unwrap_or_else(|| "-".into());
                let luts = row
                    .lut_per_tree
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "-".into());
                let cycles = row
                    .cycles_per_sample
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "-".into());
                let power = row
                    .power_watts
                    .map(|v| format!("{v:.3}"))
                    .unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{}\t{:.4}\t{}\t{}\t{}\t{:.1}%\t{}\t{}",
                    row.encoder,
                    row.accuracy,
                    delta,
                    row.alpha,
                    luts,
                    100.0 * row.lut_saving,
                    cycles,
                    power
                );
            }
            s
        }
    };
    print!("{rendered}");
    if let Some(out) = &args.out {
        std::fs::write(out, rendered.as_bytes())
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

pub fn gen_data(args: GenDataArgs) -> Result<()> {
    let mut rng = stream_rng(args.seed, SeedStream::Synthetic);
    let dataset = gen_synthetic(
        args.classes,
        args.per_class,
        args.div,
        args.separation,
        &mut rng,
    )
    .context("generating synthetic data")?;
    write_csv(&dataset, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} samples ({} classes x {}, {} features, separation {}) to {}",
        dataset.len(),
        args.classes,
        args.per_class,
        args.div,
        args.separation,
        args.out.display()
    );
    Ok(())
}
