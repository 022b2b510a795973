//! Implementations of the CLI commands. Each one computes everything it
//! needs first, then creates the run directory and writes `config-resolved`,
//! `results.csv`, and `summary` (plus any command-specific extras), so a
//! failed run leaves no partial output.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde_json::json;

use super::{McTarget, RunDir, ScenarioConfig, SplitChoice};
use crate::crossbar::{calibrate_scaling, encode_inputs, energy_report, simulate_mac};
use crate::error::{Error, Result};
use crate::netmap::ann::{load_iris_csv, train_ann_with, TrainedWeights};
use crate::netmap::{compile, evaluate, InferenceTrace, HARDWARE_STREAM};
use crate::oracle::{error_report, error_report_batch, fxp_mac, ideal_mac, FxpFormat};
use crate::variability::{
    cascade_variation_table, histogram, monte_carlo_samples, perturb_crossbar, perturb_pulses,
    sample_rng, Histogram,
};

/// Least-squares line fit returning the mean squared residual.
fn line_fit_mse(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    ys.iter()
        .zip(xs)
        .map(|(y, x)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n
}

pub fn vtc_sweep(cfg: &ScenarioConfig, steps: usize, dir: PathBuf) -> Result<()> {
    if steps < 2 {
        return Err(Error::input("steps", "a sweep needs at least two points"));
    }
    let vtc = &cfg.vtc;
    let [lo, hi] = vtc.v_in_range;
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let v = lo + (hi - lo) * k as f64 / (steps - 1) as f64;
        rows.push((v, vtc.delay(v)?, vtc.pulse_width(v, cfg.crossbar.clk_high)?));
    }
    let vs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let delays: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mse = line_fit_mse(&vs, &delays);
    let gain = vtc.conversion_gain();

    let run = RunDir::create(dir)?;
    run.write_config("vtc-sweep", json!({ "steps": steps }), cfg)?;
    let mut w = run.results_writer()?;
    w.write_record(["v_in", "delay_s", "pulse_width_s"])?;
    for (v, d, p) in &rows {
        w.serialize((v, d, p))?;
    }
    w.flush()?;
    run.write_summary(&[
        format!("points: {steps}"),
        format!("conversion_gain_s_per_v: {gain:.6e}"),
        format!("linearity_mse_s2: {mse:.3e}"),
        format!("delay_at_{lo}V_s: {:.6e}", delays[0]),
        format!("delay_at_{hi}V_s: {:.6e}", delays[steps - 1]),
        format!("pulse_width_at_{lo}V_s: {:.6e}", rows[0].2),
        format!("pulse_width_at_{hi}V_s: {:.6e}", rows[steps - 1].2),
    ])?;
    Ok(())
}

fn write_histogram(run: &RunDir, h: &Histogram) -> Result<()> {
    let mut w = run.csv_writer("histogram.csv")?;
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for (i, &count) in h.counts.iter().enumerate() {
        w.serialize((h.edges[i], h.edges[i + 1], count))?;
    }
    w.flush()?;
    Ok(())
}

pub fn mc(
    cfg: &ScenarioConfig,
    target: McTarget,
    stages: &[u32],
    bins: usize,
    n: usize,
    dir: PathBuf,
) -> Result<()> {
    match target {
        McTarget::Vtc => mc_vtc(cfg, stages, bins, n, dir),
        McTarget::Crossbar => mc_crossbar(cfg, bins, n, dir),
    }
}

/// Cascaded-converter delay statistics plus a histogram of the first
/// requested cascade's delay samples.
fn mc_vtc(cfg: &ScenarioConfig, stages: &[u32], bins: usize, n: usize, dir: PathBuf) -> Result<()> {
    let v_in = cfg.vtc.v_in_range[1];
    let table = cascade_variation_table(v_in, stages, &cfg.vtc, n, &cfg.mismatch)?;
    let nominal = cfg.vtc.delay(v_in)?;
    let first = stages[0];
    let samples = monte_carlo_samples(
        |rng| {
            let mut total = 0.0;
            for _ in 0..first {
                total +=
                    crate::variability::perturb(nominal, cfg.mismatch.vtc_delay_rel_sigma, rng);
            }
            Ok(total)
        },
        n,
        &cfg.mismatch,
    )?;
    let hist = histogram(&samples, bins)?;

    let run = RunDir::create(dir)?;
    run.write_config(
        "mc",
        json!({ "target": "vtc", "stages": stages, "samples": n, "bins": bins, "v_in": v_in }),
        cfg,
    )?;
    let mut w = run.results_writer()?;
    w.write_record(["stages", "mean_s", "std_s", "variation_pct", "n_samples"])?;
    for (s, st) in stages.iter().zip(&table) {
        w.serialize((s, st.mean, st.std, st.variation_pct, st.n_samples))?;
    }
    w.flush()?;
    write_histogram(&run, &hist)?;
    let mut lines = vec![
        format!("target: vtc cascade at v_in = {v_in} V"),
        format!("samples: {n}"),
        format!("delay_rel_sigma: {}", cfg.mismatch.vtc_delay_rel_sigma),
        format!("seed: {}", cfg.mismatch.seed),
    ];
    for (s, st) in stages.iter().zip(&table) {
        lines.push(format!(
            "stages {s}: mean {:.4e} s, variation {:.2}%",
            st.mean, st.variation_pct
        ));
    }
    lines.push(format!(
        "histogram: {} bins over stage-count {first} delays (histogram.csv)",
        hist.counts.len()
    ));
    run.write_summary(&lines)?;
    Ok(())
}

/// Average array error across mismatched instances: each sample draws one
/// perturbed array plus noisy conversions of a random drive, reads it
/// through the nominal calibration, and scores against the exact products.
fn mc_crossbar(cfg: &ScenarioConfig, bins: usize, n: usize, dir: PathBuf) -> Result<()> {
    let nominal = &cfg.crossbar;
    let weights = nominal.weights()?;
    let cols = nominal.cols;
    let unit = encode_inputs(&vec![1.0; nominal.rows], &cfg.vtc)?;
    let base = simulate_mac(&unit, nominal)?;
    let expected: Vec<f64> = (0..cols)
        .map(|j| weights.iter().map(|row| row[j]).sum())
        .collect();
    let cal = calibrate_scaling(&base.voltages, &expected)?;

    let samples = monte_carlo_samples(
        |rng| {
            let instance = perturb_crossbar(nominal, &cfg.mismatch, rng)?;
            let drive: Vec<f64> = (0..nominal.rows)
                .map(|_| rng.random_range(0.0..=1.0))
                .collect();
            let pulses = perturb_pulses(
                &encode_inputs(&drive, &cfg.vtc)?,
                &cfg.mismatch,
                nominal.clk_high,
                rng,
            )?;
            let out = simulate_mac(&pulses, &instance)?;
            let products = cal.normalize(&out.voltages)?;
            let ideal = ideal_mac(&drive, &weights)?;
            Ok(error_report(&products, &ideal)?.average_pct)
        },
        n,
        &cfg.mismatch,
    )?;
    let stats = crate::variability::McStats::from_samples(&samples)?;
    let hist = histogram(&samples, bins)?;

    let run = RunDir::create(dir)?;
    run.write_config(
        "mc",
        json!({ "target": "crossbar", "samples": n, "bins": bins }),
        cfg,
    )?;
    let mut w = run.results_writer()?;
    w.write_record(["metric", "mean", "std", "variation_pct", "n_samples"])?;
    w.serialize((
        "avg_error_pct",
        stats.mean,
        stats.std,
        stats.variation_pct,
        stats.n_samples,
    ))?;
    w.flush()?;
    write_histogram(&run, &hist)?;
    run.write_summary(&[
        format!("target: {}x{} array under mismatch", nominal.rows, cols),
        format!("samples: {n}"),
        format!(
            "sigmas: delay {}, weight {}, transfer {}",
            cfg.mismatch.vtc_delay_rel_sigma, cfg.mismatch.xeq_rel_sigma, cfg.mismatch.gm_rel_sigma
        ),
        format!("seed: {}", cfg.mismatch.seed),
        format!("average_error_pct: {:.4}", stats.mean),
        format!("error_std_pct: {:.4}", stats.std),
        format!("histogram: {} bins (histogram.csv)", hist.counts.len()),
    ])?;
    Ok(())
}

/// Parses the crossbar drive file: header row, then one voltage per array
/// row per line.
fn read_input_sets(path: &Path, rows: usize) -> Result<Vec<Vec<f64>>> {
    if !path.exists() {
        return Err(Error::input(
            "inputs",
            format!("{} does not exist", path.display()),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let mut sets = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != rows {
            return Err(Error::input(
                "inputs",
                format!(
                    "line {line}: expected {rows} columns (one per array row), got {}",
                    record.len()
                ),
            ));
        }
        let mut set = Vec::with_capacity(rows);
        for (idx, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::input(
                    "inputs",
                    format!("line {line}: column {} `{field}` is not a number", idx + 1),
                )
            })?;
            set.push(v);
        }
        sets.push(set);
    }
    if sets.is_empty() {
        return Err(Error::input("inputs", "no input sets after the header row"));
    }
    Ok(sets)
}

pub fn crossbar(cfg: &ScenarioConfig, inputs: &Path, dir: PathBuf) -> Result<()> {
    let nominal = &cfg.crossbar;
    let sets = read_input_sets(inputs, nominal.rows)?;
    let weights = nominal.weights()?;
    let cols = nominal.cols;

    // Calibrate on the nominal array, then (under mismatch) read one
    // perturbed instance through that calibration.
    let unit = encode_inputs(&vec![1.0; nominal.rows], &cfg.vtc)?;
    let base = simulate_mac(&unit, nominal)?;
    let expected: Vec<f64> = (0..cols)
        .map(|j| weights.iter().map(|row| row[j]).sum())
        .collect();
    let cal = calibrate_scaling(&base.voltages, &expected)?;
    let instance;
    let active = if cfg.mismatch.is_noiseless() {
        nominal
    } else {
        instance = perturb_crossbar(
            nominal,
            &cfg.mismatch,
            &mut sample_rng(cfg.mismatch.seed, HARDWARE_STREAM),
        )?;
        &instance
    };

    let mut voltages = Vec::with_capacity(sets.len());
    let mut products = Vec::with_capacity(sets.len());
    let mut ideals = Vec::with_capacity(sets.len());
    for (i, set) in sets.iter().enumerate() {
        let clean = encode_inputs(set, &cfg.vtc)
            .map_err(|e| Error::input("inputs", format!("set {}: {e}", i + 1)))?;
        let pulses = perturb_pulses(
            &clean,
            &cfg.mismatch,
            active.clk_high,
            &mut sample_rng(cfg.mismatch.seed, i as u64),
        )?;
        let out = simulate_mac(&pulses, active)?;
        products.push(cal.normalize(&out.voltages)?);
        voltages.push(out.voltages);
        ideals.push(ideal_mac(set, &weights)?);
    }
    let report = error_report_batch(&products, &ideals)?;
    let energy = energy_report((sets.len() * nominal.rows * cols) as u64, &nominal.energy)?;

    let run = RunDir::create(dir)?;
    run.write_config(
        "crossbar",
        json!({ "inputs": inputs.display().to_string(), "sets": sets.len() }),
        cfg,
    )?;
    let mut w = run.results_writer()?;
    let mut header = vec!["set".to_string()];
    for j in 0..cols {
        header.push(format!("v_out_{j}"));
    }
    for j in 0..cols {
        header.push(format!("product_{j}"));
    }
    for j in 0..cols {
        header.push(format!("ideal_{j}"));
    }
    header.push("err_pct".to_string());
    w.write_record(&header)?;
    for (i, ((v, p), ideal)) in voltages.iter().zip(&products).zip(&ideals).enumerate() {
        let err = error_report(p, ideal)?.average_pct;
        let mut record = vec![(i + 1).to_string()];
        record.extend(v.iter().map(|x| format!("{x:e}")));
        record.extend(p.iter().map(|x| format!("{x}")));
        record.extend(ideal.iter().map(|x| format!("{x}")));
        record.push(format!("{err}"));
        w.write_record(&record)?;
    }
    w.flush()?;
    let mut lines = vec![
        format!("array: {} rows x {} columns", nominal.rows, cols),
        format!("input_sets: {}", sets.len()),
        format!(
            "mismatch: delay {}, weight {}, transfer {} (seed {})",
            cfg.mismatch.vtc_delay_rel_sigma,
            cfg.mismatch.xeq_rel_sigma,
            cfg.mismatch.gm_rel_sigma,
            cfg.mismatch.seed
        ),
        format!("average_error_pct: {:.6}", report.average_pct),
    ];
    for (j, (pct, zero)) in report
        .per_column_pct
        .iter()
        .zip(&report.zero_expected)
        .enumerate()
    {
        let unit = if *zero { "abs" } else { "%" };
        lines.push(format!("column {j} error: {pct:.6} {unit}"));
    }
    lines.push(format!(
        "energy: {:.1} fJ/MAC over {} MACs = {:.4e} J",
        energy.per_mac_fj, energy.n_macs, energy.total_j
    ));
    lines.push(match &nominal.degradation {
        Some(d) => format!("line degradation: enabled ({:?} mode)", d.mode),
        None => "line degradation: ideal lines".to_string(),
    });
    run.write_summary(&lines)?;
    Ok(())
}

pub fn ann_train(cfg: &ScenarioConfig, dir: PathBuf) -> Result<()> {
    let data = load_iris_csv(&cfg.ann.iris_csv)?;
    let weights = train_ann_with(
        &data,
        cfg.ann.split_seed,
        cfg.ann.train_frac,
        &cfg.ann.train,
    )?;

    let run = RunDir::create(dir)?;
    run.write_config(
        "ann train",
        json!({
            "iris_csv": cfg.ann.iris_csv.display().to_string(),
            "split_seed": cfg.ann.split_seed,
            "train_seed": cfg.ann.train.seed,
        }),
        cfg,
    )?;
    weights.save_json(run.file("weights.json"))?;
    let (train_set, test_set) = data.stratified_split(weights.train_frac, weights.split_seed)?;
    let mut w = run.results_writer()?;
    w.write_record(["split", "correct", "total", "accuracy"])?;
    for (name, set, acc) in [
        ("train", &train_set, weights.train_accuracy),
        ("test", &test_set, weights.test_accuracy),
    ] {
        let correct = (acc * set.n_samples() as f64).round() as usize;
        w.serialize((name, correct, set.n_samples(), acc))?;
    }
    w.flush()?;
    run.write_summary(&[
        format!(
            "dataset: {} samples, {} classes",
            data.n_samples(),
            data.n_classes()
        ),
        format!("split_seed: {}", weights.split_seed),
        format!("train_seed: {}", weights.train.seed),
        format!("train_fraction: {}", weights.train_frac),
        format!(
            "hyperparameters: {} hidden units, learning rate {}, {} epochs",
            weights.train.hidden_units, weights.train.learning_rate, weights.train.epochs
        ),
        format!("final_loss: {:.6}", weights.final_loss),
        format!("train_accuracy: {:.4}", weights.train_accuracy),
        format!("test_accuracy: {:.4}", weights.test_accuracy),
        "weights: weights.json".to_string(),
    ])?;
    Ok(())
}

fn effective_mismatch(cfg: &ScenarioConfig, noiseless: bool) -> crate::variability::MismatchSpec {
    if noiseless {
        crate::variability::MismatchSpec {
            seed: cfg.mismatch.seed,
            ..crate::variability::MismatchSpec::noiseless()
        }
    } else {
        cfg.mismatch
    }
}

/// Appends one trace's vectors as `(sample, stage, index, value)` rows.
fn write_trace_rows<W: std::io::Write>(
    w: &mut csv::Writer<W>,
    sample: usize,
    trace: &InferenceTrace,
) -> Result<()> {
    let stages: [(&str, &[f64]); 9] = [
        ("inputs_unit", &trace.inputs_unit),
        ("input_widths_s", &trace.input_widths),
        ("layer1_products", &trace.layer1_products),
        ("sub_widths_s", &trace.sub_widths),
        ("hidden_widths_s", &trace.hidden_widths),
        ("hidden", &trace.hidden),
        ("layer2_products", &trace.layer2_products),
        ("logits", &trace.logits),
        ("probs", &trace.probs),
    ];
    for (stage, values) in stages {
        for (idx, v) in values.iter().enumerate() {
            w.serialize((sample, stage, idx, v))?;
        }
    }
    Ok(())
}

pub fn ann_infer(
    cfg: &ScenarioConfig,
    features: &[f64],
    noiseless: bool,
    trace: bool,
    dir: PathBuf,
) -> Result<()> {
    let weights = TrainedWeights::load_json(&cfg.ann.weights)?;
    let net = compile(&weights.model, &cfg.compile_options())?;
    let spec = effective_mismatch(cfg, noiseless);
    let active = if spec.is_noiseless() {
        net.clone()
    } else {
        net.perturb_arrays(&spec, &mut sample_rng(spec.seed, HARDWARE_STREAM))?
    };
    let result = active.infer_with_noise(features, &spec, &mut sample_rng(spec.seed, 0))?;
    let energy = net.energy_per_inference()?;

    let run = RunDir::create(dir)?;
    run.write_config(
        "ann infer",
        json!({
            "features": features,
            "weights": cfg.ann.weights.display().to_string(),
            "noiseless": spec.is_noiseless(),
        }),
        cfg,
    )?;
    let mut w = run.results_writer()?;
    w.write_record(["class", "name", "logit", "prob", "predicted"])?;
    for (k, name) in net.model.class_names.iter().enumerate() {
        w.serialize((
            k,
            name,
            result.logits[k],
            result.probs[k],
            k == result.prediction,
        ))?;
    }
    w.flush()?;
    if trace {
        let mut t = run.csv_writer("trace.csv")?;
        t.write_record(["sample", "stage", "index", "value"])?;
        write_trace_rows(&mut t, 0, &result)?;
        t.flush()?;
    }
    let mut lines = vec![
        format!("features: {features:?}"),
        format!(
            "prediction: {} ({})",
            result.prediction, net.model.class_names[result.prediction]
        ),
        format!("probs: {:?}", result.probs),
        format!(
            "scenario: {}",
            if spec.is_noiseless() {
                "noiseless"
            } else {
                "mismatch"
            }
        ),
        format!("energy_per_inference_fj: {:.1}", energy.total_fj),
    ];
    if trace {
        lines.push("trace: trace.csv".to_string());
    }
    run.write_summary(&lines)?;
    Ok(())
}

pub fn ann_evaluate(
    cfg: &ScenarioConfig,
    noiseless: bool,
    split: SplitChoice,
    trace: bool,
    dir: PathBuf,
) -> Result<()> {
    let weights = TrainedWeights::load_json(&cfg.ann.weights)?;
    let data = load_iris_csv(&cfg.ann.iris_csv)?;
    let (split_name, subset) = match split {
        SplitChoice::All => ("all", data.clone()),
        SplitChoice::Train => (
            "train",
            data.stratified_split(weights.train_frac, weights.split_seed)?
                .0,
        ),
        SplitChoice::Test => (
            "test",
            data.stratified_split(weights.train_frac, weights.split_seed)?
                .1,
        ),
    };
    let net = compile(&weights.model, &cfg.compile_options())?;
    let spec = effective_mismatch(cfg, noiseless);
    let report = evaluate(&net, &subset, &spec)?;
    let energy = net.energy_per_inference()?;

    let run = RunDir::create(dir)?;
    run.write_config(
        "ann evaluate",
        json!({
            "split": split_name,
            "samples": subset.n_samples(),
            "weights": cfg.ann.weights.display().to_string(),
            "noiseless": spec.is_noiseless(),
        }),
        cfg,
    )?;
    let mut w = run.results_writer()?;
    w.write_record([
        "sample",
        "label",
        "label_name",
        "prediction",
        "prediction_name",
        "correct",
    ])?;
    for (i, (&label, &pred)) in subset.labels.iter().zip(&report.predictions).enumerate() {
        w.serialize((
            i,
            label,
            &subset.class_names[label],
            pred,
            &subset.class_names[pred],
            label == pred,
        ))?;
    }
    w.flush()?;
    if trace {
        // Reproduce each sample's trace on the same streams evaluate used.
        let instance;
        let active = if spec.is_noiseless() {
            &net
        } else {
            instance = net.perturb_arrays(&spec, &mut sample_rng(spec.seed, HARDWARE_STREAM))?;
            &instance
        };
        let mut t = run.csv_writer("traces.csv")?;
        t.write_record(["sample", "stage", "index", "value"])?;
        for (i, row) in subset.features.iter().enumerate() {
            let tr = active.infer_with_noise(row, &spec, &mut sample_rng(spec.seed, i as u64))?;
            write_trace_rows(&mut t, i, &tr)?;
        }
        t.flush()?;
    }
    let mut lines = vec![
        format!("split: {split_name} ({} samples)", report.total),
        format!(
            "scenario: {}",
            if spec.is_noiseless() {
                "noiseless"
            } else {
                "mismatch"
            }
        ),
        format!("seed: {}", spec.seed),
        format!(
            "accuracy: {:.4} ({}/{})",
            report.accuracy, report.correct, report.total
        ),
        format!("ideal_agreement: {:.4}", report.ideal_agreement),
        format!(
            "recorded ideal accuracies: train {:.4}, test {:.4}",
            weights.train_accuracy, weights.test_accuracy
        ),
    ];
    lines.push("confusion (rows = true class, columns = predicted):".to_string());
    for (k, row) in report.confusion.iter().enumerate() {
        lines.push(format!("  {}: {row:?}", subset.class_names[k]));
    }
    lines.push(format!(
        "energy_per_inference_fj: {:.1} ({} MACs at {:.1} fJ)",
        energy.total_fj, energy.n_macs, energy.per_mac_fj
    ));
    if trace {
        lines.push("traces: traces.csv".to_string());
    }
    run.write_summary(&lines)?;
    Ok(())
}

pub fn fxp_compare(cfg: &ScenarioConfig, n: usize, dir: PathBuf) -> Result<()> {
    if n == 0 {
        return Err(Error::input("samples", "need at least one sample"));
    }
    const ROWS: usize = 8;
    const COLS: usize = 8;
    let formats = [
        FxpFormat::new(3, 3),
        FxpFormat::new(4, 4),
        FxpFormat::new(8, 4),
        FxpFormat::new(8, 8),
    ];
    let mut rng = sample_rng(cfg.mismatch.seed, 0);
    let mut inputs = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        inputs.push(
            (0..ROWS)
                .map(|_| rng.random_range(0.0..=1.0))
                .collect::<Vec<f64>>(),
        );
        weights.push(
            (0..ROWS)
                .map(|_| {
                    (0..COLS)
                        .map(|_| rng.random_range(0.0..=1.0))
                        .collect::<Vec<f64>>()
                })
                .collect::<Vec<_>>(),
        );
    }
    let ideals: Vec<Vec<f64>> = inputs
        .iter()
        .zip(&weights)
        .map(|(x, w)| ideal_mac(x, w))
        .collect::<Result<_>>()?;
    let mut results = Vec::with_capacity(formats.len());
    for fmt in &formats {
        let observed: Vec<Vec<f64>> = inputs
            .iter()
            .zip(&weights)
            .map(|(x, w)| fxp_mac(x, w, fmt))
            .collect::<Result<_>>()?;
        let report = error_report_batch(&observed, &ideals)?;
        results.push((fmt, report));
    }

    let run = RunDir::create(dir)?;
    run.write_config(
        "fxp-compare",
        json!({ "samples": n, "rows": ROWS, "cols": COLS, "seed": cfg.mismatch.seed }),
        cfg,
    )?;
    let mut w = run.results_writer()?;
    w.write_record([
        "format",
        "input_bits",
        "weight_bits",
        "avg_error_pct",
        "mse",
    ])?;
    for (fmt, report) in &results {
        w.serialize((
            format!("{}x{}", fmt.input_bits, fmt.weight_bits),
            fmt.input_bits,
            fmt.weight_bits,
            report.average_pct,
            report.mse,
        ))?;
    }
    w.flush()?;
    let ordered = results
        .windows(2)
        .all(|pair| pair[0].1.average_pct > pair[1].1.average_pct);
    let mut lines = vec![format!(
        "dataset: {n} random {ROWS}x{COLS} sets, seed {}",
        cfg.mismatch.seed
    )];
    for (fmt, report) in &results {
        lines.push(format!(
            "{}x{}: avg error {:.4}%",
            fmt.input_bits, fmt.weight_bits, report.average_pct
        ));
    }
    lines.push(format!("error strictly falls with precision: {ordered}"));
    run.write_summary(&lines)?;
    Ok(())
}
