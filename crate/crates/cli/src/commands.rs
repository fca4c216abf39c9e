//! Subcommand implementations.

use crate::args::Args;
use fast_core::audio::{load_wav, mel_spectrogram, write_fsts, SpectrogramConfig};
use fast_core::model::{build, checkpoint, FastModel, ModelConfig};
use fast_core::oracle::suites;
use fast_core::train::{
    records_to_csv, stability, train as train_synthetic, train_memory, MemoryDataset,
    SyntheticTask, TrainOptions,
};
use fast_core::train::{LrSchedule, TrainRecord};
use fast_core::{Error, Result, Rng, Tape, Tensor};
use std::io::Write;
use std::path::Path;

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e)
}

/// `--config` accepts the presets `tiny` and `full` or a JSON file path;
/// `--classes` overrides the class count either way.
fn resolve_config(args: &Args) -> Result<ModelConfig> {
    let spec = args.require("config")?;
    let mut cfg = match spec {
        "tiny" => ModelConfig::tiny(2),
        "full" => ModelConfig::full(2),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
                what: format!("cannot read config `{path}`: {e}"),
                offset: None,
                field: None,
            })?;
            ModelConfig::from_json(&text)?
        }
    };
    if let Some(classes) = args.get("classes") {
        cfg.num_classes = classes
            .parse()
            .map_err(|_| Error::Usage(format!("bad --classes value `{classes}`")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn params(raw: &[String], out: &mut dyn Write) -> Result<i32> {
    let args = Args::parse(raw, &[])?;
    let cfg = resolve_config(&args)?;
    let seed = args.get_parsed("seed", 0u64)?;
    let model = build::<f32>(&cfg, seed)?;
    let mut total = 0usize;
    writeln!(out, "{:<40} {:>16} {:>10}", "name", "shape", "count").map_err(io_err)?;
    for (name, tensor) in model.named_params() {
        let count = tensor.numel();
        total += count;
        writeln!(
            out,
            "{:<40} {:>16} {:>10}",
            name,
            format!("{:?}", tensor.shape()),
            count
        )
        .map_err(io_err)?;
    }
    writeln!(out, "total {total}").map_err(io_err)?;
    Ok(0)
}

pub fn infer(raw: &[String], out: &mut dyn Write) -> Result<i32> {
    let args = Args::parse(raw, &["multilabel"])?;
    let cfg = resolve_config(&args)?;
    let ckpt_path = args.require("checkpoint")?;
    let wavs = args.get_all("wav");
    if wavs.is_empty() {
        return Err(Error::Usage("infer needs at least one --wav".into()));
    }
    let model: FastModel<f32> = checkpoint::load(&cfg, ckpt_path)?;
    let (n_mels, frames) = cfg.image_size;
    let spec_cfg = SpectrogramConfig::with_geometry(n_mels, frames);
    let dump_dir = args.get("dump-spectrogram");
    let multilabel = args.has("multilabel");

    let tape = Tape::inference();
    let mut rng = Rng::new(args.get_parsed("seed", 0u64)?);
    for wav_path in wavs {
        let clip = load_wav(wav_path)?;
        let spec = mel_spectrogram::<f32>(&clip, &spec_cfg)?;
        if let Some(dir) = dump_dir {
            std::fs::create_dir_all(dir).map_err(io_err)?;
            let stem = Path::new(wav_path)
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "clip".to_string());
            write_fsts(&spec, Path::new(dir).join(format!("{stem}.fsts")))?;
        }
        let logits = model.forward_single(&tape, &spec.values, false, &mut rng)?;
        let scores = if multilabel {
            tape.sigmoid(&logits)
        } else {
            tape.softmax_last(&logits)
        };
        let row: Vec<String> = scores.to_vec().iter().map(|v| format!("{v:.6}")).collect();
        writeln!(out, "{wav_path},{}", row.join(",")).map_err(io_err)?;
    }
    Ok(0)
}

/// Load `dir/<class>/*.wav` with classes in sorted directory order.
fn load_directory_dataset(
    dir: &str,
    cfg: &ModelConfig,
) -> Result<(MemoryDataset<f32>, Vec<String>)> {
    let (n_mels, frames) = cfg.image_size;
    let spec_cfg = SpectrogramConfig::with_geometry(n_mels, frames);
    let mut class_dirs: Vec<_> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    class_dirs.sort();
    if class_dirs.len() != cfg.num_classes {
        return Err(Error::Usage(format!(
            "data dir has {} class subdirectories, config expects {}",
            class_dirs.len(),
            cfg.num_classes
        )));
    }
    let mut samples = Vec::new();
    let mut names = Vec::new();
    for (label, class_dir) in class_dirs.iter().enumerate() {
        names.push(class_dir.file_name().unwrap().to_string_lossy().to_string());
        let mut files: Vec<_> = std::fs::read_dir(class_dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "wav"))
            .collect();
        files.sort();
        for file in files {
            let clip = load_wav(&file)?;
            let spec = mel_spectrogram::<f32>(&clip, &spec_cfg)?;
            samples.push((spec.values, label));
        }
    }
    if samples.is_empty() {
        return Err(Error::Usage(format!("no .wav files under `{dir}`")));
    }
    Ok((
        MemoryDataset {
            samples,
            classes: cfg.num_classes,
        },
        names,
    ))
}

fn parse_schedule(args: &Args) -> Result<LrSchedule> {
    match args.get("schedule") {
        None | Some("constant") => Ok(LrSchedule::Constant),
        Some("halve-after-2") => Ok(LrSchedule::HalveAfter { epoch: 2 }),
        Some(other) => Err(Error::Usage(format!(
            "unknown schedule `{other}` (constant | halve-after-2)"
        ))),
    }
}

fn emit_csv(args: &Args, out: &mut dyn Write, rows: &[(String, f64, TrainRecord)]) -> Result<()> {
    let csv = records_to_csv(rows);
    match args.get("out") {
        Some(path) => std::fs::write(path, csv).map_err(io_err)?,
        None => write!(out, "{csv}").map_err(io_err)?,
    }
    Ok(())
}

pub fn train(raw: &[String], out: &mut dyn Write) -> Result<i32> {
    let args = Args::parse(raw, &["synthetic"])?;
    let cfg = resolve_config(&args)?;
    let seed = args.get_parsed("seed", 0u64)?;
    let batch_size = args.get_parsed("batch-size", 8usize)?;
    let lr = args.get_parsed("lr", 1e-3f64)?;
    let schedule = parse_schedule(&args)?;
    let model = build::<f32>(&cfg, seed)?;

    let records = if args.has("synthetic") {
        let steps = args.get_parsed("steps", 200u64)?;
        let epochs = args.get_parsed("epochs", 1u64)?.max(1);
        let task = SyntheticTask::new(cfg.num_classes, cfg.image_size, seed);
        let mut options = TrainOptions::new(steps, batch_size, lr, seed);
        options.steps_per_epoch = (steps / epochs).max(1);
        options.schedule = schedule;
        train_synthetic(&model, &task, &options)?
    } else if let Some(dir) = args.get("data") {
        let epochs = args.get_parsed("epochs", 30u64)?;
        let (dataset, class_names) = load_directory_dataset(dir, &cfg)?;
        eprintln!(
            "loaded {} samples across classes {:?}",
            dataset.samples.len(),
            class_names
        );
        let mut options = TrainOptions::new(0, batch_size, lr, seed);
        options.schedule = schedule;
        train_memory(&model, &dataset, epochs, &options)?
    } else {
        return Err(Error::Usage("train needs --synthetic or --data <dir>".into()));
    };

    if let Some(path) = args.get("save") {
        checkpoint::save(&model, path)?;
    }
    let rows: Vec<(String, f64, TrainRecord)> = records
        .into_iter()
        .map(|r| ("lips".to_string(), lr, r))
        .collect();
    emit_csv(&args, out, &rows)?;
    Ok(0)
}

pub fn gradcheck(raw: &[String], out: &mut dyn Write) -> Result<i32> {
    let args = Args::parse(raw, &[])?;
    let seeds = args.get_parsed("seeds", 3u64)?;
    let reports = match args.get("module") {
        Some(module) => suites::run(module, seeds)?,
        None => suites::run_all(seeds)?,
    };
    let mut failures = 0usize;
    for report in &reports {
        writeln!(out, "{report}").map_err(io_err)?;
        if !report.pass() {
            failures += 1;
        }
    }
    writeln!(out, "{} checks, {} failures", reports.len(), failures).map_err(io_err)?;
    Ok(if failures == 0 { 0 } else { 1 })
}

pub fn stability(raw: &[String], out: &mut dyn Write) -> Result<i32> {
    let args = Args::parse(raw, &[])?;
    let cfg = resolve_config(&args)?;
    let steps = args.get_parsed("steps", 100u64)?;
    let batch_size = args.get_parsed("batch-size", 8usize)?;
    let seed = args.get_parsed("seed", 0u64)?;
    let lrs = args.get_f64_list("lrs", &[1e-3])?;
    let outcomes = stability::stability_experiment::<f32>(&cfg, &lrs, steps, batch_size, seed)?;
    emit_csv(&args, out, &stability::flatten(&outcomes))?;
    Ok(0)
}

pub fn bench(raw: &[String], out: &mut dyn Write) -> Result<i32> {
    let args = Args::parse(raw, &[])?;
    let cfg = resolve_config(&args)?;
    let iters = args.get_parsed("iters", 100usize)?.max(1);
    let warmup = args.get_parsed("warmup", 5usize)?;
    let seed = args.get_parsed("seed", 0u64)?;
    let model = build::<f32>(&cfg, seed)?;
    let mut rng = Rng::new(seed ^ 0xbe7c);
    let (h, w) = cfg.image_size;
    let x = Tensor::<f32>::randn(&[h, w, 1], 1.0, &mut rng);
    let tape = Tape::inference();

    for _ in 0..warmup {
        let _ = model.forward_single(&tape, &x, false, &mut rng)?;
    }
    let mut latencies_ms = Vec::with_capacity(iters);
    for _ in 0..iters {
        let start = std::time::Instant::now();
        let _ = model.forward_single(&tape, &x, false, &mut rng)?;
        latencies_ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    latencies_ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean: f64 = latencies_ms.iter().sum::<f64>() / iters as f64;
    let p95 = latencies_ms[((iters as f64 * 0.95) as usize).min(iters - 1)];
    writeln!(out, "iters,mean_ms,p95_ms").map_err(io_err)?;
    writeln!(out, "{iters},{mean:.3},{p95:.3}").map_err(io_err)?;
    Ok(0)
}
