use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use stcsf_core::csf::{BartenCsf, CsfConstants, ViewingConditions};
use stcsf_core::stacks::{ImageStack, Label};
use stcsf_core::trial::{run_trial_on_cases, PreparedPipeline};
use stcsf_sim::config::{Axis, Config};
use stcsf_sim::generate::generate_dataset;
use stcsf_sim::io::{read_dataset, write_dataset};
use stcsf_sim::report::{self, format_f64, Overlay};
use stcsf_sim::runner::compute_cases;
use stcsf_sim::sweep::{plan_for, run_sweep, ResultRow, SweepSpec, TrialRecord};

#[derive(Parser, Debug)]
#[command(name = "stcsf", version, about = "Virtual reader trials of cine-browsed image stacks")]
struct Cli {
    /// Experiment configuration (TOML); defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides both generator.seed and trial.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a paired synthetic dataset and write it to --out.
    GenDataset,
    /// Run one virtual reader trial.
    RunTrial {
        /// Dataset directory; generated from the config when omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Repeat the trial over one swept parameter.
    Sweep {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// slice_rate, ssr, l_max or contrast_ratio.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated, strictly increasing axis values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// External series (`axis,value,tolerance`) rescaled onto the plot.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Evaluate sweep points concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Tabulate S(u, w) for inspection.
    CsfTable {
        /// Adapting luminance, cd/m².
        #[arg(long, default_value_t = 20.0)]
        luminance: f64,
        /// Field size, degrees.
        #[arg(long, default_value_t = 2.5)]
        x0: f64,
    },
    /// Plot a result CSV, optionally with an external series.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Axis label.
        #[arg(long, default_value = "axis")]
        axis: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.generator.seed = seed;
        config.trial.seed = seed;
    }
    Ok(config)
}

fn out_dir(cli: &Cli, default: &str) -> anyhow::Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(default));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load_dataset(config: &Config, dataset: Option<&Path>) -> anyhow::Result<Vec<ImageStack>> {
    Ok(match dataset {
        Some(dir) => read_dataset(dir)?.1,
        None => generate_dataset(&config.dataset_spec()?)?,
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = load_config(&cli)?;
    match &cli.command {
        Command::GenDataset => {
            let dir = out_dir(&cli, "dataset")?;
            let stacks = generate_dataset(&config.dataset_spec()?)?;
            let manifest = write_dataset(&dir, &stacks, &config.generator)?;
            println!("wrote {} stacks ({} pairs) to {}", stacks.len(), manifest.pairs.len(), dir.display());
        }
        Command::RunTrial { dataset } => {
            let dir = out_dir(&cli, ".")?;
            let stacks = load_dataset(&config, dataset.as_deref())?;
            let plan = plan_for(&stacks, &config)?;
            let pipeline_config = config.pipeline()?;
            let pipeline = PreparedPipeline::new(&stacks, &pipeline_config)?;
            let cases = compute_cases(&stacks, &pipeline)?;
            let result = run_trial_on_cases(&cases, &plan, &pipeline, &pipeline_config.observer)?;
            let vc = pipeline.viewing();
            let record = TrialRecord::new(&config, &result, vc.luminance_l, vc.x0);
            let row = ResultRow {
                axis_value: config.percept.slice_rate,
                mean_auc: result.mean_auc,
                auc_stddev: result.variance.sqrt(),
                n_readers: result.per_reader_auc.len(),
                seed: plan.seed,
                config_hash: config.hash(),
            };
            report::write_csv(&[row], &dir.join("trial.csv"))?;
            let path = dir.join("trial.toml");
            fs::write(&path, toml::to_string(&record)?).with_context(|| format!("writing {}", path.display()))?;
            write_scores(&dir.join("scores.csv"), &result.test_ids, &result.test_labels, &result.scores)?;
            println!("mean AUC {:.6} ± {:.6} ({} readers)", result.mean_auc, result.variance.sqrt(), plan.n_readers);
        }
        Command::Sweep { dataset, axis, values, overlay, parallel } => {
            let dir = out_dir(&cli, ".")?;
            let mut spec = SweepSpec::from_config(&config);
            if let Some(a) = axis {
                spec.axis = Axis::parse(a)?;
            }
            if let Some(v) = values {
                spec.values = v.clone();
            }
            spec.parallel |= *parallel;
            let stacks = load_dataset(&config, dataset.as_deref())?;
            let rows = run_sweep(&spec, &stacks)?;
            report::write_csv(&rows, &dir.join("sweep.csv"))?;
            let overlays = match overlay {
                Some(p) => vec![load_overlay(p, &rows)?],
                None => Vec::new(),
            };
            report::write_svg(&rows, &overlays, spec.axis.name(), &dir.join("sweep.svg"))?;
            for r in &rows {
                println!("{} = {}: AUC {:.6} ± {:.6}", spec.axis.name(), r.axis_value, r.mean_auc, r.auc_stddev);
            }
        }
        Command::CsfTable { luminance, x0 } => {
            let dir = out_dir(&cli, ".")?;
            let vc = ViewingConditions::new(*luminance, *x0, 1.0, 1.0)?;
            let csf = BartenCsf::new(vc, CsfConstants::default())?;
            let mut text = String::from("u,w,sensitivity\n");
            for i in 0..=40 {
                // 0.1 to 100 cyc/deg, four points per octave
                let u = 0.1 * 2f64.powf(f64::from(i) / 4.0);
                for j in 0..=80 {
                    let w = 0.5 * f64::from(j);
                    text.push_str(&format!(
                        "{},{},{}\n",
                        format_f64(u),
                        format_f64(w),
                        format_f64(csf.sensitivity(u, w))
                    ));
                }
            }
            let path = dir.join("csf_table.csv");
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        Command::Plot { input, overlay, axis } => {
            let dir = out_dir(&cli, ".")?;
            let rows = report::read_csv(input)?;
            let overlays = match overlay {
                Some(p) => vec![load_overlay(p, &rows)?],
                None => Vec::new(),
            };
            let path = dir.join("plot.svg");
            report::write_svg(&rows, &overlays, axis, &path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn load_overlay(path: &Path, rows: &[ResultRow]) -> anyhow::Result<Overlay> {
    let external = report::read_overlay(path)?;
    let anchor: Vec<(f64, f64)> = rows.iter().map(|r| (r.axis_value, r.mean_auc)).collect();
    let points = report::overlay_rescale(&external, &anchor)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("external").to_owned();
    Ok(Overlay { name, points })
}

fn write_scores(path: &Path, ids: &[u64], labels: &[Label], scores: &[Vec<f64>]) -> anyhow::Result<()> {
    if ids.len() != labels.len() || scores.iter().any(|r| r.len() != ids.len()) {
        bail!("score matrix does not match the test set");
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["stack_id".to_owned(), "label".to_owned()];
    header.extend((0..scores.len()).map(|r| format!("reader_{r}")));
    w.write_record(&header)?;
    for (c, (id, label)) in ids.iter().zip(labels).enumerate() {
        let mut rec = vec![id.to_string(), if *label == Label::Lesion { "lesion" } else { "healthy" }.to_owned()];
        rec.extend(scores.iter().map(|r| format_f64(r[c])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
