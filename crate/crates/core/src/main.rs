use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mppdx::data::{generate_synthetic, load_raw, write_fixture, FeatureSchema, SyntheticSpec};
use mppdx::experiment::{
    emit_report, importance_from_config, render_comparison, run_experiment, ExperimentConfig,
};
use mppdx::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "mppdx", version, about = "Tabular 3-class classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate the configured models and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        folds: Option<usize>,
        /// Comma-separated subset of logistic,tree,gbdt,svm,mlp.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv, json or both.
        #[arg(long)]
        format: Option<String>,
    },
    /// Fit GBDT on the full dataset and print the feature ranking.
    Importance {
        #[arg(long)]
        config: PathBuf,
    },
    /// Load and clean a dataset, then print a summary.
    ValidateData {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Write a synthetic fixture (CSV, schema and manifest).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "synthetic")]
        stem: String,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        d: usize,
        /// Comma-separated informative feature indices.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        informative: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0.02)]
        missing: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            seed,
            folds,
            models,
            out,
            format,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(k) = folds {
                cfg.k = k;
            }
            if let Some(m) = models {
                cfg.hyperparameters.retain(|name, _| m.contains(name));
                cfg.models = m;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if let Some(f) = format {
                cfg.format = f;
            }
            cfg.validate()?;
            let bundle = run_experiment(&cfg)?;
            print!("{}", render_comparison(&bundle.comparison));
            for path in emit_report(&bundle, cfg.report_format()?, &cfg.out_dir)? {
                eprintln!("wrote {}", path.display());
            }
            if let (Some(a), Some(b)) = (bundle.metadata.started, bundle.metadata.finished) {
                if let Ok(t) = b.duration_since(a) {
                    eprintln!("finished in {:.2} s", t.as_secs_f64());
                }
            }
        }
        Command::Importance { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = importance_from_config(&cfg)?;
            println!("{:>4}  {:<32} {:>10}", "rank", "feature", "importance");
            for e in &report.entries {
                println!("{:>4}  {:<32} {:>10.6}", e.rank, e.feature, e.importance);
            }
        }
        Command::ValidateData { data, schema } => {
            let schema = FeatureSchema::from_json_file(&schema)?;
            let raw = load_raw(&data, &schema)?;
            let missing = raw.rows.iter().flatten().filter(|c| c.is_missing()).count();
            let dataset = mppdx::data::clean_and_encode(&raw, &schema)?;
            println!("records: {} read, {} kept", raw.len(), dataset.len());
            println!("features: {}", dataset.n_features());
            println!("missing cells: {missing}");
            let counts: Vec<String> = dataset.class_counts().iter().map(usize::to_string).collect();
            println!("class counts: {}", counts.join(" "));
            println!("digest: {}", dataset.digest());
        }
        Command::Synth {
            out,
            stem,
            n,
            d,
            informative,
            noise,
            missing,
            seed,
        } => {
            let spec = SyntheticSpec::new(n, d, informative, seed).with_noise(noise);
            let dataset = generate_synthetic(&spec)?;
            let manifest = write_fixture(&dataset, &out, &stem, missing, seed)?;
            println!(
                "wrote {} rows with {} missing cells to {}",
                manifest.rows,
                manifest.missing_cells,
                out.display()
            );
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Runtime => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
