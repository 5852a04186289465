use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use graphclone::audit::{audit_csv, export_audit_sample};
use graphclone::config::RunConfig;
use graphclone::corpus::{ingest_directory, load_corpus, read_manifest, SplitMode};
use graphclone::formats;
use graphclone::parallel;
use graphclone::pipeline;
use graphclone_core::detect::{
    combine_vectors, CombineMode, Scope, SimilarityQuery, DEFAULT_TILE_SIZE,
};
use graphclone_core::embed::EmbedConfig;
use graphclone_core::eval::score;
use graphclone_core::graph::{FeatureSet, WeightTransform};

/// Code clone detection by embedding a sample/keyword graph.
#[derive(Parser)]
#[command(name = "graphclone", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output; repeat for trace level.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut a source tree into function samples and write the manifest.
    Ingest {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value = "split")]
        mode: SplitMode,
        #[arg(long, default_value = ".java")]
        ext: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the keyword map and side information of one file as JSON.
    Lexis {
        #[arg(long)]
        dump: PathBuf,
    },
    /// Build the sample/info graph of a manifest.
    Graph {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "both")]
        features: FeatureSet,
        #[arg(long, default_value = "raw")]
        weight_transform: WeightTransform,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a graph edge list.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        params: EmbedArgs,
        /// Write TSV instead of GEMB.
        #[arg(long)]
        text: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report sample pairs at or above a cosine threshold.
    Detect {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        threshold: f64,
        /// Score only the pairs listed in this CSV.
        #[arg(long, conflicts_with = "topk")]
        pairs: Option<PathBuf>,
        /// Keep the k best partners of each sample.
        #[arg(long)]
        topk: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TILE_SIZE)]
        tile_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fuse global vectors with individual vectors.
    Combine {
        #[arg(long)]
        global: PathBuf,
        #[arg(long)]
        individual: PathBuf,
        #[arg(long, default_value = "sum")]
        mode: CombineMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Token-overlap ratio over candidate pairs.
    Baseline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        theta: f64,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a clone report against labeled pairs.
    Eval {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Check label ids against this manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a seeded random sample of a clone report for review.
    Audit {
        #[arg(long)]
        report: PathBuf,
        #[arg(short = 'k', long = "k")]
        k: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Manifest giving source paths and line spans.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ingest through detection (and eval with labels) in one go.
    Run(RunArgs),
    /// Grid over feature sets, dimensions and thresholds.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Where the table goes (default: <out-dir>/sweep.csv).
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    oversampling: Option<usize>,
    #[arg(long)]
    power_iters: Option<usize>,
}

impl EmbedArgs {
    fn config(&self) -> EmbedConfig {
        let d = EmbedConfig::default();
        EmbedConfig {
            dim: self.dim,
            seed: self.seed,
            order: self.order.unwrap_or(d.order),
            mu: self.mu.unwrap_or(d.mu),
            theta: self.theta.unwrap_or(d.theta),
            oversampling: self.oversampling.unwrap_or(d.oversampling),
            power_iters: self.power_iters.unwrap_or(d.power_iters),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides a config key; repeatable (`--set dim=32`).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    root: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    tile_size: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    individual: Option<String>,
}

impl RunArgs {
    fn config(&self, threads: Option<usize>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("root", &self.root),
            ("out_dir", &self.out_dir),
            ("mode", &self.mode),
            ("features", &self.features),
            ("dim", &self.dim),
            ("seed", &self.seed),
            ("threshold", &self.threshold),
            ("tile_size", &self.tile_size),
            ("labels", &self.labels),
            ("individual", &self.individual),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            cfg.set(k, v)?;
        }
        if threads.is_some() {
            cfg.threads = threads;
        }
        Ok(cfg)
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn execute(cli: Cli) -> Result<()> {
    parallel::set_threads(cli.threads);
    match cli.command {
        Command::Ingest {
            root,
            mode,
            ext,
            out,
        } => {
            let corpus = ingest_directory(&root, mode, &ext)?;
            corpus.write_manifest(&out)?;
            log::info!(
                "{} samples, {} LOC, {} files skipped",
                corpus.len(),
                corpus.total_loc(),
                corpus.skipped.len()
            );
        }
        Command::Lexis { dump } => {
            let v = pipeline::lexis_dump(&read(&dump)?)
                .with_context(|| format!("lexing {}", dump.display()))?;
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::Graph {
            manifest,
            features,
            weight_transform,
            out,
        } => {
            let corpus = load_corpus(&manifest)?;
            let g = pipeline::build_graph(&corpus, features, weight_transform)?;
            write(&out, g.to_edge_list())?;
            log::info!("{} nodes, {} edges", g.n_nodes(), g.n_edges());
        }
        Command::Embed {
            graph,
            params,
            text,
            out,
        } => {
            let g = formats::read_edge_list(&graph)?;
            let e = pipeline::embed_stored(&g, &params.config())?;
            if text {
                write(&out, formats::vectors_tsv(&e))?;
            } else {
                formats::save_gemb(&out, &e)?;
            }
        }
        Command::Detect {
            vectors,
            threshold,
            pairs,
            topk,
            tile_size,
            out,
        } => {
            let e = formats::load_gemb(&vectors)?;
            let scope = match (pairs, topk) {
                (Some(p), _) => Scope::Pairs(formats::parse_pairs(&read(&p)?)?),
                (None, Some(k)) => Scope::TopK(k),
                (None, None) => Scope::AllPairs,
            };
            let q = SimilarityQuery {
                threshold,
                scope,
                tile_size,
            };
            let found = parallel::detect(&e, &q)?;
            write(&out, formats::clone_report_csv(&found))?;
            log::info!("{} pairs", found.len());
        }
        Command::Combine {
            global,
            individual,
            mode,
            out,
        } => {
            let g = formats::load_gemb(&global)?;
            let ind = formats::load_individual_vectors(&individual)?;
            let mut c = combine_vectors(&g, &ind, mode)?;
            formats::round_to_f32(&mut c);
            formats::save_gemb(&out, &c)?;
        }
        Command::Baseline {
            manifest,
            theta,
            pairs,
            out,
        } => {
            let corpus = load_corpus(&manifest)?;
            let results =
                pipeline::baseline(&corpus, &formats::parse_pairs(&read(&pairs)?)?, theta)?;
            write(&out, pipeline::baseline_csv(&results))?;
        }
        Command::Eval {
            report,
            labels,
            manifest,
            out,
        } => {
            let found = formats::parse_clone_report(&read(&report)?)?;
            let labels = formats::parse_labels(&read(&labels)?)?;
            let known = match manifest {
                Some(m) => Some(read_manifest(&m)?.into_iter().map(|m| m.id).collect()),
                None => None,
            };
            let m = score(&found, &labels, known.as_ref())?;
            write(
                &out,
                serde_json::to_string_pretty(&formats::metrics_json(&m))?,
            )?;
        }
        Command::Audit {
            report,
            k,
            seed,
            manifest,
            out,
        } => {
            let found = formats::parse_clone_report(&read(&report)?)?;
            let metas: BTreeMap<_, _> = match manifest {
                Some(m) => read_manifest(&m)?
                    .into_iter()
                    .map(|m| (m.id.clone(), m))
                    .collect(),
                None => BTreeMap::new(),
            };
            write(
                &out,
                audit_csv(&export_audit_sample(&found, k, seed), &metas),
            )?;
        }
        Command::Run(args) => {
            let cfg = args.config(cli.threads)?;
            cfg.validate()?;
            parallel::set_threads(cfg.threads);
            let report = pipeline::run(&cfg)?;
            println!("{}", cfg.out_dir.join(pipeline::REPORT_FILE).display());
            log::info!(
                "{} samples, {} pairs in {:.2}s",
                report.samples,
                report.pairs,
                report.total_seconds
            );
        }
        Command::Sweep { run, table } => {
            let cfg = run.config(cli.threads)?;
            cfg.validate()?;
            parallel::set_threads(cfg.threads);
            let cells = pipeline::sweep(&cfg)?;
            let path = table.unwrap_or_else(|| cfg.out_dir.join("sweep.csv"));
            write(&path, pipeline::sweep_csv(&cells))?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    graphclone::logging::init(cli.verbose);
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
