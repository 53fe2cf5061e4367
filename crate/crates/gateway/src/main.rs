use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use msem_active::{simulated_pool, ActiveLearner, Pool, Strategy};
use msem_core::Layer;
use msem_extract::{fit, synthetic, Checkpoint, JointModelF64};
use msem_gateway::pipeline::{load_extractor, read_samples};
use msem_gateway::server::find_entity;
use msem_gateway::{construct_until, run_pipeline, AppState, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "msem", about = "Service-ecosystem model construction and analytics")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Every phase; writes model.json, coverage.json and report.json.
    Run {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Structural part from the triple dump and external records.
    Skg {
        #[command(subcommand)]
        cmd: SkgCmd,
    },
    /// Extractor training and inference.
    Extract {
        #[command(subcommand)]
        cmd: ExtractCmd,
    },
    /// Active-learning loop.
    Al {
        #[command(subcommand)]
        cmd: AlCmd,
    },
    /// Structural part, extraction and fusion.
    Fuse {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full construction including evolutionary-relation rules.
    Rules {
        #[command(subcommand)]
        cmd: RulesCmd,
    },
    /// Snapshots, communities and evolution events.
    Evolve {
        #[command(subcommand)]
        cmd: EvolveCmd,
    },
    /// Time-ordered events linking a stakeholder to a feature.
    Storyline {
        #[arg(long)]
        stakeholder: String,
        #[arg(long)]
        feature: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// HTTP API for annotation and model queries.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        /// Seed an in-memory pool with this many synthetic pairs when no pool file is configured.
        #[arg(long)]
        synthetic: Option<usize>,
    },
}

#[derive(Subcommand)]
enum SkgCmd {
    /// Writes the structural part as model JSON.
    Build {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExtractCmd {
    /// Trains on the configured training samples and writes a checkpoint.
    Train {
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Structural part plus events extracted from the corpus.
    Run {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes template-generated training samples.
    Synth {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AlCmd {
    /// Runs the loop against gold labels standing in for the annotator.
    Loop {
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        batch: Option<usize>,
        /// Gold samples; the first `initial` start labeled.
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long, default_value_t = 20)]
        initial: usize,
    },
}

#[derive(Subcommand)]
enum RulesCmd {
    /// Applies the rulebase and prints coverage.
    Apply {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvolveCmd {
    /// Entity and relation counts per snapshot.
    Snapshots,
    /// Communities with key nodes per snapshot.
    Communities,
    /// Birth, death, continue, split and merge events between snapshots.
    Events,
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).with_context(|| p.display().to_string()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn stage(cfg: &PipelineConfig, last: Stage, out: Option<&Path>) -> Result<()> {
    let run = construct_until(cfg, last)?;
    eprintln!("{}", json(&run.report));
    emit(out, &run.model.to_json())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    match cli.cmd {
        Cmd::Run { out } => {
            let run = run_pipeline(&cfg)?;
            run.write(&out)?;
            println!("{}", json(&run.report.stats));
        }
        Cmd::Skg { cmd: SkgCmd::Build { out } } => stage(&cfg, Stage::Skg, out.as_deref())?,
        Cmd::Extract { cmd } => match cmd {
            ExtractCmd::Train { samples, out } => {
                let path = samples.or(cfg.paths.training.clone()).context("no training samples given")?;
                let samples = read_samples(&path)?;
                let (model, report): (JointModelF64, _) = fit(&samples, cfg.model_config(), &cfg.train_config())?;
                Checkpoint::new(&model, cfg.train_config()).save(&out)?;
                println!("{}", json(&report.epoch_losses));
            }
            ExtractCmd::Run { out } => stage(&cfg, Stage::Extract, out.as_deref())?,
            ExtractCmd::Synth { n, seed, out } => {
                let lines: String = synthetic::generate(n, seed)
                    .iter()
                    .map(|s| serde_json::to_string(s).expect("serializable") + "\n")
                    .collect();
                emit(out.as_deref(), &lines)?;
            }
        },
        Cmd::Al { cmd: AlCmd::Loop { strategy, batch, oracle, initial } } => {
            if let Some(s) = strategy {
                cfg.al.strategy = s;
            }
            if let Some(b) = batch {
                cfg.al.batch = b;
            }
            let samples = read_samples(&oracle)?;
            let (pool, mut gold) = simulated_pool(&samples, initial)?;
            let mut learner = ActiveLearner::<f64>::new(pool, cfg.loop_config());
            let reason = learner.run(&mut gold)?;
            eprintln!("stopped: {reason:?}");
            emit(None, &learner.report().to_csv())?;
        }
        Cmd::Fuse { out } => stage(&cfg, Stage::Fuse, out.as_deref())?,
        Cmd::Rules { cmd: RulesCmd::Apply { out } } => stage(&cfg, Stage::Rules, out.as_deref())?,
        Cmd::Evolve { cmd } => {
            if cfg.evolution.snapshots.is_empty() {
                bail!("no snapshot times configured ([evolution] snapshots)");
            }
            let run = run_pipeline(&cfg)?;
            let report = run.report.evolution.expect("snapshots configured");
            match cmd {
                EvolveCmd::Snapshots => {
                    for s in msem_evolution::build_snapshots(&run.model, &report.snapshots)? {
                        println!("{}  {} evolutionary edges", s.at, s.evolutionary.len());
                    }
                }
                EvolveCmd::Communities => emit(None, &json(&report.communities))?,
                EvolveCmd::Events => emit(None, &json(&report.events))?,
            }
        }
        Cmd::Storyline { stakeholder, feature, json: as_json } => {
            let run = run_pipeline(&cfg)?;
            let s = find_entity(&run.model, &stakeholder, Layer::Stakeholder).context("unknown stakeholder")?;
            let f = match feature {
                Some(f) => Some(find_entity(&run.model, &f, Layer::ServiceFeature).context("unknown feature")?),
                None => None,
            };
            let entries = msem_evolution::storyline(&run.model, s, f)?;
            if as_json {
                emit(None, &json(&entries))?;
            } else {
                emit(None, &msem_evolution::render_timeline(&run.model, &entries))?;
            }
        }
        Cmd::Serve { port, synthetic: n } => {
            if let Some(p) = port {
                cfg.port = p;
            }
            let run = run_pipeline(&cfg)?;
            let pool = match (&cfg.paths.pool, n) {
                (Some(p), _) if p.exists() => {
                    Pool::read_jsonl(std::io::BufReader::new(std::fs::File::open(p)?))?
                }
                (_, Some(n)) => simulated_pool(&synthetic::generate(n, cfg.seed), 20.min(n))?.0,
                _ => Pool::new(),
            };
            let extractor = load_extractor(&cfg)?.model;
            let addr = SocketAddr::from(([127, 0, 0, 1], cfg.port));
            let state = AppState::new(cfg, run.model, pool, extractor);
            tokio::runtime::Runtime::new()?.block_on(msem_gateway::serve(state, addr))?;
        }
    }
    Ok(())
}
