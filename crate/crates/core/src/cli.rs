//! Command-line interface: world generation, corpus generation,
//! training, evaluation and single-session reward traces.
//!
//! Exit codes: 0 success, 1 usage, 2 validation (malformed or
//! inconsistent inputs), 3 runtime failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{Algo, Config};
use crate::corpus::{generate_corpus, Corpus};
use crate::dialog::{Session, SessionOutcome};
use crate::domain::{sample_goal, synth_bundle, Bundle, SynthParams};
use crate::error::{GdplError, Result};
use crate::metrics::evaluate_session;
use crate::rng;
use crate::trainer::{self, Checkpoint};

#[derive(Parser)]
#[command(
    name = "gdpl",
    version,
    about = "Guided dialog policy learning on a synthetic multi-domain world"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world bundle (ontology, entity database,
    /// goal statistics).
    GenOntology {
        /// Seed for the world generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output bundle path.
        #[arg(long, default_value = "bundle.json")]
        out: PathBuf,
    },
    /// Roll out scripted-expert demonstration sessions against the
    /// simulator and write them as a corpus.
    GenCorpus {
        /// World bundle to play in.
        #[arg(long, default_value = "bundle.json")]
        bundle: PathBuf,
        /// Number of sessions to generate.
        #[arg(long, default_value_t = 2000)]
        sessions: usize,
        /// Expert imperfection rate (drop intended acts, add
        /// redundancy).
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        /// Seed for goals and expert noise.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output corpus path.
        #[arg(long, default_value = "corpus.jsonl")]
        out: PathBuf,
    },
    /// Train a dialog policy (optionally with a learned reward
    /// estimator) and log per-iteration metrics.
    Train {
        /// TOML configuration file; omitted sections use defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Algorithm override.
        #[arg(long)]
        algo: Option<String>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Total-iteration override.
        #[arg(long)]
        iterations: Option<usize>,
        /// World bundle override.
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Demonstration corpus override.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output directory override.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a trained checkpoint greedily on fresh goals.
    Eval {
        /// TOML configuration file (simulator and evaluation sections).
        #[arg(long)]
        config: Option<PathBuf>,
        /// World bundle.
        #[arg(long, default_value = "bundle.json")]
        bundle: PathBuf,
        /// Checkpoint to evaluate.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of evaluation goals (overrides config).
        #[arg(long)]
        goals: Option<usize>,
        /// Evaluation seed (overrides config).
        #[arg(long)]
        seed: Option<u64>,
        /// Write the full JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play one session and print it turn by turn with reward labels.
    Trace {
        /// TOML configuration file (simulator section).
        #[arg(long)]
        config: Option<PathBuf>,
        /// World bundle.
        #[arg(long, default_value = "bundle.json")]
        bundle: PathBuf,
        /// Checkpoint supplying the policy and reward estimator.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Who drives the system side.
        #[arg(long, value_enum, default_value_t = TraceMode::Policy)]
        mode: TraceMode,
        /// Expert imperfection rate (expert mode only).
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Seed for the traced session's goal and randomness.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the trace as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TraceMode {
    /// Greedy trained policy.
    Policy,
    /// Scripted expert, scored by the trained estimator.
    Expert,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenOntology { seed, out } => gen_ontology(seed, &out),
        Command::GenCorpus {
            bundle,
            sessions,
            epsilon,
            seed,
            out,
        } => gen_corpus(&bundle, sessions, epsilon, seed, &out),
        Command::Train {
            config,
            algo,
            seed,
            iterations,
            bundle,
            corpus,
            out_dir,
            resume,
        } => train(
            config.as_deref(),
            algo.as_deref(),
            seed,
            iterations,
            bundle,
            corpus,
            out_dir,
            resume,
        ),
        Command::Eval {
            config,
            bundle,
            checkpoint,
            goals,
            seed,
            out,
        } => eval(
            config.as_deref(),
            &bundle,
            &checkpoint,
            goals,
            seed,
            out.as_deref(),
        ),
        Command::Trace {
            config,
            bundle,
            checkpoint,
            mode,
            epsilon,
            seed,
            out,
        } => trace(
            config.as_deref(),
            &bundle,
            &checkpoint,
            mode,
            epsilon,
            seed,
            out.as_deref(),
        ),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn gen_ontology(seed: u64, out: &Path) -> Result<()> {
    let bundle = synth_bundle(seed, &SynthParams::default())?;
    bundle.save(out)?;
    let entities: usize = bundle.database.tables.values().map(|t| t.len()).sum();
    println!(
        "wrote {}: {} domains, {} act vocabulary, {} entities, hash {:016x}",
        out.display(),
        bundle.ontology.domains.len(),
        bundle.ontology.vocab_size(),
        entities,
        bundle.content_hash()
    );
    Ok(())
}

fn gen_corpus(bundle_path: &Path, sessions: usize, epsilon: f64, seed: u64, out: &Path) -> Result<()> {
    if sessions == 0 {
        return Err(GdplError::Usage("--sessions must be positive".into()));
    }
    let bundle = Bundle::load(bundle_path)?;
    let sim = crate::simulator::SimulatorConfig::default();
    let corpus = generate_corpus(&bundle, sim, sessions, epsilon, seed)?;
    corpus.save(out)?;
    let s = &corpus.header.stats;
    println!(
        "wrote {}: {} sessions, expert success {:.3}, inform F1 {:.3}, match {:.3}, mean turns {:.2}",
        out.display(),
        corpus.sessions.len(),
        s.success_rate,
        s.inform_f1,
        s.match_rate,
        s.mean_turns
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    config: Option<&Path>,
    algo: Option<&str>,
    seed: Option<u64>,
    iterations: Option<usize>,
    bundle: Option<PathBuf>,
    corpus: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    resume: bool,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(a) = algo {
        cfg.training.algo = Algo::parse(a)?;
    }
    if let Some(s) = seed {
        cfg.training.seed = s;
    }
    if let Some(n) = iterations {
        cfg.training.iterations = n;
    }
    if let Some(p) = bundle {
        cfg.paths.bundle = Some(p);
    }
    if let Some(p) = corpus {
        cfg.paths.corpus = Some(p);
    }
    if let Some(p) = out_dir {
        cfg.paths.out_dir = Some(p);
    }
    cfg.validate()?;

    let bundle_path = cfg
        .paths
        .bundle
        .clone()
        .unwrap_or_else(|| PathBuf::from("bundle.json"));
    let corpus_path = cfg
        .paths
        .corpus
        .clone()
        .unwrap_or_else(|| PathBuf::from("corpus.jsonl"));
    let out_dir = cfg.paths.out_dir.clone().unwrap_or_else(|| {
        PathBuf::from(format!(
            "runs/{}-seed{}",
            cfg.training.algo, cfg.training.seed
        ))
    });

    let bundle = Bundle::load(&bundle_path)?;
    let corpus = Corpus::load(&corpus_path, &bundle)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| GdplError::io(&out_dir, e))?;

    let ckpt_path = out_dir.join("checkpoint.json");
    let mut ckpt = if resume {
        let ckpt = Checkpoint::load(&ckpt_path)?;
        ckpt.check_bundle(&bundle)?;
        if ckpt.seed != cfg.training.seed {
            return Err(GdplError::Validation(format!(
                "checkpoint seed {} does not match configured {}",
                ckpt.seed, cfg.training.seed
            )));
        }
        ckpt
    } else {
        trainer::init_checkpoint(&bundle, &corpus, &cfg.training)?
    };

    let remaining = cfg.training.iterations.saturating_sub(ckpt.iteration);
    if remaining == 0 {
        println!(
            "checkpoint already at iteration {} (target {}); nothing to do",
            ckpt.iteration, cfg.training.iterations
        );
        return Ok(());
    }
    cfg.save(&out_dir.join("config.toml"))?;
    let rows = trainer::train(
        &bundle,
        &corpus,
        cfg.simulator,
        &cfg.training,
        &mut ckpt,
        &out_dir,
        remaining,
    )?;
    let last = rows.last().expect("at least one iteration ran");
    println!(
        "trained {} to iteration {}: success {:.3}, inform F1 {:.3}, match {:.3} (training rollouts)",
        cfg.training.algo, ckpt.iteration, last.success_rate, last.inform_f1, last.match_rate
    );
    Ok(())
}

fn eval(
    config: Option<&Path>,
    bundle_path: &Path,
    checkpoint: &Path,
    goals: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let goals = goals.unwrap_or(cfg.evaluation.goals);
    let seed = seed.unwrap_or(cfg.evaluation.seed);
    let bundle = Bundle::load(bundle_path)?;
    let ckpt = Checkpoint::load(checkpoint)?;
    ckpt.check_bundle(&bundle)?;
    let output = trainer::evaluate(&bundle, &ckpt, cfg.simulator, goals, seed)?;
    let a = &output.aggregate;
    println!(
        "{} @ iter {}: {} goals, success {:.3}, inform P {:.3} R {:.3} F1 {:.3}, match {:.3}, mean turns {:.2}",
        ckpt.algo,
        ckpt.iteration,
        a.sessions,
        a.success_rate,
        a.inform_precision,
        a.inform_recall,
        a.inform_f1,
        a.match_rate,
        a.mean_turns
    );
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&output)
            .map_err(|e| GdplError::Runtime(format!("report serialization: {e}")))?;
        std::fs::write(path, text + "\n").map_err(|e| GdplError::io(path, e))?;
        println!("wrote report to {}", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceTurn {
    user: Vec<String>,
    system: Vec<String>,
    reward: f64,
}

#[derive(Serialize)]
struct TraceReport {
    mode: String,
    outcome: String,
    exchanges: usize,
    total_return: f64,
    metrics: crate::metrics::SessionMetrics,
    turns: Vec<TraceTurn>,
}

fn outcome_name(outcome: SessionOutcome) -> &'static str {
    match outcome {
        SessionOutcome::Satisfied => "satisfied",
        SessionOutcome::MaxTurns => "turn-cap",
        SessionOutcome::Abandoned => "abandoned",
    }
}

fn trace(
    config: Option<&Path>,
    bundle_path: &Path,
    checkpoint: &Path,
    mode: TraceMode,
    epsilon: f64,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let bundle = Bundle::load(bundle_path)?;
    let ckpt = Checkpoint::load(checkpoint)?;
    ckpt.check_bundle(&bundle)?;
    let mut goal_rng = rng::stream(seed, "trace/goal");
    let goal = sample_goal(
        &bundle.ontology,
        &bundle.database,
        &bundle.goal_stats,
        &mut goal_rng,
    )?;
    let (session, rewards): (Session, Vec<f64>) = match mode {
        TraceMode::Policy => trainer::policy_trace(&bundle, &ckpt, cfg.simulator, goal, seed)?,
        TraceMode::Expert => {
            trainer::expert_trace(&bundle, &ckpt, cfg.simulator, goal, epsilon, seed)?
        }
    };
    let metrics = evaluate_session(&bundle, &session)?;

    println!("goal domains: {}", session.goal.domain_order.join(", "));
    for (i, (turn, reward)) in session.turns.iter().zip(&rewards).enumerate() {
        println!("exchange {}", i + 1);
        for act in &turn.user_acts {
            println!("  user:   {act}");
        }
        for act in &turn.system_acts {
            println!("  system: {act}");
        }
        println!("  reward: {reward:+.4}");
    }
    let total: f64 = rewards.iter().sum();
    println!(
        "outcome {}: success {}, inform F1 {:.3}, turns {}, return {:+.3}",
        outcome_name(session.outcome),
        metrics.success,
        metrics.f1(),
        session.exchanges(),
        total
    );

    if let Some(path) = out {
        let report = TraceReport {
            mode: match mode {
                TraceMode::Policy => "policy".into(),
                TraceMode::Expert => "expert".into(),
            },
            outcome: outcome_name(session.outcome).into(),
            exchanges: session.exchanges(),
            total_return: total,
            metrics,
            turns: session
                .turns
                .iter()
                .zip(&rewards)
                .map(|(t, r)| TraceTurn {
                    user: t.user_acts.iter().map(|a| a.to_string()).collect(),
                    system: t.system_acts.iter().map(|a| a.to_string()).collect(),
                    reward: *r,
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| GdplError::Runtime(format!("trace serialization: {e}")))?;
        std::fs::write(path, text + "\n").map_err(|e| GdplError::io(path, e))?;
        println!("wrote trace to {}", path.display());
    }
    Ok(())
}
