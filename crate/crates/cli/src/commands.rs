use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use pivot_core::analysis::{analyze, emit_report, run_batch, AnalysisConfig, BatchConfig, FightinConfig, MomentTable, Prior};
use pivot_core::conversation::{
    apply_label, parse_corpus, pair_by_length, truncate_ending, write_corpus, ConversationError, DisengagementRules,
};
use pivot_core::demo::{render_demo, DemoConfig};
use pivot_core::measures::{calibrate, Thresholds};
use pivot_core::synthetic::{generate_corpus_with, GeneratorConfig, MovePolicy};
use pivot_core::{Conversation, Outcome};
use pivot_service::{router, serve, SessionStore, StoreConfig};
use serde::Serialize;

use crate::config::Config;
use crate::{Cli, Command, Preset, Steer};

const DEFAULT_BIND: &str = "127.0.0.1:8080";

pub fn run(cli: Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Label {
            input,
            output,
            phrases,
            no_question_rule,
        } => label(&input, &output, phrases, no_question_rule),
        Command::Truncate { input, output, turns } => truncate(&input, &output, turns),
        Command::Pair {
            input,
            output,
            corpus_output,
        } => pair(&input, &output, corpus_output.as_deref()),
        Command::Synth {
            seed,
            conversations,
            max_turns,
            preset,
            steer,
            strength,
            output,
            annotations,
        } => synth(seed, conversations, max_turns, preset, steer, strength, &output, annotations.as_deref()),
        Command::Score {
            input,
            output,
            calibration,
            range,
            no_ri,
            seed,
            lo,
            hi,
        } => {
            let batch = BatchConfig {
                params: config.params(Some(resolve_seed(seed, &config))),
                retry: config.retry(),
                enable_range: range,
                enable_ri: !no_ri,
                lo_pct: lo,
                hi_pct: hi,
                calibration: calibration.as_deref().map(read_json::<Thresholds>).transpose()?,
            };
            score(&config, &input, &output, &batch)
        }
        Command::Calibrate { table, output, lo, hi } => calibrate_table(&table, &output, lo, hi),
        Command::Analyze {
            table,
            output,
            calibration,
            bins,
            top_terms,
            prior_mass,
        } => {
            let analysis = AnalysisConfig {
                n_bins: bins,
                top_terms,
                fightin: FightinConfig {
                    prior: Prior::Informative { mass: prior_mass },
                    ..FightinConfig::default()
                },
            };
            report(&table, &output, calibration.as_deref(), &analysis)
        }
        Command::Demo { seed, conversations } => {
            let text = render_demo(&DemoConfig {
                seed,
                show: conversations,
                ..DemoConfig::default()
            })?;
            print!("{text}");
            Ok(())
        }
        Command::Serve { bind, seed } => {
            let seed = resolve_seed(seed, &config);
            run_service(&config, bind, seed)
        }
    }
}

fn resolve_seed(flag: Option<u64>, config: &Config) -> u64 {
    flag.or(config.sampling.seed).unwrap_or(0)
}

fn read_corpus(path: &Path) -> Result<Vec<Conversation>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_corpus(BufReader::new(file)).with_context(|| format!("reading corpus {}", path.display()))
}

fn save_corpus(path: &Path, corpus: &[Conversation]) -> Result<()> {
    let mut sink = BufWriter::new(create(path)?);
    write_corpus(&mut sink, corpus)?;
    sink.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut sink = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut sink, value)?;
    writeln!(sink)?;
    sink.flush()?;
    Ok(())
}

fn label(input: &Path, output: &Path, phrases: Vec<String>, no_question_rule: bool) -> Result<()> {
    let mut rules = DisengagementRules::default();
    if !phrases.is_empty() {
        rules.phrases = phrases;
    }
    rules.unanswered_question = !no_question_rule;
    let mut corpus = read_corpus(input)?;
    for conversation in &mut corpus {
        apply_label(conversation, &rules)?;
    }
    save_corpus(output, &corpus)?;
    let count = |o: Outcome| corpus.iter().filter(|c| c.outcome == o).count();
    eprintln!(
        "{} conversations: {} success, {} disengaged, {} unknown",
        corpus.len(),
        count(Outcome::Success),
        count(Outcome::Disengaged),
        count(Outcome::Unknown)
    );
    Ok(())
}

fn truncate(input: &Path, output: &Path, turns: usize) -> Result<()> {
    let corpus = read_corpus(input)?;
    let mut kept = Vec::with_capacity(corpus.len());
    let mut skipped = 0;
    for conversation in &corpus {
        match truncate_ending(conversation, turns) {
            Ok(c) => kept.push(c),
            Err(ConversationError::TooShort(id)) => {
                log::info!("skipping {id}: too short to truncate");
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    save_corpus(output, &kept)?;
    eprintln!("{} truncated, {skipped} too short and skipped", kept.len());
    Ok(())
}

#[derive(Serialize)]
struct PairRecord<'a> {
    success: &'a str,
    disengaged: &'a str,
    success_utterances: usize,
    disengaged_utterances: usize,
}

fn pair(input: &Path, output: &Path, corpus_output: Option<&Path>) -> Result<()> {
    let corpus = read_corpus(input)?;
    let (successes, failures): (Vec<_>, Vec<_>) = corpus
        .into_iter()
        .filter(|c| c.outcome != Outcome::Unknown)
        .partition(|c| c.outcome == Outcome::Success);
    let pairs = pair_by_length(&successes, &failures).context("pairing needs at least one success and one disengaged conversation")?;
    let mut sink = BufWriter::new(create(output)?);
    for (s, f) in &pairs {
        let record = PairRecord {
            success: &s.id,
            disengaged: &f.id,
            success_utterances: s.utterances.len(),
            disengaged_utterances: f.utterances.len(),
        };
        serde_json::to_writer(&mut sink, &record)?;
        writeln!(sink)?;
    }
    sink.flush()?;
    if let Some(path) = corpus_output {
        let paired: Vec<Conversation> = pairs.iter().flat_map(|(s, f)| [s.clone(), f.clone()]).collect();
        save_corpus(path, &paired)?;
    }
    let gap: usize = pairs
        .iter()
        .map(|(s, f)| s.utterances.len().abs_diff(f.utterances.len()))
        .sum();
    eprintln!("{} pairs, total length gap {gap}", pairs.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn synth(
    seed: u64,
    conversations: usize,
    max_turns: usize,
    preset: Preset,
    steer: Option<Steer>,
    strength: f64,
    output: &Path,
    annotations: Option<&Path>,
) -> Result<()> {
    let (params, mut generator) = match preset {
        Preset::Counseling => (crate::config::WorldPreset::Counseling.params(), GeneratorConfig::counseling()),
        Preset::Default => (crate::config::WorldPreset::Default.params(), GeneratorConfig::default()),
    };
    if let Some(steer) = steer {
        let toward = match steer {
            Steer::Success => Outcome::Success,
            Steer::Disengaged => Outcome::Disengaged,
        };
        generator.policy = MovePolicy::Steered { toward, strength };
    }
    let corpus = generate_corpus_with(seed, &params, &generator, conversations, max_turns)?;
    save_corpus(output, &corpus.conversations)?;
    if let Some(path) = annotations {
        write_json(path, &corpus.annotations)?;
    }
    let successes = corpus.conversations.iter().filter(|c| c.outcome == Outcome::Success).count();
    eprintln!(
        "{} conversations ({successes} success), {} moments",
        corpus.conversations.len(),
        corpus.annotations.len()
    );
    Ok(())
}

fn score(config: &Config, input: &Path, output: &Path, batch: &BatchConfig) -> Result<()> {
    let corpus = read_corpus(input)?;
    let backends = config.backends(batch.enable_range)?;
    let table = run_batch(&corpus, &backends, batch)?;
    write_json(output, &table)?;
    let failed = table.records.iter().filter(|r| r.error.is_some()).count();
    eprintln!("{} moments scored, {failed} failed", table.records.len() - failed);
    match &table.thresholds {
        Some(t) => eprintln!("thresholds: low <= {:.6}, high >= {:.6}", t.low_cut, t.high_cut),
        None => eprintln!("not enough scores to calibrate; every moment is labelled mid"),
    }
    Ok(())
}

fn calibrate_table(table: &Path, output: &Path, lo: f64, hi: f64) -> Result<()> {
    let table: MomentTable = read_json(table)?;
    let thresholds = calibrate(&table.piv_values(), lo, hi)?;
    write_json(output, &thresholds)?;
    eprintln!(
        "over {} scores: low <= {:.6} (p{lo}), high >= {:.6} (p{hi})",
        thresholds.n_reference, thresholds.low_cut, thresholds.high_cut
    );
    Ok(())
}

fn report(table: &Path, output: &Path, calibration: Option<&Path>, analysis: &AnalysisConfig) -> Result<()> {
    let mut table: MomentTable = read_json(table)?;
    table.validate()?;
    if let Some(path) = calibration {
        table.relabel(Some(read_json(path)?));
    }
    let bundle = analyze(&table, analysis)?;
    let files = emit_report(&table, &bundle, output)?;
    for file in files {
        println!("{}", file.display());
    }
    Ok(())
}

fn run_service(config: &Config, bind: Option<String>, seed: u64) -> Result<()> {
    let service = &config.service;
    let defaults = StoreConfig::default();
    let store_config = StoreConfig {
        params: config.params(Some(seed)),
        retry: config.retry(),
        workers: service.workers.unwrap_or(defaults.workers),
        max_manual_retries: service.max_manual_retries.unwrap_or(defaults.max_manual_retries),
        journal_dir: service.journal_dir.clone(),
        calibration_dir: service.calibration_dir.clone(),
    };
    if store_config.workers == 0 {
        bail!("[service] workers must be at least 1");
    }
    let bind = bind.or_else(|| service.bind.clone()).unwrap_or_else(|| DEFAULT_BIND.to_string());
    let store = Arc::new(SessionStore::open(config.backends(false)?, store_config)?);
    let app = router(store.clone(), service.token.clone());

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .with_context(|| format!("binding {bind}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        let shutdown = async {
            if let Err(e) = tokio::signal::ctrl_c().await {
                log::error!("cannot listen for ctrl-c: {e}");
                std::future::pending::<()>().await;
            }
        };
        serve(listener, app, shutdown).await?;
        anyhow::Ok(())
    })?;
    drop(store);
    Ok(())
}
