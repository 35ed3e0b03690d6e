use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use gazeswipe::dataio::{self, Frame, ImportReport};
use gazeswipe::eval::{self, MetricsSummary, Stats, SweepGrid, SweepRow};
use gazeswipe::synth::{self, SynthConfig};
use gazeswipe::{DecoderConfig, NgramCounts};
use serde::Serialize;

use crate::{models, Cli, Command, FrameArg, Outcome, ReplayCheck, SweepCheck};

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Decode { trace_file, record_id } => decode(cli, trace_file, record_id),
        Command::Replay { trace_file, csv, check } => replay(cli, trace_file, csv.as_deref(), check),
        Command::Sweep { trace_file, ivt_grid, eps_grid, min_pts_grid, csv, check } => {
            let grid = SweepGrid { ivt_thresholds: ivt_grid.clone(), dbscan_eps: eps_grid.clone(), dbscan_min_pts: min_pts_grid.clone() };
            sweep(cli, trace_file, &grid, csv.as_deref(), check)
        }
        Command::Synth { .. } => synth(cli),
        Command::Metrics { session_log, csv } => metrics(cli, session_log, csv.as_deref()),
        Command::Serve { host, port, ui_dir, log_dir } => serve(cli, host, *port, ui_dir.clone(), log_dir.clone()),
        Command::Import { source_dir, frame, px_per_mm, out } => import(cli, source_dir, *frame, *px_per_mm, out.as_deref()),
        Command::BuildNgrams { corpus, min_count, out } => build_ngrams(cli, corpus, *min_count, out.as_deref()),
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_traces(path: &Path) -> Result<Vec<dataio::TraceRecord>> {
    Ok(dataio::read_traces(path)?)
}

#[derive(Serialize)]
struct CandidateRow<'a> {
    rank: usize,
    word: &'a str,
    dtw_distance: f64,
    p_dist: f64,
    p_ng: f64,
    score: f64,
}

#[derive(Serialize)]
struct DecodeOutput<'a> {
    record_id: &'a str,
    intended_word: &'a str,
    latency_us: u64,
    considered: usize,
    fallback: bool,
    candidates: Vec<CandidateRow<'a>>,
}

fn decode(cli: &Cli, trace_file: &Path, record_id: &str) -> Result<Outcome> {
    let records = read_traces(trace_file)?;
    let record = records
        .iter()
        .find(|r| r.record_id == record_id)
        .ok_or_else(|| anyhow!("no record {record_id:?} in {}", trace_file.display()))?;
    let decoder = models::decoder(&cli.data, &cli.decoder)?;
    let ranking = decoder.decode_samples(&record.samples, &record.context_words())?;
    let out = DecodeOutput {
        record_id: &record.record_id,
        intended_word: &record.intended_word,
        latency_us: ranking.latency_us,
        considered: ranking.considered,
        fallback: ranking.fallback,
        candidates: ranking
            .candidates
            .iter()
            .enumerate()
            .map(|(i, c)| CandidateRow {
                rank: i + 1,
                word: &c.word,
                dtw_distance: c.dtw_distance,
                p_dist: c.p_dist,
                p_ng: c.p_ng,
                score: c.score,
            })
            .collect(),
    };
    if cli.json {
        return print_json(&out).map(|_| Outcome::Done);
    }
    println!("{:<4} {:<16} {:>10} {:>8} {:>10} {:>8}", "rank", "word", "dtw", "p_dist", "p_ng", "score");
    for c in &out.candidates {
        println!("{:<4} {:<16} {:>10.4} {:>8.4} {:>10.3e} {:>8.4}", c.rank, c.word, c.dtw_distance, c.p_dist, c.p_ng, c.score);
    }
    println!("intended: {}  latency: {} us  scored: {}", out.intended_word, out.latency_us, out.considered);
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct CheckReport {
    passed: bool,
    failures: Vec<String>,
}

impl CheckReport {
    fn new(failures: Vec<String>) -> Self {
        Self { passed: failures.is_empty(), failures }
    }

    fn outcome(self) -> Outcome {
        if self.passed {
            Outcome::Done
        } else {
            Outcome::CheckFailed(self.failures)
        }
    }
}

#[derive(Serialize)]
struct ReplayOutput<'a> {
    trace_file: &'a Path,
    config: DecoderConfig,
    overall: Stats,
    by_technique: &'a BTreeMap<String, Stats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<CheckReport>,
}

fn print_stats_header() {
    println!("{:<24} {:>6} {:>8} {:>8} {:>9} {:>10}", "technique", "n", "top1 %", "top4 %", "mean ms", "median ms");
}

fn print_stats(name: &str, s: &Stats) {
    println!("{:<24} {:>6} {:>8.1} {:>8.1} {:>9.3} {:>10.3}", name, s.n, s.top1, s.top4, s.mean_rt_ms, s.median_rt_ms);
}

fn replay(cli: &Cli, trace_file: &Path, csv: Option<&Path>, check: &ReplayCheck) -> Result<Outcome> {
    let records = read_traces(trace_file)?;
    if records.is_empty() {
        bail!("{} holds no records", trace_file.display());
    }
    let decoder = models::decoder(&cli.data, &cli.decoder)?;
    let report = eval::replay(&decoder, &records)?;
    if let Some(path) = csv {
        write_csv(path, &report.rows)?;
    }
    let check = check.check.then(|| {
        let s = &report.overall;
        let mut failures = Vec::new();
        if let Some(min) = check.min_top1.filter(|&m| s.top1 < m) {
            failures.push(format!("Top-1 {:.1}% < {min}%", s.top1));
        }
        if let Some(min) = check.min_top4.filter(|&m| s.top4 < m) {
            failures.push(format!("Top-4 {:.1}% < {min}%", s.top4));
        }
        if let Some(max) = check.max_mean_ms.filter(|&m| s.mean_rt_ms > m) {
            failures.push(format!("mean latency {:.3} ms > {max} ms", s.mean_rt_ms));
        }
        CheckReport::new(failures)
    });
    let out = ReplayOutput {
        trace_file,
        config: *decoder.config(),
        overall: report.overall,
        by_technique: &report.by_technique,
        check,
    };
    if cli.json {
        print_json(&out)?;
    } else {
        print_stats_header();
        for (name, s) in out.by_technique {
            print_stats(name, s);
        }
        print_stats("overall", &out.overall);
    }
    Ok(out.check.map_or(Outcome::Done, CheckReport::outcome))
}

#[derive(Serialize)]
struct SweepOutput {
    rows: Vec<SweepRow>,
    latency_ratio: f64,
    /// Largest Top-1 gain, in points, from the middle to the highest I-VT
    /// threshold at equal DBSCAN settings.
    saturation_gap_pp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<CheckReport>,
}

fn saturation_gap(rows: &[SweepRow], grid: &SweepGrid) -> Option<f64> {
    let mut thresholds = grid.ivt_thresholds.clone();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    if thresholds.len() < 2 {
        return None;
    }
    let (mid, top) = (thresholds[(thresholds.len() - 1) / 2], thresholds[thresholds.len() - 1]);
    rows.iter()
        .filter(|r| r.ivt_threshold == mid)
        .filter_map(|m| {
            let t = rows.iter().find(|r| {
                r.ivt_threshold == top && r.dbscan_eps == m.dbscan_eps && r.dbscan_min_pts == m.dbscan_min_pts
            })?;
            Some(t.top1 - m.top1)
        })
        .reduce(f64::max)
}

fn sweep(cli: &Cli, trace_file: &Path, grid: &SweepGrid, csv: Option<&Path>, check: &SweepCheck) -> Result<Outcome> {
    let records = read_traces(trace_file)?;
    if records.is_empty() {
        bail!("{} holds no records", trace_file.display());
    }
    let decoder = models::decoder(&cli.data, &cli.decoder)?;
    let rows = eval::sweep(&decoder, &records, grid)?;
    if let Some(path) = csv {
        write_csv(path, &rows)?;
    }
    let lat = rows.iter().map(|r| r.mean_rt_ms);
    let (lo, hi) = (lat.clone().fold(f64::INFINITY, f64::min), lat.fold(0.0, f64::max));
    let latency_ratio = if lo > 0.0 { hi / lo } else { 1.0 };
    let gap = saturation_gap(&rows, grid);
    let check = check.check.then(|| {
        let mut failures = Vec::new();
        if latency_ratio >= check.max_latency_ratio {
            failures.push(format!("latency ratio {latency_ratio:.2} >= {}", check.max_latency_ratio));
        }
        if let Some(g) = gap.filter(|&g| g > check.max_saturation_gap) {
            failures.push(format!("Top-1 gain {g:.1} pp at the highest threshold > {}", check.max_saturation_gap));
        }
        CheckReport::new(failures)
    });
    let out = SweepOutput { rows, latency_ratio, saturation_gap_pp: gap, check };
    if cli.json {
        print_json(&out)?;
    } else {
        println!("{:>8} {:>6} {:>7} {:>8} {:>8} {:>9}", "ivt", "eps", "minPts", "top1 %", "top4 %", "mean ms");
        for r in &out.rows {
            println!(
                "{:>8} {:>6.2} {:>7} {:>8.1} {:>8.1} {:>9.3}",
                r.ivt_threshold, r.dbscan_eps, r.dbscan_min_pts, r.top1, r.top4, r.mean_rt_ms
            );
        }
        println!("latency max/min: {:.2}", out.latency_ratio);
        if let Some(g) = out.saturation_gap_pp {
            println!("Top-1 gain at the highest threshold: {g:.1} pp");
        }
    }
    Ok(out.check.map_or(Outcome::Done, CheckReport::outcome))
}

#[derive(Serialize)]
struct SynthOutput<'a> {
    out: &'a Path,
    count: usize,
    seed: u64,
    distinct_words: usize,
    samples: usize,
    config: SynthConfig,
}

fn synth(cli: &Cli) -> Result<Outcome> {
    let Command::Synth {
        count,
        seed,
        noisy,
        jitter,
        sample_noise_mm,
        drift_mm,
        drift_fraction,
        dwell_ms,
        saccade_deg_s,
        top_words,
        out,
    } = &cli.command
    else {
        unreachable!()
    };
    let mut config = if *noisy { SynthConfig::noisy() } else { SynthConfig::default() };
    config.jitter_key_widths = jitter.unwrap_or(config.jitter_key_widths);
    config.sample_noise_mm = sample_noise_mm.unwrap_or(config.sample_noise_mm);
    config.drift_mm = drift_mm.unwrap_or(config.drift_mm);
    config.drift_fraction = drift_fraction.unwrap_or(config.drift_fraction);
    config.dwell_ms = dwell_ms.unwrap_or(config.dwell_ms);
    config.saccade_deg_s = saccade_deg_s.unwrap_or(config.saccade_deg_s);
    let layout = models::layout(&cli.data)?;
    let mut lexicon = models::lexicon(&cli.data)?;
    if let Some(n) = top_words {
        lexicon = lexicon.top_n(*n);
    }
    let records = synth::generate(&lexicon, &layout, *count, &config, *seed)?;
    match out {
        Some(path) => {
            let mut w = create(path)?;
            dataio::write_traces_to(&records, &mut w)?;
            w.flush()?;
            let distinct: std::collections::BTreeSet<&str> = records.iter().map(|r| r.intended_word.as_str()).collect();
            let summary = SynthOutput {
                out: path,
                count: records.len(),
                seed: *seed,
                distinct_words: distinct.len(),
                samples: records.iter().map(|r| r.samples.len()).sum(),
                config,
            };
            if cli.json {
                print_json(&summary)?;
            } else {
                println!("wrote {} traces ({} distinct words) to {}", summary.count, summary.distinct_words, path.display());
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            dataio::write_traces_to(&records, &mut stdout)?;
        }
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct TrialOutput<'a> {
    trial_id: &'a str,
    presented: &'a str,
    transcribed: &'a str,
    duration_s: f64,
    wpm: f64,
    ter: f64,
    correct: usize,
    incorrect_fixed: usize,
    incorrect_not_fixed: usize,
    first_match: Option<f64>,
    any_match: Option<f64>,
}

#[derive(Serialize)]
struct MetricsOutput<'a> {
    final_text: &'a str,
    trials: Vec<TrialOutput<'a>>,
    summary: &'a MetricsSummary,
}

fn metrics(cli: &Cli, log: &Path, csv: Option<&Path>) -> Result<Outcome> {
    let events = dataio::read_events(log)?;
    let engine = models::engine(&cli.data, &cli.decoder)?;
    let k = engine.decoder.config().top_k;
    let report = eval::session_metrics(engine, &events, k).map_err(|e| match e {
        eval::EvalError::Session { index, source } => anyhow!("{}:{}: {source}", log.display(), index + 1),
        eval::EvalError::Log { index, message } => anyhow!("{}:{}: {message}", log.display(), index + 1),
        other => other.into(),
    })?;
    let trials: Vec<TrialOutput> = report
        .trials
        .iter()
        .zip(&report.rows)
        .map(|(t, r)| TrialOutput {
            trial_id: &t.trial_id,
            presented: &t.presented,
            transcribed: &t.transcribed,
            duration_s: t.duration_s,
            wpm: r.wpm,
            ter: r.ter,
            correct: t.keystrokes.correct,
            incorrect_fixed: t.keystrokes.incorrect_fixed,
            incorrect_not_fixed: t.keystrokes.incorrect_not_fixed,
            first_match: r.first_match,
            any_match: r.any_match,
        })
        .collect();
    if let Some(path) = csv {
        write_csv(path, &trials)?;
    }
    let out = MetricsOutput { final_text: &report.final_text, trials, summary: &report.summary };
    if cli.json {
        return print_json(&out).map(|_| Outcome::Done);
    }
    println!("{:<12} {:>8} {:>7} {:>4} {:>4} {:>4} {:>7}", "trial", "wpm", "ter", "C", "IF", "INF", "first");
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.0}%", 100.0 * v));
    for t in &out.trials {
        println!(
            "{:<12} {:>8.2} {:>7.3} {:>4} {:>4} {:>4} {:>7}",
            t.trial_id, t.wpm, t.ter, t.correct, t.incorrect_fixed, t.incorrect_not_fixed, pct(t.first_match)
        );
    }
    let s = out.summary;
    let num = |v: Option<f64>, d: usize| v.map_or("-".to_string(), |v| format!("{v:.d$}"));
    println!(
        "trials {}  mean wpm {}  mean ter {}  swipes {}  first match {}  any match {}",
        s.trials,
        num(s.mean_wpm, 2),
        num(s.mean_ter, 3),
        s.swipes,
        pct(s.first_match),
        pct(s.any_match)
    );
    Ok(Outcome::Done)
}

fn serve(cli: &Cli, host: &str, port: u16, ui_dir: Option<PathBuf>, log_dir: Option<PathBuf>) -> Result<Outcome> {
    use gazeswipe_service::{Server, ServiceOptions};
    let addr = resolve(&format!("{host}:{port}"))?;
    let engine = models::engine(&cli.data, &cli.decoder)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let server = Server::bind(addr, engine, &ServiceOptions { ui_dir, log_dir }).await?;
        let local = server.local_addr()?;
        if cli.json {
            print_json(&serde_json::json!({ "listening": local.to_string() }))?;
        } else {
            println!("listening on http://{local} (socket at ws://{local}/ws)");
        }
        server
            .run_until(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(Outcome::Done)
    })
}

fn resolve(addr: &str) -> Result<std::net::SocketAddr> {
    use std::net::ToSocketAddrs;
    addr.to_socket_addrs().with_context(|| format!("resolving {addr}"))?.next().ok_or_else(|| anyhow!("cannot resolve {addr}"))
}

#[derive(Serialize)]
struct ImportOutput<'a> {
    out: &'a Path,
    frame: Frame,
    report: &'a ImportReport,
}

fn import(cli: &Cli, source: &Path, frame: FrameArg, px_per_mm: Option<f64>, out: Option<&Path>) -> Result<Outcome> {
    let frame = match (frame, px_per_mm) {
        (FrameArg::Mm, _) => Frame::Mm,
        (FrameArg::Normalized, _) => Frame::Normalized,
        (FrameArg::Pixels, Some(px)) if px > 0.0 => Frame::Pixels { px_per_mm: px },
        (FrameArg::Pixels, _) => bail!("--frame pixels needs a positive --px-per-mm"),
    };
    let layout = models::layout(&cli.data)?;
    let lexicon = models::lexicon(&cli.data).ok();
    let (records, report) = dataio::import_dataset(source, frame, &layout, lexicon.as_ref())?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| models::data_dir(&cli.data).join("imported/traces.jsonl"));
    let mut w = create(&out)?;
    dataio::write_traces_to(&records, &mut w)?;
    w.flush()?;
    if cli.json {
        print_json(&ImportOutput { out: &out, frame, report: &report })?;
    } else {
        println!("imported {} records ({} samples) from {} files into {}", report.records, report.samples, report.files, out.display());
        for (t, n) in &report.techniques {
            println!("  {t}: {n}");
        }
        if let Some(c) = report.word_coverage {
            println!("lexicon coverage: {:.1}% of {} distinct words", 100.0 * c, report.distinct_words);
        }
        if report.skipped_records > 0 {
            println!("skipped {} records with words outside a-z", report.skipped_records);
        }
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct NgramOutput<'a> {
    out: &'a Path,
    files: usize,
    tokens: u64,
    distinct_words: usize,
    bigrams: usize,
}

fn build_ngrams(cli: &Cli, corpus: &[PathBuf], min_count: u64, out: Option<&Path>) -> Result<Outcome> {
    let mut text = String::new();
    for path in corpus {
        text.push_str(&std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?);
        text.push('\n');
    }
    let mut counts = NgramCounts::from_text(&text);
    counts.bigrams.retain(|_, c| *c >= min_count);
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| models::data_dir(&cli.data).join("ngrams.tsv"));
    let mut w = create(&out)?;
    writeln!(w, "# Word bigram counts from {} file(s); minimum count {min_count}.", corpus.len())?;
    counts.write_bigrams(&mut w)?;
    w.flush()?;
    let summary = NgramOutput {
        out: &out,
        files: corpus.len(),
        tokens: counts.unigrams.values().sum(),
        distinct_words: counts.unigrams.len(),
        bigrams: counts.bigrams.len(),
    };
    if cli.json {
        print_json(&summary)?;
    } else {
        println!(
            "{} bigrams from {} tokens ({} distinct words) written to {}",
            summary.bigrams,
            summary.tokens,
            summary.distinct_words,
            out.display()
        );
    }
    Ok(Outcome::Done)
}
