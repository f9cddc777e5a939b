use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use rankguard_core::confusion::{RepoId, RepoRegistry};
use rankguard_core::eval::{
    counterfactual_removed, label_scores, prevalence_from_records, stats_csv, stats_from_scores, threshold_sweep,
    verdict_records, verdicts_csv, Histogram, LabelScores, StatsRow, Sweep,
};
use rankguard_core::evasion::{Budgets, Simulator, Technique};
use rankguard_core::ingest::{
    enrich_snapshot, fetch_feed, fetch_package_metadata, fetch_reference_record, fetch_repo_metadata,
    load_osv_labels, parity_report, FeedKind, FetchPolicy, Fetcher, IngestError, Transport,
};
use rankguard_core::model::{
    load_corpus, load_labels, load_snapshots, merge_labels, Label, LabeledCorpus, PackageName, PackageSnapshot,
    RepoSnapshot, SnapshotRecord, Timestamp,
};
use rankguard_core::score::{score_breakdown_with_index, IndexView};
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::output::{csv_rows, emit, ReportDir};
use crate::{Cli, Command, Common, FeedArg, UsageError};

pub fn dispatch(cli: &Cli, network: Arc<dyn Transport>) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Score { snapshot, package, index } => score(common, snapshot, package, index.as_deref()),
        Command::Eval { corpus, index } => eval(common, corpus, index.as_deref()),
        Command::Sweep { corpus, index, min, max } => sweep(common, corpus, index.as_deref(), *min, *max),
        Command::Counterfactual { corpus, index } => counterfactual(common, corpus, index.as_deref()),
        Command::Evade {
            snapshot,
            package,
            full_stack,
            victim,
            plan,
            index,
        } => evade(
            common,
            snapshot,
            package,
            *full_stack,
            victim.as_deref(),
            plan.as_deref(),
            index.as_deref(),
        ),
        Command::Confusion { corpus, registry } => confusion(common, corpus, registry),
        Command::FetchFeed { kind, since_days } => {
            let fetcher = fetcher(common, network)?;
            fetch_feed_cmd(common, &fetcher, *kind, *since_days)
        }
        Command::FetchPackage {
            names,
            from_feed,
            names_file,
            with_repo,
            enrich,
            skip_missing,
        } => {
            let fetcher = fetcher(common, network)?;
            let names = gather_names(names, from_feed.as_deref(), names_file.as_deref())?;
            let opts = PackageFetch {
                with_repo: *with_repo,
                enrich: *enrich,
                skip_missing: *skip_missing,
            };
            fetch_packages(common, &fetcher, &names, opts)
        }
        Command::FetchRepo { url } => {
            let fetcher = fetcher(common, network)?;
            let repo = fetch_repo_metadata(url, &fetcher, common.now())?;
            emit(common.out.as_deref(), &json_line(&repo)?)
        }
        Command::FetchReference { name, snapshot } => {
            let fetcher = fetcher(common, network)?;
            fetch_reference_cmd(common, &fetcher, name, snapshot.as_deref())
        }
        Command::LabelsOsv { dir, ecosystem } => {
            let load = load_osv_labels(dir, ecosystem)?;
            info!(
                advisories = load.records.len(),
                labels = load.labels.len(),
                skipped = load.skipped,
                "loaded advisories"
            );
            emit(common.out.as_deref(), &json_lines(&load.labels)?)
        }
        Command::Label {
            snapshots,
            labels,
            assume_benign,
        } => label(common, snapshots, labels, *assume_benign),
    }
}

fn fetcher(common: &Common, network: Arc<dyn Transport>) -> Result<Fetcher> {
    if common.offline && common.fixtures.is_none() && common.cache.is_none() {
        return Err(UsageError("--offline needs --fixtures or --cache".into()).into());
    }
    let policy = FetchPolicy {
        rate_limit_per_sec: common.rate_limit,
        max_retries: common.max_retries,
        cache_dir: common.cache.clone(),
        fixtures_dir: common.fixtures.clone(),
        offline: common.offline,
        parallelism: common.parallelism,
        ..FetchPolicy::default()
    };
    Ok(Fetcher::new(policy, network))
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)? + "\n")
}

fn json_lines<T: Serialize>(values: &[T]) -> Result<String> {
    values.iter().map(json_line).collect()
}

fn load_index(path: Option<&Path>) -> Result<Option<IndexView>> {
    let Some(path) = path else { return Ok(None) };
    let records = load_snapshots(path).with_context(|| format!("loading index {}", path.display()))?;
    Ok(Some(
        records
            .iter()
            .filter_map(|r| {
                r.package
                    .latest_release()
                    .map(|rel| (r.package.normalized_name.as_str().to_string(), rel.version_text.clone()))
            })
            .collect(),
    ))
}

fn find_record(records: &[SnapshotRecord], package: &str) -> Result<SnapshotRecord> {
    let name = PackageName::new(package).map_err(|e| UsageError(e.to_string()))?;
    records
        .iter()
        .find(|r| r.package.normalized_name == name)
        .cloned()
        .ok_or_else(|| anyhow!("package {name} not found in snapshot file"))
}

fn load_corpus_at(path: &Path, now: Timestamp) -> Result<LabeledCorpus> {
    load_corpus(path, now).with_context(|| format!("loading corpus {}", path.display()))
}

fn score(common: &Common, snapshot: &Path, package: &str, index: Option<&Path>) -> Result<()> {
    let records = load_snapshots(snapshot).with_context(|| format!("loading {}", snapshot.display()))?;
    let record = find_record(&records, package)?;
    let index = load_index(index)?;
    let b = score_breakdown_with_index(&record.package, record.repo.as_ref(), common.now(), index.as_ref());
    let rows = b
        .iter()
        .map(|(m, v)| [m.to_string(), v.to_string()])
        .chain(std::iter::once(["total".to_string(), b.total.to_string()]));
    emit(common.out.as_deref(), &csv_rows(&["metric", "value"], rows))
}

struct Evaluation {
    scores: LabelScores,
    stats: Vec<StatsRow>,
}

fn evaluate(corpus: &LabeledCorpus, index: Option<&IndexView>) -> Evaluation {
    let scores = label_scores(corpus, index);
    let stats = stats_from_scores(&scores);
    Evaluation { scores, stats }
}

fn print_stats(title: &str, stats: &[StatsRow]) {
    println!("{title}");
    for row in stats {
        println!("  {} (n={})", row.display_row(), row.count);
    }
}

fn write_evaluation(dir: &ReportDir, e: &Evaluation, prefix: &str) -> Result<()> {
    dir.write(&format!("{prefix}distribution.csv"), &Histogram::from_scores(&e.scores).to_csv())?;
    dir.write(&format!("{prefix}stats.csv"), &stats_csv(&e.stats))
}

fn eval(common: &Common, corpus: &Path, index: Option<&Path>) -> Result<()> {
    let corpus = load_corpus_at(corpus, common.now())?;
    let index = load_index(index)?;
    let e = evaluate(&corpus, index.as_ref());
    match &common.out {
        Some(out) => {
            write_evaluation(&ReportDir::create(out)?, &e, "")?;
            print_stats("score summary", &e.stats);
            Ok(())
        }
        None => emit(None, &stats_csv(&e.stats)),
    }
}

fn best_line(sweep: &Sweep) -> String {
    match &sweep.best {
        Some(b) => format!(
            "best threshold={} f1={:.4} precision={:.4} recall={:.4} tp={} fp={} tn={} fn={}",
            b.threshold, b.f1, b.precision, b.recall, b.tp, b.fp, b.tn, b.fn_
        ),
        None => "no thresholds evaluated".to_string(),
    }
}

fn sweep(common: &Common, corpus: &Path, index: Option<&Path>, min: i64, max: i64) -> Result<()> {
    if min > max {
        return Err(UsageError(format!("--min {min} exceeds --max {max}")).into());
    }
    let corpus = load_corpus_at(corpus, common.now())?;
    let index = load_index(index)?;
    let s = threshold_sweep(&label_scores(&corpus, index.as_ref()), min..=max);
    emit(common.out.as_deref(), &s.to_csv())?;
    if common.out.is_some() {
        println!("{}", best_line(&s));
    } else {
        eprintln!("{}", best_line(&s));
    }
    Ok(())
}

fn malicious_mean(stats: &[StatsRow]) -> Option<f64> {
    stats
        .iter()
        .find(|r| r.label == rankguard_core::model::Verdict::Malicious)
        .map(|r| r.mean)
}

fn counterfactual(common: &Common, corpus: &Path, index: Option<&Path>) -> Result<()> {
    let corpus = load_corpus_at(corpus, common.now())?;
    let index = load_index(index)?;
    let before = evaluate(&corpus, index.as_ref());
    let after = evaluate(&counterfactual_removed(&corpus), index.as_ref());
    let Some(out) = &common.out else {
        return emit(None, &stats_csv(&after.stats));
    };
    let dir = ReportDir::create(out)?;
    write_evaluation(&dir, &before, "observed_")?;
    write_evaluation(&dir, &after, "")?;
    let s = threshold_sweep(&after.scores, rankguard_core::eval::DEFAULT_SWEEP_RANGE);
    dir.write("sweep.csv", &s.to_csv())?;
    print_stats("observed", &before.stats);
    print_stats("malicious marked removed", &after.stats);
    if let (Some(b), Some(a)) = (malicious_mean(&before.stats), malicious_mean(&after.stats)) {
        println!("malicious mean shift {:+.4}", a - b);
    }
    println!("{}", best_line(&s));
    Ok(())
}

fn find_victim(records: &[SnapshotRecord], url: &str) -> Result<RepoSnapshot> {
    let id = RepoId::parse(url).ok_or_else(|| UsageError(format!("not a repository URL: {url}")))?;
    records
        .iter()
        .filter_map(|r| r.repo.as_ref())
        .find(|repo| RepoId::parse(&repo.url).is_some_and(|r| r == id))
        .cloned()
        .ok_or_else(|| anyhow!("victim repository {} not found in snapshot file", id.slug()))
}

fn evade(
    common: &Common,
    snapshot: &Path,
    package: &str,
    full_stack: bool,
    victim: Option<&str>,
    plan: Option<&Path>,
    index: Option<&Path>,
) -> Result<()> {
    if !full_stack && plan.is_none() {
        return Err(UsageError("evade needs --full-stack or --plan".into()).into());
    }
    let records = load_snapshots(snapshot).with_context(|| format!("loading {}", snapshot.display()))?;
    let record = find_record(&records, package)?;
    let techniques: Vec<Technique> = match (full_stack, plan) {
        (false, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing plan {}", path.display()))?
        }
        _ => {
            let url = victim.ok_or_else(|| UsageError("--full-stack needs --victim".into()))?;
            Technique::full_stack(find_victim(&records, url)?, Budgets::default())
        }
    };
    let mut sim = Simulator::new(common.now());
    if let Some(index) = load_index(index)? {
        sim = sim.with_index(index);
    }
    let (_, _, report) = sim.plan(&record.package, record.repo.as_ref(), &techniques);
    emit(common.out.as_deref(), &report.to_csv())?;
    let summary = format!(
        "{}: {} -> {} ({} of {} steps applied)",
        record.package.normalized_name,
        report.initial_score,
        report.final_score,
        report.steps.iter().filter(|s| s.applied).count(),
        report.steps.len()
    );
    if common.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn confusion(common: &Common, corpus: &Path, registry: &Path) -> Result<()> {
    let corpus = load_corpus_at(corpus, common.now())?;
    let registry =
        RepoRegistry::load(registry).with_context(|| format!("loading registry {}", registry.display()))?;
    let records = verdict_records(&corpus, &registry);
    let prevalence = prevalence_from_records(&records);
    match &common.out {
        Some(out) => {
            let dir = ReportDir::create(out)?;
            dir.write("verdicts.csv", &verdicts_csv(&records))?;
            dir.write("prevalence.csv", &prevalence.to_csv())?;
            println!(
                "{} of {} malicious packages claim another project's repository",
                prevalence.total, prevalence.malicious
            );
            Ok(())
        }
        None => emit(None, &prevalence.to_csv()),
    }
}

fn fetch_feed_cmd(common: &Common, fetcher: &Fetcher, kind: FeedArg, since_days: i64) -> Result<()> {
    if since_days < 0 {
        return Err(UsageError("--since-days must not be negative".into()).into());
    }
    let kind = match kind {
        FeedArg::NewPackages => FeedKind::NewPackages,
        FeedArg::NewReleases => FeedKind::NewReleases,
    };
    let cutoff = common.now() - chrono::Duration::days(since_days);
    let entries = fetch_feed(kind, cutoff, fetcher)?;
    info!(entries = entries.len(), "feed fetched");
    let mut w = csv::Writer::from_writer(Vec::new());
    if entries.is_empty() {
        w.write_record(["name", "version", "published_at", "feed_kind"])?;
    }
    for e in &entries {
        w.serialize(e)?;
    }
    emit(common.out.as_deref(), &String::from_utf8(w.into_inner()?)?)
}

#[derive(Deserialize)]
struct FeedRow {
    name: String,
}

/// Feed names first, then the names file, then positional names; repeats
/// (after normalization) are dropped.
fn gather_names(positional: &[String], feed: Option<&Path>, names_file: Option<&Path>) -> Result<Vec<String>> {
    let mut raw = Vec::new();
    if let Some(path) = feed {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        for row in r.deserialize::<FeedRow>() {
            raw.push(row.with_context(|| format!("parsing {}", path.display()))?.name);
        }
    }
    if let Some(path) = names_file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        raw.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from),
        );
    }
    raw.extend(positional.iter().cloned());
    if raw.is_empty() {
        return Err(UsageError("no package names given".into()).into());
    }
    let mut seen = HashSet::new();
    let mut names = Vec::new();
    for name in raw {
        let normalized = PackageName::new(&name).map_err(|e| UsageError(e.to_string()))?;
        if seen.insert(normalized) {
            names.push(name);
        }
    }
    Ok(names)
}

#[derive(Clone, Copy)]
struct PackageFetch {
    with_repo: bool,
    enrich: bool,
    skip_missing: bool,
}

fn fetch_one(name: &str, fetcher: &Fetcher, now: Timestamp, opts: PackageFetch) -> Result<Option<SnapshotRecord>> {
    let mut pkg = match fetch_package_metadata(name, fetcher, now) {
        Ok(p) => p,
        Err(IngestError::NotFound(what)) if opts.skip_missing => {
            warn!("skipping {name}: {what} not found");
            return Ok(None);
        }
        Err(e) => return Err(anyhow::Error::new(e).context(format!("fetching package {name}"))),
    };
    if opts.enrich {
        match fetch_reference_record(pkg.normalized_name.as_str(), fetcher) {
            Ok(record) => enrich_snapshot(&mut pkg, &record),
            Err(IngestError::NotFound(_)) => info!("no reference record for {name}"),
            Err(e) => return Err(anyhow::Error::new(e).context(format!("fetching reference record for {name}"))),
        }
    }
    let repo = if opts.with_repo { fetch_claimed_repo(&pkg, fetcher, now)? } else { None };
    Ok(Some(SnapshotRecord::new(pkg, repo)))
}

/// Missing or unsupported repositories leave the snapshot without one.
fn fetch_claimed_repo(pkg: &PackageSnapshot, fetcher: &Fetcher, now: Timestamp) -> Result<Option<RepoSnapshot>> {
    let Some(url) = pkg.repo_url.as_deref() else { return Ok(None) };
    match fetch_repo_metadata(url, fetcher, now) {
        Ok(repo) => Ok(Some(repo)),
        Err(e @ (IngestError::NotFound(_) | IngestError::Unsupported(_))) => {
            warn!("{}: repository unavailable: {e}", pkg.normalized_name);
            Ok(None)
        }
        Err(e) => Err(anyhow::Error::new(e).context(format!("fetching repository {url}"))),
    }
}

fn fetch_packages(common: &Common, fetcher: &Fetcher, names: &[String], opts: PackageFetch) -> Result<()> {
    let now = common.now();
    let results = fetcher.map_bounded(names, |name| fetch_one(name, fetcher, now, opts));
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    info!(requested = names.len(), fetched = records.len(), "packages fetched");
    emit(common.out.as_deref(), &json_lines(&records)?)
}

#[derive(Serialize)]
struct ReferenceOutput<'a> {
    record: &'a rankguard_core::ingest::ReferenceProjectRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    parity: Option<rankguard_core::ingest::ParityReport>,
}

fn fetch_reference_cmd(common: &Common, fetcher: &Fetcher, name: &str, snapshot: Option<&Path>) -> Result<()> {
    let record = fetch_reference_record(name, fetcher)?;
    let parity = match snapshot {
        Some(path) => {
            let records = load_snapshots(path).with_context(|| format!("loading {}", path.display()))?;
            let local = find_record(&records, name)?;
            let ours = score_breakdown_with_index(&local.package, local.repo.as_ref(), common.now(), None);
            let report = parity_report(&record, &ours);
            eprintln!("{name}: {}", report.verdict());
            Some(report)
        }
        None => None,
    };
    let out = ReferenceOutput { record: &record, parity };
    emit(common.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

#[derive(Serialize)]
struct CorpusLine<'a> {
    package: &'a PackageSnapshot,
    repo: Option<&'a RepoSnapshot>,
    label: &'a Label,
}

fn label(common: &Common, snapshots: &Path, labels: &Path, assume_benign: bool) -> Result<()> {
    let records = load_snapshots(snapshots).with_context(|| format!("loading {}", snapshots.display()))?;
    let labels = load_labels(labels).with_context(|| format!("loading {}", labels.display()))?;
    let merged = merge_labels(&records, &labels, common.now(), assume_benign)?;
    info!(
        matched = merged.matched,
        assumed_benign = merged.assumed_benign,
        excluded = merged.excluded,
        "labels merged"
    );
    let lines: Vec<CorpusLine> = merged
        .corpus
        .entries
        .iter()
        .map(|e| CorpusLine {
            package: &e.package,
            repo: e.repo.as_ref(),
            label: &e.label,
        })
        .collect();
    emit(common.out.as_deref(), &json_lines(&lines)?)
}

