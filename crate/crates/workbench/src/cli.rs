//! Batch commands of the `dqi` binary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dqi_core::autofix::{autofix, SynonymLexicon};
use dqi_core::bands::BandSpec;
use dqi_core::config::{bands_from_toml, bands_to_toml, Config};
use dqi_core::corpus::{load_dataset, load_partition, Dataset, Format};
use dqi_core::engine::{compute_all, Component, DqiReport, Granularity, ValueMap};
use dqi_core::review::review_sample;
use dqi_core::splitkit::{
    compare_partitions, format_value, generation_file_name, per_sample_values, randomize_split,
    retune_from_errors, Ratios, DEFAULT_SENSITIVITY_MARGIN, DEFAULT_SHRINK,
};
use dqi_core::textprims::SimilarityProvider;
use dqi_core::viz::{viz, VizOptions};
use serde::Serialize;

use crate::session::{Draft, Session};

#[derive(Debug, Parser)]
#[command(name = "dqi", version, about = "Dataset quality workbench for premise/hypothesis corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Corpus file, `.jsonl` or `.tsv`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// TOML config; the bundled defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Word-vector text file for word similarity (defaults to lexical).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a corpus and write `report.json` and `report.csv`.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score the good and bad sides of a partition separately.
    Compare {
        #[command(flatten)]
        common: Common,
        /// `id,good|bad` CSV.
        #[arg(long)]
        membership: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Flag panel and dataset impact of adding one sample.
    Delta {
        #[command(flatten)]
        common: Common,
        /// JSON draft: premise, hypothesis, label, optional id/annotator_id.
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a sample's hypothesis toward green bands.
    Autofix {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sample: PathBuf,
        /// Synonym TSV; the bundled one is used when omitted.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        max_edits: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write per-sample values, one `<id>.json` per sample.
    Reports {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shrink green bands that mislabeled known-bad samples as good.
    Retune {
        /// CSV whose first column lists the ids of error samples.
        #[arg(long)]
        errors: PathBuf,
        /// Directory written by `dqi reports`.
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Band file to start from instead of the config's bands.
        #[arg(long)]
        bands: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SENSITIVITY_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = DEFAULT_SHRINK)]
        factor: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded train/dev/test split honoring annotator and premise groups.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the chart series of one component.
    Viz {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        component: Component,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long, default_value_t = Granularity::Words)]
        granularity: Granularity,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        address: String,
    },
}

struct Inputs {
    dataset: Dataset,
    config: Config,
    provider: SimilarityProvider,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::bundled()),
    }
}

fn load_inputs(c: &Common) -> Result<Inputs> {
    let config = load_config(c.config.as_deref())?;
    let dataset = load_dataset(&c.dataset, Format::from_path(&c.dataset))?;
    let provider = match &c.vectors {
        Some(p) => SimilarityProvider::load_vector_file(p)?,
        None => SimilarityProvider::lexical(),
    };
    Ok(Inputs {
        dataset,
        config,
        provider,
    })
}

fn load_lexicon(path: Option<&Path>) -> Result<SynonymLexicon> {
    match path {
        Some(p) => Ok(SynonymLexicon::load(p)?),
        None => Ok(SynonymLexicon::bundled().clone()),
    }
}

fn load_draft(path: &Path) -> Result<Draft> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read sample {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("sample {} is not a valid draft", path.display()))
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `component,scope,term,value` rows of a report.
pub fn report_csv(report: &DqiReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["component", "scope", "term", "value"]).expect("in-memory write");
    for (c, scope, term, v) in report.rows() {
        w.write_record([c, scope, term, format_value(v)]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn read_error_ids(path: &Path) -> Result<BTreeSet<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read errors file {}", path.display()))?;
    let mut ids = BTreeSet::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: bad record", path.display()))?;
        let Some(id) = rec.get(0).filter(|s| !s.is_empty()) else { continue };
        if n == 0 && id.eq_ignore_ascii_case("id") {
            continue;
        }
        ids.insert(id.to_string());
    }
    Ok(ids)
}

fn read_reports(dir: &Path) -> Result<BTreeMap<String, ValueMap>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).with_context(|| format!("cannot read reports directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let values: ValueMap =
            serde_json::from_str(&text).with_context(|| format!("{} is not a value map", path.display()))?;
        out.insert(id, values);
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { common, out } => {
            let i = load_inputs(&common)?;
            let report = compute_all(&i.dataset, &i.provider, &i.config.params)?;
            write_file(&out.join("report.json"), &to_json(&report))?;
            write_file(&out.join("report.csv"), &report_csv(&report))?;
        }
        Command::Compare { common, membership, out } => {
            let i = load_inputs(&common)?;
            let m = load_partition(&membership, &i.dataset)?;
            let cmp = compare_partitions(&i.dataset, &m, &i.provider, &i.config.params)?;
            write_file(&out.join("comparison.json"), &to_json(&cmp))?;
            write_file(&out.join("winners.csv"), &cmp.to_csv())?;
        }
        Command::Delta { common, sample, out } => {
            let i = load_inputs(&common)?;
            let draft = load_draft(&sample)?.into_sample("draft".into());
            draft.validate()?;
            let review = review_sample(&i.dataset, &draft, &i.provider, &i.config.params, &i.config.bands)?;
            emit(out.as_deref(), &to_json(&review))?;
        }
        Command::Autofix {
            common,
            sample,
            lexicon,
            max_edits,
            out,
        } => {
            let i = load_inputs(&common)?;
            let lexicon = load_lexicon(lexicon.as_deref())?;
            let draft = load_draft(&sample)?.into_sample("draft".into());
            draft.validate()?;
            let (fixed, trace) = autofix(
                &draft,
                &i.dataset,
                &i.provider,
                &i.config.params,
                &i.config.bands,
                &lexicon,
                max_edits,
            )?;
            emit(out.as_deref(), &to_json(&serde_json::json!({ "sample": fixed, "trace": trace })))?;
        }
        Command::Reports { common, out } => {
            let i = load_inputs(&common)?;
            let values = per_sample_values(&i.dataset, &i.provider, &i.config.params)?;
            for (id, v) in &values {
                if id.contains(['/', '\\']) || id.starts_with('.') {
                    bail!("sample id {id:?} cannot be used as a file name");
                }
                write_file(&out.join(format!("{id}.json")), &to_json(v))?;
            }
        }
        Command::Retune {
            errors,
            reports,
            config,
            bands,
            margin,
            factor,
            out,
        } => {
            let bands: BandSpec = match &bands {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("cannot read bands {}", p.display()))?;
                    bands_from_toml(&text, &p.display().to_string())?
                }
                None => load_config(config.as_deref())?.bands,
            };
            let ids = read_error_ids(&errors)?;
            let reports = read_reports(&reports)?;
            let outcome = retune_from_errors(&ids, &reports, &bands, margin, factor)?;
            let path = out.join(generation_file_name(outcome.bands.generation));
            write_file(&path, &bands_to_toml(&outcome.bands))?;
            print!(
                "{}",
                to_json(&serde_json::json!({
                    "sensitive": outcome.sensitive,
                    "generation": outcome.bands.generation,
                    "file": path.display().to_string(),
                }))
            );
        }
        Command::Split { common, seed, out } => {
            let i = load_inputs(&common)?;
            let a = randomize_split(&i.dataset, seed, Ratios::default())?;
            emit(out.as_deref(), &a.to_csv())?;
        }
        Command::Viz {
            common,
            component,
            bins,
            granularity,
            out,
        } => {
            let i = load_inputs(&common)?;
            if bins == 0 {
                bail!("--bins must be positive");
            }
            let opts = VizOptions {
                bins,
                granularity,
                focus: None,
            };
            let series = viz(component, &i.dataset, &i.provider, &i.config.params, &opts)?;
            emit(out.as_deref(), &to_json(&series))?;
        }
        Command::Serve {
            common,
            lexicon,
            address,
        } => {
            let i = load_inputs(&common)?;
            let session = Session::new(i.dataset, i.config, i.provider, load_lexicon(lexicon.as_deref())?);
            let rt = tokio::runtime::Runtime::new().context("cannot start async runtime")?;
            rt.block_on(crate::service::serve(session, &address))
                .with_context(|| format!("service on {address} failed"))?;
        }
    }
    Ok(())
}
