use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use byte_premium::compression::compressed_premiums;
use byte_premium::corpus::{load_bitext, load_multiparallel, sample_lines, MultiParallelCorpus};
use byte_premium::estimation::{
    format_value, multiparallel_ratios, pairwise_ratio, read_observations_csv, read_premium_csv,
    write_observations_csv, write_premium_csv, Measure, PremiumMap,
};
use byte_premium::fitting::{Descent, FitResult, Weighting};
use byte_premium::metrics::{byte_len, char_entropy, char_len, profile};
use byte_premium::registry::{
    Method, MonolingualEvidence, NovelEvidence, ParallelEvidence, Registry, BUNDLED_DIGITS,
};
use byte_premium::regression::{
    read_ground_truth_csv, records_from_multiparallel, records_from_tables, write_ground_truth_csv,
    GroundTruthRecord, RegressionConfig, RegressionFeatures, SourceDataset, DEFAULT_CLIP,
    DEFAULT_RIDGE,
};
use byte_premium::validation::{loo_validate, LooConfig, PredictorSuite, DEFAULT_SCRIPT_THRESHOLD};
use byte_premium::{
    fit_premiums, Error, FitConfig, FitMode, LanguageTag, PremiumTable, ScriptType, Variant,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use unicode_normalization::UnicodeNormalization;

/// Byte premiums: relative UTF-8 encoding cost of parallel text across languages.
#[derive(Parser, Debug)]
#[command(name = "byte-premium", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Premium table CSV to use instead of the bundled one.
    #[arg(long, global = true, value_name = "CSV")]
    premiums: Option<PathBuf>,
    /// Reference language that premiums are expressed against.
    #[arg(long, global = true, default_value = "eng_latn")]
    reference: LanguageTag,
    /// Round printed values to this many decimals (default: full precision).
    #[arg(long, global = true)]
    digits: Option<usize>,
    /// Unicode-normalize input text before counting. Off by default, so
    /// bytes are counted as distributed.
    #[arg(long, global = true, value_enum)]
    normalize: Option<Normalization>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Normalization {
    Nfc,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Premium of A relative to B.
    Lookup {
        a: LanguageTag,
        b: LanguageTag,
        #[command(flatten)]
        evidence: EvidenceArgs,
    },
    /// Size in bytes of content-matched text in another language.
    Convert {
        #[arg(long)]
        bytes: u64,
        #[arg(long)]
        from: LanguageTag,
        #[arg(long)]
        to: LanguageTag,
        #[command(flatten)]
        evidence: EvidenceArgs,
    },
    /// Premium of one line-aligned bitext, printed as an observation row.
    ComputePairwise {
        #[arg(long)]
        lang_a: LanguageTag,
        #[arg(long)]
        lang_b: LanguageTag,
        #[arg(long, value_name = "FILE")]
        text_a: PathBuf,
        #[arg(long, value_name = "FILE")]
        text_b: PathBuf,
        #[arg(long, value_enum, default_value_t = MeasureArg::Bytes)]
        measure: MeasureArg,
        #[arg(long)]
        max_segments: Option<usize>,
        /// Append the observation to this observations CSV.
        #[arg(long, value_name = "CSV")]
        output: Option<PathBuf>,
    },
    /// Per-language premiums of a multi-parallel TSV corpus.
    ComputeMultiparallel {
        corpus: PathBuf,
        /// Use only the first N rows.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, value_enum, default_value_t = MeasureArg::Bytes)]
        measure: MeasureArg,
        #[arg(long, value_name = "CSV")]
        output: Option<PathBuf>,
        /// Also write regression ground-truth records.
        #[arg(long, value_name = "CSV")]
        ground_truth: Option<PathBuf>,
        /// Source dataset recorded in ground-truth rows (nllb, flores, bible).
        #[arg(long, default_value = "nllb")]
        source: SourceDataset,
    },
    /// Assemble ground-truth records from premium and length-ratio tables
    /// (e.g. fitted from bitexts) plus one text file per language.
    GroundTruth {
        /// Byte premium table, e.g. the output of `fit`.
        #[arg(long, value_name = "CSV")]
        byte_premiums: PathBuf,
        /// Length-ratio table, e.g. `fit` on `compute-pairwise --measure chars` output.
        #[arg(long, value_name = "CSV")]
        length_ratios: PathBuf,
        /// Directory holding `<language>.txt` files, one segment per line.
        #[arg(long, value_name = "DIR")]
        texts: PathBuf,
        #[arg(long, default_value = "nllb")]
        source: SourceDataset,
        #[arg(long, value_name = "CSV")]
        output: Option<PathBuf>,
    },
    /// Fit one premium per language from pairwise observations.
    Fit {
        observations: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::RawMse)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = DescentArg::GaussNewton)]
        descent: DescentArg,
        /// Weight observations by segment count.
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long, value_name = "CSV")]
        output: Option<PathBuf>,
    },
    /// Fit length-ratio regressions (variants I, II, III) into a predictor suite.
    FitRegression {
        /// Ground-truth CSVs; languages in several are deduplicated NLLB > FLORES > Bible.
        #[arg(required = true)]
        ground_truth: Vec<PathBuf>,
        #[arg(long, value_name = "JSON")]
        output: PathBuf,
        #[command(flatten)]
        regression: RegressionArgs,
    },
    /// Predict a premium from monolingual statistics.
    Predict {
        #[arg(long, value_name = "JSON")]
        suite: PathBuf,
        /// Monolingual text, one segment per line.
        #[arg(long, value_name = "FILE", conflicts_with_all = ["entropy", "bytes_per_char"])]
        text: Option<PathBuf>,
        #[arg(long, requires = "bytes_per_char")]
        entropy: Option<f64>,
        #[arg(long, requires = "entropy")]
        bytes_per_char: Option<f64>,
        #[arg(long)]
        script_type: ScriptType,
        #[arg(long)]
        script: Option<String>,
        #[arg(long)]
        family: Option<String>,
    },
    /// Leave-one-out validation of the length-ratio regressions.
    Validate {
        /// Ground-truth CSVs; languages in several are deduplicated NLLB > FLORES > Bible.
        #[arg(required = true)]
        ground_truth: Vec<PathBuf>,
        /// Variants to evaluate (default: all).
        #[arg(long, value_delimiter = ',')]
        variants: Vec<Variant>,
        #[command(flatten)]
        regression: RegressionArgs,
        #[arg(long)]
        json: bool,
    },
    /// Premiums of gzip-compressed columns alongside uncompressed ones.
    CompressAnalyze {
        corpus: PathBuf,
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Rescale dataset language proportions by premium.
    Rescale {
        /// CSV with header `language,proportion`.
        proportions: PathBuf,
        #[command(flatten)]
        evidence: EvidenceArgs,
    },
}

#[derive(Args, Debug)]
struct EvidenceArgs {
    /// Language the evidence below describes (default: whichever requested
    /// language is not in the table).
    #[arg(long = "for", value_name = "TAG")]
    novel: Option<LanguageTag>,
    /// Novel-language side of a parallel text.
    #[arg(long, value_name = "FILE", requires_all = ["parallel_known", "parallel_known_text"])]
    parallel_text: Option<PathBuf>,
    #[arg(long, value_name = "TAG")]
    parallel_known: Option<LanguageTag>,
    /// Known-language side of the parallel text.
    #[arg(long, value_name = "FILE")]
    parallel_known_text: Option<PathBuf>,
    /// Monolingual text of the novel language.
    #[arg(long, value_name = "FILE", requires = "script_type")]
    mono_text: Option<PathBuf>,
    #[arg(long)]
    script_type: Option<ScriptType>,
    #[arg(long)]
    script: Option<String>,
    #[arg(long)]
    family: Option<String>,
    /// Predictor suite from `fit-regression`, used for monolingual text.
    #[arg(long, value_name = "JSON")]
    suite: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RegressionArgs {
    /// Bytes per character of the reference language (default: taken from
    /// its ground-truth record).
    #[arg(long)]
    reference_bpc: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SCRIPT_THRESHOLD)]
    script_threshold: usize,
    #[arg(long, default_value_t = DEFAULT_CLIP)]
    clip: f64,
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    ridge: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MeasureArg {
    Bytes,
    Chars,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    RawMse,
    LogLs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DescentArg {
    GaussNewton,
    Gradient,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Bytes => Measure::Bytes,
            MeasureArg::Chars => Measure::Chars,
        }
    }
}

enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

struct Context {
    global: Global,
}

impl Context {
    fn registry(&self) -> CliResult<Registry> {
        let mut registry = Registry::bundled()?;
        if let Some(path) = &self.global.premiums {
            let file = File::open(path).map_err(|e| io_error(path, e))?;
            registry = registry.with_table(PremiumTable::read_csv(file)?);
        }
        if registry.table().reference() != self.global.reference {
            let table = registry.table().rebase(&self.global.reference)?;
            registry = registry.with_table(table);
        }
        Ok(registry)
    }

    fn fmt(&self, v: f64) -> String {
        format_value(v, self.global.digits)
    }

    fn normalize(&self, text: &str) -> String {
        match self.global.normalize {
            Some(Normalization::Nfc) => text.nfc().collect(),
            None => text.to_string(),
        }
    }

    fn read_lines(&self, path: &Path) -> CliResult<Vec<String>> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Ok(text.lines().map(|l| self.normalize(l)).collect())
    }

    fn load_corpus(&self, path: &Path, sample: Option<usize>) -> CliResult<MultiParallelCorpus> {
        let mut corpus = load_multiparallel(path)?;
        if let Some(n) = sample {
            corpus = sample_lines(&corpus, n)?;
        }
        if self.global.normalize.is_some() {
            corpus = corpus.map_text(|t| self.normalize(t));
        }
        Ok(corpus)
    }

    fn evidence(
        &self,
        args: &EvidenceArgs,
        registry: &Registry,
        requested: &[LanguageTag],
    ) -> CliResult<BTreeMap<LanguageTag, NovelEvidence>> {
        let mut ev = NovelEvidence::default();
        if let Some(novel_path) = &args.parallel_text {
            let known = args.parallel_known.expect("required by clap");
            let known_path = args.parallel_known_text.as_ref().expect("required by clap");
            ev.parallel = Some(ParallelEvidence {
                known,
                novel_text: self.read_lines(novel_path)?,
                known_text: self.read_lines(known_path)?,
            });
        }
        if let Some(path) = &args.mono_text {
            ev.monolingual = Some(MonolingualEvidence {
                texts: self.read_lines(path)?,
                script_type: args.script_type.expect("required by clap"),
                script: args.script.clone(),
                family: args.family.clone(),
            });
        }
        let mut out = BTreeMap::new();
        if ev == NovelEvidence::default() {
            return Ok(out);
        }
        let target =
            match args.novel {
                Some(t) => t,
                None => {
                    let unknown: Vec<&LanguageTag> = requested
                        .iter()
                        .filter(|t| !registry.table().contains(t))
                        .collect();
                    match unknown.as_slice() {
                        [one] => **one,
                        [] => return Ok(out),
                        _ => return Err(CliError::Usage(
                            "several requested languages are not in the table; name the one the \
                             evidence describes with --for"
                                .into(),
                        )),
                    }
                }
            };
        out.insert(target, ev);
        Ok(out)
    }
}

fn io_error(path: &Path, source: io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_error(source: io::Error) -> CliError {
    CliError::Core(Error::Write {
        context: "writing output".into(),
        source,
    })
}

/// Opens `path` for writing, or stdout when absent.
fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Core(Error::Write {
                context: format!("creating {}", p.display()),
                source: e,
            })
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn load_suite(path: &Path) -> CliResult<PredictorSuite> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(PredictorSuite::from_json(&text)?)
}

fn load_ground_truth(paths: &[PathBuf]) -> CliResult<Vec<GroundTruthRecord>> {
    let mut records = Vec::new();
    for path in paths {
        let file = File::open(path).map_err(|e| io_error(path, e))?;
        records.extend(read_ground_truth_csv(file)?);
    }
    Ok(records)
}

fn read_table(path: &Path) -> CliResult<PremiumMap> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    Ok(read_premium_csv(file)?.premiums)
}

fn reference_bpc(
    records: &[GroundTruthRecord],
    reference: &LanguageTag,
    given: Option<f64>,
) -> CliResult<f64> {
    if let Some(v) = given {
        return Ok(v);
    }
    records
        .iter()
        .filter(|r| r.tag == *reference)
        .min_by_key(|r| r.source_dataset)
        .map(|r| r.bytes_per_char)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "{reference} has no ground-truth record; pass --reference-bpc"
            ))
        })
}

fn run(cli: Cli) -> CliResult {
    let ctx = Context { global: cli.global };
    match cli.command {
        Command::Lookup { a, b, evidence } => lookup(&ctx, a, b, &evidence),
        Command::Convert {
            bytes,
            from,
            to,
            evidence,
        } => convert(&ctx, bytes, from, to, &evidence),
        Command::ComputePairwise {
            lang_a,
            lang_b,
            text_a,
            text_b,
            measure,
            max_segments,
            output,
        } => compute_pairwise(
            &ctx,
            lang_a,
            lang_b,
            &text_a,
            &text_b,
            measure.into(),
            max_segments,
            output.as_deref(),
        ),
        Command::ComputeMultiparallel {
            corpus,
            sample,
            measure,
            output,
            ground_truth,
            source,
        } => compute_multiparallel(
            &ctx,
            &corpus,
            sample,
            measure.into(),
            output.as_deref(),
            ground_truth.as_deref(),
            source,
        ),
        Command::GroundTruth {
            byte_premiums,
            length_ratios,
            texts,
            source,
            output,
        } => ground_truth(
            &ctx,
            &byte_premiums,
            &length_ratios,
            &texts,
            source,
            output.as_deref(),
        ),
        Command::Fit {
            observations,
            mode,
            descent,
            weighted,
            max_iters,
            output,
        } => {
            let config = FitConfig {
                mode: match mode {
                    ModeArg::RawMse => FitMode::RawMse,
                    ModeArg::LogLs => FitMode::LogLs,
                },
                descent: match descent {
                    DescentArg::GaussNewton => Descent::GaussNewton,
                    DescentArg::Gradient => Descent::Gradient,
                },
                weighting: if weighted {
                    Weighting::SegmentCount
                } else {
                    Weighting::Uniform
                },
                max_iters,
                ..FitConfig::default()
            };
            fit(&ctx, &observations, &config, output.as_deref())
        }
        Command::FitRegression {
            ground_truth,
            output,
            regression,
        } => fit_regression(&ctx, &ground_truth, &output, &regression),
        Command::Predict {
            suite,
            text,
            entropy,
            bytes_per_char,
            script_type,
            script,
            family,
        } => {
            let suite = load_suite(&suite)?;
            let (entropy, bpc) = match (text, entropy, bytes_per_char) {
                (Some(path), _, _) => {
                    let lines = ctx.read_lines(&path)?;
                    let bytes: usize = lines.iter().map(|l| byte_len(l)).sum();
                    let chars: usize = lines.iter().map(|l| char_len(l)).sum();
                    if chars == 0 {
                        return Err(Error::InsufficientData(format!(
                            "{} has no text",
                            path.display()
                        ))
                        .into());
                    }
                    (char_entropy(&lines)?, bytes as f64 / chars as f64)
                }
                (None, Some(h), Some(b)) => (h, b),
                _ => {
                    return Err(CliError::Usage(
                        "give --text, or both --entropy and --bytes-per-char".into(),
                    ))
                }
            };
            let features = RegressionFeatures {
                char_entropy: entropy,
                script: script.map(|s| s.to_ascii_lowercase()),
                script_type,
                family,
            };
            let p = suite.predict(&features, bpc)?;
            for level in &p.unseen_levels {
                eprintln!("warning: unseen level {level} treated as the reference level");
            }
            let mut out = sink(None)?;
            writeln!(out, "premium\t{}", ctx.fmt(p.premium)).map_err(write_error)?;
            writeln!(out, "length_ratio\t{}", ctx.fmt(p.length_ratio)).map_err(write_error)?;
            writeln!(out, "variant\t{}", p.variant).map_err(write_error)?;
            writeln!(out, "reference\t{}", suite.reference).map_err(write_error)?;
            out.flush().map_err(write_error)
        }
        Command::Validate {
            ground_truth,
            variants,
            regression,
            json,
        } => validate(&ctx, &ground_truth, variants, &regression, json),
        Command::CompressAnalyze { corpus, sample } => {
            let corpus = ctx.load_corpus(&corpus, sample)?;
            let plain = multiparallel_ratios(&corpus, &ctx.global.reference, Measure::Bytes)?;
            let gz = compressed_premiums(&corpus, &ctx.global.reference)?;
            let mut out = sink(None)?;
            writeln!(out, "language,byte_premium,compressed_premium").map_err(write_error)?;
            for (tag, p) in &plain {
                writeln!(out, "{tag},{},{}", ctx.fmt(*p), ctx.fmt(gz[tag])).map_err(write_error)?;
            }
            out.flush().map_err(write_error)
        }
        Command::Rescale {
            proportions,
            evidence,
        } => rescale(&ctx, &proportions, &evidence),
    }
}

fn lookup(ctx: &Context, a: LanguageTag, b: LanguageTag, args: &EvidenceArgs) -> CliResult {
    let registry = with_suite(ctx.registry()?, args)?;
    let evidence = ctx.evidence(args, &registry, &[a, b])?;
    let r = registry.resolve_pair(&a, &b, &evidence)?;
    print_warnings(&r.warnings);
    if r.method != Method::Table {
        eprintln!("method: {}", r.method);
    }
    // Bundled values print as shipped unless a precision is requested.
    let digits = ctx.global.digits;
    let value = match (digits, r.method) {
        (None, Method::Table)
            if ctx.global.premiums.is_none() && b == registry.table().reference() =>
        {
            format_value(r.premium, Some(BUNDLED_DIGITS))
        }
        _ => format_value(r.premium, digits),
    };
    let mut out = sink(None)?;
    writeln!(out, "{value}").map_err(write_error)?;
    out.flush().map_err(write_error)
}

fn with_suite(registry: Registry, args: &EvidenceArgs) -> CliResult<Registry> {
    Ok(match &args.suite {
        Some(path) => registry.with_suite(load_suite(path)?),
        None => registry,
    })
}

fn convert(
    ctx: &Context,
    bytes: u64,
    from: LanguageTag,
    to: LanguageTag,
    args: &EvidenceArgs,
) -> CliResult {
    let registry = with_suite(ctx.registry()?, args)?;
    let evidence = ctx.evidence(args, &registry, &[from, to])?;
    let r = registry.resolve_pair(&from, &to, &evidence)?;
    print_warnings(&r.warnings);
    let n = registry.convert_size(bytes, &from, &to, &evidence)?;
    let mut out = sink(None)?;
    writeln!(out, "{n}").map_err(write_error)?;
    out.flush().map_err(write_error)
}

#[allow(clippy::too_many_arguments)]
fn compute_pairwise(
    ctx: &Context,
    lang_a: LanguageTag,
    lang_b: LanguageTag,
    text_a: &Path,
    text_b: &Path,
    measure: Measure,
    max_segments: Option<usize>,
    output: Option<&Path>,
) -> CliResult {
    let mut bitext = load_bitext(text_a, text_b, lang_a, lang_b, max_segments)?;
    if ctx.global.normalize.is_some() {
        bitext = bitext.map_text(|t| ctx.normalize(t));
    }
    let est = pairwise_ratio(&bitext, measure)?;
    if est.should_warn() {
        eprintln!(
            "warning: {} of {} segments skipped because one side is empty",
            est.skipped,
            bitext.len()
        );
    }
    let obs = est.observation;
    match output {
        Some(path) => {
            let mut all = if path.exists() {
                read_observations_csv(File::open(path).map_err(|e| io_error(path, e))?)?
            } else {
                Vec::new()
            };
            all.push(obs);
            write_observations_csv(sink(Some(path))?, &all)?;
        }
        None => {
            let mut out = sink(None)?;
            writeln!(out, "lang_a,lang_b,premium,n_segments").map_err(write_error)?;
            writeln!(
                out,
                "{},{},{},{}",
                obs.lang_a,
                obs.lang_b,
                ctx.fmt(obs.premium),
                obs.n_segments
            )
            .map_err(write_error)?;
            out.flush().map_err(write_error)?;
        }
    }
    Ok(())
}

fn compute_multiparallel(
    ctx: &Context,
    path: &Path,
    sample: Option<usize>,
    measure: Measure,
    output: Option<&Path>,
    ground_truth: Option<&Path>,
    source: SourceDataset,
) -> CliResult {
    let corpus = ctx.load_corpus(path, sample)?;
    let reference = ctx.global.reference;
    let values = multiparallel_ratios(&corpus, &reference, measure)?;
    let kind = match measure {
        Measure::Bytes => "multiparallel",
        Measure::Chars => "multiparallel-length-ratio",
    };
    let comment = format!(
        "source={kind} reference={reference} rows={}",
        corpus.num_rows()
    );
    let mut out = sink(output)?;
    write_premium_csv(&mut out, &values, &[comment], ctx.global.digits)?;
    out.flush().map_err(write_error)?;
    if let Some(gt) = ground_truth {
        let registry = Registry::bundled()?;
        let records =
            records_from_multiparallel(&corpus, &reference, source, |t| registry.family_of(t))?;
        let mut out = sink(Some(gt))?;
        write_ground_truth_csv(&mut out, &records)?;
        out.flush().map_err(write_error)?;
    }
    Ok(())
}

fn ground_truth(
    ctx: &Context,
    premiums_path: &Path,
    ratios_path: &Path,
    texts: &Path,
    source: SourceDataset,
    output: Option<&Path>,
) -> CliResult {
    let premiums = read_table(premiums_path)?;
    let ratios = read_table(ratios_path)?;
    let registry = Registry::bundled()?;
    let mut profiles = BTreeMap::new();
    for tag in premiums.keys() {
        let path = texts.join(format!("{tag}.txt"));
        if !path.exists() {
            continue;
        }
        let script_type = match registry.metadata(tag) {
            Some(m) => m.script_type,
            None => ScriptType::for_script(tag.script())
                .ok_or_else(|| Error::UnknownScript(tag.script_title()))?,
        };
        let lines = ctx.read_lines(&path)?;
        profiles.insert(
            *tag,
            profile(*tag, &lines, script_type, registry.family_of(tag))?,
        );
    }
    let (records, missing) = records_from_tables(&premiums, &ratios, &profiles, source, |t| {
        registry.family_of(t)
    });
    if !missing.is_empty() {
        let names: Vec<String> = missing.iter().map(ToString::to_string).collect();
        eprintln!(
            "warning: skipped {} languages lacking a length ratio or text: {}",
            missing.len(),
            names.join(", ")
        );
    }
    let mut out = sink(output)?;
    write_ground_truth_csv(&mut out, &records)?;
    out.flush().map_err(write_error)
}

fn fit(ctx: &Context, path: &Path, config: &FitConfig, output: Option<&Path>) -> CliResult {
    let observations = read_observations_csv(File::open(path).map_err(|e| io_error(path, e))?)?;
    let FitResult {
        table,
        objective,
        iterations,
        grad_norm,
    } = fit_premiums(&observations, &ctx.global.reference, config)?;
    eprintln!(
        "fitted {} languages from {} observations: objective {objective:e}, {iterations} iterations, gradient norm {grad_norm:e}",
        table.len(),
        observations.len()
    );
    let mut out = sink(output)?;
    table.write_csv(&mut out, ctx.global.digits)?;
    out.flush().map_err(write_error)
}

fn fit_regression(
    ctx: &Context,
    path: &[PathBuf],
    output: &Path,
    args: &RegressionArgs,
) -> CliResult {
    let records = load_ground_truth(path)?;
    let reference = ctx.global.reference;
    let ref_bpc = reference_bpc(&records, &reference, args.reference_bpc)?;
    let config = RegressionConfig {
        ridge: args.ridge,
        clip: args.clip,
    };
    let suite = PredictorSuite::fit(&records, reference, ref_bpc, args.script_threshold, &config)?;
    fs::write(output, suite.to_json()?).map_err(|e| {
        CliError::Core(Error::Write {
            context: format!("writing {}", output.display()),
            source: e,
        })
    })?;
    let variants: Vec<String> = suite.models.keys().map(ToString::to_string).collect();
    eprintln!(
        "fitted variants {} on {} records",
        variants.join(", "),
        records.len()
    );
    Ok(())
}

fn validate(
    ctx: &Context,
    path: &[PathBuf],
    variants: Vec<Variant>,
    args: &RegressionArgs,
    json: bool,
) -> CliResult {
    let records = load_ground_truth(path)?;
    let config = LooConfig {
        variants: if variants.is_empty() {
            Variant::ALL.to_vec()
        } else {
            variants
        },
        script_threshold: args.script_threshold,
        reference_bytes_per_char: reference_bpc(
            &records,
            &ctx.global.reference,
            args.reference_bpc,
        )?,
        regression: RegressionConfig {
            ridge: args.ridge,
            clip: args.clip,
        },
    };
    let report = loo_validate(&records, &config)?;
    let mut out = sink(None)?;
    if json {
        writeln!(out, "{}", report.to_json()?).map_err(write_error)?;
    } else {
        write!(out, "{}", report.to_table(ctx.global.digits.unwrap_or(3))).map_err(write_error)?;
    }
    out.flush().map_err(write_error)
}

fn rescale(ctx: &Context, path: &Path, args: &EvidenceArgs) -> CliResult {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    let mut proportions = BTreeMap::new();
    for row in reader.deserialize() {
        let (tag, p): (LanguageTag, f64) = row.map_err(Error::from)?;
        if proportions.insert(tag, p).is_some() {
            return Err(Error::DuplicateLanguage(tag).into());
        }
    }
    let registry = with_suite(ctx.registry()?, args)?;
    let keys: Vec<LanguageTag> = proportions.keys().copied().collect();
    let evidence = ctx.evidence(args, &registry, &keys)?;
    let rescaled = registry.rescale_proportions(&proportions, &evidence)?;
    let mut out = sink(None)?;
    writeln!(out, "language,proportion").map_err(write_error)?;
    for (tag, p) in &rescaled {
        writeln!(out, "{tag},{}", ctx.fmt(*p)).map_err(write_error)?;
    }
    out.flush().map_err(write_error)
}
