//! mtp2skill command line: convert MTPs to Turtle, validate and query the
//! result, simulate a PEA, and execute skills against it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mtp2skill_core::aml::{open_mtp, ContainerKind};
use mtp2skill_core::config::{load_config, LoadedConfig};
use mtp2skill_core::cq::{run_cq, validate, CqId};
use mtp2skill_core::executor::{invoke, resolve_skill, AwaitOutcome};
use mtp2skill_core::mapping::{map_document_with_rules, merge, sanitize, ConversionResult};
use mtp2skill_core::sim::{serve, SimOptions, SimServer};
use mtp2skill_core::wire::Value;
use mtp2skill_core::{AmlDocument, RdfGraph, Term};

const EXIT_OK: i32 = 0;
const EXIT_ERROR: i32 = 1;
const EXIT_WARNINGS: i32 = 2;

#[derive(Parser)]
#[command(name = "mtp2skill", version, about)]
struct Cli {
    /// Config file with table/template/rule overrides
    /// (falls back to $MTP2SKILL_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// More progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert one or more MTPs into a Turtle graph.
    Convert(ConvertArgs),
    /// Check a converted graph against its source MTP.
    Validate(ValidateArgs),
    /// Run a competency question against a graph.
    Query(QueryArgs),
    /// Serve a simulated PEA for an MTP.
    Simulate(SimulateArgs),
    /// Fire a skill transition against a running PEA.
    Execute(ExecuteArgs),
}

#[derive(Args)]
struct ConvertArgs {
    /// MTP files (.aml, .mtp or .zip). Several inputs are merged into one
    /// graph, each under `<base-iri>/<file-stem>`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    /// Base IRI for minted individuals.
    #[arg(long)]
    base_iri: String,

    /// Turtle output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write the per-class individual counts as JSON.
    #[arg(long)]
    stats_json: Option<PathBuf>,

    /// Exit 0 even when the conversion collected warnings.
    #[arg(long)]
    ignore_warnings: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Turtle graph produced by convert.
    graph: PathBuf,
    /// The MTP the graph was converted from.
    mtp: PathBuf,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct QueryArgs {
    /// Turtle graph to query.
    graph: PathBuf,
    /// Competency question id (CQ1..CQ9).
    #[arg(long)]
    cq: String,
    /// Slot bindings, e.g. --bind module=http://plant.example/mixer#Mixer
    /// or --bind value=64.
    #[arg(long = "bind", value_name = "NAME=VALUE")]
    bindings: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    /// The MTP whose address space to simulate.
    mtp: PathBuf,
    /// TCP port to listen on (0 picks a free port).
    #[arg(long)]
    port: u16,
}

#[derive(Args)]
struct ExecuteArgs {
    /// Turtle graph holding the skill model.
    graph: PathBuf,
    /// IRI of the skill to execute.
    #[arg(long)]
    skill: String,
    /// Transition to fire, e.g. Start.
    #[arg(long)]
    transition: String,
    /// Parameter writes before the command, e.g. --param ProcedureExt=2.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// host:port overriding the MTP-declared endpoint.
    #[arg(long)]
    endpoint: Option<String>,
    /// State to await instead of the transition's stable target.
    #[arg(long)]
    await_state: Option<String>,
    /// How long to wait for the target state.
    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    let config = load_cli_config(cli.config.as_deref(), cli.verbose)?;
    match cli.command {
        Command::Convert(args) => convert(args, &config, cli.verbose),
        Command::Validate(args) => validate_cmd(args, &config),
        Command::Query(args) => query_cmd(args),
        Command::Simulate(args) => simulate_cmd(args, &config),
        Command::Execute(args) => execute_cmd(args, &config),
    }
}

fn load_cli_config(path: Option<&Path>, verbose: u8) -> Result<LoadedConfig> {
    let path = match path {
        Some(path) => Some(path.to_path_buf()),
        None => std::env::var_os("MTP2SKILL_CONFIG").map(PathBuf::from),
    };
    match path {
        None => Ok(LoadedConfig::default()),
        Some(path) => {
            if verbose > 0 {
                eprintln!("using config {}", path.display());
            }
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading config {}", path.display()))?;
            load_config(&text).with_context(|| format!("loading config {}", path.display()))
        }
    }
}

fn read_document(path: &Path) -> Result<(AmlDocument, Vec<String>)> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let opened = open_mtp(&bytes, ContainerKind::Auto)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok((opened.document, opened.warnings))
}

fn read_graph(path: &Path) -> Result<RdfGraph> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    RdfGraph::parse_turtle(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Write via a temp file in the same directory, then rename into place.
fn write_atomically(path: &Path, content: &str) -> Result<()> {
    let directory = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut temp = directory.map(Path::to_path_buf).unwrap_or_default();
    temp.push(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".to_string()),
        std::process::id()
    ));
    std::fs::write(&temp, content).with_context(|| format!("writing {}", temp.display()))?;
    std::fs::rename(&temp, path)
        .with_context(|| format!("renaming {} to {}", temp.display(), path.display()))
}

fn convert(args: ConvertArgs, config: &LoadedConfig, verbose: u8) -> Result<i32> {
    let multiple = args.inputs.len() > 1;
    let mut results: Vec<ConversionResult> = Vec::new();
    for input in &args.inputs {
        let (document, container_warnings) = read_document(input)?;
        let base = if multiple {
            let stem = input
                .file_stem()
                .map(|s| sanitize(&s.to_string_lossy()))
                .unwrap_or_else(|| "input".to_string());
            format!("{}/{}", args.base_iri.trim_end_matches('/'), stem)
        } else {
            args.base_iri.clone()
        };
        if verbose > 0 {
            eprintln!("converting {} under <{base}>", input.display());
        }
        let mut result = map_document_with_rules(&document, &config.rules, &base, &config.skill)
            .with_context(|| format!("converting {}", input.display()))?;
        let mut warnings = container_warnings;
        warnings.append(&mut result.warnings);
        result.warnings = warnings;
        results.push(result);
    }

    let graph = if multiple {
        merge(&results.iter().map(|r| r.graph.clone()).collect::<Vec<_>>())?
    } else {
        results[0].graph.clone()
    };
    let warnings: Vec<&String> = results.iter().flat_map(|r| r.warnings.iter()).collect();
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }

    let turtle = graph.serialize_turtle();
    match &args.out {
        Some(path) => write_atomically(path, &turtle)?,
        None => print!("{turtle}"),
    }
    if let Some(path) = &args.stats_json {
        let mut stats: BTreeMap<String, usize> = BTreeMap::new();
        for result in &results {
            for (row, count) in &result.stats {
                *stats.entry(row.clone()).or_default() += count;
            }
        }
        let json = serde_json::to_string_pretty(&serde_json::json!({
            "individuals": stats,
            "triples": graph.len(),
            "warnings": warnings.len(),
        }))?;
        write_atomically(path, &json)?;
    }
    eprintln!(
        "{} triples from {} input(s), {} warning(s)",
        graph.len(),
        args.inputs.len(),
        warnings.len()
    );
    if !warnings.is_empty() && !args.ignore_warnings {
        return Ok(EXIT_WARNINGS);
    }
    Ok(EXIT_OK)
}

fn validate_cmd(args: ValidateArgs, config: &LoadedConfig) -> Result<i32> {
    let graph = read_graph(&args.graph)?;
    let (document, _) = read_document(&args.mtp)?;
    let result = ConversionResult {
        graph,
        stats: BTreeMap::new(),
        warnings: Vec::new(),
    };
    let report = validate(&document, &result, &config.skill);
    if args.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.render_text());
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_ERROR })
}

fn parse_binding_value(raw: &str) -> Term {
    if let Ok(v) = raw.parse::<i64>() {
        return Term::integer(v);
    }
    if raw.parse::<f64>().is_ok() {
        return Term::typed(raw, mtp2skill_core::rdf::XSD_DOUBLE);
    }
    if raw.contains("://") || raw.starts_with("urn:") {
        return Term::iri(raw);
    }
    Term::string(raw)
}

fn parse_pairs(pairs: &[String]) -> Result<Vec<(String, String)>> {
    pairs
        .iter()
        .map(|pair| {
            pair.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| anyhow!("expected NAME=VALUE, got {pair:?}"))
        })
        .collect()
}

fn query_cmd(args: QueryArgs) -> Result<i32> {
    let graph = read_graph(&args.graph)?;
    let id: CqId = args.cq.parse()?;
    let bindings: BTreeMap<String, Term> = parse_pairs(&args.bindings)?
        .into_iter()
        .map(|(name, value)| (name, parse_binding_value(&value)))
        .collect();
    let table = run_cq(&graph, id, &bindings)?;
    println!("{}", table.variables.join("\t"));
    for row in &table.rows {
        let cells: Vec<&str> = row.iter().map(|term| term.lexical()).collect();
        println!("{}", cells.join("\t"));
    }
    Ok(EXIT_OK)
}

fn simulate_cmd(args: SimulateArgs, config: &LoadedConfig) -> Result<i32> {
    let (document, _) = read_document(&args.mtp)?;
    let mut options = SimOptions::default();
    if let Some(dwell) = config.dwell {
        options.dwell = dwell;
    }
    let server = Arc::new(SimServer::with_options(&document, &config.skill, options)?);
    let handle = serve(server.clone(), &format!("127.0.0.1:{}", args.port))?;
    println!("listening on {}", handle.addr());
    println!(
        "declared endpoint {} is served here; {} nodes, services: {}",
        server.declared_endpoint(),
        server.node_count(),
        server.service_names().join(", ")
    );
    use std::io::Write;
    std::io::stdout().flush().ok();
    // Wall-clock automatics need periodic evaluation.
    loop {
        std::thread::sleep(Duration::from_millis(10));
        server.advance(Duration::ZERO);
    }
}

fn execute_cmd(args: ExecuteArgs, config: &LoadedConfig) -> Result<i32> {
    let graph = read_graph(&args.graph)?;
    let binding = resolve_skill(&graph, &args.skill)?;
    let params: BTreeMap<String, Value> = parse_pairs(&args.params)?
        .into_iter()
        .map(|(name, value)| {
            let value = value
                .parse::<i64>()
                .map(Value::Int)
                .or_else(|_| value.parse::<f64>().map(Value::Double))
                .map_err(|_| anyhow!("parameter {name} needs a numeric value, got {value:?}"))?;
            Ok((name, value))
        })
        .collect::<Result<_>>()?;

    let target = match &args.await_state {
        Some(state) => state.clone(),
        None => stable_target(config, &args.transition)?,
    };
    let mut handle = invoke(
        &binding,
        &args.transition,
        &params,
        args.endpoint.as_deref(),
    )?;
    let outcome = handle.await_state(&target, Duration::from_millis(args.timeout_ms))?;
    for entry in handle.events() {
        let state = entry.state.as_deref().unwrap_or("(unknown)");
        println!("seq={} value={} state={}", entry.seq, entry.value, state);
    }
    let code = match outcome {
        AwaitOutcome::Reached => {
            println!("reached {target}");
            EXIT_OK
        }
        AwaitOutcome::Timeout { last_observed } => {
            let last = last_observed
                .map(|e| format!("value {}", e.value))
                .unwrap_or_else(|| "no events".to_string());
            eprintln!("timed out waiting for {target}; last observed {last}");
            EXIT_ERROR
        }
        AwaitOutcome::Unexpected(value) => {
            eprintln!("observed value {value} outside the state table");
            EXIT_ERROR
        }
    };
    handle.close();
    Ok(code)
}

/// Where a transition ends up once the automatic follow-ups settle.
fn stable_target(config: &LoadedConfig, transition: &str) -> Result<String> {
    let template = &config.skill.template;
    let mut targets: Vec<&str> = template
        .transitions
        .iter()
        .filter(|t| t.name == transition)
        .map(|t| t.to.as_str())
        .collect();
    targets.sort();
    targets.dedup();
    let mut current = match targets.as_slice() {
        [] => bail!("transition {transition:?} is not in the template"),
        [single] => single.to_string(),
        many => bail!(
            "transition {transition:?} has several targets ({}); pass --await-state",
            many.join(", ")
        ),
    };
    for _ in 0..template.states.len() {
        match template.automatic_from(&current) {
            Some(t) => current = t.to.clone(),
            None => break,
        }
    }
    Ok(current)
}
