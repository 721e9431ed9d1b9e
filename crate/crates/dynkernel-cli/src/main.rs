use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use dynkernel::engine::{Engine, EngineConfig, EngineError, METRICS_SCHEMA};
use dynkernel::kernelplug::{synthesis_size, synthesize_representatives, KernelError, Problem, RepresentativeStore};
use dynkernel::stream::{aggregate, format_stream, generate, parse_stream, GenKind, Update};
use dynkernel::verify::{opt, validate_decomposition, OPT_LIMIT};

#[derive(Parser)]
#[command(name = "dynkernel", version, about = "Dynamic protrusion decompositions and kernels for sparse graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Feed an update stream to the engine and emit per-update metrics.
    Run(RunArgs),
    /// Generate a deterministic update stream.
    Gen(GenArgs),
    /// Aggregate work units per update over one or more streams.
    Bench(BenchArgs),
    /// Synthesize a representative store by enumeration.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Adhesion bound (also the semigood parameter).
    #[arg(long, default_value_t = 15)]
    alpha: usize,
    /// Internal treewidth bound for merges.
    #[arg(long, default_value_t = 2)]
    omega: i32,
    /// Minimum chip-group volume; defaults to 2^(omega+2).
    #[arg(long)]
    s1: Option<usize>,
    #[arg(long, default_value_t = 64)]
    s2: usize,
    /// Boundary bound for chips; defaults to omega.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 2)]
    kappa_hat: usize,
    /// Maximum |E|/|V| before the density tripwire fires.
    #[arg(long, default_value_t = 6.0)]
    density: f64,
    /// Ceiling on the root change size per update.
    #[arg(long, default_value_t = 1 << 20)]
    max_change: usize,
    /// Problem plugin maintained alongside the decomposition (vc or ds).
    #[arg(long, value_parser = parse_problem)]
    plugin: Option<Problem>,
    /// Representative store file produced by `synth`.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Stream file, or - for stdin.
    #[arg(default_value = "-")]
    stream: String,
    #[command(flatten)]
    engine: EngineArgs,
    /// Verify every invariant after each update.
    #[arg(long)]
    paranoid: bool,
    /// Write the kernel delta protocol to this file.
    #[arg(long)]
    kernel_out: Option<PathBuf>,
    /// Write metrics here instead of stdout.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// grid, random-planar-incremental, bounded-degree-tree-plus or mixed-insert-delete.
    kind: String,
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Stream files.
    streams: Vec<PathBuf>,
    /// Generate streams of this kind instead of reading files.
    #[arg(long)]
    gen: Option<String>,
    /// Comma-separated sizes for generated streams.
    #[arg(long, value_delimiter = ',', default_values_t = [256usize, 1024, 4096])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    engine: EngineArgs,
    /// Fail when avg work of the largest bucket exceeds this multiple of the smallest.
    #[arg(long, default_value_t = 4.0)]
    ceiling: f64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_problem)]
    plugin: Problem,
    #[arg(long, default_value_t = 3)]
    t_max: usize,
    #[arg(long, default_value_t = 6)]
    n_max: usize,
    /// Maximum number of candidate graphs to enumerate.
    #[arg(long, default_value_t = 1 << 22)]
    budget: u64,
    #[arg(long, short)]
    out: PathBuf,
}

fn parse_problem(s: &str) -> Result<Problem, String> {
    Problem::parse(s).ok_or_else(|| format!("unknown plugin '{s}' (expected vc or ds)"))
}

#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Invariant(anyhow::Error),
    Budget(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Invariant(_) => 2,
            Failure::Budget(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn engine_failure(idx: usize, line: usize, u: &Update, e: EngineError) -> Failure {
    let err = anyhow::anyhow!("update {idx} (line {line}, '{u}'): {e}");
    match e {
        EngineError::Invariant(_) => Failure::Invariant(err),
        EngineError::ChangeCeiling { .. } => Failure::Budget(err),
        _ => Failure::Input(err),
    }
}

fn build_config(a: &EngineArgs, paranoid: bool) -> Result<EngineConfig, Failure> {
    let store = match &a.store {
        None => None,
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let st = RepresentativeStore::from_text(&text).with_context(|| format!("parsing {}", p.display()))?;
            if Some(st.problem) != a.plugin {
                return Err(Failure::Input(anyhow::anyhow!("store is for {} but the plugin is {:?}", st.problem.name(), a.plugin.map(Problem::name))));
            }
            Some(Arc::new(st))
        }
    };
    let cfg = EngineConfig {
        alpha: a.alpha,
        omega: a.omega,
        s1: a.s1.unwrap_or(1 << (a.omega.max(0) + 2)),
        s2: a.s2,
        k: a.k.unwrap_or(a.omega.max(0) as usize),
        kappa_hat: a.kappa_hat,
        paranoid,
        plugin: a.plugin,
        store,
        density: a.density,
        max_change: a.max_change,
    };
    cfg.validate().map_err(|e| Failure::Input(e.into()))?;
    Ok(cfg)
}

fn read_input(path: &str) -> Result<String, Failure> {
    let mut s = String::new();
    if path == "-" {
        io::stdin().read_to_string(&mut s)?;
    } else {
        s = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    }
    Ok(s)
}

fn header(cfg: &EngineConfig) -> serde_json::Value {
    serde_json::json!({
        "schema": METRICS_SCHEMA,
        "header": true,
        "alpha": cfg.alpha,
        "omega": cfg.omega,
        "s1": cfg.s1,
        "s2": cfg.s2,
        "k": cfg.k,
        "kappa_hat": cfg.kappa_hat,
        "density": cfg.density,
        "plugin": cfg.plugin.map(Problem::name),
        "paranoid": cfg.paranoid,
    })
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let text = read_input(&a.stream)?;
    let updates = parse_stream(&text).map_err(|e| Failure::Input(e.into()))?;
    let cfg = build_config(&a.engine, a.paranoid)?;
    let mut out: Box<dyn Write> = match &a.metrics_out {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut kout = match &a.kernel_out {
        Some(p) => Some(BufWriter::new(fs::File::create(p)?)),
        None => None,
    };
    if kout.is_some() && cfg.plugin.is_none() {
        return Err(Failure::Input(anyhow::anyhow!("--kernel-out needs --plugin")));
    }
    writeln!(out, "{}", header(&cfg))?;
    let paranoid = cfg.paranoid;
    let mut engine = Engine::new(cfg).map_err(|e| Failure::Input(e.into()))?;
    for (idx, (line, u)) in updates.iter().enumerate() {
        let rep = u.apply(&mut engine).map_err(|e| engine_failure(idx, *line, u, e))?;
        if paranoid {
            validate_decomposition(&engine)
                .into_result()
                .map_err(|m| Failure::Invariant(anyhow::anyhow!("update {idx} (line {line}, '{u}'): {m}")))?;
        }
        let m = engine.metrics(idx, u.op_name(), &rep);
        writeln!(out, "{}", serde_json::to_string(&m).context("serializing metrics")?)?;
        if let Some(k) = kout.as_mut() {
            writeln!(k, "# {idx} {u}")?;
            for op in &rep.kernel {
                writeln!(k, "{op}")?;
            }
        }
    }
    if let (Some(k), Some(kernel)) = (kout.as_mut(), engine.kernel()) {
        let g = kernel.graph();
        let mut line = format!("# final vertices={} edges={} delta={}", g.num_vertices(), g.num_edges(), kernel.delta());
        let p = engine.config().plugin.expect("checked above");
        if g.num_vertices() <= OPT_LIMIT && engine.graph().num_vertices() <= OPT_LIMIT {
            if let (Ok(ok), Ok(og)) = (opt(p, &g), opt(p, engine.graph())) {
                line.push_str(&format!(" opt_kernel={ok} opt_graph={og}"));
            }
        }
        writeln!(k, "{line}")?;
        k.flush()?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let kind = GenKind::parse(&a.kind).ok_or_else(|| {
        let names: Vec<&str> = GenKind::ALL.iter().map(|k| k.name()).collect();
        anyhow::anyhow!("unknown kind '{}' (expected one of {})", a.kind, names.join(", "))
    })?;
    let text = format_stream(&generate(kind, a.n, a.seed));
    match a.out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let mut streams: Vec<(String, Vec<Update>)> = Vec::new();
    for p in &a.streams {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let ups = parse_stream(&text).with_context(|| p.display().to_string())?;
        streams.push((p.display().to_string(), ups.into_iter().map(|x| x.1).collect()));
    }
    if let Some(k) = &a.gen {
        let kind = GenKind::parse(k).ok_or_else(|| anyhow::anyhow!("unknown kind '{k}'"))?;
        for &n in &a.sizes {
            streams.push((format!("{}-{n}", kind.name()), generate(kind, n, a.seed)));
        }
    }
    if streams.is_empty() {
        return Err(Failure::Input(anyhow::anyhow!("no streams given")));
    }
    let cfg = build_config(&a.engine, false)?;
    let results = dynkernel::par::map(&streams, |(name, ups)| {
        let mut e = Engine::new(cfg.clone()).map_err(|e| format!("{name}: {e}"))?;
        let mut works = Vec::with_capacity(ups.len());
        let mut peak = 0;
        for (i, u) in ups.iter().enumerate() {
            let r = u.apply(&mut e).map_err(|err| format!("{name}: update {i} ('{u}'): {err}"))?;
            peak = peak.max(e.graph().num_vertices());
            works.push(r.work);
        }
        Ok::<_, String>((peak, works))
    });
    let mut samples = Vec::new();
    for r in results {
        let (peak, works) = r.map_err(|m| Failure::Input(anyhow::anyhow!(m)))?;
        samples.extend(works.into_iter().map(|w| (peak, w)));
    }
    let report = aggregate(&samples);
    print!("{}", report.to_table());
    let (lo, hi) = (report.buckets.first().unwrap(), report.buckets.last().unwrap());
    let ratio = if lo.avg_work > 0.0 { hi.avg_work / lo.avg_work } else { 1.0 };
    println!("# ratio {ratio:.4} (2^{} vs 2^{}) ceiling {}", hi.log2n, lo.log2n, a.ceiling);
    if ratio >= a.ceiling {
        return Err(Failure::Budget(anyhow::anyhow!("work ratio {ratio:.3} reaches the ceiling {}", a.ceiling)));
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), Failure> {
    let st = synthesize_representatives(a.plugin, a.t_max, a.n_max, a.budget).map_err(|e| match e {
        KernelError::BudgetExceeded { .. } => Failure::Budget(e.into()),
        e => Failure::Input(e.into()),
    })?;
    st.self_check().map_err(|m| Failure::Invariant(anyhow::anyhow!("self-check failed: {m}")))?;
    fs::write(&a.out, st.to_text()).with_context(|| format!("writing {}", a.out.display()))?;
    println!("plugin {} t_max {} n_max {} enumerated {}", a.plugin.name(), a.t_max, a.n_max, synthesis_size(a.t_max, a.n_max));
    println!("classes {}", st.len());
    for (t, size) in st.max_sizes() {
        println!("t {t} max_representative_vertices {size}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Synth(a) => cmd_synth(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(e) | Failure::Invariant(e) | Failure::Budget(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}
