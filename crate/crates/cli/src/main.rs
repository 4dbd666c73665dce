use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use treeinherit::bench::{run_bench, write_bench_csv, BenchmarkSpec};
use treeinherit::costmodel::{cost_table, fig5_table, Shape, Variant};
use treeinherit::data::{generate_multiplexor, generate_parity, load_csv, split_folds, ClassColumn, Dataset};
use treeinherit::evolve::{evolve, AccuracyUnit, Engine, EvolutionConfig};
use treeinherit::tree::TreeFile;
use treeinherit::RunReport64;

#[derive(Parser)]
#[command(name = "treeinherit", version, about = "Evolve decision trees with incremental fitness re-evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a tree and write the per-generation report.
    Evolve(EvolveArgs),
    /// Run the full and incremental engines side by side over a grid.
    Bench(BenchArgs),
    /// Emit cost-model tables.
    Costmodel(CostArgs),
    /// Write a synthetic dataset as CSV.
    GenData(GenArgs),
    /// Pretty-print a saved tree.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    data: Option<PathBuf>,
    /// Class column name (default: last column).
    #[arg(long, requires = "data")]
    class_column: Option<String>,
    /// multiplexor[-A] or parity[-B]; defaults are A=3 and B=4.
    #[arg(long)]
    synthetic: Option<String>,
}

#[derive(Args)]
struct XArgs {
    /// Constant x.
    #[arg(long, conflicts_with_all = ["x_start", "x_end"])]
    x: Option<f64>,
    #[arg(long, requires = "x_end")]
    x_start: Option<f64>,
    #[arg(long, requires = "x_start")]
    x_end: Option<f64>,
}

impl XArgs {
    fn schedule(&self) -> (f64, f64) {
        let d = EvolutionConfig::default();
        match (self.x, self.x_start, self.x_end) {
            (Some(x), _, _) => (x, x),
            (None, Some(a), Some(b)) => (a, b),
            _ => (d.x_start, d.x_end),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Old,
    New,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Count,
    Fraction,
}

impl From<UnitArg> for AccuracyUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Count => AccuracyUnit::Count,
            UnitArg::Fraction => AccuracyUnit::Fraction,
        }
    }
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 100)]
    gens: usize,
    #[arg(long, default_value_t = 100)]
    pop: usize,
    #[arg(long, default_value_t = 0.5)]
    mutation: f64,
    #[arg(long, default_value_t = 1.0)]
    crossover: f64,
    #[command(flatten)]
    x: XArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "new")]
    engine: EngineArg,
    #[arg(long, default_value_t = 1)]
    elitism: usize,
    /// Cross-validate with K folds instead of training on everything.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, value_enum, default_value = "count")]
    accuracy_unit: UnitArg,
    /// Report CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to save the best tree.
    #[arg(long)]
    tree_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Grid points (generations = population).
    #[arg(long, value_delimiter = ',', default_value = "100,200,300,400,500,600,700,800")]
    grid: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    mutation: f64,
    #[command(flatten)]
    x: XArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    elitism: usize,
    #[arg(long, value_enum, default_value = "count")]
    accuracy_unit: UnitArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Complete,
    Linear,
    Weighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Exact,
    Bound,
    Refined,
    All,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, value_enum, default_value = "complete")]
    shape: ShapeArg,
    #[arg(long, default_value_t = 1)]
    k_min: u32,
    #[arg(long, default_value_t = 10)]
    k_max: u32,
    #[arg(long, value_enum, default_value = "all")]
    variant: VariantArg,
    /// Emit the refined savings curves of both shapes instead.
    #[arg(long)]
    fig5: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Multiplexor,
    Parity,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long, default_value_t = 3)]
    address_bits: usize,
    #[arg(long, default_value_t = 4)]
    bits: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    tree: PathBuf,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn synthetic(spec: &str) -> Result<(String, Dataset)> {
    let (name, param) = match spec.split_once('-') {
        Some((n, p)) => (n, Some(p.parse::<usize>().with_context(|| format!("bad size in {spec:?}"))?)),
        None => (spec, None),
    };
    let ds = match name {
        "multiplexor" => generate_multiplexor(param.unwrap_or(3))?,
        "parity" => generate_parity(param.unwrap_or(4))?,
        _ => bail!("unknown synthetic dataset {spec:?} (expected multiplexor[-A] or parity[-B])"),
    };
    Ok((name.to_string(), ds))
}

fn dataset(args: &DataArgs) -> Result<(String, Dataset)> {
    if let Some(spec) = &args.synthetic {
        return synthetic(spec);
    }
    let path = args.data.as_ref().expect("clap enforces one source");
    let class = match &args.class_column {
        Some(c) => ClassColumn::Name(c.clone()),
        None => ClassColumn::Last,
    };
    let ds = load_csv(path, &class, &HashMap::new()).with_context(|| format!("loading {}", path.display()))?;
    let label = Path::new(path).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((label, ds))
}

fn cmd_evolve(a: EvolveArgs) -> Result<()> {
    let (_, ds) = dataset(&a.data)?;
    let (x_start, x_end) = a.x.schedule();
    let config = EvolutionConfig {
        population_size: a.pop,
        generations: a.gens,
        mutation_rate: a.mutation,
        crossover_rate: a.crossover,
        x_start,
        x_end,
        seed: a.seed,
        engine: match a.engine {
            EngineArg::Old => Engine::Full,
            EngineArg::New => Engine::Incremental,
        },
        elitism: a.elitism,
        accuracy_unit: a.accuracy_unit.into(),
    };
    config.validate()?;

    if let Some(k) = a.folds {
        let folds = split_folds(&ds, k, a.seed)?;
        let mut w = csv_writer(&a.out)?;
        w.write_record(["fold", "train_accuracy", "test_accuracy", "size"])?;
        for (i, fold) in folds.iter().enumerate() {
            let train = ds.subset(&fold.train);
            let report: RunReport64 = evolve(&config, &train)?;
            let tree = &report.best.tree;
            let hits = fold.test.iter().filter(|&&id| {
                let inst = ds.instance(id);
                tree.classify(inst) == inst.class
            });
            let test_acc = hits.count() as f64 / fold.test.len() as f64;
            let train_acc = report.best.correct() as f64 / train.len() as f64;
            w.write_record([i.to_string(), format!("{train_acc:.6}"), format!("{test_acc:.6}"), report.best.size().to_string()])?;
            eprintln!("fold {i}: train {train_acc:.4} test {test_acc:.4} size {}", report.best.size());
        }
        w.flush()?;
        return Ok(());
    }

    let report: RunReport64 = evolve(&config, &ds)?;
    report.write_csv(output(&a.out)?)?;
    if let Some(path) = &a.tree_out {
        TreeFile::new(&report.best.tree, &ds)
            .save(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let c = report.total_counters();
    eprintln!(
        "best payoff {:.6}, accuracy {}/{}, size {}; {} checks, {} reclassified",
        report.best.payoff,
        report.best.correct(),
        ds.len(),
        report.best.size(),
        c.node_instance_checks,
        c.instances_reclassified
    );
    Ok(())
}

fn csv_writer(path: &Option<PathBuf>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(output(path)?))
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let (label, ds) = dataset(&a.data)?;
    let (x_start, x_end) = a.x.schedule();
    let mut spec = BenchmarkSpec::new(label, a.grid);
    spec.mutation_rate = a.mutation;
    spec.x_start = x_start;
    spec.x_end = x_end;
    spec.seed = a.seed;
    spec.repetitions = a.reps;
    spec.elitism = a.elitism;
    spec.accuracy_unit = a.accuracy_unit.into();
    let rows = run_bench(&spec, &ds)?;
    write_bench_csv(&rows, output(&a.out)?)?;
    Ok(())
}

fn cmd_costmodel(a: CostArgs) -> Result<()> {
    let out = output(&a.out)?;
    if a.fig5 {
        fig5_table::<f64>(a.k_min, a.k_max)?.write_csv(out)?;
        return Ok(());
    }
    let shape = match a.shape {
        ShapeArg::Complete => Shape::Complete,
        ShapeArg::Linear => Shape::Linear,
        ShapeArg::Weighted => Shape::WeightedLinear,
    };
    let variant = match a.variant {
        VariantArg::Exact => Variant::Exact,
        VariantArg::Bound => Variant::Bound,
        VariantArg::Refined => Variant::Refined,
        VariantArg::All => Variant::All,
    };
    cost_table::<f64>(shape, variant, a.k_min, a.k_max)?.write_csv(out)?;
    Ok(())
}

fn cmd_gen_data(a: GenArgs) -> Result<()> {
    let ds = match a.kind {
        GenKind::Multiplexor => generate_multiplexor(a.address_bits)?,
        GenKind::Parity => generate_parity(a.bits)?,
    };
    ds.write_csv(output(&a.out)?)?;
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> Result<()> {
    let file = TreeFile::load(&a.tree).with_context(|| format!("reading {}", a.tree.display()))?;
    let mut out = io::stdout().lock();
    out.write_all(file.pretty().as_bytes())?;
    let agg = file.tree.aggregate_root();
    writeln!(out, "leaves: {}, nodes: {}", agg.leaf_count, file.tree.node_count())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Costmodel(a) => cmd_costmodel(a),
        Command::GenData(a) => cmd_gen_data(a),
        Command::Inspect(a) => cmd_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
