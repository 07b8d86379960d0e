//! The `hyperwidth` command line. Exit codes: 0 ok, 1 reject, 2 usage or
//! input error, 3 invariant failure.

use std::ffi::OsString;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use hyperwidth_core::dealternation::{dealternate, DealternationConfig};
use hyperwidth_core::decomp::{exact_fwidth, oracle_fwidth_td};
use hyperwidth_core::mso::{evaluate, Assignment};
use hyperwidth_core::pipeline::{width_check, CheckMode, CheckOptions, Execution};
use hyperwidth_core::rational::{parse as parse_rational, to_string};
use hyperwidth_core::transduction::{apply, build_forest_transduction, Mode};
use hyperwidth_core::widths::enumerate::{enumerate_bounded_hypergraphs, EnumerationOptions};
use hyperwidth_core::widths::{WidthCache, WidthFunction};
use hyperwidth_core::{Budget, Error as CoreError, Hypergraph, Rational, Width};

use crate::corpus;
use crate::error::{Error, Result};
use crate::formats::*;
use crate::report::{self, Format};

#[derive(Parser, Debug)]
#[command(name = "hyperwidth", version, about = "Exact hypergraph width checks through elimination forests")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Tsv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide f-width <= k and print an optimal decomposition's width.
    Width {
        /// ghw, fhw or tw.
        #[arg(long)]
        function: String,
        /// Threshold `p/q`; defaults to f(V(H)).
        #[arg(long)]
        k: Option<String>,
        /// pipeline, oracle or both.
        #[arg(long, default_value = "pipeline")]
        mode: String,
        /// guided, exhaustive or auto.
        #[arg(long, default_value = "auto")]
        execution: String,
        /// Write the returned decomposition here.
        #[arg(long)]
        td_out: Option<PathBuf>,
        file: PathBuf,
    },
    /// Validate a tree decomposition and print its f-width.
    Verify {
        #[arg(long)]
        td: PathBuf,
        #[arg(long, default_value = "ghw")]
        function: String,
        file: PathBuf,
    },
    /// Dealternate an elimination forest against a decomposition.
    Dealternate {
        #[arg(long)]
        td: PathBuf,
        #[arg(long)]
        forest: PathBuf,
        #[arg(long, default_value = "ghw")]
        function: String,
        /// Swap down to this many colour intervals instead of the proven bound.
        #[arg(long)]
        probe: Option<u64>,
        /// Write the dealternated forest here.
        #[arg(long)]
        forest_out: Option<PathBuf>,
        file: PathBuf,
    },
    /// Formulas over finite structures.
    Mso {
        #[command(subcommand)]
        command: MsoCommand,
    },
    /// Run the forest transduction (or a given one) on a structure.
    Transduce {
        #[arg(long)]
        q: usize,
        /// Colouring witness; exhaustive when absent.
        #[arg(long)]
        guided: Option<PathBuf>,
        #[arg(long)]
        structure: PathBuf,
        /// Transduction file instead of the forest transduction for `q`.
        #[arg(long)]
        transduction: Option<PathBuf>,
    },
    /// The bounded family for (f, k, r) and its values.
    Enumerate {
        #[arg(long)]
        function: String,
        #[arg(long)]
        k: String,
        #[arg(long)]
        rank: usize,
        /// Print every hypergraph of the family.
        #[arg(long)]
        list: bool,
    },
    /// Cross-check the two width oracles.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// The bundled corpus.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

#[derive(Subcommand, Debug)]
enum MsoCommand {
    /// Print `true` or `false`.
    Eval {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        structure: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    Compare {
        /// Only this function; all three otherwise.
        #[arg(long)]
        function: Option<String>,
        file: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum CorpusCommand {
    /// One summary line per instance.
    List {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Write the built-in instances as `.hg` files.
    Write { dir: PathBuf },
    /// The invariant table (see `report`).
    Check {
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        max_vertices: usize,
        #[arg(long)]
        function: Option<String>,
    },
}

/// What a run printed and its exit code.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let format = match cli.format {
        FormatArg::Text => Format::Text,
        FormatArg::Tsv => Format::Tsv,
    };
    let mut out = Outcome::default();
    let result = crate::budget::from_env().and_then(|budget| dispatch(cli.command, format, &budget, &mut out));
    match result {
        Ok(code) => out.code = code,
        Err(e) => {
            out.code = e.exit_code();
            if out.code == 3 {
                writeln!(out.stdout, "invariant-failure {}", strip_prefix(&e)).unwrap();
            }
            writeln!(out.stderr, "error: {e}").unwrap();
        }
    }
    out
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Core(CoreError::Invariant(m)) => m.clone(),
        other => other.to_string(),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Parse errors carry the file name.
fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { .. } => Error::Usage(format!("{}: {e}", path.display())),
        other => other,
    })
}

fn hypergraph(path: &Path) -> Result<Hypergraph> {
    in_file(path, parse_hypergraph(&read(path)?))
}

fn width_fn(name: &str) -> Result<Width> {
    Width::from_name(name).map_err(|_| Error::Usage(format!("unknown width function `{name}` (ghw, fhw or tw)")))
}

fn rational(s: &str) -> Result<Rational> {
    parse_rational(s).ok_or_else(|| Error::Usage(format!("`{s}` is not a rational p/q")))
}

fn usage<T>(r: hyperwidth_core::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        CoreError::Invariant(_) => Error::Core(e),
        other => Error::Usage(other.to_string()),
    })
}

fn dispatch(cmd: Command, format: Format, budget: &Budget, out: &mut Outcome) -> Result<i32> {
    let o = &mut out.stdout;
    match cmd {
        Command::Width { function, k, mode, execution, td_out, file } => {
            let h = hypergraph(&file)?;
            let f = width_fn(&function)?;
            let k = match k {
                Some(k) => rational(&k)?,
                None => f.evaluate(&h, h.vertices()),
            };
            let opts = CheckOptions {
                mode: usage(CheckMode::from_name(&mode))?,
                execution: usage(Execution::from_name(&execution))?,
                budget: *budget,
            };
            let r = width_check(&h, &f, &k, &opts)?;
            o.push_str(&report::width_report(&r, format));
            if let (Some(path), Some(a)) = (td_out, &r.accepted) {
                write_file(&path, &write_td(&a.td, &h))?;
            }
            Ok(if r.accepted.is_some() { 0 } else { 1 })
        }
        Command::Verify { td, function, file } => {
            let h = hypergraph(&file)?;
            let f = width_fn(&function)?;
            let t = in_file(&td, parse_td(&read(&td)?, &h));
            let t = match t {
                Ok(t) => t,
                Err(Error::Core(e)) => {
                    writeln!(o, "invalid {e}").unwrap();
                    return Ok(1);
                }
                Err(e) => return Err(e),
            };
            if let Err(e) = t.validate(&h) {
                writeln!(o, "invalid {e}").unwrap();
                return Ok(1);
            }
            let w = t.fwidth(&WidthCache::new(&f, &h));
            writeln!(o, "valid function={} width={} nodes={}", f.short_name(), to_string(&w), t.num_nodes()).unwrap();
            Ok(0)
        }
        Command::Dealternate { td, forest, function, probe, forest_out, file } => {
            let h = hypergraph(&file)?;
            let f = width_fn(&function)?;
            let t = in_file(&td, parse_td(&read(&td)?, &h))?;
            let given = in_file(&forest, parse_forest(&read(&forest)?, &h))?;
            let reduced = given.reduce(&h);
            if reduced != given {
                writeln!(o, "note forest reduced before dealternation").unwrap();
            }
            let cfg = DealternationConfig {
                probe_threshold: probe,
                enumeration: EnumerationOptions { include_empty: false, budget: *budget },
            };
            let r = dealternate(&h, &t, &reduced, &WidthCache::new(&f, &h), &cfg)?;
            for (node, s) in &r.swaps {
                writeln!(
                    o,
                    "swap factor={} i={} width_before={} width_after={} phase={} node={}",
                    h.label(s.factor),
                    s.index,
                    to_string(&s.width_before),
                    to_string(&s.width_after),
                    s.phase as u8,
                    node + 1
                )
                .unwrap();
            }
            writeln!(
                o,
                "dealternated width_before={} width_after={} split={} mir={} gamma={} swaps={}",
                to_string(&r.width_before),
                to_string(&r.width_after),
                r.split,
                r.mir,
                r.bounds.gamma,
                r.swaps.len()
            )
            .unwrap();
            if let Some(path) = forest_out {
                write_file(&path, &write_forest(&r.forest, &h))?;
            }
            Ok(0)
        }
        Command::Mso { command: MsoCommand::Eval { formula, structure } } => {
            let phi = in_file(&formula, parse_formula(&read(&formula)?))?;
            let m = in_file(&structure, parse_structure(&read(&structure)?))?;
            let v = usage(evaluate(&m, &phi, &Assignment::new(), budget))?;
            writeln!(o, "{v}").unwrap();
            Ok(0)
        }
        Command::Transduce { q, guided, structure, transduction } => {
            let m = in_file(&structure, parse_structure(&read(&structure)?))?;
            let tr = match transduction {
                Some(p) => in_file(&p, parse_transduction(&read(&p)?))?,
                None => usage(build_forest_transduction(q))?,
            };
            let witness = match &guided {
                Some(p) => Some(in_file(p, parse_witness(&read(p)?, &m))?),
                None => None,
            };
            let mode = match &witness {
                Some(w) => Mode::Guided(w),
                None => Mode::Exhaustive,
            };
            let (outputs, stats) = usage(apply(&tr, &m, mode, budget))?;
            for s in &outputs {
                o.push_str(&write_structure(s));
                o.push('\n');
            }
            writeln!(o, "outputs={} branches={} pruned={}", outputs.len(), stats.branches, stats.pruned).unwrap();
            Ok(0)
        }
        Command::Enumerate { function, k, rank, list } => {
            let f = width_fn(&function)?;
            let k = rational(&k)?;
            let opts = EnumerationOptions { include_empty: false, budget: *budget };
            let fam = usage(enumerate_bounded_hypergraphs(&f, &k, rank, &opts))?;
            let mut vals: Vec<Rational> = fam.iter().map(|g| f.evaluate(g, g.vertices())).collect();
            vals.sort();
            vals.dedup();
            let vs: Vec<String> = vals.iter().map(to_string).collect();
            writeln!(o, "family {} beta={}", fam.len(), f.size_bound(&k, rank)).unwrap();
            writeln!(o, "values {}", vs.join(" ")).unwrap();
            if list {
                for g in &fam {
                    o.push('\n');
                    o.push_str(&write_hypergraph(g));
                }
            }
            Ok(0)
        }
        Command::Oracle { command: OracleCommand::Compare { function, file } } => {
            let h = hypergraph(&file)?;
            let fs = match function {
                Some(f) => vec![width_fn(&f)?],
                None => Width::ALL.to_vec(),
            };
            let mut bad = Vec::new();
            for f in fs {
                let (a, _) = usage(exact_fwidth(&h, &f, budget))?;
                let b = usage(oracle_fwidth_td(&h, &f, budget))?;
                let verdict = if a == b { "agree" } else { "disagree" };
                writeln!(o, "{} forest={} td={} {verdict}", f.short_name(), to_string(&a), to_string(&b)).unwrap();
                if a != b {
                    bad.push(f.short_name());
                }
            }
            if !bad.is_empty() {
                return Err(CoreError::Invariant(format!("oracle.compare: forest and decomposition oracles differ for {}", bad.join(","))).into());
            }
            Ok(0)
        }
        Command::Corpus { command } => corpus_command(command, budget, o),
    }
}

fn instances(dir: Option<PathBuf>) -> Result<Vec<corpus::Instance>> {
    match dir {
        Some(d) => corpus::load_dir(&d),
        None => Ok(corpus::builtin()),
    }
}

fn corpus_command(cmd: CorpusCommand, budget: &Budget, o: &mut String) -> Result<i32> {
    match cmd {
        CorpusCommand::List { dir } => {
            for i in instances(dir)? {
                writeln!(o, "{}", report::describe(&i.name, &i.hypergraph)).unwrap();
            }
            Ok(0)
        }
        CorpusCommand::Write { dir } => {
            for p in corpus::write_dir(&dir)? {
                writeln!(o, "wrote {p}").unwrap();
            }
            Ok(0)
        }
        CorpusCommand::Check { dir, max_vertices, function } => {
            let fs = match function {
                Some(f) => vec![width_fn(&f)?],
                None => Width::ALL.to_vec(),
            };
            let (table, failed) = report::corpus_check(&instances(dir)?, &fs, max_vertices, budget)?;
            o.push_str(&table);
            Ok(if failed { 3 } else { 0 })
        }
    }
}
