use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hopl::engine::EngineOptions;
use hopl::print::{print_literals, print_term};
use hopl::report::exit_code;
use hopl::{
    parse_program, parse_term, run, CheckConfig, ErrorMode, Program, RunOptions, Semantics,
};

#[derive(Parser)]
#[command(
    name = "hopl",
    version,
    about = "Run and check higher-order logic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a goal under a checking semantics and report violations.
    Run(RunArgs),
    /// Load a program and validate its assertions without running it.
    Check { file: PathBuf },
    /// List assertions and predprops.
    List {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long)]
    goal: Option<String>,
    #[arg(long, default_value = "tight")]
    semantics: Semantics,
    #[arg(long, default_value = "gather-all")]
    error_mode: ErrorMode,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    prop_budget: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    report: Format,
    /// Print the derivation event stream to stderr.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    no_occurs_check: bool,
    /// Treat wrapper-flavored predprops like plain ones under tight.
    #[arg(long)]
    ignore_wrapper_predprops: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => code(exit_code::USAGE),
            };
        }
    };
    let status = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Check { file } => cmd_check(&file),
        Command::List { file, format } => cmd_list(&file, format),
    };
    code(status)
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

/// Reads and loads `path`, printing every error to stderr.
fn load(path: &Path) -> Result<(Program, String), i32> {
    let source = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return Err(exit_code::LOAD_ERROR);
        }
    };
    match parse_program(&source, &path.display().to_string()) {
        Ok(p) => Ok((p, source)),
        Err(errs) => {
            for e in &errs.0 {
                eprintln!("error: {e}");
            }
            eprintln!("{errs}");
            Err(exit_code::LOAD_ERROR)
        }
    }
}

fn cmd_run(args: RunArgs) -> i32 {
    let Some(goal_text) = args.goal else {
        eprintln!("error: --goal is required");
        return exit_code::USAGE;
    };
    let (program, source) = match load(&args.file) {
        Ok(x) => x,
        Err(c) => return c,
    };
    let goal = match parse_term(&goal_text) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: goal: {}", e.message);
            return exit_code::USAGE;
        }
    };

    let mut engine = EngineOptions::default();
    if let Some(n) = args.max_steps {
        engine.limits.max_steps = n;
    }
    if let Some(n) = args.max_depth {
        engine.limits.max_depth = n;
    }
    engine.occurs_check = !args.no_occurs_check;
    let mut check = CheckConfig::new(args.semantics, args.error_mode);
    if let Some(b) = args.prop_budget {
        check.prop_budget = b;
    }
    check.respect_wrapper_predprops = !args.ignore_wrapper_predprops;
    let opts = RunOptions {
        engine,
        check,
        trace: args.trace,
    };

    let result = run(&program, &goal, &goal_text, &opts);
    if let Some(events) = &result.trace {
        let mut err = std::io::stderr().lock();
        for e in events {
            let _ = writeln!(err, "{e}");
        }
    }
    let report = result.report;
    match args.report {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text(&source)),
    }
    if !report.inconclusive.is_empty() {
        eprintln!(
            "warning: {} inconclusive check(s)",
            report.inconclusive.len()
        );
    }
    report.exit_code
}

fn cmd_check(path: &Path) -> i32 {
    match load(path) {
        Ok((p, _)) => {
            println!(
                "{}: ok ({} clauses, {} assertions, {} predprops)",
                path.display(),
                p.clauses().len(),
                p.assertions.len(),
                p.predprops.len()
            );
            exit_code::OK
        }
        Err(c) => c,
    }
}

fn cmd_list(path: &Path, format: Format) -> i32 {
    let (p, _) = match load(path) {
        Ok(x) => x,
        Err(c) => return c,
    };
    let lits = |ls: &[hopl::program::PropLiteral]| {
        ls.iter()
            .map(|l| print_term(&l.to_term()))
            .collect::<Vec<_>>()
    };
    match format {
        Format::Json => {
            let assertions: Vec<_> = p
                .assertions
                .iter()
                .map(|a| {
                    json!({
                        "id": a.id,
                        "status": a.status,
                        "pred_key": a.key().to_string(),
                        "head": print_term(&a.head),
                        "pre": lits(&a.pre),
                        "post": lits(&a.post),
                        "span": a.span,
                    })
                })
                .collect();
            let predprops: Vec<_> = p
                .predprops
                .values()
                .map(|pp| {
                    json!({
                        "name": pp.name.to_string(),
                        "described_arity": pp.described_arity,
                        "wrapper": pp.is_wrapper,
                        "anon_assertions": pp.anon.len(),
                        "span": pp.span,
                    })
                })
                .collect();
            let out = json!({ "assertions": assertions, "predprops": predprops });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("listing serializes")
            );
        }
        Format::Text => {
            println!("assertions: {}", p.assertions.len());
            for a in &p.assertions {
                let mut line = format!(
                    "  [{}] {} {} {}",
                    a.id,
                    a.status.keyword(),
                    a.key(),
                    print_term(&a.head)
                );
                if !a.pre.is_empty() {
                    line.push_str(&format!(" : {}", print_literals(&a.pre)));
                }
                if !a.post.is_empty() {
                    line.push_str(&format!(" => {}", print_literals(&a.post)));
                }
                println!("{line}  at {}", a.span);
            }
            println!("predprops: {}", p.predprops.len());
            for pp in p.predprops.values() {
                println!(
                    "  {}{}/1 on {}: {} anon assertion(s)  at {}",
                    if pp.is_wrapper { "wrapper " } else { "" },
                    pp.name,
                    pp.described_arity,
                    pp.anon.len(),
                    pp.span
                );
            }
        }
    }
    exit_code::OK
}
