//! `semipull` — construct semipullbacks of finite labelled Markov processes
//! and probability kernels, with exact rational arithmetic and printable
//! certificates.
//!
//! Exit codes: 0 success / PASS, 1 semantic failure (invalid model,
//! non-morphism leg, no behavioral equivalence, degenerate counterexample
//! parameters), 2 schema or parse error.

mod certificate;
mod model;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use semipullback::{
    cospan_from_quotients, demonstrate_obstruction, is_kernel_morphism, is_zigzag,
    largest_zigzag_quotient, parse_rat, semipullback_lmp, semipullback_prob_kernels,
    semipullback_subprob_kernels, span_from_cospan, validate_kernel, Rat, SemipullbackResult,
    Vertex,
};

use model::{resolve, ModelFile, Resolved};

#[derive(Debug)]
pub enum CliError {
    /// Parse or cross-reference problems: exit code 2.
    Schema(String),
    /// The model parsed but is semantically invalid: exit code 1.
    Semantic(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "schema error: {m}"),
            CliError::Semantic(m) => write!(f, "error: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Semantic(_) => 1,
        }
    }
}

impl From<semipullback::Error> for CliError {
    fn from(e: semipullback::Error) -> Self {
        CliError::Semantic(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "semipull",
    about = "Semipullbacks of finite labelled Markov processes, exactly",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Kernel,
    Lmp,
}

#[derive(Subcommand)]
enum Command {
    /// Validate every object in a model file.
    Validate {
        file: PathBuf,
    },
    /// Construct the semipullback of a named cospan.
    Semipullback {
        file: PathBuf,
        /// Name of the cospan in the model file.
        cospan: String,
        #[arg(long, value_enum, default_value_t = Mode::Kernel)]
        mode: Mode,
        /// Write the result model here (certificates go to `<out>.cert.json`);
        /// prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-verify marginals and commutativity of the written result.
        #[arg(long)]
        check: bool,
    },
    /// Compute the largest zigzag quotient of a named LMP.
    Quotient {
        file: PathBuf,
        /// Name of the LMP in the model file.
        lmp: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Join two LMPs by their largest quotients and complete the cospan to
    /// a span witnessing bisimilarity.
    SpanFromCospan {
        file: PathBuf,
        lmp1: String,
        lmp2: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Walk the countable-cocountable obstruction for two parameters.
    Counterexample {
        #[arg(long)]
        r1: String,
        #[arg(long)]
        r2: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(path: &Path) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
    resolve(ModelFile::parse(&text)?)
}

fn emit(path: &Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, contents)
            .map_err(|e| CliError::Schema(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Semipullback { file, cospan, mode, out, check } => {
            cmd_semipullback(&file, &cospan, mode, out, check)
        }
        Command::Quotient { file, lmp, out } => cmd_quotient(&file, &lmp, out),
        Command::SpanFromCospan { file, lmp1, lmp2, out } => {
            cmd_span_from_cospan(&file, &lmp1, &lmp2, out)
        }
        Command::Counterexample { r1, r2 } => cmd_counterexample(&r1, &r2),
    }
}

fn cmd_validate(file: &Path) -> Result<(), CliError> {
    let resolved = load(file)?;
    let mut problems = Vec::new();

    for (name, kernel) in &resolved.kernels {
        let report = validate_kernel(kernel);
        if !report.is_clean() {
            for v in &report.violations {
                problems.push(format!("kernel `{name}`: {v}"));
            }
        }
    }
    for (name, lmp) in &resolved.lmps {
        let report = lmp.validate();
        if !report.is_clean() {
            for v in &report.violations {
                problems.push(format!("lmp `{name}`: {v}"));
            }
        }
    }
    for name in resolved.file.cospans.keys() {
        // A cospan must validate in at least one mode; report the kernel-mode
        // diagnostics when its apex names a kernel, LMP-mode otherwise.
        let apex = &resolved.file.cospans[name].apex;
        let outcome = if resolved.kernels.contains_key(apex) {
            resolved.kernel_cospan(name).map(|_| ())
        } else {
            resolved.lmp_cospan(name).map(|_| ())
        };
        if let Err(CliError::Semantic(m) | CliError::Schema(m)) = outcome {
            problems.push(m);
        }
    }

    if problems.is_empty() {
        println!(
            "ok: {} spaces, {} kernels, {} lmps, {} morphisms, {} cospans",
            resolved.spaces.len(),
            resolved.kernels.len(),
            resolved.lmps.len(),
            resolved.morphisms.len(),
            resolved.file.cospans.len()
        );
        Ok(())
    } else {
        Err(CliError::Semantic(problems.join("\n")))
    }
}

fn result_to_model(result: &SemipullbackResult) -> ModelFile {
    let mut out = ModelFile::default();
    match &result.vertex {
        Vertex::Kernel(mu3) => {
            out.spaces.insert("X".into(), model::space_def(mu3.source()));
            out.spaces.insert("S3".into(), model::space_def(mu3.target()));
            out.spaces
                .insert("S1".into(), model::space_def(result.k1.codomain()));
            out.spaces
                .insert("S2".into(), model::space_def(result.k2.codomain()));
            out.kernels
                .insert("mu3".into(), model::kernel_def(mu3, "X", "S3"));
        }
        Vertex::Lmp(lmp) => {
            out.spaces.insert("S3".into(), model::space_def(lmp.space()));
            out.spaces
                .insert("S1".into(), model::space_def(result.k1.codomain()));
            out.spaces
                .insert("S2".into(), model::space_def(result.k2.codomain()));
            out.lmps.insert("tau3".into(), model::lmp_def(lmp, "S3"));
        }
    }
    out.morphisms
        .insert("k1".into(), model::morphism_def(&result.k1, "S3", "S1"));
    out.morphisms
        .insert("k2".into(), model::morphism_def(&result.k2, "S3", "S2"));
    out
}

fn cert_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".cert.json");
    out.with_file_name(name)
}

fn recheck(result: &SemipullbackResult, resolved_cospan: RecheckInput) -> Result<(), CliError> {
    let mut failures = Vec::new();
    match (&result.vertex, resolved_cospan) {
        (Vertex::Kernel(mu3), RecheckInput::Kernel(c)) => {
            for (name, k, side) in [("k1", &result.k1, c.left()), ("k2", &result.k2, c.right())] {
                if !is_kernel_morphism(k, mu3, side)?.holds() {
                    failures.push(format!("{name} marginals"));
                }
            }
            if !result.square_commutes(c.leg1(), c.leg2()) {
                failures.push("commutativity".into());
            }
        }
        (Vertex::Lmp(tau3), RecheckInput::Lmp(c)) => {
            for (name, k, side) in [("k1", &result.k1, c.left()), ("k2", &result.k2, c.right())] {
                if !is_zigzag(k, tau3, side)?.holds() {
                    failures.push(format!("{name} zigzag"));
                }
            }
            if !result.square_commutes(c.leg1(), c.leg2()) {
                failures.push("commutativity".into());
            }
        }
        _ => failures.push("vertex kind does not match the requested mode".into()),
    }
    if failures.is_empty() {
        println!("check PASS: marginals and commutativity verified");
        Ok(())
    } else {
        Err(CliError::Semantic(format!("check FAIL: {}", failures.join(", "))))
    }
}

enum RecheckInput<'a> {
    Kernel(&'a semipullback::KernelCospan),
    Lmp(&'a semipullback::LmpCospan),
}

fn cmd_semipullback(
    file: &Path,
    cospan: &str,
    mode: Mode,
    out: Option<PathBuf>,
    check: bool,
) -> Result<(), CliError> {
    let resolved = load(file)?;
    let (result, recheck_input_kernel, recheck_input_lmp);
    match mode {
        Mode::Kernel => {
            let c = resolved.kernel_cospan(cospan)?;
            let all_probability = [c.apex(), c.left(), c.right()]
                .iter()
                .all(|k| k.kind() == semipullback::KernelKind::Probability);
            result = if all_probability {
                semipullback_prob_kernels(&c).map_err(|e| CliError::Semantic(e.to_string()))?
            } else {
                semipullback_subprob_kernels(&c).map_err(|e| CliError::Semantic(e.to_string()))?
            };
            recheck_input_kernel = Some(c);
            recheck_input_lmp = None;
        }
        Mode::Lmp => {
            let c = resolved.lmp_cospan(cospan)?;
            result = semipullback_lmp(&c).map_err(|e| CliError::Semantic(e.to_string()))?;
            recheck_input_kernel = None;
            recheck_input_lmp = Some(c);
        }
    }

    let model = result_to_model(&result).to_pretty_json();
    let cert = certificate::to_pretty_json(&certificate::certificate_file(
        cospan,
        match mode {
            Mode::Kernel => "kernel",
            Mode::Lmp => "lmp",
        },
        &result,
    ));
    match &out {
        Some(path) => {
            emit(&Some(path.clone()), &model)?;
            emit(&Some(cert_path(path)), &cert)?;
            println!(
                "wrote {} and {}",
                path.display(),
                cert_path(path).display()
            );
        }
        None => {
            print!("{model}");
            print!("{cert}");
        }
    }

    if check {
        if let Some(c) = &recheck_input_kernel {
            recheck(&result, RecheckInput::Kernel(c))?;
        }
        if let Some(c) = &recheck_input_lmp {
            recheck(&result, RecheckInput::Lmp(c))?;
        }
    }
    Ok(())
}

fn cmd_quotient(file: &Path, lmp: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    let resolved = load(file)?;
    let source = resolved
        .lmps
        .get(lmp)
        .ok_or_else(|| CliError::Schema(format!("no LMP named `{lmp}`")))?;
    let (quotient, q) = largest_zigzag_quotient(source);

    let mut model = ModelFile::default();
    model.spaces.insert("S".into(), model::space_def(source.space()));
    model.spaces.insert("U".into(), model::space_def(quotient.space()));
    model.lmps.insert("quotient".into(), model::lmp_def(&quotient, "U"));
    model
        .morphisms
        .insert("q".into(), model::morphism_def(&q, "S", "U"));
    emit(&out, &model.to_pretty_json())?;
    if out.is_some() {
        println!(
            "quotient of `{lmp}`: {} states -> {} states",
            source.space().len(),
            quotient.space().len()
        );
    }
    Ok(())
}

fn cmd_span_from_cospan(
    file: &Path,
    lmp1: &str,
    lmp2: &str,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let resolved = load(file)?;
    let s1 = resolved
        .lmps
        .get(lmp1)
        .ok_or_else(|| CliError::Schema(format!("no LMP named `{lmp1}`")))?;
    let s2 = resolved
        .lmps
        .get(lmp2)
        .ok_or_else(|| CliError::Schema(format!("no LMP named `{lmp2}`")))?;

    let cospan = cospan_from_quotients(s1, s2)?
        .ok_or_else(|| CliError::Semantic("not behaviorally equivalent".into()))?;
    let result = span_from_cospan(&cospan)?;

    let vertex = result.vertex_lmp().expect("LMP span has an LMP vertex");
    let mut model = result_to_model(&result);
    model
        .spaces
        .insert("U".into(), model::space_def(cospan.apex().space()));
    model
        .lmps
        .insert("apex".into(), model::lmp_def(cospan.apex(), "U"));
    model
        .morphisms
        .insert("q1".into(), model::morphism_def(cospan.leg1(), "S1", "U"));
    model
        .morphisms
        .insert("q2".into(), model::morphism_def(cospan.leg2(), "S2", "U"));
    emit(&out, &model.to_pretty_json())?;

    let zig1 = is_zigzag(&result.k1, vertex, s1)?.holds();
    let zig2 = is_zigzag(&result.k2, vertex, s2)?.holds();
    let commutes = result.square_commutes(cospan.leg1(), cospan.leg2());
    if zig1 && zig2 && commutes {
        println!(
            "span PASS: vertex with {} states, both projections are zigzags, square commutes",
            vertex.space().len()
        );
        Ok(())
    } else {
        Err(CliError::Semantic("span FAIL: projection checks failed".into()))
    }
}

fn cmd_counterexample(r1: &str, r2: &str) -> Result<(), CliError> {
    let parse = |s: &str| -> Result<Rat, CliError> {
        parse_rat(s).map_err(|e| CliError::Schema(e.to_string()))
    };
    let report = demonstrate_obstruction(&parse(r1)?, &parse(r2)?)?;
    print!("{report}");
    Ok(())
}
