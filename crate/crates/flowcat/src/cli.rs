//! Argument handling and subcommands.
//!
//! Exit codes: 0 success or equivalent, 1 parse or validation error, 2 not
//! equivalent, 3 undetermined because of an `unknown` ε, 4 an internal
//! failure of the reduction.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use flowcat_core::moves::{digest, MoveLog};
use flowcat_core::normalize::{
    compare_forms, to_almost_bh, to_bh, to_chang, to_primary_smith, BHForm, Equivalence,
    NormalizeError,
};
use flowcat_core::score::{homology, FlowScore};
use flowcat_core::words::Summand;
use serde_json::{json, Value};

use crate::document::{parse_score, serialize_score};
use crate::fixtures::{self, FIXTURES};
use crate::render::{render, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_EQUIVALENT: i32 = 2;
pub const EXIT_UNDETERMINED: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "flowcat",
    version,
    about = "Normalize and compare width-3 framed flow categories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a score document.
    Validate { path: PathBuf },
    /// Print the homology of a score.
    Homology { path: PathBuf },
    /// Reduce a score to one of the normal forms.
    Reduce {
        #[arg(long, value_enum)]
        to: Stage,
        path: PathBuf,
        /// Write the move trace here (a directory in batch mode).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Decide whether two scores are move equivalent.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Draw a score.
    Render {
        #[arg(long, value_enum)]
        format: RenderFormat,
        path: PathBuf,
    },
    /// List or print the embedded fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
    /// Replay a trace against a score and print the result.
    #[command(hide = true)]
    Replay { path: PathBuf, trace: PathBuf },
}

#[derive(Subcommand, Debug)]
enum FixtureAction {
    List,
    Emit { name: String },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Smith,
    Chang,
    AlmostBh,
    Bh,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RenderFormat {
    Dot,
    Svg,
    Tikz,
}

impl From<RenderFormat> for Format {
    fn from(f: RenderFormat) -> Format {
        match f {
            RenderFormat::Dot => Format::Dot,
            RenderFormat::Svg => Format::Svg,
            RenderFormat::Tikz => Format::Tikz,
        }
    }
}

/// Output of one command on one input.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Outcome {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, msg: impl std::fmt::Display) -> Outcome {
        Outcome {
            code,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

fn normalize_code(e: &NormalizeError) -> i32 {
    match e {
        NormalizeError::Invalid(_)
        | NormalizeError::NotReduced(_)
        | NormalizeError::WrongForm(_) => EXIT_INPUT,
        NormalizeError::Move(_)
        | NormalizeError::Unsupported(_)
        | NormalizeError::Unrecognized(_) => EXIT_INTERNAL,
    }
}

fn load(path: &Path) -> Result<FlowScore, Outcome> {
    let text = fs::read_to_string(path)
        .map_err(|e| Outcome::fail(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    parse_score(&text).map_err(|e| Outcome::fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

/// Runs the command line `argv` (program name first) and writes its output.
/// Returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let o = execute(&cli.command);
    let _ = out.write_all(o.stdout.as_bytes());
    let _ = err.write_all(o.stderr.as_bytes());
    o.code
}

fn execute(cmd: &Command) -> Outcome {
    match cmd {
        Command::Validate { path } => each_input(path, validate_one),
        Command::Homology { path } => each_input(path, homology_one),
        Command::Reduce {
            to,
            path,
            trace,
            json,
        } => {
            let batch = path.is_dir();
            each_input(path, |p| {
                let trace_path = trace.as_ref().map(|t| {
                    if batch {
                        t.join(trace_name(p))
                    } else {
                        t.clone()
                    }
                });
                if let (true, Some(t)) = (batch, trace) {
                    if let Err(e) = fs::create_dir_all(t) {
                        return Outcome::fail(EXIT_INPUT, format!("{}: {e}", t.display()));
                    }
                }
                reduce_one(p, *to, trace_path.as_deref(), *json)
            })
        }
        Command::Equiv { a, b, json } => equiv(a, b, *json),
        Command::Render { format, path } => each_input(path, |p| match load(p) {
            Ok(s) => Outcome::ok(render(&s, (*format).into())),
            Err(o) => o,
        }),
        Command::Fixtures { action } => match action {
            FixtureAction::List => {
                let mut s = String::new();
                for f in FIXTURES {
                    s.push_str(&format!("{:<20}{}\n", f.name, f.summary));
                }
                Outcome::ok(s)
            }
            FixtureAction::Emit { name } => match fixtures::find(name) {
                Some(f) => Outcome::ok(f.text.to_string()),
                None => Outcome::fail(EXIT_INPUT, format!("no fixture named `{name}`")),
            },
        },
        Command::Replay { path, trace } => replay(path, trace),
    }
}

fn trace_name(p: &Path) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    let mut name = PathBuf::from(stem);
    name.set_extension("trace");
    name
}

/// The `.score` files directly inside `dir`, sorted by name.
pub fn batch_inputs(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "score"))
        .collect();
    files.sort();
    Ok(files)
}

/// Applies `f` to `path`, or to every score file in it when it is a
/// directory. Batch inputs run on separate threads and their outputs are
/// joined in file-name order under `== name ==` headers; the exit code is
/// the largest one seen.
fn each_input<F>(path: &Path, f: F) -> Outcome
where
    F: Fn(&Path) -> Outcome + Sync,
{
    if !path.is_dir() {
        return f(path);
    }
    let files = match batch_inputs(path) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(EXIT_INPUT, format!("{}: {e}", path.display())),
    };
    let results: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = files.iter().map(|p| scope.spawn(|| f(p))).collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Outcome::fail(EXIT_INTERNAL, "worker panicked"))
            })
            .collect()
    });
    let mut all = Outcome::default();
    for (p, r) in files.iter().zip(results) {
        let name = p.file_name().unwrap_or_default().to_string_lossy();
        all.stdout.push_str(&format!("== {name} ==\n"));
        all.stdout.push_str(&r.stdout);
        if !r.stderr.is_empty() {
            all.stderr.push_str(&format!("{name}: {}", r.stderr));
        }
        all.code = all.code.max(r.code);
    }
    all
}

fn validate_one(p: &Path) -> Outcome {
    match load(p) {
        Ok(s) => Outcome::ok(format!(
            "valid: {} objects, base degree {}\n",
            s.len(),
            s.base_degree()
        )),
        Err(o) => o,
    }
}

fn homology_one(p: &Path) -> Outcome {
    let s = match load(p) {
        Ok(s) => s,
        Err(o) => return o,
    };
    match homology(&s) {
        Ok(h) => Outcome::ok(format!("{h}\n")),
        Err(e) => Outcome::fail(EXIT_INPUT, e),
    }
}

/// Runs the pipeline up to `stage`, returning the score and the moves used.
fn run_stage(
    s: &FlowScore,
    stage: Stage,
) -> Result<(FlowScore, MoveLog, Option<BHForm>), NormalizeError> {
    if stage == Stage::Bh {
        let n = to_bh(s)?;
        return Ok((n.score, n.log, Some(n.form)));
    }
    let (smith, mut log) = to_primary_smith(s)?;
    if stage == Stage::Smith {
        return Ok((smith, log, None));
    }
    let (chang, l) = to_chang(&smith)?;
    log.extend(l);
    if stage == Stage::Chang {
        return Ok((chang, log, None));
    }
    let (almost, _, l) = to_almost_bh(&chang)?;
    log.extend(l);
    Ok((almost, log, None))
}

fn reduce_one(p: &Path, stage: Stage, trace: Option<&Path>, as_json: bool) -> Outcome {
    let s = match load(p) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let (score, mut log, form) = match run_stage(&s, stage) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(normalize_code(&e), e),
    };
    if log.final_digest.is_none() {
        log.final_digest = Some(digest(&score));
    }
    if let Some(t) = trace {
        if let Err(e) = fs::write(t, log.to_trace()) {
            return Outcome::fail(EXIT_INPUT, format!("{}: {e}", t.display()));
        }
    }
    let text = match (&form, as_json) {
        (Some(f), true) => format!("{:#}\n", form_json(f)),
        (Some(f), false) => format!("{f}\n"),
        (None, true) => format!(
            "{:#}\n",
            json!({
                "score": serialize_score(&score),
                "digest": digest(&score),
                "moves": log.len(),
            })
        ),
        (None, false) => serialize_score(&score),
    };
    Outcome::ok(text)
}

/// Machine-readable form of a name.
pub fn form_json(f: &BHForm) -> Value {
    let summands: Vec<Value> = f
        .summands
        .iter()
        .map(|ns| {
            let mut v = match &ns.summand {
                Summand::Sphere { n } => json!({ "kind": "sphere", "n": n }),
                Summand::Moore { order, n } => {
                    json!({ "kind": "moore", "order": order.to_string(), "n": n })
                }
                Summand::Chang { word, n } => {
                    json!({ "kind": "chang", "word": word.to_string(), "n": n })
                }
                Summand::Bh { word, n } => {
                    json!({ "kind": "bh", "word": word.to_string(), "n": n })
                }
            };
            v["eps_undetermined"] = json!(ns.eps_undetermined);
            v["text"] = json!(ns.to_string());
            v
        })
        .collect();
    json!({
        "form": f.to_string(),
        "undetermined": f.is_undetermined(),
        "summands": summands,
    })
}

fn equiv(a: &Path, b: &Path, as_json: bool) -> Outcome {
    let mut forms = Vec::new();
    for p in [a, b] {
        let s = match load(p) {
            Ok(s) => s,
            Err(o) => return o,
        };
        match to_bh(&s) {
            Ok(n) => forms.push(n.form),
            Err(e) => return Outcome::fail(normalize_code(&e), format!("{}: {e}", p.display())),
        }
    }
    let verdict = compare_forms(&forms[0], &forms[1]);
    let code = match verdict {
        Equivalence::Yes => EXIT_OK,
        Equivalence::No => EXIT_NOT_EQUIVALENT,
        Equivalence::Undetermined => EXIT_UNDETERMINED,
    };
    let stdout = if as_json {
        format!(
            "{:#}\n",
            json!({
                "verdict": verdict.to_string(),
                "left": form_json(&forms[0]),
                "right": form_json(&forms[1]),
            })
        )
    } else {
        format!("{verdict}\n  {}\n  {}\n", forms[0], forms[1])
    };
    Outcome {
        code,
        stdout,
        stderr: String::new(),
    }
}

fn replay(path: &Path, trace: &Path) -> Outcome {
    let s = match load(path) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let text = match fs::read_to_string(trace) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(EXIT_INPUT, format!("{}: {e}", trace.display())),
    };
    let log = match MoveLog::parse_trace(&text) {
        Ok(l) => l,
        Err(e) => return Outcome::fail(EXIT_INPUT, format!("{}: {e}", trace.display())),
    };
    match log.replay(&s) {
        Ok(t) => Outcome::ok(format!("digest {}\n{}", digest(&t), serialize_score(&t))),
        Err(e) => Outcome::fail(EXIT_INTERNAL, e),
    }
}
