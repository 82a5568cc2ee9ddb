//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when an analysis reports findings (written to
//! standard output), 2 on usage, parse or schema errors (written to standard
//! error).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::deps::{lint_unused_inputs, source_set, acceptors, direct_acceptors};
use crate::dot::{export_dot, DotOptions};
use crate::elementary::decompose_all;
use crate::error::{Error, Result};
use crate::impact::{impact, wcet_for_outputs, wcet_per_output};
use crate::io::{parse_architecture, parse_measures, parse_unchecked, to_canonical_string, to_pretty, Mode};
use crate::model::{validate, Architecture, ChannelId, ServiceId};
use crate::partition::partition_l3;
use crate::pipeline;
use crate::scc::condense_to_l2;
use crate::slicing::{slice, PropertySpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "svcarch", version, about = "Static analysis of service architectures")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Reject unknown keys in input documents (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Drop unknown keys with a warning instead of rejecting them.
    #[arg(long, global = true)]
    lenient: bool,
    /// Measures document overlaid on the architecture before analysis.
    #[arg(long, global = true, value_name = "FILE")]
    measures: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the structural rules of an architecture.
    Validate { file: PathBuf },
    /// System inputs, system outputs and local channels.
    Boundary { file: PathBuf },
    /// Direct and transitive sources of a service.
    Sources { file: PathBuf, service: String },
    /// Direct and transitive acceptors of a service.
    Acceptors { file: PathBuf, service: String },
    /// Report inputs that no output depends on.
    Lint { file: PathBuf },
    /// Decompose every service into elementary subservices.
    Elementary { file: PathBuf },
    /// Condense strongly connected services.
    Condense { file: PathBuf },
    /// Services and inputs needed to check a property.
    Slice {
        file: PathBuf,
        /// Property input channels.
        #[arg(long = "in", value_delimiter = ',')]
        inputs: Vec<String>,
        /// Property output channels.
        #[arg(long = "out", value_delimiter = ',', required = true)]
        outputs: Vec<String>,
        #[arg(long, default_value = "property")]
        name: String,
    },
    /// Impact set and number of every service.
    Impact { file: PathBuf },
    /// Worst-case execution time of produced channels.
    Wcet {
        file: PathBuf,
        /// Restrict to these channels (default: every produced channel).
        #[arg(long, value_delimiter = ',')]
        output: Vec<String>,
    },
    /// Group services for local or remote deployment.
    Partition { file: PathBuf },
    /// Graphviz rendering of the architecture.
    ExportDot {
        file: PathBuf,
        #[arg(long)]
        show_deps: bool,
        #[arg(long)]
        highlight: bool,
    },
    /// Run every refinement step and write the artifacts of each level.
    Pipeline {
        file: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let text = err.render().to_string();
            return if err.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            2
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Schema {
        line: 0,
        column: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

impl Cli {
    fn mode(&self) -> Mode {
        if self.lenient {
            Mode::Lenient
        } else {
            Mode::Strict
        }
    }

    fn load(&self, path: &Path, stderr: &mut dyn Write) -> Result<Architecture> {
        let parsed = parse_architecture(&read(path)?, self.mode())?;
        for w in &parsed.warnings {
            let _ = writeln!(stderr, "warning: {w}");
        }
        let mut arch = parsed.value;
        if let Some(path) = &self.measures {
            let measures = parse_measures(&read(path)?)?;
            for id in arch.apply_measures(&measures) {
                let _ = writeln!(stderr, "warning: measures name unknown service {id}");
            }
        }
        Ok(arch)
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::Schema {
        line: 0,
        column: 0,
        message: format!("cannot write output: {e}"),
    })
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

fn summary(arch: &Architecture) -> String {
    let mut text = format!("level {}: {} services\n", arch.level, arch.services.len());
    for s in arch.services.values() {
        text.push_str(&format!("  {}", s.id));
        if let Some(members) = arch.membership.get(&s.id) {
            text.push_str(&format!(" = {{{}}}", join(members)));
        }
        text.push('\n');
        for (out, deps) in &s.ideps {
            text.push_str(&format!("    {out} <- {{{}}}\n", join(deps)));
        }
    }
    text
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let json = cli.format == Format::Json;
    match &cli.command {
        Command::Validate { file } => {
            let parsed = parse_unchecked(&read(file)?, cli.mode())?;
            for w in &parsed.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let violations: Vec<String> = validate(&parsed.value).iter().map(ToString::to_string).collect();
            if json {
                #[derive(Serialize)]
                struct Doc<'a> {
                    valid: bool,
                    violations: &'a [String],
                }
                emit(stdout, &to_pretty(&Doc {
                    valid: violations.is_empty(),
                    violations: &violations,
                }))?;
            } else if violations.is_empty() {
                let arch = &parsed.value;
                emit(
                    stdout,
                    &format!(
                        "valid: {} services, {} channels\n",
                        arch.services.len(),
                        arch.channels().len()
                    ),
                )?;
            } else {
                for v in &violations {
                    emit(stdout, &format!("{v}\n"))?;
                }
            }
            Ok(if violations.is_empty() { 0 } else { 1 })
        }
        Command::Boundary { file } => {
            let b = cli.load(file, stderr)?.boundary();
            let text = if json {
                to_pretty(&b)
            } else {
                format!(
                    "system inputs: {}\nsystem outputs: {}\nlocal channels: {}\n",
                    join(&b.system_inputs),
                    join(&b.system_outputs),
                    join(&b.local_channels)
                )
            };
            emit(stdout, &text)?;
            Ok(0)
        }
        Command::Sources { file, service } => {
            let arch = cli.load(file, stderr)?;
            let set = source_set(&arch, &ServiceId::from(service.as_str()))?;
            let text = if json {
                to_pretty(&set)
            } else {
                format!(
                    "direct sources of {service}: {{{}}}\nsources of {service}: {{{}}}\n",
                    join(&set.direct),
                    join(&set.transitive)
                )
            };
            emit(stdout, &text)?;
            Ok(0)
        }
        Command::Acceptors { file, service } => {
            let arch = cli.load(file, stderr)?;
            let id = ServiceId::from(service.as_str());
            let direct = direct_acceptors(&arch, &id)?;
            let transitive = acceptors(&arch, &id)?;
            let text = if json {
                #[derive(Serialize)]
                struct Doc<'a> {
                    direct: &'a BTreeSet<ServiceId>,
                    service: &'a ServiceId,
                    transitive: &'a BTreeSet<ServiceId>,
                }
                to_pretty(&Doc {
                    direct: &direct,
                    service: &id,
                    transitive: &transitive,
                })
            } else {
                format!(
                    "direct acceptors of {service}: {{{}}}\nacceptors of {service}: {{{}}}\n",
                    join(&direct),
                    join(&transitive)
                )
            };
            emit(stdout, &text)?;
            Ok(0)
        }
        Command::Lint { file } => {
            let arch = cli.load(file, stderr)?;
            let unused = lint_unused_inputs(&arch);
            let text = if json {
                #[derive(Serialize)]
                struct Finding<'a> {
                    input: &'a ChannelId,
                    service: &'a ServiceId,
                }
                let findings: Vec<Finding> = unused
                    .iter()
                    .map(|(service, input)| Finding { input, service })
                    .collect();
                to_pretty(&findings)
            } else {
                unused
                    .iter()
                    .map(|(s, c)| format!("unused input {c} of {s}\n"))
                    .collect()
            };
            emit(stdout, &text)?;
            Ok(if unused.is_empty() { 0 } else { 1 })
        }
        Command::Elementary { file } => {
            let l1 = decompose_all(&cli.load(file, stderr)?)?;
            emit(stdout, &if json { to_canonical_string(&l1) } else { summary(&l1) })?;
            Ok(0)
        }
        Command::Condense { file } => {
            let condensation = condense_to_l2(&cli.load(file, stderr)?)?;
            let text = if json {
                to_canonical_string(&condensation.architecture)
            } else {
                let mut text = String::new();
                for s in &condensation.services {
                    text.push_str(&format!("{} {:?} {{{}}}\n", s.id, s.origin, join(&s.members)));
                }
                text
            };
            emit(stdout, &text)?;
            Ok(0)
        }
        Command::Slice {
            file,
            inputs,
            outputs,
            name,
        } => {
            let arch = cli.load(file, stderr)?;
            let prop = PropertySpec::new(name.as_str(), inputs.iter().map(String::as_str), outputs.iter().map(String::as_str));
            let report = slice(&arch, &prop)?;
            let text = if json {
                to_pretty(&report)
            } else {
                let mut text = format!(
                    "slice of {}: {{{}}}\ninputs depended on: {{{}}}\n",
                    report.property,
                    join(&report.services),
                    join(&report.idep_inputs)
                );
                if !report.local_refs.is_empty() {
                    text.push_str(&format!("local channels referenced: {{{}}}\n", join(&report.local_refs)));
                }
                for d in &report.diagnostics {
                    let kind = match d.kind {
                        crate::slicing::DiagnosticKind::MissingInput => "MISSING_INPUT",
                        crate::slicing::DiagnosticKind::IrrelevantInput => "IRRELEVANT_INPUT",
                    };
                    text.push_str(&format!("{kind} {}\n", d.channel));
                }
                text
            };
            emit(stdout, &text)?;
            Ok(if report.is_clean() { 0 } else { 1 })
        }
        Command::Impact { file } => {
            let report = impact(&cli.load(file, stderr)?);
            let text = if json {
                to_pretty(&report)
            } else {
                report
                    .services
                    .iter()
                    .map(|(id, e)| format!("{id} {} {{{}}}\n", e.impact_number, join(&e.impact_set)))
                    .collect()
            };
            emit(stdout, &text)?;
            Ok(0)
        }
        Command::Wcet { file, output } => {
            let arch = cli.load(file, stderr)?;
            let report = if output.is_empty() {
                wcet_per_output(&arch)?
            } else {
                let outputs: Vec<ChannelId> = output.iter().map(|c| ChannelId::from(c.as_str())).collect();
                wcet_for_outputs(&arch, &outputs)?
            };
            let text = if json {
                to_pretty(&report)
            } else {
                report.outputs.iter().map(|(c, w)| format!("{c} {w}\n")).collect()
            };
            emit(stdout, &text)?;
            Ok(0)
        }
        Command::Partition { file } => {
            let (l3, plan) = partition_l3(&cli.load(file, stderr)?)?;
            let text = if json {
                to_canonical_string(&l3)
            } else {
                let mut text = format!(
                    "high channels: {{{}}}\nhigh perf: {{{}}}\n",
                    join(&plan.high_channels),
                    join(&plan.high_perf)
                );
                for g in &plan.groups {
                    let deployment = match g.deployment {
                        crate::partition::Deployment::Local => "LOCAL",
                        crate::partition::Deployment::Remote => "REMOTE",
                    };
                    text.push_str(&format!("{} {deployment} {{{}}}\n", g.new_id, join(&g.members)));
                }
                text
            };
            emit(stdout, &text)?;
            Ok(0)
        }
        Command::ExportDot {
            file,
            show_deps,
            highlight,
        } => {
            let arch = cli.load(file, stderr)?;
            let options = DotOptions {
                show_deps: *show_deps,
                highlight: *highlight,
            };
            emit(stdout, &export_dot(&arch, options))?;
            Ok(0)
        }
        Command::Pipeline { file, out_dir } => {
            let parsed = parse_architecture(&read(file)?, cli.mode())?;
            for w in &parsed.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let measures = cli.measures.as_deref().map(read).transpose()?;
            let measures = measures.as_deref().map(parse_measures).transpose()?;
            let run = pipeline::run(&parsed.value, measures.as_ref())?;
            for id in &run.unmatched {
                let _ = writeln!(stderr, "warning: measures name unknown service {id}");
            }
            let written = run.write_to(out_dir).map_err(|e| Error::Schema {
                line: 0,
                column: 0,
                message: format!("cannot write to {}: {e}", out_dir.display()),
            })?;
            let text = if json {
                to_pretty(&written)
            } else {
                written.iter().map(|n| format!("wrote {}\n", out_dir.join(n).display())).collect()
            };
            emit(stdout, &text)?;
            Ok(0)
        }
    }
}
