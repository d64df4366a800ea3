//! Command-line front end: parses machine files, orchestrates the
//! compile/lower/simulate/decide pipeline, and emits deterministic
//! `key=value` reports and golden-stable dumps. Rationals print as `p/q`,
//! floats with 12 significant digits; repeated runs with identical inputs
//! and seed produce byte-identical output. Exit status is 0 on success,
//! 1 on domain errors, 2 on usage errors.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amplify::{coeq_recognize, overall_decide, prepare_pipeline, run_m_p, verify_y_bounds};
use crate::canonical::canonicalize;
use crate::circuit::{compile, lower, simulate, wire_marginal};
use crate::config::{final_distribution, ConfigSpace};
use crate::construct::{
    combine_ntms_zero_error, postptm_to_ntm, postselect_to_restart, postselect_to_unbounded,
    restart_semantics_exact,
};
use crate::error::{Error, Result};
use crate::format::{fmt_rational, fmt_sig, parse_machine_file, print_machine_file};
use crate::machine::{postselect_normalize, run_exhaustive, MachineSpec};
use crate::quantum::run_postselected_circuit;

#[derive(Parser)]
#[command(
    name = "postsim",
    version,
    about = "Compile bounded probabilistic machines into log-width circuits and decide them by postselected quantum simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Positional machine file plus the parameters every pipeline stage needs.
#[derive(Args)]
struct PipelineArgs {
    /// Machine description file.
    file: PathBuf,
    /// Input string for the machine's read-only tape.
    #[arg(long, default_value = "")]
    input: String,
    /// Exact halting clock of the canonical machine.
    #[arg(long)]
    clock: usize,
    /// Work-tape cells available to the machine.
    #[arg(long)]
    space: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a machine file and report well-formedness findings.
    Validate {
        /// Machine description file.
        file: PathBuf,
    },
    /// Exact outcome distribution of a machine on one input.
    Oracle {
        /// Machine description file.
        file: PathBuf,
        /// Input string for the machine's read-only tape.
        #[arg(long, default_value = "")]
        input: String,
        /// Step budget for the exhaustive run.
        #[arg(long, default_value_t = 256)]
        budget: usize,
    },
    /// Rebuild a fair-coin machine into canonical form for one clock.
    Canonicalize {
        #[command(flatten)]
        args: PipelineArgs,
        /// Write the canonical machine file here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a canonical machine into a probabilistic circuit.
    Compile {
        #[command(flatten)]
        args: PipelineArgs,
        /// Write the circuit dump here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile and lower the circuit to the NOT/AND/OR basis.
    Lower {
        #[command(flatten)]
        args: PipelineArgs,
        /// Write the circuit dump here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact classical simulation of the compiled circuit.
    Simulate {
        #[command(flatten)]
        args: PipelineArgs,
        /// Simulate the lowered circuit instead of the direct compilation.
        #[arg(long)]
        lowered: bool,
    },
    /// Postselected quantum run of the lowered circuit; dumps the state.
    QuantumRun {
        #[command(flatten)]
        args: PipelineArgs,
    },
    /// One amplified run: +/- measurement probabilities for a given p.
    Amplify {
        #[command(flatten)]
        args: PipelineArgs,
        /// Doubling count parameter of the run, in 0..clock.
        #[arg(long)]
        p: usize,
    },
    /// The full amplified decision procedure; one normative report line.
    Decide {
        #[command(flatten)]
        args: PipelineArgs,
        /// Monte Carlo demonstration: sample this many outcome patterns.
        #[arg(long)]
        sample: Option<u64>,
        /// Seed for the demonstration sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify the correct-side measurement bound by exhaustive scan.
    VerifyBounds {
        /// Largest clock to scan.
        #[arg(long, default_value_t = 6)]
        t_max: usize,
    },
    /// One-sided recognizer for acceptance probability exactly 1/2.
    Coeq {
        #[command(flatten)]
        args: PipelineArgs,
    },
    /// Machine-to-machine transformations.
    #[command(subcommand)]
    Construct(ConstructCmd),
    /// Configuration table and one-step matrix of a canonical machine.
    Dump {
        #[command(flatten)]
        args: PipelineArgs,
    },
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// Fold the abandon state into a fair accept/reject coin.
    Unbounded {
        /// Machine description file.
        file: PathBuf,
        /// Write the resulting machine file here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Restart reinterpretation: exact limiting acceptance and expected steps.
    Restart {
        /// Machine description file.
        file: PathBuf,
        /// Input string for the machine's read-only tape.
        #[arg(long, default_value = "")]
        input: String,
        /// Step budget for resolving one attempt.
        #[arg(long, default_value_t = 256)]
        budget: usize,
    },
    /// Join two complementary nondeterministic machines into one
    /// zero-error postselecting machine.
    Join {
        /// Machine accepting exactly the members.
        yes: PathBuf,
        /// Machine accepting exactly the non-members.
        no: PathBuf,
        /// Probe input checked against the complementary-support promise
        /// (repeatable).
        #[arg(long = "probe")]
        probes: Vec<String>,
        /// Step budget for each probe run.
        #[arg(long, default_value_t = 256)]
        budget: usize,
        /// Write the resulting machine file here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reread abandonment as rejection, yielding a nondeterministic machine.
    ToNtm {
        /// Machine description file.
        file: PathBuf,
        /// Write the resulting machine file here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(file: &PathBuf) -> Result<MachineSpec> {
    parse_machine_file(&fs::read_to_string(file)?)
}

/// Routes bulk content to `--out` when given, to the report otherwise.
fn emit(out: &Option<PathBuf>, content: &str, report: &mut String) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => report.push_str(content),
    }
    Ok(())
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(report) => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            // A closed pipe downstream (e.g. `postsim dump ... | head`) is
            // not a failure of ours.
            match stdout.write_all(report.as_bytes()).and_then(|_| stdout.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

/// Runs one command and returns everything destined for stdout. Writing
/// into a `String` cannot fail, so the in-band `unwrap`s are total.
fn execute(command: Command) -> Result<String> {
    let mut out = String::new();
    match command {
        Command::Validate { file } => {
            let spec = load(&file)?;
            let findings = spec.validate_well_formed();
            writeln!(out, "kind={}", spec.kind.as_str()).unwrap();
            writeln!(out, "states={}", spec.states.len()).unwrap();
            writeln!(out, "well_formed={}", findings.is_empty()).unwrap();
            for f in findings {
                writeln!(out, "finding={f}").unwrap();
            }
        }
        Command::Oracle { file, input, budget } => {
            let spec = load(&file)?;
            let d = run_exhaustive(&spec, &input, budget)?;
            writeln!(out, "p_acc={}", fmt_rational(&d.p_acc)).unwrap();
            writeln!(out, "p_rej={}", fmt_rational(&d.p_rej)).unwrap();
            writeln!(out, "p_npost={}", fmt_rational(&d.p_npost)).unwrap();
            writeln!(out, "p_nonhalt={}", fmt_rational(&d.p_nonhalt)).unwrap();
            if spec.nonpost.is_some() {
                if let Ok((acc, rej)) = postselect_normalize(&d) {
                    writeln!(out, "post_acc={}", fmt_rational(&acc)).unwrap();
                    writeln!(out, "post_rej={}", fmt_rational(&rej)).unwrap();
                }
            }
        }
        Command::Canonicalize { args, out: dest } => {
            let spec = load(&args.file)?;
            let d = run_exhaustive(&spec, &args.input, args.clock)?;
            let canon = canonicalize(&spec, &args.input, args.clock, args.space)?;
            writeln!(out, "oracle_acc={}", fmt_rational(&d.p_acc)).unwrap();
            emit(&dest, &print_machine_file(&canon), &mut out)?;
        }
        Command::Compile { args, out: dest } => {
            let spec = load(&args.file)?;
            let cs = ConfigSpace::new(&spec, &args.input, args.space)?;
            let mat = cs.build_matrix()?;
            let (a_exact, _) = final_distribution(&mat, args.clock)?;
            let k = compile(&cs, &mat, args.clock)?;
            writeln!(out, "oracle_acc={}", fmt_rational(&a_exact)).unwrap();
            emit(&dest, &k.dump(), &mut out)?;
        }
        Command::Lower { args, out: dest } => {
            let spec = load(&args.file)?;
            let cs = ConfigSpace::new(&spec, &args.input, args.space)?;
            let mat = cs.build_matrix()?;
            let (a_exact, _) = final_distribution(&mat, args.clock)?;
            let k = lower(&compile(&cs, &mat, args.clock)?)?;
            writeln!(out, "oracle_acc={}", fmt_rational(&a_exact)).unwrap();
            emit(&dest, &k.dump(), &mut out)?;
        }
        Command::Simulate { args, lowered } => {
            let spec = load(&args.file)?;
            let cs = ConfigSpace::new(&spec, &args.input, args.space)?;
            let mat = cs.build_matrix()?;
            let (a_exact, _) = final_distribution(&mat, args.clock)?;
            let mut k = compile(&cs, &mat, args.clock)?;
            if lowered {
                k = lower(&k)?;
            }
            let dist = simulate(&k);
            let p_accept = wire_marginal(&dist, 0);
            writeln!(out, "width={}", k.width).unwrap();
            writeln!(out, "gates={}", k.gates.len()).unwrap();
            writeln!(out, "lowered={lowered}").unwrap();
            writeln!(out, "p_accept={}", fmt_rational(&p_accept)).unwrap();
            writeln!(out, "oracle_acc={}", fmt_rational(&a_exact)).unwrap();
            writeln!(out, "agree={}", p_accept == a_exact).unwrap();
        }
        Command::QuantumRun { args } => {
            let spec = load(&args.file)?;
            let cs = ConfigSpace::new(&spec, &args.input, args.space)?;
            let mat = cs.build_matrix()?;
            let (a_exact, _) = final_distribution(&mat, args.clock)?;
            let k = lower(&compile(&cs, &mat, args.clock)?)?;
            let state = run_postselected_circuit(&k)?;
            writeln!(out, "oracle_acc={}", fmt_rational(&a_exact)).unwrap();
            out.push_str(&state.dump());
        }
        Command::Amplify { args, p } => {
            if p >= args.clock {
                return Err(Error::Usage(format!(
                    "p = {p} is outside 0..{} (the clock)",
                    args.clock
                )));
            }
            let spec = load(&args.file)?;
            let pipe = prepare_pipeline(&spec, &args.input, args.clock, args.space)?;
            let r = run_m_p(&pipe, p)?;
            writeln!(out, "A={}", fmt_rational(&pipe.a_exact)).unwrap();
            writeln!(out, "T={}", pipe.t).unwrap();
            writeln!(out, "p={}", r.p).unwrap();
            writeln!(out, "p_plus={}", fmt_sig(r.p_plus)).unwrap();
            writeln!(out, "p_minus={}", fmt_sig(r.p_minus)).unwrap();
            writeln!(out, "log_survival={}", fmt_sig(r.log_survival)).unwrap();
        }
        Command::Decide { args, sample, seed } => {
            let spec = load(&args.file)?;
            let trace = overall_decide(&spec, &args.input, args.clock, args.space)?;
            writeln!(out, "{}", trace.report_line()).unwrap();
            if let Some(n) = sample {
                // Demonstration only: draw one +/- outcome per run, keep
                // the all-same patterns, discard the rest.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut all_minus = 0u64;
                let mut all_plus = 0u64;
                for _ in 0..n {
                    let minuses = trace
                        .runs
                        .iter()
                        .filter(|r| rng.gen::<f64>() < r.p_minus)
                        .count();
                    if minuses == trace.runs.len() {
                        all_minus += 1;
                    } else if minuses == 0 {
                        all_plus += 1;
                    }
                }
                writeln!(out, "sample_n={n}").unwrap();
                writeln!(out, "sample_seed={seed}").unwrap();
                writeln!(out, "sample_all_minus={all_minus}").unwrap();
                writeln!(out, "sample_all_plus={all_plus}").unwrap();
                writeln!(out, "sample_discarded={}", n - all_minus - all_plus).unwrap();
            }
        }
        Command::VerifyBounds { t_max } => {
            let b = verify_y_bounds(t_max);
            writeln!(out, "y_plus={}", fmt_sig(b.y_plus)).unwrap();
            writeln!(out, "y_prime_minus={}", fmt_sig(b.y_prime_minus)).unwrap();
            writeln!(out, "threshold=7/10").unwrap();
            writeln!(out, "scan_t_max={}", b.scan_t_max).unwrap();
            writeln!(out, "scan_points={}", b.scan_points).unwrap();
            writeln!(out, "all_covered={}", b.all_covered).unwrap();
            writeln!(out, "min_correct_side={}", fmt_rational(&b.min_correct_side)).unwrap();
        }
        Command::Coeq { args } => {
            let spec = load(&args.file)?;
            let o = coeq_recognize(&spec, &args.input, args.clock, args.space)?;
            writeln!(out, "{}", o.report_line()).unwrap();
        }
        Command::Construct(cmd) => execute_construct(cmd, &mut out)?,
        Command::Dump { args } => {
            let spec = load(&args.file)?;
            let cs = ConfigSpace::new(&spec, &args.input, args.space)?;
            let mat = cs.build_matrix()?;
            let (a_exact, _) = final_distribution(&mat, args.clock)?;
            writeln!(out, "oracle_acc={}", fmt_rational(&a_exact)).unwrap();
            writeln!(out, "l={}", cs.l).unwrap();
            writeln!(out, "# configurations").unwrap();
            out.push_str(&cs.dump_table());
            writeln!(out, "# matrix").unwrap();
            out.push_str(&mat.dump());
        }
    }
    Ok(out)
}

fn execute_construct(cmd: ConstructCmd, out: &mut String) -> Result<()> {
    match cmd {
        ConstructCmd::Unbounded { file, out: dest } => {
            let spec = load(&file)?;
            let folded = postselect_to_unbounded(&spec)?;
            emit(&dest, &print_machine_file(&folded), out)?;
        }
        ConstructCmd::Restart { file, input, budget } => {
            let spec = load(&file)?;
            let rm = postselect_to_restart(&spec)?;
            let sem = restart_semantics_exact(&rm, &input, budget)?;
            writeln!(out, "p_acc={}", fmt_rational(&sem.attempt.p_acc)).unwrap();
            writeln!(out, "p_rej={}", fmt_rational(&sem.attempt.p_rej)).unwrap();
            writeln!(out, "p_npost={}", fmt_rational(&sem.attempt.p_npost)).unwrap();
            writeln!(out, "limit_acc={}", fmt_rational(&sem.limit_acc)).unwrap();
            writeln!(out, "expected_steps={}", fmt_rational(&sem.expected_steps)).unwrap();
        }
        ConstructCmd::Join { yes, no, probes, budget, out: dest } => {
            let yes = load(&yes)?;
            let no = load(&no)?;
            let probe_refs: Vec<&str> = probes.iter().map(|s| s.as_str()).collect();
            let joined = combine_ntms_zero_error(&yes, &no, &probe_refs, budget)?;
            emit(&dest, &print_machine_file(&joined), out)?;
        }
        ConstructCmd::ToNtm { file, out: dest } => {
            let spec = load(&file)?;
            let ntm = postptm_to_ntm(&spec)?;
            emit(&dest, &print_machine_file(&ntm), out)?;
        }
    }
    Ok(())
}
