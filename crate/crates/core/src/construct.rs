//! Conversions between the machine families: folding a postselecting
//! machine's abandon state into a fair coin (unbounded-error form),
//! reinterpreting abandonment as a restart with exact limiting semantics,
//! and translating between zero-error postselection and nondeterministic
//! acceptance-support. Every constructor validates its output and the
//! conversions preserve the quantities they advertise exactly.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::machine::{
    rat, run_exhaustive, run_exhaustive_record, MachineKind, MachineSpec, OutcomeDistribution,
    Rule, RunLimits,
};

/// A state name based on `base` that does not collide with `taken`.
fn fresh_name(base: &str, taken: &[String]) -> String {
    if !taken.iter().any(|s| s == base) {
        return base.to_string();
    }
    let mut i = 2usize;
    loop {
        let candidate = format!("{base}{i}");
        if !taken.iter().any(|s| *s == candidate) {
            return candidate;
        }
        i += 1;
    }
}

fn require_valid(spec: MachineSpec, what: &str) -> Result<MachineSpec> {
    let findings = spec.validate_well_formed();
    if findings.is_empty() {
        Ok(spec)
    } else {
        Err(Error::Construct(format!(
            "{what} produced an ill-formed machine: {}",
            findings.join("; ")
        )))
    }
}

/// Folds the abandon state of a postselecting machine into an unbiased
/// coin flip between accept and reject. The result halts exactly when the
/// source halts (counting abandonment as halting), and its acceptance
/// minus rejection balance equals the source's on every input: abandoned
/// mass lands half on each side, so the difference is untouched. The
/// output is a plain probabilistic machine when every branch probability
/// is 1/2 or 1, and a nondeterministic one otherwise. A machine with no
/// abandon state has nothing to fold and passes through unchanged.
pub fn postselect_to_unbounded(spec: &MachineSpec) -> Result<MachineSpec> {
    let Some(np) = spec.nonpost else {
        return Ok(spec.clone());
    };

    // Old index -> new index, skipping the abandon state.
    let mut map = vec![usize::MAX; spec.states.len()];
    let mut states = Vec::with_capacity(spec.states.len());
    for (s, name) in spec.states.iter().enumerate() {
        if s == np {
            continue;
        }
        map[s] = states.len();
        states.push(name.clone());
    }
    let flip_name = fresh_name("flip", &states);
    let flip = states.len();
    states.push(flip_name);

    let dyadic_only = spec
        .delta
        .values()
        .flatten()
        .all(|r| r.prob == rat(1, 2) || r.prob.is_one());
    let kind = if dyadic_only {
        MachineKind::Ptm
    } else {
        MachineKind::Ntm
    };

    let mut out = MachineSpec {
        kind,
        initial: map[spec.initial],
        accept: map[spec.accept],
        reject: map[spec.reject],
        nonpost: None,
        states,
        input_alphabet: spec.input_alphabet.clone(),
        work_alphabet: spec.work_alphabet.clone(),
        delta: Default::default(),
    };

    for (&(s, sigma, gamma), rules) in &spec.delta {
        if s == np {
            continue;
        }
        let mapped = rules
            .iter()
            .map(|r| Rule {
                state: if r.state == np { flip } else { map[r.state] },
                write: r.write,
                d_in: r.d_in,
                d_wk: r.d_wk,
                prob: r.prob.clone(),
            })
            .collect();
        out.delta.insert((map[s], sigma, gamma), mapped);
    }

    // The flip state resolves in one step without touching either tape.
    for &sigma in &spec.input_symbols() {
        for &gamma in &spec.work_symbols() {
            let branch = |state: usize| Rule {
                state,
                write: gamma,
                d_in: 0,
                d_wk: 0,
                prob: rat(1, 2),
            };
            out.delta
                .insert((flip, sigma, gamma), vec![branch(out.accept), branch(out.reject)]);
        }
    }

    require_valid(out, "abandon-state fold")
}

/// A postselecting machine reinterpreted so that reaching the abandon
/// state restarts the run from the initial configuration instead of
/// discarding it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestartMachine {
    pub base: MachineSpec,
}

pub fn postselect_to_restart(spec: &MachineSpec) -> Result<RestartMachine> {
    if spec.kind != MachineKind::PostPtm || spec.nonpost.is_none() {
        return Err(Error::Construct(
            "only a postselecting machine can be read as restarting".to_string(),
        ));
    }
    Ok(RestartMachine { base: spec.clone() })
}

/// Exact limiting behaviour of a restarting machine on one input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestartSemantics {
    /// Halting outcome of a single attempt of the base machine.
    pub attempt: OutcomeDistribution,
    /// Probability that the eventually-halting run accepts.
    pub limit_acc: BigRational,
    /// Expected number of base-machine steps until some attempt halts.
    pub expected_steps: BigRational,
}

/// Computes the limit acceptance probability and expected running time of
/// a restarting machine by the renewal argument: attempts are independent
/// and identically distributed, an attempt halts (rather than restarting)
/// with mass `h = p_acc + p_rej`, so the limit conditions a single attempt
/// on halting and the expected total step count is the per-attempt mean
/// length divided by `h`. Requires every path of one attempt to resolve
/// within `step_budget` steps; unresolved mass is an error, not an
/// approximation.
pub fn restart_semantics_exact(
    rm: &RestartMachine,
    input: &str,
    step_budget: usize,
) -> Result<RestartSemantics> {
    let record = run_exhaustive_record(&rm.base, input, &RunLimits::new(step_budget))?;
    let d = record.outcome.clone();
    if !d.p_nonhalt.is_zero() {
        return Err(Error::NonHaltingMass(d.p_nonhalt.to_string()));
    }
    let h = &d.p_acc + &d.p_rej;
    if h.is_zero() {
        return Err(Error::NoHaltingMass);
    }
    let limit_acc = &d.p_acc / &h;
    let mut mean_len = BigRational::zero();
    for (step, acc, rej, npost) in &record.halts_by_step {
        mean_len += BigRational::from_integer((*step).into()) * (acc + rej + npost);
    }
    let expected_steps = mean_len / h;
    Ok(RestartSemantics {
        attempt: d,
        limit_acc,
        expected_steps,
    })
}

/// Joins two nondeterministic machines with complementary acceptance
/// support into one zero-error postselecting machine: a fresh start state
/// flips a fair coin and runs one machine or the other; acceptance by the
/// first becomes acceptance, acceptance by the second becomes rejection,
/// and rejection by either abandons the run. Conditioned on not
/// abandoning, the result is always right: on inputs only `yes` can
/// accept, every surviving path accepts, and symmetrically for `no`.
///
/// The complementary-support promise is not decidable from the transition
/// tables, so it is spot-checked: for every probe input, exactly one of
/// the two machines must have positive acceptance mass within
/// `step_budget` steps.
pub fn combine_ntms_zero_error(
    yes: &MachineSpec,
    no: &MachineSpec,
    probe_inputs: &[&str],
    step_budget: usize,
) -> Result<MachineSpec> {
    if yes.kind != MachineKind::Ntm || no.kind != MachineKind::Ntm {
        return Err(Error::Construct(
            "both join operands must be nondeterministic machines".to_string(),
        ));
    }
    if yes.input_alphabet != no.input_alphabet {
        return Err(Error::Construct(
            "join operands read different input alphabets".to_string(),
        ));
    }
    for input in probe_inputs {
        let a = run_exhaustive(yes, input, step_budget)?;
        let b = run_exhaustive(no, input, step_budget)?;
        if a.p_acc.is_zero() == b.p_acc.is_zero() {
            return Err(Error::Construct(format!(
                "operands do not have complementary acceptance support on probe {input:?}"
            )));
        }
    }

    let mut states = vec![
        "st".to_string(),
        "acc".to_string(),
        "rej".to_string(),
        "np".to_string(),
    ];
    // Non-halting states of each operand, prefixed; halting targets remap
    // onto the fresh quartet. Accepting in `yes` accepts, accepting in
    // `no` rejects, rejecting in either abandons.
    let import =
        |m: &MachineSpec, prefix: &str, accept_to: usize, states: &mut Vec<String>| -> Vec<usize> {
            let mut map = vec![usize::MAX; m.states.len()];
            map[m.accept] = accept_to;
            map[m.reject] = 3;
            for (s, name) in m.states.iter().enumerate() {
                if m.is_halting(s) {
                    continue;
                }
                map[s] = states.len();
                states.push(format!("{prefix}{name}"));
            }
            map
        };
    let ymap = import(yes, "y_", 1, &mut states);
    let nmap = import(no, "n_", 2, &mut states);

    let mut work_alphabet = yes.work_alphabet.clone();
    for &g in &no.work_alphabet {
        if !work_alphabet.contains(&g) {
            work_alphabet.push(g);
        }
    }
    work_alphabet.sort_unstable();

    let mut out = MachineSpec {
        kind: MachineKind::PostPtm,
        initial: 0,
        accept: 1,
        reject: 2,
        nonpost: Some(3),
        states,
        input_alphabet: yes.input_alphabet.clone(),
        work_alphabet,
        delta: Default::default(),
    };

    let copy_rules = |out: &mut MachineSpec, m: &MachineSpec, map: &[usize]| {
        for (&(s, sigma, gamma), rules) in &m.delta {
            if m.is_halting(s) {
                continue;
            }
            let mapped = rules
                .iter()
                .map(|r| Rule {
                    state: map[r.state],
                    write: r.write,
                    d_in: r.d_in,
                    d_wk: r.d_wk,
                    prob: r.prob.clone(),
                })
                .collect();
            out.delta.insert((map[s], sigma, gamma), mapped);
        }
    };
    copy_rules(&mut out, yes, &ymap);
    copy_rules(&mut out, no, &nmap);

    // The coin flip spends one step and leaves both tapes untouched, so
    // each operand runs exactly as it would alone.
    for &sigma in &out.input_symbols() {
        for &gamma in &out.work_symbols() {
            let branch = |state: usize| Rule {
                state,
                write: gamma,
                d_in: 0,
                d_wk: 0,
                prob: rat(1, 2),
            };
            out.delta.insert(
                (0, sigma, gamma),
                vec![branch(ymap[yes.initial]), branch(nmap[no.initial])],
            );
        }
    }

    require_valid(out, "zero-error join")
}

/// Rereads a postselecting machine as a nondeterministic one by sending
/// abandoned runs to rejection. Accepting paths are untouched, so the
/// result has positive acceptance mass exactly where the source does.
pub fn postptm_to_ntm(spec: &MachineSpec) -> Result<MachineSpec> {
    let Some(np) = spec.nonpost else {
        return Err(Error::Construct(
            "machine has no abandon state to reread as rejection".to_string(),
        ));
    };

    let mut map = vec![usize::MAX; spec.states.len()];
    let mut states = Vec::with_capacity(spec.states.len());
    for (s, name) in spec.states.iter().enumerate() {
        if s == np {
            continue;
        }
        map[s] = states.len();
        states.push(name.clone());
    }

    let mut out = MachineSpec {
        kind: MachineKind::Ntm,
        initial: map[spec.initial],
        accept: map[spec.accept],
        reject: map[spec.reject],
        nonpost: None,
        states,
        input_alphabet: spec.input_alphabet.clone(),
        work_alphabet: spec.work_alphabet.clone(),
        delta: Default::default(),
    };
    for (&(s, sigma, gamma), rules) in &spec.delta {
        if s == np {
            continue;
        }
        let mapped = rules
            .iter()
            .map(|r| Rule {
                state: if r.state == np { out.reject } else { map[r.state] },
                write: r.write,
                d_in: r.d_in,
                d_wk: r.d_wk,
                prob: r.prob.clone(),
            })
            .collect();
        out.delta.insert((map[s], sigma, gamma), mapped);
    }

    require_valid(out, "abandon-to-reject reread")
}
