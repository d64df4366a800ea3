//! Canonical form: machines whose every step is a fair coin split over a
//! binary work alphabet and whose every path halts at exactly the clock
//! step, in one of two clean halting configurations (all-blank tape, both
//! heads on cell 0). The compiler consumes only canonical machines.
//!
//! `canonicalize` rebuilds an arbitrary fair-coin machine into this form
//! for a fixed input length by tracking the step count and both head
//! positions in the finite control: after the source machine halts, the
//! rebuilt machine sweeps the work window clean, parks the input head,
//! idles on dummy splits, and commits the verdict exactly at the clock.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::machine::{
    apply_rule, rat, read_input_symbol, run_exhaustive, run_exhaustive_record, MachineKind,
    MachineSpec, OracleConfig, Rule, RunLimits, BLANK,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CanonicalViolation {
    NonBinaryWorkAlphabet(String),
    NonSplittingStep(String),
    DirtyTapeHalt(String),
    MultipleHaltingConfigs(String),
    WrongHaltingTime(String),
}

impl fmt::Display for CanonicalViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonicalViolation::NonBinaryWorkAlphabet(d) => {
                write!(f, "non-binary work alphabet: {d}")
            }
            CanonicalViolation::NonSplittingStep(d) => write!(f, "non-splitting step: {d}"),
            CanonicalViolation::DirtyTapeHalt(d) => write!(f, "dirty-tape halt: {d}"),
            CanonicalViolation::MultipleHaltingConfigs(d) => {
                write!(f, "multiple halting configurations: {d}")
            }
            CanonicalViolation::WrongHaltingTime(d) => write!(f, "wrong halting time: {d}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CanonicalReport {
    pub violations: Vec<CanonicalViolation>,
}

impl CanonicalReport {
    pub fn is_canonical(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Symbol projection used throughout the canonical pipeline: a blank work
/// cell is indistinguishable from a written 0.
pub(crate) fn project_blank(c: char) -> char {
    if c == BLANK {
        '0'
    } else {
        c
    }
}

fn rules_match_under_projection(a: &[Rule], b: &[Rule]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.state == y.state
                && project_blank(x.write) == project_blank(y.write)
                && x.d_in == y.d_in
                && x.d_wk == y.d_wk
                && x.prob == y.prob
        })
}

fn describe_config(spec: &MachineSpec, cfg: &OracleConfig) -> String {
    let cells: Vec<String> = cfg.work.iter().map(|(i, c)| format!("{i}:{c}")).collect();
    format!(
        "state {} h_in {} h_wk {} tape [{}]",
        spec.state_name(cfg.state),
        cfg.h_in,
        cfg.h_wk,
        cells.join(" ")
    )
}

/// Walks all paths of `spec` on `input` to depth `clock` and reports every
/// way the machine fails to be canonical at that clock. A clean report
/// means: every reachable step splits into exactly two probability-1/2
/// branches, the work alphabet is binary with blank acting as 0, and every
/// path halts at exactly step `clock` in a single clean accepting or a
/// single clean rejecting configuration.
pub fn check_canonical(spec: &MachineSpec, input: &str, clock: usize) -> Result<CanonicalReport> {
    if !matches!(spec.kind, MachineKind::Ptm | MachineKind::Dtm) {
        return Err(Error::NotCanonical(format!(
            "kind {} is outside the fair-coin family",
            spec.kind.as_str()
        )));
    }
    spec.require_well_formed()?;
    let mut violations = Vec::new();

    for &c in &spec.work_alphabet {
        if c != '0' && c != '1' {
            violations.push(CanonicalViolation::NonBinaryWorkAlphabet(format!(
                "work symbol {c}"
            )));
        }
    }
    if spec.work_alphabet.contains(&'0') {
        for s in 0..spec.states.len() {
            if spec.is_halting(s) {
                continue;
            }
            for &sigma in &spec.input_symbols() {
                let blank_rules = spec.delta.get(&(s, sigma, BLANK));
                let zero_rules = spec.delta.get(&(s, sigma, '0'));
                let ok = match (blank_rules, zero_rules) {
                    (Some(a), Some(b)) => rules_match_under_projection(a, b),
                    (None, None) => true,
                    _ => false,
                };
                if !ok {
                    violations.push(CanonicalViolation::NonBinaryWorkAlphabet(format!(
                        "blank and 0 behave differently at ({}, {})",
                        spec.state_name(s),
                        sigma
                    )));
                }
            }
        }
    }

    let input_chars: Vec<char> = input.chars().collect();
    let limits = RunLimits::new(clock);
    let mut frontier: BTreeSet<OracleConfig> = BTreeSet::new();
    let start = OracleConfig::initial(spec);
    if spec.is_halting(start.state) {
        violations.push(CanonicalViolation::WrongHaltingTime(
            "initial state already halts".to_string(),
        ));
    } else {
        frontier.insert(start);
    }

    let mut flagged_triples: BTreeSet<(usize, char, char)> = BTreeSet::new();
    let mut flagged_steps: BTreeSet<usize> = BTreeSet::new();
    let mut accept_configs: BTreeSet<OracleConfig> = BTreeSet::new();
    let mut reject_configs: BTreeSet<OracleConfig> = BTreeSet::new();

    for step in 1..=clock {
        let mut next: BTreeSet<OracleConfig> = BTreeSet::new();
        for cfg in &frontier {
            let sigma = read_input_symbol(&input_chars, cfg.h_in);
            let gamma = cfg.read_work();
            let rules = spec
                .delta
                .get(&(cfg.state, sigma, gamma))
                .ok_or_else(|| Error::NotWellFormed(format!("no rules at state {}", cfg.state)))?;
            let splits = rules.len() == 2 && rules.iter().all(|r| r.prob == rat(1, 2));
            if !splits && flagged_triples.insert((cfg.state, sigma, gamma)) {
                violations.push(CanonicalViolation::NonSplittingStep(format!(
                    "({}, {}, {}) has {} branch(es) instead of two 1/2 branches",
                    spec.state_name(cfg.state),
                    sigma,
                    gamma,
                    rules.len()
                )));
            }
            for rule in rules {
                if rule.prob.is_zero() {
                    continue;
                }
                let succ = apply_rule(cfg, rule, input_chars.len(), &limits, || {
                    describe_config(spec, cfg)
                })?;
                if spec.is_halting(succ.state) {
                    if step != clock && flagged_steps.insert(step) {
                        violations.push(CanonicalViolation::WrongHaltingTime(format!(
                            "a path halts at step {step} != clock {clock}"
                        )));
                    }
                    let clean = succ.work.is_empty() && succ.h_in == 0 && succ.h_wk == 0;
                    if !clean {
                        violations.push(CanonicalViolation::DirtyTapeHalt(describe_config(
                            spec, &succ,
                        )));
                    }
                    if succ.state == spec.accept {
                        accept_configs.insert(succ);
                    } else {
                        reject_configs.insert(succ);
                    }
                } else {
                    next.insert(succ);
                }
            }
        }
        frontier = next;
    }

    if !frontier.is_empty() {
        violations.push(CanonicalViolation::WrongHaltingTime(format!(
            "{} configuration(s) still running after step {clock}",
            frontier.len()
        )));
    }
    if accept_configs.len() > 1 {
        violations.push(CanonicalViolation::MultipleHaltingConfigs(format!(
            "{} distinct accepting configurations",
            accept_configs.len()
        )));
    }
    if reject_configs.len() > 1 {
        violations.push(CanonicalViolation::MultipleHaltingConfigs(format!(
            "{} distinct rejecting configurations",
            reject_configs.len()
        )));
    }

    Ok(CanonicalReport { violations })
}

/// Product state of the canonicalizing construction. `c` counts executed
/// steps; `hi` and `hw` shadow the head positions so the cleanup phases
/// know exactly where the heads are without sensing the tape.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum PState {
    Sim { q: usize, c: usize, hi: usize, hw: usize },
    SweepR { acc: bool, c: usize, hi: usize, hw: usize },
    SweepL { acc: bool, c: usize, hi: usize, hw: usize },
    Park { acc: bool, c: usize, hi: usize },
    Wait { acc: bool, c: usize },
    Trap,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum PTarget {
    Go(PState),
    Accept,
    Reject,
}

/// One product branch: target, written work symbol, head moves.
type PBranch = (PTarget, char, i8, i8);

fn pname(spec: &MachineSpec, ps: &PState) -> String {
    match ps {
        PState::Sim { q, c, hi, hw } => format!("sim_{}_{c}_{hi}_{hw}", spec.state_name(*q)),
        PState::SweepR { acc, c, hi, hw } => {
            format!("swr_{}_{c}_{hi}_{hw}", if *acc { "a" } else { "r" })
        }
        PState::SweepL { acc, c, hi, hw } => {
            format!("swl_{}_{c}_{hi}_{hw}", if *acc { "a" } else { "r" })
        }
        PState::Park { acc, c, hi } => format!("park_{}_{c}_{hi}", if *acc { "a" } else { "r" }),
        PState::Wait { acc, c } => format!("wait_{}_{c}", if *acc { "a" } else { "r" }),
        PState::Trap => "trap".to_string(),
    }
}

struct ProductBuilder<'a> {
    spec: &'a MachineSpec,
    n: usize,
    clock: usize,
    space: usize,
    built_trap: bool,
}

impl ProductBuilder<'_> {
    /// Entry into cleanup right after the source machine halted: sweep the
    /// work window, then park the input head, then wait out the clock.
    fn cleanup_entry(&mut self, acc: bool, c: usize, hi: usize, hw: usize) -> PState {
        if c > self.clock - 1 {
            self.built_trap = true;
            return PState::Trap;
        }
        PState::SweepR { acc, c, hi, hw }
    }

    fn after_sweep(&mut self, acc: bool, c: usize, hi: usize) -> PState {
        if c > self.clock - 1 {
            self.built_trap = true;
            return PState::Trap;
        }
        if hi > 0 {
            PState::Park { acc, c, hi }
        } else {
            PState::Wait { acc, c }
        }
    }

    fn guarded(&mut self, ps: PState) -> PState {
        let c = match &ps {
            PState::Sim { c, .. }
            | PState::SweepR { c, .. }
            | PState::SweepL { c, .. }
            | PState::Park { c, .. }
            | PState::Wait { c, .. } => *c,
            PState::Trap => return ps,
        };
        if c > self.clock - 1 {
            self.built_trap = true;
            PState::Trap
        } else {
            ps
        }
    }

    /// The two coin branches of the product machine at (`ps`, sigma, gamma).
    fn branches(&mut self, ps: &PState, sigma: char, gamma: char) -> Result<Vec<PBranch>> {
        let spec = self.spec;
        match ps {
            PState::Sim { q, c, hi, hw } => {
                let rules = spec.delta.get(&(*q, sigma, gamma)).ok_or_else(|| {
                    Error::Canonicalize(format!(
                        "missing rules at ({}, {}, {})",
                        spec.state_name(*q),
                        sigma,
                        gamma
                    ))
                })?;
                let pair: Vec<&Rule> = match rules.len() {
                    1 => vec![&rules[0], &rules[0]],
                    2 => rules.iter().collect(),
                    k => {
                        return Err(Error::Canonicalize(format!(
                            "{k} branches at ({}, {}, {}); need fair-coin rules",
                            spec.state_name(*q),
                            sigma,
                            gamma
                        )))
                    }
                };
                let mut out = Vec::with_capacity(2);
                for rule in pair {
                    let hi2 = *hi as i64 + rule.d_in as i64;
                    let hw2 = *hw as i64 + rule.d_wk as i64;
                    let in_bounds = (0..=self.n as i64 + 1).contains(&hi2)
                        && (0..self.space as i64).contains(&hw2);
                    if !in_bounds {
                        self.built_trap = true;
                        out.push((PTarget::Go(PState::Trap), BLANK, 0, 0));
                        continue;
                    }
                    let (hi2, hw2) = (hi2 as usize, hw2 as usize);
                    let target = if spec.is_halting(rule.state) {
                        let acc = rule.state == spec.accept;
                        PTarget::Go(self.cleanup_entry(acc, c + 1, hi2, hw2))
                    } else {
                        PTarget::Go(self.guarded(PState::Sim { q: rule.state, c: c + 1, hi: hi2, hw: hw2 }))
                    };
                    out.push((target, rule.write, rule.d_in, rule.d_wk));
                }
                Ok(out)
            }
            PState::SweepR { acc, c, hi, hw } => {
                let b: PBranch = if *hw < self.space - 1 {
                    let t = self.guarded(PState::SweepR { acc: *acc, c: c + 1, hi: *hi, hw: hw + 1 });
                    (PTarget::Go(t), BLANK, 0, 1)
                } else if self.space > 1 {
                    let t = self.guarded(PState::SweepL {
                        acc: *acc,
                        c: c + 1,
                        hi: *hi,
                        hw: self.space - 2,
                    });
                    (PTarget::Go(t), BLANK, 0, -1)
                } else {
                    let t = self.after_sweep(*acc, c + 1, *hi);
                    (PTarget::Go(t), BLANK, 0, 0)
                };
                Ok(vec![b.clone(), b])
            }
            PState::SweepL { acc, c, hi, hw } => {
                let b: PBranch = if *hw > 0 {
                    let t = self.guarded(PState::SweepL { acc: *acc, c: c + 1, hi: *hi, hw: hw - 1 });
                    (PTarget::Go(t), BLANK, 0, -1)
                } else {
                    let t = self.after_sweep(*acc, c + 1, *hi);
                    (PTarget::Go(t), BLANK, 0, 0)
                };
                Ok(vec![b.clone(), b])
            }
            PState::Park { acc, c, hi } => {
                let b: PBranch = if *hi > 1 {
                    let t = self.guarded(PState::Park { acc: *acc, c: c + 1, hi: hi - 1 });
                    (PTarget::Go(t), BLANK, -1, 0)
                } else {
                    let t = self.guarded(PState::Wait { acc: *acc, c: c + 1 });
                    (PTarget::Go(t), BLANK, -1, 0)
                };
                Ok(vec![b.clone(), b])
            }
            PState::Wait { acc, c } => {
                let b: PBranch = if *c < self.clock - 1 {
                    let t = self.guarded(PState::Wait { acc: *acc, c: c + 1 });
                    (PTarget::Go(t), BLANK, 0, 0)
                } else if *acc {
                    (PTarget::Accept, BLANK, 0, 0)
                } else {
                    (PTarget::Reject, BLANK, 0, 0)
                };
                Ok(vec![b.clone(), b])
            }
            PState::Trap => {
                let b: PBranch = (PTarget::Go(PState::Trap), BLANK, 0, 0);
                Ok(vec![b.clone(), b])
            }
        }
    }
}

/// Rebuilds a fair-coin machine into canonical form at the given clock for
/// inputs of the probed length. The result is verified before it is
/// returned: its outcome distribution on `input` must match the source
/// exactly and it must pass `check_canonical` at `clock`.
pub fn canonicalize(
    spec: &MachineSpec,
    input: &str,
    clock: usize,
    space_bound: usize,
) -> Result<MachineSpec> {
    if !matches!(spec.kind, MachineKind::Ptm | MachineKind::Dtm) {
        return Err(Error::Canonicalize(format!(
            "kind {} is outside the fair-coin family",
            spec.kind.as_str()
        )));
    }
    spec.require_well_formed()?;
    if clock == 0 || space_bound == 0 {
        return Err(Error::Canonicalize("clock and space bound must be positive".into()));
    }
    for &c in &spec.work_alphabet {
        if c != '0' && c != '1' {
            return Err(Error::Canonicalize(format!(
                "work alphabet symbol {c} is not binary; re-encode the machine first"
            )));
        }
    }
    if spec.work_alphabet.contains(&'0') {
        for s in 0..spec.states.len() {
            if spec.is_halting(s) {
                continue;
            }
            for &sigma in &spec.input_symbols() {
                let a = spec.delta.get(&(s, sigma, BLANK));
                let b = spec.delta.get(&(s, sigma, '0'));
                let ok = match (a, b) {
                    (Some(a), Some(b)) => rules_match_under_projection(a, b),
                    (None, None) => true,
                    _ => false,
                };
                if !ok {
                    return Err(Error::Canonicalize(format!(
                        "blank and 0 behave differently at ({}, {}); \
                         the configuration register cannot tell them apart",
                        spec.state_name(s),
                        sigma
                    )));
                }
            }
        }
    }

    let n = input.chars().count();
    let orig = run_exhaustive_record(spec, input, &RunLimits::new(clock))?;
    if !orig.outcome.p_nonhalt.is_zero() {
        return Err(Error::Canonicalize(format!(
            "source machine does not halt within {clock} steps on {input:?} \
             (mass {} still running); cannot clock down",
            orig.outcome.p_nonhalt
        )));
    }

    let mut builder = ProductBuilder { spec, n, clock, space: space_bound, built_trap: false };
    let start = if spec.is_halting(spec.initial) {
        builder.cleanup_entry(spec.initial == spec.accept, 0, 0, 0)
    } else {
        PState::Sim { q: spec.initial, c: 0, hi: 0, hw: 0 }
    };

    let sigmas = spec.input_symbols();
    let gammas = spec.work_symbols();
    let mut order: Vec<PState> = Vec::new();
    let mut seen: BTreeSet<PState> = BTreeSet::new();
    let mut queue: VecDeque<PState> = VecDeque::new();
    let mut rules: BTreeMap<(PState, char, char), Vec<PBranch>> = BTreeMap::new();
    seen.insert(start.clone());
    order.push(start.clone());
    queue.push_back(start.clone());
    while let Some(ps) = queue.pop_front() {
        for &sigma in &sigmas {
            for &gamma in &gammas {
                let branches = builder.branches(&ps, sigma, gamma)?;
                for (target, _, _, _) in &branches {
                    if let PTarget::Go(t) = target {
                        if seen.insert(t.clone()) {
                            order.push(t.clone());
                            queue.push_back(t.clone());
                        }
                    }
                }
                rules.insert((ps.clone(), sigma, gamma), branches);
            }
        }
    }

    let mut state_names: Vec<String> = order.iter().map(|ps| pname(spec, ps)).collect();
    state_names.push("acc".to_string());
    state_names.push("rej".to_string());
    let name_refs: Vec<&str> = state_names.iter().map(|s| s.as_str()).collect();
    let initial_name = pname(spec, &start);
    let mut out = MachineSpec::new(
        MachineKind::Ptm,
        &name_refs,
        &initial_name,
        "acc",
        "rej",
        None,
        &spec.input_alphabet,
        &spec.work_alphabet,
    );
    for ((ps, sigma, gamma), branches) in &rules {
        let from = pname(spec, ps);
        for (target, write, d_in, d_wk) in branches {
            let to = match target {
                PTarget::Go(t) => pname(spec, t),
                PTarget::Accept => "acc".to_string(),
                PTarget::Reject => "rej".to_string(),
            };
            out.add_rule(&from, *sigma, *gamma, &to, *write, *d_in, *d_wk, rat(1, 2));
        }
    }

    let findings = out.validate_well_formed();
    if !findings.is_empty() {
        return Err(Error::Canonicalize(format!(
            "rebuilt machine is not well-formed: {}",
            findings.join("; ")
        )));
    }
    let rebuilt = run_exhaustive(&out, input, clock)?;
    let agrees = rebuilt.p_acc == orig.outcome.p_acc
        && rebuilt.p_rej == orig.outcome.p_rej
        && rebuilt.p_nonhalt.is_zero();
    if !agrees {
        let hint = if builder.built_trap {
            "; the source machine may need a larger clock for cleanup, exceed the \
             space bound, or move a head out of range"
        } else {
            ""
        };
        return Err(Error::Canonicalize(format!(
            "verification failed on {input:?}: source (acc {}, rej {}) vs rebuilt \
             (acc {}, rej {}, running {}){hint}",
            orig.outcome.p_acc, orig.outcome.p_rej, rebuilt.p_acc, rebuilt.p_rej, rebuilt.p_nonhalt
        )));
    }
    let report = check_canonical(&out, input, clock)?;
    if !report.is_canonical() {
        return Err(Error::Canonicalize(format!(
            "rebuilt machine is not canonical: {}",
            report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::machine::run_exhaustive;

    #[test]
    fn d1_is_canonical_at_its_clock() {
        let rep = check_canonical(&corpus::d1(), "a", 2).unwrap();
        assert!(rep.is_canonical(), "{:?}", rep.violations);
    }

    #[test]
    fn d1_at_wrong_clock_reports_halting_time() {
        let rep = check_canonical(&corpus::d1(), "a", 3).unwrap();
        assert!(
            rep.violations
                .iter()
                .any(|v| matches!(v, CanonicalViolation::WrongHaltingTime(_))),
            "{:?}",
            rep.violations
        );
    }

    #[test]
    fn det_acc_reports_non_splitting_step() {
        let rep = check_canonical(&corpus::det_acc(), "a", 1).unwrap();
        assert!(
            rep.violations
                .iter()
                .any(|v| matches!(v, CanonicalViolation::NonSplittingStep(_))),
            "{:?}",
            rep.violations
        );
    }

    #[test]
    fn dirty_halt_is_reported() {
        let rep = check_canonical(&corpus::messy(), "a", 1).unwrap();
        assert!(
            rep.violations
                .iter()
                .any(|v| matches!(v, CanonicalViolation::DirtyTapeHalt(_))),
            "{:?}",
            rep.violations
        );
    }

    #[test]
    fn ternary_work_alphabet_is_flagged() {
        let mut m = corpus::det_acc();
        m.work_alphabet.push('x');
        // Keep it well-formed: cover the new symbol on the lone live state.
        m.add_det("s0", 'a', 'x', "acc", BLANK, 0, 0);
        m.add_det("s0", BLANK, 'x', "acc", BLANK, 0, 0);
        let rep = check_canonical(&m, "a", 1).unwrap();
        assert!(
            rep.violations
                .iter()
                .any(|v| matches!(v, CanonicalViolation::NonBinaryWorkAlphabet(_))),
            "{:?}",
            rep.violations
        );
    }

    #[test]
    fn canonicalized_det_acc_hits_the_clock_exactly() {
        let c = canonicalize(&corpus::det_acc(), "a", 4, 1).unwrap();
        let rep = check_canonical(&c, "a", 4).unwrap();
        assert!(rep.is_canonical(), "{:?}", rep.violations);
        let d = run_exhaustive(&c, "a", 4).unwrap();
        assert_eq!(d.p_acc, rat(1, 1));
    }

    #[test]
    fn canonicalize_preserves_the_outcome_distribution() {
        for (spec, input, clock) in [
            (corpus::messy(), "a", 4),
            (corpus::stepper(), "a", 5),
            (corpus::stepper(), "b", 5),
            (corpus::coin_once(), "a", 3),
        ] {
            let before = run_exhaustive(&spec, input, clock).unwrap();
            let canon = canonicalize(&spec, input, clock, 1).unwrap();
            let after = run_exhaustive(&canon, input, clock).unwrap();
            assert_eq!(before.p_acc, after.p_acc, "{input} acceptance drifted");
            assert_eq!(before.p_rej, after.p_rej, "{input} rejection drifted");
            assert!(check_canonical(&canon, input, clock).unwrap().is_canonical());
        }
    }

    #[test]
    fn too_small_clock_is_rejected() {
        // stepper needs 2 sim steps + sweep + park + final commit.
        let err = canonicalize(&corpus::stepper(), "a", 3, 1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cannot") || msg.contains("clock"), "{msg}");
    }

    #[test]
    fn nonhalting_source_is_rejected() {
        let err = canonicalize(&corpus::loop_forever(), "a", 4, 1).unwrap_err();
        assert!(err.to_string().contains("cannot clock down"), "{err}");
    }
}
